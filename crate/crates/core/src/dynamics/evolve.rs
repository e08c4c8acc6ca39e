use rayon::prelude::*;

use crate::error::{invalid, Error, Result};
use crate::gibbs::StateSpace;

use super::RateSpec;

/// Largest volume `evolve_exact` accepts by default (4096 states).
pub const DEFAULT_EVOLVE_CAP: usize = 12;

/// Poisson mass discarded by uniformization.
pub const POISSON_TAIL: f64 = 1e-13;

/// Largest `q·dt` per uniformization chunk, keeping `e^{-q·dt}` well above underflow.
const MAX_CHUNK: f64 = 500.0;

const PARALLEL_STATES: usize = 1 << 12;

/// The jump generator of a spin-flip process on one volume, stored as a
/// dense `states × sites` table of flip rates.
#[derive(Clone, Debug)]
pub struct Generator {
    space: StateSpace,
    rates: Vec<f64>,
    exit: Vec<f64>,
    q: f64,
}

impl Generator {
    pub fn new(rates: &RateSpec, cap: usize) -> Result<Self> {
        let space = StateSpace::new(rates.base().clone(), rates.volume());
        space.check_cap(cap, "use gillespie_simulate for larger volumes")?;
        let n = space.volume_size();
        let table: Vec<Vec<f64>> = (0..space.n_states())
            .into_par_iter()
            .map(|s| {
                let mut spins = space.base().spins().to_vec();
                space.write_state(s, &mut spins);
                space
                    .sites()
                    .iter()
                    .map(|&x| rates.rate(&spins, x))
                    .collect()
            })
            .collect();
        let mut flat = Vec::with_capacity(space.n_states() * n);
        for row in &table {
            flat.extend_from_slice(row);
        }
        let exit: Vec<f64> = table.iter().map(|r| r.iter().sum()).collect();
        let q = exit.iter().cloned().fold(0.0, f64::max);
        Ok(Generator {
            space,
            rates: flat,
            exit,
            q,
        })
    }

    pub fn space(&self) -> &StateSpace {
        &self.space
    }

    /// Rate of flipping volume position `pos` from `state`.
    pub fn rate(&self, state: usize, pos: usize) -> f64 {
        self.rates[state * self.space.volume_size() + pos]
    }

    /// Largest total exit rate, the uniformization constant.
    pub fn uniformization_rate(&self) -> f64 {
        self.q
    }

    /// `ν ↦ ν e^{tL}` for a law on the volume.
    pub fn evolve_law(&self, law: &[f64], t: f64) -> Result<Vec<f64>> {
        self.check(law, t)?;
        Ok(self.uniformize(law, t, |v, out| self.law_step(v, out)))
    }

    /// `f ↦ e^{tL} f` for a function on the volume.
    pub fn evolve_function(&self, f: &[f64], t: f64) -> Result<Vec<f64>> {
        self.check(f, t)?;
        Ok(self.uniformize(f, t, |v, out| self.function_step(v, out)))
    }

    fn check(&self, v: &[f64], t: f64) -> Result<()> {
        if v.len() != self.space.n_states() {
            return Err(Error::Mismatch(format!(
                "table of {} entries for {} states",
                v.len(),
                self.space.n_states()
            )));
        }
        if !(t >= 0.0) || !t.is_finite() {
            return Err(invalid(format!("time must be finite and >= 0, got {t}")));
        }
        Ok(())
    }

    /// `Σ_k Pois(k; q·t) v P^k` with `P = I + L/q`, split into chunks of
    /// `q·dt ≤ 500`.
    fn uniformize<F>(&self, v: &[f64], t: f64, step: F) -> Vec<f64>
    where
        F: Fn(&[f64], &mut [f64]),
    {
        if t == 0.0 || self.q == 0.0 {
            return v.to_vec();
        }
        let chunks = (self.q * t / MAX_CHUNK).ceil().max(1.0) as usize;
        let lambda = self.q * t / chunks as f64;
        let mut cur = v.to_vec();
        let mut term = vec![0.0; v.len()];
        let mut next = vec![0.0; v.len()];
        for _ in 0..chunks {
            let mut weight = (-lambda).exp();
            let mut mass = weight;
            let mut acc: Vec<f64> = cur.iter().map(|x| x * weight).collect();
            term.copy_from_slice(&cur);
            let mut k = 0usize;
            while 1.0 - mass > POISSON_TAIL || (k as f64) < lambda {
                k += 1;
                step(&term, &mut next);
                std::mem::swap(&mut term, &mut next);
                weight *= lambda / k as f64;
                mass += weight;
                acc.iter_mut()
                    .zip(&term)
                    .for_each(|(a, x)| *a += weight * x);
                if weight == 0.0 && (k as f64) > lambda {
                    break;
                }
            }
            cur = acc;
        }
        cur
    }

    fn law_step(&self, v: &[f64], out: &mut [f64]) {
        let n = self.space.volume_size();
        let q = self.q;
        let body = |(s, o): (usize, &mut f64)| {
            let mut acc = v[s] * (1.0 - self.exit[s] / q);
            for pos in 0..n {
                let from = s ^ (1 << pos);
                acc += v[from] * self.rates[from * n + pos] / q;
            }
            *o = acc;
        };
        if out.len() >= PARALLEL_STATES {
            out.par_iter_mut().enumerate().for_each(body);
        } else {
            out.iter_mut().enumerate().for_each(body);
        }
    }

    fn function_step(&self, f: &[f64], out: &mut [f64]) {
        let n = self.space.volume_size();
        let q = self.q;
        let body = |(s, o): (usize, &mut f64)| {
            let mut acc = f[s] * (1.0 - self.exit[s] / q);
            for pos in 0..n {
                acc += self.rates[s * n + pos] / q * f[s ^ (1 << pos)];
            }
            *o = acc;
        };
        if out.len() >= PARALLEL_STATES {
            out.par_iter_mut().enumerate().for_each(body);
        } else {
            out.iter_mut().enumerate().for_each(body);
        }
    }
}

/// Evolve a law on the rate volume for time `t` (flip-rate time).
pub fn evolve_exact(initial_law: &[f64], rates: &RateSpec, t: f64) -> Result<Vec<f64>> {
    Generator::new(rates, DEFAULT_EVOLVE_CAP)?.evolve_law(initial_law, t)
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::dynamics::single_site_kernel;
    use crate::gibbs::total_variation;
    use crate::lattice::{Lattice, Region, Topology};

    fn chain(n: usize) -> Arc<Lattice> {
        Arc::new(Lattice::new(vec![n], Topology::Open).unwrap())
    }

    #[test]
    fn time_zero_is_identity() {
        let lat = chain(2);
        let r = RateSpec::uniform(lat.clone(), Region::all(&lat), 1.0).unwrap();
        let law = vec![0.1, 0.2, 0.3, 0.4];
        assert_eq!(evolve_exact(&law, &r, 0.0).unwrap(), law);
    }

    #[test]
    fn single_site_magnetization_decay() {
        let lat = chain(1);
        // unbiased product rates ½: magnetization decays as e^{-t}
        let r = RateSpec::product(lat.clone(), Region::all(&lat), 0.0).unwrap();
        let m0 = 0.6;
        let law = vec![(1.0 + m0) / 2.0, (1.0 - m0) / 2.0];
        for &t in &[0.1, 1.0, 3.7] {
            let out = evolve_exact(&law, &r, t).unwrap();
            assert!((out[0] - out[1] - m0 * f64::exp(-t)).abs() < 1e-13);
        }
    }

    #[test]
    fn product_dynamics_is_kernel_tensor_product() {
        let lat = chain(3);
        let eps = 0.35;
        let r = RateSpec::product(lat.clone(), Region::all(&lat), eps).unwrap();
        let law: Vec<f64> = (0..8).map(|s| (s as f64 + 1.0) / 36.0).collect();
        let t = 0.83;
        let out = evolve_exact(&law, &r, t).unwrap();
        let k = single_site_kernel(t, eps).unwrap();
        for target in 0..8usize {
            let mut p = 0.0;
            for (from, w) in law.iter().enumerate() {
                let mut prod = *w;
                for i in 0..3 {
                    prod *= k.p[from >> i & 1][target >> i & 1];
                }
                p += prod;
            }
            assert!((p - out[target]).abs() < 1e-12);
        }
    }

    #[test]
    fn long_times_use_chunks() {
        let lat = chain(2);
        let r = RateSpec::uniform(lat.clone(), Region::all(&lat), 1.0).unwrap();
        let out = evolve_exact(&[1.0, 0.0, 0.0, 0.0], &r, 400.0).unwrap();
        assert!(total_variation(&out, &[0.25; 4]) < 1e-12);
        assert!((out.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn function_and_law_are_dual() {
        let lat = chain(3);
        let r = RateSpec::alignment(
            lat.clone(),
            Region::all(&lat),
            0.3,
            crate::gibbs::Boundary::Free,
        )
        .unwrap();
        let g = Generator::new(&r, 12).unwrap();
        let law: Vec<f64> = (0..8).map(|s| ((s * 7 + 3) % 8) as f64 / 28.0).collect();
        let f: Vec<f64> = (0..8).map(|s| (s as f64).sin()).collect();
        let t = 1.3;
        let lhs: f64 = g
            .evolve_law(&law, t)
            .unwrap()
            .iter()
            .zip(&f)
            .map(|(a, b)| a * b)
            .sum();
        let rhs: f64 = g
            .evolve_function(&f, t)
            .unwrap()
            .iter()
            .zip(&law)
            .map(|(a, b)| a * b)
            .sum();
        assert!((lhs - rhs).abs() < 1e-12);
    }

    #[test]
    fn cap_is_enforced() {
        let lat = chain(13);
        let r = RateSpec::uniform(lat.clone(), Region::all(&lat), 1.0).unwrap();
        assert!(matches!(
            evolve_exact(&vec![0.0; 1 << 13], &r, 1.0),
            Err(Error::VolumeTooLarge { .. })
        ));
    }
}
