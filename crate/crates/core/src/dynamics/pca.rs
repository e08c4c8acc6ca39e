use rayon::prelude::*;

use crate::error::{invalid, Error, Result};
use crate::gibbs::StateSpace;

use super::RateSpec;

/// Largest volume the dense PCA tables accept.
pub const PCA_CAP: usize = 10;

/// Discrete-time cellular automaton: every site flips independently with
/// probability `c(x,σ)/n` per step.
#[derive(Clone, Debug)]
pub struct PcaKernel {
    space: StateSpace,
    n: f64,
    /// `c(x,σ)/n`, row-major over (state, volume position).
    flip: Vec<f64>,
}

/// Build the step kernel for discretization `n` (steps per unit time).
pub fn pca_kernel(rates: &RateSpec, n: f64) -> Result<PcaKernel> {
    let m = rates.bounds().max;
    if !(n > m) || !n.is_finite() {
        return Err(invalid(format!(
            "discretization n = {n} must exceed the largest rate {m}"
        )));
    }
    let space = StateSpace::new(rates.base().clone(), rates.volume());
    space.check_cap(PCA_CAP, "PCA tables are dense; use a smaller volume")?;
    let k = space.volume_size();
    let mut flip = vec![0.0; space.n_states() * k];
    flip.par_chunks_mut(k).enumerate().for_each(|(s, row)| {
        let mut spins = space.base().spins().to_vec();
        space.write_state(s, &mut spins);
        for (pos, &x) in space.sites().iter().enumerate() {
            row[pos] = rates.rate(&spins, x) / n;
        }
    });
    Ok(PcaKernel { space, n, flip })
}

impl PcaKernel {
    pub fn space(&self) -> &StateSpace {
        &self.space
    }

    pub fn steps_per_unit_time(&self) -> f64 {
        self.n
    }

    /// `⌊n t⌋`.
    pub fn steps_for(&self, t: f64) -> usize {
        (self.n * t).floor() as usize
    }

    /// Distribution of the next state from `state`, indexed by target state.
    fn row_into(&self, state: usize, out: &mut [f64]) {
        let k = self.space.volume_size();
        let p = &self.flip[state * k..(state + 1) * k];
        // distribution over the flip mask, built one site at a time
        out.fill(0.0);
        out[0] = 1.0;
        for (pos, &q) in p.iter().enumerate() {
            let half = 1usize << pos;
            for m in 0..half {
                let w = out[m];
                out[m] = w * (1.0 - q);
                out[m | half] = w * q;
            }
        }
        // permute mask → target
        let mut tmp = out.to_vec();
        for (mask, w) in tmp.drain(..).enumerate() {
            out[state ^ mask] = w;
        }
    }

    /// Dense one-step table `P[from][to]`.
    pub fn one_step_table(&self) -> Vec<Vec<f64>> {
        let n = self.space.n_states();
        (0..n)
            .into_par_iter()
            .map(|s| {
                let mut row = vec![0.0; n];
                self.row_into(s, &mut row);
                row
            })
            .collect()
    }

    /// `law · P`.
    pub fn step_law(&self, law: &[f64]) -> Result<Vec<f64>> {
        let n = self.space.n_states();
        if law.len() != n {
            return Err(Error::Mismatch(format!(
                "law of {} entries for {n} states",
                law.len()
            )));
        }
        Ok((0..n)
            .into_par_iter()
            .fold(
                || (vec![0.0; n], vec![0.0; n]),
                |(mut acc, mut row), s| {
                    if law[s] != 0.0 {
                        self.row_into(s, &mut row);
                        acc.iter_mut().zip(&row).for_each(|(a, r)| *a += law[s] * r);
                    }
                    (acc, row)
                },
            )
            .map(|(acc, _)| acc)
            .reduce(
                || vec![0.0; n],
                |mut a, b| {
                    a.iter_mut().zip(&b).for_each(|(x, y)| *x += y);
                    a
                },
            ))
    }

    /// `law · P^steps`.
    pub fn evolve_law(&self, law: &[f64], steps: usize) -> Result<Vec<f64>> {
        let mut cur = law.to_vec();
        for _ in 0..steps {
            cur = self.step_law(&cur)?;
        }
        Ok(cur)
    }
}

/// `(1 - (1 - 2/n)^{⌊nt⌋}) / 2`: the flip probability of one unit-rate site
/// after `⌊nt⌋` PCA steps.
pub fn pca_flip_probability(n: f64, t: f64) -> f64 {
    let steps = (n * t).floor();
    0.5 * (1.0 - (1.0 - 2.0 / n).powf(steps))
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::dynamics::evolve_exact;
    use crate::gibbs::{total_variation, Boundary};
    use crate::lattice::{Lattice, Region, Topology};

    fn chain(n: usize) -> Arc<Lattice> {
        Arc::new(Lattice::new(vec![n], Topology::Open).unwrap())
    }

    #[test]
    fn half_flip_at_n_two() {
        let lat = chain(1);
        let r = RateSpec::uniform(lat.clone(), Region::all(&lat), 1.0).unwrap();
        let k = pca_kernel(&r, 2.0).unwrap();
        assert_eq!(k.one_step_table(), vec![vec![0.5, 0.5], vec![0.5, 0.5]]);
    }

    #[test]
    fn rejects_coarse_discretization() {
        let lat = chain(1);
        let r = RateSpec::uniform(lat.clone(), Region::all(&lat), 1.0).unwrap();
        assert!(pca_kernel(&r, 1.0).is_err());
    }

    #[test]
    fn multi_step_matches_closed_form() {
        let lat = chain(1);
        let r = RateSpec::uniform(lat.clone(), Region::all(&lat), 1.0).unwrap();
        let t = 0.9;
        for n in [64.0, 128.0, 256.0] {
            let k = pca_kernel(&r, n).unwrap();
            let law = k.evolve_law(&[1.0, 0.0], k.steps_for(t)).unwrap();
            let closed = pca_flip_probability(n, t);
            assert!((law[1] - closed).abs() < 1e-13);
            let limit = 0.5 * (1.0 - (-2.0 * t).exp());
            assert!((closed - limit).abs() < 2.0 / n);
        }
    }

    #[test]
    fn rows_are_product_of_sites() {
        let lat = chain(3);
        let r = RateSpec::alignment(lat.clone(), Region::all(&lat), 0.4, Boundary::Free).unwrap();
        let k = pca_kernel(&r, 4.0).unwrap();
        let table = k.one_step_table();
        for (s, row) in table.iter().enumerate() {
            assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-14);
            let cfg = k.space().configuration(s);
            for (to, &p) in row.iter().enumerate() {
                let mut q = 1.0;
                for pos in 0..3 {
                    let c = r.rate(cfg.spins(), pos) / 4.0;
                    q *= if (s ^ to) >> pos & 1 == 1 { c } else { 1.0 - c };
                }
                assert!((p - q).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn converges_to_continuous_time() {
        let lat = chain(4);
        let r = RateSpec::alignment(lat.clone(), Region::all(&lat), 0.5, Boundary::Free).unwrap();
        let mut law = vec![0.0; 16];
        law[0] = 1.0;
        let t = 1.0;
        let exact = evolve_exact(&law, &r, t).unwrap();
        let errs: Vec<f64> = [64.0, 128.0, 256.0]
            .iter()
            .map(|&n| {
                let k = pca_kernel(&r, n).unwrap();
                total_variation(&k.evolve_law(&law, k.steps_for(t)).unwrap(), &exact)
            })
            .collect();
        assert!(errs[0] > errs[1] && errs[1] > errs[2]);
        let ratio = errs[1] / errs[2];
        assert!((1.6..2.5).contains(&ratio), "{errs:?}");
    }
}
