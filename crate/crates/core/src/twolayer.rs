//! The joint law of `(σ_0, σ_t)` under independent biased flips: the
//! dynamical fields, the two-layer Hamiltonian and the constrained
//! single-layer Hamiltonian obtained by fixing the future layer `η`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dynamics::{single_site_kernel, RateSource, RateSpec, SingleSiteKernel};
use crate::error::{invalid, Error, Result};
use crate::gibbs::{exact_measure, GibbsSpec};
use crate::interaction::Interaction;
use crate::lattice::Configuration;

/// Largest volume for [`joint_consistency`] (`4^12` state pairs).
pub const JOINT_CAP: usize = 12;

/// Fields of the two-layer Hamiltonian
/// `H_t(σ,η) = H_ν(σ) - Σ h1 σ(x) - Σ h2 η(x) - Σ h12 σ(x)η(x)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DynamicalFields {
    pub t: f64,
    pub delta: f64,
    pub h1: f64,
    pub h2: f64,
    pub h12: f64,
}

fn check_t_delta(t: f64, delta: f64) -> Result<()> {
    if !(t > 0.0) || !t.is_finite() {
        return Err(invalid(format!("time must be finite and > 0, got {t}")));
    }
    if !(delta > 0.0 && delta <= 1.0) {
        return Err(invalid(format!("δ must lie in (0, 1], got {delta}")));
    }
    Ok(())
}

/// Closed-form fields at kernel time `t` for bias ratio `δ = ν(-)/ν(+)`.
pub fn fields(t: f64, delta: f64) -> Result<DynamicalFields> {
    check_t_delta(t, delta)?;
    let e = (-t).exp();
    let a = (delta * e).ln_1p(); // log(1 + δe^{-t})
    let b = (e / delta).ln_1p(); // log(1 + e^{-t}/δ)
                                 // log(1 - e^{-t}), accurate at both ends
    let c = if t < std::f64::consts::LN_2 {
        (-(-t).exp_m1()).ln()
    } else {
        (-e).ln_1p()
    };
    let h1 = 0.25 * (a - b);
    Ok(DynamicalFields {
        t,
        delta,
        h1,
        h2: -0.5 * delta.ln() + h1,
        h12: 0.25 * (a + b - 2.0 * c),
    })
}

/// Fields read off a kernel as quarter-log ratios of its entries.
pub fn fields_from_kernel(k: &SingleSiteKernel) -> DynamicalFields {
    let [[pp, pm], [mp, mm]] = k.p.map(|r| r.map(f64::ln));
    DynamicalFields {
        t: k.t,
        delta: k.delta(),
        h1: 0.25 * (pp + pm - mp - mm),
        h2: 0.25 * (pp + mp - pm - mm),
        h12: 0.25 * (pp + mm - pm - mp),
    }
}

/// `h_t = -½ log tanh(t/2)`, the coupling of the unbiased case.
pub fn kadanoff_field(t: f64) -> Result<f64> {
    check_t_delta(t, 1.0)?;
    Ok(-0.5 * (0.5 * t).tanh().ln())
}

/// Kernel time at which the unbiased coupling equals `h > 0`.
pub fn time_for_kadanoff_field(h: f64) -> Result<f64> {
    if !(h > 0.0) || !h.is_finite() {
        return Err(invalid(format!("coupling must be finite and > 0, got {h}")));
    }
    Ok(2.0 * (-2.0 * h).exp().atanh())
}

/// `H_t(σ,η)` on the volume of `nu`, with `σ` and `η` full-lattice configurations.
pub fn joint_hamiltonian(
    nu: &GibbsSpec,
    f: &DynamicalFields,
    sigma: &Configuration,
    eta: &Configuration,
) -> Result<f64> {
    if sigma.lattice() != &nu.lattice || eta.lattice() != &nu.lattice {
        return Err(Error::Mismatch(
            "σ and η must live on the measure's lattice".into(),
        ));
    }
    let h_nu = nu.local()?.energy(sigma.spins());
    let coupling: f64 = nu
        .volume
        .sites()
        .iter()
        .map(|&x| {
            let (s, e) = (sigma.get(x) as f64, eta.get(x) as f64);
            f.h1 * s + f.h2 * e + f.h12 * s * e
        })
        .sum();
    Ok(h_nu - coupling)
}

/// `U_ν` with site field `h1(t) + h12(t) η(x)` added at every site of
/// `η`'s lattice. The `η`-only term is dropped (constant in `σ`).
pub fn constrained_hamiltonian(
    u_nu: &Interaction,
    t: f64,
    delta: f64,
    eta: &Configuration,
) -> Result<Interaction> {
    if u_nu.dim() != eta.lattice().dim() {
        return Err(Error::Mismatch("η lives in another dimension".into()));
    }
    let f = fields(t, delta)?;
    let extra: Vec<f64> = eta
        .spins()
        .iter()
        .map(|&e| f.h1 + f.h12 * e as f64)
        .collect();
    let extra = Interaction::zero(u_nu.dim()).with_site_fields(extra)?;
    u_nu.plus(&extra)
}

/// Kernel time `t` solving `h + h1(t) = h12(t)`: the conditioning field on
/// `η = -1` sites cancels the homogeneous field `h`. For `δ = 1` this is
/// `h12(t) = h`. Bisection to `1e-10`.
pub fn compensation_time(h: f64, delta: f64) -> Result<f64> {
    if !(h > 0.0) || !h.is_finite() {
        return Err(invalid(format!(
            "compensation needs a field h > 0, got {h}"
        )));
    }
    check_t_delta(1.0, delta)?;
    // h12 - h1 decreases strictly from +∞ to 0
    let g = |t: f64| -> Result<f64> {
        let f = fields(t, delta)?;
        Ok(f.h12 - f.h1 - h)
    };
    let mut lo = 1e-12;
    let mut hi = 1.0;
    while g(hi)? > 0.0 {
        hi *= 2.0;
        if hi > 1e6 {
            return Err(invalid(format!(
                "no compensation time below 1e6 for h = {h}"
            )));
        }
    }
    while hi - lo > 1e-10 {
        let mid = 0.5 * (lo + hi);
        if g(mid)? > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Two constructions of the joint law of `(σ_0, σ_t)` compared pair by pair.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct JointConsistency {
    pub max_abs: f64,
    pub total_variation: f64,
    pub pairs: u64,
}

/// Single-site kernel of product rates after time `t`.
pub fn product_kernel(rates: &RateSpec, t: f64) -> Result<SingleSiteKernel> {
    match rates.source() {
        RateSource::Product { epsilon } => single_site_kernel(t, *epsilon),
        RateSource::Uniform { rate } => single_site_kernel(2.0 * rate * t, 0.0),
        _ => Err(Error::Unsupported(
            "closed-form two-layer fields exist for product dynamics only".into(),
        )),
    }
}

/// Compares `exp(-H_t(σ,η))/Z` with `ν(σ) Π_x p_t(σ(x),η(x))` over every
/// pair, streaming the `4^n` entries in parallel over `σ`.
pub fn joint_consistency(nu: &GibbsSpec, rates: &RateSpec, t: f64) -> Result<JointConsistency> {
    if rates.volume() != &nu.volume {
        return Err(Error::Mismatch(
            "rates and measure live on different volumes".into(),
        ));
    }
    let k = product_kernel(rates, t)?;
    let f = fields(k.t, k.delta())?;
    let measure = exact_measure(nu, JOINT_CAP)?;
    let n = nu.volume.len();
    let states = 1usize << n;
    let spin = |s: usize, i: usize| if s >> i & 1 == 1 { -1.0 } else { 1.0 };

    // log Z = log Σ_σ e^{-H_ν(σ) + h1 Σσ} Π_x 2cosh(h2 + h12 σ(x))
    let log_terms: Vec<f64> = (0..states)
        .map(|s| {
            let mut v = -measure.energies()[s];
            for i in 0..n {
                let a = spin(s, i);
                v += f.h1 * a + (2.0 * (f.h2 + f.h12 * a).cosh()).ln();
            }
            v
        })
        .collect();
    let m = log_terms.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let log_z = m + log_terms.iter().map(|v| (v - m).exp()).sum::<f64>().ln();

    let lo_bits = n / 2;
    let hi_bits = n - lo_bits;
    let (max_abs, tv) = (0..states)
        .into_par_iter()
        .map(|s| {
            // η-dependent parts split into low and high halves
            let half = |bits: usize, shift: usize| -> (Vec<f64>, Vec<f64>) {
                let size = 1usize << bits;
                let mut w = vec![0.0; size];
                let mut p = vec![1.0; size];
                for (e, (wv, pv)) in w.iter_mut().zip(p.iter_mut()).enumerate() {
                    for j in 0..bits {
                        let i = j + shift;
                        let (a, b) = (spin(s, i), spin(e, j));
                        *wv += b * (f.h2 + f.h12 * a);
                        *pv *= k.p[(a < 0.0) as usize][(b < 0.0) as usize];
                    }
                }
                (w, p)
            };
            let (w_lo, p_lo) = half(lo_bits, 0);
            let (w_hi, p_hi) = half(hi_bits, lo_bits);
            let sum_sigma: f64 = (0..n).map(|i| spin(s, i)).sum();
            let base = -measure.energies()[s] + f.h1 * sum_sigma - log_z;
            let nu_s = measure.probs()[s];
            let mut max_abs = 0.0f64;
            let mut tv = 0.0;
            for (wh, ph) in w_hi.iter().zip(&p_hi) {
                for (wl, pl) in w_lo.iter().zip(&p_lo) {
                    let a = (base + wh + wl).exp();
                    let b = nu_s * ph * pl;
                    let d = (a - b).abs();
                    max_abs = max_abs.max(d);
                    tv += d;
                }
            }
            (max_abs, tv)
        })
        .reduce(|| (0.0, 0.0), |a, b| (a.0.max(b.0), a.1 + b.1));
    Ok(JointConsistency {
        max_abs,
        total_variation: 0.5 * tv,
        pairs: (states as u64) * (states as u64),
    })
}

/// `Σ_σ exp(-H_t(σ,η))/Z` for every `η`: the law of `σ_t`, built from the
/// two-layer Hamiltonian.
pub fn joint_marginal_future(nu: &GibbsSpec, rates: &RateSpec, t: f64) -> Result<Vec<f64>> {
    let k = product_kernel(rates, t)?;
    let f = fields(k.t, k.delta())?;
    let measure = exact_measure(nu, JOINT_CAP)?;
    let n = nu.volume.len();
    let states = 1usize << n;
    let spin = |s: usize, i: usize| if s >> i & 1 == 1 { -1.0 } else { 1.0 };
    let log_w = |s: usize, e: usize| -> f64 {
        let mut v = -measure.energies()[s];
        for i in 0..n {
            let (a, b) = (spin(s, i), spin(e, i));
            v += f.h1 * a + f.h2 * b + f.h12 * a * b;
        }
        v
    };
    let raw: Vec<Vec<f64>> = (0..states)
        .into_par_iter()
        .map(|e| (0..states).map(|s| log_w(s, e)).collect())
        .collect();
    let m = raw
        .iter()
        .flatten()
        .cloned()
        .fold(f64::NEG_INFINITY, f64::max);
    let sums: Vec<f64> = raw
        .iter()
        .map(|r| r.iter().map(|v| (v - m).exp()).sum())
        .collect();
    let z: f64 = sums.iter().sum();
    Ok(sums.into_iter().map(|v| v / z).collect())
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::dynamics::{epsilon_from_delta, evolve_exact};
    use crate::gibbs::total_variation;
    use crate::lattice::{Lattice, Region, SpecialConfig, Topology};

    #[test]
    fn unbiased_fields() {
        for t in [0.05, 0.7, 3.0, 11.0] {
            let f = fields(t, 1.0).unwrap();
            assert_eq!((f.h1, f.h2), (0.0, 0.0));
            let e = (-t).exp();
            assert!((f.h12 - 0.5 * ((1.0 + e) / (1.0 - e)).ln()).abs() < 1e-14);
            assert!((f.h12 - kadanoff_field(t).unwrap()).abs() < 1e-14);
        }
        let f = fields(3f64.ln(), 1.0).unwrap();
        assert!((f.h12 - 0.5 * 2f64.ln()).abs() < 1e-15);
        assert!((f.h12 - 0.346574).abs() < 1e-6);
    }

    #[test]
    fn closed_form_matches_kernel() {
        for &delta in &[1.0, 0.8, 0.5, 0.2, 0.01] {
            for &t in &[0.01, 0.3, 1.0, 4.0, 20.0] {
                let f = fields(t, delta).unwrap();
                let g =
                    fields_from_kernel(&single_site_kernel(t, epsilon_from_delta(delta)).unwrap());
                for (a, b) in [(f.h1, g.h1), (f.h2, g.h2), (f.h12, g.h12)] {
                    assert!((a - b).abs() < 1e-12, "t={t} δ={delta}: {a} vs {b}");
                }
                assert!((f.h2 - f.h1 + 0.5 * delta.ln()).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn long_time_ratio_of_fields() {
        let f = fields(40.0, 0.5).unwrap();
        assert!(f.h1 < 0.0);
        assert!((f.h12 / f.h1 + 3.0).abs() < 1e-9);
    }

    #[test]
    fn rejects_bad_arguments() {
        assert!(fields(0.0, 1.0).is_err());
        assert!(fields(1.0, 0.0).is_err());
        assert!(fields(1.0, 1.5).is_err());
        assert!(compensation_time(0.0, 1.0).is_err());
    }

    #[test]
    fn compensation_solves_field_balance() {
        let t = compensation_time(0.05, 1.0).unwrap();
        assert!((fields(t, 1.0).unwrap().h12 - 0.05).abs() < 1e-9);
        assert!((t - time_for_kadanoff_field(0.05).unwrap()).abs() < 1e-9);
        let t = compensation_time(0.3, 0.5).unwrap();
        let f = fields(t, 0.5).unwrap();
        assert!((0.3 + f.h1 - f.h12).abs() < 1e-9);
    }

    #[test]
    fn constrained_fields_follow_eta() {
        let lat = Arc::new(Lattice::new(vec![2, 2], Topology::Torus).unwrap());
        let eta = SpecialConfig::Alternating.build(lat).unwrap();
        let u = Interaction::ising(1.0, 0.0, 2).unwrap();
        let t = 0.9;
        let c = constrained_hamiltonian(&u, t, 1.0, &eta).unwrap();
        let ht = kadanoff_field(t).unwrap();
        let f = c.site_fields().unwrap();
        for (x, v) in f.iter().enumerate() {
            assert!((v - ht * eta.get(x) as f64).abs() < 1e-15);
        }
        assert_eq!(c.translation_part(), u);
    }

    #[test]
    fn single_site_joint_law() {
        let lat = Arc::new(Lattice::new(vec![1], Topology::Open).unwrap());
        let vol = Region::all(&lat);
        let nu = GibbsSpec::new(
            Interaction::ising(0.0, 0.4, 1).unwrap(),
            lat.clone(),
            vol.clone(),
            crate::gibbs::Boundary::Free,
        )
        .unwrap();
        let r = RateSpec::product(lat, vol, 0.0).unwrap();
        let rep = joint_consistency(&nu, &r, 0.6).unwrap();
        assert!(rep.max_abs < 1e-12 && rep.pairs == 4);
    }

    #[test]
    fn two_site_biased_chain() {
        let lat = Arc::new(Lattice::new(vec![2], Topology::Open).unwrap());
        let vol = Region::all(&lat);
        let nu = GibbsSpec::new(
            Interaction::ising(0.8, 0.1, 1).unwrap(),
            lat.clone(),
            vol.clone(),
            crate::gibbs::Boundary::Free,
        )
        .unwrap();
        let r = RateSpec::product(lat, vol, epsilon_from_delta(0.5)).unwrap();
        let rep = joint_consistency(&nu, &r, 0.7).unwrap();
        assert!(rep.max_abs < 1e-12, "{rep:?}");
    }

    #[test]
    fn future_marginal_is_evolved_measure() {
        let lat = Arc::new(Lattice::new(vec![2, 2], Topology::Torus).unwrap());
        let nu = GibbsSpec::torus(Interaction::ising(0.4, 0.0, 2).unwrap(), lat.clone()).unwrap();
        let r = RateSpec::product(lat.clone(), Region::all(&lat), 0.0).unwrap();
        let t = 0.8;
        let joint = joint_marginal_future(&nu, &r, t).unwrap();
        let evolved = evolve_exact(exact_measure(&nu, 12).unwrap().probs(), &r, t).unwrap();
        assert!(total_variation(&joint, &evolved) < 1e-12);
    }

    #[test]
    fn joint_hamiltonian_aligns_layers() {
        let lat = Arc::new(Lattice::new(vec![3], Topology::Open).unwrap());
        let nu = GibbsSpec::new(
            Interaction::zero(1),
            lat.clone(),
            Region::all(&lat),
            crate::gibbs::Boundary::Free,
        )
        .unwrap();
        let f = fields(0.5, 1.0).unwrap();
        let eta = Configuration::from_spins(lat.clone(), vec![1, -1, 1]).unwrap();
        let same = joint_hamiltonian(&nu, &f, &eta, &eta).unwrap();
        assert!((same + 3.0 * f.h12).abs() < 1e-14);
        let other = Configuration::uniform(lat, 1);
        assert!(joint_hamiltonian(&nu, &f, &other, &eta).unwrap() > same);
    }

    #[test]
    fn non_product_rates_are_rejected() {
        let lat = Arc::new(Lattice::new(vec![2], Topology::Open).unwrap());
        let vol = Region::all(&lat);
        let nu = GibbsSpec::new(
            Interaction::zero(1),
            lat.clone(),
            vol.clone(),
            crate::gibbs::Boundary::Free,
        )
        .unwrap();
        let r = RateSpec::alignment(lat, vol, 0.2, crate::gibbs::Boundary::Free).unwrap();
        assert!(matches!(
            joint_consistency(&nu, &r, 1.0),
            Err(Error::Unsupported(_))
        ));
    }
}
