use crate::error::{Error, Result};

use super::{RateSpec, Trajectory};

/// Volume sites within rate range of `x`.
fn influence(rates: &RateSpec, x: usize) -> Vec<usize> {
    let lat = rates.lattice();
    let r = rates.range();
    rates
        .volume()
        .sites()
        .iter()
        .copied()
        .filter(|&y| lat.distance(x, y) <= r)
        .collect()
}

/// `log Ψ_x(ω)`: log density of the path with `x` flipped throughout,
/// relative to the path itself, under the flip process with these rates.
///
/// `Ψ_x = exp[Σ_y ∫ log(c(y,ω^x_s)/c(y,ω_s)) dN^y_s + Σ_y ∫ (c(y,ω_s) - c(y,ω^x_s)) ds]`
/// with `y` ranging over sites within rate range of `x`. The jump terms use
/// the configurations just before each flip.
pub fn girsanov_log_weight(traj: &Trajectory, rates: &RateSpec, x: usize) -> Result<f64> {
    if traj.initial.lattice() != rates.lattice() {
        return Err(Error::Mismatch(
            "trajectory lives on another lattice".into(),
        ));
    }
    if !rates.volume().contains(x) {
        return Err(Error::InvalidParameter(format!(
            "site {x} is outside the rate volume"
        )));
    }
    let ball = influence(rates, x);
    let mut cur = traj.initial.clone();
    let mut alt = traj.initial.flip(x)?;
    let drift = |cur: &[i8], alt: &[i8]| -> f64 {
        ball.iter()
            .map(|&y| rates.rate(cur, y) - rates.rate(alt, y))
            .sum()
    };
    let mut log_w = 0.0;
    let mut last = 0.0;
    for e in &traj.events {
        log_w += drift(cur.spins(), alt.spins()) * (e.time - last);
        if ball.binary_search(&e.site).is_ok() {
            log_w += (rates.rate(alt.spins(), e.site) / rates.rate(cur.spins(), e.site)).ln();
        }
        cur.flip_in_place(e.site)?;
        alt.flip_in_place(e.site)?;
        last = e.time;
    }
    log_w += drift(cur.spins(), alt.spins()) * (traj.horizon - last);
    Ok(log_w)
}

/// `Ψ_x(ω)`, so that `E_{σ^x}[f(ω_t)] = E_σ[Ψ_x f((ω_t)^x)]`.
pub fn girsanov_weight(traj: &Trajectory, rates: &RateSpec, x: usize) -> Result<f64> {
    girsanov_log_weight(traj, rates, x).map(f64::exp)
}

/// `e^{2Ct} (M/ε)^N` with `C = ½ |B_R(x)| (M - ε)` and `N` the number of
/// flips within rate range of `x`; an upper bound on `Ψ_x`.
pub fn girsanov_bound(traj: &Trajectory, rates: &RateSpec, x: usize) -> f64 {
    let ball = influence(rates, x);
    let b = rates.bounds();
    let c = 0.5 * ball.len() as f64 * (b.max - b.min);
    let n = traj
        .events
        .iter()
        .filter(|e| ball.binary_search(&e.site).is_ok())
        .count();
    (2.0 * c * traj.horizon + n as f64 * (b.max / b.min).ln()).exp()
}
