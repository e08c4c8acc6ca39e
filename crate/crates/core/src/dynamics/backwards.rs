use crate::error::{invalid, Error, Result};

use super::{Generator, RateSpec, DEFAULT_EVOLVE_CAP};

/// `(T(s,t) f)(σ) = E_ν[f(σ_s) | σ_t = σ]` for the process started from
/// `initial_law` and run with `rates`.
///
/// Computed forward as `[(ν S(s)) · f] S(t-s) / ν S(t)`, which for
/// reversible rates with law `μ` equals `S(t-s)[S(s)g · f] / S(t)g`
/// with `g = ν/μ`. States with `ν S(t)(σ) = 0` map to `NaN`.
pub fn backwards_operator(
    initial_law: &[f64],
    rates: &RateSpec,
    s: f64,
    t: f64,
    f: &[f64],
) -> Result<Vec<f64>> {
    if !(0.0..=t).contains(&s) {
        return Err(invalid(format!("need 0 <= s <= t, got s = {s}, t = {t}")));
    }
    let gen = Generator::new(rates, DEFAULT_EVOLVE_CAP)?;
    if f.len() != gen.space().n_states() {
        return Err(Error::Mismatch(format!(
            "observable of {} entries for {} states",
            f.len(),
            gen.space().n_states()
        )));
    }
    let nu_s = gen.evolve_law(initial_law, s)?;
    let weighted: Vec<f64> = nu_s.iter().zip(f).map(|(p, v)| p * v).collect();
    let num = gen.evolve_law(&weighted, t - s)?;
    let den = gen.evolve_law(&nu_s, t - s)?;
    Ok(num
        .iter()
        .zip(&den)
        .map(|(a, b)| if *b > 0.0 { a / b } else { f64::NAN })
        .collect())
}
