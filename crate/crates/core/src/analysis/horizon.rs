use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::interaction::{difference_interaction, energy_density_constant, Interaction};

/// Largest torus enumerated when computing `C`.
pub const DEFAULT_TORUS_CAP: usize = 16;

/// Inputs of [`cluster_horizon`] besides the interactions.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HorizonParams {
    /// Flip-rate times at which the per-time table is evaluated.
    pub times: Vec<f64>,
    #[serde(default = "default_cap")]
    pub torus_cap: usize,
    /// Degree `z` of the polymer adjacency graph; defaults to `2d` or the
    /// number of sites sharing a term with a given site, whichever is larger.
    #[serde(default)]
    pub connectivity: Option<usize>,
}

fn default_cap() -> usize {
    DEFAULT_TORUS_CAP
}

impl Default for HorizonParams {
    fn default() -> Self {
        HorizonParams {
            times: (1..=40).map(|i| 0.0025 * i as f64).collect(),
            torus_cap: DEFAULT_TORUS_CAP,
            connectivity: None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HorizonRow {
    pub t: f64,
    pub delta_t: f64,
    pub epsilon_t: f64,
    /// `α_t = -C + log(1/ε_t)`.
    pub alpha_t: f64,
    /// `Σ_{n≥1} (z e)^n e^{-α_t n} e^n`, infinite when the series diverges.
    pub bound: f64,
}

/// Small-time horizon below which the polymer expansion of the evolved
/// measure converges by the criterion in [`ClusterHorizon::criterion`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClusterHorizon {
    /// `C = 2 sup_Λ sup_σ |H_Λ(σ)|/|Λ|` for `H = H_μ - H_ν`.
    pub c: f64,
    pub dim: usize,
    pub connectivity: usize,
    /// Largest flip-rate time at which the bound is below 1.
    pub t0: f64,
    /// Largest grid time at which the bound is below 1 (`None` if none is).
    pub t0_grid: Option<f64>,
    pub criterion: String,
    pub rows: Vec<HorizonRow>,
}

/// `δ_t = (1 - e^{-2t})/2`: probability that a rate-1 spin differs from
/// its start after time `t`.
pub fn flip_probability(t: f64) -> f64 {
    -0.5 * (-2.0 * t).exp_m1()
}

/// The horizon for `U_μ` (dynamics) against `U_ν` (initial measure).
pub fn cluster_horizon(
    u_nu: &Interaction,
    u_mu: &Interaction,
    params: &HorizonParams,
) -> Result<ClusterHorizon> {
    let diff = difference_interaction(u_mu, u_nu)?;
    let c = energy_density_constant(&diff.translation_part(), params.torus_cap)?;
    let c = c + 2.0 * field_sup(&diff);
    horizon_from_constant(c, u_nu.dim(), interaction_degree(&diff), params)
}

/// Number of sites sharing at least one nonzero term with a given site.
pub fn interaction_degree(u: &Interaction) -> usize {
    let mut seen: Vec<Vec<i64>> = Vec::new();
    for class in u.classes() {
        if class.table().iter().all(|&v| v == 0.0) {
            continue;
        }
        for a in class.offsets() {
            for b in class.offsets() {
                let d: Vec<i64> = b.iter().zip(a).map(|(x, y)| x - y).collect();
                if d.iter().any(|&v| v != 0) && !seen.contains(&d) {
                    seen.push(d);
                }
            }
        }
    }
    seen.len()
}

fn field_sup(u: &Interaction) -> f64 {
    u.site_fields()
        .map_or(0.0, |f| f.iter().fold(0.0, |m: f64, v| m.max(v.abs())))
}

/// The horizon for a given `C`, dimension and interaction degree.
pub fn horizon_from_constant(
    c: f64,
    dim: usize,
    degree: usize,
    params: &HorizonParams,
) -> Result<ClusterHorizon> {
    if !(c >= 0.0) || !c.is_finite() {
        return Err(invalid(format!("C must be finite and >= 0, got {c}")));
    }
    if dim == 0 {
        return Err(invalid("dimension must be >= 1"));
    }
    if params.times.iter().any(|t| !(*t > 0.0) || !t.is_finite()) {
        return Err(invalid("horizon times must be finite and > 0"));
    }
    let z = params.connectivity.unwrap_or((2 * dim).max(degree));
    if z == 0 {
        return Err(invalid("connectivity must be >= 1"));
    }
    let e = std::f64::consts::E;
    // ratio of the geometric series: (z e) · e · e^{C} ε_t
    let kappa = z as f64 * e;
    let ratio = |eps: f64| kappa * e * c.exp() * eps;
    // series < 1  ⇔  ratio < 1/2
    let eps_star = 1.0 / (2.0 * kappa * e * c.exp());
    let delta_star = eps_star / (1.0 + eps_star);
    let t0 = -0.5 * (-2.0 * delta_star).ln_1p();
    let rows: Vec<HorizonRow> = params
        .times
        .iter()
        .map(|&t| {
            let delta_t = flip_probability(t);
            let epsilon_t = delta_t / (1.0 - delta_t);
            let q = ratio(epsilon_t);
            HorizonRow {
                t,
                delta_t,
                epsilon_t,
                alpha_t: -c - epsilon_t.ln(),
                bound: if q < 1.0 {
                    q / (1.0 - q)
                } else {
                    f64::INFINITY
                },
            }
        })
        .collect();
    let t0_grid = rows
        .iter()
        .filter(|r| r.bound < 1.0)
        .map(|r| r.t)
        .fold(None, |m: Option<f64>, t| Some(m.map_or(t, |m| m.max(t))));
    Ok(ClusterHorizon {
        c,
        dim,
        connectivity: z,
        t0,
        t0_grid,
        criterion: format!(
            "sum_n (z e)^n exp(-alpha_t n) e^n < 1 with z = {z}; equivalently z e^2 e^C eps_t < 1/2"
        ),
        rows,
    })
}
