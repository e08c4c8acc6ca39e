use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::gibbs::{two_bc_gap, GapRow, McParams, ScanOrder, StartPolicy};
use crate::interaction::Interaction;
use crate::lattice::SpecialConfig;
use crate::output::{fmt_num, json_hash};
use crate::twolayer::{
    compensation_time, constrained_hamiltonian, fields, time_for_kadanoff_field,
};

/// The conditioning layer `η` of the constrained system.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum EtaKind {
    AllPlus,
    AllMinus,
    Alternating,
    PerturbedAlternating {
        p: f64,
        seed: u64,
    },
    /// Perturbed alternating with `p = clamp((h + h1)/h12, 0, 1)`, the flip
    /// density at which the mean site field of the constrained system vanishes.
    Compensating {
        seed: u64,
    },
}

impl EtaKind {
    /// The concrete configuration at time `t`.
    pub fn resolve(&self, h: f64, t: f64, delta: f64) -> Result<SpecialConfig> {
        Ok(match *self {
            EtaKind::AllPlus => SpecialConfig::AllPlus,
            EtaKind::AllMinus => SpecialConfig::AllMinus,
            EtaKind::Alternating => SpecialConfig::Alternating,
            EtaKind::PerturbedAlternating { p, seed } => {
                SpecialConfig::PerturbedAlternating { p, seed }
            }
            EtaKind::Compensating { seed } => {
                let f = fields(t, delta)?;
                let p = ((h + f.h1) / f.h12).clamp(0.0, 1.0);
                SpecialConfig::PerturbedAlternating { p, seed }
            }
        })
    }

    pub fn label(&self) -> String {
        match *self {
            EtaKind::AllPlus => "all-plus".into(),
            EtaKind::AllMinus => "all-minus".into(),
            EtaKind::Alternating => "alternating".into(),
            EtaKind::PerturbedAlternating { p, seed } => {
                format!("perturbed-alternating(p={},seed={seed})", fmt_num(p))
            }
            EtaKind::Compensating { seed } => format!("compensating(seed={seed})"),
        }
    }
}

/// One (time, cube side) cell of a scan.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GapScanRow {
    pub t: f64,
    /// `h12(t)`, the coupling between the layers.
    pub h12: f64,
    pub side: usize,
    pub collar: usize,
    pub eta: String,
    pub boundary_pair: String,
    pub plus_mean: f64,
    pub plus_stderr: f64,
    pub minus_mean: f64,
    pub minus_stderr: f64,
    pub gap: f64,
    pub stderr: f64,
    pub exact: bool,
}

impl GapScanRow {
    fn from_gap(t: f64, h12: f64, collar: usize, eta: &EtaKind, r: GapRow) -> Self {
        GapScanRow {
            t,
            h12,
            side: r.side,
            collar,
            eta: eta.label(),
            boundary_pair: "plus/minus".into(),
            plus_mean: r.plus.mean,
            plus_stderr: r.plus.conservative_stderr(),
            minus_mean: r.minus.mean,
            minus_stderr: r.minus.conservative_stderr(),
            gap: r.gap,
            stderr: r.stderr,
            exact: r.exact,
        }
    }

    /// `gap - k·stderr > threshold`.
    pub fn significant(&self, threshold: f64, k: f64) -> bool {
        self.gap - k * self.stderr > threshold
    }
}

/// Plus/minus boundary gap of `⟨σ(centre)⟩` in the constrained system
/// `U_ν + h1(t) + h12(t)η` on nested cubes. `h` is the homogeneous field
/// already inside `u_nu` (needed only by [`EtaKind::Compensating`]).
#[allow(clippy::too_many_arguments)]
pub fn bad_config_gap(
    u_nu: &Interaction,
    h: f64,
    t: f64,
    delta: f64,
    eta: &EtaKind,
    sides: &[usize],
    collar: usize,
    mc: &McParams,
    cap: usize,
) -> Result<Vec<GapScanRow>> {
    if collar < u_nu.range() {
        return Err(crate::Error::CollarTooThin {
            required: u_nu.range(),
        });
    }
    let f = fields(t, delta)?;
    let special = eta.resolve(h, t, delta)?;
    let rows = two_bc_gap(
        u_nu.dim(),
        sides,
        collar,
        |sys| {
            let eta_cfg = special.build_anchored(sys.lattice.clone(), sys.center)?;
            constrained_hamiltonian(u_nu, t, delta, &eta_cfg)
        },
        mc,
        cap,
    )?;
    Ok(rows
        .into_iter()
        .map(|r| GapScanRow::from_gap(t, f.h12, collar, eta, r))
        .collect())
}

/// Nearest-neighbour Ising `U_ν`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub dim: usize,
    pub beta: f64,
    #[serde(default)]
    pub h: f64,
}

/// How the time grid is given. Times are kernel times.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum TimeGrid {
    List {
        values: Vec<f64>,
    },
    /// Times at which the unbiased coupling `h_t` takes these values.
    Kadanoff {
        fields: Vec<f64>,
    },
    /// Multiples of the compensation time of the model field.
    Compensation {
        multiples: Vec<f64>,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DynamicsConfig {
    #[serde(default = "unit")]
    pub delta: f64,
    pub times: TimeGrid,
}

fn unit() -> f64 {
    1.0
}

/// Monte Carlo settings (the seed lives at the top level of the config).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MonteCarloConfig {
    pub sweeps: usize,
    #[serde(default)]
    pub burn_in: usize,
    #[serde(default = "one")]
    pub replicas: usize,
    #[serde(default = "one")]
    pub thinning: usize,
    #[serde(default)]
    pub scan: ScanOrder,
    #[serde(default)]
    pub start: StartPolicy,
}

fn one() -> usize {
    1
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalysisConfig {
    pub eta: EtaKind,
    pub sides: Vec<usize>,
    #[serde(default = "one")]
    pub collar: usize,
    #[serde(default = "default_cap")]
    pub enumeration_cap: usize,
    #[serde(default = "default_threshold")]
    pub threshold: f64,
    #[serde(default = "default_sigmas")]
    pub sigmas: f64,
    pub mc: MonteCarloConfig,
    /// Marks runs outside the regime covered by the underlying theorem.
    #[serde(default)]
    pub evidence_only: bool,
}

fn default_cap() -> usize {
    16
}

fn default_threshold() -> f64 {
    0.2
}

fn default_sigmas() -> f64 {
    3.0
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    pub csv: Option<String>,
    pub sidecar: Option<String>,
}

/// A complete scan description, as read from JSON.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScanConfig {
    #[serde(default)]
    pub label: Option<String>,
    pub model: ModelConfig,
    pub dynamics: DynamicsConfig,
    pub analysis: AnalysisConfig,
    #[serde(default)]
    pub output: Option<OutputConfig>,
    #[serde(default)]
    pub seed: u64,
}

impl ScanConfig {
    pub fn validate(&self) -> Result<()> {
        if self.model.dim == 0 {
            return Err(invalid("model.dim must be >= 1"));
        }
        if self.analysis.sides.is_empty() || self.analysis.sides.contains(&0) {
            return Err(invalid(
                "analysis.sides must be a non-empty list of positive sides",
            ));
        }
        let times = self.times()?;
        if times.is_empty() {
            return Err(invalid("the time grid is empty"));
        }
        if times.windows(2).any(|w| w[0] >= w[1]) {
            return Err(invalid("the time grid must be strictly increasing"));
        }
        self.mc_params(0).validate()
    }

    /// The resolved kernel-time grid.
    pub fn times(&self) -> Result<Vec<f64>> {
        match &self.dynamics.times {
            TimeGrid::List { values } => Ok(values.clone()),
            TimeGrid::Kadanoff { fields } => {
                if self.dynamics.delta != 1.0 {
                    return Err(invalid("a kadanoff time grid needs delta = 1"));
                }
                // larger coupling means earlier time
                let mut t: Vec<f64> = fields
                    .iter()
                    .map(|&h| time_for_kadanoff_field(h))
                    .collect::<Result<_>>()?;
                t.sort_by(f64::total_cmp);
                Ok(t)
            }
            TimeGrid::Compensation { multiples } => {
                let tc = compensation_time(self.model.h, self.dynamics.delta)?;
                Ok(multiples.iter().map(|m| m * tc).collect())
            }
        }
    }

    /// Monte Carlo parameters of cell `cell`; each cell gets its own seed.
    pub fn mc_params(&self, cell: usize) -> McParams {
        let m = &self.analysis.mc;
        McParams {
            sweeps: m.sweeps,
            burn_in: m.burn_in,
            replicas: m.replicas,
            seed: self
                .seed
                .wrapping_add((cell as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15)),
            thinning: m.thinning,
            scan: m.scan,
            start: m.start,
        }
    }

    pub fn interaction(&self) -> Result<Interaction> {
        Interaction::ising(self.model.beta, self.model.h, self.model.dim)
    }
}

/// Parameters and provenance recorded next to a scan.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScanMetadata {
    pub config: ScanConfig,
    pub config_hash: String,
    pub times: Vec<f64>,
    pub evidence_only: bool,
    pub note: String,
}

/// Rows of a time × volume scan, with the crossover estimate.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GapScanResult {
    pub metadata: ScanMetadata,
    pub rows: Vec<GapScanRow>,
    /// First time whose gap at the largest side is significant.
    pub crossover: Option<f64>,
    /// Times whose gap at the largest side is significant.
    pub significant_times: Vec<f64>,
}

pub const SCAN_NOTE: &str =
    "finite-volume evidence: significance means gap - sigmas*stderr > threshold at the largest side";

/// Run [`bad_config_gap`] for every time of the grid (in parallel) and
/// locate the first significant gap at the largest side.
pub fn transition_scan(cfg: &ScanConfig) -> Result<GapScanResult> {
    cfg.validate()?;
    let times = cfg.times()?;
    let u = cfg.interaction()?;
    let a = &cfg.analysis;
    let per_time: Vec<Vec<GapScanRow>> = times
        .par_iter()
        .enumerate()
        .map(|(i, &t)| {
            bad_config_gap(
                &u,
                cfg.model.h,
                t,
                cfg.dynamics.delta,
                &a.eta,
                &a.sides,
                a.collar,
                &cfg.mc_params(i),
                a.enumeration_cap,
            )
        })
        .collect::<Result<_>>()?;
    let largest = *a.sides.iter().max().expect("validated non-empty");
    let significant_times: Vec<f64> = per_time
        .iter()
        .flatten()
        .filter(|r| r.side == largest && r.significant(a.threshold, a.sigmas))
        .map(|r| r.t)
        .collect();
    let mut config = cfg.clone();
    config.output = None;
    Ok(GapScanResult {
        metadata: ScanMetadata {
            config_hash: json_hash(&config)?,
            config,
            times,
            evidence_only: a.evidence_only,
            note: SCAN_NOTE.into(),
        },
        rows: per_time.into_iter().flatten().collect(),
        crossover: significant_times.first().copied(),
        significant_times,
    })
}

pub const GAP_CSV_HEADER: [&str; 13] = [
    "t",
    "h12",
    "side",
    "collar",
    "eta",
    "boundary_pair",
    "plus_mean",
    "plus_stderr",
    "minus_mean",
    "minus_stderr",
    "gap",
    "stderr",
    "exact",
];

impl GapScanResult {
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(GAP_CSV_HEADER)?;
        for r in &self.rows {
            w.write_record([
                fmt_num(r.t),
                fmt_num(r.h12),
                r.side.to_string(),
                r.collar.to_string(),
                r.eta.clone(),
                r.boundary_pair.clone(),
                fmt_num(r.plus_mean),
                fmt_num(r.plus_stderr),
                fmt_num(r.minus_mean),
                fmt_num(r.minus_stderr),
                fmt_num(r.gap),
                fmt_num(r.stderr),
                r.exact.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    /// Metadata, crossover and config echo as pretty JSON.
    pub fn sidecar_json(&self) -> Result<String> {
        #[derive(Serialize)]
        struct Sidecar<'a> {
            metadata: &'a ScanMetadata,
            crossover: Option<f64>,
            significant_times: &'a [f64],
            rows: usize,
        }
        Ok(serde_json::to_string_pretty(&Sidecar {
            metadata: &self.metadata,
            crossover: self.crossover,
            significant_times: &self.significant_times,
            rows: self.rows.len(),
        })?)
    }
}

/// Read a scan config, or the config echoed inside a sidecar.
pub fn parse_scan_config(json: &str) -> Result<ScanConfig> {
    let value: serde_json::Value = serde_json::from_str(json)?;
    let inner = value.get("metadata").and_then(|m| m.get("config")).cloned();
    Ok(serde_json::from_value(inner.unwrap_or(value))?)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn config(beta: f64, eta: EtaKind, sides: Vec<usize>) -> ScanConfig {
        ScanConfig {
            label: None,
            model: ModelConfig {
                dim: 2,
                beta,
                h: 0.0,
            },
            dynamics: DynamicsConfig {
                delta: 1.0,
                times: TimeGrid::List {
                    values: vec![0.5, 2.0],
                },
            },
            analysis: AnalysisConfig {
                eta,
                sides,
                collar: 1,
                enumeration_cap: 16,
                threshold: 0.2,
                sigmas: 3.0,
                mc: MonteCarloConfig {
                    sweeps: 256,
                    burn_in: 64,
                    replicas: 2,
                    thinning: 1,
                    scan: ScanOrder::Systematic,
                    start: StartPolicy::Boundary,
                },
                evidence_only: false,
            },
            output: None,
            seed: 7,
        }
    }

    #[test]
    fn zero_coupling_gives_zero_exact_gap() {
        let res = transition_scan(&config(0.0, EtaKind::Alternating, vec![2, 3, 4])).unwrap();
        assert_eq!(res.rows.len(), 6);
        assert!(res.rows.iter().all(|r| r.exact && r.gap.abs() < 1e-14));
        assert_eq!(res.crossover, None);
    }

    #[test]
    fn compensating_eta_cancels_mean_field() {
        let t = compensation_time(0.05, 1.0).unwrap();
        match (EtaKind::Compensating { seed: 1 })
            .resolve(0.05, t, 1.0)
            .unwrap()
        {
            SpecialConfig::PerturbedAlternating { p, .. } => assert!((p - 1.0).abs() < 1e-8),
            other => panic!("{other:?}"),
        }
        match (EtaKind::Compensating { seed: 1 })
            .resolve(0.05, 0.5 * t, 1.0)
            .unwrap()
        {
            SpecialConfig::PerturbedAlternating { p, .. } => {
                let f = fields(0.5 * t, 1.0).unwrap();
                assert!((p - 0.05 / f.h12).abs() < 1e-12 && p < 1.0);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn csv_and_sidecar_round_trip() {
        let cfg = config(0.3, EtaKind::AllPlus, vec![2]);
        let res = transition_scan(&cfg).unwrap();
        let mut buf = Vec::new();
        res.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("t,h12,side,collar,eta,boundary_pair,"));
        assert_eq!(text.lines().count(), 3);
        let again = parse_scan_config(&res.sidecar_json().unwrap()).unwrap();
        assert_eq!(again, cfg);
    }

    #[test]
    fn kadanoff_grid_is_sorted() {
        let mut cfg = config(0.3, EtaKind::AllPlus, vec![2]);
        cfg.dynamics.times = TimeGrid::Kadanoff {
            fields: vec![3.0, 0.05],
        };
        let t = cfg.times().unwrap();
        assert!(t[0] < t[1]);
        assert!((fields(t[1], 1.0).unwrap().h12 - 0.05).abs() < 1e-12);
    }

    #[test]
    fn rejects_unknown_keys() {
        let json = r#"{"model":{"dim":2,"beta":1,"bogus":3},"dynamics":{"times":{"kind":"list","values":[1]}},
            "analysis":{"eta":{"kind":"alternating"},"sides":[2],"mc":{"sweeps":10}}}"#;
        assert!(parse_scan_config(json).is_err());
    }

    #[test]
    fn seeded_scan_is_reproducible() {
        let cfg = config(0.6, EtaKind::Alternating, vec![5]);
        let a = transition_scan(&cfg).unwrap();
        let b = transition_scan(&cfg).unwrap();
        assert!(!a.rows[0].exact);
        assert_eq!(a, b);
    }
}
