use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::interaction::{Interaction, LocalHamiltonian};
use crate::lattice::{Configuration, Spin};

use super::{exact_measure, GibbsSpec};

/// Number of batches used for batch-means standard errors.
pub const BATCHES: usize = 32;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScanOrder {
    /// Volume sites in row-major order, every sweep.
    #[default]
    Systematic,
    /// `|Λ|` uniformly chosen sites per sweep.
    Random,
}

/// Initial configuration of every chain.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StartPolicy {
    /// The boundary configuration copied onto the volume (all-plus when free).
    #[default]
    Boundary,
    AllPlus,
    AllMinus,
    /// The lowest-energy of all-plus, all-minus and the field-aligned
    /// configuration, judged by the finite-volume energy including the terms
    /// that touch the boundary. Ties fall back to [`StartPolicy::Boundary`].
    GroundState,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct McParams {
    pub sweeps: usize,
    #[serde(default)]
    pub burn_in: usize,
    #[serde(default = "one")]
    pub replicas: usize,
    #[serde(default)]
    pub seed: u64,
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

impl Default for McParams {
    fn default() -> Self {
        McParams {
            sweeps: 4096,
            burn_in: 512,
            replicas: 4,
            seed: 0,
            thinning: 1,
            scan: ScanOrder::Systematic,
            start: StartPolicy::Boundary,
        }
    }
}

impl McParams {
    pub fn validate(&self) -> Result<()> {
        if self.sweeps == 0 || self.replicas == 0 || self.thinning == 0 {
            return Err(invalid("sweeps, replicas and thinning must be >= 1"));
        }
        Ok(())
    }

    fn samples_per_replica(&self) -> usize {
        self.sweeps / self.thinning
    }
}

/// What to record after every kept sweep.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum Observable {
    /// Mean spin over the volume.
    Magnetization,
    /// The spin at one site.
    Spin { site: usize },
}

impl Observable {
    fn eval(&self, spins: &[Spin], volume: &[usize]) -> f64 {
        match *self {
            Observable::Magnetization => {
                volume.iter().map(|&s| spins[s] as f64).sum::<f64>() / volume.len() as f64
            }
            Observable::Spin { site } => spins[site] as f64,
        }
    }
}

/// A Monte Carlo (or closed-form) estimate.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub mean: f64,
    /// `sqrt(Σ se_r²) / R` from per-replica batch means.
    pub stderr: f64,
    /// Standard error of the replica means (zero for one replica).
    pub between_stderr: f64,
    pub replica_means: Vec<f64>,
    pub samples: usize,
}

impl Estimate {
    pub fn exact(value: f64) -> Self {
        Estimate {
            mean: value,
            stderr: 0.0,
            between_stderr: 0.0,
            replica_means: vec![value],
            samples: 0,
        }
    }

    /// The larger of the two error estimates.
    pub fn conservative_stderr(&self) -> f64 {
        self.stderr.max(self.between_stderr)
    }
}

/// `1 / (1 + exp(E₊ - E₋))`, the heat-bath probability of `+1`.
pub fn heat_bath_plus_probability(e_plus: f64, e_minus: f64) -> f64 {
    1.0 / (1.0 + (e_plus - e_minus).exp())
}

/// Replica `r` draws from stream `r` of the ChaCha8 generator seeded with `seed`.
pub fn replica_rng(seed: u64, replica: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(replica as u64);
    rng
}

/// A heat-bath Markov chain on one finite volume.
pub struct GlauberChain {
    local: LocalHamiltonian,
    spins: Vec<Spin>,
    sites: Vec<usize>,
    scan: ScanOrder,
    rng: ChaCha8Rng,
}

impl GlauberChain {
    pub fn new(
        spec: &GibbsSpec,
        start: StartPolicy,
        scan: ScanOrder,
        rng: ChaCha8Rng,
    ) -> Result<Self> {
        let local = spec.local()?;
        let spins = start_config(spec, start)?.spins().to_vec();
        Ok(GlauberChain {
            local,
            spins,
            sites: spec.volume.sites().to_vec(),
            scan,
            rng,
        })
    }

    pub fn spins(&self) -> &[Spin] {
        &self.spins
    }

    /// Resample one site from its conditional law.
    pub fn update(&mut self, site: usize) {
        let (ep, em) = self.local.local_pair(&self.spins, site);
        let p = heat_bath_plus_probability(ep, em);
        let u: f64 = self.rng.random();
        self.spins[site] = if u < p { 1 } else { -1 };
    }

    pub fn sweep(&mut self) {
        match self.scan {
            ScanOrder::Systematic => {
                for i in 0..self.sites.len() {
                    let s = self.sites[i];
                    self.update(s);
                }
            }
            ScanOrder::Random => {
                for _ in 0..self.sites.len() {
                    let s = self.sites[self.rng.random_range(0..self.sites.len())];
                    self.update(s);
                }
            }
        }
    }

    fn run(&mut self, params: &McParams, obs: &Observable) -> Vec<f64> {
        for _ in 0..params.burn_in {
            self.sweep();
        }
        let mut out = Vec::with_capacity(params.samples_per_replica());
        for k in 1..=params.sweeps {
            self.sweep();
            if k % params.thinning == 0 {
                out.push(obs.eval(&self.spins, &self.sites));
            }
        }
        out
    }
}

fn start_config(spec: &GibbsSpec, start: StartPolicy) -> Result<Configuration> {
    let base = spec.base_config();
    let fill = |spin: Spin| {
        let mut c = base.clone();
        for &s in spec.volume.sites() {
            c.spins_mut()[s] = spin;
        }
        c
    };
    Ok(match start {
        StartPolicy::Boundary => base.clone(),
        StartPolicy::AllPlus => fill(1),
        StartPolicy::AllMinus => fill(-1),
        StartPolicy::GroundState => {
            let local = spec.local()?;
            let mut aligned = base.clone();
            for &s in spec.volume.sites() {
                let f = effective_field(&spec.interaction, s);
                aligned.spins_mut()[s] = if f < 0.0 { -1 } else { 1 };
            }
            let candidates = [fill(1), fill(-1), aligned];
            let energies: Vec<f64> = candidates.iter().map(|c| local.energy(c.spins())).collect();
            let best = energies.iter().cloned().fold(f64::INFINITY, f64::min);
            let winners: Vec<usize> = (0..3).filter(|&i| energies[i] <= best + 1e-9).collect();
            if winners.len() == 1
                || winners
                    .iter()
                    .all(|&i| candidates[i] == candidates[winners[0]])
            {
                candidates[winners[0]].clone()
            } else {
                base.clone()
            }
        }
    })
}

/// Total single-site field on `site`: `-½(U({x},+) - U({x},-)) + site field`.
fn effective_field(u: &Interaction, site: usize) -> f64 {
    let uniform: f64 = u
        .classes()
        .iter()
        .filter(|c| c.size() == 1)
        .map(|c| 0.5 * (c.table()[1] - c.table()[0]))
        .sum();
    uniform + u.site_fields().map_or(0.0, |f| f[site])
}

/// Batch means over [`BATCHES`] batches (fewer when there are fewer samples).
fn batch_means(samples: &[f64]) -> (f64, f64) {
    let n = samples.len();
    let mean = samples.iter().sum::<f64>() / n as f64;
    let nb = BATCHES.min(n);
    if nb < 2 {
        return (mean, 0.0);
    }
    let size = n / nb;
    let batches: Vec<f64> = (0..nb)
        .map(|b| samples[b * size..(b + 1) * size].iter().sum::<f64>() / size as f64)
        .collect();
    let bm = batches.iter().sum::<f64>() / nb as f64;
    let var = batches.iter().map(|x| (x - bm).powi(2)).sum::<f64>() / (nb - 1) as f64;
    (mean, (var / nb as f64).sqrt())
}

/// Estimate `⟨obs⟩` under `spec` by heat-bath sampling. Replicas run in
/// parallel; replica `r` uses [`replica_rng`]`(params.seed, r)`. A
/// single-site volume is evaluated in closed form.
pub fn glauber_sample(spec: &GibbsSpec, params: &McParams, obs: Observable) -> Result<Estimate> {
    params.validate()?;
    if let Observable::Spin { site } = obs {
        if !spec.volume.contains(site) {
            return Err(Error::InvalidParameter(format!(
                "site {site} is not in the volume"
            )));
        }
    }
    if spec.volume.len() == 1 {
        let m = exact_measure(spec, 1)?;
        return Ok(Estimate::exact(m.mean_spin(spec.volume.sites()[0])?));
    }
    if params.samples_per_replica() == 0 {
        return Err(invalid("thinning exceeds the number of sweeps"));
    }
    let per_replica: Vec<(f64, f64)> = (0..params.replicas)
        .into_par_iter()
        .map(|r| -> Result<(f64, f64)> {
            let mut chain =
                GlauberChain::new(spec, params.start, params.scan, replica_rng(params.seed, r))?;
            Ok(batch_means(&chain.run(params, &obs)))
        })
        .collect::<Result<_>>()?;
    Ok(combine(&per_replica, params.samples_per_replica()))
}

/// Raw observable trace of one replica, for diagnostics and determinism checks.
pub fn glauber_trace(
    spec: &GibbsSpec,
    params: &McParams,
    obs: Observable,
    replica: usize,
) -> Result<Vec<f64>> {
    params.validate()?;
    let mut chain = GlauberChain::new(
        spec,
        params.start,
        params.scan,
        replica_rng(params.seed, replica),
    )?;
    Ok(chain.run(params, &obs))
}

fn combine(per_replica: &[(f64, f64)], samples: usize) -> Estimate {
    let r = per_replica.len() as f64;
    let replica_means: Vec<f64> = per_replica.iter().map(|p| p.0).collect();
    let mean = replica_means.iter().sum::<f64>() / r;
    let stderr = per_replica.iter().map(|p| p.1 * p.1).sum::<f64>().sqrt() / r;
    let between_stderr = if per_replica.len() > 1 {
        let var = replica_means
            .iter()
            .map(|m| (m - mean).powi(2))
            .sum::<f64>()
            / (r - 1.0);
        (var / r).sqrt()
    } else {
        0.0
    };
    Estimate {
        mean,
        stderr,
        between_stderr,
        replica_means,
        samples: samples * per_replica.len(),
    }
}
