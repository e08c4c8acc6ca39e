use crate::error::{Error, Result};
use crate::lattice::Configuration;

use super::{GibbsSpec, StateSpace};

pub const DEFAULT_ENUMERATION_CAP: usize = 20;

/// A finite-volume Gibbs measure tabulated over every state of the volume.
#[derive(Clone, Debug)]
pub struct ExactMeasure {
    space: StateSpace,
    energies: Vec<f64>,
    probs: Vec<f64>,
    log_z: f64,
}

/// Enumerate `μ^{U,ζ}_Λ(σ) = exp(-H^ζ_Λ(σ)) / Z` for volumes up to `cap` sites.
pub fn exact_measure(spec: &GibbsSpec, cap: usize) -> Result<ExactMeasure> {
    let space = spec.state_space();
    space.check_cap(cap, "use glauber_sample for larger volumes")?;
    let local = spec.local()?;
    let mut spins = space.base().spins().to_vec();
    let energies: Vec<f64> = (0..space.n_states())
        .map(|s| {
            space.write_state(s, &mut spins);
            local.energy(&spins)
        })
        .collect();
    Ok(ExactMeasure::from_energies(space, energies))
}

impl ExactMeasure {
    pub(crate) fn from_energies(space: StateSpace, energies: Vec<f64>) -> Self {
        let min = energies.iter().cloned().fold(f64::INFINITY, f64::min);
        let weights: Vec<f64> = energies.iter().map(|e| (min - e).exp()).collect();
        let sum: f64 = weights.iter().sum();
        let log_z = -min + sum.ln();
        let probs = weights.into_iter().map(|w| w / sum).collect();
        ExactMeasure {
            space,
            energies,
            probs,
            log_z,
        }
    }

    pub fn space(&self) -> &StateSpace {
        &self.space
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn energies(&self) -> &[f64] {
        &self.energies
    }

    pub fn log_partition(&self) -> f64 {
        self.log_z
    }

    pub fn prob_of(&self, config: &Configuration) -> f64 {
        self.probs[self.space.state_of(config)]
    }

    pub fn expectation<F: FnMut(usize) -> f64>(&self, mut f: F) -> f64 {
        self.probs.iter().enumerate().map(|(s, p)| p * f(s)).sum()
    }

    /// `⟨σ(site)⟩`.
    pub fn mean_spin(&self, site: usize) -> Result<f64> {
        let pos = self.position(site)?;
        Ok(self.expectation(|s| StateSpace::spin(s, pos) as f64))
    }

    pub fn plus_marginal(&self, site: usize) -> Result<f64> {
        let pos = self.position(site)?;
        Ok(self.expectation(|s| {
            if StateSpace::spin(s, pos) > 0 {
                1.0
            } else {
                0.0
            }
        }))
    }

    pub fn magnetization(&self) -> f64 {
        let n = self.space.volume_size() as f64;
        self.expectation(|s| (n - 2.0 * s.count_ones() as f64) / n)
    }

    /// `μ(σ(site) = +1 | σ = context off site)`, by summing the table.
    pub fn conditional(&self, site: usize, context: &Configuration) -> Result<f64> {
        let pos = self.position(site)?;
        let base = self.space.state_of(context) & !(1 << pos);
        let plus = self.probs[base];
        let minus = self.probs[base | 1 << pos];
        Ok(plus / (plus + minus))
    }

    fn position(&self, site: usize) -> Result<usize> {
        self.space
            .position(site)
            .ok_or_else(|| Error::InvalidParameter(format!("site {site} is not in the volume")))
    }
}

/// `μ_Γ(σ(x) = +1 | context)` from the single-site Boltzmann weights.
/// Only terms containing `x` enter, so the value depends on the context
/// within the interaction range of `x` alone.
pub fn conditional_prob(spec: &GibbsSpec, site: usize, context: &Configuration) -> Result<f64> {
    spec.lattice.check_site(site)?;
    if !spec.volume.contains(site) {
        return Err(Error::InvalidParameter(format!(
            "site {site} is not in the volume"
        )));
    }
    let local = spec.local()?;
    let patched = context.patch(&spec.base_config(), &spec.volume)?;
    let (e_plus, e_minus) = local.local_pair(patched.spins(), site);
    Ok(super::heat_bath_plus_probability(e_plus, e_minus))
}
