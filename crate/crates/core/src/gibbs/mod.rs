//! Finite-volume Gibbs measures: exact enumeration, the 1D transfer matrix,
//! heat-bath Monte Carlo, and two-boundary sensitivity probes.

mod exact;
mod gap;
mod sampler;
mod transfer;

use std::sync::Arc;

pub use exact::{conditional_prob, exact_measure, ExactMeasure, DEFAULT_ENUMERATION_CAP};
pub use gap::{two_bc_gap, BoxSystem, GapRow};
pub use sampler::{
    glauber_sample, glauber_trace, heat_bath_plus_probability, replica_rng, Estimate, GlauberChain,
    McParams, Observable, ScanOrder, StartPolicy,
};
pub use transfer::{transfer_matrix_1d, ChainBoundary, TransferResult};

use crate::error::{Error, Result};
use crate::interaction::{Interaction, LocalHamiltonian, Summation};
use crate::lattice::{Configuration, Lattice, Region, Spin};

/// Boundary condition of a finite-volume measure.
#[derive(Clone, Debug, PartialEq)]
pub enum Boundary {
    /// Only terms inside the volume.
    Free,
    /// Terms touching the volume, with spins outside read from this configuration.
    Fixed(Configuration),
}

/// `μ^{U,ζ}_Λ`: an interaction, a volume inside a lattice and a boundary condition.
#[derive(Clone, Debug)]
pub struct GibbsSpec {
    pub interaction: Interaction,
    pub lattice: Arc<Lattice>,
    pub volume: Region,
    pub boundary: Boundary,
}

impl GibbsSpec {
    pub fn new(
        interaction: Interaction,
        lattice: Arc<Lattice>,
        volume: Region,
        boundary: Boundary,
    ) -> Result<Self> {
        if volume.lattice_len() != lattice.len() {
            return Err(Error::Mismatch("volume belongs to another lattice".into()));
        }
        if let Boundary::Fixed(z) = &boundary {
            if z.lattice() != &lattice {
                return Err(Error::Mismatch(
                    "boundary configuration lives on another lattice".into(),
                ));
            }
        }
        Ok(GibbsSpec {
            interaction,
            lattice,
            volume,
            boundary,
        })
    }

    /// Whole-torus measure (the volume is every site).
    pub fn torus(interaction: Interaction, lattice: Arc<Lattice>) -> Result<Self> {
        let volume = Region::all(&lattice);
        Self::new(interaction, lattice, volume, Boundary::Free)
    }

    pub fn summation(&self) -> Summation {
        match self.boundary {
            Boundary::Free => Summation::Inside,
            Boundary::Fixed(_) => Summation::Touching,
        }
    }

    pub fn local(&self) -> Result<LocalHamiltonian> {
        self.interaction
            .localize(&self.lattice, &self.volume, self.summation())
    }

    /// Configuration supplying the spins off the volume.
    pub fn base_config(&self) -> Configuration {
        match &self.boundary {
            Boundary::Free => Configuration::uniform(self.lattice.clone(), 1),
            Boundary::Fixed(z) => z.clone(),
        }
    }

    pub fn state_space(&self) -> StateSpace {
        StateSpace::new(self.base_config(), &self.volume)
    }

    pub fn with_interaction(&self, interaction: Interaction) -> GibbsSpec {
        GibbsSpec {
            interaction,
            ..self.clone()
        }
    }

    pub fn with_boundary(&self, boundary: Boundary) -> GibbsSpec {
        GibbsSpec {
            boundary,
            ..self.clone()
        }
    }
}

/// Enumeration of `Ω_Λ = {-1,+1}^Λ` over a fixed outside configuration.
///
/// State `s` has bit `i` set exactly when the `i`-th volume site (in
/// row-major order) carries `-1`; state `0` is all-plus on the volume.
#[derive(Clone, Debug, PartialEq)]
pub struct StateSpace {
    base: Configuration,
    sites: Vec<usize>,
}

impl StateSpace {
    pub fn new(base: Configuration, volume: &Region) -> Self {
        StateSpace {
            base,
            sites: volume.sites().to_vec(),
        }
    }

    pub fn sites(&self) -> &[usize] {
        &self.sites
    }

    pub fn base(&self) -> &Configuration {
        &self.base
    }

    pub fn lattice(&self) -> &Arc<Lattice> {
        self.base.lattice()
    }

    pub fn volume_size(&self) -> usize {
        self.sites.len()
    }

    pub fn n_states(&self) -> usize {
        1usize << self.sites.len()
    }

    /// Position of a lattice site in the volume ordering.
    pub fn position(&self, site: usize) -> Option<usize> {
        self.sites.binary_search(&site).ok()
    }

    pub fn write_state(&self, state: usize, spins: &mut [Spin]) {
        for (i, &s) in self.sites.iter().enumerate() {
            spins[s] = if state >> i & 1 == 1 { -1 } else { 1 };
        }
    }

    pub fn configuration(&self, state: usize) -> Configuration {
        let mut c = self.base.clone();
        self.write_state(state, c.spins_mut());
        c
    }

    pub fn state_of(&self, config: &Configuration) -> usize {
        self.sites.iter().enumerate().fold(
            0,
            |acc, (i, &s)| if config.get(s) < 0 { acc | 1 << i } else { acc },
        )
    }

    /// Spin of volume position `pos` in `state`.
    pub fn spin(state: usize, pos: usize) -> Spin {
        if state >> pos & 1 == 1 {
            -1
        } else {
            1
        }
    }

    pub(crate) fn check_cap(&self, cap: usize, hint: &'static str) -> Result<()> {
        if self.sites.len() > cap {
            return Err(Error::VolumeTooLarge {
                sites: self.sites.len(),
                cap,
                hint,
            });
        }
        Ok(())
    }
}

/// Total-variation distance `½ Σ |p - q|`.
pub fn total_variation(p: &[f64], q: &[f64]) -> f64 {
    0.5 * p.iter().zip(q).map(|(a, b)| (a - b).abs()).sum::<f64>()
}
