use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::gibbs::{exact_measure, Boundary, GibbsSpec, StateSpace};
use crate::interaction::{Interaction, LocalHamiltonian, Summation};
use crate::lattice::{Configuration, Lattice, Region, Spin};

/// Ratio between the two time conventions in use.
///
/// [`RateSpec`] times use the flip-rate-1 baseline (`c ≡ 1` relaxes
/// magnetization as `e^{-2t}`), while single-site kernels and dynamical
/// fields use the unit-relaxation generator. A flip-rate-1 time `t` is
/// kernel time `TIME_SCALE · t`; [`RateSpec::product`] rates are already in
/// kernel time.
pub const TIME_SCALE: f64 = 2.0;

/// Where the flip rates come from.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum RateSource {
    /// `c(x,σ) = rate` everywhere.
    Uniform { rate: f64 },
    /// Independent biased flips: `+ → -` at `(1-ε)/2`, `- → +` at `(1+ε)/2`.
    Product { epsilon: f64 },
    /// `c(x,σ) = exp(½ Σ_{A∋x} [U(A,σ) - U(A,σ^x)])`, reversible for `exp(-H_U)`.
    Interaction { interaction: Interaction },
    /// `c(x,σ) = 1 - strength · σ(x) · (mean neighbour spin)`, an unbiased
    /// perturbation of independent flips with `c(x,σ) = c(x,-σ)`.
    Alignment { strength: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RateBounds {
    /// Smallest rate (the `ε` of `0 < ε ≤ c ≤ M`).
    pub min: f64,
    pub max: f64,
}

/// Flip rates on one finite volume, with spins off the volume frozen.
#[derive(Clone, Debug)]
pub struct RateSpec {
    source: RateSource,
    volume: Region,
    base: Configuration,
    local: Option<LocalHamiltonian>,
    boundary_free: bool,
    neighbors: Vec<Vec<usize>>,
}

impl RateSpec {
    fn build(
        source: RateSource,
        lattice: Arc<Lattice>,
        volume: Region,
        boundary: Boundary,
    ) -> Result<Self> {
        let boundary_free = matches!(boundary, Boundary::Free);
        let base = match boundary {
            Boundary::Free => Configuration::uniform(lattice.clone(), 1),
            Boundary::Fixed(z) => {
                if z.lattice() != &lattice {
                    return Err(Error::Mismatch(
                        "boundary configuration lives on another lattice".into(),
                    ));
                }
                z
            }
        };
        let local = match &source {
            RateSource::Interaction { interaction } => {
                let mode = if boundary_free {
                    Summation::Inside
                } else {
                    Summation::Touching
                };
                Some(interaction.localize(&lattice, &volume, mode)?)
            }
            _ => None,
        };
        let neighbors = match &source {
            RateSource::Alignment { .. } => (0..lattice.len())
                .map(|s| {
                    let n = lattice.neighbors(s);
                    if boundary_free {
                        n.into_iter().filter(|&y| volume.contains(y)).collect()
                    } else {
                        n
                    }
                })
                .collect(),
            _ => Vec::new(),
        };
        Ok(RateSpec {
            source,
            volume,
            base,
            local,
            boundary_free,
            neighbors,
        })
    }

    pub fn uniform(lattice: Arc<Lattice>, volume: Region, rate: f64) -> Result<Self> {
        if !(rate > 0.0) || !rate.is_finite() {
            return Err(invalid(format!(
                "rate must be positive and finite, got {rate}"
            )));
        }
        Self::build(
            RateSource::Uniform { rate },
            lattice,
            volume,
            Boundary::Free,
        )
    }

    /// Independent flips whose single-site kernel is
    /// [`single_site_kernel`](super::single_site_kernel)`(t, ε)`.
    pub fn product(lattice: Arc<Lattice>, volume: Region, epsilon: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&epsilon) {
            return Err(invalid(format!("bias must lie in [0, 1), got {epsilon}")));
        }
        Self::build(
            RateSource::Product { epsilon },
            lattice,
            volume,
            Boundary::Free,
        )
    }

    pub fn alignment(
        lattice: Arc<Lattice>,
        volume: Region,
        strength: f64,
        boundary: Boundary,
    ) -> Result<Self> {
        if !(0.0..1.0).contains(&strength) {
            return Err(invalid(format!(
                "perturbation strength must lie in [0, 1), got {strength}"
            )));
        }
        Self::build(
            RateSource::Alignment { strength },
            lattice,
            volume,
            boundary,
        )
    }

    pub fn source(&self) -> &RateSource {
        &self.source
    }

    pub fn lattice(&self) -> &Arc<Lattice> {
        self.base.lattice()
    }

    pub fn volume(&self) -> &Region {
        &self.volume
    }

    /// Spins off the volume.
    pub fn base(&self) -> &Configuration {
        &self.base
    }

    pub fn boundary(&self) -> Boundary {
        if self.boundary_free {
            Boundary::Free
        } else {
            Boundary::Fixed(self.base.clone())
        }
    }

    /// Distance beyond which a spin cannot influence a rate.
    pub fn range(&self) -> usize {
        match &self.source {
            RateSource::Uniform { .. } | RateSource::Product { .. } => 0,
            RateSource::Interaction { interaction } => interaction.range(),
            RateSource::Alignment { .. } => 1,
        }
    }

    /// Rate of flipping `site` in the full-lattice configuration `spins`.
    pub fn rate(&self, spins: &[Spin], site: usize) -> f64 {
        match &self.source {
            RateSource::Uniform { rate } => *rate,
            RateSource::Product { epsilon } => {
                if spins[site] > 0 {
                    (1.0 - epsilon) / 2.0
                } else {
                    (1.0 + epsilon) / 2.0
                }
            }
            RateSource::Interaction { .. } => {
                let local = self
                    .local
                    .as_ref()
                    .expect("interaction rates are localized");
                (-0.5 * local.delta(spins, site)).exp()
            }
            RateSource::Alignment { strength } => {
                let n = &self.neighbors[site];
                if n.is_empty() {
                    return 1.0;
                }
                let mean = n.iter().map(|&y| spins[y] as f64).sum::<f64>() / n.len() as f64;
                1.0 - strength * spins[site] as f64 * mean
            }
        }
    }

    /// `ε ≤ c ≤ M`. For interaction rates `M = exp(½ Σ_{A∋x} osc U(A,·))`
    /// and `ε = 1/M`.
    pub fn bounds(&self) -> RateBounds {
        match &self.source {
            RateSource::Uniform { rate } => RateBounds {
                min: *rate,
                max: *rate,
            },
            RateSource::Product { epsilon } => RateBounds {
                min: (1.0 - epsilon) / 2.0,
                max: (1.0 + epsilon) / 2.0,
            },
            RateSource::Interaction { interaction } => {
                let classes: f64 = interaction
                    .classes()
                    .iter()
                    .map(|c| c.size() as f64 * c.oscillation())
                    .sum();
                let fields = interaction
                    .site_fields()
                    .map_or(0.0, |f| f.iter().fold(0.0f64, |m, v| m.max(2.0 * v.abs())));
                let m = (0.5 * (classes + fields)).exp();
                RateBounds {
                    min: 1.0 / m,
                    max: m,
                }
            }
            RateSource::Alignment { strength } => RateBounds {
                min: 1.0 - strength,
                max: 1.0 + strength,
            },
        }
    }

    /// True when each rate depends on the flipping spin alone.
    pub fn is_product(&self) -> bool {
        matches!(
            self.source,
            RateSource::Uniform { .. } | RateSource::Product { .. }
        )
    }

    /// Volume sites whose rate can change when `site` flips (including `site`).
    pub fn dependents(&self, site: usize) -> Vec<usize> {
        match &self.source {
            RateSource::Uniform { .. } | RateSource::Product { .. } => vec![site],
            RateSource::Interaction { .. } => {
                let local = self
                    .local
                    .as_ref()
                    .expect("interaction rates are localized");
                let mut v = local.interacting_sites(site);
                v.retain(|&y| self.volume.contains(y));
                v.push(site);
                v.sort_unstable();
                v
            }
            RateSource::Alignment { .. } => {
                let mut v: Vec<usize> = self
                    .lattice()
                    .neighbors(site)
                    .into_iter()
                    .filter(|&y| self.volume.contains(y))
                    .collect();
                v.push(site);
                v.sort_unstable();
                v
            }
        }
    }

    /// The reversible law on the volume, when one is known in closed form.
    pub fn reversible_law(&self, space: &StateSpace) -> Result<Option<Vec<f64>>> {
        let n = space.n_states();
        Ok(match &self.source {
            RateSource::Uniform { .. } => Some(vec![1.0 / n as f64; n]),
            RateSource::Product { epsilon } => {
                let k = space.volume_size();
                Some(
                    (0..n)
                        .map(|s| {
                            let minus = s.count_ones() as i32;
                            ((1.0 + epsilon) / 2.0).powi(k as i32 - minus)
                                * ((1.0 - epsilon) / 2.0).powi(minus)
                        })
                        .collect(),
                )
            }
            RateSource::Interaction { interaction } => {
                let spec = GibbsSpec::new(
                    interaction.clone(),
                    self.lattice().clone(),
                    self.volume.clone(),
                    self.boundary(),
                )?;
                Some(exact_measure(&spec, space.volume_size())?.probs().to_vec())
            }
            RateSource::Alignment { .. } => None,
        })
    }
}

/// Rates `c(x,σ) = exp(-½ [H(σ^x) - H(σ)])` built from `U_μ` on `volume`.
/// A free boundary uses the free Hamiltonian, a fixed one the
/// boundary-condition Hamiltonian.
pub fn rates_from_interaction(
    u_mu: &Interaction,
    lattice: Arc<Lattice>,
    volume: Region,
    boundary: Boundary,
) -> Result<RateSpec> {
    RateSpec::build(
        RateSource::Interaction {
            interaction: u_mu.clone(),
        },
        lattice,
        volume,
        boundary,
    )
}
