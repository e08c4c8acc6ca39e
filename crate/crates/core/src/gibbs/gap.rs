use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::interaction::Interaction;
use crate::lattice::{Configuration, Lattice, Region, Topology};

use super::{exact_measure, glauber_sample, Boundary, Estimate, GibbsSpec, McParams, Observable};

/// A cube of side `side` centred in an open box with a collar of width `collar`.
#[derive(Clone, Debug)]
pub struct BoxSystem {
    pub lattice: Arc<Lattice>,
    pub volume: Region,
    /// The observed site (the middle of the cube).
    pub center: usize,
    pub side: usize,
}

impl BoxSystem {
    pub fn new(dim: usize, side: usize, collar: usize) -> Result<Self> {
        let lattice = Arc::new(Lattice::cube(dim, side + 2 * collar, Topology::Open)?);
        let volume = Region::cube(&lattice, &vec![collar; dim], side)?;
        let center = lattice.center();
        Ok(BoxSystem {
            lattice,
            volume,
            center,
            side,
        })
    }

    pub fn spec(&self, u: Interaction, boundary_spin: i8) -> Result<GibbsSpec> {
        let zeta = Configuration::uniform(self.lattice.clone(), boundary_spin);
        GibbsSpec::new(
            u,
            self.lattice.clone(),
            self.volume.clone(),
            Boundary::Fixed(zeta),
        )
    }
}

/// `⟨σ(centre)⟩` under plus and minus boundaries for one cube side.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GapRow {
    pub side: usize,
    pub plus: Estimate,
    pub minus: Estimate,
    pub gap: f64,
    pub stderr: f64,
    /// True when both means come from exact enumeration.
    pub exact: bool,
}

impl GapRow {
    /// `gap - k·stderr > threshold`.
    pub fn significant(&self, threshold: f64, k: f64) -> bool {
        self.gap - k * self.stderr > threshold
    }
}

/// Plus/minus boundary magnetization gap at the centre of nested cubes.
///
/// Each cube sits in a box with a collar of width `collar` (at least the
/// interaction range). `build` receives each [`BoxSystem`] and returns the
/// interaction to use there, so site fields can follow the box lattice.
/// Cubes of at most `cap` sites are enumerated exactly; larger ones are
/// sampled with `params`.
pub fn two_bc_gap<F>(
    dim: usize,
    sides: &[usize],
    collar: usize,
    build: F,
    params: &McParams,
    cap: usize,
) -> Result<Vec<GapRow>>
where
    F: Fn(&BoxSystem) -> Result<Interaction>,
{
    sides
        .iter()
        .map(|&side| {
            let sys = BoxSystem::new(dim, side, collar)?;
            let u = build(&sys)?;
            gap_row(&sys, u, params, cap)
        })
        .collect()
}

fn gap_row(sys: &BoxSystem, u: Interaction, params: &McParams, cap: usize) -> Result<GapRow> {
    let plus_spec = sys.spec(u.clone(), 1)?;
    let minus_spec = sys.spec(u, -1)?;
    let obs = Observable::Spin { site: sys.center };
    let exact = sys.volume.len() <= cap;
    let (plus, minus) = if exact {
        (
            Estimate::exact(exact_measure(&plus_spec, cap)?.mean_spin(sys.center)?),
            Estimate::exact(exact_measure(&minus_spec, cap)?.mean_spin(sys.center)?),
        )
    } else {
        (
            glauber_sample(&plus_spec, params, obs)?,
            glauber_sample(&minus_spec, params, obs)?,
        )
    };
    let gap = plus.mean - minus.mean;
    let stderr = plus
        .conservative_stderr()
        .hypot(minus.conservative_stderr());
    Ok(GapRow {
        side: sys.side,
        plus,
        minus,
        gap,
        stderr,
        exact,
    })
}
