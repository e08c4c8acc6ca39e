//! Finite hypercubic lattices, spin configurations and regions.
//!
//! Sites are indexed row-major: the last axis varies fastest, so on a
//! `[2, 2]` box the order is `(0,0), (0,1), (1,0), (1,1)`. Every CSV table
//! and state enumeration in the crate follows this order.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A spin value, always `+1` or `-1`.
pub type Spin = i8;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Topology {
    Open,
    Torus,
}

/// A finite box of `Z^d`, either with open boundaries or periodic.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Lattice {
    extents: Vec<usize>,
    strides: Vec<usize>,
    topology: Topology,
    len: usize,
}

impl Lattice {
    pub fn new(extents: Vec<usize>, topology: Topology) -> Result<Self> {
        if extents.is_empty() {
            return Err(Error::InvalidLattice("dimension must be at least 1".into()));
        }
        if extents.contains(&0) {
            return Err(Error::InvalidLattice(format!(
                "side lengths must be >= 1, got {extents:?}"
            )));
        }
        let mut strides = vec![1usize; extents.len()];
        for axis in (0..extents.len() - 1).rev() {
            strides[axis] = strides[axis + 1] * extents[axis + 1];
        }
        let len = extents.iter().product();
        Ok(Lattice {
            extents,
            strides,
            topology,
            len,
        })
    }

    /// A `d`-dimensional cube of side `side`.
    pub fn cube(dim: usize, side: usize, topology: Topology) -> Result<Self> {
        Self::new(vec![side; dim], topology)
    }

    pub fn dim(&self) -> usize {
        self.extents.len()
    }

    pub fn extents(&self) -> &[usize] {
        &self.extents
    }

    pub fn topology(&self) -> Topology {
        self.topology
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn check_site(&self, site: usize) -> Result<()> {
        if site < self.len {
            Ok(())
        } else {
            Err(Error::InvalidSite {
                site,
                len: self.len,
            })
        }
    }

    pub fn coords(&self, site: usize) -> Vec<usize> {
        self.strides
            .iter()
            .zip(&self.extents)
            .map(|(&s, &e)| (site / s) % e)
            .collect()
    }

    pub fn index(&self, coords: &[usize]) -> Option<usize> {
        if coords.len() != self.dim() {
            return None;
        }
        let mut idx = 0;
        for ((&c, &e), &s) in coords.iter().zip(&self.extents).zip(&self.strides) {
            if c >= e {
                return None;
            }
            idx += c * s;
        }
        Some(idx)
    }

    /// Site reached from `coords` (possibly off-lattice) after wrapping on a
    /// torus; `None` if the point lies outside an open box.
    pub fn locate(&self, coords: &[i64]) -> Option<usize> {
        let mut idx = 0;
        for ((&c, &e), &s) in coords.iter().zip(&self.extents).zip(&self.strides) {
            let e = e as i64;
            let c = match self.topology {
                Topology::Torus => c.rem_euclid(e),
                Topology::Open if (0..e).contains(&c) => c,
                Topology::Open => return None,
            };
            idx += c as usize * s;
        }
        Some(idx)
    }

    /// `site + offset`, wrapped on a torus.
    pub fn shift(&self, site: usize, offset: &[i64]) -> Option<usize> {
        let c: Vec<i64> = self
            .coords(site)
            .into_iter()
            .zip(offset)
            .map(|(c, &o)| c as i64 + o)
            .collect();
        self.locate(&c)
    }

    /// Sum of coordinates modulo 2.
    pub fn parity(&self, site: usize) -> usize {
        self.coords(site).iter().sum::<usize>() % 2
    }

    /// The site with coordinates `extent / 2` on every axis.
    pub fn center(&self) -> usize {
        let c: Vec<usize> = self.extents.iter().map(|e| e / 2).collect();
        self.index(&c).expect("center is inside the box")
    }

    /// Nearest neighbours (wrapping on a torus, deduplicated).
    pub fn neighbors(&self, site: usize) -> Vec<usize> {
        let mut out = Vec::with_capacity(2 * self.dim());
        let mut offset = vec![0i64; self.dim()];
        for axis in 0..self.dim() {
            for step in [-1i64, 1] {
                offset[axis] = step;
                if let Some(n) = self.shift(site, &offset) {
                    if n != site && !out.contains(&n) {
                        out.push(n);
                    }
                }
            }
            offset[axis] = 0;
        }
        out
    }

    /// ℓ∞ distance, measured along the torus when periodic.
    pub fn distance(&self, a: usize, b: usize) -> usize {
        let ca = self.coords(a);
        let cb = self.coords(b);
        ca.iter()
            .zip(&cb)
            .zip(&self.extents)
            .map(|((&x, &y), &e)| {
                let d = x.abs_diff(y);
                match self.topology {
                    Topology::Torus => d.min(e - d),
                    Topology::Open => d,
                }
            })
            .max()
            .unwrap_or(0)
    }
}

/// A spin assignment on every site of a lattice.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Configuration {
    lattice: Arc<Lattice>,
    spins: Vec<Spin>,
}

impl Configuration {
    pub fn uniform(lattice: Arc<Lattice>, spin: Spin) -> Self {
        let spins = vec![spin.signum(); lattice.len()];
        Configuration { lattice, spins }
    }

    pub fn from_spins(lattice: Arc<Lattice>, spins: Vec<Spin>) -> Result<Self> {
        if spins.len() != lattice.len() {
            return Err(Error::Mismatch(format!(
                "{} spins for a lattice of {} sites",
                spins.len(),
                lattice.len()
            )));
        }
        if spins.iter().any(|&s| s != 1 && s != -1) {
            return Err(Error::InvalidParameter("spins must be +1 or -1".into()));
        }
        Ok(Configuration { lattice, spins })
    }

    pub fn lattice(&self) -> &Arc<Lattice> {
        &self.lattice
    }

    pub fn spins(&self) -> &[Spin] {
        &self.spins
    }

    pub(crate) fn spins_mut(&mut self) -> &mut [Spin] {
        &mut self.spins
    }

    pub fn get(&self, site: usize) -> Spin {
        self.spins[site]
    }

    pub fn set(&mut self, site: usize, spin: Spin) -> Result<()> {
        self.lattice.check_site(site)?;
        if spin != 1 && spin != -1 {
            return Err(Error::InvalidParameter("spins must be +1 or -1".into()));
        }
        self.spins[site] = spin;
        Ok(())
    }

    /// `σ^x`: this configuration with the spin at `site` reversed.
    pub fn flip(&self, site: usize) -> Result<Self> {
        let mut out = self.clone();
        out.flip_in_place(site)?;
        Ok(out)
    }

    pub fn flip_in_place(&mut self, site: usize) -> Result<()> {
        self.lattice.check_site(site)?;
        self.spins[site] = -self.spins[site];
        Ok(())
    }

    /// `σ_Λ ζ_{Λ^c}`: `self` on `region`, `outside` everywhere else.
    pub fn patch(&self, outside: &Configuration, region: &Region) -> Result<Self> {
        if self.lattice != outside.lattice {
            return Err(Error::Mismatch(
                "patching configurations on different lattices".into(),
            ));
        }
        let mut out = outside.clone();
        for &s in region.sites() {
            out.spins[s] = self.spins[s];
        }
        Ok(out)
    }

    /// Translate by `shift` on a torus: the result at `x + shift` equals `self` at `x`.
    pub fn translate(&self, shift: &[i64]) -> Result<Self> {
        if self.lattice.topology() != Topology::Torus {
            return Err(Error::Unsupported("translation requires a torus".into()));
        }
        if shift.len() != self.lattice.dim() {
            return Err(Error::Mismatch("shift dimension".into()));
        }
        let mut spins = vec![1; self.spins.len()];
        for (site, &s) in self.spins.iter().enumerate() {
            let to = self.lattice.shift(site, shift).expect("torus shift");
            spins[to] = s;
        }
        Ok(Configuration {
            lattice: self.lattice.clone(),
            spins,
        })
    }

    pub fn magnetization(&self) -> f64 {
        self.spins.iter().map(|&s| s as f64).sum::<f64>() / self.spins.len() as f64
    }
}

/// A set of sites of one lattice, kept sorted.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Region {
    sites: Vec<usize>,
    lattice_len: usize,
}

impl Region {
    pub fn new(lattice: &Lattice, mut sites: Vec<usize>) -> Result<Self> {
        for &s in &sites {
            lattice.check_site(s)?;
        }
        sites.sort_unstable();
        sites.dedup();
        Ok(Region {
            sites,
            lattice_len: lattice.len(),
        })
    }

    pub fn all(lattice: &Lattice) -> Self {
        Region {
            sites: (0..lattice.len()).collect(),
            lattice_len: lattice.len(),
        }
    }

    /// Sites whose coordinates lie in `[lo, lo + side)` on every axis.
    pub fn cube(lattice: &Lattice, lo: &[usize], side: usize) -> Result<Self> {
        if lo.len() != lattice.dim() {
            return Err(Error::Mismatch("corner dimension".into()));
        }
        let sites = (0..lattice.len())
            .filter(|&s| {
                lattice
                    .coords(s)
                    .iter()
                    .zip(lo)
                    .all(|(&c, &l)| c >= l && c < l + side)
            })
            .collect::<Vec<_>>();
        if sites.len() != side.pow(lattice.dim() as u32) {
            return Err(Error::InvalidParameter(format!(
                "cube of side {side} at {lo:?} does not fit in {:?}",
                lattice.extents()
            )));
        }
        Ok(Region {
            sites,
            lattice_len: lattice.len(),
        })
    }

    /// Sites within ℓ∞ distance `radius` of `center`.
    pub fn ball(lattice: &Lattice, center: usize, radius: usize) -> Result<Self> {
        lattice.check_site(center)?;
        let sites = (0..lattice.len())
            .filter(|&s| lattice.distance(s, center) <= radius)
            .collect();
        Ok(Region {
            sites,
            lattice_len: lattice.len(),
        })
    }

    /// `outer ∖ inner`.
    pub fn annulus(inner: &Region, outer: &Region) -> Region {
        let sites = outer
            .sites
            .iter()
            .copied()
            .filter(|s| !inner.contains(*s))
            .collect();
        Region {
            sites,
            lattice_len: outer.lattice_len,
        }
    }

    pub fn sites(&self) -> &[usize] {
        &self.sites
    }

    pub fn len(&self) -> usize {
        self.sites.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sites.is_empty()
    }

    pub fn contains(&self, site: usize) -> bool {
        self.sites.binary_search(&site).is_ok()
    }

    pub fn is_subset(&self, other: &Region) -> bool {
        self.sites.iter().all(|&s| other.contains(s))
    }

    pub(crate) fn lattice_len(&self) -> usize {
        self.lattice_len
    }
}

/// Named configurations used as boundary conditions and conditioning layers.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum SpecialConfig {
    AllPlus,
    AllMinus,
    /// `σ(x) = (-1)^{Σ coords}`.
    Alternating,
    /// The alternating configuration with each `+` spin turned to `-`
    /// independently with probability `p`.
    PerturbedAlternating {
        p: f64,
        seed: u64,
    },
}

impl SpecialConfig {
    pub fn build(&self, lattice: Arc<Lattice>) -> Result<Configuration> {
        self.build_anchored(lattice, 0)
    }

    /// Like [`build`](Self::build), with the alternating parity measured
    /// relative to `anchor` so that the anchor site always carries `+`.
    pub fn build_anchored(&self, lattice: Arc<Lattice>, anchor: usize) -> Result<Configuration> {
        lattice.check_site(anchor)?;
        match *self {
            SpecialConfig::AllPlus => Ok(Configuration::uniform(lattice, 1)),
            SpecialConfig::AllMinus => Ok(Configuration::uniform(lattice, -1)),
            SpecialConfig::Alternating => alternating(lattice, anchor),
            SpecialConfig::PerturbedAlternating { p, seed } => {
                if !(0.0..=1.0).contains(&p) {
                    return Err(Error::InvalidParameter(format!(
                        "flip probability must lie in [0, 1], got {p}"
                    )));
                }
                let mut config = alternating(lattice, anchor)?;
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                for s in config.spins.iter_mut() {
                    // One draw per site keeps the pattern stable when p changes.
                    let u: f64 = rng.random();
                    if *s == 1 && u < p {
                        *s = -1;
                    }
                }
                Ok(config)
            }
        }
    }
}

fn alternating(lattice: Arc<Lattice>, anchor: usize) -> Result<Configuration> {
    if lattice.topology() == Topology::Torus && lattice.extents().iter().any(|e| e % 2 == 1) {
        return Err(Error::InvalidLattice(format!(
            "alternating configuration needs even torus sides, got {:?}",
            lattice.extents()
        )));
    }
    let base = lattice.parity(anchor);
    let spins = (0..lattice.len())
        .map(|s| {
            if (lattice.parity(s) + base).is_multiple_of(2) {
                1
            } else {
                -1
            }
        })
        .collect();
    Ok(Configuration { lattice, spins })
}
