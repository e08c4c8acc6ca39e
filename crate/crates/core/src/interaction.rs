//! Finite-range interactions and their Hamiltonians.
//!
//! An [`Interaction`] is a list of translation classes. Each class is a
//! finite offset pattern `A₀ ∋ 0` together with an explicit energy table
//! over `{-1,+1}^{A₀}`; the interaction contains every translate `x + A₀`.
//! Table index bit `i` is set when the spin at `offsets[i]` is `-1`, so
//! entry `0` is the all-plus energy. Non-translation-invariant single-site
//! terms live in `site_fields`: site `x` contributes `-site_fields[x]·σ(x)`.
//!
//! Probabilities are `∝ exp(-H)`; inverse temperatures are absorbed into
//! the tables.

use std::collections::HashSet;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{Configuration, Lattice, Region, Spin, Topology};

/// Largest support a class may have (tables hold `2^MAX_CLASS_SIZE` entries).
pub const MAX_CLASS_SIZE: usize = 8;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TranslationClass {
    offsets: Vec<Vec<i64>>,
    table: Vec<f64>,
}

impl TranslationClass {
    /// Build a class; offsets are canonicalized (sorted, shifted so the
    /// smallest is the origin) and the table permuted accordingly.
    pub fn new(offsets: Vec<Vec<i64>>, table: Vec<f64>) -> Result<Self> {
        let k = offsets.len();
        if k == 0 || k > MAX_CLASS_SIZE {
            return Err(Error::InvalidParameter(format!(
                "class support must have 1..={MAX_CLASS_SIZE} sites, got {k}"
            )));
        }
        if table.len() != 1 << k {
            return Err(Error::InvalidParameter(format!(
                "class of {k} sites needs a table of {} entries, got {}",
                1 << k,
                table.len()
            )));
        }
        let dim = offsets[0].len();
        if dim == 0 || offsets.iter().any(|o| o.len() != dim) {
            return Err(Error::InvalidParameter(
                "offsets must share one dimension".into(),
            ));
        }
        if table.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter(
                "coupling table entries must be finite".into(),
            ));
        }
        let mut order: Vec<usize> = (0..k).collect();
        order.sort_by(|&a, &b| offsets[a].cmp(&offsets[b]));
        for w in order.windows(2) {
            if offsets[w[0]] == offsets[w[1]] {
                return Err(Error::InvalidParameter("duplicate offset in class".into()));
            }
        }
        let anchor = offsets[order[0]].clone();
        let canon: Vec<Vec<i64>> = order
            .iter()
            .map(|&i| offsets[i].iter().zip(&anchor).map(|(a, b)| a - b).collect())
            .collect();
        // new bit j corresponds to old bit order[j]
        let mut permuted = vec![0.0; table.len()];
        for (new_idx, slot) in permuted.iter_mut().enumerate() {
            let mut old_idx = 0;
            for (j, &old) in order.iter().enumerate() {
                if new_idx >> j & 1 == 1 {
                    old_idx |= 1 << old;
                }
            }
            *slot = table[old_idx];
        }
        Ok(TranslationClass {
            offsets: canon,
            table: permuted,
        })
    }

    pub fn offsets(&self) -> &[Vec<i64>] {
        &self.offsets
    }

    pub fn table(&self) -> &[f64] {
        &self.table
    }

    pub fn size(&self) -> usize {
        self.offsets.len()
    }

    pub fn dim(&self) -> usize {
        self.offsets[0].len()
    }

    /// ℓ∞ diameter of the support.
    pub fn diameter(&self) -> usize {
        let mut d = 0;
        for a in &self.offsets {
            for b in &self.offsets {
                let m = a
                    .iter()
                    .zip(b)
                    .map(|(x, y)| x.abs_diff(*y))
                    .max()
                    .unwrap_or(0);
                d = d.max(m as usize);
            }
        }
        d
    }

    pub fn energy(&self, spins: &[Spin]) -> f64 {
        self.table[table_index(spins)]
    }

    /// `sup |U(A,·)|`.
    pub fn sup_abs(&self) -> f64 {
        self.table.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// `sup_{σ,σ'} |U(A,σ) - U(A,σ')|`.
    pub fn oscillation(&self) -> f64 {
        let max = self.table.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let min = self.table.iter().cloned().fold(f64::INFINITY, f64::min);
        max - min
    }
}

fn table_index(spins: &[Spin]) -> usize {
    spins
        .iter()
        .enumerate()
        .fold(0, |acc, (i, &s)| if s < 0 { acc | (1 << i) } else { acc })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Interaction {
    dim: usize,
    range: usize,
    classes: Vec<TranslationClass>,
    #[serde(default)]
    site_fields: Option<Vec<f64>>,
}

impl Interaction {
    pub fn zero(dim: usize) -> Self {
        Interaction {
            dim,
            range: 0,
            classes: Vec::new(),
            site_fields: None,
        }
    }

    pub fn new(dim: usize, classes: Vec<TranslationClass>) -> Result<Self> {
        let mut out = Interaction::zero(dim);
        for c in classes {
            out.add_class(c)?;
        }
        Ok(out)
    }

    /// Nearest-neighbour Ising: `H = -β Σ_{<x,y>} σ(x)σ(y) - h Σ_x σ(x)`.
    pub fn ising(beta: f64, h: f64, dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidParameter("dimension must be >= 1".into()));
        }
        if !beta.is_finite() || !h.is_finite() {
            return Err(Error::InvalidParameter("β and h must be finite".into()));
        }
        let mut classes = Vec::with_capacity(dim + 1);
        for axis in 0..dim {
            let mut e = vec![0i64; dim];
            e[axis] = 1;
            classes.push(TranslationClass::new(
                vec![vec![0; dim], e],
                vec![-beta, beta, beta, -beta],
            )?);
        }
        classes.push(TranslationClass::new(vec![vec![0; dim]], vec![-h, h])?);
        Interaction::new(dim, classes)
    }

    fn add_class(&mut self, class: TranslationClass) -> Result<()> {
        if class.dim() != self.dim {
            return Err(Error::Mismatch(format!(
                "class of dimension {} in a {}-dimensional interaction",
                class.dim(),
                self.dim
            )));
        }
        self.range = self.range.max(class.diameter());
        if let Some(existing) = self.classes.iter_mut().find(|c| c.offsets == class.offsets) {
            for (a, b) in existing.table.iter_mut().zip(&class.table) {
                *a += b;
            }
        } else {
            self.classes.push(class);
        }
        Ok(())
    }

    pub fn with_site_fields(mut self, fields: Vec<f64>) -> Result<Self> {
        if fields.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter("site fields must be finite".into()));
        }
        self.site_fields = Some(fields);
        Ok(self)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn range(&self) -> usize {
        self.range
    }

    pub fn classes(&self) -> &[TranslationClass] {
        &self.classes
    }

    pub fn site_fields(&self) -> Option<&[f64]> {
        self.site_fields.as_deref()
    }

    /// The interaction without its site fields.
    pub fn translation_part(&self) -> Interaction {
        Interaction {
            site_fields: None,
            ..self.clone()
        }
    }

    /// True when every coupling and field vanishes.
    pub fn is_zero(&self) -> bool {
        self.classes
            .iter()
            .all(|c| c.table.iter().all(|&v| v == 0.0))
            && self
                .site_fields
                .as_ref()
                .is_none_or(|f| f.iter().all(|&v| v == 0.0))
    }

    pub fn scaled(&self, factor: f64) -> Interaction {
        let mut out = self.clone();
        for c in &mut out.classes {
            c.table.iter_mut().for_each(|v| *v *= factor);
        }
        if let Some(f) = &mut out.site_fields {
            f.iter_mut().for_each(|v| *v *= factor);
        }
        out
    }

    /// Termwise sum.
    pub fn plus(&self, other: &Interaction) -> Result<Interaction> {
        if self.dim != other.dim {
            return Err(Error::Mismatch(
                "interactions of different dimension".into(),
            ));
        }
        let mut out = self.clone();
        for c in &other.classes {
            out.add_class(c.clone())?;
        }
        out.site_fields = match (&self.site_fields, &other.site_fields) {
            (None, None) => None,
            (Some(a), None) | (None, Some(a)) => Some(a.clone()),
            (Some(a), Some(b)) => {
                if a.len() != b.len() {
                    return Err(Error::Mismatch("site fields of different length".into()));
                }
                Some(a.iter().zip(b).map(|(x, y)| x + y).collect())
            }
        };
        Ok(out)
    }

    /// `Σ_{A∋x} sup_σ |U(A,σ)|`, maximised over sites.
    pub fn norm(&self) -> f64 {
        let classes: f64 = self
            .classes
            .iter()
            .map(|c| c.size() as f64 * c.sup_abs())
            .sum();
        let fields = self
            .site_fields
            .as_ref()
            .map(|f| f.iter().fold(0.0f64, |m, v| m.max(v.abs())))
            .unwrap_or(0.0);
        classes + fields
    }

    /// Left side of the high-temperature condition
    /// `sup_x Σ_{A∋x} (|A|-1) sup_{σ,σ'} |U(A,σ)-U(A,σ')| < 2`.
    pub fn dobrushin(&self) -> Result<DobrushinReport> {
        if let Some(f) = &self.site_fields {
            if f.windows(2).any(|w| w[0] != w[1]) {
                return Err(Error::NotTranslationInvariant(
                    "site fields vary from site to site".into(),
                ));
            }
        }
        let per_class: Vec<ClassContribution> = self
            .classes
            .iter()
            .map(|c| {
                let k = c.size() as f64;
                ClassContribution {
                    offsets: c.offsets.clone(),
                    contribution: k * (k - 1.0) * c.oscillation(),
                }
            })
            .collect();
        let norm = per_class.iter().map(|c| c.contribution).sum::<f64>();
        Ok(DobrushinReport {
            norm,
            satisfied: norm < 2.0,
            per_class,
        })
    }

    /// Compile the terms touching (or contained in) `volume` on `lattice`.
    pub fn localize(
        &self,
        lattice: &Arc<Lattice>,
        volume: &Region,
        mode: Summation,
    ) -> Result<LocalHamiltonian> {
        LocalHamiltonian::build(self, lattice, volume, mode)
    }
}

/// `U_μ - U_ν`, the interaction of the difference Hamiltonian `H^{μ,ν}`.
pub fn difference_interaction(u_mu: &Interaction, u_nu: &Interaction) -> Result<Interaction> {
    u_mu.plus(&u_nu.scaled(-1.0))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassContribution {
    pub offsets: Vec<Vec<i64>>,
    pub contribution: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DobrushinReport {
    pub norm: f64,
    pub satisfied: bool,
    pub per_class: Vec<ClassContribution>,
}

/// Which translates enter a finite-volume Hamiltonian.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Summation {
    /// `A ⊂ Λ` (free boundary).
    Inside,
    /// `A ∩ Λ ≠ ∅`, with spins off `Λ` read from the boundary configuration.
    Touching,
}

/// The terms of an interaction relevant to one finite volume, flattened
/// for fast energy and energy-difference evaluation.
#[derive(Clone, Debug)]
pub struct LocalHamiltonian {
    lattice: Arc<Lattice>,
    volume: Region,
    mode: Summation,
    tables: Vec<Vec<f64>>,
    term_class: Vec<u32>,
    term_start: Vec<u32>,
    term_sites: Vec<u32>,
    fields: Vec<f64>,
    incident_start: Vec<u32>,
    incident: Vec<(u32, u8)>,
    range: usize,
}

impl LocalHamiltonian {
    fn build(
        u: &Interaction,
        lattice: &Arc<Lattice>,
        volume: &Region,
        mode: Summation,
    ) -> Result<Self> {
        if u.dim != lattice.dim() {
            return Err(Error::Mismatch(format!(
                "{}-dimensional interaction on a {}-dimensional lattice",
                u.dim,
                lattice.dim()
            )));
        }
        if volume.lattice_len() != lattice.len() {
            return Err(Error::Mismatch("volume belongs to another lattice".into()));
        }
        let n = lattice.len();
        let mut fields = vec![0.0; n];
        if let Some(f) = &u.site_fields {
            if f.len() != n {
                return Err(Error::Mismatch(format!(
                    "{} site fields for a lattice of {n} sites",
                    f.len()
                )));
            }
            for &s in volume.sites() {
                fields[s] = f[s];
            }
        }
        let mut tables = Vec::with_capacity(u.classes.len());
        let mut term_class = Vec::new();
        let mut term_start = vec![0u32];
        let mut term_sites: Vec<u32> = Vec::new();
        let mut seen: HashSet<(usize, Vec<i64>)> = HashSet::new();
        let mut sites_buf = Vec::with_capacity(MAX_CLASS_SIZE);
        for (ci, class) in u.classes.iter().enumerate() {
            tables.push(class.table.clone());
            if class.table.iter().all(|&v| v == 0.0) {
                continue;
            }
            for &y in volume.sites() {
                let yc: Vec<i64> = lattice.coords(y).iter().map(|&c| c as i64).collect();
                for a in &class.offsets {
                    let base: Vec<i64> = yc.iter().zip(a).map(|(c, o)| c - o).collect();
                    let key_base = match lattice.topology() {
                        Topology::Torus => {
                            let s = lattice.locate(&base).expect("torus");
                            vec![s as i64]
                        }
                        Topology::Open => base.clone(),
                    };
                    if !seen.insert((ci, key_base)) {
                        continue;
                    }
                    sites_buf.clear();
                    let mut off_lattice = false;
                    for o in &class.offsets {
                        let p: Vec<i64> = base.iter().zip(o).map(|(b, d)| b + d).collect();
                        match lattice.locate(&p) {
                            Some(s) => sites_buf.push(s),
                            None => off_lattice = true,
                        }
                    }
                    let keep = match mode {
                        Summation::Inside => {
                            !off_lattice && sites_buf.iter().all(|&s| volume.contains(s))
                        }
                        Summation::Touching => {
                            if off_lattice {
                                return Err(Error::CollarTooThin { required: u.range });
                            }
                            true
                        }
                    };
                    if keep {
                        term_class.push(ci as u32);
                        term_sites.extend(sites_buf.iter().map(|&s| s as u32));
                        term_start.push(term_sites.len() as u32);
                    }
                }
            }
        }
        // per-site incidence lists (term, position within term)
        let mut counts = vec![0u32; n + 1];
        for t in 0..term_class.len() {
            for &s in &term_sites[term_start[t] as usize..term_start[t + 1] as usize] {
                counts[s as usize + 1] += 1;
            }
        }
        for i in 0..n {
            counts[i + 1] += counts[i];
        }
        let mut fill = counts.clone();
        let mut incident = vec![(0u32, 0u8); *counts.last().unwrap() as usize];
        for t in 0..term_class.len() {
            let span = term_start[t] as usize..term_start[t + 1] as usize;
            for (pos, &s) in term_sites[span].iter().enumerate() {
                let slot = &mut fill[s as usize];
                incident[*slot as usize] = (t as u32, pos as u8);
                *slot += 1;
            }
        }
        Ok(LocalHamiltonian {
            lattice: lattice.clone(),
            volume: volume.clone(),
            mode,
            tables,
            term_class,
            term_start,
            term_sites,
            fields,
            incident_start: counts,
            incident,
            range: u.range,
        })
    }

    pub fn lattice(&self) -> &Arc<Lattice> {
        &self.lattice
    }

    pub fn volume(&self) -> &Region {
        &self.volume
    }

    pub fn mode(&self) -> Summation {
        self.mode
    }

    pub fn range(&self) -> usize {
        self.range
    }

    pub fn term_count(&self) -> usize {
        self.term_class.len()
    }

    /// Site field acting on `site` (zero off the volume).
    pub fn field(&self, site: usize) -> f64 {
        self.fields[site]
    }

    /// Total energy. Terms are tallied per table entry before summing, so
    /// the result does not depend on term order (exact under torus
    /// translations).
    pub fn energy(&self, spins: &[Spin]) -> f64 {
        let mut counts: Vec<Vec<u32>> = self.tables.iter().map(|t| vec![0; t.len()]).collect();
        for t in 0..self.term_class.len() {
            let span = self.term_start[t] as usize..self.term_start[t + 1] as usize;
            let mut idx = 0;
            for (i, &s) in self.term_sites[span].iter().enumerate() {
                if spins[s as usize] < 0 {
                    idx |= 1 << i;
                }
            }
            counts[self.term_class[t] as usize][idx] += 1;
        }
        let mut e = 0.0;
        for (table, count) in self.tables.iter().zip(&counts) {
            for (v, &c) in table.iter().zip(count) {
                if c > 0 {
                    e += v * c as f64;
                }
            }
        }
        for &s in self.volume.sites() {
            e -= self.fields[s] * spins[s] as f64;
        }
        e
    }

    /// Energies of the terms containing `site` with that spin set to `+1`
    /// and to `-1` (everything else as in `spins`).
    pub fn local_pair(&self, spins: &[Spin], site: usize) -> (f64, f64) {
        let mut plus = 0.0;
        let mut minus = 0.0;
        let lo = self.incident_start[site] as usize;
        let hi = self.incident_start[site + 1] as usize;
        for &(t, pos) in &self.incident[lo..hi] {
            let t = t as usize;
            let span = self.term_start[t] as usize..self.term_start[t + 1] as usize;
            let mut idx = 0;
            for (i, &s) in self.term_sites[span].iter().enumerate() {
                if i != pos as usize && spins[s as usize] < 0 {
                    idx |= 1 << i;
                }
            }
            let table = &self.tables[self.term_class[t] as usize];
            plus += table[idx];
            minus += table[idx | 1 << pos];
        }
        let f = self.fields[site];
        (plus - f, minus + f)
    }

    /// `H(σ^x) - H(σ)` from the terms containing `x` only.
    pub fn delta(&self, spins: &[Spin], site: usize) -> f64 {
        let (plus, minus) = self.local_pair(spins, site);
        if spins[site] > 0 {
            minus - plus
        } else {
            plus - minus
        }
    }

    /// Sites sharing at least one term with `site`.
    pub fn interacting_sites(&self, site: usize) -> Vec<usize> {
        let mut out = Vec::new();
        let lo = self.incident_start[site] as usize;
        let hi = self.incident_start[site + 1] as usize;
        for &(t, _) in &self.incident[lo..hi] {
            let t = t as usize;
            for &s in &self.term_sites[self.term_start[t] as usize..self.term_start[t + 1] as usize]
            {
                let s = s as usize;
                if s != site && !out.contains(&s) {
                    out.push(s);
                }
            }
        }
        out.sort_unstable();
        out
    }
}

/// `H^ζ_Λ(σ) = Σ_{A∩Λ≠∅} U(A, σ_Λ ζ_{Λ^c})`.
pub fn hamiltonian_bc(
    u: &Interaction,
    volume: &Region,
    sigma: &Configuration,
    zeta: &Configuration,
) -> Result<f64> {
    let patched = sigma.patch(zeta, volume)?;
    let local = u.localize(sigma.lattice(), volume, Summation::Touching)?;
    Ok(local.energy(patched.spins()))
}

/// `H_Λ(σ) = Σ_{A⊂Λ} U(A, σ)`.
pub fn hamiltonian_free(u: &Interaction, volume: &Region, sigma: &Configuration) -> Result<f64> {
    let local = u.localize(sigma.lattice(), volume, Summation::Inside)?;
    Ok(local.energy(sigma.spins()))
}

/// `H(σ^x) - H(σ)` for the boundary-condition Hamiltonian.
pub fn energy_delta(
    u: &Interaction,
    volume: &Region,
    sigma: &Configuration,
    site: usize,
    zeta: &Configuration,
) -> Result<f64> {
    sigma.lattice().check_site(site)?;
    if !volume.contains(site) {
        return Err(Error::InvalidParameter(format!(
            "site {site} is not in the volume"
        )));
    }
    let patched = sigma.patch(zeta, volume)?;
    let local = u.localize(sigma.lattice(), volume, Summation::Touching)?;
    Ok(local.delta(patched.spins(), site))
}

/// `C = 2 sup_Λ sup_σ |H_Λ(σ)|/|Λ|` evaluated over every torus with at most
/// `cap` sites whose sides exceed the interaction range.
pub fn energy_density_constant(u: &Interaction, cap: usize) -> Result<f64> {
    if cap > 24 {
        return Err(Error::VolumeTooLarge {
            sites: cap,
            cap: 24,
            hint: "use the analytic bound for large tori",
        });
    }
    let min_side = u.range + 1;
    let mut best: f64 = 0.0;
    for extents in torus_shapes(u.dim, min_side, cap) {
        let lattice = Arc::new(Lattice::new(extents, Topology::Torus)?);
        let region = Region::all(&lattice);
        let local = u.localize(&lattice, &region, Summation::Inside)?;
        let n = lattice.len();
        let mut spins = vec![1 as Spin; n];
        for state in 0u64..(1u64 << n) {
            for (i, s) in spins.iter_mut().enumerate() {
                *s = if state >> i & 1 == 1 { -1 } else { 1 };
            }
            best = best.max(local.energy(&spins).abs() / n as f64);
        }
    }
    Ok(2.0 * best)
}

fn torus_shapes(dim: usize, min_side: usize, cap: usize) -> Vec<Vec<usize>> {
    fn rec(
        dim: usize,
        min_side: usize,
        cap: usize,
        cur: &mut Vec<usize>,
        out: &mut Vec<Vec<usize>>,
    ) {
        if cur.len() == dim {
            out.push(cur.clone());
            return;
        }
        let used: usize = cur.iter().product();
        let rest = dim - cur.len() - 1;
        let mut side = min_side;
        while used * side * min_side.pow(rest as u32) <= cap {
            cur.push(side);
            rec(dim, min_side, cap, cur, out);
            cur.pop();
            side += 1;
        }
    }
    let mut out = Vec::new();
    rec(dim, min_side, cap, &mut Vec::new(), &mut out);
    out
}
