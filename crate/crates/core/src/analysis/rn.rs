use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::dynamics::{Generator, RateSource, RateSpec};
use crate::error::{invalid, Error, Result};
use crate::gibbs::{exact_measure, ExactMeasure, GibbsSpec};
use crate::twolayer::product_kernel;

/// Largest volume accepted by the derivative checks.
pub const RN_CAP: usize = 10;

/// `d(νS(t))^x / d(νS(t))` on every state, computed up to three ways.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RnCheck {
    pub x: usize,
    pub t: f64,
    /// (a) ratio of the evolved table at `σ^x` and `σ`.
    pub direct: Vec<f64>,
    /// (b) `μ(σ^x)/μ(σ) · E_{σ^x}[g(σ_t)] / E_σ[g(σ_t)]` with `g = ν/μ`.
    pub weighted: Vec<f64>,
    /// (c) polymer expansion truncated at total cluster size `k`.
    pub cluster: Option<Vec<f64>>,
    pub k: Option<usize>,
    pub max_ab: f64,
    pub max_ac: Option<f64>,
    pub max_bc: Option<f64>,
}

fn max_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

struct Setup {
    measure: ExactMeasure,
    gen: Generator,
    mu: Vec<f64>,
    bit: usize,
}

fn setup(nu: &GibbsSpec, rates: &RateSpec, x: usize) -> Result<Setup> {
    if rates.volume() != &nu.volume {
        return Err(Error::Mismatch(
            "rates and measure live on different volumes".into(),
        ));
    }
    let measure = exact_measure(nu, RN_CAP)?;
    let gen = Generator::new(rates, RN_CAP)?;
    let mu = rates
        .reversible_law(gen.space())?
        .ok_or_else(|| Error::Unsupported("the weighted form needs reversible rates".into()))?;
    let pos = measure
        .space()
        .position(x)
        .ok_or_else(|| invalid(format!("site {x} is outside the volume")))?;
    Ok(Setup {
        measure,
        gen,
        mu,
        bit: 1 << pos,
    })
}

/// Compare the derivative of the evolved measure at `x` computed directly,
/// through weighted expectations, and (when `k` is given and the rates are
/// unbiased independent flips) by the truncated polymer expansion.
pub fn rn_derivative_check(
    nu: &GibbsSpec,
    rates: &RateSpec,
    t: f64,
    x: usize,
    k: Option<usize>,
) -> Result<RnCheck> {
    let s = setup(nu, rates, x)?;
    let n = s.gen.space().n_states();
    let evolved = s.gen.evolve_law(s.measure.probs(), t)?;
    let direct: Vec<f64> = (0..n).map(|i| evolved[i ^ s.bit] / evolved[i]).collect();

    // g = e^{H_μ - H_ν} up to a constant; the constant cancels
    let log_g: Vec<f64> = (0..n)
        .map(|i| s.measure.probs()[i].ln() - s.mu[i].ln())
        .collect();
    let shift = log_g.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let g: Vec<f64> = log_g.iter().map(|v| (v - shift).exp()).collect();
    let sg = s.gen.evolve_function(&g, t)?;
    let weighted: Vec<f64> = (0..n)
        .map(|i| s.mu[i ^ s.bit] / s.mu[i] * sg[i ^ s.bit] / sg[i])
        .collect();

    let cluster = match k {
        Some(k) => {
            let eps = unbiased_epsilon(rates, t)?;
            let exp = PolymerExpansion::new(nu, k)?;
            let log_z: Vec<f64> = (0..n)
                .map(|i| exp.log_partition(&s.measure, i, eps))
                .collect();
            Some(
                (0..n)
                    .map(|i| {
                        let ratio = s.measure.probs()[i ^ s.bit] / s.measure.probs()[i];
                        ratio * (log_z[i ^ s.bit] - log_z[i]).exp()
                    })
                    .collect::<Vec<f64>>(),
            )
        }
        None => None,
    };
    Ok(RnCheck {
        x,
        t,
        max_ab: max_diff(&direct, &weighted),
        max_ac: cluster.as_ref().map(|c| max_diff(&direct, c)),
        max_bc: cluster.as_ref().map(|c| max_diff(&weighted, c)),
        direct,
        weighted,
        cluster,
        k,
    })
}

/// `ε_t = δ_t/(1-δ_t)` for unbiased independent flips.
fn unbiased_epsilon(rates: &RateSpec, t: f64) -> Result<f64> {
    let unbiased = match rates.source() {
        RateSource::Uniform { .. } => true,
        RateSource::Product { epsilon } => *epsilon == 0.0,
        _ => false,
    };
    if !unbiased {
        return Err(Error::Unsupported(
            "the polymer form needs unbiased independent flips".into(),
        ));
    }
    let delta = product_kernel(rates, t)?.p[0][1];
    Ok(delta / (1.0 - delta))
}

/// Polymers are connected sets of volume sites in the interaction graph;
/// two polymers are compatible when disjoint and not adjacent. Clusters are
/// ordered tuples with connected incompatibility graph, truncated at total
/// size `k`, each carrying its Ursell coefficient `φ^T / n!`.
#[derive(Clone, Debug)]
pub struct PolymerExpansion {
    polymers: Vec<u32>,
    clusters: Vec<(Vec<usize>, f64)>,
    k: usize,
}

impl PolymerExpansion {
    pub fn new(nu: &GibbsSpec, k: usize) -> Result<Self> {
        let n = nu.volume.len();
        if n > RN_CAP {
            return Err(Error::VolumeTooLarge {
                sites: n,
                cap: RN_CAP,
                hint: "the polymer expansion is enumerated exactly",
            });
        }
        if k == 0 {
            return Err(invalid("cluster size k must be >= 1"));
        }
        let local = nu.local()?;
        let sites = nu.volume.sites();
        let adj: Vec<u32> = sites
            .iter()
            .map(|&s| {
                local
                    .interacting_sites(s)
                    .into_iter()
                    .filter_map(|y| sites.binary_search(&y).ok())
                    .fold(0u32, |m, p| m | 1 << p)
            })
            .collect();
        let polymers = connected_sets(&adj, k);
        let nbhd = |mask: u32| -> u32 {
            let mut out = mask;
            for (p, a) in adj.iter().enumerate() {
                if mask >> p & 1 == 1 {
                    out |= a;
                }
            }
            out
        };
        let reach: Vec<u32> = polymers.iter().map(|&m| nbhd(m)).collect();
        let incompatible = |a: usize, b: usize| reach[a] & polymers[b] != 0;
        let size = |i: usize| polymers[i].count_ones() as usize;

        let mut clusters = Vec::new();
        let mut tuple = Vec::new();
        let mut ursell_cache: HashMap<Vec<u32>, f64> = HashMap::new();
        fn extend(
            tuple: &mut Vec<usize>,
            budget: usize,
            n_poly: usize,
            size: &dyn Fn(usize) -> usize,
            incompatible: &dyn Fn(usize, usize) -> bool,
            cache: &mut HashMap<Vec<u32>, f64>,
            out: &mut Vec<(Vec<usize>, f64)>,
        ) {
            if !tuple.is_empty() {
                let m = tuple.len();
                let adj: Vec<u32> = (0..m)
                    .map(|i| {
                        (0..m)
                            .filter(|&j| j != i && incompatible(tuple[i], tuple[j]))
                            .fold(0u32, |acc, j| acc | 1 << j)
                    })
                    .collect();
                let phi = *cache.entry(adj.clone()).or_insert_with(|| ursell(&adj));
                if phi != 0.0 {
                    let fact: f64 = (1..=m).map(|v| v as f64).product();
                    out.push((tuple.clone(), phi / fact));
                }
            }
            for p in 0..n_poly {
                let s = size(p);
                if s <= budget {
                    tuple.push(p);
                    extend(tuple, budget - s, n_poly, size, incompatible, cache, out);
                    tuple.pop();
                }
            }
        }
        extend(
            &mut tuple,
            k,
            polymers.len(),
            &size,
            &incompatible,
            &mut ursell_cache,
            &mut clusters,
        );
        Ok(PolymerExpansion {
            polymers,
            clusters,
            k,
        })
    }

    pub fn polymer_count(&self) -> usize {
        self.polymers.len()
    }

    pub fn cluster_count(&self) -> usize {
        self.clusters.len()
    }

    pub fn max_size(&self) -> usize {
        self.k
    }

    /// Truncated `log Σ_A ε^{|A|} ν(σ^A)/ν(σ)` at state `state`.
    pub fn log_partition(&self, measure: &ExactMeasure, state: usize, eps: f64) -> f64 {
        let e = measure.energies();
        let w: Vec<f64> = self
            .polymers
            .iter()
            .map(|&m| eps.powi(m.count_ones() as i32) * (e[state] - e[state ^ m as usize]).exp())
            .collect();
        self.clusters
            .iter()
            .map(|(tuple, coef)| coef * tuple.iter().map(|&p| w[p]).product::<f64>())
            .sum()
    }
}

/// Connected vertex sets of size at most `k`, as bitmasks.
fn connected_sets(adj: &[u32], k: usize) -> Vec<u32> {
    let n = adj.len();
    let mut seen = std::collections::BTreeSet::new();
    let mut frontier: Vec<u32> = (0..n).map(|i| 1u32 << i).collect();
    for size in 1..=k {
        for &m in &frontier {
            seen.insert(m);
        }
        if size == k {
            break;
        }
        let mut next = std::collections::BTreeSet::new();
        for &m in &frontier {
            let mut boundary = 0u32;
            for (p, a) in adj.iter().enumerate() {
                if m >> p & 1 == 1 {
                    boundary |= a;
                }
            }
            boundary &= !m;
            for p in 0..n {
                if boundary >> p & 1 == 1 {
                    next.insert(m | 1 << p);
                }
            }
        }
        frontier = next.into_iter().collect();
    }
    seen.into_iter().collect()
}

/// `Σ (-1)^{|E|}` over connected spanning subgraphs of the graph `adj`.
fn ursell(adj: &[u32]) -> f64 {
    let m = adj.len();
    let full = (1u32 << m) - 1;
    let independent = |s: u32| (0..m).all(|i| s >> i & 1 == 0 || adj[i] & s == 0);
    let mut conn = vec![0.0f64; 1 << m];
    for s in 1..=full {
        if s & 1 == 0 {
            continue;
        }
        let mut c = if independent(s) { 1.0 } else { 0.0 };
        // proper subsets T of S containing vertex 0
        let rest = s & !1;
        let mut sub = rest;
        loop {
            let t = sub | 1;
            if t != s {
                let f = if independent(s & !t) { 1.0 } else { 0.0 };
                c -= conn[t as usize] * f;
            }
            if sub == 0 {
                break;
            }
            sub = (sub - 1) & rest;
        }
        conn[s as usize] = c;
    }
    conn[full as usize]
}

/// Sensitivity of the derivative to spins far from `x`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ContinuityRow {
    pub radius: usize,
    /// `max |log RN(σ) - log RN(σ')|` over pairs agreeing within distance `radius` of `x`.
    pub sensitivity: f64,
}

/// How much `d(νS(t))^x/d(νS(t))` can change when only spins beyond
/// distance `r` from `x` change, for every `r` up to the volume radius.
pub fn continuity_probe(
    nu: &GibbsSpec,
    rates: &RateSpec,
    t: f64,
    x: usize,
) -> Result<Vec<ContinuityRow>> {
    let check = rn_derivative_check(nu, rates, t, x, None)?;
    let sites = nu.volume.sites();
    let lat = &nu.lattice;
    let far = sites.iter().map(|&y| lat.distance(x, y)).max().unwrap_or(0);
    let logs: Vec<f64> = check.direct.iter().map(|v| v.ln()).collect();
    Ok((0..far)
        .map(|r| {
            let mask = sites
                .iter()
                .enumerate()
                .filter(|(_, &y)| lat.distance(x, y) <= r)
                .fold(0usize, |m, (p, _)| m | 1 << p);
            let mut range: HashMap<usize, (f64, f64)> = HashMap::new();
            for (s, &v) in logs.iter().enumerate() {
                let e = range.entry(s & mask).or_insert((v, v));
                e.0 = e.0.min(v);
                e.1 = e.1.max(v);
            }
            ContinuityRow {
                radius: r,
                sensitivity: range.values().map(|(lo, hi)| hi - lo).fold(0.0, f64::max),
            }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::gibbs::Boundary;
    use crate::interaction::Interaction;
    use crate::lattice::{Lattice, Region, Topology};

    fn chain(n: usize, beta: f64, h: f64) -> (GibbsSpec, RateSpec) {
        let lat = Arc::new(Lattice::new(vec![n], Topology::Open).unwrap());
        let vol = Region::all(&lat);
        let nu = GibbsSpec::new(
            Interaction::ising(beta, h, 1).unwrap(),
            lat.clone(),
            vol.clone(),
            Boundary::Free,
        )
        .unwrap();
        let r = RateSpec::product(lat, vol, 0.0).unwrap();
        (nu, r)
    }

    #[test]
    fn ursell_small_graphs() {
        assert_eq!(ursell(&[0]), 1.0);
        assert_eq!(ursell(&[0b10, 0b01]), -1.0);
        assert_eq!(ursell(&[0, 0]), 0.0);
        // triangle: 3 trees of 2 edges minus one triangle = 3 - 1 = 2
        assert_eq!(ursell(&[0b110, 0b101, 0b011]), 2.0);
        // path 0-1-2
        assert_eq!(ursell(&[0b010, 0b101, 0b010]), 1.0);
    }

    #[test]
    fn connected_sets_of_a_path() {
        let adj = [0b010, 0b101, 0b010];
        assert_eq!(connected_sets(&adj, 3), vec![1, 2, 3, 4, 6, 7]);
    }

    #[test]
    fn stationary_start_gives_flip_ratio() {
        // ν = μ = uniform: both forms are 1
        let (nu, r) = chain(4, 0.0, 0.0);
        let c = rn_derivative_check(&nu, &r, 0.7, 1, None).unwrap();
        assert!(c.max_ab < 1e-12);
        assert!(c.direct.iter().all(|v| (v - 1.0).abs() < 1e-12));
    }

    #[test]
    fn direct_and_weighted_agree() {
        let (nu, r) = chain(6, 0.5, 0.2);
        let c = rn_derivative_check(&nu, &r, 0.3, 2, None).unwrap();
        assert!(c.max_ab < 1e-10, "{}", c.max_ab);
    }

    #[test]
    fn cluster_sum_equals_taylor_coefficients() {
        let (nu, _) = chain(5, 0.5, 0.3);
        let m = exact_measure(&nu, 10).unwrap();
        let n = 5;
        for k in 1..=4 {
            let exp = PolymerExpansion::new(&nu, k).unwrap();
            for state in [0usize, 5, 19, 31] {
                // b_m = Σ_{|A|=m} ν(σ^A)/ν(σ); log Σ b_m ε^m = Σ c_m ε^m
                let mut b = vec![0.0; n + 1];
                for a in 0..(1usize << n) {
                    b[a.count_ones() as usize] += m.probs()[state ^ a] / m.probs()[state];
                }
                let mut c = vec![0.0; k + 1];
                for mm in 1..=k {
                    let mut v = b[mm];
                    for j in 1..mm {
                        v -= j as f64 * c[j] * b[mm - j] / mm as f64;
                    }
                    c[mm] = v;
                }
                for eps in [0.01f64, 0.1, 0.3] {
                    let taylor: f64 = (1..=k).map(|j| c[j] * eps.powi(j as i32)).sum();
                    let got = exp.log_partition(&m, state, eps);
                    assert!(
                        (got - taylor).abs() < 1e-12,
                        "k={k} s={state} ε={eps}: {got} vs {taylor}"
                    );
                }
            }
        }
    }

    #[test]
    fn truncation_error_shrinks_with_cluster_size() {
        let (nu, r) = chain(6, 0.5, 0.0);
        let errs: Vec<f64> = (1..=5)
            .map(|k| {
                rn_derivative_check(&nu, &r, 0.01, 2, Some(k))
                    .unwrap()
                    .max_ac
                    .unwrap()
            })
            .collect();
        assert!(errs.windows(2).all(|w| w[1] < 0.2 * w[0]), "{errs:?}");
        assert!(errs[2] < 1e-3);
    }

    #[test]
    fn cluster_form_needs_unbiased_rates() {
        let lat = Arc::new(Lattice::new(vec![3], Topology::Open).unwrap());
        let vol = Region::all(&lat);
        let nu = GibbsSpec::new(
            Interaction::ising(0.5, 0.0, 1).unwrap(),
            lat.clone(),
            vol.clone(),
            Boundary::Free,
        )
        .unwrap();
        let r = RateSpec::product(lat, vol, 0.4).unwrap();
        assert!(rn_derivative_check(&nu, &r, 0.1, 1, None).is_ok());
        assert!(matches!(
            rn_derivative_check(&nu, &r, 0.1, 1, Some(2)),
            Err(Error::Unsupported(_))
        ));
    }

    #[test]
    fn far_spins_matter_less() {
        let (nu, r) = chain(9, 0.6, 0.1);
        let rows = continuity_probe(&nu, &r, 0.05, 4).unwrap();
        assert_eq!(rows.len(), 4);
        assert!(rows.windows(2).all(|w| w[1].sensitivity < w[0].sensitivity));
    }
}
