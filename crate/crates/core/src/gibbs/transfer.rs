use crate::error::{Error, Result};
use crate::interaction::Interaction;
use crate::lattice::Spin;

/// Boundary of a one-dimensional chain of `n` sites.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ChainBoundary {
    Free,
    /// Spins fixed at positions `-1` and `n`.
    Fixed {
        left: Spin,
        right: Spin,
    },
    /// Site `n - 1` bonds to site `0`.
    Periodic,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TransferResult {
    pub log_z: f64,
    /// `P(σ(i) = +1)` for each site.
    pub plus_marginals: Vec<f64>,
}

impl TransferResult {
    pub fn partition_function(&self) -> f64 {
        self.log_z.exp()
    }

    pub fn mean_spins(&self) -> Vec<f64> {
        self.plus_marginals.iter().map(|p| 2.0 * p - 1.0).collect()
    }
}

/// Partition function and single-site marginals of a range-1 chain by
/// 2×2 transfer matrices, rescaled at every step so long chains stay finite.
/// Site fields, when present, must have one entry per chain site.
pub fn transfer_matrix_1d(
    u: &Interaction,
    n: usize,
    boundary: ChainBoundary,
) -> Result<TransferResult> {
    if u.dim() != 1 {
        return Err(Error::Unsupported(format!(
            "transfer matrices need d = 1, got d = {}",
            u.dim()
        )));
    }
    if u.range() > 1 {
        return Err(Error::Unsupported(format!(
            "transfer matrices need range <= 1, got {}",
            u.range()
        )));
    }
    if n == 0 {
        return Err(Error::InvalidParameter("chain length must be >= 1".into()));
    }
    if let Some(f) = u.site_fields() {
        if f.len() != n {
            return Err(Error::Mismatch(format!(
                "{} site fields for {n} sites",
                f.len()
            )));
        }
    }
    let mut single = [0.0; 2];
    let mut pair = [[0.0; 2]; 2];
    for c in u.classes() {
        match c.size() {
            1 => {
                single[0] += c.table()[0];
                single[1] += c.table()[1];
            }
            _ => {
                for (a, row) in pair.iter_mut().enumerate() {
                    for (b, v) in row.iter_mut().enumerate() {
                        *v += c.table()[a | b << 1];
                    }
                }
            }
        }
    }
    // index 0 is +1, index 1 is -1
    let field = |i: usize| u.site_fields().map_or(0.0, |f| f[i]);
    let site_w = |i: usize, s: usize| {
        let spin = if s == 0 { 1.0 } else { -1.0 };
        (-single[s] + field(i) * spin).exp()
    };
    let bond = |a: usize, b: usize| (-pair[a][b]).exp();
    let idx = |s: Spin| if s > 0 { 0 } else { 1 };

    match boundary {
        ChainBoundary::Free => Ok(sweep(n, &site_w, &bond, [1.0, 1.0], [1.0, 1.0])),
        ChainBoundary::Fixed { left, right } => {
            let (l, r) = (idx(left), idx(right));
            Ok(sweep(
                n,
                &site_w,
                &bond,
                [bond(l, 0), bond(l, 1)],
                [bond(0, r), bond(1, r)],
            ))
        }
        ChainBoundary::Periodic => {
            // Condition on the first spin, then mix the two pinned chains.
            let parts: Vec<TransferResult> = (0..2)
                .map(|s0| {
                    let mut start = [0.0; 2];
                    start[s0] = 1.0;
                    sweep(n, &site_w, &bond, start, [bond(0, s0), bond(1, s0)])
                })
                .collect();
            let m = parts[0].log_z.max(parts[1].log_z);
            let w0 = (parts[0].log_z - m).exp();
            let w1 = (parts[1].log_z - m).exp();
            let log_z = m + (w0 + w1).ln();
            let plus_marginals = parts[0]
                .plus_marginals
                .iter()
                .zip(&parts[1].plus_marginals)
                .map(|(a, b)| (w0 * a + w1 * b) / (w0 + w1))
                .collect();
            Ok(TransferResult {
                log_z,
                plus_marginals,
            })
        }
    }
}

/// Forward/backward pass with per-step normalisation. `start` multiplies
/// the first site weight and `end` closes the last site.
fn sweep(
    n: usize,
    site_w: &dyn Fn(usize, usize) -> f64,
    bond: &dyn Fn(usize, usize) -> f64,
    start: [f64; 2],
    end: [f64; 2],
) -> TransferResult {
    let mut alpha = vec![[0.0; 2]; n];
    let mut log_scale = 0.0;
    let mut cur = [start[0] * site_w(0, 0), start[1] * site_w(0, 1)];
    for i in 0..n {
        if i > 0 {
            let prev = alpha[i - 1];
            cur = [0, 1].map(|s| (prev[0] * bond(0, s) + prev[1] * bond(1, s)) * site_w(i, s));
        }
        let norm = cur[0] + cur[1];
        log_scale += norm.ln();
        alpha[i] = [cur[0] / norm, cur[1] / norm];
    }
    let log_z = log_scale + (alpha[n - 1][0] * end[0] + alpha[n - 1][1] * end[1]).ln();

    let mut beta = end;
    let mut plus_marginals = vec![0.0; n];
    for i in (0..n).rev() {
        if i < n - 1 {
            let next = beta;
            beta = [0, 1].map(|s| {
                bond(s, 0) * site_w(i + 1, 0) * next[0] + bond(s, 1) * site_w(i + 1, 1) * next[1]
            });
            let norm = beta[0] + beta[1];
            beta = [beta[0] / norm, beta[1] / norm];
        }
        let p = alpha[i][0] * beta[0];
        let m = alpha[i][1] * beta[1];
        plus_marginals[i] = p / (p + m);
    }
    TransferResult {
        log_z,
        plus_marginals,
    }
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::gibbs::{exact_measure, Boundary, GibbsSpec};
    use crate::lattice::{Configuration, Lattice, Region, Topology};

    #[test]
    fn free_spins_on_a_ring() {
        let u = Interaction::ising(0.0, 0.0, 1).unwrap();
        let r = transfer_matrix_1d(&u, 10, ChainBoundary::Periodic).unwrap();
        assert!((r.partition_function() - 1024.0).abs() < 1e-9);
    }

    #[test]
    fn periodic_is_trace_of_power() {
        let (beta, h): (f64, f64) = (0.7, 0.3);
        let u = Interaction::ising(beta, h, 1).unwrap();
        let n = 7;
        // T(s,s') = exp(β s s' + h (s + s')/2)
        let s = [1.0, -1.0];
        let t: Vec<Vec<f64>> = s
            .iter()
            .map(|&a| {
                s.iter()
                    .map(|&b| (beta * a * b + h * (a + b) / 2.0).exp())
                    .collect()
            })
            .collect();
        let mut p = vec![vec![1.0, 0.0], vec![0.0, 1.0]];
        for _ in 0..n {
            let mut q = vec![vec![0.0; 2]; 2];
            for i in 0..2 {
                for j in 0..2 {
                    q[i][j] = (0..2).map(|k| p[i][k] * t[k][j]).sum();
                }
            }
            p = q;
        }
        let trace = p[0][0] + p[1][1];
        let r = transfer_matrix_1d(&u, n, ChainBoundary::Periodic).unwrap();
        assert!((r.log_z - trace.ln()).abs() < 1e-12);
    }

    #[test]
    fn matches_enumeration_free_fixed_periodic() {
        let u = Interaction::ising(0.9, -0.2, 1).unwrap();
        let n = 5;

        let lat = Arc::new(Lattice::new(vec![n], Topology::Open).unwrap());
        let spec =
            GibbsSpec::new(u.clone(), lat.clone(), Region::all(&lat), Boundary::Free).unwrap();
        check(
            &spec,
            &transfer_matrix_1d(&u, n, ChainBoundary::Free).unwrap(),
            0,
        );

        let lat = Arc::new(Lattice::new(vec![n + 2], Topology::Open).unwrap());
        let mut zeta = Configuration::uniform(lat.clone(), 1);
        zeta.set(n + 1, -1).unwrap();
        let vol = Region::new(&lat, (1..=n).collect()).unwrap();
        let spec = GibbsSpec::new(u.clone(), lat, vol, Boundary::Fixed(zeta)).unwrap();
        let fixed = ChainBoundary::Fixed { left: 1, right: -1 };
        check(&spec, &transfer_matrix_1d(&u, n, fixed).unwrap(), 1);

        for n in [1, 2, 3, 6] {
            let lat = Arc::new(Lattice::new(vec![n], Topology::Torus).unwrap());
            let spec = GibbsSpec::torus(u.clone(), lat).unwrap();
            check(
                &spec,
                &transfer_matrix_1d(&u, n, ChainBoundary::Periodic).unwrap(),
                0,
            );
        }
    }

    #[test]
    fn site_fields_enter_marginals() {
        let fields = vec![0.3, -0.5, 0.0];
        let u = Interaction::ising(0.4, 0.0, 1)
            .unwrap()
            .with_site_fields(fields)
            .unwrap();
        let lat = Arc::new(Lattice::new(vec![3], Topology::Open).unwrap());
        let spec =
            GibbsSpec::new(u.clone(), lat.clone(), Region::all(&lat), Boundary::Free).unwrap();
        check(
            &spec,
            &transfer_matrix_1d(&u, 3, ChainBoundary::Free).unwrap(),
            0,
        );
    }

    #[test]
    fn long_chain_stays_finite() {
        let u = Interaction::ising(2.0, 0.1, 1).unwrap();
        let r = transfer_matrix_1d(&u, 5000, ChainBoundary::Periodic).unwrap();
        assert!(r.log_z.is_finite());
        assert!(r.plus_marginals.iter().all(|p| (0.0..=1.0).contains(p)));
    }

    #[test]
    fn rejects_longer_range_and_higher_dimension() {
        let u = Interaction::ising(1.0, 0.0, 2).unwrap();
        assert!(matches!(
            transfer_matrix_1d(&u, 3, ChainBoundary::Free),
            Err(Error::Unsupported(_))
        ));
        let nnn = crate::interaction::TranslationClass::new(
            vec![vec![0], vec![2]],
            vec![-1.0, 1.0, 1.0, -1.0],
        )
        .unwrap();
        let u = Interaction::new(1, vec![nnn]).unwrap();
        assert!(matches!(
            transfer_matrix_1d(&u, 3, ChainBoundary::Free),
            Err(Error::Unsupported(_))
        ));
    }

    fn check(spec: &GibbsSpec, r: &TransferResult, offset: usize) {
        let m = exact_measure(spec, 20).unwrap();
        assert!(
            (m.log_partition() - r.log_z).abs() < 1e-12,
            "{} vs {}",
            m.log_partition(),
            r.log_z
        );
        for (i, p) in r.plus_marginals.iter().enumerate() {
            let q = m.plus_marginal(i + offset).unwrap();
            assert!((p - q).abs() < 1e-12, "site {i}: {p} vs {q}");
        }
    }
}
