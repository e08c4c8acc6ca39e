use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::lattice::Spin;

/// Transition matrix of the two-state chain with generator
/// `½ [[-1+ε, 1-ε], [1+ε, -1-ε]]` (rows and columns ordered `+`, `-`).
///
/// The relaxation rate is 1 and the stationary law is `((1+ε)/2, (1-ε)/2)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SingleSiteKernel {
    pub t: f64,
    pub epsilon: f64,
    /// `p[a][b]` with index 0 for `+` and 1 for `-`.
    pub p: [[f64; 2]; 2],
}

/// `p_t(α,α) = π_α + π_{-α} e^{-t}` and `p_t(α,-α) = π_{-α}(1 - e^{-t})`.
pub fn single_site_kernel(t: f64, epsilon: f64) -> Result<SingleSiteKernel> {
    if !(t >= 0.0) || !t.is_finite() {
        return Err(invalid(format!("time must be finite and >= 0, got {t}")));
    }
    if !(0.0..1.0).contains(&epsilon) {
        return Err(invalid(format!("bias must lie in [0, 1), got {epsilon}")));
    }
    let plus = (1.0 + epsilon) / 2.0;
    let minus = (1.0 - epsilon) / 2.0;
    let decay = (-t).exp();
    let stay_decay = -(-t).exp_m1(); // 1 - e^{-t} without cancellation
    let p = [
        [plus + minus * decay, minus * stay_decay],
        [plus * stay_decay, minus + plus * decay],
    ];
    Ok(SingleSiteKernel { t, epsilon, p })
}

/// `δ = ν(-)/ν(+) = (1-ε)/(1+ε)`.
pub fn delta_from_epsilon(epsilon: f64) -> f64 {
    (1.0 - epsilon) / (1.0 + epsilon)
}

/// Inverse of [`delta_from_epsilon`].
pub fn epsilon_from_delta(delta: f64) -> f64 {
    (1.0 - delta) / (1.0 + delta)
}

pub(crate) fn spin_index(s: Spin) -> usize {
    if s > 0 {
        0
    } else {
        1
    }
}

impl SingleSiteKernel {
    pub fn entry(&self, from: Spin, to: Spin) -> f64 {
        self.p[spin_index(from)][spin_index(to)]
    }

    pub fn stationary(&self) -> [f64; 2] {
        [(1.0 + self.epsilon) / 2.0, (1.0 - self.epsilon) / 2.0]
    }

    pub fn determinant(&self) -> f64 {
        self.p[0][0] * self.p[1][1] - self.p[0][1] * self.p[1][0]
    }

    pub fn delta(&self) -> f64 {
        delta_from_epsilon(self.epsilon)
    }

    /// Matrix product `self · other`.
    pub fn compose(&self, other: &SingleSiteKernel) -> [[f64; 2]; 2] {
        let mut out = [[0.0; 2]; 2];
        for (a, row) in out.iter_mut().enumerate() {
            for (b, v) in row.iter_mut().enumerate() {
                *v = self.p[a][0] * other.p[0][b] + self.p[a][1] * other.p[1][b];
            }
        }
        out
    }
}
