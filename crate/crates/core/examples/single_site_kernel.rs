//! The biased single-site flip kernel and its semigroup property.
use gibbsflow::dynamics::{delta_from_epsilon, single_site_kernel};

fn main() -> gibbsflow::Result<()> {
    let eps = 0.4;
    let (s, t) = (0.3, 0.9);
    let a = single_site_kernel(s, eps)?;
    let b = single_site_kernel(t, eps)?;
    let ab = single_site_kernel(s + t, eps)?;
    let composed = a.compose(&b);
    println!("delta = nu(-)/nu(+) = {}", delta_from_epsilon(eps));
    println!("stationary {:?}", ab.stationary());
    let mut worst: f64 = 0.0;
    for i in 0..2 {
        for j in 0..2 {
            worst = worst.max((composed[i][j] - ab.p[i][j]).abs());
        }
    }
    println!("Chapman-Kolmogorov error {worst:.2e}");
    Ok(())
}
