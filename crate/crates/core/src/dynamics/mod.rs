//! Spin-flip dynamics: single-site kernels, flip rates, exact evolution by
//! uniformization, Gillespie paths and their Girsanov weights, the PCA
//! discretization, and the backwards (time-reversed conditional) operator.

mod backwards;
mod evolve;
mod gillespie;
mod girsanov;
mod kernel;
mod pca;
mod rates;

pub use backwards::backwards_operator;
pub use evolve::{evolve_exact, Generator, DEFAULT_EVOLVE_CAP, POISSON_TAIL};
pub use gillespie::{gillespie_replica, gillespie_simulate, Event, Trajectory};
pub use girsanov::{girsanov_bound, girsanov_log_weight, girsanov_weight};
pub use kernel::{delta_from_epsilon, epsilon_from_delta, single_site_kernel, SingleSiteKernel};
pub use pca::{pca_flip_probability, pca_kernel, PcaKernel, PCA_CAP};
pub use rates::{rates_from_interaction, RateBounds, RateSource, RateSpec, TIME_SCALE};
