//! Numerical kernels shared by the test statistics and procedures.

pub mod linalg;
pub mod mvn;
pub mod rng;

pub use linalg::{floor_psd, moore_penrose, spectral_sqrt, PseudoInverse};
pub use mvn::{equicoordinate_quantile, max_abs_mvn_pvalue, MaxNormalSample, Sidedness, DEFAULT_MC_SAMPLES};
pub use rng::RngStream;

use statrs::function::gamma::gamma_ur;

/// Upper tail `P(X > x)` of the chi-square distribution with `df` degrees of
/// freedom. `df = 0` marks a degenerate statistic and yields 1.
pub fn chi_square_upper_tail(x: f64, df: usize) -> f64 {
    if df == 0 || x.is_nan() || x <= 0.0 {
        return 1.0;
    }
    if x.is_infinite() {
        return 0.0;
    }
    gamma_ur(df as f64 / 2.0, x / 2.0).clamp(0.0, 1.0)
}
