//! Monte Carlo distribution of the coordinate-wise maximum of a centered
//! multivariate normal vector.

use nalgebra::DMatrix;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::linalg::spectral_sqrt;
use super::rng::RngStream;
use crate::error::{Error, Result};

/// Draws per rayon task. Each chunk reads its own child stream, so the
/// sample does not depend on scheduling.
const CHUNK: usize = 8192;

pub const DEFAULT_MC_SAMPLES: usize = 100_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Sidedness {
    /// max_i |Z_i|
    #[default]
    TwoSided,
    /// max_i Z_i
    Upper,
}

/// Sorted Monte Carlo draws of the maximum statistic under `N(0, corr)`.
#[derive(Debug, Clone)]
pub struct MaxNormalSample {
    sorted: Vec<f64>,
}

pub(crate) fn check_correlation(corr: &DMatrix<f64>) -> Result<()> {
    if corr.nrows() != corr.ncols() {
        return Err(Error::InvalidMatrix("correlation matrix must be square".into()));
    }
    if corr.nrows() == 0 {
        return Err(Error::InvalidMatrix("correlation matrix is empty".into()));
    }
    if corr.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidMatrix("non-finite correlation entry".into()));
    }
    for i in 0..corr.nrows() {
        if (corr[(i, i)] - 1.0).abs() > 1e-8 {
            return Err(Error::InvalidMatrix(format!(
                "diagonal entry {i} is {}, expected 1",
                corr[(i, i)]
            )));
        }
        for j in 0..i {
            if (corr[(i, j)] - corr[(j, i)]).abs() > 1e-8 {
                return Err(Error::InvalidMatrix("correlation matrix is not symmetric".into()));
            }
        }
    }
    Ok(())
}

impl MaxNormalSample {
    pub fn simulate(
        corr: &DMatrix<f64>,
        samples: usize,
        stream: RngStream,
        sidedness: Sidedness,
    ) -> Result<Self> {
        check_correlation(corr)?;
        if samples == 0 {
            return Err(Error::InvalidArgument("Monte Carlo sample count must be positive".into()));
        }
        let dim = corr.nrows();
        let root = spectral_sqrt(corr)?;
        // Drop null directions; they contribute nothing to Z.
        let cols: Vec<usize> = (0..dim)
            .filter(|&c| root.column(c).iter().any(|v| *v != 0.0))
            .collect();
        let factor: Vec<f64> = (0..dim)
            .flat_map(|r| cols.iter().map(move |&c| (r, c)))
            .map(|(r, c)| root[(r, c)])
            .collect();
        let width = cols.len();

        let chunks = samples.div_ceil(CHUNK);
        let parts: Vec<Vec<f64>> = (0..chunks)
            .into_par_iter()
            .map(|c| {
                let len = CHUNK.min(samples - c * CHUNK);
                let mut rng = stream.child(c as u64).rng();
                let mut eps = vec![0.0; width];
                let mut out = Vec::with_capacity(len);
                for _ in 0..len {
                    for e in eps.iter_mut() {
                        *e = StandardNormal.sample(&mut rng);
                    }
                    let mut best = f64::NEG_INFINITY;
                    for r in 0..dim {
                        let row = &factor[r * width..(r + 1) * width];
                        let z: f64 = row.iter().zip(&eps).map(|(a, b)| a * b).sum();
                        let v = match sidedness {
                            Sidedness::TwoSided => z.abs(),
                            Sidedness::Upper => z,
                        };
                        if v > best {
                            best = v;
                        }
                    }
                    out.push(best);
                }
                out
            })
            .collect();

        let mut sorted: Vec<f64> = parts.into_iter().flatten().collect();
        sorted.sort_by(f64::total_cmp);
        Ok(Self { sorted })
    }

    pub fn len(&self) -> usize {
        self.sorted.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sorted.is_empty()
    }

    /// Smallest sampled `c` with empirical `P(M <= c) >= 1 - alpha`.
    pub fn quantile(&self, alpha: f64) -> f64 {
        let s = self.sorted.len();
        let tail = ((alpha * s as f64).floor() as usize).min(s - 1);
        self.sorted[s - tail - 1]
    }

    /// Empirical `P(M >= observed)`.
    pub fn p_value(&self, observed: f64) -> f64 {
        if observed.is_nan() {
            return 1.0;
        }
        let below = self.sorted.partition_point(|&m| m < observed);
        (self.sorted.len() - below) as f64 / self.sorted.len() as f64
    }
}

/// Monte Carlo equicoordinate `(1 - alpha)` quantile of `N(0, corr)`.
pub fn equicoordinate_quantile(
    corr: &DMatrix<f64>,
    alpha: f64,
    samples: usize,
    stream: RngStream,
) -> Result<f64> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidArgument(format!("alpha must lie in (0, 1), got {alpha}")));
    }
    Ok(MaxNormalSample::simulate(corr, samples, stream, Sidedness::TwoSided)?.quantile(alpha))
}

/// Monte Carlo `P(max_i |Z_i| >= observed)` for `Z ~ N(0, corr)`.
pub fn max_abs_mvn_pvalue(
    corr: &DMatrix<f64>,
    observed: f64,
    samples: usize,
    stream: RngStream,
) -> Result<f64> {
    Ok(MaxNormalSample::simulate(corr, samples, stream, Sidedness::TwoSided)?.p_value(observed))
}
