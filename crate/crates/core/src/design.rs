//! Weight functions on `[0, 1]` and pairwise contrast matrices.

use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A weight function evaluated at the left limit of a pooled distribution
/// estimate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum WeightSpec {
    /// `u^r (1 - u)^g`; `(0, 0)` is the log-rank weight.
    FlemingHarrington { r: u32, g: u32 },
    /// `1 - 2u`, changes sign at the median.
    Crossing,
    /// Piecewise-linear interpolation through `(u, w)` points spanning
    /// `[0, 1]`.
    Tabulated { points: Vec<(f64, f64)> },
}

impl WeightSpec {
    pub const LOGRANK: WeightSpec = WeightSpec::FlemingHarrington { r: 0, g: 0 };

    pub fn tabulated(points: Vec<(f64, f64)>) -> Result<Self> {
        if points.len() < 2 {
            return Err(Error::InvalidWeight("tabulated weight needs at least 2 points".into()));
        }
        if points.first().unwrap().0 != 0.0 || points.last().unwrap().0 != 1.0 {
            return Err(Error::InvalidWeight("tabulated weight must span [0, 1]".into()));
        }
        if points.windows(2).any(|w| !(w[1].0 > w[0].0)) {
            return Err(Error::InvalidWeight("tabulated abscissae must increase strictly".into()));
        }
        if points.iter().any(|p| !p.1.is_finite()) {
            return Err(Error::InvalidWeight("tabulated values must be finite".into()));
        }
        Ok(WeightSpec::Tabulated { points })
    }

    pub fn label(&self) -> String {
        self.to_string()
    }

    /// Evaluation without range checks; callers guarantee `u ∈ [0, 1]`.
    pub(crate) fn eval_unchecked(&self, u: f64) -> f64 {
        match self {
            WeightSpec::FlemingHarrington { r, g } => u.powi(*r as i32) * (1.0 - u).powi(*g as i32),
            WeightSpec::Crossing => 1.0 - 2.0 * u,
            WeightSpec::Tabulated { points } => {
                let i = points.partition_point(|p| p.0 <= u).clamp(1, points.len() - 1);
                let (u0, w0) = points[i - 1];
                let (u1, w1) = points[i];
                w0 + (w1 - w0) * (u - u0) / (u1 - u0)
            }
        }
    }

    pub fn eval(&self, u: f64) -> Result<f64> {
        if !(0.0..=1.0).contains(&u) {
            return Err(Error::InvalidWeight(format!("argument {u} outside [0, 1]")));
        }
        Ok(self.eval_unchecked(u))
    }
}

/// Evaluates `w` at `u ∈ [0, 1]`.
pub fn eval_weight(w: &WeightSpec, u: f64) -> Result<f64> {
    w.eval(u)
}

impl fmt::Display for WeightSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            WeightSpec::FlemingHarrington { r, g } => write!(f, "fh:{r}:{g}"),
            WeightSpec::Crossing => f.write_str("cross"),
            WeightSpec::Tabulated { points } => write!(f, "tabulated[{}]", points.len()),
        }
    }
}

impl FromStr for WeightSpec {
    type Err = Error;

    /// Accepts `fh:r:g` and `cross`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s == "cross" {
            return Ok(WeightSpec::Crossing);
        }
        let parts: Vec<&str> = s.split(':').collect();
        match parts.as_slice() {
            ["fh", r, g] => {
                let parse = |v: &str| {
                    v.parse::<u32>()
                        .map_err(|_| Error::InvalidWeight(format!("`{v}` is not a non-negative integer in `{s}`")))
                };
                Ok(WeightSpec::FlemingHarrington { r: parse(r)?, g: parse(g)? })
            }
            _ => Err(Error::InvalidWeight(format!("unrecognized weight `{s}`, expected fh:r:g or cross"))),
        }
    }
}

/// Parses a comma-separated weight list such as `fh:0:0,cross`.
pub fn parse_weights(s: &str) -> Result<Vec<WeightSpec>> {
    let weights: Vec<WeightSpec> = s.split(',').map(str::parse).collect::<Result<_>>()?;
    if weights.is_empty() {
        return Err(Error::InvalidWeight("empty weight list".into()));
    }
    Ok(weights)
}

/// `{log-rank, crossing}`.
pub fn default_weights() -> Vec<WeightSpec> {
    vec![WeightSpec::LOGRANK, WeightSpec::Crossing]
}

/// Checks that the weights are linearly independent as functions on
/// `[0, 1]`: the Gram matrix of their values on a 201-point grid must have
/// full rank at relative tolerance 1e-10.
pub fn check_linear_independence(weights: &[WeightSpec]) -> Result<()> {
    let grid: Vec<f64> = (0..=200).map(|i| i as f64 / 200.0).collect();
    let m = weights.len();
    let values: Vec<Vec<f64>> = weights.iter().map(|w| grid.iter().map(|&u| w.eval_unchecked(u)).collect()).collect();
    let gram = DMatrix::from_fn(m, m, |p, s| values[p].iter().zip(&values[s]).map(|(a, b)| a * b).sum::<f64>());
    let eig = nalgebra::SymmetricEigen::new(gram);
    let max = eig.eigenvalues.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let min = eig.eigenvalues.iter().fold(f64::INFINITY, |a, v| a.min(*v));
    if max == 0.0 || min <= 1e-10 * max {
        return Err(Error::InvalidWeight("weights are linearly dependent".into()));
    }
    Ok(())
}

/// A pairwise comparison of two groups (0-based, `first < second`). Its row
/// in the contrast matrix has `-1` at `first` and `+1` at `second`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Contrast {
    pub first: usize,
    pub second: usize,
}

impl Contrast {
    /// Display label in the `"j2 - j1"` form with 1-based indices.
    pub fn label(&self) -> String {
        format!("{} - {}", self.second + 1, self.first + 1)
    }

    /// Sign of group `j` in this row: `+1` for `second`, `-1` for `first`.
    pub fn sign(&self, j: usize) -> f64 {
        if j == self.second {
            1.0
        } else if j == self.first {
            -1.0
        } else {
            0.0
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ContrastKind {
    Dunnett,
    Tukey,
    Custom,
}

/// The `q` pairwise contrasts under test for `k` groups.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContrastMatrix {
    kind: ContrastKind,
    k: usize,
    contrasts: Vec<Contrast>,
}

impl ContrastMatrix {
    /// Many-to-one comparisons against group 0.
    pub fn dunnett(k: usize) -> Result<Self> {
        check_k(k)?;
        let contrasts = (1..k).map(|second| Contrast { first: 0, second }).collect();
        Ok(Self { kind: ContrastKind::Dunnett, k, contrasts })
    }

    /// All pairs `(j1, j2)` with `j1 < j2`, lexicographic.
    pub fn tukey(k: usize) -> Result<Self> {
        check_k(k)?;
        let contrasts = (0..k)
            .flat_map(|first| (first + 1..k).map(move |second| Contrast { first, second }))
            .collect();
        Ok(Self { kind: ContrastKind::Tukey, k, contrasts })
    }

    /// User-chosen pairs of 0-based indices, each ordered `first < second`.
    pub fn custom(k: usize, pairs: &[(usize, usize)]) -> Result<Self> {
        check_k(k)?;
        if pairs.is_empty() {
            return Err(Error::InvalidContrast("no pairs given".into()));
        }
        let mut contrasts: Vec<Contrast> = Vec::with_capacity(pairs.len());
        for &(first, second) in pairs {
            if first >= second {
                return Err(Error::InvalidContrast(format!(
                    "pair ({}, {}) must be ordered first < second",
                    first + 1,
                    second + 1
                )));
            }
            if second >= k {
                return Err(Error::InvalidContrast(format!(
                    "pair ({}, {}) out of range for {k} groups",
                    first + 1,
                    second + 1
                )));
            }
            let c = Contrast { first, second };
            if contrasts.contains(&c) {
                return Err(Error::InvalidContrast(format!(
                    "duplicate pair ({}, {})",
                    first + 1,
                    second + 1
                )));
            }
            contrasts.push(c);
        }
        Ok(Self { kind: ContrastKind::Custom, k, contrasts })
    }

    pub fn kind(&self) -> ContrastKind {
        self.kind
    }

    pub fn num_groups(&self) -> usize {
        self.k
    }

    pub fn len(&self) -> usize {
        self.contrasts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.contrasts.is_empty()
    }

    pub fn contrasts(&self) -> &[Contrast] {
        &self.contrasts
    }

    pub fn labels(&self) -> Vec<String> {
        self.contrasts.iter().map(Contrast::label).collect()
    }

    /// Dense `q × k` matrix.
    pub fn matrix(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.len(), self.k, |a, j| self.contrasts[a].sign(j))
    }
}

fn check_k(k: usize) -> Result<()> {
    if k < 2 {
        return Err(Error::InvalidContrast(format!("need at least 2 groups, got {k}")));
    }
    Ok(())
}

/// Contrast selection as written on the command line: `dunnett`, `tukey`,
/// or `pairs:1-2,1-3` with 1-based group numbers.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum ContrastSpec {
    Dunnett,
    Tukey,
    Pairs(Vec<(usize, usize)>),
}

impl ContrastSpec {
    pub fn build(&self, k: usize) -> Result<ContrastMatrix> {
        match self {
            ContrastSpec::Dunnett => ContrastMatrix::dunnett(k),
            ContrastSpec::Tukey => ContrastMatrix::tukey(k),
            ContrastSpec::Pairs(pairs) => {
                let zero_based: Vec<(usize, usize)> = pairs
                    .iter()
                    .map(|&(a, b)| {
                        if a == 0 || b == 0 {
                            Err(Error::InvalidContrast("group numbers start at 1".into()))
                        } else {
                            Ok((a - 1, b - 1))
                        }
                    })
                    .collect::<Result<_>>()?;
                ContrastMatrix::custom(k, &zero_based)
            }
        }
    }
}

impl fmt::Display for ContrastSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ContrastSpec::Dunnett => f.write_str("dunnett"),
            ContrastSpec::Tukey => f.write_str("tukey"),
            ContrastSpec::Pairs(pairs) => {
                let list: Vec<String> = pairs.iter().map(|(a, b)| format!("{a}-{b}")).collect();
                write!(f, "pairs:{}", list.join(","))
            }
        }
    }
}

impl FromStr for ContrastSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        match s {
            "dunnett" => return Ok(ContrastSpec::Dunnett),
            "tukey" => return Ok(ContrastSpec::Tukey),
            _ => {}
        }
        let Some(list) = s.strip_prefix("pairs:") else {
            return Err(Error::InvalidContrast(format!(
                "unrecognized contrast `{s}`, expected dunnett, tukey or pairs:1-2,..."
            )));
        };
        list.split(',')
            .map(|p| {
                let (a, b) = p
                    .split_once('-')
                    .ok_or_else(|| Error::InvalidContrast(format!("pair `{p}` must look like 1-2")))?;
                let num = |v: &str| {
                    v.trim()
                        .parse::<usize>()
                        .map_err(|_| Error::InvalidContrast(format!("`{v}` is not a group number")))
                };
                Ok((num(a)?, num(b)?))
            })
            .collect::<Result<Vec<_>>>()
            .map(ContrastSpec::Pairs)
    }
}
