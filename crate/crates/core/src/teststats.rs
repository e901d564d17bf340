//! Weighted log-rank statistics, their covariance estimators and the
//! studentized quadratic forms built from them.
//!
//! Two constructions share one kernel. The *pairwise* one uses only the two
//! groups being compared: the weight is evaluated at the product-limit
//! estimate of the merged pair, and the risk-set factor is
//! `Y_{j1} Y_{j2} / (Y_{j1} + Y_{j2})`. The *pooled* one evaluates the
//! weight at the estimate of all groups and divides by the total risk set
//! `Y`. With two groups the constructions coincide bit for bit.
//!
//! All integrals are finite sums over the event times of the risk table in
//! ascending order. Terms with an empty risk set contribute zero.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::design::{Contrast, ContrastMatrix, WeightSpec};
use crate::estimators::{km_left_limits, nelson_aalen_increments};
use crate::error::{Error, Result};
use crate::numerics::linalg::{floor_psd, moore_penrose, quadratic_form};
use crate::survdata::RiskTable;

/// Statistics indexed by (contrast, weight), contrast-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatVector {
    values: Vec<f64>,
    m: usize,
    q: usize,
}

impl StatVector {
    pub fn new(values: Vec<f64>, q: usize, m: usize) -> Result<Self> {
        if values.len() != q * m {
            return Err(Error::InvalidArgument(format!("expected {} values, got {}", q * m, values.len())));
        }
        Ok(Self { values, m, q })
    }

    pub fn get(&self, contrast: usize, weight: usize) -> f64 {
        self.values[contrast * self.m + weight]
    }

    /// Weights for one contrast.
    pub fn contrast(&self, contrast: usize) -> &[f64] {
        &self.values[contrast * self.m..(contrast + 1) * self.m]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn num_weights(&self) -> usize {
        self.m
    }

    pub fn num_contrasts(&self) -> usize {
        self.q
    }
}

/// Symmetric covariance estimate.
#[derive(Debug, Clone, PartialEq)]
pub struct CovMatrix(DMatrix<f64>);

impl CovMatrix {
    fn from_symmetric_fill(dim: usize, mut entry: impl FnMut(usize, usize) -> f64) -> Self {
        let mut m = DMatrix::zeros(dim, dim);
        for p in 0..dim {
            for s in 0..=p {
                let v = entry(p, s);
                m[(p, s)] = v;
                m[(s, p)] = v;
            }
        }
        CovMatrix(m)
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn into_inner(self) -> DMatrix<f64> {
        self.0
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|&v| v == 0.0)
    }

    /// Correlation matrix; components with zero variance get a unit diagonal
    /// and zero off-diagonal entries.
    pub fn correlation(&self) -> DMatrix<f64> {
        let d = self.dim();
        let sd: Vec<f64> = (0..d).map(|i| self.0[(i, i)].max(0.0).sqrt()).collect();
        DMatrix::from_fn(d, d, |i, j| {
            if i == j {
                1.0
            } else if sd[i] > 0.0 && sd[j] > 0.0 {
                (self.0[(i, j)] / (sd[i] * sd[j])).clamp(-1.0, 1.0)
            } else {
                0.0
            }
        })
    }
}

/// A Wald-type statistic `x' Σ⁻ x` with its chi-square degrees of freedom.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadraticForm {
    pub value: f64,
    pub df: usize,
    /// Set when the covariance is identically zero.
    pub degenerate: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Pooling {
    Pairwise,
    AllGroups,
}

/// Per-event-time ingredients for one ordered pair of groups.
#[derive(Debug, Clone)]
pub(crate) struct PairKernel {
    /// `F̂_S(t−)` at each event time.
    pub u: Vec<f64>,
    /// `Y_{j1} Y_{j2} / Y_S`.
    pub k: Vec<f64>,
    pub da_first: Vec<f64>,
    pub da_second: Vec<f64>,
    /// `dN_S / Y_S` times the tie factor `(Y_S - dN_S) / (Y_S - 1)`.
    pub dvar: Vec<f64>,
    /// `sqrt(n / (n_{j1} n_{j2}))`
    pub scale: f64,
    /// `n / (n_{j1} n_{j2})`
    pub scale_sq: f64,
}

fn check_pair(rt: &RiskTable, j1: usize, j2: usize) -> Result<()> {
    let k = rt.num_groups();
    if j1 >= k || j2 >= k {
        return Err(Error::InvalidArgument(format!("group index out of range for {k} groups")));
    }
    if j1 == j2 {
        return Err(Error::InvalidArgument("a contrast needs two distinct groups".into()));
    }
    Ok(())
}

impl PairKernel {
    pub(crate) fn new(rt: &RiskTable, first: usize, second: usize, pooling: Pooling) -> Result<Self> {
        check_pair(rt, first, second)?;
        let (ys, ds) = match pooling {
            Pooling::Pairwise => rt.subset_counts(&[first, second]),
            Pooling::AllGroups => (rt.total_at_risk().to_vec(), rt.total_events().to_vec()),
        };
        let u = km_left_limits(&ys, &ds);
        let y1 = rt.at_risk(first);
        let y2 = rt.at_risk(second);
        let k = (0..rt.len())
            .map(|e| {
                if y1[e] == 0 || y2[e] == 0 {
                    0.0
                } else {
                    (y1[e] as f64 * y2[e] as f64) / ys[e] as f64
                }
            })
            .collect();
        let dvar = ys
            .iter()
            .zip(&ds)
            .map(|(&y, &d)| {
                if y == 0 || d == 0 {
                    0.0
                } else {
                    let tie = if y > 1 { (y - d) as f64 / (y - 1) as f64 } else { 1.0 };
                    d as f64 / y as f64 * tie
                }
            })
            .collect();
        let n = rt.total_size() as f64;
        let sizes = rt.group_sizes();
        let scale_sq = n / (sizes[first] as f64 * sizes[second] as f64);
        Ok(Self {
            u,
            k,
            da_first: nelson_aalen_increments(rt, first),
            da_second: nelson_aalen_increments(rt, second),
            dvar,
            scale: scale_sq.sqrt(),
            scale_sq,
        })
    }

    /// `w(F̂_S(t_e−))` for every event time.
    pub(crate) fn weight_values(&self, w: &WeightSpec) -> Vec<f64> {
        self.u.iter().map(|&u| w.eval_unchecked(u.clamp(0.0, 1.0))).collect()
    }

    pub(crate) fn statistic(&self, wv: &[f64]) -> f64 {
        let mut acc = 0.0;
        for e in 0..self.u.len() {
            acc += wv[e] * self.k[e] * (self.da_second[e] - self.da_first[e]);
        }
        self.scale * acc
    }

    pub(crate) fn covariance(&self, wvs: &[Vec<f64>]) -> CovMatrix {
        CovMatrix::from_symmetric_fill(wvs.len(), |p, s| {
            let mut acc = 0.0;
            for e in 0..self.u.len() {
                acc += wvs[s][e] * wvs[p][e] * self.k[e] * self.dvar[e];
            }
            self.scale_sq * acc
        })
    }
}

fn quadratic(stats: &[f64], cov: &CovMatrix) -> Result<QuadraticForm> {
    if cov.is_zero() {
        return Ok(QuadraticForm { value: 0.0, df: 0, degenerate: true });
    }
    let pinv = moore_penrose(cov.matrix(), None)?;
    let value = quadratic_form(&pinv.matrix, stats).max(0.0);
    Ok(QuadraticForm { value, df: pinv.rank, degenerate: pinv.rank == 0 })
}

fn weighted_parts(
    rt: &RiskTable,
    j1: usize,
    j2: usize,
    weights: &[WeightSpec],
    pooling: Pooling,
) -> Result<(Vec<f64>, CovMatrix)> {
    if weights.is_empty() {
        return Err(Error::InvalidWeight("at least one weight is required".into()));
    }
    let kernel = PairKernel::new(rt, j1, j2, pooling)?;
    let wvs: Vec<Vec<f64>> = weights.iter().map(|w| kernel.weight_values(w)).collect();
    let stats = wvs.iter().map(|wv| kernel.statistic(wv)).collect();
    Ok((stats, kernel.covariance(&wvs)))
}

/// Weighted log-rank statistic `T_{j1,j2}(w)` from the two groups alone.
pub fn pairwise_wlr(rt: &RiskTable, j1: usize, j2: usize, w: &WeightSpec) -> Result<f64> {
    let kernel = PairKernel::new(rt, j1, j2, Pooling::Pairwise)?;
    Ok(kernel.statistic(&kernel.weight_values(w)))
}

/// `m × m` covariance estimate of the pairwise statistics for `weights`.
pub fn pairwise_covariance(rt: &RiskTable, j1: usize, j2: usize, weights: &[WeightSpec]) -> Result<CovMatrix> {
    Ok(weighted_parts(rt, j1, j2, weights, Pooling::Pairwise)?.1)
}

/// Multi-directional statistic `S = T' Σ̂⁻ T` for one pair of groups.
pub fn mdir_statistic(rt: &RiskTable, j1: usize, j2: usize, weights: &[WeightSpec]) -> Result<QuadraticForm> {
    let (stats, cov) = weighted_parts(rt, j1, j2, weights, Pooling::Pairwise)?;
    quadratic(&stats, &cov)
}

/// Weighted log-rank statistic built from all-groups pooled quantities.
pub fn pooled_wlr(rt: &RiskTable, j1: usize, j2: usize, w: &WeightSpec) -> Result<f64> {
    let kernel = PairKernel::new(rt, j1, j2, Pooling::AllGroups)?;
    Ok(kernel.statistic(&kernel.weight_values(w)))
}

/// `m × m` covariance matrix of the pooled statistics.
pub fn pooled_covariance(rt: &RiskTable, j1: usize, j2: usize, weights: &[WeightSpec]) -> Result<CovMatrix> {
    Ok(weighted_parts(rt, j1, j2, weights, Pooling::AllGroups)?.1)
}

/// Pooled quadratic form `C = T̃' Ĉov⁻ T̃` for one pair of groups.
pub fn casanova_statistic(rt: &RiskTable, j1: usize, j2: usize, weights: &[WeightSpec]) -> Result<QuadraticForm> {
    let (stats, cov) = weighted_parts(rt, j1, j2, weights, Pooling::AllGroups)?;
    quadratic(&stats, &cov)
}

/// Pairwise statistics for every (contrast, weight).
pub fn pairwise_stat_vector(rt: &RiskTable, contrasts: &ContrastMatrix, weights: &[WeightSpec]) -> Result<StatVector> {
    let mut values = Vec::with_capacity(contrasts.len() * weights.len());
    for c in contrasts.contrasts() {
        let kernel = PairKernel::new(rt, c.first, c.second, Pooling::Pairwise)?;
        for w in weights {
            values.push(kernel.statistic(&kernel.weight_values(w)));
        }
    }
    StatVector::new(values, contrasts.len(), weights.len())
}

/// Joint `mq × mq` covariance of all pairwise statistics.
///
/// The entry for (contrast `a`, weight `p`) and (contrast `b`, weight `s`)
/// sums, over the groups shared by `a` and `b`, the product of the group's
/// signs in both rows times
/// `sqrt(n²/(n_{a1} n_{a2} n_{b1} n_{b2})) Σ_t w_p(F̂_a(t−)) w_s(F̂_b(t−)) K_a K_b dN_j / Y_j²`.
/// Contrasts without a common group are uncorrelated. The result is
/// symmetrized and floored to be positive semidefinite.
pub fn joint_covariance(rt: &RiskTable, contrasts: &ContrastMatrix, weights: &[WeightSpec]) -> Result<CovMatrix> {
    if weights.is_empty() {
        return Err(Error::InvalidWeight("at least one weight is required".into()));
    }
    let m = weights.len();
    let q = contrasts.len();
    let kernels: Vec<PairKernel> = contrasts
        .contrasts()
        .iter()
        .map(|c| PairKernel::new(rt, c.first, c.second, Pooling::Pairwise))
        .collect::<Result<_>>()?;

    // g[a][p][e] = scale_a w_p(F̂_a(t_e−)) K_a(t_e)
    let g: Vec<Vec<Vec<f64>>> = kernels
        .iter()
        .map(|kn| {
            weights
                .iter()
                .map(|w| {
                    kn.weight_values(w)
                        .iter()
                        .zip(&kn.k)
                        .map(|(wv, k)| kn.scale * wv * k)
                        .collect()
                })
                .collect()
        })
        .collect();
    // v[j][e] = dN_j / Y_j²
    let v: Vec<Vec<f64>> = (0..rt.num_groups())
        .map(|j| {
            rt.events(j)
                .iter()
                .zip(rt.at_risk(j))
                .map(|(&d, &y)| if y > 0 { d as f64 / (y as f64 * y as f64) } else { 0.0 })
                .collect()
        })
        .collect();

    let shared = |a: &Contrast, b: &Contrast| -> Vec<(usize, f64)> {
        [a.first, a.second]
            .into_iter()
            .filter(|&j| j == b.first || j == b.second)
            .map(|j| (j, a.sign(j) * b.sign(j)))
            .collect()
    };

    let cs = contrasts.contrasts();
    let raw = CovMatrix::from_symmetric_fill(q * m, |row, col| {
        let (a, p) = (row / m, row % m);
        let (b, s) = (col / m, col % m);
        let mut total = 0.0;
        for (j, sign) in shared(&cs[a], &cs[b]) {
            let mut acc = 0.0;
            for e in 0..rt.len() {
                acc += g[a][p][e] * g[b][s][e] * v[j][e];
            }
            total += sign * acc;
        }
        total
    });
    Ok(CovMatrix(floor_psd(raw.matrix())))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::design::default_weights;
    use crate::survdata::SurvivalSample;

    fn table(times: &[f64], events: &[bool], groups: &[usize]) -> RiskTable {
        RiskTable::new(&SurvivalSample::from_columns(times, events, groups).unwrap()).unwrap()
    }

    /// g1 = {1, 3}, g2 = {2, 4}, all events.
    fn worked() -> RiskTable {
        table(&[1.0, 3.0, 2.0, 4.0], &[true; 4], &[0, 0, 1, 1])
    }

    const LR: WeightSpec = WeightSpec::LOGRANK;

    #[test]
    fn worked_example_values() {
        let rt = worked();
        let t = pairwise_wlr(&rt, 0, 1, &LR).unwrap();
        assert!((t + 2.0 / 3.0).abs() < 1e-12, "{t}");
        let cov = pairwise_covariance(&rt, 0, 1, &[LR]).unwrap();
        assert!((cov.matrix()[(0, 0)] - 13.0 / 18.0).abs() < 1e-12);
        let s = mdir_statistic(&rt, 0, 1, &[LR]).unwrap();
        assert!((s.value - 8.0 / 13.0).abs() < 1e-12);
        assert_eq!(s.df, 1);
        let c = casanova_statistic(&rt, 0, 1, &[LR]).unwrap();
        assert!((c.value - 8.0 / 13.0).abs() < 1e-12);
    }

    #[test]
    fn identical_groups_give_zero() {
        let rt = table(&[1.0, 2.0, 4.0, 1.0, 2.0, 4.0], &[true, false, true, true, false, true], &[0, 0, 0, 1, 1, 1]);
        for w in default_weights() {
            assert_eq!(pairwise_wlr(&rt, 0, 1, &w).unwrap(), 0.0);
            assert_eq!(pooled_wlr(&rt, 0, 1, &w).unwrap(), 0.0);
        }
        assert_eq!(mdir_statistic(&rt, 0, 1, &default_weights()).unwrap().value, 0.0);
        assert_eq!(casanova_statistic(&rt, 0, 1, &default_weights()).unwrap().value, 0.0);
    }

    #[test]
    fn swapping_groups_flips_sign() {
        let rt = table(&[1.0, 3.0, 2.0, 4.0, 2.5, 0.5], &[true, true, true, false, true, true], &[0, 0, 1, 1, 2, 2]);
        for w in default_weights() {
            assert_eq!(pairwise_wlr(&rt, 0, 1, &w).unwrap(), -pairwise_wlr(&rt, 1, 0, &w).unwrap());
            assert_eq!(pooled_wlr(&rt, 0, 2, &w).unwrap(), -pooled_wlr(&rt, 2, 0, &w).unwrap());
        }
        let a = mdir_statistic(&rt, 0, 1, &default_weights()).unwrap().value;
        let b = mdir_statistic(&rt, 1, 0, &default_weights()).unwrap().value;
        assert!((a - b).abs() <= 1e-12 * a.abs().max(1.0));
        assert!(pairwise_wlr(&rt, 1, 1, &LR).is_err());
    }

    #[test]
    fn no_events_in_pair_gives_zero_covariance() {
        let rt = table(&[1.0, 2.0, 3.0, 4.0, 5.0], &[false, false, false, false, true], &[0, 0, 1, 1, 2]);
        let cov = pairwise_covariance(&rt, 0, 1, &default_weights()).unwrap();
        assert!(cov.is_zero());
        let s = mdir_statistic(&rt, 0, 1, &default_weights()).unwrap();
        assert!(s.degenerate);
        assert_eq!((s.value, s.df), (0.0, 0));
        // group 2's event happens after both groups have left the risk set
        assert!(pooled_covariance(&rt, 0, 1, &default_weights()).unwrap().is_zero());
    }

    #[test]
    fn duplicated_weight_gives_rank_one() {
        let rt = worked();
        let cov = pairwise_covariance(&rt, 0, 1, &[WeightSpec::Crossing, WeightSpec::Crossing]).unwrap();
        let m = cov.matrix();
        assert_eq!(m[(0, 0)], m[(0, 1)]);
        assert_eq!(m[(0, 0)], m[(1, 1)]);
        let twice = WeightSpec::tabulated(vec![(0.0, 2.0), (1.0, 2.0)]).unwrap();
        let s = mdir_statistic(&rt, 0, 1, &[LR, twice]).unwrap();
        assert_eq!(s.df, 1);
        assert!((s.value - 8.0 / 13.0).abs() < 1e-10, "{}", s.value);
    }

    #[test]
    fn two_group_collapse_is_exact() {
        let rt = table(
            &[1.0, 2.0, 2.0, 3.0, 5.0, 1.5, 2.0, 4.0, 4.0, 6.0],
            &[true, true, false, true, true, true, true, false, true, true],
            &[0, 0, 0, 0, 0, 1, 1, 1, 1, 1],
        );
        let w = default_weights();
        for wi in &w {
            assert_eq!(pairwise_wlr(&rt, 0, 1, wi).unwrap().to_bits(), pooled_wlr(&rt, 0, 1, wi).unwrap().to_bits());
        }
        assert_eq!(pairwise_covariance(&rt, 0, 1, &w).unwrap(), pooled_covariance(&rt, 0, 1, &w).unwrap());
        assert_eq!(mdir_statistic(&rt, 0, 1, &w).unwrap(), casanova_statistic(&rt, 0, 1, &w).unwrap());
    }

    /// Direct evaluation of the pooled statistic and covariance from the
    /// sample, without the risk table: loops over each distinct event time
    /// and counts subjects by hand.
    fn pooled_oracle(times: &[f64], events: &[bool], groups: &[usize], j1: usize, j2: usize, ws: &[WeightSpec]) -> (Vec<f64>, Vec<Vec<f64>>) {
        let k = groups.iter().max().unwrap() + 1;
        let n = times.len() as f64;
        let size = |j: usize| groups.iter().filter(|&&g| g == j).count() as f64;
        let mut ets: Vec<f64> = times.iter().zip(events).filter(|(_, &d)| d).map(|(&t, _)| t).collect();
        ets.sort_by(f64::total_cmp);
        ets.dedup();
        let at_risk = |j: Option<usize>, t: f64| {
            (0..times.len()).filter(|&i| times[i] >= t && j.is_none_or(|j| groups[i] == j)).count() as f64
        };
        let died = |j: Option<usize>, t: f64| {
            (0..times.len()).filter(|&i| times[i] == t && events[i] && j.is_none_or(|j| groups[i] == j)).count() as f64
        };
        let m = ws.len();
        let mut stat = vec![0.0; m];
        let mut cov = vec![vec![0.0; m]; m];
        let mut surv = 1.0;
        for &t in &ets {
            let f_left = 1.0 - surv;
            let (y, d) = (at_risk(None, t), died(None, t));
            let (y1, y2) = (at_risk(Some(j1), t), at_risk(Some(j2), t));
            let kk = if y1 > 0.0 && y2 > 0.0 { y1 * y2 / y } else { 0.0 };
            let da = |j: usize, yj: f64| if yj > 0.0 { died(Some(j), t) / yj } else { 0.0 };
            let diff = da(j2, y2) - da(j1, y1);
            let tie = if y > 1.0 { (y - d) / (y - 1.0) } else { 1.0 };
            for p in 0..m {
                let wp = ws[p].eval(f_left).unwrap();
                stat[p] += wp * kk * diff;
                for s in 0..m {
                    cov[p][s] += wp * ws[s].eval(f_left).unwrap() * kk * d / y * tie;
                }
            }
            surv *= 1.0 - d / y;
        }
        let _ = k;
        let sc = n / (size(j1) * size(j2));
        (stat.iter().map(|v| v * sc.sqrt()).collect(), cov.iter().map(|r| r.iter().map(|v| v * sc).collect()).collect())
    }

    #[test]
    fn pooled_matches_direct_oracle_three_groups() {
        // group 2 leaves the risk set early
        let times = [1.0, 2.0, 4.0, 6.0, 7.0, 1.5, 3.0, 3.0, 5.0, 8.0, 0.5, 1.2, 2.5];
        let events = [true, true, false, true, true, true, true, true, false, true, true, false, true];
        let groups = [0, 0, 0, 0, 0, 1, 1, 1, 1, 1, 2, 2, 2];
        let rt = table(&times, &events, &groups);
        let ws = default_weights();
        for (j1, j2) in [(0, 1), (0, 2), (1, 2)] {
            let (stat, cov) = pooled_oracle(&times, &events, &groups, j1, j2, &ws);
            for (p, w) in ws.iter().enumerate() {
                let got = pooled_wlr(&rt, j1, j2, w).unwrap();
                assert!((got - stat[p]).abs() < 1e-12, "{got} vs {}", stat[p]);
            }
            let got = pooled_covariance(&rt, j1, j2, &ws).unwrap();
            for p in 0..2 {
                for s in 0..2 {
                    assert!((got.matrix()[(p, s)] - cov[p][s]).abs() < 1e-12);
                }
            }
        }
        // beyond t = 2.5 group 2 is empty, so the (0, 1) terms after that
        // point use the same risk sets as the pairwise construction
        let kp = PairKernel::new(&rt, 0, 1, Pooling::Pairwise).unwrap();
        let ka = PairKernel::new(&rt, 0, 1, Pooling::AllGroups).unwrap();
        for (e, &t) in rt.event_times().iter().enumerate() {
            if t > 2.5 {
                assert_eq!(kp.k[e], ka.k[e]);
            }
        }
    }

    #[test]
    fn mdir_matches_brute_force_assembly() {
        let rt = worked();
        let ws = default_weights();
        let s = mdir_statistic(&rt, 0, 1, &ws).unwrap();
        // worked data, pairwise F̂(t−) = 0, 1/4, 1/2, 3/4; Y1 Y2 / Y = 1, 2/3, 1/2, 0
        let u = [0.0, 0.25, 0.5, 0.75];
        let k = [1.0, 2.0 / 3.0, 0.5, 0.0];
        let da2_minus_da1 = [-0.5, 0.5, -1.0, 1.0];
        let dvar = [0.25, 1.0 / 3.0, 0.5, 1.0];
        let sc = 4.0 / 4.0; // n / (n1 n2)
        let w = |r: usize, u: f64| if r == 0 { 1.0 } else { 1.0 - 2.0 * u };
        let t: Vec<f64> = (0..2).map(|r| sc * (0..4).map(|e| w(r, u[e]) * k[e] * da2_minus_da1[e]).sum::<f64>()).collect();
        let c = |p: usize, q: usize| sc * (0..4).map(|e| w(p, u[e]) * w(q, u[e]) * k[e] * dvar[e]).sum::<f64>();
        let (a, b, d) = (c(0, 0), c(0, 1), c(1, 1));
        let det = a * d - b * b;
        let expected = (d * t[0] * t[0] - 2.0 * b * t[0] * t[1] + a * t[1] * t[1]) / det;
        assert_eq!(s.df, 2);
        assert!((s.value - expected).abs() < 1e-12, "{} vs {expected}", s.value);
    }

    #[test]
    fn joint_covariance_worked_example() {
        let rt = worked();
        let h = ContrastMatrix::dunnett(2).unwrap();
        let j = joint_covariance(&rt, &h, &[LR]).unwrap();
        // Σ_t K² (dN1/Y1² + dN2/Y2²) with n/(n1 n2) = 1:
        // t=1: 1 * 1/4, t=2: 4/9 * 1/4, t=3: 1/4 * 1, t=4: K = 0
        let expected = 0.25 + 1.0 / 9.0 + 0.25;
        assert!((j.matrix()[(0, 0)] - expected).abs() < 1e-12);
    }

    #[test]
    fn joint_covariance_sign_structure() {
        let rt = table(
            &[1.0, 2.0, 3.0, 4.0, 1.5, 2.5, 3.5, 4.5, 1.2, 2.2, 3.2, 4.2, 0.7, 1.7, 2.7, 3.7],
            &[true; 16],
            &[0, 0, 0, 0, 1, 1, 1, 1, 2, 2, 2, 2, 3, 3, 3, 3],
        );
        let h = ContrastMatrix::custom(4, &[(0, 1), (1, 2), (2, 3)]).unwrap();
        let j = joint_covariance(&rt, &h, &[LR]).unwrap();
        let m = j.matrix();
        assert!(m[(0, 1)] <= 0.0);
        assert!(m[(1, 2)] <= 0.0);
        assert!(m[(0, 2)].abs() < 1e-15);
    }

    #[test]
    fn joint_diagonal_on_single_event_data() {
        let rt = table(&[1.0, 5.0, 6.0, 7.0], &[true, false, false, false], &[0, 0, 1, 1]);
        let h = ContrastMatrix::dunnett(2).unwrap();
        let joint = joint_covariance(&rt, &h, &[LR]).unwrap();
        let pair = pairwise_covariance(&rt, 0, 1, &[LR]).unwrap();
        assert!((joint.matrix()[(0, 0)] - pair.matrix()[(0, 0)]).abs() < 1e-15);
    }

    #[test]
    fn correlation_of_zero_variance_component() {
        let c = CovMatrix(DMatrix::from_row_slice(2, 2, &[4.0, 0.0, 0.0, 0.0]));
        let r = c.correlation();
        assert_eq!(r, DMatrix::identity(2, 2));
    }
}
