//! The four multiple contrast test procedures.
//!
//! Every procedure returns a [`TestReport`] in which a contrast is rejected
//! exactly when its adjusted p-value is at most `alpha`, and the global
//! hypothesis is rejected exactly when some contrast is.

mod report;

pub use report::{format_p, text_table, write_csv, ContrastResult, GlobalResult, Resampling, TestReport};

use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::design::{Contrast, ContrastMatrix, WeightSpec};
use crate::error::{Error, Result};
use crate::estimators::MultiplierLaw;
use crate::numerics::linalg::{moore_penrose, quadratic_form};
use crate::numerics::{chi_square_upper_tail, MaxNormalSample, RngStream, Sidedness, DEFAULT_MC_SAMPLES};
use crate::survdata::{RiskTable, SurvivalSample};
use crate::teststats::{joint_covariance, mdir_statistic, PairKernel, Pooling};

pub const MIN_BOOTSTRAP_ITERATIONS: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Method {
    #[serde(rename = "logrank")]
    LogRank,
    #[serde(rename = "mdir")]
    Mdir,
    #[serde(rename = "maxwlr")]
    MaxWeightedLr,
    #[serde(rename = "casanova-rade")]
    CasanovaRademacher,
    #[serde(rename = "casanova-pois")]
    CasanovaPoisson,
}

impl Method {
    pub const ALL: [Method; 5] = [
        Method::LogRank,
        Method::Mdir,
        Method::MaxWeightedLr,
        Method::CasanovaRademacher,
        Method::CasanovaPoisson,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Method::LogRank => "logrank",
            Method::Mdir => "mdir",
            Method::MaxWeightedLr => "maxwlr",
            Method::CasanovaRademacher => "casanova-rade",
            Method::CasanovaPoisson => "casanova-pois",
        }
    }

    pub fn multiplier_law(&self) -> Option<MultiplierLaw> {
        match self {
            Method::CasanovaRademacher => Some(MultiplierLaw::Rademacher),
            Method::CasanovaPoisson => Some(MultiplierLaw::CenteredPoisson),
            _ => None,
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.name() == s.trim())
            .ok_or_else(|| Error::InvalidArgument(format!("unknown method `{s}`")))
    }
}

/// Parses a comma-separated method list.
pub fn parse_methods(s: &str) -> Result<Vec<Method>> {
    s.split(',').map(str::parse).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McConfig {
    pub samples: usize,
    pub seed: u64,
    pub sidedness: Sidedness,
}

impl Default for McConfig {
    fn default() -> Self {
        Self { samples: DEFAULT_MC_SAMPLES, seed: 0, sidedness: Sidedness::TwoSided }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BootstrapConfig {
    pub law: MultiplierLaw,
    pub iterations: usize,
    pub seed: u64,
}

/// Resampling settings shared by all methods of one invocation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MethodSettings {
    pub mc_samples: usize,
    pub iterations: usize,
    pub seed: u64,
    pub sidedness: Sidedness,
}

impl Default for MethodSettings {
    fn default() -> Self {
        Self { mc_samples: DEFAULT_MC_SAMPLES, iterations: 1000, seed: 0, sidedness: Sidedness::TwoSided }
    }
}

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("alpha must lie in (0, 1), got {alpha}")))
    }
}

fn check_design(sample: &SurvivalSample, contrasts: &ContrastMatrix, weights: &[WeightSpec]) -> Result<()> {
    if contrasts.num_groups() != sample.num_groups() {
        return Err(Error::InvalidContrast(format!(
            "contrast matrix is for {} groups but the sample has {}",
            contrasts.num_groups(),
            sample.num_groups()
        )));
    }
    if contrasts.is_empty() {
        return Err(Error::InvalidContrast("no contrasts".into()));
    }
    if weights.is_empty() {
        return Err(Error::InvalidWeight("at least one weight is required".into()));
    }
    Ok(())
}

fn risk_table(sample: &SurvivalSample) -> Result<Option<RiskTable>> {
    match RiskTable::new(sample) {
        Ok(rt) => Ok(Some(rt)),
        Err(Error::NoEvents) => Ok(None),
        Err(e) => Err(e),
    }
}

fn labels(weights: &[WeightSpec]) -> Vec<String> {
    weights.iter().map(WeightSpec::label).collect()
}

fn contrast_result(c: &Contrast, statistic: f64, p_adjusted: f64, alpha: f64) -> ContrastResult {
    ContrastResult {
        label: c.label(),
        first: c.first + 1,
        second: c.second + 1,
        statistic,
        df: None,
        p_raw: None,
        p_adjusted,
        rejected: p_adjusted <= alpha,
        degenerate: false,
    }
}

fn degenerate_report(method: Method, contrasts: &ContrastMatrix, weights: &[WeightSpec], alpha: f64) -> TestReport {
    TestReport {
        method: method.name().into(),
        alpha,
        weights: labels(weights),
        contrasts: contrasts
            .contrasts()
            .iter()
            .map(|c| ContrastResult { degenerate: true, ..contrast_result(c, 0.0, 1.0, alpha) })
            .collect(),
        global: GlobalResult { statistic: 0.0, critical_value: f64::INFINITY, p_value: 1.0, rejected: false },
        resampling: None,
        notes: vec!["no events in the sample".into()],
    }
}

fn bonferroni(
    method: Method,
    sample: &SurvivalSample,
    contrasts: &ContrastMatrix,
    weights: &[WeightSpec],
    alpha: f64,
) -> Result<TestReport> {
    check_alpha(alpha)?;
    check_design(sample, contrasts, weights)?;
    let Some(rt) = risk_table(sample)? else {
        return Ok(degenerate_report(method, contrasts, weights, alpha));
    };
    let q = contrasts.len() as f64;
    let mut results = Vec::with_capacity(contrasts.len());
    for c in contrasts.contrasts() {
        let s = mdir_statistic(&rt, c.first, c.second, weights)?;
        let p_raw = chi_square_upper_tail(s.value, s.df);
        let p_adjusted = (q * p_raw).min(1.0);
        results.push(ContrastResult {
            df: Some(s.df),
            p_raw: Some(p_raw),
            degenerate: s.degenerate,
            ..contrast_result(c, s.value, p_adjusted, alpha)
        });
    }
    let min_p = results.iter().filter_map(|r| r.p_raw).fold(1.0f64, f64::min);
    let p_value = (q * min_p).min(1.0);
    let mut notes = Vec::new();
    if results.iter().any(|r| r.degenerate) {
        notes.push("contrasts without events are reported with p = 1".into());
    }
    Ok(TestReport {
        method: method.name().into(),
        alpha,
        weights: labels(weights),
        contrasts: results,
        global: GlobalResult { statistic: min_p, critical_value: alpha / q, p_value, rejected: p_value <= alpha },
        resampling: None,
        notes,
    })
}

/// Log-rank test per contrast, Bonferroni-adjusted.
pub fn adjusted_logrank(sample: &SurvivalSample, contrasts: &ContrastMatrix, alpha: f64) -> Result<TestReport> {
    bonferroni(Method::LogRank, sample, contrasts, &[WeightSpec::LOGRANK], alpha)
}

/// Multi-directional log-rank test per contrast, Bonferroni-adjusted.
pub fn adjusted_mdir(
    sample: &SurvivalSample,
    contrasts: &ContrastMatrix,
    weights: &[WeightSpec],
    alpha: f64,
) -> Result<TestReport> {
    bonferroni(Method::Mdir, sample, contrasts, weights, alpha)
}

/// Maximum over all standardized pairwise weighted log-rank statistics,
/// calibrated by the equicoordinate quantile of their joint normal limit.
///
/// Each statistic is standardized by its pairwise variance estimate; the
/// correlation between statistics comes from [`joint_covariance`].
pub fn multi_weighted_lr(
    sample: &SurvivalSample,
    contrasts: &ContrastMatrix,
    weights: &[WeightSpec],
    alpha: f64,
    mc: McConfig,
) -> Result<TestReport> {
    check_alpha(alpha)?;
    check_design(sample, contrasts, weights)?;
    if mc.samples == 0 {
        return Err(Error::InvalidArgument("Monte Carlo sample count must be positive".into()));
    }
    let method = Method::MaxWeightedLr;
    let Some(rt) = risk_table(sample)? else {
        return Ok(degenerate_report(method, contrasts, weights, alpha));
    };
    let m = weights.len();

    let mut z = Vec::with_capacity(contrasts.len() * m);
    let mut variances = Vec::with_capacity(contrasts.len() * m);
    for c in contrasts.contrasts() {
        let kernel = PairKernel::new(&rt, c.first, c.second, Pooling::Pairwise)?;
        let wvs: Vec<Vec<f64>> = weights.iter().map(|w| kernel.weight_values(w)).collect();
        let cov = kernel.covariance(&wvs);
        for (r, wv) in wvs.iter().enumerate() {
            let var = cov.matrix()[(r, r)];
            let t = kernel.statistic(wv);
            variances.push(var);
            z.push(if var > 0.0 { t / var.sqrt() } else { 0.0 });
        }
    }
    let joint = joint_covariance(&rt, contrasts, weights)?;
    let active: Vec<usize> = (0..z.len())
        .filter(|&i| variances[i] > 0.0 && joint.matrix()[(i, i)] > 0.0)
        .collect();
    if active.is_empty() {
        let mut report = degenerate_report(method, contrasts, weights, alpha);
        report.notes = vec!["every statistic has zero variance".into()];
        return Ok(report);
    }
    let full_corr = joint.correlation();
    let corr = DMatrix::from_fn(active.len(), active.len(), |a, b| full_corr[(active[a], active[b])]);
    let null = MaxNormalSample::simulate(&corr, mc.samples, RngStream::new(mc.seed, 0), mc.sidedness)?;
    let critical_value = null.quantile(alpha);

    let transform = |v: f64| match mc.sidedness {
        Sidedness::TwoSided => v.abs(),
        Sidedness::Upper => v,
    };
    let is_active = |i: usize| variances[i] > 0.0 && joint.matrix()[(i, i)] > 0.0;
    let mut results = Vec::with_capacity(contrasts.len());
    let mut global = f64::NEG_INFINITY;
    for (a, c) in contrasts.contrasts().iter().enumerate() {
        let stats: Vec<f64> = (0..m).map(|r| a * m + r).filter(|&i| is_active(i)).map(|i| transform(z[i])).collect();
        if stats.is_empty() {
            results.push(ContrastResult { degenerate: true, ..contrast_result(c, 0.0, 1.0, alpha) });
            continue;
        }
        let local = stats.into_iter().fold(f64::NEG_INFINITY, f64::max);
        global = global.max(local);
        results.push(contrast_result(c, local, null.p_value(local), alpha));
    }
    let p_value = null.p_value(global);
    let mut notes = Vec::new();
    if active.len() < z.len() {
        notes.push(format!("{} zero-variance statistics excluded from the maximum", z.len() - active.len()));
    }
    Ok(TestReport {
        method: method.name().into(),
        alpha,
        weights: labels(weights),
        contrasts: results,
        global: GlobalResult { statistic: global, critical_value, p_value, rejected: p_value <= alpha },
        resampling: Some(Resampling::MonteCarlo { samples: mc.samples, seed: mc.seed }),
        notes,
    })
}

/// Observed pooled statistics of one contrast plus what the bootstrap needs
/// to recompute them.
struct PooledContrast {
    /// `coef[r][e] = sqrt(n / (n1 n2)) w_r(F̂(t_e−)) Y1 Y2 / Y`
    coef: Vec<Vec<f64>>,
    pinv: DMatrix<f64>,
    value: f64,
    df: usize,
    degenerate: bool,
}

fn pooled_contrast(rt: &RiskTable, c: &Contrast, weights: &[WeightSpec]) -> Result<PooledContrast> {
    let kernel = PairKernel::new(rt, c.first, c.second, Pooling::AllGroups)?;
    let wvs: Vec<Vec<f64>> = weights.iter().map(|w| kernel.weight_values(w)).collect();
    let stats: Vec<f64> = wvs.iter().map(|wv| kernel.statistic(wv)).collect();
    let cov = kernel.covariance(&wvs);
    let coef = wvs
        .iter()
        .map(|wv| wv.iter().zip(&kernel.k).map(|(w, k)| kernel.scale * w * k).collect())
        .collect();
    if cov.is_zero() {
        let m = weights.len();
        return Ok(PooledContrast { coef, pinv: DMatrix::zeros(m, m), value: 0.0, df: 0, degenerate: true });
    }
    let pinv = moore_penrose(cov.matrix(), None)?;
    let value = quadratic_form(&pinv.matrix, &stats).max(0.0);
    Ok(PooledContrast { coef, value, df: pinv.rank, degenerate: pinv.rank == 0, pinv: pinv.matrix })
}

/// Largest bootstrap statistic of one replicate.
fn bootstrap_max(
    rt: &RiskTable,
    pooled: &[PooledContrast],
    contrasts: &[Contrast],
    law: MultiplierLaw,
    stream: RngStream,
    star: &mut [Vec<f64>],
    tstar: &mut Vec<f64>,
) -> f64 {
    let mut rng = stream.rng();
    // one multiplier per subject, groups in index order, subjects in input order
    for (j, row) in star.iter_mut().enumerate() {
        row.iter_mut().for_each(|v| *v = 0.0);
        for event in rt.subject_events(j) {
            let g = law.draw(&mut rng);
            if let Some(e) = event {
                row[*e] += g;
            }
        }
        for ((v, &y), &d) in row.iter_mut().zip(rt.at_risk(j)).zip(rt.events(j)) {
            if d > 0 {
                *v /= y as f64;
            }
        }
    }
    let mut best = f64::NEG_INFINITY;
    for (pc, c) in pooled.iter().zip(contrasts) {
        if pc.degenerate {
            continue;
        }
        let (s1, s2) = (&star[c.first], &star[c.second]);
        tstar.clear();
        for coef in &pc.coef {
            let mut acc = 0.0;
            for e in 0..coef.len() {
                acc += coef[e] * (s2[e] - s1[e]);
            }
            tstar.push(acc);
        }
        best = best.max(quadratic_form(&pc.pinv, tstar));
    }
    best
}

/// Maximum over contrasts of pooled Wald-type statistics, calibrated by a
/// wild bootstrap of the group-wise Nelson-Aalen estimators.
///
/// Replicate `b` draws its multipliers from substream `b` of `boot.seed`.
/// The pooled covariance is not recomputed for bootstrap replicates. The
/// critical value is the `⌈(1 - alpha)(B + 1)⌉`-th order statistic of the
/// replicate maxima, so that `C > q*` holds exactly when the add-one p-value
/// `(1 + #{C*_max >= C}) / (B + 1)` is at most `alpha`.
pub fn multi_casanova(
    sample: &SurvivalSample,
    contrasts: &ContrastMatrix,
    weights: &[WeightSpec],
    alpha: f64,
    boot: BootstrapConfig,
) -> Result<TestReport> {
    check_alpha(alpha)?;
    check_design(sample, contrasts, weights)?;
    let method = match boot.law {
        MultiplierLaw::Rademacher => Method::CasanovaRademacher,
        MultiplierLaw::CenteredPoisson => Method::CasanovaPoisson,
    };
    if boot.iterations < MIN_BOOTSTRAP_ITERATIONS {
        return Err(Error::InvalidArgument(format!(
            "at least {MIN_BOOTSTRAP_ITERATIONS} bootstrap iterations are required, got {}",
            boot.iterations
        )));
    }
    let Some(rt) = risk_table(sample)? else {
        return Ok(degenerate_report(method, contrasts, weights, alpha));
    };
    let resampling = Some(Resampling::WildBootstrap { iterations: boot.iterations, law: boot.law, seed: boot.seed });
    let pooled: Vec<PooledContrast> =
        contrasts.contrasts().iter().map(|c| pooled_contrast(&rt, c, weights)).collect::<Result<_>>()?;
    if pooled.iter().all(|p| p.degenerate) {
        let mut report = degenerate_report(method, contrasts, weights, alpha);
        report.notes = vec!["every contrast has a zero-rank covariance".into()];
        report.resampling = resampling;
        return Ok(report);
    }

    let b = boot.iterations;
    let k = rt.num_groups();
    let mut maxima: Vec<f64> = (0..b)
        .into_par_iter()
        .map_init(
            || (vec![vec![0.0; rt.len()]; k], Vec::with_capacity(weights.len())),
            |(star, tstar), rep| {
                bootstrap_max(&rt, &pooled, contrasts.contrasts(), boot.law, RngStream::new(boot.seed, rep as u64), star, tstar)
            },
        )
        .collect();
    maxima.sort_by(f64::total_cmp);

    let p_of = |c: f64| {
        let below = maxima.partition_point(|&m| m < c);
        (1 + b - below) as f64 / (b + 1) as f64
    };
    // largest count of exceedances that still rejects
    let allowed = (alpha * (b + 1) as f64).floor() as usize;
    let critical_value = if allowed == 0 { f64::INFINITY } else { maxima[b - allowed] };

    let results: Vec<ContrastResult> = contrasts
        .contrasts()
        .iter()
        .zip(&pooled)
        .map(|(c, pc)| ContrastResult {
            df: Some(pc.df),
            degenerate: pc.degenerate,
            ..contrast_result(c, pc.value, if pc.degenerate { 1.0 } else { p_of(pc.value) }, alpha)
        })
        .collect();
    let c_max = pooled.iter().filter(|p| !p.degenerate).map(|p| p.value).fold(f64::NEG_INFINITY, f64::max);
    let p_value = p_of(c_max);
    let mut notes = Vec::new();
    if pooled.iter().any(|p| p.degenerate) {
        notes.push("contrasts with zero-rank covariance are reported with p = 1".into());
    }
    Ok(TestReport {
        method: method.name().into(),
        alpha,
        weights: labels(weights),
        contrasts: results,
        global: GlobalResult { statistic: c_max, critical_value, p_value, rejected: p_value <= alpha },
        resampling,
        notes,
    })
}

/// Runs `method` with shared settings.
pub fn run_method(
    method: Method,
    sample: &SurvivalSample,
    contrasts: &ContrastMatrix,
    weights: &[WeightSpec],
    alpha: f64,
    settings: &MethodSettings,
) -> Result<TestReport> {
    match method {
        Method::LogRank => adjusted_logrank(sample, contrasts, alpha),
        Method::Mdir => adjusted_mdir(sample, contrasts, weights, alpha),
        Method::MaxWeightedLr => multi_weighted_lr(
            sample,
            contrasts,
            weights,
            alpha,
            McConfig { samples: settings.mc_samples, seed: settings.seed, sidedness: settings.sidedness },
        ),
        Method::CasanovaRademacher | Method::CasanovaPoisson => multi_casanova(
            sample,
            contrasts,
            weights,
            alpha,
            BootstrapConfig {
                law: method.multiplier_law().unwrap(),
                iterations: settings.iterations,
                seed: settings.seed,
            },
        ),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::design::default_weights;

    fn worked() -> SurvivalSample {
        SurvivalSample::from_columns(&[1.0, 3.0, 2.0, 4.0], &[true; 4], &[0, 0, 1, 1]).unwrap()
    }

    fn three_groups() -> SurvivalSample {
        let mut t = Vec::new();
        let mut d = Vec::new();
        let mut g = Vec::new();
        for j in 0..3 {
            for i in 0..30 {
                let base = (i as f64 + 1.0) * 0.37 % 5.0 + 0.1;
                t.push(base * (1.0 + j as f64 * 0.8));
                d.push(i % 4 != 0);
                g.push(j);
            }
        }
        SurvivalSample::from_columns(&t, &d, &g).unwrap()
    }

    #[test]
    fn logrank_worked_example() {
        let h = ContrastMatrix::dunnett(2).unwrap();
        let r = adjusted_logrank(&worked(), &h, 0.05).unwrap();
        let c = &r.contrasts[0];
        assert!((c.statistic - 8.0 / 13.0).abs() < 1e-12);
        assert!((c.p_adjusted - 0.4328).abs() < 1e-4, "{}", c.p_adjusted);
        assert!(!c.rejected);
        assert!(!r.global.rejected);
    }

    #[test]
    fn bonferroni_level_for_21_tests() {
        let h = ContrastMatrix::tukey(7).unwrap();
        assert_eq!(h.len(), 21);
        let level: f64 = 0.05 / h.len() as f64;
        assert_eq!((level * 10_000.0).round() / 10_000.0, 0.0024);
    }

    #[test]
    fn mdir_single_logrank_weight_equals_logrank() {
        let s = three_groups();
        let h = ContrastMatrix::tukey(3).unwrap();
        let a = adjusted_logrank(&s, &h, 0.05).unwrap();
        let b = adjusted_mdir(&s, &h, &[WeightSpec::LOGRANK], 0.05).unwrap();
        assert_eq!(a.contrasts, b.contrasts);
        assert_eq!(a.global, b.global);
    }

    #[test]
    fn identical_groups_not_rejected() {
        let s = SurvivalSample::from_columns(
            &[1.0, 2.0, 3.0, 1.0, 2.0, 3.0, 1.0, 2.0, 3.0],
            &[true, false, true, true, false, true, true, false, true],
            &[0, 0, 0, 1, 1, 1, 2, 2, 2],
        )
        .unwrap();
        let h = ContrastMatrix::tukey(3).unwrap();
        let settings = MethodSettings { mc_samples: 2000, iterations: 200, seed: 1, sidedness: Sidedness::TwoSided };
        for m in Method::ALL {
            let r = run_method(m, &s, &h, &default_weights(), 0.05, &settings).unwrap();
            assert_eq!(r.rejections(), 0, "{m}");
            assert!(!r.global.rejected);
            for c in &r.contrasts {
                assert_eq!(c.statistic, 0.0, "{m}");
                assert_eq!(c.p_adjusted, 1.0, "{m}");
            }
        }
    }

    #[test]
    fn report_invariants_hold() {
        let s = three_groups();
        let h = ContrastMatrix::tukey(3).unwrap();
        let settings = MethodSettings { mc_samples: 5000, iterations: 300, seed: 3, sidedness: Sidedness::TwoSided };
        for alpha in [0.01, 0.05, 0.2, 0.5] {
            for m in Method::ALL {
                let r = run_method(m, &s, &h, &default_weights(), alpha, &settings).unwrap();
                for c in &r.contrasts {
                    assert!((0.0..=1.0).contains(&c.p_adjusted));
                    assert_eq!(c.rejected, c.p_adjusted <= alpha, "{m}");
                }
                assert_eq!(r.global.rejected, r.rejections() > 0, "{m} alpha={alpha}");
            }
        }
    }

    #[test]
    fn maxwlr_single_contrast_matches_chi_square() {
        let s = three_groups();
        let h = ContrastMatrix::custom(3, &[(0, 2)]).unwrap();
        let lr = adjusted_logrank(&s, &h, 0.05).unwrap();
        let mx = multi_weighted_lr(&s, &h, &[WeightSpec::LOGRANK], 0.05, McConfig { samples: 100_000, seed: 5, ..Default::default() })
            .unwrap();
        assert!((mx.contrasts[0].statistic.powi(2) - lr.contrasts[0].statistic).abs() < 1e-10);
        assert!((mx.contrasts[0].p_adjusted - lr.contrasts[0].p_adjusted).abs() < 0.005);
    }

    #[test]
    fn maxwlr_duplicated_weight_keeps_critical_value() {
        let s = three_groups();
        let h = ContrastMatrix::dunnett(3).unwrap();
        let mc = McConfig { samples: 100_000, seed: 8, ..Default::default() };
        let a = multi_weighted_lr(&s, &h, &default_weights(), 0.05, mc).unwrap();
        let mut dup = default_weights();
        dup.push(WeightSpec::Crossing);
        let b = multi_weighted_lr(&s, &h, &dup, 0.05, mc).unwrap();
        assert!((a.global.critical_value - b.global.critical_value).abs() < 0.02);
    }

    #[test]
    fn casanova_two_groups_single_weight_equals_mdir_statistic() {
        let s = three_groups();
        let two = SurvivalSample::from_columns(
            &s.observations().iter().filter(|o| o.group < 2).map(|o| o.time).collect::<Vec<_>>(),
            &s.observations().iter().filter(|o| o.group < 2).map(|o| o.event).collect::<Vec<_>>(),
            &s.observations().iter().filter(|o| o.group < 2).map(|o| o.group).collect::<Vec<_>>(),
        )
        .unwrap();
        let h = ContrastMatrix::dunnett(2).unwrap();
        let boot = BootstrapConfig { law: MultiplierLaw::Rademacher, iterations: 200, seed: 1 };
        let c = multi_casanova(&two, &h, &default_weights(), 0.05, boot).unwrap();
        let m = adjusted_mdir(&two, &h, &default_weights(), 0.05).unwrap();
        assert_eq!(c.contrasts[0].statistic, m.contrasts[0].statistic);
    }

    #[test]
    fn casanova_is_deterministic() {
        let s = three_groups();
        let h = ContrastMatrix::tukey(3).unwrap();
        for law in [MultiplierLaw::Rademacher, MultiplierLaw::CenteredPoisson] {
            let boot = BootstrapConfig { law, iterations: 1000, seed: 42 };
            let a = multi_casanova(&s, &h, &default_weights(), 0.05, boot).unwrap();
            let b = multi_casanova(&s, &h, &default_weights(), 0.05, boot).unwrap();
            assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
        }
    }

    #[test]
    fn casanova_rejects_too_few_iterations() {
        let h = ContrastMatrix::dunnett(2).unwrap();
        let boot = BootstrapConfig { law: MultiplierLaw::Rademacher, iterations: 99, seed: 0 };
        assert!(multi_casanova(&worked(), &h, &default_weights(), 0.05, boot).is_err());
    }

    #[test]
    fn increasing_alpha_keeps_rejections() {
        let s = three_groups();
        let h = ContrastMatrix::tukey(3).unwrap();
        let settings = MethodSettings { mc_samples: 5000, iterations: 300, seed: 9, sidedness: Sidedness::TwoSided };
        for m in Method::ALL {
            let mut prev: Option<Vec<bool>> = None;
            for alpha in [0.001, 0.01, 0.05, 0.1, 0.3] {
                let r = run_method(m, &s, &h, &default_weights(), alpha, &settings).unwrap();
                let now: Vec<bool> = r.contrasts.iter().map(|c| c.rejected).collect();
                if let Some(p) = &prev {
                    assert!(p.iter().zip(&now).all(|(a, b)| !a || *b), "{m}");
                }
                prev = Some(now);
            }
        }
    }

    #[test]
    fn contrast_order_does_not_change_rejections() {
        let s = three_groups();
        let fwd = ContrastMatrix::custom(3, &[(0, 1), (0, 2), (1, 2)]).unwrap();
        let rev = ContrastMatrix::custom(3, &[(1, 2), (0, 2), (0, 1)]).unwrap();
        let settings = MethodSettings { mc_samples: 20_000, iterations: 500, seed: 4, sidedness: Sidedness::TwoSided };
        for m in [Method::LogRank, Method::Mdir, Method::CasanovaRademacher] {
            let a = run_method(m, &s, &fwd, &default_weights(), 0.05, &settings).unwrap();
            let b = run_method(m, &s, &rev, &default_weights(), 0.05, &settings).unwrap();
            for c in &a.contrasts {
                let other = b.contrasts.iter().find(|o| o.label == c.label).unwrap();
                assert_eq!(c.rejected, other.rejected, "{m} {}", c.label);
                assert_eq!(c.p_adjusted, other.p_adjusted, "{m} {}", c.label);
            }
        }
    }

    #[test]
    fn method_names_round_trip() {
        for m in Method::ALL {
            assert_eq!(m.name().parse::<Method>().unwrap(), m);
        }
        assert_eq!(parse_methods("logrank,casanova-pois").unwrap(), vec![Method::LogRank, Method::CasanovaPoisson]);
        assert!("wilcoxon".parse::<Method>().is_err());
    }

    #[test]
    fn no_event_sample_is_degenerate() {
        let s = SurvivalSample::from_columns(&[1.0, 2.0], &[false, false], &[0, 1]).unwrap();
        let h = ContrastMatrix::dunnett(2).unwrap();
        let r = adjusted_logrank(&s, &h, 0.05).unwrap();
        assert!(r.contrasts[0].degenerate);
        assert_eq!(r.contrasts[0].p_adjusted, 1.0);
    }
}
