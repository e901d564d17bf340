use std::io::Write;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use super::scenario::{sample_with_bounds, Scenario};
use crate::design::{default_weights, ContrastSpec, WeightSpec};
use crate::error::{Error, Result};
use crate::numerics::{RngStream, Sidedness};
use crate::procedures::{run_method, Method, MethodSettings};
use crate::survdata::SurvivalSample;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyConfig {
    pub methods: Vec<Method>,
    pub contrast: ContrastSpec,
    pub weights: Vec<WeightSpec>,
    pub runs: usize,
    /// Subjects per group.
    pub n: usize,
    /// One setting per scenario and censoring target.
    pub censoring: Vec<f64>,
    pub alpha: f64,
    pub mc_samples: usize,
    pub iterations: usize,
    pub sidedness: Sidedness,
    pub seed: u64,
    /// Coverage of the binomial band used to flag FWER.
    pub band_level: f64,
}

impl Default for StudyConfig {
    fn default() -> Self {
        Self {
            methods: Method::ALL.to_vec(),
            contrast: ContrastSpec::Dunnett,
            weights: default_weights(),
            runs: 1000,
            n: 100,
            censoring: vec![0.0],
            alpha: 0.05,
            mc_samples: 50_000,
            iterations: 500,
            sidedness: Sidedness::TwoSided,
            seed: 0,
            band_level: 0.99,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContrastRate {
    pub label: String,
    pub rejections: usize,
    pub rate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodSummary {
    pub method: String,
    pub runs: usize,
    /// Runs with at least one local rejection. Under a full null this is the FWER.
    pub global_rejections: usize,
    pub global_rate: f64,
    pub contrasts: Vec<ContrastRate>,
    /// Runs in which some contrast was degenerate.
    pub degenerate_runs: usize,
    /// Binomial band around `alpha`, full-null settings only.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub band: Option<[f64; 2]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub within_band: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SettingSummary {
    pub scenario: String,
    pub laws: Vec<String>,
    pub null: bool,
    pub n: usize,
    pub censoring: f64,
    pub methods: Vec<MethodSummary>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyReport {
    pub seed: u64,
    pub runs: usize,
    pub alpha: f64,
    pub contrast: String,
    pub weights: Vec<String>,
    pub band_level: f64,
    pub settings: Vec<SettingSummary>,
}

/// Per-run decisions of one method.
#[derive(Debug, Clone)]
struct Decision {
    global: bool,
    local: Vec<bool>,
    degenerate: bool,
}

/// Symmetric binomial band around `alpha` for `runs` Bernoulli trials.
pub fn binomial_band(alpha: f64, runs: usize, level: f64) -> [f64; 2] {
    let z = Normal::new(0.0, 1.0).unwrap().inverse_cdf(0.5 + level / 2.0);
    let half = z * (alpha * (1.0 - alpha) / runs as f64).sqrt();
    [alpha - half, alpha + half]
}

/// Stable 64-bit key of a setting, so a run's data does not depend on which
/// other settings share the study.
fn setting_key(s: &Scenario) -> u64 {
    const PRIME: u64 = 0x0000_0100_0000_01b3;
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    let bytes = s
        .name
        .bytes()
        .chain(s.n.to_le_bytes())
        .chain(s.censoring.to_bits().to_le_bytes());
    for b in bytes {
        h ^= u64::from(b);
        h = h.wrapping_mul(PRIME);
    }
    h
}

fn run_stream(scenario: &Scenario, seed: u64, run: usize) -> RngStream {
    RngStream::new(seed, run as u64).child(setting_key(scenario))
}

/// Data and per-method seeds of one run. Method `m` uses
/// `seeds[Method::ALL` index of `m]`.
fn draw_run(
    scenario: &Scenario,
    bounds: Option<&[f64]>,
    seed: u64,
    run: usize,
) -> Result<(SurvivalSample, [u64; 5])> {
    let mut rng = run_stream(scenario, seed, run).rng();
    let data = sample_with_bounds(scenario, bounds, &mut rng)?;
    let seeds: [u64; 5] = std::array::from_fn(|_| rng.random());
    Ok((data, seeds))
}

/// Dataset and method seed used by `run` of `scenario` in a study with
/// master seed `seed`.
pub fn run_data(scenario: &Scenario, method: Method, seed: u64, run: usize) -> Result<(SurvivalSample, u64)> {
    let bounds = scenario.censoring_bounds()?;
    let (data, seeds) = draw_run(scenario, bounds.as_deref(), seed, run)?;
    Ok((data, seeds[method_slot(method)]))
}

fn method_slot(m: Method) -> usize {
    Method::ALL.iter().position(|x| *x == m).unwrap()
}

fn validate(scenarios: &[Scenario], cfg: &StudyConfig) -> Result<()> {
    if cfg.runs == 0 {
        return Err(Error::InvalidArgument("runs must be at least 1".into()));
    }
    if scenarios.is_empty() {
        return Err(Error::InvalidArgument("no scenarios selected".into()));
    }
    if cfg.methods.is_empty() {
        return Err(Error::InvalidArgument("no methods selected".into()));
    }
    if cfg.censoring.is_empty() {
        return Err(Error::InvalidArgument("no censoring targets".into()));
    }
    if !(cfg.alpha > 0.0 && cfg.alpha < 1.0) {
        return Err(Error::InvalidArgument(format!("alpha must lie in (0, 1), got {}", cfg.alpha)));
    }
    if !(cfg.band_level > 0.0 && cfg.band_level < 1.0) {
        return Err(Error::InvalidArgument("band level must lie in (0, 1)".into()));
    }
    Ok(())
}

fn run_setting(scenario: &Scenario, cfg: &StudyConfig) -> Result<SettingSummary> {
    let bounds = scenario.censoring_bounds()?;
    let contrasts = cfg.contrast.build(scenario.num_groups())?;

    let outcomes: Vec<Vec<Decision>> = (0..cfg.runs)
        .into_par_iter()
        .map(|run| {
            let (data, seeds) = draw_run(scenario, bounds.as_deref(), cfg.seed, run)?;
            cfg.methods
                .iter()
                .map(|&m| {
                    let settings = MethodSettings {
                        mc_samples: cfg.mc_samples,
                        iterations: cfg.iterations,
                        seed: seeds[method_slot(m)],
                        sidedness: cfg.sidedness,
                    };
                    let r = run_method(m, &data, &contrasts, &cfg.weights, cfg.alpha, &settings)?;
                    Ok(Decision {
                        global: r.rejections() > 0,
                        local: r.contrasts.iter().map(|c| c.rejected).collect(),
                        degenerate: r.contrasts.iter().any(|c| c.degenerate),
                    })
                })
                .collect()
        })
        .collect::<Result<_>>()?;

    let runs = cfg.runs;
    let rate = |count: usize| count as f64 / runs as f64;
    let band = binomial_band(cfg.alpha, runs, cfg.band_level);
    let methods = cfg
        .methods
        .iter()
        .enumerate()
        .map(|(mi, m)| {
            let mut global = 0;
            let mut degenerate = 0;
            let mut local = vec![0usize; contrasts.len()];
            for run in &outcomes {
                let d = &run[mi];
                global += usize::from(d.global);
                degenerate += usize::from(d.degenerate);
                for (acc, &r) in local.iter_mut().zip(&d.local) {
                    *acc += usize::from(r);
                }
            }
            let global_rate = rate(global);
            MethodSummary {
                method: m.name().into(),
                runs,
                global_rejections: global,
                global_rate,
                contrasts: contrasts
                    .labels()
                    .into_iter()
                    .zip(local)
                    .map(|(label, c)| ContrastRate { label, rejections: c, rate: rate(c) })
                    .collect(),
                degenerate_runs: degenerate,
                band: scenario.null.then_some(band),
                within_band: scenario.null.then(|| global_rate >= band[0] && global_rate <= band[1]),
            }
        })
        .collect();

    Ok(SettingSummary {
        scenario: scenario.name.clone(),
        laws: scenario.laws.iter().map(ToString::to_string).collect(),
        null: scenario.null,
        n: scenario.n,
        censoring: scenario.censoring,
        methods,
    })
}

/// Runs every scenario at every censoring target. Run `r` of a setting
/// draws from a stream derived from `(cfg.seed, r)` and the setting itself,
/// so results do not depend on thread count or on the other settings.
pub fn run_study(scenarios: &[Scenario], cfg: &StudyConfig) -> Result<StudyReport> {
    validate(scenarios, cfg)?;
    let mut settings = Vec::with_capacity(scenarios.len() * cfg.censoring.len());
    for s in scenarios {
        for &c in &cfg.censoring {
            let setting = s.clone().with_design(cfg.n, c);
            setting.validate()?;
            settings.push(run_setting(&setting, cfg)?);
        }
    }
    Ok(StudyReport {
        seed: cfg.seed,
        runs: cfg.runs,
        alpha: cfg.alpha,
        contrast: cfg.contrast.to_string(),
        weights: cfg.weights.iter().map(WeightSpec::label).collect(),
        band_level: cfg.band_level,
        settings,
    })
}

impl StudyReport {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// One row per setting, method and contrast, plus a `global` row per
    /// setting and method.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record([
            "scenario", "null", "n", "censoring", "method", "contrast", "rejections", "runs", "rate", "within_band",
        ])?;
        for s in &self.settings {
            for m in &s.methods {
                let rows = m
                    .contrasts
                    .iter()
                    .map(|c| (c.label.as_str(), c.rejections, c.rate, String::new()))
                    .chain(std::iter::once((
                        "global",
                        m.global_rejections,
                        m.global_rate,
                        m.within_band.map(|b| b.to_string()).unwrap_or_default(),
                    )));
                for (label, count, rate, flag) in rows {
                    w.write_record([
                        s.scenario.clone(),
                        s.null.to_string(),
                        s.n.to_string(),
                        s.censoring.to_string(),
                        m.method.clone(),
                        label.to_string(),
                        count.to_string(),
                        m.runs.to_string(),
                        rate.to_string(),
                        flag,
                    ])?;
                }
            }
        }
        w.flush()?;
        Ok(())
    }

    /// Plain-text rejection-rate table per setting.
    pub fn text(&self) -> String {
        use std::fmt::Write as _;
        let mut out = String::new();
        for s in &self.settings {
            let kind = if s.null { "FWER" } else { "rejection rates" };
            let _ = writeln!(
                out,
                "{} ({kind}, n={}, censoring={}, runs={}, {})",
                s.scenario, s.n, s.censoring, self.runs, self.contrast
            );
            let label_w = s.methods[0].contrasts.iter().map(|c| c.label.len()).max().unwrap_or(0).max(8);
            let _ = write!(out, "{:>label_w$}", "");
            for m in &s.methods {
                let _ = write!(out, "  {:>13}", m.method);
            }
            out.push('\n');
            for (i, c) in s.methods[0].contrasts.iter().enumerate() {
                let _ = write!(out, "{:>label_w$}", c.label);
                for m in &s.methods {
                    let _ = write!(out, "  {:>13.3}", m.contrasts[i].rate);
                }
                out.push('\n');
            }
            let _ = write!(out, "{:>label_w$}", "global");
            for m in &s.methods {
                let flag = match m.within_band {
                    Some(false) => "!",
                    _ => " ",
                };
                let _ = write!(out, "  {:>12.3}{flag}", m.global_rate);
            }
            out.push_str("\n\n");
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::design::ContrastMatrix;
    use crate::simulation::builtin_scenario;

    fn small(methods: Vec<Method>, runs: usize) -> StudyConfig {
        StudyConfig { methods, runs, n: 20, mc_samples: 2000, iterations: 100, seed: 17, ..Default::default() }
    }

    #[test]
    fn band_at_1000_runs() {
        let [lo, hi] = binomial_band(0.05, 1000, 0.99);
        assert!((lo - 0.03225).abs() < 1e-4 && (hi - 0.06775).abs() < 1e-4, "{lo} {hi}");
        // 95% band at 10,000 runs
        let [lo, hi] = binomial_band(0.05, 10_000, 0.95);
        assert!((lo - 0.0457).abs() < 1e-4 && (hi - 0.0543).abs() < 1e-4);
    }

    #[test]
    fn zero_runs_rejected() {
        let s = builtin_scenario("prop", false).unwrap();
        assert!(run_study(&[s], &small(vec![Method::LogRank], 0)).is_err());
    }

    #[test]
    fn single_run_matches_direct_call() {
        let s = builtin_scenario("cross", false).unwrap();
        let cfg = small(Method::ALL.to_vec(), 1);
        let report = run_study(std::slice::from_ref(&s), &cfg).unwrap();
        let setting = s.with_design(cfg.n, 0.0);
        let h = ContrastMatrix::dunnett(4).unwrap();
        for (i, m) in Method::ALL.into_iter().enumerate() {
            let (data, seed) = run_data(&setting, m, cfg.seed, 0).unwrap();
            let settings = MethodSettings { mc_samples: cfg.mc_samples, iterations: cfg.iterations, seed, sidedness: cfg.sidedness };
            let direct = run_method(m, &data, &h, &cfg.weights, cfg.alpha, &settings).unwrap();
            let summary = &report.settings[0].methods[i];
            assert_eq!(summary.global_rejections, usize::from(direct.rejections() > 0));
            for (c, d) in summary.contrasts.iter().zip(&direct.contrasts) {
                assert_eq!(c.rejections, usize::from(d.rejected), "{m}");
            }
        }
    }

    #[test]
    fn deterministic_and_subset_reproducible() {
        let scenarios = vec![builtin_scenario("mix", true).unwrap(), builtin_scenario("prop", false).unwrap()];
        let mut cfg = small(vec![Method::LogRank, Method::CasanovaRademacher], 6);
        cfg.censoring = vec![0.0, 0.2];
        let a = run_study(&scenarios, &cfg).unwrap();
        let b = run_study(&scenarios, &cfg).unwrap();
        assert_eq!(a.to_json().unwrap(), b.to_json().unwrap());
        assert_eq!(a.settings.len(), 4);
        // a setting alone reproduces its numbers inside the larger study
        cfg.censoring = vec![0.2];
        let alone = run_study(&scenarios[1..], &cfg).unwrap();
        assert_eq!(alone.settings[0], a.settings[3]);
    }

    #[test]
    fn rates_and_flags() {
        let s = builtin_scenario("nprop", true).unwrap();
        let r = run_study(&[s], &small(vec![Method::LogRank, Method::Mdir], 10)).unwrap();
        for m in &r.settings[0].methods {
            assert!((0.0..=1.0).contains(&m.global_rate));
            assert!(m.band.is_some() && m.within_band.is_some());
            assert_eq!(m.contrasts.len(), 3);
            let max_local = m.contrasts.iter().map(|c| c.rejections).max().unwrap();
            let sum_local: usize = m.contrasts.iter().map(|c| c.rejections).sum();
            assert!(m.global_rejections >= max_local && m.global_rejections <= sum_local);
        }
    }

    #[test]
    fn dunnett_rejects_at_least_as_often_as_tukey() {
        let s = builtin_scenario("prop", false).unwrap();
        let mut cfg = small(vec![Method::LogRank, Method::Mdir], 40);
        cfg.n = 30;
        let d = run_study(std::slice::from_ref(&s), &cfg).unwrap();
        cfg.contrast = ContrastSpec::Tukey;
        let t = run_study(&[s], &cfg).unwrap();
        for (dm, tm) in d.settings[0].methods.iter().zip(&t.settings[0].methods) {
            let shared = |m: &MethodSummary, labels: &[String]| -> usize {
                m.contrasts.iter().filter(|c| labels.contains(&c.label)).map(|c| c.rejections).sum()
            };
            let labels: Vec<String> = dm.contrasts.iter().map(|c| c.label.clone()).collect();
            assert!(shared(dm, &labels) >= shared(tm, &labels), "{}", dm.method);
        }
    }

    #[test]
    fn csv_layout() {
        let s = builtin_scenario("prop", false).unwrap();
        let r = run_study(&[s], &small(vec![Method::LogRank], 3)).unwrap();
        let mut buf = Vec::new();
        r.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 1 + 4);
        assert!(text.lines().nth(4).unwrap().contains(",global,"));
        assert!(r.text().contains("prop (rejection rates"));
    }
}
