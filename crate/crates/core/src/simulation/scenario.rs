use std::fmt;

use rand::Rng;
use rand_distr::{Distribution, Exp, LogNormal, Weibull};
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};
use statrs::function::gamma::{gamma, gamma_lr};

use crate::error::{Error, Result};
use crate::survdata::{Observation, SurvivalSample};

pub const MAX_CENSORING: f64 = 0.3;

/// Calibration tolerance on the censoring probability.
const CENSORING_TOL: f64 = 1e-6;

/// Event-time law of one group.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "law", rename_all = "snake_case")]
pub enum EventLaw {
    Exponential { rate: f64 },
    Lognormal { meanlog: f64, sdlog: f64 },
    Weibull { shape: f64, scale: f64 },
}

impl fmt::Display for EventLaw {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EventLaw::Exponential { rate } => write!(f, "Exponential({rate})"),
            EventLaw::Lognormal { meanlog, sdlog } => write!(f, "Lognormal({meanlog}, {sdlog})"),
            EventLaw::Weibull { shape, scale } => write!(f, "Weibull({shape}, {scale})"),
        }
    }
}

impl EventLaw {
    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            EventLaw::Exponential { rate } => rate.is_finite() && rate > 0.0,
            EventLaw::Lognormal { meanlog, sdlog } => meanlog.is_finite() && sdlog.is_finite() && sdlog > 0.0,
            EventLaw::Weibull { shape, scale } => {
                shape.is_finite() && scale.is_finite() && shape > 0.0 && scale > 0.0
            }
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidArgument(format!("invalid law {self}")))
        }
    }

    pub fn survival(&self, t: f64) -> f64 {
        if t <= 0.0 {
            return 1.0;
        }
        match *self {
            EventLaw::Exponential { rate } => (-rate * t).exp(),
            EventLaw::Lognormal { meanlog, sdlog } => {
                0.5 * statrs::function::erf::erfc((t.ln() - meanlog) / (sdlog * std::f64::consts::SQRT_2))
            }
            EventLaw::Weibull { shape, scale } => (-(t / scale).powf(shape)).exp(),
        }
    }

    /// `∫_0^b S(t) dt`, the restricted mean up to `b`.
    pub fn restricted_mean(&self, b: f64) -> f64 {
        if b <= 0.0 {
            return 0.0;
        }
        match *self {
            EventLaw::Exponential { rate } => -(-rate * b).exp_m1() / rate,
            EventLaw::Lognormal { meanlog, sdlog } => {
                let std = Normal::new(0.0, 1.0).unwrap();
                let partial = (meanlog + 0.5 * sdlog * sdlog).exp() * std.cdf((b.ln() - meanlog - sdlog * sdlog) / sdlog);
                b * self.survival(b) + partial
            }
            EventLaw::Weibull { shape, scale } => {
                let a = 1.0 / shape;
                scale * a * gamma(a) * gamma_lr(a, (b / scale).powf(shape))
            }
        }
    }

    /// `P(C < T)` for `C ~ Uniform(0, b)`.
    pub fn censoring_probability(&self, b: f64) -> f64 {
        if b <= 0.0 {
            1.0
        } else {
            self.restricted_mean(b) / b
        }
    }

    /// Upper bound `b` of a uniform censoring law giving `P(C < T) = target`.
    pub fn calibrate_uniform_censoring(&self, target: f64) -> Result<f64> {
        self.validate()?;
        if !(target > 0.0 && target < 1.0) {
            return Err(Error::InvalidArgument(format!("censoring target must lie in (0, 1), got {target}")));
        }
        let unreachable = || Error::UnreachableCensoring { target, law: self.to_string() };
        // P(C < T) falls from 1 towards 0 as b grows.
        let mut lo = 0.0;
        let mut hi = 1.0;
        let mut steps = 0;
        while self.censoring_probability(hi) > target {
            lo = hi;
            hi *= 2.0;
            steps += 1;
            if steps > 1100 || !hi.is_finite() {
                return Err(unreachable());
            }
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            let p = self.censoring_probability(mid);
            if !p.is_finite() {
                return Err(unreachable());
            }
            if (p - target).abs() < CENSORING_TOL {
                return Ok(mid);
            }
            if p > target {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let mid = 0.5 * (lo + hi);
        if (self.censoring_probability(mid) - target).abs() < CENSORING_TOL {
            Ok(mid)
        } else {
            Err(unreachable())
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            EventLaw::Exponential { rate } => Exp::new(rate).unwrap().sample(rng),
            EventLaw::Lognormal { meanlog, sdlog } => LogNormal::new(meanlog, sdlog).unwrap().sample(rng),
            EventLaw::Weibull { shape, scale } => Weibull::new(scale, shape).unwrap().sample(rng),
        }
    }
}

/// Group laws of a simulation setting plus group size and censoring level.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(from = "ScenarioFile")]
pub struct Scenario {
    pub name: String,
    pub laws: Vec<EventLaw>,
    /// Subjects per group.
    pub n: usize,
    /// Target censoring proportion per group; 0 disables censoring.
    pub censoring: f64,
    /// All groups share one law.
    pub null: bool,
}

/// On-disk form; omitted fields take the `Scenario::new` defaults.
#[derive(Deserialize)]
struct ScenarioFile {
    name: String,
    laws: Vec<EventLaw>,
    n: Option<usize>,
    censoring: Option<f64>,
    null: Option<bool>,
}

impl From<ScenarioFile> for Scenario {
    fn from(f: ScenarioFile) -> Self {
        let mut s = Scenario::new(f.name, f.laws);
        s.n = f.n.unwrap_or(s.n);
        s.censoring = f.censoring.unwrap_or(s.censoring);
        s.null = f.null.unwrap_or(s.null);
        s
    }
}

impl Scenario {
    pub fn new(name: impl Into<String>, laws: Vec<EventLaw>) -> Self {
        let null = laws.windows(2).all(|w| w[0] == w[1]);
        Self { name: name.into(), laws, n: 100, censoring: 0.0, null }
    }

    pub fn num_groups(&self) -> usize {
        self.laws.len()
    }

    /// The same scenario with every group drawn from the first law.
    pub fn null_variant(&self) -> Self {
        let first = self.laws[0];
        Self {
            name: format!("{}-null", self.name),
            laws: vec![first; self.laws.len()],
            null: true,
            ..self.clone()
        }
    }

    pub fn with_design(mut self, n: usize, censoring: f64) -> Self {
        self.n = n;
        self.censoring = censoring;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.laws.len() < 2 {
            return Err(Error::InvalidArgument(format!("scenario `{}` needs at least two groups", self.name)));
        }
        if self.n == 0 {
            return Err(Error::InvalidArgument("group size must be positive".into()));
        }
        if !(0.0..=MAX_CENSORING).contains(&self.censoring) {
            return Err(Error::InvalidArgument(format!(
                "censoring target must lie in [0, {MAX_CENSORING}], got {}",
                self.censoring
            )));
        }
        self.laws.iter().try_for_each(EventLaw::validate)
    }

    /// Uniform censoring bounds per group, `None` without censoring.
    pub fn censoring_bounds(&self) -> Result<Option<Vec<f64>>> {
        self.validate()?;
        if self.censoring == 0.0 {
            return Ok(None);
        }
        self.laws
            .iter()
            .map(|l| l.calibrate_uniform_censoring(self.censoring))
            .collect::<Result<Vec<_>>>()
            .map(Some)
    }

    /// Every multiset of this scenario's laws of the same size, in
    /// lexicographic order of law indices. Group order is ignored, so four
    /// laws give 35 settings.
    pub fn law_combinations(&self) -> Vec<Scenario> {
        let k = self.laws.len();
        let mut out = Vec::new();
        let mut idx = vec![0usize; k];
        loop {
            let laws = idx.iter().map(|&i| self.laws[i]).collect();
            let tag: Vec<String> = idx.iter().map(|i| (i + 1).to_string()).collect();
            let mut s = Scenario::new(format!("{}[{}]", self.name, tag.join("")), laws);
            s.n = self.n;
            s.censoring = self.censoring;
            out.push(s);
            // next non-decreasing index vector
            let Some(pos) = (0..k).rev().find(|&p| idx[p] + 1 < k) else {
                break;
            };
            let v = idx[pos] + 1;
            idx[pos..].iter_mut().for_each(|x| *x = v);
        }
        out
    }
}

/// Draws one dataset. Groups are filled in order; within a group each
/// subject draws its event time and then its censoring time.
pub fn sample_scenario<R: Rng + ?Sized>(scenario: &Scenario, rng: &mut R) -> Result<SurvivalSample> {
    let bounds = scenario.censoring_bounds()?;
    sample_with_bounds(scenario, bounds.as_deref(), rng)
}

pub(crate) fn sample_with_bounds<R: Rng + ?Sized>(
    scenario: &Scenario,
    bounds: Option<&[f64]>,
    rng: &mut R,
) -> Result<SurvivalSample> {
    let mut obs = Vec::with_capacity(scenario.n * scenario.laws.len());
    for (j, law) in scenario.laws.iter().enumerate() {
        for _ in 0..scenario.n {
            let t = law.sample(rng);
            let c = match bounds {
                Some(b) => rng.random::<f64>() * b[j],
                None => f64::INFINITY,
            };
            obs.push(if c < t {
                Observation { time: c, event: false, group: j }
            } else {
                Observation { time: t, event: true, group: j }
            });
        }
    }
    // a zero censoring draw would be an invalid observed time
    for o in obs.iter_mut() {
        if o.time <= 0.0 {
            o.time = f64::MIN_POSITIVE;
        }
    }
    let labels = (1..=scenario.laws.len()).map(|j| j.to_string()).collect();
    SurvivalSample::new(obs, labels)
}

fn exp(rate: f64) -> EventLaw {
    EventLaw::Exponential { rate }
}

fn lnorm(meanlog: f64, sdlog: f64) -> EventLaw {
    EventLaw::Lognormal { meanlog, sdlog }
}

fn weib(shape: f64, scale: f64) -> EventLaw {
    EventLaw::Weibull { shape, scale }
}

/// The four alternatives followed by their full-null variants.
pub fn builtin_scenarios() -> Vec<Scenario> {
    let alternatives = vec![
        Scenario::new("prop", vec![exp(1.5), exp(2.5), exp(3.5), exp(4.5)]),
        Scenario::new("nprop", vec![lnorm(1.7, 1.7), lnorm(2.4, 1.6), lnorm(3.5, 1.7), lnorm(4.5, 1.6)]),
        Scenario::new("cross", vec![weib(1.5, 5.0), weib(2.5, 5.0), weib(3.5, 5.0), weib(4.5, 2.4)]),
        Scenario::new("mix", vec![lnorm(2.3, 1.7), exp(0.05), weib(2.4, 11.7), lnorm(3.0, 1.6)]),
    ];
    let nulls: Vec<Scenario> = alternatives.iter().map(Scenario::null_variant).collect();
    alternatives.into_iter().chain(nulls).collect()
}

/// Looks up a built-in scenario by name; `null` selects its full-null variant.
pub fn builtin_scenario(name: &str, null: bool) -> Result<Scenario> {
    let base = name.trim().to_ascii_lowercase();
    let base = base.strip_suffix("-null").map(str::to_string).unwrap_or(base);
    let wanted = if null || name.trim().ends_with("-null") { format!("{base}-null") } else { base };
    builtin_scenarios()
        .into_iter()
        .find(|s| s.name == wanted)
        .ok_or_else(|| Error::InvalidArgument(format!("unknown scenario `{name}`")))
}
