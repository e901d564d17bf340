//! Nelson-Aalen, pooled Kaplan-Meier and wild-bootstrap Nelson-Aalen
//! estimators over a [`RiskTable`].

use std::io::Write;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::survdata::RiskTable;

/// Right-continuous step function starting at 0.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct StepFunction {
    jump_times: Vec<f64>,
    values: Vec<f64>,
}

impl StepFunction {
    /// `values[i]` is the level on `[jump_times[i], jump_times[i + 1])`.
    pub fn new(jump_times: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if jump_times.len() != values.len() {
            return Err(Error::InvalidArgument("jump times and values differ in length".into()));
        }
        if jump_times.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidArgument("jump times must increase strictly".into()));
        }
        Ok(Self { jump_times, values })
    }

    pub fn jump_times(&self) -> &[f64] {
        &self.jump_times
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Value at `t` (right-continuous).
    pub fn value_at(&self, t: f64) -> f64 {
        match self.jump_times.partition_point(|&s| s <= t) {
            0 => 0.0,
            i => self.values[i - 1],
        }
    }

    /// Left limit at `t`.
    pub fn value_before(&self, t: f64) -> f64 {
        match self.jump_times.partition_point(|&s| s < t) {
            0 => 0.0,
            i => self.values[i - 1],
        }
    }

    /// Writes `time,value` rows, one per jump.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "time,value")?;
        for (t, v) in self.jump_times.iter().zip(&self.values) {
            writeln!(out, "{t},{v}")?;
        }
        Ok(())
    }
}

fn cumulate(times: &[f64], increments: impl Iterator<Item = (usize, f64)>) -> StepFunction {
    let mut jump_times = Vec::new();
    let mut values = Vec::new();
    let mut acc = 0.0;
    for (e, inc) in increments {
        acc += inc;
        jump_times.push(times[e]);
        values.push(acc);
    }
    StepFunction { jump_times, values }
}

/// Nelson-Aalen increments `dN_j / Y_j` of group `j` at every event time of
/// the table (0 where the group has no event).
pub(crate) fn nelson_aalen_increments(rt: &RiskTable, j: usize) -> Vec<f64> {
    rt.events(j)
        .iter()
        .zip(rt.at_risk(j))
        .map(|(&d, &y)| if y > 0 { d as f64 / y as f64 } else { 0.0 })
        .collect()
}

/// Cumulative hazard estimate of group `j`.
pub fn nelson_aalen(rt: &RiskTable, j: usize) -> StepFunction {
    let inc = nelson_aalen_increments(rt, j);
    let d = rt.events(j);
    cumulate(rt.event_times(), (0..rt.len()).filter(|&e| d[e] > 0).map(|e| (e, inc[e])))
}

/// Left limits `F̂_S(t_e−)` of the product-limit distribution estimate of the
/// merged groups `S`, at every event time `t_e` of the table.
pub(crate) fn km_left_limits(at_risk: &[u32], events: &[u32]) -> Vec<f64> {
    let mut surv = 1.0;
    at_risk
        .iter()
        .zip(events)
        .map(|(&y, &d)| {
            let before = 1.0 - surv;
            if y > 0 && d > 0 {
                surv *= 1.0 - d as f64 / y as f64;
            }
            before
        })
        .collect()
}

/// Product-limit estimate `F̂ = 1 - Ŝ` of the merged data of `groups`.
pub fn kaplan_meier_pooled(rt: &RiskTable, groups: &[usize]) -> Result<StepFunction> {
    if groups.is_empty() {
        return Err(Error::InvalidArgument("group subset is empty".into()));
    }
    if let Some(&j) = groups.iter().find(|&&j| j >= rt.num_groups()) {
        return Err(Error::InvalidArgument(format!("group index {j} out of range")));
    }
    let (y, d) = rt.subset_counts(groups);
    let mut surv = 1.0;
    let mut jump_times = Vec::new();
    let mut values = Vec::new();
    for e in 0..rt.len() {
        if d[e] > 0 {
            surv *= 1.0 - d[e] as f64 / y[e] as f64;
            jump_times.push(rt.event_times()[e]);
            values.push(1.0 - surv);
        }
    }
    Ok(StepFunction { jump_times, values })
}

/// Multiplier law for the wild bootstrap; both have mean 0 and variance 1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MultiplierLaw {
    Rademacher,
    CenteredPoisson,
}

impl MultiplierLaw {
    pub fn short_name(&self) -> &'static str {
        match self {
            MultiplierLaw::Rademacher => "rade",
            MultiplierLaw::CenteredPoisson => "pois",
        }
    }

    #[inline]
    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self {
            MultiplierLaw::Rademacher => {
                if rng.random::<u32>() >> 31 == 1 {
                    1.0
                } else {
                    -1.0
                }
            }
            MultiplierLaw::CenteredPoisson => {
                // inversion of the unit-rate Poisson cdf
                let u: f64 = rng.random();
                let mut k = 0u32;
                let mut p = (-1.0f64).exp();
                let mut cdf = p;
                while u > cdf && k < 40 {
                    k += 1;
                    p /= k as f64;
                    cdf += p;
                }
                k as f64 - 1.0
            }
        }
    }
}

/// `count` independent multipliers from `law`.
pub fn draw_multipliers<R: Rng + ?Sized>(law: MultiplierLaw, count: usize, rng: &mut R) -> Vec<f64> {
    (0..count).map(|_| law.draw(rng)).collect()
}

/// Wild-bootstrap Nelson-Aalen of group `j`: each subject's counting process
/// is scaled by its multiplier. `multipliers` follow the group's subject
/// order in the input sample.
pub fn wild_bootstrap_nelson_aalen(rt: &RiskTable, j: usize, multipliers: &[f64]) -> Result<StepFunction> {
    let subjects = rt.subject_events(j);
    if multipliers.len() != subjects.len() {
        return Err(Error::MultiplierCount { expected: subjects.len(), got: multipliers.len() });
    }
    let mut weighted = vec![0.0; rt.len()];
    for (event, g) in subjects.iter().zip(multipliers) {
        if let Some(e) = event {
            weighted[*e] += g;
        }
    }
    let y = rt.at_risk(j);
    let d = rt.events(j);
    Ok(cumulate(
        rt.event_times(),
        (0..rt.len()).filter(|&e| d[e] > 0).map(|e| (e, weighted[e] / y[e] as f64)),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::RngStream;
    use crate::survdata::SurvivalSample;

    fn table(times: &[f64], events: &[bool], groups: &[usize]) -> RiskTable {
        RiskTable::new(&SurvivalSample::from_columns(times, events, groups).unwrap()).unwrap()
    }

    #[test]
    fn nelson_aalen_hand_values() {
        let rt = table(&[1.0, 2.0, 3.0, 10.0], &[true, true, true, false], &[0, 0, 0, 1]);
        let na = nelson_aalen(&rt, 0);
        assert_eq!(na.value_before(1.0), 0.0);
        assert!((na.value_at(1.5) - 1.0 / 3.0).abs() < 1e-15);
        assert!((na.value_at(2.0) - 5.0 / 6.0).abs() < 1e-15);
        assert!((na.value_at(2.99) - 5.0 / 6.0).abs() < 1e-15);
        assert!((na.value_at(100.0) - 11.0 / 6.0).abs() < 1e-15);
        assert!((na.value_before(3.0) - 5.0 / 6.0).abs() < 1e-15);
        // group without events
        let empty = nelson_aalen(&rt, 1);
        assert!(empty.jump_times().is_empty());
        assert_eq!(empty.value_at(5.0), 0.0);
    }

    #[test]
    fn early_censoring_reduces_risk_set_only() {
        let rt = table(&[0.5, 1.0, 2.0, 3.0], &[false, true, true, true], &[0, 0, 0, 1]);
        let na = nelson_aalen(&rt, 0);
        assert_eq!(na.jump_times(), &[1.0, 2.0]);
        assert!((na.value_at(1.0) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn kaplan_meier_hand_values() {
        let rt = table(&[1.0, 2.0, 5.0], &[true, true, false], &[0, 0, 1]);
        let km = kaplan_meier_pooled(&rt, &[0]).unwrap();
        assert_eq!(km.value_before(1.0), 0.0);
        assert_eq!(km.value_at(1.0), 0.5);
        assert_eq!(km.value_at(1.9), 0.5);
        assert_eq!(km.value_at(2.0), 1.0);
        let none = kaplan_meier_pooled(&rt, &[1]).unwrap();
        assert_eq!(none.value_at(10.0), 0.0);
        assert!(kaplan_meier_pooled(&rt, &[]).is_err());
    }

    #[test]
    fn kaplan_meier_pooling_invariance() {
        // groups 0 and 1 merged equal a single relabelled group
        let t = [1.0, 2.0, 2.0, 3.5, 4.0, 6.0, 1.5, 7.0];
        let d = [true, true, false, true, false, true, true, true];
        let g3 = [0, 1, 0, 1, 0, 1, 2, 2];
        let g2 = [0, 0, 0, 0, 0, 0, 1, 1];
        let a = kaplan_meier_pooled(&table(&t, &d, &g3), &[0, 1]).unwrap();
        let b = kaplan_meier_pooled(&table(&t, &d, &g2), &[0]).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn left_limits_agree_with_step_function() {
        let rt = table(&[1.0, 2.0, 2.0, 3.0, 4.0, 5.0], &[true, true, true, false, true, true], &[0, 1, 0, 1, 0, 1]);
        let (y, d) = rt.subset_counts(&[0, 1]);
        let ll = km_left_limits(&y, &d);
        let km = kaplan_meier_pooled(&rt, &[0, 1]).unwrap();
        for (e, &t) in rt.event_times().iter().enumerate() {
            assert_eq!(ll[e], km.value_before(t));
        }
        assert_eq!(ll[0], 0.0);
    }

    #[test]
    fn wild_bootstrap_special_multipliers() {
        let rt = table(&[1.0, 2.0, 2.5, 3.0, 4.0], &[true, false, true, true, true], &[0, 0, 0, 1, 1]);
        let zero = wild_bootstrap_nelson_aalen(&rt, 0, &[0.0; 3]).unwrap();
        assert!(zero.values().iter().all(|&v| v == 0.0));
        let one = wild_bootstrap_nelson_aalen(&rt, 0, &[1.0; 3]).unwrap();
        assert_eq!(one, nelson_aalen(&rt, 0));
        assert!(matches!(
            wild_bootstrap_nelson_aalen(&rt, 0, &[1.0; 2]),
            Err(Error::MultiplierCount { expected: 3, got: 2 })
        ));

        let single = table(&[1.0, 3.0], &[true, true], &[0, 1]);
        let flipped = wild_bootstrap_nelson_aalen(&single, 0, &[-1.0]).unwrap();
        let na = nelson_aalen(&single, 0);
        assert_eq!(flipped.values(), &[-na.values()[0]]);
    }

    #[test]
    fn multiplier_support_and_moments() {
        let mut rng = RngStream::new(11, 0).rng();
        let r = draw_multipliers(MultiplierLaw::Rademacher, 10_000, &mut rng);
        assert!(r.iter().all(|&g| g == 1.0 || g == -1.0));

        let n = 1_000_000;
        let p = draw_multipliers(MultiplierLaw::CenteredPoisson, n, &mut rng);
        assert!(p.iter().all(|&g| g >= -1.0 && g.fract() == 0.0));
        let mean = p.iter().sum::<f64>() / n as f64;
        let var = p.iter().map(|g| (g - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        assert!(mean.abs() < 0.004, "mean {mean}");
        assert!((var - 1.0).abs() < 0.01, "var {var}");
        let zeros = p.iter().filter(|&&g| g == -1.0).count() as f64 / n as f64;
        assert!((zeros - (-1.0f64).exp()).abs() < 0.002);
    }

    #[test]
    fn multipliers_are_reproducible() {
        for law in [MultiplierLaw::Rademacher, MultiplierLaw::CenteredPoisson] {
            let a = draw_multipliers(law, 100, &mut RngStream::new(3, 9).rng());
            let b = draw_multipliers(law, 100, &mut RngStream::new(3, 9).rng());
            assert_eq!(a, b);
        }
    }

    #[test]
    fn step_function_csv() {
        let f = StepFunction::new(vec![1.0, 2.5], vec![0.25, 0.5]).unwrap();
        let mut out = Vec::new();
        f.write_csv(&mut out).unwrap();
        assert_eq!(String::from_utf8(out).unwrap(), "time,value\n1,0.25\n2.5,0.5\n");
        assert!(StepFunction::new(vec![2.0, 1.0], vec![0.0, 0.0]).is_err());
    }
}
