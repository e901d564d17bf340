//! Right-censored multi-group samples and their counting-process summary.

use std::collections::HashMap;
use std::io::Read;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One subject: observed time, event flag and 0-based group index.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Observation {
    pub time: f64,
    pub event: bool,
    pub group: usize,
}

/// A validated k-group sample. Group indices are 0-based; `labels[j]` is the
/// display name of group `j`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurvivalSample {
    observations: Vec<Observation>,
    labels: Vec<String>,
    group_sizes: Vec<usize>,
}

impl SurvivalSample {
    /// Builds a sample from observations whose groups are `0..labels.len()`.
    pub fn new(observations: Vec<Observation>, labels: Vec<String>) -> Result<Self> {
        let k = labels.len();
        if k < 2 {
            return Err(Error::InvalidSample(format!("need at least 2 groups, got {k}")));
        }
        let mut group_sizes = vec![0usize; k];
        for (i, obs) in observations.iter().enumerate() {
            if !(obs.time.is_finite() && obs.time > 0.0) {
                return Err(Error::InvalidSample(format!(
                    "observation {i}: time must be positive and finite, got {}",
                    obs.time
                )));
            }
            if obs.group >= k {
                return Err(Error::InvalidSample(format!(
                    "observation {i}: group index {} out of range for {k} groups",
                    obs.group
                )));
            }
            group_sizes[obs.group] += 1;
        }
        if let Some(j) = group_sizes.iter().position(|&n| n == 0) {
            return Err(Error::InvalidSample(format!("group `{}` is empty", labels[j])));
        }
        Ok(Self { observations, labels, group_sizes })
    }

    /// Convenience constructor from parallel slices; groups are labelled
    /// `1..=k` where `k = max(group) + 1`.
    pub fn from_columns(times: &[f64], events: &[bool], groups: &[usize]) -> Result<Self> {
        if times.len() != events.len() || times.len() != groups.len() {
            return Err(Error::InvalidSample("column lengths differ".into()));
        }
        let k = groups.iter().copied().max().map_or(0, |g| g + 1);
        let observations = times
            .iter()
            .zip(events)
            .zip(groups)
            .map(|((&time, &event), &group)| Observation { time, event, group })
            .collect();
        Self::new(observations, (1..=k).map(|j| j.to_string()).collect())
    }

    pub fn observations(&self) -> &[Observation] {
        &self.observations
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn num_groups(&self) -> usize {
        self.labels.len()
    }

    pub fn group_sizes(&self) -> &[usize] {
        &self.group_sizes
    }

    pub fn len(&self) -> usize {
        self.observations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.observations.is_empty()
    }

    pub fn num_events(&self) -> usize {
        self.observations.iter().filter(|o| o.event).count()
    }

    /// Moves group `j` to index 0, keeping the relative order of the rest.
    pub fn with_reference(&self, j: usize) -> Result<Self> {
        let k = self.num_groups();
        if j >= k {
            return Err(Error::InvalidSample(format!("reference group {j} out of range")));
        }
        let remap = |g: usize| match g.cmp(&j) {
            std::cmp::Ordering::Equal => 0,
            std::cmp::Ordering::Less => g + 1,
            std::cmp::Ordering::Greater => g,
        };
        let observations = self
            .observations
            .iter()
            .map(|o| Observation { group: remap(o.group), ..*o })
            .collect();
        let mut labels = vec![String::new(); k];
        for (g, l) in self.labels.iter().enumerate() {
            labels[remap(g)] = l.clone();
        }
        Self::new(observations, labels)
    }

    /// Index of the group with the given display label.
    pub fn group_index(&self, label: &str) -> Option<usize> {
        self.labels.iter().position(|l| l == label)
    }
}

/// Column names used to read a CSV file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ColumnSpec {
    pub time: String,
    pub status: String,
    pub group: String,
}

impl Default for ColumnSpec {
    fn default() -> Self {
        Self { time: "time".into(), status: "status".into(), group: "group".into() }
    }
}

/// Reads a comma-separated sample with a header row. Group labels are
/// numbered in order of first appearance.
pub fn parse_csv<R: Read>(reader: R, columns: &ColumnSpec) -> Result<SurvivalSample> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).trim(csv::Trim::All).from_reader(reader);
    let headers = rdr.headers()?.clone();
    let find = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::MissingColumn(name.to_string()))
    };
    let (ti, si, gi) = (find(&columns.time)?, find(&columns.status)?, find(&columns.group)?);

    let mut labels: Vec<String> = Vec::new();
    let mut index: HashMap<String, usize> = HashMap::new();
    let mut observations = Vec::new();
    for (row, record) in rdr.records().enumerate() {
        // header is line 1
        let line = row + 2;
        let record = record?;
        let field = |i: usize| record.get(i).unwrap_or("");
        let raw_time = field(ti);
        let time: f64 = raw_time.parse().map_err(|_| Error::Row {
            line,
            message: format!("time `{raw_time}` is not numeric"),
        })?;
        if !(time.is_finite() && time > 0.0) {
            return Err(Error::Row { line, message: format!("non-positive or non-finite time {raw_time}") });
        }
        let event = match field(si) {
            "1" => true,
            "0" => false,
            other => {
                return Err(Error::Row { line, message: format!("status `{other}` must be 0 or 1") });
            }
        };
        let label = field(gi).to_string();
        let group = *index.entry(label.clone()).or_insert_with(|| {
            labels.push(label);
            labels.len() - 1
        });
        observations.push(Observation { time, event, group });
    }
    SurvivalSample::new(observations, labels)
}

/// Counting-process summary at the distinct event times.
///
/// `at_risk[j][e]` is `Y_j` just before `event_times[e]` and `events[j][e]`
/// is `dN_j` at that time. Censorings tied with an event time count as at
/// risk at that time.
#[derive(Debug, Clone, PartialEq)]
pub struct RiskTable {
    event_times: Vec<f64>,
    at_risk: Vec<Vec<u32>>,
    events: Vec<Vec<u32>>,
    total_at_risk: Vec<u32>,
    total_events: Vec<u32>,
    group_sizes: Vec<usize>,
    /// Per group, per subject in input order: index into `event_times` of the
    /// subject's event, or `None` when censored.
    subject_events: Vec<Vec<Option<usize>>>,
}

impl RiskTable {
    pub fn new(sample: &SurvivalSample) -> Result<Self> {
        let k = sample.num_groups();
        let obs = sample.observations();

        let mut event_times: Vec<f64> = obs.iter().filter(|o| o.event).map(|o| o.time).collect();
        if event_times.is_empty() {
            return Err(Error::NoEvents);
        }
        event_times.sort_by(f64::total_cmp);
        event_times.dedup();
        let e_count = event_times.len();

        let mut events = vec![vec![0u32; e_count]; k];
        // leaving[j][e]: subjects whose observed time falls in [t_e, t_{e+1})
        let mut leaving = vec![vec![0u32; e_count]; k];
        let mut subject_events: Vec<Vec<Option<usize>>> =
            sample.group_sizes().iter().map(|&n| Vec::with_capacity(n)).collect();
        for o in obs {
            // number of event times <= o.time
            let upto = event_times.partition_point(|&t| t <= o.time);
            if o.event {
                let e = upto - 1;
                events[o.group][e] += 1;
                subject_events[o.group].push(Some(e));
            } else {
                subject_events[o.group].push(None);
            }
            if upto > 0 {
                leaving[o.group][upto - 1] += 1;
            }
        }

        let mut at_risk = vec![vec![0u32; e_count]; k];
        for j in 0..k {
            // subjects with time >= t_e: those leaving at e or later
            let mut acc = 0u32;
            for e in (0..e_count).rev() {
                acc += leaving[j][e];
                at_risk[j][e] = acc;
            }
        }
        let total_at_risk = (0..e_count).map(|e| (0..k).map(|j| at_risk[j][e]).sum()).collect();
        let total_events = (0..e_count).map(|e| (0..k).map(|j| events[j][e]).sum()).collect();

        Ok(Self {
            event_times,
            at_risk,
            events,
            total_at_risk,
            total_events,
            group_sizes: sample.group_sizes().to_vec(),
            subject_events,
        })
    }

    pub fn event_times(&self) -> &[f64] {
        &self.event_times
    }

    pub fn len(&self) -> usize {
        self.event_times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.event_times.is_empty()
    }

    pub fn num_groups(&self) -> usize {
        self.group_sizes.len()
    }

    pub fn group_sizes(&self) -> &[usize] {
        &self.group_sizes
    }

    /// Total sample size `n`.
    pub fn total_size(&self) -> usize {
        self.group_sizes.iter().sum()
    }

    pub fn at_risk(&self, j: usize) -> &[u32] {
        &self.at_risk[j]
    }

    pub fn events(&self, j: usize) -> &[u32] {
        &self.events[j]
    }

    pub fn total_at_risk(&self) -> &[u32] {
        &self.total_at_risk
    }

    pub fn total_events(&self) -> &[u32] {
        &self.total_events
    }

    pub fn subject_events(&self, j: usize) -> &[Option<usize>] {
        &self.subject_events[j]
    }

    /// Group-wise `Y_S` and `dN_S` for a set of groups, summed in index order.
    pub fn subset_counts(&self, groups: &[usize]) -> (Vec<u32>, Vec<u32>) {
        let mut y = vec![0u32; self.len()];
        let mut d = vec![0u32; self.len()];
        for &j in groups {
            for e in 0..self.len() {
                y[e] += self.at_risk[j][e];
                d[e] += self.events[j][e];
            }
        }
        (y, d)
    }
}

/// Shorthand for [`RiskTable::new`].
pub fn build_risk_table(sample: &SurvivalSample) -> Result<RiskTable> {
    RiskTable::new(sample)
}
