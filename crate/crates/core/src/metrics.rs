//! Trial and batch metrics, computed purely from [`TrialLog`]s.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::engine::rng::pair_uniform;
use crate::engine::{EventKind, Termination, TrialLog};
use crate::world::AgentId;

#[derive(Debug, Error, PartialEq)]
pub enum MetricsError {
    #[error("log has no steps")]
    EmptyLog,
    #[error("batch {0} is empty")]
    EmptyBatch(&'static str),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialMetrics {
    pub seed: u64,
    pub controller: String,
    pub steps: usize,
    pub termination: Termination,
    pub autonomy_per_follower: Vec<f64>,
    pub autonomy_mean: f64,
    pub entanglement_count: usize,
    pub snag_count: usize,
    pub followers_reached_fraction: f64,
    pub completion_time: Option<f64>,
    /// Seconds under nonzero voltage, indexed by agent id (leader included).
    pub total_stimulation_time_per_agent: Vec<f64>,
}

impl TrialMetrics {
    pub fn compute(log: &TrialLog) -> Result<Self, MetricsError> {
        let (autonomy_per_follower, autonomy_mean) = autonomy(log)?;
        let (followers_reached_fraction, completion_time) = success_stats(log);
        Ok(TrialMetrics {
            seed: log.seed,
            controller: log.config.controller.name().to_string(),
            steps: counted_steps(log).len(),
            termination: log.termination,
            autonomy_per_follower,
            autonomy_mean,
            entanglement_count: entanglement_count(log),
            snag_count: log
                .events
                .iter()
                .filter(|e| matches!(e.kind, EventKind::Snag { .. }))
                .count(),
            followers_reached_fraction,
            completion_time,
            total_stimulation_time_per_agent: stimulation_time(log),
        })
    }

    pub fn mean_stimulation_time(&self) -> f64 {
        let v = &self.total_stimulation_time_per_agent;
        if v.is_empty() {
            0.0
        } else {
            v.iter().sum::<f64>() / v.len() as f64
        }
    }
}

/// Steps up to the termination time; anything logged after it is ignored.
fn counted_steps(log: &TrialLog) -> &[crate::engine::StepRecord] {
    let end = log.termination.time() + 1e-9;
    let n = log.steps.iter().take_while(|s| s.time <= end).count();
    &log.steps[..n]
}

fn follower_ids(log: &TrialLog) -> impl Iterator<Item = AgentId> + '_ {
    (0..log.config.agents as AgentId).filter(move |&id| id != log.leader_id())
}

/// Per-follower fraction of steps without stimulation, and their mean.
pub fn autonomy(log: &TrialLog) -> Result<(Vec<f64>, f64), MetricsError> {
    let steps = counted_steps(log);
    if steps.is_empty() {
        return Err(MetricsError::EmptyLog);
    }
    let total = steps.len() as f64;
    let per: Vec<f64> = follower_ids(log)
        .map(|id| {
            let free = steps.iter().filter(|s| s.agents[id as usize].voltage == 0.0).count();
            free as f64 / total
        })
        .collect();
    let mean = per.iter().sum::<f64>() / per.len() as f64;
    Ok((per, mean))
}

pub fn entanglement_count(log: &TrialLog) -> usize {
    log.events
        .iter()
        .filter(|e| matches!(e.kind, EventKind::Entangle { .. }))
        .count()
}

fn stimulation_time(log: &TrialLog) -> Vec<f64> {
    let dt = log.config.params.dt;
    (0..log.config.agents)
        .map(|i| counted_steps(log).iter().filter(|s| s.agents[i].voltage > 0.0).count() as f64 * dt)
        .collect()
}

/// Fraction of followers that reached the goal, and the completion time
/// when every agent made it.
pub fn success_stats(log: &TrialLog) -> (f64, Option<f64>) {
    let reached: BTreeSet<AgentId> = log
        .events
        .iter()
        .filter_map(|e| match e.kind {
            EventKind::GoalReached { agent } if agent != log.leader_id() => Some(agent),
            _ => None,
        })
        .collect();
    let followers = follower_ids(log).count();
    let fraction = if followers == 0 {
        0.0
    } else {
        reached.len() as f64 / followers as f64
    };
    let completion = match log.termination {
        Termination::AllReached { .. } => log
            .events
            .iter()
            .filter(|e| matches!(e.kind, EventKind::GoalReached { .. }))
            .map(|e| e.time)
            .fold(None, |m: Option<f64>, t| Some(m.map_or(t, |m| m.max(t)))),
        Termination::Timeout { .. } => None,
    };
    (fraction, completion)
}

/// Recounts entanglements from raw per-step records alone (positions,
/// commands, conditions) plus the seed, re-deriving which agents were free
/// to lock at each step. Used to cross-check the event stream.
pub fn replay_entanglements(log: &TrialLog) -> Vec<(u64, AgentId, AgentId)> {
    let p = &log.config.params;
    let lock_steps = ((p.entangle_duration - 1e-9) / p.dt).ceil() as u64;
    // agent -> step at which its current lock expires
    let mut locked_until: BTreeMap<AgentId, u64> = BTreeMap::new();
    let mut found = Vec::new();
    for (idx, step) in log.steps.iter().enumerate() {
        let k = idx as u64 + 1;
        locked_until.retain(|_, until| *until > k);
        let free: Vec<&crate::engine::AgentRecord> = step
            .agents
            .iter()
            .filter(|a| !locked_until.contains_key(&a.id) && a.condition != "snagged")
            .collect();
        let mut new_pairs = Vec::new();
        for (i, a) in free.iter().enumerate() {
            for b in &free[i + 1..] {
                let close = a.position().distance(b.position()) < p.entangle_distance;
                let driven = a.voltage > 0.0 || b.voltage > 0.0;
                if close && driven && pair_uniform(log.seed, k, a.id, b.id) < p.entangle_prob {
                    new_pairs.push((k, a.id.min(b.id), a.id.max(b.id)));
                }
            }
        }
        for &(_, a, b) in &new_pairs {
            locked_until.insert(a, k + lock_steps);
            locked_until.insert(b, k + lock_steps);
        }
        found.extend(new_pairs);
    }
    found
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub mean: f64,
    pub std: f64,
    pub min: f64,
    pub max: f64,
    pub n: usize,
}

impl Summary {
    /// Sample statistics; `std` is 0 for a single value. Empty input gives NaNs.
    pub fn of(values: &[f64]) -> Summary {
        let n = values.len();
        if n == 0 {
            return Summary {
                mean: f64::NAN,
                std: f64::NAN,
                min: f64::NAN,
                max: f64::NAN,
                n,
            };
        }
        let mean = values.iter().sum::<f64>() / n as f64;
        let var = if n > 1 {
            values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64
        } else {
            0.0
        };
        Summary {
            mean,
            std: var.sqrt(),
            min: values.iter().copied().fold(f64::INFINITY, f64::min),
            max: values.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            n,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub metric: String,
    pub a: Summary,
    pub b: Summary,
    /// `a.mean - b.mean`.
    pub mean_difference: f64,
}

pub const COMPARED_METRICS: [&str; 6] = [
    "entanglement_count",
    "autonomy_mean",
    "followers_reached_fraction",
    "completion_time",
    "snag_count",
    "mean_stimulation_time",
];

fn metric_values(batch: &[TrialMetrics], metric: &str) -> Vec<f64> {
    batch
        .iter()
        .filter_map(|m| match metric {
            "entanglement_count" => Some(m.entanglement_count as f64),
            "autonomy_mean" => Some(m.autonomy_mean),
            "followers_reached_fraction" => Some(m.followers_reached_fraction),
            // only trials that completed contribute
            "completion_time" => m.completion_time,
            "snag_count" => Some(m.snag_count as f64),
            "mean_stimulation_time" => Some(m.mean_stimulation_time()),
            _ => None,
        })
        .collect()
}

/// Descriptive per-metric comparison of two batches.
pub fn compare_batches(a: &[TrialMetrics], b: &[TrialMetrics]) -> Result<Vec<ComparisonRow>, MetricsError> {
    if a.is_empty() {
        return Err(MetricsError::EmptyBatch("a"));
    }
    if b.is_empty() {
        return Err(MetricsError::EmptyBatch("b"));
    }
    Ok(COMPARED_METRICS
        .iter()
        .map(|&metric| {
            let sa = Summary::of(&metric_values(a, metric));
            let sb = Summary::of(&metric_values(b, metric));
            ComparisonRow {
                metric: metric.to_string(),
                a: sa,
                b: sb,
                mean_difference: sa.mean - sb.mean,
            }
        })
        .collect())
}

/// Column order of the per-trial batch CSV.
pub const BATCH_CSV_HEADER: [&str; 11] = [
    "seed",
    "controller",
    "termination",
    "end_time",
    "completion_time",
    "steps",
    "autonomy_mean",
    "entanglement_count",
    "snag_count",
    "followers_reached_fraction",
    "mean_stimulation_time",
];

pub fn batch_csv(batch: &[TrialMetrics]) -> Result<Vec<u8>, csv::Error> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(BATCH_CSV_HEADER)?;
    for m in batch {
        let (term, end) = match m.termination {
            Termination::AllReached { time } => ("all_reached", time),
            Termination::Timeout { time } => ("timeout", time),
        };
        w.write_record([
            m.seed.to_string(),
            m.controller.clone(),
            term.to_string(),
            end.to_string(),
            m.completion_time.map(|t| t.to_string()).unwrap_or_default(),
            m.steps.to_string(),
            m.autonomy_mean.to_string(),
            m.entanglement_count.to_string(),
            m.snag_count.to_string(),
            m.followers_reached_fraction.to_string(),
            m.mean_stimulation_time().to_string(),
        ])?;
    }
    w.into_inner().map_err(|e| csv::Error::from(e.into_error()))
}

/// Column order of the comparison CSV.
pub const COMPARISON_CSV_HEADER: [&str; 10] = [
    "metric",
    "a_mean",
    "a_std",
    "a_min",
    "a_max",
    "b_mean",
    "b_std",
    "b_min",
    "b_max",
    "mean_difference",
];

pub fn comparison_csv(rows: &[ComparisonRow]) -> Result<Vec<u8>, csv::Error> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(COMPARISON_CSV_HEADER)?;
    for r in rows {
        w.write_record([
            r.metric.clone(),
            r.a.mean.to_string(),
            r.a.std.to_string(),
            r.a.min.to_string(),
            r.a.max.to_string(),
            r.b.mean.to_string(),
            r.b.std.to_string(),
            r.b.min.to_string(),
            r.b.max.to_string(),
            r.mean_difference.to_string(),
        ])?;
    }
    w.into_inner().map_err(|e| csv::Error::from(e.into_error()))
}

/// Fixed-width text rendering of a comparison for terminals.
pub fn comparison_table(rows: &[ComparisonRow], label_a: &str, label_b: &str) -> String {
    let mut out = format!(
        "{:<28} {:>22} {:>22} {:>12}\n",
        "metric",
        format!("{label_a} mean ± std"),
        format!("{label_b} mean ± std"),
        "difference"
    );
    for r in rows {
        out += &format!(
            "{:<28} {:>22} {:>22} {:>12.3}\n",
            r.metric,
            format!("{:.3} ± {:.3}", r.a.mean, r.a.std),
            format!("{:.3} ± {:.3}", r.b.mean, r.b.std),
            r.mean_difference
        );
    }
    out
}
