use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::model::ModelGraph;
use crate::numerics::{ranks, sigmoid};
use crate::{Error, Result};

/// Mann-Whitney AUC with half credit for ties.
pub fn auc(labels: &[u8], scores: &[f64]) -> Result<f64> {
    if labels.len() != scores.len() {
        return Err(Error::Input("labels and scores differ in length".into()));
    }
    let pos = labels.iter().filter(|&&y| y == 1).count();
    let neg = labels.len() - pos;
    if pos == 0 || neg == 0 {
        return Err(Error::Metric("AUC needs both classes".into()));
    }
    let r = ranks(scores);
    let rank_sum: f64 = labels
        .iter()
        .zip(&r)
        .filter(|(&y, _)| y == 1)
        .map(|(_, r)| r)
        .sum();
    let p = pos as f64;
    Ok((rank_sum - p * (p + 1.0) / 2.0) / (p * neg as f64))
}

/// Logits per sample, one per tower. Forwards run in parallel.
pub fn predict_logits(graph: &ModelGraph, data: &Dataset) -> Result<Vec<Vec<f64>>> {
    data.samples.par_iter().map(|s| graph.logits(s)).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskMetrics {
    pub task: String,
    pub n: usize,
    pub positive_rate: f64,
    /// `None` when the labels hold a single class.
    pub auc: Option<f64>,
    pub logloss: f64,
    /// `mean(ŷ)/mean(y) − 1`; `None` without positives.
    pub bias: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalMetrics {
    pub tasks: Vec<TaskMetrics>,
}

impl EvalMetrics {
    pub fn task(&self, name: &str) -> Option<&TaskMetrics> {
        self.tasks.iter().find(|t| t.task == name)
    }
}

fn task_metrics(task: &str, labels: &[u8], logits: &[f64]) -> TaskMetrics {
    let n = labels.len();
    let nf = n.max(1) as f64;
    let pos = labels.iter().filter(|&&y| y == 1).count();
    let logloss = labels
        .iter()
        .zip(logits)
        .map(|(&y, &f)| super::bce(y, f).0)
        .sum::<f64>()
        / nf;
    let mean_pred = logits.iter().map(|&f| sigmoid(f)).sum::<f64>() / nf;
    let rate = pos as f64 / nf;
    TaskMetrics {
        task: task.to_string(),
        n,
        positive_rate: rate,
        auc: auc(labels, logits).ok(),
        logloss,
        bias: (pos > 0).then(|| mean_pred / rate - 1.0),
    }
}

/// AUC, log loss and calibration bias for every tower.
pub fn evaluate(graph: &ModelGraph, data: &Dataset) -> Result<EvalMetrics> {
    let logits = predict_logits(graph, data)?;
    let tasks = graph
        .tower_tasks()
        .into_iter()
        .enumerate()
        .map(|(t, task)| {
            let labels: Vec<u8> = data.samples.iter().map(|s| s.labels[task]).collect();
            let f: Vec<f64> = logits.iter().map(|l| l[t]).collect();
            task_metrics(&graph.schema.tasks[task], &labels, &f)
        })
        .collect();
    Ok(EvalMetrics { tasks })
}
