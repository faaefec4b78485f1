use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{combined_loss, evaluate, sample_weights, Adagrad, TaskMetrics, TrainConfig};
use crate::data::{Dataset, Sample};
use crate::model::{ModelGraph, Trace};
use crate::numerics::seeded_rng;
use crate::{Error, Result};

/// One line of the training history.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    /// Mean training loss over the epoch, summed over towers.
    pub loss: f64,
    /// Metrics on the validation set, or on the training set without one.
    pub tasks: Vec<TaskMetrics>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct History {
    pub epochs: Vec<EpochRecord>,
}

impl History {
    pub fn to_jsonl(&self) -> Result<String> {
        let mut out = String::new();
        for r in &self.epochs {
            out.push_str(&serde_json::to_string(r)?);
            out.push('\n');
        }
        Ok(out)
    }

    pub fn last(&self) -> Option<&EpochRecord> {
        self.epochs.last()
    }
}

/// Loss and `∂L/∂logit` per sample and tower for one batch.
fn batch_loss(
    graph: &ModelGraph,
    batch: &[&Sample],
    traces: &[Trace],
    cfg: &TrainConfig,
) -> Result<(f64, Vec<Vec<f64>>)> {
    let lambda = cfg.loss.effective_lambda();
    let mut total = 0.0;
    let mut d = vec![vec![0.0; graph.n_towers()]; batch.len()];
    for (t, task) in graph.tower_tasks().into_iter().enumerate() {
        let logits: Vec<f64> = traces.iter().map(|tr| tr.logits[t]).collect();
        let labels: Vec<u8> = batch.iter().map(|s| s.labels[task]).collect();
        let weights = cfg.rew.as_ref().map(|r| sample_weights(batch, task, r));
        let out = combined_loss(&logits, &labels, weights.as_deref(), lambda)?;
        total += out.loss;
        for (row, g) in d.iter_mut().zip(out.grads) {
            row[t] = g;
        }
    }
    Ok((total, d))
}

/// Mini-batch Adagrad. Batch order is fixed by the seed; forwards within a
/// batch run in parallel and gradients are accumulated in sample order.
pub fn train(
    graph: &mut ModelGraph,
    data: &Dataset,
    valid: Option<&Dataset>,
    cfg: &TrainConfig,
) -> Result<History> {
    cfg.validate()?;
    if data.is_empty() {
        return Err(Error::Input("empty training set".into()));
    }
    let mut opt = Adagrad::new(&graph.store, cfg.lr, cfg.adagrad_eps);
    let mut rng = seeded_rng(cfg.seed);
    let mut order: Vec<usize> = (0..data.len()).collect();
    let mut history = History::default();
    let mut step = 0;
    for epoch in 1..=cfg.epochs {
        if cfg.shuffle {
            order.shuffle(&mut rng);
        }
        let mut epoch_loss = 0.0;
        for chunk in order.chunks(cfg.batch_size) {
            step += 1;
            let batch: Vec<&Sample> = chunk.iter().map(|&i| &data.samples[i]).collect();
            let g: &ModelGraph = graph;
            let traces: Vec<Trace> = batch
                .par_iter()
                .map(|s| g.forward_trace(s))
                .collect::<Result<_>>()?;
            let (loss, dlogits) = batch_loss(graph, &batch, &traces, cfg)?;
            if !loss.is_finite() {
                return Err(Error::Divergence { epoch, step, loss });
            }
            epoch_loss += loss * batch.len() as f64;
            graph.store.zero_grad();
            for (tr, d) in traces.iter().zip(&dlogits) {
                graph.backward(tr, d);
            }
            opt.step(&mut graph.store);
        }
        let metrics = evaluate(graph, valid.unwrap_or(data))?;
        history.epochs.push(EpochRecord {
            epoch,
            loss: epoch_loss / data.len() as f64,
            tasks: metrics.tasks,
        });
    }
    Ok(history)
}
