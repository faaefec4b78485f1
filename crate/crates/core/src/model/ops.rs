use super::ModelGraph;
use crate::data::Sample;
use crate::numerics::DifferentiableOp;
use crate::Result;

/// Whole-graph forward over its flattened parameters for one sample;
/// outputs one logit per tower. The analytic side honours routing masks
/// and gate detachment, so it matches finite differences only for graphs
/// with all-`Both` routes and uniform gates.
#[derive(Debug, Clone)]
pub struct ModelOp {
    pub graph: ModelGraph,
    pub sample: Sample,
}

impl ModelOp {
    fn with_params(&self, flat: &[f64]) -> Result<ModelGraph> {
        let mut g = self.graph.clone();
        g.store.unflatten(flat)?;
        Ok(g)
    }
}

impl DifferentiableOp for ModelOp {
    fn forward(&self, input: &[f64]) -> Result<Vec<f64>> {
        self.with_params(input)?.logits(&self.sample)
    }

    fn backward(&self, input: &[f64], upstream: &[f64]) -> Result<Vec<f64>> {
        let mut g = self.with_params(input)?;
        g.store.zero_grad();
        let trace = g.forward_trace(&self.sample)?;
        g.backward(&trace, upstream);
        Ok(g.store.flatten_grads())
    }
}
