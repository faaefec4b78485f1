use super::build::{ModelConfig, Paradigm};
use super::spec::{ExpertKind, GateMode, TimSetting};
use super::ModelGraph;
use crate::data::{FieldSchema, FieldSpec};
use crate::numerics::{seeded_rng, Matrix};
use crate::{Error, Result};

/// Single-table model equal in forward to a multi-embedding model whose
/// experts are linear FM experts under uniform gates: one table of width
/// `Σ K_t`, block-diagonal expert layers, and a final layer that averages.
pub fn single_embedding_equivalent(me: &ModelGraph) -> Result<ModelGraph> {
    let spec = &me.spec;
    if !spec.linear_experts || spec.gate != GateMode::Uniform {
        return Err(Error::Config(
            "equivalence needs linear experts and uniform gates".into(),
        ));
    }
    if spec
        .experts
        .iter()
        .any(|e| e.kind != ExpertKind::Fm || e.tim != TimSetting::None)
        || spec.towers.len() != 1
        || spec
            .experts
            .iter()
            .any(|e| e.hidden != spec.experts[0].hidden)
    {
        return Err(Error::Config(
            "equivalence is built for single-tower FM experts of equal depth".into(),
        ));
    }
    let t = spec.experts.len();
    let dims: Vec<usize> = spec
        .experts
        .iter()
        .map(|e| spec.tables[e.table].dim)
        .collect();
    let total: usize = dims.iter().sum();
    let hidden: Vec<usize> = spec.experts[0].hidden.iter().map(|h| h * t).collect();
    let cfg = ModelConfig {
        paradigm: Paradigm::Me,
        expert: ExpertKind::Fm,
        dims: vec![total],
        tim: TimSetting::None,
        expert_hidden: hidden,
        expert_out: spec.experts[0].out_dim,
        tower_hidden: spec.towers[0].hidden.clone(),
        gate: GateMode::Uniform,
        linear_experts: true,
        init_std: 0.0,
        projection_noise: 0.0,
        main_task: None,
    };
    let mut single = cfg.build(&me.schema, 0)?.graph;
    let scale = 1.0 / (t * t) as f64;

    // Tables: concatenate per field.
    for f in 0..single.table_blocks(0).len() {
        let mut m = me.store.value(me.table_blocks(0)[f]).clone();
        for e in 1..t {
            m = m.hconcat(me.store.value(me.table_blocks(e)[f]))?;
        }
        let id = single.table_blocks(0)[f];
        *single.store.value_mut(id) = m;
    }
    // Expert layers: block-diagonal, the last one stacked side by side.
    let layer_ids = |g: &ModelGraph, e: usize| {
        let b = g.expert_blocks(e);
        b.chunks(2).map(|c| (c[0], c[1])).collect::<Vec<_>>()
    };
    let src: Vec<Vec<(usize, usize)>> = (0..t).map(|e| layer_ids(me, e)).collect();
    let dst = layer_ids(&single, 0);
    let n_layers = dst.len();
    for (l, &(dw, db)) in dst.iter().enumerate() {
        let last = l + 1 == n_layers;
        let (rows, cols) = single.store.value(dw).shape();
        let mut w = Matrix::zeros(rows, cols);
        let mut b = vec![0.0; rows];
        let (mut r0, mut c0) = (0, 0);
        for s in &src {
            let sw = me.store.value(s[l].0);
            let sb = me.store.value(s[l].1).as_slice();
            for i in 0..sw.rows() {
                let r = if last { i } else { r0 + i };
                for j in 0..sw.cols() {
                    w.as_mut_slice()[r * cols + c0 + j] =
                        if last { scale * sw[(i, j)] } else { sw[(i, j)] };
                }
                b[r] += if last { scale * sb[i] } else { sb[i] };
            }
            if !last {
                r0 += sw.rows();
            }
            c0 += sw.cols();
        }
        *single.store.value_mut(dw) = w;
        *single.store.value_mut(db) = Matrix::from_vec(1, rows, b)?;
    }
    // Tower: copied verbatim.
    for (d, s) in single.tower_blocks(0).into_iter().zip(me.tower_blocks(0)) {
        *single.store.value_mut(d) = me.store.value(s).clone();
    }
    Ok(single)
}

/// Builds a random linear-expert, uniform-gate multi-embedding model with
/// the given table widths and checks that its single-table equivalent
/// reproduces the forward pass within 1e-10 on 100 random samples.
pub fn me_equivalence_check(dims: &[usize], seed: u64) -> Result<bool> {
    let schema = FieldSchema::new(
        vec!["click".into()],
        vec![
            FieldSpec::categorical("a", 7),
            FieldSpec::categorical("b", 11),
            FieldSpec::categorical("c", 5),
        ],
    )?;
    let cfg = ModelConfig {
        paradigm: Paradigm::Me,
        dims: dims.to_vec(),
        gate: GateMode::Uniform,
        linear_experts: true,
        init_std: 0.3,
        expert_hidden: vec![6],
        expert_out: 4,
        tower_hidden: vec![8],
        ..Default::default()
    };
    let me = cfg.build(&schema, seed)?.graph;
    let single = single_embedding_equivalent(&me)?;
    let mut rng = seeded_rng(seed ^ 0xe0);
    for _ in 0..100 {
        let s = me.random_sample(&mut rng);
        let a = me.logits(&s)?[0];
        let b = single.logits(&s)?[0];
        if (a - b).abs() > 1e-10 * (1.0 + a.abs()) {
            return Ok(false);
        }
    }
    Ok(true)
}
