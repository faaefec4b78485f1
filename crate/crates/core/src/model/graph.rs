use crate::data::{FieldKind, FieldSchema, Sample};
use crate::encoding::{temporal_bucket, TemporalMode};
use crate::interactions::{
    fm_backward, fm_vector, fwfm_backward, fwfm_vector, gwpfm_backward, gwpfm_interaction,
    projected_pair, projected_pair_backward, GwpfmLayout, Interaction, PairWeights, Reduce,
};
use crate::numerics::{axpy, seeded_rng, sigmoid, Matrix, SeededRng};
use crate::tim::{tim_backward, tim_forward_matrix, TimCache};
use crate::{Error, Result};

use super::gate::{combine, gate_backward, gate_forward};
use super::mlp::{Mlp, MlpTrace};
use super::params::{BlockId, ParamStore};
use super::spec::{ExpertKind, GateMode, GraphSpec, Route, TimSetting};

#[derive(Debug, Clone, PartialEq)]
struct TableRt {
    k: usize,
    n_parts: usize,
    /// One block per categorical field (indexed like `cat_fields`).
    blocks: Vec<BlockId>,
}

impl TableRt {
    fn width(&self) -> usize {
        self.k * self.n_parts
    }
}

#[derive(Debug, Clone, PartialEq)]
struct ExpertRt {
    mlp: Mlp,
    r: Option<BlockId>,
    /// Projection per field pair `(a < b)`, in [`pair_slot`] order.
    proj: Vec<BlockId>,
    tim: Vec<(TemporalMode, BlockId)>,
    layout: Option<GwpfmLayout>,
}

#[derive(Debug, Clone, PartialEq)]
struct TowerRt {
    gate: Option<(BlockId, BlockId)>,
    visible: Vec<usize>,
    mlp: Mlp,
}

#[derive(Debug, Clone)]
struct SeqTrace {
    target_cat: usize,
    items: Vec<usize>,
    caches: Vec<TimCache>,
}

#[derive(Debug, Clone)]
struct ExpertTrace {
    rows: Vec<usize>,
    emb: Vec<Vec<f64>>,
    seqs: Vec<SeqTrace>,
    inter_dim: usize,
    mlp: MlpTrace,
}

impl ExpertTrace {
    fn output(&self) -> &[f64] {
        self.mlp.output()
    }
}

#[derive(Debug, Clone)]
struct TowerTrace {
    z: Vec<f64>,
    g: Vec<f64>,
    mlp: MlpTrace,
}

/// Forward state of one sample, consumed by [`ModelGraph::backward`].
#[derive(Debug, Clone)]
pub struct Trace {
    experts: Vec<ExpertTrace>,
    towers: Vec<TowerTrace>,
    pub logits: Vec<f64>,
}

impl Trace {
    /// Output of each expert.
    pub fn expert_outputs(&self) -> Vec<Vec<f64>> {
        self.experts.iter().map(|e| e.output().to_vec()).collect()
    }

    /// Gate weights of each tower over its visible experts.
    pub fn gates(&self) -> Vec<Vec<f64>> {
        self.towers.iter().map(|t| t.g.clone()).collect()
    }
}

/// Embedding tables → interaction experts → gates → task towers.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelGraph {
    pub spec: GraphSpec,
    pub schema: FieldSchema,
    pub store: ParamStore,
    tables: Vec<TableRt>,
    experts: Vec<ExpertRt>,
    towers: Vec<TowerRt>,
    cat_fields: Vec<usize>,
    /// `(sequence field, index of its target in cat_fields)`
    seq_fields: Vec<(usize, usize)>,
}

fn pair_slot(n: usize, a: usize, b: usize) -> usize {
    a * (2 * n - a - 1) / 2 + (b - a - 1)
}

impl ModelGraph {
    pub fn new(schema: FieldSchema, spec: GraphSpec, seed: u64) -> Result<Self> {
        schema.validate()?;
        spec.validate(&schema)?;
        let mut rng = seeded_rng(seed);
        let mut store = ParamStore::new();
        let cat_fields = schema.categorical_ids();
        let seq_fields: Vec<(usize, usize)> = schema
            .fields
            .iter()
            .enumerate()
            .filter(|(_, f)| f.kind == FieldKind::Sequence)
            .filter_map(|(i, f)| {
                let t = schema.field_id(f.target.as_deref()?)?;
                Some((i, cat_fields.iter().position(|&c| c == t)?))
            })
            .collect();
        let n_cat = cat_fields.len();
        let n_parts = schema.n_parts().max(1);

        let mut tables = Vec::new();
        for (t, ts) in spec.tables.iter().enumerate() {
            let part_aware = spec
                .experts
                .iter()
                .any(|e| e.table == t && e.kind == ExpertKind::Gwpfm);
            let parts = if part_aware { n_parts } else { 1 };
            let blocks = cat_fields
                .iter()
                .map(|&f| {
                    let fs = &schema.fields[f];
                    let m = Matrix::random_normal(
                        fs.cardinality,
                        ts.dim * parts,
                        spec.init_std,
                        &mut rng,
                    );
                    store.add(format!("table/{}/{}", ts.name, fs.name), m, true)
                })
                .collect();
            tables.push(TableRt {
                k: ts.dim,
                n_parts: parts,
                blocks,
            });
        }

        let max_len = schema
            .fields
            .iter()
            .filter(|f| f.kind == FieldKind::Sequence)
            .filter_map(|f| f.max_len)
            .max()
            .unwrap_or(1);
        let mut experts = Vec::new();
        for es in &spec.experts {
            let k = spec.tables[es.table].dim;
            let prefix = format!("expert/{}", es.name);
            let inter_dim = match es.kind {
                ExpertKind::Flat => n_cat * k,
                _ => k,
            };
            let r = match es.kind {
                ExpertKind::Fwfm => Some(PairWeights::filled(n_cat, 1.0)),
                ExpertKind::Gwpfm => Some(PairWeights::filled(schema.n_groups(), 1.0)),
                _ => None,
            }
            .map(|w| {
                let n = w.as_slice().len();
                store.add(
                    format!("{prefix}/r"),
                    Matrix::from_vec(1, n, w.as_slice().to_vec()).expect("finite"),
                    false,
                )
            });
            let mut proj = Vec::new();
            if es.kind == ExpertKind::Projected {
                for a in 0..n_cat {
                    for b in a + 1..n_cat {
                        let m = Matrix::identity(k)
                            .add(&Matrix::random_normal(
                                k,
                                k,
                                spec.projection_noise,
                                &mut rng,
                            ))
                            .expect("same shape");
                        proj.push(store.add(format!("{prefix}/proj/{a}_{b}"), m, false));
                    }
                }
            }
            let modes: Vec<TemporalMode> = match es.tim {
                TimSetting::None | TimSetting::Plain => vec![],
                TimSetting::Position => vec![TemporalMode::Position { max_len }],
                TimSetting::Interval => vec![TemporalMode::Interval],
                TimSetting::Dual => {
                    vec![TemporalMode::Position { max_len }, TemporalMode::Interval]
                }
            };
            let tim = modes
                .into_iter()
                .map(|mode| {
                    let name = match mode {
                        TemporalMode::Position { .. } => "position",
                        TemporalMode::Interval => "interval",
                    };
                    let m = Matrix::random_normal(mode.bucket_count(), k, spec.init_std, &mut rng);
                    (mode, store.add(format!("{prefix}/tim/{name}"), m, true))
                })
                .collect();
            let seq_width = match es.tim {
                TimSetting::None => 0,
                TimSetting::Dual => 2 * k,
                _ => k,
            };
            let mut dims = vec![inter_dim + seq_width * seq_fields.len()];
            dims.extend(&es.hidden);
            dims.push(es.out_dim);
            let mlp = Mlp::build(
                &mut store,
                &format!("{prefix}/mlp"),
                &dims,
                spec.linear_experts,
                &mut rng,
            );
            let layout = (es.kind == ExpertKind::Gwpfm).then(|| GwpfmLayout {
                parts: cat_fields.iter().map(|&f| schema.fields[f].part).collect(),
                groups: cat_fields.iter().map(|&f| schema.fields[f].group).collect(),
                n_parts,
                k,
            });
            experts.push(ExpertRt {
                mlp,
                r,
                proj,
                tim,
                layout,
            });
        }

        let out_dim = spec.experts[0].out_dim;
        let mut towers = Vec::new();
        for (t, ts) in spec.towers.iter().enumerate() {
            let visible: Vec<usize> = (0..spec.experts.len())
                .filter(|&e| spec.routes[t][e] != Route::None)
                .collect();
            let gate = (spec.gate == GateMode::Learned).then(|| {
                let z = visible.len() * out_dim;
                let w = store.add(
                    format!("tower/{}/gate/w", ts.name),
                    Matrix::random_normal(visible.len(), z, spec.init_std, &mut rng),
                    false,
                );
                let b = store.add(
                    format!("tower/{}/gate/b", ts.name),
                    Matrix::zeros(1, visible.len()),
                    false,
                );
                (w, b)
            });
            let mut dims = vec![out_dim];
            dims.extend(&ts.hidden);
            dims.push(1);
            let mlp = Mlp::build(
                &mut store,
                &format!("tower/{}/mlp", ts.name),
                &dims,
                false,
                &mut rng,
            );
            towers.push(TowerRt { gate, visible, mlp });
        }

        Ok(ModelGraph {
            spec,
            schema,
            store,
            tables,
            experts,
            towers,
            cat_fields,
            seq_fields,
        })
    }

    pub fn n_towers(&self) -> usize {
        self.towers.len()
    }

    pub fn n_experts(&self) -> usize {
        self.experts.len()
    }

    /// Task index predicted by each tower.
    pub fn tower_tasks(&self) -> Vec<usize> {
        self.spec.towers.iter().map(|t| t.task).collect()
    }

    /// Embedding matrix of a categorical field in one table (all part
    /// copies side by side).
    pub fn field_table(&self, table: usize, field: &str) -> Result<&Matrix> {
        let f = self
            .schema
            .field_id(field)
            .and_then(|id| self.cat_fields.iter().position(|&c| c == id))
            .ok_or_else(|| Error::Input(format!("no categorical field {field}")))?;
        let t = self
            .tables
            .get(table)
            .ok_or_else(|| Error::Input(format!("no table {table}")))?;
        Ok(self.store.value(t.blocks[f]))
    }

    /// Block ids owned by a table: its per-field embedding matrices.
    pub fn table_blocks(&self, table: usize) -> &[BlockId] {
        &self.tables[table].blocks
    }

    /// Block ids owned by an expert (interaction parameters, temporal
    /// tables and MLP).
    pub fn expert_blocks(&self, expert: usize) -> Vec<BlockId> {
        let e = &self.experts[expert];
        let mut out: Vec<BlockId> = e.r.into_iter().collect();
        out.extend(&e.proj);
        out.extend(e.tim.iter().map(|(_, b)| *b));
        for l in &e.mlp.layers {
            out.push(l.w);
            out.push(l.b);
        }
        out
    }

    pub fn tower_blocks(&self, tower: usize) -> Vec<BlockId> {
        let t = &self.towers[tower];
        let mut out: Vec<BlockId> = t.gate.iter().flat_map(|&(w, b)| [w, b]).collect();
        for l in &t.mlp.layers {
            out.push(l.w);
            out.push(l.b);
        }
        out
    }

    fn check_sample(&self, s: &Sample) -> Result<()> {
        s.check(&self.schema).map_err(Error::Input)
    }

    fn expert_forward(&self, e: usize, s: &Sample) -> Result<ExpertTrace> {
        let es = &self.spec.experts[e];
        let rt = &self.experts[e];
        let table = &self.tables[es.table];
        let k = table.k;
        let rows: Vec<usize> = self
            .cat_fields
            .iter()
            .map(|&f| s.values[f].category().expect("checked"))
            .collect();
        let emb: Vec<Vec<f64>> = rows
            .iter()
            .zip(&table.blocks)
            .map(|(&r, &b)| self.store.value(b).row(r).to_vec())
            .collect();
        let first: Vec<&[f64]> = emb.iter().map(|v| &v[..k]).collect();
        let x = vec![1.0; emb.len()];
        let mut input = match es.kind {
            ExpertKind::Fm => fm_vector(&x, &first)?,
            ExpertKind::Fwfm => {
                let r = self.pair_weights(rt.r.expect("fwfm r"), self.cat_fields.len())?;
                let idx: Vec<usize> = (0..emb.len()).collect();
                fwfm_vector(&idx, &x, &first, &r)?
            }
            ExpertKind::Gwpfm => {
                let r = self.pair_weights(rt.r.expect("gwpfm r"), self.schema.n_groups())?;
                let full: Vec<&[f64]> = emb.iter().map(|v| v.as_slice()).collect();
                match gwpfm_interaction(
                    rt.layout.as_ref().expect("layout"),
                    &x,
                    &full,
                    &r,
                    Reduce::Vector,
                )? {
                    Interaction::Vector(v) => v,
                    Interaction::Scalar(_) => unreachable!(),
                }
            }
            ExpertKind::Projected => {
                let n = emb.len();
                let mut out = vec![0.0; k];
                for a in 0..n {
                    for b in a + 1..n {
                        let m = self.store.value(rt.proj[pair_slot(n, a, b)]);
                        axpy(&mut out, 1.0, &projected_pair(first[a], first[b], m)?);
                    }
                }
                out
            }
            ExpertKind::Flat => first.concat(),
        };
        let inter_dim = input.len();
        let mut seqs = Vec::new();
        if es.tim != TimSetting::None {
            for &(sf, tc) in &self.seq_fields {
                let behaviors = s.values[sf].sequence().unwrap_or(&[]);
                let block = self.store.value(table.blocks[tc]);
                let off = self.tim_offset(es.table, tc);
                let target = emb[tc][off..off + k].to_vec();
                let items: Vec<usize> = behaviors.iter().map(|b| b.item).collect();
                let vecs: Vec<Vec<f64>> = items
                    .iter()
                    .map(|&i| block.row(i)[off..off + k].to_vec())
                    .collect();
                let mut caches = Vec::new();
                if rt.tim.is_empty() {
                    let buckets = vec![0; vecs.len()];
                    let c = tim_forward_matrix(&vecs, &buckets, &target, None, None)?;
                    input.extend(&c.output.u);
                    caches.push(c);
                } else {
                    for &(mode, tb) in &rt.tim {
                        let buckets: Vec<usize> = behaviors
                            .iter()
                            .enumerate()
                            .map(|(i, b)| match mode {
                                TemporalMode::Position { .. } => {
                                    temporal_bucket(i as i64 + 1, mode)
                                }
                                TemporalMode::Interval => temporal_bucket(s.timestamp - b.ts, mode),
                            })
                            .collect();
                        let c = tim_forward_matrix(
                            &vecs,
                            &buckets,
                            &target,
                            Some(self.store.value(tb)),
                            None,
                        )?;
                        input.extend(&c.output.u);
                        caches.push(c);
                    }
                }
                seqs.push(SeqTrace {
                    target_cat: tc,
                    items,
                    caches,
                });
            }
        }
        let mlp = rt.mlp.forward(&self.store, &input);
        Ok(ExpertTrace {
            rows,
            emb,
            seqs,
            inter_dim,
            mlp,
        })
    }

    /// Column offset of the copy TIM uses inside a (possibly part-aware)
    /// table: the target field's own part.
    fn tim_offset(&self, table: usize, target_cat: usize) -> usize {
        let t = &self.tables[table];
        if t.n_parts > 1 {
            self.schema.fields[self.cat_fields[target_cat]].part * t.k
        } else {
            0
        }
    }

    fn pair_weights(&self, block: BlockId, n: usize) -> Result<PairWeights> {
        PairWeights::from_packed(n, self.store.value(block).as_slice().to_vec())
            .ok_or_else(|| Error::Config("pair-weight block has the wrong size".into()))
    }

    /// Forward pass; logits per tower.
    pub fn forward_trace(&self, s: &Sample) -> Result<Trace> {
        self.check_sample(s)?;
        let experts = (0..self.experts.len())
            .map(|e| self.expert_forward(e, s))
            .collect::<Result<Vec<_>>>()?;
        let mut towers = Vec::with_capacity(self.towers.len());
        let mut logits = Vec::with_capacity(self.towers.len());
        for t in &self.towers {
            let hs: Vec<&[f64]> = t.visible.iter().map(|&e| experts[e].output()).collect();
            let (z, g, h) = match t.gate {
                Some((w, b)) => {
                    let z: Vec<f64> = hs.concat();
                    let (g, h) =
                        gate_forward(self.store.value(w), self.store.value(b).as_slice(), &z, &hs);
                    (z, g, h)
                }
                None => {
                    let g = vec![1.0 / hs.len() as f64; hs.len()];
                    let h = combine(&g, &hs);
                    (Vec::new(), g, h)
                }
            };
            let mlp = t.mlp.forward(&self.store, &h);
            logits.push(mlp.output()[0]);
            towers.push(TowerTrace { z, g, mlp });
        }
        Ok(Trace {
            experts,
            towers,
            logits,
        })
    }

    pub fn logits(&self, s: &Sample) -> Result<Vec<f64>> {
        Ok(self.forward_trace(s)?.logits)
    }

    /// Predicted probability per tower.
    pub fn predict(&self, s: &Sample) -> Result<Vec<f64>> {
        Ok(self.logits(s)?.into_iter().map(sigmoid).collect())
    }

    /// Accumulates gradients given `∂L/∂logit` per tower. Routing masks
    /// decide which experts receive each tower's gradient.
    pub fn backward(&mut self, trace: &Trace, dlogits: &[f64]) {
        let mut dh_expert: Vec<Vec<f64>> = trace
            .experts
            .iter()
            .map(|e| vec![0.0; e.output().len()])
            .collect();
        let mut any = vec![false; self.experts.len()];
        for (ti, tt) in trace.towers.iter().enumerate() {
            let d = dlogits[ti];
            if d == 0.0 {
                continue;
            }
            let tower = self.towers[ti].clone();
            let dh = tower.mlp.backward(&mut self.store, &tt.mlp, &[d], true);
            let hs: Vec<&[f64]> = tower
                .visible
                .iter()
                .map(|&e| trace.experts[e].output())
                .collect();
            let (dhs, dlogit) = gate_backward(&tt.g, &hs, &dh);
            if let Some((w, b)) = tower.gate {
                let wb = self.store.block_mut(w);
                let zl = tt.z.len();
                for (r, &dl) in dlogit.iter().enumerate() {
                    axpy(&mut wb.grad.as_mut_slice()[r * zl..(r + 1) * zl], dl, &tt.z);
                }
                axpy(self.store.block_mut(b).grad.as_mut_slice(), 1.0, &dlogit);
            }
            for (j, &e) in tower.visible.iter().enumerate() {
                if self.spec.routes[ti][e] == Route::Both {
                    axpy(&mut dh_expert[e], 1.0, &dhs[j]);
                    any[e] = true;
                }
            }
        }
        for e in 0..self.experts.len() {
            if any[e] {
                self.expert_backward(e, &trace.experts[e], &dh_expert[e]);
            }
        }
    }

    fn expert_backward(&mut self, e: usize, tr: &ExpertTrace, dh: &[f64]) {
        let es = self.spec.experts[e].clone();
        let rt = self.experts[e].clone();
        let table = self.tables[es.table].clone();
        let k = table.k;
        let dinput = rt.mlp.backward(&mut self.store, &tr.mlp, dh, true);
        let d_inter = &dinput[..tr.inter_dim];
        let n = tr.emb.len();
        let x = vec![1.0; n];
        let first: Vec<&[f64]> = tr.emb.iter().map(|v| &v[..k]).collect();
        // Gradients w.r.t. each field's full-width embedding row.
        let mut ge: Vec<Vec<f64>> = vec![vec![0.0; table.width()]; n];
        match es.kind {
            ExpertKind::Fm => {
                for (g, d) in ge.iter_mut().zip(fm_backward(&x, &first, d_inter)) {
                    axpy(&mut g[..k], 1.0, &d);
                }
            }
            ExpertKind::Fwfm => {
                let r = self.pair_weights(rt.r.expect("r"), n).expect("validated");
                let idx: Vec<usize> = (0..n).collect();
                let (gemb, gr) = fwfm_backward(&idx, &x, &first, &r, d_inter);
                for (g, d) in ge.iter_mut().zip(gemb) {
                    axpy(&mut g[..k], 1.0, &d);
                }
                axpy(
                    self.store.block_mut(rt.r.expect("r")).grad.as_mut_slice(),
                    1.0,
                    &gr,
                );
            }
            ExpertKind::Gwpfm => {
                let rb = rt.r.expect("r");
                let r = self
                    .pair_weights(rb, self.schema.n_groups())
                    .expect("validated");
                let full: Vec<&[f64]> = tr.emb.iter().map(|v| v.as_slice()).collect();
                let (gemb, gr) =
                    gwpfm_backward(rt.layout.as_ref().expect("layout"), &x, &full, &r, d_inter);
                for (g, d) in ge.iter_mut().zip(gemb) {
                    axpy(g, 1.0, &d);
                }
                axpy(self.store.block_mut(rb).grad.as_mut_slice(), 1.0, &gr);
            }
            ExpertKind::Projected => {
                for a in 0..n {
                    for b in a + 1..n {
                        let blk = self.store.block_mut(rt.proj[pair_slot(n, a, b)]);
                        let (lo, hi) = ge.split_at_mut(b);
                        projected_pair_backward(
                            first[a],
                            first[b],
                            &blk.value,
                            d_inter,
                            1.0,
                            &mut lo[a][..k],
                            &mut hi[0][..k],
                            &mut blk.grad,
                        );
                    }
                }
            }
            ExpertKind::Flat => {
                for (i, g) in ge.iter_mut().enumerate() {
                    axpy(&mut g[..k], 1.0, &d_inter[i * k..(i + 1) * k]);
                }
            }
        }
        for (f, g) in ge.iter().enumerate() {
            axpy(
                self.store.block_mut(table.blocks[f]).grad_row(tr.rows[f]),
                1.0,
                g,
            );
        }
        let mut at = tr.inter_dim;
        for seq in &tr.seqs {
            let off = self.tim_offset(es.table, seq.target_cat);
            let block = table.blocks[seq.target_cat];
            for (ci, cache) in seq.caches.iter().enumerate() {
                let du = &dinput[at..at + k];
                at += k;
                let table_block = rt.tim.get(ci).map(|&(_, b)| b);
                let g = tim_backward(cache, du, table_block.is_some());
                let b = self.store.block_mut(block);
                for (item, gb) in seq.items.iter().zip(&g.behaviors) {
                    axpy(&mut b.grad_row(*item)[off..off + k], 1.0, gb);
                }
                axpy(
                    &mut b.grad_row(tr.rows[seq.target_cat])[off..off + k],
                    1.0,
                    &g.target,
                );
                if let Some(tb) = table_block {
                    let tblk = self.store.block_mut(tb);
                    for (bucket, row) in &g.table_rows {
                        axpy(tblk.grad_row(*bucket), 1.0, row);
                    }
                }
            }
        }
    }

    /// Mean attention weight per temporal bucket of the first TIM instance
    /// of `expert`, over the given samples: `(bucket, mean α, count)`.
    pub fn attention_by_bucket(
        &self,
        expert: usize,
        samples: &[Sample],
    ) -> Result<Vec<(usize, f64, usize)>> {
        let rt = &self.experts[expert];
        let mode = rt.tim.first().map_or(TemporalMode::Interval, |m| m.0);
        let mut sums = vec![0.0; mode.bucket_count()];
        let mut counts = vec![0usize; mode.bucket_count()];
        for s in samples {
            let tr = self.expert_forward(expert, s)?;
            for (seq, &(sf, _)) in tr.seqs.iter().zip(&self.seq_fields) {
                let behaviors = s.values[sf].sequence().unwrap_or(&[]);
                let alpha = &seq.caches[0].output.alpha;
                for (i, (b, a)) in behaviors.iter().zip(alpha).enumerate() {
                    let bucket = match mode {
                        TemporalMode::Position { .. } => temporal_bucket(i as i64 + 1, mode),
                        TemporalMode::Interval => temporal_bucket(s.timestamp - b.ts, mode),
                    };
                    sums[bucket] += a;
                    counts[bucket] += 1;
                }
            }
        }
        Ok((0..sums.len())
            .filter(|&b| counts[b] > 0)
            .map(|b| (b, sums[b] / counts[b] as f64, counts[b]))
            .collect())
    }

    /// Copy with only the listed towers (used to drop auxiliary towers at
    /// inference). Parameters of the kept towers are carried over.
    pub fn with_towers(&self, keep: &[usize]) -> Result<ModelGraph> {
        let mut spec = self.spec.clone();
        spec.towers = keep.iter().map(|&t| self.spec.towers[t].clone()).collect();
        spec.routes = keep.iter().map(|&t| self.spec.routes[t].clone()).collect();
        let mut g = ModelGraph::new(self.schema.clone(), spec, 0)?;
        g.copy_values_from(self)?;
        Ok(g)
    }

    /// Copies every block whose name exists in `other` with equal shape;
    /// errors if any block of `self` is missing there.
    pub fn copy_values_from(&mut self, other: &ModelGraph) -> Result<()> {
        for b in self.store.blocks_mut() {
            let id = other
                .store
                .find(&b.name)
                .ok_or_else(|| Error::Config(format!("block {} missing in source", b.name)))?;
            let src = other.store.value(id);
            if src.shape() != b.value.shape() {
                return Err(Error::Config(format!("block {} changed shape", b.name)));
            }
            b.value = src.clone();
        }
        Ok(())
    }

    /// Random schema-conforming sample (for tests and diagnostics).
    pub fn random_sample(&self, rng: &mut SeededRng) -> Sample {
        random_sample(&self.schema, rng)
    }
}

pub fn random_sample(schema: &FieldSchema, rng: &mut SeededRng) -> Sample {
    use crate::data::{Behavior, FieldValue};
    use rand::Rng;
    let ts = 1_000_000;
    let values = schema
        .fields
        .iter()
        .map(|f| match f.kind {
            FieldKind::Categorical => FieldValue::Category(rng.random_range(0..f.cardinality)),
            FieldKind::Numeric => FieldValue::Numeric(rng.random_range(0.0..100.0)),
            FieldKind::Sequence => {
                let n = rng.random_range(0..=f.max_len.unwrap_or(1));
                let mut age = 0i64;
                FieldValue::Sequence(
                    (0..n)
                        .map(|_| {
                            age += rng.random_range(0..500);
                            Behavior {
                                item: rng.random_range(0..f.cardinality),
                                ts: ts - age,
                            }
                        })
                        .collect(),
                )
            }
            FieldKind::PretrainedEmbedding => FieldValue::Vector(
                (0..f.dim.unwrap_or(1))
                    .map(|_| rng.random_range(-1.0..1.0))
                    .collect(),
            ),
        })
        .collect();
    Sample {
        values,
        labels: schema
            .tasks
            .iter()
            .map(|_| rng.random_range(0..2))
            .collect(),
        timestamp: ts,
        user_id: 0,
        ad_id: 0,
        repeat_count: None,
        last_repeat_gap: None,
    }
}
