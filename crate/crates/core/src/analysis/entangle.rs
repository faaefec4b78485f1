use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{
    contradictory_pairs, distance_distribution, AnalysisReport, DistanceDistribution, Provenance,
    ReportKind,
};
use crate::numerics::{spearman, Matrix};
use crate::{Error, Result};

/// Panel names in display order: the two single-task references, the
/// shared-embedding model, then the STEM task-A, task-B and shared tables.
pub const PANELS: [&str; 6] = [
    "single_a",
    "single_b",
    "shared",
    "stem_a",
    "stem_b",
    "stem_shared",
];

/// User and item embedding tables of one embedding source.
#[derive(Debug, Clone, PartialEq)]
pub struct PairEmbeddings {
    pub users: Matrix,
    pub items: Matrix,
}

/// Distances of every `(user, item)` pair, user-major.
pub fn pair_distances(e: &PairEmbeddings) -> Result<Vec<f64>> {
    let pairs: Vec<(usize, usize)> = (0..e.users.rows())
        .flat_map(|u| (0..e.items.rows()).map(move |i| (u, i)))
        .collect();
    Ok(distance_distribution(&pairs, &e.users, &e.items)?.distances)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Panel {
    pub name: String,
    pub contradictory: DistanceDistribution,
    pub all: DistanceDistribution,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct EntanglementPayload {
    pctl: f64,
    n_pairs: usize,
    contradictory_pairs: Vec<(usize, usize)>,
    panels: Vec<Panel>,
    /// Spearman correlation of each source with `single_a` / `single_b`,
    /// over all pairs and over the contradictory set.
    spearman_vs_single_a: BTreeMap<String, Option<f64>>,
    spearman_vs_single_b: BTreeMap<String, Option<f64>>,
    spearman_vs_single_a_contradictory: BTreeMap<String, Option<f64>>,
}

/// Builds the contradictory set from the two single-task sources and
/// reports distance distributions per panel. `single_a` and `single_b` are
/// required; other panels appear when supplied.
pub fn entanglement_report(
    sources: &BTreeMap<String, PairEmbeddings>,
    pctl: f64,
    provenance: Provenance,
) -> Result<AnalysisReport> {
    if let Some(k) = sources.keys().find(|k| !PANELS.contains(&k.as_str())) {
        return Err(Error::Config(format!("unknown embedding source {k}")));
    }
    let get = |k: &str| {
        sources
            .get(k)
            .ok_or_else(|| Error::Config(format!("missing embedding source {k}")))
    };
    let a = get("single_a")?;
    get("single_b")?;
    let (nu, ni) = (a.users.rows(), a.items.rows());
    let mut dists = BTreeMap::new();
    for (k, e) in sources {
        if e.users.rows() != nu || e.items.rows() != ni {
            return Err(Error::Config(format!(
                "source {k} covers a different pair universe"
            )));
        }
        dists.insert(k.clone(), pair_distances(e)?);
    }
    let s = contradictory_pairs(&dists["single_a"], &dists["single_b"], pctl)?;
    let pair_of = |id: usize| (id / ni, id % ni);
    let s_pairs: Vec<(usize, usize)> = s.iter().map(|&id| pair_of(id)).collect();
    let all_pairs: Vec<(usize, usize)> = (0..nu * ni).map(pair_of).collect();
    let mut panels = Vec::new();
    for name in PANELS {
        if let Some(e) = sources.get(name) {
            panels.push(Panel {
                name: name.to_string(),
                contradictory: distance_distribution(&s_pairs, &e.users, &e.items)?,
                all: distance_distribution(&all_pairs, &e.users, &e.items)?,
            });
        }
    }
    let subset = |d: &[f64]| s.iter().map(|&i| d[i]).collect::<Vec<_>>();
    let corr = |reference: &str, on_s: bool| -> BTreeMap<String, Option<f64>> {
        dists
            .iter()
            .filter(|(k, _)| !k.starts_with("single"))
            .map(|(k, d)| {
                let r = if on_s {
                    spearman(&subset(&dists[reference]), &subset(d))
                } else {
                    spearman(&dists[reference], d)
                };
                (k.clone(), r)
            })
            .collect()
    };
    let payload = EntanglementPayload {
        pctl,
        n_pairs: nu * ni,
        contradictory_pairs: s_pairs,
        panels,
        spearman_vs_single_a: corr("single_a", false),
        spearman_vs_single_b: corr("single_b", false),
        spearman_vs_single_a_contradictory: corr("single_a", true),
    };
    AnalysisReport::new(ReportKind::Entangle, payload, provenance)
}
