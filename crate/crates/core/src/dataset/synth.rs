//! Graph-coupled synthetic demand series and a SupplyGraph-shaped fixture.
//!
//! Latent dynamics per node: `x_t = 0.6·x_{t-1} + coupling·(Â x_{t-1}) + ε_t`
//! with `Â` the symmetrized normalized adjacency and `ε_t ~ N(0, noise_std²)`.

use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::{write_edges, write_feature, write_nodes, FeatureKind, TemporalFeatureTable};
use crate::compute::Matrix;
use crate::error::{Error, Result};
use crate::graph::{
    adjacency_matrix, normalize_adjacency, AdjacencyMode, DirectedGraph, EdgeType, NormalizedAdjacency, ProductNode,
};

pub const AUTOREGRESSIVE_WEIGHT: f64 = 0.6;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SynthConfig {
    pub len: usize,
    pub coupling: f64,
    pub noise_std: f64,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            len: 221,
            coupling: 0.3,
            noise_std: 1.0,
            seed: 7,
        }
    }
}

impl SynthConfig {
    fn validate(&self) -> Result<()> {
        if self.len < 20 {
            return Err(Error::InvalidArgument(format!(
                "synthetic length must be >= 20, got {}",
                self.len
            )));
        }
        if !(0.0..1.0).contains(&self.coupling) {
            return Err(Error::InvalidArgument(format!(
                "coupling must be in [0, 1), got {}",
                self.coupling
            )));
        }
        if !(self.noise_std >= 0.0 && self.noise_std.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "noise_std must be >= 0, got {}",
                self.noise_std
            )));
        }
        Ok(())
    }
}

/// Simulates the latent process, `len × N`. Draw order: `x_0` (skipped when
/// given), then the innovations of each step in node order.
pub fn simulate_latent(op: &NormalizedAdjacency, cfg: &SynthConfig, x0: Option<&[f64]>) -> Result<Matrix> {
    cfg.validate()?;
    let n = op.n;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut out = Matrix::zeros(cfg.len, n);
    match x0 {
        Some(x0) if x0.len() != n => {
            return Err(Error::InvalidArgument(format!(
                "x0 has {} entries, graph has {n} nodes",
                x0.len()
            )))
        }
        Some(x0) => out.row_mut(0).copy_from_slice(x0),
        None => {
            for v in out.row_mut(0) {
                *v = rng.sample(StandardNormal);
            }
        }
    }
    for t in 1..cfg.len {
        let prev = out.row(t - 1).to_vec();
        for i in 0..n {
            let mut agg = 0.0;
            if cfg.coupling != 0.0 {
                for (j, p) in prev.iter().enumerate() {
                    agg += op.weights[(i, j)] * p;
                }
            }
            let eps: f64 = rng.sample(StandardNormal);
            out[(t, i)] = AUTOREGRESSIVE_WEIGHT * prev[i] + cfg.coupling * agg + cfg.noise_std * eps;
        }
    }
    Ok(out)
}

/// Latent series mapped to positive quantities by a per-product affine map
/// (offset and scale drawn from a stream independent of the dynamics).
pub fn synth_generate(graph: &DirectedGraph, feature: FeatureKind, cfg: &SynthConfig) -> Result<TemporalFeatureTable> {
    let op = normalize_adjacency(&adjacency_matrix(graph), AdjacencyMode::Symmetrized)?;
    let latent = simulate_latent(&op, cfg, None)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x9e37_79b9_7f4a_7c15);
    let mut values = latent.clone();
    for n in 0..graph.node_count() {
        let base: f64 = rng.random_range(20.0..200.0);
        let scale: f64 = rng.random_range(10.0..120.0);
        let col = latent.column(n);
        let min = col.iter().copied().fold(f64::INFINITY, f64::min);
        for (t, v) in col.iter().enumerate() {
            values[(t, n)] = base + scale * (v - min);
        }
    }
    TemporalFeatureTable::with_daily_dates(feature, graph.codes(), values)
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct FixtureConfig {
    pub synth: SynthConfig,
}

/// Raw, un-deduplicated inputs in the shape of the public supply-chain data:
/// 40 unique products (29 active, 11 almost always zero), four edge types and
/// four temporal features.
#[derive(Clone, Debug)]
pub struct Fixture {
    pub raw_nodes: Vec<ProductNode>,
    pub raw_edges: Vec<(EdgeType, Vec<(String, String)>)>,
    pub tables: Vec<TemporalFeatureTable>,
}

impl Fixture {
    pub fn edges(&self, edge_type: EdgeType) -> &[(String, String)] {
        self.raw_edges
            .iter()
            .find(|(t, _)| *t == edge_type)
            .map(|(_, e)| e.as_slice())
            .unwrap_or_default()
    }

    pub fn table(&self, feature: FeatureKind) -> Option<&TemporalFeatureTable> {
        self.tables.iter().find(|t| t.feature() == feature)
    }
}

const GROUPS: [&str; 5] = ["ATW", "EEA", "MAR", "POP", "SOS"];

/// Plant membership of the 40 fixture products, in ingestion order. `false`
/// marks the 11 inactive products.
fn layout() -> Vec<(usize, bool)> {
    // (plant, active)
    let plants_active = [8usize, 7, 6, 5, 3];
    let plants_inactive = [2usize, 3, 2, 2, 2];
    let mut out = Vec::new();
    for (p, (&a, &z)) in plants_active.iter().zip(&plants_inactive).enumerate() {
        // interleave inactive members so masking must preserve order
        let mut members: Vec<bool> = vec![true; a];
        for k in 0..z {
            members.insert((2 * k + 1).min(members.len()), false);
        }
        out.extend(members.into_iter().map(|active| (p, active)));
    }
    out
}

pub fn fixture(cfg: &FixtureConfig) -> Result<Fixture> {
    let layout = layout();
    let mut nodes = Vec::with_capacity(layout.len());
    for (k, &(plant, _)) in layout.iter().enumerate() {
        let group = GROUPS[(k * 3 + plant) % GROUPS.len()];
        nodes.push(ProductNode {
            code: format!("{group}{:03}L{:02}P", 10 * (k + 1), 6 + 6 * (k % 3)),
            group: group.to_string(),
            subgroup: format!("{group}{}", ["A", "B"][k % 2]),
            plant: format!("PL{}", plant + 1),
            storage: format!("ST{}", (k % 3) + 1),
        });
    }

    // Plant edges run from each product to every later product of the same plant.
    let mut plant_edges = Vec::new();
    for i in 0..nodes.len() {
        for j in i + 1..nodes.len() {
            if layout[i].0 == layout[j].0 {
                plant_edges.push((i, j));
            }
        }
    }
    let by_attr = |attr: fn(&ProductNode) -> &str| -> Vec<(usize, usize)> {
        let mut e = Vec::new();
        for i in 0..nodes.len() {
            for j in i + 1..nodes.len() {
                if attr(&nodes[i]) == attr(&nodes[j]) {
                    e.push((i, j));
                }
            }
        }
        e
    };
    let edge_sets = [
        (EdgeType::Plant, plant_edges.clone()),
        (EdgeType::Storage, by_attr(|n| &n.storage)),
        (EdgeType::Group, by_attr(|n| &n.group)),
        (EdgeType::Subgroup, by_attr(|n| &n.subgroup)),
    ];

    let active: Vec<usize> = (0..nodes.len()).filter(|&i| layout[i].1).collect();
    let full = DirectedGraph::new(nodes.clone(), plant_edges, EdgeType::Plant)?;
    let active_graph = full.induced(&active)?;

    let mut tables = Vec::new();
    for (f, feature) in FeatureKind::ALL.into_iter().enumerate() {
        let synth = SynthConfig {
            seed: cfg.synth.seed.wrapping_add(f as u64 * 1_000_003),
            ..cfg.synth
        };
        let feature_seed = if feature == FeatureKind::SalesOrder {
            cfg.synth
        } else {
            synth
        };
        let active_table = synth_generate(&active_graph, feature, &feature_seed)?;
        let mut values = Matrix::zeros(cfg.synth.len, nodes.len());
        let mut rng = ChaCha8Rng::seed_from_u64(feature_seed.seed.wrapping_add(0xdead_beef));
        for (n, &(_, is_active)) in layout.iter().enumerate() {
            if is_active {
                let col = active.iter().position(|&a| a == n).expect("active index");
                for t in 0..cfg.synth.len {
                    values[(t, n)] = active_table.values()[(t, col)];
                }
            } else {
                // a handful of sporadic orders; at least 95% zeros
                let hits = (cfg.synth.len / 40).max(1);
                for _ in 0..hits {
                    let t = rng.random_range(0..cfg.synth.len);
                    values[(t, n)] = rng.random_range(1.0..30.0_f64).round();
                }
            }
        }
        tables.push(TemporalFeatureTable::with_daily_dates(feature, full.codes(), values)?);
    }

    // Raw inputs carry duplicates, as the exported data does.
    let mut raw_nodes = nodes.clone();
    for (at, from) in [(5usize, 0usize), (14, 9), (27, 20), (43, 38)] {
        raw_nodes.insert(at.min(raw_nodes.len()), nodes[from].clone());
    }
    let raw_edges = edge_sets
        .into_iter()
        .map(|(t, idx)| {
            let mut codes: Vec<(String, String)> = idx
                .iter()
                .map(|&(s, d)| (nodes[s].code.clone(), nodes[d].code.clone()))
                .collect();
            let dups: Vec<_> = codes.iter().step_by(7).cloned().collect();
            codes.extend(dups);
            (t, codes)
        })
        .collect();

    Ok(Fixture {
        raw_nodes,
        raw_edges,
        tables,
    })
}

/// Writes `nodes.csv`, `edges_<type>.csv` and `<feature>.csv` into `dir`.
pub fn write_fixture(dir: &Path, fixture: &Fixture) -> Result<Vec<std::path::PathBuf>> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut written = Vec::new();
    let p = dir.join("nodes.csv");
    write_nodes(&p, &fixture.raw_nodes)?;
    written.push(p);
    for (t, edges) in &fixture.raw_edges {
        let p = dir.join(format!("edges_{t}.csv"));
        write_edges(&p, edges)?;
        written.push(p);
    }
    for table in &fixture.tables {
        let p = dir.join(format!("{}.csv", table.feature()));
        write_feature(&p, table)?;
        written.push(p);
    }
    Ok(written)
}
