//! Product graph, quality-assurance passes and normalized adjacency operators.

use std::collections::{BTreeSet, HashMap, HashSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::compute::{Mask, Matrix};
use crate::dataset::TemporalFeatureTable;
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProductNode {
    pub code: String,
    pub group: String,
    pub subgroup: String,
    pub plant: String,
    pub storage: String,
}

impl ProductNode {
    /// Node with only a code; metadata fields left empty.
    pub fn bare(code: impl Into<String>) -> Self {
        Self {
            code: code.into(),
            group: String::new(),
            subgroup: String::new(),
            plant: String::new(),
            storage: String::new(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EdgeType {
    Plant,
    Storage,
    Group,
    Subgroup,
}

impl EdgeType {
    pub const ALL: [EdgeType; 4] = [EdgeType::Plant, EdgeType::Storage, EdgeType::Group, EdgeType::Subgroup];

    pub fn as_str(self) -> &'static str {
        match self {
            EdgeType::Plant => "plant",
            EdgeType::Storage => "storage",
            EdgeType::Group => "group",
            EdgeType::Subgroup => "subgroup",
        }
    }
}

impl fmt::Display for EdgeType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for EdgeType {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        EdgeType::ALL
            .into_iter()
            .find(|e| e.as_str() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown edge type `{s}`")))
    }
}

/// Homogeneous, directed, binary product graph.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DirectedGraph {
    nodes: Vec<ProductNode>,
    /// Sorted, duplicate-free `(src, dst)` index pairs.
    edges: BTreeSet<(usize, usize)>,
    edge_type: EdgeType,
}

impl DirectedGraph {
    /// Builds a graph from already-unique nodes and index edges.
    pub fn new(
        nodes: Vec<ProductNode>,
        edges: impl IntoIterator<Item = (usize, usize)>,
        edge_type: EdgeType,
    ) -> Result<Self> {
        let mut seen = HashSet::new();
        for n in &nodes {
            if n.code.is_empty() {
                return Err(Error::InvalidArgument("empty product code".into()));
            }
            if !seen.insert(n.code.as_str()) {
                return Err(Error::InvalidArgument(format!("duplicate product code `{}`", n.code)));
            }
        }
        let edges: BTreeSet<_> = edges.into_iter().collect();
        if let Some(&(s, d)) = edges.iter().find(|&&(s, d)| s >= nodes.len() || d >= nodes.len()) {
            return Err(Error::InvalidArgument(format!(
                "edge ({s}, {d}) out of range for {} nodes",
                nodes.len()
            )));
        }
        Ok(Self {
            nodes,
            edges,
            edge_type,
        })
    }

    pub fn nodes(&self) -> &[ProductNode] {
        &self.nodes
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.edges.iter().copied()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn edge_type(&self) -> EdgeType {
        self.edge_type
    }

    pub fn has_edge(&self, src: usize, dst: usize) -> bool {
        self.edges.contains(&(src, dst))
    }

    pub fn codes(&self) -> Vec<String> {
        self.nodes.iter().map(|n| n.code.clone()).collect()
    }

    pub fn index_of(&self, code: &str) -> Option<usize> {
        self.nodes.iter().position(|n| n.code == code)
    }

    /// Edges as `(src_code, dst_code)` pairs in index order.
    pub fn edge_codes(&self) -> Vec<(String, String)> {
        self.edges
            .iter()
            .map(|&(s, d)| (self.nodes[s].code.clone(), self.nodes[d].code.clone()))
            .collect()
    }

    /// Subgraph induced by `keep` (indices, in the given order).
    pub fn induced(&self, keep: &[usize]) -> Result<Self> {
        let remap: HashMap<usize, usize> = keep.iter().enumerate().map(|(new, &old)| (old, new)).collect();
        let nodes = keep.iter().map(|&i| self.nodes[i].clone()).collect();
        let edges = self
            .edges
            .iter()
            .filter_map(|(s, d)| Some((*remap.get(s)?, *remap.get(d)?)));
        Self::new(nodes, edges, self.edge_type)
    }
}

/// Removes duplicate nodes (first occurrence wins) and duplicate edges.
pub fn dedupe(raw_nodes: &[ProductNode], raw_edges: &[(String, String)], edge_type: EdgeType) -> Result<DirectedGraph> {
    if raw_nodes.is_empty() {
        return Err(Error::InvalidArgument("node list is empty".into()));
    }
    let mut index = HashMap::new();
    let mut nodes = Vec::new();
    for n in raw_nodes {
        if !index.contains_key(&n.code) {
            index.insert(n.code.clone(), nodes.len());
            nodes.push(n.clone());
        }
    }
    let mut edges = Vec::with_capacity(raw_edges.len());
    for (s, d) in raw_edges {
        let si = *index.get(s).ok_or_else(|| Error::UnknownCode(s.clone()))?;
        let di = *index.get(d).ok_or_else(|| Error::UnknownCode(d.clone()))?;
        edges.push((si, di));
    }
    DirectedGraph::new(nodes, edges, edge_type)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MaskOutcome {
    pub graph: DirectedGraph,
    pub removed: Vec<String>,
}

// Serialize the graph as codes + edge list so reports can embed it.
impl Serialize for DirectedGraph {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        use serde::ser::SerializeStruct;
        let mut st = s.serialize_struct("DirectedGraph", 3)?;
        st.serialize_field("nodes", &self.nodes)?;
        st.serialize_field("edges", &self.edges.iter().collect::<Vec<_>>())?;
        st.serialize_field("edge_type", &self.edge_type)?;
        st.end()
    }
}

impl<'de> Deserialize<'de> for DirectedGraph {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        struct Raw {
            nodes: Vec<ProductNode>,
            edges: Vec<(usize, usize)>,
            edge_type: EdgeType,
        }
        let raw = Raw::deserialize(d)?;
        DirectedGraph::new(raw.nodes, raw.edges, raw.edge_type).map_err(serde::de::Error::custom)
    }
}

/// Drops every node whose feature column has a zero fraction at or above
/// `zero_fraction_threshold`, returning the induced subgraph on survivors.
pub fn mask_inactive_nodes(
    graph: &DirectedGraph,
    features: &TemporalFeatureTable,
    zero_fraction_threshold: f64,
) -> Result<MaskOutcome> {
    if !(zero_fraction_threshold > 0.0 && zero_fraction_threshold <= 1.0) {
        return Err(Error::InvalidArgument(format!(
            "zero_fraction_threshold must be in (0, 1], got {zero_fraction_threshold}"
        )));
    }
    let t = features.len() as f64;
    let mut keep = Vec::new();
    let mut removed = Vec::new();
    for (i, node) in graph.nodes().iter().enumerate() {
        let col = features
            .column_of(&node.code)
            .ok_or_else(|| Error::ProductMismatch(format!("no feature column for `{}`", node.code)))?;
        let zeros = features.values().column(col).iter().filter(|&&v| v == 0.0).count();
        if zeros as f64 / t >= zero_fraction_threshold {
            removed.push(node.code.clone());
        } else {
            keep.push(i);
        }
    }
    if keep.is_empty() {
        return Err(Error::EmptyGraph);
    }
    Ok(MaskOutcome {
        graph: graph.induced(&keep)?,
        removed,
    })
}

/// Binary matrix with `m[i][j] = 1` iff the edge `i -> j` exists.
pub fn adjacency_matrix(graph: &DirectedGraph) -> Matrix {
    let n = graph.node_count();
    let mut m = Matrix::zeros(n, n);
    for (s, d) in graph.edges() {
        m[(s, d)] = 1.0;
    }
    m
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AdjacencyMode {
    /// `max(A, Aᵀ)` plus self-loops, symmetric degree normalization.
    #[default]
    Symmetrized,
    /// Each node aggregates from its in-neighbors plus itself.
    DirectedIn,
}

impl AdjacencyMode {
    pub fn as_str(self) -> &'static str {
        match self {
            AdjacencyMode::Symmetrized => "symmetrized",
            AdjacencyMode::DirectedIn => "directed_in",
        }
    }
}

impl FromStr for AdjacencyMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "symmetrized" => Ok(AdjacencyMode::Symmetrized),
            "directed_in" => Ok(AdjacencyMode::DirectedIn),
            _ => Err(Error::InvalidArgument(format!("unknown adjacency mode `{s}`"))),
        }
    }
}

/// Degree-normalized aggregation operator.
///
/// Rows index the receiving node: `(weights · X)[i]` is node `i`'s aggregate.
#[derive(Clone, Debug, PartialEq)]
pub struct NormalizedAdjacency {
    pub n: usize,
    pub weights: Matrix,
    pub mode: AdjacencyMode,
}

/// Self-looped neighborhood pattern, rows indexing the receiving node.
pub fn neighborhood(adjacency: &Matrix, mode: AdjacencyMode) -> Result<Mask> {
    let n = adjacency.rows();
    if adjacency.cols() != n {
        return Err(Error::Shape {
            op: "neighborhood",
            left: adjacency.shape(),
            right: (n, n),
        });
    }
    let mut mask = Mask::new(n, n);
    for i in 0..n {
        for j in 0..n {
            let linked = match mode {
                AdjacencyMode::Symmetrized => adjacency[(i, j)] != 0.0 || adjacency[(j, i)] != 0.0,
                // j -> i means i receives from j
                AdjacencyMode::DirectedIn => adjacency[(j, i)] != 0.0,
            };
            mask.set(i, j, linked || i == j);
        }
    }
    Ok(mask)
}

/// Kipf-style `D^{-1/2} (A + I) D^{-1/2}` over the neighborhood selected by `mode`.
pub fn normalize_adjacency(adjacency: &Matrix, mode: AdjacencyMode) -> Result<NormalizedAdjacency> {
    let mask = neighborhood(adjacency, mode)?;
    let n = mask.rows();
    // For both modes the degree of a node is the number of nodes it receives from.
    let degree: Vec<f64> = (0..n).map(|i| mask.row_count(i) as f64).collect();
    let mut weights = Matrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            if mask.get(i, j) {
                weights[(i, j)] = 1.0 / (degree[i] * degree[j]).sqrt();
            }
        }
    }
    Ok(NormalizedAdjacency { n, weights, mode })
}

/// The operators a graph model needs: the GCN aggregation matrix and the GAT
/// attention neighborhoods, built from the same mode.
#[derive(Clone, Debug, PartialEq)]
pub struct GraphOperators {
    pub adjacency: NormalizedAdjacency,
    pub attention_mask: Mask,
}

impl GraphOperators {
    pub fn new(graph: &DirectedGraph, mode: AdjacencyMode) -> Result<Self> {
        let a = adjacency_matrix(graph);
        Ok(Self {
            adjacency: normalize_adjacency(&a, mode)?,
            attention_mask: neighborhood(&a, mode)?,
        })
    }

    pub fn node_count(&self) -> usize {
        self.adjacency.n
    }
}
