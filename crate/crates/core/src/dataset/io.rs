//! CSV readers and writers for nodes, edges and feature tables.

use std::collections::HashSet;
use std::fs::File;
use std::io::Write;
use std::path::Path;

use chrono::NaiveDate;

use super::{FeatureKind, TemporalFeatureTable};
use crate::compute::Matrix;
use crate::error::{Error, Result};
use crate::graph::{dedupe, DirectedGraph, EdgeType, ProductNode};

const NODES_HEADER: [&str; 5] = ["product", "group", "subgroup", "plant", "storage"];
const EDGES_HEADER: [&str; 2] = ["source", "target"];

fn open(path: &Path) -> Result<csv::Reader<File>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    Ok(csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(file))
}

fn check_header(path: &Path, reader: &mut csv::Reader<File>, expected: &[&str]) -> Result<()> {
    let header = reader.headers()?;
    if header.iter().ne(expected.iter().copied()) {
        return Err(Error::parse(
            path,
            format!(
                "expected header `{}`, found `{}`",
                expected.join(","),
                header.iter().collect::<Vec<_>>().join(",")
            ),
        ));
    }
    Ok(())
}

/// Reads `nodes.csv`. Duplicate rows are kept; [`dedupe`] removes them.
pub fn read_nodes(path: &Path) -> Result<Vec<ProductNode>> {
    let mut reader = open(path)?;
    check_header(path, &mut reader, &NODES_HEADER)?;
    let mut nodes = Vec::new();
    for (i, rec) in reader.records().enumerate() {
        let rec = rec?;
        let field = |k: usize| rec.get(k).unwrap_or_default().to_string();
        let node = ProductNode {
            code: field(0),
            group: field(1),
            subgroup: field(2),
            plant: field(3),
            storage: field(4),
        };
        if node.code.is_empty() {
            return Err(Error::parse(path, format!("row {}: empty product code", i + 1)));
        }
        nodes.push(node);
    }
    if nodes.is_empty() {
        return Err(Error::parse(path, "no products"));
    }
    Ok(nodes)
}

pub fn read_edges(path: &Path) -> Result<Vec<(String, String)>> {
    let mut reader = open(path)?;
    check_header(path, &mut reader, &EDGES_HEADER)?;
    let mut edges = Vec::new();
    for rec in reader.records() {
        let rec = rec?;
        edges.push((rec[0].to_string(), rec[1].to_string()));
    }
    Ok(edges)
}

pub fn read_feature(path: &Path, feature: FeatureKind) -> Result<TemporalFeatureTable> {
    let mut reader = open(path)?;
    let header = reader.headers()?.clone();
    if header.get(0) != Some("date") || header.len() < 2 {
        return Err(Error::parse(path, "expected header `date,<code1>,<code2>,...`"));
    }
    let codes: Vec<String> = header.iter().skip(1).map(str::to_string).collect();
    let mut dates: Vec<NaiveDate> = Vec::new();
    let mut seen = HashSet::new();
    let mut data = Vec::new();
    for (i, rec) in reader.records().enumerate() {
        let rec = rec?;
        let row = i + 1;
        let date = NaiveDate::parse_from_str(&rec[0], "%Y-%m-%d")
            .map_err(|_| Error::parse(path, format!("row {row}: invalid date `{}`", &rec[0])))?;
        if !seen.insert(date) {
            return Err(Error::parse(path, format!("row {row}: duplicate timestamp {date}")));
        }
        if let Some(prev) = dates.last() {
            if *prev > date {
                return Err(Error::parse(
                    path,
                    format!("row {row}: timestamp {date} is out of order"),
                ));
            }
        }
        dates.push(date);
        for (k, code) in codes.iter().enumerate() {
            let cell = &rec[k + 1];
            let v: f64 = cell
                .parse()
                .map_err(|_| Error::parse(path, format!("row {row}, column {code}: invalid number `{cell}`")))?;
            if !v.is_finite() {
                return Err(Error::parse(
                    path,
                    format!("row {row}, column {code}: non-finite value"),
                ));
            }
            data.push(v);
        }
    }
    let values = Matrix::from_vec(dates.len(), codes.len(), data)?;
    TemporalFeatureTable::new(feature, codes, dates, values).map_err(|e| Error::parse(path, e.to_string()))
}

/// Reads and deduplicates the graph, then loads each feature table with its
/// columns aligned to graph node order.
pub fn ingest(
    nodes_path: &Path,
    edges_path: &Path,
    edge_type: EdgeType,
    feature_paths: &[(FeatureKind, &Path)],
) -> Result<(DirectedGraph, Vec<TemporalFeatureTable>)> {
    let nodes = read_nodes(nodes_path)?;
    let edges = read_edges(edges_path)?;
    let graph = dedupe(&nodes, &edges, edge_type)?;
    let codes = graph.codes();
    let code_set: HashSet<&str> = codes.iter().map(String::as_str).collect();

    let mut tables = Vec::with_capacity(feature_paths.len());
    for (kind, path) in feature_paths {
        let table = read_feature(path, *kind)?;
        let table_set: HashSet<&str> = table.product_codes().iter().map(String::as_str).collect();
        let mut only_graph: Vec<&str> = code_set.difference(&table_set).copied().collect();
        let mut only_table: Vec<&str> = table_set.difference(&code_set).copied().collect();
        if !only_graph.is_empty() || !only_table.is_empty() {
            only_graph.sort_unstable();
            only_table.sort_unstable();
            return Err(Error::ProductMismatch(format!(
                "{}: not in feature file [{}]; not in nodes file [{}]",
                path.display(),
                only_graph.join(", "),
                only_table.join(", ")
            )));
        }
        tables.push(table.select(&codes)?);
    }
    Ok((graph, tables))
}

fn create(path: &Path) -> Result<csv::Writer<File>> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    Ok(csv::WriterBuilder::new().from_writer(file))
}

fn finish(path: &Path, mut w: csv::Writer<File>) -> Result<()> {
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn write_nodes(path: &Path, nodes: &[ProductNode]) -> Result<()> {
    let mut w = create(path)?;
    w.write_record(NODES_HEADER)?;
    for n in nodes {
        w.write_record([&n.code, &n.group, &n.subgroup, &n.plant, &n.storage])?;
    }
    finish(path, w)
}

pub fn write_edges(path: &Path, edges: &[(String, String)]) -> Result<()> {
    let mut w = create(path)?;
    w.write_record(EDGES_HEADER)?;
    for (s, d) in edges {
        w.write_record([s, d])?;
    }
    finish(path, w)
}

/// Writes values with Rust's shortest round-trip decimal formatting, so
/// re-reading reproduces every value exactly.
pub fn write_feature(path: &Path, table: &TemporalFeatureTable) -> Result<()> {
    let mut file = std::io::BufWriter::new(File::create(path).map_err(|e| Error::io(path, e))?);
    let mut line = String::from("date");
    for c in table.product_codes() {
        line.push(',');
        line.push_str(c);
    }
    let mut out = line + "\n";
    for (t, date) in table.dates().iter().enumerate() {
        out.push_str(&date.format("%Y-%m-%d").to_string());
        for v in table.values().row(t) {
            out.push(',');
            out.push_str(&format!("{v:?}"));
        }
        out.push('\n');
    }
    file.write_all(out.as_bytes()).map_err(|e| Error::io(path, e))?;
    file.flush().map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write(dir: &Path, name: &str, body: &str) -> std::path::PathBuf {
        let p = dir.join(name);
        std::fs::write(&p, body).unwrap();
        p
    }

    #[test]
    fn minimal_single_product_ingest() {
        let dir = tempfile::tempdir().unwrap();
        let nodes = write(
            dir.path(),
            "nodes.csv",
            "product,group,subgroup,plant,storage\nA1,g,s,p,st\n",
        );
        let edges = write(dir.path(), "edges_plant.csv", "source,target\n");
        let mut body = String::from("date,A1\n");
        for d in 1..=8 {
            body.push_str(&format!("2023-02-0{d},{}\n", d * 10));
        }
        let feat = write(dir.path(), "sales_order.csv", &body);
        let (g, tables) = ingest(&nodes, &edges, EdgeType::Plant, &[(FeatureKind::SalesOrder, &feat)]).unwrap();
        assert_eq!(g.node_count(), 1);
        assert_eq!(tables[0].values().shape(), (8, 1));
    }

    #[test]
    fn unknown_edge_code_is_named() {
        let dir = tempfile::tempdir().unwrap();
        let nodes = write(
            dir.path(),
            "nodes.csv",
            "product,group,subgroup,plant,storage\nA1,g,s,p,st\n",
        );
        let edges = write(dir.path(), "e.csv", "source,target\nA1,ZZ7\n");
        let feat = write(dir.path(), "f.csv", "date,A1\n2023-01-01,1\n");
        let err = ingest(&nodes, &edges, EdgeType::Plant, &[(FeatureKind::SalesOrder, &feat)]).unwrap_err();
        assert!(err.to_string().contains("ZZ7"), "{err}");
    }

    #[test]
    fn column_mismatch_lists_codes() {
        let dir = tempfile::tempdir().unwrap();
        let nodes = write(
            dir.path(),
            "nodes.csv",
            "product,group,subgroup,plant,storage\nA1,g,s,p,st\nB2,g,s,p,st\n",
        );
        let edges = write(dir.path(), "e.csv", "source,target\n");
        let feat = write(dir.path(), "f.csv", "date,A1,C3\n2023-01-01,1,2\n");
        let err = ingest(&nodes, &edges, EdgeType::Plant, &[(FeatureKind::SalesOrder, &feat)])
            .unwrap_err()
            .to_string();
        assert!(err.contains("B2") && err.contains("C3"), "{err}");
    }

    #[test]
    fn non_numeric_cell_reports_position() {
        let dir = tempfile::tempdir().unwrap();
        let feat = write(dir.path(), "f.csv", "date,A1,B2\n2023-01-01,1,2\n2023-01-02,3,x\n");
        let err = read_feature(&feat, FeatureKind::SalesOrder).unwrap_err().to_string();
        assert!(err.contains("row 2") && err.contains("B2"), "{err}");
    }

    #[test]
    fn duplicate_timestamp_is_error() {
        let dir = tempfile::tempdir().unwrap();
        let feat = write(dir.path(), "f.csv", "date,A1\n2023-01-01,1\n2023-01-01,2\n");
        let err = read_feature(&feat, FeatureKind::SalesOrder).unwrap_err().to_string();
        assert!(err.contains("duplicate timestamp"), "{err}");
    }

    #[test]
    fn bad_nodes_header_is_error() {
        let dir = tempfile::tempdir().unwrap();
        let nodes = write(dir.path(), "nodes.csv", "code,group\nA1,g\n");
        assert!(read_nodes(&nodes).is_err());
    }
}
