use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use supplygnn::report::stages::read_adjacency;
use supplygnn::report::RunReport;

fn bin(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_supplygnn"))
        .args(args)
        .output()
        .unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn quick_config(dir: &Path, out: &Path) -> String {
    let path = dir.join("quick.conf");
    fs::write(
        &path,
        format!(
            "# short training for tests\nepochs = 3\nseeds = 7, 8\nout_dir = {}\n",
            out.display()
        ),
    )
    .unwrap();
    path.display().to_string()
}

#[test]
fn unknown_config_key_fails_and_names_it() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.conf");
    fs::write(&cfg, "window = 5\nlerning_rate = 0.01\n").unwrap();
    let o = bin(&["run", "--config", cfg.to_str().unwrap()]);
    assert!(!o.status.success());
    let err = stderr(&o);
    assert!(err.starts_with("ERROR config: "), "{err}");
    assert!(err.contains("lerning_rate"));
    assert_eq!(err.lines().count(), 1);
}

#[test]
fn qa_on_fixture_reports_counts() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let out_s = out.to_str().unwrap();
    assert!(bin(&["synth", "--out", out_s]).status.success());
    let o = bin(&["qa", "--out", out_s]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).contains("nodes: 40 → 29 (removed 11)"), "{}", stdout(&o));
    let (codes, edges) = read_adjacency(&out.join("adjacency.csv")).unwrap();
    assert_eq!(codes.len(), 29);
    let qa: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("qa.json")).unwrap()).unwrap();
    assert_eq!(qa["edges_after"].as_u64().unwrap() as usize, edges.len());
}

#[test]
fn missing_inputs_fail_with_stage_and_marker() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    fs::create_dir_all(&out).unwrap();
    let o = bin(&["stats", "--out", out.to_str().unwrap()]);
    assert!(!o.status.success());
    assert!(stderr(&o).starts_with("ERROR stats: "), "{}", stderr(&o));
    assert!(fs::read_to_string(out.join("FAILED"))
        .unwrap()
        .starts_with("ERROR stats: "));
}

#[test]
fn run_is_byte_identical_and_matches_stagewise_execution() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let cfg = quick_config(dir.path(), &out);

    let o = bin(&["run", "--config", &cfg]);
    assert!(o.status.success(), "{}", stderr(&o));
    let first = fs::read(out.join("report.json")).unwrap();
    let curves = fs::read(out.join("seed_8/curves_gat.csv")).unwrap();
    let svgs: Vec<Vec<u8>> = [
        "fig_adjacency.svg",
        "fig_box_test.svg",
        "fig_curves_gcn.svg",
        "fig_series_mlp.svg",
    ]
    .iter()
    .map(|f| fs::read(out.join(f)).unwrap())
    .collect();

    fs::remove_dir_all(&out).unwrap();
    for stage in ["synth", "qa", "train", "stats", "report"] {
        let o = bin(&[stage, "--config", &cfg]);
        assert!(o.status.success(), "{stage}: {}", stderr(&o));
    }
    assert_eq!(first, fs::read(out.join("report.json")).unwrap());
    assert_eq!(curves, fs::read(out.join("seed_8/curves_gat.csv")).unwrap());
    for (i, f) in [
        "fig_adjacency.svg",
        "fig_box_test.svg",
        "fig_curves_gcn.svg",
        "fig_series_mlp.svg",
    ]
    .iter()
    .enumerate()
    {
        assert_eq!(svgs[i], fs::read(out.join(f)).unwrap(), "{f}");
    }
    assert!(!out.join("FAILED").exists());
}

#[test]
fn report_round_trips_and_lists_every_artifact() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let cfg = quick_config(dir.path(), &out);
    let o = bin(&["run", "--config", &cfg, "--models", "mlp,gcn,gat"]);
    assert!(o.status.success(), "{}", stderr(&o));

    let report = RunReport::read(&out.join("report.json")).unwrap();
    let text = fs::read_to_string(out.join("report.json")).unwrap();
    assert!(
        report.to_json().unwrap() == text,
        "report JSON does not round-trip exactly"
    );
    assert_eq!(report.seeds.len(), 2);
    for s in &report.seeds {
        assert_eq!(s.models.len(), 3);
        assert_eq!(s.stats.len(), 2);
        assert_eq!(s.stats[0].segment, "train");
        assert_eq!(s.stats[1].report.pairwise.len(), 2);
        assert!(s.models.iter().all(|m| m.curves.len() == 3));
    }
    assert_eq!(report.split.boundary, 209);
    assert_eq!((report.split.train_windows, report.split.test_windows), (204, 7));
    for f in &report.files {
        assert!(out.join(f).is_file(), "{f}");
    }
    let svgs = report.files.iter().filter(|f| f.ends_with(".svg")).count();
    assert_eq!(svgs, 9);
    // config echo reruns the same configuration
    let echoed = supplygnn::report::PipelineConfig::parse(&report.config_text).unwrap();
    assert_eq!(echoed, report.config);
}

#[test]
fn explicit_data_paths_are_used() {
    let dir = tempfile::tempdir().unwrap();
    let data_out = dir.path().join("gen");
    assert!(bin(&["synth", "--out", data_out.to_str().unwrap()]).status.success());
    let cfg = dir.path().join("real.conf");
    let d = data_out.join("data");
    fs::write(
        &cfg,
        format!(
            "nodes_path = {}\nedges_path = {}\nfeature_path = {}\nedge_type = storage\nout_dir = {}\n",
            d.join("nodes.csv").display(),
            d.join("edges_storage.csv").display(),
            d.join("delivery.csv").display(),
            dir.path().join("out").display()
        ),
    )
    .unwrap();
    let o = bin(&["qa", "--config", cfg.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).contains("nodes: 40 → 29"));
    assert!(stdout(&o).contains("edges (storage)"));
    // synth refuses to overwrite configured real data
    let o = bin(&["synth", "--config", cfg.to_str().unwrap()]);
    assert!(stderr(&o).starts_with("ERROR synth: "));
}
