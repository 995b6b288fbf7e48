use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use supplygnn::report::stages::{clear_failed, mark_failed};
use supplygnn::report::{
    stage_qa, stage_report, stage_run, stage_stats, stage_synth, stage_train, PipelineConfig, Stage,
};
use supplygnn::Error;

#[derive(Parser)]
#[command(
    name = "supplygnn",
    version,
    about = "Supply-chain graph QA, GNN training and error comparison"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write the synthetic fixture CSVs into <out>/data
    Synth(Overrides),
    /// Deduplicate and mask the graph; print node counts, write qa.json and adjacency.csv
    Qa(Overrides),
    /// Train every model for every seed; write checkpoints, curves and squared errors
    Train(Overrides),
    /// Kruskal-Wallis and Bonferroni-corrected Mann-Whitney U on the squared errors
    Stats(Overrides),
    /// Assemble report.json and the SVG figures
    Report(Overrides),
    /// Run every stage in order
    Run(Overrides),
}

#[derive(Args, Clone)]
struct Overrides {
    /// Flat `key = value` config file
    #[arg(long)]
    config: Option<PathBuf>,
    /// Single training seed (replaces `seeds`)
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory (`out_dir`)
    #[arg(long)]
    out: Option<PathBuf>,
    /// Comma-separated model list, e.g. `mlp,gcn,gat`
    #[arg(long)]
    models: Option<String>,
    /// plant, storage, group or subgroup
    #[arg(long = "edge-type")]
    edge_type: Option<String>,
    /// production, sales_order, delivery or factory_issue
    #[arg(long)]
    feature: Option<String>,
    /// Any other config key, as `key=value`; repeatable
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

impl Overrides {
    fn resolve(&self) -> Result<PipelineConfig, Error> {
        let mut cfg = match &self.config {
            Some(p) => PipelineConfig::load(p)?,
            None => PipelineConfig::default(),
        };
        if let Some(s) = self.seed {
            cfg.seeds = vec![s];
        }
        if let Some(o) = &self.out {
            cfg.out_dir = o.clone();
        }
        if let Some(m) = &self.models {
            cfg.set("models", m)?;
        }
        if let Some(e) = &self.edge_type {
            cfg.set("edge_type", e)?;
        }
        if let Some(f) = &self.feature {
            cfg.set("feature", f)?;
        }
        for kv in &self.set {
            let (k, v) = kv
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("--set expects key=value, got `{kv}`")))?;
            cfg.set(k.trim(), v)?;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn execute(command: &Command) -> Result<(), (Stage, Error)> {
    let (stage, overrides) = match command {
        Command::Synth(o) => (Stage::Synth, o),
        Command::Qa(o) => (Stage::Qa, o),
        Command::Train(o) => (Stage::Train, o),
        Command::Stats(o) => (Stage::Stats, o),
        Command::Report(o) => (Stage::Report, o),
        Command::Run(o) => (Stage::Run, o),
    };
    let cfg = overrides.resolve().map_err(|e| (Stage::Config, e))?;
    let result = run_stage(stage, &cfg);
    match &result {
        Ok(()) => clear_failed(&cfg.out_dir),
        Err((s, e)) => mark_failed(&cfg.out_dir, *s, e),
    }
    result
}

fn run_stage(stage: Stage, cfg: &PipelineConfig) -> Result<(), (Stage, Error)> {
    let fail = |e| (stage, e);
    match stage {
        Stage::Synth => {
            let files = stage_synth(cfg).map_err(fail)?;
            println!("wrote {} files to {}", files.len(), cfg.out_dir.join("data").display());
        }
        Stage::Qa => {
            let qa = stage_qa(cfg).map_err(fail)?;
            println!("{}", qa.headline());
            println!("edges ({}): {} → {}", qa.edge_type, qa.edges_before, qa.edges_after);
        }
        Stage::Train => {
            let files = stage_train(cfg).map_err(fail)?;
            println!("wrote {} files", files.len());
        }
        Stage::Stats => {
            for (seed, segments) in stage_stats(cfg).map_err(fail)? {
                for s in segments {
                    print!(
                        "seed {seed} {}: kruskal_wallis p = {:.3e}",
                        s.segment, s.report.omnibus.p_value
                    );
                    for p in &s.report.pairwise {
                        print!(
                            "; {} vs {} corrected p = {:.3e}",
                            p.first,
                            p.second,
                            p.result.corrected_p.unwrap_or(f64::NAN)
                        );
                    }
                    println!();
                }
            }
        }
        Stage::Report => {
            let report = stage_report(cfg).map_err(fail)?;
            println!(
                "wrote {} ({} files)",
                cfg.out_dir.join("report.json").display(),
                report.files.len() + 1
            );
        }
        Stage::Run => {
            let report = stage_run(cfg)?;
            println!("{}", report.qa.headline());
            for s in &report.seeds {
                for m in &s.models {
                    println!(
                        "seed {} {:<4} test MSE {:.4}  median SE {:.4}",
                        s.seed, m.model, m.test_mse, m.test_median_se
                    );
                }
            }
            println!("wrote {}", cfg.out_dir.join("report.json").display());
        }
        Stage::Config => unreachable!("config is not a command"),
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(&cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err((stage, err)) => {
            let msg = err.to_string().replace('\n', " ");
            eprintln!("ERROR {}: {msg}", stage.as_str());
            ExitCode::FAILURE
        }
    }
}
