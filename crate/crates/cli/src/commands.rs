//! Subcommand definitions and dispatch.

use std::fs::File;
use std::io::{BufReader, Write};
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use snp_core::analysis::{correlate_study, read_study};
use snp_core::cluster::DEFAULT_CLUSTERS;
use snp_core::io::{write_pool, Format};
use snp_core::{fid, GaussianStats};

use crate::config::{require_file, Amount, BudgetSpec, PoolSource, RunConfig, Seeds};
use crate::error::{CliError, CliResult};
use crate::manifest::Manifest;
use crate::pipeline;

#[derive(Debug, Parser)]
#[command(name = "snp", version, about = "Search and prune training pools against a target set")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Merge dataset files into one pool file.
    Ingest(IngestArgs),
    /// Print the FID between two embedding files.
    Fid(FidArgs),
    /// Cluster the pool and keep the clusters closest to the target.
    Search(SearchArgs),
    /// Search, then cut the result down to an identity and image budget.
    Prune(PruneArgs),
    /// Summarize a manifest.
    Report(ReportArgs),
    /// Correlate FID and identity counts with downstream scores.
    Correlate(CorrelateArgs),
}

#[derive(Debug, Args)]
pub struct InputArgs {
    /// Pool input: `name=path` for one dataset file, or a pool file path.
    #[arg(long = "pool", required = true, value_name = "NAME=PATH")]
    pub pools: Vec<PoolSource>,
    /// Format of every input file (default: by extension, `.csv` or binary).
    #[arg(long, value_name = "binary|csv")]
    pub format: Option<String>,
}

#[derive(Debug, Args)]
pub struct IngestArgs {
    #[command(flatten)]
    pub inputs: InputArgs,
    /// Output pool file; `.csv` writes CSV, anything else binary.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct FidArgs {
    pub a: PathBuf,
    pub b: PathBuf,
    #[arg(long, value_name = "binary|csv")]
    pub format: Option<String>,
}

#[derive(Debug, Args)]
pub struct SearchArgs {
    #[command(flatten)]
    pub inputs: InputArgs,
    /// Unlabeled target embeddings.
    #[arg(long)]
    pub target: PathBuf,
    /// Number of identity clusters.
    #[arg(long, default_value_t = DEFAULT_CLUSTERS)]
    pub clusters: usize,
    #[arg(long, default_value_t = 0)]
    pub seed_cluster: u64,
    /// Output directory for manifest.json, trace.csv and partition.csv.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct PruneArgs {
    #[command(flatten)]
    pub search: SearchArgs,
    /// Identity budget: a count or a percentage of pool identities.
    #[arg(long, value_name = "N|P%")]
    pub ids: Amount,
    /// Image budget: a count or a percentage of the searched images.
    #[arg(long, value_name = "M|P%")]
    pub images: Amount,
    #[arg(long, default_value_t = 0)]
    pub seed_ids: u64,
    #[arg(long, default_value_t = 0)]
    pub seed_fps: u64,
    /// Reuse the search stage of an earlier manifest instead of re-running it.
    #[arg(long)]
    pub from_manifest: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    #[arg(long)]
    pub manifest: PathBuf,
}

#[derive(Debug, Args)]
pub struct CorrelateArgs {
    /// CSV with columns label,fid,num_ids,score.
    #[arg(long)]
    pub input: PathBuf,
}

impl SearchArgs {
    fn config(&self) -> RunConfig {
        let mut config = RunConfig::new(self.inputs.pools.clone(), self.target.clone());
        config.format = self.inputs.format.clone();
        config.clusters = self.clusters;
        config.seeds.cluster = self.seed_cluster;
        config
    }
}

impl PruneArgs {
    pub fn config(&self) -> RunConfig {
        let mut config = self.search.config();
        config.budget = Some(BudgetSpec {
            ids: self.ids,
            images: self.images,
        });
        config.seeds = Seeds {
            cluster: self.search.seed_cluster,
            ids: self.seed_ids,
            fps: self.seed_fps,
        };
        config.from_manifest = self.from_manifest.clone();
        config
    }
}

pub fn execute(command: &Command, out: &mut dyn Write) -> CliResult<()> {
    match command {
        Command::Ingest(args) => ingest(args, out),
        Command::Fid(args) => fid_command(args, out),
        Command::Search(args) => run_pipeline(&args.config(), &args.out, out),
        Command::Prune(args) => run_pipeline(&args.config(), &args.search.out, out),
        Command::Report(args) => report(args, out),
        Command::Correlate(args) => correlate(args, out),
    }
}

fn write_err(e: std::io::Error) -> CliError {
    CliError::data(format!("cannot write output: {e}"))
}

fn ingest(args: &IngestArgs, out: &mut dyn Write) -> CliResult<()> {
    let mut config = RunConfig::new(args.inputs.pools.clone(), PathBuf::new());
    config.format = args.inputs.format.clone();
    for source in &config.pools {
        require_file(&source.path)?;
    }
    let pool = pipeline::load_pool(&config)?;
    write_pool(&args.out, &pool, Format::from_path(&args.out))?;
    writeln!(
        out,
        "wrote {}: {} datasets, {} identities, {} images, d={}",
        args.out.display(),
        pool.datasets().len(),
        pool.identity_count(),
        pool.len(),
        pool.dimension()
    )
    .map_err(write_err)
}

fn fid_command(args: &FidArgs, out: &mut dyn Write) -> CliResult<()> {
    let mut stats = Vec::with_capacity(2);
    for path in [&args.a, &args.b] {
        require_file(path)?;
        let format = match &args.format {
            Some(f) => f.parse().map_err(|e: snp_core::Error| CliError::config(e.to_string()))?,
            None => Format::from_path(path),
        };
        let set = snp_core::io::read_target(path, format)?;
        stats.push(GaussianStats::accumulate(set.dimension(), set.records())?);
    }
    let value = fid::fid(&stats[0], &stats[1])?;
    writeln!(out, "{value:.6}").map_err(write_err)
}

fn run_pipeline(config: &RunConfig, dir: &std::path::Path, out: &mut dyn Write) -> CliResult<()> {
    let output = pipeline::run(config)?;
    pipeline::write_outputs(dir, &output)?;
    write_summary(&output.manifest, out).map_err(write_err)?;
    writeln!(out, "manifest: {}", dir.join(crate::manifest::MANIFEST_FILE).display()).map_err(write_err)
}

fn report(args: &ReportArgs, out: &mut dyn Write) -> CliResult<()> {
    require_file(&args.manifest)?;
    let manifest = Manifest::read(&args.manifest)?;
    write_summary(&manifest, out).map_err(write_err)
}

fn write_summary(m: &Manifest, out: &mut dyn Write) -> std::io::Result<()> {
    writeln!(
        out,
        "pool: {} images, {} identities, d={}; target: {} images",
        m.pool.records, m.pool.identities, m.pool.dimension, m.target.records
    )?;
    let s = &m.search;
    writeln!(
        out,
        "search: {} of {} clusters kept, {} identities, {} images, FID {:.6}",
        s.selected_clusters.len(),
        s.ranking.len(),
        s.identity_count,
        s.image_count,
        s.best_fid
    )?;
    if let Some(p) = &m.prune {
        let fid = p.fid.map_or_else(|| "n/a".to_string(), |f| format!("{f:.6}"));
        writeln!(
            out,
            "prune: {} identities, {} images (budget {}/{}), cover radius {:.6}, FID {fid}",
            p.id_sample.len(),
            m.selected.len(),
            p.identity_budget,
            p.image_budget,
            p.cover_radius
        )?;
    }
    for d in &m.composition.datasets {
        writeln!(
            out,
            "  {:<24} images {:>8} ({:>6.2}%)  identities {:>7} ({:>6.2}%)",
            d.dataset,
            d.images,
            100.0 * d.image_fraction,
            d.identities,
            100.0 * d.identity_fraction
        )?;
    }
    Ok(())
}

fn correlate(args: &CorrelateArgs, out: &mut dyn Write) -> CliResult<()> {
    require_file(&args.input)?;
    let file = File::open(&args.input)
        .map_err(|e| CliError::config(format!("cannot open {}: {e}", args.input.display())))?;
    let rows = read_study(BufReader::new(file))?;
    let c = correlate_study(&rows)?;
    let show = |r: Option<f64>| r.map_or_else(|| "n/a".to_string(), |r| format!("{r:.6}"));
    writeln!(out, "rows: {}", rows.len()).map_err(write_err)?;
    writeln!(out, "pearson(fid, score): {}", show(c.fid_vs_score)).map_err(write_err)?;
    writeln!(out, "pearson(num_ids, score): {}", show(c.num_ids_vs_score)).map_err(write_err)?;
    writeln!(out, "pearson(fid, num_ids): {}", show(c.fid_vs_num_ids)).map_err(write_err)
}
