//! `pdff`: run reaching campaigns, the static joint analyses and the 2-D demo,
//! writing headered CSV, JSON and standalone SVG files.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use pdff::analysis::{interaction_report, sensitivity, InteractionReport, SensitivityReport};
use pdff::arm::{Morphology, MorphologyKind};
use pdff::config::RunConfig;
use pdff::demo::{read_demo_csv, run_demo};
use pdff::experiment::{
    aligned_variance, read_exploration_csv, run_campaign, write_sessions_csv, AlignedVariance,
};
use pdff::svg;

#[derive(Debug, Parser)]
#[command(
    name = "pdff",
    version,
    about = "Covariance-adapting policy search on planar reaching arms"
)]
struct Cli {
    /// TOML run configuration; flags override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Output directory [default: config `output_dir`, then ./pdff-out].
    #[arg(long, global = true, env = "PDFF_OUTPUT_DIR")]
    out: Option<PathBuf>,

    /// Worker threads (0 = one per core).
    #[arg(long, global = true)]
    jobs: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run optimization campaigns and write exploration statistics.
    Optimize(OptimizeArgs),
    /// Static joint analyses of the arm morphologies.
    Analyze {
        #[arg(value_enum)]
        which: Analysis,
        #[command(flatten)]
        args: AnalyzeArgs,
    },
    /// Two-dimensional illustration on J(θ) = ‖θ‖.
    Demo(DemoArgs),
    /// Re-render every SVG from the CSV files found under the output directory.
    Plot,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Analysis {
    Sensitivity,
    Interaction,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum MorphologyArg {
    Human,
    Equidistant,
    InvertedHuman,
    All,
}

impl MorphologyArg {
    fn kinds(self) -> Vec<MorphologyKind> {
        match self {
            MorphologyArg::Human => vec![MorphologyKind::Human],
            MorphologyArg::Equidistant => vec![MorphologyKind::Equidistant],
            MorphologyArg::InvertedHuman => vec![MorphologyKind::InvertedHuman],
            MorphologyArg::All => MorphologyKind::ALL.to_vec(),
        }
    }
}

#[derive(Debug, Args)]
struct OptimizeArgs {
    #[arg(long, value_enum, default_value = "human")]
    morphology: MorphologyArg,
    /// Seed of the first session (`campaign.base_seed`).
    #[arg(long)]
    seed: Option<u64>,
    /// `optimizer.updates`
    #[arg(long)]
    updates: Option<usize>,
    /// Sessions per target (`campaign.sessions_per_target`).
    #[arg(long)]
    sessions: Option<usize>,
    /// Rollouts per update (`optimizer.samples_per_update`).
    #[arg(long)]
    samples: Option<usize>,
    /// `optimizer.eliteness`
    #[arg(long)]
    eliteness: Option<f64>,
}

#[derive(Debug, Args)]
struct AnalyzeArgs {
    #[arg(long, value_enum, default_value = "all")]
    morphology: MorphologyArg,
    /// `analysis.seed`
    #[arg(long)]
    seed: Option<u64>,
    /// Samples per target (`analysis.samples_per_target`).
    #[arg(long)]
    samples: Option<usize>,
    /// Add the end-posture comfort term to the static cost.
    #[arg(long)]
    include_comfort: bool,
}

#[derive(Debug, Args)]
struct DemoArgs {
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// `demo.updates`
    #[arg(long)]
    updates: Option<usize>,
    /// `demo.samples_per_update`
    #[arg(long)]
    samples: Option<usize>,
}

#[derive(Serialize)]
struct Manifest<'a> {
    command: &'a str,
    version: &'a str,
    morphologies: Vec<MorphologyKind>,
    seeds: serde_json::Value,
    files: Vec<String>,
    config: &'a RunConfig,
}

/// Collects the relative paths of everything a command writes.
struct Output {
    root: PathBuf,
    files: Vec<String>,
}

impl Output {
    fn new(root: PathBuf) -> Result<Self> {
        fs::create_dir_all(&root)
            .with_context(|| format!("cannot create output directory {}", root.display()))?;
        Ok(Output {
            root,
            files: Vec::new(),
        })
    }

    fn write_with<F>(&mut self, rel: &str, f: F) -> Result<PathBuf>
    where
        F: FnOnce(&mut BufWriter<File>) -> Result<()>,
    {
        let path = self.root.join(rel);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent)
                .with_context(|| format!("cannot create directory {}", parent.display()))?;
        }
        let file =
            File::create(&path).with_context(|| format!("cannot write {}", path.display()))?;
        let mut w = BufWriter::new(file);
        f(&mut w)?;
        w.flush()
            .with_context(|| format!("cannot write {}", path.display()))?;
        self.files.push(rel.to_string());
        Ok(path)
    }

    fn write_str(&mut self, rel: &str, text: &str) -> Result<PathBuf> {
        self.write_with(rel, |w| Ok(w.write_all(text.as_bytes())?))
    }

    fn write_json<T: Serialize>(&mut self, rel: &str, value: &T) -> Result<PathBuf> {
        self.write_with(rel, |w| {
            serde_json::to_writer_pretty(&mut *w, value)?;
            Ok(w.write_all(b"\n")?)
        })
    }

    fn finish(
        mut self,
        command: &str,
        morphologies: Vec<MorphologyKind>,
        seeds: serde_json::Value,
        config: &RunConfig,
    ) -> Result<()> {
        let manifest = Manifest {
            command,
            version: env!("CARGO_PKG_VERSION"),
            morphologies,
            seeds,
            files: self.files.clone(),
            config,
        };
        let name = format!("manifest_{}.json", command.replace(' ', "_"));
        self.write_json(&name, &manifest)?;
        Ok(())
    }
}

fn load_config(cli: &Cli) -> Result<RunConfig> {
    let mut config = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if let Some(out) = &cli.out {
        config.output_dir = Some(out.clone());
    }
    if let Some(jobs) = cli.jobs {
        config.jobs = jobs;
    }
    Ok(config)
}

fn output_root(config: &RunConfig) -> PathBuf {
    config
        .output_dir
        .clone()
        .unwrap_or_else(|| PathBuf::from("pdff-out"))
}

fn morphologies(config: &RunConfig, kinds: &[MorphologyKind]) -> Result<Vec<Morphology>> {
    kinds
        .iter()
        .map(|&k| config.morphology(k).map_err(Into::into))
        .collect()
}

fn read_file(path: &Path) -> Result<File> {
    File::open(path).with_context(|| format!("cannot read {}", path.display()))
}

fn exploration_title(kind: &str) -> String {
    format!("Relative exploration per joint, {kind} arm")
}

fn variance_title(kind: &str) -> String {
    format!("Joint 1 exploration across sessions after alignment, {kind} arm")
}

/// Renders the campaign SVGs of one morphology directory from its CSVs.
fn plot_campaign(out: &mut Output, dir: &str, kind: &str) -> Result<()> {
    let curves = read_exploration_csv(read_file(&out.root.join(dir).join("exploration.csv"))?)?;
    out.write_str(
        &format!("{dir}/exploration.svg"),
        &svg::exploration_chart(&curves, &exploration_title(kind)),
    )?;
    let variance_csv = out.root.join(dir).join("aligned_variance_joint1.csv");
    if variance_csv.exists() {
        let stats = AlignedVariance::read_csv(read_file(&variance_csv)?)?;
        out.write_str(
            &format!("{dir}/aligned_variance_joint1.svg"),
            &svg::band_chart(&stats, &variance_title(kind), "λ₁"),
        )?;
    }
    Ok(())
}

fn plot_sensitivity(out: &mut Output) -> Result<()> {
    let report = SensitivityReport::read_csv(read_file(&out.root.join("sensitivity.csv"))?)?;
    out.write_str("sensitivity.svg", &svg::sensitivity_chart(&report))?;
    Ok(())
}

fn plot_interaction(out: &mut Output) -> Result<()> {
    let report = InteractionReport::read_csv(read_file(&out.root.join("interaction.csv"))?)?;
    out.write_str("interaction.svg", &svg::interaction_chart(&report))?;
    Ok(())
}

fn plot_demo(out: &mut Output) -> Result<()> {
    let snapshots = read_demo_csv(read_file(&out.root.join("demo.csv"))?)?;
    out.write_str(
        "demo.svg",
        &svg::demo_chart(&snapshots, "Search distribution on J(θ) = ‖θ‖"),
    )?;
    Ok(())
}

fn cmd_optimize(mut config: RunConfig, args: &OptimizeArgs) -> Result<()> {
    if let Some(seed) = args.seed {
        config.campaign.base_seed = seed;
    }
    if let Some(updates) = args.updates {
        config.optimizer.updates = updates;
    }
    if let Some(sessions) = args.sessions {
        config.campaign.sessions_per_target = sessions;
    }
    if let Some(samples) = args.samples {
        config.optimizer.samples_per_update = samples;
    }
    if let Some(h) = args.eliteness {
        config.optimizer.eliteness = h;
    }
    config.validate()?;
    let kinds = args.morphology.kinds();
    let arms = morphologies(&config, &kinds)?;
    let targets = config.target_set()?;
    let settings = config.campaign_settings();
    let mut out = Output::new(output_root(&config))?;
    out.write_with("targets.csv", |w| Ok(targets.write_csv(w)?))?;

    for morphology in &arms {
        let kind = morphology.kind.name();
        let campaign = run_campaign(morphology, &targets, &settings)?;
        out.write_with(&format!("{kind}/exploration.csv"), |w| {
            Ok(campaign.result.write_exploration_csv(w)?)
        })?;
        out.write_with(&format!("{kind}/sessions.csv"), |w| {
            Ok(write_sessions_csv(
                &campaign.traces,
                settings.campaign.sessions_per_target,
                w,
            )?)
        })?;
        out.write_json(&format!("{kind}/peaks.json"), &campaign.result.peaks_json())?;
        let stats = aligned_variance(&campaign.traces, 0)?;
        out.write_with(&format!("{kind}/aligned_variance_joint1.csv"), |w| {
            Ok(stats.write_csv(w)?)
        })?;
        plot_campaign(&mut out, kind, kind)?;
        let top = campaign.result.top_peak();
        eprintln!(
            "{kind}: {} sessions, top peak joint {} = {:.3} at update {}",
            campaign.result.sessions, top.joint, top.peak_relative, top.peak_update
        );
    }

    let sessions = targets.len() * settings.campaign.sessions_per_target;
    let seeds = serde_json::json!({
        "base_seed": settings.campaign.base_seed,
        "session_seeds": format!(
            "{}..={}",
            settings.campaign.base_seed,
            settings.campaign.base_seed.wrapping_add(sessions as u64 - 1)
        ),
    });
    out.finish("optimize", kinds, seeds, &config)
}

fn cmd_analyze(mut config: RunConfig, which: Analysis, args: &AnalyzeArgs) -> Result<()> {
    if let Some(seed) = args.seed {
        config.analysis.seed = seed;
    }
    if let Some(samples) = args.samples {
        config.analysis.samples_per_target = samples;
    }
    if args.include_comfort {
        config.analysis.include_comfort = true;
    }
    config.validate()?;
    let kinds = args.morphology.kinds();
    let arms = morphologies(&config, &kinds)?;
    let targets = config.target_set()?;
    let mut out = Output::new(output_root(&config))?;

    let command = match which {
        Analysis::Sensitivity => {
            let report = sensitivity(&arms, &targets, &config.analysis);
            out.write_with("sensitivity.csv", |w| Ok(report.write_csv(w)?))?;
            out.write_json("sensitivity.json", &report)?;
            plot_sensitivity(&mut out)?;
            "analyze sensitivity"
        }
        Analysis::Interaction => {
            let report = interaction_report(&arms, &targets, &config.analysis)?;
            out.write_with("interaction.csv", |w| Ok(report.write_csv(w)?))?;
            out.write_json("interaction.json", &report)?;
            plot_interaction(&mut out)?;
            for row in &report.rows {
                eprintln!("{}: median ratio {:.3}", row.morphology, row.median);
            }
            "analyze interaction"
        }
    };
    let seeds = serde_json::json!({ "seed": config.analysis.seed });
    out.finish(command, kinds, seeds, &config)
}

fn cmd_demo(mut config: RunConfig, args: &DemoArgs) -> Result<()> {
    if let Some(updates) = args.updates {
        config.demo.updates = updates;
    }
    if let Some(samples) = args.samples {
        config.demo.samples_per_update = samples;
    }
    config.validate()?;
    let run = run_demo(&config.demo, args.seed)?;
    let mut out = Output::new(output_root(&config))?;
    out.write_with("demo.csv", |w| Ok(run.write_csv(w)?))?;
    plot_demo(&mut out)?;
    if let Some(last) = run.snapshots.last() {
        eprintln!("demo: cost {:.4} after {} updates", last.cost, last.update);
    }
    out.finish(
        "demo",
        Vec::new(),
        serde_json::json!({ "seed": args.seed }),
        &config,
    )
}

fn cmd_plot(config: &RunConfig) -> Result<()> {
    let root = output_root(config);
    if !root.is_dir() {
        bail!("output directory {} does not exist", root.display());
    }
    let mut out = Output::new(root)?;
    for kind in MorphologyKind::ALL {
        if out.root.join(kind.name()).join("exploration.csv").exists() {
            plot_campaign(&mut out, kind.name(), kind.name())?;
        }
    }
    if out.root.join("sensitivity.csv").exists() {
        plot_sensitivity(&mut out)?;
    }
    if out.root.join("interaction.csv").exists() {
        plot_interaction(&mut out)?;
    }
    if out.root.join("demo.csv").exists() {
        plot_demo(&mut out)?;
    }
    if out.files.is_empty() {
        bail!("no CSV files to plot under {}", out.root.display());
    }
    for f in &out.files {
        eprintln!("wrote {f}");
    }
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    let config = load_config(&cli)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.jobs)
        .build()
        .context("cannot start worker threads")?;
    pool.install(|| match &cli.command {
        Command::Optimize(args) => cmd_optimize(config, args),
        Command::Analyze { which, args } => cmd_analyze(config, *which, args),
        Command::Demo(args) => cmd_demo(config, args),
        Command::Plot => cmd_plot(&config),
    })
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
