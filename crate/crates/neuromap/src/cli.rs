//! Command-line interface. Results go to standard output or files,
//! diagnostics to standard error.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use neuromap_core::experiments::{Enumeration, SweepSpec};
use neuromap_core::fabric::synthesize_tables;
use neuromap_core::netmodel::{build_canonical, DecayProfile};
use neuromap_core::placer::compile;
use neuromap_core::report::chip_spec_report;
use neuromap_core::simulator::{validate, Route, RouterId, Simulator, TraceEntry};
use serde::Serialize;

use crate::formats::{
    load_fabric, load_network, load_placement, load_tables, write_json, FabricFile, NetworkFile,
    PlacementFile, TablesFile,
};
use crate::manifest::RunManifest;
use crate::sweep::{emit_csv, parallel_sweep, recommend, render_recommendation, SweepFile};

/// Exit status when compilation left unplaceable connections.
pub const EXIT_PARTIAL: i32 = 2;

#[derive(Debug, Parser)]
#[command(
    name = "neuromap",
    version,
    about = "Place spiking networks on hierarchical-routing neuromorphic fabrics"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write a canonical population network.
    Generate(GenerateArgs),
    /// Place a network and synthesize its routing tables.
    Compile(CompileArgs),
    /// Replay spikes through compiled routing tables.
    Simulate(SimulateArgs),
    /// Remove neurons in every combination and compile each deviation.
    Sweep(SweepArgs),
    /// Compare fabric configurations for one network.
    Report(ReportArgs),
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    /// Number of populations.
    #[arg(short = 'p', long, default_value_t = 4)]
    pub populations: usize,
    /// Neurons per population.
    #[arg(short = 'n', long, default_value_t = 4)]
    pub pop_size: usize,
    /// Connections per population distance, e.g. `1:2,2:1,3:1`.
    /// Defaults to ceil(pop_size / 2^d).
    #[arg(long)]
    pub profile: Option<String>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output file; standard output if absent.
    #[arg(short = 'o', long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CompileArgs {
    pub network: PathBuf,
    /// Fabric config JSON; defaults apply when absent.
    #[arg(short, long)]
    pub fabric: Option<PathBuf>,
    /// Directory receiving placement.json and tables.json.
    #[arg(short = 'o', long, default_value = ".")]
    pub out_dir: PathBuf,
    /// Write artifacts even if some connections are unplaceable (exit 2).
    #[arg(long)]
    pub allow_partial: bool,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    pub tables: PathBuf,
    #[arg(long, conflicts_with = "all", required_unless_present = "all")]
    pub source: Option<usize>,
    #[arg(long)]
    pub all: bool,
    /// Print router hops for every delivery.
    #[arg(long)]
    pub trace: bool,
    /// Check deliveries against the network and placement.
    #[arg(long, requires_all = ["network", "placement"])]
    pub validate: bool,
    #[arg(long)]
    pub network: Option<PathBuf>,
    #[arg(long)]
    pub placement: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    pub network: PathBuf,
    #[arg(long, value_delimiter = ',', default_value = "1,2,3")]
    pub remove: Vec<usize>,
    #[arg(long, value_delimiter = ',', default_value = "2,3,4")]
    pub core_sizes: Vec<usize>,
    /// Draw this many victim sets per removal count instead of all.
    #[arg(long)]
    pub sample: Option<usize>,
    #[arg(long, default_value_t = 0, requires = "sample")]
    pub seed: u64,
    #[arg(short, long)]
    pub fabric: Option<PathBuf>,
    #[arg(long)]
    pub csv: PathBuf,
    /// JSON mirror with per-instance rows.
    #[arg(long)]
    pub json: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    pub network: PathBuf,
    #[arg(long, value_delimiter = ',', default_value = "2,3,4")]
    pub core_sizes: Vec<usize>,
    #[arg(short, long)]
    pub fabric: Option<PathBuf>,
    #[arg(long)]
    pub json: Option<PathBuf>,
}

/// Runs a command and returns its exit status; hard failures are errors.
pub fn run(cli: Cli) -> Result<i32> {
    let stdout = std::io::stdout();
    let mut out = stdout.lock();
    match cli.command {
        Command::Generate(a) => generate(&a, &mut out),
        Command::Compile(a) => compile_cmd(&a),
        Command::Simulate(a) => simulate(&a, &mut out),
        Command::Sweep(a) => sweep(&a, &mut out),
        Command::Report(a) => report(&a, &mut out),
    }
}

pub fn parse_profile(text: &str) -> Result<DecayProfile> {
    let mut counts = BTreeMap::new();
    for item in text.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        let (d, c) = item
            .split_once(':')
            .with_context(|| format!("profile entry {item:?} is not distance:count"))?;
        let d: usize = d
            .trim()
            .parse()
            .with_context(|| format!("profile distance {d:?}"))?;
        let c: usize = c
            .trim()
            .parse()
            .with_context(|| format!("profile count {c:?}"))?;
        if counts.insert(d, c).is_some() {
            bail!("profile lists distance {d} twice");
        }
    }
    Ok(DecayProfile::new(counts)?)
}

fn generate(a: &GenerateArgs, out: &mut impl Write) -> Result<i32> {
    let profile = match &a.profile {
        Some(p) => parse_profile(p)?,
        None => DecayProfile::exponential(a.pop_size, a.populations),
    };
    let net = build_canonical(a.populations, a.pop_size, &profile, a.seed)?;
    let profile_text: Vec<String> = profile
        .counts()
        .iter()
        .map(|(d, c)| format!("{d}:{c}"))
        .collect();
    let manifest = RunManifest::new("generate")
        .param("populations", a.populations)
        .param("pop_size", a.pop_size)
        .param("profile", profile_text.join(","))
        .param("seed", a.seed);
    let file = NetworkFile::from_model(&net, Some(manifest));
    match &a.out {
        Some(path) => write_json(path, &file)?,
        None => out.write_all(crate::formats::to_json(&file).as_bytes())?,
    }
    Ok(0)
}

fn compile_cmd(a: &CompileArgs) -> Result<i32> {
    let mut manifest = RunManifest::new("compile");
    manifest.add_input(&a.network)?;
    if let Some(f) = &a.fabric {
        manifest.add_input(f)?;
    }
    let (net, _) = load_network(&a.network)?;
    let cfg = load_fabric(a.fabric.as_deref())?;
    let manifest = manifest
        .param("allow_partial", a.allow_partial)
        .with_fabric(FabricFile::from(&cfg));

    let compiled = compile(&net, &cfg)?;
    let p = &compiled.placement;
    if !p.unplaceable.is_empty() {
        let list: Vec<String> = p
            .unplaceable
            .iter()
            .map(|(s, d)| format!("{s}->{d}"))
            .collect();
        eprintln!(
            "unplaceable connections ({}): {}",
            list.len(),
            list.join(", ")
        );
        if !a.allow_partial {
            bail!("{} connection(s) are unplaceable; rerun with --allow-partial to write partial artifacts", list.len());
        }
    }
    let tables = synthesize_tables(p, &cfg, a.allow_partial)?;
    std::fs::create_dir_all(&a.out_dir)
        .with_context(|| format!("cannot create {}", a.out_dir.display()))?;
    write_json(
        &a.out_dir.join("placement.json"),
        &PlacementFile::new(manifest.clone(), &cfg, p, compiled.distance_map.matrix()),
    )?;
    write_json(
        &a.out_dir.join("tables.json"),
        &TablesFile::new(manifest, &tables),
    )?;
    Ok(if p.unplaceable.is_empty() {
        0
    } else {
        EXIT_PARTIAL
    })
}

#[derive(Serialize)]
struct ReceiverLine<'a> {
    source: usize,
    receivers: &'a [usize],
}

fn write_trace(out: &mut impl Write, source: usize, log: &[TraceEntry]) -> Result<()> {
    writeln!(out, "source {source}")?;
    for e in log {
        let route = match e.route {
            Route::Hierarchical(level) => level.name().to_string(),
            Route::Programmable => "programmable".to_string(),
        };
        writeln!(out, "  -> {} via {route}", e.receiver)?;
        for h in &e.hops {
            let router = match h.router {
                RouterId::R0(c) => format!("R0 core {c}"),
                RouterId::R1(c) => format!("R1 cluster {c}"),
                RouterId::R2 => "R2".to_string(),
            };
            writeln!(
                out,
                "       {router:<14} distance {} address_bits {}",
                h.distance_field, h.address_bits
            )?;
        }
    }
    Ok(())
}

fn simulate(a: &SimulateArgs, out: &mut impl Write) -> Result<i32> {
    let tables = load_tables(&a.tables)?;
    let sim = Simulator::new(&tables);
    let sources: Vec<usize> = match a.source {
        Some(s) => vec![s],
        None => (0..tables.num_neurons()).collect(),
    };
    for &s in &sources {
        if a.trace {
            write_trace(out, s, &sim.trace(s)?)?;
        } else {
            let receivers: Vec<usize> = sim.deliver(s)?.into_iter().collect();
            serde_json::to_writer(
                &mut *out,
                &ReceiverLine {
                    source: s,
                    receivers: &receivers,
                },
            )?;
            writeln!(out)?;
        }
    }
    if !a.validate {
        return Ok(0);
    }
    let network = a.network.as_deref().expect("clap requires --network");
    let placement = a.placement.as_deref().expect("clap requires --placement");
    let (net, _) = load_network(network)?;
    let p = load_placement(placement)?;
    let r = validate(&p, &tables, &net)
        .context("network, placement and tables do not belong together")?;
    writeln!(
        out,
        "covered: {}, missing: {}, spurious: {}",
        r.covered.len(),
        r.missing.len(),
        r.spurious.len()
    )?;
    for &(s, d) in &r.missing {
        eprintln!("missing delivery {s}->{d}");
    }
    Ok(if r.missing.is_empty() { 0 } else { 1 })
}

fn sweep(a: &SweepArgs, out: &mut impl Write) -> Result<i32> {
    let mut manifest = RunManifest::new("sweep");
    manifest.add_input(&a.network)?;
    if let Some(f) = &a.fabric {
        manifest.add_input(f)?;
    }
    let (net, _) = load_network(&a.network)?;
    let cfg = load_fabric(a.fabric.as_deref())?;
    let enumeration = match a.sample {
        Some(count) => Enumeration::Sampled {
            count,
            seed: a.seed,
        },
        None => Enumeration::All,
    };
    let spec = SweepSpec {
        removals: a.remove.clone(),
        core_sizes: a.core_sizes.clone(),
        enumeration,
    };
    let join = |v: &[usize]| v.iter().map(usize::to_string).collect::<Vec<_>>().join(",");
    let mut manifest = manifest
        .param("remove", join(&a.remove))
        .param("core_sizes", join(&a.core_sizes))
        .with_fabric(FabricFile::from(&cfg));
    if let Some(count) = a.sample {
        manifest = manifest.param("sample", count).param("seed", a.seed);
    }

    let result = parallel_sweep(&net, &spec, &cfg)?;
    emit_csv(&a.csv, &result.cells)?;
    write_json(&sidecar(&a.csv), &manifest)?;
    if let Some(json) = &a.json {
        write_json(json, &SweepFile::new(manifest, &result))?;
    }
    out.write_all(render_recommendation(&recommend(&result.cells)).as_bytes())?;
    Ok(0)
}

/// `<csv>.manifest.json` next to the CSV.
pub fn sidecar(csv: &Path) -> PathBuf {
    let mut name = csv.as_os_str().to_owned();
    name.push(".manifest.json");
    PathBuf::from(name)
}

#[derive(Serialize)]
struct ReportFile {
    manifest: RunManifest,
    configurations: Vec<ReportRow>,
}

#[derive(Serialize)]
struct ReportRow {
    core_size: usize,
    num_cores: usize,
    num_r1: usize,
    depth: usize,
    routing_row_bits: usize,
    bits_per_neuron: usize,
    hardware_neurons: usize,
    total_bits: usize,
    extra_neurons: usize,
    programmable: usize,
    unplaceable: usize,
    pareto: bool,
}

fn report(a: &ReportArgs, out: &mut impl Write) -> Result<i32> {
    let mut manifest = RunManifest::new("report");
    manifest.add_input(&a.network)?;
    if let Some(f) = &a.fabric {
        manifest.add_input(f)?;
    }
    let (net, _) = load_network(&a.network)?;
    let template = load_fabric(a.fabric.as_deref())?;
    let mut entries = Vec::new();
    for &size in &a.core_sizes {
        let cfg = template.with_core_size(size);
        cfg.validate()
            .with_context(|| format!("core size {size}"))?;
        entries.push((compile(&net, &cfg)?.placement, cfg));
    }
    let chip = chip_spec_report(&entries)?;
    out.write_all(chip.render_table().as_bytes())?;
    if let Some(path) = &a.json {
        let sizes: Vec<String> = a.core_sizes.iter().map(usize::to_string).collect();
        let manifest = manifest
            .param("core_sizes", sizes.join(","))
            .with_fabric(FabricFile::from(&template));
        let configurations = chip
            .rows
            .iter()
            .map(|r| ReportRow {
                core_size: r.core_size,
                num_cores: r.num_cores,
                num_r1: r.num_r1,
                depth: r.depth.depth(),
                routing_row_bits: r.routing_row_bits,
                bits_per_neuron: r.bits_per_neuron,
                hardware_neurons: r.hardware_neurons,
                total_bits: r.total_bits,
                extra_neurons: r.extra_neurons,
                programmable: r.programmable,
                unplaceable: r.unplaceable,
                pareto: r.pareto,
            })
            .collect();
        write_json(
            path,
            &ReportFile {
                manifest,
                configurations,
            },
        )?;
    }
    Ok(0)
}
