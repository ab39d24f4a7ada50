use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use gos_core::analysis::{
    palette_layout, popularity_matrix, render_palette_svg, PaletteLayout, PaletteOptions,
};
use gos_core::annotation::{
    agreement_matrix, build_prior_field, import_annotations, AnnotationSet, SemanticGroup,
    DEFAULT_EPSILON,
};
use gos_core::graph::OpinionGraph;
use gos_core::inference::{
    infer, name_groups, read_partition_csv, write_partition_csv, InferenceConfig,
};
use gos_core::metrics::nmi;
use gos_core::simulator::{posting_rate, read_planted_csv, simulate, PlantedModel};
use serde_json::{json, Value};

/// Graph-based open-ended survey pipeline.
#[derive(Parser)]
#[command(name = "gos", version)]
struct Cli {
    /// Print a JSON summary instead of human-readable text.
    #[arg(long, global = true)]
    json: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the HTTP service.
    Serve(ServeArgs),
    /// Generate a survey graph from a planted-group model (TOML).
    Simulate(SimulateArgs),
    /// Infer opinion and respondent groups.
    Cluster(ClusterArgs),
    /// Compute an analysis document from a graph and a partition.
    Analyze(AnalyzeArgs),
    /// Draw a palette layout as a static SVG.
    RenderPalette(RenderArgs),
    /// Check every structural invariant of a graph document.
    Validate(ValidateArgs),
    /// Score a partition against planted labels (NMI).
    Compare(CompareArgs),
}

#[derive(Args)]
struct ServeArgs {
    /// TOML config file; GOS_PORT, GOS_DATA_DIR and GOS_SESSION_TTL_SECS override it.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    port: Option<u16>,
    #[arg(long)]
    data_dir: Option<PathBuf>,
    /// Directory of static files (e.g. the web demo) to serve.
    #[arg(long)]
    static_dir: Option<PathBuf>,
}

#[derive(Args)]
struct SimulateArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Also write the planted groups as CSV.
    #[arg(long)]
    labels_out: Option<PathBuf>,
    /// Overrides `rng_seed` from the config.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct ClusterArgs {
    #[arg(long)]
    graph: PathBuf,
    /// Annotation CSV (`opinion_id,annotator_id,group_code`) used as prior.
    #[arg(long)]
    annotations: Option<PathBuf>,
    #[arg(long, default_value_t = DEFAULT_EPSILON)]
    epsilon: f64,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = InferenceConfig::default().sweeps)]
    sweeps: usize,
    #[arg(long, default_value_t = InferenceConfig::default().restarts)]
    restarts: usize,
    #[arg(long, default_value_t = InferenceConfig::default().beta)]
    beta: f64,
    #[arg(long)]
    label_space: Option<usize>,
    /// Worker threads for independent restarts (default: all cores).
    #[arg(long)]
    threads: Option<usize>,
    /// Write the inference report (score traces) as JSON.
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Analysis {
    Popularity,
    Palette,
    Agreement,
}

#[derive(Clone, Copy, PartialEq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Args)]
struct AnalyzeArgs {
    kind: Analysis,
    #[arg(long)]
    graph: PathBuf,
    /// Partition CSV; not needed for `agreement`.
    #[arg(long)]
    partition: Option<PathBuf>,
    /// Annotation CSV, used for group names and required for `agreement`.
    #[arg(long)]
    annotations: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, value_enum, default_value = "json")]
    format: Format,
    /// Popularity: append zero rows up to this many opinion groups.
    #[arg(long)]
    pad_to_rows: Option<usize>,
    /// Palette: opinion group indices to leave out.
    #[arg(long, value_delimiter = ',')]
    exclude: Vec<usize>,
    /// Agreement: the two annotators to compare (default: first two seen).
    #[arg(long, num_args = 2)]
    annotators: Option<Vec<String>>,
}

#[derive(Args)]
struct RenderArgs {
    #[arg(long)]
    layout: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 800.0)]
    width: f64,
    #[arg(long, default_value_t = 300.0)]
    height: f64,
}

#[derive(Args)]
struct ValidateArgs {
    #[arg(long)]
    graph: PathBuf,
}

#[derive(Args)]
struct CompareArgs {
    #[arg(long)]
    graph: PathBuf,
    #[arg(long)]
    partition: PathBuf,
    /// Planted labels CSV written by `simulate --labels-out`.
    #[arg(long)]
    planted: PathBuf,
}

/// A failure that should exit with status 1 (bad input data), as opposed
/// to usage errors, which clap reports with status 2.
struct Outcome {
    summary: Value,
    text: String,
    ok: bool,
}

fn ok(summary: Value, text: impl Into<String>) -> Outcome {
    Outcome {
        summary,
        text: text.into(),
        ok: true,
    }
}

fn read_graph(path: &Path) -> Result<OpinionGraph> {
    let text =
        std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    OpinionGraph::from_json(&text).with_context(|| format!("loading {}", path.display()))
}

fn read_annotations(path: &Path, graph: &OpinionGraph) -> Result<(AnnotationSet, Vec<String>)> {
    let file = File::open(path).with_context(|| format!("reading {}", path.display()))?;
    let imp = import_annotations(BufReader::new(file), Some(graph))?;
    let mut notes = imp.warnings;
    for r in &imp.rejected {
        notes.push(format!("line {} rejected: {}", r.line, r.reason));
    }
    Ok((imp.set, notes))
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    Ok(BufWriter::new(
        File::create(path).with_context(|| format!("creating {}", path.display()))?,
    ))
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    let mut w = create(path)?;
    w.write_all(text.as_bytes())?;
    w.flush()?;
    Ok(())
}

fn cmd_simulate(args: &SimulateArgs) -> Result<Outcome> {
    let text = std::fs::read_to_string(&args.config)
        .with_context(|| format!("reading {}", args.config.display()))?;
    let mut model: PlantedModel = toml::from_str(&text).context("parsing model config")?;
    if let Some(seed) = args.seed {
        model.rng_seed = seed;
    }
    let sim = simulate(&model)?;
    write_text(&args.out, &sim.graph.to_json())?;
    if let Some(path) = &args.labels_out {
        let mut w = create(path)?;
        sim.planted.write_csv(&sim.graph, &mut w)?;
        w.flush()?;
    }
    let rate = posting_rate(&sim.graph);
    let text = format!(
        "{} opinions, {} respondents, {} edges, posting rate {:.3}{}",
        sim.graph.num_opinions(),
        sim.graph.num_respondents(),
        sim.graph.num_edges(),
        rate,
        sim.report
            .warnings
            .iter()
            .map(|w| format!("\nwarning: {w}"))
            .collect::<String>()
    );
    Ok(ok(
        json!({
            "opinions": sim.graph.num_opinions(),
            "respondents": sim.graph.num_respondents(),
            "edges": sim.graph.num_edges(),
            "posting_rate": rate,
            "report": sim.report,
        }),
        text,
    ))
}

fn cmd_cluster(args: &ClusterArgs) -> Result<Outcome> {
    if let Some(t) = args.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(t.max(1))
            .build_global()
            .context("configuring threads")?;
    }
    let graph = read_graph(&args.graph)?;
    let (annotations, notes) = match &args.annotations {
        Some(p) => read_annotations(p, &graph)?,
        None => (AnnotationSet::new(), Vec::new()),
    };
    let prior = if annotations.is_empty() {
        None
    } else {
        Some(build_prior_field(&annotations, &graph, args.epsilon)?)
    };
    let config = InferenceConfig {
        sweeps: args.sweeps,
        restarts: args.restarts,
        rng_seed: args.seed,
        beta: args.beta,
        label_space: args.label_space,
        ..InferenceConfig::default()
    };
    let result = infer(&graph.bipartite(), prior.as_ref(), &config)?;
    let names = name_groups(&graph, &result.partition, &annotations);
    let mut w = create(&args.out)?;
    write_partition_csv(&graph, &result.partition, &names, &mut w)?;
    w.flush()?;
    let report = result.report(&config);
    if let Some(path) = &args.report {
        write_text(path, &serde_json::to_string_pretty(&report)?)?;
    }
    let mut text = format!(
        "{} groups, score {:.3} (best restart {})",
        report.num_groups, report.score, report.best_restart
    );
    for n in &notes {
        text.push_str(&format!("\nannotations: {n}"));
    }
    Ok(ok(
        json!({
            "num_groups": report.num_groups,
            "score": report.score,
            "best_restart": report.best_restart,
            "label_space": report.label_space,
            "annotation_notes": notes,
        }),
        text,
    ))
}

fn cmd_analyze(args: &AnalyzeArgs) -> Result<Outcome> {
    let graph = read_graph(&args.graph)?;
    let annotations = match &args.annotations {
        Some(p) => read_annotations(p, &graph)?.0,
        None => AnnotationSet::new(),
    };
    if let Analysis::Agreement = args.kind {
        if args.annotations.is_none() {
            bail!("agreement needs --annotations");
        }
        let known = annotations.annotators();
        let (a, b) = match &args.annotators {
            Some(v) => (v[0].clone(), v[1].clone()),
            None if known.len() >= 2 => (known[0].clone(), known[1].clone()),
            None => bail!("agreement needs two annotators; found {}", known.len()),
        };
        let m = agreement_matrix(&annotations, &a, &b)?;
        let mut w = create(&args.out)?;
        match args.format {
            Format::Json => {
                let doc = json!({
                    "annotators": [a, b],
                    "groups": SemanticGroup::ALL.iter().map(|g| g.code()).collect::<Vec<_>>(),
                    "matrix": m,
                });
                serde_json::to_writer_pretty(&mut w, &doc)?;
            }
            Format::Csv => {
                let mut c = csv::Writer::from_writer(&mut w);
                let mut header = vec![format!("{a}\\{b}")];
                header.extend(SemanticGroup::ALL.iter().map(|g| g.code().to_string()));
                c.write_record(&header)?;
                for (g, row) in SemanticGroup::ALL.iter().zip(m.iter()) {
                    let mut rec = vec![g.code().to_string()];
                    rec.extend(row.iter().map(|x| x.to_string()));
                    c.write_record(&rec)?;
                }
                c.flush()?;
            }
        }
        w.flush()?;
        let agreed: u64 = (0..10).map(|i| m[i][i]).sum();
        let total: u64 = m.iter().flatten().sum();
        return Ok(ok(
            json!({ "annotators": [a, b], "agreed": agreed, "compared": total }),
            format!("{a} and {b} agree on {agreed} of {total} shared opinions"),
        ));
    }

    let Some(partition_path) = &args.partition else {
        bail!("--partition is required for this analysis");
    };
    let file = File::open(partition_path)
        .with_context(|| format!("reading {}", partition_path.display()))?;
    let pf = read_partition_csv(&graph, BufReader::new(file))?;
    let names = if annotations.is_empty() {
        pf.names
    } else {
        name_groups(&graph, &pf.partition, &annotations)
    };
    let mut w = create(&args.out)?;
    let summary = match args.kind {
        Analysis::Popularity => {
            let m = popularity_matrix(&graph, &pf.partition, &names, args.pad_to_rows)?;
            match args.format {
                Format::Json => serde_json::to_writer_pretty(&mut w, &m)?,
                Format::Csv => m.write_csv(&mut w)?,
            }
            ok(
                json!({ "rows": m.row_names.len(), "columns": m.col_names.len() }),
                format!(
                    "popularity matrix: {} opinion groups x {} respondent groups",
                    m.row_names.len(),
                    m.col_names.len()
                ),
            )
        }
        Analysis::Palette => {
            let layout = palette_layout(
                &graph,
                &pf.partition,
                &names,
                &PaletteOptions {
                    exclude_groups: args.exclude.clone(),
                },
            )?;
            match args.format {
                Format::Json => w.write_all(layout.to_json().as_bytes())?,
                Format::Csv => layout.write_csv(&mut w)?,
            }
            ok(
                json!({ "respondents": layout.order.len(), "objective": layout.objective }),
                format!(
                    "palette: {} respondents, objective {:.4}",
                    layout.order.len(),
                    layout.objective
                ),
            )
        }
        Analysis::Agreement => unreachable!(),
    };
    w.flush()?;
    Ok(summary)
}

fn cmd_render(args: &RenderArgs) -> Result<Outcome> {
    let text = std::fs::read_to_string(&args.layout)
        .with_context(|| format!("reading {}", args.layout.display()))?;
    let layout = PaletteLayout::from_json(&text)?;
    write_text(&args.out, &render_palette_svg(&layout, args.width, args.height))?;
    Ok(ok(
        json!({ "columns": layout.columns.len() }),
        format!("wrote {}", args.out.display()),
    ))
}

fn cmd_validate(args: &ValidateArgs) -> Result<Outcome> {
    let text = std::fs::read_to_string(&args.graph)
        .with_context(|| format!("reading {}", args.graph.display()))?;
    Ok(match OpinionGraph::from_json(&text) {
        Ok(g) => ok(
            json!({
                "valid": true,
                "opinions": g.num_opinions(),
                "respondents": g.num_respondents(),
                "edges": g.num_edges(),
            }),
            format!(
                "valid: {} opinions, {} respondents, {} edges",
                g.num_opinions(),
                g.num_respondents(),
                g.num_edges()
            ),
        ),
        Err(e) => Outcome {
            summary: json!({ "valid": false, "error": e.to_string() }),
            text: format!("invalid: {e}"),
            ok: false,
        },
    })
}

fn cmd_compare(args: &CompareArgs) -> Result<Outcome> {
    let graph = read_graph(&args.graph)?;
    let pf = read_partition_csv(&graph, BufReader::new(File::open(&args.partition)?))?;
    let planted = read_planted_csv(&graph, BufReader::new(File::open(&args.planted)?))?;
    let score = nmi(pf.partition.labels(), &planted.vertex_labels());
    Ok(ok(json!({ "nmi": score }), format!("NMI {score:.4}")))
}

fn cmd_serve(args: &ServeArgs) -> Result<Outcome> {
    let mut config = gos_service::ServiceConfig::load(args.config.as_deref())?;
    if let Some(p) = args.port {
        config.port = p;
    }
    if let Some(d) = &args.data_dir {
        config.data_dir = d.clone();
    }
    if let Some(d) = &args.static_dir {
        config.static_dir = Some(d.clone());
    }
    tokio::runtime::Runtime::new()?.block_on(gos_service::serve(config))?;
    Ok(ok(json!({}), "stopped"))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    tracing_subscriber::fmt()
        .with_env_filter(
            tracing_subscriber::EnvFilter::try_from_default_env()
                .unwrap_or_else(|_| tracing_subscriber::EnvFilter::new("info")),
        )
        .with_writer(std::io::stderr)
        .init();
    let result = match &cli.command {
        Command::Serve(a) => cmd_serve(a),
        Command::Simulate(a) => cmd_simulate(a),
        Command::Cluster(a) => cmd_cluster(a),
        Command::Analyze(a) => cmd_analyze(a),
        Command::RenderPalette(a) => cmd_render(a),
        Command::Validate(a) => cmd_validate(a),
        Command::Compare(a) => cmd_compare(a),
    };
    match result {
        Ok(outcome) => {
            if cli.json {
                println!("{}", outcome.summary);
            } else {
                println!("{}", outcome.text);
            }
            if outcome.ok {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(e) => {
            if cli.json {
                println!("{}", json!({ "error": format!("{e:#}") }));
            } else {
                eprintln!("error: {e:#}");
            }
            ExitCode::from(1)
        }
    }
}
