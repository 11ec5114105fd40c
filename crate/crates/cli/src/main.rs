mod args;
mod plan;

use std::fmt::Display;
use std::fs;
use std::io::{self, Write};
use std::path::Path;
use std::process::ExitCode;
use std::sync::Arc;

use clap::Parser;
use missview_core::ingest::parse_table_with_warnings;
use missview_core::scene::BarScale;
use missview_core::stats::randomness_report_with;
use missview_core::{
    apply_plan, build_scene, render, write_table, ArcMode, Dataset, Error as CoreError, IngestConfig, InjectionPlan,
    Layout, MissingnessSummary, RandomnessReport, RenderStyle, SceneOptions, VariableKind,
};
use missview_server::{router, Catalog, CorsPolicy};

use args::{ArcsArg, BarScaleArg, Cli, Command, Format, IngestArgs, LayoutArg, RenderArgs, ServeArgs, StatsArgs, SynthArgs};

#[derive(Debug)]
enum Failure {
    /// Bad flags or plan: exit 1.
    Usage(String),
    /// Unreadable or unsuitable data: exit 2.
    Data(String),
}

fn usage(e: impl Display) -> Failure {
    Failure::Usage(e.to_string())
}

fn data(e: impl Display) -> Failure {
    Failure::Data(e.to_string())
}

fn core_failure(e: CoreError) -> Failure {
    match e {
        CoreError::InvalidPlan(_) => usage(e),
        _ => data(e),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let result = match cli.command {
        Command::Stats(a) => cmd_stats(a),
        Command::Render(a) => cmd_render(a),
        Command::Synth(a) => cmd_synth(a),
        Command::Serve(a) => cmd_serve(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Data(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}

fn ingest_config(args: &IngestArgs, input: &Path) -> Result<IngestConfig, Failure> {
    let mut cfg = IngestConfig::default();
    let is_tsv = input
        .extension()
        .and_then(|e| e.to_str())
        .is_some_and(|e| e.eq_ignore_ascii_case("tsv"));
    cfg.delimiter = match args.delimiter.as_deref() {
        None if is_tsv => '\t',
        None => ',',
        Some("tab" | "\\t") => '\t',
        Some(d) => {
            let mut chars = d.chars();
            match (chars.next(), chars.next()) {
                (Some(c), None) => c,
                _ => return Err(usage(format!("--delimiter must be one character or `tab`, got `{d}`"))),
            }
        }
    };
    if !args.missing_tokens.is_empty() {
        cfg.missing_tokens = args.missing_tokens.clone();
    }
    cfg.header = !args.no_header;
    cfg.anonymize = args.anonymize;
    cfg.drop_columns = args.drop_columns.clone();
    for entry in &args.kinds {
        let (name, kind) = entry
            .split_once('=')
            .ok_or_else(|| usage(format!("--kind expects COLUMN=KIND, got `{entry}`")))?;
        let kind: VariableKind = kind.trim().parse().map_err(usage)?;
        cfg.kind_overrides.insert(name.trim().to_owned(), kind);
    }
    cfg.validate().map_err(usage)?;
    Ok(cfg)
}

fn load(input: &Path, cfg: &IngestConfig) -> Result<Dataset, Failure> {
    let file = fs::File::open(input).map_err(|e| data(format!("cannot open {}: {e}", input.display())))?;
    let (ds, warnings) = parse_table_with_warnings(io::BufReader::new(file), cfg)
        .map_err(|e| data(format!("{}: {e}", input.display())))?;
    for w in warnings {
        eprintln!("warning: {}: {}", w.variable, w.message);
    }
    Ok(ds)
}

fn check_bins(bins: usize) -> Result<(), Failure> {
    if bins == 0 {
        return Err(usage("--bins must be at least 1"));
    }
    Ok(())
}

fn cmd_stats(a: StatsArgs) -> Result<(), Failure> {
    check_bins(a.bins)?;
    let cfg = ingest_config(&a.ingest, &a.input)?;
    let ds = load(&a.input, &cfg)?;
    let select = a
        .select
        .as_deref()
        .map(|name| ds.index_of(name).map_err(|_| data(format!("unknown variable `{name}` for --select"))))
        .transpose()?;
    let summary = MissingnessSummary::compute(&ds);
    let report = randomness_report_with(&ds, &summary, a.bins, select).map_err(core_failure)?;
    let text = match a.format {
        Format::Json => {
            let mut s = serde_json::to_string_pretty(&report).map_err(data)?;
            s.push('\n');
            s
        }
        Format::Table => stats_table(&ds, &report, a.top),
    };
    io::stdout().write_all(text.as_bytes()).map_err(data)
}

fn stats_table(ds: &Dataset, report: &RandomnessReport, top: usize) -> String {
    use std::fmt::Write as _;
    let width = report.variables.iter().map(|v| v.name.chars().count()).max().unwrap_or(0).max(8);
    let mut out = String::new();
    let _ = writeln!(out, "items: {}  variables: {}  missing cells: {}", ds.n_items(), ds.n_variables(), ds.missing_cell_count());
    let _ = writeln!(out);
    let _ = writeln!(out, "{:<width$}  {:<11}  {:>7}  {:>8}", "variable", "kind", "am", "recorded");
    for v in &report.variables {
        let _ = writeln!(out, "{:<width$}  {:<11}  {:>7.4}  {:>8}", v.name, v.kind.to_string(), v.am, v.n_recorded);
    }
    let pairs = report.pairs_by_deviation();
    if !pairs.is_empty() {
        let _ = writeln!(out);
        let _ = writeln!(out, "pairs by |jm - expected| (top {})", top.min(pairs.len()));
        let _ = writeln!(out, "{:<width$}  {:<width$}  {:>7}  {:>8}  {:>9}", "a", "b", "jm", "expected", "deviation");
        for p in pairs.into_iter().take(top) {
            let _ = writeln!(
                out,
                "{:<width$}  {:<width$}  {:>7.4}  {:>8.4}  {:>+9.4}",
                p.a, p.b, p.jm, p.expected_jm, p.deviation
            );
        }
    }
    if !report.cm.is_empty() {
        let _ = writeln!(out);
        let _ = writeln!(out, "conditional missingness (total variation)");
        let _ = writeln!(out, "{:<width$}  {:<width$}  {:>10}", "selected", "target", "divergence");
        for c in &report.cm {
            let value = c.divergence.map_or_else(|| "undefined".to_owned(), |d| format!("{d:.4}"));
            let _ = writeln!(out, "{:<width$}  {:<width$}  {:>10}", c.selected, c.target, value);
        }
    }
    out
}

fn cmd_render(a: RenderArgs) -> Result<(), Failure> {
    check_bins(a.bins)?;
    let layout = match a.layout {
        LayoutArg::Linear => Layout::Linear,
        LayoutArg::Radial => Layout::Radial,
        LayoutArg::Heatmap => Layout::Heatmap,
        LayoutArg::Pc => Layout::ParallelCoordinates,
    };
    if layout == Layout::Radial && a.select.is_none() {
        return Err(usage("the radial layout requires --select"));
    }
    let cfg = ingest_config(&a.ingest, &a.input)?;
    let style = match &a.style {
        Some(path) => RenderStyle::load(path).map_err(|e| usage(format!("style {}: {e}", path.display())))?,
        None => RenderStyle::default(),
    };
    let options = SceneOptions {
        bins: a.bins,
        arc_mode: match a.arcs {
            ArcsArg::Selected => ArcMode::Selected,
            ArcsArg::All => ArcMode::All,
        },
        attach_glyphs: a.attach_glyphs,
        bar_scale: match a.bar_scale {
            BarScaleArg::Peak => BarScale::Peak,
            BarScaleArg::Shared => BarScale::SharedCount,
        },
    };
    let ds = load(&a.input, &cfg)?;
    if let Some(name) = &a.select {
        ds.index_of(name).map_err(|_| data(format!("unknown variable `{name}` for --select")))?;
    }
    let summary = MissingnessSummary::compute(&ds);
    let scene = build_scene(&ds, &summary, layout, a.select.as_deref(), &options).map_err(core_failure)?;
    let svg = render(&scene, &style).map_err(core_failure)?;
    fs::write(&a.out, svg).map_err(|e| data(format!("cannot write {}: {e}", a.out.display())))?;
    eprintln!("wrote {}", a.out.display());
    Ok(())
}

fn same_file(a: &Path, b: &Path) -> bool {
    match (fs::canonicalize(a), fs::canonicalize(b)) {
        (Ok(a), Ok(b)) => a == b,
        _ => false,
    }
}

fn cmd_synth(a: SynthArgs) -> Result<(), Failure> {
    let mcar = a.mcar.as_deref().map(plan::parse_mcar).transpose().map_err(usage)?;
    let cm = a.cm.as_deref().map(plan::parse_cm).transpose().map_err(usage)?;
    let file_plan = match &a.plan {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|e| usage(format!("cannot read plan {}: {e}", path.display())))?;
            Some(InjectionPlan::from_json(&text).map_err(|e| usage(format!("plan {}: {e}", path.display())))?)
        }
        None => None,
    };
    for out in [Some(&a.out), a.manifest.as_ref()].into_iter().flatten() {
        if same_file(out, &a.input) {
            return Err(usage(format!("refusing to overwrite the input file {}", out.display())));
        }
    }
    let cfg = ingest_config(&a.ingest, &a.input)?;
    let ds = load(&a.input, &cfg)?;
    let plan = match file_plan {
        Some(mut plan) => {
            if let Some(seed) = a.seed {
                plan.seed = seed;
            }
            plan
        }
        None => plan::shorthand_plan(&ds, a.seed.unwrap_or(0), mcar.as_deref().unwrap_or_default(), cm).map_err(usage)?,
    };
    let (out, manifest) = apply_plan(&ds, &plan).map_err(core_failure)?;
    for record in &manifest.steps {
        for w in &record.warnings {
            eprintln!("warning: step {}: {w}", record.index);
        }
    }
    let file = fs::File::create(&a.out).map_err(|e| data(format!("cannot write {}: {e}", a.out.display())))?;
    write_table(&out, &cfg, io::BufWriter::new(file)).map_err(data)?;
    if let Some(path) = &a.manifest {
        let mut text = manifest.to_json().map_err(data)?;
        text.push('\n');
        fs::write(path, text).map_err(|e| data(format!("cannot write {}: {e}", path.display())))?;
    }
    eprintln!("removed {} cells; wrote {}", manifest.removed_count(), a.out.display());
    Ok(())
}

fn cmd_serve(a: ServeArgs) -> Result<(), Failure> {
    let mut cfg = IngestConfig::default();
    if !a.missing_tokens.is_empty() {
        cfg.missing_tokens = a.missing_tokens.clone();
    }
    cfg.validate().map_err(usage)?;
    let cors = if a.cors_origins.is_empty() {
        CorsPolicy::Permissive
    } else {
        CorsPolicy::Origins(a.cors_origins.clone())
    };
    let catalog = match &a.data {
        Some(dir) => Catalog::load_dir(dir, &cfg).map_err(data)?,
        None => Catalog::new(),
    };
    let app = router(Arc::new(catalog), &cors).map_err(usage)?;
    let _ = tracing_subscriber::fmt().with_writer(io::stderr).with_target(false).try_init();

    let runtime = tokio::runtime::Runtime::new().map_err(data)?;
    runtime.block_on(async {
        let listener = tokio::net::TcpListener::bind((a.host.as_str(), a.port))
            .await
            .map_err(|e| data(format!("cannot bind {}:{}: {e}", a.host, a.port)))?;
        let addr = listener.local_addr().map_err(data)?;
        eprintln!("listening on http://{addr}");
        missview_server::serve(listener, app).await.map_err(data)
    })
}
