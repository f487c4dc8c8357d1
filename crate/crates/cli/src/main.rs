//! `schemgen`: netlist to schematic, with each stage exposed as a subcommand.
//!
//! Exit codes: 0 success (correct layout), 1 incorrect or unroutable result,
//! 2 usage, input or configuration error, 3 backend error.

mod config;

use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use clap::{Args, Parser, Subcommand, ValueEnum};
use schemgen::agent::{run_pipeline, Backend, BackendKind, HttpBackend, MockBackend, PipelineError, PipelineOutcome};
use schemgen::eval::{check_correctness, format_table, summarize_trials, TrialRecord};
use schemgen::netlist::{parse_netlist, Circuit};
use schemgen::placement::{read_layout, write_layout, SchematicLayout};
use schemgen::render::{render_svg, RenderOptions};
use schemgen::substructure::example_library;
use schemgen::wiring::wire_layout;
use serde_json::json;

use config::{env_layer, load_config, CliConfig, Layer};

const EXIT_INCORRECT: u8 = 1;
const EXIT_USAGE: u8 = 2;
const EXIT_BACKEND: u8 = 3;

#[derive(Debug, Parser)]
#[command(
    name = "schemgen",
    version,
    about = "Analog schematic generation from SPICE netlists"
)]
struct Cli {
    /// Log level for diagnostics on stderr (error, warn, info, debug, trace).
    #[arg(long, global = true, default_value = "warn")]
    log: log::LevelFilter,
    #[command(subcommand)]
    cmd: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run the full pipeline and write layout.json, schematic.svg, report.json and transcripts.
    Gen {
        netlist: PathBuf,
        #[command(flatten)]
        run: RunFlags,
        /// Directory for all artifacts.
        #[arg(long, default_value = "out")]
        out_dir: PathBuf,
    },
    /// Evaluate a layout against a netlist; prints the report.
    Check { netlist: PathBuf, layout: PathBuf },
    /// Render a layout to SVG.
    Render {
        layout: PathBuf,
        #[arg(short, long)]
        output: Option<PathBuf>,
        #[arg(long, default_value_t = 10)]
        unit_px: u32,
        #[arg(long)]
        grid: bool,
        #[arg(long)]
        no_labels: bool,
    },
    /// Replace a layout's wires with freshly routed ones.
    Route {
        netlist: PathBuf,
        layout: PathBuf,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// List the bundled building-block examples.
    Examples,
    /// Repeated mock-backend runs summarised as one table row per circuit.
    Trials {
        #[arg(required = true)]
        netlists: Vec<PathBuf>,
        #[arg(long, default_value_t = 10)]
        trials: u64,
        #[command(flatten)]
        run: RunFlags,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum BackendChoice {
    Mock,
    Http,
}

#[derive(Debug, Args)]
struct RunFlags {
    /// TOML config file (keys: seed, backend.*, limits.*, history.window).
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, value_enum)]
    backend: Option<BackendChoice>,
    #[arg(long)]
    url: Option<String>,
    #[arg(long)]
    model: Option<String>,
    #[arg(long)]
    timeout_secs: Option<u64>,
    #[arg(long)]
    seed: Option<u64>,
    /// Placement loop budget (default 10).
    #[arg(long)]
    max_place_iter: Option<usize>,
    /// Wiring loop budget (default 20).
    #[arg(long)]
    max_wire_iter: Option<usize>,
    #[arg(long)]
    history_window: Option<usize>,
    /// Stop after deterministic placement and wiring.
    #[arg(long)]
    no_agent: bool,
}

impl RunFlags {
    fn resolve(&self) -> Result<CliConfig, Fail> {
        let flags = Layer {
            backend: self.backend.map(|b| match b {
                BackendChoice::Mock => "mock".to_string(),
                BackendChoice::Http => "http".to_string(),
            }),
            url: self.url.clone(),
            model: self.model.clone(),
            timeout_secs: self.timeout_secs,
            place_iter: self.max_place_iter,
            wire_iter: self.max_wire_iter,
            history_window: self.history_window,
            seed: self.seed,
        };
        let env = env_layer(|k| std::env::var(k).ok()).map_err(Fail::usage)?;
        let file = match &self.config {
            Some(p) => load_config(p).map_err(Fail::usage)?,
            None => Layer::default(),
        };
        let c = CliConfig::resolve(flags.over(env.over(file)), self.no_agent).map_err(Fail::usage)?;
        c.agent.validate().map_err(Fail::usage)?;
        Ok(c)
    }
}

/// Exit code plus the message for stderr.
#[derive(Debug)]
struct Fail {
    code: u8,
    message: String,
}

impl Fail {
    fn usage(e: impl std::fmt::Display) -> Self {
        Fail {
            code: EXIT_USAGE,
            message: e.to_string(),
        }
    }

    fn backend(e: impl std::fmt::Display) -> Self {
        Fail {
            code: EXIT_BACKEND,
            message: e.to_string(),
        }
    }
}

impl From<PipelineError> for Fail {
    fn from(e: PipelineError) -> Self {
        let code = match e {
            PipelineError::Placement(_) | PipelineError::Wiring(_) => EXIT_INCORRECT,
            PipelineError::Render(_) | PipelineError::Agent(_) => EXIT_USAGE,
        };
        Fail {
            code,
            message: e.to_string(),
        }
    }
}

fn read_text(path: &Path) -> Result<String, Fail> {
    std::fs::read_to_string(path).map_err(|e| Fail::usage(format!("cannot read {}: {e}", path.display())))
}

fn write_file(path: &Path, text: &str) -> Result<(), Fail> {
    std::fs::write(path, text).map_err(|e| Fail::usage(format!("cannot write {}: {e}", path.display())))
}

fn load_circuit(path: &Path) -> Result<Circuit, Fail> {
    parse_netlist(&read_text(path)?).map_err(|e| Fail::usage(format!("{}: {e}", path.display())))
}

fn load_layout(path: &Path) -> Result<SchematicLayout, Fail> {
    let bytes = std::fs::read(path).map_err(|e| Fail::usage(format!("cannot read {}: {e}", path.display())))?;
    let (l, warnings) = read_layout(&bytes).map_err(|e| Fail::usage(format!("{}: {e}", path.display())))?;
    for w in warnings {
        log::warn!("{}: {w}", path.display());
    }
    Ok(l)
}

/// Write to `output`, or stdout when absent.
fn emit(output: Option<&Path>, text: &str) -> Result<(), Fail> {
    match output {
        Some(p) => write_file(p, text),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes())
                .and_then(|_| out.flush())
                .map_err(|e| Fail::usage(format!("stdout: {e}")))
        }
    }
}

fn circuit_name(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "circuit".to_string())
}

fn make_backend(cfg: &CliConfig, seed: u64) -> Result<Box<dyn Backend>, Fail> {
    Ok(match &cfg.agent.backend {
        BackendKind::Mock => Box::new(MockBackend::seeded(seed)),
        BackendKind::Http { url, model } => {
            Box::new(HttpBackend::new(url, model, Duration::from_secs(cfg.agent.timeout_secs)).map_err(Fail::backend)?)
        }
    })
}

fn pipeline(name: &str, c: &Circuit, cfg: &CliConfig, seed: u64, out: Option<&Path>) -> Result<PipelineOutcome, Fail> {
    if cfg.no_agent {
        return Ok(run_pipeline(name, c, &cfg.agent, None, out)?);
    }
    let mut backend = make_backend(cfg, seed)?;
    Ok(run_pipeline(name, c, &cfg.agent, Some(backend.as_mut()), out)?)
}

fn outcome_code(o: &PipelineOutcome) -> u8 {
    if o.backend_failed() {
        EXIT_BACKEND
    } else if o.report.correct {
        0
    } else {
        EXIT_INCORRECT
    }
}

fn cmd_gen(netlist: &Path, run: &RunFlags, out_dir: &Path) -> Result<u8, Fail> {
    let cfg = run.resolve()?;
    let c = load_circuit(netlist)?;
    std::fs::create_dir_all(out_dir).map_err(|e| Fail::usage(format!("cannot create {}: {e}", out_dir.display())))?;
    let name = circuit_name(netlist);
    let o = pipeline(&name, &c, &cfg, cfg.agent.seed, Some(out_dir))?;
    let (place_iters, wire_iters) = o.iterations();
    let report = json!({
        "circuit": name,
        "config": cfg,
        "eval": o.report,
        "routing": o.routing,
        "placement_loop": o.placement.as_ref().map(|t| json!({"status": t.status, "iterations": place_iters, "best_iteration": t.best_iteration})),
        "wiring_loop": o.wiring.as_ref().map(|t| json!({"status": t.status, "iterations": wire_iters, "best_iteration": t.best_iteration})),
    });
    write_file(&out_dir.join("layout.json"), &write_layout(&o.layout))?;
    write_file(&out_dir.join("schematic.svg"), &o.svg)?;
    write_file(
        &out_dir.join("report.json"),
        &(serde_json::to_string_pretty(&report).expect("report serializes") + "\n"),
    )?;
    let code = outcome_code(&o);
    eprintln!(
        "{name}: correct={} composite={:.3} iterations={place_iters}/{wire_iters} ({})",
        o.report.correct,
        o.report.composite(),
        o.report.summary()
    );
    for t in [&o.placement, &o.wiring].into_iter().flatten() {
        if let Some(e) = &t.error {
            eprintln!("{} loop: {e}", t.phase.dir_name());
        }
    }
    Ok(code)
}

fn cmd_check(netlist: &Path, layout: &Path) -> Result<u8, Fail> {
    let c = load_circuit(netlist)?;
    let l = load_layout(layout)?;
    let r = check_correctness(&l, &c);
    emit(None, &(r.to_json() + "\n"))?;
    Ok(if r.correct { 0 } else { EXIT_INCORRECT })
}

fn cmd_render(layout: &Path, output: Option<&Path>, opts: RenderOptions) -> Result<u8, Fail> {
    let l = load_layout(layout)?;
    let svg = render_svg(&l, &opts).map_err(Fail::usage)?;
    emit(output, &svg)?;
    Ok(0)
}

fn cmd_route(netlist: &Path, layout: &Path, output: Option<&Path>) -> Result<u8, Fail> {
    let c = load_circuit(netlist)?;
    let l = load_layout(layout)?;
    let (wired, report) = wire_layout(&c, &l).map_err(|e| Fail {
        code: EXIT_INCORRECT,
        message: e.to_string(),
    })?;
    eprint!("{}", report.to_text());
    emit(output, &write_layout(&wired))?;
    Ok(if report.unroutable().is_empty() {
        0
    } else {
        EXIT_INCORRECT
    })
}

fn cmd_examples() -> Result<u8, Fail> {
    let lib = example_library().map_err(Fail::usage)?;
    let mut text = String::new();
    for a in &lib {
        text.push_str(&format!("{:<22} {}\n", a.kind.as_str(), a.kind.title()));
    }
    emit(None, &text)?;
    Ok(0)
}

fn cmd_trials(netlists: &[PathBuf], trials: u64, run: &RunFlags) -> Result<u8, Fail> {
    let cfg = run.resolve()?;
    if trials == 0 {
        return Err(Fail::usage("--trials must be at least 1"));
    }
    let mut rows = Vec::new();
    let mut any_backend = false;
    for path in netlists {
        let c = load_circuit(path)?;
        let name = circuit_name(path);
        let mut records = Vec::new();
        for t in 0..trials {
            let o = pipeline(&name, &c, &cfg, cfg.agent.seed.wrapping_add(t), None)?;
            let (place_iters, wire_iters) = o.iterations();
            any_backend |= o.backend_failed();
            records.push(TrialRecord {
                completed: !o.backend_failed(),
                report: o.report,
                place_iters,
                wire_iters,
            });
        }
        rows.push(summarize_trials(&name, &records));
    }
    emit(None, &format_table(&rows))?;
    Ok(if any_backend { EXIT_BACKEND } else { 0 })
}

fn run(cli: Cli) -> Result<u8, Fail> {
    match &cli.cmd {
        Command::Gen { netlist, run, out_dir } => cmd_gen(netlist, run, out_dir),
        Command::Check { netlist, layout } => cmd_check(netlist, layout),
        Command::Render {
            layout,
            output,
            unit_px,
            grid,
            no_labels,
        } => cmd_render(
            layout,
            output.as_deref(),
            RenderOptions {
                unit_px: *unit_px,
                show_grid: *grid,
                show_labels: !*no_labels,
                ..Default::default()
            },
        ),
        Command::Route {
            netlist,
            layout,
            output,
        } => cmd_route(netlist, layout, output.as_deref()),
        Command::Examples => cmd_examples(),
        Command::Trials { netlists, trials, run } => cmd_trials(netlists, *trials, run),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    env_logger::Builder::new().filter_level(cli.log).init();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
