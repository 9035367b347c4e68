use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use eapprox::cf::cf_approximates_checked;
use eapprox::config::RunConfig;
use eapprox::enumerate::{enumerate_direct, order_stream, ApproximateStream, Mode, StreamOrdering};
use eapprox::experiments::{cf_horizon, centred_box, run_suite, SUITES};
use eapprox::flow::{birkhoff_average, correspondence, default_grid_step, visit_times};
use eapprox::io::{packets_csv, plot_csv, series_csv, stream_csv, visits_csv, Document};
use eapprox::measure::{ball_volume, c_constant, jt_volume, predicted_count, zeta};
use eapprox::packet::stream_packets;
use eapprox::returns::{build_return_series, w_sequence, Constraint, Visit};
use eapprox::{Error, Precision, Result};

/// Directory used for output files when `--out` is absent.
const OUT_DIR_ENV: &str = "EAPPROX_OUT_DIR";

#[derive(Parser)]
#[command(name = "eapprox", version, about = "Enumerate and analyse multiplicative epsilon-approximates")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Stream of approximates as CSV (p, q, error, height)
    Enumerate(Common),
    /// Data packets of a stream
    Packets(Common),
    /// Cross-section visits or Birkhoff averages
    Flow(FlowArgs),
    /// Return-time series and shifted sequences (k = r = 1)
    Returns(ReturnsArgs),
    /// Run a verification suite
    Verify(VerifyArgs),
    /// Closed-form constants for a decomposition
    Constants(Common),
}

#[derive(Clone, Copy, ValueEnum, PartialEq, Eq)]
enum Format {
    Csv,
    Json,
}

#[derive(Args, Clone)]
struct Common {
    /// Flat key = value file; flags override it
    #[arg(long)]
    config: Option<PathBuf>,
    /// Row block sizes, e.g. 1,1
    #[arg(long)]
    m: Option<String>,
    /// Column block sizes
    #[arg(long)]
    n: Option<String>,
    /// One norm for all blocks or one per block (sup, euclidean, taxicab)
    #[arg(long)]
    norms: Option<String>,
    #[arg(long)]
    eps: Option<String>,
    /// One value or one per row block
    #[arg(long)]
    eta: Option<String>,
    /// Shape index (1-based)
    #[arg(long)]
    j: Option<String>,
    /// Congruence moduli, e.g. 2,3
    #[arg(long)]
    moduli: Option<String>,
    /// Explicit entries, row-major; floats or a/b rationals
    #[arg(long)]
    theta: Option<String>,
    #[arg(long = "theta-seed")]
    theta_seed: Option<String>,
    /// standard, dd or rational:BITS
    #[arg(long)]
    precision: Option<String>,
    #[arg(long = "T")]
    t: Option<String>,
    /// epsilon or epsilon-star
    #[arg(long)]
    mode: Option<String>,
    /// Divisor of gcd(p, q) in epsilon-star mode
    #[arg(long)]
    s: Option<String>,
    /// increasing-q or decreasing-error
    #[arg(long)]
    ordering: Option<String>,
    #[arg(long)]
    workers: Option<String>,
    #[arg(long)]
    seed: Option<String>,
    #[arg(long, value_enum, default_value = "csv")]
    format: Format,
    /// Output directory; defaults to $EAPPROX_OUT_DIR, else stdout
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum, PartialEq, Eq)]
enum FlowAction {
    Visits,
    Birkhoff,
}

#[derive(Args)]
struct FlowArgs {
    #[arg(value_enum, default_value = "visits")]
    action: FlowAction,
    /// Half-width R of [-R, R]^d, or lo:hi,lo:hi,...
    #[arg(long = "W")]
    w: Option<String>,
    #[arg(long = "grid-step")]
    grid_step: Option<String>,
    #[arg(long = "T-list")]
    t_list: Option<String>,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct ReturnsArgs {
    /// e.g. "error=0:0.2;residue=2:*,1;beta=0:0.5;signs=+"
    #[arg(long)]
    constraint: Option<String>,
    #[arg(long)]
    shift: Option<String>,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct VerifyArgs {
    /// Suite name
    experiment: String,
    #[arg(long = "T-list")]
    t_list: Option<String>,
    #[arg(long = "theta-seeds")]
    theta_seeds: Option<String>,
    #[arg(long = "W")]
    w: Option<String>,
    #[arg(long = "flow-time")]
    flow_time: Option<String>,
    #[command(flatten)]
    common: Common,
}

impl Common {
    fn to_config(&self, extra: &[(&str, &Option<String>)]) -> Result<RunConfig> {
        let mut cfg = match &self.config {
            Some(path) => RunConfig::parse(&std::fs::read_to_string(path)?)?,
            None => RunConfig::new(),
        };
        let flags = [
            ("m", &self.m),
            ("n", &self.n),
            ("norms", &self.norms),
            ("eps", &self.eps),
            ("eta", &self.eta),
            ("j", &self.j),
            ("moduli", &self.moduli),
            ("theta", &self.theta),
            ("theta_seed", &self.theta_seed),
            ("precision", &self.precision),
            ("T", &self.t),
            ("mode", &self.mode),
            ("s", &self.s),
            ("ordering", &self.ordering),
            ("workers", &self.workers),
            ("seed", &self.seed),
        ];
        for (k, v) in flags.iter().chain(extra) {
            if let Some(v) = v {
                cfg.set(k, v.clone())?;
            }
        }
        Ok(cfg)
    }
}

/// Seed recorded in outputs: the target seed when one was given.
fn recorded_seed(cfg: &RunConfig) -> Result<u64> {
    match cfg.parsed("theta_seed")? {
        Some(s) => Ok(s),
        None => cfg.seed(),
    }
}

struct Sink {
    dir: Option<PathBuf>,
}

impl Sink {
    fn new(out: &Option<PathBuf>) -> Self {
        let dir = out
            .clone()
            .or_else(|| std::env::var_os(OUT_DIR_ENV).map(PathBuf::from));
        Sink { dir }
    }

    /// Writes `name` into the output directory, or prints it.
    fn emit(&self, name: &str, text: &str) -> Result<()> {
        match &self.dir {
            Some(dir) => {
                std::fs::create_dir_all(dir)?;
                std::fs::write(dir.join(name), text)?;
                Ok(())
            }
            None => match std::io::stdout().lock().write_all(text.as_bytes()) {
                Err(e) if e.kind() == std::io::ErrorKind::BrokenPipe => Ok(()),
                other => Ok(other?),
            },
        }
    }

    /// CSV plus a JSON sidecar with the config and seed; only the CSV goes
    /// to stdout.
    fn emit_csv(&self, stem: &str, csv: &str, cfg: &RunConfig, rows: usize) -> Result<()> {
        self.emit(&format!("{stem}.csv"), csv)?;
        if self.dir.is_some() {
            let doc = Document::new(
                "sidecar-v1",
                cfg.hash(),
                recorded_seed(cfg)?,
                json!({ "table": format!("{stem}.csv"), "rows": rows, "config": cfg.entries() }),
            );
            self.emit(&format!("{stem}.json"), &doc.to_json()?)?;
        }
        Ok(())
    }

    fn emit_json(&self, stem: &str, schema: &'static str, cfg: &RunConfig, body: Value) -> Result<()> {
        let doc = Document::new(schema, cfg.hash(), recorded_seed(cfg)?, body);
        self.emit(&format!("{stem}.json"), &doc.to_json()?)
    }
}

fn stream_for(cfg: &RunConfig) -> Result<ApproximateStream> {
    let target = cfg.target()?;
    let setup = cfg.setup()?;
    let ecfg = cfg.enum_config()?;
    let stream = enumerate_direct(&target, &setup, &ecfg)?;
    Ok(order_stream(stream, ecfg.ordering, setup.params.shape_index, setup.dec.k()))
}

fn cmd_enumerate(c: &Common) -> Result<bool> {
    let cfg = c.to_config(&[])?;
    let setup = cfg.setup()?;
    let stream = stream_for(&cfg)?;
    let sink = Sink::new(&c.out);
    match c.format {
        Format::Csv => sink.emit_csv("stream", &stream_csv(&stream, &setup.dec), &cfg, stream.len())?,
        Format::Json => sink.emit_json(
            "stream",
            "stream-v1",
            &cfg,
            json!({ "config": cfg.entries(), "members": stream.members, "degenerate": stream.degenerate }),
        )?,
    }
    Ok(true)
}

fn cmd_packets(c: &Common) -> Result<bool> {
    let cfg = c.to_config(&[])?;
    let setup = cfg.setup()?;
    let target = cfg.target()?;
    let stream = stream_for(&cfg)?;
    let (packets, skipped) = stream_packets(&target, &stream.members, &setup)?;
    let sink = Sink::new(&c.out);
    match c.format {
        Format::Csv => sink.emit_csv("packets", &packets_csv(&packets, &setup), &cfg, packets.len())?,
        Format::Json => {
            let items: Vec<Value> = packets
                .iter()
                .map(|(i, p)| {
                    let a = &stream.members[*i].approx;
                    json!({ "member": i, "p": a.p, "q": a.q, "packet": p })
                })
                .collect();
            sink.emit_json("packets", "packet-v1", &cfg, json!({ "packets": items, "skipped": skipped }))?
        }
    }
    Ok(true)
}

fn parse_box(text: &str, d: usize) -> Result<Vec<(f64, f64)>> {
    let bad = |e: std::num::ParseFloatError| Error::Config(format!("bad W `{text}`: {e}"));
    if !text.contains(':') {
        return Ok(centred_box(text.trim().parse().map_err(bad)?, d));
    }
    let w = text
        .split(',')
        .map(|iv| {
            let (lo, hi) = iv
                .split_once(':')
                .ok_or_else(|| Error::Config(format!("bad interval `{iv}`")))?;
            Ok((lo.trim().parse().map_err(bad)?, hi.trim().parse().map_err(bad)?))
        })
        .collect::<Result<Vec<_>>>()?;
    if w.len() != d {
        return Err(Error::DimensionMismatch { expected: d, got: w.len() });
    }
    Ok(w)
}

fn cmd_flow(a: &FlowArgs) -> Result<bool> {
    let cfg = a.common.to_config(&[("W", &a.w), ("grid_step", &a.grid_step), ("T_list", &a.t_list)])?;
    let setup = cfg.setup()?;
    let sink = Sink::new(&a.common.out);
    match a.action {
        FlowAction::Visits => {
            let stream = stream_for(&cfg)?;
            let records = visit_times(&stream.members, &setup)?;
            match a.common.format {
                Format::Csv => sink.emit_csv("visits", &visits_csv(&records, &setup.dec), &cfg, records.len())?,
                Format::Json => {
                    let c = correspondence(&records, &setup, cfg.t()?);
                    sink.emit_json("visits", "visits-v1", &cfg, json!({ "records": records, "correspondence": c }))?
                }
            }
        }
        FlowAction::Birkhoff => {
            let dec = &setup.dec;
            let target = cfg.target()?;
            let w = parse_box(cfg.get("W").unwrap_or("3"), dec.d())?;
            let t_list = match cfg.list::<f64>("T_list")? {
                Some(v) => v,
                None => vec![cfg.t()?],
            };
            let seed = cfg.seed()?;
            let averages = t_list
                .iter()
                .map(|&t| {
                    let step = match cfg.parsed("grid_step")? {
                        Some(s) => s,
                        None => default_grid_step(t, dec, 1000),
                    };
                    birkhoff_average(&target, &w, dec, t, step, seed)
                })
                .collect::<Result<Vec<_>>>()?;
            match a.common.format {
                Format::Csv => {
                    let points: Vec<(String, f64, f64)> = averages
                        .iter()
                        .map(|b| ("birkhoff".to_string(), b.t, b.average))
                        .collect();
                    sink.emit_csv("birkhoff", &plot_csv(&points), &cfg, points.len())?
                }
                Format::Json => sink.emit_json(
                    "birkhoff",
                    "birkhoff-v1",
                    &cfg,
                    json!({ "W": w, "min_nodes": 1000, "averages": averages }),
                )?,
            }
        }
    }
    Ok(true)
}

fn cmd_returns(a: &ReturnsArgs) -> Result<bool> {
    let cfg = a.common.to_config(&[("constraint", &a.constraint), ("shift", &a.shift)])?;
    let setup = cfg.setup()?;
    let target = cfg.target()?;
    let constraint: Constraint = cfg.get("constraint").unwrap_or("all").parse()?;
    let shift: usize = cfg.parsed_or("shift", 0)?;
    let visits: Vec<Visit> = match target.precision() {
        Precision::Rational { bits } if setup.dec.d() == 2 => {
            let t = cfg.parsed_or("T", cf_horizon(bits))?;
            let mode = cfg.parsed_or("mode", Mode::Epsilon)?;
            cf_approximates_checked(&target, &setup, t, mode, cfg.parsed_or("s", 1)?)?
                .iter()
                .map(|p| Visit::from_cf(p, &setup.params.congruence_moduli))
                .collect()
        }
        _ => {
            let mut ecfg = cfg.enum_config()?;
            ecfg.ordering = StreamOrdering::DecreasingErrorBlock;
            let stream = enumerate_direct(&target, &setup, &ecfg)?;
            let stream = order_stream(stream, ecfg.ordering, setup.params.shape_index, setup.dec.k());
            let (packets, _) = stream_packets(&target, &stream.members, &setup)?;
            packets
                .iter()
                .map(|(i, p)| Visit::from_packet(&stream.members[*i], p))
                .collect()
        }
    };
    let series = build_return_series(visits, &setup, &constraint)?;
    for i in &series.ties {
        eprintln!("warning: equal return times at positions {i} and {}", i + 1);
    }
    let sink = Sink::new(&a.common.out);
    match a.common.format {
        Format::Csv => sink.emit_csv("series", &series_csv(&series, shift), &cfg, series.visits.len())?,
        Format::Json => {
            let seq = w_sequence(&series, shift);
            sink.emit_json(
                "series",
                "series-v1",
                &cfg,
                json!({
                    "constraint": constraint,
                    "shift": shift,
                    "constrained": series.len(),
                    "ties": series.ties,
                    "gaps": series.gaps,
                    "sequence": seq,
                }),
            )?
        }
    }
    Ok(true)
}

fn cmd_verify(a: &VerifyArgs) -> Result<bool> {
    let cfg = a.common.to_config(&[
        ("T_list", &a.t_list),
        ("theta_seeds", &a.theta_seeds),
        ("W", &a.w),
        ("flow_time", &a.flow_time),
    ])?;
    if !SUITES.contains(&a.experiment.as_str()) {
        return Err(Error::UnknownExperiment(format!(
            "{} (known: {})",
            a.experiment,
            SUITES.join(", ")
        )));
    }
    let suite = run_suite(&a.experiment, &cfg)?;
    let passed = suite.passed();
    let sink = Sink::new(&a.common.out);
    sink.emit_json(
        &format!("report-{}", a.experiment),
        "report-v1",
        &cfg,
        json!({ "experiment": suite.experiment, "passed": passed, "reports": suite.reports }),
    )?;
    Ok(passed)
}

fn cmd_constants(c: &Common) -> Result<bool> {
    let cfg = c.to_config(&[])?;
    let setup = cfg.setup()?;
    let dec = &setup.dec;
    let rank = dec.flow_rank();
    let body = json!({
        "m": dec.m_parts(),
        "n": dec.n_parts(),
        "c_constant": c_constant(dec.n_parts(), dec.k()).to_string(),
        "jt_volume_at_T1": jt_volume(1.0, dec),
        "ball_volume": ball_volume(dec, &setup.norms),
        "zeta_d": zeta(dec.d() as u32),
        "flow_rank": rank,
        "prediction_epsilon": predicted_count(&setup, Mode::Epsilon, 1)?,
        "prediction_epsilon_star": predicted_count(&setup, Mode::EpsilonStar, cfg.parsed_or("s", 1)?)?,
    });
    Sink::new(&c.out).emit_json("constants", "constants-v1", &cfg, body)?;
    Ok(true)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    let result = match &cli.command {
        Command::Enumerate(c) => cmd_enumerate(c),
        Command::Packets(c) => cmd_packets(c),
        Command::Flow(a) => cmd_flow(a),
        Command::Returns(a) => cmd_returns(a),
        Command::Verify(a) => cmd_verify(a),
        Command::Constants(c) => cmd_constants(c),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
