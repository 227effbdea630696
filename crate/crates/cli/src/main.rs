use std::fs::File;
use std::io::{self, BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use mobilemap::bdgmap::{build_map_from_encoding, validate};
use mobilemap::fixtures::fixture;
use mobilemap::geodesy::GeodesicReport;
use mobilemap::mobile::enumerate_mobiles;
use mobilemap::rng::replica_stream;
use mobilemap::scalinglab::{abs_threshold, run_experiment, ExperimentConfig, EXPERIMENTS};
use mobilemap::{contour, sample_mobile, Error, Mobile, PlanarMap, SamplerMode};
use rand::Rng;
use serde_json::json;

#[derive(Parser, Debug)]
#[command(name = "mobilemap", version, about = "Random 2p-angulations through labelled mobiles")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Sample a labelled mobile and write it as JSON
    SampleMobile {
        #[command(flatten)]
        common: Common,
        /// Write the contour encoding instead of the mobile
        #[arg(long)]
        encoding: bool,
    },
    /// Build the 2p-angulation of a mobile
    BuildMap {
        #[command(flatten)]
        common: Common,
        /// Mobile JSON file; without it a mobile is sampled
        #[arg(long)]
        input: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = MapFormat::Json)]
        format: MapFormat,
    },
    /// Check the map of a mobile: counts, connectivity, bipartiteness, distances
    Validate {
        #[command(flatten)]
        common: Common,
        /// Mobile JSON file; without it a mobile is sampled
        #[arg(long)]
        input: Option<PathBuf>,
        /// Map file (JSON or binary) to check instead of rebuilding it
        #[arg(long)]
        map: Option<PathBuf>,
    },
    /// Per-vertex geodesic statistics as CSV
    Geodesics {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        thresholds: Thresholds,
        /// Mobile JSON file; without it a mobile is sampled
        #[arg(long)]
        input: Option<PathBuf>,
        /// Query vertices; defaults to every vertex
        #[arg(long, value_delimiter = ',')]
        vertices: Vec<u32>,
    },
    /// Run a Monte Carlo experiment and write its table as CSV
    Exp {
        /// One of: radius, two_point, ball_volume, uniqueness, multiplicity,
        /// confluence, reroot_invariance, occupation
        name: Option<String>,
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        thresholds: Thresholds,
        /// Replicas per size
        #[arg(long)]
        reps: Option<usize>,
    },
    /// Count (or list) all mobiles of a given size
    Enumerate {
        #[command(flatten)]
        common: Common,
        /// Print every mobile as one JSON line
        #[arg(long)]
        list: bool,
    },
    /// Write a named fixture as JSON
    Fixture {
        /// One of: hex-mobile, n1p2-a, n1p2-b, cycle4
        name: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args, Debug, Default)]
struct Common {
    /// Half the face degree (faces have degree 2p)
    #[arg(long)]
    p: Option<usize>,
    /// Number of faces; a comma-separated list for experiments
    #[arg(long, value_delimiter = ',')]
    n: Vec<usize>,
    /// Master seed (overrides MOBILEMAP_SEED and the config file)
    #[arg(long)]
    seed: Option<u64>,
    /// Sampler: exact-rooted or pointed (default depends on n)
    #[arg(long)]
    mode: Option<SamplerMode>,
    /// Output path, or - for standard output
    #[arg(long)]
    out: Option<PathBuf>,
    /// JSON configuration file; flags take precedence
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args, Debug, Default)]
struct Thresholds {
    /// Separation threshold, in units of n^{1/4}
    #[arg(long)]
    delta: Option<f64>,
    /// Triplet window, in units of n^{1/4}
    #[arg(long)]
    alpha: Option<f64>,
    /// Minimal geodesic length for confluence, in units of n^{1/4}
    #[arg(long)]
    chi: Option<f64>,
    /// Confluence prefix length, in units of n^{1/4}
    #[arg(long)]
    beta: Option<f64>,
    /// Query vertices (or ball centres) per map
    #[arg(long)]
    queries: Option<usize>,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum MapFormat {
    Json,
    Binary,
}

enum Failure {
    Usage(String),
    Invalid(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Usage(e.to_string())
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Usage(e.to_string())
    }
}

type Outcome = std::result::Result<(), Failure>;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Invalid(report)) => {
            eprint!("{report}");
            ExitCode::from(2)
        }
    }
}

fn run(command: Command) -> Outcome {
    match command {
        Command::SampleMobile { common, encoding } => {
            let cfg = with_seed(settle(&common, None, None, None)?);
            let (p, n) = single_size(&cfg)?;
            announce(&json!({"command": "sample-mobile", "p": p, "n": n, "seed": cfg.seed, "mode": cfg.mode, "encoding": encoding, "out": cfg.out}));
            let m = sample(&cfg)?;
            let text = if encoding {
                serde_json::to_string(&contour(&m)).map_err(Error::from)?
            } else {
                serde_json::to_string(&m).map_err(Error::from)?
            };
            write_text(cfg.out.as_deref(), &text)
        }
        Command::BuildMap { common, input, format } => {
            let (cfg, m) = mobile_from(&common, input.as_deref())?;
            announce(&json!({"command": "build-map", "p": m.p(), "n": m.n(), "seed": cfg.seed, "mode": cfg.mode, "input": input, "format": format!("{format:?}").to_lowercase(), "out": cfg.out}));
            let map = build_map_from_encoding(&contour(&m));
            match format {
                MapFormat::Json => write_text(cfg.out.as_deref(), &serde_json::to_string(&map).map_err(Error::from)?),
                MapFormat::Binary => {
                    let mut w = open_out(cfg.out.as_deref())?;
                    map.write_binary(&mut w)?;
                    w.flush()?;
                    Ok(())
                }
            }
        }
        Command::Validate { common, input, map } => {
            let (cfg, m) = mobile_from(&common, input.as_deref())?;
            announce(&json!({"command": "validate", "p": m.p(), "n": m.n(), "seed": cfg.seed, "mode": cfg.mode, "input": input, "map": map}));
            let built = match &map {
                Some(path) => read_map(path)?,
                None => build_map_from_encoding(&contour(&m)),
            };
            let report = validate(&built, &m);
            if !report.is_ok() {
                return Err(Failure::Invalid(report.to_string()));
            }
            write_text(
                cfg.out.as_deref(),
                &format!(
                    "ok: {} vertices, {} edges, connected, bipartite, distance from the root vertex equals the label at every vertex",
                    built.vertex_count(),
                    built.edge_count()
                ),
            )
        }
        Command::Geodesics { common, thresholds, input, vertices } => {
            let (cfg, m) = mobile_from_with(&common, &thresholds, input.as_deref())?;
            let n = m.n();
            let (d, c, b) = (abs_threshold(cfg.delta, n).max(1), abs_threshold(cfg.chi, n), abs_threshold(cfg.beta, n).max(1));
            announce(&json!({"command": "geodesics", "p": m.p(), "n": n, "seed": cfg.seed, "mode": cfg.mode, "input": input,
                "delta": cfg.delta, "chi": cfg.chi, "beta": cfg.beta, "delta_abs": d, "chi_abs": c, "beta_abs": b, "out": cfg.out}));
            let enc = contour(&m);
            let map = build_map_from_encoding(&enc);
            let vertices = if vertices.is_empty() { (0..map.vertex_count() as u32).collect() } else { vertices };
            let report = GeodesicReport::compute(&enc, &map, &vertices, d, c.max(b + 1), b)?;
            write_text(cfg.out.as_deref(), report.to_csv().trim_end())
        }
        Command::Exp { name, common, thresholds, reps } => {
            let cfg = with_seed(settle(&common, Some(&thresholds), reps, name)?);
            announce(&serde_json::to_value(&cfg).map_err(Error::from)?);
            let table = run_experiment(&cfg)?;
            let csv = table.to_csv();
            write_text(cfg.out.as_deref(), csv.trim_end())
        }
        Command::Enumerate { common, list } => {
            let cfg = settle(&common, None, None, None)?;
            let (p, n) = single_size(&cfg)?;
            announce(&json!({"command": "enumerate", "p": p, "n": n, "list": list, "out": cfg.out}));
            let all = enumerate_mobiles(n, p)?;
            let mut text = format!("{} mobiles (p={p}, n={n})", all.len());
            if list {
                for m in &all {
                    text.push('\n');
                    text.push_str(&serde_json::to_string(m).map_err(Error::from)?);
                }
            }
            write_text(cfg.out.as_deref(), &text)
        }
        Command::Fixture { name, out } => {
            announce(&json!({"command": "fixture", "name": name, "out": out}));
            let f = fixture(&name)?;
            let out = out.map(|p| p.to_string_lossy().into_owned());
            write_text(out.as_deref(), &f.to_json()?)
        }
    }
}

fn announce(config: &serde_json::Value) {
    eprintln!("{config}");
}

/// Merges the config file, the environment and the flags, in increasing
/// order of precedence.
fn settle(
    common: &Common,
    thresholds: Option<&Thresholds>,
    reps: Option<usize>,
    name: Option<String>,
) -> std::result::Result<ExperimentConfig, Failure> {
    let mut cfg = match &common.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?;
            serde_json::from_str(&text).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?
        }
        None => ExperimentConfig::default(),
    };
    cfg.seed = cfg.resolve_seed()?;
    if let Some(name) = name {
        cfg.experiment = name;
    }
    if let Some(p) = common.p {
        cfg.p = p;
    }
    if !common.n.is_empty() {
        cfg.ns = common.n.clone();
    }
    if common.seed.is_some() {
        cfg.seed = common.seed;
    }
    if common.mode.is_some() {
        cfg.mode = common.mode;
    }
    if let Some(out) = &common.out {
        cfg.out = Some(out.to_string_lossy().into_owned());
    }
    if let Some(r) = reps {
        cfg.replicas = r;
    }
    if let Some(t) = thresholds {
        for (slot, flag) in [(&mut cfg.delta, t.delta), (&mut cfg.alpha, t.alpha), (&mut cfg.chi, t.chi), (&mut cfg.beta, t.beta)] {
            if let Some(x) = flag {
                *slot = x;
            }
        }
        if let Some(q) = t.queries {
            cfg.queries = q;
        }
    }
    if !EXPERIMENTS.contains(&cfg.experiment.as_str()) {
        return Err(Failure::Usage(format!(
            "unknown experiment {:?}; known: {}",
            cfg.experiment,
            EXPERIMENTS.join(", ")
        )));
    }
    Ok(cfg)
}

fn single_size(cfg: &ExperimentConfig) -> std::result::Result<(usize, usize), Failure> {
    match cfg.ns.as_slice() {
        [n] => Ok((cfg.p, *n)),
        ns => Err(Failure::Usage(format!("expected a single --n, got {ns:?}"))),
    }
}

/// Samples replica 0 of the configured size, generating a seed if none is set.
fn sample(cfg: &ExperimentConfig) -> std::result::Result<Mobile, Failure> {
    let (p, n) = single_size(cfg)?;
    let seed = cfg.seed.expect("seed settled before sampling");
    let mode = cfg.mode.unwrap_or_else(|| SamplerMode::default_for(n));
    Ok(sample_mobile(n, p, &mut replica_stream(seed, n, 0), mode)?)
}

fn with_seed(mut cfg: ExperimentConfig) -> ExperimentConfig {
    if cfg.seed.is_none() {
        cfg.seed = Some(rand::thread_rng().gen());
    }
    cfg
}

fn mobile_from(common: &Common, input: Option<&Path>) -> std::result::Result<(ExperimentConfig, Mobile), Failure> {
    mobile_from_with(common, &Thresholds::default(), input)
}

fn mobile_from_with(
    common: &Common,
    thresholds: &Thresholds,
    input: Option<&Path>,
) -> std::result::Result<(ExperimentConfig, Mobile), Failure> {
    let cfg = settle(common, Some(thresholds), None, None)?;
    match input {
        Some(path) => {
            let mut text = String::new();
            open_in(path)?.read_to_string(&mut text)?;
            let m: Mobile = serde_json::from_str(&text).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?;
            Ok((cfg, m))
        }
        None => {
            let cfg = with_seed(cfg);
            let m = sample(&cfg)?;
            Ok((cfg, m))
        }
    }
}

fn open_in(path: &Path) -> std::result::Result<Box<dyn Read>, Failure> {
    if path == Path::new("-") {
        return Ok(Box::new(io::stdin()));
    }
    let f = File::open(path).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?;
    Ok(Box::new(BufReader::new(f)))
}

/// Reads a map in either format, telling them apart by the binary magic.
fn read_map(path: &Path) -> std::result::Result<PlanarMap, Failure> {
    let mut bytes = Vec::new();
    open_in(path)?.read_to_end(&mut bytes)?;
    if bytes.starts_with(b"BDGM1") {
        Ok(PlanarMap::read_binary(bytes.as_slice())?)
    } else {
        serde_json::from_slice(&bytes).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))
    }
}

fn open_out(out: Option<&str>) -> std::result::Result<Box<dyn Write>, Failure> {
    match out {
        None | Some("-") => Ok(Box::new(BufWriter::new(io::stdout().lock()))),
        Some(path) => {
            let f = File::create(path).map_err(|e| Failure::Usage(format!("{path}: {e}")))?;
            Ok(Box::new(BufWriter::new(f)))
        }
    }
}

fn write_text(out: Option<&str>, text: &str) -> Outcome {
    let mut w = open_out(out)?;
    writeln!(w, "{text}")?;
    w.flush()?;
    Ok(())
}
