//! Batch front end for `heis-core`.
//!
//! [`run`] turns parsed arguments into the bytes that the `heis` binary
//! writes; every stochastic subcommand requires `--seed`.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use heis_core::ccmetric::{cc_distance, cc_geodesic, grid_oracle_distance};
use heis_core::cuts::{cut_distance, eval_phi, sinabs_fourier, sinabs_fourier_quadrature, CutMeasure, CutValue};
use heis_core::distortion::{
    center_collapse_report, exact, exact_distortion, lp_distortion, CutDecomposition, FiniteMetric, UNIT_PITCH,
};
use heis_core::lines::{classify_pair, hyperbola_of_skew, join_to_line, sample_lines, Line};
use heis_core::monotone::{half_space_fit, monotonicity_defect, SetOracle};
use heis_core::hgroup::lift_polyline;
use heis_core::{Box3, HPoint, HeisError, Planar, Polyline2D};

pub const EXIT_PRECONDITION: i32 = 2;
pub const EXIT_NUMERIC: i32 = 3;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Core(#[from] HeisError),
    #[error("{source_name}: {message}")]
    Schema { source_name: String, message: String },
    #[error("{0}")]
    Usage(String),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Core(e) if e.is_numeric() => EXIT_NUMERIC,
            _ => EXIT_PRECONDITION,
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Default)]
pub enum Format {
    #[default]
    Json,
    Csv,
}

#[derive(Debug, Parser)]
#[command(name = "heis", version, about = "Heisenberg group geometry, cut metrics and L¹ distortion")]
pub struct Cli {
    #[command(flatten)]
    pub global: Global,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args, Clone)]
pub struct Global {
    /// Seed for stochastic subcommands.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Monte Carlo budget or samples per line.
    #[arg(long, global = true)]
    pub samples: Option<usize>,
    /// Number of random lines.
    #[arg(long, global = true)]
    pub lines: Option<usize>,
    /// Tolerance override.
    #[arg(long, global = true)]
    pub tol: Option<f64>,
    /// Box as `a0,a1,b0,b1,c0,c1` or `[[a0,a1],[b0,b1],[c0,c1]]`.
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub window: Option<String>,
    /// Output file; standard output when absent.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    pub format: Format,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// CC distance between two points.
    Dist {
        #[arg(long)]
        p: String,
        #[arg(long)]
        q: String,
        /// Also report the grid-graph oracle with this lattice step.
        #[arg(long)]
        oracle_step: Option<f64>,
    },
    /// Sampled geodesic between two points.
    Geodesic {
        #[arg(long)]
        p: String,
        #[arg(long)]
        q: String,
        #[arg(long, default_value_t = 64)]
        n: usize,
    },
    /// Horizontal lift of a planar polyline.
    Lift {
        /// Polyline JSON: list of `[x, y]`.
        #[arg(long)]
        path: String,
        /// Start point; defaults to the first vertex at height 0.
        #[arg(long)]
        start: Option<String>,
    },
    /// Line sampling, classification and joins.
    Line {
        #[command(subcommand)]
        action: LineAction,
    },
    /// Cut distance between points under a cut measure.
    CutEval {
        #[arg(long)]
        measure: String,
        #[arg(long)]
        x: Option<String>,
        #[arg(long)]
        y: Option<String>,
        /// JSON list of `[x, y]` point pairs.
        #[arg(long)]
        pairs: Option<String>,
    },
    /// Monotonicity defect of a set.
    Monotone {
        #[arg(long)]
        set: String,
    },
    /// Best half-space approximation of a set.
    Fit {
        #[arg(long)]
        set: String,
    },
    /// Minimal L¹ distortion of a finite metric.
    Distortion {
        /// FiniteMetric JSON.
        #[arg(long)]
        metric: Option<String>,
        /// JSON list of points; the metric is their CC distance matrix.
        #[arg(long)]
        points: Option<String>,
        /// Also re-solve in exact rational arithmetic (n ≤ 8).
        #[arg(long)]
        exact: bool,
        /// Check a CutDecomposition against the metric instead of solving.
        #[arg(long)]
        check: Option<String>,
    },
    /// Cross plus central chain experiment.
    Collapse {
        #[arg(long, value_delimiter = ',', default_value = "0.5,1,2")]
        radii: Vec<f64>,
        #[arg(long, default_value_t = UNIT_PITCH)]
        tau: f64,
        #[arg(long, value_delimiter = ',', default_value = "2,4,6")]
        chains: Vec<usize>,
    },
    /// Fourier coefficients of |sin| against quadrature.
    Fourier {
        #[arg(long, default_value_t = 64)]
        kmax: u32,
    },
    /// Matrix coefficient φ of the Schrödinger representation.
    Phi {
        #[arg(long)]
        lambda: f64,
        #[arg(long)]
        k: u32,
        #[arg(long, allow_hyphen_values = true)]
        eps: i8,
        #[arg(long, allow_hyphen_values = true)]
        z: String,
        #[arg(long, allow_hyphen_values = true)]
        t: f64,
    },
}

#[derive(Debug, Subcommand)]
pub enum LineAction {
    /// Lines drawn from the kinematic measure on the window.
    Sample {
        #[arg(long)]
        count: usize,
    },
    /// Classify a pair of lines.
    Classify {
        #[arg(long)]
        l1: String,
        #[arg(long)]
        l2: String,
    },
    /// Lines through a point meeting a line.
    Join {
        #[arg(long)]
        p: String,
        #[arg(long)]
        l1: String,
    },
    /// Hyperbola of tangent projections for a skew pair.
    Hyperbola {
        #[arg(long)]
        l1: String,
        #[arg(long)]
        l2: String,
    },
}

/// Parses inline JSON, or reads it from the named file.
pub fn load<T: DeserializeOwned>(arg: &str) -> CliResult<T> {
    let trimmed = arg.trim_start();
    let (name, text) = if trimmed.starts_with(['[', '{', '"']) || trimmed.parse::<f64>().is_ok() {
        ("<inline>".to_string(), arg.to_string())
    } else {
        let path = Path::new(arg);
        let text = std::fs::read_to_string(path).map_err(|source| CliError::Io { path: path.into(), source })?;
        (arg.to_string(), text)
    };
    serde_json::from_str(&text).map_err(|e| CliError::Schema { source_name: name, message: e.to_string() })
}

fn point(arg: &str) -> CliResult<HPoint> {
    let p: HPoint = load(arg)?;
    if !p.is_finite() {
        return Err(HeisError::precondition("point coordinates must be finite").into());
    }
    Ok(p)
}

pub fn parse_window(arg: &str) -> CliResult<Box3> {
    if arg.trim_start().starts_with('[') {
        return load(arg);
    }
    let v: Vec<f64> = arg
        .split(',')
        .map(|s| s.trim().parse::<f64>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|e| CliError::Usage(format!("--window: {e}")))?;
    if v.len() != 6 {
        return Err(CliError::Usage("--window needs six numbers a0,a1,b0,b1,c0,c1".into()));
    }
    Ok(Box3::new([v[0], v[1]], [v[2], v[3]], [v[4], v[5]])?)
}

impl Global {
    fn seed(&self, subcommand: &str) -> CliResult<u64> {
        self.seed.ok_or_else(|| CliError::Usage(format!("{subcommand} is stochastic and requires --seed")))
    }

    fn window(&self) -> CliResult<Box3> {
        match &self.window {
            Some(w) => parse_window(w),
            None => Ok(Box3::cube(2.0)?),
        }
    }
}

fn json<T: Serialize>(value: &T) -> CliResult<String> {
    let mut s = serde_json::to_string_pretty(value).map_err(|e| CliError::Usage(e.to_string()))?;
    s.push('\n');
    Ok(s)
}

fn csv_only(format: Format, name: &str) -> CliResult<()> {
    if format == Format::Csv {
        return Err(CliError::Usage(format!("{name} has no CSV form")));
    }
    Ok(())
}

#[derive(Serialize, Deserialize)]
struct DistOutput {
    p: HPoint,
    q: HPoint,
    distance: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    oracle: Option<f64>,
}

#[derive(Serialize, Deserialize)]
struct LiftOutput {
    start: HPoint,
    endpoint: HPoint,
    heights: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct PairValue {
    x: HPoint,
    y: HPoint,
    #[serde(flatten)]
    value: CutValue,
}

#[derive(Serialize, Deserialize)]
struct DecompositionCheck {
    sandwich_violation: f64,
    passed: bool,
}

#[derive(Serialize, Deserialize)]
struct ExactOutput {
    #[serde(flatten)]
    decomposition: CutDecomposition,
    exact_distortion: String,
    exact_gap: f64,
}

#[derive(Serialize, Deserialize)]
struct FourierRow {
    k: u32,
    closed_form: f64,
    quadrature: f64,
}

#[derive(Serialize, Deserialize)]
struct PhiOutput {
    re: f64,
    im: f64,
}

/// Executes one subcommand and returns its output bytes.
pub fn run(cli: &Cli) -> CliResult<String> {
    let g = &cli.global;
    let f = g.format;
    match &cli.command {
        Command::Dist { p, q, oracle_step } => {
            let (p, q) = (point(p)?, point(q)?);
            let distance = cc_distance(&p, &q);
            let oracle = oracle_step.map(|step| grid_oracle_distance(&p, &q, step)).transpose()?;
            match f {
                Format::Json => json(&DistOutput { p, q, distance, oracle }),
                Format::Csv => {
                    let mut s = String::from("distance\n");
                    let _ = writeln!(s, "{distance:.16e}");
                    Ok(s)
                }
            }
        }
        Command::Geodesic { p, q, n } => {
            let (p, q) = (point(p)?, point(q)?);
            if *n < 1 {
                return Err(HeisError::precondition("geodesic needs n ≥ 1").into());
            }
            let geo = cc_geodesic(&p, &q, *n);
            match f {
                Format::Json => json(&geo),
                Format::Csv => {
                    let mut s = String::from("a,b,c\n");
                    for x in &geo.samples {
                        let _ = writeln!(s, "{:.16e},{:.16e},{:.16e}", x.a, x.b, x.c);
                    }
                    Ok(s)
                }
            }
        }
        Command::Lift { path, start } => {
            let path: Polyline2D = load(path)?;
            let first = path.vertices()[0];
            let start = match start {
                Some(s) => point(s)?,
                None => HPoint::new(first[0], first[1], 0.0),
            };
            let lift = lift_polyline(&start, &path)?;
            match f {
                Format::Json => json(&LiftOutput { start, endpoint: lift.endpoint, heights: lift.heights }),
                Format::Csv => {
                    let mut s = String::from("x,y,c\n");
                    for (v, h) in path.vertices().iter().zip(&lift.heights) {
                        let _ = writeln!(s, "{:.16e},{:.16e},{:.16e}", v[0], v[1], h);
                    }
                    Ok(s)
                }
            }
        }
        Command::Line { action } => run_line(g, action),
        Command::CutEval { measure, x, y, pairs } => {
            let mut measure: CutMeasure = load(measure)?;
            if let CutMeasure::AcHorizontal(h) = &mut measure {
                h.seed = g.seed("cut-eval with an ac_horizontal measure")?;
                if let Some(n) = g.samples {
                    h.samples = n;
                }
            }
            measure.validate()?;
            let single = pairs.is_none();
            let pairs: Vec<(HPoint, HPoint)> = match (pairs, x, y) {
                (Some(p), None, None) => load(p)?,
                (None, Some(x), Some(y)) => vec![(point(x)?, point(y)?)],
                _ => return Err(CliError::Usage("give either --pairs or both --x and --y".into())),
            };
            let values: Vec<PairValue> = pairs
                .iter()
                .map(|(x, y)| cut_distance(&measure, x, y).map(|value| PairValue { x: *x, y: *y, value }))
                .collect::<Result<_, _>>()?;
            match f {
                Format::Json if single => json(&values[0]),
                Format::Json => json(&values),
                Format::Csv => {
                    let mut s = String::from("xa,xb,xc,ya,yb,yc,value,stderr,boundary_hits\n");
                    for v in &values {
                        let _ = writeln!(
                            s,
                            "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{}",
                            v.x.a, v.x.b, v.x.c, v.y.a, v.y.b, v.y.c, v.value.value, v.value.stderr, v.value.boundary_hits
                        );
                    }
                    Ok(s)
                }
            }
        }
        Command::Monotone { set } => {
            let set: SetOracle = load(set)?;
            let seed = g.seed("monotone")?;
            let report = monotonicity_defect(
                &set,
                &g.window()?,
                g.lines.unwrap_or(10_000),
                g.samples.unwrap_or(256),
                seed,
            )?;
            match f {
                Format::Json => json(&report),
                Format::Csv => {
                    let q = &report.quantiles;
                    let mut s = String::from("mean_defect,stderr,p50,p90,p99,max,nonmonotone_fraction,n_lines,n_samples,seed\n");
                    let _ = writeln!(
                        s,
                        "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{},{},{}",
                        report.mean_defect,
                        report.stderr,
                        q.p50,
                        q.p90,
                        q.p99,
                        q.max,
                        report.nonmonotone_fraction,
                        report.n_lines,
                        report.n_samples,
                        report.seed
                    );
                    Ok(s)
                }
            }
        }
        Command::Fit { set } => {
            csv_only(f, "fit")?;
            let set: SetOracle = load(set)?;
            let seed = g.seed("fit")?;
            json(&half_space_fit(&set, &g.window()?, g.samples.unwrap_or(20_000), seed)?)
        }
        Command::Distortion { metric, points, exact: want_exact, check } => {
            let metric = match (metric, points) {
                (Some(m), None) => {
                    let m: FiniteMetric = load(m)?;
                    m.validate()?;
                    m
                }
                (None, Some(p)) => {
                    let pts: Vec<HPoint> = load(p)?;
                    FiniteMetric::from_points(&pts)?
                }
                _ => return Err(CliError::Usage("give exactly one of --metric or --points".into())),
            };
            if let Some(c) = check {
                csv_only(f, "distortion --check")?;
                let dec: CutDecomposition = load(c)?;
                if dec.labels != metric.labels {
                    return Err(HeisError::precondition("decomposition labels differ from the metric's").into());
                }
                let v = dec.sandwich_violation(&metric)?;
                return json(&DecompositionCheck { sandwich_violation: v, passed: v <= g.tol.unwrap_or(1e-8) });
            }
            let dec = lp_distortion(&metric)?;
            let tol = g.tol.unwrap_or(1e-6);
            if let Some(cert) = dec.certificate {
                if !(cert.max_residual() < tol) {
                    return Err(HeisError::numeric(format!(
                        "LP certificate residual {:e} exceeds {tol:e}",
                        cert.max_residual()
                    ))
                    .into());
                }
            }
            match f {
                Format::Json if *want_exact => {
                    let ex = exact_distortion(&metric)?;
                    let gap = (exact::to_f64(&ex) - dec.distortion).abs();
                    json(&ExactOutput { decomposition: dec, exact_distortion: ex.to_string(), exact_gap: gap })
                }
                Format::Json => json(&dec),
                Format::Csv => {
                    let mut s = String::from("cut,weight\n");
                    for (c, w) in dec.cuts.iter().zip(&dec.weights) {
                        let _ = writeln!(s, "{c},{w:.16e}");
                    }
                    let _ = writeln!(s, "distortion,{:.16e}", dec.distortion);
                    Ok(s)
                }
            }
        }
        Command::Collapse { radii, tau, chains } => {
            let report = center_collapse_report(radii, *tau, chains)?;
            match f {
                Format::Json => json(&report),
                Format::Csv => Ok(report.to_csv()),
            }
        }
        Command::Fourier { kmax } => {
            let rows: Vec<FourierRow> = (0..=*kmax)
                .map(|k| FourierRow { k, closed_form: sinabs_fourier(k), quadrature: sinabs_fourier_quadrature(k) })
                .collect();
            match f {
                Format::Json => json(&rows),
                Format::Csv => {
                    let mut s = String::from("k,closed_form,quadrature\n");
                    for r in &rows {
                        let _ = writeln!(s, "{},{:.16e},{:.16e}", r.k, r.closed_form, r.quadrature);
                    }
                    Ok(s)
                }
            }
        }
        Command::Phi { lambda, k, eps, z, t } => {
            let z: Planar = load(z)?;
            let v = eval_phi(*lambda, *k, *eps, z, *t)?;
            match f {
                Format::Json => json(&PhiOutput { re: v.re, im: v.im }),
                Format::Csv => Ok(format!("re,im\n{:.16e},{:.16e}\n", v.re, v.im)),
            }
        }
    }
}

fn run_line(g: &Global, action: &LineAction) -> CliResult<String> {
    let f = g.format;
    match action {
        LineAction::Sample { count } => {
            let seed = g.seed("line sample")?;
            let lines = sample_lines(&g.window()?, *count, seed)?;
            match f {
                Format::Json => json(&lines),
                Format::Csv => {
                    let mut s = String::from("a,b,c,angle\n");
                    for l in &lines {
                        let b = l.canonical_base();
                        let _ = writeln!(s, "{:.16e},{:.16e},{:.16e},{:.16e}", b.a, b.b, b.c, l.angle);
                    }
                    Ok(s)
                }
            }
        }
        LineAction::Classify { l1, l2 } => {
            csv_only(f, "line classify")?;
            let (l1, l2): (Line, Line) = (load(l1)?, load(l2)?);
            json(&classify_pair(&l1, &l2))
        }
        LineAction::Join { p, l1 } => {
            csv_only(f, "line join")?;
            let p = point(p)?;
            let l1: Line = load(l1)?;
            json(&join_to_line(&p, &l1)?)
        }
        LineAction::Hyperbola { l1, l2 } => {
            csv_only(f, "line hyperbola")?;
            let (l1, l2): (Line, Line) = (load(l1)?, load(l2)?);
            json(&hyperbola_of_skew(&l1, &l2)?)
        }
    }
}

/// Pool size from `HEIS_THREADS`, if set.
pub fn thread_override() -> CliResult<Option<usize>> {
    match std::env::var("HEIS_THREADS") {
        Ok(v) => v
            .trim()
            .parse::<usize>()
            .ok()
            .filter(|n| *n > 0)
            .map(Some)
            .ok_or_else(|| CliError::Usage(format!("HEIS_THREADS must be a positive integer, got {v:?}"))),
        Err(_) => Ok(None),
    }
}

/// Writes `output` to `--out` or standard output.
pub fn emit(global: &Global, output: &str) -> CliResult<()> {
    match &global.out {
        Some(path) => std::fs::write(path, output).map_err(|source| CliError::Io { path: path.clone(), source }),
        None => {
            use std::io::Write;
            let mut stdout = std::io::stdout().lock();
            stdout
                .write_all(output.as_bytes())
                .map_err(|source| CliError::Io { path: PathBuf::from("<stdout>"), source })
        }
    }
}
