use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use num_complex::Complex64;
use serde_json::{json, Value};

use tubepw::cli::{self, decode, ExperimentConfig, RunOptions, Table};
use tubepw::cone_geometry::{BaseRegion, ConeSpec};
use tubepw::mixed_norms::{mixed_norm, NormParams};
use tubepw::spectral_models::SpectralDensity;
use tubepw::transforms::{recover_density, synthesize, QuadSpec, TubeFunction};
use tubepw::verification::check_support_containment;
use tubepw::weights::WeightFn;
use tubepw::{par, Error, Result};

#[derive(Parser)]
#[command(name = "tubepw", version, about = "Spectral representations on tube domains: synthesis, recovery, mixed norms and checks")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Global {
    /// Config whose entities may be referenced by id (built-ins are always available).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Multiply grid sizes by this factor (< 1 coarsens).
    #[arg(long, global = true)]
    grid_scale: Option<f64>,
    /// Relative tolerance override.
    #[arg(long, global = true)]
    tol: Option<f64>,
    /// Output directory [default: config output.dir, then $TUBEPW_OUT, then ./tubepw-out].
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Quad spec id used by single commands.
    #[arg(long, global = true, default_value = "default")]
    quad: String,
}

#[derive(Subcommand)]
enum Command {
    /// Cone duality and regularity.
    Cone {
        #[command(subcommand)]
        op: ConeOp,
    },
    /// Evaluate F(x + iy) by quadrature of a density.
    Synth {
        /// Density id or inline JSON.
        density: String,
        /// Height y, comma separated.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        y: Vec<f64>,
        /// Real part x, comma separated; repeat for several points.
        #[arg(long, allow_hyphen_values = true)]
        x: Vec<String>,
    },
    /// Recover the density from the slice at height y; writes recovered.csv.
    Recover {
        /// Tube id, density id, or inline JSON.
        tube: String,
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        y: Vec<f64>,
    },
    /// Mixed norm of a tube function.
    Norm {
        tube: String,
        #[arg(long)]
        base: String,
        #[arg(long)]
        weight: String,
        #[arg(short, long)]
        p: f64,
        /// A number or "inf".
        #[arg(short, long, default_value = "1")]
        s: String,
    },
    /// Support containment of the density recovered at height y.
    Support {
        tube: String,
        #[arg(long)]
        cone: String,
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        y: Vec<f64>,
        #[arg(short = 'R', long = "radius", default_value_t = 0.0)]
        r: f64,
    },
    /// Run a check suite; exit 0 if all pass, 2 if any fails, 1 on config errors.
    Verify { suite: PathBuf },
    /// Parameters and derived quantities of an entity.
    Describe { id: String },
}

#[derive(Subcommand)]
enum ConeOp {
    /// Generators of the dual cone.
    Dual { cone: String },
    /// Whether the dual cone has nonempty interior.
    Regular { cone: String },
}

/// Failures of a command: config and io problems exit 1, failed checks 2.
enum Failure {
    Config(Error),
    Checks(Vec<String>),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Config(e)
    }
}

struct Ctx {
    config: ExperimentConfig,
    opts: RunOptions,
    out: Option<PathBuf>,
    quad: String,
}

impl Ctx {
    /// An id in `t`, or inline JSON.
    fn entity<T: serde::de::DeserializeOwned>(&self, t: Table, arg: &str) -> Result<T> {
        let trimmed = arg.trim_start();
        if trimmed.starts_with('{') || trimmed.starts_with('[') {
            let v: Value = serde_json::from_str(arg)?;
            let v = if t == Table::Cone && v.is_array() { cone_from_generators(v) } else { v };
            return decode(self.config.expand(&v)?, arg);
        }
        self.config.get(t, arg)
    }

    fn quad(&self) -> Result<QuadSpec> {
        self.opts.apply(self.config.get(Table::Quad, &self.quad)?)
    }

    fn out_dir(&self) -> PathBuf {
        self.out
            .clone()
            .or_else(|| self.config.output.dir.clone())
            .or_else(|| std::env::var_os("TUBEPW_OUT").map(PathBuf::from))
            .unwrap_or_else(|| PathBuf::from("tubepw-out"))
    }
}

fn cone_from_generators(v: Value) -> Value {
    let dim = v.get(0).and_then(Value::as_array).map_or(0, Vec::len);
    json!({ "dim": dim, "generators": v })
}

fn print_json(v: &Value) {
    println!("{}", serde_json::to_string_pretty(v).unwrap_or_default());
}

fn parse_ext(s: &str) -> Result<f64> {
    match s.to_ascii_lowercase().as_str() {
        "inf" | "infinity" => Ok(f64::INFINITY),
        _ => s.parse().map_err(|_| Error::BadParameters(format!("'{s}' is not a number or inf"))),
    }
}

fn parse_vec(s: &str) -> Result<Vec<f64>> {
    s.split(',').map(|p| p.trim().parse().map_err(|_| Error::BadParameters(format!("bad coordinate '{p}'")))).collect()
}

fn write_csv(path: &Path, header: &[String], rows: &[Vec<String>]) -> Result<()> {
    if let Some(d) = path.parent() {
        std::fs::create_dir_all(d).map_err(|e| Error::Io(format!("{}: {e}", d.display())))?;
    }
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(header)?;
    for r in rows {
        w.write_record(r)?;
    }
    w.flush()?;
    Ok(())
}

fn run(cli: Cli) -> std::result::Result<(), Failure> {
    let g = cli.global;
    if let Some(j) = g.jobs {
        if !par::set_jobs(j) && par::is_parallel() {
            eprintln!("warning: thread pool already initialised, --jobs ignored");
        }
    }
    let config = match &g.config {
        Some(p) => ExperimentConfig::load(p)?,
        None => ExperimentConfig::default(),
    };
    let mut ctx = Ctx {
        config: config.with_builtins(),
        opts: RunOptions { grid_scale: g.grid_scale, tol: g.tol },
        out: g.out,
        quad: g.quad,
    };
    match cli.command {
        Command::Cone { op } => {
            let (arg, dual) = match &op {
                ConeOp::Dual { cone } => (cone, true),
                ConeOp::Regular { cone } => (cone, false),
            };
            let c: ConeSpec = ctx.entity(Table::Cone, arg)?;
            if dual {
                print_json(&json!({ "generators": c.generators(), "dual_generators": c.dual()?.generators() }));
            } else {
                print_json(&json!({ "regular": c.is_regular()?, "witness": c.regularity_witness()? }));
            }
        }
        Command::Synth { density, y, x } => {
            let f: SpectralDensity = ctx.entity(Table::Density, &density)?;
            let q = ctx.quad()?;
            let n = f.dim();
            let y = if y.is_empty() { vec![0.0; n] } else { y };
            let xs: Vec<Vec<f64>> =
                if x.is_empty() { vec![vec![0.0; n]] } else { x.iter().map(|s| parse_vec(s)).collect::<Result<_>>()? };
            let mut rows = Vec::new();
            for xv in &xs {
                if xv.len() != n || y.len() != n {
                    return Err(Error::DimensionMismatch { expected: n, got: xv.len().max(y.len()) }.into());
                }
                let z: Vec<Complex64> = xv.iter().zip(&y).map(|(a, b)| Complex64::new(*a, *b)).collect();
                let s = synthesize(&f, &z, &q)?;
                let closed = f.closed_form(&z).transpose()?;
                rows.push(json!({ "x": xv, "y": y, "re": s.value.re, "im": s.value.im, "tail_estimate": s.tail_estimate,
                    "closed_form": closed.map(|c| [c.re, c.im]) }));
            }
            print_json(&Value::Array(rows));
        }
        Command::Recover { tube, y } => {
            let f: TubeFunction = ctx.entity(Table::Tube, &tube)?;
            let q = ctx.quad()?;
            let d = recover_density(&f, &y, &q)?;
            let mut header: Vec<String> = (0..d.dim).map(|k| format!("t{k}")).collect();
            header.extend(["re", "im", "error", "trusted"].map(String::from));
            let model = f.density();
            if model.is_some() {
                header.push("model".into());
            }
            let mut rows = Vec::with_capacity(d.len());
            for i in 0..d.len() {
                let t = d.point(i);
                let mut r: Vec<String> = t.iter().map(|v| format!("{v:e}")).collect();
                r.extend([
                    format!("{:e}", d.values[i].re),
                    format!("{:e}", d.values[i].im),
                    format!("{:e}", d.error[i]),
                    d.trusted[i].to_string(),
                ]);
                if let Some(m) = model {
                    r.push(format!("{:e}", m.eval(&t)?));
                }
                rows.push(r);
            }
            let path = ctx.out_dir().join("recovered.csv");
            write_csv(&path, &header, &rows)?;
            print_json(&json!({ "recovery": d, "trusted_radius": d.trusted_radius(), "points": d.len(),
                "csv": path.display().to_string() }));
        }
        Command::Norm { tube, base, weight, p, s } => {
            let f: TubeFunction = ctx.entity(Table::Tube, &tube)?;
            let b: BaseRegion = ctx.entity(Table::Base, &base)?;
            let w: WeightFn = ctx.entity(Table::Weight, &weight)?;
            let q = ctx.quad()?;
            let r = mixed_norm(&f, &b, &w, NormParams::new(p, parse_ext(&s)?)?, &q)?;
            print_json(&serde_json::to_value(r).map_err(Error::from)?);
        }
        Command::Support { tube, cone, y, r } => {
            let f: TubeFunction = ctx.entity(Table::Tube, &tube)?;
            let c: ConeSpec = ctx.entity(Table::Cone, &cone)?;
            let q = ctx.quad()?;
            let d = recover_density(&f, &y, &q)?;
            let res = check_support_containment(&d, &c, r, q.tol_rel)?;
            print_json(&serde_json::to_value(&res).map_err(Error::from)?);
            if !res.passed {
                return Err(Failure::Checks(vec![res.check_id]));
            }
        }
        Command::Verify { suite } => {
            ctx.config = ctx.config.overlay(ExperimentConfig::load(&suite)?);
            let out = ctx.out_dir();
            let report = cli::run_suite(&ctx.config, &ctx.opts, &out)?;
            for o in &report.outcomes {
                let detail = match &o.result {
                    Ok(r) => format!("margin {:e}", r.margin),
                    Err(e) => format!("{}: {e}", cli::error_kind(e)),
                };
                println!("{} {} ({}) {detail}", if o.passed() { "PASS" } else { "FAIL" }, o.label, o.check_id);
            }
            println!("reports in {}", out.display());
            let failed: Vec<String> = report.failed().map(|o| o.label.clone()).collect();
            if !failed.is_empty() {
                return Err(Failure::Checks(failed));
            }
        }
        Command::Describe { id } => print_json(&cli::describe(&ctx.config, &id)?),
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(e)) => {
            eprintln!("error: {}: {e}", cli::error_kind(&e));
            ExitCode::from(1)
        }
        Err(Failure::Checks(labels)) => {
            eprintln!("failed checks: {}", labels.join(", "));
            ExitCode::from(2)
        }
    }
}
