//! `fsim`: command-line access to every stage of the pipeline.
//!
//! Exit codes: 0 success, 1 configuration errors (bad flags, unreadable or
//! invalid system definitions), 2 domain errors from the numerics. Errors are
//! printed to stderr as one JSON object `{"error": kind, "message": ...}`.

use clap::{Parser, Subcommand, ValueEnum};
use fsim_core::analysis::{self, FoldIterationOptions, ManifoldKind};
use fsim_core::bifurcation;
use fsim_core::geometry::{classify_sigma_point, FilippovSystem, PlanarCurve};
use fsim_core::integrator::{filippov_trajectory, NonUniquePolicy};
use fsim_core::maps::{self, FilippovReturn, PlanarReturn, ReturnDynamics};
use fsim_core::scenarios::{family_from_uri, load_system, PlanarMap};
use fsim_core::{Error, Pt2, Tolerances, Vec3};
use serde::Serialize;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "fsim", version, about = "Fold-regular loops of planar Filippov systems")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Write the primary output here instead of stdout.
    #[arg(long, global = true)]
    output: Option<PathBuf>,
    /// Output format; each command has its own default.
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Clone, Copy, ValueEnum)]
enum Policy {
    PreferPlus,
    PreferMinus,
    PreferSlide,
    Halt,
}

#[derive(Subcommand)]
enum Command {
    /// Classify a point of the switching surface.
    Classify {
        #[arg(long)]
        system: String,
        #[arg(long, value_parser = parse_vec3, allow_hyphen_values = true)]
        point: Vec3,
    },
    /// Integrate a Filippov trajectory.
    Simulate {
        #[arg(long)]
        system: String,
        #[arg(long, value_parser = parse_vec3, allow_hyphen_values = true)]
        from: Vec3,
        #[arg(long, default_value_t = 10.0)]
        tmax: f64,
        #[arg(long, value_enum, default_value = "halt")]
        policy: Policy,
    },
    /// Sample the first return map on a grid around the fold point.
    ReturnMap {
        #[arg(long)]
        system: String,
        #[arg(long, default_value_t = 5)]
        grid: usize,
        #[arg(long, default_value_t = 0.05)]
        radius: f64,
    },
    /// Taylor coefficients of the return map at its fixed point.
    Coefficients {
        #[arg(long)]
        system: String,
    },
    /// Loop certificate.
    Certificate {
        #[arg(long)]
        system: String,
        #[arg(long, value_parser = parse_pt2, default_value = "0,0", allow_hyphen_values = true)]
        seed: Pt2,
        #[arg(long)]
        tol_loop: Option<f64>,
    },
    /// Position of the image of the fold curve.
    Configuration {
        #[arg(long)]
        system: String,
    },
    /// Derivative of the fold line map at the loop point.
    Modulus {
        #[arg(long)]
        system: String,
    },
    /// Evaluate the fold line map.
    FoldMap {
        #[arg(long)]
        system: String,
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true, required = true)]
        points: Vec<f64>,
        /// Use the Möbius fold line map.
        #[arg(long)]
        mobius: bool,
    },
    /// Invariant manifolds of the return-map fixed point.
    Manifolds {
        #[arg(long)]
        system: String,
        #[arg(long)]
        kind: ManifoldKind,
        #[arg(long, default_value_t = 0.2)]
        arclength: f64,
    },
    /// Push the fold curve through the return map.
    IterateFoldLine {
        #[arg(long)]
        system: String,
        #[arg(long, default_value_t = 6)]
        n: usize,
        #[arg(long, default_value_t = 0.5)]
        radius: f64,
        #[arg(long, default_value_t = 1.0)]
        clip: f64,
        /// Initial curve (CSV: index,x,y,class) instead of the fold curve.
        #[arg(long)]
        s0_file: Option<PathBuf>,
    },
    /// Basin curve of a saddle loop.
    Basin {
        #[arg(long)]
        system: String,
        #[arg(long, default_value_t = 0.2)]
        arclength: f64,
    },
    /// Scan a one-parameter family.
    Scan {
        #[arg(long)]
        family: String,
        #[arg(long, value_parser = parse_pair, allow_hyphen_values = true)]
        gamma_range: (f64, f64),
        #[arg(long, default_value_t = 17)]
        steps: usize,
        #[arg(long, default_value_t = 1)]
        jobs: usize,
    },
    /// Locate the loop parameter of a family.
    LocateLoop {
        #[arg(long)]
        family: String,
        #[arg(long, value_parser = parse_pair, allow_hyphen_values = true)]
        bracket: (f64, f64),
    },
}

fn parse_list(s: &str, n: usize) -> Result<Vec<f64>, String> {
    let v: Vec<f64> = s
        .split(',')
        .map(|t| t.trim().parse::<f64>().map_err(|e| format!("'{t}': {e}")))
        .collect::<Result<_, _>>()?;
    if v.len() != n {
        return Err(format!("expected {n} comma-separated numbers, got {}", v.len()));
    }
    Ok(v)
}

fn parse_vec3(s: &str) -> Result<Vec3, String> {
    parse_list(s, 3).map(|v| Vec3::new(v[0], v[1], v[2]))
}

fn parse_pt2(s: &str) -> Result<Pt2, String> {
    parse_list(s, 2).map(|v| Pt2::new(v[0], v[1]))
}

fn parse_pair(s: &str) -> Result<(f64, f64), String> {
    parse_list(s, 2).map(|v| (v[0], v[1]))
}

enum Failure {
    Config(&'static str, String),
    Domain(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        if e.is_config() {
            Failure::Config(e.kind(), e.to_string())
        } else {
            Failure::Domain(e)
        }
    }
}

type Run<T> = Result<T, Failure>;

struct Context {
    tol: Tolerances,
}

enum Source {
    Filippov(FilippovSystem),
    Planar(PlanarReturn),
}

impl Context {
    fn system(&self, spec: &str) -> Run<FilippovSystem> {
        if spec.starts_with("planar:") {
            return Err(Failure::Config("ConfigError", format!("'{spec}' is a planar map; this command needs a Filippov system")));
        }
        Ok(load_system(spec)?.with_tolerances(self.tol.clone()))
    }

    fn source(&self, spec: &str) -> Run<Source> {
        if spec.starts_with("planar:") {
            let mut p = PlanarReturn::new(PlanarMap::from_uri(spec)?);
            p.tol = self.tol.clone();
            Ok(Source::Planar(p))
        } else {
            Ok(Source::Filippov(self.system(spec)?))
        }
    }
}

fn with_dynamics<T>(ctx: &Context, spec: &str, f: impl FnOnce(&dyn ReturnDynamics) -> Run<T>) -> Run<T> {
    match ctx.source(spec)? {
        Source::Filippov(sys) => f(&FilippovReturn::new(&sys)?),
        Source::Planar(p) => f(&p),
    }
}

fn json<T: Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("output serializes");
    s.push('\n');
    s
}

fn curve_output(dynamics: &dyn ReturnDynamics, curve: &PlanarCurve, format: Format) -> String {
    match format {
        Format::Csv => curve.to_csv(&analysis::classes_of(dynamics, curve)),
        Format::Json => json(curve),
    }
}

#[derive(Serialize)]
struct GridSample {
    x: f64,
    y: f64,
    px: Option<f64>,
    py: Option<f64>,
    error: Option<&'static str>,
}

#[derive(Serialize)]
struct FoldSample {
    x: f64,
    image: Option<f64>,
    real_orbit: Option<bool>,
    error: Option<&'static str>,
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn run(cli: Cli, ctx: &Context) -> Run<String> {
    let fmt = |default: Format| cli.format.unwrap_or(default);
    Ok(match cli.command {
        Command::Classify { system, point } => {
            let sys = ctx.system(&system)?;
            json(&classify_sigma_point(&sys, &point, sys.tol.classify)?)
        }
        Command::Simulate { system, from, tmax, policy } => {
            let sys = ctx.system(&system)?;
            let policy = match policy {
                Policy::PreferPlus => NonUniquePolicy::PreferPlus,
                Policy::PreferMinus => NonUniquePolicy::PreferMinus,
                Policy::PreferSlide => NonUniquePolicy::PreferSlide,
                Policy::Halt => NonUniquePolicy::Halt,
            };
            let traj = filippov_trajectory(&sys, &from, tmax, policy)?;
            match fmt(Format::Json) {
                Format::Json => traj.to_json_lines(),
                Format::Csv => {
                    let mut out = String::from("arc,mode,t,x,y,z\n");
                    for (i, a) in traj.arcs.iter().enumerate() {
                        for (t, p) in &a.samples {
                            out.push_str(&format!("{i},{:?},{t},{},{},{}\n", a.mode, p.x, p.y, p.z));
                        }
                    }
                    out
                }
            }
        }
        Command::ReturnMap { system, grid, radius } => with_dynamics(ctx, &system, |d| {
            let mut rows = Vec::new();
            for i in 0..grid {
                for j in 0..grid {
                    let s = |k: usize| if grid == 1 { 0.0 } else { -radius + 2.0 * radius * k as f64 / (grid - 1) as f64 };
                    let p = Pt2::new(s(i), s(j));
                    let c = d.to_chart(&p)?;
                    let img = d.apply(&p).and_then(|q| d.to_chart(&q));
                    rows.push(match img {
                        Ok(q) => GridSample { x: c.x, y: c.y, px: Some(q.x), py: Some(q.y), error: None },
                        Err(e) => GridSample { x: c.x, y: c.y, px: None, py: None, error: Some(e.kind()) },
                    });
                }
            }
            Ok(match fmt(Format::Json) {
                Format::Json => json(&rows),
                Format::Csv => {
                    let mut out = String::from("x,y,px,py,error\n");
                    for r in &rows {
                        out.push_str(&format!("{},{},{},{},{}\n", r.x, r.y, opt(r.px), opt(r.py), r.error.unwrap_or("")));
                    }
                    out
                }
            })
        })?,
        Command::Coefficients { system } => with_dynamics(ctx, &system, |d| {
            let fp = maps::fixed_point(d, &Pt2::zeros())?;
            let c = maps::coefficients_at(d, &fp)?;
            Ok(match fmt(Format::Json) {
                Format::Json => json(&c),
                Format::Csv => format!("alpha,b,c,d,B,fd_step\n{},{},{},{},{},{}\n", c.alpha, c.b, c.c, c.d, c.big_b, c.fd_step),
            })
        })?,
        Command::Certificate { system, seed, tol_loop } => {
            let tol = tol_loop.unwrap_or(ctx.tol.loop_zeta);
            with_dynamics(ctx, &system, |d| {
                let q = d.from_chart(&seed)?;
                Ok(json(&analysis::certify(d, &q, tol)?))
            })?
        }
        Command::Configuration { system } => with_dynamics(ctx, &system, |d| {
            Ok(json(&serde_json::json!({ "configuration": analysis::configuration_of(d)? })))
        })?,
        Command::Modulus { system } => with_dynamics(ctx, &system, |d| Ok(json(&analysis::modulus_of(d)?)))?,
        Command::FoldMap { system, points, mobius } => with_dynamics(ctx, &system, |d| {
            let rows: Vec<FoldSample> = points
                .iter()
                .map(|&x| {
                    let r = if mobius {
                        maps::mobius_fold_line(d, x).map(|v| (v, None))
                    } else {
                        maps::fold_line(d, x).map(|(v, real)| (v, Some(real)))
                    };
                    match r {
                        Ok((v, real)) => FoldSample { x, image: Some(v), real_orbit: real, error: None },
                        Err(e) => FoldSample { x, image: None, real_orbit: None, error: Some(e.kind()) },
                    }
                })
                .collect();
            Ok(match fmt(Format::Json) {
                Format::Json => json(&rows),
                Format::Csv => {
                    let mut out = String::from("x,image,real_orbit,error\n");
                    for r in &rows {
                        let real = r.real_orbit.map(|b| b.to_string()).unwrap_or_default();
                        out.push_str(&format!("{},{},{real},{}\n", r.x, opt(r.image), r.error.unwrap_or("")));
                    }
                    out
                }
            })
        })?,
        Command::Manifolds { system, kind, arclength } => with_dynamics(ctx, &system, |d| {
            Ok(curve_output(d, &analysis::manifold_of(d, kind, arclength)?, fmt(Format::Csv)))
        })?,
        Command::IterateFoldLine { system, n, radius, clip, s0_file } => {
            let s0 = match s0_file {
                Some(path) => {
                    let text = std::fs::read_to_string(&path)
                        .map_err(|e| Failure::Config("ConfigError", format!("cannot read {}: {e}", path.display())))?;
                    Some(PlanarCurve::from_csv(&text, "S0")?)
                }
                None => None,
            };
            let opts = FoldIterationOptions { n, radius, clip, s0 };
            with_dynamics(ctx, &system, |d| {
                let report = analysis::iterate_of(d, &opts)?;
                Ok(match fmt(Format::Json) {
                    Format::Json => json(&report),
                    Format::Csv => {
                        let mut out = String::from("n,dist_to_wu,tangent_angle,crossing_offset,sliding_offset\n");
                        for k in 0..report.dist_to_wu.len() {
                            let off = |v: &Vec<f64>| if k == 0 { None } else { v.get(k - 1).copied() };
                            out.push_str(&format!(
                                "{k},{},{},{},{}\n",
                                report.dist_to_wu[k],
                                report.tangent_angles[k],
                                opt(off(&report.crossing_offsets)),
                                opt(off(&report.sliding_offsets))
                            ));
                        }
                        out
                    }
                })
            })?
        }
        Command::Basin { system, arclength } => {
            with_dynamics(ctx, &system, |d| Ok(curve_output(d, &analysis::basin_of(d, arclength)?, fmt(Format::Csv))))?
        }
        Command::Scan { family, gamma_range, steps, jobs } => {
            let fam = tuned_family(&family, &ctx.tol)?;
            let rows = bifurcation::scan_family(&*fam, &bifurcation::gamma_grid(gamma_range.0, gamma_range.1, steps), jobs)?;
            match fmt(Format::Csv) {
                Format::Csv => bifurcation::rows_to_csv(&rows),
                Format::Json => json(&rows),
            }
        }
        Command::LocateLoop { family, bracket } => {
            let fam = tuned_family(&family, &ctx.tol)?;
            json(&bifurcation::locate_loop(&*fam, bracket)?)
        }
    })
}

fn tuned_family(spec: &str, tol: &Tolerances) -> Run<Box<fsim_core::scenarios::Family>> {
    let fam = family_from_uri(spec)?;
    fam(0.0)?;
    let tol = tol.clone();
    Ok(Box::new(move |g| fam(g).map(|s| s.with_tolerances(tol.clone()))))
}

fn fail(kind: &str, message: &str, code: u8) -> ExitCode {
    eprintln!("{}", serde_json::json!({ "error": kind, "message": message }));
    ExitCode::from(code)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{e}");
                return ExitCode::SUCCESS;
            }
            return fail("ConfigError", e.to_string().trim_end(), 1);
        }
    };
    let tol = match Tolerances::from_env() {
        Ok(t) => t,
        Err(m) => return fail("ConfigError", &m, 1),
    };
    let output = cli.output.clone();
    match run(cli, &Context { tol }) {
        Ok(text) => match output {
            Some(path) => match std::fs::write(&path, text) {
                Ok(()) => ExitCode::SUCCESS,
                Err(e) => fail("ConfigError", &format!("cannot write {}: {e}", path.display()), 1),
            },
            None => {
                print!("{text}");
                ExitCode::SUCCESS
            }
        },
        Err(Failure::Config(kind, m)) => fail(kind, &m, 1),
        Err(Failure::Domain(e)) => fail(e.kind(), &e.to_string(), 2),
    }
}
