//! One-parameter scans through a loop: continuation of the return-map fixed
//! point, detection of crossing and sliding cycles, and location of the loop
//! parameter as the root of ζ.

use crate::analysis::fixed_point_1d_band;
use crate::error::{Error, Result};
use crate::maps::{fixed_point, fold_line, jacobian_at, FilippovReturn, ReturnDynamics};
use crate::numeric::brent;
use crate::scenarios::Family;
use crate::Pt2;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Stability {
    Attracting,
    Repelling,
    Saddle,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", content = "stability")]
pub enum Cycle {
    CrossingLimitCycle(Stability),
    SlidingCycle(Stability),
    Loop,
    None,
}

impl Cycle {
    pub fn type_name(&self) -> &'static str {
        match self {
            Cycle::CrossingLimitCycle(_) => "CrossingLimitCycle",
            Cycle::SlidingCycle(_) => "SlidingCycle",
            Cycle::Loop => "Loop",
            Cycle::None => "None",
        }
    }

    pub fn stability(&self) -> Option<Stability> {
        match self {
            Cycle::CrossingLimitCycle(s) | Cycle::SlidingCycle(s) => Some(*s),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FoldFixedPoint {
    pub x: f64,
    pub derivative: f64,
    pub in_domain: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanRow {
    pub gamma: f64,
    pub zeta: f64,
    /// Chart coordinates.
    pub fixed_point: [f64; 2],
    pub fp_region: String,
    pub cycle: Cycle,
    pub alpha_est: f64,
    pub fold_fp: Option<FoldFixedPoint>,
    /// Error kind when the row could not be computed.
    pub error: Option<String>,
}

pub const CSV_HEADER: &str = "gamma,zeta,fp_x,fp_y,region,cycle_type,stability,alpha_est,fold_fp_x,in_domain";

impl ScanRow {
    fn lost(gamma: f64, e: &Error) -> Self {
        Self {
            gamma,
            zeta: f64::NAN,
            fixed_point: [f64::NAN; 2],
            fp_region: "Unknown".into(),
            cycle: Cycle::None,
            alpha_est: f64::NAN,
            fold_fp: None,
            error: Some(e.kind().into()),
        }
    }

    pub fn to_csv(&self) -> String {
        let stab = self.cycle.stability().map(|s| format!("{s:?}")).unwrap_or_default();
        let (fx, dom) = match &self.fold_fp {
            Some(f) => (format!("{:?}", f.x), f.in_domain.to_string()),
            None => (String::new(), String::new()),
        };
        format!(
            "{:?},{:?},{:?},{:?},{},{},{},{:?},{},{}",
            self.gamma,
            self.zeta,
            self.fixed_point[0],
            self.fixed_point[1],
            self.fp_region,
            self.cycle.type_name(),
            stab,
            self.alpha_est,
            fx,
            dom
        )
    }
}

pub fn rows_to_csv(rows: &[ScanRow]) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for r in rows {
        out.push_str(&r.to_csv());
        out.push('\n');
    }
    out
}

#[derive(Debug, Clone, Copy)]
struct Seed {
    fp_chart: Pt2,
    fold_x: f64,
}

fn solve(family: &Family, gamma: f64, seed: &Seed) -> Result<(FilippovReturn, Pt2)> {
    let sys = family(gamma)?;
    let r = FilippovReturn::new(&sys)?;
    let q = r.from_chart(&seed.fp_chart)?;
    let fp = fixed_point(&r, &q)?;
    Ok((r, fp))
}

/// Sequential continuation: warm-started Newton with step halving.
fn continuation(family: &Family, gammas: &[f64]) -> Vec<Result<Seed>> {
    let mut seed = Seed { fp_chart: Pt2::zeros(), fold_x: 0.0 };
    let mut last_gamma: Option<f64> = None;
    let mut out = Vec::with_capacity(gammas.len());
    for &g in gammas {
        let attempt = |from: f64, to: f64, seed: &Seed| -> Result<Seed> {
            let mut cur = from;
            let mut s = *seed;
            let mut step = to - from;
            let mut halvings = 0;
            while (to - cur).abs() > 0.0 {
                let target = if (to - cur).abs() <= step.abs() { to } else { cur + step };
                match solve(family, target, &s) {
                    Ok((r, fp)) => {
                        let fold_x = fixed_point_1d_band(&|x| fold_line(&r, x).map(|v| v.0), s.fold_x, 1e-3)
                            .map(|f| f.x)
                            .unwrap_or(s.fold_x);
                        s = Seed { fp_chart: r.to_chart(&fp)?, fold_x };
                        cur = target;
                    }
                    Err(e) => {
                        halvings += 1;
                        if halvings > 6 {
                            return Err(e);
                        }
                        step *= 0.5;
                    }
                }
            }
            Ok(s)
        };
        let from = last_gamma.unwrap_or(g);
        let res = attempt(from, g, &seed).or_else(|_| attempt(g, g, &Seed { fp_chart: Pt2::zeros(), fold_x: 0.0 }));
        match res {
            Ok(s) => {
                seed = s;
                last_gamma = Some(g);
                out.push(Ok(s));
            }
            Err(_) => out.push(Err(Error::ContinuationLost { gamma: g })),
        }
    }
    out
}

fn dominant_eigenvalue(j: &crate::Mat2) -> f64 {
    let tr = j.trace();
    let disc = (0.25 * tr * tr - j.determinant()).max(0.0).sqrt();
    if tr >= 0.0 {
        0.5 * tr + disc
    } else {
        0.5 * tr - disc
    }
}

fn row(family: &Family, gamma: f64, seed: &Seed) -> Result<ScanRow> {
    let (r, fp) = solve(family, gamma, seed)?;
    let tol = r.sys.tol.clone();
    let zeta = fp.y;
    let region = r.region(&fp);
    let alpha_est = dominant_eigenvalue(&jacobian_at(&r, &fp, 1e-5)?);
    let fold_fp = fixed_point_1d_band(&|x| fold_line(&r, x).map(|v| v.0), seed.fold_x, tol.saddle_node)
        .and_then(|f| Ok(FoldFixedPoint { x: f.x, derivative: f.derivative, in_domain: fold_line(&r, f.x)?.1 }))
        .ok();
    let cycle = if zeta.abs() < tol.loop_zeta {
        Cycle::Loop
    } else if region == crate::geometry::SigmaKind::Crossing {
        Cycle::CrossingLimitCycle(if alpha_est.abs() < 1.0 { Stability::Attracting } else { Stability::Saddle })
    } else if let Some(f) = fold_fp.filter(|f| f.in_domain) {
        Cycle::SlidingCycle(if f.derivative.abs() < 1.0 { Stability::Attracting } else { Stability::Repelling })
    } else {
        Cycle::None
    };
    let c = r.to_chart(&fp)?;
    Ok(ScanRow {
        gamma,
        zeta,
        fixed_point: [c.x, c.y],
        fp_region: region.name().into(),
        cycle,
        alpha_est,
        fold_fp,
        error: None,
    })
}

/// Scans `family` over `gammas`. A sequential continuation pass produces
/// warm starts; rows are then computed on a pool of `jobs` threads. Rows
/// come back sorted by γ.
pub fn scan_family(family: &Family, gammas: &[f64], jobs: usize) -> Result<Vec<ScanRow>> {
    let seeds = continuation(family, gammas);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| Error::DomainViolation(format!("thread pool: {e}")))?;
    let mut rows: Vec<ScanRow> = pool.install(|| {
        gammas
            .par_iter()
            .zip(seeds.par_iter())
            .map(|(&g, s)| match s {
                Ok(seed) => row(family, g, seed).unwrap_or_else(|e| ScanRow::lost(g, &e)),
                Err(e) => ScanRow::lost(g, e),
            })
            .collect()
    });
    rows.sort_by(|a, b| a.gamma.total_cmp(&b.gamma));
    Ok(rows)
}

/// `steps` evenly spaced values over `[a, b]`.
pub fn gamma_grid(a: f64, b: f64, steps: usize) -> Vec<f64> {
    match steps {
        0 => Vec::new(),
        1 => vec![a],
        n => (0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect(),
    }
}

/// ζ of the family member at `gamma`, from a fixed point seeded at the
/// chart origin.
pub fn zeta(family: &Family, gamma: f64) -> Result<f64> {
    let (_, fp) = solve(family, gamma, &Seed { fp_chart: Pt2::zeros(), fold_x: 0.0 })?;
    Ok(fp.y)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LoopLocation {
    pub gamma_star: f64,
    pub dzeta_dgamma: f64,
}

/// Values of |ζ| at or below this are indistinguishable from zero.
const ZETA_FLOOR: f64 = 1e-9;

/// Root of γ ↦ ζ in `bracket` by Brent's method, with dζ/dγ there.
pub fn locate_loop(family: &Family, bracket: (f64, f64)) -> Result<LoopLocation> {
    let (lo, hi) = bracket;
    let zl = zeta(family, lo)?;
    let zh = zeta(family, hi)?;
    if zl.abs() <= ZETA_FLOOR || zh.abs() <= ZETA_FLOOR || zl * zh > 0.0 {
        return Err(Error::NoSignChange { lo, hi });
    }
    let err = std::cell::Cell::new(None);
    let f = |g: f64| match zeta(family, g) {
        Ok(z) => z,
        Err(e) => {
            err.set(Some(e));
            f64::NAN
        }
    };
    let found = brent(f, lo, hi, zl, zh, 1e-13, 1e-10, 200);
    if let Some(e) = err.take() {
        return Err(e);
    }
    let (gamma_star, _) = found.ok_or(Error::NoSignChange { lo, hi })?;
    let h = 1e-3 * (hi - lo).abs().min(1.0);
    let derivative = (zeta(family, gamma_star + h)? - zeta(family, gamma_star - h)?) / (2.0 * h);
    if derivative.abs() <= 1e-4 {
        return Err(Error::DegenerateFamily { derivative });
    }
    Ok(LoopLocation { gamma_star, dzeta_dgamma: derivative })
}
