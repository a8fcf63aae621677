//! Convergence studies on rectangles with manufactured solutions.

use std::f64::consts::PI;
use std::fmt::Write as _;
use std::io::Write;

use rayon::prelude::*;

use crate::dofs::DofMap;
use crate::error::{Error, Result};
use crate::exact::{ExactBundle, Factor, Pde, Separable};
use crate::fem::{map_affine, quad_triangle};
use crate::mesh::{BcLayout, Mesh};
use crate::plate::{self, PlateBc, PlateLayout};
use crate::poisson::{self, PoissonLayout};
use crate::solver::{assemble_global, energy_residual, solve_spd_with, CondensedLocal, SolveMethod};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Problem {
    Poisson,
    Plate,
}

/// `Dirichlet` means `u = 0` (Poisson) or clamped (plate) on the whole
/// boundary; `Mixed` keeps that only on `x = 0` and `x = R1`, with
/// homogeneous Neumann (Poisson) or free (plate) conditions elsewhere.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BcKind {
    Dirichlet,
    Mixed,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NormKind {
    Standard,
    Scaled,
}

#[derive(Clone, Debug, PartialEq)]
pub struct StudyConfig {
    pub problem: Problem,
    pub gamma: f64,
    pub r1: f64,
    pub r2: f64,
    pub bc: BcKind,
    pub norm: NormKind,
    pub d_override: Option<f64>,
    pub levels: usize,
    pub ny0: usize,
    pub solver: SolveMethod,
}

impl Default for StudyConfig {
    fn default() -> Self {
        StudyConfig {
            problem: Problem::Poisson,
            gamma: 0.0,
            r1: 1.0,
            r2: 1.0,
            bc: BcKind::Dirichlet,
            norm: NormKind::Scaled,
            d_override: None,
            levels: 4,
            ny0: 2,
            solver: SolveMethod::Direct,
        }
    }
}

impl StudyConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        if !(self.r1 > 0.0 && self.r1.is_finite() && self.r2 > 0.0 && self.r2.is_finite()) {
            return bad(format!("domain sizes must be positive, got {} x {}", self.r1, self.r2));
        }
        if !(self.gamma >= 0.0 && self.gamma.is_finite()) {
            return bad(format!("gamma must be non-negative, got {}", self.gamma));
        }
        if self.problem == Problem::Plate && self.gamma != 0.0 {
            return bad("gamma applies to the Poisson problem only".into());
        }
        if self.levels == 0 || self.ny0 == 0 {
            return bad("levels and ny0 must be at least 1".into());
        }
        match self.d_override {
            Some(d) if !(d > 0.0 && d.is_finite()) => return bad(format!("d must be positive, got {d}")),
            Some(_) if self.norm == NormKind::Standard => {
                return bad("--d only applies to the scaled norm (the standard norm has d = 1)".into())
            }
            _ => {}
        }
        Ok(())
    }

    /// Flags reproducing this configuration on the command line.
    pub fn flag_echo(&self) -> String {
        let mut s = format!(
            "--problem {} --gamma {:?} --r1 {:?} --r2 {:?} --bc {} --norm {}",
            match self.problem {
                Problem::Poisson => "poisson",
                Problem::Plate => "plate",
            },
            self.gamma,
            self.r1,
            self.r2,
            match self.bc {
                BcKind::Dirichlet => "dirichlet",
                BcKind::Mixed => "mixed",
            },
            match self.norm {
                NormKind::Standard => "standard",
                NormKind::Scaled => "scaled",
            },
        );
        if let Some(d) = self.d_override {
            let _ = write!(s, " --d {d:?}");
        }
        let _ = write!(s, " --levels {} --ny0 {}", self.levels, self.ny0);
        if self.solver == SolveMethod::Pcg {
            s.push_str(" --solver pcg");
        }
        s
    }

    pub fn layout(&self) -> BcLayout {
        match self.bc {
            BcKind::Dirichlet => BcLayout::AllDirichlet,
            BcKind::Mixed => BcLayout::LeftRightDirichlet,
        }
    }
}

/// Scaling length of the test norm.
pub fn pick_d(cfg: &StudyConfig) -> f64 {
    match (cfg.norm, cfg.d_override, cfg.bc) {
        (NormKind::Standard, _, _) => 1.0,
        (NormKind::Scaled, Some(d), _) => d,
        (NormKind::Scaled, None, BcKind::Dirichlet) => cfg.r1.min(cfg.r2),
        (NormKind::Scaled, None, BcKind::Mixed) => cfg.r1,
    }
}

pub fn exact_bundle(cfg: &StudyConfig) -> ExactBundle {
    let (a1, a2) = (PI / cfg.r1, PI / cfg.r2);
    match (cfg.problem, cfg.bc) {
        (Problem::Poisson, BcKind::Dirichlet) => ExactBundle::poisson(Separable::new(Factor::Sine(a1), Factor::Sine(a2)), cfg.gamma),
        (Problem::Poisson, BcKind::Mixed) => ExactBundle::poisson(Separable::new(Factor::Sine(a1), Factor::One), cfg.gamma),
        (Problem::Plate, BcKind::Dirichlet) => {
            ExactBundle::plate(Separable::new(Factor::SineSquared(a1), Factor::SineSquared(a2)))
        }
        (Problem::Plate, BcKind::Mixed) => ExactBundle::plate(Separable::new(Factor::SineSquared(a1), Factor::One)),
    }
}

/// A solved discrete problem on one mesh.
pub struct LevelSolve {
    pub mesh: Mesh,
    pub dofs: DofMap,
    pub locals: Vec<CondensedLocal>,
    /// free unknowns
    pub x: Vec<f64>,
    pub d: f64,
}

pub fn study_mesh(cfg: &StudyConfig, ny: usize) -> Result<Mesh> {
    Mesh::rectangle(cfg.r1, cfg.r2, ny)?.classify_boundary(cfg.layout())
}

pub fn dof_map(cfg: &StudyConfig, mesh: &Mesh) -> Result<DofMap> {
    match (cfg.problem, cfg.bc) {
        (Problem::Poisson, _) => poisson::dof_map_poisson(mesh),
        (Problem::Plate, BcKind::Dirichlet) => plate::dof_map_plate(mesh, PlateBc::Clamped),
        (Problem::Plate, BcKind::Mixed) => plate::dof_map_plate(mesh, PlateBc::MixedFree),
    }
}

pub fn condensed(cfg: &StudyConfig, mesh: &Mesh, d: f64) -> Result<Vec<CondensedLocal>> {
    let exact = exact_bundle(cfg);
    let f = move |x: [f64; 2]| exact.f(x);
    match cfg.problem {
        Problem::Poisson => poisson::condensed_systems(mesh, d, cfg.gamma, &f),
        Problem::Plate => plate::condensed_systems(mesh, d, &f),
    }
}

/// Assembles and solves on the structured mesh with `ny` rows of cells.
pub fn solve_level(cfg: &StudyConfig, ny: usize) -> Result<LevelSolve> {
    cfg.validate()?;
    let d = pick_d(cfg);
    let mesh = study_mesh(cfg, ny)?;
    let dofs = dof_map(cfg, &mesh)?;
    let locals = condensed(cfg, &mesh, d)?;
    let system = assemble_global(&dofs, &locals)?;
    let x = solve_spd_with(&system, cfg.solver)?;
    Ok(LevelSolve { mesh, dofs, locals, x, d })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Errors {
    /// `‖u - u_h‖`
    pub u: f64,
    /// `‖σ - σ_h‖` (Poisson) or `‖M - M_h‖` (plate)
    pub flux: f64,
    /// residual in the dual test norm
    pub energy: f64,
}

/// Field errors by degree-10 quadrature and the energy residual.
pub fn compute_errors(mesh: &Mesh, dofs: &DofMap, locals: &[CondensedLocal], x: &[f64], exact: &ExactBundle) -> Result<Errors> {
    let raw = dofs.expand(x)?;
    let rule = quad_triangle(10)?;
    let per_element: Vec<(f64, f64)> = (0..mesh.num_triangles())
        .into_par_iter()
        .map(|t| -> Result<(f64, f64)> {
            let map = map_affine(mesh, t)?;
            let (mut eu, mut ef) = (0.0, 0.0);
            match exact.pde {
                Pde::Poisson => {
                    let lay = PoissonLayout::of(mesh);
                    let uh = raw[lay.u(t)];
                    let sh = [raw[lay.sigma(t, 0)], raw[lay.sigma(t, 1)]];
                    for (xi, w) in rule.iter() {
                        let p = map.map(*xi);
                        let w = w * map.det;
                        let g = exact.grad(p);
                        eu += w * (exact.value(p) - uh).powi(2);
                        ef += w * ((g[0] - sh[0]).powi(2) + (g[1] - sh[1]).powi(2));
                    }
                }
                Pde::Plate => {
                    let lay = PlateLayout::of(mesh);
                    let uh = raw[lay.u(t)];
                    let mh = [raw[lay.moment(t, 0)], raw[lay.moment(t, 1)], raw[lay.moment(t, 2)]];
                    for (xi, w) in rule.iter() {
                        let p = map.map(*xi);
                        let w = w * map.det;
                        let m = exact.moment(p);
                        eu += w * (exact.value(p) - uh).powi(2);
                        ef += w * ((m[0] - mh[0]).powi(2) + 2.0 * (m[1] - mh[1]).powi(2) + (m[2] - mh[2]).powi(2));
                    }
                }
            }
            Ok((eu, ef))
        })
        .collect::<Result<_>>()?;
    let (_, energy) = energy_residual(dofs, locals, x)?;
    Ok(Errors {
        u: per_element.iter().map(|e| e.0).sum::<f64>().sqrt(),
        flux: per_element.iter().map(|e| e.1).sum::<f64>().sqrt(),
        energy,
    })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StudyRow {
    pub dof_dpg: usize,
    pub err_u: f64,
    pub err_sigma: f64,
    pub err: f64,
}

pub fn run_level(cfg: &StudyConfig, level: usize) -> Result<StudyRow> {
    let ny = cfg.ny0 << level;
    let run = || -> Result<StudyRow> {
        let s = solve_level(cfg, ny)?;
        let e = compute_errors(&s.mesh, &s.dofs, &s.locals, &s.x, &exact_bundle(cfg))?;
        Ok(StudyRow { dof_dpg: s.dofs.num_free(), err_u: e.u, err_sigma: e.flux, err: e.energy })
    };
    run().map_err(|e| match e {
        Error::Config(_) => e,
        other => Error::Level { level, source: Box::new(other) },
    })
}

/// One row per level, `ny = ny0 * 2^level`.
pub fn run_study(cfg: &StudyConfig) -> Result<Vec<StudyRow>> {
    cfg.validate()?;
    (0..cfg.levels).map(|level| run_level(cfg, level)).collect()
}

pub const CSV_COLUMNS: &str = "dofDPG,errU,errSigma,err";

pub fn csv_header(cfg: &StudyConfig) -> String {
    format!("# dpg-lock study: {} ; dofDPG counts free unknowns after boundary elimination", cfg.flag_echo())
}

pub fn write_csv<W: Write>(cfg: &StudyConfig, rows: &[StudyRow], mut w: W) -> std::io::Result<()> {
    writeln!(w, "{}", csv_header(cfg))?;
    writeln!(w, "{CSV_COLUMNS}")?;
    for r in rows {
        writeln!(w, "{},{:?},{:?},{:?}", r.dof_dpg, r.err_u, r.err_sigma, r.err)?;
    }
    Ok(())
}

/// Data rows of a study CSV (comment lines and the column header skipped).
pub fn parse_csv(text: &str) -> Result<Vec<StudyRow>> {
    let bad = |line: &str| Error::Config(format!("malformed CSV row: {line}"));
    text.lines()
        .filter(|l| !l.starts_with('#') && !l.trim().is_empty() && *l != CSV_COLUMNS)
        .map(|line| {
            let f: Vec<&str> = line.split(',').collect();
            if f.len() != 4 {
                return Err(bad(line));
            }
            let num = |s: &str| s.trim().parse::<f64>().map_err(|_| bad(line));
            Ok(StudyRow {
                dof_dpg: f[0].trim().parse().map_err(|_| bad(line))?,
                err_u: num(f[1])?,
                err_sigma: num(f[2])?,
                err: num(f[3])?,
            })
        })
        .collect()
}

/// Least-squares slope of `log y` against `log x`.
pub fn loglog_slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len().min(y.len()) as f64;
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let cov: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let var: f64 = lx.iter().map(|a| (a - mx).powi(2)).sum();
    cov / var
}
