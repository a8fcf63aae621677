use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};
use dpg_lock::solver::SolveMethod;
use dpg_lock::study::{run_study, write_csv, BcKind, NormKind, Problem, StudyConfig};

#[derive(Clone, Copy, Debug, ValueEnum)]
enum ProblemArg {
    Poisson,
    Plate,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum BcArg {
    Dirichlet,
    Mixed,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum NormArg {
    Standard,
    Scaled,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum SolverArg {
    Direct,
    Pcg,
}

/// Convergence study for ultraweak DPG with scaled test norms on
/// (0,R1)x(0,R2). Writes one CSV row per refinement level.
#[derive(Parser, Debug)]
#[command(name = "dpg-lock", version, allow_negative_numbers = true)]
struct Args {
    #[arg(long, value_enum)]
    problem: ProblemArg,
    /// reaction coefficient (Poisson only)
    #[arg(long, default_value_t = 0.0)]
    gamma: f64,
    #[arg(long)]
    r1: f64,
    #[arg(long)]
    r2: f64,
    /// dirichlet: whole boundary (clamped plate); mixed: only x=0 and x=R1
    #[arg(long, value_enum, default_value = "dirichlet")]
    bc: BcArg,
    #[arg(long, value_enum, default_value = "scaled")]
    norm: NormArg,
    /// scaling length, overriding the domain-based choice (scaled norm only)
    #[arg(long)]
    d: Option<f64>,
    #[arg(long, default_value_t = 4)]
    levels: usize,
    /// cell rows of the coarsest mesh
    #[arg(long, default_value_t = 2)]
    ny0: usize,
    #[arg(long, value_enum, default_value = "direct")]
    solver: SolverArg,
    /// output CSV (stdout if omitted)
    #[arg(long)]
    out: Option<PathBuf>,
}

impl Args {
    fn config(&self) -> StudyConfig {
        StudyConfig {
            problem: match self.problem {
                ProblemArg::Poisson => Problem::Poisson,
                ProblemArg::Plate => Problem::Plate,
            },
            gamma: self.gamma,
            r1: self.r1,
            r2: self.r2,
            bc: match self.bc {
                BcArg::Dirichlet => BcKind::Dirichlet,
                BcArg::Mixed => BcKind::Mixed,
            },
            norm: match self.norm {
                NormArg::Standard => NormKind::Standard,
                NormArg::Scaled => NormKind::Scaled,
            },
            d_override: self.d,
            levels: self.levels,
            ny0: self.ny0,
            solver: match self.solver {
                SolverArg::Direct => SolveMethod::Direct,
                SolverArg::Pcg => SolveMethod::Pcg,
            },
        }
    }
}

fn main() -> ExitCode {
    let args = match Args::try_parse() {
        Ok(a) => a,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let cfg = args.config();
    if let Err(e) = cfg.validate() {
        eprintln!("error: {e}");
        return ExitCode::from(1);
    }
    let rows = match run_study(&cfg) {
        Ok(rows) => rows,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(if e.is_solver_failure() { 2 } else { 1 });
        }
    };
    let written = match &args.out {
        Some(path) => File::create(path).and_then(|f| {
            let mut w = BufWriter::new(f);
            write_csv(&cfg, &rows, &mut w)?;
            w.flush()
        }),
        None => write_csv(&cfg, &rows, io::stdout().lock()),
    };
    match written {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            match &args.out {
                Some(path) => eprintln!("error: writing {}: {e}", path.display()),
                None => eprintln!("error: {e}"),
            }
            ExitCode::from(1)
        }
    }
}
