//! One function per subcommand, each returning a table and a summary.

mod carleman;
mod continuation;
mod cutoffs;
mod kernel;
mod sweep;
mod wave;

use lapdecay::lattice::{RadialBoundary, RadialGrid, SectorStack};
use lapdecay::resolvent::{exterior_ball_problem, line_problem, radial_problem, ContinuationProblem, NormOptions};

use crate::artifact::Outcome;
use crate::config::{ExperimentConfig, Geometry};
use crate::error::{CliError, Context};

pub const SUBCOMMANDS: [&str; 10] = [
    "carleman-verify",
    "resolvent-sweep",
    "kernel-check",
    "continue",
    "pole-scan",
    "deriv-bounds",
    "cutoff-build",
    "hs-check",
    "wave-decay",
    "hardy",
];

pub fn run(name: &str, cfg: &ExperimentConfig) -> Result<Outcome, CliError> {
    match name {
        "carleman-verify" => carleman::carleman_verify(cfg),
        "resolvent-sweep" => sweep::resolvent_sweep(cfg),
        "kernel-check" => kernel::kernel_check(cfg),
        "continue" => continuation::continue_table(cfg),
        "pole-scan" => continuation::pole_scan_map(cfg),
        "deriv-bounds" => continuation::deriv_bounds(cfg),
        "cutoff-build" => cutoffs::cutoff_build(cfg),
        "hs-check" => cutoffs::hs_check(cfg),
        "wave-decay" => wave::wave_decay(cfg),
        "hardy" => wave::hardy(cfg),
        other => Err(CliError::Config(format!("unknown subcommand '{other}'"))),
    }
}

fn norm_options(cfg: &ExperimentConfig) -> NormOptions {
    NormOptions { max_iter: cfg.sweep.max_iter, tol: cfg.sweep.tol, seed: cfg.output.seed }
}

fn radial_grid(cfg: &ExperimentConfig) -> Result<RadialGrid, CliError> {
    let g = &cfg.grid;
    match g.geometry {
        Geometry::Radial => RadialGrid::origin(g.n, g.l).during("radial grid"),
        Geometry::Exterior => RadialGrid::exterior(g.n, g.obstacle.unwrap_or(1.0), g.l).during("exterior grid"),
        Geometry::Line => Err(CliError::Config("this experiment needs a radial or exterior geometry".into())),
    }
}

fn sector_stack(cfg: &ExperimentConfig, boundary: RadialBoundary) -> Result<SectorStack, CliError> {
    let grid = radial_grid(cfg)?;
    SectorStack::build(cfg.grid.d, &cfg.fields.v.profile(), &grid, cfg.grid.nu_max, boundary).during("sector assembly")
}

/// Window problem for the continuation experiments.
fn continuation_problem(cfg: &ExperimentConfig) -> Result<ContinuationProblem, CliError> {
    let g = &cfg.grid;
    let c = cfg.fields.c;
    let v = cfg.fields.v.profile();
    match g.geometry {
        Geometry::Radial => {
            if g.d != 3 {
                return Err(CliError::Config("radial continuation is implemented for d = 3".into()));
            }
            radial_problem(g.n, g.l, &v, c).during("continuation problem")
        }
        Geometry::Line => {
            let b = cfg.fields.b.profile();
            line_problem(g.n, g.l, &|x: f64| v.eval(x.abs()), &|x: f64| b.eval(x.abs()), c).during("continuation problem")
        }
        Geometry::Exterior => {
            if g.d != 3 {
                return Err(CliError::Config("exterior continuation is implemented for d = 3".into()));
            }
            let k0 = cfg.continuation.ball_sites;
            if k0 == 0 {
                return Err(CliError::Config("continuation.ball_sites must be positive".into()));
            }
            let h = g.obstacle.unwrap_or(1.0) / (k0 as f64 - 0.5);
            let c_cfg = &cfg.continuation;
            exterior_ball_problem(k0, g.n, h, &v, c, c_cfg.eta_flat, c_cfg.eta_width).during("continuation problem")
        }
    }
}
