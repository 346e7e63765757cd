use lapdecay::lattice::RadialBoundary;
use lapdecay::resolvent::{lambda_sweep, line_problem, low_frequency_sweep, BoundProfile, ResolventQuery, SweepTarget};

use super::{norm_options, sector_stack};
use crate::artifact::{float, floats, Outcome, Table};
use crate::config::{ExperimentConfig, Geometry, SweepMode, WeightSpec};
use crate::error::{CliError, Context};

fn profile_table(p: &BoundProfile) -> Table {
    let mut t = Table::new(&["lambda", "norm", "norm_half_epsilon", "scaled", "stability", "sectors_used"]);
    let scaled = p.scaled();
    for i in 0..p.lambdas.len() {
        t.push(vec![
            p.lambdas[i].into(),
            p.norms[i].into(),
            p.norms_half_eps[i].into(),
            scaled[i].into(),
            p.stability[i].into(),
            p.sectors_used[i].into(),
        ]);
    }
    t
}

pub fn resolvent_sweep(cfg: &ExperimentConfig) -> Result<Outcome, CliError> {
    let s = &cfg.sweep;
    let lambdas = s.grid();
    let opts = norm_options(cfg);
    match s.mode {
        SweepMode::High => {
            let template = ResolventQuery { alpha: s.alpha, beta: s.beta, ..ResolventQuery::new(1.0, s.epsilon, s.weight.weight()) };
            let prof = match cfg.grid.geometry {
                Geometry::Line => {
                    let (v, b) = (cfg.fields.v.profile(), cfg.fields.b.profile());
                    let lp = line_problem(cfg.grid.n, cfg.grid.l, &|x: f64| v.eval(x.abs()), &|x: f64| b.eval(x.abs()), cfg.fields.c)
                        .during("line operator")?;
                    lambda_sweep(SweepTarget::Operator(&lp.op), &lambdas, &template, &opts).during("weighted resolvent sweep")?
                }
                _ => {
                    let st = sector_stack(cfg, RadialBoundary::Outgoing)?;
                    lambda_sweep(SweepTarget::Sectors(&st), &lambdas, &template, &opts).during("weighted resolvent sweep")?
                }
            };
            let slope = prof.loglog_slope().unwrap_or(f64::NAN);
            let mut out = Outcome::new("weighted-resolvent-high-frequency", profile_table(&prof));
            out.note("fitted_constant", float(prof.fitted_constant));
            out.note("scaled_profile", floats(&prof.scaled()));
            out.note("loglog_slope", float(slope));
            out.note("max_stability", float(prof.max_stability()));
            out.note("stability_pass", prof.max_stability() < 0.02);
            out.note("reached_tol", float(prof.reached_tol));
            out.tolerance("lanczos", s.tol);
            out.tolerance("epsilon_halving", 0.02);
            Ok(out)
        }
        SweepMode::Low => {
            let WeightSpec::Poly { s: exponent } = s.weight else {
                return Err(CliError::Config("low-frequency sweep needs a polynomial weight".into()));
            };
            let st = sector_stack(cfg, RadialBoundary::Outgoing)?;
            let prof = low_frequency_sweep(&st, exponent, &lambdas, s.epsilon, &opts).during("low-frequency sweep")?;
            let mut out = Outcome::new("weighted-resolvent-low-frequency", profile_table(&prof));
            out.note("variation", float(prof.variation()));
            out.note("bounded_pass", prof.variation() < 0.1);
            out.note("increments", floats(&prof.norms.windows(2).map(|w| w[1] - w[0]).collect::<Vec<_>>()));
            out.note("max_stability", float(prof.max_stability()));
            out.tolerance("variation", 0.1);
            out.tolerance("lanczos", s.tol);
            Ok(out)
        }
    }
}
