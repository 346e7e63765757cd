use lapdecay::lattice::{RadialGrid, Sign};
use lapdecay::linalg::rng;
use lapdecay::resolvent::{carleman_ratio, conjugated_resolvent_check, CarlemanVariant};
use lapdecay::weights::{check_weight_inequalities, inequality_grid, CarlemanParams};
use rand::Rng;

use super::norm_options;
use crate::artifact::{float, floats, Cell, Outcome, Table};
use crate::config::ExperimentConfig;
use crate::error::{CliError, Context};

/// Random interior point of the admissible exponent set.
fn random_params(r: &mut impl Rng) -> lapdecay::Result<CarlemanParams<f64>> {
    let s: f64 = r.random_range(0.55..0.95);
    let (lo, hi) = (s - 0.5, 2.0 * s / 3.0);
    let ell = lo + (hi - lo) * r.random_range(0.2..0.95);
    let kappa = (2.0 * s - 1.0).min(1.0 - ell) * r.random_range(0.05..0.95);
    CarlemanParams::new(s, ell, kappa, r.random_range(0.5..8.0), r.random_range(1.0..3.0))
}

fn spread(v: &[f64]) -> f64 {
    let hi = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let lo = v.iter().cloned().fold(f64::INFINITY, f64::min);
    hi / lo
}

pub fn carleman_verify(cfg: &ExperimentConfig) -> Result<Outcome, CliError> {
    let c = &cfg.carleman;
    let mut table = Table::new(&["block", "index", "tau", "lambda", "theta", "quantity", "value"]);
    let nan = f64::NAN;
    let row = |block: &str, i: usize, tau: f64, lambda: f64, theta: f64, q: &str, v: f64| -> Vec<Cell> {
        vec![block.into(), i.into(), tau.into(), lambda.into(), theta.into(), q.into(), v.into()]
    };

    // pointwise weight inequalities on random parameter sets, and under A -> 2A
    let mut r = rng(cfg.output.seed);
    let mut min_margin = f64::INFINITY;
    let mut worst_doubling: f64 = 1.0;
    let mut all_finite = true;
    for i in 0..c.param_samples {
        let p = random_params(&mut r).during("Carleman parameter sampling")?;
        let q = p.with_a(2.0 * p.a()).during("Carleman parameter sampling")?;
        let a = check_weight_inequalities(&p, &inequality_grid(p.a(), c.points, 1e-3, 50.0)).during("weight inequalities")?;
        let b = check_weight_inequalities(&q, &inequality_grid(q.a(), c.points, 1e-3, 50.0)).during("weight inequalities")?;
        min_margin = min_margin.min(a.inner_gap_margin).min(a.inner_growth_margin);
        min_margin = min_margin.min(b.inner_gap_margin).min(b.inner_growth_margin);
        for (x, y) in [(a.outer_gap_constant, b.outer_gap_constant), (a.outer_defect_constant, b.outer_defect_constant)] {
            all_finite &= x.is_finite() && y.is_finite();
            if x > 0.0 && y > 0.0 {
                worst_doubling = worst_doubling.max(x.max(y) / x.min(y));
            }
        }
        for (name, v) in [
            ("s", p.s),
            ("ell", p.ell),
            ("kappa", p.kappa),
            ("transition_radius", p.a()),
            ("inner_gap_margin", a.inner_gap_margin),
            ("inner_growth_margin", a.inner_growth_margin),
            ("outer_gap_constant", a.outer_gap_constant),
            ("outer_defect_constant", a.outer_defect_constant),
            ("outer_gap_constant_doubled", b.outer_gap_constant),
            ("outer_defect_constant_doubled", b.outer_defect_constant),
        ] {
            table.push(row("weights", i, p.tau, nan, nan, name, v));
        }
    }

    // ratio of the two sides of the Carleman estimate on random test functions
    let grid = RadialGrid::origin(c.n, c.r_max).during("Carleman grid")?;
    let mut maxima = vec![vec![0.0; c.lambdas.len()]; c.tau.len()];
    let mut best_dominates = true;
    for (i, &tau) in c.tau.iter().enumerate() {
        let p = CarlemanParams::new(c.s, c.ell_w, c.kappa, c.a0, tau).during("Carleman parameters")?;
        for (j, &lambda) in c.lambdas.iter().enumerate() {
            let st = carleman_ratio(&p, lambda, c.epsilon, Sign::Minus, c.trials, CarlemanVariant::Cutoff, &grid, cfg.output.seed)
                .during("Carleman ratio")?;
            maxima[i][j] = st.max;
            let best = st.best_constant.unwrap_or(f64::NAN);
            best_dominates &= best >= st.max * (1.0 - 1e-6);
            for (name, v) in [
                ("max_ratio", st.max),
                ("median_ratio", st.median),
                ("fitted_constant", st.fitted_constant),
                ("best_constant", best),
                ("degenerate", st.degenerate as f64),
            ] {
                table.push(row("ratio", i * c.lambdas.len() + j, tau, lambda, nan, name, v));
            }
        }
    }
    let tau_spread = (0..c.lambdas.len())
        .map(|j| spread(&maxima.iter().map(|r| r[j]).collect::<Vec<_>>()))
        .fold(1.0, f64::max);
    let lambda_spread = maxima.iter().map(|r| spread(r)).fold(1.0, f64::max);
    let joint_spread = spread(&maxima.concat());

    // conjugated resolvent scalings in theta
    let tau0 = c.tau.first().copied().unwrap_or(2.0);
    let p0 = CarlemanParams::new(c.s, c.ell_w, c.kappa, c.a0, tau0).during("Carleman parameters")?;
    let cgrid = RadialGrid::origin(c.conj_n, c.conj_r_max).during("conjugated resolvent grid")?;
    let rep = conjugated_resolvent_check(Some(p0), tau0, c.conj_lambda, c.conj_p, Sign::Minus, &cgrid, c.conj_floor, &norm_options(cfg))
        .during("conjugated resolvent")?;
    let names = ["dual_to_h1", "dual_to_l2", "l2_to_h1", "l2_to_l2"];
    for (k, (theta, norms)) in rep.thetas.iter().zip(&rep.norms).enumerate() {
        for (name, v) in names.iter().zip(norms) {
            table.push(row("conjugated", k, tau0, c.conj_lambda, *theta, name, *v));
        }
    }
    let targets = [f64::NAN, -1.0, -1.0, -2.0];
    let scaling_ok = (1..4).all(|k| (rep.exponents[k] - targets[k]).abs() <= 0.2);

    let mut out = Outcome::new("carleman-weight-and-conjugated-resolvent", table);
    out.note("weight_min_inner_margin", float(min_margin));
    out.note("weight_constants_finite", all_finite);
    out.note("weight_doubling_spread", float(worst_doubling));
    out.note("weights_pass", min_margin >= 0.0 && all_finite && worst_doubling <= 2.0);
    out.note("ratio_max", maxima.iter().map(|r| floats(r)).collect::<Vec<_>>());
    out.note("ratio_tau_spread", float(tau_spread));
    out.note("ratio_lambda_spread", float(lambda_spread));
    out.note("ratio_joint_spread", float(joint_spread));
    out.note("best_constant_dominates", best_dominates);
    out.note("ratio_pass", tau_spread <= 2.0 && lambda_spread <= 2.0);
    out.note("conjugated_theta0", float(rep.theta0));
    out.note("conjugated_exponents", floats(&rep.exponents));
    out.note("conjugated_exponent_targets", floats(&targets));
    out.note("conjugated_pass", scaling_ok);
    out.tolerance("weight_margin", 0.0);
    out.tolerance("doubling_spread", 2.0);
    out.tolerance("ratio_spread", 2.0);
    out.tolerance("exponent", 0.2);
    Ok(out)
}
