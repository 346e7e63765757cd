use faer::{c64, Mat};
use lapdecay::lattice::{Sign, Spectral};
use lapdecay::linalg::max_singular_value;
use lapdecay::resolvent::{
    derivative_bounds, pole_scan, scalar_derivative_bounds, square_well_bound_state, ContinuationState, ScanRegion,
};
use serde_json::json;

use super::continuation_problem;
use crate::artifact::{float, Outcome, Table};
use crate::config::{linear, ExperimentConfig, Geometry, ProfileSpec};
use crate::error::{CliError, Context};

fn state(cfg: &ExperimentConfig) -> Result<ContinuationState, CliError> {
    let [re, im] = cfg.continuation.anchor;
    ContinuationState::build(continuation_problem(cfg)?, c64::new(re, im)).during("continuation anchor")
}

fn rel(a: &Mat<c64>, b: &Mat<c64>) -> f64 {
    (a - b).norm_l2() / b.norm_l2()
}

pub fn continue_table(cfg: &ExperimentConfig) -> Result<Outcome, CliError> {
    let c = &cfg.continuation;
    let st = state(cfg)?;
    let mut table = Table::new(&["re_lambda", "im_lambda", "min_singular", "evaluator_norm", "reference_error"]);
    let (mut below, mut axis, mut strip) = (0.0f64, 0.0f64, f64::INFINITY);
    for &im in &c.im {
        for re in linear(c.re_min, c.re_max, c.points) {
            let l = c64::new(re, im);
            let smin = st.min_singular(l).during("continuation system")?;
            let value = st.evaluate(l).during("continued resolvent")?;
            let norm = max_singular_value(&value).during("continued resolvent")?;
            let err = if im < 0.0 {
                let e = rel(&value, &st.direct(Spectral::Continued(l)).during("direct solve")?);
                below = below.max(e);
                e
            } else if im == 0.0 {
                let a = st.direct(Spectral::Absorbing { lambda: re, epsilon: c.epsilon, sign: Sign::Minus }).during("direct solve")?;
                let b = st
                    .direct(Spectral::Absorbing { lambda: re, epsilon: c.epsilon / 2.0, sign: Sign::Minus })
                    .during("direct solve")?;
                let limit = Mat::from_fn(a.nrows(), a.ncols(), |i, j| b[(i, j)] * 2.0 - a[(i, j)]);
                let e = rel(&value, &limit);
                axis = axis.max(e);
                e
            } else {
                strip = strip.min(smin);
                f64::NAN
            };
            table.push(vec![re.into(), im.into(), smin.into(), norm.into(), err.into()]);
        }
    }
    let mut out = Outcome::new("analytic-continuation-of-weighted-resolvent", table);
    out.note("max_error_below_axis", float(below));
    out.note("max_error_on_axis", float(axis));
    out.note("min_singular_above_axis", float(strip));
    out.note("potential_nonnegative", cfg.fields.v.profile().is_nonnegative());
    out.note("pass", below < 1e-6 && axis < 1e-4 && !(strip <= 0.05));
    out.tolerance("below_axis", 1e-6);
    out.tolerance("on_axis", 1e-4);
    out.tolerance("pole_free_strip", 0.05);
    Ok(out)
}

/// Refined minima above this are edge or shoulder minima, not poles.
const CONVERGED: f64 = 1e-6;

pub fn pole_scan_map(cfg: &ExperimentConfig) -> Result<Outcome, CliError> {
    let c = &cfg.continuation;
    let st = state(cfg)?;
    let region = ScanRegion { re: (c.scan_re[0], c.scan_re[1]), im: (c.scan_im[0], c.scan_im[1]), n_re: c.scan_points[0], n_im: c.scan_points[1] };
    let map = pole_scan(&st, &region, c.threshold).during("pole scan")?;
    let mut table = Table::new(&["re_lambda", "im_lambda", "min_singular"]);
    for (i, &y) in map.im.iter().enumerate() {
        for (j, &x) in map.re.iter().enumerate() {
            table.push(vec![x.into(), y.into(), map.values[i][j].into()]);
        }
    }
    let mut out = Outcome::new("resonance-pole-map", table);
    let cands: Vec<_> = map
        .candidates
        .iter()
        .map(|p| {
            json!({
                "raw": [p.raw.re, p.raw.im],
                "lambda": [p.lambda.re, p.lambda.im],
                "min_singular": p.value,
                "converged": p.value < CONVERGED,
            })
        })
        .collect();
    out.note("candidates", cands);
    out.note("converged_candidates", map.candidates.iter().filter(|p| p.value < CONVERGED).count());
    out.note("min_value", float(map.min_value()));
    if let (Geometry::Radial, ProfileSpec::SquareWell { depth, radius }) = (cfg.grid.geometry, cfg.fields.v) {
        let kappa = square_well_bound_state(depth, radius).during("square-well oracle")?;
        let target = c64::new(0.0, -kappa);
        let err = map.candidates.iter().map(|p| (p.lambda - target).norm()).fold(f64::INFINITY, f64::min);
        out.note("oracle_kappa", kappa);
        out.note("oracle_error", float(err));
        out.note("pass", err < 1e-3);
        out.tolerance("oracle", 1e-3);
    }
    out.tolerance("threshold", c.threshold);
    Ok(out)
}

pub fn deriv_bounds(cfg: &ExperimentConfig) -> Result<Outcome, CliError> {
    let c = &cfg.continuation;
    let st = state(cfg)?;
    let mut table = Table::new(&["ell", "lambda0", "sigma", "k", "norm", "fitted_c"]);
    let mut ratios = Vec::new();
    for &center in &c.centers {
        for ell in 0..2usize {
            let mut fitted = Vec::new();
            for sigma in [c.sigma, 0.5 * c.sigma] {
                let b = derivative_bounds(&st, ell, c64::new(center, 0.0), sigma, c.k_max, c.nodes).during("Cauchy derivatives")?;
                for (k, n) in b.norms.iter().enumerate() {
                    table.push(vec![ell.into(), center.into(), sigma.into(), k.into(), (*n).into(), b.fitted_c.into()]);
                }
                fitted.push(b.fitted_c);
            }
            ratios.push(json!({"lambda0": center, "ell": ell, "ratio": fitted[0] / fitted[1]}));
        }
    }
    let worst = ratios.iter().map(|r| (r["ratio"].as_f64().unwrap_or(f64::NAN) - 1.0).abs()).fold(0.0, f64::max);

    // scalar oracle: d^k (l - p)^{-1} = (-1)^k k! (l - p)^{-k-1}
    let p = c64::new(0.3, 0.8);
    let l0 = c64::new(0.0, 0.0);
    let (d, _) = scalar_derivative_bounds(&|l| 1.0 / (l - p), l0, 0.2, c.k_max, c.nodes).during("scalar Cauchy derivatives")?;
    let mut fact = 1.0;
    let mut scalar_err: f64 = 0.0;
    for (k, v) in d.iter().enumerate() {
        if k > 0 {
            fact *= k as f64;
        }
        let exact = fact * (-1.0f64).powi(k as i32) / (l0 - p).powi(k as i32 + 1);
        scalar_err = scalar_err.max((v - exact).norm() / exact.norm());
    }

    let mut out = Outcome::new("derivative-growth-of-continued-resolvent", table);
    out.note("radius_halving_ratios", ratios);
    out.note("worst_relative_change", float(worst));
    out.note("scalar_oracle_error", float(scalar_err));
    out.note("pass", worst <= 0.3 && scalar_err < 1e-8);
    out.tolerance("radius_halving", 0.3);
    out.tolerance("scalar_oracle", 1e-8);
    Ok(out)
}
