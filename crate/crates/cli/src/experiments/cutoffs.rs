use faer::{c64, Mat};
use lapdecay::cutoffs::hs::{hs_apply, spectral_apply, AlmostAnalytic, Gaussian, HsQuadrature, Smooth};
use lapdecay::cutoffs::CutoffFamily;
use lapdecay::fit::loglog_fit;
use lapdecay::linalg::{max_singular_value, rng};
use rand::Rng;
use serde_json::json;

use crate::artifact::{float, Outcome, Table};
use crate::config::{geometric, linear, ExperimentConfig};
use crate::error::{CliError, Context};

pub fn cutoff_build(cfg: &ExperimentConfig) -> Result<Outcome, CliError> {
    let c = &cfg.cutoff;
    let mut table = Table::new(&["m", "sigma", "rho", "psi"]);
    let samples = linear(0.1, 4.0, 14);
    let mut per_m = Vec::new();
    let (mut worst_mass, mut worst_forms): (f64, f64) = (0.0, 0.0);
    let mut finite = true;
    for m in 1..=c.m {
        let fam = CutoffFamily::<f64>::new(m, c.delta).during("cutoff family")?;
        for sigma in linear(0.9, 2.1, c.samples) {
            table.push(vec![m.into(), sigma.into(), fam.rho(sigma).into(), fam.psi(sigma * c.delta).into()]);
        }
        let mass = (fam.rho_integral() - 1.0).abs();
        let mut forms: f64 = 0.0;
        for &a in &samples {
            for &b in &samples {
                if (a - b).abs() > 0.05 {
                    forms = forms.max((fam.big_psi(a, b) - fam.big_psi_quotient(a, b)).abs());
                }
            }
            forms = forms.max((fam.big_psi(a, a) - fam.psi_deriv(a, 1) / (2.0 * a)).abs());
        }
        let consts = [fam.fitted_rho_constant(), fam.fitted_psi_constant(), fam.fitted_big_psi_constant(&samples)];
        finite &= consts.iter().all(|v| v.is_finite() && *v > 0.0);
        worst_mass = worst_mass.max(mass);
        worst_forms = worst_forms.max(forms);
        per_m.push(json!({
            "m": m,
            "mass_error": mass,
            "rho_constant": consts[0],
            "psi_constant": consts[1],
            "big_psi_constant": consts[2],
            "big_psi_form_gap": forms,
        }));
    }
    let mut out = Outcome::new("frequency-cutoff-family", table);
    out.note("families", per_m);
    out.note("max_mass_error", float(worst_mass));
    out.note("max_big_psi_form_gap", float(worst_forms));
    out.note("constants_finite", finite);
    out.note("pass", worst_mass < 1e-12 && worst_forms < 1e-10 && finite);
    out.tolerance("mass", 1e-12);
    out.tolerance("big_psi_forms", 1e-10);
    Ok(out)
}

/// Hermitian matrix with entries of size `O(1/sqrt(n))`.
fn random_hermitian(n: usize, seed: u64) -> Mat<c64> {
    let mut r = rng(seed);
    let g = Mat::<c64>::from_fn(n, n, |_, _| c64::new(r.random_range(-1.0..1.0), r.random_range(-1.0..1.0)));
    let s = 0.5 / (n as f64).sqrt();
    Mat::from_fn(n, n, |i, j| (g[(i, j)] + g[(j, i)].conj()) * s)
}

pub fn hs_check(cfg: &ExperimentConfig) -> Result<Outcome, CliError> {
    let c = &cfg.cutoff;
    let m = random_hermitian(c.hs_dim, cfg.output.seed);
    let g = Gaussian::new(c.hs_center, c.hs_width);
    let quad = HsQuadrature { cell: c.hs_cell, ..HsQuadrature::default() };
    let hs = hs_apply(&m, &g, c.hs_order, &quad).during("Helffer-Sjostrand quadrature")?;
    let exact = spectral_apply(&m, |x| g.deriv(x, 0)).during("eigendecomposition calculus")?;
    let err = max_singular_value(&(&hs.value - &exact)).during("error norm")?;

    let ext = AlmostAnalytic::new(&g, c.hs_order, quad.y_max);
    // off-centre so that the odd derivative does not vanish
    let x = c.hs_center + 0.3 * c.hs_width;
    let ys = geometric(1e-3, 1e-1, 9);
    let dbar: Vec<f64> = ys.iter().map(|&y| ext.dbar(c64::new(x, y)).norm()).collect();
    let slope = loglog_fit(&ys, &dbar).during("dbar slope")?.slope;

    let mut table = Table::new(&["quantity", "x", "y", "value"]);
    for (y, v) in ys.iter().zip(&dbar) {
        table.push(vec!["dbar".into(), x.into(), (*y).into(), (*v).into()]);
    }
    table.push(vec!["operator_error".into(), f64::NAN.into(), f64::NAN.into(), err.into()]);
    let mut out = Outcome::new("almost-analytic-functional-calculus", table);
    out.note("operator_error", float(err));
    out.note("dbar_slope", float(slope));
    out.note("order", c.hs_order);
    out.note("quadrature_nodes", hs.nodes);
    out.note("excluded_strip_bound", float(hs.excluded_bound));
    out.note("pass", err < 1e-6 && slope >= c.hs_order as f64 - 0.2);
    out.tolerance("operator", 1e-6);
    out.tolerance("dbar_slope", c.hs_order as f64 - 0.2);
    Ok(out)
}
