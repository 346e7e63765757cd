use lapdecay::freekernel::{free_kernel_3d_closed, free_kernel_radial, jump_identity_residual, lattice_discrepancy};
use lapdecay::linalg::rng;
use num_complex::Complex64 as C;
use rand::Rng;

use crate::artifact::{float, floats, Outcome, Table};
use crate::config::ExperimentConfig;
use crate::error::{CliError, Context};

pub fn kernel_check(cfg: &ExperimentConfig) -> Result<Outcome, CliError> {
    let k = &cfg.kernel;
    let mut table = Table::new(&["check", "index", "d", "re_lambda", "im_lambda", "rho", "value"]);
    let mut r = rng(cfg.output.seed);

    let mut closed_max: f64 = 0.0;
    for i in 0..k.samples {
        let rho = r.random_range(0.01..k.rho_max);
        let mut re: f64 = r.random_range(-5.0..5.0);
        if re.abs() < 1e-3 {
            re = 1e-3;
        }
        let lambda = C::new(re, r.random_range(-k.strip..=k.strip));
        let exact = free_kernel_3d_closed(rho, lambda);
        let err = (free_kernel_radial(rho, lambda, 3).during("three-dimensional kernel")? - exact).norm() / exact.norm();
        closed_max = closed_max.max(err);
        table.push(vec!["closed_form".into(), i.into(), 3usize.into(), lambda.re.into(), lambda.im.into(), rho.into(), err.into()]);
    }

    let mut jump_max: f64 = 0.0;
    for d in [2usize, 3] {
        for i in 0..k.jump_points {
            let x: Vec<f64> = (0..d).map(|_| r.random_range(-1.0..1.0)).collect();
            let y: Vec<f64> = (0..d).map(|_| r.random_range(-1.0..1.0)).collect();
            let rho = x.iter().zip(&y).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
            let lambda = C::new(r.random_range(0.5..3.0), 0.0);
            let res = jump_identity_residual(&x, &y, lambda, d, k.sphere_order).during("jump identity")?;
            jump_max = jump_max.max(res);
            table.push(vec!["jump".into(), i.into(), d.into(), lambda.re.into(), 0.0.into(), rho.into(), res.into()]);
        }
    }

    let lambda = C::new(k.lattice_lambda, 0.0);
    let mut disc = Vec::new();
    for (i, &n) in k.lattice_n.iter().enumerate() {
        let e = lattice_discrepancy(n, k.lattice_r_max, lambda, cfg.fields.c).during("lattice discrepancy")?;
        disc.push(e);
        table.push(vec!["lattice".into(), i.into(), 3usize.into(), lambda.re.into(), 0.0.into(), (k.lattice_r_max / (n as f64 + 0.5)).into(), e.into()]);
    }
    let ratios: Vec<f64> = disc.windows(2).map(|w| w[0] / w[1]).collect();
    let second_order = !ratios.is_empty() && ratios.iter().all(|q| (3.0..=5.0).contains(q));

    let mut out = Outcome::new("free-resolvent-kernel", table);
    out.note("closed_form_max_error", float(closed_max));
    out.note("jump_max_residual", float(jump_max));
    out.note("lattice_discrepancy", floats(&disc));
    out.note("halving_ratios", floats(&ratios));
    out.note("pass", closed_max < 1e-10 && jump_max < 1e-8 && second_order);
    out.tolerance("closed_form", 1e-10);
    out.tolerance("jump", 1e-8);
    out.tolerance("halving_ratio", [3.0, 5.0]);
    Ok(out)
}
