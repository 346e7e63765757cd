use faer::c64;
use lapdecay::lattice::{RadialBoundary, RadialGrid, SectorStack};
use lapdecay::resolvent::NormOptions;
use lapdecay::wavelab::{
    certify_low_frequency, cutoff_comparison, decay_experiment, decompose, duhamel_residual, energy_identity_check,
    fourier_identity_check, hardy_check, propagate, CutoffSchedule, DecayCurve, DecayFit, DecayMode, DecaySettings,
    HardyMode, Probe, SpectralDecomposition, TimeSwitch,
};
use serde_json::{json, Value};

use super::{norm_options, sector_stack};
use crate::artifact::{float, Outcome, Table};
use crate::config::{linear, ExperimentConfig, Geometry, ProbeKind, WaveMode};
use crate::error::{CliError, Context};

fn fit_json(f: &DecayFit) -> Value {
    json!({
        "c1": float(f.c1),
        "big_c1": float(f.big_c1),
        "r2": float(f.r2),
        "slope_se": float(f.slope_se),
        "points": f.points,
        "power_exponent": float(f.power_exponent),
        "power_r2": float(f.power_r2),
        "aic_exponential": float(f.aic_exponential),
        "aic_power": float(f.aic_power),
    })
}

fn push_curve(table: &mut Table, name: &str, c: &DecayCurve) {
    for i in 0..c.t.len() {
        table.push(vec![
            name.into(),
            c.t[i].into(),
            c.quantity[i].into(),
            c.orders[i].into(),
            c.delta.unwrap_or(f64::NAN).into(),
        ]);
    }
}

fn bump(dec: &SpectralDecomposition, centre: f64, width: f64, phase: f64) -> Vec<c64> {
    dec.radius.iter().map(|&r| c64::from_polar((-((r - centre) / width).powi(2)).exp(), phase * r)).collect()
}

/// Energy, Duhamel, Fourier and weighted-energy checks on one sector.
fn identities(cfg: &ExperimentConfig, dec: &SpectralDecomposition) -> Result<Value, CliError> {
    let w = &cfg.wave;
    let r_in = cfg.grid.obstacle.filter(|_| cfg.grid.geometry == Geometry::Exterior).unwrap_or(0.0);
    let span = cfg.grid.l - r_in;
    let (centre, width) = (r_in + 0.25 * span, 0.05 * span);
    let f1 = bump(dec, centre, width, 0.0);
    let f2 = bump(dec, centre + width, width, 0.4 / width);
    let e0 = dec.energy(&f1, &f2);
    let mut energy: f64 = 0.0;
    for t in [0.7, 5.0, 23.0] {
        let (u, ut) = propagate(dec, &f1, &f2, t);
        energy = energy.max((dec.energy(&u, &ut) - e0).abs() / e0);
    }
    let sw = TimeSwitch::new(w.switch_gamma).during("time switch")?;
    let t_grid = linear(0.0, 4.0 * w.switch_gamma, 25);
    let duhamel = duhamel_residual(dec, &sw, &f1, &f2, &t_grid, 0.05, 12).during("Duhamel identity")?;
    let mut fourier: f64 = 0.0;
    for j in 0..2 {
        let rep = fourier_identity_check(dec, &sw, &f1, &f2, w.fourier_epsilon, &[0.5, 1.0, 2.0, 3.0], j).during("Fourier identity")?;
        fourier = fourier.max(rep.max_residual);
    }
    let eta = |r: f64| (-0.3 * (1.0 + r * r).sqrt()).exp();
    let mut weighted: f64 = 0.0;
    for t in [0.5, 2.0, 7.0] {
        let e = energy_identity_check(dec, &eta, &f1, &f2, t, 1e-4).during("weighted energy identity")?;
        weighted = weighted.max((e.finite_difference - e.assembled).abs() / e.assembled.abs().max(1e-3));
    }
    Ok(json!({
        "energy_drift": float(energy),
        "duhamel_relative": float(duhamel.relative),
        "fourier_max_residual": float(fourier),
        "weighted_energy_mismatch": float(weighted),
        "pass": energy < 1e-10 && duhamel.relative < 1e-8 && fourier < 1e-5,
    }))
}

pub fn wave_decay(cfg: &ExperimentConfig) -> Result<Outcome, CliError> {
    let w = &cfg.wave;
    let st = sector_stack(cfg, RadialBoundary::Dirichlet)?;
    let decs = st.sectors.iter().map(|op| decompose(op).during("spectral decomposition")).collect::<Result<Vec<_>, _>>()?;
    let probe = match w.probe {
        ProbeKind::Operator => Probe::OperatorNorm,
        ProbeKind::Random => Probe::RandomData { batch: w.batch, seed: cfg.output.seed },
    };
    let settings = DecaySettings {
        mu_c: cfg.fields.c,
        band: w.band,
        probe,
        fit_window: (w.fit_window[0], w.fit_window[1]),
        opts: NormOptions { max_iter: 60, tol: 1e-9, seed: cfg.output.seed },
    };
    let t_grid = linear(w.t_min, w.t_max, w.points);
    let schedule = CutoffSchedule::fitted(cfg.cutoff.delta, cfg.cutoff.m).during("cutoff schedule")?;
    let mut table = Table::new(&["curve", "t", "quantity", "cutoff_m", "delta"]);
    let mut out_notes: Vec<(&str, Value)> = Vec::new();
    let estimate = match w.mode {
        WaveMode::Cutoff => {
            let c = decay_experiment(&decs, &DecayMode::Cutoff(schedule), &t_grid, &settings).during("decay with cutoff")?;
            push_curve(&mut table, "cutoff", &c);
            out_notes.push(("fit", fit_json(&c.fit)));
            out_notes.push(("schedule_constant", float(schedule.constant)));
            out_notes.push(("pass", json!(c.fit.c1 > 0.0 && c.fit.r2 > 0.99)));
            "local-energy-decay-with-frequency-cutoff"
        }
        WaveMode::None => {
            let grid = RadialGrid::origin(w.cert_n, w.cert_r_max).during("certificate grid")?;
            let sweep = SectorStack::build(cfg.grid.d, &cfg.fields.v.profile(), &grid, cfg.grid.nu_max, RadialBoundary::Outgoing)
                .during("certificate sectors")?;
            let cert = certify_low_frequency(&sweep, w.cert_s, &w.cert_lambdas, 1e-6, w.cert_tolerance, &norm_options(cfg))
                .during("low-frequency certificate")?;
            out_notes.push(("certificate_variation", float(cert.variation)));
            let c = decay_experiment(&decs, &DecayMode::NoCutoff(Some(cert)), &t_grid, &settings).during("decay without cutoff")?;
            push_curve(&mut table, "none", &c);
            out_notes.push(("fit", fit_json(&c.fit)));
            out_notes.push(("pass", json!(c.fit.c1 > 0.0)));
            "local-energy-decay-without-cutoff"
        }
        WaveMode::Compare => {
            let cmp = cutoff_comparison(&decs, schedule, &t_grid, &settings).during("cutoff comparison")?;
            push_curve(&mut table, "cutoff", &cmp.with_cutoff);
            push_curve(&mut table, "none", &cmp.without_cutoff);
            out_notes.push(("fit", fit_json(&cmp.with_cutoff.fit)));
            out_notes.push(("fit_without_cutoff", fit_json(&cmp.without_cutoff.fit)));
            out_notes.push(("cutoff_steeper", json!(cmp.cutoff_steeper)));
            out_notes.push(("power_law_preferred", json!(cmp.power_law_preferred)));
            out_notes.push(("pass", json!(cmp.cutoff_steeper)));
            "local-energy-decay-cutoff-comparison"
        }
    };
    let mut out = Outcome::new(estimate, table);
    for (k, v) in out_notes {
        out.note(k, v);
    }
    out.note("identities", identities(cfg, &decs[0])?);
    out.tolerance("r2", 0.99);
    out.tolerance("energy", 1e-10);
    out.tolerance("duhamel", 1e-8);
    out.tolerance("fourier", 1e-5);
    Ok(out)
}

pub fn hardy(cfg: &ExperimentConfig) -> Result<Outcome, CliError> {
    let g = &cfg.grid;
    let mode = match g.geometry {
        Geometry::Radial => HardyMode::Radial { n: g.n, r_max: g.l },
        Geometry::Exterior => HardyMode::Exterior { n: g.n, r_in: g.obstacle.unwrap_or(1.0), r_out: g.l },
        Geometry::Line => return Err(CliError::Config("the Hardy check needs a radial or exterior geometry".into())),
    };
    let mut table = Table::new(&["d", "optimizer", "random_max", "max_ratio", "sharp"]);
    let mut pass = true;
    let mut ratios = Vec::new();
    for &d in &cfg.hardy.dims {
        let rep = hardy_check(d, &mode, cfg.hardy.trials, cfg.output.seed).during("Hardy inequality")?;
        pass &= rep.max_ratio.is_finite() && (g.geometry == Geometry::Exterior || rep.max_ratio <= rep.sharp + 0.05);
        table.push(vec![d.into(), rep.optimizer.into(), rep.random_max.into(), rep.max_ratio.into(), rep.sharp.into()]);
        ratios.push(json!({"d": d, "max_ratio": float(rep.max_ratio), "sharp": float(rep.sharp)}));
    }
    let mut out = Outcome::new("hardy-inequality", table);
    out.note("ratios", ratios);
    out.note("pass", pass);
    out.tolerance("sharp_constant_margin", 0.05);
    Ok(out)
}
