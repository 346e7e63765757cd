use faer::{c64, Mat};
use lapdecay::error::Error;
use lapdecay::lattice::{
    assemble_dirichlet_exterior, assemble_magnetic, assemble_radial_sector, DecayClass, DiscreteOperator, FieldSpec,
    Grid, Magnetic, Profile, RadialBoundary, RadialGrid, SectorStack, Sign, Spectral,
};
use lapdecay::linalg::{dense_inverse, max_singular_value, random_cvec, rng};
use lapdecay::resolvent::*;
use lapdecay::weights::CarlemanParams;
use rand::Rng;

fn exp_potential() -> Profile {
    Profile::Exponential { amp: 2.0, rate: 1.0 }
}

fn radial(v: &Profile, n: usize, r_max: f64, boundary: RadialBoundary) -> DiscreteOperator {
    assemble_radial_sector(0, 3, v, &RadialGrid::origin(n, r_max).unwrap(), boundary).unwrap()
}

fn magnetic_fields() -> FieldSpec {
    FieldSpec {
        v: Profile::Exponential { amp: 1.0, rate: 1.0 },
        b: Magnetic::Exponential { amp: vec![0.4, -0.2], rate: 1.0 },
        class: DecayClass::Exponential { c: 1.0 },
    }
}

fn self_adjoint_samples() -> Vec<DiscreteOperator> {
    vec![
        assemble_dirichlet_exterior(&Grid::cartesian(1, 60, 6.0).unwrap(), &exp_potential()).unwrap(),
        radial(&exp_potential(), 120, 12.0, RadialBoundary::Dirichlet),
        assemble_magnetic(&Grid::cartesian(2, 14, 4.0).unwrap(), &magnetic_fields()).unwrap(),
    ]
}

fn rel(a: &Mat<c64>, b: &Mat<c64>) -> f64 {
    (a - b).norm_l2() / b.norm_l2()
}

fn sweep_lambdas() -> Vec<f64> {
    vec![0.5, 1.0, 2.0, 5.0, 10.0, 20.0, 40.0]
}

#[test]
fn la_solve_inverts_on_eigenvectors() {
    let op = radial(&exp_potential(), 80, 8.0, RadialBoundary::Dirichlet);
    let dec = lapdecay::wavelab::decompose(&op).unwrap();
    let (lambda, eps) = (1.3, 1e-3);
    let e = Spectral::Absorbing { lambda, epsilon: eps, sign: Sign::Minus }.energy();
    for j in [0, 7, 40, 79] {
        let v: Vec<c64> = (0..op.dim()).map(|i| dec.vectors[(i, j)]).collect();
        let u = la_solve(&op, lambda, eps, Sign::Minus, &v).unwrap();
        let scale = c64::new(dec.values[j], 0.0) - e;
        for i in 0..op.dim() {
            assert!((u[i] * scale - v[i]).norm() < 1e-10, "mode {j}");
        }
    }
}

#[test]
fn la_solve_signs_are_adjoint() {
    let op = radial(&exp_potential(), 100, 10.0, RadialBoundary::Dirichlet);
    let mut r = rng(4);
    let x = random_cvec(&mut r, op.dim());
    let y = random_cvec(&mut r, op.dim());
    let rx = la_solve(&op, 2.0, 0.01, Sign::Plus, &x).unwrap();
    let ry = la_solve(&op, 2.0, 0.01, Sign::Minus, &y).unwrap();
    let lhs: c64 = rx.iter().zip(&y).map(|(a, b)| b.conj() * a).sum();
    let rhs: c64 = x.iter().zip(&ry).map(|(a, b)| b.conj() * a).sum();
    assert!((lhs - rhs).norm() < 1e-10 * lhs.norm());
}

#[test]
fn la_solve_rejects_bad_input() {
    let op = radial(&Profile::Zero, 20, 2.0, RadialBoundary::Dirichlet);
    let rhs = vec![c64::new(1.0, 0.0); op.dim()];
    assert!(la_solve(&op, 1.0, 0.0, Sign::Minus, &rhs).is_err());
    assert!(la_solve(&op, 1.0, 0.1, Sign::Minus, &rhs[1..]).is_err());
    let open = radial(&Profile::Zero, 20, 2.0, RadialBoundary::Outgoing);
    assert!(la_solve(&open, 1.0, 0.1, Sign::Minus, &rhs).is_err());
}

#[test]
fn exact_self_adjoint_bound_holds() {
    let mut r = rng(2024);
    let opts = NormOptions { max_iter: 300, tol: 1e-10, seed: 1 };
    for op in self_adjoint_samples() {
        for _ in 0..50 {
            let lambda = r.random_range(0.2..5.0);
            let eps = 10f64.powf(r.random_range(-3.0..-0.5));
            let b = exact_bound_check(&op, lambda, eps, &opts).unwrap();
            assert!(b.holds(1e-8), "{b:?}");
        }
    }
}

#[test]
fn weighted_norm_matches_dense_svd() {
    let op = radial(&Profile::Zero, 200, 20.0, RadialBoundary::Outgoing);
    let weight = Weight::Poly { s: 0.6 };
    let q = ResolventQuery::new(2.0, 1e-3, weight);
    let est = weighted_norm_with(&op, &q, &NormOptions { max_iter: 300, tol: 1e-12, seed: 9 }).unwrap();
    let inv = dense_inverse(&op.shifted(q.spectral()).unwrap().to_dense());
    let w = weight.sample(&op.radius);
    let m = Mat::<c64>::from_fn(op.dim(), op.dim(), |i, j| inv[(i, j)] * (w[i] * w[j]));
    let oracle = max_singular_value(&m).unwrap();
    assert!((est.value - oracle).abs() < 1e-6 * oracle, "{} vs {oracle}", est.value);
}

#[test]
fn free_profile_decays_like_inverse_frequency() {
    let st = SectorStack::build(3, &Profile::Zero, &RadialGrid::origin(1600, 20.0).unwrap(), 120, RadialBoundary::Outgoing)
        .unwrap();
    let q = ResolventQuery::new(1.0, 1e-3, Weight::Poly { s: 0.6 });
    let lams = [5.0, 10.0, 20.0, 40.0];
    let p = lambda_sweep(SweepTarget::Sectors(&st), &lams, &q, &NormOptions::default()).unwrap();
    let scaled = p.scaled();
    let hi = scaled.iter().cloned().fold(0.0, f64::max);
    let lo = scaled.iter().cloned().fold(f64::INFINITY, f64::min);
    assert!(hi / lo < 3.0, "{scaled:?}");
}

#[test]
fn epsilon_halving_is_stable() {
    let op = radial(&exp_potential(), 400, 20.0, RadialBoundary::Outgoing);
    let q = ResolventQuery::new(2.0, 1e-3, Weight::Exp { c: 1.0 });
    let a = weighted_norm(&op, &q).unwrap().value;
    let b = weighted_norm(&op, &ResolventQuery { epsilon: 5e-4, ..q }).unwrap().value;
    assert!((b / a - 1.0).abs() < 0.02, "{a} {b}");
}

#[test]
fn radial_sweep_has_finite_constant() {
    let st = SectorStack::build(3, &exp_potential(), &RadialGrid::origin(1600, 20.0).unwrap(), 120, RadialBoundary::Outgoing)
        .unwrap();
    let q = ResolventQuery::new(1.0, 1e-3, Weight::Exp { c: 1.0 });
    let p = lambda_sweep(SweepTarget::Sectors(&st), &sweep_lambdas(), &q, &NormOptions::default()).unwrap();
    assert!(p.fitted_constant.is_finite() && p.fitted_constant > 0.0);
    assert!(p.max_stability() < 0.02, "{:?}", p.stability);
    assert!(p.sectors_used.iter().all(|&u| u < 121), "{:?}", p.sectors_used);
}

#[test]
fn free_radial_slope_is_minus_one() {
    let st = SectorStack::build(3, &Profile::Zero, &RadialGrid::origin(1600, 20.0).unwrap(), 120, RadialBoundary::Outgoing)
        .unwrap();
    let q = ResolventQuery::new(1.0, 1e-3, Weight::Exp { c: 1.0 });
    let p = lambda_sweep(SweepTarget::Sectors(&st), &sweep_lambdas(), &q, &NormOptions::default()).unwrap();
    let slope = p.loglog_slope().unwrap();
    assert!((-1.15..=-0.85).contains(&slope), "{slope}");
}

#[test]
fn magnetic_line_sweep_is_stable() {
    let g = |x: f64| 2.0 * (-(1.0 + x * x).sqrt()).exp();
    let b = |x: f64| 0.5 * (-(1.0 + x * x).sqrt()).exp();
    let lp = line_problem(3201, 20.0, &g, &b, 1.0).unwrap();
    let q = ResolventQuery::new(1.0, 1e-3, Weight::Exp { c: 1.0 });
    let p = lambda_sweep(SweepTarget::Operator(&lp.op), &sweep_lambdas(), &q, &NormOptions::default()).unwrap();
    assert!(p.fitted_constant.is_finite() && p.max_stability() < 0.02, "{p:?}");
}

#[test]
fn exterior_disc_sweep_is_stable() {
    let st = SectorStack::build(2, &exp_potential(), &RadialGrid::exterior(1600, 1.0, 21.0).unwrap(), 120, RadialBoundary::Outgoing)
        .unwrap();
    let q = ResolventQuery::new(1.0, 1e-3, Weight::Exp { c: 1.0 });
    let p = lambda_sweep(SweepTarget::Sectors(&st), &sweep_lambdas(), &q, &NormOptions::default()).unwrap();
    assert!(p.fitted_constant.is_finite() && p.max_stability() < 0.02, "{p:?}");
}

#[test]
fn sweep_and_query_validation() {
    let op = radial(&Profile::Zero, 40, 4.0, RadialBoundary::Outgoing);
    let q = ResolventQuery::new(1.0, 1e-3, Weight::Exp { c: 1.0 });
    for grid in [vec![1.0, 3.0, 2.0], vec![1.0, 1.0], vec![], vec![-1.0, 1.0]] {
        let err = lambda_sweep(SweepTarget::Operator(&op), &grid, &q, &NormOptions::default()).unwrap_err();
        assert!(err.to_string().contains("invalid lambda grid"), "{err}");
    }
    assert!(ResolventQuery::new(1.0, 1e-3, Weight::Poly { s: 0.4 }).validate().is_err());
    assert!(ResolventQuery::new(1.0, 0.0, Weight::Poly { s: 0.6 }).validate().is_err());
    assert!(ResolventQuery { alpha: 2, ..q }.validate().is_err());
    let desc = lambda_sweep(SweepTarget::Operator(&op), &[2.0, 1.0], &q, &NormOptions::default()).unwrap();
    assert_eq!(desc.norms.len(), 2);
}

#[test]
fn gradient_orders_scale_with_frequency() {
    let op = radial(&Profile::Zero, 800, 20.0, RadialBoundary::Outgoing);
    let q = ResolventQuery { alpha: 1, beta: 1, ..ResolventQuery::new(1.0, 1e-3, Weight::Exp { c: 1.0 }) };
    let p = lambda_sweep(SweepTarget::Operator(&op), &[2.0, 4.0, 8.0], &q, &NormOptions::default()).unwrap();
    let slope = p.loglog_slope().unwrap();
    assert!((0.7..=1.3).contains(&slope), "{slope} {:?}", p.norms);
}

#[test]
fn low_frequency_profile_stays_bounded() {
    let bump = Profile::Bump { amp: 1.0, radius: 2.0 };
    let st = SectorStack::build(5, &bump, &RadialGrid::origin(500, 100.0).unwrap(), 3, RadialBoundary::Outgoing).unwrap();
    let lams = [0.2, 0.1, 0.05, 0.025];
    let opts = NormOptions::default();
    let p = low_frequency_sweep(&st, 1.2, &lams, 1e-6, &opts).unwrap();
    let steps: Vec<f64> = p.norms.windows(2).map(|w| (w[1] - w[0]).abs()).collect();
    assert!(steps[2] < steps[0], "{:?}", p.norms);
    let smooth = low_frequency_sweep(&st, 2.0, &lams, 1e-6, &opts).unwrap();
    assert!(smooth.variation() < 0.1, "{:?}", smooth.norms);
    let free = SectorStack::build(5, &Profile::Zero, &RadialGrid::origin(500, 100.0).unwrap(), 3, RadialBoundary::Outgoing)
        .unwrap();
    let f = low_frequency_sweep(&free, 2.0, &lams, 1e-6, &opts).unwrap();
    assert!(f.norms.iter().all(|v| v.is_finite()) && f.variation() < 0.1, "{:?}", f.norms);
}

#[test]
fn low_frequency_preconditions() {
    let opts = NormOptions::default();
    let grid = RadialGrid::origin(50, 10.0).unwrap();
    let st = SectorStack::build(5, &Profile::Zero, &grid, 1, RadialBoundary::Outgoing).unwrap();
    assert!(matches!(low_frequency_sweep(&st, 0.8, &[0.1], 1e-6, &opts), Err(Error::Precondition(_))));
    let st3 = SectorStack::build(3, &Profile::Zero, &grid, 1, RadialBoundary::Outgoing).unwrap();
    assert!(matches!(low_frequency_sweep(&st3, 1.2, &[0.1], 1e-6, &opts), Err(Error::Precondition(_))));
    let well = SectorStack::build(5, &Profile::SquareWell { depth: 1.0, radius: 1.0 }, &grid, 1, RadialBoundary::Outgoing)
        .unwrap();
    assert!(matches!(low_frequency_sweep(&well, 1.2, &[0.1], 1e-6, &opts), Err(Error::Precondition(_))));
}

fn carleman_grid() -> RadialGrid {
    RadialGrid::origin(2000, 20.0).unwrap()
}

#[test]
fn carleman_ratios_are_stable_in_tau_and_lambda() {
    let grid = carleman_grid();
    let taus = [2.0, 4.0, 8.0];
    let lams = [1.0, 5.0, 20.0];
    let mut table = [[0.0; 3]; 3];
    for (i, &tau) in taus.iter().enumerate() {
        let p = CarlemanParams::reference(4.0, tau).unwrap();
        for (j, &lam) in lams.iter().enumerate() {
            let s = carleman_ratio(&p, lam, 1e-6, Sign::Minus, 50, CarlemanVariant::Cutoff, &grid, 17).unwrap();
            assert_eq!(s.degenerate, 0);
            assert!(s.best_constant.unwrap() >= s.max * (1.0 - 1e-6), "{s:?}");
            table[i][j] = s.max;
        }
    }
    let spread = |v: &[f64]| v.iter().cloned().fold(0.0, f64::max) / v.iter().cloned().fold(f64::INFINITY, f64::min);
    for row in &table {
        assert!(spread(row) < 2.0, "{table:?}");
    }
    for j in 0..3 {
        assert!(spread(&[table[0][j], table[1][j], table[2][j]]) < 2.0, "{table:?}");
    }
}

#[test]
fn dual_norm_never_exceeds_l2_side() {
    let grid = RadialGrid::origin(400, 10.0).unwrap();
    let p = CarlemanParams::reference(4.0, 2.0).unwrap();
    let setup = CarlemanSetup::new(&p, 3.0, 1e-6, Sign::Minus, &grid).unwrap();
    let mut r = rng(5);
    for shape in [TestShape::Noise, TestShape::QuasiMode] {
        let u = test_function(&p, 3.0, &grid, CarlemanVariant::Whole, shape, &mut r).unwrap();
        let l2 = setup.sides(&u, CarlemanVariant::Whole).unwrap();
        let dual = setup.sides(&u, CarlemanVariant::Dual).unwrap();
        assert_eq!(l2.lhs, dual.lhs);
        assert!(dual.rhs_main <= l2.rhs_main * (1.0 + 1e-8));
    }
}

#[test]
fn carleman_degenerate_and_support_cases() {
    let grid = RadialGrid::origin(200, 10.0).unwrap();
    let p = CarlemanParams::reference(4.0, 2.0).unwrap();
    let setup = CarlemanSetup::new(&p, 2.0, 1e-6, Sign::Minus, &grid).unwrap();
    let zero = vec![c64::new(0.0, 0.0); grid.n];
    assert_eq!(setup.sides(&zero, CarlemanVariant::Whole).unwrap().ratio(), None);
    let stats = RatioStats::from_ratios(vec![None, Some(1.0), Some(3.0)]);
    assert_eq!((stats.degenerate, stats.max, stats.median), (1, 3.0, 2.0));
    let ones = vec![c64::new(1.0, 0.0); grid.n];
    assert!(matches!(setup.sides(&ones, CarlemanVariant::Cutoff), Err(Error::Support(_))));
    assert!(CarlemanSetup::new(&p, 2.0, 1e-6, Sign::Minus, &RadialGrid::exterior(50, 1.0, 5.0).unwrap()).is_err());
}

#[test]
fn unconjugated_resolvent_has_exact_scaling() {
    let grid = RadialGrid::origin(400, 40.0).unwrap();
    let opts = NormOptions { max_iter: 300, tol: 1e-10, seed: 3 };
    let rep = conjugated_resolvent_check(None, 2.0, 5.0, 0.0, Sign::Minus, &grid, 0.05, &opts).unwrap();
    for (t, n) in rep.thetas.iter().zip(&rep.norms) {
        assert!((n[3] * t * t - 1.0).abs() < 1e-2, "{rep:?}");
    }
    assert!((rep.exponents[3] + 2.0).abs() < 0.05, "{rep:?}");
}

#[test]
fn neumann_threshold_guards_small_theta() {
    let grid = RadialGrid::origin(400, 40.0).unwrap();
    let p = CarlemanParams::reference(4.0, 2.0).unwrap();
    let opts = NormOptions::default();
    let rep = conjugated_resolvent_check(Some(p), 2.0, 5.0, 0.5, Sign::Minus, &grid, 0.05, &opts).unwrap();
    assert!(rep.theta0 > 0.05 && rep.exponents.iter().all(|e| e.is_finite() && *e < 0.0), "{rep:?}");
    let below = conjugated_resolvent_norms(Some(p), 2.0, 5.0, 0.5 * rep.theta0, 0.5, Sign::Minus, &grid, &opts);
    assert!(matches!(below, Err(Error::Numerical(_))));
}

fn radial_state() -> ContinuationState {
    ContinuationState::build(radial_problem(80, 8.0, &exp_potential(), 1.0).unwrap(), c64::new(1.0, -0.3)).unwrap()
}

fn line_state() -> ContinuationState {
    let g = |x: f64| 2.0 * (-(1.0 + x * x).sqrt()).exp();
    let b = |x: f64| 0.5 * (-(1.0 + x * x).sqrt()).exp();
    ContinuationState::build(line_problem(81, 8.0, &g, &b, 1.0).unwrap(), c64::new(1.0, -0.3)).unwrap()
}

fn ball_state() -> ContinuationState {
    let p = exterior_ball_problem(10, 80, 0.1, &exp_potential(), 1.0, 1.0, 2.0).unwrap();
    ContinuationState::build(p, c64::new(1.0, -0.3)).unwrap()
}

#[test]
fn continuation_reproduces_anchor() {
    for st in [radial_state(), ball_state()] {
        let (a, _) = st.system(st.z);
        let ident = Mat::<c64>::identity(st.dim(), st.dim());
        assert!((&a - &ident).norm_l2() < 1e-12);
        assert!(rel(&st.evaluate(st.z).unwrap(), &st.x_z) < 1e-12);
    }
}

#[test]
fn continuation_matches_direct_solves_below_axis() {
    for st in [radial_state(), line_state(), ball_state()] {
        for re in [0.7, 1.5, 2.5] {
            let l = c64::new(re, -0.05);
            let e = rel(&st.evaluate(l).unwrap(), &st.direct(Spectral::Continued(l)).unwrap());
            assert!(e < 1e-6, "{:?} {re}: {e}", st.problem.case);
        }
    }
}

#[test]
fn continuation_matches_limiting_absorption() {
    for st in [radial_state(), line_state(), ball_state()] {
        for lambda in [0.7, 1.5, 2.5] {
            let eps = 1e-3;
            let a = st.direct(Spectral::Absorbing { lambda, epsilon: eps, sign: Sign::Minus }).unwrap();
            let b = st.direct(Spectral::Absorbing { lambda, epsilon: eps / 2.0, sign: Sign::Minus }).unwrap();
            let limit = Mat::from_fn(a.nrows(), a.ncols(), |i, j| b[(i, j)] * 2.0 - a[(i, j)]);
            let e = rel(&st.evaluate(c64::new(lambda, 0.0)).unwrap(), &limit);
            assert!(e < 1e-4, "{lambda}: {e}");
        }
    }
}

#[test]
fn strip_above_axis_is_pole_free() {
    for st in [radial_state(), line_state(), ball_state()] {
        for re in [0.5, 1.0, 1.5, 2.0, 3.0] {
            let s = st.min_singular(c64::new(re, 0.05)).unwrap();
            assert!(s > 0.05, "{:?} {re}: {s}", st.problem.case);
        }
    }
}

#[test]
fn cauchy_integral_of_lower_data_extends_upward() {
    let st = radial_state();
    let (centre, radius, nodes) = (1.5, 0.1, 128);
    let target = c64::new(centre, 0.05);
    let n = st.dim();
    let mut acc = Mat::<c64>::zeros(n, n);
    for j in 0..nodes {
        let t = 2.0 * std::f64::consts::PI * j as f64 / nodes as f64;
        let zeta = c64::new(centre, 0.0) + c64::from_polar(radius, t);
        let v = if zeta.im < 0.0 { st.direct(Spectral::Continued(zeta)).unwrap() } else { st.evaluate(zeta).unwrap() };
        let w = (zeta - c64::new(centre, 0.0)) / (zeta - target) / nodes as f64;
        acc += Mat::from_fn(n, n, |a, b| v[(a, b)] * w);
    }
    assert!(rel(&acc, &st.evaluate(target).unwrap()) < 1e-4);
}

#[test]
fn anchor_must_not_lie_above_axis() {
    let p = radial_problem(20, 4.0, &Profile::Zero, 1.0).unwrap();
    assert!(ContinuationState::build(p.clone(), c64::new(1.0, 0.1)).is_err());
    assert!(ContinuationState::build(p, c64::new(0.0, 0.0)).is_err());
    assert!(radial_problem(20, 4.0, &Profile::Zero, 0.0).is_err());
}

#[test]
fn square_well_pole_matches_transcendental_root() {
    let (depth, radius) = (4.0, 2.0);
    let kappa = square_well_bound_state(depth, radius).unwrap();
    let n = 100;
    let h = radius / 50.0;
    let p = radial_problem(n, (n as f64 + 0.5) * h, &Profile::SquareWell { depth, radius }, 0.5).unwrap();
    let st = ContinuationState::build(p, c64::new(1.0, -0.5)).unwrap();
    let region = ScanRegion { re: (-0.2, 0.2), im: (-kappa - 0.3, -kappa + 0.3), n_re: 5, n_im: 7 };
    let map = pole_scan(&st, &region, 0.5).unwrap();
    let best = map.candidates.iter().min_by(|a, b| a.value.total_cmp(&b.value)).unwrap();
    assert!((best.lambda - c64::new(0.0, -kappa)).norm() < 1e-3, "{best:?} vs {kappa}");
}

#[test]
fn square_well_oracle_solves_its_equation() {
    let (depth, radius) = (4.0, 2.0);
    let kappa = square_well_bound_state(depth, radius).unwrap();
    let k = (depth - kappa * kappa).sqrt();
    assert!((k / (k * radius).tan() + kappa).abs() < 1e-10);
    assert!(square_well_bound_state(0.5, 1.0).is_err());
}

#[test]
fn nonnegative_potential_scan_finds_nothing_near_axis() {
    let st = radial_state();
    let region = ScanRegion { re: (0.5, 3.0), im: (-0.3, 0.1), n_re: 11, n_im: 5 };
    let map = pole_scan(&st, &region, 0.05).unwrap();
    assert!(map.candidates.is_empty() && map.min_value() > 0.05, "{}", map.min_value());
}

#[test]
fn exterior_resonance_is_located_and_excluded() {
    let st = ball_state();
    let region = ScanRegion { re: (0.5, 1.5), im: (-0.5, 0.5), n_re: 11, n_im: 11 };
    let map = pole_scan(&st, &region, 0.2).unwrap();
    let res = map.candidates.iter().min_by(|a, b| a.value.total_cmp(&b.value)).unwrap();
    assert!(res.value < 1e-8 && res.lambda.im > 0.1, "{res:?}");
    let w = winding_number(&|l| st.determinant(l), res.lambda, 0.05, 64).unwrap();
    assert_eq!(w, 1);
    assert!(derivative_bounds(&st, 0, c64::new(1.0, 0.0), 0.4, 4, 64).is_err());
}

#[test]
fn derivative_constants_are_radius_independent() {
    for (st, l0, sigma) in [(radial_state(), 1.0, 0.4), (ball_state(), 1.5, 0.16)] {
        for ell in [0, 1] {
            let a = derivative_bounds(&st, ell, c64::new(l0, 0.0), sigma, 6, 64).unwrap();
            let b = derivative_bounds(&st, ell, c64::new(l0, 0.0), 0.5 * sigma, 6, 64).unwrap();
            assert!((a.fitted_c / b.fitted_c - 1.0).abs() < 0.3, "{a:?} {b:?}");
        }
    }
}

#[test]
fn scalar_cauchy_derivatives_match_closed_form() {
    let p = c64::new(0.3, 0.8);
    let l0 = c64::new(0.0, 0.0);
    let (d, bounds) = scalar_derivative_bounds(&|l| 1.0 / (l - p), l0, 0.2, 6, 64).unwrap();
    let mut fact = 1.0;
    for (k, v) in d.iter().enumerate() {
        if k > 0 {
            fact *= k as f64;
        }
        let exact = fact * (-1.0f64).powi(k as i32) / (l0 - p).powi(k as i32 + 1);
        assert!((v - exact).norm() < 1e-8 * exact.norm(), "k = {k}");
    }
    assert!((bounds.fitted_c - 1.0 / (l0 - p).norm()).abs() < 0.5);
    assert!(scalar_derivative_bounds(&|l| l, l0, 0.2, 6, 6).is_err());
}
