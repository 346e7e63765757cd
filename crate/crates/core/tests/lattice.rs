use faer::{c64, Mat, Side};
use lapdecay::lattice::*;
use lapdecay::linalg::{cr, hermitian_eigenvalues, norm2, rng, random_cvec, tridiagonal_eigenvalues, Csr};
use proptest::prelude::*;

fn tridiag_of(op: &DiscreteOperator) -> (Vec<f64>, Vec<f64>) {
    let n = op.dim();
    let a = (0..n).map(|j| op.matrix.get(j, j).re).collect();
    let b = (0..n - 1).map(|j| op.matrix.get(j, j + 1).re).collect();
    (a, b)
}

#[test]
fn periodic_constant_field_spectrum() {
    let (n, l) = (6, std::f64::consts::PI);
    let g = Grid::periodic(2, n, l).unwrap();
    let b = vec![0.37, -0.81];
    let f = FieldSpec { v: Profile::Zero, b: Magnetic::Constant(b.clone()), class: DecayClass::ShortRange { rho: 1.0 } };
    let op = assemble_magnetic(&g, &f).unwrap();
    let ev = hermitian_eigenvalues(&op.matrix.to_dense()).unwrap();
    let h = g.h;
    let mut want = Vec::new();
    for k0 in 0..n {
        for k1 in 0..n {
            let xi = [2.0 * std::f64::consts::PI * k0 as f64 / (n as f64 * h), 2.0 * std::f64::consts::PI * k1 as f64 / (n as f64 * h)];
            want.push((0..2).map(|j| (2.0 - 2.0 * (h * xi[j] + h * b[j]).cos()) / (h * h)).sum::<f64>());
        }
    }
    want.sort_by(|a, b| a.partial_cmp(b).unwrap());
    for (a, w) in ev.iter().zip(&want) {
        assert!((a - w).abs() < 1e-10, "{a} vs {w}");
    }
}

#[test]
fn gauge_transform_conjugates_operator() {
    let g = Grid::cartesian(2, 9, 2.0).unwrap();
    let base = |x: &[f64]| vec![0.5 * (-x[1] * x[1]).exp(), 0.3 * x[0]];
    let chi = |x: &[f64]| (x[0] * 1.3).sin() + 0.4 * x[0] * x[1];
    let h = g.h;
    let gauged = |mid: &[f64]| -> Vec<f64> {
        let mut out = base(mid);
        for j in 0..2 {
            let mut a = mid.to_vec();
            let mut b = mid.to_vec();
            a[j] += 0.5 * h;
            b[j] -= 0.5 * h;
            out[j] += (chi(&a) - chi(&b)) / h;
        }
        out
    };
    let v = |x: &[f64]| x[0] * x[0] * 0.1;
    let p = assemble_with(&g, &v, &base, OperatorKind::Magnetic).unwrap();
    let q = assemble_with(&g, &v, &gauged, OperatorKind::Magnetic).unwrap();
    let e1 = hermitian_eigenvalues(&p.matrix.to_dense()).unwrap();
    let e2 = hermitian_eigenvalues(&q.matrix.to_dense()).unwrap();
    for (a, b) in e1.iter().zip(&e2) {
        assert!((a - b).abs() < 1e-10);
    }
    // explicit similarity e^{i chi} P e^{-i chi}
    let phase: Vec<c64> = g.positions().iter().map(|x| c64::from_polar(1.0, chi(x))).collect();
    let mut r = rng(3);
    let u = random_cvec(&mut r, g.unknowns());
    let lhs = q.matrix.matvec(&u);
    let pu: Vec<c64> = u.iter().zip(&phase).map(|(a, p)| a * p.conj()).collect();
    let rhs: Vec<c64> = p.matrix.matvec(&pu).iter().zip(&phase).map(|(a, p)| a * p).collect();
    let diff: Vec<c64> = lhs.iter().zip(&rhs).map(|(a, b)| a - b).collect();
    assert!(norm2(&diff) < 1e-10 * norm2(&lhs));
}

#[test]
fn dirichlet_monotonicity_under_obstacles() {
    let mut prev = 0.0;
    for radius in [0.0, 0.5, 0.9, 1.3] {
        let g = Grid::cartesian(2, 24, 3.0).unwrap();
        let g = if radius > 0.0 { g.with_obstacle(&Obstacle::ball(vec![0.0, 0.0], radius)).unwrap() } else { g };
        let op = assemble_dirichlet_exterior(&g, &Profile::Zero).unwrap();
        let low = hermitian_eigenvalues(&op.matrix.to_dense()).unwrap()[0];
        assert!(low > prev, "radius {radius}: {low} <= {prev}");
        prev = low;
    }
}

#[test]
fn magnetic_assembly_rejects_obstacles() {
    let g = Grid::cartesian(2, 10, 2.0).unwrap().with_obstacle(&Obstacle::ball(vec![0.0, 0.0], 0.5)).unwrap();
    assert!(assemble_magnetic(&g, &FieldSpec::free()).is_err());
}

#[test]
fn radial_sector_bessel_zeros() {
    // d = 3, nu = 1 on (0, pi]: eigenvalues (j_{1,k} / pi)^2
    let zeros = [4.493_409_457_909_064, 7.725_251_836_937_707, 10.904_121_659_428_899];
    let g = RadialGrid::origin(2000, std::f64::consts::PI).unwrap();
    let op = assemble_radial_sector(1, 3, &Profile::Zero, &g, RadialBoundary::Dirichlet).unwrap();
    let (a, b) = tridiag_of(&op);
    let ev = tridiagonal_eigenvalues(&a, &b, 3);
    for (e, z) in ev.iter().zip(&zeros) {
        let want = (z / std::f64::consts::PI).powi(2);
        assert!((e - want).abs() < 1e-4, "{e} vs {want}");
    }
}

#[test]
fn three_dimensional_levels_match_sectors() {
    // V = r^2 separates, so tensor products of one-dimensional eigenvectors are
    // eigenvectors of the assembled 3D matrix; levels converge to the sector
    // eigenvalues at second order in h.
    let sector_levels = {
        let g = RadialGrid::origin(6000, 9.0).unwrap();
        let mut lv = Vec::new();
        for nu in 0..3 {
            let op = assemble_radial_sector(nu, 3, &Profile::Harmonic { k: 1.0 }, &g, RadialBoundary::Dirichlet).unwrap();
            let (a, b) = tridiag_of(&op);
            lv.extend(tridiagonal_eigenvalues(&a, &b, 2));
        }
        lv.sort_by(|a, b| a.partial_cmp(b).unwrap());
        lv
    };
    let mut errors = Vec::new();
    for n in [23usize, 47] {
        let l = 6.0;
        let g1 = Grid::cartesian(1, n, l).unwrap();
        let p1 = assemble_dirichlet_exterior(&g1, &Profile::Harmonic { k: 1.0 }).unwrap();
        let dense = p1.matrix.to_dense();
        let eig = dense.self_adjoint_eigen(Side::Lower).unwrap();
        let vals: Vec<f64> = (0..n).map(|i| eig.S().column_vector()[i].re).collect();
        let vecs: Mat<c64> = eig.U().to_owned();
        let g3 = Grid::cartesian(3, n, l).unwrap();
        let p3 = assemble_dirichlet_exterior(&g3, &Profile::Harmonic { k: 1.0 }).unwrap();
        // spot-check a few tensor products
        for &(a, b, c) in &[(0usize, 0usize, 0usize), (1, 0, 0), (0, 2, 1)] {
            let v: Vec<c64> = (0..n * n * n)
                .map(|f| {
                    let idx = g3.multi_index(f);
                    vecs[(idx[0], a)] * vecs[(idx[1], b)] * vecs[(idx[2], c)]
                })
                .collect();
            let mv = p3.matrix.matvec(&v);
            let lam = vals[a] + vals[b] + vals[c];
            let res: Vec<c64> = mv.iter().zip(&v).map(|(x, y)| x - y * lam).collect();
            assert!(norm2(&res) < 1e-9 * lam, "residual {}", norm2(&res));
        }
        let mut sums = Vec::new();
        for a in 0..6 {
            for b in 0..6 {
                for c in 0..6 {
                    sums.push(vals[a] + vals[b] + vals[c]);
                }
            }
        }
        sums.sort_by(|a, b| a.partial_cmp(b).unwrap());
        // distinct levels 3, 5, 7
        let levels = [sums[0], sums[1], sums[4]];
        let targets = [sector_levels[0], sector_levels[1], sector_levels[2]];
        errors.push(levels.iter().zip(&targets).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max));
    }
    let order = (errors[0] / errors[1]).log2();
    assert!((1.7..2.3).contains(&order), "observed order {order} from {errors:?}");
}

#[test]
fn conjugated_radial_matches_direct_conjugation() {
    let params = lapdecay::CarlemanParamsF64::reference(1.0, 2.0).unwrap();
    let w = ConjugationWeight::new(params, 0.5);
    let mut errs = Vec::new();
    for n in [400usize, 800] {
        let g = RadialGrid::origin(n, 8.0).unwrap();
        let conj = conjugated_radial(&g, 3, 0, &w).unwrap();
        let plain = assemble_radial_sector(0, 3, &Profile::Zero, &g, RadialBoundary::Dirichlet).unwrap();
        let r = g.radii();
        let u: Vec<c64> = r.iter().map(|&x| cr(x * (-(x - 3.0).powi(2)).exp())).collect();
        let e: Vec<f64> = r.iter().map(|&x| w.phase(x).unwrap()).collect();
        let inner: Vec<c64> = u.iter().zip(&e).map(|(a, p)| a * (-p).exp()).collect();
        let direct: Vec<c64> = plain.matrix.matvec(&inner).iter().zip(&e).map(|(a, p)| a * p.exp()).collect();
        let assembled = conj.matrix.matvec(&u);
        let diff: Vec<c64> = direct.iter().zip(&assembled).map(|(a, b)| a - b).collect();
        errs.push(norm2(&diff) / norm2(&direct));
    }
    assert!(errs[1] < 1e-3, "{errs:?}");
    assert!(errs[0] / errs[1] > 3.0, "{errs:?}");
}

#[test]
fn conjugated_cartesian_on_constants() {
    let params = lapdecay::CarlemanParamsF64::reference(1.0, 1.5).unwrap();
    let w = ConjugationWeight::new(params, 0.3);
    let g = Grid::cartesian(2, 20, 2.0).unwrap();
    let op = conjugated_operator(&g, &w).unwrap();
    let ones = vec![cr(1.0); g.unknowns()];
    let out = op.matrix.matvec(&ones);
    for k in 0..g.unknowns() {
        let idx = g.multi_index(g.full_of(k));
        if idx.iter().any(|&i| i == 0 || i == g.n - 1) {
            continue;
        }
        let x = g.position(k);
        let r = (x[0] * x[0] + x[1] * x[1]).sqrt();
        let gg = w.g(r).unwrap();
        let want = -gg * gg + w.g_prime(r).unwrap() + gg / r;
        assert!((out[k].re - want).abs() < 1e-9 * want.abs().max(1.0));
    }
}

#[test]
fn sobolev_norm_identities() {
    let n = 60;
    let g = Grid::cartesian(1, n, 1.0).unwrap();
    let op = assemble_dirichlet_exterior(&g, &Profile::Zero).unwrap();
    // basis vector, h -> 0
    let mut e = vec![cr(0.0); n];
    e[7] = cr(1.0);
    let l2 = op.l2_norm(&e);
    for order in [1, -1] {
        let v = op.sobolev_norm(&e, 1e-9, order).unwrap();
        assert!((v - l2).abs() < 1e-12 * l2);
    }
    // eigenvector ratio 1 + h^2 Lambda
    let k = 3;
    let ev: Vec<c64> = (0..n).map(|i| cr((((i + 1) * k) as f64 * std::f64::consts::PI / (n + 1) as f64).sin())).collect();
    let lam = (2.0 - 2.0 * (k as f64 * std::f64::consts::PI / (n + 1) as f64).cos()) / (g.h * g.h);
    let hs = 0.05;
    let ratio = op.sobolev_norm(&ev, hs, 1).unwrap() / op.sobolev_norm(&ev, hs, -1).unwrap();
    assert!((ratio - (1.0 + hs * hs * lam)).abs() < 1e-10);
    assert!(op.sobolev_norm(&ev, hs, 2).is_err());
}

#[test]
fn literal_expansion_agrees_to_first_order() {
    let f = FieldSpec {
        v: Profile::Exponential { amp: 0.5, rate: 1.0 },
        b: Magnetic::Exponential { amp: vec![0.8, -0.5], rate: 0.7 },
        class: DecayClass::Exponential { c: 0.7 },
    };
    let mut errs = Vec::new();
    for n in [31usize, 63] {
        let g = Grid::cartesian(2, n, 4.0).unwrap();
        let a = assemble_magnetic(&g, &f).unwrap();
        let b = assemble_magnetic_literal(&g, &f).unwrap();
        let u: Vec<c64> = g.positions().iter().map(|x| cr((-(x[0] * x[0] + x[1] * x[1])).exp())).collect();
        let d: Vec<c64> = a.matrix.matvec(&u).iter().zip(b.matrix.matvec(&u)).map(|(x, y)| x - y).collect();
        errs.push(norm2(&d) / norm2(&a.matrix.matvec(&u)));
    }
    assert!(errs[1] < errs[0] && errs[1] < 0.05, "{errs:?}");
}

#[test]
fn decay_class_checks() {
    let radii: Vec<f64> = (0..200).map(|i| i as f64 * 0.2).collect();
    let ok = FieldSpec::potential(Profile::Exponential { amp: 2.0, rate: 1.5 }, 1.0);
    assert!(ok.decay_constant(3, &radii).unwrap() <= 2.0 + 1e-12);
    let bad = FieldSpec::potential(Profile::Harmonic { k: 1.0 }, 1.0);
    assert!(bad.decay_constant(3, &radii).is_err());
    let slow = FieldSpec::potential(Profile::Exponential { amp: 1.0, rate: 0.2 }, 1.0);
    assert!(slow.decay_constant(3, &radii).is_err());
}

#[test]
fn matrix_market_roundtrip_of_operator() {
    let g = Grid::cartesian(2, 5, 1.0).unwrap();
    let f = FieldSpec { v: Profile::Zero, b: Magnetic::Constant(vec![0.2, 0.1]), class: DecayClass::ShortRange { rho: 1.0 } };
    let op = assemble_magnetic(&g, &f).unwrap();
    let text = to_matrix_market(&op.matrix);
    let back: Csr = from_matrix_market(&text).unwrap();
    assert!(back.add(&op.matrix, cr(-1.0)).max_abs() < 1e-15);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn magnetic_operator_is_hermitian_and_nonnegative(b0 in -2.0f64..2.0, b1 in -2.0f64..2.0, rate in 0.1f64..2.0, amp in 0.0f64..3.0) {
        let g = Grid::cartesian(2, 7, 1.5).unwrap();
        let f = FieldSpec {
            v: Profile::Exponential { amp, rate },
            b: Magnetic::Exponential { amp: vec![b0, b1], rate },
            class: DecayClass::Exponential { c: rate },
        };
        let op = assemble_magnetic(&g, &f).unwrap();
        prop_assert!(op.hermitian_defect() < 1e-13);
        let low = hermitian_eigenvalues(&op.matrix.to_dense()).unwrap()[0];
        prop_assert!(low >= -1e-10);
    }

    #[test]
    fn sobolev_duality(seed in 0u64..1000, hs in 0.01f64..1.0) {
        let g = Grid::cartesian(2, 8, 1.0).unwrap();
        let op = assemble_dirichlet_exterior(&g, &Profile::Zero).unwrap();
        let mut r = rng(seed);
        let f = random_cvec(&mut r, g.unknowns());
        let u = random_cvec(&mut r, g.unknowns());
        let pair = lapdecay::linalg::dot(&f, &u).norm() * op.cell;
        let bound = op.sobolev_norm(&f, hs, -1).unwrap() * op.sobolev_norm(&u, hs, 1).unwrap();
        prop_assert!(pair <= bound * (1.0 + 1e-8));
    }

    #[test]
    fn enlarging_obstacle_raises_ground_state(r1 in 0.3f64..0.8, dr in 0.15f64..0.6) {
        let g = Grid::cartesian(2, 16, 2.5).unwrap();
        let small = g.clone().with_obstacle(&Obstacle::ball(vec![0.0, 0.0], r1)).unwrap();
        let large = g.with_obstacle(&Obstacle::ball(vec![0.0, 0.0], r1 + dr)).unwrap();
        let a = hermitian_eigenvalues(&assemble_dirichlet_exterior(&small, &Profile::Zero).unwrap().matrix.to_dense()).unwrap()[0];
        let b = hermitian_eigenvalues(&assemble_dirichlet_exterior(&large, &Profile::Zero).unwrap().matrix.to_dense()).unwrap()[0];
        prop_assert!(b >= a - 1e-12);
    }
}
