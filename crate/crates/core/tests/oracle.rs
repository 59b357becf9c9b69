use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use weakorder::channel::{correlation, expectation, full_state_oracle, oracle_correlation, MeasurementSetup};
use weakorder::operator::{basis_ket, CMatrix, DensityMatrix, Observable};
use weakorder::pointer::{make_gaussian_pointer, BackendChoice, Grid, PointerObservable, PointerState, ScalarFn};
use weakorder::random::{random_density, random_observable};
use weakorder::{Error, C64};

fn small_grid() -> Grid {
    Grid::new(32, 0.5).unwrap()
}

fn profile(center: f64, width: f64, chirp: f64) -> PointerState {
    let grid = small_grid();
    let amps = grid
        .positions()
        .iter()
        .map(|&x| C64::from_polar((-(x - center).powi(2) / (4.0 * width * width)).exp(), chirp * x * x))
        .collect();
    PointerState::from_amplitudes(grid, amps).unwrap()
}

fn pointer_observables() -> Vec<PointerObservable> {
    vec![
        PointerObservable::Identity,
        PointerObservable::Position,
        PointerObservable::Momentum,
        PointerObservable::PositionSquared,
        PointerObservable::MomentumSquared,
        PointerObservable::FunctionOfQ(ScalarFn::new("tanh", f64::tanh)),
        PointerObservable::FunctionOfP(ScalarFn::new("cos", f64::cos)),
    ]
}

#[test]
fn factorized_matches_full_state_on_small_grids() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    // non-Gaussian, complex and displaced pointers are all fair game here
    let pointers =
        [(profile(0.0, 1.0, 0.0), profile(0.0, 1.0, 0.0)), (profile(0.4, 0.8, 0.05), profile(-0.3, 1.2, -0.1))];
    for (p1, p2) in pointers {
        for _ in 0..3 {
            let rho = random_density(2, 0.4, &mut rng).unwrap();
            let a = random_observable(2, 1.0, &mut rng).unwrap();
            let b = random_observable(2, 1.0, &mut rng).unwrap();
            let setup = MeasurementSetup::new(rho, a, b, p1.clone(), p2.clone(), 0.9, 1.4).unwrap();
            for f1 in pointer_observables() {
                for g2 in [PointerObservable::Position, PointerObservable::PositionSquared, PointerObservable::Identity]
                {
                    let fast = correlation(&setup, &f1, &g2).unwrap();
                    let slow = oracle_correlation(&setup, &f1, &g2).unwrap();
                    assert!((fast - slow).abs() < 1e-10, "{} {}: {fast} vs {slow}", f1.label(), g2.label());
                }
            }
        }
    }
}

#[test]
fn full_state_uncoupled_is_product() {
    let rho = DensityMatrix::pure(&basis_ket(2, 1)).unwrap();
    let p = profile(0.0, 1.0, 0.0);
    let setup = MeasurementSetup::new(
        rho.clone(),
        Observable::pauli_x(),
        Observable::pauli_y(),
        p.clone(),
        p.clone(),
        0.0,
        0.0,
    )
    .unwrap();
    let state = full_state_oracle(&setup).unwrap();
    assert!((state.trace() - C64::ONE).norm() < 1e-12);
    let comps = p.grid_components().unwrap();
    // discrete normalization: amplitudes carry sqrt(dx)
    let psi = nalgebra::DVector::from_column_slice(comps[0].1) * C64::new(0.5f64.sqrt(), 0.0);
    let pm = &psi * psi.adjoint();
    let expected = rho.matrix().kronecker(&pm).kronecker(&pm);
    assert!((state.matrix() - expected).norm() < 1e-12);
}

#[test]
fn oracle_trace_is_one_under_coupling() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let rho = random_density(2, 0.2, &mut rng).unwrap();
    let p = profile(0.0, 1.0, 0.0);
    let setup =
        MeasurementSetup::new(rho, Observable::pauli_x(), Observable::pauli_z(), p.clone(), p, 1.5, 2.0).unwrap();
    let state = full_state_oracle(&setup).unwrap();
    assert!((state.trace() - C64::ONE).norm() < 1e-12);
    let m = state.matrix();
    assert!((m - m.adjoint()).norm() < 1e-12);
}

#[test]
fn oracle_refuses_large_dimensions() {
    let p = PointerState::gaussian_on_grid(1.0, Grid::default_for(1.0).unwrap()).unwrap();
    let rho = DensityMatrix::maximally_mixed(2);
    let setup =
        MeasurementSetup::new(rho, Observable::pauli_x(), Observable::pauli_z(), p.clone(), p, 0.5, 0.5).unwrap();
    assert!(matches!(full_state_oracle(&setup), Err(Error::OracleTooLarge { .. })));
}

#[test]
fn analytic_and_grid_backends_agree() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for sigma in [0.5, 1.0, 2.0] {
        let an = make_gaussian_pointer(sigma, BackendChoice::AnalyticGaussian).unwrap();
        let gr = make_gaussian_pointer(sigma, BackendChoice::Grid(Grid::default_for(sigma).unwrap())).unwrap();
        for f in [
            PointerObservable::Identity,
            PointerObservable::Position,
            PointerObservable::Momentum,
            PointerObservable::PositionSquared,
            PointerObservable::MomentumSquared,
        ] {
            for &(x, y) in &[(0.0, 0.0), (0.3, -0.4), (1.0, 1.5), (-0.7, 0.2)] {
                let (x, y) = (x * sigma, y * sigma);
                let d = an.overlap_kernel(x, y, &f).unwrap() - gr.overlap_kernel(x, y, &f).unwrap();
                assert!(d.norm() < 1e-6, "sigma {sigma} {} ({x},{y}): {d}", f.label());
            }
        }
        let rho = random_density(3, 0.5, &mut rng).unwrap();
        let a = random_observable(3, 1.0, &mut rng).unwrap();
        let b = random_observable(3, 1.0, &mut rng).unwrap();
        let s_an = MeasurementSetup::new(rho.clone(), a.clone(), b.clone(), an.clone(), an, 0.6, 1.0).unwrap();
        let s_gr = MeasurementSetup::new(rho, a, b, gr.clone(), gr, 0.6, 1.0).unwrap();
        for f1 in [PointerObservable::Position, PointerObservable::Momentum, PointerObservable::MomentumSquared] {
            let c_an = correlation(&s_an, &f1, &PointerObservable::Position).unwrap();
            let c_gr = correlation(&s_gr, &f1, &PointerObservable::Position).unwrap();
            assert!((c_an - c_gr).abs() < 1e-6);
        }
    }
}

#[test]
fn translations_compose() {
    let p = PointerState::gaussian_on_grid(1.0, Grid::default_for(1.0).unwrap()).unwrap();
    let two_step = p.displaced(0.7).unwrap().displaced(1.1).unwrap();
    let one_step = p.displaced(1.8).unwrap();
    let (a, b) = (two_step.grid_components().unwrap(), one_step.grid_components().unwrap());
    let diff: f64 = a[0].1.iter().zip(b[0].1).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max);
    assert!(diff < 1e-12);
    // K(x, x, Q) = <Q> + x
    for x in [-2.0, 0.5, 3.0] {
        let k = p.overlap_kernel(x, x, &PointerObservable::Position).unwrap();
        assert!((k - C64::new(x, 0.0)).norm() < 1e-12);
    }
    assert!((one_step.moment(&PointerObservable::Position).unwrap() - 1.8).abs() < 1e-12);
}

#[test]
fn kernel_is_hermitian_in_its_arguments() {
    let p = profile(0.3, 0.9, 0.07);
    for f in pointer_observables() {
        for &(x, y) in &[(0.2, -1.0), (1.5, 0.5), (-0.8, -0.3)] {
            let kxy = p.overlap_kernel(x, y, &f).unwrap();
            let kyx = p.overlap_kernel(y, x, &f).unwrap();
            assert!((kxy - kyx.conj()).norm() < 1e-12, "{}", f.label());
        }
    }
}

#[test]
fn user_matrix_pointer_observable() {
    let grid = small_grid();
    let q = PointerObservable::Position.grid_matrix(&grid).unwrap();
    let m = PointerObservable::matrix(q.clone()).unwrap();
    let p = profile(0.0, 1.0, 0.0);
    let rho = DensityMatrix::pure(&basis_ket(2, 0)).unwrap();
    let setup =
        MeasurementSetup::new(rho, Observable::pauli_x(), Observable::pauli_x(), p.clone(), p, 0.4, 1.0).unwrap();
    let via_matrix = expectation(&setup, &m, &PointerObservable::Position).unwrap();
    let via_enum = expectation(&setup, &PointerObservable::Position, &PointerObservable::Position).unwrap();
    assert!((via_matrix - via_enum).abs() < 1e-12);
    let skew = CMatrix::from_fn(32, 32, |i, j| if i + 1 == j { C64::ONE } else { C64::new(0.0, 0.0) });
    assert!(matches!(PointerObservable::matrix(skew), Err(Error::NonHermitianInput { .. })));
}
