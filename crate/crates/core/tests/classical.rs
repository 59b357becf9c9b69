use weakorder::classical::{
    classical_correlation_mc, classical_rhs, ClassicalModel, ClassicalObservable, GaussianDensity, Polynomial,
};
use weakorder::estimators::weak_limit_rhs;
use weakorder::operator::{CMatrix, CVector, DensityMatrix, Observable};
use weakorder::pointer::{Grid, PointerObservable, PointerState};
use weakorder::C64;

fn poly(triples: &[(u32, u32, f64)]) -> ClassicalObservable {
    ClassicalObservable::polynomial(Polynomial::from_triples(triples))
}

#[test]
fn monte_carlo_matches_limit() {
    let q = ClassicalObservable::q;
    let p = ClassicalObservable::p;
    let harmonic_b = ClassicalModel::standard(ClassicalObservable::harmonic(), poly(&[(1, 0, 1.0), (0, 1, 0.5)]));
    let cases = [
        (ClassicalModel::standard(q(), q()), q(), 0.05),
        (ClassicalModel::standard(q(), p()), p(), 0.05),
        (harmonic_b, q(), 0.05),
    ];
    for (i, (model, f1, eps1)) in cases.into_iter().enumerate() {
        let mc = classical_correlation_mc(&model, &f1, eps1, 1.0, 400_000, 40 + i as u64).unwrap();
        let expected = eps1 * classical_rhs(&model, &f1).total;
        assert!((mc.estimate - expected).abs() < 3.0 * mc.stderr, "case {i}: {mc:?} vs {expected}");
    }
}

/// `A = q`, `B = q^2`, `F1 = Q1^2`: the limit is 0 and the correlation per
/// `eps1 eps2` is exactly `3 eps1`.
#[test]
fn residual_shrinks_linearly_in_eps1() {
    let model = ClassicalModel::standard(ClassicalObservable::q(), poly(&[(2, 0, 1.0)]));
    let f1 = poly(&[(2, 0, 1.0)]);
    let rhs = classical_rhs(&model, &f1).total;
    assert!(rhs.abs() < 1e-12);
    let pts: Vec<(f64, f64)> = [0.4, 0.2, 0.1]
        .iter()
        .map(|&e| {
            let mc = classical_correlation_mc(&model, &f1, e, 1.0, 1_000_000, 9).unwrap();
            (e.ln(), (mc.estimate / e - rhs).abs().ln())
        })
        .collect();
    let n = pts.len() as f64;
    let (mx, my) = (pts.iter().map(|p| p.0).sum::<f64>() / n, pts.iter().map(|p| p.1).sum::<f64>() / n);
    let slope =
        pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum::<f64>() / pts.iter().map(|p| (p.0 - mx).powi(2)).sum::<f64>();
    assert!((0.8..=1.2).contains(&slope), "slope {slope}");
}

#[test]
fn vanishing_bracket_gives_order_symmetry() {
    let mut model = ClassicalModel::standard(ClassicalObservable::q(), poly(&[(2, 0, 1.0), (1, 0, -0.5)]));
    model.system = GaussianDensity::new(0.5, 0.0, 1.0, 1.0).unwrap();
    let f1 = ClassicalObservable::q();
    let (e1, e2) = (0.05, 1.0);
    let ab = classical_correlation_mc(&model, &f1, e1, e2, 400_000, 1).unwrap();
    let ba = classical_correlation_mc(&model.swapped(), &f1, e1, e2, 400_000, 2).unwrap();
    let combined = (ab.stderr.powi(2) + ba.stderr.powi(2)).sqrt();
    assert!((ab.estimate - ba.estimate).abs() < 3.0 * combined);
    let r1 = classical_rhs(&model, &f1);
    let r2 = classical_rhs(&model.swapped(), &f1);
    assert!((r1.total - r2.total).abs() < 1e-12);
}

#[test]
fn bracket_term_flips_with_order() {
    let model = ClassicalModel::standard(ClassicalObservable::q(), ClassicalObservable::p());
    let f1 = poly(&[(1, 0, 1.0), (0, 1, 1.0)]);
    let r1 = classical_rhs(&model, &f1);
    let r2 = classical_rhs(&model.swapped(), &f1);
    assert!((r1.product_term - r2.product_term).abs() < 1e-12);
    assert!((r1.bracket_term + r2.bracket_term).abs() < 1e-12);
    assert!(r1.bracket_term.abs() > 0.1);
}

fn ladder(dim: usize) -> CMatrix {
    CMatrix::from_fn(dim, dim, |i, j| if i + 1 == j { C64::new((j as f64).sqrt(), 0.0) } else { C64::new(0.0, 0.0) })
}

fn coherent(dim: usize, alpha: C64) -> CVector {
    let mut c = CVector::zeros(dim);
    let mut term = C64::new((-alpha.norm_sqr() / 2.0).exp(), 0.0);
    for n in 0..dim {
        c[n] = term;
        term *= alpha / ((n + 1) as f64).sqrt();
    }
    c
}

/// Commutator -> i {,}_PB and anticommutator -> 2 x product on a coherent
/// state against its classical Gaussian twin.
#[test]
fn dequantized_limits_agree() {
    let dim = 40;
    let alpha = C64::new(0.5, 0.3);
    let a = ladder(dim);
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let q_hat = Observable::new((&a + a.adjoint()) * C64::new(s, 0.0)).unwrap();
    let p_hat = Observable::new((a.adjoint() - &a) * C64::new(0.0, s)).unwrap();
    let rho = DensityMatrix::pure(&coherent(dim, alpha).normalize()).unwrap();

    for sigma in [0.7, 1.0, 1.5] {
        let pointer = PointerState::gaussian_on_grid(sigma, Grid::default_for(sigma).unwrap()).unwrap();
        let mut model = ClassicalModel::standard(ClassicalObservable::q(), ClassicalObservable::p());
        model.system = GaussianDensity::new(2f64.sqrt() * alpha.re, 2f64.sqrt() * alpha.im, s, s).unwrap();
        model.pointer1 = GaussianDensity::pointer(sigma).unwrap();
        for (f1q, f1c) in [
            (PointerObservable::Position, ClassicalObservable::q()),
            (PointerObservable::Momentum, ClassicalObservable::p()),
        ] {
            let quantum = weak_limit_rhs(&rho, &q_hat, &p_hat, &pointer, &f1q).unwrap().total;
            let classical = classical_rhs(&model, &f1c).total;
            assert!((quantum - classical).abs() < 1e-2, "sigma {sigma} {}: {quantum} vs {classical}", f1q.label());
        }
        // F1 = P on both sides is -<P1^2>
        let expected = -0.25 / (sigma * sigma);
        assert!((classical_rhs(&model, &ClassicalObservable::p()).total - expected).abs() < 1e-10);
    }
}
