use serde::Serialize;

use super::observable::{ClassicalObservable, QuadraticForm};
use crate::error::{Error, Result};

/// Substeps of the implicit leapfrog used for non-quadratic generators.
pub const LEAPFROG_SUBSTEPS: usize = 64;
/// Phase-space coordinates beyond this magnitude abort the flow.
pub const DIVERGENCE_BOUND: f64 = 1e6;

const FIXED_POINT_ITERS: usize = 100;

/// One sample of the joint phase space.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct PhaseSpacePoint {
    pub q: f64,
    pub p: f64,
    pub q1: f64,
    pub p1: f64,
    pub q2: f64,
    pub p2: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PointerIndex {
    First,
    Second,
}

/// Unit-time flow of `eps * A(q, p) * P_i`. `P_i` is untouched and `Q_i`
/// gains `eps * A(q0, p0)` since `A` is conserved along its own flow.
pub fn kick(
    point: PhaseSpacePoint,
    eps: f64,
    a: &ClassicalObservable,
    pointer: PointerIndex,
) -> Result<PhaseSpacePoint> {
    let momentum = match pointer {
        PointerIndex::First => point.p1,
        PointerIndex::Second => point.p2,
    };
    let lambda = eps * momentum;
    let shift = eps * a.evaluate(point.q, point.p);
    let (q, p) = flow(a, lambda, point.q, point.p)?;
    let mut out = PhaseSpacePoint { q, p, ..point };
    match pointer {
        PointerIndex::First => out.q1 += shift,
        PointerIndex::Second => out.q2 += shift,
    }
    Ok(out)
}

/// Unit-time Hamiltonian flow of `lambda * A` on `(q, p)`.
pub fn flow(a: &ClassicalObservable, lambda: f64, q: f64, p: f64) -> Result<(f64, f64)> {
    let out = match a {
        ClassicalObservable::Linear(l) => (q + lambda * l.beta, p - lambda * l.alpha),
        ClassicalObservable::Quadratic(form) => quadratic_flow(form, lambda, q, p),
        _ => return leapfrog(a, lambda, q, p),
    };
    check_bounds(out.0, out.1)?;
    Ok(out)
}

fn check_bounds(q: f64, p: f64) -> Result<()> {
    if q.abs() > DIVERGENCE_BOUND || p.abs() > DIVERGENCE_BOUND || !q.is_finite() || !p.is_finite() {
        return Err(Error::FlowDivergence);
    }
    Ok(())
}

/// `sum_k x^k / (2k + offset)!`, i.e. cosh/sinh-type series in `sqrt(x)`.
fn even_series(x: f64, offset: u32) -> f64 {
    let r = x.abs().sqrt();
    if r < 1e-3 {
        let mut term = 1.0;
        let mut fact = 1.0;
        for k in 1..=offset {
            fact *= k as f64;
        }
        term /= fact;
        let mut sum = term;
        for k in 1..6u32 {
            let n = 2 * k + offset;
            term *= x / ((n - 1) as f64 * n as f64);
            sum += term;
        }
        return sum;
    }
    let (c, s) = if x > 0.0 { (r.cosh(), r.sinh()) } else { (r.cos(), r.sin()) };
    match offset {
        0 => c,
        1 => s / r,
        // (cosh r - 1) / r^2 with the sign of x
        _ => (c - 1.0) / x,
    }
}

/// Affine flow `z' = lambda J (M z + v)`, solved with the 2x2 exponential
/// of the traceless generator `L = lambda J M` (so `L^2 = -det(L) I`).
fn quadratic_flow(form: &QuadraticForm, lambda: f64, q: f64, p: f64) -> (f64, f64) {
    let m = form.hessian;
    // J = [[0, 1], [-1, 0]]
    let l = [[lambda * m[1][0], lambda * m[1][1]], [-lambda * m[0][0], -lambda * m[0][1]]];
    let delta = -(l[0][0] * l[1][1] - l[0][1] * l[1][0]);
    let (c0, c1, c2) = (even_series(delta, 0), even_series(delta, 1), even_series(delta, 2));
    let apply = |a: f64, b: f64, x: f64, y: f64| {
        (a * x + b * (l[0][0] * x + l[0][1] * y), a * y + b * (l[1][0] * x + l[1][1] * y))
    };
    let (hq, hp) = apply(c0, c1, q, p);
    let jv = (lambda * form.linear[1], -lambda * form.linear[0]);
    let (dq, dp) = apply(c1, c2, jv.0, jv.1);
    (hq + dq, hp + dp)
}

/// Generalized Stormer-Verlet for a non-separable `H = lambda A(q, p)`;
/// both implicit stages are solved by fixed-point iteration.
fn leapfrog(a: &ClassicalObservable, lambda: f64, mut q: f64, mut p: f64) -> Result<(f64, f64)> {
    let h = 1.0 / LEAPFROG_SUBSTEPS as f64;
    let grad = |q: f64, p: f64| {
        let (gq, gp) = a.gradient(q, p);
        (lambda * gq, lambda * gp)
    };
    for _ in 0..LEAPFROG_SUBSTEPS {
        let mut p_half = p;
        for _ in 0..FIXED_POINT_ITERS {
            let next = p - 0.5 * h * grad(q, p_half).0;
            let done = (next - p_half).abs() <= 1e-15 * next.abs().max(1.0);
            p_half = next;
            if done {
                break;
            }
        }
        let v0 = grad(q, p_half).1;
        let mut q_next = q + h * v0;
        for _ in 0..FIXED_POINT_ITERS {
            let next = q + 0.5 * h * (v0 + grad(q_next, p_half).1);
            let done = (next - q_next).abs() <= 1e-15 * next.abs().max(1.0);
            q_next = next;
            if done {
                break;
            }
        }
        q = q_next;
        p = p_half - 0.5 * h * grad(q, p_half).0;
        check_bounds(q, p)?;
    }
    Ok((q, p))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classical::observable::Polynomial;

    fn pt(q: f64, p: f64, q1: f64, p1: f64) -> PhaseSpacePoint {
        PhaseSpacePoint { q, p, q1, p1, q2: 0.3, p2: -0.2 }
    }

    #[test]
    fn linear_kicks() {
        let (eps, s) = (0.7, pt(0.4, -1.1, 0.25, 1.5));
        let k = kick(s, eps, &ClassicalObservable::q(), PointerIndex::First).unwrap();
        assert_eq!((k.q, k.p, k.q1, k.p1), (0.4, -1.1 - eps * 1.5, 0.25 + eps * 0.4, 1.5));
        let k = kick(s, eps, &ClassicalObservable::p(), PointerIndex::First).unwrap();
        assert!((k.q - (0.4 + eps * 1.5)).abs() < 1e-15);
        assert_eq!((k.p, k.p1), (-1.1, 1.5));
        assert!((k.q1 - (0.25 - eps * 1.1)).abs() < 1e-15);
        assert_eq!((k.q2, k.p2), (0.3, -0.2));
    }

    #[test]
    fn second_pointer_kick() {
        let s = pt(0.4, -1.1, 0.25, 1.5);
        let k = kick(s, 2.0, &ClassicalObservable::q(), PointerIndex::Second).unwrap();
        assert_eq!((k.q1, k.p), (0.25, -1.1 + 0.4));
        assert!((k.q2 - 1.1).abs() < 1e-15);
    }

    #[test]
    fn harmonic_rotation() {
        let (eps, s) = (0.3, pt(0.8, 0.5, 0.0, 2.0));
        let k = kick(s, eps, &ClassicalObservable::harmonic(), PointerIndex::First).unwrap();
        let th = eps * 2.0;
        assert!((k.q - (0.8 * th.cos() + 0.5 * th.sin())).abs() < 1e-14);
        assert!((k.p - (-0.8 * th.sin() + 0.5 * th.cos())).abs() < 1e-14);
        assert!((k.q1 - eps * (0.64 + 0.25) / 2.0).abs() < 1e-15);
    }

    #[test]
    fn harmonic_closed_form_vs_leapfrog() {
        let generic = ClassicalObservable::generic("harmonic", |q, p| 0.5 * (q * q + p * p));
        let poly = ClassicalObservable::Polynomial(Polynomial::from_triples(&[(2, 0, 0.5), (0, 2, 0.5)]));
        for &(q, p, lambda) in &[(0.8, 0.5, 0.05), (-1.2, 0.3, -0.04), (0.1, -2.0, 0.02)] {
            let exact = flow(&ClassicalObservable::harmonic(), lambda, q, p).unwrap();
            for a in [&generic, &poly] {
                let lf = flow(a, lambda, q, p).unwrap();
                assert!((lf.0 - exact.0).abs() < 1e-8 && (lf.1 - exact.1).abs() < 1e-8, "{lf:?} {exact:?}");
            }
        }
    }

    #[test]
    fn hyperbolic_and_nilpotent_flows() {
        // A = qp: q' = q e^lambda, p' = p e^-lambda
        let qp = ClassicalObservable::polynomial(Polynomial::from_triples(&[(1, 1, 1.0)]));
        let (q, p) = flow(&qp, 0.7, 1.3, -0.4).unwrap();
        assert!((q - 1.3 * 0.7f64.exp()).abs() < 1e-13);
        assert!((p + 0.4 * (-0.7f64).exp()).abs() < 1e-13);
        // A = p^2 / 2 + q: q' = q + lambda p - lambda^2 / 2, p' = p - lambda
        let free = ClassicalObservable::polynomial(Polynomial::from_triples(&[(0, 2, 0.5), (1, 0, 1.0)]));
        let (q, p) = flow(&free, 0.6, 0.2, 1.0).unwrap();
        assert!((q - (0.2 + 0.6 - 0.18)).abs() < 1e-14);
        assert!((p - 0.4).abs() < 1e-14);
    }

    #[test]
    fn symplectic_jacobian() {
        let forms = [
            ClassicalObservable::q(),
            ClassicalObservable::linear(0.3, -1.2, 0.5),
            ClassicalObservable::harmonic(),
            ClassicalObservable::polynomial(Polynomial::from_triples(&[
                (2, 0, 0.7),
                (1, 1, -0.4),
                (0, 2, 0.1),
                (1, 0, 0.3),
            ])),
            ClassicalObservable::polynomial(Polynomial::from_triples(&[(1, 1, 1.0)])),
        ];
        let h = 1e-4;
        for a in &forms {
            for &(q, p, lambda) in &[(0.3, -0.7, 0.9), (1.5, 0.2, -2.5)] {
                let f = |q, p| flow(a, lambda, q, p).unwrap();
                let (dq_q, dp_q) = {
                    let (a1, b1) = f(q + h, p);
                    let (a0, b0) = f(q - h, p);
                    ((a1 - a0) / (2.0 * h), (b1 - b0) / (2.0 * h))
                };
                let (dq_p, dp_p) = {
                    let (a1, b1) = f(q, p + h);
                    let (a0, b0) = f(q, p - h);
                    ((a1 - a0) / (2.0 * h), (b1 - b0) / (2.0 * h))
                };
                let det = dq_q * dp_p - dq_p * dp_q;
                assert!((det - 1.0).abs() < 1e-10, "{} det {det}", a.label());
            }
        }
    }

    #[test]
    fn divergence_detected() {
        let qp = ClassicalObservable::polynomial(Polynomial::from_triples(&[(1, 1, 1.0)]));
        assert_eq!(flow(&qp, 20.0, 1.0, 1.0), Err(Error::FlowDivergence));
        let cubic = ClassicalObservable::polynomial(Polynomial::from_triples(&[(0, 3, 1.0)]));
        assert_eq!(flow(&cubic, 1e4, 0.0, 500.0), Err(Error::FlowDivergence));
    }
}
