use std::fmt;
use std::sync::Arc;

/// Step of the central differences used for closure observables.
pub const FD_STEP: f64 = 1e-5;

/// `coeff * q^i * p^j`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Monomial {
    pub q_pow: u32,
    pub p_pow: u32,
    pub coeff: f64,
}

/// Sparse polynomial in `(q, p)` with like terms merged.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Polynomial {
    terms: Vec<Monomial>,
}

impl Polynomial {
    pub fn new(terms: impl IntoIterator<Item = Monomial>) -> Self {
        let mut merged: Vec<Monomial> = Vec::new();
        for t in terms {
            match merged.iter_mut().find(|m| m.q_pow == t.q_pow && m.p_pow == t.p_pow) {
                Some(m) => m.coeff += t.coeff,
                None => merged.push(t),
            }
        }
        merged.retain(|m| m.coeff != 0.0);
        merged.sort_by_key(|m| (m.q_pow + m.p_pow, m.q_pow));
        Self { terms: merged }
    }

    /// From `(q_pow, p_pow, coeff)` triples.
    pub fn from_triples(triples: &[(u32, u32, f64)]) -> Self {
        Self::new(triples.iter().map(|&(q_pow, p_pow, coeff)| Monomial { q_pow, p_pow, coeff }))
    }

    pub fn terms(&self) -> &[Monomial] {
        &self.terms
    }

    pub fn degree(&self) -> u32 {
        self.terms.iter().map(|m| m.q_pow + m.p_pow).max().unwrap_or(0)
    }

    pub fn evaluate(&self, q: f64, p: f64) -> f64 {
        self.terms.iter().map(|m| m.coeff * q.powi(m.q_pow as i32) * p.powi(m.p_pow as i32)).sum()
    }

    pub fn d_dq(&self) -> Self {
        Self::new(self.terms.iter().filter(|m| m.q_pow > 0).map(|m| Monomial {
            q_pow: m.q_pow - 1,
            p_pow: m.p_pow,
            coeff: m.coeff * m.q_pow as f64,
        }))
    }

    pub fn d_dp(&self) -> Self {
        Self::new(self.terms.iter().filter(|m| m.p_pow > 0).map(|m| Monomial {
            q_pow: m.q_pow,
            p_pow: m.p_pow - 1,
            coeff: m.coeff * m.p_pow as f64,
        }))
    }

    pub fn mul(&self, other: &Self) -> Self {
        Self::new(self.terms.iter().flat_map(|a| {
            other.terms.iter().map(move |b| Monomial {
                q_pow: a.q_pow + b.q_pow,
                p_pow: a.p_pow + b.p_pow,
                coeff: a.coeff * b.coeff,
            })
        }))
    }

    pub fn sub(&self, other: &Self) -> Self {
        Self::new(self.terms.iter().copied().chain(other.terms.iter().map(|m| Monomial { coeff: -m.coeff, ..*m })))
    }

    fn coeff(&self, q_pow: u32, p_pow: u32) -> f64 {
        self.terms.iter().find(|m| m.q_pow == q_pow && m.p_pow == p_pow).map_or(0.0, |m| m.coeff)
    }
}

/// `alpha q + beta p + gamma`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearForm {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
}

/// `z^T M z / 2 + v . z + c` with `z = (q, p)` and `M` symmetric.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadraticForm {
    pub hessian: [[f64; 2]; 2],
    pub linear: [f64; 2],
    pub constant: f64,
}

/// Closure-defined phase-space function.
#[derive(Clone)]
pub struct PhaseFn {
    pub label: String,
    f: Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>,
}

impl PhaseFn {
    pub fn new(label: impl Into<String>, f: impl Fn(f64, f64) -> f64 + Send + Sync + 'static) -> Self {
        Self { label: label.into(), f: Arc::new(f) }
    }

    pub fn call(&self, q: f64, p: f64) -> f64 {
        (self.f)(q, p)
    }
}

impl fmt::Debug for PhaseFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "PhaseFn({})", self.label)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
pub enum ObservableKind {
    Linear,
    Quadratic,
    Polynomial,
    Generic,
}

/// Real function of one canonical pair. The same type serves the system
/// `(q, p)` and a pointer `(Q, P)`.
#[derive(Debug, Clone)]
pub enum ClassicalObservable {
    Linear(LinearForm),
    Quadratic(QuadraticForm),
    Polynomial(Polynomial),
    Generic(PhaseFn),
}

impl ClassicalObservable {
    pub fn q() -> Self {
        Self::linear(1.0, 0.0, 0.0)
    }

    pub fn p() -> Self {
        Self::linear(0.0, 1.0, 0.0)
    }

    pub fn linear(alpha: f64, beta: f64, gamma: f64) -> Self {
        Self::Linear(LinearForm { alpha, beta, gamma })
    }

    /// `(q^2 + p^2) / 2`.
    pub fn harmonic() -> Self {
        Self::Quadratic(QuadraticForm { hessian: [[1.0, 0.0], [0.0, 1.0]], linear: [0.0; 2], constant: 0.0 })
    }

    /// Picks the narrowest kind that represents `poly` exactly.
    pub fn polynomial(poly: Polynomial) -> Self {
        match poly.degree() {
            0 | 1 => Self::linear(poly.coeff(1, 0), poly.coeff(0, 1), poly.coeff(0, 0)),
            2 => {
                let off = poly.coeff(1, 1);
                Self::Quadratic(QuadraticForm {
                    hessian: [[2.0 * poly.coeff(2, 0), off], [off, 2.0 * poly.coeff(0, 2)]],
                    linear: [poly.coeff(1, 0), poly.coeff(0, 1)],
                    constant: poly.coeff(0, 0),
                })
            }
            _ => Self::Polynomial(poly),
        }
    }

    pub fn generic(label: impl Into<String>, f: impl Fn(f64, f64) -> f64 + Send + Sync + 'static) -> Self {
        Self::Generic(PhaseFn::new(label, f))
    }

    pub fn kind(&self) -> ObservableKind {
        match self {
            Self::Linear(_) => ObservableKind::Linear,
            Self::Quadratic(_) => ObservableKind::Quadratic,
            Self::Polynomial(_) => ObservableKind::Polynomial,
            Self::Generic(_) => ObservableKind::Generic,
        }
    }

    /// Exact polynomial form, if any.
    pub fn as_polynomial(&self) -> Option<Polynomial> {
        match self {
            Self::Linear(l) => Some(Polynomial::from_triples(&[(1, 0, l.alpha), (0, 1, l.beta), (0, 0, l.gamma)])),
            Self::Quadratic(f) => Some(Polynomial::from_triples(&[
                (2, 0, 0.5 * f.hessian[0][0]),
                (1, 1, 0.5 * (f.hessian[0][1] + f.hessian[1][0])),
                (0, 2, 0.5 * f.hessian[1][1]),
                (1, 0, f.linear[0]),
                (0, 1, f.linear[1]),
                (0, 0, f.constant),
            ])),
            Self::Polynomial(p) => Some(p.clone()),
            Self::Generic(_) => None,
        }
    }

    pub fn evaluate(&self, q: f64, p: f64) -> f64 {
        match self {
            Self::Linear(l) => l.alpha * q + l.beta * p + l.gamma,
            Self::Quadratic(f) => {
                let m = f.hessian;
                0.5 * (m[0][0] * q * q + (m[0][1] + m[1][0]) * q * p + m[1][1] * p * p)
                    + f.linear[0] * q
                    + f.linear[1] * p
                    + f.constant
            }
            Self::Polynomial(poly) => poly.evaluate(q, p),
            Self::Generic(g) => g.call(q, p),
        }
    }

    /// `(dA/dq, dA/dp)`; central differences for closures.
    pub fn gradient(&self, q: f64, p: f64) -> (f64, f64) {
        match self {
            Self::Linear(l) => (l.alpha, l.beta),
            Self::Quadratic(f) => {
                let m = f.hessian;
                (m[0][0] * q + m[0][1] * p + f.linear[0], m[1][0] * q + m[1][1] * p + f.linear[1])
            }
            Self::Polynomial(poly) => (poly.d_dq().evaluate(q, p), poly.d_dp().evaluate(q, p)),
            Self::Generic(g) => {
                let h = FD_STEP;
                ((g.call(q + h, p) - g.call(q - h, p)) / (2.0 * h), (g.call(q, p + h) - g.call(q, p - h)) / (2.0 * h))
            }
        }
    }

    pub fn label(&self) -> String {
        match self {
            Self::Generic(g) => g.label.clone(),
            other => {
                let poly = other.as_polynomial().unwrap_or_default();
                let parts: Vec<String> =
                    poly.terms().iter().map(|m| format!("{}*q^{}*p^{}", m.coeff, m.q_pow, m.p_pow)).collect();
                if parts.is_empty() {
                    "0".into()
                } else {
                    parts.join(" + ")
                }
            }
        }
    }
}

/// `{A, B} = dA/dq dB/dp - dA/dp dB/dq`. Symbolic whenever both sides are
/// polynomial.
pub fn poisson_bracket(a: &ClassicalObservable, b: &ClassicalObservable) -> ClassicalObservable {
    match (a.as_polynomial(), b.as_polynomial()) {
        (Some(pa), Some(pb)) => {
            ClassicalObservable::polynomial(pa.d_dq().mul(&pb.d_dp()).sub(&pa.d_dp().mul(&pb.d_dq())))
        }
        _ => {
            let (a, b) = (a.clone(), b.clone());
            let label = format!("{{{}, {}}}", a.label(), b.label());
            ClassicalObservable::generic(label, move |q, p| {
                let (aq, ap) = a.gradient(q, p);
                let (bq, bp) = b.gradient(q, p);
                aq * bp - ap * bq
            })
        }
    }
}
