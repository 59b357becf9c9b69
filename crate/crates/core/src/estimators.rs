//! Weak values from two-pointer correlations.
//!
//! The forward (projector-last) estimator couples the observable first and
//! the projector second and normalizes by `<Q2>`; the reverse
//! (projector-first) estimator couples the projector first and normalizes by
//! `<Q1>`. Numerators and normalizer are evaluated over a decreasing `eps1`
//! schedule and each is extrapolated to `eps1 -> 0` by least squares before
//! the ratio is taken. The momentum channel is divided by `2 <P1^2>` so that each estimate is
//! returned directly as a weak value.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;
use rayon::prelude::*;
use serde::Serialize;

use crate::channel::{correlation, pointer1_mean, pointer2_mean, MeasurementSetup};
use crate::error::{Error, Result};
use crate::operator::{trace_anticommutator, trace_commutator, trace_product, DensityMatrix, Observable, Projector, I};
use crate::pointer::{PointerObservable, PointerState};

/// Smallest admissible `Tr(rho P)` for a weak value.
pub const POST_SELECTION_FLOOR: f64 = 1e-6;
/// Fits whose Vandermonde condition number exceeds this are rejected.
pub const MAX_FIT_CONDITION: f64 = 1e10;
/// Default extrapolation schedule (geometric, ratio 2).
pub const DEFAULT_SCHEDULE: [f64; 4] = [0.2, 0.1, 0.05, 0.025];
/// Default tolerance on the max fit deviation for a limit to count as valid.
pub const DEFAULT_FIT_TOLERANCE: f64 = 1e-5;
/// Smallest `eps1` accepted by [`strong_coupling_asymmetry`].
pub const STRONG_COUPLING_MIN: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WeakValue {
    pub re: f64,
    pub im: f64,
}

impl WeakValue {
    pub fn new(re: f64, im: f64) -> Self {
        Self { re, im }
    }

    pub fn conj(self) -> Self {
        Self { re: self.re, im: -self.im }
    }

    pub fn as_complex(self) -> C64 {
        C64::new(self.re, self.im)
    }

    /// Largest componentwise difference.
    pub fn max_abs_diff(self, other: WeakValue) -> f64 {
        (self.re - other.re).abs().max((self.im - other.im).abs())
    }
}

impl From<C64> for WeakValue {
    fn from(z: C64) -> Self {
        Self { re: z.re, im: z.im }
    }
}

fn post_selection_probability(rho_s: &DensityMatrix, projector: &Projector) -> Result<f64> {
    let p = trace_product(rho_s, &[projector.matrix()])?.re;
    if p < POST_SELECTION_FLOOR {
        return Err(Error::PostSelectionTooRare { probability: p });
    }
    Ok(p)
}

/// `Tr(rho P A) / Tr(rho P)`.
pub fn weak_value(rho_s: &DensityMatrix, projector: &Projector, a: &Observable) -> Result<WeakValue> {
    let p = post_selection_probability(rho_s, projector)?;
    let num = trace_product(rho_s, &[projector.matrix(), a.matrix()])?;
    Ok((num / p).into())
}

/// The weak-coupling limit of `correlation / (eps1 eps2)`, split into the
/// part symmetric under exchange of the two observables and the
/// antisymmetric part.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WeakLimitRhs {
    /// `(i/2) Tr(rho {A, B}) Tr(rho_M1 [P1, F1])`
    pub sym_term: f64,
    /// `(i/2) Tr(rho [A, B]) Tr(rho_M1 {P1, F1})`
    pub antisym_term: f64,
    pub total: f64,
}

pub fn weak_limit_rhs(
    rho_s: &DensityMatrix,
    a: &Observable,
    b: &Observable,
    pointer1: &PointerState,
    f1: &PointerObservable,
) -> Result<WeakLimitRhs> {
    let anti_ab = trace_anticommutator(rho_s, a.matrix(), b.matrix())?;
    let comm_ab = trace_commutator(rho_s, a.matrix(), b.matrix())?;
    let (anti_pf, comm_pf) = pointer1.symmetry_condition_values(f1)?;
    let half_i = I * 0.5;
    let sym = half_i * anti_ab * comm_pf;
    let antisym = half_i * comm_ab * anti_pf;
    Ok(WeakLimitRhs { sym_term: sym.re, antisym_term: antisym.re, total: (sym + antisym).re })
}

/// Three-term polynomial fit over an `eps1` schedule.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CorrelationResult {
    /// Strictly decreasing.
    pub eps1_schedule: Vec<f64>,
    pub values: Vec<f64>,
    pub limit: f64,
    /// Coefficient of the second monomial of `basis` (`eps1` or `eps1^2`).
    pub slope: f64,
    /// Coefficient of the third monomial (`eps1^2` or `eps1^4`).
    pub curvature: f64,
    /// Max absolute deviation of the fit from the samples.
    pub fit_residual: f64,
    pub condition: f64,
    pub basis: FitBasis,
}

impl CorrelationResult {
    pub fn is_valid(&self, tolerance: f64) -> bool {
        self.fit_residual <= tolerance
    }
}

/// Monomials used by the extrapolation fit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum FitBasis {
    /// `c0 + c1 eps + c2 eps^2`
    Quadratic,
    /// `c0 + c2 eps^2 + c4 eps^4`; exact structure for parity-symmetric
    /// first pointers, whose kernels have definite parity in `eps1`.
    Even,
}

impl FitBasis {
    fn powers(self) -> [i32; 3] {
        match self {
            FitBasis::Quadratic => [0, 1, 2],
            FitBasis::Even => [0, 2, 4],
        }
    }
}

/// Least-squares extrapolation of `(eps1, value)` samples to `eps1 = 0` with
/// the quadratic basis.
pub fn extrapolate_limit(samples: &[(f64, f64)]) -> Result<CorrelationResult> {
    extrapolate_limit_with(samples, FitBasis::Quadratic)
}

/// As [`extrapolate_limit`] with a choice of basis. `slope` and `curvature`
/// are the coefficients of the second and third basis monomials.
pub fn extrapolate_limit_with(samples: &[(f64, f64)], basis: FitBasis) -> Result<CorrelationResult> {
    if samples.len() < 3 {
        return Err(Error::DegenerateSchedule(format!("{} samples, need at least 3", samples.len())));
    }
    let mut sorted = samples.to_vec();
    if sorted.iter().any(|&(e, v)| !(e.is_finite() && e > 0.0) || !v.is_finite()) {
        return Err(Error::DegenerateSchedule("eps1 values must be positive and values finite".into()));
    }
    sorted.sort_by(|a, b| b.0.total_cmp(&a.0));
    if sorted.windows(2).any(|w| w[0].0 == w[1].0) {
        return Err(Error::DegenerateSchedule("repeated eps1 value".into()));
    }

    let n = sorted.len();
    let powers = basis.powers();
    let v = DMatrix::from_fn(n, 3, |i, j| sorted[i].0.powi(powers[j]));
    let y = DVector::from_iterator(n, sorted.iter().map(|s| s.1));
    let svd = v.clone().svd(true, true);
    let smax = svd.singular_values.max();
    let smin = svd.singular_values.min();
    let condition = if smin > 0.0 { smax / smin } else { f64::INFINITY };
    if condition > MAX_FIT_CONDITION {
        return Err(Error::IllConditionedFit { condition });
    }
    let c = svd.solve(&y, 0.0).map_err(|_| Error::IllConditionedFit { condition })?;
    let fit_residual = (&v * &c - &y).amax();
    Ok(CorrelationResult {
        eps1_schedule: sorted.iter().map(|s| s.0).collect(),
        values: sorted.iter().map(|s| s.1).collect(),
        limit: c[0],
        slope: c[1],
        curvature: c[2],
        fit_residual,
        condition,
        basis,
    })
}

/// Preparations of the two pointers.
#[derive(Debug, Clone)]
pub struct PointerPair {
    pub first: PointerState,
    pub second: PointerState,
}

impl PointerPair {
    pub fn new(first: PointerState, second: PointerState) -> Self {
        Self { first, second }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Order {
    /// Observable first, projector second.
    Forward,
    /// Projector first, observable second.
    Reverse,
}

impl Order {
    pub fn as_str(self) -> &'static str {
        match self {
            Order::Forward => "forward",
            Order::Reverse => "reverse",
        }
    }
}

/// Raw pointer data at one `eps1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EstimatorSample {
    pub eps1: f64,
    /// `<Q1 Q2>` (centered on the initial `<Q1>`).
    pub q1q2: f64,
    /// `<P1 Q2>` (centered on the initial `<P1>`).
    pub p1q2: f64,
    /// `<Q2>` for the forward order, `<Q1>` for the reverse order.
    pub single_mean: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WeakValueEstimate {
    pub order: Order,
    /// Extrapolated `(Re, Im)` channels as measured.
    pub measured: WeakValue,
    /// Weak value implied by the measurement: `measured` for the forward
    /// order, its complex conjugate for the reverse order.
    pub weak_value: WeakValue,
    /// `<Q1 Q2> / (eps1 eps2)` against eps1.
    pub re_fit: CorrelationResult,
    /// `<P1 Q2> / (eps1 eps2)` against eps1.
    pub im_fit: CorrelationResult,
    /// Post-selection normalizer: `<Q2>/eps2` (forward) or `<Q1>/eps1` (reverse).
    pub norm_fit: CorrelationResult,
    pub momentum_variance: f64,
    pub eps2: f64,
    pub samples: Vec<EstimatorSample>,
}

/// Even-power basis when pointer 1 is parity symmetric (odd orders of eps1
/// vanish), quadratic otherwise.
pub fn fit_basis_for(pointer1: &PointerState) -> FitBasis {
    if pointer1.is_parity_symmetric() {
        FitBasis::Even
    } else {
        FitBasis::Quadratic
    }
}

fn check_estimator_pointers(pointers: &PointerPair) -> Result<()> {
    let r1 = pointers.first.check_conditions();
    if !r1.all_pass() {
        return Err(Error::PointerConditionsViolated(format!(
            "pointer 1: <Q> = {:.3e}, <P> = {:.3e}, max current = {:.3e}",
            r1.mean_q, r1.mean_p, r1.current_density_max
        )));
    }
    let r2 = pointers.second.check_conditions();
    if !r2.centered_position() {
        return Err(Error::PointerConditionsViolated(format!("pointer 2: <Q> = {:.3e}", r2.mean_q)));
    }
    Ok(())
}

fn estimate(
    order: Order,
    rho_s: &DensityMatrix,
    observable: &Observable,
    projector: &Projector,
    pointers: &PointerPair,
    eps1_schedule: &[f64],
    eps2: f64,
) -> Result<WeakValueEstimate> {
    if projector.dim() != rho_s.dim() {
        return Err(Error::DimensionMismatch { expected: rho_s.dim(), found: projector.dim() });
    }
    post_selection_probability(rho_s, projector)?;
    check_estimator_pointers(pointers)?;
    if eps1_schedule.len() < 3 {
        return Err(Error::DegenerateSchedule(format!("{} points, need at least 3", eps1_schedule.len())));
    }
    let (first, second) = match order {
        Order::Forward => (observable.clone(), projector.observable().clone()),
        Order::Reverse => (projector.observable().clone(), observable.clone()),
    };
    let base = MeasurementSetup::new(
        rho_s.clone(),
        first,
        second,
        pointers.first.clone(),
        pointers.second.clone(),
        eps1_schedule[0],
        eps2,
    )?;
    let momentum_variance = pointers.first.momentum_second_moment()?;

    let samples: Vec<EstimatorSample> = eps1_schedule
        .par_iter()
        .map(|&eps1| {
            let setup = base.with_eps1(eps1);
            let q1q2 = correlation(&setup, &PointerObservable::Position, &PointerObservable::Position)?;
            let p1q2 = correlation(&setup, &PointerObservable::Momentum, &PointerObservable::Position)?;
            let single_mean = match order {
                Order::Forward => pointer2_mean(&setup)?,
                Order::Reverse => pointer1_mean(&setup)?,
            };
            Ok(EstimatorSample { eps1, q1q2, p1q2, single_mean })
        })
        .collect::<Result<_>>()?;

    // numerators and normalizer are fitted separately; their ratio has a
    // denominator that moves quickly with eps1
    let basis = fit_basis_for(&pointers.first);
    let re: Vec<(f64, f64)> = samples.iter().map(|s| (s.eps1, s.q1q2 / (s.eps1 * eps2))).collect();
    let im: Vec<(f64, f64)> = samples.iter().map(|s| (s.eps1, s.p1q2 / (s.eps1 * eps2))).collect();
    let nm: Vec<(f64, f64)> = samples
        .iter()
        .map(|s| match order {
            Order::Forward => (s.eps1, s.single_mean / eps2),
            Order::Reverse => (s.eps1, s.single_mean / s.eps1),
        })
        .collect();
    let re_fit = extrapolate_limit_with(&re, basis)?;
    let im_fit = extrapolate_limit_with(&im, basis)?;
    let norm_fit = extrapolate_limit_with(&nm, basis)?;
    if norm_fit.limit.abs() < POST_SELECTION_FLOOR {
        return Err(Error::PostSelectionTooRare { probability: norm_fit.limit });
    }
    let measured =
        WeakValue::new(re_fit.limit / norm_fit.limit, im_fit.limit / (norm_fit.limit * 2.0 * momentum_variance));
    let weak_value = match order {
        Order::Forward => measured,
        Order::Reverse => measured.conj(),
    };
    Ok(WeakValueEstimate { order, measured, weak_value, re_fit, im_fit, norm_fit, momentum_variance, eps2, samples })
}

/// Projector measured last: `<Q1 Q2> / (eps1 <Q2>)` and
/// `<P1 Q2> / (eps1 <Q2> 2 <P1^2>)` extrapolated to `eps1 -> 0`.
pub fn forward_estimator(
    rho_s: &DensityMatrix,
    a: &Observable,
    projector: &Projector,
    pointers: &PointerPair,
    eps1_schedule: &[f64],
    eps2: f64,
) -> Result<WeakValueEstimate> {
    estimate(Order::Forward, rho_s, a, projector, pointers, eps1_schedule, eps2)
}

/// Projector measured first: `<Q1 Q2> / (eps2 <Q1>)` and
/// `<P1 Q2> / (eps2 <Q1> 2 <P1^2>)` extrapolated to `eps1 -> 0`. The measured
/// pair is the complex conjugate of the weak value of `b`.
pub fn reverse_estimator(
    rho_s: &DensityMatrix,
    projector: &Projector,
    b: &Observable,
    pointers: &PointerPair,
    eps1_schedule: &[f64],
    eps2: f64,
) -> Result<WeakValueEstimate> {
    estimate(Order::Reverse, rho_s, b, projector, pointers, eps1_schedule, eps2)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AsymmetryReport {
    pub eps1: f64,
    pub eps2: f64,
    /// `<Q1 Q2>` with `A` coupled first.
    pub a_first: f64,
    /// `<Q1 Q2>` with `B` coupled first.
    pub b_first: f64,
    pub difference: f64,
}

/// `|<Q1 Q2>(A first) - <Q1 Q2>(B first)|` at a deliberately strong `eps1`.
pub fn strong_coupling_asymmetry(
    rho_s: &DensityMatrix,
    a: &Observable,
    b: &Observable,
    pointers: &PointerPair,
    eps1: f64,
    eps2: f64,
) -> Result<AsymmetryReport> {
    if !(eps1 >= STRONG_COUPLING_MIN) {
        return Err(Error::InvalidArgument(format!(
            "eps1 = {eps1} is below the strong-coupling floor {STRONG_COUPLING_MIN}"
        )));
    }
    let setup = MeasurementSetup::new(
        rho_s.clone(),
        a.clone(),
        b.clone(),
        pointers.first.clone(),
        pointers.second.clone(),
        eps1,
        eps2,
    )?;
    let q = PointerObservable::Position;
    let a_first = correlation(&setup, &q, &q)?;
    let b_first = correlation(&setup.swapped(), &q, &q)?;
    Ok(AsymmetryReport { eps1, eps2, a_first, b_first, difference: (a_first - b_first).abs() })
}
