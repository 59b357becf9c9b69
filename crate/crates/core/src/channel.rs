//! The two-kick measurement channel.
//!
//! Pointer `M1` couples to the first observable through `eps1 * A * P1`,
//! then pointer `M2` couples to the second through `eps2 * B * P2`. The
//! order of the kicks is fixed; reverse-order experiments swap which operator
//! is assigned to the first slot.
//!
//! Expectations of `F1 (x) G2` on the post-measurement state factorize over
//! the eigenprojectors of both observables:
//!
//! ```text
//! sum_{n, n', m} Tr(rho_s P_a[n'] P_b[m] P_a[n])
//!     * K1(eps1 a_n, eps1 a_n', F1) * K2(eps2 b_m, eps2 b_m, G2)
//! ```
//!
//! The cross terms `m != m'` drop out under the system trace. No tensor
//! product is ever formed on this path; [`full_state_oracle`] builds the
//! full state from the coupling unitaries for cross-checking.

use nalgebra::SymmetricEigen;
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::operator::{trace_product, CMatrix, CVector, DensityMatrix, Observable};
use crate::pointer::{PointerObservable, PointerState};

/// Largest admissible imaginary part of a real-valued pointer expectation.
pub const IMAGINARY_RESIDUAL_TOL: f64 = 1e-10;
/// Largest total dimension `dim_s * n1 * n2` the dense oracle accepts.
pub const ORACLE_MAX_DIM: usize = 1 << 14;

#[derive(Debug, Clone)]
pub struct MeasurementSetup {
    pub rho_s: DensityMatrix,
    /// Coupled to pointer `M1` at the earlier time.
    pub first: Observable,
    /// Coupled to pointer `M2` at the later time.
    pub second: Observable,
    pub pointer1: PointerState,
    pub pointer2: PointerState,
    pub eps1: f64,
    pub eps2: f64,
}

impl MeasurementSetup {
    pub fn new(
        rho_s: DensityMatrix,
        first: Observable,
        second: Observable,
        pointer1: PointerState,
        pointer2: PointerState,
        eps1: f64,
        eps2: f64,
    ) -> Result<Self> {
        for obs in [&first, &second] {
            if obs.dim() != rho_s.dim() {
                return Err(Error::DimensionMismatch { expected: rho_s.dim(), found: obs.dim() });
            }
        }
        if !(eps1.is_finite() && eps2.is_finite()) {
            return Err(Error::InvalidArgument(format!("couplings must be finite (eps1 = {eps1}, eps2 = {eps2})")));
        }
        Ok(Self { rho_s, first, second, pointer1, pointer2, eps1, eps2 })
    }

    pub fn with_couplings(&self, eps1: f64, eps2: f64) -> Self {
        Self { eps1, eps2, ..self.clone() }
    }

    pub fn with_eps1(&self, eps1: f64) -> Self {
        self.with_couplings(eps1, self.eps2)
    }

    /// Same pointers and couplings, with the two observables exchanged.
    pub fn swapped(&self) -> Self {
        Self { first: self.second.clone(), second: self.first.clone(), ..self.clone() }
    }

    pub fn system_dim(&self) -> usize {
        self.rho_s.dim()
    }
}

/// `Tr(rho_s P_a[n'] P_b[m] P_a[n])` indexed `[n][n'][m]`.
fn system_weights(setup: &MeasurementSetup) -> Result<Vec<Vec<Vec<C64>>>> {
    let a = setup.first.eigensystem();
    let b = setup.second.eigensystem();
    a.iter()
        .map(|pn| {
            a.iter()
                .map(|pnp| {
                    b.iter()
                        .map(|pm| trace_product(&setup.rho_s, &[&pnp.projector, &pm.projector, &pn.projector]))
                        .collect()
                })
                .collect()
        })
        .collect()
}

fn factorized_sum(
    setup: &MeasurementSetup,
    f1: &PointerObservable,
    f1_offset: f64,
    g2: &PointerObservable,
) -> Result<C64> {
    let a = setup.first.eigensystem();
    let b = setup.second.eigensystem();
    let weights = system_weights(setup)?;

    let k2: Vec<C64> = b
        .iter()
        .map(|pm| {
            let x = setup.eps2 * pm.value;
            setup.pointer2.overlap_kernel(x, x, g2)
        })
        .collect::<Result<_>>()?;

    let mut total = C64::ZERO;
    for (n, an) in a.iter().enumerate() {
        for (np, anp) in a.iter().enumerate() {
            let sys: C64 = weights[n][np].iter().zip(&k2).map(|(w, k)| w * k).sum();
            if sys == C64::ZERO {
                continue;
            }
            let (x, y) = (setup.eps1 * an.value, setup.eps1 * anp.value);
            let mut k1 = setup.pointer1.overlap_kernel(x, y, f1)?;
            if f1_offset != 0.0 {
                k1 -= f1_offset * setup.pointer1.overlap_kernel(x, y, &PointerObservable::Identity)?;
            }
            total += sys * k1;
        }
    }
    Ok(total)
}

fn real_checked(z: C64) -> Result<f64> {
    if z.im.abs() > IMAGINARY_RESIDUAL_TOL {
        return Err(Error::ImaginaryResidualTooLarge { residual: z.im.abs() });
    }
    Ok(z.re)
}

/// `<F1 (x) G2>` after both kicks, without centering.
pub fn expectation(setup: &MeasurementSetup, f1: &PointerObservable, g2: &PointerObservable) -> Result<f64> {
    real_checked(factorized_sum(setup, f1, 0.0, g2)?)
}

/// Pointer correlation `<[F1 - Tr(rho_M1 F1)] (x) G2>` after both kicks.
///
/// `G2` must be diagonal in the position of `M2`.
pub fn correlation(setup: &MeasurementSetup, f1: &PointerObservable, g2: &PointerObservable) -> Result<f64> {
    if !g2.is_position_diagonal() {
        return Err(Error::InvalidArgument(format!(
            "second-pointer observable {} is not diagonal in position",
            g2.label()
        )));
    }
    let offset = setup.pointer1.moment(f1)?;
    real_checked(factorized_sum(setup, f1, offset, g2)?)
}

/// `<Q1>` after both kicks; equals `eps1 Tr(rho_s A)` at any coupling.
pub fn pointer1_mean(setup: &MeasurementSetup) -> Result<f64> {
    expectation(setup, &PointerObservable::Position, &PointerObservable::Identity)
}

/// `<Q2>` after both kicks; tends to `eps2 Tr(rho_s B)` as `eps1 -> 0`.
pub fn pointer2_mean(setup: &MeasurementSetup) -> Result<f64> {
    expectation(setup, &PointerObservable::Identity, &PointerObservable::Position)
}

/// Explicit post-measurement state on `system (x) M1 (x) M2`, with basis index
/// `(s * n1 + i) * n2 + j`.
#[derive(Debug, Clone)]
pub struct FullState {
    dim_s: usize,
    n1: usize,
    n2: usize,
    matrix: CMatrix,
}

impl FullState {
    pub fn dims(&self) -> (usize, usize, usize) {
        (self.dim_s, self.n1, self.n2)
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn trace(&self) -> C64 {
        self.matrix.trace()
    }

    /// `Tr(rho (1 (x) F1 (x) G2))` with `F1`, `G2` given in the grid
    /// position bases.
    pub fn expectation(&self, f1: &CMatrix, g2: &CMatrix) -> Result<C64> {
        let (ds, n1, n2) = self.dims();
        if f1.nrows() != n1 || f1.ncols() != n1 {
            return Err(Error::DimensionMismatch { expected: n1, found: f1.nrows() });
        }
        if g2.nrows() != n2 || g2.ncols() != n2 {
            return Err(Error::DimensionMismatch { expected: n2, found: g2.nrows() });
        }
        let idx = |s: usize, i: usize, j: usize| (s * n1 + i) * n2 + j;
        let mut total = C64::ZERO;
        for s in 0..ds {
            for i in 0..n1 {
                for ip in 0..n1 {
                    let f = f1[(ip, i)];
                    if f == C64::ZERO {
                        continue;
                    }
                    for j in 0..n2 {
                        for jp in 0..n2 {
                            let g = g2[(jp, j)];
                            if g == C64::ZERO {
                                continue;
                            }
                            total += self.matrix[(idx(s, i, j), idx(s, ip, jp))] * f * g;
                        }
                    }
                }
            }
        }
        Ok(total)
    }
}

/// `exp(-i eps (O (x) P))` on `system (x) pointer`, from an eigendecomposition
/// of the joint generator.
fn coupling_unitary(obs: &CMatrix, momentum: &CMatrix, eps: f64) -> Result<CMatrix> {
    let generator = obs.kronecker(momentum);
    let generator = (&generator + generator.adjoint()) * C64::new(0.5, 0.0);
    let eig = SymmetricEigen::try_new(generator, 1e-15, 10_000).ok_or(Error::DecompositionFailure)?;
    let phases =
        CVector::from_iterator(eig.eigenvalues.len(), eig.eigenvalues.iter().map(|&l| C64::from_polar(1.0, -eps * l)));
    let v = &eig.eigenvectors;
    Ok(v * CMatrix::from_diagonal(&phases) * v.adjoint())
}

fn grid_pointer(p: &PointerState, which: &str) -> Result<(crate::pointer::Grid, Vec<(f64, CVector)>)> {
    let grid = *p.grid().ok_or_else(|| Error::BackendUnsupported(format!("full-state oracle needs a grid {which}")))?;
    let scale = grid.spacing().sqrt();
    let comps = p
        .grid_components()
        .unwrap()
        .into_iter()
        .map(|(w, amps)| (w, CVector::from_iterator(amps.len(), amps.iter().map(|a| a * scale))))
        .collect();
    Ok((grid, comps))
}

/// Builds the full post-measurement state by applying the two coupling
/// unitaries to `rho_s (x) rho_M1 (x) rho_M2`. Test oracle only.
pub fn full_state_oracle(setup: &MeasurementSetup) -> Result<FullState> {
    let (grid1, comps1) = grid_pointer(&setup.pointer1, "pointer 1")?;
    let (grid2, comps2) = grid_pointer(&setup.pointer2, "pointer 2")?;
    let ds = setup.system_dim();
    let (n1, n2) = (grid1.n_points(), grid2.n_points());
    let dim = ds * n1 * n2;
    if dim > ORACLE_MAX_DIM {
        return Err(Error::OracleTooLarge { dim, limit: ORACLE_MAX_DIM });
    }
    let u1 = coupling_unitary(setup.first.matrix(), &grid1.momentum_matrix(), setup.eps1)?;
    let u2 = coupling_unitary(setup.second.matrix(), &grid2.momentum_matrix(), setup.eps2)?;
    let system = setup.rho_s.pure_components()?;
    let idx = |s: usize, i: usize, j: usize| (s * n1 + i) * n2 + j;

    let mut matrix = CMatrix::zeros(dim, dim);
    for (ws, sk) in &system {
        for (w1, psi1) in &comps1 {
            for (w2, psi2) in &comps2 {
                let mut state = CVector::from_fn(dim, |k, _| {
                    let (s, rest) = (k / (n1 * n2), k % (n1 * n2));
                    sk[s] * psi1[rest / n2] * psi2[rest % n2]
                });
                // first kick acts on (s, i) for each j
                for j in 0..n2 {
                    let v = CVector::from_fn(ds * n1, |k, _| state[idx(k / n1, k % n1, j)]);
                    let v = &u1 * v;
                    for k in 0..ds * n1 {
                        state[idx(k / n1, k % n1, j)] = v[k];
                    }
                }
                // second kick acts on (s, j) for each i
                for i in 0..n1 {
                    let v = CVector::from_fn(ds * n2, |k, _| state[idx(k / n2, i, k % n2)]);
                    let v = &u2 * v;
                    for k in 0..ds * n2 {
                        state[idx(k / n2, i, k % n2)] = v[k];
                    }
                }
                let w = C64::new(ws * w1 * w2, 0.0);
                matrix.ger(w, &state, &state.conjugate(), C64::ONE);
            }
        }
    }
    Ok(FullState { dim_s: ds, n1, n2, matrix })
}

/// Centered correlation evaluated on the oracle state.
pub fn oracle_correlation(setup: &MeasurementSetup, f1: &PointerObservable, g2: &PointerObservable) -> Result<f64> {
    let state = full_state_oracle(setup)?;
    let (grid1, comps1) = grid_pointer(&setup.pointer1, "pointer 1")?;
    let grid2 = *setup.pointer2.grid().unwrap();
    let f1m = f1.grid_matrix(&grid1)?;
    let g2m = g2.grid_matrix(&grid2)?;
    let offset: C64 = comps1.iter().map(|(w, c)| *w * c.dotc(&(&f1m * c))).sum();
    let id1 = CMatrix::identity(grid1.n_points(), grid1.n_points());
    let z = state.expectation(&f1m, &g2m)? - offset.re * state.expectation(&id1, &g2m)?;
    real_checked(z)
}
