//! Dense complex linear algebra on the (small) system Hilbert space.
//!
//! Observables carry their spectral decomposition as a list of eigenvalue
//! clusters, each with the orthogonal projector onto its eigenspace. Repeated
//! eigenvalues are merged into a single projector so that sums over
//! eigenprojectors range over distinct eigenvalues only.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};

pub type CMatrix = DMatrix<C64>;
pub type CVector = DVector<C64>;

/// Hermiticity tolerance (max elementwise deviation).
pub const TOL_HERM: f64 = 1e-12;
/// Eigenvalues closer than this are treated as one degenerate cluster.
pub const TOL_DEGEN: f64 = 1e-9;
/// Largest system dimension the dense routines are meant for.
pub const MAX_SYSTEM_DIM: usize = 64;

const EIGEN_EPS: f64 = 1e-15;
const EIGEN_MAX_ITER: usize = 10_000;

pub(crate) const I: C64 = C64::new(0.0, 1.0);

/// One eigenvalue together with the projector onto its eigenspace.
#[derive(Debug, Clone, PartialEq)]
pub struct Eigenspace {
    pub value: f64,
    pub projector: CMatrix,
    pub rank: usize,
}

pub fn hermitian_deviation(m: &CMatrix) -> f64 {
    let mut dev = 0.0_f64;
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            dev = dev.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    dev
}

fn check_square(m: &CMatrix) -> Result<usize> {
    if m.nrows() != m.ncols() {
        return Err(Error::DimensionMismatch { expected: m.nrows(), found: m.ncols() });
    }
    if m.nrows() == 0 {
        return Err(Error::InvalidArgument("empty matrix".into()));
    }
    Ok(m.nrows())
}

fn check_hermitian(m: &CMatrix) -> Result<()> {
    check_square(m)?;
    let deviation = hermitian_deviation(m);
    if deviation > TOL_HERM {
        return Err(Error::NonHermitianInput { deviation });
    }
    Ok(())
}

/// Eigen-decomposition of a Hermitian matrix into ascending eigenvalue
/// clusters with their eigenprojectors.
pub fn spectral_decompose(h: &CMatrix) -> Result<Vec<Eigenspace>> {
    check_hermitian(h)?;
    let dim = h.nrows();
    let sym = (h + h.adjoint()) * C64::new(0.5, 0.0);
    let eig = SymmetricEigen::try_new(sym, EIGEN_EPS, EIGEN_MAX_ITER).ok_or(Error::DecompositionFailure)?;

    let mut order: Vec<usize> = (0..dim).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));

    let mut clusters: Vec<Vec<usize>> = Vec::new();
    for &k in &order {
        match clusters.last_mut() {
            Some(cluster) if (eig.eigenvalues[k] - eig.eigenvalues[*cluster.last().unwrap()]).abs() < TOL_DEGEN => {
                cluster.push(k)
            }
            _ => clusters.push(vec![k]),
        }
    }

    Ok(clusters
        .into_iter()
        .map(|members| {
            let value = members.iter().map(|&k| eig.eigenvalues[k]).sum::<f64>() / members.len() as f64;
            let mut projector = CMatrix::zeros(dim, dim);
            for &k in &members {
                let v = eig.eigenvectors.column(k);
                projector += v * v.adjoint();
            }
            Eigenspace { value, projector, rank: members.len() }
        })
        .collect())
}

/// Hermitian operator on the system with its cached eigensystem.
#[derive(Debug, Clone, PartialEq)]
pub struct Observable {
    matrix: CMatrix,
    eigensystem: Vec<Eigenspace>,
}

impl Observable {
    pub fn new(matrix: CMatrix) -> Result<Self> {
        let eigensystem = spectral_decompose(&matrix)?;
        Ok(Self { matrix, eigensystem })
    }

    pub fn from_real_rows(rows: &[&[f64]]) -> Result<Self> {
        let n = rows.len();
        let m = CMatrix::from_fn(n, n, |i, j| C64::new(rows[i][j], 0.0));
        Self::new(m)
    }

    pub fn pauli_x() -> Self {
        Self::new(pauli_x()).expect("pauli_x is Hermitian")
    }

    pub fn pauli_y() -> Self {
        Self::new(pauli_y()).expect("pauli_y is Hermitian")
    }

    pub fn pauli_z() -> Self {
        Self::new(pauli_z()).expect("pauli_z is Hermitian")
    }

    pub fn identity(dim: usize) -> Self {
        Self::new(CMatrix::identity(dim, dim)).expect("identity is Hermitian")
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn eigensystem(&self) -> &[Eigenspace] {
        &self.eigensystem
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        self.eigensystem.iter().map(|e| e.value).collect()
    }

    /// Smallest distance between distinct eigenvalues, `None` for a multiple
    /// of the identity.
    pub fn min_gap(&self) -> Option<f64> {
        self.eigensystem.windows(2).map(|w| w[1].value - w[0].value).min_by(f64::total_cmp)
    }

    pub fn commutes_with(&self, other: &Observable, tol: f64) -> bool {
        let c = commutator(&self.matrix, &other.matrix);
        c.iter().all(|z| z.norm() <= tol)
    }

    /// Linear combination `alpha * self + beta * other`.
    pub fn combine(&self, alpha: f64, other: &Observable, beta: f64) -> Result<Observable> {
        check_dims(self.dim(), other.dim())?;
        Observable::new(&self.matrix * C64::new(alpha, 0.0) + &other.matrix * C64::new(beta, 0.0))
    }
}

/// Orthogonal projector: an observable with eigenvalues in {0, 1}.
#[derive(Debug, Clone, PartialEq)]
pub struct Projector(Observable);

impl Projector {
    pub fn new(matrix: CMatrix) -> Result<Self> {
        check_hermitian(&matrix)?;
        let sq = &matrix * &matrix;
        let deviation = (sq - &matrix).iter().map(|z| z.norm()).fold(0.0, f64::max);
        if deviation > 1e-10 {
            return Err(Error::NotAProjector { deviation });
        }
        Ok(Self(Observable::new(matrix)?))
    }

    /// Rank-one projector onto the normalized `ket`.
    pub fn onto(ket: &CVector) -> Result<Self> {
        let norm = ket.norm();
        if norm == 0.0 {
            return Err(Error::InvalidArgument("zero ket".into()));
        }
        let k = ket.unscale(norm);
        Self::new(&k * k.adjoint())
    }

    pub fn observable(&self) -> &Observable {
        &self.0
    }

    pub fn matrix(&self) -> &CMatrix {
        self.0.matrix()
    }

    pub fn dim(&self) -> usize {
        self.0.dim()
    }
}

impl AsRef<Observable> for Projector {
    fn as_ref(&self) -> &Observable {
        &self.0
    }
}

/// Mixed state of the system: Hermitian, positive, unit trace.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    matrix: CMatrix,
}

impl DensityMatrix {
    pub fn new(matrix: CMatrix) -> Result<Self> {
        check_hermitian(&matrix)?;
        let tr = matrix.trace();
        if (tr - C64::new(1.0, 0.0)).norm() > 1e-12 {
            return Err(Error::InvalidDensityMatrix(format!("trace {tr} != 1")));
        }
        let sym = (&matrix + matrix.adjoint()) * C64::new(0.5, 0.0);
        let eig = SymmetricEigen::try_new(sym, EIGEN_EPS, EIGEN_MAX_ITER).ok_or(Error::DecompositionFailure)?;
        let min = eig.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min);
        if min < -1e-10 {
            return Err(Error::InvalidDensityMatrix(format!("negative eigenvalue {min:e}")));
        }
        Ok(Self { matrix })
    }

    /// Pure state `|psi><psi|`; the ket is normalized first.
    pub fn pure(ket: &CVector) -> Result<Self> {
        let norm = ket.norm();
        if norm == 0.0 {
            return Err(Error::InvalidArgument("zero ket".into()));
        }
        let k = ket.unscale(norm);
        Ok(Self { matrix: &k * k.adjoint() })
    }

    pub fn maximally_mixed(dim: usize) -> Self {
        Self { matrix: CMatrix::identity(dim, dim) / C64::new(dim as f64, 0.0) }
    }

    /// Convex combination `w * a + (1 - w) * b`.
    pub fn mix(a: &DensityMatrix, b: &DensityMatrix, w: f64) -> Result<Self> {
        check_dims(a.dim(), b.dim())?;
        if !(0.0..=1.0).contains(&w) {
            return Err(Error::InvalidArgument(format!("mixing weight {w} outside [0, 1]")));
        }
        Ok(Self { matrix: &a.matrix * C64::new(w, 0.0) + &b.matrix * C64::new(1.0 - w, 0.0) })
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    /// Expectation value `Tr(rho A)`, real for Hermitian `A`.
    pub fn expect(&self, a: &Observable) -> Result<f64> {
        Ok(trace_product(self, &[a.matrix()])?.re)
    }

    /// Eigen-decomposition into (weight, ket) pairs with nonnegligible weight.
    pub fn pure_components(&self) -> Result<Vec<(f64, CVector)>> {
        let sym = (&self.matrix + self.matrix.adjoint()) * C64::new(0.5, 0.0);
        let eig = SymmetricEigen::try_new(sym, EIGEN_EPS, EIGEN_MAX_ITER).ok_or(Error::DecompositionFailure)?;
        Ok((0..self.dim())
            .filter(|&k| eig.eigenvalues[k] > 1e-15)
            .map(|k| (eig.eigenvalues[k], eig.eigenvectors.column(k).into_owned()))
            .collect())
    }
}

fn check_dims(expected: usize, found: usize) -> Result<()> {
    if expected != found {
        return Err(Error::DimensionMismatch { expected, found });
    }
    Ok(())
}

/// `Tr(rho * ops[0] * ops[1] * ...)` in exactly the given order.
pub fn trace_product(rho: &DensityMatrix, ops: &[&CMatrix]) -> Result<C64> {
    let dim = rho.dim();
    let mut acc = rho.matrix.clone();
    for op in ops {
        check_dims(dim, op.nrows())?;
        check_dims(dim, op.ncols())?;
        acc *= *op;
    }
    Ok(acc.trace())
}

pub fn commutator(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a * b - b * a
}

pub fn anticommutator(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a * b + b * a
}

/// `Tr(rho [A, B])`; purely imaginary for Hermitian A, B.
pub fn trace_commutator(rho: &DensityMatrix, a: &CMatrix, b: &CMatrix) -> Result<C64> {
    Ok(trace_product(rho, &[a, b])? - trace_product(rho, &[b, a])?)
}

/// `Tr(rho {A, B})`; purely real for Hermitian A, B.
pub fn trace_anticommutator(rho: &DensityMatrix, a: &CMatrix, b: &CMatrix) -> Result<C64> {
    Ok(trace_product(rho, &[a, b])? + trace_product(rho, &[b, a])?)
}

pub fn pauli_x() -> CMatrix {
    CMatrix::from_row_slice(2, 2, &[C64::ZERO, C64::ONE, C64::ONE, C64::ZERO])
}

pub fn pauli_y() -> CMatrix {
    CMatrix::from_row_slice(2, 2, &[C64::ZERO, -I, I, C64::ZERO])
}

pub fn pauli_z() -> CMatrix {
    CMatrix::from_row_slice(2, 2, &[C64::ONE, C64::ZERO, C64::ZERO, -C64::ONE])
}

/// Ket from real and imaginary parts.
pub fn ket(components: &[(f64, f64)]) -> CVector {
    CVector::from_iterator(components.len(), components.iter().map(|&(re, im)| C64::new(re, im)))
}

pub fn basis_ket(dim: usize, k: usize) -> CVector {
    let mut v = CVector::zeros(dim);
    v[k] = C64::ONE;
    v
}

#[cfg(test)]
mod tests {
    use super::*;

    fn max_abs(m: &CMatrix) -> f64 {
        m.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    #[test]
    fn pauli_z_decomposes_into_basis_projectors() {
        let es = spectral_decompose(&pauli_z()).unwrap();
        assert_eq!(es.len(), 2);
        assert!((es[0].value + 1.0).abs() < 1e-14);
        assert!((es[1].value - 1.0).abs() < 1e-14);
        let p1 = basis_ket(2, 1) * basis_ket(2, 1).adjoint();
        let p0 = basis_ket(2, 0) * basis_ket(2, 0).adjoint();
        assert!(max_abs(&(&es[0].projector - p1)) < 1e-12);
        assert!(max_abs(&(&es[1].projector - p0)) < 1e-12);
    }

    #[test]
    fn identity_is_a_single_cluster() {
        let es = spectral_decompose(&CMatrix::identity(3, 3)).unwrap();
        assert_eq!(es.len(), 1);
        assert_eq!(es[0].rank, 3);
        assert!((es[0].value - 1.0).abs() < 1e-14);
        assert!(max_abs(&(&es[0].projector - CMatrix::identity(3, 3))) < 1e-10);
    }

    #[test]
    fn degenerate_eigenvalues_merge() {
        let obs = Observable::from_real_rows(&[&[2.0, 0.0, 0.0], &[0.0, 2.0, 0.0], &[0.0, 0.0, -1.0]]).unwrap();
        assert_eq!(obs.eigenvalues().len(), 2);
        assert_eq!(obs.eigensystem()[1].rank, 2);
        assert_eq!(obs.min_gap(), Some(3.0));
    }

    #[test]
    fn non_hermitian_input_is_rejected() {
        let m = CMatrix::from_row_slice(2, 2, &[C64::ZERO, C64::ONE, C64::ZERO, C64::ZERO]);
        assert!(matches!(spectral_decompose(&m), Err(Error::NonHermitianInput { .. })));
        assert!(matches!(Observable::new(m), Err(Error::NonHermitianInput { .. })));
    }

    #[test]
    fn trace_product_examples() {
        let mixed = DensityMatrix::maximally_mixed(2);
        let x = pauli_x();
        assert!((trace_product(&mixed, &[&x, &x]).unwrap() - C64::ONE).norm() < 1e-15);

        let zero = DensityMatrix::pure(&basis_ket(2, 0)).unwrap();
        assert!(trace_product(&zero, &[&x]).unwrap().norm() < 1e-15);

        let s = std::f64::consts::FRAC_1_SQRT_2;
        let plus = Projector::onto(&ket(&[(s, 0.0), (s, 0.0)])).unwrap();
        let v = trace_product(&zero, &[plus.matrix(), &x]).unwrap();
        assert!((v - C64::new(0.5, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn trace_product_rejects_mismatched_dims() {
        let rho = DensityMatrix::maximally_mixed(2);
        let id3 = CMatrix::identity(3, 3);
        assert!(matches!(trace_product(&rho, &[&id3]), Err(Error::DimensionMismatch { expected: 2, found: 3 })));
    }

    #[test]
    fn commutator_examples() {
        let zero = DensityMatrix::pure(&basis_ket(2, 0)).unwrap();
        let (x, y) = (pauli_x(), pauli_y());
        assert!(trace_commutator(&zero, &x, &x).unwrap().norm() < 1e-15);
        assert!((trace_commutator(&zero, &x, &y).unwrap() - C64::new(0.0, 2.0)).norm() < 1e-14);
        assert!(trace_anticommutator(&zero, &x, &y).unwrap().norm() < 1e-14);
    }

    #[test]
    fn density_matrix_validation() {
        let bad_trace = CMatrix::identity(2, 2);
        assert!(matches!(DensityMatrix::new(bad_trace), Err(Error::InvalidDensityMatrix(_))));
        let negative = CMatrix::from_row_slice(2, 2, &[C64::new(1.5, 0.0), C64::ZERO, C64::ZERO, C64::new(-0.5, 0.0)]);
        assert!(matches!(DensityMatrix::new(negative), Err(Error::InvalidDensityMatrix(_))));
    }

    #[test]
    fn projector_validation() {
        assert!(matches!(Projector::new(pauli_z()), Err(Error::NotAProjector { .. })));
        let p = Projector::onto(&ket(&[(1.0, 0.0), (0.0, 1.0)])).unwrap();
        let vals = p.observable().eigenvalues();
        assert!((vals[0]).abs() < 1e-12 && (vals[1] - 1.0).abs() < 1e-12);
    }
}
