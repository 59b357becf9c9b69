//! Continuous-variable measurement pointers.
//!
//! A pointer is prepared either as the analytic real Gaussian ground state
//! (closed-form kernels for the low moments of Q and P) or as amplitudes on a
//! periodic position grid. On the grid the momentum operator is diagonal in
//! the discrete Fourier basis, so a translation `exp(-i x P)` is an exact
//! phase multiplication and stays unitary for any shift. Translations are
//! limited to a quarter of the box to keep wrap-around out of the tails.
//!
//! The central functional is the overlap kernel
//!
//! ```text
//! K(x, y, F) = Tr( exp(-i x P) rho exp(+i y P) F )
//! ```
//!
//! which is the pointer factor of every term in the eigenprojector expansion
//! of the post-measurement state. With `exp(-i x P)` shifting the position
//! distribution by `+x`.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64 as C64;
use rustfft::{Fft, FftPlanner};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::operator::{hermitian_deviation, CMatrix, I};

/// Threshold used by the pointer-condition predicates.
pub const CONDITION_THRESHOLD: f64 = 1e-8;
pub const DEFAULT_GRID_POINTS: usize = 256;

/// Periodic position grid with `x_j = (j - n/2) * spacing`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Grid {
    n_points: usize,
    spacing: f64,
}

impl Grid {
    pub fn new(n_points: usize, spacing: f64) -> Result<Self> {
        if n_points < 4 || !n_points.is_power_of_two() {
            return Err(Error::InvalidGrid(format!("n_points = {n_points} is not a power of two >= 4")));
        }
        if !(spacing.is_finite() && spacing > 0.0) {
            return Err(Error::InvalidGrid(format!("spacing = {spacing} must be positive")));
        }
        Ok(Self { n_points, spacing })
    }

    /// 256 points at `sigma_q / 8`.
    pub fn default_for(sigma_q: f64) -> Result<Self> {
        Self::new(DEFAULT_GRID_POINTS, sigma_q / 8.0)
    }

    pub fn n_points(&self) -> usize {
        self.n_points
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn extent(&self) -> f64 {
        self.n_points as f64 * self.spacing
    }

    /// Largest admissible translation magnitude (exclusive).
    pub fn max_translation(&self) -> f64 {
        self.extent() / 4.0
    }

    pub fn position(&self, j: usize) -> f64 {
        (j as f64 - (self.n_points / 2) as f64) * self.spacing
    }

    pub fn positions(&self) -> Vec<f64> {
        (0..self.n_points).map(|j| self.position(j)).collect()
    }

    /// Wavenumber of DFT mode `k` in standard FFT order. The Nyquist mode is
    /// assigned zero so that real functions stay real under translation.
    pub fn wavenumber(&self, k: usize) -> f64 {
        let n = self.n_points;
        let dk = 2.0 * PI / self.extent();
        if k < n / 2 {
            k as f64 * dk
        } else if k == n / 2 {
            0.0
        } else {
            (k as f64 - n as f64) * dk
        }
    }

    pub fn wavenumbers(&self) -> Vec<f64> {
        (0..self.n_points).map(|k| self.wavenumber(k)).collect()
    }

    /// Momentum operator in the position basis, assembled from explicit DFT
    /// sums (no FFT). Used by the dense oracles.
    pub fn momentum_matrix(&self) -> CMatrix {
        self.momentum_function_matrix(|k| k)
    }

    /// `f(P)` in the position basis via explicit DFT sums.
    pub fn momentum_function_matrix(&self, f: impl Fn(f64) -> f64) -> CMatrix {
        let n = self.n_points;
        let fk: Vec<f64> = (0..n).map(|k| f(self.wavenumber(k))).collect();
        // P[j, j'] depends on (j - j') mod n only
        let column: Vec<C64> = (0..n)
            .map(|d| {
                fk.iter()
                    .enumerate()
                    .map(|(k, &v)| {
                        let phase = 2.0 * PI * ((d * k) % n) as f64 / n as f64;
                        C64::from_polar(v, phase)
                    })
                    .sum::<C64>()
                    / n as f64
            })
            .collect();
        CMatrix::from_fn(n, n, |j, jp| column[(j + n - jp) % n])
    }
}

/// Real-valued function of a single pointer variable.
#[derive(Clone)]
pub struct ScalarFn {
    label: String,
    f: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
}

impl ScalarFn {
    pub fn new(label: impl Into<String>, f: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        Self { label: label.into(), f: Arc::new(f) }
    }

    pub fn eval(&self, x: f64) -> f64 {
        (self.f)(x)
    }

    pub fn label(&self) -> &str {
        &self.label
    }
}

impl fmt::Debug for ScalarFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "ScalarFn({})", self.label)
    }
}

/// Observable read off a pointer.
#[derive(Debug, Clone)]
pub enum PointerObservable {
    Identity,
    Position,
    Momentum,
    PositionSquared,
    MomentumSquared,
    FunctionOfQ(ScalarFn),
    FunctionOfP(ScalarFn),
    /// Explicit Hermitian matrix in the grid position basis.
    Matrix(CMatrix),
}

impl PointerObservable {
    pub fn matrix(m: CMatrix) -> Result<Self> {
        if m.nrows() != m.ncols() {
            return Err(Error::DimensionMismatch { expected: m.nrows(), found: m.ncols() });
        }
        let deviation = hermitian_deviation(&m);
        if deviation > 1e-10 {
            return Err(Error::NonHermitianInput { deviation });
        }
        Ok(Self::Matrix(m))
    }

    pub fn is_position_diagonal(&self) -> bool {
        matches!(self, Self::Identity | Self::Position | Self::PositionSquared | Self::FunctionOfQ(_))
    }

    pub fn is_momentum_diagonal(&self) -> bool {
        matches!(self, Self::Identity | Self::Momentum | Self::MomentumSquared | Self::FunctionOfP(_))
    }

    pub fn label(&self) -> String {
        match self {
            Self::Identity => "1".into(),
            Self::Position => "Q".into(),
            Self::Momentum => "P".into(),
            Self::PositionSquared => "Q^2".into(),
            Self::MomentumSquared => "P^2".into(),
            Self::FunctionOfQ(f) => format!("f(Q)={}", f.label()),
            Self::FunctionOfP(f) => format!("f(P)={}", f.label()),
            Self::Matrix(m) => format!("matrix{}x{}", m.nrows(), m.ncols()),
        }
    }

    fn position_value(&self, x: f64) -> f64 {
        match self {
            Self::Identity => 1.0,
            Self::Position => x,
            Self::PositionSquared => x * x,
            Self::FunctionOfQ(f) => f.eval(x),
            _ => unreachable!("not diagonal in position"),
        }
    }

    fn momentum_value(&self, k: f64) -> f64 {
        match self {
            Self::Identity => 1.0,
            Self::Momentum => k,
            Self::MomentumSquared => k * k,
            Self::FunctionOfP(f) => f.eval(k),
            _ => unreachable!("not diagonal in momentum"),
        }
    }

    /// Dense representation in the position basis of `grid`, assembled without
    /// FFTs. Used by the full-state oracle.
    pub fn grid_matrix(&self, grid: &Grid) -> Result<CMatrix> {
        let n = grid.n_points();
        match self {
            Self::Matrix(m) => {
                if m.nrows() != n {
                    return Err(Error::DimensionMismatch { expected: n, found: m.nrows() });
                }
                Ok(m.clone())
            }
            obs if obs.is_position_diagonal() => Ok(CMatrix::from_diagonal(&crate::operator::CVector::from_iterator(
                n,
                grid.positions().into_iter().map(|x| C64::new(obs.position_value(x), 0.0)),
            ))),
            obs => Ok(grid.momentum_function_matrix(|k| obs.momentum_value(k))),
        }
    }
}

/// How a Gaussian pointer is represented.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BackendChoice {
    AnalyticGaussian,
    Grid(Grid),
}

#[derive(Clone)]
struct GridComponent {
    weight: f64,
    amplitudes: Vec<C64>,
    spectrum: Vec<C64>,
}

#[derive(Clone)]
struct GridPointer {
    grid: Grid,
    sigma_q: Option<f64>,
    components: Vec<GridComponent>,
    fft: Arc<dyn Fft<f64>>,
    ifft: Arc<dyn Fft<f64>>,
}

#[derive(Clone)]
enum Backend {
    Analytic { sigma_q: f64 },
    Grid(Arc<GridPointer>),
}

/// Prepared state of one pointer.
#[derive(Clone)]
pub struct PointerState {
    backend: Backend,
}

impl fmt::Debug for PointerState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.backend {
            Backend::Analytic { sigma_q } => {
                f.debug_struct("PointerState::AnalyticGaussian").field("sigma_q", sigma_q).finish()
            }
            Backend::Grid(g) => f
                .debug_struct("PointerState::Grid")
                .field("grid", &g.grid)
                .field("sigma_q", &g.sigma_q)
                .field("components", &g.components.len())
                .finish(),
        }
    }
}

/// Outcome of the pointer-condition predicates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PointerConditionReport {
    pub mean_q: f64,
    pub mean_p: f64,
    pub current_density_max: f64,
    pub threshold: f64,
}

impl PointerConditionReport {
    /// `Tr(rho Q) = 0`.
    pub fn centered_position(&self) -> bool {
        self.mean_q.abs() <= self.threshold
    }

    /// `Tr(rho P) = 0`.
    pub fn centered_momentum(&self) -> bool {
        self.mean_p.abs() <= self.threshold
    }

    /// `<Q| rho P + P rho |Q> = 0` at every grid point.
    pub fn vanishing_current(&self) -> bool {
        self.current_density_max <= self.threshold
    }

    pub fn all_pass(&self) -> bool {
        self.centered_position() && self.centered_momentum() && self.vanishing_current()
    }
}

fn gaussian_amplitude(x: f64, sigma_q: f64) -> f64 {
    (2.0 * PI * sigma_q * sigma_q).powf(-0.25) * (-x * x / (4.0 * sigma_q * sigma_q)).exp()
}

/// Prepares the real zero-mean Gaussian pointer with position spread
/// `sigma_q`.
pub fn make_gaussian_pointer(sigma_q: f64, backend: BackendChoice) -> Result<PointerState> {
    match backend {
        BackendChoice::AnalyticGaussian => PointerState::analytic_gaussian(sigma_q),
        BackendChoice::Grid(grid) => PointerState::gaussian_on_grid(sigma_q, grid),
    }
}

impl PointerState {
    pub fn analytic_gaussian(sigma_q: f64) -> Result<Self> {
        if !(sigma_q.is_finite() && sigma_q > 0.0) {
            return Err(Error::InvalidArgument(format!("sigma_q = {sigma_q} must be positive")));
        }
        Ok(Self { backend: Backend::Analytic { sigma_q } })
    }

    /// Gaussian sampled on `grid`; requires `spacing <= sigma_q/4` and
    /// `extent >= 16 sigma_q`.
    pub fn gaussian_on_grid(sigma_q: f64, grid: Grid) -> Result<Self> {
        if !(sigma_q.is_finite() && sigma_q > 0.0) {
            return Err(Error::InvalidArgument(format!("sigma_q = {sigma_q} must be positive")));
        }
        if grid.spacing() > sigma_q / 4.0 || grid.extent() < 16.0 * sigma_q {
            return Err(Error::GridUnderResolved { sigma_q });
        }
        let amps: Vec<C64> =
            grid.positions().into_iter().map(|x| C64::new(gaussian_amplitude(x, sigma_q), 0.0)).collect();
        Self::build_grid(grid, Some(sigma_q), vec![(1.0, amps)])
    }

    /// Pure state from explicit amplitudes; normalized so that
    /// `sum |psi|^2 * spacing = 1`.
    pub fn from_amplitudes(grid: Grid, amplitudes: Vec<C64>) -> Result<Self> {
        Self::build_grid(grid, None, vec![(1.0, amplitudes)])
    }

    /// Convex mixture of pure grid states. Weights are normalized to sum one.
    pub fn mixture(grid: Grid, components: Vec<(f64, Vec<C64>)>) -> Result<Self> {
        Self::build_grid(grid, None, components)
    }

    fn build_grid(grid: Grid, sigma_q: Option<f64>, components: Vec<(f64, Vec<C64>)>) -> Result<Self> {
        if components.is_empty() {
            return Err(Error::InvalidArgument("pointer mixture has no components".into()));
        }
        let total: f64 = components.iter().map(|c| c.0).sum();
        if components.iter().any(|c| !(c.0 >= 0.0)) || !(total > 0.0) {
            return Err(Error::InvalidArgument("mixture weights must be nonnegative".into()));
        }
        let mut planner = FftPlanner::new();
        let fft = planner.plan_fft_forward(grid.n_points());
        let ifft = planner.plan_fft_inverse(grid.n_points());
        let mut comps = Vec::with_capacity(components.len());
        for (weight, mut amplitudes) in components {
            if amplitudes.len() != grid.n_points() {
                return Err(Error::DimensionMismatch { expected: grid.n_points(), found: amplitudes.len() });
            }
            let norm2: f64 = amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>() * grid.spacing();
            if !(norm2 > 0.0 && norm2.is_finite()) {
                return Err(Error::InvalidArgument("pointer amplitudes have zero norm".into()));
            }
            let scale = norm2.sqrt().recip();
            amplitudes.iter_mut().for_each(|a| *a *= scale);
            let mut spectrum = amplitudes.clone();
            fft.process(&mut spectrum);
            comps.push(GridComponent { weight: weight / total, amplitudes, spectrum });
        }
        Ok(Self { backend: Backend::Grid(Arc::new(GridPointer { grid, sigma_q, components: comps, fft, ifft })) })
    }

    pub fn backend_name(&self) -> &'static str {
        match self.backend {
            Backend::Analytic { .. } => "gaussian",
            Backend::Grid(_) => "grid",
        }
    }

    pub fn sigma_q(&self) -> Option<f64> {
        match &self.backend {
            Backend::Analytic { sigma_q } => Some(*sigma_q),
            Backend::Grid(g) => g.sigma_q,
        }
    }

    pub fn grid(&self) -> Option<&Grid> {
        match &self.backend {
            Backend::Analytic { .. } => None,
            Backend::Grid(g) => Some(&g.grid),
        }
    }

    pub fn is_pure(&self) -> bool {
        match &self.backend {
            Backend::Analytic { .. } => true,
            Backend::Grid(g) => g.components.len() == 1,
        }
    }

    /// (weight, amplitudes) of each pure component; `None` for the analytic
    /// backend.
    pub fn grid_components(&self) -> Option<Vec<(f64, &[C64])>> {
        match &self.backend {
            Backend::Analytic { .. } => None,
            Backend::Grid(g) => Some(g.components.iter().map(|c| (c.weight, c.amplitudes.as_slice())).collect()),
        }
    }

    /// True when every component is even or odd under `Q -> -Q`. Kernels of
    /// such states have definite parity in the translation arguments.
    pub fn is_parity_symmetric(&self) -> bool {
        match &self.backend {
            Backend::Analytic { .. } => true,
            Backend::Grid(g) => {
                let n = g.grid.n_points();
                g.components.iter().all(|c| {
                    let scale = c.amplitudes.iter().fold(0.0_f64, |m, a| m.max(a.norm()));
                    let tol = 1e-12 * scale;
                    let mirrored = |j: usize| c.amplitudes[(n - j) % n];
                    let even = (0..n).all(|j| (c.amplitudes[j] - mirrored(j)).norm() <= tol);
                    let odd = (0..n).all(|j| (c.amplitudes[j] + mirrored(j)).norm() <= tol);
                    even || odd
                })
            }
        }
    }

    fn grid_only(&self, what: &str) -> Result<&GridPointer> {
        match &self.backend {
            Backend::Grid(g) => Ok(g),
            Backend::Analytic { .. } => Err(Error::BackendUnsupported(format!("{what} requires the grid backend"))),
        }
    }

    /// Multiplies every component by `exp(i k Q)`, shifting `<P>` by `k`.
    pub fn boosted(&self, k: f64) -> Result<Self> {
        let g = self.grid_only("momentum boost")?;
        let xs = g.grid.positions();
        let comps = g
            .components
            .iter()
            .map(|c| {
                let amps = c.amplitudes.iter().zip(&xs).map(|(a, &x)| a * C64::from_polar(1.0, k * x)).collect();
                (c.weight, amps)
            })
            .collect();
        Self::build_grid(g.grid, None, comps)
    }

    /// Translates every component by `d` in position.
    pub fn displaced(&self, d: f64) -> Result<Self> {
        let g = self.grid_only("displacement")?;
        g.check_shift(d)?;
        let comps = g.components.iter().map(|c| (c.weight, g.translated(c, d))).collect();
        Self::build_grid(g.grid, None, comps)
    }

    /// `Tr(exp(-i x P) rho exp(+i y P) F)`.
    pub fn overlap_kernel(&self, x: f64, y: f64, f: &PointerObservable) -> Result<C64> {
        match &self.backend {
            Backend::Analytic { sigma_q } => analytic_kernel(*sigma_q, x, y, f),
            Backend::Grid(g) => g.kernel(x, y, f),
        }
    }

    /// `Tr(rho F)`.
    pub fn moment(&self, f: &PointerObservable) -> Result<f64> {
        let k = self.overlap_kernel(0.0, 0.0, f)?;
        if k.im.abs() > 1e-10 {
            return Err(Error::ImaginaryResidualTooLarge { residual: k.im.abs() });
        }
        Ok(k.re)
    }

    /// `Tr(rho P^2)`.
    pub fn momentum_second_moment(&self) -> Result<f64> {
        self.moment(&PointerObservable::MomentumSquared)
    }

    /// Evaluates `<Q>`, `<P>` and the largest current density magnitude.
    pub fn check_conditions(&self) -> PointerConditionReport {
        match &self.backend {
            Backend::Analytic { .. } => PointerConditionReport {
                mean_q: 0.0,
                mean_p: 0.0,
                current_density_max: 0.0,
                threshold: CONDITION_THRESHOLD,
            },
            Backend::Grid(g) => PointerConditionReport {
                mean_q: g.kernel(0.0, 0.0, &PointerObservable::Position).map(|z| z.re).unwrap_or(f64::NAN),
                mean_p: g.kernel(0.0, 0.0, &PointerObservable::Momentum).map(|z| z.re).unwrap_or(f64::NAN),
                current_density_max: g.current_density().iter().fold(0.0, |m, j| m.max(j.abs())),
                threshold: CONDITION_THRESHOLD,
            },
        }
    }

    /// Current density `<Q| rho P + P rho |Q>` at each grid point.
    pub fn current_density(&self) -> Result<Vec<f64>> {
        Ok(self.grid_only("current density profile")?.current_density())
    }

    /// `(Tr(rho {P, F}), Tr(rho [P, F]))`.
    pub fn symmetry_condition_values(&self, f: &PointerObservable) -> Result<(C64, C64)> {
        match &self.backend {
            Backend::Analytic { sigma_q } => {
                let s2 = sigma_q * sigma_q;
                match f {
                    PointerObservable::Identity
                    | PointerObservable::PositionSquared
                    | PointerObservable::MomentumSquared => Ok((C64::ZERO, C64::ZERO)),
                    PointerObservable::Position => Ok((C64::ZERO, -I)),
                    PointerObservable::Momentum => Ok((C64::new(1.0 / (2.0 * s2), 0.0), C64::ZERO)),
                    other => Err(Error::BackendUnsupported(format!(
                        "no closed form for {} on the analytic Gaussian",
                        other.label()
                    ))),
                }
            }
            Backend::Grid(g) => g.symmetry_values(f),
        }
    }
}

/// Closed forms for the real Gaussian `psi(Q) ~ exp(-Q^2 / (4 sigma^2))`.
///
/// `psi(Q - x) psi(Q - y) = O * N(Q; m, sigma^2)` with
/// `O = exp(-(x - y)^2 / (8 sigma^2))` and `m = (x + y) / 2`.
fn analytic_kernel(sigma_q: f64, x: f64, y: f64, f: &PointerObservable) -> Result<C64> {
    let s2 = sigma_q * sigma_q;
    let d = y - x;
    let overlap = (-(d * d) / (8.0 * s2)).exp();
    let m = 0.5 * (x + y);
    let v = match f {
        PointerObservable::Identity => C64::new(overlap, 0.0),
        PointerObservable::Position => C64::new(overlap * m, 0.0),
        PointerObservable::PositionSquared => C64::new(overlap * (m * m + s2), 0.0),
        PointerObservable::Momentum => C64::new(0.0, overlap * d / (4.0 * s2)),
        PointerObservable::MomentumSquared => C64::new(overlap * (1.0 / (4.0 * s2) - d * d / (16.0 * s2 * s2)), 0.0),
        other => {
            return Err(Error::BackendUnsupported(format!(
                "no closed form for {} on the analytic Gaussian",
                other.label()
            )))
        }
    };
    Ok(v)
}

impl GridPointer {
    fn check_shift(&self, shift: f64) -> Result<()> {
        let limit = self.grid.max_translation();
        if !(shift.abs() < limit) {
            return Err(Error::TranslationOutOfRange { shift, limit });
        }
        Ok(())
    }

    fn translated(&self, c: &GridComponent, shift: f64) -> Vec<C64> {
        if shift == 0.0 {
            return c.amplitudes.clone();
        }
        let n = self.grid.n_points();
        let mut buf: Vec<C64> = c
            .spectrum
            .iter()
            .enumerate()
            .map(|(k, s)| s * C64::from_polar(1.0, -self.grid.wavenumber(k) * shift))
            .collect();
        self.ifft.process(&mut buf);
        let inv = 1.0 / n as f64;
        buf.iter_mut().for_each(|z| *z *= inv);
        buf
    }

    fn apply_momentum_fn(&self, psi: &[C64], f: impl Fn(f64) -> f64) -> Vec<C64> {
        let n = self.grid.n_points();
        let mut buf = psi.to_vec();
        self.fft.process(&mut buf);
        for (k, z) in buf.iter_mut().enumerate() {
            *z *= f(self.grid.wavenumber(k)) / n as f64;
        }
        self.ifft.process(&mut buf);
        buf
    }

    /// `F psi` in the position representation.
    fn apply(&self, f: &PointerObservable, psi: &[C64]) -> Vec<C64> {
        match f {
            PointerObservable::Matrix(m) => {
                let v = crate::operator::CVector::from_column_slice(psi);
                (m * v).iter().copied().collect()
            }
            obs if obs.is_position_diagonal() => {
                let xs = self.grid.positions();
                psi.iter().zip(xs).map(|(a, x)| a * obs.position_value(x)).collect()
            }
            obs => self.apply_momentum_fn(psi, |k| obs.momentum_value(k)),
        }
    }

    fn inner(&self, a: &[C64], b: &[C64]) -> C64 {
        a.iter().zip(b).map(|(u, v)| u.conj() * v).sum::<C64>() * self.grid.spacing()
    }

    fn kernel(&self, x: f64, y: f64, f: &PointerObservable) -> Result<C64> {
        if let PointerObservable::Matrix(m) = f {
            if m.nrows() != self.grid.n_points() {
                return Err(Error::DimensionMismatch { expected: self.grid.n_points(), found: m.nrows() });
            }
        }
        self.check_shift(x)?;
        self.check_shift(y)?;
        let n = self.grid.n_points();
        let mut total = C64::ZERO;
        for c in &self.components {
            let value = if f.is_momentum_diagonal() {
                // sum_k f(k) |psi_k|^2 exp(-i k (x - y)), Parseval weight dx/n
                c.spectrum
                    .iter()
                    .enumerate()
                    .map(|(k, s)| {
                        let kk = self.grid.wavenumber(k);
                        C64::from_polar(f.momentum_value(kk) * s.norm_sqr(), -kk * (x - y))
                    })
                    .sum::<C64>()
                    * (self.grid.spacing() / n as f64)
            } else {
                let px = self.translated(c, x);
                let py = if y == x { px.clone() } else { self.translated(c, y) };
                self.inner(&py, &self.apply(f, &px))
            };
            total += value * c.weight;
        }
        Ok(total)
    }

    fn current_density(&self) -> Vec<f64> {
        let mut j = vec![0.0; self.grid.n_points()];
        for c in &self.components {
            let p_psi = self.apply_momentum_fn(&c.amplitudes, |k| k);
            for (acc, (a, pa)) in j.iter_mut().zip(c.amplitudes.iter().zip(&p_psi)) {
                *acc += c.weight * 2.0 * (a.conj() * pa).re;
            }
        }
        j
    }

    fn symmetry_values(&self, f: &PointerObservable) -> Result<(C64, C64)> {
        if let PointerObservable::Matrix(m) = f {
            if m.nrows() != self.grid.n_points() {
                return Err(Error::DimensionMismatch { expected: self.grid.n_points(), found: m.nrows() });
            }
        }
        let n = self.grid.n_points();
        let (mut sym, mut antisym) = (C64::ZERO, C64::ZERO);
        for c in &self.components {
            // a = <P psi | F psi>; sym = 2 Re a, antisym = a - conj(a)
            let a = if f.is_momentum_diagonal() {
                let re = c
                    .spectrum
                    .iter()
                    .enumerate()
                    .map(|(k, s)| {
                        let kk = self.grid.wavenumber(k);
                        kk * f.momentum_value(kk) * s.norm_sqr()
                    })
                    .sum::<f64>()
                    * (self.grid.spacing() / n as f64);
                C64::new(re, 0.0)
            } else {
                let p_psi = self.apply_momentum_fn(&c.amplitudes, |k| k);
                self.inner(&p_psi, &self.apply(f, &c.amplitudes))
            };
            sym += c.weight * 2.0 * a.re;
            antisym += c.weight * C64::new(0.0, 2.0 * a.im);
        }
        Ok((sym, antisym))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid_gaussian(sigma: f64) -> PointerState {
        PointerState::gaussian_on_grid(sigma, Grid::default_for(sigma).unwrap()).unwrap()
    }

    /// Independent quadrature of `int psi(Q) F psi(Q) dQ` for the continuum
    /// Gaussian using a fine midpoint rule; derivatives by finite differences.
    fn quadrature_moment(sigma: f64, f: &str) -> f64 {
        let n = 200_000;
        let half = 20.0 * sigma;
        let h = 2.0 * half / n as f64;
        let psi = |x: f64| gaussian_amplitude(x, sigma);
        let d = 1e-3 * sigma;
        (0..n)
            .map(|i| {
                let x = -half + (i as f64 + 0.5) * h;
                let v = match f {
                    "Q2" => x * x * psi(x) * psi(x),
                    // <P^2> = int |psi'|^2
                    "P2" => {
                        let dpsi = (psi(x + d) - psi(x - d)) / (2.0 * d);
                        dpsi * dpsi
                    }
                    _ => unreachable!(),
                };
                v * h
            })
            .sum()
    }

    #[test]
    fn grid_gaussian_is_centered_and_normalized() {
        let g = PointerState::gaussian_on_grid(1.0, Grid::new(256, 0.125).unwrap()).unwrap();
        let r = g.check_conditions();
        assert!(r.mean_q.abs() < 1e-10);
        assert!(r.mean_p.abs() < 1e-10);
        assert!(r.all_pass());
        assert!((g.moment(&PointerObservable::Identity).unwrap() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn momentum_variance_matches_quadrature() {
        for (sigma, expected) in [(1.0, 0.25), (0.5, 1.0), (2.0, 0.0625)] {
            let q = quadrature_moment(sigma, "P2");
            assert!((q - expected).abs() < 1e-6, "quadrature {q} vs {expected}");
            let m = grid_gaussian(sigma).moment(&PointerObservable::MomentumSquared).unwrap();
            assert!((m - q).abs() < 1e-6, "sigma {sigma}: grid {m} vs quadrature {q}");
        }
    }

    #[test]
    fn position_variance_matches_quadrature() {
        let q = quadrature_moment(1.0, "Q2");
        assert!((q - 1.0).abs() < 1e-8);
        let m = grid_gaussian(1.0).moment(&PointerObservable::PositionSquared).unwrap();
        assert!((m - q).abs() < 1e-8);
        assert!(grid_gaussian(1.0).moment(&PointerObservable::Position).unwrap().abs() < 1e-12);
    }

    #[test]
    fn under_resolved_grid_is_rejected() {
        let coarse = Grid::new(256, 0.5).unwrap();
        assert!(matches!(PointerState::gaussian_on_grid(1.0, coarse), Err(Error::GridUnderResolved { .. })));
        let small_box = Grid::new(64, 0.125).unwrap();
        assert!(matches!(PointerState::gaussian_on_grid(1.0, small_box), Err(Error::GridUnderResolved { .. })));
        assert!(Grid::new(100, 0.1).is_err());
    }

    #[test]
    fn kernel_examples() {
        for p in [grid_gaussian(1.0), PointerState::analytic_gaussian(1.0).unwrap()] {
            let id = PointerObservable::Identity;
            assert!((p.overlap_kernel(0.0, 0.0, &id).unwrap() - C64::ONE).norm() < 1e-12);
            assert!((p.overlap_kernel(0.2, 0.2, &id).unwrap() - C64::ONE).norm() < 1e-12);
            let expected = (-0.4_f64 * 0.4 / 8.0).exp();
            assert!((p.overlap_kernel(0.2, -0.2, &id).unwrap() - expected).norm() < 1e-12);
        }
        assert!(((-0.4_f64 * 0.4 / 8.0).exp() - 0.980199).abs() < 1e-6);
    }

    #[test]
    fn translation_guard() {
        let p = grid_gaussian(1.0);
        // extent 32, quarter 8
        assert!(p.overlap_kernel(7.9, 0.0, &PointerObservable::Identity).is_ok());
        assert!(matches!(
            p.overlap_kernel(8.0, 0.0, &PointerObservable::Identity),
            Err(Error::TranslationOutOfRange { .. })
        ));
        assert!(matches!(
            p.overlap_kernel(0.0, -9.0, &PointerObservable::Position),
            Err(Error::TranslationOutOfRange { .. })
        ));
    }

    #[test]
    fn boosted_gaussian_fails_momentum_condition() {
        let p = grid_gaussian(1.0).boosted(1.0).unwrap();
        let r = p.check_conditions();
        assert!((r.mean_p - 1.0).abs() < 1e-6, "mean_p {}", r.mean_p);
        assert!(!r.centered_momentum());
        assert!(!r.vanishing_current());
        assert!(r.centered_position());
    }

    #[test]
    fn displaced_gaussian_fails_position_condition() {
        let p = grid_gaussian(1.0).displaced(1.0).unwrap();
        let r = p.check_conditions();
        assert!((r.mean_q - 1.0).abs() < 1e-10);
        assert!(!r.centered_position());
        assert!(r.centered_momentum());
        assert!(r.vanishing_current());
    }

    #[test]
    fn parity_detection() {
        assert!(grid_gaussian(1.0).is_parity_symmetric());
        assert!(PointerState::analytic_gaussian(1.0).unwrap().is_parity_symmetric());
        assert!(!grid_gaussian(1.0).displaced(0.5).unwrap().is_parity_symmetric());
        let grid = Grid::default_for(1.0).unwrap();
        let skewed: Vec<C64> = grid
            .positions()
            .iter()
            .map(|&x| C64::new((-x * x / 4.0).exp() * (1.0 + 0.3 * (x / 2.0).tanh()), 0.0))
            .collect();
        assert!(!PointerState::from_amplitudes(grid, skewed).unwrap().is_parity_symmetric());
    }

    #[test]
    fn analytic_backend_rejects_sampled_functions() {
        let p = PointerState::analytic_gaussian(1.0).unwrap();
        let f = PointerObservable::FunctionOfQ(ScalarFn::new("cube", |x| x * x * x));
        assert!(matches!(p.moment(&f), Err(Error::BackendUnsupported(_))));
        assert!(matches!(p.symmetry_condition_values(&f), Err(Error::BackendUnsupported(_))));
        assert!(matches!(p.boosted(1.0), Err(Error::BackendUnsupported(_))));
    }

    #[test]
    fn symmetry_condition_examples() {
        let p = grid_gaussian(1.0);
        let fp = PointerObservable::FunctionOfP(ScalarFn::new("p^3+p", |k| k * k * k + k));
        let (_, antisym) = p.symmetry_condition_values(&fp).unwrap();
        assert_eq!(antisym, C64::ZERO);
        let (sym, antisym) = p.symmetry_condition_values(&PointerObservable::Position).unwrap();
        assert!(sym.norm() < 1e-10);
        assert!((antisym + I).norm() < 1e-10);
        // canonical commutator holds for any well-resolved state
        let (_, antisym) = p.boosted(0.7).unwrap().symmetry_condition_values(&PointerObservable::Position).unwrap();
        assert!((antisym + I).norm() < 1e-10);
    }

    #[test]
    fn momentum_matrix_matches_spectral_application() {
        let grid = Grid::new(16, 0.5).unwrap();
        let amps: Vec<C64> = grid.positions().iter().map(|&x| C64::new((-x * x).exp(), 0.3 * x)).collect();
        let p = PointerState::from_amplitudes(grid, amps).unwrap();
        let pm = grid.momentum_matrix();
        assert!(hermitian_deviation(&pm) < 1e-13);
        let g = match &p.backend {
            Backend::Grid(g) => g.clone(),
            _ => unreachable!(),
        };
        let psi = &g.components[0].amplitudes;
        let spectral = g.apply_momentum_fn(psi, |k| k);
        let dense = &pm * crate::operator::CVector::from_column_slice(psi);
        for (a, b) in spectral.iter().zip(dense.iter()) {
            assert!((a - b).norm() < 1e-12);
        }
    }
}
