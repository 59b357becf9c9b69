//! Random operators and states for property checks and benchmark families.

use num_complex::Complex64 as C64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::Result;
use crate::operator::{CMatrix, CVector, DensityMatrix, Observable, Projector};

fn gaussian_complex<R: Rng + ?Sized>(rng: &mut R) -> C64 {
    C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
}

/// Haar-distributed normalized ket.
pub fn random_ket<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> CVector {
    let v = CVector::from_fn(dim, |_, _| gaussian_complex(rng));
    let n = v.norm();
    v.unscale(n)
}

/// Hermitian observable from the Gaussian unitary ensemble, rescaled so the
/// largest |eigenvalue| equals `scale`.
pub fn random_observable<R: Rng + ?Sized>(dim: usize, scale: f64, rng: &mut R) -> Result<Observable> {
    let g = CMatrix::from_fn(dim, dim, |_, _| gaussian_complex(rng));
    let h = (&g + g.adjoint()) * C64::new(0.5, 0.0);
    let obs = Observable::new(h)?;
    let radius = obs.eigenvalues().iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    Observable::new(obs.matrix() * C64::new(scale / radius, 0.0))
}

/// Full-rank mixed state `G G^dagger / Tr(G G^dagger)` mixed with a random
/// pure state; `purity_bias` in [0, 1] is the pure-state weight.
pub fn random_density<R: Rng + ?Sized>(dim: usize, purity_bias: f64, rng: &mut R) -> Result<DensityMatrix> {
    let g = CMatrix::from_fn(dim, dim, |_, _| gaussian_complex(rng));
    let gg = &g * g.adjoint();
    let tr = gg.trace();
    let mixed = gg / tr;
    let pure = random_ket(dim, rng);
    let pure = &pure * pure.adjoint();
    let m = pure * C64::new(purity_bias, 0.0) + mixed * C64::new(1.0 - purity_bias, 0.0);
    // re-symmetrize and fix the trace against rounding
    let m = (&m + m.adjoint()) * C64::new(0.5, 0.0);
    let tr = m.trace();
    DensityMatrix::new(m / tr)
}

/// Projector onto the span of `rank` random orthonormal vectors.
pub fn random_projector<R: Rng + ?Sized>(dim: usize, rank: usize, rng: &mut R) -> Result<Projector> {
    let g = CMatrix::from_fn(dim, rank, |_, _| gaussian_complex(rng));
    let q = g.qr().q();
    let p = &q * q.adjoint();
    let p = (&p + p.adjoint()) * C64::new(0.5, 0.0);
    Projector::new(p)
}
