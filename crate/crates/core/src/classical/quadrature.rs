use std::sync::OnceLock;

use nalgebra::{DMatrix, SymmetricEigen};

/// Order of the Gauss-Hermite rule used for phase-space averages.
pub const GAUSS_HERMITE_ORDER: usize = 64;

/// Nodes and weights of the Gauss-Hermite rule for the standard normal
/// weight (weights sum to 1), from the eigensystem of the Jacobi matrix.
pub fn gauss_hermite(order: usize) -> (Vec<f64>, Vec<f64>) {
    let jacobi =
        DMatrix::from_fn(order, order, |i, j| if i + 1 == j || j + 1 == i { (i.max(j) as f64).sqrt() } else { 0.0 });
    let eig = SymmetricEigen::new(jacobi);
    let mut pairs: Vec<(f64, f64)> =
        (0..order).map(|k| (eig.eigenvalues[k], eig.eigenvectors[(0, k)].powi(2))).collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    pairs.into_iter().unzip()
}

pub(crate) fn default_rule() -> &'static (Vec<f64>, Vec<f64>) {
    static RULE: OnceLock<(Vec<f64>, Vec<f64>)> = OnceLock::new();
    RULE.get_or_init(|| gauss_hermite(GAUSS_HERMITE_ORDER))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn normal_moments() {
        let (x, w) = default_rule();
        let m = |k: i32| x.iter().zip(w).map(|(x, w)| w * x.powi(k)).sum::<f64>();
        assert!((m(0) - 1.0).abs() < 1e-13);
        assert!(m(1).abs() < 1e-13);
        assert!((m(2) - 1.0).abs() < 1e-12);
        assert!((m(4) - 3.0).abs() < 1e-11);
        assert!((m(6) - 15.0).abs() < 1e-10);
    }

    #[test]
    fn small_rule_nodes() {
        let (x, w) = gauss_hermite(3);
        assert!((x[2] - 3f64.sqrt()).abs() < 1e-14);
        assert!(x[1].abs() < 1e-14);
        assert!((w[1] - 2.0 / 3.0).abs() < 1e-14);
    }
}
