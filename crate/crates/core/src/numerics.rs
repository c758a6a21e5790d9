//! Small numerical building blocks shared by the physics modules.

use nalgebra::{DMatrix, DVector};
use rustfft::FftPlanner;

use crate::C64;

/// Gauss–Legendre nodes and weights on `[-1, 1]` (Golub–Welsch via Newton on `P_n`).
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, 0.0);
            for j in 0..n {
                let p2 = p1;
                p1 = p0;
                p0 = ((2 * j + 1) as f64 * z * p1 - j as f64 * p2) / (j + 1) as f64;
            }
            dp = n as f64 * (z * p0 - p1) / (z * z - 1.0);
            let dz = p0 / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = 2.0 / ((1.0 - z * z) * dp * dp);
        w[n - 1 - i] = w[i];
    }
    (x, w)
}

/// Composite Gauss–Legendre rule on `[a, b]` with `panels` panels of `order` points.
pub fn composite_gauss(a: f64, b: f64, panels: usize, order: usize) -> Vec<(f64, f64)> {
    let (x, w) = gauss_legendre(order);
    let len = (b - a) / panels as f64;
    let mut out = Vec::with_capacity(panels * order);
    for p in 0..panels {
        let lo = a + p as f64 * len;
        for (xi, wi) in x.iter().zip(&w) {
            out.push((lo + 0.5 * len * (xi + 1.0), 0.5 * len * wi));
        }
    }
    out
}

/// Least-squares slope of `y` against `x`.
pub fn fit_slope(pts: &[(f64, f64)]) -> f64 {
    crate::geometry::linear_slope(pts)
}

/// Fitted exponential decay rate of positive values `(x, y)`: `y ~ exp(-rate x)`.
pub fn fit_decay_rate(pts: &[(f64, f64)]) -> f64 {
    let logs: Vec<(f64, f64)> = pts.iter().filter(|p| p.1 > 0.0).map(|p| (p.0, p.1.ln())).collect();
    -fit_slope(&logs)
}

/// Unitary DFT (`sign = -1` forward with `exp(-i...)`); length arbitrary.
pub fn fft_in_place(data: &mut [C64], inverse: bool) {
    let mut planner = FftPlanner::new();
    let plan = if inverse {
        planner.plan_fft_inverse(data.len())
    } else {
        planner.plan_fft_forward(data.len())
    };
    plan.process(data);
}

/// Angular frequencies matching FFT bin order for `n` samples at spacing `h`.
pub fn fft_frequencies(n: usize, h: f64) -> Vec<f64> {
    let dk = 2.0 * std::f64::consts::PI / (n as f64 * h);
    (0..n)
        .map(|m| if m <= n / 2 { m as f64 * dk } else { (m as f64 - n as f64) * dk })
        .collect()
}

/// Eigendecomposition of a Hermitian matrix with eigenvalues sorted ascending.
#[derive(Debug, Clone)]
pub struct HermitianEigen {
    pub values: Vec<f64>,
    pub vectors: DMatrix<C64>,
}

impl HermitianEigen {
    pub fn new(m: &DMatrix<C64>) -> Self {
        let eig = nalgebra::SymmetricEigen::new(m.clone());
        let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
        let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
        let vectors = DMatrix::from_fn(m.nrows(), order.len(), |r, c| eig.eigenvectors[(r, order[c])]);
        HermitianEigen { values, vectors }
    }

    /// `F(M)` for a real function `F` of the eigenvalues.
    pub fn apply_fn(&self, f: impl Fn(f64) -> f64) -> DMatrix<C64> {
        let n = self.vectors.nrows();
        let mut scaled = self.vectors.clone();
        for (c, &v) in self.values.iter().enumerate() {
            let fv = f(v);
            for r in 0..n {
                scaled[(r, c)] *= fv;
            }
        }
        &scaled * self.vectors.adjoint()
    }

    /// `exp(i theta M)`.
    pub fn exp_i(&self, theta: f64) -> DMatrix<C64> {
        let n = self.vectors.nrows();
        let mut scaled = self.vectors.clone();
        for (c, &v) in self.values.iter().enumerate() {
            let phase = C64::from_polar(1.0, theta * v);
            for r in 0..n {
                scaled[(r, c)] *= phase;
            }
        }
        &scaled * self.vectors.adjoint()
    }
}

pub fn hermiticity_residual(m: &DMatrix<C64>) -> f64 {
    (m - m.adjoint()).camax()
}

/// Spectral (2-)norm of a square matrix.
pub fn operator_norm(m: &DMatrix<C64>) -> f64 {
    let sv = m.clone().singular_values();
    sv.iter().cloned().fold(0.0, f64::max)
}

pub fn unitarity_residual(u: &DMatrix<C64>) -> f64 {
    let id = DMatrix::<C64>::identity(u.nrows(), u.ncols());
    operator_norm(&(u.adjoint() * u - id))
}

/// Modified Gram–Schmidt with re-orthogonalisation; vectors whose residual norm falls
/// below `drop_tol` times their original norm are skipped.
pub fn gram_schmidt(vectors: &[DVector<C64>], drop_tol: f64) -> Vec<DVector<C64>> {
    let mut basis: Vec<DVector<C64>> = Vec::new();
    for v in vectors {
        let scale = v.norm();
        if scale == 0.0 {
            continue;
        }
        let mut r = v.clone();
        for _ in 0..2 {
            for e in &basis {
                let c = e.dotc(&r);
                r -= e * c;
            }
        }
        let n = r.norm();
        if n > drop_tol * scale {
            basis.push(r / C64::new(n, 0.0));
        }
    }
    basis
}

/// Lagrange interpolation weights for node positions `nodes` at `x`.
pub fn lagrange_weights(nodes: &[f64], x: f64) -> Vec<f64> {
    (0..nodes.len())
        .map(|i| {
            nodes
                .iter()
                .enumerate()
                .filter(|&(j, _)| j != i)
                .map(|(_, &xj)| (x - xj) / (nodes[i] - xj))
                .product()
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_legendre_integrates_polynomials() {
        let (x, w) = gauss_legendre(7);
        for p in 0..14 {
            let q: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(p)).sum();
            let exact = if p % 2 == 1 { 0.0 } else { 2.0 / (p as f64 + 1.0) };
            assert!((q - exact).abs() < 1e-14, "degree {p}");
        }
    }

    #[test]
    fn hermitian_functional_calculus() {
        let m = DMatrix::from_row_slice(2, 2, &[C64::new(1.0, 0.0), C64::new(0.0, 2.0), C64::new(0.0, -2.0), C64::new(-1.0, 0.0)]);
        let e = HermitianEigen::new(&m);
        assert!(e.values[0] < e.values[1]);
        let sq = e.apply_fn(|v| v * v);
        assert!((sq - &m * &m).camax() < 1e-12);
        assert!(unitarity_residual(&e.exp_i(0.7)) < 1e-13);
    }

    #[test]
    fn gram_schmidt_drops_dependent_vectors() {
        let a = DVector::from_vec(vec![C64::new(1.0, 0.0), C64::new(1.0, 0.0), C64::new(0.0, 0.0)]);
        let b = &a * C64::new(0.0, 2.0);
        let c = DVector::from_vec(vec![C64::new(0.0, 0.0), C64::new(0.0, 0.0), C64::new(0.0, 1.0)]);
        let basis = gram_schmidt(&[a, b, c], 1e-10);
        assert_eq!(basis.len(), 2);
        assert!(basis[0].dotc(&basis[1]).norm() < 1e-15);
    }
}
