//! Discretised Dirac operators and spectral quadratic forms.
//!
//! Fourier convention: `f^(xi) = (2 pi)^{-1/2} int exp(-i xi x) f(x) dx`. Under it the free
//! line operator `i L d_x` is multiplication by `diag(-xi, +xi)`.

mod wave;

pub use wave::*;

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

use crate::classical::{ClassicalError, DiracPotential, PotentialShape, SpinorField};
use crate::numerics::{fft_frequencies, fft_in_place, HermitianEigen};
use crate::C64;

const TWO_PI: f64 = 2.0 * std::f64::consts::PI;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SpectralError {
    #[error("resolution error: {0}")]
    Resolution(String),
    #[error("covariance bound 0 <= F <= 1 violated (F = {0})")]
    CovarianceBound(f64),
    #[error("convergence failure: {0}")]
    Convergence(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error(transparent)]
    Classical(#[from] ClassicalError),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum OperatorDomain {
    /// `[0, x_max]` with `u1 = u2` at both ends.
    HalfLine { x_max: f64 },
    /// `[-x_half, x_half]`, each component periodic.
    Line { x_half: f64 },
}

/// Hermitian central-difference discretisation of `i L d_x - V` on `N` cell centres per
/// component. Vector layout: `[u1_0 .. u1_{N-1}, u2_0 .. u2_{N-1}]`, scaled by `sqrt(h)` so
/// that the Euclidean inner product approximates the L2 one.
///
/// The half-line operator is the derivative on the circle obtained by unfolding
/// `u1(x) -> G(-x)`, `u2(x) -> G(x)`; both boundary conditions become periodicity. Central
/// differences carry the usual doubler branch near the zone edge; with a mass term it is
/// gapped like the physical branch.
#[derive(Debug, Clone)]
pub struct DiracOperatorMatrix {
    pub domain: OperatorDomain,
    pub n: usize,
    pub h: f64,
    pub potential: DiracPotential,
    pub matrix: DMatrix<C64>,
    pub eig: HermitianEigen,
}

impl DiracOperatorMatrix {
    pub fn new(domain: OperatorDomain, potential: &DiracPotential, n: usize) -> Result<Self, SpectralError> {
        if n < 16 {
            return Err(SpectralError::Resolution(format!("need N >= 16, got {n}")));
        }
        let (h, x0) = match domain {
            OperatorDomain::HalfLine { x_max } => (x_max / n as f64, 0.0),
            OperatorDomain::Line { x_half } => (2.0 * x_half / n as f64, -x_half),
        };
        if let PotentialShape::TanhSwitch { width, .. } = potential.shape {
            if !potential.is_zero() && h > 0.25 * width {
                return Err(SpectralError::Resolution(format!(
                    "grid spacing {h} too coarse for potential width {width}"
                )));
            }
        }
        let dim = 2 * n;
        let mut m = DMatrix::<C64>::zeros(dim, dim);
        let coeff = C64::new(0.0, -1.0 / (2.0 * h));
        match domain {
            OperatorDomain::HalfLine { .. } => {
                // Circle position p: p < N is u1 at j = N-1-p, p >= N is u2 at j = p-N.
                let idx = |p: usize| if p < n { n - 1 - p } else { p };
                for p in 0..dim {
                    let next = idx((p + 1) % dim);
                    let prev = idx((p + dim - 1) % dim);
                    // -i d_G on the circle.
                    m[(idx(p), next)] += coeff;
                    m[(idx(p), prev)] -= coeff;
                }
            }
            OperatorDomain::Line { .. } => {
                for j in 0..n {
                    let next = (j + 1) % n;
                    let prev = (j + n - 1) % n;
                    // component 1: i d_x, component 2: -i d_x.
                    m[(j, next)] -= coeff;
                    m[(j, prev)] += coeff;
                    m[(n + j, n + next)] += coeff;
                    m[(n + j, n + prev)] -= coeff;
                }
            }
        }
        for j in 0..n {
            let x = x0 + (j as f64 + 0.5) * h;
            let v = potential.matrix(x);
            for a in 0..2 {
                for b in 0..2 {
                    m[(a * n + j, b * n + j)] -= v[(a, b)];
                }
            }
        }
        let eig = HermitianEigen::new(&m);
        Ok(DiracOperatorMatrix { domain, n, h, potential: potential.clone(), matrix: m, eig })
    }

    pub fn x(&self, j: usize) -> f64 {
        match self.domain {
            OperatorDomain::HalfLine { .. } => (j as f64 + 0.5) * self.h,
            OperatorDomain::Line { x_half } => -x_half + (j as f64 + 0.5) * self.h,
        }
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eig.values
    }

    /// Samples `g` on the operator grid. Returns the scaled vector and the relative norm
    /// change caused by resampling and truncation (zero for aligned, contained grids).
    pub fn to_vector(&self, g: &SpinorField) -> (DVector<C64>, f64) {
        let n = self.n;
        let aligned = (g.h - self.h).abs() < 1e-12 * self.h && {
            let off = (self.x(0) - g.x_min) / g.h;
            (off - off.round()).abs() < 1e-6
        };
        let mut v = DVector::<C64>::zeros(2 * n);
        let sh = self.h.sqrt();
        for j in 0..n {
            let val = if aligned {
                let k = ((self.x(j) - g.x_min) / g.h).round();
                if k >= 0.0 && (k as usize) < g.len() { g.values[k as usize] } else { [C64::new(0.0, 0.0); 2] }
            } else {
                g.sample(self.x(j))
            };
            v[j] = val[0] * sh;
            v[n + j] = val[1] * sh;
        }
        let gn = g.norm();
        let residual = if gn > 0.0 { (v.norm() - gn).abs() / gn } else { 0.0 };
        (v, residual)
    }

    pub fn from_vector(&self, v: &DVector<C64>, time_tag: f64) -> SpinorField {
        let sh = 1.0 / self.h.sqrt();
        let n = self.n;
        SpinorField::from_fn(self.x(0), self.h, n, time_tag, |x| {
            let j = ((x - self.x(0)) / self.h).round() as usize;
            [v[j] * sh, v[n + j] * sh]
        })
    }

    /// `F(M)`.
    pub fn function(&self, f: impl Fn(f64) -> f64) -> DMatrix<C64> {
        self.eig.apply_fn(f)
    }

    /// `<v, F(M) v>` via the eigen-expansion.
    pub fn form_vector(&self, f: impl Fn(f64) -> f64, v: &DVector<C64>) -> f64 {
        let coeffs = self.eig.vectors.adjoint() * v;
        coeffs.iter().zip(&self.eig.values).map(|(c, &e)| f(e) * c.norm_sqr()).sum()
    }

    /// `M v`.
    pub fn apply(&self, v: &DVector<C64>) -> DVector<C64> {
        &self.matrix * v
    }
}

/// The spectral function defining a covariance.
#[derive(Clone, Copy)]
pub enum FormKind<'a> {
    PositiveProjection,
    NegativeProjection,
    /// `(1 + exp(-beta E))^{-1}`.
    Thermal(f64),
    Custom(&'a dyn Fn(f64) -> f64),
}

impl std::fmt::Debug for FormKind<'_> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            FormKind::PositiveProjection => write!(f, "PositiveProjection"),
            FormKind::NegativeProjection => write!(f, "NegativeProjection"),
            FormKind::Thermal(b) => write!(f, "Thermal({b})"),
            FormKind::Custom(_) => write!(f, "Custom"),
        }
    }
}

impl FormKind<'_> {
    pub fn eval(&self, e: f64) -> f64 {
        match self {
            FormKind::PositiveProjection => (e > 0.0) as u8 as f64,
            FormKind::NegativeProjection => (e < 0.0) as u8 as f64,
            FormKind::Thermal(beta) => fermi(*beta, e),
            FormKind::Custom(f) => f(e),
        }
    }

    /// `F(0+) - F(0-)` for the projections, which need an endpoint correction in quadrature.
    fn jump_at_zero(&self) -> f64 {
        match self {
            FormKind::PositiveProjection => 1.0,
            FormKind::NegativeProjection => -1.0,
            _ => 0.0,
        }
    }
}

/// `(1 + exp(-beta e))^{-1}` without overflow.
pub fn fermi(beta: f64, e: f64) -> f64 {
    let a = beta * e;
    if a >= 0.0 {
        1.0 / (1.0 + (-a).exp())
    } else {
        let x = a.exp();
        x / (1.0 + x)
    }
}

/// Operator entering a quadratic form.
#[derive(Debug, Clone, Copy)]
pub enum FormOperator<'a> {
    Discrete(&'a DiracOperatorMatrix),
    /// `i L d_x` on the line, via the Fourier multiplier.
    FreeLine,
    /// `i L d_x` on the half-line with `u1(0) = u2(0)`, via the generalised eigenfunctions
    /// `phi_k(x) = (2 pi)^{-1/2} (exp(-ikx), exp(ikx))`.
    FreeHalfLine,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FormValue {
    pub value: f64,
    /// Relative norm change from resampling onto the operator grid.
    pub resample_residual: f64,
}

/// `<g, F(b) g>`.
pub fn quadratic_form(kind: FormKind<'_>, op: FormOperator<'_>, g: &SpinorField) -> Result<FormValue, SpectralError> {
    match op {
        FormOperator::Discrete(m) => {
            for &e in m.eigenvalues() {
                let v = kind.eval(e);
                if !(-1e-12..=1.0 + 1e-12).contains(&v) {
                    return Err(SpectralError::CovarianceBound(v));
                }
            }
            let (v, residual) = m.to_vector(g);
            Ok(FormValue { value: m.form_vector(|e| kind.eval(e), &v), resample_residual: residual })
        }
        FormOperator::FreeLine => {
            check_custom(kind)?;
            let c1: Vec<C64> = g.values.iter().map(|v| v[0]).collect();
            let c2: Vec<C64> = g.values.iter().map(|v| v[1]).collect();
            let a = spectral_integral(&c1, g.x_min, g.h, |k| kind.eval(-k), -kind.jump_at_zero());
            let b = spectral_integral(&c2, g.x_min, g.h, |k| kind.eval(k), kind.jump_at_zero());
            Ok(FormValue { value: a + b, resample_residual: 0.0 })
        }
        FormOperator::FreeHalfLine => {
            check_custom(kind)?;
            let (unfolded, x0, residual) = unfold_half_line(g);
            let value = spectral_integral(&unfolded, x0, g.h, |k| kind.eval(k), kind.jump_at_zero());
            Ok(FormValue { value, resample_residual: residual })
        }
    }
}

fn check_custom(kind: FormKind<'_>) -> Result<(), SpectralError> {
    if let FormKind::Custom(f) = kind {
        for i in -2000..=2000 {
            let v = f(i as f64 * 0.05);
            if !(-1e-12..=1.0 + 1e-12).contains(&v) {
                return Err(SpectralError::CovarianceBound(v));
            }
        }
    }
    Ok(())
}

/// `int_0^inf |<phi_k, g>|^2 dk`: the free half-line positive-energy form.
pub fn halfline_free_projection(g: &SpinorField) -> f64 {
    quadratic_form(FormKind::PositiveProjection, FormOperator::FreeHalfLine, g)
        .map(|v| v.value)
        .unwrap_or(f64::NAN)
}

/// Half-line Plancherel check: `int_R |<phi_k, g>|^2 dk`.
pub fn halfline_free_total(g: &SpinorField) -> f64 {
    let (unfolded, x0, _) = unfold_half_line(g);
    spectral_integral(&unfolded, x0, g.h, |_| 1.0, 0.0)
}

/// Unfolded samples `G(X)`, `G(-x) = g1(x)`, `G(x) = g2(x)` on a uniform grid symmetric about 0.
/// Returns `(G, X_0, resample residual)`.
fn unfold_half_line(g: &SpinorField) -> (Vec<C64>, f64, f64) {
    let h = g.h;
    let frac = (g.x_min / h - (g.x_min / h).floor()).rem_euclid(1.0);
    let centred = (frac - 0.5).abs() < 1e-6;
    let source = if centred {
        g.clone()
    } else {
        // Resample onto cell centres.
        let lo = (g.x_min.max(0.0) / h).floor();
        let n = ((g.x_max() / h).ceil() - lo) as usize + 1;
        SpinorField::from_fn((lo + 0.5) * h, h, n, g.time_tag, |x| g.sample(x))
    };
    let positive: Vec<(f64, [C64; 2])> = (0..source.len())
        .filter(|&j| source.x(j) > 0.0)
        .map(|j| (source.x(j), source.values[j]))
        .collect();
    let m = positive.len();
    let mut out = vec![C64::new(0.0, 0.0); 2 * m];
    for (i, (_, v)) in positive.iter().enumerate() {
        out[m - 1 - i] = v[0];
        out[m + i] = v[1];
    }
    let x0 = positive.first().map(|p| -p.0 - (m as f64 - 1.0) * h).unwrap_or(0.0);
    let residual = if centred {
        0.0
    } else {
        let a = g.norm();
        if a > 0.0 { (source.norm() - a).abs() / a } else { 0.0 }
    };
    (out, x0, residual)
}

/// Fourier transform samples `(k, f^(k))` for data `values` at `x0 + j h`, zero padded.
pub fn fourier_samples(values: &[C64], x0: f64, h: f64, min_len: usize) -> (Vec<f64>, Vec<C64>) {
    let total = (16 * values.len()).max(min_len).next_power_of_two().min(1 << 23).max(values.len().next_power_of_two());
    let mut buf = vec![C64::new(0.0, 0.0); total];
    buf[..values.len()].copy_from_slice(values);
    fft_in_place(&mut buf, false);
    let ks = fft_frequencies(total, h);
    let norm = h / TWO_PI.sqrt();
    for (b, &k) in buf.iter_mut().zip(&ks) {
        *b *= C64::from_polar(norm, -k * x0);
    }
    (ks, buf)
}

/// `int F(k) |G^(k)|^2 dk` by the trapezoid rule on the padded DFT grid, with the
/// Euler–Maclaurin correction for a jump of `F` at `k = 0`.
fn spectral_integral(values: &[C64], x0: f64, h: f64, f: impl Fn(f64) -> f64, jump: f64) -> f64 {
    spectral_pairing(values, values, x0, h, f, jump).re
}

/// `int F(k) conj(G^(k)) H^(k) dk` for two sample sets on the same grid.
fn spectral_pairing(hv: &[C64], gv: &[C64], x0: f64, h: f64, f: impl Fn(f64) -> f64, jump: f64) -> C64 {
    let zero = |v: &[C64]| v.iter().all(|x| *x == C64::new(0.0, 0.0));
    if zero(hv) || zero(gv) {
        return C64::new(0.0, 0.0);
    }
    let (ks, hh) = fourier_samples(hv, x0, h, 1 << 16);
    let gh = if std::ptr::eq(hv, gv) { hh.clone() } else { fourier_samples(gv, x0, h, 1 << 16).1 };
    let dk = ks[1] - ks[0];
    let mut sum = C64::new(0.0, 0.0);
    for ((k, a), b) in ks.iter().zip(&hh).zip(&gh) {
        let w = if *k == 0.0 && jump != 0.0 { 0.5 * (f(1e-300) + f(-1e-300)) } else { f(*k) };
        sum += b.conj() * a * w;
    }
    sum *= dk;
    if jump != 0.0 {
        // d/dk conj(G^) H^ at 0 from zeroth and first moments.
        let moments = |v: &[C64]| {
            let c = 1.0 / TWO_PI.sqrt();
            let mut m0 = C64::new(0.0, 0.0);
            let mut m1 = C64::new(0.0, 0.0);
            for (j, y) in v.iter().enumerate() {
                let x = x0 + j as f64 * h;
                m0 += y * h;
                m1 += y * (x * h);
            }
            (m0 * c, m1 * C64::new(0.0, -c))
        };
        let (h0, h1) = moments(hv);
        let (g0, g1) = moments(gv);
        let deriv = g1.conj() * h0 + g0.conj() * h1;
        sum += deriv * (jump * dk * dk / 12.0);
    }
    sum
}

/// `(g | F(b) f)` for two fields. Grids must be aligned; they are merged onto their union.
pub fn quadratic_pairing(
    kind: FormKind<'_>,
    op: FormOperator<'_>,
    f: &SpinorField,
    g: &SpinorField,
) -> Result<C64, SpectralError> {
    match op {
        FormOperator::Discrete(m) => {
            let (vf, _) = m.to_vector(f);
            let (vg, _) = m.to_vector(g);
            let cf = m.eig.vectors.adjoint() * vf;
            let cg = m.eig.vectors.adjoint() * vg;
            Ok(cf.iter().zip(cg.iter()).zip(m.eigenvalues()).map(|((a, b), &e)| b.conj() * a * kind.eval(e)).sum())
        }
        FormOperator::FreeLine | FormOperator::FreeHalfLine => {
            check_custom(kind)?;
            let lo = f.x_min.min(g.x_min);
            let hi = f.x_max().max(g.x_max());
            let n = ((hi - lo) / f.h).round() as usize + 1;
            let fa = f.regrid(lo, n)?;
            let ga = g.regrid(lo, n)?;
            if matches!(op, FormOperator::FreeLine) {
                let comp = |s: &SpinorField, c: usize| s.values.iter().map(|v| v[c]).collect::<Vec<_>>();
                let a = spectral_pairing(&comp(&fa, 0), &comp(&ga, 0), lo, f.h, |k| kind.eval(-k), -kind.jump_at_zero());
                let b = spectral_pairing(&comp(&fa, 1), &comp(&ga, 1), lo, f.h, |k| kind.eval(k), kind.jump_at_zero());
                Ok(a + b)
            } else {
                let (uf, x0, _) = unfold_half_line(&fa);
                let (ug, _, _) = unfold_half_line(&ga);
                Ok(spectral_pairing(&uf, &ug, x0, f.h, |k| kind.eval(k), kind.jump_at_zero()))
            }
        }
    }
}

/// `1_{R+}(b^0_0) g` on the half-line, returned on the cell-centred grid `(j + 1/2) h`,
/// `j < len`. The unfolded field is padded to `pad_len` samples against wrap-around.
pub fn halfline_positive_part(g: &SpinorField, len: usize, pad_len: usize) -> SpinorField {
    let h = g.h;
    let src = SpinorField::from_fn(0.5 * h, h, len, g.time_tag, |x| g.sample(x));
    let total = pad_len.max(4 * len).next_power_of_two();
    let mut buf = vec![C64::new(0.0, 0.0); total];
    // Unfolded index: position X = (m - total/2 + 1/2) h.
    let mid = total / 2;
    for j in 0..len {
        buf[mid + j] = src.values[j][1];
        buf[mid - 1 - j] = src.values[j][0];
    }
    fft_in_place(&mut buf, false);
    let ks = fft_frequencies(total, h);
    for (b, k) in buf.iter_mut().zip(ks) {
        let w = if k > 0.0 { 1.0 } else if k == 0.0 { 0.5 } else { 0.0 };
        *b *= w / total as f64;
    }
    fft_in_place(&mut buf, true);
    let mut out = src;
    for j in 0..len {
        out.values[j] = [buf[mid - 1 - j], buf[mid + j]];
    }
    out
}

/// Spectral density `(xi, |f^(xi)|^2)` of scalar samples at `x0 + j h`, with bin width.
pub fn spectral_density(values: &[C64], x0: f64, h: f64) -> (Vec<f64>, Vec<f64>, f64) {
    let (ks, hat) = fourier_samples(values, x0, h, 1 << 16);
    let dk = ks[1] - ks[0];
    (ks, hat.iter().map(|v| v.norm_sqr()).collect(), dk)
}

/// `int |f^(xi)|^2 (1 + exp(beta xi))^{-1} dxi` for a component-1 profile sampled at
/// `x0 + j h`: the thermal occupation of a left-mover at inverse temperature `beta`.
pub fn thermal_occupation_component1(values: &[C64], x0: f64, h: f64, beta: f64) -> f64 {
    spectral_integral(values, x0, h, |xi| fermi(beta, -xi), 0.0)
}

/// Fourier transform `(xi, (f1^, f2^))` of a line field.
pub fn free_line_fourier(g: &SpinorField) -> (Vec<f64>, Vec<[C64; 2]>) {
    let c1: Vec<C64> = g.values.iter().map(|v| v[0]).collect();
    let c2: Vec<C64> = g.values.iter().map(|v| v[1]).collect();
    let (ks, a) = fourier_samples(&c1, g.x_min, g.h, 0);
    let (_, b) = fourier_samples(&c2, g.x_min, g.h, 0);
    (ks, a.into_iter().zip(b).map(|(p, q)| [p, q]).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gaussian(x0: f64, sigma: f64, k: f64) -> impl Fn(f64) -> C64 {
        move |x: f64| C64::from_polar((-(x - x0).powi(2) / (2.0 * sigma * sigma)).exp(), k * x)
    }

    #[test]
    fn halfline_free_spectrum() {
        let x_max = std::f64::consts::PI;
        let mut errs = Vec::new();
        for &n in &[32, 64, 128] {
            let op = DiracOperatorMatrix::new(OperatorDomain::HalfLine { x_max }, &DiracPotential::zero(), n).unwrap();
            assert!(crate::numerics::hermiticity_residual(&op.matrix) < 1e-12);
            // Eigenvalues near 1 and 2 approximate the integers.
            let e: f64 = [1.0, 2.0, 3.0]
                .iter()
                .map(|&k| op.eigenvalues().iter().map(|v| (v - k).abs()).fold(f64::INFINITY, f64::min))
                .fold(0.0, f64::max);
            errs.push(e);
        }
        assert!(errs[0] / errs[1] > 3.5 && errs[1] / errs[2] > 3.5, "{errs:?}");
    }

    #[test]
    fn plancherel_for_unfolded_field() {
        let g1 = gaussian(3.0, 0.4, 2.0);
        let g2 = gaussian(4.0, 0.6, -1.0);
        let g = SpinorField::on_interval(0.0, 10.0, 0.01, 0.5, 0.0, |x| [g1(x), g2(x) * 0.5]);
        let total = halfline_free_total(&g);
        assert!((total - g.norm_sqr()).abs() < 1e-8 * g.norm_sqr());
        let plus = halfline_free_projection(&g);
        let minus = quadratic_form(FormKind::NegativeProjection, FormOperator::FreeHalfLine, &g).unwrap().value;
        assert!((plus + minus - g.norm_sqr()).abs() < 1e-10);
        assert_eq!(halfline_free_projection(&SpinorField::zeros(0.5, 1.0, 4, 0.0)), 0.0);
    }

    #[test]
    fn thermal_zero_energy_gives_half() {
        let g1 = gaussian(0.0, 30.0, 0.0);
        let g = SpinorField::on_interval(-200.0, 200.0, 0.1, 0.0, 0.0, |x| [g1(x), C64::new(0.0, 0.0)]);
        let v = quadratic_form(FormKind::Thermal(2.0 * std::f64::consts::PI), FormOperator::FreeLine, &g).unwrap().value;
        assert!((v / g.norm_sqr() - 0.5).abs() < 1e-3);
    }

    #[test]
    fn discrete_form_of_eigenvector() {
        let op = DiracOperatorMatrix::new(OperatorDomain::HalfLine { x_max: 8.0 }, &DiracPotential::tanh_switch(1.0, 0.0, 1.0), 64).unwrap();
        let k = op.eigenvalues().iter().position(|&e| e > 0.5).unwrap();
        let v = op.eig.vectors.column(k).into_owned();
        let f = op.from_vector(&v, 0.0);
        let q = quadratic_form(FormKind::PositiveProjection, FormOperator::Discrete(&op), &f).unwrap();
        assert!((q.value - 1.0).abs() < 1e-10 && q.resample_residual < 1e-12);
        let bad = |e: f64| 2.0 * e;
        assert!(quadratic_form(FormKind::Custom(&bad), FormOperator::Discrete(&op), &f).is_err());
    }
}
