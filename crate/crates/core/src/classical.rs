//! One-particle dynamics of the Dirac equation `d_s psi + L d_x psi + i V psi = 0`,
//! `L = diag(1, -1)`, on the full line and outside the star boundary.
//!
//! Conventions: `u(s, t)` maps data at time `t` to time `s`. Forward in time component 1
//! moves right and component 2 moves left; the boundary condition is
//! `psi_1(s, z(s)) = lambda(s) psi_2(s, z(s))`.

use std::fmt::Write as _;

use nalgebra::Matrix2;
use thiserror::Error;

use crate::geometry::{GeometryError, StarBoundary};
use crate::numerics::{composite_gauss, fft_frequencies, fft_in_place, lagrange_weights};
use crate::C64;

/// Tolerance for grid alignment and CFL metadata checks, in units of the spacing.
const GRID_TOL: f64 = 1e-9;
const ZERO: C64 = C64 { re: 0.0, im: 0.0 };

pub type Spinor = [C64; 2];

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ClassicalError {
    #[error("grids are not aligned (h = {h1} vs {h2}, offset {offset})")]
    GridMismatch { h1: f64, h2: f64, offset: f64 },
    #[error("time step {dt} is not an integer number of grid steps h = {h}")]
    Cfl { dt: f64, h: f64 },
    #[error("domain error: {0}")]
    Domain(String),
    #[error("malformed spinor field: {0}")]
    Format(String),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

/// Two-component complex field on the uniform grid `x_j = x_min + j h`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpinorField {
    pub x_min: f64,
    pub h: f64,
    pub values: Vec<Spinor>,
    pub time_tag: f64,
}

impl SpinorField {
    pub fn zeros(x_min: f64, h: f64, n: usize, time_tag: f64) -> Self {
        assert!(h > 0.0 && h.is_finite(), "grid spacing must be positive");
        SpinorField { x_min, h, values: vec![[ZERO; 2]; n], time_tag }
    }

    pub fn from_fn(x_min: f64, h: f64, n: usize, time_tag: f64, f: impl Fn(f64) -> Spinor) -> Self {
        let mut out = Self::zeros(x_min, h, n, time_tag);
        for (j, v) in out.values.iter_mut().enumerate() {
            *v = f(x_min + j as f64 * h);
        }
        out
    }

    /// Grid of spacing `h` aligned to multiples of `h` shifted by `offset * h`, covering `[a, b]`.
    pub fn on_interval(a: f64, b: f64, h: f64, offset: f64, time_tag: f64, f: impl Fn(f64) -> Spinor) -> Self {
        let j0 = ((a / h) - offset).floor();
        let j1 = ((b / h) - offset).ceil();
        let n = (j1 - j0) as usize + 1;
        Self::from_fn((j0 + offset) * h, h, n, time_tag, f)
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn x(&self, j: usize) -> f64 {
        self.x_min + j as f64 * self.h
    }

    pub fn x_max(&self) -> f64 {
        self.x(self.len().saturating_sub(1))
    }

    pub fn norm_sqr(&self) -> f64 {
        self.h * self.values.iter().map(|v| v[0].norm_sqr() + v[1].norm_sqr()).sum::<f64>()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    pub fn component_norm_sqr(&self, c: usize) -> f64 {
        self.h * self.values.iter().map(|v| v[c].norm_sqr()).sum::<f64>()
    }

    /// Checks finiteness and uniform-grid metadata.
    pub fn validate(&self) -> Result<(), ClassicalError> {
        if !(self.h > 0.0 && self.h.is_finite() && self.x_min.is_finite()) {
            return Err(ClassicalError::Format("invalid grid metadata".into()));
        }
        if self.values.iter().any(|v| !(v[0].is_finite() && v[1].is_finite())) {
            return Err(ClassicalError::Format("non-finite value".into()));
        }
        Ok(())
    }

    /// Index range `[first, last]` of nonzero samples.
    pub fn support(&self) -> Option<(usize, usize)> {
        let nz = |v: &Spinor| v[0] != ZERO || v[1] != ZERO;
        let first = self.values.iter().position(nz)?;
        let last = self.values.iter().rposition(nz)?;
        Some((first, last))
    }

    pub fn support_interval(&self) -> Option<(f64, f64)> {
        self.support().map(|(a, b)| (self.x(a), self.x(b)))
    }

    /// Grid offset of `other` relative to `self` in cells, if the grids are aligned.
    pub fn offset_to(&self, other: &SpinorField) -> Result<isize, ClassicalError> {
        let off = (other.x_min - self.x_min) / self.h;
        let r = off.round();
        if (self.h - other.h).abs() > GRID_TOL * self.h || (off - r).abs() > 1e-6 {
            return Err(ClassicalError::GridMismatch { h1: self.h, h2: other.h, offset: off });
        }
        Ok(r as isize)
    }

    /// Copy onto the aligned grid starting at `x_min` with `n` points (zero padding / truncation).
    pub fn regrid(&self, x_min: f64, n: usize) -> Result<SpinorField, ClassicalError> {
        let mut out = SpinorField::zeros(x_min, self.h, n, self.time_tag);
        let off = out.offset_to(self)?;
        for (j, v) in self.values.iter().enumerate() {
            let k = j as isize + off;
            if k >= 0 && (k as usize) < n {
                out.values[k as usize] = *v;
            }
        }
        Ok(out)
    }

    /// `<self, other>` with the L2 weight `h`; grids must be aligned.
    pub fn inner(&self, other: &SpinorField) -> Result<C64, ClassicalError> {
        let off = self.offset_to(other)?;
        let mut s = ZERO;
        for (j, v) in other.values.iter().enumerate() {
            let k = j as isize + off;
            if k >= 0 && (k as usize) < self.len() {
                let a = self.values[k as usize];
                s += a[0].conj() * v[0] + a[1].conj() * v[1];
            }
        }
        Ok(s * self.h)
    }

    /// `self - other` on the grid of `self` (aligned grids; missing samples count as zero).
    pub fn difference_norm(&self, other: &SpinorField) -> Result<f64, ClassicalError> {
        let lo = self.x_min.min(other.x_min);
        let hi = self.x_max().max(other.x_max());
        let n = ((hi - lo) / self.h).round() as usize + 1;
        let a = self.regrid(lo, n)?;
        let b = other.regrid(lo, n)?;
        let s: f64 = a
            .values
            .iter()
            .zip(&b.values)
            .map(|(p, q)| (p[0] - q[0]).norm_sqr() + (p[1] - q[1]).norm_sqr())
            .sum();
        Ok((s * self.h).sqrt())
    }

    /// Eight-point Lagrange interpolation; zero outside the grid.
    pub fn sample(&self, x: f64) -> Spinor {
        let pos = (x - self.x_min) / self.h;
        if pos < -1.0 || pos > self.len() as f64 {
            return [ZERO; 2];
        }
        let r = pos.round();
        if (pos - r).abs() < 1e-12 {
            let j = r as isize;
            return if j >= 0 && (j as usize) < self.len() { self.values[j as usize] } else { [ZERO; 2] };
        }
        let j0 = pos.floor() as isize - 3;
        let nodes: Vec<f64> = (0..8).map(|i| (j0 + i) as f64).collect();
        let w = lagrange_weights(&nodes, pos);
        let mut out = [ZERO; 2];
        for (i, wi) in w.iter().enumerate() {
            let j = j0 + i as isize;
            if j >= 0 && (j as usize) < self.len() {
                let v = self.values[j as usize];
                out[0] += v[0] * wi;
                out[1] += v[1] * wi;
            }
        }
        out
    }

    /// Layout `[component 1, component 2]` scaled by `sqrt(h)`, so the Euclidean inner
    /// product is the L2 one.
    pub fn to_vector(&self) -> nalgebra::DVector<C64> {
        let n = self.len();
        let sh = self.h.sqrt();
        nalgebra::DVector::from_fn(2 * n, |i, _| if i < n { self.values[i][0] * sh } else { self.values[i - n][1] * sh })
    }

    /// Inverse of [`SpinorField::to_vector`] on the grid of `self`.
    pub fn with_vector(&self, v: &nalgebra::DVector<C64>) -> SpinorField {
        let n = self.len();
        let sh = 1.0 / self.h.sqrt();
        let mut out = self.clone();
        for j in 0..n {
            out.values[j] = [v[j] * sh, v[n + j] * sh];
        }
        out
    }

    /// Squared norm of a field on the static half-line `x > 0` with `u1(0) = u2(0)`.
    ///
    /// The plain grid sum is only first-order accurate there because the field jumps to
    /// zero at the wall. Each component is smooth on `[0, inf)`, so this uses the
    /// trapezoid rule per component with wall values extrapolated from the interior and
    /// the leading Euler–Maclaurin end correction. Requires `x = 0` to be a grid point.
    pub fn halfline_norm_sqr(&self) -> Result<f64, ClassicalError> {
        let pos = -self.x_min / self.h;
        let k0 = pos.round();
        if (pos - k0).abs() > 1e-6 || k0 < 0.0 {
            return Err(ClassicalError::Domain("x = 0 is not a grid point".into()));
        }
        let k0 = k0 as usize;
        let h = self.h;
        let at = |j: usize, c: usize| self.values.get(k0 + j).map_or(ZERO, |v| v[c]);
        let nodes: Vec<f64> = (1..=6).map(|j| j as f64).collect();
        let w = lagrange_weights(&nodes, 0.0);
        let mut total = 0.0;
        for c in 0..2 {
            let wall: C64 = (1..=6).zip(&w).map(|(j, w)| at(j, c) * *w).sum();
            let dens = |j: usize| if j == 0 { wall.norm_sqr() } else { at(j, c).norm_sqr() };
            let interior: f64 = (1..self.len().saturating_sub(k0)).map(dens).sum();
            let trapezoid = h * (interior + 0.5 * dens(0));
            let slope = (-25.0 * dens(0) + 48.0 * dens(1) - 36.0 * dens(2) + 16.0 * dens(3) - 3.0 * dens(4)) / (12.0 * h);
            total += trapezoid + h * h / 12.0 * slope;
        }
        Ok(total)
    }

    /// Squared norm on `[wall, inf)` for a field vanishing left of an arbitrary wall.
    ///
    /// Densities are smooth up to the wall, so the partial cell `[wall, x_k]` is
    /// integrated from a quintic through the first six interior densities, and the rest
    /// by the trapezoid rule with the same end correction as [`Self::halfline_norm_sqr`].
    pub fn norm_sqr_beyond(&self, wall: f64) -> f64 {
        let h = self.h;
        if wall < self.x_min {
            return self.norm_sqr();
        }
        let k0 = (((wall - self.x_min) / h).floor() + 1.0) as usize;
        if k0 >= self.len() {
            return 0.0;
        }
        let dens = |j: usize| self.values.get(k0 + j).map_or(0.0, |v| v[0].norm_sqr() + v[1].norm_sqr());
        let nodes: Vec<f64> = (0..6).map(|j| j as f64).collect();
        let theta = (self.x(k0) - wall) / h;
        let partial: f64 = if theta > 0.0 {
            composite_gauss(-theta, 0.0, 1, 4)
                .into_iter()
                .map(|(y, w)| w * h * lagrange_weights(&nodes, y).iter().enumerate().map(|(j, l)| l * dens(j)).sum::<f64>())
                .sum()
        } else {
            0.0
        };
        let interior: f64 = (1..self.len() - k0).map(dens).sum();
        let trapezoid = h * (interior + 0.5 * dens(0));
        let slope = (-25.0 * dens(0) + 48.0 * dens(1) - 36.0 * dens(2) + 16.0 * dens(3) - 3.0 * dens(4)) / (12.0 * h);
        partial + trapezoid + h * h / 12.0 * slope
    }

    /// Text form: header `# spinor-field v1 h=<h> t=<time>` then `x re1 im1 re2 im2` rows.
    pub fn to_text(&self) -> String {
        let mut s = format!("# spinor-field v1 h={:.17e} t={:.17e}\n", self.h, self.time_tag);
        for (j, v) in self.values.iter().enumerate() {
            let _ = writeln!(
                s,
                "{:.17e} {:.17e} {:.17e} {:.17e} {:.17e}",
                self.x(j),
                v[0].re,
                v[0].im,
                v[1].re,
                v[1].im
            );
        }
        s
    }

    pub fn from_text(text: &str) -> Result<Self, ClassicalError> {
        let fmt_err = |m: String| ClassicalError::Format(m);
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header = lines.next().ok_or_else(|| fmt_err("empty input".into()))?;
        let rest = header
            .strip_prefix("# spinor-field v1")
            .ok_or_else(|| fmt_err("missing header".into()))?;
        let mut h = None;
        let mut t = None;
        for tok in rest.split_whitespace() {
            if let Some(v) = tok.strip_prefix("h=") {
                h = v.parse::<f64>().ok();
            } else if let Some(v) = tok.strip_prefix("t=") {
                t = v.parse::<f64>().ok();
            }
        }
        let h = h.ok_or_else(|| fmt_err("header lacks h=".into()))?;
        let t = t.ok_or_else(|| fmt_err("header lacks t=".into()))?;
        let mut xs = Vec::new();
        let mut values = Vec::new();
        for (i, line) in lines.enumerate() {
            let nums: Result<Vec<f64>, _> = line.split_whitespace().map(str::parse::<f64>).collect();
            let nums = nums.map_err(|e| fmt_err(format!("row {}: {e}", i + 1)))?;
            if nums.len() != 5 {
                return Err(fmt_err(format!("row {}: expected 5 columns", i + 1)));
            }
            xs.push(nums[0]);
            values.push([C64::new(nums[1], nums[2]), C64::new(nums[3], nums[4])]);
        }
        if xs.is_empty() {
            return Err(fmt_err("no samples".into()));
        }
        for (j, x) in xs.iter().enumerate() {
            if (x - (xs[0] + j as f64 * h)).abs() > 1e-6 * h {
                return Err(fmt_err(format!("row {}: grid not uniform", j + 1)));
            }
        }
        let f = SpinorField { x_min: xs[0], h, values, time_tag: t };
        f.validate()?;
        Ok(f)
    }
}

/// `f^t(x) = f(x + t)`: only the grid metadata moves, so the norm is preserved exactly.
pub fn translate_field(f: &SpinorField, t: f64) -> SpinorField {
    let mut out = f.clone();
    out.x_min -= t;
    out
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PotentialShape {
    Zero,
    ConstantMass,
    TanhSwitch { center: f64, width: f64 },
}

/// `V(x) = v(x) Gamma` with `Gamma` a Hermitian involution anticommuting with `L`.
#[derive(Debug, Clone, PartialEq)]
pub struct DiracPotential {
    pub m: f64,
    pub gamma: Matrix2<C64>,
    pub shape: PotentialShape,
}

impl DiracPotential {
    pub fn default_gamma() -> Matrix2<C64> {
        Matrix2::new(ZERO, C64::new(1.0, 0.0), C64::new(1.0, 0.0), ZERO)
    }

    pub fn zero() -> Self {
        DiracPotential { m: 0.0, gamma: Self::default_gamma(), shape: PotentialShape::Zero }
    }

    pub fn constant_mass(m: f64) -> Self {
        DiracPotential { m, gamma: Self::default_gamma(), shape: PotentialShape::ConstantMass }
    }

    pub fn tanh_switch(m: f64, center: f64, width: f64) -> Self {
        DiracPotential { m, gamma: Self::default_gamma(), shape: PotentialShape::TanhSwitch { center, width } }
    }

    pub fn with_gamma(mut self, gamma: Matrix2<C64>) -> Result<Self, ClassicalError> {
        let l = Matrix2::new(C64::new(1.0, 0.0), ZERO, ZERO, C64::new(-1.0, 0.0));
        let herm = (gamma - gamma.adjoint()).camax();
        let inv = (gamma * gamma - Matrix2::identity()).camax();
        let anti = (gamma * l + l * gamma).camax();
        if herm > 1e-12 || inv > 1e-12 || anti > 1e-12 {
            return Err(ClassicalError::Domain("gamma must be a Hermitian involution anticommuting with L".into()));
        }
        self.gamma = gamma;
        Ok(self)
    }

    pub fn is_zero(&self) -> bool {
        matches!(self.shape, PotentialShape::Zero) || self.m == 0.0
    }

    /// Scalar profile `v(x)`.
    pub fn profile(&self, x: f64) -> f64 {
        match self.shape {
            PotentialShape::Zero => 0.0,
            PotentialShape::ConstantMass => self.m,
            PotentialShape::TanhSwitch { center, width } => 0.5 * self.m * (1.0 + ((x - center) / width).tanh()),
        }
    }

    pub fn matrix(&self, x: f64) -> Matrix2<C64> {
        self.gamma * C64::new(self.profile(x), 0.0)
    }

    /// `exp(i theta V(x))`, exact because `Gamma^2 = 1`.
    pub fn kick(&self, x: f64, theta: f64) -> Matrix2<C64> {
        let a = theta * self.profile(x);
        Matrix2::identity() * C64::new(a.cos(), 0.0) + self.gamma * C64::new(0.0, a.sin())
    }
}

fn apply2(m: &Matrix2<C64>, v: &Spinor) -> Spinor {
    [m[(0, 0)] * v[0] + m[(0, 1)] * v[1], m[(1, 0)] * v[0] + m[(1, 1)] * v[1]]
}

/// Shift by `cells` (possibly fractional): `out_j = in_{j + cells}`.
fn shift_component(values: &[C64], cells: f64) -> Vec<C64> {
    let n = values.len();
    let r = cells.round();
    if (cells - r).abs() < GRID_TOL {
        let k = r as isize;
        return (0..n as isize)
            .map(|j| {
                let s = j + k;
                if s >= 0 && (s as usize) < n { values[s as usize] } else { ZERO }
            })
            .collect();
    }
    // Band-limited shift with zero padding against wrap-around.
    let pad = n + 2 * (cells.abs().ceil() as usize) + 16;
    let total = (n + 2 * pad).next_power_of_two();
    let mut buf = vec![ZERO; total];
    buf[pad..pad + n].copy_from_slice(values);
    fft_in_place(&mut buf, false);
    for (b, k) in buf.iter_mut().zip(fft_frequencies(total, 1.0)) {
        *b *= C64::from_polar(1.0 / total as f64, k * cells);
    }
    fft_in_place(&mut buf, true);
    buf[pad..pad + n].to_vec()
}

/// Result of a free translation with the norm drift caused by resampling.
#[derive(Debug, Clone)]
pub struct Shifted {
    pub field: SpinorField,
    pub interpolation_residual: f64,
}

/// `u^0_inf(s, t) f`: component 1 read from `x + (t - s)`, component 2 from `x - (t - s)`.
/// The grid is widened so that both translated supports fit.
pub fn propagate_free_line(f: &SpinorField, s: f64, t: f64) -> Shifted {
    let d = t - s;
    let cells = d / f.h;
    let ext = cells.abs().ceil() as usize;
    let mut wide = f.regrid(f.x_min - ext as f64 * f.h, f.len() + 2 * ext).expect("aligned by construction");
    let c1: Vec<C64> = wide.values.iter().map(|v| v[0]).collect();
    let c2: Vec<C64> = wide.values.iter().map(|v| v[1]).collect();
    let s1 = shift_component(&c1, cells);
    let s2 = shift_component(&c2, -cells);
    for (j, v) in wide.values.iter_mut().enumerate() {
        *v = [s1[j], s2[j]];
    }
    wide.time_tag = s;
    let interpolation_residual = (wide.norm() - f.norm()).abs();
    Shifted { field: wide, interpolation_residual }
}

/// Anything that can be evaluated pointwise as a spinor.
pub trait SpinorFn {
    fn at(&self, x: f64) -> Spinor;
}

impl<F: Fn(f64) -> Spinor> SpinorFn for F {
    fn at(&self, x: f64) -> Spinor {
        self(x)
    }
}

impl SpinorFn for SpinorField {
    fn at(&self, x: f64) -> Spinor {
        self.sample(x)
    }
}

/// Closed-form free propagator with the reflecting boundary, `s <= t`.
#[derive(Debug, Clone)]
pub struct ExplicitFreePropagator<'a> {
    pub boundary: &'a StarBoundary,
    pub s: f64,
    pub t: f64,
}

impl<'a> ExplicitFreePropagator<'a> {
    pub fn new(boundary: &'a StarBoundary, s: f64, t: f64) -> Result<Self, ClassicalError> {
        if !(s <= t) {
            return Err(ClassicalError::Domain(format!("explicit propagator needs s <= t, got s = {s}, t = {t}")));
        }
        Ok(ExplicitFreePropagator { boundary, s, t })
    }

    /// `(u^0(s, t) f)(x)` for data `f` at time `t` supported right of `z(t)`.
    pub fn eval(&self, f: &impl SpinorFn, x: f64) -> Spinor {
        let (s, t, b) = (self.s, self.t, self.boundary);
        if x <= b.z(s) {
            return [ZERO; 2];
        }
        let psi1 = f.at(x - s + t)[0];
        let psi2 = if x < b.z(t) + t - s {
            let u = b.tau(x + s).expect("x + s lies below x_star inside the reflected branch");
            f.at(x + t + s - 2.0 * u)[0] / b.reflection_coefficient(u)
        } else {
            f.at(x - t + s)[1]
        };
        [psi1, psi2]
    }

    /// Samples the propagated field on a grid aligned with `f`, widened to hold the result.
    pub fn propagate(&self, f: &SpinorField) -> Result<SpinorField, ClassicalError> {
        let zt = self.boundary.z(self.t);
        if let Some((a, _)) = f.support_interval() {
            if a <= zt {
                return Err(ClassicalError::Domain(format!(
                    "data supported at {a}, left of the boundary z(t) = {zt}"
                )));
            }
        }
        let zs = self.boundary.z(self.s);
        let lo_cells = ((zs - f.x_min) / f.h).floor().min(0.0);
        let hi = f.x_max() + (self.t - self.s);
        let x_min = f.x_min + lo_cells * f.h;
        let n = ((hi - x_min) / f.h).ceil() as usize + 1;
        Ok(SpinorField::from_fn(x_min, f.h, n, self.s, |x| self.eval(f, x)))
    }
}

/// `u^0(s, t) f` via the closed formula.
pub fn propagate_free_boundary_explicit(
    f: &SpinorField,
    b: &StarBoundary,
    s: f64,
) -> Result<SpinorField, ClassicalError> {
    ExplicitFreePropagator::new(b, s, f.time_tag)?.propagate(f)
}

/// Output of a numerical propagation.
#[derive(Debug, Clone)]
pub struct Propagated {
    pub field: SpinorField,
    /// `2 |u_h - u_{2h}|` on the shared coarse points, when the step count allows it.
    pub scheme_error: Option<f64>,
    /// Norm carried off the grid edges.
    pub leaked_norm: f64,
}

fn step_count(dt: f64, h: f64) -> Result<usize, ClassicalError> {
    let n = dt.abs() / h;
    if (n - n.round()).abs() > 1e-6 {
        return Err(ClassicalError::Cfl { dt, h });
    }
    Ok(n.round() as usize)
}

fn kick_table(v: &DiracPotential, f: &SpinorField, theta: f64) -> Option<Vec<Matrix2<C64>>> {
    (!v.is_zero()).then(|| (0..f.len()).map(|j| v.kick(f.x(j), theta)).collect())
}

fn apply_kicks(f: &mut SpinorField, kicks: &Option<Vec<Matrix2<C64>>>) {
    if let Some(k) = kicks {
        for (v, m) in f.values.iter_mut().zip(k) {
            *v = apply2(m, v);
        }
    }
}

/// Coarse copy (every second sample starting at `parity`).
fn coarsen(f: &SpinorField, parity: usize) -> SpinorField {
    SpinorField {
        x_min: f.x(parity),
        h: 2.0 * f.h,
        values: f.values.iter().skip(parity).step_by(2).copied().collect(),
        time_tag: f.time_tag,
    }
}

fn coarse_difference(fine: &SpinorField, coarse: &SpinorField) -> f64 {
    let off = ((coarse.x_min - fine.x_min) / fine.h).round() as isize;
    let mut s = 0.0;
    for (j, c) in coarse.values.iter().enumerate() {
        let k = off + 2 * j as isize;
        let fv = if k >= 0 && (k as usize) < fine.len() { fine.values[k as usize] } else { [ZERO; 2] };
        s += (fv[0] - c[0]).norm_sqr() + (fv[1] - c[1]).norm_sqr();
    }
    (s * coarse.h).sqrt()
}

/// Split-step line propagator `exp(i (s - t) b^V_inf)` with `dt = h`.
pub fn propagate_line_numeric(
    f: &SpinorField,
    v: &DiracPotential,
    s: f64,
    t: f64,
) -> Result<Propagated, ClassicalError> {
    let (field, leaked_norm) = line_steps(f, v, s, t)?;
    let scheme_error = if step_count(t - s, 2.0 * f.h).is_ok() && f.len() > 4 {
        let coarse = line_steps(&coarsen(f, 0), v, s, t)?.0;
        Some(2.0 * coarse_difference(&field, &coarse))
    } else {
        None
    };
    Ok(Propagated { field, scheme_error, leaked_norm })
}

fn line_steps(f: &SpinorField, v: &DiracPotential, s: f64, t: f64) -> Result<(SpinorField, f64), ClassicalError> {
    let n = step_count(t - s, f.h)?;
    let backward = s < t;
    let dir = if backward { 1.0 } else { -1.0 };
    let mut cur = f.clone();
    let half = kick_table(v, f, 0.5 * dir * f.h);
    let mut dropped = 0.0;
    for _ in 0..n {
        apply_kicks(&mut cur, &half);
        let len = cur.len();
        let old = std::mem::replace(&mut cur.values, vec![[ZERO; 2]; len]);
        // The samples transported past the grid edges.
        if len > 0 {
            let (out1, out2) = if backward { (0, len - 1) } else { (len - 1, 0) };
            dropped += old[out1][0].norm_sqr() + old[out2][1].norm_sqr();
        }
        for j in 0..len {
            // Backward: component 1 from j + 1, component 2 from j - 1; forward mirrored.
            let (a, b) = if backward { (j + 1, j.wrapping_sub(1)) } else { (j.wrapping_sub(1), j + 1) };
            cur.values[j][0] = if a < len { old[a][0] } else { ZERO };
            cur.values[j][1] = if b < len { old[b][1] } else { ZERO };
        }
        apply_kicks(&mut cur, &half);
    }
    cur.time_tag = s;
    Ok((cur, (dropped * f.h).sqrt()))
}

/// Split-step propagator outside the star: exact transport, Strang kicks, and boundary
/// cells filled from the reflection condition along the characteristic that hits the
/// boundary inside the step.
#[derive(Debug, Clone)]
pub struct BoundaryPropagator<'a> {
    pub boundary: &'a StarBoundary,
    pub potential: &'a DiracPotential,
}

impl<'a> BoundaryPropagator<'a> {
    pub fn new(boundary: &'a StarBoundary, potential: &'a DiracPotential) -> Self {
        BoundaryPropagator { boundary, potential }
    }

    /// `u^V(s, t) f` for `f` at time `t = f.time_tag`; both time directions.
    pub fn propagate(&self, f: &SpinorField, s: f64) -> Result<Propagated, ClassicalError> {
        let t = f.time_tag;
        let prepared = self.prepare(f, s)?;
        let (field, dropped) = self.steps(&prepared, s)?;
        let scheme_error = if step_count(t - s, 2.0 * f.h).is_ok() && prepared.len() > 8 {
            let coarse = self.steps(&coarsen(&prepared, 0), s)?.0;
            Some(2.0 * coarse_difference(&field, &coarse))
        } else {
            None
        };
        Ok(Propagated { field, scheme_error, leaked_norm: dropped })
    }

    /// Widens the grid so that the boundary and the light cone stay inside it.
    fn prepare(&self, f: &SpinorField, s: f64) -> Result<SpinorField, ClassicalError> {
        let t = f.time_tag;
        step_count(t - s, f.h)?;
        let zt = self.boundary.z(t);
        if let Some((a, _)) = f.support_interval() {
            if a <= zt {
                return Err(ClassicalError::Domain(format!(
                    "data supported at {a}, left of the boundary z(t) = {zt}"
                )));
            }
        }
        let zmin = zt.min(self.boundary.z(s));
        let left_cells = ((f.x_min - zmin) / f.h).ceil().max(0.0) as usize + 4;
        let right_cells = ((t - s).abs() / f.h).ceil() as usize + 2;
        let even_left = left_cells + left_cells % 2;
        f.regrid(f.x_min - even_left as f64 * f.h, f.len() + even_left + right_cells)
    }

    /// The field at `s` and the norm transported past the right grid edge.
    fn steps(&self, f: &SpinorField, s: f64) -> Result<(SpinorField, f64), ClassicalError> {
        let t = f.time_tag;
        let n = step_count(t - s, f.h)?;
        let h = f.h;
        let backward = s < t;
        let half = kick_table(self.potential, f, 0.5 * if backward { h } else { -h });
        let mut cur = f.clone();
        let mut sigma = t;
        let mut dropped = 0.0;
        let outgoing = if backward { 1 } else { 0 };
        for k in 0..n {
            let next = if k + 1 == n { s } else if backward { sigma - h } else { sigma + h };
            apply_kicks(&mut cur, &half);
            dropped += cur.values.last().map_or(0.0, |v| v[outgoing].norm_sqr());
            cur = if backward { self.back_step(&cur, sigma, next)? } else { self.forward_step(&cur, sigma, next)? };
            apply_kicks(&mut cur, &half);
            self.clear_outside(&mut cur, next);
            sigma = next;
        }
        cur.time_tag = s;
        Ok((cur, (dropped * h).sqrt()))
    }

    /// `x - z(sigma)` as `(x + sigma - x_star) + deficit(sigma)`. Late in the collapse
    /// `z(sigma)` rounds onto grid nodes, while grid positions and times are exact.
    fn wall_gap(&self, x: f64, sigma: f64) -> f64 {
        (x + sigma - self.boundary.x_star()) + self.boundary.deficit(sigma)
    }

    fn clear_outside(&self, f: &mut SpinorField, sigma: f64) {
        for j in 0..f.len() {
            if self.wall_gap(f.x(j), sigma) <= 0.0 {
                f.values[j] = [ZERO; 2];
            } else {
                break;
            }
        }
    }

    /// Component `c` of `f` at `p >= z(sigma)`, by cubic interpolation through four samples
    /// inside the domain (extrapolating from the first interior samples if needed).
    fn interior_cubic(&self, f: &SpinorField, c: usize, p: f64, sigma: f64) -> C64 {
        let zb = self.boundary.z(sigma);
        let first = (((zb - f.x_min) / f.h).floor() as isize - 1).max(0) as usize;
        let first = (first..f.len()).find(|&j| self.wall_gap(f.x(j), sigma) > 0.0).unwrap_or(f.len());
        if first + 3 >= f.len() {
            return ZERO;
        }
        let pos = (p - f.x_min) / f.h;
        let j = (pos.floor() as isize - 1).max(first as isize) as usize;
        let j = j.min(f.len() - 4);
        let nodes: Vec<f64> = (0..4).map(|k| (j + k) as f64).collect();
        let w = lagrange_weights(&nodes, pos);
        let v: C64 = (0..4).map(|k| f.values[j + k][c] * w[k]).sum();
        if pos >= nodes[0] {
            return v;
        }
        // Extrapolation weights reach 15 on grid-scale data; cap the modulus at twice the
        // largest node value so rough data near the wall cannot grow step after step.
        // Smooth data never comes close to the cap.
        let cap = 2.0 * (0..4).map(|k| f.values[j + k][c].norm()).fold(0.0, f64::max);
        if v.norm() > cap { v * (cap / v.norm()) } else { v }
    }

    fn back_step(&self, old: &SpinorField, sigma: f64, next: f64) -> Result<SpinorField, ClassicalError> {
        let b = self.boundary;
        let zb = b.z(next);
        if zb <= old.x_min {
            return Err(ClassicalError::Domain("boundary left the grid".into()));
        }
        let dt = sigma - next;
        let len = old.len();
        let mut out = SpinorField::zeros(old.x_min, old.h, len, next);
        for j in 0..len {
            let x = old.x(j);
            if self.wall_gap(x, next) <= 0.0 {
                continue;
            }
            out.values[j][0] = if j + 1 < len { old.values[j + 1][0] } else { ZERO };
            out.values[j][1] = if self.wall_gap(x - dt, sigma) > 0.0 {
                if j >= 1 { old.values[j - 1][1] } else { ZERO }
            } else {
                // The left-moving characteristic through (next, x) reflects at time u with
                // deficit x_star - (x + next).
                let d = (b.x_star() - (x + next)).max(b.deficit(sigma));
                let u = b.tau_from_deficit(d);
                let p = b.z(u) + (sigma - u);
                self.interior_cubic(old, 0, p, sigma) / b.reflection_coefficient(u)
            };
        }
        Ok(out)
    }

    fn forward_step(&self, old: &SpinorField, sigma: f64, next: f64) -> Result<SpinorField, ClassicalError> {
        let b = self.boundary;
        let zb = b.z(next);
        if zb <= old.x_min {
            return Err(ClassicalError::Domain("boundary left the grid".into()));
        }
        let dt = next - sigma;
        let len = old.len();
        let mut out = SpinorField::zeros(old.x_min, old.h, len, next);
        for j in 0..len {
            let x = old.x(j);
            if self.wall_gap(x, next) <= 0.0 {
                continue;
            }
            out.values[j][1] = if j + 1 < len { old.values[j + 1][1] } else { ZERO };
            out.values[j][0] = if self.wall_gap(x - dt, sigma) > 0.0 {
                if j >= 1 { old.values[j - 1][0] } else { ZERO }
            } else {
                // Right-moving characteristic left the boundary at time u: u - z(u) = next - x.
                let u = solve_emission_time(b, next - x, sigma, next);
                let p = b.z(u) + (u - sigma);
                b.reflection_coefficient(u) * self.interior_cubic(old, 1, p, sigma)
            };
        }
        Ok(out)
    }
}

/// Solves `u - z(u) = c` on `[lo, hi]`; the map has slope in `[1, 2]`.
fn solve_emission_time(b: &StarBoundary, c: f64, lo: f64, hi: f64) -> f64 {
    let g = |u: f64| u - b.z(u) - c;
    let (mut a, mut z) = (lo, hi);
    if g(a) >= 0.0 {
        return a;
    }
    if g(z) <= 0.0 {
        return z;
    }
    let mut u = 0.5 * (a + z);
    for _ in 0..100 {
        let val = g(u);
        if val > 0.0 {
            z = u;
        } else {
            a = u;
        }
        let slope = 2.0 - b.one_plus_zdot(u);
        let mut nu = u - val / slope;
        if !(nu > a && nu < z) {
            nu = 0.5 * (a + z);
        }
        if (nu - u).abs() < 1e-15 * u.abs().max(1.0) {
            return nu;
        }
        u = nu;
    }
    u
}

/// `u^V(s, t) f` outside the star.
pub fn propagate_boundary_numeric(
    f: &SpinorField,
    b: &StarBoundary,
    v: &DiracPotential,
    s: f64,
) -> Result<Propagated, ClassicalError> {
    BoundaryPropagator::new(b, v).propagate(f, s)
}

/// `u^0(0, t) f^t` for a component-1 datum, parametrised by the reflection time `u`.
///
/// With `X(u) = u + z(u)` the field is `lambda(u)^{-1} f_1(X(u) + 2t - 2u)`, placed in
/// component 2 at `x = X(u)` when `u > 0`. Samples with `u <= 0` carry the part of
/// `f` that has not reached the boundary; there `X(u) = u < 0` is the unfolded
/// coordinate of component 1 at `x = -u`.
#[derive(Debug, Clone)]
pub struct ReflectedPacket {
    pub u: Vec<f64>,
    /// Quadrature weights in `u`.
    pub weights: Vec<f64>,
    /// Field values at the sample points.
    pub amplitudes: Vec<C64>,
    /// `X'(u) = 1 + zdot(u)`.
    pub jacobian: Vec<f64>,
    pub t_data: f64,
    boundary: StarBoundary,
}

impl ReflectedPacket {
    /// `f1` is supported on `[a, c]` with `a >= x_star + delta`, `delta > 0`.
    pub fn new(
        b: &StarBoundary,
        f1: &dyn Fn(f64) -> C64,
        support: (f64, f64),
        t: f64,
        samples: usize,
    ) -> Result<Self, ClassicalError> {
        let (a, c) = support;
        let delta = a - b.x_star();
        if !(delta > 0.0) || !(c > a) {
            return Err(ClassicalError::Domain(format!(
                "support must start right of x_star = {} (needs margin delta > 0, got {delta})",
                b.x_star()
            )));
        }
        // phi(u) = 2t - u + z(u) maps reflection times to data positions; it is decreasing.
        let phi = |u: f64| 2.0 * t - u + b.z(u);
        let solve = |target: f64| {
            let (mut lo, mut hi) = (2.0 * t - target - 1.0, 2.0 * t - target + 1.0);
            while phi(hi) > target {
                hi += (hi - lo).max(1.0);
            }
            while phi(lo) < target {
                lo -= (hi - lo).max(1.0);
            }
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if phi(mid) > target { lo = mid } else { hi = mid }
            }
            0.5 * (lo + hi)
        };
        let u_lo = solve(c);
        let u_hi = solve(a);
        let n = samples.max(16);
        let du = (u_hi - u_lo) / (n - 1) as f64;
        let mut packet = ReflectedPacket {
            u: Vec::with_capacity(n),
            weights: Vec::with_capacity(n),
            amplitudes: Vec::with_capacity(n),
            jacobian: Vec::with_capacity(n),
            t_data: t,
            boundary: b.clone(),
        };
        for k in 0..n {
            let u = u_lo + k as f64 * du;
            let w = if k == 0 || k == n - 1 { 0.5 * du } else { du };
            let amp = f1(phi(u)) * (-b.log_reflection_coefficient(u)).exp();
            packet.u.push(u);
            packet.weights.push(w);
            packet.amplitudes.push(amp);
            packet.jacobian.push(b.one_plus_zdot(u));
        }
        Ok(packet)
    }

    pub fn len(&self) -> usize {
        self.u.len()
    }

    pub fn is_empty(&self) -> bool {
        self.u.is_empty()
    }

    pub fn boundary(&self) -> &StarBoundary {
        &self.boundary
    }

    /// Unfolded coordinate of sample `k`.
    pub fn position(&self, k: usize) -> f64 {
        self.boundary.x_of(self.u[k])
    }

    pub fn norm_sqr(&self) -> f64 {
        (0..self.len())
            .map(|k| self.weights[k] * self.amplitudes[k].norm_sqr() * self.jacobian[k])
            .sum()
    }

    /// Range of `x` covered by the reflected (component-2) part.
    pub fn reflected_support(&self) -> Option<(f64, f64)> {
        let xs: Vec<f64> = (0..self.len())
            .filter(|&k| self.u[k] > 0.0 && self.amplitudes[k] != ZERO)
            .map(|k| self.position(k))
            .collect();
        let lo = xs.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = xs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        (lo <= hi).then_some((lo, hi))
    }

    /// `<g, psi>` for a half-line test function `g`.
    pub fn overlap(&self, g: &impl SpinorFn) -> C64 {
        let mut s = ZERO;
        for k in 0..self.len() {
            let x = self.position(k);
            let gv = if self.u[k] > 0.0 { g.at(x)[1] } else { g.at(-x)[0] };
            s += gv.conj() * self.amplitudes[k] * (self.weights[k] * self.jacobian[k]);
        }
        s
    }

    /// `<psi, 1_{R+}(b^0_0) psi>` for the free half-line operator: the positive-frequency
    /// part of the unfolded field, with the principal value evaluated by the
    /// alternate-point rule in `u` (requires uniform spacing).
    pub fn positive_projection(&self) -> f64 {
        let n = self.len();
        let du = self.u[1] - self.u[0];
        let dens: Vec<C64> = (0..n).map(|k| self.amplitudes[k] * self.jacobian[k]).collect();
        let b = &self.boundary;
        let mut total = ZERO;
        for i in 0..n {
            if dens[i] == ZERO {
                continue;
            }
            let mut acc = ZERO;
            let start = if i % 2 == 0 { 1 } else { 0 };
            for j in (start..n).step_by(2) {
                if dens[j] != ZERO {
                    acc += dens[j] / b.gap(self.u[i], self.u[j]);
                }
            }
            total += dens[i].conj() * acc * (2.0 * du) * du;
        }
        let pv = C64::new(0.0, 1.0 / (2.0 * std::f64::consts::PI)) * total;
        0.5 * self.norm_sqr() + pv.re
    }

    /// Integrals of each component over the cells `[x_j - H/2, x_j + H/2]`, `x_j = (j + 1/2) H`.
    pub fn cell_integrals(&self, cell: f64, cells: usize) -> Vec<Spinor> {
        let mut out = vec![[ZERO; 2]; cells];
        for k in 0..self.len() {
            let x = self.position(k);
            let (c, pos) = if self.u[k] > 0.0 { (1, x) } else { (0, -x) };
            let j = (pos / cell).floor();
            if j >= 0.0 && (j as usize) < cells {
                out[j as usize][c] += self.amplitudes[k] * (self.weights[k] * self.jacobian[k]);
            }
        }
        out
    }

    /// Component, position and line element of sample `k` in `u^0(sigma, t) f^t`, for
    /// `0 <= sigma <= t`: samples with `u >= sigma` have reflected and sit in component 2 at
    /// `z(u) + u - sigma`; earlier ones are still in component 1 at `z(u) - u + sigma`.
    pub fn placement_at(&self, k: usize, sigma: f64) -> (usize, f64, f64) {
        let b = &self.boundary;
        let u = self.u[k];
        let zd = self.jacobian[k] - 1.0;
        if u >= sigma && u > 0.0 {
            (1, b.z(u) + u - sigma, self.jacobian[k])
        } else {
            (0, b.z(u) - u + sigma, 1.0 - zd)
        }
    }

    /// `<g, u^0(sigma, t) f^t>`; reduces to [`ReflectedPacket::overlap`] at `sigma = 0`.
    pub fn overlap_at(&self, sigma: f64, g: &impl SpinorFn) -> C64 {
        let b = &self.boundary;
        let mut s = ZERO;
        for k in 0..self.len() {
            let (c, x, jac) = self.placement_at(k, sigma);
            let amp = if c == 1 {
                self.amplitudes[k]
            } else {
                // Not reflected yet: undo the 1/lambda weight.
                self.amplitudes[k] * b.reflection_coefficient(self.u[k])
            };
            s += g.at(x)[c].conj() * amp * (self.weights[k] * jac);
        }
        s
    }

    /// Largest position occupied at time `sigma`.
    pub fn right_edge_at(&self, sigma: f64) -> f64 {
        (0..self.len())
            .filter(|&k| self.amplitudes[k] != ZERO)
            .map(|k| self.placement_at(k, sigma).1)
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// Direct samples of the half-line field at `x > 0` (for grid-based oracles).
    pub fn evaluate(&self, f1: &dyn Fn(f64) -> C64, x: f64) -> Spinor {
        let b = &self.boundary;
        let t = self.t_data;
        let prop = ExplicitFreePropagator { boundary: b, s: 0.0, t };
        let data = |y: f64| [f1(y + t), ZERO];
        prop.eval(&data, x)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bump(center: f64, half_width: f64, k: f64) -> impl Fn(f64) -> C64 {
        move |x: f64| {
            let r = (x - center) / half_width;
            if r.abs() >= 1.0 {
                ZERO
            } else {
                C64::from_polar((-1.0 / (1.0 - r * r)).exp(), k * x)
            }
        }
    }

    #[test]
    fn translation_moves_support_left() {
        let f1 = bump(1.5, 0.5, 0.0);
        let f = SpinorField::from_fn(0.0, 0.01, 301, 0.0, |x| [f1(x), ZERO]);
        let g = translate_field(&f, 3.0);
        let (a, c) = g.support_interval().unwrap();
        assert!(a > -2.0 && c < -1.0);
        assert_eq!(g.norm(), f.norm());
        assert_eq!(translate_field(&f, 0.0), f);
    }

    #[test]
    fn free_line_directions() {
        let f1 = bump(0.0, 1.0, 2.0);
        let f = SpinorField::from_fn(-2.0, 0.01, 401, 5.0, |x| [f1(x), f1(x)]);
        let out = propagate_free_line(&f, 0.0, 5.0).field;
        for &x in &[-5.5, -5.0, -4.3] {
            let v = out.sample(x);
            assert!((v[0] - f1(x + 5.0)).norm() < 1e-12);
        }
        for &x in &[4.5, 5.0, 5.7] {
            let v = out.sample(x);
            assert!((v[1] - f1(x - 5.0)).norm() < 1e-12);
        }
        let same = propagate_free_line(&f, 5.0, 5.0);
        assert_eq!(same.field.support_interval(), f.support_interval());
    }

    #[test]
    fn fractional_shift_is_band_limited() {
        let f1 = |x: f64| C64::new((-x * x).exp(), 0.0);
        let f = SpinorField::from_fn(-6.0, 0.05, 241, 0.3, |x| [f1(x), ZERO]);
        let out = propagate_free_line(&f, 0.0, 0.3 + 0.0123);
        assert!(out.interpolation_residual < 1e-10);
        let v = out.field.sample(1.0)[0];
        assert!((v - f1(1.3123)).norm() < 1e-8);
    }

    #[test]
    fn spinor_text_round_trip() {
        let f1 = bump(0.5, 0.3, 1.0);
        let f = SpinorField::from_fn(0.0, 0.125, 9, 2.5, |x| [f1(x), f1(x) * 0.5]);
        let g = SpinorField::from_text(&f.to_text()).unwrap();
        assert_eq!(f, g);
        assert!(SpinorField::from_text("1 2 3\n").is_err());
    }

    #[test]
    fn wall_norm_is_high_order() {
        // |u|^2 = e^{-x} on [w, inf) with the wall between grid points: integral e^{-w}.
        let w = 0.3712;
        for h in [1.0 / 32.0, 1.0 / 64.0] {
            let f = SpinorField::from_fn(-1.0, h, (41.0 / h) as usize, 0.0, |x| {
                if x > w { [C64::new((-0.5 * x).exp(), 0.0), ZERO] } else { [ZERO; 2] }
            });
            assert!((f.norm_sqr_beyond(w) - (-w).exp()).abs() < 1e-7);
            assert!((f.norm_sqr() - (-w).exp()).abs() > 1e-3);
        }
    }

    #[test]
    fn explicit_propagator_without_reflection_translates() {
        let b = StarBoundary::analytic(1.0).unwrap();
        let f1 = bump(6.0, 0.5, 1.0);
        let data = |x: f64| [f1(x), f1(x - 1.0)];
        let p = ExplicitFreePropagator::new(&b, -0.5, 0.0).unwrap();
        for &x in &[5.0, 5.5, 6.2, 7.3] {
            let v = p.eval(&data, x);
            assert!((v[0] - f1(x + 0.5)).norm() < 1e-15);
            assert!((v[1] - f1(x - 0.5 - 1.0)).norm() < 1e-15);
        }
    }

    #[test]
    fn explicit_branch_split() {
        let b = StarBoundary::analytic(1.0).unwrap();
        let (s, t) = (0.5, 2.0);
        let p = ExplicitFreePropagator::new(&b, s, t).unwrap();
        let data = |_: f64| [C64::new(1.0, 0.0), C64::new(-3.0, 0.0)];
        let edge = b.z(t) + t - s;
        assert!(p.eval(&data, edge + 1e-9)[1].re == -3.0);
        assert!(p.eval(&data, edge - 1e-6)[1].re > 0.0);
    }

    #[test]
    fn reflected_packet_norm_and_support() {
        let b = StarBoundary::analytic(1.0).unwrap();
        let (a, c) = (b.x_star() + 0.5, b.x_star() + 2.5);
        let f1 = bump(0.5 * (a + c), 1.0, 1.0);
        let norm2: f64 = crate::numerics::composite_gauss(a, c, 200, 8).iter().map(|(x, w)| w * f1(*x).norm_sqr()).sum();
        for &t in &[2.0, 6.0, 12.0] {
            let p = ReflectedPacket::new(&b, &f1, (a, c), t, 4000).unwrap();
            assert!((p.norm_sqr() - norm2).abs() < 1e-8 * norm2, "t = {t}");
            if let Some((lo, hi)) = p.reflected_support() {
                assert!(lo > 0.0 && hi < t + b.z(t));
            }
        }
        assert!(ReflectedPacket::new(&b, &f1, (0.5, 2.0), 3.0, 100).is_err());
    }
}
