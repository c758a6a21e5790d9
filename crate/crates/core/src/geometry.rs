//! Collapsing-star boundary.
//!
//! The boundary is a curve `x = z(t)` that is stationary (`z = 0`) for `t <= 0` and
//! becomes asymptotically null: `t + z(t) -> x_star` at rate `2 kappa`. The default
//! profile has `zdot(t) = -(1 - exp(-2 kappa t))^2` for `t >= 0`.

use std::fmt;

use thiserror::Error;

/// Relative slack allowed on the velocity bound `-1 <= zdot <= 0` for tabulated data.
const VELOCITY_SLACK: f64 = 1e-6;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("surface gravity must be positive and finite, got {0}")]
    InvalidKappa(f64),
    #[error("non-finite time or position {0}")]
    NonFinite(f64),
    #[error("reflection time does not exist: y = {y} is not below x_star = {x_star}")]
    NoReflectionTime { y: f64, x_star: f64 },
    #[error("malformed boundary table: {0}")]
    Table(String),
    #[error("boundary invariants violated: {0}")]
    Invariant(ValidationFailure),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundaryState {
    pub z: f64,
    pub zdot: f64,
    pub zddot: f64,
}

/// Uniformly spaced `(t, z)` samples starting at `t = 0`, interpolated by cubic Hermite
/// with finite-difference slopes and continued past the last sample by an exponential tail.
#[derive(Debug, Clone, PartialEq)]
pub struct TabulatedProfile {
    dt: f64,
    z: Vec<f64>,
    slope: Vec<f64>,
    tail_amplitude: f64,
    tail_rate: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Profile {
    Analytic,
    Tabulated(TabulatedProfile),
}

#[derive(Debug, Clone, PartialEq)]
pub struct StarBoundary {
    kappa: f64,
    profile: Profile,
    x_star: f64,
    /// `(u, x_star - x(u))` at increasing `u`; brackets the inverse.
    tau_cache: Vec<(f64, f64)>,
}

impl StarBoundary {
    pub fn analytic(kappa: f64) -> Result<Self, GeometryError> {
        check_kappa(kappa)?;
        let mut b = StarBoundary {
            kappa,
            profile: Profile::Analytic,
            x_star: 0.75 / kappa,
            tau_cache: Vec::new(),
        };
        b.build_cache();
        Ok(b)
    }

    /// Tabulated profile; rejected unless [`validate_boundary`] passes.
    pub fn tabulated(kappa: f64, samples: &[(f64, f64)]) -> Result<Self, GeometryError> {
        let b = Self::tabulated_unvalidated(kappa, samples)?;
        let t_max = samples.last().map(|s| s.0).unwrap_or(0.0);
        validate_boundary(&b, t_max, 4 * samples.len().max(64)).map_err(GeometryError::Invariant)?;
        Ok(b)
    }

    /// Builds a tabulated boundary checking only the table format, so that
    /// [`validate_boundary`] can report on broken profiles.
    pub fn tabulated_unvalidated(kappa: f64, samples: &[(f64, f64)]) -> Result<Self, GeometryError> {
        check_kappa(kappa)?;
        let (table, x_star) = TabulatedProfile::new(samples)?;
        let mut b = StarBoundary {
            kappa,
            profile: Profile::Tabulated(table),
            x_star,
            tau_cache: Vec::new(),
        };
        b.build_cache();
        Ok(b)
    }

    /// Parses the `# star-boundary v1` two-column text format.
    pub fn parse_table(text: &str) -> Result<Vec<(f64, f64)>, GeometryError> {
        let mut lines = text.lines().map(str::trim).filter(|l| !l.is_empty());
        match lines.next() {
            Some(h) if h.starts_with("# star-boundary v1") => {}
            _ => return Err(GeometryError::Table("missing header `# star-boundary v1`".into())),
        }
        let mut out = Vec::new();
        for (i, line) in lines.enumerate() {
            if line.starts_with('#') {
                continue;
            }
            let cols: Vec<&str> = line.split_whitespace().collect();
            if cols.len() != 2 {
                return Err(GeometryError::Table(format!("row {}: expected 2 columns", i + 1)));
            }
            let parse = |s: &str| {
                s.parse::<f64>()
                    .map_err(|e| GeometryError::Table(format!("row {}: {e}", i + 1)))
            };
            out.push((parse(cols[0])?, parse(cols[1])?));
        }
        Ok(out)
    }

    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    pub fn x_star(&self) -> f64 {
        self.x_star
    }

    pub fn profile(&self) -> &Profile {
        &self.profile
    }

    /// `(z, zdot, zddot)` at time `t`.
    pub fn eval(&self, t: f64) -> Result<BoundaryState, GeometryError> {
        if !t.is_finite() {
            return Err(GeometryError::NonFinite(t));
        }
        Ok(self.state(t))
    }

    pub(crate) fn state(&self, t: f64) -> BoundaryState {
        if t <= 0.0 {
            return BoundaryState { z: 0.0, zdot: 0.0, zddot: 0.0 };
        }
        match &self.profile {
            Profile::Analytic => {
                let k = self.kappa;
                let e = (-2.0 * k * t).exp();
                BoundaryState {
                    z: -t + 0.75 / k - e / k + e * e / (4.0 * k),
                    zdot: -(-(-2.0 * k * t).exp_m1()).powi(2),
                    zddot: -4.0 * k * e * (1.0 - e),
                }
            }
            Profile::Tabulated(tab) => tab.state(t, self.x_star),
        }
    }

    pub fn z(&self, t: f64) -> f64 {
        self.state(t).z
    }

    /// `1 + zdot(t)`, accurate when `zdot` is close to `-1`.
    pub fn one_plus_zdot(&self, t: f64) -> f64 {
        if t <= 0.0 {
            return 1.0;
        }
        match &self.profile {
            Profile::Analytic => {
                let e = (-2.0 * self.kappa * t).exp();
                e * (2.0 - e)
            }
            Profile::Tabulated(tab) => tab.one_plus_zdot(t),
        }
    }

    /// `x(u) = u + z(u)`, the boundary position as a function of reflection time.
    pub fn x_of(&self, u: f64) -> f64 {
        u + self.z(u)
    }

    /// `x_star - x(u)`, accurate for large `u`.
    pub fn deficit(&self, u: f64) -> f64 {
        if u <= 0.0 {
            return self.x_star - u;
        }
        match &self.profile {
            Profile::Analytic => {
                let e = (-2.0 * self.kappa * u).exp();
                e / self.kappa * (1.0 - 0.25 * e)
            }
            Profile::Tabulated(tab) => tab.deficit(u, self.x_star),
        }
    }

    /// `x(u) - x(v)` without cancellation when both are close to `x_star`.
    pub fn gap(&self, u: f64, v: f64) -> f64 {
        match &self.profile {
            Profile::Analytic if u > 0.0 && v > 0.0 => {
                let k = self.kappa;
                let eu = (-2.0 * k * u).exp();
                let ev = (-2.0 * k * v).exp();
                // ev - eu = -ev * expm1(-2k(u - v))
                let diff = -ev * (-2.0 * k * (u - v)).exp_m1();
                diff / k * (1.0 - 0.25 * (eu + ev))
            }
            _ => self.deficit(v) - self.deficit(u),
        }
    }

    /// Reflection coefficient `((1 + zdot)/(1 - zdot))^{1/2}`.
    pub fn reflection_coefficient(&self, t: f64) -> f64 {
        let p = self.one_plus_zdot(t);
        (p / (2.0 - p)).sqrt()
    }

    pub fn log_reflection_coefficient(&self, t: f64) -> f64 {
        let p = self.one_plus_zdot(t);
        0.5 * (p.ln() - (2.0 - p).ln())
    }

    /// Inverse of `s -> s + z(s)`.
    pub fn tau(&self, y: f64) -> Result<f64, GeometryError> {
        if !y.is_finite() {
            return Err(GeometryError::NonFinite(y));
        }
        if y <= 0.0 {
            return Ok(y);
        }
        if y >= self.x_star {
            return Err(GeometryError::NoReflectionTime { y, x_star: self.x_star });
        }
        Ok(self.tau_from_deficit(self.x_star - y))
    }

    /// Solves `x_star - x(u) = d` for `u`; `d` may be far below machine epsilon times `x_star`.
    pub fn tau_from_deficit(&self, d: f64) -> f64 {
        assert!(d > 0.0, "deficit must be positive");
        if d >= self.x_star {
            return self.x_star - d;
        }
        // Bracket from the cache; beyond it the tail is exponential at rate >= kappa.
        let (mut lo, mut hi) = (0.0, f64::NAN);
        for &(u, dd) in &self.tau_cache {
            if dd > d {
                lo = u;
            } else {
                hi = u;
                break;
            }
        }
        if hi.is_nan() {
            hi = lo.max(1.0);
            while self.deficit(hi) > d {
                lo = hi;
                hi *= 2.0;
            }
        }
        // Asymptotic seed d ~ exp(-2 kappa u) / kappa.
        let mut u = -(self.kappa * d).ln() / (2.0 * self.kappa);
        if !(u > lo && u < hi) {
            u = 0.5 * (lo + hi);
        }
        for _ in 0..200 {
            let r = self.deficit(u);
            if r > d {
                lo = u;
            } else {
                hi = u;
            }
            // Newton on ln(deficit), whose derivative is -(1 + zdot)/deficit.
            let slope = -self.one_plus_zdot(u) / r;
            let mut next = u - (r.ln() - d.ln()) / slope;
            if !(next > lo && next < hi) || !next.is_finite() {
                next = 0.5 * (lo + hi);
            }
            if (next - u).abs() <= 1e-15 * u.abs().max(1.0) || hi - lo <= 1e-15 * hi.abs().max(1.0) {
                return next;
            }
            u = next;
        }
        u
    }

    fn build_cache(&mut self) {
        let scale = 1.0 / self.kappa;
        self.tau_cache = (0..=200)
            .map(|i| {
                let u = scale * 0.1 * i as f64;
                (u, self.deficit(u))
            })
            .collect();
    }
}

impl TabulatedProfile {
    fn new(samples: &[(f64, f64)]) -> Result<(Self, f64), GeometryError> {
        if samples.len() < 8 {
            return Err(GeometryError::Table("need at least 8 samples".into()));
        }
        if samples.iter().any(|(t, z)| !t.is_finite() || !z.is_finite()) {
            return Err(GeometryError::Table("non-finite sample".into()));
        }
        if samples[0].0 != 0.0 || samples[0].1 != 0.0 {
            return Err(GeometryError::Table("first sample must be (0, 0)".into()));
        }
        let dt = samples[1].0 - samples[0].0;
        if dt <= 0.0 {
            return Err(GeometryError::Table("times must increase".into()));
        }
        for (i, w) in samples.windows(2).enumerate() {
            if ((w[1].0 - w[0].0) - dt).abs() > 1e-9 * dt.max(1.0) {
                return Err(GeometryError::Table(format!("non-uniform spacing at row {}", i + 2)));
            }
        }
        let z: Vec<f64> = samples.iter().map(|s| s.1).collect();
        let n = z.len();
        let slope = finite_difference_slopes(&z, dt);

        let y = |i: usize| i as f64 * dt + z[i];
        let (y1, y2, y3) = (y(n - 3), y(n - 2), y(n - 1));
        let d1 = y2 - y1;
        let d2 = y3 - y2;
        let x_star = if (d1 - d2).abs() > 0.0 && d2 / d1 < 1.0 && d2 / d1 > 0.0 {
            y3 - d2 * d2 / (d2 - d1)
        } else {
            y3
        };
        let def_last = (x_star - y3).max(f64::MIN_POSITIVE);
        let def_prev = (x_star - y2).max(def_last);
        let tail_rate = ((def_prev / def_last).ln() / dt).max(0.0);
        Ok((
            TabulatedProfile { dt, z, slope, tail_amplitude: def_last, tail_rate },
            x_star,
        ))
    }

    fn t_end(&self) -> f64 {
        (self.z.len() - 1) as f64 * self.dt
    }

    fn state(&self, t: f64, x_star: f64) -> BoundaryState {
        let t_end = self.t_end();
        if t >= t_end {
            let e = self.tail_amplitude * (-self.tail_rate * (t - t_end)).exp();
            return BoundaryState {
                z: x_star - e - t,
                zdot: self.tail_rate * e - 1.0,
                zddot: -self.tail_rate * self.tail_rate * e,
            };
        }
        let i = ((t / self.dt).floor() as usize).min(self.z.len() - 2);
        let h = self.dt;
        let s = (t - i as f64 * h) / h;
        let (p0, p1) = (self.z[i], self.z[i + 1]);
        let (m0, m1) = (self.slope[i] * h, self.slope[i + 1] * h);
        let s2 = s * s;
        let s3 = s2 * s;
        let z = (2.0 * s3 - 3.0 * s2 + 1.0) * p0
            + (s3 - 2.0 * s2 + s) * m0
            + (-2.0 * s3 + 3.0 * s2) * p1
            + (s3 - s2) * m1;
        let dz = ((6.0 * s2 - 6.0 * s) * p0
            + (3.0 * s2 - 4.0 * s + 1.0) * m0
            + (-6.0 * s2 + 6.0 * s) * p1
            + (3.0 * s2 - 2.0 * s) * m1)
            / h;
        let ddz = ((12.0 * s - 6.0) * p0 + (6.0 * s - 4.0) * m0 + (6.0 - 12.0 * s) * p1 + (6.0 * s - 2.0) * m1)
            / (h * h);
        BoundaryState { z, zdot: dz, zddot: ddz }
    }

    fn one_plus_zdot(&self, t: f64) -> f64 {
        let t_end = self.t_end();
        if t >= t_end {
            return self.tail_rate * self.tail_amplitude * (-self.tail_rate * (t - t_end)).exp();
        }
        1.0 + self.state(t, 0.0).zdot
    }

    fn deficit(&self, t: f64, x_star: f64) -> f64 {
        let t_end = self.t_end();
        if t >= t_end {
            return self.tail_amplitude * (-self.tail_rate * (t - t_end)).exp();
        }
        x_star - t - self.state(t, x_star).z
    }
}

fn finite_difference_slopes(z: &[f64], dt: f64) -> Vec<f64> {
    let n = z.len();
    (0..n)
        .map(|i| {
            if i >= 2 && i + 2 < n {
                (z[i - 2] - 8.0 * z[i - 1] + 8.0 * z[i + 1] - z[i + 2]) / (12.0 * dt)
            } else if i == 0 {
                // z is identically zero for t < 0, so the left neighbours are known.
                (-z[2] + 8.0 * z[1]) / (12.0 * dt)
            } else if i == 1 {
                (-8.0 * z[0] + 8.0 * z[2] - z[3]) / (12.0 * dt)
            } else {
                (3.0 * z[i] - 4.0 * z[i - 1] + z[i - 2]) / (2.0 * dt)
            }
        })
        .collect()
}

fn check_kappa(kappa: f64) -> Result<(), GeometryError> {
    if kappa.is_finite() && kappa > 0.0 {
        Ok(())
    } else {
        Err(GeometryError::InvalidKappa(kappa))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundaryCheck {
    StationaryBeforeCollapse,
    VelocityBound,
    SmoothAtCollapse,
    Monotone,
    ApproachRate,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    pub check: BoundaryCheck,
    pub times: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ValidationReport {
    pub fitted_rate: f64,
    pub required_rate: f64,
    pub samples: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ValidationFailure {
    pub violations: Vec<Violation>,
    pub fitted_rate: f64,
}

impl fmt::Display for ValidationFailure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for v in &self.violations {
            let shown: Vec<String> = v.times.iter().take(5).map(|t| format!("{t:.4}")).collect();
            write!(f, "{:?} at t = [{}{}]; ", v.check, shown.join(", "), if v.times.len() > 5 { ", ..." } else { "" })?;
        }
        write!(f, "fitted rate {:.4}", self.fitted_rate)
    }
}

/// Checks every boundary invariant on `n_samples` points of `[0, t_max]` and fits the
/// exponential approach rate of `t + z(t)` to `x_star` over the second half of the window.
pub fn validate_boundary(
    b: &StarBoundary,
    t_max: f64,
    n_samples: usize,
) -> Result<ValidationReport, ValidationFailure> {
    assert!(t_max > 0.0 && n_samples >= 4, "need t_max > 0 and at least 4 samples");
    let ts: Vec<f64> = (0..=n_samples).map(|i| t_max * i as f64 / n_samples as f64).collect();
    let mut violations = Vec::new();
    let mut record = |check, times: Vec<f64>| {
        if !times.is_empty() {
            violations.push(Violation { check, times });
        }
    };

    let before: Vec<f64> = ts
        .iter()
        .map(|t| -t - 1e-3)
        .filter(|&t| b.state(t) != BoundaryState { z: 0.0, zdot: 0.0, zddot: 0.0 })
        .collect();
    record(BoundaryCheck::StationaryBeforeCollapse, before);

    let velocity: Vec<f64> = ts
        .iter()
        .copied()
        .filter(|&t| {
            let v = b.state(t).zdot;
            !(-1.0 - VELOCITY_SLACK..=VELOCITY_SLACK).contains(&v)
        })
        .collect();
    record(BoundaryCheck::VelocityBound, velocity);

    let eps = 1e-7;
    let right = b.state(eps);
    // Tabulated derivatives carry finite-difference error that scales with the spacing.
    let (zdot_tol, zddot_tol) = match &b.profile {
        Profile::Analytic => (1e-6, 1e-5),
        Profile::Tabulated(tab) => {
            let kh = b.kappa * tab.dt;
            (1e-6 + kh * kh, 20.0 * b.kappa * kh)
        }
    };
    if right.z.abs() > 1e-9 || right.zdot.abs() > zdot_tol || right.zddot.abs() > zddot_tol {
        record(BoundaryCheck::SmoothAtCollapse, vec![0.0]);
    }

    let monotone: Vec<f64> = ts
        .windows(2)
        .filter(|w| b.gap(w[1], w[0]) <= 0.0 && b.deficit(w[1]) > 0.0)
        .map(|w| w[1])
        .collect();
    record(BoundaryCheck::Monotone, monotone);

    let fit_ts: Vec<f64> = ts.iter().copied().filter(|&t| t >= 0.5 * t_max).collect();
    let pts: Vec<(f64, f64)> = fit_ts
        .iter()
        .filter_map(|&t| {
            let d = b.deficit(t);
            (d > 0.0).then(|| (t, d.ln()))
        })
        .collect();
    let fitted_rate = -linear_slope(&pts);
    let required_rate = 2.0 * b.kappa * 0.95;
    if !(fitted_rate >= required_rate) {
        record(BoundaryCheck::ApproachRate, fit_ts);
    }

    if violations.is_empty() {
        Ok(ValidationReport { fitted_rate, required_rate, samples: ts.len() })
    } else {
        Err(ValidationFailure { violations, fitted_rate })
    }
}

pub(crate) fn linear_slope(pts: &[(f64, f64)]) -> f64 {
    let n = pts.len() as f64;
    if pts.len() < 2 {
        return f64::NAN;
    }
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    sxy / sxx
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Closed-form inverse of the default profile, independent of the Newton solver.
    fn tau_closed_form(kappa: f64, y: f64) -> f64 {
        let d = 0.75 / kappa - y;
        let e = 2.0 - 2.0 * (1.0 - kappa * d).sqrt();
        -e.ln() / (2.0 * kappa)
    }

    #[test]
    fn stationary_before_collapse() {
        let b = StarBoundary::analytic(1.0).unwrap();
        assert_eq!(b.eval(-3.0).unwrap(), BoundaryState { z: 0.0, zdot: 0.0, zddot: 0.0 });
        let at0 = b.eval(0.0).unwrap();
        assert_eq!((at0.z, at0.zdot, at0.zddot), (0.0, 0.0, 0.0));
        assert!(b.eval(f64::NAN).is_err());
    }

    #[test]
    fn x_star_matches_quadrature() {
        let kappa = 1.0;
        let b = StarBoundary::analytic(kappa).unwrap();
        // t + z(t) = integral of 1 + zdot; Simpson on [0, 30].
        let n = 30_000;
        let h = 30.0 / n as f64;
        let mut s = b.one_plus_zdot(0.0) + b.one_plus_zdot(30.0);
        for i in 1..n {
            let w = if i % 2 == 1 { 4.0 } else { 2.0 };
            s += w * b.one_plus_zdot(i as f64 * h);
        }
        let integral = s * h / 3.0;
        assert!((integral - 0.75).abs() < 1e-10);
        assert!((b.x_star() - 0.75).abs() < 1e-15);
        assert!((30.0 + b.z(30.0) - 0.75).abs() < 1e-12);
    }

    #[test]
    fn derivatives_are_consistent() {
        let b = StarBoundary::analytic(1.3).unwrap();
        for &t in &[0.1, 0.7, 2.0, 5.0] {
            let h = 1e-5;
            let s = b.state(t);
            let dz = (b.z(t + h) - b.z(t - h)) / (2.0 * h);
            let ddz = (b.state(t + h).zdot - b.state(t - h).zdot) / (2.0 * h);
            assert!((dz - s.zdot).abs() < 1e-8);
            assert!((ddz - s.zddot).abs() < 1e-6);
        }
    }

    #[test]
    fn reflection_coefficient_values() {
        let b = StarBoundary::analytic(1.0).unwrap();
        assert_eq!(b.reflection_coefficient(-1.0), 1.0);
        // zdot = -3/5 happens where (1 - E)^2 = 3/5.
        let e = 1.0 - (0.6f64).sqrt();
        let t = -e.ln() / 2.0;
        assert!((b.state(t).zdot + 0.6).abs() < 1e-14);
        assert!((b.reflection_coefficient(t) - 0.5).abs() < 1e-13);
        // log lambda + kappa t stays bounded.
        let c: Vec<f64> = [10.0, 20.0, 40.0].iter().map(|&t| b.log_reflection_coefficient(t) + t).collect();
        assert!(c.iter().all(|v| (v - c[0]).abs() < 1e-6));
    }

    #[test]
    fn tau_examples() {
        let b = StarBoundary::analytic(1.0).unwrap();
        assert_eq!(b.tau(-2.0).unwrap(), -2.0);
        let y = 1.0 + b.z(1.0);
        assert!((b.tau(y).unwrap() - 1.0).abs() < 1e-10);
        assert!(matches!(b.tau(0.75), Err(GeometryError::NoReflectionTime { .. })));
        assert!(b.tau(2.0).is_err());
    }

    #[test]
    fn tau_agrees_with_closed_form_near_edge() {
        for &kappa in &[0.5, 1.0, 2.0] {
            let b = StarBoundary::analytic(kappa).unwrap();
            for i in 0..1000 {
                let d = b.x_star() * 10f64.powf(-12.0 * i as f64 / 999.0);
                let y = b.x_star() - d;
                let u = b.tau(y).unwrap();
                assert!((b.x_of(u) - y).abs() <= 1e-10, "residual at y = {y}");
                if y > 0.0 && d > 1e-9 {
                    assert!((u - tau_closed_form(kappa, y)).abs() < 1e-7 * u.max(1.0));
                }
            }
        }
    }

    #[test]
    fn deep_deficit_inverse() {
        let b = StarBoundary::analytic(1.0).unwrap();
        for &u in &[5.0, 20.0, 60.0, 150.0] {
            let back = b.tau_from_deficit(b.deficit(u));
            assert!((back - u).abs() < 1e-10 * u);
        }
    }

    #[test]
    fn stable_gap_matches_direct_difference() {
        let b = StarBoundary::analytic(1.0).unwrap();
        for &(u, v) in &[(0.3, 0.1), (2.0, 1.5), (4.0, 4.0 + 1e-3)] {
            assert!((b.gap(u, v) - (b.x_of(u) - b.x_of(v))).abs() < 1e-14);
        }
        // Far out the direct difference loses everything but the gap does not.
        let g = b.gap(30.0, 30.1);
        let expected = ((-60.2f64).exp() - (-60.0f64).exp()) * (1.0 - 0.25 * ((-60.0f64).exp() + (-60.2f64).exp()));
        assert!(((g - expected) / expected).abs() < 1e-12);
    }

    #[test]
    fn validation_of_default_profile() {
        let b = StarBoundary::analytic(1.0).unwrap();
        let r = validate_boundary(&b, 10.0, 500).unwrap();
        assert!((r.fitted_rate - 2.0).abs() < 0.01);
    }

    fn sampled_default(kappa: f64, dt: f64, n: usize) -> Vec<(f64, f64)> {
        let b = StarBoundary::analytic(kappa).unwrap();
        (0..n).map(|i| (i as f64 * dt, b.z(i as f64 * dt))).collect()
    }

    #[test]
    fn tabulated_copy_of_default_passes() {
        let samples = sampled_default(1.0, 0.01, 1001);
        let b = StarBoundary::tabulated(1.0, &samples).unwrap();
        assert!((b.x_star() - 0.75).abs() < 1e-9);
        let a = StarBoundary::analytic(1.0).unwrap();
        for &t in &[0.123, 1.77, 6.5, 12.0] {
            assert!((b.z(t) - a.z(t)).abs() < 1e-8);
        }
        let y = 0.7;
        assert!((b.tau(y).unwrap() - a.tau(y).unwrap()).abs() < 1e-5);
    }

    #[test]
    fn tabulated_velocity_violation_is_reported() {
        let mut samples = sampled_default(1.0, 0.01, 1001);
        // Steepen a short stretch so that zdot dips to about -1.1.
        for i in 300..320 {
            samples[i].1 -= 0.11 * 0.01 * (i - 299) as f64;
        }
        for i in 320..samples.len() {
            samples[i].1 -= 0.11 * 0.01 * 20.0;
        }
        let b = StarBoundary::tabulated_unvalidated(1.0, &samples).unwrap();
        let err = validate_boundary(&b, 10.0, 2000).unwrap_err();
        assert!(err.violations.iter().any(|v| v.check == BoundaryCheck::VelocityBound));
        assert!(StarBoundary::tabulated(1.0, &samples).is_err());
    }

    #[test]
    fn table_text_round_trip() {
        let samples = sampled_default(1.0, 0.05, 40);
        let mut text = String::from("# star-boundary v1\n");
        for (t, z) in &samples {
            text.push_str(&format!("{t:.17e} {z:.17e}\n"));
        }
        assert_eq!(StarBoundary::parse_table(&text).unwrap(), samples);
        assert!(StarBoundary::parse_table("0 0\n").is_err());
    }
}
