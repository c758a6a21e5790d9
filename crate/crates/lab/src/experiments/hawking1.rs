//! Hawking I: the vacuum at time 0, seen through the backward evolution of a translated
//! test function, against thermal (left-movers) and wave-operator (right-movers) targets.

use hawking_core::classical::{translate_field, BoundaryPropagator, ReflectedPacket, SpinorField};
use hawking_core::numerics::fit_decay_rate;
use hawking_core::spectral::{
    quadratic_form, thermal_occupation_component1, wave_operator_right, DiracOperatorMatrix, FormKind, FormOperator,
    OperatorDomain,
};
use hawking_core::C64;
use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use super::{boundary, check_ladder, ensure, gaussian, par_rungs, rel_err, strictly_decreasing, PotentialConfig};
use crate::report::{Assertion, Report, Table};
use crate::LabError;

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct Hawking1LeftConfig {
    pub kappa: f64,
    pub potential: PotentialConfig,
    /// Gaussian width and carrier of the component-1 profile.
    pub sigma: f64,
    pub carrier: f64,
    /// Support starts at `x_star + margin`.
    pub margin: f64,
    /// Support half-length in units of `sigma`.
    pub cut: f64,
    pub t_ladder: Vec<f64>,
    /// Reflection-time samples per packet.
    pub samples: usize,
    pub rel_tol: f64,
    pub norm_tol: f64,
    /// Sample spacing of the Fourier oracle.
    pub oracle_h: f64,
    /// Coarse half-line grid for the potential correction.
    pub correction_extent: f64,
    pub correction_cells: usize,
}

impl Default for Hawking1LeftConfig {
    fn default() -> Self {
        Hawking1LeftConfig {
            kappa: 1.0,
            potential: PotentialConfig::default(),
            sigma: 0.5,
            carrier: 1.0,
            margin: 0.5,
            cut: 8.0,
            t_ladder: vec![2.0, 4.0, 6.0, 8.0],
            samples: 4000,
            rel_tol: 0.02,
            norm_tol: 1e-6,
            oracle_h: 1e-3,
            correction_extent: 12.0,
            correction_cells: 256,
        }
    }
}

impl Hawking1LeftConfig {
    fn validate(&self) -> Result<(), LabError> {
        check_ladder("t_ladder", &self.t_ladder)?;
        ensure(self.sigma > 0.0 && self.margin > 0.0 && self.cut > 0.0, "sigma, margin and cut must be positive")?;
        ensure(self.samples >= 64, "samples must be at least 64")?;
        ensure(self.oracle_h > 0.0 && self.oracle_h < self.sigma, "oracle_h must lie in (0, sigma)")?;
        ensure(self.correction_cells >= 16 && self.correction_extent > 0.0, "correction grid too small")?;
        ensure(self.rel_tol > 0.0 && self.norm_tol > 0.0, "tolerances must be positive")
    }
}

/// Component-1 packet on `[a, c]` and its squared norm.
pub(crate) struct LeftPacket {
    pub a: f64,
    pub c: f64,
    pub profile: Box<dyn Fn(f64) -> C64 + Send + Sync>,
}

impl LeftPacket {
    pub fn new(x_star: f64, margin: f64, sigma: f64, carrier: f64, cut: f64) -> Self {
        let a = x_star + margin;
        let center = a + cut * sigma;
        LeftPacket { a, c: center + cut * sigma, profile: Box::new(gaussian(center, sigma, carrier, cut)) }
    }

    /// Samples on `[a, c]` with spacing close to `h`.
    pub fn samples(&self, h: f64) -> (Vec<C64>, f64) {
        let n = ((self.c - self.a) / h).ceil() as usize + 1;
        let h = (self.c - self.a) / (n - 1) as f64;
        ((0..n).map(|j| (self.profile)(self.a + j as f64 * h)).collect(), h)
    }

    pub fn norm_sqr(&self, h: f64) -> f64 {
        let (v, h) = self.samples(h);
        v.iter().map(|z| z.norm_sqr()).sum::<f64>() * h
    }

    /// Thermal form `int |f^(xi)|^2 (1 + e^{beta xi})^{-1} d xi` by FFT quadrature.
    pub fn thermal_target(&self, beta: f64, h: f64) -> f64 {
        let (v, h) = self.samples(h);
        thermal_occupation_component1(&v, self.a, h, beta)
    }
}

pub fn run_left(cfg: &Hawking1LeftConfig) -> Result<Report, LabError> {
    cfg.validate()?;
    let b = boundary(cfg.kappa)?;
    let v = cfg.potential.build()?;
    let beta = 2.0 * std::f64::consts::PI / cfg.kappa;
    let packet = LeftPacket::new(b.x_star(), cfg.margin, cfg.sigma, cfg.carrier, cfg.cut);
    let norm_f = packet.norm_sqr(cfg.oracle_h).sqrt();
    let target = packet.thermal_target(beta, cfg.oracle_h);

    // K = 1_{R+}(b^V_0) - 1_{R+}(b^0_0) on a coarse half-line grid.
    let correction = if v.is_zero() {
        None
    } else {
        let dom = OperatorDomain::HalfLine { x_max: cfg.correction_extent };
        let mv = DiracOperatorMatrix::new(dom, &v, cfg.correction_cells)?;
        let m0 = DiracOperatorMatrix::new(dom, &hawking_core::classical::DiracPotential::zero(), cfg.correction_cells)?;
        let step = |e: f64| FormKind::PositiveProjection.eval(e);
        Some((mv.function(step) - m0.function(step), mv.h))
    };

    let rows = par_rungs(&cfg.t_ladder, |t| {
        let p = ReflectedPacket::new(&b, &*packet.profile, (packet.a, packet.c), t, cfg.samples)?;
        let defect = (p.norm_sqr().sqrt() - norm_f).abs();
        if defect > cfg.norm_tol {
            return Err(LabError::Numerical(format!("norm accounting failed at t = {t}: |psi| - |f| = {defect:e}")));
        }
        let q0 = p.positive_projection();
        let half = ReflectedPacket::new(&b, &*packet.profile, (packet.a, packet.c), t, cfg.samples / 2)?;
        let quadrature = (q0 - half.positive_projection()).abs();
        let (corr, truncation) = match &correction {
            None => (0.0, 0.0),
            Some((k, cell)) => {
                let cells = p.cell_integrals(*cell, cfg.correction_cells);
                let n = cells.len();
                let scale = 1.0 / cell.sqrt();
                let vec = DVector::from_fn(2 * n, |i, _| cells[i % n][i / n] * scale);
                let corr = (vec.adjoint() * k * &vec)[(0, 0)].re;
                (corr, (p.norm_sqr() - vec.norm_squared()).max(0.0))
            }
        };
        Ok([t, q0 + corr, target, rel_err(q0 + corr, target), corr, quadrature, truncation, defect])
    })?;

    let mut table = Table::new(&[
        "t",
        "observed",
        "target",
        "rel_error",
        "correction",
        "quadrature_error",
        "truncation",
        "norm_defect",
    ]);
    for r in &rows {
        table.push(r.to_vec());
    }
    let errors: Vec<f64> = rows.iter().map(|r| r[3]).collect();
    let mut report = Report::new("hawking1-left", table);
    report.set("kappa", cfg.kappa);
    report.set("beta", beta);
    report.set("target", target);
    report.set(
        "target_provenance",
        "FFT quadrature of the Fermi factor against the sampled data profile, independent of the reflected packet",
    );
    report.set("norm_sqr", norm_f * norm_f);
    let pts: Vec<(f64, f64)> = rows.iter().map(|r| (r[0], r[3])).collect();
    report.set("fitted_rate", fit_decay_rate(&pts));
    report.add_series("error", pts);
    report.check(Assertion::at_most(
        "final_relative_error",
        *errors.last().unwrap(),
        cfg.rel_tol,
        "relative error at the largest t",
    ));
    report.check(Assertion::holds("errors_decreasing", strictly_decreasing(&errors), "strictly along the ladder"));
    if correction.is_some() {
        let c: Vec<f64> = rows.iter().map(|r| r[4].abs()).collect();
        report.check(Assertion::holds("correction_decreasing", strictly_decreasing(&c), "potential correction |<psi, K psi>|"));
    }
    Ok(report)
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct Hawking1RightConfig {
    pub kappa: f64,
    pub potential: PotentialConfig,
    /// Component-2 Gaussian.
    pub center: f64,
    pub sigma: f64,
    pub carrier: f64,
    pub cut: f64,
    /// Grid spacing of the numerical propagators; ladder entries must be multiples of it.
    pub h: f64,
    pub t_ladder: Vec<f64>,
    pub wave_ladder: Vec<f64>,
    /// Half-line operator for the positive projection.
    pub x_max: f64,
    pub cells: usize,
    /// Final error bound relative to `|f|^2`.
    pub tol: f64,
    /// Convergence bound for the last wave-operator increment relative to `|f|`.
    pub wave_tol: f64,
}

impl Default for Hawking1RightConfig {
    fn default() -> Self {
        Hawking1RightConfig {
            kappa: 1.0,
            potential: PotentialConfig::tanh(1.0, 2.0, 1.0),
            center: 4.0,
            sigma: 0.5,
            carrier: -1.0,
            cut: 6.0,
            h: 1.0 / 32.0,
            t_ladder: vec![2.0, 4.0, 6.0, 8.0, 10.0, 12.0, 14.0, 16.0],
            wave_ladder: vec![5.0, 10.0, 15.0, 20.0, 25.0, 30.0, 35.0, 40.0],
            x_max: 16.0,
            cells: 512,
            tol: 5e-3,
            wave_tol: 1e-6,
        }
    }
}

impl Hawking1RightConfig {
    fn validate(&self, x_star: f64) -> Result<(), LabError> {
        check_ladder("t_ladder", &self.t_ladder)?;
        check_ladder("wave_ladder", &self.wave_ladder)?;
        ensure(self.sigma > 0.0 && self.cut > 0.0 && self.h > 0.0, "sigma, cut and h must be positive")?;
        ensure(
            self.center - self.cut * self.sigma > x_star,
            "component-2 data must be supported right of x_star",
        )?;
        ensure(self.center + self.cut * self.sigma < self.x_max, "data must fit inside the operator grid")?;
        ensure(self.cells >= 16 && self.tol > 0.0 && self.wave_tol > 0.0, "cells >= 16 and positive tolerances")
    }
}

pub fn run_right(cfg: &Hawking1RightConfig) -> Result<Report, LabError> {
    let b = boundary(cfg.kappa)?;
    cfg.validate(b.x_star())?;
    let v = cfg.potential.build()?;
    let g = gaussian(cfg.center, cfg.sigma, cfg.carrier, cfg.cut);
    let (lo, hi) = (cfg.center - cfg.cut * cfg.sigma, cfg.center + cfg.cut * cfg.sigma);
    let f = SpinorField::on_interval(lo, hi, cfg.h, 0.0, 0.0, |x| [C64::new(0.0, 0.0), g(x)]);
    let norm_sqr = f.norm_sqr();
    let op = DiracOperatorMatrix::new(OperatorDomain::HalfLine { x_max: cfg.x_max }, &v, cfg.cells)?;

    let wave = wave_operator_right(&f, &b, &v, &cfg.wave_ladder, cfg.wave_tol)?;
    let target = quadratic_form(FormKind::PositiveProjection, FormOperator::Discrete(&op), &wave.field)?.value;
    let wave_norm_defect = (wave.field.halfline_norm_sqr()?.sqrt() - norm_sqr.sqrt()).abs();
    let wave_scheme = wave.rungs.last().and_then(|r| r.scheme_error).unwrap_or(f64::NAN);

    let prop = BoundaryPropagator::new(&b, &v);
    let rows = par_rungs(&cfg.t_ladder, |t| {
        let mut ft = translate_field(&f, t);
        ft.time_tag = t;
        let back = prop.propagate(&ft, 0.0)?;
        let q = quadratic_form(FormKind::PositiveProjection, FormOperator::Discrete(&op), &back.field)?;
        let norm = back.field.halfline_norm_sqr()?.sqrt();
        let scheme = back.scheme_error.unwrap_or(f64::NAN);
        Ok([t, q.value, target, (q.value - target).abs(), scheme, q.resample_residual, (norm - norm_sqr.sqrt()).abs()])
    })?;

    let mut table =
        Table::new(&["t", "observed", "target", "abs_error", "scheme_error", "truncation", "norm_defect"]);
    for r in &rows {
        table.push(r.to_vec());
    }
    let mut wave_table = Table::new(&["T", "norm", "increment", "scheme_error"]);
    for r in &wave.rungs {
        wave_table.push(vec![r.t, r.norm, r.increment, r.scheme_error.unwrap_or(f64::NAN)]);
    }
    let mut report = Report::new("hawking1-right", table);
    report.add_table("wave", wave_table);
    report.set("target", target);
    report.set(
        "target_provenance",
        "positive spectral projection of the discretized half-line operator applied to the wave-operator limit",
    );
    report.set("norm_sqr", norm_sqr);
    report.set("wave_norm_defect", wave_norm_defect);
    report.add_series("error", rows.iter().map(|r| (r[0], r[3])).collect());
    report.add_series("wave_increment", wave.rungs.iter().skip(1).map(|r| (r.t, r.increment)).collect());

    let last = rows.last().unwrap();
    report.check(Assertion::at_most("final_error", last[3], cfg.tol * norm_sqr, "|q(t_max) - target| vs tol |f|^2"));
    report.check(Assertion::holds("wave_converged", wave.converged, "last wave-operator increment below wave_tol |f|"));
    // |(|u f| - |f|)| <= |u f - u_exact f|, so the scheme error certifies unitarity at this resolution.
    let norm_ok = rows.iter().all(|r| r[6] <= r[4].max(1e-12));
    report.check(Assertion::holds("norm_accounting", norm_ok, "norm defect within the scheme error on every rung"));
    report.check(Assertion::at_most(
        "wave_norm_accounting",
        wave_norm_defect,
        wave_scheme.max(1e-12),
        "wave-operator output norm defect vs its scheme error",
    ));
    Ok(report)
}
