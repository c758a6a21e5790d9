//! Hawking II diagnostics: asymptotic covariances, wave-operator rung tables, the
//! conditional-expectation loss and the finite-speed window.

use hawking_core::classical::{
    propagate_free_line, propagate_line_numeric, BoundaryPropagator, DiracPotential, SpinorField,
};
use hawking_core::geometry::StarBoundary;
use hawking_core::numerics::composite_gauss;
use hawking_core::spectral::{
    constant_mass_spectral_cut, quadratic_form, wave_operator_left_line, DiracOperatorMatrix, FormKind,
    FormOperator, OperatorDomain, Rung,
};
use hawking_core::C64;
use serde::{Deserialize, Serialize};

use super::{boundary, check_ladder, ensure, gaussian, PotentialConfig};
use crate::report::{Assertion, Report, Table};
use crate::LabError;

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct Hawking2Config {
    pub kappa: f64,
    pub potential: PotentialConfig,
    /// (a) thermal vs vacuum covariance on a gapped packet.
    pub beta_ladder: Vec<f64>,
    pub gap: f64,
    pub line_half: f64,
    pub line_cells: usize,
    pub zero_temp_tol: f64,
    /// (b) boundary wave operator on a right-moving massive packet.
    pub right_h: f64,
    pub right_ladder: Vec<f64>,
    pub right_center: f64,
    pub right_sigma: f64,
    pub right_carrier: f64,
    pub right_extent: f64,
    pub right_cells: usize,
    pub covariance_tol: f64,
    /// (c) conditional expectation loss.
    pub loss_ladder: Vec<f64>,
    pub loss_centers: Vec<f64>,
    /// (d) window check.
    pub window_t: f64,
    pub window_c: f64,
    pub window_h: f64,
    /// (e) line wave operator on data prepared from a left-moving massless packet.
    pub left_h: f64,
    pub left_prepare: f64,
    pub left_ladder: Vec<f64>,
    pub purity_tol: f64,
}

impl Default for Hawking2Config {
    fn default() -> Self {
        Hawking2Config {
            kappa: 1.0,
            potential: PotentialConfig::tanh(1.0, 0.0, 1.0),
            beta_ladder: vec![1.0, 2.0 * std::f64::consts::PI, 20.0, 200.0],
            gap: 0.5,
            line_half: 16.0,
            line_cells: 256,
            zero_temp_tol: 1e-6,
            right_h: 1.0 / 16.0,
            right_ladder: vec![4.0, 8.0, 12.0, 16.0],
            right_center: 12.0,
            right_sigma: 2.0,
            right_carrier: 3.0,
            right_extent: 32.0,
            right_cells: 256,
            covariance_tol: 5e-3,
            loss_ladder: vec![0.0, 1.0, 2.0, 4.0, 6.0, 8.0, 10.0],
            loss_centers: vec![-2.0, 0.0, 1.0],
            window_t: 20.0,
            window_c: 3.0,
            window_h: 1.0 / 32.0,
            left_h: 1.0 / 32.0,
            left_prepare: 24.0,
            left_ladder: vec![8.0, 16.0, 24.0, 32.0, 40.0, 48.0],
            purity_tol: 1e-3,
        }
    }
}

impl Hawking2Config {
    fn validate(&self) -> Result<(), LabError> {
        check_ladder("beta_ladder", &self.beta_ladder)?;
        check_ladder("right_ladder", &self.right_ladder)?;
        check_ladder("left_ladder", &self.left_ladder)?;
        ensure(
            !self.loss_ladder.is_empty() && self.loss_ladder.windows(2).all(|w| w[1] > w[0]) && self.loss_ladder[0] >= 0.0,
            "loss_ladder must be nonnegative and increasing",
        )?;
        ensure(self.gap > 0.0 && self.line_half > 0.0 && self.line_cells >= 16, "bad line operator parameters")?;
        ensure(self.right_h > 0.0 && self.window_h > 0.0 && self.left_h > 0.0, "grid spacings must be positive")?;
        ensure(self.right_sigma > 0.0 && self.right_center > 5.0 * self.right_sigma, "right packet must sit in x > 0")?;
        ensure(self.right_extent > self.right_center && self.right_cells >= 16, "bad half-line operator parameters")?;
        ensure(self.window_t > 0.0 && self.window_c >= 0.0 && self.left_prepare > 0.0, "bad window parameters")
    }
}

/// After the first increment below `1e-2 |f|`, increments never grow above the previous
/// one by more than a roundoff floor.
pub fn settles_monotonically(rungs: &[Rung], norm: f64) -> bool {
    let inc: Vec<f64> = rungs.iter().skip(1).map(|r| r.increment).collect();
    let Some(start) = inc.iter().position(|&d| d <= 1e-2 * norm) else {
        return false;
    };
    inc[start..].windows(2).all(|w| w[1] <= w[0] + 1e-12 * norm)
}

pub fn run(cfg: &Hawking2Config) -> Result<Report, LabError> {
    cfg.validate()?;
    let b = boundary(cfg.kappa)?;
    let v = cfg.potential.build()?;
    let mut report = Report::new("hawking2-diagnostics", Table::new(&["check", "observed", "bound"]));
    let mut main = Vec::new();

    // (a) beta -> infinity.
    let line = DiracOperatorMatrix::new(OperatorDomain::Line { x_half: cfg.line_half }, &v, cfg.line_cells)?;
    let g = gaussian(0.0, 1.0, 2.0, 8.0);
    let raw = SpinorField::from_fn(line.x(0), line.h, line.n, 0.0, |x| [g(x), g(x) * 0.5]);
    let (vec, _) = line.to_vector(&raw);
    let gapped = line.function(|e| (e.abs() >= cfg.gap) as u8 as f64) * vec;
    let vacuum = line.form_vector(|e| FormKind::PositiveProjection.eval(e), &gapped);
    let mut thermal = Table::new(&["beta", "thermal", "vacuum", "difference"]);
    let mut last = f64::NAN;
    for &beta in &cfg.beta_ladder {
        let c = line.form_vector(|e| FormKind::Thermal(beta).eval(e), &gapped);
        last = (c - vacuum).abs();
        thermal.push(vec![beta, c, vacuum, last]);
    }
    let eig_ok = line.eigenvalues().iter().all(|&e| (-1e-10..=1.0 + 1e-10).contains(&FormKind::Thermal(cfg.beta_ladder[0]).eval(e)));
    report.add_table("thermal", thermal);
    report.check(Assertion::at_most("zero_temperature_limit", last, cfg.zero_temp_tol, "thermal vs vacuum at the largest beta"));
    report.check(Assertion::holds("covariance_spectrum", eig_ok, "thermal covariance eigenvalues in [0, 1]"));
    main.push(vec![0.0, last, cfg.zero_temp_tol]);

    // (b) exp(i T b_0) exp(-i T b_inf) on a right-moving massive packet.
    let (wave, cov_line, cov_half, trunc) = right_wave(cfg, &b, &v)?;
    let f_norm = wave.1;
    let mut wt = Table::new(&["T", "norm", "increment", "scheme_error"]);
    for r in &wave.0 {
        wt.push(vec![r.t, r.norm, r.increment, r.scheme_error.unwrap_or(f64::NAN)]);
    }
    report.add_table("right_wave", wt);
    report.set("right_truncation", trunc);
    report.set("right_covariance_line", cov_line);
    report.set("right_covariance_half_line", cov_half);
    let cov_err = (cov_line - cov_half).abs() / (f_norm * f_norm);
    report.check(Assertion::at_most("right_wave_covariance", cov_err, cfg.covariance_tol, "line vs half-line vacuum covariance, relative to |f|^2"));
    // The packet never reaches the wall here, so the rungs agree up to discretisation.
    let within = wave.0.iter().skip(1).all(|r| r.increment <= r.scheme_error.unwrap_or(0.0));
    report.check(Assertion::holds("right_wave_settled", within, "rung increments within the combined scheme error"));
    main.push(vec![1.0, cov_err, cfg.covariance_tol]);

    // (c) E_t: norm of each vector outside h_t = L2([z(t), inf)).
    let mut loss = Table::new(&["t", "loss"]);
    let mut losses = Vec::new();
    for &t in &cfg.loss_ladder {
        let z = b.z(t);
        let mut l = 0.0;
        for &c in &cfg.loss_centers {
            let gc = gaussian(c, 1.0, 1.0, 6.0);
            let lo = c - 6.0;
            if z > lo {
                l += composite_gauss(lo, z.min(c + 6.0), 64, 8).iter().map(|(x, w)| w * gc(*x).norm_sqr()).sum::<f64>();
            }
        }
        loss.push(vec![t, l]);
        losses.push(l);
    }
    let monotone = losses.windows(2).all(|w| w[1] <= w[0]);
    report.add_series("conditional_loss", cfg.loss_ladder.iter().cloned().zip(losses.iter().cloned()).collect());
    report.add_table("conditional_loss", loss);
    report.check(Assertion::holds("conditional_loss_monotone", monotone, "nonincreasing in t"));
    report.check(Assertion::at_most("conditional_loss_final", *losses.last().unwrap(), 0.0, "vanishes once the support clears z(t)"));
    main.push(vec![2.0, *losses.last().unwrap(), 0.0]);

    // (d) window: boundary vs line evolution for s in [t/2 + C, t/2 + 2C].
    let (rows, worst) = window(cfg, &b, &v)?;
    report.add_table("window", rows);
    report.check(Assertion::at_most("window_residual", worst.0, worst.1, "residual vs max(2 x scheme error, 1e-14)"));
    main.push(vec![3.0, worst.0, worst.1]);

    // (e) line wave operator: range purity and an exact comparison.
    let (lw, purity, exact_err, lnorm) = left_wave(cfg, &v)?;
    let mut lt = Table::new(&["T", "norm", "increment", "scheme_error"]);
    for r in &lw {
        lt.push(vec![r.t, r.norm, r.increment, r.scheme_error.unwrap_or(f64::NAN)]);
    }
    report.add_table("left_wave", lt);
    report.set("left_wave_exact_error", exact_err);
    report.check(Assertion::at_most("left_wave_purity", purity, cfg.purity_tol, "component-2 fraction of the range"));
    report.check(Assertion::holds("left_wave_settles", settles_monotonically(&lw, lnorm), "rung increments"));
    main.push(vec![4.0, purity, cfg.purity_tol]);

    for r in main {
        report.tables[0].1.push(r);
    }
    report.set("checks", vec!["zero_temperature", "right_wave_covariance", "conditional_loss", "window", "left_wave_purity"]);
    Ok(report)
}

type WaveOut = ((Vec<Rung>, f64), f64, f64, f64);

fn right_wave(cfg: &Hawking2Config, b: &StarBoundary, v: &DiracPotential) -> Result<WaveOut, LabError> {
    let h = cfg.right_h;
    let (c, s) = (cfg.right_center, cfg.right_sigma);
    let g = gaussian(c, s, cfg.right_carrier, 10.0);
    let wide = SpinorField::on_interval(c - 10.0 * s, c + 10.0 * s, h, 0.0, 0.0, |x| [g(x), C64::new(0.0, 0.0)]);
    let cut = constant_mass_spectral_cut(&wide, cfg.potential.m, |e| e > 0.0);
    // Restrict to x > 0 (the half-line) and to the central window.
    let mut f = cut.clone();
    for (j, val) in f.values.iter_mut().enumerate() {
        let x = cut.x(j);
        if x <= h || (x - c).abs() > 5.0 * s {
            *val = [C64::new(0.0, 0.0); 2];
        }
    }
    let trunc = (cut.norm_sqr() - f.norm_sqr()).max(0.0);
    let f_norm = f.norm();
    let t_max = *cfg.right_ladder.last().unwrap();
    let ext = (t_max / h).ceil() as usize + 4;
    let fw = f.regrid(f.x_min, f.len() + ext)?;
    let prop = BoundaryPropagator::new(b, v);
    let mut rungs: Vec<Rung> = Vec::new();
    let mut prev: Option<SpinorField> = None;
    let mut last = fw.clone();
    for &t in &cfg.right_ladder {
        let mut data = fw.clone();
        data.time_tag = t;
        let out = propagate_line_numeric(&data, v, 0.0, t)?;
        let mut moved = out.field.clone();
        let (x0, dx) = (moved.x_min, moved.h);
        for (j, val) in moved.values.iter_mut().enumerate() {
            if x0 + j as f64 * dx <= 0.0 {
                *val = [C64::new(0.0, 0.0); 2];
            }
        }
        moved.time_tag = -t;
        let back = prop.propagate(&moved, 0.0)?;
        let inc = match &prev {
            Some(p) => back.field.difference_norm(p)?,
            None => f64::NAN,
        };
        let err = match (out.scheme_error, back.scheme_error) {
            (Some(a), Some(b)) => Some(a + b),
            _ => None,
        };
        rungs.push(Rung { t, norm: back.field.norm(), increment: inc, scheme_error: err });
        prev = Some(back.field.clone());
        last = back.field;
    }
    let line = DiracOperatorMatrix::new(OperatorDomain::Line { x_half: cfg.right_extent }, v, 2 * cfg.right_cells)?;
    let half = DiracOperatorMatrix::new(OperatorDomain::HalfLine { x_max: cfg.right_extent }, v, cfg.right_cells)?;
    let cov_line = quadratic_form(FormKind::PositiveProjection, FormOperator::Discrete(&line), &f)?.value;
    let cov_half = quadratic_form(FormKind::PositiveProjection, FormOperator::Discrete(&half), &last)?.value;
    Ok(((rungs, f_norm), cov_line, cov_half, trunc))
}

fn window(cfg: &Hawking2Config, b: &StarBoundary, v: &DiracPotential) -> Result<(Table, (f64, f64)), LabError> {
    let h = cfg.window_h;
    let t = cfg.window_t;
    let g = gaussian(0.0, 0.5, 1.0, 8.0);
    let f = SpinorField::on_interval(-4.0, 4.0, h, 0.0, t, |x| [g(x), g(x) * C64::new(0.0, 0.5)]);
    let s0 = t / 2.0 + cfg.window_c;
    let s1 = t / 2.0 + 2.0 * cfg.window_c;
    let steps = ((s1 - s0) / 1.0).round() as usize;
    let ext = ((t - s0) / h).ceil() as usize + 4;
    let wide = f.regrid(f.x_min - ext as f64 * h, f.len() + 2 * ext)?;
    let prop = BoundaryPropagator::new(b, v);
    let mut table = Table::new(&["s", "residual", "scheme_error_boundary", "scheme_error_line", "bound"]);
    let mut worst = (0.0, f64::INFINITY);
    let mut worst_margin = f64::NEG_INFINITY;
    for k in 0..=steps {
        let s = s0 + k as f64 * (s1 - s0) / steps.max(1) as f64;
        let a = prop.propagate(&f, s)?;
        let l = propagate_line_numeric(&wide, v, s, t)?;
        let res = a.field.difference_norm(&l.field)?;
        let (ea, el) = (a.scheme_error.unwrap_or(0.0), l.scheme_error.unwrap_or(0.0));
        let bound = (2.0 * ea.max(el)).max(1e-14);
        table.push(vec![s, res, ea, el, bound]);
        if res - bound > worst_margin {
            worst_margin = res - bound;
            worst = (res, bound);
        }
    }
    Ok((table, worst))
}

/// Data `f = exp(i T0 b^V) g` for a massless left-moving `g` far left; then
/// `w_l f = exp(i T0 b^0) g` exactly, which is the oracle.
fn left_wave(cfg: &Hawking2Config, v: &DiracPotential) -> Result<(Vec<Rung>, f64, f64, f64), LabError> {
    let h = cfg.left_h;
    let t0 = cfg.left_prepare;
    let x0 = -t0 + cfg.potential.center - 4.0;
    let g = gaussian(x0, 1.0, 3.0, 8.0);
    let pad = t0 + 8.0;
    let gf = SpinorField::on_interval(x0 - pad, x0 + pad, h, 0.0, 0.0, |x| [g(x), C64::new(0.0, 0.0)]);
    let mut f = propagate_line_numeric(&gf, v, t0, 0.0)?.field;
    f.time_tag = 0.0;
    let w = wave_operator_left_line(&f, v, &cfg.left_ladder, 1e-9)?;
    let exact = propagate_free_line(&gf, t0, 0.0).field;
    let purity = w.field.component_norm_sqr(1) / w.field.norm_sqr();
    let err = w.field.difference_norm(&exact)?;
    Ok((w.rungs, purity, err, f.norm()))
}
