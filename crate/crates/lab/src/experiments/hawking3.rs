//! Hawking III: conjugated propagators on a unit window `[s, t]` translated to `[T + s, T + t]`
//! converge to the limit `(f1(. + 2(t - s)), f2)`; the effective interacting dynamics built
//! on that limit is evaluated in the product of the thermal and vacuum states.

use std::cell::Cell;

use hawking_core::car::{
    graded_state_tensor, quasifree_density_matrix, wick_expectation, AlgebraElement, FockRep, SubspaceSplit,
};
use hawking_core::classical::{translate_field, BoundaryPropagator, ReflectedPacket, SpinorField};
use hawking_core::numerics::{fit_decay_rate, gram_schmidt, HermitianEigen};
use hawking_core::spectral::{
    halfline_free_projection, halfline_positive_part, quadratic_form, quadratic_pairing, wave_operator_right,
    DiracOperatorMatrix, FormKind, FormOperator, OperatorDomain,
};
use hawking_core::interacting::{dyson_propagator, DysonMethod};
use hawking_core::C64;
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::hawking1::LeftPacket;
use super::{boundary, bump, check_ladder, ensure, gaussian, par_rungs, strictly_decreasing, PotentialConfig};
use crate::report::{Assertion, Report, Table};
use crate::LabError;

const ZERO: C64 = C64::new(0.0, 0.0);
const ONE: C64 = C64::new(1.0, 0.0);

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct Hawking3Config {
    pub kappa: f64,
    pub potential: PotentialConfig,
    pub s: f64,
    pub t: f64,
    /// Classical part.
    pub h: f64,
    pub big_t_ladder: Vec<f64>,
    /// Component offsets from `x_star` of the two Gaussians.
    pub f1_offset: f64,
    pub f2_offset: f64,
    pub min_rate: f64,
    /// Quantum part: interaction profile bump, matrix `M`, power `n`, coupling.
    pub g_center: f64,
    pub g_radius: f64,
    pub m: [[f64; 2]; 2],
    pub n: usize,
    pub coupling: f64,
    pub quantum_h: f64,
    pub x_lo: f64,
    pub x_hi: f64,
    pub mode_budget: usize,
    pub loss_budget: f64,
    pub rk4_step: f64,
    pub reduction_tol: f64,
    /// Right-factor covariance: wave-operator ladder and half-line operator.
    pub wave_ladder: Vec<f64>,
    pub operator_extent: f64,
    pub operator_cells: usize,
    /// Factorization scan.
    pub factor_ladder: Vec<f64>,
    pub factor_tol: f64,
    pub samples: usize,
}

impl Default for Hawking3Config {
    fn default() -> Self {
        Hawking3Config {
            kappa: 1.0,
            potential: PotentialConfig::tanh(1.0, 7.0, 1.0),
            s: -1.0,
            t: 0.0,
            h: 1.0 / 32.0,
            big_t_ladder: vec![3.0, 4.0, 5.0, 6.0, 7.0, 8.0],
            f1_offset: 6.0,
            f2_offset: 3.5,
            min_rate: 1.8,
            g_center: 9.0,
            g_radius: 8.0,
            m: [[1.0, 0.0], [0.0, -0.5]],
            n: 2,
            coupling: 1.0,
            quantum_h: 1.0 / 16.0,
            x_lo: -4.0,
            x_hi: 18.0,
            mode_budget: 7,
            loss_budget: 1e-3,
            rk4_step: 0.02,
            reduction_tol: 1e-9,
            wave_ladder: vec![10.0, 20.0, 30.0, 40.0, 60.0],
            operator_extent: 32.0,
            operator_cells: 512,
            factor_ladder: vec![2.0, 4.0, 6.0, 8.0],
            factor_tol: 1e-3,
            samples: 4000,
        }
    }
}

impl Hawking3Config {
    fn validate(&self) -> Result<(), LabError> {
        check_ladder("big_t_ladder", &self.big_t_ladder)?;
        check_ladder("factor_ladder", &self.factor_ladder)?;
        check_ladder("wave_ladder", &self.wave_ladder)?;
        ensure(self.s < self.t && self.t <= 0.0, "window must satisfy s < t <= 0")?;
        ensure(self.h > 0.0 && self.quantum_h > 0.0, "grid spacings must be positive")?;
        ensure(self.f1_offset - 3.0 > 2.0 * (self.t - self.s), "f1 must stay clear of the boundary inside the window")?;
        ensure(self.f2_offset > 3.0, "f2 must sit right of x_star")?;
        ensure(self.g_center - self.g_radius > 0.0, "interaction profile must vanish for x <= 0")?;
        ensure(self.m[0][1] == self.m[1][0], "m must be symmetric")?;
        ensure(self.n >= 1 && self.coupling.is_finite(), "n >= 1 and finite coupling")?;
        ensure(self.mode_budget >= 4 && self.mode_budget <= 12, "mode_budget must lie in 4..=12")?;
        ensure(self.x_lo < self.g_center - self.g_radius - 2.0 * (self.t - self.s) - 0.5, "x_lo too large for the shifted profile")?;
        ensure(self.x_hi > self.g_center + self.g_radius, "x_hi too small for the profile")?;
        ensure(self.loss_budget > 0.0 && self.rk4_step > 0.0 && self.samples >= 64, "bad budgets")
    }
}

pub fn run(cfg: &Hawking3Config) -> Result<Report, LabError> {
    cfg.validate()?;
    let b = boundary(cfg.kappa)?;
    let v = cfg.potential.build()?;

    // (a) Classical convergence of the conjugated propagator.
    let x_star = b.x_star();
    let (c1, c2) = (x_star + cfg.f1_offset, x_star + cfg.f2_offset);
    let g1 = gaussian(c1, 0.5, 1.0, 6.0);
    let g2 = gaussian(c2, 0.5, -1.0, 6.0);
    let lo = x_star + cfg.f1_offset.min(cfg.f2_offset) - 3.0;
    let hi = x_star + cfg.f1_offset.max(cfg.f2_offset) + 3.0;
    let f = SpinorField::on_interval(lo, hi, cfg.h, 0.0, 0.0, |x| [g1(x), g2(x) * 0.5]);
    let window = cfg.t - cfg.s;
    let shift = 2.0 * window;
    let limit = SpinorField::from_fn(f.x_min - shift - 1.0, cfg.h, f.len() + ((shift + 2.0) / cfg.h) as usize, 0.0, |x| {
        [g1(x + shift), g2(x) * 0.5]
    });
    let prop = BoundaryPropagator::new(&b, &v);
    let rows = par_rungs(&cfg.big_t_ladder, |big_t| {
        let mut start = translate_field(&f, big_t + cfg.t);
        start.time_tag = big_t + cfg.t;
        let moved = prop.propagate(&start, big_t + cfg.s)?;
        let back = translate_field(&moved.field, -(big_t + cfg.s));
        let err = back.difference_norm(&limit)?;
        Ok([big_t, err, moved.scheme_error.unwrap_or(f64::NAN)])
    })?;
    let mut table = Table::new(&["T", "error", "scheme_error"]);
    for r in &rows {
        table.push(r.to_vec());
    }
    let errs: Vec<f64> = rows.iter().map(|r| r[1]).collect();
    let pts: Vec<(f64, f64)> = rows.iter().map(|r| (r[0], r[1])).collect();
    let rate = fit_decay_rate(&pts);
    let mut report = Report::new("hawking3", table);
    report.add_series("classical_error", pts);
    report.set("fitted_rate", rate);
    report.check(Assertion::holds("classical_errors_decreasing", strictly_decreasing(&errs), "along the T ladder"));
    report.check(Assertion::at_least("classical_rate", rate, cfg.min_rate * cfg.kappa, "fitted exponential rate"));

    // (b) Effective interacting state.
    let q = quantum(cfg, &b, &v)?;
    let mut qt = Table::new(&[
        "observable",
        "free_re",
        "free_im",
        "reduced_re",
        "reduced_im",
        "reduction_error",
        "interacting_re",
        "interacting_im",
        "truncation",
    ]);
    for (i, row) in q.rows.iter().enumerate() {
        qt.push(vec![
            i as f64,
            row.0.re,
            row.0.im,
            row.1.re,
            row.1.im,
            (row.0 - row.1).norm(),
            row.2.re,
            row.2.im,
            q.loss,
        ]);
    }
    let worst = q.rows.iter().map(|r| (r.0 - r.1).norm()).fold(0.0, f64::max);
    report.add_table("quantum", qt);
    report.set("observables", vec!["N_l", "N_r", "N_l N_r", "psi*(l) psi(r) + h.c.", "psi*(l) psi*(l') psi(l') psi(l)"]);
    report.set("modes", q.modes);
    report.set("mode_basis_loss", q.basis_loss);
    report.set("right_covariance", q.c_rr);
    report.check(Assertion::at_most("zero_interaction_reduction", worst, cfg.reduction_tol, "I = 0 value vs the free state"));
    report.check(Assertion::at_most("truncation_loss", q.loss, cfg.loss_budget, "largest projection loss during the evolution"));

    // Factorization of split observables.
    let (ft, cross) = factorization(cfg, &b)?;
    report.add_table("factorization", ft);
    report.check(Assertion::at_most("factorization", cross, cfg.factor_tol, "relative cross term at the largest t"));
    Ok(report)
}

struct QuantumOut {
    /// (free Wick value, I = 0 trace value, interacting trace value) per observable.
    rows: Vec<(C64, C64, C64)>,
    loss: f64,
    basis_loss: f64,
    modes: usize,
    c_rr: f64,
}

/// Grid vectors in the layout `[component 1, component 2] * sqrt(h)`.
struct Grid {
    x_lo: f64,
    h: f64,
    len: usize,
}

impl Grid {
    fn sample(&self, f: &dyn Fn(f64) -> f64, comp: usize) -> DVector<C64> {
        let sh = self.h.sqrt();
        DVector::from_fn(2 * self.len, |i, _| {
            if i / self.len == comp { C64::new(f(self.x_lo + (i % self.len) as f64 * self.h) * sh, 0.0) } else { ZERO }
        })
    }

    fn field(&self, v: &DVector<C64>) -> SpinorField {
        let s = 1.0 / self.h.sqrt();
        let n = self.len;
        SpinorField { x_min: self.x_lo, h: self.h, values: (0..n).map(|j| [v[j] * s, v[n + j] * s]).collect(), time_tag: 0.0 }
    }
}

fn catalog(l: &DVector<C64>, l2: &DVector<C64>, r: &DVector<C64>) -> Vec<AlgebraElement> {
    let n = |a: &DVector<C64>| AlgebraElement::create(a.clone()).product(&AlgebraElement::annihilate(a.clone()));
    let hop = AlgebraElement::create(l.clone())
        .product(&AlgebraElement::annihilate(r.clone()))
        .add(&AlgebraElement::create(r.clone()).product(&AlgebraElement::annihilate(l.clone())));
    let quartic = AlgebraElement::create(l.clone())
        .product(&AlgebraElement::create(l2.clone()))
        .product(&AlgebraElement::annihilate(l2.clone()))
        .product(&AlgebraElement::annihilate(l.clone()));
    vec![n(l), n(r), n(l).product(&n(r)), hop, quartic]
}

fn quantum(cfg: &Hawking3Config, b: &hawking_core::geometry::StarBoundary, v: &hawking_core::classical::DiracPotential) -> Result<QuantumOut, LabError> {
    let h = cfg.quantum_h;
    let len = ((cfg.x_hi - cfg.x_lo) / h).round() as usize + 1;
    let grid = Grid { x_lo: cfg.x_lo, h, len };
    let raw = bump(cfg.g_center, cfg.g_radius);
    let scale = 1.0 / grid.sample(&raw, 0).norm();
    let prof = move |x: f64| raw(x) * scale;
    let left = |a: f64| grid.sample(&|x| prof(x + a), 0);
    let right = grid.sample(&prof, 1);
    let beta = 2.0 * std::f64::consts::PI / cfg.kappa;
    let shift = 2.0 * (cfg.t - cfg.s);
    let (a0, a1) = (0.0, 0.5);

    // Modes: the moved catalog vectors exactly, then the dominant directions of the moved
    // interaction family, then the right vector.
    let exact = gram_schmidt(&[left(a0 + shift), left(a1 + shift)], 1e-12);
    let family: Vec<DVector<C64>> = (0..=40).map(|k| left(shift * k as f64 / 40.0)).collect();
    let project = |basis: &[DVector<C64>], f: &DVector<C64>| {
        let mut r = f.clone();
        for e in basis {
            r -= e * e.dotc(f);
        }
        r
    };
    let resid: Vec<DVector<C64>> = family.iter().map(|f| project(&exact, f)).collect();
    let gram = DMatrix::from_fn(resid.len(), resid.len(), |i, j| resid[i].dotc(&resid[j]));
    let eig = HermitianEigen::new(&gram);
    let extra = cfg.mode_budget - 1 - exact.len();
    let mut basis_l = exact.clone();
    for k in (0..eig.values.len()).rev().take(extra) {
        if eig.values[k] <= 1e-24 {
            break;
        }
        let mut vec = DVector::zeros(2 * len);
        for (j, r) in resid.iter().enumerate() {
            vec += r * eig.vectors[(j, k)];
        }
        basis_l.push(vec);
    }
    let basis_l = gram_schmidt(&basis_l, 1e-12);
    let basis_loss = (0..=160).map(|k| project(&basis_l, &left(shift * k as f64 / 160.0)).norm()).fold(0.0, f64::max);
    if basis_loss > cfg.loss_budget {
        return Err(LabError::Resource(format!(
            "mode-basis projection loss {basis_loss:e} exceeds the budget {:e} with {} modes",
            cfg.loss_budget, cfg.mode_budget
        )));
    }
    let mut modes = basis_l.clone();
    modes.push(right.clone());
    let mut rep = FockRep::new(modes.clone())?;
    rep.loss_tolerance = cfg.loss_budget;

    // Covariances: thermal on component 1, vacuum through the wave operator on component 2.
    let thermal = |f: &DVector<C64>, g: &DVector<C64>| -> C64 {
        quadratic_pairing(FormKind::Thermal(beta), FormOperator::FreeLine, &grid.field(f), &grid.field(g)).unwrap_or(C64::new(f64::NAN, 0.0))
    };
    let c_rr = right_covariance(cfg, b, v, &grid.field(&right))?;
    let pair_r = |f: &DVector<C64>, g: &DVector<C64>| right.dotc(g).conj() * right.dotc(f) * c_rr;
    let nl = basis_l.len();
    let mut c = DMatrix::<C64>::zeros(nl + 1, nl + 1);
    for i in 0..nl {
        for j in 0..nl {
            c[(i, j)] = thermal(&basis_l[j], &basis_l[i]);
        }
    }
    c[(nl, nl)] = C64::new(c_rr, 0.0);
    let rho = quasifree_density_matrix(&rep, &c)?;

    // Generator pi(tau^0(s, sigma) I) on the modes.
    let e = HermitianEigen::new(&DMatrix::from_fn(2, 2, |i, j| C64::new(cfg.m[i][j], 0.0)));
    let loss = Cell::new(0.0f64);
    let dim = rep.dim();
    let gen = |sigma: f64| -> DMatrix<C64> {
        let a = 2.0 * (sigma - cfg.s);
        let mut q = DMatrix::<C64>::zeros(dim, dim);
        for i in 0..2 {
            let m = left(a) * e.vectors[(0, i)] + &right * e.vectors[(1, i)];
            let (p, l) = rep.psi(&m);
            loss.set(loss.get().max(l));
            q += p.adjoint() * &p * C64::new(e.values[i], 0.0);
        }
        let mut out = DMatrix::<C64>::identity(dim, dim);
        for _ in 0..cfg.n {
            out *= &q;
        }
        out * C64::new(cfg.coupling, 0.0)
    };
    let r_int = dyson_propagator(&gen, cfg.s, cfg.t, DysonMethod::Rk4 { step: cfg.rk4_step }, &[])?.u;

    let free_cat = catalog(&left(a0), &left(a1), &right);
    let moved_cat = catalog(&left(a0 + shift), &left(a1 + shift), &right);
    let split = SubspaceSplit::new(gram_schmidt(&[left(a0), left(a1)], 1e-12), vec![right.clone()])?;
    let omega1 = |x: &AlgebraElement| wick_expectation(x, thermal);
    let omega2 = |x: &AlgebraElement| wick_expectation(x, pair_r);
    let mut rows = Vec::new();
    for (a, am) in free_cat.iter().zip(&moved_cat) {
        let free = graded_state_tensor(&omega1, &omega2, &split, a)?;
        let rep_a = rep.represent(am)?;
        loss.set(loss.get().max(rep_a.projection_loss));
        let reduced = (&rho * &rep_a.matrix).trace();
        let interacting = (&rho * &r_int * &rep_a.matrix * r_int.adjoint()).trace();
        rows.push((free, reduced, interacting));
    }
    Ok(QuantumOut { rows, loss: loss.get(), basis_loss, modes: rep.n_modes, c_rr })
}

/// `(w_r r | 1_{R+}(b^V_0) w_r r)` for the normalized right vector `r`.
fn right_covariance(
    cfg: &Hawking3Config,
    b: &hawking_core::geometry::StarBoundary,
    v: &hawking_core::classical::DiracPotential,
    r: &SpinorField,
) -> Result<f64, LabError> {
    if v.is_zero() {
        return Ok(halfline_free_projection(r));
    }
    let w = wave_operator_right(r, b, v, &cfg.wave_ladder, 1e-6)?;
    if !w.converged {
        let incs: Vec<String> = w.rungs.iter().map(|r| format!("{}:{:e}", r.t, r.increment)).collect();
        return Err(LabError::Numerical(format!("wave operator for the right covariance did not converge ({})", incs.join(", "))));
    }
    let op = DiracOperatorMatrix::new(OperatorDomain::HalfLine { x_max: cfg.operator_extent }, v, cfg.operator_cells)?;
    Ok(quadratic_form(FormKind::PositiveProjection, FormOperator::Discrete(&op), &w.field)?.value)
}

/// `omega(N_F N_g)` vs `omega(N_F) omega(N_g)` in the vacuum of the free half-line operator,
/// with `F = u^0(0, t) f^t` a reflected left-mover and `g` a right-mover beyond `x_star`.
fn factorization(cfg: &Hawking3Config, b: &hawking_core::geometry::StarBoundary) -> Result<(Table, f64), LabError> {
    let packet = LeftPacket::new(b.x_star(), 0.5, 0.5, 1.0, 8.0);
    let fh = 1.0 / 64.0;
    let g = gaussian(b.x_star() + 5.0, 0.5, 0.5, 8.0);
    let len = ((b.x_star() + 10.0) / fh).ceil() as usize;
    let gf = SpinorField::from_fn(0.5 * fh, fh, len, 0.0, |x| [ZERO, g(x)]);
    let c_gg = halfline_free_projection(&gf);
    let pg = halfline_positive_part(&gf, len, 1 << 16);
    let g_norm = gf.norm();
    let rows = par_rungs(&cfg.factor_ladder, |t| {
        let p = ReflectedPacket::new(b, &*packet.profile, (packet.a, packet.c), t, cfg.samples)?;
        let f_norm = p.norm_sqr().sqrt();
        let c_ff = p.positive_projection();
        let c_fg = p.overlap(&pg).conj();
        let cov = DMatrix::from_row_slice(
            2,
            2,
            &[
                C64::new(c_ff / (f_norm * f_norm), 0.0),
                c_fg / (f_norm * g_norm),
                c_fg.conj() / (f_norm * g_norm),
                C64::new(c_gg / (g_norm * g_norm), 0.0),
            ],
        );
        let pair = |x: &DVector<C64>, y: &DVector<C64>| y.dotc(&(&cov * x));
        let e0 = DVector::from_vec(vec![ONE, ZERO]);
        let e1 = DVector::from_vec(vec![ZERO, ONE]);
        let n = |a: &DVector<C64>| AlgebraElement::create(a.clone()).product(&AlgebraElement::annihilate(a.clone()));
        let value = wick_expectation(&n(&e0).product(&n(&e1)), pair);
        let product = wick_expectation(&n(&e0), pair) * wick_expectation(&n(&e1), pair);
        Ok([t, product.re, value.re, (value - product).norm() / product.norm()])
    })?;
    let mut table = Table::new(&["t", "product", "value", "cross_relative"]);
    for r in &rows {
        table.push(r.to_vec());
    }
    Ok((table, rows.last().unwrap()[3]))
}
