//! Time-ordered exponentials on a `2^n`-dimensional Fock space and the interacting
//! dynamics `pi(tau^int(s, t) A) = R pi(tau^0(s, t) A) R*` they induce.

use hawking_core::car::{AlgebraElement, FockRep};
use hawking_core::interacting::{
    dyson_propagator, evenness_check, interacting_dynamics_apply, interaction_propagator, DysonMethod, Interaction,
    MatrixDynamics,
};
use hawking_core::numerics::{operator_norm, unitarity_residual, HermitianEigen};
use hawking_core::C64;
use nalgebra::{DMatrix, DVector, Matrix2};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{ensure, random_hermitian, random_vector, seeded};
use crate::report::{Assertion, Report, Table};
use crate::LabError;

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct DysonConfig {
    pub modes: usize,
    /// Modes `0..coupled` carry the interaction; the rest only the free dynamics.
    pub coupled: usize,
    pub trials: usize,
    pub s: f64,
    pub t: f64,
    pub r: f64,
    /// Operator norm of `pi(I)`.
    pub generator_norm: f64,
    pub rk4_step: f64,
    pub series_order: usize,
    pub low_order: usize,
    pub series_nodes: usize,
    pub identity_tol: f64,
    pub series_tol: f64,
}

impl Default for DysonConfig {
    fn default() -> Self {
        DysonConfig {
            modes: 5,
            coupled: 3,
            trials: 3,
            s: 0.0,
            t: 1.0,
            r: 0.4,
            generator_norm: 1.0,
            rk4_step: 2e-3,
            series_order: 12,
            low_order: 8,
            series_nodes: 24,
            identity_tol: 1e-9,
            series_tol: 1e-8,
        }
    }
}

impl DysonConfig {
    fn validate(&self) -> Result<(), LabError> {
        ensure((2..=8).contains(&self.modes), "modes must lie in 2..=8")?;
        ensure(self.coupled >= 1 && self.coupled < self.modes, "need 1 <= coupled < modes")?;
        ensure(self.trials >= 1, "trials must be positive")?;
        ensure(self.s < self.r && self.r < self.t, "need s < r < t")?;
        ensure(self.generator_norm > 0.0 && self.rk4_step > 0.0, "generator_norm and rk4_step must be positive")?;
        ensure(self.low_order < self.series_order && self.series_nodes >= 4, "bad series orders or nodes")
    }
}

struct Trial {
    b: DMatrix<C64>,
    element: AlgebraElement,
}

/// `dGamma(b) = sum_ij b_ij psi*(e_i) psi(e_j)` in the representation.
fn second_quantized(rep: &FockRep, b: &DMatrix<C64>) -> DMatrix<C64> {
    let dim = rep.dim();
    let mut out = DMatrix::zeros(dim, dim);
    for i in 0..rep.n_modes {
        for j in 0..rep.n_modes {
            out += rep.psi_matrices[i].adjoint() * &rep.psi_matrices[j] * b[(i, j)];
        }
    }
    out
}

pub fn run(cfg: &DysonConfig, seed: u64) -> Result<Report, LabError> {
    cfg.validate()?;
    let n = cfg.modes;
    let basis: Vec<DVector<C64>> = (0..n).map(|k| DVector::from_fn(n, |i, _| C64::new((i == k) as u8 as f64, 0.0))).collect();
    let rep = FockRep::new(basis.clone())?;
    let mut rng = seeded(seed, 3);
    let mut table = Table::new(&[
        "trial",
        "unitarity",
        "cocycle",
        "chain",
        "evenness",
        "locality",
        "series_vs_rk4",
        "low_order_error",
        "low_order_bound",
        "morphism",
    ]);
    let mut trials = Vec::new();
    for trial in 0..cfg.trials {
        // Block-diagonal b: the uncoupled modes never talk to the coupled ones.
        let mut b = DMatrix::<C64>::zeros(n, n);
        let top = random_hermitian(&mut rng, cfg.coupled, 1.0);
        let bottom = random_hermitian(&mut rng, n - cfg.coupled, 1.0);
        b.view_mut((0, 0), (cfg.coupled, cfg.coupled)).copy_from(&top);
        b.view_mut((cfg.coupled, cfg.coupled), (n - cfg.coupled, n - cfg.coupled)).copy_from(&bottom);
        let pad = |v: DVector<C64>| DVector::from_fn(n, |i, _| if i < cfg.coupled { v[i] } else { C64::new(0.0, 0.0) });
        let g = [pad(random_vector(&mut rng, cfg.coupled, 1.0)), pad(random_vector(&mut rng, cfg.coupled, 1.0))];
        let m = Matrix2::new(C64::new(1.0, 0.0), C64::new(0.3, 0.0), C64::new(0.3, 0.0), C64::new(-0.5, 0.0));
        let inter = Interaction::from_vectors(g, m, 2)?;
        let scale = cfg.generator_norm / operator_norm(&rep.represent(&inter.element)?.matrix);
        trials.push((Trial { b, element: inter.element.scale(C64::new(scale, 0.0)) }, seeded(seed, 100 + trial as u64)));
    }
    let rows: Vec<Vec<f64>> = trials
        .into_par_iter()
        .map(|(tr, r)| run_trial(cfg, &rep, &tr, r))
        .collect::<Result<_, LabError>>()?;
    let mut worst = [0.0f64; 8];
    let mut low_within_bound = true;
    for (trial, row) in rows.into_iter().enumerate() {
        low_within_bound &= row[6] <= row[7];
        for (w, v) in worst.iter_mut().zip([row[0], row[1], row[2], row[3], row[4], row[5], row[6], row[8]]) {
            *w = w.max(v);
        }
        let mut r = vec![trial as f64];
        r.extend(row);
        table.push(r);
    }

    let mut report = Report::new("dyson-check", table);
    report.set("fock_dimension", rep.dim());
    let tol = cfg.identity_tol;
    report.check(Assertion::at_most("unitarity", worst[0], tol, "|R* R - 1|"));
    report.check(Assertion::at_most("cocycle", worst[1], tol, "|R(s, t) - R(s, r) R(r, t)|"));
    report.check(Assertion::at_most("chain", worst[2], tol, "interaction picture vs the full time-ordered exponential"));
    report.check(Assertion::at_most("evenness", worst[3], tol, "|[P, R]| for even interactions"));
    report.check(Assertion::at_most("locality", worst[4], tol, "uncoupled observable: interacting vs free"));
    report.check(Assertion::at_most(
        "series_vs_rk4",
        worst[5],
        cfg.series_tol,
        format!("order {} series against RK4", cfg.series_order),
    ));
    report.check(Assertion::holds(
        "low_order_within_bound",
        low_within_bound,
        format!("order {} error below its tail bound", cfg.low_order),
    ));
    report.check(Assertion::at_most("star_morphism", worst[7], tol, "tau(A B) - tau(A) tau(B) and tau(A*) - tau(A)*"));
    Ok(report)
}

/// `[unitarity, cocycle, chain, evenness, locality, series, low_err, low_bound, morphism]`.
fn run_trial(cfg: &DysonConfig, rep: &FockRep, tr: &Trial, mut rng: super::Rng) -> Result<Vec<f64>, LabError> {
    let n = rep.n_modes;
    let free = MatrixDynamics::new(&tr.b);
    // Time-dependent coupling keeps the ordering nontrivial.
    let schedule = |sigma: f64| Some(tr.element.clone().scale(C64::new(1.0 + 0.3 * (3.0 * sigma).sin(), 0.0)));
    let step = cfg.rk4_step;
    let (r_st, _) = interaction_propagator(&free, &schedule, rep, cfg.s, cfg.s, cfg.t, step, &[])?;
    let (r_sr, _) = interaction_propagator(&free, &schedule, rep, cfg.s, cfg.s, cfg.r, step, &[])?;
    let (r_rt, _) = interaction_propagator(&free, &schedule, rep, cfg.s, cfg.r, cfg.t, step, &[])?;
    let unitarity = unitarity_residual(&r_st);
    let cocycle = (&r_st - &r_sr * &r_rt).camax();

    // Full generator dGamma(b) + pi(I(sigma)); W(s, t) = R_s(s, t) Gamma(u(s, t)).
    let d_gamma = second_quantized(rep, &tr.b);
    let inter_mat = rep.represent(&tr.element)?.matrix;
    let full = |sigma: f64| &d_gamma + &inter_mat * C64::new(1.0 + 0.3 * (3.0 * sigma).sin(), 0.0);
    let w = dyson_propagator(&full, cfg.s, cfg.t, DysonMethod::Rk4 { step }, &[])?.u;
    let gamma = HermitianEigen::new(&d_gamma).exp_i(cfg.s - cfg.t);
    let chain = (&w - &r_st * gamma).camax();
    let evenness = evenness_check(&r_st, rep);

    let e = |k: usize| DVector::from_fn(n, |i, _| C64::new((i == k) as u8 as f64, 0.0));
    let far = e(n - 1);
    let a_far = AlgebraElement::create(far.clone()).add(&AlgebraElement::create(far.clone()).product(&AlgebraElement::annihilate(far)));
    let int = interacting_dynamics_apply(&free, &schedule, rep, &a_far, cfg.s, cfg.t, step, &[])?;
    let free_only = rep.represent(&a_far.map_vectors(|f| free.matrix(cfg.s, cfg.t) * f, true)?)?.matrix;
    let locality = (&int.matrix - free_only).camax();

    // Series against RK4 for the interaction-picture generator.
    let gen = |sigma: f64| {
        let g = HermitianEigen::new(&d_gamma).exp_i(cfg.s - sigma);
        &g * &inter_mat * g.adjoint() * C64::new(1.0 + 0.3 * (3.0 * sigma).sin(), 0.0)
    };
    let series = |order: usize, tol: f64| {
        dyson_propagator(&gen, cfg.s, cfg.t, DysonMethod::Series { order, nodes: cfg.series_nodes, tol }, &[])
    };
    let high = series(cfg.series_order, cfg.series_tol)?;
    let series_err = (&high.u - &r_st).camax();
    let low = series(cfg.low_order, f64::INFINITY)?;
    let low_err = operator_norm(&(&low.u - &r_st));
    let low_bound = low.tail_bound.unwrap_or(f64::NAN);

    // *-morphism on random mixed-parity elements.
    let v = |rng: &mut super::Rng| random_vector(rng, n, 1.0);
    let (f, g, h, k) = (v(&mut rng), v(&mut rng), v(&mut rng), v(&mut rng));
    let a = AlgebraElement::create(f.clone())
        .product(&AlgebraElement::annihilate(g.clone()))
        .product(&AlgebraElement::annihilate(h))
        .add(&AlgebraElement::create(k));
    let bb = AlgebraElement::create(g).product(&AlgebraElement::annihilate(f)).add(&AlgebraElement::scalar(C64::new(0.5, 0.2)));
    let tau = |x: &AlgebraElement| -> Result<DMatrix<C64>, LabError> {
        let moved = x.map_vectors(|f| free.matrix(cfg.s, cfg.t) * f, true)?;
        Ok(&r_st * rep.represent(&moved)?.matrix * r_st.adjoint())
    };
    let (ta, tb, tab, tadj) = (tau(&a)?, tau(&bb)?, tau(&a.product(&bb))?, tau(&a.adjoint())?);
    let morphism = (&tab - &ta * &tb).camax().max((&tadj - ta.adjoint()).camax());
    Ok(vec![unitarity, cocycle, chain, evenness, locality, series_err, low_err, low_bound, morphism])
}
