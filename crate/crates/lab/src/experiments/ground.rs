//! Ground states of the stationary Hamiltonian `dGamma(|b|) + lambda pi(I)` on the default
//! four-mode model.

use hawking_core::car::AlgebraElement;
use hawking_core::interacting::{default_ground_state_model, ground_state_analysis, perturbed_vacuum_state, stationary_hamiltonian};
use hawking_core::numerics::HermitianEigen;
use hawking_core::C64;
use serde::{Deserialize, Serialize};

use super::ensure;
use crate::report::{Assertion, Report, Table};
use crate::LabError;

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct GroundConfig {
    pub lambdas: Vec<f64>,
    /// Coupling at which the nondegenerate, charge-free ground state is asserted.
    pub check_lambda: f64,
    pub commutator_lambda: f64,
    pub degeneracy_tol: f64,
    pub charge_tol: f64,
    pub commutator_tol: f64,
    /// Coefficient `c` of the perturbation `P = 1 + c I` used for the perturbed vacuum.
    pub perturbation: f64,
}

impl Default for GroundConfig {
    fn default() -> Self {
        GroundConfig {
            lambdas: vec![0.0, 0.01, 0.02, 0.05, 0.1, 0.2, 0.3, 0.5, 1.0, 2.0],
            check_lambda: 0.05,
            commutator_lambda: 0.3,
            degeneracy_tol: 1e-8,
            charge_tol: 1e-10,
            commutator_tol: 1e-10,
            perturbation: 0.5,
        }
    }
}

impl GroundConfig {
    fn validate(&self) -> Result<(), LabError> {
        ensure(!self.lambdas.is_empty(), "lambdas must not be empty")?;
        ensure(self.lambdas.windows(2).all(|w| w[1] > w[0]), "lambdas must increase")?;
        ensure(self.lambdas.iter().all(|l| *l >= 0.0), "lambdas must be nonnegative")?;
        ensure(self.check_lambda >= 0.0 && self.commutator_lambda.is_finite(), "bad check couplings")?;
        ensure(self.degeneracy_tol > 0.0 && self.charge_tol > 0.0, "tolerances must be positive")
    }
}

pub fn run(cfg: &GroundConfig) -> Result<Report, LabError> {
    cfg.validate()?;
    let (b, inter) = default_ground_state_model();
    let st = stationary_hamiltonian(&b, &inter)?;
    let mut ladder = cfg.lambdas.clone();
    if !ladder.contains(&cfg.check_lambda) {
        ladder.push(cfg.check_lambda);
        ladder.sort_by(f64::total_cmp);
    }
    let analysis = ground_state_analysis(&st, &ladder, cfg.degeneracy_tol, cfg.charge_tol);

    // The Fock vacuum is a trial state: E_0(lambda) <= lambda <Omega, pi(I) Omega>.
    let vac = st.rep.vacuum();
    let vac_int = vac.dotc(&(&st.interaction * &vac)).re;
    let mut table = Table::new(&["lambda", "energy", "gap", "charge", "degenerate", "vacuum_bound"]);
    let mut worst_bound = f64::NEG_INFINITY;
    for r in &analysis.rows {
        let bound = r.lambda * vac_int;
        worst_bound = worst_bound.max(r.energy - bound);
        table.push(vec![r.lambda, r.energy, r.gap, r.charge, if r.degenerate { 1.0 } else { 0.0 }, bound]);
    }
    let at_check = analysis.rows.iter().find(|r| r.lambda == cfg.check_lambda).expect("check_lambda is in the ladder");

    // Perturbed vacuum for P = 1 + c I: normalised, positive on A* A, and bounded below by E_0.
    let p = AlgebraElement::identity().add(&inter.element.scale(C64::new(cfg.perturbation, 0.0)));
    let norm = perturbed_vacuum_state(&p, &st.rep, &AlgebraElement::identity())?;
    let a = AlgebraElement::annihilate(inter.modes[0].clone()).product(&AlgebraElement::annihilate(inter.modes[1].clone()));
    let positivity = perturbed_vacuum_state(&p, &st.rep, &a.adjoint().product(&a))?;
    let h = st.hamiltonian(cfg.check_lambda);
    let pv = st.rep.represent(&p)?.matrix * &vac;
    let trial = pv.dotc(&(&h * &pv)).re / pv.norm_squared();
    let e0 = HermitianEigen::new(&h).values[0];

    let mut report = Report::new("ground-state", table);
    report.set(
        "rows",
        analysis
            .rows
            .iter()
            .map(|r| serde_json::json!({"lambda": r.lambda, "energy": r.energy, "gap": r.gap, "charge": r.charge, "degenerate": r.degenerate}))
            .collect::<Vec<_>>(),
    );
    report.set("threshold", analysis.threshold);
    report.set("one_particle_energies", st.one_particle_energies.clone());
    report.set("perturbed_number_pair", positivity.re);
    report.check(Assertion::holds(
        "nondegenerate_at_check",
        !at_check.degenerate,
        format!("gap {:e} at lambda = {}", at_check.gap, cfg.check_lambda),
    ));
    report.check(Assertion::at_most("charge_at_check", at_check.charge.abs(), cfg.charge_tol, "|<Q>| in the ground state"));
    report.check(Assertion::at_most(
        "commutator",
        st.commutator_residual(cfg.commutator_lambda),
        cfg.commutator_tol,
        "max |[H(lambda), Q]| entry",
    ));
    report.check(Assertion::at_most("vacuum_variational_bound", worst_bound, 1e-12, "E_0 - lambda <Omega, pi(I) Omega>"));
    report.check(Assertion::at_most("perturbed_variational_bound", e0 - trial, 1e-12, "E_0 - <P Omega, H P Omega> / |P Omega|^2"));
    report.check(Assertion::at_most("perturbed_normalisation", (norm - 1.0).norm(), 1e-12, "omega~(1) - 1"));
    report.check(Assertion::at_least("perturbed_positivity", positivity.re, -1e-12, "omega~(A* A)"));
    Ok(report)
}
