//! Randomised checks of the CAR machinery against direct Fock-space computations.

use hawking_core::car::{
    exponential_law_merge, exponential_law_split, graded_state_tensor, AlgebraElement, FockRep, QuasiFreeState,
    SubspaceSplit,
};
use hawking_core::numerics::{gram_schmidt, HermitianEigen};
use hawking_core::C64;
use nalgebra::{DMatrix, DVector};
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use super::{ensure, random_hermitian, random_vector, seeded, Rng};
use crate::report::{Assertion, Report, Table};
use crate::LabError;

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct CarSuiteConfig {
    pub max_modes: usize,
    pub gibbs_cases: usize,
    pub gibbs_modes: usize,
    pub positivity_cases: usize,
    pub round_trips: usize,
    pub car_tol: f64,
    pub gibbs_tol: f64,
    pub positivity_tol: f64,
}

impl Default for CarSuiteConfig {
    fn default() -> Self {
        CarSuiteConfig {
            max_modes: 6,
            gibbs_cases: 50,
            gibbs_modes: 4,
            positivity_cases: 100,
            round_trips: 20,
            car_tol: 1e-12,
            gibbs_tol: 1e-10,
            positivity_tol: 1e-12,
        }
    }
}

impl CarSuiteConfig {
    fn validate(&self) -> Result<(), LabError> {
        ensure((1..=8).contains(&self.max_modes), "max_modes must lie in 1..=8")?;
        ensure((2..=6).contains(&self.gibbs_modes), "gibbs_modes must lie in 2..=6")?;
        ensure(self.gibbs_cases > 0 && self.positivity_cases > 0 && self.round_trips > 0, "case counts must be positive")
    }
}

fn orthonormal(rng: &mut Rng, n: usize) -> Vec<DVector<C64>> {
    loop {
        let raw: Vec<DVector<C64>> = (0..n).map(|_| random_vector(rng, n, 1.0)).collect();
        let b = gram_schmidt(&raw, 1e-6);
        if b.len() == n {
            return b;
        }
    }
}

/// Random element of degree at most 4 with mixed parity.
fn random_element(rng: &mut Rng, n: usize, even: bool) -> AlgebraElement {
    let v = |rng: &mut Rng| random_vector(rng, n, 1.0);
    let c = |rng: &mut Rng| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
    let mut a = AlgebraElement::scalar(c(rng));
    a = a.add(&AlgebraElement::create(v(rng)).product(&AlgebraElement::annihilate(v(rng))).scale(c(rng)));
    a = a.add(
        &AlgebraElement::create(v(rng))
            .product(&AlgebraElement::create(v(rng)))
            .product(&AlgebraElement::annihilate(v(rng)))
            .product(&AlgebraElement::annihilate(v(rng)))
            .scale(c(rng)),
    );
    if !even {
        a = a.add(&AlgebraElement::annihilate(v(rng)).scale(c(rng)));
        a = a.add(&AlgebraElement::create(v(rng)).product(&AlgebraElement::annihilate(v(rng))).product(&AlgebraElement::create(v(rng))));
    }
    a
}

fn second_quantized(rep: &FockRep, h: &DMatrix<C64>) -> DMatrix<C64> {
    let dim = rep.dim();
    let mut out = DMatrix::zeros(dim, dim);
    for i in 0..rep.n_modes {
        for j in 0..rep.n_modes {
            out += rep.psi_matrices[i].adjoint() * &rep.psi_matrices[j] * h[(i, j)];
        }
    }
    out
}

fn standard_basis(n: usize) -> Vec<DVector<C64>> {
    (0..n).map(|k| DVector::from_fn(n, |i, _| C64::new((i == k) as u8 as f64, 0.0))).collect()
}

pub fn run(cfg: &CarSuiteConfig, seed: u64) -> Result<Report, LabError> {
    cfg.validate()?;
    let mut rng = seeded(seed, 7);
    let mut table = Table::new(&["check", "cases", "worst"]);
    let mut report_checks = Vec::new();
    let mut record = |table: &mut Table, id: &str, idx: f64, cases: usize, worst: f64, tol: f64, note: &str| {
        table.push(vec![idx, cases as f64, worst]);
        report_checks.push(Assertion::at_most(id, worst, tol, note));
    };

    // CAR relations in random orthonormal bases and occupations, matrix and symbolic.
    let mut car = 0.0f64;
    for n in 1..=cfg.max_modes {
        let basis = orthonormal(&mut rng, n);
        let occupied: Vec<bool> = (0..n).map(|_| rng.random_bool(0.5)).collect();
        for rep in [FockRep::new(basis.clone())?, FockRep::with_occupation(basis, occupied)?] {
            car = car.max(rep.car_residual());
            let (f, g) = (random_vector(&mut rng, n, 1.0), random_vector(&mut rng, n, 1.0));
            let anti = AlgebraElement::annihilate(f.clone())
                .product(&AlgebraElement::create(g.clone()))
                .add(&AlgebraElement::create(g.clone()).product(&AlgebraElement::annihilate(f.clone())));
            let target = DMatrix::<C64>::identity(rep.dim(), rep.dim()) * f.dotc(&g);
            car = car.max((rep.represent(&anti)?.matrix - target).camax());
            let pure = AlgebraElement::annihilate(f.clone())
                .product(&AlgebraElement::annihilate(g.clone()))
                .add(&AlgebraElement::annihilate(g).product(&AlgebraElement::annihilate(f)));
            car = car.max(rep.represent(&pure)?.matrix.camax());
        }
    }
    record(&mut table, "car_relations", 0.0, 2 * cfg.max_modes, car, cfg.car_tol, "anticommutators in every representation");

    // Wick expectations of Gibbs states against the Fock-space trace.
    let n = cfg.gibbs_modes;
    let rep = FockRep::new(standard_basis(n))?;
    let mut gibbs = 0.0f64;
    for _ in 0..cfg.gibbs_cases {
        let h = random_hermitian(&mut rng, n, 1.0);
        let beta = rng.random_range(0.2..3.0);
        let state = QuasiFreeState::gibbs(&h, beta)?;
        let rho = HermitianEigen::new(&second_quantized(&rep, &h)).apply_fn(|e| (-beta * e).exp());
        let z = rho.trace();
        let a = random_element(&mut rng, n, false);
        let direct = (&rho * rep.represent(&a)?.matrix).trace() / z;
        gibbs = gibbs.max((state.expect(&a) - direct).norm());
    }
    record(&mut table, "wick_vs_gibbs", 1.0, cfg.gibbs_cases, gibbs, cfg.gibbs_tol, "Wick determinant vs Tr(rho A)");

    // Graded tensor product of even quasi-free states: positive, and equal to the
    // quasi-free state with block-diagonal covariance.
    let mut negativity = 0.0f64;
    let mut block = 0.0f64;
    for _ in 0..cfg.positivity_cases {
        let k = rng.random_range(1..n);
        let basis = orthonormal(&mut rng, n);
        let split = SubspaceSplit::new(basis[..k].to_vec(), basis[k..].to_vec())?;
        let w1 = covariance_on(&mut rng, &basis[..k], n)?;
        let w2 = covariance_on(&mut rng, &basis[k..], n)?;
        let joint = QuasiFreeState::new(&w1.covariance + &w2.covariance)?;
        let a = random_element(&mut rng, n, false);
        let aa = a.adjoint().product(&a);
        let o1 = |x: &AlgebraElement| w1.expect(x);
        let o2 = |x: &AlgebraElement| w2.expect(x);
        let value = graded_state_tensor(&o1, &o2, &split, &aa)?;
        negativity = negativity.max(-value.re).max(value.im.abs());
        block = block.max((value - joint.expect(&aa)).norm() / (1.0 + value.norm()));
    }
    record(&mut table, "graded_positivity", 2.0, cfg.positivity_cases, negativity, cfg.positivity_tol, "-omega(A* A) and |Im|");
    record(&mut table, "graded_block_covariance", 3.0, cfg.positivity_cases, block, 1e-10, "graded tensor vs block quasi-free");

    // Exponential law: split/merge round trip and multiplicativity.
    let mut trip = 0.0f64;
    let mut hom = 0.0f64;
    for _ in 0..cfg.round_trips {
        let basis = orthonormal(&mut rng, n);
        let k = rng.random_range(1..n);
        let split = SubspaceSplit::new(basis[..k].to_vec(), basis[k..].to_vec())?;
        let a = random_element(&mut rng, n, false);
        let b = random_element(&mut rng, n, false);
        let pa = rep.represent(&a)?.matrix;
        trip = trip.max((rep.represent(&exponential_law_merge(&exponential_law_split(&a, &split)))?.matrix - &pa).camax());
        let prod = exponential_law_split(&a, &split).product(&exponential_law_split(&b, &split));
        hom = hom.max((rep.represent(&exponential_law_merge(&prod))?.matrix - pa * rep.represent(&b)?.matrix).camax());
    }
    record(&mut table, "exponential_law_round_trip", 4.0, cfg.round_trips, trip, cfg.car_tol, "merge(split(A)) - A");
    record(&mut table, "exponential_law_homomorphism", 5.0, cfg.round_trips, hom, 1e-11, "split(A) split(B) vs A B");

    // Charge rotation: exp(i theta Q) psi(f) exp(-i theta Q) = exp(-i theta) psi(f).
    let mut rot = 0.0f64;
    for _ in 0..cfg.round_trips {
        let theta = rng.random_range(-3.0..3.0);
        let u = rep.charge_rotation(theta);
        let (p, _) = rep.psi(&random_vector(&mut rng, n, 1.0));
        rot = rot.max((&u * &p * u.adjoint() - p * C64::from_polar(1.0, -theta)).camax());
    }
    record(&mut table, "charge_rotation", 6.0, cfg.round_trips, rot, cfg.car_tol, "gauge covariance of psi");

    // Covariance transport: (omega o tau_u)(A) = omega(tau_u A).
    let mut transport = 0.0f64;
    for _ in 0..cfg.round_trips {
        let state = QuasiFreeState::gibbs(&random_hermitian(&mut rng, n, 1.0), 1.0)?;
        let u = HermitianEigen::new(&random_hermitian(&mut rng, n, 1.0)).exp_i(1.0);
        let a = random_element(&mut rng, n, true);
        let moved = a.map_vectors(|f| &u * f, true)?;
        transport = transport.max((state.transported(&u).expect(&a) - state.expect(&moved)).norm());
    }
    record(&mut table, "covariance_transport", 7.0, cfg.round_trips, transport, cfg.gibbs_tol, "u* c u vs the mapped element");

    let mut report = Report::new("car-suite", table);
    report.set(
        "checks",
        vec![
            "car_relations",
            "wick_vs_gibbs",
            "graded_positivity",
            "graded_block_covariance",
            "exponential_law_round_trip",
            "exponential_law_homomorphism",
            "charge_rotation",
            "covariance_transport",
        ],
    );
    for a in report_checks {
        report.check(a);
    }
    Ok(report)
}

/// Random gauge-invariant quasi-free state supported on `span(basis)`.
fn covariance_on(rng: &mut Rng, basis: &[DVector<C64>], n: usize) -> Result<QuasiFreeState, LabError> {
    let k = basis.len();
    let h = random_hermitian(rng, k, 1.0);
    let small = HermitianEigen::new(&h).apply_fn(|e| hawking_core::spectral::fermi(1.0, -e));
    let v = DMatrix::from_fn(n, k, |i, j| basis[j][i]);
    Ok(QuasiFreeState::new(&v * small * v.adjoint())?)
}
