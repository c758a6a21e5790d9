//! Experiment drivers. Each module exposes a config section and `run(&Config, seed)`.

pub mod car_suite;
pub mod dyson;
pub mod ground;
pub mod hawking1;
pub mod hawking2;
pub mod hawking3;
pub mod overlap;
pub mod temperature;

use hawking_core::classical::DiracPotential;
use hawking_core::geometry::StarBoundary;
use hawking_core::C64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::report::Report;
use crate::{LabError, RunConfig};

/// Sorted catalog: experiment id and the result it exercises.
pub fn catalog() -> &'static [(&'static str, &'static str)] {
    &[
        ("car-suite", "CAR algebra, Fock representations, quasi-free states and the graded tensor product"),
        ("dyson-check", "time-ordered exponentials of bounded interactions and the induced *-automorphisms"),
        ("ground-state", "stationary Fock Hamiltonian: ground state existence and vanishing charge at small coupling"),
        ("hawking1-left", "thermal limit of the vacuum on left-movers at inverse temperature 2 pi / kappa"),
        ("hawking1-right", "vacuum limit on right-movers through the boundary wave operator"),
        ("hawking2-diagnostics", "asymptotic covariances, conditional expectations and the finite-speed window"),
        ("hawking3", "limiting conjugated propagator and the effective interacting state"),
        ("overlap-scan", "overlap decay of reflected packets with a compact interaction profile"),
        ("temperature-fit", "Fermi-Dirac fit of reflected occupations against the carrier frequency"),
    ]
}

/// Runs one experiment with its section of `cfg`.
pub fn run(experiment: &str, cfg: &RunConfig) -> Result<Report, LabError> {
    match experiment {
        "hawking1-left" => hawking1::run_left(&cfg.hawking1_left),
        "hawking1-right" => hawking1::run_right(&cfg.hawking1_right),
        "temperature-fit" => temperature::run(&cfg.temperature_fit),
        "overlap-scan" => overlap::run(&cfg.overlap_scan),
        "hawking3" => hawking3::run(&cfg.hawking3),
        "hawking2-diagnostics" => hawking2::run(&cfg.hawking2_diagnostics),
        "ground-state" => ground::run(&cfg.ground_state),
        "dyson-check" => dyson::run(&cfg.dyson_check, cfg.seed),
        "car-suite" => car_suite::run(&cfg.car_suite, cfg.seed),
        other => Err(LabError::Config(format!(
            "unknown experiment `{other}`; known: {}",
            catalog().iter().map(|c| c.0).collect::<Vec<_>>().join(", ")
        ))),
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum PotentialKind {
    Zero,
    Constant,
    Tanh,
}

/// `V(x) = m s(x) Gamma` with `s = 1` (constant) or `s = (1 + tanh((x - center) / width)) / 2`.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct PotentialConfig {
    pub kind: PotentialKind,
    pub m: f64,
    pub center: f64,
    pub width: f64,
}

impl Default for PotentialConfig {
    fn default() -> Self {
        PotentialConfig { kind: PotentialKind::Zero, m: 1.0, center: 2.0, width: 1.0 }
    }
}

impl PotentialConfig {
    pub fn tanh(m: f64, center: f64, width: f64) -> Self {
        PotentialConfig { kind: PotentialKind::Tanh, m, center, width }
    }

    pub fn build(&self) -> Result<DiracPotential, LabError> {
        ensure(self.m.is_finite() && self.center.is_finite(), "potential parameters must be finite")?;
        Ok(match self.kind {
            PotentialKind::Zero => DiracPotential::zero(),
            PotentialKind::Constant => DiracPotential::constant_mass(self.m),
            PotentialKind::Tanh => {
                ensure(self.width > 0.0, "potential width must be positive")?;
                DiracPotential::tanh_switch(self.m, self.center, self.width)
            }
        })
    }
}

pub(crate) fn ensure(ok: bool, msg: &str) -> Result<(), LabError> {
    if ok { Ok(()) } else { Err(LabError::Config(msg.into())) }
}

pub(crate) fn check_ladder(name: &str, ladder: &[f64]) -> Result<(), LabError> {
    let ok = !ladder.is_empty()
        && ladder.iter().all(|t| t.is_finite() && *t > 0.0)
        && ladder.windows(2).all(|w| w[1] > w[0]);
    ensure(ok, &format!("{name} must be a nonempty, positive, strictly increasing ladder"))
}

pub(crate) fn boundary(kappa: f64) -> Result<StarBoundary, LabError> {
    ensure(kappa.is_finite() && kappa > 0.0, "kappa must be positive")?;
    Ok(StarBoundary::analytic(kappa)?)
}

/// `exp(-(x - c)^2 / (2 sigma^2) + i w x)` on `[c - cut sigma, c + cut sigma]`, zero outside.
pub(crate) fn gaussian(center: f64, sigma: f64, carrier: f64, cut: f64) -> impl Fn(f64) -> C64 + Clone + Send + Sync {
    move |x: f64| {
        let d = x - center;
        if d.abs() > cut * sigma {
            C64::new(0.0, 0.0)
        } else {
            C64::from_polar((-d * d / (2.0 * sigma * sigma)).exp(), carrier * x)
        }
    }
}

/// Smooth compactly supported bump `exp(-1 / (1 - y^2))`, `y = (x - c) / r`.
pub(crate) fn bump(center: f64, radius: f64) -> impl Fn(f64) -> f64 + Clone + Send + Sync {
    move |x: f64| {
        let y = (x - center) / radius;
        if y.abs() >= 1.0 { 0.0 } else { (-1.0 / (1.0 - y * y)).exp() }
    }
}

pub(crate) fn strictly_decreasing(v: &[f64]) -> bool {
    v.windows(2).all(|w| w[1] < w[0])
}

/// Evaluates independent rungs in parallel; results keep ladder order.
pub(crate) fn par_rungs<T: Send>(
    ladder: &[f64],
    f: impl Fn(f64) -> Result<T, LabError> + Sync + Send,
) -> Result<Vec<T>, LabError> {
    ladder.par_iter().map(|&t| f(t)).collect()
}

/// `|a - b| / |b|`, or `|a - b|` when `b` vanishes.
pub(crate) fn rel_err(a: f64, b: f64) -> f64 {
    if b != 0.0 { (a - b).abs() / b.abs() } else { (a - b).abs() }
}

pub(crate) type Rng = rand_chacha::ChaCha8Rng;

pub(crate) fn seeded(seed: u64, stream: u64) -> Rng {
    use rand::SeedableRng;
    let mut r = Rng::seed_from_u64(seed);
    r.set_stream(stream);
    r
}

pub(crate) fn random_vector(rng: &mut Rng, n: usize, scale: f64) -> nalgebra::DVector<C64> {
    use rand::Rng as _;
    nalgebra::DVector::from_fn(n, |_, _| C64::new(rng.random_range(-scale..scale), rng.random_range(-scale..scale)))
}

pub(crate) fn random_hermitian(rng: &mut Rng, n: usize, scale: f64) -> nalgebra::DMatrix<C64> {
    use rand::Rng as _;
    let a = nalgebra::DMatrix::from_fn(n, n, |_, _| C64::new(rng.random_range(-scale..scale), rng.random_range(-scale..scale)));
    (&a + a.adjoint()) * C64::new(0.5, 0.0)
}
