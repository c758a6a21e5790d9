//! Bounded even interactions, time-ordered (Dyson) propagators and the interacting dynamics
//! they generate in finite Fock representations.

use nalgebra::{DMatrix, DVector, Matrix2};
use thiserror::Error;

use crate::car::{apply_one_particle_map, bilinear, AlgebraElement, CarError, FockRep};
use crate::numerics::{gauss_legendre, lagrange_weights, operator_norm, HermitianEigen};
use crate::C64;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum InteractingError {
    #[error("matrix M is not Hermitian (residual {0})")]
    NotHermitian(f64),
    #[error("interaction profile must vanish for x <= 0 (found |g| = {0} there)")]
    Support(f64),
    #[error("series tail bound {bound} exceeds tolerance {tol}; raise the order")]
    OrderInsufficient { bound: f64, tol: f64 },
    #[error("one-particle operator is singular (smallest |eigenvalue| {0})")]
    Singular(f64),
    #[error("perturbation must be even")]
    OddPerturbation,
    #[error("perturbed vector is null (norm {0})")]
    NullVector(f64),
    #[error("invalid input: {0}")]
    Invalid(String),
    #[error(transparent)]
    Car(#[from] CarError),
}

/// `I = (psi*(g) M psi(g))^n = (sum_i lambda_i psi*(g e_i) psi(g e_i))^n`.
#[derive(Debug, Clone)]
pub struct Interaction {
    /// `g (x) (1, 0)` and `g (x) (0, 1)` in the ambient space.
    pub g_components: [DVector<C64>; 2],
    pub m: Matrix2<C64>,
    pub n: usize,
    pub eigenvalues: [f64; 2],
    /// `g (x) e_i` for the eigenvectors `e_i` of `M`.
    pub modes: [DVector<C64>; 2],
    pub element: AlgebraElement,
}

impl Interaction {
    /// `g_components[c]` is `g (x) (unit vector c)`; both must have equal norm and be orthogonal.
    pub fn from_vectors(g_components: [DVector<C64>; 2], m: Matrix2<C64>, n: usize) -> Result<Self, InteractingError> {
        let herm = (m - m.adjoint()).camax();
        if herm > 1e-12 {
            return Err(InteractingError::NotHermitian(herm));
        }
        if n < 1 {
            return Err(InteractingError::Invalid("power n must be positive".into()));
        }
        let eig = HermitianEigen::new(&DMatrix::from_fn(2, 2, |i, j| m[(i, j)]));
        let mode = |k: usize| &g_components[0] * eig.vectors[(0, k)] + &g_components[1] * eig.vectors[(1, k)];
        let modes = [mode(0), mode(1)];
        let quadratic = bilinear(modes[0].clone(), modes[0].clone())
            .scale(C64::new(eig.values[0], 0.0))
            .add(&bilinear(modes[1].clone(), modes[1].clone()).scale(C64::new(eig.values[1], 0.0)));
        let element = quadratic.pow(n);
        let out = Interaction { g_components, m, n, eigenvalues: [eig.values[0], eig.values[1]], modes, element };
        out.verify()?;
        Ok(out)
    }

    /// Interaction for a scalar profile on the grid `x_j = x_min + j h` (`len` points), in the
    /// layout `[component 1 samples, component 2 samples]` scaled by `sqrt(h)`.
    pub fn on_grid(
        g: impl Fn(f64) -> C64,
        x_min: f64,
        h: f64,
        len: usize,
        m: Matrix2<C64>,
        n: usize,
    ) -> Result<Self, InteractingError> {
        let sh = h.sqrt();
        let mut outside = 0.0f64;
        let samples: Vec<C64> = (0..len)
            .map(|j| {
                let x = x_min + j as f64 * h;
                let v = g(x);
                if x <= 0.0 {
                    outside = outside.max(v.norm());
                }
                v * sh
            })
            .collect();
        if outside > 0.0 {
            return Err(InteractingError::Support(outside));
        }
        let c0 = DVector::from_fn(2 * len, |i, _| if i < len { samples[i] } else { C64::new(0.0, 0.0) });
        let c1 = DVector::from_fn(2 * len, |i, _| if i >= len { samples[i - len] } else { C64::new(0.0, 0.0) });
        Self::from_vectors([c0, c1], m, n)
    }

    /// Self-adjointness and evenness on the two-mode representation spanned by `g e_i`.
    fn verify(&self) -> Result<(), InteractingError> {
        let basis = crate::numerics::gram_schmidt(&self.modes, 1e-12);
        if basis.is_empty() {
            return Ok(());
        }
        let rep = FockRep::new(basis)?;
        let m = rep.represent(&self.element)?.matrix;
        let scale = m.camax().max(1.0);
        let adj = (&m - m.adjoint()).camax();
        let even = (&rep.parity * &m * &rep.parity - &m).camax();
        if adj > 1e-12 * scale || even > 1e-12 * scale {
            return Err(InteractingError::Invalid(format!("interaction check failed: adjoint {adj}, parity {even}")));
        }
        Ok(())
    }
}

/// Integration method for `d_t U(s, t) = -i U(s, t) H(t)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DysonMethod {
    /// Time-ordered series truncated at `order`, integrals on `nodes` Gauss–Legendre points;
    /// rejected when the tail bound `(sup |H| |t - s|)^{N+1} / (N+1)!` exceeds `tol`.
    Series { order: usize, nodes: usize, tol: f64 },
    Rk4 { step: f64 },
}

#[derive(Debug, Clone)]
pub struct DysonResult {
    pub u: DMatrix<C64>,
    pub tail_bound: Option<f64>,
}

/// `U_H(s, t)`; `breaks` lists discontinuities of `H` (RK4 restarts there).
pub fn dyson_propagator(
    h: &dyn Fn(f64) -> DMatrix<C64>,
    s: f64,
    t: f64,
    method: DysonMethod,
    breaks: &[f64],
) -> Result<DysonResult, InteractingError> {
    match method {
        DysonMethod::Rk4 { step } => {
            if !(step > 0.0) {
                return Err(InteractingError::Invalid("RK4 step must be positive".into()));
            }
            let mut pts = vec![s];
            let (lo, hi) = (s.min(t), s.max(t));
            let mut inner: Vec<f64> = breaks.iter().copied().filter(|&b| b > lo && b < hi).collect();
            inner.sort_by(f64::total_cmp);
            if t < s {
                inner.reverse();
            }
            pts.extend(inner);
            pts.push(t);
            let dim = h(s).nrows();
            let mut u = DMatrix::<C64>::identity(dim, dim);
            for w in pts.windows(2) {
                u = rk4(h, &u, w[0], w[1], step);
            }
            Ok(DysonResult { u, tail_bound: None })
        }
        DysonMethod::Series { order, nodes, tol } => {
            let (x, w) = gauss_legendre(nodes.max(2));
            let half = 0.5 * (t - s);
            let taus: Vec<f64> = x.iter().map(|xi| s + half * (xi + 1.0)).collect();
            let hs: Vec<DMatrix<C64>> = taus.iter().map(|&tau| h(tau)).collect();
            let sup = hs.iter().map(operator_norm).fold(0.0, f64::max);
            let bound = (sup * (t - s).abs()).powi(order as i32 + 1) / factorial(order + 1);
            if bound > tol {
                return Err(InteractingError::OrderInsufficient { bound, tol });
            }
            // S[i][j] = int_s^{tau_i} l_j, by a mapped Gauss rule on [s, tau_i].
            let n = taus.len();
            let sub = gauss_legendre(n);
            let mut smat = vec![vec![0.0; n]; n];
            for i in 0..n {
                let hl = 0.5 * (taus[i] - s);
                for (xq, wq) in sub.0.iter().zip(&sub.1) {
                    let sigma = s + hl * (xq + 1.0);
                    let l = lagrange_weights(&taus, sigma);
                    for j in 0..n {
                        smat[i][j] += hl * wq * l[j];
                    }
                }
            }
            let dim = hs[0].nrows();
            let minus_i = C64::new(0.0, -1.0);
            let mut term: Vec<DMatrix<C64>> = vec![DMatrix::identity(dim, dim); n];
            let mut total = DMatrix::<C64>::identity(dim, dim);
            for _ in 0..order {
                let prod: Vec<DMatrix<C64>> = term.iter().zip(&hs).map(|(a, b)| a * b).collect();
                let mut at_t = DMatrix::<C64>::zeros(dim, dim);
                for j in 0..n {
                    at_t += &prod[j] * C64::new(half * w[j], 0.0);
                }
                total += &at_t * minus_i;
                term = (0..n)
                    .map(|i| {
                        let mut acc = DMatrix::<C64>::zeros(dim, dim);
                        for j in 0..n {
                            acc += &prod[j] * C64::new(smat[i][j], 0.0);
                        }
                        acc * minus_i
                    })
                    .collect();
            }
            Ok(DysonResult { u: total, tail_bound: Some(bound) })
        }
    }
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

fn rk4(h: &dyn Fn(f64) -> DMatrix<C64>, u0: &DMatrix<C64>, a: f64, b: f64, step: f64) -> DMatrix<C64> {
    let steps = ((b - a).abs() / step).ceil().max(1.0) as usize;
    let dt = (b - a) / steps as f64;
    let mi = C64::new(0.0, -1.0);
    let f = |tau: f64, u: &DMatrix<C64>| u * h(tau) * mi;
    let mut u = u0.clone();
    for k in 0..steps {
        let tau = a + k as f64 * dt;
        let k1 = f(tau, &u);
        let k2 = f(tau + 0.5 * dt, &(&u + &k1 * C64::new(0.5 * dt, 0.0)));
        let k3 = f(tau + 0.5 * dt, &(&u + &k2 * C64::new(0.5 * dt, 0.0)));
        let k4 = f(tau + dt, &(&u + &k3 * C64::new(dt, 0.0)));
        u += (k1 + k2 * C64::new(2.0, 0.0) + k3 * C64::new(2.0, 0.0) + k4) * C64::new(dt / 6.0, 0.0);
    }
    u
}

/// Family of one-particle propagators `u(s, t)`.
pub trait OneParticleDynamics {
    fn apply(&self, s: f64, t: f64, f: &DVector<C64>) -> DVector<C64>;
}

/// `u(s, t) = exp(i (s - t) b)` for a Hermitian matrix `b`.
#[derive(Debug, Clone)]
pub struct MatrixDynamics {
    pub eig: HermitianEigen,
}

impl MatrixDynamics {
    pub fn new(b: &DMatrix<C64>) -> Self {
        MatrixDynamics { eig: HermitianEigen::new(b) }
    }

    pub fn matrix(&self, s: f64, t: f64) -> DMatrix<C64> {
        self.eig.exp_i(s - t)
    }
}

impl OneParticleDynamics for MatrixDynamics {
    fn apply(&self, s: f64, t: f64, f: &DVector<C64>) -> DVector<C64> {
        self.matrix(s, t) * f
    }
}

impl<F: Fn(f64, f64, &DVector<C64>) -> DVector<C64>> OneParticleDynamics for F {
    fn apply(&self, s: f64, t: f64, f: &DVector<C64>) -> DVector<C64> {
        self(s, t, f)
    }
}

/// Time-dependent interaction `sigma -> I(sigma)`; `None` means zero.
pub type InteractionSchedule<'a> = &'a dyn Fn(f64) -> Option<AlgebraElement>;

#[derive(Debug, Clone)]
pub struct InteractingResult {
    /// `pi(tau^int(s, t) A)`.
    pub matrix: DMatrix<C64>,
    /// `R_s(s, t)`.
    pub r: DMatrix<C64>,
    pub projection_loss: f64,
}

/// `R_s(t', t)`: generator `sigma -> pi(tau^0(s, sigma) I(sigma))`.
#[allow(clippy::too_many_arguments)]
pub fn interaction_propagator(
    free: &dyn OneParticleDynamics,
    schedule: InteractionSchedule<'_>,
    rep: &FockRep,
    s: f64,
    t_prime: f64,
    t: f64,
    step: f64,
    breaks: &[f64],
) -> Result<(DMatrix<C64>, f64), InteractingError> {
    let dim = rep.dim();
    let loss = std::cell::Cell::new(0.0f64);
    let failure: std::cell::RefCell<Option<InteractingError>> = std::cell::RefCell::new(None);
    let gen = |sigma: f64| -> DMatrix<C64> {
        let Some(i) = schedule(sigma) else { return DMatrix::zeros(dim, dim) };
        let moved = match apply_one_particle_map(&i, |f| free.apply(s, sigma, f), false) {
            Ok(m) => m,
            Err(e) => {
                failure.borrow_mut().get_or_insert(e.into());
                return DMatrix::zeros(dim, dim);
            }
        };
        match rep.represent(&moved) {
            Ok(r) => {
                loss.set(loss.get().max(r.projection_loss));
                r.matrix
            }
            Err(e) => {
                failure.borrow_mut().get_or_insert(e.into());
                DMatrix::zeros(dim, dim)
            }
        }
    };
    let u = dyson_propagator(&gen, t_prime, t, DysonMethod::Rk4 { step }, breaks)?.u;
    if let Some(e) = failure.into_inner() {
        return Err(e);
    }
    Ok((u, loss.get()))
}

/// `pi(tau^int(s, t) A) = R_s(s, t) pi(tau^0(s, t) A) R_s(s, t)^*`.
#[allow(clippy::too_many_arguments)]
pub fn interacting_dynamics_apply(
    free: &dyn OneParticleDynamics,
    schedule: InteractionSchedule<'_>,
    rep: &FockRep,
    a: &AlgebraElement,
    s: f64,
    t: f64,
    step: f64,
    breaks: &[f64],
) -> Result<InteractingResult, InteractingError> {
    let (r, loss_i) = interaction_propagator(free, schedule, rep, s, s, t, step, breaks)?;
    let moved = apply_one_particle_map(a, |f| free.apply(s, t, f), false)?;
    let rep_a = rep.represent(&moved)?;
    let matrix = &r * rep_a.matrix * r.adjoint();
    Ok(InteractingResult { matrix, r, projection_loss: loss_i.max(rep_a.projection_loss) })
}

/// `I_T(t) = 1_{[T-1, T]}(t) alpha^t(I)` given the one-particle translation `shift(t, f) = f^t`.
pub fn windowed_interaction<'a>(
    i: &'a AlgebraElement,
    big_t: f64,
    shift: &'a dyn Fn(f64, &DVector<C64>) -> DVector<C64>,
) -> impl Fn(f64) -> Option<AlgebraElement> + 'a {
    move |t: f64| {
        if t < big_t - 1.0 || t > big_t {
            return None;
        }
        apply_one_particle_map(i, |f| shift(t, f), false).ok()
    }
}

/// `|[P, R]|`: vanishes for propagators generated by even interactions.
pub fn evenness_check(r: &DMatrix<C64>, rep: &FockRep) -> f64 {
    operator_norm(&(&rep.parity * r - r * &rep.parity))
}

#[derive(Debug, Clone)]
pub struct Stationary {
    pub rep: FockRep,
    /// `dGamma(|b|)`.
    pub h0: DMatrix<C64>,
    /// `pi(I)`.
    pub interaction: DMatrix<C64>,
    /// `dGamma(sgn b)`.
    pub q: DMatrix<C64>,
    pub one_particle_energies: Vec<f64>,
}

impl Stationary {
    /// `H(lambda) = H_0 + lambda pi(I)`.
    pub fn hamiltonian(&self, lambda: f64) -> DMatrix<C64> {
        &self.h0 + &self.interaction * C64::new(lambda, 0.0)
    }

    pub fn commutator_residual(&self, lambda: f64) -> f64 {
        let h = self.hamiltonian(lambda);
        (&h * &self.q - &self.q * &h).camax()
    }
}

/// Fock representation split by the sign of `b`, with `H_0 = dGamma(|b|)` and `Q = dGamma(sgn b)`.
pub fn stationary_hamiltonian(b: &DMatrix<C64>, interaction: &Interaction) -> Result<Stationary, InteractingError> {
    let eig = HermitianEigen::new(b);
    let smallest = eig.values.iter().map(|v| v.abs()).fold(f64::INFINITY, f64::min);
    if smallest < 1e-10 {
        return Err(InteractingError::Singular(smallest));
    }
    let basis: Vec<DVector<C64>> = (0..eig.values.len()).map(|k| eig.vectors.column(k).into_owned()).collect();
    let rep = FockRep::energy_split(basis, &eig.values)?;
    let abs: Vec<f64> = eig.values.iter().map(|v| v.abs()).collect();
    let h0 = rep.number_weighted(&abs);
    let inter = rep.represent(&interaction.element)?.matrix;
    let q = rep.charge.clone();
    Ok(Stationary { rep, h0, interaction: inter, q, one_particle_energies: eig.values })
}

#[derive(Debug, Clone, PartialEq)]
pub struct GroundRow {
    pub lambda: f64,
    pub energy: f64,
    pub gap: f64,
    pub charge: f64,
    pub degenerate: bool,
}

#[derive(Debug, Clone)]
pub struct GroundReport {
    pub rows: Vec<GroundRow>,
    /// Largest ladder value up to which every row is nondegenerate with `|<Q>| <= charge_tol`.
    pub threshold: Option<f64>,
}

/// Lowest eigenpair of `H(lambda)` for each ladder value.
pub fn ground_state_analysis(st: &Stationary, ladder: &[f64], degeneracy_tol: f64, charge_tol: f64) -> GroundReport {
    let mut rows = Vec::with_capacity(ladder.len());
    let mut threshold = None;
    let mut ok = true;
    for &lambda in ladder {
        let eig = HermitianEigen::new(&st.hamiltonian(lambda));
        let e0 = eig.values[0];
        let gap = eig.values.get(1).map(|e| e - e0).unwrap_or(f64::INFINITY);
        let v = eig.vectors.column(0);
        let charge = v.dotc(&(&st.q * v)).re;
        let degenerate = gap <= degeneracy_tol;
        ok &= !degenerate && charge.abs() <= charge_tol;
        if ok {
            threshold = Some(lambda);
        }
        rows.push(GroundRow { lambda, energy: e0, gap, charge, degenerate });
    }
    GroundReport { rows, threshold }
}

/// `omega~(A) = <pi(P) Omega, pi(A) pi(P) Omega> / |pi(P) Omega|^2` for an even polynomial `P`.
pub fn perturbed_vacuum_state(p: &AlgebraElement, rep: &FockRep, a: &AlgebraElement) -> Result<C64, InteractingError> {
    if !p.is_even() {
        return Err(InteractingError::OddPerturbation);
    }
    let v = rep.represent(p)?.matrix * rep.vacuum();
    let n = v.norm();
    if n <= 1e-8 {
        return Err(InteractingError::NullVector(n));
    }
    let am = rep.represent(a)?.matrix;
    Ok(v.dotc(&(am * &v)) / C64::new(n * n, 0.0))
}

/// Default four-mode model on `C^2 (sites) (x) C^2 (spinor)`:
/// `b = t_hop sigma_y (x) L - m 1 (x) Gamma + eps sigma_z (x) 1`, with the interaction
/// profile on site 0, `M = diag(1, -1/2)`, `n = 2`.
pub fn default_ground_state_model() -> (DMatrix<C64>, Interaction) {
    let c = |re: f64, im: f64| C64::new(re, im);
    let sy = DMatrix::from_row_slice(2, 2, &[c(0.0, 0.0), c(0.0, -1.0), c(0.0, 1.0), c(0.0, 0.0)]);
    let sz = DMatrix::from_row_slice(2, 2, &[c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(-1.0, 0.0)]);
    let l = sz.clone();
    let gamma = DMatrix::from_row_slice(2, 2, &[c(0.0, 0.0), c(1.0, 0.0), c(1.0, 0.0), c(0.0, 0.0)]);
    let id = DMatrix::<C64>::identity(2, 2);
    let (t_hop, m, eps) = (0.5, 1.0, 0.2);
    let b = sy.kronecker(&l) * c(t_hop, 0.0) - id.kronecker(&gamma) * c(m, 0.0) + sz.kronecker(&id) * c(eps, 0.0);
    let e = |k: usize| DVector::from_fn(4, |i, _| if i == k { c(1.0, 0.0) } else { c(0.0, 0.0) });
    let mm = Matrix2::new(c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(-0.5, 0.0));
    let inter = Interaction::from_vectors([e(0), e(1)], mm, 2).expect("valid default interaction");
    (b, inter)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::unitarity_residual;

    fn herm(dim: usize, seed: f64) -> DMatrix<C64> {
        let a = DMatrix::from_fn(dim, dim, |i, j| C64::new(((i * 7 + j * 3) as f64 * seed).sin(), ((i * 5 + j * 11) as f64 * seed).cos()));
        (&a + a.adjoint()) * C64::new(0.25 / dim as f64, 0.0)
    }

    #[test]
    fn constant_generator_gives_exponential() {
        let h = herm(4, 0.7);
        let exact = HermitianEigen::new(&h).exp_i(-1.3);
        let gen = |_: f64| h.clone();
        let rk = dyson_propagator(&gen, 0.0, 1.3, DysonMethod::Rk4 { step: 1e-3 }, &[]).unwrap();
        assert!((&rk.u - &exact).camax() < 1e-10);
        let se = dyson_propagator(&gen, 0.0, 1.3, DysonMethod::Series { order: 20, nodes: 16, tol: 1e-12 }, &[]).unwrap();
        assert!((&se.u - &exact).camax() < 1e-10);
    }

    #[test]
    fn series_rejects_low_order() {
        let h = DMatrix::<C64>::identity(2, 2) * C64::new(3.0, 0.0);
        let gen = |_: f64| h.clone();
        assert!(matches!(
            dyson_propagator(&gen, 0.0, 1.0, DysonMethod::Series { order: 4, nodes: 8, tol: 1e-8 }, &[]),
            Err(InteractingError::OrderInsufficient { .. })
        ));
    }

    #[test]
    fn interaction_spectrum_for_identity_matrix() {
        let e = |k: usize| DVector::from_fn(2, |i, _| if i == k { C64::new(1.0, 0.0) } else { C64::new(0.0, 0.0) });
        let inter = Interaction::from_vectors([e(0), e(1)], Matrix2::identity(), 2).unwrap();
        let rep = FockRep::new(vec![e(0), e(1)]).unwrap();
        let m = rep.represent(&inter.element).unwrap().matrix;
        let eig = HermitianEigen::new(&m);
        for v in eig.values {
            assert!([0.0, 1.0, 4.0].iter().any(|w| (v - w).abs() < 1e-12), "{v}");
        }
    }

    #[test]
    fn remark_propagator_agrees_with_interaction_picture() {
        // tau(s,t)A = U(s,t) A U(t,s) with U generated by dGamma(b) + pi(I(t)).
        let (b, inter) = default_ground_state_model();
        let basis: Vec<_> = (0..4).map(|k| DVector::from_fn(4, |i, _| if i == k { C64::new(1.0, 0.0) } else { C64::new(0.0, 0.0) })).collect();
        let rep = FockRep::new(basis).unwrap();
        let free = MatrixDynamics::new(&b);
        let schedule = |_: f64| Some(inter.element.clone());
        let a = AlgebraElement::annihilate(rep.mode_basis[2].clone());
        let res = interacting_dynamics_apply(&free, &schedule, &rep, &a, 0.0, 0.7, 1e-3, &[]).unwrap();
        let mut dg = DMatrix::zeros(16, 16);
        for i in 0..4 {
            for j in 0..4 {
                dg += rep.psi_matrices[i].adjoint() * &rep.psi_matrices[j] * b[(i, j)];
            }
        }
        let pi_i = rep.represent(&inter.element).unwrap().matrix;
        let gen = |_: f64| &dg + &pi_i;
        let u = dyson_propagator(&gen, 0.0, 0.7, DysonMethod::Rk4 { step: 1e-3 }, &[]).unwrap().u;
        let expect = &u * rep.represent(&a).unwrap().matrix * u.adjoint();
        assert!((expect - &res.matrix).camax() < 1e-9);
        assert!(unitarity_residual(&res.r) < 1e-9);
        assert!(evenness_check(&res.r, &rep) < 1e-9);
    }
}
