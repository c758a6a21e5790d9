//! Fermionic field algebra: symbolic CAR elements, finite Fock representations,
//! quasi-free (Wick) states and the graded tensor product.
//!
//! Fields are `psi(f)` (antilinear in `f`) and `psi*(f)` (linear), with
//! `psi(f) psi*(g) + psi*(g) psi(f) = (f|g)`, the inner product antilinear in its first slot.

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

use crate::numerics::HermitianEigen;
use crate::C64;

const ZERO: C64 = C64 { re: 0.0, im: 0.0 };
const ONE: C64 = C64 { re: 1.0, im: 0.0 };

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CarError {
    #[error("map is not isometric: |u f| - |f| = {0}")]
    NotIsometric(f64),
    #[error("mode basis insufficient: lost norm {lost}")]
    ModeBasis { lost: f64 },
    #[error("covariance eigenvalue {0} outside [0, 1]")]
    Covariance(f64),
    #[error("subspaces not orthogonal: cross inner product {0}")]
    NotOrthogonal(f64),
    #[error("state is not even: odd expectation {0}")]
    NotEven(f64),
    #[error("dimension mismatch: {0}")]
    Dimension(String),
}

/// One-particle vectors usable inside field monomials.
pub trait OneParticle: Clone {
    /// `(self|other)`, antilinear in `self`.
    fn inner(&self, other: &Self) -> C64;
    fn norm(&self) -> f64 {
        self.inner(self).re.max(0.0).sqrt()
    }
}

impl OneParticle for DVector<C64> {
    fn inner(&self, other: &Self) -> C64 {
        self.dotc(other)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Flag {
    Create,
    Annihilate,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Field<V> {
    pub flag: Flag,
    pub vector: V,
}

pub type Monomial<V> = Vec<Field<V>>;

/// Finite linear combination of field monomials. The empty monomial is the identity.
#[derive(Debug, Clone, PartialEq)]
pub struct AlgebraElement<V = DVector<C64>> {
    pub terms: Vec<(C64, Monomial<V>)>,
}

impl<V: OneParticle> AlgebraElement<V> {
    pub fn zero() -> Self {
        AlgebraElement { terms: Vec::new() }
    }

    pub fn identity() -> Self {
        Self::scalar(ONE)
    }

    pub fn scalar(c: C64) -> Self {
        AlgebraElement { terms: vec![(c, Vec::new())] }
    }

    /// `psi*(f)`.
    pub fn create(f: V) -> Self {
        AlgebraElement { terms: vec![(ONE, vec![Field { flag: Flag::Create, vector: f }])] }
    }

    /// `psi(f)`.
    pub fn annihilate(f: V) -> Self {
        AlgebraElement { terms: vec![(ONE, vec![Field { flag: Flag::Annihilate, vector: f }])] }
    }

    /// `psi(lambda f) = conj(lambda) psi(f)`.
    pub fn annihilate_scaled(lambda: C64, f: V) -> Self {
        Self::annihilate(f).scale(lambda.conj())
    }

    /// `psi*(lambda f) = lambda psi*(f)`.
    pub fn create_scaled(lambda: C64, f: V) -> Self {
        Self::create(f).scale(lambda)
    }

    pub fn scale(mut self, c: C64) -> Self {
        for t in &mut self.terms {
            t.0 *= c;
        }
        self
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut terms = self.terms.clone();
        terms.extend(other.terms.iter().cloned());
        AlgebraElement { terms }
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.clone().scale(-ONE))
    }

    pub fn product(&self, other: &Self) -> Self {
        let mut terms = Vec::with_capacity(self.terms.len() * other.terms.len());
        for (a, ma) in &self.terms {
            for (b, mb) in &other.terms {
                let mut m = ma.clone();
                m.extend(mb.iter().cloned());
                terms.push((a * b, m));
            }
        }
        AlgebraElement { terms }
    }

    pub fn pow(&self, n: usize) -> Self {
        (0..n).fold(Self::identity(), |acc, _| acc.product(self))
    }

    pub fn adjoint(&self) -> Self {
        let terms = self
            .terms
            .iter()
            .map(|(c, m)| {
                let rev = m
                    .iter()
                    .rev()
                    .map(|f| Field {
                        flag: match f.flag {
                            Flag::Create => Flag::Annihilate,
                            Flag::Annihilate => Flag::Create,
                        },
                        vector: f.vector.clone(),
                    })
                    .collect();
                (c.conj(), rev)
            })
            .collect();
        AlgebraElement { terms }
    }

    /// Maximal monomial length.
    pub fn degree(&self) -> usize {
        self.terms.iter().map(|t| t.1.len()).max().unwrap_or(0)
    }

    /// `(creators, annihilators)` of each monomial.
    pub fn bidegrees(&self) -> Vec<(usize, usize)> {
        self.terms
            .iter()
            .map(|(_, m)| {
                let n = m.iter().filter(|f| f.flag == Flag::Create).count();
                (n, m.len() - n)
            })
            .collect()
    }

    pub fn is_even(&self) -> bool {
        self.terms.iter().all(|t| t.1.len() % 2 == 0)
    }

    pub fn is_odd(&self) -> bool {
        self.terms.iter().all(|t| t.1.len() % 2 == 1)
    }

    /// Even and odd parts.
    pub fn parity_split(&self) -> (Self, Self) {
        let (even, odd): (Vec<_>, Vec<_>) = self.terms.iter().cloned().partition(|t| t.1.len() % 2 == 0);
        (AlgebraElement { terms: even }, AlgebraElement { terms: odd })
    }

    /// Parity automorphism `psi(h) -> psi(-h)`.
    pub fn parity(&self) -> Self {
        let terms = self
            .terms
            .iter()
            .map(|(c, m)| (if m.len() % 2 == 1 { -c } else { *c }, m.clone()))
            .collect();
        AlgebraElement { terms }
    }

    /// Drops zero terms.
    pub fn prune(mut self) -> Self {
        self.terms.retain(|t| t.0 != ZERO);
        self
    }

    /// Creators left of annihilators via `psi(f) psi*(g) = (f|g) - psi*(g) psi(f)`.
    pub fn normal_order(&self) -> Self {
        let mut out = Vec::new();
        let mut stack: Vec<(C64, Monomial<V>)> = self.terms.clone();
        while let Some((c, m)) = stack.pop() {
            if c == ZERO {
                continue;
            }
            let swap = m.windows(2).position(|w| w[0].flag == Flag::Annihilate && w[1].flag == Flag::Create);
            match swap {
                None => out.push((c, m)),
                Some(i) => {
                    let overlap = m[i].vector.inner(&m[i + 1].vector);
                    if overlap != ZERO {
                        let mut contracted = m[..i].to_vec();
                        contracted.extend(m[i + 2..].iter().cloned());
                        stack.push((c * overlap, contracted));
                    }
                    let mut swapped = m;
                    swapped.swap(i, i + 1);
                    stack.push((-c, swapped));
                }
            }
        }
        out.reverse();
        AlgebraElement { terms: out }
    }

    /// Replaces every vector `f` by `u f`. With `isometric` set, `|u f| = |f|` is checked to 1e-8.
    pub fn map_vectors(&self, u: impl Fn(&V) -> V, isometric: bool) -> Result<Self, CarError> {
        let mut terms = Vec::with_capacity(self.terms.len());
        for (c, m) in &self.terms {
            let mut mapped = Vec::with_capacity(m.len());
            for f in m {
                let v = u(&f.vector);
                if isometric {
                    let d = v.norm() - f.vector.norm();
                    if d.abs() > 1e-8 * f.vector.norm().max(1.0) {
                        return Err(CarError::NotIsometric(d));
                    }
                }
                mapped.push(Field { flag: f.flag, vector: v });
            }
            terms.push((*c, mapped));
        }
        Ok(AlgebraElement { terms })
    }
}

/// `apply_one_particle_map`: the symbolic action of `tau`, `alpha^t`, wave morphisms and
/// conditional expectations.
pub fn apply_one_particle_map<V: OneParticle>(
    a: &AlgebraElement<V>,
    u: impl Fn(&V) -> V,
    isometric: bool,
) -> Result<AlgebraElement<V>, CarError> {
    a.map_vectors(u, isometric)
}

/// `psi*(f) psi(g)`.
pub fn bilinear<V: OneParticle>(f: V, g: V) -> AlgebraElement<V> {
    AlgebraElement::create(f).product(&AlgebraElement::annihilate(g))
}

/// Jordan–Wigner annihilator `a_k` on `n` modes; basis state bits are occupations, mode `k`
/// is bit `k`, and the string runs over modes `j < k`.
pub fn jw_annihilator(n: usize, k: usize) -> DMatrix<C64> {
    let dim = 1usize << n;
    let mut m = DMatrix::<C64>::zeros(dim, dim);
    for s in 0..dim {
        if s & (1 << k) != 0 {
            let sign = if (s & ((1 << k) - 1)).count_ones().is_multiple_of(2) { 1.0 } else { -1.0 };
            m[(s ^ (1 << k), s)] = C64::new(sign, 0.0);
        }
    }
    m
}

/// Fock representation over an orthonormal mode basis. Mode `k` is represented with
/// `psi(e_k) -> a_k` when unoccupied in the reference state and `psi(e_k) -> a_k^*` when
/// occupied, which is the Kähler split by the sign of the one-particle energy.
#[derive(Debug, Clone)]
pub struct FockRep {
    pub n_modes: usize,
    pub mode_basis: Vec<DVector<C64>>,
    pub occupied: Vec<bool>,
    /// `pi(psi(e_k))`.
    pub psi_matrices: Vec<DMatrix<C64>>,
    pub parity: DMatrix<C64>,
    /// `sum_k s_k N_k` with `s_k = -1` on occupied modes.
    pub charge: DMatrix<C64>,
    /// Largest admissible projection loss when representing vectors.
    pub loss_tolerance: f64,
}

#[derive(Debug, Clone)]
pub struct Represented {
    pub matrix: DMatrix<C64>,
    /// Largest norm lost when projecting monomial vectors onto the mode basis.
    pub projection_loss: f64,
}

impl FockRep {
    /// Default complex structure: every mode unoccupied, `psi(f) -> a(f)`.
    pub fn new(mode_basis: Vec<DVector<C64>>) -> Result<Self, CarError> {
        let n = mode_basis.len();
        Self::with_occupation(mode_basis, vec![false; n])
    }

    /// Kähler split from one-particle energies `b_k` (one per mode): negative modes occupied.
    pub fn energy_split(mode_basis: Vec<DVector<C64>>, energies: &[f64]) -> Result<Self, CarError> {
        if energies.len() != mode_basis.len() {
            return Err(CarError::Dimension("one energy per mode".into()));
        }
        let occ = energies.iter().map(|&e| e < 0.0).collect();
        Self::with_occupation(mode_basis, occ)
    }

    pub fn with_occupation(mode_basis: Vec<DVector<C64>>, occupied: Vec<bool>) -> Result<Self, CarError> {
        let n = mode_basis.len();
        if n == 0 || n > 12 || occupied.len() != n {
            return Err(CarError::Dimension(format!("{n} modes")));
        }
        for (i, a) in mode_basis.iter().enumerate() {
            for (j, b) in mode_basis.iter().enumerate() {
                let want = if i == j { ONE } else { ZERO };
                let d = (a.dotc(b) - want).norm();
                if d > 1e-10 {
                    return Err(CarError::NotOrthogonal(d));
                }
            }
        }
        let dim = 1usize << n;
        let psi_matrices = (0..n)
            .map(|k| {
                let a = jw_annihilator(n, k);
                if occupied[k] { a.adjoint() } else { a }
            })
            .collect();
        let parity = DMatrix::from_diagonal(&DVector::from_fn(dim, |s, _| {
            C64::new(if s.count_ones() % 2 == 0 { 1.0 } else { -1.0 }, 0.0)
        }));
        let charge = DMatrix::from_diagonal(&DVector::from_fn(dim, |s, _| {
            let q: i32 = (0..n).filter(|&k| s & (1 << k) != 0).map(|k| if occupied[k] { -1 } else { 1 }).sum();
            C64::new(q as f64, 0.0)
        }));
        Ok(FockRep { n_modes: n, mode_basis, occupied, psi_matrices, parity, charge, loss_tolerance: 1e-8 })
    }

    pub fn dim(&self) -> usize {
        1 << self.n_modes
    }

    /// Fock vacuum `Omega` (no excitations).
    pub fn vacuum(&self) -> DVector<C64> {
        let mut v = DVector::zeros(self.dim());
        v[0] = ONE;
        v
    }

    /// Coordinates `<e_k, f>` and the norm of the part of `f` outside the mode span.
    pub fn coordinates(&self, f: &DVector<C64>) -> (Vec<C64>, f64) {
        let c: Vec<C64> = self.mode_basis.iter().map(|e| e.dotc(f)).collect();
        // Explicit residual: subtracting squared norms loses everything below ~1e-8.
        let mut r = f.clone();
        for (ck, e) in c.iter().zip(&self.mode_basis) {
            r -= e * *ck;
        }
        (c, r.norm())
    }

    /// `pi(psi(f)) = sum_k conj(<e_k, f>) pi(psi(e_k))`.
    pub fn psi(&self, f: &DVector<C64>) -> (DMatrix<C64>, f64) {
        let (c, loss) = self.coordinates(f);
        let mut m = DMatrix::zeros(self.dim(), self.dim());
        for (ck, pk) in c.iter().zip(&self.psi_matrices) {
            if *ck != ZERO {
                m += pk * ck.conj();
            }
        }
        (m, loss)
    }

    pub fn represent(&self, a: &AlgebraElement) -> Result<Represented, CarError> {
        let dim = self.dim();
        let mut total = DMatrix::zeros(dim, dim);
        let mut worst = 0.0f64;
        for (c, m) in &a.terms {
            let mut prod = DMatrix::<C64>::identity(dim, dim);
            for f in m {
                let (p, loss) = self.psi(&f.vector);
                worst = worst.max(loss);
                let factor = match f.flag {
                    Flag::Annihilate => p,
                    Flag::Create => p.adjoint(),
                };
                prod *= factor;
            }
            total += prod * *c;
        }
        if worst > self.loss_tolerance {
            return Err(CarError::ModeBasis { lost: worst });
        }
        Ok(Represented { matrix: total, projection_loss: worst })
    }

    /// `sum_k w_k N_k` with `N_k = a_k^* a_k` the Fock number operator of mode `k`.
    pub fn number_weighted(&self, weights: &[f64]) -> DMatrix<C64> {
        DMatrix::from_diagonal(&DVector::from_fn(self.dim(), |s, _| {
            let e: f64 = (0..self.n_modes).filter(|&k| s & (1 << k) != 0).map(|k| weights[k]).sum();
            C64::new(e, 0.0)
        }))
    }

    /// `exp(i theta Q)`.
    pub fn charge_rotation(&self, theta: f64) -> DMatrix<C64> {
        DMatrix::from_diagonal(&DVector::from_fn(self.dim(), |s, _| C64::from_polar(1.0, theta * self.charge[(s, s)].re)))
    }

    /// Largest CAR residual over all mode pairs.
    pub fn car_residual(&self) -> f64 {
        let dim = self.dim();
        let id = DMatrix::<C64>::identity(dim, dim);
        let mut worst = 0.0f64;
        for (i, a) in self.psi_matrices.iter().enumerate() {
            for (j, b) in self.psi_matrices.iter().enumerate() {
                let mixed = a * b.adjoint() + b.adjoint() * a - if i == j { id.clone() } else { DMatrix::zeros(dim, dim) };
                let pure = a * b + b * a;
                worst = worst.max(mixed.camax()).max(pure.camax());
            }
        }
        worst
    }
}

/// Gauge-invariant quasi-free state `omega(psi*(f) psi(g)) = (g|c f)` on the ambient space.
#[derive(Debug, Clone)]
pub struct QuasiFreeState {
    pub covariance: DMatrix<C64>,
}

impl QuasiFreeState {
    pub fn new(covariance: DMatrix<C64>) -> Result<Self, CarError> {
        let herm = (&covariance - covariance.adjoint()).camax();
        if herm > 1e-10 {
            return Err(CarError::Covariance(f64::NAN));
        }
        let eig = HermitianEigen::new(&covariance);
        for &e in &eig.values {
            if !(-1e-10..=1.0 + 1e-10).contains(&e) {
                return Err(CarError::Covariance(e));
            }
        }
        Ok(QuasiFreeState { covariance })
    }

    /// Gibbs covariance `(1 + exp(beta h))^{-1}` of `dGamma(h)`.
    pub fn gibbs(h: &DMatrix<C64>, beta: f64) -> Result<Self, CarError> {
        let eig = HermitianEigen::new(h);
        Self::new(eig.apply_fn(|e| crate::spectral::fermi(beta, -e)))
    }

    pub fn pair(&self, f: &DVector<C64>, g: &DVector<C64>) -> C64 {
        g.dotc(&(&self.covariance * f))
    }

    pub fn expect(&self, a: &AlgebraElement) -> C64 {
        wick_expectation(a, |f, g| self.pair(f, g))
    }

    /// Covariance of `omega o tau_u` for a unitary one-particle map: `u* c u`.
    pub fn transported(&self, u: &DMatrix<C64>) -> Self {
        QuasiFreeState { covariance: u.adjoint() * &self.covariance * u }
    }
}

/// Density matrix of the quasi-free state with mode-space covariance `c_ij = (e_i | c e_j)`
/// in a representation with every mode unoccupied (`psi -> a`):
/// `rho = prod_k [nu_k a*(phi_k) a(phi_k) + (1 - nu_k) a(phi_k) a*(phi_k)]` over the
/// eigenpairs `(nu_k, phi_k)` of `c`.
pub fn quasifree_density_matrix(rep: &FockRep, c_modes: &DMatrix<C64>) -> Result<DMatrix<C64>, CarError> {
    if rep.occupied.iter().any(|&o| o) || c_modes.nrows() != rep.n_modes {
        return Err(CarError::Dimension("needs the unoccupied reference and an n x n covariance".into()));
    }
    QuasiFreeState::new(c_modes.clone())?;
    let eig = HermitianEigen::new(c_modes);
    let dim = rep.dim();
    let mut rho = DMatrix::<C64>::identity(dim, dim);
    for (k, &nu) in eig.values.iter().enumerate() {
        // a(phi) = sum_i conj(phi_i) a_i in mode coordinates.
        let mut a = DMatrix::<C64>::zeros(dim, dim);
        for i in 0..rep.n_modes {
            a += &rep.psi_matrices[i] * eig.vectors[(i, k)].conj();
        }
        let n = a.adjoint() * &a;
        let id = DMatrix::<C64>::identity(dim, dim);
        let factor = &n * C64::new(nu, 0.0) + (id - &n) * C64::new(1.0 - nu, 0.0);
        rho *= factor;
    }
    Ok(rho)
}

/// Quasi-free expectation from a two-point function `pair(f, g) = omega(psi*(f) psi(g))`.
///
/// After normal ordering, a monomial `psi*(f_1)..psi*(f_n) psi(g_1)..psi(g_n)` evaluates to
/// `(-1)^{n(n-1)/2} det[pair(f_i, g_j)]`: with the annihilators reversed,
/// `psi*(f_1)..psi*(f_n) psi(g_n)..psi(g_1)` is exactly the determinant (checked against the
/// Gibbs trace in the tests).
pub fn wick_expectation<V: OneParticle>(a: &AlgebraElement<V>, pair: impl Fn(&V, &V) -> C64) -> C64 {
    let ordered = a.normal_order();
    let mut total = ZERO;
    for (c, m) in &ordered.terms {
        let creators: Vec<&V> = m.iter().filter(|f| f.flag == Flag::Create).map(|f| &f.vector).collect();
        let annihilators: Vec<&V> = m.iter().filter(|f| f.flag == Flag::Annihilate).map(|f| &f.vector).collect();
        let n = creators.len();
        if n != annihilators.len() {
            continue;
        }
        if n == 0 {
            total += c;
            continue;
        }
        let mat = DMatrix::from_fn(n, n, |i, j| pair(creators[i], annihilators[j]));
        let sign = if (n * (n - 1) / 2).is_multiple_of(2) { 1.0 } else { -1.0 };
        total += c * mat.determinant() * sign;
    }
    total
}

/// Orthogonal decomposition `h = h_1 + h_2` given by orthonormal bases of each part.
#[derive(Debug, Clone)]
pub struct SubspaceSplit {
    pub basis1: Vec<DVector<C64>>,
    pub basis2: Vec<DVector<C64>>,
}

impl SubspaceSplit {
    pub fn new(basis1: Vec<DVector<C64>>, basis2: Vec<DVector<C64>>) -> Result<Self, CarError> {
        for a in &basis1 {
            for b in &basis2 {
                let d = a.dotc(b).norm();
                if d > 1e-10 {
                    return Err(CarError::NotOrthogonal(d));
                }
            }
        }
        Ok(SubspaceSplit { basis1, basis2 })
    }

    fn project(basis: &[DVector<C64>], f: &DVector<C64>) -> DVector<C64> {
        let mut out = DVector::zeros(f.len());
        for e in basis {
            out += e * e.dotc(f);
        }
        out
    }

    pub fn p1(&self, f: &DVector<C64>) -> DVector<C64> {
        Self::project(&self.basis1, f)
    }

    pub fn p2(&self, f: &DVector<C64>) -> DVector<C64> {
        Self::project(&self.basis2, f)
    }
}

/// Element of the graded tensor product: terms `c a_1 (x) a_2` with monomial factors.
#[derive(Debug, Clone, PartialEq)]
pub struct GradedElement {
    pub terms: Vec<(C64, Monomial<DVector<C64>>, Monomial<DVector<C64>>)>,
}

impl GradedElement {
    /// `(a_1 (x) a_2)(b_1 (x) b_2) = (-1)^{deg a_2 deg b_1} a_1 b_1 (x) a_2 b_2`.
    pub fn product(&self, other: &Self) -> Self {
        let mut terms = Vec::new();
        for (c, a1, a2) in &self.terms {
            for (d, b1, b2) in &other.terms {
                let sign = if a2.len() % 2 == 1 && b1.len() % 2 == 1 { -1.0 } else { 1.0 };
                let mut l = a1.clone();
                l.extend(b1.iter().cloned());
                let mut r = a2.clone();
                r.extend(b2.iter().cloned());
                terms.push((c * d * sign, l, r));
            }
        }
        GradedElement { terms }
    }
}

/// Exponential law: each field `psi(f)` becomes `psi(P_1 f) (x) 1 + 1 (x) psi(P_2 f)`,
/// multiplied out with the graded sign rule.
pub fn exponential_law_split(a: &AlgebraElement, split: &SubspaceSplit) -> GradedElement {
    let mut out = GradedElement { terms: Vec::new() };
    for (c, m) in &a.terms {
        let mut acc = GradedElement { terms: vec![(*c, Vec::new(), Vec::new())] };
        for f in m {
            let left = Field { flag: f.flag, vector: split.p1(&f.vector) };
            let right = Field { flag: f.flag, vector: split.p2(&f.vector) };
            let factor = GradedElement {
                terms: vec![(ONE, vec![left], Vec::new()), (ONE, Vec::new(), vec![right])],
            };
            acc = acc.product(&factor);
        }
        out.terms.extend(acc.terms);
    }
    out
}

/// Inverse of the exponential law: `a_1 (x) a_2 -> a_1 a_2`.
pub fn exponential_law_merge(g: &GradedElement) -> AlgebraElement {
    let terms = g
        .terms
        .iter()
        .map(|(c, l, r)| {
            let mut m = l.clone();
            m.extend(r.iter().cloned());
            (*c, m)
        })
        .collect();
    AlgebraElement { terms }
}

/// `(omega_1 (x) omega_2)(a)` for `a` split over `h_1 + h_2`; `omega_1` must be even,
/// which is checked on single fields and cubic monomials of its basis.
pub fn graded_state_tensor(
    omega1: &dyn Fn(&AlgebraElement) -> C64,
    omega2: &dyn Fn(&AlgebraElement) -> C64,
    split: &SubspaceSplit,
    a: &AlgebraElement,
) -> Result<C64, CarError> {
    check_even(omega1, &split.basis1)?;
    let g = exponential_law_split(a, split);
    let mut total = ZERO;
    for (c, l, r) in &g.terms {
        if l.len() % 2 == 1 {
            // Even first factor: odd left parts contribute nothing.
            continue;
        }
        let left = AlgebraElement { terms: vec![(ONE, l.clone())] };
        let right = AlgebraElement { terms: vec![(ONE, r.clone())] };
        total += c * omega1(&left) * omega2(&right);
    }
    Ok(total)
}

fn check_even(omega: &dyn Fn(&AlgebraElement) -> C64, basis: &[DVector<C64>]) -> Result<(), CarError> {
    let k = basis.len().min(3);
    for e in basis.iter().take(k) {
        for a in [AlgebraElement::create(e.clone()), AlgebraElement::annihilate(e.clone())] {
            let v = omega(&a).norm();
            if v > 1e-12 {
                return Err(CarError::NotEven(v));
            }
        }
        for f in basis.iter().take(k) {
            let cubic = bilinear(e.clone(), f.clone()).product(&AlgebraElement::annihilate(basis[0].clone()));
            let v = omega(&cubic).norm().max(omega(&cubic.adjoint()).norm());
            if v > 1e-12 {
                return Err(CarError::NotEven(v));
            }
        }
    }
    Ok(())
}

/// `<v, A v>`.
pub fn vector_expectation(rep: &FockRep, v: &DVector<C64>, a: &AlgebraElement) -> Result<C64, CarError> {
    let m = rep.represent(a)?.matrix;
    Ok(v.dotc(&(m * v)))
}
