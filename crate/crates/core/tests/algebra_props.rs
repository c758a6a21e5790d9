use hawking_core::car::{AlgebraElement, FockRep, QuasiFreeState};
use hawking_core::classical::DiracPotential;
use hawking_core::interacting::{evenness_check, interaction_propagator, Interaction, MatrixDynamics};
use hawking_core::numerics::{gram_schmidt, unitarity_residual, HermitianEigen};
use hawking_core::spectral::{fermi, DiracOperatorMatrix, FormKind, OperatorDomain};
use hawking_core::C64;
use nalgebra::{DMatrix, DVector, Matrix2};
use proptest::prelude::*;

fn vector(n: usize) -> impl Strategy<Value = DVector<C64>> {
    prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), n)
        .prop_map(|v| DVector::from_iterator(v.len(), v.into_iter().map(|(a, b)| C64::new(a, b))))
}

fn hermitian(n: usize) -> impl Strategy<Value = DMatrix<C64>> {
    prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), n * n).prop_map(move |v| {
        let m = DMatrix::from_iterator(n, n, v.into_iter().map(|(a, b)| C64::new(a, b)));
        (&m + m.adjoint()) * C64::new(0.5, 0.0)
    })
}

fn standard_rep(n: usize) -> FockRep {
    FockRep::new((0..n).map(|k| DVector::from_fn(n, |i, _| C64::new((i == k) as u8 as f64, 0.0))).collect()).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn car_relations_in_random_bases(raw in prop::collection::vec(vector(4), 4), occ in prop::collection::vec(any::<bool>(), 4)) {
        let basis = gram_schmidt(&raw, 1e-6);
        prop_assume!(basis.len() == 4);
        prop_assert!(FockRep::new(basis.clone()).unwrap().car_residual() <= 1e-12);
        prop_assert!(FockRep::with_occupation(basis, occ).unwrap().car_residual() <= 1e-12);
    }

    #[test]
    fn representation_is_multiplicative(f in vector(3), g in vector(3), k in vector(3), z in (-1.0f64..1.0, -1.0f64..1.0)) {
        let rep = standard_rep(3);
        let a = AlgebraElement::create(f.clone())
            .product(&AlgebraElement::annihilate(g.clone()))
            .add(&AlgebraElement::annihilate(k.clone()));
        let b = AlgebraElement::create(k)
            .product(&AlgebraElement::create(g))
            .product(&AlgebraElement::annihilate(f))
            .add(&AlgebraElement::scalar(C64::new(z.0, z.1)));
        let lhs = rep.represent(&a.product(&b)).unwrap().matrix;
        let rhs = rep.represent(&a).unwrap().matrix * rep.represent(&b).unwrap().matrix;
        prop_assert!((lhs - rhs).camax() <= 1e-11);
        let adj = rep.represent(&a.adjoint()).unwrap().matrix - rep.represent(&a).unwrap().matrix.adjoint();
        prop_assert!(adj.camax() <= 1e-12);
    }

    #[test]
    fn vacuum_number_expectation_is_bounded(h in hermitian(4), f in vector(4)) {
        // Vacuum of dGamma(h): the positive spectral projection as covariance.
        let c = HermitianEigen::new(&h).apply_fn(|e| if e > 0.0 { 1.0 } else { 0.0 });
        let state = QuasiFreeState::new(c).unwrap();
        let n = state.expect(&AlgebraElement::create(f.clone()).product(&AlgebraElement::annihilate(f.clone())));
        prop_assert!(n.im.abs() <= 1e-12);
        prop_assert!(n.re >= -1e-12 && n.re <= f.norm_squared() + 1e-12);
    }

    #[test]
    fn covariance_transport(h in hermitian(3), g in hermitian(3), f in vector(3), k in vector(3), beta in 0.1f64..4.0) {
        let state = QuasiFreeState::gibbs(&h, beta).unwrap();
        let u = HermitianEigen::new(&g).exp_i(1.0);
        let a = AlgebraElement::create(f).product(&AlgebraElement::annihilate(k));
        let moved = a.map_vectors(|v| &u * v, true).unwrap();
        prop_assert!((state.transported(&u).expect(&a) - state.expect(&moved)).norm() <= 1e-10);
    }

    #[test]
    fn fermi_factors_are_occupations(beta in 0.01f64..100.0, e in -50.0f64..50.0) {
        let (p, m) = (fermi(beta, e), fermi(beta, -e));
        prop_assert!((0.0..=1.0).contains(&p));
        prop_assert!((p + m - 1.0).abs() <= 1e-15);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn spectral_covariances_lie_between_zero_and_one(m in 0.0f64..2.0, center in -2.0f64..2.0, beta in 0.2f64..50.0) {
        let v = DiracPotential::tanh_switch(m, center, 1.0);
        for (dom, n) in [(OperatorDomain::HalfLine { x_max: 8.0 }, 48), (OperatorDomain::Line { x_half: 8.0 }, 96)] {
            let op = DiracOperatorMatrix::new(dom, &v, n).unwrap();
            for kind in [FormKind::Thermal(beta), FormKind::PositiveProjection] {
                let eig = HermitianEigen::new(&op.function(|e| kind.eval(e)));
                prop_assert!(eig.values.iter().all(|x| (-1e-10..=1.0 + 1e-10).contains(x)));
            }
        }
    }

    #[test]
    fn interacting_propagator_is_unitary_and_even(b in hermitian(3), g1 in vector(3), g2 in vector(3), t in 0.1f64..1.0) {
        let rep = standard_rep(3);
        let m = Matrix2::new(C64::new(1.0, 0.0), C64::new(0.2, 0.0), C64::new(0.2, 0.0), C64::new(-0.5, 0.0));
        let inter = Interaction::from_vectors([g1, g2], m, 1).unwrap();
        let free = MatrixDynamics::new(&b);
        let schedule = |_: f64| Some(inter.element.clone());
        let (r, _) = interaction_propagator(&free, &schedule, &rep, 0.0, 0.0, t, 1e-2, &[]).unwrap();
        prop_assert!(unitarity_residual(&r) <= 1e-8);
        prop_assert!(evenness_check(&r, &rep) <= 1e-9);
    }
}
