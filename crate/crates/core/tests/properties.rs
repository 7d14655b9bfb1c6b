use num_bigint::BigInt;
use proptest::prelude::*;
use rand_distr::{Dirichlet, Distribution};

use vmi_core::estimator::{compile_ube, exact_expectation, Policy};
use vmi_core::joint::{
    apply_strategies, from_stp, is_less_informative, less_informative_lp, random_joint, random_stochastic, to_stp,
    ColumnStochastic, StpCoords,
};
use vmi_core::measures::{dmi, qmi, smi};
use vmi_core::poly::MultiPoly;
use vmi_core::vmi::{dirichlet_density, mountain, vmi_numeric, vmi_symbolic, DensitySpec, ParityMode};
use vmi_core::{Matrix, Rational};

fn rat(n: i64, d: i64) -> Rational {
    Rational::new(BigInt::from(n), BigInt::from(d))
}

prop_compose! {
    fn small_poly()(terms in prop::collection::vec((prop::array::uniform4(0u32..3), -6i64..7, 1i64..5), 0..5)) -> MultiPoly {
        MultiPoly::from_terms(4, terms.into_iter().map(|(e, n, d)| (e.to_vec(), rat(n, d)))).unwrap()
    }
}

prop_compose! {
    /// A binary joint distribution with rational entries.
    fn rational_joint()(w in prop::array::uniform4(0i64..6)) -> Matrix<Rational> {
        let total: i64 = w.iter().sum::<i64>().max(1);
        let mut e: Vec<Rational> = w.iter().map(|x| rat(*x, total)).collect();
        if w.iter().all(|x| *x == 0) {
            e[0] = rat(1, 1);
        }
        Matrix::new(2, e).unwrap()
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn ring_axioms(a in small_poly(), b in small_poly(), c in small_poly()) {
        prop_assert_eq!(a.add(&b).unwrap(), b.add(&a).unwrap());
        prop_assert_eq!(a.mul(&b).unwrap(), b.mul(&a).unwrap());
        let lhs = a.mul(&b.add(&c).unwrap()).unwrap();
        let rhs = a.mul(&b).unwrap().add(&a.mul(&c).unwrap()).unwrap();
        prop_assert_eq!(lhs, rhs);
        prop_assert!(a.sub(&a).unwrap().is_zero());
    }

    #[test]
    fn evaluation_is_a_homomorphism(a in small_poly(), b in small_poly(), u in rational_joint()) {
        let x = u.entries();
        let prod = a.mul(&b).unwrap().eval(x).unwrap();
        prop_assert_eq!(prod, a.eval(x).unwrap() * b.eval(x).unwrap());
    }

    #[test]
    fn text_round_trip(a in small_poly()) {
        prop_assert_eq!(MultiPoly::parse(&a.to_text(), 4).unwrap(), a);
    }

    #[test]
    fn estimators_are_unbiased(p in small_poly(), u in rational_joint(), extra in 0usize..2) {
        let t = (p.degree() as usize + extra).max(1);
        let want = p.eval(u.entries()).unwrap();
        for policy in [Policy::FirstK, Policy::AveragedExact] {
            let e = compile_ube(&p, 2, policy).unwrap();
            prop_assert_eq!(exact_expectation(&e, &u, t).unwrap(), want.clone());
        }
    }

    #[test]
    fn stp_round_trip(s in 0.0f64..=1.0, t in 0.0f64..=1.0, p in 0.01f64..0.99) {
        let u = from_stp(&StpCoords::new(s, t, p)).unwrap();
        let (c, degenerate) = to_stp(&u).unwrap();
        prop_assert!(!degenerate);
        prop_assert!((c.s - s).abs() < 1e-12 && (c.t - t).abs() < 1e-12 && (c.p - p).abs() < 1e-12);
    }

    #[test]
    fn garbling_never_helps(seed in 0u64..10_000, c in 2usize..4) {
        let u = random_joint(c, seed);
        let sa = random_stochastic(c, seed ^ 0xa5);
        let id = ColumnStochastic::identity(c);
        let g = apply_strategies(&u, &sa, &id).unwrap();
        prop_assert!(is_less_informative(&g, &u).unwrap());
        prop_assert!(less_informative_lp(g.matrix(), u.matrix()).unwrap());
        prop_assert!(dmi(g.matrix()) <= dmi(u.matrix()) + 1e-12);
        prop_assert!(smi(g.matrix()) <= smi(u.matrix()) + 1e-9);
        prop_assert!(qmi(g.matrix()) <= qmi(u.matrix()) + 1e-9);
    }

    #[test]
    fn mountain_closed_form_matches_quadrature(seed in 0u64..1000) {
        let u = random_joint(2, seed);
        let f = vmi_symbolic(&mountain(), ParityMode::Squared).unwrap();
        let n = vmi_numeric(&DensitySpec::Polynomial(mountain()), u.matrix(), 1 << 16, 0).unwrap();
        prop_assert!((f.vmi(u.matrix()) - n.value).abs() < 1e-10);
    }
}

#[test]
fn dirichlet_column_moments_match_sampling() {
    let ustar = vmi_core::JointDistribution::new(Matrix::from_f64_rows(&[&[0.2, 0.1], &[0.3, 0.4]]).unwrap()).unwrap();
    let d = dirichlet_density(&ustar, 50.0).unwrap();
    let mut rng = vmi_core::rng::seeded(11);
    for j in 0..2 {
        let b = d.column_parameters(j);
        let law = Dirichlet::new([b[0], b[1]]).unwrap();
        let n = 200_000;
        let mut sum = vec![0.0; 2];
        let mut sq = vec![0.0; 2];
        for _ in 0..n {
            let x: [f64; 2] = law.sample(&mut rng);
            for i in 0..2 {
                sum[i] += x[i];
                sq[i] += x[i] * x[i];
            }
        }
        let mean = d.column_mean(j);
        let var = d.column_variance(j);
        for i in 0..2 {
            let m = sum[i] / n as f64;
            let v = sq[i] / n as f64 - m * m;
            assert!((m - mean[i]).abs() < 4.0 * (var[i] / n as f64).sqrt(), "mean {m} vs {}", mean[i]);
            assert!((v - var[i]).abs() < 0.02 * var[i], "variance {v} vs {}", var[i]);
        }
    }
}
