use num_traits::{One, Zero};
use proptest::prelude::*;
use qdm::exact_arith::linalg::RatMatrix;
use qdm::exact_arith::{
    euler_phi, rat, rat_int, sqrt_integer, subfield_membership, ArithError, Cyclo, Rational,
};

fn z(m: u32, k: i64) -> Cyclo {
    Cyclo::zeta_pow(m, k)
}

fn one(m: u32) -> Cyclo {
    Cyclo::one(m)
}

#[test]
fn roots_of_unity_products() {
    assert_eq!(&z(4, 1) * &z(4, 1), Cyclo::from_int(4, -1));
    assert_eq!(&z(8, 1) * &z(8, 3), Cyclo::from_int(8, -1));
    let a = &one(3) + &z(3, 1);
    let b = &one(3) + &z(3, 2);
    assert_eq!(&a * &b, one(3));
}

#[test]
fn product_against_schoolbook_reduction() {
    // (1+x)(1+x^2) = 1 + x + x^2 + x^3; mod x^2+x+1: x^2 = -1-x, x^3 = 1
    // so 1 + x + (-1 - x) + 1 = 1.
    let a = Cyclo::from_coeffs(3, &[rat_int(1), rat_int(1)]);
    let b = Cyclo::from_coeffs(3, &[rat_int(1), rat_int(0), rat_int(1)]);
    assert_eq!(a.coeffs().len(), 2);
    assert_eq!(a.cyclo_mul(&b).unwrap().coeffs(), vec![rat_int(1), rat_int(0)]);
}

#[test]
fn order_mismatch_is_an_error() {
    assert_eq!(z(4, 1).cyclo_mul(&z(8, 1)), Err(ArithError::OrderMismatch(4, 8)));
    let e = z(4, 1).embed(8).unwrap();
    assert_eq!(e, z(8, 2));
}

#[test]
fn inverses() {
    assert_eq!(one(5).cyclo_inv().unwrap(), one(5));
    for m in [3u32, 4, 5, 8, 12] {
        assert_eq!(z(m, 1).cyclo_inv().unwrap(), z(m, m as i64 - 1));
    }
    let a = &one(4) + &z(4, 1);
    let expect = Cyclo::from_coeffs(4, &[rat(1, 2), rat(-1, 2)]);
    assert_eq!(a.cyclo_inv().unwrap(), expect);
    assert_eq!(&a * &expect, one(4));
    assert_eq!(Cyclo::zero(4).cyclo_inv(), Err(ArithError::ZeroInverse));
}

#[test]
fn square_roots() {
    assert_eq!(sqrt_integer(1, 4).unwrap(), one(4));
    assert_eq!(sqrt_integer(2, 8).unwrap(), &z(8, 1) - &z(8, 3));
    assert_eq!(sqrt_integer(4, 8).unwrap(), Cyclo::from_int(8, 2));
    assert!(matches!(sqrt_integer(2, 4), Err(ArithError::SqrtNotRepresentable { .. })));
    assert!(matches!(sqrt_integer(3, 6), Err(ArithError::SqrtNotRepresentable { .. })));
}

#[test]
fn square_roots_for_all_small_n() {
    for n in 1..=16u64 {
        for m in [4 * n, 8 * n] {
            let s = sqrt_integer(n, m as u32).unwrap();
            assert_eq!(&s * &s, Cyclo::from_int(m as u32, n as i64), "n={n} m={m}");
            let (re, im) = s.to_complex();
            assert!(re > 0.0 && im.abs() < 1e-9);
        }
    }
}

#[test]
fn subfields() {
    assert!(subfield_membership(&Cyclo::from_rational(8, &rat(1, 2)), 1).unwrap());
    assert!(!subfield_membership(&z(8, 1), 4).unwrap());
    assert!(subfield_membership(&z(8, 2), 4).unwrap());
    assert_eq!(
        subfield_membership(&z(8, 1), 3),
        Err(ArithError::NotDivisor { sub: 3, m: 8 })
    );
}

#[test]
fn cyclotomic_relations_hold() {
    for m in 1..=24u32 {
        assert_eq!(z(m, m as i64), one(m));
        let phi = qdm::exact_arith::cyclotomic_poly(m);
        let mut acc = Cyclo::zero(m);
        for (k, c) in phi.iter().enumerate() {
            acc = &acc + &z(m, k as i64).scale(&Rational::from_integer(c.clone()));
        }
        assert!(acc.is_zero(), "Phi_{m}(zeta) != 0");
        assert_eq!(z(m, 0).coeffs().len(), euler_phi(m) as usize);
    }
}

/// Membership by linear algebra: is `a` in the Q-span of the embedded power
/// basis of Q(ζ_sub)?
fn brute_membership(a: &Cyclo, sub: u32) -> bool {
    let m = a.order();
    let basis: Vec<Vec<Rational>> = (0..euler_phi(sub) as i64)
        .map(|k| z(sub, k).embed(m).unwrap().coeffs())
        .collect();
    let n = euler_phi(m) as usize;
    let cols = basis.len();
    let mut mat = RatMatrix::zeros(n, cols);
    for (j, b) in basis.iter().enumerate() {
        for i in 0..n {
            mat.set(i, j, b[i].clone());
        }
    }
    mat.solve(&a.coeffs()).is_some()
}

fn small_cyclo(m: u32) -> impl Strategy<Value = Cyclo> {
    let phi = euler_phi(m) as usize;
    proptest::collection::vec((-6i64..=6, 1i64..=4), phi)
        .prop_map(move |v| Cyclo::from_coeffs(m, &v.iter().map(|&(n, d)| rat(n, d)).collect::<Vec<_>>()))
}

fn order_and_elements() -> impl Strategy<Value = (Cyclo, Cyclo, Cyclo)> {
    prop_oneof![Just(3u32), Just(4), Just(5), Just(8), Just(12), Just(24)]
        .prop_flat_map(|m| (small_cyclo(m), small_cyclo(m), small_cyclo(m)))
}

fn subfield_case() -> impl Strategy<Value = (Cyclo, u32)> {
    prop_oneof![Just(8u32), Just(12), Just(24), Just(20), Just(9)].prop_flat_map(|m| {
        let divisors: Vec<u32> = (1..=m).filter(|d| m % d == 0).collect();
        // mix generic elements with elements of a random subfield
        (proptest::sample::select(divisors.clone()), proptest::sample::select(divisors), any::<bool>())
            .prop_flat_map(move |(sub, src, from_sub)| {
                let gen = if from_sub { src } else { m };
                small_cyclo(gen).prop_map(move |c| (c.embed(m).unwrap(), sub))
            })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn field_axioms((a, b, c) in order_and_elements()) {
        prop_assert_eq!(&(&a * &b) * &c, &a * &(&b * &c));
        prop_assert_eq!(&a * &(&b + &c), &(&a * &b) + &(&a * &c));
        prop_assert_eq!(&a * &b, &b * &a);
        prop_assert_eq!(&(&a - &a), &Cyclo::zero(a.order()));
        if !a.is_zero() {
            prop_assert!((&a * &a.cyclo_inv().unwrap()).is_one());
        }
    }

    #[test]
    fn membership_matches_linear_algebra((a, sub) in subfield_case()) {
        prop_assert_eq!(subfield_membership(&a, sub).unwrap(), brute_membership(&a, sub));
    }

    #[test]
    fn galois_is_multiplicative((a, b, _c) in order_and_elements(), k in 1i64..24) {
        let m = a.order() as i64;
        prop_assume!(num_integer::gcd(k, m) == 1);
        prop_assert_eq!((&a * &b).galois(k), &a.galois(k) * &b.galois(k));
    }
}

#[test]
fn rational_helpers() {
    assert!(rat(0, 3).is_zero());
    assert!(rat(3, 3).is_one());
    assert_eq!(qdm::exact_arith::parse_rational(" -3/6 ").unwrap(), rat(-1, 2));
    assert!(qdm::exact_arith::parse_rational("x").is_err());
}
