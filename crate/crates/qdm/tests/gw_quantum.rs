use std::sync::Arc;

use num_traits::{One, Zero};
use qdm::exact_arith::linalg::RatMatrix;
use qdm::exact_arith::{rat, rat_int, Cyclo, Rational};
use qdm::geometry_model::{load_bundled_blowup, load_bundled_model, CohomologyModel};
use qdm::graded_series::{outer_from, Ring, Series, TruncationPolicy, VariableSpec, OUTER_ONE};
use qdm::gw_quantum::*;

fn p2_store(d: u32) -> GWStore {
    reconstruct_gw(&load_bundled_model("P2").unwrap(), &GwBounds::weight(d)).unwrap()
}

fn n_d(store: &GWStore, d: u32) -> Rational {
    let pt = store.model().index("pt").unwrap();
    store.correlator(&[d], &vec![pt; 3 * d as usize - 1]).unwrap()
}

#[test]
fn kontsevich_numbers_of_the_plane() {
    let store = p2_store(4);
    let got: Vec<Rational> = (1..=4).map(|d| n_d(&store, d)).collect();
    assert_eq!(got, [rat_int(1), rat_int(1), rat_int(12), rat_int(620)]);
    let pt = store.model().index("pt").unwrap();
    let key = CorrKey { class: vec![1], insertions: vec![pt, pt] };
    assert_eq!(store.entries()[&key].1, Provenance::ConfigSeeded);
    let key = CorrKey { class: vec![3], insertions: vec![pt; 8] };
    assert_eq!(store.entries()[&key].1, Provenance::WdvvDerived);
}

/// Conics through five rational points: the 6 coefficients of a conic
/// satisfy five linear conditions; exactly one conic means the solution
/// space is one-dimensional.
#[test]
fn conic_count_matches_linear_algebra_oracle() {
    let pts = [(0i64, 1i64), (1, 3), (2, -1), (-3, 2), (5, 7)];
    let rows: Vec<Vec<Rational>> = pts
        .iter()
        .map(|&(x, y)| [x * x, x * y, y * y, x, y, 1].iter().map(|&v| rat_int(v)).collect())
        .collect();
    let m = RatMatrix::from_rows(rows);
    let conics_through_points = 6 - m.rank();
    assert_eq!(conics_through_points, 1);
    assert_eq!(n_d(&p2_store(2), 2), rat_int(conics_through_points as i64));
}

#[test]
fn elliptic_curve_positive_degree_invariants_vanish() {
    let e = load_bundled_model("elliptic-curve").unwrap();
    let store = reconstruct_gw(&e, &GwBounds::weight(4)).unwrap();
    let n = e.n();
    for d in store.classes() {
        for a in 0..n {
            for b in 0..n {
                for c in 0..n {
                    assert!(store.correlator(d, &[a, b, c]).unwrap().is_zero());
                    for x in 0..n {
                        assert!(store.correlator(d, &[a, b, c, x]).unwrap().is_zero());
                    }
                }
            }
        }
    }
    assert!(correlator_hodge_check(&store).unwrap());
    // ⟨α, α, pt⟩_0 vanishes, ⟨α, β, 1⟩_0 = 1 and ⟨β, α, 1⟩_0 = −1
    let (al, be, one) = (e.index("alpha").unwrap(), e.index("beta").unwrap(), e.unit);
    let pt = e.index("pt").unwrap();
    assert!(store.correlator(&[0], &[al, al, pt]).unwrap().is_zero());
    assert_eq!(store.correlator(&[0], &[al, be, one]).unwrap(), rat_int(1));
    assert_eq!(store.correlator(&[0], &[be, al, one]).unwrap(), rat_int(-1));
}

#[test]
fn degree_zero_is_the_triple_product() {
    let store = reconstruct_gw(&load_bundled_model("P3").unwrap(), &GwBounds::weight(2)).unwrap();
    let m = store.model();
    for a in 0..m.n() {
        for b in 0..m.n() {
            for c in 0..m.n() {
                assert_eq!(store.correlator(&[0], &[a, b, c]).unwrap(), m.triple(a, b, c));
            }
        }
    }
    // lines in P³ through a point meeting two lines, and meeting four lines
    let (h2, pt) = (m.index("H2").unwrap(), m.index("pt").unwrap());
    assert_eq!(store.correlator(&[1], &[pt, h2, h2]).unwrap(), rat_int(1));
    assert_eq!(store.correlator(&[1], &[h2, h2, h2, h2]).unwrap(), rat_int(2));
    // conics in P³ meeting eight lines: 92
    assert_eq!(store.correlator(&[2], &[h2; 8]).unwrap(), rat_int(92));
}

#[test]
fn blowup_of_the_plane_counts() {
    let m = load_bundled_blowup("P2-blowup-point").unwrap().xt;
    let store = reconstruct_gw(&m, &GwBounds::weight(6)).unwrap();
    let pt = m.index("pt").unwrap();
    // class a·e + b·(ℓ−e) = bℓ − (b−a)e: curves of degree b with multiplicity
    // b − a at the blown-up point through 3b − 1 − (b−a) further points
    let cases: [(u32, u32, i64); 7] = [(0, 1, 1), (1, 1, 1), (1, 2, 1), (2, 2, 1), (1, 3, 1), (2, 3, 12), (3, 3, 12)];
    for (a, b, expect) in cases {
        let n = (a + 2 * b - 1) as usize;
        assert_eq!(store.correlator(&[a, b], &vec![pt; n]).unwrap(), rat_int(expect), "class {a}e+{b}f");
    }
    assert!(store.correlator(&[2, 0], &[pt]).unwrap().is_zero());
}

#[test]
fn unseeded_reconstruction_reports_the_stratum() {
    let mut m = load_bundled_model("P2").unwrap();
    m.seeds.clear();
    let err = reconstruct_gw(&m, &GwBounds::weight(2)).unwrap_err();
    assert!(matches!(err, GwError::Underdetermined { .. }), "{err}");
}

fn p2_ring(weight: u32, order: u32, zlo: i32) -> (Arc<Ring>, Arc<TruncationPolicy>) {
    let ring = Ring::plain(
        vec![VariableSpec::novikov("Q", 6, 1), VariableSpec::parameter("t0", 2), VariableSpec::parameter("t1", 0), VariableSpec::parameter("t2", -2)],
        1,
    )
    .unwrap();
    let pol = Arc::new(TruncationPolicy::new(weight, order).with_z(zlo, 0, true));
    (ring, pol)
}

fn p2_solution(weight: u32, order: u32, zlo: i32) -> (GWStore, FundamentalSolution) {
    let store = p2_store(weight.max(1));
    let (ring, pol) = p2_ring(weight, order, zlo);
    let setup = SolutionSetup::at_origin(&ring, &pol, vec![0], vec![Some(1), Some(2), Some(3)]);
    let fs = fundamental_solution(&store, &setup).unwrap();
    (store, fs)
}

#[test]
fn quantum_product_examples_on_the_plane() {
    let (store, fs) = p2_solution(2, 0, -6);
    let m = store.model();
    let qp = fs.quantum_product();
    let h = m.basis_vec(m.index("H").unwrap());
    let pt = m.basis_vec(m.index("pt").unwrap());
    let prod = qp.product(&h, &pt);
    let ring = fs.setup.ring.clone();
    let pol = fs.setup.policy.clone();
    let q = Series::var(&ring, &pol, "Q").unwrap();
    let mut expect = Series::zero(&ring, &pol, 3, 1);
    expect.set_entry(0, 0, &q);
    assert_eq!(prod, expect);
    // unit axiom and classical limit
    for i in 0..3 {
        let b = m.basis_vec(i);
        let one = m.basis_vec(m.unit);
        assert_eq!(qp.product(&one, &b), Series::from_matrix(&ring, &pol, 3, 1, |k, _| b[k].clone()));
        let classical = qp.product(&h, &b).restrict_zero(&[0]);
        let cup = m.cup_vec(&h, &b);
        assert_eq!(classical, Series::from_matrix(&ring, &pol, 3, 1, |k, _| cup[k].clone()));
    }
}

fn assert_associative(model: &CohomologyModel, qp: &QuantumProduct) {
    let n = model.n();
    for a in 0..n {
        for b in 0..n {
            let ab = qp.operator(a).mul(qp.operator(b));
            let ba = qp.operator(b).mul(qp.operator(a));
            assert!(ab.sub(&ba).is_empty(), "{}: operators of {a} and {b} do not commute", model.name);
            // (φ_a ★ φ_b) ★ = φ_a★ ∘ φ_b★
            let col = qp.product(&model.basis_vec(a), &model.basis_vec(b));
            let mut op = qp.operator(0).zero_like();
            for k in 0..n {
                op = op.add(&col.entry(k, 0).mul(qp.operator(k)));
            }
            assert!(op.sub(&ab).is_empty(), "{}: associativity fails at ({a}, {b})", model.name);
        }
    }
}

#[test]
fn wdvv_associativity_of_big_products() {
    let (store, fs) = p2_solution(3, 2, -4);
    assert_associative(store.model(), fs.quantum_product());

    let xt = load_bundled_blowup("P2-blowup-point").unwrap().xt;
    let store = reconstruct_gw(&xt, &GwBounds::weight(3)).unwrap();
    let ring = Ring::plain(
        vec![
            VariableSpec::novikov("Qe", 2, 1),
            VariableSpec::novikov("Qf", 4, 1),
            VariableSpec::parameter("t0", 2),
            VariableSpec::parameter("tH", 0),
            VariableSpec::parameter("tE", 0),
            VariableSpec::parameter("tpt", -2),
        ],
        1,
    )
    .unwrap();
    let pol = Arc::new(TruncationPolicy::new(3, 2).with_z(-3, 0, true));
    let setup = SolutionSetup::at_origin(&ring, &pol, vec![0, 1], vec![Some(2), Some(3), Some(4), Some(5)]);
    let fs = fundamental_solution(&store, &setup).unwrap();
    assert_associative(&xt, fs.quantum_product());
    assert_eq!(fs.flatness_witness(), None);
}

#[test]
fn fundamental_solution_of_the_plane() {
    let (_, fs) = p2_solution(2, 3, -6);
    let m = fs.series();
    // normalisation
    let origin = m.restrict_zero(&[0, 1, 2, 3]);
    assert_eq!(origin, Series::identity(&fs.setup.ring, &fs.setup.policy, 3));
    assert_eq!(fs.flatness_witness(), None);
    // M(τ)1 = 1 + τ/z + O(z⁻²)
    let col = m.filter_z(|z| z >= -1);
    let ring = &fs.setup.ring;
    let pol = &fs.setup.policy;
    for (k, name) in ["t0", "t1", "t2"].iter().enumerate() {
        let expect = if k == 0 {
            Series::one(ring, pol)
        } else {
            Series::var(ring, pol, name).unwrap().shift(0, -1)
        };
        let mut got = col.entry(k, 0);
        if k == 0 {
            got = got.sub(&Series::var(ring, pol, "t0").unwrap().shift(0, -1));
        }
        assert_eq!(got, expect, "component {k}");
    }
}

/// P¹ at τ = 0 to Q-weight 1, against a hand solution of
/// z Q∂_Q M = M∘(h★) − h∪M with M = Id at Q = 0.
#[test]
fn projective_line_oracle() {
    let p1 = load_bundled_model("P1").unwrap();
    let store = reconstruct_gw(&p1, &GwBounds::weight(1)).unwrap();
    let ring = Ring::plain(vec![VariableSpec::novikov("Q", 4, 1)], 1).unwrap();
    let pol = Arc::new(TruncationPolicy::new(1, 0).with_z(-4, 0, true));
    let setup = SolutionSetup::at_origin(&ring, &pol, vec![0], vec![None, None]);
    let fs = fundamental_solution(&store, &setup).unwrap();
    // Write M = Id + Q·A.  With
    //   (h★)_Q = [[0, 1], [0, 0]]  (h★h = Q·1)
    //   h∪ = [[0, 0], [1, 0]]
    // z A + hA − Ah = E12.  Ansatz A = [[a, b], [c, d]]:
    //   hA − Ah = [[−b, 0], [a − d, b]]
    //   ⇒ z b = 1, z a − b = 0, z c + a − d = 0, z d + b = 0
    //   ⇒ b = z⁻¹, a = z⁻², d = −z⁻², c = −2 z⁻³
    let q = outer_from(&[(0, 1)]);
    let m = fs.series();
    let c = |i, j, z| m.coeff(&q, i, j, 0, z);
    let one = Cyclo::one(1);
    assert_eq!(c(0, 0, -2), one);
    assert_eq!(c(0, 1, -1), one);
    assert_eq!(c(1, 1, -2), -&one);
    assert_eq!(c(1, 0, -3), Cyclo::from_int(1, -2));
    assert_eq!(m.blocks()[&q].iter().map(|l| l.terms().len()).sum::<usize>(), 4);
    assert_eq!(m.blocks()[&OUTER_ONE].iter().map(|l| l.terms().len()).sum::<usize>(), 2);
}

#[test]
fn divisor_shift_on_the_plane_and_its_blowup() {
    let (store, fs) = p2_solution(2, 2, -5);
    let m = store.model();
    let h = m.basis_vec(m.index("H").unwrap());
    assert!(divisor_shift_check(&fs, m, &vec![Rational::zero(); 3]).unwrap());
    assert!(divisor_shift_check(&fs, m, &h).unwrap());
    assert!(divisor_shift_check(&fs, m, &h.iter().map(|x| x * rat(-3, 2)).collect::<Vec<_>>()).unwrap());
}

#[test]
fn hodge_detector_on_synthetic_store() {
    let s = load_bundled_model("synthetic-hodge").unwrap();
    let store = reconstruct_gw(&s, &GwBounds::weight(2)).unwrap();
    assert!(correlator_hodge_check(&store).unwrap());
    let mut bad = store.clone();
    let sigma = s.index("sigma").unwrap();
    let pt = s.index("pt").unwrap();
    bad.insert(CorrKey { class: vec![1], insertions: vec![sigma, pt] }, Rational::one(), Provenance::ConfigSeeded);
    assert!(!correlator_hodge_check(&bad).unwrap());

    let f = load_bundled_blowup("synthetic-hodge-fault").unwrap();
    let store = reconstruct_gw(&f.x, &GwBounds::weight(2)).unwrap();
    assert!(!correlator_hodge_check(&store).unwrap());
    let p2 = p2_store(3);
    assert!(correlator_hodge_check(&p2).unwrap());
}

mod props {
    use super::*;
    use proptest::prelude::*;
    use std::sync::OnceLock;

    fn blowup_solution() -> &'static (CohomologyModel, FundamentalSolution) {
        static S: OnceLock<(CohomologyModel, FundamentalSolution)> = OnceLock::new();
        S.get_or_init(|| {
            let xt = load_bundled_blowup("P2-blowup-point").unwrap().xt;
            let store = reconstruct_gw(&xt, &GwBounds::weight(2)).unwrap();
            let ring = Ring::plain(
                vec![
                    VariableSpec::novikov("Qe", 2, 1),
                    VariableSpec::novikov("Qf", 4, 1),
                    VariableSpec::parameter("tH", 0),
                    VariableSpec::parameter("tE", 0),
                    VariableSpec::parameter("tpt", -2),
                ],
                1,
            )
            .unwrap();
            let pol = Arc::new(TruncationPolicy::new(2, 2).with_z(-4, 0, true));
            let setup = SolutionSetup::at_origin(&ring, &pol, vec![0, 1], vec![None, Some(2), Some(3), Some(4)]);
            (xt.clone(), fundamental_solution(&store, &setup).unwrap())
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(12))]
        #[test]
        fn divisor_shift_random_classes_on_blowup(a in -4i64..5, b in -4i64..5, den in 1i64..4) {
            let (xt, fs) = blowup_solution();
            let mut h = vec![Rational::zero(); xt.n()];
            h[xt.index("H").unwrap()] = rat(a, den);
            h[xt.index("E").unwrap()] = rat(b, den);
            prop_assert!(divisor_shift_check(fs, xt, &h).unwrap());
        }
    }
}
