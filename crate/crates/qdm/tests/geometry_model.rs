use num_traits::{One, Zero};
use proptest::prelude::*;
use qdm::exact_arith::{rat_int, Rational};
use qdm::geometry_model::*;

fn unit_vec(n: usize, i: usize) -> Vec<Rational> {
    let mut v = vec![Rational::zero(); n];
    v[i] = Rational::one();
    v
}

#[test]
fn p2_blowup_point_loads_with_four_dimensional_dec() {
    let g = load_bundled_blowup("P2-blowup-point").unwrap();
    assert_eq!(g.n_decomp(), 4);
    assert_eq!(g.dec.rows(), 4);
    assert_eq!(g.dec.det(), -Rational::one()); // H(X) ⊕ H(pt) in the order 1, H, pt, E
    assert_eq!(g.r, 2);
}

#[test]
fn p3_blowup_point_has_trivial_rho() {
    let g = load_bundled_blowup("P3-blowup-point").unwrap();
    assert_eq!(g.r, 3);
    assert!(g.rho_z.iter().all(|c| c.is_zero()));
    assert_eq!(g.j_push.len(), 2);
}

#[test]
fn zeroed_pairing_is_rejected_by_name() {
    let src = bundled_source("P2").unwrap();
    let mut doc = parse_doc(src).unwrap();
    for row in &mut doc.x.pairing {
        for v in row.iter_mut() {
            *v = "0".into();
        }
    }
    let err = geometry_from_doc(&doc).unwrap_err();
    assert!(err.to_string().contains("pairing nondegenerate"), "{err}");
}

#[test]
fn broken_configs_name_the_invariant() {
    // bidegree not summing to the degree
    let mut doc = parse_doc(bundled_source("P2").unwrap()).unwrap();
    doc.x.hodge[1] = [2, 1];
    assert!(matches!(geometry_from_doc(&doc), Err(GeometryError::Bidegree(_))));

    // j_* landing in the wrong degree
    let mut doc = parse_doc(bundled_source("P2-blowup-point").unwrap()).unwrap();
    doc.blowup.as_mut().unwrap().j_push[0].insert("1".into(), [("pt".to_string(), "1".to_string())].into());
    assert!(matches!(geometry_from_doc(&doc), Err(GeometryError::Degree(_))));

    // dec not bijective: j_*(1) collapsed onto φ^*H
    let mut doc = parse_doc(bundled_source("P2-blowup-point").unwrap()).unwrap();
    doc.blowup.as_mut().unwrap().j_push[0].insert("1".into(), [("H".to_string(), "1".to_string())].into());
    assert_eq!(geometry_from_doc(&doc).unwrap_err(), GeometryError::DecNotBijective);

    // fiber convention
    let mut doc = parse_doc(bundled_source("P2-blowup-point").unwrap()).unwrap();
    doc.blowup.as_mut().unwrap().fiber = "f".into();
    assert!(matches!(geometry_from_doc(&doc), Err(GeometryError::CurveConvention(_))));

    // bidegree-violating structure constant
    let mut doc = parse_doc(bundled_source("synthetic-hodge").unwrap()).unwrap();
    doc.x.cup.push(qdm::geometry_model::doc::CupDoc {
        a: "sigma".into(),
        b: "h".into(),
        value: [("pt".to_string(), "1".to_string())].into(),
    });
    assert!(matches!(geometry_from_doc(&doc), Err(GeometryError::Bidegree(_))));

    // unknown key
    let src = format!("{}\nbogus = 1\n", bundled_source("P2").unwrap());
    assert!(matches!(load_geometry(&src), Err(GeometryError::Parse(_))));
}

#[test]
fn hodge_subspaces() {
    let p2 = load_bundled_model("P2").unwrap();
    assert_eq!(p2.hodge_subspace(), vec![0, 1, 2]);
    let e = load_bundled_model("elliptic-curve").unwrap();
    let labels: Vec<_> = e.hodge_subspace().into_iter().map(|i| e.labels[i].clone()).collect();
    assert_eq!(labels, ["1", "pt"]);
    let s = load_bundled_model("synthetic-hodge").unwrap();
    let labels: Vec<_> = s.hodge_subspace().into_iter().map(|i| s.labels[i].clone()).collect();
    assert_eq!(labels, ["1", "h", "e", "pt"]);
}

#[test]
fn dec_examples_and_round_trips() {
    for name in ["P2-blowup-point", "P3-blowup-point", "synthetic-hodge"] {
        let g = load_bundled_blowup(name).unwrap();
        let nz = g.z.n();
        let zero_betas = vec![vec![Rational::zero(); nz]; g.r as usize - 1];
        let one = g.dec_apply(&unit_vec(g.x.n(), g.x.unit), &zero_betas);
        assert_eq!(one, unit_vec(g.xt.n(), g.xt.unit));
        for i in 0..g.xt.n() {
            let e = unit_vec(g.xt.n(), i);
            let (a, b) = g.dec_invert(&e);
            assert_eq!(g.dec_apply(&a, &b), e, "{name}");
        }
        assert_eq!(g.dec.mul(&g.dec_inv), qdm::exact_arith::linalg::RatMatrix::identity(g.xt.n()));
    }
    let g = load_bundled_blowup("P2-blowup-point").unwrap();
    let e = g.dec_apply(&vec![Rational::zero(); 3], &[vec![Rational::one()]]);
    assert_eq!(e, unit_vec(4, g.xt.index("E").unwrap()));
}

#[test]
fn toml_round_trip_is_exact() {
    for name in bundled_names() {
        let doc = parse_doc(bundled_source(name).unwrap()).unwrap();
        let text = render_doc(&doc).unwrap();
        let again = parse_doc(&text).unwrap();
        assert_eq!(doc, again, "{name}");
        assert_eq!(render_doc(&again).unwrap(), text);
        assert_eq!(geometry_from_doc(&doc).unwrap(), geometry_from_doc(&again).unwrap());
    }
}

#[test]
fn structural_invariants_of_bundled_models() {
    for name in bundled_names() {
        let geo = load_geometry(bundled_source(name).unwrap()).unwrap();
        let mut models = vec![geo.primary_model().clone()];
        if let Some(b) = geo.blowup() {
            models.push(b.z.clone());
            models.push(b.xt.clone());
        }
        for m in models {
            let n = m.n();
            for a in 0..n {
                for b in 0..n {
                    let ab = m.cup_vec(&unit_vec(n, a), &unit_vec(n, b));
                    let ba = m.cup_vec(&unit_vec(n, b), &unit_vec(n, a));
                    let s = if m.is_odd(a) && m.is_odd(b) { rat_int(-1) } else { rat_int(1) };
                    let sba: Vec<_> = ba.iter().map(|x| x * &s).collect();
                    assert_eq!(ab, sba, "{} graded commutativity", m.name);
                }
            }
        }
    }
}

#[test]
fn projection_formula_for_curves() {
    // φ^*H · f = H · φ_*f on Bl_pt P²
    let g = load_bundled_blowup("P2-blowup-point").unwrap();
    let h = g.x.index("H").unwrap();
    let f = g.xt.curves.iter().position(|c| c.name == "f").unwrap();
    let pulled: Rational = (0..g.xt.n()).map(|i| g.phi_pull.get(i, h) * &g.xt.curves[f].dot[i]).sum();
    assert_eq!(pulled, g.x.dot_of(h, &g.xt_curves[f].0));
    assert_eq!(g.xt_curves[g.fiber].1, -1);
}

proptest! {
    #[test]
    fn dec_is_inverse_on_random_vectors(v in proptest::collection::vec(-20i64..20, 6)) {
        let g = load_bundled_blowup("P3-blowup-point").unwrap();
        let gamma: Vec<Rational> = v.iter().map(|&x| rat_int(x)).collect();
        let (a, b) = g.dec_invert(&gamma);
        prop_assert_eq!(g.dec_apply(&a, &b), gamma);
    }

    #[test]
    fn cup_product_is_associative_on_random_vectors(
        a in proptest::collection::vec(-5i64..5, 7),
        b in proptest::collection::vec(-5i64..5, 7),
        c in proptest::collection::vec(-5i64..5, 7),
    ) {
        let m = load_bundled_blowup("synthetic-hodge").unwrap().xt;
        let to = |v: &[i64]| v.iter().map(|&x| rat_int(x)).collect::<Vec<_>>();
        let (a, b, c) = (to(&a), to(&b), to(&c));
        prop_assert_eq!(m.cup_vec(&m.cup_vec(&a, &b), &c), m.cup_vec(&a, &m.cup_vec(&b, &c)));
    }
}
