use std::f64::consts::PI;
use std::sync::Arc;

use proptest::prelude::*;
use qdm::exact_arith::{rat, Cyclo};
use qdm::geometry_model::load_bundled_blowup;
use qdm::graded_series::{Ring, TruncationPolicy, VariableSpec};
use qdm::novikov_embed::*;

type C = (f64, f64);

fn cmul(a: C, b: C) -> C {
    (a.0 * b.0 - a.1 * b.1, a.0 * b.1 + a.1 * b.0)
}

fn cis(t: f64) -> C {
    (t.cos(), t.sin())
}

fn close(a: C, b: C) -> bool {
    (a.0 - b.0).abs() < 1e-12 && (a.1 - b.1).abs() < 1e-12
}

// Floating-point evaluation of the branch formulas, independent of the
// ζ_m bookkeeping in the crate.
fn lambda_oracle(r: u32, j: u32) -> C {
    let n = (r - 1) as f64;
    let c = cis(-PI * (2 * j + 1) as f64 / n);
    (-c.0, -c.1)
}

fn qz_oracle(r: u32, j: u32) -> C {
    let n = (r - 1) as f64;
    let inv_i_sqrt = (0.0, -1.0 / n.sqrt());
    let phase = cis(PI * (r * j) as f64 / n);
    let branch = cis(PI * r as f64 / (2.0 * n));
    cmul(cmul(inv_i_sqrt, phase), branch)
}

#[test]
fn r2_and_r3_closed_forms() {
    let l = lambda(2, 0).unwrap();
    assert!(l.coeff.is_one());
    assert_eq!((l.q_num, s_den(2)), (1, 1));
    let q = q_z(2, 0).unwrap();
    assert_eq!(q.coeff, Cyclo::zeta_pow(4, 1));
    assert_eq!(q.q_num, -1);

    let l = lambda(3, 0).unwrap();
    assert_eq!(l.coeff, Cyclo::zeta_pow(8, 2)); // i
    assert_eq!(l.q_num, 2); // 𝔮^{2/4}
    let q = q_z(3, 0).unwrap();
    let half = rat(1, 2);
    let expect = &Cyclo::one(8).scale(&half) + &Cyclo::zeta_pow(8, 2).scale(&half);
    assert_eq!(q.coeff, expect);
    assert_eq!(q.q_num, -3); // 𝔮^{-3/4}
}

#[test]
fn constants_match_float_oracle() {
    for r in 2..=7 {
        for j in 0..r - 1 {
            let (l, h, q) = constants(r, j).unwrap();
            assert!(close(l.coeff.to_complex(), lambda_oracle(r, j)), "λ r={r} j={j}");
            assert!(close(q.coeff.to_complex(), qz_oracle(r, j)), "q_Z r={r} j={j}");
            assert_eq!(h.factor, rat(2 * j as i64 + 1, 2 * (r as i64 - 1)));
            assert_eq!(l.q_num as u32 * (r - 1), s_den(r));
            assert_eq!(q.q_num * 2 * (r as i32 - 1), -(r as i32) * s_den(r) as i32);
        }
    }
    assert!(matches!(lambda(3, 2), Err(EmbedError::BranchIndex { .. })));
    assert!(matches!(lambda(1, 0), Err(EmbedError::Codimension(1))));
}

#[test]
fn minus_lambda_power_is_branch_of_minus_q() {
    // (−λ_j)^{r−1} = e^{−πi}𝔮
    for r in 2..=7 {
        for j in 0..r - 1 {
            let l = lambda(r, j).unwrap();
            let p = (-&l.coeff).pow(r as i64 - 1).unwrap();
            assert_eq!(p, Cyclo::from_int(field_order(r), -1), "r={r} j={j}");
        }
    }
}

#[test]
fn branches_are_monodromy_images() {
    for r in 2..=5 {
        let s = s_den(r);
        let ring = Ring::new(vec![VariableSpec::novikov("Q", 2, 1)], s, 2 * (r as i32 - 1), field_order(r)).unwrap();
        let pol = Arc::new(TruncationPolicy::new(2, 0));
        let l0 = lambda(r, 0).unwrap().to_series(&ring, &pol);
        let q0 = q_z(r, 0).unwrap().to_series(&ring, &pol);
        for j in 0..r - 1 {
            assert_eq!(l0.monodromy_substitute(j as i64).unwrap(), lambda(r, j).unwrap().to_series(&ring, &pol));
            assert_eq!(q0.monodromy_substitute(j as i64).unwrap(), q_z(r, j).unwrap().to_series(&ring, &pol));
        }
        // a full turn returns λ_0
        assert_eq!(l0.monodromy_substitute(r as i64 - 1).unwrap(), l0);
    }
}

#[test]
fn blowup_point_embeddings() {
    let g = load_bundled_blowup("P2-blowup-point").unwrap();
    let cx = EmbeddingContext::new(&g).unwrap();
    let e = g.xt.curves.iter().position(|c| c.name == "e").unwrap();
    let mut d = vec![0i64; 2];
    d[e] = 1;
    assert_eq!(cx.embed_xtilde(&d).unwrap(), NovikovImage { x_class: vec![0], q_num: 1 });
    d[e] = 0;
    d[1 - e] = 1;
    assert_eq!(cx.embed_xtilde(&d).unwrap(), NovikovImage { x_class: vec![1], q_num: -1 });
    assert!(cx.embed_xtilde(&[-1, 0]).is_err());
    // Z is a point: only the empty class
    assert_eq!(cx.embed_z(&[]).unwrap(), NovikovImage { x_class: vec![0], q_num: 0 });
    assert!(h_z(&g, 0).unwrap().is_zero());

    let g3 = load_bundled_blowup("P3-blowup-point").unwrap();
    let cx3 = EmbeddingContext::new(&g3).unwrap();
    let e3 = g3.xt.curves.iter().position(|c| c.name == "e").unwrap();
    let mut d = vec![0i64; 2];
    d[e3] = 1;
    // 𝔮^{1} is 𝔮^{4/𝔰} with 𝔰 = 4
    assert_eq!(cx3.embed_xtilde(&d).unwrap().q_num, 4);
}

proptest! {
    #[test]
    fn embedding_preserves_degree(a in 0i64..6, b in 0i64..6) {
        for name in ["P2-blowup-point", "P3-blowup-point", "synthetic-hodge"] {
            let g = load_bundled_blowup(name).unwrap();
            let cx = EmbeddingContext::new(&g).unwrap();
            prop_assert!(cx.degrees_preserved(&[a, b], &[]).unwrap(), "{}", name);
        }
    }

    #[test]
    fn embedding_is_additive(a in 0i64..5, b in 0i64..5, c in 0i64..5, d in 0i64..5) {
        let g = load_bundled_blowup("P2-blowup-point").unwrap();
        let cx = EmbeddingContext::new(&g).unwrap();
        let x = cx.embed_xtilde(&[a, b]).unwrap();
        let y = cx.embed_xtilde(&[c, d]).unwrap();
        let s = cx.embed_xtilde(&[a + c, b + d]).unwrap();
        prop_assert_eq!(s.q_num, x.q_num + y.q_num);
        prop_assert_eq!(s.x_class[0], x.x_class[0] + y.x_class[0]);
    }
}
