//! Acceptance suite: one pass/fail line per criterion, exact comparisons,
//! pinned runtime budgets.  Run with `--nocapture` to see the table.

use std::sync::{Arc, OnceLock};
use std::time::{Duration, Instant};

use proptest::strategy::{Strategy, ValueTree};
use proptest::test_runner::TestRunner;
use qdm::decomposition::*;
use qdm::exact_arith::linalg::RatMatrix;
use qdm::exact_arith::{rat, rat_int, Cyclo, Rational};
use qdm::geometry_model::{load_bundled_blowup, load_bundled_model, BlowupGeometry};
use qdm::graded_series::{Outer, Ring, Series, TruncationPolicy, VariableSpec, OUTER_ONE};
use qdm::gw_quantum::{correlator_hodge_check, divisor_shift_check, reconstruct_gw, GwBounds};
use qdm::init_conditions::{check_property_b, check_property_e, tau_init, InitialConditions};
use qdm::verify::{associativity_witness, model_solution, plane_counts};

type Verdict = Result<(), String>;

struct Line {
    id: u32,
    name: &'static str,
    budget: Duration,
    elapsed: Duration,
    verdict: Verdict,
}

fn run(id: u32, name: &'static str, budget_s: u64, f: impl FnOnce() -> Verdict) -> Line {
    let t = Instant::now();
    let verdict = f();
    Line { id, name, budget: Duration::from_secs(budget_s), elapsed: t.elapsed(), verdict }
}

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Verdict {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn none(w: Option<String>) -> Verdict {
    w.map_or(Ok(()), Err)
}

fn solved(name: &str) -> &'static (BlowupGeometry, DecompositionResult) {
    static P2: OnceLock<(BlowupGeometry, DecompositionResult)> = OnceLock::new();
    static P3: OnceLock<(BlowupGeometry, DecompositionResult)> = OnceLock::new();
    let cell = if name == "P2-blowup-point" { &P2 } else { &P3 };
    cell.get_or_init(|| {
        let g = load_bundled_blowup(name).unwrap();
        let res = decompose(&g, &DecompBounds::default()).unwrap();
        (g, res)
    })
}

fn c1_gw_oracle() -> Verdict {
    let p2 = load_bundled_model("P2").map_err(|e| e.to_string())?;
    let store = reconstruct_gw(&p2, &GwBounds::weight(4)).map_err(|e| e.to_string())?;
    let got = plane_counts(&store)?;
    let want: Vec<Rational> = [1, 1, 12, 620].into_iter().map(rat_int).collect();
    ensure(got == want, || format!("N_d = {got:?}"))?;
    // conics through five general points: one-dimensional solution space
    let pts = [(0i64, 1i64), (1, 3), (2, -1), (-3, 2), (5, 7)];
    let rows = pts.iter().map(|&(x, y)| [x * x, x * y, y * y, x, y, 1].iter().map(|&v| rat_int(v)).collect()).collect();
    let conics = 6 - RatMatrix::from_rows(rows).rank();
    ensure(got[1] == rat_int(conics as i64), || format!("linear-algebra oracle gives {conics} conics"))
}

fn c2_tau_init() -> Verdict {
    let g = load_bundled_blowup("P2-blowup-point").map_err(|e| e.to_string())?;
    let b = DecompBounds { margin: 0, ..DecompBounds::default() };
    let dr = DecompRing::new(&g, &b).map_err(|e| e.to_string())?;
    let tau = tau_init(&g, &dr.ring, &dr.policy).map_err(|e| e.to_string())?;
    let pt = g.x.index("pt").unwrap();
    let mut want = Series::zero(&dr.ring, &dr.policy, g.x.n(), 1);
    want.add_entry_term(OUTER_ONE, pt, 0, -1, 0, &Cyclo::one(dr.ring.order()));
    ensure(tau.sub(&want).is_empty(), || format!("τ° = {}", tau.render()))?;
    let ic = InitialConditions::compute(&g, &dr.ring, &dr.policy).map_err(|e| e.to_string())?;
    none(check_property_b(&g, &ic))
}

fn c3_leading_terms() -> Verdict {
    for name in ["P2-blowup-point", "P3-blowup-point"] {
        let g = load_bundled_blowup(name).map_err(|e| e.to_string())?;
        let b = DecompBounds { margin: 0, ..DecompBounds::order(0) };
        let dr = DecompRing::new(&g, &b).map_err(|e| e.to_string())?;
        let ic = InitialConditions::compute(&g, &dr.ring, &dr.policy).map_err(|e| e.to_string())?;
        none(check_property_e(&g, &ic).map(|w| format!("{name}: {w}")))?;
    }
    Ok(())
}

fn c4_cross_check() -> Verdict {
    let (g, res) = solved("P2-blowup-point");
    let cc = cross_check_mprime(g, res).map_err(|e| e.to_string())?;
    ensure(cc.agree, || cc.witness.clone().unwrap_or_default())
}

fn c5_cyclotomic() -> Verdict {
    let (g, res) = solved("P3-blowup-point");
    none(check_cyclotomic(g, res))
}

fn c6_monodromy() -> Verdict {
    let (g, res) = solved("P3-blowup-point");
    ensure(g.r == 3, || "not codimension 3".into())?;
    none(check_monodromy(res))
}

fn c7_homogeneity() -> Verdict {
    for name in ["P2-blowup-point", "P3-blowup-point"] {
        let (g, res) = solved(name);
        none(check_homogeneity(g, res).map(|w| format!("{name}: {w}")))?;
    }
    Ok(())
}

fn c8_jacobian() -> Verdict {
    for name in ["P2-blowup-point", "P3-blowup-point"] {
        let (_, res) = solved(name);
        none(check_jacobian(res).map(|w| format!("{name}: {w}")))?;
    }
    Ok(())
}

fn c9_hodge() -> Verdict {
    let b = DecompBounds::default();
    let g = load_bundled_blowup("synthetic-hodge").map_err(|e| e.to_string())?;
    let res = decompose(&g, &b).map_err(|e| e.to_string())?;
    none(check_hodge_restricted(&g, &res))?;
    let f = load_bundled_blowup("synthetic-hodge-fault").map_err(|e| e.to_string())?;
    let rf = decompose(&f, &b).map_err(|e| e.to_string())?;
    ensure(check_hodge_restricted(&f, &rf).is_some(), || "injected fault not detected".into())
}

fn eps_outer(k: u8) -> Outer {
    let mut o = OUTER_ONE;
    o[0] = k;
    o
}

fn random_birkhoff_instance(v: &[i64]) -> Verdict {
    let ring = Ring::plain(vec![VariableSpec::parameter("e", 0)], 4).unwrap();
    let pol = Arc::new(TruncationPolicy::new(0, 2));
    let c = |n: i64| Cyclo::from_int(4, n);
    let (p, rest) = v.split_at(4);
    let det = p[0] * p[3] - p[1] * p[2];
    if det == 0 {
        return Ok(());
    }
    let mut l = Series::identity(&ring, &pol, 2);
    let mut u = Series::identity(&ring, &pol, 2);
    for k in 0..4 {
        l.add_entry_term(eps_outer(1), k / 2, k % 2, 0, -1, &c(rest[k]));
        l.add_entry_term(eps_outer(2), k / 2, k % 2, 0, -2, &c(rest[4 + k]));
        u.add_entry_term(eps_outer(1), k / 2, k % 2, 0, 1, &c(rest[8 + k]));
        u.add_entry_term(eps_outer(2), k / 2, k % 2, 0, 0, &c(rest[12 + k]));
    }
    let d = rat_int(det);
    let inv = [rat_int(p[3]) / &d, rat_int(-p[1]) / &d, rat_int(-p[2]) / &d, rat_int(p[0]) / &d];
    let psi0 = Series::from_matrix(&ring, &pol, 2, 2, |i, j| rat_int(p[2 * i + j]));
    let psi0_inv = Series::from_matrix(&ring, &pol, 2, 2, |i, j| inv[2 * i + j].clone());
    let m = psi0.mul(&l).mul(&u).mul(&psi0_inv);
    let b = birkhoff_factorize(&m, &psi0).map_err(|e| e.to_string())?;
    ensure(b.m_prime.sub(&l).is_empty(), || format!("M′ not unique for {v:?}"))?;
    ensure(psi0_inv.mul(&b.psi).mul(&u).sub(&Series::identity(&ring, &pol, 2)).is_empty(), || format!("Ψ not unique for {v:?}"))?;
    ensure(birkhoff_residual(&m, &psi0, &b).is_empty(), || format!("reassembly fails for {v:?}"))
}

fn c10_property_suites() -> Verdict {
    // Birkhoff uniqueness and reassembly on 100 random exact instances
    let mut runner = TestRunner::deterministic();
    let strat = proptest::collection::vec(-4i64..5, 20);
    for _ in 0..100 {
        let v = strat.new_tree(&mut runner).map_err(|e| e.to_string())?.current();
        random_birkhoff_instance(&v)?;
    }
    // exp/log round trips on random nilpotent matrices
    let ring = Ring::plain(vec![VariableSpec::parameter("e", 0)], 4).unwrap();
    let pol = Arc::new(TruncationPolicy::new(0, 3));
    let strat = proptest::collection::vec(-5i64..6, 18);
    for _ in 0..50 {
        let v = strat.new_tree(&mut runner).map_err(|e| e.to_string())?.current();
        let mut x = Series::zero(&ring, &pol, 3, 3);
        for (k, &a) in v.iter().enumerate() {
            if a != 0 {
                x.add_entry_term(eps_outer(1 + (k / 9) as u8), (k % 9) / 3, k % 3, 0, -((k % 2) as i32), &Cyclo::from_rational(4, &rat(a, 1 + (k % 3) as i64)));
            }
        }
        let e = x.exp().map_err(|e| e.to_string())?;
        ensure(e.log().map_err(|e| e.to_string())?.sub(&x).is_empty(), || format!("log(exp X) ≠ X for {v:?}"))?;
        ensure(e.unipotent_inverse().map_err(|e| e.to_string())?.mul(&e).sub(&Series::identity(&ring, &pol, 3)).is_empty(), || "inverse".into())?;
    }
    // divisor shift on the plane and on its blowup; WDVV associativity of every product built
    let p2 = load_bundled_model("P2").map_err(|e| e.to_string())?;
    let xt = load_bundled_blowup("P2-blowup-point").map_err(|e| e.to_string())?.xt;
    for model in [&p2, &xt] {
        let (_, fs) = model_solution(model, 3, 2, 4)?;
        none(associativity_witness(model, &fs))?;
        for d in model.divisors() {
            let mut h = model.basis_vec(d);
            h.iter_mut().for_each(|x| *x *= rat(-3, 2));
            ensure(divisor_shift_check(&fs, model, &h).map_err(|e| e.to_string())?, || format!("divisor shift on {}", model.name))?;
        }
    }
    // Hodge correlator check on the elliptic curve
    let ell = load_bundled_model("elliptic-curve").map_err(|e| e.to_string())?;
    let store = reconstruct_gw(&ell, &GwBounds::weight(3)).map_err(|e| e.to_string())?;
    ensure(correlator_hodge_check(&store).map_err(|e| e.to_string())?, || "elliptic-curve store is not Hodge-compatible".into())
}

#[test]
fn acceptance() {
    let lines = vec![
        run(1, "GW oracle: N_1..N_4 of P² = 1, 1, 12, 620", 5, c1_gw_oracle),
        run(2, "τ° = 𝔮⁻¹[pt] exactly on Bl_pt P²", 1, c2_tau_init),
        run(3, "leading terms of Ψ° on both blowups", 30, c3_leading_terms),
        run(4, "M′ cross-check on Bl_pt P²", 300, c4_cross_check),
        run(5, "cyclotomic containment on Bl_pt P³", 600, c5_cyclotomic),
        run(6, "monodromy relations for r = 3", 60, c6_monodromy),
        run(7, "homogeneity and parity sweep", 60, c7_homogeneity),
        run(8, "Jacobian invertibility", 60, c8_jacobian),
        run(9, "Hodge restriction and injected fault", 300, c9_hodge),
        run(10, "property suites", 900, c10_property_suites),
    ];
    let mut failed = Vec::new();
    for l in &lines {
        let within = l.elapsed <= l.budget;
        let ok = l.verdict.is_ok() && within;
        println!(
            "[{}] criterion {:>2}: {:<44} {:>8.2}s / {}s  exact{}",
            if ok { "PASS" } else { "FAIL" },
            l.id,
            l.name,
            l.elapsed.as_secs_f64(),
            l.budget.as_secs(),
            match (&l.verdict, within) {
                (Err(w), _) => format!("  witness: {w}"),
                (Ok(()), false) => "  over budget".into(),
                _ => String::new(),
            }
        );
        if !ok {
            failed.push(l.id);
        }
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
