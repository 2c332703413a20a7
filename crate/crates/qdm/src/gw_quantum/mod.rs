//! Genus-0 Gromov–Witten invariants by WDVV reconstruction, big quantum
//! products and fundamental solutions of the quantum connection.
//!
//! Correlators are stored only for *primitive* insertion lists (no unit,
//! no divisor classes); everything else is reduced to those by the string,
//! divisor and dimension axioms in [`GWStore::correlator`].

mod quantum;

use std::collections::BTreeMap;

use num_traits::{One, Zero};
use thiserror::Error;

use crate::exact_arith::linalg::RatMatrix;
use crate::exact_arith::Rational;
use crate::geometry_model::CohomologyModel;
use crate::graded_series::SeriesError;

pub use quantum::{
    ample_class, correlator_hodge_check, divisor_shift_check, fundamental_solution, FundamentalSolution, QuantumProduct, SolutionSetup,
};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GwError {
    #[error("{0}: even cohomology is not generated by divisors; seed the store from the config instead")]
    NotDivisorGenerated(String),
    #[error("WDVV leaves {unknown} undetermined in class {class}")]
    Underdetermined { class: String, unknown: String },
    #[error("WDVV system inconsistent in class {0}")]
    Inconsistent(String),
    #[error("seed {0} contradicts the divisor/string axioms")]
    BadSeed(String),
    #[error("store does not cover class {class} with {n} insertions")]
    Coverage { class: String, n: usize },
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("no class of degree 2 has the configured ample weights")]
    NoAmpleClass,
    #[error(transparent)]
    Series(#[from] SeriesError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Provenance {
    AxiomForced,
    WdvvDerived,
    ConfigSeeded,
}

/// Which curve classes to reconstruct: total ω-weight and optional
/// per-generator exponent caps.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GwBounds {
    pub max_weight: u32,
    pub caps: Vec<Option<u32>>,
}

impl GwBounds {
    pub fn weight(max_weight: u32) -> Self {
        GwBounds { max_weight, caps: Vec::new() }
    }

    pub fn with_caps(mut self, caps: Vec<Option<u32>>) -> Self {
        self.caps = caps;
        self
    }

    fn admits(&self, model: &CohomologyModel, d: &[u32]) -> bool {
        model.omega_of(d) <= self.max_weight && d.iter().enumerate().all(|(g, &e)| self.caps.get(g).copied().flatten().is_none_or(|c| e <= c))
    }

    /// Whether every class admitted by `other` is admitted here.
    pub fn dominates(&self, model: &CohomologyModel, other: &GwBounds) -> bool {
        enumerate_classes(model, other).iter().all(|d| self.admits(model, d))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct CorrKey {
    pub class: Vec<u32>,
    /// sorted basis indices
    pub insertions: Vec<usize>,
}

#[derive(Debug, Clone)]
pub struct GWStore {
    model: CohomologyModel,
    bounds: GwBounds,
    classes: Vec<Vec<u32>>,
    entries: BTreeMap<CorrKey, (Rational, Provenance)>,
}

/// All nonzero classes within bounds, ordered by weight then exponents.
fn enumerate_classes(model: &CohomologyModel, bounds: &GwBounds) -> Vec<Vec<u32>> {
    let ng = model.curves.len();
    let mut out = Vec::new();
    let mut cur = vec![0u32; ng];
    fn rec(model: &CohomologyModel, bounds: &GwBounds, g: usize, cur: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
        if g == cur.len() {
            if cur.iter().any(|&e| e > 0) {
                out.push(cur.clone());
            }
            return;
        }
        let mut e = 0;
        loop {
            cur[g] = e;
            if !bounds.admits(model, cur) {
                break;
            }
            rec(model, bounds, g + 1, cur, out);
            e += 1;
        }
        cur[g] = 0;
    }
    rec(model, bounds, 0, &mut cur, &mut out);
    out.sort_by_key(|d| (model.omega_of(d), d.clone()));
    out
}

fn render_class(model: &CohomologyModel, d: &[u32]) -> String {
    let parts: Vec<String> = d
        .iter()
        .zip(&model.curves)
        .filter(|(e, _)| **e > 0)
        .map(|(e, c)| if *e == 1 { c.name.clone() } else { format!("{e}{}", c.name) })
        .collect();
    if parts.is_empty() {
        "0".into()
    } else {
        parts.join("+")
    }
}

fn render_insertions(model: &CohomologyModel, ins: &[usize]) -> String {
    let v: Vec<&str> = ins.iter().map(|&i| model.labels[i].as_str()).collect();
    format!("<{}>", v.join(","))
}

/// 2·(deg/2 − 1): the codimension excess of an insertion, doubled.
fn weight2(model: &CohomologyModel, i: usize) -> i32 {
    model.degrees[i] - 2
}

fn vdim2(model: &CohomologyModel, d: &[u32]) -> i32 {
    2 * (model.dim - 3) + 2 * model.c1_of(d) as i32
}

/// Sorts insertions by basis index, returning the Koszul sign, or `None`
/// when an odd class repeats.
fn sort_insertions(model: &CohomologyModel, ins: &[usize]) -> Option<(Vec<usize>, bool)> {
    let mut v = ins.to_vec();
    let mut negative = false;
    // insertion sort, tracking transpositions of odd pairs
    for i in 1..v.len() {
        let mut j = i;
        while j > 0 && v[j - 1] > v[j] {
            if model.is_odd(v[j - 1]) && model.is_odd(v[j]) {
                negative = !negative;
            }
            v.swap(j - 1, j);
            j -= 1;
        }
    }
    if v.windows(2).any(|w| w[0] == w[1] && model.is_odd(w[0])) {
        return None;
    }
    Some((v, negative))
}

/// Axiom reduction of ⟨ins⟩_d for d ≠ 0: `None` if forced to vanish,
/// otherwise `(c, primitive list)` with ⟨ins⟩_d = c·⟨primitive⟩_d.
fn reduce(model: &CohomologyModel, d: &[u32], ins: &[usize]) -> Option<(Rational, Vec<usize>)> {
    if ins.contains(&model.unit) {
        return None;
    }
    let (sorted, negative) = sort_insertions(model, ins)?;
    let mut c = if negative { -Rational::one() } else { Rational::one() };
    let mut prim = Vec::new();
    for &i in &sorted {
        if model.degrees[i] == 2 {
            c *= model.dot_of(i, d);
        } else {
            prim.push(i);
        }
    }
    if c.is_zero() {
        return None;
    }
    if prim.iter().map(|&i| weight2(model, i)).sum::<i32>() != vdim2(model, d) {
        return None;
    }
    Some((c, prim))
}

/// Multisets (sorted lists) of the given classes whose doubled weights sum
/// to `target`; odd classes appear at most once.
fn multisets(model: &CohomologyModel, classes: &[usize], target: i32) -> Vec<Vec<usize>> {
    // negative-weight (odd, degree 1) classes first so the remaining search
    // only involves positive weights
    let mut order: Vec<usize> = classes.to_vec();
    order.sort_by_key(|&i| (weight2(model, i), i));
    let mut out = Vec::new();
    fn rec(model: &CohomologyModel, order: &[usize], k: usize, rest: i32, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if k == order.len() {
            if rest == 0 {
                let mut v = cur.clone();
                v.sort();
                out.push(v);
            }
            return;
        }
        let i = order[k];
        let w = weight2(model, i);
        let remaining_neg: i32 = order[k + 1..].iter().map(|&j| weight2(model, j)).filter(|&x| x < 0).sum();
        let max_rep = if model.is_odd(i) {
            1
        } else if w > 0 {
            ((rest - remaining_neg).max(0) / w) as usize
        } else {
            0
        };
        for rep in 0..=max_rep {
            let r = rest - w * rep as i32;
            if w > 0 && r < remaining_neg {
                break;
            }
            for _ in 0..rep {
                cur.push(i);
            }
            rec(model, order, k + 1, r, cur, out);
            for _ in 0..rep {
                cur.pop();
            }
        }
    }
    rec(model, &order, 0, target, &mut Vec::new(), &mut out);
    out.sort();
    out
}

fn split_multiset(s: &[usize]) -> Vec<(Vec<usize>, Vec<usize>, Rational)> {
    // distinct classes with counts
    let mut counts: Vec<(usize, usize)> = Vec::new();
    for &i in s {
        match counts.last_mut() {
            Some((j, c)) if *j == i => *c += 1,
            _ => counts.push((i, 1)),
        }
    }
    let mut out = vec![(Vec::new(), Vec::new(), Rational::one())];
    for &(i, n) in &counts {
        let mut next = Vec::new();
        for (a, b, m) in &out {
            for k in 0..=n {
                let mut a2 = a.clone();
                let mut b2 = b.clone();
                a2.extend(std::iter::repeat_n(i, k));
                b2.extend(std::iter::repeat_n(i, n - k));
                next.push((a2, b2, m * Rational::from_integer(crate::exact_arith::binomial(n as u64, k as u64).into())));
            }
        }
        out = next;
    }
    out
}

/// Linear form Σ cᵢ·xᵢ + c₀ over the unknowns of one class.
#[derive(Debug, Clone, Default)]
struct LinForm {
    coeffs: BTreeMap<usize, Rational>,
    constant: Rational,
}

impl LinForm {
    fn add_scaled(&mut self, o: &LinForm, s: &Rational) {
        if s.is_zero() {
            return;
        }
        for (k, v) in &o.coeffs {
            let e = self.coeffs.entry(*k).or_insert_with(Rational::zero);
            *e += v * s;
        }
        self.constant += &o.constant * s;
    }

    fn is_zero(&self) -> bool {
        self.constant.is_zero() && self.coeffs.values().all(|v| v.is_zero())
    }
}

struct Solver<'a> {
    store: &'a GWStore,
    current: Vec<u32>,
    unknowns: BTreeMap<Vec<usize>, usize>,
}

impl Solver<'_> {
    fn eval(&self, d: &[u32], ins: &[usize]) -> Result<LinForm, GwError> {
        let mut f = LinForm::default();
        if d.iter().all(|&e| e == 0) {
            if ins.len() == 3 {
                f.constant = self.store.model.triple(ins[0], ins[1], ins[2]);
            }
            return Ok(f);
        }
        let Some((c, prim)) = reduce(&self.store.model, d, ins) else { return Ok(f) };
        if d == self.current.as_slice() {
            match self.unknowns.get(&prim) {
                Some(&k) => {
                    f.coeffs.insert(k, c);
                }
                None => unreachable!("primitive list outside the unknown set"),
            }
        } else {
            f.constant = c * self.store.primitive(d, &prim)?;
        }
        Ok(f)
    }
}

impl GWStore {
    pub fn model(&self) -> &CohomologyModel {
        &self.model
    }

    pub fn bounds(&self) -> &GwBounds {
        &self.bounds
    }

    pub fn classes(&self) -> &[Vec<u32>] {
        &self.classes
    }

    pub fn entries(&self) -> &BTreeMap<CorrKey, (Rational, Provenance)> {
        &self.entries
    }

    pub fn covers(&self, d: &[u32]) -> bool {
        d.iter().all(|&e| e == 0) || self.bounds.admits(&self.model, d)
    }

    /// Injects an entry (used by detector tests and config seeding).
    pub fn insert(&mut self, key: CorrKey, value: Rational, prov: Provenance) {
        self.entries.insert(key, (value, prov));
    }

    fn primitive(&self, d: &[u32], prim: &[usize]) -> Result<Rational, GwError> {
        if !self.covers(d) {
            return Err(GwError::Coverage { class: render_class(&self.model, d), n: prim.len() });
        }
        Ok(self.entries.get(&CorrKey { class: d.to_vec(), insertions: prim.to_vec() }).map(|e| e.0.clone()).unwrap_or_default())
    }

    /// ⟨φ_{i_1}, …, φ_{i_n}⟩_{0,n,d} in the given insertion order.
    pub fn correlator(&self, d: &[u32], ins: &[usize]) -> Result<Rational, GwError> {
        if d.iter().all(|&e| e == 0) {
            if ins.len() != 3 {
                return Ok(Rational::zero());
            }
            return Ok(self.model.triple(ins[0], ins[1], ins[2]));
        }
        match reduce(&self.model, d, ins) {
            None => Ok(Rational::zero()),
            Some((c, prim)) => Ok(c * self.primitive(d, &prim)?),
        }
    }

    pub fn render_class(&self, d: &[u32]) -> String {
        render_class(&self.model, d)
    }

    pub fn render_key(&self, k: &CorrKey) -> String {
        format!("{}_{}", render_insertions(&self.model, &k.insertions), render_class(&self.model, &k.class))
    }
}

/// WDVV reconstruction of every primitive correlator within `bounds`.
pub fn reconstruct_gw(model: &CohomologyModel, bounds: &GwBounds) -> Result<GWStore, GwError> {
    if !model.divisor_generated() {
        return Err(GwError::NotDivisorGenerated(model.name.clone()));
    }
    let n = model.n();
    let classes = enumerate_classes(model, bounds);
    let mut store = GWStore { model: model.clone(), bounds: bounds.clone(), classes: classes.clone(), entries: BTreeMap::new() };
    for a in 0..n {
        for b in a..n {
            for c in b..n {
                let v = model.triple(a, b, c);
                store.entries.insert(CorrKey { class: vec![0; model.curves.len()], insertions: vec![a, b, c] }, (v, Provenance::AxiomForced));
            }
        }
    }
    let primitive = model.primitive_classes();
    let even_primitive: Vec<usize> = primitive.iter().copied().filter(|&i| !model.is_odd(i)).collect();
    let externals: Vec<usize> = (0..n).filter(|&i| i != model.unit && !model.is_odd(i)).collect();
    let ginv = &model.pairing_inv;

    for d in &classes {
        let unknown_lists = multisets(model, &primitive, vdim2(model, d));
        if unknown_lists.is_empty() {
            continue;
        }
        let unknowns: BTreeMap<Vec<usize>, usize> = unknown_lists.iter().cloned().enumerate().map(|(k, v)| (v, k)).collect();
        let solver = Solver { store: &store, current: d.clone(), unknowns };
        let mut rows: Vec<LinForm> = Vec::new();
        let mut seeded = vec![false; unknown_lists.len()];

        for s in &model.seeds {
            if &s.class != d {
                continue;
            }
            let f = solver.eval(d, &s.insertions)?;
            if f.coeffs.is_empty() {
                return Err(GwError::BadSeed(format!("{}_{}", render_insertions(model, &s.insertions), render_class(model, d))));
            }
            for k in f.coeffs.keys() {
                seeded[*k] = true;
            }
            let mut row = f;
            row.constant -= &s.value;
            rows.push(row);
        }

        // lower classes d1 + d2 = d (including 0 and d itself)
        let mut splits: Vec<(Vec<u32>, Vec<u32>)> = Vec::new();
        let mut part = vec![0u32; d.len()];
        fn rec_split(d: &[u32], g: usize, part: &mut Vec<u32>, out: &mut Vec<(Vec<u32>, Vec<u32>)>) {
            if g == d.len() {
                out.push((part.clone(), d.iter().zip(part.iter()).map(|(a, b)| a - b).collect()));
                return;
            }
            for e in 0..=d[g] {
                part[g] = e;
                rec_split(d, g + 1, part, out);
            }
            part[g] = 0;
        }
        rec_split(d, 0, &mut part, &mut splits);

        let total = 2 * (model.dim - 4) + 2 * model.c1_of(d) as i32;
        let nonzero_pairs: Vec<(usize, usize, Rational)> =
            (0..n).flat_map(|k| (0..n).map(move |l| (k, l))).filter_map(|(k, l)| { let v = ginv.get(k, l); (!v.is_zero()).then(|| (k, l, v.clone())) }).collect();
        for &a in &externals {
            for &b in &externals {
                for &c in &externals {
                    if c <= b {
                        continue; // the equation is antisymmetric in b, c
                    }
                    for &e in &externals {
                        let w: i32 = [a, b, c, e].iter().map(|&i| weight2(model, i)).sum();
                        for s in multisets(model, &even_primitive, total - w) {
                            let mut row = LinForm::default();
                            for (s1, s2, mult) in split_multiset(&s) {
                                for (d1, d2) in &splits {
                                    for &(k, l, ref g) in &nonzero_pairs {
                                        let coef = &mult * g;
                                        for (x, y, sign) in [(b, c, Rational::one()), (c, b, -Rational::one())] {
                                            let mut left: Vec<usize> = vec![a, x];
                                            left.extend(&s1);
                                            left.push(k);
                                            let mut right: Vec<usize> = vec![l, y, e];
                                            right.extend(&s2);
                                            let lf = solver.eval(d1, &left)?;
                                            if lf.is_zero() {
                                                continue;
                                            }
                                            let rf = solver.eval(d2, &right)?;
                                            if rf.is_zero() {
                                                continue;
                                            }
                                            // at most one factor involves the current class
                                            let (lin, scal) = if lf.coeffs.is_empty() { (&rf, &lf.constant) } else { (&lf, &rf.constant) };
                                            debug_assert!(lf.coeffs.is_empty() || rf.coeffs.is_empty());
                                            row.add_scaled(lin, &(scal * &coef * &sign));
                                        }
                                    }
                                }
                            }
                            if !row.is_zero() {
                                rows.push(row);
                            }
                        }
                    }
                }
            }
        }

        let nu = unknown_lists.len();
        let mat = RatMatrix::from_rows(
            rows.iter()
                .map(|r| {
                    let mut v = vec![Rational::zero(); nu + 1];
                    for (k, c) in &r.coeffs {
                        v[*k] = c.clone();
                    }
                    v[nu] = -r.constant.clone();
                    v
                })
                .collect(),
        );
        let (rref, pivots) = if rows.is_empty() { (RatMatrix::zeros(0, nu + 1), Vec::new()) } else { mat.rref() };
        if pivots.contains(&nu) {
            return Err(GwError::Inconsistent(render_class(model, d)));
        }
        if pivots.len() < nu {
            let free = (0..nu).find(|k| !pivots.contains(k)).unwrap();
            return Err(GwError::Underdetermined { class: render_class(model, d), unknown: render_insertions(model, &unknown_lists[free]) });
        }
        drop(solver);
        for (row, &p) in pivots.iter().enumerate() {
            let key = CorrKey { class: d.clone(), insertions: unknown_lists[p].clone() };
            let prov = if seeded[p] { Provenance::ConfigSeeded } else { Provenance::WdvvDerived };
            store.entries.insert(key, (rref.get(row, nu).clone(), prov));
        }
    }
    Ok(store)
}
