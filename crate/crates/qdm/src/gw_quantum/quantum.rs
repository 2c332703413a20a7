//! Big quantum products and fundamental solutions.

use std::collections::{BTreeMap, HashMap};
use std::sync::Arc;

use num_traits::{One, Zero};

use super::{multisets, vdim2, weight2, GWStore, GwBounds, GwError};
use crate::exact_arith::linalg::RatMatrix;
use crate::exact_arith::{factorial, Cyclo, Rational};
use crate::geometry_model::CohomologyModel;
use crate::graded_series::{Laurent, Monomial, Outer, Ring, Series, TruncationPolicy, VarKind, OUTER_ONE};

/// Places a scalar series at entry (i, j) of an otherwise zero matrix.
fn at_entry(s: &Series, i: usize, j: usize, rows: usize, cols: usize) -> Series {
    let mut blocks = BTreeMap::new();
    for (o, b) in s.blocks() {
        let mut v = vec![Laurent::zero(); rows * cols];
        v[i * cols + j] = b[0].clone();
        blocks.insert(*o, v);
    }
    Series::from_blocks(s.ring(), s.policy(), rows, cols, blocks)
}

fn rat_matrix_series(ring: &Arc<Ring>, policy: &Arc<TruncationPolicy>, m: &RatMatrix) -> Series {
    Series::from_matrix(ring, policy, m.rows(), m.cols(), |i, j| m.get(i, j).clone())
}

/// An ample-weight class: ω ∈ H² with ω·g equal to each generator's weight.
/// Classes of type (1,1) are preferred.
pub fn ample_class(model: &CohomologyModel) -> Result<Vec<Rational>, GwError> {
    let divs = model.divisors();
    let hodge: Vec<usize> = divs.iter().copied().filter(|&d| model.hodge[d].0 == model.hodge[d].1).collect();
    let rhs: Vec<Rational> = model.curves.iter().map(|c| Rational::from_integer(c.omega.into())).collect();
    for cols in [hodge, divs] {
        let m = RatMatrix::from_rows(model.curves.iter().map(|c| cols.iter().map(|&d| c.dot[d].clone()).collect()).collect());
        if cols.is_empty() {
            continue;
        }
        if let Some(x) = m.solve(&rhs) {
            let mut out = vec![Rational::zero(); model.n()];
            for (k, &d) in cols.iter().enumerate() {
                out[d] = x[k].clone();
            }
            return Ok(out);
        }
    }
    if model.curves.is_empty() {
        return Ok(vec![Rational::zero(); model.n()]);
    }
    Err(GwError::NoAmpleClass)
}

/// The operators φ_i ★_τ for a fixed parameter point τ (a vector of scalar
/// series) and Novikov images Q^{g} ↦ `novikov[g]`.
#[derive(Debug, Clone)]
pub struct QuantumProduct {
    ops: Vec<Series>,
}

impl QuantumProduct {
    pub fn new(store: &GWStore, ring: &Arc<Ring>, policy: &Arc<TruncationPolicy>, novikov: &[Series], tau: &[Series]) -> Result<Self, GwError> {
        let model = store.model();
        let n = model.n();
        assert_eq!(tau.len(), n);
        assert_eq!(novikov.len(), model.curves.len());
        for a in 0..n {
            if tau[a].is_empty() {
                continue;
            }
            if model.is_odd(a) {
                return Err(GwError::Unsupported("odd parameter directions in the quantum product".into()));
            }
            if model.degrees[a] == 2 && tau[a].blocks().get(&OUTER_ONE).is_some_and(|b| !b[0].is_empty()) {
                return Err(GwError::Unsupported("base point with a divisor component (absorb it into the Novikov variables)".into()));
            }
        }
        let ginv = &model.pairing_inv;
        let mut ops: Vec<Series> =
            (0..n).map(|i| rat_matrix_series(ring, policy, &model.cup_matrix(&model.basis_vec(i)))).collect();

        let prim: Vec<usize> = model.primitive_classes().into_iter().filter(|&a| !tau[a].is_empty()).collect();
        let mut power_cache: HashMap<(usize, usize), Series> = HashMap::new();
        let mut tau_s = |s: &[usize]| -> Series {
            let mut out = Series::one(ring, policy);
            let mut k = 0;
            while k < s.len() {
                let a = s[k];
                let cnt = s[k..].iter().take_while(|&&x| x == a).count();
                let p = power_cache
                    .entry((a, cnt))
                    .or_insert_with(|| {
                        let mut p = Series::one(ring, policy);
                        for _ in 0..cnt {
                            p = p.mul(&tau[a]);
                        }
                        p.scale_rat(&Rational::new(1.into(), factorial(cnt as u64)))
                    })
                    .clone();
                out = out.mul(&p);
                k += cnt;
            }
            out
        };

        for d in store.classes() {
            // image of Q^d
            let qd = {
                let mut out = Series::one(ring, policy);
                for (g, &e) in d.iter().enumerate() {
                    for _ in 0..e {
                        out = out.mul(&novikov[g]);
                    }
                }
                out
            };
            if qd.is_empty() {
                continue;
            }
            let mut div = Series::scalar_zero(ring, policy);
            for dv in model.divisors() {
                let c = model.dot_of(dv, d);
                if !c.is_zero() && !tau[dv].is_empty() {
                    div = div.add(&tau[dv].scale_rat(&c));
                }
            }
            let factor = qd.mul(&div.exp()?);
            if factor.is_empty() {
                continue;
            }

            // S-sums grouped by the doubled weight they must carry
            let mut by_weight: HashMap<i32, Vec<(Vec<usize>, Series)>> = HashMap::new();
            let vd = vdim2(model, d);
            for i in 0..n {
                for l in 0..n {
                    for m in 0..n {
                        if [i, l, m].contains(&model.unit) {
                            continue;
                        }
                        let base: i32 = [i, l, m].iter().filter(|&&x| x != model.unit && model.degrees[x] != 2).map(|&x| weight2(model, x)).sum();
                        let w = vd - base;
                        let list = by_weight.entry(w).or_insert_with(|| {
                            multisets(model, &prim, w).into_iter().map(|s| {
                                let t = tau_s(&s);
                                (s, t)
                            }).filter(|(_, t)| !t.is_empty()).collect()
                        });
                        let mut v = Series::scalar_zero(ring, policy);
                        for (s, t) in list.iter() {
                            let mut ins = vec![i, l, m];
                            ins.extend(s);
                            let c = store.correlator(d, &ins)?;
                            if !c.is_zero() {
                                v = v.add(&t.scale_rat(&c));
                            }
                        }
                        if v.is_empty() {
                            continue;
                        }
                        let v = v.mul(&factor);
                        for k in 0..n {
                            let g = ginv.get(m, k);
                            if !g.is_zero() {
                                ops[i] = ops[i].add(&at_entry(&v.scale_rat(g), k, l, n, n));
                            }
                        }
                    }
                }
            }
        }
        Ok(QuantumProduct { ops })
    }

    /// φ_i ★_τ as an n×n matrix acting on coordinate columns.
    pub fn operator(&self, i: usize) -> &Series {
        &self.ops[i]
    }

    pub fn operator_of(&self, alpha: &[Rational]) -> Series {
        let mut out = self.ops[0].zero_like();
        for (i, a) in alpha.iter().enumerate() {
            if !a.is_zero() {
                out = out.add(&self.ops[i].scale_rat(a));
            }
        }
        out
    }

    /// α ★_τ β as a column.
    pub fn product(&self, alpha: &[Rational], beta: &[Rational]) -> Series {
        let n = beta.len();
        let op = self.operator_of(alpha);
        let col = Series::from_matrix(op.ring(), op.policy(), n, 1, |i, _| beta[i].clone());
        op.mul(&col)
    }
}

/// Where a fundamental solution lives: the ring, its truncation, the ring
/// variables standing for the Novikov generators and the parameters, and the
/// base point τ₀ (outer-constant scalar series, no divisor part).
#[derive(Debug, Clone)]
pub struct SolutionSetup {
    pub ring: Arc<Ring>,
    pub policy: Arc<TruncationPolicy>,
    pub novikov_vars: Vec<usize>,
    pub params: Vec<Option<usize>>,
    pub base: Vec<Series>,
}

impl SolutionSetup {
    /// Zero base point.
    pub fn at_origin(ring: &Arc<Ring>, policy: &Arc<TruncationPolicy>, novikov_vars: Vec<usize>, params: Vec<Option<usize>>) -> Self {
        let n = params.len();
        SolutionSetup { ring: ring.clone(), policy: policy.clone(), novikov_vars, params, base: vec![Series::scalar_zero(ring, policy); n] }
    }

    pub fn tau(&self) -> Result<Vec<Series>, GwError> {
        let mut out = Vec::with_capacity(self.params.len());
        for (a, p) in self.params.iter().enumerate() {
            let mut t = self.base[a].clone();
            if let Some(v) = p {
                let name = self.ring.vars()[*v].name.clone();
                t = t.add(&Series::var(&self.ring, &self.policy, &name)?);
            }
            out.push(t);
        }
        Ok(out)
    }

    fn novikov_images(&self) -> Result<Vec<Series>, GwError> {
        self.novikov_vars.iter().map(|&v| Ok(Series::var(&self.ring, &self.policy, &self.ring.vars()[v].name.clone())?)).collect()
    }
}

/// M(τ₀ + t) with z∂_{t_a}M = M∘(φ_a ★_{τ₀+t}), M = e^{τ₀/z} at Q = t = 0.
#[derive(Debug, Clone)]
pub struct FundamentalSolution {
    pub setup: SolutionSetup,
    pub omega: Vec<Rational>,
    m: Series,
    qp: QuantumProduct,
}

fn mat_mul(a: &[Laurent], b: &[Laurent], n: usize, out: &mut [Laurent]) {
    for i in 0..n {
        for k in 0..n {
            let x = &a[i * n + k];
            if x.is_exact_zero() {
                continue;
            }
            for j in 0..n {
                let y = &b[k * n + j];
                if !y.is_exact_zero() {
                    x.mul_acc(y, &mut out[i * n + j]);
                }
            }
        }
    }
}

fn is_zero_block(b: &[Laurent]) -> bool {
    b.iter().all(|l| l.is_exact_zero())
}

fn trunc_block(b: &mut [Laurent], policy: &TruncationPolicy) {
    for l in b.iter_mut() {
        l.floor_q(policy.min_q);
        if policy.drop_z_below {
            *l = l.filter(|_, z| z >= policy.z_window.0);
        }
    }
}

pub fn fundamental_solution(store: &GWStore, setup: &SolutionSetup) -> Result<FundamentalSolution, GwError> {
    let model = store.model();
    let n = model.n();
    let ring = &setup.ring;
    let policy = &setup.policy;
    for (g, &v) in setup.novikov_vars.iter().enumerate() {
        let spec = &ring.vars()[v];
        if spec.kind != VarKind::Novikov || spec.weight != model.curves[g].omega {
            return Err(GwError::Unsupported(format!("ring variable {} does not match curve weight of {}", spec.name, model.curves[g].name)));
        }
    }
    for (a, p) in setup.params.iter().enumerate() {
        if let Some(v) = p {
            let spec = &ring.vars()[*v];
            if spec.odd || model.is_odd(a) {
                return Err(GwError::Unsupported("fundamental solutions in odd parameter directions".into()));
            }
            if spec.kind != VarKind::Parameter {
                return Err(GwError::Unsupported(format!("{} is not a parameter variable", spec.name)));
            }
        }
        if setup.base[a].blocks().keys().any(|o| *o != OUTER_ONE) {
            return Err(GwError::Unsupported("base point must be constant in the outer variables".into()));
        }
    }
    let caps: Vec<Option<u32>> = setup
        .novikov_vars
        .iter()
        .map(|&v| policy.novikov_caps.iter().find(|(i, _)| *i == v).map(|&(_, c)| c as u32))
        .collect();
    let need = GwBounds { max_weight: policy.max_novikov_weight, caps };
    if !store.bounds().dominates(model, &need) {
        return Err(GwError::Coverage { class: format!("weight {}", policy.max_novikov_weight), n: 0 });
    }

    let omega = ample_class(model)?;
    let tau = setup.tau()?;
    let qp = QuantumProduct::new(store, ring, policy, &setup.novikov_images()?, &tau)?;

    // K = (ω + t) ★
    let mut k = qp.operator_of(&omega);
    for (a, p) in setup.params.iter().enumerate() {
        if let Some(v) = p {
            let t = Series::var(ring, policy, &ring.vars()[*v].name.clone())?;
            k = k.add(&t.mul(qp.operator(a)));
        }
    }
    let omega_cup = model.cup_matrix(&omega);
    let om: Vec<Laurent> = (0..n * n)
        .map(|x| {
            let v = omega_cup.get(x / n, x % n);
            if v.is_zero() {
                Laurent::zero()
            } else {
                Laurent::monomial(0, 0, Cyclo::from_rational(ring.order(), v))
            }
        })
        .collect();

    // F_1 = e^{τ₀∪/z}
    let mut t0 = Series::zero(ring, policy, n, n);
    for a in 0..n {
        if !setup.base[a].is_empty() {
            let cup = rat_matrix_series(ring, policy, &model.cup_matrix(&model.basis_vec(a)));
            t0 = t0.add(&setup.base[a].mul(&cup));
        }
    }
    let f1 = t0.shift(0, -1).exp()?;

    let mut f: BTreeMap<Outer, Vec<Laurent>> = f1.blocks().clone();
    let kb: Vec<(Outer, u32, Vec<Laurent>)> =
        k.blocks().iter().filter(|(o, _)| **o != OUTER_ONE).map(|(o, b)| (*o, ring.filtration(o), b.clone())).collect();
    let max_w = policy.max_novikov_weight + policy.max_parameter_order;
    for w in 1..=max_w {
        let mut r: BTreeMap<Outer, Vec<Laurent>> = BTreeMap::new();
        for (m1, fb) in &f {
            let w1 = ring.filtration(m1);
            if w1 >= w {
                continue;
            }
            for (m2, w2, kblk) in &kb {
                if w1 + w2 != w {
                    continue;
                }
                let Some((mu, neg)) = ring.outer_mul(m1, m2) else { continue };
                debug_assert!(!neg);
                if !policy.admits(ring, &mu) {
                    continue;
                }
                let acc = r.entry(mu).or_insert_with(|| vec![Laurent::zero(); n * n]);
                mat_mul(fb, kblk, n, acc);
            }
        }
        let wr = Rational::from_integer(w.into());
        for (mu, rb) in r {
            let mut x = rb;
            let mut out = vec![Laurent::zero(); n * n];
            let mut scale = Rational::one() / &wr;
            for m in 0..=(2 * n + 2) {
                if is_zero_block(&x) {
                    break;
                }
                for (o, xi) in out.iter_mut().zip(&x) {
                    o.add_assign(&xi.shift(0, -(m as i32 + 1)).scale_rat(&scale));
                }
                scale = -scale / &wr;
                // ad_ω(x) = ωx − xω
                let mut nx = vec![Laurent::zero(); n * n];
                mat_mul(&om, &x, n, &mut nx);
                let mut xo = vec![Laurent::zero(); n * n];
                mat_mul(&x, &om, n, &mut xo);
                for (a, b) in nx.iter_mut().zip(&xo) {
                    a.sub_assign(b);
                }
                x = nx;
            }
            trunc_block(&mut out, policy);
            if !is_zero_block(&out) {
                f.insert(mu, out);
            }
        }
    }
    let m = Series::from_blocks(ring, policy, n, n, f);
    Ok(FundamentalSolution { setup: setup.clone(), omega, m, qp })
}

impl FundamentalSolution {
    pub fn series(&self) -> &Series {
        &self.m
    }

    pub fn quantum_product(&self) -> &QuantumProduct {
        &self.qp
    }

    /// e^{−τ₀∪/z}·M(τ₀ + t), which is Id at Q = t = 0.
    pub fn block(&self, model: &CohomologyModel) -> Result<Series, GwError> {
        let ring = &self.setup.ring;
        let policy = &self.setup.policy;
        let n = model.n();
        let mut t0 = Series::zero(ring, policy, n, n);
        for a in 0..n {
            if !self.setup.base[a].is_empty() {
                let cup = rat_matrix_series(ring, policy, &model.cup_matrix(&model.basis_vec(a)));
                t0 = t0.add(&self.setup.base[a].mul(&cup));
            }
        }
        Ok(t0.shift(0, -1).neg().exp()?.mul(&self.m))
    }

    /// First coefficient where z∂_{t_a}M ≠ M∘(φ_a★), among coefficients both
    /// sides determine.
    pub fn flatness_witness(&self) -> Option<(usize, Monomial, usize, usize)> {
        let pol = &self.setup.policy;
        for (a, p) in self.setup.params.iter().enumerate() {
            let Some(v) = p else { continue };
            let lhs = self.m.derivative(*v).shift(0, 1);
            let rhs = self.m.mul(self.qp.operator(a));
            let diff = lhs.sub(&rhs);
            for (mono, i, j, _) in diff.iter_terms() {
                let inside = self.setup.ring.parameter_order(&mono.outer) < pol.max_parameter_order
                    && (!pol.drop_z_below || mono.z > pol.z_window.0);
                if inside {
                    return Some((a, mono, i, j));
                }
            }
        }
        None
    }
}

/// M(τ + c·h; Q) = e^{c·h/z} M(τ; Q e^{c·h}) for a degree-2 class h, with
/// the first divisor parameter playing the formal scalar c and all divisor
/// parameters otherwise set to zero.
pub fn divisor_shift_check(fs: &FundamentalSolution, model: &CohomologyModel, h: &[Rational]) -> Result<bool, GwError> {
    if h.iter().all(|x| x.is_zero()) {
        return Ok(true);
    }
    if h.iter().enumerate().any(|(i, x)| !x.is_zero() && model.degrees[i] != 2) {
        return Err(GwError::Unsupported("divisor shift by a class outside H^2".into()));
    }
    let ring = &fs.setup.ring;
    let policy = &fs.setup.policy;
    let divs = model.divisors();
    let Some(cvar) = divs.iter().find_map(|&d| fs.setup.params[d]) else {
        return Err(GwError::Unsupported("no divisor parameter to carry the formal scalar".into()));
    };
    let cname = ring.vars()[cvar].name.clone();
    let c = Series::var(ring, policy, &cname)?;
    let zero = Series::scalar_zero(ring, policy);

    let mut lhs_assign: Vec<(String, Series)> = Vec::new();
    let mut rhs_assign: Vec<(String, Series)> = Vec::new();
    for &d in &divs {
        if let Some(v) = fs.setup.params[d] {
            let name = ring.vars()[v].name.clone();
            lhs_assign.push((name.clone(), c.scale_rat(&h[d])));
            rhs_assign.push((name, zero.clone()));
        }
    }
    for (g, &v) in fs.setup.novikov_vars.iter().enumerate() {
        let name = ring.vars()[v].name.clone();
        let hd: Rational = (0..model.n()).map(|i| &h[i] * &model.curves[g].dot[i]).sum();
        let q = Series::var(ring, policy, &name)?;
        rhs_assign.push((name, q.mul(&c.scale_rat(&hd).exp()?)));
    }
    let lhs = fs.m.substitute_vars(&as_refs(&lhs_assign))?;
    let shifted = fs.m.substitute_vars(&as_refs(&rhs_assign))?;
    let hcup = rat_matrix_series(ring, policy, &model.cup_matrix(h));
    let rhs = c.mul(&hcup).shift(0, -1).exp()?.mul(&shifted);
    Ok(lhs.sub(&rhs).is_empty())
}

fn as_refs(v: &[(String, Series)]) -> Vec<(&str, Series)> {
    v.iter().map(|(n, s)| (n.as_str(), s.clone())).collect()
}

/// Every stored correlator, and every three-point correlator of basis
/// classes in a stored curve class, vanishes unless Σp = Σq.
pub fn correlator_hodge_check(store: &GWStore) -> Result<bool, GwError> {
    let model = store.model();
    let balanced = |ins: &[usize]| {
        let (p, q) = ins.iter().fold((0, 0), |(p, q), &i| (p + model.hodge[i].0, q + model.hodge[i].1));
        p == q
    };
    for (k, (v, _)) in store.entries() {
        if !v.is_zero() && !balanced(&k.insertions) {
            return Ok(false);
        }
    }
    let n = model.n();
    for d in store.classes() {
        for a in 0..n {
            for b in a..n {
                for c in b..n {
                    if !balanced(&[a, b, c]) && !store.correlator(d, &[a, b, c])?.is_zero() {
                        return Ok(false);
                    }
                }
            }
        }
    }
    Ok(true)
}
