//! Reconstruction of the decomposition Ψ, τ(τ̃), ς_j(τ̃) by order-by-order
//! Birkhoff factorization of (Ψ°)⁻¹∘M, and the independent cross-check of
//! the negative factor against the fundamental solution of X̃.
//!
//! Three rings are involved:
//! * the (t, s)-ring: X Novikov variables, t (coordinates on H*(X)) and
//!   s_j (coordinates on each copy of H*(Z)), plus 𝔮^{1/𝔰} and z;
//! * the τ̃-ring: X Novikov variables and coordinates τ̃ on H*(X̃);
//! * a plain X̃-ring (own Novikov variables, τ̃) for M_X̃ before embedding.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::sync::Arc;

use thiserror::Error;

use crate::exact_arith::Cyclo;
use crate::geometry_model::BlowupGeometry;
use crate::graded_series::{outer_from, Laurent, Outer, Ring, Series, SeriesError, Substitution, TruncationPolicy, VariableSpec, OUTER_ONE};
use crate::gw_quantum::{fundamental_solution, reconstruct_gw, GwBounds, GwError, SolutionSetup};
use crate::init_conditions::{self as init, InitError, InitialConditions};
use crate::novikov_embed::{field_order, s_den, EmbedError, EmbeddingContext};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum DecompError {
    #[error(transparent)]
    Init(#[from] InitError),
    #[error(transparent)]
    Gw(#[from] GwError),
    #[error(transparent)]
    Series(#[from] SeriesError),
    #[error(transparent)]
    Embed(#[from] EmbedError),
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("truncation mismatch: {0}")]
    TruncationMismatch(String),
    #[error("not invertible: {0}")]
    NotInvertible(String),
    #[error("Birkhoff factor leaves the z-window: {0}")]
    ZWindow(String),
    #[error("singular Jacobian of (t, s) ↦ τ̃")]
    SingularJacobian,
    #[error("𝔮-depth insufficient: coefficients known only down to 𝔮-numerator {have}, need {need}")]
    InsufficientDepth { need: i32, have: i32 },
}

/// Truncation bounds of a decomposition run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DecompBounds {
    /// Novikov weight of X
    pub novikov: u32,
    /// order in (t, s), and in τ̃ after inversion
    pub params: u32,
    /// 𝔮-window of the reported coefficients, in whole powers of 𝔮
    pub q_window: (i32, i32),
    /// z⁻¹-order compared in the cross-check
    pub z_order: u32,
    /// extra 𝔮-depth carried below the window to absorb precision loss
    pub margin: i32,
    /// largest z-power allowed in Ψ
    pub z_max: i32,
}

impl Default for DecompBounds {
    fn default() -> Self {
        DecompBounds { novikov: 2, params: 2, q_window: (-4, 1), z_order: 3, margin: 3, z_max: 256 }
    }
}

impl DecompBounds {
    pub fn order(n: u32) -> Self {
        DecompBounds { novikov: n, params: n, ..Default::default() }
    }

    /// Working floor as a 𝔮-numerator over 𝔰.
    pub fn floor(&self, s: u32) -> i32 {
        (self.q_window.0 - self.margin) * s as i32
    }
}

/// The (t, s)-ring with its variable layout.
#[derive(Debug, Clone)]
pub struct DecompRing {
    pub ring: Arc<Ring>,
    pub policy: Arc<TruncationPolicy>,
    pub novikov: Vec<usize>,
    pub t: Vec<usize>,
    pub s: Vec<Vec<usize>>,
    pub floor: i32,
}

impl DecompRing {
    pub fn new(g: &BlowupGeometry, b: &DecompBounds) -> Result<Self, DecompError> {
        let mut vars = novikov_vars(g);
        let nn = vars.len();
        for (i, l) in g.x.labels.iter().enumerate() {
            vars.push(VariableSpec::parameter(&format!("t_{l}"), 2 - g.x.degrees[i]));
        }
        for j in 0..g.r - 1 {
            for (i, l) in g.z.labels.iter().enumerate() {
                vars.push(VariableSpec::parameter(&format!("s{j}_{l}"), 2 - g.z.degrees[i]));
            }
        }
        let s = s_den(g.r);
        let ring = Ring::new(vars, s, 2 * (g.r as i32 - 1), field_order(g.r))?;
        let floor = b.floor(s);
        let policy = Arc::new(TruncationPolicy::new(b.novikov, b.params).with_q(floor, 1 << 20));
        let nx = g.x.n();
        let nz = g.z.n();
        let t = (nn..nn + nx).collect();
        let s = (0..g.r as usize - 1).map(|j| (nn + nx + j * nz..nn + nx + (j + 1) * nz).collect()).collect();
        Ok(DecompRing { ring, policy, novikov: (0..nn).collect(), t, s, floor })
    }

    /// Parameter variables in H_decomp order.
    pub fn params(&self) -> Vec<usize> {
        let mut p = self.t.clone();
        for s in &self.s {
            p.extend(s);
        }
        p
    }
}

fn novikov_vars(g: &BlowupGeometry) -> Vec<VariableSpec> {
    g.x.curves.iter().map(|c| VariableSpec::novikov(&format!("Q_{}", c.name), 2 * c.c1 as i32, c.omega)).collect()
}

/// Block-diagonal e^{−τ°/z}M_X(τ°+t) ⊕ e^{−ς_j°/z}M_Z(ς_j°+s_j).
#[derive(Debug, Clone)]
pub struct BlockSolution {
    pub m: Series,
}

pub fn block_diag(parts: &[Series]) -> Series {
    let n: usize = parts.iter().map(|p| p.shape().0).sum();
    let mut terms: BTreeMap<Outer, Vec<Laurent>> = BTreeMap::new();
    let mut off = 0;
    for p in parts {
        let k = p.shape().0;
        for (o, b) in p.blocks() {
            let blk = terms.entry(*o).or_insert_with(|| vec![Laurent::zero(); n * n]);
            for i in 0..k {
                for j in 0..k {
                    blk[(off + i) * n + off + j] = b[i * k + j].clone();
                }
            }
        }
        off += k;
    }
    Series::from_blocks(parts[0].ring(), parts[0].policy(), n, n, terms)
}

/// Base point for a block.  The unit component cancels between e^{−c/z}
/// and M(c·1 + ·) = e^{c/z}M(·), so it is dropped.
fn base_point(a: &Series, unit: usize) -> Vec<Series> {
    (0..a.shape().0).map(|i| if i == unit { a.entry(i, 0).zero_like() } else { a.entry(i, 0) }).collect()
}

pub fn build_block_solution(g: &BlowupGeometry, ic: &InitialConditions, dr: &DecompRing) -> Result<BlockSolution, DecompError> {
    if ic.psi.ring() != &dr.ring || ic.floor != dr.floor {
        return Err(DecompError::TruncationMismatch("initial conditions were computed in another ring or at another depth".into()));
    }
    if !g.z.curves.is_empty() {
        return Err(DecompError::Unsupported("Z with curve classes (its Novikov images are not ring variables)".into()));
    }
    let n_x = dr.policy.max_novikov_weight;
    let store_x = reconstruct_gw(&g.x, &GwBounds::weight(n_x))?;
    let setup = SolutionSetup {
        ring: dr.ring.clone(),
        policy: dr.policy.clone(),
        novikov_vars: dr.novikov.clone(),
        params: dr.t.iter().map(|&v| Some(v)).collect(),
        base: base_point(&ic.tau, g.x.unit),
    };
    let mut parts = vec![fundamental_solution(&store_x, &setup)?.block(&g.x)?];
    let store_z = reconstruct_gw(&g.z, &GwBounds::weight(0))?;
    for j in 0..g.r as usize - 1 {
        let setup = SolutionSetup {
            ring: dr.ring.clone(),
            policy: dr.policy.clone(),
            novikov_vars: Vec::new(),
            params: dr.s[j].iter().map(|&v| Some(v)).collect(),
            base: base_point(&ic.varsigma[j], g.z.unit),
        };
        parts.push(fundamental_solution(&store_z, &setup)?.block(&g.z)?);
    }
    let m = block_diag(&parts);
    let all: Vec<usize> = (0..dr.ring.vars().len()).collect();
    let id = Series::identity(&dr.ring, &dr.policy, m.shape().0);
    if !m.restrict_zero(&all).sub(&id).is_empty() {
        return Err(DecompError::TruncationMismatch("M is not the identity at Q = t = s = 0".into()));
    }
    Ok(BlockSolution { m })
}

// ---------------------------------------------------------------------------
// constant matrices over C((𝔮^{-1/𝔰}))[z, z⁻¹]

/// Gauss–Jordan elimination with pivots of largest 𝔮-order.  Returns the
/// reduced augmented rows and the leading monomial of each pivot (with the
/// sign of the row permutation folded into the first).
fn eliminate(a: &Series, augment: bool) -> Result<(Vec<Vec<Laurent>>, Vec<(i32, i32, Cyclo)>), DecompError> {
    let (n, c) = a.shape();
    if n != c {
        return Err(DecompError::NotInvertible(format!("{n}×{c} is not square")));
    }
    if a.blocks().keys().any(|o| *o != OUTER_ONE) {
        return Err(DecompError::NotInvertible("matrix depends on outer variables".into()));
    }
    let floor = a.policy().min_q;
    let m = a.ring().order();
    let width = if augment { 2 * n } else { n };
    let mut w: Vec<Vec<Laurent>> = (0..n)
        .map(|i| {
            (0..width)
                .map(|j| {
                    if j < n {
                        a.laurent_at(&OUTER_ONE, i, j)
                    } else if j - n == i {
                        Laurent::monomial(0, 0, Cyclo::one(m))
                    } else {
                        Laurent::zero()
                    }
                })
                .collect()
        })
        .collect();
    let mut leads = Vec::with_capacity(n);
    let mut odd = false;
    for col in 0..n {
        let piv = (col..n)
            .filter_map(|i| w[i][col].top_q().map(|t| (t, std::cmp::Reverse(i))))
            .max()
            .map(|(_, std::cmp::Reverse(i))| i)
            .ok_or_else(|| DecompError::NotInvertible(format!("no known pivot in column {col}")))?;
        if piv != col {
            w.swap(col, piv);
            odd = !odd;
        }
        let p = w[col][col].clone();
        let top = p.top_q().expect("pivot");
        let (&(q0, z0), c0) = p.terms().range((top, i32::MIN)..).next().expect("pivot term");
        leads.push((q0, z0, c0.clone()));
        let inv = p.inverse(floor).ok_or_else(|| DecompError::NotInvertible(format!("pivot in column {col} has no monomial leading term")))?;
        for x in w[col].iter_mut() {
            let mut y = x.mul(&inv);
            y.floor_q(floor);
            *x = y;
        }
        for i in 0..n {
            if i == col || w[i][col].is_exact_zero() {
                continue;
            }
            let f = w[i][col].clone();
            for j in 0..width {
                if w[col][j].is_exact_zero() {
                    continue;
                }
                let mut t = f.mul(&w[col][j]);
                t.floor_q(floor);
                w[i][j].sub_assign(&t);
                w[i][j].floor_q(floor);
            }
        }
    }
    if odd {
        leads[0].2 = -&leads[0].2;
    }
    Ok((w, leads))
}

/// Inverse of an outer-constant square matrix.
pub fn invert_constant(a: &Series) -> Result<Series, DecompError> {
    let n = a.shape().0;
    let (w, _) = eliminate(a, true)?;
    let mut blk = Vec::with_capacity(n * n);
    for row in w {
        blk.extend(row.into_iter().skip(n));
    }
    Ok(Series::from_blocks(a.ring(), a.policy(), n, n, BTreeMap::from([(OUTER_ONE, blk)])))
}

/// Leading monomial (𝔮-numerator, z, coefficient) of det a.
pub fn leading_determinant(a: &Series) -> Result<(i32, i32, Cyclo), DecompError> {
    let (_, leads) = eliminate(a, false)?;
    let m = a.ring().order();
    Ok(leads.into_iter().fold((0, 0, Cyclo::one(m)), |(q, z, c), (q1, z1, c1)| (q + q1, z + z1, &c * &c1)))
}

// ---------------------------------------------------------------------------
// Birkhoff factorization

#[derive(Debug, Clone)]
pub struct Birkhoff {
    /// Id + O(z⁻¹)
    pub m_prime: Series,
    /// polynomial in z, Ψ° at Q = t = s = 0
    pub psi: Series,
}

/// Solves MΨ = Ψ°M′ for M′ = Id + O(z⁻¹) and Ψ ∈ Ψ° + (Q, t, s) polynomial
/// in z, filtration order by filtration order.  At order n the defect
/// (Ψ°)⁻¹Σ_{a≥1} M_aΨ_{n−a} splits into its negative z-part (M′_n) and
/// non-negative part (−(Ψ°)⁻¹Ψ_n).
pub fn birkhoff_factorize(m: &Series, psi0: &Series) -> Result<Birkhoff, DecompError> {
    let ring = m.ring().clone();
    let pol = m.policy().clone();
    let n = m.shape().0;
    if m.shape() != (n, n) || psi0.shape() != (n, n) {
        return Err(DecompError::TruncationMismatch(format!("M is {:?}, Ψ° is {:?}", m.shape(), psi0.shape())));
    }
    let psi0_inv = invert_constant(psi0)?;
    if let Some((mono, i, j, _)) = psi0_inv.iter_terms().find(|t| t.0.z < 0) {
        return Err(DecompError::NotInvertible(format!("(Ψ°)⁻¹ has z^{} at ({i},{j}): not polynomial in z", mono.z)));
    }
    let top = pol.max_novikov_weight + pol.max_parameter_order;
    let m_parts: Vec<Series> = (0..=top).map(|a| m.filtration_part(a)).collect();
    if !m_parts[0].sub(&Series::identity(&ring, &pol, n)).is_empty() {
        return Err(DecompError::TruncationMismatch("M is not Id at Q = t = s = 0".into()));
    }
    let mut psi_parts = vec![psi0.clone()];
    let mut m_prime = Series::identity(&ring, &pol, n);
    for k in 1..=top as usize {
        let mut r = Series::zero(&ring, &pol, n, n);
        for a in 1..=k {
            if !m_parts[a].is_exact_zero() {
                r = r.add(&m_parts[a].mul(&psi_parts[k - a]));
            }
        }
        let x = psi0_inv.mul(&r.filtration_part(k as u32));
        m_prime = m_prime.add(&x.filter_z(|z| z < 0));
        psi_parts.push(psi0.mul(&x.filter_z(|z| z >= 0)).neg());
    }
    let psi = psi_parts.iter().fold(Series::zero(&ring, &pol, n, n), |acc, p| acc.add(p));
    if let Some((mono, i, j, _)) = psi.iter_terms().find(|t| t.0.z > pol.z_window.1 || t.0.z < 0) {
        return Err(DecompError::ZWindow(format!("Ψ entry ({i},{j}) has z^{}", mono.z)));
    }
    Ok(Birkhoff { m_prime, psi })
}

/// MΨ − Ψ°M′, which vanishes for a correct factorization.
pub fn birkhoff_residual(m: &Series, psi0: &Series, b: &Birkhoff) -> Series {
    m.mul(&b.psi).sub(&psi0.mul(&b.m_prime))
}

// ---------------------------------------------------------------------------
// coordinates

/// τ̃ = [z⁻¹] M′·1, a column over H*(X̃).
pub fn extract_coordinates(m_prime: &Series, unit: usize) -> Series {
    let n = m_prime.shape().0;
    let mut col = Series::zero(m_prime.ring(), m_prime.policy(), n, 1);
    for i in 0..n {
        col.set_entry(i, 0, &m_prime.entry(i, unit));
    }
    col.filter_z(|z| z == -1).shift(0, 1)
}

/// ∂τ̃/∂(t, s) at the origin (Q = 0), columns in H_decomp order.
pub fn jacobian(tau_tilde: &Series, dr: &DecompRing) -> Series {
    let params = dr.params();
    let n = tau_tilde.shape().0;
    let mut blk = vec![Laurent::zero(); n * params.len()];
    for (k, &v) in params.iter().enumerate() {
        let o = outer_from(&[(v, 1)]);
        for i in 0..n {
            blk[i * params.len() + k] = tau_tilde.laurent_at(&o, i, 0);
        }
    }
    Series::from_blocks(&dr.ring, &dr.policy, n, params.len(), BTreeMap::from([(OUTER_ONE, blk)]))
}

/// The τ̃-ring and the inverse change of variables (t, s)(τ̃).
#[derive(Debug, Clone)]
pub struct CoordinateChange {
    pub ring: Arc<Ring>,
    pub policy: Arc<TruncationPolicy>,
    /// index of τ̃_i in the τ̃-ring
    pub tt: Vec<usize>,
    /// images of every (t, s)-ring variable in the τ̃-ring
    pub images: Vec<Series>,
}

impl CoordinateChange {
    pub fn apply(&self, a: &Series) -> Result<Series, DecompError> {
        Ok(a.substitute(&Substitution {
            target_ring: self.ring.clone(),
            target_policy: self.policy.clone(),
            images: self.images.clone(),
            q_scale: 1,
            strict: false,
            allow_negative_q_constants: true,
        })?)
    }

    /// The column (τ̃_0, …, τ̃_{n−1}).
    pub fn tt_column(&self) -> Result<Series, DecompError> {
        let n = self.tt.len();
        let mut col = Series::zero(&self.ring, &self.policy, n, 1);
        for (i, &v) in self.tt.iter().enumerate() {
            col.set_entry(i, 0, &Series::var(&self.ring, &self.policy, &self.ring.vars()[v].name.clone())?);
        }
        Ok(col)
    }
}

pub fn tt_ring(g: &BlowupGeometry, dr: &DecompRing) -> Result<(Arc<Ring>, Vec<usize>), DecompError> {
    let mut vars = novikov_vars(g);
    let nn = vars.len();
    for (i, l) in g.xt.labels.iter().enumerate() {
        vars.push(VariableSpec::parameter(&format!("tt_{l}"), 2 - g.xt.degrees[i]));
    }
    let ring = Ring::new(vars, dr.ring.s_den(), dr.ring.q_unit_degree() * dr.ring.s_den() as i32, dr.ring.order())?;
    Ok((ring, (nn..nn + g.xt.n()).collect()))
}

/// Inverts τ̃(t, s) by the fixed point (t, s) = J⁻¹(τ̃ − N(t, s)), N the
/// part of τ̃ beyond the Q-free linear term.  Each pass gains one order.
pub fn invert_coordinates(g: &BlowupGeometry, tau_tilde: &Series, jac: &Series, dr: &DecompRing) -> Result<CoordinateChange, DecompError> {
    let (ring, tt) = tt_ring(g, dr)?;
    let policy = dr.policy.clone();
    let params = dr.params();
    if params.len() != tt.len() {
        return Err(DecompError::SingularJacobian);
    }
    let jinv = invert_constant(jac).map_err(|_| DecompError::SingularJacobian)?;
    // linear part J·(t, s) in the (t, s)-ring
    let mut x = Series::zero(&dr.ring, &dr.policy, params.len(), 1);
    for (k, &v) in params.iter().enumerate() {
        x.set_entry(k, 0, &Series::var(&dr.ring, &dr.policy, &dr.ring.vars()[v].name.clone())?);
    }
    let nonlinear = tau_tilde.sub(&jac.mul(&x));

    let zero = Series::scalar_zero(&ring, &policy);
    let mut images: Vec<Series> = Vec::with_capacity(dr.ring.vars().len());
    for (i, v) in dr.ring.vars().iter().enumerate() {
        images.push(if dr.novikov.contains(&i) { Series::var(&ring, &policy, &v.name)? } else { zero.clone() });
    }
    let mut cc = CoordinateChange { ring: ring.clone(), policy: policy.clone(), tt, images };
    let jinv2 = cc.apply(&jinv)?;
    let ttc = cc.tt_column()?;
    let passes = policy.max_novikov_weight + policy.max_parameter_order + 1;
    let mut prev: Option<Series> = None;
    for _ in 0..=passes {
        let nl = cc.apply(&nonlinear)?;
        let u = jinv2.mul(&ttc.sub(&nl));
        if prev.as_ref() == Some(&u) {
            break;
        }
        for (k, &v) in params.iter().enumerate() {
            cc.images[v] = u.entry(k, 0);
        }
        prev = Some(u);
    }
    Ok(cc)
}

// ---------------------------------------------------------------------------
// the full run

#[derive(Debug, Clone)]
pub struct DecompositionResult {
    pub bounds: DecompBounds,
    pub dr: DecompRing,
    pub init: InitialConditions,
    pub m: Series,
    pub m_prime: Series,
    /// Ψ as a function of (t, s)
    pub psi_ts: Series,
    pub tau_tilde: Series,
    pub jacobian: Option<Series>,
    pub jacobian_lead: Option<(i32, i32, Cyclo)>,
    pub change: CoordinateChange,
    /// τ(τ̃), ς_j(τ̃), Ψ(τ̃) in the τ̃-ring
    pub outputs: InitialConditions,
}

/// Runs the decomposition, deepening the working 𝔮-floor until M′ and every
/// output are known down to the bottom of the window.
pub fn decompose(g: &BlowupGeometry, b: &DecompBounds) -> Result<DecompositionResult, DecompError> {
    let s = s_den(g.r) as i32;
    let need = b.q_window.0 * s;
    let mut b = *b;
    for _ in 0..4 {
        let res = decompose_at(g, &b)?;
        let o = &res.outputs;
        let have = [&res.m_prime, &o.tau, &o.psi].into_iter().chain(&o.varsigma).filter_map(|a| a.prec()).max();
        match have {
            Some(h) if h > need => b.margin += (h - need + s - 1) / s + 1,
            _ => return Ok(res),
        }
    }
    let res = decompose_at(g, &b)?;
    let have = res.m_prime.prec().unwrap_or(need);
    if have > need {
        return Err(DecompError::InsufficientDepth { need, have });
    }
    Ok(res)
}

fn decompose_at(g: &BlowupGeometry, b: &DecompBounds) -> Result<DecompositionResult, DecompError> {
    let dr = DecompRing::new(g, b)?;
    let ic = InitialConditions::compute(g, &dr.ring, &dr.policy)?;
    let block = build_block_solution(g, &ic, &dr)?;
    let bk = birkhoff_factorize(&block.m, &ic.psi)?;
    let tau_tilde = extract_coordinates(&bk.m_prime, g.xt.unit);

    let (jacobian, jacobian_lead, change) = if b.params == 0 {
        let (ring, tt) = tt_ring(g, &dr)?;
        let zero = Series::scalar_zero(&ring, &dr.policy);
        let mut images = Vec::new();
        for (i, v) in dr.ring.vars().iter().enumerate() {
            images.push(if dr.novikov.contains(&i) { Series::var(&ring, &dr.policy, &v.name)? } else { zero.clone() });
        }
        (None, None, CoordinateChange { ring, policy: dr.policy.clone(), tt, images })
    } else {
        let jac = jacobian(&tau_tilde, &dr);
        let lead = leading_determinant(&jac).map_err(|_| DecompError::SingularJacobian)?;
        let cc = invert_coordinates(g, &tau_tilde, &jac, &dr)?;
        (Some(jac), Some(lead), cc)
    };

    let mut outputs = ic.clone();
    outputs.tau = change.apply(&ic.tau)?;
    outputs.varsigma = Vec::new();
    outputs.psi = change.apply(&bk.psi)?;
    let lay = ic.layout;
    let param_col = |vars: &[usize]| -> Series {
        let mut c = Series::zero(&change.ring, &change.policy, vars.len(), 1);
        for (k, &v) in vars.iter().enumerate() {
            c.set_entry(k, 0, &change.images[v]);
        }
        c
    };
    outputs.tau = outputs.tau.add(&param_col(&dr.t));
    for j in 0..lay.r as usize - 1 {
        outputs.varsigma.push(change.apply(&ic.varsigma[j])?.add(&param_col(&dr.s[j])));
    }
    Ok(DecompositionResult {
        bounds: *b,
        dr,
        init: ic,
        m: block.m,
        m_prime: bk.m_prime,
        psi_ts: bk.psi,
        tau_tilde,
        jacobian,
        jacobian_lead,
        change,
        outputs,
    })
}

impl DecompositionResult {
    /// τ̃((t, s)(τ̃)) − τ̃, zero to truncation order.
    pub fn round_trip_defect(&self) -> Result<Series, DecompError> {
        Ok(self.change.apply(&self.tau_tilde)?.sub(&self.change.tt_column()?))
    }

    pub fn birkhoff(&self) -> Birkhoff {
        Birkhoff { m_prime: self.m_prime.clone(), psi: self.psi_ts.clone() }
    }

    /// Canonical text: manifest, then every output series.
    pub fn render(&self, name: &str) -> String {
        let b = &self.bounds;
        let mut s = String::new();
        let _ = writeln!(s, "# decomposition of {name}");
        let _ = writeln!(s, "novikov_weight = {}", b.novikov);
        let _ = writeln!(s, "parameter_order = {}", b.params);
        let _ = writeln!(s, "q_window = [{}, {}]", b.q_window.0, b.q_window.1);
        let _ = writeln!(s, "q_floor_numerator = {}", self.dr.floor);
        let _ = writeln!(s, "q_denominator = {}", self.dr.ring.s_den());
        let _ = writeln!(s, "coefficient_field = Q(zeta_{})", self.dr.ring.order());
        if let Some((q, z, c)) = &self.jacobian_lead {
            let _ = writeln!(s, "jacobian_leading_det = {c} q^({q}/{}) z^{z}", self.dr.ring.s_den());
        }
        let mut section = |title: &str, a: &Series| {
            let _ = writeln!(s, "\n[{title}]");
            s.push_str(&a.render());
        };
        section("tau", &self.outputs.tau);
        for (j, v) in self.outputs.varsigma.iter().enumerate() {
            section(&format!("varsigma_{j}"), v);
        }
        section("psi", &self.outputs.psi);
        section("tau_tilde(t,s)", &self.tau_tilde);
        section("m_prime", &self.m_prime);
        s
    }
}

// ---------------------------------------------------------------------------
// checks on the final outputs

fn hodge_violation(a: &Series, rows: &[bool], cols: &[bool], what: &str) -> Option<String> {
    a.iter_terms().find(|t| cols[t.2] && !rows[t.1]).map(|(mono, i, j, c)| {
        format!("{what} maps Hodge column {j} to non-Hodge row {i} at {} 𝔮^({}) z^{}: {c}", a.ring().render_outer(&mono.outer), mono.q, mono.z)
    })
}

/// Hodge restriction.  On Hodge (t, s) the block solution M and the factor
/// M′ preserve Hodge classes (the equivariance the reconstruction rests
/// on); on Hodge τ̃, τ and ς_j are Hodge classes and Ψ maps Hodge classes
/// to Hodge classes.
pub fn check_hodge_restricted(g: &BlowupGeometry, res: &DecompositionResult) -> Option<String> {
    let lay = res.init.layout;
    let hd = lay.hodge(g);
    let hx: Vec<bool> = g.xt.hodge.iter().map(|&(p, q)| p == q).collect();
    let non_hodge_ts: Vec<usize> = res.dr.params().into_iter().zip(&hd).filter(|(_, h)| !**h).map(|(v, _)| v).collect();
    if let Some(w) = hodge_violation(&res.m.restrict_zero(&non_hodge_ts), &hd, &hd, "M") {
        return Some(w);
    }
    if let Some(w) = hodge_violation(&res.m_prime.restrict_zero(&non_hodge_ts), &hx, &hx, "M′") {
        return Some(w);
    }
    let non_hodge: Vec<usize> = res.change.tt.iter().zip(&hx).filter(|(_, h)| !**h).map(|(&v, _)| v).collect();
    let mut o = res.outputs.clone();
    o.tau = o.tau.restrict_zero(&non_hodge);
    o.varsigma = o.varsigma.iter().map(|v| v.restrict_zero(&non_hodge)).collect();
    o.psi = o.psi.restrict_zero(&non_hodge);
    init::check_hodge(g, &o)
}

pub fn check_homogeneity(g: &BlowupGeometry, res: &DecompositionResult) -> Option<String> {
    init::check_homogeneity(g, &res.outputs)
}

pub fn check_monodromy(res: &DecompositionResult) -> Option<String> {
    init::check_monodromy(&res.outputs)
}

pub fn check_cyclotomic(g: &BlowupGeometry, res: &DecompositionResult) -> Option<String> {
    init::check_cyclotomic(g, &res.outputs)
}

/// Property (c): the leading determinant is a nonzero known coefficient.
pub fn check_jacobian(res: &DecompositionResult) -> Option<String> {
    match &res.jacobian_lead {
        Some((q, _, c)) if !c.is_zero() => match res.jacobian.as_ref().and_then(|j| j.prec()) {
            Some(p) if *q < p => Some(format!("leading determinant 𝔮^{q} lies below the known precision {p}")),
            _ => None,
        },
        Some(_) => Some("leading determinant vanishes".into()),
        None => Some("no parameter directions at this truncation".into()),
    }
}

// ---------------------------------------------------------------------------
// cross-check of M′ against the fundamental solution of X̃

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CrossCheck {
    pub agree: bool,
    /// coefficients compared (nonzero on either side)
    pub compared: usize,
    pub witness: Option<String>,
}

/// Compares M′ with (M_X̃(τ̃)|_{Q=t=s=0})⁻¹M_X̃(τ̃) at τ̃ = τ̃(t, s), the
/// Novikov variables of X̃ embedded, coefficientwise for z⁻¹-order ≤ K and
/// 𝔮 in the window.
/// Deepens the 𝔮-floor of a rerun when the direct side runs out of depth.
pub fn cross_check_mprime(g: &BlowupGeometry, res: &DecompositionResult) -> Result<CrossCheck, DecompError> {
    let s = s_den(g.r) as i32;
    let mut deeper: Option<DecompositionResult> = None;
    for _ in 0..4 {
        match cross_check_at(g, deeper.as_ref().unwrap_or(res)) {
            Err(DecompError::InsufficientDepth { need, have }) => {
                let mut b = deeper.as_ref().unwrap_or(res).bounds;
                b.margin += (have - need + s - 1) / s + 1;
                deeper = Some(decompose(g, &b)?);
            }
            r => return r,
        }
    }
    cross_check_at(g, deeper.as_ref().unwrap_or(res))
}

fn cross_check_at(g: &BlowupGeometry, res: &DecompositionResult) -> Result<CrossCheck, DecompError> {
    let b = &res.bounds;
    let dr = &res.dr;
    let s = dr.ring.s_den() as i32;
    let (lo, hi) = (b.q_window.0 * s, b.q_window.1 * s);
    let k = b.z_order as i32;
    let cx = EmbeddingContext::new(g)?;
    let xt = &g.xt;
    if (0..xt.n()).any(|i| xt.is_odd(i)) {
        return Err(DecompError::Unsupported("X̃ with odd cohomology".into()));
    }

    // exponent caps for the X̃ Novikov variables
    let p_tot = b.novikov + b.params;
    let max_deg = *xt.degrees.iter().max().unwrap_or(&0);
    let drop = (max_deg - 2).max(0);
    let mut caps = Vec::new();
    let mut images = Vec::new();
    for (gi, c) in xt.curves.iter().enumerate() {
        let mut d = vec![0i64; xt.curves.len()];
        d[gi] = 1;
        let img = cx.embed_xtilde(&d)?;
        let w: u32 = img.x_class.iter().zip(&g.x.curves).map(|(&e, c)| e * c.omega).sum();
        let cap = if w > 0 {
            b.novikov / w
        } else if c.c1 > 0 {
            // homogeneity bounds the power of a curve mapped to a pure 𝔮-power
            ((2 * k + max_deg + p_tot as i32 * drop) / (2 * c.c1 as i32)) as u32
        } else {
            return Err(DecompError::Unsupported(format!("curve {} maps to a pure 𝔮-power but has c₁ ≤ 0", c.name)));
        };
        caps.push(cap);
        let mut o = OUTER_ONE;
        for (xi, &e) in img.x_class.iter().enumerate() {
            o[dr.novikov[xi]] = e as u8;
        }
        images.push((o, img.q_num));
    }
    let wtot: u32 = caps.iter().zip(&xt.curves).map(|(c, cv)| c * cv.omega).sum();

    let mut vars: Vec<VariableSpec> = xt.curves.iter().map(|c| VariableSpec::novikov(&format!("Qx_{}", c.name), 2 * c.c1 as i32, c.omega)).collect();
    let nn = vars.len();
    for (i, l) in xt.labels.iter().enumerate() {
        vars.push(VariableSpec::parameter(&format!("tt_{l}"), 2 - xt.degrees[i]));
    }
    let xring = Ring::plain(vars, dr.ring.order())?;
    let xpol = Arc::new(
        TruncationPolicy::new(wtot, p_tot)
            .with_caps(caps.iter().enumerate().map(|(i, &c)| (i, c as u8)).collect())
            .with_z(-k, 1 << 20, true),
    );
    let store = reconstruct_gw(xt, &GwBounds::weight(wtot).with_caps(caps.iter().map(|&c| Some(c)).collect()))?;
    let setup = SolutionSetup::at_origin(&xring, &xpol, (0..nn).collect(), (nn..nn + xt.n()).map(Some).collect());
    let mx = fundamental_solution(&store, &setup)?;

    // embed into the (t, s)-ring at z⁻¹-order ≤ K
    let cmp = Arc::new(TruncationPolicy::new(b.novikov, b.params).with_q(dr.floor, 1 << 20).with_z(-k, 1 << 20, true));
    let one = Series::one(&dr.ring, &cmp);
    let mut full_img = Vec::new();
    let mut zero_img = Vec::new();
    for &(o, q) in &images {
        let v = Series::monomial(&dr.ring, &cmp, o, q, 0, Cyclo::one(dr.ring.order()));
        full_img.push(v.clone());
        zero_img.push(v);
    }
    for i in 0..xt.n() {
        full_img.push(res.tau_tilde.entry(i, 0).with_policy(&cmp));
        zero_img.push(one.zero_like());
    }
    let sub = |imgs: Vec<Series>| Substitution {
        target_ring: dr.ring.clone(),
        target_policy: cmp.clone(),
        images: imgs,
        q_scale: s,
        strict: false,
        allow_negative_q_constants: true,
    };
    let m_full = mx.series().substitute(&sub(full_img))?;
    let m0 = mx.series().substitute(&sub(zero_img))?.restrict_zero(&dr.novikov);
    let direct = m0.unipotent_inverse()?.mul(&m_full);
    let birk = res.m_prime.with_policy(&cmp);

    for a in [&direct, &birk] {
        if let Some(p) = a.prec() {
            if p > lo {
                return Err(DecompError::InsufficientDepth { need: lo, have: p });
            }
        }
    }
    let diff = direct.sub(&birk);
    let in_window = |q: i32| q >= lo && q <= hi;
    let compared = direct.iter_terms().chain(birk.iter_terms()).filter(|t| in_window(t.0.q)).count();
    let witness = diff.iter_terms().find(|t| in_window(t.0.q)).map(|(mono, i, j, c)| {
        format!(
            "M′ entry ({i},{j}) at {} 𝔮^({}/{s}) z^{}: direct − Birkhoff = {c}",
            dr.ring.render_outer(&mono.outer),
            mono.q,
            mono.z
        )
    });
    Ok(CrossCheck { agree: witness.is_none(), compared, witness })
}
