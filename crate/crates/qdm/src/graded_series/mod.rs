//! Truncated supercommutative series in Novikov variables, 𝔮^{1/𝔰}, z and
//! cohomology parameters, optionally matrix-valued.
//!
//! A [`Series`] is a sparse map from an *outer* monomial (Novikov and
//! parameter exponents) to a block of [`Laurent`] polynomials in (𝔮, z).
//! Scalars are 1×1 blocks; operator-valued series such as fundamental
//! solutions use the same type with a square block, so every algorithm
//! (products, substitution, exp/log) is written once.

mod laurent;

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;
use std::sync::Arc;

use num_traits::{One, Zero};
use thiserror::Error;

use crate::exact_arith::{rat, ArithError, Cyclo, Rational};

pub use laurent::{LKey, Laurent};

pub const MAX_VARS: usize = 16;

/// Exponents of the outer variables, in ring order.
pub type Outer = [u8; MAX_VARS];

pub const OUTER_ONE: Outer = [0; MAX_VARS];

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SeriesError {
    #[error("incompatible variable universes")]
    Incompatible,
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("{0} has a constant term; exp/log/substitution would not converge")]
    ConstantTerm(String),
    #[error("series iteration did not terminate within {0} steps")]
    NonConvergent(usize),
    #[error("parity mismatch substituting for {0}")]
    ParityMismatch(String),
    #[error("unknown variable {0}")]
    UnknownVariable(String),
    #[error("too many variables ({0} > 16)")]
    TooManyVariables(usize),
    #[error("invalid variable {0}: {1}")]
    InvalidVariable(String, String),
    #[error("coefficient field Q(zeta_{m}) does not contain zeta_{need}")]
    FieldTooSmall { m: u32, need: u32 },
    #[error("exponent overflow in {0}")]
    ExponentOverflow(String),
    #[error(transparent)]
    Arith(#[from] ArithError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum VarKind {
    Novikov,
    QFractional,
    Z,
    Parameter,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VariableSpec {
    pub name: String,
    pub degree: i32,
    pub odd: bool,
    pub kind: VarKind,
    /// ω·d for Novikov generators, 1 for parameters.
    pub weight: u32,
}

impl VariableSpec {
    pub fn novikov(name: &str, degree: i32, weight: u32) -> Self {
        VariableSpec { name: name.into(), degree, odd: false, kind: VarKind::Novikov, weight }
    }

    pub fn parameter(name: &str, degree: i32) -> Self {
        VariableSpec { name: name.into(), degree, odd: degree.rem_euclid(2) == 1, kind: VarKind::Parameter, weight: 1 }
    }
}

/// The variable universe: outer variables plus the fixed 𝔮^{1/𝔰} and z.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Ring {
    vars: Vec<VariableSpec>,
    /// denominator 𝔰 of 𝔮-exponents
    s_den: u32,
    /// degree of 𝔮^{1/𝔰}
    q_unit_degree: i32,
    /// coefficient field Q(ζ_m)
    m: u32,
}

impl Ring {
    pub fn new(vars: Vec<VariableSpec>, s_den: u32, q_degree: i32, m: u32) -> Result<Arc<Ring>, SeriesError> {
        if vars.len() > MAX_VARS {
            return Err(SeriesError::TooManyVariables(vars.len()));
        }
        for (i, v) in vars.iter().enumerate() {
            if vars[..i].iter().any(|w| w.name == v.name) {
                return Err(SeriesError::InvalidVariable(v.name.clone(), "duplicate name".into()));
            }
            match v.kind {
                VarKind::Parameter if v.odd != (v.degree.rem_euclid(2) == 1) => {
                    return Err(SeriesError::InvalidVariable(v.name.clone(), "parity must match degree mod 2".into()))
                }
                VarKind::Novikov if v.odd || v.weight == 0 => {
                    return Err(SeriesError::InvalidVariable(v.name.clone(), "Novikov variables are even of positive weight".into()))
                }
                VarKind::QFractional | VarKind::Z => {
                    return Err(SeriesError::InvalidVariable(v.name.clone(), "q and z are built into every ring".into()))
                }
                _ => {}
            }
        }
        if s_den == 0 || q_degree % s_den as i32 != 0 {
            return Err(SeriesError::InvalidVariable("q".into(), "deg q must be divisible by the denominator".into()));
        }
        Ok(Arc::new(Ring { vars, s_den, q_unit_degree: q_degree / s_den as i32, m }))
    }

    /// A ring without 𝔮 (𝔰 = 1, deg 𝔮 = 0).
    pub fn plain(vars: Vec<VariableSpec>, m: u32) -> Result<Arc<Ring>, SeriesError> {
        Self::new(vars, 1, 0, m)
    }

    pub fn vars(&self) -> &[VariableSpec] {
        &self.vars
    }

    pub fn var_index(&self, name: &str) -> Result<usize, SeriesError> {
        self.vars.iter().position(|v| v.name == name).ok_or_else(|| SeriesError::UnknownVariable(name.into()))
    }

    pub fn s_den(&self) -> u32 {
        self.s_den
    }

    pub fn q_unit_degree(&self) -> i32 {
        self.q_unit_degree
    }

    pub fn order(&self) -> u32 {
        self.m
    }

    pub fn novikov_weight(&self, o: &Outer) -> u32 {
        self.vars
            .iter()
            .enumerate()
            .filter(|(_, v)| v.kind == VarKind::Novikov)
            .map(|(i, v)| o[i] as u32 * v.weight)
            .sum()
    }

    pub fn parameter_order(&self, o: &Outer) -> u32 {
        self.vars
            .iter()
            .enumerate()
            .filter(|(_, v)| v.kind == VarKind::Parameter)
            .map(|(i, _)| o[i] as u32)
            .sum()
    }

    /// Filtration order: Novikov weight plus parameter order.
    pub fn filtration(&self, o: &Outer) -> u32 {
        self.novikov_weight(o) + self.parameter_order(o)
    }

    pub fn outer_degree(&self, o: &Outer) -> i32 {
        self.vars.iter().enumerate().map(|(i, v)| o[i] as i32 * v.degree).sum()
    }

    pub fn outer_parity(&self, o: &Outer) -> bool {
        self.vars.iter().enumerate().filter(|(i, v)| v.odd && o[*i] % 2 == 1).count() % 2 == 1
    }

    pub fn term_degree(&self, o: &Outer, q: i32, z: i32) -> i32 {
        self.outer_degree(o) + q * self.q_unit_degree + 2 * z
    }

    /// Product of outer monomials with its Koszul sign; `None` if an odd
    /// variable would be squared.
    pub fn outer_mul(&self, a: &Outer, b: &Outer) -> Option<(Outer, bool)> {
        let mut out = OUTER_ONE;
        let mut negative = false;
        for i in 0..self.vars.len() {
            let s = a[i] as u16 + b[i] as u16;
            if s > u8::MAX as u16 {
                return None;
            }
            out[i] = s as u8;
            if self.vars[i].odd {
                if s > 1 {
                    return None;
                }
                if b[i] == 1 {
                    // θ_i from b moves left past odd variables of a with larger index
                    let passes = (i + 1..self.vars.len()).filter(|&j| self.vars[j].odd && a[j] == 1).count();
                    negative ^= passes % 2 == 1;
                }
            }
        }
        Some((out, negative))
    }

    pub fn render_outer(&self, o: &Outer) -> String {
        let mut parts = Vec::new();
        for (i, v) in self.vars.iter().enumerate() {
            match o[i] {
                0 => {}
                1 => parts.push(v.name.clone()),
                e => parts.push(format!("{}^{}", v.name, e)),
            }
        }
        parts.join("*")
    }
}

/// Bounds applied after every operation.  All bounds are finite.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TruncationPolicy {
    pub max_novikov_weight: u32,
    /// Optional per-Novikov-variable exponent caps (ideal truncation).
    pub novikov_caps: Vec<(usize, u8)>,
    pub max_parameter_order: u32,
    /// 𝔮-numerator floor: lower terms are dropped and recorded as unknown.
    pub min_q: i32,
    /// 𝔮-numerator ceiling: higher terms set the overflow flag.
    pub max_q: i32,
    pub z_window: (i32, i32),
    /// Drop terms below the z window silently instead of flagging overflow
    /// (sound when every operand lives in C[z⁻¹]).
    pub drop_z_below: bool,
}

impl TruncationPolicy {
    pub fn new(max_novikov_weight: u32, max_parameter_order: u32) -> Self {
        TruncationPolicy {
            max_novikov_weight,
            novikov_caps: Vec::new(),
            max_parameter_order,
            min_q: -(1 << 20),
            max_q: 1 << 20,
            z_window: (-(1 << 20), 1 << 20),
            drop_z_below: false,
        }
    }

    /// The constants-only policy.
    pub fn degenerate() -> Self {
        let mut p = Self::new(0, 0);
        p.min_q = 0;
        p.max_q = 0;
        p.z_window = (0, 0);
        p
    }

    pub fn with_q(mut self, min_q: i32, max_q: i32) -> Self {
        self.min_q = min_q;
        self.max_q = max_q;
        self
    }

    pub fn with_z(mut self, lo: i32, hi: i32, drop_below: bool) -> Self {
        self.z_window = (lo, hi);
        self.drop_z_below = drop_below;
        self
    }

    pub fn with_caps(mut self, caps: Vec<(usize, u8)>) -> Self {
        self.novikov_caps = caps;
        self
    }

    pub fn admits(&self, ring: &Ring, o: &Outer) -> bool {
        ring.novikov_weight(o) <= self.max_novikov_weight
            && ring.parameter_order(o) <= self.max_parameter_order
            && self.novikov_caps.iter().all(|&(i, c)| o[i] <= c)
    }
}

/// One stored term, for iteration and checks.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Monomial {
    pub outer: Outer,
    pub q: i32,
    pub z: i32,
}

/// Pattern for [`Series::coefficient_extract`]: fixed exponents.
#[derive(Debug, Clone, Default)]
pub struct Pattern {
    pub q: Option<i32>,
    pub z: Option<i32>,
    pub outer: Vec<(usize, u8)>,
}

#[derive(Clone, Debug)]
pub struct Series {
    ring: Arc<Ring>,
    policy: Arc<TruncationPolicy>,
    rows: usize,
    cols: usize,
    terms: BTreeMap<Outer, Vec<Laurent>>,
    overflow: bool,
}

/// Scalar series are 1×1 [`Series`].
pub type GradedSeries = Series;

impl PartialEq for Series {
    fn eq(&self, o: &Self) -> bool {
        self.ring == o.ring && self.rows == o.rows && self.cols == o.cols && self.terms == o.terms
    }
}

impl Series {
    pub fn zero(ring: &Arc<Ring>, policy: &Arc<TruncationPolicy>, rows: usize, cols: usize) -> Self {
        Series { ring: ring.clone(), policy: policy.clone(), rows, cols, terms: BTreeMap::new(), overflow: false }
    }

    pub fn scalar_zero(ring: &Arc<Ring>, policy: &Arc<TruncationPolicy>) -> Self {
        Self::zero(ring, policy, 1, 1)
    }

    pub fn zero_like(&self) -> Self {
        Self::zero(&self.ring, &self.policy, self.rows, self.cols)
    }

    /// Zero of the same ring with another shape.
    pub fn zero_shaped(&self, rows: usize, cols: usize) -> Self {
        Self::zero(&self.ring, &self.policy, rows, cols)
    }

    pub fn identity(ring: &Arc<Ring>, policy: &Arc<TruncationPolicy>, n: usize) -> Self {
        let mut s = Self::zero(ring, policy, n, n);
        let one = Cyclo::one(ring.m);
        for i in 0..n {
            s.add_entry_term(OUTER_ONE, i, i, 0, 0, &one);
        }
        s
    }

    /// Scalar c·𝔮^{q/𝔰}z^{z}·(outer monomial).
    pub fn monomial(ring: &Arc<Ring>, policy: &Arc<TruncationPolicy>, outer: Outer, q: i32, z: i32, c: Cyclo) -> Self {
        let mut s = Self::scalar_zero(ring, policy);
        s.add_entry_term(outer, 0, 0, q, z, &c);
        s.truncate();
        s
    }

    pub fn constant(ring: &Arc<Ring>, policy: &Arc<TruncationPolicy>, c: Cyclo) -> Self {
        Self::monomial(ring, policy, OUTER_ONE, 0, 0, c)
    }

    pub fn one(ring: &Arc<Ring>, policy: &Arc<TruncationPolicy>) -> Self {
        Self::constant(ring, policy, Cyclo::one(ring.m))
    }

    pub fn var(ring: &Arc<Ring>, policy: &Arc<TruncationPolicy>, name: &str) -> Result<Self, SeriesError> {
        let i = ring.var_index(name)?;
        let mut o = OUTER_ONE;
        o[i] = 1;
        Ok(Self::monomial(ring, policy, o, 0, 0, Cyclo::one(ring.m)))
    }

    /// A constant matrix.
    pub fn from_matrix(ring: &Arc<Ring>, policy: &Arc<TruncationPolicy>, rows: usize, cols: usize, f: impl Fn(usize, usize) -> Rational) -> Self {
        let mut s = Self::zero(ring, policy, rows, cols);
        for i in 0..rows {
            for j in 0..cols {
                let v = f(i, j);
                if !v.is_zero() {
                    s.add_entry_term(OUTER_ONE, i, j, 0, 0, &Cyclo::from_rational(ring.m, &v));
                }
            }
        }
        s
    }

    pub fn ring(&self) -> &Arc<Ring> {
        &self.ring
    }

    pub fn policy(&self) -> &Arc<TruncationPolicy> {
        &self.policy
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn overflow(&self) -> bool {
        self.overflow
    }

    pub fn blocks(&self) -> &BTreeMap<Outer, Vec<Laurent>> {
        &self.terms
    }

    pub fn with_policy(&self, policy: &Arc<TruncationPolicy>) -> Self {
        let mut s = self.clone();
        s.policy = policy.clone();
        s.truncate();
        s
    }

    /// Number of stored nonzero coefficients.
    pub fn len(&self) -> usize {
        self.terms.values().flat_map(|b| b.iter()).map(|l| l.terms.len()).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// True when every entry is known to vanish exactly.
    pub fn is_exact_zero(&self) -> bool {
        self.terms.values().flat_map(|b| b.iter()).all(|l| l.is_exact_zero())
    }

    /// The weakest 𝔮-precision over all entries (`None` = exact).
    pub fn prec(&self) -> Option<i32> {
        self.terms.values().flat_map(|b| b.iter()).filter_map(|l| l.prec).max()
    }

    pub fn add_entry_term(&mut self, outer: Outer, i: usize, j: usize, q: i32, z: i32, c: &Cyclo) {
        let cols = self.cols;
        let n = self.rows * cols;
        let b = self.terms.entry(outer).or_insert_with(|| vec![Laurent::zero(); n]);
        b[i * cols + j].add_term((q, z), c);
    }

    pub fn entry(&self, i: usize, j: usize) -> Series {
        let mut s = Series::zero(&self.ring, &self.policy, 1, 1);
        for (o, b) in &self.terms {
            let l = &b[i * self.cols + j];
            if !l.is_exact_zero() {
                s.terms.insert(*o, vec![l.clone()]);
            }
        }
        s
    }

    pub fn set_entry(&mut self, i: usize, j: usize, v: &Series) {
        assert_eq!(v.shape(), (1, 1));
        let cols = self.cols;
        for b in self.terms.values_mut() {
            b[i * cols + j] = Laurent::zero();
        }
        let n = self.rows * cols;
        for (o, b) in &v.terms {
            self.terms.entry(*o).or_insert_with(|| vec![Laurent::zero(); n])[i * cols + j] = b[0].clone();
        }
        self.prune();
    }

    /// The scalar value of a 1×1 series at the outer monomial 1.
    pub fn laurent_at(&self, outer: &Outer, i: usize, j: usize) -> Laurent {
        self.terms.get(outer).map(|b| b[i * self.cols + j].clone()).unwrap_or_default()
    }

    pub fn coeff(&self, outer: &Outer, i: usize, j: usize, q: i32, z: i32) -> Cyclo {
        self.terms
            .get(outer)
            .and_then(|b| b[i * self.cols + j].get(q, z).cloned())
            .unwrap_or_else(|| Cyclo::zero(self.ring.m))
    }

    /// Iterates stored coefficients as `(monomial, row, col, coefficient)`.
    pub fn iter_terms(&self) -> impl Iterator<Item = (Monomial, usize, usize, &Cyclo)> + '_ {
        let cols = self.cols;
        self.terms.iter().flat_map(move |(o, b)| {
            b.iter().enumerate().flat_map(move |(k, l)| {
                l.terms.iter().map(move |((q, z), c)| (Monomial { outer: *o, q: *q, z: *z }, k / cols, k % cols, c))
            })
        })
    }

    fn prune(&mut self) {
        self.terms.retain(|_, b| b.iter().any(|l| !l.is_exact_zero()));
    }

    /// Applies the policy in place.
    pub fn truncate(&mut self) {
        let ring = self.ring.clone();
        let pol = self.policy.clone();
        let mut overflow = false;
        self.terms.retain(|o, _| pol.admits(&ring, o));
        for b in self.terms.values_mut() {
            for l in b.iter_mut() {
                l.floor_q(pol.min_q);
                if pol.drop_z_below {
                    l.terms.retain(|k, _| k.1 >= pol.z_window.0);
                }
                if l.terms.keys().any(|&(q, z)| q > pol.max_q || z > pol.z_window.1 || z < pol.z_window.0) {
                    overflow = true;
                }
            }
        }
        self.overflow |= overflow;
        self.prune();
    }

    fn check_compat(&self, o: &Series) -> Result<(), SeriesError> {
        if self.ring != o.ring {
            return Err(SeriesError::Incompatible);
        }
        Ok(())
    }

    pub fn try_add(&self, o: &Series) -> Result<Series, SeriesError> {
        self.check_compat(o)?;
        if self.shape() != o.shape() {
            return Err(SeriesError::Shape(format!("{:?} + {:?}", self.shape(), o.shape())));
        }
        let mut out = self.clone();
        out.overflow |= o.overflow;
        for (k, b) in &o.terms {
            let e = out.terms.entry(*k).or_insert_with(|| vec![Laurent::zero(); b.len()]);
            for (x, y) in e.iter_mut().zip(b) {
                x.add_assign(y);
            }
        }
        out.prune();
        Ok(out)
    }

    pub fn add(&self, o: &Series) -> Series {
        self.try_add(o).expect("series add")
    }

    pub fn sub(&self, o: &Series) -> Series {
        self.add(&o.neg())
    }

    pub fn neg(&self) -> Series {
        self.map_blocks(|l| l.neg())
    }

    pub fn scale(&self, c: &Cyclo) -> Series {
        let mut s = self.map_blocks(|l| l.scale(c));
        s.prune();
        s
    }

    pub fn scale_rat(&self, c: &Rational) -> Series {
        let mut s = self.map_blocks(|l| l.scale_rat(c));
        s.prune();
        s
    }

    /// Multiplies by 𝔮^{dq/𝔰} z^{dz}.
    pub fn shift(&self, dq: i32, dz: i32) -> Series {
        let mut s = self.map_blocks(|l| l.shift(dq, dz));
        s.truncate();
        s
    }

    pub fn map_blocks(&self, f: impl Fn(&Laurent) -> Laurent) -> Series {
        let mut out = self.zero_like();
        out.overflow = self.overflow;
        for (k, b) in &self.terms {
            out.terms.insert(*k, b.iter().map(&f).collect());
        }
        out.prune();
        out
    }

    /// Coefficientwise map `(monomial, row, col, c) -> c'`.
    pub fn map_coeffs(&self, f: impl Fn(&Outer, usize, usize, i32, i32, &Cyclo) -> Cyclo) -> Series {
        let mut out = self.zero_like();
        let cols = self.cols;
        for (o, b) in &self.terms {
            let nb: Vec<Laurent> = b
                .iter()
                .enumerate()
                .map(|(k, l)| l.map_coeffs(|q, z, c| f(o, k / cols, k % cols, q, z, c)))
                .collect();
            out.terms.insert(*o, nb);
        }
        out.prune();
        out
    }

    pub fn transpose(&self) -> Series {
        let mut out = self.zero_shaped(self.cols, self.rows);
        for (o, b) in &self.terms {
            let mut nb = vec![Laurent::zero(); b.len()];
            for i in 0..self.rows {
                for j in 0..self.cols {
                    nb[j * self.rows + i] = b[i * self.cols + j].clone();
                }
            }
            out.terms.insert(*o, nb);
        }
        out
    }

    /// Product with Koszul signs from the outer variables; a 1×1 factor acts
    /// as a scalar on a matrix.
    pub fn try_mul(&self, o: &Series) -> Result<Series, SeriesError> {
        self.check_compat(o)?;
        let (rows, inner, cols, mode) = if self.cols == o.rows {
            (self.rows, self.cols, o.cols, 0)
        } else if self.shape() == (1, 1) {
            (o.rows, 1, o.cols, 1)
        } else if o.shape() == (1, 1) {
            (self.rows, 1, self.cols, 2)
        } else {
            return Err(SeriesError::Shape(format!("{:?} * {:?}", self.shape(), o.shape())));
        };
        let ring = &self.ring;
        let pol = &self.policy;
        let mut acc: BTreeMap<Outer, Vec<Laurent>> = BTreeMap::new();
        for (oa, ba) in &self.terms {
            for (ob, bb) in &o.terms {
                let Some((ok, neg)) = ring.outer_mul(oa, ob) else { continue };
                if !pol.admits(ring, &ok) {
                    continue;
                }
                let blk = acc.entry(ok).or_insert_with(|| vec![Laurent::zero(); rows * cols]);
                let mut add = |idx: usize, x: &Laurent, y: &Laurent| {
                    if neg {
                        let mut t = Laurent::zero();
                        x.mul_acc(y, &mut t);
                        blk[idx].sub_assign(&t);
                    } else {
                        x.mul_acc(y, &mut blk[idx]);
                    }
                };
                match mode {
                    0 => {
                        for i in 0..rows {
                            for k in 0..inner {
                                let x = &ba[i * inner + k];
                                if x.is_exact_zero() {
                                    continue;
                                }
                                for j in 0..cols {
                                    let y = &bb[k * cols + j];
                                    if !y.is_exact_zero() {
                                        add(i * cols + j, x, y);
                                    }
                                }
                            }
                        }
                    }
                    1 => {
                        for (idx, y) in bb.iter().enumerate() {
                            if !y.is_exact_zero() {
                                add(idx, &ba[0], y);
                            }
                        }
                    }
                    _ => {
                        for (idx, x) in ba.iter().enumerate() {
                            if !x.is_exact_zero() {
                                add(idx, x, &bb[0]);
                            }
                        }
                    }
                }
            }
        }
        let mut out = Series { ring: self.ring.clone(), policy: self.policy.clone(), rows, cols, terms: acc, overflow: self.overflow || o.overflow };
        out.truncate();
        Ok(out)
    }

    pub fn mul(&self, o: &Series) -> Series {
        self.try_mul(o).expect("series mul")
    }

    fn is_square(&self) -> Result<(), SeriesError> {
        if self.rows != self.cols {
            return Err(SeriesError::Shape(format!("{:?} is not square", self.shape())));
        }
        Ok(())
    }

    /// Sum Σ cₙ aⁿ until the powers vanish under truncation.
    fn power_series(&self, coeff: impl Fn(usize) -> Rational, start_one: bool, cap: usize) -> Result<Series, SeriesError> {
        self.is_square()?;
        let id = Series::identity(&self.ring, &self.policy, self.rows);
        let mut sum = if start_one { id.clone() } else { self.zero_like() };
        let mut pow = id;
        for n in 1..=cap {
            pow = pow.mul(self);
            if pow.is_empty() {
                // fold any residual precision loss into the result
                return Ok(sum.add(&pow));
            }
            let c = coeff(n);
            if !c.is_zero() {
                sum = sum.add(&pow.scale_rat(&c));
            }
        }
        Err(SeriesError::NonConvergent(cap))
    }

    /// exp(a) = Σ aⁿ/n!.
    pub fn exp(&self) -> Result<Series, SeriesError> {
        let mut fact = Rational::one();
        let facts: Vec<Rational> = (0..=ITER_CAP)
            .map(|n| {
                if n > 0 {
                    fact = &fact / Rational::from_integer(n.into());
                }
                fact.clone()
            })
            .collect();
        self.power_series(|n| facts[n].clone(), true, ITER_CAP)
    }

    /// log(a) for a = 1 + x, via Σ (−1)^{n+1} xⁿ/n.
    pub fn log(&self) -> Result<Series, SeriesError> {
        self.is_square()?;
        let x = self.sub(&Series::identity(&self.ring, &self.policy, self.rows));
        x.power_series(|n| rat(if n % 2 == 1 { 1 } else { -1 }, n as i64), false, ITER_CAP)
    }

    /// Inverse of Id + N for topologically nilpotent N.
    pub fn unipotent_inverse(&self) -> Result<Series, SeriesError> {
        self.is_square()?;
        let n = self.sub(&Series::identity(&self.ring, &self.policy, self.rows));
        n.power_series(|k| rat(if k % 2 == 1 { -1 } else { 1 }, 1), true, ITER_CAP)
    }

    /// The sub-series of terms matching `pat`, with the fixed exponents reset
    /// to zero.
    pub fn coefficient_extract(&self, pat: &Pattern) -> Series {
        let mut out = self.zero_like();
        for (o, b) in &self.terms {
            if pat.outer.iter().any(|&(i, e)| o[i] != e) {
                continue;
            }
            let mut ko = *o;
            for &(i, _) in &pat.outer {
                ko[i] = 0;
            }
            let nb: Vec<Laurent> = b
                .iter()
                .map(|l| {
                    let mut r = Laurent::zero();
                    r.prec = match (pat.q, l.prec) {
                        (None, p) => p,
                        // the fixed coefficient is unknown
                        (Some(pq), Some(p)) if pq < p => Some(1),
                        _ => None,
                    };
                    for (&(q, z), c) in &l.terms {
                        if pat.q.is_some_and(|pq| pq != q) || pat.z.is_some_and(|pz| pz != z) {
                            continue;
                        }
                        r.add_term((if pat.q.is_some() { 0 } else { q }, if pat.z.is_some() { 0 } else { z }), c);
                    }
                    r
                })
                .collect();
            let e = out.terms.entry(ko).or_insert_with(|| vec![Laurent::zero(); nb.len()]);
            for (x, y) in e.iter_mut().zip(&nb) {
                x.add_assign(y);
            }
        }
        out.prune();
        out
    }

    /// Assembles a series from raw blocks (row-major Laurent entries).
    pub(crate) fn from_blocks(ring: &Arc<Ring>, policy: &Arc<TruncationPolicy>, rows: usize, cols: usize, terms: BTreeMap<Outer, Vec<Laurent>>) -> Series {
        let mut s = Series { ring: ring.clone(), policy: policy.clone(), rows, cols, terms, overflow: false };
        s.truncate();
        s
    }

    /// Left derivative ∂/∂x_var (odd variables anticommute past earlier odd ones).
    pub fn derivative(&self, var: usize) -> Series {
        let mut out = self.zero_like();
        out.overflow = self.overflow;
        let odd = self.ring.vars[var].odd;
        for (o, b) in &self.terms {
            let e = o[var];
            if e == 0 {
                continue;
            }
            let mut no = *o;
            no[var] -= 1;
            let mut f = Rational::from_integer(e.into());
            if odd && (0..var).filter(|&j| self.ring.vars[j].odd && o[j] == 1).count() % 2 == 1 {
                f = -f;
            }
            let nb: Vec<Laurent> = b.iter().map(|l| l.scale_rat(&f)).collect();
            out.terms.insert(no, nb);
        }
        out.prune();
        out
    }

    /// Declares every entry known only down to 𝔮-numerator `floor` (for
    /// series assembled from a finite expansion).
    pub fn with_q_floor(&self, floor: i32) -> Series {
        let mut out = self.clone();
        let n = self.rows * self.cols;
        out.terms.entry(OUTER_ONE).or_insert_with(|| vec![Laurent::zero(); n]);
        for b in out.terms.values_mut() {
            for l in b.iter_mut() {
                *l = std::mem::take(l).with_prec(Some(floor));
            }
        }
        out
    }

    /// Terms whose z-exponent satisfies `f`.
    pub fn filter_z(&self, f: impl Fn(i32) -> bool) -> Series {
        self.map_blocks(|l| l.filter(|_, z| f(z)))
    }

    /// Terms whose outer filtration order equals `n`.
    pub fn filtration_part(&self, n: u32) -> Series {
        let mut out = self.zero_like();
        for (o, b) in &self.terms {
            if self.ring.filtration(o) == n {
                out.terms.insert(*o, b.clone());
            }
        }
        out
    }

    /// Sets every outer variable in `vars` to zero.
    pub fn restrict_zero(&self, vars: &[usize]) -> Series {
        let mut out = self.zero_like();
        for (o, b) in &self.terms {
            if vars.iter().all(|&i| o[i] == 0) {
                out.terms.insert(*o, b.clone());
            }
        }
        out
    }

    /// 𝔱 ↦ e^{−2πij}𝔱: a term in 𝔮^{p/𝔰} picks up ζ_𝔰^{−jp}.
    pub fn monodromy_substitute(&self, j: i64) -> Result<Series, SeriesError> {
        let s = self.ring.s_den;
        let m = self.ring.m;
        if m % s != 0 {
            return Err(SeriesError::FieldTooSmall { m, need: s });
        }
        let step = (m / s) as i64;
        Ok(self.map_coeffs(|_, _, _, q, _, c| c * &Cyclo::zeta_pow(m, -j * q as i64 * step)))
    }

    /// Homogeneity check with per-entry expected degrees
    /// `base + row_deg[i] − col_deg[j]` and parity `row_par[i] ^ col_par[j]`.
    pub fn check_homogeneity_matrix(&self, base: i32, row_deg: &[i32], col_deg: &[i32], row_par: &[bool], col_par: &[bool]) -> Option<(Monomial, usize, usize)> {
        for (mono, i, j, _) in self.iter_terms() {
            let d = self.ring.term_degree(&mono.outer, mono.q, mono.z);
            let p = self.ring.outer_parity(&mono.outer);
            if d != base + row_deg[i] - col_deg[j] || p != (row_par[i] ^ col_par[j]) {
                return Some((mono, i, j));
            }
        }
        None
    }

    /// True iff every stored term of a scalar series has the given degree and
    /// parity.
    pub fn check_homogeneity(&self, expected_degree: i32, expected_odd: bool) -> bool {
        self.iter_terms().all(|(mono, _, _, _)| {
            self.ring.term_degree(&mono.outer, mono.q, mono.z) == expected_degree
                && self.ring.outer_parity(&mono.outer) == expected_odd
        })
    }

    /// Composition: every outer variable of `self` is replaced by its image,
    /// a scalar series in the target ring.  𝔮-numerators are multiplied by
    /// `q_scale` (target 𝔰 over source 𝔰); z is kept.
    pub fn substitute(&self, sub: &Substitution) -> Result<Series, SeriesError> {
        let nv = self.ring.vars.len();
        if sub.images.len() != nv {
            return Err(SeriesError::Incompatible);
        }
        for (v, img) in self.ring.vars.iter().zip(&sub.images) {
            if img.shape() != (1, 1) || img.ring != sub.target_ring {
                return Err(SeriesError::Incompatible);
            }
            for (mono, _, _, _) in img.iter_terms() {
                if sub.target_ring.outer_parity(&mono.outer) != v.odd {
                    return Err(SeriesError::ParityMismatch(v.name.clone()));
                }
                if sub.strict && mono.outer == OUTER_ONE && !(mono.q < 0 && sub.allow_negative_q_constants) {
                    return Err(SeriesError::ConstantTerm(v.name.clone()));
                }
            }
        }
        let mut cache: HashMap<Outer, Series> = HashMap::new();
        let one = Series::one(&sub.target_ring, &sub.target_policy);
        let mut out = Series::zero(&sub.target_ring, &sub.target_policy, self.rows, self.cols);
        for (o, b) in &self.terms {
            let img = image_of(o, nv, &sub.images, &one, &mut cache);
            // coefficient block in the target ring
            let mut blk = Series::zero(&sub.target_ring, &sub.target_policy, self.rows, self.cols);
            blk.terms.insert(
                OUTER_ONE,
                b.iter()
                    .map(|l| {
                        let mut r = Laurent::zero();
                        r.prec = l.prec.map(|p| p * sub.q_scale);
                        for (&(q, z), c) in &l.terms {
                            r.add_term((q * sub.q_scale, z), c);
                        }
                        r
                    })
                    .collect(),
            );
            blk.truncate();
            out = out.add(&img.mul(&blk));
        }
        out.truncate();
        Ok(out)
    }

    /// Same-ring substitution of the named variables; others map to themselves.
    pub fn substitute_vars(&self, assign: &[(&str, Series)]) -> Result<Series, SeriesError> {
        let mut images = Vec::with_capacity(self.ring.vars.len());
        for v in &self.ring.vars {
            match assign.iter().find(|(n, _)| *n == v.name) {
                Some((_, s)) => images.push(s.clone()),
                None => images.push(Series::var(&self.ring, &self.policy, &v.name)?),
            }
        }
        for (n, _) in assign {
            self.ring.var_index(n)?;
        }
        self.substitute(&Substitution {
            target_ring: self.ring.clone(),
            target_policy: self.policy.clone(),
            images,
            q_scale: 1,
            strict: false,
            allow_negative_q_constants: true,
        })
    }

    /// Canonical text rendering: one line per stored coefficient, sorted.
    pub fn render(&self) -> String {
        let mut s = String::new();
        for (mono, i, j, c) in self.iter_terms() {
            let mut parts = Vec::new();
            let o = self.ring.render_outer(&mono.outer);
            if !o.is_empty() {
                parts.push(o);
            }
            if mono.q != 0 {
                if self.ring.s_den == 1 {
                    parts.push(format!("q^{}", mono.q));
                } else {
                    parts.push(format!("q^({}/{})", mono.q, self.ring.s_den));
                }
            }
            if mono.z != 0 {
                parts.push(format!("z^{}", mono.z));
            }
            let m = if parts.is_empty() { "1".to_string() } else { parts.join("*") };
            if self.shape() == (1, 1) {
                let _ = writeln!(s, "{m}: {c}");
            } else {
                let _ = writeln!(s, "[{i},{j}] {m}: {c}");
            }
        }
        if let Some(p) = self.prec() {
            let _ = writeln!(s, "# known for q-numerator >= {p}");
        }
        s
    }
}

const ITER_CAP: usize = 400;

fn image_of(o: &Outer, nv: usize, images: &[Series], one: &Series, cache: &mut HashMap<Outer, Series>) -> Series {
    if let Some(s) = cache.get(o) {
        return s.clone();
    }
    // peel one variable off and recurse, memoizing every prefix product
    let Some(i) = (0..nv).rev().find(|&i| o[i] > 0) else {
        return one.clone();
    };
    let mut rest = *o;
    rest[i] -= 1;
    let r = image_of(&rest, nv, images, one, cache);
    let v = r.mul(&images[i]);
    cache.insert(*o, v.clone());
    v
}

/// Data for [`Series::substitute`].
#[derive(Clone, Debug)]
pub struct Substitution {
    pub target_ring: Arc<Ring>,
    pub target_policy: Arc<TruncationPolicy>,
    pub images: Vec<Series>,
    pub q_scale: i32,
    /// Reject images with outer-constant terms (composition must be adic).
    pub strict: bool,
    /// In strict mode, still allow constants that are negative 𝔮-powers.
    pub allow_negative_q_constants: bool,
}

/// Outer exponent vector from `(index, exponent)` pairs.
pub fn outer_from(pairs: &[(usize, u8)]) -> Outer {
    let mut o = OUTER_ONE;
    for &(i, e) in pairs {
        o[i] = e;
    }
    o
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn koszul_sign_of_two_odd_variables() {
        let ring = Ring::plain(vec![VariableSpec::parameter("a", 1), VariableSpec::parameter("b", 1)], 1).unwrap();
        let a = outer_from(&[(0, 1)]);
        let b = outer_from(&[(1, 1)]);
        assert_eq!(ring.outer_mul(&a, &b).unwrap().1, false);
        assert_eq!(ring.outer_mul(&b, &a).unwrap().1, true);
        assert!(ring.outer_mul(&a, &a).is_none());
    }
}
