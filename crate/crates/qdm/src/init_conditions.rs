//! Initial data of the reconstruction: τ°, ς_j°, the Fourier bracket behind
//! ℱ_{Z,j}, and the block matrix Ψ°.
//!
//! The Fourier bracket is evaluated in the variable v = u/√(c_Zλ_j) with
//! w = z/λ_j as the expansion parameter, where every coefficient is
//! rational; only the final conversion to 𝔮 introduces cyclotomic numbers.
//! Quantum Riemann–Roch data is scalar (Z a point), so ρ_Z = ρ_F = 0.

use std::collections::BTreeMap;
use std::sync::Arc;

use num_traits::{One, Zero};
use thiserror::Error;

use crate::exact_arith::{factorial, subfield_membership, Cyclo, Rational};
use crate::geometry_model::{BlowupGeometry, CohomologyModel, FourierData, Gaussian};
use crate::graded_series::{Ring, Series, SeriesError, TruncationPolicy, OUTER_ONE};
use crate::novikov_embed::{lambda, q_z, rewrite_in_t, s_den, EmbedError, FormalH};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum InitError {
    #[error("geometry {0} has no equivariant restriction tables")]
    MissingTables(String),
    #[error("geometry {0} has no Fourier/delta data")]
    MissingFourier(String),
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("𝔮-depth is unbounded; set a finite min_q in the truncation policy")]
    DepthUnbounded,
    #[error("delta data has {have} log coefficients, {need} needed for the requested depth")]
    DeltaTooShort { have: usize, need: usize },
    #[error(transparent)]
    Embed(#[from] EmbedError),
    #[error(transparent)]
    Series(#[from] SeriesError),
}

/// Row layout of H_decomp = H*(X) ⊕ H*(Z)^{⊕(r−1)}.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Layout {
    pub nx: usize,
    pub nz: usize,
    pub nt: usize,
    pub r: u32,
}

impl Layout {
    pub fn of(g: &BlowupGeometry) -> Self {
        Layout { nx: g.x.n(), nz: g.z.n(), nt: g.xt.n(), r: g.r }
    }

    pub fn n(&self) -> usize {
        self.nx + (self.r as usize - 1) * self.nz
    }

    pub fn z_off(&self, j: usize) -> usize {
        self.nx + j * self.nz
    }

    /// Degrees of the H_decomp basis.
    pub fn degrees(&self, g: &BlowupGeometry) -> Vec<i32> {
        let mut d: Vec<i32> = g.x.degrees.iter().map(|&x| x as i32).collect();
        for _ in 0..self.r - 1 {
            d.extend(g.z.degrees.iter().map(|&x| x as i32));
        }
        d
    }

    pub fn parities(&self, g: &BlowupGeometry) -> Vec<bool> {
        let mut p: Vec<bool> = (0..self.nx).map(|i| g.x.is_odd(i)).collect();
        for _ in 0..self.r - 1 {
            p.extend((0..self.nz).map(|i| g.z.is_odd(i)));
        }
        p
    }

    pub fn hodge(&self, g: &BlowupGeometry) -> Vec<bool> {
        let mut h: Vec<bool> = g.x.hodge.iter().map(|&(p, q)| p == q).collect();
        for _ in 0..self.r - 1 {
            h.extend(g.z.hodge.iter().map(|&(p, q)| p == q));
        }
        h
    }
}

/// Ring of the initial data: 𝔮^{1/𝔰} and z only.
pub fn bare_ring(r: u32) -> Arc<Ring> {
    Ring::new(Vec::new(), s_den(r), 2 * (r as i32 - 1), 4 * (r - 1)).expect("bare ring")
}

// ---------------------------------------------------------------------------
// H*(Z)[z, z⁻¹]

/// Element of H*(Z)[z, z⁻¹]: z-power ↦ class.
pub type ZPoly = BTreeMap<i32, Vec<Rational>>;

fn zpoly_mul(m: &CohomologyModel, a: &ZPoly, b: &ZPoly) -> ZPoly {
    let mut out = ZPoly::new();
    for (ea, va) in a {
        for (eb, vb) in b {
            let p = m.cup_vec(va, vb);
            let e = out.entry(ea + eb).or_insert_with(|| vec![Rational::zero(); m.n()]);
            for (x, y) in e.iter_mut().zip(p) {
                *x += y;
            }
        }
    }
    out.retain(|_, v| v.iter().any(|x| !x.is_zero()));
    out
}

fn zpoly_one(m: &CohomologyModel) -> ZPoly {
    ZPoly::from([(0, m.basis_vec(m.unit))])
}

/// e_λ(N) = Σ_k c_k(N) λ^{r−k} at λ = −νz.
pub fn equivariant_euler(chern: &[Vec<Rational>], nu: i64) -> ZPoly {
    let r = chern.len() as i32 - 1;
    let mut out = ZPoly::new();
    for (k, c) in chern.iter().enumerate() {
        let e = r - k as i32;
        let f = Rational::from_integer((-nu).pow(e as u32).into());
        let v: Vec<Rational> = c.iter().map(|x| x * &f).collect();
        if v.iter().any(|x| !x.is_zero()) {
            out.insert(e, v);
        }
    }
    out
}

fn euler_product(g: &BlowupGeometry, k: i64) -> ZPoly {
    (1..k).fold(zpoly_one(&g.z), |acc, nu| zpoly_mul(&g.z, &acc, &equivariant_euler(&g.normal_chern, nu)))
}

fn floor_of(policy: &TruncationPolicy) -> Result<i32, InitError> {
    if policy.min_q < -100_000 {
        return Err(InitError::DepthUnbounded);
    }
    Ok(policy.min_q)
}

fn cyc(m: u32, x: &Rational) -> Cyclo {
    Cyclo::from_rational(m, x)
}

/// Multiplication operator of a column series in the cup ring of `model`.
pub fn cup_operator(model: &CohomologyModel, col: &Series) -> Series {
    let n = model.n();
    let mut out = Series::zero(col.ring(), col.policy(), n, n);
    let m = col.ring().order();
    for (mono, i, _, c) in col.iter_terms() {
        let mat = model.cup_matrix(&model.basis_vec(i));
        for a in 0..n {
            for b in 0..n {
                let v = mat.get(a, b);
                if !v.is_zero() {
                    out.add_entry_term(mono.outer, a, b, mono.q, mono.z, &(c * &cyc(m, v)));
                }
            }
        }
    }
    let mut out = out.with_policy(col.policy());
    out.truncate();
    out
}

/// Σ_{n≥0} xⁿ/n! for a 𝔮-adically nilpotent square series.
fn exp_nilpotent(x: &Series) -> Series {
    let n = x.shape().0;
    let mut acc = Series::identity(x.ring(), x.policy(), n);
    let mut term = acc.clone();
    for k in 1..10_000u64 {
        term = term.mul(x).scale_rat(&Rational::new(1.into(), k.into()));
        if term.is_empty() {
            break;
        }
        acc = acc.add(&term);
    }
    acc
}

// ---------------------------------------------------------------------------
// τ°

/// τ° = [z⁻¹] log(1 + Σ_{k>0} 𝔮^{−k} ι_*(∏_{ν<k} e_{−νz}(N))/(k! z^k)).
pub fn tau_init(g: &BlowupGeometry, ring: &Arc<Ring>, policy: &Arc<TruncationPolicy>) -> Result<Series, InitError> {
    let floor = floor_of(policy)?;
    let s = ring.s_den() as i32;
    let m = ring.order();
    let nx = g.x.n();
    let kmax = (-floor) / s;
    let mut x = Series::zero(ring, policy, nx, nx);
    for k in 1..=kmax as i64 {
        let kf = Rational::new(1.into(), factorial(k as u64).into());
        for (e, v) in euler_product(g, k) {
            let pushed = g.iota_push.mul_vec(&v);
            let op = g.x.cup_matrix(&pushed);
            for a in 0..nx {
                for b in 0..nx {
                    let c = op.get(a, b) * &kf;
                    if !c.is_zero() {
                        x.add_entry_term(OUTER_ONE, a, b, -(k as i32) * s, e - k as i32, &cyc(m, &c));
                    }
                }
            }
        }
    }
    let x = x.with_q_floor(floor);
    // log(1 + x)·1
    let mut col = Series::from_matrix(ring, policy, nx, 1, |i, _| if i == g.x.unit { Rational::one() } else { Rational::zero() });
    let mut log = Series::zero(ring, policy, nx, 1);
    for n in 1..10_000i64 {
        col = x.mul(&col);
        if col.is_empty() {
            break;
        }
        let sign = if n % 2 == 1 { 1 } else { -1 };
        log = log.add(&col.scale_rat(&Rational::new(sign.into(), n.into())));
    }
    Ok(log.filter_z(|z| z == -1).shift(0, 1).with_q_floor(floor))
}

// ---------------------------------------------------------------------------
// Fourier bracket

/// Laurent polynomial in (w, z) with rational coefficients.
pub type Wz = BTreeMap<(i32, i32), Rational>;

fn wz_add(a: &mut Wz, k: (i32, i32), c: Rational) {
    if c.is_zero() {
        return;
    }
    let e = a.entry(k).or_insert_with(Rational::zero);
    *e += c;
    if e.is_zero() {
        a.remove(&k);
    }
}

/// Polynomial in v with `Wz` coefficients, truncated by the half-integral
/// weight 2·(w-exponent) + (v-exponent) ≤ cut.  Under the Gaussian bracket
/// v^{2k} carries w^k, so the weight bounds the final w-exponent and no
/// factor can lower it.
#[derive(Debug, Clone, PartialEq)]
pub struct VSeries {
    pub cut: i32,
    pub coeffs: BTreeMap<u32, Wz>,
}

impl VSeries {
    pub fn zero(cut: i32) -> Self {
        VSeries { cut, coeffs: BTreeMap::new() }
    }

    pub fn one(cut: i32) -> Self {
        let mut s = Self::zero(cut);
        s.add(0, (0, 0), Rational::one());
        s
    }

    pub fn add(&mut self, n: u32, k: (i32, i32), c: Rational) {
        if 2 * k.0 + n as i32 > self.cut {
            return;
        }
        let e = self.coeffs.entry(n).or_default();
        wz_add(e, k, c);
        if e.is_empty() {
            self.coeffs.remove(&n);
        }
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn mul(&self, o: &Self) -> Self {
        let mut out = Self::zero(self.cut.min(o.cut));
        for (na, a) in &self.coeffs {
            for (nb, b) in &o.coeffs {
                for (ka, ca) in a {
                    for (kb, cb) in b {
                        out.add(na + nb, (ka.0 + kb.0, ka.1 + kb.1), ca * cb);
                    }
                }
            }
        }
        out
    }

    pub fn scale(&self, c: &Rational) -> Self {
        let mut out = Self::zero(self.cut);
        for (n, a) in &self.coeffs {
            for (k, x) in a {
                out.add(*n, *k, x * c);
            }
        }
        out
    }

    pub fn plus(&self, o: &Self) -> Self {
        let mut out = self.clone();
        for (n, a) in &o.coeffs {
            for (k, x) in a {
                out.add(*n, *k, x.clone());
            }
        }
        out
    }

    /// exp of a series of positive weight.
    pub fn exp(&self) -> Self {
        let mut acc = Self::one(self.cut);
        let mut term = acc.clone();
        for k in 1.. {
            term = term.mul(self).scale(&Rational::new(1.into(), (k as i64).into()));
            if term.is_zero() {
                break;
            }
            acc = acc.plus(&term);
        }
        acc
    }

    /// Σ_n (a v)ⁿ/n! = e^{av}.
    pub fn exp_linear(a: &Rational, cut: i32) -> Self {
        let mut s = Self::zero(cut);
        let mut c = Rational::one();
        for n in 0..=cut.max(0) as u32 {
            s.add(n, (0, 0), c.clone());
            c = &c * a / Rational::from_integer((n as i64 + 1).into());
        }
        s
    }
}

/// [e^{D} H]_{v=0} with D = (z/2)∂_u² (half-z) or (z∂_u)² (z-squared),
/// written in v with c = c_Z:  v^{2k} ↦ (2k)!/k!·(w/2c)^k  resp.  (zw/c)^k.
pub fn gaussian_bracket(h: &VSeries, mode: Gaussian, c: &Rational) -> Wz {
    let mut out = Wz::new();
    for (n, a) in &h.coeffs {
        if n % 2 == 1 {
            continue;
        }
        let k = (n / 2) as u64;
        let comb = Rational::from_integer((factorial(2 * k) / factorial(k)).into());
        let (base, zk) = match mode {
            Gaussian::HalfZ => (Rational::one() / (c * Rational::from_integer(2.into())), 0),
            Gaussian::ZSquared => (Rational::one() / c, k as i32),
        };
        let f = &comb * pow_rat(&base, k as i32);
        for (key, x) in a {
            wz_add(&mut out, (key.0 + k as i32, key.1 + zk), x * &f);
        }
    }
    out
}

fn pow_rat(x: &Rational, e: i32) -> Rational {
    if e >= 0 {
        num_traits::pow(x.clone(), e as usize)
    } else {
        num_traits::pow(Rational::one() / x, (-e) as usize)
    }
}

/// The integrand e^{−g/z} e^{v(1+p−r_F/2)} ∏_α Δ̃_α⁻¹ for f = λ^p, up to
/// final w-exponent `nmax`.
pub fn fourier_integrand(fd: &FourierData, r: u32, p: u32, nmax: i32) -> Result<VSeries, InitError> {
    let cut = 2 * nmax;
    let c = Rational::from_integer((-(r as i64 - 1)).into());
    let mut x = VSeries::zero(cut);
    // −g/z = −(c/w) Σ_{n≥3} (n−1)/n! vⁿ
    for n in 3..=(cut + 2).max(0) as u32 {
        let coef = -&c * Rational::new((n as i64 - 1).into(), factorial(n as u64).into());
        x.add(n, (-1, 0), coef);
    }
    // log Δ̃_α⁻¹ = −Σ_k a_k (w/w_α)^{2k−1} e^{−(2k−1)v}
    for (wa, mult, coeffs) in &fd.delta {
        let mut k = 1usize;
        while 2 * (2 * k as i32 - 1) <= cut {
            let a = coeffs.get(k - 1).ok_or(InitError::DeltaTooShort { have: coeffs.len(), need: k })?;
            let e = 2 * k as i32 - 1;
            let f = -a * Rational::from_integer((*mult as i64).into()) * pow_rat(&Rational::from_integer((*wa).into()), -e);
            let ev = VSeries::exp_linear(&Rational::from_integer((-(e as i64)).into()), cut);
            for (n, wz) in &ev.coeffs {
                for (_, y) in wz {
                    x.add(*n, (e, 0), &f * y);
                }
            }
            k += 1;
        }
    }
    let lin = Rational::from_integer((1 + p as i64).into()) - Rational::new((fd.r_f as i64).into(), 2.into());
    let mut h = x.exp().mul(&VSeries::exp_linear(&lin, cut));
    h.cut = cut;
    Ok(h)
}

/// The bracket [e^{D} e^{−g/z} e^{v} Φ]_{u=0} for f = λ^p, as a series in
/// (w, z) with rational coefficients and w-exponent ≤ nmax.
pub fn fourier_bracket(fd: &FourierData, r: u32, p: u32, nmax: i32) -> Result<Wz, InitError> {
    if fd.rho_f.iter().any(|x| !x.is_zero()) {
        return Err(InitError::Unsupported("nonzero ρ_F needs non-scalar Δ̃".into()));
    }
    let h = fourier_integrand(fd, r, p, nmax)?;
    let c = Rational::from_integer((-(r as i64 - 1)).into());
    let mut b = gaussian_bracket(&h, fd.gaussian, &c);
    b.retain(|k, _| k.0 <= nmax);
    Ok(b)
}

fn wz_mul(a: &Wz, b: &Wz, nmax: i32) -> Wz {
    let mut out = Wz::new();
    for (ka, ca) in a {
        for (kb, cb) in b {
            let k = (ka.0 + kb.0, ka.1 + kb.1);
            if k.0 <= nmax {
                wz_add(&mut out, k, ca * cb);
            }
        }
    }
    out
}

/// log of 1 + (terms of positive w-exponent).
fn wz_log(b: &Wz, nmax: i32) -> Wz {
    let mut x = b.clone();
    wz_add(&mut x, (0, 0), -Rational::one());
    let mut out = Wz::new();
    let mut pw = x.clone();
    for n in 1..=nmax.max(0) {
        let f = Rational::new((if n % 2 == 1 { 1 } else { -1 }).into(), (n as i64).into());
        for (k, c) in &pw {
            wz_add(&mut out, *k, c * &f);
        }
        pw = wz_mul(&pw, &x, nmax);
    }
    out
}

fn wz_exp(x: &Wz, nmax: i32) -> Wz {
    let mut acc: Wz = Wz::from([((0, 0), Rational::one())]);
    let mut term = acc.clone();
    for k in 1..=nmax.max(0) + 1 {
        term = wz_mul(&term, x, nmax);
        let f = Rational::new(1.into(), (k as i64).into());
        term.values_mut().for_each(|c| *c *= &f);
        for (key, c) in &term {
            wz_add(&mut acc, *key, c.clone());
        }
    }
    acc
}

fn scalar_z_check(g: &BlowupGeometry) -> Result<&FourierData, InitError> {
    let fd = g.fourier.as_ref().ok_or_else(|| InitError::MissingFourier(g.name.clone()))?;
    if g.rho_z.iter().any(|x| !x.is_zero()) {
        return Err(InitError::Unsupported("ρ_Z ≠ 0 requires Chern-root Δ̃ data".into()));
    }
    Ok(fd)
}

/// Per-branch data: λ_j, q_{Z,j} and the w-depth needed for the floor.
struct Branch {
    lam: Cyclo,
    lam_q: i32,
    qz: Cyclo,
    qz_q: i32,
    nmax: i32,
}

fn branch(g: &BlowupGeometry, j: u32, floor: i32, pmax: i32) -> Result<Branch, InitError> {
    let l = lambda(g.r, j)?;
    let q = q_z(g.r, j)?;
    // entry exponent qz + (p − N)·lq ≥ floor
    let nmax = pmax + (q.q_num - floor).div_euclid(l.q_num);
    Ok(Branch { lam: l.coeff, lam_q: l.q_num, qz: q.coeff, qz_q: q.q_num, nmax: nmax.max(0) })
}

impl Branch {
    /// c·w^N z^M λ^p ↦ c·λ_j^{p−N} z^{N+M} (without q_{Z,j}).
    fn term(&self, p: i32, key: (i32, i32)) -> (i32, i32, Cyclo) {
        let e = p - key.0;
        (e * self.lam_q, key.0 + key.1, self.lam.pow(e as i64).expect("λ_j invertible"))
    }
}

/// [z⁻¹]-correction of log ℱ_{Z,j}(1), as a (w, z) series; it vanishes
/// whenever the bracket has no negative z-powers.
fn log_correction(fd: &FourierData, r: u32, nmax: i32) -> Result<Wz, InitError> {
    let b0 = fourier_bracket(fd, r, 0, nmax)?;
    let mut l = wz_log(&b0, nmax);
    l.retain(|k, _| k.0 + k.1 == -1);
    Ok(l)
}

/// ℱ_{Z,j}(f) for f = Σ_p f[p] λ^p (f[p] ∈ H*(Z)), as an nZ×1 series.
pub fn fourier_fz(g: &BlowupGeometry, j: u32, f: &[Vec<Rational>], ring: &Arc<Ring>, policy: &Arc<TruncationPolicy>) -> Result<Series, InitError> {
    let fd = scalar_z_check(g)?;
    let floor = floor_of(policy)?;
    let br = branch(g, j, floor, f.len() as i32)?;
    let m = ring.order();
    let nz = g.z.n();
    let mut out = Series::zero(ring, policy, nz, 1);
    for (p, fp) in f.iter().enumerate() {
        if fp.iter().all(|x| x.is_zero()) {
            continue;
        }
        let b = fourier_bracket(fd, g.r, p as u32, br.nmax)?;
        for (key, c) in &b {
            let (q, z, lam) = br.term(p as i32, *key);
            let k = &(&lam * &br.qz) * &cyc(m, c);
            for (i, fi) in fp.iter().enumerate() {
                if !fi.is_zero() {
                    out.add_entry_term(OUTER_ONE, i, 0, q + br.qz_q, z, &k.scale(fi));
                }
            }
        }
    }
    let mut out = out.with_policy(policy);
    out.truncate();
    Ok(out.with_q_floor(floor))
}

/// ς_j° = −(r−1)λ_j + h_{Z,j} + [z⁻¹] log(𝔮^{ρ_Z/((r−1)z)} ℱ_{Z,j}(1)).
/// Returns the series part and the formal h_{Z,j}.
pub fn varsigma_init(g: &BlowupGeometry, j: u32, ring: &Arc<Ring>, policy: &Arc<TruncationPolicy>) -> Result<(Series, FormalH), InitError> {
    let fd = scalar_z_check(g)?;
    let floor = floor_of(policy)?;
    let br = branch(g, j, floor, 1)?;
    let m = ring.order();
    let nz = g.z.n();
    let unit = g.z.unit;
    let mut out = Series::zero(ring, policy, nz, 1);
    let lead = -&br.lam.scale_int(g.r as i64 - 1);
    out.add_entry_term(OUTER_ONE, unit, 0, br.lam_q, 0, &lead);
    for (key, c) in log_correction(fd, g.r, br.nmax)? {
        // the [z⁻¹] coefficient: z^{N+M} = z^{-1} dropped
        let (q, _, lam) = br.term(0, key);
        out.add_entry_term(OUTER_ONE, unit, 0, q, 0, &(&lam * &cyc(m, &c)));
    }
    let mut out = out.with_policy(policy);
    out.truncate();
    let h = crate::novikov_embed::h_z(g, j)?;
    Ok((out.with_q_floor(floor), h))
}

fn tables(g: &BlowupGeometry) -> Result<(&crate::exact_arith::linalg::RatMatrix, &Vec<crate::exact_arith::linalg::RatMatrix>), InitError> {
    match (&g.kappa_x, &g.iz) {
        (Some(k), Some(i)) => Ok((k, i)),
        _ => Err(InitError::MissingTables(g.name.clone())),
    }
}

/// i_Z^*κ⁻¹γ as a list over λ-powers.
fn iz_column(iz: &[crate::exact_arith::linalg::RatMatrix], gamma: usize) -> Vec<Vec<Rational>> {
    iz.iter().map(|t| (0..t.rows()).map(|i| t.get(i, gamma).clone()).collect()).collect()
}

/// Ψ°_X: H*(X̃) → H*(X) (nX × nX̃).
pub fn psi_x_init(g: &BlowupGeometry, tau: &Series, ring: &Arc<Ring>, policy: &Arc<TruncationPolicy>) -> Result<Series, InitError> {
    let (kx, iz) = tables(g)?;
    let floor = floor_of(policy)?;
    let s = ring.s_den() as i32;
    let m = ring.order();
    let (nx, nt) = (g.x.n(), g.xt.n());
    let kmax = (-floor) / s;
    let mut a = Series::zero(ring, policy, nx, nt);
    for gamma in 0..nt {
        for i in 0..nx {
            let v = kx.get(i, gamma);
            if !v.is_zero() {
                a.add_entry_term(OUTER_ONE, i, gamma, 0, 0, &cyc(m, v));
            }
        }
        let f = iz_column(iz, gamma);
        for k in 1..=kmax as i64 {
            // [f]_{λ=kz}
            let mut fk = ZPoly::new();
            for (p, fp) in f.iter().enumerate() {
                if fp.iter().any(|x| !x.is_zero()) {
                    let sc = Rational::from_integer(k.pow(p as u32).into());
                    fk.insert(p as i32, fp.iter().map(|x| x * &sc).collect());
                }
            }
            let kf = Rational::new(1.into(), factorial(k as u64).into());
            for (e, v) in zpoly_mul(&g.z, &euler_product(g, k), &fk) {
                let pushed = g.iota_push.mul_vec(&v);
                for (i, c) in pushed.iter().enumerate() {
                    if !c.is_zero() {
                        a.add_entry_term(OUTER_ONE, i, gamma, -(k as i32) * s, e - k as i32, &cyc(m, &(c * &kf)));
                    }
                }
            }
        }
    }
    let mut a = a.with_policy(policy);
    a.truncate();
    let a = a.with_q_floor(floor);
    let t = cup_operator(&g.x, tau).shift(0, -1).neg();
    Ok(exp_nilpotent(&t).mul(&a))
}

/// Ψ°_{Z,j}: H*(X̃) → H*(Z) (nZ × nX̃).
pub fn psi_z_init(g: &BlowupGeometry, j: u32, ring: &Arc<Ring>, policy: &Arc<TruncationPolicy>) -> Result<Series, InitError> {
    let (_, iz) = tables(g)?;
    let fd = scalar_z_check(g)?;
    let floor = floor_of(policy)?;
    let (nz, nt) = (g.z.n(), g.xt.n());
    let m = ring.order();
    let pmax = iz.len() as i32;
    let br = branch(g, j, floor, pmax)?;
    // e^{−(ς°+(r−1)λ)/z} in (w, z): the [z⁻¹] log part divided by z
    let corr: Wz = log_correction(fd, g.r, br.nmax)?.into_iter().map(|(k, c)| ((k.0, k.1 - 1), -c)).collect();
    let damp = wz_exp(&corr, br.nmax);
    let mut out = Series::zero(ring, policy, nz, nt);
    for gamma in 0..nt {
        for (p, fp) in iz_column(iz, gamma).iter().enumerate() {
            if fp.iter().all(|x| x.is_zero()) {
                continue;
            }
            let b = wz_mul(&damp, &fourier_bracket(fd, g.r, p as u32, br.nmax)?, br.nmax);
            for (key, c) in &b {
                let (q, z, lam) = br.term(p as i32, *key);
                let k = &(&lam * &br.qz) * &cyc(m, c);
                for (i, fi) in fp.iter().enumerate() {
                    if !fi.is_zero() {
                        out.add_entry_term(OUTER_ONE, i, gamma, q + br.qz_q, z, &k.scale(fi));
                    }
                }
            }
        }
    }
    let mut out = out.with_policy(policy);
    out.truncate();
    Ok(out.with_q_floor(floor))
}

/// The full initial data.
#[derive(Debug, Clone)]
pub struct InitialConditions {
    pub layout: Layout,
    pub tau: Series,
    pub varsigma: Vec<Series>,
    pub h: Vec<FormalH>,
    /// n_decomp × nX̃
    pub psi: Series,
    pub floor: i32,
}

impl InitialConditions {
    pub fn compute(g: &BlowupGeometry, ring: &Arc<Ring>, policy: &Arc<TruncationPolicy>) -> Result<Self, InitError> {
        let layout = Layout::of(g);
        let floor = floor_of(policy)?;
        let tau = tau_init(g, ring, policy)?;
        let mut varsigma = Vec::new();
        let mut h = Vec::new();
        let mut blocks = vec![psi_x_init(g, &tau, ring, policy)?];
        for j in 0..g.r - 1 {
            let (s, hj) = varsigma_init(g, j, ring, policy)?;
            varsigma.push(s);
            h.push(hj);
            blocks.push(psi_z_init(g, j, ring, policy)?);
        }
        let psi = stack_rows(&blocks, layout.nt);
        Ok(InitialConditions { layout, tau, varsigma, h, psi, floor })
    }

    pub fn psi_x(&self) -> Series {
        rows_of(&self.psi, 0, self.layout.nx)
    }

    pub fn psi_z(&self, j: usize) -> Series {
        rows_of(&self.psi, self.layout.z_off(j), self.layout.nz)
    }
}

/// Vertical concatenation.
pub fn stack_rows(blocks: &[Series], cols: usize) -> Series {
    let rows: usize = blocks.iter().map(|b| b.shape().0).sum();
    let first = &blocks[0];
    let mut out = Series::zero(first.ring(), first.policy(), rows, cols);
    let mut off = 0;
    for b in blocks {
        for i in 0..b.shape().0 {
            for j in 0..cols {
                out.set_entry(off + i, j, &b.entry(i, j));
            }
        }
        off += b.shape().0;
    }
    out
}

/// Rows `start..start+n`.
pub fn rows_of(a: &Series, start: usize, n: usize) -> Series {
    let cols = a.shape().1;
    let mut out = Series::zero(a.ring(), a.policy(), n, cols);
    for i in 0..n {
        for j in 0..cols {
            out.set_entry(i, j, &a.entry(start + i, j));
        }
    }
    out
}

// ---------------------------------------------------------------------------
// checks; each returns a witness on failure

fn max_q_outside(a: &Series, allowed: impl Fn(usize, usize, i32) -> bool) -> Option<String> {
    for (mono, i, j, c) in a.iter_terms() {
        if !allowed(i, j, mono.q) {
            return Some(format!("entry ({i},{j}) term 𝔮^{}/{} z^{} coefficient {c}", mono.q, a.ring().s_den(), mono.z));
        }
    }
    None
}

fn column_of(model_n: usize, v: &[Rational], ring: &Arc<Ring>, policy: &Arc<TruncationPolicy>) -> Series {
    Series::from_matrix(ring, policy, model_n, 1, |i, _| v[i].clone())
}

/// Property (b): τ° = 𝔮⁻¹[Z] + O(𝔮⁻²); ς_j° = −(r−1)λ_j + h_{Z,j} + O(𝔮^{−1/(r−1)}).
pub fn check_property_b(g: &BlowupGeometry, ic: &InitialConditions) -> Option<String> {
    let ring = ic.tau.ring();
    let pol = ic.tau.policy();
    let s = ring.s_den() as i32;
    let z_class = g.iota_push.mul_vec(&g.z.basis_vec(g.z.unit));
    let lead = column_of(g.x.n(), &z_class, ring, pol).shift(-s, 0);
    let rest = ic.tau.sub(&lead);
    if let Some(w) = max_q_outside(&rest, |_, _, q| q <= -2 * s) {
        return Some(format!("τ°: {w}"));
    }
    for (j, v) in ic.varsigma.iter().enumerate() {
        let l = match lambda(g.r, j as u32) {
            Ok(l) => l,
            Err(e) => return Some(e.to_string()),
        };
        let mut lead = Series::zero(ring, pol, g.z.n(), 1);
        lead.add_entry_term(OUTER_ONE, g.z.unit, 0, l.q_num, 0, &-&l.coeff.scale_int(g.r as i64 - 1));
        let rest = v.sub(&lead);
        let step = s / (g.r as i32 - 1);
        if let Some(w) = max_q_outside(&rest, |_, _, q| q <= -step) {
            return Some(format!("ς_{j}°: {w}"));
        }
    }
    None
}

/// ι^*: H*(X) → H*(Z) from ι_* and the two pairings.
pub fn iota_pull(g: &BlowupGeometry) -> crate::exact_arith::linalg::RatMatrix {
    g.z.pairing_inv.mul(&g.iota_push.transpose()).mul(&g.x.pairing)
}

/// Property (e): leading asymptotics of Ψ°∘dec.
pub fn check_property_e(g: &BlowupGeometry, ic: &InitialConditions) -> Option<String> {
    let ring = ic.psi.ring();
    let pol = ic.psi.policy();
    let m = ring.order();
    let s = ring.s_den() as i32;
    let lay = ic.layout;
    let dec = Series::from_matrix(ring, pol, lay.nt, lay.n(), |i, j| g.dec.get(i, j).clone());
    let p = ic.psi.mul(&dec);
    // X rows
    let px = rows_of(&p, 0, lay.nx);
    let mut expect = Series::zero(ring, pol, lay.nx, lay.n());
    for i in 0..lay.nx {
        expect.add_entry_term(OUTER_ONE, i, i, 0, 0, &Cyclo::one(m));
    }
    if let Some(w) = max_q_outside(&px.sub(&expect), |_, _, q| q <= -s) {
        return Some(format!("Ψ°_X: {w}"));
    }
    let pull = iota_pull(g);
    let step = s / (g.r as i32 - 1);
    for j in 0..lay.r as usize - 1 {
        let (l, q) = match (lambda(g.r, j as u32), q_z(g.r, j as u32)) {
            (Ok(l), Ok(q)) => (l, q),
            _ => return Some("branch constants".into()),
        };
        let pz = rows_of(&p, lay.z_off(j), lay.nz);
        let mut expect = Series::zero(ring, pol, lay.nz, lay.n());
        for a in 0..lay.nz {
            for i in 0..lay.nx {
                let v = pull.get(a, i);
                if !v.is_zero() {
                    expect.add_entry_term(OUTER_ONE, a, i, q.q_num, 0, &q.coeff.scale(v));
                }
            }
            for ll in 0..lay.r as usize - 1 {
                let e = (ll + 1) as i64;
                let sign = if ll % 2 == 0 { 1 } else { -1 };
                let c = (&q.coeff * &l.coeff.pow(e).expect("pow")).scale_int(sign);
                expect.add_entry_term(OUTER_ONE, a, lay.z_off(ll) + a, q.q_num + l.q_num * e as i32, 0, &c);
            }
        }
        // relative error: every remaining term lies 𝔮^{1/(r−1)} below the leading one of its column
        let lead_q = |col: usize| -> i32 {
            if col < lay.nx {
                q.q_num
            } else {
                q.q_num + l.q_num * ((col - lay.nx) / lay.nz + 1) as i32
            }
        };
        if let Some(w) = max_q_outside(&pz.sub(&expect), |_, c, qq| qq <= lead_q(c) - step) {
            return Some(format!("Ψ°_Z,{j}: {w}"));
        }
    }
    None
}

/// Property (a)/(d): τ°, ς° of degree 2 − deg φ_i; Ψ°_X degree 0,
/// Ψ°_{Z,j} degree −r; parity preserved.
pub fn check_homogeneity(g: &BlowupGeometry, ic: &InitialConditions) -> Option<String> {
    let ring = ic.psi.ring().clone();
    let col_check = |a: &Series, model: &CohomologyModel, what: &str| -> Option<String> {
        for (mono, i, _, _) in a.iter_terms() {
            let d = ring.term_degree(&mono.outer, mono.q, mono.z);
            if d != 2 - model.degrees[i] as i32 || model.is_odd(i) {
                return Some(format!("{what}: entry {i} has degree {d}"));
            }
        }
        None
    };
    if let Some(w) = col_check(&ic.tau, &g.x, "τ°") {
        return Some(w);
    }
    for v in &ic.varsigma {
        if let Some(w) = col_check(v, &g.z, "ς°") {
            return Some(w);
        }
    }
    let lay = ic.layout;
    let rdeg = lay.degrees(g);
    let rpar = lay.parities(g);
    for (mono, i, j, _) in ic.psi.iter_terms() {
        let base = if i < lay.nx { 0 } else { -(g.r as i32) };
        let want = base + g.xt.degrees[j] as i32 - rdeg[i];
        let d = ring.term_degree(&mono.outer, mono.q, mono.z);
        if d != want || rpar[i] != g.xt.is_odd(j) {
            return Some(format!("Ψ° entry ({i},{j}): degree {d}, expected {want}"));
        }
    }
    None
}

/// Ψ°_{Z,j} = Ψ°_{Z,0}|_{𝔱→e^{−2πij}𝔱} and likewise for ς_j° − h_{Z,j}.
pub fn check_monodromy(ic: &InitialConditions) -> Option<String> {
    let z0 = ic.psi_z(0);
    for j in 1..ic.layout.r as usize - 1 {
        match z0.monodromy_substitute(j as i64) {
            Ok(x) if x == ic.psi_z(j) => {}
            _ => return Some(format!("Ψ°_Z,{j} is not the monodromy image of Ψ°_Z,0")),
        }
        match ic.varsigma[0].monodromy_substitute(j as i64) {
            Ok(x) if x == ic.varsigma[j] => {}
            _ => return Some(format!("ς_{j}° − h is not the monodromy image")),
        }
    }
    None
}

/// Cyclotomic containment: q_{Z,0}⁻¹Ψ°_{Z,0} and ς_0° − h_{Z,0} have
/// coefficients in Q(ζ_{2(r−1)}); after the 𝔱-rewrite, Ψ°_X, τ° and
/// q_{Z,0}⁻¹Ψ°_{Z,0} have rational coefficients.
pub fn check_cyclotomic(g: &BlowupGeometry, ic: &InitialConditions) -> Option<String> {
    let sub = 2 * (g.r - 1);
    let q = match q_z(g.r, 0) {
        Ok(q) => q,
        Err(e) => return Some(e.to_string()),
    };
    let inv = match q.coeff.cyclo_inv() {
        Ok(c) => c,
        Err(e) => return Some(e.to_string()),
    };
    let zs = ic.psi_z(0).scale(&inv).shift(-q.q_num, 0);
    for (what, a) in [("q⁻¹Ψ°_Z,0", &zs), ("ς_0°", &ic.varsigma[0])] {
        for (mono, i, j, c) in a.iter_terms() {
            if !subfield_membership(c, sub).unwrap_or(false) {
                return Some(format!("{what} ({i},{j}) 𝔮^{} z^{}: {c} ∉ Q(ζ_{sub})", mono.q, mono.z));
            }
        }
    }
    for (what, a) in [("Ψ°_X", ic.psi_x()), ("τ°", ic.tau.clone()), ("q⁻¹Ψ°_Z,0", zs)] {
        let t = match rewrite_in_t(&a) {
            Ok(t) => t,
            Err(e) => return Some(e.to_string()),
        };
        for (mono, i, j, c) in t.iter_terms() {
            if c.as_rational().is_none() {
                return Some(format!("{what} in 𝔱: ({i},{j}) 𝔱^{} z^{}: {c} not rational", mono.q, mono.z));
            }
        }
    }
    None
}

/// Hodge compatibility: Hodge columns land in Hodge rows; τ°, ς° are
/// Hodge classes.
pub fn check_hodge(g: &BlowupGeometry, ic: &InitialConditions) -> Option<String> {
    let rows = ic.layout.hodge(g);
    let cols: Vec<bool> = g.xt.hodge.iter().map(|&(p, q)| p == q).collect();
    for (mono, i, j, c) in ic.psi.iter_terms() {
        if cols[j] && !rows[i] {
            return Some(format!("Ψ° maps Hodge class {} to non-Hodge row {i} (𝔮^{} z^{}: {c})", g.xt.labels[j], mono.q, mono.z));
        }
    }
    for (mono, i, _, c) in ic.tau.iter_terms() {
        if g.x.hodge[i].0 != g.x.hodge[i].1 {
            return Some(format!("τ° has non-Hodge component {} (𝔮^{}: {c})", g.x.labels[i], mono.q));
        }
    }
    for v in &ic.varsigma {
        for (_, i, _, c) in v.iter_terms() {
            if g.z.hodge[i].0 != g.z.hodge[i].1 {
                return Some(format!("ς° has non-Hodge component {} ({c})", g.z.labels[i]));
            }
        }
    }
    None
}
