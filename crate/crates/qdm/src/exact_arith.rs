//! Exact arithmetic over Q and the cyclotomic fields Q(ζ_m).
//!
//! Elements of Q(ζ_m) are stored in the power basis `1, ζ, …, ζ^{φ(m)-1}`
//! reduced modulo the m-th cyclotomic polynomial, as an integer vector over a
//! single positive common denominator.  Keeping one denominator instead of a
//! vector of rationals saves most of the gcd work in long series products.

use std::collections::HashMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use std::str::FromStr;
use std::sync::{Arc, Mutex, OnceLock};

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use thiserror::Error;

pub mod linalg;

pub type Rational = BigRational;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ArithError {
    #[error("cyclotomic order mismatch: Q(zeta_{0}) vs Q(zeta_{1}); embed into a common field first")]
    OrderMismatch(u32, u32),
    #[error("attempt to invert zero")]
    ZeroInverse,
    #[error("sqrt({n}) is not representable in Q(zeta_{m})")]
    SqrtNotRepresentable { n: u64, m: u32 },
    #[error("{sub} does not divide the field order {m}")]
    NotDivisor { sub: u32, m: u32 },
    #[error("cannot parse number: {0}")]
    Parse(String),
}

pub fn rat(n: i64, d: i64) -> Rational {
    Rational::new(BigInt::from(n), BigInt::from(d))
}

pub fn rat_int(n: i64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

pub fn parse_rational(s: &str) -> Result<Rational, ArithError> {
    let t = s.trim();
    Rational::from_str(t).map_err(|_| ArithError::Parse(t.to_string()))
}

pub fn factorial(n: u64) -> BigInt {
    (1..=n).fold(BigInt::one(), |acc, k| acc * BigInt::from(k))
}

pub fn binomial(n: u64, k: u64) -> BigInt {
    if k > n {
        return BigInt::zero();
    }
    let k = k.min(n - k);
    (0..k).fold(BigInt::one(), |acc, i| acc * BigInt::from(n - i) / BigInt::from(i + 1))
}

pub fn euler_phi(m: u32) -> u32 {
    let mut n = m;
    let mut out = m;
    let mut p = 2;
    while p * p <= n {
        if n % p == 0 {
            while n % p == 0 {
                n /= p;
            }
            out -= out / p;
        }
        p += 1;
    }
    if n > 1 {
        out -= out / n;
    }
    out
}

/// Cached data for one cyclotomic field.
struct FieldData {
    phi: usize,
    /// Φ_m, ascending coefficients, monic.
    poly: Vec<BigInt>,
    /// `reduce[k]` = x^k mod Φ_m for k < max(2φ-1, m).
    reduce: Vec<Vec<BigInt>>,
}

fn poly_exact_div(num: &[BigInt], den: &[BigInt]) -> Vec<BigInt> {
    // both ascending, den monic
    let mut rem = num.to_vec();
    let dd = den.len() - 1;
    let mut q = vec![BigInt::zero(); rem.len() - dd];
    for i in (0..q.len()).rev() {
        let c = rem[i + dd].clone();
        if c.is_zero() {
            continue;
        }
        for (j, dj) in den.iter().enumerate() {
            rem[i + j] -= &c * dj;
        }
        q[i] = c;
    }
    debug_assert!(rem.iter().all(|c| c.is_zero()));
    q
}

fn cyclotomic_poly_uncached(m: u32) -> Vec<BigInt> {
    let mut p = vec![BigInt::zero(); m as usize + 1];
    p[0] = BigInt::from(-1);
    p[m as usize] = BigInt::one();
    for d in 1..m {
        if m % d == 0 {
            p = poly_exact_div(&p, &cyclotomic_poly(d));
        }
    }
    p
}

/// Φ_m with integer coefficients in ascending order.
pub fn cyclotomic_poly(m: u32) -> Vec<BigInt> {
    field(m).poly.clone()
}

fn field(m: u32) -> Arc<FieldData> {
    static CACHE: OnceLock<Mutex<HashMap<u32, Arc<FieldData>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    if let Some(f) = cache.lock().unwrap().get(&m) {
        return f.clone();
    }
    assert!(m >= 1, "cyclotomic order must be positive");
    let poly = if m == 1 {
        vec![BigInt::from(-1), BigInt::one()]
    } else {
        cyclotomic_poly_uncached(m)
    };
    let phi = poly.len() - 1;
    let top = (2 * phi).max(m as usize + 1);
    let mut reduce = Vec::with_capacity(top);
    let mut cur = vec![BigInt::zero(); phi];
    cur[0] = BigInt::one();
    for _ in 0..top {
        reduce.push(cur.clone());
        // multiply by x and reduce
        let carry = cur[phi - 1].clone();
        for i in (1..phi).rev() {
            cur[i] = cur[i - 1].clone();
        }
        cur[0] = BigInt::zero();
        if !carry.is_zero() {
            for i in 0..phi {
                cur[i] -= &carry * &poly[i];
            }
        }
    }
    let f = Arc::new(FieldData { phi, poly, reduce });
    cache.lock().unwrap().insert(m, f.clone());
    f
}

/// An element of Q(ζ_m), canonical: `den > 0` and `gcd(num.., den) = 1`.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Cyclo {
    m: u32,
    num: Vec<BigInt>,
    den: BigInt,
}

impl Cyclo {
    pub fn zero(m: u32) -> Self {
        let phi = field(m).phi;
        Cyclo { m, num: vec![BigInt::zero(); phi], den: BigInt::one() }
    }

    pub fn one(m: u32) -> Self {
        Self::from_rational(m, &Rational::one())
    }

    pub fn from_int(m: u32, n: i64) -> Self {
        Self::from_rational(m, &rat_int(n))
    }

    pub fn from_rational(m: u32, q: &Rational) -> Self {
        let mut c = Self::zero(m);
        c.num[0] = q.numer().clone();
        c.den = q.denom().clone();
        c
    }

    /// Builds Σ coeffs[k] ζ^k; `coeffs` may be longer than φ(m).
    pub fn from_coeffs(m: u32, coeffs: &[Rational]) -> Self {
        let f = field(m);
        let den = coeffs.iter().fold(BigInt::one(), |acc, c| acc.lcm(c.denom()));
        let ints: Vec<BigInt> = coeffs.iter().map(|c| c.numer() * (&den / c.denom())).collect();
        let mut out = Cyclo { m, num: reduce_poly(&f, m, &ints), den };
        out.normalize();
        out
    }

    /// ζ_m^k for any integer k.
    pub fn zeta_pow(m: u32, k: i64) -> Self {
        let f = field(m);
        let e = k.rem_euclid(m as i64) as usize;
        Cyclo { m, num: f.reduce[e].clone(), den: BigInt::one() }
    }

    pub fn order(&self) -> u32 {
        self.m
    }

    pub fn coeffs(&self) -> Vec<Rational> {
        self.num.iter().map(|n| Rational::new(n.clone(), self.den.clone())).collect()
    }

    pub fn is_zero(&self) -> bool {
        self.num.iter().all(|c| c.is_zero())
    }

    pub fn is_one(&self) -> bool {
        self.den.is_one() && self.num[0].is_one() && self.num[1..].iter().all(|c| c.is_zero())
    }

    /// The rational value, if the element lies in Q.
    pub fn as_rational(&self) -> Option<Rational> {
        if self.num[1..].iter().all(|c| c.is_zero()) {
            Some(Rational::new(self.num[0].clone(), self.den.clone()))
        } else {
            None
        }
    }

    fn normalize(&mut self) {
        if self.den.is_negative() {
            self.den = -self.den.clone();
            for c in self.num.iter_mut() {
                *c = -c.clone();
            }
        }
        let mut g = self.den.clone();
        for c in &self.num {
            if g.is_one() {
                break;
            }
            if !c.is_zero() {
                g = g.gcd(c);
            }
        }
        if self.is_zero() {
            self.den = BigInt::one();
            return;
        }
        if !g.is_one() {
            self.den /= &g;
            for c in self.num.iter_mut() {
                *c /= &g;
            }
        }
    }

    fn check(&self, o: &Self) -> Result<(), ArithError> {
        if self.m != o.m {
            Err(ArithError::OrderMismatch(self.m, o.m))
        } else {
            Ok(())
        }
    }

    pub fn try_add(&self, o: &Self) -> Result<Self, ArithError> {
        self.check(o)?;
        Ok(self.add_unchecked(o, false))
    }

    pub fn try_sub(&self, o: &Self) -> Result<Self, ArithError> {
        self.check(o)?;
        Ok(self.add_unchecked(o, true))
    }

    fn add_unchecked(&self, o: &Self, negate: bool) -> Self {
        if o.is_zero() {
            return self.clone();
        }
        if self.is_zero() {
            return if negate { -o.clone() } else { o.clone() };
        }
        let mut out;
        if self.den == o.den {
            out = Cyclo {
                m: self.m,
                num: self
                    .num
                    .iter()
                    .zip(&o.num)
                    .map(|(a, b)| if negate { a - b } else { a + b })
                    .collect(),
                den: self.den.clone(),
            };
        } else {
            let l = self.den.lcm(&o.den);
            let fa = &l / &self.den;
            let fb = &l / &o.den;
            out = Cyclo {
                m: self.m,
                num: self
                    .num
                    .iter()
                    .zip(&o.num)
                    .map(|(a, b)| if negate { a * &fa - b * &fb } else { a * &fa + b * &fb })
                    .collect(),
                den: l,
            };
        }
        out.normalize();
        out
    }

    /// Field product.  Errors when the orders differ.
    pub fn cyclo_mul(&self, o: &Self) -> Result<Self, ArithError> {
        self.check(o)?;
        Ok(self.mul_unchecked(o))
    }

    fn mul_unchecked(&self, o: &Self) -> Self {
        let f = field(self.m);
        let phi = f.phi;
        if phi == 1 {
            let mut out = Cyclo { m: self.m, num: vec![&self.num[0] * &o.num[0]], den: &self.den * &o.den };
            out.normalize();
            return out;
        }
        let mut conv = vec![BigInt::zero(); 2 * phi - 1];
        for (i, a) in self.num.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            for (j, b) in o.num.iter().enumerate() {
                if !b.is_zero() {
                    conv[i + j] += a * b;
                }
            }
        }
        let mut num: Vec<BigInt> = conv[..phi].to_vec();
        for (k, c) in conv.iter().enumerate().skip(phi) {
            if c.is_zero() {
                continue;
            }
            for (j, r) in f.reduce[k].iter().enumerate() {
                if !r.is_zero() {
                    num[j] += c * r;
                }
            }
        }
        let mut out = Cyclo { m: self.m, num, den: &self.den * &o.den };
        out.normalize();
        out
    }

    pub fn scale(&self, q: &Rational) -> Self {
        let mut out = Cyclo {
            m: self.m,
            num: self.num.iter().map(|c| c * q.numer()).collect(),
            den: &self.den * q.denom(),
        };
        out.normalize();
        out
    }

    pub fn scale_int(&self, n: i64) -> Self {
        self.scale(&rat_int(n))
    }

    /// Multiplicative inverse via the extended Euclidean algorithm against Φ_m.
    pub fn cyclo_inv(&self) -> Result<Self, ArithError> {
        if self.is_zero() {
            return Err(ArithError::ZeroInverse);
        }
        if let Some(q) = self.as_rational() {
            return Ok(Self::from_rational(self.m, &(Rational::one() / q)));
        }
        let f = field(self.m);
        let a: Vec<Rational> = self.coeffs();
        let p: Vec<Rational> = f.poly.iter().map(|c| Rational::from_integer(c.clone())).collect();
        // s·a + t·p = g, g constant
        let (g, s) = poly_egcd(&a, &p);
        debug_assert_eq!(g.len(), 1);
        let s: Vec<Rational> = s.iter().map(|c| c / &g[0]).collect();
        Ok(Self::from_coeffs(self.m, &s))
    }

    pub fn pow(&self, e: i64) -> Result<Self, ArithError> {
        let base = if e < 0 { self.cyclo_inv()? } else { self.clone() };
        let mut n = e.unsigned_abs();
        let mut acc = Self::one(self.m);
        let mut b = base;
        while n > 0 {
            if n & 1 == 1 {
                acc = acc.mul_unchecked(&b);
            }
            b = b.mul_unchecked(&b);
            n >>= 1;
        }
        Ok(acc)
    }

    /// The Galois automorphism ζ ↦ ζ^k (k coprime to m).
    pub fn galois(&self, k: i64) -> Self {
        let f = field(self.m);
        let mut num = vec![BigInt::zero(); f.phi];
        for (j, c) in self.num.iter().enumerate() {
            if c.is_zero() {
                continue;
            }
            let e = (j as i64 * k).rem_euclid(self.m as i64) as usize;
            for (i, r) in f.reduce[e].iter().enumerate() {
                if !r.is_zero() {
                    num[i] += c * r;
                }
            }
        }
        let mut out = Cyclo { m: self.m, num, den: self.den.clone() };
        out.normalize();
        out
    }

    /// Image under Q(ζ_m) ⊂ Q(ζ_{m2}), ζ_m = ζ_{m2}^{m2/m}.
    pub fn embed(&self, m2: u32) -> Result<Self, ArithError> {
        if m2 % self.m != 0 {
            return Err(ArithError::NotDivisor { sub: self.m, m: m2 });
        }
        if m2 == self.m {
            return Ok(self.clone());
        }
        let step = (m2 / self.m) as usize;
        let mut big = vec![BigInt::zero(); (self.num.len() - 1) * step + 1];
        for (j, c) in self.num.iter().enumerate() {
            big[j * step] = c.clone();
        }
        let f = field(m2);
        let mut out = Cyclo { m: m2, num: reduce_poly(&f, m2, &big), den: self.den.clone() };
        out.normalize();
        Ok(out)
    }

    /// Numerical value under ζ_m ↦ e^{2πi/m}; used only for branch selection.
    pub fn to_complex(&self) -> (f64, f64) {
        let den = self.den.to_f64().unwrap_or(f64::INFINITY);
        let mut re = 0.0;
        let mut im = 0.0;
        for (k, c) in self.num.iter().enumerate() {
            let v = c.to_f64().unwrap_or(f64::NAN) / den;
            let ang = 2.0 * std::f64::consts::PI * k as f64 / self.m as f64;
            re += v * ang.cos();
            im += v * ang.sin();
        }
        (re, im)
    }
}

fn reduce_poly(f: &FieldData, m: u32, ints: &[BigInt]) -> Vec<BigInt> {
    let mut out = vec![BigInt::zero(); f.phi];
    for (k, c) in ints.iter().enumerate() {
        if c.is_zero() {
            continue;
        }
        let e = if k < f.reduce.len() { k } else { k % m as usize };
        for (j, r) in f.reduce[e].iter().enumerate() {
            if !r.is_zero() {
                out[j] += c * r;
            }
        }
    }
    out
}

fn trim(p: &mut Vec<Rational>) {
    while p.len() > 1 && p.last().is_some_and(|c| c.is_zero()) {
        p.pop();
    }
}

fn poly_divrem(a: &[Rational], b: &[Rational]) -> (Vec<Rational>, Vec<Rational>) {
    let mut r = a.to_vec();
    trim(&mut r);
    let mut b = b.to_vec();
    trim(&mut b);
    let db = b.len() - 1;
    if r.len() <= db {
        return (vec![Rational::zero()], r);
    }
    let mut q = vec![Rational::zero(); r.len() - db];
    let lead = b[db].clone();
    for i in (0..q.len()).rev() {
        let c = &r[i + db] / &lead;
        if c.is_zero() {
            continue;
        }
        for (j, bj) in b.iter().enumerate() {
            r[i + j] -= &c * bj;
        }
        q[i] = c;
    }
    r.truncate(db.max(1));
    trim(&mut r);
    (q, r)
}

fn poly_mul(a: &[Rational], b: &[Rational]) -> Vec<Rational> {
    let mut out = vec![Rational::zero(); a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        for (j, y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

fn poly_sub(a: &[Rational], b: &[Rational]) -> Vec<Rational> {
    let n = a.len().max(b.len());
    let mut out = vec![Rational::zero(); n];
    for (i, x) in a.iter().enumerate() {
        out[i] += x;
    }
    for (i, y) in b.iter().enumerate() {
        out[i] -= y;
    }
    trim(&mut out);
    out
}

/// Returns (g, s) with s·a ≡ g (mod p).
fn poly_egcd(a: &[Rational], p: &[Rational]) -> (Vec<Rational>, Vec<Rational>) {
    let (mut r0, mut r1) = (p.to_vec(), a.to_vec());
    trim(&mut r1);
    let (mut s0, mut s1) = (vec![Rational::zero()], vec![Rational::one()]);
    while !(r1.len() == 1 && r1[0].is_zero()) {
        let (q, r) = poly_divrem(&r0, &r1);
        let s2 = poly_sub(&s0, &poly_mul(&q, &s1));
        r0 = std::mem::replace(&mut r1, r);
        s0 = std::mem::replace(&mut s1, s2);
    }
    (r0, s0)
}

impl Add for &Cyclo {
    type Output = Cyclo;
    fn add(self, o: &Cyclo) -> Cyclo {
        self.try_add(o).expect("cyclotomic order mismatch")
    }
}

impl Sub for &Cyclo {
    type Output = Cyclo;
    fn sub(self, o: &Cyclo) -> Cyclo {
        self.try_sub(o).expect("cyclotomic order mismatch")
    }
}

impl Mul for &Cyclo {
    type Output = Cyclo;
    fn mul(self, o: &Cyclo) -> Cyclo {
        assert_eq!(self.m, o.m, "cyclotomic order mismatch");
        self.mul_unchecked(o)
    }
}

impl Neg for Cyclo {
    type Output = Cyclo;
    fn neg(mut self) -> Cyclo {
        for c in self.num.iter_mut() {
            *c = -std::mem::take(c);
        }
        self
    }
}

impl Neg for &Cyclo {
    type Output = Cyclo;
    fn neg(self) -> Cyclo {
        -self.clone()
    }
}

impl fmt::Display for Cyclo {
    /// Rationals print bare; other elements as `[m; c0, c1, ...]`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if let Some(q) = self.as_rational() {
            return write!(f, "{q}");
        }
        write!(f, "[{};", self.m)?;
        for (k, c) in self.coeffs().iter().enumerate() {
            write!(f, "{}{}", if k == 0 { " " } else { ", " }, c)?;
        }
        write!(f, "]")
    }
}

impl fmt::Debug for Cyclo {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

/// Serialized form `{m, [num/den strings]}`.
#[derive(Debug, Clone, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct CycloRepr {
    pub m: u32,
    pub coeffs: Vec<String>,
}

impl From<&Cyclo> for CycloRepr {
    fn from(c: &Cyclo) -> Self {
        CycloRepr { m: c.m, coeffs: c.coeffs().iter().map(|q| q.to_string()).collect() }
    }
}

impl TryFrom<&CycloRepr> for Cyclo {
    type Error = ArithError;
    fn try_from(r: &CycloRepr) -> Result<Self, ArithError> {
        if r.m == 0 {
            return Err(ArithError::Parse("order 0".into()));
        }
        let qs = r.coeffs.iter().map(|s| parse_rational(s)).collect::<Result<Vec<_>, _>>()?;
        Ok(Cyclo::from_coeffs(r.m, &qs))
    }
}

/// True iff `a` lies in Q(ζ_{sub}) ⊂ Q(ζ_m): invariance under ζ ↦ ζ^k for
/// all units k ≡ 1 (mod sub).
pub fn subfield_membership(a: &Cyclo, sub: u32) -> Result<bool, ArithError> {
    let m = a.m;
    if sub == 0 || m % sub != 0 {
        return Err(ArithError::NotDivisor { sub, m });
    }
    for k in 1..m as i64 {
        if k.gcd(&(m as i64)) != 1 || (k - 1) % sub as i64 != 0 || k == 1 {
            continue;
        }
        if a.galois(k) != *a {
            return Ok(false);
        }
    }
    Ok(true)
}

fn legendre(a: u64, p: u64) -> i64 {
    let mut r = 1u64;
    let mut b = a % p;
    let mut e = (p - 1) / 2;
    while e > 0 {
        if e & 1 == 1 {
            r = r * b % p;
        }
        b = b * b % p;
        e >>= 1;
    }
    if r == 1 {
        1
    } else if r == 0 {
        0
    } else {
        -1
    }
}

/// Quadratic Gauss sum of the odd prime p inside Q(ζ_m); squares to p* = ±p.
fn gauss_sum(p: u64, m: u32) -> Cyclo {
    let step = (m as u64 / p) as i64;
    let mut acc = Cyclo::zero(m);
    for a in 1..p {
        let z = Cyclo::zeta_pow(m, a as i64 * step);
        acc = if legendre(a, p) == 1 { &acc + &z } else { &acc - &z };
    }
    acc
}

/// The positive square root of n in Q(ζ_m).
///
/// Built from Gauss sums per odd prime plus the square roots of ±1, ±2 in
/// Q(ζ_8); the sign is fixed by one floating evaluation at ζ_m = e^{2πi/m}.
pub fn sqrt_integer(n: u64, m: u32) -> Result<Cyclo, ArithError> {
    let err = || ArithError::SqrtNotRepresentable { n, m };
    if n == 0 {
        return Ok(Cyclo::zero(m));
    }
    let mut rest = n;
    let mut square = 1u64;
    let mut free = Vec::new();
    let mut p = 2u64;
    while p * p <= rest {
        let mut e = 0;
        while rest % p == 0 {
            rest /= p;
            e += 1;
        }
        square *= p.pow(e / 2);
        if e % 2 == 1 {
            free.push(p);
        }
        p += 1;
    }
    if rest > 1 {
        free.push(rest);
    }
    let n_free: u64 = free.iter().product();
    if n_free > 1 {
        let conductor = if n_free % 4 == 1 { n_free } else { 4 * n_free };
        if m as u64 % conductor != 0 {
            return Err(err());
        }
    }
    let mut val = Cyclo::from_int(m, square as i64);
    // product of Gauss sums over odd primes: squares to eps * (odd part)
    let mut eps = 1i64;
    for &q in free.iter().filter(|&&q| q != 2) {
        val = &val * &gauss_sum(q, m);
        if q % 4 == 3 {
            eps = -eps;
        }
    }
    let two = free.contains(&2);
    let fix = match (eps, two) {
        (1, false) => Cyclo::one(m),
        (-1, false) => Cyclo::zeta_pow(m, m as i64 / 4),
        (1, true) => {
            let e = m as i64 / 8;
            &Cyclo::zeta_pow(m, e) + &Cyclo::zeta_pow(m, -e)
        }
        _ => {
            let e = m as i64 / 8;
            &Cyclo::zeta_pow(m, e) + &Cyclo::zeta_pow(m, 3 * e)
        }
    };
    val = &val * &fix;
    if &val * &val != Cyclo::from_int(m, n as i64) {
        return Err(err());
    }
    let (re, im) = val.to_complex();
    if im.abs() > 1e-6 {
        return Err(err());
    }
    Ok(if re < 0.0 { -val } else { val })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn phi_polys() {
        let p = cyclotomic_poly(12);
        let as_i: Vec<i64> = p.iter().map(|c| c.to_i64().unwrap()).collect();
        assert_eq!(as_i, vec![1, 0, -1, 0, 1]);
        assert_eq!(euler_phi(24), 8);
        assert_eq!(euler_phi(1), 1);
    }

    #[test]
    fn display_forms() {
        assert_eq!(Cyclo::from_rational(4, &rat(3, 2)).to_string(), "3/2");
        assert_eq!(Cyclo::zeta_pow(4, 1).to_string(), "[4; 0, 1]");
    }

    #[test]
    fn repr_round_trip() {
        let a = Cyclo::from_coeffs(8, &[rat(1, 3), rat(0, 1), rat(-5, 7), rat(2, 1)]);
        let r = CycloRepr::from(&a);
        assert_eq!(Cyclo::try_from(&r).unwrap(), a);
    }
}
