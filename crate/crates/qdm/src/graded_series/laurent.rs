//! Laurent polynomials in (𝔮^{1/𝔰}, z) with a lower precision bound in 𝔮.
//!
//! A `Laurent` stores exact coefficients for every 𝔮-exponent at or above
//! `prec`; below `prec` nothing is known.  `prec = None` means the whole
//! polynomial is exact.  Products and sums propagate the bound so that a
//! truncated computation never silently reports a wrong coefficient.

use std::collections::BTreeMap;

use crate::exact_arith::{Cyclo, Rational};

/// Key `(q numerator, z exponent)`.
pub type LKey = (i32, i32);

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Laurent {
    pub(crate) terms: BTreeMap<LKey, Cyclo>,
    pub(crate) prec: Option<i32>,
}

impl Laurent {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn monomial(q: i32, z: i32, c: Cyclo) -> Self {
        let mut terms = BTreeMap::new();
        if !c.is_zero() {
            terms.insert((q, z), c);
        }
        Laurent { terms, prec: None }
    }

    pub fn terms(&self) -> &BTreeMap<LKey, Cyclo> {
        &self.terms
    }

    pub fn prec(&self) -> Option<i32> {
        self.prec
    }

    /// True when the value is known to be exactly zero.
    pub fn is_exact_zero(&self) -> bool {
        self.terms.is_empty() && self.prec.is_none()
    }

    /// True when no coefficient is stored (possibly with unknown low part).
    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn top_q(&self) -> Option<i32> {
        self.terms.keys().map(|k| k.0).max()
    }

    pub fn get(&self, q: i32, z: i32) -> Option<&Cyclo> {
        self.terms.get(&(q, z))
    }

    pub fn with_prec(mut self, p: Option<i32>) -> Self {
        self.prec = weaker_prec(self.prec, p);
        self.terms.retain(|k, _| p.is_none_or(|p| k.0 >= p));
        self
    }

    pub(crate) fn add_term(&mut self, k: LKey, c: &Cyclo) {
        if c.is_zero() || self.prec.is_some_and(|p| k.0 < p) {
            return;
        }
        match self.terms.get_mut(&k) {
            Some(v) => {
                *v = &*v + c;
                if v.is_zero() {
                    self.terms.remove(&k);
                }
            }
            None => {
                self.terms.insert(k, c.clone());
            }
        }
    }

    pub fn add_assign(&mut self, o: &Laurent) {
        self.add_scaled(o, None);
    }

    pub fn sub_assign(&mut self, o: &Laurent) {
        let neg = o.neg();
        self.add_scaled(&neg, None);
    }

    fn add_scaled(&mut self, o: &Laurent, s: Option<&Cyclo>) {
        let p = weaker_prec(self.prec, o.prec);
        if p != self.prec {
            self.prec = p;
            if let Some(p) = p {
                self.terms.retain(|k, _| k.0 >= p);
            }
        }
        for (k, c) in &o.terms {
            match s {
                Some(s) => self.add_term(*k, &(c * s)),
                None => self.add_term(*k, c),
            }
        }
    }

    pub fn neg(&self) -> Laurent {
        Laurent { terms: self.terms.iter().map(|(k, c)| (*k, -c)).collect(), prec: self.prec }
    }

    pub fn scale(&self, s: &Cyclo) -> Laurent {
        if s.is_zero() {
            return Laurent { terms: BTreeMap::new(), prec: self.prec };
        }
        Laurent { terms: self.terms.iter().map(|(k, c)| (*k, c * s)).collect(), prec: self.prec }
    }

    pub fn scale_rat(&self, s: &Rational) -> Laurent {
        Laurent {
            terms: self
                .terms
                .iter()
                .filter_map(|(k, c)| {
                    let v = c.scale(s);
                    (!v.is_zero()).then_some((*k, v))
                })
                .collect(),
            prec: self.prec,
        }
    }

    /// Multiplies by 𝔮^{dq} z^{dz}.
    pub fn shift(&self, dq: i32, dz: i32) -> Laurent {
        Laurent {
            terms: self.terms.iter().map(|((q, z), c)| ((q + dq, z + dz), c.clone())).collect(),
            prec: self.prec.map(|p| p + dq),
        }
    }

    /// Precision of a product, see the module docs.
    fn product_prec(a: &Laurent, b: &Laurent) -> Option<i32> {
        let side = |x: &Laurent, y: &Laurent| -> Option<i32> {
            // unknown part of y times everything of x
            let py = y.prec?;
            let ux = match (x.top_q(), x.prec) {
                (Some(t), Some(p)) => t.max(p - 1),
                (Some(t), None) => t,
                (None, Some(p)) => p - 1,
                (None, None) => return None,
            };
            Some(py + ux)
        };
        weaker_prec(side(a, b), side(b, a))
    }

    pub fn mul(&self, o: &Laurent) -> Laurent {
        let mut out = Laurent { terms: BTreeMap::new(), prec: Self::product_prec(self, o) };
        self.mul_into(o, &mut out);
        out
    }

    /// `acc += self·o`, folding in the product precision.
    pub fn mul_acc(&self, o: &Laurent, acc: &mut Laurent) {
        let p = Self::product_prec(self, o);
        let np = weaker_prec(acc.prec, p);
        if np != acc.prec {
            acc.prec = np;
            if let Some(p) = np {
                acc.terms.retain(|k, _| k.0 >= p);
            }
        }
        self.mul_into(o, acc);
    }

    fn mul_into(&self, o: &Laurent, out: &mut Laurent) {
        for ((qa, za), ca) in &self.terms {
            for ((qb, zb), cb) in &o.terms {
                let q = qa + qb;
                if out.prec.is_some_and(|p| q < p) {
                    continue;
                }
                out.add_term((q, za + zb), &(ca * cb));
            }
        }
    }

    /// Drops every term with q < floor, recording the loss in `prec`.
    pub fn floor_q(&mut self, floor: i32) {
        let before = self.terms.len();
        self.terms.retain(|k, _| k.0 >= floor);
        if self.terms.len() != before {
            self.prec = Some(self.prec.map_or(floor, |p| p.max(floor)));
        }
    }

    /// Restriction to the terms satisfying `f(q, z)`.
    pub fn filter(&self, f: impl Fn(i32, i32) -> bool) -> Laurent {
        Laurent {
            terms: self.terms.iter().filter(|(k, _)| f(k.0, k.1)).map(|(k, c)| (*k, c.clone())).collect(),
            prec: self.prec,
        }
    }

    pub fn map_coeffs(&self, f: impl Fn(i32, i32, &Cyclo) -> Cyclo) -> Laurent {
        Laurent {
            terms: self
                .terms
                .iter()
                .filter_map(|(k, c)| {
                    let v = f(k.0, k.1, c);
                    (!v.is_zero()).then_some((*k, v))
                })
                .collect(),
            prec: self.prec,
        }
    }

    /// Inverse of an element whose top 𝔮-term is a single monomial,
    /// expanded downward in 𝔮 to `floor`.
    pub fn inverse(&self, floor: i32) -> Option<Laurent> {
        let top = self.top_q()?;
        let lead: Vec<(&LKey, &Cyclo)> = self.terms.range((top, i32::MIN)..).collect();
        if lead.len() != 1 {
            return None;
        }
        let ((q0, z0), c0) = (*lead[0].0, lead[0].1.clone());
        let c0inv = c0.cyclo_inv().ok()?;
        let lead_inv = Laurent::monomial(-q0, -z0, c0inv);
        // self = lead·(1 + eps), eps strictly below in q
        let mut eps = self.mul(&lead_inv);
        eps.terms.remove(&(0, 0));
        let m = c0.order();
        let one = Laurent::monomial(0, 0, Cyclo::one(m));
        let shifted_floor = floor + q0;
        let mut sum = one.clone();
        let mut pow = one;
        let neg_eps = eps.neg();
        loop {
            pow = pow.mul(&neg_eps);
            pow.floor_q(shifted_floor);
            if pow.is_empty() {
                sum.prec = weaker_prec(sum.prec, pow.prec);
                break;
            }
            sum.add_assign(&pow);
        }
        sum.floor_q(shifted_floor);
        let mut out = sum.mul(&lead_inv);
        out.floor_q(floor);
        Some(out)
    }
}

pub(crate) fn weaker_prec(a: Option<i32>, b: Option<i32>) -> Option<i32> {
    match (a, b) {
        (Some(x), Some(y)) => Some(x.max(y)),
        (x, None) => x,
        (None, y) => y,
    }
}
