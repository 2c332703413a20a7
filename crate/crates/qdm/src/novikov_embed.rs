//! Embedding of the Novikov rings of X̃ and Z into the common ring
//! Q[[Q]]((𝔮^{-1/𝔰})), and the branch constants λ_j, h_{Z,j}, q_{Z,j}.
//!
//! 𝔮-exponents are stored as numerators over 𝔰.  The branch of every
//! fractional power of e^{−πi} is (e^{−πi})^a = e^{−πi·a}, so that
//! λ_0 = −𝔱^{1/(r−1)} with 𝔱 = e^{−πi}𝔮.

use std::sync::Arc;

use num_traits::Zero;
use thiserror::Error;

use crate::exact_arith::{sqrt_integer, ArithError, Cyclo, Rational};
use crate::geometry_model::BlowupGeometry;
use crate::graded_series::{Ring, Series, TruncationPolicy, OUTER_ONE};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum EmbedError {
    #[error("class {0:?} is not effective in the configured monoid")]
    NonEffective(Vec<i64>),
    #[error("𝔮-exponent {num}/{den} is not representable over 𝔰 = {s}")]
    Denominator { num: i64, den: i64, s: u32 },
    #[error("j = {j} out of range for r = {r}")]
    BranchIndex { j: u32, r: u32 },
    #[error("codimension r = {0} must be at least 2")]
    Codimension(u32),
    #[error(transparent)]
    Arith(#[from] ArithError),
}

/// 𝔰 = r−1 for even r, 2(r−1) for odd r.
pub fn s_den(r: u32) -> u32 {
    if r % 2 == 0 {
        r - 1
    } else {
        2 * (r - 1)
    }
}

/// Order m of the coefficient field Q(ζ_m) holding every constant.
pub fn field_order(r: u32) -> u32 {
    4 * (r - 1)
}

/// c·𝔮^{q_num/𝔰}.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QMonomial {
    pub coeff: Cyclo,
    pub q_num: i32,
}

impl QMonomial {
    pub fn to_series(&self, ring: &Arc<Ring>, policy: &Arc<TruncationPolicy>) -> Series {
        Series::monomial(ring, policy, OUTER_ONE, self.q_num, 0, self.coeff.clone())
    }
}

/// Q^{x}𝔮^{q_num/𝔰} with x a class of X (generator exponents).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NovikovImage {
    pub x_class: Vec<u32>,
    pub q_num: i32,
}

/// h_{Z,j} = factor · (2πi) · ρ_Z, with 2πi kept formal.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FormalH {
    pub factor: Rational,
    pub rho: Vec<Rational>,
}

impl FormalH {
    pub fn is_zero(&self) -> bool {
        self.factor.is_zero() || self.rho.iter().all(|x| x.is_zero())
    }
}

#[derive(Debug, Clone)]
pub struct EmbeddingContext {
    pub r: u32,
    pub s: u32,
    pub m: u32,
    xt_curves: Vec<(Vec<u32>, i64)>,
    z_curves: Vec<(Vec<u32>, i64)>,
    xt_c1: Vec<i64>,
    x_c1: Vec<i64>,
    z_c1: Vec<i64>,
}

impl EmbeddingContext {
    pub fn new(g: &BlowupGeometry) -> Result<Self, EmbedError> {
        if g.r < 2 {
            return Err(EmbedError::Codimension(g.r));
        }
        Ok(EmbeddingContext {
            r: g.r,
            s: s_den(g.r),
            m: field_order(g.r),
            xt_curves: g.xt_curves.clone(),
            z_curves: g.z_curves.clone(),
            xt_c1: g.xt.curves.iter().map(|c| c.c1).collect(),
            x_c1: g.x.curves.iter().map(|c| c.c1).collect(),
            z_c1: g.z.curves.iter().map(|c| c.c1).collect(),
        })
    }

    /// Degree of 𝔮 (the full power, not 𝔮^{1/𝔰}).
    pub fn q_degree(&self) -> i32 {
        2 * (self.r as i32 - 1)
    }

    /// Q̃^{d̃} ↦ Q^{φ_*d̃} 𝔮^{−D·d̃}.
    pub fn embed_xtilde(&self, d: &[i64]) -> Result<NovikovImage, EmbedError> {
        if d.len() != self.xt_curves.len() || d.iter().any(|&e| e < 0) {
            return Err(EmbedError::NonEffective(d.to_vec()));
        }
        let nx = self.x_c1.len();
        let mut x = vec![0u32; nx];
        let mut dd = 0i64;
        for (g, &e) in d.iter().enumerate() {
            let (push, ddot) = &self.xt_curves[g];
            for (k, &p) in push.iter().enumerate() {
                x[k] += p * e as u32;
            }
            dd += ddot * e;
        }
        Ok(NovikovImage { x_class: x, q_num: (-dd * self.s as i64) as i32 })
    }

    /// Q_Z^{d} ↦ Q^{ι_*d} 𝔮^{−ρ_Z·d/(r−1)}.
    pub fn embed_z(&self, d: &[i64]) -> Result<NovikovImage, EmbedError> {
        if d.len() != self.z_curves.len() || d.iter().any(|&e| e < 0) {
            return Err(EmbedError::NonEffective(d.to_vec()));
        }
        let nx = self.x_c1.len();
        let mut x = vec![0u32; nx];
        let mut rho = 0i64;
        for (g, &e) in d.iter().enumerate() {
            let (push, rd) = &self.z_curves[g];
            for (k, &p) in push.iter().enumerate() {
                x[k] += p * e as u32;
            }
            rho += rd * e;
        }
        let num = -rho * self.s as i64;
        let den = self.r as i64 - 1;
        if num % den != 0 {
            return Err(EmbedError::Denominator { num: -rho, den, s: self.s });
        }
        Ok(NovikovImage { x_class: x, q_num: (num / den) as i32 })
    }

    /// Degree of an image: 2c₁(X)·x + deg 𝔮 · q_num/𝔰.
    pub fn image_degree(&self, img: &NovikovImage) -> Rational {
        let x: i64 = img.x_class.iter().zip(&self.x_c1).map(|(&e, &c)| e as i64 * c).sum();
        Rational::from_integer((2 * x).into()) + Rational::new((self.q_degree() as i64 * img.q_num as i64).into(), (self.s as i64).into())
    }

    /// Degree preservation for one X̃ class and one Z class.
    pub fn degrees_preserved(&self, dt: &[i64], dz: &[i64]) -> Result<bool, EmbedError> {
        let a = self.embed_xtilde(dt)?;
        let lhs_a: i64 = 2 * dt.iter().zip(&self.xt_c1).map(|(&e, &c)| e * c).sum::<i64>();
        let mut ok = self.image_degree(&a) == Rational::from_integer(lhs_a.into());
        if !dz.is_empty() {
            let b = self.embed_z(dz)?;
            // c₁(X)|_Z = c₁(Z) + ρ_Z
            let lhs_b: i64 = 2 * dz.iter().zip(&self.z_c1).zip(&self.z_curves).map(|((&e, &c), (_, rd))| e * (c + rd)).sum::<i64>();
            ok &= self.image_degree(&b) == Rational::from_integer(lhs_b.into());
        }
        Ok(ok)
    }

    pub fn constants(&self, j: u32) -> Result<(QMonomial, FormalH, QMonomial), EmbedError> {
        constants(self.r, j)
    }
}

/// λ_j = −e^{−πi(2j+1)/(r−1)} 𝔮^{1/(r−1)}.
pub fn lambda(r: u32, j: u32) -> Result<QMonomial, EmbedError> {
    if r < 2 {
        return Err(EmbedError::Codimension(r));
    }
    if j > r - 2 {
        return Err(EmbedError::BranchIndex { j, r });
    }
    let m = field_order(r);
    let s = s_den(r);
    // e^{πi x} = ζ_m^{2(r−1)x}
    let coeff = -Cyclo::zeta_pow(m, -2 * (2 * j as i64 + 1));
    Ok(QMonomial { coeff, q_num: (s / (r - 1)) as i32 })
}

/// q_{Z,j} = (i√(r−1))⁻¹ e^{πirj/(r−1)} (e^{−πi}𝔮)^{−r/(2(r−1))}.
pub fn q_z(r: u32, j: u32) -> Result<QMonomial, EmbedError> {
    lambda(r, j)?;
    let m = field_order(r);
    let s = s_den(r) as i64;
    let root = sqrt_integer(r as u64 - 1, m)?;
    let i = Cyclo::zeta_pow(m, r as i64 - 1);
    let pref = (&i * &root).cyclo_inv()?;
    let phase = Cyclo::zeta_pow(m, 2 * r as i64 * j as i64 + r as i64);
    let q_num = -(r as i64) * s / (2 * (r as i64 - 1));
    Ok(QMonomial { coeff: &pref * &phase, q_num: q_num as i32 })
}

/// (λ_j, h_{Z,j} as a multiple of 2πi·ρ_Z (ρ_Z left empty), q_{Z,j}).
pub fn constants(r: u32, j: u32) -> Result<(QMonomial, FormalH, QMonomial), EmbedError> {
    let l = lambda(r, j)?;
    let h = FormalH { factor: Rational::new((2 * j as i64 + 1).into(), (2 * (r as i64 - 1)).into()), rho: Vec::new() };
    Ok((l, h, q_z(r, j)?))
}

/// h_{Z,j} for a concrete geometry.
pub fn h_z(g: &BlowupGeometry, j: u32) -> Result<FormalH, EmbedError> {
    let (_, mut h, _) = constants(g.r, j)?;
    h.rho = g.rho_z.clone();
    Ok(h)
}

/// Rewrites 𝔮-coefficients as 𝔱-coefficients: 𝔮^{p/𝔰} = e^{πip/𝔰}𝔱^{p/𝔰}.
pub fn rewrite_in_t(a: &Series) -> Result<Series, EmbedError> {
    let s = a.ring().s_den() as i32;
    let m = a.ring().order() as i32;
    if m % (2 * s) != 0 {
        return Err(EmbedError::Denominator { num: 1, den: 2 * s as i64, s: s as u32 });
    }
    let step = (m / (2 * s)) as i64;
    Ok(a.map_coeffs(|_, _, _, q, _, c| c * &Cyclo::zeta_pow(m as u32, step * q as i64)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn field_and_denominator() {
        assert_eq!((s_den(2), s_den(3), s_den(4), s_den(5)), (1, 4, 3, 8));
        for r in 2..8 {
            assert_eq!(s_den(r) % (r - 1), 0);
            assert_eq!(field_order(r) % s_den(r), 0);
        }
    }
}
