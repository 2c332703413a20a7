//! Serde mirror of the TOML configuration format.
//!
//! Linear combinations are written as tables `{ label = "rational" }`, so a
//! config never depends on basis order except through `labels`.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

pub type Comb = BTreeMap<String, String>;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigDoc {
    pub name: String,
    /// "blowup" or "model"
    pub kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r: Option<u32>,
    pub x: ModelDoc,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub z: Option<ModelDoc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub xtilde: Option<ModelDoc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub blowup: Option<BlowupDoc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub equivariant: Option<EquivariantDoc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fourier: Option<FourierDoc>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelDoc {
    pub labels: Vec<String>,
    pub degrees: Vec<i32>,
    pub hodge: Vec<[i32; 2]>,
    pub unit: String,
    pub point: String,
    /// Products other than those with the unit; the opposite order follows
    /// from graded commutativity.
    #[serde(default)]
    pub cup: Vec<CupDoc>,
    /// Rows of the Poincaré pairing, as rational strings.
    pub pairing: Vec<Vec<String>>,
    #[serde(default)]
    pub curves: Vec<CurveDoc>,
    #[serde(default)]
    pub gw: Vec<SeedDoc>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CupDoc {
    pub a: String,
    pub b: String,
    pub value: Comb,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CurveDoc {
    pub name: String,
    pub c1: i64,
    pub omega: u32,
    /// Intersection numbers with degree-2 classes.
    #[serde(default)]
    pub dot: Comb,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SeedDoc {
    /// curve generator name -> multiplicity
    pub class: BTreeMap<String, u32>,
    #[serde(default)]
    pub insertions: Vec<String>,
    pub value: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BlowupDoc {
    /// Z label -> ι_* of it in X
    pub iota_push: BTreeMap<String, Comb>,
    /// X label -> φ^* of it in X̃
    pub phi_pull: BTreeMap<String, Comb>,
    /// for l = 0..r-2: Z label -> j_*(p^l π^* ·) in X̃
    pub j_push: Vec<BTreeMap<String, Comb>>,
    #[serde(default)]
    pub rho_z: Comb,
    /// c_0(N), …, c_r(N) as classes on Z
    pub normal_chern: Vec<Comb>,
    /// the class of the exceptional divisor D in X̃
    pub exceptional: Comb,
    /// name of the X̃ curve generator that is a line in a fiber of D → Z
    pub fiber: String,
    #[serde(default)]
    pub xtilde_curves: BTreeMap<String, XtCurveDoc>,
    #[serde(default)]
    pub z_curves: BTreeMap<String, ZCurveDoc>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct XtCurveDoc {
    #[serde(default)]
    pub phi_push: BTreeMap<String, u32>,
    pub d_dot: i64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ZCurveDoc {
    #[serde(default)]
    pub iota_push: BTreeMap<String, u32>,
    pub rho_dot: i64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EquivariantDoc {
    /// X̃ label -> κ_X(κ^{-1}γ)
    pub kappa_x: BTreeMap<String, Comb>,
    /// X̃ label -> i_Z^*(κ^{-1}γ) as a list over powers of λ
    pub iz: BTreeMap<String, Vec<Comb>>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FourierDoc {
    pub r_f: u32,
    #[serde(default)]
    pub rho_f: Comb,
    /// "half-z" (e^{(z/2)∂_u²}) or "z-squared" (e^{(z∂_u)²})
    #[serde(default = "default_gaussian")]
    pub gaussian: String,
    #[serde(default)]
    pub delta: Vec<DeltaDoc>,
}

fn default_gaussian() -> String {
    "half-z".into()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DeltaDoc {
    pub weight: i64,
    pub multiplicity: u32,
    /// log Δ̃_α = Σ_k log_coeffs[k-1]·(z/α)^{2k-1}
    pub log_coeffs: Vec<String>,
}
