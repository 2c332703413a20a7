//! Cohomology models of X, Z, X̃ and the blowup data connecting them.
//!
//! Everything is finite tabular input read from TOML (see [`doc`]) and
//! validated on load; nothing is computed from equations.

pub mod doc;

use std::collections::BTreeMap;

use num_traits::{One, Zero};
use thiserror::Error;

use crate::exact_arith::linalg::RatMatrix;
use crate::exact_arith::{parse_rational, ArithError, Rational};

pub use doc::ConfigDoc;
use doc::{Comb, ModelDoc};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GeometryError {
    #[error("config parse error: {0}")]
    Parse(String),
    #[error("{model}: pairing nondegenerate violated")]
    SingularPairing { model: String },
    #[error("{model}: pairing inconsistent with cup product at ({a}, {b})")]
    PairingMismatch { model: String, a: String, b: String },
    #[error("dec not bijective")]
    DecNotBijective,
    #[error("{0}: degree bookkeeping violation")]
    Degree(String),
    #[error("{0}: bidegree violation")]
    Bidegree(String),
    #[error("{0}: cup product not associative/graded-commutative/unital")]
    Cup(String),
    #[error("unknown label {label} in {context}")]
    UnknownLabel { label: String, context: String },
    #[error("missing section: {0}")]
    Missing(String),
    #[error("curve convention violated: {0}")]
    CurveConvention(String),
    #[error("no bundled geometry named {0}")]
    UnknownBundled(String),
    #[error("io error reading {path}: {msg}")]
    Io { path: String, msg: String },
    #[error(transparent)]
    Arith(#[from] ArithError),
}

type Result<T> = std::result::Result<T, GeometryError>;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CurveGen {
    pub name: String,
    pub c1: i64,
    pub omega: u32,
    /// intersection numbers with every basis class (zero off degree 2)
    pub dot: Vec<Rational>,
}

/// A genus-0 correlator value supplied by the config.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GwSeed {
    pub class: Vec<u32>,
    pub insertions: Vec<usize>,
    pub value: Rational,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CohomologyModel {
    pub name: String,
    pub labels: Vec<String>,
    pub degrees: Vec<i32>,
    pub hodge: Vec<(i32, i32)>,
    /// `cup[a][b][c]`: coefficient of φ_c in φ_a ∪ φ_b
    pub cup: Vec<Vec<Vec<Rational>>>,
    pub pairing: RatMatrix,
    pub pairing_inv: RatMatrix,
    pub unit: usize,
    pub point: usize,
    pub dim: i32,
    pub curves: Vec<CurveGen>,
    pub seeds: Vec<GwSeed>,
}

impl CohomologyModel {
    pub fn n(&self) -> usize {
        self.labels.len()
    }

    pub fn index(&self, label: &str) -> Option<usize> {
        self.labels.iter().position(|l| l == label)
    }

    pub fn is_odd(&self, i: usize) -> bool {
        self.degrees[i].rem_euclid(2) == 1
    }

    /// Sub-basis of classes of type (p, p).
    pub fn hodge_subspace(&self) -> Vec<usize> {
        (0..self.n()).filter(|&i| self.hodge[i].0 == self.hodge[i].1).collect()
    }

    pub fn cup_vec(&self, a: &[Rational], b: &[Rational]) -> Vec<Rational> {
        let n = self.n();
        let mut out = vec![Rational::zero(); n];
        for i in 0..n {
            if a[i].is_zero() {
                continue;
            }
            for j in 0..n {
                if b[j].is_zero() {
                    continue;
                }
                let f = &a[i] * &b[j];
                for (k, o) in out.iter_mut().enumerate() {
                    if !self.cup[i][j][k].is_zero() {
                        *o += &f * &self.cup[i][j][k];
                    }
                }
            }
        }
        out
    }

    /// Matrix of φ_a ∪ (−) acting on coordinate columns.
    pub fn cup_matrix(&self, a: &[Rational]) -> RatMatrix {
        let n = self.n();
        let mut m = RatMatrix::zeros(n, n);
        for j in 0..n {
            let mut e = vec![Rational::zero(); n];
            e[j] = Rational::one();
            let col = self.cup_vec(a, &e);
            for (i, v) in col.into_iter().enumerate() {
                m.set(i, j, v);
            }
        }
        m
    }

    pub fn basis_vec(&self, i: usize) -> Vec<Rational> {
        let mut e = vec![Rational::zero(); self.n()];
        e[i] = Rational::one();
        e
    }

    /// ∫ a ∪ b ∪ c for basis classes.
    pub fn triple(&self, a: usize, b: usize, c: usize) -> Rational {
        let ab = self.cup_vec(&self.basis_vec(a), &self.basis_vec(b));
        let abc = self.cup_vec(&ab, &self.basis_vec(c));
        abc[self.point].clone()
    }

    pub fn divisors(&self) -> Vec<usize> {
        (0..self.n()).filter(|&i| self.degrees[i] == 2).collect()
    }

    /// Basis classes that are neither the unit nor divisors.
    pub fn primitive_classes(&self) -> Vec<usize> {
        (0..self.n()).filter(|&i| i != self.unit && self.degrees[i] != 2).collect()
    }

    /// Even cohomology generated by degree-2 classes (checked by spanning).
    pub fn divisor_generated(&self) -> bool {
        let n = self.n();
        let mut span: Vec<Vec<Rational>> = vec![self.basis_vec(self.unit)];
        let divs: Vec<Vec<Rational>> = self.divisors().iter().map(|&d| self.basis_vec(d)).collect();
        let mut frontier = span.clone();
        for _ in 0..=self.dim {
            let mut next = Vec::new();
            for f in &frontier {
                for d in &divs {
                    next.push(self.cup_vec(f, d));
                }
            }
            span.extend(next.iter().cloned());
            frontier = next;
        }
        let even: Vec<usize> = (0..n).filter(|&i| !self.is_odd(i)).collect();
        let rows: Vec<Vec<Rational>> = span.iter().map(|v| even.iter().map(|&i| v[i].clone()).collect()).collect();
        RatMatrix::from_rows(rows).rank() == even.len()
    }

    pub fn comb(&self, c: &Comb, context: &str) -> Result<Vec<Rational>> {
        let mut v = vec![Rational::zero(); self.n()];
        for (l, s) in c {
            let i = self.index(l).ok_or_else(|| GeometryError::UnknownLabel { label: l.clone(), context: context.into() })?;
            v[i] = parse_rational(s)?;
        }
        Ok(v)
    }

    fn curve_index(&self, name: &str, context: &str) -> Result<usize> {
        self.curves
            .iter()
            .position(|c| c.name == name)
            .ok_or_else(|| GeometryError::UnknownLabel { label: name.into(), context: context.into() })
    }

    pub fn curve_exps(&self, m: &BTreeMap<String, u32>, context: &str) -> Result<Vec<u32>> {
        let mut v = vec![0; self.curves.len()];
        for (k, e) in m {
            v[self.curve_index(k, context)?] = *e;
        }
        Ok(v)
    }

    /// Homogeneous degree of a coordinate vector, if any.
    pub fn vec_degree(&self, v: &[Rational]) -> Option<Option<i32>> {
        let mut d = None;
        for (i, x) in v.iter().enumerate() {
            if x.is_zero() {
                continue;
            }
            match d {
                None => d = Some(self.degrees[i]),
                Some(e) if e != self.degrees[i] => return None,
                _ => {}
            }
        }
        Some(d)
    }

    /// c1·d for a curve class given by generator exponents.
    pub fn c1_of(&self, d: &[u32]) -> i64 {
        d.iter().zip(&self.curves).map(|(&e, c)| e as i64 * c.c1).sum()
    }

    pub fn omega_of(&self, d: &[u32]) -> u32 {
        d.iter().zip(&self.curves).map(|(&e, c)| e * c.omega).sum()
    }

    /// D·d for a degree-2 basis class D.
    pub fn dot_of(&self, div: usize, d: &[u32]) -> Rational {
        d.iter().zip(&self.curves).fold(Rational::zero(), |acc, (&e, c)| acc + Rational::from_integer(e.into()) * &c.dot[div])
    }

    fn from_doc(name: &str, d: &ModelDoc) -> Result<Self> {
        let n = d.labels.len();
        if d.degrees.len() != n || d.hodge.len() != n || d.pairing.len() != n {
            return Err(GeometryError::Parse(format!("{name}: basis tables have different lengths")));
        }
        let idx = |l: &str, ctx: &str| -> Result<usize> {
            d.labels.iter().position(|x| x == l).ok_or_else(|| GeometryError::UnknownLabel { label: l.into(), context: format!("{name}.{ctx}") })
        };
        for (i, h) in d.hodge.iter().enumerate() {
            if h[0] < 0 || h[1] < 0 || h[0] + h[1] != d.degrees[i] {
                return Err(GeometryError::Bidegree(format!("{name}: class {} has p+q != degree", d.labels[i])));
            }
        }
        let unit = idx(&d.unit, "unit")?;
        let point = idx(&d.point, "point")?;
        if d.degrees[unit] != 0 || d.degrees.iter().any(|&x| x < 0 || x > d.degrees[point]) || d.degrees[point] % 2 != 0 {
            return Err(GeometryError::Degree(format!("{name}: unit/point degrees")));
        }
        let mut model = CohomologyModel {
            name: name.into(),
            labels: d.labels.clone(),
            degrees: d.degrees.clone(),
            hodge: d.hodge.iter().map(|h| (h[0], h[1])).collect(),
            cup: vec![vec![vec![Rational::zero(); n]; n]; n],
            pairing: RatMatrix::zeros(n, n),
            pairing_inv: RatMatrix::zeros(n, n),
            unit,
            point,
            dim: d.degrees[point] / 2,
            curves: Vec::new(),
            seeds: Vec::new(),
        };
        for a in 0..n {
            model.cup[unit][a][a] = Rational::one();
            model.cup[a][unit][a] = Rational::one();
        }
        for c in &d.cup {
            let a = idx(&c.a, "cup")?;
            let b = idx(&c.b, "cup")?;
            let v = model.comb(&c.value, &format!("{name}.cup"))?;
            let sign = if model.is_odd(a) && model.is_odd(b) { -Rational::one() } else { Rational::one() };
            for k in 0..n {
                model.cup[a][b][k] = v[k].clone();
                model.cup[b][a][k] = &sign * &v[k];
            }
        }
        for (i, row) in d.pairing.iter().enumerate() {
            if row.len() != n {
                return Err(GeometryError::Parse(format!("{name}: pairing row {i} has wrong length")));
            }
            for (j, s) in row.iter().enumerate() {
                model.pairing.set(i, j, parse_rational(s)?);
            }
        }
        for c in &d.curves {
            let mut dot = vec![Rational::zero(); n];
            for (l, s) in &c.dot {
                let i = idx(l, "curves.dot")?;
                if d.degrees[i] != 2 {
                    return Err(GeometryError::Degree(format!("{name}: curve {} dotted with non-divisor {l}", c.name)));
                }
                dot[i] = parse_rational(s)?;
            }
            if c.omega == 0 {
                return Err(GeometryError::CurveConvention(format!("{name}: curve {} has zero ample weight", c.name)));
            }
            model.curves.push(CurveGen { name: c.name.clone(), c1: c.c1, omega: c.omega, dot });
        }
        for s in &d.gw {
            let class = model.curve_exps(&s.class, &format!("{name}.gw"))?;
            let insertions = s.insertions.iter().map(|l| idx(l, "gw")).collect::<Result<Vec<_>>>()?;
            model.seeds.push(GwSeed { class, insertions, value: parse_rational(&s.value)? });
        }
        model.validate()?;
        Ok(model)
    }

    fn validate(&mut self) -> Result<()> {
        let n = self.n();
        let name = self.name.clone();
        // degrees and bidegrees of structure constants
        for a in 0..n {
            for b in 0..n {
                for c in 0..n {
                    if self.cup[a][b][c].is_zero() {
                        continue;
                    }
                    if self.degrees[a] + self.degrees[b] != self.degrees[c] {
                        return Err(GeometryError::Degree(format!("{name}: {}∪{} has a {} component", self.labels[a], self.labels[b], self.labels[c])));
                    }
                    let (pa, qa) = self.hodge[a];
                    let (pb, qb) = self.hodge[b];
                    if (pa + pb, qa + qb) != self.hodge[c] {
                        return Err(GeometryError::Bidegree(format!("{name}: {}∪{} has a {} component", self.labels[a], self.labels[b], self.labels[c])));
                    }
                }
            }
        }
        // associativity
        for a in 0..n {
            for b in 0..n {
                for c in 0..n {
                    let ab = self.cup_vec(&self.basis_vec(a), &self.basis_vec(b));
                    let bc = self.cup_vec(&self.basis_vec(b), &self.basis_vec(c));
                    if self.cup_vec(&ab, &self.basis_vec(c)) != self.cup_vec(&self.basis_vec(a), &bc) {
                        return Err(GeometryError::Cup(name));
                    }
                }
            }
        }
        if self.pairing.det().is_zero() {
            return Err(GeometryError::SingularPairing { model: name });
        }
        for a in 0..n {
            for b in 0..n {
                let ab = self.cup_vec(&self.basis_vec(a), &self.basis_vec(b));
                if ab[self.point] != *self.pairing.get(a, b) {
                    return Err(GeometryError::PairingMismatch { model: name, a: self.labels[a].clone(), b: self.labels[b].clone() });
                }
            }
        }
        self.pairing_inv = self.pairing.inverse().expect("nondegenerate");
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FourierData {
    pub r_f: u32,
    pub rho_f: Vec<Rational>,
    pub gaussian: Gaussian,
    /// (weight w_α, multiplicity, coefficients of (z/α)^{2k-1} in log Δ̃_α)
    pub delta: Vec<(i64, u32, Vec<Rational>)>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Gaussian {
    /// e^{(z/2)∂_u²}
    HalfZ,
    /// e^{(z∂_u)²}
    ZSquared,
}

/// The validated triple (X, Z, X̃).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BlowupGeometry {
    pub name: String,
    pub r: u32,
    pub x: CohomologyModel,
    pub z: CohomologyModel,
    pub xt: CohomologyModel,
    /// dim X × dim Z
    pub iota_push: RatMatrix,
    /// dim X̃ × dim X
    pub phi_pull: RatMatrix,
    /// per l: dim X̃ × dim Z
    pub j_push: Vec<RatMatrix>,
    pub rho_z: Vec<Rational>,
    /// c_0..c_r of the normal bundle, as Z-classes
    pub normal_chern: Vec<Vec<Rational>>,
    pub exceptional: Vec<Rational>,
    pub fiber: usize,
    /// per X̃ curve generator: (φ_* exponents over X generators, D·d̃)
    pub xt_curves: Vec<(Vec<u32>, i64)>,
    /// per Z curve generator: (ι_* exponents over X generators, ρ_Z·d)
    pub z_curves: Vec<(Vec<u32>, i64)>,
    /// dim X × dim X̃, column γ = κ_X(κ^{-1}γ)
    pub kappa_x: Option<RatMatrix>,
    /// per λ-power: dim Z × dim X̃
    pub iz: Option<Vec<RatMatrix>>,
    pub fourier: Option<FourierData>,
    /// dim X̃ × dim H_decomp
    pub dec: RatMatrix,
    pub dec_inv: RatMatrix,
}

/// What a config file describes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Geometry {
    Model(CohomologyModel),
    Blowup(Box<BlowupGeometry>),
}

impl Geometry {
    pub fn name(&self) -> &str {
        match self {
            Geometry::Model(m) => &m.name,
            Geometry::Blowup(b) => &b.name,
        }
    }

    pub fn blowup(&self) -> Option<&BlowupGeometry> {
        match self {
            Geometry::Blowup(b) => Some(b),
            _ => None,
        }
    }

    /// The model whose GW theory `gw` reports: X for both kinds.
    pub fn primary_model(&self) -> &CohomologyModel {
        match self {
            Geometry::Model(m) => m,
            Geometry::Blowup(b) => &b.x,
        }
    }
}

const BUNDLED: &[(&str, &str)] = &[
    ("P1", include_str!("../../configs/P1.toml")),
    ("P2", include_str!("../../configs/P2.toml")),
    ("P3", include_str!("../../configs/P3.toml")),
    ("elliptic-curve", include_str!("../../configs/elliptic-curve.toml")),
    ("P2-blowup-point", include_str!("../../configs/P2-blowup-point.toml")),
    ("P3-blowup-point", include_str!("../../configs/P3-blowup-point.toml")),
    ("synthetic-hodge", include_str!("../../configs/synthetic-hodge.toml")),
    ("synthetic-hodge-fault", include_str!("../../configs/synthetic-hodge-fault.toml")),
    ("P2-blowup-point-perturbed", include_str!("../../configs/P2-blowup-point-perturbed.toml")),
];

pub fn bundled_names() -> Vec<&'static str> {
    BUNDLED.iter().map(|(n, _)| *n).collect()
}

pub fn bundled_source(name: &str) -> Result<&'static str> {
    BUNDLED.iter().find(|(n, _)| *n == name).map(|(_, s)| *s).ok_or_else(|| GeometryError::UnknownBundled(name.into()))
}

pub fn parse_doc(src: &str) -> Result<ConfigDoc> {
    toml::from_str(src).map_err(|e| GeometryError::Parse(e.to_string()))
}

pub fn render_doc(doc: &ConfigDoc) -> Result<String> {
    toml::to_string(doc).map_err(|e| GeometryError::Parse(e.to_string()))
}

/// Loads a bundled name or a file path.
pub fn load_named(name_or_path: &str) -> Result<Geometry> {
    match bundled_source(name_or_path) {
        Ok(src) => load_geometry(src),
        Err(_) => {
            let src = std::fs::read_to_string(name_or_path).map_err(|e| GeometryError::Io { path: name_or_path.into(), msg: e.to_string() })?;
            load_geometry(&src)
        }
    }
}

pub fn load_bundled_blowup(name: &str) -> Result<BlowupGeometry> {
    match load_geometry(bundled_source(name)?)? {
        Geometry::Blowup(b) => Ok(*b),
        Geometry::Model(_) => Err(GeometryError::Missing(format!("{name} is not a blowup geometry"))),
    }
}

pub fn load_bundled_model(name: &str) -> Result<CohomologyModel> {
    Ok(load_geometry(bundled_source(name)?)?.primary_model().clone())
}

pub fn load_geometry(src: &str) -> Result<Geometry> {
    geometry_from_doc(&parse_doc(src)?)
}

pub fn geometry_from_doc(doc: &ConfigDoc) -> Result<Geometry> {
    match doc.kind.as_str() {
        "model" => Ok(Geometry::Model(CohomologyModel::from_doc(&doc.name, &doc.x)?)),
        "blowup" => Ok(Geometry::Blowup(Box::new(blowup_from_doc(doc)?))),
        k => Err(GeometryError::Parse(format!("unknown kind {k}"))),
    }
}

fn matrix_from_map(rows_model: &CohomologyModel, cols_model: &CohomologyModel, map: &BTreeMap<String, Comb>, ctx: &str) -> Result<RatMatrix> {
    let mut m = RatMatrix::zeros(rows_model.n(), cols_model.n());
    for (src, comb) in map {
        let j = cols_model.index(src).ok_or_else(|| GeometryError::UnknownLabel { label: src.clone(), context: ctx.into() })?;
        let v = rows_model.comb(comb, ctx)?;
        for (i, x) in v.into_iter().enumerate() {
            m.set(i, j, x);
        }
    }
    Ok(m)
}

fn column(m: &RatMatrix, j: usize) -> Vec<Rational> {
    (0..m.rows()).map(|i| m.get(i, j).clone()).collect()
}

fn blowup_from_doc(doc: &ConfigDoc) -> Result<BlowupGeometry> {
    let r = doc.r.ok_or_else(|| GeometryError::Missing("r".into()))?;
    if r < 2 {
        return Err(GeometryError::Parse("codimension r must be at least 2".into()));
    }
    let x = CohomologyModel::from_doc(&format!("{}:X", doc.name), &doc.x)?;
    let z = CohomologyModel::from_doc(&format!("{}:Z", doc.name), doc.z.as_ref().ok_or_else(|| GeometryError::Missing("z".into()))?)?;
    let xt = CohomologyModel::from_doc(&format!("{}:Xtilde", doc.name), doc.xtilde.as_ref().ok_or_else(|| GeometryError::Missing("xtilde".into()))?)?;
    let b = doc.blowup.as_ref().ok_or_else(|| GeometryError::Missing("blowup".into()))?;
    if x.dim - z.dim != r as i32 || xt.dim != x.dim {
        return Err(GeometryError::Degree("dimensions of X, Z, X̃ do not match r".into()));
    }
    let iota_push = matrix_from_map(&x, &z, &b.iota_push, "blowup.iota_push")?;
    let phi_pull = matrix_from_map(&xt, &x, &b.phi_pull, "blowup.phi_pull")?;
    if b.j_push.len() != (r - 1) as usize {
        return Err(GeometryError::Parse(format!("j_push needs r-1 = {} entries", r - 1)));
    }
    let j_push = b.j_push.iter().map(|m| matrix_from_map(&xt, &z, m, "blowup.j_push")).collect::<Result<Vec<_>>>()?;
    let rho_z = z.comb(&b.rho_z, "blowup.rho_z")?;
    if b.normal_chern.len() != r as usize + 1 {
        return Err(GeometryError::Parse(format!("normal_chern needs c_0..c_{r}")));
    }
    let normal_chern = b.normal_chern.iter().map(|c| z.comb(c, "blowup.normal_chern")).collect::<Result<Vec<_>>>()?;
    let exceptional = xt.comb(&b.exceptional, "blowup.exceptional")?;
    let fiber = xt.curve_index(&b.fiber, "blowup.fiber")?;
    let mut xt_curves = Vec::new();
    for c in &xt.curves {
        let d = b.xtilde_curves.get(&c.name).ok_or_else(|| GeometryError::Missing(format!("blowup.xtilde_curves.{}", c.name)))?;
        xt_curves.push((x.curve_exps(&d.phi_push, "blowup.xtilde_curves")?, d.d_dot));
    }
    let mut z_curves = Vec::new();
    for c in &z.curves {
        let d = b.z_curves.get(&c.name).ok_or_else(|| GeometryError::Missing(format!("blowup.z_curves.{}", c.name)))?;
        z_curves.push((x.curve_exps(&d.iota_push, "blowup.z_curves")?, d.rho_dot));
    }

    // dec: H(X) ⊕ H(Z)^{r-1} → H(X̃)
    let nx = x.n();
    let nz = z.n();
    let nd = nx + (r as usize - 1) * nz;
    if nd != xt.n() {
        return Err(GeometryError::DecNotBijective);
    }
    let mut dec = RatMatrix::zeros(xt.n(), nd);
    for i in 0..xt.n() {
        for j in 0..nx {
            dec.set(i, j, phi_pull.get(i, j).clone());
        }
        for (l, jp) in j_push.iter().enumerate() {
            for k in 0..nz {
                dec.set(i, nx + l * nz + k, jp.get(i, k).clone());
            }
        }
    }
    let geo = BlowupGeometry {
        name: doc.name.clone(),
        r,
        x,
        z,
        xt,
        iota_push,
        phi_pull,
        j_push,
        rho_z,
        normal_chern,
        exceptional,
        fiber,
        xt_curves,
        z_curves,
        kappa_x: None,
        iz: None,
        fourier: None,
        dec_inv: RatMatrix::zeros(0, 0),
        dec,
    };
    let mut geo = geo;
    if let Some(e) = &doc.equivariant {
        let kx = matrix_from_map(&geo.x, &geo.xt, &e.kappa_x, "equivariant.kappa_x")?;
        let depth = e.iz.values().map(|v| v.len()).max().unwrap_or(0).max(1);
        let mut iz = vec![RatMatrix::zeros(geo.z.n(), geo.xt.n()); depth];
        for (lab, list) in &e.iz {
            let j = geo.xt.index(lab).ok_or_else(|| GeometryError::UnknownLabel { label: lab.clone(), context: "equivariant.iz".into() })?;
            for (p, comb) in list.iter().enumerate() {
                let v = geo.z.comb(comb, "equivariant.iz")?;
                for (i, x) in v.into_iter().enumerate() {
                    iz[p].set(i, j, x);
                }
            }
        }
        geo.kappa_x = Some(kx);
        geo.iz = Some(iz);
    }
    if let Some(f) = &doc.fourier {
        let gaussian = match f.gaussian.as_str() {
            "half-z" => Gaussian::HalfZ,
            "z-squared" => Gaussian::ZSquared,
            g => return Err(GeometryError::Parse(format!("unknown gaussian convention {g}"))),
        };
        let delta = f
            .delta
            .iter()
            .map(|d| Ok((d.weight, d.multiplicity, d.log_coeffs.iter().map(|s| parse_rational(s)).collect::<std::result::Result<Vec<_>, _>>()?)))
            .collect::<Result<Vec<_>>>()?;
        geo.fourier = Some(FourierData { r_f: f.r_f, rho_f: geo.z.comb(&f.rho_f, "fourier.rho_f")?, gaussian, delta });
    }
    // degree bookkeeping first, so a misplaced class is reported as such
    geo.validate()?;
    geo.dec_inv = geo.dec.inverse().ok_or(GeometryError::DecNotBijective)?;
    Ok(geo)
}

impl BlowupGeometry {
    pub fn n_decomp(&self) -> usize {
        self.x.n() + (self.r as usize - 1) * self.z.n()
    }

    /// Degrees of the H_decomp basis (X classes, then the Z copies).
    pub fn decomp_degrees(&self) -> Vec<i32> {
        let mut d = self.x.degrees.clone();
        for _ in 0..self.r - 1 {
            d.extend(self.z.degrees.iter().copied());
        }
        d
    }

    /// dec(α, β_0, …): coordinates in X̃.
    pub fn dec_apply(&self, alpha: &[Rational], betas: &[Vec<Rational>]) -> Vec<Rational> {
        let mut v = alpha.to_vec();
        for b in betas {
            v.extend(b.iter().cloned());
        }
        self.dec.mul_vec(&v)
    }

    pub fn dec_invert(&self, gamma: &[Rational]) -> (Vec<Rational>, Vec<Vec<Rational>>) {
        let v = self.dec_inv.mul_vec(gamma);
        let nx = self.x.n();
        let nz = self.z.n();
        let alpha = v[..nx].to_vec();
        let betas = (0..self.r as usize - 1).map(|l| v[nx + l * nz..nx + (l + 1) * nz].to_vec()).collect();
        (alpha, betas)
    }

    fn validate(&self) -> Result<()> {
        let deg_err = |s: String| GeometryError::Degree(s);
        for j in 0..self.x.n() {
            match self.xt.vec_degree(&column(&self.phi_pull, j)) {
                Some(Some(d)) if d == self.x.degrees[j] => {}
                _ => return Err(deg_err(format!("phi^*({}) not of degree {}", self.x.labels[j], self.x.degrees[j]))),
            }
        }
        for k in 0..self.z.n() {
            match self.x.vec_degree(&column(&self.iota_push, k)) {
                Some(None) => {}
                Some(Some(d)) if d == self.z.degrees[k] + 2 * self.r as i32 => {}
                _ => return Err(deg_err(format!("iota_*({}) has the wrong degree", self.z.labels[k]))),
            }
            for (l, jp) in self.j_push.iter().enumerate() {
                match self.xt.vec_degree(&column(jp, k)) {
                    Some(Some(d)) if d == self.z.degrees[k] + 2 * l as i32 + 2 => {}
                    _ => return Err(deg_err(format!("j_*(p^{l} pi^* {}) must have degree deg+2l+2", self.z.labels[k]))),
                }
            }
        }
        // φ^* preserves bidegrees too
        for j in 0..self.x.n() {
            for i in 0..self.xt.n() {
                if !self.phi_pull.get(i, j).is_zero() && self.xt.hodge[i] != self.x.hodge[j] {
                    return Err(GeometryError::Bidegree(format!("phi^*({})", self.x.labels[j])));
                }
            }
        }
        if self.xt.vec_degree(&self.exceptional) != Some(Some(2)) {
            return Err(deg_err("exceptional divisor class must have degree 2".into()));
        }
        if self.rho_z.iter().enumerate().any(|(i, v)| !v.is_zero() && self.z.degrees[i] != 2) {
            return Err(deg_err("rho_Z must lie in H^2(Z)".into()));
        }
        for (k, c) in self.normal_chern.iter().enumerate() {
            if c.iter().enumerate().any(|(i, v)| !v.is_zero() && self.z.degrees[i] != 2 * k as i32) {
                return Err(deg_err(format!("c_{k}(N) has the wrong degree")));
            }
        }
        if self.normal_chern[0] != self.z.basis_vec(self.z.unit) {
            return Err(deg_err("c_0(N) must be 1".into()));
        }
        if self.normal_chern[1] != self.rho_z {
            return Err(deg_err("rho_Z must equal c_1(N)".into()));
        }
        // curve data: D·f = -1 for the fiber line, and D·d̃ / φ_* agree with
        // the intersection numbers on X̃ (projection formula)
        let (fib_push, fib_d) = &self.xt_curves[self.fiber];
        if *fib_d != -1 || fib_push.iter().any(|&e| e != 0) {
            return Err(GeometryError::CurveConvention("fiber line f must have D·f = -1 and φ_*f = 0".into()));
        }
        for (g, (push, d_dot)) in self.xt_curves.iter().enumerate() {
            let mut dd = Rational::zero();
            for (i, c) in self.exceptional.iter().enumerate() {
                dd += c * &self.xt.curves[g].dot[i];
            }
            if dd != Rational::from_integer((*d_dot).into()) {
                return Err(GeometryError::CurveConvention(format!("D·{} = {} but table says {}", self.xt.curves[g].name, dd, d_dot)));
            }
            for h in self.x.divisors() {
                let mut lhs = Rational::zero();
                for i in 0..self.xt.n() {
                    lhs += self.phi_pull.get(i, h) * &self.xt.curves[g].dot[i];
                }
                if lhs != self.x.dot_of(h, push) {
                    return Err(GeometryError::CurveConvention(format!("projection formula fails for phi^*{}·{}", self.x.labels[h], self.xt.curves[g].name)));
                }
            }
            // c1(X̃) = φ^*c1(X) − (r−1)D
            let c1 = self.x.c1_of(push) - (self.r as i64 - 1) * d_dot;
            if c1 != self.xt.curves[g].c1 {
                return Err(GeometryError::CurveConvention(format!("c1·{} inconsistent with c1(X̃) = φ^*c1(X) − (r−1)D", self.xt.curves[g].name)));
            }
        }
        if let (Some(kx), Some(iz)) = (&self.kappa_x, &self.iz) {
            for g in 0..self.xt.n() {
                match self.x.vec_degree(&column(kx, g)) {
                    Some(None) => {}
                    Some(Some(d)) if d == self.xt.degrees[g] => {}
                    _ => return Err(deg_err(format!("kappa_X table at {}", self.xt.labels[g]))),
                }
                for (p, m) in iz.iter().enumerate() {
                    match self.z.vec_degree(&column(m, g)) {
                        Some(None) => {}
                        Some(Some(d)) if d + 2 * p as i32 == self.xt.degrees[g] => {}
                        _ => return Err(deg_err(format!("i_Z^* table at {} (lambda^{p})", self.xt.labels[g]))),
                    }
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_bundled_config_loads() {
        for n in bundled_names() {
            load_geometry(bundled_source(n).unwrap()).unwrap_or_else(|e| panic!("{n}: {e}"));
        }
    }
}
