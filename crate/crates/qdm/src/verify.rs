//! Named checks and the verification report shared by the CLI and the
//! acceptance suite.
//!
//! Every check maps 1:1 to a statement it verifies (its anchor).  A report
//! holds one record per requested check, in registry order, with exact
//! witnesses only; timing is deliberately left out so that identical inputs
//! give byte-identical reports.

use std::collections::BTreeMap;
use std::sync::{Arc, OnceLock};

use num_traits::Zero;
use serde::Serialize;
use thiserror::Error;

use crate::decomposition::{self as dec, DecompBounds, DecompRing, DecompositionResult};
use crate::exact_arith::Rational;
use crate::geometry_model::{BlowupGeometry, CohomologyModel, Geometry};
use crate::graded_series::{Ring, Series, TruncationPolicy, VariableSpec};
use crate::gw_quantum::{self as gw, FundamentalSolution, GWStore, GwBounds, SolutionSetup};
use crate::init_conditions::{self as init, InitialConditions};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum VerifyError {
    #[error("unknown check `{0}` (known: {1})")]
    UnknownCheck(String, String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Needs {
    Gw,
    Init,
    Decomposition,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CheckSpec {
    pub name: &'static str,
    pub anchor: &'static str,
    needs: Needs,
}

pub const REGISTRY: &[CheckSpec] = &[
    CheckSpec { name: "gw", anchor: "WDVV reconstruction: associativity, flatness and divisor equation of the quantum product", needs: Needs::Gw },
    CheckSpec { name: "tau-init", anchor: "property (b): τ at the origin is 𝔮⁻¹[pt] + O(𝔮⁻²)", needs: Needs::Init },
    CheckSpec { name: "leading-terms", anchor: "property (e): leading asymptotics of Ψ at the origin", needs: Needs::Init },
    CheckSpec { name: "cross-check", anchor: "M′ is the normalized fundamental solution of X̃ at τ̃(t, s)", needs: Needs::Decomposition },
    CheckSpec { name: "cyclotomic", anchor: "proposition: coefficients lie in Q(e^{πi/(r−1)}), the X-part in Q", needs: Needs::Decomposition },
    CheckSpec { name: "monodromy", anchor: "branches of ς_j and Ψ_{Z,j} are monodromy images of j = 0", needs: Needs::Decomposition },
    CheckSpec { name: "homogeneity", anchor: "properties (a), (d): degrees and parities of τ, ς_j, Ψ", needs: Needs::Decomposition },
    CheckSpec { name: "jacobian", anchor: "property (c): the Jacobian of (t, s) ↦ τ̃ is invertible", needs: Needs::Decomposition },
    CheckSpec { name: "hodge", anchor: "corollary: the decomposition restricts to Hodge classes", needs: Needs::Decomposition },
    CheckSpec { name: "properties", anchor: "Birkhoff reassembly, coordinate round trip, exp/log and divisor shift identities", needs: Needs::Decomposition },
];

/// Parses `all` or a comma-separated list; the result is in registry order
/// without duplicates.
pub fn parse_checks(list: &str) -> Result<Vec<&'static CheckSpec>, VerifyError> {
    if list.trim() == "all" {
        return Ok(REGISTRY.iter().collect());
    }
    let mut want = Vec::new();
    for name in list.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        let spec = REGISTRY.iter().find(|c| c.name == name).ok_or_else(|| {
            VerifyError::UnknownCheck(name.into(), REGISTRY.iter().map(|c| c.name).collect::<Vec<_>>().join(", "))
        })?;
        want.push(spec.name);
    }
    Ok(REGISTRY.iter().filter(|c| want.contains(&c.name)).collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Pass,
    Fail,
    Skip,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CheckRecord {
    pub name: String,
    pub anchor: String,
    pub geometry: String,
    pub bounds: String,
    pub status: Status,
    /// first failing coefficient, or the reason for a skip
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct VerificationReport {
    pub geometry: String,
    pub bounds: String,
    pub metadata: BTreeMap<String, String>,
    #[serde(rename = "check")]
    pub records: Vec<CheckRecord>,
}

impl VerificationReport {
    pub fn failed(&self) -> bool {
        self.records.iter().any(|r| r.status == Status::Fail)
    }

    pub fn record(&self, name: &str) -> Option<&CheckRecord> {
        self.records.iter().find(|r| r.name == name)
    }

    pub fn render(&self) -> String {
        toml::to_string(self).expect("report is plain strings")
    }
}

pub fn render_bounds(b: &DecompBounds) -> String {
    format!(
        "novikov={} params={} q_window=[{},{}] z_order={} z_max={} margin={}",
        b.novikov, b.params, b.q_window.0, b.q_window.1, b.z_order, b.z_max, b.margin
    )
}

// ---------------------------------------------------------------------------
// GW artifacts for a single model

/// Fundamental solution of a model at the origin, with one Novikov variable
/// per curve generator and an even parameter per even class.
pub fn model_solution(model: &CohomologyModel, weight: u32, order: u32, z_order: i32) -> Result<(GWStore, FundamentalSolution), String> {
    let store = gw::reconstruct_gw(model, &GwBounds::weight(weight)).map_err(|e| e.to_string())?;
    let mut vars: Vec<VariableSpec> = model.curves.iter().map(|c| VariableSpec::novikov(&format!("Q_{}", c.name), 2 * c.c1 as i32, c.omega)).collect();
    let nn = vars.len();
    let mut params = Vec::new();
    for i in 0..model.n() {
        if model.is_odd(i) {
            params.push(None);
        } else {
            params.push(Some(vars.len()));
            vars.push(VariableSpec::parameter(&format!("t_{}", model.labels[i]), 2 - model.degrees[i]));
        }
    }
    let ring: Arc<Ring> = Ring::plain(vars, 4).map_err(|e| e.to_string())?;
    let pol = Arc::new(TruncationPolicy::new(weight, order).with_z(-z_order, 0, true));
    let setup = SolutionSetup::at_origin(&ring, &pol, (0..nn).collect(), params);
    let fs = gw::fundamental_solution(&store, &setup).map_err(|e| e.to_string())?;
    Ok((store, fs))
}

/// Operators commute and (φ_a ★ φ_b)★ = φ_a★ ∘ φ_b★.
pub fn associativity_witness(model: &CohomologyModel, fs: &FundamentalSolution) -> Option<String> {
    let qp = fs.quantum_product();
    let n = model.n();
    for a in 0..n {
        for b in 0..n {
            let ab = qp.operator(a).mul(qp.operator(b));
            let sign = if model.is_odd(a) && model.is_odd(b) { -1 } else { 1 };
            let ba = qp.operator(b).mul(qp.operator(a)).scale_rat(&Rational::from_integer(sign.into()));
            if !ab.sub(&ba).is_empty() {
                return Some(format!("{}: φ_{a}★ and φ_{b}★ do not (super)commute", model.name));
            }
            let col = qp.product(&model.basis_vec(a), &model.basis_vec(b));
            let mut op = qp.operator(0).zero_like();
            for k in 0..n {
                op = op.add(&col.entry(k, 0).mul(qp.operator(k)));
            }
            if !op.sub(&ab).is_empty() {
                return Some(format!("{}: associativity fails for ({}, {})", model.name, model.labels[a], model.labels[b]));
            }
        }
    }
    None
}

/// Reference values N_1..N_4 for the plane.
const PLANE_COUNTS: [i64; 4] = [1, 1, 12, 620];

pub fn plane_counts(store: &GWStore) -> Result<Vec<Rational>, String> {
    let pt = store.model().index("pt").ok_or("no point class")?;
    (1..=PLANE_COUNTS.len() as u32)
        .map(|d| store.correlator(&[d], &vec![pt; 3 * d as usize - 1]).map_err(|e| e.to_string()))
        .collect()
}

// ---------------------------------------------------------------------------
// the run

struct Context<'a> {
    geometry: &'a Geometry,
    bounds: DecompBounds,
    gw: OnceLock<Result<(GWStore, FundamentalSolution), String>>,
    init: OnceLock<Result<InitialConditions, String>>,
    dec: OnceLock<Result<DecompositionResult, String>>,
}

impl<'a> Context<'a> {
    fn gw(&self) -> Result<&(GWStore, FundamentalSolution), String> {
        self.gw
            .get_or_init(|| {
                let model = self.geometry.primary_model();
                let weight = if model.name == "P2" { self.bounds.novikov.max(PLANE_COUNTS.len() as u32) } else { self.bounds.novikov };
                model_solution(model, weight, self.bounds.params, self.bounds.z_order as i32 + 3)
            })
            .as_ref()
            .map_err(Clone::clone)
    }

    fn blowup(&self) -> Result<&'a BlowupGeometry, String> {
        self.geometry.blowup().ok_or_else(|| "requires a blowup geometry".to_string())
    }

    fn decomposition(&self) -> Result<&DecompositionResult, String> {
        let g = self.blowup()?;
        self.dec.get_or_init(|| dec::decompose(g, &self.bounds).map_err(|e| e.to_string())).as_ref().map_err(Clone::clone)
    }

    fn init(&self) -> Result<&InitialConditions, String> {
        if let Some(Ok(res)) = self.dec.get() {
            return Ok(&res.init);
        }
        let g = self.blowup()?;
        self.init
            .get_or_init(|| {
                let dr = DecompRing::new(g, &self.bounds).map_err(|e| e.to_string())?;
                InitialConditions::compute(g, &dr.ring, &dr.policy).map_err(|e| e.to_string())
            })
            .as_ref()
            .map_err(Clone::clone)
    }
}

type Outcome = Result<Option<String>, String>;

fn run_check(ctx: &Context, name: &str) -> Outcome {
    match name {
        "gw" => {
            let (store, fs) = ctx.gw()?;
            let model = store.model();
            if let Some(w) = associativity_witness(model, fs) {
                return Ok(Some(w));
            }
            if let Some((i, mono, r, c)) = fs.flatness_witness() {
                return Ok(Some(format!("flatness fails in direction {i} at ({r},{c}), {}", fs.series().ring().render_outer(&mono.outer))));
            }
            if let Some(&d) = model.divisors().first() {
                if !gw::divisor_shift_check(fs, model, &model.basis_vec(d)).map_err(|e| e.to_string())? {
                    return Ok(Some(format!("divisor shift by {} fails", model.labels[d])));
                }
            }
            if model.name == "P2" {
                let got = plane_counts(store)?;
                for (d, (g, e)) in got.iter().zip(PLANE_COUNTS).enumerate() {
                    if *g != Rational::from_integer(e.into()) {
                        return Ok(Some(format!("N_{} = {g}, expected {e}", d + 1)));
                    }
                }
            }
            Ok(None)
        }
        "tau-init" => Ok(init::check_property_b(ctx.blowup()?, ctx.init()?)),
        "leading-terms" => Ok(init::check_property_e(ctx.blowup()?, ctx.init()?)),
        "cross-check" => {
            let cc = dec::cross_check_mprime(ctx.blowup()?, ctx.decomposition()?).map_err(|e| e.to_string())?;
            Ok(if cc.agree { None } else { cc.witness.or(Some("disagreement".into())) })
        }
        "cyclotomic" => Ok(dec::check_cyclotomic(ctx.blowup()?, ctx.decomposition()?)),
        "monodromy" => Ok(dec::check_monodromy(ctx.decomposition()?)),
        "homogeneity" => Ok(dec::check_homogeneity(ctx.blowup()?, ctx.decomposition()?)),
        "jacobian" => Ok(dec::check_jacobian(ctx.decomposition()?)),
        "hodge" => {
            let g = ctx.blowup()?;
            if let Some(w) = dec::check_hodge_restricted(g, ctx.decomposition()?) {
                return Ok(Some(w));
            }
            let store = gw::reconstruct_gw(&g.x, &GwBounds::weight(ctx.bounds.novikov)).map_err(|e| e.to_string())?;
            if !gw::correlator_hodge_check(&store).map_err(|e| e.to_string())? {
                return Ok(Some(format!("a nonzero correlator of {} pairs classes of unequal Hodge type", g.x.name)));
            }
            Ok(None)
        }
        "properties" => properties(ctx),
        other => Err(format!("no runner for `{other}`")),
    }
}

fn properties(ctx: &Context) -> Outcome {
    let res = ctx.decomposition()?;
    let first = |a: &Series| a.iter_terms().next().map(|(m, i, j, c)| format!("({i},{j}) {} 𝔮^({}) z^{}: {c}", a.ring().render_outer(&m.outer), m.q, m.z));
    if let Some(w) = first(&dec::birkhoff_residual(&res.m, &res.init.psi, &res.birkhoff())) {
        return Ok(Some(format!("MΨ − Ψ°M′ ≠ 0 at {w}")));
    }
    if let Some(w) = first(&res.round_trip_defect().map_err(|e| e.to_string())?) {
        return Ok(Some(format!("τ̃ round trip defect at {w}")));
    }
    let log = res.m_prime.log().map_err(|e| e.to_string())?;
    if let Some(w) = first(&log.exp().map_err(|e| e.to_string())?.sub(&res.m_prime)) {
        return Ok(Some(format!("exp(log M′) ≠ M′ at {w}")));
    }
    let g = ctx.blowup()?;
    let (store, fs) = ctx.gw()?;
    let model = store.model();
    for d in model.divisors() {
        if !gw::divisor_shift_check(fs, model, &model.basis_vec(d)).map_err(|e| e.to_string())? {
            return Ok(Some(format!("divisor shift by {} fails on {}", model.labels[d], g.x.name)));
        }
    }
    Ok(None)
}

/// Runs the requested checks.  The shared decomposition is built once,
/// then the checks run independently.
pub fn verify(geometry: &Geometry, bounds: &DecompBounds, checks: &[&CheckSpec]) -> VerificationReport {
    let ctx = Context { geometry, bounds: *bounds, gw: OnceLock::new(), init: OnceLock::new(), dec: OnceLock::new() };
    if checks.iter().any(|c| c.needs == Needs::Decomposition) && geometry.blowup().is_some() {
        let _ = ctx.decomposition();
    }
    if checks.iter().any(|c| c.needs == Needs::Gw) || checks.iter().any(|c| c.name == "properties") {
        let _ = ctx.gw();
    }
    let outcomes: Vec<Outcome> = std::thread::scope(|sc| {
        let handles: Vec<_> = checks.iter().map(|c| sc.spawn(|| run_check(&ctx, c.name))).collect();
        handles.into_iter().map(|h| h.join().unwrap_or_else(|_| Err("check panicked".into()))).collect()
    });

    let effective = match ctx.dec.get() {
        Some(Ok(res)) => res.bounds,
        _ => *bounds,
    };
    let brender = render_bounds(&effective);
    let records = checks
        .iter()
        .zip(outcomes)
        .map(|(c, o)| {
            let (status, witness) = match o {
                Ok(None) => (Status::Pass, None),
                Ok(Some(w)) => (Status::Fail, Some(w)),
                Err(e) if geometry.blowup().is_none() && c.needs != Needs::Gw => (Status::Skip, Some(e)),
                Err(e) => (Status::Fail, Some(format!("error: {e}"))),
            };
            CheckRecord { name: c.name.into(), anchor: c.anchor.into(), geometry: geometry.name().into(), bounds: brender.clone(), status, witness }
        })
        .collect::<Vec<_>>();

    let mut metadata = BTreeMap::new();
    metadata.insert("engine".into(), format!("qdm {}", env!("CARGO_PKG_VERSION")));
    metadata.insert("requested_bounds".into(), render_bounds(bounds));
    metadata.insert("checks".into(), records.len().to_string());
    metadata.insert("passed".into(), records.iter().filter(|r| r.status == Status::Pass).count().to_string());
    metadata.insert("failed".into(), records.iter().filter(|r| r.status == Status::Fail).count().to_string());
    if let Some(g) = geometry.blowup() {
        metadata.insert("r".into(), g.r.to_string());
        metadata.insert("field".into(), format!("Q(ζ_{})", crate::novikov_embed::field_order(g.r)));
    }
    VerificationReport { geometry: geometry.name().into(), bounds: brender, metadata, records }
}

/// Correlator dump of the primary model: one `<insertions>_class = value` line
/// per stored entry, in store order.
pub fn dump_correlators(model: &CohomologyModel, max_degree: u32) -> Result<String, String> {
    let store = gw::reconstruct_gw(model, &GwBounds::weight(max_degree)).map_err(|e| e.to_string())?;
    let mut out = format!("# GW correlators of {} up to weight {max_degree}\n", model.name);
    for (k, (v, prov)) in store.entries() {
        if max_degree == 0 && k.class.iter().any(|e| !e.is_zero()) {
            continue;
        }
        out.push_str(&format!("{} = {v}  # {prov:?}\n", store.render_key(k)));
    }
    Ok(out)
}
