//! `qdm`: GW dumps, decomposition artifacts and verification reports.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use qdm::decomposition::{decompose, DecompBounds};
use qdm::geometry_model::{bundled_source, load_named, Geometry};
use qdm::verify::{self, render_bounds};
use sha2::{Digest, Sha256};

/// Directory for cached decomposition artifacts.
const CACHE_ENV: &str = "QDM_CACHE_DIR";

#[derive(Parser)]
#[command(name = "qdm", version, about = "Exact blowup decomposition of quantum D-modules")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Dump the reconstructed GW correlators of the geometry's X.
    Gw {
        #[arg(long)]
        geometry: String,
        /// largest curve weight reconstructed
        #[arg(long, default_value_t = 3)]
        max_degree: u32,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the decomposition and write the result file.
    Decompose {
        #[command(flatten)]
        common: Common,
    },
    /// Run named checks and write a verification report.
    Verify {
        #[command(flatten)]
        common: Common,
        /// comma-separated check names, or `all`
        #[arg(long, default_value = "all")]
        checks: String,
    },
}

#[derive(Args)]
struct Common {
    /// bundled name or path to a TOML config
    #[arg(long)]
    geometry: String,
    /// Novikov weight and parameter order
    #[arg(long, default_value_t = 2)]
    order: u32,
    /// lowest reported 𝔮-power is 𝔮^{-N}
    #[arg(long, default_value_t = 4)]
    q_depth: i32,
    /// z-powers A:B: A = −(z⁻¹-order compared), B = largest z-power in Ψ
    #[arg(long, default_value = "-3:256")]
    z_window: String,
    #[arg(long)]
    out: Option<PathBuf>,
}

impl Common {
    fn bounds(&self) -> Result<DecompBounds, String> {
        let (a, b) = self.z_window.split_once(':').ok_or("--z-window expects A:B")?;
        let a: i32 = a.trim().parse().map_err(|_| format!("bad z-window start `{a}`"))?;
        let b: i32 = b.trim().parse().map_err(|_| format!("bad z-window end `{b}`"))?;
        if a > 0 || b < 0 {
            return Err("--z-window needs A ≤ 0 ≤ B".into());
        }
        if self.q_depth < 0 {
            return Err("--q-depth must be non-negative".into());
        }
        Ok(DecompBounds {
            novikov: self.order,
            params: self.order,
            q_window: (-self.q_depth, 1),
            z_order: (-a) as u32,
            z_max: b,
            ..DecompBounds::default()
        })
    }
}

fn source_of(name: &str) -> Result<String, String> {
    match bundled_source(name) {
        Ok(s) => Ok(s.to_string()),
        Err(_) => std::fs::read_to_string(name).map_err(|e| format!("{name}: {e}")),
    }
}

fn load(name: &str) -> Result<Geometry, String> {
    load_named(name).map_err(|e| format!("config error in {name}: {e}"))
}

fn emit(text: &str, out: &Option<PathBuf>) -> Result<(), String> {
    match out {
        Some(p) => std::fs::write(p, text).map_err(|e| format!("{}: {e}", p.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn cache_path(src: &str, b: &DecompBounds) -> Option<PathBuf> {
    let dir = PathBuf::from(std::env::var_os(CACHE_ENV)?);
    let mut h = Sha256::new();
    h.update(src.as_bytes());
    h.update(render_bounds(b).as_bytes());
    h.update(env!("CARGO_PKG_VERSION").as_bytes());
    Some(dir.join(format!("{}.decomp", hex::encode(h.finalize()))))
}

fn run(cli: Cli) -> Result<bool, String> {
    match cli.cmd {
        Cmd::Gw { geometry, max_degree, out } => {
            let g = load(&geometry)?;
            emit(&verify::dump_correlators(g.primary_model(), max_degree)?, &out)?;
            Ok(true)
        }
        Cmd::Decompose { common } => {
            let b = common.bounds()?;
            let src = source_of(&common.geometry)?;
            let g = load(&common.geometry)?;
            let bl = g.blowup().ok_or_else(|| format!("{} is not a blowup geometry", g.name()))?;
            let cached = cache_path(&src, &b);
            if let Some(text) = cached.as_ref().and_then(|p| std::fs::read_to_string(p).ok()) {
                emit(&text, &common.out)?;
                return Ok(true);
            }
            let res = decompose(bl, &b).map_err(|e| format!("decomposition failed: {e}"))?;
            let text = res.render(g.name());
            if let Some(p) = cached {
                if let Some(d) = p.parent() {
                    let _ = std::fs::create_dir_all(d);
                }
                std::fs::write(&p, &text).map_err(|e| format!("cache {}: {e}", p.display()))?;
            }
            emit(&text, &common.out)?;
            Ok(true)
        }
        Cmd::Verify { common, checks } => {
            let b = common.bounds()?;
            let specs = verify::parse_checks(&checks).map_err(|e| e.to_string())?;
            let g = load(&common.geometry)?;
            let report = verify::verify(&g, &b, &specs);
            emit(&report.render(), &common.out)?;
            for r in &report.records {
                eprintln!("{:<14} {:?}{}", r.name, r.status, r.witness.as_ref().map(|w| format!("  {w}")).unwrap_or_default());
            }
            Ok(!report.failed())
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
