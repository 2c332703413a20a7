use std::process::{Command, Output};

fn qdm(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qdm")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

#[test]
fn gw_dump_of_the_plane() {
    let o = qdm(&["gw", "--geometry", "P2", "--max-degree", "3"]);
    assert!(o.status.success());
    let text = stdout(&o);
    assert!(text.contains("<pt,pt,pt,pt,pt,pt,pt,pt>_3l = 12"), "{text}");
    assert!(text.contains("<pt,pt>_l = 1"));
}

#[test]
fn gw_degree_zero_is_triple_products_only() {
    let o = qdm(&["gw", "--geometry", "P2", "--max-degree", "0"]);
    assert!(o.status.success());
    let text = stdout(&o);
    let entries: Vec<&str> = text.lines().filter(|l| !l.starts_with('#')).collect();
    assert!(!entries.is_empty());
    for l in entries {
        assert!(l.contains(">_0 = "), "{l}");
        assert_eq!(l.split(',').count(), 3, "{l}");
    }
    assert!(text.contains("<1,H,H>_0 = 1"));
}

#[test]
fn gw_elliptic_curve_has_no_positive_degree_invariants() {
    let o = qdm(&["gw", "--geometry", "elliptic-curve", "--max-degree", "3"]);
    assert!(o.status.success());
    for l in stdout(&o).lines().filter(|l| !l.starts_with('#') && !l.contains(">_0 = ")) {
        assert!(l.contains(" = 0 "), "{l}");
    }
}

#[test]
fn decompose_writes_a_result_with_the_expected_tau() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("p2.decomp");
    let o = qdm(&["decompose", "--geometry", "P2-blowup-point", "--order", "2", "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = std::fs::read_to_string(&out).unwrap();
    let tau = &text[text.find("[tau]").expect("tau section")..];
    // τ at τ̃ = 0 starts with 𝔮⁻¹[pt]: row 2 is the point class
    assert!(tau.lines().any(|l| l == "[2,0] q^-1: 1"), "{}", &tau[..tau.len().min(400)]);
}

#[test]
fn decompose_with_zero_bounds_is_constants_only() {
    let o = qdm(&["decompose", "--geometry", "P2-blowup-point", "--order", "0"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = stdout(&o);
    assert!(text.contains("novikov_weight = 0\nparameter_order = 0"));
    let body = &text[text.find("[tau]").unwrap()..];
    assert!(!body.contains("t_") && !body.contains("s0_"), "parameters leaked into a constants-only run");
}

#[test]
fn missing_delta_data_is_a_named_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let src = include_str!("../../qdm/configs/P2-blowup-point.toml");
    let cut = src.find("[fourier]").expect("fourier section");
    let path = dir.path().join("broken.toml");
    std::fs::write(&path, &src[..cut]).unwrap();
    let o = qdm(&["decompose", "--geometry", path.to_str().unwrap(), "--order", "1"]);
    assert_eq!(o.status.code(), Some(2));
    let err = stderr(&o).to_lowercase();
    assert!(err.contains("fourier") || err.contains("delta"), "{err}");
}

#[test]
fn verify_all_on_the_blowup_of_the_plane_passes_deterministically() {
    let a = qdm(&["verify", "--geometry", "P2-blowup-point", "--checks", "all"]);
    assert_eq!(a.status.code(), Some(0), "{}", stderr(&a));
    let b = qdm(&["verify", "--geometry", "P2-blowup-point", "--checks", "all"]);
    assert_eq!(a.stdout, b.stdout);
    let text = stdout(&a);
    assert_eq!(text.matches("[[check]]").count(), 10);
    assert_eq!(text.matches("status = \"pass\"").count(), 10);
}

#[test]
fn verify_reports_the_injected_fault() {
    let o = qdm(&["verify", "--geometry", "synthetic-hodge-fault", "--checks", "hodge", "--order", "1"]);
    assert_eq!(o.status.code(), Some(1));
    let text = stdout(&o);
    assert!(text.contains("status = \"fail\""));
    assert!(text.contains("witness = \"M maps Hodge column"), "{text}");
}

#[test]
fn verify_cyclotomic_on_codimension_three() {
    let o = qdm(&["verify", "--geometry", "P3-blowup-point", "--checks", "cyclotomic", "--order", "1"]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    assert!(stdout(&o).contains("field = \"Q(ζ_8)\""));
}

#[test]
fn unknown_check_and_bad_window_are_usage_errors() {
    let o = qdm(&["verify", "--geometry", "P2-blowup-point", "--checks", "nonsense"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("unknown check `nonsense`"));
    let o = qdm(&["verify", "--geometry", "P2-blowup-point", "--z-window", "3:1"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn decompose_artifacts_are_cached() {
    let dir = tempfile::tempdir().unwrap();
    let run = || {
        Command::new(env!("CARGO_BIN_EXE_qdm"))
            .args(["decompose", "--geometry", "P2-blowup-point", "--order", "1"])
            .env("QDM_CACHE_DIR", dir.path())
            .output()
            .unwrap()
    };
    let a = run();
    assert!(a.status.success());
    let files: Vec<_> = std::fs::read_dir(dir.path()).unwrap().collect();
    assert_eq!(files.len(), 1);
    let b = run();
    assert_eq!(a.stdout, b.stdout);
}
