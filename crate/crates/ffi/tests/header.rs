use std::path::{Path, PathBuf};
use std::process::Command;

fn manifest() -> &'static Path {
    Path::new(env!("CARGO_MANIFEST_DIR"))
}

#[test]
fn header_declares_every_export() {
    let header = std::fs::read_to_string(manifest().join("include/mdpdt.h")).unwrap();
    let source = std::fs::read_to_string(manifest().join("src/lib.rs")).unwrap();
    let exports: Vec<&str> = source
        .lines()
        .filter_map(|l| l.split("extern \"C\" fn ").nth(1))
        .map(|rest| rest.split('(').next().unwrap())
        .collect();
    assert!(exports.len() >= 10);
    for name in exports {
        assert!(header.contains(&format!("{name}(")), "{name} missing from header");
    }
    for code in ["MDPDT_STATUS_OK", "MDPDT_STATUS_PANIC", "MDPDT_STATUS_DEGENERATE_VARIANCE"] {
        assert!(header.contains(code));
    }
}

fn cc() -> Option<String> {
    ["cc", "gcc", "clang"]
        .into_iter()
        .find(|c| Command::new(c).arg("--version").output().is_ok_and(|o| o.status.success()))
        .map(String::from)
}

/// Directory holding the library artifacts of this build.
fn artifact_dir() -> PathBuf {
    let exe = std::env::current_exe().unwrap();
    exe.parent().unwrap().parent().unwrap().to_path_buf()
}

#[test]
fn c_program_compiles_and_links() {
    let Some(cc) = cc() else {
        eprintln!("no C compiler found; skipping");
        return;
    };
    let lib = artifact_dir().join("libmdpdt_ffi.a");
    let dir = tempfile::tempdir().unwrap();
    let exe = dir.path().join("smoke");
    let mut cmd = Command::new(&cc);
    cmd.arg("-std=c99")
        .arg("-Wall")
        .arg("-Werror")
        .arg("-I")
        .arg(manifest().join("include"))
        .arg(manifest().join("tests/c/smoke.c"));
    if !lib.exists() {
        // only the header can be checked without the static library
        let st = cmd.arg("-fsyntax-only").status().unwrap();
        assert!(st.success());
        return;
    }
    let st = cmd.arg(&lib).args(["-lpthread", "-ldl", "-lm", "-o"]).arg(&exe).status().unwrap();
    assert!(st.success(), "C build failed");
    let out = Command::new(&exe).output().unwrap();
    assert!(out.status.success(), "smoke exited with {:?}", out.status.code());
    let p: f64 = String::from_utf8_lossy(&out.stdout).trim().parse().unwrap();
    assert!((p - 0.287864).abs() < 1e-6);
}
