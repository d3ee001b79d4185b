//! Compiles and runs a small C program against the header and static library.

use std::path::PathBuf;
use std::process::Command;

const PROGRAM: &str = r#"
#include <stdio.h>
#include <string.h>
#include "opburgers.h"

int main(void) {
    double v = 0.0;
    if (opb_hermite(3, 2.0, 1.0, &v) != OPB_STATUS_OK || v != 20.0) return 10;
    OpbScenario *sc = NULL;
    if (opb_scenario_new("hyp-sinh", &sc) != OPB_STATUS_OK) return 11;
    size_t n = 0;
    if (opb_scenario_ndim(sc, &n) != OPB_STATUS_OK || n != 1) return 12;
    char *json = NULL;
    if (opb_scenario_describe_json(sc, &json) != OPB_STATUS_OK) return 13;
    if (strstr(json, "\"id\":\"hyp-sinh\"") == NULL) return 14;
    opb_string_free(json);
    opb_scenario_free(sc);
    if (opb_scenario_new("missing", &sc) != OPB_STATUS_UNKNOWN_SCENARIO) return 15;
    printf("%s\n", opb_last_error());
    return 0;
}
"#;

#[test]
fn c_program_links_and_runs() {
    let exe = std::env::current_exe().unwrap();
    let profile_dir = exe.parent().and_then(|p| p.parent()).unwrap().to_path_buf();
    let lib = profile_dir.join("libopburgers_ffi.a");
    if !lib.exists() {
        eprintln!("skipping: {} not built", lib.display());
        return;
    }
    let cc = std::env::var("CC").unwrap_or_else(|_| "cc".into());
    if Command::new(&cc).arg("--version").output().is_err() {
        eprintln!("skipping: no C compiler");
        return;
    }
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("main.c");
    std::fs::write(&src, PROGRAM).unwrap();
    let bin: PathBuf = dir.path().join("main");
    let include = concat!(env!("CARGO_MANIFEST_DIR"), "/include");
    let status = Command::new(&cc)
        .args(["-std=c99", "-Wall", "-Werror", "-I", include])
        .arg(&src)
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&bin)
        .status()
        .unwrap();
    assert!(status.success(), "C compilation failed");
    let out = Command::new(&bin).output().unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8_lossy(&out.stdout).contains("missing"));
}
