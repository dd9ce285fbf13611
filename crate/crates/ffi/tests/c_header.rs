//! Compiles and runs a C program against the generated header and the
//! static library. Skipped when no C compiler is on the path.

use std::path::PathBuf;
use std::process::Command;

const PROGRAM: &str = r#"
#include <math.h>
#include <stdio.h>
#include "expfunc.h"

int main(void) {
    ExpfuncModel *m = NULL;
    if (expfunc_model_from_json("{\"model\":\"pure_kill\",\"q\":1}", &m) != EXPFUNC_STATUS_OK) return 1;
    double v = 0, e = 0;
    if (expfunc_density_deriv(m, 1.0, 0, 1e-8, &v, &e) != EXPFUNC_STATUS_OK) return 2;
    if (fabs(v - exp(-1.0)) > 1e-9) return 3;
    if (expfunc_varphi_star(m, -1.0, &v) != EXPFUNC_STATUS_DOMAIN) return 4;
    if (expfunc_last_error_message() == NULL) return 5;
    expfunc_model_free(m);
    if (expfunc_model_from_json("{\"model\":1}", &m) != EXPFUNC_STATUS_CONFIG) return 6;
    printf("ok %s\n", expfunc_version());
    return 0;
}
"#;

fn compiler() -> Option<String> {
    ["cc", "gcc", "clang"]
        .into_iter()
        .find(|c| Command::new(c).arg("--version").output().is_ok_and(|o| o.status.success()))
        .map(String::from)
}

#[test]
fn c_program_links_and_runs() {
    let Some(cc) = compiler() else {
        eprintln!("no C compiler found; skipping");
        return;
    };
    // the test binary sits next to the library in target/<profile>/deps
    let deps = std::env::current_exe().unwrap().parent().unwrap().to_path_buf();
    let lib = deps.join("libexpfunc_ffi.a");
    if !lib.exists() {
        eprintln!("{} not built; skipping", lib.display());
        return;
    }
    let include = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("include");
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("main.c");
    let exe = dir.path().join("main");
    std::fs::write(&src, PROGRAM).unwrap();
    let status = Command::new(&cc)
        .arg(&src)
        .arg("-I")
        .arg(&include)
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&exe)
        .status()
        .unwrap();
    assert!(status.success(), "C compilation failed");
    let out = Command::new(&exe).output().unwrap();
    assert!(out.status.success(), "exit {:?}", out.status.code());
    assert!(String::from_utf8_lossy(&out.stdout).starts_with("ok "));
}
