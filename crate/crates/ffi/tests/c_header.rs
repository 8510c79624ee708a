//! Compiles and runs a small C program against the generated header and the
//! static library.

use std::path::PathBuf;
use std::process::Command;

const PROGRAM: &str = r#"
#include <math.h>
#include <stdio.h>
#include "fuzzy_resum.h"

int main(void) {
    FrSeries *s = NULL;
    FrMethod *m = NULL;
    FrResult *r = NULL;
    FrFuzzy *lim = NULL;
    if (fr_series_parse("preset:convergent-geometric", 11, 0.5, &s) != FR_STATUS_OK) return 10;
    if (fr_method_parse("abel", false, &m) != FR_STATUS_OK) return 11;
    FrSumOptions o = fr_sum_options_default();
    o.linear_extrapolation = true;
    if (fr_phi_limit(s, m, &o, &r) != FR_STATUS_OK) return 12;
    if (fr_result_status(r) != FR_SUM_STATUS_CONVERGED) return 13;
    if (fr_result_limit(r, &lim) != FR_STATUS_OK) return 14;
    double lo[11], hi[11];
    if (fr_fuzzy_copy(lim, NULL, lo, hi, 11) != FR_STATUS_OK) return 15;
    if (fabs(hi[0] - 4.0) > 1e-4) return 16;
    if (fr_method_parse("dirichlet:oops(", false, &m) == FR_STATUS_OK) return 17;
    if (fr_last_error() == NULL) return 18;
    printf("ok\n");
    fr_fuzzy_free(lim);
    fr_result_free(r);
    fr_method_free(m);
    fr_series_free(s);
    return 0;
}
"#;

#[test]
fn c_program_links_and_runs() {
    let manifest = PathBuf::from(env!("CARGO_MANIFEST_DIR"));
    // target/<profile>/deps/<test-binary>
    let profile_dir = std::env::current_exe()
        .unwrap()
        .parent()
        .unwrap()
        .parent()
        .unwrap()
        .to_path_buf();
    let lib = profile_dir.join("libfuzzy_resum_ffi.a");
    if !lib.exists() {
        eprintln!("skipping: {} not built", lib.display());
        return;
    }
    let work = tempfile::tempdir().unwrap();
    let src = work.path().join("main.c");
    let exe = work.path().join("main");
    std::fs::write(&src, PROGRAM).unwrap();
    let status = Command::new("cc")
        .arg(&src)
        .arg("-I")
        .arg(manifest.join("include"))
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&exe)
        .status()
        .expect("run cc");
    assert!(status.success(), "C compile failed");
    let out = Command::new(&exe).output().unwrap();
    assert!(out.status.success(), "C program exited with {:?}", out.status.code());
    assert_eq!(String::from_utf8_lossy(&out.stdout).trim(), "ok");
}
