//! Compiles and runs a small C program against the generated header and the
//! static library, exercising the ABI end to end.

use std::path::PathBuf;
use std::process::Command;

const C_SOURCE: &str = r#"
#include <assert.h>
#include <math.h>
#include <stdio.h>
#include "fourier_lcu.h"

int main(void) {
    LcuDiagonal *lcu = NULL;
    LcuStatus status = lcu_diagonal_build_hamming_penalty(12, 4, 0.5, &lcu);
    assert(status == LCU_STATUS_OK);
    assert(lcu_diagonal_branch_count(lcu) == 13);

    double cost = lcu_diagonal_gamma_cost(lcu);
    assert(cost > 1.0 && cost <= 13.0 + 1e-9);
    assert(lcu_diagonal_reconstruction_error(lcu) <= 1e-9);

    double re = 0.0, im = 0.0, theta = 0.0;
    status = lcu_diagonal_branch(lcu, 13, &re, &im, &theta);
    assert(status == LCU_STATUS_OUT_OF_RANGE);
    status = lcu_diagonal_branch(lcu, 1, &re, &im, &theta);
    assert(status == LCU_STATUS_OK);

    double slack = -1.0;
    status = lcu_diagonal_domination_slack(lcu, 6, &slack);
    assert(status == LCU_STATUS_OK);
    assert(slack >= -1e-9);
    lcu_diagonal_free(lcu);

    assert(lcu_spin_dimension_sum(10) == 1024);
    assert(fabs(lcu_su2_gamma_bound(12) - 455.0) < 1e-12);
    double p = lcu_warm_start_feasibility(12, 4);
    assert(fabs(p - 0.23845) < 1e-4);

    status = lcu_diagonal_build(NULL, 3, 0.1, &lcu);
    assert(status == LCU_STATUS_NULL_POINTER);
    printf("c binding ok: gamma cost %.4f, feasibility %.5f\n", cost, p);
    return 0;
}
"#;

#[test]
fn c_program_links_and_runs() {
    let manifest = PathBuf::from(env!("CARGO_MANIFEST_DIR"));
    let include_dir = manifest.join("include");
    let lib_dir = manifest.join("../../target/debug");
    let staticlib = lib_dir.join("libfourier_lcu_capi.a");
    assert!(staticlib.exists(), "staticlib missing at {}", staticlib.display());

    let dir = tempfile::tempdir().unwrap();
    let source = dir.path().join("binding_test.c");
    let binary = dir.path().join("binding_test");
    std::fs::write(&source, C_SOURCE).unwrap();

    let compile = Command::new("cc")
        .arg(&source)
        .arg("-I")
        .arg(&include_dir)
        .arg(&staticlib)
        .args(["-lpthread", "-ldl", "-lm"])
        .arg("-o")
        .arg(&binary)
        .output()
        .expect("cc available");
    assert!(
        compile.status.success(),
        "compilation failed: {}",
        String::from_utf8_lossy(&compile.stderr)
    );

    let run = Command::new(&binary).output().expect("binary runs");
    assert!(run.status.success(), "{}", String::from_utf8_lossy(&run.stderr));
    let stdout = String::from_utf8_lossy(&run.stdout);
    assert!(stdout.contains("c binding ok"), "{stdout}");
}
