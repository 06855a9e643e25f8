//! Compiles and runs a small C program against the generated header and the
//! static library. Skipped when no C compiler is available.

use std::path::{Path, PathBuf};
use std::process::Command;

const PROGRAM: &str = r#"
#include <stdio.h>
#include "zonemem.h"

int main(void) {
    ZmWorldSpec spec = zm_world_spec_default();
    spec.rooms = 2;
    spec.kf_spacing = 1.0;
    ZmMap *map = NULL;
    if (zm_world_generate(&spec, &map) != ZM_STATUS_OK) return 10;
    ZmReplayOptions opts = zm_replay_options_default();
    ZmReport *report = NULL;
    if (zm_replay_default_patrol(map, &opts, &report) != ZM_STATUS_OK) return 11;
    ZmSummary s;
    if (zm_report_summary(report, &s) != ZM_STATUS_OK) return 12;
    printf("%zu %llu\n", zm_map_zone_count(map), (unsigned long long)s.batch_loads);
    spec.rooms = 0;
    ZmMap *bad = NULL;
    if (zm_world_generate(&spec, &bad) != ZM_STATUS_INVALID_ARGUMENT) return 13;
    if (zm_last_error_message() == NULL) return 14;
    zm_report_free(report);
    zm_map_free(map);
    return 0;
}
"#;

fn target_dir() -> PathBuf {
    // <target>/<profile>/deps/<test binary>
    let exe = std::env::current_exe().unwrap();
    exe.parent().unwrap().parent().unwrap().to_path_buf()
}

fn have(cmd: &str) -> bool {
    Command::new(cmd).arg("--version").output().is_ok()
}

#[test]
fn header_compiles_and_links() {
    if !have("cc") {
        eprintln!("skipping: no C compiler");
        return;
    }
    let include = Path::new(env!("CARGO_MANIFEST_DIR")).join("include");
    let lib = target_dir().join("libzonemem_ffi.a");
    if !lib.exists() {
        eprintln!("skipping: {} not built", lib.display());
        return;
    }
    let tmp = tempfile::tempdir().unwrap();
    let src = tmp.path().join("main.c");
    let exe = tmp.path().join("main");
    std::fs::write(&src, PROGRAM).unwrap();
    let status = Command::new("cc")
        .args(["-std=c99", "-Wall", "-Werror"])
        .arg("-I")
        .arg(&include)
        .arg(&src)
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm"])
        .arg("-o")
        .arg(&exe)
        .status()
        .unwrap();
    assert!(status.success(), "C compilation failed");
    let out = Command::new(&exe).output().unwrap();
    assert!(out.status.success(), "exit {:?}", out.status);
    // 48 keyframes per zone at budget 72: every zone change reloads (r0, c, r1, c, r0)
    assert_eq!(String::from_utf8_lossy(&out.stdout).trim(), "3 5");
}
