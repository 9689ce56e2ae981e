#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::process::Command;

pub struct Output {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

pub fn language(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../languages").join(name)
}

/// Run the built binary with colour off unless the caller sets it.
pub fn langx(args: &[&str]) -> Output {
    langx_env(args, &[("LANGX_COLOR", "never")])
}

pub fn langx_env(args: &[&str], env: &[(&str, &str)]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_langx"));
    cmd.args(args).env_remove("LANGX_COLOR");
    for (k, v) in env {
        cmd.env(k, v);
    }
    let out = cmd.output().expect("run langx");
    Output {
        code: out.status.code().expect("exit code"),
        stdout: String::from_utf8(out.stdout).unwrap(),
        stderr: String::from_utf8(out.stderr).unwrap(),
    }
}

pub fn path_str(p: &Path) -> &str {
    p.to_str().expect("utf-8 path")
}

/// The langFunny machine with the targets of two order rules swapped:
/// after the function of an application the machine goes on as if it had
/// evaluated the first component of a pair, and the other way round.
pub fn corrupted_funny_machine(dir: &Path) -> PathBuf {
    let ck = dir.join("funny.ck.lang");
    let out = langx(&["derive-ck", path_str(&language("langFunny.lang")), "-o", path_str(&ck)]);
    assert_eq!(out.code, 0, "{}", out.stderr);
    let text = std::fs::read_to_string(&ck).unwrap();
    let app = "<v1 , (app_1 e2 k)> --> <e2 , (app_2 v1 k)>";
    let pair = "<v1 , (pair_1 e2 k)> --> <e2 , (pair_2 v1 k)>";
    assert!(text.contains(app) && text.contains(pair));
    let swapped = text
        .replace(app, "<v1 , (app_1 e2 k)> --> <e2 , (pair_2 v1 k)>")
        .replace(pair, "<v1 , (pair_1 e2 k)> --> <e2 , (app_2 v1 k)>");
    let bad = dir.join("funny.bad.ck.lang");
    std::fs::write(&bad, swapped).unwrap();
    bad
}
