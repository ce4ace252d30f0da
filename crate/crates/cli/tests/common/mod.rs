#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

pub fn data(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data").join(name)
}

pub fn semtype() -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_semtype"));
    cmd.env_remove("LINKER_DATA_DIR").env_remove("RUST_LOG");
    cmd
}

/// Runs the binary with the given arguments; paths are passed as is.
pub fn run<I, S>(args: I) -> Output
where
    I: IntoIterator<Item = S>,
    S: AsRef<std::ffi::OsStr>,
{
    semtype().args(args).output().expect("binary runs")
}

pub fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

pub fn ok(out: Output) -> Output {
    assert_eq!(code(&out), 0, "stderr: {}", String::from_utf8_lossy(&out.stderr));
    out
}

pub fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

pub fn read(path: &Path) -> String {
    std::fs::read_to_string(path).unwrap()
}

pub fn lines(path: &Path) -> Vec<serde_json::Value> {
    read(path).lines().map(|l| serde_json::from_str(l).unwrap()).collect()
}

/// annotate on the fixture into `dir/candidates.jsonl`.
pub fn annotate_fixture(dir: &Path, threads: &str) -> PathBuf {
    let out = dir.join("candidates.jsonl");
    ok(run([
        "--threads",
        threads,
        "annotate",
        "--lexicon",
        p(&data("toy_lexicon.tsv")),
        "--docs",
        p(&data("fixture_docs.jsonl")),
        "--out",
        p(&out),
    ]));
    out
}
