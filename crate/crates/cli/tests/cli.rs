//! End-to-end tests of the command-line interface.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_relfuzz")
}

fn run(args: &[&str]) -> Output {
    Command::new(bin()).args(args).output().expect("binary runs")
}

fn write_seed(dir: &Path, name: &str) -> PathBuf {
    let t = relfuzz::targets::by_name(name).unwrap();
    let path = dir.join(format!("{name}.bin"));
    std::fs::write(&path, t.seed()).unwrap();
    path
}

fn stdout_json(out: &Output) -> serde_json::Value {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

#[test]
fn repo_seed_files_match_builtin_seeds() {
    // The checked-in seeds/ directory must stay in sync with the targets.
    let root = Path::new(env!("CARGO_MANIFEST_DIR")).join("../..");
    for name in relfuzz::targets::TARGET_NAMES {
        let path = root.join("seeds").join(format!("{name}.bin"));
        let on_disk = std::fs::read(&path).unwrap_or_else(|_| panic!("missing {path:?}"));
        assert_eq!(on_disk, relfuzz::targets::by_name(name).unwrap().seed(), "{name}");
    }
}

#[test]
fn analyze_nestedcmd_finds_three_relations() {
    let dir = tempfile::tempdir().unwrap();
    let seed = write_seed(dir.path(), "nestedcmd");
    let out = run(&["analyze", "--target", "nestedcmd", "--seed", seed.to_str().unwrap()]);
    let v = stdout_json(&out);
    assert_eq!(v["relations"].as_array().unwrap().len(), 3);
    assert_eq!(v["config"]["thresholds"]["t_loss"], "1/20");
    assert_eq!(v["target"], "nestedcmd");
}

#[test]
fn analyze_chunks_excludes_fixed_size_chunk() {
    let dir = tempfile::tempdir().unwrap();
    let seed = write_seed(dir.path(), "chunks");
    let out = run(&["analyze", "--target", "chunks", "--seed", seed.to_str().unwrap()]);
    let v = stdout_json(&out);
    let ps: Vec<u64> =
        v["relations"].as_array().unwrap().iter().map(|r| r["p"].as_u64().unwrap()).collect();
    assert_eq!(ps, vec![20], "only the VARD size field");
}

#[test]
fn analyze_echo_reports_no_relations_and_succeeds() {
    let dir = tempfile::tempdir().unwrap();
    let seed = write_seed(dir.path(), "echo");
    let out = run(&["analyze", "--target", "echo", "--seed", seed.to_str().unwrap()]);
    let v = stdout_json(&out);
    assert_eq!(v["relations"].as_array().unwrap().len(), 0);
}

#[test]
fn analyze_unknown_target_exits_2() {
    let out = run(&["analyze", "--target", "nope", "--seed", "/dev/null"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn unknown_flags_are_rejected() {
    let out = run(&["analyze", "--target", "echo", "--seed", "/dev/null", "--bogus"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn hexdump_output_is_byte_stable() {
    let dir = tempfile::tempdir().unwrap();
    let seed = write_seed(dir.path(), "tlv");
    let json_out = dir.path().join("r.json");
    let args = [
        "analyze",
        "--target",
        "tlv",
        "--seed",
        seed.to_str().unwrap(),
        "--hexdump",
        "--out",
        json_out.to_str().unwrap(),
    ];
    let first = run(&args);
    let second = run(&args);
    assert!(first.status.success());
    assert_eq!(first.stdout, second.stdout);
    let text = String::from_utf8(first.stdout).unwrap();
    assert!(text.contains("00000000  30 81 14 04 03 09 09 09  03 81 04 01 02 03 04 13"), "{text}");
    assert!(text.contains("r0: field p=2 s=1 e=Big  span a=3 b=23  size_post_b"), "{text}");
    // Report JSON went to --out, stdout holds only the dump.
    let v: serde_json::Value =
        serde_json::from_slice(&std::fs::read(&json_out).unwrap()).unwrap();
    assert_eq!(v["relations"].as_array().unwrap().len(), 4);
}

#[test]
fn fuzz_is_deterministic_and_reports_work() {
    let dir = tempfile::tempdir().unwrap();
    let seeds = dir.path().join("seeds");
    std::fs::create_dir_all(&seeds).unwrap();
    write_seed(&seeds, "nestedcmd");
    std::fs::rename(seeds.join("nestedcmd.bin"), seeds.join("seed.bin")).unwrap();
    let corpus = dir.path().join("corpus");

    let fuzz_args = |rng: &str| {
        vec![
            "fuzz".to_string(),
            "--target".into(),
            "nestedcmd".into(),
            "--seeds".into(),
            seeds.to_str().unwrap().into(),
            "--corpus".into(),
            corpus.to_str().unwrap().into(),
            "--execs".into(),
            "60000".into(),
            "--rng-seed".into(),
            rng.into(),
        ]
    };

    let out = Command::new(bin()).args(fuzz_args("7")).output().unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let mut snapshot: Vec<(String, Vec<u8>)> = std::fs::read_dir(&corpus)
        .unwrap()
        .map(|e| {
            let p = e.unwrap().path();
            (p.file_name().unwrap().to_string_lossy().into_owned(), std::fs::read(p).unwrap())
        })
        .collect();
    snapshot.sort();

    std::fs::remove_dir_all(&corpus).unwrap();
    let out = Command::new(bin()).args(fuzz_args("7")).output().unwrap();
    assert!(out.status.success());
    let mut snapshot2: Vec<(String, Vec<u8>)> = std::fs::read_dir(&corpus)
        .unwrap()
        .map(|e| {
            let p = e.unwrap().path();
            (p.file_name().unwrap().to_string_lossy().into_owned(), std::fs::read(p).unwrap())
        })
        .collect();
    snapshot2.sort();
    assert_eq!(snapshot, snapshot2, "identical flags must reproduce the corpus bit for bit");

    // stats.json embeds the resolved config.
    let stats: serde_json::Value =
        serde_json::from_slice(&std::fs::read(corpus.join("stats.json")).unwrap()).unwrap();
    assert_eq!(stats["config"]["rng_seed"], 7);
    assert_eq!(stats["config"]["frameshift_enabled"], true);
    assert_eq!(stats["target"], "nestedcmd");
    assert_eq!(stats["executions"], 60000);

    // Text report runs; JSON report has the three checks.
    let out = run(&["report", "--corpus", corpus.to_str().unwrap()]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("chk3"), "{text}");

    let out = run(&["report", "--corpus", corpus.to_str().unwrap(), "--json"]);
    let v = stdout_json(&out);
    let checks = v["checks"].as_array().unwrap();
    assert_eq!(checks.len(), 3);
    assert!(checks[0]["covered"].as_u64().unwrap() >= 1);
}

#[test]
fn fuzz_baseline_arm_records_no_analysis() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = dir.path().join("corpus");
    let out = run(&[
        "fuzz",
        "--target",
        "chunks",
        "--corpus",
        corpus.to_str().unwrap(),
        "--execs",
        "5000",
        "--no-frameshift",
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let stats: serde_json::Value =
        serde_json::from_slice(&std::fs::read(corpus.join("stats.json")).unwrap()).unwrap();
    assert_eq!(stats["frameshift_enabled"], false);
    assert_eq!(stats["config"]["frameshift_enabled"], false);
    assert_eq!(stats["analysis_costs"].as_array().unwrap().len(), 0);
    assert_eq!(stats["fixups_fired"], 0);
}

#[test]
fn report_on_empty_corpus_is_zeroes_and_success() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&["report", "--corpus", dir.path().to_str().unwrap(), "--target", "tlv"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("entries: 0"), "{text}");
}

#[test]
fn fuzz_without_budget_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&[
        "fuzz",
        "--target",
        "echo",
        "--corpus",
        dir.path().join("c").to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2));
}
