//! Black-box tests of the `nagkit` binary: exit codes, determinism, and
//! format contracts.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn nagkit(dir: &Path, args: &[&str], envs: &[(&str, &str)]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_nagkit"));
    cmd.current_dir(dir).args(args);
    for (k, v) in envs {
        cmd.env(k, v);
    }
    cmd.output().expect("binary runs")
}

fn write(dir: &Path, name: &str, content: &str) {
    fs::write(dir.join(name), content).unwrap();
}

const REACTIONS: &str = "\
3 [CH3:1][OH:2]>>[CH3:1][O:2][CH3:3]
1 [CH3:1][C:2](=[O:3])[OH:4]>>[CH3:1][C:2](=[O:3])[O:4]CC
2 [NH2:1]c1ccccc1>O>[N+:1](=O)([O-])c1ccccc1
";

#[test]
fn augment_is_byte_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "rxn.txt", REACTIONS);
    let args = [
        "augment", "--input", "rxn.txt", "--copies", "2", "--seed", "7", "--out", "a.jsonl",
    ];
    let out1 = nagkit(dir.path(), &args, &[]);
    assert!(out1.status.success());
    let first = fs::read(dir.path().join("a.jsonl")).unwrap();
    let args2 = [
        "augment", "--input", "rxn.txt", "--copies", "2", "--seed", "7", "--out", "b.jsonl",
    ];
    let out2 = nagkit(dir.path(), &args2, &[]);
    assert!(out2.status.success());
    let second = fs::read(dir.path().join("b.jsonl")).unwrap();
    assert_eq!(first, second);
    // Input untouched.
    assert_eq!(fs::read_to_string(dir.path().join("rxn.txt")).unwrap(), REACTIONS);
    // Six examples: three records times two copies.
    assert_eq!(first.iter().filter(|&&b| b == b'\n').count(), 6);
}

#[test]
fn validate_accepts_serializer_output_and_rejects_corruption() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "rxn.txt", REACTIONS);
    let status = nagkit(
        dir.path(),
        &[
            "augment", "--input", "rxn.txt", "--copies", "1", "--seed", "3", "--out", "ex.jsonl",
        ],
        &[],
    );
    assert!(status.status.success());
    let tokens: Vec<String> = fs::read_to_string(dir.path().join("ex.jsonl"))
        .unwrap()
        .lines()
        .map(|l| {
            serde_json::from_str::<serde_json::Value>(l).unwrap()["tokens"]
                .as_str()
                .unwrap()
                .to_string()
        })
        .collect();
    write(dir.path(), "tokens.txt", &(tokens.join("\n") + "\n"));
    let ok = nagkit(dir.path(), &["validate", "--input", "tokens.txt"], &[]);
    assert_eq!(ok.status.code(), Some(0));

    // Corrupt one line: an edge before the first atom.
    let mut corrupted = tokens.clone();
    corrupted.push("<bos> A:C E:1:1 <eos>".into());
    write(dir.path(), "bad.txt", &(corrupted.join("\n") + "\n"));
    let bad = nagkit(dir.path(), &["validate", "--input", "bad.txt"], &[]);
    assert_eq!(bad.status.code(), Some(1));
    let stderr = String::from_utf8_lossy(&bad.stderr);
    assert!(stderr.contains("invalid"), "{stderr}");
}

#[test]
fn eval_reports_rank_three_fixture() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "truth.txt", "CCN\n");
    write(dir.path(), "pred.jsonl", "[\"CC\", \"CCO\", \"CCN\"]\n");
    let out = nagkit(
        dir.path(),
        &[
            "eval", "--pred", "pred.jsonl", "--truth", "truth.txt", "--k", "1,3,5,10",
        ],
        &[],
    );
    assert_eq!(out.status.code(), Some(0));
    let report: serde_json::Value =
        serde_json::from_slice(&out.stdout).expect("JSON report on stdout");
    assert_eq!(report["top_k_accuracy"]["1"], 0.0);
    assert_eq!(report["top_k_accuracy"]["3"], 1.0);
    assert_eq!(report["top_k_accuracy"]["5"], 1.0);
    assert_eq!(report["top_k_accuracy"]["10"], 1.0);
}

#[test]
fn malformed_config_file_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "cfg.toml", "beam_size = \"lots\"");
    write(dir.path(), "rxn.txt", REACTIONS);
    let out = nagkit(
        dir.path(),
        &[
            "--config", "cfg.toml", "augment", "--input", "rxn.txt",
        ],
        &[],
    );
    assert_eq!(out.status.code(), Some(2));
    // Unknown keys are also rejected.
    write(dir.path(), "cfg2.toml", "beam_width = 4");
    let out = nagkit(
        dir.path(),
        &["--config", "cfg2.toml", "augment", "--input", "rxn.txt"],
        &[],
    );
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn decode_flag_beats_env_beats_config_file() {
    let dir = tempfile::tempdir().unwrap();
    write(
        dir.path(),
        "req.jsonl",
        "{\"product_smiles\": \"CC\"}\n",
    );
    write(dir.path(), "cfg.toml", "beam_size = 4\nmax_len = 8\nvocab_max_gap = 1\n");

    let count_lines = |out: &Output| {
        String::from_utf8_lossy(&out.stdout)
            .lines()
            .filter(|l| !l.is_empty())
            .count()
    };

    // Config file alone: 4 candidates.
    let out = nagkit(
        dir.path(),
        &["--config", "cfg.toml", "decode", "--input", "req.jsonl"],
        &[],
    );
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(count_lines(&out), 4);

    // Env overrides the file: 2 candidates.
    let out = nagkit(
        dir.path(),
        &["--config", "cfg.toml", "decode", "--input", "req.jsonl"],
        &[("NAGKIT_BEAM_SIZE", "2")],
    );
    assert_eq!(count_lines(&out), 2);

    // Flag overrides both: 1 candidate.
    let out = nagkit(
        dir.path(),
        &[
            "--config", "cfg.toml", "decode", "--input", "req.jsonl", "--beam-size", "1",
        ],
        &[("NAGKIT_BEAM_SIZE", "2")],
    );
    assert_eq!(count_lines(&out), 1);
}

#[test]
fn decode_emits_ranked_candidates_with_valid_tokens() {
    let dir = tempfile::tempdir().unwrap();
    write(
        dir.path(),
        "scores.json",
        r#"{"vocab": ["<bos>", "<eos>", "A:C", "A:N", "E:1:1"],
            "entries": {
              "<bos>": [-99.0, -99.0, -0.1, -1.0, -99.0],
              "<bos> A:C": [-99.0, -3.0, -9.0, -0.2, -99.0],
              "<bos> A:C A:N": [-99.0, -9.0, -9.0, -9.0, -0.1],
              "<bos> A:C A:N E:1:1": [-99.0, -0.1, -9.0, -9.0, -99.0]
            }}"#,
    );
    write(
        dir.path(),
        "req.jsonl",
        "{\"product_smiles\": \"CN\", \"scores_file\": \"scores.json\"}\n",
    );
    let out = nagkit(
        dir.path(),
        &[
            "decode", "--input", "req.jsonl", "--beam-size", "3", "--max-len", "8",
        ],
        &[],
    );
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let stdout = String::from_utf8_lossy(&out.stdout);
    let rows: Vec<serde_json::Value> = stdout
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect();
    assert_eq!(rows[0]["rank"], 1);
    assert_eq!(rows[0]["tokens"], "<bos> A:C A:N E:1:1 <eos>");
    for (i, row) in rows.iter().enumerate() {
        assert_eq!(row["rank"], i + 1);
        assert!(row["log_score"].is_f64() || row["log_score"].is_i64());
    }
}

#[test]
fn stats_reports_sizes_and_distribution() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "rxn.txt", REACTIONS);
    let out = nagkit(dir.path(), &["stats", "--input", "rxn.txt"], &[]);
    assert_eq!(out.status.code(), Some(0));
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["sizes"][0], 3);
    assert_eq!(report["files"][0]["stats"]["labeled"], 3);
}

#[test]
fn attn_bench_emits_csv() {
    let dir = tempfile::tempdir().unwrap();
    let out = nagkit(
        dir.path(),
        &[
            "attn-bench", "--n", "16,32", "--d-h", "8", "--d-h2", "2",
        ],
        &[],
    );
    assert_eq!(out.status.code(), Some(0));
    let stdout = String::from_utf8_lossy(&out.stdout);
    let mut lines = stdout.lines();
    assert_eq!(
        lines.next().unwrap(),
        "variant,n,d_h,d_h2,analytic_bytes,measured_bytes,wall_ms"
    );
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 6);
    assert!(rows[0].starts_with("masked,16,8,2,2048,"));
    // The binary installs the tracking allocator, so peaks are measured.
    assert!(!rows.iter().any(|r| r.contains(",NA,")), "{stdout}");
}

#[test]
fn missing_input_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = nagkit(dir.path(), &["augment", "--input", "nope.txt"], &[]);
    assert_eq!(out.status.code(), Some(2));
}
