//! End-to-end CLI behavior: exit codes, artifact handling, determinism.

use std::path::Path;
use std::process::{Command, Output};

fn divgraph(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_divgraph"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn assert_exit(output: &Output, code: i32) {
    assert_eq!(
        output.status.code(),
        Some(code),
        "stdout: {}\nstderr: {}",
        String::from_utf8_lossy(&output.stdout),
        String::from_utf8_lossy(&output.stderr)
    );
}

#[test]
fn pool_generate_is_deterministic_and_refuses_overwrite() {
    let tmp = tempfile::tempdir().unwrap();
    let a = tmp.path().join("a.jsonl");
    let b = tmp.path().join("b.jsonl");
    for out in [&a, &b] {
        let output = divgraph(&[
            "pool",
            "generate",
            "--n",
            "12",
            "--count",
            "50",
            "--seed",
            "9",
            "--out",
            out.to_str().unwrap(),
        ]);
        assert_exit(&output, 0);
    }
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    // Append-never: rewriting without --force is refused.
    let refused = divgraph(&[
        "pool",
        "generate",
        "--n",
        "12",
        "--count",
        "50",
        "--seed",
        "9",
        "--out",
        a.to_str().unwrap(),
    ]);
    assert_exit(&refused, 2);
    let forced = divgraph(&[
        "pool",
        "generate",
        "--n",
        "12",
        "--count",
        "50",
        "--seed",
        "9",
        "--out",
        a.to_str().unwrap(),
        "--force",
    ]);
    assert_exit(&forced, 0);
}

#[test]
fn optimize_writes_artifacts_and_reruns_identically() {
    let tmp = tempfile::tempdir().unwrap();
    let out1 = tmp.path().join("r1");
    let out2 = tmp.path().join("r2");
    for out in [&out1, &out2] {
        let output = divgraph(&[
            "optimize",
            "--n",
            "12",
            "--set-size",
            "8",
            "--kind",
            "gcd",
            "--plan",
            "greedy[300]->local_opt[100]",
            "--seed",
            "3",
            "--out",
            out.to_str().unwrap(),
        ]);
        assert_exit(&output, 0);
    }
    for file in [
        "graphs.jsonl",
        "characteristics.csv",
        "diversity.txt",
        "run_report.txt",
        "run_summary.json",
    ] {
        let b1 = std::fs::read(out1.join(file)).unwrap();
        let b2 = std::fs::read(out2.join(file)).unwrap();
        assert!(!b1.is_empty());
        assert_eq!(b1, b2, "{file} differs between identical runs");
    }
    // A rerun into the same directory without --force is a config error.
    let refused = divgraph(&[
        "optimize",
        "--n",
        "12",
        "--set-size",
        "8",
        "--kind",
        "gcd",
        "--plan",
        "greedy[300]->local_opt[100]",
        "--seed",
        "3",
        "--out",
        out1.to_str().unwrap(),
    ]);
    assert_exit(&refused, 2);
}

#[test]
fn optimize_accepts_config_files_with_flag_overrides() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("run.conf");
    std::fs::write(
        &cfg,
        "n = 12\nset_size = 8\nkind = gcd\nplan = greedy[300]\nseed = 4\n",
    )
    .unwrap();
    let out = tmp.path().join("out");
    let output = divgraph(&[
        "optimize",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
        "--kind",
        "portrait-div",
    ]);
    assert_exit(&output, 0);
    assert!(out.join("graphs.jsonl").is_file());

    let bad = tmp.path().join("bad.conf");
    std::fs::write(&bad, "n = 10\nwarp = 3\n").unwrap();
    let output = divgraph(&["optimize", "--config", bad.to_str().unwrap()]);
    assert_exit(&output, 2);
    assert!(String::from_utf8_lossy(&output.stderr).contains("warp"));
}

#[test]
fn optimize_ingests_external_pools() {
    let tmp = tempfile::tempdir().unwrap();
    let pool = tmp.path().join("pool.jsonl");
    assert_exit(
        &divgraph(&[
            "pool",
            "generate",
            "--n",
            "12",
            "--count",
            "40",
            "--seed",
            "2",
            "--out",
            pool.to_str().unwrap(),
        ]),
        0,
    );
    let out = tmp.path().join("out");
    let output = divgraph(&[
        "optimize",
        "--n",
        "12",
        "--set-size",
        "8",
        "--kind",
        "gcd",
        "--plan",
        "greedy[40]",
        "--seed",
        "1",
        "--pool",
        pool.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_exit(&output, 0);
    let graphs = std::fs::read_to_string(out.join("graphs.jsonl")).unwrap();
    assert_eq!(graphs.lines().count(), 8);
    // Every selected graph came from the pool file.
    let pool_lines: std::collections::HashSet<String> = std::fs::read_to_string(&pool)
        .unwrap()
        .lines()
        .map(String::from)
        .collect();
    for line in graphs.lines() {
        assert!(pool_lines.contains(line));
    }
}

#[test]
fn measure_requires_two_graphs() {
    let tmp = tempfile::tempdir().unwrap();
    let single = tmp.path().join("one.jsonl");
    std::fs::write(&single, "{\"n\":4,\"edges\":[[0,1]]}\n").unwrap();
    let output = divgraph(&["measure", "--input", single.to_str().unwrap()]);
    assert_exit(&output, 2);
}

#[test]
fn measure_prints_the_fixed_table() {
    let tmp = tempfile::tempdir().unwrap();
    let pool = tmp.path().join("p.jsonl");
    assert_exit(
        &divgraph(&[
            "pool",
            "generate",
            "--n",
            "10",
            "--count",
            "6",
            "--source",
            "er-mix",
            "--seed",
            "5",
            "--out",
            pool.to_str().unwrap(),
        ]),
        0,
    );
    let output = divgraph(&["measure", "--input", pool.to_str().unwrap()]);
    assert_exit(&output, 0);
    let text = String::from_utf8_lossy(&output.stdout);
    for header in ["GCD", "Portrait-div", "NetLSD-heat", "NetLSD-wave"] {
        assert!(text.contains(header), "{text}");
    }
    for row in ["energy_penalty", "avg_distance", "bottleneck"] {
        assert!(text.contains(row), "{text}");
    }
}

#[test]
fn describe_emits_parseable_records() {
    let tmp = tempfile::tempdir().unwrap();
    let pool = tmp.path().join("p.jsonl");
    assert_exit(
        &divgraph(&[
            "pool",
            "generate",
            "--n",
            "8",
            "--count",
            "3",
            "--source",
            "er-mix",
            "--seed",
            "6",
            "--out",
            pool.to_str().unwrap(),
        ]),
        0,
    );
    for kind in ["gcd", "portrait-div", "netlsd-heat", "netlsd-wave"] {
        let output = divgraph(&[
            "describe",
            "--input",
            pool.to_str().unwrap(),
            "--kind",
            kind,
        ]);
        assert_exit(&output, 0);
        let text = String::from_utf8_lossy(&output.stdout);
        assert_eq!(text.lines().count(), 3);
        for line in text.lines() {
            let (id, d) = divgraph::descriptors::decode_record::<f64>(line).unwrap();
            assert!(id < 3);
            assert_eq!(d.kind().as_str(), kind);
        }
    }
}

#[test]
fn report_writes_csv() {
    let tmp = tempfile::tempdir().unwrap();
    let pool = tmp.path().join("p.jsonl");
    assert_exit(
        &divgraph(&[
            "pool",
            "generate",
            "--n",
            "8",
            "--count",
            "5",
            "--source",
            "er-mix",
            "--seed",
            "7",
            "--out",
            pool.to_str().unwrap(),
        ]),
        0,
    );
    let csv = tmp.path().join("chars.csv");
    let output = divgraph(&[
        "report",
        "--input",
        pool.to_str().unwrap(),
        "--kinds",
        "gcd",
        "--csv",
        csv.to_str().unwrap(),
    ]);
    assert_exit(&output, 0);
    let written = std::fs::read_to_string(&csv).unwrap();
    assert!(written.starts_with("id,avg_degree,avg_clustering,gini,efficiency,edges,components"));
    assert_eq!(written.lines().count(), 6);
}

#[test]
fn toy_points_writes_coordinates() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("points.csv");
    let output = divgraph(&[
        "toy-points",
        "--objective",
        "energy",
        "--dim",
        "2",
        "--n",
        "10",
        "--budget",
        "500",
        "--seed",
        "1",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_exit(&output, 0);
    let text = std::fs::read_to_string(&out).unwrap();
    assert!(text.starts_with("id,x0,x1"));
    assert_eq!(text.lines().count(), 11);

    let bad = divgraph(&["toy-points", "--objective", "bottleneck", "--n", "5"]);
    assert_exit(&bad, 2);
}

#[test]
fn unknown_kind_lists_valid_kinds() {
    let output = divgraph(&["describe", "--input", "nope.jsonl", "--kind", "spectralish"]);
    assert_exit(&output, 2);
    let err = String::from_utf8_lossy(&output.stderr);
    assert!(err.contains("netlsd-heat"), "{err}");
}

#[test]
fn worker_count_does_not_change_results() {
    let tmp = tempfile::tempdir().unwrap();
    let outs: Vec<_> = [1usize, 4]
        .iter()
        .map(|workers| {
            let out = tmp.path().join(format!("w{workers}"));
            let output = divgraph(&[
                "--workers",
                &workers.to_string(),
                "optimize",
                "--n",
                "12",
                "--set-size",
                "8",
                "--kind",
                "portrait-div",
                "--plan",
                "greedy[200]->genetic[100,K=50]->local_opt[100,K=50]",
                "--seed",
                "6",
                "--out",
                out.to_str().unwrap(),
            ]);
            assert_exit(&output, 0);
            out
        })
        .collect();
    for file in ["graphs.jsonl", "run_report.txt", "run_summary.json"] {
        assert_eq!(
            std::fs::read(outs[0].join(file)).unwrap(),
            std::fs::read(outs[1].join(file)).unwrap(),
            "{file} differs across worker counts"
        );
    }
}

#[test]
fn out_dir_env_var_sets_the_default() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("env-out");
    let output = Command::new(env!("CARGO_BIN_EXE_divgraph"))
        .env("DIVGRAPH_OUT", &out)
        .args([
            "optimize",
            "--n",
            "12",
            "--set-size",
            "6",
            "--kind",
            "gcd",
            "--plan",
            "greedy[100]",
            "--seed",
            "8",
        ])
        .output()
        .expect("binary runs");
    assert_exit(&output, 0);
    assert!(out.join("graphs.jsonl").is_file());
}

#[test]
fn infeasible_generator_is_a_runtime_stage_error() {
    // The ensemble grid includes a regular leg with d = 10, infeasible at
    // n = 10; the stage failure surfaces as exit code 3.
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("out");
    let output = divgraph(&[
        "optimize",
        "--n",
        "10",
        "--set-size",
        "6",
        "--kind",
        "gcd",
        "--plan",
        "greedy[100]",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_exit(&output, 3);
    let err = String::from_utf8_lossy(&output.stderr);
    assert!(err.contains("stage 0"), "{err}");
}

#[test]
fn missing_pool_path_is_a_config_error() {
    let output = divgraph(&[
        "optimize",
        "--n",
        "12",
        "--set-size",
        "8",
        "--kind",
        "gcd",
        "--plan",
        "greedy[100]",
        "--pool",
        Path::new("/nonexistent/pool.jsonl").to_str().unwrap(),
    ]);
    assert_exit(&output, 2);
}
