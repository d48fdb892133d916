use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use dsmseq_core::{generate_instance, read_dsm, read_solution, write_dsm, Dsm};

fn dsmseq(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dsmseq"))
        .args(args)
        .env_remove("DSMSEQ_CORES")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn write_instance(dir: &Path, name: &str, dsm: &Dsm) -> String {
    let path = dir.join(name);
    write_dsm(dsm, &path).unwrap();
    path.to_str().unwrap().to_string()
}

#[test]
fn solve_zero_matrix() {
    let dir = tempfile::tempdir().unwrap();
    let input = write_instance(dir.path(), "z.txt", &Dsm::zeros(6).unwrap());
    let out = dir.path().join("sol.json");
    let o = dsmseq(&["solve", "--input", &input, "--output", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stdout(&o).contains("objective: 0"));
    assert!(stdout(&o).contains("(1, 2, 3, 4, 5, 6)"));
    let sol = read_solution(&out).unwrap();
    assert_eq!(sol.objective, 0.0);
    assert_eq!(sol.sequence, vec![1, 2, 3, 4, 5, 6]);
}

#[test]
fn solve_clamps_na_with_warning() {
    let dir = tempfile::tempdir().unwrap();
    let dsm = generate_instance(6, 0.6, 3).unwrap();
    let input = write_instance(dir.path(), "m.txt", &dsm);
    let out = dir.path().join("sol.json");
    let o = dsmseq(&[
        "solve",
        "--input",
        &input,
        "--na",
        "15",
        "--output",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stderr(&o).contains("using na = 4"), "{}", stderr(&o));
    let sol = read_solution(&out).unwrap();
    assert_eq!(sol.na, 4);
    let (_, best) = dsmseq_core::oracle::brute_force_optimum(&dsm).unwrap();
    assert_eq!(sol.objective, best);
    sol.revalidate(&read_dsm(&input).unwrap()).unwrap();
}

#[test]
fn zero_time_limit_exits_two_without_output() {
    let dir = tempfile::tempdir().unwrap();
    let input = write_instance(dir.path(), "m.txt", &generate_instance(20, 0.5, 1).unwrap());
    let out = dir.path().join("sol.json");
    let o = dsmseq(&[
        "solve",
        "--input",
        &input,
        "--time-limit",
        "0",
        "--output",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(2));
    assert!(!out.exists());
}

#[test]
fn bad_input_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.txt");
    fs::write(&path, "3\n0 1 0\n0 0\n0 0 0\n").unwrap();
    let o = dsmseq(&["solve", "--input", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains(":3:"), "{}", stderr(&o));
    let o = dsmseq(&["solve", "--input", dir.path().join("missing.txt").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn generate_counts_cells_and_repeats_exactly() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().to_str().unwrap();
    let args = [
        "generate",
        "--n",
        "15",
        "--density",
        "0.4",
        "--seed",
        "7",
        "--count",
        "10",
        "--out-dir",
        d,
    ];
    assert_eq!(dsmseq(&args).status.code(), Some(0));
    let mut first = Vec::new();
    for s in 7..17 {
        let path = dir.path().join(format!("dsm_n15_d0.4_s{s}.txt"));
        assert_eq!(read_dsm(&path).unwrap().nonzero_count(), 84);
        first.push(fs::read(&path).unwrap());
    }
    assert_eq!(dsmseq(&args).status.code(), Some(0));
    for (i, s) in (7..17).enumerate() {
        assert_eq!(
            fs::read(dir.path().join(format!("dsm_n15_d0.4_s{s}.txt"))).unwrap(),
            first[i]
        );
    }

    let o = dsmseq(&["generate", "--n", "5", "--density", "0", "--out-dir", d]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(
        read_dsm(dir.path().join("dsm_n5_d0_s0.txt")).unwrap().nonzero_count(),
        0
    );
}

#[test]
fn generate_into_unwritable_directory_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let blocker = dir.path().join("file");
    fs::write(&blocker, "x").unwrap();
    let o = dsmseq(&[
        "generate",
        "--n",
        "5",
        "--density",
        "0.5",
        "--out-dir",
        blocker.join("sub").to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn verify_matches_and_refuses_large() {
    let dir = tempfile::tempdir().unwrap();
    for (n, seed) in [(6, 1), (8, 2), (9, 3)] {
        let input = write_instance(
            dir.path(),
            &format!("v{n}.txt"),
            &generate_instance(n, 0.5, seed).unwrap(),
        );
        let o = dsmseq(&["verify", "--input", &input]);
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
        assert!(stdout(&o).contains("match"));
    }
    let zero = write_instance(dir.path(), "z.txt", &Dsm::zeros(7).unwrap());
    assert_eq!(dsmseq(&["verify", "--input", &zero]).status.code(), Some(0));
    let big = write_instance(dir.path(), "b.txt", &generate_instance(11, 0.5, 4).unwrap());
    assert_eq!(dsmseq(&["verify", "--input", &big]).status.code(), Some(1));
}

#[test]
fn rank_and_unrank() {
    let o = dsmseq(&["rank", "--n", "5", "--subset", "2,4,5"]);
    assert_eq!(stdout(&o).trim(), "9");
    let o = dsmseq(&["unrank", "--n", "5", "--p", "3", "--ha", "1"]);
    assert_eq!(stdout(&o).trim(), "1,2,3");
    let o = dsmseq(&["unrank", "--n", "6", "--p", "3", "--ha", "2", "--complement"]);
    assert_eq!(stdout(&o).lines().next(), Some("19"));
    let o = dsmseq(&["rank", "--n", "6", "--subset", "1,2,4", "--complement"]);
    assert!(stdout(&o).contains("complement: 19"));
    assert_eq!(dsmseq(&["rank", "--n", "5", "--subset", "2,2"]).status.code(), Some(1));
    assert_eq!(
        dsmseq(&["unrank", "--n", "5", "--p", "3", "--ha", "11"]).status.code(),
        Some(1)
    );
}

#[test]
fn cores_env_sits_below_the_flag() {
    let dir = tempfile::tempdir().unwrap();
    let input = write_instance(dir.path(), "m.txt", &generate_instance(8, 0.5, 9).unwrap());
    let run = |env: Option<&str>, flag: Option<&str>| {
        let out = dir.path().join("s.json");
        let mut cmd = Command::new(env!("CARGO_BIN_EXE_dsmseq"));
        cmd.args(["solve", "--input", &input, "--output", out.to_str().unwrap()]);
        cmd.env_remove("DSMSEQ_CORES");
        if let Some(v) = env {
            cmd.env("DSMSEQ_CORES", v);
        }
        if let Some(v) = flag {
            cmd.args(["--cores", v]);
        }
        assert!(cmd.output().unwrap().status.success());
        read_solution(&out).unwrap().cores_used
    };
    assert_eq!(run(Some("1"), None), 1);
    let hw = std::thread::available_parallelism().map_or(1, |c| c.get());
    assert_eq!(run(Some("1"), Some("2")), 2.min(hw));
    assert_eq!(run(None, None), 8.min(hw));
}

#[test]
fn bench_writes_both_reports() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().to_str().unwrap();
    let o = dsmseq(&[
        "bench",
        "--n-list",
        "5,6",
        "--densities",
        "0,0.5",
        "--instances",
        "2",
        "--verify",
        "--ablation",
        "no-hash",
        "--out-dir",
        d,
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let names: Vec<String> = fs::read_dir(dir.path())
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .collect();
    assert!(names.iter().any(|n| n.starts_with("bench_") && n.ends_with(".txt")));
    assert!(names.iter().any(|n| n.starts_with("bench_") && n.ends_with(".json")));
    assert!(stdout(&o).contains("no-hash"));
    assert_eq!(
        dsmseq(&["bench", "--ablation", "bogus", "--out-dir", d]).status.code(),
        Some(1)
    );
}
