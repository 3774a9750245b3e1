use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_opmutex")).args(args).output().expect("binary runs")
}

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn config(name: &str) -> String {
    configs().join(name).to_string_lossy().into_owned()
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("opmutex-cli-{}-{name}", std::process::id()));
    let _ = std::fs::remove_dir_all(&dir);
    dir
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn safe_run_writes_one_trace_per_seed() {
    let out = scratch("safe");
    let o = bin(&["run", "--config", &config("safe_asym1.conf"), "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    let text = stdout(&o);
    assert!(text.starts_with("zigzag C1->C2: w1=950 w2=1100 weight=150 safe=true"));
    let traces = std::fs::read_dir(&out)
        .unwrap()
        .filter(|e| e.as_ref().unwrap().path().extension().is_some_and(|x| x == "trace"))
        .count();
    assert_eq!(traces, 100);
    assert!(text.contains("runs=100 violating_runs=0"));
    std::fs::remove_dir_all(out).unwrap();
}

#[test]
fn summary_lines_are_sorted_by_seed() {
    let out = scratch("sorted");
    let o = bin(&["run", "--seeds", "5..25", "--out", out.to_str().unwrap()]);
    let seeds: Vec<u64> = stdout(&o)
        .lines()
        .filter_map(|l| l.strip_prefix("seed="))
        .map(|l| l.split_whitespace().next().unwrap().parse().unwrap())
        .collect();
    assert_eq!(seeds, (5..25).collect::<Vec<_>>());
    std::fs::remove_dir_all(out).unwrap();
}

#[test]
fn unsafe_naive_run_exits_with_violation() {
    let out = scratch("naive");
    let o = bin(&["run", "--config", &config("naive_unsafe.conf"), "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stdout(&o).contains("safe=false"));
    assert!(stdout(&o).contains("mutex-overlap"));
    let o = bin(&["explore", "--config", &config("naive_unsafe.conf"), "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(out.join("counterexample.trace").exists());
    std::fs::remove_dir_all(out).unwrap();
}

#[test]
fn configuration_errors_exit_with_one_and_write_nothing() {
    let out = scratch("bad");
    let o = bin(&["run", "--config", "/no/such/file.conf", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    let bad = out.with_extension("conf");
    std::fs::write(&bad, "[client.c1]\nusage = 10..5\n").unwrap();
    let o = bin(&["run", "--config", bad.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    std::fs::write(&bad, "[delays]\nnowhere = 3\n").unwrap();
    let o = bin(&["run", "--config", bad.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(!out.exists());
    std::fs::remove_file(bad).unwrap();
    assert_eq!(bin(&["run", "--server", "nope"]).status.code(), Some(1));
    assert_eq!(bin(&["run", "--opportunism", "maybe"]).status.code(), Some(1));
    assert_eq!(bin(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(bin(&["--help"]).status.code(), Some(0));
}

#[test]
fn compare_reports_equivalence() {
    let out = scratch("cmp");
    let o = bin(&["compare", "asym3", "asym1", "--depth", "16", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o).lines().next(), Some("EQUIVALENT"));
    let o = bin(&["compare", "baseline", "asym1", "--depth", "16", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(stdout(&o).lines().next(), Some("NOT EQUIVALENT"));
    assert_eq!(bin(&["compare", "asym1", "symmetric"]).status.code(), Some(1));
}

#[test]
fn prs_advance_stimulus_overlaps_acknowledges_without_hazards() {
    let out = scratch("prs");
    let stim = Path::new(env!("CARGO_MANIFEST_DIR")).join("assets/advance.stim");
    let o = bin(&["prs", "builtin", "--stimulus", stim.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    assert!(stdout(&o).contains("hazards=0"));
    assert!(stdout(&o).contains("satisfied"));
    let trace = std::fs::read_to_string(out.join("prs-seed-0.trace")).unwrap();
    let t = opmutex::sim::Trace::parse(&trace).unwrap();
    let time = |n: &str, v: bool| t.transitions.iter().find(|x| x.node == n && x.value == v).unwrap().time;
    assert!(time("C2.a", true) < time("C1.a", false));
    std::fs::remove_dir_all(out).unwrap();
}

#[test]
fn prs_rejects_stimulus_on_internal_node() {
    let out = scratch("prs-bad");
    std::fs::create_dir_all(&out).unwrap();
    let stim = out.join("bad.stim");
    std::fs::write(&stim, "10,G_arb,1\n").unwrap();
    let o = bin(&["prs", "--stimulus", stim.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    std::fs::remove_dir_all(out).unwrap();
}

#[test]
fn check_flags_corrupted_trace() {
    let out = scratch("check");
    let o = bin(&["run", "--seed", "3", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let path = out.join("seed-3.trace");
    assert_eq!(bin(&["check", path.to_str().unwrap()]).status.code(), Some(0));

    let text = std::fs::read_to_string(&path).unwrap();
    let start: u64 =
        text.lines().find_map(|l| l.strip_prefix("usage,C1,")).unwrap().split(',').next().unwrap().parse().unwrap();
    let corrupted = out.join("corrupted.trace");
    std::fs::write(&corrupted, format!("{text}usage,C2,{},{}\n", start + 1, start + 5)).unwrap();
    let o = bin(&["check", corrupted.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stdout(&o).contains("mutex-overlap"));

    std::fs::write(&corrupted, "1,C1.r,1\n0,C1.a,1\n").unwrap();
    assert_eq!(bin(&["check", corrupted.to_str().unwrap()]).status.code(), Some(1));
    std::fs::remove_dir_all(out).unwrap();
}
