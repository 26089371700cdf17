use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use oda_lab::results::ResultFile;
use oda_lab::scenario::ScenarioFile;

fn oda(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_oda")).args(args).env_remove("ODA_SEED").output().expect("binary runs")
}

fn data(name: &str) -> String {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests").join(name).display().to_string()
}

fn tmp(dir: &tempfile::TempDir, name: &str) -> PathBuf {
    dir.path().join(name)
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn fig1_run_matches_golden_files() {
    let dir = tempfile::tempdir().unwrap();
    let out = tmp(&dir, "r.json");
    let o = oda(&["run", "--scenario", &data("data/fig1.toml"), "--out", s(&out)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(
        std::fs::read_to_string(&out).unwrap(),
        std::fs::read_to_string(data("golden/fig1_result.json")).unwrap()
    );
    assert_eq!(
        std::fs::read_to_string(out.with_extension("csv")).unwrap(),
        std::fs::read_to_string(data("golden/fig1_result.csv")).unwrap()
    );
    let r = ResultFile::parse(&std::fs::read_to_string(&out).unwrap(), "r").unwrap();
    r.verify().unwrap();
    assert_eq!(r.outcome.deficit, 6);
}

#[test]
fn empty_instance_has_zero_welfare() {
    let dir = tempfile::tempdir().unwrap();
    let out = tmp(&dir, "e.json");
    assert!(oda(&["run", "--scenario", &data("data/empty.toml"), "--out", s(&out)]).status.success());
    let r = ResultFile::parse(&std::fs::read_to_string(&out).unwrap(), "e").unwrap();
    assert_eq!((r.outcome.welfare, r.outcome.deficit, r.outcome.pairs.len()), (0, 0, 0));
}

#[test]
fn greedy_on_impatient_sellers_is_a_precondition_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = oda(&["run", "--scenario", &data("data/nonpatient_greedy.toml"), "--out", s(&tmp(&dir, "x.json"))]);
    assert_eq!(o.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&o.stderr).contains("patient"));
}

#[test]
fn parse_errors_exit_2_with_location() {
    let dir = tempfile::tempdir().unwrap();
    let bad = tmp(&dir, "bad.toml");
    let text =
        std::fs::read_to_string(data("data/fig1.toml")).unwrap().replace("horizon = 10", "horizon = 10\nhorizn = 3");
    std::fs::write(&bad, text).unwrap();
    let o = oda(&["run", "--scenario", s(&bad), "--out", s(&tmp(&dir, "x.json"))]);
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("bad.toml") && err.contains("horizn") && err.contains("line"), "{err}");
}

#[test]
fn runs_are_byte_identical_and_seeds_take_precedence() {
    let dir = tempfile::tempdir().unwrap();
    let scen = tmp(&dir, "s.toml");
    let o = oda(&["generate", "--kind", "random-patient", "--params", "seed=42,sellers=5,buyers=6", "--out", s(&scen)]);
    assert!(o.status.success());
    let text = std::fs::read_to_string(&scen)
        .unwrap()
        .replace("kind = \"greedy\"", "kind = \"reduction\"\nauction = \"k-secretary\"");
    std::fs::write(&scen, text).unwrap();
    let run = |name: &str, extra: &[&str], env: Option<&str>| {
        let out = tmp(&dir, name);
        let mut c = Command::new(env!("CARGO_BIN_EXE_oda"));
        c.args(["run", "--scenario", s(&scen), "--out", s(&out)]).args(extra).env_remove("ODA_SEED");
        if let Some(e) = env {
            c.env("ODA_SEED", e);
        }
        assert!(c.output().unwrap().status.success());
        std::fs::read_to_string(out).unwrap()
    };
    let a = run("a.json", &[], None);
    assert_eq!(a, run("b.json", &[], Some("9")), "scenario seed beats the environment");
    assert!(a.contains("\"seed\": 42"));
    let c = run("c.json", &["--seed", "7"], None);
    assert_eq!(c, run("d.json", &["--seed", "7"], Some("9")));
    assert!(c.contains("\"seed\": 7"));
}

#[test]
fn generate_is_reproducible_and_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (tmp(&dir, "a.toml"), tmp(&dir, "b.toml"));
    for p in [&a, &b] {
        assert!(oda(&["generate", "--kind", "random-patient", "--params", "seed=42", "--out", s(p)]).status.success());
    }
    let text = std::fs::read_to_string(&a).unwrap();
    assert_eq!(text, std::fs::read_to_string(&b).unwrap());
    let parsed = ScenarioFile::parse(&text, "a").unwrap();
    assert_eq!(parsed.to_toml(), text);
    assert!(a.with_extension("csv").exists());

    let t1 = tmp(&dir, "t1.toml");
    assert!(oda(&["generate", "--kind", "theorem1", "--params", "v=100", "--out", s(&t1)]).status.success());
    let t = ScenarioFile::parse(&std::fs::read_to_string(&t1).unwrap(), "t1").unwrap();
    assert_eq!(t.instance.buyers.iter().map(|b| b.v).collect::<Vec<_>>(), [2, 100]);

    let o = oda(&["generate", "--kind", "fig1", "--params", "x=1", "--out", s(&tmp(&dir, "f.toml"))]);
    assert_eq!(o.status.code(), Some(2));
    let fig1 = tmp(&dir, "fig1.toml");
    assert!(oda(&["generate", "--kind", "fig1", "--out", s(&fig1)]).status.success());
    assert_eq!(std::fs::read_to_string(fig1).unwrap(), std::fs::read_to_string(data("data/fig1.toml")).unwrap());
}

#[test]
fn experiment_writes_report_and_summary_lines() {
    let dir = tempfile::tempdir().unwrap();
    let out = tmp(&dir, "exp.json");
    let o = oda(&["experiment", "--config", &data("data/experiment.toml"), "--out", s(&out)]);
    let stdout = String::from_utf8_lossy(&o.stdout);
    assert!(o.status.success(), "{stdout}{}", String::from_utf8_lossy(&o.stderr));
    let lines: Vec<&str> = stdout.lines().collect();
    assert_eq!(lines.len(), 4);
    assert!(lines.iter().all(|l| l.starts_with("PASS ")), "{stdout}");
    assert!(out.with_extension("csv").exists());
    let again = tmp(&dir, "exp2.json");
    assert!(oda(&["experiment", "--config", &data("data/experiment.toml"), "--out", s(&again)]).status.success());
    assert_eq!(std::fs::read(&out).unwrap(), std::fs::read(&again).unwrap());
}

#[test]
fn failing_experiment_exits_4() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = tmp(&dir, "c.toml");
    std::fs::write(
        &cfg,
        r#"schema = 1
seed = 3

[[task]]
kind = "truthfulness"
name = "reduction-truthful"
instances = 10
replications = 16
mechanism = { kind = "reduction", auction = "k-secretary" }
generator = { kind = "random-patient", sellers = 3, buyers = 4, low = 1, high = 30 }
criterion = "every-replay"
"#,
    )
    .unwrap();
    let o = oda(&["experiment", "--config", s(&cfg), "--out", s(&tmp(&dir, "o.json"))]);
    assert_eq!(o.status.code(), Some(4), "{}", String::from_utf8_lossy(&o.stdout));
    assert!(String::from_utf8_lossy(&o.stdout).starts_with("FAIL reduction-truthful"));
}
