//! End-to-end runs of the `cuiassess` binary.

use std::path::Path;
use std::process::{Command, Output};

use cuiassess::assessment::Assessment;

fn run(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cuiassess"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("run cuiassess")
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn init(dir: &Path, level: &str) {
    let o = run(
        dir,
        &[
            "init", "@sample", "--level", level, "--org", "Clinic", "-o", "a.json",
        ],
    );
    assert_eq!(code(&o), 0, "{}", stderr(&o));
}

fn answer_fixture(dir: &Path) {
    for (i, sat) in ["Y", "Y", "N", "D", "Y"].iter().enumerate() {
        let id = format!("IR.{}", i + 1);
        let o = run(dir, &["answer", "a.json", &id, "--sat", sat]);
        assert_eq!(code(&o), 0, "{}", stderr(&o));
    }
}

#[test]
fn fixture_scores_through_the_cli() {
    let dir = tempfile::tempdir().unwrap();
    init(dir.path(), "high");
    answer_fixture(dir.path());
    let o = run(dir.path(), &["score", "a.json"]);
    assert_eq!(code(&o), 0);
    assert_eq!(
        stdout(&o),
        "family,points,count,percent,verdict\n\
         AC,0,3,0.0,fail\n\
         AT,0,3,0.0,fail\n\
         IR,3,5,60.0,fail\n\
         TOTAL,3,11,27.3,fail\n"
    );
}

#[test]
fn strict_score_fails_below_threshold() {
    let dir = tempfile::tempdir().unwrap();
    init(dir.path(), "high");
    answer_fixture(dir.path());
    let o = run(
        dir.path(),
        &["score", "a.json", "--strict", "--format", "table"],
    );
    assert_eq!(code(&o), 1);
    assert!(stdout(&o).contains("60.0%"));
}

#[test]
fn exclude_na_drops_not_applicable_from_the_count() {
    let dir = tempfile::tempdir().unwrap();
    init(dir.path(), "high");
    answer_fixture(dir.path());
    let o = run(dir.path(), &["score", "a.json", "--exclude-na"]);
    assert!(stdout(&o).contains("IR,3,4,75.0,fail"), "{}", stdout(&o));
}

#[test]
fn partial_without_value_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    init(dir.path(), "high");
    let before = std::fs::read(dir.path().join("a.json")).unwrap();
    let o = run(dir.path(), &["answer", "a.json", "IR.1", "--sat", "P"]);
    assert_eq!(code(&o), 2);
    assert_eq!(std::fs::read(dir.path().join("a.json")).unwrap(), before);

    let o = run(
        dir.path(),
        &["answer", "a.json", "IR.1", "--sat", "P", "--partial", "0.4"],
    );
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let o = run(dir.path(), &["answer", "a.json", "IR.2", "--sat", "PH"]);
    assert_eq!(code(&o), 0);
    let a = Assessment::from_json(&std::fs::read_to_string(dir.path().join("a.json")).unwrap())
        .unwrap();
    assert_eq!(
        a.responses[&"IR.1".parse().unwrap()].partial_value,
        Some(0.4)
    );
    assert_eq!(
        a.responses[&"IR.2".parse().unwrap()].partial_value,
        Some(0.75)
    );
    assert_eq!(a.revision, 2);
}

#[test]
fn bad_arguments_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    init(dir.path(), "high");
    assert_eq!(
        code(&run(
            dir.path(),
            &["answer", "a.json", "IR.1", "--sat", "Q"]
        )),
        2
    );
    assert_eq!(code(&run(dir.path(), &["bogus"])), 2);
    assert_eq!(
        code(&run(
            dir.path(),
            &["score", "a.json", "--family-threshold", "1.5"]
        )),
        2
    );
    assert_eq!(code(&run(dir.path(), &["--help"])), 0);
}

#[test]
fn unknown_requirement_and_missing_file() {
    let dir = tempfile::tempdir().unwrap();
    init(dir.path(), "medium");
    // enhanced requirements are outside the medium view
    assert_eq!(
        code(&run(
            dir.path(),
            &["answer", "a.json", "IR.4", "--sat", "Y"]
        )),
        1
    );
    assert_eq!(code(&run(dir.path(), &["score", "missing.json"])), 3);
    std::fs::write(dir.path().join("junk.json"), "{not json").unwrap();
    assert_eq!(code(&run(dir.path(), &["score", "junk.json"])), 3);
}

#[test]
fn init_refuses_to_overwrite() {
    let dir = tempfile::tempdir().unwrap();
    init(dir.path(), "high");
    let o = run(
        dir.path(),
        &["init", "@sample", "--org", "X", "-o", "a.json"],
    );
    assert_eq!(code(&o), 3);
    let o = run(
        dir.path(),
        &["init", "@sample", "--org", "X", "-o", "a.json", "--force"],
    );
    assert_eq!(code(&o), 0);
}

#[test]
fn catalog_file_is_recorded_and_reused() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(
        dir.path().join("cat.json"),
        cuiassess::catalog::SAMPLE_CATALOG,
    )
    .unwrap();
    let o = run(
        dir.path(),
        &["init", "cat.json", "--org", "X", "-o", "a.json"],
    );
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert_eq!(
        code(&run(
            dir.path(),
            &["answer", "a.json", "AC.1", "--sat", "Y"]
        )),
        0
    );

    // an edited catalog no longer matches the recorded digest
    let edited =
        cuiassess::catalog::SAMPLE_CATALOG.replace("Limit system access", "Restrict system access");
    std::fs::write(dir.path().join("cat.json"), edited).unwrap();
    let o = run(dir.path(), &["score", "a.json"]);
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("digest"));
    let o = run(dir.path(), &["score", "a.json", "--allow-catalog-mismatch"]);
    assert_eq!(code(&o), 0);
    assert!(stderr(&o).contains("warning"));

    std::fs::remove_file(dir.path().join("cat.json")).unwrap();
    assert_eq!(code(&run(dir.path(), &["score", "a.json"])), 3);
}

#[test]
fn odp_values_render_into_the_snapshot() {
    let dir = tempfile::tempdir().unwrap();
    init(dir.path(), "high");
    let o = run(
        dir.path(),
        &[
            "answer",
            "a.json",
            "IR.5",
            "--sat",
            "Y",
            "--odp",
            "1=12 hours",
        ],
    );
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let o = run(dir.path(), &["report", "a.json", "--kind", "snapshot"]);
    assert!(stdout(&o).contains("within [12 hours]."), "{}", stdout(&o));
    let o = run(
        dir.path(),
        &["answer", "a.json", "IR.5", "--sat", "Y", "--odp", "2=x"],
    );
    assert_eq!(code(&o), 1);
    let o = run(
        dir.path(),
        &["answer", "a.json", "IR.5", "--sat", "Y", "--odp", "1=[x]"],
    );
    assert_eq!(code(&o), 2);
}

#[test]
fn methods_command() {
    let dir = tempfile::tempdir().unwrap();
    init(dir.path(), "high");
    let o = run(
        dir.path(),
        &[
            "methods",
            "a.json",
            "IR.4",
            "--examine",
            "basic,focused",
            "--interview",
            "focused,focused",
            "--test",
            "comprehensive,basic",
            "--evidence",
            "interview:individual:SOC lead",
        ],
    );
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert_eq!(
        code(&run(
            dir.path(),
            &["methods", "a.json", "IR.1", "--examine", "basic,basic"]
        )),
        1
    );
    assert_eq!(
        code(&run(
            dir.path(),
            &["methods", "a.json", "IR.4", "--examine", "basic,deep"]
        )),
        2
    );
    assert_eq!(
        code(&run(
            dir.path(),
            &[
                "methods",
                "a.json",
                "IR.4",
                "--evidence",
                "test:individual:someone"
            ]
        )),
        2
    );
    assert_eq!(
        code(&run(
            dir.path(),
            &["complete", "a.json", "--on", "2026-01-31"]
        )),
        0
    );
    let a = Assessment::from_json(&std::fs::read_to_string(dir.path().join("a.json")).unwrap())
        .unwrap();
    assert_eq!(a.completed_on.unwrap().to_string(), "2026-01-31");
}

#[test]
fn effects_report_needs_high_level() {
    let dir = tempfile::tempdir().unwrap();
    init(dir.path(), "medium");
    assert_eq!(
        code(&run(dir.path(), &["report", "a.json", "--kind", "effects"])),
        1
    );

    let dir = tempfile::tempdir().unwrap();
    init(dir.path(), "high");
    answer_fixture(dir.path());
    let o = run(dir.path(), &["report", "a.json", "--kind", "effects"]);
    assert_eq!(code(&o), 0);
    assert!(
        stdout(&o).contains("IR,5,Y,,Yes,Yes,Yes,Yes"),
        "{}",
        stdout(&o)
    );
}

#[test]
fn reports_write_files() {
    let dir = tempfile::tempdir().unwrap();
    init(dir.path(), "high");
    answer_fixture(dir.path());
    for (kind, file) in [
        ("radar", "r.svg"),
        ("compliance", "c.csv"),
        ("snapshot", "s.txt"),
    ] {
        let o = run(
            dir.path(),
            &["report", "a.json", "--kind", kind, "--out", file],
        );
        assert_eq!(code(&o), 0, "{}", stderr(&o));
        assert!(stdout(&o).is_empty());
        assert!(dir.path().join(file).metadata().unwrap().len() > 0);
    }
    let svg = std::fs::read_to_string(dir.path().join("r.svg")).unwrap();
    assert!(svg.starts_with("<?xml"));
    let o = run(
        dir.path(),
        &["report", "a.json", "--kind", "snapshot", "--format", "json"],
    );
    let doc: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(doc["level_label"], "HIGH (Enhanced)");
}

#[test]
fn diff_between_files() {
    let dir = tempfile::tempdir().unwrap();
    init(dir.path(), "high");
    answer_fixture(dir.path());
    std::fs::copy(dir.path().join("a.json"), dir.path().join("b.json")).unwrap();

    let o = run(dir.path(), &["diff", "a.json", "b.json"]);
    assert_eq!(code(&o), 0);
    assert!(stdout(&o).is_empty());

    run(
        dir.path(),
        &[
            "answer",
            "b.json",
            "IR.3",
            "--sat",
            "Y",
            "--by",
            "someone else",
        ],
    );
    let o = run(dir.path(), &["diff", "a.json", "b.json", "--format", "csv"]);
    assert_eq!(
        stdout(&o),
        "requirement_id,field,before,after\nIR.3,satisfaction,N,Y\n"
    );

    let other = tempfile::tempdir().unwrap();
    init(other.path(), "medium");
    std::fs::copy(other.path().join("a.json"), dir.path().join("m.json")).unwrap();
    assert_eq!(code(&run(dir.path(), &["diff", "a.json", "m.json"])), 1);
}

#[test]
fn catalog_validate_reports_findings() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(dir.path(), &["catalog", "validate", "@reference"]);
    assert_eq!(code(&o), 0);
    assert_eq!(stdout(&o), "families=14 base=110 enhanced=34 total=144\n");

    let broken = r#"{"schema_version":"1","title":"t","families":[
      {"code":"AC","name":"Access Control","requirements":[
        {"id":"AC.1","tier":"base","text":"a [b"},
        {"id":"AC.1","tier":"base","text":"dup"},
        {"id":"AC.3","tier":"base","text":"c","adversary_effects":["expose"]}]}]}"#;
    std::fs::write(dir.path().join("bad.json"), broken).unwrap();
    let o = run(dir.path(), &["catalog", "validate", "bad.json"]);
    assert_eq!(code(&o), 1);
    let out = stdout(&o);
    assert_eq!(
        out.lines().filter(|l| l.starts_with("error:")).count(),
        3,
        "{out}"
    );

    std::fs::write(dir.path().join("syntax.json"), "{").unwrap();
    assert_eq!(
        code(&run(dir.path(), &["catalog", "validate", "syntax.json"])),
        1
    );
}
