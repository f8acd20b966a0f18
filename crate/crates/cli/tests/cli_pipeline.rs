use std::fs;
use std::io::{BufRead, BufReader};
use std::path::Path;
use std::process::{Command, Output};

use bookembed::PlaneGraph;

fn bookembed(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_bookembed"))
        .args(args)
        .current_dir(dir)
        .env("SAT_SOLVER_CMD", concat!(env!("CARGO_BIN_EXE_bookembed-sat"), " {cnf}"))
        .output()
        .expect("spawn bookembed")
}

fn ok(args: &[&str], dir: &Path) -> String {
    let out = bookembed(args, dir);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn field<'a>(stdout: &'a str, key: &str) -> &'a str {
    stdout
        .lines()
        .find_map(|l| l.strip_prefix(key).and_then(|r| r.strip_prefix(' ')))
        .unwrap_or_else(|| panic!("no `{key}` line in:\n{stdout}"))
}

#[test]
fn contracted_gadget_stats() {
    let dir = tempfile::tempdir().unwrap();
    ok(&["gen", "--family", "qk", "--k", "8", "--contract", "-o", "q8c.graph"], dir.path());
    let stats = ok(&["stats", "q8c.graph"], dir.path());
    assert_eq!(field(&stats, "vertices"), "275");
    assert_eq!(field(&stats, "edges"), "819");
    assert_eq!(field(&stats, "maximal_planar"), "true");
    assert_eq!(field(&stats, "terminals"), "7");
}

#[test]
fn encode_header_matches_closed_form() {
    let dir = tempfile::tempdir().unwrap();
    ok(&["gen", "--family", "qk-contracted", "--k", "8", "-o", "q8c.graph"], dir.path());
    ok(&["encode", "q8c.graph", "--pages", "3", "--symmetry", "all", "-o", "q8c.cnf"], dir.path());

    let g = PlaneGraph::parse(&fs::read_to_string(dir.path().join("q8c.graph")).unwrap()).unwrap();
    let (n, edges) = (g.vertex_count(), g.edges());
    let mut independent = 0;
    for (i, e) in edges.iter().enumerate() {
        independent += edges[i + 1..].iter().filter(|f| {
            ![e.u(), e.v()].contains(&f.u()) && ![e.u(), e.v()].contains(&f.v())
        }).count();
    }
    let vars = n * (n - 1) / 2 + 3 * edges.len() + independent;

    let cnf = fs::File::open(dir.path().join("q8c.cnf")).unwrap();
    let header = BufReader::new(cnf).lines().next().unwrap().unwrap();
    let parts: Vec<&str> = header.split_whitespace().collect();
    assert_eq!(parts[..3], ["p", "cnf", vars.to_string().as_str()]);
    assert!(dir.path().join("q8c.cnf.map").exists());
}

#[test]
fn solve_verify_analyze_pipeline() {
    let dir = tempfile::tempdir().unwrap();
    ok(&["gen", "--family", "qk", "--k", "2", "-o", "q2.graph"], dir.path());
    ok(&["encode", "q2.graph", "--pages", "3", "-o", "q2.cnf"], dir.path());
    let solved = ok(&["solve", "q2.cnf", "--expect", "sat", "-o", "q2.emb"], dir.path());
    assert_eq!(field(&solved, "status"), "sat");
    assert_eq!(ok(&["verify", "q2.graph", "q2.emb"], dir.path()).trim(), "valid");
    let report = ok(&["analyze", "q2.emb", "--lemma1", "--patterns"], dir.path());
    assert_eq!(field(&report, "same-page-crossings"), "0");
    assert_eq!(field(&report, "lemma1"), "0");
    assert!(field(&report, "twist").parse::<usize>().unwrap() <= 3);
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(&["gen", "--family", "qk", "--k", "2", "-o", "q2.graph"], d);
    ok(&["encode", "q2.graph", "--pages", "3", "-o", "q2.cnf"], d);

    let mismatch = bookembed(&["solve", "q2.cnf", "--expect", "unsat"], d);
    assert_eq!(mismatch.status.code(), Some(1));

    assert_eq!(bookembed(&["gen", "--family", "nope", "--k", "2", "-o", "x"], d).status.code(), Some(2));
    assert_eq!(bookembed(&["stats", "missing.graph"], d).status.code(), Some(2));
    assert_eq!(bookembed(&[], d).status.code(), Some(2));

    let broken = Command::new(env!("CARGO_BIN_EXE_bookembed"))
        .args(["solve", "q2.cnf"])
        .current_dir(d)
        .env("SAT_SOLVER_CMD", "/nonexistent/solver {cnf}")
        .output()
        .unwrap();
    assert_eq!(broken.status.code(), Some(3));
    let unset = Command::new(env!("CARGO_BIN_EXE_bookembed"))
        .args(["solve", "q2.cnf"])
        .current_dir(d)
        .env_remove("SAT_SOLVER_CMD")
        .output()
        .unwrap();
    assert_eq!(unset.status.code(), Some(3));
}

#[test]
fn generation_and_encoding_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    for name in ["a", "b"] {
        ok(&["gen", "--family", "gn", "--k", "3", "--n", "2", "-o", &format!("{name}.graph")], d);
        ok(&["encode", &format!("{name}.graph"), "--pages", "3", "--profile", "fact2", "--symmetry", "all",
            "-o", &format!("{name}.cnf")], d);
    }
    for ext in ["graph", "cnf", "cnf.map"] {
        assert_eq!(
            fs::read(d.join(format!("a.{ext}"))).unwrap(),
            fs::read(d.join(format!("b.{ext}"))).unwrap(),
            "{ext} differs"
        );
    }
}

#[test]
fn split_agrees_with_unsplit_solve() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(&["gen", "--family", "qk", "--k", "2", "-o", "q2.graph"], d);
    for pages in ["2", "3"] {
        ok(&["encode", "q2.graph", "--pages", pages, "-o", "whole.cnf"], d);
        let whole = ok(&["solve", "whole.cnf"], d);
        let out = format!("split{pages}");
        let split = ok(&["split", "q2.graph", "--pages", pages, "--max-between", "2", "--solve", "-o", &out], d);
        assert_eq!(field(&split, "jobs"), "5");
        let aggregate = field(&split, "aggregate").split_whitespace().next().unwrap();
        assert_eq!(aggregate, field(&whole, "status"), "pages={pages}");
        let manifest = fs::read_to_string(d.join(&out).join("manifest.txt")).unwrap();
        assert_eq!(manifest.lines().filter(|l| l.starts_with("job ")).count(), 5);
        if aggregate == "sat" {
            let emb = format!("{out}/embedding.emb");
            assert_eq!(ok(&["verify", "q2.graph", &emb], d).trim(), "valid");
        }
    }
}

#[test]
fn symmetry_rules_keep_small_gadgets_embeddable() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(&["gen", "--family", "qk", "--k", "3", "-o", "q3.graph"], d);
    for symmetry in ["all", "first-vertex,terminal-order", "reversal", "first-edge-page,second-edge-pages", "k4"] {
        ok(&["encode", "q3.graph", "--pages", "3", "--symmetry", symmetry, "-o", "q3.cnf"], d);
        ok(&["solve", "q3.cnf", "--expect", "sat", "-o", "q3.emb"], d);
        assert_eq!(ok(&["verify", "q3.graph", "q3.emb"], d).trim(), "valid", "{symmetry}");
    }
}
