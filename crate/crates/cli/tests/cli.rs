use std::path::{Path, PathBuf};

use tempfile::TempDir;

const EXAMPLE: &str = "5\n4 3 2 1 5\n3 4 1 2 5\n1 2 3 4 5\n1 5 3 2 4\n2 3 4 5 1\n";

fn ttcf(args: &[&str]) -> (i32, String, String) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let argv = std::iter::once("ttcf").chain(args.iter().copied());
    let code = ttc_frontier_cli::run(argv, &mut out, &mut err);
    (
        code,
        String::from_utf8(out).unwrap(),
        String::from_utf8(err).unwrap(),
    )
}

fn write(dir: &TempDir, name: &str, text: &str) -> PathBuf {
    let path = dir.path().join(name);
    std::fs::write(&path, text).unwrap();
    path
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn itea_on_example_lists_the_twelve_class() {
    let dir = TempDir::new().unwrap();
    let prefs = write(&dir, "example.prefs", EXAMPLE);
    let (code, out, _) = ttcf(&["itea", "--profile", s(&prefs)]);
    assert_eq!(code, 0);
    assert!(out.contains("member 4 3 2 1 5 class_size 12\n"), "{out}");

    let (code, brute, _) = ttcf(&["brute", "--profile", s(&prefs)]);
    assert_eq!(code, 0);
    let members = |t: &str| {
        t.lines()
            .filter(|l| l.starts_with("member"))
            .map(String::from)
            .collect::<Vec<_>>()
    };
    assert_eq!(members(&out), members(&brute));
}

#[test]
fn ttc_trace_and_fixed_point() {
    let dir = TempDir::new().unwrap();
    let prefs = write(&dir, "example.prefs", EXAMPLE);
    let (code, out, _) = ttcf(&["ttc", "--profile", s(&prefs), "--endowment", "[3,4,2,1,5]"]);
    assert_eq!(code, 0);
    assert_eq!(
        out,
        "allocation 4 3 2 1 5\nround 1 cycle 1:4 2:3\nround 1 cycle 4:1\nround 2 cycle 3:2\nround 3 cycle 5:5\n"
    );

    // from a PO allocation every cycle is a self-loop
    let (code, out, _) = ttcf(&["ttc", "--profile", s(&prefs), "--endowment", "4 3 2 1 5"]);
    assert_eq!(code, 0);
    assert!(out.starts_with("allocation 4 3 2 1 5\n"));
    for line in out.lines().skip(1) {
        let pairs: Vec<&str> = line.split_whitespace().skip(3).collect();
        assert_eq!(pairs.len(), 1, "{line}");
        let (a, r) = pairs[0].split_once(':').unwrap();
        assert_eq!(
            r,
            ["4", "3", "2", "1", "5"][a.parse::<usize>().unwrap() - 1]
        );
    }
}

#[test]
fn invttc_prints_preimage() {
    let dir = TempDir::new().unwrap();
    let prefs = write(&dir, "example.prefs", EXAMPLE);
    let (code, out, _) = ttcf(&[
        "invttc",
        "--profile",
        s(&prefs),
        "--allocation",
        "4,3,2,1,5",
    ]);
    assert_eq!(code, 0);
    assert!(out.contains("preimage_size 12\n"), "{out}");
    assert_eq!(
        out.lines().filter(|l| l.starts_with("endowment")).count(),
        12
    );

    let (code, _, err) = ttcf(&[
        "invttc",
        "--profile",
        s(&prefs),
        "--allocation",
        "1 2 3 4 5",
    ]);
    assert_eq!(code, 1);
    assert!(err.starts_with("error:"), "{err}");
}

#[test]
fn verify_passes_on_seeded_profiles() {
    let dir = TempDir::new().unwrap();
    for seed in 0..20 {
        let path = dir.path().join(format!("p{seed}.json"));
        let (code, _, _) = ttcf(&[
            "gen",
            "--n",
            "5",
            "--seed",
            &seed.to_string(),
            "--out",
            s(&path),
        ]);
        assert_eq!(code, 0);
        let (code, out, _) = ttcf(&["verify", "--profile", s(&path)]);
        assert_eq!(code, 0, "{out}");
        assert!(!out.contains("FAIL"), "{out}");
    }
}

#[test]
fn select_and_gen_round_trip() {
    let (code, generated, _) = ttcf(&["gen", "--n", "4", "--seed", "3"]);
    assert_eq!(code, 0);
    assert!(generated.starts_with("# seed: 3\n4\n"));
    let dir = TempDir::new().unwrap();
    let prefs = write(&dir, "g.prefs", &generated);
    for c in ["utilitarian", "egalitarian", "envy-pairs", "envious-agents"] {
        let (code, out, err) = ttcf(&["select", "--profile", s(&prefs), "--criterion", c]);
        assert_eq!(code, 0, "{err}");
        assert!(!out.is_empty());
    }
}

#[test]
fn bench_writes_csv() {
    let dir = TempDir::new().unwrap();
    let csv = dir.path().join("b.csv");
    let (code, out, err) = ttcf(&[
        "bench",
        "--n-min",
        "3",
        "--n-max",
        "4",
        "--instances",
        "3",
        "--out",
        s(&csv),
    ]);
    assert_eq!(code, 0, "{err}");
    assert!(out.contains("itea"));
    let text = std::fs::read_to_string(&csv).unwrap();
    assert_eq!(text.lines().count(), 1 + 2 * 3 * 2);
}

#[test]
fn bad_input_exits_nonzero() {
    let dir = TempDir::new().unwrap();
    let bad = write(&dir, "bad.prefs", "3\n1 2 3\n1 1 2\n3 2 1\n");
    let good = write(&dir, "good.prefs", EXAMPLE);

    let (code, _, err) = ttcf(&["itea", "--profile", s(&bad)]);
    assert_eq!(code, 1);
    assert!(err.contains("error:"), "{err}");

    let missing = dir.path().join("nope.prefs");
    assert_eq!(ttcf(&["itea", "--profile", s(&missing)]).0, 1);
    assert_eq!(
        ttcf(&["ttc", "--profile", s(&good), "--endowment", "1 2 3"]).0,
        1
    );
    assert_eq!(
        ttcf(&["ttc", "--profile", s(&good), "--endowment", "1 1 2 3 4"]).0,
        1
    );
    assert_eq!(
        ttcf(&["select", "--profile", s(&good), "--criterion", "nicest"]).0,
        2
    );
    assert_eq!(ttcf(&["frobnicate"]).0, 2);
    assert_eq!(ttcf(&["bench", "--n-min", "5", "--n-max", "3"]).0, 1);
    assert_eq!(ttcf(&["--help"]).0, 0);
}
