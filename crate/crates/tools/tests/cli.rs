use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

use vmi_core::contour::slice_grid;
use vmi_core::joint::{lower_set_vertices_binary, to_stp};
use vmi_core::measures::MeasureSpec;
use vmi_core::JointDistribution;
use vmi_tools::emit::{parse_grid_csv, GridJson};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_peerpred")).args(args).output().unwrap()
}

fn ok_json(args: &[&str]) -> Value {
    let o = run(args);
    assert!(o.status.success(), "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
    serde_json::from_slice(&o.stdout).unwrap()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

#[test]
fn grid_csv_matches_library_bits() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("smi.csv");
    ok_json(&["mi", "grid", "--measure", r#"{"kind":"SMI"}"#, "--p0", "0.4", "--n", "21", "--out", p(&out)]);
    let text = std::fs::read_to_string(&out).unwrap();
    assert!(text.starts_with("s,t,value\n"));
    let back = parse_grid_csv(&text, 0.4, "SMI").unwrap();
    let direct = slice_grid(&MeasureSpec::Smi, 0.4, 21).unwrap();
    for (a, b) in back.values.iter().flatten().zip(direct.values.iter().flatten()) {
        assert_eq!(a.to_bits(), b.to_bits());
    }
}

#[test]
fn grid_json_mirrors_slice_grid() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("dmi.json");
    ok_json(&["mi", "grid", "--measure", r#"{"kind":"DMI"}"#, "--n", "11", "--out", p(&out)]);
    let g: GridJson = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!((g.n, g.p0, g.label.as_str()), (11, 0.5, "DMI"));
    // DMI on the p = .5 slice is |s − t| / 4.
    assert!((g.values[10][0] - 0.25).abs() < 1e-15);
    assert!(g.values.iter().enumerate().all(|(i, r)| r[i] == 0.0));
}

/// Tag balance and attribute quoting; enough to catch malformed output.
fn well_formed(svg: &str) -> Result<(), String> {
    let mut stack: Vec<String> = Vec::new();
    let mut rest = svg;
    while let Some(open) = rest.find('<') {
        let close = rest[open..].find('>').ok_or("unterminated tag")? + open;
        let tag = &rest[open + 1..close];
        rest = &rest[close + 1..];
        if tag.matches('"').count() % 2 != 0 {
            return Err(format!("unbalanced quotes in <{tag}>"));
        }
        if let Some(name) = tag.strip_prefix('/') {
            match stack.pop() {
                Some(top) if top == name => {}
                other => return Err(format!("</{name}> closes {other:?}")),
            }
        } else if !tag.ends_with('/') {
            stack.push(tag.split_whitespace().next().unwrap_or_default().to_string());
        }
    }
    if stack.is_empty() {
        Ok(())
    } else {
        Err(format!("unclosed {stack:?}"))
    }
}

/// `M x y (L x y)* Z?` with numeric coordinates.
fn path_ok(d: &str) -> bool {
    let mut toks = d.split_whitespace().peekable();
    let mut first = true;
    while let Some(t) = toks.next() {
        if t == "Z" {
            return toks.next().is_none();
        }
        let (cmd, x) = t.split_at(1);
        if (first && cmd != "M") || (!first && cmd != "L") {
            return false;
        }
        first = false;
        let y = toks.next();
        if x.parse::<f64>().is_err() || y.and_then(|y| y.parse::<f64>().ok()).is_none() {
            return false;
        }
    }
    !first
}

fn attr<'a>(tag: &'a str, name: &str) -> &'a str {
    let k = tag.find(&format!(" {name}=\"")).unwrap() + name.len() + 3;
    let e = tag[k..].find('"').unwrap() + k;
    &tag[k..e]
}

#[test]
fn svg_is_well_formed_with_overlays() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("mountain.svg");
    let joint = "[[0.4, 0.1], [0.1, 0.4]]";
    ok_json(&[
        "mi",
        "grid",
        "--measure",
        r#"{"kind":"VMI","density":{"kind":"mountain"},"mode":"squared"}"#,
        "--n",
        "41",
        "--levels",
        "0.0001,0.0005",
        "--lower-set",
        joint,
        "--strategies-of",
        joint,
        "--out",
        p(&out),
    ]);
    let svg = std::fs::read_to_string(&out).unwrap();
    well_formed(&svg).unwrap();
    let paths: Vec<&str> = svg.match_indices("<path ").map(|(i, _)| &svg[i..i + svg[i..].find('>').unwrap()]).collect();
    assert!(!paths.is_empty());
    assert!(paths.iter().all(|t| path_ok(attr(t, "d"))));

    // Overlay corners, mapped back from pixels, are the pure-strategy images.
    let u = JointDistribution::from_rows(vec![vec![0.4, 0.1], vec![0.1, 0.4]]).unwrap();
    let mut want: Vec<(f64, f64)> = lower_set_vertices_binary(&u)
        .unwrap()
        .iter()
        .map(|v| {
            let (c, _) = to_stp(v).unwrap();
            (c.s, c.t)
        })
        .collect();
    want.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let polys: Vec<&str> = svg.match_indices("<polygon ").map(|(i, _)| &svg[i..i + svg[i..].find('>').unwrap()]).collect();
    assert_eq!(polys.len(), 2);
    for poly in polys {
        let mut got: Vec<(f64, f64)> = attr(poly, "points")
            .split_whitespace()
            .map(|xy| {
                let (x, y) = xy.split_once(',').unwrap();
                ((x.parse::<f64>().unwrap() - 40.0) / 400.0, 1.0 - (y.parse::<f64>().unwrap() - 40.0) / 400.0)
            })
            .collect();
        got.sort_by(|a, b| a.partial_cmp(b).unwrap());
        for (g, w) in got.iter().zip(&want) {
            assert!((g.0 - w.0).abs() < 1e-5 && (g.1 - w.1).abs() < 1e-5, "{g:?} vs {w:?}");
        }
    }
}

#[test]
fn heatmap_peak() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("w.json");
    ok_json(&["vmi", "heatmap", "--density", r#"{"kind":"mountain"}"#, "--n", "5", "--out", p(&out)]);
    let g: GridJson = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert!((g.values[2][2] - 1.0 / 16.0).abs() < 1e-15);
}

#[test]
fn eval_exact_and_numeric() {
    let v = ok_json(&["--rational", "mi", "eval", "--measure", r#"{"kind":"VMISTAR"}"#, "--joint", r#"[["1/2",0],[0,"1/2"]]"#]);
    assert_eq!(v["exact"], "1/288");
    let v = ok_json(&["vmi", "numeric", "--density", r#"{"kind":"plain"}"#, "--joint", "[[0.4,0.1],[0.1,0.4]]"]);
    assert!((v["value"].as_f64().unwrap() - 0.3).abs() < 1e-10);
}

#[test]
fn mechanism_run_and_batch() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    std::fs::write(
        &cfg,
        r#"{"measure":{"kind":"DMI2"},"T":4,"U":[[0.4,0.1],[0.1,0.4]],
            "agents":[{},{"strategy":[[0.8,0.2],[0.2,0.8]]}],"replicates":2000,"seed":5,
            "policy":{"kind":"averaged_exact"}}"#,
    )
    .unwrap();
    let v = ok_json(&["--rational", "mech", "run", "--config", p(&cfg)]);
    assert_eq!(v["truthful_expectation"], "9/400");
    let a = &v["agents"][0];
    assert!((a["exact"].as_f64().unwrap() - 0.0081).abs() < 1e-12);

    let batch = dir.path().join("batch.csv");
    std::fs::write(&batch, "task,alice,bob\n0,0,0\n1,1,1\n2,0,1\n3,1,1\n").unwrap();
    let out = dir.path().join("pay.json");
    ok_json(&["mech", "run", "--config", p(&cfg), "--reports", p(&batch), "--out", p(&out)]);
    let v: Value = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(v["payments"].as_array().unwrap().len(), 2);
}

#[test]
fn audit_and_optimizer() {
    let v = ok_json(&["--seed", "4", "mech", "audit", "--measure", r#"{"kind":"DMI2"}"#, "--joint", "random", "--strategies", "30"]);
    assert_eq!(v["passed"], true);
    let v = ok_json(&["opt", "vstar"]);
    assert_eq!(v["vstar"], 39.0);
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("sweep.csv");
    let o = run(&["opt", "sweep", "--alphas", "20,40", "--out", p(&out)]);
    assert!(o.status.success());
    let text = std::fs::read_to_string(&out).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("alpha,T,vmi_at_ustar,eq_a,eq_b,requester_utility"));
    assert!(lines.next().unwrap().starts_with("20,36,"));
}

#[test]
fn exit_codes() {
    // Malformed input is a configuration error.
    assert_eq!(run(&["mi", "eval", "--measure", "{", "--joint", "[[1,0],[0,0]]"]).status.code(), Some(2));
    assert_eq!(run(&["mi", "eval", "--measure", "/no/such/file.json", "--joint", "[[1]]"]).status.code(), Some(2));
    assert_eq!(run(&["mi", "eval", "--measure", r#"{"kind":"DMI"}"#, "--joint", "[[0.5,0.5],[0.5,0.5]]"]).status.code(), Some(2));
    assert_eq!(run(&["mi", "frobnicate"]).status.code(), Some(2));
    // A mathematically invalid request is a precondition violation.
    let o = run(&["vmi", "symbolic", "--density", r#"{"kind":"plain"}"#, "--mode", "odd_direct"]);
    assert_eq!(o.status.code(), Some(3));
    let o = run(&["opt", "threshold", "--eps", "0"]);
    assert_eq!(o.status.code(), Some(3));
}
