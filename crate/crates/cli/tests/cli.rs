use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn nbv<S: AsRef<std::ffi::OsStr>>(args: &[S]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_nbv")).args(args).output().expect("spawn nbv")
}

fn ok(out: Output) -> String {
    assert!(
        out.status.success(),
        "nbv failed with {}: {}",
        out.status,
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn gen(dir: &Path, kind: &str) -> String {
    ok(nbv(&[
        "gen", "--kind", kind, "--views", "30", "--size", "16", "--grid", "8", "--samples", "32", "--seed", "7",
        "--out", dir.to_str().unwrap(),
    ]))
}

const FAST: [&str; 10] = [
    "--min-init", "5", "--iterations", "2", "--initial-iterations", "6", "--samples", "16", "--voronoi-resolution", "64",
];

fn select(ds: &Path, out: &Path, strategy: &str, seed: u64) -> Output {
    let seed = seed.to_string();
    let mut args = vec![
        "select", "--dataset", ds.to_str().unwrap(), "--strategy", strategy, "--seed", &seed, "--out",
        out.to_str().unwrap(),
    ];
    args.extend(FAST);
    nbv(&args)
}

fn json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn first_line(path: &Path) -> String {
    std::fs::read_to_string(path).unwrap().lines().next().unwrap().to_string()
}

struct Fixture {
    _tmp: tempfile::TempDir,
    root: PathBuf,
    ds: PathBuf,
}

fn fixture() -> Fixture {
    let tmp = tempfile::tempdir().unwrap();
    let root = tmp.path().to_path_buf();
    let ds = root.join("ds");
    gen(&ds, "lawnmower");
    Fixture { _tmp: tmp, root, ds }
}

#[test]
fn gen_classifies_and_is_reproducible() {
    let f = fixture();
    let again = f.root.join("ds2");
    let text = gen(&again, "lawnmower");
    assert!(text.contains("Planar") && !text.contains("NonPlanar"), "{text}");
    for file in ["manifest.json", "poses.csv", "images/0.pfm", "images/29.pfm", "ground_truth.field"] {
        assert_eq!(std::fs::read(f.ds.join(file)).unwrap(), std::fs::read(again.join(file)).unwrap(), "{file}");
    }
    let helix = gen(&f.root.join("helix"), "helix");
    assert!(helix.contains("NonPlanar"), "{helix}");
    assert!(first_line(&f.ds.join("poses.csv")).starts_with("id,"));
}

#[test]
fn select_writes_every_output_and_reproduces_from_its_config() {
    let f = fixture();
    let run = f.root.join("run");
    let text = ok(select(&f.ds, &run, "hybrid", 3));
    assert!(text.contains("final test PSNR"));
    assert_eq!(
        first_line(&run.join("trace.csv")),
        "round,selected_id,psnr,ssim,sigma_rgb2,sigma_pos2,hybrid,wall_ms"
    );
    assert_eq!(
        first_line(&run.join("scores/round_000.csv")),
        "view_id,sigma_rgb2,sigma_pos2,norm_rgb,norm_pos,hybrid,selected"
    );
    assert!(run.join("field.bin").exists() && run.join("summary.txt").exists());

    // 30 views, 5 initial: the final split holds 2 * ceil(0.15 * 30) = 10.
    let fin = json(&run.join("final.json"));
    assert_eq!(fin["rounds"], 5);
    assert_eq!(fin["train_ids"].as_array().unwrap().len(), 10);
    let trace = std::fs::read_to_string(run.join("trace.csv")).unwrap();
    assert_eq!(trace.lines().count(), 6);
    assert!(trace.ends_with('\n') && !trace.contains('\r'));

    let again = f.root.join("again");
    let cfg = run.join("run_config.json");
    ok(nbv(&[
        "select", "--dataset", f.ds.to_str().unwrap(), "--config", cfg.to_str().unwrap(), "--out",
        again.to_str().unwrap(),
    ]));
    assert_eq!(trace, std::fs::read_to_string(again.join("trace.csv")).unwrap());
    assert_eq!(
        std::fs::read(run.join("field.bin")).unwrap(),
        std::fs::read(again.join("field.bin")).unwrap()
    );
}

fn poses(ds: &Path) -> BTreeMap<usize, [f64; 3]> {
    let text = std::fs::read_to_string(ds.join("poses.csv")).unwrap();
    text.lines()
        .skip(1)
        .map(|l| {
            let v: Vec<&str> = l.split(',').collect();
            let p = |k: usize| v[k].parse::<f64>().unwrap();
            (v[0].parse().unwrap(), [p(1), p(2), p(3)])
        })
        .collect()
}

#[test]
fn fvs_trace_passes_a_farthest_view_audit() {
    let f = fixture();
    let run = f.root.join("fvs");
    ok(select(&f.ds, &run, "fvs", 2));
    let pos = poses(&f.ds);
    let fin = json(&run.join("final.json"));
    let ids = |k: &str| -> Vec<usize> {
        fin[k].as_array().unwrap().iter().map(|v| v.as_u64().unwrap() as usize).collect()
    };
    let picked: Vec<usize> = std::fs::read_to_string(run.join("trace.csv"))
        .unwrap()
        .lines()
        .skip(1)
        .map(|l| l.split(',').nth(1).unwrap().parse().unwrap())
        .collect();
    let mut train: Vec<usize> = ids("train_ids").into_iter().filter(|i| !picked.contains(i)).collect();
    let mut cands: Vec<usize> = ids("candidate_ids").into_iter().chain(picked.iter().copied()).collect();
    cands.sort();
    let dist = |a: usize, b: usize| (0..3).map(|k| (pos[&a][k] - pos[&b][k]).powi(2)).sum::<f64>().sqrt();
    for &id in &picked {
        let score = |c: usize| train.iter().map(|&t| dist(c, t)).fold(f64::INFINITY, f64::min);
        let best = cands.iter().map(|&c| score(c)).fold(f64::NEG_INFINITY, f64::max);
        // poses.csv is rounded text, so allow ties within print precision.
        assert!(score(id) >= best - 1e-9, "view {id} is not the farthest candidate");
        train.push(id);
        cands.retain(|&c| c != id);
    }
}

#[test]
fn eval_of_ground_truth_hits_the_psnr_cap() {
    let f = fixture();
    let out = f.root.join("eval");
    let field = f.ds.join("ground_truth.field");
    ok(nbv(&[
        "eval", "--dataset", f.ds.to_str().unwrap(), "--field", field.to_str().unwrap(), "--all-views", "--out",
        out.to_str().unwrap(),
    ]));
    let s = json(&out.join("eval_summary.json"));
    assert_eq!(s["mean_psnr"], 99.0);
    assert_eq!(s["n_views"], 30);
    assert!((s["mean_ssim"].as_f64().unwrap() - 1.0).abs() < 1e-9);
    assert_eq!(
        first_line(&out.join("eval_views.csv")),
        "view_id,psnr,ssim,lpips,mse,mean_uncertainty,ause,ause_random"
    );
    assert_eq!(first_line(&out.join("sparsification/0.csv")), "fraction,err_by_uncertainty,err_by_oracle");
    assert!(out.join("uncertainty/29.pfm").exists());
}

#[test]
fn report_aggregates_runs() {
    let f = fixture();
    let mut runs = Vec::new();
    for (strategy, seed) in [("hybrid", 0), ("random", 0), ("random", 1), ("fvs", 0)] {
        let dir = f.root.join(format!("{strategy}-{seed}"));
        ok(select(&f.ds, &dir, strategy, seed));
        runs.push(dir);
    }
    let out = f.root.join("report");
    let mut args = vec!["report".to_string(), "--out".into(), out.to_str().unwrap().into()];
    args.extend(runs.iter().map(|r| r.to_str().unwrap().to_string()));
    ok(nbv(&args));

    let table = std::fs::read_to_string(out.join("table.csv")).unwrap();
    let rows: Vec<&str> = table.lines().collect();
    assert_eq!(rows[0], "strategy,runs,mean_final_psnr,mean_final_ssim,mean_rounds");
    assert_eq!(rows.len(), 4);
    let random = rows.iter().find(|r| r.starts_with("random,")).unwrap();
    let cols: Vec<&str> = random.split(',').collect();
    assert_eq!(cols[1], "2");
    let finals: Vec<f64> = runs[1..3]
        .iter()
        .map(|r| json(&r.join("final.json"))["final_psnr"].as_f64().unwrap())
        .collect();
    let mean: f64 = cols[2].parse().unwrap();
    assert!((mean - (finals[0] + finals[1]) / 2.0).abs() < 1e-12);

    let curve = std::fs::read_to_string(out.join("curve.csv")).unwrap();
    assert_eq!(curve.lines().next().unwrap(), "strategy,round,mean_psnr,runs");
    for s in ["hybrid", "random", "fvs"] {
        // One point per round plus the final field.
        assert_eq!(curve.lines().filter(|l| l.starts_with(&format!("{s},"))).count(), 6);
    }

    std::fs::remove_file(runs[3].join("trace.csv")).unwrap();
    let mut args = vec!["report".to_string(), "--out".into(), out.to_str().unwrap().into()];
    args.push(runs[3].to_str().unwrap().into());
    let bad = nbv(&args);
    assert_eq!(bad.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&bad.stderr).contains("fvs-0"));
}

#[test]
fn exit_codes_follow_the_error_kind() {
    let f = fixture();
    assert_eq!(nbv(&["select", "--bogus"]).status.code(), Some(2));
    let out = f.root.join("x");
    let ds = f.ds.to_str().unwrap();
    let bad_frac = nbv(&["select", "--dataset", ds, "--init-frac", "1.5", "--out", out.to_str().unwrap()]);
    assert_eq!(bad_frac.status.code(), Some(2));
    let missing = nbv(&["select", "--dataset", "/nonexistent/dataset", "--out", out.to_str().unwrap()]);
    assert_eq!(missing.status.code(), Some(3));
    let mismatch = nbv(&[
        "eval", "--dataset", ds, "--field", "/nonexistent/field.bin", "--out", out.to_str().unwrap(),
    ]);
    assert_eq!(mismatch.status.code(), Some(3));
    assert_eq!(nbv(&["--workers", "0", "report", ds]).status.code(), Some(2));
}

#[test]
fn output_root_comes_from_the_environment() {
    let f = fixture();
    let root = f.root.join("outputs");
    let out = Command::new(env!("CARGO_BIN_EXE_nbv"))
        .env("NBV_OUTPUT_ROOT", &root)
        .args(["select", "--dataset", f.ds.to_str().unwrap(), "--strategy", "random", "--seed", "4"])
        .args(FAST)
        .output()
        .unwrap();
    ok(out);
    assert!(root.join("select-random-4/trace.csv").exists());
}
