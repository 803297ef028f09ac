use std::fs;
use std::path::Path;
use std::process::Command;

use shapeopt::pipeline::{
    cmd_evaluate, cmd_export, cmd_optimize, cmd_preprocess, cmd_reconstruct, cmd_train, load_samples, run_all,
    Overrides, PipelineError, RunConfig, RunLayout,
};

fn small_config(out: &Path) -> String {
    format!(
        r#"
seed = 5
out = "{}"
resolution = 24

[dataset]
procedural = [{{ family = "sphere" }}, {{ family = "box" }}]
samples_per_shape = 2000

[architecture]
hidden = [32, 32]
latent_dim = 1
encoding = {{ levels = 2, include_input = true }}

[train]
epochs = 300
batch_size = 256

[ga]
population_size = 4
generations = 3

[extraction]
resolution = 20
silhouette_resolution = 64

[evaluate]
points = 500

[[objectives]]
name = "mass"
direction = "minimize"
evaluator = {{ kind = "mass", density = 1.0 }}

[[objectives]]
name = "stiffness"
direction = "maximize"
evaluator = {{ kind = "stiffness_proxy", density = 1.0, axis = "z" }}
"#,
        out.display()
    )
}

fn resolved(out: &Path) -> RunConfig {
    RunConfig::from_toml(&small_config(out)).unwrap().resolve(&Overrides::default()).unwrap()
}

fn csv_files(root: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out = Vec::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(dir) = stack.pop() {
        for entry in fs::read_dir(dir).unwrap() {
            let p = entry.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else if p.extension().is_some_and(|e| e == "csv") {
                out.push((p.strip_prefix(root).unwrap().display().to_string(), fs::read(&p).unwrap()));
            }
        }
    }
    out.sort();
    out
}

#[test]
fn stages_refuse_to_run_out_of_order() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = resolved(dir.path());
    for result in [
        cmd_train(&cfg).map(|_| ()),
        cmd_reconstruct(&cfg).map(|_| ()),
        cmd_evaluate(&cfg).map(|_| ()),
        cmd_optimize(&cfg).map(|_| ()),
        cmd_export(&cfg).map(|_| ()),
    ] {
        let err = result.unwrap_err();
        assert!(matches!(err, PipelineError::MissingArtifact { .. }), "{err}");
        assert_eq!(err.exit_code(), 3);
    }
}

#[test]
fn preprocess_writes_one_archive_per_shape() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = resolved(dir.path());
    cfg.dataset.samples_per_shape = 15_000;
    let summary = cmd_preprocess(&cfg, false).unwrap();
    assert_eq!(summary.shapes.len(), 2);
    let layout = RunLayout::new(dir.path());
    for s in &summary.shapes {
        assert!(s.watertight);
        assert_eq!(load_samples(&layout.sample_archive(&s.id)).unwrap().len(), 15_000);
        assert!(layout.dataset_mesh(&s.id).exists());
    }
    let echo = RunConfig::load(&layout.config()).unwrap();
    assert_eq!(echo, cfg);
}

#[test]
fn open_meshes_abort_unless_skipped() {
    let dir = tempfile::tempdir().unwrap();
    let open = dir.path().join("open.obj");
    fs::write(&open, "v 0 0 0\nv 1 0 0\nv 0 1 0\nf 1 2 3\n").unwrap();
    let mut cfg = resolved(&dir.path().join("run"));
    cfg.dataset.meshes = vec![open];
    let err = cmd_preprocess(&cfg, false).unwrap_err();
    assert!(matches!(err, PipelineError::InvalidInputs(ref list) if list.len() == 1), "{err}");
    assert_eq!(err.exit_code(), 3);
    let summary = cmd_preprocess(&cfg, true).unwrap();
    assert_eq!(summary.shapes.len(), 3);
    assert!(!summary.shapes[0].watertight && summary.shapes[0].samples == 0);
    assert!(summary.shapes[1..].iter().all(|s| s.samples == 2000));
}

#[test]
fn full_run_is_reproducible() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let first = run_all(&resolved(a.path()), false).unwrap();
    let second = run_all(&resolved(b.path()), false).unwrap();
    assert_eq!(first, second);
    assert!(!first.front.is_empty());
    let layout = RunLayout::new(a.path());
    for p in [
        layout.checkpoint(),
        layout.generations_csv(),
        layout.front_csv(),
        layout.training_points_csv(),
        layout.report(),
        layout.front_mesh(0),
        layout.export_mesh(0),
    ] {
        assert!(p.exists(), "{}", p.display());
    }
    let ca = csv_files(a.path());
    assert!(ca.len() >= 6);
    assert_eq!(ca, csv_files(b.path()));
    // rerunning a single stage in place rewrites identical bytes
    cmd_optimize(&resolved(a.path())).unwrap();
    assert_eq!(ca, csv_files(a.path()));
}

#[test]
fn cli_exit_codes() {
    let bin = env!("CARGO_BIN_EXE_shapeopt");
    let dir = tempfile::tempdir().unwrap();
    let cfg_path = dir.path().join("run.toml");
    fs::write(&cfg_path, small_config(&dir.path().join("out"))).unwrap();

    let status = |args: &[&str]| Command::new(bin).args(args).output().unwrap();
    let missing = status(&["optimize", "--config", cfg_path.to_str().unwrap()]);
    assert_eq!(missing.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&missing.stderr).contains("train"));

    let bad = dir.path().join("bad.toml");
    fs::write(&bad, "unknown_key = 1\n").unwrap();
    assert_eq!(status(&["preprocess", "--config", bad.to_str().unwrap()]).status.code(), Some(2));
    assert_eq!(
        status(&["preprocess", "--config", cfg_path.to_str().unwrap(), "--resolution", "2"]).status.code(),
        Some(2)
    );
    assert_eq!(status(&["preprocess"]).status.code(), Some(2));
    assert_eq!(status(&["no-such-stage"]).status.code(), Some(2));

    let ok = status(&["preprocess", "--config", cfg_path.to_str().unwrap(), "--seed", "1"]);
    assert!(ok.status.success(), "{}", String::from_utf8_lossy(&ok.stderr));
    assert!(String::from_utf8_lossy(&ok.stdout).contains("2000 samples"));
}

#[test]
fn divergence_exits_with_four() {
    let bin = env!("CARGO_BIN_EXE_shapeopt");
    let dir = tempfile::tempdir().unwrap();
    let cfg_path = dir.path().join("run.toml");
    let text = small_config(&dir.path().join("out")).replace("epochs = 300", "epochs = 50\nlipschitz_weight = 1e308");
    fs::write(&cfg_path, text).unwrap();
    let out = Command::new(bin)
        .args(["run", "--config", cfg_path.to_str().unwrap()])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(4), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(RunLayout::new(dir.path().join("out")).last_good_checkpoint().exists());
}
