//! End-to-end runs of the command-line pipeline on a small synthetic set.

use std::fs;
use std::path::Path;

use tongue_core::cli::{self, PipelineConfig};
use tongue_core::model::{load_model, FirstLayerMode};
use tongue_core::Error;

const SMALL: &str = "
seed = 3
synth.frames = 90
data.test_frames = 10
train.layer_sizes = 40,20
train.epochs = 3
train.batch_size = 20
trbm.epochs = 3
trbm.batch_size = 20
";

fn config(out: &Path) -> PipelineConfig {
    let mut cfg = PipelineConfig::parse(SMALL).unwrap();
    cfg.paths.out = out.to_path_buf();
    cfg
}

fn run_all(cfg: &PipelineConfig) -> String {
    let mut log = Vec::new();
    cli::cmd_synth(cfg, &mut log).unwrap();
    cli::cmd_autolabel(cfg, &mut log).unwrap();
    cli::cmd_train(cfg, &mut log).unwrap();
    cli::cmd_translate(cfg, &mut log).unwrap();
    cli::cmd_extract(cfg, &mut log).unwrap();
    cli::cmd_eval(cfg, &mut log).unwrap();
    String::from_utf8(log).unwrap()
}

fn read(p: impl AsRef<Path>) -> Vec<u8> {
    fs::read(p.as_ref()).unwrap_or_else(|e| panic!("{}: {e}", p.as_ref().display()))
}

#[test]
fn full_chain_writes_declared_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(dir.path());
    let log = run_all(&cfg);
    let d = dir.path();
    for f in [
        "manifest.txt",
        "frames/us_00000.pgm",
        "truth/truth_00089.contour",
        "ref/ref_00089.contour",
        "coverage.csv",
        "joint.trb",
        "translational.trb",
        "train_report.csv",
        "train_summary.csv",
        "trbm_report.csv",
        "dl/dl_00080.contour",
        "msd_report.csv",
        "effective_train.conf",
    ] {
        assert!(d.join(f).exists(), "missing {f}");
    }
    assert!(!d.join("dl/dl_00079.contour").exists(), "only test frames are extracted");
    assert!(log.contains("phase=layer1 epoch=1 val_rms="), "{log}");
    assert!(log.contains("phase=trbm epoch=3 val_rms="), "{log}");

    let report = String::from_utf8(read(d.join("msd_report.csv"))).unwrap();
    let lines: Vec<&str> = report.lines().collect();
    assert_eq!(lines[0], "pair,frame,msd_px,msd_mm");
    for pair in ["Truth vs Ref", "Truth vs DL", "Ref vs DL"] {
        assert!(lines.iter().any(|l| l.starts_with(&format!("{pair},AVERAGE,,"))), "{pair}");
    }
    let train_report = String::from_utf8(read(d.join("train_report.csv"))).unwrap();
    assert_eq!(train_report.lines().count(), 1 + 3 + 3);
    assert_eq!(load_model(d.join("joint.trb")).unwrap().mode(), FirstLayerMode::Joint);
    assert_eq!(load_model(d.join("translational.trb")).unwrap().mode(), FirstLayerMode::Translational);
}

#[test]
fn rerun_is_byte_identical_and_echo_reproduces() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    run_all(&config(a.path()));
    // second run driven only by the echoed config of the first
    let echo = String::from_utf8(read(a.path().join("effective_eval.conf"))).unwrap();
    let mut cfg = PipelineConfig::parse(&echo).unwrap();
    cfg.paths.out = b.path().to_path_buf();
    run_all(&cfg);
    for f in ["joint.trb", "translational.trb", "train_report.csv", "trbm_report.csv", "msd_report.csv", "coverage.csv", "frames/us_00042.pgm"] {
        assert_eq!(read(a.path().join(f)), read(b.path().join(f)), "{f}");
    }
}

#[test]
fn extract_with_joint_model_is_a_mode_error() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = config(dir.path());
    let mut log = Vec::new();
    cli::cmd_synth(&cfg, &mut log).unwrap();
    cli::cmd_autolabel(&cfg, &mut log).unwrap();
    cli::cmd_train(&cfg, &mut log).unwrap();
    cfg.paths.translational_model = Some(dir.path().join("joint.trb"));
    let err = cli::cmd_extract(&cfg, &mut log).unwrap_err();
    assert!(matches!(err, Error::Mode(_)), "{err}");
    assert_ne!(err.exit_code(), 0);
}

#[test]
fn translate_needs_a_joint_model() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(dir.path());
    let mut log = Vec::new();
    cli::cmd_synth(&cfg, &mut log).unwrap();
    match cli::cmd_translate(&cfg, &mut log) {
        Err(Error::MissingArtifact(p)) => assert!(p.ends_with("joint.trb")),
        other => panic!("{other:?}"),
    }
    // training on Ref labels before autolabel has run names the ref directory
    match cli::cmd_train(&cfg, &mut log) {
        Err(Error::MissingArtifact(p)) => assert!(p.ends_with("ref")),
        other => panic!("{other:?}"),
    }
}

#[test]
fn single_value_sweep_matches_train() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = config(dir.path());
    let mut log = Vec::new();
    cli::cmd_synth(&cfg, &mut log).unwrap();
    cli::cmd_autolabel(&cfg, &mut log).unwrap();
    let trained = cli::cmd_train(&cfg, &mut log).unwrap();
    cfg.sweep.axis = cli::SweepAxis::Epochs;
    cfg.sweep.values = vec![cfg.train.epochs];
    let sweep = cli::cmd_sweep(&cfg, &mut log).unwrap();
    assert_eq!(sweep.rows.len(), 1);
    let leg = sweep.rows[0].outcome.as_ref().unwrap();
    assert_eq!(leg.val_rms, trained.val_rms);
    assert_eq!(leg.train_rms, trained.train_rms);
    assert_eq!(leg.model, trained.model);
}

#[test]
fn sweep_leg_equals_standalone_run_of_its_config() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = config(dir.path());
    let mut log = Vec::new();
    cli::cmd_synth(&cfg, &mut log).unwrap();
    cli::cmd_autolabel(&cfg, &mut log).unwrap();
    cfg.sweep.axis = cli::SweepAxis::BatchSize;
    cfg.sweep.values = vec![10, 50, 0];
    let sweep = cli::cmd_sweep(&cfg, &mut log).unwrap();
    assert_eq!(sweep.failures(), 1, "batch size 0 must fail without stopping the sweep");
    let csv = String::from_utf8(read(dir.path().join("sweep_batch_size.csv"))).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "axis,value,val_rms,train_rms,seconds");
    assert_eq!(lines.len(), 4);
    assert!(lines[3].starts_with("batch_size,0,FAILED"));

    let echo = String::from_utf8(read(dir.path().join("sweep/batch_size_50.conf"))).unwrap();
    let leg_cfg = PipelineConfig::parse(&echo).unwrap();
    assert_eq!(leg_cfg.seed, 3 ^ 1);
    let data = cli::load_training_data(&leg_cfg).unwrap();
    let alone = cli::train_joint(&leg_cfg, &data, &mut Vec::new()).unwrap();
    let leg = sweep.rows[1].outcome.as_ref().unwrap();
    assert_eq!(alone.model, leg.model);
    assert_eq!(alone.val_rms, leg.val_rms);
}

#[test]
fn binary_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run");
    let conf = dir.path().join("bad.conf");
    fs::write(&conf, "train.epochs = 3\ntrain.momentum = 1.5\n").unwrap();
    let exe = env!("CARGO_BIN_EXE_tonguenet");
    let status = |args: &[&std::ffi::OsStr]| std::process::Command::new(exe).args(args).output().unwrap();
    let o = status(&["train".as_ref(), "--config".as_ref(), conf.as_os_str()]);
    assert_eq!(o.status.code(), Some(2));
    let o = status(&["extract".as_ref(), "--out".as_ref(), out.as_os_str()]);
    assert_eq!(o.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&o.stderr).contains("translational.trb"));
    let o = status(&["--help".as_ref()]);
    assert_eq!(o.status.code(), Some(0));
}
