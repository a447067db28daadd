//! Pipeline subcommands. Each reads its declared inputs, writes its outputs
//! under the output directory and echoes its effective config there.
//!
//! Run directory layout:
//!
//! ```text
//! manifest.txt  frames/us_%05d.pgm  truth/truth_%05d.contour   (synth)
//! ref/ref_%05d.contour  coverage.csv                            (autolabel)
//! joint.trb  train_report.csv  train_summary.csv                (train)
//! translational.trb  trbm_report.csv                            (translate)
//! dl/dl_%05d.contour  [overlay/overlay_%05d.pgm]                (extract)
//! msd_report.csv                                                (eval)
//! effective_<command>.conf
//! ```

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use super::config::{FrameSelection, LabelSource, PipelineConfig};
use super::dataset::{joint_matrix, split_frames, Geometry, Split};
use super::manifest::{FrameEntry, Manifest};
use crate::autolabel::{coverage_csv, label_sequence};
use crate::error::{Error, Result};
use crate::eval::{compare, load_contour_dir, ComparisonReport, PairSpec};
use crate::imaging::{
    contour_file_name, load_pgm, save_pgm, write_contour, ContourPointSet, Dims, UltrasoundFrame,
};
use crate::inference::{extract_contour, overlay, reconstruct_contour_images};
use crate::model::{
    load_model, save_model, train_stack, train_trbm, us_inputs, validation_error, DeepAutoencoder,
    EpochRecord, FirstLayerMode, TrainReport, REPORT_CSV_HEADER,
};
use crate::numerics::Matrix;
use crate::synth::gen_sequence;

const PGM_MAXVAL: u16 = 255;

pub(crate) fn write_file(path: &Path, contents: impl AsRef<[u8]>) -> Result<()> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    fs::write(path, contents).map_err(|e| Error::io(path, e))
}

fn ensure_dir(path: &Path) -> Result<()> {
    fs::create_dir_all(path).map_err(|e| Error::io(path, e))
}

pub(crate) fn echo_config(cfg: &PipelineConfig, command: &str) -> Result<()> {
    write_file(&cfg.paths.out.join(format!("effective_{command}.conf")), cfg.to_text())
}

/// Prints `phase=<p> epoch=<e> val_rms=<x>` lines.
pub(crate) fn progress_observer(progress: &mut dyn Write) -> impl FnMut(&str, &EpochRecord) + '_ {
    move |phase: &str, r: &EpochRecord| {
        let val = r.validation.map_or("NA".to_string(), |v| format!("{v:.6}"));
        let _ = writeln!(progress, "phase={phase} epoch={} val_rms={val}", r.epoch);
    }
}

/// Contour source directory: `<out>/<name>` if present, else
/// `<data>/<name>`.
pub fn source_dir(cfg: &PipelineConfig, name: &str) -> PathBuf {
    let own = cfg.paths.out.join(name);
    if own.is_dir() {
        own
    } else {
        cfg.data_dir().join(name)
    }
}

pub fn cmd_synth(cfg: &PipelineConfig, progress: &mut dyn Write) -> Result<Manifest> {
    let synth = cfg.synth_config();
    let seq = gen_sequence(&synth)?;
    let dir = cfg.data_dir();
    ensure_dir(&dir.join("frames"))?;
    ensure_dir(&dir.join("truth"))?;
    let mut entries = Vec::with_capacity(seq.frames.len());
    for (frame, truth) in seq.frames.iter().zip(&seq.truths) {
        let idx = frame.frame_index();
        let frame_rel = PathBuf::from("frames").join(format!("us_{idx:05}.pgm"));
        let truth_rel = PathBuf::from("truth").join(contour_file_name("truth", idx));
        save_pgm(frame, dir.join(&frame_rel), PGM_MAXVAL)?;
        write_contour(dir.join(&truth_rel), truth, None)?;
        entries.push(FrameEntry { index: idx, frame: frame_rel, truth: Some(truth_rel) });
    }
    let echo: String = cfg
        .to_text()
        .lines()
        .filter(|l| l.starts_with("synth.") || l.starts_with("seed"))
        .map(|l| format!("{l}\n"))
        .collect();
    let manifest = Manifest {
        seed: synth.seed,
        dims: Dims::new(synth.width, synth.height),
        mm_per_px: synth.mm_per_px,
        entries,
        config_echo: echo,
    };
    manifest.save(dir)?;
    echo_config(cfg, "synth")?;
    let _ = writeln!(progress, "phase=synth frames={} dir={}", seq.frames.len(), dir.display());
    Ok(manifest)
}

/// Manifest and frames of the data directory, in manifest order.
pub fn load_sequence(cfg: &PipelineConfig) -> Result<(Manifest, Vec<UltrasoundFrame>)> {
    let dir = cfg.data_dir();
    let manifest = Manifest::load(dir)?;
    let mut frames = Vec::with_capacity(manifest.entries.len());
    for e in &manifest.entries {
        let path = dir.join(&e.frame);
        if !path.exists() {
            return Err(Error::MissingArtifact(path));
        }
        let frame = load_pgm(&path)?.with_frame_index(e.index).with_mm_per_px(manifest.mm_per_px)?;
        if frame.dims() != manifest.dims {
            return Err(Error::domain(format!("{} is {}, manifest says {}", path.display(), frame.dims(), manifest.dims)));
        }
        frames.push(frame);
    }
    if frames.is_empty() {
        return Err(Error::domain("manifest lists no frames"));
    }
    Ok((manifest, frames))
}

pub fn cmd_autolabel(cfg: &PipelineConfig, progress: &mut dyn Write) -> Result<()> {
    let (_, frames) = load_sequence(cfg)?;
    let labels = label_sequence(&frames, &cfg.label)?;
    let dir = cfg.paths.out.join("ref");
    ensure_dir(&dir)?;
    for l in &labels {
        write_contour(dir.join(contour_file_name("ref", l.frame_index)), &l.contour, None)?;
    }
    write_file(&cfg.paths.out.join("coverage.csv"), coverage_csv(&labels))?;
    echo_config(cfg, "autolabel")?;
    let fallbacks: usize = labels.iter().map(|l| l.fallback_count).sum();
    let _ = writeln!(progress, "phase=autolabel frames={} fallbacks={fallbacks}", labels.len());
    Ok(())
}

/// Everything the training commands need, loaded once.
pub struct TrainingData {
    pub geometry: Geometry,
    pub split: Split,
    pub frames: Vec<UltrasoundFrame>,
    pub train: Matrix,
    pub validation: Option<Matrix>,
}

fn contours_for(entries: &[FrameEntry], set: &crate::eval::ContourSet, dir: &Path, stem: &str) -> Result<Vec<ContourPointSet>> {
    entries
        .iter()
        .map(|e| {
            set.get(&e.index)
                .cloned()
                .ok_or_else(|| Error::MissingArtifact(dir.join(contour_file_name(stem, e.index))))
        })
        .collect()
}

pub fn geometry(cfg: &PipelineConfig, frame: Dims) -> Result<Geometry> {
    Geometry::new(frame, cfg.imaging.roi, cfg.imaging.work, cfg.imaging.contour_thickness)
}

pub fn split_for(cfg: &PipelineConfig, n: usize) -> Result<Split> {
    split_frames(n, cfg.data.test_frames, cfg.data.validation_fraction, cfg.data.split_seed)
}

pub fn load_training_data(cfg: &PipelineConfig) -> Result<TrainingData> {
    let (manifest, frames) = load_sequence(cfg)?;
    let name = match cfg.data.labels {
        LabelSource::Ref => "ref",
        LabelSource::Truth => "truth",
    };
    let dir = source_dir(cfg, name);
    let labels = contours_for(&manifest.entries, &load_contour_dir(&dir)?, &dir, name)?;
    let geometry = geometry(cfg, manifest.dims)?;
    let split = split_for(cfg, frames.len())?;
    let train = joint_matrix(&geometry, &frames, &labels, &split.train)?;
    let validation = if split.validation.is_empty() {
        None
    } else {
        Some(joint_matrix(&geometry, &frames, &labels, &split.validation)?)
    };
    Ok(TrainingData { geometry, split, frames, train, validation })
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub model: DeepAutoencoder,
    pub reports: Vec<TrainReport>,
    /// Full-stack reconstruction RMS on the validation split.
    pub val_rms: Option<f64>,
    /// Full-stack reconstruction RMS on the training split.
    pub train_rms: f64,
    pub seconds: f64,
}

/// Trains the joint stack on prepared data without writing anything.
pub fn train_joint(cfg: &PipelineConfig, data: &TrainingData, progress: &mut dyn Write) -> Result<TrainOutcome> {
    let start = Instant::now();
    let mut obs = progress_observer(progress);
    let (model, reports) = train_stack(
        &data.train,
        data.validation.as_ref(),
        &cfg.layer_sizes,
        &cfg.train_config(),
        &mut obs,
    )?;
    let val_rms = data.validation.as_ref().map(|v| validation_error(&model, v)).transpose()?;
    let train_rms = validation_error(&model, &data.train)?;
    for v in val_rms.iter().chain([&train_rms]) {
        if !v.is_finite() {
            return Err(Error::NonFinite("reconstruction error".into()));
        }
    }
    Ok(TrainOutcome { model, reports, val_rms, train_rms, seconds: start.elapsed().as_secs_f64() })
}

pub fn report_csv(reports: &[TrainReport]) -> String {
    let mut out = String::from(REPORT_CSV_HEADER);
    for r in reports {
        out.push_str(&r.to_csv_rows());
    }
    out
}

pub fn cmd_train(cfg: &PipelineConfig, progress: &mut dyn Write) -> Result<TrainOutcome> {
    let data = load_training_data(cfg)?;
    let outcome = train_joint(cfg, &data, progress)?;
    save_model(&outcome.model, cfg.joint_model_path())?;
    write_file(&cfg.paths.out.join("train_report.csv"), report_csv(&outcome.reports))?;
    let val = outcome.val_rms.map(|v| v.to_string()).unwrap_or_default();
    write_file(
        &cfg.paths.out.join("train_summary.csv"),
        format!("val_rms,train_rms\n{val},{}\n", outcome.train_rms),
    )?;
    echo_config(cfg, "train")?;
    Ok(outcome)
}

pub fn cmd_translate(cfg: &PipelineConfig, progress: &mut dyn Write) -> Result<DeepAutoencoder> {
    let joint_path = cfg.joint_model_path();
    let joint = load_model(&joint_path)?;
    if joint.mode() != FirstLayerMode::Joint {
        return Err(Error::Mode(format!("{} is not a joint-mode model", joint_path.display())));
    }
    let data = load_training_data(cfg)?;
    let mut obs = progress_observer(progress);
    let (model, report) = train_trbm(
        &joint,
        &us_inputs(&data.train),
        &data.train,
        &cfg.trbm_train_config(),
        cfg.trbm.init,
        data.validation.as_ref(),
        &mut obs,
    )?;
    save_model(&model, cfg.translational_model_path())?;
    write_file(&cfg.paths.out.join("trbm_report.csv"), report_csv(&[report.report]))?;
    echo_config(cfg, "translate")?;
    Ok(model)
}

/// Positions (in manifest order) selected for extraction and scoring.
fn selected_positions(cfg: &PipelineConfig, n: usize) -> Result<Vec<usize>> {
    Ok(match cfg.eval.frames {
        FrameSelection::Test => split_for(cfg, n)?.test,
        FrameSelection::All => (0..n).collect(),
    })
}

pub fn cmd_extract(cfg: &PipelineConfig, progress: &mut dyn Write) -> Result<Vec<(usize, ContourPointSet)>> {
    let model = load_model(cfg.translational_model_path())?;
    if model.mode() != FirstLayerMode::Translational {
        return Err(Error::Mode(format!(
            "{} is a joint-mode model; extraction needs a translational model",
            cfg.translational_model_path().display()
        )));
    }
    let (manifest, frames) = load_sequence(cfg)?;
    let geometry = geometry(cfg, manifest.dims)?;
    let positions = selected_positions(cfg, frames.len())?;
    let work = positions
        .iter()
        .map(|&p| geometry.to_work(&frames[p]))
        .collect::<Result<Vec<_>>>()?;
    let images = reconstruct_contour_images(&model, &work)?;
    let dir = cfg.paths.out.join("dl");
    ensure_dir(&dir)?;
    let mut out = Vec::with_capacity(positions.len());
    let mut empty = 0;
    for (&p, image) in positions.iter().zip(&images) {
        let frame = &frames[p];
        let contour = geometry.contour_from_work(&extract_contour(image, &cfg.extract, image.dims)?)?;
        if !contour.is_valid() {
            empty += 1;
        }
        write_contour(dir.join(contour_file_name("dl", frame.frame_index())), &contour, None)?;
        if cfg.overlay {
            let path = cfg.paths.out.join("overlay").join(format!("overlay_{:05}.pgm", frame.frame_index()));
            ensure_dir(path.parent().expect("has parent"))?;
            save_pgm(&overlay(frame, &contour)?, path, PGM_MAXVAL)?;
        }
        out.push((frame.frame_index(), contour));
    }
    echo_config(cfg, "extract")?;
    let _ = writeln!(progress, "phase=extract frames={} empty={empty}", out.len());
    Ok(out)
}

pub fn cmd_eval(cfg: &PipelineConfig, progress: &mut dyn Write) -> Result<ComparisonReport> {
    let manifest = Manifest::load(cfg.data_dir())?;
    let positions = selected_positions(cfg, manifest.entries.len())?;
    let frames: Vec<usize> = positions.iter().map(|&p| manifest.entries[p].index).collect();
    let specs: Vec<PairSpec> = cfg
        .eval
        .pairs
        .iter()
        .map(|p| PairSpec {
            label: p.label.clone(),
            dir_a: source_dir(cfg, &p.a),
            dir_b: source_dir(cfg, &p.b),
        })
        .collect();
    let report = compare(&specs, Some(&frames), cfg.eval.mm_per_px)?;
    write_file(&cfg.paths.out.join("msd_report.csv"), report.to_csv())?;
    echo_config(cfg, "eval")?;
    for p in &report.pairs {
        let _ = writeln!(
            progress,
            "phase=eval pair=\"{}\" frames={} excluded={} msd_px={:.4} msd_mm={:.4}",
            p.label,
            p.frames.len(),
            p.excluded,
            p.average_px(),
            p.average_mm()
        );
    }
    Ok(report)
}
