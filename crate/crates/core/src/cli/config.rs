//! Line-based pipeline configuration.
//!
//! One `key = value` per line, `#` starts a comment, dotted keys name a
//! section (`train.batch_size = 100`). Unknown keys are rejected. A
//! `profile = desk|paper` line, wherever it appears, selects the defaults
//! that every other line then overrides.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use crate::autolabel::LabelConfig;
use crate::error::{Error, Result};
use crate::imaging::{Dims, Rect, DEFAULT_MM_PER_PX, WORK_DIMS};
use crate::inference::ExtractionConfig;
use crate::model::{TrainConfig, TrbmInit};
use crate::synth::SynthConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Profile {
    Desk,
    Paper,
}

impl Profile {
    fn name(self) -> &'static str {
        match self {
            Profile::Desk => "desk",
            Profile::Paper => "paper",
        }
    }
}

/// Which contours the joint model is trained on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LabelSource {
    Ref,
    Truth,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FrameSelection {
    Test,
    All,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Paths {
    pub out: PathBuf,
    /// Directory holding the manifest; the output directory when unset.
    pub data: Option<PathBuf>,
    pub joint_model: Option<PathBuf>,
    pub translational_model: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ImagingConfig {
    /// Full frame when unset.
    pub roi: Option<Rect>,
    pub work: Dims,
    pub contour_thickness: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DataConfig {
    /// Trailing frames held out for testing.
    pub test_frames: usize,
    pub validation_fraction: f64,
    /// Seeds the validation draw; kept apart from the run seed so that runs
    /// differing only in `seed` share one split.
    pub split_seed: u64,
    pub labels: LabelSource,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrbmConfig {
    pub train: TrainConfig,
    pub init: TrbmInit,
}

/// One scored pair: a label and two contour sources (subdirectories of the
/// output directory, or of the data directory for `truth`).
#[derive(Debug, Clone, PartialEq)]
pub struct PairDef {
    pub label: String,
    pub a: String,
    pub b: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalConfig {
    pub mm_per_px: f64,
    pub pairs: Vec<PairDef>,
    pub frames: FrameSelection,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepAxis {
    Depth,
    HiddenUnits,
    BatchSize,
    Epochs,
}

impl SweepAxis {
    pub fn name(self) -> &'static str {
        match self {
            SweepAxis::Depth => "depth",
            SweepAxis::HiddenUnits => "hidden_units",
            SweepAxis::BatchSize => "batch_size",
            SweepAxis::Epochs => "epochs",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "depth" => Some(SweepAxis::Depth),
            "hidden_units" => Some(SweepAxis::HiddenUnits),
            "batch_size" => Some(SweepAxis::BatchSize),
            "epochs" => Some(SweepAxis::Epochs),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepGrid {
    pub axis: SweepAxis,
    pub values: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub profile: Profile,
    pub seed: u64,
    pub paths: Paths,
    pub imaging: ImagingConfig,
    pub synth: SynthConfig,
    pub label: LabelConfig,
    pub train: TrainConfig,
    pub layer_sizes: Vec<usize>,
    pub data: DataConfig,
    pub trbm: TrbmConfig,
    pub extract: ExtractionConfig,
    pub overlay: bool,
    pub eval: EvalConfig,
    pub sweep: SweepGrid,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self::for_profile(Profile::Desk)
    }
}

fn default_pairs() -> Vec<PairDef> {
    [("Truth vs Ref", "truth", "ref"), ("Truth vs DL", "truth", "dl"), ("Ref vs DL", "ref", "dl")]
        .iter()
        .map(|&(l, a, b)| PairDef { label: l.into(), a: a.into(), b: b.into() })
        .collect()
}

impl PipelineConfig {
    pub fn for_profile(profile: Profile) -> Self {
        let (frames, layer_sizes, epochs) = match profile {
            Profile::Desk => (2050, vec![300, 300, 300], 20),
            Profile::Paper => (17050, vec![2000, 2000, 2000], 50),
        };
        let train = TrainConfig { epochs, ..TrainConfig::default() };
        Self {
            profile,
            seed: 42,
            paths: Paths {
                out: PathBuf::from("run"),
                data: None,
                joint_model: None,
                translational_model: None,
            },
            imaging: ImagingConfig {
                roi: None,
                work: WORK_DIMS,
                contour_thickness: 1,
            },
            synth: SynthConfig { frames, ..SynthConfig::default() },
            label: LabelConfig::default(),
            train: train.clone(),
            layer_sizes,
            data: DataConfig {
                test_frames: 50,
                validation_fraction: 2.0 / 17.0,
                split_seed: 42,
                labels: LabelSource::Ref,
            },
            trbm: TrbmConfig {
                train: TrainConfig { epochs: 20, ..train },
                init: TrbmInit::FromJoint,
            },
            extract: ExtractionConfig::default(),
            overlay: false,
            eval: EvalConfig {
                mm_per_px: DEFAULT_MM_PER_PX,
                pairs: default_pairs(),
                frames: FrameSelection::Test,
            },
            sweep: SweepGrid {
                axis: SweepAxis::Epochs,
                values: vec![5, 50, 250],
            },
        }
    }

    pub fn data_dir(&self) -> &Path {
        self.paths.data.as_deref().unwrap_or(&self.paths.out)
    }

    pub fn joint_model_path(&self) -> PathBuf {
        self.paths.joint_model.clone().unwrap_or_else(|| self.paths.out.join("joint.trb"))
    }

    pub fn translational_model_path(&self) -> PathBuf {
        self.paths
            .translational_model
            .clone()
            .unwrap_or_else(|| self.paths.out.join("translational.trb"))
    }

    /// Training hyperparameters with the run seed applied.
    pub fn train_config(&self) -> TrainConfig {
        TrainConfig { seed: self.seed, ..self.train.clone() }
    }

    pub fn trbm_train_config(&self) -> TrainConfig {
        TrainConfig { seed: self.seed, ..self.trbm.train.clone() }
    }

    pub fn synth_config(&self) -> SynthConfig {
        SynthConfig { seed: self.seed, ..self.synth.clone() }
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut entries = Vec::new();
        let mut profile = Profile::Desk;
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let (key, value) = content.split_once('=').ok_or_else(|| Error::Config {
                line,
                msg: format!("expected `key = value`, got {content:?}"),
            })?;
            let (key, value) = (key.trim(), value.trim());
            if key == "profile" {
                profile = match value {
                    "desk" => Profile::Desk,
                    "paper" => Profile::Paper,
                    _ => return Err(Error::Config { line, msg: format!("unknown profile {value:?}") }),
                };
            } else {
                entries.push((line, key, value));
            }
        }
        let mut cfg = Self::for_profile(profile);
        for (line, key, value) in entries {
            cfg.set(key, value).map_err(|msg| Error::Config { line, msg })?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        if !path.exists() {
            return Err(Error::MissingArtifact(path.to_path_buf()));
        }
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    /// Sets one dotted key from its textual value.
    pub fn set(&mut self, key: &str, value: &str) -> std::result::Result<(), String> {
        let v = value;
        match key {
            "seed" => self.seed = num(v)?,
            "paths.out" => self.paths.out = PathBuf::from(text(v)?),
            "paths.data" => self.paths.data = opt_path(v),
            "paths.joint_model" => self.paths.joint_model = opt_path(v),
            "paths.translational_model" => self.paths.translational_model = opt_path(v),

            "imaging.roi" => self.imaging.roi = parse_roi(v)?,
            "imaging.work_width" => self.imaging.work.width = num(v)?,
            "imaging.work_height" => self.imaging.work.height = num(v)?,
            "imaging.contour_thickness" => self.imaging.contour_thickness = num(v)?,

            "synth.frames" => self.synth.frames = num(v)?,
            "synth.width" => self.synth.width = num(v)?,
            "synth.height" => self.synth.height = num(v)?,
            "synth.band_sigma" => self.synth.band_sigma = real(v)?,
            "synth.drift_rate" => self.synth.drift_rate = real(v)?,
            "synth.rayleigh_scale" => self.synth.rayleigh_scale = real(v)?,
            "synth.background_level" => self.synth.background_level = real(v)?,
            "synth.speckle" => self.synth.speckle = flag(v)?,
            "synth.mm_per_px" => self.synth.mm_per_px = real(v)?,

            "label.binarize_threshold" => self.label.binarize_threshold = real(v)?,
            "label.neighbor_radius" => self.label.neighbor_radius = num(v)?,
            "label.column_window" => self.label.column_window = num(v)?,

            "train.layer_sizes" => self.layer_sizes = list(v)?,
            "data.test_frames" => self.data.test_frames = num(v)?,
            "data.validation_fraction" => self.data.validation_fraction = real(v)?,
            "data.split_seed" => self.data.split_seed = num(v)?,
            "data.labels" => {
                self.data.labels = match v {
                    "ref" => LabelSource::Ref,
                    "truth" => LabelSource::Truth,
                    _ => return Err(format!("data.labels must be ref or truth, got {v:?}")),
                }
            }
            "trbm.init" => {
                self.trbm.init = match v {
                    "from_joint" => TrbmInit::FromJoint,
                    "random" => TrbmInit::Random,
                    _ => return Err(format!("trbm.init must be from_joint or random, got {v:?}")),
                }
            }

            "extract.mask_threshold" => self.extract.mask_threshold = real(v)?,
            "extract.min_column_mass" => self.extract.min_column_mass = real(v)?,
            "extract.overlay" => self.overlay = flag(v)?,

            "eval.mm_per_px" => self.eval.mm_per_px = real(v)?,
            "eval.pairs" => self.eval.pairs = parse_pairs(v)?,
            "eval.frames" => {
                self.eval.frames = match v {
                    "test" => FrameSelection::Test,
                    "all" => FrameSelection::All,
                    _ => return Err(format!("eval.frames must be test or all, got {v:?}")),
                }
            }

            "sweep.axis" => {
                self.sweep.axis = SweepAxis::parse(v).ok_or_else(|| format!("unknown sweep axis {v:?}"))?
            }
            "sweep.values" => self.sweep.values = list(v)?,

            _ => {
                if let Some(field) = key.strip_prefix("train.") {
                    set_train(&mut self.train, field, v)?
                } else if let Some(field) = key.strip_prefix("trbm.") {
                    set_train(&mut self.trbm.train, field, v)?
                } else {
                    return Err(format!("unknown key {key:?}"));
                }
            }
        }
        Ok(())
    }

    /// Cross-field checks, reported as config errors.
    pub fn validate(&self) -> Result<()> {
        let check = |r: Result<()>| {
            r.map_err(|e| Error::Config {
                line: 0,
                msg: e.to_string(),
            })
        };
        check(self.synth_config().validate())?;
        check(self.label.validate())?;
        check(self.train.validate())?;
        check(self.trbm.train.validate())?;
        check(self.extract.validate())?;
        let fail = |msg: String| Err(Error::Config { line: 0, msg });
        if self.layer_sizes.is_empty() || self.layer_sizes.contains(&0) {
            return fail("train.layer_sizes must list positive widths".into());
        }
        if self.imaging.work.area() == 0 {
            return fail("working grid must be nonempty".into());
        }
        if !(self.eval.mm_per_px > 0.0) {
            return fail(format!("eval.mm_per_px must be positive, got {}", self.eval.mm_per_px));
        }
        if self.eval.pairs.is_empty() {
            return fail("eval.pairs is empty".into());
        }
        if self.sweep.values.is_empty() {
            return fail("sweep.values is empty".into());
        }
        Ok(())
    }

    /// Every key with its effective value; parsing the result gives back an
    /// equal config.
    pub fn to_text(&self) -> String {
        let mut o = String::new();
        let mut kv = |k: &str, v: String| {
            let _ = writeln!(o, "{k} = {v}");
        };
        let path = |p: &Option<PathBuf>| p.as_ref().map_or(String::new(), |p| p.display().to_string());
        kv("profile", self.profile.name().into());
        kv("seed", self.seed.to_string());
        kv("paths.out", self.paths.out.display().to_string());
        kv("paths.data", path(&self.paths.data));
        kv("paths.joint_model", path(&self.paths.joint_model));
        kv("paths.translational_model", path(&self.paths.translational_model));
        kv(
            "imaging.roi",
            self.imaging
                .roi
                .map_or("full".into(), |r| format!("{},{},{},{}", r.x, r.y, r.width, r.height)),
        );
        kv("imaging.work_width", self.imaging.work.width.to_string());
        kv("imaging.work_height", self.imaging.work.height.to_string());
        kv("imaging.contour_thickness", self.imaging.contour_thickness.to_string());
        let s = &self.synth;
        kv("synth.frames", s.frames.to_string());
        kv("synth.width", s.width.to_string());
        kv("synth.height", s.height.to_string());
        kv("synth.band_sigma", s.band_sigma.to_string());
        kv("synth.drift_rate", s.drift_rate.to_string());
        kv("synth.rayleigh_scale", s.rayleigh_scale.to_string());
        kv("synth.background_level", s.background_level.to_string());
        kv("synth.speckle", s.speckle.to_string());
        kv("synth.mm_per_px", s.mm_per_px.to_string());
        kv("label.binarize_threshold", self.label.binarize_threshold.to_string());
        kv("label.neighbor_radius", self.label.neighbor_radius.to_string());
        kv("label.column_window", self.label.column_window.to_string());
        kv("train.layer_sizes", join(&self.layer_sizes));
        for (k, v) in train_fields(&self.train) {
            kv(&format!("train.{k}"), v);
        }
        kv("data.test_frames", self.data.test_frames.to_string());
        kv("data.validation_fraction", self.data.validation_fraction.to_string());
        kv("data.split_seed", self.data.split_seed.to_string());
        kv(
            "data.labels",
            match self.data.labels {
                LabelSource::Ref => "ref",
                LabelSource::Truth => "truth",
            }
            .into(),
        );
        for (k, v) in train_fields(&self.trbm.train) {
            kv(&format!("trbm.{k}"), v);
        }
        kv(
            "trbm.init",
            match self.trbm.init {
                TrbmInit::FromJoint => "from_joint",
                TrbmInit::Random => "random",
            }
            .into(),
        );
        kv("extract.mask_threshold", self.extract.mask_threshold.to_string());
        kv("extract.min_column_mass", self.extract.min_column_mass.to_string());
        kv("extract.overlay", self.overlay.to_string());
        kv("eval.mm_per_px", self.eval.mm_per_px.to_string());
        kv(
            "eval.pairs",
            self.eval
                .pairs
                .iter()
                .map(|p| format!("{}:{}:{}", p.label, p.a, p.b))
                .collect::<Vec<_>>()
                .join("; "),
        );
        kv(
            "eval.frames",
            match self.eval.frames {
                FrameSelection::Test => "test",
                FrameSelection::All => "all",
            }
            .into(),
        );
        kv("sweep.axis", self.sweep.axis.name().into());
        kv("sweep.values", join(&self.sweep.values));
        o
    }
}

fn train_fields(t: &TrainConfig) -> Vec<(&'static str, String)> {
    vec![
        ("epochs", t.epochs.to_string()),
        ("batch_size", t.batch_size.to_string()),
        ("learning_rate", t.learning_rate.to_string()),
        ("initial_momentum", t.initial_momentum.to_string()),
        ("momentum", t.momentum.to_string()),
        ("momentum_switch_epoch", t.momentum_switch_epoch.to_string()),
        ("weight_decay", t.weight_decay.to_string()),
        ("init_sigma", t.init_sigma.to_string()),
    ]
}

fn set_train(t: &mut TrainConfig, field: &str, v: &str) -> std::result::Result<(), String> {
    match field {
        "epochs" => t.epochs = num(v)?,
        "batch_size" => t.batch_size = num(v)?,
        "learning_rate" => t.learning_rate = real(v)?,
        "initial_momentum" => t.initial_momentum = real(v)?,
        "momentum" => t.momentum = real(v)?,
        "momentum_switch_epoch" => t.momentum_switch_epoch = num(v)?,
        "weight_decay" => t.weight_decay = real(v)?,
        "init_sigma" => t.init_sigma = real(v)?,
        _ => return Err(format!("unknown training field {field:?}")),
    }
    Ok(())
}

fn join(v: &[usize]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",")
}

fn num<T: std::str::FromStr>(v: &str) -> std::result::Result<T, String> {
    v.parse().map_err(|_| format!("expected a non-negative integer, got {v:?}"))
}

fn real(v: &str) -> std::result::Result<f64, String> {
    match v.parse::<f64>() {
        Ok(x) if x.is_finite() => Ok(x),
        _ => Err(format!("expected a finite number, got {v:?}")),
    }
}

fn flag(v: &str) -> std::result::Result<bool, String> {
    match v {
        "true" => Ok(true),
        "false" => Ok(false),
        _ => Err(format!("expected true or false, got {v:?}")),
    }
}

fn text(v: &str) -> std::result::Result<&str, String> {
    if v.is_empty() {
        Err("value must not be empty".into())
    } else {
        Ok(v)
    }
}

fn opt_path(v: &str) -> Option<PathBuf> {
    (!v.is_empty()).then(|| PathBuf::from(v))
}

fn list(v: &str) -> std::result::Result<Vec<usize>, String> {
    let items = v.split(',').map(|s| num(s.trim())).collect::<std::result::Result<Vec<usize>, _>>()?;
    if items.is_empty() {
        return Err("empty list".into());
    }
    Ok(items)
}

fn parse_roi(v: &str) -> std::result::Result<Option<Rect>, String> {
    if v == "full" {
        return Ok(None);
    }
    let parts = list(v)?;
    match parts[..] {
        [x, y, width, height] => Ok(Some(Rect { x, y, width, height })),
        _ => Err(format!("roi must be `full` or `x,y,width,height`, got {v:?}")),
    }
}

/// `label:a:b` entries separated by `;`.
fn parse_pairs(v: &str) -> std::result::Result<Vec<PairDef>, String> {
    v.split(';')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|item| {
            let parts: Vec<&str> = item.split(':').map(str::trim).collect();
            match parts[..] {
                [label, a, b] if !label.is_empty() && !a.is_empty() && !b.is_empty() => Ok(PairDef {
                    label: label.into(),
                    a: a.into(),
                    b: b.into(),
                }),
                _ => Err(format!("pair must be `label:a:b`, got {item:?}")),
            }
        })
        .collect()
}
