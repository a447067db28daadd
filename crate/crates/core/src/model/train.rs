use std::time::Instant;

use super::rbm::{cd1_step, init_rbm, Rbm, StepParams, Velocity};
use crate::error::{Error, Result};
use crate::numerics::{Matrix, RandomStream};

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    /// Momentum for epochs before `momentum_switch_epoch`.
    pub initial_momentum: f64,
    pub momentum: f64,
    pub momentum_switch_epoch: usize,
    pub weight_decay: f64,
    pub init_sigma: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 20,
            batch_size: 100,
            learning_rate: 0.1,
            initial_momentum: 0.5,
            momentum: 0.9,
            momentum_switch_epoch: 5,
            weight_decay: 0.0002,
            init_sigma: 0.01,
            seed: 42,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.batch_size == 0 {
            return Err(Error::domain("batch_size must be at least 1"));
        }
        if !(self.learning_rate >= 0.0) {
            return Err(Error::domain(format!("learning_rate must be >= 0, got {}", self.learning_rate)));
        }
        for m in [self.initial_momentum, self.momentum] {
            if !(0.0..1.0).contains(&m) {
                return Err(Error::domain(format!("momentum {m} outside [0, 1)")));
            }
        }
        if !(self.weight_decay >= 0.0) {
            return Err(Error::domain(format!("weight_decay must be >= 0, got {}", self.weight_decay)));
        }
        if !(self.init_sigma >= 0.0) {
            return Err(Error::domain(format!("init_sigma must be >= 0, got {}", self.init_sigma)));
        }
        Ok(())
    }

    /// Momentum in effect during `epoch` (0-based).
    pub fn momentum_at(&self, epoch: usize) -> f64 {
        if epoch < self.momentum_switch_epoch {
            self.initial_momentum
        } else {
            self.momentum
        }
    }

    pub(crate) fn step_params(&self, epoch: usize, clamp_visible: Option<usize>) -> StepParams {
        StepParams {
            learning_rate: self.learning_rate,
            momentum: self.momentum_at(epoch),
            weight_decay: self.weight_decay,
            clamp_visible,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochRecord {
    /// 1-based epoch number.
    pub epoch: usize,
    /// Training objective: mean reconstruction RMS for RBM layers, mean
    /// cross-entropy for the translational layer.
    pub train: f64,
    pub validation: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct TrainReport {
    /// Phase name, e.g. `layer1` or `trbm`.
    pub phase: String,
    pub records: Vec<EpochRecord>,
    pub seconds: f64,
}

// wall time is excluded so reports of identical runs compare equal
impl PartialEq for TrainReport {
    fn eq(&self, other: &Self) -> bool {
        self.phase == other.phase && self.records == other.records
    }
}

impl TrainReport {
    pub fn final_validation(&self) -> Option<f64> {
        self.records.last().and_then(|r| r.validation)
    }

    pub fn final_train(&self) -> Option<f64> {
        self.records.last().map(|r| r.train)
    }

    /// `phase,epoch,train,validation` rows.
    pub fn to_csv_rows(&self) -> String {
        self.records
            .iter()
            .map(|r| {
                let val = r.validation.map(|v| v.to_string()).unwrap_or_default();
                format!("{},{},{},{}\n", self.phase, r.epoch, r.train, val)
            })
            .collect()
    }
}

pub const REPORT_CSV_HEADER: &str = "phase,epoch,train,validation\n";

/// Receives each finished epoch (progress output).
pub trait EpochObserver {
    fn epoch_done(&mut self, phase: &str, record: &EpochRecord);
}

impl<F: FnMut(&str, &EpochRecord)> EpochObserver for F {
    fn epoch_done(&mut self, phase: &str, record: &EpochRecord) {
        self(phase, record)
    }
}

/// Observer that ignores everything.
pub struct Silent;

impl EpochObserver for Silent {
    fn epoch_done(&mut self, _: &str, _: &EpochRecord) {}
}

/// Batch index ranges over a shuffled order; the last batch may be short.
pub(crate) fn batches(order: &[usize], batch_size: usize) -> impl Iterator<Item = &[usize]> {
    order.chunks(batch_size)
}

/// Per-layer training options that are not hyperparameters.
pub struct LayerOptions<'a> {
    pub phase: &'a str,
    /// Visible component clamped to 1.0 in reconstructions.
    pub clamp_visible: Option<usize>,
    /// Called after every epoch with the current layer; returns the
    /// validation RMS.
    pub validator: Option<&'a mut dyn FnMut(&Rbm) -> Result<f64>>,
}

impl Default for LayerOptions<'_> {
    fn default() -> Self {
        Self {
            phase: "layer1",
            clamp_visible: None,
            validator: None,
        }
    }
}

/// Trains one RBM with CD-1 for `cfg.epochs` epochs of
/// `ceil(N / batch_size)` steps, reshuffling the examples each epoch.
///
/// Draw order from the `cfg.seed` stream: initial weights, then per epoch
/// the shuffle followed by each step's hidden samples.
pub fn train_rbm(
    data: &Matrix,
    n_hidden: usize,
    cfg: &TrainConfig,
    opts: LayerOptions<'_>,
    observer: &mut dyn EpochObserver,
) -> Result<(Rbm, TrainReport)> {
    cfg.validate()?;
    if data.rows() == 0 || data.cols() == 0 {
        return Err(Error::domain("cannot train on an empty dataset"));
    }
    let start = Instant::now();
    let mut rng = RandomStream::new(cfg.seed);
    let mut rbm = init_rbm(data.cols(), n_hidden, cfg.init_sigma, &mut rng)?;
    let mut velocity = Velocity::zeros_like(&rbm);
    let mut order: Vec<usize> = (0..data.rows()).collect();
    let mut records = Vec::with_capacity(cfg.epochs);
    let LayerOptions {
        phase,
        clamp_visible,
        mut validator,
    } = opts;

    for epoch in 0..cfg.epochs {
        rng.shuffle(&mut order);
        let params = cfg.step_params(epoch, clamp_visible);
        let mut weighted = 0.0;
        for idx in batches(&order, cfg.batch_size) {
            let batch = data.select_rows(idx);
            weighted += cd1_step(&mut rbm, &mut velocity, &batch, &params, &mut rng)? * idx.len() as f64;
        }
        let train = weighted / data.rows() as f64;
        if !train.is_finite() || !rbm.is_finite() {
            return Err(Error::NonFinite(format!("{phase} epoch {}", epoch + 1)));
        }
        let validation = match validator.as_mut() {
            Some(v) => Some(v(&rbm)?),
            None => None,
        };
        let record = EpochRecord {
            epoch: epoch + 1,
            train,
            validation,
        };
        observer.epoch_done(phase, &record);
        records.push(record);
    }
    Ok((
        rbm,
        TrainReport {
            phase: phase.to_string(),
            records,
            seconds: start.elapsed().as_secs_f64(),
        },
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pattern_data() -> Matrix {
        let pattern = [1.0, 0.0, 1.0, 1.0, 0.0, 0.0, 1.0, 0.0];
        Matrix::from_rows(&vec![pattern.to_vec(); 200]).unwrap()
    }

    #[test]
    fn zero_epochs_returns_initialisation() {
        let cfg = TrainConfig { epochs: 0, ..TrainConfig::default() };
        let (rbm, report) = train_rbm(&pattern_data(), 4, &cfg, LayerOptions::default(), &mut Silent).unwrap();
        let init = init_rbm(8, 4, cfg.init_sigma, &mut RandomStream::new(cfg.seed)).unwrap();
        assert_eq!(rbm, init);
        assert!(report.records.is_empty());
    }

    #[test]
    fn learns_a_repeated_pattern() {
        let cfg = TrainConfig { epochs: 200, batch_size: 10, ..TrainConfig::default() };
        let (rbm, report) = train_rbm(&pattern_data(), 4, &cfg, LayerOptions::default(), &mut Silent).unwrap();
        let final_rms = report.final_train().unwrap();
        assert!(final_rms < 0.1, "final rms {final_rms}");
        let recon = rbm.reconstruct_batch(&pattern_data().select_rows(&[0]), None).unwrap();
        let err = crate::numerics::rms_diff(recon.row(0), pattern_data().row(0)).unwrap();
        assert!(err < 0.1, "{err}");
    }

    #[test]
    fn same_seed_same_report() {
        let cfg = TrainConfig { epochs: 5, batch_size: 7, ..TrainConfig::default() };
        let run = || train_rbm(&pattern_data(), 3, &cfg, LayerOptions::default(), &mut Silent).unwrap();
        let (a, ra) = run();
        let (b, rb) = run();
        assert_eq!(a, b);
        assert_eq!(ra, rb);
        assert_eq!(ra.records.len(), 5);
    }

    #[test]
    fn empty_data_is_rejected() {
        let r = train_rbm(&Matrix::zeros(0, 4), 2, &TrainConfig::default(), LayerOptions::default(), &mut Silent);
        assert!(r.is_err());
    }

    #[test]
    fn validator_and_observer_run_each_epoch() {
        let cfg = TrainConfig { epochs: 3, batch_size: 50, ..TrainConfig::default() };
        let mut calls = 0;
        let mut validator = |_: &Rbm| -> Result<f64> {
            calls += 1;
            Ok(0.25)
        };
        let mut seen = Vec::new();
        let mut obs = |phase: &str, r: &EpochRecord| seen.push((phase.to_string(), r.epoch));
        let opts = LayerOptions { phase: "layer2", clamp_visible: None, validator: Some(&mut validator) };
        let (_, report) = train_rbm(&pattern_data(), 3, &cfg, opts, &mut obs).unwrap();
        assert_eq!(calls, 3);
        assert_eq!(report.final_validation(), Some(0.25));
        assert_eq!(seen, vec![("layer2".into(), 1), ("layer2".into(), 2), ("layer2".into(), 3)]);
    }

    #[test]
    fn momentum_schedule() {
        let cfg = TrainConfig::default();
        assert_eq!(cfg.momentum_at(0), 0.5);
        assert_eq!(cfg.momentum_at(4), 0.5);
        assert_eq!(cfg.momentum_at(5), 0.9);
    }
}
