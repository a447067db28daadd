//! Translational first layer.
//!
//! The translational RBM sees only the ultrasound half (plus the constant
//! component) and is fitted so its hidden probabilities match those the joint
//! bottom layer produces from the full joint vector. Upper layers are reused
//! unchanged.

use std::time::Instant;

use super::autoencoder::{mean_rms, us_input_len, DeepAutoencoder, FirstLayerMode};
use super::rbm::{init_rbm, Rbm};
use super::train::{batches, EpochObserver, EpochRecord, TrainConfig, TrainReport};
use crate::error::{Error, Result};
use crate::numerics::{derive_seed, Matrix, RandomStream};

/// Stream tag separating the translational layer's draws from the stack's.
const TRBM_STREAM: u64 = 0x7452_424d;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TrbmInit {
    /// Start from the joint bottom layer's ultrasound and constant columns.
    FromJoint,
    /// Gaussian weights with `init_sigma`, zero biases.
    Random,
}

/// Mean binary cross-entropy between `sigmoid(logits)` and soft targets,
/// via `softplus(z) - t·z`.
pub fn cross_entropy(logits: &Matrix, targets: &Matrix) -> f64 {
    let total: f64 = logits
        .data()
        .iter()
        .zip(targets.data())
        .map(|(&z, &t)| z.max(0.0) + (-z.abs()).exp().ln_1p() - t * z)
        .sum();
    total / logits.data().len() as f64
}

/// Mean Bernoulli entropy of target probabilities: the lowest cross-entropy
/// any predictor can reach against them.
pub fn mean_entropy(targets: &Matrix) -> f64 {
    let h = |t: f64| {
        let a = if t > 0.0 { -t * t.ln() } else { 0.0 };
        let b = if t < 1.0 { -(1.0 - t) * (1.0 - t).ln() } else { 0.0 };
        a + b
    };
    targets.data().iter().map(|&t| h(t)).sum::<f64>() / targets.data().len() as f64
}

/// Ultrasound columns and constant column of the joint bottom layer.
fn trbm_from_joint(bottom: &Rbm) -> Result<Rbm> {
    let nv = bottom.n_visible();
    let area = (nv - 1) / 2;
    let w = bottom.weights();
    let weights = Matrix::from_fn(bottom.n_hidden(), area + 1, |r, c| {
        if c < area {
            w.get(r, c)
        } else {
            w.get(r, nv - 1)
        }
    });
    let mut vb = bottom.visible_bias()[..area].to_vec();
    vb.push(bottom.visible_bias()[nv - 1]);
    Rbm::new(weights, bottom.hidden_bias().to_vec(), vb)
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrbmReport {
    pub report: TrainReport,
    /// Cross-entropy before the first update.
    pub initial_loss: f64,
    /// Lowest reachable cross-entropy for these targets.
    pub target_entropy: f64,
}

/// Fits the translational layer by mini-batch gradient descent with momentum
/// on the mean cross-entropy against the joint layer's hidden probabilities.
///
/// `us` rows are the ultrasound inputs aligned with the `joint` rows. The
/// per-epoch record carries the full-dataset loss after the epoch and, with
/// `validation`, the RMS of the translational autoencoder on those joint rows.
pub fn train_trbm(
    joint_model: &DeepAutoencoder,
    us: &Matrix,
    joint: &Matrix,
    cfg: &TrainConfig,
    init: TrbmInit,
    validation: Option<&Matrix>,
    observer: &mut dyn EpochObserver,
) -> Result<(DeepAutoencoder, TrbmReport)> {
    cfg.validate()?;
    if joint_model.mode() != FirstLayerMode::Joint {
        return Err(Error::Mode("translational training needs a joint-mode model".into()));
    }
    let bottom = &joint_model.layers()[0];
    if joint.rows() == 0 || us.rows() != joint.rows() {
        return Err(Error::domain(format!(
            "ultrasound ({}) and joint ({}) datasets are not aligned",
            us.rows(),
            joint.rows()
        )));
    }
    if joint.cols() != bottom.n_visible() || us.cols() != us_input_len(bottom.n_visible()) {
        return Err(Error::domain("dataset widths do not match the joint model"));
    }
    let start = Instant::now();
    let targets = bottom.hidden_probs_batch(joint)?;
    let mut rng = RandomStream::new(derive_seed(cfg.seed, TRBM_STREAM));
    let mut trbm = match init {
        TrbmInit::FromJoint => trbm_from_joint(bottom)?,
        TrbmInit::Random => init_rbm(us.cols(), bottom.n_hidden(), cfg.init_sigma, &mut rng)?,
    };
    let mut vel_w = Matrix::zeros(trbm.n_hidden(), trbm.n_visible());
    let mut vel_b = vec![0.0; trbm.n_hidden()];
    let initial_loss = cross_entropy(&trbm.hidden_logits_batch(us)?, &targets);
    let target_entropy = mean_entropy(&targets);

    let mut order: Vec<usize> = (0..us.rows()).collect();
    let mut records = Vec::with_capacity(cfg.epochs);
    for epoch in 0..cfg.epochs {
        rng.shuffle(&mut order);
        let (lr, mu, decay) = (cfg.learning_rate, cfg.momentum_at(epoch), cfg.weight_decay);
        for idx in batches(&order, cfg.batch_size) {
            let x = us.select_rows(idx);
            let t = targets.select_rows(idx);
            let n = idx.len() as f64;
            // d(cross-entropy)/d(logit) = y - t
            let mut err = trbm.hidden_probs_batch(&x)?;
            for (e, &tv) in err.data_mut().iter_mut().zip(t.data()) {
                *e -= tv;
            }
            let grad = err.transposed_matmul(&x)?;
            let w = trbm.weights_mut().data_mut();
            for ((wi, vi), &g) in w.iter_mut().zip(vel_w.data_mut()).zip(grad.data()) {
                *vi = mu * *vi + g / n + decay * *wi;
                *wi -= lr * *vi;
            }
            let gb = err.column_means();
            for ((b, v), g) in trbm.hidden_bias_mut().iter_mut().zip(&mut vel_b).zip(gb) {
                *v = mu * *v + g;
                *b -= lr * *v;
            }
        }
        let loss = cross_entropy(&trbm.hidden_logits_batch(us)?, &targets);
        if !loss.is_finite() || !trbm.is_finite() {
            return Err(Error::NonFinite(format!("trbm epoch {}", epoch + 1)));
        }
        let validation = match validation {
            Some(v) => {
                let model = joint_model.with_trbm(trbm.clone())?;
                let recon = model.autoencode_batch(&super::autoencoder::us_inputs(v))?;
                Some(mean_rms(v, &recon)?)
            }
            None => None,
        };
        let record = EpochRecord {
            epoch: epoch + 1,
            train: loss,
            validation,
        };
        observer.epoch_done("trbm", &record);
        records.push(record);
    }
    let model = joint_model.with_trbm(trbm)?;
    Ok((
        model,
        TrbmReport {
            report: TrainReport {
                phase: "trbm".into(),
                records,
                seconds: start.elapsed().as_secs_f64(),
            },
            initial_loss,
            target_entropy,
        },
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::autoencoder::{train_stack, us_inputs};
    use crate::model::train::Silent;

    const AREA: usize = 6;

    fn joint_rows(n: usize, seed: u64) -> Matrix {
        let mut rng = RandomStream::new(seed);
        Matrix::from_fn(n, 2 * AREA + 1, |_, c| {
            if c == 2 * AREA {
                1.0
            } else if c < AREA {
                rng.next_f64()
            } else {
                (rng.next_f64() < 0.3) as u8 as f64
            }
        })
    }

    /// Joint model whose bottom layer ignores the contour half.
    fn contour_blind_model(seed: u64) -> DeepAutoencoder {
        let mut rng = RandomStream::new(seed);
        let nv = 2 * AREA + 1;
        let w = Matrix::from_fn(4, nv, |_, c| {
            if (AREA..2 * AREA).contains(&c) {
                0.0
            } else {
                rng.uniform(-2.0, 2.0)
            }
        });
        let hb = (0..4).map(|_| rng.uniform(-1.0, 1.0)).collect();
        let bottom = Rbm::new(w, hb, vec![0.0; nv]).unwrap();
        let top = init_rbm(4, 3, 0.5, &mut rng).unwrap();
        DeepAutoencoder::new(vec![bottom, top], None).unwrap()
    }

    #[test]
    fn cross_entropy_matches_direct_formula() {
        let z = Matrix::new(1, 3, vec![-2.0, 0.0, 3.0]).unwrap();
        let t = Matrix::new(1, 3, vec![0.1, 0.5, 0.9]).unwrap();
        let direct: f64 = z
            .data()
            .iter()
            .zip(t.data())
            .map(|(&z, &t)| {
                let y = crate::numerics::sigmoid(z);
                -(t * y.ln() + (1.0 - t) * (1.0 - y).ln())
            })
            .sum::<f64>()
            / 3.0;
        assert!((cross_entropy(&z, &t) - direct).abs() < 1e-14);
    }

    #[test]
    fn contour_blind_joint_layer_is_reachable() {
        let model = contour_blind_model(3);
        let joint = joint_rows(200, 4);
        let us = us_inputs(&joint);
        let cfg = TrainConfig {
            epochs: 400,
            batch_size: 20,
            learning_rate: 0.5,
            initial_momentum: 0.5,
            momentum: 0.9,
            momentum_switch_epoch: 5,
            weight_decay: 0.0,
            init_sigma: 0.01,
            seed: 8,
        };
        let (_, report) = train_trbm(&model, &us, &joint, &cfg, TrbmInit::Random, None, &mut Silent).unwrap();
        let final_loss = report.report.final_train().unwrap();
        assert!(report.initial_loss > report.target_entropy + 1e-2);
        assert!(
            final_loss - report.target_entropy <= 1e-3,
            "loss {final_loss} entropy {}",
            report.target_entropy
        );
    }

    #[test]
    fn from_joint_init_is_exact_for_contour_blind_layer() {
        let model = contour_blind_model(5);
        let joint = joint_rows(50, 6);
        let cfg = TrainConfig { epochs: 0, ..TrainConfig::default() };
        let (_, r) = train_trbm(&model, &us_inputs(&joint), &joint, &cfg, TrbmInit::FromJoint, None, &mut Silent).unwrap();
        assert!((r.initial_loss - r.target_entropy).abs() < 1e-12);
    }

    #[test]
    fn zero_learning_rate_leaves_trbm_unchanged() {
        let model = contour_blind_model(9);
        let joint = joint_rows(30, 10);
        let us = us_inputs(&joint);
        let cfg = TrainConfig { epochs: 3, batch_size: 7, learning_rate: 0.0, ..TrainConfig::default() };
        let zero = TrainConfig { epochs: 0, ..cfg.clone() };
        for init in [TrbmInit::FromJoint, TrbmInit::Random] {
            let (a, _) = train_trbm(&model, &us, &joint, &cfg, init, None, &mut Silent).unwrap();
            let (b, _) = train_trbm(&model, &us, &joint, &zero, init, None, &mut Silent).unwrap();
            assert_eq!(a.trbm(), b.trbm());
        }
    }

    #[test]
    fn upper_layers_are_frozen() {
        let joint = joint_rows(60, 11);
        let cfg = TrainConfig { epochs: 3, batch_size: 10, ..TrainConfig::default() };
        let (model, _) = train_stack(&joint, None, &[8, 5, 4], &cfg, &mut Silent).unwrap();
        let (t, _) = train_trbm(&model, &us_inputs(&joint), &joint, &cfg, TrbmInit::FromJoint, Some(&joint), &mut Silent).unwrap();
        assert_eq!(t.mode(), FirstLayerMode::Translational);
        assert_eq!(t.layers(), model.layers());
    }

    #[test]
    fn loss_decreases_over_epochs() {
        let joint = joint_rows(100, 12);
        let cfg = TrainConfig { epochs: 10, batch_size: 10, ..TrainConfig::default() };
        let (model, _) = train_stack(&joint, None, &[10], &cfg, &mut Silent).unwrap();
        let (_, r) = train_trbm(&model, &us_inputs(&joint), &joint, &cfg, TrbmInit::FromJoint, None, &mut Silent).unwrap();
        let mut prev = r.initial_loss;
        for rec in &r.report.records {
            assert!(rec.train <= prev, "{} > {prev}", rec.train);
            prev = rec.train;
        }
    }

    #[test]
    fn rejects_bad_inputs() {
        let model = contour_blind_model(1);
        let joint = joint_rows(10, 2);
        let us = us_inputs(&joint);
        let cfg = TrainConfig::default();
        assert!(train_trbm(&model, &us.select_rows(&[0, 1]), &joint, &cfg, TrbmInit::FromJoint, None, &mut Silent).is_err());
        assert!(train_trbm(&model, &joint, &joint, &cfg, TrbmInit::FromJoint, None, &mut Silent).is_err());
        let (t, _) = train_trbm(&model, &us, &joint, &TrainConfig { epochs: 0, ..cfg.clone() }, TrbmInit::FromJoint, None, &mut Silent).unwrap();
        assert!(matches!(
            train_trbm(&t, &us, &joint, &cfg, TrbmInit::FromJoint, None, &mut Silent),
            Err(Error::Mode(_))
        ));
    }
}
