use super::rbm::{clamp_column, Rbm};
use super::train::{train_rbm, EpochObserver, LayerOptions, TrainConfig, TrainReport};
use crate::error::{Error, Result};
use crate::numerics::{derive_seed, rms_diff, Matrix};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FirstLayerMode {
    /// Bottom layer sees the full joint vector.
    Joint,
    /// Bottom layer replaced by the translational RBM (ultrasound only).
    Translational,
}

/// Greedily trained RBM stack unrolled into a tied-weight autoencoder.
#[derive(Debug, Clone, PartialEq)]
pub struct DeepAutoencoder {
    layers: Vec<Rbm>,
    trbm: Option<Rbm>,
}

impl DeepAutoencoder {
    pub fn new(layers: Vec<Rbm>, trbm: Option<Rbm>) -> Result<Self> {
        let bottom = layers
            .first()
            .ok_or_else(|| Error::domain("autoencoder needs at least one layer"))?;
        for (i, pair) in layers.windows(2).enumerate() {
            if pair[0].n_hidden() != pair[1].n_visible() {
                return Err(Error::domain(format!(
                    "layer {} has {} hidden units but layer {} has {} visible units",
                    i + 1,
                    pair[0].n_hidden(),
                    i + 2,
                    pair[1].n_visible()
                )));
            }
        }
        if bottom.n_visible() % 2 == 0 {
            return Err(Error::domain(format!(
                "joint layer width {} is not 2*area + 1",
                bottom.n_visible()
            )));
        }
        if let Some(t) = &trbm {
            let expected = us_input_len(bottom.n_visible());
            if t.n_visible() != expected || t.n_hidden() != bottom.n_hidden() {
                return Err(Error::domain(format!(
                    "translational layer is {}x{}, expected {}x{}",
                    t.n_visible(),
                    t.n_hidden(),
                    expected,
                    bottom.n_hidden()
                )));
            }
        }
        Ok(Self { layers, trbm })
    }

    pub fn mode(&self) -> FirstLayerMode {
        if self.trbm.is_some() {
            FirstLayerMode::Translational
        } else {
            FirstLayerMode::Joint
        }
    }

    pub fn layers(&self) -> &[Rbm] {
        &self.layers
    }

    pub fn trbm(&self) -> Option<&Rbm> {
        self.trbm.as_ref()
    }

    pub fn joint_len(&self) -> usize {
        self.layers[0].n_visible()
    }

    /// Input length expected by [`DeepAutoencoder::autoencode`].
    pub fn input_len(&self) -> usize {
        match &self.trbm {
            Some(t) => t.n_visible(),
            None => self.joint_len(),
        }
    }

    pub fn with_trbm(&self, trbm: Rbm) -> Result<Self> {
        Self::new(self.layers.clone(), Some(trbm))
    }

    pub fn without_trbm(&self) -> Self {
        Self {
            layers: self.layers.clone(),
            trbm: None,
        }
    }

    /// Top-level code for a batch of inputs (probabilities, no sampling).
    pub fn encode_batch(&self, x: &Matrix) -> Result<Matrix> {
        if x.cols() != self.input_len() {
            return Err(Error::domain(format!(
                "input length {} does not match {:?} mode ({})",
                x.cols(),
                self.mode(),
                self.input_len()
            )));
        }
        let first = self.trbm.as_ref().unwrap_or(&self.layers[0]);
        let mut h = first.hidden_probs_batch(x)?;
        for layer in &self.layers[1..] {
            h = layer.hidden_probs_batch(&h)?;
        }
        Ok(h)
    }

    /// Decodes top-level codes through the transposed joint stack; the
    /// constant component of the output is held at 1.0.
    pub fn decode_batch(&self, code: &Matrix) -> Result<Matrix> {
        let mut v = code.clone();
        for layer in self.layers.iter().rev() {
            v = layer.visible_probs_batch(&v)?;
        }
        let last = v.cols() - 1;
        clamp_column(&mut v, last);
        Ok(v)
    }

    pub fn autoencode_batch(&self, x: &Matrix) -> Result<Matrix> {
        self.decode_batch(&self.encode_batch(x)?)
    }

    /// Full up-down pass for one input; output has the joint length.
    pub fn autoencode(&self, x: &[f64]) -> Result<Vec<f64>> {
        let m = Matrix::new(1, x.len(), x.to_vec())?;
        Ok(self.autoencode_batch(&m)?.into_data())
    }
}

/// Ultrasound-only input length for a joint width `2*area + 1`.
pub fn us_input_len(joint_len: usize) -> usize {
    (joint_len - 1) / 2 + 1
}

/// Ultrasound half plus the constant column of each joint row.
pub fn us_inputs(joint: &Matrix) -> Matrix {
    let area = (joint.cols() - 1) / 2;
    let last = joint.cols() - 1;
    let mut data = Vec::with_capacity(joint.rows() * (area + 1));
    for row in joint.row_iter() {
        data.extend_from_slice(&row[..area]);
        data.push(row[last]);
    }
    Matrix::new(joint.rows(), area + 1, data).expect("shape by construction")
}

/// Mean per-example RMS between each joint row and the model's
/// reconstruction of it. In translational mode the model only sees the
/// ultrasound half but is scored against the full joint row.
pub fn validation_error(model: &DeepAutoencoder, joint: &Matrix) -> Result<f64> {
    if joint.rows() == 0 {
        return Err(Error::domain("validation set is empty"));
    }
    if joint.cols() != model.joint_len() {
        return Err(Error::domain(format!(
            "validation rows have {} components, model expects {}",
            joint.cols(),
            model.joint_len()
        )));
    }
    let recon = match model.mode() {
        FirstLayerMode::Joint => model.autoencode_batch(joint)?,
        FirstLayerMode::Translational => model.autoencode_batch(&us_inputs(joint))?,
    };
    mean_rms(joint, &recon)
}

pub(crate) fn mean_rms(a: &Matrix, b: &Matrix) -> Result<f64> {
    let mut total = 0.0;
    for (x, y) in a.row_iter().zip(b.row_iter()) {
        total += rms_diff(x, y)?;
    }
    Ok(total / a.rows() as f64)
}

/// Greedy layer-wise training of a joint-mode stack.
///
/// Layer `k` trains on the hidden probabilities of layer `k-1`. The bottom
/// layer uses `cfg.seed`; layer `k > 0` uses a seed derived from it. When
/// `validation` is given, every epoch reports the RMS of a full up-down pass
/// through the layers trained so far.
pub fn train_stack(
    data: &Matrix,
    validation: Option<&Matrix>,
    layer_sizes: &[usize],
    cfg: &TrainConfig,
    observer: &mut dyn EpochObserver,
) -> Result<(DeepAutoencoder, Vec<TrainReport>)> {
    if layer_sizes.is_empty() || layer_sizes.contains(&0) {
        return Err(Error::domain("layer sizes must be nonempty and positive"));
    }
    if data.cols() % 2 == 0 {
        return Err(Error::domain(format!(
            "joint rows have {} components, expected 2*area + 1",
            data.cols()
        )));
    }
    if let Some(v) = validation {
        if v.cols() != data.cols() || v.rows() == 0 {
            return Err(Error::domain("validation set does not match training data"));
        }
    }
    let constant = data.cols() - 1;
    let mut layers: Vec<Rbm> = Vec::with_capacity(layer_sizes.len());
    let mut reports = Vec::with_capacity(layer_sizes.len());
    let mut input = data.clone();
    let mut val_input = validation.cloned();

    for (k, &n_hidden) in layer_sizes.iter().enumerate() {
        let layer_cfg = TrainConfig {
            seed: if k == 0 { cfg.seed } else { derive_seed(cfg.seed, k as u64) },
            ..cfg.clone()
        };
        let phase = format!("layer{}", k + 1);
        let below = &layers;
        let mut validate = |rbm: &Rbm| -> Result<f64> {
            let (joint, codes) = match (validation, val_input.as_ref()) {
                (Some(j), Some(c)) => (j, c),
                _ => unreachable!("validator only installed with a validation set"),
            };
            let mut v = rbm.visible_probs_batch(&rbm.hidden_probs_batch(codes)?)?;
            for layer in below.iter().rev() {
                v = layer.visible_probs_batch(&v)?;
            }
            clamp_column(&mut v, constant);
            mean_rms(joint, &v)
        };
        let opts = LayerOptions {
            phase: &phase,
            clamp_visible: (k == 0).then_some(constant),
            validator: if validation.is_some() {
                Some(&mut validate)
            } else {
                None
            },
        };
        let (rbm, report) = train_rbm(&input, n_hidden, &layer_cfg, opts, observer)?;
        input = rbm.hidden_probs_batch(&input)?;
        if let Some(v) = val_input.as_mut() {
            *v = rbm.hidden_probs_batch(v)?;
        }
        layers.push(rbm);
        reports.push(report);
    }
    Ok((DeepAutoencoder::new(layers, None)?, reports))
}
