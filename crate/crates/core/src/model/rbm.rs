use crate::error::{Error, Result};
use crate::numerics::{rms_diff, sample_bernoulli, sigmoid, Matrix, RandomStream};

/// One restricted Boltzmann machine layer.
///
/// `weights` is `n_hidden × n_visible`; the same matrix drives both
/// conditionals (`W` upwards, `Wᵀ` downwards).
#[derive(Debug, Clone, PartialEq)]
pub struct Rbm {
    weights: Matrix,
    hidden_bias: Vec<f64>,
    visible_bias: Vec<f64>,
}

impl Rbm {
    pub fn new(weights: Matrix, hidden_bias: Vec<f64>, visible_bias: Vec<f64>) -> Result<Self> {
        if hidden_bias.len() != weights.rows() || visible_bias.len() != weights.cols() {
            return Err(Error::domain(format!(
                "rbm biases ({}, {}) do not match weights {}x{}",
                hidden_bias.len(),
                visible_bias.len(),
                weights.rows(),
                weights.cols()
            )));
        }
        let rbm = Self {
            weights,
            hidden_bias,
            visible_bias,
        };
        if !rbm.is_finite() {
            return Err(Error::NonFinite("rbm parameters".into()));
        }
        Ok(rbm)
    }

    pub fn zeros(n_visible: usize, n_hidden: usize) -> Self {
        Self {
            weights: Matrix::zeros(n_hidden, n_visible),
            hidden_bias: vec![0.0; n_hidden],
            visible_bias: vec![0.0; n_visible],
        }
    }

    pub fn n_visible(&self) -> usize {
        self.weights.cols()
    }

    pub fn n_hidden(&self) -> usize {
        self.weights.rows()
    }

    pub fn weights(&self) -> &Matrix {
        &self.weights
    }

    pub fn weights_mut(&mut self) -> &mut Matrix {
        &mut self.weights
    }

    pub fn hidden_bias(&self) -> &[f64] {
        &self.hidden_bias
    }

    pub fn hidden_bias_mut(&mut self) -> &mut [f64] {
        &mut self.hidden_bias
    }

    pub fn visible_bias(&self) -> &[f64] {
        &self.visible_bias
    }

    pub fn visible_bias_mut(&mut self) -> &mut [f64] {
        &mut self.visible_bias
    }

    pub fn is_finite(&self) -> bool {
        self.weights.is_finite()
            && self.hidden_bias.iter().all(|x| x.is_finite())
            && self.visible_bias.iter().all(|x| x.is_finite())
    }

    /// `p_j = sigmoid(W_j · v + b_j)`.
    pub fn hidden_probs(&self, v: &[f64]) -> Result<Vec<f64>> {
        if v.len() != self.n_visible() {
            return Err(Error::domain(format!(
                "visible vector length {} != {}",
                v.len(),
                self.n_visible()
            )));
        }
        Ok(self
            .weights
            .row_iter()
            .zip(&self.hidden_bias)
            .map(|(w, &b)| {
                let mut s = 0.0;
                for (wi, vi) in w.iter().zip(v) {
                    s += wi * vi;
                }
                sigmoid(s + b)
            })
            .collect())
    }

    /// `q_i = sigmoid(Wᵀ_i · h + c_i)`.
    pub fn visible_probs(&self, h: &[f64]) -> Result<Vec<f64>> {
        if h.len() != self.n_hidden() {
            return Err(Error::domain(format!(
                "hidden vector length {} != {}",
                h.len(),
                self.n_hidden()
            )));
        }
        let mut acc = vec![0.0; self.n_visible()];
        for (w, &hj) in self.weights.row_iter().zip(h) {
            for (a, wi) in acc.iter_mut().zip(w) {
                *a += hj * wi;
            }
        }
        Ok(acc
            .into_iter()
            .zip(&self.visible_bias)
            .map(|(s, &c)| sigmoid(s + c))
            .collect())
    }

    /// Row-wise [`Rbm::hidden_probs`]; bit-identical to the per-vector form.
    pub fn hidden_probs_batch(&self, v: &Matrix) -> Result<Matrix> {
        let mut z = self.hidden_logits_batch(v)?;
        z.map_inplace(sigmoid);
        Ok(z)
    }

    pub(crate) fn hidden_logits_batch(&self, v: &Matrix) -> Result<Matrix> {
        if v.cols() != self.n_visible() {
            return Err(Error::domain(format!(
                "batch has {} columns, rbm has {} visible units",
                v.cols(),
                self.n_visible()
            )));
        }
        let mut z = v.matmul_transposed(&self.weights)?;
        z.add_row_vector(&self.hidden_bias);
        Ok(z)
    }

    /// Row-wise [`Rbm::visible_probs`]; bit-identical to the per-vector form.
    pub fn visible_probs_batch(&self, h: &Matrix) -> Result<Matrix> {
        if h.cols() != self.n_hidden() {
            return Err(Error::domain(format!(
                "batch has {} columns, rbm has {} hidden units",
                h.cols(),
                self.n_hidden()
            )));
        }
        let mut z = h.matmul(&self.weights)?;
        z.add_row_vector(&self.visible_bias);
        z.map_inplace(sigmoid);
        Ok(z)
    }

    /// Up-down pass `visible_probs(hidden_probs(v))`.
    pub fn reconstruct_batch(&self, v: &Matrix, clamp: Option<usize>) -> Result<Matrix> {
        let mut r = self.visible_probs_batch(&self.hidden_probs_batch(v)?)?;
        if let Some(c) = clamp {
            clamp_column(&mut r, c);
        }
        Ok(r)
    }
}

pub(crate) fn clamp_column(m: &mut Matrix, col: usize) {
    for r in 0..m.rows() {
        m.set(r, col, 1.0);
    }
}

/// Gaussian `N(0, sigma²)` weights drawn row-major, zero biases.
pub fn init_rbm(n_visible: usize, n_hidden: usize, init_sigma: f64, rng: &mut RandomStream) -> Result<Rbm> {
    if n_visible == 0 || n_hidden == 0 {
        return Err(Error::domain("rbm dimensions must be positive"));
    }
    if !(init_sigma >= 0.0) {
        return Err(Error::domain(format!("init_sigma must be >= 0, got {init_sigma}")));
    }
    // `+ 0.0` turns a signed zero into +0.0
    let weights = Matrix::from_fn(n_hidden, n_visible, |_, _| init_sigma * rng.standard_normal() + 0.0);
    Rbm::new(weights, vec![0.0; n_hidden], vec![0.0; n_visible])
}

/// Momentum state carried between CD steps, in gradient units.
#[derive(Debug, Clone, PartialEq)]
pub struct Velocity {
    pub weights: Matrix,
    pub hidden_bias: Vec<f64>,
    pub visible_bias: Vec<f64>,
}

impl Velocity {
    pub fn zeros_like(rbm: &Rbm) -> Self {
        Self {
            weights: Matrix::zeros(rbm.n_hidden(), rbm.n_visible()),
            hidden_bias: vec![0.0; rbm.n_hidden()],
            visible_bias: vec![0.0; rbm.n_visible()],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepParams {
    pub learning_rate: f64,
    pub momentum: f64,
    pub weight_decay: f64,
    /// Visible component held at 1.0 in every reconstruction.
    pub clamp_visible: Option<usize>,
}

/// One contrastive-divergence (CD-1) update on a mini-batch.
///
/// Positive phase: `p = P(h|v)`, `h ~ Bernoulli(p)` (draws row-major).
/// Negative phase: `v' = P(v|h)` kept as probabilities, `p' = P(h|v')`.
/// With `g = (vᵀp − v'ᵀp')/B − λW`, the velocity becomes `μ·vel + g` and the
/// weights move by `lr · vel`; biases follow without decay. For a constant
/// learning rate this is the usual `ΔW = lr·g + μ·ΔW_prev` recurrence.
///
/// Returns the mean per-example RMS between `v` and `v'`.
pub fn cd1_step(
    rbm: &mut Rbm,
    velocity: &mut Velocity,
    batch: &Matrix,
    params: &StepParams,
    rng: &mut RandomStream,
) -> Result<f64> {
    if batch.cols() != rbm.n_visible() || batch.rows() == 0 {
        return Err(Error::domain(format!(
            "batch {}x{} does not fit rbm with {} visible units",
            batch.rows(),
            batch.cols(),
            rbm.n_visible()
        )));
    }
    if velocity.weights.rows() != rbm.n_hidden() || velocity.weights.cols() != rbm.n_visible() {
        return Err(Error::domain("velocity shape does not match rbm"));
    }
    let n = batch.rows() as f64;

    let pos_probs = rbm.hidden_probs_batch(batch)?;
    let mut sample = pos_probs.clone();
    for p in sample.data_mut() {
        *p = if sample_bernoulli(*p, rng)? { 1.0 } else { 0.0 };
    }
    let mut recon = rbm.visible_probs_batch(&sample)?;
    if let Some(c) = params.clamp_visible {
        clamp_column(&mut recon, c);
    }
    let neg_probs = rbm.hidden_probs_batch(&recon)?;

    let pos_stats = pos_probs.transposed_matmul(batch)?;
    let neg_stats = neg_probs.transposed_matmul(&recon)?;

    let (lr, mu, decay) = (params.learning_rate, params.momentum, params.weight_decay);
    let w = rbm.weights.data_mut();
    let vel = velocity.weights.data_mut();
    for (((wi, vi), &ps), &ns) in w.iter_mut().zip(vel).zip(pos_stats.data()).zip(neg_stats.data()) {
        let g = (ps - ns) / n - decay * *wi;
        *vi = mu * *vi + g;
        *wi += lr * *vi;
    }

    let pos_h = pos_probs.column_means();
    let neg_h = neg_probs.column_means();
    for (((b, v), p), q) in rbm.hidden_bias.iter_mut().zip(&mut velocity.hidden_bias).zip(&pos_h).zip(&neg_h) {
        *v = mu * *v + (p - q);
        *b += lr * *v;
    }
    let pos_v = batch.column_means();
    let neg_v = recon.column_means();
    for (((b, v), p), q) in rbm.visible_bias.iter_mut().zip(&mut velocity.visible_bias).zip(&pos_v).zip(&neg_v) {
        *v = mu * *v + (p - q);
        *b += lr * *v;
    }

    let mut total = 0.0;
    for (a, b) in batch.row_iter().zip(recon.row_iter()) {
        total += rms_diff(a, b)?;
    }
    Ok(total / n)
}
