//! Single-layer LSTM regressor trained by backpropagation through time.
//! Windows of T feature vectors map to the count one step past the window;
//! the output is a linear readout of the final hidden state. Everything is
//! plain dense arithmetic over `Vec<f64>` with a fixed accumulation order,
//! so training is bit-reproducible for a given seed.

#[allow(unused_imports)]
use num_traits::Float;

use alloc::string::String;
use alloc::vec::Vec;

use rand::Rng;

use crate::error::CoreError;
use crate::rng::seed_rng;

#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Optimizer {
    Sgd,
    Adam { beta1: f64, beta2: f64, epsilon: f64 },
}

pub const ADAM_DEFAULT: Optimizer = Optimizer::Adam { beta1: 0.9, beta2: 0.999, epsilon: 1e-8 };

#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[derive(Debug, Clone, PartialEq)]
pub struct LstmConfig {
    pub hidden: usize,
    pub epochs: usize,
    pub optimizer: Optimizer,
    pub learning_rate: f64,
    /// Global-norm gradient clip threshold.
    pub clip: f64,
    pub seed: u64,
}

impl Default for LstmConfig {
    fn default() -> Self {
        LstmConfig {
            hidden: 32,
            epochs: 30,
            optimizer: ADAM_DEFAULT,
            learning_rate: 1e-3,
            clip: 5.0,
            seed: 0,
        }
    }
}

/// Gate weights are h x (d+h) row-major over the concatenated [x_t; h_{t-1}].
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[derive(Debug, Clone, PartialEq)]
pub struct LstmParams {
    pub d: usize,
    pub h: usize,
    pub w_i: Vec<f64>,
    pub w_f: Vec<f64>,
    pub w_o: Vec<f64>,
    pub w_g: Vec<f64>,
    pub b_i: Vec<f64>,
    pub b_f: Vec<f64>,
    pub b_o: Vec<f64>,
    pub b_g: Vec<f64>,
    pub v: Vec<f64>,
    pub c: f64,
}

impl LstmParams {
    pub fn zeros(d: usize, h: usize) -> Self {
        LstmParams {
            d,
            h,
            w_i: alloc::vec![0.0; h * (d + h)],
            w_f: alloc::vec![0.0; h * (d + h)],
            w_o: alloc::vec![0.0; h * (d + h)],
            w_g: alloc::vec![0.0; h * (d + h)],
            b_i: alloc::vec![0.0; h],
            b_f: alloc::vec![0.0; h],
            b_o: alloc::vec![0.0; h],
            b_g: alloc::vec![0.0; h],
            v: alloc::vec![0.0; h],
            c: 0.0,
        }
    }

    /// Uniform(-1/sqrt(h), 1/sqrt(h)) init with the forget bias shifted +1.
    pub fn init(d: usize, h: usize, seed: u64) -> Self {
        let mut p = Self::zeros(d, h);
        let bound = 1.0 / (h as f64).sqrt();
        let mut r = seed_rng(seed);
        p.for_each_value(|v| *v = r.random_range(-bound..bound));
        for b in &mut p.b_f {
            *b += 1.0;
        }
        p
    }

    fn for_each_value(&mut self, mut f: impl FnMut(&mut f64)) {
        for block in [
            &mut self.w_i, &mut self.w_f, &mut self.w_o, &mut self.w_g,
            &mut self.b_i, &mut self.b_f, &mut self.b_o, &mut self.b_g,
            &mut self.v,
        ] {
            for v in block.iter_mut() {
                f(v);
            }
        }
        f(&mut self.c);
    }

    /// Applies `f(self_value, other_value)` over every matching parameter.
    fn zip_apply(&mut self, other: &Self, mut f: impl FnMut(&mut f64, f64)) {
        let pairs: [(&mut Vec<f64>, &Vec<f64>); 9] = [
            (&mut self.w_i, &other.w_i),
            (&mut self.w_f, &other.w_f),
            (&mut self.w_o, &other.w_o),
            (&mut self.w_g, &other.w_g),
            (&mut self.b_i, &other.b_i),
            (&mut self.b_f, &other.b_f),
            (&mut self.b_o, &other.b_o),
            (&mut self.b_g, &other.b_g),
            (&mut self.v, &other.v),
        ];
        for (a, b) in pairs {
            for (x, y) in a.iter_mut().zip(b) {
                f(x, *y);
            }
        }
        f(&mut self.c, other.c);
    }

    pub fn global_norm(&self) -> f64 {
        let mut acc = 0.0;
        let mut probe = self.clone();
        probe.zip_apply(self, |_, y| acc += y * y);
        acc.sqrt()
    }

    pub fn is_finite(&self) -> bool {
        let mut ok = true;
        let mut probe = self.clone();
        probe.zip_apply(self, |_, y| ok &= y.is_finite());
        ok
    }
}

/// Per-step activations cached by the forward pass, exposed so state-bound
/// properties can be checked from outside.
#[derive(Debug, Clone)]
pub struct LstmTrace {
    pub inputs: Vec<Vec<f64>>, // concatenated [x_t; h_{t-1}]
    pub gate_i: Vec<Vec<f64>>,
    pub gate_f: Vec<Vec<f64>>,
    pub gate_o: Vec<Vec<f64>>,
    pub gate_g: Vec<Vec<f64>>,
    pub cell: Vec<Vec<f64>>,
    pub hidden: Vec<Vec<f64>>,
}

fn sigmoid(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

fn gate(w: &[f64], b: &[f64], u: &[f64], h: usize, act: impl Fn(f64) -> f64) -> Vec<f64> {
    let dim = u.len();
    (0..h)
        .map(|r| {
            let row = &w[r * dim..(r + 1) * dim];
            let z = row.iter().zip(u).map(|(a, x)| a * x).sum::<f64>() + b[r];
            act(z)
        })
        .collect()
}

pub fn lstm_forward(params: &LstmParams, window: &[Vec<f64>]) -> (f64, LstmTrace) {
    let h = params.h;
    let mut trace = LstmTrace {
        inputs: Vec::new(),
        gate_i: Vec::new(),
        gate_f: Vec::new(),
        gate_o: Vec::new(),
        gate_g: Vec::new(),
        cell: Vec::new(),
        hidden: Vec::new(),
    };
    let mut h_prev = alloc::vec![0.0f64; h];
    let mut c_prev = alloc::vec![0.0f64; h];
    for x in window {
        let mut u = Vec::with_capacity(params.d + h);
        u.extend_from_slice(x);
        u.extend_from_slice(&h_prev);
        let gi = gate(&params.w_i, &params.b_i, &u, h, sigmoid);
        let gf = gate(&params.w_f, &params.b_f, &u, h, sigmoid);
        let go = gate(&params.w_o, &params.b_o, &u, h, sigmoid);
        let gg = gate(&params.w_g, &params.b_g, &u, h, f64::tanh);
        let mut c_t = alloc::vec![0.0f64; h];
        let mut h_t = alloc::vec![0.0f64; h];
        for k in 0..h {
            c_t[k] = gf[k] * c_prev[k] + gi[k] * gg[k];
            h_t[k] = go[k] * c_t[k].tanh();
        }
        trace.inputs.push(u);
        trace.gate_i.push(gi);
        trace.gate_f.push(gf);
        trace.gate_o.push(go);
        trace.gate_g.push(gg);
        trace.cell.push(c_t.clone());
        trace.hidden.push(h_t.clone());
        h_prev = h_t;
        c_prev = c_t;
    }
    let pred = params.v.iter().zip(&h_prev).map(|(a, b)| a * b).sum::<f64>() + params.c;
    (pred, trace)
}

/// Exact gradients of `(pred - target)^2` for every parameter, via BPTT over
/// the cached forward states. Returns (prediction, gradients).
pub fn lstm_backward(params: &LstmParams, window: &[Vec<f64>], target: f64) -> (f64, LstmParams) {
    let (pred, trace) = lstm_forward(params, window);
    let (d, h) = (params.d, params.h);
    let t_len = window.len();
    let mut grads = LstmParams::zeros(d, h);

    let dpred = 2.0 * (pred - target);
    grads.c = dpred;
    let last_h = trace.hidden.last().cloned().unwrap_or_else(|| alloc::vec![0.0; h]);
    for k in 0..h {
        grads.v[k] = dpred * last_h[k];
    }

    let mut dh: Vec<f64> = params.v.iter().map(|v| dpred * v).collect();
    let mut dc_next = alloc::vec![0.0f64; h];
    for t in (0..t_len).rev() {
        let u = &trace.inputs[t];
        let gi = &trace.gate_i[t];
        let gf = &trace.gate_f[t];
        let go = &trace.gate_o[t];
        let gg = &trace.gate_g[t];
        let c_t = &trace.cell[t];
        let c_prev: &[f64] = if t == 0 { &[] } else { &trace.cell[t - 1] };

        let dim = d + h;
        let mut dh_prev = alloc::vec![0.0f64; h];
        let mut dc_prev = alloc::vec![0.0f64; h];
        for k in 0..h {
            let tanh_c = c_t[k].tanh();
            let d_o = dh[k] * tanh_c;
            let dc = dc_next[k] + dh[k] * go[k] * (1.0 - tanh_c * tanh_c);
            let d_i = dc * gg[k];
            let d_g = dc * gi[k];
            let cp = if t == 0 { 0.0 } else { c_prev[k] };
            let d_f = dc * cp;
            dc_prev[k] = dc * gf[k];

            let dz_i = d_i * gi[k] * (1.0 - gi[k]);
            let dz_f = d_f * gf[k] * (1.0 - gf[k]);
            let dz_o = d_o * go[k] * (1.0 - go[k]);
            let dz_g = d_g * (1.0 - gg[k] * gg[k]);

            grads.b_i[k] += dz_i;
            grads.b_f[k] += dz_f;
            grads.b_o[k] += dz_o;
            grads.b_g[k] += dz_g;
            let row = k * dim;
            for (col, &uv) in u.iter().enumerate() {
                grads.w_i[row + col] += dz_i * uv;
                grads.w_f[row + col] += dz_f * uv;
                grads.w_o[row + col] += dz_o * uv;
                grads.w_g[row + col] += dz_g * uv;
            }
            for j in 0..h {
                dh_prev[j] += params.w_i[row + d + j] * dz_i
                    + params.w_f[row + d + j] * dz_f
                    + params.w_o[row + d + j] * dz_o
                    + params.w_g[row + d + j] * dz_g;
            }
        }
        dh = dh_prev;
        dc_next = dc_prev;
    }
    (pred, grads)
}

/// A training example: T consecutive per-bucket feature rows and the count
/// one bucket past them.
#[derive(Debug, Clone, PartialEq)]
pub struct SeqWindow {
    pub steps: Vec<Vec<f64>>,
    pub target: f64,
}

/// Windows grouped by originating cell; cells never mix inside a window.
#[derive(Debug, Clone, PartialEq)]
pub struct SeqBatch {
    pub cell: String,
    pub windows: Vec<SeqWindow>,
}

#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[derive(Debug, Clone, PartialEq)]
pub struct Lstm {
    pub params: LstmParams,
    /// Mean window loss per epoch, in encounter order.
    pub loss_curve: Vec<f64>,
    pub config: LstmConfig,
}

impl Lstm {
    pub fn predict_window(&self, steps: &[Vec<f64>]) -> f64 {
        lstm_forward(&self.params, steps).0
    }
}

pub fn fit_lstm(batches: &[SeqBatch], config: &LstmConfig) -> Result<Lstm, CoreError> {
    if config.epochs < 1 || config.hidden < 1 {
        return Err(CoreError::InvalidConfig(String::from("epochs and hidden must be >= 1")));
    }
    if !(config.clip > 0.0) || config.learning_rate < 0.0 {
        return Err(CoreError::InvalidConfig(String::from("need clip > 0 and learning_rate >= 0")));
    }
    let d = batches
        .iter()
        .flat_map(|b| b.windows.iter())
        .flat_map(|w| w.steps.first())
        .map(|s| s.len())
        .next()
        .ok_or(CoreError::EmptyFrame)?;
    for b in batches {
        for w in &b.windows {
            if w.steps.is_empty() || w.steps.iter().any(|s| s.len() != d) {
                return Err(CoreError::InvalidConfig(String::from("ragged sequence window")));
            }
        }
    }

    let h = config.hidden;
    let mut params = LstmParams::init(d, h, config.seed);
    let mut adam_m = LstmParams::zeros(d, h);
    let mut adam_v = LstmParams::zeros(d, h);
    let mut adam_t = 0u32;
    let mut loss_curve = Vec::with_capacity(config.epochs);

    for epoch in 0..config.epochs {
        let mut epoch_loss = 0.0;
        let mut n_windows = 0usize;
        for batch in batches {
            if batch.windows.is_empty() {
                continue;
            }
            let mut grads = LstmParams::zeros(d, h);
            for w in &batch.windows {
                let (pred, g) = lstm_backward(&params, &w.steps, w.target);
                let err = pred - w.target;
                epoch_loss += err * err;
                n_windows += 1;
                grads.zip_apply(&g, |a, b| *a += b);
            }
            let scale = 1.0 / batch.windows.len() as f64;
            grads.for_each_value(|v| *v *= scale);
            let norm = grads.global_norm();
            if norm > config.clip {
                let s = config.clip / norm;
                grads.for_each_value(|v| *v *= s);
            }
            match config.optimizer {
                Optimizer::Sgd => {
                    params.zip_apply(&grads, |p, g| *p -= config.learning_rate * g);
                }
                Optimizer::Adam { beta1, beta2, epsilon } => {
                    adam_t += 1;
                    adam_m.zip_apply(&grads, |m, g| *m = beta1 * *m + (1.0 - beta1) * g);
                    adam_v.zip_apply(&grads, |v, g| *v = beta2 * *v + (1.0 - beta2) * g * g);
                    let bc1 = 1.0 - beta1.powi(adam_t as i32);
                    let bc2 = 1.0 - beta2.powi(adam_t as i32);
                    // fold the two moment tensors into a step tensor in fixed order
                    let mut step = adam_m.clone();
                    step.zip_apply(&adam_v, |m, v| {
                        let mhat = *m / bc1;
                        let vhat = v / bc2;
                        *m = config.learning_rate * mhat / (vhat.sqrt() + epsilon);
                    });
                    params.zip_apply(&step, |p, s| *p -= s);
                }
            }
        }
        let mean_loss = if n_windows > 0 { epoch_loss / n_windows as f64 } else { 0.0 };
        if !mean_loss.is_finite() || !params.is_finite() {
            return Err(CoreError::Diverged { epoch });
        }
        loss_curve.push(mean_loss);
    }

    Ok(Lstm { params, loss_curve, config: config.clone() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::seed_rng;
    use alloc::string::ToString;
    use alloc::vec;
    use rand::Rng;

    fn random_window(d: usize, t: usize, r: &mut rand_chacha::ChaCha8Rng) -> Vec<Vec<f64>> {
        (0..t).map(|_| (0..d).map(|_| r.random_range(-1.0..1.0)).collect()).collect()
    }

    fn random_params(d: usize, h: usize, seed: u64) -> LstmParams {
        let mut p = LstmParams::zeros(d, h);
        let mut r = seed_rng(seed);
        p.for_each_value(|v| *v = r.random_range(-0.8..0.8));
        p
    }

    #[test]
    fn zero_params_predict_output_bias() {
        let mut p = LstmParams::zeros(3, 4);
        p.c = 2.5;
        let window = vec![vec![1.0, -2.0, 0.5]; 6];
        let (pred, trace) = lstm_forward(&p, &window);
        assert_eq!(pred, 2.5);
        // zero weights keep the candidate gate at tanh(0)=0, so cell state never moves
        for c_t in &trace.cell {
            assert!(c_t.iter().all(|&v| v == 0.0));
        }
    }

    #[test]
    fn scalar_cell_matches_hand_computation() {
        // d=1, h=1, T=1: every quantity is a scalar and the five equations
        // can be evaluated literally
        let mut p = LstmParams::zeros(1, 1);
        p.w_i = vec![0.3, 0.0];
        p.w_f = vec![-0.2, 0.0];
        p.w_o = vec![0.5, 0.0];
        p.w_g = vec![0.8, 0.0];
        p.b_i = vec![0.1];
        p.b_f = vec![0.2];
        p.b_o = vec![-0.1];
        p.b_g = vec![0.05];
        p.v = vec![1.7];
        p.c = 0.4;
        let x = 0.6;
        let (pred, _) = lstm_forward(&p, &[vec![x]]);

        let sig = |z: f64| 1.0 / (1.0 + (-z).exp());
        let i = sig(0.3 * x + 0.1);
        let o = sig(0.5 * x - 0.1);
        let g = (0.8f64 * x + 0.05).tanh();
        let c_t = i * g; // f * c_0 term vanishes
        let h_t = o * c_t.tanh();
        let want = 1.7 * h_t + 0.4;
        assert!((pred - want).abs() < 1e-15, "{pred} vs {want}");
    }

    #[test]
    fn doubling_v_doubles_prediction_minus_bias() {
        let p = random_params(2, 3, 1);
        let mut r = seed_rng(2);
        let window = random_window(2, 4, &mut r);
        let (pred, _) = lstm_forward(&p, &window);
        let mut doubled = p.clone();
        for v in &mut doubled.v {
            *v *= 2.0;
        }
        let (pred2, _) = lstm_forward(&doubled, &window);
        assert!(((pred2 - p.c) - 2.0 * (pred - p.c)).abs() < 1e-12);
    }

    #[test]
    fn zero_loss_zero_gradients() {
        let p = random_params(2, 3, 3);
        let mut r = seed_rng(4);
        let window = random_window(2, 3, &mut r);
        let (pred, _) = lstm_forward(&p, &window);
        let (_, grads) = lstm_backward(&p, &window, pred);
        assert_eq!(grads.global_norm(), 0.0);
    }

    #[test]
    fn output_bias_gradient_is_twice_the_error() {
        let p = random_params(3, 2, 5);
        let mut r = seed_rng(6);
        let window = random_window(3, 4, &mut r);
        let target = 0.7;
        let (pred, grads) = lstm_backward(&p, &window, target);
        assert!((grads.c - 2.0 * (pred - target)).abs() < 1e-14);
    }

    #[test]
    fn gradients_match_central_finite_differences() {
        let (d, h, t) = (3usize, 4usize, 5usize);
        let p = random_params(d, h, 7);
        let mut r = seed_rng(8);
        let window = random_window(d, t, &mut r);
        let target = 0.3;
        let (_, grads) = lstm_backward(&p, &window, target);

        let eps = 1e-5;
        let loss_of = |params: &LstmParams| {
            let (pred, _) = lstm_forward(params, &window);
            (pred - target) * (pred - target)
        };
        // perturb every parameter through the same traversal the container uses
        let mut position = 0usize;
        let mut flat_grads: Vec<f64> = Vec::new();
        grads.clone().for_each_value(|v| flat_grads.push(*v));
        let total = flat_grads.len();
        while position < total {
            let mut plus = p.clone();
            let mut k = 0usize;
            plus.for_each_value(|v| {
                if k == position {
                    *v += eps;
                }
                k += 1;
            });
            let mut minus = p.clone();
            k = 0;
            minus.for_each_value(|v| {
                if k == position {
                    *v -= eps;
                }
                k += 1;
            });
            let fd = (loss_of(&plus) - loss_of(&minus)) / (2.0 * eps);
            let an = flat_grads[position];
            let denom = an.abs().max(fd.abs()).max(1e-8);
            assert!(
                ((an - fd) / denom).abs() < 1e-4,
                "param {position}: analytic {an} vs fd {fd}"
            );
            position += 1;
        }
    }

    #[test]
    fn cell_state_growth_is_bounded() {
        let p = random_params(2, 4, 9);
        let mut r = seed_rng(10);
        let window = random_window(2, 12, &mut r);
        let (_, trace) = lstm_forward(&p, &window);
        for t in 1..trace.cell.len() {
            for k in 0..4 {
                assert!(trace.cell[t][k].abs() <= trace.cell[t - 1][k].abs() + 1.0 + 1e-12);
            }
        }
        for k in 0..4 {
            assert!(trace.cell[0][k].abs() <= 1.0 + 1e-12);
        }
    }

    fn constant_batches(k: f64) -> Vec<SeqBatch> {
        let mut r = seed_rng(11);
        (0..5)
            .map(|b| SeqBatch {
                cell: alloc::format!("cell{b}"),
                windows: (0..4)
                    .map(|_| SeqWindow { steps: random_window(2, 4, &mut r), target: k })
                    .collect(),
            })
            .collect()
    }

    #[test]
    fn learns_constant_targets() {
        let batches = constant_batches(3.0);
        let config = LstmConfig {
            hidden: 8,
            epochs: 300,
            learning_rate: 0.05,
            ..LstmConfig::default()
        };
        let model = fit_lstm(&batches, &config).unwrap();
        let final_loss = *model.loss_curve.last().unwrap();
        assert!(final_loss < 0.01 * 9.0, "final loss {final_loss}");
    }

    #[test]
    fn same_seed_identical_training() {
        let batches = constant_batches(1.0);
        let config = LstmConfig { hidden: 4, epochs: 10, ..LstmConfig::default() };
        let a = fit_lstm(&batches, &config).unwrap();
        let b = fit_lstm(&batches, &config).unwrap();
        assert_eq!(a.loss_curve, b.loss_curve);
        assert_eq!(a.params, b.params);
    }

    #[test]
    fn zero_learning_rate_freezes_parameters() {
        let batches = constant_batches(2.0);
        for optimizer in [Optimizer::Sgd, ADAM_DEFAULT] {
            let config = LstmConfig {
                hidden: 4,
                epochs: 5,
                learning_rate: 0.0,
                optimizer,
                ..LstmConfig::default()
            };
            let model = fit_lstm(&batches, &config).unwrap();
            let fresh = LstmParams::init(2, 4, config.seed);
            assert_eq!(model.params, fresh);
        }
    }

    #[test]
    fn rejects_ragged_windows() {
        let batches = vec![SeqBatch {
            cell: "c".to_string(),
            windows: vec![SeqWindow { steps: vec![vec![1.0, 2.0], vec![3.0]], target: 0.0 }],
        }];
        assert!(matches!(
            fit_lstm(&batches, &LstmConfig::default()),
            Err(CoreError::InvalidConfig(_))
        ));
    }
}
