//! The forecaster network: a stack of stride-2 width-2 convolutions with ReLU,
//! feature maps doubling every two layers, then a linear head emitting
//! per-channel mean and log-variance for the next time step.

use crate::error::{Result, VaradeError};
use crate::tape::{GradTape, ValueId};
use crate::tensor::{self, Tensor};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const DEFAULT_WINDOW: usize = 512;
pub const DEFAULT_CHANNELS: usize = 86;
pub const DEFAULT_BASE_MAPS: usize = 128;

#[derive(Debug, Clone, PartialEq)]
pub struct VaradeConfig {
    /// Input window length T; must be a power of two >= 4.
    pub window: usize,
    /// Number of input/output channels C.
    pub channels: usize,
    /// Feature maps of the first conv layer; doubled every two layers.
    pub base_maps: usize,
    /// KL weight in the training objective.
    pub lambda: f32,
    /// Log-variance clamp applied before the head output is returned.
    pub logvar_clamp: (f32, f32),
}

impl Default for VaradeConfig {
    fn default() -> Self {
        VaradeConfig {
            window: DEFAULT_WINDOW,
            channels: DEFAULT_CHANNELS,
            base_maps: DEFAULT_BASE_MAPS,
            lambda: 1.0,
            logvar_clamp: (-10.0, 10.0),
        }
    }
}

impl VaradeConfig {
    pub fn validate(&self) -> Result<()> {
        if self.window < 4 || !self.window.is_power_of_two() {
            return Err(VaradeError::Config(format!(
                "window must be a power of two >= 4, got {}",
                self.window
            )));
        }
        if self.channels == 0 || self.base_maps == 0 {
            return Err(VaradeError::Config("channels and base_maps must be >= 1".into()));
        }
        if self.lambda < 0.0 || !self.lambda.is_finite() {
            return Err(VaradeError::Config(format!("lambda must be finite and >= 0, got {}", self.lambda)));
        }
        if self.logvar_clamp.0 > self.logvar_clamp.1 {
            return Err(VaradeError::Config("logvar clamp lower bound exceeds upper".into()));
        }
        Ok(())
    }

    /// Number of conv layers: the stack halves the window until length 2.
    pub fn num_layers(&self) -> usize {
        (self.window.trailing_zeros() as usize) - 1
    }

    /// Output feature maps per layer, 1-indexed rule: base * 2^((i-1)/2).
    pub fn feature_maps(&self) -> Vec<usize> {
        (0..self.num_layers())
            .map(|i| self.base_maps << (i / 2))
            .collect()
    }

    /// Width of the flattened vector entering the head (2 temporal positions).
    pub fn head_input(&self) -> usize {
        2 * *self.feature_maps().last().expect("at least one layer")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvLayer {
    /// `[out_maps, in_maps, 2]`
    pub weight: Tensor,
    /// `[out_maps]`
    pub bias: Tensor,
}

#[derive(Debug, Clone, PartialEq)]
pub struct VaradeModel {
    pub config: VaradeConfig,
    pub layers: Vec<ConvLayer>,
    /// `[2*C, head_input]`
    pub head_weight: Tensor,
    /// `[2*C]`
    pub head_bias: Tensor,
}

/// Tape handles for every parameter of a model, in build order.
pub struct TapedParams {
    pub layers: Vec<(ValueId, ValueId)>,
    pub head_weight: ValueId,
    pub head_bias: ValueId,
}

impl TapedParams {
    pub fn ids(&self) -> Vec<ValueId> {
        let mut out = Vec::with_capacity(self.layers.len() * 2 + 2);
        for (w, b) in &self.layers {
            out.push(*w);
            out.push(*b);
        }
        out.push(self.head_weight);
        out.push(self.head_bias);
        out
    }
}

impl VaradeModel {
    /// Deterministic build: weights uniform in [-sqrt(1/fan_in), +sqrt(1/fan_in)],
    /// biases zero. When `base_maps >= channels` the initialization is
    /// additionally structured so training starts from a sensible predictor
    /// instead of noise (inputs are normalized to [-1, 1], and a +1 bias on
    /// the first layer keeps both pathways in the linear region of every
    /// ReLU):
    /// - the first `channels` maps of every layer pass through the most
    ///   recent input of the corresponding channel, making the mean head a
    ///   copy-last predictor;
    /// - the remaining maps start as rectified first-difference aggregates
    ///   over channel blocks (± pairs), average-pooled down the stack, and
    ///   the variance head reads them with positive weight — a crude
    ///   volatility estimate for the uncertainty pathway to refine.
    pub fn build(config: VaradeConfig, seed: u64) -> Result<VaradeModel> {
        config.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let maps = config.feature_maps();
        let c = config.channels;
        let structured = config.base_maps >= c;
        let mut layers = Vec::with_capacity(maps.len());
        let mut in_maps = c;
        for (l, &out_maps) in maps.iter().enumerate() {
            let fan_in = in_maps * 2;
            let bound = (1.0 / fan_in as f32).sqrt();
            let mut data: Vec<f32> = (0..out_maps * in_maps * 2)
                .map(|_| rng.gen_range(-bound..bound))
                .collect();
            if structured {
                for o in 0..c.min(out_maps) {
                    // quiet the rest of the row so the pass-through dominates
                    for v in &mut data[o * in_maps * 2..(o + 1) * in_maps * 2] {
                        *v *= 0.05;
                    }
                    data[o * in_maps * 2 + o * 2 + 1] = 1.0;
                }
                let extra = out_maps.saturating_sub(c);
                if l == 0 {
                    // ± pairs of block first-differences: map c+2g grows with
                    // rising block activity, c+2g+1 with falling
                    let groups = extra / 2;
                    if groups > 0 {
                        let block = c.div_ceil(groups);
                        for g in 0..groups {
                            let lo = g * block;
                            let hi = ((g + 1) * block).min(c);
                            for (pair, sign) in [(0usize, 1.0f32), (1, -1.0)] {
                                let o = c + 2 * g + pair;
                                let row = &mut data[o * in_maps * 2..(o + 1) * in_maps * 2];
                                for v in row.iter_mut() {
                                    *v *= 0.05;
                                }
                                for ch in lo..hi {
                                    row[ch * 2] = -sign;
                                    row[ch * 2 + 1] = sign;
                                }
                            }
                        }
                    }
                } else {
                    // carry earlier difference features down the stack by
                    // average-pooling the pair
                    for o in c..out_maps.min(in_maps) {
                        let row = &mut data[o * in_maps * 2..(o + 1) * in_maps * 2];
                        for v in row.iter_mut() {
                            *v *= 0.05;
                        }
                        row[o * 2] = 0.5;
                        row[o * 2 + 1] = 0.5;
                    }
                }
            }
            let weight = Tensor::new(vec![out_maps, in_maps, 2], data)?;
            let mut bias_data = vec![0.0f32; out_maps];
            if structured && l == 0 {
                // shift the pass-through features to [0, 2] so the ReLU never
                // clips them; the mean head subtracts the offset again
                for b in bias_data.iter_mut().take(c.min(out_maps)) {
                    *b = 1.0;
                }
            }
            let bias = Tensor::new(vec![out_maps], bias_data)?;
            layers.push(ConvLayer { weight, bias });
            in_maps = out_maps;
        }
        let head_in = config.head_input();
        let head_out = 2 * c;
        let bound = (1.0 / head_in as f32).sqrt();
        let mut head_data: Vec<f32> =
            (0..head_out * head_in).map(|_| rng.gen_range(-bound..bound)).collect();
        let mut head_bias_data = vec![0.0f32; head_out];
        if structured {
            let last_maps = *maps.last().unwrap();
            let carried = last_maps.min(*maps.first().unwrap());
            for ch in 0..c {
                // mu_ch reads the latest pass-through feature of channel ch
                for v in &mut head_data[ch * head_in..(ch + 1) * head_in] {
                    *v *= 0.05;
                }
                head_data[ch * head_in + ch * 2 + 1] = 1.0;
                head_bias_data[ch] = -1.0;
                // logvar_ch: bias at 0 keeps sigma at the prior (sigma = 1);
                // negative weight on the pass-through features pushes the
                // variance down wherever the input looks like training data,
                // and positive weight on the difference aggregates raises it
                // with short-scale volatility. Inputs outside the training
                // range clip at the first ReLU, removing the downward push,
                // so unfamiliar windows revert toward the prior.
                let row = &mut head_data[(c + ch) * head_in..(c + ch + 1) * head_in];
                for v in row.iter_mut() {
                    *v *= 0.05;
                }
                for o in 0..c.min(carried) {
                    row[o * 2] = -2.0 / c as f32;
                    row[o * 2 + 1] = -2.0 / c as f32;
                }
                for o in c..carried {
                    row[o * 2] = 0.5;
                    row[o * 2 + 1] = 0.5;
                }
                head_bias_data[c + ch] = 0.0;
            }
        }
        let head_weight = Tensor::new(vec![head_out, head_in], head_data)?;
        let head_bias = Tensor::new(vec![head_out], head_bias_data)?;
        Ok(VaradeModel {
            config,
            layers,
            head_weight,
            head_bias,
        })
    }

    /// All-zero parameters; used in tests and by the checkpoint loader.
    pub fn zeros(config: VaradeConfig) -> Result<VaradeModel> {
        config.validate()?;
        let maps = config.feature_maps();
        let mut layers = Vec::with_capacity(maps.len());
        let mut in_maps = config.channels;
        for &out_maps in &maps {
            layers.push(ConvLayer {
                weight: Tensor::zeros(vec![out_maps, in_maps, 2]),
                bias: Tensor::zeros(vec![out_maps]),
            });
            in_maps = out_maps;
        }
        let head_in = config.head_input();
        let head_out = 2 * config.channels;
        Ok(VaradeModel {
            config,
            layers,
            head_weight: Tensor::zeros(vec![head_out, head_in]),
            head_bias: Tensor::zeros(vec![head_out]),
        })
    }

    /// Inference forward pass. `window` is `[C, T]`; returns (mu, logvar),
    /// each `[C]`, with logvar clamped.
    pub fn forward(&self, window: &Tensor) -> Result<(Tensor, Tensor)> {
        let c = self.config.channels;
        let t = self.config.window;
        if window.shape() != [c, t] {
            return Err(VaradeError::shape(
                "forward",
                format!("window shape {:?}, expected [{c}, {t}]", window.shape()),
            ));
        }
        let mut cur = window.clone();
        for layer in &self.layers {
            cur = tensor::relu(&tensor::conv1d(&cur, &layer.weight, &layer.bias)?);
        }
        let flat = cur.reshaped(vec![cur.len()])?;
        let out = tensor::linear(&flat, &self.head_weight, &self.head_bias)?;
        let (lo, hi) = self.config.logvar_clamp;
        let mu = Tensor::from_vec(out.data()[..c].to_vec());
        let logvar =
            Tensor::from_vec(out.data()[c..].iter().map(|v| v.clamp(lo, hi)).collect());
        Ok((mu, logvar))
    }

    /// Records the forward pass on a tape for training. Returns the parameter
    /// handles plus (mu, logvar) with the clamp applied to logvar.
    pub fn forward_on_tape(
        &self,
        tape: &mut GradTape,
        window: ValueId,
    ) -> Result<(TapedParams, ValueId, ValueId)> {
        let params = self.register_params(tape);
        let (mu, logvar) = self.forward_taped(tape, window, &params)?;
        Ok((params, mu, logvar))
    }

    /// Registers every parameter as a tape leaf, in build order.
    pub fn register_params(&self, tape: &mut GradTape) -> TapedParams {
        let layers = self
            .layers
            .iter()
            .map(|l| (tape.leaf(l.weight.clone()), tape.leaf(l.bias.clone())))
            .collect();
        TapedParams {
            layers,
            head_weight: tape.leaf(self.head_weight.clone()),
            head_bias: tape.leaf(self.head_bias.clone()),
        }
    }

    /// Forward with pre-registered parameters (shared across a batch).
    pub fn forward_taped(
        &self,
        tape: &mut GradTape,
        window: ValueId,
        params: &TapedParams,
    ) -> Result<(ValueId, ValueId)> {
        let c = self.config.channels;
        let mut cur = window;
        for (w, b) in &params.layers {
            let conv = tape.conv1d(cur, *w, *b)?;
            cur = tape.relu(conv);
        }
        let flat_len = tape.value(cur).len();
        let flat = tape.reshape(cur, vec![flat_len])?;
        let out = tape.linear(flat, params.head_weight, params.head_bias)?;
        let mu = tape.slice(out, 0, c)?;
        let raw_logvar = tape.slice(out, c, c)?;
        let (lo, hi) = self.config.logvar_clamp;
        let logvar = tape.clamp(raw_logvar, lo, hi);
        Ok((mu, logvar))
    }

    /// Parameters in build order (conv weight, conv bias, ..., head weight, head bias).
    pub fn params(&self) -> Vec<&Tensor> {
        let mut out = Vec::with_capacity(self.layers.len() * 2 + 2);
        for l in &self.layers {
            out.push(&l.weight);
            out.push(&l.bias);
        }
        out.push(&self.head_weight);
        out.push(&self.head_bias);
        out
    }

    pub fn params_mut(&mut self) -> Vec<&mut Tensor> {
        let mut out = Vec::with_capacity(self.layers.len() * 2 + 2);
        for l in &mut self.layers {
            out.push(&mut l.weight);
            out.push(&mut l.bias);
        }
        out.push(&mut self.head_weight);
        out.push(&mut self.head_bias);
        out
    }

    pub fn parameter_count(&self) -> usize {
        self.params().iter().map(|t| t.len()).sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_geometry_matches_published_values() {
        let cfg = VaradeConfig::default();
        assert_eq!(cfg.num_layers(), 8);
        assert_eq!(
            cfg.feature_maps(),
            vec![128, 128, 256, 256, 512, 512, 1024, 1024]
        );
        assert_eq!(cfg.head_input(), 2048);
    }

    #[test]
    fn t16_geometry() {
        let cfg = VaradeConfig {
            window: 16,
            ..VaradeConfig::default()
        };
        assert_eq!(cfg.num_layers(), 3);
        assert_eq!(cfg.feature_maps(), vec![128, 128, 256]);
    }

    #[test]
    fn smallest_legal_geometry() {
        let cfg = VaradeConfig {
            window: 4,
            channels: 1,
            base_maps: 1,
            ..VaradeConfig::default()
        };
        let model = VaradeModel::build(cfg, 0).unwrap();
        assert_eq!(model.layers.len(), 1);
        assert_eq!(model.config.head_input(), 2);
        assert_eq!(model.head_weight.shape(), &[2, 2]);
        // conv(1->1): 1*1*2+1 = 3; head(2->2): 2*2+2 = 6
        assert_eq!(model.parameter_count(), 9);
    }

    #[test]
    fn non_power_of_two_window_rejected() {
        let cfg = VaradeConfig {
            window: 12,
            ..VaradeConfig::default()
        };
        assert!(VaradeModel::build(cfg, 0).is_err());
    }

    #[test]
    fn zero_window_zero_params_gives_zero_outputs() {
        let cfg = VaradeConfig {
            window: 8,
            channels: 2,
            base_maps: 2,
            ..VaradeConfig::default()
        };
        let model = VaradeModel::zeros(cfg.clone()).unwrap();
        let window = Tensor::zeros(vec![2, 8]);
        let (mu, logvar) = model.forward(&window).unwrap();
        assert_eq!(mu.data(), &[0.0, 0.0]);
        assert_eq!(logvar.data(), &[0.0, 0.0]);
    }

    #[test]
    fn logvar_within_clamp() {
        let cfg = VaradeConfig {
            window: 8,
            channels: 3,
            base_maps: 4,
            ..VaradeConfig::default()
        };
        let model = VaradeModel::build(cfg, 42).unwrap();
        let window = Tensor::new(vec![3, 8], (0..24).map(|i| ((i * 37 % 17) as f32 / 8.5) - 1.0).collect()).unwrap();
        let (_, logvar) = model.forward(&window).unwrap();
        for &v in logvar.data() {
            assert!((-10.0..=10.0).contains(&v));
        }
    }

    #[test]
    fn build_is_deterministic() {
        let cfg = VaradeConfig {
            window: 16,
            channels: 2,
            base_maps: 3,
            ..VaradeConfig::default()
        };
        let a = VaradeModel::build(cfg.clone(), 9).unwrap();
        let b = VaradeModel::build(cfg, 9).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn parameter_count_matches_closed_form() {
        // conv layer i: out*(in*2) + out; head: 2C*head_in + 2C
        let cfg = VaradeConfig::default();
        let model = VaradeModel::zeros(cfg.clone()).unwrap();
        let mut expect = 0usize;
        let mut in_maps = cfg.channels;
        for out_maps in cfg.feature_maps() {
            expect += out_maps * in_maps * 2 + out_maps;
            in_maps = out_maps;
        }
        expect += 2 * cfg.channels * cfg.head_input() + 2 * cfg.channels;
        assert_eq!(model.parameter_count(), expect);
    }

    #[test]
    fn doubling_base_maps_roughly_quadruples_conv_params() {
        let count_conv = |base: usize| -> usize {
            let cfg = VaradeConfig {
                window: 64,
                channels: 4,
                base_maps: base,
                ..VaradeConfig::default()
            };
            let model = VaradeModel::zeros(cfg).unwrap();
            model.layers.iter().map(|l| l.weight.len() + l.bias.len()).sum()
        };
        let small = count_conv(8);
        let big = count_conv(16);
        let ratio = big as f64 / small as f64;
        // input-layer term scales linearly, everything else quadratically
        assert!(ratio > 3.0 && ratio < 4.1, "ratio {ratio}");
    }

    #[test]
    fn stack_always_reduces_to_length_two() {
        for exp in 2..=10 {
            let window = 1usize << exp;
            let cfg = VaradeConfig {
                window,
                channels: 1,
                base_maps: 1,
                ..VaradeConfig::default()
            };
            // length after N = log2(T)-1 halvings is exactly 2
            assert_eq!(window >> cfg.num_layers(), 2);
            let model = VaradeModel::build(cfg, 1).unwrap();
            let input = Tensor::zeros(vec![1, window]);
            assert!(model.forward(&input).is_ok());
        }
    }
}
