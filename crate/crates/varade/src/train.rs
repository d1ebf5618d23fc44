//! Training loop: uniformly sampled next-step windows, tape forward, Adam.

use crate::error::{Result, VaradeError};
use crate::loss::{total_loss_on_tape, LossBreakdown};
use crate::model::VaradeModel;
use crate::optim::{AdamConfig, AdamState};
use crate::tape::GradTape;
use crate::tensor::Tensor;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainConfig {
    pub steps: usize,
    pub batch_size: usize,
    pub seed: u64,
    pub adam: AdamConfig,
    /// Cosine-decay the learning rate down to this value; `None` keeps it
    /// constant.
    pub final_lr: Option<f32>,
    /// Printed progress every N steps; 0 disables.
    pub log_every: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            steps: 2000,
            batch_size: 64,
            seed: 0,
            adam: AdamConfig::default(),
            final_lr: None,
            log_every: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainStats {
    pub first_loss: LossBreakdown,
    pub final_loss: LossBreakdown,
    pub steps: usize,
}

/// One window `[C, T]` plus the next-step target `[C]` taken from
/// `data[start + T]`. `data` is normalized, time-major.
fn make_window(data: &[Vec<f32>], start: usize, window: usize) -> (Tensor, Tensor) {
    let c = data[0].len();
    let mut w = vec![0.0f32; c * window];
    for (i, sample) in data[start..start + window].iter().enumerate() {
        for (ch, &v) in sample.iter().enumerate() {
            w[ch * window + i] = v;
        }
    }
    let target = data[start + window].clone();
    (
        Tensor::new(vec![c, window], w).expect("window shape"),
        Tensor::from_vec(target),
    )
}

/// Mean total loss over one batch, recorded on a fresh tape, with gradients
/// applied through Adam. Returns the batch [`LossBreakdown`].
fn train_step(
    model: &mut VaradeModel,
    data: &[Vec<f32>],
    starts: &[usize],
    adam: &mut AdamState,
) -> Result<LossBreakdown> {
    let t = model.config.window;
    let lambda = model.config.lambda;
    let mut tape = GradTape::new();
    let params = model.register_params(&mut tape);

    let mut total_acc = None;
    let mut recon_sum = 0.0f32;
    let mut kl_sum = 0.0f32;
    for &start in starts {
        let (window, target) = make_window(data, start, t);
        let win_id = tape.leaf(window);
        let y_id = tape.leaf(target);
        let (mu, logvar) = model.forward_taped(&mut tape, win_id, &params)?;
        let (total, recon, kl) = total_loss_on_tape(&mut tape, y_id, mu, logvar, lambda)?;
        recon_sum += tape.value(recon).item();
        kl_sum += tape.value(kl).item();
        total_acc = Some(match total_acc {
            None => total,
            Some(acc) => tape.add(acc, total)?,
        });
    }
    let batch = starts.len() as f32;
    let loss = tape.scale(total_acc.expect("non-empty batch"), 1.0 / batch);
    let loss_value = tape.value(loss).item();
    if !loss_value.is_finite() {
        return Err(VaradeError::Numeric(format!(
            "non-finite training loss {loss_value}"
        )));
    }
    let mut grads = tape.backward(loss)?;
    let grad_tensors: Vec<Tensor> = params.ids().iter().map(|&id| grads.take(id)).collect();
    adam.step(&mut model.params_mut(), &grad_tensors)?;
    let recon = recon_sum / batch;
    let kl = kl_sum / batch;
    Ok(LossBreakdown {
        recon,
        kl,
        total: recon + lambda * kl,
    })
}

/// Trains in place on a normalized time-major stream. Requires
/// `data.len() > T` so at least one next-step target exists.
pub fn train(model: &mut VaradeModel, data: &[Vec<f32>], cfg: &TrainConfig) -> Result<TrainStats> {
    let t = model.config.window;
    if data.len() <= t {
        return Err(VaradeError::Config(format!(
            "training stream has {} samples, need more than window {t}",
            data.len()
        )));
    }
    if cfg.batch_size == 0 || cfg.steps == 0 {
        return Err(VaradeError::Config("steps and batch_size must be >= 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut adam = AdamState::new(cfg.adam, &model.params());
    let max_start = data.len() - t - 1;
    let mut first = None;
    let mut last = None;
    for step in 0..cfg.steps {
        if let Some(final_lr) = cfg.final_lr {
            let frac = step as f32 / cfg.steps.max(1) as f32;
            let w = 0.5 * (1.0 + (std::f32::consts::PI * frac).cos());
            adam.config.lr = final_lr + (cfg.adam.lr - final_lr) * w;
        }
        let starts: Vec<usize> = (0..cfg.batch_size)
            .map(|_| rng.gen_range(0..=max_start))
            .collect();
        let loss = train_step(model, data, &starts, &mut adam)?;
        if first.is_none() {
            first = Some(loss);
        }
        last = Some(loss);
        if cfg.log_every > 0 && (step + 1) % cfg.log_every == 0 {
            eprintln!(
                "step {:>6}  total {:.6}  recon {:.6}  kl {:.6}",
                step + 1,
                loss.total,
                loss.recon,
                loss.kl
            );
        }
    }
    Ok(TrainStats {
        first_loss: first.expect("at least one step"),
        final_loss: last.expect("at least one step"),
        steps: cfg.steps,
    })
}

/// Normalized prediction pass used by diagnostics and the KL-pull check:
/// returns (mean |mu|, mean |logvar|) over every full window in `data`.
pub fn prediction_magnitudes(model: &VaradeModel, data: &[Vec<f32>]) -> Result<(f64, f64)> {
    let t = model.config.window;
    if data.len() < t {
        return Err(VaradeError::Config("stream shorter than window".into()));
    }
    let mut mu_sum = 0.0f64;
    let mut lv_sum = 0.0f64;
    let mut count = 0usize;
    for start in 0..=data.len() - t {
        let (window, _target_unused) = if start + t < data.len() {
            make_window(data, start, t)
        } else {
            // last window has no next-step target; build it directly
            let c = data[0].len();
            let mut w = vec![0.0f32; c * t];
            for (i, sample) in data[start..start + t].iter().enumerate() {
                for (ch, &v) in sample.iter().enumerate() {
                    w[ch * t + i] = v;
                }
            }
            (Tensor::new(vec![c, t], w)?, Tensor::from_vec(vec![0.0]))
        };
        let (mu, logvar) = model.forward(&window)?;
        mu_sum += mu.data().iter().map(|v| v.abs() as f64).sum::<f64>() / mu.len() as f64;
        lv_sum += logvar.data().iter().map(|v| v.abs() as f64).sum::<f64>() / logvar.len() as f64;
        count += 1;
    }
    Ok((mu_sum / count as f64, lv_sum / count as f64))
}
