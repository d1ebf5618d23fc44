//! Shared between the gradient-check test and the acceptance suite: an
//! independent f64 reimplementation of the forward pass + loss, used as a
//! finite-difference oracle against the tape's analytic gradients.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use varade::loss::total_loss_on_tape;
use varade::model::{VaradeConfig, VaradeModel};
use varade::tape::GradTape;
use varade::tensor::Tensor;

/// Straight-line f64 forward + loss over a flat parameter vector laid out in
/// the model's build order.
struct Oracle {
    config: VaradeConfig,
    window: Vec<f64>,
    target: Vec<f64>,
}

impl Oracle {
    fn loss(&self, params: &[f64]) -> f64 {
        let c = self.config.channels;
        let maps = self.config.feature_maps();
        let mut offset = 0usize;
        let mut take = |n: usize| {
            let s = offset;
            offset += n;
            s..s + n
        };

        // conv stack with relu; activations stored as [maps][length]
        let mut cur: Vec<Vec<f64>> = (0..c)
            .map(|ch| self.window[ch * self.config.window..(ch + 1) * self.config.window].to_vec())
            .collect();
        let mut in_maps = c;
        for &out_maps in &maps {
            let w = &params[take(out_maps * in_maps * 2)];
            let b = &params[take(out_maps)];
            let in_len = cur[0].len();
            let out_len = in_len / 2;
            let mut next = vec![vec![0.0f64; out_len]; out_maps];
            for (o, row) in next.iter_mut().enumerate() {
                for (p, slot) in row.iter_mut().enumerate() {
                    let mut acc = b[o];
                    for (i, plane) in cur.iter().enumerate() {
                        for k in 0..2 {
                            acc += w[o * in_maps * 2 + i * 2 + k] * plane[2 * p + k];
                        }
                    }
                    *slot = acc.max(0.0);
                }
            }
            cur = next;
            in_maps = out_maps;
        }

        let flat: Vec<f64> = cur.into_iter().flatten().collect();
        let head_in = flat.len();
        let head_out = 2 * c;
        let w = &params[take(head_out * head_in)];
        let b = &params[take(head_out)];
        assert_eq!(offset, params.len(), "parameter layout mismatch");
        let out: Vec<f64> = (0..head_out)
            .map(|o| {
                b[o] + flat
                    .iter()
                    .enumerate()
                    .map(|(i, &x)| w[o * head_in + i] * x)
                    .sum::<f64>()
            })
            .collect();

        let (lo, hi) = self.config.logvar_clamp;
        let mu = &out[..c];
        let logvar: Vec<f64> = out[c..].iter().map(|v| v.clamp(lo as f64, hi as f64)).collect();

        let mut recon = 0.0;
        let mut kl = 0.0;
        for ch in 0..c {
            let d = self.target[ch] - mu[ch];
            recon += 0.5 * (logvar[ch] + d * d * (-logvar[ch]).exp());
            kl += -0.5 * (1.0 + logvar[ch] - mu[ch] * mu[ch] - logvar[ch].exp());
        }
        recon / c as f64 + self.config.lambda as f64 * kl / c as f64
    }
}

fn flatten_params(model: &VaradeModel) -> Vec<f64> {
    model
        .params()
        .iter()
        .flat_map(|t| t.data().iter().map(|&v| v as f64))
        .collect()
}

fn analytic_grad(model: &VaradeModel, window: &Tensor, target: &Tensor) -> Vec<f32> {
    let mut tape = GradTape::new();
    let w = tape.leaf(window.clone());
    let y = tape.leaf(target.clone());
    let (params, mu, logvar) = model.forward_on_tape(&mut tape, w).unwrap();
    let (total, _, _) =
        total_loss_on_tape(&mut tape, y, mu, logvar, model.config.lambda).unwrap();
    let mut grads = tape.backward(total).unwrap();
    params
        .ids()
        .into_iter()
        .flat_map(|id| grads.take(id).data().to_vec())
        .collect()
}

/// Runs the full 20-config gradient check (asserting internally) and returns
/// the worst relative error observed.
pub fn run_gradient_check() -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(90210);
    let windows = [4usize, 8, 16];
    let channels = [1usize, 3];
    let base_maps = [1usize, 2, 4];
    let h = 1e-4;
    let mut worst = 0.0f64;

    for case in 0..20 {
        let cfg = VaradeConfig {
            window: windows[rng.gen_range(0..windows.len())],
            channels: channels[rng.gen_range(0..channels.len())],
            base_maps: base_maps[rng.gen_range(0..base_maps.len())],
            lambda: [0.0f32, 0.5, 1.0][rng.gen_range(0..3)],
            ..VaradeConfig::default()
        };
        let mut model = VaradeModel::build(cfg.clone(), 1000 + case).unwrap();
        // jitter every parameter (biases build as exact zeros, which can park
        // a ReLU pre-activation exactly on its kink where the one-sided FD
        // slope legitimately disagrees with the subgradient)
        for t in model.params_mut() {
            for v in t.data_mut() {
                *v += rng.gen_range(-0.05f32..0.05);
            }
        }
        let window = Tensor::new(
            vec![cfg.channels, cfg.window],
            (0..cfg.channels * cfg.window)
                .map(|_| rng.gen_range(-1.0f32..1.0))
                .collect(),
        )
        .unwrap();
        let target =
            Tensor::from_vec((0..cfg.channels).map(|_| rng.gen_range(-1.0f32..1.0)).collect());

        let analytic = analytic_grad(&model, &window, &target);
        let flat = flatten_params(&model);
        assert_eq!(analytic.len(), flat.len());
        let oracle = Oracle {
            config: cfg,
            window: window.data().iter().map(|&v| v as f64).collect(),
            target: target.data().iter().map(|&v| v as f64).collect(),
        };
        // sanity: the oracle and the tape agree on the loss itself
        let mut tape = GradTape::new();
        let wid = tape.leaf(window.clone());
        let yid = tape.leaf(target.clone());
        let (_, mu, lv) = model.forward_on_tape(&mut tape, wid).unwrap();
        let (total, _, _) =
            total_loss_on_tape(&mut tape, yid, mu, lv, model.config.lambda).unwrap();
        let tape_loss = tape.value(total).item() as f64;
        let oracle_loss = oracle.loss(&flat);
        assert!(
            (tape_loss - oracle_loss).abs() <= 1e-4 * oracle_loss.abs().max(1.0),
            "case {case}: loss mismatch tape {tape_loss} oracle {oracle_loss}"
        );

        let mut skipped = 0usize;
        for (i, &a) in analytic.iter().enumerate() {
            let fd_at = |step: f64| {
                let mut plus = flat.clone();
                plus[i] += step;
                let mut minus = flat.clone();
                minus[i] -= step;
                (oracle.loss(&plus) - oracle.loss(&minus)) / (2.0 * step)
            };
            let fd = fd_at(h);
            let a = a as f64;
            let scale = a.abs().max(fd.abs());
            if scale < 1e-6 {
                continue; // both effectively zero
            }
            // a ReLU/clamp kink inside the FD stencil makes the estimate
            // step-size dependent; skip those points (the subgradient is
            // genuinely one-sided there)
            let fd_half = fd_at(h / 2.0);
            if (fd - fd_half).abs() > 1e-5 * scale + 1e-9 {
                skipped += 1;
                continue;
            }
            let rel = (a - fd).abs() / scale;
            worst = worst.max(rel);
            assert!(
                rel < 1e-4,
                "case {case} param {i}: analytic {a} vs fd {fd} (rel {rel:.3e})"
            );
        }
        assert!(
            skipped * 5 < analytic.len(),
            "case {case}: {skipped}/{} params near kinks, stencil too coarse",
            analytic.len()
        );
    }
    worst
}
