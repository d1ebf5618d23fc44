//! Probe: train on pure noise with a slowly varying amplitude envelope and
//! check whether predicted variance tracks the envelope.
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use varade::model::{VaradeConfig, VaradeModel};
use varade::train::{train, TrainConfig};
use varade::optim::AdamConfig;
use varade::tensor::Tensor;

fn main() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let noise = Normal::new(0.0f64, 1.0).unwrap();
    let n = 20000usize;
    let c = 2usize;
    // envelope in [0.05, 0.5], period ~400 samples
    let data: Vec<Vec<f32>> = (0..n)
        .map(|i| {
            let env = 0.05 + 0.45 * (0.5 + 0.5 * (i as f64 * std::f64::consts::TAU / 400.0).sin());
            (0..c).map(|_| (env * noise.sample(&mut rng)) as f32).collect()
        })
        .collect();
    let cfg = VaradeConfig { window: 16, channels: c, base_maps: 8, ..VaradeConfig::default() };
    let mut model = VaradeModel::build(cfg, 7).unwrap();
    let stats = train(&mut model, &data, &TrainConfig {
        steps: 3000, batch_size: 16, seed: 7,
        adam: AdamConfig { lr: 1e-3, ..AdamConfig::default() }, final_lr: None, log_every: 1000,
    }).unwrap();
    println!("final: total {:.4} recon {:.4} kl {:.4}", stats.final_loss.total, stats.final_loss.recon, stats.final_loss.kl);
    // evaluate sigma at high-env vs low-env windows
    let mut hi = Vec::new();
    let mut lo = Vec::new();
    for start in (0..n - 17).step_by(7) {
        let i_mid = start + 8;
        let env = 0.05 + 0.45 * (0.5 + 0.5 * (i_mid as f64 * std::f64::consts::TAU / 400.0).sin());
        let mut w = vec![0.0f32; c * 16];
        for (i, s) in data[start..start + 16].iter().enumerate() {
            for (ch, &v) in s.iter().enumerate() { w[ch * 16 + i] = v; }
        }
        let t = Tensor::new(vec![c, 16], w).unwrap();
        let (_, lv) = model.forward(&t).unwrap();
        let s: f32 = lv.data().iter().map(|v| v.exp()).sum::<f32>() / c as f32;
        if env > 0.4 { hi.push(s as f64); } else if env < 0.15 { lo.push(s as f64); }
    }
    let m = |v: &Vec<f64>| v.iter().sum::<f64>() / v.len() as f64;
    println!("sigma^2 high-env {:.4} ({} wins) low-env {:.4} ({} wins)", m(&hi), hi.len(), m(&lo), lo.len());
    println!("true var high {:.4} low {:.4}", 0.45f64*0.45+0.0, 0.1f64*0.1);
}
