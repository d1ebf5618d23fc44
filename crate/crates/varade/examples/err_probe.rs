//! Probe: per-channel prediction error of a trained checkpoint on its
//! training stream.
use varade::checkpoint;
use varade::data::{self, channel_names};
use varade::tensor::Tensor;

fn main() {
    let args: Vec<String> = std::env::args().collect();
    if args.len() != 3 {
        eprintln!("usage: err_probe <checkpoint> <stream.csv>");
        std::process::exit(1);
    }
    let ckpt = checkpoint::load(args[1].as_ref()).unwrap();
    let stream = data::load_csv(args[2].as_ref()).unwrap();
    let model = match &ckpt.model { varade::checkpoint::ModelKind::Varade(m) => m, _ => panic!() };
    let t = model.config.window;
    let c = model.config.channels;
    let norm: Vec<Vec<f32>> = stream.records.iter().map(|r| ckpt.normalizer.apply(&r.values).unwrap()).collect();
    let mut err2 = vec![0.0f64; c];
    let mut sig = vec![0.0f64; c];
    let mut count = 0usize;
    let mut start = 0;
    while start + t < norm.len() {
        let mut w = vec![0.0f32; c * t];
        for (i, s) in norm[start..start + t].iter().enumerate() {
            for (ch, &v) in s.iter().enumerate() { w[ch * t + i] = v; }
        }
        let win = Tensor::new(vec![c, t], w).unwrap();
        let (mu, lv) = model.forward(&win).unwrap();
        for ch in 0..c {
            let e = (norm[start + t][ch] - mu.data()[ch]) as f64;
            err2[ch] += e * e;
            sig[ch] += (lv.data()[ch] as f64).exp();
        }
        count += 1;
        start += 97;
    }
    let names = channel_names();
    let mut rows: Vec<(f64, f64, String)> = (0..c)
        .map(|ch| ((err2[ch] / count as f64).sqrt(), sig[ch] / count as f64, names[ch].clone()))
        .collect();
    rows.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap());
    println!("worst channels (rms_err, mean_sigma2):");
    for (e, s, n) in rows.iter().take(15) { println!("  {n:28} {e:.4} {s:.4}"); }
    println!("best:");
    for (e, s, n) in rows.iter().rev().take(8) { println!("  {n:28} {e:.4} {s:.4}"); }
    let avg: f64 = rows.iter().map(|r| r.0).sum::<f64>() / c as f64;
    println!("mean rms err {avg:.4} over {count} windows");
}
