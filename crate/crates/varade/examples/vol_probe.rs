//! Probe: how the predicted variance relates to realized next-step error and
//! short-scale window volatility, split by label. Usage:
//! vol_probe <checkpoint> <labeled_stream.csv>
use varade::checkpoint::{self, ModelKind};
use varade::data::{self, Label};
use varade::tensor::Tensor;

fn stats(name: &str, rows: &[(f64, f64, f64)]) {
    if rows.is_empty() {
        println!("{name}: no rows");
        return;
    }
    let n = rows.len() as f64;
    let mean = |f: &dyn Fn(&(f64, f64, f64)) -> f64| rows.iter().map(|r| f(r)).sum::<f64>() / n;
    let ms = mean(&|r| r.0);
    let me = mean(&|r| r.1);
    let mv = mean(&|r| r.2);
    let corr = |fa: &dyn Fn(&(f64, f64, f64)) -> f64, fb: &dyn Fn(&(f64, f64, f64)) -> f64| {
        let (ma, mb) = (mean(fa), mean(fb));
        let cov = rows.iter().map(|r| (fa(r) - ma) * (fb(r) - mb)).sum::<f64>() / n;
        let va = rows.iter().map(|r| (fa(r) - ma).powi(2)).sum::<f64>() / n;
        let vb = rows.iter().map(|r| (fb(r) - mb).powi(2)).sum::<f64>() / n;
        cov / (va.sqrt() * vb.sqrt()).max(1e-12)
    };
    println!(
        "{name}: n={} sigma2 {ms:.5} err2 {me:.5} vol {mv:.5} corr(s2,err2) {:.3} corr(s2,vol) {:.3} corr(err2,vol) {:.3}",
        rows.len(),
        corr(&|r| r.0, &|r| r.1),
        corr(&|r| r.0, &|r| r.2),
        corr(&|r| r.1, &|r| r.2),
    );
}

fn main() {
    let args: Vec<String> = std::env::args().collect();
    if args.len() != 3 {
        eprintln!("usage: vol_probe <checkpoint> <stream.csv>");
        std::process::exit(1);
    }
    let ckpt = checkpoint::load(args[1].as_ref()).unwrap();
    let stream = data::load_csv(args[2].as_ref()).unwrap();
    let model = match &ckpt.model {
        ModelKind::Varade(m) => m,
        _ => panic!("expected a forecaster checkpoint"),
    };
    let t = model.config.window;
    let c = model.config.channels;
    let norm: Vec<Vec<f32>> = stream
        .records
        .iter()
        .map(|r| ckpt.normalizer.apply(&r.values).unwrap())
        .collect();
    let mut normal_rows = Vec::new();
    let mut burst_rows = Vec::new();
    let mut clipped_normal = 0.0f64;
    let mut clipped_burst = 0.0f64;
    let mut start = 0usize;
    while start + t < norm.len() {
        let mut w = vec![0.0f32; c * t];
        for (i, s) in norm[start..start + t].iter().enumerate() {
            for (ch, &v) in s.iter().enumerate() {
                w[ch * t + i] = v;
            }
        }
        let frac_out = w.iter().filter(|&&v| !(-1.0..=1.0).contains(&v)).count() as f64 / w.len() as f64;
        let win = Tensor::new(vec![c, t], w).unwrap();
        let (mu, lv) = model.forward(&win).unwrap();
        let sigma2 = lv.data().iter().map(|&v| (v as f64).exp()).sum::<f64>() / c as f64;
        let target = &norm[start + t];
        let err2 = mu
            .data()
            .iter()
            .zip(target)
            .map(|(&m, &y)| ((y - m) as f64).powi(2))
            .sum::<f64>()
            / c as f64;
        // mean squared first difference over the last quarter of the window
        let tail = t - t / 4;
        let mut vol = 0.0f64;
        for i in tail..t {
            for ch in 0..c {
                let d = (norm[start + i][ch] - norm[start + i - 1][ch]) as f64;
                vol += d * d;
            }
        }
        vol /= ((t - tail) * c) as f64;
        let is_burst = stream.records[start + t].label == Label::Anomaly;
        if is_burst {
            burst_rows.push((sigma2, err2, vol));
            clipped_burst += frac_out;
        } else {
            normal_rows.push((sigma2, err2, vol));
            clipped_normal += frac_out;
        }
        start += 7;
    }
    stats("normal", &normal_rows);
    stats("burst ", &burst_rows);
    println!(
        "out-of-range input fraction: normal {:.5} burst {:.5}",
        clipped_normal / normal_rows.len().max(1) as f64,
        clipped_burst / burst_rows.len().max(1) as f64
    );
}
