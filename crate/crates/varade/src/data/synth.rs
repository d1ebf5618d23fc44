//! Seeded synthetic 86-channel industrial stream: repeating 30-action cycles
//! with smooth joint kinematics, quaternion orientations, correlated power
//! draw, and injected collision bursts on acceleration/gyro + power channels.

use crate::data::quat::euler_to_quaternion;
use crate::data::schema::{CHANNEL_COUNT, JOINT_COUNT};
use crate::data::{Label, LabeledStream, SampleRecord};
use crate::error::{Result, VaradeError};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

pub const ACTION_COUNT: usize = 30;

/// Actions crossfade over this window so the stream has no step
/// discontinuities at transitions — the machine moves continuously.
const BLEND_S: f64 = 0.4;

#[derive(Debug, Clone, PartialEq)]
pub struct SynthConfig {
    /// Number of full 30-action cycles.
    pub cycles: usize,
    pub sample_rate_hz: f64,
    /// Collision bursts to inject.
    pub anomalies: usize,
    pub seed: u64,
    /// Burst duration bounds, seconds.
    pub burst_min_s: f64,
    pub burst_max_s: f64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            cycles: 4,
            sample_rate_hz: 200.0,
            anomalies: 0,
            seed: 0,
            burst_min_s: 0.8,
            burst_max_s: 2.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthReport {
    pub total_samples: usize,
    pub anomaly_samples: usize,
    pub bursts: usize,
    pub label_fraction: f64,
}

struct JointProfile {
    euler_amp: [f64; 3],
    euler_freq: [f64; 3],
    euler_phase: [f64; 3],
    acc_amp: [f64; 3],
    acc_freq: [f64; 3],
    acc_phase: [f64; 3],
    /// Per-action vibration level; varies so detectors see a continuum of
    /// normal volatility.
    acc_noise: f64,
    gyro_noise: f64,
    /// Mechanical vibration riding on the smooth motion; some actions are
    /// nearly vibration-free, others hum visibly.
    vib_amp_acc: f64,
    vib_amp_gyro: f64,
    vib_freq: f64,
    vib_phase: f64,
    /// Slow modulation of the vibration/noise level, so volatility drifts
    /// within an action instead of being a per-action constant.
    env_freq: f64,
    env_phase: f64,
}

struct ActionProfile {
    duration_s: f64,
    joints: Vec<JointProfile>,
}

fn action_profiles(seed: u64) -> Vec<ActionProfile> {
    // derived from the seed only, so the repertoire is stable across cycles
    let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_mul(0x9e37_79b9).wrapping_add(1));
    (0..ACTION_COUNT)
        .map(|_| ActionProfile {
            duration_s: rng.gen_range(1.5..3.0),
            joints: (0..JOINT_COUNT)
                .map(|_| JointProfile {
                    euler_amp: [
                        rng.gen_range(10.0..60.0),
                        rng.gen_range(5.0..40.0),
                        rng.gen_range(10.0..60.0),
                    ],
                    euler_freq: [
                        rng.gen_range(0.1..0.4),
                        rng.gen_range(0.1..0.4),
                        rng.gen_range(0.1..0.4),
                    ],
                    euler_phase: [
                        rng.gen_range(0.0..std::f64::consts::TAU),
                        rng.gen_range(0.0..std::f64::consts::TAU),
                        rng.gen_range(0.0..std::f64::consts::TAU),
                    ],
                    acc_amp: [
                        rng.gen_range(0.5..3.0),
                        rng.gen_range(0.5..3.0),
                        rng.gen_range(0.5..3.0),
                    ],
                    acc_freq: [
                        rng.gen_range(0.2..0.8),
                        rng.gen_range(0.2..0.8),
                        rng.gen_range(0.2..0.8),
                    ],
                    acc_phase: [
                        rng.gen_range(0.0..std::f64::consts::TAU),
                        rng.gen_range(0.0..std::f64::consts::TAU),
                        rng.gen_range(0.0..std::f64::consts::TAU),
                    ],
                    acc_noise: rng.gen_range(0.05..0.3),
                    gyro_noise: rng.gen_range(2.0..10.0),
                    vib_amp_acc: rng.gen_range(0.0..0.3),
                    vib_amp_gyro: rng.gen_range(0.0..8.0),
                    vib_freq: rng.gen_range(2.0..9.0),
                    vib_phase: rng.gen_range(0.0..std::f64::consts::TAU),
                    env_freq: rng.gen_range(0.03..0.15),
                    env_phase: rng.gen_range(0.0..std::f64::consts::TAU),
                })
                .collect(),
        })
        .collect()
}

/// Deterministic per-joint signal components at time `t` (noise applied by
/// the caller so crossfaded actions share one draw per sample).
struct JointState {
    euler: [f64; 3],
    acc: [f64; 3],
    gyro: [f64; 3],
    acc_noise_scale: f64,
    gyro_noise_scale: f64,
}

fn joint_det(joint: &JointProfile, t: f64) -> JointState {
    let env = 0.2
        + 0.8 * (0.5 + 0.5 * (std::f64::consts::TAU * joint.env_freq * t + joint.env_phase).sin());
    let wv = std::f64::consts::TAU * joint.vib_freq;
    let mut st = JointState {
        euler: [0.0; 3],
        acc: [0.0; 3],
        gyro: [0.0; 3],
        acc_noise_scale: env * joint.acc_noise,
        gyro_noise_scale: env * joint.gyro_noise,
    };
    for axis in 0..3 {
        let w = std::f64::consts::TAU * joint.euler_freq[axis];
        let ph = w * t + joint.euler_phase[axis];
        let wa = std::f64::consts::TAU * joint.acc_freq[axis];
        let vib = (wv * t + joint.vib_phase + 2.1 * axis as f64).sin();
        st.euler[axis] = joint.euler_amp[axis] * ph.sin();
        st.gyro[axis] = joint.euler_amp[axis] * w * ph.cos() + env * joint.vib_amp_gyro * vib;
        st.acc[axis] =
            joint.acc_amp[axis] * (wa * t + joint.acc_phase[axis]).sin() + env * joint.vib_amp_acc * vib;
    }
    st
}

fn mix(a: &JointState, b: &JointState, w: f64) -> JointState {
    let lerp = |x: f64, y: f64| x + (y - x) * w;
    let lerp3 = |x: &[f64; 3], y: &[f64; 3]| [lerp(x[0], y[0]), lerp(x[1], y[1]), lerp(x[2], y[2])];
    JointState {
        euler: lerp3(&a.euler, &b.euler),
        acc: lerp3(&a.acc, &b.acc),
        gyro: lerp3(&a.gyro, &b.gyro),
        acc_noise_scale: lerp(a.acc_noise_scale, b.acc_noise_scale),
        gyro_noise_scale: lerp(a.gyro_noise_scale, b.gyro_noise_scale),
    }
}

struct Burst {
    start: usize,
    len: usize,
    joints: Vec<usize>,
    freq_hz: f64,
    acc_amp: f64,
    gyro_amp: f64,
    power_amp: f64,
    phase: f64,
}

fn place_bursts(cfg: &SynthConfig, total: usize, rng: &mut ChaCha8Rng) -> Result<Vec<Burst>> {
    let min_len = (cfg.burst_min_s * cfg.sample_rate_hz).round().max(1.0) as usize;
    let max_len = (cfg.burst_max_s * cfg.sample_rate_hz).round().max(1.0) as usize;
    let mut occupied: Vec<(usize, usize)> = Vec::new();
    let mut bursts = Vec::with_capacity(cfg.anomalies);
    let mut attempts = 0usize;
    let attempt_cap = 1000 * cfg.anomalies.max(1);
    while bursts.len() < cfg.anomalies {
        attempts += 1;
        if attempts > attempt_cap {
            return Err(VaradeError::Config(format!(
                "could not place {} non-overlapping bursts in {} samples",
                cfg.anomalies, total
            )));
        }
        let len = rng.gen_range(min_len..=max_len);
        if len + 1 >= total {
            return Err(VaradeError::Config(
                "stream too short for requested burst length".into(),
            ));
        }
        let start = rng.gen_range(0..total - len);
        // keep one clean sample between bursts
        if occupied
            .iter()
            .any(|&(s, l)| start < s + l + 1 && s < start + len + 1)
        {
            continue;
        }
        occupied.push((start, len));
        let n_joints = rng.gen_range(1..=3usize);
        let mut joints = Vec::new();
        while joints.len() < n_joints {
            let j = rng.gen_range(0..JOINT_COUNT);
            if !joints.contains(&j) {
                joints.push(j);
            }
        }
        bursts.push(Burst {
            start,
            len,
            joints,
            freq_hz: rng.gen_range(0.25..0.45) * cfg.sample_rate_hz,
            acc_amp: rng.gen_range(1.3..2.0),
            gyro_amp: rng.gen_range(30.0..60.0),
            power_amp: rng.gen_range(10.0..24.0),
            phase: rng.gen_range(0.0..std::f64::consts::TAU),
        });
    }
    bursts.sort_by_key(|b| b.start);
    Ok(bursts)
}

pub fn synth_generate(cfg: &SynthConfig) -> Result<(LabeledStream, SynthReport)> {
    if cfg.cycles == 0 {
        return Err(VaradeError::Config("cycles must be >= 1".into()));
    }
    if cfg.sample_rate_hz <= 0.0 {
        return Err(VaradeError::Config("sample rate must be positive".into()));
    }
    if cfg.burst_min_s > cfg.burst_max_s || cfg.burst_min_s <= 0.0 {
        return Err(VaradeError::Config("invalid burst duration range".into()));
    }
    let actions = action_profiles(cfg.seed);
    let cycle_s: f64 = actions.iter().map(|a| a.duration_s).sum();
    let total_s = cycle_s * cfg.cycles as f64;
    let total = (total_s * cfg.sample_rate_hz).floor() as usize;
    if total == 0 {
        return Err(VaradeError::Config("configuration yields an empty stream".into()));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let bursts = place_bursts(cfg, total, &mut rng)?;
    let noise = Normal::new(0.0f64, 1.0).expect("unit normal");

    // cumulative action boundaries within one cycle
    let mut bounds = Vec::with_capacity(ACTION_COUNT);
    let mut acc_t = 0.0;
    for a in &actions {
        acc_t += a.duration_s;
        bounds.push(acc_t);
    }

    let mut records = Vec::with_capacity(total);
    let mut burst_iter = bursts.iter().peekable();
    let mut active: Option<&Burst> = None;
    let mut anomaly_samples = 0usize;

    for i in 0..total {
        let t = i as f64 / cfg.sample_rate_hz;
        let t_cycle = t % cycle_s;
        let action = bounds.iter().position(|&b| t_cycle < b).unwrap_or(ACTION_COUNT - 1);
        let prof = &actions[action];

        if let Some(b) = active {
            if i >= b.start + b.len {
                active = None;
            }
        }
        if active.is_none() {
            if let Some(b) = burst_iter.peek() {
                if i >= b.start {
                    active = Some(burst_iter.next().expect("peeked"));
                }
            }
        }

        // crossfade out of the previous action for the first BLEND_S seconds
        let action_start = if action == 0 { 0.0 } else { bounds[action - 1] };
        let prev_action = (action + ACTION_COUNT - 1) % ACTION_COUNT;
        let tau = t_cycle - action_start;
        let blend = if tau < BLEND_S {
            let u = tau / BLEND_S;
            Some(u * u * (3.0 - 2.0 * u))
        } else {
            None
        };

        let mut values = vec![0.0f32; CHANNEL_COUNT];
        values[0] = match blend {
            Some(w) => (prev_action as f64 + (action as f64 - prev_action as f64) * w) as f32,
            None => action as f32,
        };
        let mut motion = 0.0f64;
        for j in 0..prof.joints.len() {
            let base = 1 + j * 11;
            let mut st = joint_det(&prof.joints[j], t);
            if let Some(w) = blend {
                let prev = joint_det(&actions[prev_action].joints[j], t);
                st = mix(&prev, &st, w);
            }
            let mut euler = st.euler;
            let mut gyro = st.gyro;
            let mut acc = st.acc;
            for axis in 0..3 {
                euler[axis] += 0.05 * noise.sample(&mut rng);
                gyro[axis] += st.gyro_noise_scale * noise.sample(&mut rng);
                acc[axis] += st.acc_noise_scale * noise.sample(&mut rng);
            }
            if let Some(b) = active {
                if b.joints.contains(&j) {
                    let wb = std::f64::consts::TAU * b.freq_hz;
                    for axis in 0..3 {
                        let s = (wb * t + b.phase + axis as f64).sin();
                        acc[axis] += b.acc_amp * s + 0.2 * b.acc_amp * noise.sample(&mut rng);
                        gyro[axis] += b.gyro_amp * s + 0.2 * b.gyro_amp * noise.sample(&mut rng);
                    }
                }
            }
            let q = euler_to_quaternion(euler[0], euler[1], euler[2]);
            values[base] = acc[0] as f32;
            values[base + 1] = acc[1] as f32;
            values[base + 2] = acc[2] as f32;
            values[base + 3] = gyro[0] as f32;
            values[base + 4] = gyro[1] as f32;
            values[base + 5] = gyro[2] as f32;
            values[base + 6] = q.0 as f32;
            values[base + 7] = q.1 as f32;
            values[base + 8] = q.2 as f32;
            values[base + 9] = q.3 as f32;
            values[base + 10] =
                (25.0 + 1.5 * j as f64 + 0.3 * (t / 600.0 * std::f64::consts::TAU).sin()
                    + 0.01 * noise.sample(&mut rng)) as f32;
            motion += gyro.iter().map(|g| g.abs()).sum::<f64>();
        }

        let mut power = 150.0 + 0.2 * motion + 2.0 * noise.sample(&mut rng);
        if let Some(b) = active {
            power += b.power_amp * (1.0 + 0.2 * noise.sample(&mut rng));
            anomaly_samples += 1;
        }
        let voltage = 230.0 + 0.5 * noise.sample(&mut rng);
        let frequency = 50.0 + 0.01 * noise.sample(&mut rng);
        let pf = (0.85 + 0.05 * (t / 30.0 * std::f64::consts::TAU).sin()
            + 0.005 * noise.sample(&mut rng))
        .clamp(0.2, 0.999);
        let phase_angle = pf.acos().to_degrees();
        let reactive = power * phase_angle.to_radians().tan();
        let current = power / (voltage * pf);
        let energy_rate = power / 3600.0;

        let base = 1 + JOINT_COUNT * 11;
        values[base] = current as f32;
        values[base + 1] = frequency as f32;
        values[base + 2] = phase_angle as f32;
        values[base + 3] = power as f32;
        values[base + 4] = pf as f32;
        values[base + 5] = reactive as f32;
        values[base + 6] = voltage as f32;
        values[base + 7] = energy_rate as f32;

        records.push(SampleRecord {
            timestamp: t,
            values,
            label: if active.is_some() { Label::Anomaly } else { Label::Normal },
        });
    }

    let report = SynthReport {
        total_samples: total,
        anomaly_samples,
        bursts: bursts.len(),
        label_fraction: anomaly_samples as f64 / total as f64,
    };
    Ok((LabeledStream { records }, report))
}
