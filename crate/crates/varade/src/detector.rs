//! Streaming inference: a ring buffer of the last T normalized samples and
//! the predicted-variance anomaly score.

use crate::data::{Label, Normalizer};
use crate::error::{Result, VaradeError};
use crate::model::VaradeModel;
use crate::tensor::Tensor;
use std::collections::VecDeque;

/// Ring buffer of C-dimensional samples with capacity T.
#[derive(Debug, Clone)]
pub struct WindowBuffer {
    capacity: usize,
    channels: usize,
    /// time-major storage, `capacity * channels`
    storage: Vec<f32>,
    head: usize,
    fill: usize,
}

impl WindowBuffer {
    pub fn new(capacity: usize, channels: usize) -> Self {
        WindowBuffer {
            capacity,
            channels,
            storage: vec![0.0; capacity * channels],
            head: 0,
            fill: 0,
        }
    }

    pub fn fill_count(&self) -> usize {
        self.fill
    }

    pub fn is_full(&self) -> bool {
        self.fill == self.capacity
    }

    /// Appends a sample, evicting the oldest when full. O(1).
    pub fn push(&mut self, sample: &[f32]) -> Result<()> {
        if sample.len() != self.channels {
            return Err(VaradeError::shape(
                "WindowBuffer::push",
                format!("{} values, buffer expects {}", sample.len(), self.channels),
            ));
        }
        let slot = self.head * self.channels;
        self.storage[slot..slot + self.channels].copy_from_slice(sample);
        self.head = (self.head + 1) % self.capacity;
        if self.fill < self.capacity {
            self.fill += 1;
        }
        Ok(())
    }

    /// The last min(fill, T) samples, oldest first.
    pub fn snapshot(&self) -> Vec<Vec<f32>> {
        let mut out = Vec::with_capacity(self.fill);
        let start = (self.head + self.capacity - self.fill) % self.capacity;
        for i in 0..self.fill {
            let slot = ((start + i) % self.capacity) * self.channels;
            out.push(self.storage[slot..slot + self.channels].to_vec());
        }
        out
    }

    /// Channel-major `[C, T]` view of a full buffer, for the model.
    pub fn window_tensor(&self) -> Result<Tensor> {
        if !self.is_full() {
            return Err(VaradeError::Other("window buffer not yet full".into()));
        }
        let t = self.capacity;
        let c = self.channels;
        let mut data = vec![0.0f32; c * t];
        let start = self.head; // oldest slot when full
        for i in 0..t {
            let slot = ((start + i) % t) * c;
            for ch in 0..c {
                data[ch * t + i] = self.storage[slot + ch];
            }
        }
        Tensor::new(vec![c, t], data)
    }
}

/// (timestamp, anomaly score, optional label).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScoredPoint {
    pub timestamp: f64,
    pub score: f64,
    pub label: Option<Label>,
}

/// Mean over channels of the predicted variance exp(logvar); mu is discarded.
pub fn score(model: &VaradeModel, buffer: &WindowBuffer) -> Result<f64> {
    let window = buffer.window_tensor()?;
    let (_, logvar) = model.forward(&window)?;
    let c = logvar.len() as f64;
    Ok(logvar.data().iter().map(|&v| (v as f64).exp()).sum::<f64>() / c)
}

/// Running counters for one detection stream.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct StreamStats {
    pub emitted: usize,
    pub dropped: usize,
    pub malformed: usize,
}

/// One normalized-sample-at-a-time detector; single consumer.
pub struct StreamDetector<'a> {
    model: &'a VaradeModel,
    normalizer: &'a Normalizer,
    buffer: WindowBuffer,
}

impl<'a> StreamDetector<'a> {
    pub fn new(model: &'a VaradeModel, normalizer: &'a Normalizer) -> Self {
        let cfg = &model.config;
        StreamDetector {
            model,
            normalizer,
            buffer: WindowBuffer::new(cfg.window, cfg.channels),
        }
    }

    /// Feeds one raw sample. Returns a score once the window is full
    /// (warm-up: no scores for the first T-1 samples).
    pub fn push(&mut self, timestamp: f64, raw: &[f32], label: Option<Label>) -> Result<Option<ScoredPoint>> {
        let normalized = self.normalizer.apply(raw)?;
        self.buffer.push(&normalized)?;
        if !self.buffer.is_full() {
            return Ok(None);
        }
        let s = score(self.model, &self.buffer)?;
        Ok(Some(ScoredPoint {
            timestamp,
            score: s,
            label,
        }))
    }
}

/// Where scores go. A sink that reports not-ready exerts backpressure: the
/// stream queues unscored samples up to a bound and then drops the oldest.
pub trait ScoreSink {
    /// Whether the sink can take a score right now.
    fn ready(&mut self) -> bool {
        true
    }
    fn emit(&mut self, point: ScoredPoint);
}

impl<F: FnMut(ScoredPoint)> ScoreSink for F {
    fn emit(&mut self, point: ScoredPoint) {
        self(point);
    }
}

/// A raw record from a sample source; `Err` entries count as malformed and
/// are skipped.
pub type SourceItem = Result<(f64, Vec<f32>, Option<Label>)>;

/// Drives a full stream: normalize, window, score, emit. While the sink is
/// stalled incoming samples queue up to `pending_capacity`; beyond that the
/// oldest unscored samples are dropped and counted.
pub fn detect_stream<I, S>(
    model: &VaradeModel,
    normalizer: &Normalizer,
    source: I,
    sink: &mut S,
    pending_capacity: usize,
) -> Result<StreamStats>
where
    I: IntoIterator<Item = SourceItem>,
    S: ScoreSink + ?Sized,
{
    let mut detector = StreamDetector::new(model, normalizer);
    let mut stats = StreamStats::default();
    let mut pending: VecDeque<(f64, Vec<f32>, Option<Label>)> = VecDeque::new();
    let capacity = pending_capacity.max(1);

    let mut process = |pending: &mut VecDeque<(f64, Vec<f32>, Option<Label>)>,
                       sink: &mut S,
                       stats: &mut StreamStats| {
        while sink.ready() {
            let Some((ts, raw, label)) = pending.pop_front() else { break };
            match detector.push(ts, &raw, label) {
                Ok(Some(point)) => {
                    sink.emit(point);
                    stats.emitted += 1;
                }
                Ok(None) => {}
                Err(_) => stats.malformed += 1,
            }
        }
    };

    for item in source {
        let (ts, raw, label) = match item {
            Ok(rec) => rec,
            Err(_) => {
                stats.malformed += 1;
                continue;
            }
        };
        pending.push_back((ts, raw, label));
        while pending.len() > capacity {
            pending.pop_front();
            stats.dropped += 1;
        }
        process(&mut pending, sink, &mut stats);
    }
    // final drain once the source ends
    process(&mut pending, sink, &mut stats);
    Ok(stats)
}
