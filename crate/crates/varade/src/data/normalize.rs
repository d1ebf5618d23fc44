//! Per-channel min-max normalization into [-1, 1].

use crate::data::LabeledStream;
use crate::error::{Result, VaradeError};

#[derive(Debug, Clone, PartialEq)]
pub struct Normalizer {
    min: Vec<f32>,
    max: Vec<f32>,
}

impl Normalizer {
    pub fn from_bounds(min: Vec<f32>, max: Vec<f32>) -> Result<Self> {
        if min.len() != max.len() {
            return Err(VaradeError::shape("Normalizer", "min/max length mismatch"));
        }
        if min.iter().zip(&max).any(|(a, b)| a > b) {
            return Err(VaradeError::Config("normalizer min exceeds max".into()));
        }
        Ok(Normalizer { min, max })
    }

    pub fn fit(stream: &LabeledStream) -> Result<Self> {
        let first = stream
            .records
            .first()
            .ok_or_else(|| VaradeError::Config("cannot fit normalizer on empty stream".into()))?;
        let c = first.values.len();
        let mut min = vec![f32::INFINITY; c];
        let mut max = vec![f32::NEG_INFINITY; c];
        for r in &stream.records {
            for (i, &v) in r.values.iter().enumerate() {
                min[i] = min[i].min(v);
                max[i] = max[i].max(v);
            }
        }
        Ok(Normalizer { min, max })
    }

    pub fn channels(&self) -> usize {
        self.min.len()
    }

    pub fn min(&self) -> &[f32] {
        &self.min
    }

    pub fn max(&self) -> &[f32] {
        &self.max
    }

    /// Maps x to 2*(x-min)/(max-min) - 1, clamped to [-1, 1]. Channels with
    /// a degenerate range map to 0.
    pub fn apply(&self, sample: &[f32]) -> Result<Vec<f32>> {
        if sample.len() != self.min.len() {
            return Err(VaradeError::shape(
                "normalize_apply",
                format!("{} values, normalizer has {}", sample.len(), self.min.len()),
            ));
        }
        let mut out = Vec::with_capacity(sample.len());
        for ((&x, &lo), &hi) in sample.iter().zip(&self.min).zip(&self.max) {
            let span = hi - lo;
            if span <= 0.0 {
                out.push(0.0);
            } else {
                out.push((2.0 * (x - lo) / span - 1.0).clamp(-1.0, 1.0));
            }
        }
        Ok(out)
    }
}
