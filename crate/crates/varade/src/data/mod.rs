//! Sensor-stream ingestion, normalization, quaternion preprocessing, and the
//! synthetic industrial stream generator.

mod csv;
mod normalize;
mod quat;
mod schema;
mod synth;

pub use csv::{load_csv, write_csv, CsvReader};
pub use normalize::Normalizer;
pub use quat::euler_to_quaternion;
pub use schema::{channel_names, CHANNEL_COUNT, JOINT_COMPONENTS, JOINT_COUNT, POWER_CHANNELS};
pub use synth::{synth_generate, SynthConfig, SynthReport};

/// Per-sample anomaly label.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Label {
    Normal,
    Anomaly,
}

/// One timestep of the sensor vector.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleRecord {
    pub timestamp: f64,
    pub values: Vec<f32>,
    pub label: Label,
}

/// Ordered samples with strictly increasing timestamps.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct LabeledStream {
    pub records: Vec<SampleRecord>,
}

impl LabeledStream {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn channels(&self) -> usize {
        self.records.first().map_or(0, |r| r.values.len())
    }

    pub fn anomaly_count(&self) -> usize {
        self.records.iter().filter(|r| r.label == Label::Anomaly).count()
    }

    pub fn has_labels(&self) -> bool {
        self.anomaly_count() > 0
    }
}
