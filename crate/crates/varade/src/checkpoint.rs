//! Self-describing single-file checkpoints: magic "VRDE", a format version,
//! a payload tag for the model family, the schema and normalizer, then the
//! model parameters. Everything is little-endian; floats are 32-bit IEEE-754
//! unless noted.

use crate::baselines::{IsoForest, IsoForestParams, IsoTree, KnnIndex, TreeNode};
use crate::data::Normalizer;
use crate::error::{Result, VaradeError};
use crate::model::{VaradeConfig, VaradeModel};
use std::io::{Read, Write};
use std::path::Path;

pub const MAGIC: &[u8; 4] = b"VRDE";
pub const FORMAT_VERSION: u32 = 1;
pub const TAG_VARADE: &[u8; 4] = b"VARA";
pub const TAG_KNN: &[u8; 4] = b"KNN\0";
pub const TAG_IFOREST: &[u8; 4] = b"ISOF";

#[derive(Debug, Clone, PartialEq)]
pub enum ModelKind {
    Varade(VaradeModel),
    Knn(KnnIndex),
    IsoForest(IsoForest),
}

impl ModelKind {
    pub fn name(&self) -> &'static str {
        match self {
            ModelKind::Varade(_) => "varade",
            ModelKind::Knn(_) => "knn",
            ModelKind::IsoForest(_) => "iforest",
        }
    }

    pub fn channels(&self) -> usize {
        match self {
            ModelKind::Varade(m) => m.config.channels,
            ModelKind::Knn(k) => k.dim(),
            ModelKind::IsoForest(f) => f.dim(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub normalizer: Normalizer,
    pub model: ModelKind,
}

struct Writer<W: Write> {
    inner: W,
}

impl<W: Write> Writer<W> {
    fn u32(&mut self, v: u32) -> Result<()> {
        self.inner.write_all(&v.to_le_bytes())?;
        Ok(())
    }
    fn u64(&mut self, v: u64) -> Result<()> {
        self.inner.write_all(&v.to_le_bytes())?;
        Ok(())
    }
    fn f32(&mut self, v: f32) -> Result<()> {
        self.inner.write_all(&v.to_le_bytes())?;
        Ok(())
    }
    fn f64(&mut self, v: f64) -> Result<()> {
        self.inner.write_all(&v.to_le_bytes())?;
        Ok(())
    }
    fn f32s(&mut self, vs: &[f32]) -> Result<()> {
        for v in vs {
            self.f32(*v)?;
        }
        Ok(())
    }
}

struct Reader<R: Read> {
    inner: R,
}

impl<R: Read> Reader<R> {
    fn bytes<const N: usize>(&mut self) -> Result<[u8; N]> {
        let mut buf = [0u8; N];
        self.inner.read_exact(&mut buf)?;
        Ok(buf)
    }
    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.bytes()?))
    }
    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.bytes()?))
    }
    fn f32(&mut self) -> Result<f32> {
        Ok(f32::from_le_bytes(self.bytes()?))
    }
    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.bytes()?))
    }
    fn f32s(&mut self, n: usize) -> Result<Vec<f32>> {
        let mut out = Vec::with_capacity(n);
        for _ in 0..n {
            out.push(self.f32()?);
        }
        Ok(out)
    }
}

pub fn save(path: &Path, checkpoint: &Checkpoint) -> Result<()> {
    let file = std::fs::File::create(path)?;
    let mut w = Writer {
        inner: std::io::BufWriter::new(file),
    };
    w.inner.write_all(MAGIC)?;
    w.u32(FORMAT_VERSION)?;
    let norm = &checkpoint.normalizer;
    match &checkpoint.model {
        ModelKind::Varade(model) => {
            w.inner.write_all(TAG_VARADE)?;
            let cfg = &model.config;
            w.u32(cfg.window as u32)?;
            w.u32(cfg.channels as u32)?;
            w.u32(cfg.base_maps as u32)?;
            w.f32(cfg.lambda)?;
            w.f32(cfg.logvar_clamp.0)?;
            w.f32(cfg.logvar_clamp.1)?;
            w.f32s(norm.min())?;
            w.f32s(norm.max())?;
            for p in model.params() {
                w.f32s(p.data())?;
            }
        }
        ModelKind::Knn(index) => {
            w.inner.write_all(TAG_KNN)?;
            w.u32(index.dim() as u32)?;
            w.u32(index.k() as u32)?;
            w.u64(index.len() as u64)?;
            w.f32s(norm.min())?;
            w.f32s(norm.max())?;
            for p in index.points() {
                w.f32s(p)?;
            }
        }
        ModelKind::IsoForest(forest) => {
            w.inner.write_all(TAG_IFOREST)?;
            w.u32(forest.dim() as u32)?;
            w.u32(forest.params.n_trees as u32)?;
            w.u32(forest.params.subsample as u32)?;
            w.u32(forest.psi as u32)?;
            w.f64(forest.params.contamination)?;
            w.f64(forest.threshold)?;
            w.f32s(norm.min())?;
            w.f32s(norm.max())?;
            w.u32(forest.trees.len() as u32)?;
            for tree in &forest.trees {
                w.u32(tree.nodes.len() as u32)?;
                for node in &tree.nodes {
                    match node {
                        TreeNode::Split {
                            feature,
                            value,
                            left,
                            right,
                        } => {
                            w.inner.write_all(&[0u8])?;
                            w.u32(*feature as u32)?;
                            w.f32(*value)?;
                            w.u32(*left as u32)?;
                            w.u32(*right as u32)?;
                        }
                        TreeNode::Leaf { size, depth } => {
                            w.inner.write_all(&[1u8])?;
                            w.u32(*size as u32)?;
                            w.u32(*depth as u32)?;
                        }
                    }
                }
            }
        }
    }
    w.inner.flush()?;
    Ok(())
}

pub fn load(path: &Path) -> Result<Checkpoint> {
    let file = std::fs::File::open(path)?;
    let mut r = Reader {
        inner: std::io::BufReader::new(file),
    };
    let magic: [u8; 4] = r.bytes()?;
    if &magic != MAGIC {
        return Err(VaradeError::Checkpoint(format!(
            "bad magic {magic:?}, expected {MAGIC:?}"
        )));
    }
    let version = r.u32()?;
    if version != FORMAT_VERSION {
        return Err(VaradeError::Checkpoint(format!(
            "unsupported format version {version}"
        )));
    }
    let tag: [u8; 4] = r.bytes()?;
    match &tag {
        t if t == TAG_VARADE => {
            let window = r.u32()? as usize;
            let channels = r.u32()? as usize;
            let base_maps = r.u32()? as usize;
            let lambda = r.f32()?;
            let lo = r.f32()?;
            let hi = r.f32()?;
            let config = VaradeConfig {
                window,
                channels,
                base_maps,
                lambda,
                logvar_clamp: (lo, hi),
            };
            let min = r.f32s(channels)?;
            let max = r.f32s(channels)?;
            let normalizer = Normalizer::from_bounds(min, max)?;
            let mut model = VaradeModel::zeros(config)?;
            for p in model.params_mut() {
                let data = r.f32s(p.len())?;
                p.data_mut().copy_from_slice(&data);
            }
            Ok(Checkpoint {
                normalizer,
                model: ModelKind::Varade(model),
            })
        }
        t if t == TAG_KNN => {
            let dim = r.u32()? as usize;
            let k = r.u32()? as usize;
            let n = r.u64()? as usize;
            let min = r.f32s(dim)?;
            let max = r.f32s(dim)?;
            let normalizer = Normalizer::from_bounds(min, max)?;
            let mut points = Vec::with_capacity(n);
            for _ in 0..n {
                points.push(r.f32s(dim)?);
            }
            let index = crate::baselines::knn_fit(points, k)?;
            Ok(Checkpoint {
                normalizer,
                model: ModelKind::Knn(index),
            })
        }
        t if t == TAG_IFOREST => {
            let dim = r.u32()? as usize;
            let n_trees = r.u32()? as usize;
            let subsample = r.u32()? as usize;
            let psi = r.u32()? as usize;
            let contamination = r.f64()?;
            let threshold = r.f64()?;
            let min = r.f32s(dim)?;
            let max = r.f32s(dim)?;
            let normalizer = Normalizer::from_bounds(min, max)?;
            let tree_count = r.u32()? as usize;
            let mut trees = Vec::with_capacity(tree_count);
            for _ in 0..tree_count {
                let node_count = r.u32()? as usize;
                let mut nodes = Vec::with_capacity(node_count);
                for _ in 0..node_count {
                    let kind: [u8; 1] = r.bytes()?;
                    nodes.push(match kind[0] {
                        0 => TreeNode::Split {
                            feature: r.u32()? as usize,
                            value: r.f32()?,
                            left: r.u32()? as usize,
                            right: r.u32()? as usize,
                        },
                        1 => TreeNode::Leaf {
                            size: r.u32()? as usize,
                            depth: r.u32()? as usize,
                        },
                        other => {
                            return Err(VaradeError::Checkpoint(format!(
                                "unknown tree node kind {other}"
                            )));
                        }
                    });
                }
                trees.push(IsoTree { nodes });
            }
            let forest = IsoForest::from_parts(
                IsoForestParams {
                    n_trees,
                    subsample,
                    contamination,
                },
                trees,
                psi,
                threshold,
                dim,
            );
            Ok(Checkpoint {
                normalizer,
                model: ModelKind::IsoForest(forest),
            })
        }
        other => Err(VaradeError::Checkpoint(format!(
            "unknown payload tag {other:?}"
        ))),
    }
}
