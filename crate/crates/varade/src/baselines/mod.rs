//! Classical edge-friendly detectors used for comparison: exact kNN
//! max-distance and Isolation Forest.

mod iforest;
mod knn;

pub use iforest::{average_path_length, iso_fit, IsoForest, IsoForestParams, IsoTree, TreeNode};
pub use knn::{knn_fit, KnnIndex, DEFAULT_K};
