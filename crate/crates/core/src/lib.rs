//! SEEDS superpixel segmentation.
//!
//! This crate implements the SEEDS algorithm: superpixels are initialized as a
//! regular grid and refined by hill climbing on a color-histogram objective.
//! Refinement exchanges progressively smaller units between neighboring
//! superpixels — first blocks from a precomputed hierarchy, then individual
//! pixels — so a valid partition exists at every instant and the run can be
//! stopped on a time budget.
//!
//! The main entry point is [`seeds::segment`]; lower-level control (one sweep
//! at a time) is available through [`seeds::Segmenter`]. Benchmark metrics
//! against ground-truth segmentations live in [`metrics`].

pub mod energy;
pub mod error;
pub mod imgproc;
pub mod io;
pub mod metrics;
pub mod partition;
pub mod seeds;

pub use error::{Error, Result};
pub use imgproc::{load_image, quantize, rgb_to_lab, LabImage, Quantizer, RgbImage};
pub use metrics::{evaluate, GroundTruth, MetricsReport};
pub use partition::{BlockHierarchy, MinBlock, Partition};
pub use seeds::{segment, SeedsConfig, SegmentationResult, Segmenter, Traversal};
