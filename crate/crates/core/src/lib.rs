//! Shape recognition from binary masks.
//!
//! The pipeline turns a segmented silhouette into a small labeled graph and
//! compares shapes by an order-penalized earth mover's distance:
//!
//! 1. [`gng`] adapts a growing neural gas graph to the mask.
//! 2. [`analysis`] walks the graph's outer boundary and detects bulges
//!    (fingers, sticking-outs, the wrist) from boolean walk algebra.
//! 3. [`features`] measures each bulge and packs the shape into a fixed
//!    6x7 signature.
//! 4. [`iemd`] scores signature pairs with an index-weighted transport
//!    distance, and [`classify`] runs k-NN evaluation protocols over
//!    labeled datasets.
//!
//! [`ingest`] provides mask extraction from depth maps, dataset layouts and
//! a synthetic hand generator used heavily by the test suite. Everything is
//! deterministic given a seed.

pub mod analysis;
pub mod boolmat;
pub mod classify;
pub mod features;
pub mod geometry;
pub mod gng;
pub mod iemd;
pub mod ingest;
pub mod mask;

pub use analysis::{detect_bulges, extract_boundary, BoundaryCycle, Bulge, BulgeKind};
pub use classify::{knn_classify, run_protocol, ClassifyError, ConfusionMatrix, LabeledSet, Protocol, ProtocolReport};
pub use features::{
    build_signature, bulge_descriptors, compute_s1_s2, extract_signature, read_signatures,
    write_signatures, BulgeDescriptor, Signature,
};
pub use geometry::Point2;
pub use gng::{train_gng, train_gng_mapped, GngError, GngGraph, GngParams};
pub use iemd::{brute_force_iemd, cost_matrix, iemd, solve_flow, CostMatrix, FlowMatrix};
pub use ingest::{load_dataset, read_mask_png, segment_depth, synth_hand, write_mask_png, Dataset, DepthMap, IngestError, Layout};
pub use mask::BinaryMask;
