//! Ego-centric bird's-eye-view scene grids and the token pipeline built on them.
//!
//! Scenes (an ego pose plus labelled object points) are binned into an
//! `n x m` [`AreaMatrix`] around the ego vehicle, two consecutive matrices are
//! serialized into a delimiter grammar, masked-span training tasks are built
//! from the serialized pairs, and predicted spans are scored against gold.
//!
//! The crate is `no_std` and only needs `alloc`. File formats, dataset export
//! and the command-line front end live in the `bevscene` crate.

#![no_std]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod baselines;
pub mod codec;
pub mod geometry;
pub mod grid;
pub mod masking;
pub mod metrics;
pub mod raster;
pub mod scene;
pub mod split;
pub mod synth;
pub mod taxonomy;

pub use baselines::{persistence_predict, BaselineError, CellFrequencyModel};
pub use codec::{
    CellSlot, CodecError, DecodedPair, DecodedScene, PairSide, ParseMode, ParsedTargets,
    SceneCodec, SpanFlags, SpanTargets, Special, Token, TokenSequence, MAX_SENTINELS,
};
pub use geometry::{to_ego_frame, EgoPoint, EgoPose, GeometryError};
pub use grid::{assign_cell, CellIndex, GridError, GridSpec};
pub use masking::{
    central_region, derive_seed, sequence_pairs, splice, CentralRegion, MaskError, MaskPlan,
    MaskTask, MaskedSample, PairError, ScenePair, TaskBuilder,
};
pub use metrics::{aggregate, score, Counts, MetricsError, MetricsReport, Prf};
pub use raster::{rasterize, AreaMatrix, LabelSet, RasterError};
pub use scene::{
    link_sequence, pair_metadata, LinkedSequence, PairMeta, Scene, SceneError, SceneObject,
};
pub use split::{split, SplitError, SplitSpec, Splits};
pub use synth::{synth_sequences, Sequence, SynthConfig, SynthError};
pub use taxonomy::{Kind, LabelId, Taxonomy, TaxonomyError, EGO_LABEL};
