//! On-disk formats and the synthetic data generator.

mod pack;
mod stats;
mod synth;

pub use pack::{
    read_feature_pack, read_manifest, write_feature_pack, write_raw_pack, FeaturePack,
    FeaturePackManifest, FEATURES_FILE, FORMAT_VERSION, LABELS_FILE, MANIFEST_FILE,
};
pub use stats::{read_norm_stats, write_norm_stats};
pub use synth::{synth_clusters, SynthData, SynthSpec};
