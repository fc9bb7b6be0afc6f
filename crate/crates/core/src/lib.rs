//! ECG quality gating, feature engineering, paired pre/post statistics and
//! nested cross-validated random-forest risk models for 12-lead recordings.

pub mod delineation;
pub mod dsp;
pub mod features;
pub mod hrv;
pub mod learn;
pub mod morphology;
pub mod qrs;
pub mod quality;
pub mod recordio;
pub mod stats;
pub mod synth;

pub use features::{FeatureConfig, FeatureVector};
pub use learn::{CohortRow, CohortTable, CvConfig, CvReport, FeatureSet, LearnError};
pub use qrs::PeakList;
pub use quality::{Phase, ScanConfig, ScoredSegment};
pub use recordio::{CohortManifest, Format, ManifestEntry, RecordError, Recording, Sex, LEADS};
pub use stats::{VolcanoConfig, VolcanoRow};
pub use synth::{GroundTruth, SynthSpec};
