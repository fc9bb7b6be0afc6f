//! Risk-model protocol: preprocessing, mRMR ranking, random forests,
//! hyperparameter search, ROC analysis and nested cross-validation.

pub mod cohort;
pub mod cv;
pub mod forest;
pub mod mrmr;
pub mod preprocess;
pub mod roc;
pub mod search;

use thiserror::Error;

pub use cv::{
    nested_cv, stratified_folds, CohortRow, CohortTable, CvConfig, CvReport, FeatureSet, FitEvent, FoldReport, PatientScore,
    DEFAULT_K_GRID,
};
pub use forest::{rf_train, ClassWeight, Forest, HyperParams, SplitFeatures};
pub use mrmr::{mrmr_select, MrmrForm};
pub use preprocess::{MedianImputer, Standardizer};
pub use roc::{roc_auc, vote, Aggregation, Roc, RocPoint};
pub use search::{hyper_search, Dim, SearchResult};

#[derive(Debug, Error, PartialEq)]
pub enum LearnError {
    #[error("ROC needs both classes")]
    OneClassOnly,
    #[error("training labels contain a single class")]
    SingleClassTraining,
    #[error("no feature columns to train on")]
    NoFeatures,
    #[error("hyperparameters out of range: {0}")]
    InvalidHyperParams(String),
    #[error("search budget {0} is below the minimum of 10")]
    BudgetTooSmall(usize),
    #[error("need at least {required} labeled patients, got {found}")]
    TooFewPatients { found: usize, required: usize },
    #[error("patient {0} has rows with different labels")]
    InconsistentLabels(String),
    #[error("patient {0} has more than 5 segments in one phase")]
    TooManySegments(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("every outer test fold held a single class")]
    AllFoldsDegenerate,
}

/// Independent 64-bit stream seed from a master seed (SplitMix64 finalizer).
pub fn derive_seed(master: u64, stream: u64) -> u64 {
    let mut z = master ^ stream.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
