//! Fractional wavelet scattering: chirp-modulated convolution, Morlet filter
//! banks, scattering cascades, patch features, a PCA subspace classifier and
//! object-level segmentation scores.

pub mod classifier;
pub mod error;
pub mod features;
pub mod filterbank;
pub mod fixtures;
pub mod frwt;
pub mod grid;
pub mod io;
pub mod metrics;
pub mod scattering;

pub use classifier::{classify, evaluate, train_pca, Classification, ErrorTable, EvalProtocol, PcaClassModel};
pub use error::{Error, Result};
pub use features::{assemble_q, extract_patches, normalize_patch, FeatureTensor, LabeledPatch, MultiImage, PatchConfig};
pub use filterbank::{build_morlet_bank, littlewood_paley, FilterBank, FilterBankSpec, LPReport};
pub use frwt::{frac_convolve, frwt, FrwtOutput};
pub use grid::{ComplexImage, FractionalOrderPair, RealImage};
pub use metrics::{
    f1_score, hausdorff, match_objects, object_dice, object_hausdorff, rank_aggregate, InstanceMask, MatchTable,
    MethodScores, RankRow, TieRule,
};
pub use scattering::{enumerate_paths, scatter, Path, PathStep, ScatteringResult};
