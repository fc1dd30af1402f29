pub mod baselines;
pub mod drfamily;
pub mod error;
pub(crate) mod linalg;
pub mod iha;
pub mod irka;
pub mod loewner;
pub mod norms;
pub mod optimize;
pub mod projection;
pub mod statespace;

pub use drfamily::{DrCandidate, DrFamily, GValues};
pub use error::{MorError, Result};
pub use irka::{check_h2_conditions, run_irka, InitPolicy, IrkaConfig, IrkaResult, SampleLog};
pub use loewner::{build_pencil, check_rank_condition, extract_surrogate, LoewnerPencil, Surrogate, SurrogateOrder};
pub use projection::{build_basis, project, realify, InterpolationBasis, ReducedModel, Scaling};
pub use statespace::{CscMatrix, FrequencyGrid, LtiSystem, Spacing, StorageKind, SysMatrix, TransferSample};
