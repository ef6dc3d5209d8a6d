//! Ultimate ruin probabilities for a discrete-time risk model whose claim amounts
//! alternate between two seasons, with dependence inside each pair of periods.

pub mod engine;
pub mod error;
pub mod joint;
pub mod marginal;
pub mod oracle;
pub mod precision;
pub mod reference;

pub use engine::{
    classify, solve, survival_table, survival_table_with, EngineOptions, ModelClass, RuinTable,
    Solution,
};
pub use error::{Result, RuinError};
pub use joint::{BuildOptions, Correlation, DependenceSpec, JointMatrix};
pub use marginal::{MarginalDist, MarginalSpec};
pub use precision::{MeanValue, Precision};
