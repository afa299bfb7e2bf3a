//! Classical reference classifiers over hand-crafted window features:
//! logistic regression, a random forest, and gradient-boosted trees.

pub mod features;
pub mod gbm;
pub mod logreg;
pub mod tree;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum BaselineError {
    #[error("training data contains only one class")]
    SingleClassInput,
    #[error("empty training data")]
    EmptyInput,
    #[error("feature row has {got} values, expected {expected}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}

pub(crate) fn check_matrix(x: &[Vec<f64>], y_len: usize) -> Result<usize, BaselineError> {
    if x.is_empty() || y_len == 0 {
        return Err(BaselineError::EmptyInput);
    }
    if x.len() != y_len {
        return Err(BaselineError::DimensionMismatch { expected: x.len(), got: y_len });
    }
    let dim = x[0].len();
    for row in x {
        if row.len() != dim {
            return Err(BaselineError::DimensionMismatch { expected: dim, got: row.len() });
        }
    }
    if dim == 0 {
        return Err(BaselineError::EmptyInput);
    }
    Ok(dim)
}

pub(crate) fn check_two_classes(y: &[bool]) -> Result<(), BaselineError> {
    if y.iter().all(|&v| v) || y.iter().all(|&v| !v) {
        return Err(BaselineError::SingleClassInput);
    }
    Ok(())
}

pub use features::{extract_features, feature_names, FEATURE_COUNT};
pub use gbm::{GbmConfig, GradientBoosting};
pub use logreg::{LogisticRegression, LogregConfig};
pub use tree::{ForestConfig, RandomForest, RegressionTree, TreeConfig};
