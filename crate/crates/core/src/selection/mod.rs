//! The knockoff filter: lasso statistics, thresholds and error metrics.

pub mod lasso;
mod stats;
mod threshold;

pub use lasso::{fit_lasso, LassoFit, LassoOptions};
pub use stats::{coef_diff_stats, LambdaRule, WStats};
pub use threshold::{fdr_power, knockoff_threshold, SelectionResult};
