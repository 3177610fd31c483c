//! Navigation and grounding metrics, and the ablation runner.

mod ablation;
mod metrics;

pub use ablation::{
    evaluate_split, plan_rows, run_ablation_suite, run_ablation_suite_on, summarize_row, train_row,
    AblationConfig, AblationRow, MetricsSummary, RowPlan, SplitOutcome, Toggle,
};
pub use metrics::{
    aggregate, bootstrap_ci, compute_metrics, grounding_success, judge, judge_all, mean_std,
    navigation_success, oracle_navigation_success, Judgment, MetricsReport, SuccessRule,
};
