//! Experiment drivers: convergence curves, comparison tables, case studies,
//! Monte-Carlo theory checks and a downstream classifier check.

mod case_study;
mod convergence;
mod datasets;
mod downstream;
mod manifest;
mod output;
mod runner;
mod table;
mod theory;

pub use case_study::{run_case_study, CaseEntry, CaseStudy};
pub use convergence::{
    convergence_csv, convergence_svg, default_k_list, run_convergence, ConvergencePoint, ConvergenceRun,
};
pub use datasets::{dataset_path, load_dataset, DatasetSource};
pub use downstream::{
    downstream_csv, fit_logistic, run_downstream, DownstreamRow, DownstreamRun, LogisticModel, Selector, DEFAULT_LAMBDA,
};
pub use manifest::{derive_seed, RunManifest};
pub use output::{fmt_f64, svg_line_plot, CsvTable, Series};
pub use runner::{Instance, PreparedPool};
pub use table::{run_table, table_summary_csv, table_users_csv, Method, Summary, TableRun, UserFilter, UserScores};
pub use theory::{
    concentration_instance, count_moments, loglog_slope, mmd_rate, quantile, rkhs_bound, rkhs_perturbations,
    run_theory_checks, w1_line_perturbations, w1_line_rate, w1_perturbation_bound, CheckLine, LinePerturbations,
    Perturbations, RateFit, TheoryOptions, DELTAS,
};
