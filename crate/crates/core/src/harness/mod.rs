//! Experiment orchestration: grids of models over domains, the content/position sweep,
//! shuffled training, knowledge transfer, policy-gradient stacking, and reports.

mod diagnostics;
mod registry;
mod report;
mod run;
mod spec;

pub use diagnostics::{run_diagnostics, PLOT_SCRIPT};
pub use registry::{lookup_domain, DomainInfo, DOMAINS, MIX_REFERENCE, POSITION_ONLY_TEXT_R1};
pub use report::{CellRecord, Report, ReportPlan};
pub use run::{rebuild_report, run_experiment, train_model, RunSummary};
pub use spec::{
    Coef, DataSection, ExperimentKind, ExperimentSection, ExperimentSpec, GridModel, MixPair,
    SyntheticData,
};
