//! Random samples with prescribed regularity and empirical constants of
//! the inequalities.

mod laws;
mod sample;
mod suite;

pub use laws::{extended, Law, LawKind, LAW_IDS};
pub use sample::{generate_sample, generate_spectral, generate_vector, Envelope, SampleSpec};
pub use suite::{
    run_suite, InequalityReport, LawEntry, LawSummary, SampleRecord, SuiteConfig, SuiteResult, MAX_SKIPPED,
    MAX_STABILITY, MIN_SAMPLES, REPORT_COLUMNS,
};
