//! Simplify weighted partial MaxSAT instances by round-tripping them through
//! a 0-1 integer linear program.
//!
//! The pipeline has three stages: translate a WCNF instance into a 0-1 ILP,
//! shrink the ILP with a presolve engine (variable fixing, aggregation,
//! redundancy elimination), and re-encode the survivors as a new WCNF
//! instance together with a variable map that lets an optimal solution of the
//! simplified instance be lifted back to the original one.
//!
//! The crate is organised around that flow:
//!
//! - [`types`] / [`instance`] / [`dimacs`]: WCNF data model and file formats,
//! - [`ilp`]: the 0-1 model built from a WCNF instance,
//! - [`presolve`](mod@crate::presolve): the simplification engine,
//! - [`encode`]: CNF re-encoding of the simplified model,
//! - [`reconstruct`](mod@crate::reconstruct): solution lifting and verification,
//! - [`oracle`]: exact reference solvers,
//! - [`pipeline`]: end-to-end orchestration and statistics.

pub mod dimacs;
pub mod encode;
pub mod ilp;
pub mod instance;
pub mod oracle;
pub mod pipeline;
pub mod presolve;
pub mod reconstruct;
pub mod types;

pub use dimacs::{parse_solution, parse_wcnf, write_wcnf, Dialect, SolverOutput};
pub use ilp::{build_ilp, IlpModel};
pub use instance::{Evaluation, WcnfInstance};
pub use oracle::OracleResult;
pub use pipeline::{run_pipeline, GateMode, PipelineConfig, RunStats};
pub use presolve::{presolve, PresolveConfig, SimplifiedModel};
pub use reconstruct::{reconstruct, ReconstructionRecord};
pub use types::{Assignment, Clause, Cost, Lit, Weight};
