// SPDX-License-Identifier: MIT
//! Identification of micro causal effects from summary causal graphs.

pub mod error;
pub mod fixtures;
pub mod graph;
pub mod identify;
pub mod oracle;
pub mod simulate;
pub mod unroll;

pub use error::{Error, Result};
pub use graph::{validate_scg, CycleProfile, SccPartition, Scg, ScgJson};
pub use identify::{identify, AdjustmentSet, CriterionReport, Verdict, VerdictKind};
pub use oracle::{CorpusConfig, SoundnessReport};
pub use simulate::{Dataset, EffectEstimate, LinearDtdscm, VarianceReport};
pub use unroll::{FtDagTemplate, LagSet, MicroQuery, TemporalVar, UnrolledGraph};
