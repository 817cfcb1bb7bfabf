// SPDX-License-Identifier: MIT
//! Compatible full-time DAGs: lag templates, finite unrollings, d-separation and
//! possible descendants.
//!
//! Time is an integer offset relative to the outcome time `t`: offset `0` is `t`,
//! negative offsets are the past. A query with lag `gamma` and maximum lag
//! `gamma_max` works inside the window `[-(gamma + gamma_max), 0]`.

mod posdesc;
mod template;
mod unrolled;

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::Scg;

pub use posdesc::{possible_descendants, possible_descendants_bruteforce};
pub use template::{
    count_compatible_templates, densest_count, densest_templates, densest_templates_capped,
    enumerate_compatible_templates, macro_projection, FtDagTemplate, LagSet, TemplateJson, DEFAULT_TEMPLATE_CAP,
    MAX_LAG,
};
pub use unrolled::UnrolledGraph;

/// A micro variable: one series at one time offset.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct TemporalVar {
    pub series: usize,
    pub offset: i32,
}

impl TemporalVar {
    pub const fn new(series: usize, offset: i32) -> Self {
        TemporalVar { series, offset }
    }

    /// `X@-1` style label.
    pub fn label(&self, g: &Scg) -> String {
        format!("{}@{}", g.name(self.series), self.offset)
    }

    /// `x_{t-1}` style label used in estimand renderings.
    pub fn time_label(&self, g: &Scg) -> String {
        let name = g.name(self.series).to_lowercase();
        match self.offset {
            0 => format!("{name}_t"),
            o if o < 0 => format!("{name}_{{t{o}}}"),
            o => format!("{name}_{{t+{o}}}"),
        }
    }
}

impl fmt::Display for TemporalVar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#{}@{}", self.series, self.offset)
    }
}

/// The effect of `treatment` at `t - gamma` on `outcome` at `t`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct MicroQuery {
    pub treatment: usize,
    pub outcome: usize,
    pub gamma: u32,
    pub gamma_max: u32,
}

/// Wire form: `{"treatment":"X","outcome":"Y","gamma":1,"gamma_max":1}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MicroQueryJson {
    pub treatment: String,
    pub outcome: String,
    pub gamma: u32,
    pub gamma_max: u32,
}

impl MicroQuery {
    pub fn new(treatment: usize, outcome: usize, gamma: u32, gamma_max: u32) -> Self {
        MicroQuery {
            treatment,
            outcome,
            gamma,
            gamma_max,
        }
    }

    /// Resolves series names against `g` and checks basic well-formedness.
    pub fn named(g: &Scg, treatment: &str, outcome: &str, gamma: u32, gamma_max: u32) -> Result<Self> {
        let q = MicroQuery::new(g.node(treatment)?, g.node(outcome)?, gamma, gamma_max);
        q.validate(g)?;
        Ok(q)
    }

    pub fn from_json(g: &Scg, s: &str) -> Result<Self> {
        let raw: MicroQueryJson = serde_json::from_str(s)?;
        MicroQuery::named(g, &raw.treatment, &raw.outcome, raw.gamma, raw.gamma_max)
    }

    pub fn to_wire(&self, g: &Scg) -> MicroQueryJson {
        MicroQueryJson {
            treatment: g.name(self.treatment).to_string(),
            outcome: g.name(self.outcome).to_string(),
            gamma: self.gamma,
            gamma_max: self.gamma_max,
        }
    }

    pub fn to_json(&self, g: &Scg) -> String {
        serde_json::to_string(&self.to_wire(g)).expect("query serialization is infallible")
    }

    pub fn validate(&self, g: &Scg) -> Result<()> {
        g.check_node(self.treatment)?;
        g.check_node(self.outcome)?;
        if self.treatment == self.outcome {
            return Err(Error::DegenerateQuery(g.name(self.treatment).to_string()));
        }
        if self.gamma_max == 0 {
            return Err(Error::InvalidQuery("gamma_max must be at least 1".into()));
        }
        if self.gamma_max > template::MAX_LAG {
            return Err(Error::InvalidQuery(format!(
                "gamma_max must not exceed {}",
                template::MAX_LAG
            )));
        }
        Ok(())
    }

    /// Treatment variable `X@-gamma`.
    pub fn treatment_var(&self) -> TemporalVar {
        TemporalVar::new(self.treatment, -(self.gamma as i32))
    }

    /// Outcome variable `Y@0`.
    pub fn outcome_var(&self) -> TemporalVar {
        TemporalVar::new(self.outcome, 0)
    }

    /// Lowest offset an adjustment set may use: `-(gamma + gamma_max)`.
    pub fn floor(&self) -> i32 {
        -((self.gamma + self.gamma_max) as i32)
    }

    /// Adjustment window `[-(gamma + gamma_max), 0]`.
    pub fn window(&self) -> (i32, i32) {
        (self.floor(), 0)
    }
}

/// Extra past slices used when unrolling for d-separation checks.
pub fn default_padding(g: &Scg, gamma_max: u32) -> u32 {
    g.len() as u32 * (gamma_max + 1)
}

/// Instantiates every series in `series` at every offset of `[lo, hi]`.
pub fn instantiate<'a>(series: impl IntoIterator<Item = &'a usize>, lo: i32, hi: i32) -> Vec<TemporalVar> {
    let mut out = Vec::new();
    for &s in series {
        for t in lo..=hi {
            out.push(TemporalVar::new(s, t));
        }
    }
    out
}
