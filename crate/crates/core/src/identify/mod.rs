// SPDX-License-Identifier: MIT
//! Identifiability verdicts, the SCG-back-door criterion, canonical adjustment
//! sets and their FT-DAG counterparts.

mod criterion;
mod estimand;
mod ftdag;
mod nodes;
mod sets;

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::Scg;
use crate::unroll::MicroQuery;

pub use criterion::{
    canonical_sets, qopt, scg_backdoor_check, scg_backdoor_check_with, set_a1, set_a2, CheckOptions, Condition,
    CriterionReport, Item,
};
pub use estimand::{estimand, Estimand};
pub use ftdag::{
    classical_backdoor_check, classical_backdoor_check_padded, ftdag_opt, padding_stable, witness_template,
};
pub use nodes::{backdoor_restricted_ecn, causal_nodes, extended_causal_nodes};
pub use sets::AdjustmentSet;

pub(crate) use criterion::{check_in, qopt_in, Ctx};
pub(crate) use sets::inst;

/// Outcome of the identifiability test.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum VerdictKind {
    NonAncestor,
    CondA,
    CondB,
    CondC,
    NotIdentifiable,
}

impl VerdictKind {
    pub fn is_identifiable(self) -> bool {
        self != VerdictKind::NotIdentifiable
    }

    pub fn condition(self) -> Option<Condition> {
        match self {
            VerdictKind::CondA => Some(Condition::A),
            VerdictKind::CondB => Some(Condition::B),
            VerdictKind::CondC => Some(Condition::C),
            _ => None,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            VerdictKind::NonAncestor => "NonAncestor",
            VerdictKind::CondA => "CondA",
            VerdictKind::CondB => "CondB",
            VerdictKind::CondC => "CondC",
            VerdictKind::NotIdentifiable => "NotIdentifiable",
        }
    }
}

impl fmt::Display for VerdictKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Verdict {
    pub kind: VerdictKind,
    /// Why the effect is not identifiable, when it is not.
    pub witness: Option<String>,
}

impl Verdict {
    fn of(kind: VerdictKind) -> Self {
        Verdict { kind, witness: None }
    }

    pub fn to_json_value(&self) -> serde_json::Value {
        let mut v = serde_json::json!({ "verdict": self.kind.as_str() });
        if let Some(w) = &self.witness {
            v["witness"] = serde_json::Value::String(w.clone());
        }
        v
    }
}

/// Condition C as written: the only cycle through `Y` is `X <-> Y`.
fn condition_c(g: &Scg, q: &MicroQuery) -> Result<bool> {
    Ok(q.gamma == 1 && g.cycle_profile(q.outcome)?.only_cycle_is_two_cycle_with == Some(q.treatment))
}

/// Condition C in its alternative form: `Scc(X) ⊆ {X, Y}` and no self-loop on `Y`.
fn condition_c_alt(g: &Scg, q: &MicroQuery) -> bool {
    let scc = g.scc_partition();
    q.gamma == 1
        && scc
            .component(q.treatment)
            .iter()
            .all(|&v| v == q.treatment || v == q.outcome)
        && !g.has_self_loop(q.outcome)
}

fn identify_by(g: &Scg, q: &MicroQuery, cond_c: impl Fn(&Scg, &MicroQuery) -> Result<bool>) -> Result<Verdict> {
    q.validate(g)?;
    let (x, y) = (q.treatment, q.outcome);
    if !g.ancestors(&[y])?.contains(&x) {
        return Ok(Verdict::of(VerdictKind::NonAncestor));
    }
    let scc = g.scc_partition();
    let comp = scc.component(x);
    if comp == [x] {
        return Ok(Verdict::of(VerdictKind::CondA));
    }
    if q.gamma == 0 && g.ancestors_without(&[y], x).iter().all(|v| !comp.contains(v)) {
        return Ok(Verdict::of(VerdictKind::CondB));
    }
    if cond_c(g, q)? {
        return Ok(Verdict::of(VerdictKind::CondC));
    }
    let members: Vec<&str> = comp.iter().map(|&v| g.name(v)).collect();
    Ok(Verdict {
        kind: VerdictKind::NotIdentifiable,
        witness: Some(format!(
            "treatment component {{{}}} reaches the outcome at gamma = {}",
            members.join(", "),
            q.gamma
        )),
    })
}

/// Decides whether `P(y_t | do(x_{t-gamma}))` is identifiable from `g`.
pub fn identify(g: &Scg, q: &MicroQuery) -> Result<Verdict> {
    identify_by(g, q, condition_c)
}

/// As [`identify`], with Condition C in its `Scc(X) ⊆ {X, Y}` form.
pub fn identify_alt(g: &Scg, q: &MicroQuery) -> Result<Verdict> {
    identify_by(g, q, |g, q| Ok(condition_c_alt(g, q)))
}

/// Shared inputs for the set computations of one query.
pub(crate) fn require_ancestor(kind: VerdictKind) -> Result<()> {
    match kind {
        VerdictKind::NonAncestor => Err(Error::NotAncestor),
        VerdictKind::NotIdentifiable => Err(Error::NotIdentifiable),
        _ => Ok(()),
    }
}
