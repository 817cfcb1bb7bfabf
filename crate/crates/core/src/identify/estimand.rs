// SPDX-License-Identifier: MIT
use serde::Serialize;

use super::{AdjustmentSet, VerdictKind};
use crate::graph::Scg;
use crate::unroll::MicroQuery;

/// The adjustment formula for one query and set, in machine-readable form.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Estimand {
    pub effect: String,
    pub outcome: String,
    /// Conditioning variables inside the sum, treatment first when present.
    pub conditioning: Vec<String>,
    pub summed_over: Vec<String>,
    pub formula: String,
}

/// Renders `sum_z P(y_t | x_{t-gamma}, z) P(z)`. For a treatment that is not an
/// ancestor of the outcome the treatment drops out and the sum reduces to `P(y_t)`.
pub fn estimand(g: &Scg, q: &MicroQuery, z: &AdjustmentSet, verdict: VerdictKind) -> Estimand {
    let x = q.treatment_var().time_label(g);
    let y = q.outcome_var().time_label(g);
    let zs: Vec<String> = z.iter().map(|v| v.time_label(g)).collect();
    let effect = format!("P({y} | do({x}))");
    let mut conditioning = Vec::new();
    if verdict != VerdictKind::NonAncestor {
        conditioning.push(x);
    }
    let formula = if verdict == VerdictKind::NonAncestor {
        format!("P({y})")
    } else if zs.is_empty() {
        format!("P({y} | {})", conditioning[0])
    } else {
        let joined = zs.join(", ");
        format!("sum_{{{joined}}} P({y} | {}, {joined}) P({joined})", conditioning[0])
    };
    conditioning.extend(zs.iter().cloned());
    Estimand {
        effect,
        outcome: y,
        conditioning,
        summed_over: zs,
        formula,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    #[test]
    fn renderings() {
        let g = fixtures::confounded_chain();
        let q = MicroQuery::named(&g, "X", "Y", 1, 1).unwrap();
        let e = estimand(&g, &q, &AdjustmentSet::new(), VerdictKind::CondA);
        assert_eq!(e.formula, "P(y_t | x_{t-1})");
        let z = AdjustmentSet::literal(&g, &[("W", -1)]);
        let e = estimand(&g, &q, &z, VerdictKind::CondA);
        assert_eq!(e.formula, "sum_{w_{t-1}} P(y_t | x_{t-1}, w_{t-1}) P(w_{t-1})");
        assert_eq!(e.effect, "P(y_t | do(x_{t-1}))");
        let z = AdjustmentSet::literal(&g, &[("W", 0), ("W", -1), ("X", -2)]);
        let e = estimand(&g, &q, &z, VerdictKind::CondA);
        assert_eq!(e.summed_over.len(), 3);
        assert_eq!(estimand(&g, &q, &z, VerdictKind::NonAncestor).formula, "P(y_t)");
    }
}
