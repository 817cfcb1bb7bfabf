// SPDX-License-Identifier: MIT
use std::collections::BTreeSet;
use std::ops::Deref;

use crate::error::Result;
use crate::graph::Scg;
use crate::unroll::TemporalVar;

/// A set of temporal variables, kept sorted by `(series, offset)`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default, PartialOrd, Ord)]
pub struct AdjustmentSet(BTreeSet<TemporalVar>);

impl AdjustmentSet {
    pub fn new() -> Self {
        AdjustmentSet::default()
    }

    pub fn into_inner(self) -> BTreeSet<TemporalVar> {
        self.0
    }

    pub fn as_set(&self) -> &BTreeSet<TemporalVar> {
        &self.0
    }

    pub fn insert(&mut self, v: TemporalVar) -> bool {
        self.0.insert(v)
    }

    /// Distinct series appearing in the set.
    pub fn series(&self) -> BTreeSet<usize> {
        self.0.iter().map(|v| v.series).collect()
    }

    pub fn union(&self, other: &AdjustmentSet) -> AdjustmentSet {
        self.0.union(&other.0).copied().collect()
    }

    pub fn difference(&self, other: &AdjustmentSet) -> AdjustmentSet {
        self.0.difference(&other.0).copied().collect()
    }

    pub fn without(&self, other: &BTreeSet<TemporalVar>) -> AdjustmentSet {
        self.0.difference(other).copied().collect()
    }

    pub fn is_subset(&self, other: &AdjustmentSet) -> bool {
        self.0.is_subset(&other.0)
    }

    pub fn labels(&self, g: &Scg) -> Vec<String> {
        self.0.iter().map(|v| v.label(g)).collect()
    }

    /// `{W@-1, X@-2}`.
    pub fn display(&self, g: &Scg) -> String {
        format!("{{{}}}", self.labels(g).join(", "))
    }

    /// `[["W",-1],["X",-2]]`.
    pub fn to_json_value(&self, g: &Scg) -> serde_json::Value {
        serde_json::Value::Array(
            self.0
                .iter()
                .map(|v| serde_json::json!([g.name(v.series), v.offset]))
                .collect(),
        )
    }

    pub fn to_json(&self, g: &Scg) -> String {
        self.to_json_value(g).to_string()
    }

    pub fn from_json(g: &Scg, s: &str) -> Result<Self> {
        let raw: Vec<(String, i32)> = serde_json::from_str(s)?;
        Self::from_named(g, raw.iter().map(|(n, t)| (n.as_str(), *t)))
    }

    pub fn from_named<'a>(g: &Scg, items: impl IntoIterator<Item = (&'a str, i32)>) -> Result<Self> {
        items
            .into_iter()
            .map(|(n, t)| Ok(TemporalVar::new(g.node(n)?, t)))
            .collect()
    }

    /// Panicking variant of [`AdjustmentSet::from_named`] for literals.
    pub fn literal(g: &Scg, items: &[(&str, i32)]) -> Self {
        Self::from_named(g, items.iter().copied()).expect("literal adjustment set must name known series")
    }
}

impl Deref for AdjustmentSet {
    type Target = BTreeSet<TemporalVar>;

    fn deref(&self) -> &Self::Target {
        &self.0
    }
}

impl FromIterator<TemporalVar> for AdjustmentSet {
    fn from_iter<I: IntoIterator<Item = TemporalVar>>(iter: I) -> Self {
        AdjustmentSet(iter.into_iter().collect())
    }
}

impl From<BTreeSet<TemporalVar>> for AdjustmentSet {
    fn from(s: BTreeSet<TemporalVar>) -> Self {
        AdjustmentSet(s)
    }
}

impl<'a> IntoIterator for &'a AdjustmentSet {
    type Item = &'a TemporalVar;
    type IntoIter = std::collections::btree_set::Iter<'a, TemporalVar>;

    fn into_iter(self) -> Self::IntoIter {
        self.0.iter()
    }
}

/// Every series of `series` at every offset in `[lo, hi]`.
pub(crate) fn inst(series: &BTreeSet<usize>, lo: i32, hi: i32) -> AdjustmentSet {
    series
        .iter()
        .flat_map(|&s| (lo..=hi).map(move |t| TemporalVar::new(s, t)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    #[test]
    fn json_round_trip() {
        let g = fixtures::confounded_chain();
        let z = AdjustmentSet::literal(&g, &[("W", 0), ("W", -1), ("X", -2)]);
        let s = z.to_json(&g);
        assert_eq!(s, r#"[["X",-2],["W",-1],["W",0]]"#);
        assert_eq!(AdjustmentSet::from_json(&g, &s).unwrap(), z);
        assert!(AdjustmentSet::from_json(&g, r#"[["Q",0]]"#).is_err());
        assert!(AdjustmentSet::from_json(&g, r#"{"W":0}"#).is_err());
    }
}
