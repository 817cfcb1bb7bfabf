// SPDX-License-Identifier: MIT
use std::cell::RefCell;
use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

use serde::{Deserialize, Serialize};

use super::nodes::{backdoor_restricted_with, causal_nodes};
use super::{identify, inst, require_ancestor, AdjustmentSet, VerdictKind};
use crate::error::{Error, Result};
use crate::graph::Scg;
use crate::unroll::{possible_descendants, MicroQuery, TemporalVar};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Condition {
    A,
    B,
    C,
}

impl fmt::Display for Condition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Condition::A => "A",
            Condition::B => "B",
            Condition::C => "C",
        })
    }
}

/// Items of the criterion, in document order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Item {
    A1,
    A2,
    A3,
    A4,
    B1,
    B2,
    C,
}

impl Item {
    pub fn label(self) -> &'static str {
        match self {
            Item::A1 => "A.1",
            Item::A2 => "A.2",
            Item::A3 => "A.3",
            Item::A4 => "A.4",
            Item::B1 => "B.1",
            Item::B2 => "B.2",
            Item::C => "C",
        }
    }
}

impl fmt::Display for Item {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CriterionReport {
    pub satisfied: bool,
    pub verdict: VerdictKind,
    pub condition: Option<Condition>,
    pub item: Option<Item>,
    /// The `P \ D` part the recorded item requires (the `Z1` part for partition items).
    pub required_core: AdjustmentSet,
    pub violations: Vec<String>,
}

impl CriterionReport {
    pub fn to_json_value(&self, g: &Scg) -> serde_json::Value {
        serde_json::json!({
            "satisfied": self.satisfied,
            "verdict": self.verdict.as_str(),
            "condition": self.condition.map(|c| c.to_string()),
            "item": self.item.map(Item::label),
            "required_core": self.required_core.to_json_value(g),
            "violations": self.violations,
        })
    }
}

/// Knobs for [`scg_backdoor_check_with`].
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct CheckOptions {
    /// Skips the `D ∩ Z = ∅` test. Only useful for exercising test harnesses.
    pub skip_descendant_test: bool,
}

/// Per-query quantities shared by the items.
pub(crate) struct Ctx<'a> {
    g: &'a Scg,
    q: MicroQuery,
    pub(crate) kind: VerdictKind,
    pub(crate) d: BTreeSet<TemporalVar>,
    cn: BTreeSet<usize>,
    ecn: BTreeSet<usize>,
    x_on_cycle: bool,
    colliders: Vec<usize>,
    cores: Cores,
    z1_cache: RefCell<HashMap<BTreeSet<usize>, AdjustmentSet>>,
}

#[derive(Default)]
struct Cores {
    scc: AdjustmentSet,
    ecn: AdjustmentSet,
    a4: AdjustmentSet,
    c: (AdjustmentSet, AdjustmentSet, AdjustmentSet),
}

impl<'a> Ctx<'a> {
    pub(crate) fn new(g: &'a Scg, q: &MicroQuery) -> Result<Self> {
        let kind = identify(g, q)?.kind;
        let d = possible_descendants(g, q.treatment, -(q.gamma as i32), q.window(), q.gamma_max)?;
        let cn = causal_nodes(g, q.treatment, q.outcome)?;
        let scc = g.scc_partition();
        let ecn = cn.iter().flat_map(|&v| scc.component(v).iter().copied()).collect();
        let colliders = (0..g.len())
            .filter(|&v| g.parents(v).iter().filter(|&&p| p != v).count() >= 2)
            .collect();
        let mut ctx = Ctx {
            g,
            q: *q,
            kind,
            d,
            cn,
            ecn,
            x_on_cycle: g.on_cycle(q.treatment, &scc),
            colliders,
            cores: Cores::default(),
            z1_cache: RefCell::new(HashMap::new()),
        };
        ctx.cores = Cores {
            scc: ctx.core_scc(),
            ecn: ctx.core_ecn(),
            a4: ctx.core_a4(),
            c: ctx.condition_c_parts(),
        };
        Ok(ctx)
    }

    fn floor(&self) -> i32 {
        self.q.floor()
    }

    fn minus_d(&self, s: AdjustmentSet) -> AdjustmentSet {
        s.without(&self.d)
    }

    /// `Pa(Scc(X))` over `[floor, -gamma]`.
    fn core_scc(&self) -> AdjustmentSet {
        let scc = self.g.scc_partition();
        let pa = self.g.parents_of_set(scc.component(self.q.treatment));
        self.minus_d(inst(&pa, self.floor(), -(self.q.gamma as i32)))
    }

    /// `Pa(ecn)` over `[floor, 0]`.
    fn core_ecn(&self) -> AdjustmentSet {
        let pa = self.g.parents_of_set(&self.ecn);
        self.minus_d(inst(&pa, self.floor(), 0))
    }

    /// `Pa(X)` over `[floor + 1, 0]` together with `Pa(ecn)` over `[floor, 0]`.
    fn core_a4(&self) -> AdjustmentSet {
        let px = self.g.parents_of_set(&[self.q.treatment]);
        let p = inst(&px, self.floor() + 1, 0).union(&inst(&self.g.parents_of_set(&self.ecn), self.floor(), 0));
        self.minus_d(p)
    }

    /// `Z1` mandated when the series in `opened` may open colliders.
    fn z1_required(&self, opened: &BTreeSet<usize>) -> AdjustmentSet {
        if let Some(z1) = self.z1_cache.borrow().get(opened) {
            return z1.clone();
        }
        let z1 = self.z1_required_uncached(opened);
        self.z1_cache.borrow_mut().insert(opened.clone(), z1.clone());
        z1
    }

    fn z1_required_uncached(&self, opened: &BTreeSet<usize>) -> AdjustmentSet {
        let bd = backdoor_restricted_with(self.g, self.q.treatment, self.q.outcome, &self.ecn, opened);
        let pa: BTreeSet<usize> = self
            .g
            .parents_of_set(&self.cn)
            .union(&self.g.parents_of_set(&bd))
            .copied()
            .collect();
        self.minus_d(inst(&pa, self.floor(), 0))
    }

    /// Looks for `Z = Z1 ⊔ Z2` with `Z1` the set mandated by `Z2`.
    ///
    /// `Z1` only depends on which collider-capable series occur in `Z2`, so every
    /// subset of those series occurring in `Z` is tried; the search is exact.
    fn partition(&self, z: &AdjustmentSet) -> Option<AdjustmentSet> {
        let cands: Vec<usize> = z.series().into_iter().filter(|v| self.colliders.contains(v)).collect();
        let to_set = |mask: u64| -> BTreeSet<usize> {
            cands
                .iter()
                .enumerate()
                .filter(|(i, _)| mask & (1 << i) != 0)
                .map(|(_, &v)| v)
                .collect()
        };
        let required = |mask: u64| self.z1_required(&to_set(mask));
        assert!(cands.len() < 64, "too many collider series");
        for mask in 0..(1u64 << cands.len()) {
            let z1 = required(mask);
            if !z1.is_subset(z) {
                continue;
            }
            let z2 = z.difference(&z1);
            let present = z2.series();
            let mask2 = cands
                .iter()
                .enumerate()
                .filter(|(_, v)| present.contains(v))
                .fold(0u64, |m, (i, _)| m | (1 << i));
            if required(mask2) == z1 {
                return Some(z1);
            }
        }
        None
    }

    /// `(P_X ∪ P_Y) \ D`, `P_X^all`, `P_Y^all`.
    fn condition_c_parts(&self) -> (AdjustmentSet, AdjustmentSet, AdjustmentSet) {
        let gm = self.q.gamma_max as i32;
        let px = self.g.parents_of_set(&[self.q.treatment]);
        let py = self.g.parents_of_set(&[self.q.outcome]);
        let core = self.minus_d(inst(&px, -gm, 0).union(&inst(&py, -gm, 0)));
        (
            core,
            inst(&px, self.floor(), self.floor()),
            inst(&py, self.floor(), self.floor()),
        )
    }

    fn items(&self) -> Vec<Item> {
        let g0 = self.q.gamma == 0;
        match self.kind {
            VerdictKind::CondA => {
                let mut v = vec![Item::A1];
                if !self.x_on_cycle {
                    v.push(Item::A2);
                }
                if g0 {
                    v.push(Item::A3);
                }
                if self.x_on_cycle && !g0 {
                    v.push(Item::A4);
                }
                v
            }
            VerdictKind::CondB => vec![Item::B1, Item::B2],
            VerdictKind::CondC => vec![Item::C],
            _ => Vec::new(),
        }
    }

    /// Whether `z` fulfils `item`, and the core that item asks for.
    fn evaluate(&self, item: Item, z: &AdjustmentSet) -> (bool, AdjustmentSet) {
        match item {
            Item::A1 | Item::B1 => (self.cores.scc.is_subset(z), self.cores.scc.clone()),
            Item::A2 => (self.cores.ecn.is_subset(z), self.cores.ecn.clone()),
            Item::A4 => (self.cores.a4.is_subset(z), self.cores.a4.clone()),
            Item::A3 | Item::B2 => match self.partition(z) {
                Some(z1) => (true, z1),
                None => (false, self.z1_required(&BTreeSet::new())),
            },
            Item::C => {
                let (core, px_all, py_all) = &self.cores.c;
                let base = core.is_subset(z);
                if base && px_all.is_subset(z) {
                    (true, core.union(px_all))
                } else if base && py_all.is_subset(z) {
                    (true, core.union(py_all))
                } else {
                    (false, core.union(px_all))
                }
            }
        }
    }
}

fn check_window(g: &Scg, q: &MicroQuery, z: &AdjustmentSet) -> Result<()> {
    let (lo, hi) = q.window();
    for v in z {
        g.check_node(v.series)?;
        if v.offset < lo || v.offset > hi {
            return Err(Error::OutsideWindow(v.label(g), lo, hi));
        }
    }
    Ok(())
}

/// Checks `z` against the SCG-back-door criterion for `q`.
pub fn scg_backdoor_check(g: &Scg, q: &MicroQuery, z: &AdjustmentSet) -> Result<CriterionReport> {
    scg_backdoor_check_with(g, q, z, CheckOptions::default())
}

pub fn scg_backdoor_check_with(
    g: &Scg,
    q: &MicroQuery,
    z: &AdjustmentSet,
    opts: CheckOptions,
) -> Result<CriterionReport> {
    q.validate(g)?;
    check_window(g, q, z)?;
    let ctx = Ctx::new(g, q)?;
    Ok(check_in(&ctx, z, opts))
}

pub(crate) fn check_in(ctx: &Ctx<'_>, z: &AdjustmentSet, opts: CheckOptions) -> CriterionReport {
    let g = ctx.g;
    let mut violations = Vec::new();
    if !opts.skip_descendant_test {
        let hit: AdjustmentSet = z.iter().filter(|v| ctx.d.contains(v)).copied().collect();
        if !hit.is_empty() {
            violations.push(format!("possible descendant of treatment: {}", hit.display(g)));
        }
    }
    let mut report = CriterionReport {
        satisfied: false,
        verdict: ctx.kind,
        condition: ctx.kind.condition(),
        item: None,
        required_core: AdjustmentSet::new(),
        violations,
    };
    match ctx.kind {
        VerdictKind::NonAncestor => {
            report.satisfied = report.violations.is_empty();
            return report;
        }
        VerdictKind::NotIdentifiable => {
            report.violations.push("effect is not identifiable".into());
            return report;
        }
        _ => {}
    }
    let global_ok = report.violations.is_empty();
    let mut first_core = None;
    for item in ctx.items() {
        let (ok, core) = ctx.evaluate(item, z);
        if ok && global_ok {
            report.satisfied = true;
            report.item = Some(item);
            report.required_core = core;
            report.violations.clear();
            return report;
        }
        if !ok {
            let missing = core.difference(z);
            let msg = match item {
                Item::A3 | Item::B2 => format!("{item}: no split of the set into Z1 and Z2"),
                Item::C => format!(
                    "{item}: missing {} or the single-slice parents of X or Y",
                    missing.display(g)
                ),
                _ => format!("{item}: missing {}", missing.display(g)),
            };
            report.violations.push(msg);
        }
        first_core.get_or_insert(core);
    }
    report.required_core = first_core.unwrap_or_default();
    report
}

/// The quasi-optimal adjustment set.
pub fn qopt(g: &Scg, q: &MicroQuery) -> Result<AdjustmentSet> {
    let ctx = Ctx::new(g, q)?;
    qopt_in(&ctx)
}

pub(crate) fn qopt_in(ctx: &Ctx<'_>) -> Result<AdjustmentSet> {
    require_ancestor(ctx.kind)?;
    let q = ctx.q;
    Ok(match ctx.kind {
        VerdictKind::CondA if q.gamma == 0 => ctx.z1_required(&BTreeSet::new()),
        VerdictKind::CondA if ctx.x_on_cycle => ctx.cores.a4.clone(),
        VerdictKind::CondA => ctx.cores.ecn.clone(),
        VerdictKind::CondB => ctx.z1_required(&BTreeSet::new()),
        VerdictKind::CondC => {
            let py = ctx.g.parents_of_set(&[q.outcome]);
            let px = ctx.g.parents_of_set(&[q.treatment]);
            ctx.minus_d(inst(&py, q.floor(), 0).union(&inst(&px, -(q.gamma_max as i32), 0)))
        }
        _ => unreachable!("checked above"),
    })
}

fn baseline(g: &Scg, q: &MicroQuery, restrict: Option<&BTreeSet<usize>>) -> Result<AdjustmentSet> {
    if identify(g, q)?.kind == VerdictKind::NotIdentifiable {
        return Err(Error::NotIdentifiable);
    }
    let all: BTreeSet<usize> = match restrict {
        Some(r) => r.clone(),
        None => (0..g.len()).collect(),
    };
    let de = g.descendants(&[q.treatment])?;
    let (gm, gamma) = (q.gamma_max as i32, q.gamma as i32);
    let inside: BTreeSet<usize> = all.intersection(&de).copied().collect();
    let outside: BTreeSet<usize> = all.difference(&de).copied().collect();
    Ok(inst(&inside, -gamma - 1 - gm, -gamma - 1).union(&inst(&outside, -gamma - gm, -gamma)))
}

/// `A¹`: descendants of `X` one slice before the treatment window, everything else in it.
pub fn set_a1(g: &Scg, q: &MicroQuery) -> Result<AdjustmentSet> {
    baseline(g, q, None)
}

/// `A²`: `A¹` restricted to the ancestors of `X` and `Y`.
pub fn set_a2(g: &Scg, q: &MicroQuery) -> Result<AdjustmentSet> {
    let an = g.ancestors(&[q.treatment, q.outcome])?;
    baseline(g, q, Some(&an))
}

/// Named sets for a query: `qopt`, `a1`, `a2` and the core of every applicable item.
pub fn canonical_sets(g: &Scg, q: &MicroQuery) -> Result<BTreeMap<String, AdjustmentSet>> {
    let ctx = Ctx::new(g, q)?;
    let mut out = BTreeMap::new();
    match ctx.kind {
        VerdictKind::NotIdentifiable => return Err(Error::NotIdentifiable),
        VerdictKind::NonAncestor => {
            out.insert("empty".to_string(), AdjustmentSet::new());
            return Ok(out);
        }
        _ => {}
    }
    out.insert("qopt".into(), qopt_in(&ctx)?);
    out.insert("a1".into(), set_a1(g, q)?);
    out.insert("a2".into(), set_a2(g, q)?);
    for item in ctx.items() {
        match item {
            Item::C => {
                let (core, px_all, py_all) = &ctx.cores.c;
                out.insert("C-core-x".into(), core.union(px_all));
                out.insert("C-core-y".into(), core.union(py_all));
            }
            Item::A3 | Item::B2 => {
                out.insert(format!("{item}-core"), ctx.z1_required(&BTreeSet::new()));
            }
            _ => {
                let (_, core) = ctx.evaluate(item, &AdjustmentSet::new());
                out.insert(format!("{item}-core"), core);
            }
        }
    }
    Ok(out)
}
