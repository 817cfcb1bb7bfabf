// SPDX-License-Identifier: MIT
use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use super::UnrolledGraph;
use crate::error::{Error, Result};
use crate::graph::{Scg, ScgJson};

/// Largest supported `gamma_max` (lag sets are bit masks).
pub const MAX_LAG: u32 = 30;

/// Default cap on enumerated templates.
pub const DEFAULT_TEMPLATE_CAP: usize = 50;

/// A set of lags `⊆ [0, MAX_LAG]`, stored as a bit mask.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct LagSet(u32);

impl LagSet {
    pub const fn empty() -> Self {
        LagSet(0)
    }

    pub const fn from_bits(bits: u32) -> Self {
        LagSet(bits)
    }

    /// All lags in `[lo, hi]`.
    pub fn range(lo: u32, hi: u32) -> Self {
        (lo..=hi).collect()
    }

    pub const fn bits(self) -> u32 {
        self.0
    }

    pub const fn contains(self, lag: u32) -> bool {
        lag < 32 && self.0 & (1 << lag) != 0
    }

    pub fn insert(&mut self, lag: u32) {
        assert!(lag <= MAX_LAG, "lag {lag} exceeds the supported maximum");
        self.0 |= 1 << lag;
    }

    pub fn remove(&mut self, lag: u32) {
        self.0 &= !(1 << lag);
    }

    pub const fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn iter(self) -> impl Iterator<Item = u32> {
        (0..32).filter(move |&l| self.0 & (1 << l) != 0)
    }

    pub fn max_lag(self) -> Option<u32> {
        self.iter().last()
    }
}

impl FromIterator<u32> for LagSet {
    fn from_iter<I: IntoIterator<Item = u32>>(iter: I) -> Self {
        let mut s = LagSet::empty();
        for l in iter {
            s.insert(l);
        }
        s
    }
}

/// One compatible full-time DAG, encoded by a stationary lag set per macro edge.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct FtDagTemplate {
    scg: Scg,
    gamma_max: u32,
    lags: Vec<LagSet>,
}

impl std::hash::Hash for Scg {
    fn hash<H: std::hash::Hasher>(&self, state: &mut H) {
        self.names().hash(state);
        self.edges().hash(state);
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TemplateJson {
    pub scg: ScgJson,
    pub gamma_max: u32,
    pub lags: Vec<EdgeLagsJson>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EdgeLagsJson {
    pub edge: [String; 2],
    pub set: Vec<u32>,
}

impl FtDagTemplate {
    /// Checks every template invariant: one non-empty lag set per edge, lags in
    /// `[0, gamma_max]`, no lag 0 on self-loops, acyclic lag-0 subgraph.
    pub fn new(scg: Scg, gamma_max: u32, lags: Vec<LagSet>) -> Result<Self> {
        if gamma_max > MAX_LAG {
            return Err(Error::InvalidTemplate(format!("gamma_max {gamma_max} too large")));
        }
        if lags.len() != scg.edges().len() {
            return Err(Error::InvalidTemplate(format!(
                "{} lag sets for {} edges",
                lags.len(),
                scg.edges().len()
            )));
        }
        for (&(a, b), set) in scg.edges().iter().zip(&lags) {
            let edge = || format!("{} -> {}", scg.name(a), scg.name(b));
            if set.is_empty() {
                return Err(Error::InvalidTemplate(format!("empty lag set on {}", edge())));
            }
            if set.max_lag().unwrap_or(0) > gamma_max {
                return Err(Error::InvalidTemplate(format!("lag above gamma_max on {}", edge())));
            }
            if a == b && set.contains(0) {
                return Err(Error::InvalidTemplate(format!("lag 0 on self-loop {}", edge())));
            }
        }
        let t = FtDagTemplate { scg, gamma_max, lags };
        if !t.lag0_acyclic() {
            return Err(Error::InvalidTemplate("lag-0 edges form a cycle".into()));
        }
        Ok(t)
    }

    pub(crate) fn new_unchecked(scg: Scg, gamma_max: u32, lags: Vec<LagSet>) -> Self {
        debug_assert_eq!(lags.len(), scg.edges().len());
        FtDagTemplate { scg, gamma_max, lags }
    }

    /// Builds a template from `(source, target, lags)` triples; every SCG edge must be listed.
    pub fn from_named(scg: &Scg, gamma_max: u32, entries: &[(&str, &str, &[u32])]) -> Result<Self> {
        let mut lags = vec![LagSet::empty(); scg.edges().len()];
        for &(a, b, set) in entries {
            let (ia, ib) = (scg.node(a)?, scg.node(b)?);
            let k = scg
                .edge_index(ia, ib)
                .ok_or_else(|| Error::InvalidTemplate(format!("{a} -> {b} is not an edge of the graph")))?;
            lags[k] = set.iter().copied().collect();
        }
        FtDagTemplate::new(scg.clone(), gamma_max, lags)
    }

    pub fn scg(&self) -> &Scg {
        &self.scg
    }

    pub fn gamma_max(&self) -> u32 {
        self.gamma_max
    }

    /// Lag sets aligned with `scg().edges()`.
    pub fn lags(&self) -> &[LagSet] {
        &self.lags
    }

    pub fn lag_set(&self, a: usize, b: usize) -> Option<LagSet> {
        self.scg.edge_index(a, b).map(|k| self.lags[k])
    }

    /// `(source, target, lag)` for every micro edge pattern.
    pub fn lagged_edges(&self) -> impl Iterator<Item = (usize, usize, u32)> + '_ {
        self.scg
            .edges()
            .iter()
            .zip(&self.lags)
            .flat_map(|(&(a, b), set)| set.iter().map(move |l| (a, b, l)))
    }

    pub fn lag0_acyclic(&self) -> bool {
        let n = self.scg.len();
        let mut indeg = vec![0usize; n];
        let mut out = vec![Vec::new(); n];
        for (&(a, b), set) in self.scg.edges().iter().zip(&self.lags) {
            if set.contains(0) {
                if a == b {
                    return false;
                }
                out[a].push(b);
                indeg[b] += 1;
            }
        }
        let mut queue: Vec<usize> = (0..n).filter(|&v| indeg[v] == 0).collect();
        let mut seen = 0;
        while let Some(v) = queue.pop() {
            seen += 1;
            for &w in &out[v] {
                indeg[w] -= 1;
                if indeg[w] == 0 {
                    queue.push(w);
                }
            }
        }
        seen == n
    }

    /// Series in an order compatible with the lag-0 edges.
    pub fn lag0_topological_order(&self) -> Vec<usize> {
        let n = self.scg.len();
        let mut indeg = vec![0usize; n];
        for (&(a, b), set) in self.scg.edges().iter().zip(&self.lags) {
            if set.contains(0) && a != b {
                indeg[b] += 1;
            }
        }
        let mut order = Vec::with_capacity(n);
        let mut ready: std::collections::BTreeSet<usize> = (0..n).filter(|&v| indeg[v] == 0).collect();
        while let Some(v) = ready.pop_first() {
            order.push(v);
            for (&(a, b), set) in self.scg.edges().iter().zip(&self.lags) {
                if a == v && b != v && set.contains(0) {
                    indeg[b] -= 1;
                    if indeg[b] == 0 {
                        ready.insert(b);
                    }
                }
            }
        }
        assert_eq!(order.len(), n, "lag-0 subgraph must be acyclic");
        order
    }

    /// Unrolls the template over `[lo, hi]`.
    pub fn unroll(&self, lo: i32, hi: i32) -> UnrolledGraph {
        UnrolledGraph::new(self, lo, hi)
    }

    pub fn to_json_value(&self) -> TemplateJson {
        TemplateJson {
            scg: self.scg.clone().into(),
            gamma_max: self.gamma_max,
            lags: self
                .scg
                .edges()
                .iter()
                .zip(&self.lags)
                .map(|(&(a, b), set)| EdgeLagsJson {
                    edge: [self.scg.name(a).to_string(), self.scg.name(b).to_string()],
                    set: set.iter().collect(),
                })
                .collect(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&self.to_json_value()).expect("template serialization is infallible")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let raw: TemplateJson = serde_json::from_str(s)?;
        let scg = Scg::try_from(raw.scg)?;
        let entries: Vec<(&str, &str, &[u32])> = raw
            .lags
            .iter()
            .map(|e| (e.edge[0].as_str(), e.edge[1].as_str(), e.set.as_slice()))
            .collect();
        FtDagTemplate::from_named(&scg, raw.gamma_max, &entries)
    }
}

/// The SCG induced by a template: one macro edge per non-empty lag set.
pub fn macro_projection(tmpl: &FtDagTemplate) -> Scg {
    let g = tmpl.scg();
    Scg::from_indices(
        g.names().to_vec(),
        g.edges()
            .iter()
            .zip(tmpl.lags())
            .filter(|(_, set)| !set.is_empty())
            .map(|(&e, _)| e),
    )
}

fn edge_options(self_loop: bool, gamma_max: u32) -> impl Iterator<Item = LagSet> {
    let full = 1u32 << (gamma_max + 1);
    (1..full)
        .filter(move |m| !self_loop || m & 1 == 0)
        .map(LagSet::from_bits)
}

fn reaches(adj: &[Vec<usize>], from: usize, to: usize) -> bool {
    let mut seen = vec![false; adj.len()];
    let mut stack = vec![from];
    seen[from] = true;
    while let Some(v) = stack.pop() {
        if v == to {
            return true;
        }
        for &w in &adj[v] {
            if !seen[w] {
                seen[w] = true;
                stack.push(w);
            }
        }
    }
    false
}

/// Every compatible template in a deterministic order, or `OverCap` once more
/// than `cap` have been produced.
pub fn enumerate_compatible_templates(g: &Scg, gamma_max: u32, cap: usize) -> Result<Vec<FtDagTemplate>> {
    if cap == 0 {
        return Err(Error::InvalidConfig("template cap must be at least 1".into()));
    }
    if gamma_max == 0 || gamma_max > MAX_LAG {
        return Err(Error::InvalidConfig(format!("unsupported gamma_max {gamma_max}")));
    }
    struct Search<'a> {
        g: &'a Scg,
        gamma_max: u32,
        cap: usize,
        current: Vec<LagSet>,
        lag0: Vec<Vec<usize>>,
        out: Vec<FtDagTemplate>,
    }
    impl Search<'_> {
        fn go(&mut self, k: usize) -> Result<()> {
            let edges = self.g.edges();
            if k == edges.len() {
                if self.out.len() == self.cap {
                    return Err(Error::OverCap {
                        cap: self.cap,
                        counted: self.cap + 1,
                    });
                }
                self.out.push(FtDagTemplate::new_unchecked(
                    self.g.clone(),
                    self.gamma_max,
                    self.current.clone(),
                ));
                return Ok(());
            }
            let (a, b) = edges[k];
            for opt in edge_options(a == b, self.gamma_max) {
                let zero = opt.contains(0);
                if zero && reaches(&self.lag0, b, a) {
                    continue;
                }
                if zero {
                    self.lag0[a].push(b);
                }
                self.current.push(opt);
                let r = self.go(k + 1);
                self.current.pop();
                if zero {
                    self.lag0[a].pop();
                }
                r?;
            }
            Ok(())
        }
    }
    let mut s = Search {
        g,
        gamma_max,
        cap,
        current: Vec::with_capacity(g.edges().len()),
        lag0: vec![Vec::new(); g.len()],
        out: Vec::new(),
    };
    s.go(0)?;
    Ok(s.out)
}

/// Exact number of compatible templates, or `None` when some strongly connected
/// component carries more than 22 internal edges.
pub fn count_compatible_templates(g: &Scg, gamma_max: u32) -> Option<u128> {
    let scc = g.scc_partition();
    let with_zero = 1u128 << gamma_max;
    let without_zero = with_zero - 1;
    let mut total: u128 = 1;
    let mut internal: Vec<Vec<(usize, usize)>> = vec![Vec::new(); scc.components.len()];
    for &(a, b) in g.edges() {
        if a == b {
            total = total.checked_mul(without_zero)?;
        } else if scc.same(a, b) {
            internal[scc.component_of[a]].push((a, b));
        } else {
            total = total.checked_mul(with_zero + without_zero)?;
        }
    }
    for edges in internal.iter().filter(|e| !e.is_empty()) {
        if edges.len() > 22 {
            return None;
        }
        // Sum over acyclic lag-0 subsets A of with_zero^|A| * without_zero^(m - |A|).
        fn walk(
            edges: &[(usize, usize)],
            k: usize,
            adj: &mut Vec<Vec<usize>>,
            weight: u128,
            with_zero: u128,
            without_zero: u128,
        ) -> u128 {
            if k == edges.len() {
                return weight;
            }
            let (a, b) = edges[k];
            let mut sum = walk(edges, k + 1, adj, weight * without_zero, with_zero, without_zero);
            if !reaches(adj, b, a) {
                adj[a].push(b);
                sum += walk(edges, k + 1, adj, weight * with_zero, with_zero, without_zero);
                adj[a].pop();
            }
            sum
        }
        let mut adj = vec![Vec::new(); g.len()];
        total = total.checked_mul(walk(edges, 0, &mut adj, 1, with_zero, without_zero))?;
    }
    Some(total)
}

/// Maximal acyclic subsets of `edges` (as bit masks over `edges`) among `members`.
fn maximal_acyclic_subsets(n: usize, members: &[usize], edges: &[(usize, usize)]) -> Vec<u64> {
    assert!(edges.len() <= 64, "too many edges inside one component");
    let mut perm = members.to_vec();
    let mut pos = vec![0usize; n];
    let mut found: HashSet<u64> = HashSet::new();
    let mut result = Vec::new();
    // Every maximal acyclic subset is the forward-edge set of some ordering of the members.
    let mut visit = |perm: &[usize]| {
        for (i, &v) in perm.iter().enumerate() {
            pos[v] = i;
        }
        let mask: u64 = edges
            .iter()
            .enumerate()
            .filter(|(_, &(a, b))| pos[a] < pos[b])
            .fold(0, |m, (i, _)| m | (1 << i));
        if found.contains(&mask) {
            return;
        }
        let mut adj = vec![Vec::new(); n];
        for (i, &(a, b)) in edges.iter().enumerate() {
            if mask & (1 << i) != 0 {
                adj[a].push(b);
            }
        }
        let maximal = edges
            .iter()
            .enumerate()
            .filter(|(i, _)| mask & (1 << i) == 0)
            .all(|(_, &(a, b))| reaches(&adj, b, a));
        found.insert(mask);
        if maximal {
            result.push(mask);
        }
    };
    heap_permutations(&mut perm, &mut visit);
    result.sort_unstable_by(|a, b| b.cmp(a));
    result
}

fn heap_permutations(items: &mut [usize], visit: &mut impl FnMut(&[usize])) {
    let n = items.len();
    let mut c = vec![0usize; n];
    visit(items);
    let mut i = 0;
    while i < n {
        if c[i] < i {
            if i % 2 == 0 {
                items.swap(0, i);
            } else {
                items.swap(c[i], i);
            }
            visit(items);
            c[i] += 1;
            i = 0;
        } else {
            c[i] = 0;
            i += 1;
        }
    }
}

/// Intra-component edges and their maximal acyclic subsets, as bitmasks.
type ComponentPlan = (Vec<(usize, usize)>, Vec<u64>);

struct DensestPlan {
    per_component: Vec<ComponentPlan>,
}

fn densest_plan(g: &Scg) -> DensestPlan {
    let scc = g.scc_partition();
    let mut per_component = Vec::new();
    for comp in &scc.components {
        let edges: Vec<(usize, usize)> = g
            .edges()
            .iter()
            .copied()
            .filter(|&(a, b)| a != b && scc.same(a, b) && scc.component_of[a] == scc.component_of[comp[0]])
            .collect();
        if edges.is_empty() {
            continue;
        }
        let subsets = maximal_acyclic_subsets(g.len(), comp, &edges);
        per_component.push((edges, subsets));
    }
    DensestPlan { per_component }
}

/// Number of densest templates (saturating).
pub fn densest_count(g: &Scg) -> usize {
    densest_plan(g)
        .per_component
        .iter()
        .fold(1usize, |acc, (_, s)| acc.saturating_mul(s.len()))
}

/// Templates with maximal lag sets: one per choice of a maximal acyclic lag-0
/// edge set inside every strongly connected component.
pub fn densest_templates(g: &Scg, gamma_max: u32) -> Vec<FtDagTemplate> {
    densest_templates_capped(g, gamma_max, usize::MAX).expect("uncapped")
}

/// As [`densest_templates`], but fails with `OverCap` when there are more than `cap`.
pub fn densest_templates_capped(g: &Scg, gamma_max: u32, cap: usize) -> Result<Vec<FtDagTemplate>> {
    let plan = densest_plan(g);
    let count = plan
        .per_component
        .iter()
        .fold(1usize, |acc, (_, s)| acc.saturating_mul(s.len()));
    if count > cap {
        return Err(Error::OverCap { cap, counted: count });
    }
    let full = LagSet::range(0, gamma_max);
    let lagged = LagSet::range(1, gamma_max);
    let base: Vec<LagSet> = g
        .edges()
        .iter()
        .map(|&(a, b)| if a == b { lagged } else { full })
        .collect();
    let mut out = Vec::with_capacity(count);
    let mut choice = vec![0usize; plan.per_component.len()];
    loop {
        let mut lags = base.clone();
        for ((edges, subsets), &c) in plan.per_component.iter().zip(&choice) {
            let mask = subsets[c];
            for (i, &(a, b)) in edges.iter().enumerate() {
                if mask & (1 << i) == 0 {
                    lags[g.edge_index(a, b).expect("edge exists")] = lagged;
                }
            }
        }
        out.push(FtDagTemplate::new_unchecked(g.clone(), gamma_max, lags));
        // Odometer over the per-component choices.
        let mut k = 0;
        loop {
            if k == choice.len() {
                return Ok(out);
            }
            choice[k] += 1;
            if choice[k] < plan.per_component[k].1.len() {
                break;
            }
            choice[k] = 0;
            k += 1;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn stress() -> Scg {
        Scg::from_literal(&["X", "Y", "W"], &[("X", "Y"), ("Y", "X"), ("W", "X"), ("W", "Y")])
    }

    #[test]
    fn enumeration_counts() {
        let xy = Scg::from_literal(&["X", "Y"], &[("X", "Y")]);
        let t = enumerate_compatible_templates(&xy, 1, 50).unwrap();
        let sets: Vec<Vec<u32>> = t.iter().map(|t| t.lags()[0].iter().collect()).collect();
        assert_eq!(sets, vec![vec![0], vec![1], vec![0, 1]]);

        let looped = Scg::from_literal(&["X"], &[("X", "X")]);
        let t = enumerate_compatible_templates(&looped, 1, 50).unwrap();
        assert_eq!(t.len(), 1);
        assert_eq!(t[0].lags()[0], LagSet::range(1, 1));

        assert_eq!(enumerate_compatible_templates(&stress(), 1, 50).unwrap().len(), 45);
        assert_eq!(count_compatible_templates(&stress(), 1), Some(45));
    }

    #[test]
    fn over_cap_is_reported() {
        match enumerate_compatible_templates(&stress(), 1, 10) {
            Err(Error::OverCap { cap: 10, counted }) => assert!(counted > 10),
            other => panic!("expected over-cap, got {other:?}"),
        }
    }

    #[test]
    fn densest_examples() {
        let pollution = Scg::from_literal(&["X", "Y", "W"], &[("W", "X"), ("X", "Y"), ("W", "W"), ("X", "X")]);
        let d = densest_templates(&pollution, 1);
        assert_eq!(d.len(), 1);
        assert_eq!(d[0].lag_set(2, 0), Some(LagSet::range(0, 1)));
        assert_eq!(d[0].lag_set(2, 2), Some(LagSet::range(1, 1)));

        let d = densest_templates(&stress(), 1);
        assert_eq!(d.len(), 2);
        for t in &d {
            let xy = t.lag_set(0, 1).unwrap();
            let yx = t.lag_set(1, 0).unwrap();
            assert!(xy.contains(0) ^ yx.contains(0));
        }

        let edgeless = Scg::from_literal(&["A", "B"], &[]);
        let d = densest_templates(&edgeless, 1);
        assert_eq!(d.len(), 1);
        assert!(d[0].lags().is_empty());
    }

    #[test]
    fn maximal_subsets_of_triangle_with_chord() {
        // A->B->C->A plus A->C: the maximal acyclic subsets drop exactly one cycle edge
        // from each cycle.
        let g = Scg::from_literal(&["A", "B", "C"], &[("A", "B"), ("B", "C"), ("C", "A"), ("A", "C")]);
        assert_eq!(densest_count(&g), 3);
    }

    #[test]
    fn template_validation() {
        let g = stress();
        let bad = FtDagTemplate::from_named(
            &g,
            1,
            &[("X", "Y", &[0]), ("Y", "X", &[0]), ("W", "X", &[1]), ("W", "Y", &[1])],
        );
        assert!(matches!(bad, Err(Error::InvalidTemplate(_))));
        let missing = FtDagTemplate::from_named(&g, 1, &[("X", "Y", &[0])]);
        assert!(missing.is_err());
        let looped = Scg::from_literal(&["X"], &[("X", "X")]);
        assert!(FtDagTemplate::from_named(&looped, 1, &[("X", "X", &[0, 1])]).is_err());
    }

    #[test]
    fn json_round_trip() {
        let g = stress();
        for t in enumerate_compatible_templates(&g, 1, 50).unwrap().iter().take(5) {
            assert_eq!(&FtDagTemplate::from_json(&t.to_json()).unwrap(), t);
        }
    }
}
