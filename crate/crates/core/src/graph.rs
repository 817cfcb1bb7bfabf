// SPDX-License-Identifier: MIT
//! Macro-level summary graphs: validation, kinship and strongly connected components.
//!
//! Nodes are addressed by their declaration index. Every set-valued output is a
//! `BTreeSet<usize>`, so iteration follows declaration order.

use std::collections::{BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A summary causal graph: one node per time series, cycles and self-loops allowed.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "ScgJson", into = "ScgJson")]
pub struct Scg {
    names: Vec<String>,
    index: HashMap<String, usize>,
    edges: Vec<(usize, usize)>,
    parents: Vec<Vec<usize>>,
    children: Vec<Vec<usize>>,
}

/// Wire form: `{"nodes": ["X", ...], "edges": [["W", "X"], ...]}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScgJson {
    pub nodes: Vec<String>,
    pub edges: Vec<[String; 2]>,
}

impl TryFrom<ScgJson> for Scg {
    type Error = Error;

    fn try_from(raw: ScgJson) -> Result<Self> {
        let edges: Vec<(String, String)> = raw.edges.into_iter().map(|[a, b]| (a, b)).collect();
        validate_scg(&raw.nodes, &edges)
    }
}

impl From<Scg> for ScgJson {
    fn from(g: Scg) -> Self {
        ScgJson {
            edges: g
                .edges
                .iter()
                .map(|&(a, b)| [g.names[a].clone(), g.names[b].clone()])
                .collect(),
            nodes: g.names,
        }
    }
}

/// Builds a canonical [`Scg`] from raw names, rejecting malformed input.
pub fn validate_scg<S: AsRef<str>>(raw_nodes: &[S], raw_edges: &[(S, S)]) -> Result<Scg> {
    let mut names = Vec::with_capacity(raw_nodes.len());
    let mut index = HashMap::new();
    for n in raw_nodes {
        let n = n.as_ref();
        if n.is_empty() {
            return Err(Error::EmptyNodeName);
        }
        if index.insert(n.to_string(), names.len()).is_some() {
            return Err(Error::DuplicateNode(n.to_string()));
        }
        names.push(n.to_string());
    }
    let lookup = |s: &str| {
        index
            .get(s)
            .copied()
            .ok_or_else(|| Error::UndeclaredEndpoint(s.to_string()))
    };
    let mut seen = BTreeSet::new();
    for (a, b) in raw_edges {
        let (a, b) = (a.as_ref(), b.as_ref());
        let e = (lookup(a)?, lookup(b)?);
        if !seen.insert(e) {
            return Err(Error::DuplicateEdge(a.to_string(), b.to_string()));
        }
    }
    Ok(Scg::from_parts(names, index, seen.into_iter().collect()))
}

impl Scg {
    /// Convenience constructor for literals; panics on invalid input.
    pub fn from_literal(nodes: &[&str], edges: &[(&str, &str)]) -> Self {
        validate_scg(nodes, edges).expect("invalid graph literal")
    }

    /// Builds a graph from already-validated indices. Edges are deduplicated.
    pub fn from_indices(names: Vec<String>, edges: impl IntoIterator<Item = (usize, usize)>) -> Self {
        let index = names.iter().enumerate().map(|(i, n)| (n.clone(), i)).collect();
        let edges: BTreeSet<_> = edges.into_iter().collect();
        assert!(edges.iter().all(|&(a, b)| a < names.len() && b < names.len()));
        Scg::from_parts(names, index, edges.into_iter().collect())
    }

    fn from_parts(names: Vec<String>, index: HashMap<String, usize>, edges: Vec<(usize, usize)>) -> Self {
        let n = names.len();
        let mut parents = vec![Vec::new(); n];
        let mut children = vec![Vec::new(); n];
        for &(a, b) in &edges {
            parents[b].push(a);
            children[a].push(b);
        }
        Scg {
            names,
            index,
            edges,
            parents,
            children,
        }
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn name(&self, v: usize) -> &str {
        &self.names[v]
    }

    /// Looks up a node by name.
    pub fn node(&self, name: &str) -> Result<usize> {
        self.index
            .get(name)
            .copied()
            .ok_or_else(|| Error::UnknownNode(name.to_string()))
    }

    pub(crate) fn check_node(&self, v: usize) -> Result<()> {
        if v < self.len() {
            Ok(())
        } else {
            Err(Error::UnknownNode(format!("#{v}")))
        }
    }

    /// Edges sorted by (source, target) declaration index.
    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn edge_index(&self, a: usize, b: usize) -> Option<usize> {
        self.edges.binary_search(&(a, b)).ok()
    }

    pub fn has_edge(&self, a: usize, b: usize) -> bool {
        self.edge_index(a, b).is_some()
    }

    pub fn has_self_loop(&self, v: usize) -> bool {
        self.has_edge(v, v)
    }

    /// Direct parents of `v`; includes `v` itself when it carries a self-loop.
    pub fn parents(&self, v: usize) -> &[usize] {
        &self.parents[v]
    }

    pub fn children(&self, v: usize) -> &[usize] {
        &self.children[v]
    }

    /// `Pa(S)`: every parent of a member of `S` (a member only counts when it is a parent).
    pub fn parents_of_set<'a>(&self, set: impl IntoIterator<Item = &'a usize>) -> BTreeSet<usize> {
        set.into_iter().flat_map(|&v| self.parents[v].iter().copied()).collect()
    }

    /// Reflexive-transitive closure along reversed edges.
    pub fn ancestors(&self, set: &[usize]) -> Result<BTreeSet<usize>> {
        for &v in set {
            self.check_node(v)?;
        }
        Ok(self.closure(set, None, |v| &self.parents[v]))
    }

    /// Reflexive-transitive closure along forward edges.
    pub fn descendants(&self, set: &[usize]) -> Result<BTreeSet<usize>> {
        for &v in set {
            self.check_node(v)?;
        }
        Ok(self.closure(set, None, |v| &self.children[v]))
    }

    /// Ancestors of `set` in the graph with node `removed` deleted.
    pub fn ancestors_without(&self, set: &[usize], removed: usize) -> BTreeSet<usize> {
        self.closure(set, Some(removed), |v| &self.parents[v])
    }

    fn closure<'a>(
        &'a self,
        seeds: &[usize],
        removed: Option<usize>,
        next: impl Fn(usize) -> &'a [usize],
    ) -> BTreeSet<usize> {
        let mut seen = vec![false; self.len()];
        let mut stack: Vec<usize> = Vec::new();
        for &s in seeds {
            if Some(s) != removed && !seen[s] {
                seen[s] = true;
                stack.push(s);
            }
        }
        while let Some(v) = stack.pop() {
            for &w in next(v) {
                if Some(w) != removed && !seen[w] {
                    seen[w] = true;
                    stack.push(w);
                }
            }
        }
        (0..self.len()).filter(|&v| seen[v]).collect()
    }

    /// Strongly connected components (Tarjan), ordered by their smallest member.
    pub fn scc_partition(&self) -> SccPartition {
        let n = self.len();
        let mut state = Tarjan {
            index: vec![usize::MAX; n],
            low: vec![0; n],
            on_stack: vec![false; n],
            stack: Vec::new(),
            next: 0,
            comps: Vec::new(),
        };
        for v in 0..n {
            if state.index[v] == usize::MAX {
                state.visit(self, v);
            }
        }
        let mut components = state.comps;
        for c in &mut components {
            c.sort_unstable();
        }
        components.sort_by_key(|c| c[0]);
        let mut component_of = vec![0; n];
        for (i, c) in components.iter().enumerate() {
            for &v in c {
                component_of[v] = i;
            }
        }
        SccPartition {
            component_of,
            components,
        }
    }

    /// Cycle summary for `v`, derived from SCC membership and self-loop flags.
    pub fn cycle_profile(&self, v: usize) -> Result<CycleProfile> {
        self.check_node(v)?;
        let scc = self.scc_partition();
        let comp = scc.component(v);
        let has_self_loop = self.has_self_loop(v);
        let only_cycle_is_two_cycle_with = if !has_self_loop && comp.len() == 2 {
            comp.iter().copied().find(|&u| u != v)
        } else {
            None
        };
        Ok(CycleProfile {
            has_self_loop,
            on_any_cycle: has_self_loop || comp.len() > 1,
            only_cycle_is_two_cycle_with,
        })
    }

    /// True when `v` lies on a cycle, self-loops included.
    pub fn on_cycle(&self, v: usize, scc: &SccPartition) -> bool {
        self.has_self_loop(v) || scc.component(v).len() > 1
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("graph serialization is infallible")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }
}

struct Tarjan {
    index: Vec<usize>,
    low: Vec<usize>,
    on_stack: Vec<bool>,
    stack: Vec<usize>,
    next: usize,
    comps: Vec<Vec<usize>>,
}

impl Tarjan {
    // Iterative to keep deep chains off the call stack.
    fn visit(&mut self, g: &Scg, root: usize) {
        let mut call: Vec<(usize, usize)> = vec![(root, 0)];
        self.open(root);
        while let Some(&mut (v, ref mut pos)) = call.last_mut() {
            if let Some(&w) = g.children[v].get(*pos) {
                *pos += 1;
                if self.index[w] == usize::MAX {
                    self.open(w);
                    call.push((w, 0));
                } else if self.on_stack[w] {
                    self.low[v] = self.low[v].min(self.index[w]);
                }
                continue;
            }
            call.pop();
            if let Some(&(parent, _)) = call.last() {
                self.low[parent] = self.low[parent].min(self.low[v]);
            }
            if self.low[v] == self.index[v] {
                let mut comp = Vec::new();
                loop {
                    let w = self.stack.pop().expect("tarjan stack underflow");
                    self.on_stack[w] = false;
                    comp.push(w);
                    if w == v {
                        break;
                    }
                }
                self.comps.push(comp);
            }
        }
    }

    fn open(&mut self, v: usize) {
        self.index[v] = self.next;
        self.low[v] = self.next;
        self.next += 1;
        self.stack.push(v);
        self.on_stack[v] = true;
    }
}

/// Partition of the node set into strongly connected components.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SccPartition {
    pub component_of: Vec<usize>,
    pub components: Vec<Vec<usize>>,
}

impl SccPartition {
    /// Members of the component containing `v`, sorted.
    pub fn component(&self, v: usize) -> &[usize] {
        &self.components[self.component_of[v]]
    }

    pub fn same(&self, a: usize, b: usize) -> bool {
        self.component_of[a] == self.component_of[b]
    }
}

/// Which cycles pass through a node.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct CycleProfile {
    pub has_self_loop: bool,
    pub on_any_cycle: bool,
    /// `Some(x)` exactly when the only cycle through the node is the 2-cycle with `x`.
    pub only_cycle_is_two_cycle_with: Option<usize>,
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fig_pollution() -> Scg {
        Scg::from_literal(&["X", "Y", "W"], &[("W", "X"), ("X", "Y"), ("W", "W"), ("X", "X")])
    }

    fn fig_stress() -> Scg {
        Scg::from_literal(&["X", "Y", "W"], &[("X", "Y"), ("Y", "X"), ("W", "X"), ("W", "Y")])
    }

    fn names(g: &Scg, set: &BTreeSet<usize>) -> Vec<String> {
        set.iter().map(|&v| g.name(v).to_string()).collect()
    }

    #[test]
    fn validation_errors() {
        assert_eq!(
            validate_scg(&["X"], &[("X", "Y")]).unwrap_err(),
            Error::UndeclaredEndpoint("Y".into())
        );
        assert_eq!(
            validate_scg(&["X", "X"], &[]).unwrap_err(),
            Error::DuplicateNode("X".into())
        );
        assert_eq!(
            validate_scg(&["X", "Y"], &[("X", "Y"), ("X", "Y")]).unwrap_err(),
            Error::DuplicateEdge("X".into(), "Y".into())
        );
        assert_eq!(validate_scg(&[""], &[]).unwrap_err(), Error::EmptyNodeName);
        let single = validate_scg(&["X"], &[]).unwrap();
        assert_eq!(single.len(), 1);
        assert!(single.edges().is_empty());
    }

    #[test]
    fn json_round_trip_keeps_declaration_order() {
        let g = fig_pollution();
        let s = g.to_json();
        assert_eq!(
            s,
            r#"{"nodes":["X","Y","W"],"edges":[["X","X"],["X","Y"],["W","X"],["W","W"]]}"#
        );
        assert_eq!(Scg::from_json(&s).unwrap(), g);
        assert!(Scg::from_json(r#"{"nodes":["X"],"edges":[["X","Q"]]}"#).is_err());
    }

    #[test]
    fn scc_examples() {
        let g = fig_stress();
        let p = g.scc_partition();
        assert_eq!(p.components, vec![vec![0, 1], vec![2]]);

        let empty = Scg::from_literal(&["A", "B", "C"], &[]);
        assert_eq!(empty.scc_partition().components.len(), 3);

        let tri = Scg::from_literal(&["A", "B", "C"], &[("A", "B"), ("B", "C"), ("C", "A")]);
        assert_eq!(tri.scc_partition().components, vec![vec![0, 1, 2]]);
    }

    #[test]
    fn kinship_examples() {
        let g = fig_pollution();
        let y = g.node("Y").unwrap();
        let x = g.node("X").unwrap();
        assert_eq!(names(&g, &g.ancestors(&[y]).unwrap()), ["X", "Y", "W"]);
        assert_eq!(names(&g, &g.descendants(&[x]).unwrap()), ["X", "Y"]);
        assert!(g.ancestors(&[7]).is_err());
        assert_eq!(names(&g, &g.parents_of_set(&[x])), ["X", "W"]);
    }

    #[test]
    fn cycle_profiles() {
        let g = fig_stress();
        let (x, y, w) = (0, 1, 2);
        assert_eq!(
            g.cycle_profile(y).unwrap(),
            CycleProfile {
                has_self_loop: false,
                on_any_cycle: true,
                only_cycle_is_two_cycle_with: Some(x)
            }
        );
        assert_eq!(
            g.cycle_profile(w).unwrap(),
            CycleProfile {
                has_self_loop: false,
                on_any_cycle: false,
                only_cycle_is_two_cycle_with: None
            }
        );
        let looped = Scg::from_literal(&["X", "Y"], &[("X", "Y"), ("Y", "X"), ("Y", "Y")]);
        assert_eq!(
            looped.cycle_profile(1).unwrap(),
            CycleProfile {
                has_self_loop: true,
                on_any_cycle: true,
                only_cycle_is_two_cycle_with: None
            }
        );
    }
}
