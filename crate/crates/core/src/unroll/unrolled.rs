// SPDX-License-Identifier: MIT
use std::collections::BTreeSet;
use std::fmt::Write as _;

use super::{FtDagTemplate, TemporalVar};
use crate::error::{Error, Result};
use crate::graph::Scg;

/// A template instantiated over the offsets `[lo, hi]`.
///
/// Node `s@t` has index `(t - lo) * n + s`.
#[derive(Debug, Clone)]
pub struct UnrolledGraph {
    scg: Scg,
    lo: i32,
    hi: i32,
    parents: Vec<Vec<usize>>,
    children: Vec<Vec<usize>>,
}

impl UnrolledGraph {
    pub fn new(tmpl: &FtDagTemplate, lo: i32, hi: i32) -> Self {
        assert!(lo <= hi, "empty window [{lo}, {hi}]");
        let n = tmpl.scg().len();
        let size = n * (hi - lo + 1) as usize;
        let mut parents = vec![Vec::new(); size];
        let mut children = vec![Vec::new(); size];
        for (a, b, lag) in tmpl.lagged_edges() {
            for t in (lo + lag as i32)..=hi {
                let u = (t - lag as i32 - lo) as usize * n + a;
                let v = (t - lo) as usize * n + b;
                parents[v].push(u);
                children[u].push(v);
            }
        }
        for list in parents.iter_mut().chain(children.iter_mut()) {
            list.sort_unstable();
        }
        UnrolledGraph {
            scg: tmpl.scg().clone(),
            lo,
            hi,
            parents,
            children,
        }
    }

    pub fn scg(&self) -> &Scg {
        &self.scg
    }

    pub fn window(&self) -> (i32, i32) {
        (self.lo, self.hi)
    }

    pub fn len(&self) -> usize {
        self.parents.len()
    }

    pub fn is_empty(&self) -> bool {
        self.parents.is_empty()
    }

    pub fn contains(&self, v: TemporalVar) -> bool {
        v.series < self.scg.len() && (self.lo..=self.hi).contains(&v.offset)
    }

    pub fn index(&self, v: TemporalVar) -> Option<usize> {
        self.contains(v)
            .then(|| (v.offset - self.lo) as usize * self.scg.len() + v.series)
    }

    fn index_checked(&self, v: TemporalVar) -> Result<usize> {
        self.index(v).ok_or_else(|| {
            let name = self.scg.names().get(v.series).map_or("?", |s| s.as_str());
            Error::OutsideWindow(format!("{name}@{}", v.offset), self.lo, self.hi)
        })
    }

    pub fn var(&self, i: usize) -> TemporalVar {
        let n = self.scg.len();
        TemporalVar::new(i % n, self.lo + (i / n) as i32)
    }

    pub fn parents(&self, i: usize) -> &[usize] {
        &self.parents[i]
    }

    pub fn children(&self, i: usize) -> &[usize] {
        &self.children[i]
    }

    pub fn edge_count(&self) -> usize {
        self.children.iter().map(Vec::len).sum()
    }

    pub fn edges(&self) -> Vec<(TemporalVar, TemporalVar)> {
        let mut out: Vec<_> = (0..self.len())
            .flat_map(|u| self.children[u].iter().map(move |&v| (u, v)))
            .map(|(u, v)| (self.var(u), self.var(v)))
            .collect();
        out.sort();
        out
    }

    /// One `A@-1 -> B@0` line per edge.
    pub fn to_edge_list(&self) -> String {
        let mut s = String::new();
        for (u, v) in self.edges() {
            let _ = writeln!(s, "{} -> {}", u.label(&self.scg), v.label(&self.scg));
        }
        s
    }

    pub fn is_acyclic(&self) -> bool {
        let mut indeg: Vec<usize> = self.parents.iter().map(Vec::len).collect();
        let mut stack: Vec<usize> = (0..self.len()).filter(|&v| indeg[v] == 0).collect();
        let mut seen = 0;
        while let Some(v) = stack.pop() {
            seen += 1;
            for &w in &self.children[v] {
                indeg[w] -= 1;
                if indeg[w] == 0 {
                    stack.push(w);
                }
            }
        }
        seen == self.len()
    }

    fn closure(&self, seeds: &[usize], up: bool) -> Vec<bool> {
        let mut mark = vec![false; self.len()];
        let mut stack = Vec::new();
        for &s in seeds {
            if !mark[s] {
                mark[s] = true;
                stack.push(s);
            }
        }
        while let Some(v) = stack.pop() {
            let next = if up { &self.parents[v] } else { &self.children[v] };
            for &w in next {
                if !mark[w] {
                    mark[w] = true;
                    stack.push(w);
                }
            }
        }
        mark
    }

    /// Ancestor mask (reflexive).
    pub fn ancestor_mask(&self, seeds: &[usize]) -> Vec<bool> {
        self.closure(seeds, true)
    }

    /// Descendant mask (reflexive).
    pub fn descendant_mask(&self, seeds: &[usize]) -> Vec<bool> {
        self.closure(seeds, false)
    }

    pub fn descendants_of(&self, v: TemporalVar) -> Result<BTreeSet<TemporalVar>> {
        let i = self.index_checked(v)?;
        Ok(self.mask_to_vars(&self.descendant_mask(&[i])))
    }

    pub fn ancestors_of(&self, v: TemporalVar) -> Result<BTreeSet<TemporalVar>> {
        let i = self.index_checked(v)?;
        Ok(self.mask_to_vars(&self.ancestor_mask(&[i])))
    }

    pub fn mask_to_vars(&self, mask: &[bool]) -> BTreeSet<TemporalVar> {
        mask.iter()
            .enumerate()
            .filter(|(_, &m)| m)
            .map(|(i, _)| self.var(i))
            .collect()
    }

    fn indices(&self, vars: &BTreeSet<TemporalVar>) -> Result<Vec<usize>> {
        vars.iter().map(|&v| self.index_checked(v)).collect()
    }

    /// True iff `z` blocks every path between `a` and `b`.
    pub fn d_separated(
        &self,
        a: &BTreeSet<TemporalVar>,
        b: &BTreeSet<TemporalVar>,
        z: &BTreeSet<TemporalVar>,
    ) -> Result<bool> {
        let (a, b, z) = (self.indices(a)?, self.indices(b)?, self.indices(z)?);
        Ok(!self.reachable(&a, &b, &z, &[]))
    }

    /// Classical back-door test: no member of `z` descends from `x`, and `z`
    /// separates `x` from `y` once the outgoing edges of `x` are removed.
    pub fn backdoor_valid(&self, x: TemporalVar, y: TemporalVar, z: &BTreeSet<TemporalVar>) -> Result<bool> {
        let xi = self.index_checked(x)?;
        let yi = self.index_checked(y)?;
        let zi = self.indices(z)?;
        let de = self.descendant_mask(&[xi]);
        if zi.iter().any(|&v| de[v]) {
            return Ok(false);
        }
        Ok(!self.reachable(&[xi], &[yi], &zi, &[xi]))
    }

    /// Back-door test on raw indices, with the descendant mask of `x` precomputed.
    pub(crate) fn backdoor_valid_raw(&self, x: usize, y: usize, z: &[usize], de_x: &[bool]) -> bool {
        !z.iter().any(|&v| de_x[v]) && !self.reachable(&[x], &[y], z, &[x])
    }

    /// Bayes-ball reachability from `sources` to `targets` given `z`, with the
    /// outgoing edges of every node in `cut` removed.
    fn reachable(&self, sources: &[usize], targets: &[usize], z: &[usize], cut: &[usize]) -> bool {
        let n = self.len();
        let mut in_z = vec![false; n];
        for &v in z {
            in_z[v] = true;
        }
        let mut is_cut = vec![false; n];
        for &v in cut {
            is_cut[v] = true;
        }
        let mut is_target = vec![false; n];
        for &v in targets {
            is_target[v] = true;
        }
        // Ancestors of z in the cut graph.
        let mut anc = vec![false; n];
        let mut stack: Vec<usize> = z.to_vec();
        for &v in z {
            anc[v] = true;
        }
        while let Some(v) = stack.pop() {
            for &p in &self.parents[v] {
                if !is_cut[p] && !anc[p] {
                    anc[p] = true;
                    stack.push(p);
                }
            }
        }
        // Direction flag: true when the ball arrived from a child (travelling up).
        let mut seen = vec![[false; 2]; n];
        let mut queue: Vec<(usize, bool)> = Vec::new();
        for &s in sources {
            seen[s][1] = true;
            queue.push((s, true));
        }
        while let Some((v, up)) = queue.pop() {
            if is_target[v] && !in_z[v] {
                return true;
            }
            let mut push = |w: usize, dir: bool, queue: &mut Vec<(usize, bool)>| {
                let k = dir as usize;
                if !seen[w][k] {
                    seen[w][k] = true;
                    queue.push((w, dir));
                }
            };
            if up {
                if in_z[v] {
                    continue;
                }
                for &p in &self.parents[v] {
                    if !is_cut[p] {
                        push(p, true, &mut queue);
                    }
                }
                if !is_cut[v] {
                    for &c in &self.children[v] {
                        push(c, false, &mut queue);
                    }
                }
            } else {
                if !in_z[v] && !is_cut[v] {
                    for &c in &self.children[v] {
                        push(c, false, &mut queue);
                    }
                }
                if anc[v] {
                    for &p in &self.parents[v] {
                        if !is_cut[p] {
                            push(p, true, &mut queue);
                        }
                    }
                }
            }
        }
        false
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tv(s: usize, t: i32) -> TemporalVar {
        TemporalVar::new(s, t)
    }

    fn set(v: &[TemporalVar]) -> BTreeSet<TemporalVar> {
        v.iter().copied().collect()
    }

    fn pollution_template() -> FtDagTemplate {
        let g = Scg::from_literal(&["X", "Y", "W"], &[("W", "X"), ("X", "Y"), ("W", "W"), ("X", "X")]);
        FtDagTemplate::from_named(
            &g,
            1,
            &[
                ("W", "X", &[0, 1]),
                ("X", "Y", &[0, 1]),
                ("W", "W", &[1]),
                ("X", "X", &[1]),
            ],
        )
        .unwrap()
    }

    #[test]
    fn unrolled_edges() {
        let u = pollution_template().unroll(-2, 0);
        assert!(u.is_acyclic());
        // Per slice: W->X, X->Y at lag 0 (3 slices); lag 1 edges W->X, X->Y, W->W, X->X (2 slices).
        assert_eq!(u.edge_count(), 3 * 2 + 2 * 4);
        let single = pollution_template().unroll(0, 0);
        assert_eq!(single.edge_count(), 2);
        assert!(single.to_edge_list().contains("W@0 -> X@0"));
    }

    #[test]
    fn chain_and_collider() {
        let g = Scg::from_literal(&["A", "B", "C"], &[("A", "B"), ("B", "C")]);
        let t = FtDagTemplate::from_named(&g, 1, &[("A", "B", &[0]), ("B", "C", &[0])]).unwrap();
        let u = t.unroll(0, 0);
        let (a, b, c) = (set(&[tv(0, 0)]), set(&[tv(1, 0)]), set(&[tv(2, 0)]));
        assert!(u.d_separated(&a, &c, &b).unwrap());
        assert!(!u.d_separated(&a, &c, &BTreeSet::new()).unwrap());

        let g = Scg::from_literal(&["A", "B", "C"], &[("A", "B"), ("C", "B")]);
        let t = FtDagTemplate::from_named(&g, 1, &[("A", "B", &[0]), ("C", "B", &[0])]).unwrap();
        let u = t.unroll(0, 0);
        assert!(u.d_separated(&a, &c, &BTreeSet::new()).unwrap());
        assert!(!u.d_separated(&a, &c, &b).unwrap());
    }

    #[test]
    fn confounded_treatment_is_connected() {
        let u = pollution_template().unroll(-2, 0);
        let x1 = set(&[tv(0, -1)]);
        let y0 = set(&[tv(1, 0)]);
        assert!(!u.d_separated(&x1, &y0, &BTreeSet::new()).unwrap());
        assert!(u
            .backdoor_valid(tv(0, -1), tv(1, 0), &set(&[tv(2, -1), tv(2, 0), tv(0, -2)]))
            .unwrap());
        assert!(u.backdoor_valid(tv(0, -1), tv(1, 0), &set(&[tv(2, -1)])).unwrap());
        assert!(!u.backdoor_valid(tv(0, -1), tv(1, 0), &set(&[tv(0, -2)])).unwrap());
        assert!(!u.backdoor_valid(tv(0, -1), tv(1, 0), &BTreeSet::new()).unwrap());
        // A descendant of the treatment is never allowed.
        assert!(!u
            .backdoor_valid(tv(0, -1), tv(1, 0), &set(&[tv(2, -1), tv(2, 0), tv(0, -2), tv(0, 0)]))
            .unwrap());
    }

    #[test]
    fn outside_window_is_an_error() {
        let u = pollution_template().unroll(-1, 0);
        let r = u.d_separated(&set(&[tv(0, -3)]), &set(&[tv(1, 0)]), &BTreeSet::new());
        assert!(matches!(r, Err(Error::OutsideWindow(..))));
    }
}
