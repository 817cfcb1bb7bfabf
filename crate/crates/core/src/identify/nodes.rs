// SPDX-License-Identifier: MIT
use std::collections::BTreeSet;

use crate::error::Result;
use crate::graph::Scg;

/// `cn(X, Y)`: nodes other than `x` on some simple directed path from `x` to `y`.
pub fn causal_nodes(g: &Scg, x: usize, y: usize) -> Result<BTreeSet<usize>> {
    g.check_node(x)?;
    g.check_node(y)?;
    let mut found = vec![false; g.len()];
    if x != y {
        let mut on_path = vec![false; g.len()];
        let mut path = vec![x];
        on_path[x] = true;
        simple_paths(g, y, &mut path, &mut on_path, &mut found);
    }
    Ok((0..g.len()).filter(|&v| found[v] && v != x).collect())
}

fn simple_paths(g: &Scg, y: usize, path: &mut Vec<usize>, on_path: &mut [bool], found: &mut [bool]) {
    let v = *path.last().expect("path starts at the treatment");
    for &c in g.children(v) {
        if on_path[c] {
            continue;
        }
        if c == y {
            for &u in path.iter() {
                found[u] = true;
            }
            found[y] = true;
            continue;
        }
        // A node already known to be causal still has to be explored: other
        // nodes may only reach y through it.
        on_path[c] = true;
        path.push(c);
        simple_paths(g, y, path, on_path, found);
        path.pop();
        on_path[c] = false;
    }
}

/// `ecn(X, Y)`: the union of the strongly connected components of the causal nodes.
pub fn extended_causal_nodes(g: &Scg, x: usize, y: usize) -> Result<BTreeSet<usize>> {
    let cn = causal_nodes(g, x, y)?;
    let scc = g.scc_partition();
    Ok(cn.iter().flat_map(|&v| scc.component(v).iter().copied()).collect())
}

/// `ecnbd(X, Y, Z2)`: members of `ecn(X, Y)` lying on a back-door path
/// `X <- ... Y` whose colliders all have an instance in `Z2`.
///
/// `opened` lists the series present in `Z2`. Paths are simple; a 2-cycle may
/// be traversed in either orientation.
pub fn backdoor_restricted_ecn(g: &Scg, x: usize, y: usize, opened: &BTreeSet<usize>) -> Result<BTreeSet<usize>> {
    let ecn = extended_causal_nodes(g, x, y)?;
    Ok(backdoor_restricted_with(g, x, y, &ecn, opened))
}

pub(crate) fn backdoor_restricted_with(
    g: &Scg,
    x: usize,
    y: usize,
    ecn: &BTreeSet<usize>,
    opened: &BTreeSet<usize>,
) -> BTreeSet<usize> {
    if ecn.is_empty() || x == y {
        return BTreeSet::new();
    }
    let mut search = BackdoorSearch {
        g,
        y,
        opened,
        on_path: vec![false; g.len()],
        path: vec![x],
        hits: vec![false; g.len()],
    };
    search.on_path[x] = true;
    for &p in g.parents(x) {
        if p == x {
            continue;
        }
        // The first edge points into x, so p is entered against the arrow.
        search.step(p, false);
    }
    ecn.iter().copied().filter(|&v| search.hits[v]).collect()
}

struct BackdoorSearch<'a> {
    g: &'a Scg,
    y: usize,
    opened: &'a BTreeSet<usize>,
    on_path: Vec<bool>,
    path: Vec<usize>,
    hits: Vec<bool>,
}

impl BackdoorSearch<'_> {
    /// Visits `v`; `arrow_into_v` tells whether the edge just traversed points at `v`.
    fn step(&mut self, v: usize, arrow_into_v: bool) {
        if self.on_path[v] {
            return;
        }
        if v == self.y {
            for &u in &self.path {
                self.hits[u] = true;
            }
            self.hits[v] = true;
            return;
        }
        self.on_path[v] = true;
        self.path.push(v);
        let g = self.g;
        let mut next: Vec<(usize, bool)> = Vec::new();
        for &c in g.children(v) {
            if c != v {
                next.push((c, true));
            }
        }
        for &p in g.parents(v) {
            if p != v {
                next.push((p, false));
            }
        }
        for (w, into_w) in next {
            // Leaving against an arrow means the edge points into v.
            let collider = arrow_into_v && !into_w;
            if collider && !self.opened.contains(&v) {
                continue;
            }
            self.step(w, into_w);
        }
        self.path.pop();
        self.on_path[v] = false;
    }
}
