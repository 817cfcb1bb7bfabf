// SPDX-License-Identifier: MIT
use std::collections::BTreeSet;

use super::{enumerate_compatible_templates, TemporalVar};
use crate::error::{Error, Result};
use crate::graph::Scg;

/// Temporal variables that descend from `v@offset` in at least one compatible
/// FT-DAG, restricted to `window`.
///
/// `w@s` qualifies when `w` descends from `v` in `g` and `s - offset` is at most
/// the largest lag a directed path from `v` to `w` can accumulate: unbounded when
/// the path can pass through a cycle, otherwise the longest simple path times
/// `gamma_max`.
pub fn possible_descendants(
    g: &Scg,
    v: usize,
    offset: i32,
    window: (i32, i32),
    gamma_max: u32,
) -> Result<BTreeSet<TemporalVar>> {
    g.check_node(v)?;
    let (lo, hi) = window;
    if offset < lo || offset > hi {
        return Err(Error::OutsideWindow(format!("{}@{offset}", g.name(v)), lo, hi));
    }
    let de = g.descendants(&[v])?;
    let scc = g.scc_partition();
    let cyclic: Vec<usize> = de.iter().copied().filter(|&u| g.on_cycle(u, &scc)).collect();
    let past_cycle = g.descendants(&cyclic)?;
    let longest = longest_paths(g, v, &de, &past_cycle);
    let mut out = BTreeSet::new();
    for &w in &de {
        let reach: Option<i64> = if past_cycle.contains(&w) {
            None
        } else {
            Some(longest[w] as i64 * gamma_max as i64)
        };
        for s in offset..=hi {
            let d = (s - offset) as i64;
            if d == 0 || reach.is_none_or(|r| d <= r) {
                out.insert(TemporalVar::new(w, s));
            }
        }
    }
    Ok(out)
}

/// Longest directed path length from `v` to every node of `de` that is not
/// downstream of a cycle. That part of the graph is acyclic.
fn longest_paths(g: &Scg, v: usize, de: &BTreeSet<usize>, past_cycle: &BTreeSet<usize>) -> Vec<usize> {
    let n = g.len();
    let inside = |u: usize| de.contains(&u) && !past_cycle.contains(&u);
    let mut dist = vec![0usize; n];
    if !inside(v) {
        return dist;
    }
    let mut indeg = vec![0usize; n];
    for &(a, b) in g.edges() {
        if inside(a) && inside(b) {
            indeg[b] += 1;
        }
    }
    let mut stack: Vec<usize> = (0..n).filter(|&u| inside(u) && indeg[u] == 0).collect();
    while let Some(u) = stack.pop() {
        for &c in g.children(u) {
            if inside(c) {
                dist[c] = dist[c].max(dist[u] + 1);
                indeg[c] -= 1;
                if indeg[c] == 0 {
                    stack.push(c);
                }
            }
        }
    }
    dist
}

/// Union over every compatible template of the descendants of `v@offset`
/// inside `window`; the reference for [`possible_descendants`].
pub fn possible_descendants_bruteforce(
    g: &Scg,
    v: usize,
    offset: i32,
    window: (i32, i32),
    gamma_max: u32,
    cap: usize,
) -> Result<BTreeSet<TemporalVar>> {
    g.check_node(v)?;
    let (lo, hi) = window;
    if offset < lo || offset > hi {
        return Err(Error::OutsideWindow(format!("{}@{offset}", g.name(v)), lo, hi));
    }
    let mut out = BTreeSet::new();
    for t in enumerate_compatible_templates(g, gamma_max, cap)? {
        let u = t.unroll(offset, hi);
        out.extend(u.descendants_of(TemporalVar::new(v, offset))?);
    }
    Ok(out)
}
