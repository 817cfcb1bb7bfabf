// SPDX-License-Identifier: MIT
use std::collections::BTreeSet;

use super::{identify, require_ancestor, AdjustmentSet};
use crate::error::{Error, Result};
use crate::graph::Scg;
use crate::unroll::{default_padding, FtDagTemplate, LagSet, MicroQuery, UnrolledGraph};

fn padded(tmpl: &FtDagTemplate, q: &MicroQuery, pad: u32) -> UnrolledGraph {
    tmpl.unroll(q.floor() - pad as i32, 0)
}

/// The optimal adjustment set of the template: parents of the causal nodes of
/// `(X@-gamma, Y@0)` that do not descend from the treatment.
pub fn ftdag_opt(tmpl: &FtDagTemplate, q: &MicroQuery) -> Result<AdjustmentSet> {
    q.validate(tmpl.scg())?;
    let u = padded(tmpl, q, default_padding(tmpl.scg(), q.gamma_max));
    let x = u.index(q.treatment_var()).expect("treatment lies in the window");
    let y = u.index(q.outcome_var()).expect("outcome lies in the window");
    let de = u.descendant_mask(&[x]);
    let an = u.ancestor_mask(&[y]);
    if !an[x] {
        return Err(Error::NotAncestor);
    }
    let mut out = AdjustmentSet::new();
    for v in (0..u.len()).filter(|&v| v != x && de[v] && an[v]) {
        for &p in u.parents(v) {
            if !de[p] {
                out.insert(u.var(p));
            }
        }
    }
    Ok(out)
}

/// Classical back-door test in the template, unrolled with the default padding.
pub fn classical_backdoor_check(tmpl: &FtDagTemplate, q: &MicroQuery, z: &AdjustmentSet) -> Result<bool> {
    classical_backdoor_check_padded(tmpl, q, z, default_padding(tmpl.scg(), q.gamma_max))
}

/// As [`classical_backdoor_check`], with `pad` past slices below the window floor.
pub fn classical_backdoor_check_padded(
    tmpl: &FtDagTemplate,
    q: &MicroQuery,
    z: &AdjustmentSet,
    pad: u32,
) -> Result<bool> {
    q.validate(tmpl.scg())?;
    let u = padded(tmpl, q, pad);
    u.backdoor_valid(q.treatment_var(), q.outcome_var(), z.as_set())
}

/// True when the back-door verdict does not change once the padding grows by
/// `gamma_max + 1` slices.
pub fn padding_stable(tmpl: &FtDagTemplate, q: &MicroQuery, z: &AdjustmentSet) -> Result<bool> {
    let pad = default_padding(tmpl.scg(), q.gamma_max);
    Ok(classical_backdoor_check_padded(tmpl, q, z, pad)?
        == classical_backdoor_check_padded(tmpl, q, z, pad + q.gamma_max + 1)?)
}

/// A compatible template whose lag-0 structure makes as many SCG parents as
/// possible into parents of causal nodes.
///
/// Every edge gets the lags `[1, gamma_max]`. Lag 0 is then added along each
/// directed path from `X` to `Y`, and after that to every edge into a node that
/// already has a lag-0 parent, as long as the lag-0 edges stay acyclic. Paths and
/// parents are visited in declaration order.
pub fn witness_template(g: &Scg, q: &MicroQuery) -> Result<FtDagTemplate> {
    require_ancestor(identify(g, q)?.kind)?;
    let n = g.len();
    let mut zero: BTreeSet<(usize, usize)> = BTreeSet::new();
    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut try_add = |a: usize, b: usize, zero: &mut BTreeSet<(usize, usize)>| -> bool {
        if a == b || zero.contains(&(a, b)) || reaches(&adj, b, a) {
            return false;
        }
        adj[a].push(b);
        zero.insert((a, b));
        true
    };
    for path in directed_paths(g, q.treatment, q.outcome) {
        for w in path.windows(2) {
            try_add(w[0], w[1], &mut zero);
        }
    }
    loop {
        let mut changed = false;
        let targets: BTreeSet<usize> = zero.iter().map(|&(_, v)| v).collect();
        for v in targets {
            for &p in g.parents(v) {
                changed |= try_add(p, v, &mut zero);
            }
        }
        if !changed {
            break;
        }
    }
    let lagged = LagSet::range(1, q.gamma_max);
    let lags = g
        .edges()
        .iter()
        .map(|&(a, b)| {
            let mut s = lagged;
            if zero.contains(&(a, b)) {
                s.insert(0);
            }
            s
        })
        .collect();
    FtDagTemplate::new(g.clone(), q.gamma_max, lags)
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

/// Simple directed paths from `x` to `y`, in depth-first declaration order.
fn directed_paths(g: &Scg, x: usize, y: usize) -> Vec<Vec<usize>> {
    fn go(g: &Scg, y: usize, path: &mut Vec<usize>, on: &mut [bool], out: &mut Vec<Vec<usize>>) {
        let v = *path.last().expect("non-empty path");
        for &c in g.children(v) {
            if on[c] {
                continue;
            }
            path.push(c);
            if c == y {
                out.push(path.clone());
            } else {
                on[c] = true;
                go(g, y, path, on, out);
                on[c] = false;
            }
            path.pop();
        }
    }
    let mut out = Vec::new();
    let mut on = vec![false; g.len()];
    on[x] = true;
    go(g, y, &mut vec![x], &mut on, &mut out);
    out
}
