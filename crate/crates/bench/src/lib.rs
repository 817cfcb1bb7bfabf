// SPDX-License-Identifier: MIT
//! Workloads shared by the benchmarks.

use scg_core::oracle::{corpus_item, CorpusConfig};
use scg_core::{identify, MicroQuery, Scg};

/// `n` series in a chain `V0 -> V1 -> ...`, each with a self-loop, plus a
/// feedback edge from the last series to the second when `cyclic`.
pub fn chain(n: usize, cyclic: bool) -> Scg {
    assert!(n >= 2, "a chain needs two series");
    let names: Vec<String> = (0..n).map(|i| format!("V{i}")).collect();
    let mut edges: Vec<(usize, usize)> = (0..n - 1).map(|i| (i, i + 1)).collect();
    edges.extend((0..n).map(|i| (i, i)));
    if cyclic && n > 2 {
        edges.push((n - 1, 1));
    }
    Scg::from_indices(names, edges)
}

/// The first `count` identifiable queries of the default corpus.
pub fn identifiable_queries(count: usize) -> Vec<(Scg, MicroQuery)> {
    let cfg = CorpusConfig::default();
    let mut out = Vec::with_capacity(count);
    let mut i = 0;
    while out.len() < count {
        let (g, q) = corpus_item(&cfg, i).expect("default corpus is valid");
        i += 1;
        if identify(&g, &q)
            .expect("corpus queries are valid")
            .kind
            .is_identifiable()
        {
            out.push((g, q));
        }
    }
    out
}
