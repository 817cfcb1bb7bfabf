// SPDX-License-Identifier: MIT
//! Seeded random corpora and brute-force cross-checks of the criterion against
//! the classical back-door test in compatible templates.

use std::collections::{BTreeMap, BTreeSet};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::Scg;
use crate::identify::{
    backdoor_restricted_ecn, canonical_sets, check_in, ftdag_opt, identify, identify_alt, padding_stable, qopt_in,
    witness_template, AdjustmentSet, CheckOptions, Ctx, VerdictKind,
};
use crate::unroll::{
    count_compatible_templates, default_padding, densest_count, densest_templates, enumerate_compatible_templates,
    FtDagTemplate, MicroQuery, MicroQueryJson, TemplateJson, TemporalVar, UnrolledGraph, DEFAULT_TEMPLATE_CAP, MAX_LAG,
};

/// Parameters of a random corpus. Every graph is a pure function of
/// `(seed, index)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusConfig {
    pub n_graphs: usize,
    /// Inclusive range of node counts.
    pub node_count_range: (usize, usize),
    /// Probability of each ordered pair, self-loops included.
    pub edge_probability: f64,
    pub allow_cycles: bool,
    pub gamma_max: u32,
    /// Graphs with more densest templates than this are skipped.
    pub template_cap: usize,
    pub seed: u64,
    pub max_subset_size: usize,
    /// How far back the templates are unrolled when sets are validated.
    #[serde(default)]
    pub horizon: PastHorizon,
}

/// Past extent of the unrolled templates used for validation.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PastHorizon {
    /// Padded well below the adjustment window, standing in for an unbounded past.
    #[default]
    Unbounded,
    /// Cut at the window floor `-(gamma + gamma_max)`: nothing earlier exists.
    Floor,
}

impl Default for CorpusConfig {
    fn default() -> Self {
        CorpusConfig {
            n_graphs: 200,
            node_count_range: (5, 6),
            edge_probability: 0.3,
            allow_cycles: true,
            gamma_max: 1,
            template_cap: DEFAULT_TEMPLATE_CAP,
            seed: 7,
            max_subset_size: 5,
            horizon: PastHorizon::Unbounded,
        }
    }
}

impl CorpusConfig {
    pub fn validate(&self) -> Result<()> {
        let (lo, hi) = self.node_count_range;
        if lo < 2 || hi > 8 || lo > hi {
            return Err(Error::InvalidConfig(format!(
                "node count range ({lo}, {hi}) must lie within [2, 8]"
            )));
        }
        if !(0.0..=1.0).contains(&self.edge_probability) {
            return Err(Error::InvalidConfig(format!(
                "edge probability {} is not in [0, 1]",
                self.edge_probability
            )));
        }
        if self.template_cap == 0 {
            return Err(Error::InvalidConfig("template cap must be at least 1".into()));
        }
        if self.gamma_max == 0 || self.gamma_max > MAX_LAG {
            return Err(Error::InvalidConfig(format!(
                "unsupported gamma_max {}",
                self.gamma_max
            )));
        }
        Ok(())
    }

    fn rng(&self, index: usize) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(index as u64);
        rng
    }
}

fn draw_scg(cfg: &CorpusConfig, rng: &mut ChaCha8Rng) -> Scg {
    let (lo, hi) = cfg.node_count_range;
    let n = rng.random_range(lo..=hi);
    let mut order: Vec<usize> = (0..n).collect();
    if !cfg.allow_cycles {
        order.shuffle(rng);
    }
    let mut rank = vec![0; n];
    for (i, &v) in order.iter().enumerate() {
        rank[v] = i;
    }
    let mut edges = Vec::new();
    for a in 0..n {
        for b in 0..n {
            // One draw per pair keeps the stream aligned across modes.
            let keep = rng.random_bool(cfg.edge_probability);
            if keep && (cfg.allow_cycles || a == b || rank[a] < rank[b]) {
                edges.push((a, b));
            }
        }
    }
    Scg::from_indices((0..n).map(|i| format!("V{i}")).collect(), edges)
}

/// The `index`-th graph of the corpus. Without cycles, only self-loops and
/// edges that agree with a random order survive.
pub fn random_scg(cfg: &CorpusConfig, index: usize) -> Result<Scg> {
    cfg.validate()?;
    Ok(draw_scg(cfg, &mut cfg.rng(index)))
}

/// The `index`-th graph together with its query.
///
/// The query is drawn uniformly from the identifiable `(X, Y, gamma)` triples
/// with `X` an ancestor of `Y` and `gamma ≤ 2`. If there are none, ancestor
/// pairs are used, and failing that any pair.
pub fn corpus_item(cfg: &CorpusConfig, index: usize) -> Result<(Scg, MicroQuery)> {
    cfg.validate()?;
    let mut rng = cfg.rng(index);
    let g = draw_scg(cfg, &mut rng);
    let mut identifiable = Vec::new();
    let mut ancestral = Vec::new();
    let mut any = Vec::new();
    for y in 0..g.len() {
        let an = g.ancestors(&[y])?;
        for x in (0..g.len()).filter(|&x| x != y) {
            for gamma in 0..=2 {
                let q = MicroQuery::new(x, y, gamma, cfg.gamma_max);
                any.push(q);
                if an.contains(&x) {
                    ancestral.push(q);
                    if identify(&g, &q)?.kind.is_identifiable() {
                        identifiable.push(q);
                    }
                }
            }
        }
    }
    let pool = [identifiable, ancestral, any]
        .into_iter()
        .find(|p| !p.is_empty())
        .expect("at least two nodes");
    let q = pool[rng.random_range(0..pool.len())];
    Ok((g, q))
}

/// What a set must achieve in every template.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Validity {
    /// The classical back-door test.
    BackDoor,
    /// The treatment does not reach the outcome and the set holds no descendant
    /// of the treatment, so the effect reduces to `P(y_t)`.
    NoEffect,
}

struct Prepared {
    u: UnrolledGraph,
    x: usize,
    y: usize,
    de_x: Vec<bool>,
}

/// Validity of adjustment sets across a fixed list of templates, with each
/// template unrolled once.
pub struct CommonBackdoor {
    templates: Vec<FtDagTemplate>,
    prepared: Vec<Prepared>,
    validity: Validity,
}

impl CommonBackdoor {
    pub fn new(templates: Vec<FtDagTemplate>, q: &MicroQuery, validity: Validity) -> Self {
        Self::with_horizon(templates, q, validity, PastHorizon::Unbounded)
    }

    pub fn with_horizon(
        templates: Vec<FtDagTemplate>,
        q: &MicroQuery,
        validity: Validity,
        horizon: PastHorizon,
    ) -> Self {
        let prepared = templates
            .iter()
            .map(|t| {
                let pad = match horizon {
                    PastHorizon::Unbounded => default_padding(t.scg(), q.gamma_max) as i32,
                    PastHorizon::Floor => 0,
                };
                let u = t.unroll(q.floor() - pad, 0);
                let x = u.index(q.treatment_var()).expect("treatment lies in the window");
                let y = u.index(q.outcome_var()).expect("outcome lies in the window");
                let de_x = u.descendant_mask(&[x]);
                Prepared { u, x, y, de_x }
            })
            .collect();
        CommonBackdoor {
            templates,
            prepared,
            validity,
        }
    }

    pub fn templates(&self) -> &[FtDagTemplate] {
        &self.templates
    }

    /// Index of the first template in which `z` fails, if any.
    pub fn first_failure(&self, z: &AdjustmentSet) -> Result<Option<usize>> {
        let Some(first) = self.prepared.first() else {
            return Ok(None);
        };
        let idx: Vec<usize> = z
            .iter()
            .map(|&v| {
                first.u.index(v).ok_or_else(|| {
                    let (lo, hi) = first.u.window();
                    Error::OutsideWindow(v.label(first.u.scg()), lo, hi)
                })
            })
            .collect::<Result<_>>()?;
        for (i, p) in self.prepared.iter().enumerate() {
            let ok = match self.validity {
                Validity::BackDoor => p.u.backdoor_valid_raw(p.x, p.y, &idx, &p.de_x),
                Validity::NoEffect => !p.de_x[p.y] && !idx.iter().any(|&v| p.de_x[v]),
            };
            if !ok {
                return Ok(Some(i));
            }
        }
        Ok(None)
    }

    pub fn is_valid(&self, z: &AdjustmentSet) -> Result<bool> {
        Ok(self.first_failure(z)?.is_none())
    }
}

/// True iff `z` passes the classical back-door test in every compatible template.
pub fn common_backdoor_valid(g: &Scg, q: &MicroQuery, z: &AdjustmentSet, cap: usize) -> Result<bool> {
    q.validate(g)?;
    let templates = enumerate_compatible_templates(g, q.gamma_max, cap)?;
    CommonBackdoor::new(templates, q, Validity::BackDoor).is_valid(z)
}

/// As [`common_backdoor_valid`], checking only the densest templates.
///
/// Every template unrolls to a subgraph of some densest one, and removing
/// edges never breaks back-door validity, so the two functions agree.
pub fn common_backdoor_valid_densest(g: &Scg, q: &MicroQuery, z: &AdjustmentSet, cap: usize) -> Result<bool> {
    q.validate(g)?;
    let n = densest_count(g);
    if n > cap {
        return Err(Error::OverCap { cap, counted: n });
    }
    CommonBackdoor::new(densest_templates(g, q.gamma_max), q, Validity::BackDoor).is_valid(z)
}

/// Which templates a check ran over.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum TemplateBasis {
    All,
    Densest,
}

/// All compatible templates when there are at most `cap` of them, the densest
/// ones otherwise. Fails when even the densest ones exceed `cap`.
fn validation_templates(g: &Scg, gamma_max: u32, cap: usize) -> Result<(Vec<FtDagTemplate>, TemplateBasis)> {
    let densest = densest_count(g);
    if densest > cap {
        return Err(Error::OverCap { cap, counted: densest });
    }
    match count_compatible_templates(g, gamma_max) {
        Some(total) if total <= cap as u128 => {
            Ok((enumerate_compatible_templates(g, gamma_max, cap)?, TemplateBasis::All))
        }
        _ => Ok((densest_templates(g, gamma_max), TemplateBasis::Densest)),
    }
}

fn window_vars(g: &Scg, q: &MicroQuery) -> Vec<TemporalVar> {
    let (lo, hi) = q.window();
    (0..g.len())
        .flat_map(|s| (lo..=hi).map(move |o| TemporalVar::new(s, o)))
        .collect()
}

/// Calls `f` on every subset of `pool` with at most `k` members, smallest first.
fn for_each_subset(pool: &[TemporalVar], k: usize, mut f: impl FnMut(&AdjustmentSet) -> Result<()>) -> Result<()> {
    fn go(
        pool: &[TemporalVar],
        start: usize,
        left: usize,
        cur: &mut Vec<TemporalVar>,
        f: &mut dyn FnMut(&AdjustmentSet) -> Result<()>,
    ) -> Result<()> {
        if left == 0 {
            return f(&cur.iter().copied().collect());
        }
        for i in start..pool.len() {
            cur.push(pool[i]);
            go(pool, i + 1, left - 1, cur, f)?;
            cur.pop();
        }
        Ok(())
    }
    for size in 0..=k.min(pool.len()) {
        go(pool, 0, size, &mut Vec::new(), &mut f)?;
    }
    Ok(())
}

/// One CSV row per corpus graph.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GraphRow {
    pub index: usize,
    pub nodes: usize,
    pub edges: usize,
    pub treatment: String,
    pub outcome: String,
    pub gamma: u32,
    pub verdict: String,
    /// `tested`, `over_cap` or `not_identifiable`.
    pub status: String,
    pub densest_templates: usize,
    /// `None` when too large to count exactly.
    pub compatible_templates: Option<u128>,
    pub templates_checked: usize,
    pub sets_checked: usize,
    pub sets_sound: usize,
    pub baseline_checked: usize,
    pub baseline_sound: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct Counterexample {
    pub graph_index: usize,
    pub graph: Scg,
    pub query: MicroQueryJson,
    pub set: Vec<String>,
    /// `canonical:<name>`, `enumerated` or `baseline:<name>`.
    pub source: String,
    pub template: TemplateJson,
}

#[derive(Debug, Clone, Serialize)]
pub struct SoundnessReport {
    pub config: CorpusConfig,
    pub graphs_tested: usize,
    pub graphs_skipped_over_cap: usize,
    pub graphs_not_identifiable: usize,
    pub sets_checked: usize,
    pub sets_sound: usize,
    pub counterexamples: Vec<Counterexample>,
    /// `A¹` and `A²` are tallied apart: they are baselines, not criterion output.
    pub baseline_checked: usize,
    pub baseline_sound: usize,
    pub baseline_failures: Vec<Counterexample>,
    pub rows: Vec<GraphRow>,
}

impl SoundnessReport {
    pub fn is_sound(&self) -> bool {
        self.counterexamples.is_empty()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serialization is infallible")
    }

    pub fn to_csv(&self) -> Result<String> {
        rows_to_csv(&self.rows)
    }
}

pub(crate) fn rows_to_csv<T: Serialize>(rows: &[T]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r).map_err(|e| Error::InvalidConfig(e.to_string()))?;
    }
    let bytes = w.into_inner().map_err(|e| Error::InvalidConfig(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

struct ItemOutcome {
    row: GraphRow,
    counterexamples: Vec<Counterexample>,
    baseline_failures: Vec<Counterexample>,
}

fn counterexample(
    index: usize,
    g: &Scg,
    q: &MicroQuery,
    z: &AdjustmentSet,
    source: &str,
    tmpl: &FtDagTemplate,
) -> Counterexample {
    Counterexample {
        graph_index: index,
        graph: g.clone(),
        query: q.to_wire(g),
        set: z.labels(g),
        source: source.to_string(),
        template: tmpl.to_json_value(),
    }
}

fn soundness_item(cfg: &CorpusConfig, index: usize, opts: CheckOptions) -> Result<ItemOutcome> {
    let (g, q) = corpus_item(cfg, index)?;
    let mut out = ItemOutcome {
        row: GraphRow {
            index,
            nodes: g.len(),
            edges: g.edges().len(),
            treatment: g.name(q.treatment).to_string(),
            outcome: g.name(q.outcome).to_string(),
            gamma: q.gamma,
            verdict: String::new(),
            status: "tested".into(),
            densest_templates: densest_count(&g),
            compatible_templates: count_compatible_templates(&g, q.gamma_max),
            templates_checked: 0,
            sets_checked: 0,
            sets_sound: 0,
            baseline_checked: 0,
            baseline_sound: 0,
        },
        counterexamples: Vec::new(),
        baseline_failures: Vec::new(),
    };
    let ctx = Ctx::new(&g, &q)?;
    out.row.verdict = ctx.kind.to_string();
    if out.row.densest_templates > cfg.template_cap {
        out.row.status = "over_cap".into();
        return Ok(out);
    }
    if ctx.kind == VerdictKind::NotIdentifiable {
        out.row.status = "not_identifiable".into();
        return Ok(out);
    }
    let (templates, _) = validation_templates(&g, q.gamma_max, cfg.template_cap)?;
    out.row.templates_checked = templates.len();
    let mut sets: BTreeMap<AdjustmentSet, String> = BTreeMap::new();
    let mut baselines = Vec::new();
    let validity = if ctx.kind == VerdictKind::NonAncestor {
        sets.insert(AdjustmentSet::new(), "canonical:empty".into());
        Validity::NoEffect
    } else {
        for (name, z) in canonical_sets(&g, &q)? {
            if name == "a1" || name == "a2" {
                baselines.push((name, z));
            } else {
                sets.entry(z).or_insert(format!("canonical:{name}"));
            }
        }
        let pool: Vec<TemporalVar> = window_vars(&g, &q)
            .into_iter()
            .filter(|v| opts.skip_descendant_test || !ctx.d.contains(v))
            .collect();
        for_each_subset(&pool, cfg.max_subset_size, |z| {
            if check_in(&ctx, z, opts).satisfied {
                sets.entry(z.clone()).or_insert_with(|| "enumerated".into());
            }
            Ok(())
        })?;
        Validity::BackDoor
    };
    let checker = CommonBackdoor::with_horizon(templates, &q, validity, cfg.horizon);
    if cfg.horizon == PastHorizon::Floor {
        // The baselines reach below the floor.
        baselines.clear();
    }
    for (z, source) in &sets {
        out.row.sets_checked += 1;
        match checker.first_failure(z)? {
            None => out.row.sets_sound += 1,
            Some(t) => out
                .counterexamples
                .push(counterexample(index, &g, &q, z, source, &checker.templates()[t])),
        }
    }
    for (name, z) in &baselines {
        out.row.baseline_checked += 1;
        match checker.first_failure(z)? {
            None => out.row.baseline_sound += 1,
            Some(t) => out.baseline_failures.push(counterexample(
                index,
                &g,
                &q,
                z,
                &format!("baseline:{name}"),
                &checker.templates()[t],
            )),
        }
    }
    Ok(out)
}

/// Runs the soundness experiment over the corpus of `cfg`.
pub fn soundness_experiment(cfg: &CorpusConfig) -> Result<SoundnessReport> {
    soundness_experiment_with(cfg, CheckOptions::default())
}

/// As [`soundness_experiment`], with the criterion run under `opts`.
pub fn soundness_experiment_with(cfg: &CorpusConfig, opts: CheckOptions) -> Result<SoundnessReport> {
    cfg.validate()?;
    let items = (0..cfg.n_graphs)
        .into_par_iter()
        .map(|i| soundness_item(cfg, i, opts))
        .collect::<Result<Vec<_>>>()?;
    let mut report = SoundnessReport {
        config: cfg.clone(),
        graphs_tested: 0,
        graphs_skipped_over_cap: 0,
        graphs_not_identifiable: 0,
        sets_checked: 0,
        sets_sound: 0,
        counterexamples: Vec::new(),
        baseline_checked: 0,
        baseline_sound: 0,
        baseline_failures: Vec::new(),
        rows: Vec::with_capacity(items.len()),
    };
    for item in items {
        match item.row.status.as_str() {
            "over_cap" => report.graphs_skipped_over_cap += 1,
            "not_identifiable" => report.graphs_not_identifiable += 1,
            _ => report.graphs_tested += 1,
        }
        report.sets_checked += item.row.sets_checked;
        report.sets_sound += item.row.sets_sound;
        report.baseline_checked += item.row.baseline_checked;
        report.baseline_sound += item.row.baseline_sound;
        report.counterexamples.extend(item.counterexamples);
        report.baseline_failures.extend(item.baseline_failures);
        report.rows.push(item.row);
    }
    Ok(report)
}

/// Sets that are valid in every template yet rejected by the criterion.
#[derive(Debug, Clone, Serialize)]
pub struct ProbeReport {
    pub query: MicroQueryJson,
    pub verdict: String,
    pub templates_checked: usize,
    pub basis: TemplateBasis,
    pub sets_scanned: usize,
    pub common_valid: usize,
    pub criterion_accepted: usize,
    pub rejected: Vec<Vec<String>>,
}

/// Scans every subset of the window minus the possible descendants, up to
/// `max_subset_size` members. Keep the window small: the scan is exhaustive.
pub fn completeness_probe(g: &Scg, q: &MicroQuery, cap: usize, max_subset_size: usize) -> Result<ProbeReport> {
    q.validate(g)?;
    let ctx = Ctx::new(g, q)?;
    let (templates, basis) = validation_templates(g, q.gamma_max, cap)?;
    let validity = if ctx.kind == VerdictKind::NonAncestor {
        Validity::NoEffect
    } else {
        Validity::BackDoor
    };
    let checker = CommonBackdoor::new(templates, q, validity);
    let mut report = ProbeReport {
        query: q.to_wire(g),
        verdict: ctx.kind.to_string(),
        templates_checked: checker.templates().len(),
        basis,
        sets_scanned: 0,
        common_valid: 0,
        criterion_accepted: 0,
        rejected: Vec::new(),
    };
    let pool: Vec<TemporalVar> = window_vars(g, q).into_iter().filter(|v| !ctx.d.contains(v)).collect();
    for_each_subset(&pool, max_subset_size, |z| {
        report.sets_scanned += 1;
        let accepted = check_in(&ctx, z, CheckOptions::default()).satisfied;
        report.criterion_accepted += accepted as usize;
        if checker.is_valid(z)? {
            report.common_valid += 1;
            if !accepted {
                report.rejected.push(z.labels(g));
            }
        }
        Ok(())
    })?;
    Ok(report)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProbeRow {
    pub index: usize,
    pub nodes: usize,
    pub verdict: String,
    pub status: String,
    pub sets_scanned: usize,
    pub common_valid: usize,
    pub rejected: usize,
}

/// [`completeness_probe`] on every corpus graph; over-cap graphs are listed
/// with status `over_cap`.
pub fn completeness_corpus(cfg: &CorpusConfig) -> Result<Vec<ProbeRow>> {
    cfg.validate()?;
    (0..cfg.n_graphs)
        .into_par_iter()
        .map(|i| {
            let (g, q) = corpus_item(cfg, i)?;
            let mut row = ProbeRow {
                index: i,
                nodes: g.len(),
                verdict: String::new(),
                status: "tested".into(),
                sets_scanned: 0,
                common_valid: 0,
                rejected: 0,
            };
            match completeness_probe(&g, &q, cfg.template_cap, cfg.max_subset_size) {
                Ok(r) => {
                    row.verdict = r.verdict;
                    row.sets_scanned = r.sets_scanned;
                    row.common_valid = r.common_valid;
                    row.rejected = r.rejected.len();
                }
                Err(Error::OverCap { .. }) => {
                    row.verdict = identify(&g, &q)?.kind.to_string();
                    row.status = "over_cap".into();
                }
                Err(e) => return Err(e),
            }
            Ok(row)
        })
        .collect()
}

/// Internal agreement checks over a corpus.
#[derive(Debug, Clone, Default, Serialize)]
pub struct ConsistencyReport {
    pub graphs: usize,
    /// Queries on which both forms of Condition C were compared.
    pub queries_compared: usize,
    pub condition_c_mismatches: Vec<String>,
    pub padding_checks: usize,
    pub padding_unstable: Vec<String>,
}

impl ConsistencyReport {
    pub fn is_consistent(&self) -> bool {
        self.condition_c_mismatches.is_empty() && self.padding_unstable.is_empty()
    }
}

/// Compares [`identify`] with [`identify_alt`] on every ordered pair and
/// `gamma ≤ 2`, and checks that back-door verdicts on the canonical sets do not
/// move when the unrolling gets deeper.
pub fn self_consistency(cfg: &CorpusConfig) -> Result<ConsistencyReport> {
    cfg.validate()?;
    let parts = (0..cfg.n_graphs)
        .into_par_iter()
        .map(|i| consistency_item(cfg, i))
        .collect::<Result<Vec<_>>>()?;
    let mut out = ConsistencyReport::default();
    for p in parts {
        out.graphs += 1;
        out.queries_compared += p.queries_compared;
        out.condition_c_mismatches.extend(p.condition_c_mismatches);
        out.padding_checks += p.padding_checks;
        out.padding_unstable.extend(p.padding_unstable);
    }
    Ok(out)
}

fn consistency_item(cfg: &CorpusConfig, index: usize) -> Result<ConsistencyReport> {
    let (g, q) = corpus_item(cfg, index)?;
    let mut out = ConsistencyReport::default();
    for x in 0..g.len() {
        for y in (0..g.len()).filter(|&y| y != x) {
            for gamma in 0..=2 {
                let q = MicroQuery::new(x, y, gamma, cfg.gamma_max);
                out.queries_compared += 1;
                let (a, b) = (identify(&g, &q)?.kind, identify_alt(&g, &q)?.kind);
                if a != b {
                    out.condition_c_mismatches
                        .push(format!("graph {index}: {} gives {a} and {b}", q.to_json(&g)));
                }
            }
        }
    }
    if densest_count(&g) > cfg.template_cap {
        return Ok(out);
    }
    let mut sets = vec![AdjustmentSet::new()];
    if let Ok(named) = canonical_sets(&g, &q) {
        sets.extend(named.into_values());
    }
    for (t, tmpl) in densest_templates(&g, q.gamma_max).iter().enumerate() {
        for z in &sets {
            out.padding_checks += 1;
            if !padding_stable(tmpl, &q, z)? {
                out.padding_unstable
                    .push(format!("graph {index}: densest template {t}, set {}", z.display(&g)));
            }
        }
    }
    Ok(out)
}

/// Brute-force evaluation of the quasi-optimality results for one query.
#[derive(Debug, Clone, Serialize)]
pub struct OptimalityReport {
    pub verdict: String,
    pub templates: usize,
    /// Templates in which the treatment does not reach the outcome.
    pub templates_without_effect: usize,
    pub qopt: Vec<String>,
    /// `qopt` passes the criterion.
    pub qopt_passes: bool,
    /// Templates whose optimal set, minus possible descendants, leaves `qopt`.
    pub inclusion_violations: Vec<usize>,
    /// `Some` when `ecnbd(X, Y, ∅)` is empty.
    pub witness_opt: Option<Vec<String>>,
    pub witness_matches: Option<bool>,
    /// Some template's optimal set equals `qopt`.
    pub optimum_attained: bool,
    /// Some template's optimal set is valid in every template.
    pub premise_holds: bool,
    pub union_of_optima: Vec<String>,
    /// `Some` when the premise holds.
    pub union_matches: Option<bool>,
}

/// Evaluates the quasi-optimality results against every compatible template.
/// Fails with `OverCap` beyond `cap` templates.
pub fn optimality_check(g: &Scg, q: &MicroQuery, cap: usize) -> Result<OptimalityReport> {
    q.validate(g)?;
    let ctx = Ctx::new(g, q)?;
    let qopt = qopt_in(&ctx)?;
    let templates = enumerate_compatible_templates(g, q.gamma_max, cap)?;
    let checker = CommonBackdoor::new(templates, q, Validity::BackDoor);
    let mut report = OptimalityReport {
        verdict: ctx.kind.to_string(),
        templates: checker.templates().len(),
        templates_without_effect: 0,
        qopt: qopt.labels(g),
        qopt_passes: check_in(&ctx, &qopt, CheckOptions::default()).satisfied,
        inclusion_violations: Vec::new(),
        witness_opt: None,
        witness_matches: None,
        optimum_attained: false,
        premise_holds: false,
        union_of_optima: Vec::new(),
        union_matches: None,
    };
    let mut union = AdjustmentSet::new();
    let mut seen: BTreeSet<AdjustmentSet> = BTreeSet::new();
    for (i, t) in checker.templates().iter().enumerate() {
        let opt = match ftdag_opt(t, q) {
            Ok(o) => o,
            Err(Error::NotAncestor) => {
                report.templates_without_effect += 1;
                continue;
            }
            Err(e) => return Err(e),
        };
        report.optimum_attained |= opt == qopt;
        let trimmed = opt.without(&ctx.d);
        if !trimmed.is_subset(&qopt) {
            report.inclusion_violations.push(i);
        }
        union = union.union(&trimmed);
        if !report.premise_holds && seen.insert(opt.clone()) {
            report.premise_holds = checker.is_valid(&opt)?;
        }
    }
    report.union_of_optima = union.labels(g);
    if report.premise_holds {
        report.union_matches = Some(union == qopt);
    }
    let empty = BTreeSet::new();
    if backdoor_restricted_ecn(g, q.treatment, q.outcome, &empty)?.is_empty() {
        // No witness optimum when the treatment cannot reach the outcome there.
        match ftdag_opt(&witness_template(g, q)?, q) {
            Ok(w) => {
                report.witness_matches = Some(w == qopt);
                report.witness_opt = Some(w.labels(g));
            }
            Err(Error::NotAncestor) => {}
            Err(e) => return Err(e),
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    fn small(n_graphs: usize) -> CorpusConfig {
        CorpusConfig {
            n_graphs,
            node_count_range: (3, 4),
            max_subset_size: 3,
            ..CorpusConfig::default()
        }
    }

    #[test]
    fn corpus_is_deterministic() {
        let cfg = CorpusConfig::default();
        assert_eq!(random_scg(&cfg, 0).unwrap(), random_scg(&cfg, 0).unwrap());
        assert_eq!(corpus_item(&cfg, 3).unwrap(), corpus_item(&cfg, 3).unwrap());
        let other = CorpusConfig { seed: 8, ..cfg.clone() };
        let differs = (0..10).any(|i| random_scg(&cfg, i).unwrap() != random_scg(&other, i).unwrap());
        assert!(differs);
    }

    #[test]
    fn edgeless_and_acyclic_corpora() {
        let cfg = CorpusConfig {
            edge_probability: 0.0,
            ..CorpusConfig::default()
        };
        assert!(random_scg(&cfg, 4).unwrap().edges().is_empty());
        let cfg = CorpusConfig {
            edge_probability: 0.6,
            allow_cycles: false,
            ..CorpusConfig::default()
        };
        for i in 0..20 {
            let g = random_scg(&cfg, i).unwrap();
            let scc = g.scc_partition();
            assert!((0..g.len()).all(|v| scc.component(v).len() == 1));
        }
    }

    #[test]
    fn config_validation() {
        let bad = CorpusConfig {
            node_count_range: (1, 4),
            ..CorpusConfig::default()
        };
        assert!(matches!(bad.validate(), Err(Error::InvalidConfig(_))));
        let bad = CorpusConfig {
            node_count_range: (5, 9),
            ..CorpusConfig::default()
        };
        assert!(bad.validate().is_err());
        let bad = CorpusConfig {
            template_cap: 0,
            ..CorpusConfig::default()
        };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn common_backdoor_examples() {
        let g = fixtures::confounded_chain();
        let q = MicroQuery::named(&g, "X", "Y", 1, 1).unwrap();
        let z = AdjustmentSet::literal(&g, &[("X", -2), ("W", -2), ("W", -1)]);
        assert!(common_backdoor_valid(&g, &q, &z, 100).unwrap());
        assert!(common_backdoor_valid_densest(&g, &q, &z, 100).unwrap());
        let y0 = AdjustmentSet::literal(&g, &[("Y", 0)]);
        assert!(!common_backdoor_valid(&g, &q, &y0, 100).unwrap());
        assert!(matches!(
            common_backdoor_valid(&g, &q, &z, 1),
            Err(Error::OverCap { .. })
        ));
    }

    #[test]
    fn per_template_optima_clash() {
        // The optimum of the template where Z feeds Y at lag 0 is invalid when
        // Y feeds Z instead.
        let g = fixtures::outcome_mediator_cycle();
        let q = MicroQuery::named(&g, "X", "Y", 0, 1).unwrap();
        let t = FtDagTemplate::from_named(
            &g,
            1,
            &[
                ("X", "Y", &[0, 1]),
                ("W", "X", &[0, 1]),
                ("W", "Z", &[0, 1]),
                ("Z", "Y", &[0, 1]),
                ("Y", "Z", &[1]),
            ],
        )
        .unwrap();
        let opt = ftdag_opt(&t, &q).unwrap();
        assert!(opt.contains(&TemporalVar::new(g.node("Z").unwrap(), 0)));
        assert!(!common_backdoor_valid(&g, &q, &opt, 1000).unwrap());
    }

    #[test]
    fn probe_finds_rejected_valid_sets() {
        let g = fixtures::criterion_gap();
        let q = MicroQuery::named(&g, "X", "Y", 0, 1).unwrap();
        let r = completeness_probe(&g, &q, 50, usize::MAX).unwrap();
        assert!(!r.rejected.is_empty(), "{r:?}");
        let edgeless = Scg::from_literal(&["X", "Y"], &[]);
        let q = MicroQuery::named(&edgeless, "X", "Y", 0, 1).unwrap();
        assert!(completeness_probe(&edgeless, &q, 50, usize::MAX)
            .unwrap()
            .rejected
            .is_empty());
    }

    #[test]
    fn small_corpus_is_sound_and_reproducible() {
        let cfg = small(12);
        let a = soundness_experiment(&cfg).unwrap();
        assert!(a.is_sound(), "{}", a.to_json());
        assert!(a.sets_sound <= a.sets_checked);
        assert_eq!(a.rows.len(), 12);
        let b = soundness_experiment(&cfg).unwrap();
        assert_eq!(a.to_json(), b.to_json());
        assert!(a.to_csv().unwrap().lines().count() == 13);
    }

    #[test]
    fn edgeless_corpus_checks_only_empty_sets() {
        let cfg = CorpusConfig {
            edge_probability: 0.0,
            allow_cycles: false,
            ..small(5)
        };
        let r = soundness_experiment(&cfg).unwrap();
        assert_eq!(r.graphs_tested, 5);
        assert_eq!(r.sets_checked, 5);
        assert!(r.rows.iter().all(|row| row.verdict == "NonAncestor"));
    }

    #[test]
    fn dropping_the_descendant_test_is_caught() {
        let r = soundness_experiment_with(
            &small(12),
            CheckOptions {
                skip_descendant_test: true,
            },
        )
        .unwrap();
        assert!(!r.counterexamples.is_empty());
    }

    #[test]
    fn optimality_on_a_two_cycle() {
        let g = fixtures::two_cycle_confounded();
        let q = MicroQuery::named(&g, "X", "Y", 1, 1).unwrap();
        let r = optimality_check(&g, &q, 1000).unwrap();
        assert!(r.qopt_passes);
        assert!(r.inclusion_violations.is_empty(), "{r:?}");
    }
}
