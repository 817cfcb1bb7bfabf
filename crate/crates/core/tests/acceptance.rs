// SPDX-License-Identifier: MIT
//! Acceptance suite: one line per criterion, non-zero exit if any fails.

use std::collections::BTreeMap;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use scg_core::fixtures;
use scg_core::identify::{
    classical_backdoor_check, ftdag_opt, identify, identify_alt, qopt, scg_backdoor_check, set_a1, set_a2, Item,
};
use scg_core::oracle::{
    completeness_probe, corpus_item, optimality_check, random_scg, self_consistency, soundness_experiment,
    CorpusConfig, PastHorizon,
};
use scg_core::simulate::{sample_linear_model, variance_experiment};
use scg_core::unroll::{
    count_compatible_templates, enumerate_compatible_templates, possible_descendants, possible_descendants_bruteforce,
};
use scg_core::{AdjustmentSet, Error, FtDagTemplate, MicroQuery, Scg, VerdictKind};

struct Outcome {
    pass: bool,
    detail: String,
}

type Criterion = (&'static str, fn() -> Outcome);

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn golden_verdicts() -> Outcome {
    let mut cases: Vec<(&str, Scg, u32, VerdictKind)> = vec![(
        "two_cycle_confounded",
        fixtures::two_cycle_confounded(),
        1,
        VerdictKind::CondC,
    )];
    for (name, g) in [
        ("mediated_singleton", fixtures::mediated_singleton()),
        ("singleton_with_side_cycle", fixtures::singleton_with_side_cycle()),
        ("singleton_outcome_cycle", fixtures::singleton_outcome_cycle()),
    ] {
        for gamma in 0..3 {
            cases.push((name, g.clone(), gamma, VerdictKind::CondA));
        }
    }
    for (name, g) in [
        ("treatment_cycle_confounder", fixtures::treatment_cycle_confounder()),
        ("treatment_cycle_mediator", fixtures::treatment_cycle_mediator()),
        (
            "treatment_cycle_outcome_cycle",
            fixtures::treatment_cycle_outcome_cycle(),
        ),
    ] {
        cases.push((name, g, 0, VerdictKind::CondB));
    }
    let mut wrong = Vec::new();
    let mut slowest = Duration::ZERO;
    for (name, g, gamma, want) in &cases {
        let q = MicroQuery::named(g, "X", "Y", *gamma, 1).unwrap();
        let start = Instant::now();
        let got = identify(g, &q).unwrap().kind;
        slowest = slowest.max(start.elapsed());
        if got != *want {
            wrong.push(format!("{name} gamma={gamma}: {got} != {want}"));
        }
    }
    let fast = slowest < Duration::from_millis(1);
    outcome(
        wrong.is_empty() && fast,
        format!(
            "{}/{} verdicts match, slowest {:?}{}",
            cases.len() - wrong.len(),
            cases.len(),
            slowest,
            if wrong.is_empty() {
                String::new()
            } else {
                format!("; {}", wrong.join("; "))
            }
        ),
    )
}

fn golden_set_check() -> Outcome {
    let g = fixtures::confounded_chain();
    let q = MicroQuery::named(&g, "X", "Y", 1, 1).unwrap();
    let z = AdjustmentSet::literal(&g, &[("X", -2), ("W", -2), ("W", -1)]);
    let r = scg_backdoor_check(&g, &q, &z).unwrap();
    outcome(
        r.satisfied && r.item == Some(Item::A1),
        format!(
            "satisfied={} item={}",
            r.satisfied,
            r.item.map_or("none", |i| i.label())
        ),
    )
}

fn soundness() -> Outcome {
    let cfg = CorpusConfig::default();
    let start = Instant::now();
    let r = soundness_experiment(&cfg).unwrap();
    let elapsed = start.elapsed();
    let floor = soundness_experiment(&CorpusConfig {
        horizon: PastHorizon::Floor,
        ..cfg.clone()
    })
    .unwrap();
    let sources: Vec<String> = r
        .counterexamples
        .iter()
        .map(|c| format!("graph {} {}", c.graph_index, c.source))
        .collect();
    outcome(
        r.is_sound() && elapsed < Duration::from_secs(300),
        format!(
            "{} graphs tested, {} over cap, {}/{} sets sound, {} counterexamples [{}], baselines {}/{}, {:?}; truncated past: {} counterexamples",
            r.graphs_tested,
            r.graphs_skipped_over_cap,
            r.sets_sound,
            r.sets_checked,
            r.counterexamples.len(),
            sources.join(", "),
            r.baseline_sound,
            r.baseline_checked,
            elapsed,
            floor.counterexamples.len(),
        ),
    )
}

fn incompleteness() -> Outcome {
    let g = fixtures::criterion_gap();
    let q = MicroQuery::named(&g, "X", "Y", 0, 1).unwrap();
    let r = completeness_probe(&g, &q, 50, usize::MAX).unwrap();
    let example = r.rejected.first().map(|s| s.join(", ")).unwrap_or_default();
    outcome(
        !r.rejected.is_empty(),
        format!(
            "{} of {} common back-door sets rejected, e.g. {{{example}}}",
            r.rejected.len(),
            r.common_valid
        ),
    )
}

fn posdesc_equivalence() -> Outcome {
    const CAP: usize = 20_000;
    let cfg = CorpusConfig {
        node_count_range: (2, 5),
        seed: 11,
        ..CorpusConfig::default()
    };
    let (mut graphs, mut skipped, mut mismatches, mut checks) = (0, 0, 0, 0);
    let mut index = 0;
    while graphs < 100 {
        let g = random_scg(&cfg, index).unwrap();
        index += 1;
        if count_compatible_templates(&g, 1).is_none_or(|c| c > CAP as u128) {
            skipped += 1;
            continue;
        }
        graphs += 1;
        let window = (-2, 0);
        for v in 0..g.len() {
            for offset in -2..=0 {
                checks += 1;
                let fast = possible_descendants(&g, v, offset, window, 1).unwrap();
                let slow = possible_descendants_bruteforce(&g, v, offset, window, 1, CAP).unwrap();
                if fast != slow {
                    mismatches += 1;
                }
            }
        }
    }
    outcome(
        mismatches == 0,
        format!("{graphs} graphs, {checks} queries, {mismatches} mismatches, {skipped} graphs above {CAP} templates skipped"),
    )
}

fn optimality() -> Outcome {
    const CAP: usize = 5000;
    let cfg = CorpusConfig {
        node_count_range: (3, 5),
        ..CorpusConfig::default()
    };
    let (mut graphs, mut passes, mut inclusion) = (0, 0, 0);
    let (mut witness_n, mut witness_ok, mut witness_strict) = (0, 0, 0);
    let (mut attained_n, mut attained) = (0, 0);
    let (mut c1_n, mut c1_ok) = (0, 0);
    let mut index = 0;
    while graphs < 100 {
        let (g, q) = corpus_item(&cfg, index).unwrap();
        index += 1;
        let verdict = identify(&g, &q).unwrap().kind;
        if matches!(verdict, VerdictKind::NotIdentifiable | VerdictKind::NonAncestor) {
            continue;
        }
        let r = match optimality_check(&g, &q, CAP) {
            Ok(r) => r,
            Err(Error::OverCap { .. }) => continue,
            Err(e) => panic!("{e}"),
        };
        graphs += 1;
        passes += r.qopt_passes as usize;
        inclusion += r.inclusion_violations.is_empty() as usize;
        if let (Some(m), Some(w)) = (r.witness_matches, &r.witness_opt) {
            witness_n += 1;
            witness_ok += m as usize;
            // A failure where the witness optimum is a strict subset of qopt.
            if !m && w.iter().all(|v| r.qopt.contains(v)) {
                witness_strict += 1;
            }
        }
        if r.premise_holds {
            attained_n += 1;
            attained += r.optimum_attained as usize;
        }
        if let Some(m) = r.union_matches {
            c1_n += 1;
            c1_ok += m as usize;
        }
    }
    outcome(
        passes == graphs && inclusion == graphs && witness_ok == witness_n && c1_ok == c1_n,
        format!(
            "{graphs} graphs: qopt passes {passes}/{graphs}, inclusion {inclusion}/{graphs}, witness equality {witness_ok}/{witness_n} (failures with witness strictly inside qopt: {witness_strict}), qopt attained by some template {attained}/{attained_n}, union equality {c1_ok}/{c1_n}"
        ),
    )
}

fn optimal_set_fixtures() -> Outcome {
    let g = fixtures::outcome_mediator_cycle();
    let q = MicroQuery::named(&g, "X", "Y", 0, 1).unwrap();
    let feeds = FtDagTemplate::from_named(
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
    let fed = FtDagTemplate::from_named(
        &g,
        1,
        &[
            ("X", "Y", &[0, 1]),
            ("W", "X", &[0, 1]),
            ("W", "Z", &[0, 1]),
            ("Z", "Y", &[1]),
            ("Y", "Z", &[0, 1]),
        ],
    )
    .unwrap();
    let opt_a = ftdag_opt(&feeds, &q).unwrap();
    let opt_b = ftdag_opt(&fed, &q).unwrap();
    let expect_a = AdjustmentSet::literal(&g, &[("X", -1), ("Z", -1), ("Z", 0)]);
    let clash = opt_a == expect_a
        && classical_backdoor_check(&feeds, &q, &opt_a).unwrap()
        && classical_backdoor_check(&fed, &q, &opt_b).unwrap()
        && !classical_backdoor_check(&fed, &q, &opt_a).unwrap()
        && !classical_backdoor_check(&feeds, &q, &opt_b).unwrap();

    let h = fixtures::outcome_two_cycle();
    let q = MicroQuery::named(&h, "X", "Y", 0, 1).unwrap();
    let quasi = qopt(&h, &q).unwrap();
    let templates = enumerate_compatible_templates(&h, 1, 1000).unwrap();
    let escaping = templates
        .iter()
        .filter(|t| ftdag_opt(t, &q).is_ok_and(|o| !o.is_subset(&quasi)))
        .count();
    outcome(
        clash && escaping > 0,
        format!(
            "optima {{{}}} and {{{}}} each invalid in the other: {clash}; {escaping}/{} templates with an optimum outside qopt",
            opt_a.labels(&g).join(", "),
            opt_b.labels(&g).join(", "),
            templates.len()
        ),
    )
}

fn variance_ordering() -> Outcome {
    const SLACK: f64 = 0.10;
    let g = fixtures::confounded_chain();
    let q = MicroQuery::named(&g, "X", "Y", 1, 1).unwrap();
    let sets = BTreeMap::from([
        ("qopt".to_string(), qopt(&g, &q).unwrap()),
        ("a1".to_string(), set_a1(&g, &q).unwrap()),
        ("a2".to_string(), set_a2(&g, &q).unwrap()),
    ]);
    let templates = enumerate_compatible_templates(&g, 1, 1000).unwrap();
    let start = Instant::now();
    let (mut blocks, mut ordered, mut unbiased) = (0, 0, 0);
    let (mut sum_q, mut sum_1, mut sum_2) = (0.0, 0.0, 0.0);
    for (i, t) in templates.iter().enumerate().step_by(2) {
        let model = sample_linear_model(t, 0.1, 0.9, 1000 + i as u64).unwrap();
        let r = variance_experiment(&model, &q, &sets, 10_000, 200, 7 + i as u64).unwrap();
        blocks += 1;
        ordered += (r.ordered("qopt", "a1", SLACK).unwrap() && r.ordered("qopt", "a2", SLACK).unwrap()) as usize;
        unbiased += r.sets.values().all(|s| s.bias.abs() <= 3.0 * s.se_of_mean) as usize;
        // Normalize by the A¹ variance so every block weighs the same.
        let v1 = r.variance("a1").unwrap();
        sum_q += r.variance("qopt").unwrap() / v1;
        sum_1 += 1.0;
        sum_2 += r.variance("a2").unwrap() / v1;
    }
    let elapsed = start.elapsed();
    let aggregate = sum_q <= sum_1 && sum_q <= sum_2;
    outcome(
        ordered == blocks && unbiased == blocks && aggregate && elapsed < Duration::from_secs(180),
        format!(
            "{ordered}/{blocks} blocks ordered within {:.0}% slack, {unbiased}/{blocks} unbiased within 3 SE, mean Var(qopt)/Var(A1) {:.3}, Var(A2)/Var(A1) {:.3}, {elapsed:?}",
            SLACK * 100.0,
            sum_q / blocks as f64,
            sum_2 / blocks as f64,
        ),
    )
}

fn self_consistent() -> Outcome {
    let cfg = CorpusConfig::default();
    let r = self_consistency(&cfg).unwrap();
    // The two forms of Condition C must agree on the hand-built fixtures too.
    let mut fixture_mismatches = 0;
    for (_, g) in fixtures::all() {
        for x in 0..g.len() {
            for y in (0..g.len()).filter(|&y| y != x) {
                for gamma in 0..3 {
                    let q = MicroQuery::new(x, y, gamma, 1);
                    if identify(&g, &q).unwrap() != identify_alt(&g, &q).unwrap() {
                        fixture_mismatches += 1;
                    }
                }
            }
        }
    }
    outcome(
        r.is_consistent() && fixture_mismatches == 0,
        format!(
            "{} queries compared, {} condition C mismatches ({fixture_mismatches} on fixtures), {} padding checks, {} unstable",
            r.queries_compared,
            r.condition_c_mismatches.len(),
            r.padding_checks,
            r.padding_unstable.len()
        ),
    )
}

fn main() -> ExitCode {
    let criteria: [Criterion; 9] = [
        ("golden verdicts", golden_verdicts),
        ("golden set check", golden_set_check),
        ("soundness on the random corpus", soundness),
        ("incompleteness probe", incompleteness),
        ("possible-descendant oracle", posdesc_equivalence),
        ("optimality suite", optimality),
        ("optimal-set fixtures", optimal_set_fixtures),
        ("variance ordering", variance_ordering),
        ("self-consistency", self_consistent),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let o = run();
        failed += !o.pass as usize;
        println!(
            "criterion {} {name}: {} ({})",
            i + 1,
            if o.pass { "PASS" } else { "FAIL" },
            o.detail
        );
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failed} of 9 criteria failed");
        ExitCode::FAILURE
    }
}
