// SPDX-License-Identifier: MIT
//! Small named graphs used by tests, benches and the CLI examples.

use crate::graph::Scg;

/// `W -> X -> Y` with self-loops on `W` and `X`.
pub fn confounded_chain() -> Scg {
    Scg::from_literal(&["X", "Y", "W"], &[("W", "X"), ("X", "Y"), ("W", "W"), ("X", "X")])
}

/// `X <-> Y` with a common parent `W`.
pub fn two_cycle_confounded() -> Scg {
    Scg::from_literal(&["X", "Y", "W"], &[("X", "Y"), ("Y", "X"), ("W", "X"), ("W", "Y")])
}

/// A lone edge `X -> Y`.
pub fn single_edge() -> Scg {
    Scg::from_literal(&["X", "Y"], &[("X", "Y")])
}

/// Singleton treatment component, mediator `U`, confounder `W`, all self-looped.
pub fn mediated_singleton() -> Scg {
    Scg::from_literal(
        &["X", "Y", "W", "U"],
        &[
            ("X", "Y"),
            ("W", "X"),
            ("W", "Y"),
            ("X", "U"),
            ("U", "Y"),
            ("W", "W"),
            ("X", "X"),
            ("Y", "Y"),
            ("U", "U"),
        ],
    )
}

/// Singleton treatment component with a `W <-> U` cycle feeding both sides.
pub fn singleton_with_side_cycle() -> Scg {
    Scg::from_literal(
        &["X", "Y", "W", "U"],
        &[
            ("X", "Y"),
            ("W", "X"),
            ("U", "Y"),
            ("W", "U"),
            ("U", "W"),
            ("W", "W"),
            ("X", "X"),
            ("Y", "Y"),
            ("U", "U"),
        ],
    )
}

/// Singleton treatment component; the outcome sits on a cycle with `U`.
pub fn singleton_outcome_cycle() -> Scg {
    Scg::from_literal(
        &["X", "Y", "W", "U"],
        &[
            ("X", "Y"),
            ("X", "W"),
            ("Y", "U"),
            ("U", "Y"),
            ("W", "U"),
            ("U", "W"),
            ("W", "W"),
            ("X", "X"),
            ("Y", "Y"),
            ("U", "U"),
        ],
    )
}

/// Treatment in a 2-cycle with `W`; `U` confounds `W` and `Y`.
pub fn treatment_cycle_confounder() -> Scg {
    Scg::from_literal(
        &["X", "Y", "W", "U"],
        &[
            ("X", "Y"),
            ("W", "X"),
            ("X", "W"),
            ("U", "W"),
            ("U", "Y"),
            ("W", "W"),
            ("X", "X"),
            ("Y", "Y"),
            ("U", "U"),
        ],
    )
}

/// Treatment in a 2-cycle with `W`; mediator `U` on the way to `Y`.
pub fn treatment_cycle_mediator() -> Scg {
    Scg::from_literal(
        &["X", "Y", "W", "U"],
        &[
            ("X", "Y"),
            ("W", "X"),
            ("X", "W"),
            ("X", "U"),
            ("U", "Y"),
            ("W", "W"),
            ("X", "X"),
            ("Y", "Y"),
            ("U", "U"),
        ],
    )
}

/// Treatment in a 2-cycle with `W`; `U` mediates and sits on a cycle with `Y`.
pub fn treatment_cycle_outcome_cycle() -> Scg {
    Scg::from_literal(
        &["X", "Y", "W", "U"],
        &[
            ("X", "Y"),
            ("W", "X"),
            ("X", "W"),
            ("X", "U"),
            ("Y", "U"),
            ("U", "Y"),
            ("W", "W"),
            ("X", "X"),
            ("Y", "Y"),
            ("U", "U"),
        ],
    )
}

/// `W` drives `X` and `Z`; `Y <-> Z`; `X -> Y`.
pub fn outcome_mediator_cycle() -> Scg {
    Scg::from_literal(
        &["X", "Y", "W", "Z"],
        &[("X", "Y"), ("W", "X"), ("W", "Z"), ("Z", "Y"), ("Y", "Z")],
    )
}

/// Five series where a valid common back-door set escapes the criterion.
pub fn criterion_gap() -> Scg {
    Scg::from_literal(
        &["U", "W", "R", "X", "Y"],
        &[
            ("X", "Y"),
            ("X", "X"),
            ("W", "X"),
            ("R", "Y"),
            ("U", "R"),
            ("U", "W"),
            ("W", "W"),
        ],
    )
}

/// `X -> Y` with `U <-> Y`.
pub fn outcome_two_cycle() -> Scg {
    Scg::from_literal(&["X", "Y", "U"], &[("X", "Y"), ("U", "Y"), ("Y", "U")])
}

/// `X <-> Y` with a self-loop on `Y`: never identifiable at lag 1.
pub fn two_cycle_outcome_loop() -> Scg {
    Scg::from_literal(&["X", "Y"], &[("X", "Y"), ("Y", "X"), ("Y", "Y")])
}

/// `A -> X -> M -> Y`, with `A -> C <- B -> M`: `C` is a collider on the back-door route.
pub fn collider_route() -> Scg {
    Scg::from_literal(
        &["A", "B", "C", "X", "M", "Y"],
        &[("A", "X"), ("A", "C"), ("B", "C"), ("B", "M"), ("X", "M"), ("M", "Y")],
    )
}

/// Every named fixture, for exhaustive sweeps.
pub fn all() -> Vec<(&'static str, Scg)> {
    vec![
        ("confounded_chain", confounded_chain()),
        ("two_cycle_confounded", two_cycle_confounded()),
        ("single_edge", single_edge()),
        ("mediated_singleton", mediated_singleton()),
        ("singleton_with_side_cycle", singleton_with_side_cycle()),
        ("singleton_outcome_cycle", singleton_outcome_cycle()),
        ("treatment_cycle_confounder", treatment_cycle_confounder()),
        ("treatment_cycle_mediator", treatment_cycle_mediator()),
        ("treatment_cycle_outcome_cycle", treatment_cycle_outcome_cycle()),
        ("outcome_mediator_cycle", outcome_mediator_cycle()),
        ("criterion_gap", criterion_gap()),
        ("outcome_two_cycle", outcome_two_cycle()),
        ("two_cycle_outcome_loop", two_cycle_outcome_loop()),
        ("collider_route", collider_route()),
    ]
}

/// Looks a fixture up by name.
pub fn by_name(name: &str) -> Option<Scg> {
    all().into_iter().find(|(n, _)| *n == name).map(|(_, g)| g)
}
