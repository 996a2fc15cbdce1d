//! Generator of valid command-line configurations.

use pliouville::cli::{CommandKind, RunConfig, SolverOverrides};
use proptest::prelude::*;
use std::path::PathBuf;

pub fn positive() -> impl Strategy<Value = f64> {
    prop_oneof![
        (1e-3f64..1e3),
        (1u32..64).prop_map(f64::from),
        (1e-12f64..1e-6)
    ]
}

pub fn potential() -> impl Strategy<Value = String> {
    prop_oneof![
        Just("zero".to_string()),
        (positive(), 0.0f64..1e3).prop_map(|(r0, beta)| format!("compact:r0={r0},beta={beta}")),
        (0.0f64..1e3, 0.0f64..8.0).prop_map(|(c, ell)| format!("power:c={c},ell={ell}")),
    ]
}

pub fn config() -> impl Strategy<Value = RunConfig> {
    let command = prop_oneof![
        Just(CommandKind::Construct),
        Just(CommandKind::Sweep),
        Just(CommandKind::Classify),
        Just(CommandKind::Decay),
        Just(CommandKind::OracleCheck),
    ];
    let terms = prop_oneof![
        (1.01f64..8.0).prop_map(|p| vec![(1.0, p)]),
        prop::collection::vec((positive(), 1.01f64..8.0), 1..4),
    ];
    let solver = (
        prop::option::of(16usize..2048),
        prop::option::of(positive()),
        prop::option::of(positive()),
        prop::option::of(positive()),
        prop::option::of(1usize..1_000_000),
        prop::option::of(0usize..32),
    )
        .prop_map(|(g, s, a, p, m, sc)| SolverOverrides {
            grid_per_unit: g,
            shoot_tol: s,
            alpha_tol: a,
            picard_tol: p,
            picard_max_iter: m,
            alpha_scan: sc,
        });
    let k_list = prop::collection::vec(positive(), 3..7).prop_map(|mut v| {
        v.sort_by(f64::total_cmp);
        v.dedup();
        while v.len() < 3 {
            v.push(v.last().unwrap() * 2.0);
        }
        v
    });
    (
        command,
        2u32..8,
        terms,
        potential(),
        positive(),
        k_list,
        solver,
        "[a-z0-9_/]{1,16}",
        1usize..16,
        (
            prop::option::of(positive()),
            prop::option::of(0.0f64..4.0),
            prop::option::of(positive()),
        ),
        (prop::option::of(1usize..8), prop::option::of(positive())),
    )
        .prop_map(
            |(
                command,
                n,
                terms,
                potential,
                k,
                k_list,
                solver,
                out,
                jobs,
                (stab, ell, radius),
                (halvings, mtol),
            )| {
                let listed = matches!(command, CommandKind::Sweep | CommandKind::Classify);
                let decay = command == CommandKind::Decay;
                RunConfig {
                    command,
                    n,
                    terms,
                    potential,
                    k: (!listed).then_some(k),
                    k_list: listed.then_some(k_list),
                    solver,
                    out: PathBuf::from(out),
                    jobs,
                    stabilization_tol: stab.filter(|_| listed),
                    ell: ell.filter(|_| decay),
                    radius: radius.filter(|_| decay),
                    halvings: halvings.filter(|_| decay),
                    minimize_tol: mtol.filter(|_| command == CommandKind::OracleCheck),
                }
            },
        )
}
