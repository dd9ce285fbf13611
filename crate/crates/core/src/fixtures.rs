//! The bundled model library, also shipped as JSON under `fixtures/`.

use crate::bernstein::BernsteinSpec;
use crate::config::ModelConfig;
use crate::error::Result;

pub const FIXTURES: [(&str, &str); 9] = [
    ("stable", include_str!("../fixtures/stable.json")),
    ("stable_a03", include_str!("../fixtures/stable_a03.json")),
    ("stable_a07", include_str!("../fixtures/stable_a07.json")),
    ("gamma_sub", include_str!("../fixtures/gamma_sub.json")),
    ("pure_kill_q1", include_str!("../fixtures/pure_kill_q1.json")),
    ("pure_kill_q2", include_str!("../fixtures/pure_kill_q2.json")),
    ("cpp_atoms", include_str!("../fixtures/cpp_atoms.json")),
    ("exp_jump_cpp", include_str!("../fixtures/exp_jump_cpp.json")),
    ("index_one_log", include_str!("../fixtures/index_one_log.json")),
];

/// Fixtures of positive increase; all but the index-one example.
pub const POSITIVE_INCREASE: [&str; 8] =
    ["stable", "stable_a03", "stable_a07", "gamma_sub", "pure_kill_q1", "pure_kill_q2", "cpp_atoms", "exp_jump_cpp"];

pub fn config(name: &str) -> Option<ModelConfig> {
    FIXTURES.iter().find(|(n, _)| *n == name).map(|(_, json)| ModelConfig::from_json(json).expect("bundled fixture parses"))
}

pub fn spec(name: &str) -> Option<Result<BernsteinSpec>> {
    config(name).map(|c| c.build())
}
