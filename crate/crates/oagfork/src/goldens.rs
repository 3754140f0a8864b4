//! Reference scenes shipped with the crate, shared by tests, the CLI self-test and benches.

use crate::error::Result;
use crate::scene::Scene;

pub const ORTHOGONALITY: &str = include_str!("../../../scenes/orthogonality.toml");
pub const RAMIFIED_PAIR: &str = include_str!("../../../scenes/ramified_pair.toml");
pub const INFINITESIMAL_BASE: &str = include_str!("../../../scenes/infinitesimal_base.toml");
pub const TWO_ROOT_FIELD: &str = include_str!("../../../scenes/two_root_field.toml");
pub const TRAPPED_INTERVAL: &str = include_str!("../../../scenes/trapped_interval.toml");
pub const FINITE_PARITY: &str = include_str!("../../../scenes/finite_parity.toml");
pub const DISCRETE_GAP: &str = include_str!("../../../scenes/discrete_gap.toml");

pub const ALL: [(&str, &str); 7] = [
    ("orthogonality", ORTHOGONALITY),
    ("ramified_pair", RAMIFIED_PAIR),
    ("infinitesimal_base", INFINITESIMAL_BASE),
    ("two_root_field", TWO_ROOT_FIELD),
    ("trapped_interval", TRAPPED_INTERVAL),
    ("finite_parity", FINITE_PARITY),
    ("discrete_gap", DISCRETE_GAP),
];

pub fn load(name: &str) -> Result<Scene> {
    let text = ALL
        .iter()
        .find(|(n, _)| *n == name)
        .map(|(_, t)| *t)
        .ok_or_else(|| crate::OagError::config(format!("unknown golden scene {name:?}")))?;
    Scene::parse(text)
}
