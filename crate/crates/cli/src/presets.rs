//! Scenario files shipped with the binary.

use crate::config::ScenarioConfig;
use crate::error::{CliError, Result};

const PRESETS: &[(&str, &str)] = &[
    ("fig1", include_str!("../presets/fig1.toml")),
    ("fig2", include_str!("../presets/fig2.toml")),
    ("fig3", include_str!("../presets/fig3.toml")),
    ("fig4", include_str!("../presets/fig4.toml")),
    ("chain_n4_dfs", include_str!("../presets/chain_n4_dfs.toml")),
    ("chain_n4_aligned", include_str!("../presets/chain_n4_aligned.toml")),
    ("jc_resonance", include_str!("../presets/jc_resonance.toml")),
    ("decoupled", include_str!("../presets/decoupled.toml")),
];

pub fn names() -> impl Iterator<Item = &'static str> {
    PRESETS.iter().map(|(name, _)| *name)
}

pub fn source(name: &str) -> Option<&'static str> {
    PRESETS.iter().find(|(n, _)| *n == name).map(|(_, text)| *text)
}

pub fn load(name: &str) -> Result<ScenarioConfig> {
    let text = source(name).ok_or_else(|| {
        CliError::config(format!(
            "unknown preset {name:?}; known: {}",
            names().collect::<Vec<_>>().join(", ")
        ))
    })?;
    ScenarioConfig::from_toml_str(text, &format!("preset {name}"))
}
