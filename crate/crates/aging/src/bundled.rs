//! Scenario files compiled into the binary.

use crate::config::ScenarioConfig;

pub const TABLE1: &str = include_str!("../configs/table1.json");

/// Named figure scenarios: `(name, json)`.
pub const FIGURES: &[(&str, &str)] = &[
    ("doppler", include_str!("../configs/doppler.json")),
    ("rician", include_str!("../configs/rician.json")),
    ("snr-slow", include_str!("../configs/snr-slow.json")),
    ("snr-fast", include_str!("../configs/snr-fast.json")),
    ("interference-pl2", include_str!("../configs/interference-pl2.json")),
    ("interference-fd2", include_str!("../configs/interference-fd2.json")),
    ("interference-rp2", include_str!("../configs/interference-rp2.json")),
    ("power-ratio", include_str!("../configs/power-ratio.json")),
    ("joint-power", include_str!("../configs/joint-power.json")),
];

/// Bundled figure scenario by name.
pub fn figure(name: &str) -> Option<ScenarioConfig> {
    FIGURES
        .iter()
        .find(|(n, _)| *n == name)
        .map(|(n, text)| ScenarioConfig::from_json(text).unwrap_or_else(|e| panic!("bundled scenario {n}: {e}")))
}
