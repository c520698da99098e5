//! Bundled scenarios. Each is an ordinary config file compiled into the
//! binary; `ndim-N` is generated from the four-level one.

use crate::config::{ConfigError, ScenarioConfig, SchemeRef};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Preset {
    pub name: &'static str,
    pub source: &'static str,
    /// Rough single-core wall time of `run`, and of `sweep` when present.
    pub budget: &'static str,
}

pub const PRESETS: [Preset; 5] = [
    Preset { name: "fig2-left", source: include_str!("../presets/fig2-left.toml"), budget: "run ~2 min" },
    Preset { name: "fig2-right", source: include_str!("../presets/fig2-right.toml"), budget: "run ~1 min, sweep ~10 min" },
    Preset { name: "fig4-left", source: include_str!("../presets/fig4-left.toml"), budget: "run ~16 min" },
    Preset { name: "fig4-right", source: include_str!("../presets/fig4-right.toml"), budget: "run ~1 min, sweep < 10 s" },
    Preset { name: "fig5", source: include_str!("../presets/fig5.toml"), budget: "run ~5 min, sweep < 5 s" },
];

/// Description of the generated family, for listings.
pub const NDIM_ENTRY: (&str, &str) = ("ndim-N", "N-level generalization (N >= 3) from |ga ga> at the optimized drive");

/// Bundled level schemes as editable config files.
pub const SCHEME_FILES: [(&str, &str); 2] =
    [("paper-3d", include_str!("../presets/schemes/paper-3d.toml")), ("ndim-4", include_str!("../presets/schemes/ndim-4.toml"))];

pub fn find(name: &str) -> Option<&'static Preset> {
    PRESETS.iter().find(|p| p.name == name)
}

/// Parsed preset, including `ndim-N` for any `N >= 3`.
pub fn load(name: &str) -> Result<ScenarioConfig, ConfigError> {
    if let Some(p) = find(name) {
        return ScenarioConfig::from_toml(p.source);
    }
    match name.strip_prefix("ndim-").and_then(|n| n.parse::<usize>().ok()) {
        Some(n) => ndim(n),
        None => Err(ConfigError::invalid("preset", format!("unknown preset `{name}` (see `darkstate presets`)"))),
    }
}

pub fn ndim(n: usize) -> Result<ScenarioConfig, ConfigError> {
    if n < 3 {
        return Err(ConfigError::invalid("preset", format!("ndim-N needs N >= 3, got {n}")));
    }
    let mut cfg = ScenarioConfig::from_toml(find("fig4-left").expect("bundled").source)?;
    cfg.name = format!("ndim-{n}");
    cfg.description = format!("{n}-level generalization from |ga ga> at the optimized drive.");
    cfg.scheme = SchemeRef::Named(format!("ndim-{n}"));
    Ok(cfg)
}
