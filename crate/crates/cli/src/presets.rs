//! Presets shipped with the tool (`presets/*.toml`).

use crate::error::CliError;

pub const PRESETS: &[(&str, &str)] = &[
    ("fig2a", include_str!("../presets/fig2a.toml")),
    ("fig2b", include_str!("../presets/fig2b.toml")),
    ("fig2c", include_str!("../presets/fig2c.toml")),
    ("fig2d", include_str!("../presets/fig2d.toml")),
    ("fig3a", include_str!("../presets/fig3a.toml")),
    ("fig3b", include_str!("../presets/fig3b.toml")),
    ("fig3c", include_str!("../presets/fig3c.toml")),
    ("fig3d", include_str!("../presets/fig3d.toml")),
    ("fig3e", include_str!("../presets/fig3e.toml")),
    ("fig3f", include_str!("../presets/fig3f.toml")),
    ("fig3g", include_str!("../presets/fig3g.toml")),
    ("fig3h", include_str!("../presets/fig3h.toml")),
    ("fig3i", include_str!("../presets/fig3i.toml")),
    ("fig4", include_str!("../presets/fig4.toml")),
];

pub fn names() -> impl Iterator<Item = &'static str> {
    PRESETS.iter().map(|(n, _)| *n)
}

pub fn source(name: &str) -> Option<&'static str> {
    PRESETS.iter().find(|(n, _)| *n == name).map(|(_, s)| *s)
}

pub fn table(name: &str) -> Result<toml::Table, CliError> {
    let src = source(name).ok_or_else(|| {
        CliError::Config(format!(
            "unknown preset `{name}` (available: {})",
            names().collect::<Vec<_>>().join(", ")
        ))
    })?;
    src.parse::<toml::Table>()
        .map_err(|e| CliError::Config(format!("preset {name}: {e}")))
}
