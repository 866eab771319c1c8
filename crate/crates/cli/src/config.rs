//! Run configuration: a TOML or JSON document, optionally layered on a preset,
//! with command-line overrides applied last.

use std::fmt;
use std::path::Path;

use bswg_core::roots::{linear_grid, log_grid};
use bswg_core::{EmitterArray, LatticeParams, ParityState, Sector, SingleExcitationState};
use serde::{Deserialize, Serialize};

use crate::error::CliError;
use crate::presets;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub preset: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub description: Option<String>,
    #[serde(default)]
    pub omega0: f64,
    #[serde(default = "one")]
    pub xi: f64,
    #[serde(default = "default_cavities")]
    pub n_cavities: usize,
    #[serde(default = "default_n_k")]
    pub n_k: usize,
    /// One entry per emitter, or a single entry shared by all.
    #[serde(default = "default_deltas")]
    pub deltas: Vec<f64>,
    #[serde(default)]
    pub g: f64,
    /// Absolute cavity indices.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub positions: Option<Vec<usize>>,
    /// Relative placement, centred in the chain. Used when `positions` is absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub offsets: Option<Vec<i64>>,
    #[serde(default)]
    pub spectrum: SpectrumConfig,
    #[serde(default)]
    pub scan: ScanConfig,
    #[serde(default)]
    pub evolve: EvolveConfig,
    #[serde(default)]
    pub asymptote: AsymptoteConfig,
}

fn one() -> f64 {
    1.0
}
fn default_cavities() -> usize {
    2001
}
fn default_n_k() -> usize {
    1 << 16
}
fn default_deltas() -> Vec<f64> {
    vec![0.0]
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            preset: None,
            description: None,
            omega0: 0.0,
            xi: 1.0,
            n_cavities: default_cavities(),
            n_k: default_n_k(),
            deltas: default_deltas(),
            g: 0.0,
            positions: None,
            offsets: None,
            spectrum: SpectrumConfig::default(),
            scan: ScanConfig::default(),
            evolve: EvolveConfig::default(),
            asymptote: AsymptoteConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SpectrumConfig {
    /// Energy window of the `F(E)` curves; defaults to the band widened by
    /// `0.1 xi` on both sides.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub e_min: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub e_max: Option<f64>,
    pub points: usize,
    /// Search both band sides for BOCs, not only the side nearest `delta`.
    pub both_sides: bool,
}

impl Default for SpectrumConfig {
    fn default() -> Self {
        SpectrumConfig {
            e_min: None,
            e_max: None,
            points: 2001,
            both_sides: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Spacing {
    Linear,
    Log,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScanConfig {
    /// Emitter separation; taken from the emitter placement when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub separation: Option<usize>,
    pub delta_min: f64,
    pub delta_max: f64,
    pub delta_points: usize,
    pub g_min: f64,
    pub g_max: f64,
    pub g_points: usize,
    pub g_spacing: Spacing,
    pub both_sides: bool,
}

impl Default for ScanConfig {
    fn default() -> Self {
        ScanConfig {
            separation: None,
            delta_min: -1.9,
            delta_max: 1.9,
            delta_points: 64,
            g_min: 1e-3,
            g_max: 1.0,
            g_points: 64,
            g_spacing: Spacing::Log,
            both_sides: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PropagatorKind {
    /// Full eigendecomposition.
    Dense,
    /// Matrix-free Chebyshev expansion, for long chains.
    Chebyshev,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EvolveConfig {
    pub initial: InitialSpec,
    pub t_max: f64,
    pub dt: f64,
    pub field_map: bool,
    pub field_stride: usize,
    pub propagator: PropagatorKind,
}

impl Default for EvolveConfig {
    fn default() -> Self {
        EvolveConfig {
            initial: InitialSpec::Site(0),
            t_max: 400.0,
            dt: 0.5,
            field_map: false,
            field_stride: 1,
            propagator: PropagatorKind::Dense,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AsymptoteRoute {
    /// Overlaps with the bound eigenvectors of the finite chain.
    Eigen,
    /// `1/F'` residues of the pole equation (pairs only).
    Residue,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AsymptoteConfig {
    pub route: AsymptoteRoute,
    /// Start of the comparison window; `10 x / (2 xi)` when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t_transient: Option<f64>,
    /// Emitter weight above which a finite-chain eigenstate counts as bound.
    pub bound_tolerance: f64,
}

impl Default for AsymptoteConfig {
    fn default() -> Self {
        AsymptoteConfig {
            route: AsymptoteRoute::Eigen,
            t_transient: None,
            bound_tolerance: 1e-10,
        }
    }
}

/// Initial emitter state: a site index or one of `L`, `C`, `R`, `+`, `-`,
/// `even1`, `even2`, `odd`, `symmetric3`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum InitialSpec {
    Site(usize),
    Named(String),
}

impl fmt::Display for InitialSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            InitialSpec::Site(i) => write!(f, "{i}"),
            InitialSpec::Named(s) => f.write_str(s),
        }
    }
}

impl std::str::FromStr for InitialSpec {
    type Err = std::convert::Infallible;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s.parse::<usize>() {
            Ok(i) => InitialSpec::Site(i),
            Err(_) => InitialSpec::Named(s.to_string()),
        })
    }
}

impl InitialSpec {
    pub fn build(
        &self,
        n_emitters: usize,
        n_cavities: usize,
    ) -> Result<SingleExcitationState, CliError> {
        let bad = |why: &str| CliError::Config(format!("initial state `{self}`: {why}"));
        let site = |j: usize| {
            SingleExcitationState::emitter_excited(n_emitters, n_cavities, j)
                .map_err(|e| bad(&e.to_string()))
        };
        match self {
            InitialSpec::Site(j) => site(*j),
            InitialSpec::Named(name) => match (name.as_str(), n_emitters) {
                ("L", _) => site(0),
                ("R", n) => site(n - 1),
                ("C", 3) => site(1),
                ("+" | "plus", 2) => Ok(SingleExcitationState::sector(Sector::Plus, n_cavities)),
                ("-" | "minus", 2) => Ok(SingleExcitationState::sector(Sector::Minus, n_cavities)),
                ("symmetric3" | "even1", 3) => Ok(SingleExcitationState::parity(
                    ParityState::Even1,
                    n_cavities,
                )),
                ("even2", 3) => Ok(SingleExcitationState::parity(
                    ParityState::Even2,
                    n_cavities,
                )),
                ("odd", 3) => Ok(SingleExcitationState::parity(ParityState::Odd, n_cavities)),
                _ => Err(bad(&format!("not defined for {n_emitters} emitters"))),
            },
        }
    }
}

/// Flags that override individual configuration values.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub g: Option<f64>,
    pub delta: Option<f64>,
    pub separation: Option<usize>,
    pub n_cavities: Option<usize>,
    pub n_k: Option<usize>,
    pub t_max: Option<f64>,
    pub dt: Option<f64>,
    pub initial: Option<InitialSpec>,
    pub field_map: Option<bool>,
    pub propagator: Option<PropagatorKind>,
}

impl RunConfig {
    /// Preset (if any), then the document at `path`, then `overrides`.
    pub fn resolve(
        preset: Option<&str>,
        path: Option<&Path>,
        overrides: &Overrides,
    ) -> Result<Self, CliError> {
        let mut doc = toml::Table::new();
        if let Some(name) = preset {
            doc = presets::table(name)?;
        }
        if let Some(path) = path {
            let file = load_document(path)?;
            // a preset named inside the file sits below the file's own values
            if preset.is_none() {
                if let Some(toml::Value::String(name)) = file.get("preset") {
                    doc = presets::table(name)?;
                }
            }
            merge(&mut doc, file);
        }
        if let Some(name) = preset {
            doc.insert("preset".into(), toml::Value::String(name.into()));
        }
        let mut cfg: RunConfig = doc
            .try_into()
            .map_err(|e: toml::de::Error| CliError::Config(e.to_string()))?;
        cfg.apply(overrides);
        cfg.validate()?;
        Ok(cfg)
    }

    fn apply(&mut self, o: &Overrides) {
        if let Some(g) = o.g {
            self.g = g;
        }
        if let Some(d) = o.delta {
            self.deltas = vec![d];
        }
        if let Some(x) = o.separation {
            self.positions = None;
            self.offsets = Some(vec![0, x as i64]);
            self.scan.separation = Some(x);
        }
        if let Some(n) = o.n_cavities {
            self.n_cavities = n;
        }
        if let Some(n) = o.n_k {
            self.n_k = n;
        }
        if let Some(t) = o.t_max {
            self.evolve.t_max = t;
        }
        if let Some(dt) = o.dt {
            self.evolve.dt = dt;
        }
        if let Some(init) = &o.initial {
            self.evolve.initial = init.clone();
        }
        if let Some(f) = o.field_map {
            self.evolve.field_map = f;
        }
        if let Some(p) = o.propagator {
            self.evolve.propagator = p;
        }
    }

    pub fn validate(&self) -> Result<(), CliError> {
        self.lattice()?;
        self.emitters()?;
        let e = &self.evolve;
        if !(e.t_max > 0.0 && e.t_max.is_finite() && e.dt > 0.0 && e.dt <= e.t_max) {
            return Err(CliError::Config(format!(
                "need 0 < dt <= t_max, got dt = {}, t_max = {}",
                e.dt, e.t_max
            )));
        }
        if e.field_stride == 0 {
            return Err(CliError::Config("field_stride must be at least 1".into()));
        }
        if self.spectrum.points < 2 {
            return Err(CliError::Config(
                "spectrum.points must be at least 2".into(),
            ));
        }
        Ok(())
    }

    pub fn lattice(&self) -> Result<LatticeParams, CliError> {
        Ok(LatticeParams::new(
            self.omega0,
            self.xi,
            self.n_cavities,
            self.n_k,
        )?)
    }

    pub fn emitters(&self) -> Result<EmitterArray, CliError> {
        let count = match (&self.positions, &self.offsets) {
            (Some(_), Some(_)) => {
                return Err(CliError::Config(
                    "give either positions or offsets, not both".into(),
                ))
            }
            (Some(p), None) => p.len(),
            (None, Some(o)) => o.len(),
            (None, None) => {
                return Err(CliError::Config(
                    "emitter positions or offsets are required".into(),
                ))
            }
        };
        let deltas = match self.deltas.len() {
            1 => vec![self.deltas[0]; count],
            n if n == count => self.deltas.clone(),
            n => return Err(CliError::Config(format!("{n} deltas for {count} emitters"))),
        };
        let emitters = match (&self.positions, &self.offsets) {
            (Some(p), _) => EmitterArray::new(deltas, self.g, p.clone())?,
            (_, Some(o)) => EmitterArray::centered(self.n_cavities, o, deltas, self.g)?,
            _ => unreachable!(),
        };
        emitters.validate_on(&self.lattice()?)?;
        Ok(emitters)
    }

    /// Separation used by the scan: explicit, or the pair spacing.
    pub fn scan_separation(&self) -> Result<usize, CliError> {
        match self.scan.separation {
            Some(0) => Err(CliError::Config("scan.separation must be positive".into())),
            Some(x) => Ok(x),
            None => Ok(self.emitters()?.separation()?),
        }
    }

    pub fn scan_axes(&self) -> Result<(Vec<f64>, Vec<f64>), CliError> {
        let s = &self.scan;
        if s.delta_points < 16 || s.g_points < 16 {
            return Err(CliError::Config(format!(
                "scan resolution must be at least 16x16, got {}x{}",
                s.delta_points, s.g_points
            )));
        }
        let w = 2.0 * self.xi;
        for d in [s.delta_min, s.delta_max] {
            if !((d - self.omega0).abs() < w) {
                return Err(CliError::Config(format!(
                    "scan delta {d} lies outside the band"
                )));
            }
        }
        if !(s.delta_min < s.delta_max && s.g_min > 0.0 && s.g_min < s.g_max) {
            return Err(CliError::Config(
                "scan needs delta_min < delta_max and 0 < g_min < g_max".into(),
            ));
        }
        let deltas = linear_grid(s.delta_min, s.delta_max, s.delta_points);
        let gs = match s.g_spacing {
            Spacing::Linear => linear_grid(s.g_min, s.g_max, s.g_points),
            Spacing::Log => log_grid(s.g_min, s.g_max, s.g_points),
        };
        Ok((deltas, gs))
    }

    pub fn time_grid(&self) -> Vec<f64> {
        let n = (self.evolve.t_max / self.evolve.dt).round() as usize;
        (0..=n).map(|i| i as f64 * self.evolve.dt).collect()
    }
}

/// Read a TOML or JSON document. A run manifest is accepted too, in which case
/// its recorded configuration is used.
pub fn load_document(path: &Path) -> Result<toml::Table, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    let is_json = path
        .extension()
        .is_some_and(|e| e.eq_ignore_ascii_case("json"))
        || text.trim_start().starts_with('{');
    let parse_err = |e: String| CliError::Config(format!("{}: {e}", path.display()));
    if !is_json {
        return text
            .parse::<toml::Table>()
            .map_err(|e| parse_err(e.to_string()));
    }
    let mut value: serde_json::Value =
        serde_json::from_str(&text).map_err(|e| parse_err(e.to_string()))?;
    if let Some(obj) = value.as_object_mut() {
        if obj.contains_key("tool") && obj.contains_key("config") {
            value = obj.remove("config").expect("checked");
        }
    }
    serde_json::from_value::<toml::Table>(value).map_err(|e| parse_err(e.to_string()))
}

/// Recursive table merge; `top` wins.
fn merge(base: &mut toml::Table, top: toml::Table) {
    for (k, v) in top {
        match (base.get_mut(&k), v) {
            (Some(toml::Value::Table(b)), toml::Value::Table(t)) => merge(b, t),
            (_, v) => {
                base.insert(k, v);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn from_toml(text: &str) -> Result<RunConfig, CliError> {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.toml");
        std::fs::write(&path, text).unwrap();
        RunConfig::resolve(None, Some(&path), &Overrides::default())
    }

    #[test]
    fn defaults_and_sections() {
        let cfg = from_toml(
            "g = 0.1\ndeltas = [1.5]\noffsets = [0, 7]\n[evolve]\ninitial = \"+\"\nt_max = 50.0\n",
        )
        .unwrap();
        assert_eq!(cfg.n_cavities, 2001);
        assert_eq!(cfg.n_k, 1 << 16);
        assert_eq!(cfg.evolve.initial, InitialSpec::Named("+".into()));
        assert_eq!(cfg.evolve.dt, 0.5);
        assert_eq!(cfg.time_grid().len(), 101);
        let em = cfg.emitters().unwrap();
        assert_eq!(em.deltas, vec![1.5, 1.5]);
        assert_eq!(em.positions[1] - em.positions[0], 7);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(matches!(
            from_toml("offsets = [0, 3]\nfoo = 1\n"),
            Err(CliError::Config(_))
        ));
        assert!(matches!(
            from_toml("offsets = [0, 3]\n[evolve]\ntmax = 1.0\n"),
            Err(CliError::Config(_))
        ));
    }

    #[test]
    fn invalid_values_are_config_errors() {
        for doc in [
            "offsets = [0, 3]\nxi = -1.0\n",
            "offsets = [3, 0]\n",
            "positions = [1, 2]\noffsets = [0, 1]\n",
            "offsets = [0, 3]\ndeltas = [1.0, 2.0, 3.0]\n",
            "offsets = [0, 3]\n[evolve]\ndt = 0.0\n",
            "n_cavities = 10\npositions = [3, 12]\n",
        ] {
            assert!(matches!(from_toml(doc), Err(CliError::Config(_))), "{doc}");
        }
    }

    #[test]
    fn file_values_sit_on_top_of_a_named_preset_and_flags_win() {
        let cfg = from_toml("preset = \"fig3b\"\ng = 0.07\n").unwrap();
        assert_eq!(cfg.g, 0.07);
        assert_eq!(cfg.evolve.initial, InitialSpec::Named("L".into()));
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.toml");
        std::fs::write(&path, "g = 0.07\n").unwrap();
        let o = Overrides {
            g: Some(0.03),
            initial: Some("1".parse().unwrap()),
            ..Default::default()
        };
        let cfg = RunConfig::resolve(Some("fig3e"), Some(&path), &o).unwrap();
        assert_eq!(cfg.g, 0.03);
        assert_eq!(cfg.evolve.initial, InitialSpec::Site(1));
    }

    #[test]
    fn json_documents_and_manifests() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.json");
        std::fs::write(
            &path,
            r#"{"g": 0.02, "positions": [10, 41], "evolve": {"initial": 0}}"#,
        )
        .unwrap();
        let cfg = RunConfig::resolve(None, Some(&path), &Overrides::default()).unwrap();
        assert_eq!(cfg.evolve.initial, InitialSpec::Site(0));
        let manifest = serde_json::json!({"tool": "bswg", "config": cfg});
        let mpath = dir.path().join("manifest.json");
        std::fs::write(&mpath, manifest.to_string()).unwrap();
        assert_eq!(
            RunConfig::resolve(None, Some(&mpath), &Overrides::default()).unwrap(),
            cfg
        );
    }

    #[test]
    fn initial_states() {
        let two = |s: &str| s.parse::<InitialSpec>().unwrap().build(2, 50);
        assert!(two("L").unwrap().emitter_amps[0].re == 1.0);
        assert!(two("R").unwrap().emitter_amps[1].re == 1.0);
        assert!(two("1").unwrap().emitter_amps[1].re == 1.0);
        assert!(two("-").unwrap().emitter_amps[1].re < 0.0);
        assert!(two("symmetric3").is_err());
        assert!(two("2").is_err());
        let s = "symmetric3"
            .parse::<InitialSpec>()
            .unwrap()
            .build(3, 50)
            .unwrap();
        assert!(s
            .emitter_amps
            .iter()
            .all(|a| (a.re - 1.0 / 3f64.sqrt()).abs() < 1e-15));
    }

    #[test]
    fn scan_axes_are_checked() {
        let mut cfg = from_toml("offsets = [0, 5]\n").unwrap();
        let (d, g) = cfg.scan_axes().unwrap();
        assert_eq!((d.len(), g.len()), (64, 64));
        cfg.scan.g_points = 8;
        assert!(cfg.scan_axes().is_err());
        cfg.scan.g_points = 16;
        cfg.scan.delta_max = 2.5;
        assert!(cfg.scan_axes().is_err());
    }
}
