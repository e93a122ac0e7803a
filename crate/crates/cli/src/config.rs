use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use imcf_core::counterexample::{CertifySettings, FbarSpec};
use imcf_core::flow::FlowControls;
use imcf_core::geometry::GraphSurface;
use imcf_core::io::coeffs_from_triples;
use imcf_core::sphere::{GridMode, SphereField, SphereGrid};

pub const OUTPUT_ROOT_VAR: &str = "IMCF_OUTPUT_ROOT";

/// Initial surface r = r̃(θ).
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "preset", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Profile {
    /// Geodesic sphere r̃ ≡ radius.
    Sphere { radius: f64 },
    /// r̃ = base + ε P₂(Xⁿ).
    P2 { base: f64, epsilon: f64 },
    /// r̃ given by harmonic coefficients as [l, m, value] triples.
    Coefficients { coefficients: Vec<(usize, i64, f64)> },
    /// r̃ = s + f̄; `search_s0` lets `certify` pick s₀ itself.
    Fbar {
        s: f64,
        #[serde(default)]
        search_s0: bool,
        fbar: FbarSpec,
    },
}

impl Default for Profile {
    fn default() -> Self {
        Profile::Fbar {
            s: 2.0,
            search_s0: false,
            fbar: FbarSpec::default(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Battery {
    /// Perturbed flow of the configured profile: identity residuals,
    /// refinement orders, and the Gauss identity when n = 3.
    Default,
    /// Exact checks on the flow of the unit geodesic sphere.
    Sphere,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VerifyConfig {
    pub battery: Battery,
    pub t_final: f64,
    pub cadence: f64,
    /// Relative residual threshold for the default battery.
    pub residual_tolerance: f64,
    /// Threshold for the exact sphere checks.
    pub exact_tolerance: f64,
    /// Accepted band for observed refinement orders in time.
    pub order_band: (f64, f64),
}

impl Default for VerifyConfig {
    fn default() -> Self {
        VerifyConfig {
            battery: Battery::Default,
            t_final: 0.6,
            cadence: 0.04,
            residual_tolerance: 5e-2,
            exact_tolerance: 1e-8,
            order_band: (1.5, 2.5),
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BallModelConfig {
    pub t_final: f64,
    pub cadence: f64,
    /// Cauchy tolerance for the profile and bound on the final sup gap.
    pub tolerance: f64,
}

impl Default for BallModelConfig {
    fn default() -> Self {
        BallModelConfig {
            t_final: 10.0,
            cadence: 0.1,
            tolerance: 1e-2,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub dimension: usize,
    /// Omitted: full2d for n = 3, polar-symmetric otherwise.
    pub mode: Option<GridMode>,
    /// Omitted: 32 on full grids, 64 on polar grids.
    pub band_limit: Option<usize>,
    /// Colatitude nodes of a polar grid; omitted: 4 × band limit.
    pub nodes: Option<usize>,
    pub output_dir: PathBuf,
    pub profile: Profile,
    pub flow: FlowControls,
    pub certify: CertifySettings,
    pub verify: VerifyConfig,
    pub ball_model: BallModelConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            dimension: 3,
            mode: None,
            band_limit: None,
            nodes: None,
            output_dir: PathBuf::from("imcf-output"),
            profile: Profile::default(),
            flow: FlowControls::default(),
            certify: CertifySettings::default(),
            verify: VerifyConfig::default(),
            ball_model: BallModelConfig::default(),
        }
    }
}

/// Invalid configuration, reported with the offending field path.
#[derive(Debug)]
pub struct ConfigError(pub String);

impl ConfigError {
    fn at(path: &str, message: impl std::fmt::Display) -> Self {
        ConfigError(format!("{path}: {message}"))
    }
}

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

/// Parses `value` as a TOML value, falling back to a bare string.
fn parse_value(value: &str) -> toml::Value {
    format!("v = {value}")
        .parse::<toml::Table>()
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(value.to_string()))
}

/// Keys naming the variant of a tagged table; changing one discards the
/// sibling keys of the previous variant.
const TAGS: [&str; 2] = ["preset", "kind"];

fn retagged(base: &toml::Table, incoming: &toml::Table) -> bool {
    TAGS.iter()
        .any(|t| incoming.get(*t).is_some_and(|v| base.get(*t) != Some(v)))
}

/// Deep-merges `incoming` into `base`.
fn merge(base: &mut toml::Table, incoming: toml::Table) {
    for (key, value) in incoming {
        match (base.get_mut(&key), value) {
            (Some(toml::Value::Table(b)), toml::Value::Table(v)) if !retagged(b, &v) => merge(b, v),
            (_, v) => {
                base.insert(key, v);
            }
        }
    }
}

/// Sets a dotted key such as `flow.cadence` inside `table`.
pub fn apply_override(table: &mut toml::Table, assignment: &str) -> Result<(), ConfigError> {
    let (key, value) = assignment
        .split_once('=')
        .ok_or_else(|| ConfigError(format!("override `{assignment}` must have the form key=value")))?;
    let key = key.trim();
    let parts: Vec<&str> = key.split('.').collect();
    if parts.iter().any(|p| p.is_empty()) {
        return Err(ConfigError(format!("override key `{key}` is malformed")));
    }
    let mut current = table;
    for part in &parts[..parts.len() - 1] {
        let entry = current
            .entry(part.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()));
        current = entry
            .as_table_mut()
            .ok_or_else(|| ConfigError::at(key, format!("`{part}` is not a table")))?;
    }
    let last = parts[parts.len() - 1];
    let value = parse_value(value.trim());
    if TAGS.contains(&last) && current.get(last) != Some(&value) {
        current.clear();
    }
    current.insert(last.to_string(), value);
    Ok(())
}

impl RunConfig {
    /// Reads the config file (if any), applies overrides in order, and
    /// validates the result.
    pub fn load(file: Option<&Path>, overrides: &[String]) -> Result<Self, ConfigError> {
        let mut table = toml::Table::try_from(RunConfig::default()).expect("defaults serialize");
        if let Some(path) = file {
            let text = std::fs::read_to_string(path)
                .map_err(|e| ConfigError(format!("cannot read {}: {e}", path.display())))?;
            let parsed = text
                .parse::<toml::Table>()
                .map_err(|e| ConfigError(format!("{}: {e}", path.display())))?;
            merge(&mut table, parsed);
        }
        for o in overrides {
            apply_override(&mut table, o)?;
        }
        let config: RunConfig = serde_path_to_error::deserialize(toml::Value::Table(table)).map_err(|e| {
            let path = e.path().to_string();
            ConfigError::at(if path == "." { "config" } else { &path }, e.into_inner())
        })?;
        config.validate()?;
        Ok(config)
    }

    pub fn grid_mode(&self) -> GridMode {
        self.mode.unwrap_or(if self.dimension == 3 {
            GridMode::Full2d
        } else {
            GridMode::PolarSymmetric
        })
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.dimension < 3 {
            return Err(ConfigError::at("dimension", format!("must be at least 3, got {}", self.dimension)));
        }
        if self.grid_mode() == GridMode::Full2d && self.dimension != 3 {
            return Err(ConfigError::at(
                "mode",
                format!("unsupported mode: full2d needs dimension 3, got {}", self.dimension),
            ));
        }
        if self.grid_mode() == GridMode::Full2d && self.nodes.is_some() {
            return Err(ConfigError::at("nodes", "only polar-symmetric grids take a node count"));
        }
        if self.band_limit == Some(0) {
            return Err(ConfigError::at("band_limit", "must be positive"));
        }
        self.flow.validate().map_err(|e| ConfigError::at("flow", e))?;
        self.certify.flow.validate().map_err(|e| ConfigError::at("certify.flow", e))?;
        let positive = |path: &str, x: f64| {
            if x > 0.0 && x.is_finite() {
                Ok(())
            } else {
                Err(ConfigError::at(path, format!("must be positive and finite, got {x}")))
            }
        };
        positive("certify.probe_t", self.certify.probe_t)?;
        positive("certify.tail_safety", self.certify.tail_safety)?;
        positive("certify.s0_step", self.certify.s0_step)?;
        positive("verify.t_final", self.verify.t_final)?;
        positive("verify.cadence", self.verify.cadence)?;
        positive("ball_model.t_final", self.ball_model.t_final)?;
        positive("ball_model.cadence", self.ball_model.cadence)?;
        positive("ball_model.tolerance", self.ball_model.tolerance)?;
        if let Some(t) = self.certify.t_final {
            positive("certify.t_final", t)?;
        }
        match &self.profile {
            Profile::Sphere { radius } => positive("profile.radius", *radius)?,
            Profile::P2 { base, .. } => positive("profile.base", *base)?,
            Profile::Coefficients { coefficients } if coefficients.is_empty() => {
                return Err(ConfigError::at("profile.coefficients", "must not be empty"));
            }
            _ => {}
        }
        // Building the grid and surface catches the remaining domain errors.
        let grid = self.grid()?;
        self.initial_surface(&grid)?;
        Ok(())
    }

    pub fn grid(&self) -> Result<Arc<SphereGrid>, ConfigError> {
        let grid = match self.grid_mode() {
            GridMode::Full2d => SphereGrid::full(self.band_limit.unwrap_or(32)),
            GridMode::PolarSymmetric => {
                let l = self.band_limit.unwrap_or(64);
                SphereGrid::polar(self.dimension, l, self.nodes.unwrap_or(4 * l))
            }
        };
        grid.map_err(|e| ConfigError::at("band_limit", e))
    }

    pub fn initial_surface(&self, grid: &Arc<SphereGrid>) -> Result<GraphSurface, ConfigError> {
        let surface = match &self.profile {
            Profile::Sphere { radius } => GraphSurface::sphere(grid, *radius),
            Profile::P2 { base, epsilon } => {
                GraphSurface::from_field(&SphereField::legendre_p2(grid).map(|p| base + epsilon * p))
            }
            Profile::Coefficients { coefficients } => coeffs_from_triples(grid, coefficients)
                .and_then(|c| GraphSurface::from_coeffs(grid, c)),
            Profile::Fbar { s, fbar, .. } => imcf_core::counterexample::construct_initial(fbar, grid, *s),
        };
        surface.map_err(|e| ConfigError::at("profile", e))
    }

    /// Output directory, resolved against the output-root variable when set.
    pub fn output_path(&self) -> PathBuf {
        match std::env::var_os(OUTPUT_ROOT_VAR) {
            Some(root) if self.output_dir.is_relative() => PathBuf::from(root).join(&self.output_dir),
            _ => self.output_dir.clone(),
        }
    }

    /// The effective configuration as TOML, with the derived defaults noted.
    pub fn to_toml(&self) -> String {
        let body = toml::to_string_pretty(self).expect("config serializes");
        format!(
            "# imcf configuration. Omitted optional keys:\n\
             #   mode          full2d when dimension = 3, polar-symmetric otherwise\n\
             #   band_limit    32 on full2d grids, 64 on polar-symmetric grids\n\
             #   nodes         4 x band_limit (polar-symmetric only)\n\
             #   certify.t_final           10 when dimension = 3, 12 otherwise\n\
             #   certify.pinching_window   [2, t_final]\n\
             # Output directory is resolved against ${OUTPUT_ROOT_VAR} when set.\n\
             # Profile presets: sphere {{radius}}, p2 {{base, epsilon}},\n\
             #   coefficients {{coefficients = [[l, m, value], ...]}}, fbar {{s, search_s0, fbar}}\n\
             #   with fbar kinds legendre-p2 {{epsilon}}, span {{coefficients = [a0, a1, ...]}}, zero.\n\n{body}"
        )
    }
}
