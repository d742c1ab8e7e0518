//! Hardware, grid and compiler settings.
//!
//! Every struct deserializes from TOML with per-field defaults, so a config
//! file only has to name the values it overrides.

use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::Point;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("malformed config: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("invalid config: {0}")]
    Invalid(String),
    #[error("unknown machine preset `{0}` (expected quera256 or atom1225)")]
    UnknownMachine(String),
}

/// Atom-array lattice. Sites sit `unit_um()` apart so that two atoms on
/// neighbouring sites leave a corridor at least `padding_um` wide in which a
/// third atom keeps `min_sep_um` from both.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridSpec {
    pub sites_x: usize,
    pub sites_y: usize,
    pub min_sep_um: f64,
    pub padding_um: f64,
}

impl Default for GridSpec {
    fn default() -> Self {
        Machine::Quera256.grid()
    }
}

impl GridSpec {
    pub fn unit_um(&self) -> f64 {
        2.0 * self.min_sep_um + self.padding_um
    }

    pub fn site_count(&self) -> usize {
        self.sites_x * self.sites_y
    }

    /// Physical position of site (col, row).
    pub fn site_position(&self, col: usize, row: usize) -> Point {
        let u = self.unit_um();
        Point::new(col as f64 * u, row as f64 * u)
    }

    /// Inclusive coordinate range an AOD line may occupy along x.
    pub fn x_bounds(&self) -> (f64, f64) {
        let u = self.unit_um();
        (-u / 2.0, (self.sites_x as f64 - 1.0) * u + u / 2.0)
    }

    pub fn y_bounds(&self) -> (f64, f64) {
        let u = self.unit_um();
        (-u / 2.0, (self.sites_y as f64 - 1.0) * u + u / 2.0)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.sites_x == 0 || self.sites_y == 0 {
            return Err(ConfigError::Invalid("grid needs at least one site".into()));
        }
        if !(self.min_sep_um > 0.0 && self.min_sep_um.is_finite()) {
            return Err(ConfigError::Invalid("min_sep_um must be positive".into()));
        }
        if !(self.padding_um > 0.0 && self.padding_um.is_finite()) {
            return Err(ConfigError::Invalid("padding_um must be positive".into()));
        }
        Ok(())
    }
}

/// Machine presets selectable from the command line.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Machine {
    /// 16×16 sites.
    Quera256,
    /// 35×35 sites.
    Atom1225,
}

impl Machine {
    pub fn grid(self) -> GridSpec {
        let sites = match self {
            Machine::Quera256 => 16,
            Machine::Atom1225 => 35,
        };
        GridSpec {
            sites_x: sites,
            sites_y: sites,
            min_sep_um: 4.0,
            padding_um: 2.0,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Machine::Quera256 => "quera256",
            Machine::Atom1225 => "atom1225",
        }
    }
}

impl FromStr for Machine {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "quera256" => Ok(Machine::Quera256),
            "atom1225" => Ok(Machine::Atom1225),
            other => Err(ConfigError::UnknownMachine(other.to_string())),
        }
    }
}

/// Error rates and timings of the modeled device. Times are in µs unless
/// the field name says otherwise.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HardwareParams {
    pub atom_loss_rate: f64,
    pub trap_switch_us: f64,
    pub u3_error: f64,
    pub aod_speed_um_per_us: f64,
    pub u3_time_us: f64,
    pub t1_s: f64,
    pub cz_error: f64,
    pub t2_s: f64,
    pub cz_time_us: f64,
    pub swap_error: f64,
    pub readout_error: f64,
    /// Loss probability charged per trap-change round trip.
    pub move_loss: f64,
}

impl Default for HardwareParams {
    fn default() -> Self {
        HardwareParams {
            atom_loss_rate: 0.007,
            trap_switch_us: 100.0,
            u3_error: 0.000127,
            aod_speed_um_per_us: 55.0,
            u3_time_us: 2.0,
            t1_s: 4.0,
            cz_error: 0.0048,
            t2_s: 1.49,
            cz_time_us: 0.8,
            swap_error: 0.0143,
            readout_error: 0.05,
            move_loss: 0.001,
        }
    }
}

impl HardwareParams {
    pub fn validate(&self) -> Result<(), ConfigError> {
        let rates = [
            ("atom_loss_rate", self.atom_loss_rate),
            ("u3_error", self.u3_error),
            ("cz_error", self.cz_error),
            ("swap_error", self.swap_error),
            ("readout_error", self.readout_error),
            ("move_loss", self.move_loss),
        ];
        for (name, v) in rates {
            if !(0.0..=1.0).contains(&v) {
                return Err(ConfigError::Invalid(format!("{name} must lie in [0, 1]")));
            }
        }
        let times = [
            ("trap_switch_us", self.trap_switch_us),
            ("aod_speed_um_per_us", self.aod_speed_um_per_us),
            ("u3_time_us", self.u3_time_us),
            ("t1_s", self.t1_s),
            ("t2_s", self.t2_s),
            ("cz_time_us", self.cz_time_us),
        ];
        for (name, v) in times {
            if !(v > 0.0 && v.is_finite()) {
                return Err(ConfigError::Invalid(format!("{name} must be positive")));
            }
        }
        Ok(())
    }

    /// Time to travel `distance_um` at AOD speed.
    pub fn move_time_us(&self, distance_um: f64) -> f64 {
        distance_um / self.aod_speed_um_per_us
    }

    /// Error of a SWAP built from three CZ gates.
    pub fn swap_error_from_cz(&self) -> f64 {
        1.0 - (1.0 - self.cz_error).powi(3)
    }
}

/// Dual-annealing parameters for the continuous placement.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnnealConfig {
    pub max_iter: usize,
    pub initial_temp: f64,
    pub restart_temp_ratio: f64,
    pub visit: f64,
    pub accept: f64,
    /// Gradient steps per local search.
    pub local_search_iter: usize,
    /// Weight of the all-pairs Σd² term that keeps unconnected qubits near
    /// the rest.
    pub cohesion: f64,
    /// Penalty weight for pairs closer than `min_spacing`, multiplied by the
    /// heaviest edge weight.
    pub spacing_weight: f64,
    /// Distance below which pairs are penalized; `None` lets the pipeline
    /// use one grid pitch.
    pub min_spacing: Option<f64>,
}

impl Default for AnnealConfig {
    fn default() -> Self {
        AnnealConfig {
            max_iter: 250,
            initial_temp: 5230.0,
            restart_temp_ratio: 2e-5,
            visit: 2.62,
            accept: -5.0,
            local_search_iter: 200,
            cohesion: 0.01,
            spacing_weight: 100.0,
            min_spacing: None,
        }
    }
}

impl AnnealConfig {
    /// The bare Σ w·d² objective with no spacing or cohesion terms.
    pub fn pure() -> Self {
        AnnealConfig {
            cohesion: 0.0,
            spacing_weight: 0.0,
            min_spacing: Some(0.0),
            ..AnnealConfig::default()
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if !(1.0 < self.visit && self.visit < 3.0) {
            return Err(ConfigError::Invalid("visit must lie in (1, 3)".into()));
        }
        if !(self.accept < 0.0) {
            return Err(ConfigError::Invalid("accept must be negative".into()));
        }
        if !(self.initial_temp > 0.0) || !(self.restart_temp_ratio > 0.0 && self.restart_temp_ratio < 1.0) {
            return Err(ConfigError::Invalid("bad annealing temperatures".into()));
        }
        if self.cohesion < 0.0 || self.spacing_weight < 0.0 {
            return Err(ConfigError::Invalid("objective weights must be non-negative".into()));
        }
        Ok(())
    }
}

/// Everything the pipeline needs besides the circuit and seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CompilerConfig {
    pub grid: GridSpec,
    pub hardware: HardwareParams,
    pub anneal: AnnealConfig,
    /// Number of AOD row/column pairs available for permanently mobile atoms.
    pub aod_count: usize,
    /// Extra row/column pairs reserved for trap changes.
    pub transient_aod_pairs: usize,
    /// Cap on induced line displacements while planning one move.
    pub recursion_limit: usize,
    pub homing: bool,
    /// Blockade radius as a multiple of the interaction radius.
    pub blockade_factor: f64,
    pub inter_shot_overhead_us: f64,
}

impl Default for CompilerConfig {
    fn default() -> Self {
        CompilerConfig {
            grid: GridSpec::default(),
            hardware: HardwareParams::default(),
            anneal: AnnealConfig::default(),
            aod_count: 20,
            transient_aod_pairs: 1,
            recursion_limit: 80,
            homing: true,
            blockade_factor: 2.5,
            inter_shot_overhead_us: 0.0,
        }
    }
}

impl CompilerConfig {
    pub fn for_machine(machine: Machine) -> Self {
        CompilerConfig {
            grid: machine.grid(),
            ..CompilerConfig::default()
        }
    }

    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        let config: CompilerConfig = toml::from_str(text)?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        CompilerConfig::default().load_over(path)
    }

    /// Reads `path` and applies it on top of `self`; keys the file leaves
    /// out keep their current values rather than the defaults.
    pub fn load_over(&self, path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.display().to_string(),
            source,
        })?;
        self.overlay_toml(&text)
    }

    pub fn overlay_toml(&self, text: &str) -> Result<Self, ConfigError> {
        let patch: toml::Table = toml::from_str(text)?;
        let mut base = toml::Table::try_from(self).map_err(|e| ConfigError::Invalid(e.to_string()))?;
        merge(&mut base, patch);
        let config: CompilerConfig = base.try_into()?;
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        self.grid.validate()?;
        self.hardware.validate()?;
        self.anneal.validate()?;
        if self.aod_count == 0 {
            return Err(ConfigError::Invalid("aod_count must be at least 1".into()));
        }
        if !(self.blockade_factor >= 1.0) {
            return Err(ConfigError::Invalid("blockade_factor must be at least 1".into()));
        }
        if !(self.inter_shot_overhead_us >= 0.0) {
            return Err(ConfigError::Invalid("inter_shot_overhead_us must be non-negative".into()));
        }
        Ok(())
    }
}

fn merge(base: &mut toml::Table, patch: toml::Table) {
    for (k, v) in patch {
        match (base.get_mut(&k), v) {
            (Some(toml::Value::Table(b)), toml::Value::Table(p)) => merge(b, p),
            (_, v) => {
                base.insert(k, v);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unit_is_twice_separation_plus_padding() {
        let g = GridSpec::default();
        assert_eq!(g.unit_um(), 10.0);
        assert_eq!(Machine::Atom1225.grid().site_count(), 1225);
    }

    #[test]
    fn partial_toml_keeps_defaults() {
        let c = CompilerConfig::from_toml("aod_count = 5\n[hardware]\ncz_error = 0.01\n").unwrap();
        assert_eq!(c.aod_count, 5);
        assert_eq!(c.hardware.cz_error, 0.01);
        assert_eq!(c.hardware.t1_s, 4.0);
        assert_eq!(c.grid, GridSpec::default());
    }

    #[test]
    fn shipped_default_file_matches_code() {
        let text = include_str!("../../../config/default.toml");
        assert_eq!(CompilerConfig::from_toml(text).unwrap(), CompilerConfig::default());
    }

    #[test]
    fn overlay_keeps_the_machine_grid() {
        let big = CompilerConfig::for_machine(Machine::Atom1225);
        let c = big.overlay_toml("homing = false\n[grid]\npadding_um = 3.0\n").unwrap();
        assert_eq!(c.grid.sites_x, 35);
        assert_eq!(c.grid.padding_um, 3.0);
        assert!(!c.homing);
        assert!(big.overlay_toml("[grid]\nsites = 3\n").is_err());
    }

    #[test]
    fn rejects_bad_values() {
        assert!(CompilerConfig::from_toml("[grid]\npadding_um = 0.0\n").is_err());
        assert!(CompilerConfig::from_toml("[hardware]\ncz_error = 1.5\n").is_err());
        assert!(CompilerConfig::from_toml("bogus = 1\n").is_err());
        assert!("quera512".parse::<Machine>().is_err());
    }
}
