//! Experiment configuration files.
//!
//! A config is TOML with the model keys at the top level and one optional
//! table per experiment kind:
//!
//! ```toml
//! alpha = 4.4
//! sigma = 0.3
//! R = 2.0
//! trap = "harmonic"        # or "file:<two-column r,V csv>"
//! preset = "desk"
//! seed = 1
//!
//! [evolve]
//! initial = "stationary"
//! t_final = 150.0
//! ```
//!
//! Resolution-type settings left unset are filled in from the preset.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::collocation::Parameter;
use crate::error::{Error, Result};
use crate::model::{ModelParams, TabulatedPotential, Trap};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Kind {
    Stationary,
    Stability,
    Curve,
    Continue,
    Evolve,
    Census,
}

impl Kind {
    pub fn name(self) -> &'static str {
        match self {
            Kind::Stationary => "stationary",
            Kind::Stability => "stability",
            Kind::Curve => "curve",
            Kind::Continue => "continue",
            Kind::Evolve => "evolve",
            Kind::Census => "census",
        }
    }
}

impl fmt::Display for Kind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Resolution presets. `Desk` is sized for a laptop, `Paper` for
/// production-scale runs.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Preset {
    #[default]
    Desk,
    Paper,
}

impl FromStr for Preset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "desk" => Ok(Preset::Desk),
            "paper" => Ok(Preset::Paper),
            other => Err(Error::invalid(format!(
                "unknown preset '{other}' (expected desk or paper)"
            ))),
        }
    }
}

impl Preset {
    pub fn name(self) -> &'static str {
        match self {
            Preset::Desk => "desk",
            Preset::Paper => "paper",
        }
    }

    /// Collocation intervals on `[0, 15]`.
    pub fn intervals(self) -> usize {
        match self {
            Preset::Desk => 1600,
            Preset::Paper => 2000,
        }
    }

    pub fn bdg_grid(self) -> usize {
        match self {
            Preset::Desk => 600,
            Preset::Paper => 1000,
        }
    }

    pub fn nu_max(self) -> f64 {
        match self {
            Preset::Desk => 1e-2,
            Preset::Paper => 1e-4,
        }
    }

    pub fn grid(self) -> usize {
        match self {
            Preset::Desk => 256,
            Preset::Paper => 1024,
        }
    }

    /// Time step. On the desk grid `τ k_max² < π` keeps the splitting clear of
    /// its resonance instability.
    pub fn tau(self) -> f64 {
        match self {
            Preset::Desk => 0.00125,
            Preset::Paper => 0.001,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StationarySection {
    pub winding: Option<u32>,
    /// `thomas-fermi`, `zero`, `multi-bump:<n>` or `file:<profile csv>`.
    pub guess: Option<String>,
    pub intervals: Option<usize>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StabilitySection {
    pub m_min: Option<u32>,
    pub m_max: Option<u32>,
    pub n_grid: Option<usize>,
    /// Background winding; 0 is the ground state, `m ≥ 1` a central vortex.
    pub winding: Option<u32>,
    /// Use a stored profile instead of solving for one.
    pub profile: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CurveSection {
    pub radii: Option<Vec<f64>>,
    pub m_max: Option<u32>,
    pub n_grid: Option<usize>,
    /// `[stable R, unstable R]` bracket refined by bisection.
    pub threshold: Option<[f64; 2]>,
    pub threshold_width: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ContinueSection {
    /// `sigma`, `R` or `alpha`.
    pub parameter: Option<String>,
    pub range: Option<[f64; 2]>,
    pub nu_max: Option<f64>,
    pub max_points: Option<usize>,
    pub winding: Option<u32>,
    pub guess: Option<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvolveSection {
    /// `oscillator`, `stationary` or `file:<snapshot>`.
    pub initial: Option<String>,
    /// Winding of the embedded stationary state.
    pub winding: Option<u32>,
    pub grid: Option<usize>,
    pub half_width: Option<f64>,
    pub tau: Option<f64>,
    pub t_final: Option<f64>,
    pub snapshot_every: Option<usize>,
    pub noise: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CensusSection {
    /// Directory of snapshots, or a single snapshot file.
    pub snapshots: Option<PathBuf>,
    /// Density floor relative to the peak density of each snapshot.
    pub relative_floor: Option<f64>,
}

/// The raw file contents.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub kind: Option<Kind>,
    pub alpha: Option<f64>,
    pub sigma: Option<f64>,
    #[serde(rename = "R")]
    pub pump_radius: Option<f64>,
    pub kappa: Option<f64>,
    pub b: Option<f64>,
    pub trap: Option<String>,
    pub preset: Option<Preset>,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    #[serde(default)]
    pub stationary: StationarySection,
    #[serde(default)]
    pub stability: StabilitySection,
    #[serde(default)]
    pub curve: CurveSection,
    #[serde(rename = "continue", default)]
    pub continuation: ContinueSection,
    #[serde(default)]
    pub evolve: EvolveSection,
    #[serde(default)]
    pub census: CensusSection,
}

/// A parsed and validated experiment description.
#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub kind: Kind,
    pub params: ModelParams,
    pub preset: Preset,
    pub seed: u64,
    pub out: PathBuf,
    pub file: ConfigFile,
    /// Directory relative paths in the file are resolved against.
    pub base_dir: PathBuf,
}

pub const DEFAULT_SEED: u64 = 1;

/// Command-line overrides applied on top of the file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub out: Option<PathBuf>,
    pub preset: Option<Preset>,
    pub seed: Option<u64>,
}

impl ExperimentConfig {
    pub fn load(path: &Path, kind: Kind, overrides: &Overrides) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Parse {
            path: path.to_path_buf(),
            message: e.to_string(),
        })?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Self::parse(&text, path, &base, kind, overrides)
    }

    /// Parse `text`; `origin` only labels error messages.
    pub fn parse(
        text: &str,
        origin: &Path,
        base_dir: &Path,
        kind: Kind,
        overrides: &Overrides,
    ) -> Result<Self> {
        let parse_err = |message: String| Error::Parse {
            path: origin.to_path_buf(),
            message,
        };
        let file: ConfigFile = toml::from_str(text).map_err(|e| parse_err(e.to_string()))?;
        if let Some(k) = file.kind {
            if k != kind {
                return Err(parse_err(format!(
                    "config is for '{k}' but the '{kind}' subcommand was run"
                )));
            }
        }
        let mut params = ModelParams::new(
            file.alpha.unwrap_or(4.4),
            file.sigma.unwrap_or(0.3),
            file.pump_radius.unwrap_or(2.0),
        )
        .map_err(|e| parse_err(e.to_string()))?;
        if let Some(kappa) = file.kappa {
            params = params
                .with_kappa(kappa)
                .map_err(|e| parse_err(e.to_string()))?;
        }
        if let Some(b) = file.b {
            params = params
                .with_truncation(b)
                .map_err(|e| parse_err(e.to_string()))?;
        }
        match file.trap.as_deref() {
            None | Some("harmonic") => {}
            Some(spec) => match spec.strip_prefix("file:") {
                Some(p) => {
                    let table = TabulatedPotential::from_csv(&resolve(base_dir, Path::new(p)))
                        .map_err(|e| parse_err(format!("trap table: {e}")))?;
                    params = params.with_trap(Trap::Tabulated(Arc::new(table)));
                }
                None => {
                    return Err(parse_err(format!(
                        "unknown trap '{spec}' (expected harmonic or file:<path>)"
                    )))
                }
            },
        }
        let preset = overrides.preset.or(file.preset).unwrap_or_default();
        let seed = overrides.seed.or(file.seed).unwrap_or(DEFAULT_SEED);
        let out = overrides
            .out
            .clone()
            .or_else(|| file.out.as_ref().map(|p| resolve(base_dir, p)))
            .unwrap_or_else(|| PathBuf::from("cgpe-out").join(kind.name()));
        let config = Self {
            kind,
            params,
            preset,
            seed,
            out,
            file,
            base_dir: base_dir.to_path_buf(),
        };
        config.check_files().map_err(|e| parse_err(e.to_string()))?;
        Ok(config)
    }

    /// Referenced files must exist when the config is read.
    fn check_files(&self) -> Result<()> {
        let mut paths: Vec<PathBuf> = Vec::new();
        for guess in [&self.file.stationary.guess, &self.file.continuation.guess]
            .into_iter()
            .flatten()
        {
            if let Some(p) = guess.strip_prefix("file:") {
                paths.push(self.path(Path::new(p)));
            }
        }
        if let Some(p) = &self.file.stability.profile {
            paths.push(self.path(p));
        }
        if let Some(p) = self
            .file
            .evolve
            .initial
            .as_deref()
            .and_then(|s| s.strip_prefix("file:"))
        {
            paths.push(self.path(Path::new(p)));
        }
        if self.kind == Kind::Census {
            if let Some(p) = &self.file.census.snapshots {
                paths.push(self.path(p));
            }
        }
        for p in paths {
            if !p.exists() {
                return Err(Error::invalid(format!(
                    "referenced file {} does not exist",
                    p.display()
                )));
            }
        }
        Ok(())
    }

    /// A path from the config file, resolved against the config's directory.
    pub fn path(&self, p: &Path) -> PathBuf {
        resolve(&self.base_dir, p)
    }

    pub fn intervals(&self) -> usize {
        let per_unit = self.preset.intervals() as f64 / 15.0;
        self.file
            .stationary
            .intervals
            .unwrap_or((self.params.b * per_unit).ceil() as usize)
    }

    pub fn continuation_parameter(&self) -> Result<Parameter> {
        self.file
            .continuation
            .parameter
            .as_deref()
            .unwrap_or("sigma")
            .parse()
    }
}

fn resolve(base: &Path, p: &Path) -> PathBuf {
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        base.join(p)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str, kind: Kind) -> Result<ExperimentConfig> {
        ExperimentConfig::parse(
            text,
            Path::new("test.toml"),
            Path::new("."),
            kind,
            &Overrides::default(),
        )
    }

    #[test]
    fn defaults_are_the_reference_parameters() {
        let c = parse("", Kind::Stationary).unwrap();
        assert_eq!(
            (c.params.alpha, c.params.sigma, c.params.pump_radius),
            (4.4, 0.3, 2.0)
        );
        assert_eq!((c.params.kappa, c.params.b), (10.0, 15.0));
        assert_eq!(c.preset, Preset::Desk);
        assert_eq!(c.intervals(), 1600);
    }

    #[test]
    fn sections_and_overrides() {
        let text =
            "R = 5.0\npreset = \"paper\"\nseed = 9\n[evolve]\nt_final = 10.0\nnoise = 1e-10\n";
        let c = parse(text, Kind::Evolve).unwrap();
        assert_eq!(c.params.pump_radius, 5.0);
        assert_eq!((c.preset, c.seed), (Preset::Paper, 9));
        assert_eq!(c.file.evolve.t_final, Some(10.0));
        let o = Overrides {
            preset: Some(Preset::Desk),
            seed: Some(3),
            out: Some("x".into()),
        };
        let c = ExperimentConfig::parse(text, Path::new("t"), Path::new("."), Kind::Evolve, &o)
            .unwrap();
        assert_eq!(
            (c.preset, c.seed, c.out),
            (Preset::Desk, 3, PathBuf::from("x"))
        );
    }

    #[test]
    fn bad_configs_are_usage_errors() {
        for text in [
            "alpha = ",
            "sigma = -1.0",
            "unknown_key = 1",
            "[stability]\nm_maximum = 3",
            "trap = \"quartic\"",
            "trap = \"file:/definitely/missing.csv\"",
            "kind = \"evolve\"",
            "[stability]\nprofile = \"/definitely/missing.csv\"",
        ] {
            let e = parse(text, Kind::Stability).unwrap_err();
            assert!(e.is_usage(), "{text}: {e}");
        }
        assert!("laptop".parse::<Preset>().is_err());
    }
}
