//! Experiment configuration.
//!
//! One TOML document; every table is optional and unknown keys are rejected.
//!
//! ```toml
//! domain = "annulus:0.5,1"        # or a [domain] table, see DomainSpec
//!
//! [hm]                            # harmonic-measure backend
//! kind = "nystrom"                # exact | nystrom | wos
//! nystrom = { panels = 256 }
//! wos = { n = 100000, seed = 0 }
//!
//! [quad]
//! nodes = 256
//!
//! [sim]
//! h = 1e-4
//! T = 50.0
//! seeds = 5                       # count (seeds 1..=5) or explicit list
//! burn_in = 0.1
//!
//! [sweep]
//! radius = 1.0
//! holes = [{ center = [0.5, 0.0], radius = 0.03 }]
//!
//! [transform]
//! input = "path.csv"
//!
//! [output]
//! dir = "out"
//! formats = ["csv", "json"]
//! ```

use std::fmt;
use std::path::{Path, PathBuf};

use rbm_lyapunov::catalog::DomainSpec;
use rbm_lyapunov::geometry::{Domain, Vec2};
use rbm_lyapunov::lyapunov::{BackendSettings, QuadConfig, SweepSpec};
use serde::de::{self, MapAccess, Visitor};
use serde::{Deserialize, Deserializer, Serialize};

use crate::CliError;

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default, deserialize_with = "domain_field", skip_serializing_if = "Option::is_none")]
    pub domain: Option<DomainSpec>,
    #[serde(default)]
    pub hm: BackendSettings,
    #[serde(default)]
    pub quad: QuadConfig,
    #[serde(default)]
    pub sim: SimSection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepSpec>,
    #[serde(default)]
    pub transform: TransformSection,
    #[serde(default)]
    pub output: OutputSection,
}

/// Seeds as a count `n` (meaning `1..=n`) or as an explicit list.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Seeds {
    Count(u64),
    List(Vec<u64>),
}

impl Seeds {
    pub fn resolve(&self) -> Vec<u64> {
        match self {
            Self::Count(n) => (1..=*n).collect(),
            Self::List(v) => v.clone(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimSection {
    pub h: f64,
    #[serde(rename = "T")]
    pub t_max: f64,
    /// Start of the first walker; chosen from the domain when absent.
    pub x0: Option<[f64; 2]>,
    /// Start of the second walker; `x0 + (0, 0.01 feature size)` when absent.
    pub y0: Option<[f64; 2]>,
    pub seeds: Seeds,
    pub stride: usize,
    pub d_exc: Option<f64>,
    /// Fraction of the horizon dropped before the slope fit.
    pub burn_in: f64,
}

impl Default for SimSection {
    fn default() -> Self {
        Self { h: 1e-4, t_max: 50.0, x0: None, y0: None, seeds: Seeds::Count(1), stride: 100, d_exc: None, burn_in: 0.1 }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TransformSection {
    /// CSV with columns `t,x,y`.
    pub input: Option<PathBuf>,
    /// Largest substep; defaults to the smallest time step of the input.
    pub h_max: Option<f64>,
    /// Reflect in the upper half-plane instead of `domain`.
    pub half_plane: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputSection {
    pub dir: PathBuf,
    pub formats: Vec<Format>,
}

impl Default for OutputSection {
    fn default() -> Self {
        Self { dir: PathBuf::from("out"), formats: vec![Format::Csv, Format::Json] }
    }
}

impl OutputSection {
    pub fn wants(&self, f: Format) -> bool {
        self.formats.contains(&f)
    }
}

fn domain_field<'de, D: Deserializer<'de>>(d: D) -> Result<Option<DomainSpec>, D::Error> {
    struct V;
    impl<'de> Visitor<'de> for V {
        type Value = Option<DomainSpec>;

        fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
            f.write_str("a domain shorthand like \"annulus:0.5,1\" or a domain table")
        }

        fn visit_str<E: de::Error>(self, s: &str) -> Result<Self::Value, E> {
            DomainSpec::parse_shorthand(s).map(Some).map_err(E::custom)
        }

        fn visit_map<A: MapAccess<'de>>(self, map: A) -> Result<Self::Value, A::Error> {
            DomainSpec::deserialize(de::value::MapAccessDeserializer::new(map)).map(Some)
        }

        fn visit_unit<E: de::Error>(self) -> Result<Self::Value, E> {
            Ok(None)
        }
    }
    d.deserialize_any(V)
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))
    }

    /// Read a TOML config, or the `config` of a run manifest when the file
    /// ends in `.json`. A manifest must come from the same subcommand.
    pub fn load(path: &Path, command: &str) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        if path.extension().is_some_and(|e| e == "json") {
            let mut v: serde_json::Value = serde_json::from_str(&text)
                .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
            match v.get("command").and_then(|c| c.as_str()) {
                Some(c) if c == command => {}
                Some(c) => return Err(CliError::Config(format!("manifest was written by `{c}`, not `{command}`"))),
                None => return Err(CliError::Config(format!("{}: not a run manifest", path.display()))),
            }
            let cfg = v.get_mut("config").map(serde_json::Value::take).unwrap_or_default();
            serde_json::from_value(cfg).map_err(|e| CliError::Config(format!("{}: config: {e}", path.display())))
        } else {
            toml::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
        }
    }

    pub fn domain_spec(&self, command: &str) -> Result<&DomainSpec, CliError> {
        self.domain
            .as_ref()
            .ok_or_else(|| CliError::Config(format!("`{command}` needs a domain (--domain or `domain` in the config)")))
    }
}

/// Default start: the point of largest clearance on the segment from the
/// outer curve's centroid to its `u = 0` point.
pub fn default_start(domain: &Domain) -> Result<Vec2, CliError> {
    let outer = &domain.curves()[0];
    let (c, e) = (outer.centroid(), outer.position(0.0));
    let mut best = (f64::NEG_INFINITY, c);
    for k in 0..=64 {
        let p = c + (e - c) * (k as f64 / 64.0);
        let (s, _) = domain.signed_distance(p)?;
        if s > best.0 {
            best = (s, p);
        }
    }
    if best.0 <= 0.0 {
        return Err(CliError::Config("no interior start found, set sim.x0".into()));
    }
    Ok(best.1)
}
