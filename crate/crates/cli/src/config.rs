//! TOML run configuration shared by every subcommand.
//!
//! All sections are optional; every defaulted field is echoed explicitly in
//! the emitted reports.  The coefficient matrix comes either from a builtin
//! `[family]` or from explicit `[coefficients]` entries — never both.

use poisson_dn::coeff::{builtin, CoeffConfig, CoefficientField, Family};
use poisson_dn::verify::VerifyConfig;
use poisson_dn::{CoreError, Result};
use serde::Deserialize;
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

const TAU: f64 = std::f64::consts::TAU;

/// `[grid]`: the torus and strip discretization.
#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    /// Horizontal dimension (1 or 2).
    #[serde(default = "default_d")]
    pub d: usize,
    /// Nodes per axis.
    #[serde(default = "default_n")]
    pub n: usize,
    /// Torus period.
    #[serde(default = "default_l")]
    pub l: f64,
    /// Strip depth (default `4 l`).
    pub t: Option<f64>,
    /// Strip levels.
    #[serde(default = "default_nt")]
    pub nt: usize,
}

fn default_d() -> usize {
    1
}
fn default_n() -> usize {
    256
}
fn default_l() -> f64 {
    TAU
}
fn default_nt() -> usize {
    1024
}

impl Default for GridSection {
    fn default() -> Self {
        Self {
            d: default_d(),
            n: default_n(),
            l: default_l(),
            t: None,
            nt: default_nt(),
        }
    }
}

/// `[run]`: seed, default check selection, and output directory.
#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSection {
    #[serde(default = "default_seed")]
    pub seed: u64,
    /// Suites `verify` runs when `--suite` is not given.
    #[serde(default = "default_suites")]
    pub suites: Vec<String>,
    /// Output directory; falls back to `$PDN_OUT_DIR`, then `.`.
    pub out_dir: Option<PathBuf>,
}

fn default_seed() -> u64 {
    117
}
fn default_suites() -> Vec<String> {
    vec!["all".into()]
}

impl Default for RunSection {
    fn default() -> Self {
        Self {
            seed: default_seed(),
            suites: default_suites(),
            out_dir: None,
        }
    }
}

/// `[verify]`: scale profile for the suite's secondary knobs (ensemble
/// sizes, the wide kernel torus, the dense semigroup grid).
#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifySection {
    /// `"desk"` (the acceptance surface) or `"reduced"` (fast smoke scale).
    #[serde(default = "default_profile")]
    pub profile: String,
    /// Run the gated d = 2 cross-checks (default: the profile's choice).
    pub d2: Option<bool>,
}

fn default_profile() -> String {
    "desk".into()
}

impl Default for VerifySection {
    fn default() -> Self {
        Self {
            profile: default_profile(),
            d2: None,
        }
    }
}

/// `[family]`: a builtin coefficient family.
#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FamilySection {
    /// identity | constant | block | hermitian | lipschitz.
    pub name: String,
    /// Seed for the lipschitz family (ignored by the others).
    #[serde(default = "default_family_seed")]
    pub seed: u64,
}

fn default_family_seed() -> u64 {
    11
}

/// Top-level run configuration.
#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub grid: GridSection,
    #[serde(default)]
    pub run: RunSection,
    #[serde(default)]
    pub verify: VerifySection,
    pub family: Option<FamilySection>,
    pub coefficients: Option<CoeffConfig>,
    /// Absolute per-check tolerance overrides for `verify`, keyed by check
    /// name.  Overrides may only tighten the pinned thresholds.
    #[serde(default)]
    pub tolerances: BTreeMap<String, f64>,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CoreError::Config(format!("{}: {e}", path.display())))?;
        let cfg: RunConfig = toml::from_str(&text)
            .map_err(|e| CoreError::Config(format!("{}: {e}", path.display())))?;
        cfg.check()?;
        Ok(cfg)
    }

    fn check(&self) -> Result<()> {
        if self.family.is_some() && self.coefficients.is_some() {
            return Err(CoreError::Config(
                "give either [family] or [coefficients], not both".into(),
            ));
        }
        if let Some(c) = &self.coefficients {
            if c.d != self.grid.d {
                return Err(CoreError::Config(format!(
                    "coefficients.d = {} disagrees with grid.d = {}",
                    c.d, self.grid.d
                )));
            }
        }
        if !(self.grid.l > 0.0) || !(self.tmax() > 0.0) {
            return Err(CoreError::Config(
                "grid.l and grid.t must be positive".into(),
            ));
        }
        Ok(())
    }

    /// Strip depth (`grid.t`, default `4 l`).
    pub fn tmax(&self) -> f64 {
        self.grid.t.unwrap_or(4.0 * self.grid.l)
    }

    /// Label of the configured coefficient matrix.
    pub fn family_label(&self) -> String {
        match (&self.family, &self.coefficients) {
            (Some(f), _) => f.name.clone(),
            (None, Some(_)) => "custom".into(),
            (None, None) => "constant".into(),
        }
    }

    /// Build the configured coefficient field (default: the constant
    /// running example).
    pub fn field(&self) -> Result<CoefficientField> {
        match (&self.family, &self.coefficients) {
            (Some(f), _) => builtin(
                self.grid.d,
                Family::parse(&f.name, f.seed)?,
                self.grid.l,
            ),
            (None, Some(c)) => c.build(self.grid.l),
            (None, None) => builtin(self.grid.d, Family::Constant, self.grid.l),
        }
    }

    /// Resolved output directory: config, then `$PDN_OUT_DIR`, then `.`.
    pub fn out_dir(&self) -> PathBuf {
        self.run
            .out_dir
            .clone()
            .or_else(|| std::env::var_os("PDN_OUT_DIR").map(PathBuf::from))
            .unwrap_or_else(|| PathBuf::from("."))
    }

    /// Map this configuration onto the verification suite's knobs.  The
    /// profile fixes the secondary scales; `[grid]` and `[run]` override
    /// the primary d = 1 lane.
    pub fn verify_config(&self, refine: bool) -> Result<VerifyConfig> {
        if self.grid.d != 1 {
            return Err(CoreError::Config(
                "the verification suites run the d = 1 primary lane; the d = 2 \
                 cross-checks are controlled by verify.d2"
                    .into(),
            ));
        }
        let mut v = match self.verify.profile.as_str() {
            "desk" => VerifyConfig::desk(),
            "reduced" => VerifyConfig::reduced(),
            other => {
                return Err(CoreError::Config(format!(
                    "unknown verify.profile `{other}` (expected desk | reduced)"
                )))
            }
        };
        v.l = self.grid.l;
        v.n1 = self.grid.n;
        v.nt1 = self.grid.nt;
        v.t_factor = self.tmax() / self.grid.l;
        v.seed = self.run.seed;
        v.refine = refine;
        if let Some(d2) = self.verify.d2 {
            v.run_d2 = d2;
        }
        Ok(v)
    }

    /// Echo of every effective field (defaults included) for report
    /// provenance.
    pub fn params(&self) -> BTreeMap<String, String> {
        let mut p = BTreeMap::new();
        p.insert("d".into(), self.grid.d.to_string());
        p.insert("n".into(), self.grid.n.to_string());
        p.insert("nt".into(), self.grid.nt.to_string());
        p.insert("l".into(), format!("{}", self.grid.l));
        p.insert("tmax".into(), format!("{}", self.tmax()));
        p.insert("seed".into(), self.run.seed.to_string());
        p.insert("family".into(), self.family_label());
        if let Some(f) = &self.family {
            if f.name == "lipschitz" {
                p.insert("family_seed".into(), f.seed.to_string());
            }
        }
        p
    }
}
