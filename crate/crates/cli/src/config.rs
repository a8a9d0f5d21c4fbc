//! Config file schema and symbol resolution shared by the subcommands.

use std::path::{Path, PathBuf};

use clap::Args;
use gmhd_core::symbols::Tabulated;
use gmhd_core::SymbolSpec;
use serde::Deserialize;
use serde_json::{json, Value};

use crate::CliError;

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    #[serde(default)]
    pub grid: GridSection,
    #[serde(default)]
    pub symbol: SymbolSection,
    #[serde(default)]
    pub time: TimeSection,
    #[serde(default)]
    pub diagnostics: DiagnosticsSection,
    #[serde(default)]
    pub initial: InitialSection,
    #[serde(default)]
    pub admissibility: AdmissibilitySection,
    #[serde(skip)]
    pub base_dir: PathBuf,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    pub n: Option<usize>,
    pub box_length: Option<f64>,
}

#[derive(Debug, Default, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SymbolSection {
    pub family: Option<String>,
    pub mu: Option<f64>,
    pub mu4: Option<f64>,
    pub c: Option<f64>,
    pub knots: Option<PathBuf>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum DtSetting {
    Fixed(f64),
    Named(String),
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeSection {
    pub t_end: Option<f64>,
    pub dt: Option<DtSetting>,
    pub cfl: Option<f64>,
    pub max_steps: Option<u64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiagnosticsSection {
    pub stride: Option<usize>,
    pub hs_index: Option<f64>,
    pub filter: Option<bool>,
    pub nonlinear: Option<bool>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialSection {
    pub preset: Option<String>,
    pub seed: Option<u64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AdmissibilitySection {
    pub horizons: Option<Vec<f64>>,
    pub tol: Option<f64>,
}

impl FileConfig {
    pub fn load(path: Option<&Path>) -> Result<Self, CliError> {
        let Some(path) = path else {
            return Ok(Self::default());
        };
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::io(format!("cannot read config {}: {e}", path.display())))?;
        let mut cfg: FileConfig = toml::from_str(&text)
            .map_err(|e| CliError::usage(format!("invalid config {}: {e}", path.display())))?;
        cfg.base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok(cfg)
    }
}

/// Symbol selection flags; any flag given overrides the config file.
#[derive(Debug, Default, Clone, Args)]
pub struct SymbolArgs {
    /// power, logpower, powerlog, logloglog, constant or tabulated
    #[arg(long)]
    pub family: Option<String>,
    /// Family exponent (mu1, mu2, mu3 or mu5)
    #[arg(long)]
    pub mu: Option<f64>,
    /// Logarithmic exponent of the powerlog family
    #[arg(long)]
    pub mu4: Option<f64>,
    /// Constant symbol value
    #[arg(long)]
    pub c: Option<f64>,
    /// CSV file with columns r,g for the tabulated family
    #[arg(long)]
    pub knots: Option<PathBuf>,
}

impl SymbolArgs {
    pub fn resolve(&self, file: &FileConfig) -> Result<SymbolSpec, CliError> {
        let mut s = file.symbol.clone();
        if let Some(k) = &mut s.knots {
            *k = file.base_dir.join(&*k);
        }
        if self.family.is_some() {
            s = SymbolSection::default();
        }
        s.family = self.family.clone().or(s.family);
        s.mu = self.mu.or(s.mu);
        s.mu4 = self.mu4.or(s.mu4);
        s.c = self.c.or(s.c);
        s.knots = self.knots.clone().or(s.knots);
        let family = s
            .family
            .ok_or_else(|| CliError::usage("missing --family (or [symbol] family in the config)"))?;
        let need = |v: Option<f64>, flag: &str| {
            v.ok_or_else(|| CliError::usage(format!("family {family} needs --{flag}")))
        };
        let spec = match family.as_str() {
            "power" => SymbolSpec::Power { mu1: need(s.mu, "mu")? },
            "logpower" => SymbolSpec::LogPower { mu2: need(s.mu, "mu")? },
            "powerlog" => SymbolSpec::PowerLog {
                mu3: need(s.mu, "mu")?,
                mu4: need(s.mu4, "mu4")?,
            },
            "logloglog" => SymbolSpec::LogLogLog { mu5: need(s.mu, "mu")? },
            "constant" => SymbolSpec::Constant { c: need(s.c, "c")? },
            "tabulated" => {
                let path = s
                    .knots
                    .ok_or_else(|| CliError::usage("family tabulated needs --knots"))?;
                SymbolSpec::Tabulated(Tabulated::from_csv_path(&path)?)
            }
            other => return Err(CliError::usage(format!("unknown symbol family '{other}'"))),
        };
        spec.validate()?;
        Ok(spec)
    }
}

/// Fully resolved symbol as recorded in manifests.
pub fn symbol_json(spec: &SymbolSpec) -> Value {
    match spec {
        SymbolSpec::Power { mu1 } => json!({"family": "power", "mu1": mu1}),
        SymbolSpec::LogPower { mu2 } => json!({"family": "logpower", "mu2": mu2}),
        SymbolSpec::PowerLog { mu3, mu4 } => json!({"family": "powerlog", "mu3": mu3, "mu4": mu4}),
        SymbolSpec::LogLogLog { mu5 } => json!({"family": "logloglog", "mu5": mu5}),
        SymbolSpec::Constant { c } => json!({"family": "constant", "c": c}),
        SymbolSpec::Tabulated(t) => json!({"family": "tabulated", "knots": t.knots()}),
    }
}
