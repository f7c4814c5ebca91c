use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use beatdesign_core::calendar::{parse_offset, YearMonth};
use beatdesign_core::forecast::{FactorExtension, FitOptions, RhoGrid};
use beatdesign_core::geo::GridKind;
use beatdesign_core::ingest::calls::CategoryFilter;
use beatdesign_core::interp::FactorMode;
use beatdesign_core::mip::MipMode;
use beatdesign_core::optimize::AnnealConfig;
use beatdesign_core::workload::TauMode;
use serde::{Deserialize, Serialize};

use crate::error::CliError;

/// Input files; relative paths resolve against the config file's directory.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Paths {
    pub boundary: Option<PathBuf>,
    pub calls: Option<PathBuf>,
    pub census_blocks: Option<PathBuf>,
    pub census_table: Option<PathBuf>,
    /// Starting design for the greedy split; one beat when absent.
    pub existing_design: Option<PathBuf>,
    pub out_dir: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AtomsConfig {
    /// Cell side in miles.
    pub side_length: f64,
    pub grid_kind: String,
}

impl Default for AtomsConfig {
    fn default() -> Self {
        AtomsConfig {
            side_length: 0.345,
            grid_kind: "square-rook".into(),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InterpConfig {
    pub all_extensive: bool,
    pub modes: BTreeMap<String, FactorMode>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WorkloadConfig {
    pub tau_mode: TauMode,
    /// Offset for timestamps without one, e.g. "-05:00".
    pub utc_offset: Option<String>,
    pub categories: CategoryFilter,
    /// Panel window; defaults to the months spanned by the calls.
    pub first_month: Option<YearMonth>,
    pub n_months: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ForecastConfig {
    /// Census lag order.
    pub p: usize,
    pub rho_grid: RhoGrid,
    pub refine: bool,
    pub drop_aliased: bool,
    pub horizon: usize,
    pub extension: FactorExtension,
}

impl Default for ForecastConfig {
    fn default() -> Self {
        let fit = FitOptions::default();
        ForecastConfig {
            p: fit.p,
            rho_grid: fit.rho_grid,
            refine: fit.refine,
            drop_aliased: fit.drop_aliased,
            horizon: 12,
            extension: FactorExtension::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DesignConfig {
    pub k_target: usize,
    pub workload_weighted: bool,
}

impl ForecastConfig {
    pub fn fit_options(&self) -> FitOptions {
        FitOptions {
            p: self.p,
            rho_grid: self.rho_grid,
            refine: self.refine,
            drop_aliased: self.drop_aliased,
        }
    }
}

impl Default for DesignConfig {
    fn default() -> Self {
        DesignConfig {
            k_target: 15,
            workload_weighted: false,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MipConfig {
    pub mode: MipMode,
    pub q: Option<usize>,
    pub dense_cap: Option<usize>,
    /// Export the anneal compactness caps as MIP rows.
    pub compactness: bool,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    /// Required: every stochastic stage derives its stream from it.
    pub seed: Option<u64>,
    #[serde(default)]
    pub paths: Paths,
    #[serde(default)]
    pub atoms: AtomsConfig,
    #[serde(default)]
    pub interp: InterpConfig,
    #[serde(default)]
    pub workload: WorkloadConfig,
    #[serde(default)]
    pub forecast: ForecastConfig,
    #[serde(default)]
    pub design: DesignConfig,
    /// Its own `seed` field is ignored in favour of the top-level seed.
    #[serde(default)]
    pub anneal: AnnealConfig,
    #[serde(default)]
    pub mip: MipConfig,
}

impl PipelineConfig {
    /// Parses TOML, or JSON when the file ends in `.json`, and resolves
    /// relative paths against the file's directory.
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::new("config", "io", format!("{}: {e}", path.display())).with("path", path))?;
        let is_json = path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json"));
        let mut cfg = Self::parse(&text, is_json)
            .map_err(|m| CliError::new("config", "parse", m).with("path", path))?;
        let base = path.parent().unwrap_or(Path::new("."));
        cfg.resolve(base);
        Ok(cfg)
    }

    pub fn parse(text: &str, json: bool) -> Result<Self, String> {
        if json {
            serde_json::from_str(text).map_err(|e| e.to_string())
        } else {
            toml::from_str(text).map_err(|e| e.to_string())
        }
    }

    pub fn resolve(&mut self, base: &Path) {
        let p = &mut self.paths;
        for slot in [
            &mut p.boundary,
            &mut p.calls,
            &mut p.census_blocks,
            &mut p.census_table,
            &mut p.existing_design,
            &mut p.out_dir,
        ] {
            if let Some(x) = slot.as_mut() {
                if x.is_relative() {
                    *x = base.join(&*x);
                }
            }
        }
    }

    /// Every violation, not just the first.
    pub fn violations(&self) -> Vec<String> {
        let mut v = Vec::new();
        if self.seed.is_none() {
            v.push("seed is required".to_string());
        }
        let p = &self.paths;
        for (name, path) in [
            ("paths.boundary", &p.boundary),
            ("paths.calls", &p.calls),
            ("paths.census_blocks", &p.census_blocks),
            ("paths.census_table", &p.census_table),
            ("paths.existing_design", &p.existing_design),
        ] {
            if let Some(path) = path {
                if !path.is_file() {
                    v.push(format!("{name}: {} does not exist", path.display()));
                }
            }
        }
        if p.out_dir.is_none() {
            v.push("paths.out_dir is required".into());
        }
        let a = &self.atoms;
        if !(a.side_length > 0.0 && a.side_length.is_finite()) {
            v.push(format!("atoms.side_length must be positive, got {}", a.side_length));
        }
        if a.grid_kind.parse::<GridKind>().is_err() {
            v.push(format!(
                "atoms.grid_kind must be square-rook, square-queen or hex, got {:?}",
                a.grid_kind
            ));
        }
        if let Some(o) = &self.workload.utc_offset {
            if parse_offset(o).is_err() {
                v.push(format!("workload.utc_offset: cannot parse {o:?}"));
            }
        }
        if self.workload.n_months == Some(0) {
            v.push("workload.n_months must be at least 1".into());
        }
        if self.workload.first_month.is_some() != self.workload.n_months.is_some() {
            v.push("workload.first_month and workload.n_months must be given together".into());
        }
        let f = &self.forecast;
        if f.p == 0 {
            v.push("forecast.p must be at least 1".into());
        }
        v.extend(f.rho_grid.validate().into_iter().map(|m| format!("forecast: {m}")));
        if f.horizon == 0 {
            v.push("forecast.horizon must be at least 1".into());
        }
        if self.design.k_target == 0 {
            v.push("design.k_target must be at least 1".into());
        }
        v.extend(self.anneal.validate().into_iter().map(|m| format!("anneal: {m}")));
        if self.mip.q == Some(0) {
            v.push("mip.q must be at least 1".into());
        }
        v
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let v = self.violations();
        if v.is_empty() {
            Ok(())
        } else {
            Err(CliError::new("config", "invalid_config", format!("{} problem(s) in config", v.len()))
                .with("violations", v))
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed.expect("validated config has a seed")
    }

    pub fn out_dir(&self) -> &Path {
        self.paths.out_dir.as_deref().expect("validated config has an output directory")
    }

    pub fn grid_kind(&self) -> GridKind {
        self.atoms.grid_kind.parse().unwrap_or_default()
    }

    pub fn anneal_config(&self) -> AnnealConfig {
        AnnealConfig {
            seed: self.seed(),
            ..self.anneal
        }
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }
}
