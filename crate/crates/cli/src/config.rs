//! Flat key-value config files. Keys mirror the flag names; any flag given
//! on the command line overrides the config value.

use serde::Deserialize;

use crate::AppError;

#[derive(Debug, Default, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub n1: Option<u64>,
    pub n2: Option<u64>,
    pub r1: Option<u64>,
    pub r2: Option<u64>,
    pub t1: Option<f64>,
    pub t2: Option<f64>,
    pub p1: Option<f64>,
    pub p2: Option<f64>,
    pub alt_p1: Option<f64>,
    pub alt_p2: Option<f64>,
    pub total_n: Option<u64>,
    pub alpha: Option<f64>,
    pub budget_mode: Option<String>,
    pub criterion: Option<String>,
    pub alpha_window_low: Option<f64>,
    pub alpha_window_high: Option<f64>,
    pub early_stop_window_low: Option<f64>,
    pub early_stop_window_high: Option<f64>,
    pub stage1_cap: Option<bool>,
    pub kind: Option<String>,
    pub grid_step: Option<f64>,
    pub replicates: Option<u64>,
    pub seed: Option<u64>,
    pub output: Option<String>,
}

impl FileConfig {
    pub fn load(path: Option<&std::path::Path>) -> Result<Self, AppError> {
        let Some(path) = path else {
            return Ok(FileConfig::default());
        };
        let text = std::fs::read_to_string(path)
            .map_err(|e| AppError::Config(format!("cannot read config {}: {e}", path.display())))?;
        toml::from_str(&text)
            .map_err(|e| AppError::Config(format!("bad config {}: {e}", path.display())))
    }
}

/// Resolves one value from flag, then config, then an optional default.
pub fn resolve<T: Copy>(
    flag: Option<T>,
    config: Option<T>,
    default: Option<T>,
    name: &str,
) -> Result<T, AppError> {
    flag.or(config).or(default).ok_or_else(|| {
        AppError::Config(format!("{name} is required (flag --{name} or config key)"))
    })
}
