//! Layered settings: flags > config file (`--config`, else `QCURV_CONFIG`) > defaults.

use std::fs;
use std::path::{Path, PathBuf};

use qcurv_core::verify::DEFAULT_SEED;
use qcurv_core::{IntegratorControlsF64, VolumeSettingsF64};
use serde::Deserialize;

pub const CONFIG_ENV: &str = "QCURV_CONFIG";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

/// Every key optional; unknown keys are rejected.
#[derive(Debug, Default, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub rel_tol: Option<f64>,
    pub abs_tol: Option<f64>,
    pub h_init: Option<f64>,
    pub h_min: Option<f64>,
    pub h_max: Option<f64>,
    pub u_blow: Option<f64>,
    pub u_underflow: Option<f64>,
    pub r_max: Option<f64>,
    pub vol_tol: Option<f64>,
    pub out_dir: Option<PathBuf>,
    pub format: Option<Format>,
    pub seed: Option<u64>,
}

impl ConfigFile {
    pub fn load(path: &Path) -> Result<Self, String> {
        let text = fs::read_to_string(path).map_err(|e| format!("cannot read config {}: {e}", path.display()))?;
        serde_json::from_str(&text).map_err(|e| format!("invalid config {}: {e}", path.display()))
    }
}

/// Flag-level overrides.
#[derive(Debug, Default, Clone)]
pub struct Overrides {
    pub rel_tol: Option<f64>,
    pub abs_tol: Option<f64>,
    pub r_max: Option<f64>,
    pub vol_tol: Option<f64>,
    pub out_dir: Option<PathBuf>,
    pub format: Option<Format>,
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CliConfig {
    pub settings: VolumeSettingsF64,
    pub out_dir: PathBuf,
    pub format: Format,
    pub seed: u64,
}

impl Default for CliConfig {
    fn default() -> Self {
        Self {
            settings: VolumeSettingsF64::default(),
            out_dir: PathBuf::from("."),
            format: Format::Csv,
            seed: DEFAULT_SEED,
        }
    }
}

impl CliConfig {
    /// Resolves the config file from `--config` or the environment, then layers flags on top.
    pub fn resolve(config_flag: Option<&Path>, flags: &Overrides) -> Result<Self, String> {
        let file = match config_flag {
            Some(p) => Some(ConfigFile::load(p)?),
            None => match std::env::var_os(CONFIG_ENV) {
                Some(p) if !p.is_empty() => Some(ConfigFile::load(Path::new(&p))?),
                _ => None,
            },
        };
        let mut cfg = Self::default();
        if let Some(f) = file {
            cfg.apply_file(&f);
        }
        cfg.apply_flags(flags);
        cfg.validate()?;
        Ok(cfg)
    }

    fn apply_file(&mut self, f: &ConfigFile) {
        let c: &mut IntegratorControlsF64 = &mut self.settings.controls;
        let set = |dst: &mut f64, v: Option<f64>| {
            if let Some(v) = v {
                *dst = v;
            }
        };
        set(&mut c.rel_tol, f.rel_tol);
        set(&mut c.abs_tol, f.abs_tol);
        set(&mut c.h_init, f.h_init);
        set(&mut c.h_min, f.h_min);
        set(&mut c.h_max, f.h_max);
        set(&mut c.u_blow, f.u_blow);
        set(&mut c.u_underflow, f.u_underflow);
        set(&mut c.r_max, f.r_max);
        set(&mut self.settings.vol_tol, f.vol_tol);
        if let Some(d) = &f.out_dir {
            self.out_dir = d.clone();
        }
        if let Some(fmt) = f.format {
            self.format = fmt;
        }
        if let Some(s) = f.seed {
            self.seed = s;
        }
    }

    fn apply_flags(&mut self, o: &Overrides) {
        let c = &mut self.settings.controls;
        if let Some(v) = o.rel_tol {
            c.rel_tol = v;
        }
        if let Some(v) = o.abs_tol {
            c.abs_tol = v;
        }
        if let Some(v) = o.r_max {
            c.r_max = v;
        }
        if let Some(v) = o.vol_tol {
            self.settings.vol_tol = v;
        }
        if let Some(d) = &o.out_dir {
            self.out_dir = d.clone();
        }
        if let Some(f) = o.format {
            self.format = f;
        }
        if let Some(s) = o.seed {
            self.seed = s;
        }
    }

    fn validate(&self) -> Result<(), String> {
        self.settings.controls.validate().map_err(|e| e.to_string())?;
        let v = self.settings.vol_tol;
        if !(v.is_finite() && v > 0.0) {
            return Err(format!("vol_tol must be positive, got {v}"));
        }
        Ok(())
    }

    /// `explicit` if given, else `default_name` inside the output directory (created on demand).
    pub fn output_path(&self, explicit: Option<&Path>, default_name: &str) -> Result<PathBuf, String> {
        let path = match explicit {
            Some(p) => p.to_path_buf(),
            None => self.out_dir.join(default_name),
        };
        if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
            fs::create_dir_all(parent).map_err(|e| format!("cannot create {}: {e}", parent.display()))?;
        }
        Ok(path)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flags_beat_file_beat_defaults() {
        let file: ConfigFile = serde_json::from_str(r#"{"rel_tol":1e-8,"vol_tol":1e-4,"seed":3}"#).unwrap();
        let mut cfg = CliConfig::default();
        cfg.apply_file(&file);
        assert_eq!(cfg.settings.controls.rel_tol, 1e-8);
        assert_eq!(cfg.settings.vol_tol, 1e-4);
        cfg.apply_flags(&Overrides {
            vol_tol: Some(1e-7),
            ..Default::default()
        });
        assert_eq!(cfg.settings.vol_tol, 1e-7);
        assert_eq!(cfg.seed, 3);
        assert_eq!(cfg.settings.controls.abs_tol, 1e-12);
    }

    #[test]
    fn unknown_keys_rejected() {
        assert!(serde_json::from_str::<ConfigFile>(r#"{"reltol":1}"#).is_err());
    }

    #[test]
    fn bad_tolerance_rejected() {
        let mut cfg = CliConfig::default();
        cfg.settings.vol_tol = -1.0;
        assert!(cfg.validate().is_err());
    }
}
