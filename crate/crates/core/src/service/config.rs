use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{ServiceError, StudyConfig};

/// Service settings: the study parameters plus where to listen and store.
///
/// Read from a TOML file; `GENSTUDY_K`, `GENSTUDY_BATCH_SIZES` (comma list),
/// `GENSTUDY_TIMEOUT_MINUTES` and `GENSTUDY_BIND` override the file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ServiceConfig {
    pub bind: String,
    /// Append-only rating log; `None` keeps everything in memory.
    pub log_path: Option<PathBuf>,
    /// Dataset JSON produced by `build-dataset`.
    pub dataset_path: Option<PathBuf>,
    pub study: StudyConfig,
}

impl Default for ServiceConfig {
    fn default() -> Self {
        Self {
            bind: "127.0.0.1:8080".into(),
            log_path: None,
            dataset_path: None,
            study: StudyConfig::default(),
        }
    }
}

impl ServiceConfig {
    pub fn from_toml(text: &str) -> Result<Self, ServiceError> {
        toml::from_str(text).map_err(|e| ServiceError::Config(e.to_string()))
    }

    /// Loads `path` (or defaults when `None`) and applies environment overrides.
    pub fn load(path: Option<&Path>) -> Result<Self, ServiceError> {
        let mut config = match path {
            Some(p) => Self::from_toml(
                &std::fs::read_to_string(p)
                    .map_err(|e| ServiceError::Config(format!("{}: {e}", p.display())))?,
            )?,
            None => Self::default(),
        };
        config.apply_overrides(|key| std::env::var(key).ok())?;
        config.study.validate().map_err(ServiceError::Config)?;
        Ok(config)
    }

    pub fn apply_overrides(
        &mut self,
        var: impl Fn(&str) -> Option<String>,
    ) -> Result<(), ServiceError> {
        fn parse<T: std::str::FromStr>(key: &str, raw: &str) -> Result<T, ServiceError> {
            raw.trim()
                .parse()
                .map_err(|_| ServiceError::Config(format!("{key}: cannot parse `{raw}`")))
        }
        if let Some(v) = var("GENSTUDY_K") {
            self.study.k = parse("GENSTUDY_K", &v)?;
        }
        if let Some(v) = var("GENSTUDY_BATCH_SIZES") {
            self.study.batch_sizes = v
                .split(',')
                .map(|s| parse("GENSTUDY_BATCH_SIZES", s))
                .collect::<Result<_, _>>()?;
        }
        if let Some(v) = var("GENSTUDY_TIMEOUT_MINUTES") {
            self.study.abandon_timeout_minutes = parse("GENSTUDY_TIMEOUT_MINUTES", &v)?;
        }
        if let Some(v) = var("GENSTUDY_BIND") {
            self.bind = v;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashMap;

    #[test]
    fn file_then_env() {
        let mut c = ServiceConfig::from_toml(
            r#"
            bind = "0.0.0.0:9000"
            [study]
            k = 5
            batch_sizes = [4]
            "#,
        )
        .unwrap();
        assert_eq!(c.study.k, 5);
        assert_eq!(c.study.abandon_timeout_minutes, 60);
        let env: HashMap<&str, &str> =
            [("GENSTUDY_K", "7"), ("GENSTUDY_BATCH_SIZES", "6, 8")].into();
        c.apply_overrides(|k| env.get(k).map(|v| v.to_string()))
            .unwrap();
        assert_eq!(c.study.k, 7);
        assert_eq!(c.study.batch_sizes, vec![6, 8]);
        assert_eq!(c.bind, "0.0.0.0:9000");
    }

    #[test]
    fn bad_override() {
        let mut c = ServiceConfig::default();
        let err = c
            .apply_overrides(|k| (k == "GENSTUDY_K").then(|| "many".to_string()))
            .unwrap_err();
        assert!(err.to_string().contains("GENSTUDY_K"));
    }
}
