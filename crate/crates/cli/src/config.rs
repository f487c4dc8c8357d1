//! Effective run configuration: flags > environment > file > defaults.

use std::path::Path;

use schemgen::agent::{AgentConfig, BackendKind};
use serde::Serialize;
use thiserror::Error;

pub const ENV_BACKEND: &str = "SCHEMGEN_BACKEND";
pub const ENV_SEED: &str = "SCHEMGEN_SEED";
pub const ENV_MAX_PLACE_ITER: &str = "SCHEMGEN_MAX_PLACE_ITER";
pub const ENV_MAX_WIRE_ITER: &str = "SCHEMGEN_MAX_WIRE_ITER";
pub const ENV_HISTORY_WINDOW: &str = "SCHEMGEN_HISTORY_WINDOW";
pub const ENV_URL: &str = "SCHEMGEN_BACKEND_URL";
pub const ENV_MODEL: &str = "SCHEMGEN_MODEL";
pub const ENV_TIMEOUT: &str = "SCHEMGEN_TIMEOUT_SECS";

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Read {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("config {path}: {message}")]
    Syntax { path: String, message: String },
    #[error("unknown config key `{0}`")]
    UnknownKey(String),
    #[error("config key `{key}`: expected {expected}")]
    Type { key: String, expected: &'static str },
    #[error("unknown backend `{0}` (expected mock or http)")]
    Backend(String),
    #[error("the http backend needs a url")]
    MissingUrl,
}

/// One layer of settings; `None` defers to the layer below.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Layer {
    pub backend: Option<String>,
    pub url: Option<String>,
    pub model: Option<String>,
    pub timeout_secs: Option<u64>,
    pub place_iter: Option<usize>,
    pub wire_iter: Option<usize>,
    pub history_window: Option<usize>,
    pub seed: Option<u64>,
}

impl Layer {
    /// Fill unset fields from `lower`.
    pub fn over(self, lower: Layer) -> Layer {
        Layer {
            backend: self.backend.or(lower.backend),
            url: self.url.or(lower.url),
            model: self.model.or(lower.model),
            timeout_secs: self.timeout_secs.or(lower.timeout_secs),
            place_iter: self.place_iter.or(lower.place_iter),
            wire_iter: self.wire_iter.or(lower.wire_iter),
            history_window: self.history_window.or(lower.history_window),
            seed: self.seed.or(lower.seed),
        }
    }
}

fn int(key: &str, v: &toml::Value) -> Result<u64, ConfigError> {
    v.as_integer()
        .and_then(|i| u64::try_from(i).ok())
        .ok_or(ConfigError::Type {
            key: key.to_string(),
            expected: "a non-negative integer",
        })
}

fn string(key: &str, v: &toml::Value) -> Result<String, ConfigError> {
    v.as_str().map(str::to_string).ok_or(ConfigError::Type {
        key: key.to_string(),
        expected: "a string",
    })
}

fn table<'a>(key: &str, v: &'a toml::Value) -> Result<&'a toml::Table, ConfigError> {
    v.as_table().ok_or(ConfigError::Type {
        key: key.to_string(),
        expected: "a table",
    })
}

/// Parse config text. Every key is checked; the first unknown one is
/// reported by its dotted path.
pub fn parse_config(text: &str, path: &str) -> Result<Layer, ConfigError> {
    let root: toml::Table = text.parse().map_err(|e: toml::de::Error| ConfigError::Syntax {
        path: path.to_string(),
        message: e.message().to_string(),
    })?;
    let mut out = Layer::default();
    for (k, v) in &root {
        match k.as_str() {
            "seed" => out.seed = Some(int(k, v)?),
            "backend" => {
                for (k2, v2) in table(k, v)? {
                    let key = format!("backend.{k2}");
                    match k2.as_str() {
                        "kind" => out.backend = Some(string(&key, v2)?),
                        "url" => out.url = Some(string(&key, v2)?),
                        "model" => out.model = Some(string(&key, v2)?),
                        "timeout_secs" => out.timeout_secs = Some(int(&key, v2)?),
                        _ => return Err(ConfigError::UnknownKey(key)),
                    }
                }
            }
            "limits" => {
                for (k2, v2) in table(k, v)? {
                    let key = format!("limits.{k2}");
                    match k2.as_str() {
                        "place_iter" => out.place_iter = Some(int(&key, v2)? as usize),
                        "wire_iter" => out.wire_iter = Some(int(&key, v2)? as usize),
                        _ => return Err(ConfigError::UnknownKey(key)),
                    }
                }
            }
            "history" => {
                for (k2, v2) in table(k, v)? {
                    let key = format!("history.{k2}");
                    match k2.as_str() {
                        "window" => out.history_window = Some(int(&key, v2)? as usize),
                        _ => return Err(ConfigError::UnknownKey(key)),
                    }
                }
            }
            _ => return Err(ConfigError::UnknownKey(k.clone())),
        }
    }
    Ok(out)
}

/// Read the environment layer through `get` (normally `std::env::var`).
pub fn env_layer(get: impl Fn(&str) -> Option<String>) -> Result<Layer, ConfigError> {
    fn num<T: std::str::FromStr>(get: &impl Fn(&str) -> Option<String>, key: &str) -> Result<Option<T>, ConfigError> {
        match get(key) {
            None => Ok(None),
            Some(v) => v.trim().parse().map(Some).map_err(|_| ConfigError::Type {
                key: key.to_string(),
                expected: "a non-negative integer",
            }),
        }
    }
    Ok(Layer {
        backend: get(ENV_BACKEND),
        url: get(ENV_URL),
        model: get(ENV_MODEL),
        timeout_secs: num(&get, ENV_TIMEOUT)?,
        place_iter: num(&get, ENV_MAX_PLACE_ITER)?,
        wire_iter: num(&get, ENV_MAX_WIRE_ITER)?,
        history_window: num(&get, ENV_HISTORY_WINDOW)?,
        seed: num(&get, ENV_SEED)?,
    })
}

pub fn load_config(path: &Path) -> Result<Layer, ConfigError> {
    let shown = path.display().to_string();
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Read {
        path: shown.clone(),
        source,
    })?;
    parse_config(&text, &shown)
}

/// Merged configuration as it is echoed into run artifacts.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CliConfig {
    pub agent: AgentConfig,
    pub no_agent: bool,
}

impl CliConfig {
    pub fn resolve(layer: Layer, no_agent: bool) -> Result<Self, ConfigError> {
        let d = AgentConfig::default();
        let backend = match layer.backend.as_deref().unwrap_or("mock") {
            "mock" => BackendKind::Mock,
            "http" => BackendKind::Http {
                url: layer.url.ok_or(ConfigError::MissingUrl)?,
                model: layer.model.unwrap_or_default(),
            },
            other => return Err(ConfigError::Backend(other.to_string())),
        };
        Ok(CliConfig {
            agent: AgentConfig {
                max_place_iter: layer.place_iter.unwrap_or(d.max_place_iter),
                max_wire_iter: layer.wire_iter.unwrap_or(d.max_wire_iter),
                history_window: layer.history_window.unwrap_or(d.history_window),
                backend,
                seed: layer.seed.unwrap_or(d.seed),
                timeout_secs: layer.timeout_secs.unwrap_or(d.timeout_secs),
            },
            no_agent,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn full_file() {
        let l = parse_config(
            "seed = 4\n[backend]\nkind = \"http\"\nurl = \"http://x\"\nmodel = \"m\"\n[limits]\nplace_iter = 3\nwire_iter = 5\n[history]\nwindow = 2\n",
            "c.toml",
        )
        .unwrap();
        let c = CliConfig::resolve(l, false).unwrap();
        assert_eq!(c.agent.seed, 4);
        assert_eq!(c.agent.max_place_iter, 3);
        assert_eq!(c.agent.max_wire_iter, 5);
        assert_eq!(c.agent.history_window, 2);
        assert_eq!(
            c.agent.backend,
            BackendKind::Http {
                url: "http://x".into(),
                model: "m".into()
            }
        );
    }

    #[test]
    fn unknown_keys_name_their_path() {
        let e = parse_config("[limits]\nplace_iters = 3\n", "c.toml").unwrap_err();
        assert_eq!(e.to_string(), "unknown config key `limits.place_iters`");
        let e = parse_config("colour = 1\n", "c.toml").unwrap_err();
        assert_eq!(e.to_string(), "unknown config key `colour`");
    }

    #[test]
    fn wrong_types_rejected() {
        assert!(matches!(
            parse_config("seed = \"x\"\n", "c.toml"),
            Err(ConfigError::Type { .. })
        ));
        assert!(matches!(
            parse_config("limits = 3\n", "c.toml"),
            Err(ConfigError::Type { .. })
        ));
        assert!(matches!(
            parse_config("seed = -1\n", "c.toml"),
            Err(ConfigError::Type { .. })
        ));
    }

    #[test]
    fn upper_layer_wins() {
        let flags = Layer {
            seed: Some(1),
            ..Default::default()
        };
        let env = Layer {
            seed: Some(2),
            place_iter: Some(7),
            ..Default::default()
        };
        let file = Layer {
            seed: Some(3),
            place_iter: Some(8),
            wire_iter: Some(9),
            ..Default::default()
        };
        let m = flags.over(env.over(file));
        assert_eq!((m.seed, m.place_iter, m.wire_iter), (Some(1), Some(7), Some(9)));
    }

    #[test]
    fn env_values_parsed() {
        let l = env_layer(|k| match k {
            ENV_SEED => Some("11".into()),
            ENV_BACKEND => Some("mock".into()),
            _ => None,
        })
        .unwrap();
        assert_eq!((l.seed, l.backend.as_deref()), (Some(11), Some("mock")));
        assert!(env_layer(|k| (k == ENV_MAX_WIRE_ITER).then(|| "lots".to_string())).is_err());
    }

    #[test]
    fn http_requires_url() {
        let l = Layer {
            backend: Some("http".into()),
            ..Default::default()
        };
        assert!(matches!(CliConfig::resolve(l, false), Err(ConfigError::MissingUrl)));
    }
}
