//! `run --config`: a JSON experiment description turned into an argument
//! vector and parsed by the same definitions as the command line.

use std::collections::BTreeMap;

use serde::Deserialize;
use serde_json::Value;

use crate::CliError;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Subcommand path, e.g. `bell` or `circuit compile`.
    pub subcommand: String,
    /// Option names without leading dashes; `_` and `-` are interchangeable.
    #[serde(default)]
    pub args: BTreeMap<String, Value>,
    #[serde(default)]
    pub positional: Vec<String>,
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        serde_json::from_str(text).map_err(|e| CliError::Usage(format!("config: {e}")))
    }

    pub fn to_argv(&self) -> Result<Vec<String>, CliError> {
        let words: Vec<&str> = self.subcommand.split_whitespace().collect();
        match words.first() {
            None => return Err(CliError::Usage("config: empty subcommand".into())),
            Some(&"run") => return Err(CliError::Usage("config: run cannot be nested".into())),
            _ => {}
        }
        let mut argv = vec!["quditlab".to_string()];
        argv.extend(words.iter().map(|w| w.to_string()));
        argv.extend(self.positional.iter().cloned());
        for (key, value) in &self.args {
            let flag = format!("--{}", key.replace('_', "-"));
            match value {
                Value::Null | Value::Bool(false) => {}
                Value::Bool(true) => argv.push(flag),
                Value::Number(n) => argv.extend([flag, n.to_string()]),
                Value::String(s) => argv.extend([flag, s.clone()]),
                _ => {
                    return Err(CliError::Usage(format!(
                        "config: argument {key:?} must be a scalar"
                    )))
                }
            }
        }
        Ok(argv)
    }
}
