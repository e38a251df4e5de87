//! Config loading: a TOML file plus `--key value` flags for any config key.

use std::collections::BTreeSet;
use std::ffi::OsString;
use std::path::Path;

use anyhow::{bail, Context, Result};
use piecehint::config::ExperimentConfig;

/// Keys that default to absent and so are missing from a serialized default.
const OPTIONAL_KEYS: [&str; 4] = [
    "corpus",
    "weak_success_rate",
    "scorer_command",
    "corruption",
];

pub fn config_keys() -> BTreeSet<String> {
    let defaults = serde_json::to_value(ExperimentConfig::with_seed(0)).expect("config serializes");
    let mut keys: BTreeSet<String> = defaults
        .as_object()
        .expect("config is an object")
        .keys()
        .cloned()
        .collect();
    keys.extend(OPTIONAL_KEYS.iter().map(|k| k.to_string()));
    keys
}

/// Splits `args` into config overrides and everything else. Flags are
/// matched by name with `-` and `_` treated alike; both `--key value` and
/// `--key=value` are accepted.
pub type Overrides = Vec<(String, String)>;

pub fn split_overrides(args: Vec<OsString>) -> Result<(Vec<OsString>, Overrides)> {
    let keys = config_keys();
    let mut rest = Vec::with_capacity(args.len());
    let mut overrides = Vec::new();
    let mut iter = args.into_iter();
    while let Some(arg) = iter.next() {
        let Some(flag) = arg.to_str().and_then(|a| a.strip_prefix("--")) else {
            rest.push(arg);
            continue;
        };
        let (name, inline) = match flag.split_once('=') {
            Some((n, v)) => (n.replace('-', "_"), Some(v.to_string())),
            None => (flag.replace('-', "_"), None),
        };
        if !keys.contains(&name) {
            rest.push(arg);
            continue;
        }
        let value = match inline {
            Some(v) => v,
            None => iter
                .next()
                .and_then(|v| v.into_string().ok())
                .with_context(|| format!("--{name} needs a value"))?,
        };
        overrides.push((name, value));
    }
    Ok((rest, overrides))
}

/// Reads a bare command-line value as TOML when it parses, else as a string.
fn parse_value(raw: &str) -> toml::Value {
    toml::from_str::<toml::Table>(&format!("v = {raw}"))
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.to_string()))
}

pub fn load_config(
    path: Option<&Path>,
    overrides: &[(String, String)],
) -> Result<ExperimentConfig> {
    let mut table = match path {
        Some(p) => {
            let text =
                std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
            text.parse::<toml::Table>()
                .with_context(|| format!("parsing {}", p.display()))?
        }
        None => toml::Table::new(),
    };
    for (key, raw) in overrides {
        table.insert(key.clone(), parse_value(raw));
    }
    if !table.contains_key("seed") {
        bail!("seed is mandatory: set it in the config file or pass --seed");
    }
    let config: ExperimentConfig = toml::Value::Table(table)
        .try_into()
        .context("invalid configuration")?;
    config.validate().map_err(anyhow::Error::msg)?;
    Ok(config)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn os(args: &[&str]) -> Vec<OsString> {
        args.iter().map(OsString::from).collect()
    }

    #[test]
    fn overrides_are_pulled_out() {
        let (rest, ov) = split_overrides(os(&[
            "piecehint",
            "run",
            "--out-dir",
            "x",
            "--seed",
            "4",
            "--learning-rate=2.5",
            "--baseline",
            "no_hint",
        ]))
        .unwrap();
        assert_eq!(rest, os(&["piecehint", "run", "--out-dir", "x"]));
        assert_eq!(
            ov,
            vec![
                ("seed".to_string(), "4".to_string()),
                ("learning_rate".to_string(), "2.5".to_string()),
                ("baseline".to_string(), "no_hint".to_string()),
            ]
        );
    }

    #[test]
    fn values_keep_their_types() {
        let ov = [
            ("seed".to_string(), "9".to_string()),
            ("withdrawal".to_string(), "false".to_string()),
            ("gen_profile".to_string(), "bottleneck(8,2)".to_string()),
            ("baseline".to_string(), "prefix_fraction(0.5)".to_string()),
            ("alpha1".to_string(), "1".to_string()),
        ];
        let c = load_config(None, &ov).unwrap();
        assert_eq!(c.seed, 9);
        assert!(!c.withdrawal);
        assert_eq!(c.gen_profile.to_string(), "bottleneck(8,2)");
        assert_eq!(c.alpha1, 1.0);
    }

    #[test]
    fn seed_is_required() {
        assert!(load_config(None, &[]).is_err());
    }

    #[test]
    fn every_key_is_known() {
        let keys = config_keys();
        for k in [
            "seed",
            "n_check",
            "corruption",
            "eval_samples",
            "sample_unit",
        ] {
            assert!(keys.contains(k), "{k}");
        }
    }

    #[test]
    fn shipped_config_loads() {
        let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs/bottleneck.toml");
        let c = load_config(Some(&path), &[("total_updates".into(), "5".into())]).unwrap();
        assert_eq!(c.gen_problems, 200);
        assert_eq!(c.total_updates, 5);
    }
}
