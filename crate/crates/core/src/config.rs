//! Flat `key = value` run configuration with a fixed schema.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use crate::error::{PcgError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Kind {
    Float,
    Int,
    Bool,
    IntList,
    Choice(&'static [&'static str]),
}

struct Key {
    name: &'static str,
    default: &'static str,
    kind: Kind,
}

const fn key(name: &'static str, default: &'static str, kind: Kind) -> Key {
    Key { name, default, kind }
}

const SCHEMA: &[Key] = &[
    key("seed", "0", Kind::Int),
    key("fir_order", "60", Kind::Int),
    key("front_end", "tconv-lp", Kind::Choice(&["static", "tconv-free", "tconv-lp"])),
    key("tconv_len", "61", Kind::Int),
    key("dropout", "0.5", Kind::Float),
    key("pretrain.epochs", "200", Kind::Int),
    key("pretrain.lr", "4.5e-5", Kind::Float),
    key("pretrain.batch_size", "64", Kind::Int),
    key("pretrain.target_uar", "0", Kind::Float),
    key("finetune.epochs", "200", Kind::Int),
    key("finetune.lr", "4.5e-5", Kind::Float),
    key("finetune.batch_size", "64", Kind::Int),
    key("finetune.target_uar", "0", Kind::Float),
    key("finetune.freeze_branches", "true", Kind::Bool),
    key("class_weighted", "true", Kind::Bool),
    key("ae.hidden", "256", Kind::Int),
    key("ae.epochs", "100", Kind::Int),
    key("ae.lr", "1e-3", Kind::Float),
    key("ae.clip_norm", "5", Kind::Float),
    key("ae.frame_stride", "2", Kind::Int),
    key("ae.thresholds", "-30,-45,-60,-75", Kind::IntList),
    key("shallow.method", "svm", Kind::Choice(&["svm", "lda", "mlp"])),
    key("shallow.c", "1e-4", Kind::Float),
    key("shallow.tol", "0.3", Kind::Float),
    key("shallow.max_sweeps", "1000", Kind::Int),
    key("shallow.shrinkage", "0.1", Kind::Float),
    key("shallow.mlp_hidden", "64", Kind::IntList),
    key("shallow.mlp_epochs", "100", Kind::Int),
    key("shallow.mlp_lr", "1e-3", Kind::Float),
    key("ensemble.normal_policy", "redistribute", Kind::Choice(&["redistribute", "abstain"])),
    key("synth.count", "30", Kind::Int),
    key("synth.duration", "10", Kind::Float),
    key("synth.rate", "4000", Kind::Float),
    key("synth.bpm_min", "55", Kind::Float),
    key("synth.bpm_max", "110", Kind::Float),
    key("synth.snr_db", "20", Kind::Float),
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Origin {
    Default,
    File,
    Flag,
}

impl fmt::Display for Origin {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Origin::Default => "default",
            Origin::File => "file",
            Origin::Flag => "flag",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    values: BTreeMap<&'static str, (String, Origin)>,
}

fn check(k: &Key, value: &str) -> Result<()> {
    let bad = |what: &str| PcgError::Config(format!("`{}` expects {what}, got `{value}`", k.name));
    match k.kind {
        Kind::Float => value
            .parse::<f64>()
            .ok()
            .filter(|v| v.is_finite())
            .map(|_| ())
            .ok_or_else(|| bad("a finite number")),
        Kind::Int => value.parse::<u64>().map(|_| ()).map_err(|_| bad("a non-negative integer")),
        Kind::Bool => value.parse::<bool>().map(|_| ()).map_err(|_| bad("true or false")),
        Kind::IntList => value
            .split(',')
            .try_for_each(|v| v.trim().parse::<i64>().map(|_| ()))
            .map_err(|_| bad("a comma-separated list of integers")),
        Kind::Choice(options) => {
            if options.contains(&value) {
                Ok(())
            } else {
                Err(bad(&format!("one of {}", options.join(", "))))
            }
        }
    }
}

fn parse_line(line: &str) -> Option<Result<(&str, &str)>> {
    let line = line.trim();
    if line.is_empty() || line.starts_with('#') {
        return None;
    }
    Some(
        line.split_once('=')
            .map(|(k, v)| (k.trim(), v.trim()))
            .ok_or_else(|| PcgError::Config(format!("expected key = value, got `{line}`"))),
    )
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            values: SCHEMA
                .iter()
                .map(|k| (k.name, (k.default.to_string(), Origin::Default)))
                .collect(),
        }
    }
}

impl RunConfig {
    pub fn set(&mut self, key: &str, value: &str, origin: Origin) -> Result<()> {
        let k = SCHEMA
            .iter()
            .find(|k| k.name == key)
            .ok_or_else(|| PcgError::Config(format!("unknown key `{key}`")))?;
        check(k, value)?;
        self.values.insert(k.name, (value.to_string(), origin));
        Ok(())
    }

    pub fn apply_text(&mut self, text: &str, origin: Origin) -> Result<()> {
        for line in text.lines() {
            if let Some(kv) = parse_line(line) {
                let (k, v) = kv?;
                self.set(k, v, origin)?;
            }
        }
        Ok(())
    }

    /// Defaults, then `file`, then `key=value` overrides.
    pub fn load(file: Option<&Path>, overrides: &[String]) -> Result<Self> {
        let mut cfg = RunConfig::default();
        if let Some(path) = file {
            let text = std::fs::read_to_string(path).map_err(|e| PcgError::io(path, e))?;
            cfg.apply_text(&text, Origin::File)?;
        }
        for o in overrides {
            let (k, v) = o
                .split_once('=')
                .ok_or_else(|| PcgError::Config(format!("override `{o}` is not key=value")))?;
            cfg.set(k.trim(), v.trim(), Origin::Flag)?;
        }
        Ok(cfg)
    }

    pub fn raw(&self, key: &str) -> &str {
        match self.values.get(key) {
            Some((v, _)) => v,
            None => panic!("`{key}` is not in the config schema"),
        }
    }

    pub fn origin(&self, key: &str) -> Origin {
        self.values.get(key).map_or(Origin::Default, |(_, o)| *o)
    }

    /// Typed read of a schema key; values were validated on `set`.
    pub fn get<T: FromStr>(&self, key: &str) -> T {
        match self.raw(key).parse() {
            Ok(v) => v,
            Err(_) => panic!("`{key}` was validated but does not parse"),
        }
    }

    pub fn get_list(&self, key: &str) -> Vec<i64> {
        self.raw(key).split(',').map(|v| v.trim().parse().unwrap_or(0)).collect()
    }

    /// Non-positive values mean "unset".
    pub fn get_opt(&self, key: &str) -> Option<f64> {
        Some(self.get::<f64>(key)).filter(|&v| v > 0.0)
    }

    /// Every key with its effective value and origin; loads back to the same config.
    pub fn snapshot(&self) -> String {
        let mut out = String::new();
        for (k, (v, o)) in &self.values {
            out.push_str(&format!("{k} = {v}  # {o}\n"));
        }
        out
    }

    pub fn write_snapshot(&self, dir: &Path, command: &str) -> Result<()> {
        let path = dir.join("config.txt");
        let text = format!("# {command}\n{}", self.snapshot());
        std::fs::write(&path, text).map_err(|e| PcgError::io(path, e))
    }
}

/// Parses a snapshot line value, stripping a trailing `# origin` comment.
fn strip_comment(v: &str) -> &str {
    v.split_once('#').map_or(v, |(a, _)| a).trim()
}

impl FromStr for RunConfig {
    type Err = PcgError;

    fn from_str(s: &str) -> Result<Self> {
        let mut cfg = RunConfig::default();
        for line in s.lines() {
            if let Some(kv) = parse_line(line) {
                let (k, v) = kv?;
                cfg.set(k, strip_comment(v), Origin::File)?;
            }
        }
        Ok(cfg)
    }
}
