//! Fused training sets assembled from several source corpora by a recipe.

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use super::{load_corpus, LabeledCorpus, Split};
use crate::error::{PcgError, Result};
use crate::label::Label;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Role {
    /// Transfer-learning set: labeled.
    Tl,
    /// Supervised set: labeled.
    Sl,
    /// Representation-learning set: labels stripped.
    Rl,
}

impl FromStr for Role {
    type Err = PcgError;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "tl" => Ok(Role::Tl),
            "sl" => Ok(Role::Sl),
            "rl" => Ok(Role::Rl),
            other => Err(PcgError::Recipe(format!("unknown role `{other}` (tl, sl or rl)"))),
        }
    }
}

impl fmt::Display for Role {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Role::Tl => "tl",
            Role::Sl => "sl",
            Role::Rl => "rl",
        })
    }
}

/// Restricts which entries of a source enter the fused set. Empty lists keep everything.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SourceFilter {
    pub labels: Vec<Label>,
    pub splits: Vec<Split>,
}

/// Where a source's manifest lives, for recipes that load their own sources.
#[derive(Debug, Clone, PartialEq)]
pub struct SourceLocation {
    pub manifest: PathBuf,
    /// Defaults to the manifest's directory.
    pub audio_dir: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Recipe {
    pub role: Role,
    /// Source names in priority order; the first source wins on duplicate paths.
    pub sources: Vec<(String, SourceFilter)>,
    pub locations: BTreeMap<String, SourceLocation>,
}

fn list(value: &str) -> impl Iterator<Item = &str> {
    value.split(',').map(str::trim).filter(|s| !s.is_empty())
}

impl Recipe {
    /// Parses the flat `key = value` recipe format:
    ///
    /// ```text
    /// role = tl
    /// sources = hss, physionet
    /// physionet.labels = normal
    /// physionet.splits = fold-4
    /// hss.manifest = hss/manifest.csv
    /// ```
    ///
    /// `<source>.manifest` and `<source>.audio_dir` are only needed when the
    /// recipe is used to load its sources (`load_sources`).
    pub fn parse(text: &str) -> Result<Recipe> {
        let mut role = None;
        let mut names: Option<Vec<String>> = None;
        let mut filters: BTreeMap<String, SourceFilter> = BTreeMap::new();
        let mut manifests: BTreeMap<String, PathBuf> = BTreeMap::new();
        let mut audio_dirs: BTreeMap<String, PathBuf> = BTreeMap::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(PcgError::Recipe(format!("line {}: expected key = value", i + 1)));
            };
            let (key, value) = (key.trim(), value.trim());
            match key {
                "role" => role = Some(value.parse::<Role>()?),
                "sources" => names = Some(list(value).map(String::from).collect()),
                _ => {
                    let Some((src, field)) = key.rsplit_once('.') else {
                        return Err(PcgError::Recipe(format!("line {}: unknown key `{key}`", i + 1)));
                    };
                    if field == "manifest" || field == "audio_dir" {
                        let target = if field == "manifest" { &mut manifests } else { &mut audio_dirs };
                        target.insert(src.to_string(), PathBuf::from(value));
                        continue;
                    }
                    let f = filters.entry(src.to_string()).or_default();
                    match field {
                        "labels" => {
                            f.labels = list(value)
                                .map(|l| l.parse::<Label>().map_err(|e| PcgError::Recipe(e.to_string())))
                                .collect::<Result<_>>()?
                        }
                        "splits" => {
                            f.splits = list(value)
                                .map(|s| s.parse::<Split>().map_err(|e| PcgError::Recipe(e.to_string())))
                                .collect::<Result<_>>()?
                        }
                        _ => return Err(PcgError::Recipe(format!("line {}: unknown key `{key}`", i + 1))),
                    }
                }
            }
        }
        let role = role.ok_or_else(|| PcgError::Recipe("missing `role`".into()))?;
        let names = names.ok_or_else(|| PcgError::Recipe("missing `sources`".into()))?;
        if names.is_empty() {
            return Err(PcgError::Recipe("`sources` is empty".into()));
        }
        let keyed = filters.keys().chain(manifests.keys()).chain(audio_dirs.keys());
        if let Some(extra) = keyed.into_iter().find(|k| !names.contains(k)) {
            return Err(PcgError::Recipe(format!("settings for `{extra}`, which is not in `sources`")));
        }
        if let Some(orphan) = audio_dirs.keys().find(|k| !manifests.contains_key(*k)) {
            return Err(PcgError::Recipe(format!("`{orphan}.audio_dir` without `{orphan}.manifest`")));
        }
        let locations = manifests
            .into_iter()
            .map(|(n, manifest)| {
                let audio_dir = audio_dirs.remove(&n);
                (n, SourceLocation { manifest, audio_dir })
            })
            .collect();
        let sources = names
            .into_iter()
            .map(|n| {
                let f = filters.remove(&n).unwrap_or_default();
                (n, f)
            })
            .collect();
        Ok(Recipe { role, sources, locations })
    }

    /// Reads a recipe file; relative source paths are taken from the file's directory.
    pub fn load(path: &Path) -> Result<Recipe> {
        let text = std::fs::read_to_string(path).map_err(|e| PcgError::io(path, e))?;
        let mut recipe = Recipe::parse(&text)?;
        let base = path.parent().unwrap_or(Path::new(""));
        for loc in recipe.locations.values_mut() {
            loc.manifest = base.join(&loc.manifest);
            loc.audio_dir = loc.audio_dir.as_ref().map(|d| base.join(d));
        }
        Ok(recipe)
    }

    /// Loads every listed source from its `<source>.manifest`.
    pub fn load_sources(&self) -> Result<BTreeMap<String, LabeledCorpus>> {
        let mut sets = BTreeMap::new();
        for (name, _) in &self.sources {
            let loc = self
                .locations
                .get(name)
                .ok_or_else(|| PcgError::Recipe(format!("source `{name}` has no `{name}.manifest`")))?;
            let dir = match &loc.audio_dir {
                Some(d) => d.clone(),
                None => loc.manifest.parent().map(Path::to_path_buf).unwrap_or_default(),
            };
            sets.insert(name.clone(), load_corpus(&dir, &loc.manifest, name)?);
        }
        Ok(sets)
    }
}

/// Unions the recipe's sources in order. Duplicate paths keep the first source's
/// entry; `rl` strips every label.
pub fn build_fused(sets: &BTreeMap<String, LabeledCorpus>, recipe: &Recipe) -> Result<LabeledCorpus> {
    let mut seen = HashSet::new();
    let mut entries = Vec::new();
    for (name, filter) in &recipe.sources {
        let source = sets
            .get(name)
            .ok_or_else(|| PcgError::Recipe(format!("source `{name}` was not loaded")))?;
        for e in &source.entries {
            if !filter.labels.is_empty() && !e.label.is_some_and(|l| filter.labels.contains(&l)) {
                continue;
            }
            if !filter.splits.is_empty() && !e.split.is_some_and(|s| filter.splits.contains(&s)) {
                continue;
            }
            if !seen.insert(e.path.clone()) {
                log::warn!("{}: already taken from an earlier source, skipping `{name}` copy", e.path.display());
                continue;
            }
            entries.push(e.clone());
        }
    }
    let out = LabeledCorpus { entries };
    Ok(match recipe.role {
        Role::Rl => out.strip_labels(),
        Role::Tl | Role::Sl => out,
    })
}
