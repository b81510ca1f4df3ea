//! Strict sectioned `key = value` configuration.
//!
//! ```text
//! [outer]
//! center = 0 0
//! r0 = 1
//! cos = 0 0.05
//! [core]          # repeat for more components
//! r0 = 0.5
//! [physics]
//! sigma_c = 2
//! ```

use std::collections::BTreeMap;
use std::fmt;

use twophase::{StarBoundary, TwoPhaseConfig};

#[derive(Debug)]
pub struct ConfigError(pub String);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

type Res<T> = Result<T, ConfigError>;

fn err<T>(msg: impl Into<String>) -> Res<T> {
    Err(ConfigError(msg.into()))
}

const CURVE_KEYS: &[&str] = &["center", "r0", "cos", "sin"];
const PHYSICS_KEYS: &[&str] = &["sigma_c"];
const MESH_KEYS: &[&str] = &["h", "order"];
const OUTPUT_KEYS: &[&str] = &["dir", "formats"];
const EXPERIMENT_KEYS: &[&str] = &[
    "modes",
    "t_grid",
    "renormalize",
    "overdetermined_tol",
    "tie_tol",
    "k_max",
    "steps",
    "step_size",
    "tol",
    "max_halvings",
    "fourier_order",
    "directions",
    "dlambda",
    "tol_touch",
    "tol_angle",
    "plane_band",
    "resolution",
    "alpha",
    "beta",
    "offsets",
    "criteria",
];

fn known_keys(section: &str) -> Option<&'static [&'static str]> {
    match section {
        "outer" | "core" => Some(CURVE_KEYS),
        "physics" => Some(PHYSICS_KEYS),
        "mesh" => Some(MESH_KEYS),
        "experiment" => Some(EXPERIMENT_KEYS),
        "output" => Some(OUTPUT_KEYS),
        _ => None,
    }
}

/// Raw sections after parsing and overrides; cores are numbered in file order.
#[derive(Clone, Debug, Default)]
pub struct RawConfig {
    sections: BTreeMap<String, BTreeMap<String, String>>,
    n_cores: usize,
}

fn section_id(name: &str, core_index: usize) -> String {
    if name == "core" {
        format!("core.{core_index}")
    } else {
        name.to_string()
    }
}

impl RawConfig {
    pub fn parse(text: &str) -> Res<Self> {
        let mut cfg = RawConfig::default();
        let mut current: Option<String> = None;
        for (ln, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            if let Some(name) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
                let name = name.trim();
                if known_keys(name).is_none() {
                    return err(format!("line {}: unknown section [{name}]", ln + 1));
                }
                let id = if name == "core" {
                    cfg.n_cores += 1;
                    section_id(name, cfg.n_cores - 1)
                } else {
                    if cfg.sections.contains_key(name) {
                        return err(format!("line {}: duplicate section [{name}]", ln + 1));
                    }
                    name.to_string()
                };
                cfg.sections.insert(id.clone(), BTreeMap::new());
                current = Some(id);
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return err(format!("line {}: expected `key = value`, got `{line}`", ln + 1));
            };
            let Some(sec) = current.as_ref() else {
                return err(format!("line {}: key `{}` outside any section", ln + 1, key.trim()));
            };
            cfg.insert(sec, key.trim(), value.trim(), Some(ln + 1))?;
        }
        Ok(cfg)
    }

    fn insert(&mut self, section: &str, key: &str, value: &str, line: Option<usize>) -> Res<()> {
        let base = section.split('.').next().unwrap_or(section);
        let known = known_keys(base).unwrap_or(&[]);
        let at = line.map_or(String::new(), |l| format!("line {l}: "));
        if !known.contains(&key) {
            return err(format!("{at}unknown key `{key}` in section [{base}]"));
        }
        let entries = self.sections.entry(section.to_string()).or_default();
        if line.is_some() && entries.contains_key(key) {
            return err(format!("{at}duplicate key `{key}` in section [{base}]"));
        }
        entries.insert(key.to_string(), value.to_string());
        Ok(())
    }

    /// `section.key=value`; `core.key` addresses the first core, `core.N.key` core `N`.
    pub fn apply_override(&mut self, entry: &str) -> Res<()> {
        let Some((path, value)) = entry.split_once('=') else {
            return err(format!("override `{entry}` is not of the form section.key=value"));
        };
        let parts: Vec<&str> = path.trim().split('.').collect();
        let (section, key) = match parts.as_slice() {
            ["core", idx, key] => {
                let i: usize = idx.parse().map_err(|_| ConfigError(format!("bad core index in override `{path}`")))?;
                if i >= self.n_cores {
                    return err(format!("override `{path}` names core {i}, but only {} are defined", self.n_cores));
                }
                (section_id("core", i), *key)
            }
            ["core", key] => {
                if self.n_cores == 0 {
                    return err(format!("override `{path}` names a core, but none are defined"));
                }
                (section_id("core", 0), *key)
            }
            [section, key] => {
                if known_keys(section).is_none() {
                    return err(format!("unknown section `{section}` in override `{path}`"));
                }
                (section.to_string(), *key)
            }
            _ => return err(format!("override `{path}` must be section.key")),
        };
        self.insert(&section, key, value.trim(), None)
    }

    fn get(&self, section: &str, key: &str) -> Option<&str> {
        self.sections.get(section).and_then(|s| s.get(key)).map(String::as_str)
    }

    /// Canonical text of everything except the output block, for hashing.
    pub fn canonical(&self) -> String {
        let mut s = String::new();
        for (name, entries) in &self.sections {
            if name == "output" {
                continue;
            }
            s.push_str(&format!("[{name}]\n"));
            for (k, v) in entries {
                s.push_str(&format!("{k}={}\n", v.split_whitespace().collect::<Vec<_>>().join(" ")));
            }
        }
        s
    }

    pub fn has_geometry(&self) -> bool {
        self.sections.contains_key("outer")
    }

    fn curve(&self, section: &str) -> Res<StarBoundary> {
        let center = match self.get(section, "center") {
            Some(v) => {
                let c = floats(v, section, "center")?;
                if c.len() != 2 {
                    return err(format!("[{section}] center needs two numbers, got {}", c.len()));
                }
                [c[0], c[1]]
            }
            None => [0.0, 0.0],
        };
        let r0 = self
            .get(section, "r0")
            .map(|v| float(v, section, "r0"))
            .transpose()?
            .ok_or_else(|| ConfigError(format!("[{section}] is missing r0")))?;
        let list = |k: &str| self.get(section, k).map_or(Ok(Vec::new()), |v| floats(v, section, k));
        StarBoundary::new(center, r0, list("cos")?, list("sin")?).map_err(|e| ConfigError(format!("[{section}]: {e}")))
    }

    pub fn geometry(&self) -> Res<TwoPhaseConfig> {
        if !self.has_geometry() {
            return err("missing section [outer]");
        }
        if self.n_cores == 0 {
            return err("missing section [core]");
        }
        let outer = self.curve("outer")?;
        let cores = (0..self.n_cores).map(|i| self.curve(&section_id("core", i))).collect::<Res<Vec<_>>>()?;
        let sigma = self.opt_f64("physics", "sigma_c")?.ok_or_else(|| ConfigError("[physics] is missing sigma_c".into()))?;
        TwoPhaseConfig::new(outer, cores, sigma).map_err(|e| ConfigError(e.to_string()))
    }

    fn opt_f64(&self, section: &str, key: &str) -> Res<Option<f64>> {
        self.get(section, key).map(|v| float(v, section, key)).transpose()
    }

    pub fn f64_or(&self, section: &str, key: &str, default: f64) -> Res<f64> {
        Ok(self.opt_f64(section, key)?.unwrap_or(default))
    }

    pub fn usize_or(&self, section: &str, key: &str, default: usize) -> Res<usize> {
        match self.get(section, key) {
            Some(v) => v.parse().map_err(|_| ConfigError(format!("[{section}] {key}: expected a non-negative integer, got `{v}`"))),
            None => Ok(default),
        }
    }

    pub fn bool_or(&self, section: &str, key: &str, default: bool) -> Res<bool> {
        match self.get(section, key) {
            Some("true") => Ok(true),
            Some("false") => Ok(false),
            Some(v) => err(format!("[{section}] {key}: expected true or false, got `{v}`")),
            None => Ok(default),
        }
    }

    pub fn f64_list_or(&self, section: &str, key: &str, default: &[f64]) -> Res<Vec<f64>> {
        self.get(section, key).map_or(Ok(default.to_vec()), |v| floats(v, section, key))
    }

    pub fn output_dir(&self) -> Option<&str> {
        self.get("output", "dir")
    }

    /// Which of `csv` and `json` to write; both unless `[output] formats` says otherwise.
    pub fn output_formats(&self) -> Res<(bool, bool)> {
        let Some(words) = self.words("output", "formats") else {
            return Ok((true, true));
        };
        let (mut csv, mut json) = (false, false);
        for w in &words {
            match w.as_str() {
                "csv" => csv = true,
                "json" => json = true,
                other => return err(format!("[output] formats: unknown format `{other}`")),
            }
        }
        Ok((csv, json))
    }

    pub fn words(&self, section: &str, key: &str) -> Option<Vec<String>> {
        self.get(section, key).map(|v| v.split_whitespace().map(str::to_string).collect())
    }
}

fn float(v: &str, section: &str, key: &str) -> Res<f64> {
    v.trim()
        .parse::<f64>()
        .ok()
        .filter(|x| x.is_finite())
        .ok_or_else(|| ConfigError(format!("[{section}] {key}: expected a number, got `{v}`")))
}

fn floats(v: &str, section: &str, key: &str) -> Res<Vec<f64>> {
    v.split_whitespace().map(|w| float(w, section, key)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    const BASIC: &str = "[outer]\nr0 = 1\n[core]\nr0 = 0.5 # inner\n[physics]\nsigma_c = 2\n";

    #[test]
    fn parses_concentric_disks() {
        let cfg = RawConfig::parse(BASIC).unwrap();
        let g = cfg.geometry().unwrap();
        assert_eq!(g.cores().len(), 1);
        assert_eq!(g.sigma_c(), 2.0);
    }

    #[test]
    fn unknown_key_is_named() {
        let e = RawConfig::parse("[mesh]\ntarget = 0.1\n").unwrap_err();
        assert!(e.0.contains("`target`"), "{e}");
    }

    #[test]
    fn overrides_replace_values() {
        let mut cfg = RawConfig::parse(BASIC).unwrap();
        cfg.apply_override("core.r0=0.25").unwrap();
        cfg.apply_override("mesh.h=0.1").unwrap();
        assert_eq!(cfg.geometry().unwrap().cores()[0].r0(), 0.25);
        assert!(cfg.apply_override("mesh.size=0.1").is_err());
        assert!(cfg.apply_override("core.3.r0=0.1").is_err());
    }

    #[test]
    fn canonical_text_ignores_layout_and_output() {
        let a = RawConfig::parse(BASIC).unwrap();
        let b = RawConfig::parse("[physics]\nsigma_c=2\n\n[outer]\n  r0 =   1\n[core]\nr0=0.5\n[output]\ndir = x\n").unwrap();
        assert_eq!(a.canonical(), b.canonical());
    }

    #[test]
    fn duplicate_keys_are_rejected() {
        assert!(RawConfig::parse("[mesh]\nh = 0.1\nh = 0.2\n").is_err());
        assert!(RawConfig::parse("[mesh]\n[mesh]\n").is_err());
    }
}
