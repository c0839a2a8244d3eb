use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::catalog::{find, ExperimentInfo};
use crate::error::{Error, Result};
use crate::grid::{enumerate_dyadic_cubes, translate_cube_family, CubeFamily, Grid};
use crate::maximal::ScaleLadder;
use crate::morrey::MorreyParams;
use crate::psido::parse_symbol;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub dim: usize,
    pub half_width: f64,
    /// Samples per axis.
    pub samples: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamsConfig {
    pub q: f64,
    pub lambda: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum FamilyConfig {
    /// Dyadic cubes of side `2^-j`, `j_min <= j <= j_max`, meeting the box.
    Dyadic { j_min: i32, j_max: i32 },
    /// Translates of each side length at `offsets` shifts per axis.
    Translated { sides: Vec<f64>, offsets: usize },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LadderConfig {
    /// Scales `t = 2^-j` for `j_lo <= j <= j_hi`.
    pub j_lo: i32,
    pub j_hi: i32,
    /// Keep only `t <= 1`.
    #[serde(default)]
    pub truncated: bool,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CorpusConfig {
    /// Side lengths of the smooth atoms.
    #[serde(default)]
    pub sides: Vec<f64>,
    /// Smooth atoms per side length.
    #[serde(default)]
    pub per_side: usize,
    /// Lower corner of the first cube, repeated along every axis.
    #[serde(default)]
    pub corner: f64,
    /// Atom `s` of a side sits at `corner + side * (s mod stagger)`.
    #[serde(default = "one")]
    pub stagger: usize,
    /// Rough blocks cycle through these sides.
    #[serde(default)]
    pub rough_sides: Vec<f64>,
    #[serde(default)]
    pub rough_count: usize,
    #[serde(default)]
    pub rough_corner: f64,
    /// Saved atoms (JSON) appended to the corpus.
    #[serde(default)]
    pub files: Vec<PathBuf>,
}

fn one() -> usize {
    1
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SymbolConfig {
    pub spec: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub control: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    pub dir: PathBuf,
    #[serde(default = "yes")]
    pub plots: bool,
}

fn yes() -> bool {
    true
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum OptionValue {
    Number(f64),
    List(Vec<f64>),
}

/// A complete, validated experiment configuration. Sections missing from a
/// file are taken from the experiment's defaults; `seed` is always required.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: String,
    pub seed: u64,
    pub grid: GridConfig,
    pub params: ParamsConfig,
    pub family: FamilyConfig,
    pub ladder: LadderConfig,
    #[serde(default)]
    pub corpus: CorpusConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub symbol: Option<SymbolConfig>,
    pub output: OutputConfig,
    #[serde(default)]
    pub tolerances: BTreeMap<String, f64>,
    #[serde(default)]
    pub options: BTreeMap<String, OptionValue>,
}

const SECTIONS: &[&str] = &["grid", "params", "family", "ladder", "corpus", "symbol", "output"];
const MAX_POINTS: usize = 1 << 24;

impl ExperimentConfig {
    /// The built-in configuration of a named experiment.
    pub fn default_for(name: &str) -> Result<Self> {
        let info = find(name)?;
        Ok((info.defaults)())
    }

    pub fn with_output(mut self, dir: impl AsRef<Path>) -> Self {
        self.output.dir = dir.as_ref().to_path_buf();
        self
    }

    pub fn with_option(mut self, key: &str, value: OptionValue) -> Self {
        self.options.insert(key.to_string(), value);
        self
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    /// Parses a TOML config over the experiment defaults and validates it,
    /// reporting every violated field at once.
    pub fn from_toml(text: &str) -> Result<Self> {
        let table: toml::Table = text.parse().map_err(|e: toml::de::Error| Error::Config(vec![e.message().to_string()]))?;
        let mut errors = Vec::new();
        let name = match table.get("experiment") {
            Some(toml::Value::String(s)) => s.clone(),
            Some(_) => return Err(Error::Config(vec!["experiment: must be a string".into()])),
            None => return Err(Error::Config(vec!["experiment: missing".into()])),
        };
        let info = find(&name).map_err(|_| Error::Config(vec![format!("experiment: unknown experiment '{name}'")]))?;
        let mut merged = toml::Table::try_from((info.defaults)()).map_err(|e| Error::Serde(e.to_string()))?;
        match table.get("seed") {
            Some(toml::Value::Integer(s)) if *s >= 0 => {}
            Some(_) => errors.push("seed: must be a nonnegative integer".to_string()),
            None => errors.push("seed: missing (seeds are mandatory)".to_string()),
        }
        for (key, value) in &table {
            match key.as_str() {
                "experiment" => {
                    merged.insert(key.clone(), value.clone());
                }
                "seed" => {
                    if value.as_integer().is_some_and(|s| s >= 0) {
                        merged.insert(key.clone(), value.clone());
                    }
                }
                "tolerances" | "options" => {
                    let Some(over) = value.as_table() else {
                        errors.push(format!("{key}: must be a table"));
                        continue;
                    };
                    let base = merged.entry(key.clone()).or_insert_with(|| toml::Value::Table(toml::Table::new()));
                    let known: Vec<&str> = if key == "tolerances" {
                        info.tolerances.iter().map(|t| t.key).collect()
                    } else {
                        info.options.iter().map(|o| o.key).collect()
                    };
                    for (k, v) in over {
                        if !known.contains(&k.as_str()) {
                            errors.push(format!("{key}.{k}: unknown for {name} (known: {})", known.join(", ")));
                        } else if let Some(t) = base.as_table_mut() {
                            t.insert(k.clone(), v.clone());
                        }
                    }
                }
                s if SECTIONS.contains(&s) => {
                    let Some(over) = value.as_table() else {
                        errors.push(format!("{key}: must be a table"));
                        continue;
                    };
                    let default = merged.get(key).cloned();
                    let replace = match merged.get(key) {
                        // a different family kind replaces the section wholesale
                        Some(toml::Value::Table(base)) => over.get("kind").is_some_and(|k| Some(k) != base.get("kind")),
                        _ => true,
                    };
                    if replace {
                        merged.insert(key.clone(), value.clone());
                    } else if let Some(toml::Value::Table(base)) = merged.get_mut(key) {
                        for (k, v) in over {
                            base.insert(k.clone(), v.clone());
                        }
                    }
                    if let Err(e) = section_check(key, merged.get(key).unwrap()) {
                        errors.push(e);
                        // keep the fields that parse, so validation still sees them
                        match default {
                            Some(toml::Value::Table(mut base)) if !replace => {
                                for (k, v) in over {
                                    let mut trial = base.clone();
                                    trial.insert(k.clone(), v.clone());
                                    if section_check(key, &toml::Value::Table(trial.clone())).is_ok() {
                                        base = trial;
                                    }
                                }
                                merged.insert(key.clone(), toml::Value::Table(base));
                            }
                            Some(d) => {
                                merged.insert(key.clone(), d);
                            }
                            None => {
                                merged.remove(key);
                            }
                        }
                    }
                }
                other => errors.push(format!("{other}: unknown section")),
            }
        }
        let cfg: ExperimentConfig = match toml::Value::Table(merged).try_into() {
            Ok(c) => c,
            Err(e) => {
                errors.push(e.message().to_string());
                return Err(Error::Config(errors));
            }
        };
        if let Err(Error::Config(more)) = cfg.validate() {
            errors.extend(more);
        }
        if !errors.is_empty() {
            return Err(Error::Config(errors));
        }
        Ok(cfg)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Serde(e.to_string()))
    }

    pub fn info(&self) -> Result<&'static ExperimentInfo> {
        find(&self.experiment)
    }

    /// Every violated field, or `Ok`.
    pub fn validate(&self) -> Result<()> {
        let mut e = Vec::new();
        let info = match find(&self.experiment) {
            Ok(i) => Some(i),
            Err(_) => {
                e.push(format!("experiment: unknown experiment '{}'", self.experiment));
                None
            }
        };
        let g = &self.grid;
        if g.dim != 1 && g.dim != 2 {
            e.push(format!("grid.dim: must be 1 or 2, got {}", g.dim));
        }
        if g.samples < 8 || !g.samples.is_power_of_two() {
            e.push(format!("grid.samples: must be a power of two >= 8, got {}", g.samples));
        } else if (1..=2).contains(&g.dim) && g.samples.pow(g.dim as u32) > MAX_POINTS {
            e.push(format!("grid.samples: {}^{} points exceed the limit of {MAX_POINTS}", g.samples, g.dim));
        }
        if !(g.half_width > 0.0 && g.half_width.is_finite()) {
            e.push(format!("grid.half_width: must be positive, got {}", g.half_width));
        }
        let grid = Grid::new(g.dim, g.half_width, g.samples).ok();
        let blowup = self.experiment == "psido-blowup";
        if !blowup {
            if let Err(err) = MorreyParams::new(self.params.q, self.params.lambda) {
                e.push(format!("params: {err}"));
            }
        } else if !(self.params.lambda > 0.0 && self.params.lambda <= 1.0) {
            e.push(format!("params.lambda: blow-up needs 0 < lambda <= 1, got {}", self.params.lambda));
        }
        match &self.family {
            FamilyConfig::Dyadic { j_min, j_max } => {
                if j_min > j_max {
                    e.push(format!("family.j_min: {j_min} exceeds j_max {j_max}"));
                } else if let Some(grid) = &grid {
                    if let Err(err) = enumerate_dyadic_cubes(grid, *j_min, *j_max) {
                        e.push(format!("family.j_max: {err}"));
                    }
                }
            }
            FamilyConfig::Translated { sides, offsets } => {
                if sides.is_empty() || sides.iter().any(|s| !(*s > 0.0 && s.is_finite())) {
                    e.push("family.sides: need at least one positive side".into());
                }
                if *offsets == 0 {
                    e.push("family.offsets: must be at least 1".into());
                }
            }
        }
        if self.ladder.j_lo > self.ladder.j_hi {
            e.push(format!("ladder.j_lo: {} exceeds j_hi {}", self.ladder.j_lo, self.ladder.j_hi));
        } else if self.ladder.truncated && self.ladder.j_hi < 0 {
            e.push("ladder.j_hi: a truncated ladder needs some t <= 1".into());
        }
        let c = &self.corpus;
        if c.sides.iter().chain(&c.rough_sides).any(|s| !(*s > 0.0 && s.is_finite())) {
            e.push("corpus.sides: side lengths must be positive".into());
        }
        if c.rough_sides.iter().any(|s| *s < 1.0) {
            e.push("corpus.rough_sides: rough blocks need side >= 1".into());
        }
        if c.rough_count > 0 && c.rough_sides.is_empty() {
            e.push("corpus.rough_sides: rough_count > 0 needs at least one side".into());
        }
        if c.stagger == 0 {
            e.push("corpus.stagger: must be at least 1".into());
        }
        for f in &c.files {
            if !f.is_file() {
                e.push(format!("corpus.files: {} does not exist", f.display()));
            }
        }
        if let Some(s) = &self.symbol {
            for (field, spec) in [("symbol.spec", Some(&s.spec)), ("symbol.control", s.control.as_ref())] {
                if let Some(spec) = spec {
                    if let Err(err) = parse_symbol(spec, g.dim.clamp(1, 2)) {
                        e.push(format!("{field}: {err}"));
                    }
                }
            }
        }
        if self.output.dir.as_os_str().is_empty() {
            e.push("output.dir: must not be empty".into());
        }
        for (k, v) in &self.tolerances {
            if !v.is_finite() {
                e.push(format!("tolerances.{k}: must be finite"));
            }
        }
        if let Some(info) = info {
            for k in self.tolerances.keys() {
                if !info.tolerances.iter().any(|t| t.key == k) {
                    e.push(format!("tolerances.{k}: unknown for {}", info.name));
                }
            }
            for (k, v) in &self.options {
                match info.options.iter().find(|o| o.key == k) {
                    None => e.push(format!("options.{k}: unknown for {}", info.name)),
                    Some(o) => {
                        let ok = match v {
                            OptionValue::Number(x) => x.is_finite() && !o.list,
                            OptionValue::List(xs) => !xs.is_empty() && xs.iter().all(|x| x.is_finite()) && o.list,
                        };
                        if !ok {
                            let want = if o.list { "a nonempty list of numbers" } else { "a number" };
                            e.push(format!("options.{k}: must be {want}"));
                        }
                    }
                }
            }
            if info.needs_corpus && c.sides.is_empty() && c.rough_sides.is_empty() && c.files.is_empty() {
                e.push(format!("corpus: {} needs at least one atom", info.name));
            }
            if info.needs_corpus && !c.sides.is_empty() && c.per_side == 0 {
                e.push("corpus.per_side: must be at least 1".into());
            }
            if info.needs_symbol && self.symbol.is_none() {
                e.push(format!("symbol: required by {}", info.name));
            }
        }
        if e.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(e))
        }
    }

    pub fn grid(&self) -> Result<Grid> {
        Grid::new(self.grid.dim, self.grid.half_width, self.grid.samples)
    }

    pub fn morrey_params(&self) -> Result<MorreyParams> {
        MorreyParams::new(self.params.q, self.params.lambda)
    }

    pub fn family(&self, grid: &Grid) -> Result<CubeFamily> {
        match &self.family {
            FamilyConfig::Dyadic { j_min, j_max } => enumerate_dyadic_cubes(grid, *j_min, *j_max),
            FamilyConfig::Translated { sides, offsets } => translate_cube_family(grid, sides, *offsets),
        }
    }

    pub fn ladder(&self) -> Result<ScaleLadder> {
        let l = &self.ladder;
        if l.truncated {
            ScaleLadder::truncated(l.j_lo, l.j_hi)
        } else {
            ScaleLadder::dyadic(l.j_lo, l.j_hi)
        }
    }

    /// Tolerance override or the experiment default.
    pub fn tolerance(&self, key: &str) -> f64 {
        if let Some(v) = self.tolerances.get(key) {
            return *v;
        }
        self.info()
            .ok()
            .and_then(|i| i.tolerances.iter().find(|t| t.key == key))
            .map(|t| t.default)
            .unwrap_or(f64::NAN)
    }

    pub fn number(&self, key: &str) -> Option<f64> {
        match self.options.get(key) {
            Some(OptionValue::Number(x)) => Some(*x),
            Some(OptionValue::List(xs)) if xs.len() == 1 => Some(xs[0]),
            _ => None,
        }
    }

    pub fn list(&self, key: &str) -> Option<Vec<f64>> {
        match self.options.get(key) {
            Some(OptionValue::List(xs)) => Some(xs.clone()),
            Some(OptionValue::Number(x)) => Some(vec![*x]),
            None => None,
        }
    }
}

fn section_check(key: &str, value: &toml::Value) -> std::result::Result<(), String> {
    let v = value.clone();
    let r = match key {
        "grid" => v.try_into::<GridConfig>().map(|_| ()),
        "params" => v.try_into::<ParamsConfig>().map(|_| ()),
        "family" => v.try_into::<FamilyConfig>().map(|_| ()),
        "ladder" => v.try_into::<LadderConfig>().map(|_| ()),
        "corpus" => v.try_into::<CorpusConfig>().map(|_| ()),
        "symbol" => v.try_into::<SymbolConfig>().map(|_| ()),
        "output" => v.try_into::<OutputConfig>().map(|_| ()),
        _ => Ok(()),
    };
    r.map_err(|e| format!("{key}: {}", e.message()))
}
