use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use toml::{Table, Value};

use super::CliError;
use crate::entropy_alf::Budget;
use crate::torus::{CatMap, PartitionSpec};
use crate::weyl::uv_solutions;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MapConfig {
    pub a: i64,
    pub b: i64,
    pub c: i64,
    pub d: i64,
    /// Index into the admissible `(u, v)` solutions, canonical first.
    pub uv_choice: usize,
}

impl Default for MapConfig {
    fn default() -> Self {
        MapConfig { a: 1, b: 1, c: 1, d: 2, uv_choice: 0 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AxiomsConfig {
    /// Random instances per `N` for the algebraic identities.
    pub instances: usize,
    /// Scale the first amplitude of the fundamental vector (fault injection).
    pub corrupt_fundamental: Option<f64>,
}

impl Default for AxiomsConfig {
    fn default() -> Self {
        AxiomsConfig { instances: 50, corrupt_fundamental: None }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SemiclassicsConfig {
    /// Largest evolution step in the Egorov sweep.
    pub k_max: usize,
    /// Residual above which the Egorov correspondence counts as broken.
    pub threshold: f64,
}

impl Default for SemiclassicsConfig {
    fn default() -> Self {
        SemiclassicsConfig { k_max: 8, threshold: 0.1 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AlfConfig {
    /// Dimension of the long saturation run.
    pub saturation_n: usize,
    /// Refinement depth of the saturation run.
    pub saturation_k: usize,
    /// Deepest classical refinement tabulated.
    pub classical_k: usize,
    pub max_chains: usize,
    pub max_entries: usize,
}

impl Default for AlfConfig {
    fn default() -> Self {
        let budget = Budget::default();
        AlfConfig { saturation_n: 32, saturation_k: 5, classical_k: 8, max_chains: budget.max_chains, max_entries: budget.max_entries }
    }
}

impl AlfConfig {
    pub fn budget(&self) -> Budget {
        Budget { max_chains: self.max_chains, max_entries: self.max_entries }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub map: MapConfig,
    pub n_list: Vec<usize>,
    pub k_max: usize,
    pub q_side: usize,
    /// Window constant in `k ≤ α log N`; defaults to `1 / (2 log λ)`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    pub lattice: usize,
    pub subsample: usize,
    pub output: PathBuf,
    pub seed: u64,
    pub axioms: AxiomsConfig,
    pub semiclassics: SemiclassicsConfig,
    pub alf: AlfConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            map: MapConfig::default(),
            n_list: vec![8, 16, 32],
            k_max: 3,
            q_side: 2,
            alpha: None,
            lattice: 4096,
            subsample: 4,
            output: PathBuf::from("results"),
            seed: 0,
            axioms: AxiomsConfig::default(),
            semiclassics: SemiclassicsConfig::default(),
            alf: AlfConfig::default(),
        }
    }
}

impl ExperimentConfig {
    /// Reads `path` (if any), applies `--a.b=value` overrides and validates.
    pub fn load(path: Option<&Path>, overrides: &[String]) -> Result<Self, CliError> {
        let mut table = match path {
            Some(p) => {
                let text = std::fs::read_to_string(p).map_err(|e| CliError::Config(format!("{}: {e}", p.display())))?;
                text.parse::<Table>().map_err(|e| CliError::Config(format!("{}: {e}", p.display())))?
            }
            None => Table::new(),
        };
        for o in overrides {
            apply_override(&mut table, o)?;
        }
        let config: ExperimentConfig = Value::Table(table).try_into().map_err(|e: toml::de::Error| CliError::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn cat_map(&self) -> Result<CatMap, CliError> {
        let m = &self.map;
        CatMap::new(m.a, m.b, m.c, m.d).map_err(|e| CliError::Config(format!("map: {e}")))
    }

    pub fn partition(&self) -> Result<PartitionSpec, CliError> {
        PartitionSpec::new(self.q_side).map_err(|e| CliError::Config(format!("q_side: {e}")))
    }

    pub fn alpha(&self) -> Result<f64, CliError> {
        Ok(self.alpha.unwrap_or(1.0 / (2.0 * self.cat_map()?.log_lambda())))
    }

    /// `N` values in ascending order without repeats.
    pub fn dims(&self) -> Vec<usize> {
        let mut v = self.n_list.clone();
        v.sort_unstable();
        v.dedup();
        v
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let map = self.cat_map()?;
        self.partition()?;
        let bad = |msg: String| Err(CliError::Config(msg));
        if self.n_list.is_empty() {
            return bad("n_list is empty".into());
        }
        if let Some(&n) = self.n_list.iter().find(|&&n| n < 2) {
            return bad(format!("n_list entry {n} < 2"));
        }
        for &n in &self.n_list {
            let count = uv_solutions(&map, n).len();
            if self.map.uv_choice >= count {
                return bad(format!("map.uv_choice = {} but N = {n} has {count} solutions", self.map.uv_choice));
            }
        }
        if self.k_max == 0 {
            return bad("k_max must be positive".into());
        }
        if self.lattice == 0 || self.subsample == 0 {
            return bad("lattice and subsample must be positive".into());
        }
        if let Some(a) = self.alpha {
            if !(a.is_finite() && a > 0.0) {
                return bad(format!("alpha = {a} must be positive"));
            }
        }
        if !(self.semiclassics.threshold.is_finite() && self.semiclassics.threshold > 0.0) {
            return bad("semiclassics.threshold must be positive".into());
        }
        if self.alf.saturation_n < 2 || self.alf.saturation_k == 0 || self.alf.classical_k < 2 {
            return bad("alf.saturation_n >= 2, alf.saturation_k >= 1 and alf.classical_k >= 2 required".into());
        }
        if let Some(s) = self.axioms.corrupt_fundamental {
            if !s.is_finite() {
                return bad("axioms.corrupt_fundamental must be finite".into());
            }
        }
        Ok(())
    }

    /// Pre-checks of the entropy sweeps: grid divisibility and memory budget.
    pub fn validate_entropy(&self, with_budget: bool) -> Result<(), CliError> {
        let ell = self.q_side * self.q_side + 1;
        let budget = self.alf.budget();
        let mut dims = self.dims();
        if with_budget {
            dims.push(self.alf.saturation_n);
        }
        for &n in &dims {
            if n % self.q_side != 0 {
                return Err(CliError::Config(format!("q_side = {} does not divide N = {n}", self.q_side)));
            }
        }
        if with_budget {
            for &n in &self.dims() {
                budget.check(ell, self.k_max, n).map_err(|e| CliError::Config(format!("N = {n}: {e}")))?;
            }
            budget.check(ell, self.alf.saturation_k, self.alf.saturation_n).map_err(|e| CliError::Config(format!("saturation run: {e}")))?;
        }
        Ok(())
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// SHA-256 of the canonical TOML form.
    pub fn hash(&self) -> String {
        format!("{:x}", Sha256::digest(self.to_toml().as_bytes()))
    }
}

/// Parses `--a.b=value`; values are TOML literals, bare words are strings.
pub fn apply_override(table: &mut Table, arg: &str) -> Result<(), CliError> {
    let body = arg.strip_prefix("--").ok_or_else(|| CliError::Config(format!("override `{arg}` must start with --")))?;
    let (path, raw) = body.split_once('=').ok_or_else(|| CliError::Config(format!("override `{arg}` needs =value")))?;
    let value = match format!("v = {raw}").parse::<Table>() {
        Ok(mut t) => t.remove("v").expect("parsed key"),
        Err(_) => Value::String(raw.to_string()),
    };
    let keys: Vec<&str> = path.split('.').collect();
    if keys.iter().any(|k| k.is_empty()) {
        return Err(CliError::Config(format!("bad override path `{path}`")));
    }
    let mut cursor = table;
    for key in &keys[..keys.len() - 1] {
        let entry = cursor.entry(key.to_string()).or_insert_with(|| Value::Table(Table::new()));
        cursor = entry.as_table_mut().ok_or_else(|| CliError::Config(format!("`{key}` in `{path}` is not a table")))?;
    }
    cursor.insert(keys[keys.len() - 1].to_string(), value);
    Ok(())
}
