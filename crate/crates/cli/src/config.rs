use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use fablab::{FabConfig, GenConfig, LabSettings, PriorSpec};
use serde::Deserialize;

/// Experiment configuration shared by `lab dominance` and `lab selection`.
/// Keys a subcommand does not use are accepted but ignored; unknown keys
/// are rejected.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub gen: GenConfig,
    #[serde(default)]
    pub fab: FabConfig,
    #[serde(default)]
    pub priors: Vec<PriorSpec>,
    #[serde(default)]
    pub replications: Vec<usize>,
    /// Largest block count in the posterior support; defaults to `gen.n`.
    pub k_max: Option<usize>,
    #[serde(default = "default_plugin_floor_rel")]
    pub plugin_floor_rel: f64,
    #[serde(default)]
    pub d_grid: Vec<f64>,
    #[serde(default)]
    pub seeds: Vec<u64>,
    /// Output path used when `--out` is not given.
    pub out: Option<PathBuf>,
}

fn default_plugin_floor_rel() -> f64 {
    LabSettings::DEFAULT_PLUGIN_FLOOR_REL
}

impl RunConfig {
    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("cannot read config {}", path.display()))?;
        let cfg: RunConfig =
            serde_json::from_str(&text).with_context(|| format!("invalid config {}", path.display()))?;
        cfg.gen.validate()?;
        if !(cfg.plugin_floor_rel.is_finite() && cfg.plugin_floor_rel > 0.0) {
            bail!("plugin_floor_rel must be positive, got {}", cfg.plugin_floor_rel);
        }
        Ok(cfg)
    }

    pub fn validate_dominance(&self) -> anyhow::Result<()> {
        if self.priors.is_empty() {
            bail!("dominance needs a non-empty `priors` list");
        }
        if self.replications.is_empty() || self.replications.contains(&0) {
            bail!("dominance needs a non-empty `replications` list of positive integers");
        }
        if self.k_max == Some(0) {
            bail!("k_max must be at least 1");
        }
        for spec in &self.priors {
            spec.validate()?;
        }
        Ok(())
    }

    pub fn validate_selection(&self) -> anyhow::Result<()> {
        if self.d_grid.is_empty() {
            bail!("selection needs a non-empty `d_grid`");
        }
        if let Some(d) = self.d_grid.iter().find(|d| !(d.is_finite() && **d >= 0.0)) {
            bail!("d_grid values must be non-negative, got {d}");
        }
        if self.seeds.is_empty() {
            bail!("selection needs a non-empty `seeds` list");
        }
        FabConfig { d: self.d_grid[0], ..self.fab.clone() }.validate()?;
        Ok(())
    }

    pub fn settings(&self, budget: fablab::Budget) -> LabSettings {
        LabSettings { budget, plugin_floor_rel: self.plugin_floor_rel }
    }

    pub fn output_path(&self, flag: Option<PathBuf>) -> anyhow::Result<PathBuf> {
        match flag.or_else(|| self.out.clone()) {
            Some(p) => Ok(p),
            None => bail!("no output path: pass --out or set `out` in the config"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_keys_are_named() {
        let err = serde_json::from_str::<RunConfig>(
            r#"{"gen":{"seed":0,"k_true":2,"n":8,"dims":1,"separation":4,"variance":1},"replicatons":[1]}"#,
        )
        .unwrap_err();
        assert!(err.to_string().contains("replicatons"), "{err}");
    }

    #[test]
    fn defaults_fill_in() {
        let cfg: RunConfig = serde_json::from_str(
            r#"{"gen":{"seed":0,"k_true":2,"n":8,"dims":1,"separation":4,"variance":1},
                "priors":[{"kind":"crp"},{"kind":"fic","dc":2}],"replications":[1,2]}"#,
        )
        .unwrap();
        assert_eq!(cfg.plugin_floor_rel, LabSettings::DEFAULT_PLUGIN_FLOOR_REL);
        assert_eq!(cfg.fab, FabConfig::default());
        assert!(cfg.validate_dominance().is_ok());
        assert!(cfg.validate_selection().is_err());
    }
}
