//! JSON system configuration.
//!
//! Either an explicit node list
//! `{"M": 2, "N": 1, "T": 1000, "seed": 7, "nodes": [{"lambda": 0.5, "omega": [1, 10], "P": [[0.9, 0.1], [0.1, 0.9]]}, ...]}`
//! or the 40-node evaluation preset `{"paper_preset": {"q": 0.1}, "N": 6, "T": 100000, "seed": 7}`.

use std::path::Path;

use aos_core::{make_paper_config, AosError, NodeConfig, SystemConfig, WeightChain};
use serde::Deserialize;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    #[serde(rename = "M")]
    pub m: Option<usize>,
    #[serde(rename = "N")]
    pub n: usize,
    #[serde(rename = "T", default = "default_horizon")]
    pub t: u64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub nodes: Vec<NodeEntry>,
    pub paper_preset: Option<PaperPreset>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NodeEntry {
    pub lambda: f64,
    pub omega: Vec<f64>,
    #[serde(rename = "P")]
    pub p: Vec<Vec<f64>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PaperPreset {
    pub q: f64,
}

fn default_horizon() -> u64 {
    100_000
}

impl ConfigFile {
    pub fn into_system(self) -> Result<SystemConfig, AosError> {
        let cfg = match self.paper_preset {
            Some(preset) => {
                if !self.nodes.is_empty() {
                    return Err(AosError::Config("give either nodes or paper_preset, not both".into()));
                }
                make_paper_config(preset.q, self.n, self.t, self.seed)?
            }
            None => {
                let nodes = self
                    .nodes
                    .into_iter()
                    .map(|e| NodeConfig::new(e.lambda, WeightChain::new(e.p, e.omega)?))
                    .collect::<Result<Vec<_>, _>>()?;
                SystemConfig::new(nodes, self.n, self.t, self.seed)?
            }
        };
        if let Some(m) = self.m {
            if m != cfg.num_nodes() {
                return Err(AosError::Config(format!(
                    "M = {m} but the configuration has {} nodes",
                    cfg.num_nodes()
                )));
            }
        }
        Ok(cfg)
    }
}

pub fn load(path: &Path) -> Result<SystemConfig, AosError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| AosError::Config(format!("cannot read {}: {e}", path.display())))?;
    parse(&text)
}

pub fn parse(text: &str) -> Result<SystemConfig, AosError> {
    let file: ConfigFile =
        serde_json::from_str(text).map_err(|e| AosError::Config(format!("invalid config: {e}")))?;
    file.into_system()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn explicit_nodes() {
        let cfg = parse(
            r#"{"M": 2, "N": 1, "T": 50, "seed": 3, "nodes": [
                {"lambda": 0.5, "omega": [1, 10], "P": [[0.9, 0.1], [0.1, 0.9]]},
                {"lambda": 0.2, "omega": [2], "P": [[1.0]]}]}"#,
        )
        .unwrap();
        assert_eq!(cfg.num_nodes(), 2);
        assert_eq!(cfg.horizon, 50);
        assert_eq!(cfg.nodes[1].chain.weights(), &[2.0]);
    }

    #[test]
    fn preset_expands() {
        let cfg = parse(r#"{"paper_preset": {"q": 0.1}, "N": 6, "seed": 1}"#).unwrap();
        assert_eq!(cfg.num_nodes(), 40);
        assert_eq!(cfg.horizon, 100_000);
    }

    #[test]
    fn bad_configs() {
        assert!(parse("{").is_err());
        assert!(parse(r#"{"paper_preset": {"q": 1.5}, "N": 6}"#).is_err());
        assert!(parse(r#"{"M": 3, "paper_preset": {"q": 0.5}, "N": 6}"#).is_err());
        assert!(parse(r#"{"N": 1, "nodes": [{"lambda": 0.5, "omega": [1], "P": [[0.5]]}]}"#).is_err());
        assert!(parse(r#"{"N": 1, "nodes": []}"#).is_err());
        assert!(parse(r#"{"N": 1, "bogus": 1, "nodes": []}"#).is_err());
    }
}
