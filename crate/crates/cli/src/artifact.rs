//! Policy artifact written by `solve` and read by `simulate`.

use aos_core::lagrange::RelaxedSolution;
use aos_core::{OccupationSolution, TransmitPolicy};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Artifact {
    Relaxed {
        #[serde(rename = "N")]
        n: usize,
        eta1: f64,
        eta2: f64,
        alpha: f64,
        #[serde(rename = "J_re")]
        j_re: f64,
        #[serde(rename = "D_re")]
        d_re: f64,
        nodes: Vec<NodePolicy>,
    },
    FixedEta {
        eta: f64,
        #[serde(rename = "J")]
        j: f64,
        #[serde(rename = "D")]
        d: f64,
        nodes: Vec<NodePolicy>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodePolicy {
    #[serde(rename = "S_max")]
    pub s_max: usize,
    pub xi: Vec<Vec<f64>>,
    pub mu: Vec<Vec<f64>>,
    pub nu: Vec<Vec<f64>>,
    #[serde(rename = "J", skip_serializing_if = "Option::is_none", default)]
    pub j: Option<f64>,
    #[serde(rename = "D", skip_serializing_if = "Option::is_none", default)]
    pub d: Option<f64>,
}

impl Artifact {
    pub fn relaxed(n: usize, sol: &RelaxedSolution) -> Self {
        let nodes = sol
            .mixed
            .iter()
            .zip(&sol.policies)
            .map(|(m, p)| NodePolicy {
                s_max: m.s_max,
                xi: p.xi.clone(),
                mu: m.mu.clone(),
                nu: m.nu.clone(),
                j: None,
                d: None,
            })
            .collect();
        Artifact::Relaxed {
            n,
            eta1: sol.bracket.eta1,
            eta2: sol.bracket.eta2,
            alpha: sol.alpha,
            j_re: sol.j_re,
            d_re: sol.d_re,
            nodes,
        }
    }

    pub fn fixed_eta(eta: f64, sols: &[OccupationSolution]) -> Self {
        let nodes = sols
            .iter()
            .map(|s| NodePolicy {
                s_max: s.s_max,
                xi: aos_core::extract_policy(s).xi,
                mu: s.mu.clone(),
                nu: s.nu.clone(),
                j: Some(s.j),
                d: Some(s.d),
            })
            .collect();
        Artifact::FixedEta {
            eta,
            j: sols.iter().map(|s| s.j).sum(),
            d: sols.iter().map(|s| s.d).sum(),
            nodes,
        }
    }

    pub fn nodes(&self) -> &[NodePolicy] {
        match self {
            Artifact::Relaxed { nodes, .. } | Artifact::FixedEta { nodes, .. } => nodes,
        }
    }

    pub fn policies(&self) -> Vec<TransmitPolicy> {
        self.nodes()
            .iter()
            .map(|n| TransmitPolicy { s_max: n.s_max, xi: n.xi.clone() })
            .collect()
    }
}
