//! Probabilistic linking of two cluster states through one qubit of each.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{ensure, Result};

/// A cluster state tracked by its qubit count only.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Cluster {
    pub size: u32,
}

impl Cluster {
    pub fn new(size: u32) -> Self {
        Self { size }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LinkOutcome {
    Merged(Cluster),
    /// Both link qubits were measured out. A cluster left with no qubits is
    /// consumed (`None`).
    Failed {
        remnants: [Option<Cluster>; 2],
    },
}

/// `η′/8`: one photon shared by two link qubits and a single click.
pub fn link_success_probability(eta_link: f64) -> Result<f64> {
    ensure((0.0..=1.0).contains(&eta_link), "eta_link", eta_link, "must lie in [0, 1]")?;
    Ok(eta_link / 8.0)
}

pub fn link_clusters<R: Rng + ?Sized>(a: Cluster, b: Cluster, eta_link: f64, rng: &mut R) -> Result<LinkOutcome> {
    let p = link_success_probability(eta_link)?;
    ensure(a.size > 0, "cluster_a", a.size as f64, "must be nonempty")?;
    ensure(b.size > 0, "cluster_b", b.size as f64, "must be nonempty")?;
    if rng.gen::<f64>() < p {
        return Ok(LinkOutcome::Merged(Cluster::new(a.size + b.size)));
    }
    let shrink = |c: Cluster| (c.size > 1).then(|| Cluster::new(c.size - 1));
    Ok(LinkOutcome::Failed { remnants: [shrink(a), shrink(b)] })
}
