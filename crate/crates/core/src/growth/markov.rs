//! Exact expected cost of the growth rules as an absorbing Markov chain.
//!
//! Transient states are sorted pools of cluster sizes below the target.
//! Expected blocks and link attempts solve `(I − Q) x = r`. Generation
//! attempts follow from Wald's identity, `E[blocks] / p_block`.

use std::collections::{BTreeMap, VecDeque};

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::{rates, GrowthPolicy, Pairing};
use crate::error::{Error, Result};

pub const DEFAULT_MAX_STATES: usize = 2000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MarkovCost {
    pub expected_blocks: f64,
    pub expected_link_attempts: f64,
    pub expected_generation_attempts: f64,
    pub expected_steps: f64,
    pub transient_states: usize,
}

type Pool = Vec<u32>;

/// Successor pools with probabilities. `None` marks absorption.
struct Step {
    block: bool,
    next: Vec<(f64, Option<Pool>)>,
}

fn with(pool: &[u32], extra: &[u32], target: u32) -> Option<Pool> {
    let mut p: Pool = pool.iter().chain(extra).copied().filter(|&c| c >= 2).collect();
    p.sort_unstable();
    (p.last().copied().unwrap_or(0) < target).then_some(p)
}

fn step(policy: &GrowthPolicy, p_link: f64, pool: &[u32]) -> Step {
    let n = pool.len();
    if n < policy.pool_size {
        return Step { block: true, next: vec![(1.0, with(pool, &[policy.block_size], policy.target))] };
    }
    let pairs: Vec<(usize, usize)> = match policy.pairing {
        Pairing::SmallestFirst => vec![(0, 1)],
        Pairing::LargestFirst => vec![(n - 2, n - 1)],
        Pairing::Random => (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect(),
    };
    let w = 1.0 / pairs.len() as f64;
    let mut next = Vec::with_capacity(2 * pairs.len());
    for (i, j) in pairs {
        let rest: Pool = pool.iter().enumerate().filter(|&(k, _)| k != i && k != j).map(|(_, &c)| c).collect();
        let (a, b) = (pool[i], pool[j]);
        if p_link > 0.0 {
            next.push((w * p_link, with(&rest, &[a + b], policy.target)));
        }
        if p_link < 1.0 {
            next.push((w * (1.0 - p_link), with(&rest, &[a - 1, b - 1], policy.target)));
        }
    }
    Step { block: false, next }
}

/// Solves the chain for `policy`. Fails when more than `max_states`
/// transient pools are reachable or when the target is unreachable.
pub fn expected_cost_markov(policy: &GrowthPolicy, eta: f64, eta_link: f64, max_states: usize) -> Result<MarkovCost> {
    let r = rates(policy, eta, eta_link)?;
    if r.block == 0.0 {
        return Err(Error::NonAbsorbingChain);
    }

    let mut index: BTreeMap<Pool, usize> = BTreeMap::new();
    let mut steps: Vec<Step> = Vec::new();
    let mut queue = VecDeque::from([Pool::new()]);
    index.insert(Pool::new(), 0);
    while let Some(pool) = queue.pop_front() {
        let s = step(policy, r.link, &pool);
        for (_, next) in &s.next {
            if let Some(p) = next {
                if !index.contains_key(p) {
                    if index.len() >= max_states {
                        return Err(Error::StateSpaceTooLarge { bound: max_states });
                    }
                    index.insert(p.clone(), index.len());
                    queue.push_back(p.clone());
                }
            }
        }
        steps.push(s);
    }

    let n = steps.len();
    let mut a = DMatrix::<f64>::identity(n, n);
    let mut rhs = DMatrix::<f64>::zeros(n, 2);
    let mut absorbs = vec![false; n];
    let mut preds: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (k, s) in steps.iter().enumerate() {
        rhs[(k, if s.block { 0 } else { 1 })] = 1.0;
        for (prob, next) in &s.next {
            match next {
                Some(p) => {
                    let j = index[p];
                    a[(k, j)] -= prob;
                    preds[j].push(k);
                }
                None => absorbs[k] = true,
            }
        }
    }

    // Every transient state must be able to reach absorption.
    let mut reach = absorbs.clone();
    let mut frontier: Vec<usize> = (0..n).filter(|&k| absorbs[k]).collect();
    while let Some(j) = frontier.pop() {
        for &k in &preds[j] {
            if !reach[k] {
                reach[k] = true;
                frontier.push(k);
            }
        }
    }
    if !reach.iter().all(|&x| x) {
        return Err(Error::NonAbsorbingChain);
    }

    let x = a.lu().solve(&rhs).ok_or(Error::NonAbsorbingChain)?;
    let start: DVector<f64> = x.row(0).transpose();
    let (blocks, links) = (start[0], start[1]);
    if !(blocks.is_finite() && links.is_finite()) {
        return Err(Error::NonAbsorbingChain);
    }
    let generation = blocks / r.block;
    Ok(MarkovCost {
        expected_blocks: blocks,
        expected_link_attempts: links,
        expected_generation_attempts: generation,
        expected_steps: generation + links,
        transient_states: n,
    })
}
