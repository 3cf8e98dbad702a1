//! Exact speed on a finite ring from the stationary law of the joint
//! (environment, walker position mod L) chain.
//!
//! One joint step moves the walker using the current configuration and then
//! applies the environment kernel, the same order as the simulator.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::environment::{EnvKind, EnvironmentSpec};
use crate::error::{Error, Result};
use crate::kernel::{stationary_measure, transition_matrix, Kernel};
use crate::walk::check_epsilon;

pub const MAX_EAST_SITES: usize = 8;
pub const MAX_OTHER_SITES: usize = 7;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExactChainResult {
    /// `(configuration state, walker site)` for every entry of `stationary`.
    pub states: Vec<(usize, usize)>,
    pub stationary: Vec<f64>,
    pub exact_speed: f64,
    /// Stationary probability that the walker stands on an occupied site.
    pub occupied_probability: f64,
    /// Size of the joint state space, `(2^L - [east]) L`.
    pub dimension: usize,
    /// Max-norm of `pi J - pi` over the solved blocks.
    pub residual: f64,
    /// Number of closed environment classes solved separately.
    pub classes: usize,
}

/// Whether the exact oracle can handle `spec`.
pub fn oracle_supports(spec: &EnvironmentSpec) -> bool {
    spec.validate().is_ok()
        && spec.kind != EnvKind::FrozenBernoulli
        && spec.size <= size_limit(spec.kind)
}

fn size_limit(kind: EnvKind) -> usize {
    match kind {
        EnvKind::EastRandomScan => MAX_EAST_SITES,
        _ => MAX_OTHER_SITES,
    }
}

#[inline]
fn bit(state: usize, x: usize) -> usize {
    (state >> x) & 1
}

/// Partitions the support of `pi` into the communicating classes of `k`.
/// For a `pi`-reversible kernel every such class is closed.
fn classes(k: &Kernel, pi: &[f64]) -> Vec<Vec<usize>> {
    let n = k.dim();
    let mut label = vec![usize::MAX; n];
    let mut out = Vec::new();
    for s in 0..n {
        if pi[s] == 0.0 || label[s] != usize::MAX {
            continue;
        }
        let id = out.len();
        let mut members = vec![s];
        label[s] = id;
        let mut i = 0;
        while i < members.len() {
            let a = members[i];
            for (b, &w) in k.row(a).iter().enumerate() {
                if w > 0.0 && pi[b] > 0.0 && label[b] == usize::MAX {
                    label[b] = id;
                    members.push(b);
                }
            }
            i += 1;
        }
        members.sort_unstable();
        out.push(members);
    }
    out
}

struct Block {
    states: Vec<(usize, usize)>,
    stationary: Vec<f64>,
    residual: f64,
}

fn solve_block(k: &Kernel, class: &[usize], size: usize, epsilon: f64) -> Result<Block> {
    let dim = class.len() * size;
    let mut index = vec![usize::MAX; k.dim()];
    for (i, &c) in class.iter().enumerate() {
        index[c] = i;
    }
    let at = |ci: usize, x: usize| ci * size + x;
    let states: Vec<(usize, usize)> = class
        .iter()
        .flat_map(|&c| (0..size).map(move |x| (c, x)))
        .collect();

    // transposed joint kernel, minus identity
    let mut a = DMatrix::<f64>::zeros(dim, dim);
    let mut transitions: Vec<Vec<(usize, f64)>> = Vec::with_capacity(dim);
    for (ci, &c) in class.iter().enumerate() {
        let env_row: Vec<(usize, f64)> = class
            .iter()
            .filter_map(|&d| {
                let w = k.get(c, d);
                (w > 0.0).then(|| (index[d], w))
            })
            .collect();
        for x in 0..size {
            let right = if bit(c, x) == 1 {
                0.5 + epsilon
            } else {
                0.5 - epsilon
            };
            let moves = [
                ((x + 1) % size, right),
                ((x + size - 1) % size, 1.0 - right),
            ];
            let mut row = Vec::with_capacity(2 * env_row.len());
            for &(nx, q) in &moves {
                if q == 0.0 {
                    continue;
                }
                for &(di, w) in &env_row {
                    row.push((at(di, nx), q * w));
                }
            }
            let i = at(ci, x);
            for &(j, w) in &row {
                a[(j, i)] += w;
            }
            transitions.push(row);
        }
    }
    for i in 0..dim {
        a[(i, i)] -= 1.0;
    }
    for j in 0..dim {
        a[(dim - 1, j)] = 1.0;
    }
    let mut rhs = DVector::<f64>::zeros(dim);
    rhs[dim - 1] = 1.0;
    let solution = a.lu().solve(&rhs).ok_or_else(|| {
        Error::Reducible("joint environment-walker chain has no unique stationary law".into())
    })?;
    let stationary: Vec<f64> = solution.iter().copied().collect();

    let mut image = vec![0.0; dim];
    for (i, row) in transitions.iter().enumerate() {
        for &(j, w) in row {
            image[j] += stationary[i] * w;
        }
    }
    let residual = image
        .iter()
        .zip(&stationary)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    if stationary.iter().any(|&v| v < -1e-10) || !residual.is_finite() || residual > 1e-8 {
        return Err(Error::Reducible(format!(
            "stationary solve failed (residual {residual:e})"
        )));
    }
    Ok(Block {
        states,
        stationary,
        residual,
    })
}

/// Exact asymptotic speed `2 eps (2 P[walker site occupied] - 1)` on a ring.
///
/// Environments with several closed classes (particle-number sectors of the
/// exclusion process) are solved class by class and mixed with the
/// stationary weight of each class, which is the law the simulator starts
/// from.
pub fn exact_speed(spec: &EnvironmentSpec, epsilon: f64) -> Result<ExactChainResult> {
    spec.validate()?;
    check_epsilon(epsilon)?;
    if spec.kind == EnvKind::FrozenBernoulli {
        return Err(Error::Reducible(
            "frozen-bernoulli has one closed class per configuration; \
             use the static-environment check instead"
                .into(),
        ));
    }
    let limit = size_limit(spec.kind);
    if spec.size > limit {
        return Err(Error::Capacity {
            what: "exact oracle sites",
            limit,
            got: spec.size,
        });
    }
    let size = spec.size;
    let k = transition_matrix(spec)?;
    let pi = stationary_measure(spec)?;
    let blocks = classes(&k, &pi);

    let mut states = Vec::new();
    let mut stationary = Vec::new();
    let mut residual = 0.0f64;
    for class in &blocks {
        let weight: f64 = class.iter().map(|&c| pi[c]).sum();
        let block = solve_block(&k, class, size, epsilon)?;
        residual = residual.max(block.residual * weight);
        states.extend(block.states);
        stationary.extend(block.stationary.into_iter().map(|v| v * weight));
    }
    let occupied_probability: f64 = states
        .iter()
        .zip(&stationary)
        .filter(|((c, x), _)| bit(*c, *x) == 1)
        .map(|(_, &w)| w)
        .sum();
    let east = (spec.kind == EnvKind::EastRandomScan) as usize;
    Ok(ExactChainResult {
        states,
        stationary,
        exact_speed: 2.0 * epsilon * (2.0 * occupied_probability - 1.0),
        occupied_probability,
        dimension: ((1usize << size) - east) * size,
        residual,
        classes: blocks.len(),
    })
}

/// `max |pi_plus(eta, x) - pi_minus(R eta, -x)|` where `R` reflects the ring.
/// Vanishes when the environment is mirror symmetric and the two results
/// were computed at opposite `eps`.
pub fn mirror_invariance_defect(
    plus: &ExactChainResult,
    minus: &ExactChainResult,
    size: usize,
) -> f64 {
    let reflect_site = |x: usize| (size - x) % size;
    let reflect_state = |c: usize| (0..size).fold(0, |acc, y| acc | (bit(c, y) << reflect_site(y)));
    let lookup: std::collections::HashMap<(usize, usize), f64> = minus
        .states
        .iter()
        .copied()
        .zip(minus.stationary.iter().copied())
        .collect();
    plus.states
        .iter()
        .zip(&plus.stationary)
        .map(|(&(c, x), &w)| {
            let mirrored = lookup
                .get(&(reflect_state(c), reflect_site(x)))
                .copied()
                .unwrap_or(0.0);
            (w - mirrored).abs()
        })
        .fold(0.0, f64::max)
}
