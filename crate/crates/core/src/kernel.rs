//! Exact transition matrices of the catalog kernels on small rings.
//!
//! State `s` encodes the configuration with `eta(x) = (s >> x) & 1`.

use crate::environment::{EnvKind, EnvironmentSpec};
use crate::error::{invalid, Error, Result};

pub const MAX_MATRIX_SITES: usize = 12;
pub const MAX_MIRROR_SITES: usize = 10;

/// Dense row-major stochastic matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Kernel {
    dim: usize,
    data: Vec<f64>,
}

impl Kernel {
    pub fn zeros(dim: usize) -> Self {
        Self {
            dim,
            data: vec![0.0; dim * dim],
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut k = Self::zeros(dim);
        for i in 0..dim {
            k.data[i * dim + i] = 1.0;
        }
        k
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let dim = rows.len();
        if rows.iter().any(|r| r.len() != dim) {
            return Err(invalid("kernel rows must form a square matrix"));
        }
        Ok(Self {
            dim,
            data: rows.concat(),
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn get(&self, a: usize, b: usize) -> f64 {
        self.data[a * self.dim + b]
    }

    #[inline]
    pub fn add(&mut self, a: usize, b: usize, value: f64) {
        self.data[a * self.dim + b] += value;
    }

    pub fn row(&self, a: usize) -> &[f64] {
        &self.data[a * self.dim..(a + 1) * self.dim]
    }

    pub fn max_row_sum_error(&self) -> f64 {
        (0..self.dim)
            .map(|a| (self.row(a).iter().sum::<f64>() - 1.0).abs())
            .fold(0.0, f64::max)
    }

    pub fn matmul(&self, other: &Kernel) -> Kernel {
        assert_eq!(self.dim, other.dim);
        let dim = self.dim;
        let mut out = Kernel::zeros(dim);
        for a in 0..dim {
            let dst = &mut out.data[a * dim..(a + 1) * dim];
            for (b, &w) in self.row(a).iter().enumerate() {
                if w != 0.0 {
                    for (d, &v) in dst.iter_mut().zip(other.row(b)) {
                        *d += w * v;
                    }
                }
            }
        }
        out
    }

    pub fn pow(&self, exponent: usize) -> Kernel {
        (0..exponent).fold(Kernel::identity(self.dim), |acc, _| acc.matmul(self))
    }

    /// Row vector times matrix.
    pub fn left_apply(&self, v: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.dim];
        for (a, &w) in v.iter().enumerate() {
            if w != 0.0 {
                for (o, &k) in out.iter_mut().zip(self.row(a)) {
                    *o += w * k;
                }
            }
        }
        out
    }
}

#[inline]
pub fn config_to_state(config: &[u8]) -> usize {
    config
        .iter()
        .enumerate()
        .fold(0, |s, (x, &b)| s | ((b as usize) << x))
}

#[inline]
pub fn state_to_config(state: usize, size: usize) -> Vec<u8> {
    (0..size).map(|x| ((state >> x) & 1) as u8).collect()
}

#[inline]
fn bit(state: usize, x: usize) -> usize {
    (state >> x) & 1
}

/// Sparse rows of one random-scan sub-update.
fn sub_update_rows(spec: &EnvironmentSpec) -> Vec<Vec<(usize, f64)>> {
    let size = spec.size;
    let n = 1usize << size;
    let p = spec.p;
    let share = 1.0 / size as f64;
    (0..n)
        .map(|s| {
            let mut row: Vec<(usize, f64)> = Vec::with_capacity(2 * size + 1);
            match spec.kind {
                EnvKind::FrozenBernoulli | EnvKind::IidRefresh => row.push((s, 1.0)),
                EnvKind::SsepRandomScan => {
                    for e in 0..size {
                        let f = (e + 1) % size;
                        let swapped = if bit(s, e) != bit(s, f) {
                            s ^ (1 << e) ^ (1 << f)
                        } else {
                            s
                        };
                        row.push((swapped, 0.5 * share));
                        row.push((s, 0.5 * share));
                    }
                }
                EnvKind::EastRandomScan => {
                    for x in 0..size {
                        if bit(s, (x + 1) % size) == 0 {
                            row.push((s | (1 << x), p * share));
                            row.push((s & !(1 << x), (1.0 - p) * share));
                        } else {
                            row.push((s, share));
                        }
                    }
                }
            }
            row.sort_unstable_by_key(|&(t, _)| t);
            let mut merged: Vec<(usize, f64)> = Vec::with_capacity(row.len());
            for (t, w) in row {
                match merged.last_mut() {
                    Some((last, acc)) if *last == t => *acc += w,
                    _ => merged.push((t, w)),
                }
            }
            merged
        })
        .collect()
}

/// Product Bernoulli(`p`) weights over all `2^L` states.
fn product_bernoulli(size: usize, p: f64) -> Vec<f64> {
    (0..1usize << size)
        .map(|s| {
            let ones = s.count_ones() as i32;
            p.powi(ones) * (1.0 - p).powi(size as i32 - ones)
        })
        .collect()
}

/// Stationary measure of the environment over all `2^L` states: product
/// Bernoulli, conditioned on not all-ones for the East model.
pub fn stationary_measure(spec: &EnvironmentSpec) -> Result<Vec<f64>> {
    spec.validate()?;
    guard(spec.size, MAX_MATRIX_SITES, "stationary measure sites")?;
    let mut pi = product_bernoulli(spec.size, spec.p);
    if spec.kind == EnvKind::EastRandomScan {
        let last = pi.len() - 1;
        pi[last] = 0.0;
        let total: f64 = pi.iter().sum();
        pi.iter_mut().for_each(|w| *w /= total);
    }
    Ok(pi)
}

fn guard(size: usize, limit: usize, what: &'static str) -> Result<()> {
    if size > limit {
        Err(Error::Capacity {
            what,
            limit,
            got: size,
        })
    } else {
        Ok(())
    }
}

/// One walker-step kernel (`substeps_k` sub-updates composed) as a dense
/// `2^L x 2^L` matrix. For the East model the all-ones state is kept as an
/// absorbing row with zero stationary weight.
pub fn transition_matrix(spec: &EnvironmentSpec) -> Result<Kernel> {
    spec.validate()?;
    guard(spec.size, MAX_MATRIX_SITES, "transition matrix sites")?;
    let n = 1usize << spec.size;
    match spec.kind {
        EnvKind::FrozenBernoulli => return Ok(Kernel::identity(n)),
        EnvKind::IidRefresh => {
            let pi = product_bernoulli(spec.size, spec.p);
            return Ok(Kernel {
                dim: n,
                data: (0..n).flat_map(|_| pi.iter().copied()).collect(),
            });
        }
        _ => {}
    }
    let sparse = sub_update_rows(spec);
    let mut k = Kernel::zeros(n);
    for (a, row) in sparse.iter().enumerate() {
        for &(b, w) in row {
            k.add(a, b, w);
        }
    }
    for _ in 1..spec.effective_substeps() {
        let mut next = Kernel::zeros(n);
        for a in 0..n {
            let dst = &mut next.data[a * n..(a + 1) * n];
            for (b, &w) in k.row(a).iter().enumerate() {
                if w != 0.0 {
                    for &(c, v) in &sparse[b] {
                        dst[c] += w * v;
                    }
                }
            }
        }
        k = next;
    }
    Ok(k)
}

/// Largest `|pi[a] K[a,b] - pi[b] K[b,a]|` over all state pairs.
pub fn check_detailed_balance(kernel: &Kernel, pi: &[f64]) -> Result<f64> {
    let dim = kernel.dim();
    if pi.len() != dim {
        return Err(invalid(format!(
            "measure has {} entries, kernel has dimension {dim}",
            pi.len()
        )));
    }
    let total: f64 = pi.iter().sum();
    if (total - 1.0).abs() > 1e-12 {
        return Err(invalid(format!("measure sums to {total}, not 1")));
    }
    let mut worst = 0.0f64;
    for a in 0..dim {
        for b in (a + 1)..dim {
            let v = (pi[a] * kernel.get(a, b) - pi[b] * kernel.get(b, a)).abs();
            worst = worst.max(v);
        }
    }
    Ok(worst)
}

/// `c+ - c-` with `c± = E[eta_0(x) eta_lag(x ± 1)]` under the stationary
/// process, computed exactly. For a translation-invariant process that is
/// reversible the two correlations coincide, so this is zero up to rounding
/// for every catalog kind.
pub fn mirror_asymmetry_stat(spec: &EnvironmentSpec, lag: usize) -> Result<f64> {
    two_time_stat(spec, lag, |a, b, size| {
        let x = 0;
        let occ = bit(a, x) as f64;
        occ * (bit(b, (x + 1) % size) as f64 - bit(b, (x + size - 1) % size) as f64)
    })
}

/// `P(eta_lag(x) != eta_0(x), eta_0(x+1) = 1) - P(eta_lag(x) != eta_0(x), eta_0(x-1) = 1)`.
///
/// A three-point statistic that tells the two neighbours of a site apart.
/// It vanishes for mirror-symmetric dynamics; for the East model with one
/// sub-update per step and `lag = 1` the first term is zero while the second
/// is not.
pub fn constraint_asymmetry_stat(spec: &EnvironmentSpec, lag: usize) -> Result<f64> {
    two_time_stat(spec, lag, |a, b, size| {
        let x = 0;
        let flipped = (bit(a, x) != bit(b, x)) as usize as f64;
        flipped * (bit(a, (x + 1) % size) as f64 - bit(a, (x + size - 1) % size) as f64)
    })
}

fn two_time_stat(
    spec: &EnvironmentSpec,
    lag: usize,
    observable: impl Fn(usize, usize, usize) -> f64,
) -> Result<f64> {
    spec.validate()?;
    guard(spec.size, MAX_MIRROR_SITES, "mirror statistic sites")?;
    if lag == 0 {
        return Err(invalid("lag must be positive"));
    }
    let pi = stationary_measure(spec)?;
    let k = transition_matrix(spec)?.pow(lag);
    let mut acc = 0.0;
    for (a, &w) in pi.iter().enumerate() {
        if w == 0.0 {
            continue;
        }
        for (b, &kab) in k.row(a).iter().enumerate() {
            if kab != 0.0 {
                acc += w * kab * observable(a, b, spec.size);
            }
        }
    }
    Ok(acc)
}
