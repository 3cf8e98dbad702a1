//! Dynamic environments on a ring of `L` sites.
//!
//! A walker at integer site `x` reads the ring site `x mod L`. Every kind in
//! the catalog is translation invariant and reversible with respect to
//! product Bernoulli(`p`) measure (conditioned away from the all-ones state
//! for the East model).

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::rng::{open_unit_from_bits, unit_from_bits, RandomSource, TimeSlice};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EnvKind {
    #[serde(alias = "frozen")]
    FrozenBernoulli,
    #[serde(alias = "iid")]
    IidRefresh,
    #[serde(alias = "ssep")]
    SsepRandomScan,
    #[serde(alias = "east")]
    EastRandomScan,
}

impl EnvKind {
    pub const ALL: [EnvKind; 4] = [
        EnvKind::FrozenBernoulli,
        EnvKind::IidRefresh,
        EnvKind::SsepRandomScan,
        EnvKind::EastRandomScan,
    ];

    pub fn name(self) -> &'static str {
        match self {
            EnvKind::FrozenBernoulli => "frozen-bernoulli",
            EnvKind::IidRefresh => "iid-refresh",
            EnvKind::SsepRandomScan => "ssep-random-scan",
            EnvKind::EastRandomScan => "east-random-scan",
        }
    }

    /// Accepts the canonical names and the short aliases.
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "frozen" | "frozen-bernoulli" => Some(EnvKind::FrozenBernoulli),
            "iid" | "iid-refresh" => Some(EnvKind::IidRefresh),
            "ssep" | "ssep-random-scan" => Some(EnvKind::SsepRandomScan),
            "east" | "east-random-scan" => Some(EnvKind::EastRandomScan),
            _ => None,
        }
    }
}

impl std::fmt::Display for EnvKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

fn default_substeps() -> usize {
    1
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnvironmentSpec {
    pub kind: EnvKind,
    #[serde(rename = "L")]
    pub size: usize,
    pub p: f64,
    #[serde(default = "default_substeps")]
    pub substeps_k: usize,
}

impl EnvironmentSpec {
    pub fn new(kind: EnvKind, size: usize, p: f64) -> Self {
        Self {
            kind,
            size,
            p,
            substeps_k: 1,
        }
    }

    pub fn with_substeps(mut self, substeps_k: usize) -> Self {
        self.substeps_k = substeps_k;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.size < 2 {
            return Err(invalid(format!(
                "env.L must be at least 2, got {}",
                self.size
            )));
        }
        if self.size > u32::MAX as usize {
            return Err(invalid("env.L does not fit the site index range"));
        }
        if !(0.0..=1.0).contains(&self.p) {
            return Err(invalid(format!("env.p must lie in [0, 1], got {}", self.p)));
        }
        if self.substeps_k == 0 {
            return Err(invalid("env.substeps_k must be at least 1"));
        }
        if self.kind == EnvKind::EastRandomScan && self.p == 1.0 {
            return Err(invalid(
                "env.p = 1 is not allowed for east-random-scan: the stationary measure \
                 conditioned on not all-ones is empty",
            ));
        }
        Ok(())
    }

    /// Number of random-scan sub-updates per walker step. `iid-refresh`
    /// always performs exactly one full refresh.
    pub fn effective_substeps(&self) -> usize {
        match self.kind {
            EnvKind::IidRefresh => 1,
            _ => self.substeps_k,
        }
    }

    /// Whether `config` belongs to the state space of this kind.
    pub fn admits(&self, config: &[u8]) -> bool {
        config.len() == self.size
            && config.iter().all(|&b| b <= 1)
            && !(self.kind == EnvKind::EastRandomScan && config.iter().all(|&b| b == 1))
    }
}

/// One random-scan sub-update, as recorded by [`step_kernel_logged`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SubUpdate {
    pub substep: usize,
    /// Updated site (the left endpoint for an exclusion edge).
    pub site: usize,
    pub right_neighbor: u8,
    pub before: u8,
    pub after: u8,
}

/// Draws a configuration from the stationary measure: iid Bernoulli(`p`),
/// resampled until it is not all-ones for the East model.
pub fn sample_stationary(spec: &EnvironmentSpec, src: &RandomSource) -> Result<Vec<u8>> {
    spec.validate()?;
    let size = spec.size;
    let mut attempt = 0u64;
    loop {
        let slice = src.at_time(attempt);
        let config: Vec<u8> = (0..size)
            .map(|x| (slice.uniform(x as i64, 0) < spec.p) as u8)
            .collect();
        if spec.kind != EnvKind::EastRandomScan || config.contains(&0) {
            return Ok(config);
        }
        attempt += 1;
    }
}

#[inline(always)]
fn pick(u: f64, size: usize) -> usize {
    ((u * size as f64) as usize).min(size - 1)
}

/// Applies one sub-update drawn from `(u_site, u_coin)` to `config`.
/// Shared by the discrete random-scan kernel and the continuous clocks.
#[inline(always)]
fn sub_update(
    kind: EnvKind,
    p: f64,
    config: &mut [u8],
    u_site: f64,
    u_coin: f64,
    substep: usize,
) -> Option<SubUpdate> {
    let size = config.len();
    let site = pick(u_site, size);
    let right = (site + 1) % size;
    let before = config[site];
    let right_neighbor = config[right];
    match kind {
        EnvKind::FrozenBernoulli => return None,
        EnvKind::IidRefresh => {
            config[site] = (u_coin < p) as u8;
        }
        EnvKind::SsepRandomScan => {
            if u_coin < 0.5 {
                config.swap(site, right);
            }
        }
        EnvKind::EastRandomScan => {
            if right_neighbor == 0 {
                config[site] = (u_coin < p) as u8;
            }
        }
    }
    Some(SubUpdate {
        substep,
        site,
        right_neighbor,
        before,
        after: config[site],
    })
}

#[inline(always)]
fn step_slice(
    spec: &EnvironmentSpec,
    config: &mut [u8],
    slice: TimeSlice,
    mut log: Option<&mut Vec<SubUpdate>>,
) {
    match spec.kind {
        EnvKind::FrozenBernoulli => {}
        EnvKind::IidRefresh => {
            for (x, b) in config.iter_mut().enumerate() {
                *b = (slice.uniform(x as i64, 0) < spec.p) as u8;
            }
        }
        kind => {
            for j in 0..spec.substeps_k {
                let u_site = unit_from_bits(slice.bits(j as i64, 0));
                let u_coin = unit_from_bits(slice.bits(j as i64, 1));
                let rec = sub_update(kind, spec.p, config, u_site, u_coin, j);
                if let (Some(log), Some(rec)) = (log.as_deref_mut(), rec) {
                    log.push(rec);
                }
            }
        }
    }
}

/// Advances `config` in place by one walker step (`substeps_k` sub-updates).
/// The randomness is a pure function of `(src, n)`.
#[inline]
pub fn step_in_place(spec: &EnvironmentSpec, config: &mut [u8], src: &RandomSource, n: u64) {
    step_slice(spec, config, src.at_time(n), None);
}

pub fn step_kernel(
    spec: &EnvironmentSpec,
    config: &[u8],
    src: &RandomSource,
    n: u64,
) -> Result<Vec<u8>> {
    spec.validate()?;
    check_config(spec, config)?;
    let mut next = config.to_vec();
    step_in_place(spec, &mut next, src, n);
    Ok(next)
}

/// Like [`step_kernel`], also returning every random-scan sub-update.
pub fn step_kernel_logged(
    spec: &EnvironmentSpec,
    config: &[u8],
    src: &RandomSource,
    n: u64,
) -> Result<(Vec<u8>, Vec<SubUpdate>)> {
    spec.validate()?;
    check_config(spec, config)?;
    let mut next = config.to_vec();
    let mut log = Vec::with_capacity(spec.substeps_k);
    step_slice(spec, &mut next, src.at_time(n), Some(&mut log));
    Ok((next, log))
}

fn check_config(spec: &EnvironmentSpec, config: &[u8]) -> Result<()> {
    if config.len() != spec.size {
        return Err(invalid(format!(
            "configuration has {} sites, environment has L = {}",
            config.len(),
            spec.size
        )));
    }
    if config.iter().any(|&b| b > 1) {
        return Err(invalid("configuration entries must be 0 or 1"));
    }
    if !spec.admits(config) {
        return Err(invalid(
            "all-ones configuration is outside the East state space",
        ));
    }
    Ok(())
}

/// Read access to an environment as a space-time field.
pub trait Occupancy {
    fn occupied(&self, x: i64, n: u64) -> bool;
}

/// Space-time window `eta_n(x)`, `n = 0..=N`, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct OccupancyField {
    spec: EnvironmentSpec,
    rows: Vec<u8>,
}

impl OccupancyField {
    /// Builds a field from explicit rows, all of length `L`.
    pub fn from_rows(spec: EnvironmentSpec, rows: &[Vec<u8>]) -> Result<Self> {
        spec.validate()?;
        if rows.is_empty() {
            return Err(invalid("an occupancy field needs at least one row"));
        }
        let mut flat = Vec::with_capacity(rows.len() * spec.size);
        for row in rows {
            check_config(&spec, row)?;
            flat.extend_from_slice(row);
        }
        Ok(Self { spec, rows: flat })
    }

    pub fn spec(&self) -> &EnvironmentSpec {
        &self.spec
    }

    pub fn num_rows(&self) -> usize {
        self.rows.len() / self.spec.size
    }

    /// Largest walker horizon the field covers.
    pub fn horizon(&self) -> u64 {
        self.num_rows() as u64 - 1
    }

    pub fn row(&self, n: usize) -> &[u8] {
        let size = self.spec.size;
        &self.rows[n * size..(n + 1) * size]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[u8]> {
        self.rows.chunks_exact(self.spec.size)
    }

    #[inline(always)]
    pub fn get(&self, x: i64, n: u64) -> u8 {
        let size = self.spec.size;
        self.rows[n as usize * size + x.rem_euclid(size as i64) as usize]
    }
}

impl Occupancy for OccupancyField {
    #[inline(always)]
    fn occupied(&self, x: i64, n: u64) -> bool {
        self.get(x, n) == 1
    }
}

/// Evolves `init` for `horizon` walker steps and records every row.
pub fn evolve_discrete(
    spec: &EnvironmentSpec,
    src: &RandomSource,
    horizon: u64,
    init: &[u8],
) -> Result<OccupancyField> {
    spec.validate()?;
    check_config(spec, init)?;
    let size = spec.size;
    let rows = (horizon as usize)
        .checked_add(1)
        .and_then(|r| r.checked_mul(size))
        .ok_or_else(|| invalid("horizon too large"))?;
    let mut flat = Vec::with_capacity(rows);
    let mut config = init.to_vec();
    flat.extend_from_slice(&config);
    for n in 0..horizon {
        step_in_place(spec, &mut config, src, n);
        flat.extend_from_slice(&config);
    }
    Ok(OccupancyField {
        spec: *spec,
        rows: flat,
    })
}

/// A discrete environment evolved on the fly, without storing its history.
#[derive(Debug, Clone)]
pub struct EnvironmentProcess {
    spec: EnvironmentSpec,
    src: RandomSource,
    config: Vec<u8>,
    time: u64,
}

impl EnvironmentProcess {
    pub fn new(spec: EnvironmentSpec, src: RandomSource, init: Vec<u8>) -> Result<Self> {
        spec.validate()?;
        check_config(&spec, &init)?;
        Ok(Self {
            spec,
            src,
            config: init,
            time: 0,
        })
    }

    pub fn config(&self) -> &[u8] {
        &self.config
    }

    pub fn time(&self) -> u64 {
        self.time
    }

    #[inline(always)]
    pub fn occupied(&self, x: i64) -> bool {
        self.config[x.rem_euclid(self.spec.size as i64) as usize] == 1
    }

    #[inline]
    pub fn step(&mut self) {
        step_in_place(&self.spec, &mut self.config, &self.src, self.time);
        self.time += 1;
    }
}

// Lanes used by the continuous-time clocks; disjoint from the discrete kernel.
const LANE_CLOCK: u32 = 16;
const LANE_SITE: u32 = 17;
const LANE_COIN: u32 = 18;

/// Continuous-time version of a catalog environment: every site (or edge)
/// rings at rate one and applies the kind's sub-update rule when it rings.
/// Events are generated by a single superposed clock of rate `L`.
#[derive(Debug, Clone)]
pub struct ContinuousEnvironment {
    spec: EnvironmentSpec,
    src: RandomSource,
    config: Vec<u8>,
    events: u64,
    next_event: f64,
}

impl ContinuousEnvironment {
    pub fn new(spec: EnvironmentSpec, src: RandomSource, init: Vec<u8>) -> Result<Self> {
        spec.validate()?;
        check_config(&spec, &init)?;
        let mut env = Self {
            spec,
            src,
            config: init,
            events: 0,
            next_event: 0.0,
        };
        env.next_event = env.gap(0);
        Ok(env)
    }

    fn total_rate(&self) -> f64 {
        match self.spec.kind {
            EnvKind::FrozenBernoulli => 0.0,
            _ => self.spec.size as f64,
        }
    }

    fn gap(&self, j: u64) -> f64 {
        let rate = self.total_rate();
        if rate == 0.0 {
            return f64::INFINITY;
        }
        -open_unit_from_bits(self.src.bits(0, j, LANE_CLOCK)).ln() / rate
    }

    /// Applies every environment event in `(current time, t]`.
    pub fn advance_to(&mut self, t: f64) {
        while self.next_event <= t {
            let slice = self.src.at_time(self.events);
            let u_site = unit_from_bits(slice.bits(0, LANE_SITE));
            let u_coin = unit_from_bits(slice.bits(0, LANE_COIN));
            sub_update(
                self.spec.kind,
                self.spec.p,
                &mut self.config,
                u_site,
                u_coin,
                0,
            );
            self.events += 1;
            self.next_event += self.gap(self.events);
        }
    }

    pub fn config(&self) -> &[u8] {
        &self.config
    }

    pub fn events(&self) -> u64 {
        self.events
    }

    #[inline(always)]
    pub fn occupied(&self, x: i64) -> bool {
        self.config[x.rem_euclid(self.spec.size as i64) as usize] == 1
    }
}
