//! Coordinate-addressed randomness.
//!
//! Every random number used by the simulator is a pure function of
//! `(master_seed, stream, x, n, lane)`. Nothing is drawn sequentially, so the
//! forward walk, the backward walk and the environment can all read the same
//! value at a space-time point in whatever order they visit it.

use serde::{Deserialize, Serialize};

const GOLDEN: u64 = 0x9e37_79b9_7f4a_7c15;
const K_TIME: u64 = 0xd1b5_4a32_d192_ed03;
const K_SITE: u64 = 0xaef1_7502_108e_f2d9;
const K_LANE: u64 = 0xc2b2_ae3d_27d4_eb4f;
const TWO_POW_M53: f64 = 1.0 / (1u64 << 53) as f64;

/// SplitMix64 finalizer.
#[inline(always)]
pub const fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Maps 64 random bits to `[0, 1)` using the top 53 bits.
#[inline(always)]
pub fn unit_from_bits(bits: u64) -> f64 {
    (bits >> 11) as f64 * TWO_POW_M53
}

/// Maps 64 random bits to `(0, 1]`.
#[inline(always)]
pub fn open_unit_from_bits(bits: u64) -> f64 {
    ((bits >> 11) + 1) as f64 * TWO_POW_M53
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Stream {
    Environment,
    WalkUniforms,
    Poisson,
    InitialConfig,
}

impl Stream {
    const fn salt(self) -> u64 {
        match self {
            Stream::Environment => 0x243f_6a88_85a3_08d3,
            Stream::WalkUniforms => 0x1319_8a2e_0370_7344,
            Stream::Poisson => 0xa409_3822_299f_31d0,
            Stream::InitialConfig => 0x082e_fa98_ec4e_6c89,
        }
    }
}

/// A keyed, stateless random function over lattice coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RandomSource {
    master_seed: u64,
    stream: Stream,
    key: u64,
}

impl RandomSource {
    pub fn new(master_seed: u64, stream: Stream) -> Self {
        let key = mix64(mix64(master_seed ^ GOLDEN) ^ stream.salt());
        Self {
            master_seed,
            stream,
            key,
        }
    }

    pub fn master_seed(&self) -> u64 {
        self.master_seed
    }

    pub fn stream(&self) -> Stream {
        self.stream
    }

    /// Same seed, different stream.
    pub fn with_stream(&self, stream: Stream) -> Self {
        Self::new(self.master_seed, stream)
    }

    /// Pre-hashes the time coordinate so that many sites at one time step
    /// can be evaluated with a single extra mixing round each.
    #[inline(always)]
    pub fn at_time(&self, n: u64) -> TimeSlice {
        TimeSlice {
            hash: mix64(self.key ^ n.wrapping_mul(K_TIME)),
        }
    }

    #[inline(always)]
    pub fn bits(&self, x: i64, n: u64, lane: u32) -> u64 {
        self.at_time(n).bits(x, lane)
    }

    /// `U_{x,n}`: uniform on `[0, 1)`.
    #[inline(always)]
    pub fn uniform_at(&self, x: i64, n: u64) -> f64 {
        unit_from_bits(self.bits(x, n, 0))
    }

    #[inline(always)]
    pub fn uniform_lane(&self, x: i64, n: u64, lane: u32) -> f64 {
        unit_from_bits(self.bits(x, n, lane))
    }
}

/// A [`RandomSource`] with the time coordinate fixed.
#[derive(Debug, Clone, Copy)]
pub struct TimeSlice {
    hash: u64,
}

impl TimeSlice {
    #[inline(always)]
    pub fn bits(&self, x: i64, lane: u32) -> u64 {
        let h = mix64(self.hash ^ (x as u64).wrapping_mul(K_SITE));
        mix64(h ^ (lane as u64).wrapping_add(1).wrapping_mul(K_LANE))
    }

    #[inline(always)]
    pub fn uniform(&self, x: i64, lane: u32) -> f64 {
        unit_from_bits(self.bits(x, lane))
    }
}

/// Lane reserved for the per-event walker uniforms of the continuous walk.
const LANE_EVENT_UNIFORM: u32 = 7;

/// `U_n` of the continuous-time construction: one uniform per walker event.
#[inline]
pub fn walk_uniform(src: &RandomSource, n: u64) -> f64 {
    src.uniform_lane(0, n, LANE_EVENT_UNIFORM)
}

/// The `n`-th inter-arrival gap of a rate-`rate` Poisson clock, as a pure
/// function of `(src, x, n)`.
#[inline]
pub fn exponential_gap(src: &RandomSource, x: i64, n: u64, rate: f64) -> f64 {
    -open_unit_from_bits(src.bits(x, n, 0)).ln() / rate
}

/// Event times of a rate-one Poisson process on `(0, horizon]`.
pub fn poisson_times(src: &RandomSource, horizon: f64) -> crate::Result<Vec<f64>> {
    if !(horizon > 0.0) || !horizon.is_finite() {
        return Err(crate::error::invalid(format!(
            "poisson horizon must be positive and finite, got {horizon}"
        )));
    }
    let mut times = Vec::with_capacity(horizon.ceil() as usize + 16);
    let mut t = 0.0;
    for n in 0.. {
        t += exponential_gap(src, 0, n, 1.0);
        if t > horizon {
            break;
        }
        times.push(t);
    }
    Ok(times)
}

/// The first `count` event times of the same rate-one process that
/// [`poisson_times`] truncates.
pub fn poisson_times_count(src: &RandomSource, count: usize) -> Vec<f64> {
    let mut t = 0.0;
    (0..count as u64)
        .map(|n| {
            t += exponential_gap(src, 0, n, 1.0);
            t
        })
        .collect()
}

/// Derives the master seed of trial `trial` from an experiment seed.
pub fn trial_seed(master_seed: u64, trial: u64) -> u64 {
    mix64(mix64(master_seed ^ 0x5851_f42d_4c95_7f2d).wrapping_add(trial.wrapping_mul(GOLDEN)))
}

/// Derives an unrelated experiment seed, e.g. for the second arm of a
/// two-sample comparison.
pub fn derived_seed(master_seed: u64, label: u64) -> u64 {
    mix64(master_seed.wrapping_add(mix64(label ^ 0x6a09_e667_f3bc_c909)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uniform_at_is_deterministic() {
        let s = RandomSource::new(17, Stream::WalkUniforms);
        assert_eq!(s.uniform_at(3, 7).to_bits(), s.uniform_at(3, 7).to_bits());
        let t = RandomSource::new(17, Stream::WalkUniforms);
        assert_eq!(s.uniform_at(3, 7).to_bits(), t.uniform_at(3, 7).to_bits());
        assert_ne!(s.uniform_at(3, 7), s.uniform_at(4, 7));
        assert_ne!(s.uniform_at(3, 7), s.uniform_at(3, 8));
    }

    #[test]
    fn unit_mapping_stays_below_one() {
        assert_eq!(unit_from_bits(0), 0.0);
        assert!(unit_from_bits(u64::MAX) < 1.0);
        assert!(open_unit_from_bits(0) > 0.0);
        assert_eq!(open_unit_from_bits(u64::MAX), 1.0);
    }

    #[test]
    fn uniform_mean_over_a_million_coordinates() {
        let s = RandomSource::new(2024, Stream::Environment);
        let n = 1_000_000u64;
        let sum: f64 = (0..n)
            .map(|i| s.uniform_at(i as i64 % 1000 - 500, i / 1000))
            .sum();
        let mean = sum / n as f64;
        // 4 sigma / sqrt(n), sigma = 1/sqrt(12)
        assert!((mean - 0.5).abs() <= 0.002, "mean {mean}");
    }

    #[test]
    fn negative_sites_are_fine() {
        let s = RandomSource::new(1, Stream::WalkUniforms);
        for x in -1000..0 {
            let u = s.uniform_at(x, 3);
            assert!((0.0..1.0).contains(&u));
        }
    }

    #[test]
    fn poisson_rejects_bad_horizon() {
        let s = RandomSource::new(1, Stream::Poisson);
        assert!(poisson_times(&s, 0.0).is_err());
        assert!(poisson_times(&s, -1.0).is_err());
        assert!(poisson_times(&s, f64::NAN).is_err());
    }

    #[test]
    fn poisson_short_horizon_is_usually_empty() {
        let empty = (0..1000u64)
            .filter(|&k| {
                poisson_times(&RandomSource::new(k, Stream::Poisson), 1e-4)
                    .unwrap()
                    .is_empty()
            })
            .count();
        assert!(empty >= 995, "{empty}");
    }

    #[test]
    fn poisson_count_over_a_long_horizon() {
        let s = RandomSource::new(99, Stream::Poisson);
        let times = poisson_times(&s, 1e6).unwrap();
        let count = times.len() as f64;
        assert!((count - 1e6).abs() <= 4e3, "count {count}");
        assert!(times.windows(2).all(|w| w[0] < w[1]));
        assert!(*times.last().unwrap() <= 1e6);
        // the truncated list is a prefix of the counted one
        let counted = poisson_times_count(&s, times.len());
        assert_eq!(counted, times);
    }

    #[test]
    fn poisson_mean_gap() {
        let s = RandomSource::new(5, Stream::Poisson);
        let times = poisson_times_count(&s, 1_000_000);
        let mean_gap = times.last().unwrap() / 1e6;
        assert!((mean_gap - 1.0).abs() <= 0.004, "{mean_gap}");
    }

    #[test]
    fn walk_uniform_deterministic() {
        let s = RandomSource::new(8, Stream::WalkUniforms);
        assert_eq!(walk_uniform(&s, 5), walk_uniform(&s, 5));
        assert!((0..10_000).all(|n| (0.0..1.0).contains(&walk_uniform(&s, n))));
    }

    #[test]
    fn trial_seeds_differ() {
        let a: std::collections::HashSet<u64> = (0..10_000).map(|t| trial_seed(3, t)).collect();
        assert_eq!(a.len(), 10_000);
    }
}
