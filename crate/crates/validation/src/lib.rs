//! Pinned tolerances, regression constants and line reporting for the
//! `acceptance` test target.

use std::time::Duration;

pub const SEED: u64 = 20_240_917;

pub const NON_CROSSING_CASES: usize = 100_000;
pub const NON_CROSSING_MAX_STEPS: u64 = 512;
pub const NON_CROSSING_BUDGET: Duration = Duration::from_secs(120);
pub const ORACLE_TOL: f64 = 1e-10;
pub const BALANCE_TOL: f64 = 1e-12;
pub const SIGMA_BAND: f64 = 4.0;
pub const POISSON_RATIO_TOL: f64 = 0.004;
pub const MIRROR_ZERO_TOL: f64 = 1e-12;
pub const PINNED_TOL: f64 = 1e-12;

/// Exact speed of East, L = 6, p = 0.7, eps = 0.25, six sub-updates per step,
/// from an independent dense-matrix evaluation.
pub const EAST6_EXACT: f64 = 0.111_117_841_042_081_78;
/// Two-point statistic for East, L = 5, p = 0.7, lag 1, same evaluation.
/// It is zero up to rounding: reversibility plus translation invariance
/// force E[eta_0(x) eta_t(x+1)] = E[eta_0(x) eta_t(x-1)].
pub const EAST5_TWO_POINT: f64 = 0.0;
/// Three-point constraint statistic for the same chain.
pub const EAST5_THREE_POINT: f64 = -0.021_203_707_042_659_84;

#[derive(Debug, Default)]
pub struct Outcome {
    pub failures: usize,
    pub lines: usize,
}

impl Outcome {
    pub fn line(&mut self, id: &str, pass: bool, detail: String) {
        self.lines += 1;
        if !pass {
            self.failures += 1;
        }
        println!(
            "criterion {id:<3} {} {detail}",
            if pass { "PASS" } else { "FAIL" }
        );
    }

    /// Informational line that does not count towards the verdict.
    pub fn note(&self, label: &str, pass: bool, detail: String) {
        println!(
            "  supplementary {label}: {} {detail}",
            if pass { "ok" } else { "not ok" }
        );
    }
}
