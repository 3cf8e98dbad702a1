//! Named verification suites run by `dynwalk verify`.

use serde::{Deserialize, Serialize};

use crate::config::SimConfig;
use crate::coupling::{
    backward_law_against, broken_coupling_crossings, non_crossing_sweep, FieldSource,
};
use crate::environment::{EnvKind, EnvironmentSpec};
use crate::error::Result;
use crate::estimate::continuous_reduction_check;
use crate::kernel::{check_detailed_balance, stationary_measure, transition_matrix};
use crate::oracle::exact_speed;
use crate::rng::{poisson_times_count, RandomSource, Stream};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Suite {
    NonCrossing,
    BackwardLaw,
    DetailedBalance,
    OracleAntisymmetry,
    ContinuousReduction,
}

impl Suite {
    pub const ALL: [Suite; 5] = [
        Suite::NonCrossing,
        Suite::BackwardLaw,
        Suite::DetailedBalance,
        Suite::OracleAntisymmetry,
        Suite::ContinuousReduction,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Suite::NonCrossing => "non-crossing",
            Suite::BackwardLaw => "backward-law",
            Suite::DetailedBalance => "detailed-balance",
            Suite::OracleAntisymmetry => "oracle-antisymmetry",
            Suite::ContinuousReduction => "continuous-reduction",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|suite| suite.name() == s)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CaseLine {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteReport {
    pub suite: String,
    pub cases: Vec<CaseLine>,
}

impl SuiteReport {
    fn new(suite: Suite) -> Self {
        Self {
            suite: suite.name().to_string(),
            cases: Vec::new(),
        }
    }

    fn push(&mut self, name: impl Into<String>, pass: bool, detail: impl Into<String>) {
        self.cases.push(CaseLine {
            name: name.into(),
            pass,
            detail: detail.into(),
        });
    }

    pub fn pass(&self) -> bool {
        self.cases.iter().all(|c| c.pass)
    }

    pub fn failures(&self) -> usize {
        self.cases.iter().filter(|c| !c.pass).count()
    }
}

pub const NON_CROSSING_CASES: usize = 100_000;
pub const NON_CROSSING_MAX_STEPS: u64 = 512;
pub const DETAILED_BALANCE_TOL: f64 = 1e-12;
pub const ORACLE_ANTISYMMETRY_TOL: f64 = 1e-10;
pub const ORACLE_SIZES: [usize; 4] = [3, 4, 5, 6];
pub const ORACLE_DENSITIES: [f64; 2] = [0.3, 0.7];
pub const ORACLE_EPSILONS: [f64; 3] = [0.1, 0.25, 0.4];

pub fn run(suite: Suite, seed: u64) -> Result<SuiteReport> {
    match suite {
        Suite::NonCrossing => non_crossing(seed),
        Suite::BackwardLaw => backward_law(seed),
        Suite::DetailedBalance => detailed_balance(),
        Suite::OracleAntisymmetry => oracle_antisymmetry(),
        Suite::ContinuousReduction => continuous_reduction(seed),
    }
}

fn non_crossing(seed: u64) -> Result<SuiteReport> {
    let mut report = SuiteReport::new(Suite::NonCrossing);
    let r = non_crossing_sweep(NON_CROSSING_CASES, seed, NON_CROSSING_MAX_STEPS)?;
    report.push(
        "shared direction field",
        r.pass(),
        format!(
            "{} cases, {} violations, {} step-structure failures, min product {}, {} with meetings",
            r.cases, r.violations, r.step_structure_failures, r.min_product, r.meetings
        ),
    );
    let crossings = broken_coupling_crossings(10_000, seed ^ 1)?;
    report.push(
        "negative control: independent uniforms",
        crossings > 0,
        format!("{crossings} crossings in 10000 attempts"),
    );
    Ok(report)
}

/// Environment of the backward-law checks: East, L = 16, p = 0.7.
pub fn backward_law_config(seed: u64) -> SimConfig {
    SimConfig::discrete(
        EnvironmentSpec::new(EnvKind::EastRandomScan, 16, 0.7),
        0.25,
        256,
        1,
        seed,
    )
}

fn backward_law(seed: u64) -> Result<SuiteReport> {
    let mut report = SuiteReport::new(Suite::BackwardLaw);
    let cfg = backward_law_config(seed);
    let trials = 100_000;
    let r = backward_law_against(&cfg, 0, trials, -cfg.epsilon, FieldSource::Discrete)?;
    report.push(
        "backward vs direct (-eps)",
        r.pass(),
        format!(
            "chi2 {:.3} <= {:.3} (dof {}), means {:.3} / {:.3}",
            r.chi_square.statistic,
            r.chi_square.threshold,
            r.chi_square.dof,
            r.backward_mean,
            r.direct_mean
        ),
    );
    let neg = backward_law_against(&cfg, 0, trials, cfg.epsilon, FieldSource::Discrete)?;
    report.push(
        "negative control: direct (+eps)",
        !neg.pass(),
        format!(
            "chi2 {:.1} vs threshold {:.1}",
            neg.chi_square.statistic, neg.chi_square.threshold
        ),
    );
    Ok(report)
}

fn detailed_balance() -> Result<SuiteReport> {
    let mut report = SuiteReport::new(Suite::DetailedBalance);
    for kind in EnvKind::ALL {
        for size in 2..=6 {
            for p in ORACLE_DENSITIES {
                for k in [1, size] {
                    let spec = EnvironmentSpec::new(kind, size, p).with_substeps(k);
                    let v = check_detailed_balance(
                        &transition_matrix(&spec)?,
                        &stationary_measure(&spec)?,
                    )?;
                    report.push(
                        format!("{kind} L={size} p={p} k={k}"),
                        v <= DETAILED_BALANCE_TOL,
                        format!("max violation {v:.3e}"),
                    );
                }
            }
        }
    }
    Ok(report)
}

fn oracle_antisymmetry() -> Result<SuiteReport> {
    let mut report = SuiteReport::new(Suite::OracleAntisymmetry);
    for kind in [
        EnvKind::EastRandomScan,
        EnvKind::SsepRandomScan,
        EnvKind::IidRefresh,
    ] {
        for size in ORACLE_SIZES {
            for p in ORACLE_DENSITIES {
                for k in [1, size] {
                    let spec = EnvironmentSpec::new(kind, size, p).with_substeps(k);
                    for eps in ORACLE_EPSILONS {
                        let plus = exact_speed(&spec, eps)?.exact_speed;
                        let minus = exact_speed(&spec, -eps)?.exact_speed;
                        let sum = plus + minus;
                        report.push(
                            format!("{kind} L={size} p={p} k={k} eps={eps}"),
                            sum.abs() <= ORACLE_ANTISYMMETRY_TOL,
                            format!("v(eps) = {plus:.12}, v(eps) + v(-eps) = {sum:.3e}"),
                        );
                    }
                }
            }
        }
    }
    Ok(report)
}

fn continuous_reduction(seed: u64) -> Result<SuiteReport> {
    let mut report = SuiteReport::new(Suite::ContinuousReduction);
    let n = 1_000_000;
    let times = poisson_times_count(&RandomSource::new(seed, Stream::Poisson), n);
    let ratio = times[n - 1] / n as f64;
    report.push(
        "T_n / n at n = 10^6",
        (ratio - 1.0).abs() <= 0.004,
        format!("T_n / n = {ratio:.6}"),
    );

    let env = EnvironmentSpec::new(EnvKind::EastRandomScan, 16, 0.7);
    let cfg = SimConfig::continuous(env, 0.25, 1000.0, 1000, seed);
    let r = continuous_reduction_check(&cfg)?;
    report.push(
        "embedded vs continuous speed",
        r.pass,
        format!(
            "continuous {:.5} embedded {:.5} diff {:.2e} (4 SE = {:.2e})",
            r.continuous.mean,
            r.embedded.mean,
            r.difference,
            4.0 * r.joint_se
        ),
    );

    let small = SimConfig::discrete(env, 0.25, 32, 1, seed);
    let trials = 20_000;
    let law = backward_law_against(&small, 0, trials, -0.25, FieldSource::Embedded)?;
    report.push(
        "embedded backward law",
        law.pass(),
        format!(
            "chi2 {:.3} <= {:.3} (dof {})",
            law.chi_square.statistic, law.chi_square.threshold, law.chi_square.dof
        ),
    );
    let neg = backward_law_against(&small, 0, trials, 0.25, FieldSource::Embedded)?;
    report.push(
        "embedded negative control",
        !neg.pass(),
        format!(
            "chi2 {:.1} vs threshold {:.1}",
            neg.chi_square.statistic, neg.chi_square.threshold
        ),
    );
    Ok(report)
}
