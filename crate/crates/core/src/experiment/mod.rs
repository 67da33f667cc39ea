//! Sweep orchestration: chains, simulation and enumeration per sweep point.

pub mod config;
pub mod report;

use std::io::{self, Write};

use rayon::prelude::*;
use thiserror::Error;

pub use config::{parse_config, ConfigError, ExperimentConfig, OutputFormat};
pub use report::{format_sig9, ComparisonReport, KernelTracking, Method, ReportRow, CSV_HEADER};

use crate::attempt::{attempt_profile, AttemptError, AttemptProfile};
use crate::chain::{
    build_kernel, build_kernel_with_mean_window, propagate, ChainError, KernelKind, TransientResult,
};
use crate::protocol::{validate, ProtocolParams};
use crate::sim::{
    enumerate_exact, joint_space_size, run_batch, ExactMetrics, SimError, MAX_ENUMERATION,
};

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("configuration error: {0}")]
    Config(#[from] ConfigError),
    #[error("chain models assume a single CCA; set cw=1 or remove the kernels key (got cw={0})")]
    ChainNeedsSingleCca(u32),
    #[error(transparent)]
    Attempt(#[from] AttemptError),
    #[error(transparent)]
    Chain(#[from] ChainError),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error("I/O error: {0}")]
    Io(#[from] io::Error),
}

impl ExperimentError {
    /// 1 for configuration problems, 2 for runtime and I/O failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            ExperimentError::Config(_) | ExperimentError::ChainNeedsSingleCca(_) => 1,
            _ => 2,
        }
    }
}

const QUANTILES: (f64, f64) = (0.5, 0.9);

fn chain_rows(
    params: &ProtocolParams,
    profile: &AttemptProfile<f64>,
    kind: KernelKind,
    mean_window: Option<f64>,
) -> Result<ReportRow, ExperimentError> {
    let kernel = match mean_window {
        Some(mw) => build_kernel_with_mean_window(params, profile, kind, mw)?,
        None => build_kernel(params, profile, kind)?,
    };
    let result = propagate(&kernel, kernel.default_horizon())?;
    let method = match kind {
        KernelKind::Original => Method::OriginalChain,
        KernelKind::Improved => Method::ImprovedChain,
    };
    let (p50, p90, max) = chain_quantiles(&result);
    let mut row = ReportRow::new(
        params.n_stations(),
        params.packet_len(),
        method,
        result.success_renewal,
    )
    .with_residual(result.residual_mass)
    .with_quantiles(p50, p90, max);
    if let Some(leibnitz) = result.success_leibnitz {
        row = row.with_leibnitz(leibnitz);
    }
    Ok(row)
}

/// Chain completion quantiles on the simulator's clock. The chain enters
/// `(0, 0)` one slot after the last station finishes, hence the `- 1`.
/// Quantiles the defective CDF never reaches are left empty.
fn chain_quantiles(result: &TransientResult<f64>) -> (Option<u64>, Option<u64>, Option<u64>) {
    let finish = |slot: usize| slot.saturating_sub(1) as u64;
    let p50 = result.completion_quantile(QUANTILES.0).map(finish);
    let p90 = result.completion_quantile(QUANTILES.1).map(finish);
    let cdf = &result.completion_cdf;
    let max = (1..cdf.len())
        .rev()
        .find(|&t| cdf[t] > cdf[t - 1])
        .map(finish);
    (p50, p90, max)
}

fn point_rows(cfg: &ExperimentConfig, n: u32, l: u32) -> Result<Vec<ReportRow>, ExperimentError> {
    let params = validate(crate::protocol::RawParams {
        n_stations: n,
        packet_len: l,
        ..cfg.base
    })
    .map_err(ConfigError::from)?;
    let mut rows = Vec::new();

    if !cfg.kernels.is_empty() {
        let profile: AttemptProfile<f64> = attempt_profile(&params, cfg.semantics)?;
        for &kind in &cfg.kernels {
            rows.push(chain_rows(&params, &profile, kind, cfg.mean_window)?);
        }
    }

    if cfg.simulate {
        let batch = run_batch(&params, cfg.policy, cfg.trials, cfg.seed)?;
        rows.push(
            ReportRow::new(n, l, Method::Sim, batch.mean_successes)
                .with_stderr(batch.stderr_successes)
                .with_quantiles(
                    batch.completion_quantile(QUANTILES.0),
                    batch.completion_quantile(QUANTILES.1),
                    batch.max_completion(),
                ),
        );
    }

    if cfg.exact && joint_space_size(&params) <= MAX_ENUMERATION {
        let exact: ExactMetrics<f64> = enumerate_exact(&params, cfg.policy)?;
        rows.push(
            ReportRow::new(n, l, Method::Exact, exact.expected_successes).with_quantiles(
                exact.completion_quantile(&QUANTILES.0),
                exact.completion_quantile(&QUANTILES.1),
                exact.max_completion(),
            ),
        );
    }
    Ok(rows)
}

/// Evaluates every requested method at every `(N, L)` point.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ComparisonReport, ExperimentError> {
    if !cfg.kernels.is_empty() && cfg.base.cw != 1 {
        return Err(ExperimentError::ChainNeedsSingleCca(cfg.base.cw));
    }
    let points: Vec<(u32, u32)> = cfg
        .n_values
        .iter()
        .flat_map(|&n| cfg.l_values.iter().map(move |&l| (n, l)))
        .collect();
    let per_point = points
        .par_iter()
        .map(|&(n, l)| point_rows(cfg, n, l))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(ComparisonReport::new(
        per_point.into_iter().flatten().collect(),
    ))
}

/// Writes `t,a,d0,…,d{nb_max}` for `t = 0..=t_max`.
pub fn write_profile_csv(profile: &AttemptProfile<f64>, sink: &mut impl Write) -> io::Result<()> {
    let stages = profile.stage_pmfs();
    let mut header = String::from("t,a");
    for k in 0..stages.len() {
        header.push_str(&format!(",d{k}"));
    }
    writeln!(sink, "{header}")?;
    for t in 0..=profile.t_max() as usize {
        let mut line = format!("{t},{}", format_sig9(profile.a(t)));
        for d in stages {
            line.push(',');
            line.push_str(&format_sig9(d.get(t)));
        }
        writeln!(sink, "{line}")?;
    }
    Ok(())
}

/// Attempt profile for the configuration's backoff parameters.
pub fn profile_for(cfg: &ExperimentConfig) -> Result<AttemptProfile<f64>, ExperimentError> {
    let params = validate(cfg.base).map_err(ConfigError::from)?;
    Ok(attempt_profile(&params, cfg.semantics)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cw2_with_kernels_is_config_error() {
        let cfg = parse_config("cw=2\nN=2\nL=1").unwrap();
        let err = run_experiment(&cfg).unwrap_err();
        assert_eq!(err.exit_code(), 1);
        let sim_only = parse_config("cw=2\nN=2\nL=1\nkernels=\ntrials=50").unwrap();
        assert!(run_experiment(&sim_only).is_ok());
    }

    #[test]
    fn exact_rows_only_when_enumerable() {
        let cfg = parse_config("be_min=1\nbe_max=1\nnb_max=0\nN=2\nL=1\ntrials=200").unwrap();
        let report = run_experiment(&cfg).unwrap();
        let exact = report.row(2, 1, Method::Exact).unwrap();
        assert_eq!(exact.s_n, 0.5);
        let big = parse_config("N=5\nL=2\ntrials=20").unwrap();
        assert!(run_experiment(&big)
            .unwrap()
            .row(5, 2, Method::Exact)
            .is_none());
    }

    #[test]
    fn lone_station_point() {
        let cfg = parse_config("N=1\nL=4\ntrials=500\nseed=3").unwrap();
        let report = run_experiment(&cfg).unwrap();
        assert_eq!(report.row(1, 4, Method::Sim).unwrap().s_n, 1.0);
        assert!(report.row(1, 4, Method::ImprovedChain).unwrap().s_n > 0.99);
        // (8·16·32·32·32)^1 draw sequences exceed the enumeration bound.
        assert!(report.row(1, 4, Method::Exact).is_none());
    }

    #[test]
    fn profile_csv_shape() {
        let cfg = parse_config("").unwrap();
        let prof = profile_for(&cfg).unwrap();
        let mut buf = Vec::new();
        write_profile_csv(&prof, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), "t,a,d0,d1,d2,d3,d4");
        assert_eq!(lines.next().unwrap(), "0,0.125000000,0.125000000,0,0,0,0");
        assert_eq!(text.lines().count(), 1 + 120);
    }
}
