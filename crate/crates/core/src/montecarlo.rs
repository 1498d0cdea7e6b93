//! Seeded Monte Carlo check of the expectation- and variance-level claims.
//!
//! The design `X` is held fixed. Replicate `r` draws `ε ~ N(0, σ² I)` from a
//! ChaCha20 generator seeded with `seed` and switched to stream `r`, so every
//! replicate's noise depends only on `(seed, r)` and never on scheduling.
//! Replicates run in parallel; aggregation walks them in index order, so the
//! result is bit-identical for any thread count.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::diagnostics::plugin_sigma2_bias;
use crate::error::{PcrError, Result};
use crate::linalg::{gram_pseudo_inverse, loading_projector, norm2, DenseMatrix};
use crate::model::Design;

pub const GENERATOR: &str =
    "ChaCha20Rng::seed_from_u64(seed) with set_stream(replicate); StandardNormal (ziggurat)";

pub const MIN_REPLICATES: usize = 100;
/// Covariance rows need at least this many replicates.
pub const MIN_COVARIANCE_REPLICATES: usize = 1000;
pub const COVARIANCE_REL_TOL: f64 = 0.10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationConfig {
    pub x: DenseMatrix,
    pub beta_true: Vec<f64>,
    pub sigma2_true: f64,
    pub d: usize,
    pub replicates: usize,
    pub seed: u64,
}

impl SimulationConfig {
    pub fn validate(&self) -> Result<()> {
        let p = self.x.cols();
        if self.replicates < MIN_REPLICATES {
            return Err(PcrError::Config(format!(
                "replicates = {} is below the minimum of {MIN_REPLICATES}",
                self.replicates
            )));
        }
        if self.beta_true.len() != p {
            return Err(PcrError::Config(format!(
                "beta_true has {} entries, design has {p} columns",
                self.beta_true.len()
            )));
        }
        if self.beta_true.iter().any(|b| !b.is_finite()) {
            return Err(PcrError::Config("beta_true must be finite".into()));
        }
        if !(self.sigma2_true.is_finite() && self.sigma2_true > 0.0) {
            return Err(PcrError::Config(format!(
                "sigma2_true must be positive, got {}",
                self.sigma2_true
            )));
        }
        if self.d == 0 || self.d > p {
            return Err(PcrError::ComponentRange { d: self.d, p });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimulationResult {
    pub n: usize,
    pub p: usize,
    pub d: usize,
    pub replicates: usize,
    pub seed: u64,
    pub generator: String,
    pub sigma2_true: f64,
    pub beta_true: Vec<f64>,
    /// `V_d V_dᵀ β`.
    pub beta_retained_true: Vec<f64>,
    /// `V_k V_kᵀ β`.
    pub beta_omitted_true: Vec<f64>,
    /// `β_kᵀ X_kᵀ X_k β_k`.
    pub omitted_signal: f64,

    pub mean_sigma2_d: f64,
    pub mean_rss_d: f64,
    pub mean_beta_d: Vec<f64>,
    pub empirical_cov_beta_d: DenseMatrix,
    pub mcse_sigma2_d: f64,
    pub mcse_rss_d: f64,
    pub mcse_beta_d: Vec<f64>,

    /// `E(RSS_d) = σ²(n − d) + ω`, from `tr(I − H_d) = n − d`.
    pub predicted_rss_trace: f64,
    /// `σ²(n − p) + ω`.
    pub predicted_rss_reduced_dof: f64,
    /// `((n−p)/(n−d) − 1)σ² + ω/(n − d)` at the true parameters.
    pub predicted_bias_reduced_dof: f64,
    /// `ω/(n − d)`.
    pub predicted_bias_trace: f64,
    /// `V_d Σ_d⁻² V_dᵀ σ²_d` with `σ²_d = [σ²(n − d) + ω]/(n − d)`.
    pub predicted_cov: DenseMatrix,
    /// `V_d Σ_d⁻² V_dᵀ σ²`, the covariance of `β̂_d` given `X`.
    pub predicted_cov_noise_only: DenseMatrix,
}

struct Replicate {
    beta_d: Vec<f64>,
    rss_d: f64,
    sigma2_d: f64,
}

pub fn run_simulation(cfg: &SimulationConfig) -> Result<SimulationResult> {
    cfg.validate()?;
    let design = Design::new(cfg.x.clone())?;
    let f = design.factors();
    let (n, p, d) = (design.n(), design.p(), cfg.d);
    let mean_y = cfg.x.mul_vec(&cfg.beta_true)?;
    let noise_sd = cfg.sigma2_true.sqrt();

    let reps: Vec<Replicate> = (0..cfg.replicates)
        .into_par_iter()
        .map(|r| {
            let mut rng = ChaCha20Rng::seed_from_u64(cfg.seed);
            rng.set_stream(r as u64);
            let y: Vec<f64> = mean_y
                .iter()
                .map(|m| {
                    let z: f64 = rng.sample(StandardNormal);
                    m + noise_sd * z
                })
                .collect();
            design
                .fit_pcr(&y, d)
                .map(|fit| Replicate {
                    beta_d: fit.beta_d,
                    rss_d: fit.rss_d,
                    sigma2_d: fit.sigma2_d,
                })
                .map_err(|e| PcrError::Replicate {
                    replicate: r,
                    source: Box::new(e),
                })
        })
        .collect::<Result<_>>()?;

    let count = reps.len() as f64;
    let (mean_rss_d, mcse_rss_d) = mean_and_mcse(reps.iter().map(|r| r.rss_d), count);
    let (mean_sigma2_d, mcse_sigma2_d) = mean_and_mcse(reps.iter().map(|r| r.sigma2_d), count);
    let mut mean_beta_d = vec![0.0; p];
    let mut mcse_beta_d = vec![0.0; p];
    for j in 0..p {
        let (m, s) = mean_and_mcse(reps.iter().map(|r| r.beta_d[j]), count);
        mean_beta_d[j] = m;
        mcse_beta_d[j] = s;
    }
    let mut cov = vec![0.0; p * p];
    for r in &reps {
        for i in 0..p {
            let di = r.beta_d[i] - mean_beta_d[i];
            for j in 0..p {
                cov[i * p + j] += di * (r.beta_d[j] - mean_beta_d[j]);
            }
        }
    }
    cov.iter_mut().for_each(|c| *c /= count - 1.0);
    let empirical_cov_beta_d = DenseMatrix::new(p, p, cov)?;

    let split = crate::linalg::ComponentSplit::new(d, p)?;
    let beta_retained_true = loading_projector(f, &split.retained())?.mul_vec(&cfg.beta_true)?;
    let beta_omitted_true: Vec<f64> = cfg
        .beta_true
        .iter()
        .zip(&beta_retained_true)
        .map(|(b, bd)| b - bd)
        .collect();
    let omitted_signal = norm2(&cfg.x.mul_vec(&beta_omitted_true)?);

    let s2 = cfg.sigma2_true;
    let (nf, pf, df) = (n as f64, p as f64, d as f64);
    let sigma2_d_true = (s2 * (nf - df) + omitted_signal) / (nf - df);
    let gram_d = gram_pseudo_inverse(f, &split.retained())?;

    Ok(SimulationResult {
        n,
        p,
        d,
        replicates: cfg.replicates,
        seed: cfg.seed,
        generator: GENERATOR.to_string(),
        sigma2_true: s2,
        beta_true: cfg.beta_true.clone(),
        beta_retained_true,
        beta_omitted_true,
        omitted_signal,
        mean_sigma2_d,
        mean_rss_d,
        mean_beta_d,
        empirical_cov_beta_d,
        mcse_sigma2_d,
        mcse_rss_d,
        mcse_beta_d,
        predicted_rss_trace: s2 * (nf - df) + omitted_signal,
        predicted_rss_reduced_dof: s2 * (nf - pf) + omitted_signal,
        predicted_bias_reduced_dof: plugin_sigma2_bias(n, p, d, s2, omitted_signal),
        predicted_bias_trace: omitted_signal / (nf - df),
        predicted_cov: gram_d.scale(sigma2_d_true),
        predicted_cov_noise_only: gram_d.scale(s2),
    })
}

/// Mean and Monte Carlo standard error, summed in iteration order.
fn mean_and_mcse(values: impl Iterator<Item = f64> + Clone, count: f64) -> (f64, f64) {
    let mean = values.clone().sum::<f64>() / count;
    let var = values.map(|v| (v - mean) * (v - mean)).sum::<f64>() / (count - 1.0);
    (mean, (var / count).sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum RowKind {
    /// A claim the simulation is expected to confirm.
    Check,
    /// A competing prediction shown for comparison only.
    Alternative,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparisonRow {
    pub claim: String,
    pub kind: RowKind,
    pub predicted: f64,
    pub observed: f64,
    pub mcse: Option<f64>,
    /// `(observed − predicted) / mcse`.
    pub z: Option<f64>,
    /// Relative Frobenius distance for covariance rows.
    pub rel_frobenius: Option<f64>,
    pub tolerance: Option<f64>,
}

impl ComparisonRow {
    fn scalar(
        claim: impl Into<String>,
        kind: RowKind,
        predicted: f64,
        observed: f64,
        mcse: f64,
    ) -> Self {
        let diff = observed - predicted;
        let z = if mcse > 0.0 {
            Some(diff / mcse)
        } else if diff.abs() <= 1e-12 * (1.0 + predicted.abs()) {
            Some(0.0)
        } else {
            None
        };
        Self {
            claim: claim.into(),
            kind,
            predicted,
            observed,
            mcse: Some(mcse),
            z,
            rel_frobenius: None,
            tolerance: None,
        }
    }

    fn covariance(
        claim: impl Into<String>,
        kind: RowKind,
        predicted: &DenseMatrix,
        observed: &DenseMatrix,
    ) -> Self {
        let rel = observed
            .sub(predicted)
            .expect("same shape")
            .frobenius_norm()
            / predicted.frobenius_norm();
        Self {
            claim: claim.into(),
            kind,
            predicted: predicted.frobenius_norm(),
            observed: observed.frobenius_norm(),
            mcse: None,
            z: None,
            rel_frobenius: Some(rel),
            tolerance: Some(COVARIANCE_REL_TOL),
        }
    }

    /// Whether a check row breaches `z_threshold` or its covariance tolerance.
    /// Alternative rows never alert.
    pub fn alerts(&self, z_threshold: f64) -> bool {
        if self.kind == RowKind::Alternative {
            return false;
        }
        match (self.z, self.rel_frobenius, self.tolerance) {
            (_, Some(rel), Some(tol)) => rel > tol,
            (Some(z), _, _) => z.abs() > z_threshold,
            _ => true,
        }
    }
}

/// Which of two competing predictions sits closer to the simulation.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Adjudication {
    pub quantity: String,
    pub trace_z: Option<f64>,
    pub reduced_dof_z: Option<f64>,
    /// `"trace"` or `"reduced_dof"`.
    pub closer: String,
    pub closer_abs_z: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TheoryReport {
    pub rows: Vec<ComparisonRow>,
    pub adjudication: Vec<Adjudication>,
}

impl TheoryReport {
    pub fn alerts(&self, z_threshold: f64) -> Vec<&ComparisonRow> {
        self.rows.iter().filter(|r| r.alerts(z_threshold)).collect()
    }
}

fn adjudicate(quantity: &str, trace: &ComparisonRow, reduced: &ComparisonRow) -> Adjudication {
    let abs = |z: Option<f64>| z.map_or(f64::INFINITY, f64::abs);
    let trace_wins = abs(trace.z) <= abs(reduced.z);
    let (closer, z) = if trace_wins {
        ("trace", trace.z)
    } else {
        ("reduced_dof", reduced.z)
    };
    Adjudication {
        quantity: quantity.into(),
        trace_z: trace.z,
        reduced_dof_z: reduced.z,
        closer: closer.into(),
        closer_abs_z: z.map(f64::abs),
    }
}

pub fn theory_comparison(res: &SimulationResult) -> TheoryReport {
    let mut rows = Vec::new();
    for j in 0..res.p {
        rows.push(ComparisonRow::scalar(
            format!("mean_beta_d[{j}] = beta - beta_k"),
            RowKind::Check,
            res.beta_retained_true[j],
            res.mean_beta_d[j],
            res.mcse_beta_d[j],
        ));
    }

    let rss_trace = ComparisonRow::scalar(
        "mean_rss_d = sigma2 (n - d) + omega",
        RowKind::Check,
        res.predicted_rss_trace,
        res.mean_rss_d,
        res.mcse_rss_d,
    );
    let rss_reduced = ComparisonRow::scalar(
        "mean_rss_d = sigma2 (n - p) + omega",
        RowKind::Alternative,
        res.predicted_rss_reduced_dof,
        res.mean_rss_d,
        res.mcse_rss_d,
    );
    let observed_bias = res.mean_sigma2_d - res.sigma2_true;
    let bias_trace = ComparisonRow::scalar(
        "bias(sigma2_d) = omega / (n - d)",
        RowKind::Check,
        res.predicted_bias_trace,
        observed_bias,
        res.mcse_sigma2_d,
    );
    let bias_reduced = ComparisonRow::scalar(
        "bias(sigma2_d) = ((n - p)/(n - d) - 1) sigma2 + omega / (n - d)",
        RowKind::Alternative,
        res.predicted_bias_reduced_dof,
        observed_bias,
        res.mcse_sigma2_d,
    );
    let adjudication = vec![
        adjudicate("mean_rss_d", &rss_trace, &rss_reduced),
        adjudicate("bias_sigma2_d", &bias_trace, &bias_reduced),
    ];
    rows.extend([rss_trace, rss_reduced, bias_trace, bias_reduced]);

    if res.replicates >= MIN_COVARIANCE_REPLICATES {
        rows.push(ComparisonRow::covariance(
            "cov(beta_d) = V_d S_d^-2 V_d' sigma2_d",
            RowKind::Check,
            &res.predicted_cov,
            &res.empirical_cov_beta_d,
        ));
        rows.push(ComparisonRow::covariance(
            "cov(beta_d) = V_d S_d^-2 V_d' sigma2",
            RowKind::Alternative,
            &res.predicted_cov_noise_only,
            &res.empirical_cov_beta_d,
        ));
    }
    TheoryReport { rows, adjudication }
}
