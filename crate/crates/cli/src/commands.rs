//! The `fit` and `compare` commands.

use pcr_core::diagnostics::{
    build_report, omitted_covariance, variance_recomposition_check, CovarianceSet,
    DiagnosticsReport,
};
use pcr_core::model::{
    beta_additivity_check, recover_ols_sigma2, sigma2_d_three_forms, Sigma2Forms,
};
use pcr_core::{ComponentSplit, Dataset, DenseMatrix, OlsEstimate, PcrError, PcrEstimate};
use serde::Serialize;

use crate::data::{prepare, ResponseScale, Standardize, TransformRecord};
use crate::error::AppError;
use crate::report::{coefficient_table, sig_figs, CoefColumn, FLAG_MARK};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum OutputFormat {
    Table,
    Json,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub input: String,
    pub response: String,
    pub d: usize,
    pub standardize: Standardize,
    pub response_scale: ResponseScale,
    pub add_intercept: bool,
    pub format: OutputFormat,
    /// Significant figures in tables.
    pub digits: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct ConfigEcho {
    pub input: String,
    pub response: String,
    pub d: usize,
    pub standardize: Standardize,
    pub response_scale: ResponseScale,
    pub intercept: bool,
    pub transform: TransformRecord,
}

/// Everything computed for one dataset and one choice of `d`.
pub struct Analysis {
    pub data: Dataset,
    pub transform: TransformRecord,
    pub ols: OlsEstimate,
    pub pcr: PcrEstimate,
    pub report: DiagnosticsReport,
    pub covariance: CovarianceSet,
    pub omitted_cov: DenseMatrix,
    pub residuals: Residuals,
}

/// How far each exact identity is from holding on this fit.
#[derive(Debug, Clone, Serialize)]
pub struct Residuals {
    pub beta_additivity: f64,
    /// `|RSS_d − (RSS + yᵀH_k y)|`.
    pub rss_ledger: f64,
    /// `|σ̂² − recovered σ̂²|`.
    pub sigma2_recovery: f64,
    pub sigma2_forms: Sigma2Forms,
    /// Largest `|form − σ̂²_d|` over the three forms.
    pub sigma2_forms_max: f64,
    pub covariance_forms_max: f64,
    pub covariance_tolerance: f64,
    /// Absent when `d = p`.
    pub variance_recomposition: Option<f64>,
    /// `|plug-in bias − (σ̂²_d − σ̂²)|`.
    pub bias_plugin_identity: f64,
}

pub fn analyze(cfg: &RunConfig) -> Result<Analysis, AppError> {
    let (data, transform) = prepare(
        &cfg.input,
        &cfg.response,
        cfg.add_intercept,
        cfg.standardize,
        cfg.response_scale,
    )?;
    ComponentSplit::new(cfg.d, data.p())?;
    let design = data.design()?;
    let ols = design.fit_ols(&data.y)?;
    let pcr = design.fit_pcr(&data.y, cfg.d)?;
    let (report, covariance) = build_report(&design, &ols, &pcr)?;
    let omitted_cov = omitted_covariance(design.factors(), &pcr)?;

    let forms = sigma2_d_three_forms(&ols, &pcr, &data)?;
    let variance_recomposition = match variance_recomposition_check(design.factors(), &ols, &pcr) {
        Ok(v) => Some(v),
        Err(PcrError::Precondition(_)) | Err(PcrError::Degenerate(_)) => None,
        Err(e) => return Err(e.into()),
    };
    let residuals = Residuals {
        beta_additivity: beta_additivity_check(&ols, &pcr)?,
        rss_ledger: (pcr.rss_d - (ols.rss + pcr.omitted_explained())).abs(),
        sigma2_recovery: (recover_ols_sigma2(&pcr, &data)? - ols.sigma2).abs(),
        sigma2_forms_max: forms
            .as_array()
            .iter()
            .fold(0.0, |m, f| m.max((f - pcr.sigma2_d).abs())),
        sigma2_forms: forms,
        covariance_forms_max: covariance.max_disagreement(),
        covariance_tolerance: covariance.tolerance(),
        variance_recomposition,
        bias_plugin_identity: (report.bias_sigma2_plugin - (pcr.sigma2_d - ols.sigma2)).abs(),
    };

    Ok(Analysis {
        data,
        transform,
        ols,
        pcr,
        report,
        covariance,
        omitted_cov,
        residuals,
    })
}

fn echo(cfg: &RunConfig, transform: &TransformRecord) -> ConfigEcho {
    ConfigEcho {
        input: cfg.input.clone(),
        response: cfg.response.clone(),
        d: cfg.d,
        standardize: cfg.standardize,
        response_scale: cfg.response_scale,
        intercept: cfg.add_intercept,
        transform: transform.clone(),
    }
}

fn describe_preprocessing(t: &TransformRecord) -> String {
    format!(
        "predictors: {:?}, response: {:?}, intercept: {}",
        t.predictors,
        t.response,
        if t.intercept_added { "added" } else { "none" }
    )
    .to_lowercase()
}

fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("report types serialize");
    s.push('\n');
    s
}

#[derive(Serialize)]
struct FitJson<'a> {
    config: ConfigEcho,
    names: &'a [String],
    n: usize,
    p: usize,
    estimates: FitEstimates<'a>,
    standard_errors: FitErrors<'a>,
}

#[derive(Serialize)]
struct FitEstimates<'a> {
    ols: &'a [f64],
    pcr_d: &'a [f64],
    beta_pc_d: &'a [f64],
    sigma2: f64,
    sigma2_d: f64,
}

#[derive(Serialize)]
struct FitErrors<'a> {
    ols: &'a [f64],
    pcr_d: &'a [f64],
}

/// OLS next to the `d`-component fit.
pub fn run_fit(cfg: &RunConfig) -> Result<String, AppError> {
    let a = analyze(cfg)?;
    match cfg.format {
        OutputFormat::Json => Ok(to_json(&FitJson {
            config: echo(cfg, &a.transform),
            names: &a.data.names,
            n: a.data.n(),
            p: a.data.p(),
            estimates: FitEstimates {
                ols: &a.ols.beta,
                pcr_d: &a.pcr.beta_d,
                beta_pc_d: &a.pcr.beta_pc_d,
                sigma2: a.ols.sigma2,
                sigma2_d: a.pcr.sigma2_d,
            },
            standard_errors: FitErrors {
                ols: &a.report.se_ols,
                pcr_d: &a.report.se_pcr,
            },
        })),
        OutputFormat::Table => {
            let mut out = header(&a, cfg.digits);
            out.push_str(&coefficient_table(
                &a.data.names,
                &[
                    CoefColumn {
                        title: "OLS".into(),
                        beta: &a.ols.beta,
                        se: &a.report.se_ols,
                        flags: None,
                    },
                    CoefColumn {
                        title: format!("PCR d={}", a.pcr.split.d),
                        beta: &a.pcr.beta_d,
                        se: &a.report.se_pcr,
                        flags: None,
                    },
                ],
                cfg.digits,
            ));
            Ok(out)
        }
    }
}

fn header(a: &Analysis, digits: usize) -> String {
    let split = a.pcr.split;
    format!(
        "n = {}, p = {}, d = {}, k = {}\npreprocessing: {}\nsigma2 = {}, sigma2_d = {}, sigma2_k = {}, sigma2_d/sigma2 = {}\n\n",
        a.data.n(),
        split.p,
        split.d,
        split.k,
        describe_preprocessing(&a.transform),
        sig_figs(a.ols.sigma2, digits + 2),
        sig_figs(a.pcr.sigma2_d, digits + 2),
        sig_figs(a.pcr.sigma2_k, digits + 2),
        a.report
            .inflation_ratio
            .map_or_else(|| "undefined".into(), |r| sig_figs(r, digits + 2)),
    )
}

#[derive(Serialize)]
struct CompareJson<'a> {
    config: ConfigEcho,
    names: &'a [String],
    n: usize,
    p: usize,
    d: usize,
    k: usize,
    estimates: CompareEstimates<'a>,
    standard_errors: CompareErrors<'a>,
    covariances: CompareCovariances<'a>,
    diagnostics: &'a DiagnosticsReport,
    residuals: &'a Residuals,
}

#[derive(Serialize)]
struct CompareEstimates<'a> {
    ols: &'a [f64],
    pcr_d: &'a [f64],
    pcr_k: &'a [f64],
    beta_pc_d: &'a [f64],
    sigma2: f64,
    sigma2_d: f64,
    sigma2_k: f64,
    sigma2_q: &'a [f64],
    rss: f64,
    rss_d: f64,
}

#[derive(Serialize)]
struct CompareErrors<'a> {
    ols: &'a [f64],
    pcr_d: &'a [f64],
    pcr_k: &'a [f64],
}

#[derive(Serialize)]
struct CompareCovariances<'a> {
    ols: &'a DenseMatrix,
    pcr_d: &'a CovarianceSet,
    pcr_k: &'a DenseMatrix,
}

/// OLS, the retained-component fit and the omitted-component fit side by side.
pub fn run_compare(cfg: &RunConfig) -> Result<String, AppError> {
    let a = analyze(cfg)?;
    let split = a.pcr.split;
    match cfg.format {
        OutputFormat::Json => Ok(to_json(&CompareJson {
            config: echo(cfg, &a.transform),
            names: &a.data.names,
            n: a.data.n(),
            p: split.p,
            d: split.d,
            k: split.k,
            estimates: CompareEstimates {
                ols: &a.ols.beta,
                pcr_d: &a.pcr.beta_d,
                pcr_k: &a.pcr.beta_k,
                beta_pc_d: &a.pcr.beta_pc_d,
                sigma2: a.ols.sigma2,
                sigma2_d: a.pcr.sigma2_d,
                sigma2_k: a.pcr.sigma2_k,
                sigma2_q: &a.pcr.sigma2_q,
                rss: a.ols.rss,
                rss_d: a.pcr.rss_d,
            },
            standard_errors: CompareErrors {
                ols: &a.report.se_ols,
                pcr_d: &a.report.se_pcr,
                pcr_k: &a.report.se_omitted,
            },
            covariances: CompareCovariances {
                ols: &a.ols.cov,
                pcr_d: &a.covariance,
                pcr_k: &a.omitted_cov,
            },
            diagnostics: &a.report,
            residuals: &a.residuals,
        })),
        OutputFormat::Table => {
            let mut out = header(&a, cfg.digits);
            out.push_str(&coefficient_table(
                &a.data.names,
                &[
                    CoefColumn {
                        title: "OLS".into(),
                        beta: &a.ols.beta,
                        se: &a.report.se_ols,
                        flags: None,
                    },
                    CoefColumn {
                        title: format!("PCR d={}", split.d),
                        beta: &a.pcr.beta_d,
                        se: &a.report.se_pcr,
                        flags: Some(&a.report.exceeds_ols),
                    },
                    CoefColumn {
                        title: format!("PCR k={}", split.k),
                        beta: &a.pcr.beta_k,
                        se: &a.report.se_omitted,
                        flags: Some(&a.report.omitted_exceeds_ols),
                    },
                ],
                cfg.digits,
            ));
            out.push_str(&format!(
                "\n{FLAG_MARK} standard error larger than OLS\ncovariance forms agree to {:e} (tolerance {:e})\n",
                a.residuals.covariance_forms_max, a.residuals.covariance_tolerance
            ));
            Ok(out)
        }
    }
}
