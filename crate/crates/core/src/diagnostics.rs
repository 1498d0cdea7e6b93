//! Covariance, inflation and bias bookkeeping for a PCR fit relative to OLS.
//!
//! The covariance of `β̂_d` is available in three algebraically equal forms:
//!
//! * direct: `V_d Σ_d⁻² V_dᵀ σ̂²_d`
//! * scaled: `cov(β̂) V_d V_dᵀ σ̂²_d / σ̂²`
//! * difference: `{cov(β̂) − (σ̂² / σ̂²_k) cov(β̂_k)} σ̂²_d / σ̂²`
//!
//! The direct form is canonical; the other two are carried along as
//! cross-checks.

use serde::Serialize;

use crate::error::{PcrError, Result};
use crate::linalg::{gram_pseudo_inverse, loading_projector, DenseMatrix, SvdFactors};
use crate::model::{Design, OlsEstimate, PcrEstimate};

/// Variances below this are treated as zero.
pub const VARIANCE_FLOOR: f64 = 1e-300;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CovarianceStatus {
    /// All three forms computed.
    Complete,
    /// `d = p`: no omitted components, the difference form does not exist.
    FullModel,
    /// `σ̂²_k` is zero, the difference form is undefined.
    DegenerateOmitted,
    /// `σ̂²` is zero, only the direct form is available.
    DegenerateOls,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CovarianceSet {
    pub direct: DenseMatrix,
    pub scaled: Option<DenseMatrix>,
    pub difference: Option<DenseMatrix>,
    pub status: CovarianceStatus,
}

impl CovarianceSet {
    /// Largest pairwise entrywise difference among the available forms.
    pub fn max_disagreement(&self) -> f64 {
        let forms: Vec<&DenseMatrix> = std::iter::once(&self.direct)
            .chain(self.scaled.as_ref())
            .chain(self.difference.as_ref())
            .collect();
        let mut worst = 0.0f64;
        for (i, a) in forms.iter().enumerate() {
            for b in &forms[i + 1..] {
                worst = worst.max(a.max_abs_diff(b));
            }
        }
        worst
    }

    /// `1e-8 · (1 + max diagonal of the direct form)`.
    pub fn tolerance(&self) -> f64 {
        let max_diag = self.direct.diag().into_iter().fold(0.0, f64::max);
        1e-8 * (1.0 + max_diag)
    }

    pub fn agrees(&self) -> bool {
        self.max_disagreement() <= self.tolerance()
    }
}

pub fn pcr_covariance(
    f: &SvdFactors,
    ols: &OlsEstimate,
    pcr: &PcrEstimate,
) -> Result<CovarianceSet> {
    let split = pcr.split;
    let direct = gram_pseudo_inverse(f, &split.retained())?.scale(pcr.sigma2_d);
    if ols.sigma2 < VARIANCE_FLOOR {
        return Ok(CovarianceSet {
            direct,
            scaled: None,
            difference: None,
            status: CovarianceStatus::DegenerateOls,
        });
    }
    let ratio = pcr.sigma2_d / ols.sigma2;
    let scaled = ols
        .cov
        .matmul(&loading_projector(f, &split.retained())?)?
        .scale(ratio);

    if split.k == 0 {
        return Ok(CovarianceSet {
            direct,
            scaled: Some(scaled),
            difference: None,
            status: CovarianceStatus::FullModel,
        });
    }
    if pcr.sigma2_k < VARIANCE_FLOOR {
        return Ok(CovarianceSet {
            direct,
            scaled: Some(scaled),
            difference: None,
            status: CovarianceStatus::DegenerateOmitted,
        });
    }
    let cov_k = gram_pseudo_inverse(f, &split.omitted())?.scale(pcr.sigma2_k);
    let difference = ols
        .cov
        .sub(&cov_k.scale(ols.sigma2 / pcr.sigma2_k))?
        .scale(ratio);
    Ok(CovarianceSet {
        direct,
        scaled: Some(scaled),
        difference: Some(difference),
        status: CovarianceStatus::Complete,
    })
}

/// `cov(β̂_k) = V_k Σ_k⁻² V_kᵀ σ̂²_k`; the zero matrix when `d = p`.
pub fn omitted_covariance(f: &SvdFactors, pcr: &PcrEstimate) -> Result<DenseMatrix> {
    Ok(gram_pseudo_inverse(f, &pcr.split.omitted())?.scale(pcr.sigma2_k))
}

/// Max-abs entry of `cov(β̂) − [cov(β̂_d) σ̂²/σ̂²_d + cov(β̂_k) σ̂²/σ̂²_k]`.
pub fn variance_recomposition_check(
    f: &SvdFactors,
    ols: &OlsEstimate,
    pcr: &PcrEstimate,
) -> Result<f64> {
    let split = pcr.split;
    if split.k == 0 {
        return Err(PcrError::Precondition(
            "variance recomposition needs at least one omitted component".into(),
        ));
    }
    if pcr.sigma2_d < VARIANCE_FLOOR || pcr.sigma2_k < VARIANCE_FLOOR {
        return Err(PcrError::Degenerate(format!(
            "sigma2_d = {:e}, sigma2_k = {:e}",
            pcr.sigma2_d, pcr.sigma2_k
        )));
    }
    let cov_d = gram_pseudo_inverse(f, &split.retained())?.scale(pcr.sigma2_d);
    let cov_k = omitted_covariance(f, pcr)?;
    let rebuilt = cov_d
        .scale(ols.sigma2 / pcr.sigma2_d)
        .add(&cov_k.scale(ols.sigma2 / pcr.sigma2_k))?;
    Ok(ols.cov.max_abs_diff(&rebuilt))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BiasReport {
    /// `β̂_k`, the estimated bias of `β̂_d` for `β`.
    pub bias_beta: Vec<f64>,
    /// `((n−p)/(n−d) − 1) σ̂² + (β̂ − β̂_d)ᵀXᵀX(β̂ − β̂_d)/(n − d)`.
    pub bias_sigma2_plugin: f64,
}

pub fn bias_report(ols: &OlsEstimate, pcr: &PcrEstimate, x: &DenseMatrix) -> Result<BiasReport> {
    let (n, p) = (x.rows(), x.cols());
    if ols.beta.len() != p || pcr.split.p != p {
        return Err(PcrError::Shape(format!(
            "design has {p} columns, fits have {} and {}",
            ols.beta.len(),
            pcr.split.p
        )));
    }
    let diff: Vec<f64> = ols
        .beta
        .iter()
        .zip(&pcr.beta_d)
        .map(|(b, bd)| b - bd)
        .collect();
    let x_diff = x.mul_vec(&diff)?;
    let quad: f64 = x_diff.iter().map(|v| v * v).sum();
    Ok(BiasReport {
        bias_beta: pcr.beta_k.clone(),
        bias_sigma2_plugin: plugin_sigma2_bias(n, p, pcr.split.d, ols.sigma2, quad),
    })
}

/// `((n−p)/(n−d) − 1) σ² + quad/(n − d)`, with `quad = (β − β_d)ᵀXᵀX(β − β_d)`.
pub fn plugin_sigma2_bias(n: usize, p: usize, d: usize, sigma2: f64, quad: f64) -> f64 {
    let (n, p, d) = (n as f64, p as f64, d as f64);
    ((n - p) / (n - d) - 1.0) * sigma2 + quad / (n - d)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DiagnosticsReport {
    pub d: usize,
    /// `σ̂²_d / σ̂²`; absent when `σ̂²` is zero. May be below one.
    pub inflation_ratio: Option<f64>,
    /// `diag(V_d V_dᵀ)`.
    pub loading_diag: Vec<f64>,
    pub se_ols: Vec<f64>,
    pub se_pcr: Vec<f64>,
    /// `se_pcr[j] > se_ols[j]`, strictly.
    pub exceeds_ols: Vec<bool>,
    /// Standard errors of `β̂_k`.
    pub se_omitted: Vec<f64>,
    pub omitted_exceeds_ols: Vec<bool>,
    pub bias_beta: Vec<f64>,
    pub bias_sigma2_plugin: f64,
    pub covariance_status: CovarianceStatus,
}

fn std_errors(cov: &DenseMatrix) -> Vec<f64> {
    cov.diag().into_iter().map(|v| v.max(0.0).sqrt()).collect()
}

fn strictly_greater(a: &[f64], b: &[f64]) -> Vec<bool> {
    a.iter().zip(b).map(|(x, y)| x > y).collect()
}

/// Builds the report together with the covariance set it was derived from.
pub fn build_report(
    design: &Design,
    ols: &OlsEstimate,
    pcr: &PcrEstimate,
) -> Result<(DiagnosticsReport, CovarianceSet)> {
    let f = design.factors();
    let cov = pcr_covariance(f, ols, pcr)?;
    let bias = bias_report(ols, pcr, design.x())?;
    let se_ols = std_errors(&ols.cov);
    let se_pcr = std_errors(&cov.direct);
    let se_omitted = std_errors(&omitted_covariance(f, pcr)?);
    let report = DiagnosticsReport {
        d: pcr.split.d,
        inflation_ratio: (ols.sigma2 >= VARIANCE_FLOOR).then(|| pcr.sigma2_d / ols.sigma2),
        loading_diag: loading_projector(f, &pcr.split.retained())?.diag(),
        exceeds_ols: strictly_greater(&se_pcr, &se_ols),
        omitted_exceeds_ols: strictly_greater(&se_omitted, &se_ols),
        se_ols,
        se_pcr,
        se_omitted,
        bias_beta: bias.bias_beta,
        bias_sigma2_plugin: bias.bias_sigma2_plugin,
        covariance_status: cov.status,
    };
    Ok((report, cov))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Dataset;

    const EPS: f64 = 1e-12;

    fn toy() -> (Design, OlsEstimate, PcrEstimate) {
        let data = Dataset::new(
            vec![1.0, 2.0, 3.0],
            DenseMatrix::from_rows(&[[1.0, 0.0], [0.0, 2.0], [0.0, 0.0]]).unwrap(),
            vec!["a".into(), "b".into()],
            false,
        )
        .unwrap();
        let design = data.design().unwrap();
        let ols = design.fit_ols(&data.y).unwrap();
        let pcr = design.fit_pcr(&data.y, 1).unwrap();
        (design, ols, pcr)
    }

    #[test]
    fn toy_three_covariance_forms() {
        let (design, ols, pcr) = toy();
        let set = pcr_covariance(design.factors(), &ols, &pcr).unwrap();
        let want = DenseMatrix::from_diag(&[0.0, 1.25]).unwrap();
        assert_eq!(set.status, CovarianceStatus::Complete);
        assert!(set.direct.max_abs_diff(&want) <= EPS);
        assert!(set.scaled.as_ref().unwrap().max_abs_diff(&want) <= EPS);
        assert!(set.difference.as_ref().unwrap().max_abs_diff(&want) <= EPS);
        assert!(set.agrees());

        let cov_k = omitted_covariance(design.factors(), &pcr).unwrap();
        assert!(cov_k.max_abs_diff(&DenseMatrix::from_diag(&[6.5, 0.0]).unwrap()) <= EPS);
    }

    #[test]
    fn toy_recomposition_and_bias() {
        let (design, ols, pcr) = toy();
        assert!(variance_recomposition_check(design.factors(), &ols, &pcr).unwrap() <= EPS);
        let bias = bias_report(&ols, &pcr, design.x()).unwrap();
        assert!((bias.bias_sigma2_plugin + 4.0).abs() <= EPS);
        assert_eq!(bias.bias_beta, pcr.beta_k);
    }

    #[test]
    fn toy_report_flags() {
        let (design, ols, pcr) = toy();
        let (report, _) = build_report(&design, &ols, &pcr).unwrap();
        assert_eq!(report.exceeds_ols, vec![false, false]);
        assert!((report.se_pcr[1] - 1.25f64.sqrt()).abs() <= EPS);
        assert!((report.se_ols[0] - 3.0).abs() <= EPS);
        assert!((report.se_omitted[0] - 6.5f64.sqrt()).abs() <= EPS);
        assert!((report.inflation_ratio.unwrap() - 5.0 / 9.0).abs() <= EPS);
        assert_eq!(report.loading_diag, vec![0.0, 1.0]);
    }

    #[test]
    fn full_model_collapses_to_ols() {
        let (design, ols, _) = toy();
        let y = [1.0, 2.0, 3.0];
        let pcr = design.fit_pcr(&y, 2).unwrap();
        let set = pcr_covariance(design.factors(), &ols, &pcr).unwrap();
        assert_eq!(set.status, CovarianceStatus::FullModel);
        assert!(set.difference.is_none());
        assert!(set.direct.max_abs_diff(&ols.cov) <= EPS);
        assert!(set.scaled.unwrap().max_abs_diff(&ols.cov) <= EPS);
        assert!(matches!(
            variance_recomposition_check(design.factors(), &ols, &pcr),
            Err(PcrError::Precondition(_))
        ));
        let (report, _) = build_report(&design, &ols, &pcr).unwrap();
        assert!(report.bias_sigma2_plugin.abs() <= EPS);
        assert!(report.bias_beta.iter().all(|&b| b == 0.0));
    }

    #[test]
    fn perfect_ols_fit_is_degenerate() {
        let x = DenseMatrix::from_rows(&[[1.0, 0.0], [0.0, 1.0], [0.0, 0.0]]).unwrap();
        let design = Design::new(x).unwrap();
        let y = [1.0, 1.0, 0.0];
        let ols = design.fit_ols(&y).unwrap();
        let pcr = design.fit_pcr(&y, 1).unwrap();
        assert_eq!(ols.sigma2, 0.0);
        let set = pcr_covariance(design.factors(), &ols, &pcr).unwrap();
        assert_eq!(set.status, CovarianceStatus::DegenerateOls);
        assert!(set.scaled.is_none() && set.difference.is_none());
        let (report, _) = build_report(&design, &ols, &pcr).unwrap();
        assert_eq!(report.inflation_ratio, None);
    }
}
