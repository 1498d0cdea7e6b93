//! OLS and principal-component regression estimators.
//!
//! Both fits run through the same thin SVD of the design. With `c = Uᵀy` the
//! component scores, every estimator is a sum over components:
//!
//! * `β̂   = Σ_q      v_q c_q / σ_q`
//! * `β̂_d = Σ_{q≤d}  v_q c_q / σ_q`, `β̂_k = β̂ − β̂_d`
//! * `yᵀH_S y = Σ_{q∈S} c_q²`
//!
//! Residual sums of squares are always computed from explicit residual
//! vectors rather than by subtracting explained sums from `yᵀy`.

use serde::Serialize;

use crate::error::{PcrError, Result};
use crate::linalg::{
    self, gram_pseudo_inverse, svd_thin, ComponentSplit, DenseMatrix, Subset, SvdFactors,
};

/// Response, design and column labels for one regression problem.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub y: Vec<f64>,
    pub x: DenseMatrix,
    pub names: Vec<String>,
    /// When set, column 0 is the all-ones intercept column.
    pub intercept_included: bool,
}

impl Dataset {
    pub fn new(
        y: Vec<f64>,
        x: DenseMatrix,
        names: Vec<String>,
        intercept_included: bool,
    ) -> Result<Self> {
        let (n, p) = (x.rows(), x.cols());
        if y.len() != n {
            return Err(PcrError::Shape(format!(
                "response has {} entries but design has {n} rows",
                y.len()
            )));
        }
        if names.len() != p {
            return Err(PcrError::Shape(format!(
                "{} column names for {p} design columns",
                names.len()
            )));
        }
        if let Some(i) = y.iter().position(|v| !v.is_finite()) {
            return Err(PcrError::NonFinite { row: i, col: 0 });
        }
        if n <= p {
            return Err(PcrError::DegreesOfFreedom { n, p });
        }
        if intercept_included {
            let ones: Vec<usize> = (0..p)
                .filter(|&j| (0..n).all(|i| x.get(i, j) == 1.0))
                .collect();
            if ones != [0] {
                return Err(PcrError::Shape(format!(
                    "intercept flagged but all-ones columns are {ones:?} (expected exactly column 0)"
                )));
            }
        }
        Ok(Self {
            y,
            x,
            names,
            intercept_included,
        })
    }

    pub fn n(&self) -> usize {
        self.x.rows()
    }

    pub fn p(&self) -> usize {
        self.x.cols()
    }

    pub fn yty(&self) -> f64 {
        linalg::norm2(&self.y)
    }

    pub fn design(&self) -> Result<Design> {
        Design::new(self.x.clone())
    }
}

/// A design matrix together with its SVD, reusable across responses.
#[derive(Debug, Clone)]
pub struct Design {
    x: DenseMatrix,
    factors: SvdFactors,
}

impl Design {
    pub fn new(x: DenseMatrix) -> Result<Self> {
        let tol = SvdFactors::default_rank_tol(x.rows(), x.cols());
        Self::with_rank_tol(x, tol)
    }

    pub fn with_rank_tol(x: DenseMatrix, rank_tol: f64) -> Result<Self> {
        let (n, p) = (x.rows(), x.cols());
        if n <= p {
            return Err(PcrError::DegreesOfFreedom { n, p });
        }
        let factors = svd_thin(&x, rank_tol)?;
        Ok(Self { x, factors })
    }

    pub fn x(&self) -> &DenseMatrix {
        &self.x
    }

    pub fn factors(&self) -> &SvdFactors {
        &self.factors
    }

    pub fn n(&self) -> usize {
        self.x.rows()
    }

    pub fn p(&self) -> usize {
        self.x.cols()
    }

    fn check_full_rank(&self) -> Result<()> {
        let threshold = self.factors.threshold();
        match self.factors.sigma.iter().position(|&s| s <= threshold) {
            Some(index) => Err(PcrError::RankDeficient {
                index,
                sigma: self.factors.sigma[index],
                threshold,
            }),
            None => Ok(()),
        }
    }

    fn scores(&self, y: &[f64]) -> Result<Vec<f64>> {
        if y.len() != self.n() {
            return Err(PcrError::Shape(format!(
                "response has {} entries but design has {} rows",
                y.len(),
                self.n()
            )));
        }
        self.factors.scores(y)
    }

    /// `Σ_{q∈idx} v_q c_q / σ_q`.
    fn coefficients(&self, scores: &[f64], idx: impl Iterator<Item = usize>) -> Vec<f64> {
        let p = self.p();
        let mut beta = vec![0.0; p];
        for q in idx {
            let w = scores[q] / self.factors.sigma[q];
            for (j, b) in beta.iter_mut().enumerate() {
                *b += self.factors.v.get(j, q) * w;
            }
        }
        beta
    }

    /// `‖y − Σ_{q∈idx} u_q c_q‖²`, i.e. `yᵀ(I − H_S)y`.
    fn residual_ss(&self, y: &[f64], scores: &[f64], idx: impl Iterator<Item = usize>) -> f64 {
        let mut r = y.to_vec();
        for q in idx {
            for (i, ri) in r.iter_mut().enumerate() {
                *ri -= self.factors.u.get(i, q) * scores[q];
            }
        }
        linalg::norm2(&r)
    }

    pub fn fit_ols(&self, y: &[f64]) -> Result<OlsEstimate> {
        self.check_full_rank()?;
        let (n, p) = (self.n(), self.p());
        let scores = self.scores(y)?;
        let beta = self.coefficients(&scores, 0..p);
        let fitted = self.x.mul_vec(&beta)?;
        let rss: f64 = y.iter().zip(&fitted).map(|(a, b)| (a - b) * (a - b)).sum();
        let dof = n - p;
        let sigma2 = rss / dof as f64;
        let cov = gram_pseudo_inverse(&self.factors, &Subset::All)?.scale(sigma2);
        Ok(OlsEstimate {
            beta,
            sigma2,
            cov,
            rss,
            dof,
        })
    }

    pub fn fit_pcr(&self, y: &[f64], d: usize) -> Result<PcrEstimate> {
        let (n, p) = (self.n(), self.p());
        let split = ComponentSplit::new(d, p)?;
        self.check_full_rank()?;
        let scores = self.scores(y)?;
        let k = split.k;

        let beta_d = self.coefficients(&scores, 0..d);
        let beta_k = self.coefficients(&scores, d..p);
        let rss_d = self.residual_ss(y, &scores, 0..d);
        let rss_k = self.residual_ss(y, &scores, d..p);
        let sigma2_q = (0..p)
            .map(|q| self.residual_ss(y, &scores, q..q + 1) / (n - 1) as f64)
            .collect();

        Ok(PcrEstimate {
            split,
            beta_pc_d: scores[..d].to_vec(),
            beta_d,
            beta_k,
            sigma2_d: rss_d / (n - d) as f64,
            sigma2_k: rss_k / (n - k) as f64,
            sigma2_q,
            rss_d,
            scores,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OlsEstimate {
    pub beta: Vec<f64>,
    pub sigma2: f64,
    /// `(XᵀX)⁻¹ σ̂²`.
    pub cov: DenseMatrix,
    pub rss: f64,
    pub dof: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PcrEstimate {
    pub split: ComponentSplit,
    /// `U_dᵀy`.
    pub beta_pc_d: Vec<f64>,
    /// `V_d Σ_d⁻¹ U_dᵀy`, lies in span(V_d).
    pub beta_d: Vec<f64>,
    /// `V_k Σ_k⁻¹ U_kᵀy`, lies in span(V_k).
    pub beta_k: Vec<f64>,
    /// `RSS_d / (n − d)`.
    pub sigma2_d: f64,
    /// `yᵀ(I − H_k)y / (n − k)`.
    pub sigma2_k: f64,
    /// Residual variance of the one-component regression on `u_q`, divisor `n − 1`.
    pub sigma2_q: Vec<f64>,
    pub rss_d: f64,
    /// All `p` component scores `Uᵀy`.
    pub scores: Vec<f64>,
}

impl PcrEstimate {
    /// `yᵀH_k y`.
    pub fn omitted_explained(&self) -> f64 {
        self.scores[self.split.d..].iter().map(|c| c * c).sum()
    }

    /// `yᵀH_d y`.
    pub fn retained_explained(&self) -> f64 {
        self.scores[..self.split.d].iter().map(|c| c * c).sum()
    }
}

pub fn fit_ols(data: &Dataset) -> Result<OlsEstimate> {
    data.design()?.fit_ols(&data.y)
}

pub fn fit_pcr(data: &Dataset, d: usize) -> Result<PcrEstimate> {
    data.design()?.fit_pcr(&data.y, d)
}

/// `max_j |β̂_j − (β̂_d + β̂_k)_j|`.
pub fn beta_additivity_check(ols: &OlsEstimate, pcr: &PcrEstimate) -> Result<f64> {
    let p = ols.beta.len();
    if pcr.beta_d.len() != p || pcr.beta_k.len() != p {
        return Err(PcrError::Shape(format!(
            "OLS has {p} coefficients, PCR has {}/{}",
            pcr.beta_d.len(),
            pcr.beta_k.len()
        )));
    }
    Ok(ols
        .beta
        .iter()
        .zip(pcr.beta_d.iter().zip(&pcr.beta_k))
        .fold(0.0, |m, (b, (bd, bk))| m.max((b - (bd + bk)).abs())))
}

fn check_same_problem(pcr: &PcrEstimate, data: &Dataset) -> Result<()> {
    if pcr.split.p != data.p() {
        return Err(PcrError::Shape(format!(
            "fit has {} components, dataset has {} columns",
            pcr.split.p,
            data.p()
        )));
    }
    Ok(())
}

/// OLS residual variance rebuilt from the PCR fit:
/// `(σ̂²_d (n − d) − yᵀH_k y) / (n − p)`.
pub fn recover_ols_sigma2(pcr: &PcrEstimate, data: &Dataset) -> Result<f64> {
    check_same_problem(pcr, data)?;
    let (n, p, d) = (data.n() as f64, data.p() as f64, pcr.split.d as f64);
    Ok((pcr.sigma2_d * (n - d) - pcr.omitted_explained()) / (n - p))
}

/// `σ̂²_d` rewritten through the omitted set, the omitted single components
/// and the retained single components.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Sigma2Forms {
    pub via_omitted_set: f64,
    pub via_omitted_components: f64,
    pub via_retained_components: f64,
}

impl Sigma2Forms {
    pub fn as_array(&self) -> [f64; 3] {
        [
            self.via_omitted_set,
            self.via_omitted_components,
            self.via_retained_components,
        ]
    }
}

pub fn sigma2_d_three_forms(
    ols: &OlsEstimate,
    pcr: &PcrEstimate,
    data: &Dataset,
) -> Result<Sigma2Forms> {
    check_same_problem(pcr, data)?;
    let ComponentSplit { d, k, p } = pcr.split;
    let n = data.n() as f64;
    let (d, k, p) = (d as f64, k as f64, p as f64);
    let yty = data.yty();
    let ols_part = ols.sigma2 * (n - p);
    let omitted_sum: f64 = pcr.sigma2_q[pcr.split.d..].iter().sum();
    let retained_sum: f64 = pcr.sigma2_q[..pcr.split.d].iter().sum();
    Ok(Sigma2Forms {
        via_omitted_set: (ols_part + yty - pcr.sigma2_k * (n - p + d)) / (n - d),
        via_omitted_components: (ols_part + yty * k - (n - 1.0) * omitted_sum) / (n - d),
        via_retained_components: ((n - 1.0) * retained_sum - yty * (d - 1.0)) / (n - d),
    })
}
