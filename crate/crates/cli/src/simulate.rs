//! The `simulate` command and its JSON config file.
//!
//! ```json
//! {
//!   "design": { "random": { "n": 100, "p": 5, "seed": 7, "intercept": true } },
//!   "beta": { "components": { "retained": [1.0, -0.5], "omitted": [] } },
//!   "sigma2_true": 1.0,
//!   "d": 2,
//!   "replicates": 5000,
//!   "seed": 42,
//!   "alert_z": 4.0
//! }
//! ```
//!
//! `design` is either `{"matrix": [[...], ...]}` or a seeded random design.
//! `beta` is either `{"explicit": [...]}` or coefficients on the retained and
//! omitted right singular vectors (`β = V_d a + V_k b`); an empty list means
//! zeros.

use std::path::Path;

use pcr_core::linalg::svd_thin;
use pcr_core::montecarlo::{
    run_simulation, theory_comparison, SimulationConfig, SimulationResult, TheoryReport,
};
use pcr_core::{DenseMatrix, SvdFactors};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::commands::OutputFormat;
use crate::error::AppError;
use crate::report::simulation_table;

pub const DEFAULT_ALERT_Z: f64 = 4.0;

fn default_alert_z() -> f64 {
    DEFAULT_ALERT_Z
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateFile {
    pub design: DesignSpec,
    pub beta: BetaSpec,
    pub sigma2_true: f64,
    pub d: usize,
    pub replicates: usize,
    pub seed: u64,
    #[serde(default = "default_alert_z")]
    pub alert_z: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum DesignSpec {
    Matrix(DenseMatrix),
    Random(RandomDesign),
}

/// Gaussian design with equicorrelated columns: `x_j = √(1−ρ) z_j + √ρ z_0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RandomDesign {
    pub n: usize,
    /// Number of columns, including the intercept when present.
    pub p: usize,
    pub seed: u64,
    #[serde(default)]
    pub intercept: bool,
    #[serde(default)]
    pub correlation: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum BetaSpec {
    Explicit(Vec<f64>),
    Components {
        #[serde(default)]
        retained: Vec<f64>,
        #[serde(default)]
        omitted: Vec<f64>,
    },
}

impl RandomDesign {
    pub fn build(&self) -> Result<DenseMatrix, String> {
        let first = usize::from(self.intercept);
        if self.p <= first || self.n < self.p {
            return Err(format!(
                "need n >= p > {first}, got n = {}, p = {}",
                self.n, self.p
            ));
        }
        if !(0.0..1.0).contains(&self.correlation) {
            return Err(format!(
                "correlation must lie in [0, 1), got {}",
                self.correlation
            ));
        }
        let mut rng = ChaCha20Rng::seed_from_u64(self.seed);
        let (own, shared) = ((1.0 - self.correlation).sqrt(), self.correlation.sqrt());
        let mut data = Vec::with_capacity(self.n * self.p);
        for _ in 0..self.n {
            let common: f64 = rng.sample(StandardNormal);
            if self.intercept {
                data.push(1.0);
            }
            for _ in first..self.p {
                let z: f64 = rng.sample(StandardNormal);
                data.push(own * z + shared * common);
            }
        }
        DenseMatrix::new(self.n, self.p, data).map_err(|e| e.to_string())
    }
}

impl BetaSpec {
    pub fn build(&self, f: &SvdFactors, d: usize) -> Result<Vec<f64>, String> {
        let p = f.p();
        match self {
            BetaSpec::Explicit(b) if b.len() == p => Ok(b.clone()),
            BetaSpec::Explicit(b) => Err(format!("expected {p} coefficients, got {}", b.len())),
            BetaSpec::Components { retained, omitted } => {
                let k = p.saturating_sub(d);
                let check = |v: &[f64], want: usize, what: &str| {
                    if v.is_empty() || v.len() == want {
                        Ok(())
                    } else {
                        Err(format!("{what} needs {want} coefficients, got {}", v.len()))
                    }
                };
                check(retained, d, "retained")?;
                check(omitted, k, "omitted")?;
                let mut beta = vec![0.0; p];
                let coeffs = retained
                    .iter()
                    .enumerate()
                    .chain(omitted.iter().enumerate().map(|(i, c)| (d + i, c)));
                for (q, c) in coeffs {
                    for (j, b) in beta.iter_mut().enumerate() {
                        *b += f.v.get(j, q) * c;
                    }
                }
                Ok(beta)
            }
        }
    }
}

pub fn read_config(path: &Path) -> Result<SimulateFile, AppError> {
    let display = path.display().to_string();
    let text = std::fs::read_to_string(path).map_err(|source| AppError::Io {
        path: display.clone(),
        source,
    })?;
    parse_config(&display, &text)
}

pub fn parse_config(path: &str, text: &str) -> Result<SimulateFile, AppError> {
    let de = &mut serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(de).map_err(|e| AppError::Config {
        path: path.to_string(),
        field: match e.path().to_string() {
            p if p == "." => "<root>".into(),
            p => p,
        },
        message: e.inner().to_string(),
    })
}

/// Resolves the design and coefficients into a core simulation config.
pub fn resolve(file: &SimulateFile, path: &str) -> Result<SimulationConfig, AppError> {
    let config_err = |field: &str, message: String| AppError::Config {
        path: path.to_string(),
        field: field.to_string(),
        message,
    };
    let x = match &file.design {
        DesignSpec::Matrix(m) => m.clone(),
        DesignSpec::Random(r) => r.build().map_err(|m| config_err("design.random", m))?,
    };
    if x.rows() <= x.cols() {
        return Err(config_err(
            "design",
            format!("need more rows than columns, got {}x{}", x.rows(), x.cols()),
        ));
    }
    if file.d == 0 || file.d > x.cols() {
        return Err(config_err("d", format!("must lie in 1..={}", x.cols())));
    }
    let f = svd_thin(&x, SvdFactors::default_rank_tol(x.rows(), x.cols()))?;
    let beta_true = file
        .beta
        .build(&f, file.d)
        .map_err(|m| config_err("beta", m))?;
    let cfg = SimulationConfig {
        x,
        beta_true,
        sigma2_true: file.sigma2_true,
        d: file.d,
        replicates: file.replicates,
        seed: file.seed,
    };
    cfg.validate()
        .map_err(|e| config_err("config", e.to_string()))?;
    Ok(cfg)
}

#[derive(Serialize)]
struct SimulateJson<'a> {
    config: &'a SimulateFile,
    result: &'a SimulationResult,
    comparison: &'a TheoryReport,
    alert_z: f64,
    alerts: Vec<&'a str>,
}

pub struct SimulateOutput {
    pub text: String,
    pub alerts: usize,
    pub alert_z: f64,
}

/// Runs the simulation. Alerts are reported in the output; the caller decides
/// whether they become a failure exit status.
pub fn run_simulate(
    path: &Path,
    seed_override: Option<u64>,
    alert_override: Option<f64>,
    format: OutputFormat,
) -> Result<SimulateOutput, AppError> {
    let mut file = read_config(path)?;
    if let Some(seed) = seed_override {
        file.seed = seed;
    }
    if let Some(z) = alert_override {
        file.alert_z = z;
    }
    run_file(&file, &path.display().to_string(), format)
}

pub fn run_file(
    file: &SimulateFile,
    path: &str,
    format: OutputFormat,
) -> Result<SimulateOutput, AppError> {
    let cfg = resolve(file, path)?;
    let result = run_simulation(&cfg)?;
    let comparison = theory_comparison(&result);
    let alerts: Vec<&str> = comparison
        .alerts(file.alert_z)
        .into_iter()
        .map(|r| r.claim.as_str())
        .collect();
    let count = alerts.len();
    let text = match format {
        OutputFormat::Json => {
            let mut s = serde_json::to_string_pretty(&SimulateJson {
                config: file,
                result: &result,
                comparison: &comparison,
                alert_z: file.alert_z,
                alerts,
            })
            .expect("simulation output serializes");
            s.push('\n');
            s
        }
        OutputFormat::Table => simulation_table(&result, &comparison, file.alert_z),
    };
    Ok(SimulateOutput {
        text,
        alerts: count,
        alert_z: file.alert_z,
    })
}
