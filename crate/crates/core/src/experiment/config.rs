use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gibbs_model::{Coupling, GibbsModel, SingleSitePotential};
use crate::lattice::LatticeGeometry;
use crate::oracles::{GridSpec, SamplerConfig};

/// A complete experiment description. Unknown keys anywhere are rejected.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    pub model: ModelConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sampler: Option<SamplerConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<GridSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scan: Option<ScanConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub algebraic: Option<AlgebraicConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub observables: Option<Vec<ObservableName>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<OutputConfig>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    BoundReport,
    GaussianSharpness,
    PdeCheck,
    McmcCheck,
    ExponentialCertificate,
    AlgebraicCertificate,
    ThresholdScan,
}

impl ExperimentKind {
    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::BoundReport => "bound_report",
            ExperimentKind::GaussianSharpness => "gaussian_sharpness",
            ExperimentKind::PdeCheck => "pde_check",
            ExperimentKind::McmcCheck => "mcmc_check",
            ExperimentKind::ExponentialCertificate => "exponential_certificate",
            ExperimentKind::AlgebraicCertificate => "algebraic_certificate",
            ExperimentKind::ThresholdScan => "threshold_scan",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub geometry: GeometryConfig,
    /// One shared potential or one per site.
    pub potentials: Vec<PotentialConfig>,
    pub coupling: CouplingConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum GeometryConfig {
    Periodic { side_lengths: Vec<usize> },
    Explicit { metric: Vec<Vec<f64>> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PotentialConfig {
    pub quadratic: f64,
    #[serde(default)]
    pub perturbation: PerturbationConfig,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum PerturbationConfig {
    #[default]
    None,
    Cosine { amplitude: f64, frequency: f64 },
    Table { x_min: f64, x_max: f64, values: Vec<f64>, osc_bound: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum CouplingConfig {
    NearestNeighbor { epsilon: f64 },
    Algebraic { c: f64, alpha: f64, d: usize },
    Explicit { matrix: Vec<Vec<f64>> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScanConfig {
    pub epsilons: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AlgebraicConfig {
    /// Decay exponent `α` of the coupling profile `κ_ij ≲ |i−j|^{−(d+α)}`.
    pub alpha: f64,
}

/// Built-in observables for grid experiments: `x`, `cube` or `sin` of one site.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum ObservableName {
    Coordinate { site: usize },
    Cube { site: usize },
    Sin { site: usize },
}

impl ObservableName {
    pub fn site(self) -> usize {
        match self {
            ObservableName::Coordinate { site } | ObservableName::Cube { site } | ObservableName::Sin { site } => site,
        }
    }

    pub fn label(self) -> String {
        match self {
            ObservableName::Coordinate { site } => format!("x{site}"),
            ObservableName::Cube { site } => format!("x{site}^3"),
            ObservableName::Sin { site } => format!("sin(x{site})"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutputFormat {
    /// `report.json` only.
    Json,
    /// `report.json` plus `pairs.csv` (and `phi.csv` for grid runs).
    #[default]
    Csv,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub path: Option<String>,
    #[serde(default)]
    pub format: OutputFormat,
}

impl ModelConfig {
    pub fn build(&self) -> Result<GibbsModel> {
        let geometry = match &self.geometry {
            GeometryConfig::Periodic { side_lengths } => LatticeGeometry::periodic(side_lengths)?,
            GeometryConfig::Explicit { metric } => LatticeGeometry::explicit(metric.clone())?,
        };
        let potentials = self.potentials.iter().map(PotentialConfig::build).collect::<Result<Vec<_>>>()?;
        let coupling = match &self.coupling {
            CouplingConfig::NearestNeighbor { epsilon } => Coupling::NearestNeighbor { epsilon: *epsilon },
            CouplingConfig::Algebraic { c, alpha, d } => Coupling::Algebraic { c: *c, alpha: *alpha, d: *d },
            CouplingConfig::Explicit { matrix } => {
                let n = matrix.len();
                if matrix.iter().any(|row| row.len() != n) {
                    return Err(Error::Config("coupling matrix must be square".into()));
                }
                Coupling::Explicit(DMatrix::from_fn(n, n, |i, j| matrix[i][j]))
            }
        };
        GibbsModel::new(geometry, potentials, coupling)
    }
}

impl PotentialConfig {
    fn build(&self) -> Result<SingleSitePotential> {
        match &self.perturbation {
            PerturbationConfig::None => SingleSitePotential::gaussian(self.quadratic),
            PerturbationConfig::Cosine { amplitude, frequency } => {
                SingleSitePotential::cosine(self.quadratic, *amplitude, *frequency)
            }
            PerturbationConfig::Table { x_min, x_max, values, osc_bound } => {
                SingleSitePotential::tabulated(self.quadratic, *x_min, *x_max, values.clone(), *osc_bound)
            }
        }
    }
}

impl ExperimentConfig {
    /// Parses strict JSON; syntax and schema errors carry line and column.
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Checks that every block the kind needs is present.
    pub fn validate(&self) -> Result<()> {
        let missing = |block: &str| {
            Err(Error::Config(format!("experiment kind {} requires a `{block}` block", self.kind.name())))
        };
        match self.kind {
            ExperimentKind::McmcCheck if self.sampler.is_none() => return missing("sampler"),
            ExperimentKind::PdeCheck if self.grid.is_none() => return missing("grid"),
            ExperimentKind::ThresholdScan if self.scan.is_none() => return missing("scan"),
            ExperimentKind::AlgebraicCertificate if self.algebraic.is_none() => return missing("algebraic"),
            _ => {}
        }
        if let Some(s) = &self.scan {
            if s.epsilons.is_empty() {
                return Err(Error::Config("scan.epsilons must not be empty".into()));
            }
        }
        Ok(())
    }

    pub fn format(&self) -> OutputFormat {
        self.output.as_ref().map(|o| o.format).unwrap_or_default()
    }
}
