//! JSON run configuration. Every record rejects unknown keys.

use std::path::{Path, PathBuf};

use serde::Deserialize;
use torus_spectra::linalg::DenseMatrix;
use torus_spectra::quadrature::QuadratureConfig;
use torus_spectra::{DiscreteTorus, IntMatrix, RealTorus, TorsionFamily};

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    Spectrum,
    OracleCheck,
    Theta,
    Logdet,
    Converge,
}

impl Command {
    pub fn as_str(self) -> &'static str {
        match self {
            Command::Spectrum => "spectrum",
            Command::OracleCheck => "oracle-check",
            Command::Theta => "theta",
            Command::Logdet => "logdet",
            Command::Converge => "converge",
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TorsionConfig {
    Trivial,
    /// `d` rows of `n` phases in radians.
    Phases(Vec<Vec<f64>>),
    /// `n` orthogonal `d×d` matrices.
    Matrices(Vec<Vec<Vec<f64>>>),
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub command: Option<Command>,
    pub n: usize,
    pub d: usize,
    /// Integer matrix `M` of a discrete torus.
    pub matrix: Option<Vec<Vec<f64>>>,
    /// Real period matrix of a continuum torus.
    #[serde(rename = "A")]
    pub a: Option<Vec<Vec<f64>>>,
    #[serde(default)]
    pub torsion: Option<TorsionConfig>,
    #[serde(default)]
    pub params: serde_json::Value,
}

/// The torus named by a config.
pub enum TorusSpec {
    Discrete(DiscreteTorus),
    Real(RealTorus),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Closed,
    Oracle,
    Both,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpectrumParams {
    pub mode: Option<Mode>,
    /// Radius on `|w|` for continuum spectra.
    pub cutoff: Option<f64>,
    pub tol: Option<f64>,
    #[serde(default)]
    pub svg: bool,
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ThetaParams {
    pub t: Vec<f64>,
    /// 1-based fiber; the whole bundle when absent.
    pub fiber: Option<usize>,
    pub tail_eps: Option<f64>,
    pub tol: Option<f64>,
    #[serde(default)]
    pub inversion: bool,
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LogdetParams {
    /// Family scale for the χ rule; with `continuum` also the divisor `A = M/u`.
    pub u: Option<f64>,
    #[serde(default)]
    pub continuum: bool,
    #[serde(default)]
    pub quadrature: QuadratureConfig,
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RuleConfig {
    Exact,
    Rounded,
    Perturbed(Vec<Vec<i64>>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Quantity {
    Eigen,
    Theta,
    Logdet,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConvergeParams {
    pub rule: RuleConfig,
    pub u: Vec<u64>,
    pub count: Option<usize>,
    pub t: Option<f64>,
    pub quantities: Option<Vec<Quantity>>,
    #[serde(default)]
    pub quadrature: QuadratureConfig,
    #[serde(default)]
    pub svg: bool,
    pub out: Option<PathBuf>,
}

fn config_err(msg: impl Into<String>) -> CliError {
    CliError::Config(msg.into())
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| config_err(format!("cannot read {}: {e}", path.display())))?;
        let cfg: RunConfig =
            serde_json::from_str(&text).map_err(|e| config_err(format!("schema error: {e}")))?;
        cfg.check_shape()?;
        Ok(cfg)
    }

    fn check_shape(&self) -> Result<(), CliError> {
        if !(1..=4).contains(&self.n) {
            return Err(config_err(format!("n = {} outside 1..=4", self.n)));
        }
        if self.d == 0 {
            return Err(config_err("d must be positive"));
        }
        let rows = match (&self.matrix, &self.a) {
            (Some(m), None) | (None, Some(m)) => m,
            _ => return Err(config_err("exactly one of `matrix` and `A` is required")),
        };
        if rows.len() != self.n || rows.iter().any(|r| r.len() != self.n) {
            return Err(config_err(format!("matrix must be {0}x{0}", self.n)));
        }
        match &self.torsion {
            None | Some(TorsionConfig::Trivial) => {}
            Some(TorsionConfig::Phases(p)) => {
                if p.len() != self.d || p.iter().any(|r| r.len() != self.n) {
                    return Err(config_err(format!(
                        "torsion phases must be {} rows of {} entries",
                        self.d, self.n
                    )));
                }
            }
            Some(TorsionConfig::Matrices(ms)) => {
                if ms.len() != self.n
                    || ms
                        .iter()
                        .any(|m| m.len() != self.d || m.iter().any(|r| r.len() != self.d))
                {
                    return Err(config_err(format!(
                        "torsion needs {} matrices of size {}x{}",
                        self.n, self.d, self.d
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn torsion_family(&self) -> Result<TorsionFamily, CliError> {
        let t = match &self.torsion {
            None | Some(TorsionConfig::Trivial) => TorsionFamily::trivial(self.n, self.d),
            Some(TorsionConfig::Phases(p)) => TorsionFamily::from_phases(p)?,
            Some(TorsionConfig::Matrices(ms)) => TorsionFamily::from_matrices(
                ms.iter()
                    .map(|m| DenseMatrix::from_rows(m))
                    .collect::<Result<Vec<_>, _>>()?,
            )?,
        };
        Ok(t)
    }

    pub fn integer_matrix(&self) -> Result<IntMatrix, CliError> {
        let rows = self
            .matrix
            .as_ref()
            .ok_or_else(|| config_err("this command needs an integer `matrix`"))?;
        let ints = rows
            .iter()
            .map(|r| {
                r.iter()
                    .map(|&x| {
                        if x.fract() == 0.0 && x.abs() < 1e15 {
                            Ok(x as i64)
                        } else {
                            Err(config_err(format!("matrix entry {x} is not an integer")))
                        }
                    })
                    .collect::<Result<Vec<i64>, CliError>>()
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(IntMatrix::from_rows(&ints)?)
    }

    pub fn real_matrix(&self) -> Result<DenseMatrix<f64>, CliError> {
        let rows = self
            .a
            .as_ref()
            .or(self.matrix.as_ref())
            .expect("shape checked");
        Ok(DenseMatrix::from_rows(rows)?)
    }

    pub fn torus(&self, seed: u64) -> Result<TorusSpec, CliError> {
        let torsion = self.torsion_family()?;
        if self.matrix.is_some() {
            Ok(TorusSpec::Discrete(DiscreteTorus::with_seed(
                self.integer_matrix()?,
                torsion,
                seed,
            )?))
        } else {
            Ok(TorusSpec::Real(RealTorus::with_seed(
                self.real_matrix()?,
                torsion,
                seed,
            )?))
        }
    }

    pub fn params<T: serde::de::DeserializeOwned>(&self) -> Result<T, CliError> {
        let value = if self.params.is_null() {
            serde_json::Value::Object(Default::default())
        } else {
            self.params.clone()
        };
        serde_json::from_value(value).map_err(|e| config_err(format!("params: {e}")))
    }
}
