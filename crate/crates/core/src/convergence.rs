//! Families of discrete tori `DT_u` converging to a real torus, and the
//! eigenvalue, theta and log-determinant tables along them.

use serde::Serialize;

use crate::connection::{TorsionFamily, DEFAULT_SEED};
use crate::lattice::IntMatrix;
use crate::linalg::DenseMatrix;
use crate::logdet::{in0, logdet_dt, logdet_rt};
use crate::quadrature::QuadratureConfig;
use crate::spectrum::{dt_spectrum_closed, multiplicities, rt_spectrum_closed, EigenvalueEntry};
use crate::theta::{theta_convergence_table, Component, ThetaConvergenceRow};
use crate::torus::{DiscreteTorus, RealTorus};
use crate::{Error, Result};

/// Tolerance for `u·A` to count as integral under [`FamilyRule::Exact`].
pub const EXACT_TOL: f64 = 1e-9;

/// How `M_u` is produced from `A`.
#[derive(Debug, Clone, PartialEq)]
pub enum FamilyRule {
    /// `M_u = u·A`; requires `u·A` integral.
    Exact,
    /// `M_u = round(u·A)`, half-up, with `+1` on the diagonal until nonsingular.
    Rounded,
    /// `M_u = round(u·A) + P` for a fixed integer `P`.
    Perturbed(IntMatrix),
}

/// Torsion carried along the family.
#[derive(Debug, Clone)]
pub enum FamilyTorsion {
    Fixed(TorsionFamily),
    /// One family per `u`, converging to `limit`.
    PerU {
        limit: TorsionFamily,
        members: Vec<TorsionFamily>,
    },
}

#[derive(Debug, Clone)]
pub struct FamilySpec {
    pub a: DenseMatrix<f64>,
    pub rule: FamilyRule,
    pub torsion: FamilyTorsion,
    pub u_values: Vec<u64>,
    /// Seed for the joint diagonalization of every member.
    pub seed: u64,
}

fn round_half_up(x: f64) -> i64 {
    (x + 0.5).floor() as i64
}

impl FamilySpec {
    pub fn new(
        a: DenseMatrix<f64>,
        rule: FamilyRule,
        torsion: FamilyTorsion,
        u_values: Vec<u64>,
    ) -> Result<Self> {
        let spec = Self {
            a,
            rule,
            torsion,
            u_values,
            seed: DEFAULT_SEED,
        };
        spec.validate()?;
        Ok(spec)
    }

    fn validate(&self) -> Result<()> {
        if self.u_values.is_empty()
            || self.u_values[0] == 0
            || self.u_values.windows(2).any(|w| w[0] >= w[1])
        {
            return Err(Error::InvalidInput(
                "u values must be positive and strictly increasing".into(),
            ));
        }
        if let FamilyTorsion::PerU { members, .. } = &self.torsion {
            if members.len() != self.u_values.len() {
                return Err(Error::InvalidInput(format!(
                    "{} torsion families for {} values of u",
                    members.len(),
                    self.u_values.len()
                )));
            }
        }
        if let FamilyRule::Perturbed(p) = &self.rule {
            if p.dim() != self.a.rows() {
                return Err(Error::InvalidInput(
                    "perturbation has the wrong dimension".into(),
                ));
            }
        }
        Ok(())
    }

    /// `M_u` under the family rule.
    pub fn matrix_at(&self, u: u64) -> Result<IntMatrix> {
        let n = self.a.rows();
        let uf = u as f64;
        let mut rows: Vec<Vec<i64>> = (0..n)
            .map(|r| (0..n).map(|c| round_half_up(uf * self.a[(r, c)])).collect())
            .collect();
        match &self.rule {
            FamilyRule::Exact => {
                for r in 0..n {
                    for c in 0..n {
                        if (uf * self.a[(r, c)] - rows[r][c] as f64).abs() > EXACT_TOL {
                            return Err(Error::InvalidInput(format!(
                                "u·A is not integral at u = {u}"
                            )));
                        }
                    }
                }
            }
            FamilyRule::Rounded => {
                for _ in 0..=n {
                    if IntMatrix::from_rows(&rows)?.det() != 0 {
                        break;
                    }
                    for (k, row) in rows.iter_mut().enumerate() {
                        row[k] += 1;
                    }
                }
            }
            FamilyRule::Perturbed(p) => {
                for (r, row) in rows.iter_mut().enumerate() {
                    for (c, x) in row.iter_mut().enumerate() {
                        *x += p.get(r, c);
                    }
                }
            }
        }
        let m = IntMatrix::from_rows(&rows)?;
        if m.det() == 0 {
            return Err(Error::SingularMatrix);
        }
        Ok(m)
    }

    pub fn torsion_at(&self, index: usize) -> &TorsionFamily {
        match &self.torsion {
            FamilyTorsion::Fixed(t) => t,
            FamilyTorsion::PerU { members, .. } => &members[index],
        }
    }

    pub fn limit_torsion(&self) -> &TorsionFamily {
        match &self.torsion {
            FamilyTorsion::Fixed(t) => t,
            FamilyTorsion::PerU { limit, .. } => limit,
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn members(&self) -> Result<Vec<(u64, DiscreteTorus)>> {
        self.u_values
            .iter()
            .enumerate()
            .map(|(k, &u)| {
                Ok((
                    u,
                    DiscreteTorus::with_seed(
                        self.matrix_at(u)?,
                        self.torsion_at(k).clone(),
                        self.seed,
                    )?,
                ))
            })
            .collect()
    }

    pub fn continuum(&self) -> Result<RealTorus> {
        RealTorus::with_seed(self.a.clone(), self.limit_torsion().clone(), self.seed)
    }
}

/// `dim ker L_{RT}`: the number of exactly vanishing eigenphase rows.
pub fn kernel_dim_rt(torsion: &TorsionFamily, seed: u64) -> Result<usize> {
    Ok(torsion.clone().validate()?.eigenphases(seed)?.zero_rows())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceRow {
    pub u: u64,
    pub quantity: String,
    pub discrete: f64,
    pub continuum: f64,
    pub gap: f64,
}

/// Discrete-side count for one continuum eigenvalue at the largest `u`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MultiplicityCheck {
    pub value: f64,
    pub continuum_multiplicity: usize,
    pub discrete_count: usize,
    pub labels_distinct: bool,
}

impl MultiplicityCheck {
    pub fn passed(&self) -> bool {
        self.labels_distinct && self.continuum_multiplicity == self.discrete_count
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EigenTable {
    pub rows: Vec<ConvergenceRow>,
    pub multiplicities: Vec<MultiplicityCheck>,
}

/// Relative tolerance for grouping continuum eigenvalues into multiplicities.
const CLUSTER_TOL: f64 = 1e-9;

/// The `m` smallest continuum eigenvalues (all of them, with labels), plus
/// the full list up to a cutoff at which that window is complete.
fn smallest_continuum(rt: &RealTorus, m: usize) -> Result<(Vec<EigenvalueEntry<f64>>, f64)> {
    let mut radius = 1.0
        / (0..rt.n())
            .map(|j| rt.matrix().col_norm(j))
            .fold(f64::INFINITY, f64::min);
    loop {
        let spec = rt_spectrum_closed::<f64>(rt, radius)?;
        let mut entries = spec.entries;
        entries.sort_by(|a, b| a.lambda.total_cmp(&b.lambda));
        let complete = 4.0 * std::f64::consts::PI.powi(2) * radius * radius;
        if entries.len() > m && entries[m].lambda < complete {
            // Keep everything below the cutoff so the last cluster is whole.
            entries.retain(|e| e.lambda < complete);
            return Ok((entries, complete));
        }
        radius *= 1.5;
    }
}

/// Gaps between the `m` smallest `u²λ` of each `DT_u` and the `m` smallest
/// continuum eigenvalues, matched in sorted order.
pub fn eigen_convergence(family: &FamilySpec, m: usize) -> Result<EigenTable> {
    if m == 0 {
        return Err(Error::InvalidInput(
            "eigenvalue count must be positive".into(),
        ));
    }
    let rt = family.continuum()?;
    let (cont, _cutoff) = smallest_continuum(&rt, m)?;
    let cont_values: Vec<f64> = cont.iter().map(|e| e.lambda).collect();
    let members = family.members()?;
    let mut rows = Vec::new();
    let mut last = vec![];
    for (u, dt) in &members {
        let u2 = (*u * *u) as f64;
        let mut disc = dt_spectrum_closed::<f64>(dt).entries;
        for e in &mut disc {
            e.lambda *= u2;
        }
        disc.sort_by(|a, b| a.lambda.total_cmp(&b.lambda));
        if disc.len() < m {
            return Err(Error::InvalidInput(format!(
                "DT_{u} has fewer than {m} eigenvalues"
            )));
        }
        for k in 0..m {
            rows.push(ConvergenceRow {
                u: *u,
                quantity: format!("lambda_{}", k + 1),
                discrete: disc[k].lambda,
                continuum: cont_values[k],
                gap: (disc[k].lambda - cont_values[k]).abs(),
            });
        }
        last = disc;
    }
    Ok(EigenTable {
        rows,
        multiplicities: multiplicity_checks(&cont_values, m, &last),
    })
}

/// For each distinct continuum value among the first `m`, count the discrete
/// labels within half the distance to the neighbouring continuum values.
fn multiplicity_checks(
    cont: &[f64],
    m: usize,
    disc: &[EigenvalueEntry<f64>],
) -> Vec<MultiplicityCheck> {
    let scale = cont.last().copied().unwrap_or(1.0).max(1.0);
    let clusters = multiplicities(cont, CLUSTER_TOL * scale);
    let window_top = cont[m - 1];
    let mut out = Vec::new();
    for (k, &(value, mult)) in clusters.iter().enumerate() {
        if value > window_top * (1.0 + CLUSTER_TOL) {
            break;
        }
        let below = if k > 0 {
            value - clusters[k - 1].0
        } else {
            value.max(scale)
        };
        let Some(&(next, _)) = clusters.get(k + 1) else {
            break;
        };
        let radius = 0.5 * below.min(next - value);
        let hits: Vec<&EigenvalueEntry<f64>> = disc
            .iter()
            .filter(|e| (e.lambda - value).abs() < radius)
            .collect();
        let mut labels: Vec<String> = hits
            .iter()
            .map(|e| format!("{:?}|{:?}", e.j, e.w))
            .collect();
        labels.sort();
        labels.dedup();
        out.push(MultiplicityCheck {
            value,
            continuum_multiplicity: mult,
            discrete_count: hits.len(),
            labels_distinct: labels.len() == hits.len(),
        });
    }
    out
}

/// Theta gaps `|θ_{DT_u}(u²t) - Θ_{RT}(t)|` along the family.
pub fn theta_convergence(
    family: &FamilySpec,
    component: Component,
    t: f64,
) -> Result<Vec<ThetaConvergenceRow>> {
    theta_convergence_table(&family.continuum()?, &family.members()?, component, t)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResidualRow {
    pub u: u64,
    /// `Σ log λ` over the retained discrete eigenvalues.
    pub logdet_dt: f64,
    /// `μ I_n(0) d + Σ H^i(0)`.
    pub reconstructed: f64,
    /// `μ(DT_u) I_n(0) d`.
    pub volume_term: f64,
    /// `dim ker · log u²`.
    pub kernel_term: f64,
    pub logdet_rt: f64,
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LogDetTable {
    pub rows: Vec<ResidualRow>,
    pub in0: f64,
    pub logdet_rt: f64,
    pub dim_ker: usize,
}

/// `logdet(DT_u) - μ_u I_n(0) d - dim ker · log u² - logdet(RT)` along the family.
pub fn logdet_convergence(family: &FamilySpec, cfg: &QuadratureConfig) -> Result<LogDetTable> {
    let rt = family.continuum()?;
    let n = rt.n();
    let d = rt.d() as f64;
    let in0_value = in0(n, cfg)?;
    let rt_value = logdet_rt(&rt, cfg)?;
    let dim_ker = rt.phases().zero_rows();
    let mut rows = Vec::new();
    for (u, dt) in family.members()? {
        let report = logdet_dt(&dt, cfg, Some(u as f64))?;
        let volume_term = dt.volume() * in0_value * d;
        let kernel_term = dim_ker as f64 * ((u * u) as f64).ln();
        rows.push(ResidualRow {
            u,
            logdet_dt: report.direct_sum,
            reconstructed: report.reconstructed,
            volume_term,
            kernel_term,
            logdet_rt: rt_value,
            residual: report.direct_sum - volume_term - kernel_term - rt_value,
        });
    }
    Ok(LogDetTable {
        rows,
        in0: in0_value,
        logdet_rt: rt_value,
        dim_ker,
    })
}
