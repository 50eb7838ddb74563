use std::path::PathBuf;

use serde::Serialize;
use torus_spectra::convergence::{
    eigen_convergence, logdet_convergence, theta_convergence, FamilyRule, FamilySpec, FamilyTorsion,
};
use torus_spectra::logdet::{logdet_dt, zeta_primes};
use torus_spectra::spectrum::{
    assemble_dt_laplacian, compare_multisets, dt_spectrum_closed, kernel_dimension,
    oracle_spectrum, rt_spectrum_closed, MatchReport, KERNEL_TOL,
};
use torus_spectra::theta::{theta_dt, theta_inversion_check, theta_rt, Component, ThetaForm};
use torus_spectra::{IntMatrix, RealTorus, Spectrum};

use crate::config::{
    Command, ConvergeParams, LogdetParams, Mode, Quantity, RuleConfig, RunConfig, SpectrumParams,
    ThetaParams, TorusSpec,
};
use crate::error::CliError;
use crate::output::{loglog_svg, staircase_svg, Sink};

/// Flag overrides applied on top of the config.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub tol: Option<f64>,
    pub out: Option<PathBuf>,
    pub mode: Option<Mode>,
    pub svg: bool,
}

const DEFAULT_MATCH_TOL: f64 = 1e-8;
const DEFAULT_THETA_TOL: f64 = 1e-9;
const DEFAULT_TAIL_EPS: f64 = 1e-13;

fn sink(ov: &Overrides, from_params: Option<PathBuf>) -> Result<Sink, CliError> {
    Sink::new(
        ov.out
            .clone()
            .or(from_params)
            .unwrap_or_else(|| PathBuf::from(".")),
    )
}

fn positive(name: &str, v: f64) -> Result<f64, CliError> {
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(CliError::Config(format!(
            "{name} must be positive, got {v}"
        )))
    }
}

pub fn run(cfg: &RunConfig, command: Command, ov: &Overrides, seed: u64) -> Result<Sink, CliError> {
    match command {
        Command::Spectrum => spectrum(cfg, ov, seed),
        Command::OracleCheck => oracle_check(cfg, ov, seed),
        Command::Theta => theta(cfg, ov, seed),
        Command::Logdet => logdet(cfg, ov, seed),
        Command::Converge => converge(cfg, ov, seed),
    }
}

fn spectrum_records(s: &Spectrum, n: usize) -> (Vec<String>, Vec<Vec<String>>) {
    let mut header = vec!["lambda".to_string(), "fiber".to_string()];
    header.extend((1..=n).map(|k| format!("w_{k}")));
    let mut entries: Vec<_> = s.entries.iter().collect();
    entries.sort_by(|a, b| a.lambda.total_cmp(&b.lambda));
    let records = entries
        .into_iter()
        .map(|e| {
            let mut r = vec![
                e.lambda.to_string(),
                e.j.map(|j| j.to_string()).unwrap_or_default(),
            ];
            match &e.w {
                Some(w) => r.extend(w.iter().map(f64::to_string)),
                None => r.extend(std::iter::repeat_n(String::new(), n)),
            }
            r
        })
        .collect();
    (header, records)
}

fn write_spectrum(
    out: &mut Sink,
    name: &str,
    s: &Spectrum,
    n: usize,
    svg: bool,
) -> Result<(), CliError> {
    let (header, records) = spectrum_records(s, n);
    out.csv_records(&format!("{name}.csv"), &header, &records)?;
    if svg {
        out.write(
            &format!("{name}.svg"),
            staircase_svg("eigenvalue staircase", &s.sorted_values()).as_bytes(),
        )?;
    }
    Ok(())
}

fn spectrum(cfg: &RunConfig, ov: &Overrides, seed: u64) -> Result<Sink, CliError> {
    let p: SpectrumParams = cfg.params()?;
    let mode = ov.mode.or(p.mode).unwrap_or(Mode::Closed);
    let svg = ov.svg || p.svg;
    let tol = positive("tol", ov.tol.or(p.tol).unwrap_or(DEFAULT_MATCH_TOL))?;
    let mut out = sink(ov, p.out)?;
    match cfg.torus(seed)? {
        TorusSpec::Real(rt) => {
            if mode != Mode::Closed {
                return Err(CliError::Config(
                    "continuum spectra only have the closed form".into(),
                ));
            }
            let cutoff = positive(
                "cutoff",
                p.cutoff.ok_or_else(|| {
                    CliError::Config("continuum spectrum needs params.cutoff".into())
                })?,
            )?;
            let s = rt_spectrum_closed::<f64>(&rt, cutoff)?;
            write_spectrum(&mut out, "spectrum", &s, rt.n(), svg)?;
        }
        TorusSpec::Discrete(dt) => {
            let closed = || dt_spectrum_closed::<f64>(&dt);
            let oracle = || -> Result<Spectrum, CliError> {
                Ok(oracle_spectrum(&assemble_dt_laplacian::<f64>(&dt)?)?)
            };
            match mode {
                Mode::Closed => write_spectrum(&mut out, "spectrum", &closed(), dt.n(), svg)?,
                Mode::Oracle => write_spectrum(&mut out, "spectrum", &oracle()?, dt.n(), svg)?,
                Mode::Both => {
                    let (c, o) = (closed(), oracle()?);
                    write_spectrum(&mut out, "spectrum_closed", &c, dt.n(), svg)?;
                    write_spectrum(&mut out, "spectrum_oracle", &o, dt.n(), false)?;
                    let report = compare_multisets(&c, &o, tol)?;
                    out.json("match_report.json", &report)?;
                    if !report.passed {
                        return Err(mismatch(&report));
                    }
                }
            }
        }
    }
    Ok(out)
}

fn mismatch(r: &MatchReport<f64>) -> CliError {
    CliError::Numeric(format!(
        "spectra differ by {:.3e} (tolerance {:.1e})",
        r.max_deviation, r.tolerance
    ))
}

#[derive(Serialize)]
struct OracleCheckReport {
    #[serde(flatten)]
    matching: MatchReport<f64>,
    trace: f64,
    expected_trace: f64,
    kernel_closed: usize,
    kernel_oracle: usize,
}

fn oracle_check(cfg: &RunConfig, ov: &Overrides, seed: u64) -> Result<Sink, CliError> {
    let p: SpectrumParams = cfg.params()?;
    let tol = positive("tol", ov.tol.or(p.tol).unwrap_or(DEFAULT_MATCH_TOL))?;
    let TorusSpec::Discrete(dt) = cfg.torus(seed)? else {
        return Err(CliError::Config(
            "oracle-check needs an integer `matrix`".into(),
        ));
    };
    let mut out = sink(ov, p.out)?;
    let closed = dt_spectrum_closed::<f64>(&dt);
    let oracle = oracle_spectrum(&assemble_dt_laplacian::<f64>(&dt)?)?;
    let matching = compare_multisets(&closed, &oracle, tol)?;
    let report = OracleCheckReport {
        trace: closed.trace(),
        expected_trace: (2 * dt.n() * dt.d() * dt.vertices()) as f64,
        kernel_closed: kernel_dimension(&closed, KERNEL_TOL),
        kernel_oracle: kernel_dimension(&oracle, KERNEL_TOL),
        matching,
    };
    out.json("oracle_check.json", &report)?;
    if ov.svg || p.svg {
        out.write(
            "spectrum.svg",
            staircase_svg("eigenvalue staircase", &closed.sorted_values()).as_bytes(),
        )?;
    }
    if !report.matching.passed {
        return Err(mismatch(&report.matching));
    }
    Ok(out)
}

#[derive(Serialize)]
struct ThetaRow {
    t: f64,
    spectral: f64,
    dual_sum: f64,
    residual: f64,
    certified_tail: f64,
}

fn theta(cfg: &RunConfig, ov: &Overrides, seed: u64) -> Result<Sink, CliError> {
    let p: ThetaParams = cfg.params()?;
    let tol = positive("tol", ov.tol.or(p.tol).unwrap_or(DEFAULT_THETA_TOL))?;
    let eps = positive("tail_eps", p.tail_eps.unwrap_or(DEFAULT_TAIL_EPS))?;
    if p.t.is_empty() {
        return Err(CliError::Config(
            "params.t must list at least one time".into(),
        ));
    }
    for &t in &p.t {
        positive("t", t)?;
    }
    let component = match p.fiber {
        None => Component::Total,
        Some(0) => return Err(CliError::Config("fiber numbers start at 1".into())),
        Some(k) => Component::Fiber(k - 1),
    };
    let torus = cfg.torus(seed)?;
    let eval = |t: f64, form: ThetaForm| -> Result<_, CliError> {
        Ok(match &torus {
            TorusSpec::Real(rt) => theta_rt(rt, component, t, form, eps)?,
            TorusSpec::Discrete(dt) => theta_dt(dt, component, t, form, eps)?,
        })
    };
    let mut rows = Vec::with_capacity(p.t.len());
    for &t in &p.t {
        let s = eval(t, ThetaForm::Spectral)?;
        let d = eval(t, ThetaForm::DualSum)?;
        rows.push(ThetaRow {
            t,
            spectral: s.value,
            dual_sum: d.value,
            residual: s.gap(&d),
            certified_tail: s.certified_tail + d.certified_tail,
        });
    }
    let mut out = sink(ov, p.out)?;
    out.csv_rows("theta.csv", &rows)?;
    let mut worst = rows.iter().map(|r| r.residual).fold(0.0, f64::max);
    if p.inversion {
        let lattice = cfg.real_matrix()?;
        let inv =
            p.t.iter()
                .map(|&t| theta_inversion_check(&lattice, t))
                .collect::<Result<Vec<_>, _>>()?;
        worst = inv.iter().map(|r| r.residual).fold(worst, f64::max);
        out.csv_rows("inversion.csv", &inv)?;
    }
    if !(worst < tol) {
        return Err(CliError::Numeric(format!(
            "theta identity residual {worst:.3e} exceeds {tol:.1e}"
        )));
    }
    Ok(out)
}

#[derive(Serialize)]
struct RtLogDetReport {
    zeta_prime: Vec<f64>,
    logdet_rt: f64,
    kernel_dim: usize,
}

fn logdet(cfg: &RunConfig, ov: &Overrides, seed: u64) -> Result<Sink, CliError> {
    let p: LogdetParams = cfg.params()?;
    let mut q = p.quadrature;
    if let Some(t) = ov.tol {
        q.abs_tol = positive("tol", t)?;
    }
    q.validate()?;
    if let Some(u) = p.u {
        positive("u", u)?;
    }
    let mut out = sink(ov, p.out)?;
    match cfg.torus(seed)? {
        TorusSpec::Discrete(dt) => {
            let mut report = logdet_dt(&dt, &q, p.u)?;
            if p.continuum {
                let u = p.u.ok_or_else(|| {
                    CliError::Config("continuum comparison needs params.u".into())
                })?;
                let a = dt.matrix().to_f64().scale(1.0 / u);
                let rt = RealTorus::with_seed(a, dt.torsion().clone(), seed)?;
                report.zeta_prime = zeta_primes(&rt, &q)?;
            }
            out.json("logdet.json", &report)?;
        }
        TorusSpec::Real(rt) => {
            let zeta_prime = zeta_primes(&rt, &q)?;
            out.json(
                "logdet.json",
                &RtLogDetReport {
                    logdet_rt: -zeta_prime.iter().sum::<f64>(),
                    zeta_prime,
                    kernel_dim: rt.phases().zero_rows(),
                },
            )?;
        }
    }
    Ok(out)
}

fn converge(cfg: &RunConfig, ov: &Overrides, seed: u64) -> Result<Sink, CliError> {
    let p: ConvergeParams = cfg.params()?;
    if cfg.a.is_none() {
        return Err(CliError::Config(
            "converge needs the continuum matrix `A`".into(),
        ));
    }
    let mut q = p.quadrature;
    if let Some(t) = ov.tol {
        q.abs_tol = positive("tol", t)?;
    }
    q.validate()?;
    let rule = match p.rule {
        RuleConfig::Exact => FamilyRule::Exact,
        RuleConfig::Rounded => FamilyRule::Rounded,
        RuleConfig::Perturbed(rows) => FamilyRule::Perturbed(IntMatrix::from_rows(&rows)?),
    };
    let torsion = cfg.torsion_family()?;
    let family = FamilySpec::new(
        cfg.real_matrix()?,
        rule,
        FamilyTorsion::Fixed(torsion),
        p.u.clone(),
    )?
    .with_seed(seed);
    let quantities = p
        .quantities
        .unwrap_or_else(|| vec![Quantity::Eigen, Quantity::Theta, Quantity::Logdet]);
    let mut out = sink(ov, p.out)?;
    let mut series = Vec::new();
    for quantity in quantities {
        match quantity {
            Quantity::Eigen => {
                let table = eigen_convergence(&family, p.count.unwrap_or(5))?;
                out.csv_rows("eigen.csv", &table.rows)?;
                out.json("multiplicities.json", &table.multiplicities)?;
                let first_u = family.u_values[0];
                let labels: Vec<&str> = table
                    .rows
                    .iter()
                    .filter(|r| r.u == first_u)
                    .map(|r| r.quantity.as_str())
                    .collect();
                for label in labels {
                    let pts = table
                        .rows
                        .iter()
                        .filter(|r| r.quantity == label)
                        .map(|r| (r.u as f64, r.gap))
                        .collect();
                    series.push((label.to_string(), pts));
                }
            }
            Quantity::Theta => {
                let t = positive("t", p.t.unwrap_or(1.0))?;
                let rows = theta_convergence(&family, Component::Total, t)?;
                series.push((
                    "theta".to_string(),
                    rows.iter().map(|r| (r.u as f64, r.gap)).collect(),
                ));
                out.csv_rows("theta.csv", &rows)?;
            }
            Quantity::Logdet => {
                let table = logdet_convergence(&family, &q)?;
                series.push((
                    "|logdet residual|".to_string(),
                    table
                        .rows
                        .iter()
                        .map(|r| (r.u as f64, r.residual.abs()))
                        .collect(),
                ));
                out.csv_rows("logdet.csv", &table.rows)?;
            }
        }
    }
    if ov.svg || p.svg {
        out.write(
            "gaps.svg",
            loglog_svg("convergence gaps", &series).as_bytes(),
        )?;
    }
    Ok(out)
}
