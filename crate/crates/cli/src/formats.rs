//! JSON and CSV file formats.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use ldp_core::continuous::ContinuousModel;
use ldp_core::factorize::ExtremalFactorization;
use ldp_core::finite_fisher::{MaxInfoMethod, MaxInfoResult};
use ldp_core::uniform::{TwoStage, UniformSimConfig, UniformSimReport};
use ldp_core::{Channel, DecompositionMode, FiniteModel, LdpCertificate};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

pub fn read_json<T: DeserializeOwned>(path: &Path) -> CliResult<T> {
    let text = fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    serde_json::from_str(&text).map_err(|e| CliError::validation(path.display().to_string(), e))
}

pub fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("output types always serialize");
    s.push('\n');
    s
}

/// Writes to `path`, or to stdout when absent.
pub fn emit(path: Option<&PathBuf>, contents: &str) -> CliResult<()> {
    match path {
        Some(p) => fs::write(p, contents).map_err(|source| CliError::Io {
            path: p.clone(),
            source,
        }),
        None => std::io::stdout()
            .write_all(contents.as_bytes())
            .map_err(|source| CliError::Io {
                path: "<stdout>".into(),
                source,
            }),
    }
}

fn finite(v: f64) -> Option<f64> {
    v.is_finite().then_some(v)
}

/// `{"d": 2, "l": 3, "kernel": [[...], [...]]}`, one row per input symbol.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelFile {
    pub d: usize,
    pub l: usize,
    pub kernel: Vec<Vec<f64>>,
}

impl ChannelFile {
    pub fn to_channel(&self) -> CliResult<Channel> {
        if self.kernel.len() != self.d {
            return Err(CliError::validation(
                "d",
                format!("declared {} rows, kernel has {}", self.d, self.kernel.len()),
            ));
        }
        if let Some((x, row)) = self
            .kernel
            .iter()
            .enumerate()
            .find(|(_, r)| r.len() != self.l)
        {
            return Err(CliError::validation(
                "l",
                format!("declared {} columns, row {x} has {}", self.l, row.len()),
            ));
        }
        Ok(Channel::new(self.d, self.l, self.kernel.concat())?)
    }
}

impl From<&Channel> for ChannelFile {
    fn from(c: &Channel) -> Self {
        Self {
            d: c.input_size(),
            l: c.output_size(),
            kernel: c.rows().map(<[f64]>::to_vec).collect(),
        }
    }
}

/// `{"p0": [...], "score": [...], "alpha": 0.3}`; `alpha` is optional.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelFile {
    pub p0: Vec<f64>,
    pub score: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
}

impl ModelFile {
    pub fn to_model(&self) -> CliResult<FiniteModel> {
        Ok(FiniteModel::new(self.p0.clone(), self.score.clone())?)
    }
}

/// `{"breaks": [b0, ..., bk], "density": [k values], "score": [k values]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PiecewiseFile {
    pub breaks: Vec<f64>,
    pub density: Vec<f64>,
    pub score: Vec<f64>,
}

impl PiecewiseFile {
    pub fn to_model(&self) -> CliResult<ContinuousModel> {
        Ok(ContinuousModel::piecewise(
            self.breaks.clone(),
            self.density.clone(),
            self.score.clone(),
        )?)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WitnessFile {
    pub z: usize,
    pub x_num: usize,
    pub x_den: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifyReport {
    pub alpha: f64,
    /// `null` when some column is zero for part of the inputs only.
    pub alpha_effective: Option<f64>,
    pub passes: bool,
    pub is_extremal: bool,
    pub witness: Option<WitnessFile>,
    pub zero_columns: Vec<usize>,
}

impl From<&LdpCertificate> for VerifyReport {
    fn from(c: &LdpCertificate) -> Self {
        Self {
            alpha: c.alpha,
            alpha_effective: finite(c.alpha_effective),
            passes: c.passes,
            is_extremal: c.is_extremal,
            witness: c.witness.map(|w| WitnessFile {
                z: w.z,
                x_num: w.x_num,
                x_den: w.x_den,
            }),
            zero_columns: c.zero_columns.clone(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum ModeName {
    Sparse,
    Product,
}

impl From<ModeName> for DecompositionMode {
    fn from(m: ModeName) -> Self {
        match m {
            ModeName::Sparse => DecompositionMode::Sparse,
            ModeName::Product => DecompositionMode::Product,
        }
    }
}

impl From<DecompositionMode> for ModeName {
    fn from(m: DecompositionMode) -> Self {
        match m {
            DecompositionMode::Sparse => ModeName::Sparse,
            DecompositionMode::Product => ModeName::Product,
        }
    }
}

/// Weight on staircase pattern `beta`; bit `j` of `beta` set means the
/// pattern takes the value `e^α` at input `j`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Atom {
    pub beta: u64,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FactorizationChecks {
    pub reconstruction_error: f64,
    pub normalization_error: f64,
    pub total_mass: f64,
    pub mass_in_window: bool,
    pub q1_extremal: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FactorizationFile {
    pub alpha: f64,
    pub mode: ModeName,
    pub omega: Vec<Atom>,
    pub q1: ChannelFile,
    pub q2: ChannelFile,
    pub checks: FactorizationChecks,
}

impl FactorizationFile {
    pub fn new(f: &ExtremalFactorization, original: &Channel) -> CliResult<Self> {
        let mass = f.total_mass();
        Ok(Self {
            alpha: f.alpha,
            mode: f.mode.into(),
            omega: f
                .omega
                .iter()
                .map(|(&beta, &weight)| Atom { beta, weight })
                .collect(),
            q1: (&f.q1).into(),
            q2: (&f.q2).into(),
            checks: FactorizationChecks {
                reconstruction_error: f.reconstruction_error(original)?,
                normalization_error: f.normalization_error(),
                total_mass: mass,
                mass_in_window: mass >= (-f.alpha).exp() - 1e-12 && mass <= 1.0 + 1e-12,
                q1_extremal: f.q1.is_extremal(f.alpha, ldp_core::EXTREMAL_TOL),
            },
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum MethodName {
    /// Linear program when the alphabet is small enough, closed form otherwise.
    Auto,
    Lp,
    ClosedForm,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FisherMaxFile {
    pub method: MethodName,
    pub alpha: f64,
    #[serde(rename = "M_star")]
    pub m_star: f64,
    #[serde(rename = "I_max")]
    pub i_max: f64,
    pub support: Vec<u64>,
    pub omega: Vec<Atom>,
    pub n_max: f64,
    pub alpha_bar_check: bool,
    pub below_sufficient_threshold: Option<bool>,
    pub lp_vs_closed_form_gap: Option<f64>,
    /// The optimal extremal channel, one column per support pattern.
    pub mechanism: ChannelFile,
}

impl FisherMaxFile {
    pub fn new(r: &MaxInfoResult, d: usize) -> CliResult<Self> {
        Ok(Self {
            method: match r.method {
                MaxInfoMethod::LinearProgram => MethodName::Lp,
                MaxInfoMethod::ClosedForm => MethodName::ClosedForm,
            },
            alpha: r.alpha,
            m_star: r.m_star,
            i_max: r.i_max,
            support: r.support.clone(),
            omega: r
                .omega_opt
                .iter()
                .map(|&(beta, weight)| Atom { beta, weight })
                .collect(),
            n_max: r.n_max,
            alpha_bar_check: r.alpha_bar_check,
            below_sufficient_threshold: r.below_sufficient_threshold,
            lp_vs_closed_form_gap: r.lp_vs_closed_form_gap,
            mechanism: (&r.mechanism(d)?).into(),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundsRow {
    pub alpha: f64,
    pub lower: f64,
    pub upper: f64,
    pub two_point_info: f64,
    /// Empty at `α = 0`, where the limit vanishes.
    pub ratio_to_limit: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimRow {
    pub theta_p: f64,
    pub emp_mean: Option<f64>,
    pub emp_std: Option<f64>,
    pub theory_std: Option<f64>,
    pub fisher_floor: f64,
    pub invalid_frac: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TwoStageFile {
    pub pilot_fraction: f64,
    pub shrink: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimConfigFile {
    pub theta0: f64,
    pub n: usize,
    pub alpha: f64,
    pub grid: Vec<f64>,
    pub iters: usize,
    pub seed: u64,
    pub two_stage: Option<TwoStageFile>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimPointFile {
    pub theta_p: f64,
    pub emp_mean: Option<f64>,
    pub emp_std: Option<f64>,
    pub invalid_frac: f64,
    pub valid: usize,
    pub theory_std: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimReportFile {
    pub config: SimConfigFile,
    pub fisher_floor: f64,
    pub points: Vec<SimPointFile>,
}

impl SimReportFile {
    pub fn to_config(&self) -> UniformSimConfig {
        let c = &self.config;
        UniformSimConfig {
            theta0: c.theta0,
            n: c.n,
            alpha: c.alpha,
            grid: c.grid.clone(),
            iters: c.iters,
            seed: c.seed,
            two_stage: c.two_stage.map(|t| TwoStage {
                pilot_fraction: t.pilot_fraction,
                shrink: t.shrink,
            }),
        }
    }
}

impl From<&UniformSimReport> for SimReportFile {
    fn from(r: &UniformSimReport) -> Self {
        let c = &r.config;
        Self {
            config: SimConfigFile {
                theta0: c.theta0,
                n: c.n,
                alpha: c.alpha,
                grid: c.grid.clone(),
                iters: c.iters,
                seed: c.seed,
                two_stage: c.two_stage.map(|t| TwoStageFile {
                    pilot_fraction: t.pilot_fraction,
                    shrink: t.shrink,
                }),
            },
            fisher_floor: r.fisher_floor,
            points: r
                .points
                .iter()
                .map(|p| SimPointFile {
                    theta_p: p.theta_p,
                    emp_mean: finite(p.emp_mean),
                    emp_std: finite(p.emp_std),
                    invalid_frac: p.invalid_frac,
                    valid: p.valid,
                    theory_std: p.theory_std,
                })
                .collect(),
        }
    }
}

pub fn sim_rows(r: &UniformSimReport) -> Vec<SimRow> {
    r.points
        .iter()
        .map(|p| SimRow {
            theta_p: p.theta_p,
            emp_mean: finite(p.emp_mean),
            emp_std: finite(p.emp_std),
            theory_std: p.theory_std,
            fisher_floor: r.fisher_floor,
            invalid_frac: p.invalid_frac,
        })
        .collect()
}

pub fn to_csv<T: Serialize>(rows: &[T]) -> CliResult<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for row in rows {
        w.serialize(row)
            .map_err(|e| CliError::Numeric(e.to_string()))?;
    }
    let bytes = w
        .into_inner()
        .map_err(|e| CliError::Numeric(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv output is UTF-8"))
}

pub fn from_csv<T: DeserializeOwned>(text: &str) -> CliResult<Vec<T>> {
    csv::Reader::from_reader(text.as_bytes())
        .deserialize()
        .collect::<Result<Vec<T>, _>>()
        .map_err(|e| CliError::validation("csv", e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn channel_file_round_trip() {
        let c = Channel::randomized_response(3, 0.5).unwrap();
        let file = ChannelFile::from(&c);
        let text = to_json(&file);
        let back: ChannelFile = serde_json::from_str(&text).unwrap();
        assert_eq!(back.to_channel().unwrap(), c);
    }

    #[test]
    fn channel_file_rejects_bad_shapes_and_keys() {
        let bad = ChannelFile {
            d: 2,
            l: 2,
            kernel: vec![vec![1.0, 0.0]],
        };
        assert!(
            matches!(bad.to_channel(), Err(CliError::Validation { ref field, .. }) if field == "d")
        );
        let extra = r#"{"d": 1, "l": 1, "kernel": [[1.0]], "extra": 0}"#;
        assert!(serde_json::from_str::<ChannelFile>(extra).is_err());
    }

    #[test]
    fn csv_round_trip_keeps_empty_cells() {
        let rows = vec![SimRow {
            theta_p: 1.2,
            emp_mean: Some(1.2),
            emp_std: Some(0.1),
            theory_std: None,
            fisher_floor: 0.09,
            invalid_frac: 0.0,
        }];
        let text = to_csv(&rows).unwrap();
        assert!(text.starts_with("theta_p,emp_mean,emp_std,theory_std,fisher_floor,invalid_frac\n"));
        assert!(text.contains(",,"));
        assert_eq!(from_csv::<SimRow>(&text).unwrap(), rows);
    }
}
