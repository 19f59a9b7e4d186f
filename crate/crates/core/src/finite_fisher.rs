//! Fisher information of privatized finite models and its maximization over
//! α-LDP channels.
//!
//! Restricted to extremal mechanisms `q_x(β) = ω_β r_β(x)`, the information is
//! `(e^α − 1)² Σ_β ω_β i_β` with
//!
//! ```text
//! i_β = (Σ_{x∈F⁺_β} s(x) p(x))² / (1 + (e^α − 1) n⁺_β),   n⁺_β = Σ_{x∈F⁺_β} p(x),
//! ```
//!
//! so the optimum is `(e^α − 1)² M*` where `M* = max ωᵀi` subject to `Rω = 1`,
//! `ω ≥ 0`. For small budgets the optimum sits on the two patterns splitting
//! the alphabet by score sign, which gives a closed form.

use alloc::vec::Vec;

use crate::channel::{check_distribution, Channel};
use crate::error::{check_alpha, Error, Result};
use crate::math;
use crate::simplex::LinearProgram;
use crate::staircase::{PatternIndex, StaircaseMatrix, DEFAULT_MAX_DIM};

/// Largest alphabet handled by [`solve_lp`] by default (`2^12` columns).
pub const DEFAULT_LP_MAX_DIM: usize = 12;

/// Score centering tolerance.
pub const CENTERING_TOL: f64 = 1e-10;

/// LP weights at or below this are treated as zero when reading the support.
pub const SUPPORT_TOL: f64 = 1e-12;

/// A finite parametric model frozen at `θ₀`: the law `p₀` and the score `s`.
#[derive(Debug, Clone, PartialEq)]
pub struct FiniteModel {
    p0: Vec<f64>,
    score: Vec<f64>,
}

impl FiniteModel {
    pub fn new(p0: Vec<f64>, score: Vec<f64>) -> Result<Self> {
        check_distribution(&p0, p0.len())?;
        if p0.is_empty() {
            return Err(Error::InvalidModel("empty alphabet".into()));
        }
        if score.len() != p0.len() {
            return Err(Error::DimensionMismatch {
                expected: p0.len(),
                got: score.len(),
            });
        }
        if score.iter().any(|s| !s.is_finite()) {
            return Err(Error::InvalidModel("non-finite score".into()));
        }
        let mean: f64 = p0.iter().zip(&score).map(|(p, s)| p * s).sum();
        if math::abs(mean) > CENTERING_TOL {
            return Err(Error::InvalidModel(alloc::format!(
                "score is not centered: E[s] = {mean}"
            )));
        }
        Ok(Self { p0, score })
    }

    /// Centers `raw` under `p0` before building the model.
    pub fn centered(p0: Vec<f64>, raw: Vec<f64>) -> Result<Self> {
        check_distribution(&p0, p0.len())?;
        if raw.len() != p0.len() {
            return Err(Error::DimensionMismatch {
                expected: p0.len(),
                got: raw.len(),
            });
        }
        let mean: f64 = p0.iter().zip(&raw).map(|(p, s)| p * s).sum();
        Self::new(p0, raw.iter().map(|s| s - mean).collect())
    }

    /// Bernoulli(θ) on `{0, 1}` with score `(x − θ) / (θ(1 − θ))`.
    pub fn bernoulli(theta: f64) -> Result<Self> {
        if !(theta > 0.0 && theta < 1.0) {
            return Err(Error::InvalidParameter {
                name: "theta",
                reason: alloc::format!("{theta} not in (0, 1)"),
            });
        }
        let v = theta * (1.0 - theta);
        Self::new(
            alloc::vec![1.0 - theta, theta],
            alloc::vec![-theta / v, (1.0 - theta) / v],
        )
    }

    pub fn d(&self) -> usize {
        self.p0.len()
    }

    pub fn p0(&self) -> &[f64] {
        &self.p0
    }

    pub fn score(&self) -> &[f64] {
        &self.score
    }

    /// Non-private information `Σ p s²`.
    pub fn fisher_info(&self) -> f64 {
        self.p0
            .iter()
            .zip(&self.score)
            .map(|(p, s)| p * s * s)
            .sum()
    }

    /// `E|s|`.
    pub fn mean_abs_score(&self) -> f64 {
        self.p0
            .iter()
            .zip(&self.score)
            .map(|(p, s)| p * math::abs(*s))
            .sum()
    }

    /// Mass of the positive-score set.
    pub fn n_max(&self) -> f64 {
        self.p0
            .iter()
            .zip(&self.score)
            .filter(|(_, s)| **s > 0.0)
            .map(|(p, _)| p)
            .sum()
    }

    /// Pattern index whose `F⁺` is `{x : s(x) > 0}`.
    pub fn positive_score_index(&self) -> Result<PatternIndex> {
        let set: Vec<usize> = (0..self.d()).filter(|&x| self.score[x] > 0.0).collect();
        PatternIndex::from_set(self.d(), &set)
    }

    fn first_zero_score(&self) -> Option<usize> {
        self.score.iter().position(|s| *s == 0.0)
    }

    fn check_channel(&self, c: &Channel) -> Result<()> {
        if c.input_size() != self.d() {
            return Err(Error::DimensionMismatch {
                expected: self.d(),
                got: c.input_size(),
            });
        }
        Ok(())
    }
}

/// `p̃(z) = Σ_x p₀(x) q_x(z)`.
pub fn privatized_density(m: &FiniteModel, c: &Channel) -> Result<Vec<f64>> {
    m.check_channel(c)?;
    c.push_forward(&m.p0)
}

/// Score of the privatized model. Outputs with zero mass carry no score and
/// are listed in `dropped`.
#[derive(Debug, Clone, PartialEq)]
pub struct PrivatizedScore {
    pub values: Vec<f64>,
    pub density: Vec<f64>,
    pub dropped: Vec<usize>,
}

fn score_numerators(m: &FiniteModel, c: &Channel) -> Vec<f64> {
    let mut num = alloc::vec![0.0; c.output_size()];
    for x in 0..m.d() {
        let w = m.score[x] * m.p0[x];
        for (n, q) in num.iter_mut().zip(c.row(x)) {
            *n += w * q;
        }
    }
    num
}

/// `t(z) = Σ_x s(x) q_x(z) p₀(x) / p̃(z)`.
pub fn privatized_score(m: &FiniteModel, c: &Channel) -> Result<PrivatizedScore> {
    let density = privatized_density(m, c)?;
    let num = score_numerators(m, c);
    let mut dropped = Vec::new();
    let values = num
        .iter()
        .zip(&density)
        .enumerate()
        .map(|(z, (n, p))| {
            if *p > 0.0 {
                n / p
            } else {
                dropped.push(z);
                0.0
            }
        })
        .collect();
    Ok(PrivatizedScore {
        values,
        density,
        dropped,
    })
}

/// `I(q ∘ P) = Σ_z p̃(z) t(z)²`.
pub fn fisher_info(m: &FiniteModel, c: &Channel) -> Result<f64> {
    let density = privatized_density(m, c)?;
    let num = score_numerators(m, c);
    Ok(num
        .iter()
        .zip(&density)
        .filter(|(_, p)| **p > 0.0)
        .map(|(n, p)| n * n / p)
        .sum())
}

/// Lazily evaluated utility coefficients `i_β` over all `2^d` patterns.
#[derive(Debug, Clone)]
pub struct UtilityVector<'a> {
    model: &'a FiniteModel,
    alpha: f64,
    span: f64,
    full: u64,
}

impl<'a> UtilityVector<'a> {
    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// `n⁺_β = Σ_{x∈F⁺_β} p₀(x)`.
    pub fn n_plus(&self, beta: u64) -> f64 {
        bits(beta, self.model.d()).map(|x| self.model.p0[x]).sum()
    }

    /// `Σ_{x∈F⁺_β} s(x) p₀(x)`, the square root of the numerator of `i_β`.
    pub fn partial_score(&self, beta: u64) -> f64 {
        if beta == 0 || beta == self.full {
            return 0.0;
        }
        bits(beta, self.model.d())
            .map(|x| self.model.score[x] * self.model.p0[x])
            .sum()
    }

    pub fn value(&self, beta: u64) -> f64 {
        let s = self.partial_score(beta);
        s * s / (1.0 + self.span * self.n_plus(beta))
    }

    pub fn len(&self) -> u64 {
        self.full + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// `(β, i_β)` in increasing `β`.
    pub fn iter(&self) -> impl Iterator<Item = (u64, f64)> + '_ {
        (0..=self.full).map(move |b| (b, self.value(b)))
    }
}

fn bits(beta: u64, d: usize) -> impl Iterator<Item = usize> {
    (0..d).filter(move |&x| (beta >> x) & 1 == 1)
}

pub fn utility_vector(m: &FiniteModel, alpha: f64) -> Result<UtilityVector<'_>> {
    utility_vector_with_cap(m, alpha, DEFAULT_MAX_DIM)
}

pub fn utility_vector_with_cap(
    m: &FiniteModel,
    alpha: f64,
    cap: usize,
) -> Result<UtilityVector<'_>> {
    check_alpha(alpha)?;
    let matrix = StaircaseMatrix::with_cap(m.d(), alpha, cap)?;
    Ok(UtilityVector {
        model: m,
        alpha,
        span: math::expm1(alpha),
        full: matrix.num_columns() - 1,
    })
}

/// How a [`MaxInfoResult`] was produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MaxInfoMethod {
    LinearProgram,
    ClosedForm,
}

/// Maximal privatized Fisher information and an optimal extremal mechanism.
#[derive(Debug, Clone, PartialEq)]
pub struct MaxInfoResult {
    pub method: MaxInfoMethod,
    pub alpha: f64,
    /// Optimum of `max ωᵀi s.t. Rω = 1, ω ≥ 0`.
    pub m_star: f64,
    /// `(e^α − 1)² M*`.
    pub i_max: f64,
    /// Optimal weights `(β, ω_β)`, positive entries only.
    pub omega_opt: Vec<(u64, f64)>,
    pub support: Vec<u64>,
    pub n_max: f64,
    /// True when the LP optimum and the closed form agree within `1e-9 (1 + I_max)`.
    pub alpha_bar_check: bool,
    /// Whether `α` lies below the explicit sufficient threshold from the
    /// support argument (`None` when the score vanishes somewhere).
    pub below_sufficient_threshold: Option<bool>,
    /// `|(e^α − 1)² M*_LP − I_max,closed|` when both are available.
    pub lp_vs_closed_form_gap: Option<f64>,
}

impl MaxInfoResult {
    /// `max_x |Σ_β ω_β r_β(x) − 1|`.
    pub fn feasibility_error(&self, d: usize) -> f64 {
        let e = math::exp(self.alpha);
        (0..d)
            .map(|x| {
                let s: f64 = self
                    .omega_opt
                    .iter()
                    .map(|&(b, w)| if (b >> x) & 1 == 1 { w * e } else { w })
                    .sum();
                math::abs(s - 1.0)
            })
            .fold(0.0, f64::max)
    }

    /// The extremal channel `q_x(k) = ω_{β_k} r_{β_k}(x)` over the support.
    pub fn mechanism(&self, d: usize) -> Result<Channel> {
        let e = math::exp(self.alpha);
        let k = self.omega_opt.len();
        let mut kernel = alloc::vec![0.0; d * k];
        for x in 0..d {
            for (col, &(b, w)) in self.omega_opt.iter().enumerate() {
                kernel[x * k + col] = if (b >> x) & 1 == 1 { w * e } else { w };
            }
        }
        Channel::new(d, k, kernel)
    }
}

/// Closed-form maximal information
/// `(e^α−1)²/4 · E|s|² / ([(1−n)+e^α n][n+(1−n)e^α])` with `n = n_max`.
pub fn closed_form_value(m: &FiniteModel, alpha: f64) -> f64 {
    let e = math::exp(alpha);
    let span = math::expm1(alpha);
    let n = m.n_max();
    let mean_abs = m.mean_abs_score();
    span * span / 4.0 * mean_abs * mean_abs / (((1.0 - n) + e * n) * (n + (1.0 - n) * e))
}

/// Budget below which the two sign-split patterns strictly dominate every
/// other `i_β`: `ln min_β (Σ_{F⁺_max} s p)² / (Σ_{F⁺_β} s p)²` over the
/// remaining patterns. Infinite when no other pattern has a non-zero numerator.
pub fn sufficient_alpha_bar(m: &FiniteModel) -> Result<f64> {
    if let Some(x) = m.first_zero_score() {
        return Err(Error::ZeroScore(x));
    }
    let u = utility_vector(m, 0.0)?;
    let best = m.positive_score_index()?;
    let (b1, b2) = (best.beta(), best.complement().beta());
    let top = u.partial_score(b1);
    let top = top * top;
    let mut ratio = f64::INFINITY;
    for beta in 0..u.len() {
        if beta == b1 || beta == b2 {
            continue;
        }
        let s = u.partial_score(beta);
        if s != 0.0 {
            ratio = ratio.min(top / (s * s));
        }
    }
    Ok(math::ln(ratio))
}

fn lp_optimum(m: &FiniteModel, alpha: f64, cap: usize) -> Result<(f64, Vec<(u64, f64)>)> {
    let u = utility_vector_with_cap(m, alpha, cap)?;
    let matrix = StaircaseMatrix::with_cap(m.d(), alpha, cap)?;
    let columns = matrix
        .columns()
        .map(|col| (col.values().to_vec(), u.value(col.index().beta())));
    let lp = LinearProgram::from_columns(alloc::vec![1.0; m.d()], columns)?;
    let solution = lp.maximize().map_err(|e| match e {
        // The all-ones pattern with unit weight is always feasible.
        Error::Lp(msg) => Error::Lp(alloc::format!("internal: {msg}")),
        other => other,
    })?;
    let omega: Vec<(u64, f64)> = solution
        .x
        .iter()
        .enumerate()
        .filter(|(_, w)| **w > SUPPORT_TOL)
        .map(|(b, w)| (b as u64, *w))
        .collect();
    Ok((solution.objective, omega))
}

fn agreement(lp_value: f64, closed: f64) -> (bool, f64) {
    let gap = math::abs(lp_value - closed);
    (gap < 1e-9 * (1.0 + closed), gap)
}

/// Solves the staircase linear program with the simplex method.
pub fn solve_lp(m: &FiniteModel, alpha: f64) -> Result<MaxInfoResult> {
    solve_lp_with_cap(m, alpha, DEFAULT_LP_MAX_DIM)
}

pub fn solve_lp_with_cap(m: &FiniteModel, alpha: f64, cap: usize) -> Result<MaxInfoResult> {
    check_alpha(alpha)?;
    let (m_star, omega_opt) = lp_optimum(m, alpha, cap)?;
    let span = math::expm1(alpha);
    let i_max = span * span * m_star;
    let (alpha_bar_check, gap, below) = match m.first_zero_score() {
        Some(_) => (false, None, None),
        None => {
            let (ok, gap) = agreement(i_max, closed_form_value(m, alpha));
            let below = sufficient_alpha_bar(m).ok().map(|bar| alpha < bar);
            (ok, Some(gap), below)
        }
    };
    Ok(MaxInfoResult {
        method: MaxInfoMethod::LinearProgram,
        alpha,
        m_star,
        i_max,
        support: omega_opt.iter().map(|w| w.0).collect(),
        omega_opt,
        n_max: m.n_max(),
        alpha_bar_check,
        below_sufficient_threshold: below,
        lp_vs_closed_form_gap: gap,
    })
}

/// Closed-form optimum on the two sign-split patterns, cross-checked against
/// the LP when the alphabet is small enough.
pub fn closed_form_max(m: &FiniteModel, alpha: f64) -> Result<MaxInfoResult> {
    check_alpha(alpha)?;
    if let Some(x) = m.first_zero_score() {
        return Err(Error::ZeroScore(x));
    }
    let i_max = closed_form_value(m, alpha);
    let span = math::expm1(alpha);
    let m_star = if span > 0.0 {
        i_max / (span * span)
    } else {
        // At α = 0 both denominator factors equal 1.
        let e = m.mean_abs_score();
        e * e / 4.0
    };
    let best = m.positive_score_index()?;
    let weight = 1.0 / (1.0 + math::exp(alpha));
    let mut omega_opt = alloc::vec![(best.beta(), weight), (best.complement().beta(), weight)];
    omega_opt.sort_unstable_by_key(|w| w.0);
    let (alpha_bar_check, gap) = if m.d() <= DEFAULT_LP_MAX_DIM {
        let (lp_m_star, _) = lp_optimum(m, alpha, DEFAULT_LP_MAX_DIM)?;
        let (ok, gap) = agreement(span * span * lp_m_star, i_max);
        (ok, Some(gap))
    } else {
        (false, None)
    };
    Ok(MaxInfoResult {
        method: MaxInfoMethod::ClosedForm,
        alpha,
        m_star,
        i_max,
        support: omega_opt.iter().map(|w| w.0).collect(),
        omega_opt,
        n_max: m.n_max(),
        alpha_bar_check,
        below_sufficient_threshold: sufficient_alpha_bar(m).ok().map(|bar| alpha < bar),
        lp_vs_closed_form_gap: gap,
    })
}

/// Binary channel reporting the score sign: `q_x(z₁) = e^α / (1 + e^α)` when
/// `s(x) > 0`, `1 / (1 + e^α)` otherwise.
pub fn optimal_two_point_channel(m: &FiniteModel, alpha: f64) -> Result<Channel> {
    check_alpha(alpha)?;
    if let Some(x) = m.first_zero_score() {
        return Err(Error::ZeroScore(x));
    }
    let e = math::exp(alpha);
    let (hi, lo) = (e / (1.0 + e), 1.0 / (1.0 + e));
    let kernel = m
        .score
        .iter()
        .flat_map(|&s| if s > 0.0 { [hi, lo] } else { [lo, hi] })
        .collect();
    Channel::new(m.d(), 2, kernel)
}
