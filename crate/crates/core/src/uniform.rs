//! Estimating the range of a uniform law from Bernoulli-privatized data.
//!
//! Each `X_i ~ U[0, θ₀]` is released as one bit whose bias depends on whether
//! `X_i` falls below a preliminary estimate `θ̂ᵖ`. Inverting the mean of the
//! bits gives `θ̂_n = θ̂ᵖ (e^α − 1) / ((1 + e^α) Z̄_n − 1)`.

use alloc::format;
use alloc::vec::Vec;

use rand::RngCore;

use crate::continuous::{ExtremalFunction, ExtremalMeasure, IntervalSet};
use crate::error::{check_alpha, Error, Result};
use crate::math;
use crate::rng::{self, REPLICATION_BITS};

fn positive(name: &'static str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter {
            name,
            reason: format!("must be positive and finite, got {v}"),
        })
    }
}

/// Bernoulli channel: `P(Z = 1 | x) = e^α/(1+e^α)` below `θ̂ᵖ`, `1/(1+e^α)` above.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UniformChannel {
    alpha: f64,
    theta_p: f64,
    p_low: f64,
    p_high: f64,
}

impl UniformChannel {
    pub fn new(alpha: f64, theta_p: f64) -> Result<Self> {
        check_alpha(alpha)?;
        positive("theta_p", theta_p)?;
        let ea = math::exp(alpha);
        Ok(Self {
            alpha,
            theta_p,
            p_low: 1.0 / (1.0 + ea),
            p_high: ea / (1.0 + ea),
        })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn theta_p(&self) -> f64 {
        self.theta_p
    }

    /// `q_x(1)`.
    pub fn p_one(&self, x: f64) -> f64 {
        if x < self.theta_p {
            self.p_high
        } else {
            self.p_low
        }
    }

    /// Releases `x` given a uniform `u ∈ [0, 1)`.
    #[inline]
    pub fn privatize(&self, x: f64, u: f64) -> bool {
        u < self.p_one(x)
    }

    /// The same mechanism as a two-atom extremal measure: `Z = 1` is the
    /// atom with `F⁺ = [0, θ̂ᵖ)` (extended to the left half-line).
    pub fn measure(&self) -> Result<ExtremalMeasure> {
        let plus = IntervalSet::new(alloc::vec![(f64::NEG_INFINITY, self.theta_p)])?;
        let minus = plus.complement();
        ExtremalMeasure::new(alloc::vec![
            (ExtremalFunction::new(self.alpha, plus)?, self.p_low),
            (ExtremalFunction::new(self.alpha, minus)?, self.p_low),
        ])
    }
}

/// `P(Z = 1)` when the data follow `U[0, θ]`.
pub fn tilde_p1(theta: f64, theta_p: f64, alpha: f64) -> Result<f64> {
    positive("theta", theta)?;
    positive("theta_p", theta_p)?;
    check_alpha(alpha)?;
    let ea = math::exp(alpha);
    Ok(1.0 / (1.0 + ea) + math::expm1(alpha) / (1.0 + ea) * (theta_p / theta).min(1.0))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UniformEstimate {
    pub theta_hat: f64,
    pub z_bar: f64,
    pub n: usize,
    /// False when `(1 + e^α) Z̄_n ≤ 1`; `theta_hat` is then NaN.
    pub valid: bool,
}

/// Plug-in estimate from the mean of `n` released bits.
pub fn estimate_from_mean(
    z_bar: f64,
    n: usize,
    theta_p: f64,
    alpha: f64,
) -> Result<UniformEstimate> {
    positive("theta_p", theta_p)?;
    check_alpha(alpha)?;
    if n == 0 {
        return Err(Error::InvalidParameter {
            name: "n",
            reason: "no observations".into(),
        });
    }
    let denom = (1.0 + math::exp(alpha)) * z_bar - 1.0;
    let valid = denom > 0.0 && alpha > 0.0;
    let theta_hat = if valid {
        theta_p * math::expm1(alpha) / denom
    } else {
        f64::NAN
    };
    Ok(UniformEstimate {
        theta_hat,
        z_bar,
        n,
        valid,
    })
}

pub fn estimate(zs: &[bool], theta_p: f64, alpha: f64) -> Result<UniformEstimate> {
    let ones = zs.iter().filter(|&&z| z).count();
    let z_bar = if zs.is_empty() {
        0.0
    } else {
        ones as f64 / zs.len() as f64
    };
    estimate_from_mean(z_bar, zs.len(), theta_p, alpha)
}

/// Asymptotic variance `v(θ₀, θ̂ᵖ)` of `√n (θ̂_n − θ₀)`, valid for `θ̂ᵖ ≤ θ₀`.
pub fn asymptotic_variance(theta0: f64, theta_p: f64, alpha: f64) -> Result<f64> {
    positive("theta0", theta0)?;
    positive("theta_p", theta_p)?;
    positive("alpha", alpha)?;
    if theta_p > theta0 {
        return Err(Error::InvalidParameter {
            name: "theta_p",
            reason: format!("variance formula needs theta_p <= theta0, got {theta_p} > {theta0}"),
        });
    }
    let e1 = math::expm1(alpha);
    let ratio = theta_p / theta0;
    let t0sq = theta0 * theta0;
    Ok(t0sq * t0sq / (theta_p * theta_p) / (e1 * e1)
        * (1.0 + e1 * ratio)
        * (math::exp(alpha) - e1 * ratio))
}

/// Lower bound `θ₀ / ((e^α − 1)√n)` on the standard deviation of any
/// unbiased estimator built on an α-LDP view.
pub fn fisher_floor(theta0: f64, alpha: f64, n: usize) -> f64 {
    theta0 / (math::expm1(alpha) * math::sqrt(n as f64))
}

/// Evenly spaced grid from `start` to `end` inclusive.
pub fn grid(start: f64, end: f64, step: f64) -> Result<Vec<f64>> {
    positive("grid-step", step)?;
    if !(start.is_finite() && end.is_finite() && start <= end) {
        return Err(Error::InvalidParameter {
            name: "grid-start",
            reason: format!("need finite start <= end, got [{start}, {end}]"),
        });
    }
    let count = libm::round((end - start) / step) as usize + 1;
    // Rounding to 12 decimals keeps 0.85 from printing as 0.8500000000000001.
    Ok((0..count)
        .map(|i| libm::round((start + i as f64 * step) * 1e12) / 1e12)
        .filter(|&t| t <= end + 1e-9 * step)
        .collect())
}

/// Data-driven preliminary estimate: a pilot fraction of the sample is
/// privatized around the grid value, and the second stage centers its
/// channel on `shrink` times the pilot estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwoStage {
    pub pilot_fraction: f64,
    pub shrink: f64,
}

impl Default for TwoStage {
    fn default() -> Self {
        Self {
            pilot_fraction: 0.1,
            shrink: 0.9,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct UniformSimConfig {
    pub theta0: f64,
    pub n: usize,
    pub alpha: f64,
    pub grid: Vec<f64>,
    pub iters: usize,
    pub seed: u64,
    pub two_stage: Option<TwoStage>,
}

impl UniformSimConfig {
    pub fn validate(&self) -> Result<()> {
        positive("theta0", self.theta0)?;
        positive("alpha", self.alpha)?;
        if self.n == 0 {
            return Err(Error::InvalidParameter {
                name: "n",
                reason: "must be at least 1".into(),
            });
        }
        if self.iters == 0 || (self.iters as u64) >= (1u64 << REPLICATION_BITS) {
            return Err(Error::InvalidParameter {
                name: "iters",
                reason: format!("must lie in [1, 2^{REPLICATION_BITS}), got {}", self.iters),
            });
        }
        if self.grid.is_empty() {
            return Err(Error::InvalidParameter {
                name: "grid",
                reason: "empty grid".into(),
            });
        }
        for &t in &self.grid {
            positive("grid", t)?;
        }
        if self.grid.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidParameter {
                name: "grid",
                reason: "grid must be strictly increasing".into(),
            });
        }
        if let Some(ts) = self.two_stage {
            if !(ts.pilot_fraction > 0.0 && ts.pilot_fraction < 1.0) {
                return Err(Error::InvalidParameter {
                    name: "pilot_fraction",
                    reason: format!("must lie in (0, 1), got {}", ts.pilot_fraction),
                });
            }
            positive("shrink", ts.shrink)?;
        }
        Ok(())
    }
}

/// Unit uniforms from one 64-bit word: the high half places `x`, the low
/// half drives the Bernoulli release. Midpoint rounding keeps both in (0, 1).
#[inline]
fn split_word(w: u64) -> (f64, f64) {
    const SCALE: f64 = 1.0 / 4_294_967_296.0;
    (
        ((w >> 32) as f64 + 0.5) * SCALE,
        ((w & 0xffff_ffff) as f64 + 0.5) * SCALE,
    )
}

fn count_ones<R: RngCore>(rng: &mut R, theta0: f64, channel: &UniformChannel, n: usize) -> usize {
    let mut ones = 0usize;
    for _ in 0..n {
        let (ux, uz) = split_word(rng.next_u64());
        ones += channel.privatize(theta0 * ux, uz) as usize;
    }
    ones
}

/// One Monte Carlo replication at grid point `grid_idx`, drawn from the
/// stream keyed by `(grid_idx, rep)`.
pub fn replicate(cfg: &UniformSimConfig, grid_idx: usize, rep: usize) -> Result<UniformEstimate> {
    let theta_p = cfg.grid[grid_idx];
    let mut rng = rng::stream(cfg.seed, rng::task_id(grid_idx as u64, rep as u64));
    let channel = UniformChannel::new(cfg.alpha, theta_p)?;
    match cfg.two_stage {
        None => {
            let ones = count_ones(&mut rng, cfg.theta0, &channel, cfg.n);
            estimate_from_mean(ones as f64 / cfg.n as f64, cfg.n, theta_p, cfg.alpha)
        }
        Some(ts) => {
            let m = ((cfg.n as f64 * ts.pilot_fraction) as usize)
                .clamp(1, cfg.n.saturating_sub(1).max(1));
            let rest = cfg.n - m;
            let pilot_ones = count_ones(&mut rng, cfg.theta0, &channel, m);
            let pilot = estimate_from_mean(pilot_ones as f64 / m as f64, m, theta_p, cfg.alpha)?;
            if rest == 0 {
                return Ok(pilot);
            }
            let second_p = if pilot.valid {
                ts.shrink * pilot.theta_hat
            } else {
                theta_p
            };
            let second = UniformChannel::new(cfg.alpha, second_p)?;
            let ones = count_ones(&mut rng, cfg.theta0, &second, rest);
            estimate_from_mean(ones as f64 / rest as f64, rest, second_p, cfg.alpha)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridPointSummary {
    pub theta_p: f64,
    /// NaN when no replication was valid.
    pub emp_mean: f64,
    pub emp_std: f64,
    pub invalid_frac: f64,
    pub valid: usize,
    /// `√(v(θ₀, θ̂ᵖ)/n)`; absent when `θ̂ᵖ > θ₀`.
    pub theory_std: Option<f64>,
}

/// Mean and sample standard deviation over the valid estimates, summed in
/// replication order.
pub fn summarize(
    cfg: &UniformSimConfig,
    grid_idx: usize,
    estimates: &[UniformEstimate],
) -> Result<GridPointSummary> {
    let theta_p = cfg.grid[grid_idx];
    let valid: Vec<f64> = estimates
        .iter()
        .filter(|e| e.valid)
        .map(|e| e.theta_hat)
        .collect();
    let k = valid.len();
    let mean = if k == 0 {
        f64::NAN
    } else {
        valid.iter().sum::<f64>() / k as f64
    };
    let std = if k < 2 {
        f64::NAN
    } else {
        math::sqrt(valid.iter().map(|t| (t - mean) * (t - mean)).sum::<f64>() / (k - 1) as f64)
    };
    let theory_std = if theta_p <= cfg.theta0 && cfg.two_stage.is_none() {
        Some(math::sqrt(
            asymptotic_variance(cfg.theta0, theta_p, cfg.alpha)? / cfg.n as f64,
        ))
    } else {
        None
    };
    Ok(GridPointSummary {
        theta_p,
        emp_mean: mean,
        emp_std: std,
        invalid_frac: if estimates.is_empty() {
            0.0
        } else {
            (estimates.len() - k) as f64 / estimates.len() as f64
        },
        valid: k,
        theory_std,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct UniformSimReport {
    pub config: UniformSimConfig,
    pub fisher_floor: f64,
    pub points: Vec<GridPointSummary>,
}

/// Assembles a report from per-grid-point estimates in replication order.
pub fn report_from_estimates(
    cfg: &UniformSimConfig,
    per_point: &[Vec<UniformEstimate>],
) -> Result<UniformSimReport> {
    let points = per_point
        .iter()
        .enumerate()
        .map(|(g, est)| summarize(cfg, g, est))
        .collect::<Result<Vec<_>>>()?;
    Ok(UniformSimReport {
        config: cfg.clone(),
        fisher_floor: fisher_floor(cfg.theta0, cfg.alpha, cfg.n),
        points,
    })
}

/// Runs every replication on the calling thread.
pub fn run_simulation(cfg: &UniformSimConfig) -> Result<UniformSimReport> {
    cfg.validate()?;
    let per_point = (0..cfg.grid.len())
        .map(|g| {
            (0..cfg.iters)
                .map(|r| replicate(cfg, g, r))
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    report_from_estimates(cfg, &per_point)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tilde_p1_cases() {
        let ea = math::exp(0.3);
        assert!((tilde_p1(1.0, 1.2, 0.3).unwrap() - ea / (1.0 + ea)).abs() < 1e-15);
        let half = tilde_p1(1.0, 0.5, 0.3).unwrap();
        assert!((half - (1.0 / (1.0 + ea) + (ea - 1.0) / (1.0 + ea) * 0.5)).abs() < 1e-15);
        assert!((half - 0.5).abs() < 1e-12);
        assert_eq!(tilde_p1(3.0, 0.7, 0.0).unwrap(), 0.5);
        assert!(tilde_p1(0.0, 0.7, 0.3).is_err());
        assert!(tilde_p1(1.0, -1.0, 0.3).is_err());
    }

    #[test]
    fn population_mean_inverts_exactly() {
        for (theta0, tp) in [(1.0, 0.5), (1.0, 1.0), (2.0, 1.3), (1.0, 1.3)] {
            let p1 = tilde_p1(theta0, tp, 0.3).unwrap();
            let e = estimate_from_mean(p1, 1000, tp, 0.3).unwrap();
            assert!(e.valid);
            assert!((e.theta_hat - f64::max(theta0, tp)).abs() < 1e-12);
        }
    }

    #[test]
    fn boundary_mean_is_invalid() {
        let ea = math::exp(0.3);
        let e = estimate_from_mean(1.0 / (1.0 + ea), 10, 1.0, 0.3).unwrap();
        assert!(!e.valid && e.theta_hat.is_nan());
        assert!(estimate(&[], 1.0, 0.3).is_err());
        let bits = estimate(&[true, true, false, true], 1.0, 0.3).unwrap();
        assert_eq!(bits.z_bar, 0.75);
    }

    #[test]
    fn variance_formula() {
        let v = asymptotic_variance(1.0, 1.0, 0.3).unwrap();
        let e1 = math::expm1(0.3);
        assert!((v - math::exp(0.3) / (e1 * e1)).abs() < 1e-12);
        assert!((v - 11.028).abs() < 1e-3);
        assert!(asymptotic_variance(1.0, 1.1, 0.3).is_err());
        let small = 1e-4;
        assert!(
            (asymptotic_variance(2.0, 2.0, small).unwrap() * small * small / 4.0 - 1.0).abs()
                < 1e-3
        );
    }

    #[test]
    fn floor_value() {
        assert!((fisher_floor(1.0, 0.3, 1000) - 0.0904).abs() < 5e-5);
    }

    #[test]
    fn grid_is_inclusive() {
        let g = grid(0.5, 1.3, 0.05).unwrap();
        assert_eq!(g.len(), 17);
        assert_eq!(g[16], 1.3);
        assert_eq!(g[7], 0.85);
        assert!(grid(1.0, 0.5, 0.1).is_err());
    }

    #[test]
    fn channel_rows_and_measure() {
        let c = UniformChannel::new(0.3, 0.8).unwrap();
        let ea = math::exp(0.3);
        assert!((c.p_one(0.1) - ea / (1.0 + ea)).abs() < 1e-15);
        assert!((c.p_one(0.8) - 1.0 / (1.0 + ea)).abs() < 1e-15);
        let mu = c.measure().unwrap();
        assert!(mu.check_normalization(0.0, f64::INFINITY).is_ok());
    }

    #[test]
    fn simulation_is_reproducible() {
        let cfg = UniformSimConfig {
            theta0: 1.0,
            n: 200,
            alpha: 0.5,
            grid: alloc::vec![0.8, 1.2],
            iters: 50,
            seed: 11,
            two_stage: None,
        };
        let a = run_simulation(&cfg).unwrap();
        let b = run_simulation(&cfg).unwrap();
        assert_eq!(a, b);
        assert!(a.points[0].theory_std.is_some() && a.points[1].theory_std.is_none());
        let two = UniformSimConfig {
            two_stage: Some(TwoStage::default()),
            ..cfg
        };
        assert!(run_simulation(&two)
            .unwrap()
            .points
            .iter()
            .all(|p| p.emp_mean.is_finite()));
    }
}
