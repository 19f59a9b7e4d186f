//! One-dimensional continuous models and extremal mechanisms built from
//! interval indicators.
//!
//! An extremal function is `r(x) = 1 + (e^α − 1)·1_F(x)` with `F` a finite
//! union of half-open intervals. Membership is evaluated pointwise, which
//! coincides with the right limit at every endpoint.

use alloc::boxed::Box;
use alloc::format;
use alloc::vec::Vec;

use crate::error::{check_alpha, Error, Result};
use crate::math;
use crate::quadrature::{integrate_with_breaks, QuadratureConfig};

pub const NORMALIZATION_TOL: f64 = 1e-6;
pub const NORMALIZATION_GRID: usize = 10_000;
pub const DEFAULT_SIGN_CHANGE_CAP: usize = 64;
const SIGN_SCAN_POINTS: usize = 4096;
const MASS_SLACK: f64 = 1e-12;

/// Sorted, pairwise disjoint half-open intervals `[a, b)`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct IntervalSet {
    intervals: Vec<(f64, f64)>,
}

impl IntervalSet {
    pub fn empty() -> Self {
        Self::default()
    }

    pub fn real_line() -> Self {
        Self {
            intervals: alloc::vec![(f64::NEG_INFINITY, f64::INFINITY)],
        }
    }

    /// Sorts, drops empty pieces and merges overlapping or touching ones.
    pub fn new(mut intervals: Vec<(f64, f64)>) -> Result<Self> {
        if intervals.iter().any(|&(a, b)| a.is_nan() || b.is_nan()) {
            return Err(Error::InvalidParameter {
                name: "intervals",
                reason: "NaN endpoint".into(),
            });
        }
        intervals.retain(|&(a, b)| a < b);
        intervals.sort_by(|x, y| x.0.total_cmp(&y.0));
        let mut merged: Vec<(f64, f64)> = Vec::with_capacity(intervals.len());
        for (a, b) in intervals {
            match merged.last_mut() {
                Some(last) if a <= last.1 => last.1 = last.1.max(b),
                _ => merged.push((a, b)),
            }
        }
        Ok(Self { intervals: merged })
    }

    pub fn intervals(&self) -> &[(f64, f64)] {
        &self.intervals
    }

    pub fn is_empty(&self) -> bool {
        self.intervals.is_empty()
    }

    pub fn contains(&self, x: f64) -> bool {
        let k = self.intervals.partition_point(|&(a, _)| a <= x);
        k > 0 && x < self.intervals[k - 1].1
    }

    /// Complement within the real line.
    pub fn complement(&self) -> Self {
        let mut out = Vec::with_capacity(self.intervals.len() + 1);
        let mut cursor = f64::NEG_INFINITY;
        for &(a, b) in &self.intervals {
            if a > cursor {
                out.push((cursor, a));
            }
            cursor = b;
        }
        if cursor < f64::INFINITY {
            out.push((cursor, f64::INFINITY));
        }
        Self { intervals: out }
    }

    /// Pieces of the set clipped to `[lo, hi)`.
    pub fn clipped(&self, lo: f64, hi: f64) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.intervals
            .iter()
            .map(move |&(a, b)| (a.max(lo), b.min(hi)))
            .filter(|&(a, b)| a < b)
    }

    /// Finite endpoints in increasing order.
    pub fn endpoints(&self) -> impl Iterator<Item = f64> + '_ {
        self.intervals
            .iter()
            .flat_map(|&(a, b)| [a, b])
            .filter(|x| x.is_finite())
    }
}

/// `r(x) = 1 + (e^α − 1)·1_{F⁺}(x)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ExtremalFunction {
    alpha: f64,
    f_plus: IntervalSet,
}

impl ExtremalFunction {
    pub fn new(alpha: f64, f_plus: IntervalSet) -> Result<Self> {
        check_alpha(alpha)?;
        Ok(Self { alpha, f_plus })
    }

    /// The constant function 1.
    pub fn ones(alpha: f64) -> Result<Self> {
        Self::new(alpha, IntervalSet::empty())
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn f_plus(&self) -> &IntervalSet {
        &self.f_plus
    }

    pub fn f_minus(&self) -> IntervalSet {
        self.f_plus.complement()
    }

    pub fn eval(&self, x: f64) -> f64 {
        if self.f_plus.contains(x) {
            math::exp(self.alpha)
        } else {
            1.0
        }
    }
}

/// Finitely supported sub-probability over extremal functions.
#[derive(Debug, Clone, PartialEq)]
pub struct ExtremalMeasure {
    alpha: f64,
    atoms: Vec<(ExtremalFunction, f64)>,
}

impl ExtremalMeasure {
    pub fn new(atoms: Vec<(ExtremalFunction, f64)>) -> Result<Self> {
        let alpha = atoms
            .first()
            .map(|(r, _)| r.alpha)
            .ok_or(Error::InvalidParameter {
                name: "atoms",
                reason: "measure has no atoms".into(),
            })?;
        for (r, w) in &atoms {
            if r.alpha != alpha {
                return Err(Error::InvalidParameter {
                    name: "atoms",
                    reason: format!("mixed privacy levels {} and {}", alpha, r.alpha),
                });
            }
            if !(w.is_finite() && *w >= 0.0) {
                return Err(Error::InvalidParameter {
                    name: "weight",
                    reason: format!("weight {w} is not a finite non-negative number"),
                });
            }
        }
        Ok(Self { alpha, atoms })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn atoms(&self) -> &[(ExtremalFunction, f64)] {
        &self.atoms
    }

    pub fn total_mass(&self) -> f64 {
        self.atoms.iter().map(|(_, w)| w).sum()
    }

    /// `Σ_k w_k r_k(x)`.
    pub fn eval(&self, x: f64) -> f64 {
        self.atoms.iter().map(|(r, w)| w * r.eval(x)).sum()
    }

    pub fn mass_in_window(&self) -> bool {
        let m = self.total_mass();
        m >= math::exp(-self.alpha) - MASS_SLACK && m <= 1.0 + MASS_SLACK
    }

    /// Largest `|Σ w_k r_k(x) − 1|` over `[lo, hi]`, probed on a uniform grid
    /// plus every interval endpoint and its immediate neighbours.
    pub fn normalization_deviation(&self, lo: f64, hi: f64) -> (f64, f64) {
        let mut ends: Vec<f64> = self
            .atoms
            .iter()
            .flat_map(|(r, _)| r.f_plus.endpoints())
            .filter(|&e| e >= lo && e <= hi)
            .collect();
        let finite = ends
            .iter()
            .copied()
            .chain([lo, hi].into_iter().filter(|v| v.is_finite()));
        let (mut wlo, mut whi) = finite.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), e| {
            (a.min(e), b.max(e))
        });
        if wlo > whi {
            wlo = -1.0;
            whi = 1.0;
        }
        // Beyond every endpoint all indicators are constant, so one probe
        // on each side of the window covers the tails.
        let pad = 1.0 + (whi - wlo);
        let (glo, ghi) = (
            if lo.is_finite() { lo } else { wlo - pad },
            if hi.is_finite() { hi } else { whi + pad },
        );
        let mut probes: Vec<f64> = (0..=NORMALIZATION_GRID)
            .map(|i| glo + (ghi - glo) * i as f64 / NORMALIZATION_GRID as f64)
            .collect();
        ends.sort_by(f64::total_cmp);
        ends.dedup();
        for e in ends {
            let eps = 1e-9 * math::abs(e).max(1.0);
            probes.extend([e - eps, e, e + eps]);
        }
        let mut worst = (glo, 0.0);
        for x in probes.into_iter().filter(|&x| x >= lo && x <= hi) {
            let dev = math::abs(self.eval(x) - 1.0);
            if dev > worst.1 {
                worst = (x, dev);
            }
        }
        worst
    }

    /// Errors when the normalization constraint fails on `[lo, hi]` or the
    /// total mass leaves `[e^{-α}, 1]`.
    pub fn check_normalization(&self, lo: f64, hi: f64) -> Result<()> {
        let (x, deviation) = self.normalization_deviation(lo, hi);
        if deviation > NORMALIZATION_TOL {
            return Err(Error::Normalization { x, deviation });
        }
        if !self.mass_in_window() {
            return Err(Error::InvalidParameter {
                name: "atoms",
                reason: format!(
                    "total mass {} outside [{}, 1]",
                    self.total_mass(),
                    math::exp(-self.alpha)
                ),
            });
        }
        Ok(())
    }
}

type Callable = Box<dyn Fn(f64) -> f64 + Send + Sync>;

/// A scalar-parameter model on a subset of the real line, described by its
/// density and score at the reference parameter.
///
/// `score_atoms` carries point masses of the score measure `∂_θ P_θ`, which
/// appear for families whose support moves with the parameter. An atom at
/// `x` counts as inside `F` whenever `x ∈ F`.
pub struct ContinuousModel {
    name: &'static str,
    support: (f64, f64),
    density: Callable,
    score: Callable,
    breakpoints: Vec<f64>,
    score_atoms: Vec<(f64, f64)>,
    quadrature: QuadratureConfig,
}

impl core::fmt::Debug for ContinuousModel {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.debug_struct("ContinuousModel")
            .field("name", &self.name)
            .field("support", &self.support)
            .field("breakpoints", &self.breakpoints)
            .field("score_atoms", &self.score_atoms)
            .finish_non_exhaustive()
    }
}

impl ContinuousModel {
    /// Builds and validates a model: unit mass, centered score and finite
    /// second moment, each checked by quadrature.
    pub fn new<P, S>(support: (f64, f64), density: P, score: S) -> Result<Self>
    where
        P: Fn(f64) -> f64 + Send + Sync + 'static,
        S: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        Self::build(
            "custom",
            support,
            Box::new(density),
            Box::new(score),
            Vec::new(),
            Vec::new(),
        )
    }

    fn build(
        name: &'static str,
        support: (f64, f64),
        density: Callable,
        score: Callable,
        breakpoints: Vec<f64>,
        score_atoms: Vec<(f64, f64)>,
    ) -> Result<Self> {
        let model = Self {
            name,
            support,
            density,
            score,
            breakpoints,
            score_atoms,
            quadrature: QuadratureConfig::default(),
        };
        model.validate()?;
        Ok(model)
    }

    fn validate(&self) -> Result<()> {
        let (lo, hi) = self.support;
        if lo.partial_cmp(&hi) != Some(core::cmp::Ordering::Less) {
            return Err(Error::InvalidModel(format!("empty support [{lo}, {hi})")));
        }
        let tol = 10.0 * self.quadrature.abs_tol.max(1e-10);
        let mass = self.integrate_over(lo, hi, |x| (self.density)(x))?;
        if math::abs(mass - 1.0) > tol {
            return Err(Error::InvalidModel(format!("density integrates to {mass}")));
        }
        let mean = self.score_mass(lo, hi)?;
        if math::abs(mean) > tol {
            return Err(Error::InvalidModel(format!("score has mean {mean}")));
        }
        let second = self.integrate_over(lo, hi, |x| {
            let s = (self.score)(x);
            s * s * (self.density)(x)
        })?;
        if !second.is_finite() {
            return Err(Error::InvalidModel(
                "score has infinite second moment".into(),
            ));
        }
        Ok(())
    }

    /// Location family `N(μ, σ²)` with score `(x − μ)/σ²`.
    pub fn gaussian(mean: f64, sigma: f64) -> Result<Self> {
        if !(mean.is_finite() && sigma.is_finite() && sigma > 0.0) {
            return Err(Error::InvalidParameter {
                name: "sigma",
                reason: format!("need finite mean and positive sigma, got ({mean}, {sigma})"),
            });
        }
        Self::build(
            "gaussian",
            (f64::NEG_INFINITY, f64::INFINITY),
            Box::new(move |x| math::normal_pdf((x - mean) / sigma) / sigma),
            Box::new(move |x| (x - mean) / (sigma * sigma)),
            alloc::vec![mean],
            Vec::new(),
        )
    }

    /// Scale family `U[0, θ₀]` on `[0, ∞)`.
    ///
    /// The score measure is `−1/θ₀²` on `[0, θ₀)` plus an atom `1/θ₀` at `θ₀`;
    /// the score density returns the atom's sign beyond `θ₀`, where the
    /// density vanishes.
    pub fn uniform(theta0: f64) -> Result<Self> {
        if !(theta0.is_finite() && theta0 > 0.0) {
            return Err(Error::InvalidParameter {
                name: "theta0",
                reason: format!("must be positive, got {theta0}"),
            });
        }
        Self::build(
            "uniform",
            (0.0, f64::INFINITY),
            Box::new(move |x| {
                if (0.0..theta0).contains(&x) {
                    1.0 / theta0
                } else {
                    0.0
                }
            }),
            Box::new(move |x| {
                if x < theta0 {
                    -1.0 / theta0
                } else {
                    1.0 / theta0
                }
            }),
            alloc::vec![theta0],
            alloc::vec![(theta0, 1.0 / theta0)],
        )
    }

    /// Density and score constant on each `[breaks[k], breaks[k+1])`.
    pub fn piecewise(breaks: Vec<f64>, density: Vec<f64>, score: Vec<f64>) -> Result<Self> {
        let k = density.len();
        if k == 0 || breaks.len() != k + 1 || score.len() != k {
            return Err(Error::InvalidModel(format!(
                "piecewise model needs k+1 breaks and k values, got {} breaks, {} densities, {} scores",
                breaks.len(),
                density.len(),
                score.len()
            )));
        }
        if breaks.iter().any(|b| !b.is_finite()) || breaks.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidModel(
                "breaks must be finite and strictly increasing".into(),
            ));
        }
        if density.iter().chain(&score).any(|v| !v.is_finite()) || density.iter().any(|&v| v < 0.0)
        {
            return Err(Error::InvalidModel(
                "densities must be finite and non-negative, scores finite".into(),
            ));
        }
        let support = (breaks[0], breaks[k]);
        let locate = {
            let breaks = breaks.clone();
            move |x: f64| -> Option<usize> {
                if x < breaks[0] || x >= breaks[breaks.len() - 1] {
                    None
                } else {
                    Some(breaks.partition_point(|&b| b <= x) - 1)
                }
            }
        };
        let locate2 = locate.clone();
        Self::build(
            "custom-piecewise",
            support,
            Box::new(move |x| locate(x).map_or(0.0, |i| density[i])),
            Box::new(move |x| locate2(x).map_or(0.0, |i| score[i])),
            breaks,
            Vec::new(),
        )
    }

    /// Adds points where the integrands may have kinks or jumps.
    pub fn with_breakpoints(mut self, breaks: &[f64]) -> Self {
        self.breakpoints.extend_from_slice(breaks);
        self
    }

    pub fn with_quadrature(mut self, cfg: QuadratureConfig) -> Self {
        self.quadrature = cfg;
        self
    }

    pub fn name(&self) -> &'static str {
        self.name
    }

    pub fn support(&self) -> (f64, f64) {
        self.support
    }

    pub fn density(&self, x: f64) -> f64 {
        (self.density)(x)
    }

    pub fn score(&self, x: f64) -> f64 {
        (self.score)(x)
    }

    pub fn score_atoms(&self) -> &[(f64, f64)] {
        &self.score_atoms
    }

    pub fn quadrature(&self) -> &QuadratureConfig {
        &self.quadrature
    }

    fn integrate_over<F: Fn(f64) -> f64>(&self, a: f64, b: f64, f: F) -> Result<f64> {
        Ok(integrate_with_breaks(f, a, b, &self.breakpoints, &self.quadrature)?.value)
    }

    /// `∫_a^b s p` plus the score atoms in `[a, b)`.
    fn score_mass(&self, a: f64, b: f64) -> Result<f64> {
        let body = self.integrate_over(a, b, |x| (self.score)(x) * (self.density)(x))?;
        let atoms: f64 = self
            .score_atoms
            .iter()
            .filter(|&&(x, _)| a <= x && x < b)
            .map(|&(_, m)| m)
            .sum();
        Ok(body + atoms)
    }

    /// `P(F)`.
    pub fn probability(&self, set: &IntervalSet) -> Result<f64> {
        let (lo, hi) = self.support;
        set.clipped(lo, hi)
            .map(|(a, b)| self.integrate_over(a, b, |x| (self.density)(x)))
            .sum()
    }

    /// `∫_F s p`, atoms included.
    pub fn partial_score(&self, set: &IntervalSet) -> Result<f64> {
        let (lo, hi) = self.support;
        set.clipped(lo, hi)
            .map(|(a, b)| self.score_mass(a, b))
            .sum()
    }

    /// `∫ |s| p`, atoms included, splitting at the sign changes of the score.
    pub fn mean_abs_score(&self) -> Result<f64> {
        let (lo, hi) = self.support;
        let changes = sign_changes(self, DEFAULT_SIGN_CHANGE_CAP).unwrap_or_default();
        let breaks: Vec<f64> = self.breakpoints.iter().copied().chain(changes).collect();
        let body = integrate_with_breaks(
            |x| math::abs((self.score)(x)) * (self.density)(x),
            lo,
            hi,
            &breaks,
            &self.quadrature,
        )?
        .value;
        Ok(body
            + self
                .score_atoms
                .iter()
                .map(|&(_, m)| math::abs(m))
                .sum::<f64>())
    }
}

/// `p̃(r) = ∫ r p = 1 + (e^α − 1)·P(F⁺)`.
pub fn tilde_density(m: &ContinuousModel, r: &ExtremalFunction) -> Result<f64> {
    Ok(1.0 + math::expm1(r.alpha) * m.probability(&r.f_plus)?)
}

/// `p̃(r)` by direct quadrature of `r·p`, split at the endpoints of `F⁺`.
pub fn tilde_density_by_quadrature(m: &ContinuousModel, r: &ExtremalFunction) -> Result<f64> {
    let (lo, hi) = m.support;
    let breaks: Vec<f64> = m
        .breakpoints
        .iter()
        .copied()
        .chain(r.f_plus.endpoints())
        .collect();
    Ok(integrate_with_breaks(|x| r.eval(x) * m.density(x), lo, hi, &breaks, &m.quadrature)?.value)
}

/// `t(r) = (e^α − 1)·∫_{F⁺} s p / p̃(r)`.
pub fn tilde_score(m: &ContinuousModel, r: &ExtremalFunction) -> Result<f64> {
    let num = m.partial_score(&r.f_plus)?;
    Ok(math::expm1(r.alpha) * num / tilde_density(m, r)?)
}

/// Fisher information of the public view under `q^{(μ)}`:
/// `(e^α − 1)² Σ_k w_k (∫_{F_k⁺} s p)² / p̃(r_k)`.
pub fn fisher_info_extremal(m: &ContinuousModel, mu: &ExtremalMeasure) -> Result<f64> {
    let (lo, hi) = m.support;
    mu.check_normalization(lo, hi)?;
    let e1 = math::expm1(mu.alpha);
    let mut total = 0.0;
    for (r, w) in &mu.atoms {
        if *w == 0.0 {
            continue;
        }
        let num = m.partial_score(&r.f_plus)?;
        total += w * num * num / tilde_density(m, r)?;
    }
    Ok(e1 * e1 * total)
}

/// Lower and upper bounds on the best achievable Fisher information.
pub fn info_bounds(m: &ContinuousModel, alpha: f64) -> Result<(f64, f64)> {
    check_alpha(alpha)?;
    let e = m.mean_abs_score()?;
    let e1 = math::expm1(alpha);
    let ea = math::exp(alpha);
    let lower = e1 * e1 / (2.0 * ea * (1.0 + ea)) * e * e;
    let upper = e1 * e1 / 4.0 * e * e;
    Ok((lower, upper))
}

/// The small-α equivalent `α²(∫|s|p)²/4` of the optimum.
pub fn small_alpha_limit(m: &ContinuousModel, alpha: f64) -> Result<f64> {
    check_alpha(alpha)?;
    let e = m.mean_abs_score()?;
    Ok(alpha * alpha * e * e / 4.0)
}

fn scan_points(lo: f64, hi: f64) -> Vec<f64> {
    let n = SIGN_SCAN_POINTS;
    let t = |i: usize| -1.0 + 2.0 * (i as f64 + 0.5) / n as f64;
    match (lo.is_finite(), hi.is_finite()) {
        (true, true) => (0..=n)
            .map(|i| lo + (hi - lo) * i as f64 / n as f64)
            .collect(),
        (true, false) => (0..n)
            .map(|i| {
                let u = (i as f64) / n as f64;
                lo + u / (1.0 - u)
            })
            .collect(),
        (false, true) => (0..n)
            .map(|i| {
                let u = (i as f64) / n as f64;
                hi - u / (1.0 - u)
            })
            .collect(),
        (false, false) => (0..n)
            .map(|i| {
                let s = t(i);
                s / (1.0 - s * s)
            })
            .collect(),
    }
}

/// Points `c` where `s > 0` switches on or off, located to floating-point
/// resolution; each `c` belongs to the piece on its right.
pub fn sign_changes(m: &ContinuousModel, cap: usize) -> Result<Vec<f64>> {
    let (lo, hi) = m.support;
    let positive = |x: f64| m.score(x) > 0.0;
    let mut probes = scan_points(lo, hi);
    for &b in &m.breakpoints {
        let eps = 1e-9 * math::abs(b).max(1.0);
        probes.extend([b - eps, b, b + eps]);
    }
    for &(x, _) in &m.score_atoms {
        probes.push(x);
    }
    probes.retain(|&x| x >= lo && x < hi && x.is_finite());
    probes.sort_by(f64::total_cmp);
    probes.dedup();
    let mut changes = Vec::new();
    for w in probes.windows(2) {
        let (mut a, mut b) = (w[0], w[1]);
        let left = positive(a);
        if left == positive(b) {
            continue;
        }
        loop {
            let mid = a + 0.5 * (b - a);
            if mid <= a || mid >= b {
                break;
            }
            if positive(mid) == left {
                a = mid;
            } else {
                b = mid;
            }
        }
        changes.push(b);
        if changes.len() > cap {
            return Err(Error::SignChanges { cap });
        }
    }
    Ok(changes)
}

/// `{x : s(x) > 0}` as an interval set, to scan resolution.
pub fn positive_score_set(m: &ContinuousModel, cap: usize) -> Result<IntervalSet> {
    let (lo, hi) = m.support;
    let changes = sign_changes(m, cap)?;
    let mut edges = Vec::with_capacity(changes.len() + 2);
    edges.push(lo);
    edges.extend(changes);
    edges.push(hi);
    let mut pieces = Vec::new();
    for w in edges.windows(2) {
        let probe = if w[0].is_finite() { w[0] } else { w[1] - 1.0 };
        if m.score(probe) > 0.0 {
            pieces.push((w[0], w[1]));
        }
    }
    // Pieces touching an infinite support end extend to infinity already;
    // a positive piece ending at a finite support end stays clipped there.
    IntervalSet::new(pieces)
}

/// Two atoms splitting the line by score sign, each with weight `1/(1 + e^α)`.
pub fn two_point_mechanism(m: &ContinuousModel, alpha: f64) -> Result<ExtremalMeasure> {
    two_point_mechanism_with_cap(m, alpha, DEFAULT_SIGN_CHANGE_CAP)
}

pub fn two_point_mechanism_with_cap(
    m: &ContinuousModel,
    alpha: f64,
    cap: usize,
) -> Result<ExtremalMeasure> {
    check_alpha(alpha)?;
    let (lo, hi) = m.support;
    let mut plus = positive_score_set(m, cap)?;
    // Extend a positive piece that reaches the support edge to the rest of
    // the line so the two atoms partition every x, not only the support.
    let mut ivs = plus.intervals().to_vec();
    for iv in ivs.iter_mut() {
        if iv.0 == lo {
            iv.0 = f64::NEG_INFINITY;
        }
        if iv.1 == hi {
            iv.1 = f64::INFINITY;
        }
    }
    plus = IntervalSet::new(ivs)?;
    let minus = plus.complement();
    let w = 1.0 / (1.0 + math::exp(alpha));
    ExtremalMeasure::new(alloc::vec![
        (ExtremalFunction::new(alpha, plus)?, w),
        (ExtremalFunction::new(alpha, minus)?, w),
    ])
}

#[cfg(test)]
mod tests {
    use super::*;

    const SQRT_2_OVER_PI: f64 = 0.797_884_560_802_865_4;

    fn set(iv: &[(f64, f64)]) -> IntervalSet {
        IntervalSet::new(iv.to_vec()).unwrap()
    }

    #[test]
    fn interval_set_merges_and_looks_up() {
        let s = set(&[(3.0, 4.0), (0.0, 1.0), (1.0, 2.0), (5.0, 5.0)]);
        assert_eq!(s.intervals(), &[(0.0, 2.0), (3.0, 4.0)]);
        assert!(s.contains(0.0) && s.contains(1.5) && s.contains(3.0));
        assert!(!s.contains(2.0) && !s.contains(4.0) && !s.contains(-1.0) && !s.contains(10.0));
        let c = s.complement();
        assert_eq!(
            c.intervals(),
            &[(f64::NEG_INFINITY, 0.0), (2.0, 3.0), (4.0, f64::INFINITY)]
        );
        assert_eq!(c.complement(), s);
        assert_eq!(IntervalSet::empty().complement(), IntervalSet::real_line());
    }

    #[test]
    fn extremal_function_values() {
        let r = ExtremalFunction::new(0.5, set(&[(0.0, 1.0)])).unwrap();
        assert_eq!(r.eval(0.5), math::exp(0.5));
        assert_eq!(r.eval(1.0), 1.0);
        assert!(ExtremalFunction::new(-0.1, IntervalSet::empty()).is_err());
    }

    #[test]
    fn tilde_density_trivial_cases() {
        let m = ContinuousModel::gaussian(0.0, 1.0).unwrap();
        let ones = ExtremalFunction::ones(0.7).unwrap();
        assert!((tilde_density(&m, &ones).unwrap() - 1.0).abs() < 1e-15);
        let full = ExtremalFunction::new(0.7, IntervalSet::real_line()).unwrap();
        assert!((tilde_density(&m, &full).unwrap() - math::exp(0.7)).abs() < 1e-9);
    }

    #[test]
    fn tilde_density_uniform_prefix() {
        let (theta0, tp, alpha) = (2.0, 1.5, 0.3);
        let m = ContinuousModel::uniform(theta0).unwrap();
        let r = ExtremalFunction::new(alpha, set(&[(0.0, tp)])).unwrap();
        let want = 1.0 + math::expm1(alpha) * tp / theta0;
        assert!((tilde_density(&m, &r).unwrap() - want).abs() < 1e-10);
        assert!((tilde_density_by_quadrature(&m, &r).unwrap() - want).abs() < 2e-10);
    }

    #[test]
    fn tilde_score_gaussian_half_line() {
        let alpha = 0.4;
        let m = ContinuousModel::gaussian(0.0, 1.0).unwrap();
        let r = ExtremalFunction::new(alpha, set(&[(0.0, f64::INFINITY)])).unwrap();
        let pt = 1.0 + math::expm1(alpha) * 0.5;
        let want = math::expm1(alpha) * 0.5 * SQRT_2_OVER_PI / pt;
        assert!((tilde_score(&m, &r).unwrap() - want).abs() < 1e-10);
        assert_eq!(
            tilde_score(&m, &ExtremalFunction::ones(alpha).unwrap()).unwrap(),
            0.0
        );
        let full = ExtremalFunction::new(alpha, IntervalSet::real_line()).unwrap();
        assert!(tilde_score(&m, &full).unwrap().abs() < 1e-10);
    }

    #[test]
    fn gaussian_mean_abs_score() {
        let m = ContinuousModel::gaussian(0.0, 1.0).unwrap();
        assert!((m.mean_abs_score().unwrap() - SQRT_2_OVER_PI).abs() < 1e-10);
        let shifted = ContinuousModel::gaussian(3.0, 2.0).unwrap();
        assert!((shifted.mean_abs_score().unwrap() - SQRT_2_OVER_PI / 2.0).abs() < 1e-10);
    }

    #[test]
    fn gaussian_two_point_set_and_value() {
        let m = ContinuousModel::gaussian(0.0, 1.0).unwrap();
        let mu = two_point_mechanism(&m, 0.3).unwrap();
        // {s > 0} = (0, ∞): the left end is the smallest positive double.
        let plus = mu.atoms()[0].0.f_plus();
        assert_eq!(plus.intervals().len(), 1);
        assert!(!plus.contains(0.0) && plus.contains(1e-300) && plus.contains(1e300));
        assert_eq!(mu.atoms()[1].0.f_plus(), &plus.complement());
        for alpha in [0.1, 0.3, 1.0] {
            let mu = two_point_mechanism(&m, alpha).unwrap();
            let info = fisher_info_extremal(&m, &mu).unwrap();
            let e1 = math::expm1(alpha);
            let ea = math::exp(alpha);
            let reference = 2.0 / core::f64::consts::PI * e1 * e1 / ((1.0 + ea) * (1.0 + ea));
            assert!((info - reference).abs() < 1e-10);
            let (lo, hi) = info_bounds(&m, alpha).unwrap();
            assert!(lo <= info && info <= hi);
        }
    }

    #[test]
    fn single_constant_atom_carries_no_information() {
        let m = ContinuousModel::gaussian(0.0, 1.0).unwrap();
        let mu =
            ExtremalMeasure::new(alloc::vec![(ExtremalFunction::ones(0.5).unwrap(), 1.0)]).unwrap();
        assert_eq!(fisher_info_extremal(&m, &mu).unwrap(), 0.0);
    }

    #[test]
    fn unnormalized_measure_reports_point() {
        let m = ContinuousModel::gaussian(0.0, 1.0).unwrap();
        let r = ExtremalFunction::new(0.5, set(&[(0.0, 1.0)])).unwrap();
        let mu = ExtremalMeasure::new(alloc::vec![(r, 0.9)]).unwrap();
        match fisher_info_extremal(&m, &mu) {
            Err(Error::Normalization { x, deviation }) => {
                assert!((0.0..1.0).contains(&x));
                assert!((deviation - (0.9 * math::exp(0.5) - 1.0)).abs() < 1e-12);
            }
            other => panic!("expected normalization error, got {other:?}"),
        }
    }

    #[test]
    fn uniform_two_point_matches_closed_form() {
        let (theta0, alpha) = (1.5, 0.3);
        let m = ContinuousModel::uniform(theta0).unwrap();
        assert!((m.mean_abs_score().unwrap() - 2.0 / theta0).abs() < 1e-10);
        let mu = two_point_mechanism(&m, alpha).unwrap();
        assert_eq!(
            mu.atoms()[0].0.f_plus().intervals(),
            &[(theta0, f64::INFINITY)]
        );
        let info = fisher_info_extremal(&m, &mu).unwrap();
        let e1 = math::expm1(alpha);
        let want = e1 * e1 / (theta0 * theta0 * math::exp(alpha));
        assert!((info - want).abs() < 1e-10);
        let (_, upper) = info_bounds(&m, alpha).unwrap();
        assert!((upper - e1 * e1 / (theta0 * theta0)).abs() < 1e-10);
    }

    #[test]
    fn piecewise_model_sign_sets() {
        // Three pieces with scores of sign -, +, -.
        let m = ContinuousModel::piecewise(
            alloc::vec![0.0, 1.0, 2.0, 4.0],
            alloc::vec![0.25, 0.5, 0.125],
            alloc::vec![-1.0, 1.0, -1.0],
        )
        .unwrap();
        let plus = positive_score_set(&m, 8).unwrap();
        assert_eq!(plus.intervals(), &[(1.0, 2.0)]);
        assert!((m.mean_abs_score().unwrap() - 1.0).abs() < 1e-12);
        assert!(sign_changes(&m, 1).is_err());
    }

    #[test]
    fn piecewise_rejects_uncentered_score() {
        let bad = ContinuousModel::piecewise(
            alloc::vec![0.0, 1.0, 2.0],
            alloc::vec![0.5, 0.5],
            alloc::vec![1.0, 0.5],
        );
        assert!(matches!(bad, Err(Error::InvalidModel(_))));
        let unnormalized =
            ContinuousModel::piecewise(alloc::vec![0.0, 1.0], alloc::vec![0.5], alloc::vec![0.0]);
        assert!(unnormalized.is_err());
    }

    #[test]
    fn bounds_vanish_without_privacy() {
        let m = ContinuousModel::gaussian(0.0, 1.0).unwrap();
        assert_eq!(info_bounds(&m, 0.0).unwrap(), (0.0, 0.0));
    }

    #[test]
    fn small_alpha_ratio_approaches_one() {
        let m = ContinuousModel::gaussian(0.0, 1.0).unwrap();
        let mut prev = f64::INFINITY;
        for alpha in [0.2, 0.1, 0.05, 0.025] {
            let mu = two_point_mechanism(&m, alpha).unwrap();
            let ratio =
                fisher_info_extremal(&m, &mu).unwrap() / small_alpha_limit(&m, alpha).unwrap();
            let gap = (ratio - 1.0).abs();
            assert!(gap < 5.0 * alpha && gap <= prev);
            prev = gap;
        }
    }
}
