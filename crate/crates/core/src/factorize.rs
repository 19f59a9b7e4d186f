//! Factorization of a finite α-LDP channel `q` as `q = q2 ∘ q1`, where `q1`
//! is an extremal (staircase) mechanism `q1_x(β) = ω_β r_β(x)` and `q2` is a
//! post-randomization of the pattern index.
//!
//! For every output `z` the normalized column `u(z) = q_·(z) / q̲(z)` lies in
//! the hyperrectangle `[1, e^α]^d` and is written as a convex combination
//! `Σ_β c_{z,β} r_β` of its vertices. Then `ω_β = Σ_z q̲(z) c_{z,β}` and
//! `q2_β(z) = q̲(z) c_{z,β} / ω_β`.
//!
//! The convex decomposition is not unique. Two constructions are provided:
//! the closed-form product decomposition (up to `2^k` atoms, `k` the number of
//! interior coordinates) and greedy vertex peeling (at most `d + 1` atoms).

use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use crate::channel::Channel;
use crate::error::{check_alpha, Error, Result};
use crate::staircase::{StaircaseMatrix, DEFAULT_MAX_DIM, MAX_REPRESENTABLE_DIM};
use crate::{math, LDP_SLACK};

/// Convex weights below this are dropped and the rest renormalized.
pub const PRUNE_FLOOR: f64 = 1e-14;

/// How to split a point of `[1, e^α]^d` into staircase vertices.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DecompositionMode {
    /// Independent per-coordinate Bernoulli split; exact, up to `2^d` atoms.
    Product,
    /// Greedy vertex peeling; at most `d + 1` atoms.
    #[default]
    Sparse,
}

/// `q̲(z) = min_x q_x(z)`.
pub fn min_mass(c: &Channel) -> Vec<f64> {
    (0..c.output_size())
        .map(|z| c.column(z).fold(f64::INFINITY, f64::min))
        .collect()
}

/// Row-major `d × l` matrix `u_x(z) = q_x(z) / q̲(z)`, set to 1 on columns with `q̲(z) = 0`.
///
/// Fails if some ratio exceeds `e^α` beyond rounding slack, or if a column is
/// zero for some inputs only.
pub fn normalized_ratios(c: &Channel, alpha: f64) -> Result<Vec<f64>> {
    check_alpha(alpha)?;
    let (d, l) = (c.input_size(), c.output_size());
    let upper = math::exp(alpha);
    let limit = upper * (1.0 + LDP_SLACK);
    let floor = min_mass(c);
    let mut u = alloc::vec![1.0; d * l];
    for (z, &m) in floor.iter().enumerate() {
        if m == 0.0 {
            if let Some(x_positive) = (0..d).find(|&x| c.get(x, z) > 0.0) {
                let x_zero = (0..d).find(|&x| c.get(x, z) == 0.0).unwrap_or(0);
                return Err(Error::RemovableOutput {
                    z,
                    x_zero,
                    x_positive,
                });
            }
            continue;
        }
        for x in 0..d {
            let ratio = c.get(x, z) / m;
            if ratio > limit {
                return Err(Error::LdpViolation { alpha, z, ratio });
            }
            u[x * l + z] = ratio.min(upper);
        }
    }
    Ok(u)
}

/// Writes `u ∈ [1, e^α]^d` as convex weights over staircase patterns.
///
/// Returns `(β, c_β)` pairs sorted by `β`, with `Σ c_β = 1` and
/// `Σ c_β r_β = u`.
pub fn vertex_decompose(u: &[f64], alpha: f64, mode: DecompositionMode) -> Result<Vec<(u64, f64)>> {
    check_alpha(alpha)?;
    let d = u.len();
    if d == 0 || d > MAX_REPRESENTABLE_DIM {
        return Err(Error::DimensionCap {
            d,
            cap: MAX_REPRESENTABLE_DIM,
        });
    }
    let upper = math::exp(alpha);
    let span = math::expm1(alpha);
    let mut lambda = Vec::with_capacity(d);
    for (index, &value) in u.iter().enumerate() {
        if !(value >= 1.0 - LDP_SLACK && value <= upper * (1.0 + LDP_SLACK)) {
            return Err(Error::OutsideHyperrectangle {
                index,
                value,
                upper,
            });
        }
        // Position of the coordinate between the endpoints 1 and e^α.
        let t = if span > 0.0 {
            (value - 1.0) / span
        } else {
            0.0
        };
        lambda.push(t.clamp(0.0, 1.0));
    }
    let mut atoms = match mode {
        DecompositionMode::Product => product_split(&lambda)?,
        DecompositionMode::Sparse => peel(&mut lambda),
    };
    prune(&mut atoms);
    Ok(atoms)
}

fn product_split(lambda: &[f64]) -> Result<Vec<(u64, f64)>> {
    let mut base = 0u64;
    let mut free = Vec::new();
    for (j, &t) in lambda.iter().enumerate() {
        if t >= 1.0 {
            base |= 1 << j;
        } else if t > 0.0 {
            free.push(j);
        }
    }
    if free.len() > DEFAULT_MAX_DIM {
        return Err(Error::DimensionCap {
            d: free.len(),
            cap: DEFAULT_MAX_DIM,
        });
    }
    let mut atoms = Vec::with_capacity(1 << free.len());
    for mask in 0u64..(1u64 << free.len()) {
        let mut beta = base;
        let mut weight = 1.0;
        for (k, &j) in free.iter().enumerate() {
            if (mask >> k) & 1 == 1 {
                beta |= 1 << j;
                weight *= lambda[j];
            } else {
                weight *= 1.0 - lambda[j];
            }
        }
        atoms.push((beta, weight));
    }
    atoms.sort_unstable_by_key(|a| a.0);
    Ok(atoms)
}

/// Repeatedly moves toward the vertex obtained by rounding every coordinate
/// to its nearer endpoint (ties go up), peeling the largest weight that keeps
/// the remainder inside the cube. Each step pins at least one more coordinate
/// to an endpoint, so at most `d + 1` vertices are produced.
fn peel(lambda: &mut [f64]) -> Vec<(u64, f64)> {
    let mut atoms: Vec<(u64, f64)> = Vec::new();
    let mut remaining = 1.0;
    loop {
        let mut beta = 0u64;
        let mut step = 1.0f64;
        let mut pivot = None;
        for (j, &t) in lambda.iter().enumerate() {
            let up = t >= 0.5;
            if up {
                beta |= 1 << j;
            }
            let room = if up { t } else { 1.0 - t };
            if room < step {
                step = room;
                pivot = Some(j);
            }
        }
        let weight = remaining * step;
        if weight > 0.0 {
            match atoms.iter_mut().find(|a| a.0 == beta) {
                Some(a) => a.1 += weight,
                None => atoms.push((beta, weight)),
            }
        }
        let Some(pivot) = pivot else { break };
        if step >= 1.0 {
            break;
        }
        remaining *= 1.0 - step;
        for (j, t) in lambda.iter_mut().enumerate() {
            let up = (beta >> j) & 1 == 1;
            *t = if up {
                (*t - step) / (1.0 - step)
            } else {
                *t / (1.0 - step)
            };
            *t = t.clamp(0.0, 1.0);
        }
        lambda[pivot] = if (beta >> pivot) & 1 == 1 { 0.0 } else { 1.0 };
        if remaining <= 0.0 {
            break;
        }
    }
    atoms.sort_unstable_by_key(|a| a.0);
    atoms
}

fn prune(atoms: &mut Vec<(u64, f64)>) {
    atoms.retain(|a| a.1 >= PRUNE_FLOOR);
    let total: f64 = atoms.iter().map(|a| a.1).sum();
    if total > 0.0 && total != 1.0 {
        for a in atoms.iter_mut() {
            a.1 /= total;
        }
    }
}

/// Extremal-first factorization `q = q2 ∘ q1` of a finite channel.
#[derive(Debug, Clone, PartialEq)]
pub struct ExtremalFactorization {
    pub alpha: f64,
    pub mode: DecompositionMode,
    /// Sub-probability weights `ω_β`, positive entries only.
    pub omega: BTreeMap<u64, f64>,
    /// Pattern index of each output symbol of `q1` (ascending `β`).
    pub support: Vec<u64>,
    /// `d → |support|`, `q1_x(k) = ω_{support[k]} r_{support[k]}(x)`.
    pub q1: Channel,
    /// `|support| → l` post-randomization.
    pub q2: Channel,
    /// `q̲(z)`.
    pub min_mass: Vec<f64>,
    /// Convex weights `c_{z,β}` of each normalized column.
    pub coefficients: BTreeMap<(usize, u64), f64>,
}

impl ExtremalFactorization {
    pub fn total_mass(&self) -> f64 {
        self.omega.values().sum()
    }

    /// `max_x |Σ_β ω_β r_β(x) − 1|`.
    pub fn normalization_error(&self) -> f64 {
        let d = self.q1.input_size();
        let e = math::exp(self.alpha);
        (0..d)
            .map(|x| {
                let s: f64 = self
                    .omega
                    .iter()
                    .map(|(&b, &w)| if (b >> x) & 1 == 1 { w * e } else { w })
                    .sum();
                math::abs(s - 1.0)
            })
            .fold(0.0, f64::max)
    }

    /// `‖q2 ∘ q1 − q‖_∞`.
    pub fn reconstruction_error(&self, original: &Channel) -> Result<f64> {
        let composed = self.q1.compose(&self.q2)?;
        if composed.output_size() != original.output_size() {
            return Err(Error::DimensionMismatch {
                expected: original.output_size(),
                got: composed.output_size(),
            });
        }
        Ok(composed
            .kernel()
            .iter()
            .zip(original.kernel())
            .map(|(a, b)| math::abs(a - b))
            .fold(0.0, f64::max))
    }
}

/// Factorizes `c` through staircase patterns at budget `alpha`.
///
/// Patterns with zero weight are left out of `q1`'s output alphabet.
pub fn factorize(
    c: &Channel,
    alpha: f64,
    mode: DecompositionMode,
) -> Result<ExtremalFactorization> {
    let (d, l) = (c.input_size(), c.output_size());
    let u = normalized_ratios(c, alpha)?;
    let floor = min_mass(c);
    let mut coefficients = BTreeMap::new();
    let mut omega: BTreeMap<u64, f64> = BTreeMap::new();
    let mut column = alloc::vec![0.0; d];
    for z in 0..l {
        for (x, slot) in column.iter_mut().enumerate() {
            *slot = u[x * l + z];
        }
        for (beta, weight) in vertex_decompose(&column, alpha, mode)? {
            coefficients.insert((z, beta), weight);
            if floor[z] > 0.0 {
                *omega.entry(beta).or_insert(0.0) += floor[z] * weight;
            }
        }
    }
    omega.retain(|_, w| *w > 0.0);
    let support: Vec<u64> = omega.keys().copied().collect();
    let k = support.len();

    let patterns = StaircaseMatrix::with_cap(d, alpha, MAX_REPRESENTABLE_DIM)?;
    let mut q1 = alloc::vec![0.0; d * k];
    for x in 0..d {
        for (col, beta) in support.iter().enumerate() {
            q1[x * k + col] = omega[beta] * patterns.entry(x, *beta);
        }
    }
    let mut q2 = alloc::vec![0.0; k * l];
    for (row, beta) in support.iter().enumerate() {
        let w = omega[beta];
        for z in 0..l {
            if let Some(cz) = coefficients.get(&(z, *beta)) {
                q2[row * l + z] = floor[z] * cz / w;
            }
        }
    }
    Ok(ExtremalFactorization {
        alpha,
        mode,
        q1: Channel::new(d, k, q1)?,
        q2: Channel::new(k, l, q2)?,
        omega,
        support,
        min_mass: floor,
        coefficients,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn reconstruct(atoms: &[(u64, f64)], d: usize, alpha: f64) -> Vec<f64> {
        let e = math::exp(alpha);
        (0..d)
            .map(|j| {
                atoms
                    .iter()
                    .map(|&(b, w)| if (b >> j) & 1 == 1 { w * e } else { w })
                    .sum()
            })
            .collect()
    }

    #[test]
    fn min_mass_examples() {
        let alpha = 0.8;
        let e = math::exp(alpha);
        let rr = Channel::randomized_response(2, alpha).unwrap();
        for m in min_mass(&rr) {
            assert!((m - 1.0 / (1.0 + e)).abs() < 1e-15);
        }
        let c = Channel::from_rows(&[vec![0.5, 0.0, 0.5], vec![0.3, 0.0, 0.7]]).unwrap();
        assert_eq!(min_mass(&c), vec![0.3, 0.0, 0.5]);
        assert_eq!(min_mass(&Channel::uniform(3, 4).unwrap()), vec![0.25; 4]);
    }

    #[test]
    fn normalized_ratio_examples() {
        let alpha = 0.6;
        let e = math::exp(alpha);
        let u = normalized_ratios(&Channel::randomized_response(2, alpha).unwrap(), alpha).unwrap();
        assert!((u[0] - e).abs() < 1e-12 && u[1] == 1.0 && u[2] == 1.0 && (u[3] - e).abs() < 1e-12);
        let u = normalized_ratios(&Channel::uniform(3, 2).unwrap(), 0.0).unwrap();
        assert!(u.iter().all(|&v| v == 1.0));
        assert!(matches!(
            normalized_ratios(&Channel::randomized_response(2, 1.0).unwrap(), 0.5),
            Err(Error::LdpViolation { .. })
        ));
    }

    #[test]
    fn vertices_decompose_to_themselves() {
        let alpha = 0.5;
        for mode in [DecompositionMode::Product, DecompositionMode::Sparse] {
            assert_eq!(
                vertex_decompose(&[1.0; 3], alpha, mode).unwrap(),
                vec![(0, 1.0)]
            );
            let e = math::exp(alpha);
            assert_eq!(
                vertex_decompose(&[e, 1.0, 1.0], alpha, mode).unwrap(),
                vec![(1, 1.0)]
            );
        }
    }

    #[test]
    fn midpoint_of_square() {
        let alpha = 0.9;
        let mid = (1.0 + math::exp(alpha)) / 2.0;
        let product = vertex_decompose(&[mid, mid], alpha, DecompositionMode::Product).unwrap();
        assert_eq!(product.len(), 4);
        for (b, (beta, w)) in product.iter().enumerate() {
            assert_eq!(*beta, b as u64);
            assert!((w - 0.25).abs() < 1e-12);
        }
        let sparse = vertex_decompose(&[mid, mid], alpha, DecompositionMode::Sparse).unwrap();
        assert_eq!(sparse.len(), 2);
        assert_eq!(sparse[0].0, 0);
        assert_eq!(sparse[1].0, 3);
        assert!((sparse[0].1 - 0.5).abs() < 1e-12 && (sparse[1].1 - 0.5).abs() < 1e-12);
        for atoms in [product, sparse] {
            for v in reconstruct(&atoms, 2, alpha) {
                assert!((v - mid).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn outside_cube_rejected() {
        assert!(matches!(
            vertex_decompose(&[0.5, 1.0], 0.3, DecompositionMode::Sparse),
            Err(Error::OutsideHyperrectangle { index: 0, .. })
        ));
        assert!(vertex_decompose(&[3.0], 0.3, DecompositionMode::Product).is_err());
    }

    #[test]
    fn extremal_input_keeps_two_patterns() {
        let alpha = 0.4;
        let rr = Channel::randomized_response(2, alpha).unwrap();
        for mode in [DecompositionMode::Product, DecompositionMode::Sparse] {
            let f = factorize(&rr, alpha, mode).unwrap();
            assert_eq!(f.support, vec![1, 2]);
            // q2 is a relabeling: a permutation matrix.
            assert_eq!(f.q2.kernel(), &[1.0, 0.0, 0.0, 1.0]);
            assert!(f.reconstruction_error(&rr).unwrap() < 1e-15);
        }
    }

    #[test]
    fn zero_budget_channel() {
        let row = vec![0.2, 0.3, 0.5];
        let c = Channel::from_rows(&[row.clone(), row.clone()]).unwrap();
        let f = factorize(&c, 0.0, DecompositionMode::Sparse).unwrap();
        assert_eq!(f.support, vec![0]);
        assert!((f.omega[&0] - 1.0).abs() < 1e-15);
        for (a, b) in f.q2.row(0).iter().zip(&row) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn removable_column_is_rejected() {
        let c = Channel::from_rows(&[vec![0.0, 1.0], vec![0.5, 0.5]]).unwrap();
        assert!(matches!(
            factorize(&c, 5.0, DecompositionMode::Sparse),
            Err(Error::RemovableOutput { z: 0, .. })
        ));
    }

    #[test]
    fn identity_on_coefficients() {
        // ω_β q2_β(z) = q̲(z) c_{z,β}
        let c = Channel::from_rows(&[
            vec![0.2, 0.3, 0.5],
            vec![0.25, 0.35, 0.4],
            vec![0.3, 0.2, 0.5],
        ])
        .unwrap();
        let f = factorize(&c, 0.7, DecompositionMode::Product).unwrap();
        for (row, beta) in f.support.iter().enumerate() {
            for z in 0..3 {
                let lhs = f.omega[beta] * f.q2.get(row, z);
                let rhs = f.min_mass[z] * f.coefficients.get(&(z, *beta)).copied().unwrap_or(0.0);
                assert!((lhs - rhs).abs() < 1e-15);
            }
        }
    }
}
