//! Finite randomization mechanisms `q_x(z)` and their privacy certificates.

use alloc::format;
use alloc::vec::Vec;

use rand::Rng;

use crate::error::{check_alpha, Error, Result};
use crate::{math, rng, EXTREMAL_TOL, LDP_SLACK, ROW_SUM_TOL};

/// A row-stochastic `d × l` kernel: row `x` is the law of the output given input `x`.
#[derive(Debug, Clone, PartialEq)]
pub struct Channel {
    d: usize,
    l: usize,
    kernel: Vec<f64>,
}

impl Channel {
    /// Builds a channel from a row-major kernel, checking every row sums to one.
    pub fn new(d: usize, l: usize, kernel: Vec<f64>) -> Result<Self> {
        if d == 0 || l == 0 {
            return Err(Error::InvalidChannel(format!(
                "empty alphabet (d = {d}, l = {l})"
            )));
        }
        if kernel.len() != d * l {
            return Err(Error::DimensionMismatch {
                expected: d * l,
                got: kernel.len(),
            });
        }
        for x in 0..d {
            let row = &kernel[x * l..(x + 1) * l];
            if let Some(z) = row.iter().position(|v| !v.is_finite() || *v < 0.0) {
                return Err(Error::InvalidChannel(format!(
                    "entry ({x}, {z}) = {} is not a probability",
                    row[z]
                )));
            }
            let sum: f64 = row.iter().sum();
            if math::abs(sum - 1.0) > ROW_SUM_TOL {
                return Err(Error::InvalidChannel(format!("row {x} sums to {sum}")));
            }
        }
        Ok(Self { d, l, kernel })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let d = rows.len();
        let l = rows.first().map_or(0, Vec::len);
        if let Some(bad) = rows.iter().find(|r| r.len() != l) {
            return Err(Error::DimensionMismatch {
                expected: l,
                got: bad.len(),
            });
        }
        Self::new(d, l, rows.concat())
    }

    pub fn identity(d: usize) -> Result<Self> {
        let mut kernel = alloc::vec![0.0; d * d];
        for x in 0..d {
            kernel[x * d + x] = 1.0;
        }
        Self::new(d, d, kernel)
    }

    /// Every input goes to the same output uniformly at random.
    pub fn uniform(d: usize, l: usize) -> Result<Self> {
        Self::new(d, l, alloc::vec![1.0 / l as f64; d * l])
    }

    /// Every input is mapped to output `z` with certainty.
    pub fn collapse(d: usize, l: usize, z: usize) -> Result<Self> {
        if z >= l {
            return Err(Error::SymbolOutOfRange { index: z, size: l });
        }
        let mut kernel = alloc::vec![0.0; d * l];
        for x in 0..d {
            kernel[x * l + z] = 1.0;
        }
        Self::new(d, l, kernel)
    }

    /// `k`-ary randomized response: keep the input with probability
    /// `e^α / (e^α + k - 1)`, otherwise report one of the others uniformly.
    pub fn randomized_response(k: usize, alpha: f64) -> Result<Self> {
        check_alpha(alpha)?;
        let e = math::exp(alpha);
        let denom = e + (k as f64 - 1.0);
        let mut kernel = alloc::vec![1.0 / denom; k * k];
        for x in 0..k {
            kernel[x * k + x] = e / denom;
        }
        Self::new(k, k, kernel)
    }

    pub fn input_size(&self) -> usize {
        self.d
    }

    pub fn output_size(&self) -> usize {
        self.l
    }

    pub fn kernel(&self) -> &[f64] {
        &self.kernel
    }

    #[inline]
    pub fn get(&self, x: usize, z: usize) -> f64 {
        self.kernel[x * self.l + z]
    }

    pub fn row(&self, x: usize) -> &[f64] {
        &self.kernel[x * self.l..(x + 1) * self.l]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.kernel.chunks_exact(self.l)
    }

    pub fn column(&self, z: usize) -> impl Iterator<Item = f64> + '_ {
        (0..self.d).map(move |x| self.get(x, z))
    }

    /// Certifies the smallest budget this channel satisfies.
    ///
    /// Columns that are zero for every input are listed as removable and do not
    /// affect the budget. A column that is zero for some inputs but not others
    /// has an unbounded likelihood ratio: it yields `alpha_effective = ∞` with
    /// the offending triple as witness.
    pub fn verify_ldp(&self, alpha: f64) -> Result<LdpCertificate> {
        check_alpha(alpha)?;
        let mut alpha_effective: f64 = 0.0;
        let mut witness = None;
        let mut zero_columns = Vec::new();
        let mut unbounded = false;
        for z in 0..self.l {
            let (mut x_max, mut x_min) = (0, 0);
            for x in 1..self.d {
                if self.get(x, z) > self.get(x_max, z) {
                    x_max = x;
                }
                if self.get(x, z) < self.get(x_min, z) {
                    x_min = x;
                }
            }
            let (hi, lo) = (self.get(x_max, z), self.get(x_min, z));
            if hi == 0.0 {
                zero_columns.push(z);
                continue;
            }
            if unbounded {
                continue;
            }
            if lo == 0.0 {
                unbounded = true;
                alpha_effective = f64::INFINITY;
                witness = Some(Witness {
                    z,
                    x_num: x_max,
                    x_den: x_min,
                });
                continue;
            }
            let a = math::ln(hi / lo);
            if a > alpha_effective || witness.is_none() {
                alpha_effective = alpha_effective.max(a);
                witness = Some(Witness {
                    z,
                    x_num: x_max,
                    x_den: x_min,
                });
            }
        }
        Ok(LdpCertificate {
            alpha,
            alpha_effective,
            passes: alpha_effective <= alpha + LDP_SLACK,
            is_extremal: !unbounded && self.is_extremal(alpha, EXTREMAL_TOL),
            witness,
            zero_columns,
        })
    }

    /// True when every likelihood ratio between two inputs, for every output,
    /// lies within `tol` of `e^{-α}`, `1` or `e^α`.
    pub fn is_extremal(&self, alpha: f64, tol: f64) -> bool {
        let e = math::exp(alpha);
        let targets = [1.0 / e, 1.0, e];
        for z in 0..self.l {
            let all_zero = self.column(z).all(|v| v == 0.0);
            if all_zero {
                continue;
            }
            for x in 0..self.d {
                let den = self.get(x, z);
                if den == 0.0 {
                    return false;
                }
                for xp in 0..self.d {
                    let ratio = self.get(xp, z) / den;
                    if !targets.iter().any(|t| math::abs(ratio - t) <= tol) {
                        return false;
                    }
                }
            }
        }
        true
    }

    /// `self` followed by `second`: `q_x(z) = Σ_y self_x(y) second_y(z)`.
    pub fn compose(&self, second: &Channel) -> Result<Channel> {
        if self.l != second.d {
            return Err(Error::DimensionMismatch {
                expected: self.l,
                got: second.d,
            });
        }
        let mut kernel = alloc::vec![0.0; self.d * second.l];
        for x in 0..self.d {
            let out = &mut kernel[x * second.l..(x + 1) * second.l];
            for (y, &w) in self.row(x).iter().enumerate() {
                if w == 0.0 {
                    continue;
                }
                for (o, &v) in out.iter_mut().zip(second.row(y)) {
                    *o += w * v;
                }
            }
        }
        Channel::new(self.d, second.l, kernel)
    }

    /// Output law `p̃(z) = Σ_x p(x) q_x(z)`.
    pub fn push_forward(&self, p: &[f64]) -> Result<Vec<f64>> {
        check_distribution(p, self.d)?;
        let mut out = alloc::vec![0.0; self.l];
        for (x, &px) in p.iter().enumerate() {
            for (o, &v) in out.iter_mut().zip(self.row(x)) {
                *o += px * v;
            }
        }
        Ok(out)
    }

    /// Draws one output for input `x` by inversion of the row CDF.
    pub fn sample<R: Rng + ?Sized>(&self, x: usize, rng: &mut R) -> Result<usize> {
        if x >= self.d {
            return Err(Error::SymbolOutOfRange {
                index: x,
                size: self.d,
            });
        }
        let u = rng::uniform(rng);
        let row = self.row(x);
        let mut acc = 0.0;
        let mut last_positive = 0;
        for (z, &v) in row.iter().enumerate() {
            if v > 0.0 {
                acc += v;
                last_positive = z;
                if u < acc {
                    return Ok(z);
                }
            }
        }
        // u landed in the rounding gap above the accumulated row sum.
        Ok(last_positive)
    }
}

pub(crate) fn check_distribution(p: &[f64], d: usize) -> Result<()> {
    if p.len() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            got: p.len(),
        });
    }
    if let Some(x) = p.iter().position(|v| !v.is_finite() || *v < 0.0) {
        return Err(Error::InvalidDistribution(format!("p[{x}] = {}", p[x])));
    }
    let sum: f64 = p.iter().sum();
    if math::abs(sum - 1.0) > ROW_SUM_TOL {
        return Err(Error::InvalidDistribution(format!("sums to {sum}")));
    }
    Ok(())
}

/// Output `z` and inputs attaining the largest likelihood ratio `q_{x_num}(z) / q_{x_den}(z)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Witness {
    pub z: usize,
    pub x_num: usize,
    pub x_den: usize,
}

/// Result of [`Channel::verify_ldp`].
#[derive(Debug, Clone, PartialEq)]
pub struct LdpCertificate {
    /// Budget the channel was checked against.
    pub alpha: f64,
    /// `max_z log(max_x q_x(z) / min_x q_x(z))` over columns with positive mass.
    pub alpha_effective: f64,
    pub passes: bool,
    pub is_extremal: bool,
    pub witness: Option<Witness>,
    /// Columns that are zero for every input; they can be dropped from the output alphabet.
    pub zero_columns: Vec<usize>,
}

impl LdpCertificate {
    /// Turns an unbounded ratio into [`Error::RemovableOutput`].
    pub fn check_column_nullity(&self) -> Result<()> {
        match self.witness {
            Some(w) if self.alpha_effective.is_infinite() => Err(Error::RemovableOutput {
                z: w.z,
                x_zero: w.x_den,
                x_positive: w.x_num,
            }),
            _ => Ok(()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use rand::SeedableRng;

    fn rr(alpha: f64) -> Channel {
        let e = math::exp(alpha);
        Channel::from_rows(&[
            vec![e / (1.0 + e), 1.0 / (1.0 + e)],
            vec![1.0 / (1.0 + e), e / (1.0 + e)],
        ])
        .unwrap()
    }

    #[test]
    fn randomized_response_budget_is_alpha() {
        let cert = rr(0.7).verify_ldp(0.7).unwrap();
        assert!((cert.alpha_effective - 0.7).abs() < 1e-12);
        assert!(cert.passes);
        assert!(cert.is_extremal);
        assert!(!rr(0.7).verify_ldp(0.5).unwrap().passes);
        assert_eq!(rr(0.7), Channel::randomized_response(2, 0.7).unwrap());
    }

    #[test]
    fn uniform_kernel_is_perfectly_private() {
        let cert = Channel::uniform(3, 4).unwrap().verify_ldp(0.0).unwrap();
        assert_eq!(cert.alpha_effective, 0.0);
        assert!(cert.passes && cert.is_extremal);
    }

    #[test]
    fn partial_zero_column_is_unbounded() {
        let c = Channel::from_rows(&[vec![0.0, 1.0], vec![0.5, 0.5]]).unwrap();
        let cert = c.verify_ldp(1.0).unwrap();
        assert!(cert.alpha_effective.is_infinite());
        assert!(!cert.passes);
        assert_eq!(
            cert.check_column_nullity(),
            Err(Error::RemovableOutput {
                z: 0,
                x_zero: 0,
                x_positive: 1
            })
        );
    }

    #[test]
    fn all_zero_column_is_reported_not_fatal() {
        let c = Channel::from_rows(&[vec![0.5, 0.0, 0.5], vec![0.25, 0.0, 0.75]]).unwrap();
        let cert = c.verify_ldp(2.0).unwrap();
        assert_eq!(cert.zero_columns, vec![1]);
        assert!((cert.alpha_effective - math::ln(2.0)).abs() < 1e-12);
        assert!(cert.check_column_nullity().is_ok());
    }

    #[test]
    fn extremality() {
        assert!(rr(1.1).is_extremal(1.1, 1e-10));
        let half = math::exp(0.5);
        let c = Channel::from_rows(&[
            vec![half / (1.0 + half), 1.0 / (1.0 + half)],
            vec![0.5, 0.5],
        ])
        .unwrap();
        assert!(!c.is_extremal(1.0, 1e-8));
        assert!(Channel::uniform(4, 3).unwrap().is_extremal(0.0, 1e-12));
    }

    #[test]
    fn composition() {
        let c = rr(0.3);
        assert_eq!(c.compose(&Channel::identity(2).unwrap()).unwrap(), c);
        let collapsed = c.compose(&Channel::collapse(2, 3, 1).unwrap()).unwrap();
        assert_eq!(collapsed.kernel(), &[0.0, 1.0, 0.0, 0.0, 1.0, 0.0]);
        assert!(matches!(
            c.compose(&Channel::identity(3).unwrap()),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn push_forward_examples() {
        let out = rr(0.9).push_forward(&[0.5, 0.5]).unwrap();
        assert!((out[0] - 0.5).abs() < 1e-15 && (out[1] - 0.5).abs() < 1e-15);
        let c = rr(0.9);
        assert_eq!(c.push_forward(&[0.0, 1.0]).unwrap(), c.row(1));
        assert!(c.push_forward(&[0.5, 0.6]).is_err());
        assert!(c.push_forward(&[1.0]).is_err());
    }

    #[test]
    fn invalid_kernels_are_rejected() {
        assert!(Channel::from_rows(&[vec![0.5, 0.4]]).is_err());
        assert!(Channel::from_rows(&[vec![1.5, -0.5]]).is_err());
        assert!(Channel::new(2, 2, vec![1.0, 0.0, 1.0]).is_err());
    }

    #[test]
    fn sampling() {
        let degenerate = Channel::collapse(2, 4, 0).unwrap();
        let mut r = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        for _ in 0..100 {
            assert_eq!(degenerate.sample(1, &mut r).unwrap(), 0);
        }
        assert!(degenerate.sample(2, &mut r).is_err());

        let c = rr(0.5);
        let draw = |seed| {
            let mut r = crate::rng::stream(seed, 0);
            (0..64)
                .map(|_| c.sample(0, &mut r).unwrap())
                .collect::<Vec<_>>()
        };
        assert_eq!(draw(11), draw(11));
    }
}
