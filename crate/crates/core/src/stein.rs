//! Binomial Stein operator.
//!
//! For `Y ~ Bin(n, θ)` and any table `h` on `0..=n`, the operator `𝒯` maps
//! `h` to a statistic whose expectation matches `θ·E[h(Y)]` up to a bias
//! `θ·E[h(Y)] − E[𝒯h(Y)] = (−1)^a θ^{a+1} (1−θ)^{n−a} Δh`. With the split point `a = ⌊n/2⌋`
//! every coefficient in the alternating sums is at most one, which keeps the
//! sums well conditioned.

use thiserror::Error;

use crate::numeric::{binomial_pmf, CompensatedSum, DoubleDouble};

#[derive(Debug, Error, PartialEq)]
pub enum SteinError {
    #[error("outcome {y} outside 0..={n}")]
    OutcomeOutOfRange { y: u32, n: u32 },
    #[error("coefficient index {j} outside 0..={max}")]
    IndexOutOfRange { j: u32, max: u32 },
    #[error("outcome table must have n+1 = {expected} entries, got {got}")]
    TableLength { expected: usize, got: usize },
    #[error("outcome table entry {index} is not finite")]
    NonFinite { index: usize },
    #[error("theta = {0} outside [0, 1]")]
    Theta(f64),
    #[error("exact bias {summed} disagrees with closed form {closed}")]
    BiasMismatch { summed: f64, closed: f64 },
}

/// A real function on the binomial support `0..=n`.
#[derive(Clone, Debug, PartialEq)]
pub struct OutcomeTable {
    n: u32,
    values: Vec<f64>,
}

impl OutcomeTable {
    pub fn new(n: u32, values: Vec<f64>) -> Result<Self, SteinError> {
        if values.len() != n as usize + 1 {
            return Err(SteinError::TableLength {
                expected: n as usize + 1,
                got: values.len(),
            });
        }
        if let Some(index) = values.iter().position(|v| !v.is_finite()) {
            return Err(SteinError::NonFinite { index });
        }
        Ok(Self { n, values })
    }

    /// Tabulates `f(0), …, f(n)`.
    pub fn from_fn(n: u32, f: impl Fn(u32) -> f64) -> Result<Self, SteinError> {
        Self::new(n, (0..=n).map(f).collect())
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    #[inline]
    fn at(&self, y: u32) -> f64 {
        self.values[y as usize]
    }

    fn check(&self, y: u32) -> Result<(), SteinError> {
        if y > self.n {
            Err(SteinError::OutcomeOutOfRange { y, n: self.n })
        } else {
            Ok(())
        }
    }
}

/// `Π_{k=1}^{j} (n−y−k+1)/(y+k)`, i.e. `C(n−y, j) / C(y+j, j)`.
pub fn alt_coefficient(n: u32, y: u32, j: u32) -> Result<f64, SteinError> {
    if y > n {
        return Err(SteinError::OutcomeOutOfRange { y, n });
    }
    if j > n - y {
        return Err(SteinError::IndexOutOfRange { j, max: n - y });
    }
    let mut c = 1.0;
    for k in 1..=j {
        c *= (n - y - k + 1) as f64 / (y + k) as f64;
    }
    Ok(c)
}

/// `Σ_{j=0}^{n−y} h(j) (−1)^j alt_coefficient(n, y, j)` with the
/// coefficient carried as a running product.
///
/// When `2y ≥ n` every coefficient is at most one and plain compensated
/// summation suffices. Otherwise coefficients grow up to `C(n−y, ⌊(n−y)/2⌋)`
/// and the recurrence and sum are carried in double-double arithmetic so the
/// cancellation does not swamp the result.
pub fn alternating_sum(n: u32, y: u32, h: impl Fn(u32) -> f64) -> f64 {
    assert!(y <= n, "outcome {y} outside 0..={n}");
    if 2 * y >= n {
        let mut acc = CompensatedSum::new();
        let mut c = 1.0;
        for j in 0..=(n - y) {
            if j > 0 {
                c *= (n - y - j + 1) as f64 / (y + j) as f64;
            }
            let term = c * h(j);
            acc.add(if j % 2 == 0 { term } else { -term });
        }
        return acc.total();
    }
    let mut acc = DoubleDouble::ZERO;
    let mut c = DoubleDouble::ONE;
    for j in 0..=(n - y) {
        if j > 0 {
            c = c.mul_f64((n - y - j + 1) as f64).div_f64((y + j) as f64);
        }
        let term = c.mul_f64(h(j));
        acc = if j % 2 == 0 { acc + term } else { acc - term };
    }
    acc.to_f64()
}

fn t1_unchecked(h: &OutcomeTable, y: u32) -> f64 {
    if y == 0 {
        return 0.0;
    }
    alternating_sum(h.n, y, |j| h.at(y + j))
}

fn t2_unchecked(h: &OutcomeTable, y: u32) -> f64 {
    if y == h.n {
        return h.at(y);
    }
    h.at(y) - alternating_sum(h.n, h.n - y, |j| h.at(y - j))
}

/// Forward form of the operator, exact for outcomes above the split.
pub fn t1(h: &OutcomeTable, y: u32) -> Result<f64, SteinError> {
    h.check(y)?;
    Ok(t1_unchecked(h, y))
}

/// Backward form of the operator, exact for outcomes at or below the split.
pub fn t2(h: &OutcomeTable, y: u32) -> Result<f64, SteinError> {
    h.check(y)?;
    Ok(t2_unchecked(h, y))
}

/// `n`-th finite difference `Σ_j (−1)^j C(n, j) h(j)`.
///
/// Binomial coefficients are formed by running product; beyond `n ≈ 1000`
/// they overflow and the result is not meaningful.
pub fn delta_h(h: &OutcomeTable) -> f64 {
    let n = h.n;
    let mut acc = CompensatedSum::new();
    let mut c = 1.0;
    for j in 0..=n {
        if j > 0 {
            c = c * (n - j + 1) as f64 / j as f64;
        }
        let term = c * h.at(j);
        acc.add(if j % 2 == 0 { term } else { -term });
    }
    acc.total()
}

/// Split point `a = ⌊n/2⌋`.
#[inline]
pub fn split_point(n: u32) -> u32 {
    n / 2
}

/// The operator `𝒯h(y; n)` with split `a = ⌊n/2⌋`.
pub fn t_op(h: &OutcomeTable, y: u32) -> Result<f64, SteinError> {
    t_op_at(h, y, split_point(h.n))
}

/// The operator with an arbitrary split point `a ∈ 0..=n`.
pub(crate) fn t_op_at(h: &OutcomeTable, y: u32, a: u32) -> Result<f64, SteinError> {
    h.check(y)?;
    Ok(if y > a { t1_unchecked(h, y) } else { t2_unchecked(h, y) })
}

/// `θ·E[h(Y)] − E[𝒯h(Y)]` by exact summation over the binomial law.
///
/// The summed value is checked against the closed form
/// `(−1)^a θ^{a+1} (1−θ)^{n−a} Δh`; a disagreement beyond `1e−12`
/// (scaled by the table's magnitude) indicates a defect in `t1` or `t2`.
pub fn exact_bias(h: &OutcomeTable, theta: f64) -> Result<f64, SteinError> {
    exact_bias_at(h, theta, split_point(h.n))
}

pub(crate) fn exact_bias_at(h: &OutcomeTable, theta: f64, a: u32) -> Result<f64, SteinError> {
    if !(0.0..=1.0).contains(&theta) {
        return Err(SteinError::Theta(theta));
    }
    let pmf = binomial_pmf(h.n, theta);
    let mut acc = CompensatedSum::new();
    for (y, &p) in pmf.iter().enumerate() {
        if p == 0.0 {
            continue;
        }
        let y = y as u32;
        acc.add(p * (theta * h.at(y) - t_op_at(h, y, a)?));
    }
    let summed = acc.total();
    // a = n and a = n − 1 define the same operator; the closed form is
    // stated for the latter.
    let a = a.min(h.n.saturating_sub(1));
    let sign = if a.is_multiple_of(2) { 1.0 } else { -1.0 };
    let closed = sign * theta.powi(a as i32 + 1) * (1.0 - theta).powi((h.n - a) as i32) * delta_h(h);
    let scale = h.values.iter().fold(1.0f64, |m, v| m.max(v.abs()));
    if (summed - closed).abs() > 1e-12 * scale {
        return Err(SteinError::BiasMismatch { summed, closed });
    }
    Ok(summed)
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_bigint::BigInt;
    use num_rational::BigRational;
    use proptest::prelude::*;

    fn table(n: u32, f: impl Fn(u32) -> f64) -> OutcomeTable {
        OutcomeTable::from_fn(n, f).unwrap()
    }

    fn exact_coefficient(n: u32, y: u32, j: u32) -> BigRational {
        let mut c = BigRational::from_integer(BigInt::from(1));
        for k in 1..=j {
            c *= BigRational::new(BigInt::from(n - y - k + 1), BigInt::from(y + k));
        }
        c
    }

    fn to_f64(r: &BigRational) -> f64 {
        // Scale to keep both parts in range before dividing.
        let num = r.numer().to_string().parse::<f64>().unwrap();
        let den = r.denom().to_string().parse::<f64>().unwrap();
        num / den
    }

    #[test]
    fn t1_examples() {
        assert_eq!(t1(&table(4, |_| 1.0), 3).unwrap(), 0.75);
        assert_eq!(t1(&table(4, |k| k as f64 * 7.0 - 1.0), 0).unwrap(), 0.0);
        // h(k) = k, n = 4, y = 3: terms 3·1 and −4·(1/4).
        assert!((t1(&table(4, |k| k as f64), 3).unwrap() - 2.0).abs() < 1e-15);
        assert_eq!(
            t1(&table(4, |_| 1.0), 5),
            Err(SteinError::OutcomeOutOfRange { y: 5, n: 4 })
        );
    }

    #[test]
    fn t2_examples() {
        let h = table(5, |k| (k as f64).sin());
        assert_eq!(t2(&h, 5).unwrap(), h.values()[5]);
        assert!((t2(&table(4, |_| 1.0), 1).unwrap() - 0.25).abs() < 1e-15);
        let c = -2.7;
        assert!((t2(&table(3, |_| c), 1).unwrap() - c / 3.0).abs() < 1e-15);
    }

    #[test]
    fn delta_h_examples() {
        assert_eq!(delta_h(&table(3, |k| k as f64)), 0.0);
        assert_eq!(delta_h(&table(2, |_| 1.0)), 0.0);
        assert_eq!(delta_h(&table(2, |k| if k == 0 { 1.0 } else { 0.0 })), 1.0);
    }

    #[test]
    fn t_op_branches() {
        assert_eq!(t_op(&table(4, |_| 1.0), 3).unwrap(), 0.75);
        assert!((t_op(&table(4, |_| 1.0), 2).unwrap() - 0.5).abs() < 1e-15);
        let h = table(2, |k| [0.3, -1.2, 4.0][k as usize]);
        assert_eq!(t_op(&h, 0).unwrap(), t2(&h, 0).unwrap());
    }

    #[test]
    fn alt_coefficient_examples() {
        assert_eq!(alt_coefficient(9, 4, 0).unwrap(), 1.0);
        let c = alt_coefficient(4, 1, 3).unwrap();
        assert_eq!(c, to_f64(&exact_coefficient(4, 1, 3)));
        assert_eq!(c, 0.25);
        let big = alt_coefficient(60, 10, 50).unwrap();
        let exact = to_f64(&exact_coefficient(60, 10, 50));
        assert!(big.is_finite());
        assert!(((big - exact) / exact).abs() < 1e-13);
        assert!(alt_coefficient(4, 1, 4).is_err());
    }

    #[test]
    fn combinatorial_identities() {
        for n in 2..=60u32 {
            for y in 0..=n {
                let a = alternating_sum(n, y, |_| 1.0);
                assert!((a - y as f64 / n as f64).abs() < 1e-12, "A n={n} y={y}");
                let b = alternating_sum(n, y, |j| j as f64) / n as f64;
                let expect = -(y as f64) * (n - y) as f64 / ((n * n) as f64 * (n - 1) as f64);
                assert!((b - expect).abs() < 1e-12, "B n={n} y={y}");
            }
        }
    }

    #[test]
    fn polynomials_below_degree_n_are_unbiased() {
        let thetas: Vec<f64> = std::iter::once(0.01)
            .chain((1..20).map(|k| k as f64 * 0.05))
            .chain(std::iter::once(0.99))
            .collect();
        for n in 2..=12u32 {
            for deg in 0..n {
                let h = table(n, |k| (k as f64 / n as f64).powi(deg as i32));
                for &theta in &thetas {
                    let bias = exact_bias(&h, theta).unwrap();
                    assert!(bias.abs() < 1e-12, "n={n} deg={deg} theta={theta}: {bias}");
                }
            }
        }
    }

    #[test]
    fn bias_vanishes_for_affine_and_at_zero() {
        let h = table(7, |k| 0.3 - 1.7 * k as f64);
        assert!(exact_bias(&h, 0.42).unwrap().abs() < 1e-12);
        let wild = table(5, |k| [3.0, -1.0, 0.5, 8.0, -2.0, 1.0][k as usize]);
        assert_eq!(exact_bias(&wild, 0.0).unwrap(), 0.0);
        assert!(exact_bias(&wild, 1.5).is_err());
    }

    #[test]
    fn general_split_matches_closed_form() {
        let h = table(6, |k| ((k * k) as f64).cos());
        for a in 0..=6 {
            for &theta in &[0.1, 0.5, 0.8] {
                exact_bias_at(&h, theta, a).unwrap();
            }
        }
    }

    #[test]
    fn table_validation() {
        assert!(OutcomeTable::new(3, vec![0.0; 3]).is_err());
        assert!(OutcomeTable::new(2, vec![0.0, f64::NAN, 1.0]).is_err());
    }

    proptest! {
        #[test]
        fn bias_bound_holds(
            n in 2u32..=10,
            theta in 0.0f64..=1.0,
            raw in prop::collection::vec(-1.0f64..1.0, 11),
        ) {
            let h = OutcomeTable::new(n, raw[..=n as usize].to_vec()).unwrap();
            let bias = exact_bias(&h, theta).unwrap();
            let bound = 2f64.powi(-(n as i32)) * delta_h(&h).abs();
            prop_assert!(bias.abs() <= bound + 1e-12);
        }

        #[test]
        fn t_op_is_linear(
            n in 2u32..=15,
            alpha in -3.0f64..3.0,
            beta in -3.0f64..3.0,
            raw1 in prop::collection::vec(-1.0f64..1.0, 16),
            raw2 in prop::collection::vec(-1.0f64..1.0, 16),
        ) {
            let len = n as usize + 1;
            let h1 = OutcomeTable::new(n, raw1[..len].to_vec()).unwrap();
            let h2 = OutcomeTable::new(n, raw2[..len].to_vec()).unwrap();
            let mix = OutcomeTable::new(
                n,
                (0..len).map(|k| alpha * raw1[k] + beta * raw2[k]).collect(),
            ).unwrap();
            for y in 0..=n {
                let lhs = t_op(&mix, y).unwrap();
                let rhs = alpha * t_op(&h1, y).unwrap() + beta * t_op(&h2, y).unwrap();
                prop_assert!((lhs - rhs).abs() <= 1e-12 * (1.0 + lhs.abs()));
            }
        }
    }
}
