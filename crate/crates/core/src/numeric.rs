//! Small numerical helpers shared across modules.

/// Neumaier-compensated accumulator.
///
/// Keeps a running correction term so that long sums of mixed-sign values
/// (the alternating Stein sums in particular) lose at most a few ulps.
#[derive(Clone, Copy, Debug, Default)]
pub struct CompensatedSum {
    sum: f64,
    compensation: f64,
}

impl CompensatedSum {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn add(&mut self, value: f64) {
        let t = self.sum + value;
        if self.sum.abs() >= value.abs() {
            self.compensation += (self.sum - t) + value;
        } else {
            self.compensation += (value - t) + self.sum;
        }
        self.sum = t;
    }

    #[inline]
    pub fn total(&self) -> f64 {
        self.sum + self.compensation
    }
}

impl FromIterator<f64> for CompensatedSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut acc = CompensatedSum::new();
        for v in iter {
            acc.add(v);
        }
        acc
    }
}

/// Compensated sum of an iterator of values.
pub fn sum<I: IntoIterator<Item = f64>>(values: I) -> f64 {
    values.into_iter().collect::<CompensatedSum>().total()
}

/// Compensated mean; returns 0 for an empty slice.
pub fn mean(values: &[f64]) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    sum(values.iter().copied()) / values.len() as f64
}

/// Double-double number `hi + lo` with roughly 106 bits of precision.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct DoubleDouble {
    pub hi: f64,
    pub lo: f64,
}

#[inline]
fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    (s, (a - (s - bb)) + (b - bb))
}

#[inline]
fn quick_two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    (s, b - (s - a))
}

impl DoubleDouble {
    pub const ZERO: Self = Self { hi: 0.0, lo: 0.0 };
    pub const ONE: Self = Self { hi: 1.0, lo: 0.0 };

    pub fn from_f64(x: f64) -> Self {
        Self { hi: x, lo: 0.0 }
    }

    #[inline]
    pub fn mul_f64(self, b: f64) -> Self {
        let p = self.hi * b;
        let e = self.hi.mul_add(b, -p);
        let (hi, lo) = quick_two_sum(p, e + self.lo * b);
        Self { hi, lo }
    }

    #[inline]
    pub fn div_f64(self, b: f64) -> Self {
        let q1 = self.hi / b;
        let r = self - Self::from_f64(q1).mul_f64(b);
        let q2 = r.hi / b;
        let r = r - Self::from_f64(q2).mul_f64(b);
        let q3 = r.hi / b;
        let (hi, lo) = quick_two_sum(q1, q2);
        Self { hi, lo } + Self::from_f64(q3)
    }

    pub fn to_f64(self) -> f64 {
        self.hi + self.lo
    }
}

impl std::ops::Add for DoubleDouble {
    type Output = Self;

    #[inline]
    fn add(self, other: Self) -> Self {
        let (s, e) = two_sum(self.hi, other.hi);
        let (t, f) = two_sum(self.lo, other.lo);
        let (s, e) = quick_two_sum(s, e + t);
        let (hi, lo) = quick_two_sum(s, e + f);
        Self { hi, lo }
    }
}

impl std::ops::Neg for DoubleDouble {
    type Output = Self;

    #[inline]
    fn neg(self) -> Self {
        Self {
            hi: -self.hi,
            lo: -self.lo,
        }
    }
}

impl std::ops::Sub for DoubleDouble {
    type Output = Self;

    #[inline]
    fn sub(self, other: Self) -> Self {
        self + -other
    }
}

/// Eigen-decomposition of a symmetric 2x2 matrix.
///
/// Returns eigenvalues in ascending order with matching unit eigenvectors.
pub fn sym2_eigen(m: &[[f64; 2]; 2]) -> ([f64; 2], [[f64; 2]; 2]) {
    let (a, b, d) = (m[0][0], 0.5 * (m[0][1] + m[1][0]), m[1][1]);
    let half_tr = 0.5 * (a + d);
    let half_diff = 0.5 * (a - d);
    let r = half_diff.hypot(b);
    let lo = half_tr - r;
    let hi = half_tr + r;
    if b == 0.0 {
        return if a <= d {
            ([a, d], [[1.0, 0.0], [0.0, 1.0]])
        } else {
            ([d, a], [[0.0, 1.0], [1.0, 0.0]])
        };
    }
    // Eigenvector for `hi`: (b, hi - a), normalised; `lo` is its rotation.
    let (vx, vy) = if half_diff >= 0.0 {
        (half_diff + r, b)
    } else {
        (b, r - half_diff)
    };
    let norm = vx.hypot(vy);
    let v_hi = [vx / norm, vy / norm];
    let v_lo = [-v_hi[1], v_hi[0]];
    ([lo, hi], [v_lo, v_hi])
}

/// Inverse of a 2x2 matrix, or `None` when the determinant vanishes.
pub fn inv2(m: &[[f64; 2]; 2]) -> Option<[[f64; 2]; 2]> {
    let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
    if det == 0.0 || !det.is_finite() {
        return None;
    }
    Some([[m[1][1] / det, -m[0][1] / det], [-m[1][0] / det, m[0][0] / det]])
}

/// Format a float with 17 significant digits, fixed notation where the
/// exponent is moderate and scientific otherwise. Parsing the output
/// recovers the exact bit pattern.
pub fn fmt17(x: f64) -> String {
    if !x.is_finite() {
        return format!("{x}");
    }
    if x == 0.0 {
        return if x.is_sign_negative() {
            "-0.0000000000000000".to_string()
        } else {
            "0.0000000000000000".to_string()
        };
    }
    let sci = format!("{x:.16e}");
    let exp: i32 = sci.rsplit('e').next().and_then(|e| e.parse().ok()).unwrap_or(0);
    if (-5..17).contains(&exp) {
        let decimals = (16 - exp).max(0) as usize;
        format!("{x:.decimals$}")
    } else {
        sci
    }
}

/// Normalise a sequence of log-weights into probabilities.
pub fn normalize_log_weights(log_w: &[f64]) -> Vec<f64> {
    let max = log_w.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let w: Vec<f64> = log_w.iter().map(|&l| (l - max).exp()).collect();
    let total = sum(w.iter().copied());
    w.into_iter().map(|v| v / total).collect()
}

/// Binomial probability mass function over `0..=n`, built from the ratio
/// recurrence in log space so that no factorial is ever formed.
pub fn binomial_pmf(n: u32, theta: f64) -> Vec<f64> {
    let n_us = n as usize;
    if theta <= 0.0 {
        let mut p = vec![0.0; n_us + 1];
        p[0] = 1.0;
        return p;
    }
    if theta >= 1.0 {
        let mut p = vec![0.0; n_us + 1];
        p[n_us] = 1.0;
        return p;
    }
    let log_odds = theta.ln() - (-theta).ln_1p();
    let mut log_w = Vec::with_capacity(n_us + 1);
    let mut acc = 0.0;
    log_w.push(acc);
    for k in 0..n {
        acc += ((n - k) as f64).ln() - ((k + 1) as f64).ln() + log_odds;
        log_w.push(acc);
    }
    normalize_log_weights(&log_w)
}
