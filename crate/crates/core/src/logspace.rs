//! Signed log-space reals.
//!
//! A value is stored as a sign in {-1, 0, +1} and the natural log of its
//! magnitude. Products add logs; sums split the terms by sign, reduce each
//! side with log-sum-exp and subtract the two magnitudes at the end.

use std::ops::{Div, Mul, Neg};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SignedLog {
    sign: i8,
    ln_abs: f64,
}

impl SignedLog {
    pub const ZERO: SignedLog = SignedLog {
        sign: 0,
        ln_abs: f64::NEG_INFINITY,
    };
    pub const ONE: SignedLog = SignedLog {
        sign: 1,
        ln_abs: 0.0,
    };

    pub fn from_f64(x: f64) -> Self {
        if x == 0.0 {
            Self::ZERO
        } else {
            SignedLog {
                sign: if x > 0.0 { 1 } else { -1 },
                ln_abs: x.abs().ln(),
            }
        }
    }

    /// Build from a log-magnitude of a non-negative quantity.
    pub fn from_ln(ln_abs: f64) -> Self {
        if ln_abs == f64::NEG_INFINITY {
            Self::ZERO
        } else {
            SignedLog { sign: 1, ln_abs }
        }
    }

    pub fn sign(self) -> i8 {
        self.sign
    }

    /// Natural log of the magnitude; `-inf` for zero.
    pub fn ln_abs(self) -> f64 {
        self.ln_abs
    }

    pub fn is_zero(self) -> bool {
        self.sign == 0
    }

    pub fn to_f64(self) -> f64 {
        match self.sign {
            0 => 0.0,
            s => f64::from(s) * self.ln_abs.exp(),
        }
    }

    /// `ln(self)` for a non-negative value, `-inf` at zero and NaN for negatives.
    pub fn ln(self) -> f64 {
        match self.sign {
            1 => self.ln_abs,
            0 => f64::NEG_INFINITY,
            _ => f64::NAN,
        }
    }

    /// Sum of signed terms.
    pub fn sum<I: IntoIterator<Item = SignedLog>>(terms: I) -> Self {
        let mut pos = LogSumExp::default();
        let mut neg = LogSumExp::default();
        for t in terms {
            match t.sign {
                1 => pos.push(t.ln_abs),
                -1 => neg.push(t.ln_abs),
                _ => {}
            }
        }
        Self::difference(pos.finish(), neg.finish())
    }

    /// `exp(a) - exp(b)` for two log-magnitudes.
    pub fn difference(a: f64, b: f64) -> Self {
        if a == b {
            return Self::ZERO;
        }
        let (hi, lo, sign) = if a > b { (a, b, 1) } else { (b, a, -1) };
        if lo == f64::NEG_INFINITY {
            return SignedLog { sign, ln_abs: hi };
        }
        SignedLog {
            sign,
            ln_abs: hi + (-(lo - hi).exp()).ln_1p(),
        }
    }
}

impl Neg for SignedLog {
    type Output = Self;

    fn neg(self) -> Self {
        SignedLog {
            sign: -self.sign,
            ln_abs: self.ln_abs,
        }
    }
}

/// Ratio; the divisor must be non-zero.
impl Div for SignedLog {
    type Output = Self;

    fn div(self, other: SignedLog) -> Self {
        debug_assert!(!other.is_zero());
        if self.is_zero() {
            return Self::ZERO;
        }
        SignedLog {
            sign: self.sign * other.sign,
            ln_abs: self.ln_abs - other.ln_abs,
        }
    }
}

impl Mul for SignedLog {
    type Output = SignedLog;

    fn mul(self, rhs: SignedLog) -> SignedLog {
        if self.is_zero() || rhs.is_zero() {
            return Self::ZERO;
        }
        SignedLog {
            sign: self.sign * rhs.sign,
            ln_abs: self.ln_abs + rhs.ln_abs,
        }
    }
}

/// Streaming log-sum-exp over log-magnitudes.
///
/// Keeps a running maximum and rescales the partial sum when it moves, so a
/// single pass suffices.
#[derive(Debug, Clone, Copy)]
pub struct LogSumExp {
    max: f64,
    scaled: f64,
}

impl Default for LogSumExp {
    fn default() -> Self {
        LogSumExp {
            max: f64::NEG_INFINITY,
            scaled: 0.0,
        }
    }
}

impl LogSumExp {
    pub fn push(&mut self, x: f64) {
        if x == f64::NEG_INFINITY {
            return;
        }
        if x <= self.max {
            self.scaled += (x - self.max).exp();
        } else {
            self.scaled = self.scaled * (self.max - x).exp() + 1.0;
            self.max = x;
        }
    }

    pub fn finish(self) -> f64 {
        if self.max == f64::NEG_INFINITY {
            f64::NEG_INFINITY
        } else {
            self.max + self.scaled.ln()
        }
    }
}

pub fn log_sum_exp<I: IntoIterator<Item = f64>>(xs: I) -> f64 {
    let mut acc = LogSumExp::default();
    for x in xs {
        acc.push(x);
    }
    acc.finish()
}
