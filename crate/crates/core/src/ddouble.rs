//! Double-double arithmetic (an unevaluated sum `hi + lo` of two f64 values
//! with `|lo| <= ulp(hi) / 2`), enough to evaluate `p + theta q` without
//! cancellation loss.
//!
//! Products use Dekker splitting rather than `f64::mul_add`, which falls back
//! to a slow software routine on targets without hardware FMA.

use std::ops::{Add, Neg, Sub};

const SPLITTER: f64 = 134_217_729.0; // 2^27 + 1

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct DoubleDouble {
    pub hi: f64,
    pub lo: f64,
}

#[inline]
pub fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    let err = (a - (s - bb)) + (b - bb);
    (s, err)
}

#[inline]
pub fn quick_two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    (s, b - (s - a))
}

#[inline]
pub fn split(a: f64) -> (f64, f64) {
    let t = SPLITTER * a;
    let hi = t - (t - a);
    (hi, a - hi)
}

/// Exact product `a * b = p + e` for finite inputs without overflow.
#[inline]
pub fn two_prod(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    let (ah, al) = split(a);
    let (bh, bl) = split(b);
    let e = ((ah * bh - p) + ah * bl + al * bh) + al * bl;
    (p, e)
}

impl DoubleDouble {
    pub const ZERO: DoubleDouble = DoubleDouble { hi: 0.0, lo: 0.0 };

    pub fn new(hi: f64, lo: f64) -> Self {
        let (hi, lo) = two_sum(hi, lo);
        DoubleDouble { hi, lo }
    }

    pub fn from_f64(x: f64) -> Self {
        DoubleDouble { hi: x, lo: 0.0 }
    }

    #[inline]
    pub fn to_f64(self) -> f64 {
        self.hi + self.lo
    }

    /// Product with an integer that is exactly representable as f64.
    #[inline]
    pub fn mul_int(self, q: i64) -> Self {
        let qf = q as f64;
        let (p, e) = two_prod(self.hi, qf);
        let e = e + self.lo * qf;
        let (hi, lo) = quick_two_sum(p, e);
        DoubleDouble { hi, lo }
    }

    #[inline]
    pub fn add_int(self, p: i64) -> Self {
        self + DoubleDouble::from_f64(p as f64)
    }

    pub fn abs(self) -> Self {
        if self.hi < 0.0 {
            -self
        } else {
            self
        }
    }
}

impl Add for DoubleDouble {
    type Output = DoubleDouble;
    #[inline]
    fn add(self, other: DoubleDouble) -> DoubleDouble {
        let (s, e) = two_sum(self.hi, other.hi);
        let (t, f) = two_sum(self.lo, other.lo);
        let e = e + t;
        let (s, e) = quick_two_sum(s, e);
        let e = e + f;
        let (hi, lo) = quick_two_sum(s, e);
        DoubleDouble { hi, lo }
    }
}

impl Neg for DoubleDouble {
    type Output = DoubleDouble;
    fn neg(self) -> DoubleDouble {
        DoubleDouble {
            hi: -self.hi,
            lo: -self.lo,
        }
    }
}

impl Sub for DoubleDouble {
    type Output = DoubleDouble;
    fn sub(self, other: DoubleDouble) -> DoubleDouble {
        self + (-other)
    }
}

/// Pre-split multiplier for the hot loop `theta * q` with `|q| < 2^53`.
#[derive(Clone, Copy, Debug)]
pub struct SplitMultiplier {
    value: DoubleDouble,
    hi_h: f64,
    hi_l: f64,
}

impl SplitMultiplier {
    pub fn new(value: DoubleDouble) -> Self {
        let (hi_h, hi_l) = split(value.hi);
        SplitMultiplier { value, hi_h, hi_l }
    }

    #[inline]
    pub fn mul_int(&self, q: i64) -> DoubleDouble {
        let qf = q as f64;
        let p = self.value.hi * qf;
        let (qh, ql) = split(qf);
        let e = ((self.hi_h * qh - p) + self.hi_h * ql + self.hi_l * qh) + self.hi_l * ql;
        let e = e + self.value.lo * qf;
        let (hi, lo) = quick_two_sum(p, e);
        DoubleDouble { hi, lo }
    }
}
