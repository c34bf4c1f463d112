//! Minimal double-double arithmetic (about 32 significant digits).
//!
//! Only what the direct theta series needs: add, multiply, `exp` and
//! `cos(2 pi r)`. Both kernels reduce their argument exactly and then sum a
//! Taylor series, so the result is accurate to a few units in 1e-30.

use std::ops::{Add, Mul, Neg, Sub};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DD {
    pub hi: f64,
    pub lo: f64,
}

const LN2: DD = DD { hi: 0.693_147_180_559_945_3, lo: 2.319_046_813_846_299_6e-17 };
const TWO_PI: DD = DD { hi: 6.283_185_307_179_586, lo: 2.449_293_598_294_706_4e-16 };
pub const PI: DD = DD { hi: std::f64::consts::PI, lo: 1.224_646_799_147_353_2e-16 };

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

#[inline]
fn two_prod(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    (p, a.mul_add(b, -p))
}

impl DD {
    pub const ZERO: DD = DD { hi: 0.0, lo: 0.0 };
    pub const ONE: DD = DD { hi: 1.0, lo: 0.0 };

    pub fn new(x: f64) -> Self {
        DD { hi: x, lo: 0.0 }
    }

    /// Exact product of two doubles.
    pub fn from_prod(a: f64, b: f64) -> Self {
        let (hi, lo) = two_prod(a, b);
        DD { hi, lo }
    }

    pub fn to_f64(self) -> f64 {
        self.hi + self.lo
    }

    pub fn mul_f64(self, b: f64) -> Self {
        let (p, e) = two_prod(self.hi, b);
        let (hi, lo) = quick_two_sum(p, e + self.lo * b);
        DD { hi, lo }
    }

    pub fn div_f64(self, b: f64) -> Self {
        let q1 = self.hi / b;
        let r = self - DD::from_prod(q1, b);
        let q2 = r.hi / b;
        let (hi, lo) = quick_two_sum(q1, q2);
        DD { hi, lo }
    }

    fn ldexp(self, n: i32) -> Self {
        let s = 2f64.powi(n);
        DD { hi: self.hi * s, lo: self.lo * s }
    }

    /// Nearest integer (ties away from zero), as a double-double.
    fn round(self) -> Self {
        let hi = self.hi.round();
        if hi == self.hi {
            let lo = self.lo.round();
            let (h, l) = quick_two_sum(hi, lo);
            DD { hi: h, lo: l }
        } else if (hi - self.hi).abs() == 0.5 && self.lo != 0.0 {
            // Half-way in hi; lo decides.
            let adj = if self.lo > 0.0 { self.hi + 0.5 } else { self.hi - 0.5 };
            DD::new(adj)
        } else {
            DD::new(hi)
        }
    }

    pub fn exp(self) -> Self {
        if self.hi < -745.0 {
            return DD::ZERO;
        }
        let n = (self.hi / LN2.hi).round();
        let r = self - LN2.mul_f64(n);
        // Scale down further so the Taylor series converges fast.
        let r = r.ldexp(-8);
        let mut term = DD::ONE;
        let mut sum = DD::ONE;
        for k in 1..=20 {
            term = (term * r).div_f64(k as f64);
            sum = sum + term;
            if term.hi.abs() < 1e-34 {
                break;
            }
        }
        for _ in 0..8 {
            sum = sum * sum;
        }
        sum.ldexp(n as i32)
    }

    /// `cos(2 pi r)` with `r` reduced exactly modulo 1.
    pub fn cos_2pi(self) -> Self {
        let mut r = self - self.round();
        if r.hi < 0.0 {
            r = -r;
        }
        // r in [0, 1/2]
        let mut sign = 1.0;
        if r.hi > 0.25 {
            r = DD::new(0.5) - r;
            sign = -1.0;
        }
        // r in [0, 1/4]
        let v = if r.hi > 0.125 {
            sin_taylor(TWO_PI * (DD::new(0.25) - r))
        } else {
            cos_taylor(TWO_PI * r)
        };
        v.mul_f64(sign)
    }
}

fn cos_taylor(t: DD) -> DD {
    let t2 = t * t;
    let mut term = DD::ONE;
    let mut sum = DD::ONE;
    let mut k = 0.0;
    loop {
        k += 2.0;
        term = -(term * t2).div_f64(k * (k - 1.0));
        sum = sum + term;
        if term.hi.abs() < 1e-34 || k > 60.0 {
            return sum;
        }
    }
}

fn sin_taylor(t: DD) -> DD {
    let t2 = t * t;
    let mut term = t;
    let mut sum = t;
    let mut k = 1.0;
    loop {
        k += 2.0;
        term = -(term * t2).div_f64(k * (k - 1.0));
        sum = sum + term;
        if term.hi.abs() < 1e-34 || k > 60.0 {
            return sum;
        }
    }
}

impl Add for DD {
    type Output = DD;
    fn add(self, b: DD) -> DD {
        let (s, e) = two_sum(self.hi, b.hi);
        let (t, f) = two_sum(self.lo, b.lo);
        let (s, e) = quick_two_sum(s, e + t);
        let (hi, lo) = quick_two_sum(s, e + f);
        DD { hi, lo }
    }
}

impl Sub for DD {
    type Output = DD;
    fn sub(self, b: DD) -> DD {
        self + (-b)
    }
}

impl Neg for DD {
    type Output = DD;
    fn neg(self) -> DD {
        DD { hi: -self.hi, lo: -self.lo }
    }
}

impl Mul for DD {
    type Output = DD;
    fn mul(self, b: DD) -> DD {
        let (p, e) = two_prod(self.hi, b.hi);
        let e = e + (self.hi * b.lo + self.lo * b.hi);
        let (hi, lo) = quick_two_sum(p, e);
        DD { hi, lo }
    }
}
