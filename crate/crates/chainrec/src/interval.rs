//! Outward-rounded interval arithmetic on axis-aligned rectangles of the plane.
//!
//! A rectangle `[re_lo, re_hi] x [im_lo, im_hi]` stands for a set of complex
//! numbers. Every arithmetic operation widens its result by one ulp on each
//! side, so a computed rectangle always contains the exact image of its
//! inputs. Overflowing or indeterminate bounds saturate to infinity rather
//! than producing NaN; an infinite bound is a valid (if useless) enclosure.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum BoxError {
    #[error("interval box bounds must be finite")]
    NonFinite,
    #[error("interval box is empty: lo > hi")]
    Empty,
}

fn lo_round(x: f64) -> f64 {
    if x.is_nan() {
        f64::NEG_INFINITY
    } else {
        x.next_down()
    }
}

fn hi_round(x: f64) -> f64 {
    if x.is_nan() {
        f64::INFINITY
    } else {
        x.next_up()
    }
}

/// One real interval, used internally for the component arithmetic.
#[derive(Clone, Copy, Debug, PartialEq)]
pub(crate) struct Iv {
    pub lo: f64,
    pub hi: f64,
}

impl Iv {
    #[allow(dead_code)]
    pub fn point(x: f64) -> Iv {
        Iv { lo: x, hi: x }
    }

    pub fn add(self, o: Iv) -> Iv {
        Iv {
            lo: lo_round(self.lo + o.lo),
            hi: hi_round(self.hi + o.hi),
        }
    }

    pub fn sub(self, o: Iv) -> Iv {
        Iv {
            lo: lo_round(self.lo - o.hi),
            hi: hi_round(self.hi - o.lo),
        }
    }

    pub fn mul(self, o: Iv) -> Iv {
        let products = [
            self.lo * o.lo,
            self.lo * o.hi,
            self.hi * o.lo,
            self.hi * o.hi,
        ];
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for p in products {
            if p.is_nan() {
                // 0 * inf after an overflow; saturate to the whole line.
                return Iv {
                    lo: f64::NEG_INFINITY,
                    hi: f64::INFINITY,
                };
            }
            lo = lo.min(p);
            hi = hi.max(p);
        }
        Iv {
            lo: lo_round(lo),
            hi: hi_round(hi),
        }
    }

    /// Multiply by an exact scalar.
    pub fn scale(self, s: f64) -> Iv {
        let a = s * self.lo;
        let b = s * self.hi;
        let (lo, hi) = if s >= 0.0 { (a, b) } else { (b, a) };
        Iv {
            lo: lo_round(lo),
            hi: hi_round(hi),
        }
    }
}

/// An axis-aligned rectangle in the complex plane with `re_lo <= re_hi` and
/// `im_lo <= im_hi`. Constructed boxes have finite bounds; boxes produced by
/// arithmetic may saturate to infinite bounds after overflow.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct IntervalBox2 {
    pub re_lo: f64,
    pub re_hi: f64,
    pub im_lo: f64,
    pub im_hi: f64,
}

impl IntervalBox2 {
    pub fn new(re_lo: f64, re_hi: f64, im_lo: f64, im_hi: f64) -> Result<Self, BoxError> {
        if !(re_lo.is_finite() && re_hi.is_finite() && im_lo.is_finite() && im_hi.is_finite()) {
            return Err(BoxError::NonFinite);
        }
        if re_lo > re_hi || im_lo > im_hi {
            return Err(BoxError::Empty);
        }
        Ok(IntervalBox2 {
            re_lo,
            re_hi,
            im_lo,
            im_hi,
        })
    }

    pub fn point(p: Complex64) -> Self {
        IntervalBox2 {
            re_lo: p.re,
            re_hi: p.re,
            im_lo: p.im,
            im_hi: p.im,
        }
    }

    pub(crate) fn from_ivs(re: Iv, im: Iv) -> Self {
        IntervalBox2 {
            re_lo: re.lo,
            re_hi: re.hi,
            im_lo: im.lo,
            im_hi: im.hi,
        }
    }

    pub(crate) fn re(&self) -> Iv {
        Iv {
            lo: self.re_lo,
            hi: self.re_hi,
        }
    }

    pub(crate) fn im(&self) -> Iv {
        Iv {
            lo: self.im_lo,
            hi: self.im_hi,
        }
    }

    pub fn contains(&self, p: Complex64) -> bool {
        self.re_lo <= p.re && p.re <= self.re_hi && self.im_lo <= p.im && p.im <= self.im_hi
    }

    pub fn contains_box(&self, o: &IntervalBox2) -> bool {
        self.re_lo <= o.re_lo && o.re_hi <= self.re_hi && self.im_lo <= o.im_lo && o.im_hi <= self.im_hi
    }

    pub fn intersects(&self, o: &IntervalBox2) -> bool {
        self.re_lo <= o.re_hi && o.re_lo <= self.re_hi && self.im_lo <= o.im_hi && o.im_lo <= self.im_hi
    }

    pub fn center(&self) -> Complex64 {
        Complex64::new(
            0.5 * (self.re_lo + self.re_hi),
            0.5 * (self.im_lo + self.im_hi),
        )
    }

    pub fn width_re(&self) -> f64 {
        self.re_hi - self.re_lo
    }

    pub fn width_im(&self) -> f64 {
        self.im_hi - self.im_lo
    }

    /// Euclidean distance from a point to this rectangle (0 inside).
    pub fn dist_to_point(&self, re: f64, im: f64) -> f64 {
        let dx = (self.re_lo - re).max(re - self.re_hi).max(0.0);
        let dy = (self.im_lo - im).max(im - self.im_hi).max(0.0);
        (dx * dx + dy * dy).sqrt()
    }

    /// Squared Euclidean gap between two rectangles (0 when they touch).
    pub fn gap_sq(&self, o: &IntervalBox2) -> f64 {
        let dx = (self.re_lo - o.re_hi).max(o.re_lo - self.re_hi).max(0.0);
        let dy = (self.im_lo - o.im_hi).max(o.im_lo - self.im_hi).max(0.0);
        dx * dx + dy * dy
    }

    /// Complex addition of boxes.
    pub fn add(&self, o: &IntervalBox2) -> IntervalBox2 {
        IntervalBox2::from_ivs(self.re().add(o.re()), self.im().add(o.im()))
    }

    /// Complex subtraction of boxes.
    pub fn sub(&self, o: &IntervalBox2) -> IntervalBox2 {
        IntervalBox2::from_ivs(self.re().sub(o.re()), self.im().sub(o.im()))
    }

    /// Complex multiplication of boxes:
    /// re = a.re*b.re - a.im*b.im, im = a.re*b.im + a.im*b.re.
    pub fn mul(&self, o: &IntervalBox2) -> IntervalBox2 {
        let re = self.re().mul(o.re()).sub(self.im().mul(o.im()));
        let im = self.re().mul(o.im()).add(self.im().mul(o.re()));
        IntervalBox2::from_ivs(re, im)
    }

    /// Multiplication by an exact real scalar.
    pub fn scale(&self, s: f64) -> IntervalBox2 {
        IntervalBox2::from_ivs(self.re().scale(s), self.im().scale(s))
    }

    /// Nonnegative integer power by square-and-multiply over box products.
    /// `k = 0` yields the exact unit box.
    pub fn pow(&self, k: u32) -> IntervalBox2 {
        if k == 0 {
            return IntervalBox2::point(Complex64::new(1.0, 0.0));
        }
        let mut acc = *self;
        let bits = 32 - k.leading_zeros();
        for shift in (0..bits - 1).rev() {
            acc = acc.mul(&acc);
            if (k >> shift) & 1 == 1 {
                acc = acc.mul(self);
            }
        }
        acc
    }
}

/// Complex integer power with the same square-and-multiply structure as
/// [`IntervalBox2::pow`], so each intermediate float value is covered by the
/// corresponding intermediate box.
pub fn pow_point(base: Complex64, k: u32) -> Complex64 {
    if k == 0 {
        return Complex64::new(1.0, 0.0);
    }
    let mut acc = base;
    let bits = 32 - k.leading_zeros();
    for shift in (0..bits - 1).rev() {
        acc *= acc;
        if (k >> shift) & 1 == 1 {
            acc *= base;
        }
    }
    acc
}
