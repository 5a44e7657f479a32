//! Difference arithmetic for finite-difference checks.
//!
//! A [`Delta`] carries a base value together with the change that a
//! perturbation of the inputs causes in it. Every operation propagates the
//! change through an identity that is accurate relative to the change itself
//! (`exp(a + δ) − exp(a) = exp(a)·expm1(δ)` and so on), so `f(θ + h) − f(θ)`
//! comes out with full relative precision even when it is twelve orders of
//! magnitude below `f(θ)`. Subtracting two separately rounded evaluations
//! would lose almost all of it.
//!
//! Branches are decided on the base value. When a comparison would come out
//! differently at the perturbed point (a ReLU or max-pool winner flips), a
//! thread-local flag is raised; see [`take_branch_flip`].

use std::cell::Cell;
use std::cmp::Ordering;
use std::fmt;
use std::iter::Sum;
use std::num::FpCategory;
use std::ops::{Add, AddAssign, Div, DivAssign, Mul, MulAssign, Neg, Rem, Sub, SubAssign};

use num_traits::{Float, FromPrimitive, Num, NumCast, One, ToPrimitive, Zero};

use crate::tensor::Scalar;

thread_local! {
    static BRANCH_FLIP: Cell<bool> = const { Cell::new(false) };
}

fn flag_flip() {
    BRANCH_FLIP.with(|f| f.set(true));
}

/// Returns whether any comparison flipped since the last call, and clears the flag.
pub fn take_branch_flip() -> bool {
    BRANCH_FLIP.with(|f| f.replace(false))
}

/// `base` and `delta = value_at_perturbed_point − base`.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Delta {
    pub base: f64,
    pub delta: f64,
}

impl Delta {
    pub const fn new(base: f64, delta: f64) -> Self {
        Self { base, delta }
    }

    pub const fn constant(base: f64) -> Self {
        Self { base, delta: 0.0 }
    }

    pub fn perturbed(self) -> f64 {
        self.base + self.delta
    }

    /// Applies `f` at both points. Only as accurate as plain subtraction;
    /// used for operations the networks never differentiate through.
    fn direct(self, f: impl Fn(f64) -> f64) -> Self {
        let b = f(self.base);
        Self::new(b, f(self.perturbed()) - b)
    }

    fn pick(self, other: Self, take_self: bool, take_self_perturbed: bool) -> Self {
        if take_self != take_self_perturbed {
            flag_flip();
        }
        if take_self {
            self
        } else {
            other
        }
    }
}

impl fmt::Display for Delta {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{:+e}", self.base, self.delta)
    }
}

impl PartialOrd for Delta {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        let at_base = self.base.partial_cmp(&other.base);
        if at_base != self.perturbed().partial_cmp(&other.perturbed()) {
            flag_flip();
        }
        at_base
    }
}

impl Neg for Delta {
    type Output = Self;
    fn neg(self) -> Self {
        Self::new(-self.base, -self.delta)
    }
}

impl Add for Delta {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Self::new(self.base + o.base, self.delta + o.delta)
    }
}

impl Sub for Delta {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        Self::new(self.base - o.base, self.delta - o.delta)
    }
}

impl Mul for Delta {
    type Output = Self;
    fn mul(self, o: Self) -> Self {
        Self::new(self.base * o.base, self.base * o.delta + self.delta * o.perturbed())
    }
}

impl Div for Delta {
    type Output = Self;
    fn div(self, o: Self) -> Self {
        let delta = (self.delta * o.base - self.base * o.delta) / (o.base * o.perturbed());
        Self::new(self.base / o.base, delta)
    }
}

impl Rem for Delta {
    type Output = Self;
    fn rem(self, o: Self) -> Self {
        let b = self.base % o.base;
        Self::new(b, self.perturbed() % o.perturbed() - b)
    }
}

macro_rules! assign_op {
    ($tr:ident, $m:ident, $op:tt) => {
        impl $tr for Delta {
            fn $m(&mut self, o: Self) {
                *self = *self $op o;
            }
        }
    };
}
assign_op!(AddAssign, add_assign, +);
assign_op!(SubAssign, sub_assign, -);
assign_op!(MulAssign, mul_assign, *);
assign_op!(DivAssign, div_assign, /);

impl Sum for Delta {
    fn sum<I: Iterator<Item = Self>>(iter: I) -> Self {
        iter.fold(Self::zero(), |a, b| a + b)
    }
}

impl Zero for Delta {
    fn zero() -> Self {
        Self::constant(0.0)
    }
    fn is_zero(&self) -> bool {
        self.base == 0.0 && self.delta == 0.0
    }
}

impl One for Delta {
    fn one() -> Self {
        Self::constant(1.0)
    }
}

impl Num for Delta {
    type FromStrRadixErr = num_traits::ParseFloatError;
    fn from_str_radix(s: &str, radix: u32) -> Result<Self, Self::FromStrRadixErr> {
        f64::from_str_radix(s, radix).map(Self::constant)
    }
}

impl ToPrimitive for Delta {
    fn to_i64(&self) -> Option<i64> {
        self.base.to_i64()
    }
    fn to_u64(&self) -> Option<u64> {
        self.base.to_u64()
    }
    fn to_f64(&self) -> Option<f64> {
        Some(self.base)
    }
}

impl FromPrimitive for Delta {
    fn from_i64(n: i64) -> Option<Self> {
        Some(Self::constant(n as f64))
    }
    fn from_u64(n: u64) -> Option<Self> {
        Some(Self::constant(n as f64))
    }
    fn from_f64(n: f64) -> Option<Self> {
        Some(Self::constant(n))
    }
}

impl NumCast for Delta {
    fn from<T: ToPrimitive>(n: T) -> Option<Self> {
        n.to_f64().map(Self::constant)
    }
}

impl Float for Delta {
    fn nan() -> Self {
        Self::constant(f64::NAN)
    }
    fn infinity() -> Self {
        Self::constant(f64::INFINITY)
    }
    fn neg_infinity() -> Self {
        Self::constant(f64::NEG_INFINITY)
    }
    fn neg_zero() -> Self {
        Self::constant(-0.0)
    }
    fn min_value() -> Self {
        Self::constant(f64::MIN)
    }
    fn min_positive_value() -> Self {
        Self::constant(f64::MIN_POSITIVE)
    }
    fn epsilon() -> Self {
        Self::constant(f64::EPSILON)
    }
    fn max_value() -> Self {
        Self::constant(f64::MAX)
    }
    fn is_nan(self) -> bool {
        self.base.is_nan() || self.delta.is_nan()
    }
    fn is_infinite(self) -> bool {
        self.base.is_infinite() || self.delta.is_infinite()
    }
    fn is_finite(self) -> bool {
        self.base.is_finite() && self.delta.is_finite()
    }
    fn is_normal(self) -> bool {
        self.base.is_normal()
    }
    fn classify(self) -> FpCategory {
        self.base.classify()
    }
    fn floor(self) -> Self {
        self.direct(f64::floor)
    }
    fn ceil(self) -> Self {
        self.direct(f64::ceil)
    }
    fn round(self) -> Self {
        self.direct(f64::round)
    }
    fn trunc(self) -> Self {
        self.direct(f64::trunc)
    }
    fn fract(self) -> Self {
        self - self.trunc()
    }
    fn abs(self) -> Self {
        self.max(-self)
    }
    fn signum(self) -> Self {
        self.direct(f64::signum)
    }
    fn is_sign_positive(self) -> bool {
        self.base.is_sign_positive()
    }
    fn is_sign_negative(self) -> bool {
        self.base.is_sign_negative()
    }
    fn mul_add(self, a: Self, b: Self) -> Self {
        self * a + b
    }
    fn recip(self) -> Self {
        Self::one() / self
    }
    fn powi(self, n: i32) -> Self {
        let mut acc = Self::one();
        for _ in 0..n.unsigned_abs() {
            acc *= self;
        }
        if n < 0 {
            acc.recip()
        } else {
            acc
        }
    }
    fn powf(self, n: Self) -> Self {
        (self.ln() * n).exp()
    }
    fn sqrt(self) -> Self {
        let s = self.base.sqrt();
        Self::new(s, self.delta / (self.perturbed().sqrt() + s))
    }
    fn exp(self) -> Self {
        let e = self.base.exp();
        if self.delta == 0.0 {
            return Self::constant(e);
        }
        Self::new(e, e * self.delta.exp_m1())
    }
    fn exp2(self) -> Self {
        (self * Self::constant(std::f64::consts::LN_2)).exp()
    }
    fn ln(self) -> Self {
        Self::new(self.base.ln(), (self.delta / self.base).ln_1p())
    }
    fn log(self, base: Self) -> Self {
        self.ln() / base.ln()
    }
    fn log2(self) -> Self {
        self.ln() / Self::constant(std::f64::consts::LN_2)
    }
    fn log10(self) -> Self {
        self.ln() / Self::constant(std::f64::consts::LN_10)
    }
    fn max(self, o: Self) -> Self {
        self.pick(o, self.base >= o.base, self.perturbed() >= o.perturbed())
    }
    fn min(self, o: Self) -> Self {
        self.pick(o, self.base <= o.base, self.perturbed() <= o.perturbed())
    }
    #[allow(deprecated)]
    fn abs_sub(self, o: Self) -> Self {
        (self - o).max(Self::zero())
    }
    fn cbrt(self) -> Self {
        self.direct(f64::cbrt)
    }
    fn hypot(self, o: Self) -> Self {
        (self * self + o * o).sqrt()
    }
    fn sin(self) -> Self {
        self.direct(f64::sin)
    }
    fn cos(self) -> Self {
        self.direct(f64::cos)
    }
    fn tan(self) -> Self {
        self.direct(f64::tan)
    }
    fn asin(self) -> Self {
        self.direct(f64::asin)
    }
    fn acos(self) -> Self {
        self.direct(f64::acos)
    }
    fn atan(self) -> Self {
        self.direct(f64::atan)
    }
    fn atan2(self, o: Self) -> Self {
        let b = self.base.atan2(o.base);
        Self::new(b, self.perturbed().atan2(o.perturbed()) - b)
    }
    fn sin_cos(self) -> (Self, Self) {
        (self.sin(), self.cos())
    }
    fn exp_m1(self) -> Self {
        let e = self.base.exp();
        Self::new(self.base.exp_m1(), e * self.delta.exp_m1())
    }
    fn ln_1p(self) -> Self {
        (self + Self::one()).ln()
    }
    fn sinh(self) -> Self {
        self.direct(f64::sinh)
    }
    fn cosh(self) -> Self {
        self.direct(f64::cosh)
    }
    /// `tanh(a + δ) − tanh(a) = tanh(δ)·sech²(a) / (1 + tanh(a)·tanh(δ))`.
    fn tanh(self) -> Self {
        let t = self.base.tanh();
        if self.delta == 0.0 {
            return Self::constant(t);
        }
        let td = self.delta.tanh();
        let sech = 1.0 / self.base.cosh();
        Self::new(t, td * sech * sech / (1.0 + t * td))
    }
    fn asinh(self) -> Self {
        self.direct(f64::asinh)
    }
    fn acosh(self) -> Self {
        self.direct(f64::acosh)
    }
    fn atanh(self) -> Self {
        self.direct(f64::atanh)
    }
    fn integer_decode(self) -> (u64, i16, i8) {
        self.base.integer_decode()
    }
}

/// Nonzero entries of a strided `rows×cols` view as `(row, col, value)`, or
/// `None` once more than `limit` are found.
fn strided_nonzeros(p: *const f64, rows: usize, cols: usize, rs: isize, cs: isize, limit: usize) -> Option<Vec<(usize, usize, f64)>> {
    let mut out = Vec::new();
    let mut push = |i: usize, j: usize, v: f64| {
        if out.len() == limit {
            return false;
        }
        out.push((i, j, v));
        true
    };
    let (row_major, col_major) = (cs == 2 && rs == 2 * cols as isize, rs == 2 && cs == 2 * rows as isize);
    if row_major || col_major {
        // SAFETY: a contiguous view spans rows·cols interleaved pairs starting at `p`.
        let lane = unsafe { std::slice::from_raw_parts(p, 2 * rows * cols - 1) };
        for (at, &v) in lane.iter().step_by(2).enumerate() {
            if v != 0.0 {
                let (i, j) = if row_major { (at / cols, at % cols) } else { (at % rows, at / rows) };
                if !push(i, j, v) {
                    return None;
                }
            }
        }
    } else {
        for i in 0..rows {
            for j in 0..cols {
                // SAFETY: the caller's view covers rows×cols elements at these strides.
                let v = unsafe { *p.offset(i as isize * rs + j as isize * cs) };
                if v != 0.0 && !push(i, j, v) {
                    return None;
                }
            }
        }
    }
    Some(out)
}

impl Scalar for Delta {
    /// `C.base = α·A.base·B.base + β·C.base` and
    /// `C.delta = α·(A.base·B.delta + A.delta·(B.base + B.delta)) + β·C.delta`.
    /// `alpha` and `beta` must be constants. Sparse delta operands (a single
    /// perturbed weight) are applied entry by entry.
    unsafe fn gemm_raw(
        m: usize,
        k: usize,
        n: usize,
        alpha: Self,
        a: *const Self,
        rsa: isize,
        csa: isize,
        b: *const Self,
        rsb: isize,
        csb: isize,
        beta: Self,
        c: *mut Self,
        rsc: isize,
        csc: isize,
    ) {
        assert!(alpha.delta == 0.0 && beta.delta == 0.0, "gemm scale factors must be constants");
        let (al, be) = (alpha.base, beta.base);
        let (av, ad) = (a as *const f64, (a as *const f64).add(1));
        let (bv, bd) = (b as *const f64, (b as *const f64).add(1));
        let (cv, cd) = (c as *mut f64, (c as *mut f64).add(1));
        let (rsa, csa, rsb, csb, rsc, csc) = (2 * rsa, 2 * csa, 2 * rsb, 2 * csb, 2 * rsc, 2 * csc);
        let at = |p: *const f64, rs: isize, cs: isize, i: usize, j: usize| *p.offset(i as isize * rs + j as isize * cs);
        let cd_at = |i: usize, j: usize| cd.offset(i as isize * rsc + j as isize * csc);

        matrixmultiply::dgemm(m, k, n, al, av, rsa, csa, bv, rsb, csb, be, cv, rsc, csc);
        for i in 0..m {
            for j in 0..n {
                let p = cd_at(i, j);
                *p = if be == 0.0 { 0.0 } else { be * *p };
            }
        }

        let sparse_limit = (m * k).min(k * n) / 8;
        let nz_a = strided_nonzeros(ad, m, k, rsa, csa, sparse_limit);
        let nz_b = strided_nonzeros(bd, k, n, rsb, csb, sparse_limit);
        let dense = |x: *const f64, rsx: isize, csx: isize, y: *const f64, rsy: isize, csy: isize| {
            matrixmultiply::dgemm(m, k, n, al, x, rsx, csx, y, rsy, csy, 1.0, cd, rsc, csc)
        };
        match (&nz_a, &nz_b) {
            (Some(za), _) => {
                // A.delta·(B.base + B.delta), then A.base·B.delta.
                for &(i, p, v) in za {
                    for j in 0..n {
                        *cd_at(i, j) += al * v * (at(bv, rsb, csb, p, j) + at(bd, rsb, csb, p, j));
                    }
                }
                match &nz_b {
                    Some(zb) => {
                        for &(p, j, v) in zb {
                            for i in 0..m {
                                *cd_at(i, j) += al * at(av, rsa, csa, i, p) * v;
                            }
                        }
                    }
                    None => dense(av, rsa, csa, bd, rsb, csb),
                }
            }
            (None, Some(zb)) => {
                // (A.base + A.delta)·B.delta, then A.delta·B.base.
                for &(p, j, v) in zb {
                    for i in 0..m {
                        *cd_at(i, j) += al * (at(av, rsa, csa, i, p) + at(ad, rsa, csa, i, p)) * v;
                    }
                }
                dense(ad, rsa, csa, bv, rsb, csb);
            }
            (None, None) => {
                dense(av, rsa, csa, bd, rsb, csb);
                dense(ad, rsa, csa, bv, rsb, csb);
                dense(ad, rsa, csa, bd, rsb, csb);
            }
        }
    }
}
