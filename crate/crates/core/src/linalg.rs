//! Dense LU solve with partial pivoting, generic over the working precision.
//!
//! The boundary-rate system is small enough (b <= a few thousand) that a
//! plain row-major factorization is adequate. The trailing update is split
//! across rows with rayon once the matrix is large.

use std::fmt::Debug;
use std::ops::{Add, Div, Mul, Neg, Sub};

use rayon::prelude::*;

/// Arithmetic needed by [`solve_dense`].
pub trait Scalar:
    Copy
    + Send
    + Sync
    + Debug
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
{
    fn zero() -> Self;
    fn from_f64(v: f64) -> Self;
    fn to_f64(self) -> f64;
    /// Magnitude used for pivot selection.
    fn magnitude(self) -> f64 {
        self.to_f64().abs()
    }
}

impl Scalar for f64 {
    fn zero() -> Self {
        0.0
    }
    fn from_f64(v: f64) -> Self {
        v
    }
    fn to_f64(self) -> f64 {
        self
    }
}

/// Unevaluated sum `hi + lo` with `|lo| <= ulp(hi)/2`: about 106 significand
/// bits using only f64 hardware arithmetic.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct DoubleDouble {
    hi: f64,
    lo: f64,
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

#[inline]
fn two_prod(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    (p, a.mul_add(b, -p))
}

impl DoubleDouble {
    pub const fn new(hi: f64) -> Self {
        Self { hi, lo: 0.0 }
    }

    pub fn hi(self) -> f64 {
        self.hi
    }

    pub fn lo(self) -> f64 {
        self.lo
    }
}

impl Add for DoubleDouble {
    type Output = Self;
    #[inline]
    fn add(self, o: Self) -> Self {
        let (s, e) = two_sum(self.hi, o.hi);
        let (t, f) = two_sum(self.lo, o.lo);
        let (s, e) = quick_two_sum(s, e + t);
        let (hi, lo) = quick_two_sum(s, e + f);
        Self { hi, lo }
    }
}

impl Neg for DoubleDouble {
    type Output = Self;
    #[inline]
    fn neg(self) -> Self {
        Self {
            hi: -self.hi,
            lo: -self.lo,
        }
    }
}

impl Sub for DoubleDouble {
    type Output = Self;
    #[inline]
    fn sub(self, o: Self) -> Self {
        self + (-o)
    }
}

impl Mul for DoubleDouble {
    type Output = Self;
    #[inline]
    fn mul(self, o: Self) -> Self {
        let (p, e) = two_prod(self.hi, o.hi);
        let e = e + (self.hi * o.lo + self.lo * o.hi);
        let (hi, lo) = quick_two_sum(p, e);
        Self { hi, lo }
    }
}

impl Div for DoubleDouble {
    type Output = Self;
    #[inline]
    fn div(self, o: Self) -> Self {
        let q1 = self.hi / o.hi;
        let r = self - o * Self::new(q1);
        let q2 = r.hi / o.hi;
        let r = r - o * Self::new(q2);
        let q3 = r.hi / o.hi;
        let (hi, lo) = quick_two_sum(q1, q2);
        Self { hi, lo } + Self::new(q3)
    }
}

impl Scalar for DoubleDouble {
    fn zero() -> Self {
        Self::new(0.0)
    }
    fn from_f64(v: f64) -> Self {
        Self::new(v)
    }
    fn to_f64(self) -> f64 {
        self.hi + self.lo
    }
    fn magnitude(self) -> f64 {
        self.hi.abs()
    }
}

/// Error from [`solve_dense`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Singular {
    pub column: usize,
}

/// Trailing rows above which the block update runs on the rayon pool.
const PARALLEL_THRESHOLD: usize = 256;
/// Panel width of the blocked factorization.
const BLOCK: usize = 64;

/// Solves `A x = rhs` for a square row-major `A` of order `n`, consuming
/// both buffers. Blocked LU with partial pivoting: each panel of `BLOCK`
/// columns is factored in place, then the trailing matrix receives one
/// rank-`BLOCK` update so every row is streamed once per panel.
pub fn solve_dense<T: Scalar>(mut a: Vec<T>, mut rhs: Vec<T>, n: usize) -> Result<Vec<T>, Singular> {
    assert_eq!(a.len(), n * n, "matrix buffer must be n*n");
    assert_eq!(rhs.len(), n, "rhs must have n entries");

    for k0 in (0..n).step_by(BLOCK) {
        let k1 = (k0 + BLOCK).min(n);

        for k in k0..k1 {
            let (pivot_row, pivot_mag) = (k..n)
                .map(|i| (i, a[i * n + k].magnitude()))
                .fold((k, -1.0), |best, cur| if cur.1 > best.1 { cur } else { best });
            if pivot_mag <= 0.0 || !pivot_mag.is_finite() {
                return Err(Singular { column: k });
            }
            if pivot_row != k {
                for j in 0..n {
                    a.swap(k * n + j, pivot_row * n + j);
                }
                rhs.swap(k, pivot_row);
            }
            let (head, tail) = a.split_at_mut((k + 1) * n);
            let pivot = &head[k * n..k * n + k1];
            let pivot_val = pivot[k];
            for row in tail.chunks_mut(n) {
                let factor = row[k] / pivot_val;
                row[k] = factor;
                if factor.magnitude() != 0.0 {
                    for j in (k + 1)..k1 {
                        row[j] = row[j] - factor * pivot[j];
                    }
                }
            }
        }
        if k1 == n {
            break;
        }

        // U12 = L11^-1 A12
        for k in k0..k1 {
            let (head, tail) = a.split_at_mut((k + 1) * n);
            let src = &head[k * n + k1..(k + 1) * n];
            for row in tail[..(k1 - k - 1) * n].chunks_mut(n) {
                let factor = row[k];
                for (x, u) in row[k1..].iter_mut().zip(src) {
                    *x = *x - factor * *u;
                }
            }
        }

        // A22 -= L21 U12
        let (head, tail) = a.split_at_mut(k1 * n);
        let panel = &head[k0 * n..];
        let u_row = |p: usize| &panel[(p - k0) * n + k1..(p - k0 + 1) * n];
        let update = |row: &mut [T]| {
            let mut p = k0;
            while p + 4 <= k1 {
                let f = [row[p], row[p + 1], row[p + 2], row[p + 3]];
                let (u0, u1, u2, u3) = (u_row(p), u_row(p + 1), u_row(p + 2), u_row(p + 3));
                let xs = &mut row[k1..];
                let m = xs.len();
                let (u0, u1, u2, u3) = (&u0[..m], &u1[..m], &u2[..m], &u3[..m]);
                for (j, x) in xs.iter_mut().enumerate() {
                    *x = *x - (f[0] * u0[j] + f[1] * u1[j] + f[2] * u2[j] + f[3] * u3[j]);
                }
                p += 4;
            }
            for p in p..k1 {
                let factor = row[p];
                for (x, v) in row[k1..].iter_mut().zip(u_row(p)) {
                    *x = *x - factor * *v;
                }
            }
        };
        if n - k1 > PARALLEL_THRESHOLD {
            tail.par_chunks_mut(n).for_each(update);
        } else {
            tail.chunks_mut(n).for_each(update);
        }
    }

    // forward substitution with the unit lower triangle
    for i in 1..n {
        let row = &a[i * n..i * n + i];
        let mut acc = rhs[i];
        for (l, y) in row.iter().zip(&rhs[..i]) {
            acc = acc - *l * *y;
        }
        rhs[i] = acc;
    }
    // back substitution on the upper triangle
    let mut x = vec![T::zero(); n];
    for i in (0..n).rev() {
        let row = &a[i * n..(i + 1) * n];
        let mut acc = rhs[i];
        for j in (i + 1)..n {
            acc = acc - row[j] * x[j];
        }
        x[i] = acc / row[i];
    }
    Ok(x)
}
