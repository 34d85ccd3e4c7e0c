//! Fields the interpolation and decoding routines are generic over: exact
//! prime fields, double-precision complex numbers with a zero tolerance,
//! and high-precision complex numbers.
//!
//! A field is a context object (modulus, tolerance, precision), not a
//! wrapper type per element; this keeps elements plain and cheap.

use num_complex::Complex64;
use rug::Float;

use crate::error::{Error, Result};
use crate::hp::HComplex;

pub trait Field {
    type Elem: Clone + std::fmt::Debug;

    fn zero(&self) -> Self::Elem;
    fn one(&self) -> Self::Elem;
    fn add(&self, a: &Self::Elem, b: &Self::Elem) -> Self::Elem;
    fn sub(&self, a: &Self::Elem, b: &Self::Elem) -> Self::Elem;
    fn mul(&self, a: &Self::Elem, b: &Self::Elem) -> Self::Elem;
    fn neg(&self, a: &Self::Elem) -> Self::Elem;
    /// Multiplicative inverse; fails on (effective) zero.
    fn inv(&self, a: &Self::Elem) -> Result<Self::Elem>;
    /// Zero test, with tolerance in the approximate fields.
    fn is_zero(&self, a: &Self::Elem) -> bool;
    /// Pivot-selection size: any monotone proxy for |a|. Exact fields return
    /// 1 for nonzero and 0 for zero.
    fn magnitude(&self, a: &Self::Elem) -> f64;
    /// Injection of small integers. Takes `&self` because the field is the
    /// conversion context (e.g. reduction mod p), not a conversion source.
    #[allow(clippy::wrong_self_convention)]
    fn from_u64(&self, x: u64) -> Self::Elem;

    fn eq(&self, a: &Self::Elem, b: &Self::Elem) -> bool {
        self.is_zero(&self.sub(a, b))
    }

    fn div(&self, a: &Self::Elem, b: &Self::Elem) -> Result<Self::Elem> {
        Ok(self.mul(a, &self.inv(b)?))
    }
}

// ---------------------------------------------------------------------------
// Prime field F_p, p an odd u64 prime (2 allowed too).

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PrimeField {
    p: u64,
}

fn mulmod(a: u64, b: u64, p: u64) -> u64 {
    ((a as u128 * b as u128) % p as u128) as u64
}

fn powmod(mut base: u64, mut exp: u64, p: u64) -> u64 {
    let mut acc = 1u64 % p;
    base %= p;
    while exp > 0 {
        if exp & 1 == 1 {
            acc = mulmod(acc, base, p);
        }
        base = mulmod(base, base, p);
        exp >>= 1;
    }
    acc
}

/// Deterministic Miller-Rabin; the listed bases decide primality for every
/// u64.
pub fn is_prime_u64(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    for q in [2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37] {
        if n == q {
            return true;
        }
        if n.is_multiple_of(q) {
            return false;
        }
    }
    let mut d = n - 1;
    let mut s = 0u32;
    while d & 1 == 0 {
        d >>= 1;
        s += 1;
    }
    'witness: for a in [2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37] {
        let mut x = powmod(a, d, n);
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 1..s {
            x = mulmod(x, x, n);
            if x == n - 1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

impl PrimeField {
    pub fn new(p: u64) -> Result<Self> {
        if !is_prime_u64(p) {
            return Err(Error::validation(format!("{p} is not prime")));
        }
        Ok(PrimeField { p })
    }

    pub fn modulus(&self) -> u64 {
        self.p
    }

    pub fn rand_elem<R: rand::Rng + ?Sized>(&self, rng: &mut R) -> u64 {
        rng.gen_range(0..self.p)
    }
}

impl Field for PrimeField {
    type Elem = u64;

    fn zero(&self) -> u64 {
        0
    }
    fn one(&self) -> u64 {
        1 % self.p
    }
    fn add(&self, a: &u64, b: &u64) -> u64 {
        // p can exceed 2^63, so the sum is widened rather than reduced lazily.
        ((*a as u128 + *b as u128) % self.p as u128) as u64
    }
    fn sub(&self, a: &u64, b: &u64) -> u64 {
        if a >= b {
            a - b
        } else {
            self.p - (b - a)
        }
    }
    fn mul(&self, a: &u64, b: &u64) -> u64 {
        mulmod(*a, *b, self.p)
    }
    fn neg(&self, a: &u64) -> u64 {
        if *a == 0 {
            0
        } else {
            self.p - a
        }
    }
    fn inv(&self, a: &u64) -> Result<u64> {
        if (*a).is_multiple_of(self.p) {
            return Err(Error::validation("zero has no inverse"));
        }
        Ok(powmod(*a, self.p - 2, self.p))
    }
    fn is_zero(&self, a: &u64) -> bool {
        (*a).is_multiple_of(self.p)
    }
    fn magnitude(&self, a: &u64) -> f64 {
        if self.is_zero(a) {
            0.0
        } else {
            1.0
        }
    }
    fn from_u64(&self, x: u64) -> u64 {
        x % self.p
    }
}

// ---------------------------------------------------------------------------
// Complex doubles with a zero tolerance.

#[derive(Debug, Clone, Copy)]
pub struct ComplexField {
    pub tol: f64,
}

impl ComplexField {
    pub fn new(tol: f64) -> Self {
        ComplexField { tol }
    }
}

impl Field for ComplexField {
    type Elem = Complex64;

    fn zero(&self) -> Complex64 {
        Complex64::new(0.0, 0.0)
    }
    fn one(&self) -> Complex64 {
        Complex64::new(1.0, 0.0)
    }
    fn add(&self, a: &Complex64, b: &Complex64) -> Complex64 {
        a + b
    }
    fn sub(&self, a: &Complex64, b: &Complex64) -> Complex64 {
        a - b
    }
    fn mul(&self, a: &Complex64, b: &Complex64) -> Complex64 {
        a * b
    }
    fn neg(&self, a: &Complex64) -> Complex64 {
        -a
    }
    fn inv(&self, a: &Complex64) -> Result<Complex64> {
        if self.is_zero(a) {
            return Err(Error::validation(
                "inverse of a value below the zero tolerance",
            ));
        }
        Ok(Complex64::new(1.0, 0.0) / a)
    }
    fn is_zero(&self, a: &Complex64) -> bool {
        a.norm() <= self.tol
    }
    fn magnitude(&self, a: &Complex64) -> f64 {
        a.norm()
    }
    fn from_u64(&self, x: u64) -> Complex64 {
        Complex64::new(x as f64, 0.0)
    }
}

// ---------------------------------------------------------------------------
// High-precision complex numbers.

#[derive(Debug, Clone)]
pub struct HpComplexField {
    pub prec: u32,
    tol: Float,
}

impl HpComplexField {
    /// Zero tolerance defaults to 2^(-prec/2): far below any honest value,
    /// far above accumulated rounding.
    pub fn new(prec: u32) -> Self {
        let tol = Float::with_val(prec, Float::i_exp(1, -((prec / 2) as i32)));
        HpComplexField { prec, tol }
    }

    pub fn with_tol(prec: u32, tol: Float) -> Self {
        HpComplexField { prec, tol }
    }
}

impl Field for HpComplexField {
    type Elem = HComplex;

    fn zero(&self) -> HComplex {
        HComplex::zero(self.prec)
    }
    fn one(&self) -> HComplex {
        HComplex::one(self.prec)
    }
    fn add(&self, a: &HComplex, b: &HComplex) -> HComplex {
        a.add(b)
    }
    fn sub(&self, a: &HComplex, b: &HComplex) -> HComplex {
        a.sub(b)
    }
    fn mul(&self, a: &HComplex, b: &HComplex) -> HComplex {
        a.mul(b)
    }
    fn neg(&self, a: &HComplex) -> HComplex {
        HComplex::zero(self.prec).sub(a)
    }
    fn inv(&self, a: &HComplex) -> Result<HComplex> {
        if self.is_zero(a) {
            return Err(Error::validation(
                "inverse of a value below the zero tolerance",
            ));
        }
        let denom = a.norm_sqr();
        let conj = a.conj();
        Ok(HComplex {
            re: Float::with_val(self.prec, &conj.re / &denom),
            im: Float::with_val(self.prec, &conj.im / &denom),
        })
    }
    fn is_zero(&self, a: &HComplex) -> bool {
        a.abs() <= self.tol
    }
    fn magnitude(&self, a: &HComplex) -> f64 {
        a.abs().to_f64()
    }
    fn from_u64(&self, x: u64) -> HComplex {
        HComplex {
            re: Float::with_val(self.prec, x),
            im: Float::new(self.prec),
        }
    }
}
