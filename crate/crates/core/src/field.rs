//! Prime-field arithmetic and seeded uniform sampling.
//!
//! Elements are stored as canonical residues in `[0, q)`. Moduli are capped
//! below 2^32 so a product of two residues always fits in a `u64`.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use rand::RngCore;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Largest modulus accepted by [`PrimeField::new`] (exclusive).
pub const MAX_MODULUS: u64 = 1 << 32;

/// Default modulus for protocol runs (the Fermat prime 2^16 + 1).
pub const DEFAULT_MODULUS: u64 = 65_537;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FieldError {
    #[error("modulus {0} is not prime")]
    NotPrime(u64),
    #[error("modulus {0} is too large (must be below 2^32)")]
    ModulusTooLarge(u64),
    #[error("modulus mismatch: {left} vs {right}")]
    ModulusMismatch { left: u64, right: u64 },
    #[error("division by zero in F_{0}")]
    DivisionByZero(u64),
    #[error("vector length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
}

/// The field F_q for a prime q.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "u64", into = "u64")]
pub struct PrimeField {
    q: u64,
}

impl TryFrom<u64> for PrimeField {
    type Error = FieldError;

    fn try_from(q: u64) -> Result<Self, Self::Error> {
        Self::new(q)
    }
}

impl From<PrimeField> for u64 {
    fn from(f: PrimeField) -> u64 {
        f.q
    }
}

fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    if n.is_multiple_of(2) {
        return n == 2;
    }
    let mut d = 3u64;
    while d * d <= n {
        if n.is_multiple_of(d) {
            return false;
        }
        d += 2;
    }
    true
}

impl PrimeField {
    pub fn new(q: u64) -> Result<Self, FieldError> {
        if q >= MAX_MODULUS {
            return Err(FieldError::ModulusTooLarge(q));
        }
        if !is_prime(q) {
            return Err(FieldError::NotPrime(q));
        }
        Ok(Self { q })
    }

    pub fn modulus(self) -> u64 {
        self.q
    }

    pub fn is_odd(self) -> bool {
        self.q % 2 == 1
    }

    /// Reduces an arbitrary integer into the field.
    pub fn elem(self, value: u64) -> FieldElement {
        FieldElement {
            value: value % self.q,
            field: self,
        }
    }

    pub fn zero(self) -> FieldElement {
        self.elem(0)
    }

    pub fn one(self) -> FieldElement {
        self.elem(1)
    }

    // Raw residue arithmetic. Callers guarantee inputs are already reduced.

    #[inline]
    pub fn add_raw(self, a: u64, b: u64) -> u64 {
        let s = a + b;
        if s >= self.q {
            s - self.q
        } else {
            s
        }
    }

    #[inline]
    pub fn sub_raw(self, a: u64, b: u64) -> u64 {
        if a >= b {
            a - b
        } else {
            a + self.q - b
        }
    }

    #[inline]
    pub fn neg_raw(self, a: u64) -> u64 {
        if a == 0 {
            0
        } else {
            self.q - a
        }
    }

    #[inline]
    pub fn mul_raw(self, a: u64, b: u64) -> u64 {
        (a * b) % self.q
    }

    pub fn pow_raw(self, base: u64, mut exp: u64) -> u64 {
        let mut acc = 1 % self.q;
        let mut b = base % self.q;
        while exp > 0 {
            if exp & 1 == 1 {
                acc = self.mul_raw(acc, b);
            }
            b = self.mul_raw(b, b);
            exp >>= 1;
        }
        acc
    }

    /// Multiplicative inverse via the extended Euclidean algorithm.
    pub fn inv_raw(self, a: u64) -> Option<u64> {
        let a = a % self.q;
        if a == 0 {
            return None;
        }
        let (mut old_r, mut r) = (a as i64, self.q as i64);
        let (mut old_s, mut s) = (1i64, 0i64);
        while r != 0 {
            let quot = old_r / r;
            (old_r, r) = (r, old_r - quot * r);
            (old_s, s) = (s, old_s - quot * s);
        }
        debug_assert_eq!(old_r, 1);
        Some(old_s.rem_euclid(self.q as i64) as u64)
    }

    /// One uniform residue, rejecting draws at or above the largest multiple
    /// of q that fits in a `u64`.
    pub fn sample_raw<R: RngCore + ?Sized>(self, rng: &mut R) -> u64 {
        let zone = u64::MAX - (u64::MAX % self.q);
        loop {
            let x = rng.next_u64();
            if x < zone {
                return x % self.q;
            }
        }
    }

    pub fn sample_uniform<R: RngCore + ?Sized>(self, rng: &mut R, count: usize) -> FieldVector {
        let values = (0..count).map(|_| self.sample_raw(rng)).collect();
        FieldVector {
            field: self,
            values,
        }
    }
}

impl fmt::Display for PrimeField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "F_{}", self.q)
    }
}

/// Deterministic generator used for every random draw in the crate.
pub type SeededRng = ChaCha8Rng;

pub fn rng_from_seed(seed: u64) -> SeededRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Derives an independent child seed from `master` for the given stream tag.
pub fn derive_seed(master: u64, tag: u64) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(master);
    rng.set_stream(tag);
    rng.next_u64()
}

/// An element of F_q together with its modulus.
#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct FieldElement {
    value: u64,
    field: PrimeField,
}

impl FieldElement {
    pub fn value(self) -> u64 {
        self.value
    }

    pub fn field(self) -> PrimeField {
        self.field
    }

    pub fn is_zero(self) -> bool {
        self.value == 0
    }

    fn same_field(self, other: Self) -> Result<PrimeField, FieldError> {
        if self.field != other.field {
            return Err(FieldError::ModulusMismatch {
                left: self.field.q,
                right: other.field.q,
            });
        }
        Ok(self.field)
    }

    pub fn try_add(self, other: Self) -> Result<Self, FieldError> {
        let f = self.same_field(other)?;
        Ok(FieldElement {
            value: f.add_raw(self.value, other.value),
            field: f,
        })
    }

    pub fn try_sub(self, other: Self) -> Result<Self, FieldError> {
        let f = self.same_field(other)?;
        Ok(FieldElement {
            value: f.sub_raw(self.value, other.value),
            field: f,
        })
    }

    pub fn try_mul(self, other: Self) -> Result<Self, FieldError> {
        let f = self.same_field(other)?;
        Ok(FieldElement {
            value: f.mul_raw(self.value, other.value),
            field: f,
        })
    }

    pub fn inv(self) -> Result<Self, FieldError> {
        let value = self
            .field
            .inv_raw(self.value)
            .ok_or(FieldError::DivisionByZero(self.field.q))?;
        Ok(FieldElement {
            value,
            field: self.field,
        })
    }

    pub fn pow(self, exp: u64) -> Self {
        FieldElement {
            value: self.field.pow_raw(self.value, exp),
            field: self.field,
        }
    }
}

impl fmt::Debug for FieldElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} (mod {})", self.value, self.field.q)
    }
}

impl fmt::Display for FieldElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.value)
    }
}

// Operator forms panic on a modulus mismatch; use the `try_*` methods when
// operands come from untrusted sources.

impl Add for FieldElement {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        self.try_add(rhs)
            .expect("field operands must share a modulus")
    }
}

impl Sub for FieldElement {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        self.try_sub(rhs)
            .expect("field operands must share a modulus")
    }
}

impl Mul for FieldElement {
    type Output = Self;
    fn mul(self, rhs: Self) -> Self {
        self.try_mul(rhs)
            .expect("field operands must share a modulus")
    }
}

impl Neg for FieldElement {
    type Output = Self;
    fn neg(self) -> Self {
        FieldElement {
            value: self.field.neg_raw(self.value),
            field: self.field,
        }
    }
}

/// A vector over a single prime field.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct FieldVector {
    field: PrimeField,
    values: Vec<u64>,
}

impl FieldVector {
    pub fn zeros(field: PrimeField, len: usize) -> Self {
        Self {
            field,
            values: vec![0; len],
        }
    }

    /// Builds a vector from integers, reducing each modulo q.
    pub fn from_values(field: PrimeField, values: impl IntoIterator<Item = u64>) -> Self {
        let values = values.into_iter().map(|v| v % field.q).collect();
        Self { field, values }
    }

    pub fn from_elements(field: PrimeField, elems: &[FieldElement]) -> Result<Self, FieldError> {
        let mut values = Vec::with_capacity(elems.len());
        for e in elems {
            if e.field != field {
                return Err(FieldError::ModulusMismatch {
                    left: field.q,
                    right: e.field.q,
                });
            }
            values.push(e.value);
        }
        Ok(Self { field, values })
    }

    pub fn field(&self) -> PrimeField {
        self.field
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn get(&self, i: usize) -> Option<FieldElement> {
        self.values.get(i).map(|&v| FieldElement {
            value: v,
            field: self.field,
        })
    }

    pub fn values(&self) -> &[u64] {
        &self.values
    }

    pub fn iter(&self) -> impl Iterator<Item = FieldElement> + '_ {
        self.values.iter().map(move |&v| FieldElement {
            value: v,
            field: self.field,
        })
    }

    fn check_compatible(&self, other: &Self) -> Result<(), FieldError> {
        if self.field != other.field {
            return Err(FieldError::ModulusMismatch {
                left: self.field.q,
                right: other.field.q,
            });
        }
        if self.len() != other.len() {
            return Err(FieldError::LengthMismatch {
                left: self.len(),
                right: other.len(),
            });
        }
        Ok(())
    }

    pub fn try_add(&self, other: &Self) -> Result<Self, FieldError> {
        self.check_compatible(other)?;
        let f = self.field;
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(&a, &b)| f.add_raw(a, b))
            .collect();
        Ok(Self { field: f, values })
    }

    pub fn try_sub(&self, other: &Self) -> Result<Self, FieldError> {
        self.check_compatible(other)?;
        let f = self.field;
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(&a, &b)| f.sub_raw(a, b))
            .collect();
        Ok(Self { field: f, values })
    }

    /// In-place accumulation, used when summing many messages.
    pub fn add_assign(&mut self, other: &Self) -> Result<(), FieldError> {
        self.check_compatible(other)?;
        let f = self.field;
        for (a, &b) in self.values.iter_mut().zip(&other.values) {
            *a = f.add_raw(*a, b);
        }
        Ok(())
    }

    pub fn dot(&self, other: &Self) -> Result<FieldElement, FieldError> {
        self.check_compatible(other)?;
        let f = self.field;
        let value = self
            .values
            .iter()
            .zip(&other.values)
            .fold(0, |acc, (&a, &b)| f.add_raw(acc, f.mul_raw(a, b)));
        Ok(FieldElement { value, field: f })
    }

    /// Concatenation `self ‖ other`.
    pub fn concat(&self, other: &Self) -> Result<Self, FieldError> {
        if self.field != other.field {
            return Err(FieldError::ModulusMismatch {
                left: self.field.q,
                right: other.field.q,
            });
        }
        let mut values = self.values.clone();
        values.extend_from_slice(&other.values);
        Ok(Self {
            field: self.field,
            values,
        })
    }

    pub fn slice(&self, range: std::ops::Range<usize>) -> Self {
        Self {
            field: self.field,
            values: self.values[range].to_vec(),
        }
    }

    pub fn into_values(self) -> Vec<u64> {
        self.values
    }
}
