//! Dense univariate polynomials over a prime field, low-degree-first.

use crate::field::{Fe, PrimeField};

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Poly {
    coeffs: Vec<Fe>,
}

impl Poly {
    pub fn zero() -> Self {
        Poly { coeffs: Vec::new() }
    }

    pub fn constant(c: Fe) -> Self {
        Poly::from_coeffs(vec![c])
    }

    /// Trailing zero coefficients are trimmed.
    pub fn from_coeffs(mut coeffs: Vec<Fe>) -> Self {
        while coeffs.last().is_some_and(|c| c.is_zero()) {
            coeffs.pop();
        }
        Poly { coeffs }
    }

    /// The monic polynomial `prod (x - root)`.
    pub fn from_roots(field: &PrimeField, roots: &[Fe]) -> Self {
        let mut coeffs = Vec::with_capacity(roots.len() + 1);
        coeffs.push(field.one());
        for &root in roots {
            // multiply in place by (x - root)
            let minus_root = field.neg(root);
            coeffs.push(Fe::ZERO);
            for i in (0..coeffs.len()).rev() {
                let shifted = if i > 0 { coeffs[i - 1] } else { Fe::ZERO };
                coeffs[i] = field.mul_add(shifted, coeffs[i], minus_root);
            }
        }
        Poly::from_coeffs(coeffs)
    }

    pub fn coeffs(&self) -> &[Fe] {
        &self.coeffs
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// `None` for the zero polynomial.
    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    pub fn eval(&self, field: &PrimeField, x: Fe) -> Fe {
        self.coeffs
            .iter()
            .rev()
            .fold(Fe::ZERO, |acc, &c| field.mul_add(c, acc, x))
    }

    pub fn scale(&self, field: &PrimeField, c: Fe) -> Self {
        Poly::from_coeffs(self.coeffs.iter().map(|&a| field.mul(a, c)).collect())
    }

    /// Coefficients padded with zeros to exactly `len` entries.
    pub fn padded(&self, len: usize) -> Vec<Fe> {
        assert!(self.coeffs.len() <= len, "polynomial longer than requested padding");
        let mut out = self.coeffs.clone();
        out.resize(len, Fe::ZERO);
        out
    }
}
