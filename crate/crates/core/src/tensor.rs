//! Small symmetric tensors and tangential vectors.
//!
//! `SymTensor2` stores only the upper triangle of a symmetric `d x d` matrix
//! (`d` is 2 or 3). Besides plain component access it exposes an orthonormal
//! coordinate map (`to_coords`/`from_coords`) in which the Frobenius inner
//! product becomes the Euclidean one; the root finders and the finite
//! difference Jacobians in this crate work in those coordinates.

use std::f64::consts::SQRT_2;
use std::fmt;
use std::ops::{Add, AddAssign, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

use crate::error::{Result, RheoError};

/// Upper-triangle index of `(i, j)` for the given dimension.
fn slot(dim: usize, i: usize, j: usize) -> usize {
    let (a, b) = if i <= j { (i, j) } else { (j, i) };
    match (dim, a, b) {
        (2, 0, 0) => 0,
        (2, 0, 1) => 1,
        (2, 1, 1) => 2,
        (3, 0, 0) => 0,
        (3, 0, 1) => 1,
        (3, 0, 2) => 2,
        (3, 1, 1) => 3,
        (3, 1, 2) => 4,
        (3, 2, 2) => 5,
        _ => panic!("index ({i},{j}) out of range for dim {dim}"),
    }
}

fn is_diag_slot(dim: usize, k: usize) -> bool {
    match dim {
        2 => k == 0 || k == 2,
        _ => k == 0 || k == 3 || k == 5,
    }
}

/// Number of independent components of a symmetric `dim x dim` tensor.
pub fn sym_components(dim: usize) -> usize {
    dim * (dim + 1) / 2
}

#[derive(Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SymTensor2 {
    dim: usize,
    entries: [f64; 6],
}

impl SymTensor2 {
    pub fn zero(dim: usize) -> Self {
        assert!(dim == 2 || dim == 3, "SymTensor2 supports dim 2 or 3");
        SymTensor2 { dim, entries: [0.0; 6] }
    }

    pub fn try_zero(dim: usize) -> Result<Self> {
        if dim == 2 || dim == 3 {
            Ok(Self::zero(dim))
        } else {
            Err(RheoError::UnsupportedDimension(dim))
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut t = Self::zero(dim);
        for i in 0..dim {
            t.set(i, i, 1.0);
        }
        t
    }

    /// Diagonal tensor; the length of `diag` fixes the dimension.
    pub fn diag(diag: &[f64]) -> Self {
        let mut t = Self::zero(diag.len());
        for (i, &d) in diag.iter().enumerate() {
            t.set(i, i, d);
        }
        t
    }

    /// 2D tensor from `(xx, xy, yy)`.
    pub fn new2(xx: f64, xy: f64, yy: f64) -> Self {
        SymTensor2 {
            dim: 2,
            entries: [xx, xy, yy, 0.0, 0.0, 0.0],
        }
    }

    /// 3D tensor from `(xx, xy, xz, yy, yz, zz)`.
    pub fn new3(xx: f64, xy: f64, xz: f64, yy: f64, yz: f64, zz: f64) -> Self {
        SymTensor2 {
            dim: 3,
            entries: [xx, xy, xz, yy, yz, zz],
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[slot(self.dim, i, j)]
    }

    pub fn set(&mut self, i: usize, j: usize, value: f64) {
        self.entries[slot(self.dim, i, j)] = value;
    }

    /// Stored upper-triangle components.
    pub fn components(&self) -> &[f64] {
        &self.entries[..sym_components(self.dim)]
    }

    pub fn is_finite(&self) -> bool {
        self.components().iter().all(|c| c.is_finite())
    }

    /// Double-dot product `A:B`, checking dimensions.
    pub fn inner(&self, other: &SymTensor2) -> Result<f64> {
        if self.dim != other.dim {
            return Err(RheoError::DimensionMismatch {
                left: self.dim,
                right: other.dim,
            });
        }
        Ok(self.ddot(other))
    }

    /// Double-dot product without the dimension check (debug-asserted).
    pub fn ddot(&self, other: &SymTensor2) -> f64 {
        debug_assert_eq!(self.dim, other.dim);
        let n = sym_components(self.dim);
        let mut acc = 0.0;
        for k in 0..n {
            let w = if is_diag_slot(self.dim, k) { 1.0 } else { 2.0 };
            acc += w * self.entries[k] * other.entries[k];
        }
        acc
    }

    pub fn norm_sq(&self) -> f64 {
        self.ddot(self)
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    pub fn trace(&self) -> f64 {
        (0..self.dim).map(|i| self.get(i, i)).sum()
    }

    /// Orthonormal coordinates: off-diagonal slots are scaled by `sqrt(2)`.
    pub fn to_coords(&self) -> ([f64; 6], usize) {
        let n = sym_components(self.dim);
        let mut out = [0.0; 6];
        for (k, o) in out.iter_mut().enumerate().take(n) {
            let w = if is_diag_slot(self.dim, k) { 1.0 } else { SQRT_2 };
            *o = w * self.entries[k];
        }
        (out, n)
    }

    #[allow(clippy::needless_range_loop)]
    pub fn from_coords(dim: usize, coords: &[f64]) -> Self {
        let mut t = Self::zero(dim);
        let n = sym_components(dim);
        for k in 0..n {
            let w = if is_diag_slot(dim, k) { 1.0 } else { SQRT_2 };
            t.entries[k] = coords[k] / w;
        }
        t
    }

    /// Unit tensor in the direction of `self`, or `None` for the zero tensor.
    pub fn direction(&self) -> Option<SymTensor2> {
        let n = self.frobenius_norm();
        if n > 0.0 {
            Some(*self * (1.0 / n))
        } else {
            None
        }
    }

    /// Cosine of the angle between two tensors in the Frobenius metric.
    pub fn cosine(&self, other: &SymTensor2) -> f64 {
        let d = self.frobenius_norm() * other.frobenius_norm();
        if d == 0.0 {
            1.0
        } else {
            self.ddot(other) / d
        }
    }

    /// `T n` for a unit normal `n` (first `dim` entries used).
    pub fn apply(&self, n: &[f64]) -> SlipVector {
        let mut out = SlipVector::zero(self.dim);
        for i in 0..self.dim {
            let mut acc = 0.0;
            for (j, nj) in n.iter().enumerate().take(self.dim) {
                acc += self.get(i, j) * nj;
            }
            out.c[i] = acc;
        }
        out
    }
}

impl fmt::Debug for SymTensor2 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "SymTensor2{:?}", self.components())
    }
}

impl Add for SymTensor2 {
    type Output = SymTensor2;
    fn add(mut self, rhs: SymTensor2) -> SymTensor2 {
        assert_eq!(self.dim, rhs.dim, "tensor dimension mismatch");
        for k in 0..6 {
            self.entries[k] += rhs.entries[k];
        }
        self
    }
}

impl AddAssign for SymTensor2 {
    fn add_assign(&mut self, rhs: SymTensor2) {
        *self = *self + rhs;
    }
}

impl Sub for SymTensor2 {
    type Output = SymTensor2;
    fn sub(mut self, rhs: SymTensor2) -> SymTensor2 {
        assert_eq!(self.dim, rhs.dim, "tensor dimension mismatch");
        for k in 0..6 {
            self.entries[k] -= rhs.entries[k];
        }
        self
    }
}

impl Mul<f64> for SymTensor2 {
    type Output = SymTensor2;
    fn mul(mut self, rhs: f64) -> SymTensor2 {
        for e in self.entries.iter_mut() {
            *e *= rhs;
        }
        self
    }
}

impl Mul<SymTensor2> for f64 {
    type Output = SymTensor2;
    fn mul(self, rhs: SymTensor2) -> SymTensor2 {
        rhs * self
    }
}

impl Neg for SymTensor2 {
    type Output = SymTensor2;
    fn neg(self) -> SymTensor2 {
        self * -1.0
    }
}

/// Vector of dimension 2 or 3, used for wall tractions and slip velocities.
/// Callers keep it tangential; the boundary relations never look at the normal.
#[derive(Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SlipVector {
    dim: usize,
    c: [f64; 3],
}

impl SlipVector {
    pub fn zero(dim: usize) -> Self {
        assert!(dim == 2 || dim == 3, "SlipVector supports dim 2 or 3");
        SlipVector { dim, c: [0.0; 3] }
    }

    pub fn from_slice(v: &[f64]) -> Self {
        let mut out = Self::zero(v.len());
        out.c[..v.len()].copy_from_slice(v);
        out
    }

    pub fn new2(x: f64, y: f64) -> Self {
        SlipVector { dim: 2, c: [x, y, 0.0] }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.c[..self.dim]
    }

    pub fn get(&self, i: usize) -> f64 {
        self.c[i]
    }

    pub fn is_finite(&self) -> bool {
        self.as_slice().iter().all(|c| c.is_finite())
    }

    pub fn dot(&self, other: &SlipVector) -> f64 {
        debug_assert_eq!(self.dim, other.dim);
        self.as_slice().iter().zip(other.as_slice()).map(|(a, b)| a * b).sum()
    }

    pub fn try_dot(&self, other: &SlipVector) -> Result<f64> {
        if self.dim != other.dim {
            return Err(RheoError::DimensionMismatch {
                left: self.dim,
                right: other.dim,
            });
        }
        Ok(self.dot(other))
    }

    pub fn norm(&self) -> f64 {
        self.dot(self).sqrt()
    }

    pub fn direction(&self) -> Option<SlipVector> {
        let n = self.norm();
        if n > 0.0 {
            Some(*self * (1.0 / n))
        } else {
            None
        }
    }
}

impl fmt::Debug for SlipVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "SlipVector{:?}", self.as_slice())
    }
}

impl Add for SlipVector {
    type Output = SlipVector;
    fn add(mut self, rhs: SlipVector) -> SlipVector {
        assert_eq!(self.dim, rhs.dim, "vector dimension mismatch");
        for k in 0..3 {
            self.c[k] += rhs.c[k];
        }
        self
    }
}

impl Sub for SlipVector {
    type Output = SlipVector;
    fn sub(mut self, rhs: SlipVector) -> SlipVector {
        assert_eq!(self.dim, rhs.dim, "vector dimension mismatch");
        for k in 0..3 {
            self.c[k] -= rhs.c[k];
        }
        self
    }
}

impl Mul<f64> for SlipVector {
    type Output = SlipVector;
    fn mul(mut self, rhs: f64) -> SlipVector {
        for e in self.c.iter_mut() {
            *e *= rhs;
        }
        self
    }
}

impl Mul<SlipVector> for f64 {
    type Output = SlipVector;
    fn mul(self, rhs: SlipVector) -> SlipVector {
        rhs * self
    }
}

impl Neg for SlipVector {
    type Output = SlipVector;
    fn neg(self) -> SlipVector {
        self * -1.0
    }
}

/// Common vector-space surface shared by stress/rate tensors and wall vectors,
/// so relations, resolvents and admissibility checks can be written once.
pub trait Element:
    Copy + Send + Sync + fmt::Debug + PartialEq + Add<Output = Self> + Sub<Output = Self> + Mul<f64, Output = Self>
{
    /// Spatial dimension `d`.
    fn space_dim(&self) -> usize;
    fn zero_like(&self) -> Self;
    fn dot_with(&self, other: &Self) -> f64;
    fn is_finite(&self) -> bool;
    /// Orthonormal coordinates and their count.
    fn coords(&self) -> ([f64; 6], usize);
    fn with_coords(&self, coords: &[f64]) -> Self;
    /// Zero element of the given spatial dimension.
    fn zero_in(dim: usize) -> Self;
    /// Stored components (upper triangle for tensors), exactly as held.
    fn raw(&self) -> Vec<f64>;
    /// Rebuild from `raw()` output.
    fn from_raw(dim: usize, raw: &[f64]) -> Self;

    fn norm(&self) -> f64 {
        self.dot_with(self).sqrt()
    }

    /// `self` rescaled to the given magnitude; zero stays zero.
    fn scaled_to(&self, magnitude: f64) -> Self {
        let n = self.norm();
        if n > 0.0 {
            *self * (magnitude / n)
        } else {
            self.zero_like()
        }
    }
}

impl Element for SymTensor2 {
    fn space_dim(&self) -> usize {
        self.dim
    }
    fn zero_like(&self) -> Self {
        SymTensor2::zero(self.dim)
    }
    fn dot_with(&self, other: &Self) -> f64 {
        self.ddot(other)
    }
    fn is_finite(&self) -> bool {
        SymTensor2::is_finite(self)
    }
    fn coords(&self) -> ([f64; 6], usize) {
        self.to_coords()
    }
    fn with_coords(&self, coords: &[f64]) -> Self {
        SymTensor2::from_coords(self.dim, coords)
    }
    fn zero_in(dim: usize) -> Self {
        SymTensor2::zero(dim)
    }
    fn raw(&self) -> Vec<f64> {
        self.components().to_vec()
    }
    fn from_raw(dim: usize, raw: &[f64]) -> Self {
        let mut t = SymTensor2::zero(dim);
        t.entries[..raw.len()].copy_from_slice(raw);
        t
    }
}

impl Element for SlipVector {
    fn space_dim(&self) -> usize {
        self.dim
    }
    fn zero_like(&self) -> Self {
        SlipVector::zero(self.dim)
    }
    fn dot_with(&self, other: &Self) -> f64 {
        self.dot(other)
    }
    fn is_finite(&self) -> bool {
        SlipVector::is_finite(self)
    }
    fn coords(&self) -> ([f64; 6], usize) {
        let mut out = [0.0; 6];
        out[..self.dim].copy_from_slice(self.as_slice());
        (out, self.dim)
    }
    fn with_coords(&self, coords: &[f64]) -> Self {
        SlipVector::from_slice(&coords[..self.dim])
    }
    fn zero_in(dim: usize) -> Self {
        SlipVector::zero(dim)
    }
    fn raw(&self) -> Vec<f64> {
        self.as_slice().to_vec()
    }
    fn from_raw(_dim: usize, raw: &[f64]) -> Self {
        SlipVector::from_slice(raw)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn inner_identity_and_zero() {
        let i2 = SymTensor2::identity(2);
        assert_eq!(i2.inner(&i2).unwrap(), 2.0);
        assert_eq!(i2.inner(&SymTensor2::zero(2)).unwrap(), 0.0);
        let a = SymTensor2::diag(&[1.0, -1.0]);
        assert_eq!(a.inner(&a).unwrap(), 2.0);
    }

    #[test]
    fn inner_counts_off_diagonal_twice() {
        let a = SymTensor2::new2(0.0, 1.0, 0.0);
        assert_eq!(a.inner(&a).unwrap(), 2.0);
        let b = SymTensor2::new3(1.0, 2.0, 3.0, 4.0, 5.0, 6.0);
        // 1 + 16 + 36 + 2 * (4 + 9 + 25)
        assert_eq!(b.norm_sq(), 129.0);
    }

    #[test]
    fn inner_rejects_dimension_mismatch() {
        let a = SymTensor2::identity(2);
        let b = SymTensor2::identity(3);
        assert!(matches!(
            a.inner(&b),
            Err(RheoError::DimensionMismatch { left: 2, right: 3 })
        ));
    }

    #[test]
    fn coords_are_orthonormal() {
        let a = SymTensor2::new3(1.0, -2.0, 0.5, 3.0, 0.25, -1.0);
        let (c, n) = a.to_coords();
        let e: f64 = c[..n].iter().map(|x| x * x).sum();
        assert!((e - a.norm_sq()).abs() < 1e-12);
        assert_eq!(SymTensor2::from_coords(3, &c[..n]), a);
    }

    #[test]
    fn apply_normal() {
        let s = SymTensor2::new2(1.0, 2.0, 3.0);
        let t = s.apply(&[0.0, -1.0]);
        assert_eq!(t.as_slice(), &[-2.0, -3.0]);
    }

    #[test]
    fn unsupported_dimension() {
        assert!(SymTensor2::try_zero(4).is_err());
    }
}
