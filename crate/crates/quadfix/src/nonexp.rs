//! Nonexpansive-operator toolkit: projection primitives, cyclic families
//! `T_n = T_{n mod l}`, composites `T~_i = T_{i+l} ... T_{i+1}` and the tau
//! fixed-point modulus.

use crate::hilbert::HilbertPoint;
use crate::ratekit::Rate1Ref;
use crate::{Error, Result};
use nalgebra::{DMatrix, DVector};
use num::BigUint;
use std::sync::Arc;

pub const FIXED_POINT_TOL: f64 = 1e-10;

/// A concrete nonexpansive map on R^d. All projections use exact closed
/// forms so idempotence holds to machine precision.
#[derive(Clone, Debug)]
pub enum NonexpansiveOp {
    Identity,
    /// Projection onto `{x : <a,x> <= b}`.
    Halfspace { a: DVector<f64>, b: f64 },
    /// Projection onto the closed ball `B(center, radius)`.
    Ball { center: DVector<f64>, radius: f64 },
    /// Projection onto the box `[lo, hi]` componentwise.
    Box { lo: DVector<f64>, hi: DVector<f64> },
    /// Projection onto `offset + range(basis)`; basis columns orthonormal.
    Affine {
        basis: DMatrix<f64>,
        offset: DVector<f64>,
    },
    /// Applies the listed maps left to right.
    Composite(Vec<NonexpansiveOp>),
}

impl NonexpansiveOp {
    pub fn halfspace(a: Vec<f64>, b: f64) -> Result<Self> {
        let a = DVector::from_vec(a);
        if a.norm() == 0.0 {
            return Err(Error::ZeroNormal);
        }
        Ok(NonexpansiveOp::Halfspace { a, b })
    }

    pub fn ball(center: Vec<f64>, radius: f64) -> Result<Self> {
        if radius <= 0.0 || !radius.is_finite() {
            return Err(Error::Config("ball radius must be positive".into()));
        }
        Ok(NonexpansiveOp::Ball {
            center: DVector::from_vec(center),
            radius,
        })
    }

    pub fn boxed(lo: Vec<f64>, hi: Vec<f64>) -> Result<Self> {
        if lo.len() != hi.len() {
            return Err(Error::DimensionMismatch(lo.len(), hi.len()));
        }
        if lo.iter().zip(&hi).any(|(l, h)| l > h) {
            return Err(Error::InvalidBox);
        }
        Ok(NonexpansiveOp::Box {
            lo: DVector::from_vec(lo),
            hi: DVector::from_vec(hi),
        })
    }

    /// Builds an affine projection from a (not necessarily orthonormal)
    /// spanning set; the basis is orthonormalized once at construction.
    pub fn affine(span: Vec<Vec<f64>>, offset: Vec<f64>) -> Result<Self> {
        let dim = offset.len();
        if span.iter().any(|c| c.len() != dim) {
            return Err(Error::DimensionMismatch(dim, span[0].len()));
        }
        let cols = span.len();
        let raw = DMatrix::from_fn(dim, cols, |i, j| span[j][i]);
        // Gram-Schmidt with drop of dependent columns
        let mut basis: Vec<DVector<f64>> = Vec::new();
        for j in 0..cols {
            let mut v = raw.column(j).clone_owned();
            for b in &basis {
                let c = b.dot(&v);
                v -= b * c;
            }
            let n = v.norm();
            if n > 1e-12 {
                basis.push(v / n);
            }
        }
        if basis.is_empty() {
            return Err(Error::Config("affine basis has rank zero".into()));
        }
        let q = DMatrix::from_fn(dim, basis.len(), |i, j| basis[j][i]);
        Ok(NonexpansiveOp::Affine {
            basis: q,
            offset: DVector::from_vec(offset),
        })
    }

    pub fn apply_vec(&self, x: &DVector<f64>) -> DVector<f64> {
        match self {
            NonexpansiveOp::Identity => x.clone(),
            NonexpansiveOp::Halfspace { a, b } => {
                let excess = a.dot(x) - b;
                if excess > 0.0 {
                    x - a * (excess / a.norm_squared())
                } else {
                    x.clone()
                }
            }
            NonexpansiveOp::Ball { center, radius } => {
                let d = x - center;
                let n = d.norm();
                if n <= *radius {
                    x.clone()
                } else {
                    center + d * (*radius / n)
                }
            }
            NonexpansiveOp::Box { lo, hi } => {
                DVector::from_fn(x.len(), |i, _| x[i].clamp(lo[i], hi[i]))
            }
            NonexpansiveOp::Affine { basis, offset } => {
                let t = basis.transpose() * (x - offset);
                offset + basis * t
            }
            NonexpansiveOp::Composite(ops) => {
                let mut y = x.clone();
                for op in ops {
                    y = op.apply_vec(&y);
                }
                y
            }
        }
    }

    pub fn apply(&self, x: &HilbertPoint) -> HilbertPoint {
        HilbertPoint::from_dvector(self.apply_vec(x.coords()))
    }
}

/// Closed-form halfspace projection `x - max(0, <a,x>-b)/||a||^2 * a`.
pub fn project_halfspace(a: &[f64], b: f64, x: &HilbertPoint) -> Result<HilbertPoint> {
    let op = NonexpansiveOp::halfspace(a.to_vec(), b)?;
    if a.len() != x.dim() {
        return Err(Error::DimensionMismatch(a.len(), x.dim()));
    }
    Ok(op.apply(x))
}

/// The cyclic family `T_0, ..., T_{l-1}` with a certified common fixed
/// point `p` and an optional tau modulus.
#[derive(Clone)]
pub struct CyclicFamily {
    maps: Vec<NonexpansiveOp>,
    p: HilbertPoint,
    b_p: u64,
    tau: Option<Rate1Ref>,
}

impl CyclicFamily {
    pub fn new(
        maps: Vec<NonexpansiveOp>,
        p: HilbertPoint,
        tau: Option<Rate1Ref>,
    ) -> Result<Self> {
        if maps.is_empty() {
            return Err(Error::Config("family needs at least one map".into()));
        }
        for op in &maps {
            let r = op.apply(&p).dist(&p)?;
            if r > FIXED_POINT_TOL {
                return Err(Error::NotCommonFixedPoint(r));
            }
        }
        let b_p = (p.norm().ceil() as u64).max(1);
        Ok(CyclicFamily { maps, p, b_p, tau })
    }

    pub fn len(&self) -> usize {
        self.maps.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn maps(&self) -> &[NonexpansiveOp] {
        &self.maps
    }

    pub fn p(&self) -> &HilbertPoint {
        &self.p
    }

    pub fn b_p(&self) -> u64 {
        self.b_p
    }

    /// `T_n = T_{n mod l}`.
    pub fn cyclic(&self, n: u64) -> &NonexpansiveOp {
        &self.maps[(n % self.maps.len() as u64) as usize]
    }

    /// The composite `T~_i = T_{i+l} ... T_{i+1}` (applies `T_{i+1}` first).
    /// For `l = 1` this is `T_0`.
    pub fn tilde(&self, i: u64) -> NonexpansiveOp {
        let l = self.maps.len() as u64;
        if l == 1 {
            return self.maps[0].clone();
        }
        let ops = (1..=l).map(|j| self.cyclic(i + j).clone()).collect();
        NonexpansiveOp::Composite(ops)
    }

    /// Applies `T~_i` without building a composite.
    pub fn tilde_apply_vec(&self, i: u64, x: &DVector<f64>) -> DVector<f64> {
        let l = self.maps.len() as u64;
        let mut y = self.cyclic(i + 1).apply_vec(x);
        for j in 2..=l {
            y = self.cyclic(i + j).apply_vec(&y);
        }
        y
    }

    /// The tau modulus evaluated at `k`: identity for `l = 1` (where
    /// `T~_m = T_0` makes the implication trivial), otherwise the
    /// user-supplied modulus.
    pub fn default_tau(&self, k: u64) -> Result<u64> {
        match self.tau_rate()?.eval(&BigUint::from(k)) {
            Some(v) => {
                use num::ToPrimitive;
                v.to_u64()
                    .ok_or_else(|| Error::Config("tau value overflows u64".into()))
            }
            None => Err(Error::Config("tau table exhausted".into())),
        }
    }

    pub fn tau_rate(&self) -> Result<Rate1Ref> {
        if let Some(t) = &self.tau {
            return Ok(t.clone());
        }
        if self.maps.len() == 1 {
            return Ok(Arc::new(|k: &BigUint| Some(k.clone())) as Rate1Ref);
        }
        Err(Error::TauRequired)
    }
}
