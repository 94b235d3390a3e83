//! Finite-dimensional real Hilbert-space model: points, inner products and
//! the strongly positive self-adjoint operator with certified spectral
//! bounds.

use crate::{Error, Result};
use nalgebra::{DMatrix, DVector};

pub const SYMMETRY_TOL: f64 = 1e-12;

/// A point of the finite-dimensional model of H.
#[derive(Clone, Debug, PartialEq)]
pub struct HilbertPoint(DVector<f64>);

impl HilbertPoint {
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        if coords.is_empty() || coords.iter().any(|c| !c.is_finite()) {
            return Err(Error::NonFinite);
        }
        Ok(HilbertPoint(DVector::from_vec(coords)))
    }

    pub fn zeros(dim: usize) -> Self {
        HilbertPoint(DVector::zeros(dim))
    }

    pub fn from_dvector(v: DVector<f64>) -> Self {
        HilbertPoint(v)
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn coords(&self) -> &DVector<f64> {
        &self.0
    }

    pub fn into_inner(self) -> DVector<f64> {
        self.0
    }

    pub fn norm(&self) -> f64 {
        self.0.norm()
    }

    fn check_dim(&self, other: &HilbertPoint) -> Result<()> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch(self.dim(), other.dim()));
        }
        Ok(())
    }

    pub fn sub(&self, other: &HilbertPoint) -> Result<HilbertPoint> {
        self.check_dim(other)?;
        Ok(HilbertPoint(&self.0 - &other.0))
    }

    pub fn dist(&self, other: &HilbertPoint) -> Result<f64> {
        self.check_dim(other)?;
        Ok((&self.0 - &other.0).norm())
    }
}

/// Standard Euclidean inner product; rejects mixed dimensions.
pub fn inner(x: &HilbertPoint, y: &HilbertPoint) -> Result<f64> {
    x.check_dim(y)?;
    Ok(x.0.dot(&y.0))
}

/// The strongly positive self-adjoint operator A with certified bounds.
///
/// `gamma` is a sound lower spectral bound in (0,1], `norm_upper` a sound
/// upper bound on `||A||`, and `b_a` the smallest natural >= `norm_upper`.
#[derive(Clone, Debug)]
pub struct SpdOperator {
    matrix: DMatrix<f64>,
    gamma: f64,
    norm_upper: f64,
    b_a: u64,
}

/// Certifies `(gamma, norm_upper, b_a)` for a symmetric matrix.
///
/// gamma is the Gershgorin lower eigenvalue bound (or a user override if
/// larger), clipped to 1; the norm bound is `min(row-sum, Frobenius)`.
pub fn certify_bounds(
    matrix: &DMatrix<f64>,
    gamma_override: Option<f64>,
) -> Result<(f64, f64, u64)> {
    let d = matrix.nrows();
    if d == 0 || matrix.ncols() != d {
        return Err(Error::NotSymmetric);
    }
    for i in 0..d {
        for j in (i + 1)..d {
            if (matrix[(i, j)] - matrix[(j, i)]).abs() > SYMMETRY_TOL {
                return Err(Error::NotSymmetric);
            }
        }
    }
    let mut gersh_lo = f64::INFINITY;
    let mut row_sum = 0.0f64;
    let mut frob_sq = 0.0f64;
    for i in 0..d {
        let mut off = 0.0;
        let mut row = 0.0;
        for j in 0..d {
            let a = matrix[(i, j)];
            row += a.abs();
            frob_sq += a * a;
            if j != i {
                off += a.abs();
            }
        }
        gersh_lo = gersh_lo.min(matrix[(i, i)] - off);
        row_sum = row_sum.max(row);
    }
    let mut gamma = gersh_lo;
    if let Some(g) = gamma_override {
        gamma = gamma.max(g);
    }
    gamma = gamma.min(1.0);
    if gamma <= 0.0 {
        return Err(Error::NotStronglyPositive(gamma));
    }
    let norm_upper = row_sum.min(frob_sq.sqrt());
    let b_a = (norm_upper.ceil() as u64).max(1);
    Ok((gamma, norm_upper, b_a))
}

impl SpdOperator {
    pub fn new(matrix: DMatrix<f64>, gamma_override: Option<f64>) -> Result<Self> {
        let (gamma, norm_upper, b_a) = certify_bounds(&matrix, gamma_override)?;
        Ok(SpdOperator {
            matrix,
            gamma,
            norm_upper,
            b_a,
        })
    }

    pub fn identity(dim: usize) -> Self {
        SpdOperator {
            matrix: DMatrix::identity(dim, dim),
            gamma: 1.0,
            norm_upper: 1.0,
            b_a: 1,
        }
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn norm_upper(&self) -> f64 {
        self.norm_upper
    }

    pub fn b_a(&self) -> u64 {
        self.b_a
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn apply(&self, x: &HilbertPoint) -> Result<HilbertPoint> {
        if x.dim() != self.dim() {
            return Err(Error::DimensionMismatch(self.dim(), x.dim()));
        }
        Ok(HilbertPoint(&self.matrix * x.coords()))
    }

    pub fn apply_vec(&self, x: &DVector<f64>) -> DVector<f64> {
        &self.matrix * x
    }

    /// Rescales the operator by `mu > 0`, re-certifying the bounds.
    pub fn scaled(&self, mu: f64) -> Result<SpdOperator> {
        SpdOperator::new(&self.matrix * mu, Some(self.gamma * mu))
    }

    /// Measured estimate of `||I - alpha A||` via power iteration on
    /// `(I-aA)^T (I-aA)`, asserted against the bound `1 - alpha*gamma`.
    ///
    /// Power iteration only ever underestimates the true norm, so it is a
    /// measurement, never a certificate.
    pub fn check_contraction_bound(&self, alpha: f64) -> Result<(bool, f64)> {
        let max = 1.0 / self.norm_upper;
        if !(0.0..=max + 1e-15).contains(&alpha) {
            return Err(Error::AlphaOutOfRange { alpha, max });
        }
        let d = self.dim();
        let m = DMatrix::identity(d, d) - &self.matrix * alpha;
        let estimate = operator_norm_estimate(&m, 300);
        let ok = estimate <= 1.0 - alpha * self.gamma + 1e-8;
        Ok((ok, estimate))
    }
}

/// Power-iteration estimate of the spectral norm of an arbitrary square
/// matrix (largest singular value, via `M^T M`).
pub fn operator_norm_estimate(m: &DMatrix<f64>, iters: usize) -> f64 {
    let d = m.nrows();
    let gram = m.transpose() * m;
    // deterministic start with all modes excited
    let mut v = DVector::from_fn(d, |i, _| 1.0 + (i as f64 + 1.0).sqrt());
    let mut lambda = 0.0f64;
    for _ in 0..iters {
        let w = &gram * &v;
        let nw = w.norm();
        if nw == 0.0 {
            return 0.0;
        }
        lambda = v.dot(&w) / v.dot(&v);
        v = w / nw;
    }
    lambda.max(0.0).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    fn pt(v: &[f64]) -> HilbertPoint {
        HilbertPoint::new(v.to_vec()).unwrap()
    }

    #[test]
    fn inner_product_basics() {
        assert_eq!(inner(&pt(&[1.0, 0.0]), &pt(&[0.0, 1.0])).unwrap(), 0.0);
        assert_eq!(inner(&pt(&[1.0, 2.0]), &pt(&[3.0, 4.0])).unwrap(), 11.0);
        assert!(matches!(
            inner(&pt(&[1.0]), &pt(&[1.0, 2.0])),
            Err(Error::DimensionMismatch(1, 2))
        ));
    }

    #[test]
    fn inner_self_is_norm_squared() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..100 {
            let x = pt(&[rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5, rng.gen()]);
            let ip = inner(&x, &x).unwrap();
            assert!(ip >= 0.0);
            assert!((ip - x.norm() * x.norm()).abs() <= 1e-12);
        }
    }

    #[test]
    fn apply_diagonal_and_identity() {
        let a = SpdOperator::new(DMatrix::from_diagonal(&DVector::from_vec(vec![2.0, 1.0])), None)
            .unwrap();
        assert_eq!(
            a.apply(&pt(&[1.0, 1.0])).unwrap().coords().as_slice(),
            &[2.0, 1.0]
        );
        assert_eq!(
            a.apply(&pt(&[0.0, 0.0])).unwrap().coords().as_slice(),
            &[0.0, 0.0]
        );
        let id = SpdOperator::identity(3);
        let x = pt(&[1.0, -2.0, 3.0]);
        assert_eq!(id.apply(&x).unwrap(), x);
    }

    #[test]
    fn certify_diag_2_1() {
        let m = DMatrix::from_diagonal(&DVector::from_vec(vec![2.0, 1.0]));
        let (gamma, norm_upper, b_a) = certify_bounds(&m, None).unwrap();
        assert_eq!(gamma, 1.0);
        assert_eq!(norm_upper, 2.0);
        assert_eq!(b_a, 2);
    }

    #[test]
    fn certify_identity_d3() {
        let m = DMatrix::<f64>::identity(3, 3);
        let (gamma, norm_upper, b_a) = certify_bounds(&m, None).unwrap();
        assert_eq!(gamma, 1.0);
        // min(row-sum, Frobenius) = min(1, sqrt 3) = 1
        assert_eq!(norm_upper, 1.0);
        assert_eq!(b_a, 1);
    }

    #[test]
    fn certify_rejects_non_positive() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]);
        assert!(matches!(
            certify_bounds(&m, None),
            Err(Error::NotStronglyPositive(_))
        ));
        let asym = DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.0, 1.0]);
        assert!(matches!(certify_bounds(&asym, None), Err(Error::NotSymmetric)));
    }

    #[test]
    fn contraction_bound_diagonal() {
        let a = SpdOperator::new(DMatrix::from_diagonal(&DVector::from_vec(vec![2.0, 1.0])), None)
            .unwrap();
        let (ok, est) = a.check_contraction_bound(0.5).unwrap();
        assert!(ok);
        assert!((est - 0.5).abs() <= 1e-6, "estimate {est}");
        let id = SpdOperator::identity(2);
        let (ok, est) = id.check_contraction_bound(1.0).unwrap();
        assert!(ok);
        assert!(est.abs() <= 1e-8);
        assert!(a.check_contraction_bound(0.6).is_err());
    }

    fn random_spd(rng: &mut impl Rng, d: usize) -> DMatrix<f64> {
        // diagonally dominant symmetric matrix: Gershgorin bound positive
        let mut m = DMatrix::zeros(d, d);
        for i in 0..d {
            for j in (i + 1)..d {
                let v = rng.gen::<f64>() * 0.4 - 0.2;
                m[(i, j)] = v;
                m[(j, i)] = v;
            }
        }
        for i in 0..d {
            let off: f64 = (0..d).filter(|&j| j != i).map(|j| m[(i, j)].abs()).sum();
            m[(i, i)] = off + 0.2 + rng.gen::<f64>() * 2.0;
        }
        m
    }

    #[test]
    fn contraction_bound_random_spd() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        for _ in 0..50 {
            let d = rng.gen_range(2..=6);
            let a = SpdOperator::new(random_spd(&mut rng, d), None).unwrap();
            for frac in [0.0, 0.5, 1.0] {
                let alpha = frac / a.norm_upper();
                let (ok, est) = a.check_contraction_bound(alpha).unwrap();
                assert!(ok, "estimate {est} > 1 - {alpha}*{}", a.gamma());
            }
        }
    }

    #[test]
    fn sampled_operator_invariants() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let a = SpdOperator::new(random_spd(&mut rng, 4), None).unwrap();
        for _ in 0..200 {
            let x = pt(&[rng.gen::<f64>() - 0.5, rng.gen(), rng.gen(), rng.gen::<f64>() - 0.5]);
            let y = pt(&[rng.gen(), rng.gen::<f64>() - 0.5, rng.gen(), rng.gen()]);
            let ax = a.apply(&x).unwrap();
            let ay = a.apply(&y).unwrap();
            let nx2 = inner(&x, &x).unwrap();
            let axx = inner(&ax, &x).unwrap();
            // gamma ||x||^2 <= <Ax,x> <= normUpper ||x||^2
            assert!(axx >= a.gamma() * nx2 - 1e-9 * nx2.max(1.0));
            assert!(axx <= a.norm_upper() * nx2 + 1e-9 * nx2.max(1.0));
            // self-adjointness
            let lhs = inner(&ax, &y).unwrap();
            let rhs = inner(&x, &ay).unwrap();
            assert!((lhs - rhs).abs() <= 1e-10);
            // Hilbert identity ||x+y||^2 <= ||x||^2 + 2<y, x+y>
            let sum = HilbertPoint::from_dvector(x.coords() + y.coords());
            let lhs = inner(&sum, &sum).unwrap();
            let rhs = nx2 + 2.0 * inner(&y, &sum).unwrap();
            assert!(lhs <= rhs + 1e-10);
        }
    }
}
