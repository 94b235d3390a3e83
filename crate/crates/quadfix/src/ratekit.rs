//! Exact natural-number rate arithmetic with saturation, plus the
//! quantitative Xu-lemma combinators that the higher-level rate
//! calculators build on.
//!
//! All rate witnesses are total functions on exact naturals ([`BigUint`]).
//! Saturation happens at the combinator outputs: any value above the
//! configured cap collapses to [`ExtNat::Exceeded`], which absorbs every
//! subsequent operation.

use num::bigint::BigUint;
use num::{One, Zero};
use std::fmt;
use std::sync::Arc;

/// Default saturation cap for rate values.
pub const DEFAULT_CAP: u64 = 1_000_000_000;

/// An exact natural number, or the saturation sentinel.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ExtNat {
    Fin(BigUint),
    Exceeded,
}

impl ExtNat {
    pub fn fin(v: u64) -> Self {
        ExtNat::Fin(BigUint::from(v))
    }

    /// Clamps an exact value against the cap.
    pub fn from_big(v: BigUint, cap: &BigUint) -> Self {
        if v > *cap {
            ExtNat::Exceeded
        } else {
            ExtNat::Fin(v)
        }
    }

    pub fn is_exceeded(&self) -> bool {
        matches!(self, ExtNat::Exceeded)
    }

    pub fn as_big(&self) -> Option<&BigUint> {
        match self {
            ExtNat::Fin(v) => Some(v),
            ExtNat::Exceeded => None,
        }
    }

    pub fn to_u64(&self) -> Option<u64> {
        use num::ToPrimitive;
        self.as_big().and_then(|v| v.to_u64())
    }

    pub fn add(&self, other: &ExtNat, cap: &BigUint) -> ExtNat {
        match (self, other) {
            (ExtNat::Fin(a), ExtNat::Fin(b)) => ExtNat::from_big(a + b, cap),
            _ => ExtNat::Exceeded,
        }
    }

    pub fn mul(&self, other: &ExtNat, cap: &BigUint) -> ExtNat {
        match (self, other) {
            (ExtNat::Fin(a), ExtNat::Fin(b)) => ExtNat::from_big(a * b, cap),
            _ => ExtNat::Exceeded,
        }
    }

    /// Saturating subtraction of an exact value; Exceeded absorbs.
    pub fn sat_sub(&self, other: &BigUint) -> ExtNat {
        match self {
            ExtNat::Fin(a) => {
                if *a >= *other {
                    ExtNat::Fin(a - other)
                } else {
                    ExtNat::Fin(BigUint::zero())
                }
            }
            ExtNat::Exceeded => ExtNat::Exceeded,
        }
    }

    /// Max of two values; Exceeded absorbs.
    pub fn max_with(&self, other: &ExtNat) -> ExtNat {
        match (self, other) {
            (ExtNat::Fin(a), ExtNat::Fin(b)) => ExtNat::Fin(a.max(b).clone()),
            _ => ExtNat::Exceeded,
        }
    }
}

impl fmt::Display for ExtNat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExtNat::Fin(v) => write!(f, "{v}"),
            ExtNat::Exceeded => write!(f, "Exceeded"),
        }
    }
}

/// A monotone rate witness on the naturals. `None` means the witness is
/// undefined at the argument (tabulated witnesses past their range).
pub trait Rate1: Send + Sync {
    fn eval(&self, n: &BigUint) -> Option<BigUint>;
}

/// A two-argument witness (the product-form divergence condition).
pub trait Rate2: Send + Sync {
    fn eval(&self, m: &BigUint, k: &BigUint) -> Option<BigUint>;
}

impl<F> Rate1 for F
where
    F: Fn(&BigUint) -> Option<BigUint> + Send + Sync,
{
    fn eval(&self, n: &BigUint) -> Option<BigUint> {
        self(n)
    }
}

impl<F> Rate2 for F
where
    F: Fn(&BigUint, &BigUint) -> Option<BigUint> + Send + Sync,
{
    fn eval(&self, m: &BigUint, k: &BigUint) -> Option<BigUint> {
        self(m, k)
    }
}

/// `n -> max(scale*(n+1) - shift, 0)`; covers every closed-form witness of
/// the harmonic example schedule (`sigma1(k) = Jk` is `scale=shift=J`).
#[derive(Clone, Debug)]
pub struct AffineSat {
    pub scale: u64,
    pub shift: u64,
}

impl Rate1 for AffineSat {
    fn eval(&self, n: &BigUint) -> Option<BigUint> {
        let v = (n + 1u32) * self.scale;
        let shift = BigUint::from(self.shift);
        Some(if v >= shift { v - shift } else { BigUint::zero() })
    }
}

/// Tabulated witness; undefined past the table.
#[derive(Clone, Debug)]
pub struct RateTable(pub Vec<u64>);

impl Rate1 for RateTable {
    fn eval(&self, n: &BigUint) -> Option<BigUint> {
        use num::ToPrimitive;
        let i = n.to_usize()?;
        self.0.get(i).map(|&v| BigUint::from(v))
    }
}

/// The example-schedule product witness:
/// `(m,k) -> max((m+J-1)(k+1) - J, 0)`.
#[derive(Clone, Debug)]
pub struct ProdWitness {
    pub j: u64,
}

impl Rate2 for ProdWitness {
    fn eval(&self, m: &BigUint, k: &BigUint) -> Option<BigUint> {
        let j = BigUint::from(self.j);
        let base = m + &j;
        // (m+J-1)(k+1) - J, guarded at 0
        let v = (base - 1u32) * (k + 1u32);
        Some(if v >= j { v - j } else { BigUint::zero() })
    }
}

/// Shared handles used all over the rate calculators.
pub type Rate1Ref = Arc<dyn Rate1>;
pub type Rate2Ref = Arc<dyn Rate2>;

const E_LO: u64 = 2_718_281_828;
const E_HI: u64 = 2_718_281_829;
const E_DEN: u64 = 1_000_000_000;

/// Exact `ceil(ln m)` via rational interval bounds on `e`.
///
/// Finds the least `c` with `m <= e^c` certified by the lower endpoint and
/// confirms `m > e^(c-1)` by the upper endpoint; panics if the interval is
/// too coarse to decide (does not happen for any representable input).
pub fn ceil_ln(m: &BigUint) -> u64 {
    assert!(!m.is_zero(), "ceil_ln of zero");
    if m.is_one() {
        return 0;
    }
    let lo = BigUint::from(E_LO);
    let hi = BigUint::from(E_HI);
    let den = BigUint::from(E_DEN);
    let mut lo_pow = BigUint::one();
    let mut hi_pow = BigUint::one();
    let mut den_pow = BigUint::one();
    let mut c: u64 = 0;
    loop {
        c += 1;
        let prev_hi = hi_pow.clone();
        let prev_den = den_pow.clone();
        lo_pow *= &lo;
        hi_pow *= &hi;
        den_pow *= &den;
        // m <= e^c certified when m * den^c <= lo^c
        if m * &den_pow <= lo_pow {
            // m > e^(c-1) certified when m * den^(c-1) > hi^(c-1)
            assert!(
                m * &prev_den > prev_hi,
                "ceil_ln: interval bounds on e too coarse at m={m}"
            );
            return c;
        }
    }
}

pub fn ceil_ln_u64(m: u64) -> u64 {
    ceil_ln(&BigUint::from(m))
}

fn eval1(rate: &dyn Rate1, n: &BigUint, cap: &BigUint) -> ExtNat {
    match rate.eval(n) {
        Some(v) => ExtNat::from_big(v, cap),
        None => ExtNat::Exceeded,
    }
}

fn eval2(rate: &dyn Rate2, m: &BigUint, k: &BigUint, cap: &BigUint) -> ExtNat {
    match rate.eval(m, k) {
        Some(v) => ExtNat::from_big(v, cap),
        None => ExtNat::Exceeded,
    }
}

/// `Sigma0(k) = theta(psi(2k+1) + ceil(ln(2L(k+1)))) + 1`.
///
/// Convergence index for the recurrence `s_{n+1} <= (1-a_n)s_n + a_n b_n`
/// with divergence rate `theta` for `(a_n)`, limsup-rate `psi` for `(b_n)`
/// and upper bound `L >= sup s_n`.
pub fn sigma0(
    theta: &dyn Rate1,
    psi: &dyn Rate1,
    l_bound: u64,
    k: &BigUint,
    cap: &BigUint,
) -> ExtNat {
    assert!(l_bound >= 1);
    let psi_arg = k * 2u32 + 1u32;
    let psi_val = match psi.eval(&psi_arg) {
        Some(v) if v <= *cap => v,
        _ => return ExtNat::Exceeded,
    };
    let log_arg = (k + 1u32) * (2 * l_bound);
    let theta_arg = psi_val + ceil_ln(&log_arg);
    if theta_arg > *cap {
        return ExtNat::Exceeded;
    }
    eval1(theta, &theta_arg, cap).add(&ExtNat::fin(1), cap)
}

/// `Sigma0*(k) = A'(R(2k+1), 2D(k+1)-1) + 1` for the product-form witness.
pub fn sigma0_star(
    aprime: &dyn Rate2,
    r: &dyn Rate1,
    d: u64,
    k: &BigUint,
    cap: &BigUint,
) -> ExtNat {
    assert!(d >= 1);
    let r_arg = k * 2u32 + 1u32;
    let r_val = match r.eval(&r_arg) {
        Some(v) if v <= *cap => v,
        _ => return ExtNat::Exceeded,
    };
    let second = (k + 1u32) * (2 * d) - 1u32;
    eval2(aprime, &r_val, &second, cap).add(&ExtNat::fin(1), cap)
}

/// Finite-window variant: `sigma(k,n) = theta(n + ceil(ln(3L(k+1)))) + 1`.
///
/// Under the window premises on `(b_i)` and `(c_i)` the recurrence values
/// satisfy `s_i <= 1/(k+1)` for all `i` in `[sigma(k,n), q]`.
pub fn xumeta_sigma(
    theta: &dyn Rate1,
    l_bound: u64,
    k: &BigUint,
    n: &BigUint,
    cap: &BigUint,
) -> ExtNat {
    assert!(l_bound >= 1);
    let log_arg = (k + 1u32) * (3 * l_bound);
    let theta_arg = n + ceil_ln(&log_arg);
    if theta_arg > *cap {
        return ExtNat::Exceeded;
    }
    eval1(theta, &theta_arg, cap).add(&ExtNat::fin(1), cap)
}

/// Finite-window variant with the product witness:
/// `sigma(k,n) = A'(n, 3D(k+1)-1) + 1`.
pub fn xumeta_sigma_star(
    aprime: &dyn Rate2,
    d: u64,
    k: &BigUint,
    n: &BigUint,
    cap: &BigUint,
) -> ExtNat {
    assert!(d >= 1);
    let second = (k + 1u32) * (3 * d) - 1u32;
    eval2(aprime, n, &second, cap).add(&ExtNat::fin(1), cap)
}
