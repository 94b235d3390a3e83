//! Asymptotic-regularity rate calculators: Q, K, Psi, psi, the four Sigma
//! variants, Phi, phi-tilde, and the closed forms for the harmonic example
//! schedule.
//!
//! All arithmetic is exact on naturals; outputs saturate to
//! [`ExtNat::Exceeded`] at the configured cap. Outer subtractions are
//! saturating: the minimal-growth facts about divergence witnesses justify
//! nonnegativity for honest inputs, and saturation guards against user
//! witnesses that violate them.

use crate::ratekit::{ceil_ln, ExtNat, Rate1, Rate1Ref};
use crate::sched::{snap_ceil, Schedule};
use crate::{Error, Result};
use num::bigint::BigUint;
use num::{One, ToPrimitive, Zero};

/// The certified instance bounds `K, Q, b_A, b_U, b_p, gamma, l`.
#[derive(Clone, Debug)]
pub struct InstanceBounds {
    /// K >= max{||x_Q - p||, ||u - Ap||/gamma}, a natural >= 1.
    pub k_bound: u64,
    /// Q = max{sigma1(b_A - 1) - 1, 0}.
    pub q: u64,
    pub b_a: u64,
    pub b_u: u64,
    pub b_p: u64,
    pub gamma: f64,
    pub l: u64,
}

/// Which pair of schedule conditions backs the Cauchy-gap rate.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SigmaVariant {
    /// C3q + C2q: Sigma.
    C3C2,
    /// C3q + C2q*: Sigma*.
    C3C2Star,
    /// C4q + C2q: Sigma-hat.
    C4C2,
    /// C4q + C2q*: Sigma-hat*.
    C4C2Star,
}

impl SigmaVariant {
    pub fn uses_sigma2_star(self) -> bool {
        matches!(self, SigmaVariant::C3C2Star | SigmaVariant::C4C2Star)
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "c3c2" => Ok(SigmaVariant::C3C2),
            "c3c2star" => Ok(SigmaVariant::C3C2Star),
            "c4c2" => Ok(SigmaVariant::C4C2),
            "c4c2star" => Ok(SigmaVariant::C4C2Star),
            other => Err(Error::Config(format!("unknown variant '{other}'"))),
        }
    }
}

/// `Q = max{sigma1(b_A - 1) - 1, 0}`; after index Q every step size is
/// at most `1/||A||`.
pub fn compute_q(sigma1: &dyn Rate1, b_a: u64) -> Result<u64> {
    let v = sigma1
        .eval(&BigUint::from(b_a - 1))
        .ok_or(Error::MissingWitness("sigma1 undefined at b_A - 1"))?;
    let v = v
        .to_u64()
        .ok_or_else(|| Error::Config("sigma1(b_A - 1) overflows u64".into()))?;
    Ok(v.saturating_sub(1))
}

/// `K = ceil(max{||x_Q - p||, ||u - Ap||/gamma})`, floored at 1.
pub fn compute_k(xq_dist: f64, residual_over_gamma: f64) -> u64 {
    (xq_dist.max(residual_over_gamma).ceil() as u64).max(1)
}

fn bsub(a: BigUint, b: &BigUint) -> BigUint {
    if a >= *b {
        a - b
    } else {
        BigUint::zero()
    }
}

/// Continued-fraction reconstruction of an intended rational from a float.
/// Recovers 1/J, k/100 and similar inputs exactly; falls back to a fixed
/// denominator for anything genuinely irrational-looking.
fn rationalize(g: f64) -> (u64, u64) {
    assert!(g > 0.0 && g.is_finite());
    let mut x = g;
    let (mut p0, mut q0) = (0u128, 1u128);
    let (mut p1, mut q1) = (1u128, 0u128);
    for _ in 0..40 {
        let a = x.floor();
        if a >= 1e18 {
            break;
        }
        let ai = a as u128;
        let p = ai.saturating_mul(p1).saturating_add(p0);
        let q = ai.saturating_mul(q1).saturating_add(q0);
        if q > 1_000_000_000_000 {
            break;
        }
        p0 = p1;
        q0 = q1;
        p1 = p;
        q1 = q;
        if q1 > 0 {
            let approx = p1 as f64 / q1 as f64;
            if (approx - g).abs() <= 1e-12 * g.max(1.0) {
                return (p1 as u64, q1 as u64);
            }
        }
        let frac = x - a;
        if frac.abs() < 1e-15 {
            break;
        }
        x = 1.0 / frac;
    }
    // fallback: fixed-denominator rounding
    let den = 1_000_000_000_000u64;
    let num = (g * den as f64).round() as u64;
    let d = gcd(num.max(1), den);
    (num.max(1) / d, den / d)
}

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// Exact `ceil(n / gamma)` with gamma treated as the intended rational.
pub fn ceil_div_gamma(n: &BigUint, gamma: f64) -> BigUint {
    if gamma == 1.0 {
        return n.clone();
    }
    let (p, q) = rationalize(gamma);
    let p = BigUint::from(p);
    (n * q + &p - BigUint::one()) / p
}

fn opt_ext(v: Option<BigUint>) -> ExtNat {
    match v {
        Some(v) => ExtNat::Fin(v),
        None => ExtNat::Exceeded,
    }
}

/// Rate calculator over certified bounds and a schedule's witnesses.
pub struct RateCalc<'a> {
    pub bounds: &'a InstanceBounds,
    pub sched: &'a Schedule,
    pub cap: BigUint,
}

impl<'a> RateCalc<'a> {
    pub fn new(bounds: &'a InstanceBounds, sched: &'a Schedule, cap: u64) -> Self {
        RateCalc {
            bounds,
            sched,
            cap: BigUint::from(cap),
        }
    }

    fn cl(&self, v: BigUint) -> Option<BigUint> {
        if v > self.cap {
            None
        } else {
            Some(v)
        }
    }

    fn eval1(&self, rate: &Rate1Ref, arg: &BigUint) -> Option<BigUint> {
        rate.eval(arg).and_then(|v| self.cl(v))
    }

    /// `ceil((b_A + 1) K / gamma)` shared by the compositional and
    /// closed-form routes.
    pub fn step_coeff(&self) -> u64 {
        let b = self.bounds;
        snap_ceil((b.b_a + 1) as f64 * b.k_bound as f64 / b.gamma)
    }

    fn psi_upper_big(&self, k: &BigUint) -> Option<BigUint> {
        let b = self.bounds;
        let arg = self.cl((k + 1u32) * ((b.b_a + 1) * b.k_bound) - 1u32)?;
        let v = self.eval1(&self.sched.sigma1, &arg)?;
        Some(bsub(v, &BigUint::one()))
    }

    /// `Psi(k) = max{sigma1((b_A+1)K(k+1) - 1) - 1, 0}`, the rate of
    /// convergence of `||x_{n+1} - T_{n+1} x_n||`.
    pub fn psi_upper(&self, k: &BigUint) -> ExtNat {
        opt_ext(self.psi_upper_big(k))
    }

    fn psi_big(&self, k: &BigUint) -> Result<Option<BigUint>> {
        let b = self.bounds;
        let sigma3 = self
            .sched
            .sigma3
            .as_ref()
            .ok_or(Error::MissingWitness("sigma3"))?;
        let arg = (k + 1u32) * self.step_coeff() - 1u32;
        let Some(arg) = self.cl(arg) else {
            return Ok(None);
        };
        let Some(v) = self.eval1(sigma3, &arg) else {
            return Ok(None);
        };
        Ok(Some(bsub(v, &BigUint::from(b.q + 1))))
    }

    /// `psi(k) = max{sigma3(ceil((b_A+1)K/gamma)(k+1) - 1) - Q - 1, 0}`,
    /// the limsup-rate feeding the Cauchy-gap recurrences.
    pub fn psi(&self, k: &BigUint) -> Result<ExtNat> {
        Ok(opt_ext(self.psi_big(k)?))
    }

    fn sigma_c3c2_big(&self, k: &BigUint) -> Result<Option<BigUint>> {
        let b = self.bounds;
        let sigma2 = self
            .sched
            .sigma2
            .as_ref()
            .ok_or(Error::MissingWitness("sigma2"))?;
        let Some(psi) = self.psi_big(&(k * 2u32 + 1u32))? else {
            return Ok(None);
        };
        let la = ceil_ln(&((k + 1u32) * (4 * b.k_bound)));
        let inner = ceil_div_gamma(&(psi + la), b.gamma) + b.q + b.l + 1u32;
        let Some(inner) = self.cl(inner) else {
            return Ok(None);
        };
        let Some(v) = self.eval1(sigma2, &inner) else {
            return Ok(None);
        };
        Ok(Some(bsub(v, &BigUint::from(b.l))))
    }

    fn sigma_c3c2star_big(&self, k: &BigUint) -> Result<Option<BigUint>> {
        let b = self.bounds;
        let w = self
            .sched
            .sigma2_star
            .as_ref()
            .ok_or(Error::MissingWitness("sigma2*"))?;
        let Some(psi) = self.psi_big(&(k * 2u32 + 1u32))? else {
            return Ok(None);
        };
        let second = (k + 1u32) * (4 * b.k_bound) - 1u32;
        let Some(v) = w.eval(&psi, &second).and_then(|v| self.cl(v)) else {
            return Ok(None);
        };
        Ok(Some(bsub(v, &BigUint::from(b.l)).max(BigUint::from(b.q + 1))))
    }

    /// `N_4(k) = sigma4(2(b_A+1)K(k+1) - 1)`.
    pub fn n4_big(&self, k: &BigUint) -> Result<Option<BigUint>> {
        let b = self.bounds;
        let sigma4 = self
            .sched
            .sigma4
            .as_ref()
            .ok_or(Error::MissingWitness("sigma4"))?;
        let arg = (k + 1u32) * (2 * (b.b_a + 1) * b.k_bound) - 1u32;
        let Some(arg) = self.cl(arg) else {
            return Ok(None);
        };
        Ok(self.eval1(sigma4, &arg))
    }

    fn sigma_c4c2_big(&self, k: &BigUint) -> Result<Option<BigUint>> {
        let b = self.bounds;
        let sigma2 = self
            .sched
            .sigma2
            .as_ref()
            .ok_or(Error::MissingWitness("sigma2"))?;
        let Some(n4) = self.n4_big(k)? else {
            return Ok(None);
        };
        // ceil(ln(4K(k+1)) / gamma); the argument is astronomically past
        // the cap long before f64 precision matters
        let x = ((k + 1u32) * (4 * b.k_bound)).to_f64().unwrap_or(f64::INFINITY);
        if !x.is_finite() {
            return Ok(None);
        }
        let lg = snap_ceil(x.ln() / b.gamma);
        let inner = n4 + b.l + 1u64 + lg;
        let Some(inner) = self.cl(inner) else {
            return Ok(None);
        };
        Ok(self.eval1(sigma2, &inner))
    }

    fn sigma_c4c2star_big(&self, k: &BigUint) -> Result<Option<BigUint>> {
        let b = self.bounds;
        let w = self
            .sched
            .sigma2_star
            .as_ref()
            .ok_or(Error::MissingWitness("sigma2*"))?;
        let Some(n4) = self.n4_big(k)? else {
            return Ok(None);
        };
        let second = (k + 1u32) * (4 * b.k_bound) - 1u32;
        Ok(w.eval(&(n4 + 1u32), &second).and_then(|v| self.cl(v)))
    }

    fn sigma_variant_big(&self, variant: SigmaVariant, k: &BigUint) -> Result<Option<BigUint>> {
        match variant {
            SigmaVariant::C3C2 => self.sigma_c3c2_big(k),
            SigmaVariant::C3C2Star => self.sigma_c3c2star_big(k),
            SigmaVariant::C4C2 => self.sigma_c4c2_big(k),
            SigmaVariant::C4C2Star => self.sigma_c4c2star_big(k),
        }
    }

    /// The Cauchy-gap rate for `||x_{n+l} - x_n||` under the chosen
    /// condition pair.
    pub fn sigma_gap(&self, variant: SigmaVariant, k: &BigUint) -> Result<ExtNat> {
        Ok(opt_ext(self.sigma_variant_big(variant, k)?))
    }

    fn phi_big(&self, variant: SigmaVariant, k: &BigUint) -> Result<Option<BigUint>> {
        let b = self.bounds;
        let kk = (k + 1u32) * (b.l + 1) - 1u32;
        let Some(kk) = self.cl(kk) else {
            return Ok(None);
        };
        let Some(s) = self.sigma_variant_big(variant, &kk)? else {
            return Ok(None);
        };
        let Some(p) = self.psi_upper_big(&kk) else {
            return Ok(None);
        };
        Ok(Some(s.max(p)))
    }

    /// `Phi(k) = max{Sigma-variant((l+1)(k+1)-1), Psi((l+1)(k+1)-1)}`,
    /// the rate of `(T~_n)`-asymptotic regularity.
    pub fn phi(&self, variant: SigmaVariant, k: &BigUint) -> Result<ExtNat> {
        Ok(opt_ext(self.phi_big(variant, k)?))
    }

    /// `phi~(k) = Phi(tau(k))`, the common rate of `T_i`-asymptotic
    /// regularity for every i < l.
    pub fn phi_tilde(&self, variant: SigmaVariant, tau: &Rate1Ref, k: &BigUint) -> Result<ExtNat> {
        let Some(t) = tau.eval(k).and_then(|v| self.cl(v)) else {
            return Ok(ExtNat::Exceeded);
        };
        self.phi(variant, &t)
    }
}

/// The closed forms for the harmonic example schedule
/// `alpha_n = 1/(gamma(n+J))`: returns `(Phi*, Phi~*)`, the C3q+C2q* and
/// C4q+C2q* asymptotic-regularity rates as single polynomial expressions.
pub fn example_closed_forms(
    j: u64,
    l: u64,
    k_bound: u64,
    b_a: u64,
    gamma: f64,
    k: &BigUint,
    cap: u64,
) -> (ExtNat, ExtNat) {
    let cap = BigUint::from(cap);
    let cl = |v: BigUint| if v > cap { None } else { Some(v) };
    let q = (j * (b_a - 1)).saturating_sub(1);
    let coeff = snap_ceil((b_a + 1) as f64 * k_bound as f64 / gamma);
    // psi(k) = max{l coeff (k+1) - J - Q - 1, 0}
    let psi = |kk: &BigUint| -> BigUint {
        bsub((kk + 1u32) * (l * coeff), &BigUint::from(j + q + 1))
    };
    let lk = (k + 1u32) * (l + 1); // (l+1)(k+1)
    let phi_star = (|| {
        // 4K(l+1)(k+1)(psi(2(l+1)(k+1)-1) + J - 1) - J - l
        let inner_arg = &lk * 2u32 - 1u32;
        let p = psi(&inner_arg);
        let t1 = bsub(
            &lk * (4 * k_bound) * (p + (j - 1)),
            &BigUint::from(j + l),
        );
        // J((b_A+1)K(l+1)(k+1) - 1) - 1
        let t2 = bsub((&lk * ((b_a + 1) * k_bound) - 1u32) * j, &BigUint::one());
        let t3 = BigUint::from(q + 1);
        cl(t1.max(t2).max(t3))
    })();
    let phi_tilde_star = (|| {
        // 4K(2lJ(b_A+1)K(l+1)(k+1) - 1)(l+1)(k+1) - J
        let inner = &lk * (2 * l * j * (b_a + 1) * k_bound) - 1u32;
        cl(bsub(inner * &lk * (4 * k_bound), &BigUint::from(j)))
    })();
    (opt_ext(phi_star), opt_ext(phi_tilde_star))
}
