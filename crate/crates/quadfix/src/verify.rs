//! Empirical validation harness: asymptotic-regularity and Cauchy-gap
//! sweeps against computed rates, direct metastability search, exact
//! rational oracles for the Xu-lemma combinators, and tau falsification.

use crate::asreg::{RateCalc, SigmaVariant};
use crate::engine::{ProblemInstance, Trajectory, Walker};
use crate::hilbert::HilbertPoint;
use crate::meta::Counterfunction;
use crate::nonexp::CyclicFamily;
use crate::ratekit::{
    sigma0, sigma0_star, xumeta_sigma, xumeta_sigma_star, AffineSat, ExtNat, ProdWitness,
};
use crate::report::Report;
use crate::{Error, Result};
use nalgebra::DVector;
use num::bigint::BigUint;
use num::rational::BigRational;
use num::{BigInt, One, ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::collections::BTreeSet;

/// All residual checks carry this absolute slack: the underlying inequalities
/// are exact over the reals and slack only absorbs accumulated rounding.
pub const CHECK_SLACK: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum CheckKind {
    /// `||x_n - T~_n x_n|| <= 1/(k+1)`.
    Tilde,
    /// `max_i ||x_n - T_i x_n|| <= 1/(k+1)`.
    Individual,
    /// `||x_{n+l} - x_n|| <= 1/(k+1)`.
    Gap,
}

impl CheckKind {
    fn name(self) -> &'static str {
        match self {
            CheckKind::Tilde => "asreg-tilde",
            CheckKind::Individual => "asreg-individual",
            CheckKind::Gap => "cauchy-gap",
        }
    }
}

#[derive(Clone, Copy, Debug)]
pub struct Check {
    pub kind: CheckKind,
    pub k: u64,
    pub n: u64,
}

/// Evaluates residual checks in one streaming pass over the trajectory.
pub fn run_checks(inst: &ProblemInstance, checks: &[Check]) -> Result<Report> {
    let l = inst.family.len() as u64;
    // a gap check at n reads the trajectory at n and n + l
    let mut ordered: Vec<(u64, Check)> = checks
        .iter()
        .map(|c| {
            let at = match c.kind {
                CheckKind::Gap => c.n + l,
                _ => c.n,
            };
            (at, *c)
        })
        .collect();
    ordered.sort_by_key(|(at, c)| (*at, c.kind, c.k, c.n));
    let mut report = Report::default();
    let mut walker = Walker::new(inst);
    for (at, c) in ordered {
        walker.advance_to(at)?;
        let lhs = match c.kind {
            CheckKind::Tilde => walker.residual_tilde(),
            CheckKind::Individual => (0..inst.family.len())
                .map(|i| walker.residual_i(i))
                .fold(0.0f64, f64::max),
            CheckKind::Gap => {
                let old = walker
                    .back(l as usize)
                    .ok_or_else(|| Error::Config("gap check before index l".into()))?;
                (walker.current() - old).norm()
            }
        };
        let rhs = 1.0 / (c.k as f64 + 1.0);
        report.push(c.kind.name(), c.k, c.n, lhs, rhs, lhs <= rhs + CHECK_SLACK);
    }
    Ok(report)
}

fn sample_indices(rate: u64, budget: u64) -> BTreeSet<u64> {
    let mut set = BTreeSet::new();
    set.insert(rate);
    if budget > rate {
        for j in 1..=8u64 {
            set.insert(rate + (budget - rate) * j / 8);
        }
    }
    set
}

/// For each `k <= k_max` with a finite rate within the budget, checks the
/// `T~`-residual at `n = Phi(k)` and at 8 sampled later indices, and the
/// individual residuals at `n = phi~(k)` likewise. Out-of-budget ranks are
/// counted as skipped, never as failures.
pub fn verify_asreg(
    inst: &ProblemInstance,
    variant: SigmaVariant,
    k_max: u64,
    budget: u64,
) -> Result<Report> {
    let calc = RateCalc::new(&inst.bounds, &inst.schedule, budget);
    let tau = match inst.family.tau_rate() {
        Ok(t) => Some(t),
        Err(Error::TauRequired) => None,
        Err(e) => return Err(e),
    };
    let mut checks = Vec::new();
    let mut report = Report::default();
    for k in 0..=k_max {
        let kb = BigUint::from(k);
        match calc.phi(variant, &kb)?.to_u64() {
            Some(rate) => {
                for n in sample_indices(rate, budget) {
                    checks.push(Check {
                        kind: CheckKind::Tilde,
                        k,
                        n,
                    });
                }
            }
            None => report.skip(),
        }
        match &tau {
            Some(t) => match calc.phi_tilde(variant, t, &kb)?.to_u64() {
                Some(rate) => {
                    for n in sample_indices(rate, budget) {
                        checks.push(Check {
                            kind: CheckKind::Individual,
                            k,
                            n,
                        });
                    }
                }
                None => report.skip(),
            },
            None => report.skip(),
        }
    }
    report.merge(run_checks(inst, &checks)?);
    Ok(report)
}

/// The gap analogue of [`verify_asreg`]: `||x_{n+l} - x_n||` at the
/// Sigma-variant rate and 8 sampled later indices.
pub fn verify_cauchy_gap(
    inst: &ProblemInstance,
    variant: SigmaVariant,
    k_max: u64,
    budget: u64,
) -> Result<Report> {
    let calc = RateCalc::new(&inst.bounds, &inst.schedule, budget);
    let mut checks = Vec::new();
    let mut report = Report::default();
    for k in 0..=k_max {
        match calc.sigma_gap(variant, &BigUint::from(k))?.to_u64() {
            Some(rate) => {
                for n in sample_indices(rate, budget) {
                    checks.push(Check {
                        kind: CheckKind::Gap,
                        k,
                        n,
                    });
                }
            }
            None => report.skip(),
        }
    }
    report.merge(run_checks(inst, &checks)?);
    Ok(report)
}

const MAX_WINDOW_END: u64 = 100_000_000;

/// Scans `N = 0, 1, ...` up to the budget for the least N with
/// `||x_i - x_j|| <= 1/(k+1)` for all `i, j` in `[N, f~(N)]` (the window
/// diameter, evaluated as the exact pairwise maximum).
pub fn find_metastable_n(
    inst: &ProblemInstance,
    k: u64,
    f: &Counterfunction,
    budget: u64,
) -> Result<Option<u64>> {
    let ft = f.monotonized();
    let thr = 1.0 / (k as f64 + 1.0) + CHECK_SLACK;
    let mut traj = Trajectory::new(inst);
    let mut last_fail: Option<(u64, u64)> = None;
    'outer: for n in 0..=budget {
        let end = ft
            .eval(&BigUint::from(n))
            .to_u64()
            .ok_or(Error::BudgetExhausted(budget))?
            .max(n);
        if end > MAX_WINDOW_END {
            return Err(Error::BudgetExhausted(end));
        }
        traj.ensure(end)?;
        let dist = |i: u64, j: u64| {
            (traj.get(i).unwrap() - traj.get(j).unwrap()).norm()
        };
        if let Some((i, j)) = last_fail {
            if i >= n && j <= end && dist(i, j) > thr {
                continue 'outer;
            }
        }
        for i in n..end {
            for j in (i + 1)..=end {
                if dist(i, j) > thr {
                    last_fail = Some((i, j));
                    continue 'outer;
                }
            }
        }
        return Ok(Some(n));
    }
    Ok(None)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Combinator {
    Sigma0,
    Sigma0Star,
    XuMetaSigma,
    XuMetaSigmaStar,
}

fn rat(n: u64, d: u64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

fn rat_thresh(k: u64) -> BigRational {
    rat(1, k + 1)
}

/// Approximate quotient of two huge naturals, for reporting only.
fn big_ratio_f64(num: &BigUint, den: &BigUint) -> f64 {
    let shift = den.bits().saturating_sub(64);
    let n = (num >> shift).to_f64().unwrap_or(f64::NAN);
    let d = (den >> shift).to_f64().unwrap_or(f64::NAN);
    n / d
}

/// Runs `cases` randomized exact-rational recurrences in their worst case
/// (premises as equalities) and asserts each combinator's conclusion at
/// the returned index or window. One report row per case: `lhs` is the
/// largest checked value, `pass` is the exact rational comparison.
pub fn xu_lemma_oracle(comb: Combinator, cases: u32, seed: u64, k_max: u64) -> Report {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut report = Report::default();
    let cap = BigUint::from(crate::ratekit::DEFAULT_CAP);
    for case in 0..cases {
        let k: u64 = rng.gen_range(0..=k_max);
        match comb {
            Combinator::Sigma0 => {
                // a_n = 1/den constant, b_n = B/(n+1), s_0 <= L
                let den: u64 = rng.gen_range(2..=5);
                let b_num: u64 = rng.gen_range(1..=3);
                let l_bound: u64 = rng.gen_range(1..=3);
                let s0 = rat(rng.gen_range(0..=l_bound * 10), 10);
                let theta = AffineSat {
                    scale: den,
                    shift: den,
                };
                let psi = AffineSat {
                    scale: b_num,
                    shift: 1,
                };
                let idx = match sigma0(&theta, &psi, l_bound, &BigUint::from(k), &cap) {
                    ExtNat::Fin(v) => v.to_u64().unwrap(),
                    ExtNat::Exceeded => {
                        report.skip();
                        continue;
                    }
                };
                let a = rat(1, den);
                let mut s = s0;
                let mut worst = BigRational::zero();
                let mut pass = true;
                for n in 0..=(idx + 20) {
                    if n >= idx {
                        worst = worst.clone().max(s.clone());
                        pass &= s <= rat_thresh(k);
                    }
                    let b = rat(b_num, n + 1);
                    s = (BigRational::one() - &a) * s + &a * b;
                }
                report.push(
                    "xu-sigma0",
                    k,
                    idx,
                    worst.to_f64().unwrap_or(f64::NAN),
                    1.0 / (k as f64 + 1.0),
                    pass,
                );
            }
            Combinator::Sigma0Star => {
                // a_n = 1/(n+J), r_n = B/(n+1), s_0 <= D
                let j: u64 = rng.gen_range(1..=3);
                let b_num: u64 = rng.gen_range(1..=3);
                let s0_tenths: u64 = rng.gen_range(0..=30);
                let d = (s0_tenths / 10 + 1).max(b_num);
                let aprime = ProdWitness { j };
                let r = AffineSat {
                    scale: b_num,
                    shift: 1,
                };
                let idx = match sigma0_star(&aprime, &r, d, &BigUint::from(k), &cap) {
                    ExtNat::Fin(v) => v.to_u64().unwrap(),
                    ExtNat::Exceeded => {
                        report.skip();
                        continue;
                    }
                };
                // multiplying the recurrence through by (n+J) telescopes it:
                // t_n = (n+J-1) s_n satisfies t_n = t_{n-1} + B/n, so the
                // whole run stays in unreduced integer fractions and avoids
                // a gcd per step
                let mut t_num = BigUint::from((j - 1) * s0_tenths);
                let mut t_den = BigUint::from(10u32);
                let mut worst = 0.0f64;
                let mut pass = s0_tenths <= 10 * d;
                for n in 1..=(idx + 20) {
                    t_num = t_num * n + b_num * &t_den;
                    t_den *= n;
                    let scale = (n + j - 1) * &t_den;
                    pass &= t_num <= &scale * d;
                    if n >= idx {
                        worst = worst.max(big_ratio_f64(&t_num, &scale));
                        pass &= &t_num * (k + 1) <= scale;
                    }
                }
                report.push(
                    "xu-sigma0-star",
                    k,
                    idx,
                    worst,
                    1.0 / (k as f64 + 1.0),
                    pass,
                );
            }
            Combinator::XuMetaSigma | Combinator::XuMetaSigmaStar => {
                // worst-case window recurrence: b_i and c_i at their premise
                // ceilings exactly, s_0 at the declared bound
                let l_bound: u64 = rng.gen_range(1..=3);
                let n0: u64 = rng.gen_range(0..=5);
                let (name, den, j, sig) = if comb == Combinator::XuMetaSigma {
                    let den: u64 = rng.gen_range(2..=5);
                    let theta = AffineSat {
                        scale: den,
                        shift: den,
                    };
                    let sig =
                        xumeta_sigma(&theta, l_bound, &BigUint::from(k), &BigUint::from(n0), &cap);
                    ("xu-meta-sigma", den, 0u64, sig)
                } else {
                    let j: u64 = rng.gen_range(1..=3);
                    let aprime = ProdWitness { j };
                    let sig = xumeta_sigma_star(
                        &aprime,
                        l_bound,
                        &BigUint::from(k),
                        &BigUint::from(n0),
                        &cap,
                    );
                    ("xu-meta-sigma-star", 0u64, j, sig)
                };
                let sig = match sig {
                    ExtNat::Fin(v) => v.to_u64().unwrap(),
                    ExtNat::Exceeded => {
                        report.skip();
                        continue;
                    }
                };
                let q = sig + rng.gen_range(0..=10u64);
                let b = rat(1, 3 * (k + 1));
                let c = rat(1, 3 * (k + 1) * (q + 1));
                let mut s = rat(l_bound, 1);
                let mut worst = BigRational::zero();
                let mut pass = true;
                for i in 0..=q {
                    pass &= s <= rat(l_bound, 1) + rat(1, 2); // drift stays below the bound slack
                    if i >= sig {
                        worst = worst.clone().max(s.clone());
                        pass &= s <= rat_thresh(k);
                    }
                    let a = if comb == Combinator::XuMetaSigma {
                        rat(1, den)
                    } else {
                        rat(1, i + j)
                    };
                    s = (BigRational::one() - &a) * s + &a * &b + &c;
                }
                report.push(
                    name,
                    k,
                    sig,
                    worst.to_f64().unwrap_or(f64::NAN),
                    1.0 / (k as f64 + 1.0),
                    pass,
                );
            }
        }
        let _ = case;
    }
    report
}

/// A sampled violation of the tau-modulus implication.
#[derive(Clone, Debug)]
pub struct TauCounterexample {
    pub x: HilbertPoint,
    pub m: u64,
    pub k: u64,
    /// `||x - T~_m x||`, small enough to trigger the premise.
    pub composite_residual: f64,
    /// The offending `||x - T_i x||`, at least `1/(k+1)`.
    pub individual_residual: f64,
}

/// Samples points of the K-ball around p and searches for a violation of
/// "`||x - T~_m x|| <= 1/(tau(k)+1)` implies `||x - T_i x|| < 1/(k+1)` for
/// every i". Finding none is evidence, not certification.
pub fn falsify_tau(
    family: &CyclicFamily,
    k_bound: u64,
    samples: usize,
    seed: u64,
    m_max: u64,
    k_max: u64,
) -> Result<Option<TauCounterexample>> {
    let tau = family.tau_rate()?;
    let d = family.p().dim();
    let p = family.p().coords();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..samples {
        let dir = DVector::from_fn(d, |_, _| rng.gen_range(-1.0..1.0));
        let norm = dir.norm();
        let dir = if norm > 0.0 { dir / norm } else { dir };
        let x = p + dir * rng.gen_range(0.0..=k_bound as f64);
        for k in 0..=k_max {
            let tk = tau
                .eval(&BigUint::from(k))
                .and_then(|v| v.to_u64())
                .ok_or(Error::Config("tau value out of range".into()))?;
            let premise_thr = 1.0 / (tk as f64 + 1.0);
            let goal_thr = 1.0 / (k as f64 + 1.0);
            for m in 0..=m_max {
                let comp = (&x - family.tilde_apply_vec(m, &x)).norm();
                if comp > premise_thr {
                    continue;
                }
                for t in family.maps() {
                    let indiv = (&x - t.apply_vec(&x)).norm();
                    if indiv >= goal_thr {
                        return Ok(Some(TauCounterexample {
                            x: HilbertPoint::from_dvector(x.clone()),
                            m,
                            k,
                            composite_residual: comp,
                            individual_residual: indiv,
                        }));
                    }
                }
            }
        }
    }
    Ok(None)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hilbert::SpdOperator;
    use crate::nonexp::NonexpansiveOp;
    use crate::sched::Schedule;
    use nalgebra::DMatrix;
    use std::sync::Arc;

    fn identity_instance() -> ProblemInstance {
        let a = SpdOperator::new(DMatrix::from_element(1, 1, 1.0), None).unwrap();
        let u = HilbertPoint::new(vec![0.5]).unwrap();
        let family = CyclicFamily::new(
            vec![NonexpansiveOp::Identity],
            HilbertPoint::zeros(1),
            None,
        )
        .unwrap();
        let schedule = Schedule::example(1.0, 1).unwrap();
        ProblemInstance::new(a, u, family, schedule, HilbertPoint::zeros(1), None).unwrap()
    }

    /// A = [1], T = projection onto [1, inf), u = 2, x0 = 0.
    fn halfline_instance() -> ProblemInstance {
        let a = SpdOperator::new(DMatrix::from_element(1, 1, 1.0), None).unwrap();
        let u = HilbertPoint::new(vec![2.0]).unwrap();
        let family = CyclicFamily::new(
            vec![NonexpansiveOp::halfspace(vec![-1.0], -1.0).unwrap()],
            HilbertPoint::new(vec![1.0]).unwrap(),
            None,
        )
        .unwrap();
        let schedule = Schedule::example(1.0, 1).unwrap();
        ProblemInstance::new(a, u, family, schedule, HilbertPoint::zeros(1), None).unwrap()
    }

    #[test]
    fn asreg_identity_family_trivially_passes() {
        let inst = identity_instance();
        let report = verify_asreg(&inst, SigmaVariant::C3C2Star, 5, 100_000).unwrap();
        assert!(report.all_pass());
        assert!(report.summary().passes > 0);
    }

    #[test]
    fn asreg_halfline_passes() {
        let inst = halfline_instance();
        let report = verify_asreg(&inst, SigmaVariant::C4C2Star, 24, 10_000_000).unwrap();
        assert!(
            report.all_pass(),
            "failures: {:?}",
            report.failures().take(3).collect::<Vec<_>>()
        );
        assert_eq!(report.summary().skipped, 0);
    }

    #[test]
    fn cauchy_gap_passes_and_matches_closed_form() {
        let inst = identity_instance();
        let report = verify_cauchy_gap(&inst, SigmaVariant::C4C2Star, 10, 1_000_000).unwrap();
        assert!(report.all_pass());
        // gap for the closed-form instance is 0.5/((n+1)(n+2))
        let checks: Vec<Check> = (0..50)
            .map(|n| Check {
                kind: CheckKind::Gap,
                k: 0,
                n,
            })
            .collect();
        let r = run_checks(&inst, &checks).unwrap();
        for row in &r.rows {
            let n = row.index as f64;
            let expect = 0.5 / ((n + 1.0) * (n + 2.0));
            assert!((row.lhs - expect).abs() < 1e-12);
        }
    }

    #[test]
    fn harness_flags_corrupted_rate() {
        // a rate shrunk to 0 claims the residual is small immediately; on
        // the half-line instance x_0 = 0 has residual 1 > 1/2
        let inst = halfline_instance();
        let report = run_checks(
            &inst,
            &[Check {
                kind: CheckKind::Tilde,
                k: 1,
                n: 0,
            }],
        )
        .unwrap();
        assert_eq!(report.summary().failures, 1);
    }

    #[test]
    fn budget_exhaustion_skips_not_fails() {
        let inst = halfline_instance();
        let report = verify_asreg(&inst, SigmaVariant::C4C2Star, 24, 1_000).unwrap();
        assert!(report.all_pass());
        assert!(report.summary().skipped > 0);
    }

    #[test]
    fn metastable_search_closed_form() {
        // x_n = n/(2(n+1)), k = 9, f(n) = n + 10: window [2,12] spans
        // 5/39 > 0.1 but [3,13] spans 5/56 <= 0.1
        let inst = identity_instance();
        let f = Counterfunction::Affine { a: 1, b: 10 };
        let n = find_metastable_n(&inst, 9, &f, 1_000).unwrap();
        assert_eq!(n, Some(3));
        // k = 0 with diameter <= 1: N = 0
        let n0 = find_metastable_n(&inst, 0, &f, 1_000).unwrap();
        assert_eq!(n0, Some(0));
        // doubling counterfunction also resolves
        let f2 = Counterfunction::Affine { a: 2, b: 0 };
        let n2 = find_metastable_n(&inst, 9, &f2, 100_000).unwrap();
        assert!(n2.is_some());
    }

    #[test]
    fn oracle_all_combinators_clean() {
        for comb in [
            Combinator::Sigma0,
            Combinator::Sigma0Star,
            Combinator::XuMetaSigma,
            Combinator::XuMetaSigmaStar,
        ] {
            let report = xu_lemma_oracle(comb, 100, 12345, 6);
            assert!(
                report.all_pass(),
                "{comb:?} failures: {:?}",
                report.failures().take(3).collect::<Vec<_>>()
            );
            assert_eq!(report.summary().skipped, 0, "{comb:?}");
        }
    }

    #[test]
    fn oracle_deterministic() {
        let a = xu_lemma_oracle(Combinator::Sigma0, 20, 7, 4).to_csv();
        let b = xu_lemma_oracle(Combinator::Sigma0, 20, 7, 4).to_csv();
        assert_eq!(a, b);
    }

    #[test]
    fn tau_identity_has_no_counterexample() {
        let family = CyclicFamily::new(
            vec![NonexpansiveOp::ball(vec![0.0, 0.0], 1.0).unwrap()],
            HilbertPoint::zeros(2),
            None,
        )
        .unwrap();
        let found = falsify_tau(&family, 3, 200, 99, 5, 5).unwrap();
        assert!(found.is_none());
    }

    #[test]
    fn tau_zero_constant_is_falsified() {
        // two halfspace projections; tau(k) = 0 claims any point with
        // composite residual <= 1 has every individual residual < 1/(k+1)
        let tau = Arc::new(|_: &BigUint| Some(BigUint::zero()));
        let family = CyclicFamily::new(
            vec![
                NonexpansiveOp::halfspace(vec![1.0, 0.0], 0.0).unwrap(),
                NonexpansiveOp::halfspace(vec![0.0, 1.0], 0.0).unwrap(),
            ],
            HilbertPoint::zeros(2),
            Some(tau),
        )
        .unwrap();
        let found = falsify_tau(&family, 3, 500, 4, 3, 5).unwrap();
        let ce = found.expect("expected a counterexample");
        assert!(ce.composite_residual <= 1.0);
        assert!(ce.individual_residual >= 1.0 / (ce.k as f64 + 1.0));
    }
}
