//! Step-size schedules `(alpha_n) in (0,1]` carrying machine-checkable
//! rate witnesses for the quantitative conditions C1q-C4q and C2q*,
//! including the worked harmonic schedule `alpha_n = 1/(gamma(n+J))`.

use crate::ratekit::{AffineSat, ProdWitness, Rate1Ref, Rate2Ref, RateTable};
use crate::report::Report;
use crate::{Error, Result};
use num::BigUint;
use num::ToPrimitive;
use std::sync::Arc;

#[derive(Clone, Debug)]
pub enum AlphaFn {
    /// `alpha_n = 1/(gamma(n+J))`.
    Harmonic { gamma: f64, j: u64 },
    /// Tabulated step sizes; exhausted past the table.
    Table(Vec<f64>),
}

/// Integer ceiling with a snap window: values within 1e-9 of an integer
/// are taken exactly. Rate formulas divide naturals by gamma, and when
/// gamma = 1/J the quotient is an exact integer that float division may
/// land on from either side.
pub fn snap_ceil(x: f64) -> u64 {
    let r = x.round();
    if (x - r).abs() <= 1e-9 {
        r as u64
    } else {
        x.ceil() as u64
    }
}

/// A step-size schedule with its rate witnesses. `sigma2`/`sigma2_star`
/// witness divergence (C2q / C2q*), `sigma3`/`sigma4` the step condition
/// (C3q / C4q); downstream rate selection dispatches on availability.
#[derive(Clone)]
pub struct Schedule {
    pub alpha_fn: AlphaFn,
    pub sigma1: Rate1Ref,
    pub sigma2: Option<Rate1Ref>,
    pub sigma2_star: Option<Rate2Ref>,
    pub sigma3: Option<Rate1Ref>,
    pub sigma4: Option<Rate1Ref>,
    pub l: u64,
    pub gamma: f64,
    /// `J = ceil(1/gamma)` when this is the harmonic example schedule.
    pub j: Option<u64>,
}

impl Schedule {
    /// The worked example `alpha_n = 1/(gamma(n+J))`, `J = ceil(1/gamma)`,
    /// shipped with its four closed-form witnesses:
    /// sigma1(k) = Jk, sigma2*(m,k) = max{(m+J-1)(k+1)-J, 0},
    /// sigma3(k) = max{l(k+1)-J, 0}, sigma4(k) = max{lJ(k+1)-J-1, 0}.
    /// No C2q divergence witness is shipped: for the harmonic schedule any
    /// sigma2 grows exponentially, which is exactly what C2q* avoids.
    pub fn example(gamma: f64, l: u64) -> Result<Self> {
        if !(gamma > 0.0 && gamma <= 1.0) {
            return Err(Error::GammaOutOfRange(gamma));
        }
        let j = snap_ceil(1.0 / gamma).max(1);
        Ok(Schedule {
            alpha_fn: AlphaFn::Harmonic { gamma, j },
            sigma1: Arc::new(AffineSat { scale: j, shift: j }),
            sigma2: None,
            sigma2_star: Some(Arc::new(ProdWitness { j })),
            sigma3: Some(Arc::new(AffineSat { scale: l, shift: j })),
            sigma4: Some(Arc::new(AffineSat {
                scale: l * j,
                shift: j + 1,
            })),
            l,
            gamma,
            j: Some(j),
        })
    }

    /// A fully custom schedule from tabulated steps and explicit witnesses.
    pub fn custom(
        alpha: Vec<f64>,
        sigma1: Rate1Ref,
        sigma2: Option<Rate1Ref>,
        sigma2_star: Option<Rate2Ref>,
        sigma3: Option<Rate1Ref>,
        sigma4: Option<Rate1Ref>,
        l: u64,
        gamma: f64,
    ) -> Result<Self> {
        for (n, &a) in alpha.iter().enumerate() {
            if !(a > 0.0 && a <= 1.0) {
                return Err(Error::AlphaRange(n as u64));
            }
        }
        Ok(Schedule {
            alpha_fn: AlphaFn::Table(alpha),
            sigma1,
            sigma2,
            sigma2_star,
            sigma3,
            sigma4,
            l,
            gamma,
            j: None,
        })
    }

    pub fn alpha(&self, n: u64) -> Result<f64> {
        match &self.alpha_fn {
            AlphaFn::Harmonic { gamma, j } => Ok(1.0 / (gamma * (n as f64 + *j as f64))),
            AlphaFn::Table(t) => t
                .get(n as usize)
                .copied()
                .ok_or(Error::ScheduleExhausted(n)),
        }
    }

    fn eval1(rate: &Rate1Ref, k: u64) -> Option<u64> {
        rate.eval(&BigUint::from(k)).and_then(|v| v.to_u64())
    }

    /// Checks `alpha_n <= 1/(k+1)` at `n = sigma1(k)` and sampled later n.
    pub fn validate_sigma1(&self, k_max: u64) -> Result<Report> {
        let mut report = Report::default();
        for k in 0..=k_max {
            let n0 = match Self::eval1(&self.sigma1, k) {
                Some(v) => v,
                None => {
                    report.skip();
                    continue;
                }
            };
            for (i, n) in std::iter::once(n0)
                .chain((1..=8u64).map(|s| n0 + s * (k + 1)))
                .enumerate()
            {
                match self.alpha(n) {
                    Ok(a) => {
                        let rhs = 1.0 / (k as f64 + 1.0);
                        report.push("sigma1", k, n, a, rhs, a <= rhs + 1e-12);
                    }
                    Err(_) if i > 0 => report.skip(),
                    Err(e) => return Err(e),
                }
            }
        }
        Ok(report)
    }

    /// Checks the C4q Cauchy-modulus contract: for `m = sigma4(k)+1`,
    /// `sum_{i=m}^{m+N} |alpha_{i+l} - alpha_i| <= 1/(k+1)` with a long
    /// tail truncation (the partial sums are monotone in the truncation).
    pub fn validate_sigma4(&self, k_max: u64, n_tail: u64) -> Result<Report> {
        let sigma4 = self
            .sigma4
            .as_ref()
            .ok_or(Error::MissingWitness("sigma4"))?;
        let mut report = Report::default();
        for k in 0..=k_max {
            let m = match Self::eval1(sigma4, k) {
                Some(v) => v + 1,
                None => {
                    report.skip();
                    continue;
                }
            };
            let mut sum = 0.0;
            let mut truncated = false;
            for i in m..=m + n_tail {
                match (self.alpha(i + self.l), self.alpha(i)) {
                    (Ok(a), Ok(b)) => sum += (a - b).abs(),
                    _ => {
                        truncated = true;
                        break;
                    }
                }
            }
            if truncated && matches!(self.alpha_fn, AlphaFn::Table(_)) {
                // table ran out: partial sum is still a valid lower data point
            }
            let rhs = 1.0 / (k as f64 + 1.0);
            report.push("sigma4", k, m, sum, rhs, sum <= rhs + 1e-12);
            // for the harmonic schedule the whole tail has the closed bound
            // l/(gamma(m+J)), so also check against it
            if let AlphaFn::Harmonic { gamma, j } = self.alpha_fn {
                let bound = self.l as f64 / (gamma * (m as f64 + j as f64));
                report.push("sigma4-closed-tail", k, m, bound, rhs, bound <= rhs + 1e-12);
            }
        }
        Ok(report)
    }
}

/// Witness table wrapper for config files.
pub fn table_rate(values: Vec<u64>) -> Rate1Ref {
    Arc::new(RateTable(values))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ratekit::Rate1;
    use num::BigUint;

    fn big(v: u64) -> BigUint {
        BigUint::from(v)
    }

    #[test]
    fn example_schedule_gamma_one() {
        let s = Schedule::example(1.0, 1).unwrap();
        assert_eq!(s.j, Some(1));
        assert!((s.alpha(0).unwrap() - 1.0).abs() < 1e-15);
        assert!((s.alpha(4).unwrap() - 0.2).abs() < 1e-15);
    }

    #[test]
    fn sigma2_star_product_identity() {
        // exact telescoping: prod_{i=m}^{n}(1 - gamma alpha_i) = (m+J-1)/(n+J)
        let s = Schedule::example(1.0, 1).unwrap();
        let w = s.sigma2_star.as_ref().unwrap();
        let n = w.eval(&big(2), &big(4)).unwrap().to_u64().unwrap();
        assert_eq!(n, 9);
        let mut prod = 1.0;
        for i in 2..=n {
            prod *= 1.0 - s.gamma * s.alpha(i).unwrap();
        }
        assert!((prod - 2.0 / 10.0).abs() <= 1e-12);
        assert!(prod <= 1.0 / 5.0 + 1e-12);
        // identity over a grid
        for gamma_inv in 1u64..=3 {
            let s = Schedule::example(1.0 / gamma_inv as f64, 1).unwrap();
            let j = s.j.unwrap();
            for m in 0u64..10 {
                for n in m..30 {
                    let mut prod = 1.0;
                    for i in m..=n {
                        prod *= 1.0 - s.gamma * s.alpha(i).unwrap();
                    }
                    let exact = (m + j - 1) as f64 / (n + j) as f64;
                    assert!((prod - exact).abs() <= 1e-12);
                }
            }
        }
    }

    #[test]
    fn sigma3_example_l2() {
        let s = Schedule::example(1.0, 2).unwrap();
        let sig3 = s.sigma3.as_ref().unwrap();
        let n = sig3.eval(&big(4)).unwrap().to_u64().unwrap();
        assert_eq!(n, 9);
        let ratio = s.alpha(n).unwrap() / s.alpha(n + 2).unwrap();
        assert!((ratio - 1.0).abs() <= 1.0 / 5.0 + 1e-12);
        assert!(((ratio - 1.0) - 2.0 / 10.0).abs() <= 1e-12);
    }

    #[test]
    fn sigma4_example_values() {
        let s = Schedule::example(1.0, 2).unwrap();
        let sig4 = s.sigma4.as_ref().unwrap();
        // k=4: sigma4(4) = max{2*5 - 2, 0} = 8, m = 9, tail bound 2/10
        assert_eq!(sig4.eval(&big(4)).unwrap().to_u64().unwrap(), 8);
        let s1 = Schedule::example(1.0, 1).unwrap();
        let sig4 = s1.sigma4.as_ref().unwrap();
        assert_eq!(sig4.eval(&big(0)).unwrap().to_u64().unwrap(), 0);
    }

    #[test]
    fn validate_sigma1_example_and_violation() {
        let s = Schedule::example(1.0, 1).unwrap();
        let rep = s.validate_sigma1(10).unwrap();
        assert!(rep.all_pass());
        // alpha_4 = 1/5 at k = 4 exactly
        let row = rep.rows.iter().find(|r| r.k == 4 && r.index == 4).unwrap();
        assert!((row.lhs - 0.2).abs() < 1e-15);

        // constant schedule alpha = 1 with sigma1 = 0 must flag k = 1
        let bad = Schedule::custom(
            vec![1.0; 64],
            Arc::new(AffineSat { scale: 0, shift: 0 }),
            None,
            None,
            None,
            None,
            1,
            1.0,
        )
        .unwrap();
        let rep = bad.validate_sigma1(1).unwrap();
        assert!(rep.rows.iter().any(|r| r.k == 1 && !r.pass));
        assert!(rep.rows.iter().filter(|r| r.k == 0).all(|r| r.pass));
    }

    #[test]
    fn validate_sigma4_example() {
        let s = Schedule::example(1.0, 2).unwrap();
        let rep = s.validate_sigma4(8, 200_000).unwrap();
        assert!(rep.all_pass(), "failures: {:?}", rep.failures().count());
    }

    #[test]
    fn partial_sums_monotone_in_truncation() {
        let s = Schedule::example(0.5, 2).unwrap();
        let mut prev = 0.0;
        let mut sum = 0.0;
        for i in 5..200u64 {
            sum += (s.alpha(i + 2).unwrap() - s.alpha(i).unwrap()).abs();
            assert!(sum >= prev);
            prev = sum;
        }
    }

    #[test]
    fn witnesses_monotone() {
        let s = Schedule::example(0.5, 3).unwrap();
        let w2 = s.sigma2_star.as_ref().unwrap();
        for k in 0..50u64 {
            let a = Schedule::eval1(&s.sigma1, k).unwrap();
            let b = Schedule::eval1(&s.sigma1, k + 1).unwrap();
            assert!(a <= b);
            for m in 0..20u64 {
                let v = w2.eval(&big(m), &big(k)).unwrap();
                assert!(v <= w2.eval(&big(m + 1), &big(k)).unwrap());
                assert!(v <= w2.eval(&big(m), &big(k + 1)).unwrap());
            }
        }
    }

    #[test]
    fn divergence_witness_lower_bound() {
        // any C2q witness for terms <= 1 satisfies sigma2(k) >= k-1;
        // check the property for a straight tabulated witness
        let sigma2 = AffineSat { scale: 3, shift: 3 };
        for k in 0..=1000u64 {
            let v = sigma2.eval(&big(k)).unwrap().to_u64().unwrap();
            assert!(v + 1 >= k);
        }
    }

    #[test]
    fn custom_rejects_out_of_range_alpha() {
        let r = Schedule::custom(
            vec![0.5, 1.5],
            Arc::new(AffineSat { scale: 1, shift: 1 }),
            None,
            None,
            None,
            None,
            1,
            1.0,
        );
        assert!(matches!(r, Err(Error::AlphaRange(1))));
    }
}
