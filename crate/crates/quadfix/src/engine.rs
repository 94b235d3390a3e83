//! Trajectory generation for Xu's iteration
//! `x_{n+1} = (I - alpha_{n+1} A) T_{n+1} x_n + alpha_{n+1} u`,
//! the Yamada-iteration embedding, per-step inequality monitors, and the
//! independent KKT/VIP oracle for the underlying quadratic program.

use crate::asreg::{compute_k, compute_q, InstanceBounds};
use crate::hilbert::{inner, operator_norm_estimate, HilbertPoint, SpdOperator};
use crate::nonexp::CyclicFamily;
use crate::sched::Schedule;
use crate::{Error, Result};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::collections::VecDeque;

/// A fully assembled problem: minimize `1/2 <Ax,x> - <x,u>` over the common
/// fixed points of the cyclic family, iterated from `x0` under the schedule.
pub struct ProblemInstance {
    pub a: SpdOperator,
    pub u: HilbertPoint,
    pub family: CyclicFamily,
    pub schedule: Schedule,
    pub x0: HilbertPoint,
    pub bounds: InstanceBounds,
}

impl ProblemInstance {
    /// Derives the certified bounds: Q from sigma1 and b_A, then K from the
    /// simulated x_Q, then the ceilings b_U and b_p. A user K override must
    /// dominate the computed minimum.
    pub fn new(
        a: SpdOperator,
        u: HilbertPoint,
        family: CyclicFamily,
        schedule: Schedule,
        x0: HilbertPoint,
        k_override: Option<u64>,
    ) -> Result<Self> {
        if schedule.gamma > a.gamma() + 1e-12 {
            return Err(Error::Config(format!(
                "schedule gamma {} exceeds the certified gamma {} of A",
                schedule.gamma,
                a.gamma()
            )));
        }
        Self::build(a, u, family, schedule, x0, k_override, None)
    }

    fn build(
        a: SpdOperator,
        u: HilbertPoint,
        family: CyclicFamily,
        schedule: Schedule,
        x0: HilbertPoint,
        k_override: Option<u64>,
        gamma_eff: Option<f64>,
    ) -> Result<Self> {
        let d = a.dim();
        if u.dim() != d || x0.dim() != d || family.p().dim() != d {
            return Err(Error::DimensionMismatch(d, u.dim().max(x0.dim())));
        }
        if schedule.l != family.len() as u64 {
            return Err(Error::Config(format!(
                "schedule cycle length {} differs from family size {}",
                schedule.l,
                family.len()
            )));
        }
        let gamma = gamma_eff.unwrap_or(schedule.gamma);
        let q = compute_q(schedule.sigma1.as_ref(), a.b_a())?;
        let mut inst = ProblemInstance {
            bounds: InstanceBounds {
                k_bound: 1,
                q,
                b_a: a.b_a(),
                b_u: (u.norm().ceil() as u64).max(1),
                b_p: family.b_p(),
                gamma,
                l: family.len() as u64,
            },
            a,
            u,
            family,
            schedule,
            x0,
        };
        let mut xq = inst.x0.coords().clone();
        for n in 0..q {
            xq = inst.xu_step_vec(&xq, n)?;
        }
        let xq_dist = (&xq - inst.family.p().coords()).norm();
        let ap = inst.a.apply_vec(inst.family.p().coords());
        let residual = (inst.u.coords() - ap).norm() / gamma;
        let k_min = compute_k(xq_dist, residual);
        inst.bounds.k_bound = match k_override {
            Some(k) => {
                if k < k_min {
                    return Err(Error::BoundTooSmall {
                        name: "K",
                        given: k,
                        min: k_min,
                    });
                }
                k
            }
            None => k_min,
        };
        Ok(inst)
    }

    pub fn dim(&self) -> usize {
        self.a.dim()
    }

    /// One step of Xu's iteration from `x_n`. Evaluation order is fixed
    /// (apply T, then A, then the affine combination) so reruns reproduce
    /// trajectories bit for bit.
    pub fn xu_step_vec(&self, x: &DVector<f64>, n: u64) -> Result<DVector<f64>> {
        let alpha = self.schedule.alpha(n + 1)?;
        let y = self.family.cyclic(n + 1).apply_vec(x);
        let ay = self.a.apply_vec(&y);
        Ok(&y - ay * alpha + self.u.coords() * alpha)
    }

    pub fn xu_step(&self, x: &HilbertPoint, n: u64) -> Result<HilbertPoint> {
        Ok(HilbertPoint::from_dvector(self.xu_step_vec(x.coords(), n)?))
    }

    /// One step of Yamada's iteration
    /// `v_{n+1} = (1 - alpha_{n+1}) T_{n+1} v_n + alpha_{n+1} f(T_{n+1} v_n)`
    /// with the contraction `f(x) = (I - A)x + u`.
    pub fn yamada_step_vec(&self, v: &DVector<f64>, n: u64) -> Result<DVector<f64>> {
        let alpha = self.schedule.alpha(n + 1)?;
        let tv = self.family.cyclic(n + 1).apply_vec(v);
        let ftv = &tv - self.a.apply_vec(&tv) + self.u.coords();
        Ok(&tv * (1.0 - alpha) + ftv * alpha)
    }

    pub fn run(&self, n: u64) -> Result<Trajectory<'_>> {
        let mut traj = Trajectory::new(self);
        traj.ensure(n)?;
        Ok(traj)
    }
}

/// A cached trajectory prefix, extended lazily.
pub struct Trajectory<'a> {
    inst: &'a ProblemInstance,
    points: Vec<DVector<f64>>,
}

impl<'a> Trajectory<'a> {
    pub fn new(inst: &'a ProblemInstance) -> Self {
        Trajectory {
            inst,
            points: vec![inst.x0.coords().clone()],
        }
    }

    pub fn ensure(&mut self, n: u64) -> Result<()> {
        while (self.points.len() as u64) <= n {
            let m = self.points.len() as u64 - 1;
            let next = self.inst.xu_step_vec(&self.points[m as usize], m)?;
            self.points.push(next);
        }
        Ok(())
    }

    pub fn point(&mut self, n: u64) -> Result<&DVector<f64>> {
        self.ensure(n)?;
        Ok(&self.points[n as usize])
    }

    /// Already-computed point, without extending the prefix.
    pub fn get(&self, n: u64) -> Option<&DVector<f64>> {
        self.points.get(n as usize)
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }
}

/// The residual triple at index n.
#[derive(Clone, Debug)]
pub struct Residuals {
    /// `||x_n - T~_n x_n||`.
    pub r_tilde: f64,
    /// `||x_n - T_i x_n||` for each i < l.
    pub r_i: Vec<f64>,
    /// `||x_{n+l} - x_n||`.
    pub gap_l: f64,
}

pub fn residuals(traj: &mut Trajectory<'_>, n: u64) -> Result<Residuals> {
    let l = traj.inst.family.len() as u64;
    traj.ensure(n + l)?;
    let xn = traj.points[n as usize].clone();
    let r_tilde = (&xn - traj.inst.family.tilde_apply_vec(n, &xn)).norm();
    let r_i = traj
        .inst
        .family
        .maps()
        .iter()
        .map(|t| (&xn - t.apply_vec(&xn)).norm())
        .collect();
    let gap_l = (&traj.points[(n + l) as usize] - &xn).norm();
    Ok(Residuals { r_tilde, r_i, gap_l })
}

/// A constant-memory trajectory cursor holding only the last few points,
/// for residual checks at indices far beyond what a cache can hold.
pub struct Walker<'a> {
    inst: &'a ProblemInstance,
    n: u64,
    ring: VecDeque<DVector<f64>>,
    keep: usize,
}

impl<'a> Walker<'a> {
    pub fn new(inst: &'a ProblemInstance) -> Self {
        let keep = inst.family.len() + 2;
        let mut ring = VecDeque::with_capacity(keep);
        ring.push_back(inst.x0.coords().clone());
        Walker {
            inst,
            n: 0,
            ring,
            keep,
        }
    }

    pub fn index(&self) -> u64 {
        self.n
    }

    pub fn step(&mut self) -> Result<()> {
        let next = self.inst.xu_step_vec(self.ring.back().unwrap(), self.n)?;
        if self.ring.len() == self.keep {
            self.ring.pop_front();
        }
        self.ring.push_back(next);
        self.n += 1;
        Ok(())
    }

    pub fn advance_to(&mut self, n: u64) -> Result<()> {
        while self.n < n {
            self.step()?;
        }
        Ok(())
    }

    pub fn current(&self) -> &DVector<f64> {
        self.ring.back().unwrap()
    }

    /// The point `steps` behind the cursor, if still buffered.
    pub fn back(&self, steps: usize) -> Option<&DVector<f64>> {
        let len = self.ring.len();
        if steps >= len {
            None
        } else {
            Some(&self.ring[len - 1 - steps])
        }
    }

    pub fn residual_tilde(&self) -> f64 {
        let x = self.current();
        (x - self.inst.family.tilde_apply_vec(self.n, x)).norm()
    }

    pub fn residual_i(&self, i: usize) -> f64 {
        let x = self.current();
        (x - self.inst.family.maps()[i].apply_vec(x)).norm()
    }
}

/// Runs Xu's and Yamada's iterations from the same start and returns the
/// maximal pointwise deviation over `n_steps` steps. Requires the measured
/// `||I - A|| < 1` (the embedding hypothesis; it can fail once `||A|| >= 2`).
pub fn check_embedding(inst: &ProblemInstance, n_steps: u64) -> Result<f64> {
    let d = inst.dim();
    let res = DMatrix::<f64>::identity(d, d) - inst.a.matrix();
    let est = operator_norm_estimate(&res, 200);
    if est >= 1.0 {
        return Err(Error::EmbeddingHypothesis(est));
    }
    let mut x = inst.x0.coords().clone();
    let mut v = x.clone();
    let mut worst: f64 = 0.0;
    for n in 0..n_steps {
        x = inst.xu_step_vec(&x, n)?;
        v = inst.yamada_step_vec(&v, n)?;
        worst = worst.max((&x - &v).norm());
    }
    Ok(worst)
}

/// The instance with `(mu A, mu u)` substituted; its Xu trajectory is the
/// Yamada trajectory for the original quadratic objective. Requires
/// `0 < mu < 2 / ||A||` so that `I - mu A` stays a strict contraction.
pub fn mu_scaled_embedding(inst: &ProblemInstance, mu: f64) -> Result<ProblemInstance> {
    if !(mu > 0.0 && mu < 2.0 / inst.a.norm_upper()) {
        return Err(Error::MuOutOfRange(mu));
    }
    let a = inst.a.scaled(mu)?;
    let u = HilbertPoint::from_dvector(inst.u.coords() * mu);
    let gamma_eff = inst.schedule.gamma.min(a.gamma());
    ProblemInstance::build(
        a,
        u,
        inst.family.clone(),
        inst.schedule.clone(),
        inst.x0.clone(),
        None,
        Some(gamma_eff),
    )
}

/// Solves `min 1/2 <Ax,x> - <x,u>` over the affine set `offset + span(B)`
/// by the KKT system: parametrize `x = offset + B t` and solve
/// `B^T A B t = B^T (u - A offset)`.
pub fn kkt_oracle(
    a: &SpdOperator,
    u: &HilbertPoint,
    basis: &[Vec<f64>],
    offset: &[f64],
) -> Result<HilbertPoint> {
    let d = a.dim();
    if offset.len() != d || basis.iter().any(|b| b.len() != d) {
        return Err(Error::DimensionMismatch(d, offset.len()));
    }
    let off = DVector::from_column_slice(offset);
    if basis.is_empty() {
        return HilbertPoint::new(offset.to_vec());
    }
    let m = basis.len();
    let b = DMatrix::from_fn(d, m, |r, c| basis[c][r]);
    let lhs = b.transpose() * a.matrix() * &b;
    let rhs = b.transpose() * (u.coords() - a.apply_vec(&off));
    let t = lhs
        .lu()
        .solve(&rhs)
        .ok_or_else(|| Error::Config("singular KKT system: basis not full rank".into()))?;
    Ok(HilbertPoint::from_dvector(off + b * t))
}

/// `max_y <u - A x*, y - x*>` over the sampled feasible points: the
/// variational-inequality residual, nonpositive at the true solution.
pub fn vip_residual(
    a: &SpdOperator,
    u: &HilbertPoint,
    x_star: &HilbertPoint,
    samples: &[HilbertPoint],
) -> Result<f64> {
    let g = HilbertPoint::from_dvector(u.coords() - a.apply_vec(x_star.coords()));
    let mut worst = f64::NEG_INFINITY;
    for y in samples {
        let diff = y.sub(x_star)?;
        worst = worst.max(inner(&g, &diff)?);
    }
    Ok(worst)
}

const MONITOR_SLACK: f64 = 1e-9;

/// Counters for the five per-step inequality monitors.
#[derive(Clone, Debug, Default)]
pub struct MonitorStats {
    pub steps: u64,
    pub checks: u64,
    /// First few violations as (check name, step, lhs, rhs).
    pub violations: Vec<(&'static str, u64, f64, f64)>,
}

impl MonitorStats {
    pub fn ok(&self) -> bool {
        self.violations.is_empty()
    }

    fn record(&mut self, name: &'static str, n: u64, lhs: f64, rhs: f64) {
        self.checks += 1;
        if lhs > rhs + MONITOR_SLACK && self.violations.len() < 100 {
            self.violations.push((name, n, lhs, rhs));
        }
    }
}

/// Runs the iteration for `n_steps` steps while checking, for every
/// `n >= Q`, the one-step distance bound, the K-ball bound, the residual
/// bound on `u - A T_{n+1} x_n`, the cycle-gap recursion, and the
/// square-distance recursion against seeded probe points in the K-ball
/// around p.
pub fn run_with_monitors(
    inst: &ProblemInstance,
    n_steps: u64,
    n_probes: usize,
    seed: u64,
) -> Result<MonitorStats> {
    let b = &inst.bounds;
    let p = inst.family.p().coords();
    let u_ap = (inst.u.coords() - inst.a.apply_vec(p)).norm();
    let k0 = b.k_bound as f64;
    let ba1k = (b.b_a + 1) as f64 * k0;
    let l = b.l as usize;
    let d = inst.dim();

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let probes: Vec<DVector<f64>> = (0..n_probes)
        .map(|_| {
            let dir = DVector::from_fn(d, |_, _| rng.gen_range(-1.0..1.0));
            let norm = dir.norm();
            let dir = if norm > 0.0 { dir / norm } else { dir };
            let r: f64 = rng.gen_range(0.0..=k0);
            p + dir * r
        })
        .collect();
    // T_{n+1} x and ||T_{n+1} x - x|| only depend on n mod l; precompute per probe
    let probe_data: Vec<Vec<(DVector<f64>, f64)>> = probes
        .iter()
        .map(|x| {
            (0..l)
                .map(|i| {
                    let tx = inst.family.maps()[i].apply_vec(x);
                    let r = (&tx - x).norm();
                    (tx, r)
                })
                .collect()
        })
        .collect();

    let mut stats = MonitorStats::default();
    let mut ring: VecDeque<DVector<f64>> = VecDeque::with_capacity(l + 2);
    ring.push_back(inst.x0.coords().clone());
    for n in 0..n_steps {
        let xn = ring.back().unwrap().clone();
        let alpha = inst.schedule.alpha(n + 1)?;
        let y = inst.family.cyclic(n + 1).apply_vec(&xn);
        let xn1 = &y - inst.a.apply_vec(&y) * alpha + inst.u.coords() * alpha;
        if n >= b.q {
            let dn = (&xn - p).norm();
            let dn1 = (&xn1 - p).norm();
            stats.record(
                "bound-one-step",
                n,
                dn1,
                (1.0 - b.gamma * alpha) * dn + alpha * u_ap,
            );
            stats.record("bound-ball", n, dn, k0);
            stats.record(
                "residual-bound",
                n,
                (inst.u.coords() - inst.a.apply_vec(&y)).norm(),
                ba1k,
            );
            let idx = ((n + 1) % b.l) as usize;
            for (x, per_map) in probes.iter().zip(&probe_data) {
                let (_, txr) = &per_map[idx];
                let lhs = (&xn1 - x).norm_squared();
                let dxn = (&xn - x).norm();
                let g = inst.u.coords() - inst.a.apply_vec(x);
                let rhs = (1.0 - alpha * b.gamma) * dxn * dxn
                    + 2.0 * dxn * txr
                    + txr * txr
                    + 2.0 * alpha * g.dot(&(&xn1 - x));
                stats.record("square-distance", n, lhs, rhs);
            }
        }
        if ring.len() == l + 2 {
            ring.pop_front();
        }
        ring.push_back(xn1);
        // cycle-gap recursion at m = n - l: needs x_m .. x_{m+l+1}
        if n >= l as u64 + b.q && ring.len() == l + 2 {
            let m = n - l as u64; // compares indices m, m+1, m+l, m+l+1
            let x_m = &ring[0];
            let x_m1 = &ring[1];
            let x_ml = &ring[l];
            let x_ml1 = &ring[l + 1];
            let a_ml1 = inst.schedule.alpha(m + l as u64 + 1)?;
            let a_m1 = inst.schedule.alpha(m + 1)?;
            stats.record(
                "cycle-gap",
                m,
                (x_ml1 - x_m1).norm(),
                (1.0 - a_ml1 * b.gamma) * (x_ml - x_m).norm() + ba1k * (a_ml1 - a_m1).abs(),
            );
        }
        stats.steps += 1;
    }
    Ok(stats)
}
