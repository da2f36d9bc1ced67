//! Simulation of LPV-SSA models and evaluation of their input-output
//! response through the sub-Markov series.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::markov::{growth_bound, quad_grid, sub_markov_table, BlockDims};
use crate::model::{sched_coeff, InitialState, LpvSsa, TimeDomain};
use crate::signal::SampledSignal;
use crate::words;

/// Aligned samples of a solution `(x, y, u, p)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Trajectory {
    pub time_domain: TimeDomain,
    pub grid: Vec<f64>,
    pub u: Vec<DVector<f64>>,
    pub p: Vec<DVector<f64>>,
    pub x: Vec<DVector<f64>>,
    pub y: Vec<DVector<f64>>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grid.is_empty()
    }
}

/// Fundamental matrix `Phi_p(t, tau)`.
#[derive(Debug, Clone, PartialEq)]
pub struct StateTransition {
    pub phi: DMatrix<f64>,
}

/// `Phi_p(t, tau) = A(p(t-1)) ... A(p(tau))`, the identity when `t = tau`.
pub fn state_transition_dt(model: &LpvSsa, p: &[DVector<f64>], t: usize, tau: usize) -> Result<StateTransition> {
    if tau > t {
        return Err(Error::Interval {
            t: t as f64,
            tau: tau as f64,
        });
    }
    if t > p.len() {
        return Err(Error::OutOfRange {
            what: "time",
            value: t,
            limit: p.len(),
        });
    }
    let mut phi = DMatrix::identity(model.nx(), model.nx());
    for pk in &p[tau..t] {
        phi = model.eval_at(pk)?.a * phi;
    }
    Ok(StateTransition { phi })
}

fn check_samples(model: &LpvSsa, u: &[DVector<f64>], p: &[DVector<f64>]) -> Result<()> {
    if u.len() != p.len() {
        return Err(Error::dim("u", format!("{} input samples for {} scheduling samples", u.len(), p.len())));
    }
    for (k, (uk, pk)) in u.iter().zip(p).enumerate() {
        if uk.len() != model.nu() {
            return Err(Error::dim(format!("u[{k}]"), format!("expected length {}, got {}", model.nu(), uk.len())));
        }
        if pk.len() != model.np() {
            return Err(Error::dim(format!("p[{k}]"), format!("expected length {}, got {}", model.np(), pk.len())));
        }
    }
    Ok(())
}

/// Runs `x(t+1) = A(p(t))x(t) + B(p(t))u(t)`, `y(t) = C(p(t))x(t) + D(p(t))u(t)`
/// for `t = 0..len-1`.
pub fn simulate_dt(model: &LpvSsa, x0: &InitialState, u: &[DVector<f64>], p: &[DVector<f64>]) -> Result<Trajectory> {
    model.check_state(x0)?;
    check_samples(model, u, p)?;
    let mut x = Vec::with_capacity(u.len());
    let mut y = Vec::with_capacity(u.len());
    let mut state = x0.0.clone();
    for (uk, pk) in u.iter().zip(p) {
        let m = model.eval_at(pk)?;
        y.push(&m.c * &state + &m.d * uk);
        let next = &m.a * &state + &m.b * uk;
        x.push(std::mem::replace(&mut state, next));
    }
    Ok(Trajectory {
        time_domain: TimeDomain::Discrete,
        grid: (0..u.len()).map(|k| k as f64).collect(),
        u: u.to_vec(),
        p: p.to_vec(),
        x,
        y,
    })
}

/// `y(t)` from the finite DT convolution sums
/// `sum_i sum_{|s|=t} p_i(t) eta_i(s) w_s(t-1, 0)` plus
/// `sum_{delta<t} sum_{i,j} sum_{|s|=t-1-delta} p_i(t) p_j(delta) theta_ij(s) w_s(t-1, delta+1) u(delta)`,
/// plus the feedthrough `D(p(t)) u(t)`.
pub fn iir_eval_dt(
    model: &LpvSsa,
    x0: &InitialState,
    u: &[DVector<f64>],
    p: &[DVector<f64>],
    t: usize,
) -> Result<DVector<f64>> {
    model.check_state(x0)?;
    check_samples(model, u, p)?;
    if t >= p.len() {
        return Err(Error::OutOfRange {
            what: "time",
            value: t,
            limit: p.len(),
        });
    }
    let dims = BlockDims::of(model);
    let (np, nu, ny) = (dims.np, dims.nu, dims.ny);
    let table = sub_markov_table(model, x0, t)?;
    let all = words::enumerate_up_to(np, t);
    let pt = &p[t];

    let mut y = model.eval_at(pt)?.d * &u[t];
    // Each word enters exactly one term: |s| = t feeds the free response,
    // shorter words the forced response at delta = t - 1 - |s|.
    for (s, theta) in all.iter().zip(&table) {
        let len = s.len();
        let mut z = DVector::zeros(dims.cols());
        let tau = if len == t {
            z[0] = 1.0;
            0
        } else {
            let delta = t - 1 - len;
            for j in 0..=np {
                let c = sched_coeff(&p[delta], j);
                z.rows_mut(1 + j * nu, nu).copy_from(&(&u[delta] * c));
            }
            delta + 1
        };
        let w = word_weight_dt(s.symbols(), p, tau);
        if w == 0.0 {
            continue;
        }
        let col = theta * z;
        for i in 0..=np {
            y += col.rows(i * ny, ny) * (w * sched_coeff(pt, i));
        }
    }
    Ok(y)
}

fn word_weight_dt(symbols: &[usize], p: &[DVector<f64>], tau: usize) -> f64 {
    symbols
        .iter()
        .enumerate()
        .map(|(k, &q)| sched_coeff(&p[tau + k], q))
        .product()
}

/// Default RK4 step: a thousandth of the horizon.
pub fn default_ct_step(horizon: f64) -> f64 {
    1e-3 * horizon
}

fn check_signals(model: &LpvSsa, u: &SampledSignal, p: &SampledSignal) -> Result<()> {
    if u.dim() != model.nu() {
        return Err(Error::dim("u", format!("expected dimension {}, got {}", model.nu(), u.dim())));
    }
    if p.dim() != model.np() {
        return Err(Error::dim("p", format!("expected dimension {}, got {}", model.np(), p.dim())));
    }
    if u.t0() != 0.0 || p.t0() != 0.0 {
        return Err(Error::format("t0", "continuous-time signals must start at t = 0"));
    }
    Ok(())
}

/// Classical RK4 on `dx/dt = A(p(t))x + B(p(t))u(t)` with step `h`, over the
/// common horizon of `u` and `p`.
pub fn simulate_ct(
    model: &LpvSsa,
    x0: &InitialState,
    u: &SampledSignal,
    p: &SampledSignal,
    h: f64,
) -> Result<Trajectory> {
    model.check_state(x0)?;
    check_signals(model, u, p)?;
    if !(h > 0.0) || !h.is_finite() {
        return Err(Error::format("h", format!("must be positive, got {h}")));
    }
    let horizon = u.t_end().min(p.t_end());
    let steps = (horizon / h + 1e-9).floor() as usize;

    let rhs = |t: f64, x: &DVector<f64>| -> Result<DVector<f64>> {
        let m = model.eval_at(&p.at(t))?;
        Ok(&m.a * x + &m.b * u.at(t))
    };
    let output = |t: f64, x: &DVector<f64>| -> Result<(DVector<f64>, DVector<f64>, DVector<f64>)> {
        let (pt, ut) = (p.at(t), u.at(t));
        let m = model.eval_at(&pt)?;
        Ok((&m.c * x + &m.d * &ut, ut, pt))
    };

    let mut traj = Trajectory {
        time_domain: TimeDomain::Continuous,
        grid: Vec::with_capacity(steps + 1),
        u: Vec::with_capacity(steps + 1),
        p: Vec::with_capacity(steps + 1),
        x: Vec::with_capacity(steps + 1),
        y: Vec::with_capacity(steps + 1),
    };
    let mut x = x0.0.clone();
    for k in 0..=steps {
        let t = k as f64 * h;
        let (y, ut, pt) = output(t, &x)?;
        traj.grid.push(t);
        traj.u.push(ut);
        traj.p.push(pt);
        traj.y.push(y);
        if k < steps {
            let k1 = rhs(t, &x)?;
            let k2 = rhs(t + 0.5 * h, &(&x + &k1 * (0.5 * h)))?;
            let k3 = rhs(t + 0.5 * h, &(&x + &k2 * (0.5 * h)))?;
            let k4 = rhs(t + h, &(&x + &k3 * h))?;
            let next = &x + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0);
            traj.x.push(std::mem::replace(&mut x, next));
        } else {
            traj.x.push(x.clone());
        }
    }
    Ok(traj)
}

/// Truncated evaluation of the CT convolution series.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CtIirEval {
    pub y: DVector<f64>,
    /// Certified bound on the norm of all omitted terms (`|s| > max_len`).
    pub tail_bound: f64,
    pub max_len: usize,
}

impl CtIirEval {
    pub fn certify(self, tol: f64) -> Result<Self> {
        if self.tail_bound <= tol {
            Ok(self)
        } else {
            Err(Error::TailBound {
                bound: self.tail_bound,
                tol,
            })
        }
    }
}

/// `sum_{k > n} x^k / (k + shift)!` for `x >= 0`, summed directly so small
/// tails keep their relative accuracy.
pub fn exp_tail(x: f64, n: usize, shift: usize) -> f64 {
    if x == 0.0 {
        return 0.0;
    }
    if !x.is_finite() {
        return f64::INFINITY;
    }
    // first term x^(n+1) / (n+1+shift)!, built in log space to avoid overflow
    let k0 = n + 1;
    let log_term = k0 as f64 * x.ln() - ln_factorial(k0 + shift);
    let mut term = log_term.exp();
    let mut sum = 0.0;
    let mut k = k0;
    loop {
        sum += term;
        k += 1;
        term *= x / (k + shift) as f64;
        if (k + shift) as f64 > x && term <= sum * 1e-17 {
            break;
        }
        if !sum.is_finite() {
            return f64::INFINITY;
        }
    }
    sum
}

fn ln_factorial(n: usize) -> f64 {
    (2..=n).map(|k| (k as f64).ln()).sum()
}

/// Bound constants for the CT series over `[0, t]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CtTailBound {
    pub k: f64,
    /// `R * rho * t`
    pub x: f64,
    /// `1 + sup ||p||_1`
    pub rho: f64,
    pub u_sup: f64,
    pub t: f64,
}

impl CtTailBound {
    pub fn new(model: &LpvSsa, x0: &InitialState, u: &SampledSignal, p: &SampledSignal, t: f64) -> Result<Self> {
        let g = growth_bound(model, x0)?;
        let rho = 1.0 + p.sup_over(0.0, t, |v| v.lp_norm(1));
        let u_sup = u.sup_over(0.0, t, |v| v.norm());
        Ok(CtTailBound {
            k: g.k,
            x: g.r * rho * t,
            rho,
            u_sup,
            t,
        })
    }

    /// Bound on the omitted terms with `|s| > max_len`: the free response
    /// contributes `K rho sum x^k/k!`, the forced one
    /// `K rho^2 ||u|| t sum x^k/(k+1)!`.
    pub fn tail(&self, max_len: usize) -> f64 {
        if self.k == 0.0 {
            return 0.0;
        }
        let free = self.k * self.rho * exp_tail(self.x, max_len, 0);
        let forced = if self.u_sup == 0.0 || self.t == 0.0 {
            0.0
        } else {
            self.k * self.rho * self.rho * self.u_sup * self.t * exp_tail(self.x, max_len, 1)
        };
        free + forced
    }

    /// Smallest word bound whose tail is at most `tol`, searching up to `cap`.
    pub fn max_len_for(&self, tol: f64, cap: usize) -> Result<usize> {
        (0..=cap).find(|&n| self.tail(n) <= tol).ok_or(Error::TailBound {
            bound: self.tail(cap),
            tol,
        })
    }
}

/// Evaluates `y(t)` from the CT series restricted to words `|s| <= max_len`,
/// with every iterated integral computed by composite trapezoid on a grid of
/// spacing at most `quad_step`, and reports the certified truncation bound.
///
/// Words are visited depth first by prepending symbols, using
/// `w_{k s}(t, tau) = int_tau^t p_k(sigma) w_s(t, sigma) dsigma`.
pub fn iir_eval_ct_truncated(
    model: &LpvSsa,
    x0: &InitialState,
    u: &SampledSignal,
    p: &SampledSignal,
    t: f64,
    max_len: usize,
    quad_step: f64,
) -> Result<CtIirEval> {
    model.check_state(x0)?;
    check_signals(model, u, p)?;
    if !(t >= 0.0) || !t.is_finite() {
        return Err(Error::format("t", format!("must be non-negative, got {t}")));
    }
    if !(quad_step > 0.0) {
        return Err(Error::format("quad_step", format!("must be positive, got {quad_step}")));
    }
    let dims = BlockDims::of(model);
    let (np, nu, ny) = (dims.np, dims.nu, dims.ny);
    let bound = CtTailBound::new(model, x0, u, p, t)?;
    let table = sub_markov_table(model, x0, max_len)?;

    let (n, h) = quad_grid(0.0, t, quad_step);
    let ps: Vec<DVector<f64>> = (0..=n).map(|m| p.at(m as f64 * h)).collect();
    let us: Vec<DVector<f64>> = (0..=n).map(|m| u.at(m as f64 * h)).collect();
    // p_k sampled on the grid, p_0 = 1 included
    let coeff: Vec<Vec<f64>> = (0..=np)
        .map(|k| ps.iter().map(|v| sched_coeff(v, k)).collect())
        .collect();
    // p_j(delta) u(delta) on the grid, stacked over j
    let drive: Vec<DVector<f64>> = (0..=n)
        .map(|m| {
            let mut z = DVector::zeros(nu * (np + 1));
            for j in 0..=np {
                z.rows_mut(j * nu, nu).copy_from(&(&us[m] * coeff[j][m]));
            }
            z
        })
        .collect();
    let pt = p.at(t);
    let out_weights: Vec<f64> = (0..=np).map(|i| sched_coeff(&pt, i)).collect();

    let mut y = model.eval_at(&pt)?.d * u.at(t);
    let base = np + 1;
    let mut stack: Vec<(usize, usize, Vec<f64>)> = vec![(0, 0, vec![1.0; n + 1])];
    while let Some((len, value, v)) = stack.pop() {
        let ordinal = if len == 0 { 0 } else { words::car(np, len - 1) + value };
        let mut z = DVector::zeros(dims.cols());
        z[0] = v[0];
        if n > 0 {
            let mut acc = DVector::zeros(nu * (np + 1));
            for m in 0..=n {
                let wgt = if m == 0 || m == n { 0.5 * h } else { h };
                acc.axpy(wgt * v[m], &drive[m], 1.0);
            }
            z.rows_mut(1, nu * (np + 1)).copy_from(&acc);
        }
        let col = &table[ordinal] * z;
        for i in 0..=np {
            y.axpy(out_weights[i], &col.rows(i * ny, ny), 1.0);
        }
        if len < max_len {
            let shift = base.pow(len as u32);
            for k in 0..=np {
                let mut next = vec![0.0; n + 1];
                for m in (0..n).rev() {
                    next[m] = next[m + 1] + 0.5 * h * (coeff[k][m] * v[m] + coeff[k][m + 1] * v[m + 1]);
                }
                stack.push((len + 1, k * shift + value, next));
            }
        }
    }
    Ok(CtIirEval {
        y,
        tail_bound: bound.tail(max_len),
        max_len,
    })
}
