//! Closed-form time and power allocation for a fixed vertex selection.
//!
//! With the selection fixed, every user is served at its best selected vertex
//! with effective gain `B_k`. Its energy is `(gamma_k / B_k) * theta(s_k / gamma_k)`
//! where `theta(x) = x (2^{1/x} - 1)`. Minimizing the weighted sum subject to
//! `sum_k s_k = upsilon` equalizes `(2 - mu) * neg_grad_theta(s_k / gamma_k) / B_k`
//! across users; that common value is the multiplier `rho`, found by bisection
//! between the Jensen-type bracket in [`rho_bracket`].

use std::f64::consts::LN_2;

use crate::error::{Error, Result};
use crate::model::Selection;
use crate::plan::{Allocation, TourSolution};
use crate::scenario::Scenario;
use crate::tour::TourCache;

/// Relative residual at which the multiplier bisection stops.
pub const RHO_TOL: f64 = 1e-10;
/// Hard cap on multiplier bisection steps.
pub const RHO_MAX_ITERS: usize = 200;

const LAMBDA_LO: f64 = 1e-9;
const LAMBDA_HI: f64 = 1e9;
const LAMBDA_HI_LIMIT: f64 = 1e150;

fn check_positive(what: &'static str, x: f64) -> Result<()> {
    if x > 0.0 {
        Ok(())
    } else {
        Err(Error::NonPositive { what, value: x })
    }
}

/// `x (2^{1/x} - 1)`, strictly decreasing and convex on `x > 0`.
pub fn theta(x: f64) -> Result<f64> {
    check_positive("theta argument", x)?;
    Ok(theta_raw(x))
}

#[inline]
fn theta_raw(x: f64) -> f64 {
    x * (LN_2 / x).exp_m1()
}

/// `-theta'(x) = 1 + ln2 * 2^{1/x} / x - 2^{1/x}`.
pub fn neg_grad_theta(x: f64) -> Result<f64> {
    check_positive("gradient argument", x)?;
    Ok(neg_grad_raw(x))
}

#[inline]
fn neg_grad_raw(x: f64) -> f64 {
    // With u = ln2 / x the value is 1 + e^u (u - 1) = sum_{n>=2} (n-1) u^n / n!,
    // which cancels badly for small u; use the series there.
    let u = LN_2 / x;
    if u < 0.5 {
        let mut term = u; // u^n / n! at n = 1
        let mut sum = 0.0;
        for n in 2..30 {
            term *= u / n as f64;
            let add = (n - 1) as f64 * term;
            sum += add;
            if add < sum * 1e-18 {
                break;
            }
        }
        sum
    } else {
        1.0 + u.exp() * (u - 1.0)
    }
}

/// Inverse of [`neg_grad_theta`]: the unique `x > 0` with `neg_grad_theta(x) = y`.
///
/// Bisection on `log x` starting from `[1e-9, 1e9]`, widening the upper end
/// geometrically for very small `y`.
pub fn lambda_inv(y: f64) -> Result<f64> {
    check_positive("inverse-gradient argument", y)?;
    if !y.is_finite() {
        return Err(Error::OutOfRange(y));
    }
    lambda_raw(y)
}

fn lambda_raw(y: f64) -> Result<f64> {
    let mut lo = LAMBDA_LO;
    let mut hi = LAMBDA_HI;
    while neg_grad_raw(hi) > y {
        lo = hi;
        hi *= 1e6;
        if hi > LAMBDA_HI_LIMIT {
            return Err(Error::OutOfRange(y));
        }
    }
    if neg_grad_raw(lo) < y {
        return Err(Error::OutOfRange(y));
    }
    for _ in 0..400 {
        let mid = if hi > 2.0 * lo {
            (lo * hi).sqrt()
        } else {
            0.5 * (lo + hi)
        };
        if mid <= lo || mid >= hi {
            break;
        }
        if neg_grad_raw(mid) > y {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-15 * lo {
            break;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Best selected gain per user and the vertex attaining it.
#[derive(Debug, Clone, PartialEq)]
pub struct EffectiveGains {
    pub values: Vec<f64>,
    pub argmax: Vec<usize>,
}

impl EffectiveGains {
    /// Ties go to the lowest vertex index.
    pub fn of(scenario: &Scenario, selection: &Selection) -> Self {
        let k = scenario.num_users();
        let mut values = Vec::with_capacity(k);
        let mut argmax = Vec::with_capacity(k);
        for user in 0..k {
            let row = scenario.gain_row(user);
            let (mut best_v, mut best) = (0, row[0]);
            for v in selection.vertices().skip(1) {
                if row[v] > best {
                    best = row[v];
                    best_v = v;
                }
            }
            values.push(best);
            argmax.push(best_v);
        }
        EffectiveGains { values, argmax }
    }
}

/// Initial bisection interval for the multiplier.
pub fn rho_bracket(b: &[f64], gamma: &[f64], upsilon: f64, mu: f64) -> Result<(f64, f64)> {
    check_positive("upsilon", upsilon)?;
    let weight = 2.0 - mu;
    let gamma_sum: f64 = gamma.iter().sum();
    let weighted_gain: f64 = gamma.iter().zip(b).map(|(g, b)| g * b).sum();
    let b_min = b.iter().copied().fold(f64::INFINITY, f64::min);
    let slope = neg_grad_theta(upsilon / gamma_sum)?;
    if !slope.is_finite() {
        return Err(Error::OutOfRange(slope));
    }
    Ok((
        weight * gamma_sum / weighted_gain * slope,
        weight / b_min * slope,
    ))
}

/// Total time `sum_k gamma_k * lambda_inv(B_k rho / (2 - mu))` requested at `rho`.
pub fn requested_time(b: &[f64], gamma: &[f64], rho: f64, mu: f64) -> Result<f64> {
    let weight = 2.0 - mu;
    let mut total = 0.0;
    for (g, bk) in gamma.iter().zip(b) {
        total += g * lambda_raw(bk * rho / weight)?;
    }
    Ok(total)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RhoSolution {
    pub rho: f64,
    pub lower: f64,
    pub upper: f64,
    pub iterations: usize,
}

/// Solves `requested_time(rho) = upsilon` for the multiplier.
pub fn solve_rho(b: &[f64], gamma: &[f64], upsilon: f64, mu: f64) -> Result<RhoSolution> {
    if b.len() != gamma.len() || b.is_empty() {
        return Err(Error::ShapeMismatch {
            what: "gains/targets",
            expected: b.len().to_string(),
            got: gamma.len().to_string(),
        });
    }
    if upsilon <= 0.0 {
        return Err(Error::BudgetExhausted(upsilon));
    }
    for &x in b {
        check_positive("effective gain", x)?;
    }
    for &x in gamma {
        check_positive("QoS target", x)?;
    }
    let (lower, upper) = rho_bracket(b, gamma, upsilon, mu)?;
    let residual = |rho: f64| requested_time(b, gamma, rho, mu).map(|t| t - upsilon);
    let tol = RHO_TOL * upsilon;

    // Equal gains collapse the bracket to a point (up to rounding).
    let (mut lo, mut hi) = (lower.min(upper), lower.max(upper));
    let mut best = (lo, residual(lo)?.abs());
    let r_hi = residual(hi)?;
    if r_hi.abs() < best.1 {
        best = (hi, r_hi.abs());
    }
    let mut iterations = 0;
    while best.1 > tol && iterations < RHO_MAX_ITERS {
        let mid = if hi > 2.0 * lo {
            (lo * hi).sqrt()
        } else {
            0.5 * (lo + hi)
        };
        if mid <= lo || mid >= hi {
            break;
        }
        iterations += 1;
        let r = residual(mid)?;
        if r.abs() < best.1 {
            best = (mid, r.abs());
        }
        if r > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(RhoSolution {
        rho: best.0,
        lower,
        upper,
        iterations,
    })
}

/// Optimal `(s, q)` for effective gains `b`, returning the allocation and its
/// unweighted energy `sum_k s_k q_k`.
pub fn allocate_with_gains(
    gains: &EffectiveGains,
    gamma: &[f64],
    upsilon: f64,
    mu: f64,
) -> Result<Allocation> {
    let b = &gains.values;
    let sol = solve_rho(b, gamma, upsilon, mu)?;
    let weight = 2.0 - mu;
    let mut s = Vec::with_capacity(b.len());
    let mut q = Vec::with_capacity(b.len());
    for (g, bk) in gamma.iter().zip(b) {
        let sk = g * lambda_raw(bk * sol.rho / weight)?;
        s.push(sk);
        q.push((LN_2 * g / sk).exp_m1() / bk);
    }
    Ok(Allocation {
        serve: gains.argmax.clone(),
        s,
        q,
        rho: sol.rho,
    })
}

/// Minimum weighted communication energy for budget `upsilon`, or
/// `f64::INFINITY` when the budget is exhausted or numerically out of range.
pub(crate) fn comm_cost(gains: &EffectiveGains, gamma: &[f64], upsilon: f64, mu: f64) -> f64 {
    if !(upsilon > 0.0) {
        return f64::INFINITY;
    }
    match allocate_with_gains(gains, gamma, upsilon, mu) {
        Ok(alloc) => (2.0 - mu) * alloc.energy(),
        Err(Error::OutOfRange(_)) | Err(Error::BudgetExhausted(_)) => f64::INFINITY,
        Err(e) => panic!("communication cost on validated inputs failed: {e}"),
    }
}

/// Allocation for `selection` using its shortest tour.
pub fn allocate(selection: &Selection, scenario: &Scenario) -> Result<Allocation> {
    let upsilon = crate::tour::upsilon(selection, scenario)?;
    let gains = EffectiveGains::of(scenario, selection);
    allocate_with_gains(&gains, scenario.gamma(), upsilon, scenario.mu())
}

/// Value of the selection subproblem.
#[derive(Debug, Clone, PartialEq)]
pub enum Xi {
    Feasible {
        objective: f64,
        tour: TourSolution,
        alloc: Allocation,
    },
    /// The tour leaves no time for communication, or no tour exists.
    Infeasible,
}

impl Xi {
    pub fn value(&self) -> f64 {
        match self {
            Xi::Feasible { objective, .. } => *objective,
            Xi::Infeasible => f64::INFINITY,
        }
    }
}

/// Exact optimal energy for a fixed selection (tour, times and powers).
pub fn xi(selection: &Selection, scenario: &Scenario, tours: &mut TourCache) -> Result<Xi> {
    let Some(tour) = tours.get(selection)? else {
        return Ok(Xi::Infeasible);
    };
    if !(tour.upsilon > 0.0) {
        return Ok(Xi::Infeasible);
    }
    let gains = EffectiveGains::of(scenario, selection);
    let alloc = match allocate_with_gains(&gains, scenario.gamma(), tour.upsilon, scenario.mu()) {
        Ok(a) => a,
        Err(Error::OutOfRange(_)) => return Ok(Xi::Infeasible),
        Err(e) => return Err(e),
    };
    let travel = scenario.time_budget() - tour.upsilon;
    let objective = scenario.travel_cost_rate() * travel + scenario.comm_weight() * alloc.energy();
    Ok(Xi::Feasible {
        objective,
        tour,
        alloc,
    })
}

/// Convenience wrapper around [`xi`] with a throwaway tour cache.
pub fn xi_value(selection: &Selection, scenario: &Scenario) -> Result<f64> {
    Ok(xi(selection, scenario, &mut TourCache::new(scenario))?.value())
}
