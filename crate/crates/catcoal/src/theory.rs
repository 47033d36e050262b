//! Hydrodynamic limit: closed-form trajectories, the drift field they solve,
//! and the limiting caterpillar constants.
//!
//! With `q = alpha/(alpha-1)`, the limiting caterpillar densities are
//!
//! * `x_0(t) = (1+t)^(-1/(alpha-1))` (fraction of blocks),
//! * `x_1(t) = (1+t)^(-q) = x_0(t)^alpha` (fraction of singletons),
//! * `x_r(t) = (1/(2(r-1)!)) (1+t)^(-q) (alpha t/(1+t))^(r-1)` for `r >= 2`,
//!
//! and the cumulative count of `r`-caterpillars ever formed converges to
//! `alpha^(r-1) Gamma(1+q) / (2 Gamma(r+q))` per individual. All formulas
//! extend continuously to the Kingman case `alpha = 2` (`q = 2`), where the
//! constants collapse to `2^(r-1)/(r+1)!`.

use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};
use crate::quad;

fn check_alpha(alpha: f64) -> Result<()> {
    if !(alpha > 1.0 && alpha <= 2.0) {
        return Err(Error::Domain(format!("alpha must lie in (1, 2], got {alpha}")));
    }
    Ok(())
}

fn ln_factorial(n: u32) -> f64 {
    ln_gamma(n as f64 + 1.0)
}

/// Closed-form limiting density of `r`-caterpillars at rescaled time `t`.
/// `r = 0` counts all blocks, `r = 1` singletons.
pub fn x_r(alpha: f64, r: u32, t: f64) -> Result<f64> {
    check_alpha(alpha)?;
    if !(t >= 0.0) {
        return Err(Error::Domain(format!("time must be nonnegative, got {t}")));
    }
    let q = alpha / (alpha - 1.0);
    let one_pt = 1.0 + t;
    Ok(match r {
        0 => one_pt.powf(-1.0 / (alpha - 1.0)),
        1 => one_pt.powf(-q),
        _ => {
            let s = alpha * t / one_pt;
            0.5 * (-ln_factorial(r - 1)).exp() * one_pt.powf(-q) * s.powi(r as i32 - 1)
        }
    })
}

/// Drift field of the density process, evaluated at
/// `state = (X_0, ..., X_{r_max})`.
///
/// `X_0` decays at rate `X_0^alpha/(alpha-1)`; each `X_r` is destroyed at
/// rate `(alpha/(alpha-1)) X_0^(alpha-1)` per unit and created from a
/// pairwise merger of a singleton with an `(r-1)`-caterpillar (two singletons
/// when `r = 2`, hence the extra 1/2).
pub fn drift_field(alpha: f64, state: &[f64]) -> Result<Vec<f64>> {
    check_alpha(alpha)?;
    if state.is_empty() {
        return Err(Error::Domain("state must contain at least X_0".into()));
    }
    let x0 = state[0];
    if !(x0 > 0.0) {
        return Err(Error::Domain(format!(
            "drift field is singular at X_0 = {x0}: needs X_0 > 0"
        )));
    }
    if state.iter().any(|&x| !((-1e-9..=1.0 + 1e-9).contains(&x))) {
        return Err(Error::Domain(format!("state components must lie in [0, 1]: {state:?}")));
    }
    let coef = alpha / (alpha - 1.0);
    let death = coef * x0.powf(alpha - 1.0);
    let pair = x0.powf(alpha - 2.0); // 1 / X_0^(2-alpha)
    Ok(state
        .iter()
        .enumerate()
        .map(|(r, &xr)| match r {
            0 => -x0.powf(alpha) / (alpha - 1.0),
            1 => -death * xr,
            2 => alpha * state[1] * state[1] * pair / 2.0 - death * xr,
            _ => alpha * state[r - 1] * state[1] * pair - death * xr,
        })
        .collect())
}

/// Numeric solution of the drift ODE system.
#[derive(Debug, Clone)]
pub struct DriftSolution {
    pub times: Vec<f64>,
    /// `states[i][r]` is the numeric `x_r` at `times[i]`.
    pub states: Vec<Vec<f64>>,
    /// Sup over the saved grid and all `r` of the distance to the closed
    /// forms.
    pub sup_deviation: f64,
}

/// Integrate the drift field from `x_0(0) = x_1(0) = 1`, `x_r(0) = 0`, with
/// a fixed-step classical fourth-order Runge-Kutta scheme.
pub fn integrate_drift(alpha: f64, r_max: u32, t_end: f64, step: f64) -> Result<DriftSolution> {
    check_alpha(alpha)?;
    if !(step > 0.0 && step <= 1e-2) {
        return Err(Error::Domain(format!("step must lie in (0, 1e-2], got {step}")));
    }
    if !(0.0..=100.0).contains(&t_end) {
        return Err(Error::Domain(format!("t_end must lie in [0, 100], got {t_end}")));
    }

    let dim = r_max as usize + 1;
    let mut state: Vec<f64> = (0..dim).map(|r| if r <= 1 { 1.0 } else { 0.0 }).collect();
    let n_steps = (t_end / step).round() as usize;

    let mut times = Vec::with_capacity(n_steps + 1);
    let mut states = Vec::with_capacity(n_steps + 1);
    let mut sup_deviation: f64 = 0.0;

    let mut record =
        |t: f64, state: &[f64], times: &mut Vec<f64>, states: &mut Vec<Vec<f64>>| -> Result<()> {
            for (r, &x) in state.iter().enumerate() {
                let exact = x_r(alpha, r as u32, t)?;
                sup_deviation = sup_deviation.max((x - exact).abs());
            }
            times.push(t);
            states.push(state.to_vec());
            Ok(())
        };
    record(0.0, &state, &mut times, &mut states)?;

    for i in 0..n_steps {
        let h = step;
        let k1 = drift_field(alpha, &state)?;
        let mid1: Vec<f64> =
            state.iter().zip(&k1).map(|(x, k)| x + 0.5 * h * k).collect();
        let k2 = drift_field(alpha, &mid1)?;
        let mid2: Vec<f64> =
            state.iter().zip(&k2).map(|(x, k)| x + 0.5 * h * k).collect();
        let k3 = drift_field(alpha, &mid2)?;
        let end: Vec<f64> = state.iter().zip(&k3).map(|(x, k)| x + h * k).collect();
        let k4 = drift_field(alpha, &end)?;
        for r in 0..dim {
            state[r] += h / 6.0 * (k1[r] + 2.0 * k2[r] + 2.0 * k3[r] + k4[r]);
        }
        record((i + 1) as f64 * step, &state, &mut times, &mut states)?;
    }

    Ok(DriftSolution { times, states, sup_deviation })
}

/// Cumulative density of `r`-caterpillars ever formed by rescaled time `t`.
///
/// Integrates the creation part of the drift field from 0. The substitution
/// `u = s/(1+s)` turns the integrand into `c_r u^(r-2) (1-u)^q` on the
/// bounded interval `[0, t/(1+t)]`, which adaptive quadrature handles
/// directly; `t = inf` short-circuits to [`limit_constant`].
pub fn x_up(alpha: f64, r: u32, t: f64) -> Result<f64> {
    check_alpha(alpha)?;
    if r < 2 {
        return Err(Error::Domain(format!("x_up is defined for r >= 2, got {r}")));
    }
    if !(t >= 0.0) {
        return Err(Error::Domain(format!("time must be nonnegative, got {t}")));
    }
    if t.is_infinite() {
        return limit_constant(alpha, r);
    }
    let q = alpha / (alpha - 1.0);
    let c_r = 0.5 * ((r as f64 - 1.0) * (alpha.ln()) - ln_factorial(r - 2)).exp();
    let result = quad::integrate(
        |u| u.powi(r as i32 - 2) * (1.0 - u).powf(q),
        0.0,
        t / (1.0 + t),
        1e-12,
        1e-12,
    )?;
    Ok(c_r * result.value)
}

/// Limiting number of `r`-caterpillars ever formed, per individual:
/// `alpha^(r-1) Gamma(1+q) / (2 Gamma(r+q))` with `q = alpha/(alpha-1)`.
/// At `alpha = 2` this equals `2^(r-1)/(r+1)!`.
pub fn limit_constant(alpha: f64, r: u32) -> Result<f64> {
    check_alpha(alpha)?;
    if r < 2 {
        return Err(Error::Domain(format!("limit constant is defined for r >= 2, got {r}")));
    }
    let q = alpha / (alpha - 1.0);
    Ok(((r as f64 - 1.0) * alpha.ln() + ln_gamma(1.0 + q) - ln_gamma(r as f64 + q)).exp() / 2.0)
}
