//! Zero-dimensional kinetics: the bistable nonlinearity and its
//! perturbations, the closed-form front profile, and the perturbed scalar
//! flow with its derivative and amplification quantities.

use crate::{Error, Result};

/// Slope of `f` at the unstable zero: f'(1/2) = 1/4.
pub const MU: f64 = 0.25;

/// Decay rate of the front profile tails: 1/sqrt(2).
pub const DECAY_LAMBDA: f64 = std::f64::consts::FRAC_1_SQRT_2;

/// Prefactor for the tail bounds of the profile and its derivatives.
/// The closed form gives exactly 1 as the supremum of
/// `u0(z) e^(lambda z)` for z >= 0; the derivative ratios stay below it.
pub const DECAY_C: f64 = 1.0;

/// Bistable cubic with stable zeros 0 and 1: u (1 - u) (u - 1/2).
#[inline]
pub fn f(u: f64) -> f64 {
    u * (1.0 - u) * (u - 0.5)
}

#[inline]
pub fn f_prime(u: f64) -> f64 {
    -3.0 * u * u + 3.0 * u - 0.5
}

#[inline]
pub fn f_second(u: f64) -> f64 {
    -6.0 * u + 3.0
}

/// Constant-perturbed nonlinearity f(u) + delta.
#[inline]
pub fn f_delta(u: f64, delta: f64) -> f64 {
    f(u) + delta
}

/// Largest |delta| for which f + delta still has three real zeros. The
/// local extrema of f are at (3 +- sqrt(3))/6 with values -+ sqrt(3)/36,
/// so the roots coalesce exactly at sqrt(3)/36.
pub fn delta_max() -> f64 {
    3.0f64.sqrt() / 36.0
}

/// Growth-imbalance parameters: g(u) = alpha u (1 - u), plus the a-priori
/// bound c0 delimiting the admissible state window (-2 c0, 2 c0).
#[derive(Debug, Clone, PartialEq)]
pub struct BistableSpec {
    pub alpha: f64,
    pub c0: f64,
}

impl BistableSpec {
    pub fn new(alpha: f64, c0: f64) -> Result<BistableSpec> {
        if !(alpha > 0.0) {
            return Err(Error::InvalidParam(format!("alpha must be positive, got {alpha}")));
        }
        if !(c0 > 1.0) {
            return Err(Error::InvalidParam(format!("c0 must exceed 1, got {c0}")));
        }
        Ok(BistableSpec { alpha, c0 })
    }

    #[inline]
    pub fn g(&self, u: f64) -> f64 {
        self.alpha * u * (1.0 - u)
    }

    /// Full nonlinearity f(u) + eps g(u).
    #[inline]
    pub fn f_eps(&self, u: f64, eps: f64) -> f64 {
        f(u) + eps * self.g(u)
    }

    /// sup of |g| over [-2 c0, 2 c0]. |u (1-u)| is largest at the left
    /// endpoint since c0 > 1.
    pub fn g_sup(&self) -> f64 {
        self.alpha * 2.0 * self.c0 * (1.0 + 2.0 * self.c0)
    }
}

/// The three zeros of f + delta in increasing order, and the slope at the
/// middle (unstable) zero.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PerturbedRoots {
    pub alpha_minus: f64,
    pub a: f64,
    pub alpha_plus: f64,
    pub mu_delta: f64,
}

/// Roots of the perturbed cubic via the trigonometric solution of the
/// depressed form w^3 - w/4 - delta, refined by two Newton steps.
pub fn perturbed_roots(delta: f64) -> Result<PerturbedRoots> {
    let dmax = delta_max();
    if !(delta.abs() < dmax) {
        return Err(Error::RootsCoalesce {
            delta,
            delta_max: dmax,
        });
    }
    // u = w + 1/2 turns f(u) + delta = 0 into w^3 + p w + q = 0 with
    // p = -1/4, q = -delta.
    let theta = (12.0 * 3.0f64.sqrt() * delta).acos();
    let amp = 1.0 / 3.0f64.sqrt();
    let third = theta / 3.0;
    let two_pi_3 = 2.0 * std::f64::consts::PI / 3.0;
    // k = 0 gives the largest root, k = 1 the middle, k = 2 the smallest.
    let mut alpha_plus = 0.5 + amp * third.cos();
    let mut a = 0.5 + amp * (third - two_pi_3).cos();
    let mut alpha_minus = 0.5 + amp * (third - 2.0 * two_pi_3).cos();
    for root in [&mut alpha_minus, &mut a, &mut alpha_plus] {
        for _ in 0..2 {
            let fu = f_delta(*root, delta);
            let dfu = f_prime(*root);
            if dfu != 0.0 {
                *root -= fu / dfu;
            }
        }
    }
    debug_assert!(alpha_minus < a && a < alpha_plus);
    Ok(PerturbedRoots {
        alpha_minus,
        a,
        alpha_plus,
        mu_delta: f_prime(a),
    })
}

#[inline]
fn sech(x: f64) -> f64 {
    let e = (-x.abs()).exp();
    2.0 * e / (1.0 + e * e)
}

/// Standing front profile: (1 - tanh(z / (2 sqrt 2))) / 2, the decreasing
/// solution of u'' + f(u) = 0 with u(0) = 1/2. Evaluated in the equivalent
/// exponential form 1 / (1 + e^(z / sqrt 2)), which keeps full relative
/// accuracy in the tails where the tanh form cancels.
#[inline]
pub fn u0(z: f64) -> f64 {
    1.0 / (1.0 + (z * std::f64::consts::FRAC_1_SQRT_2).exp())
}

#[inline]
pub fn u0_prime(z: f64) -> f64 {
    let s = sech(z / (2.0 * std::f64::consts::SQRT_2));
    -s * s / (4.0 * std::f64::consts::SQRT_2)
}

#[inline]
pub fn u0_second(z: f64) -> f64 {
    let x = z / (2.0 * std::f64::consts::SQRT_2);
    let s = sech(x);
    s * s * x.tanh() / 8.0
}

/// Inverse of the profile: the z with u0(z) = s, for s in (0, 1).
pub fn u0_inv(s: f64) -> Result<f64> {
    if !(s > 0.0 && s < 1.0) {
        return Err(Error::InvalidParam(format!("u0_inv needs s in (0,1), got {s}")));
    }
    Ok(2.0 * std::f64::consts::SQRT_2 * (1.0 - 2.0 * s).atanh())
}

const FLOW_ATOL: f64 = 1e-10;
const EQUILIBRIUM_EPS: f64 = 1e-13;

/// Adaptive classical RK4 with step-doubling error control for an
/// autonomous scalar equation y' = rhs(y).
pub(crate) fn adaptive_rk4(
    rhs: &mut impl FnMut(f64) -> f64,
    y0: f64,
    t_end: f64,
    atol: f64,
) -> Result<f64> {
    #[inline]
    fn rk4_step(rhs: &mut impl FnMut(f64) -> f64, y: f64, h: f64) -> f64 {
        let k1 = rhs(y);
        let k2 = rhs(y + 0.5 * h * k1);
        let k3 = rhs(y + 0.5 * h * k2);
        let k4 = rhs(y + h * k3);
        y + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    }

    let mut t = 0.0;
    let mut y = y0;
    let mut h = (t_end / 8.0).min(0.1).max(1e-8);
    let h_floor = 1e-14 * t_end.max(1.0);
    loop {
        let remaining = t_end - t;
        if remaining <= h_floor {
            break;
        }
        let hs = h.min(remaining);
        let coarse = rk4_step(rhs, y, hs);
        let mid = rk4_step(rhs, y, 0.5 * hs);
        let fine = rk4_step(rhs, mid, 0.5 * hs);
        let err = (fine - coarse).abs() / 15.0;
        if err <= atol {
            t += hs;
            // local Richardson extrapolation: fifth order
            y = fine + (fine - coarse) / 15.0;
            let grow = if err == 0.0 {
                2.0
            } else {
                (0.9 * (atol / err).powf(0.2)).min(2.0)
            };
            h = hs * grow;
        } else {
            h = hs * (0.9 * (atol / err).powf(0.2)).max(0.1);
            if h < h_floor {
                return Err(Error::StepUnderflow { tau: t });
            }
        }
    }
    Ok(y)
}

/// Solution at time tau of Y' = f(Y) + delta from Y(0) = xi.
///
/// Exact zeros of the perturbed nonlinearity are preserved as fixed
/// points; elsewhere the adaptive integrator keeps the relative error
/// near 1e-9 on the tau ranges used here.
pub fn flow_y(tau: f64, xi: f64, delta: f64) -> Result<f64> {
    if !(tau >= 0.0) || !tau.is_finite() {
        return Err(Error::InvalidParam(format!("tau must be finite and >= 0, got {tau}")));
    }
    if !xi.is_finite() {
        return Err(Error::InvalidParam(format!("xi must be finite, got {xi}")));
    }
    let dmax = delta_max();
    if !(delta.abs() < dmax) {
        return Err(Error::RootsCoalesce {
            delta,
            delta_max: dmax,
        });
    }
    if tau == 0.0 || f_delta(xi, delta).abs() < EQUILIBRIUM_EPS {
        return Ok(xi);
    }
    adaptive_rk4(&mut |y| f_delta(y, delta), xi, tau, FLOW_ATOL)
}

/// Derivative of the flow in its initial value, via the identity
/// Y_xi = f_delta(Y) / f_delta(xi).
pub fn flow_y_xi(tau: f64, xi: f64, delta: f64) -> Result<f64> {
    let denom = f_delta(xi, delta);
    if denom.abs() < EQUILIBRIUM_EPS {
        return Err(Error::AtEquilibrium { xi });
    }
    let y = flow_y(tau, xi, delta)?;
    Ok(f_delta(y, delta) / denom)
}

/// Amplification quantity A = (f'(Y) - f'(xi)) / f_delta(xi), the
/// logarithmic second derivative of the flow in xi.
pub fn amplification_a(tau: f64, xi: f64, delta: f64) -> Result<f64> {
    let denom = f_delta(xi, delta);
    if denom.abs() < EQUILIBRIUM_EPS {
        return Err(Error::AtEquilibrium { xi });
    }
    let y = flow_y(tau, xi, delta)?;
    Ok((f_prime(y) - f_prime(xi)) / denom)
}
