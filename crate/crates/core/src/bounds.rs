//! Computable sub/super-solution envelopes and their constants: the
//! generation envelopes built from the perturbed scalar flow, the motion
//! envelopes built from shifted front profiles, and the containment check
//! that realizes the comparison principle numerically.

use crate::kinetics::{
    delta_max, f_prime, f_second, flow_y, perturbed_roots, u0, u0_inv, u0_prime, BistableSpec, MU,
};
use crate::numerics::ScalarField;
use crate::{Error, Result};

/// Constants entering the generation envelopes.
#[derive(Debug, Clone, PartialEq)]
pub struct GenerationConstants {
    /// sup of |g| over the admissible window [-2 c0, 2 c0].
    pub g_sup: f64,
    /// Growth prefactor of the shift r(delta, tau); calibrated upward until
    /// containment holds on a reference run.
    pub c6: f64,
    /// Slope of f at the unstable zero, 1/4.
    pub mu: f64,
}

impl GenerationConstants {
    pub fn derive(spec: &BistableSpec, c6: f64) -> Result<GenerationConstants> {
        if !(c6 > 0.0) {
            return Err(Error::InvalidParam(format!("c6 must be positive, got {c6}")));
        }
        Ok(GenerationConstants {
            g_sup: spec.g_sup(),
            c6,
            mu: MU,
        })
    }

    /// Shift amplitude r(delta, tau) = c6 (e^(mu(delta) tau) - 1).
    pub fn shift(&self, delta: f64, tau: f64) -> Result<f64> {
        let roots = perturbed_roots(delta)?;
        Ok(self.c6 * ((roots.mu_delta * tau).exp() - 1.0))
    }
}

/// Generation envelopes: pointwise images of the initial datum under the
/// perturbed flow,
/// `w_eps_pm(x, t) = Y(t/eps^2, u0(x) +- eps^2 r(+-eps G, t/eps^2); +-eps G)`.
///
/// Both the perturbation `+-eps G` and the shifted arguments must stay in
/// their admissible windows; violations are reported as errors rather than
/// clamped.
pub fn generation_envelope(
    u0_field: &ScalarField,
    t: f64,
    eps: f64,
    spec: &BistableSpec,
    consts: &GenerationConstants,
) -> Result<(ScalarField, ScalarField)> {
    if !(eps > 0.0) {
        return Err(Error::InvalidParam(format!("eps must be positive, got {eps}")));
    }
    let t_gen = eps * eps * eps.ln().abs() / consts.mu;
    if t > t_gen * (1.0 + 1e-9) {
        return Err(Error::InvalidParam(format!(
            "generation envelope requested at t = {t} beyond the generation time {t_gen:.6e}"
        )));
    }
    let delta = eps * consts.g_sup;
    if !(delta < delta_max()) {
        return Err(Error::RootsCoalesce {
            delta,
            delta_max: delta_max(),
        });
    }
    let tau = t / (eps * eps);
    let window = 2.0 * spec.c0;
    let r_plus = consts.shift(delta, tau)?;
    let r_minus = consts.shift(-delta, tau)?;

    let mut lower = Vec::with_capacity(u0_field.values().len());
    let mut upper = Vec::with_capacity(u0_field.values().len());
    for &u0v in u0_field.values() {
        let xi_minus = u0v - eps * eps * r_minus;
        let xi_plus = u0v + eps * eps * r_plus;
        for xi in [xi_minus, xi_plus] {
            if !(xi.abs() < window) {
                return Err(Error::WindowExceeded {
                    value: xi,
                    half_width: window,
                });
            }
        }
        lower.push(flow_y(tau, xi_minus, -delta)?);
        upper.push(flow_y(tau, xi_plus, delta)?);
    }
    let lower = ScalarField::from_values(u0_field.grid(), lower)?;
    let upper = ScalarField::from_values(u0_field.grid(), upper)?;
    debug_assert!(lower
        .values()
        .iter()
        .zip(upper.values())
        .all(|(l, u)| l <= u));
    Ok((lower, upper))
}

/// Constants entering the motion envelopes (profile slopes, the relaxation
/// exponent, the shift magnitudes, and the admissibility window data).
#[derive(Debug, Clone, PartialEq)]
pub struct MotionConstants {
    /// Slope bound: f'(U0(z)) <= -m whenever U0(z) is within b of {0, 1}.
    pub m: f64,
    pub b: f64,
    /// Profile slope floor on the compact middle band.
    pub a1: f64,
    /// sup over [-1, 2] of |f| + |f'| + |f''|.
    pub f_sup: f64,
    /// Relaxation exponent beta = m / 4.
    pub beta: f64,
    /// Profile-inequality weight, capped so sigma beta <= eta / 3.
    pub sigma: f64,
    /// Constant part of the shift p(t); exceeds 1.
    pub k: f64,
    /// Exponential growth rate of the shift.
    pub l: f64,
    /// Cutoff scale the envelopes are used with.
    pub d0: f64,
    /// Horizon the (k, l) pair was sized for.
    pub t_horizon: f64,
}

impl MotionConstants {
    /// Derive all constants for a given eta, epsilon, cutoff scale and
    /// horizon. The growth rate follows `l = ln(d0 / (4 eps)) / T` and `k`
    /// takes the largest admissible value at most 2; the admissibility
    /// window `e^(l T) + k <= d0 / (2 eps)` is enforced here.
    pub fn derive(eta: f64, eps: f64, d0: f64, t_horizon: f64) -> Result<MotionConstants> {
        if !(eta > 0.0 && eta < 0.25) {
            return Err(Error::InvalidParam(format!("eta must lie in (0, 1/4), got {eta}")));
        }
        if !(eps > 0.0 && d0 > 0.0 && t_horizon > 0.0) {
            return Err(Error::InvalidParam(
                "eps, d0 and t_horizon must be positive".into(),
            ));
        }
        let (m, b, a1, f_sup) = profile_slope_constants();
        let beta = m / 4.0;
        let sigma0 = a1 / (m + f_sup);
        let sigma1 = 1.0 / (beta + 1.0);
        let sigma2 = 4.0 * beta / (f_sup * (beta + 1.0));
        let mut sigma = sigma0.min(sigma1).min(sigma2);
        // the fitting step additionally needs sigma beta <= eta / 3
        sigma = sigma.min(eta / (3.0 * beta));

        // profile inequality -U0' - sigma f'(U0) >= 4 sigma beta
        let mut worst = f64::INFINITY;
        for i in 0..=10_000 {
            let z = -40.0 + 80.0 * i as f64 / 10_000.0;
            worst = worst.min(-u0_prime(z) - sigma * f_prime(u0(z)));
        }
        debug_assert!(
            worst >= 4.0 * sigma * beta,
            "profile inequality violated: {worst} < {}",
            4.0 * sigma * beta
        );

        if !(d0 > 4.0 * eps) {
            return Err(Error::EnvelopeWindow {
                lhs: 1.0,
                rhs: d0 / (2.0 * eps),
            });
        }
        let l = (d0 / (4.0 * eps)).ln() / t_horizon;
        let window = d0 / (2.0 * eps);
        let k = 2.0f64.min(window - (l * t_horizon).exp());
        if !(k > 1.0) {
            return Err(Error::EnvelopeWindow {
                lhs: (l * t_horizon).exp() + 1.0,
                rhs: window,
            });
        }
        Ok(MotionConstants {
            m,
            b,
            a1,
            f_sup,
            beta,
            sigma,
            k,
            l,
            d0,
            t_horizon,
        })
    }

    /// Shift p(t) = -e^(-beta t / eps^2) + e^(l t) + k.
    pub fn p(&self, t: f64, eps: f64) -> f64 {
        -(-self.beta * t / (eps * eps)).exp() + (self.l * t).exp() + self.k
    }

    /// Vertical correction q(t) = sigma eps^2 p'(t).
    pub fn q(&self, t: f64, eps: f64) -> f64 {
        self.sigma
            * (self.beta * (-self.beta * t / (eps * eps)).exp()
                + eps * eps * self.l * (self.l * t).exp())
    }
}

/// Slope constants of the profile: the interval width b near the stable
/// zeros, the slope bound m there, the profile slope floor a1 on the
/// complementary band, and the sup F of |f| + |f'| + |f''| on [-1, 2].
///
/// b is chosen by a scan maximizing the product sigma beta, which is the
/// accuracy currency of the motion construction.
fn profile_slope_constants() -> (f64, f64, f64, f64) {
    let f_sup = sup_f_bundle();
    let mut best = (0.0, 0.0, 0.0); // (sigma*beta, b, m)
    for ib in 1..200 {
        let b = 0.21 * ib as f64 / 200.0;
        let m = slope_bound_near_zeros(b);
        if m <= 0.0 {
            continue;
        }
        let a1 = profile_floor(b);
        let beta = m / 4.0;
        let sigma = (a1 / (m + f_sup))
            .min(1.0 / (beta + 1.0))
            .min(4.0 * beta / (f_sup * (beta + 1.0)));
        if sigma * beta > best.0 {
            best = (sigma * beta, b, m);
        }
    }
    let (_, b, m) = best;
    (m, b, profile_floor(b), f_sup)
}

/// Largest value of f' on [0, b] union [1-b, 1] (sampled densely); the
/// slope bound is its negative.
fn slope_bound_near_zeros(b: f64) -> f64 {
    let mut worst = f64::NEG_INFINITY;
    for i in 0..=400 {
        let u = b * i as f64 / 400.0;
        worst = worst.max(f_prime(u)).max(f_prime(1.0 - u));
    }
    -worst
}

/// min of -U0' over the band where U0 is in [b, 1 - b].
fn profile_floor(b: f64) -> f64 {
    let z_hi = u0_inv(b).expect("b in (0,1)");
    let z_lo = u0_inv(1.0 - b).expect("b in (0,1)");
    let mut floor = f64::INFINITY;
    for i in 0..=2000 {
        let z = z_lo + (z_hi - z_lo) * i as f64 / 2000.0;
        floor = floor.min(-u0_prime(z));
    }
    floor
}

/// sup over [-1, 2] of |f| + |f'| + |f''| by dense sampling.
fn sup_f_bundle() -> f64 {
    let mut sup: f64 = 0.0;
    for i in 0..=30_000 {
        let u = -1.0 + 3.0 * i as f64 / 30_000.0;
        sup = sup.max(crate::kinetics::f(u).abs() + f_prime(u).abs() + f_second(u).abs());
    }
    sup
}

/// Motion envelopes: shifted profiles with a vertical correction,
/// `u_eps_pm(x, t) = U0((d(x, t) -+ eps p(t)) / eps) +- q(t)`.
pub fn motion_envelope(
    d: &ScalarField,
    t: f64,
    eps: f64,
    consts: &MotionConstants,
) -> Result<(ScalarField, ScalarField)> {
    if !(t >= 0.0) || t > consts.t_horizon * (1.0 + 1e-9) {
        return Err(Error::InvalidParam(format!(
            "motion envelope time {t} outside [0, {}]",
            consts.t_horizon
        )));
    }
    let lhs = (consts.l * t).exp() + consts.k;
    let rhs = consts.d0 / (2.0 * eps);
    if lhs > rhs * (1.0 + 1e-12) {
        return Err(Error::EnvelopeWindow { lhs, rhs });
    }
    let p = consts.p(t, eps);
    let q = consts.q(t, eps);
    let lower = d.map(|dv| u0((dv + eps * p) / eps) - q);
    let upper = d.map(|dv| u0((dv - eps * p) / eps) + q);
    Ok((lower, upper))
}

/// Containment report: largest violations beyond the slack and the worst
/// offending nodes (bounded list).
#[derive(Debug, Clone)]
pub struct EnvelopeReport {
    pub max_lower_violation: f64,
    pub max_upper_violation: f64,
    /// (flat node index, violation magnitude, true if the upper envelope
    /// was violated), worst first, at most eight entries per side.
    pub worst: Vec<(usize, f64, bool)>,
}

impl EnvelopeReport {
    pub fn contained(&self) -> bool {
        self.max_lower_violation == 0.0 && self.max_upper_violation == 0.0
    }
}

/// Check `lower - slack <= u <= upper + slack` pointwise.
pub fn check_envelope(
    u: &ScalarField,
    lower: &ScalarField,
    upper: &ScalarField,
    slack: f64,
) -> Result<EnvelopeReport> {
    u.same_grid(lower)?;
    u.same_grid(upper)?;
    if !(slack >= 0.0) {
        return Err(Error::InvalidParam(format!("slack must be >= 0, got {slack}")));
    }
    let mut max_lower: f64 = 0.0;
    let mut max_upper: f64 = 0.0;
    let mut offenders: Vec<(usize, f64, bool)> = Vec::new();
    for (k, ((uv, lv), hv)) in u
        .values()
        .iter()
        .zip(lower.values())
        .zip(upper.values())
        .enumerate()
    {
        let low_viol = (lv - uv) - slack;
        if low_viol > 0.0 {
            max_lower = max_lower.max(low_viol);
            offenders.push((k, low_viol, false));
        }
        let up_viol = (uv - hv) - slack;
        if up_viol > 0.0 {
            max_upper = max_upper.max(up_viol);
            offenders.push((k, up_viol, true));
        }
    }
    offenders.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then(a.0.cmp(&b.0)));
    offenders.truncate(16);
    Ok(EnvelopeReport {
        max_lower_violation: max_lower,
        max_upper_violation: max_upper,
        worst: offenders,
    })
}

/// Calibrate the generation growth constant: starting from c6 = 1, double
/// it (at most `max_doublings` times) until the generation envelopes
/// contain every provided snapshot within the slack.
pub fn calibrate_c6(
    u0_field: &ScalarField,
    snapshots: &[(f64, &ScalarField)],
    eps: f64,
    spec: &BistableSpec,
    slack: f64,
    max_doublings: usize,
) -> Result<GenerationConstants> {
    let mut c6 = 1.0;
    for _ in 0..=max_doublings {
        let consts = GenerationConstants::derive(spec, c6)?;
        let mut all_contained = true;
        for &(t, u) in snapshots {
            let (lower, upper) = generation_envelope(u0_field, t, eps, spec, &consts)?;
            let report = check_envelope(u, &lower, &upper, slack)?;
            if !report.contained() {
                all_contained = false;
                break;
            }
        }
        if all_contained {
            return Ok(consts);
        }
        c6 *= 2.0;
    }
    Err(Error::InvalidParam(format!(
        "generation envelopes leak even at c6 = {c6}; widen the slack or shrink eps"
    )))
}

/// Interface-threshold diagnostics tied to the generation and motion
/// constructions.
#[derive(Debug, Clone)]
pub struct Thresholds {
    /// Initial-value offset: beyond 1/2 +- m0 eps the flow reaches the
    /// stable zeros by the generation time.
    pub m0: f64,
    /// Distance offset corresponding to m0 through the initial datum slope.
    pub m1: f64,
    /// Interface-location constant from the profile tails.
    pub c: f64,
    /// Margin of the profile condition U0(m1 - k) >= 1 - sigma beta / 3
    /// (negative when the desk-scale window forces it to fail).
    pub k_condition_margin: f64,
}

/// Smallest offset c such that the flow started from 1/2 +- c eps reaches
/// the eta-neighborhoods of the stable zeros by tau = |ln eps| / mu, for
/// both perturbation signs.
pub fn fit_generation_offset(eta: f64, eps: f64, spec: &BistableSpec) -> Result<f64> {
    if !(eta > 0.0 && eta < 0.25) {
        return Err(Error::InvalidParam(format!("eta must lie in (0, 1/4), got {eta}")));
    }
    let delta = eps * spec.g_sup();
    if !(delta < delta_max()) {
        return Err(Error::RootsCoalesce {
            delta,
            delta_max: delta_max(),
        });
    }
    let tau = eps.ln().abs() / MU;
    let c_hi = 0.45 * (2.0 * spec.c0 - 0.5) / eps;
    let reaches_up = |c: f64, d: f64| -> Result<bool> {
        Ok(flow_y(tau, 0.5 + c * eps, d)? >= 1.0 - eta)
    };
    let reaches_down = |c: f64, d: f64| -> Result<bool> {
        Ok(flow_y(tau, 0.5 - c * eps, d)? <= eta)
    };
    let mut worst: f64 = 0.0;
    for d in [delta, -delta] {
        for dir_up in [true, false] {
            let hit = |c: f64| -> Result<bool> {
                if dir_up {
                    reaches_up(c, d)
                } else {
                    reaches_down(c, d)
                }
            };
            if !hit(c_hi)? {
                return Err(Error::InvalidParam(format!(
                    "generation offset does not stabilize below c = {c_hi}; eta = {eta}, eps = {eps}"
                )));
            }
            let (mut lo, mut hi) = (0.0, c_hi);
            for _ in 0..60 {
                let mid = 0.5 * (lo + hi);
                if hit(mid)? {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            worst = worst.max(hi);
        }
    }
    Ok(worst)
}

/// Fit the interface thresholds for the given initial-data profile (the
/// value of u0 at signed distance s from the interface).
pub fn fit_thresholds(
    eta: f64,
    eps: f64,
    spec: &BistableSpec,
    gen: &GenerationConstants,
    motion: &MotionConstants,
    profile_at_distance: impl Fn(f64) -> f64,
) -> Result<Thresholds> {
    let c7 = fit_generation_offset(eta, eps, spec)?;
    let m0 = c7 + 1.5 * gen.c6;

    // smallest m1 with u0(+-m1 eps) past 1/2 -+ m0 eps on both sides
    let deviation = |s: f64| (profile_at_distance(s) - 0.5).abs();
    let target = m0 * eps;
    let reach = 1e4 * eps;
    if deviation(reach) < target || deviation(-reach) < target {
        return Err(Error::InvalidParam(format!(
            "initial datum never exceeds the generation offset m0 eps = {target}"
        )));
    }
    let mut m1: f64 = 0.0;
    for side in [1.0, -1.0] {
        let (mut lo, mut hi) = (0.0, reach);
        for _ in 0..80 {
            let mid = 0.5 * (lo + hi);
            if deviation(side * mid) >= target {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        m1 = m1.max(hi / eps);
    }

    let c = (motion.l * motion.t_horizon).exp()
        + motion.k
        + 2.0 * std::f64::consts::SQRT_2 * (1.0 - eta).atanh();
    let k_condition_margin = u0(m1 - motion.k) - (1.0 - motion.sigma * motion.beta / 3.0);
    Ok(Thresholds {
        m0,
        m1,
        c,
        k_condition_margin,
    })
}
