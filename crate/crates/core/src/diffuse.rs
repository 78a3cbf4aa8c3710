//! IMEX time integration of the full chemotaxis-growth system on the
//! rectangle: diffusion is taken implicitly through the Helmholtz solver,
//! the chemotaxis flux and the stiff reaction explicitly, and the elliptic
//! equation for the chemoattractant is re-solved after every update.

use crate::expr::Expression;
use crate::kinetics::{u0, BistableSpec};
use crate::numerics::{Grid, HelmholtzSolver, ScalarField};
use crate::sharp::cutoff_value;
use crate::{Error, Result};

const SOLVE_TOL: f64 = 1e-10;
/// Stability factor for the explicit reaction clock: dt <= 0.2 eps^2.
pub const DT_FACTOR: f64 = 0.2;

/// Chemotactic sensitivity transform chi(v).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ChiKind {
    Linear,
    Saturating,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChiSpec {
    pub kind: ChiKind,
    pub k: f64,
}

impl ChiSpec {
    pub fn new(kind: ChiKind, k: f64) -> Result<ChiSpec> {
        if !(k >= 0.0) {
            return Err(Error::InvalidParam(format!("chi strength must be >= 0, got {k}")));
        }
        Ok(ChiSpec { kind, k })
    }

    pub fn none() -> ChiSpec {
        ChiSpec {
            kind: ChiKind::Linear,
            k: 0.0,
        }
    }

    #[inline]
    pub fn chi(&self, v: f64) -> f64 {
        match self.kind {
            ChiKind::Linear => self.k * v,
            ChiKind::Saturating => self.k * v / (1.0 + v),
        }
    }

    #[inline]
    pub fn chi_prime(&self, v: f64) -> f64 {
        match self.kind {
            ChiKind::Linear => self.k,
            ChiKind::Saturating => self.k / ((1.0 + v) * (1.0 + v)),
        }
    }

    pub fn is_off(&self) -> bool {
        self.k == 0.0
    }
}

/// Model and integration parameters for the diffuse solver.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    pub eps: f64,
    pub alpha: f64,
    pub gamma: f64,
    pub chi: ChiSpec,
    pub c0: f64,
    pub dt: f64,
    pub t_end: f64,
}

impl ModelParams {
    pub fn new(
        eps: f64,
        alpha: f64,
        gamma: f64,
        chi: ChiSpec,
        c0: f64,
        dt: f64,
        t_end: f64,
    ) -> Result<ModelParams> {
        if !(eps > 0.0 && eps <= 0.2) {
            return Err(Error::InvalidParam(format!(
                "eps must lie in (0, 0.2] (asymptotic regime), got {eps}"
            )));
        }
        if !(gamma > 0.0) {
            return Err(Error::InvalidParam(format!("gamma must be positive, got {gamma}")));
        }
        let limit = DT_FACTOR * eps * eps;
        if !(dt > 0.0 && dt <= limit * (1.0 + 1e-12)) {
            return Err(Error::InvalidParam(format!(
                "dt = {dt} violates the reaction stability bound {DT_FACTOR} eps^2 = {limit:.3e}"
            )));
        }
        if !(t_end >= 0.0) {
            return Err(Error::InvalidParam(format!("t_end must be >= 0, got {t_end}")));
        }
        // validates alpha > 0 and c0 > 1
        BistableSpec::new(alpha, c0)?;
        Ok(ModelParams {
            eps,
            alpha,
            gamma,
            chi,
            c0,
            dt,
            t_end,
        })
    }

    pub fn spec(&self) -> BistableSpec {
        BistableSpec {
            alpha: self.alpha,
            c0: self.c0,
        }
    }

    /// Generation time t = eps^2 |ln eps| / mu.
    pub fn t_generation(&self) -> f64 {
        self.eps * self.eps * self.eps.ln().abs() / crate::kinetics::MU
    }
}

/// Initial datum construction. All variants are exactly constant on a strip
/// along the boundary, so the discrete Neumann quotient vanishes there.
#[derive(Debug, Clone, PartialEq)]
pub enum InitialData {
    /// Layered ansatz u0(x) = U0(zeta(dist) / eps) around a circle.
    Prepared {
        center: (f64, f64),
        radius: f64,
        d0: f64,
    },
    /// Smooth non-layered datum crossing 1/2 exactly on the circle.
    Unprepared {
        center: (f64, f64),
        radius: f64,
        width: f64,
        amplitude: f64,
    },
    /// Arbitrary expression in x and y, evaluated on wall-flattened
    /// coordinates.
    Custom { expr: String },
}

impl InitialData {
    /// Value of the unprepared profile at signed distance s from the circle
    /// (positive outside). Used when fitting interface thresholds.
    pub fn profile_at_distance(&self, s: f64) -> Option<f64> {
        match self {
            InitialData::Unprepared { width, amplitude, .. } => {
                Some(0.5 + amplitude * (-s / width).tanh())
            }
            InitialData::Prepared { .. } => None,
            InitialData::Custom { .. } => None,
        }
    }
}

/// Monotone C2 ramp on [0, 1] with unit slope at 0 and a flat exit at 1:
/// P(0) = 0, P(1) = 1, P'(0) = 1, P'(1) = 0, P''(0) = P''(1) = 0.
pub(crate) fn ramp_quintic(t: f64) -> f64 {
    t + t * t * t * (4.0 - 7.0 * t + 3.0 * t * t)
}

/// Radius map that is the identity up to `start` and exactly constant
/// beyond `start + width`.
fn saturate_radius(rho: f64, start: f64, width: f64) -> f64 {
    if rho <= start {
        rho
    } else if rho >= start + width {
        start + width
    } else {
        start + width * ramp_quintic((rho - start) / width)
    }
}

/// Coordinate map that freezes a strip of width `plateau` along both walls
/// of [0, len] and is the identity in the middle.
fn flatten_coordinate(x: f64, len: f64, plateau: f64) -> f64 {
    let w = plateau;
    let lo = |x: f64| {
        if x <= plateau {
            plateau
        } else if x >= plateau + w {
            x
        } else {
            (plateau + w) - w * ramp_quintic(((plateau + w) - x) / w)
        }
    };
    if x <= 0.5 * len {
        lo(x)
    } else {
        len - lo(len - x)
    }
}

/// Build the initial datum on the grid.
pub fn initial_data(kind: &InitialData, grid: &Grid, eps: f64) -> Result<ScalarField> {
    match kind {
        InitialData::Prepared { center, radius, d0 } => {
            let clearance = grid.boundary_clearance(center.0, center.1) - radius;
            if clearance <= 4.0 * d0 {
                return Err(Error::InterfaceTooClose {
                    clearance,
                    required: 4.0 * d0,
                });
            }
            let (cx, cy) = *center;
            let (r, d0) = (*radius, *d0);
            Ok(ScalarField::from_fn(grid, move |x, y| {
                let d = (x - cx).hypot(y - cy) - r;
                u0(cutoff_value(d, d0) / eps)
            }))
        }
        InitialData::Unprepared {
            center,
            radius,
            width,
            amplitude,
        } => {
            let rho_max = grid.boundary_clearance(center.0, center.1);
            let clearance = rho_max - radius;
            let required = (0.1 * grid.lx().min(grid.ly())).max(4.0 * grid.hx().max(grid.hy()));
            if clearance <= required {
                return Err(Error::InterfaceTooClose {
                    clearance,
                    required,
                });
            }
            if !(*amplitude > 0.0 && *amplitude < 0.5) {
                return Err(Error::InvalidParam(format!(
                    "unprepared amplitude must lie in (0, 1/2), got {amplitude}"
                )));
            }
            if !(*width > 0.0) {
                return Err(Error::InvalidParam(format!("unprepared width must be positive, got {width}")));
            }
            let (cx, cy) = *center;
            let (r, w, a) = (*radius, *width, *amplitude);
            let sat_start = r + 0.5 * clearance;
            let sat_width = 0.25 * clearance;
            Ok(ScalarField::from_fn(grid, move |x, y| {
                let rho = saturate_radius((x - cx).hypot(y - cy), sat_start, sat_width);
                0.5 + a * ((r - rho) / w).tanh()
            }))
        }
        InitialData::Custom { expr } => {
            let parsed = Expression::parse(expr)?;
            let plateau = 0.05 * grid.lx().min(grid.ly());
            let (lx, ly) = (grid.lx(), grid.ly());
            let field = ScalarField::from_fn(grid, move |x, y| {
                parsed.eval(
                    flatten_coordinate(x, lx, plateau),
                    flatten_coordinate(y, ly, plateau),
                )
            });
            if !field.is_finite() {
                return Err(Error::Expr("expression produced non-finite values".into()));
            }
            Ok(field)
        }
    }
}

/// Time slice of the coupled system: the elliptic constraint for v holds
/// at every exposed state.
#[derive(Debug, Clone)]
pub struct DiffuseState {
    pub t: f64,
    pub u: ScalarField,
    pub v: ScalarField,
}

/// Integrator owning the grid, the parameters and the factorized solver.
pub struct DiffuseSolver {
    grid: Grid,
    params: ModelParams,
    helm: HelmholtzSolver,
    upwind: bool,
}

impl DiffuseSolver {
    pub fn new(grid: &Grid, params: ModelParams) -> DiffuseSolver {
        DiffuseSolver {
            grid: grid.clone(),
            params,
            helm: HelmholtzSolver::new(grid),
            upwind: false,
        }
    }

    /// Switch the chemotaxis face flux to upwind averaging (robustness
    /// experiments only; centered averaging is the default).
    pub fn with_upwind(mut self, on: bool) -> DiffuseSolver {
        self.upwind = on;
        self
    }

    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    /// Wrap an initial datum into a state by solving the elliptic equation.
    pub fn initial_state(&self, u0: ScalarField) -> Result<DiffuseState> {
        if u0.grid() != &self.grid {
            return Err(Error::GridMismatch(
                self.grid.nx(),
                self.grid.ny(),
                u0.grid().nx(),
                u0.grid().ny(),
            ));
        }
        self.guard(&u0, 0.0)?;
        let v = self.helm.solve(&u0, self.params.gamma, SOLVE_TOL)?;
        Ok(DiffuseState { t: 0.0, u: u0, v })
    }

    fn guard(&self, u: &ScalarField, t: f64) -> Result<()> {
        let (lo, hi) = (-0.5, self.params.c0 + 0.5);
        let (min, max) = (u.min(), u.max());
        if min < lo || max > hi {
            return Err(Error::BlowUp { t, min, max, lo, hi });
        }
        Ok(())
    }

    /// Conservative-form chemotaxis divergence div(u grad chi(v)) with
    /// face-centered fluxes; boundary faces carry zero flux.
    fn chemotaxis_divergence(&self, u: &ScalarField, v: &ScalarField) -> ScalarField {
        let g = &self.grid;
        let (nx, ny) = (g.nx(), g.ny());
        let chi: Vec<f64> = v.values().iter().map(|&vv| self.params.chi.chi(vv)).collect();
        let uv = u.values();
        let ihx = 1.0 / g.hx();
        let ihy = 1.0 / g.hy();
        let mut out = vec![0.0; g.n_nodes()];
        let face_u = |ua: f64, ub: f64, dchi: f64, upwind: bool| -> f64 {
            if upwind {
                if dchi > 0.0 {
                    ua
                } else {
                    ub
                }
            } else {
                0.5 * (ua + ub)
            }
        };
        for j in 0..ny {
            for i in 0..nx {
                let k = g.idx(i, j);
                let fe = if i + 1 < nx {
                    let ke = g.idx(i + 1, j);
                    let dchi = (chi[ke] - chi[k]) * ihx;
                    face_u(uv[k], uv[ke], dchi, self.upwind) * dchi
                } else {
                    0.0
                };
                let fw = if i > 0 {
                    let kw = g.idx(i - 1, j);
                    let dchi = (chi[k] - chi[kw]) * ihx;
                    face_u(uv[kw], uv[k], dchi, self.upwind) * dchi
                } else {
                    0.0
                };
                let fn_ = if j + 1 < ny {
                    let kn = g.idx(i, j + 1);
                    let dchi = (chi[kn] - chi[k]) * ihy;
                    face_u(uv[k], uv[kn], dchi, self.upwind) * dchi
                } else {
                    0.0
                };
                let fs = if j > 0 {
                    let ks = g.idx(i, j - 1);
                    let dchi = (chi[k] - chi[ks]) * ihy;
                    face_u(uv[ks], uv[k], dchi, self.upwind) * dchi
                } else {
                    0.0
                };
                out[k] = (fe - fw) * ihx + (fn_ - fs) * ihy;
            }
        }
        ScalarField::from_values(g, out).expect("sized to grid")
    }

    fn step_dt(&self, state: &DiffuseState, dt: f64) -> Result<DiffuseState> {
        let p = &self.params;
        let spec = p.spec();
        let inv_eps2 = 1.0 / (p.eps * p.eps);
        let inv_dt = 1.0 / dt;

        let chemo = if p.chi.is_off() {
            None
        } else {
            Some(self.chemotaxis_divergence(&state.u, &state.v))
        };

        let mut rhs = state.u.clone();
        {
            let rv = rhs.values_mut();
            let uv = state.u.values();
            for k in 0..uv.len() {
                let u = uv[k];
                let mut r = u * inv_dt + inv_eps2 * spec.f_eps(u, p.eps);
                if let Some(c) = &chemo {
                    r -= c.values()[k];
                }
                rv[k] = r;
            }
        }

        let u_new = self.helm.solve(&rhs, inv_dt, SOLVE_TOL)?;
        self.guard(&u_new, state.t + dt)?;
        let v_new = self.helm.solve(&u_new, p.gamma, SOLVE_TOL)?;
        Ok(DiffuseState {
            t: state.t + dt,
            u: u_new,
            v: v_new,
        })
    }

    /// Advance by one nominal time step.
    pub fn step(&self, state: &DiffuseState) -> Result<DiffuseState> {
        self.step_dt(state, self.params.dt)
    }

    /// March to `t_end`, recording the initial state and every probe time.
    ///
    /// Probe times are landed on exactly by shortening the final step of
    /// each segment. Two runs with identical inputs produce bit-identical
    /// trajectories.
    pub fn run(&self, u0: ScalarField, probes: &[f64]) -> Result<Vec<DiffuseState>> {
        let p = &self.params;
        let mut targets: Vec<f64> = probes
            .iter()
            .copied()
            .filter(|&t| t > 0.0 && t <= p.t_end * (1.0 + 1e-12))
            .collect();
        targets.sort_by(|a, b| a.partial_cmp(b).unwrap());
        targets.dedup();
        if targets.last().map_or(true, |&t| t < p.t_end) && p.t_end > 0.0 {
            targets.push(p.t_end);
        }

        let mut state = self.initial_state(u0)?;
        let mut records = vec![state.clone()];
        for &target in &targets {
            while state.t < target - 1e-13 {
                let dt = p.dt.min(target - state.t);
                state = self.step_dt(&state, dt)?;
            }
            state.t = target; // snap accumulated rounding
            records.push(state.clone());
        }
        Ok(records)
    }
}
