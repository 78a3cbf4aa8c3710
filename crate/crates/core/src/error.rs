use thiserror::Error;

/// Errors raised by the solver and analysis layers.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParam(String),

    #[error("grid mismatch between operands: ({0}x{1}) vs ({2}x{3})")]
    GridMismatch(usize, usize, usize, usize),

    #[error("elliptic solve residual {residual:.3e} exceeds tolerance {bound:.3e}")]
    SolverResidual { residual: f64, bound: f64 },

    #[error("roots coalesce: |delta| = {delta:.6} is outside (-{delta_max:.6}, {delta_max:.6})")]
    RootsCoalesce { delta: f64, delta_max: f64 },

    #[error("derivative identity undefined at equilibrium: f_delta({xi}) = 0")]
    AtEquilibrium { xi: f64 },

    #[error("step-size underflow in scalar flow integration at tau = {tau}")]
    StepUnderflow { tau: f64 },

    #[error("blow-up guard tripped at t = {t}: u range [{min:.3}, {max:.3}] outside [{lo}, {hi}]")]
    BlowUp { t: f64, min: f64, max: f64, lo: f64, hi: f64 },

    #[error("interface vanished")]
    InterfaceVanished,

    #[error("radius collapsed to zero near t = {t}")]
    RadiusCollapse { t: f64 },

    #[error("interface too close to boundary: clearance {clearance:.4} <= 4*d0 = {required:.4}")]
    InterfaceTooClose { clearance: f64, required: f64 },

    #[error("CFL violation: dt = {dt:.3e} exceeds limit {limit:.3e}")]
    CflViolation { dt: f64, limit: f64 },

    #[error("epsilon too large for (K, L, d0): exp(L t) + K = {lhs:.3} > d0/(2 eps) = {rhs:.3}")]
    EnvelopeWindow { lhs: f64, rhs: f64 },

    #[error("shifted argument {value:.4} leaves the admissible window (-{half_width:.4}, {half_width:.4})")]
    WindowExceeded { value: f64, half_width: f64 },

    #[error("empty polyline")]
    EmptyPolyline,

    #[error("no layer crossings found on any sample line")]
    NoLayer,

    #[error("nonpositive metric {metric} in rate fit")]
    NonpositiveMetric { metric: f64 },

    #[error("expression error: {0}")]
    Expr(String),
}

pub type Result<T> = std::result::Result<T, Error>;
