use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::state::{EnergyStats, C64};

/// Variances at or below this are an eigenstate breakdown.
pub const EIGENSTATE_TOL: f64 = 1e-12;

/// Below this `|E − z|` the phase is undetermined and set to zero.
pub const GAP_TOL: f64 = 1e-12;

/// How a real root above the current energy (`E < z`) is realized.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RealRootMode {
    /// `θ = π` with the gap-magnitude duration; keeps `|s| ≤ 1/|E − z|`.
    #[default]
    Reflection,
    /// `θ = 0` with the sign-carrying duration of the general linear
    /// synthesis formula. Longer duration, one fewer reflection.
    SignedDuration,
}

/// Duration `s` and phase `θ ∈ [0, 2π)` for one step.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepParams {
    pub s: f64,
    pub theta: f64,
}

/// `s = −arccos(|E − z| / √(V + |E − z|²)) / √V`, `θ = arg(E − z)`.
///
/// ```
/// use dbqsp::engine::step_params;
/// use dbqsp::state::{EnergyStats, C64};
/// let p = step_params(EnergyStats { energy: 0.0, variance: 1.0 }, C64::new(0.0, 1.0)).unwrap();
/// assert!((p.s + std::f64::consts::FRAC_PI_4).abs() < 1e-15);
/// assert!((p.theta - 3.0 * std::f64::consts::FRAC_PI_2).abs() < 1e-15);
/// ```
pub fn step_params(stats: EnergyStats, z: C64) -> Result<StepParams> {
    step_params_with(stats, z, RealRootMode::Reflection, EIGENSTATE_TOL)
}

pub fn step_params_with(stats: EnergyStats, z: C64, mode: RealRootMode, tol: f64) -> Result<StepParams> {
    if !(stats.variance > tol) {
        return Err(Error::EigenstateBreakdown { step: 0, variance: stats.variance });
    }
    let gap = C64::new(stats.energy, 0.0) - z;
    if mode == RealRootMode::SignedDuration && z.im == 0.0 && gap.re < 0.0 {
        return Ok(StepParams { s: linear_synthesis_duration(stats, -z.re, 1.0), theta: 0.0 });
    }
    let d = gap.norm();
    let rv = stats.variance.sqrt();
    let s = -(d / (stats.variance + d * d).sqrt()).acos() / rv;
    let theta = if d < GAP_TOL { 0.0 } else { wrap_phase(gap.arg()) };
    Ok(StepParams { s, theta })
}

/// Duration with `e^{s[Ψ,H]}|Ψ⟩ = (xI + yH)|Ψ⟩ / ‖(xI + yH)|Ψ⟩‖`:
/// `s = −sgn(y) arccos((x + yE)/‖(x + yH)Ψ‖)/√V`.
pub fn linear_synthesis_duration(stats: EnergyStats, x: f64, y: f64) -> f64 {
    let norm = (x * x + 2.0 * x * y * stats.energy + y * y * stats.second_moment()).max(0.0).sqrt();
    let c = ((x + y * stats.energy) / norm).clamp(-1.0, 1.0);
    -y.signum() * c.acos() / stats.variance.sqrt()
}

/// Map an angle into `[0, 2π)`.
pub fn wrap_phase(theta: f64) -> f64 {
    let t = theta.rem_euclid(TAU);
    if t >= TAU {
        0.0
    } else {
        t
    }
}
