//! Gate counts and closed-form error bounds.

use serde::{Deserialize, Serialize};

/// Depth after `k` group-commutator steps with `n` repetitions each,
/// `N_K = (4N+1)((4N+3)^K − 1)/(4N+2)`. `None` on `u128` overflow.
pub fn checked_depth_exact(k: u32, n: u64) -> Option<u128> {
    let n = n as u128;
    let pow = (4 * n + 3).checked_pow(k)?;
    (4 * n + 1).checked_mul(pow - 1).map(|x| x / (4 * n + 2))
}

/// [`checked_depth_exact`], panicking on overflow.
///
/// ```
/// use dbqsp::engine::depth_exact;
/// assert_eq!([1, 2, 3].map(|k| depth_exact(k, 1)), [5, 40, 285]);
/// ```
pub fn depth_exact(k: u32, n: u64) -> u128 {
    checked_depth_exact(k, n).expect("depth overflows u128")
}

/// `N_{k+1} = (4N+3) N_k + 4N + 1` from `N_0 = 0`, all intermediate values.
pub fn depth_recursion(k: u32, n: u64) -> Vec<u128> {
    let n = n as u128;
    let mut out = vec![0u128];
    for _ in 0..k {
        let prev = *out.last().expect("nonempty");
        out.push((4 * n + 3) * prev + 4 * n + 1);
    }
    out
}

/// `log10 N_K`, usable where the exact count overflows.
pub fn depth_log10(k: u32, n: u64) -> f64 {
    let n = n as f64;
    if k == 0 {
        return f64::NEG_INFINITY;
    }
    (4.0 * n + 1.0).log10() + k as f64 * (4.0 * n + 3.0).log10() + (1.0 - (4.0 * n + 3.0).powi(-(k as i32))).log10()
        - (4.0 * n + 2.0).log10()
}

/// Smallest `N` with `(4/3)√ζ (1+6ζ)^K / √N ≤ ε`.
///
/// ```
/// use dbqsp::engine::sufficient_gc_repetitions;
/// assert_eq!(sufficient_gc_repetitions(1, 1.0, 0.1), 8712);
/// assert_eq!(sufficient_gc_repetitions(0, 3.0, 1e-9), 1);
/// ```
pub fn sufficient_gc_repetitions(k: u32, zeta: f64, epsilon: f64) -> u64 {
    if k == 0 {
        return 1;
    }
    let n = 16.0 / 9.0 * zeta * (1.0 + 6.0 * zeta).powi(2 * k as i32) / (epsilon * epsilon);
    // Guard the ceiling against representation error on exact integers.
    let c = n.ceil();
    let c = if c - n > 1.0 - 1e-9 { c - 1.0 } else { c };
    (c as u64).max(1)
}

/// `8|s|^{3/2}/√N`, the error of one N-fold group commutator.
pub fn gc_step_error_bound(s: f64, n: u64) -> f64 {
    8.0 * s.abs().powf(1.5) / (n as f64).sqrt()
}

/// `(4/3)√ζ (1+6ζ)^K / √N`, the accumulated compilation error.
pub fn gc_total_error_bound(k: u32, zeta: f64, n: u64) -> f64 {
    if k == 0 {
        return 0.0;
    }
    4.0 / 3.0 * zeta.sqrt() * (1.0 + 6.0 * zeta).powi(k as i32) / (n as f64).sqrt()
}

/// `ζ = max_k max(|s_k|, θ_k)`.
pub fn zeta_of(params: impl IntoIterator<Item = (f64, f64)>) -> f64 {
    params.into_iter().fold(0.0, |m, (s, t)| m.max(s.abs()).max(t))
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct StabilityInputs {
    pub k: u32,
    pub zeta: f64,
    pub delta_s: f64,
    pub delta_theta: f64,
    /// Operator norm of the Hamiltonian perturbation.
    pub delta_h: f64,
    pub delta_e: f64,
    pub delta_v: f64,
    pub eta: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StabilityBounds {
    /// `(1/(3ζ))(1+6ζ)^K max(δs, δθ)`.
    pub parameter: f64,
    /// `(1/3)(1+6ζ)^K ‖ΔH‖`.
    pub hamiltonian: f64,
    /// `20η⁴ max(δE, δV)` for one step.
    pub single_step_statistical: f64,
    /// `(14 + 120η⁴)^K max(δE, δV)`.
    pub k_step_statistical: f64,
}

/// ```
/// use dbqsp::engine::{stability_bounds, StabilityInputs};
/// let b = stability_bounds(&StabilityInputs { k: 1, zeta: 1.0, delta_s: 0.01, delta_theta: 0.01, eta: 1.0, ..Default::default() });
/// assert!((b.parameter - 7.0 / 300.0).abs() < 1e-15);
/// ```
pub fn stability_bounds(i: &StabilityInputs) -> StabilityBounds {
    let growth = (1.0 + 6.0 * i.zeta).powi(i.k as i32);
    let stat = i.delta_e.max(i.delta_v);
    let eta4 = i.eta.powi(4);
    let parameter = if i.zeta > 0.0 { growth * i.delta_s.max(i.delta_theta) / (3.0 * i.zeta) } else { 0.0 };
    StabilityBounds {
        parameter,
        hamiltonian: growth * i.delta_h / 3.0,
        single_step_statistical: 20.0 * eta4 * stat,
        k_step_statistical: (14.0 + 120.0 * eta4).powi(i.k as i32) * stat,
    }
}

/// `η = max(1/√V, 1/√V', 1/|E − z|, 1/|E' − z|, 1 + |z|)` for one step of two trajectories.
pub fn eta_step(v: f64, v_alt: f64, gap: f64, gap_alt: f64, z_abs: f64) -> f64 {
    [1.0 / v.sqrt(), 1.0 / v_alt.sqrt(), 1.0 / gap, 1.0 / gap_alt, 1.0 + z_abs].into_iter().fold(1.0, f64::max)
}
