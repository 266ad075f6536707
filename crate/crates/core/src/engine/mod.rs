//! The DB-QSP recursion `Ψ_{k+1} = e^{iθ_kΨ_k} e^{s_k[Ψ_k,H]} Ψ_k`, exact and
//! compiled into group commutators.

mod bounds;
mod params;

pub use bounds::{
    checked_depth_exact, depth_exact, depth_log10, depth_recursion, eta_step, gc_step_error_bound,
    gc_total_error_bound, stability_bounds, sufficient_gc_repetitions, zeta_of, StabilityBounds, StabilityInputs,
};
pub use params::{
    linear_synthesis_duration, step_params, step_params_with, wrap_phase, RealRootMode, StepParams, EIGENSTATE_TOL,
    GAP_TOL,
};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pauli::Observable;
use crate::poly::{apply_poly_log, success_probability, PolynomialSpec};
use crate::rng::derive_seed;
use crate::sampling::{estimate_energy_and_variance, ShotAllocation};
use crate::state::{
    apply_commutator_exp, apply_evolution, apply_reflection, energy_stats, state_distance, EnergyStats,
    HermitianOperator, LinearOp, StateVector, C64,
};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RootOrder {
    /// Consume roots in the order given.
    #[default]
    Given,
    /// At each step take the remaining root farthest from the current energy.
    GreedyGap,
    /// Sorted by modulus, so `±z` pairs of odd or even polynomials are applied
    /// back to back. Keeps a `±λ`-symmetric input away from the eigenstates.
    Paired,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EngineOptions {
    pub eigenstate_tol: f64,
    pub root_order: RootOrder,
    pub real_root_mode: RealRootMode,
}

impl Default for EngineOptions {
    fn default() -> Self {
        Self { eigenstate_tol: EIGENSTATE_TOL, root_order: RootOrder::Given, real_root_mode: RealRootMode::Reflection }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Exact,
    GroupCommutator,
}

/// Source of the per-step energy moments in [`dbqsp_run`].
#[derive(Clone, Debug, PartialEq)]
pub enum Estimation {
    Exact,
    /// Moments estimated from simulated Pauli measurements. Step `k` draws
    /// with seed `derive_seed(seed, k)`.
    Sampled { alloc: ShotAllocation, seed: u64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub k: usize,
    pub root: C64,
    /// Energy used for the step parameters (estimated in sampled mode).
    pub energy: f64,
    pub variance: f64,
    pub duration: f64,
    pub phase: f64,
    pub depth_after: u128,
    /// Raw distance to the oracle state after this step.
    pub dist_raw: f64,
    pub dist_aligned: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub mode: Mode,
    pub steps: Vec<StepRecord>,
    pub final_state: StateVector,
    pub total_depth: u128,
    pub oracle_distance_raw: f64,
    pub oracle_distance_aligned: f64,
    pub gc_repetitions: Option<u64>,
    pub seed: Option<u64>,
    /// Largest `|‖v‖ − 1|` seen before a renormalization.
    pub max_norm_drift: f64,
}

/// CSV columns of [`RunReport::to_csv`].
pub const STEP_CSV_HEADER: [&str; 10] =
    ["k", "re_z", "im_z", "E", "V", "s", "theta", "depth_after", "dist_raw", "dist_aligned"];

impl RunReport {
    /// `ζ = max(|s_k|, θ_k)` over the run.
    pub fn zeta(&self) -> f64 {
        zeta_of(self.steps.iter().map(|s| (s.duration, s.phase)))
    }

    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(STEP_CSV_HEADER).map_err(csv_err)?;
        for s in &self.steps {
            w.write_record(&[
                s.k.to_string(),
                s.root.re.to_string(),
                s.root.im.to_string(),
                s.energy.to_string(),
                s.variance.to_string(),
                s.duration.to_string(),
                s.phase.to_string(),
                s.depth_after.to_string(),
                s.dist_raw.to_string(),
                s.dist_aligned.to_string(),
            ])
            .map_err(csv_err)?;
        }
        String::from_utf8(w.into_inner().map_err(|e| Error::Parse(e.to_string()))?).map_err(|e| Error::Parse(e.to_string()))
    }
}

pub(crate) fn csv_err(e: csv::Error) -> Error {
    Error::Io(std::io::Error::other(e))
}

/// Gates applied by one compiled step.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct GateCount {
    /// `e^{±irH}` factors.
    pub evolutions: u64,
    /// Reflections about the current state, `θ`-reflection included.
    pub reflections: u64,
}

impl GateCount {
    pub fn total(&self) -> u64 {
        self.evolutions + self.reflections
    }

    /// Depth after this step when the current state itself costs `prev` gates
    /// to prepare: the preparation runs once, and each reflection about the
    /// current state is conjugated by the preparation and its inverse.
    pub fn depth_after(&self, prev: u128) -> u128 {
        prev + self.evolutions as u128 + self.reflections as u128 * (2 * prev + 1)
    }
}

/// `e^{iθΨ} (e^{irΨ} e^{irH} e^{−irΨ} e^{−irH})^N` with `r = √(|s|/N)`,
/// which approximates `e^{iθΨ} e^{s[Ψ,H]}` for `s ≤ 0`.
pub fn gc_step(
    state: &StateVector,
    psi: &StateVector,
    h: &HermitianOperator,
    s: f64,
    theta: f64,
    n: u64,
) -> Result<(StateVector, GateCount)> {
    if s > 0.0 {
        return Err(Error::Contract(format!("group commutator needs s <= 0, got {s}")));
    }
    if n == 0 {
        return Err(Error::InvalidArgument("N must be positive".into()));
    }
    let r = (s.abs() / n as f64).sqrt();
    let mut cur = state.clone();
    let mut count = GateCount::default();
    for _ in 0..n {
        cur = apply_evolution(&cur, h, -r)?;
        cur = apply_reflection(&cur, psi, -r)?;
        cur = apply_evolution(&cur, h, r)?;
        cur = apply_reflection(&cur, psi, r)?;
        count.evolutions += 2;
        count.reflections += 2;
    }
    cur = apply_reflection(&cur, psi, theta)?;
    count.reflections += 1;
    Ok((cur, count))
}

/// `(e^{irH} e^{irΨ} e^{−irH} e^{−irΨ})^N` with `r = √(s/N)`, approximating
/// `e^{s[Ψ,H]}` for `s ≥ 0`.
pub fn gc_step_swapped(
    state: &StateVector,
    psi: &StateVector,
    h: &HermitianOperator,
    s: f64,
    n: u64,
) -> Result<(StateVector, GateCount)> {
    if s < 0.0 {
        return Err(Error::Contract(format!("swapped group commutator needs s >= 0, got {s}")));
    }
    if n == 0 {
        return Err(Error::InvalidArgument("N must be positive".into()));
    }
    let r = (s / n as f64).sqrt();
    let mut cur = state.clone();
    let mut count = GateCount::default();
    for _ in 0..n {
        cur = apply_reflection(&cur, psi, -r)?;
        cur = apply_evolution(&cur, h, -r)?;
        cur = apply_reflection(&cur, psi, r)?;
        cur = apply_evolution(&cur, h, r)?;
        count.evolutions += 2;
        count.reflections += 2;
    }
    Ok((cur, count))
}

struct Trace {
    roots: Vec<C64>,
    state: StateVector,
    oracle: StateVector,
    steps: Vec<StepRecord>,
    depth: u128,
    drift: f64,
}

impl Trace {
    fn new(state0: &StateVector, h: &impl LinearOp, poly: &PolynomialSpec, order: RootOrder) -> Result<Self> {
        if state0.n_qubits() != h.n_qubits() {
            return Err(Error::Dimension { expected: h.n_qubits(), found: state0.n_qubits() });
        }
        let mut roots = poly.roots.clone();
        if order == RootOrder::Paired {
            roots.sort_by(|a, b| a.norm().total_cmp(&b.norm()).then(a.re.total_cmp(&b.re)).then(a.im.total_cmp(&b.im)));
        }
        Ok(Self { roots, state: state0.clone(), oracle: state0.clone(), steps: vec![], depth: 0, drift: 0.0 })
    }

    fn next_root(&mut self, k: usize, stats: EnergyStats, order: RootOrder) -> C64 {
        if order == RootOrder::GreedyGap {
            let e = C64::new(stats.energy, 0.0);
            let best = (k..self.roots.len())
                .max_by(|&a, &b| (e - self.roots[a]).norm().total_cmp(&(e - self.roots[b]).norm()).then(b.cmp(&a)))
                .expect("roots remain");
            self.roots.swap(k, best);
        }
        self.roots[k]
    }

    fn params(&self, k: usize, stats: EnergyStats, z: C64, opts: &EngineOptions) -> Result<StepParams> {
        step_params_with(stats, z, opts.real_root_mode, opts.eigenstate_tol).map_err(|e| match e {
            Error::EigenstateBreakdown { variance, .. } => Error::EigenstateBreakdown { step: k, variance },
            e => e,
        })
    }

    fn advance(&mut self, k: usize, h: &impl LinearOp, z: C64, stats: EnergyStats, p: StepParams, next: StateVector) -> Result<()> {
        let (amps, _) = apply_poly_log(self.oracle.amplitudes(), h, &PolynomialSpec::from_roots(vec![z]))?;
        self.oracle = StateVector::new(self.oracle.n_qubits(), amps)?;
        let raw: f64 = next.amplitudes().iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        self.drift = self.drift.max((raw - 1.0).abs());
        self.state = next;
        self.steps.push(StepRecord {
            k,
            root: z,
            energy: stats.energy,
            variance: stats.variance,
            duration: p.s,
            phase: p.theta,
            depth_after: self.depth,
            dist_raw: state_distance(&self.state, &self.oracle, false)?,
            dist_aligned: state_distance(&self.state, &self.oracle, true)?,
        });
        Ok(())
    }

    fn finish(self, mode: Mode, n: Option<u64>, seed: Option<u64>) -> Result<RunReport> {
        Ok(RunReport {
            mode,
            oracle_distance_raw: state_distance(&self.state, &self.oracle, false)?,
            oracle_distance_aligned: state_distance(&self.state, &self.oracle, true)?,
            steps: self.steps,
            final_state: self.state,
            total_depth: self.depth,
            gc_repetitions: n,
            seed,
            max_norm_drift: self.drift,
        })
    }
}

/// Exact DB-QSP: the closed-form double-bracket exponential and reflection per root.
///
/// Depth is not tracked in exact mode and stays zero.
pub fn exact_qsp(state0: &StateVector, h: &impl LinearOp, poly: &PolynomialSpec, opts: &EngineOptions) -> Result<RunReport> {
    run_exact(state0, h, poly, opts, |_, s| energy_stats(s, h))?.finish(Mode::Exact, None, None)
}

/// [`exact_qsp`] with the step moments taken from `estimation`.
pub fn exact_qsp_estimated(
    state0: &StateVector,
    h: &Observable,
    poly: &PolynomialSpec,
    estimation: &Estimation,
    opts: &EngineOptions,
) -> Result<RunReport> {
    let seed = estimation_seed(estimation);
    run_exact(state0, h, poly, opts, |k, s| estimate(estimation, k, s, Some(h)))?.finish(Mode::Exact, None, seed)
}

fn run_exact<H: LinearOp>(
    state0: &StateVector,
    h: &H,
    poly: &PolynomialSpec,
    opts: &EngineOptions,
    stats_of: impl Fn(usize, &StateVector) -> Result<EnergyStats>,
) -> Result<Trace> {
    let mut t = Trace::new(state0, h, poly, opts.root_order)?;
    for k in 0..poly.degree() {
        let stats = stats_of(k, &t.state)?;
        let z = t.next_root(k, stats, opts.root_order);
        let p = t.params(k, stats, z, opts)?;
        let a = apply_commutator_exp(&t.state, &t.state, h, p.s)?;
        let next = apply_reflection(&a, &t.state, p.theta)?;
        t.advance(k, h, z, stats, p, next)?;
    }
    Ok(t)
}

/// `Π e^{iθ_kΨ_k} e^{s_k[Ψ_k,H]} |Ψ₀⟩` for fixed parameters, each factor
/// built from the current state.
pub fn qsp_with_params(state0: &StateVector, h: &impl LinearOp, params: &[StepParams]) -> Result<StateVector> {
    let mut cur = state0.clone();
    for p in params {
        let a = apply_commutator_exp(&cur, &cur, h, p.s)?;
        cur = apply_reflection(&a, &cur, p.theta)?;
    }
    Ok(cur)
}

fn estimation_seed(e: &Estimation) -> Option<u64> {
    match e {
        Estimation::Exact => None,
        Estimation::Sampled { seed, .. } => Some(*seed),
    }
}

fn estimate(e: &Estimation, k: usize, state: &StateVector, obs: Option<&Observable>) -> Result<EnergyStats> {
    match e {
        Estimation::Exact => match obs {
            Some(o) => energy_stats(state, o),
            None => Err(Error::Contract("exact estimation needs an operator".into())),
        },
        Estimation::Sampled { alloc, seed } => {
            let o = obs.ok_or_else(|| Error::InvalidArgument("sampled estimation needs a Pauli decomposition".into()))?;
            let est = estimate_energy_and_variance(state, o, alloc, derive_seed(*seed, k as u64))?;
            Ok(EnergyStats { energy: est.energy, variance: est.variance })
        }
    }
}

/// Compiled DB-QSP: each step's double-bracket exponential is replaced by an
/// `N`-fold group commutator, and the gate count follows the recursive
/// preparation cost of the current state.
pub fn dbqsp_run(
    state0: &StateVector,
    h: &HermitianOperator,
    poly: &PolynomialSpec,
    n: u64,
    estimation: &Estimation,
    opts: &EngineOptions,
) -> Result<RunReport> {
    let mut t = Trace::new(state0, h, poly, opts.root_order)?;
    let seed = estimation_seed(estimation);
    for k in 0..poly.degree() {
        let stats = match estimation {
            Estimation::Exact => energy_stats(&t.state, h)?,
            _ => estimate(estimation, k, &t.state, h.observable())?,
        };
        let z = t.next_root(k, stats, opts.root_order);
        let p = t.params(k, stats, z, opts)?;
        let (next, count) = gc_step(&t.state, &t.state, h, p.s, p.theta, n)?;
        t.depth = count.depth_after(t.depth);
        t.advance(k, h, z, stats, p, next)?;
    }
    t.finish(Mode::GroupCommutator, Some(n), seed)
}

/// `‖p(H/α)|Ψ⟩‖²`, the post-selection success probability of a block-encoded `p`.
pub fn postselect_success_prob(state: &StateVector, h: &impl LinearOp, alpha: f64, poly: &PolynomialSpec) -> Result<f64> {
    success_probability(state, h, alpha, poly)
}

/// `max |p(λ/α)|` over the spectrum of `H`; post-selection needs it at most 1.
pub fn poly_max_on_spectrum(h: &HermitianOperator, alpha: f64, poly: &PolynomialSpec) -> f64 {
    h.eigenvalues().iter().map(|&l| poly.eval(C64::new(l / alpha, 0.0)).norm()).fold(0.0, f64::max)
}

/// Per-step LCU success product `Π ‖(H − z_k)Ψ_k‖² / (|z_k| + ‖w‖₁)²` over the
/// normalized intermediate states, and the telescoped single-shot form
/// `‖Π (H − z_k) Ψ₀‖² / Π (|z_k| + ‖w‖₁)²`.
pub fn lcu_success(state0: &StateVector, h: &impl LinearOp, poly: &PolynomialSpec, one_norm: f64) -> Result<(f64, f64)> {
    let mut log_prod = 0.0;
    let mut cur = state0.amplitudes().to_vec();
    for z in &poly.roots {
        let (next, ln) = apply_poly_log(&cur, h, &PolynomialSpec::from_roots(vec![*z]))?;
        log_prod += 2.0 * (ln - (z.norm() + one_norm).ln());
        cur = next;
    }
    let (_, ln_all) = apply_poly_log(state0.amplitudes(), h, &PolynomialSpec::from_roots(poly.roots.clone()))?;
    let denom: f64 = poly.roots.iter().map(|z| 2.0 * (z.norm() + one_norm).ln()).sum();
    Ok((log_prod.exp(), (2.0 * ln_all - denom).exp()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poly::apply_poly_oracle;
    use crate::rng::rng;
    use rand::Rng;

    fn z_op() -> (Observable, HermitianOperator) {
        let o = Observable::from_strs(1, &[(1.0, "Z")]).unwrap();
        let h = HermitianOperator::from_observable(&o).unwrap();
        (o, h)
    }

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn exact_examples() {
        let (o, _) = z_op();
        let plus = StateVector::product("+").unwrap();
        let r = exact_qsp(&plus, &o, &PolynomialSpec::from_real_roots(&[0.0]), &EngineOptions::default()).unwrap();
        assert!(state_distance(&r.final_state, &StateVector::product("-").unwrap(), false).unwrap() < 1e-12);
        assert!(r.oracle_distance_raw < 1e-12);

        let r = exact_qsp(&plus, &o, &PolynomialSpec::from_roots(vec![c(0.0, 1.0)]), &EngineOptions::default()).unwrap();
        let expect = StateVector::new(1, vec![c(0.5, -0.5), c(-0.5, -0.5)]).unwrap();
        assert!(state_distance(&r.final_state, &expect, false).unwrap() < 1e-12);

        let r = exact_qsp(&plus, &o, &PolynomialSpec::from_roots(vec![]), &EngineOptions::default()).unwrap();
        assert_eq!(r.final_state, plus);
        assert!(r.steps.is_empty());
    }

    #[test]
    fn eigenstate_breakdown_reports_step() {
        let (o, _) = z_op();
        // (Z + 1)|+⟩ ∝ |0⟩, an eigenstate, so the second step breaks down.
        let poly = PolynomialSpec::from_real_roots(&[-1.0, 0.5]);
        let r = exact_qsp(&StateVector::product("+").unwrap(), &o, &poly, &EngineOptions::default());
        assert!(matches!(r, Err(Error::EigenstateBreakdown { step: 1, .. })), "{r:?}");
        let r = exact_qsp(&StateVector::zero(1).unwrap(), &o, &poly, &EngineOptions::default());
        assert!(matches!(r, Err(Error::EigenstateBreakdown { step: 0, .. })));
    }

    #[test]
    fn gc_step_examples() {
        let (o, h) = z_op();
        let plus = StateVector::product("+").unwrap();
        let (out, count) = gc_step(&plus, &plus, &h, 0.0, 0.0, 3).unwrap();
        assert!(state_distance(&out, &plus, false).unwrap() < 1e-15);
        assert_eq!(count.total(), 13);
        assert!(matches!(gc_step(&plus, &plus, &h, 0.1, 0.0, 1), Err(Error::Contract(_))));

        let exact = apply_commutator_exp(&plus, &plus, &o, -0.1).unwrap();
        let d1 = state_distance(&gc_step(&plus, &plus, &h, -0.1, 0.0, 1).unwrap().0, &exact, false).unwrap();
        let d100 = state_distance(&gc_step(&plus, &plus, &h, -0.1, 0.0, 100).unwrap().0, &exact, false).unwrap();
        assert!(d1 <= gc_step_error_bound(-0.1, 1));
        assert!((d1 / d100 - 10.0).abs() < 1.0, "{d1} {d100}");
    }

    #[test]
    fn swapped_gc_converges_for_positive_s() {
        let mut r = rng(5);
        let o = crate::state::tests::random_observable(2, 4, &mut r);
        let h = HermitianOperator::from_observable(&o).unwrap();
        let psi = StateVector::random(2, &mut r).unwrap();
        let exact = apply_commutator_exp(&psi, &psi, &o, 0.2).unwrap();
        let d = |n| state_distance(&gc_step_swapped(&psi, &psi, &h, 0.2, n).unwrap().0, &exact, false).unwrap();
        assert!(d(1) <= gc_step_error_bound(0.2, 1));
        assert!(d(400) < d(4) / 5.0);
        assert!(gc_step_swapped(&psi, &psi, &h, -0.1, 1).is_err());
    }

    #[test]
    fn depth_counts() {
        let (_, h) = z_op();
        let plus = StateVector::product("+").unwrap();
        let poly = PolynomialSpec::from_real_roots(&[0.0]);
        let r = dbqsp_run(&plus, &h, &poly, 1, &Estimation::Exact, &EngineOptions::default()).unwrap();
        assert_eq!(r.total_depth, 5);
        let mut rr = rng(2);
        let o = crate::state::tests::random_observable(2, 4, &mut rr);
        let h = HermitianOperator::from_observable(&o).unwrap();
        let psi = StateVector::random(2, &mut rr).unwrap();
        for k in 0..=4u32 {
            let roots: Vec<C64> = (0..k).map(|_| c(rr.random_range(-1.0..1.0), rr.random_range(-1.0..1.0))).collect();
            for n in [1u64, 2, 5, 32] {
                let r = dbqsp_run(&psi, &h, &PolynomialSpec::from_roots(roots.clone()), n, &Estimation::Exact, &EngineOptions::default())
                    .unwrap();
                assert_eq!(r.total_depth, depth_exact(k, n));
                let rec: Vec<u128> = r.steps.iter().map(|s| s.depth_after).collect();
                assert_eq!(rec, depth_recursion(k, n)[1..].to_vec());
            }
        }
    }

    #[test]
    fn greedy_order_still_exact() {
        let mut r = rng(9);
        let o = crate::state::tests::random_observable(3, 5, &mut r);
        let psi = StateVector::random(3, &mut r).unwrap();
        let poly = PolynomialSpec::from_roots(vec![c(0.1, 0.0), c(2.0, 0.5), c(-0.7, -1.0)]);
        let opts = EngineOptions { root_order: RootOrder::GreedyGap, ..Default::default() };
        let run = exact_qsp(&psi, &o, &poly, &opts).unwrap();
        let oracle = apply_poly_oracle(&psi, &o, &poly).unwrap();
        assert!(state_distance(&run.final_state, &oracle, false).unwrap() < 1e-9);
        let e0 = C64::new(energy_stats(&psi, &o).unwrap().energy, 0.0);
        let far = poly.roots.iter().copied().max_by(|a, b| (e0 - a).norm().total_cmp(&(e0 - b).norm())).unwrap();
        assert_eq!(run.steps[0].root, far);
    }

    #[test]
    fn csv_export() {
        let (o, _) = z_op();
        let r = exact_qsp(&StateVector::product("+").unwrap(), &o, &PolynomialSpec::from_real_roots(&[0.0]), &EngineOptions::default())
            .unwrap();
        let csv = r.to_csv().unwrap();
        let mut lines = csv.lines();
        assert_eq!(lines.next().unwrap(), "k,re_z,im_z,E,V,s,theta,depth_after,dist_raw,dist_aligned");
        assert!(lines.next().unwrap().starts_with("0,0,0,"));
        let j = serde_json::to_value(&r).unwrap();
        assert_eq!(j["mode"], "exact");
        assert_eq!(j["steps"][0]["root"], serde_json::json!([0.0, 0.0]));
    }

    #[test]
    fn postselection_examples() {
        let (o, h) = z_op();
        let id = PolynomialSpec::from_roots(vec![]);
        assert!((postselect_success_prob(&StateVector::product("+").unwrap(), &o, 1.0, &id).unwrap() - 1.0).abs() < 1e-15);
        let p = PolynomialSpec::from_real_roots(&[1.0]);
        assert_eq!(postselect_success_prob(&StateVector::zero(1).unwrap(), &o, 1.0, &p).unwrap(), 0.0);
        let half = p.clone().with_leading(c(0.5, 0.0));
        assert!((postselect_success_prob(&StateVector::product("+").unwrap(), &o, 1.0, &half).unwrap() - 0.5).abs() < 1e-15);
        assert!((poly_max_on_spectrum(&h, 1.0, &half) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn lcu_telescopes() {
        let mut r = rng(3);
        let o = crate::state::tests::random_observable(2, 3, &mut r);
        let psi = StateVector::random(2, &mut r).unwrap();
        let poly = PolynomialSpec::from_roots(vec![c(0.3, 0.0), c(-0.2, 0.5), c(1.1, 0.0)]);
        let (a, b) = lcu_success(&psi, &o, &poly, o.one_norm()).unwrap();
        assert!((a - b).abs() < 1e-12 * b.max(1e-300));
        assert!(a <= 1.0);
    }
}
