//! Double-bracket quantum signal processing on dense state vectors.
//!
//! A polynomial `p(H) = a_K Π (H − z_k I)` is applied to a state without
//! post-selection by a product of reflections about the current state and
//! double-bracket exponentials `e^{s[Ψ,H]}`, one factor pair per root. The
//! crate provides the exact recursion, its group-commutator compilation with
//! gate counting, the approximation polynomials that feed it, and the
//! measurement estimators needed when energy moments come from samples.
//!
//! ```
//! use dbqsp::prelude::*;
//!
//! let h = Observable::from_strs(1, &[(1.0, "Z")]).unwrap();
//! let op = HermitianOperator::from_observable(&h).unwrap();
//! let plus = StateVector::product("+").unwrap();
//! let poly = PolynomialSpec::from_roots(vec![C64::new(0.0, 0.0)]);
//!
//! let run = exact_qsp(&plus, &op, &poly, &EngineOptions::default()).unwrap();
//! let minus = StateVector::product("-").unwrap();
//! assert!(state_distance(&run.final_state, &minus, false).unwrap() < 1e-12);
//! ```

pub mod engine;
pub mod error;
pub mod harness;
pub mod pauli;
pub mod poly;
pub mod rng;
pub mod sampling;
pub mod state;

pub use error::{Error, Result};

pub mod prelude {
    pub use crate::engine::{
        dbqsp_run, depth_exact, exact_qsp, gc_step, step_params, sufficient_gc_repetitions, EngineOptions, Estimation,
        RunReport, StepRecord,
    };
    pub use crate::error::{Error, Result};
    pub use crate::pauli::{one_norm, pauli_mul, square_expansion, Observable, Pauli, PauliString, Phase};
    pub use crate::poly::{apply_poly_oracle, ChebSeries, PolynomialSpec};
    pub use crate::state::{
        apply_commutator_exp, apply_evolution, apply_reflection, energy_stats, state_distance, EnergyStats,
        HermitianOperator, LinearOp, StateVector, C64,
    };
}
