//! States, Kraus families, isometries and the equivalence check.

mod operation;
mod state;

pub use operation::{
    apply_effect, clamp_probability, embed_outcome, isometry_to_kraus, kraus_to_isometry, outcome_distribution,
    outcome_probability, phase_equivalence, phase_equivalent, unitary_as_operation, IsometryMatrix, KrausFamily,
    OutcomeSet, PhaseVerdict, QuantumOperation, DEFAULT_PROB_FLOOR, UNITARY_OUTCOME,
};
pub(crate) use operation::{effect_unchecked, raw_probability};
pub use state::{make_density, mix, partial_trace, pure_state, DensityOperator};
