//! Rewriting, state-space exploration and LTL checking for ZX/ZH diagrams.

pub mod canon;
pub mod circuits;
pub mod cli;
pub mod diagram;
pub mod explore;
pub mod graphlike;
pub mod ltl;
pub mod matcher;
pub mod phase;
pub mod rule;
pub mod tensor;

pub use canon::{canonical_key, canonicalize, iso_oracle, CanonicalKey};
pub use diagram::{make_diagram, Diagram, DiagramError, DiagramFile, Node, NodeId, NodeKind};
pub use phase::{Color, PhaseDeg};
pub use tensor::{equal_up_to_scalar, tensor, ComplexMatrix, TensorError};
pub use circuits::{from_gates, ghz, kn_hadamard, pauli_pushing, qft2, teleportation, CircuitError, Gate, GateList};
pub use explore::{explore, ExploreError, Identity, Limits, State, StateSpace};
pub use matcher::{apply, find_matches, Match, MatchError};
pub use rule::{builtin_rule, parse_rule, HVariant, Rule, RuleError, RuleSet};
pub use ltl::{check, parse_formula, reachable, Formula, LtlError, Prop, Verdict};
