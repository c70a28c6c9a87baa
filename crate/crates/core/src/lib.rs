//! Weighted multiple context-free grammars over complete commutative strong
//! bimonoids, congruence multiple Dyck languages, and the weighted
//! Chomsky-Schützenberger decomposition `⟦G⟧ = h(R ∩ mD)`.
//!
//! Every construction is checkable at desk scale: unbounded sums and
//! languages are only ever materialized through explicit enumeration bounds.

pub mod algebra;
pub mod automata;
pub mod dyck;
pub mod exec;
pub mod generator;
pub mod grammar;
pub mod homomorphism;
pub mod transform;
pub mod verify;

pub use algebra::{AlgebraError, Bimonoid, Value, Weight};
pub use grammar::{parse_grammar, word, Derivation, GrammarError, WeightedMcfg, Word};
