//! Analytical-framework data: the bias taxonomy, schema pattern kinds,
//! Toulmin assessments and counter-argument kinds.

mod frameworks;
mod select;
mod taxonomy;

pub use frameworks::{
    schema_patterns, CounterArgument, CounterArgumentKind, SchemaPatternKind, SchemaPatternSpec,
    ToulminAssessment, ToulminComponent,
};
pub use select::{heuristic_biases, select_relevant_biases, BiasSelection, DEFAULT_BIAS_K};
pub use taxonomy::{load_taxonomy, BiasCategory, BiasEntry, BiasTaxonomy, KbError, BUILTIN_TAXONOMY};
