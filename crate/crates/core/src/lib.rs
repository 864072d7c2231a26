//! Question-refinement workbench core: LLM gateway, bias knowledge base,
//! NL2SQL sandbox, refinement pipeline, result comparison and evaluation.

pub mod kb;
pub mod llm;
pub mod nl2sql;
pub mod util;
pub mod pipeline;
pub mod compare;
pub mod eval;
