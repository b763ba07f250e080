//! Data pipeline and reference kernels for graph-based single-step
//! retrosynthesis: molecular graphs with SMILES I/O, product-reactant node
//! alignment, an auto-regressive graph-token grammar, time-varying graph
//! features, grammar-constrained beam decoding, and reaction-set evaluation.

pub mod align;
pub mod beam;
pub mod dataset;
pub mod element;
pub mod gentoken;
pub mod molgraph;
pub mod stepfeat;
pub mod testgen;

pub use element::Element;
