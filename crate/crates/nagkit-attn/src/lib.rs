//! Reference decoder attention kernels: the plain causal variant, the
//! additive time-varying-feature variant, and the reduced-dimension
//! variant, with analytic gradients, a finite-difference harness, and
//! peak-memory accounting.

pub mod alloc_track;
pub mod fdcheck;
pub mod grad;
pub mod kernels;
pub mod memory;

pub use fdcheck::{fd_check, FdReport};
pub use grad::{attn_reduced_grad, ReducedGrads, ReducedInputs};
pub use kernels::{
    additive_logits, attn_additive_pe, attn_masked, attn_reduced, causal_mask, reduced_logits,
    AttnError, MASK_NEG,
};
pub use memory::{memory_report, MemoryReport, VariantMemory};
