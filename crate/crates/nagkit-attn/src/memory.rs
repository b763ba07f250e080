//! Analytic and measured peak auxiliary memory per attention variant.
//!
//! The analytic dominant terms, in elements: plain masked attention holds
//! the n x n attention matrix; the additive variant materializes the
//! n x n x d_h feature tensor; the reduced variant only its n x n x d_h2
//! counterpart. The measured side runs each variant on synthetic inputs
//! with its feature tensor built inside the measured region, and reports
//! the live-byte high-water mark from the tracking allocator.

use std::time::Instant;

use ndarray::{Array, Array2, Array3};
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use crate::alloc_track;
use crate::kernels::{attn_additive_pe, attn_masked, attn_reduced, causal_mask};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VariantMemory {
    pub variant: &'static str,
    pub analytic_elems: u64,
    pub analytic_bytes: u64,
    /// None when the tracking allocator is not installed in this process.
    pub measured_bytes: Option<u64>,
    pub wall_ms: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MemoryReport {
    pub n: usize,
    pub d_h: usize,
    pub d_h2: usize,
    pub masked: VariantMemory,
    pub additive: VariantMemory,
    pub reduced: VariantMemory,
}

impl MemoryReport {
    pub fn variants(&self) -> [&VariantMemory; 3] {
        [&self.masked, &self.additive, &self.reduced]
    }

    /// Measured additive/reduced peak ratio, when both are available.
    pub fn measured_ratio(&self) -> Option<f64> {
        match (self.additive.measured_bytes, self.reduced.measured_bytes) {
            (Some(a), Some(r)) if r > 0 => Some(a as f64 / r as f64),
            _ => None,
        }
    }

    /// Analytic additive/reduced ratio: d_h / d_h2.
    pub fn analytic_ratio(&self) -> f64 {
        self.d_h as f64 / self.d_h2 as f64
    }
}

fn measure<T>(f: impl FnOnce() -> T) -> (Option<u64>, f64) {
    let start = Instant::now();
    let (_, peak) = alloc_track::measure_peak(f);
    let wall_ms = start.elapsed().as_secs_f64() * 1e3;
    let measured = (alloc_track::is_installed() && peak > 0).then_some(peak);
    (measured, wall_ms)
}

/// Build the report at the given sizes. Inputs are seeded uniform values;
/// Q, K, V, U, and the mask live outside the measured region, while each
/// variant's time-varying feature tensor is materialized inside it.
pub fn memory_report(n: usize, d_h: usize, d_h2: usize) -> MemoryReport {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let q: Array2<f64> = Array::from_shape_fn((n, d_h), |_| rng.gen_range(-1.0..1.0));
    let k: Array2<f64> = Array::from_shape_fn((n, d_h), |_| rng.gen_range(-1.0..1.0));
    let v: Array2<f64> = Array::from_shape_fn((n, d_h), |_| rng.gen_range(-1.0..1.0));
    let u: Array2<f64> = Array::from_shape_fn((d_h, d_h2), |_| rng.gen_range(-1.0..1.0));
    let mask = causal_mask(n);

    let (masked_measured, masked_ms) = measure(|| attn_masked(&q, &k, &v, &mask).unwrap());

    let (additive_measured, additive_ms) = measure(|| {
        let d: Array3<f64> =
            Array::from_shape_fn((n, n, d_h), |(i, j, t)| bias_value(i, j, t));
        attn_additive_pe(&q, &k, &v, &d, &mask).unwrap()
    });

    let (reduced_measured, reduced_ms) = measure(|| {
        let d2: Array3<f64> =
            Array::from_shape_fn((n, n, d_h2), |(i, j, t)| bias_value(i, j, t));
        attn_reduced(&q, &k, &v, &u, &d2, &mask).unwrap()
    });

    let elems = |per: u64| per * 8;
    MemoryReport {
        n,
        d_h,
        d_h2,
        masked: VariantMemory {
            variant: "masked",
            analytic_elems: (n * n) as u64,
            analytic_bytes: elems((n * n) as u64),
            measured_bytes: masked_measured,
            wall_ms: masked_ms,
        },
        additive: VariantMemory {
            variant: "additive",
            analytic_elems: (n * n * d_h) as u64,
            analytic_bytes: elems((n * n * d_h) as u64),
            measured_bytes: additive_measured,
            wall_ms: additive_ms,
        },
        reduced: VariantMemory {
            variant: "reduced",
            analytic_elems: (n * n * d_h2) as u64,
            analytic_bytes: elems((n * n * d_h2) as u64),
            measured_bytes: reduced_measured,
            wall_ms: reduced_ms,
        },
    }
}

/// Cheap deterministic fill for synthetic feature tensors.
fn bias_value(i: usize, j: usize, t: usize) -> f64 {
    let x = (i * 31 + j * 7 + t * 3) % 17;
    (x as f64 - 8.0) / 16.0
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn analytic_ratio_is_head_dim_ratio() {
        let report = memory_report(16, 32, 4);
        assert_eq!(report.analytic_ratio(), 8.0);
        assert_eq!(report.additive.analytic_bytes, 16 * 16 * 32 * 8);
        assert_eq!(report.reduced.analytic_bytes, 16 * 16 * 4 * 8);
        assert_eq!(report.masked.analytic_elems, 256);
    }

    #[test]
    fn variants_report_wall_time() {
        let report = memory_report(8, 8, 2);
        for v in report.variants() {
            assert!(v.wall_ms >= 0.0);
        }
    }
}
