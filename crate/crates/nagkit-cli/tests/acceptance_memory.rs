//! Acceptance criterion 7: the reduced variant's measured peak memory.
//! Isolated in its own test binary so the tracking allocator sees only
//! this measurement.

use std::time::Instant;

use nagkit_attn::alloc_track::TrackingAllocator;
use nagkit_attn::memory_report;

#[global_allocator]
static ALLOC: TrackingAllocator = TrackingAllocator;

#[test]
fn criterion_07_memory_claim() {
    let started = Instant::now();
    let report = memory_report(256, 32, 4);
    let analytic = report.analytic_ratio();
    assert_eq!(analytic, 8.0);
    let measured = report
        .measured_ratio()
        .expect("tracking allocator installed");
    assert!(
        measured >= 0.8 * analytic && measured <= 1.25 * analytic,
        "measured additive/reduced ratio {measured:.3} outside [{}, {}]",
        0.8 * analytic,
        1.25 * analytic
    );
    let elapsed = started.elapsed().as_secs_f64();
    println!(
        "[acceptance] criterion 07 (memory claim): PASS — measured ratio {measured:.3} within [0.8, 1.25] x {analytic} ({elapsed:.2}s, budget 30s)"
    );
    assert!(elapsed < 30.0);
}
