//! Byte-exact allocation accounting. Install [`TrackingAllocator`] as the
//! global allocator in a binary that wants measured peaks:
//!
//! ```ignore
//! #[global_allocator]
//! static ALLOC: nagkit_attn::alloc_track::TrackingAllocator = TrackingAllocator;
//! ```
//!
//! Counters are process-global; measure on a quiet thread.

use std::alloc::{GlobalAlloc, Layout, System};
use std::sync::atomic::{AtomicBool, AtomicU64, Ordering};

static CURRENT: AtomicU64 = AtomicU64::new(0);
static PEAK: AtomicU64 = AtomicU64::new(0);
static INSTALLED: AtomicBool = AtomicBool::new(false);

/// Wraps the system allocator, tracking live bytes and their high-water
/// mark (requested sizes, not allocator overhead).
pub struct TrackingAllocator;

impl TrackingAllocator {
    fn on_alloc(size: usize) {
        INSTALLED.store(true, Ordering::Relaxed);
        let live = CURRENT.fetch_add(size as u64, Ordering::Relaxed) + size as u64;
        PEAK.fetch_max(live, Ordering::Relaxed);
    }

    fn on_dealloc(size: usize) {
        CURRENT.fetch_sub(size as u64, Ordering::Relaxed);
    }
}

unsafe impl GlobalAlloc for TrackingAllocator {
    unsafe fn alloc(&self, layout: Layout) -> *mut u8 {
        let ptr = System.alloc(layout);
        if !ptr.is_null() {
            Self::on_alloc(layout.size());
        }
        ptr
    }

    unsafe fn dealloc(&self, ptr: *mut u8, layout: Layout) {
        System.dealloc(ptr, layout);
        Self::on_dealloc(layout.size());
    }

    unsafe fn alloc_zeroed(&self, layout: Layout) -> *mut u8 {
        let ptr = System.alloc_zeroed(layout);
        if !ptr.is_null() {
            Self::on_alloc(layout.size());
        }
        ptr
    }

    unsafe fn realloc(&self, ptr: *mut u8, layout: Layout, new_size: usize) -> *mut u8 {
        let new_ptr = System.realloc(ptr, layout, new_size);
        if !new_ptr.is_null() {
            Self::on_dealloc(layout.size());
            Self::on_alloc(new_size);
        }
        new_ptr
    }
}

/// Whether the tracking allocator has seen any traffic (i.e. is installed
/// as the global allocator of this process).
pub fn is_installed() -> bool {
    INSTALLED.load(Ordering::Relaxed)
}

pub fn current_bytes() -> u64 {
    CURRENT.load(Ordering::Relaxed)
}

/// Run `f` and return its result plus the peak growth of live bytes above
/// the level at entry.
pub fn measure_peak<T>(f: impl FnOnce() -> T) -> (T, u64) {
    let baseline = CURRENT.load(Ordering::Relaxed);
    PEAK.store(baseline, Ordering::Relaxed);
    let out = f();
    let peak = PEAK.load(Ordering::Relaxed);
    (out, peak.saturating_sub(baseline))
}
