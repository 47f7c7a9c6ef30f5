//! Heap accounting for peak-memory measurements.
//!
//! Install [`CountingAllocator`] as the global allocator in a binary, then
//! wrap the work in [`measure`]. Counters are per thread, so concurrent
//! measurements do not disturb each other; allocations made on other threads
//! (for example rayon workers) are not attributed to the caller.

use std::alloc::{GlobalAlloc, Layout, System};
use std::cell::Cell;
use std::sync::atomic::{AtomicBool, Ordering};

pub struct CountingAllocator;

static ACTIVE: AtomicBool = AtomicBool::new(false);

thread_local! {
    static CURRENT: Cell<isize> = const { Cell::new(0) };
    static PEAK: Cell<isize> = const { Cell::new(0) };
}

fn record(delta: isize) {
    let _ = CURRENT.try_with(|c| {
        let now = c.get() + delta;
        c.set(now);
        let _ = PEAK.try_with(|p| {
            if now > p.get() {
                p.set(now);
            }
        });
    });
}

unsafe impl GlobalAlloc for CountingAllocator {
    unsafe fn alloc(&self, layout: Layout) -> *mut u8 {
        ACTIVE.store(true, Ordering::Relaxed);
        let ptr = unsafe { System.alloc(layout) };
        if !ptr.is_null() {
            record(layout.size() as isize);
        }
        ptr
    }

    unsafe fn alloc_zeroed(&self, layout: Layout) -> *mut u8 {
        let ptr = unsafe { System.alloc_zeroed(layout) };
        if !ptr.is_null() {
            record(layout.size() as isize);
        }
        ptr
    }

    unsafe fn dealloc(&self, ptr: *mut u8, layout: Layout) {
        unsafe { System.dealloc(ptr, layout) };
        record(-(layout.size() as isize));
    }

    unsafe fn realloc(&self, ptr: *mut u8, layout: Layout, new_size: usize) -> *mut u8 {
        let out = unsafe { System.realloc(ptr, layout, new_size) };
        if !out.is_null() {
            record(new_size as isize - layout.size() as isize);
        }
        out
    }
}

/// True once the counting allocator has served an allocation in this process.
pub fn is_active() -> bool {
    ACTIVE.load(Ordering::Relaxed)
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct MemoryUsage {
    /// Highest live heap above the starting level while `f` ran.
    pub peak_bytes: usize,
    /// Live heap above the starting level when `f` returned, including its result.
    pub retained_bytes: usize,
}

/// Runs `f` and reports heap usage on the calling thread relative to the
/// level at entry. Reports zeros when the counting allocator is not installed.
pub fn measure<R>(f: impl FnOnce() -> R) -> (R, MemoryUsage) {
    let base = CURRENT.with(Cell::get);
    let outer_peak = PEAK.with(Cell::get);
    PEAK.with(|p| p.set(base));
    let out = f();
    let peak = PEAK.with(Cell::get);
    let now = CURRENT.with(Cell::get);
    PEAK.with(|p| p.set(outer_peak.max(peak)));
    let usage = if is_active() {
        MemoryUsage {
            peak_bytes: (peak - base).max(0) as usize,
            retained_bytes: (now - base).max(0) as usize,
        }
    } else {
        MemoryUsage::default()
    };
    (out, usage)
}
