//! The streaming detector's footprint must not grow with the stream, and a
//! window update must not allocate in proportion to the frame size.

use std::alloc::{GlobalAlloc, Layout, System};
use std::sync::atomic::{AtomicUsize, Ordering};

use dmdwatch::detection::DetectorConfig;
use dmdwatch::dmd::CompressionOperator;
use dmdwatch::pipeline::StreamingDetector;
use dmdwatch::window::WindowConfig;

struct Counting;

static LIVE: AtomicUsize = AtomicUsize::new(0);
static PEAK: AtomicUsize = AtomicUsize::new(0);

unsafe impl GlobalAlloc for Counting {
    unsafe fn alloc(&self, layout: Layout) -> *mut u8 {
        let p = unsafe { System.alloc(layout) };
        if !p.is_null() {
            let now = LIVE.fetch_add(layout.size(), Ordering::SeqCst) + layout.size();
            PEAK.fetch_max(now, Ordering::SeqCst);
        }
        p
    }

    unsafe fn dealloc(&self, ptr: *mut u8, layout: Layout) {
        unsafe { System.dealloc(ptr, layout) };
        LIVE.fetch_sub(layout.size(), Ordering::SeqCst);
    }
}

#[global_allocator]
static GLOBAL: Counting = Counting;

const T: usize = 40;
const P: usize = 12;
const R: usize = 4;

fn frame(m: usize, n: usize) -> Vec<f64> {
    (0..m)
        .map(|i| 0.4 + 0.2 * ((i as f64) * 0.01 + 0.3 * n as f64).sin() + 0.05 * ((i * 7 + n) % 11) as f64)
        .collect()
}

/// Returns (live bytes after `first` frames, after all frames, largest
/// per-step peak above the live baseline).
fn profile(m: usize, first: usize, total: usize) -> (usize, usize, usize) {
    let window = WindowConfig {
        window_len: T,
        rank: R,
        sketch_dim: P,
        ..WindowConfig::default()
    };
    let det = DetectorConfig::new(0.5, T).unwrap();
    let op = CompressionOperator::generate(P, m, 3).unwrap();
    let frames: Vec<Vec<f64>> = (0..total).map(|n| frame(m, n)).collect();
    let mut s = StreamingDetector::new(window, det, op, 30.0).unwrap();
    let mut after_first = 0;
    let mut step_peak = 0;
    for (n, f) in frames.iter().enumerate() {
        let base = LIVE.load(Ordering::SeqCst);
        PEAK.store(base, Ordering::SeqCst);
        let out = s.push_frame(f).unwrap();
        drop(out);
        if n > T {
            step_peak = step_peak.max(PEAK.load(Ordering::SeqCst) - base);
        }
        if n + 1 == first {
            after_first = LIVE.load(Ordering::SeqCst);
        }
    }
    (after_first, LIVE.load(Ordering::SeqCst), step_peak)
}

#[test]
fn footprint_is_bounded() {
    // one test owns the counters, so the phases run in sequence
    let (early, late, peak_small) = profile(2_000, 200, 1_200);
    assert_eq!(early, late, "retained memory grew from {early} to {late} bytes");

    let (_, _, peak_large) = profile(60_000, 60, 120);
    // a window update works on p x (T + 1) sketches; allow generous slack for
    // SVD and eigen workspaces, but nothing of frame size (60k pixels = 480 kB)
    let bound = 16 * 8 * P * (T + 1);
    assert!(peak_small <= bound, "step peak {peak_small} B exceeds {bound} B");
    assert!(peak_large <= bound, "step peak {peak_large} B exceeds {bound} B at 60k pixels");
}
