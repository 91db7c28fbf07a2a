//! Sliding-window compressed DMD over a frame stream.
//!
//! Window `k` covers frames `k..=k+T`: its `X'` holds the sketches of frames
//! `k..k+T` and its `Y'` those of `k+1..=k+T`. Frames are sketched once at
//! ingest; the ring only ever holds `T + 1` sketches of length `p`.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::dmd::{self, CompressionOperator, FitFlags, DEFAULT_ZERO_SENTINEL};
use crate::error::{parameter, structural, Result};
use crate::frames::FrameMatrix;

/// Window geometry and rank settings.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct WindowConfig {
    /// Frames per window `T`.
    pub window_len: usize,
    /// Target rank `r`.
    pub rank: usize,
    /// Sketch dimension `p`.
    pub sketch_dim: usize,
    /// Frames between consecutive windows.
    pub stride: usize,
    /// Modulus reported for an exactly-zero eigenvalue.
    pub zero_sentinel: f64,
}

impl Default for WindowConfig {
    fn default() -> Self {
        Self {
            window_len: 80,
            rank: 5,
            sketch_dim: 20,
            stride: 1,
            zero_sentinel: DEFAULT_ZERO_SENTINEL,
        }
    }
}

impl WindowConfig {
    pub fn validate(&self) -> Result<()> {
        if self.window_len < 2 {
            return Err(parameter(format!("window length {} < 2", self.window_len)));
        }
        if self.rank == 0 || self.rank > self.sketch_dim {
            return Err(parameter(format!(
                "rank {} must lie in 1..={}",
                self.rank, self.sketch_dim
            )));
        }
        if self.rank > self.window_len {
            return Err(parameter(format!(
                "rank {} exceeds window length {}",
                self.rank, self.window_len
            )));
        }
        if self.stride == 0 {
            return Err(parameter("stride must be at least 1"));
        }
        if !(self.zero_sentinel > 0.0) {
            return Err(parameter("zero sentinel must be positive"));
        }
        Ok(())
    }

    /// Number of windows produced for a video of `frames` frames.
    pub fn window_count(&self, frames: usize) -> usize {
        if frames <= self.window_len {
            0
        } else {
            (frames - self.window_len).div_ceil(self.stride)
        }
    }
}

/// Circular store of the last `T + 1` compressed frames.
#[derive(Debug, Clone)]
pub struct FrameRing {
    sketch_dim: usize,
    capacity: usize,
    buf: Vec<f64>,
    head: usize,
    count: usize,
    pushed: usize,
}

impl FrameRing {
    pub fn new(sketch_dim: usize, window_len: usize) -> Self {
        let capacity = window_len + 1;
        Self {
            sketch_dim,
            capacity,
            buf: vec![0.0; sketch_dim * capacity],
            head: 0,
            count: 0,
            pushed: 0,
        }
    }

    pub fn for_config(cfg: &WindowConfig) -> Self {
        Self::new(cfg.sketch_dim, cfg.window_len)
    }

    /// Appends an already-compressed frame, evicting the oldest when full.
    pub fn push_compressed(&mut self, sketch: &[f64]) -> Result<()> {
        if sketch.len() != self.sketch_dim {
            return Err(structural(format!(
                "sketch has length {}, ring expects {}",
                sketch.len(),
                self.sketch_dim
            )));
        }
        let p = self.sketch_dim;
        self.buf[self.head * p..(self.head + 1) * p].copy_from_slice(sketch);
        self.head = (self.head + 1) % self.capacity;
        self.count = (self.count + 1).min(self.capacity);
        self.pushed += 1;
        Ok(())
    }

    /// Compresses `frame` with `op` and appends it.
    pub fn push_frame(&mut self, frame: &[f64], op: &CompressionOperator) -> Result<()> {
        if op.sketch_dim() != self.sketch_dim {
            return Err(structural(format!(
                "operator sketches to {}, ring holds {}",
                op.sketch_dim(),
                self.sketch_dim
            )));
        }
        let sketch = op.compress_frame(frame)?;
        self.push_compressed(sketch.as_slice())
    }

    /// Holds `T + 1` frames.
    pub fn is_ready(&self) -> bool {
        self.count == self.capacity
    }

    pub fn len(&self) -> usize {
        self.count
    }

    pub fn is_empty(&self) -> bool {
        self.count == 0
    }

    pub fn frames_pushed(&self) -> usize {
        self.pushed
    }

    /// Index of the window currently held, once ready.
    pub fn window_index(&self) -> Option<usize> {
        self.is_ready().then(|| self.pushed - self.capacity)
    }

    /// Number of `f64` values retained by the ring.
    pub fn retained_values(&self) -> usize {
        self.buf.len()
    }

    /// Chronological copy of the held sketches as a `p x count` matrix.
    pub fn snapshot(&self) -> DMatrix<f64> {
        let p = self.sketch_dim;
        let start = (self.head + self.capacity - self.count) % self.capacity;
        DMatrix::from_fn(p, self.count, |i, j| {
            let slot = (start + j) % self.capacity;
            self.buf[slot * p + i]
        })
    }
}

/// Per-step eigenvalue moduli `|log lambda|` of one window.
#[derive(Debug, Clone, PartialEq)]
pub struct WindowSpectrum {
    pub window_index: usize,
    /// `r` values, in eigenvalue order (descending `|lambda|`, then argument).
    pub moduli: Vec<f64>,
    /// The `r` eigenvalues behind `moduli`, including any unit padding.
    pub eigenvalues: Vec<Complex64>,
    /// Unit eigenvalues added because the window's effective rank was below `r`.
    pub padded: usize,
    pub degenerate: bool,
    pub flags: FitFlags,
}

impl WindowSpectrum {
    /// Eigenvalues that came from the fitted operator (padding excluded).
    pub fn fitted_eigenvalues(&self) -> Vec<Complex64> {
        let mut padding = self.padded;
        let mut out = Vec::with_capacity(self.eigenvalues.len() - padding);
        for &lam in &self.eigenvalues {
            if padding > 0 && lam == Complex64::new(1.0, 0.0) {
                padding -= 1;
            } else {
                out.push(lam);
            }
        }
        out
    }
}

/// Spectrum of one `p x (T + 1)` sketched window.
///
/// Steps are unit-length here: the detector only compares relative changes,
/// so the frame interval cancels. Missing eigenvalues of a rank-deficient
/// window are reported as `lambda = 1`, i.e. no dynamics.
pub fn spectrum_of_window(
    window: &DMatrix<f64>,
    window_index: usize,
    cfg: &WindowConfig,
) -> Result<WindowSpectrum> {
    let t = cfg.window_len;
    if window.ncols() != t + 1 {
        return Err(structural(format!(
            "window holds {} sketches, expected {}",
            window.ncols(),
            t + 1
        )));
    }
    let xp = window.columns(0, t).into_owned();
    let yp = window.columns(1, t).into_owned();
    let fit = dmd::fit_window(&xp, &yp, cfg.rank)?;
    let mut eigenvalues = fit.eigen.values().to_vec();
    let padded = cfg.rank - eigenvalues.len();
    eigenvalues.extend(std::iter::repeat_n(Complex64::new(1.0, 0.0), padded));
    dmd::sort_eigenvalues(&mut eigenvalues);
    let spectrum = dmd::continuous_spectrum(&eigenvalues, 1.0, cfg.zero_sentinel)?;
    Ok(WindowSpectrum {
        window_index,
        moduli: spectrum.moduli().to_vec(),
        eigenvalues,
        padded,
        degenerate: fit.flags.degenerate,
        flags: fit.flags,
    })
}

/// Spectrum of the window currently held by `ring`.
pub fn window_spectrum(ring: &FrameRing, cfg: &WindowConfig) -> Result<WindowSpectrum> {
    let index = ring
        .window_index()
        .ok_or_else(|| parameter(format!("ring holds {} of {} frames", ring.len(), cfg.window_len + 1)))?;
    spectrum_of_window(&ring.snapshot(), index, cfg)
}

/// Batch windowed compressed DMD over a whole video.
///
/// Frames are sketched one column at a time, exactly as the streaming path
/// does, so both produce identical spectra. Windows are processed in parallel.
pub fn spectrum_series(
    frames: &FrameMatrix,
    cfg: &WindowConfig,
    op: &CompressionOperator,
) -> Result<Vec<WindowSpectrum>> {
    cfg.validate()?;
    let count = cfg.window_count(frames.frame_count());
    if count == 0 {
        return Err(parameter(format!(
            "{} frames cannot fill a window of {} + 1",
            frames.frame_count(),
            cfg.window_len
        )));
    }
    if op.sketch_dim() != cfg.sketch_dim {
        return Err(structural(format!(
            "operator sketches to {}, config expects {}",
            op.sketch_dim(),
            cfg.sketch_dim
        )));
    }
    let sketched = op.compress_columns(frames.as_matrix())?;
    crate::parallel::try_map_indices(count, |i| {
        let k = i * cfg.stride;
        let window = sketched.columns(k, cfg.window_len + 1).into_owned();
        spectrum_of_window(&window, k, cfg)
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_cfg() -> WindowConfig {
        WindowConfig {
            window_len: 10,
            rank: 3,
            sketch_dim: 6,
            stride: 1,
            zero_sentinel: DEFAULT_ZERO_SENTINEL,
        }
    }

    fn wavy_video(m: usize, f: usize) -> FrameMatrix {
        let cols: Vec<Vec<f64>> = (0..f)
            .map(|n| {
                (0..m)
                    .map(|i| 0.5 + 0.2 * ((i as f64) * 0.3 + 0.2 * n as f64).sin() + 0.01 * ((i * n) % 5) as f64)
                    .collect()
            })
            .collect();
        FrameMatrix::from_columns(&cols).unwrap()
    }

    #[test]
    fn config_validation() {
        assert!(WindowConfig::default().validate().is_ok());
        let bad = [
            WindowConfig { window_len: 1, ..small_cfg() },
            WindowConfig { rank: 0, ..small_cfg() },
            WindowConfig { rank: 7, ..small_cfg() },
            WindowConfig { stride: 0, ..small_cfg() },
        ];
        for cfg in bad {
            assert!(cfg.validate().is_err(), "{cfg:?}");
        }
    }

    #[test]
    fn ring_readiness() {
        let cfg = small_cfg();
        let mut ring = FrameRing::for_config(&cfg);
        for _ in 0..cfg.window_len {
            ring.push_compressed(&[0.0; 6]).unwrap();
        }
        assert!(!ring.is_ready());
        ring.push_compressed(&[0.0; 6]).unwrap();
        assert!(ring.is_ready());
        assert_eq!(ring.window_index(), Some(0));
        assert!(ring.push_compressed(&[0.0; 5]).is_err());
    }

    #[test]
    fn ring_eviction_matches_batch_columns() {
        let cfg = small_cfg();
        let video = wavy_video(30, 25);
        let op = CompressionOperator::generate(6, 30, 1).unwrap();
        let batch = op.compress_columns(video.as_matrix()).unwrap();
        let mut ring = FrameRing::for_config(&cfg);
        for n in 0..video.frame_count() {
            ring.push_frame(video.frame(n), &op).unwrap();
            if let Some(k) = ring.window_index() {
                assert_eq!(ring.snapshot(), batch.columns(k, cfg.window_len + 1).into_owned());
            }
        }
        assert_eq!(ring.retained_values(), 6 * 11);
    }

    #[test]
    fn static_window_has_zero_moduli() {
        let cfg = small_cfg();
        let frame: Vec<f64> = (0..30).map(|i| 0.1 + 0.02 * i as f64).collect();
        let video = FrameMatrix::from_columns(&vec![frame; 11]).unwrap();
        let op = CompressionOperator::generate(6, 30, 4).unwrap();
        let specs = spectrum_series(&video, &cfg, &op).unwrap();
        assert_eq!(specs.len(), 1);
        assert!(specs[0].moduli.iter().all(|&m| m <= 1e-8), "{:?}", specs[0].moduli);
        assert_eq!(specs[0].padded, 2);
    }

    #[test]
    fn zero_window_is_degenerate_and_static() {
        let cfg = small_cfg();
        let video = FrameMatrix::from_columns(&vec![vec![0.0; 30]; 11]).unwrap();
        let op = CompressionOperator::generate(6, 30, 4).unwrap();
        let specs = spectrum_series(&video, &cfg, &op).unwrap();
        assert!(specs[0].degenerate);
        assert!(specs[0].moduli.iter().all(|&m| m == 0.0));
    }

    #[test]
    fn window_counts() {
        let cfg = small_cfg();
        assert_eq!(cfg.window_count(11), 1);
        assert_eq!(cfg.window_count(10), 0);
        let defaults = WindowConfig::default();
        assert_eq!(defaults.window_count(810), 730);
        let strided = WindowConfig { stride: 2, ..defaults };
        assert_eq!(strided.window_count(810), 365);
        assert_eq!(strided.window_count(811), 366);
        let video = wavy_video(30, 10);
        let op = CompressionOperator::generate(6, 30, 4).unwrap();
        assert!(matches!(
            spectrum_series(&video, &cfg, &op),
            Err(crate::error::DmdError::Parameter(_))
        ));
    }

    #[test]
    fn stream_equals_batch() {
        let cfg = small_cfg();
        let video = wavy_video(40, 30);
        let op = CompressionOperator::generate(6, 40, 2).unwrap();
        let batch = spectrum_series(&video, &cfg, &op).unwrap();
        let mut ring = FrameRing::for_config(&cfg);
        let mut streamed = Vec::new();
        for n in 0..video.frame_count() {
            ring.push_frame(video.frame(n), &op).unwrap();
            if ring.is_ready() {
                streamed.push(window_spectrum(&ring, &cfg).unwrap());
            }
        }
        assert_eq!(batch, streamed);
    }
}
