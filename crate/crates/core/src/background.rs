//! Background/foreground separation from a window's DMD expansion.
//!
//! Modes whose per-step frequency `|log lambda|` is at most `epsilon` form the
//! low-rank background; the remainder is foreground. Separation runs on demand
//! for a chosen window (typically one where the detector fired).

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::dmd::{self, CompressionOperator, ContinuousSpectrum, ModeSet};
use crate::error::{parameter, structural, Result};
use crate::frames::FrameMatrix;
use crate::window::WindowConfig;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SeparationConfig {
    /// Background cutoff on `|omega| h`, i.e. radians (or nepers) per frame.
    pub epsilon: f64,
    /// Width of the Gaussian window blend, in frames.
    pub sigma: f64,
    /// Report `L = |L~|` instead of `L = R + |L~|`.
    pub use_empirical_l: bool,
}

impl SeparationConfig {
    pub const DEFAULT_EPSILON: f64 = 1e-2;

    /// Defaults for a window of `window_len` frames (`sigma = T / 4`).
    pub fn for_window(window_len: usize) -> Self {
        Self {
            epsilon: Self::DEFAULT_EPSILON,
            sigma: window_len as f64 / 4.0,
            use_empirical_l: true,
        }
    }

    pub fn canonical(mut self) -> Self {
        self.use_empirical_l = false;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon > 0.0) {
            return Err(parameter("epsilon must be positive"));
        }
        if !(self.sigma > 0.0) {
            return Err(parameter("sigma must be positive"));
        }
        Ok(())
    }
}

/// Indices of background (`|omega| h <= epsilon`) and foreground modes.
pub fn split_spectrum(spectrum: &ContinuousSpectrum, epsilon: f64) -> (Vec<usize>, Vec<usize>) {
    let (bg, fg): (Vec<usize>, Vec<usize>) =
        (0..spectrum.len()).partition(|&i| spectrum.moduli()[i] * spectrum.timestep() <= epsilon);
    if bg.is_empty() {
        log::warn!("no mode below epsilon = {epsilon}; background is empty");
    }
    (bg, fg)
}

/// `L~(t) = sum_{k in bg} c_k psi_k exp(omega_k t)`.
pub fn reconstruct_background(
    modes: &ModeSet,
    spectrum: &ContinuousSpectrum,
    background: &[usize],
    t: f64,
) -> DVector<Complex64> {
    if background.is_empty() {
        log::warn!("empty background index set; returning a zero frame");
    }
    modes.expansion(spectrum, t, Some(background))
}

/// One frame split into background `L`, foreground `S` and residual `R`.
#[derive(Debug, Clone, PartialEq)]
pub struct SeparatedFrame {
    pub background: Vec<f64>,
    pub foreground: Vec<f64>,
    /// Negative part of `X_n - |L~|`.
    pub residual: Vec<f64>,
}

/// `S~ = x - |L~|`, `R = min(S~, 0)`, `S = S~ - R`, and `L = R + |L~|`
/// (or `|L~|` in empirical mode).
pub fn separate_frame(
    frame: &[f64],
    low_rank: &DVector<Complex64>,
    cfg: &SeparationConfig,
) -> Result<SeparatedFrame> {
    if frame.len() != low_rank.len() {
        return Err(structural(format!(
            "frame has {} pixels, background has {}",
            frame.len(),
            low_rank.len()
        )));
    }
    let m = frame.len();
    let mut background = Vec::with_capacity(m);
    let mut foreground = Vec::with_capacity(m);
    let mut residual = Vec::with_capacity(m);
    for (&x, l) in frame.iter().zip(low_rank.iter()) {
        let mag = l.norm();
        let sparse = x - mag;
        let r = sparse.min(0.0);
        residual.push(r);
        foreground.push(sparse - r);
        background.push(if cfg.use_empirical_l { mag } else { r + mag });
    }
    Ok(SeparatedFrame {
        background,
        foreground,
        residual,
    })
}

/// Normalized Gaussian weights `exp(-(t - eta_k)^2 / sigma^2)`.
///
/// When every weight underflows the nearest window gets weight 1 and the
/// second value is `true`.
pub fn blend_weights(midpoints: &[f64], sigma: f64, t: f64) -> (Vec<f64>, bool) {
    let raw: Vec<f64> = midpoints
        .iter()
        .map(|&eta| (-(t - eta).powi(2) / (sigma * sigma)).exp())
        .collect();
    let total: f64 = raw.iter().sum();
    if total > 0.0 && total.is_finite() {
        (raw.into_iter().map(|w| w / total).collect(), false)
    } else {
        let nearest = midpoints
            .iter()
            .enumerate()
            .min_by(|a, b| (t - a.1).abs().total_cmp(&(t - b.1).abs()))
            .map(|(i, _)| i)
            .unwrap_or(0);
        let mut w = vec![0.0; midpoints.len()];
        if !w.is_empty() {
            w[nearest] = 1.0;
        }
        (w, true)
    }
}

/// Gaussian-weighted blend of per-window reconstructions.
///
/// `reconstructions[k]` is `M x times.len()`, window `k` evaluated on the
/// common time grid; `midpoints[k]` is its centre on the same axis. Windows
/// are summed in index order.
pub fn blend_windows(
    reconstructions: &[DMatrix<f64>],
    midpoints: &[f64],
    times: &[f64],
    sigma: f64,
) -> Result<DMatrix<f64>> {
    let first = reconstructions
        .first()
        .ok_or_else(|| parameter("blend needs at least one window"))?;
    if !(sigma > 0.0) {
        return Err(parameter("sigma must be positive"));
    }
    if midpoints.len() != reconstructions.len() {
        return Err(structural("one midpoint per window required"));
    }
    let shape = (first.nrows(), times.len());
    if let Some(bad) = reconstructions.iter().position(|r| r.shape() != shape) {
        return Err(structural(format!(
            "window {bad} reconstruction is {:?}, expected {shape:?}",
            reconstructions[bad].shape()
        )));
    }
    let columns = crate::parallel::map_indices(times.len(), |j| {
        let (weights, fallback) = blend_weights(midpoints, sigma, times[j]);
        if fallback {
            log::warn!("all blend weights vanished at t = {}; using nearest window", times[j]);
        }
        let mut col = DVector::zeros(shape.0);
        for (rec, w) in reconstructions.iter().zip(weights) {
            if w != 0.0 {
                col.axpy(w, &rec.column(j), 1.0);
            }
        }
        col
    });
    Ok(DMatrix::from_columns(&columns))
}

/// Separation of every snapshot in one window.
#[derive(Debug, Clone)]
pub struct WindowSeparation {
    pub window_index: usize,
    pub spectrum: ContinuousSpectrum,
    pub modes: ModeSet,
    pub background_modes: Vec<usize>,
    pub foreground_modes: Vec<usize>,
    /// `T + 1` frames, `k..=k+T`.
    pub frames: Vec<SeparatedFrame>,
}

/// Fits window `k` of `frames`, recovers full modes from the uncompressed
/// shifted data and separates each of its `T + 1` snapshots.
pub fn separate_window(
    frames: &FrameMatrix,
    window_index: usize,
    window_cfg: &WindowConfig,
    op: &CompressionOperator,
    timestep: f64,
    cfg: &SeparationConfig,
) -> Result<WindowSeparation> {
    window_cfg.validate()?;
    cfg.validate()?;
    let t = window_cfg.window_len;
    if window_index + t >= frames.frame_count() {
        return Err(parameter(format!(
            "window {window_index} needs frames up to {} but the video has {}",
            window_index + t,
            frames.frame_count()
        )));
    }
    let (spectrum, modes) = fit_window_modes(frames, window_index, window_cfg, op, timestep)?;
    let (background_modes, foreground_modes) = split_spectrum(&spectrum, cfg.epsilon);
    let separated = (0..=t)
        .map(|n| {
            let low_rank = reconstruct_background(&modes, &spectrum, &background_modes, n as f64 * timestep);
            separate_frame(frames.frame(window_index + n), &low_rank, cfg)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(WindowSeparation {
        window_index,
        spectrum,
        modes,
        background_modes,
        foreground_modes,
        frames: separated,
    })
}

fn fit_window_modes(
    frames: &FrameMatrix,
    window_index: usize,
    window_cfg: &WindowConfig,
    op: &CompressionOperator,
    timestep: f64,
) -> Result<(ContinuousSpectrum, ModeSet)> {
    let t = window_cfg.window_len;
    let x = frames.columns(window_index, t);
    let y = frames.columns(window_index + 1, t);
    let xp = op.compress_columns(&x)?;
    let yp = op.compress_columns(&y)?;
    let fit = dmd::fit_window(&xp, &yp, window_cfg.rank)?;
    let modes = dmd::recover_modes(&y, &fit.svd, &fit.eigen, frames.frame(window_index))?;
    let spectrum = dmd::continuous_spectrum(fit.eigen.values(), timestep, window_cfg.zero_sentinel)?;
    Ok((spectrum, modes))
}

/// Which modes of each window expansion to keep when reconstructing a video.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModeSelection {
    All,
    Background,
    Foreground,
}

/// Full-video reconstruction: every `stride`-th window's expansion evaluated
/// on all frame times, blended with Gaussians centred on window midpoints.
pub fn reconstruct_video(
    frames: &FrameMatrix,
    window_cfg: &WindowConfig,
    op: &CompressionOperator,
    timestep: f64,
    cfg: &SeparationConfig,
    selection: ModeSelection,
) -> Result<DMatrix<f64>> {
    window_cfg.validate()?;
    cfg.validate()?;
    let count = window_cfg.window_count(frames.frame_count());
    if count == 0 {
        return Err(parameter("video too short for a single window"));
    }
    let n_frames = frames.frame_count();
    let t = window_cfg.window_len;
    let starts: Vec<usize> = (0..count).map(|i| i * window_cfg.stride).collect();
    let recs = crate::parallel::map_slice(&starts, |&k| -> Result<DMatrix<f64>> {
        let (spectrum, modes) = fit_window_modes(frames, k, window_cfg, op, timestep)?;
        let (bg, fg) = split_spectrum(&spectrum, cfg.epsilon);
        let subset: Option<&[usize]> = match selection {
            ModeSelection::All => None,
            ModeSelection::Background => Some(&bg),
            ModeSelection::Foreground => Some(&fg),
        };
        let cols: Vec<DVector<f64>> = (0..n_frames)
            .map(|n| {
                let rel = (n as f64 - k as f64) * timestep;
                modes.expansion(&spectrum, rel, subset).map(|z| z.re)
            })
            .collect();
        Ok(DMatrix::from_columns(&cols))
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    // midpoints and times in frame units so sigma is in frames
    let midpoints: Vec<f64> = starts.iter().map(|&k| k as f64 + t as f64 / 2.0).collect();
    let times: Vec<f64> = (0..n_frames).map(|n| n as f64).collect();
    blend_windows(&recs, &midpoints, &times, cfg.sigma)
}
