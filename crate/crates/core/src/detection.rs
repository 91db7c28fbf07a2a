//! Motion events from relative changes in the mean spectral modulus.

use serde::{Deserialize, Serialize};

use crate::error::{parameter, structural, Result};
use crate::window::WindowSpectrum;

/// Means at or below this are treated as zero.
pub const MEAN_FLOOR: f64 = 1e-12;

/// Threshold and consecutive-activation suppression settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DetectorConfig {
    /// Relative-change threshold. `f64::INFINITY` disables detection.
    pub threshold: f64,
    /// Windows after an activation during which new events are withheld.
    pub cooldown: usize,
    pub suppression: bool,
    /// `T`, used to derive the entry-frame hypothesis of an event.
    pub window_len: usize,
}

impl DetectorConfig {
    pub const DEFAULT_COOLDOWN: usize = 15;

    pub fn new(threshold: f64, window_len: usize) -> Result<Self> {
        let cfg = Self {
            threshold,
            cooldown: Self::DEFAULT_COOLDOWN,
            suppression: true,
            window_len,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn with_cooldown(mut self, cooldown: usize) -> Self {
        self.cooldown = cooldown;
        self
    }

    pub fn with_suppression(mut self, on: bool) -> Self {
        self.suppression = on;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.threshold > 0.0) {
            return Err(parameter(format!("threshold must be positive, got {}", self.threshold)));
        }
        Ok(())
    }
}

/// Relative change `|a_{k+1} - a_k| / a_k` with the zero-denominator cases
/// made explicit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RelativeChange {
    Value(f64),
    /// Previous mean was zero and the next is not: motion starting in a
    /// static scene. Exceeds every finite threshold.
    Onset,
    /// Both means are zero: the scene stays static.
    Static,
}

impl RelativeChange {
    pub fn exceeds(&self, threshold: f64) -> bool {
        match *self {
            RelativeChange::Value(v) => v >= threshold,
            RelativeChange::Onset => threshold.is_finite(),
            RelativeChange::Static => false,
        }
    }

    /// Scalar form: `Onset` maps to `+inf`, `Static` to `0`.
    pub fn as_f64(&self) -> f64 {
        match *self {
            RelativeChange::Value(v) => v,
            RelativeChange::Onset => f64::INFINITY,
            RelativeChange::Static => 0.0,
        }
    }
}

/// `a_k = (1/r) sum_i |omega_i|`.
pub fn mean_modulus(spectrum: &WindowSpectrum) -> f64 {
    if spectrum.moduli.is_empty() {
        return 0.0;
    }
    spectrum.moduli.iter().sum::<f64>() / spectrum.moduli.len() as f64
}

pub fn relative_change(a_k: f64, a_next: f64) -> RelativeChange {
    if a_k <= MEAN_FLOOR {
        if a_next <= MEAN_FLOOR {
            RelativeChange::Static
        } else {
            RelativeChange::Onset
        }
    } else {
        RelativeChange::Value((a_next - a_k).abs() / a_k)
    }
}

/// Tracks the most recent raw activation so that a run of threshold
/// crossings produces a single event. Equivalent to a `cooldown`-bit history
/// of test outcomes.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
struct ActivationGate {
    last_activation: Option<usize>,
}

impl ActivationGate {
    /// Records the raw test outcome for step `step`; returns whether an event
    /// should be emitted.
    fn admit(&mut self, step: usize, raw: bool, cooldown: usize, suppression: bool) -> bool {
        if !raw {
            return false;
        }
        let quiet = match self.last_activation {
            Some(prev) => step - prev > cooldown,
            None => true,
        };
        self.last_activation = Some(step);
        !suppression || quiet
    }
}

/// A flagged window.
#[derive(Debug, Clone, PartialEq)]
pub struct DetectionEvent {
    pub window_index: usize,
    pub statistic: RelativeChange,
    /// Frame whose arrival as the newest column triggered the change (`k + T`).
    pub entry_frame: usize,
    /// Frame whose departure as the oldest column triggered it (`k`).
    pub exit_frame: usize,
    /// Stream time in seconds, filled in by the caller.
    pub timestamp: Option<f64>,
}

/// Scalars carried between windows; no frame data.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct DetectorState {
    prev_mean: Option<f64>,
    last_window: Option<usize>,
    gate: ActivationGate,
    windows_seen: usize,
}

impl DetectorState {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn windows_seen(&self) -> usize {
        self.windows_seen
    }

    pub fn previous_mean(&self) -> Option<f64> {
        self.prev_mean
    }
}

/// Folds one spectrum into the detector.
pub fn detect_step(
    state: &mut DetectorState,
    spectrum: &WindowSpectrum,
    cfg: &DetectorConfig,
) -> Result<Option<DetectionEvent>> {
    if let Some(last) = state.last_window {
        if spectrum.window_index <= last {
            return Err(structural(format!(
                "window {} arrived after window {last}",
                spectrum.window_index
            )));
        }
    }
    let mean = mean_modulus(spectrum);
    let step = state.windows_seen;
    let event = match state.prev_mean {
        Some(prev) => {
            let change = relative_change(prev, mean);
            let raw = change.exceeds(cfg.threshold);
            state
                .gate
                .admit(step, raw, cfg.cooldown, cfg.suppression)
                .then(|| DetectionEvent {
                    window_index: spectrum.window_index,
                    statistic: change,
                    entry_frame: spectrum.window_index + cfg.window_len,
                    exit_frame: spectrum.window_index,
                    timestamp: None,
                })
        }
        None => None,
    };
    state.prev_mean = Some(mean);
    state.last_window = Some(spectrum.window_index);
    state.windows_seen += 1;
    Ok(event)
}

pub fn run_detector(spectra: &[WindowSpectrum], cfg: &DetectorConfig) -> Result<Vec<DetectionEvent>> {
    if spectra.is_empty() {
        return Err(parameter("detector needs at least one spectrum"));
    }
    cfg.validate()?;
    let mut state = DetectorState::new();
    let mut events = Vec::new();
    for spectrum in spectra {
        if let Some(ev) = detect_step(&mut state, spectrum, cfg)? {
            events.push(ev);
        }
    }
    Ok(events)
}

/// Relative change at every window after the first, in step order.
#[derive(Debug, Clone, PartialEq)]
pub struct ChangeSeries {
    /// `(window_index, change)`; the first window has no predecessor and is absent.
    pub changes: Vec<(usize, RelativeChange)>,
}

impl ChangeSeries {
    pub fn from_spectra(spectra: &[WindowSpectrum]) -> Self {
        let changes = spectra
            .windows(2)
            .map(|p| (p[1].window_index, relative_change(mean_modulus(&p[0]), mean_modulus(&p[1]))))
            .collect();
        Self { changes }
    }

    /// Window indices that would be flagged at `threshold`. Matches
    /// [`run_detector`] on the spectra this series came from.
    pub fn flagged(&self, threshold: f64, cooldown: usize, suppression: bool) -> Vec<usize> {
        let mut gate = ActivationGate::default();
        self.changes
            .iter()
            .enumerate()
            .filter_map(|(i, &(w, c))| {
                // the first predecessor-less window occupies step 0
                gate.admit(i + 1, c.exceeds(threshold), cooldown, suppression)
                    .then_some(w)
            })
            .collect()
    }

    pub fn len(&self) -> usize {
        self.changes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.changes.is_empty()
    }
}
