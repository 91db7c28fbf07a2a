//! Frame-at-a-time detector: ingest sketch, window fit, detector step.
//!
//! Apart from the compression operator, a [`StreamingDetector`] holds only
//! the `T + 1` sketches of the current window and a few scalars, so memory
//! does not grow with the length of the stream.

use crate::detection::{detect_step, DetectionEvent, DetectorConfig, DetectorState};
use crate::dmd::CompressionOperator;
use crate::error::{parameter, structural, Result};
use crate::frames::FrameMatrix;
use crate::window::{spectrum_series, window_spectrum, FrameRing, WindowConfig, WindowSpectrum};

/// Result of feeding one frame.
#[derive(Debug, Clone, PartialEq)]
pub struct StepOutput {
    /// Spectrum of the window completed by this frame, if any.
    pub spectrum: Option<WindowSpectrum>,
    pub event: Option<DetectionEvent>,
}

#[derive(Debug, Clone)]
pub struct StreamingDetector {
    window: WindowConfig,
    detector: DetectorConfig,
    op: CompressionOperator,
    ring: FrameRing,
    state: DetectorState,
    fps: f64,
}

impl StreamingDetector {
    pub fn new(
        window: WindowConfig,
        detector: DetectorConfig,
        op: CompressionOperator,
        fps: f64,
    ) -> Result<Self> {
        window.validate()?;
        detector.validate()?;
        if detector.window_len != window.window_len {
            return Err(parameter(format!(
                "detector expects T = {}, window has T = {}",
                detector.window_len, window.window_len
            )));
        }
        if op.sketch_dim() != window.sketch_dim {
            return Err(structural(format!(
                "operator sketches to {}, config expects {}",
                op.sketch_dim(),
                window.sketch_dim
            )));
        }
        if !(fps.is_finite() && fps > 0.0) {
            return Err(parameter(format!("frame rate {fps} must be positive")));
        }
        Ok(Self {
            ring: FrameRing::for_config(&window),
            window,
            detector,
            op,
            state: DetectorState::new(),
            fps,
        })
    }

    /// Sketches `frame`, and fits and tests the window it completes.
    pub fn push_frame(&mut self, frame: &[f64]) -> Result<StepOutput> {
        self.ring.push_frame(frame, &self.op)?;
        let due = self
            .ring
            .window_index()
            .is_some_and(|k| k % self.window.stride == 0);
        if !due {
            return Ok(StepOutput {
                spectrum: None,
                event: None,
            });
        }
        let spectrum = window_spectrum(&self.ring, &self.window)?;
        let event = detect_step(&mut self.state, &spectrum, &self.detector)?.map(|mut ev| {
            ev.timestamp = Some(event_timestamp(ev.window_index, self.window.window_len, self.fps));
            ev
        });
        Ok(StepOutput {
            spectrum: Some(spectrum),
            event,
        })
    }

    pub fn frames_pushed(&self) -> usize {
        self.ring.frames_pushed()
    }

    pub fn windows_seen(&self) -> usize {
        self.state.windows_seen()
    }

    pub fn operator(&self) -> &CompressionOperator {
        &self.op
    }

    /// `f64` values held besides the operator.
    pub fn retained_values(&self) -> usize {
        self.ring.retained_values()
    }
}

/// Stream time at which window `k` closes: `(k + T) / fps`.
pub fn event_timestamp(window_index: usize, window_len: usize, fps: f64) -> f64 {
    (window_index + window_len) as f64 / fps
}

/// Spectra and events of a whole video, computed window-parallel.
#[derive(Debug, Clone, PartialEq)]
pub struct BatchDetection {
    pub spectra: Vec<WindowSpectrum>,
    pub events: Vec<DetectionEvent>,
}

pub fn detect_batch(
    frames: &FrameMatrix,
    window: &WindowConfig,
    detector: &DetectorConfig,
    op: &CompressionOperator,
    fps: f64,
) -> Result<BatchDetection> {
    if !(fps.is_finite() && fps > 0.0) {
        return Err(parameter(format!("frame rate {fps} must be positive")));
    }
    let spectra = spectrum_series(frames, window, op)?;
    let mut events = crate::detection::run_detector(&spectra, detector)?;
    for ev in &mut events {
        ev.timestamp = Some(event_timestamp(ev.window_index, window.window_len, fps));
    }
    Ok(BatchDetection { spectra, events })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::{generate_synthetic, BackgroundKind, BlobSpec, SyntheticScenario};

    fn scenario() -> SyntheticScenario {
        SyntheticScenario {
            width: 24,
            height: 16,
            frame_count: 160,
            fps: 30.0,
            background: BackgroundKind::Textured { contrast: 0.1 },
            blob: Some(BlobSpec {
                entry_frame: 40,
                exit_frame: 120,
                speed: 2.0,
                size: 5.0,
                intensity: 0.9,
                wobble: 0.0,
            }),
            drift: 0.0,
            illumination: 0.0,
            noise: 0.0,
            seed: 3,
        }
    }

    fn configs() -> (WindowConfig, DetectorConfig) {
        let w = WindowConfig {
            window_len: 20,
            ..WindowConfig::default()
        };
        (w, DetectorConfig::new(0.5, 20).unwrap())
    }

    #[test]
    fn stream_matches_batch() {
        let video = generate_synthetic(&scenario()).unwrap();
        let (w, d) = configs();
        let op = CompressionOperator::generate(w.sketch_dim, video.frames.pixels(), 1).unwrap();
        let batch = detect_batch(&video.frames, &w, &d, &op, 30.0).unwrap();
        let mut stream = StreamingDetector::new(w, d, op, 30.0).unwrap();
        let mut spectra = Vec::new();
        let mut events = Vec::new();
        for n in 0..video.frames.frame_count() {
            let out = stream.push_frame(video.frames.frame(n)).unwrap();
            spectra.extend(out.spectrum);
            events.extend(out.event);
        }
        assert_eq!(spectra.len(), batch.spectra.len());
        for (a, b) in spectra.iter().zip(&batch.spectra) {
            for (x, y) in a.moduli.iter().zip(&b.moduli) {
                assert!((x - y).abs() <= 1e-12);
            }
        }
        assert_eq!(events, batch.events);
        assert!(!events.is_empty());
        assert_eq!(stream.retained_values(), w.sketch_dim * (w.window_len + 1));
    }

    #[test]
    fn stride_skips_windows() {
        let video = generate_synthetic(&scenario()).unwrap();
        let (mut w, d) = configs();
        w.stride = 4;
        let op = CompressionOperator::generate(w.sketch_dim, video.frames.pixels(), 1).unwrap();
        let mut stream = StreamingDetector::new(w, d, op, 30.0).unwrap();
        let mut idx = Vec::new();
        for n in 0..video.frames.frame_count() {
            if let Some(s) = stream.push_frame(video.frames.frame(n)).unwrap().spectrum {
                idx.push(s.window_index);
            }
        }
        assert_eq!(idx.len(), w.window_count(160));
        assert!(idx.iter().all(|k| k % 4 == 0));
    }

    #[test]
    fn timestamp_is_window_close() {
        assert!((event_timestamp(10, 80, 30.0) - 3.0).abs() < 1e-15);
    }

    #[test]
    fn rejects_mismatched_configs() {
        let (w, _) = configs();
        let op = CompressionOperator::generate(20, 16, 1).unwrap();
        let d = DetectorConfig::new(0.5, 30).unwrap();
        assert!(StreamingDetector::new(w, d, op.clone(), 30.0).is_err());
        let d = DetectorConfig::new(0.5, 20).unwrap();
        assert!(StreamingDetector::new(w, d, op, 0.0).is_err());
    }
}
