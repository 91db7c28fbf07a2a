//! Deterministic synthetic videos with ground truth.
//!
//! Two families:
//! * scene videos: a background (flat, textured, or textured with a swaying
//!   band), an optional bright blob that enters from the left, wanders and
//!   leaves to the right, illumination drift and Gaussian noise;
//! * spectral videos built directly from a known eigenvalue expansion, for
//!   checking the fitted spectrum against the truth.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{parameter, Result};
use crate::frames::FrameMatrix;
use crate::video_io::{GroundTruthLabel, LabelKind};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum BackgroundKind {
    Flat {
        level: f64,
    },
    Textured {
        contrast: f64,
    },
    /// Textured scene whose top band shifts back and forth, like foliage.
    Swaying {
        contrast: f64,
        /// Peak horizontal shift in pixels.
        amplitude: f64,
        /// Sway period in frames.
        period: f64,
        /// Fraction of rows (from the top) that sway.
        band: f64,
    },
}

/// A square blob; moves at `speed` px/frame while crossing the frame edges.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlobSpec {
    /// First frame in which the blob is visible.
    pub entry_frame: usize,
    /// First frame after the blob has fully left.
    pub exit_frame: usize,
    pub speed: f64,
    pub size: f64,
    pub intensity: f64,
    /// Vertical wobble amplitude in pixels while inside the scene.
    #[serde(default)]
    pub wobble: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticScenario {
    pub width: usize,
    pub height: usize,
    pub frame_count: usize,
    #[serde(default = "default_fps")]
    pub fps: f64,
    pub background: BackgroundKind,
    #[serde(default)]
    pub blob: Option<BlobSpec>,
    /// Additive brightness change per frame.
    #[serde(default)]
    pub drift: f64,
    /// Relative amplitude of slow lighting variation from a few smooth,
    /// independently modulated light sources.
    #[serde(default)]
    pub illumination: f64,
    #[serde(default)]
    pub noise: f64,
    pub seed: u64,
}

fn default_fps() -> f64 {
    30.0
}

/// Generated frames and everything needed to grade them.
#[derive(Debug, Clone)]
pub struct SyntheticVideo {
    pub frames: FrameMatrix,
    pub labels: Vec<GroundTruthLabel>,
    /// Noise-free frames without the blob.
    pub background: FrameMatrix,
    /// Per frame, whether each pixel is at least half covered by the blob.
    pub masks: Vec<Vec<bool>>,
}

impl SyntheticScenario {
    pub fn validate(&self) -> Result<()> {
        if self.width == 0 || self.height == 0 || self.frame_count < 2 {
            return Err(parameter("scenario needs a non-empty frame size and at least 2 frames"));
        }
        if !(self.fps > 0.0 && self.fps.is_finite()) {
            return Err(parameter("fps must be positive"));
        }
        if !(self.noise >= 0.0 && self.noise.is_finite() && self.drift.is_finite()) {
            return Err(parameter("noise must be finite and non-negative, drift finite"));
        }
        if !(0.0..=0.5).contains(&self.illumination) {
            return Err(parameter("illumination amplitude must lie in [0, 0.5]"));
        }
        match self.background {
            BackgroundKind::Flat { level } if !(0.0..=1.0).contains(&level) => {
                return Err(parameter("flat level must lie in [0, 1]"))
            }
            BackgroundKind::Textured { contrast } if !(0.0..=0.5).contains(&contrast) => {
                return Err(parameter("texture contrast must lie in [0, 0.5]"))
            }
            BackgroundKind::Swaying {
                contrast,
                amplitude,
                period,
                band,
            } if !(0.0..=0.5).contains(&contrast)
                || !(amplitude >= 0.0 && amplitude.is_finite())
                || !(period > 0.0 && period.is_finite())
                || !(0.0..=1.0).contains(&band) =>
            {
                return Err(parameter("invalid swaying background parameters"))
            }
            _ => {}
        }
        if let Some(b) = &self.blob {
            if !(b.speed > 0.0 && b.size > 0.0 && b.speed.is_finite() && b.size.is_finite()) {
                return Err(parameter("blob speed and size must be positive"));
            }
            if !(0.0..=1.0).contains(&b.intensity) || !b.wobble.is_finite() {
                return Err(parameter("blob intensity must lie in [0, 1]"));
            }
            if b.entry_frame >= b.exit_frame || b.exit_frame > self.frame_count {
                return Err(parameter("need entry < exit <= frame_count"));
            }
            if b.size >= self.width.min(self.height) as f64 {
                return Err(parameter("blob does not fit the frame"));
            }
            let crossing = self.crossing_frames(b);
            if (b.exit_frame - b.entry_frame) as f64 + 1e-9 < 2.0 * crossing {
                return Err(parameter(format!(
                    "blob needs {:.1} frames to enter and leave at speed {}, has {}",
                    2.0 * crossing,
                    b.speed,
                    b.exit_frame - b.entry_frame
                )));
            }
        }
        Ok(())
    }

    /// Frames spent crossing one edge, to a quarter of the way in.
    fn crossing_frames(&self, b: &BlobSpec) -> f64 {
        (b.size + 0.25 * (self.width as f64 - b.size)) / b.speed
    }

    /// Blob top-left corner at frame `n`, or `None` when off screen.
    pub fn blob_position(&self, n: usize) -> Option<(f64, f64)> {
        let b = self.blob.as_ref()?;
        if n < b.entry_frame || n >= b.exit_frame {
            return None;
        }
        let w = self.width as f64;
        let x_in = 0.25 * (w - b.size);
        let x_out = 0.75 * (w - b.size);
        let cross = self.crossing_frames(b);
        // Entry: left edge at -size + speed at the entry frame.
        let t = (n - b.entry_frame + 1) as f64;
        // Exit: left edge reaches the right border exactly at the exit frame.
        let to_exit = (b.exit_frame - n) as f64;
        let x = if t < cross {
            -b.size + b.speed * t
        } else if to_exit < cross {
            w - b.speed * to_exit
        } else {
            let span = (b.exit_frame - b.entry_frame) as f64 + 1.0 - 2.0 * cross;
            let frac = if span > 0.0 { (t - cross) / span } else { 0.0 };
            x_in + (x_out - x_in) * frac.clamp(0.0, 1.0)
        };
        let x = x.min(w);
        let inside = ((t - cross).max(0.0)).min((to_exit - cross).max(0.0));
        let y = 0.5 * (self.height as f64 - b.size)
            + b.wobble * (2.0 * PI * inside / 60.0).sin();
        Some((x, y))
    }

    pub fn labels(&self) -> Vec<GroundTruthLabel> {
        match &self.blob {
            Some(b) => vec![
                GroundTruthLabel {
                    frame: b.entry_frame,
                    kind: LabelKind::Entry,
                },
                GroundTruthLabel {
                    frame: b.exit_frame,
                    kind: LabelKind::Exit,
                },
            ],
            None => Vec::new(),
        }
    }
}

/// Smooth periodic texture in roughly `[0.5 - contrast, 0.5 + contrast]`.
struct Texture {
    terms: Vec<(f64, f64, f64, f64)>,
    contrast: f64,
}

impl Texture {
    fn new(rng: &mut ChaCha8Rng, width: usize, height: usize, contrast: f64) -> Self {
        let terms = (0..6)
            .map(|_| {
                let kx = (1 + rng.random_range(0..4)) as f64 * 2.0 * PI / width as f64;
                let ky = (1 + rng.random_range(0..4)) as f64 * 2.0 * PI / height as f64;
                let phase = rng.random::<f64>() * 2.0 * PI;
                let amp = 0.5 + rng.random::<f64>();
                (kx, ky, phase, amp)
            })
            .collect::<Vec<_>>();
        Self { terms, contrast }
    }

    fn at(&self, x: f64, y: f64) -> f64 {
        let total: f64 = self.terms.iter().map(|t| t.3).sum();
        let s: f64 = self
            .terms
            .iter()
            .map(|&(kx, ky, ph, a)| a * (kx * x + ky * y + ph).sin())
            .sum();
        0.5 + self.contrast * s / total
    }
}

const LIGHT_COUNT: usize = 4;

/// Smooth spatial falloff with a periodic gain.
struct Light {
    cx: f64,
    cy: f64,
    radius: f64,
    period: f64,
    phase: f64,
    weight: f64,
}

impl Light {
    fn random(rng: &mut ChaCha8Rng, width: usize, height: usize, index: usize) -> Self {
        Self {
            weight: 0.7f64.powi(index as i32),
            cx: rng.random::<f64>() * width as f64,
            cy: rng.random::<f64>() * height as f64,
            radius: (0.3 + 0.5 * rng.random::<f64>()) * width.max(height) as f64,
            period: 40.0 + 120.0 * rng.random::<f64>(),
            phase: rng.random::<f64>() * 2.0 * PI,
        }
    }

    fn gain(&self, x: f64, y: f64, n: usize) -> f64 {
        let d2 = ((x - self.cx).powi(2) + (y - self.cy).powi(2)) / (self.radius * self.radius);
        self.weight * (-d2).exp() * (2.0 * PI * n as f64 / self.period + self.phase).sin()
    }
}

/// Overlap of `[a, a + len)` with the unit cell `[i, i + 1)`.
fn overlap(a: f64, len: f64, i: usize) -> f64 {
    let lo = a.max(i as f64);
    let hi = (a + len).min(i as f64 + 1.0);
    (hi - lo).max(0.0)
}

pub fn generate_synthetic(scn: &SyntheticScenario) -> Result<SyntheticVideo> {
    scn.validate()?;
    let (w, h, f) = (scn.width, scn.height, scn.frame_count);
    let m = w * h;
    let mut rng = ChaCha8Rng::seed_from_u64(scn.seed);
    let texture = match scn.background {
        BackgroundKind::Flat { .. } => None,
        BackgroundKind::Textured { contrast } | BackgroundKind::Swaying { contrast, .. } => {
            Some(Texture::new(&mut rng, w, h, contrast))
        }
    };
    let lights: Vec<Light> = (0..LIGHT_COUNT).map(|j| Light::random(&mut rng, w, h, j)).collect();
    let noise = Normal::new(0.0, scn.noise.max(f64::MIN_POSITIVE)).expect("finite std");

    let mut frames = DMatrix::zeros(m, f);
    let mut background = DMatrix::zeros(m, f);
    let mut masks = Vec::with_capacity(f);
    for n in 0..f {
        let sway = match scn.background {
            BackgroundKind::Swaying {
                amplitude,
                period,
                band,
                ..
            } => Some((amplitude * (2.0 * PI * n as f64 / period).sin(), band)),
            _ => None,
        };
        let offset = scn.drift * n as f64;
        let pos = scn.blob_position(n);
        let mut mask = vec![false; m];
        for i in 0..h {
            for j in 0..w {
                let base = match (&scn.background, &texture) {
                    (BackgroundKind::Flat { level }, _) => *level,
                    (_, Some(tex)) => {
                        let shift = match sway {
                            Some((dx, band)) if (i as f64) < band * h as f64 => dx,
                            _ => 0.0,
                        };
                        tex.at(j as f64 - shift, i as f64)
                    }
                    (_, None) => unreachable!("textured backgrounds carry a texture"),
                };
                let light = if scn.illumination > 0.0 {
                    1.0 + scn.illumination
                        * lights
                            .iter()
                            .map(|l| l.gain(j as f64, i as f64, n))
                            .sum::<f64>()
                } else {
                    1.0
                };
                let bg = (base * light + offset).clamp(0.0, 1.0);
                let mut value = bg;
                if let (Some((x, y)), Some(b)) = (pos, scn.blob.as_ref()) {
                    let cov = overlap(x, b.size, j) * overlap(y, b.size, i);
                    if cov > 0.0 {
                        value = bg * (1.0 - cov) + b.intensity * cov;
                    }
                    mask[i * w + j] = cov >= 0.5;
                }
                background[(i * w + j, n)] = bg;
                let noisy = if scn.noise > 0.0 {
                    value + noise.sample(&mut rng)
                } else {
                    value
                };
                frames[(i * w + j, n)] = noisy.clamp(0.0, 1.0);
            }
        }
        masks.push(mask);
    }
    Ok(SyntheticVideo {
        frames: FrameMatrix::from_matrix(frames)?,
        labels: scn.labels(),
        background: FrameMatrix::from_matrix(background)?,
        masks,
    })
}

/// Real snapshots `x_n = sum_m c_m lambda_m^n psi_m`.
///
/// Complex eigenvalues must come in conjugate pairs; each pair is generated
/// once from the member with positive imaginary part, so the data is real.
pub fn spectral_video(m: usize, cols: usize, lambdas: &[Complex64], seed: u64) -> Result<DMatrix<f64>> {
    for l in lambdas.iter().filter(|l| l.im.abs() > 1e-14) {
        if !lambdas.iter().any(|c| (c - l.conj()).norm() < 1e-12) {
            return Err(parameter(format!("eigenvalue {l} has no conjugate partner")));
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut data = DMatrix::zeros(m, cols);
    for &lam in lambdas {
        if lam.im < -1e-14 {
            continue;
        }
        let psi: Vec<Complex64> = (0..m)
            .map(|_| Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5))
            .collect();
        let amp = Complex64::from_polar(0.5 + rng.random::<f64>(), rng.random::<f64>() * 2.0 * PI);
        let real = lam.im.abs() <= 1e-14;
        for n in 0..cols {
            let coef = amp * lam.powu(n as u32);
            for i in 0..m {
                let z = coef * psi[i];
                // a conjugate pair contributes z + conj(z)
                data[(i, n)] += if real { z.re } else { 2.0 * z.re };
            }
        }
    }
    Ok(data)
}

/// Random eigenvalue set of total size `k` within the unit annulus
/// `[rmin, 1]`, using conjugate pairs for complex members.
pub fn random_spectrum(k: usize, seed: u64) -> Vec<Complex64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(k);
    while out.len() < k {
        let r = 0.8 + 0.2 * rng.random::<f64>();
        if k - out.len() >= 2 && rng.random::<f64>() < 0.6 {
            let theta = 0.05 + 0.6 * rng.random::<f64>();
            out.push(Complex64::from_polar(r, theta));
            out.push(Complex64::from_polar(r, -theta));
        } else {
            out.push(Complex64::new(r, 0.0));
        }
    }
    out
}

/// Frames in which a rectangular patch oscillates at `freq` Hz.
///
/// The phase drifts by a quarter cycle across the patch. A standing
/// sinusoid would be only rank 2, too few dimensions for the three
/// eigenvalues `{1, e^{+-i theta}}` that generate it.
pub fn oscillating_patch(
    width: usize,
    height: usize,
    frames: usize,
    fps: f64,
    freq: f64,
) -> Result<FrameMatrix> {
    let (j0, j1) = (width / 3, 2 * width / 3);
    let patch = |i: usize, j: usize| i >= height / 3 && i < 2 * height / 3 && j >= j0 && j < j1;
    let span = (j1 - j0).max(1) as f64;
    let data = DMatrix::from_fn(width * height, frames, |p, n| {
        let (i, j) = (p / width, p % width);
        let base = 0.3 + 0.2 * ((j as f64 / width as f64) + (i as f64 / height as f64)) / 2.0;
        if patch(i, j) {
            let phase = 0.5 * PI * (j - j0) as f64 / span;
            base + 0.2 * (2.0 * PI * freq * n as f64 / fps + phase).sin()
        } else {
            base
        }
    });
    FrameMatrix::from_matrix(data)
}

/// Preset geometry shared by the corpora: `64 x 48`, 420 frames.
pub const PRESET_WIDTH: usize = 64;
pub const PRESET_HEIGHT: usize = 48;
pub const PRESET_FRAMES: usize = 420;

/// Blob scenario `i` of a varied family: background kind and brightness,
/// sway strength, blob speed, size, contrast and path. Rendered noise-free.
pub fn blob_scenario(i: usize, seed: u64) -> SyntheticScenario {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ (0x9e37_79b9_7f4a_7c15u64.wrapping_mul(i as u64 + 1)));
    let background = match i % 3 {
        0 => BackgroundKind::Flat {
            level: 0.1 + 0.4 * rng.random::<f64>(),
        },
        1 => BackgroundKind::Textured {
            contrast: 0.05 + 0.2 * rng.random::<f64>(),
        },
        _ => BackgroundKind::Swaying {
            contrast: 0.05 + 0.2 * rng.random::<f64>(),
            amplitude: 0.5 + 1.5 * rng.random::<f64>(),
            period: 20.0 + 40.0 * rng.random::<f64>(),
            band: 0.2 + 0.3 * rng.random::<f64>(),
        },
    };
    let speed = 0.75 + 2.75 * rng.random::<f64>();
    let size = 6.0 + 10.0 * rng.random::<f64>();
    let entry = 100 + rng.random_range(0..60);
    let exit = 250 + rng.random_range(0..80);
    SyntheticScenario {
        width: PRESET_WIDTH,
        height: PRESET_HEIGHT,
        frame_count: PRESET_FRAMES,
        fps: 30.0,
        background,
        blob: Some(BlobSpec {
            entry_frame: entry,
            exit_frame: exit,
            speed,
            size,
            intensity: 0.7 + 0.3 * rng.random::<f64>(),
            wobble: 3.0 * rng.random::<f64>(),
        }),
        drift: 0.0,
        illumination: 0.0,
        noise: 0.0,
        seed: seed.wrapping_add(i as u64),
    }
}

/// Blob-free scenario with a flat or textured background.
pub fn static_scenario(i: usize, seed: u64) -> SyntheticScenario {
    let mut s = blob_scenario(i, seed);
    s.blob = None;
    if let BackgroundKind::Swaying { contrast, .. } = s.background {
        s.background = BackgroundKind::Textured { contrast };
    }
    s
}

/// Blob-free scenario whose only motion is a swaying band.
pub fn swaying_scenario(i: usize, seed: u64) -> SyntheticScenario {
    let mut s = blob_scenario(3 * i + 2, seed);
    s.blob = None;
    s
}

/// Mixed corpus of blob scenarios over all background kinds.
pub fn mixed_corpus(n: usize, seed: u64) -> Vec<SyntheticScenario> {
    (0..n).map(|i| blob_scenario(i, seed)).collect()
}

/// Blob crossing the frame at one constant speed over a flat or textured
/// background, noise-free. The whole visit fits in an 80-frame window.
pub fn crossing_scenario(i: usize, seed: u64) -> SyntheticScenario {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ (0x2545_f491_4f6c_dd1du64.wrapping_mul(i as u64 + 1)));
    let background = if i.is_multiple_of(2) {
        BackgroundKind::Flat {
            level: 0.1 + 0.4 * rng.random::<f64>(),
        }
    } else {
        BackgroundKind::Textured {
            contrast: 0.05 + 0.2 * rng.random::<f64>(),
        }
    };
    let speed = 1.0 + 1.2 * rng.random::<f64>();
    let size = 6.0 + 8.0 * rng.random::<f64>();
    let entry = 100 + rng.random_range(0..40);
    let w = PRESET_WIDTH as f64;
    // entry and exit ramps plus a middle leg at the same speed
    let cross = (size + 0.25 * (w - size)) / speed;
    let visit = 2.0 * cross + 0.5 * (w - size) / speed;
    SyntheticScenario {
        width: PRESET_WIDTH,
        height: PRESET_HEIGHT,
        frame_count: PRESET_FRAMES,
        fps: 30.0,
        background,
        blob: Some(BlobSpec {
            entry_frame: entry,
            exit_frame: entry + visit.round() as usize - 1,
            speed,
            size,
            intensity: 0.7 + 0.3 * rng.random::<f64>(),
            wobble: 0.0,
        }),
        drift: 0.0,
        illumination: 0.0,
        noise: 0.0,
        seed: seed.wrapping_add(1000 + i as u64),
    }
}
