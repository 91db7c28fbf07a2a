//! Vectorized grayscale frames.

use nalgebra::{DMatrix, DVector};

use crate::error::{parameter, structural, Result};

/// One vectorized frame with its position in the stream.
#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    values: Vec<f64>,
    index: usize,
    timestep: f64,
}

impl Snapshot {
    pub fn new(values: Vec<f64>, index: usize, timestep: f64) -> Result<Self> {
        if values.is_empty() {
            return Err(structural("snapshot must contain at least one pixel"));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(parameter("snapshot contains non-finite values"));
        }
        if !(timestep > 0.0) || !timestep.is_finite() {
            return Err(parameter(format!("timestep must be positive, got {timestep}")));
        }
        Ok(Self {
            values,
            index,
            timestep,
        })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn index(&self) -> usize {
        self.index
    }

    pub fn timestep(&self) -> f64 {
        self.timestep
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Frames stacked as columns: an `M x F` snapshot matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameMatrix {
    data: DMatrix<f64>,
}

impl FrameMatrix {
    pub fn from_matrix(data: DMatrix<f64>) -> Result<Self> {
        if data.nrows() == 0 {
            return Err(structural("frame matrix needs at least one pixel row"));
        }
        Ok(Self { data })
    }

    /// Builds a matrix from equally sized frame vectors.
    pub fn from_columns(frames: &[Vec<f64>]) -> Result<Self> {
        let first = frames
            .first()
            .ok_or_else(|| structural("frame matrix needs at least one frame"))?;
        let m = first.len();
        if m == 0 {
            return Err(structural("frames must contain at least one pixel"));
        }
        if let Some((i, f)) = frames.iter().enumerate().find(|(_, f)| f.len() != m) {
            return Err(structural(format!(
                "frame {i} has {} pixels, expected {m}",
                f.len()
            )));
        }
        let data = DMatrix::from_fn(m, frames.len(), |r, c| frames[c][r]);
        Ok(Self { data })
    }

    pub fn pixels(&self) -> usize {
        self.data.nrows()
    }

    pub fn frame_count(&self) -> usize {
        self.data.ncols()
    }

    pub fn frame(&self, n: usize) -> &[f64] {
        let m = self.data.nrows();
        &self.data.as_slice()[n * m..(n + 1) * m]
    }

    pub fn frame_vector(&self, n: usize) -> DVector<f64> {
        self.data.column(n).into_owned()
    }

    /// Snapshot view of frame `n` at spacing `timestep`.
    pub fn snapshot(&self, n: usize, timestep: f64) -> Result<Snapshot> {
        Snapshot::new(self.frame(n).to_vec(), n, timestep)
    }

    pub fn as_matrix(&self) -> &DMatrix<f64> {
        &self.data
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.data
    }

    /// Columns `start..start + len` as an owned matrix.
    pub fn columns(&self, start: usize, len: usize) -> DMatrix<f64> {
        self.data.columns(start, len).into_owned()
    }

    pub fn scaled(&self, alpha: f64) -> Self {
        Self {
            data: &self.data * alpha,
        }
    }
}

/// Row-major `width x height` image to a column vector (identity on layout).
pub fn vectorize(image: &[Vec<f64>]) -> Vec<f64> {
    image.iter().flat_map(|row| row.iter().copied()).collect()
}

/// Inverse of [`vectorize`].
pub fn devectorize(values: &[f64], width: usize) -> Result<Vec<Vec<f64>>> {
    if width == 0 || !values.len().is_multiple_of(width) {
        return Err(structural(format!(
            "{} values do not tile rows of width {width}",
            values.len()
        )));
    }
    Ok(values.chunks(width).map(|r| r.to_vec()).collect())
}
