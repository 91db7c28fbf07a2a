//! Exact and compressed dynamic mode decomposition.
//!
//! The compressed path sketches snapshot pairs with a fixed random matrix,
//! rank-reduces the sketch with a thin SVD and projects the one-step map onto
//! the leading singular vectors. Full-dimensional modes are recovered from the
//! uncompressed shifted data.

use std::cmp::Ordering;

use nalgebra::{DMatrix, DVector, Schur};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{parameter, structural, DmdError, Result};
use crate::linalg::Svd;

/// Relative cutoff below which singular values are treated as zero.
pub const SINGULAR_VALUE_CUTOFF: f64 = 1e-12;
/// Max-norm residual allowed on `A Q = Q diag(lambda)` before flagging.
pub const EIGEN_RESIDUAL_TOL: f64 = 1e-8;
/// Mode matrices with a larger condition number are flagged.
pub const ILL_CONDITIONED: f64 = 1e12;
/// Modulus substituted for `|log 0|`.
pub const DEFAULT_ZERO_SENTINEL: f64 = 1e3;

const SCHUR_MAX_ITER: usize = 10_000;
const TIE_TOL: f64 = 1e-12;

/// Snapshot matrices `X` and `Y`, where column `j` of `Y` follows column `j` of `X`.
#[derive(Debug, Clone, PartialEq)]
pub struct DataMatrixPair {
    x: DMatrix<f64>,
    y: DMatrix<f64>,
}

impl DataMatrixPair {
    pub fn new(x: DMatrix<f64>, y: DMatrix<f64>) -> Result<Self> {
        if x.shape() != y.shape() {
            return Err(structural(format!(
                "X is {:?} but Y is {:?}",
                x.shape(),
                y.shape()
            )));
        }
        if x.nrows() == 0 || x.ncols() == 0 {
            return Err(structural("data matrices must be non-empty"));
        }
        Ok(Self { x, y })
    }

    /// Splits `W = [w_0 .. w_N]` into `X = [w_0 .. w_{N-1}]`, `Y = [w_1 .. w_N]`.
    pub fn from_snapshots(w: &DMatrix<f64>) -> Result<Self> {
        if w.ncols() < 2 {
            return Err(structural("need at least two snapshots"));
        }
        let n = w.ncols() - 1;
        Self::new(w.columns(0, n).into_owned(), w.columns(1, n).into_owned())
    }

    pub fn x(&self) -> &DMatrix<f64> {
        &self.x
    }

    pub fn y(&self) -> &DMatrix<f64> {
        &self.y
    }

    pub fn into_parts(self) -> (DMatrix<f64>, DMatrix<f64>) {
        (self.x, self.y)
    }
}

/// Random `p x M` sketching matrix with i.i.d. uniform `[0, 1)` entries.
#[derive(Debug, Clone, PartialEq)]
pub struct CompressionOperator {
    entries: DMatrix<f64>,
    seed: u64,
}

impl CompressionOperator {
    /// Draws the sketch from a ChaCha8 stream seeded with `seed`.
    pub fn generate(sketch_dim: usize, pixels: usize, seed: u64) -> Result<Self> {
        if sketch_dim == 0 || pixels == 0 {
            return Err(parameter("sketch dimension and pixel count must be positive"));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let values: Vec<f64> = (0..sketch_dim * pixels).map(|_| rng.random::<f64>()).collect();
        Ok(Self {
            entries: DMatrix::from_vec(sketch_dim, pixels, values),
            seed,
        })
    }

    /// Wraps an explicit matrix (identity sketches in tests, imported operators).
    pub fn from_matrix(entries: DMatrix<f64>, seed: u64) -> Result<Self> {
        if entries.nrows() == 0 || entries.ncols() == 0 {
            return Err(parameter("compression operator must be non-empty"));
        }
        Ok(Self { entries, seed })
    }

    pub fn sketch_dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn pixels(&self) -> usize {
        self.entries.ncols()
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.entries
    }

    /// `C x` for a single frame.
    pub fn compress_frame(&self, frame: &[f64]) -> Result<DVector<f64>> {
        if frame.len() != self.pixels() {
            return Err(structural(format!(
                "frame has {} pixels, compression operator expects {}",
                frame.len(),
                self.pixels()
            )));
        }
        let mut out = DVector::zeros(self.sketch_dim());
        // Column-major axpy: one contiguous sketch column per pixel.
        for (j, &v) in frame.iter().enumerate() {
            if v != 0.0 {
                out.axpy(v, &self.entries.column(j), 1.0);
            }
        }
        Ok(out)
    }

    /// `C W`, computed column by column so it agrees bit-for-bit with
    /// [`CompressionOperator::compress_frame`].
    pub fn compress_columns(&self, w: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        if w.nrows() != self.pixels() {
            return Err(structural(format!(
                "matrix has {} rows, compression operator expects {}",
                w.nrows(),
                self.pixels()
            )));
        }
        let m = w.nrows();
        let cols = crate::parallel::try_map_indices(w.ncols(), |j| {
            self.compress_frame(&w.as_slice()[j * m..(j + 1) * m])
        })?;
        Ok(DMatrix::from_columns(&cols))
    }

    /// `X' = C X`, `Y' = C Y`.
    pub fn compress(&self, pair: &DataMatrixPair) -> Result<DataMatrixPair> {
        DataMatrixPair::new(self.compress_columns(&pair.x)?, self.compress_columns(&pair.y)?)
    }
}

/// Moore-Penrose pseudo-inverse with the relative singular-value cutoff.
pub fn pseudo_inverse(m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let svd = Svd::new(m)?;
    let smax = svd.singular_values.first().copied().unwrap_or(0.0);
    let mut out = DMatrix::zeros(m.ncols(), m.nrows());
    for (i, &s) in svd.singular_values.iter().enumerate() {
        if smax > 0.0 && s > SINGULAR_VALUE_CUTOFF * smax {
            out += svd.v.column(i) * svd.u.column(i).transpose() * (1.0 / s);
        }
    }
    Ok(out)
}

/// Full DMD matrix `A = Y X^+`, the least-squares minimizer of `||Y - A X||_F`.
pub fn exact_dmd(pair: &DataMatrixPair) -> Result<DMatrix<f64>> {
    Ok(&pair.y * pseudo_inverse(&pair.x)?)
}

/// Leading `r` singular triplets of a sketched data matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct ReducedSvd {
    u: DMatrix<f64>,
    sigma: Vec<f64>,
    v: DMatrix<f64>,
    effective_rank: usize,
}

impl ReducedSvd {
    pub fn u(&self) -> &DMatrix<f64> {
        &self.u
    }

    pub fn sigma(&self) -> &[f64] {
        &self.sigma
    }

    pub fn v(&self) -> &DMatrix<f64> {
        &self.v
    }

    pub fn rank(&self) -> usize {
        self.sigma.len()
    }

    /// Number of singular values above `SINGULAR_VALUE_CUTOFF * sigma_max`.
    pub fn effective_rank(&self) -> usize {
        self.effective_rank
    }

    pub fn has_zero_singular_values(&self) -> bool {
        self.effective_rank < self.sigma.len()
    }

    /// Keeps the leading `k` triplets.
    pub fn truncated(&self, k: usize) -> Self {
        let k = k.min(self.rank());
        Self {
            u: self.u.columns(0, k).into_owned(),
            sigma: self.sigma[..k].to_vec(),
            v: self.v.columns(0, k).into_owned(),
            effective_rank: self.effective_rank.min(k),
        }
    }

    /// Diagonal pseudo-inverse entries: `1/sigma` above the cutoff, else 0.
    pub fn inverse_sigma(&self) -> Vec<f64> {
        let smax = self.sigma.first().copied().unwrap_or(0.0);
        self.sigma
            .iter()
            .map(|&s| {
                if smax > 0.0 && s > SINGULAR_VALUE_CUTOFF * smax {
                    1.0 / s
                } else {
                    0.0
                }
            })
            .collect()
    }

    /// `U_r Sigma_r V_r^T`.
    pub fn reconstruct(&self) -> DMatrix<f64> {
        let mut us = self.u.clone();
        for (j, &s) in self.sigma.iter().enumerate() {
            us.column_mut(j).scale_mut(s);
        }
        us * self.v.transpose()
    }
}

/// Best rank-`r` factorization of `xp`.
pub fn reduced_svd(xp: &DMatrix<f64>, r: usize) -> Result<ReducedSvd> {
    let limit = xp.nrows().min(xp.ncols());
    if r == 0 || r > limit {
        return Err(parameter(format!(
            "rank {r} must lie in 1..={limit} for a {}x{} matrix",
            xp.nrows(),
            xp.ncols()
        )));
    }
    if xp.iter().any(|v| !v.is_finite()) {
        return Err(parameter("data matrix contains non-finite values"));
    }
    // singular values arrive sorted descending
    let svd = Svd::new(xp)?;
    let u = svd.u.columns(0, r).into_owned();
    let v = svd.v.columns(0, r).into_owned();
    let sigma = svd.singular_values[..r].to_vec();
    let smax = sigma[0];
    let effective_rank = sigma
        .iter()
        .filter(|&&s| smax > 0.0 && s > SINGULAR_VALUE_CUTOFF * smax)
        .count();
    Ok(ReducedSvd {
        u,
        sigma,
        v,
        effective_rank,
    })
}

/// The projected `r x r` one-step operator.
#[derive(Debug, Clone, PartialEq)]
pub struct ReducedOperator {
    matrix: DMatrix<f64>,
}

impl ReducedOperator {
    pub fn from_matrix(matrix: DMatrix<f64>) -> Result<Self> {
        if !matrix.is_square() || matrix.nrows() == 0 {
            return Err(structural("reduced operator must be square and non-empty"));
        }
        if matrix.iter().any(|v| !v.is_finite()) {
            return Err(parameter("reduced operator has non-finite entries"));
        }
        Ok(Self { matrix })
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }
}

/// `A~ = U_r^T Y' V_r Sigma_r^+`.
pub fn build_reduced_operator(svd: &ReducedSvd, yp: &DMatrix<f64>) -> Result<ReducedOperator> {
    if yp.nrows() != svd.u.nrows() || yp.ncols() != svd.v.nrows() {
        return Err(structural(format!(
            "Y' is {}x{} but the SVD expects {}x{}",
            yp.nrows(),
            yp.ncols(),
            svd.u.nrows(),
            svd.v.nrows()
        )));
    }
    if svd.sigma.iter().all(|&s| s == 0.0) {
        return Err(DmdError::Degenerate("all singular values are zero".into()));
    }
    let mut right = yp * &svd.v;
    for (j, inv) in svd.inverse_sigma().into_iter().enumerate() {
        right.column_mut(j).scale_mut(inv);
    }
    ReducedOperator::from_matrix(svd.u.transpose() * right)
}

/// Eigenpairs of a reduced operator.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenSystem {
    values: Vec<Complex64>,
    vectors: DMatrix<Complex64>,
    max_residual: f64,
}

impl EigenSystem {
    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    /// Eigenvectors as columns, in the order of [`EigenSystem::values`].
    pub fn vectors(&self) -> &DMatrix<Complex64> {
        &self.vectors
    }

    pub fn max_residual(&self) -> f64 {
        self.max_residual
    }

    /// Residual above tolerance: the operator is (numerically) defective.
    pub fn is_defective(&self) -> bool {
        self.max_residual > EIGEN_RESIDUAL_TOL
    }

    /// `r` copies of `lambda = 1` with the identity basis.
    pub fn identity(r: usize) -> Self {
        Self {
            values: vec![Complex64::new(1.0, 0.0); r],
            vectors: DMatrix::identity(r, r),
            max_residual: 0.0,
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Descending modulus, ties broken by ascending argument.
pub fn eigenvalue_order(a: &Complex64, b: &Complex64) -> Ordering {
    let (ma, mb) = (a.norm(), b.norm());
    if (ma - mb).abs() <= TIE_TOL * (1.0 + ma.max(mb)) {
        principal_arg(*a)
            .partial_cmp(&principal_arg(*b))
            .unwrap_or(Ordering::Equal)
    } else {
        mb.partial_cmp(&ma).unwrap_or(Ordering::Equal)
    }
}

/// Sorts eigenvalues with [`eigenvalue_order`].
pub fn sort_eigenvalues(values: &mut [Complex64]) {
    values.sort_by(eigenvalue_order);
}

fn principal_arg(z: Complex64) -> f64 {
    let a = z.arg();
    if a == -std::f64::consts::PI {
        std::f64::consts::PI
    } else {
        a
    }
}

/// Eigen-decomposition via real Schur form; eigenvectors from the null space
/// of `A - lambda I` (one basis vector per repeated value).
pub fn eigendecompose(op: &ReducedOperator) -> Result<EigenSystem> {
    let a = op.matrix();
    let n = a.nrows();
    let schur = Schur::try_new(a.clone(), f64::EPSILON, SCHUR_MAX_ITER).ok_or_else(|| {
        DmdError::Numerical {
            message: "Schur decomposition did not converge".into(),
            operator: Some(a.transpose().as_slice().to_vec()),
        }
    })?;
    let mut values: Vec<Complex64> = schur.complex_eigenvalues().iter().copied().collect();
    sort_eigenvalues(&mut values);

    let ac: DMatrix<Complex64> = a.map(|v| Complex64::new(v, 0.0));
    let scale = a.amax().max(1.0);
    let mut vectors = DMatrix::<Complex64>::zeros(n, n);
    let mut i = 0;
    while i < n {
        let lam = values[i];
        let mut g = 1;
        while i + g < n && (values[i + g] - lam).norm() <= 1e-10 * scale {
            g += 1;
        }
        let shifted = &ac - DMatrix::<Complex64>::identity(n, n) * lam;
        // smallest singular vectors span the (numerical) null space
        let svd = Svd::new(&shifted)?;
        for k in 0..g {
            let mut v: DVector<Complex64> = svd.v.column(n - 1 - k).into_owned();
            normalize_phase(&mut v);
            vectors.set_column(i + k, &v);
        }
        i += g;
    }

    let lambda = DMatrix::from_diagonal(&DVector::from_vec(values.clone()));
    let residual = &ac * &vectors - &vectors * lambda;
    let max_residual = residual.iter().map(|z| z.norm()).fold(0.0, f64::max);
    if max_residual > EIGEN_RESIDUAL_TOL * scale {
        log::debug!("eigen residual {max_residual:.3e} exceeds tolerance; operator may be defective");
    }
    Ok(EigenSystem {
        values,
        vectors,
        max_residual,
    })
}

/// Unit norm, largest-magnitude component real and positive.
fn normalize_phase(v: &mut DVector<Complex64>) {
    let norm = v.norm();
    if norm == 0.0 {
        return;
    }
    let pivot = v
        .iter()
        .copied()
        .max_by(|a, b| a.norm().partial_cmp(&b.norm()).unwrap_or(Ordering::Equal))
        .unwrap_or(Complex64::new(1.0, 0.0));
    let phase = pivot / pivot.norm();
    v.apply(|z| *z /= phase * norm);
}

/// Continuous-time eigenvalues `omega = log(lambda) / h`.
#[derive(Debug, Clone, PartialEq)]
pub struct ContinuousSpectrum {
    omegas: Vec<Complex64>,
    moduli: Vec<f64>,
    timestep: f64,
    zero_eigenvalues: usize,
}

impl ContinuousSpectrum {
    pub fn omegas(&self) -> &[Complex64] {
        &self.omegas
    }

    /// `|omega_m|` in inverse time units of `h`.
    pub fn moduli(&self) -> &[f64] {
        &self.moduli
    }

    /// `|omega_m| h`, i.e. `|log lambda_m|` per snapshot step.
    pub fn per_step_moduli(&self) -> Vec<f64> {
        self.moduli.iter().map(|m| m * self.timestep).collect()
    }

    pub fn timestep(&self) -> f64 {
        self.timestep
    }

    /// Eigenvalues that were exactly zero and replaced by the sentinel.
    pub fn zero_eigenvalues(&self) -> usize {
        self.zero_eigenvalues
    }

    pub fn len(&self) -> usize {
        self.omegas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.omegas.is_empty()
    }
}

/// Principal-branch `log(lambda) / h` for each eigenvalue.
///
/// A zero eigenvalue has no logarithm; its modulus becomes `zero_sentinel`
/// (and `omega = -zero_sentinel`, a mode that vanishes after one step).
pub fn continuous_spectrum(
    values: &[Complex64],
    timestep: f64,
    zero_sentinel: f64,
) -> Result<ContinuousSpectrum> {
    if !(timestep > 0.0) || !timestep.is_finite() {
        return Err(parameter(format!("timestep must be positive, got {timestep}")));
    }
    let mut zero_eigenvalues = 0;
    let mut omegas = Vec::with_capacity(values.len());
    let mut moduli = Vec::with_capacity(values.len());
    for &lam in values {
        if lam.norm() == 0.0 {
            zero_eigenvalues += 1;
            omegas.push(Complex64::new(-zero_sentinel, 0.0));
            moduli.push(zero_sentinel);
            continue;
        }
        let mut w = lam.ln();
        if w.im == -std::f64::consts::PI {
            w.im = std::f64::consts::PI;
        }
        let w = w / timestep;
        omegas.push(w);
        moduli.push(w.norm());
    }
    if zero_eigenvalues > 0 {
        log::debug!("{zero_eigenvalues} zero eigenvalue(s) mapped to sentinel {zero_sentinel}");
    }
    Ok(ContinuousSpectrum {
        omegas,
        moduli,
        timestep,
        zero_eigenvalues,
    })
}

/// Full-dimensional DMD modes and their amplitudes.
#[derive(Debug, Clone, PartialEq)]
pub struct ModeSet {
    modes: DMatrix<Complex64>,
    amplitudes: DVector<Complex64>,
    condition_number: f64,
}

impl ModeSet {
    /// `M x r` modes, one per column.
    pub fn modes(&self) -> &DMatrix<Complex64> {
        &self.modes
    }

    pub fn amplitudes(&self) -> &DVector<Complex64> {
        &self.amplitudes
    }

    pub fn condition_number(&self) -> f64 {
        self.condition_number
    }

    pub fn is_ill_conditioned(&self) -> bool {
        !(self.condition_number <= ILL_CONDITIONED)
    }

    pub fn len(&self) -> usize {
        self.modes.ncols()
    }

    pub fn is_empty(&self) -> bool {
        self.modes.ncols() == 0
    }

    /// `sum_{m in subset} c_m psi_m exp(omega_m t)`; `t` is measured from the
    /// first snapshot of the fitted window. `None` sums every mode.
    pub fn expansion(
        &self,
        spectrum: &ContinuousSpectrum,
        t: f64,
        subset: Option<&[usize]>,
    ) -> DVector<Complex64> {
        let all: Vec<usize>;
        let idx = match subset {
            Some(s) => s,
            None => {
                all = (0..self.len()).collect();
                &all
            }
        };
        let mut out = DVector::<Complex64>::zeros(self.modes.nrows());
        for &m in idx {
            let coeff = self.amplitudes[m] * (spectrum.omegas()[m] * t).exp();
            out.axpy(coeff, &self.modes.column(m), Complex64::new(1.0, 0.0));
        }
        out
    }
}

/// `Phi = Y V Sigma^+ Q` from the uncompressed `Y`, with amplitudes solving
/// `min ||Phi c - x1||_2`.
pub fn recover_modes(
    y: &DMatrix<f64>,
    svd: &ReducedSvd,
    eig: &EigenSystem,
    x1: &[f64],
) -> Result<ModeSet> {
    if y.ncols() != svd.v.nrows() {
        return Err(structural(format!(
            "Y has {} columns but V has {} rows",
            y.ncols(),
            svd.v.nrows()
        )));
    }
    if eig.len() != svd.rank() {
        return Err(structural(format!(
            "{} eigenpairs for a rank-{} SVD",
            eig.len(),
            svd.rank()
        )));
    }
    if x1.len() != y.nrows() {
        return Err(structural(format!(
            "initial snapshot has {} pixels, Y has {} rows",
            x1.len(),
            y.nrows()
        )));
    }
    let mut yv = y * &svd.v;
    for (j, inv) in svd.inverse_sigma().into_iter().enumerate() {
        yv.column_mut(j).scale_mut(inv);
    }
    let modes = yv.map(|v| Complex64::new(v, 0.0)) * eig.vectors();

    let msvd = Svd::new(&modes)?;
    let smax = msvd.singular_values.first().copied().unwrap_or(0.0);
    let smin = msvd.singular_values.last().copied().unwrap_or(0.0);
    let condition_number = if smin > 0.0 { smax / smin } else { f64::INFINITY };
    if condition_number > ILL_CONDITIONED {
        log::debug!("mode matrix condition number {condition_number:.3e}");
    }
    let rhs = DVector::from_iterator(x1.len(), x1.iter().map(|&v| Complex64::new(v, 0.0)));
    let mut amplitudes = DVector::<Complex64>::zeros(modes.ncols());
    for (i, &s) in msvd.singular_values.iter().enumerate() {
        if smax > 0.0 && s > SINGULAR_VALUE_CUTOFF * smax {
            let coef = msvd.u.column(i).dotc(&rhs) / s;
            amplitudes += msvd.v.column(i) * coef;
        }
    }
    Ok(ModeSet {
        modes,
        amplitudes,
        condition_number,
    })
}

/// Flags raised while fitting one window.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct FitFlags {
    /// Every singular value was zero; eigenvalues were set to 1.
    pub degenerate: bool,
    /// Effective rank when it fell short of the requested rank.
    pub rank_deficient: Option<usize>,
    /// Eigen residual above [`EIGEN_RESIDUAL_TOL`].
    pub defective: bool,
}

/// Reduced SVD, operator and eigenpairs for one sketched window.
#[derive(Debug, Clone)]
pub struct WindowFit {
    pub svd: ReducedSvd,
    pub operator: ReducedOperator,
    pub eigen: EigenSystem,
    pub flags: FitFlags,
}

/// Fits the reduced DMD of a sketched window.
///
/// When the sketch has fewer than `r` nonzero singular values the fit uses the
/// effective rank; callers decide how to report the missing eigenvalues. An
/// all-zero window yields `r` unit eigenvalues and the `degenerate` flag.
pub fn fit_window(xp: &DMatrix<f64>, yp: &DMatrix<f64>, r: usize) -> Result<WindowFit> {
    let svd = reduced_svd(xp, r)?;
    if svd.effective_rank == 0 {
        return Ok(WindowFit {
            operator: ReducedOperator::from_matrix(DMatrix::identity(r, r))?,
            eigen: EigenSystem::identity(r),
            svd,
            flags: FitFlags {
                degenerate: true,
                rank_deficient: Some(0),
                defective: false,
            },
        });
    }
    let mut flags = FitFlags::default();
    let svd = if svd.has_zero_singular_values() {
        flags.rank_deficient = Some(svd.effective_rank);
        svd.truncated(svd.effective_rank)
    } else {
        svd
    };
    let operator = build_reduced_operator(&svd, yp)?;
    let eigen = eigendecompose(&operator)?;
    flags.defective = eigen.max_residual() > EIGEN_RESIDUAL_TOL * operator.matrix().amax().max(1.0);
    Ok(WindowFit {
        svd,
        operator,
        eigen,
        flags,
    })
}
