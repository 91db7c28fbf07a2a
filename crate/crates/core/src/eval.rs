//! Scoring against ground truth, ROC analysis and threshold selection by
//! k-fold cross-validation.
//!
//! Labels are frames; detections are windows. An entry at frame `f` is
//! expected to spike at window `f - T` (the first window whose last frame
//! sees it), an exit at frame `g` at window `g`.

use std::io::Write;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::detection::{ChangeSeries, DetectionEvent, DetectorConfig};
use crate::error::{parameter, DmdError, Result};
use crate::parallel;
use crate::video_io::{GroundTruthLabel, LabelKind};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalConfig {
    /// Matching tolerance in windows.
    pub d_star: usize,
    /// Weight of a missed event relative to a false alarm.
    pub c: f64,
    /// ROC tolerance band in windows (half a second of frames).
    pub half_second_tol: usize,
    pub threshold_grid: Vec<f64>,
    /// `T`, for mapping entry labels to windows.
    pub window_len: usize,
    pub cooldown: usize,
    /// Whether scoring and cross-validation run with consecutive-activation
    /// suppression. ROC sweeps always run without it.
    pub suppression: bool,
}

impl EvalConfig {
    pub const DEFAULT_D_STAR: usize = 30;
    pub const DEFAULT_C: f64 = 100.0;

    /// Defaults for window length `T` at `fps`, with the cross-validation grid.
    pub fn new(window_len: usize, fps: f64) -> Self {
        Self {
            d_star: Self::DEFAULT_D_STAR,
            c: Self::DEFAULT_C,
            half_second_tol: (fps / 2.0).round() as usize,
            threshold_grid: linear_grid(0.0, 1.0, 1000),
            window_len,
            cooldown: DetectorConfig::DEFAULT_COOLDOWN,
            suppression: true,
        }
    }

    pub fn with_grid(mut self, grid: Vec<f64>) -> Self {
        self.threshold_grid = grid;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.c > 0.0) {
            return Err(parameter("false-negative weight c must be positive"));
        }
        if self.threshold_grid.is_empty() {
            return Err(parameter("threshold grid is empty"));
        }
        if self.threshold_grid.windows(2).any(|p| !(p[0] <= p[1])) {
            return Err(parameter("threshold grid must be sorted"));
        }
        Ok(())
    }
}

/// `n` evenly spaced thresholds in `(min, max]`.
pub fn linear_grid(min: f64, max: f64, n: usize) -> Vec<f64> {
    let step = (max - min) / n as f64;
    (1..=n).map(|i| min + step * i as f64).collect()
}

/// `n` log-spaced thresholds from `min` to `max` inclusive.
pub fn log_grid(min: f64, max: f64, n: usize) -> Vec<f64> {
    let (a, b) = (min.log10(), max.log10());
    if n == 1 {
        return vec![min];
    }
    (0..n)
        .map(|i| 10f64.powf(a + (b - a) * i as f64 / (n - 1) as f64))
        .collect()
}

/// Every distinct finite statistic in `series`, ascending, plus `+inf`.
/// Sweeping this grid visits every distinct flagged set.
pub fn exact_grid(series: &ChangeSeries) -> Vec<f64> {
    let mut values: Vec<f64> = series
        .changes
        .iter()
        .map(|c| c.1.as_f64())
        .filter(|v| v.is_finite() && *v > 0.0)
        .collect();
    values.sort_by(f64::total_cmp);
    values.dedup();
    values.push(f64::INFINITY);
    values
}

/// Expected spike window of a label.
pub fn label_target(label: &GroundTruthLabel, window_len: usize) -> Option<usize> {
    match label.kind {
        LabelKind::Entry => label.frame.checked_sub(window_len),
        LabelKind::Exit => Some(label.frame),
    }
}

/// Targets of `labels` that fall on a flaggable window of `series`.
pub fn label_targets(labels: &[GroundTruthLabel], series: &ChangeSeries, window_len: usize) -> Vec<usize> {
    let (Some(first), Some(last)) = (series.changes.first(), series.changes.last()) else {
        return Vec::new();
    };
    let mut out: Vec<usize> = labels
        .iter()
        .filter_map(|l| label_target(l, window_len))
        .filter(|&t| t >= first.0 && t <= last.0)
        .collect();
    out.sort_unstable();
    out
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionCounts {
    pub tp: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
    pub tn: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Score {
    pub counts: ConfusionCounts,
    /// `FP + c * FN`.
    pub error: f64,
}

/// Greedy nearest-first one-to-one matching within `d_star`. Returns
/// `(detection, target)` index pairs.
pub fn match_detections(detections: &[usize], targets: &[usize], d_star: usize) -> Vec<(usize, usize)> {
    let mut pairs: Vec<(usize, usize, usize)> = Vec::new();
    for (i, &d) in detections.iter().enumerate() {
        for (j, &t) in targets.iter().enumerate() {
            let dist = d.abs_diff(t);
            if dist <= d_star {
                pairs.push((dist, j, i));
            }
        }
    }
    pairs.sort_unstable();
    let mut used_d = vec![false; detections.len()];
    let mut used_t = vec![false; targets.len()];
    let mut out = Vec::new();
    for (_, j, i) in pairs {
        if !used_d[i] && !used_t[j] {
            used_d[i] = true;
            used_t[j] = true;
            out.push((i, j));
        }
    }
    out
}

/// Scores flagged windows against label targets. `flaggable` is the number
/// of windows that could have been flagged.
pub fn score_windows(detections: &[usize], targets: &[usize], flaggable: usize, cfg: &EvalConfig) -> Score {
    let tp = match_detections(detections, targets, cfg.d_star).len();
    let fp = detections.len() - tp;
    let fn_ = targets.len() - tp;
    let negatives = flaggable.saturating_sub(tp);
    let tn = negatives.saturating_sub(fp);
    Score {
        counts: ConfusionCounts { tp, fp, fn_, tn },
        error: fp as f64 + cfg.c * fn_ as f64,
    }
}

/// Scores detector events for one video.
pub fn score(
    events: &[DetectionEvent],
    labels: &[GroundTruthLabel],
    series: &ChangeSeries,
    cfg: &EvalConfig,
) -> Score {
    let detections: Vec<usize> = events.iter().map(|e| e.window_index).collect();
    let targets = label_targets(labels, series, cfg.window_len);
    score_windows(&detections, &targets, series.len(), cfg)
}

/// A video reduced to what evaluation needs.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalVideo {
    pub series: ChangeSeries,
    pub labels: Vec<GroundTruthLabel>,
}

impl EvalVideo {
    pub fn error_at(&self, threshold: f64, cfg: &EvalConfig) -> f64 {
        let flagged = self.series.flagged(threshold, cfg.cooldown, cfg.suppression);
        let targets = label_targets(&self.labels, &self.series, cfg.window_len);
        score_windows(&flagged, &targets, self.series.len(), cfg).error
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RocPoint {
    pub threshold: f64,
    pub tpr: f64,
    pub fpr: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RocCurve {
    /// In grid (threshold) order.
    pub points: Vec<RocPoint>,
    pub auc: f64,
}

/// Trapezoid area under `(fpr, tpr)` anchored at `(0,0)` and `(1,1)`.
pub fn auc(points: &[RocPoint]) -> f64 {
    let mut xy: Vec<(f64, f64)> = points.iter().map(|p| (p.fpr, p.tpr)).collect();
    xy.push((0.0, 0.0));
    xy.push((1.0, 1.0));
    xy.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
    xy.windows(2)
        .map(|w| (w[1].0 - w[0].0) * (w[1].1 + w[0].1) / 2.0)
        .sum()
}

/// ROC over `grid` with suppression off. TPR counts labeled events with any
/// flagged window inside `target ± half_second_tol`; FPR counts flagged
/// windows among those outside every such band.
pub fn roc_curve_on(
    series: &ChangeSeries,
    labels: &[GroundTruthLabel],
    grid: &[f64],
    cfg: &EvalConfig,
) -> Result<RocCurve> {
    let targets = label_targets(labels, series, cfg.window_len);
    if targets.is_empty() {
        return Err(DmdError::Evaluation(
            "ROC needs at least one labeled event inside the detectable range".into(),
        ));
    }
    let tol = cfg.half_second_tol;
    let in_band = |w: usize, t: usize| w.abs_diff(t) <= tol;
    let bands: Vec<Vec<_>> = targets
        .iter()
        .map(|&t| {
            series
                .changes
                .iter()
                .filter(|c| in_band(c.0, t))
                .map(|c| c.1)
                .collect()
        })
        .collect();
    let negatives: Vec<_> = series
        .changes
        .iter()
        .filter(|c| !targets.iter().any(|&t| in_band(c.0, t)))
        .map(|c| c.1)
        .collect();
    let points = parallel::map_slice(grid, |&threshold| {
        let hits = bands
            .iter()
            .filter(|band| band.iter().any(|c| c.exceeds(threshold)))
            .count();
        let false_alarms = negatives.iter().filter(|c| c.exceeds(threshold)).count();
        RocPoint {
            threshold,
            tpr: hits as f64 / targets.len() as f64,
            fpr: if negatives.is_empty() {
                0.0
            } else {
                false_alarms as f64 / negatives.len() as f64
            },
        }
    });
    let auc = auc(&points);
    Ok(RocCurve { points, auc })
}

/// ROC on the standard log grid `1e-10..1e10` (1000 points).
pub fn roc_curve(series: &ChangeSeries, labels: &[GroundTruthLabel], cfg: &EvalConfig) -> Result<RocCurve> {
    roc_curve_on(series, labels, &roc_grid(), cfg)
}

pub fn roc_grid() -> Vec<f64> {
    log_grid(1e-10, 1e10, 1000)
}

/// Per-video curves and their threshold-wise average.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusRoc {
    pub per_video: Vec<RocCurve>,
    pub mean: Vec<RocPoint>,
    pub mean_auc: f64,
}

pub fn corpus_roc(corpus: &[EvalVideo], grid: &[f64], cfg: &EvalConfig) -> Result<CorpusRoc> {
    if corpus.is_empty() {
        return Err(parameter("empty corpus"));
    }
    let per_video = corpus
        .iter()
        .map(|v| roc_curve_on(&v.series, &v.labels, grid, cfg))
        .collect::<Result<Vec<_>>>()?;
    let n = per_video.len() as f64;
    let mean = (0..grid.len())
        .map(|i| RocPoint {
            threshold: grid[i],
            tpr: per_video.iter().map(|c| c.points[i].tpr).sum::<f64>() / n,
            fpr: per_video.iter().map(|c| c.points[i].fpr).sum::<f64>() / n,
        })
        .collect();
    let mean_auc = per_video.iter().map(|c| c.auc).sum::<f64>() / n;
    Ok(CorpusRoc {
        per_video,
        mean,
        mean_auc,
    })
}

pub fn write_roc_csv<W: Write>(mut out: W, points: &[RocPoint]) -> Result<()> {
    writeln!(out, "threshold,fpr,tpr")?;
    for p in points {
        writeln!(out, "{:e},{},{}", p.threshold, p.fpr, p.tpr)?;
    }
    Ok(())
}

/// Mean error over `corpus` at every threshold of `grid`.
pub fn error_curve(corpus: &[EvalVideo], grid: &[f64], cfg: &EvalConfig) -> Result<Vec<(f64, f64)>> {
    if corpus.is_empty() {
        return Err(parameter("empty corpus"));
    }
    let refs: Vec<&EvalVideo> = corpus.iter().collect();
    Ok(mean_errors(&refs, grid, cfg))
}

fn mean_errors(videos: &[&EvalVideo], grid: &[f64], cfg: &EvalConfig) -> Vec<(f64, f64)> {
    parallel::map_slice(grid, |&threshold| {
        // summed in corpus order for reproducibility
        let total: f64 = videos.iter().map(|v| v.error_at(threshold, cfg)).sum();
        (threshold, total / videos.len() as f64)
    })
}

pub fn write_error_csv<W: Write>(mut out: W, curve: &[(f64, f64)]) -> Result<()> {
    writeln!(out, "threshold,mean_error")?;
    for (t, e) in curve {
        writeln!(out, "{t},{e}")?;
    }
    Ok(())
}

/// First grid point with the smallest value.
fn argmin(curve: &[(f64, f64)]) -> (f64, f64) {
    curve
        .iter()
        .copied()
        .fold(None, |best: Option<(f64, f64)>, p| match best {
            Some(b) if b.1 <= p.1 => Some(b),
            _ => Some(p),
        })
        .expect("non-empty curve")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldResult {
    pub train: Vec<usize>,
    pub validation: Vec<usize>,
    pub threshold: f64,
    pub train_error: f64,
    pub validation_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvResult {
    pub folds: Vec<FoldResult>,
    /// Fold threshold with the smallest validation error.
    pub threshold: f64,
    pub seed: u64,
}

/// Modified k-fold cross-validation: each fold picks the grid threshold with
/// the lowest mean training error, is scored on its held-out videos, and the
/// fold threshold with the lowest validation error wins.
pub fn kfold_cv(corpus: &[EvalVideo], k: usize, seed: u64, cfg: &EvalConfig) -> Result<CvResult> {
    cfg.validate()?;
    if k < 2 {
        return Err(parameter("need at least 2 folds"));
    }
    if corpus.len() < k {
        return Err(parameter(format!("{} videos cannot fill {k} folds", corpus.len())));
    }
    let mut order: Vec<usize> = (0..corpus.len()).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let n = corpus.len();
    let mut folds = Vec::with_capacity(k);
    for i in 0..k {
        let (lo, hi) = (i * n / k, (i + 1) * n / k);
        let validation: Vec<usize> = order[lo..hi].to_vec();
        let train: Vec<usize> = order[..lo].iter().chain(&order[hi..]).copied().collect();
        let train_videos: Vec<&EvalVideo> = train.iter().map(|&j| &corpus[j]).collect();
        let (threshold, train_error) = argmin(&mean_errors(&train_videos, &cfg.threshold_grid, cfg));
        let validation_error = validation
            .iter()
            .map(|&j| corpus[j].error_at(threshold, cfg))
            .sum::<f64>()
            / validation.len() as f64;
        folds.push(FoldResult {
            train,
            validation,
            threshold,
            train_error,
            validation_error,
        });
    }
    let best = folds
        .iter()
        .fold(&folds[0], |b, f| if f.validation_error < b.validation_error { f } else { b });
    Ok(CvResult {
        threshold: best.threshold,
        folds,
        seed,
    })
}

/// Intersection over union pooled over frames of `(predicted, truth)` masks.
/// Two empty masks agree perfectly.
pub fn mask_iou<'a, I>(frames: I) -> f64
where
    I: IntoIterator<Item = (&'a [bool], &'a [bool])>,
{
    let (mut inter, mut union) = (0usize, 0usize);
    for (pred, truth) in frames {
        for (&a, &b) in pred.iter().zip(truth) {
            inter += usize::from(a && b);
            union += usize::from(a || b);
        }
    }
    if union == 0 {
        1.0
    } else {
        inter as f64 / union as f64
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::detection::RelativeChange;
    use proptest::prelude::*;

    #[test]
    fn iou_pools_frames() {
        let a = [true, true, false, false];
        let b = [true, false, true, false];
        let e = [false; 4];
        assert!((mask_iou([(&a[..], &b[..])]) - 1.0 / 3.0).abs() < 1e-15);
        // second frame adds one agreeing pixel: 2 / 4
        let c = [false, false, false, true];
        assert!((mask_iou([(&a[..], &b[..]), (&c[..], &c[..])]) - 0.5).abs() < 1e-15);
        assert_eq!(mask_iou([(&e[..], &e[..])]), 1.0);
    }

    fn entry(frame: usize) -> GroundTruthLabel {
        GroundTruthLabel { frame, kind: LabelKind::Entry }
    }

    fn exit(frame: usize) -> GroundTruthLabel {
        GroundTruthLabel { frame, kind: LabelKind::Exit }
    }

    fn cfg() -> EvalConfig {
        EvalConfig::new(80, 30.0)
    }

    fn series(values: &[f64]) -> ChangeSeries {
        ChangeSeries {
            changes: values
                .iter()
                .enumerate()
                .map(|(i, &v)| (i + 1, RelativeChange::Value(v)))
                .collect(),
        }
    }

    #[test]
    fn single_match_within_tolerance() {
        let s = score_windows(&[110], &[100], 300, &cfg());
        assert_eq!(s.counts, ConfusionCounts { tp: 1, fp: 0, fn_: 0, tn: 299 });
        assert_eq!(s.error, 0.0);
    }

    #[test]
    fn miss_costs_c() {
        let s = score_windows(&[], &[100], 300, &cfg());
        assert_eq!(s.counts.fn_, 1);
        assert_eq!(s.error, 100.0);
    }

    #[test]
    fn greedy_prefers_nearest() {
        // detection 50 is nearer to target 45, so 20 matches 10
        let m = match_detections(&[20, 50], &[10, 45], 30);
        assert_eq!(m.len(), 2);
        assert!(m.contains(&(1, 1)) && m.contains(&(0, 0)));
        // one detection cannot cover two targets
        assert_eq!(match_detections(&[30], &[20, 40], 30).len(), 1);
    }

    #[test]
    fn label_mapping() {
        assert_eq!(label_target(&entry(150), 80), Some(70));
        assert_eq!(label_target(&exit(300), 80), Some(300));
        assert_eq!(label_target(&entry(50), 80), None);
        let s = series(&[0.0; 200]);
        assert_eq!(label_targets(&[entry(150), exit(300), exit(120)], &s, 80), vec![70, 120]);
    }

    /// Maximum matching size by trying every assignment.
    fn brute_force_max_matching(dets: &[usize], targets: &[usize], d: usize) -> usize {
        fn go(i: usize, dets: &[usize], targets: &[usize], used: &mut Vec<bool>, d: usize) -> usize {
            if i == dets.len() {
                return 0;
            }
            let mut best = go(i + 1, dets, targets, used, d);
            for j in 0..targets.len() {
                if !used[j] && dets[i].abs_diff(targets[j]) <= d {
                    used[j] = true;
                    best = best.max(1 + go(i + 1, dets, targets, used, d));
                    used[j] = false;
                }
            }
            best
        }
        go(0, dets, targets, &mut vec![false; targets.len()], d)
    }

    #[test]
    fn three_event_sweep_matches_exhaustive_oracle() {
        // targets well separated relative to d*, as in labeled videos
        let targets = [40usize, 160, 300];
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for _ in 0..300 {
            use rand::Rng;
            let n = rng.random_range(0..6);
            let dets: Vec<usize> = (0..n).map(|_| rng.random_range(0..360)).collect();
            let s = score_windows(&dets, &targets, 360, &cfg());
            let best = brute_force_max_matching(&dets, &targets, 30);
            assert_eq!(s.counts.tp, best, "{dets:?}");
            assert_eq!(s.counts.fp, dets.len() - best);
            assert_eq!(s.counts.fn_, 3 - best);
        }
    }

    #[test]
    fn perfectly_separable_auc_is_one() {
        let mut v = vec![0.1; 300];
        v[99] = 5.0; // window 100
        v[249] = 3.0; // window 250
        let s = series(&v);
        let labels = [entry(180), exit(250)];
        let roc = roc_curve(&s, &labels, &cfg()).unwrap();
        assert!((roc.auc - 1.0).abs() < 1e-9, "{}", roc.auc);
    }

    #[test]
    fn roc_requires_positives() {
        let s = series(&[0.1; 50]);
        assert!(matches!(roc_curve(&s, &[], &cfg()), Err(DmdError::Evaluation(_))));
    }

    #[test]
    fn onset_and_static_in_roc() {
        let mut s = series(&[0.1; 200]);
        s.changes[99].1 = RelativeChange::Onset;
        s.changes[10].1 = RelativeChange::Static;
        let roc = roc_curve(&s, &[exit(100)], &cfg()).unwrap();
        assert!(roc.points.iter().all(|p| p.tpr == 1.0));
        assert!((roc.auc - 1.0).abs() < 1e-9);
    }

    #[test]
    fn shuffled_labels_give_chance_auc() {
        use rand::Rng;
        let mut aucs = Vec::new();
        let mut point_aucs = Vec::new();
        let mut point_cfg = cfg();
        point_cfg.half_second_tol = 0;
        for seed in 0..20u64 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let v: Vec<f64> = (0..2000).map(|_| rng.random::<f64>()).collect();
            let s = series(&v);
            // labels placed independently of the statistic
            let labels: Vec<_> = (0..20).map(|i| exit(50 + 95 * i + rng.random_range(0..40))).collect();
            aucs.push(roc_curve_on(&s, &labels, &exact_grid(&s), &cfg()).unwrap().auc);
            point_aucs.push(roc_curve_on(&s, &labels, &exact_grid(&s), &point_cfg).unwrap().auc);
        }
        let point_mean = point_aucs.iter().sum::<f64>() / 20.0;
        assert!((point_mean - 0.5).abs() < 0.1, "zero-tolerance mean {point_mean}");
        let mean = aucs.iter().sum::<f64>() / aucs.len() as f64;
        // any-hit within a band of 31 windows inflates the event-level TPR,
        // so compare against the analytic chance curve rather than 0.5
        // P(max of 31 uniforms >= x) = 1 - x^31, FPR = 1 - x
        let chance: f64 = {
            let n = 100_000;
            (0..n)
                .map(|i| {
                    let x = (i as f64 + 0.5) / n as f64;
                    (1.0 - x.powi(31)) / n as f64
                })
                .sum()
        };
        assert!((mean - chance).abs() < 0.1, "mean {mean}, chance {chance}");
    }

    #[test]
    fn cv_with_a_perfect_threshold() {
        let mut corpus = Vec::new();
        for i in 0..8 {
            let mut v = vec![0.05; 300];
            v[99 + i] = 0.9;
            corpus.push(EvalVideo { series: series(&v), labels: vec![exit(100 + i)] });
        }
        let r = kfold_cv(&corpus, 4, 3, &cfg()).unwrap();
        assert_eq!(r.folds.len(), 4);
        assert!(r.folds.iter().all(|f| f.validation_error == 0.0));
        let first = r.folds[0].threshold;
        assert!(r.folds.iter().all(|f| f.threshold == first));
        assert!(first > 0.05 && first <= 0.9);
        assert!(kfold_cv(&corpus[..3], 4, 3, &cfg()).is_err());
        assert_eq!(kfold_cv(&corpus, 4, 3, &cfg()).unwrap(), r);
    }

    #[test]
    fn error_at_infinity_is_c_times_events() {
        let v = EvalVideo { series: series(&[0.3; 300]), labels: vec![entry(150), exit(250)] };
        assert_eq!(v.error_at(f64::INFINITY, &cfg()), 200.0);
    }

    #[test]
    fn grids() {
        let g = linear_grid(0.0, 1.0, 1000);
        assert_eq!(g.len(), 1000);
        assert!((g[0] - 0.001).abs() < 1e-15 && g[999] == 1.0);
        let l = log_grid(1e-10, 1e10, 1000);
        assert!((l[0] - 1e-10).abs() < 1e-22 && (l[999] / 1e10 - 1.0).abs() < 1e-12);
        assert!(l.windows(2).all(|p| p[0] < p[1]));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]
        #[test]
        fn roc_rates_fall_with_threshold(values in prop::collection::vec(0.0f64..3.0, 60..200), t in 10usize..50) {
            let s = series(&values);
            let roc = roc_curve(&s, &[exit(t)], &cfg()).unwrap();
            for p in roc.points.windows(2) {
                prop_assert!(p[1].tpr <= p[0].tpr && p[1].fpr <= p[0].fpr);
            }
            prop_assert!((0.0..=1.0).contains(&roc.auc));
        }

        #[test]
        fn auc_invariant_under_monotone_maps(values in prop::collection::vec(0.001f64..3.0, 60..200), t in 10usize..50) {
            let s = series(&values);
            let mapped = ChangeSeries {
                changes: s.changes.iter().map(|&(w, c)| (w, RelativeChange::Value(c.as_f64().powi(3) * 7.0 + 0.5))).collect(),
            };
            let a = roc_curve_on(&s, &[exit(t)], &exact_grid(&s), &cfg()).unwrap().auc;
            let b = roc_curve_on(&mapped, &[exit(t)], &exact_grid(&mapped), &cfg()).unwrap().auc;
            prop_assert!((a - b).abs() < 1e-12);
        }

        #[test]
        fn error_non_increasing_in_d_star(dets in prop::collection::vec(0usize..400, 0..8), d in 0usize..55) {
            let targets = [50usize, 200, 330];
            let mut c1 = cfg();
            c1.d_star = d;
            let mut c2 = cfg();
            c2.d_star = d + 5;
            prop_assert!(score_windows(&dets, &targets, 400, &c2).error <= score_windows(&dets, &targets, 400, &c1).error);
        }
    }
}
