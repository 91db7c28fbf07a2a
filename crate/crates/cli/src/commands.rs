//! Subcommand implementations.

use std::fs::{self, File};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{bail, Context, Result};
use clap::ValueEnum;
use serde::Serialize;
use serde_json::Value;

use dmdwatch::background::{separate_window, SeparationConfig};
use dmdwatch::detection::{ChangeSeries, DetectionEvent, DetectorConfig};
use dmdwatch::dmd::CompressionOperator;
use dmdwatch::eval::{
    corpus_roc, error_curve, kfold_cv, linear_grid, roc_grid, write_error_csv, write_roc_csv, CvResult, EvalConfig,
    EvalVideo,
};
use dmdwatch::pipeline::{detect_batch, StreamingDetector};
use dmdwatch::synth::{
    blob_scenario, crossing_scenario, generate_synthetic, static_scenario, swaying_scenario, BackgroundKind,
    SyntheticScenario,
};
use dmdwatch::video_io::{
    encode_pgm, frame_file_name, load_frames, read_labels, write_frames, write_labels_file, DmdwWriter, FrameSource,
    VideoMeta,
};
use dmdwatch::window::spectrum_series;

use crate::manifest::{DetectorSettings, EvaluationSettings, RunManifest, SeparationSettings};
use crate::{FrameFormat, Preset, ScoreArgs, WindowArgs};

/// One detection event as a JSON line. An onset (zero to nonzero mean
/// modulus) has an infinite statistic, written as the string `"inf"`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EventRecord {
    pub window: usize,
    pub statistic: Value,
    pub entry_frame: usize,
    pub exit_frame: usize,
    pub timestamp: f64,
}

impl EventRecord {
    fn from_event(ev: &DetectionEvent, window_len: usize, fps: f64) -> Self {
        let s = ev.statistic.as_f64();
        let statistic = if s.is_finite() {
            Value::from(s)
        } else {
            Value::from("inf")
        };
        Self {
            window: ev.window_index,
            statistic,
            entry_frame: ev.entry_frame,
            exit_frame: ev.exit_frame,
            timestamp: ev
                .timestamp
                .unwrap_or_else(|| dmdwatch::pipeline::event_timestamp(ev.window_index, window_len, fps)),
        }
    }
}

/// Writes each event to stdout as soon as it exists, and to a file if asked.
struct EventSink {
    stdout: std::io::Stdout,
    file: Option<BufWriter<File>>,
    count: usize,
}

impl EventSink {
    fn new(file: Option<&Path>) -> Result<Self> {
        let file = match file {
            Some(p) => Some(BufWriter::new(
                File::create(p).with_context(|| format!("creating {}", p.display()))?,
            )),
            None => None,
        };
        Ok(Self {
            stdout: std::io::stdout(),
            file,
            count: 0,
        })
    }

    fn emit(&mut self, record: &EventRecord) -> Result<()> {
        let line = serde_json::to_string(record)?;
        let mut out = self.stdout.lock();
        writeln!(out, "{line}")?;
        out.flush()?;
        if let Some(f) = &mut self.file {
            writeln!(f, "{line}")?;
        }
        self.count += 1;
        Ok(())
    }

    fn finish(self) -> Result<usize> {
        if let Some(mut f) = self.file {
            f.flush()?;
        }
        Ok(self.count)
    }
}

fn operator(window: &WindowArgs, pixels: usize) -> Result<CompressionOperator> {
    Ok(CompressionOperator::generate(window.sketch, pixels, window.seed)?)
}

fn check_fps(fps: f64) -> Result<()> {
    if !(fps.is_finite() && fps > 0.0) {
        bail!("--fps must be positive, got {fps}");
    }
    Ok(())
}

fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))
}

pub struct DetectOptions {
    pub input: String,
    pub threshold: f64,
    pub cooldown: usize,
    pub suppression: bool,
    pub batch: bool,
    pub out: Option<PathBuf>,
    pub window: WindowArgs,
}

pub fn detect(o: &DetectOptions) -> Result<()> {
    let wcfg = o.window.config();
    wcfg.validate()?;
    check_fps(o.window.fps)?;
    let det = DetectorConfig::new(o.threshold, wcfg.window_len)?
        .with_cooldown(o.cooldown)
        .with_suppression(o.suppression);
    det.validate()?;
    if let Some(dir) = &o.out {
        create_dir(dir)?;
    }
    let events_path = o.out.as_ref().map(|d| d.join("events.jsonl"));
    let mut sink = EventSink::new(events_path.as_deref())?;
    let fps = o.window.fps;
    let windows = if o.batch {
        let (_, frames) = load_frames(&o.input, fps).with_context(|| format!("reading {}", o.input))?;
        let op = operator(&o.window, frames.pixels())?;
        let result = detect_batch(&frames, &wcfg, &det, &op, fps)?;
        for ev in &result.events {
            sink.emit(&EventRecord::from_event(ev, wcfg.window_len, fps))?;
        }
        result.spectra.len()
    } else {
        let mut source = FrameSource::open(&o.input).with_context(|| format!("opening {}", o.input))?;
        let mut detector: Option<StreamingDetector> = None;
        while let Some(frame) = source.next_frame().with_context(|| format!("reading {}", o.input))? {
            let d = match &mut detector {
                Some(d) => d,
                None => detector.insert(StreamingDetector::new(
                    wcfg,
                    det,
                    operator(&o.window, frame.pixels.len())?,
                    fps,
                )?),
            };
            if let Some(ev) = d.push_frame(&frame.pixels)?.event {
                sink.emit(&EventRecord::from_event(&ev, wcfg.window_len, fps))?;
            }
        }
        detector.map_or(0, |d| d.windows_seen())
    };
    let count = sink.finish()?;
    if windows == 0 {
        log::warn!("input ended before the first window of {} frames", wcfg.window_len + 1);
    }
    log::info!("{windows} windows, {count} events");
    if let Some(dir) = &o.out {
        let mut m = RunManifest::new("detect", vec![o.input.clone()], wcfg, fps, o.window.seed);
        m.detector = Some(DetectorSettings {
            threshold: o.threshold,
            cooldown: o.cooldown,
            suppression: o.suppression,
        });
        m.write(dir)?;
    }
    Ok(())
}

pub struct SeparateOptions {
    pub input: String,
    pub window_index: Option<usize>,
    pub events: Option<PathBuf>,
    pub event: usize,
    pub epsilon: f64,
    pub canonical_l: bool,
    pub out: PathBuf,
    pub window: WindowArgs,
}

/// `window` field of the `index`-th record of an events file.
fn event_window(path: &Path, index: usize) -> Result<usize> {
    let file = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    let line = BufReader::new(file)
        .lines()
        .filter(|l| l.as_ref().map_or(true, |s| !s.trim().is_empty()))
        .nth(index)
        .with_context(|| format!("{} has no event {index}", path.display()))??;
    let record: Value = serde_json::from_str(&line).with_context(|| format!("parsing event {index}"))?;
    record["window"]
        .as_u64()
        .map(|w| w as usize)
        .with_context(|| format!("event {index} has no window index"))
}

#[derive(Serialize)]
struct ModeReport {
    window: usize,
    background_modes: Vec<usize>,
    foreground_modes: Vec<usize>,
    /// `|omega| h` per mode, the quantity compared with epsilon.
    per_frame_moduli: Vec<f64>,
    omegas: Vec<(f64, f64)>,
}

#[derive(Serialize)]
struct SeparationReport<'a> {
    modes: &'a ModeReport,
    mode_condition_number: f64,
}

fn write_pgm(path: &Path, pixels: &[f64], width: usize, height: usize) -> Result<()> {
    fs::write(path, encode_pgm(pixels, width, height)?).with_context(|| format!("writing {}", path.display()))
}

pub fn separate(o: &SeparateOptions) -> Result<()> {
    let wcfg = o.window.config();
    wcfg.validate()?;
    check_fps(o.window.fps)?;
    let k = match (o.window_index, &o.events) {
        (Some(k), _) => k,
        (None, Some(path)) => event_window(path, o.event)?,
        (None, None) => bail!("give --window or --events"),
    };
    let (meta, frames) = load_frames(&o.input, o.window.fps).with_context(|| format!("reading {}", o.input))?;
    let op = operator(&o.window, frames.pixels())?;
    let mut cfg = SeparationConfig {
        epsilon: o.epsilon,
        ..SeparationConfig::for_window(wcfg.window_len)
    };
    if o.canonical_l {
        cfg = cfg.canonical();
    }
    let sep = separate_window(&frames, k, &wcfg, &op, meta.timestep(), &cfg)?;
    let (l_dir, s_dir) = (o.out.join("L"), o.out.join("S"));
    create_dir(&l_dir)?;
    create_dir(&s_dir)?;
    for (n, f) in sep.frames.iter().enumerate() {
        let name = frame_file_name(k + n);
        write_pgm(&l_dir.join(&name), &f.background, meta.width, meta.height)?;
        write_pgm(&s_dir.join(&name), &f.foreground, meta.width, meta.height)?;
    }
    let h = sep.spectrum.timestep();
    let modes = ModeReport {
        window: k,
        background_modes: sep.background_modes.clone(),
        foreground_modes: sep.foreground_modes.clone(),
        per_frame_moduli: sep.spectrum.moduli().iter().map(|m| m * h).collect(),
        omegas: sep.spectrum.omegas().iter().map(|w| (w.re, w.im)).collect(),
    };
    let report = SeparationReport {
        modes: &modes,
        mode_condition_number: sep.modes.condition_number(),
    };
    let mut text = serde_json::to_string_pretty(&report)?;
    text.push('\n');
    fs::write(o.out.join("modes.json"), text)?;
    let mut m = RunManifest::new("separate", vec![o.input.clone()], wcfg, o.window.fps, o.window.seed);
    m.separation = Some(SeparationSettings { window: k, config: cfg });
    m.write(&o.out)
}

/// Videos of a corpus directory, sorted by name: frame directories and
/// single-file videos (`.dmdw`, `.pgm`, `.ppm`, `.pnm`).
fn list_corpus(dir: &Path) -> Result<Vec<(String, PathBuf)>> {
    let mut out = Vec::new();
    for entry in fs::read_dir(dir).with_context(|| format!("listing {}", dir.display()))? {
        let path = entry?.path();
        let video_file = path
            .extension()
            .and_then(|e| e.to_str())
            .is_some_and(|e| matches!(e.to_ascii_lowercase().as_str(), "dmdw" | "pgm" | "ppm" | "pnm"));
        let name = if path.is_dir() {
            path.file_name()
        } else if video_file {
            path.file_stem()
        } else {
            None
        };
        if let Some(name) = name.and_then(|n| n.to_str()) {
            out.push((name.to_string(), path.clone()));
        }
    }
    out.sort();
    if out.is_empty() {
        bail!("{} contains no videos", dir.display());
    }
    Ok(out)
}

fn load_corpus(corpus: &Path, labels: &Path, window: &WindowArgs) -> Result<(Vec<String>, Vec<EvalVideo>)> {
    let wcfg = window.config();
    wcfg.validate()?;
    check_fps(window.fps)?;
    let mut names = Vec::new();
    let mut videos = Vec::new();
    for (name, path) in list_corpus(corpus)? {
        let path_str = path.to_string_lossy().into_owned();
        let (_, frames) = load_frames(&path_str, window.fps).with_context(|| format!("reading {path_str}"))?;
        let op = operator(window, frames.pixels())?;
        let spectra = spectrum_series(&frames, &wcfg, &op).with_context(|| format!("fitting {name}"))?;
        let label_path = labels.join(format!("{name}.csv"));
        let labels = read_labels(&label_path).with_context(|| format!("reading {}", label_path.display()))?;
        names.push(name);
        videos.push(EvalVideo {
            series: ChangeSeries::from_spectra(&spectra),
            labels,
        });
    }
    Ok((names, videos))
}

fn eval_config(window: &WindowArgs, score: &ScoreArgs) -> EvalConfig {
    let mut cfg = EvalConfig::new(window.window_len, window.fps);
    cfg.d_star = score.d_star;
    cfg.c = score.c;
    cfg.cooldown = score.cooldown;
    cfg
}

fn corpus_inputs(corpus: &Path, labels: &Path) -> Vec<String> {
    vec![corpus.display().to_string(), labels.display().to_string()]
}

#[derive(Serialize)]
struct AucReport {
    videos: Vec<(String, f64)>,
    mean_auc: f64,
}

pub fn roc(corpus: &Path, labels: &Path, out: &Path, window: &WindowArgs, score: &ScoreArgs) -> Result<()> {
    let (names, videos) = load_corpus(corpus, labels, window)?;
    let cfg = eval_config(window, score);
    cfg.validate()?;
    let result = corpus_roc(&videos, &roc_grid(), &cfg)?;
    create_dir(out)?;
    write_roc_csv(File::create(out.join("roc.csv"))?, &result.mean)?;
    for (name, curve) in names.iter().zip(&result.per_video) {
        write_roc_csv(File::create(out.join(format!("roc_{name}.csv")))?, &curve.points)?;
    }
    let report = AucReport {
        videos: names.iter().cloned().zip(result.per_video.iter().map(|c| c.auc)).collect(),
        mean_auc: result.mean_auc,
    };
    let mut text = serde_json::to_string_pretty(&report)?;
    text.push('\n');
    fs::write(out.join("auc.json"), text)?;
    println!("mean AUC {:.6} over {} videos", result.mean_auc, videos.len());
    let mut m = RunManifest::new("roc", corpus_inputs(corpus, labels), window.config(), window.fps, window.seed);
    m.evaluation = Some(EvaluationSettings {
        d_star: cfg.d_star,
        c: cfg.c,
        half_second_tol: cfg.half_second_tol,
        cooldown: cfg.cooldown,
        suppression: false,
        grid: None,
        folds: None,
        cv_seed: None,
    });
    m.write(out)
}

pub struct CvOptions {
    pub corpus: PathBuf,
    pub labels: PathBuf,
    pub k: usize,
    pub grid: (f64, f64, usize),
    pub cv_seed: u64,
    pub suppression: bool,
    pub out: PathBuf,
    pub window: WindowArgs,
    pub score: ScoreArgs,
}

#[derive(Serialize)]
struct CvReport<'a> {
    videos: &'a [String],
    #[serde(flatten)]
    result: &'a CvResult,
}

pub fn cv(o: &CvOptions) -> Result<()> {
    let (min, max, n) = o.grid;
    if min.partial_cmp(&max) != Some(std::cmp::Ordering::Less) || n == 0 {
        bail!("threshold grid needs --grid-min < --grid-max and --grid-n > 0");
    }
    let (names, videos) = load_corpus(&o.corpus, &o.labels, &o.window)?;
    let mut cfg = eval_config(&o.window, &o.score).with_grid(linear_grid(min, max, n));
    cfg.suppression = o.suppression;
    cfg.validate()?;
    let result = kfold_cv(&videos, o.k, o.cv_seed, &cfg)?;
    let curve = error_curve(&videos, &cfg.threshold_grid, &cfg)?;
    create_dir(&o.out)?;
    let mut text = serde_json::to_string_pretty(&CvReport {
        videos: &names,
        result: &result,
    })?;
    text.push('\n');
    fs::write(o.out.join("cv.json"), text)?;
    write_error_csv(File::create(o.out.join("error_curve.csv"))?, &curve)?;
    println!("selected threshold {}", result.threshold);
    let mut m = RunManifest::new(
        "cv",
        corpus_inputs(&o.corpus, &o.labels),
        o.window.config(),
        o.window.fps,
        o.window.seed,
    );
    m.evaluation = Some(EvaluationSettings {
        d_star: cfg.d_star,
        c: cfg.c,
        half_second_tol: cfg.half_second_tol,
        cooldown: cfg.cooldown,
        suppression: cfg.suppression,
        grid: Some(o.grid),
        folds: Some(o.k),
        cv_seed: Some(o.cv_seed),
    });
    m.write(&o.out)
}

pub struct SynthOptions {
    pub scenario: Option<PathBuf>,
    pub preset: Option<Preset>,
    pub index: usize,
    pub preset_seed: u64,
    pub count: Option<usize>,
    pub format: FrameFormat,
    pub out: PathBuf,
}

fn preset_scenario(preset: Preset, i: usize, seed: u64) -> SyntheticScenario {
    match preset {
        Preset::Blob => blob_scenario(i, seed),
        Preset::Static => static_scenario(i, seed),
        Preset::Swaying => swaying_scenario(i, seed),
        Preset::Crossing => crossing_scenario(i, seed),
    }
}

/// Renders `scn` to `video` (a frame directory, or a `.dmdw` file path) and
/// its labels to `labels`.
fn render(scn: &SyntheticScenario, video: &Path, labels: &Path, format: FrameFormat) -> Result<()> {
    let v = generate_synthetic(scn)?;
    match format {
        FrameFormat::Pgm => {
            let meta = VideoMeta {
                width: scn.width,
                height: scn.height,
                fps: scn.fps,
                frame_count: scn.frame_count,
            };
            write_frames(&v.frames, video, &meta)?;
        }
        FrameFormat::Dmdw => {
            let file = File::create(video).with_context(|| format!("creating {}", video.display()))?;
            let mut w = DmdwWriter::new(BufWriter::new(file));
            for n in 0..v.frames.frame_count() {
                w.write_frame(v.frames.frame(n), scn.width, scn.height)?;
            }
            w.into_inner()?.flush()?;
        }
    }
    write_labels_file(labels, &v.labels)?;
    Ok(())
}

pub fn synth(o: &SynthOptions) -> Result<()> {
    create_dir(&o.out)?;
    let ext = |name: &str| match o.format {
        FrameFormat::Pgm => name.to_string(),
        FrameFormat::Dmdw => format!("{name}.dmdw"),
    };
    let (inputs, scenario) = match (&o.scenario, o.preset, o.count) {
        (_, Some(preset), Some(count)) => {
            let tag = preset.to_possible_value().expect("named preset").get_name().to_string();
            let (videos, labels) = (o.out.join("videos"), o.out.join("labels"));
            create_dir(&videos)?;
            create_dir(&labels)?;
            for i in o.index..o.index + count {
                let name = format!("{tag}_{i:03}");
                let scn = preset_scenario(preset, i, o.preset_seed);
                render(&scn, &videos.join(ext(&name)), &labels.join(format!("{name}.csv")), o.format)?;
            }
            (vec![format!("preset:{tag}[{}..{}]@{}", o.index, o.index + count, o.preset_seed)], None)
        }
        (Some(path), _, _) => {
            let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            let scn: SyntheticScenario =
                serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
            (vec![path.display().to_string()], Some(scn))
        }
        (None, Some(preset), None) => {
            let tag = preset.to_possible_value().expect("named preset").get_name().to_string();
            (
                vec![format!("preset:{tag}[{}]@{}", o.index, o.preset_seed)],
                Some(preset_scenario(preset, o.index, o.preset_seed)),
            )
        }
        (None, None, _) => bail!("give --scenario or --preset"),
    };
    let fps = scenario.as_ref().map_or(30.0, |s| s.fps);
    if let Some(scn) = &scenario {
        let video = match o.format {
            FrameFormat::Pgm => o.out.clone(),
            FrameFormat::Dmdw => o.out.join("video.dmdw"),
        };
        render(scn, &video, &o.out.join("labels.csv"), o.format)?;
        let mut text = serde_json::to_string_pretty(scn)?;
        text.push('\n');
        fs::write(o.out.join("scenario.json"), text)?;
    }
    let mut m = RunManifest::new("synth", inputs, dmdwatch::window::WindowConfig::default(), fps, 0);
    m.scenario = scenario;
    m.write(&o.out)
}

#[derive(Serialize)]
struct BenchReport {
    width: usize,
    height: usize,
    window_len: usize,
    rank: usize,
    sketch_dim: usize,
    windows: usize,
    parallel: bool,
    mean_ms: f64,
    p50_ms: f64,
    p95_ms: f64,
    max_ms: f64,
    windows_per_second: f64,
}

pub fn bench(width: usize, height: usize, windows: usize, out: Option<&Path>, window: &WindowArgs) -> Result<()> {
    if windows == 0 {
        bail!("--windows must be at least 1");
    }
    let wcfg = window.config();
    wcfg.validate()?;
    check_fps(window.fps)?;
    let warm = wcfg.window_len + 1;
    let scn = SyntheticScenario {
        width,
        height,
        frame_count: warm + windows,
        fps: window.fps,
        background: BackgroundKind::Textured { contrast: 0.15 },
        blob: None,
        drift: 0.0,
        illumination: 0.0,
        noise: 0.0,
        seed: window.seed,
    };
    let frames = generate_synthetic(&scn)?.frames;
    let det = DetectorConfig::new(0.5, wcfg.window_len)?;
    let wcfg = dmdwatch::window::WindowConfig { stride: 1, ..wcfg };
    let mut d = StreamingDetector::new(wcfg, det, operator(window, width * height)?, window.fps)?;
    for n in 0..warm {
        d.push_frame(frames.frame(n))?;
    }
    let mut lat = Vec::with_capacity(windows);
    let start = Instant::now();
    for n in warm..warm + windows {
        let t = Instant::now();
        std::hint::black_box(d.push_frame(frames.frame(n))?);
        lat.push(t.elapsed().as_secs_f64() * 1e3);
    }
    let total = start.elapsed().as_secs_f64();
    lat.sort_by(f64::total_cmp);
    let pct = |q: f64| lat[((lat.len() - 1) as f64 * q).round() as usize];
    let report = BenchReport {
        width,
        height,
        window_len: wcfg.window_len,
        rank: wcfg.rank,
        sketch_dim: wcfg.sketch_dim,
        windows,
        parallel: dmdwatch::parallel::is_parallel(),
        mean_ms: lat.iter().sum::<f64>() / lat.len() as f64,
        p50_ms: pct(0.5),
        p95_ms: pct(0.95),
        max_ms: lat[lat.len() - 1],
        windows_per_second: windows as f64 / total,
    };
    let text = serde_json::to_string_pretty(&report)?;
    println!("{text}");
    if let Some(dir) = out {
        create_dir(dir)?;
        fs::write(dir.join("bench.json"), format!("{text}\n"))?;
        RunManifest::new("bench", vec![format!("synthetic {width}x{height}")], wcfg, window.fps, window.seed).write(dir)?;
    }
    Ok(())
}
