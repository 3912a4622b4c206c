use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use i2s_core::assets::{
    decode_image, encode_png, render_overlay, AssetError, AssetStore, BackgroundSample, HttpUploader, LocalDirUploader,
    Uploader,
};
use i2s_core::config::PipelineConfig;
use i2s_core::eval::{aggregate, evaluate_run, EvalError, RunMetrics, StageTimings};
use i2s_core::extractor::{
    extract_layout_from_image, Backend, BackendError, ExtractCache, ExtractError, ExtractRequest, ExtractionResult,
    FixtureBackend, HttpBackend, BACKEND_API_KEY_ENV, OVERLAY_FILE, VALIDATED_FILE,
};
use i2s_core::merge::merge_adjacent_text;
use i2s_core::pipeline::{build_slide, PipelineError};
use i2s_core::schema::{parse_layout_value, postprocess_layout, Layout};
use i2s_core::slides::{execute_batch, BuildOptions, ExecuteOptions, GoogleSlidesService, SLIDES_TOKEN_ENV};
use image::RgbaImage;
use serde_json::Value;
use tracing::warn;

use crate::{exit, Failure};

pub const GT_FILE: &str = "gt_region.json";
pub const PRED_FILE: &str = "pred_region.json";
pub const TIMINGS_FILE: &str = "timings.json";
pub const REPORT_FILE: &str = "eval_report.json";
const DRY_RUN_PRESENTATION: &str = "DRY_RUN";

fn read(path: &Path) -> Result<Vec<u8>, Failure> {
    fs::read(path).map_err(|e| Failure::new(exit::IO, format!("cannot read {}: {e}", path.display())))
}

fn write(path: &Path, bytes: &[u8]) -> Result<(), Failure> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| Failure::new(exit::IO, format!("cannot create {}: {e}", dir.display())))?;
    }
    fs::write(path, bytes).map_err(|e| Failure::new(exit::IO, format!("cannot write {}: {e}", path.display())))
}

fn load_image(path: &Path) -> Result<(Vec<u8>, RgbaImage), Failure> {
    let bytes = read(path)?;
    let img = decode_image(&bytes)
        .map_err(|e| Failure::new(exit::IO, format!("cannot decode image {}: {e}", path.display())))?;
    Ok((bytes, img))
}

/// Strictly validate a layout file, then repair it. A `background_sample`
/// key, as written by extraction, is returned alongside.
fn load_layout(path: &Path) -> Result<(Layout, Option<BackgroundSample>), Failure> {
    let text = String::from_utf8(read(path)?)
        .map_err(|_| Failure::new(exit::VALIDATION, format!("{} is not UTF-8", path.display())))?;
    let value: Value = serde_json::from_str(&text)
        .map_err(|e| Failure::new(exit::VALIDATION, format!("{}: not valid JSON: {e}", path.display())))?;
    let layout = parse_layout_value(&value).map_err(|errors| {
        let list: Vec<String> = errors.iter().map(ToString::to_string).collect();
        Failure::new(exit::VALIDATION, format!("{} failed validation:\n  {}", path.display(), list.join("\n  ")))
    })?;
    let background = value.get("background_sample").and_then(|v| match serde_json::from_value(v.clone()) {
        Ok(bg) => Some(bg),
        Err(e) => {
            warn!("ignoring unusable background_sample in {}: {e}", path.display());
            None
        }
    });
    Ok((postprocess_layout(layout), background))
}

struct OfflineBackend;

impl Backend for OfflineBackend {
    fn complete(&self, _: &[u8], _: &str, _: &str) -> Result<String, BackendError> {
        Err(BackendError::Transport(
            "dry run makes no network calls; pass --layout, --fixture-dir or warm the cache".to_owned(),
        ))
    }
}

fn make_backend(cfg: &PipelineConfig, offline: bool) -> Result<Box<dyn Backend>, Failure> {
    if let Some(dir) = &cfg.fixture_dir {
        let b = FixtureBackend::from_dir(dir).map_err(|e| Failure::new(exit::IO, e.to_string()))?;
        return Ok(Box::new(b));
    }
    if offline {
        return Ok(Box::new(OfflineBackend));
    }
    match &cfg.backend_url {
        Some(url) => Ok(Box::new(HttpBackend::new(url, std::env::var(BACKEND_API_KEY_ENV).ok().filter(|k| !k.is_empty())))),
        None => Err(Failure::new(exit::SERVICE, "no backend configured: use --backend-url, I2S_BACKEND_URL or --fixture-dir")),
    }
}

fn extract_failure(e: ExtractError) -> Failure {
    let code = match &e {
        ExtractError::Backend(_) => exit::SERVICE,
        ExtractError::RetriesExhausted { .. } => exit::VALIDATION,
        ExtractError::Cache { .. } => exit::IO,
        ExtractError::Asset(_) => exit::GENERIC,
    };
    Failure::new(code, e.to_string())
}

fn run_extraction(cfg: &PipelineConfig, image_bytes: Vec<u8>, offline: bool) -> Result<(ExtractionResult, PathBuf), Failure> {
    let mut req = ExtractRequest::new(image_bytes, cfg.model_id.clone())
        .map_err(|e| Failure::new(exit::IO, format!("cannot decode image: {e}")))?;
    req.max_retries = cfg.max_retries;
    req.want_background = cfg.synthesize_background;
    let backend = make_backend(cfg, offline)?;
    let cache = ExtractCache::new(&cfg.cache_dir);
    let result = extract_layout_from_image(&req, backend.as_ref(), Some(&cache)).map_err(extract_failure)?;
    Ok((result, cache.entry_dir(&req.image_png, &req.model_id)))
}

pub fn extract(cfg: &PipelineConfig, image: &Path) -> Result<(), Failure> {
    let bytes = read(image)?;
    let (result, dir) = run_extraction(cfg, bytes, false)?;
    println!("layout: {}", dir.join(VALIDATED_FILE).display());
    println!("overlay: {}", dir.join(OVERLAY_FILE).display());
    println!("regions: {}", result.layout.regions.len());
    if result.from_cache {
        println!("cache: hit");
    } else {
        println!("attempts: {}", result.attempts);
    }
    println!("VLM extraction time (s): {:.3}", result.elapsed.as_secs_f64());
    Ok(())
}

fn pipeline_failure(e: PipelineError) -> Failure {
    let code = match &e {
        PipelineError::DimensionMismatch { .. } => exit::VALIDATION,
        PipelineError::Asset(AssetError::Upload { .. } | AssetError::InsecureUrl(_)) => exit::SERVICE,
        PipelineError::Asset(AssetError::Io { .. }) => exit::IO,
        _ => exit::GENERIC,
    };
    Failure::new(code, e.to_string())
}

pub fn build(
    cfg: &PipelineConfig,
    image: &Path,
    layout_path: Option<&Path>,
    dry_run: bool,
    out: Option<&Path>,
    replace_existing: bool,
) -> Result<(), Failure> {
    let start = Instant::now();
    let (bytes, img) = load_image(image)?;
    let mut extraction_s = None;
    let (mut layout, background) = match layout_path {
        Some(path) => load_layout(path)?,
        None => {
            let (result, _) = run_extraction(cfg, bytes, dry_run)?;
            extraction_s = Some(result.elapsed.as_secs_f64());
            (result.layout, result.background)
        }
    };
    let background = match (cfg.synthesize_background, background) {
        (true, None) => {
            warn!("no background sample available; building without a background");
            None
        }
        (true, bg) => bg,
        (false, _) => None,
    };
    if cfg.merge_adjacent_text {
        layout = merge_adjacent_text(&layout);
    }

    let options = BuildOptions {
        page_size: cfg.page(),
        expand_widths: cfg.expand_widths,
        margin_pt: cfg.margin_pt,
        gap_pt: cfg.gap_pt,
        ..BuildOptions::default()
    };
    let mut store = AssetStore::open(&cfg.cache_dir).map_err(|e| Failure::new(exit::IO, e.to_string()))?;
    let uploader: Box<dyn Uploader> = match (&cfg.upload_endpoint, dry_run) {
        (Some(endpoint), false) => {
            let mut up = HttpUploader::new(endpoint);
            if let Some(base) = &cfg.upload_public_base {
                up = up.with_public_base(base);
            }
            Box::new(up)
        }
        _ => Box::new(LocalDirUploader::new(cfg.cache_dir.join("public"), &cfg.local_asset_base_url)),
    };
    let presentation_id = match (&cfg.presentation_id, dry_run) {
        (Some(id), _) => id.clone(),
        (None, true) => DRY_RUN_PRESENTATION.to_owned(),
        (None, false) => {
            return Err(Failure::new(exit::GENERIC, "a live build needs --presentation-id (or presentation_id in the config)"))
        }
    };
    let batch = build_slide(&img, &layout, background.as_ref(), &presentation_id, &options, cfg.pad_px, &mut store, uploader.as_ref())
        .map_err(pipeline_failure)?;
    let local_s = start.elapsed().as_secs_f64() - extraction_s.unwrap_or(0.0);

    let mut report = Vec::new();
    if let Some(s) = extraction_s {
        report.push(format!("VLM extraction time (s): {s:.3}"));
    }
    if dry_run {
        let json = batch.to_json_string();
        match out {
            Some(path) => {
                write(path, json.as_bytes())?;
                report.push(format!("batch: {} ({} requests)", path.display(), batch.requests.len()));
            }
            None => {
                std::io::stdout()
                    .write_all(json.as_bytes())
                    .map_err(|e| Failure::new(exit::IO, format!("writing batch: {e}")))?;
            }
        }
    } else {
        let service = GoogleSlidesService::from_env()
            .ok_or_else(|| Failure::new(exit::SERVICE, format!("{SLIDES_TOKEN_ENV} is not set")))?;
        let executed = execute_batch(&batch, &service, ExecuteOptions { replace_existing })
            .map_err(|e| Failure::new(exit::SERVICE, e.to_string()))?;
        for id in &executed.object_ids {
            report.push(format!("created: {}", id.as_str()));
        }
        report.push(format!("Slides API time (s): {:.3}", executed.elapsed.as_secs_f64()));
    }
    report.push(format!("Local processing time (s): {:.3}", local_s.max(0.0)));
    for line in report {
        eprintln!("{line}");
    }
    Ok(())
}

pub enum EvalSource {
    Pair { gt: PathBuf, pred: PathBuf },
    RunDir(PathBuf),
}

struct RunFiles {
    id: String,
    gt: PathBuf,
    pred: PathBuf,
    timings: Option<PathBuf>,
}

fn run_files(dir: &Path, id: String) -> Result<RunFiles, Failure> {
    let gt = dir.join(GT_FILE);
    let pred = dir.join(PRED_FILE);
    for (path, what) in [(&gt, GT_FILE), (&pred, PRED_FILE)] {
        if !path.is_file() {
            return Err(Failure::new(exit::IO, format!("run {id}: missing {what} in {}", dir.display())));
        }
    }
    let timings = Some(dir.join(TIMINGS_FILE)).filter(|p| p.is_file());
    Ok(RunFiles { id, gt, pred, timings })
}

fn discover_runs(dir: &Path) -> Result<Vec<RunFiles>, Failure> {
    let name = |p: &Path| p.file_name().map_or_else(|| p.display().to_string(), |n| n.to_string_lossy().into_owned());
    if dir.join(GT_FILE).exists() || dir.join(PRED_FILE).exists() {
        return Ok(vec![run_files(dir, name(dir))?]);
    }
    let entries = fs::read_dir(dir).map_err(|e| Failure::new(exit::IO, format!("cannot read {}: {e}", dir.display())))?;
    let mut subdirs: Vec<PathBuf> = entries.filter_map(|e| e.ok().map(|e| e.path())).filter(|p| p.is_dir()).collect();
    subdirs.sort();
    let runs = subdirs
        .iter()
        .filter(|d| d.join(GT_FILE).exists() || d.join(PRED_FILE).exists())
        .map(|d| run_files(d, name(d)))
        .collect::<Result<Vec<_>, _>>()?;
    if runs.is_empty() {
        return Err(Failure::new(exit::IO, format!("no runs found under {}", dir.display())));
    }
    Ok(runs)
}

fn evaluate(cfg: &PipelineConfig, run: &RunFiles) -> Result<RunMetrics, Failure> {
    let (gt, _) = load_layout(&run.gt)?;
    let (pred, _) = load_layout(&run.pred)?;
    let timings: StageTimings = match &run.timings {
        Some(path) => serde_json::from_slice(&read(path)?)
            .map_err(|e| Failure::new(exit::VALIDATION, format!("run {}: bad {}: {e}", run.id, path.display())))?,
        None => StageTimings::default(),
    };
    evaluate_run(&run.id, &gt, &pred, timings, cfg.match_iou_threshold).map_err(|e| {
        let code = match e {
            EvalError::DimensionMismatch { .. } | EvalError::EmptyGroundTruth => exit::VALIDATION,
            EvalError::NoRuns => exit::GENERIC,
        };
        Failure::new(code, format!("run {}: {e}", run.id))
    })
}

pub fn eval(cfg: &PipelineConfig, source: &EvalSource, out: Option<&Path>) -> Result<(), Failure> {
    let (runs, default_out) = match source {
        EvalSource::Pair { gt, pred } => {
            let id = pred.file_stem().map_or_else(|| "run".to_owned(), |s| s.to_string_lossy().into_owned());
            (vec![RunFiles { id, gt: gt.clone(), pred: pred.clone(), timings: None }], PathBuf::from(REPORT_FILE))
        }
        EvalSource::RunDir(dir) => (discover_runs(dir)?, dir.join(REPORT_FILE)),
    };
    let metrics = runs.iter().map(|r| evaluate(cfg, r)).collect::<Result<Vec<_>, _>>()?;
    let report = aggregate(&metrics).map_err(|e| Failure::new(exit::GENERIC, e.to_string()))?;
    let path = out.map_or(default_out, Path::to_path_buf);
    let json = serde_json::to_string_pretty(&report.to_json()).expect("report serializes") + "\n";
    write(&path, json.as_bytes())?;
    print!("{}", report.to_table());
    println!("report: {}", path.display());
    Ok(())
}

pub fn overlay(image: &Path, layout_path: &Path, out: Option<&Path>) -> Result<(), Failure> {
    let (_, img) = load_image(image)?;
    let (layout, _) = load_layout(layout_path)?;
    let path = out.map_or_else(
        || {
            let stem = layout_path.file_stem().map_or_else(|| "layout".into(), |s| s.to_string_lossy().into_owned());
            layout_path.with_file_name(format!("{stem}.overlay.png"))
        },
        Path::to_path_buf,
    );
    let png = encode_png(&render_overlay(&img, &layout)).map_err(|e| Failure::new(exit::GENERIC, e.to_string()))?;
    write(&path, &png)?;
    println!("overlay: {}", path.display());
    Ok(())
}
