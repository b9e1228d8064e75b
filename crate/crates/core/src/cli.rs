//! Command-line driver. Every command prints a JSON echo of its effective
//! parameters first and writes a `manifest.json` into its output directory.

use std::ffi::OsString;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use serde_json::{json, Value};

use crate::error::Error;
use crate::gradients::{gradcheck, GradcheckConfig, Precision};
use crate::imgbuf::RgbImage;
use crate::io::{load_dataset, read_mesh, write_mesh, write_obj, write_pfm, write_png, write_png_raw, SceneDataset};
use crate::meshing::{extract_from_model, mesh_chamfer, model_bounds, DepthMode, FusionConfig};
use crate::model::SplatModel;
use crate::rasterizer::{render, RenderSettings};
use crate::synthetic::{generate_synthetic_scene, SceneKind};
use crate::trainer::{evaluate_views, load_checkpoint, save_checkpoint, Checkpoint, TrainConfig, Trainer};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_DATA: i32 = 2;
pub const EXIT_NUMERIC: i32 = 3;

/// Surface samples per mesh for Chamfer evaluation.
pub const CHAMFER_SAMPLES: usize = 100_000;

pub const MANIFEST_FILE: &str = "manifest.json";
pub const MODEL_FILE: &str = "model.ckpt";
pub const METRICS_FILE: &str = "metrics.jsonl";

#[derive(Debug, Parser)]
#[command(name = "surfsplat", version, about = "2D Gaussian surfel reconstruction on the CPU")]
pub struct Cli {
    /// Worker threads; defaults to all cores. Results do not depend on it.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Optimize a model on a dataset.
    Train(TrainArgs),
    /// Render channels of one view.
    Render(RenderArgs),
    /// Extract a mesh by TSDF fusion of rendered depth.
    Mesh(MeshArgs),
    /// Score a model on the held-out views.
    Eval(EvalArgs),
    /// Compare analytic gradients with finite differences.
    Gradcheck(GradcheckArgs),
    /// Write a synthetic dataset with ground truth.
    GenScene(GenSceneArgs),
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// TOML config; flags below override it.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Iterations; milestones of the schedule are stretched to match.
    #[arg(long)]
    pub iters: Option<usize>,
    #[arg(long)]
    pub alpha_d: Option<f64>,
    #[arg(long)]
    pub beta_n: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub no_normal_loss: bool,
    #[arg(long)]
    pub no_distortion_loss: bool,
    /// Also write a checkpoint every this many steps.
    #[arg(long)]
    pub checkpoint_every: Option<usize>,
}

#[derive(Debug, Args)]
pub struct RenderArgs {
    #[arg(long)]
    pub ckpt: PathBuf,
    #[arg(long)]
    pub data: PathBuf,
    /// View index or name.
    #[arg(long)]
    pub view: String,
    /// Comma-separated subset of color,depth,normal,alpha.
    #[arg(long, default_value = "color,depth,normal,alpha")]
    pub channels: String,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct MeshArgs {
    #[arg(long)]
    pub ckpt: PathBuf,
    #[arg(long)]
    pub data: PathBuf,
    /// Voxel size; defaults to 0.004 times the scene extent.
    #[arg(long)]
    pub voxel: Option<f64>,
    /// Truncation distance; defaults to five voxels.
    #[arg(long)]
    pub trunc: Option<f64>,
    #[arg(long, default_value = "median")]
    pub depth_mode: DepthMode,
    #[arg(long)]
    pub out: PathBuf,
    /// Also write an OBJ copy.
    #[arg(long)]
    pub obj: bool,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub ckpt: PathBuf,
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long, default_value = "median")]
    pub depth_mode: DepthMode,
    /// Directory for the records and manifest; stdout only when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct GradcheckArgs {
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value = "double", value_parser = parse_precision)]
    pub precision: Precision,
    #[arg(long)]
    pub scenes: Option<usize>,
}

#[derive(Debug, Args)]
pub struct GenSceneArgs {
    #[arg(long, default_value = "sphere")]
    pub kind: SceneKind,
    #[arg(long, default_value_t = 24)]
    pub views: usize,
    #[arg(long, default_value_t = 128)]
    pub resolution: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

fn parse_precision(s: &str) -> std::result::Result<Precision, String> {
    match s {
        "double" | "f64" => Ok(Precision::Double),
        "single" | "f32" => Ok(Precision::Single),
        _ => Err(format!("unknown precision {s:?}, expected double or single")),
    }
}

/// Failure of a command, carrying its exit code.
#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Data(Error),
    Numeric(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Data(_) => EXIT_DATA,
            CliError::Numeric(_) => EXIT_NUMERIC,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "usage error: {m}"),
            CliError::Data(e) => write!(f, "{e}"),
            CliError::Numeric(m) => write!(f, "numeric failure: {m}"),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::Config(m) => CliError::Usage(m),
            Error::NonFinite(m) => CliError::Numeric(m),
            e => CliError::Data(e),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Data(e.into())
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

/// Parses `args` (program name first), runs the command and returns the
/// process exit code. Messages go to stderr, records to stdout.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match execute(&cli) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

/// Runs a parsed command inside a pool of the requested size.
pub fn execute(cli: &Cli) -> CliResult<()> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(CliError::Usage("--threads must be at least 1".into()));
        }
        builder = builder.num_threads(n);
    }
    let pool = builder.build().map_err(|e| CliError::Usage(format!("thread pool: {e}")))?;
    pool.install(|| match &cli.command {
        Command::Train(a) => train(a, cli.threads),
        Command::Render(a) => render_view(a, cli.threads),
        Command::Mesh(a) => mesh(a, cli.threads),
        Command::Eval(a) => eval(a, cli.threads),
        Command::Gradcheck(a) => grad_check(a, cli.threads),
        Command::GenScene(a) => gen_scene(a, cli.threads),
    })
}

fn print_record(v: &Value) {
    println!("{v}");
}

/// Prints the config echo and returns it for the manifest.
fn echo(command: &str, threads: Option<usize>, params: Value) -> Value {
    let v = json!({ "command": command, "version": env!("CARGO_PKG_VERSION"), "threads": threads, "params": params });
    print_record(&v);
    v
}

fn write_manifest(dir: &Path, echo: Value, outputs: &[PathBuf], extra: Value) -> CliResult<()> {
    let rel: Vec<String> = outputs
        .iter()
        .map(|p| p.strip_prefix(dir).unwrap_or(p).display().to_string())
        .collect();
    let mut m = json!({ "invocation": echo, "outputs": rel });
    if let (Value::Object(mo), Value::Object(eo)) = (&mut m, extra) {
        mo.extend(eo);
    }
    let text = serde_json::to_string_pretty(&m).map_err(Error::from)?;
    fs::write(dir.join(MANIFEST_FILE), text)?;
    Ok(())
}

fn to_json<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("value serializes")
}

/// Training configuration from an optional file and flag overrides. An
/// explicit iteration count stretches the schedule of the base config.
pub fn resolve_train_config(a: &TrainArgs) -> CliResult<TrainConfig> {
    let mut cfg = match &a.config {
        Some(p) => TrainConfig::load(p).map_err(|e| match e {
            Error::MissingFile(p) => CliError::Usage(format!("config file {} not found", p.display())),
            e => e.into(),
        })?,
        None => TrainConfig::default(),
    };
    if let Some(n) = a.iters {
        cfg.rescale(n);
    }
    if let Some(v) = a.alpha_d {
        cfg.weights.alpha_d = v;
    }
    if let Some(v) = a.beta_n {
        cfg.weights.beta_n = v;
    }
    if let Some(s) = a.seed {
        cfg.seed = s;
    }
    if a.no_normal_loss {
        cfg.terms.normal = false;
    }
    if a.no_distortion_loss {
        cfg.terms.distortion = false;
    }
    if a.checkpoint_every == Some(0) {
        return Err(CliError::Usage("--checkpoint-every must be positive".into()));
    }
    cfg.validate()?;
    Ok(cfg)
}

fn load_data(path: &Path) -> CliResult<SceneDataset> {
    Ok(load_dataset(path)?)
}

fn load_model(path: &Path) -> CliResult<Checkpoint> {
    Ok(load_checkpoint(path)?)
}

fn settings_for(ds: &SceneDataset) -> RenderSettings {
    RenderSettings { background: ds.background, ..Default::default() }
}

fn train(a: &TrainArgs, threads: Option<usize>) -> CliResult<()> {
    let cfg = resolve_train_config(a)?;
    let ds = load_data(&a.data)?;
    let e = echo(
        "train",
        threads,
        json!({ "data": a.data, "out": a.out, "checkpoint_every": a.checkpoint_every, "config": to_json(&cfg) }),
    );
    fs::create_dir_all(&a.out)?;
    let config_path = a.out.join("config.toml");
    fs::write(&config_path, cfg.to_toml())?;
    let mut outputs = vec![config_path];
    let mut trainer = Trainer::new(&ds, cfg)?;
    let model_path = a.out.join(MODEL_FILE);
    if trainer.config.iterations == 0 {
        save_checkpoint(&model_path, &trainer.checkpoint())?;
        outputs.push(model_path);
        eprintln!("initialized {} splats", trainer.model.len());
        return write_manifest(&a.out, e, &outputs, json!({ "splats": trainer.model.len() }));
    }
    let metrics_path = a.out.join(METRICS_FILE);
    let mut log = BufWriter::new(File::create(&metrics_path)?);
    let every = a.checkpoint_every;
    let out_dir = a.out.clone();
    let mut written = Vec::new();
    let total = trainer.config.iterations;
    trainer.run(&ds, |t, m| {
        serde_json::to_writer(&mut log, m)?;
        log.write_all(b"\n")?;
        if m.step % 100 == 0 || m.step == total {
            eprintln!("step {}/{total} splats {} loss {:.5} psnr {:.2}", m.step, m.splats, m.total, m.psnr);
        }
        if let Some(k) = every {
            if m.step % k == 0 && m.step < total {
                let p = out_dir.join(format!("checkpoint_{:06}.ckpt", m.step));
                save_checkpoint(&p, &t.checkpoint())?;
                written.push(p);
            }
        }
        Ok(())
    })?;
    log.flush()?;
    outputs.push(metrics_path);
    outputs.extend(written);
    save_checkpoint(&model_path, &trainer.checkpoint())?;
    outputs.push(model_path);
    let renders = a.out.join("renders");
    fs::create_dir_all(&renders)?;
    let scores = evaluate_views(&trainer.model, &ds, &ds.test, &trainer.settings)?;
    for &v in &ds.test {
        let (_, out) = render(&trainer.model, &ds.cameras[v], &trainer.settings)?;
        let p = renders.join(format!("{}.png", ds.names[v]));
        write_png(&p, &RgbImage::from_data(out.width, out.height, out.color)?)?;
        outputs.push(p);
    }
    for s in &scores {
        print_record(&json!({ "metric": "psnr", "view": s.name, "value": s.psnr }));
        print_record(&json!({ "metric": "ssim", "view": s.name, "value": s.ssim }));
    }
    write_manifest(&a.out, e, &outputs, json!({ "splats": trainer.model.len(), "test_scores": to_json(&scores) }))
}

/// Output channels of `render`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Channel {
    Color,
    Depth,
    Normal,
    Alpha,
}

pub fn parse_channels(s: &str) -> CliResult<Vec<Channel>> {
    let mut out = Vec::new();
    for c in s.split(',').map(str::trim).filter(|c| !c.is_empty()) {
        let ch = match c {
            "color" => Channel::Color,
            "depth" => Channel::Depth,
            "normal" => Channel::Normal,
            "alpha" => Channel::Alpha,
            _ => return Err(CliError::Usage(format!("unknown channel {c:?}"))),
        };
        if !out.contains(&ch) {
            out.push(ch);
        }
    }
    if out.is_empty() {
        return Err(CliError::Usage("empty channel list".into()));
    }
    Ok(out)
}

fn resolve_view(ds: &SceneDataset, view: &str) -> CliResult<usize> {
    if let Ok(i) = view.parse::<usize>() {
        return if i < ds.len() {
            Ok(i)
        } else {
            Err(CliError::Usage(format!("view {i} out of range, dataset has {} views", ds.len())))
        };
    }
    ds.names.iter().position(|n| n == view).ok_or_else(|| CliError::Usage(format!("no view named {view:?}")))
}

fn render_view(a: &RenderArgs, threads: Option<usize>) -> CliResult<()> {
    let channels = parse_channels(&a.channels)?;
    let ckpt = load_model(&a.ckpt)?;
    let ds = load_data(&a.data)?;
    let view = resolve_view(&ds, &a.view)?;
    let e = echo(
        "render",
        threads,
        json!({ "ckpt": a.ckpt, "data": a.data, "view": view, "channels": channels, "out": a.out }),
    );
    let settings = settings_for(&ds);
    let (_, out) = render(&ckpt.model, &ds.cameras[view], &settings)?;
    fs::create_dir_all(&a.out)?;
    let name = &ds.names[view];
    let mut outputs = Vec::new();
    for ch in &channels {
        let p = match ch {
            Channel::Color => {
                let p = a.out.join(format!("{name}_color.png"));
                write_png_raw(&p, out.width, out.height, &out.color)?;
                p
            }
            Channel::Depth => {
                let p = a.out.join(format!("{name}_depth.pfm"));
                write_pfm(&p, out.width, out.height, &out.median_depth)?;
                p
            }
            Channel::Normal => {
                let p = a.out.join(format!("{name}_normal.png"));
                let rgb: Vec<[f64; 3]> = out.normal.iter().map(|n| n.map(|c| 0.5 * (c + 1.0))).collect();
                write_png_raw(&p, out.width, out.height, &rgb)?;
                p
            }
            Channel::Alpha => {
                let p = a.out.join(format!("{name}_alpha.png"));
                let rgb: Vec<[f64; 3]> = out.alpha.iter().map(|&x| [x; 3]).collect();
                write_png_raw(&p, out.width, out.height, &rgb)?;
                p
            }
        };
        outputs.push(p);
    }
    let score = evaluate_views(&ckpt.model, &ds, &[view], &settings)?;
    print_record(&json!({ "metric": "psnr", "view": name, "value": score[0].psnr }));
    write_manifest(&a.out, e, &outputs, json!({}))
}

fn fusion_config(ds: &SceneDataset, voxel: Option<f64>, trunc: Option<f64>, mode: DepthMode) -> CliResult<FusionConfig> {
    let mut f = FusionConfig::for_extent(ds.scene_extent);
    if let Some(v) = voxel {
        if !(v > 0.0 && v.is_finite()) {
            return Err(CliError::Usage(format!("--voxel must be positive, got {v}")));
        }
        f.voxel_size = v;
        f.truncation = 5.0 * v;
    }
    if let Some(t) = trunc {
        if !(t > 0.0 && t.is_finite()) {
            return Err(CliError::Usage(format!("--trunc must be positive, got {t}")));
        }
        f.truncation = t;
    }
    f.depth_mode = mode;
    Ok(f)
}

fn extract(model: &SplatModel, ds: &SceneDataset, fusion: &FusionConfig) -> CliResult<crate::meshing::TriangleMesh> {
    let cams = ds.train_cameras();
    let settings = settings_for(ds);
    let bounds = model_bounds(model, &cams, ds.scene_extent, TrainConfig::default().prune_opacity)?;
    Ok(extract_from_model(model, &cams, bounds, fusion, &settings)?)
}

fn mesh(a: &MeshArgs, threads: Option<usize>) -> CliResult<()> {
    let ckpt = load_model(&a.ckpt)?;
    let ds = load_data(&a.data)?;
    let fusion = fusion_config(&ds, a.voxel, a.trunc, a.depth_mode)?;
    let e = echo(
        "mesh",
        threads,
        json!({ "ckpt": a.ckpt, "data": a.data, "fusion": to_json(&fusion), "out": a.out, "obj": a.obj }),
    );
    let m = extract(&ckpt.model, &ds, &fusion)?;
    fs::create_dir_all(&a.out)?;
    let ply = a.out.join("mesh.ply");
    write_mesh(&ply, &m)?;
    let mut outputs = vec![ply];
    if a.obj {
        let obj = a.out.join("mesh.obj");
        write_obj(&obj, &m)?;
        outputs.push(obj);
    }
    print_record(&json!({ "metric": "vertices", "value": m.vertices.len() }));
    print_record(&json!({ "metric": "triangles", "value": m.triangles.len() }));
    write_manifest(&a.out, e, &outputs, json!({}))
}

fn eval(a: &EvalArgs, threads: Option<usize>) -> CliResult<()> {
    let ckpt = load_model(&a.ckpt)?;
    let ds = load_data(&a.data)?;
    let views = if ds.test.is_empty() { ds.train.clone() } else { ds.test.clone() };
    let e = echo(
        "eval",
        threads,
        json!({ "ckpt": a.ckpt, "data": a.data, "depth_mode": a.depth_mode, "views": views, "out": a.out }),
    );
    let scores = evaluate_views(&ckpt.model, &ds, &views, &settings_for(&ds))?;
    let mut records = Vec::new();
    for s in &scores {
        records.push(json!({ "metric": "psnr", "view": s.name, "value": s.psnr }));
        records.push(json!({ "metric": "ssim", "view": s.name, "value": s.ssim }));
    }
    let n = scores.len().max(1) as f64;
    records.push(json!({ "metric": "mean_psnr", "value": scores.iter().map(|s| s.psnr).sum::<f64>() / n }));
    records.push(json!({ "metric": "mean_ssim", "value": scores.iter().map(|s| s.ssim).sum::<f64>() / n }));
    match &ds.mesh_path {
        Some(p) => {
            let gt = read_mesh(p)?;
            let fusion = fusion_config(&ds, None, None, a.depth_mode)?;
            let m = extract(&ckpt.model, &ds, &fusion)?;
            let cd = if m.triangles.is_empty() {
                f64::INFINITY
            } else {
                mesh_chamfer(&m, &gt, CHAMFER_SAMPLES, 0)?
            };
            records.push(json!({ "metric": "chamfer", "depth_mode": a.depth_mode, "value": cd }));
        }
        None => eprintln!("notice: dataset has no ground-truth mesh, Chamfer omitted"),
    }
    for r in &records {
        print_record(r);
    }
    for r in &records {
        if let Some(v) = r["value"].as_f64() {
            if !v.is_finite() {
                return Err(CliError::Numeric(format!("non-finite metric {r}")));
            }
        }
    }
    if let Some(dir) = &a.out {
        fs::create_dir_all(dir)?;
        let p = dir.join("eval.jsonl");
        let mut f = BufWriter::new(File::create(&p)?);
        for r in &records {
            writeln!(f, "{r}")?;
        }
        f.flush()?;
        write_manifest(dir, e, &[p], json!({}))?;
    }
    Ok(())
}

fn grad_check(a: &GradcheckArgs, threads: Option<usize>) -> CliResult<()> {
    let mut cfg = GradcheckConfig { seed: a.seed, precision: a.precision, ..Default::default() };
    if let Some(s) = a.scenes {
        if s == 0 {
            return Err(CliError::Usage("--scenes must be positive".into()));
        }
        cfg.scenes = s;
    }
    echo("gradcheck", threads, json!({ "config": to_json(&cfg) }));
    let report = gradcheck(&cfg)?;
    print_record(&json!({
        "metric": "gradcheck",
        "ok": report.ok(),
        "parameters": report.parameters,
        "excluded": report.excluded,
        "checked": report.checked,
        "passed": report.passed,
        "pass_fraction": report.pass_fraction(),
        "max_rel_error": report.max_rel_error,
        "tolerance": report.tolerance,
    }));
    if report.ok() {
        Ok(())
    } else {
        Err(CliError::Numeric(format!(
            "{} of {} gradients within tolerance, need {:.0}%",
            report.passed,
            report.checked,
            100.0 * report.required_pass_fraction
        )))
    }
}

fn gen_scene(a: &GenSceneArgs, threads: Option<usize>) -> CliResult<()> {
    if a.views < 2 || a.resolution == 0 {
        return Err(CliError::Usage("need at least 2 views and a positive resolution".into()));
    }
    let e = echo(
        "gen-scene",
        threads,
        json!({ "kind": a.kind.to_string(), "views": a.views, "resolution": a.resolution, "seed": a.seed, "out": a.out }),
    );
    let scene = generate_synthetic_scene(a.kind, a.views, a.resolution, a.seed)?;
    scene.save(&a.out)?;
    let ds = &scene.dataset;
    print_record(&json!({ "metric": "views", "train": ds.train.len(), "test": ds.test.len(), "extent": ds.scene_extent }));
    write_manifest(&a.out, e, &[a.out.join(crate::io::CAMERAS_FILE)], json!({}))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn channel_lists_parse() {
        assert_eq!(parse_channels("depth, color,depth").unwrap(), vec![Channel::Depth, Channel::Color]);
        assert!(matches!(parse_channels(""), Err(CliError::Usage(_))));
        assert!(matches!(parse_channels(" , "), Err(CliError::Usage(_))));
        assert!(matches!(parse_channels("color,rgb"), Err(CliError::Usage(_))));
    }

    #[test]
    fn flags_override_the_config() {
        let a = TrainArgs {
            data: "d".into(),
            out: "o".into(),
            config: None,
            iters: Some(3000),
            alpha_d: Some(5.0),
            beta_n: None,
            seed: Some(9),
            no_normal_loss: true,
            no_distortion_loss: false,
            checkpoint_every: None,
        };
        let c = resolve_train_config(&a).unwrap();
        assert_eq!(c, {
            let mut r = TrainConfig::scaled_to(3000);
            r.weights.alpha_d = 5.0;
            r.seed = 9;
            r.terms.normal = false;
            r
        });
    }

    #[test]
    fn error_kinds_map_to_exit_codes() {
        assert_eq!(CliError::from(Error::Config("x".into())).exit_code(), EXIT_USAGE);
        assert_eq!(CliError::from(Error::NonFinite("x".into())).exit_code(), EXIT_NUMERIC);
        assert_eq!(CliError::from(Error::EmptyModel).exit_code(), EXIT_DATA);
        assert_eq!(run(["surfsplat", "bogus"]), EXIT_USAGE);
        assert_eq!(run(["surfsplat", "render", "--ckpt", "a", "--data", "b", "--view", "0", "--channels", "", "--out", "c"]), EXIT_USAGE);
        assert_eq!(run(["surfsplat", "eval", "--ckpt", "/nonexistent.ckpt", "--data", "/nonexistent"]), EXIT_DATA);
        assert_eq!(run(["surfsplat", "--help"]), EXIT_OK);
    }
}
