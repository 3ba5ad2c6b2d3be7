//! End-to-end workflows behind the command-line tool: training runs with
//! metric logs, rendering from checkpoints, the GATE vs hash-grid comparison,
//! the Voronoi visualization and scene statistics.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::checkpoint::Checkpoint;
use crate::config::{hash_json, RunConfig};
use crate::encoders::HashGridConfig;
use crate::geometry::{Bvh, Scene};
use crate::mesh_colors::{build_layout, level_resolutions, mesh_mean_normalized_areas, LayoutStats, LevelSpec};
use crate::model::{EncoderKind, Encoding, Model};
use crate::nao::{mse, psnr, render_inference, render_reference, render_voronoi, AoOracle, AoParams, Camera, Image};
use crate::training::Trainer;
use crate::{Error, Result};

/// Scene, camera and accelerator for a run.
pub struct Setup {
    pub scene: Scene,
    pub camera: Camera,
    pub bvh: Bvh,
}

impl Setup {
    pub fn new(cfg: &RunConfig) -> Result<Setup> {
        let (scene, camera) = cfg.load_scene()?;
        let bvh = Bvh::build(&scene);
        Ok(Setup { scene, camera, bvh })
    }
}

pub fn build_model(cfg: &RunConfig, scene: &Scene) -> Result<Model<f32>> {
    let enc = &cfg.encoder;
    let encoding = match enc.encoder {
        EncoderKind::Gate => Encoding::gate(scene, &enc.resolution(), enc.storage, cfg.seed)?,
        EncoderKind::Hashgrid => Encoding::hashgrid(scene, enc.hashgrid(), cfg.seed)?,
    };
    Model::new(encoding, enc.extras(), cfg.adam, cfg.seed)
}

fn create_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(format!("creating {}", dir.display()), e))
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::io(format!("writing {}", path.display()), e))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    write_text(path, &s)
}

/// Writes `<stem>.ppm`, and `<stem>.png` when PNG support is compiled in.
pub fn save_image(img: &Image, dir: &Path, stem: &str) -> Result<()> {
    img.write_ppm(dir.join(format!("{stem}.ppm")))?;
    #[cfg(feature = "png")]
    img.write_png(dir.join(format!("{stem}.png")))?;
    Ok(())
}

/// Ground-truth AO image, cached under `cache_dir` keyed by scene, camera and
/// AO parameters.
pub fn reference_image(setup: &Setup, ao: &AoParams, seed: u64, cache_dir: Option<&Path>) -> Result<Image> {
    let key = hash_json(&(
        setup.scene.content_hash(),
        setup.camera.content_hash(),
        ao.reference_spp,
        ao.max_dist(&setup.scene).to_bits(),
        seed,
    ));
    let path = cache_dir.map(|d| d.join(format!("reference-{key}.bin")));
    if let Some(p) = &path {
        if let Ok(bytes) = std::fs::read(p) {
            if let Ok(img) = Image::read_raw(&bytes[..]) {
                if img.width == setup.camera.width && img.height == setup.camera.height {
                    return Ok(img);
                }
            }
        }
    }
    let img = render_reference(&setup.scene, &setup.bvh, &setup.camera, ao, seed);
    if let (Some(p), Some(dir)) = (&path, cache_dir) {
        create_dir(dir)?;
        let mut buf = Vec::new();
        img.write_raw(&mut buf).map_err(|e| Error::io("encoding reference", e))?;
        std::fs::write(p, buf).map_err(|e| Error::io(format!("writing {}", p.display()), e))?;
    }
    Ok(img)
}

/// One CSV row per iteration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogRow {
    pub iter: u64,
    pub loss: f64,
    pub mse: Option<f64>,
    pub psnr: Option<f64>,
    pub ms_train: f64,
    pub ms_render: Option<f64>,
}

pub const CSV_HEADER: &str = "iter,loss,mse,psnr,ms_train,ms_render";

/// CSV text with a `# config_hash=` comment line. Timing columns are left
/// empty when `with_timings` is false so deterministic runs compare equal.
pub fn metrics_csv(config_hash: &str, rows: &[LogRow], with_timings: bool) -> String {
    let opt = |v: Option<f64>| v.map(|x| format!("{x:.9e}")).unwrap_or_default();
    let mut s = format!("# config_hash={config_hash}\n{CSV_HEADER}\n");
    for r in rows {
        let (t, tr) = if with_timings {
            (format!("{:.3}", r.ms_train), r.ms_render.map(|x| format!("{x:.3}")).unwrap_or_default())
        } else {
            (String::new(), String::new())
        };
        let _ = writeln!(s, "{},{:.9e},{},{},{},{}", r.iter, r.loss, opt(r.mse), opt(r.psnr), t, tr);
    }
    s
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub model: Model<f32>,
    pub trainer: Trainer,
    pub rows: Vec<LogRow>,
    /// Inference images rendered at logging iterations, with their iteration.
    pub snapshots: Vec<(u64, Image)>,
    pub final_image: Image,
    pub final_mse: Option<f64>,
    pub final_psnr: Option<f64>,
    pub mean_ms_train: f64,
    pub mean_ms_render: f64,
}

/// Trains `model` online for `iterations` steps against the AO oracle.
/// Every `log_every` iterations (and after the last one) an inference image
/// is rendered and compared with `reference`.
pub fn run_training(
    cfg: &RunConfig,
    setup: &Setup,
    mut model: Model<f32>,
    iterations: u64,
    reference: Option<&Image>,
) -> Result<TrainOutcome> {
    let mut trainer = Trainer::new(&setup.scene, cfg.trainer_config())?;
    let oracle = AoOracle::new(&setup.scene, &setup.bvh, &cfg.ao);
    let mut rows = Vec::with_capacity(iterations as usize);
    let mut snapshots = Vec::new();
    let (mut train_ms, mut render_ms, mut renders) = (0.0, 0.0, 0u32);
    for it in 1..=iterations {
        let t0 = Instant::now();
        let loss = trainer.step(&mut model, &setup.scene, &oracle)?;
        let ms_train = t0.elapsed().as_secs_f64() * 1e3;
        train_ms += ms_train;
        let mut row = LogRow {
            iter: it,
            loss,
            mse: None,
            psnr: None,
            ms_train,
            ms_render: None,
        };
        if cfg.log_every > 0 && it % cfg.log_every == 0 {
            let t1 = Instant::now();
            let img = render_inference(&setup.scene, &setup.bvh, &setup.camera, &model)?;
            let ms = t1.elapsed().as_secs_f64() * 1e3;
            render_ms += ms;
            renders += 1;
            row.ms_render = Some(ms);
            if let Some(r) = reference {
                row.mse = Some(mse(&img, r)?);
                row.psnr = Some(psnr(&img, r)?);
            }
            snapshots.push((it, img));
        }
        rows.push(row);
    }
    let final_image = match snapshots.last() {
        Some((it, img)) if *it == iterations => img.clone(),
        _ => {
            let t1 = Instant::now();
            let img = render_inference(&setup.scene, &setup.bvh, &setup.camera, &model)?;
            render_ms += t1.elapsed().as_secs_f64() * 1e3;
            renders += 1;
            img
        }
    };
    let (final_mse, final_psnr) = match reference {
        Some(r) => (Some(mse(&final_image, r)?), Some(psnr(&final_image, r)?)),
        None => (None, None),
    };
    Ok(TrainOutcome {
        model,
        trainer,
        rows,
        snapshots,
        final_image,
        final_mse,
        final_psnr,
        mean_ms_train: if iterations > 0 { train_ms / iterations as f64 } else { 0.0 },
        mean_ms_render: if renders > 0 { render_ms / renders as f64 } else { 0.0 },
    })
}

fn cache_dir(cfg: &RunConfig) -> PathBuf {
    cfg.out_dir.join("cache")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainSummary {
    pub config_hash: String,
    pub iterations: u64,
    pub checkpoint: PathBuf,
    pub metrics: PathBuf,
    pub final_loss: Option<f64>,
    pub final_mse: Option<f64>,
    pub final_psnr: Option<f64>,
}

/// `train`: writes `checkpoint.bin`, `metrics.csv`, `final.ppm` and one
/// `iter_NNNNN.ppm` per logging iteration into the output directory.
pub fn cmd_train(cfg: &RunConfig, checkpoint: Option<&Path>) -> Result<TrainSummary> {
    cfg.validate()?;
    let out = &cfg.out_dir;
    create_dir(out)?;
    let setup = Setup::new(cfg)?;
    let reference = reference_image(&setup, &cfg.ao, cfg.seed, Some(&cache_dir(cfg)))?;
    let model = build_model(cfg, &setup.scene)?;
    let iterations = cfg.trainer.iterations;
    let outcome = run_training(cfg, &setup, model, iterations, Some(&reference))?;
    let hash = cfg.config_hash();

    for (it, img) in &outcome.snapshots {
        save_image(img, out, &format!("iter_{it:05}"))?;
    }
    save_image(&outcome.final_image, out, "final")?;
    save_image(&reference, out, "reference")?;
    let csv = out.join("metrics.csv");
    write_text(&csv, &metrics_csv(&hash, &outcome.rows, !cfg.deterministic))?;
    let ck_path = checkpoint.map(Path::to_path_buf).unwrap_or_else(|| out.join("checkpoint.bin"));
    Checkpoint {
        config_hash: hash.clone(),
        iteration: outcome.trainer.iter,
        model: outcome.model,
        state: outcome.trainer.state,
    }
    .save(&ck_path)?;
    Ok(TrainSummary {
        config_hash: hash,
        iterations,
        checkpoint: ck_path,
        metrics: csv,
        final_loss: outcome.rows.last().map(|r| r.loss),
        final_mse: outcome.final_mse,
        final_psnr: outcome.final_psnr,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RenderSummary {
    pub image: PathBuf,
    pub mse: Option<f64>,
    pub psnr: Option<f64>,
}

/// `render`: inference image from a checkpoint, optionally with the reference
/// image and its error metrics.
pub fn cmd_render(cfg: &RunConfig, checkpoint: &Path, with_reference: bool) -> Result<RenderSummary> {
    cfg.validate()?;
    let setup = Setup::new(cfg)?;
    let ck = Checkpoint::load(checkpoint, &setup.scene)?;
    let hash = cfg.config_hash();
    if ck.config_hash != hash {
        return Err(Error::Checkpoint(format!(
            "checkpoint was trained with config {} but the current config is {hash}",
            ck.config_hash
        )));
    }
    let out = &cfg.out_dir;
    create_dir(out)?;
    let img = render_inference(&setup.scene, &setup.bvh, &setup.camera, &ck.model)?;
    save_image(&img, out, "render")?;
    let (mut m, mut p) = (None, None);
    if with_reference {
        let reference = reference_image(&setup, &cfg.ao, cfg.seed, Some(&cache_dir(cfg)))?;
        save_image(&reference, out, "reference")?;
        m = Some(mse(&img, &reference)?);
        p = Some(psnr(&img, &reference)?);
    }
    Ok(RenderSummary {
        image: out.join("render.ppm"),
        mse: m,
        psnr: p,
    })
}

/// Hash-grid table size whose feature parameter count is closest to
/// `target`.
pub fn match_table_size(base: &HashGridConfig, target: usize) -> u32 {
    let count = |t: u32| HashGridConfig { table_size: t, ..base.clone() }.param_count();
    let max_dense = (0..base.levels)
        .map(|l| {
            let n = base.resolution(l) as u64 + 1;
            (n * n * n).min(u32::MAX as u64) as u32
        })
        .max()
        .unwrap_or(1);
    // param_count is non-decreasing in T.
    let (mut lo, mut hi) = (1u32, max_dense.max(1));
    while lo < hi {
        let mid = lo + (hi - lo) / 2;
        if count(mid) < target {
            lo = mid + 1;
        } else {
            hi = mid;
        }
    }
    if lo > 1 && count(lo).abs_diff(target) > count(lo - 1).abs_diff(target) {
        lo - 1
    } else {
        lo
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodReport {
    pub method: EncoderKind,
    /// Trainable encoder parameters.
    pub feature_params: usize,
    pub mlp_params: usize,
    /// Feature storage at 4 bytes per value.
    pub bytes: u64,
    pub table_size: Option<u32>,
    pub iterations: u64,
    pub final_loss: Option<f64>,
    pub final_mse: f64,
    pub final_psnr: f64,
    pub mean_ms_iteration: f64,
    pub mean_ms_render: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompareReport {
    pub config_hash: String,
    pub seed: u64,
    pub iterations: u64,
    /// Hash-grid over GATE feature parameter count.
    pub param_ratio: f64,
    pub gate: MethodReport,
    pub hashgrid: MethodReport,
}

fn method_report(kind: EncoderKind, o: &TrainOutcome, iterations: u64, table: Option<u32>) -> MethodReport {
    let fp = o.model.encoding.param_count();
    MethodReport {
        method: kind,
        feature_params: fp,
        mlp_params: o.model.mlp.param_count(),
        bytes: fp as u64 * 4,
        table_size: table,
        iterations,
        final_loss: o.rows.last().map(|r| r.loss),
        final_mse: o.final_mse.unwrap_or(f64::NAN),
        final_psnr: o.final_psnr.unwrap_or(f64::NAN),
        mean_ms_iteration: o.mean_ms_train,
        mean_ms_render: o.mean_ms_render,
    }
}

/// `compare`: trains GATE and the hash grid on the same scene, batches and
/// seed. Without `table_size` the hash table is sized to match GATE's feature
/// parameter count. Writes `compare.json` and the three images.
pub fn compare(cfg: &RunConfig, table_size: Option<u32>, write: bool) -> Result<CompareReport> {
    cfg.validate()?;
    let setup = Setup::new(cfg)?;
    let reference = reference_image(&setup, &cfg.ao, cfg.seed, write.then(|| cache_dir(cfg)).as_deref())?;
    let iterations = cfg.trainer.iterations;

    let mut gate_cfg = cfg.clone();
    gate_cfg.encoder.encoder = EncoderKind::Gate;
    let gate_model = build_model(&gate_cfg, &setup.scene)?;
    let target = gate_model.encoding.param_count();

    let mut hash_cfg = cfg.clone();
    hash_cfg.encoder.encoder = EncoderKind::Hashgrid;
    let t = table_size.unwrap_or_else(|| match_table_size(&hash_cfg.encoder.hashgrid, target));
    hash_cfg.encoder.table_size = Some(t);
    hash_cfg.encoder.validate()?;
    let hash_model = build_model(&hash_cfg, &setup.scene)?;

    let g = run_training(&gate_cfg, &setup, gate_model, iterations, Some(&reference))?;
    let h = run_training(&hash_cfg, &setup, hash_model, iterations, Some(&reference))?;

    let gate = method_report(EncoderKind::Gate, &g, iterations, None);
    let hashgrid = method_report(EncoderKind::Hashgrid, &h, iterations, Some(t));
    let report = CompareReport {
        config_hash: cfg.config_hash(),
        seed: cfg.seed,
        iterations,
        param_ratio: hashgrid.feature_params as f64 / gate.feature_params as f64,
        gate,
        hashgrid,
    };
    if write {
        let out = &cfg.out_dir;
        create_dir(out)?;
        save_image(&reference, out, "reference")?;
        save_image(&g.final_image, out, "gate")?;
        save_image(&h.final_image, out, "hashgrid")?;
        let mut archived = report.clone();
        if cfg.deterministic {
            for m in [&mut archived.gate, &mut archived.hashgrid] {
                m.mean_ms_iteration = 0.0;
                m.mean_ms_render = 0.0;
            }
        }
        write_json(&out.join("compare.json"), &archived)?;
    }
    Ok(report)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VizReport {
    pub config_hash: String,
    pub layout: LayoutStats,
}

/// `viz`: Voronoi view of the finest feature level plus layout statistics
/// (`voronoi.ppm`, `layout.json`).
pub fn cmd_viz(cfg: &RunConfig) -> Result<VizReport> {
    cfg.validate()?;
    let setup = Setup::new(cfg)?;
    let layout = build_layout(&setup.scene, &cfg.encoder.resolution(), cfg.encoder.storage)?;
    let out = &cfg.out_dir;
    create_dir(out)?;
    let img = render_voronoi(&setup.bvh, &setup.camera, &layout);
    save_image(&img, out, "voronoi")?;
    let report = VizReport {
        config_hash: cfg.config_hash(),
        layout: layout.stats(),
    };
    write_json(&out.join("layout.json"), &report)?;
    Ok(report)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeshReport {
    pub name: String,
    pub triangles: usize,
    pub vertices: usize,
    pub total_area: f64,
    pub mean_area: f64,
    /// Mean area normalized by the largest per-mesh mean.
    pub normalized_area: f32,
    /// Resolution per configured level.
    pub resolutions: Vec<u32>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatsReport {
    pub config_hash: String,
    pub triangles: usize,
    pub levels: Vec<LevelSpec>,
    pub meshes: Vec<MeshReport>,
}

pub fn scene_stats(cfg: &RunConfig, scene: &Scene) -> Result<StatsReport> {
    let res = cfg.encoder.resolution();
    let areas = mesh_mean_normalized_areas(scene)?;
    let per_level = level_resolutions(scene, &res)?;
    let meshes = scene
        .meshes()
        .iter()
        .enumerate()
        .map(|(i, m)| MeshReport {
            name: m.name.clone(),
            triangles: m.triangle_count(),
            vertices: m.vertices.len(),
            total_area: m.total_area() as f64,
            mean_area: m.mean_triangle_area() as f64,
            normalized_area: areas[i],
            resolutions: per_level.iter().map(|l| l[i]).collect(),
        })
        .collect();
    Ok(StatsReport {
        config_hash: cfg.config_hash(),
        triangles: scene.triangle_count(),
        levels: res.levels,
        meshes,
    })
}

/// `stats`: per-mesh triangle counts, areas and chosen resolutions
/// (`stats.json`).
pub fn cmd_stats(cfg: &RunConfig) -> Result<StatsReport> {
    cfg.validate()?;
    let (scene, _) = cfg.load_scene()?;
    let report = scene_stats(cfg, &scene)?;
    create_dir(&cfg.out_dir)?;
    write_json(&cfg.out_dir.join("stats.json"), &report)?;
    Ok(report)
}
