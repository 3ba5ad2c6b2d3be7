//! Run configuration shared by every command.
//!
//! ```json
//! {
//!   "scene": { "fixture": "corner" },
//!   "encoder": { "encoder": "gate", "levels": [{ "adaptive": 1.0 }, { "fixed": 1 }],
//!                "features": 2, "R_scale": 1.0, "extra_inputs": [] },
//!   "trainer": { "batch_size": 4096, "iterations": 128 },
//!   "seed": 7
//! }
//! ```

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::encoders::HashGridConfig;
use crate::geometry::{load_manifest, Scene};
use crate::mesh_colors::{LevelSpec, ResolutionConfig, StorageMode};
use crate::model::{EncoderKind, ExtraInputs};
use crate::nao::{AoParams, Camera};
use crate::neural::AdamConfig;
use crate::training::TrainerConfig;
use crate::{fixtures, Error, Result};

/// First 16 hex digits of a digest.
pub fn short_hex(bytes: &[u8]) -> String {
    bytes.iter().take(8).map(|b| format!("{b:02x}")).collect()
}

/// Hash of the canonical JSON serialization of `v`.
pub fn hash_json<T: Serialize + ?Sized>(v: &T) -> String {
    let json = serde_json::to_vec(v).expect("config types serialize");
    short_hex(&Sha256::digest(&json))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SceneSource {
    Fixture(String),
    /// JSON manifest, see [`crate::geometry::SceneManifest`].
    Manifest(PathBuf),
}

impl Default for SceneSource {
    fn default() -> Self {
        SceneSource::Fixture("corner".into())
    }
}

impl SceneSource {
    pub fn load(&self) -> Result<(Scene, Camera)> {
        match self {
            SceneSource::Fixture(name) => fixtures::load(name),
            SceneSource::Manifest(path) => load_manifest(path),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExtraInput {
    Normal,
    Albedo,
    Direction,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EncoderConfig {
    pub encoder: EncoderKind,
    /// GATE resolution levels.
    pub levels: Vec<LevelSpec>,
    /// GATE features per level.
    pub features: usize,
    /// Multiplier applied to every adaptive level's scale.
    #[serde(rename = "R_scale")]
    pub r_scale: f32,
    pub storage: StorageMode,
    /// Hash-grid entries per hashed level; overrides `hashgrid.table_size`.
    pub table_size: Option<u32>,
    pub hashgrid: HashGridConfig,
    /// Defaults to none for GATE and `[normal]` for the hash grid.
    pub extra_inputs: Option<Vec<ExtraInput>>,
    pub oneblob_bins: usize,
}

impl Default for EncoderConfig {
    fn default() -> Self {
        let res = ResolutionConfig::default();
        EncoderConfig {
            encoder: EncoderKind::Gate,
            levels: res.levels,
            features: res.features_per_level,
            r_scale: 1.0,
            storage: StorageMode::Shared,
            table_size: None,
            hashgrid: HashGridConfig::default(),
            extra_inputs: None,
            oneblob_bins: 4,
        }
    }
}

impl EncoderConfig {
    pub fn resolution(&self) -> ResolutionConfig {
        ResolutionConfig {
            levels: self
                .levels
                .iter()
                .map(|l| match *l {
                    LevelSpec::Adaptive(s) => LevelSpec::Adaptive(s * self.r_scale),
                    fixed => fixed,
                })
                .collect(),
            features_per_level: self.features,
        }
    }

    pub fn hashgrid(&self) -> HashGridConfig {
        let mut cfg = self.hashgrid.clone();
        if let Some(t) = self.table_size {
            cfg.table_size = t;
        }
        cfg
    }

    pub fn extras(&self) -> ExtraInputs {
        let list = match (&self.extra_inputs, self.encoder) {
            (Some(l), _) => l.clone(),
            (None, EncoderKind::Gate) => vec![],
            (None, EncoderKind::Hashgrid) => vec![ExtraInput::Normal],
        };
        ExtraInputs {
            normal: list.contains(&ExtraInput::Normal),
            albedo: list.contains(&ExtraInput::Albedo),
            direction: list.contains(&ExtraInput::Direction),
            bins: self.oneblob_bins,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.oneblob_bins < 2 {
            return Err(Error::InvalidConfig("one-blob needs at least 2 bins".into()));
        }
        if !(self.r_scale > 0.0 && self.r_scale.is_finite()) {
            return Err(Error::InvalidConfig(format!("R_scale must be positive, got {}", self.r_scale)));
        }
        match self.encoder {
            EncoderKind::Gate => self.resolution().validate(),
            EncoderKind::Hashgrid => self.hashgrid().validate(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    pub scene: SceneSource,
    pub encoder: EncoderConfig,
    /// `trainer.seed` is ignored; the run seed below is used.
    pub trainer: TrainerConfig,
    pub ao: AoParams,
    pub adam: AdamConfig,
    /// Overrides the scene's camera.
    pub camera: Option<Camera>,
    /// Log (and render an inference image) every `log_every` iterations;
    /// 0 logs losses only.
    pub log_every: u64,
    pub out_dir: PathBuf,
    pub seed: u64,
    pub deterministic: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            scene: SceneSource::default(),
            encoder: EncoderConfig::default(),
            trainer: TrainerConfig::default(),
            ao: AoParams::default(),
            adam: AdamConfig::default(),
            camera: None,
            log_every: 0,
            out_dir: PathBuf::from("out"),
            seed: 0,
            deterministic: false,
        }
    }
}

/// Fields that determine the trained model.
#[derive(Serialize)]
struct HashedPart<'a> {
    scene: &'a SceneSource,
    encoder: &'a EncoderConfig,
    trainer: TrainerConfig,
    ao: &'a AoParams,
    adam: &'a AdamConfig,
    seed: u64,
}

impl RunConfig {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(format!("reading {}", path.display()), e))?;
        let mut cfg: RunConfig = serde_json::from_str(&text)?;
        // Manifest paths are relative to the config file.
        if let SceneSource::Manifest(p) = &mut cfg.scene {
            if p.is_relative() {
                if let Some(dir) = path.parent() {
                    *p = dir.join(&*p);
                }
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let json = serde_json::to_string_pretty(self)?;
        std::fs::write(path, json).map_err(|e| Error::io(format!("writing {}", path.display()), e))
    }

    pub fn validate(&self) -> Result<()> {
        self.encoder.validate()?;
        self.trainer_config().validate()?;
        self.ao.validate()?;
        self.adam.validate()?;
        if let Some(c) = &self.camera {
            c.validate()?;
        }
        Ok(())
    }

    pub fn trainer_config(&self) -> TrainerConfig {
        TrainerConfig {
            seed: self.seed,
            ..self.trainer
        }
    }

    /// Provenance hash of everything that shapes the trained model. The
    /// iteration count, camera, output location and threading are excluded.
    pub fn config_hash(&self) -> String {
        hash_json(&HashedPart {
            scene: &self.scene,
            encoder: &self.encoder,
            trainer: TrainerConfig {
                iterations: 0,
                seed: 0,
                ..self.trainer
            },
            ao: &self.ao,
            adam: &self.adam,
            seed: self.seed,
        })
    }

    pub fn load_scene(&self) -> Result<(Scene, Camera)> {
        let (scene, camera) = self.scene.load()?;
        Ok((scene, self.camera.unwrap_or(camera)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        let mut cfg = RunConfig::default();
        cfg.seed = 42;
        cfg.encoder.table_size = Some(1000);
        cfg.encoder.extra_inputs = Some(vec![ExtraInput::Albedo]);
        cfg.camera = Some(fixtures::quad_camera());
        let json = serde_json::to_string(&cfg).unwrap();
        let back: RunConfig = serde_json::from_str(&json).unwrap();
        assert_eq!(back, cfg);
        assert_eq!(serde_json::to_string(&back).unwrap(), json);
    }

    #[test]
    fn partial_json_and_hash() {
        let cfg: RunConfig = serde_json::from_str(
            r#"{"scene": {"fixture": "quad"}, "encoder": {"encoder": "hashgrid", "R_scale": 2.0}, "seed": 3}"#,
        )
        .unwrap();
        assert_eq!(cfg.encoder.encoder, EncoderKind::Hashgrid);
        assert!(cfg.encoder.extras().normal);
        assert_eq!(cfg.trainer_config().seed, 3);
        let mut other = cfg.clone();
        other.trainer.iterations = 9999;
        other.out_dir = "elsewhere".into();
        assert_eq!(cfg.config_hash(), other.config_hash());
        other.seed = 4;
        assert_ne!(cfg.config_hash(), other.config_hash());
        assert_eq!(cfg.config_hash().len(), 16);
    }

    #[test]
    fn r_scale_multiplies_adaptive_levels() {
        let enc = EncoderConfig {
            r_scale: 0.5,
            ..Default::default()
        };
        assert_eq!(enc.resolution().levels, vec![LevelSpec::Adaptive(0.5), LevelSpec::Fixed(1)]);
        assert!(!enc.extras().normal);
    }
}
