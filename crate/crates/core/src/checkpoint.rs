//! Binary little-endian checkpoints.
//!
//! Layout: magic, version, config hash, encoder description, optimizer
//! settings, MLP parameters and moments, feature values and moments (plus
//! per-slot step counts for GATE), per-triangle counters. The feature layout
//! itself is rebuilt from the scene on load.

use std::io::{Read, Write};
use std::path::Path;

use byteorder::{LittleEndian as LE, ReadBytesExt, WriteBytesExt};
use glam::Vec3;

use crate::encoders::HashGridConfig;
use crate::geometry::{Aabb, Scene};
use crate::mesh_colors::{LevelSpec, ResolutionConfig, StorageMode};
use crate::model::{Encoding, ExtraInputs, Model};
use crate::neural::AdamConfig;
use crate::training::TriangleTrainState;
use crate::{Error, Result};

const MAGIC: &[u8; 8] = b"GATECKPT";
const VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub config_hash: String,
    pub iteration: u64,
    pub model: Model<f32>,
    pub state: TriangleTrainState,
}

fn corrupt(msg: impl Into<String>) -> Error {
    Error::Checkpoint(msg.into())
}

fn io(e: std::io::Error) -> Error {
    if e.kind() == std::io::ErrorKind::UnexpectedEof {
        corrupt("truncated file")
    } else {
        Error::io("checkpoint", e)
    }
}

fn write_f32s(w: &mut impl Write, v: &[f32]) -> std::io::Result<()> {
    w.write_u64::<LE>(v.len() as u64)?;
    for x in v {
        w.write_f32::<LE>(*x)?;
    }
    Ok(())
}

fn read_len(r: &mut impl Read, max: usize) -> Result<usize> {
    let n = r.read_u64::<LE>().map_err(io)? as usize;
    if n > max {
        return Err(corrupt(format!("array length {n} exceeds {max}")));
    }
    Ok(n)
}

fn read_f32s(r: &mut impl Read, expect: usize) -> Result<Vec<f32>> {
    let n = read_len(r, expect)?;
    if n != expect {
        return Err(corrupt(format!("expected {expect} values, found {n}")));
    }
    let mut v = vec![0f32; n];
    r.read_f32_into::<LE>(&mut v).map_err(io)?;
    Ok(v)
}

fn read_u32s(r: &mut impl Read, expect: usize) -> Result<Vec<u32>> {
    let n = read_len(r, expect)?;
    if n != expect {
        return Err(corrupt(format!("expected {expect} counters, found {n}")));
    }
    let mut v = vec![0u32; n];
    r.read_u32_into::<LE>(&mut v).map_err(io)?;
    Ok(v)
}

fn write_vec3(w: &mut impl Write, v: Vec3) -> std::io::Result<()> {
    for c in v.to_array() {
        w.write_f32::<LE>(c)?;
    }
    Ok(())
}

fn read_vec3(r: &mut impl Read) -> Result<Vec3> {
    let mut a = [0f32; 3];
    r.read_f32_into::<LE>(&mut a).map_err(io)?;
    Ok(Vec3::from(a))
}

impl Checkpoint {
    pub fn write(&self, mut w: impl Write) -> Result<()> {
        self.write_inner(&mut w).map_err(|e| Error::io("writing checkpoint", e))
    }

    fn write_inner(&self, w: &mut impl Write) -> std::io::Result<()> {
        let m = &self.model;
        w.write_all(MAGIC)?;
        w.write_u32::<LE>(VERSION)?;
        w.write_u32::<LE>(self.config_hash.len() as u32)?;
        w.write_all(self.config_hash.as_bytes())?;
        w.write_u64::<LE>(self.iteration)?;
        w.write_u64::<LE>(m.step)?;
        for x in [m.adam.lr, m.adam.beta1, m.adam.beta2, m.adam.epsilon] {
            w.write_f64::<LE>(x)?;
        }
        let e = &m.extras;
        w.write_u8(e.normal as u8 | (e.albedo as u8) << 1 | (e.direction as u8) << 2)?;
        w.write_u32::<LE>(e.bins as u32)?;

        match &m.encoding {
            Encoding::Gate { layout, .. } => {
                w.write_u8(0)?;
                w.write_u8(match layout.mode {
                    StorageMode::Shared => 0,
                    StorageMode::Flat => 1,
                })?;
                w.write_u32::<LE>(layout.features_per_level as u32)?;
                w.write_u32::<LE>(layout.levels.len() as u32)?;
                for lv in &layout.levels {
                    match lv.spec {
                        LevelSpec::Fixed(r) => {
                            w.write_u8(0)?;
                            w.write_u32::<LE>(r)?;
                        }
                        LevelSpec::Adaptive(s) => {
                            w.write_u8(1)?;
                            w.write_f32::<LE>(s)?;
                        }
                    }
                }
                w.write_u32::<LE>(layout.total_slots)?;
            }
            Encoding::HashGrid { grid, bounds } => {
                w.write_u8(1)?;
                let c = &grid.config;
                w.write_u32::<LE>(c.levels as u32)?;
                w.write_u32::<LE>(c.features_per_level as u32)?;
                w.write_u32::<LE>(c.base_resolution)?;
                w.write_f32::<LE>(c.growth_factor)?;
                w.write_u32::<LE>(c.table_size)?;
                write_vec3(w, bounds.min)?;
                write_vec3(w, bounds.max)?;
            }
        }

        w.write_u32::<LE>(m.mlp.input_width() as u32)?;
        w.write_u32::<LE>(m.mlp.output_width() as u32)?;
        write_f32s(w, &m.mlp.params)?;
        write_f32s(w, &m.mlp_m)?;
        write_f32s(w, &m.mlp_v)?;

        match &m.encoding {
            Encoding::Gate { store, .. } => {
                write_f32s(w, &store.values)?;
                write_f32s(w, &store.adam_m)?;
                write_f32s(w, &store.adam_v)?;
                w.write_u64::<LE>(store.slot_step_count.len() as u64)?;
                for c in &store.slot_step_count {
                    w.write_u32::<LE>(*c)?;
                }
            }
            Encoding::HashGrid { grid, .. } => {
                write_f32s(w, &grid.values)?;
                write_f32s(w, &grid.adam_m)?;
                write_f32s(w, &grid.adam_v)?;
            }
        }

        let (counts, last, last_iter) = self.state.to_parts();
        w.write_u64::<LE>(last_iter)?;
        w.write_u64::<LE>(counts.len() as u64)?;
        for c in &counts {
            w.write_u32::<LE>(*c)?;
        }
        for l in &last {
            w.write_u64::<LE>(*l)?;
        }
        Ok(())
    }

    /// Reads a checkpoint written for `scene`.
    pub fn read(mut r: impl Read, scene: &Scene) -> Result<Checkpoint> {
        let r = &mut r;
        let mut magic = [0u8; 8];
        r.read_exact(&mut magic).map_err(io)?;
        if &magic != MAGIC {
            return Err(corrupt("not a checkpoint file"));
        }
        let version = r.read_u32::<LE>().map_err(io)?;
        if version != VERSION {
            return Err(corrupt(format!("unsupported version {version}")));
        }
        let hlen = r.read_u32::<LE>().map_err(io)? as usize;
        if hlen > 256 {
            return Err(corrupt("config hash too long"));
        }
        let mut hash = vec![0u8; hlen];
        r.read_exact(&mut hash).map_err(io)?;
        let config_hash = String::from_utf8(hash).map_err(|_| corrupt("config hash is not UTF-8"))?;
        let iteration = r.read_u64::<LE>().map_err(io)?;
        let step = r.read_u64::<LE>().map_err(io)?;
        let mut a = [0f64; 4];
        r.read_f64_into::<LE>(&mut a).map_err(io)?;
        let adam = AdamConfig {
            lr: a[0],
            beta1: a[1],
            beta2: a[2],
            epsilon: a[3],
        };
        let flags = r.read_u8().map_err(io)?;
        let extras = ExtraInputs {
            normal: flags & 1 != 0,
            albedo: flags & 2 != 0,
            direction: flags & 4 != 0,
            bins: r.read_u32::<LE>().map_err(io)? as usize,
        };

        let mut encoding: Encoding<f32> = match r.read_u8().map_err(io)? {
            0 => {
                let mode = match r.read_u8().map_err(io)? {
                    0 => StorageMode::Shared,
                    1 => StorageMode::Flat,
                    m => return Err(corrupt(format!("unknown storage mode {m}"))),
                };
                let features_per_level = r.read_u32::<LE>().map_err(io)? as usize;
                let n = r.read_u32::<LE>().map_err(io)? as usize;
                if n > 16 {
                    return Err(corrupt("too many levels"));
                }
                let mut levels = Vec::with_capacity(n);
                for _ in 0..n {
                    levels.push(match r.read_u8().map_err(io)? {
                        0 => LevelSpec::Fixed(r.read_u32::<LE>().map_err(io)?),
                        1 => LevelSpec::Adaptive(r.read_f32::<LE>().map_err(io)?),
                        t => return Err(corrupt(format!("unknown level tag {t}"))),
                    });
                }
                let total = r.read_u32::<LE>().map_err(io)?;
                let res = ResolutionConfig {
                    levels,
                    features_per_level,
                };
                res.validate()?;
                let enc = Encoding::gate(scene, &res, mode, 0)?;
                if let Encoding::Gate { layout, .. } = &enc {
                    if layout.total_slots != total {
                        return Err(corrupt(format!(
                            "checkpoint has {total} feature slots, scene layout has {}",
                            layout.total_slots
                        )));
                    }
                }
                enc
            }
            1 => {
                let cfg = HashGridConfig {
                    levels: r.read_u32::<LE>().map_err(io)? as usize,
                    features_per_level: r.read_u32::<LE>().map_err(io)? as usize,
                    base_resolution: r.read_u32::<LE>().map_err(io)?,
                    growth_factor: r.read_f32::<LE>().map_err(io)?,
                    table_size: r.read_u32::<LE>().map_err(io)?,
                };
                if cfg.levels > 64 {
                    return Err(corrupt("too many hash-grid levels"));
                }
                let min = read_vec3(r)?;
                let max = read_vec3(r)?;
                let mut enc = Encoding::hashgrid(scene, cfg, 0)?;
                if let Encoding::HashGrid { bounds, .. } = &mut enc {
                    *bounds = Aabb { min, max };
                }
                enc
            }
            k => return Err(corrupt(format!("unknown encoder tag {k}"))),
        };

        let d_in = r.read_u32::<LE>().map_err(io)? as usize;
        let d_out = r.read_u32::<LE>().map_err(io)? as usize;
        if d_in != encoding.width() + extras.width() {
            return Err(corrupt(format!(
                "MLP input width {d_in} does not match the encoder ({})",
                encoding.width() + extras.width()
            )));
        }
        let mut model = Model::new(encoding.clone(), extras, adam, 0)?;
        if d_out != model.mlp.output_width() {
            return Err(corrupt(format!("unsupported MLP output width {d_out}")));
        }
        let np = model.mlp.param_count();
        model.mlp.params = read_f32s(r, np)?;
        model.mlp_m = read_f32s(r, np)?;
        model.mlp_v = read_f32s(r, np)?;
        model.step = step;

        match &mut encoding {
            Encoding::Gate { store, .. } => {
                let n = store.values.len();
                store.values = read_f32s(r, n)?;
                store.adam_m = read_f32s(r, n)?;
                store.adam_v = read_f32s(r, n)?;
                store.slot_step_count = read_u32s(r, store.slot_step_count.len())?;
            }
            Encoding::HashGrid { grid, .. } => {
                let n = grid.values.len();
                grid.values = read_f32s(r, n)?;
                grid.adam_m = read_f32s(r, n)?;
                grid.adam_v = read_f32s(r, n)?;
            }
        }
        model.encoding = encoding;

        let last_iter = r.read_u64::<LE>().map_err(io)?;
        let tris = scene.triangle_count();
        let counts = read_u32s(r, tris)?;
        let mut last = vec![0u64; tris];
        r.read_u64_into::<LE>(&mut last).map_err(io)?;
        let state = TriangleTrainState::from_parts(scene, counts, last, last_iter)?;
        let mut rest = [0u8; 1];
        if r.read(&mut rest).map_err(io)? != 0 {
            return Err(corrupt("trailing bytes"));
        }
        Ok(Checkpoint {
            config_hash,
            iteration,
            model,
            state,
        })
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut buf = Vec::new();
        self.write(&mut buf).expect("writing to memory");
        buf
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_bytes()).map_err(|e| Error::io(format!("writing {}", path.display()), e))
    }

    pub fn load(path: impl AsRef<Path>, scene: &Scene) -> Result<Checkpoint> {
        let path = path.as_ref();
        let bytes = std::fs::read(path).map_err(|e| Error::io(format!("reading {}", path.display()), e))?;
        Checkpoint::read(&bytes[..], scene)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::model::Encoding;
    use crate::training::{AnalyticOracle, Trainer, TrainerConfig};

    fn trained(scene: &Scene, enc: Encoding<f32>) -> Checkpoint {
        let mut model = Model::new(enc, ExtraInputs::default(), AdamConfig::default(), 1).unwrap();
        let mut tr = Trainer::new(scene, TrainerConfig { batch_size: 64, ..Default::default() }).unwrap();
        let oracle = AnalyticOracle(|p: Vec3| p.x);
        for _ in 0..3 {
            tr.step(&mut model, scene, &oracle).unwrap();
        }
        Checkpoint {
            config_hash: "0123456789abcdef".into(),
            iteration: tr.iter,
            model,
            state: tr.state,
        }
    }

    #[test]
    fn exact_round_trip() {
        let scene = fixtures::corner(3);
        let encs = [
            Encoding::gate(&scene, &ResolutionConfig::default(), StorageMode::Shared, 1).unwrap(),
            Encoding::gate(&scene, &ResolutionConfig::default(), StorageMode::Flat, 1).unwrap(),
            Encoding::hashgrid(&scene, HashGridConfig { table_size: 512, ..Default::default() }, 1).unwrap(),
        ];
        for enc in encs {
            let ck = trained(&scene, enc);
            let bytes = ck.to_bytes();
            let back = Checkpoint::read(&bytes[..], &scene).unwrap();
            assert_eq!(back, ck);
            assert_eq!(back.to_bytes(), bytes);
        }
    }

    #[test]
    fn rejects_corruption() {
        let scene = fixtures::corner(3);
        let enc = Encoding::gate(&scene, &ResolutionConfig::default(), StorageMode::Shared, 1).unwrap();
        let bytes = trained(&scene, enc).to_bytes();
        assert!(Checkpoint::read(&bytes[..bytes.len() - 3], &scene).is_err());
        let mut extra = bytes.clone();
        extra.push(0);
        assert!(Checkpoint::read(&extra[..], &scene).is_err());
        assert!(Checkpoint::read(&b"GATECKPX"[..], &scene).is_err());
        assert!(Checkpoint::read(&bytes[..], &fixtures::corner(4)).is_err());
    }
}
