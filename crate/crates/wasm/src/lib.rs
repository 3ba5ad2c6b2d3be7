//! Browser demo bindings: a mesh-colors lattice viewer, the one-blob kernel,
//! and a small neural AO scene trained in the page.

use gate_core::encoders::{oneblob_encode, oneblob_encode_wrapped};
use gate_core::fixtures;
use gate_core::geometry::{Bvh, Scene};
use gate_core::mesh_colors::{locate, LevelSpec, ResolutionConfig, StorageMode};
use gate_core::model::{Encoding, ExtraInputs, Model};
use gate_core::nao::{mse, render_inference, render_reference, slot_color, AoOracle, AoParams, Camera, Image};
use gate_core::neural::AdamConfig;
use gate_core::training::{Trainer, TrainerConfig};
use wasm_bindgen::prelude::*;

fn js_err(e: gate_core::Error) -> JsError {
    JsError::new(&e.to_string())
}

/// RGBA image of one triangle split into its resolution-`r` lattice: every
/// pixel takes the color of its nearest lattice point. Outside is white.
#[wasm_bindgen]
pub fn lattice_image(r: u32, size: u32) -> Vec<u8> {
    let r = r.clamp(1, 32);
    let s = size as f32;
    // Corners in pixel space: bottom-left, bottom-right, top.
    let (c0, c1, c2) = ([0.04 * s, 0.92 * s], [0.96 * s, 0.92 * s], [0.5 * s, 0.08 * s]);
    let det = (c1[1] - c2[1]) * (c0[0] - c2[0]) + (c2[0] - c1[0]) * (c0[1] - c2[1]);
    let mut out = Vec::with_capacity((size * size * 4) as usize);
    for y in 0..size {
        for x in 0..size {
            let (px, py) = (x as f32 + 0.5, y as f32 + 0.5);
            let b0 = ((c1[1] - c2[1]) * (px - c2[0]) + (c2[0] - c1[0]) * (py - c2[1])) / det;
            let b1 = ((c2[1] - c0[1]) * (px - c2[0]) + (c0[0] - c2[0]) * (py - c2[1])) / det;
            let b2 = 1.0 - b0 - b1;
            if b0 < 0.0 || b1 < 0.0 || b2 < 0.0 {
                out.extend([255, 255, 255, 255]);
                continue;
            }
            let (pts, w) = locate([b0, b1, b2], r);
            let mut best = 0;
            for k in 1..3 {
                if w[k] > w[best] {
                    best = k;
                }
            }
            let c = slot_color(pts[best].ordinal(r));
            out.extend(c.map(|v| (v.clamp(0.0, 1.0) * 255.0) as u8));
            out.push(255);
        }
    }
    out
}

/// Lattice points per triangle at resolution `r`.
#[wasm_bindgen]
pub fn lattice_points(r: u32) -> u32 {
    let r = r.clamp(1, 32);
    (r + 1) * (r + 2) / 2
}

/// One-blob encoding of `x` into `bins` values; `wrapped` treats the domain
/// as periodic like an azimuth angle.
#[wasm_bindgen]
pub fn oneblob(x: f32, bins: usize, wrapped: bool) -> Vec<f32> {
    let mut out = vec![0.0; bins.max(1)];
    if wrapped {
        oneblob_encode_wrapped(x, &mut out);
    } else {
        oneblob_encode(x, &mut out);
    }
    out
}

/// Neural AO on the corner fixture, trained a few steps per animation frame.
#[wasm_bindgen]
pub struct NaoDemo {
    scene: Scene,
    bvh: Bvh,
    camera: Camera,
    ao: AoParams,
    model: Model<f32>,
    trainer: Trainer,
    reference: Option<Image>,
    last_loss: f64,
}

#[wasm_bindgen]
impl NaoDemo {
    /// `resolution` is the fixed mesh-colors resolution of the first level;
    /// a second per-vertex level is always stacked on top.
    #[wasm_bindgen(constructor)]
    pub fn new(seed: u64, resolution: u32, batch: usize) -> Result<NaoDemo, JsError> {
        let scene = fixtures::corner(4);
        let camera = fixtures::corner_camera().with_size(96, 96);
        let bvh = Bvh::build(&scene);
        let res = ResolutionConfig {
            levels: vec![LevelSpec::Fixed(resolution.clamp(1, 32)), LevelSpec::Fixed(1)],
            features_per_level: 2,
        };
        let encoding = Encoding::gate(&scene, &res, StorageMode::Shared, seed).map_err(js_err)?;
        let model = Model::new(encoding, ExtraInputs::default(), AdamConfig::default(), seed).map_err(js_err)?;
        let batch = (batch.max(4) / 4) * 4;
        let trainer = Trainer::new(
            &scene,
            TrainerConfig {
                batch_size: batch,
                seed,
                ..Default::default()
            },
        )
        .map_err(js_err)?;
        Ok(NaoDemo {
            scene,
            bvh,
            camera,
            ao: AoParams::default(),
            model,
            trainer,
            reference: None,
            last_loss: f64::NAN,
        })
    }

    pub fn width(&self) -> u32 {
        self.camera.width
    }

    pub fn height(&self) -> u32 {
        self.camera.height
    }

    pub fn iteration(&self) -> u64 {
        self.trainer.iter
    }

    pub fn loss(&self) -> f64 {
        self.last_loss
    }

    pub fn feature_params(&self) -> usize {
        self.model.encoding.param_count()
    }

    /// Runs `steps` training iterations and returns the last batch loss.
    pub fn train(&mut self, steps: u32) -> Result<f64, JsError> {
        let oracle = AoOracle::new(&self.scene, &self.bvh, &self.ao);
        for _ in 0..steps {
            self.last_loss = self.trainer.step(&mut self.model, &self.scene, &oracle).map_err(js_err)?;
        }
        Ok(self.last_loss)
    }

    /// RGBA inference image.
    pub fn render(&self) -> Result<Vec<u8>, JsError> {
        Ok(render_inference(&self.scene, &self.bvh, &self.camera, &self.model)
            .map_err(js_err)?
            .to_rgba8())
    }

    /// RGBA Monte-Carlo reference, computed on first use.
    pub fn reference(&mut self) -> Vec<u8> {
        self.reference_image().to_rgba8()
    }

    /// Image MSE of the current model against the reference.
    pub fn mse(&mut self) -> Result<f64, JsError> {
        let img = render_inference(&self.scene, &self.bvh, &self.camera, &self.model).map_err(js_err)?;
        mse(&img, self.reference_image()).map_err(js_err)
    }
}

impl NaoDemo {
    fn reference_image(&mut self) -> &Image {
        if self.reference.is_none() {
            let mut ao = self.ao;
            ao.reference_spp = 64;
            self.reference = Some(render_reference(&self.scene, &self.bvh, &self.camera, &ao, 0));
        }
        self.reference.as_ref().unwrap()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lattice_image_has_one_color_per_point() {
        let img = lattice_image(3, 128);
        assert_eq!(img.len(), 128 * 128 * 4);
        let mut colors: Vec<[u8; 3]> = img.chunks(4).map(|p| [p[0], p[1], p[2]]).filter(|c| *c != [255; 3]).collect();
        colors.sort();
        colors.dedup();
        assert_eq!(colors.len() as u32, lattice_points(3));
    }

    #[test]
    fn oneblob_sums_to_one_inside() {
        let v = oneblob(0.5, 8, false);
        assert!((v.iter().sum::<f32>() - 1.0).abs() < 1e-5);
        assert!((oneblob(0.0, 8, true).iter().sum::<f32>() - 1.0).abs() < 1e-5);
    }

    #[test]
    fn demo_trains_and_improves() {
        let mut d = NaoDemo::new(3, 4, 512).unwrap();
        let before = d.mse().unwrap();
        d.train(40).unwrap();
        assert_eq!(d.iteration(), 40);
        let after = d.mse().unwrap();
        assert!(after < before, "{before} -> {after}");
        assert_eq!(d.render().unwrap().len(), 96 * 96 * 4);
    }
}
