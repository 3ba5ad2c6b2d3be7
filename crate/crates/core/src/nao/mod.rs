//! Neural ambient occlusion: the ray-traced AO oracle, reference and
//! inference renders, the Voronoi feature-density view, and image metrics.

mod ao;
mod camera;
mod image;
mod metrics;
mod render;

pub use ao::{ao_oracle, cosine_hemisphere, AoOracle, AoParams};
pub use camera::Camera;
pub use image::Image;
pub use metrics::{mse, psnr, PSNR_CAP_DB};
pub use render::{primary_hits, render_inference, render_reference, render_voronoi, slot_color};
