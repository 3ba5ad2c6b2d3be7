use std::io::{Read, Write};
use std::path::Path;

use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};

use crate::{Error, Result};

const RAW_MAGIC: &[u8; 8] = b"GATEIMG1";

/// Linear RGB image, row-major from the top-left.
#[derive(Debug, Clone, PartialEq)]
pub struct Image {
    pub width: u32,
    pub height: u32,
    pub pixels: Vec<[f32; 3]>,
}

impl Image {
    pub fn filled(width: u32, height: u32, value: f32) -> Image {
        Image {
            width,
            height,
            pixels: vec![[value; 3]; width as usize * height as usize],
        }
    }

    pub fn from_gray(width: u32, height: u32, gray: &[f32]) -> Image {
        assert_eq!(gray.len(), width as usize * height as usize);
        Image {
            width,
            height,
            pixels: gray.iter().map(|&g| [g; 3]).collect(),
        }
    }

    pub fn get(&self, x: u32, y: u32) -> [f32; 3] {
        self.pixels[(y * self.width + x) as usize]
    }

    /// 8-bit sRGB-ish encoding (gamma 2.2), values clamped to `[0,1]`.
    pub fn to_rgb8(&self) -> Vec<u8> {
        self.pixels
            .iter()
            .flat_map(|p| p.map(|c| (c.clamp(0.0, 1.0).powf(1.0 / 2.2) * 255.0).round() as u8))
            .collect()
    }

    pub fn to_rgba8(&self) -> Vec<u8> {
        self.to_rgb8()
            .chunks_exact(3)
            .flat_map(|c| [c[0], c[1], c[2], 255])
            .collect()
    }

    pub fn write_ppm(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut bytes = format!("P6\n{} {}\n255\n", self.width, self.height).into_bytes();
        bytes.extend(self.to_rgb8());
        std::fs::write(path, bytes).map_err(|e| Error::io(format!("writing {}", path.display()), e))
    }

    #[cfg(feature = "png")]
    pub fn write_png(&self, path: impl AsRef<Path>) -> Result<()> {
        image::save_buffer(path.as_ref(), &self.to_rgb8(), self.width, self.height, image::ColorType::Rgb8)?;
        Ok(())
    }

    /// Lossless float dump used by the reference cache.
    pub fn write_raw(&self, mut w: impl Write) -> std::io::Result<()> {
        w.write_all(RAW_MAGIC)?;
        w.write_u32::<LittleEndian>(self.width)?;
        w.write_u32::<LittleEndian>(self.height)?;
        for p in &self.pixels {
            for c in p {
                w.write_f32::<LittleEndian>(*c)?;
            }
        }
        Ok(())
    }

    pub fn read_raw(mut r: impl Read) -> std::io::Result<Image> {
        let bad = |m: &str| std::io::Error::new(std::io::ErrorKind::InvalidData, m.to_string());
        let mut magic = [0u8; 8];
        r.read_exact(&mut magic)?;
        if &magic != RAW_MAGIC {
            return Err(bad("not a raw image"));
        }
        let width = r.read_u32::<LittleEndian>()?;
        let height = r.read_u32::<LittleEndian>()?;
        let n = width as usize * height as usize;
        let mut pixels = Vec::with_capacity(n);
        for _ in 0..n {
            let mut p = [0f32; 3];
            r.read_f32_into::<LittleEndian>(&mut p)?;
            pixels.push(p);
        }
        Ok(Image { width, height, pixels })
    }
}
