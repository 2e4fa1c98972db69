//! 8-bit PNG input and output.

use std::path::Path;

use anyhow::{bail, Context};
use eggd_core::color::RgbImage;
use eggd_core::image::{Channel, Planar};
use eggd_core::metrics::quantize;
use image::{DynamicImage, GrayImage, ImageBuffer, Luma, Rgb};

/// A square image as read from disk.
#[derive(Clone, Debug, PartialEq)]
pub enum Picture {
    Gray(Channel),
    Rgb(RgbImage),
}

impl Picture {
    pub fn side(&self) -> usize {
        match self {
            Picture::Gray(c) => c.side(),
            Picture::Rgb(img) => img.side(),
        }
    }

    pub fn is_gray(&self) -> bool {
        matches!(self, Picture::Gray(_))
    }

    /// Every value rounded half up to the 8-bit grid, as it would be
    /// stored on disk.
    pub fn quantized(&self) -> Picture {
        let q = |_, _, v: f64| f64::from(quantize(v));
        match self {
            Picture::Gray(c) => Picture::Gray(c.map_values(q)),
            Picture::Rgb(img) => Picture::Rgb(img.map_values(q)),
        }
    }
}

fn side_of(width: u32, height: u32, path: &Path) -> anyhow::Result<usize> {
    if width != height {
        bail!(
            "{} is {width}x{height}; only square images are supported",
            path.display()
        );
    }
    if width == 0 {
        bail!("{} is empty", path.display());
    }
    Ok(width as usize)
}

pub fn read_picture(path: &Path) -> anyhow::Result<Picture> {
    let img = image::open(path).with_context(|| format!("cannot read {}", path.display()))?;
    let gray = matches!(
        img,
        DynamicImage::ImageLuma8(_) | DynamicImage::ImageLuma16(_)
    );
    if gray {
        let buf = img.to_luma8();
        let side = side_of(buf.width(), buf.height(), path)?;
        let data = buf.pixels().map(|p| f64::from(p.0[0])).collect();
        return Ok(Picture::Gray(Channel::new(side, data)?));
    }
    let buf = img.to_rgb8();
    let side = side_of(buf.width(), buf.height(), path)?;
    let mut planes = [const { Vec::new() }; 3];
    for p in buf.pixels() {
        for (plane, v) in planes.iter_mut().zip(p.0) {
            plane.push(f64::from(v));
        }
    }
    let [r, g, b] = planes;
    Ok(Picture::Rgb(RgbImage::new(
        Channel::new(side, r)?,
        Channel::new(side, g)?,
        Channel::new(side, b)?,
    )?))
}

pub fn write_picture(path: &Path, picture: &Picture) -> anyhow::Result<()> {
    let side = picture.side() as u32;
    let result = match picture {
        Picture::Gray(c) => {
            let buf: GrayImage = ImageBuffer::from_fn(side, side, |x, y| {
                Luma([quantize(c.get(y as usize, x as usize))])
            });
            buf.save(path)
        }
        Picture::Rgb(img) => {
            let buf: ImageBuffer<Rgb<u8>, Vec<u8>> = ImageBuffer::from_fn(side, side, |x, y| {
                let k = y as usize * side as usize + x as usize;
                Rgb(img.pixel(k).map(quantize))
            });
            buf.save(path)
        }
    };
    result.with_context(|| format!("cannot write {}", path.display()))
}
