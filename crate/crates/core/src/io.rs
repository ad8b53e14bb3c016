//! File formats: 8-bit grayscale PNG/PGM for images, 0/255 PNG for masks,
//! 16-bit grayscale PNG for label maps, and a raw little-endian float dump
//! for level-set fields.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use image::codecs::pnm::{PnmEncoder, PnmSubtype, SampleEncoding};
use image::{DynamicImage, ExtendedColorType, ImageBuffer, ImageEncoder, Luma};

use crate::error::{Error, Result};
use crate::levelset::LevelSetField;
use crate::raster::{BinaryMask, GrayImage, LabelMap};

/// Load an 8-bit grayscale image (PNG or PGM); other color types are
/// converted to luma.
pub fn load_gray(path: impl AsRef<Path>) -> Result<GrayImage> {
    let img = image::open(path.as_ref())?.into_luma8();
    let (w, h) = img.dimensions();
    GrayImage::from_raw(w as usize, h as usize, img.into_raw())
}

/// Save as PNG or binary PGM (P5), chosen by the file extension.
pub fn save_gray(path: impl AsRef<Path>, img: &GrayImage) -> Result<()> {
    let path = path.as_ref();
    let is_pgm = path
        .extension()
        .map(|e| e.eq_ignore_ascii_case("pgm"))
        .unwrap_or(false);
    if is_pgm {
        let file = BufWriter::new(File::create(path)?);
        let encoder =
            PnmEncoder::new(file).with_subtype(PnmSubtype::Graymap(SampleEncoding::Binary));
        encoder.write_image(
            img.as_slice(),
            img.width() as u32,
            img.height() as u32,
            ExtendedColorType::L8,
        )?;
        Ok(())
    } else {
        image::save_buffer(
            path,
            img.as_slice(),
            img.width() as u32,
            img.height() as u32,
            ExtendedColorType::L8,
        )?;
        Ok(())
    }
}

/// Load a 0/255 mask; any value above 127 counts as foreground.
pub fn load_mask(path: impl AsRef<Path>) -> Result<BinaryMask> {
    let img = load_gray(path)?;
    Ok(BinaryMask::from_fn(img.width(), img.height(), |x, y| img.get(x, y) > 127))
}

/// Save a mask as an 8-bit 0/255 PNG.
pub fn save_mask(path: impl AsRef<Path>, mask: &BinaryMask) -> Result<()> {
    let data: Vec<u8> = mask.as_slice().iter().map(|&b| if b { 255 } else { 0 }).collect();
    image::save_buffer(
        path.as_ref(),
        &data,
        mask.width() as u32,
        mask.height() as u32,
        ExtendedColorType::L8,
    )?;
    Ok(())
}

/// Save a label map as 16-bit grayscale PNG, one label per level.
pub fn save_label_map(path: impl AsRef<Path>, labels: &LabelMap) -> Result<()> {
    if labels.count() > u16::MAX as usize {
        return Err(Error::InvalidInput(format!(
            "{} labels exceed the 16-bit range",
            labels.count()
        )));
    }
    let data: Vec<u16> = labels.as_slice().iter().map(|&l| l as u16).collect();
    let buf: ImageBuffer<Luma<u16>, Vec<u16>> =
        ImageBuffer::from_raw(labels.width() as u32, labels.height() as u32, data)
            .expect("buffer length matches dimensions");
    DynamicImage::ImageLuma16(buf).save(path.as_ref())?;
    Ok(())
}

/// Load a label map written by [`save_label_map`]. Labels are expected to be
/// contiguous `1..=count`; the count is recovered as the maximum level.
pub fn load_label_map(path: impl AsRef<Path>) -> Result<LabelMap> {
    let img = image::open(path.as_ref())?.into_luma16();
    let (w, h) = (img.width() as usize, img.height() as usize);
    let labels: Vec<u32> = img.into_raw().into_iter().map(|v| v as u32).collect();
    let count = labels.iter().copied().max().unwrap_or(0) as usize;
    Ok(LabelMap::from_raw(w, h, labels, count))
}

/// Debug dump of a level-set field: `width: u32 LE`, `height: u32 LE`, then
/// row-major `f32 LE` samples.
pub fn save_phi_f32(path: impl AsRef<Path>, phi: &LevelSetField) -> Result<()> {
    let mut out = BufWriter::new(File::create(path.as_ref())?);
    out.write_all(&(phi.width() as u32).to_le_bytes())?;
    out.write_all(&(phi.height() as u32).to_le_bytes())?;
    for &v in phi.values() {
        out.write_all(&(v as f32).to_le_bytes())?;
    }
    out.flush()?;
    Ok(())
}
