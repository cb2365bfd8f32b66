//! 16-bit single-channel depth rasters in millimeters (0 = no return).

use std::path::Path;

use image::{DynamicImage, ImageBuffer, ImageFormat, ImageReader, Luma};

use crate::error::{Error, Result};
use crate::error_model::{DepthFrame, INVALID_DEPTH};
use crate::io::atomic_write;

/// Largest depth representable in a 16-bit millimeter raster.
pub const MAX_RASTER_DEPTH: f64 = u16::MAX as f64 / 1000.0;

/// Reads a 16-bit grayscale PNG or PNM depth image.
pub fn read_depth_frame(path: impl AsRef<Path>) -> Result<DepthFrame> {
    let path = path.as_ref();
    let reader = ImageReader::open(path)
        .map_err(|e| Error::io(path, e))?
        .with_guessed_format()
        .map_err(|e| Error::io(path, e))?;
    if reader.format().is_none() {
        return Err(Error::UnsupportedFormat {
            path: path.into(),
            reason: "unrecognized image container".into(),
        });
    }
    let img = reader.decode().map_err(|e| match e {
        image::ImageError::Unsupported(u) => Error::UnsupportedFormat {
            path: path.into(),
            reason: u.to_string(),
        },
        other => Error::CorruptFile {
            path: path.into(),
            reason: other.to_string(),
        },
    })?;
    let DynamicImage::ImageLuma16(buf) = img else {
        return Err(Error::UnsupportedFormat {
            path: path.into(),
            reason: format!(
                "expected 16-bit single-channel depth, found {:?}",
                img.color()
            ),
        });
    };
    let (w, h) = buf.dimensions();
    let depths = buf
        .into_raw()
        .into_iter()
        .map(|mm| if mm == 0 { INVALID_DEPTH } else { mm as f64 / 1000.0 })
        .collect();
    DepthFrame::new(w, h, depths)
}

/// Encodes a frame as millimeters (rounded). Depths that do not fit the
/// 16-bit range are stored as 0.
pub fn encode_depth_png(frame: &DepthFrame) -> Result<Vec<u8>> {
    let raw: Vec<u16> = frame
        .depths()
        .iter()
        .map(|&z| {
            let mm = (z * 1000.0).round();
            if z == INVALID_DEPTH || !(1.0..=u16::MAX as f64).contains(&mm) {
                0
            } else {
                mm as u16
            }
        })
        .collect();
    let buf: ImageBuffer<Luma<u16>, Vec<u16>> =
        ImageBuffer::from_raw(frame.width(), frame.height(), raw)
            .expect("buffer length matches frame dimensions");
    let mut out = std::io::Cursor::new(Vec::new());
    DynamicImage::ImageLuma16(buf)
        .write_to(&mut out, ImageFormat::Png)
        .map_err(|e| Error::InvalidFrame(format!("PNG encoding failed: {e}")))?;
    Ok(out.into_inner())
}

pub fn write_depth_frame(path: impl AsRef<Path>, frame: &DepthFrame) -> Result<()> {
    atomic_write(path.as_ref(), &encode_depth_png(frame)?)
}
