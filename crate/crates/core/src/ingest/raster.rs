use std::path::Path;

use image::DynamicImage;

use super::IngestError;
use crate::datafile::{PixelFormat, SensorDescriptor};

/// A decoded image in one of the datafile pixel formats.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Raster {
    pub width: u32,
    pub height: u32,
    pub format: PixelFormat,
    /// Row-major pixels in datafile layout (depth as little-endian u16).
    pub data: Vec<u8>,
}

/// Decodes a PNG or PNM file without any pixel conversion: 8-bit RGB,
/// 8-bit grey and 16-bit grey are accepted as they are.
pub fn read_raster(path: &Path) -> Result<Raster, IngestError> {
    if !path.is_file() {
        return Err(IngestError::MissingRaster(path.to_path_buf()));
    }
    let unsupported = |reason: String| IngestError::UnsupportedRaster {
        path: path.to_path_buf(),
        reason,
    };
    let img = image::ImageReader::open(path)
        .map_err(|e| IngestError::io(path, e))?
        .with_guessed_format()
        .map_err(|e| IngestError::io(path, e))?
        .decode()
        .map_err(|e| unsupported(e.to_string()))?;
    let (width, height) = (img.width(), img.height());
    let (format, data) = match img {
        DynamicImage::ImageRgb8(buf) => (PixelFormat::Rgb8, buf.into_raw()),
        DynamicImage::ImageLuma8(buf) => (PixelFormat::Grey8, buf.into_raw()),
        DynamicImage::ImageLuma16(buf) => (
            PixelFormat::Depth16,
            buf.into_raw().iter().flat_map(|v| v.to_le_bytes()).collect(),
        ),
        other => return Err(unsupported(format!("pixel layout {:?}", other.color()))),
    };
    Ok(Raster {
        width,
        height,
        format,
        data,
    })
}

/// Reads a raster and checks it against the sensor it belongs to.
pub(crate) fn load_for(path: &Path, sensor: &SensorDescriptor) -> Result<Vec<u8>, IngestError> {
    let raster = read_raster(path)?;
    let camera = sensor.camera().expect("rasters belong to camera sensors");
    if (raster.width, raster.height, raster.format) != (camera.width, camera.height, camera.pixel_format) {
        return Err(IngestError::UnsupportedRaster {
            path: path.to_path_buf(),
            reason: format!(
                "{}x{} {:?}, sensor expects {}x{} {:?}",
                raster.width, raster.height, raster.format, camera.width, camera.height, camera.pixel_format
            ),
        });
    }
    Ok(raster.data)
}
