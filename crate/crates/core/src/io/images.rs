//! PNG (8-bit sRGB) and PFM (32-bit float) images.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use image::{ImageBuffer, Rgb};

use crate::error::{Error, Result};
use crate::imgbuf::{linear_to_srgb8, srgb8_to_linear, RgbImage};

use super::open;

/// Reads an 8-bit PNG and decodes sRGB to linear.
pub fn read_png(path: &Path) -> Result<RgbImage> {
    if !path.exists() {
        return Err(Error::MissingFile(path.to_path_buf()));
    }
    let img = image::open(path)?.to_rgb8();
    let (w, h) = img.dimensions();
    let data = img.pixels().map(|p| [0, 1, 2].map(|c| srgb8_to_linear(p[c]))).collect();
    RgbImage::from_data(w as usize, h as usize, data)
}

/// Encodes linear RGB as 8-bit sRGB PNG.
pub fn write_png(path: &Path, img: &RgbImage) -> Result<()> {
    let buf = ImageBuffer::from_fn(img.width as u32, img.height as u32, |x, y| {
        Rgb(img.get(x as usize, y as usize).map(linear_to_srgb8))
    });
    buf.save(path)?;
    Ok(())
}

/// Writes values in `[0, 1]` to an 8-bit PNG without gamma encoding (for
/// depth, normal and alpha visualizations).
pub fn write_png_raw(path: &Path, width: usize, height: usize, data: &[[f64; 3]]) -> Result<()> {
    if data.len() != width * height {
        return Err(Error::DimensionMismatch("image data".into()));
    }
    let buf = ImageBuffer::from_fn(width as u32, height as u32, |x, y| {
        Rgb(data[y as usize * width + x as usize].map(|v| (v.clamp(0.0, 1.0) * 255.0).round() as u8))
    });
    buf.save(path)?;
    Ok(())
}

/// Writes a single-channel little-endian PFM (rows stored bottom to top).
pub fn write_pfm(path: &Path, width: usize, height: usize, data: &[f64]) -> Result<()> {
    if data.len() != width * height {
        return Err(Error::DimensionMismatch("PFM data".into()));
    }
    let mut w = BufWriter::new(File::create(path)?);
    write!(w, "Pf\n{width} {height}\n-1.0\n")?;
    for y in (0..height).rev() {
        for v in &data[y * width..(y + 1) * width] {
            w.write_all(&(*v as f32).to_le_bytes())?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Reads a single-channel PFM into row-major top-to-bottom order.
pub fn read_pfm(path: &Path) -> Result<(usize, usize, Vec<f64>)> {
    let mut r = BufReader::new(open(path)?);
    let mut line = String::new();
    let mut header = Vec::new();
    while header.len() < 4 {
        line.clear();
        if r.read_line(&mut line)? == 0 {
            return Err(Error::Corrupt("PFM header ends early".into()));
        }
        header.extend(line.split_whitespace().map(str::to_string));
    }
    if header[0] != "Pf" {
        return Err(Error::Format(format!("unsupported PFM kind {:?}", header[0])));
    }
    let parse = |s: &str| s.parse::<f64>().map_err(|_| Error::Format(format!("bad PFM header field {s:?}")));
    let (width, height, scale) = (parse(&header[1])? as usize, parse(&header[2])? as usize, parse(&header[3])?);
    let mut bytes = vec![0u8; width * height * 4];
    r.read_exact(&mut bytes).map_err(|_| Error::Corrupt("PFM body ends early".into()))?;
    let mut data = vec![0.0; width * height];
    for (k, chunk) in bytes.chunks_exact(4).enumerate() {
        let b = [chunk[0], chunk[1], chunk[2], chunk[3]];
        let v = if scale < 0.0 { f32::from_le_bytes(b) } else { f32::from_be_bytes(b) };
        let (row, col) = (k / width, k % width);
        data[(height - 1 - row) * width + col] = v as f64;
    }
    Ok((width, height, data))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn png_round_trip_is_exact_on_the_srgb_grid() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("a.png");
        let mut img = RgbImage::new(5, 3);
        for (i, p) in img.data.iter_mut().enumerate() {
            *p = [i as f64 / 15.0, 0.5, 1.0 - i as f64 / 15.0];
        }
        img.quantize_srgb8();
        write_png(&path, &img).unwrap();
        assert_eq!(read_png(&path).unwrap(), img);
    }

    #[test]
    fn pfm_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("d.pfm");
        let data: Vec<f64> = (0..12).map(|i| i as f64 * 0.25).collect();
        write_pfm(&path, 4, 3, &data).unwrap();
        assert_eq!(read_pfm(&path).unwrap(), (4, 3, data));
    }

    #[test]
    fn missing_png_is_reported() {
        assert!(matches!(read_png(Path::new("/nonexistent/x.png")), Err(Error::MissingFile(_))));
    }
}
