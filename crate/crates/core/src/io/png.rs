use std::path::{Path, PathBuf};

use png::{BitDepth, ColorType, Transformations};

use super::write_atomic;
use crate::error::{Error, FormatError, Result};
use crate::image::ImageBuffer;
use crate::tensor::Real;

/// `v ∈ [−1, 1] → u = clamp(round((v+1)/2·255), 0, 255)`, rounding half away from zero.
pub fn to_u8(v: f64) -> u8 {
    ((v + 1.0) / 2.0 * 255.0).round().clamp(0.0, 255.0) as u8
}

pub fn from_u8(u: u8) -> f64 {
    2.0 * f64::from(u) / 255.0 - 1.0
}

/// 8-bit RGB PNG bytes.
pub fn encode_png<T: Real>(img: &ImageBuffer<T>) -> Result<Vec<u8>> {
    if !img.is_finite() {
        return Err(Error::arg("cannot encode an image with non-finite values"));
    }
    let (h, w) = img.dims();
    if h == 0 || w == 0 || u32::try_from(h).is_err() || u32::try_from(w).is_err() {
        return Err(Error::arg(format!("cannot encode a {h}×{w} image")));
    }
    let pixels: Vec<u8> = img.data().iter().map(|v| to_u8(v.to_f64_lossy())).collect();
    let mut out = Vec::new();
    let mut enc = png::Encoder::new(&mut out, w as u32, h as u32);
    enc.set_color(ColorType::Rgb);
    enc.set_depth(BitDepth::Eight);
    let png_err = |e: png::EncodingError| Error::Io(std::io::Error::other(e.to_string()));
    let mut writer = enc.write_header().map_err(png_err)?;
    writer.write_image_data(&pixels).map_err(png_err)?;
    writer.finish().map_err(png_err)?;
    Ok(out)
}

/// Decodes gray, gray-alpha, RGB, RGBA and palette PNGs at 1–16 bits.
/// Alpha is discarded.
pub fn decode_png(bytes: &[u8]) -> Result<ImageBuffer<f32>> {
    let bad = |e: png::DecodingError| Error::Format(FormatError::Image(e.to_string()));
    let mut dec = png::Decoder::new(std::io::Cursor::new(bytes));
    dec.set_transformations(Transformations::EXPAND);
    let mut reader = dec.read_info().map_err(bad)?;
    let size = reader
        .output_buffer_size()
        .ok_or_else(|| Error::Format(FormatError::Image("image too large".into())))?;
    let mut buf = vec![0u8; size];
    let info = reader.next_frame(&mut buf).map_err(bad)?;
    let (h, w) = (info.height as usize, info.width as usize);
    let channels = match info.color_type {
        ColorType::Grayscale => 1,
        ColorType::GrayscaleAlpha => 2,
        ColorType::Rgb => 3,
        ColorType::Rgba => 4,
        ColorType::Indexed => {
            return Err(Error::Format(FormatError::Image(
                "palette was not expanded".into(),
            )))
        }
    };
    let sixteen = info.bit_depth == BitDepth::Sixteen;
    let bytes_per = if sixteen { 2 } else { 1 };
    let sample = |i: usize| -> f64 {
        let at = i * bytes_per;
        if sixteen {
            2.0 * f64::from(u16::from_be_bytes([buf[at], buf[at + 1]])) / 65535.0 - 1.0
        } else {
            from_u8(buf[at])
        }
    };
    let stride = info.line_size;
    let mut data = Vec::with_capacity(h * w * 3);
    for r in 0..h {
        for c in 0..w {
            let base = (r * stride) / bytes_per + c * channels;
            let rgb = if channels < 3 {
                [sample(base); 3]
            } else {
                [sample(base), sample(base + 1), sample(base + 2)]
            };
            data.extend(rgb.map(|v| v as f32));
        }
    }
    ImageBuffer::new(h, w, data)
}

pub fn export_image<T: Real>(path: impl AsRef<Path>, img: &ImageBuffer<T>) -> Result<()> {
    Ok(write_atomic(path.as_ref(), &encode_png(img)?)?)
}

pub fn import_image(path: impl AsRef<Path>) -> Result<ImageBuffer<f32>> {
    decode_png(&std::fs::read(path)?)
}

/// Every `.png` file in `dir`, in lexicographic file-name order.
pub fn load_png_dir(dir: impl AsRef<Path>) -> Result<Vec<(PathBuf, ImageBuffer<f32>)>> {
    let mut paths: Vec<PathBuf> = std::fs::read_dir(dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x.eq_ignore_ascii_case("png")))
        .collect();
    paths.sort();
    paths
        .into_iter()
        .map(|p| {
            let img = import_image(&p)?;
            Ok((p, img))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn value_mapping_anchors() {
        assert_eq!(to_u8(-1.0), 0);
        assert_eq!(to_u8(1.0), 255);
        assert_eq!(to_u8(0.0), 128);
        assert_eq!(to_u8(-3.0), 0);
        assert_eq!(to_u8(2.0), 255);
        for u in 0..=255u8 {
            assert_eq!(to_u8(from_u8(u)), u);
        }
    }

    #[test]
    fn encode_decode_encode_is_byte_stable() {
        let img = ImageBuffer::from_fn(5, 7, |r, c| {
            [r as f32 / 4.0 - 0.5, c as f32 / 6.0 * 2.0 - 1.0, 0.123]
        });
        let first = encode_png(&img).unwrap();
        let decoded = decode_png(&first).unwrap();
        assert_eq!(decoded.dims(), (5, 7));
        assert_eq!(encode_png(&decoded).unwrap(), first);
    }

    fn raw_png(color: ColorType, depth: BitDepth, w: u32, h: u32, data: &[u8]) -> Vec<u8> {
        let mut out = Vec::new();
        let mut enc = png::Encoder::new(&mut out, w, h);
        enc.set_color(color);
        enc.set_depth(depth);
        let mut wr = enc.write_header().unwrap();
        wr.write_image_data(data).unwrap();
        wr.finish().unwrap();
        out
    }

    #[test]
    fn decodes_other_layouts() {
        let gray = decode_png(&raw_png(
            ColorType::Grayscale,
            BitDepth::Eight,
            2,
            1,
            &[0, 255],
        ))
        .unwrap();
        assert_eq!(gray.data(), &[-1.0, -1.0, -1.0, 1.0, 1.0, 1.0]);

        let rgba = decode_png(&raw_png(
            ColorType::Rgba,
            BitDepth::Eight,
            1,
            1,
            &[255, 0, 255, 7],
        ))
        .unwrap();
        assert_eq!(rgba.data(), &[1.0, -1.0, 1.0]);

        let deep = decode_png(&raw_png(
            ColorType::Rgb,
            BitDepth::Sixteen,
            1,
            1,
            &[255, 255, 0, 0, 255, 255],
        ))
        .unwrap();
        assert_eq!(deep.data(), &[1.0, -1.0, 1.0]);

        let low = decode_png(&raw_png(
            ColorType::Grayscale,
            BitDepth::One,
            3,
            1,
            &[0b1010_0000],
        ))
        .unwrap();
        assert_eq!(low.pixel(0, 0), [1.0; 3]);
        assert_eq!(low.pixel(0, 1), [-1.0; 3]);
    }

    #[test]
    fn garbage_is_a_format_error() {
        assert!(matches!(
            decode_png(b"not a png"),
            Err(Error::Format(FormatError::Image(_)))
        ));
    }

    #[test]
    fn directory_listing_is_sorted() {
        let dir = tempfile::tempdir().unwrap();
        for (name, v) in [("b.png", 0.5f32), ("a.png", -0.5), ("c.txt", 0.0)] {
            let img = ImageBuffer::filled(2, 2, [v; 3]);
            std::fs::write(dir.path().join(name), encode_png(&img).unwrap()).unwrap();
        }
        let loaded = load_png_dir(dir.path()).unwrap();
        let names: Vec<_> = loaded
            .iter()
            .map(|(p, _)| p.file_name().unwrap().to_str().unwrap().to_owned())
            .collect();
        assert_eq!(names, ["a.png", "b.png"]);
    }
}
