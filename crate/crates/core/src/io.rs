//! File I/O: lossless rasters for images and masks, Middlebury .flo
//! fields, and portable-float-map (PFM) score maps.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::flow::FlowField;
use crate::image::{Image, Mask, ScoreMap};

const FLO_MAGIC: f32 = 202021.25;

/// Loads an 8- or 16-bit grayscale or RGB raster, scaling to [0, 1].
pub fn load_image(path: impl AsRef<Path>) -> Result<Image> {
    let path = path.as_ref();
    let dynimg = image::open(path).map_err(|e| match e {
        image::ImageError::IoError(io) => Error::io(path, io),
        other => Error::format(format!("{}: {other}", path.display())),
    })?;
    let (w, h) = (dynimg.width() as usize, dynimg.height() as usize);
    match dynimg {
        image::DynamicImage::ImageLuma8(buf) => {
            let data = buf.as_raw().iter().map(|&v| v as f32 / 255.0).collect();
            Image::new(w, h, 1, data)
        }
        image::DynamicImage::ImageLuma16(buf) => {
            let data = buf.as_raw().iter().map(|&v| v as f32 / 65535.0).collect();
            Image::new(w, h, 1, data)
        }
        image::DynamicImage::ImageRgb8(buf) => {
            let data = buf.as_raw().iter().map(|&v| v as f32 / 255.0).collect();
            Image::new(w, h, 3, data)
        }
        image::DynamicImage::ImageRgb16(buf) => {
            let data = buf.as_raw().iter().map(|&v| v as f32 / 65535.0).collect();
            Image::new(w, h, 3, data)
        }
        other => Err(Error::format(format!(
            "{}: unsupported channel count {}",
            path.display(),
            other.color().channel_count()
        ))),
    }
}

/// Writes an image as an 8-bit PNG (grayscale or RGB).
pub fn save_image(path: impl AsRef<Path>, img: &Image) -> Result<()> {
    let path = path.as_ref();
    let w = img.width() as u32;
    let h = img.height() as u32;
    let quant = |v: f32| (v * 255.0).round().clamp(0.0, 255.0) as u8;
    let bytes: Vec<u8> = img.data().iter().map(|&v| quant(v)).collect();
    let result = match img.channels() {
        1 => image::GrayImage::from_raw(w, h, bytes)
            .expect("sized buffer")
            .save(path),
        _ => image::RgbImage::from_raw(w, h, bytes)
            .expect("sized buffer")
            .save(path),
    };
    result.map_err(|e| Error::format(format!("{}: {e}", path.display())))
}

/// Loads a binary mask stored as a raster (0/255); any value > 127 is 1.
pub fn load_mask(path: impl AsRef<Path>) -> Result<Mask> {
    let img = load_image(&path)?;
    if img.channels() != 1 {
        return Err(Error::format(format!(
            "{}: mask must be single-channel",
            path.as_ref().display()
        )));
    }
    let labels = img
        .data()
        .iter()
        .map(|&v| if v > 0.5 { 1u8 } else { 0u8 })
        .collect();
    Mask::new(img.width(), img.height(), labels)
}

/// Writes a mask as an 8-bit grayscale PNG with labels mapped to 0/255.
pub fn save_mask(path: impl AsRef<Path>, mask: &Mask) -> Result<()> {
    let path = path.as_ref();
    let bytes: Vec<u8> = mask.labels().iter().map(|&v| v * 255).collect();
    image::GrayImage::from_raw(mask.width() as u32, mask.height() as u32, bytes)
        .expect("sized buffer")
        .save(path)
        .map_err(|e| Error::format(format!("{}: {e}", path.display())))
}

/// Reads a Middlebury .flo flow field.
pub fn read_flo(path: impl AsRef<Path>) -> Result<FlowField> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = BufReader::new(file);
    let mut buf = Vec::new();
    reader
        .read_to_end(&mut buf)
        .map_err(|e| Error::io(path, e))?;
    if buf.len() < 12 {
        return Err(Error::format(format!(
            "{}: truncated .flo header",
            path.display()
        )));
    }
    let magic = f32::from_le_bytes(buf[0..4].try_into().unwrap());
    if magic != FLO_MAGIC {
        return Err(Error::format(format!(
            "{}: bad .flo magic {magic}",
            path.display()
        )));
    }
    let width = i32::from_le_bytes(buf[4..8].try_into().unwrap());
    let height = i32::from_le_bytes(buf[8..12].try_into().unwrap());
    if width < 0 || height < 0 {
        return Err(Error::format(format!(
            "{}: negative .flo dimensions",
            path.display()
        )));
    }
    let (width, height) = (width as usize, height as usize);
    let expected = 12 + width * height * 8;
    if buf.len() != expected {
        return Err(Error::format(format!(
            "{}: .flo payload is {} bytes, expected {expected}",
            path.display(),
            buf.len()
        )));
    }
    let mut u = Vec::with_capacity(width * height);
    let mut v = Vec::with_capacity(width * height);
    for i in 0..width * height {
        let o = 12 + i * 8;
        u.push(f32::from_le_bytes(buf[o..o + 4].try_into().unwrap()));
        v.push(f32::from_le_bytes(buf[o + 4..o + 8].try_into().unwrap()));
    }
    FlowField::new(width, height, u, v)
}

/// Writes a Middlebury .flo flow field, bit-exact.
pub fn write_flo(path: impl AsRef<Path>, flow: &FlowField) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    let mut emit = |bytes: [u8; 4]| w.write_all(&bytes).map_err(|e| Error::io(path, e));
    emit(FLO_MAGIC.to_le_bytes())?;
    emit((flow.width() as i32).to_le_bytes())?;
    emit((flow.height() as i32).to_le_bytes())?;
    for i in 0..flow.width() * flow.height() {
        emit(flow.u()[i].to_le_bytes())?;
        emit(flow.v()[i].to_le_bytes())?;
    }
    Ok(())
}

/// Reads a score map from a PFM file or a single-channel raster.
///
/// Values are clamped so that `-ln S(m)` is finite for both labels.
pub fn read_score_map(path: impl AsRef<Path>) -> Result<ScoreMap> {
    let path = path.as_ref();
    let is_pfm = path
        .extension()
        .map(|e| e.eq_ignore_ascii_case("pfm"))
        .unwrap_or(false);
    if is_pfm {
        let (w, h, data) = read_pfm(path)?;
        ScoreMap::new(w, h, data)
    } else {
        let img = load_image(path)?;
        if img.channels() != 1 {
            return Err(Error::format(format!(
                "{}: score map must be single-channel",
                path.display()
            )));
        }
        ScoreMap::new(img.width(), img.height(), img.data().to_vec())
    }
}

/// Reads a grayscale PFM ("Pf") file. Rows are stored bottom-to-top.
pub fn read_pfm(path: impl AsRef<Path>) -> Result<(usize, usize, Vec<f32>)> {
    let path = path.as_ref();
    let mut buf = Vec::new();
    File::open(path)
        .map_err(|e| Error::io(path, e))?
        .read_to_end(&mut buf)
        .map_err(|e| Error::io(path, e))?;

    let mut pos = 0usize;
    let mut next_token = |buf: &[u8]| -> Result<String> {
        while pos < buf.len() && buf[pos].is_ascii_whitespace() {
            pos += 1;
        }
        let start = pos;
        while pos < buf.len() && !buf[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if start == pos {
            return Err(Error::format(format!(
                "{}: truncated PFM header",
                path.display()
            )));
        }
        Ok(String::from_utf8_lossy(&buf[start..pos]).into_owned())
    };

    let tag = next_token(&buf)?;
    if tag != "Pf" {
        return Err(Error::format(format!(
            "{}: expected grayscale PFM tag 'Pf', got '{tag}'",
            path.display()
        )));
    }
    let width: usize = next_token(&buf)?
        .parse()
        .map_err(|_| Error::format("bad PFM width"))?;
    let height: usize = next_token(&buf)?
        .parse()
        .map_err(|_| Error::format("bad PFM height"))?;
    let scale: f32 = next_token(&buf)?
        .parse()
        .map_err(|_| Error::format("bad PFM scale"))?;
    pos += 1; // single whitespace byte after the header

    let need = width * height * 4;
    if buf.len() < pos + need {
        return Err(Error::format(format!(
            "{}: truncated PFM payload",
            path.display()
        )));
    }
    let le = scale < 0.0;
    let mut rows: Vec<Vec<f32>> = Vec::with_capacity(height);
    for r in 0..height {
        let mut row = Vec::with_capacity(width);
        for c in 0..width {
            let o = pos + (r * width + c) * 4;
            let raw: [u8; 4] = buf[o..o + 4].try_into().unwrap();
            let v = if le {
                f32::from_le_bytes(raw)
            } else {
                f32::from_be_bytes(raw)
            };
            row.push(v);
        }
        rows.push(row);
    }
    // PFM stores the bottom row first
    let mut data = Vec::with_capacity(width * height);
    for row in rows.into_iter().rev() {
        data.extend(row);
    }
    Ok((width, height, data))
}

/// Writes a grayscale little-endian PFM file (rows bottom-to-top).
pub fn write_pfm(path: impl AsRef<Path>, width: usize, height: usize, data: &[f32]) -> Result<()> {
    let path = path.as_ref();
    if data.len() != width * height {
        return Err(Error::contract("PFM data length mismatch"));
    }
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    write!(w, "Pf\n{width} {height}\n-1.0\n").map_err(|e| Error::io(path, e))?;
    for y in (0..height).rev() {
        for x in 0..width {
            w.write_all(&data[y * width + x].to_le_bytes())
                .map_err(|e| Error::io(path, e))?;
        }
    }
    Ok(())
}

/// Writes a score map as a little-endian PFM file.
pub fn write_score_map(path: impl AsRef<Path>, score: &ScoreMap) -> Result<()> {
    write_pfm(path, score.width(), score.height(), score.prob_fg())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::image::PROB_EPS;
    use proptest::prelude::*;
    use tempfile::tempdir;

    #[test]
    fn gray_endpoint_scaling() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("g.png");
        image::GrayImage::from_raw(2, 1, vec![0u8, 255u8])
            .unwrap()
            .save(&path)
            .unwrap();
        let img = load_image(&path).unwrap();
        assert_eq!(img.data(), &[0.0, 1.0]);
    }

    #[test]
    fn four_channel_file_is_rejected() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("rgba.png");
        image::RgbaImage::from_raw(1, 1, vec![1, 2, 3, 4])
            .unwrap()
            .save(&path)
            .unwrap();
        match load_image(&path) {
            Err(Error::Format(_)) => {}
            other => panic!("expected format error, got {other:?}"),
        }
    }

    #[test]
    fn save_load_quantization_bound() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("img.png");
        let img = Image::new(3, 2, 3, (0..18).map(|i| i as f32 / 17.0).collect()).unwrap();
        save_image(&path, &img).unwrap();
        let back = load_image(&path).unwrap();
        for (a, b) in img.data().iter().zip(back.data()) {
            assert!((a - b).abs() <= 1.0 / 255.0 + 1e-7);
        }
    }

    #[test]
    fn flo_write_read_constant_field() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("f.flo");
        let flow = FlowField::constant(3, 2, 1.5, -2.0);
        write_flo(&path, &flow).unwrap();
        assert_eq!(std::fs::metadata(&path).unwrap().len(), 12 + 3 * 2 * 8);
        let back = read_flo(&path).unwrap();
        assert_eq!(flow, back);
    }

    #[test]
    fn flo_bad_magic() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("bad.flo");
        let mut bytes = Vec::new();
        bytes.extend(0.0f32.to_le_bytes());
        bytes.extend(1i32.to_le_bytes());
        bytes.extend(1i32.to_le_bytes());
        bytes.extend(0.0f32.to_le_bytes());
        bytes.extend(0.0f32.to_le_bytes());
        std::fs::write(&path, bytes).unwrap();
        match read_flo(&path) {
            Err(Error::Format(_)) => {}
            other => panic!("expected format error, got {other:?}"),
        }
    }

    #[test]
    fn flo_truncated_payload() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("trunc.flo");
        let mut bytes = Vec::new();
        bytes.extend(FLO_MAGIC.to_le_bytes());
        bytes.extend(2i32.to_le_bytes());
        bytes.extend(2i32.to_le_bytes());
        bytes.extend(0.0f32.to_le_bytes()); // only one float of 8
        std::fs::write(&path, bytes).unwrap();
        assert!(matches!(read_flo(&path), Err(Error::Format(_))));
    }

    #[test]
    fn flo_1x1_zero_field() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("z.flo");
        let mut bytes = Vec::new();
        bytes.extend(FLO_MAGIC.to_le_bytes());
        bytes.extend(1i32.to_le_bytes());
        bytes.extend(1i32.to_le_bytes());
        bytes.extend(0.0f32.to_le_bytes());
        bytes.extend(0.0f32.to_le_bytes());
        std::fs::write(&path, bytes).unwrap();
        let f = read_flo(&path).unwrap();
        assert_eq!(f, FlowField::zeros(1, 1));
    }

    #[test]
    fn score_map_clamps_from_pfm() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("s.pfm");
        write_pfm(&path, 3, 1, &[0.0, 0.5, 1.0]).unwrap();
        let sm = read_score_map(&path).unwrap();
        assert_eq!(sm.prob_fg()[0], PROB_EPS);
        assert_eq!(sm.prob_fg()[1], 0.5);
        assert_eq!(sm.prob_fg()[2], 1.0 - PROB_EPS);
    }

    #[test]
    fn pfm_row_order_round_trip() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("rows.pfm");
        let data = vec![0.1, 0.2, 0.3, 0.4, 0.5, 0.6];
        write_pfm(&path, 3, 2, &data).unwrap();
        let (w, h, back) = read_pfm(&path).unwrap();
        assert_eq!((w, h), (3, 2));
        assert_eq!(back, data);
    }

    proptest! {
        #[test]
        fn flo_round_trip_is_bit_exact(
            w in 1usize..6,
            h in 1usize..6,
            seed in any::<u64>(),
        ) {
            use rand::{Rng, SeedableRng};
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let n = w * h;
            let u: Vec<f32> = (0..n).map(|_| rng.random_range(-1e6f32..1e6)).collect();
            let v: Vec<f32> = (0..n).map(|_| rng.random_range(-1e6f32..1e6)).collect();
            let flow = FlowField::new(w, h, u, v).unwrap();
            let dir = tempdir().unwrap();
            let path = dir.path().join("rt.flo");
            write_flo(&path, &flow).unwrap();
            let back = read_flo(&path).unwrap();
            prop_assert!(flow.u().iter().zip(back.u()).all(|(a, b)| a.to_bits() == b.to_bits()));
            prop_assert!(flow.v().iter().zip(back.v()).all(|(a, b)| a.to_bits() == b.to_bits()));
        }
    }
}
