//! Portable Float Map reader/writer.
//!
//! Written files are little-endian (negative scale), `PF` for RGB and `Pf`
//! for single-channel images. Scanlines are stored bottom-to-top as the
//! format prescribes; [`Image`] keeps the top row first.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use crate::image::Image;
use crate::{Error, Result};

pub fn encode<W: Write>(image: &Image, mut out: W) -> std::io::Result<()> {
    let magic = if image.channels() == 3 { "PF" } else { "Pf" };
    write!(out, "{magic}\n{} {}\n-1.0\n", image.width(), image.height())?;
    let row_len = image.width() * image.channels();
    for row in image.data().chunks_exact(row_len).rev() {
        for v in row {
            out.write_all(&v.to_le_bytes())?;
        }
    }
    Ok(())
}

pub fn decode<R: BufRead>(mut input: R) -> Result<Image> {
    let ctx = "pfm header";
    let mut line = String::new();
    let channels = match read_token_line(&mut input, &mut line)?.as_str() {
        "PF" => 3,
        "Pf" => 1,
        other => return Err(Error::format(ctx, format!("bad magic {other:?}"))),
    };
    let dims = read_token_line(&mut input, &mut line)?;
    let mut parts = dims.split_whitespace();
    let mut dim = |name: &str| -> Result<usize> {
        parts
            .next()
            .ok_or_else(|| Error::format(ctx, format!("missing {name}")))?
            .parse()
            .map_err(|_| Error::format(ctx, format!("invalid {name}")))
    };
    let (width, height) = (dim("width")?, dim("height")?);
    let scale: f32 = read_token_line(&mut input, &mut line)?
        .parse()
        .map_err(|_| Error::format(ctx, "invalid scale"))?;
    if scale == 0.0 || !scale.is_finite() {
        return Err(Error::format(ctx, "scale must be non-zero"));
    }
    let little_endian = scale < 0.0;

    let row_len = width * channels;
    let mut bytes = vec![0u8; row_len * height * 4];
    input
        .read_exact(&mut bytes)
        .map_err(|e| Error::format("pfm data", e.to_string()))?;
    let values: Vec<f32> = bytes
        .chunks_exact(4)
        .map(|c| {
            let b = [c[0], c[1], c[2], c[3]];
            if little_endian {
                f32::from_le_bytes(b)
            } else {
                f32::from_be_bytes(b)
            }
        })
        .collect();
    let mut data = Vec::with_capacity(values.len());
    for row in values.chunks_exact(row_len).rev() {
        data.extend_from_slice(row);
    }
    Image::new(width, height, channels, data)
}

fn read_token_line<R: BufRead>(input: &mut R, line: &mut String) -> Result<String> {
    loop {
        line.clear();
        let n = input
            .read_line(line)
            .map_err(|e| Error::format("pfm header", e.to_string()))?;
        if n == 0 {
            return Err(Error::format("pfm header", "unexpected end of file"));
        }
        let t = line.trim();
        if !t.is_empty() && !t.starts_with('#') {
            return Ok(t.to_string());
        }
    }
}

pub fn write(path: &Path, image: &Image) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    encode(image, &mut w).map_err(|e| Error::io(path, e))?;
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn read(path: &Path) -> Result<Image> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    decode(BufReader::new(file)).map_err(|e| match e {
        Error::Format { context, message } => Error::Format {
            context: format!("{} ({context})", path.display()),
            message,
        },
        other => other,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn header_layout() {
        let img = Image::new(2, 1, 3, vec![0.0, 0.5, 1.0, 0.25, 0.75, 1.0]).unwrap();
        let mut buf = Vec::new();
        encode(&img, &mut buf).unwrap();
        assert!(buf.starts_with(b"PF\n2 1\n-1.0\n"));
        assert_eq!(buf.len(), 12 + 6 * 4);
        assert_eq!(&buf[12..16], &0.0f32.to_le_bytes());
    }

    #[test]
    fn bottom_to_top_rows() {
        let img = Image::new(1, 2, 1, vec![1.0, 2.0]).unwrap();
        let mut buf = Vec::new();
        encode(&img, &mut buf).unwrap();
        let body = &buf[buf.len() - 8..];
        assert_eq!(&body[..4], &2.0f32.to_le_bytes());
    }

    #[test]
    fn reads_big_endian() {
        let mut buf = b"Pf\n1 1\n1.0\n".to_vec();
        buf.extend_from_slice(&0.5f32.to_be_bytes());
        let img = decode(&buf[..]).unwrap();
        assert_eq!(img.data(), &[0.5]);
    }

    #[test]
    fn truncated_is_error() {
        let buf = b"PF\n4 4\n-1.0\n\0\0".to_vec();
        assert!(decode(&buf[..]).is_err());
        assert!(decode(&b"P6\n1 1\n255\n"[..]).is_err());
    }

    proptest! {
        #[test]
        fn bit_exact_round_trip(w in 1usize..6, h in 1usize..6, rgb in any::<bool>(), seed in any::<u32>()) {
            let c = if rgb { 3 } else { 1 };
            let data: Vec<f32> = (0..w * h * c)
                .map(|i| f32::from_bits(seed.wrapping_mul(2654435761).wrapping_add(i as u32 * 40503) & 0x3f7f_ffff))
                .collect();
            let img = Image::new(w, h, c, data).unwrap();
            let mut buf = Vec::new();
            encode(&img, &mut buf).unwrap();
            let back = decode(&buf[..]).unwrap();
            prop_assert_eq!(back.data().iter().map(|v| v.to_bits()).collect::<Vec<_>>(),
                            img.data().iter().map(|v| v.to_bits()).collect::<Vec<_>>());
            prop_assert_eq!((back.width(), back.height()), (w, h));
        }
    }
}
