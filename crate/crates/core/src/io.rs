//! Netpbm (PGM), PFM and model files.
//!
//! PGM samples map to reals without rescaling: 8-bit files give `[0, 255]`,
//! 16-bit files `[0, 65535]`. PFM stores grayscale `f32`, little-endian,
//! rows bottom to top.

use std::fs;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::background::{MicrotextureModel, ModelKind};
use crate::error::{Error, Result};
use crate::grid::Image;

struct Header<'a> {
    magic: &'a [u8],
    fields: Vec<usize>,
    body: &'a [u8],
}

/// Parses the magic number and `count` whitespace-separated integers,
/// skipping `#` comments. The body starts after one whitespace byte.
fn parse_header(bytes: &[u8], count: usize) -> Result<Header<'_>> {
    if bytes.len() < 2 {
        return Err(Error::Format("file too short".into()));
    }
    let magic = &bytes[..2];
    let mut pos = 2;
    let mut fields = Vec::with_capacity(count);
    while fields.len() < count {
        while pos < bytes.len() && (bytes[pos].is_ascii_whitespace() || bytes[pos] == b'#') {
            if bytes[pos] == b'#' {
                while pos < bytes.len() && bytes[pos] != b'\n' {
                    pos += 1;
                }
            } else {
                pos += 1;
            }
        }
        let start = pos;
        while pos < bytes.len() && bytes[pos].is_ascii_digit() {
            pos += 1;
        }
        if start == pos {
            return Err(Error::Format("malformed header".into()));
        }
        let text = std::str::from_utf8(&bytes[start..pos]).expect("ascii digits");
        fields.push(text.parse().map_err(|_| Error::Format(format!("bad header value {text}")))?);
    }
    if pos < bytes.len() {
        pos += 1;
    }
    Ok(Header { magic, fields, body: &bytes[pos..] })
}

pub fn decode_pgm(bytes: &[u8]) -> Result<Image> {
    let header = parse_header(bytes, 3)?;
    let (w, h, maxval) = (header.fields[0], header.fields[1], header.fields[2]);
    if w == 0 || h == 0 || maxval == 0 || maxval > 65535 {
        return Err(Error::Format(format!("unsupported PGM geometry {w}x{h}, maxval {maxval}")));
    }
    let n = w * h;
    let data: Vec<f64> = match header.magic {
        b"P5" => {
            let wide = maxval > 255;
            let need = if wide { 2 * n } else { n };
            if header.body.len() < need {
                return Err(Error::Format("truncated PGM raster".into()));
            }
            if wide {
                header.body[..need]
                    .chunks_exact(2)
                    .map(|c| u16::from_be_bytes([c[0], c[1]]) as f64)
                    .collect()
            } else {
                header.body[..n].iter().map(|&b| b as f64).collect()
            }
        }
        b"P2" => {
            let text = std::str::from_utf8(header.body)
                .map_err(|_| Error::Format("non-ASCII P2 raster".into()))?;
            let values: Vec<f64> = text
                .lines()
                .map(|l| l.split('#').next().unwrap_or(""))
                .flat_map(str::split_whitespace)
                .take(n)
                .map(|s| s.parse::<u32>().map(f64::from))
                .collect::<std::result::Result<_, _>>()
                .map_err(|_| Error::Format("bad P2 sample".into()))?;
            if values.len() < n {
                return Err(Error::Format("truncated PGM raster".into()));
            }
            values
        }
        _ => return Err(Error::Format("not a PGM file (expected P2 or P5)".into())),
    };
    if data.iter().any(|&v| v > maxval as f64) {
        return Err(Error::Format("PGM sample exceeds maxval".into()));
    }
    Image::new(w, h, data)
}

/// `maxval` field of a PGM header.
pub fn pgm_maxval(bytes: &[u8]) -> Result<u16> {
    let header = parse_header(bytes, 3)?;
    u16::try_from(header.fields[2]).map_err(|_| Error::Format(format!("unsupported PGM maxval {}", header.fields[2])))
}

pub fn read_pgm(path: &Path) -> Result<Image> {
    decode_pgm(&fs::read(path)?)
}

/// Binary PGM with values rounded and clamped to `[0, maxval]`.
pub fn encode_pgm(u: &Image, maxval: u16) -> Vec<u8> {
    let mut out = format!("P5\n{} {}\n{}\n", u.width(), u.height(), maxval).into_bytes();
    let m = maxval as f64;
    for &v in u.pixels() {
        let q = if v.is_nan() { 0.0 } else { v.round().clamp(0.0, m) };
        if maxval > 255 {
            out.extend_from_slice(&(q as u16).to_be_bytes());
        } else {
            out.push(q as u8);
        }
    }
    out
}

pub fn write_pgm(path: &Path, u: &Image) -> Result<()> {
    fs::write(path, encode_pgm(u, 255))?;
    Ok(())
}

/// Linear map of `[min, max]` onto `[0, 255]`; a constant image maps to 0.
pub fn normalize_to_8bit(u: &Image) -> Image {
    let (lo, hi) = (u.min(), u.max());
    if hi > lo {
        u.map(|v| 255.0 * (v - lo) / (hi - lo))
    } else {
        Image::zeros(u.width(), u.height())
    }
}

pub fn encode_pfm(u: &Image) -> Vec<u8> {
    let mut out = format!("Pf\n{} {}\n-1.0\n", u.width(), u.height()).into_bytes();
    for y in (0..u.height()).rev() {
        for x in 0..u.width() {
            out.extend_from_slice(&(u.get(x, y) as f32).to_le_bytes());
        }
    }
    out
}

pub fn decode_pfm(bytes: &[u8]) -> Result<Image> {
    if bytes.len() < 2 || &bytes[..2] != b"Pf" {
        return Err(Error::Format("not a grayscale PFM file".into()));
    }
    let mut lines = 0;
    let mut pos = 0;
    while lines < 3 && pos < bytes.len() {
        if bytes[pos] == b'\n' {
            lines += 1;
        }
        pos += 1;
    }
    let head = std::str::from_utf8(&bytes[..pos]).map_err(|_| Error::Format("bad PFM header".into()))?;
    let tokens: Vec<&str> = head.split_whitespace().collect();
    if tokens.len() != 4 {
        return Err(Error::Format("bad PFM header".into()));
    }
    let parse = |s: &str| s.parse::<usize>().map_err(|_| Error::Format(format!("bad PFM size {s}")));
    let (w, h) = (parse(tokens[1])?, parse(tokens[2])?);
    let scale: f64 = tokens[3].parse().map_err(|_| Error::Format("bad PFM scale".into()))?;
    let little = scale < 0.0;
    let body = &bytes[pos..];
    if w == 0 || h == 0 || body.len() < 4 * w * h {
        return Err(Error::Format("truncated PFM raster".into()));
    }
    let mut data = vec![0.0; w * h];
    for (k, c) in body[..4 * w * h].chunks_exact(4).enumerate() {
        let raw = [c[0], c[1], c[2], c[3]];
        let v = if little { f32::from_le_bytes(raw) } else { f32::from_be_bytes(raw) };
        let (x, row) = (k % w, k / w);
        data[(h - 1 - row) * w + x] = v as f64;
    }
    Image::new(w, h, data)
}

pub fn read_pfm(path: &Path) -> Result<Image> {
    decode_pfm(&fs::read(path)?)
}

pub fn write_pfm(path: &Path, u: &Image) -> Result<()> {
    fs::write(path, encode_pfm(u))?;
    Ok(())
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

/// Sidecar of a saved model; `checksum` is the SHA-256 of the kernel PFM bytes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelMetadata {
    pub kind: ModelKind,
    pub width: usize,
    pub height: usize,
    pub exemplar_mean: f64,
    pub kernel_file: String,
    pub checksum: String,
}

/// Writes `<stem>.pfm` (kernel) and `<stem>.json` (metadata) into `dir`.
pub fn save_model(model: &MicrotextureModel, dir: &Path, stem: &str) -> Result<ModelMetadata> {
    let pfm = encode_pfm(model.kernel());
    let kernel_file = format!("{stem}.pfm");
    fs::write(dir.join(&kernel_file), &pfm)?;
    let (width, height) = model.dims();
    let meta = ModelMetadata {
        kind: model.kind(),
        width,
        height,
        exemplar_mean: model.exemplar_mean(),
        kernel_file,
        checksum: sha256_hex(&pfm),
    };
    let mut f = fs::File::create(dir.join(format!("{stem}.json")))?;
    serde_json::to_writer_pretty(&mut f, &meta)?;
    f.write_all(b"\n")?;
    Ok(meta)
}

/// Loads a model saved by [`save_model`] from its JSON sidecar.
pub fn load_model(json_path: &Path) -> Result<MicrotextureModel> {
    let meta: ModelMetadata = serde_json::from_slice(&fs::read(json_path)?)?;
    let dir = json_path.parent().unwrap_or(Path::new("."));
    let pfm = fs::read(dir.join(&meta.kernel_file))?;
    if sha256_hex(&pfm) != meta.checksum {
        return Err(Error::Format(format!("checksum mismatch for {}", meta.kernel_file)));
    }
    let kernel = decode_pfm(&pfm)?;
    if kernel.dims() != (meta.width, meta.height) {
        return Err(Error::Format("kernel dimensions disagree with metadata".into()));
    }
    Ok(match meta.kind {
        ModelKind::WhiteNoise => MicrotextureModel::white_noise(meta.width, meta.height),
        kind => MicrotextureModel::from_kernel(kernel).with_kind(kind, meta.exemplar_mean),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pgm_round_trips() {
        let u = Image::from_fn(5, 3, |x, y| (x * 40 + y * 7) as f64);
        assert_eq!(decode_pgm(&encode_pgm(&u, 255)).unwrap(), u);
        let wide = Image::from_fn(4, 2, |x, y| (x * 9000 + y * 300) as f64);
        assert_eq!(decode_pgm(&encode_pgm(&wide, 65535)).unwrap(), wide);
    }

    #[test]
    fn ascii_pgm_with_comments() {
        let text = b"P2\n# comment\n3 2\n# another\n10\n0 1 2\n3 4 10\n";
        let u = decode_pgm(text).unwrap();
        assert_eq!(u.pixels(), &[0.0, 1.0, 2.0, 3.0, 4.0, 10.0]);
        assert!(decode_pgm(b"P2\n3 2\n10\n0 1 2\n3 4 11\n").is_err());
        assert!(decode_pgm(b"P6\n1 1\n255\n\0\0\0").is_err());
        assert!(decode_pgm(b"P5\n2 2\n255\n\0").is_err());
    }

    #[test]
    fn pfm_round_trip_is_row_flipped_on_disk() {
        let u = Image::from_fn(3, 2, |x, y| x as f64 - 0.5 * y as f64);
        let bytes = encode_pfm(&u);
        assert!(bytes.starts_with(b"Pf\n3 2\n-1.0\n"));
        let first = f32::from_le_bytes(bytes[12..16].try_into().unwrap());
        assert_eq!(first, -0.5);
        assert_eq!(decode_pfm(&bytes).unwrap(), u);
    }

    #[test]
    fn model_round_trip_and_checksum() {
        let dir = tempfile::tempdir().unwrap();
        let u = Image::from_fn(6, 5, |x, y| ((x * 3 + y * 5) % 7) as f64);
        let m = MicrotextureModel::from_exemplar(&u);
        save_model(&m, dir.path(), "model").unwrap();
        let back = load_model(&dir.path().join("model.json")).unwrap();
        assert_eq!(back.kind(), ModelKind::ExemplarDerived);
        assert!((back.exemplar_mean() - u.mean()).abs() < 1e-12);
        for (a, b) in back.kernel().pixels().iter().zip(m.kernel().pixels()) {
            assert!((a - b).abs() < 1e-6);
        }
        let white = MicrotextureModel::white_noise(4, 4);
        save_model(&white, dir.path(), "white").unwrap();
        assert_eq!(load_model(&dir.path().join("white.json")).unwrap().gamma(), white.gamma());
        std::fs::write(dir.path().join("model.pfm"), encode_pfm(&Image::zeros(6, 5))).unwrap();
        assert!(load_model(&dir.path().join("model.json")).is_err());
    }
}
