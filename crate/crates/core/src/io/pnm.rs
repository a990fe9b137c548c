//! Binary PGM (P5) and PPM (P6) reading and writing, 8- and 16-bit.

use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::features::MultiImage;
use crate::grid::RealImage;
use crate::metrics::InstanceMask;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PnmImage {
    pub width: usize,
    pub height: usize,
    /// 1 for PGM, 3 for PPM.
    pub channels: usize,
    pub maxval: u16,
    /// Interleaved samples, row-major.
    pub samples: Vec<u16>,
}

impl PnmImage {
    /// Channels scaled to `[0, 1]`.
    pub fn to_multi_image(&self) -> MultiImage {
        let scale = 1.0 / f64::from(self.maxval);
        let channels = (0..self.channels)
            .map(|c| {
                RealImage::from_fn(self.width, self.height, |x, y| {
                    f64::from(self.samples[(y * self.width + x) * self.channels + c]) * scale
                })
            })
            .collect();
        MultiImage::new(channels).expect("channels share dimensions")
    }

    /// Sample values as object ids (grayscale only).
    pub fn to_mask(&self) -> Result<InstanceMask> {
        if self.channels != 1 {
            return Err(Error::Format("instance masks must be single-channel PGM".into()));
        }
        InstanceMask::new(self.width, self.height, self.samples.iter().map(|&v| u32::from(v)).collect())
    }

    /// 16-bit PGM holding object ids.
    pub fn from_mask(mask: &InstanceMask) -> Result<Self> {
        let samples = mask
            .labels()
            .iter()
            .map(|&l| u16::try_from(l).map_err(|_| Error::Format(format!("object id {l} exceeds 65535"))))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { width: mask.width(), height: mask.height(), channels: 1, maxval: 65535, samples })
    }

    /// 8-bit PGM of `img` mapped linearly from `[lo, hi]` to `[0, 255]`.
    pub fn from_real_scaled(img: &RealImage, lo: f64, hi: f64) -> Self {
        let span = hi - lo;
        let samples = img
            .data()
            .iter()
            .map(|&v| if span > 0.0 { ((v - lo) / span * 255.0).round().clamp(0.0, 255.0) as u16 } else { 0 })
            .collect();
        Self { width: img.width(), height: img.height(), channels: 1, maxval: 255, samples }
    }

    /// 8-bit PGM/PPM from channels in `[0, 1]`.
    pub fn from_multi_image(img: &MultiImage) -> Self {
        let (w, h) = img.dims();
        let c = img.num_channels();
        let mut samples = Vec::with_capacity(w * h * c);
        for y in 0..h {
            for x in 0..w {
                for ch in img.channels() {
                    samples.push((ch.get(x, y) * 255.0).round().clamp(0.0, 255.0) as u16);
                }
            }
        }
        Self { width: w, height: h, channels: c, maxval: 255, samples }
    }
}

fn next_token<R: BufRead>(r: &mut R) -> Result<String> {
    let mut token = Vec::new();
    loop {
        let mut byte = [0u8; 1];
        if r.read(&mut byte)? == 0 {
            if token.is_empty() {
                return Err(Error::Format("truncated PNM header".into()));
            }
            break;
        }
        match byte[0] {
            b'#' if token.is_empty() => {
                let mut skip = Vec::new();
                r.read_until(b'\n', &mut skip)?;
            }
            b if b.is_ascii_whitespace() => {
                if !token.is_empty() {
                    break;
                }
            }
            b => token.push(b),
        }
    }
    String::from_utf8(token).map_err(|_| Error::Format("non-ASCII PNM header".into()))
}

fn header_number<R: BufRead>(r: &mut R, what: &str) -> Result<usize> {
    let t = next_token(r)?;
    t.parse().map_err(|_| Error::Format(format!("bad PNM {what}: {t:?}")))
}

pub fn read_pnm_from<R: Read>(reader: R) -> Result<PnmImage> {
    let mut r = BufReader::new(reader);
    let magic = next_token(&mut r)?;
    let channels = match magic.as_str() {
        "P5" => 1,
        "P6" => 3,
        other => return Err(Error::Format(format!("expected binary PGM (P5) or PPM (P6), found {other:?}"))),
    };
    let width = header_number(&mut r, "width")?;
    let height = header_number(&mut r, "height")?;
    let maxval = header_number(&mut r, "maxval")?;
    if width == 0 || height == 0 {
        return Err(Error::Format("PNM image has zero size".into()));
    }
    if maxval == 0 || maxval > 65535 {
        return Err(Error::Format(format!("PNM maxval {maxval} outside 1..=65535")));
    }
    let bytes_per = if maxval < 256 { 1 } else { 2 };
    let count = width * height * channels;
    let mut raw = vec![0u8; count * bytes_per];
    r.read_exact(&mut raw).map_err(|_| Error::Format("truncated PNM pixel data".into()))?;
    let samples: Vec<u16> = if bytes_per == 1 {
        raw.into_iter().map(u16::from).collect()
    } else {
        raw.chunks_exact(2).map(|b| u16::from_be_bytes([b[0], b[1]])).collect()
    };
    if let Some(v) = samples.iter().find(|&&v| usize::from(v) > maxval) {
        return Err(Error::Format(format!("sample {v} exceeds maxval {maxval}")));
    }
    Ok(PnmImage { width, height, channels, maxval: maxval as u16, samples })
}

pub fn write_pnm_to<W: Write>(img: &PnmImage, mut w: W) -> Result<()> {
    let magic = match img.channels {
        1 => "P5",
        3 => "P6",
        c => return Err(Error::Format(format!("cannot write {c}-channel PNM"))),
    };
    if img.samples.len() != img.width * img.height * img.channels {
        return Err(Error::LengthMismatch { expected: img.width * img.height * img.channels, actual: img.samples.len() });
    }
    write!(w, "{magic}\n{} {}\n{}\n", img.width, img.height, img.maxval)?;
    if img.maxval < 256 {
        let bytes: Vec<u8> = img.samples.iter().map(|&v| v.min(255) as u8).collect();
        w.write_all(&bytes)?;
    } else {
        let bytes: Vec<u8> = img.samples.iter().flat_map(|v| v.to_be_bytes()).collect();
        w.write_all(&bytes)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_pnm(path: impl AsRef<Path>) -> Result<PnmImage> {
    read_pnm_from(std::fs::File::open(path)?)
}

pub fn write_pnm(img: &PnmImage, path: impl AsRef<Path>) -> Result<()> {
    write_pnm_to(img, std::io::BufWriter::new(std::fs::File::create(path)?))
}
