//! Progressive radiance accumulation and image output.

use crate::Rgb;
use std::fs::File;
use std::io::{self, BufReader, BufWriter, Read, Write};
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum FilmError {
    #[error("sample frame has {got} pixels, film has {expected}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("image I/O failed: {0}")]
    Io(#[from] io::Error),
    #[error("malformed PFM: {0}")]
    Format(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ImageFormat {
    /// Little-endian RGB PFM of the linear average.
    LinearFloat,
    /// Binary PPM (P6) of the tonemapped average.
    Tonemapped8,
}

/// Running per-pixel mean. Every pixel always holds the same sample count.
#[derive(Debug, Clone, PartialEq)]
pub struct Film {
    pub width: u32,
    pub height: u32,
    pub accum: Vec<Rgb>,
    pub sample_count: u32,
}

impl Film {
    pub fn new(width: u32, height: u32) -> Film {
        Film {
            width,
            height,
            accum: vec![Rgb::ZERO; width as usize * height as usize],
            sample_count: 0,
        }
    }

    pub fn len(&self) -> usize {
        self.accum.len()
    }

    pub fn is_empty(&self) -> bool {
        self.accum.is_empty()
    }

    /// `accum += (sample - accum) / (n + 1)` for every pixel, then `n += 1`.
    pub fn add_sample_frame(&mut self, radiance: &[Rgb]) -> Result<(), FilmError> {
        if radiance.len() != self.accum.len() {
            return Err(FilmError::LengthMismatch {
                expected: self.accum.len(),
                got: radiance.len(),
            });
        }
        if self.sample_count == 0 {
            self.accum.copy_from_slice(radiance);
        } else {
            let n1 = self.sample_count as f64 + 1.0;
            for (a, &s) in self.accum.iter_mut().zip(radiance) {
                *a += (s - *a) / n1;
            }
        }
        self.sample_count += 1;
        Ok(())
    }

    /// Reinhard, gamma 1/2.2, round half up. Row-major, top row first.
    pub fn tonemap(&self) -> Vec<[u8; 3]> {
        self.accum
            .iter()
            .map(|c| [tonemap_channel(c.x), tonemap_channel(c.y), tonemap_channel(c.z)])
            .collect()
    }

    pub fn write_image(&self, path: impl AsRef<Path>, format: ImageFormat) -> Result<(), FilmError> {
        let mut w = BufWriter::new(File::create(path)?);
        match format {
            ImageFormat::LinearFloat => self.write_pfm(&mut w)?,
            ImageFormat::Tonemapped8 => self.write_ppm(&mut w)?,
        }
        w.flush()?;
        Ok(())
    }

    pub fn write_pfm<W: Write>(&self, w: &mut W) -> io::Result<()> {
        write!(w, "PF\n{} {}\n-1.0\n", self.width, self.height)?;
        let width = self.width as usize;
        for row in self.accum.chunks(width.max(1)).rev() {
            for c in row {
                for v in [c.x, c.y, c.z] {
                    w.write_all(&(v as f32).to_le_bytes())?;
                }
            }
        }
        Ok(())
    }

    pub fn write_ppm<W: Write>(&self, w: &mut W) -> io::Result<()> {
        write!(w, "P6\n{} {}\n255\n", self.width, self.height)?;
        for px in self.tonemap() {
            w.write_all(&px)?;
        }
        Ok(())
    }

    /// Reads an RGB PFM into a film with `sample_count = 1`.
    pub fn read_pfm(path: impl AsRef<Path>) -> Result<Film, FilmError> {
        let mut bytes = Vec::new();
        BufReader::new(File::open(path)?).read_to_end(&mut bytes)?;
        Film::parse_pfm(&bytes)
    }

    pub fn parse_pfm(bytes: &[u8]) -> Result<Film, FilmError> {
        let bad = |m: &str| FilmError::Format(m.to_string());
        // Header: three whitespace-separated tokens after the magic, ending in one whitespace byte.
        let mut pos = 0;
        let mut tokens = Vec::new();
        while tokens.len() < 4 {
            while pos < bytes.len() && bytes[pos].is_ascii_whitespace() {
                pos += 1;
            }
            let start = pos;
            while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() {
                pos += 1;
            }
            if start == pos {
                return Err(bad("truncated header"));
            }
            tokens.push(std::str::from_utf8(&bytes[start..pos]).map_err(|_| bad("non-ASCII header"))?);
        }
        pos += 1;
        if tokens[0] != "PF" {
            return Err(bad("only colour PFM (PF) is supported"));
        }
        let width: u32 = tokens[1].parse().map_err(|_| bad("bad width"))?;
        let height: u32 = tokens[2].parse().map_err(|_| bad("bad height"))?;
        let scale: f64 = tokens[3].parse().map_err(|_| bad("bad scale"))?;
        let little = scale < 0.0;
        let n = width as usize * height as usize;
        let data = bytes.get(pos..).unwrap_or(&[]);
        if data.len() != n * 12 {
            return Err(bad("pixel data length does not match dimensions"));
        }
        let mut accum = vec![Rgb::ZERO; n];
        let w = width as usize;
        for (k, px) in data.chunks_exact(12).enumerate() {
            let f = |i: usize| {
                let b = [px[i], px[i + 1], px[i + 2], px[i + 3]];
                (if little {
                    f32::from_le_bytes(b)
                } else {
                    f32::from_be_bytes(b)
                }) as f64
            };
            let (row, col) = (k / w, k % w);
            let dest = (height as usize - 1 - row) * w + col;
            accum[dest] = Rgb::new(f(0), f(4), f(8));
        }
        Ok(Film {
            width,
            height,
            accum,
            sample_count: 1,
        })
    }
}

pub fn tonemap_channel(x: f64) -> u8 {
    let x = if x.is_finite() {
        x.max(0.0)
    } else if x > 0.0 {
        f64::MAX
    } else {
        0.0
    };
    let mapped = (x / (1.0 + x)).powf(1.0 / 2.2);
    (mapped * 255.0 + 0.5).floor().clamp(0.0, 255.0) as u8
}
