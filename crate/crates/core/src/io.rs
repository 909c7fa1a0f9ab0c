//! Binary field container and 8-bit previews.
//!
//! Container layout, all little-endian:
//!
//! | offset | size | content                                   |
//! |--------|------|-------------------------------------------|
//! | 0      | 4    | magic `CFLD`                              |
//! | 4      | 4    | format version (u32, currently 1)         |
//! | 8      | 8    | n (u64)                                   |
//! | 16     | 8    | dx in µm (f64)                            |
//! | 24     | 4    | domain: 0 position, 1 momentum            |
//! | 28     | 4    | content: 0 amplitude, 1 intensity         |
//! | 32     | 8    | payload length in bytes (u64)             |
//! | 40     | 24   | reserved, zero                            |
//!
//! The payload is n² interleaved `(re, im)` f64 pairs in row-major order;
//! intensity maps store `(value, 0)`.

use crate::error::{Error, Result};
use crate::field::{ComplexField, RealMap};
use crate::grid::{Domain, GridSpec};
use crate::Complex64;

pub const MAGIC: &[u8; 4] = b"CFLD";
pub const VERSION: u32 = 1;
pub const HEADER_LEN: usize = 64;

/// Largest n accepted when decoding.
pub const MAX_N: usize = 1 << 15;

/// Decoded container contents.
#[derive(Debug, Clone, PartialEq)]
pub enum Stored {
    Amplitude(ComplexField),
    Intensity(RealMap),
}

impl Stored {
    pub fn grid(&self) -> &GridSpec {
        match self {
            Stored::Amplitude(f) => f.grid(),
            Stored::Intensity(m) => m.grid(),
        }
    }

    pub fn domain(&self) -> Domain {
        match self {
            Stored::Amplitude(f) => f.domain(),
            Stored::Intensity(m) => m.domain(),
        }
    }

    /// Intensity view (|amplitude|² for amplitude content).
    pub fn intensity(&self) -> RealMap {
        match self {
            Stored::Amplitude(f) => f.intensity(),
            Stored::Intensity(m) => m.clone(),
        }
    }
}

fn header(grid: &GridSpec, domain: Domain, kind: u32) -> Vec<u8> {
    let n = grid.n();
    let mut out = Vec::with_capacity(HEADER_LEN + 16 * n * n);
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&(n as u64).to_le_bytes());
    out.extend_from_slice(&grid.dx().to_le_bytes());
    out.extend_from_slice(&domain_tag(domain).to_le_bytes());
    out.extend_from_slice(&kind.to_le_bytes());
    out.extend_from_slice(&((16 * n * n) as u64).to_le_bytes());
    out.resize(HEADER_LEN, 0);
    out
}

fn domain_tag(domain: Domain) -> u32 {
    match domain {
        Domain::Position => 0,
        Domain::Momentum => 1,
    }
}

pub fn encode_field(field: &ComplexField) -> Vec<u8> {
    let mut out = header(field.grid(), field.domain(), 0);
    for v in field.values() {
        out.extend_from_slice(&v.re.to_le_bytes());
        out.extend_from_slice(&v.im.to_le_bytes());
    }
    out
}

pub fn encode_map(map: &RealMap) -> Vec<u8> {
    let mut out = header(map.grid(), map.domain(), 1);
    for v in map.values() {
        out.extend_from_slice(&v.to_le_bytes());
        out.extend_from_slice(&0f64.to_le_bytes());
    }
    out
}

fn read<const N: usize>(bytes: &[u8], at: usize) -> [u8; N] {
    bytes[at..at + N].try_into().expect("header bounds checked")
}

/// Parse a container, validating every header field and the payload size.
pub fn decode(bytes: &[u8]) -> Result<Stored> {
    if bytes.len() < HEADER_LEN {
        return Err(Error::Format(format!("{} bytes is shorter than the {HEADER_LEN}-byte header", bytes.len())));
    }
    if &bytes[0..4] != MAGIC {
        return Err(Error::Format("bad magic".into()));
    }
    let version = u32::from_le_bytes(read(bytes, 4));
    if version != VERSION {
        return Err(Error::Format(format!("unsupported version {version}")));
    }
    let n = u64::from_le_bytes(read(bytes, 8));
    if n > MAX_N as u64 {
        return Err(Error::Format(format!("n = {n} exceeds {MAX_N}")));
    }
    let n = n as usize;
    let dx = f64::from_le_bytes(read(bytes, 16));
    let grid = GridSpec::new(n, dx).map_err(|e| Error::Format(e.to_string()))?;
    let domain = match u32::from_le_bytes(read(bytes, 24)) {
        0 => Domain::Position,
        1 => Domain::Momentum,
        t => return Err(Error::Format(format!("unknown domain tag {t}"))),
    };
    let kind = u32::from_le_bytes(read(bytes, 28));
    if kind > 1 {
        return Err(Error::Format(format!("unknown content tag {kind}")));
    }
    let declared = u64::from_le_bytes(read(bytes, 32));
    let expected = (16 * n * n) as u64;
    if declared != expected {
        return Err(Error::Format(format!("payload length {declared} does not match n = {n} ({expected})")));
    }
    if bytes[40..HEADER_LEN].iter().any(|&b| b != 0) {
        return Err(Error::Format("reserved header bytes are not zero".into()));
    }
    let payload = &bytes[HEADER_LEN..];
    if payload.len() as u64 != expected {
        return Err(Error::Format(format!("payload has {} bytes, header declares {expected}", payload.len())));
    }
    let pairs = payload.chunks_exact(16).map(|c| {
        (
            f64::from_le_bytes(c[0..8].try_into().unwrap()),
            f64::from_le_bytes(c[8..16].try_into().unwrap()),
        )
    });
    if kind == 0 {
        let values = pairs.map(|(re, im)| Complex64::new(re, im)).collect();
        Ok(Stored::Amplitude(ComplexField::new(grid, domain, values)?))
    } else {
        let mut values = Vec::with_capacity(n * n);
        for (i, (re, im)) in pairs.enumerate() {
            if im != 0.0 || !(re >= 0.0) {
                return Err(Error::Format(format!("intensity sample {i} is not a non-negative real")));
            }
            values.push(re);
        }
        Ok(Stored::Intensity(RealMap::new(grid, domain, values)?))
    }
}

/// Plain-text export of a map: one line per row from the most negative y,
/// values comma separated from the most negative x.
pub fn map_csv(map: &RealMap) -> String {
    let n = map.grid().n();
    let mut out = String::with_capacity(n * n * 12);
    for iy in 0..n {
        for ix in 0..n {
            if ix > 0 {
                out.push(',');
            }
            out.push_str(&map.at(ix, iy).to_string());
        }
        out.push('\n');
    }
    out
}

/// Binary PGM (P5) of `rows` × `cols` samples given row-major with the first
/// row at the top, scaled so the maximum maps to 255.
pub fn pgm(values: &[f64], cols: usize, rows: usize) -> Vec<u8> {
    assert_eq!(values.len(), cols * rows);
    let max = values.iter().copied().fold(0.0, f64::max);
    let mut out = format!("P5\n{cols} {rows}\n255\n").into_bytes();
    out.extend(values.iter().map(|&v| {
        if max > 0.0 {
            (v / max * 255.0).round().clamp(0.0, 255.0) as u8
        } else {
            0
        }
    }));
    out
}

/// Preview of a map with +y pointing up.
pub fn map_pgm(map: &RealMap) -> Vec<u8> {
    let n = map.grid().n();
    let flipped: Vec<f64> = (0..n).rev().flat_map(|iy| (0..n).map(move |ix| (ix, iy))).map(|(ix, iy)| map.at(ix, iy)).collect();
    pgm(&flipped, n, n)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample_field() -> ComplexField {
        let g = GridSpec::new(16, 2.5).unwrap();
        ComplexField::from_fn(g, Domain::Momentum, |x, y| Complex64::new(x, -y * 0.5)).unwrap()
    }

    #[test]
    fn round_trips_bit_exactly() {
        let f = sample_field();
        let bytes = encode_field(&f);
        assert_eq!(bytes.len(), HEADER_LEN + 16 * 256);
        assert_eq!(&bytes[..4], b"CFLD");
        assert_eq!(decode(&bytes).unwrap(), Stored::Amplitude(f.clone()));
        let m = f.intensity();
        assert_eq!(decode(&encode_map(&m)).unwrap(), Stored::Intensity(m));
    }

    #[test]
    fn rejects_damage() {
        let bytes = encode_field(&sample_field());
        assert!(decode(&bytes[..bytes.len() - 1]).is_err());
        assert!(decode(&bytes[..10]).is_err());
        let mut bad = bytes.clone();
        bad[0] = b'X';
        assert!(decode(&bad).is_err());
        let mut bad = bytes.clone();
        bad[24] = 7;
        assert!(decode(&bad).is_err());
        let mut bad = bytes.clone();
        bad[50] = 1;
        assert!(decode(&bad).is_err());
        let mut bad = bytes.clone();
        bad[8] = 17;
        assert!(decode(&bad).is_err());
        let mut bad = bytes;
        bad[HEADER_LEN..HEADER_LEN + 8].copy_from_slice(&f64::NAN.to_le_bytes());
        assert!(matches!(decode(&bad), Err(Error::NonFinite(0))));
    }

    #[test]
    fn csv_round_trips_values() {
        let m = sample_field().intensity();
        let text = map_csv(&m);
        let rows: Vec<Vec<f64>> = text.lines().map(|l| l.split(',').map(|v| v.parse().unwrap()).collect()).collect();
        assert_eq!(rows.len(), 16);
        assert_eq!(rows[3][5], m.at(5, 3));
    }

    #[test]
    fn pgm_scales_to_full_range() {
        let img = pgm(&[0.0, 1.0, 2.0, 4.0], 2, 2);
        assert!(img.starts_with(b"P5\n2 2\n255\n"));
        assert_eq!(&img[img.len() - 4..], &[0, 64, 128, 255]);
        let flat = pgm(&[0.0; 4], 2, 2);
        assert_eq!(&flat[flat.len() - 4..], &[0, 0, 0, 0]);
    }
}
