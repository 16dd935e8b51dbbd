//! Entropy coding of descriptions and the `RSQ1` / `VQF1` file formats.
//!
//! The stopping index is geometric, so it gets the optimal Golomb code for
//! the acceptance probability. Lattice coordinates are written as fixed-width
//! offset-binary integers with a per-stream bound `B`.
//!
//! `RSQ1` layout (all integers little-endian):
//!
//! | field        | type                        |
//! |--------------|-----------------------------|
//! | magic        | `b"RSQ1"`                   |
//! | version      | `u8` (= 1)                  |
//! | n            | `u32`                       |
//! | lattice id   | `u16` length + UTF-8 bytes  |
//! | scale        | `f64`                       |
//! | param        | `f64` (radius or noise σ)   |
//! | mode         | `u8` (0 ball, 1 Gaussian)   |
//! | seed         | `u64`                       |
//! | count        | `u64`                       |
//! | coord bound  | `u32`                       |
//!
//! followed by a bit-packed (MSB first) payload: per vector the Golomb code
//! of `K`, then `n` coordinates of `⌈log₂(2B+1)⌉` bits holding `j + B`. The
//! payload is zero-padded to a byte boundary once, at the end.
//!
//! The lattice id is a built-in family name (`Zn`, `Dn`, `A2`, `E8`) or
//! `user:` followed by the lattice's text config, so files decode without
//! any side information.

use crate::error::{Error, Result};
use crate::lattice::{builtin_lattice, Lattice};
use crate::lrsuq::{GaussianNoise, Lrsuq};
use crate::rsuq::{Description, Quantizer, RsuqConfig};

pub const STREAM_MAGIC: &[u8; 4] = b"RSQ1";
pub const STREAM_VERSION: u8 = 1;
pub const VECTOR_MAGIC: &[u8; 4] = b"VQF1";
const USER_PREFIX: &str = "user:";

#[derive(Debug, Default, Clone)]
pub struct BitWriter {
    bytes: Vec<u8>,
    len: u64,
}

impl BitWriter {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, bit: bool) {
        if self.len.is_multiple_of(8) {
            self.bytes.push(0);
        }
        if bit {
            let last = self.bytes.last_mut().expect("byte allocated");
            *last |= 0x80 >> (self.len % 8);
        }
        self.len += 1;
    }

    /// Low `width` bits of `value`, most significant first.
    pub fn push_bits(&mut self, value: u64, width: u32) {
        for i in (0..width).rev() {
            self.push(value >> i & 1 == 1);
        }
    }

    pub fn bit_len(&self) -> u64 {
        self.len
    }

    pub fn into_bytes(self) -> Vec<u8> {
        self.bytes
    }

    /// The written bits as a `'0'`/`'1'` string.
    pub fn to_bit_string(&self) -> String {
        (0..self.len)
            .map(|i| {
                if self.bytes[(i / 8) as usize] & (0x80 >> (i % 8)) != 0 {
                    '1'
                } else {
                    '0'
                }
            })
            .collect()
    }
}

#[derive(Debug, Clone)]
pub struct BitReader<'a> {
    bytes: &'a [u8],
    pos: u64,
}

impl<'a> BitReader<'a> {
    pub fn new(bytes: &'a [u8]) -> Self {
        BitReader { bytes, pos: 0 }
    }

    pub fn read(&mut self) -> Result<bool> {
        let byte = *self
            .bytes
            .get((self.pos / 8) as usize)
            .ok_or(Error::Truncated)?;
        let bit = byte & (0x80 >> (self.pos % 8)) != 0;
        self.pos += 1;
        Ok(bit)
    }

    pub fn read_bits(&mut self, width: u32) -> Result<u64> {
        let mut v = 0u64;
        for _ in 0..width {
            v = v << 1 | self.read()? as u64;
        }
        Ok(v)
    }

    pub fn position(&self) -> u64 {
        self.pos
    }

    pub fn remaining(&self) -> u64 {
        (self.bytes.len() as u64 * 8).saturating_sub(self.pos)
    }
}

/// Golomb code with parameter `m` for `k ≥ 1`: `⌊(k−1)/m⌋` in unary (ones
/// terminated by a zero), then `(k−1) mod m` in truncated binary.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GolombCode {
    p: f64,
    m: u64,
}

impl GolombCode {
    /// Optimal code for `Geom(p)`: the smallest `m` with
    /// `(1−p)^m + (1−p)^{m+1} ≤ 1`.
    pub fn for_probability(p: f64) -> Result<Self> {
        if !(p > 0.0 && p <= 1.0) {
            return Err(Error::InvalidParameter(format!(
                "success probability {p} outside (0, 1]"
            )));
        }
        let q = 1.0 - p;
        let mut m = 1u64;
        while q.powf(m as f64) + q.powf(m as f64 + 1.0) > 1.0 {
            m += 1;
        }
        Ok(GolombCode { p, m })
    }

    pub fn with_parameter(m: u64) -> Result<Self> {
        if m == 0 {
            return Err(Error::InvalidParameter(
                "Golomb parameter must be positive".into(),
            ));
        }
        Ok(GolombCode { p: f64::NAN, m })
    }

    pub fn parameter(&self) -> u64 {
        self.m
    }

    pub fn probability(&self) -> f64 {
        self.p
    }

    /// `(b, cutoff)` with `b = ⌈log₂ m⌉`: remainders below `cutoff` use `b − 1` bits.
    fn truncated_binary(&self) -> (u32, u64) {
        if self.m == 1 {
            return (0, 0);
        }
        let b = 64 - (self.m - 1).leading_zeros();
        (b, (1u64 << b) - self.m)
    }

    pub fn encode(&self, k: u64, out: &mut BitWriter) -> Result<()> {
        if k == 0 {
            return Err(Error::InvalidParameter(
                "Golomb input must be at least 1".into(),
            ));
        }
        let v = k - 1;
        let (q, r) = (v / self.m, v % self.m);
        for _ in 0..q {
            out.push(true);
        }
        out.push(false);
        let (b, cutoff) = self.truncated_binary();
        if b > 0 {
            if r < cutoff {
                out.push_bits(r, b - 1);
            } else {
                out.push_bits(r + cutoff, b);
            }
        }
        Ok(())
    }

    pub fn decode(&self, input: &mut BitReader<'_>) -> Result<u64> {
        let mut q = 0u64;
        while input.read()? {
            q += 1;
        }
        let (b, cutoff) = self.truncated_binary();
        let r = if b == 0 {
            0
        } else {
            let head = input.read_bits(b - 1)?;
            if head < cutoff {
                head
            } else {
                ((head << 1) | input.read()? as u64) - cutoff
            }
        };
        q.checked_mul(self.m)
            .and_then(|v| v.checked_add(r))
            .and_then(|v| v.checked_add(1))
            .ok_or(Error::MalformedCodeword)
    }

    pub fn codeword(&self, k: u64) -> Result<String> {
        let mut w = BitWriter::new();
        self.encode(k, &mut w)?;
        Ok(w.to_bit_string())
    }

    pub fn codeword_len(&self, k: u64) -> u64 {
        let v = k.saturating_sub(1);
        let (b, cutoff) = self.truncated_binary();
        let tail = if b == 0 {
            0
        } else if v % self.m < cutoff {
            b as u64 - 1
        } else {
            b as u64
        };
        v / self.m + 1 + tail
    }
}

/// Entropy in bits of `Geom(p)` on `{1, 2, …}`: `(−p log p − (1−p) log(1−p)) / p`.
pub fn geometric_entropy(p: f64) -> f64 {
    if p >= 1.0 {
        return 0.0;
    }
    let q = 1.0 - p;
    (-p * p.log2() - q * q.log2()) / p
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Ball = 0,
    Gaussian = 1,
}

impl TryFrom<u8> for Mode {
    type Error = Error;

    fn try_from(v: u8) -> Result<Self> {
        match v {
            0 => Ok(Mode::Ball),
            1 => Ok(Mode::Gaussian),
            other => Err(Error::Corrupt(format!("unknown mode {other}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StreamHeader {
    pub n: u32,
    pub lattice_id: String,
    pub scale: f64,
    /// Ball radius in [`Mode::Ball`], noise standard deviation in [`Mode::Gaussian`].
    pub param: f64,
    pub mode: Mode,
    pub seed: u64,
    pub count: u64,
    pub coord_bound: u32,
}

/// Identifier stored in the header for `lat`.
pub fn lattice_id(lat: &Lattice) -> String {
    if lat.is_builtin() {
        lat.name().to_string()
    } else {
        format!("{USER_PREFIX}{}", lat.to_config())
    }
}

/// Rebuild a lattice from a header identifier.
pub fn resolve_lattice(id: &str, n: usize) -> Result<Lattice> {
    match id.strip_prefix(USER_PREFIX) {
        Some(config) => {
            let lat = Lattice::parse_config("user", config)?;
            if lat.dim() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    got: lat.dim(),
                });
            }
            Ok(lat)
        }
        None => builtin_lattice(id, n),
    }
}

impl StreamHeader {
    pub fn lattice(&self) -> Result<Lattice> {
        resolve_lattice(&self.lattice_id, self.n as usize)
    }

    /// Golomb code for the stopping index; both modes stop with probability `δ(lat)`.
    pub fn golomb(&self) -> Result<GolombCode> {
        GolombCode::for_probability(self.lattice()?.packing_density().min(1.0))
    }

    fn write(&self, out: &mut Vec<u8>) -> Result<()> {
        out.extend_from_slice(STREAM_MAGIC);
        out.push(STREAM_VERSION);
        out.extend_from_slice(&self.n.to_le_bytes());
        let id = self.lattice_id.as_bytes();
        let len: u16 = id
            .len()
            .try_into()
            .map_err(|_| Error::InvalidParameter("lattice id longer than 65535 bytes".into()))?;
        out.extend_from_slice(&len.to_le_bytes());
        out.extend_from_slice(id);
        out.extend_from_slice(&self.scale.to_le_bytes());
        out.extend_from_slice(&self.param.to_le_bytes());
        out.push(self.mode as u8);
        out.extend_from_slice(&self.seed.to_le_bytes());
        out.extend_from_slice(&self.count.to_le_bytes());
        out.extend_from_slice(&self.coord_bound.to_le_bytes());
        Ok(())
    }

    fn read(bytes: &[u8]) -> Result<(Self, usize)> {
        let mut cur = Cursor { bytes, pos: 0 };
        if cur.take(4)? != STREAM_MAGIC {
            return Err(Error::BadMagic { expected: "RSQ1" });
        }
        let version = cur.u8()?;
        if version != STREAM_VERSION {
            return Err(Error::UnsupportedVersion(version));
        }
        let n = cur.u32()?;
        let len = u16::from_le_bytes(cur.array()?) as usize;
        let lattice_id = String::from_utf8(cur.take(len)?.to_vec())
            .map_err(|_| Error::Corrupt("lattice id is not UTF-8".into()))?;
        let scale = f64::from_le_bytes(cur.array()?);
        let param = f64::from_le_bytes(cur.array()?);
        let mode = Mode::try_from(cur.u8()?)?;
        let seed = cur.u64()?;
        let count = cur.u64()?;
        let coord_bound = cur.u32()?;
        if n == 0 {
            return Err(Error::Corrupt("zero dimension".into()));
        }
        Ok((
            StreamHeader {
                n,
                lattice_id,
                scale,
                param,
                mode,
                seed,
                count,
                coord_bound,
            },
            cur.pos,
        ))
    }
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, len: usize) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(len).ok_or(Error::Truncated)?;
        let s = self.bytes.get(self.pos..end).ok_or(Error::Truncated)?;
        self.pos = end;
        Ok(s)
    }

    fn array<const N: usize>(&mut self) -> Result<[u8; N]> {
        Ok(self.take(N)?.try_into().expect("length checked"))
    }

    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.array()?))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.array()?))
    }
}

/// `⌈log₂(2B+1)⌉`.
pub fn coord_width(bound: u32) -> u32 {
    let span = 2 * bound as u64;
    64 - span.leading_zeros()
}

/// Smallest bound covering every coordinate of `descs`.
pub fn coord_bound_for(descs: &[Description]) -> Result<u32> {
    let max = descs
        .iter()
        .flat_map(|d| d.coords.iter())
        .map(|c| c.unsigned_abs())
        .max()
        .unwrap_or(0);
    u32::try_from(max)
        .map_err(|_| Error::InvalidParameter(format!("coordinate magnitude {max} exceeds u32")))
}

/// Payload bits for one description.
pub fn description_bits(code: &GolombCode, d: &Description, bound: u32) -> u64 {
    code.codeword_len(d.k) + d.coords.len() as u64 * coord_width(bound) as u64
}

pub fn encode_stream(header: &StreamHeader, descs: &[Description]) -> Result<Vec<u8>> {
    if header.count != descs.len() as u64 {
        return Err(Error::InvalidParameter(format!(
            "header count {} does not match {} descriptions",
            header.count,
            descs.len()
        )));
    }
    let code = header.golomb()?;
    let bound = header.coord_bound;
    let width = coord_width(bound);
    let mut out = Vec::new();
    header.write(&mut out)?;
    let mut bits = BitWriter::new();
    for d in descs {
        if d.coords.len() != header.n as usize {
            return Err(Error::DimensionMismatch {
                expected: header.n as usize,
                got: d.coords.len(),
            });
        }
        code.encode(d.k, &mut bits)?;
        for &c in &d.coords {
            if c.unsigned_abs() > bound as u64 {
                return Err(Error::CoordinateOutOfBound { value: c, bound });
            }
            bits.push_bits((c + bound as i64) as u64, width);
        }
    }
    out.extend(bits.into_bytes());
    Ok(out)
}

pub fn decode_stream(bytes: &[u8]) -> Result<(StreamHeader, Vec<Description>)> {
    let (header, offset) = StreamHeader::read(bytes)?;
    let code = header.golomb()?;
    let bound = header.coord_bound as i64;
    let width = coord_width(header.coord_bound);
    let n = header.n as usize;
    let mut reader = BitReader::new(&bytes[offset..]);
    // each description needs at least one bit
    if header.count > reader.remaining() {
        return Err(Error::Truncated);
    }
    let mut descs = Vec::with_capacity(header.count as usize);
    for _ in 0..header.count {
        let k = code.decode(&mut reader)?;
        let mut coords = Vec::with_capacity(n);
        for _ in 0..n {
            let raw = reader.read_bits(width)? as i64;
            if raw > 2 * bound {
                return Err(Error::Corrupt(format!(
                    "coordinate code {raw} exceeds 2B = {}",
                    2 * bound
                )));
            }
            coords.push(raw - bound);
        }
        descs.push(Description { k, coords });
    }
    let left = reader.remaining();
    if left >= 8 {
        return Err(Error::Corrupt(format!("{left} trailing payload bits")));
    }
    for _ in 0..left {
        if reader.read()? {
            return Err(Error::Corrupt("non-zero padding".into()));
        }
    }
    Ok((header, descs))
}

/// Everything needed to rebuild the quantizer behind a stream.
#[derive(Debug, Clone)]
pub struct StreamSpec {
    pub lattice: Lattice,
    pub mode: Mode,
    /// Ball radius or noise σ.
    pub param: f64,
    pub seed: u64,
}

impl StreamSpec {
    pub fn ball(lattice: Lattice, radius: f64, seed: u64) -> Self {
        StreamSpec {
            lattice,
            mode: Mode::Ball,
            param: radius,
            seed,
        }
    }

    pub fn gaussian(lattice: Lattice, sigma: f64, seed: u64) -> Self {
        StreamSpec {
            lattice,
            mode: Mode::Gaussian,
            param: sigma,
            seed,
        }
    }

    pub fn from_header(h: &StreamHeader) -> Result<Self> {
        let spec = StreamSpec {
            lattice: h.lattice()?,
            mode: h.mode,
            param: h.param,
            seed: h.seed,
        };
        let expect = spec.scale();
        if !((h.scale - expect).abs() <= 1e-12 * expect.abs()) {
            return Err(Error::Corrupt(format!(
                "scale {} does not match lattice and parameter ({expect})",
                h.scale
            )));
        }
        Ok(spec)
    }

    /// `γ = r/λ̲` for the ball; for Gaussian noise the per-vector scale is
    /// `β = scale·√v`, so this is `σ/λ̲`.
    pub fn scale(&self) -> f64 {
        self.param / self.lattice.packing_radius()
    }

    pub fn quantizer(&self) -> Result<Box<dyn Quantizer + Send + Sync>> {
        Ok(match self.mode {
            Mode::Ball => Box::new(RsuqConfig::new(
                self.lattice.clone(),
                self.param,
                self.seed,
            )?),
            Mode::Gaussian => {
                let noise = GaussianNoise::with_sigma(self.lattice.dim(), self.param)?;
                Box::new(Lrsuq::new(noise, self.lattice.clone(), self.seed)?)
            }
        })
    }

    pub fn header(&self, count: u64, coord_bound: u32) -> StreamHeader {
        StreamHeader {
            n: self.lattice.dim() as u32,
            lattice_id: lattice_id(&self.lattice),
            scale: self.scale(),
            param: self.param,
            mode: self.mode,
            seed: self.seed,
            count,
            coord_bound,
        }
    }

    /// Encode a batch (vector `i` uses index `i`). Returns the `RSQ1` bytes,
    /// the descriptions and the reconstructions the decoder will produce.
    pub fn encode(&self, xs: &[Vec<f64>]) -> Result<EncodedBatch> {
        let q = self.quantizer()?;
        let mut descriptions = Vec::with_capacity(xs.len());
        let mut outputs = Vec::with_capacity(xs.len());
        for (i, x) in xs.iter().enumerate() {
            let (d, y) = q.encode_indexed(i as u64, x)?;
            descriptions.push(d);
            outputs.push(y);
        }
        let header = self.header(xs.len() as u64, coord_bound_for(&descriptions)?);
        let bytes = encode_stream(&header, &descriptions)?;
        Ok(EncodedBatch {
            header,
            bytes,
            descriptions,
            outputs,
        })
    }
}

#[derive(Debug, Clone)]
pub struct EncodedBatch {
    pub header: StreamHeader,
    pub bytes: Vec<u8>,
    pub descriptions: Vec<Description>,
    pub outputs: Vec<Vec<f64>>,
}

impl EncodedBatch {
    /// Payload bits per vector (header excluded).
    pub fn payload_bits(&self) -> Result<u64> {
        let code = self.header.golomb()?;
        Ok(self
            .descriptions
            .iter()
            .map(|d| description_bits(&code, d, self.header.coord_bound))
            .sum())
    }
}

/// Decode an `RSQ1` stream back to reconstructions.
pub fn decode_vectors(bytes: &[u8]) -> Result<(StreamHeader, Vec<Vec<f64>>)> {
    let (header, descs) = decode_stream(bytes)?;
    let q = StreamSpec::from_header(&header)?.quantizer()?;
    let ys = descs
        .iter()
        .enumerate()
        .map(|(i, d)| q.decode_indexed(i as u64, d))
        .collect::<Result<Vec<_>>>()?;
    Ok((header, ys))
}

/// `VQF1`: magic, `u32` dimension, `u64` count, then `count·dim` `f64`, all LE.
pub fn write_vectors(dim: usize, vectors: &[Vec<f64>]) -> Result<Vec<u8>> {
    let dim32 =
        u32::try_from(dim).map_err(|_| Error::InvalidParameter("dimension exceeds u32".into()))?;
    let mut out = Vec::with_capacity(16 + vectors.len() * dim * 8);
    out.extend_from_slice(VECTOR_MAGIC);
    out.extend_from_slice(&dim32.to_le_bytes());
    out.extend_from_slice(&(vectors.len() as u64).to_le_bytes());
    for v in vectors {
        if v.len() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: v.len(),
            });
        }
        for x in v {
            out.extend_from_slice(&x.to_le_bytes());
        }
    }
    Ok(out)
}

pub fn read_vectors(bytes: &[u8]) -> Result<(usize, Vec<Vec<f64>>)> {
    let mut cur = Cursor { bytes, pos: 0 };
    if cur.take(4)? != VECTOR_MAGIC {
        return Err(Error::BadMagic { expected: "VQF1" });
    }
    let dim = cur.u32()? as usize;
    let count = cur.u64()?;
    let expected = (count as u128) * (dim as u128) * 8;
    let available = (bytes.len() - cur.pos) as u128;
    if expected > available {
        return Err(Error::Truncated);
    }
    if expected < available {
        return Err(Error::Corrupt(format!(
            "{} trailing bytes",
            available - expected
        )));
    }
    if dim == 0 && count > 0 {
        return Err(Error::Corrupt("zero dimension".into()));
    }
    let mut vectors = Vec::with_capacity(count as usize);
    for _ in 0..count {
        let mut v = Vec::with_capacity(dim);
        for _ in 0..dim {
            v.push(f64::from_le_bytes(cur.array()?));
        }
        vectors.push(v);
    }
    Ok((dim, vectors))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn header(n: u32, count: u64, bound: u32) -> StreamHeader {
        StreamHeader {
            n,
            lattice_id: "Zn".into(),
            scale: 1.0,
            param: 0.5,
            mode: Mode::Ball,
            seed: 42,
            count,
            coord_bound: bound,
        }
    }

    #[test]
    fn golomb_examples() {
        let unary = GolombCode::with_parameter(1).unwrap();
        assert_eq!(unary.codeword(3).unwrap(), "110");
        assert_eq!(unary.codeword(1).unwrap(), "0");
        assert_eq!(
            GolombCode::for_probability(PI / 4.0).unwrap().parameter(),
            1
        );
        assert_eq!(GolombCode::for_probability(0.5).unwrap().parameter(), 1);
        // (0.8)^3 + (0.8)^4 = 0.9216 ≤ 1 < (0.8)^2 + (0.8)^3 = 1.152
        assert_eq!(GolombCode::for_probability(0.2).unwrap().parameter(), 3);
        let g3 = GolombCode::with_parameter(3).unwrap();
        // remainders 0,1,2 → "0", "10", "11"
        assert_eq!(g3.codeword(1).unwrap(), "00");
        assert_eq!(g3.codeword(2).unwrap(), "010");
        assert_eq!(g3.codeword(3).unwrap(), "011");
        assert_eq!(g3.codeword(4).unwrap(), "100");
        assert!(unary.codeword(0).is_err());
        assert!(GolombCode::for_probability(0.0).is_err());
    }

    #[test]
    fn geometric_entropy_half() {
        assert!((geometric_entropy(0.5) - 2.0).abs() < 1e-12);
        assert_eq!(geometric_entropy(1.0), 0.0);
    }

    #[test]
    fn golomb_optimality_condition() {
        for &p in &[0.01, 0.05, 0.2, 0.3, 0.5, 0.7, PI / 4.0, 0.99] {
            let m = GolombCode::for_probability(p).unwrap().parameter() as i32;
            let q: f64 = 1.0 - p;
            assert!(q.powi(m) + q.powi(m + 1) <= 1.0);
            assert!(q.powi(m - 1) + q.powi(m) > 1.0);
        }
    }

    #[test]
    fn golomb_decode_errors() {
        let g = GolombCode::with_parameter(1).unwrap();
        let bytes = [0xFFu8];
        assert!(matches!(
            g.decode(&mut BitReader::new(&bytes)),
            Err(Error::Truncated)
        ));
    }

    #[test]
    fn hand_assembled_payload() {
        let descs = vec![Description {
            k: 1,
            coords: vec![0, 0],
        }];
        let bytes = encode_stream(&header(2, 1, 7), &descs).unwrap();
        let mut expect = BitWriter::new();
        for c in "001110111".chars() {
            expect.push(c == '1');
        }
        let payload = expect.into_bytes();
        assert_eq!(&bytes[bytes.len() - payload.len()..], payload.as_slice());
        let (h, back) = decode_stream(&bytes).unwrap();
        assert_eq!(h, header(2, 1, 7));
        assert_eq!(back, descs);
    }

    #[test]
    fn empty_stream() {
        let h = header(3, 0, 0);
        let bytes = encode_stream(&h, &[]).unwrap();
        let (back, descs) = decode_stream(&bytes).unwrap();
        assert_eq!(back, h);
        assert!(descs.is_empty());
    }

    #[test]
    fn stream_errors() {
        let descs = vec![Description {
            k: 2,
            coords: vec![3, -9],
        }];
        assert!(matches!(
            encode_stream(&header(2, 1, 8), &descs),
            Err(Error::CoordinateOutOfBound {
                value: -9,
                bound: 8
            })
        ));
        let bytes = encode_stream(&header(2, 1, 9), &descs).unwrap();
        let mut bad = bytes.clone();
        bad[0] = b'X';
        assert!(matches!(decode_stream(&bad), Err(Error::BadMagic { .. })));
        assert!(matches!(
            decode_stream(&bytes[..bytes.len() - 1]),
            Err(Error::Truncated)
        ));
        assert!(decode_stream(&bytes[..10]).is_err());
        let mut extra = bytes.clone();
        extra.push(0);
        assert!(matches!(decode_stream(&extra), Err(Error::Corrupt(_))));
        let mut v = bytes.clone();
        v[4] = 9;
        assert!(matches!(
            decode_stream(&v),
            Err(Error::UnsupportedVersion(9))
        ));
    }

    #[test]
    fn user_lattice_id_round_trip() {
        let lat = Lattice::parse_config("skew", "2\n1 0.3\n0 1.2\n").unwrap();
        let id = lattice_id(&lat);
        let back = resolve_lattice(&id, 2).unwrap();
        assert_eq!(back.generator(), lat.generator());
        assert_eq!(back.packing_radius(), lat.packing_radius());
        assert!(resolve_lattice(&id, 3).is_err());
    }

    #[test]
    fn vector_file() {
        let vs = vec![vec![1.0, -2.5], vec![f64::MAX, 0.0]];
        let bytes = write_vectors(2, &vs).unwrap();
        assert_eq!(read_vectors(&bytes).unwrap(), (2, vs));
        assert!(matches!(
            read_vectors(&bytes[..bytes.len() - 3]),
            Err(Error::Truncated)
        ));
        assert!(matches!(
            read_vectors(b"VQF0\0\0\0\0"),
            Err(Error::BadMagic { .. })
        ));
        let empty = write_vectors(4, &[]).unwrap();
        assert_eq!(read_vectors(&empty).unwrap(), (4, vec![]));
    }

    #[test]
    fn batch_round_trip_both_modes() {
        let xs: Vec<Vec<f64>> = (0..50)
            .map(|i| vec![i as f64 * 0.37 - 9.0, 3.0 - i as f64 * 0.11])
            .collect();
        for spec in [
            StreamSpec::ball(builtin_lattice("A2", 2).unwrap(), 0.3, 5),
            StreamSpec::gaussian(builtin_lattice("Zn", 2).unwrap(), 1.5, 6),
        ] {
            let batch = spec.encode(&xs).unwrap();
            let (h, ys) = decode_vectors(&batch.bytes).unwrap();
            assert_eq!(h, batch.header);
            assert_eq!(ys, batch.outputs);
            let bits = batch.payload_bits().unwrap();
            assert_eq!(
                batch.bytes.len() as u64 - bits.div_ceil(8),
                4 + 1 + 4 + 2 + h.lattice_id.len() as u64 + 8 + 8 + 1 + 8 + 8 + 4
            );
        }
        let mut h = StreamSpec::ball(builtin_lattice("Zn", 2).unwrap(), 0.3, 5).header(0, 0);
        h.scale *= 2.0;
        assert!(StreamSpec::from_header(&h).is_err());
    }

    #[test]
    fn widths() {
        assert_eq!(coord_width(0), 0);
        assert_eq!(coord_width(1), 2);
        assert_eq!(coord_width(7), 4);
        assert_eq!(coord_width(8), 5);
    }
}
