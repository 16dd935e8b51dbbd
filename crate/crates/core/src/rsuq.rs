//! Rejection-sampled universal quantization.
//!
//! The encoder keeps drawing shared dithers `V_i`, quantizes `x − V_i` to the
//! scaled lattice and stops at the first index whose reconstruction error
//! lands in the target set. The error is then exactly uniform over that set
//! and independent of the input. For the ball `r·Bⁿ` against the Voronoi cell
//! scaled by `γ = r/λ̲`, each attempt succeeds with probability `δ(lat)`.

use crate::dither::DitherStream;
use crate::error::{Error, Result};
use crate::lattice::Lattice;

/// Compressible output of an encoder: stopping index `K ≥ 1` and the integer
/// coordinates of the lattice point `M`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Description {
    pub k: u64,
    pub coords: Vec<i64>,
}

impl Description {
    /// Real position of `M` in the lattice scaled by `scale`.
    pub fn embedding(&self, lat: &Lattice, scale: f64) -> Vec<f64> {
        lat.embed(&self.coords)
            .into_iter()
            .map(|v| scale * v)
            .collect()
    }
}

/// Common surface of the ball quantizer and the layered quantizer, used by
/// the batch drivers, the container format and the Monte-Carlo harness.
pub trait Quantizer {
    fn dim(&self) -> usize;

    fn lattice(&self) -> &Lattice;

    /// Per-attempt acceptance probability; the stopping index is `Geom` of it.
    fn stop_probability(&self) -> f64;

    /// Encode the `index`-th vector of a batch. Returns the description and the
    /// encoder-side reconstruction.
    fn encode_indexed(&self, index: u64, x: &[f64]) -> Result<(Description, Vec<f64>)>;

    fn decode_indexed(&self, index: u64, d: &Description) -> Result<Vec<f64>>;
}

/// `scale · (G·j + u)`, shared by encoder and decoder so both produce the
/// same bits.
pub(crate) fn reconstruct(
    lat: &Lattice,
    scale: f64,
    coords: &[i64],
    unit_dither: &[f64],
) -> Vec<f64> {
    lat.embed(coords)
        .iter()
        .zip(unit_dither)
        .map(|(m, u)| scale * (m + u))
        .collect()
}

/// Core rejection loop against the basic cell `scale·V(lat)`.
pub(crate) fn rejection_loop(
    lat: &Lattice,
    scale: f64,
    x: &[f64],
    stream: &mut DitherStream<'_>,
    max_iters: u64,
    mut accept: impl FnMut(&[f64]) -> bool,
) -> Result<(Description, Vec<f64>)> {
    let mut target = vec![0.0; x.len()];
    let mut err = vec![0.0; x.len()];
    for k in 1..=max_iters {
        let u = stream.next_unit();
        for ((t, xi), ui) in target.iter_mut().zip(x).zip(&u) {
            *t = xi / scale - ui;
        }
        let coords = lat.nearest_coords(&target);
        let y = reconstruct(lat, scale, &coords, &u);
        for ((e, yi), xi) in err.iter_mut().zip(&y).zip(x) {
            *e = yi - xi;
        }
        if accept(&err) {
            return Ok((Description { k, coords }, y));
        }
    }
    Err(Error::MaxIterations(max_iters))
}

pub(crate) fn replay(
    lat: &Lattice,
    scale: f64,
    stream: &mut DitherStream<'_>,
    d: &Description,
) -> Result<Vec<f64>> {
    if d.k == 0 {
        return Err(Error::InvalidParameter(
            "stopping index must be at least 1".into(),
        ));
    }
    if d.coords.len() != lat.dim() {
        return Err(Error::DimensionMismatch {
            expected: lat.dim(),
            got: d.coords.len(),
        });
    }
    stream.jump_to(d.k - 1);
    let u = stream.next_unit();
    Ok(reconstruct(lat, scale, &d.coords, &u))
}

/// `⌈50/p⌉`: the cap is hit with probability `(1−p)^cap < e⁻⁵⁰`.
pub fn default_max_iters(p: f64) -> u64 {
    (50.0 / p).ceil() as u64
}

/// Ball quantizer: error uniform over `r·Bⁿ`.
#[derive(Debug, Clone)]
pub struct RsuqConfig {
    lat: Lattice,
    radius: f64,
    scale: f64,
    seed: u64,
    max_iters: u64,
}

impl RsuqConfig {
    /// Ball of radius `radius` against the Voronoi cell scaled by
    /// `γ = radius / λ̲(lat)`, the smallest scale containing the ball.
    pub fn new(lat: Lattice, radius: f64, seed: u64) -> Result<Self> {
        if !(radius > 0.0) || !radius.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "radius must be positive, got {radius}"
            )));
        }
        let scale = radius / lat.packing_radius();
        let max_iters = default_max_iters(lat.packing_density());
        Ok(RsuqConfig {
            lat,
            radius,
            scale,
            seed,
            max_iters,
        })
    }

    pub fn with_max_iters(mut self, max_iters: u64) -> Self {
        self.max_iters = max_iters.max(1);
        self
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    /// `γ`, the lattice scale.
    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn max_iters(&self) -> u64 {
        self.max_iters
    }

    /// `μ(rBⁿ)/μ(γV) = δ(lat)`.
    pub fn acceptance_probability(&self) -> f64 {
        self.lat.packing_density()
    }

    fn check(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.lat.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.lat.dim(),
                got: x.len(),
            });
        }
        Ok(())
    }

    pub fn encode(&self, x: &[f64]) -> Result<Description> {
        self.encode_indexed(0, x).map(|(d, _)| d)
    }

    pub fn decode(&self, d: &Description) -> Result<Vec<f64>> {
        self.decode_indexed(0, d)
    }

    /// `decode(encode(x)) − x`, distributed `Unif(rBⁿ)` whatever `x` is.
    pub fn error_sample(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.error_sample_indexed(0, x)
    }

    pub fn error_sample_indexed(&self, index: u64, x: &[f64]) -> Result<Vec<f64>> {
        let (_, y) = self.encode_indexed(index, x)?;
        Ok(y.iter().zip(x).map(|(a, b)| a - b).collect())
    }
}

impl Quantizer for RsuqConfig {
    fn dim(&self) -> usize {
        self.lat.dim()
    }

    fn lattice(&self) -> &Lattice {
        &self.lat
    }

    fn stop_probability(&self) -> f64 {
        self.acceptance_probability()
    }

    fn encode_indexed(&self, index: u64, x: &[f64]) -> Result<(Description, Vec<f64>)> {
        self.check(x)?;
        let mut stream = DitherStream::for_vector(self.seed, index, &self.lat, self.scale);
        let r2 = self.radius * self.radius;
        rejection_loop(&self.lat, self.scale, x, &mut stream, self.max_iters, |z| {
            z.iter().map(|v| v * v).sum::<f64>() <= r2
        })
    }

    fn decode_indexed(&self, index: u64, d: &Description) -> Result<Vec<f64>> {
        let mut stream = DitherStream::for_vector(self.seed, index, &self.lat, self.scale);
        replay(&self.lat, self.scale, &mut stream, d)
    }
}

/// Quantizer for an arbitrary target set `A ⊆ γ·V(lat)` given by a
/// membership predicate on the error vector. The caller is responsible for
/// the containment; the acceptance probability is `μ(A)/μ(γV)`.
pub struct SetRsuq<F> {
    lat: Lattice,
    scale: f64,
    seed: u64,
    max_iters: u64,
    acceptance: f64,
    in_set: F,
}

impl<F: Fn(&[f64]) -> bool> SetRsuq<F> {
    pub fn new(lat: Lattice, scale: f64, seed: u64, acceptance: f64, in_set: F) -> Result<Self> {
        if !(scale > 0.0) || !scale.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "scale must be positive, got {scale}"
            )));
        }
        if !(acceptance > 0.0 && acceptance <= 1.0) {
            return Err(Error::InvalidParameter(format!(
                "acceptance {acceptance} outside (0, 1]"
            )));
        }
        Ok(SetRsuq {
            lat,
            scale,
            seed,
            max_iters: default_max_iters(acceptance),
            acceptance,
            in_set,
        })
    }
}

impl<F: Fn(&[f64]) -> bool> Quantizer for SetRsuq<F> {
    fn dim(&self) -> usize {
        self.lat.dim()
    }

    fn lattice(&self) -> &Lattice {
        &self.lat
    }

    fn stop_probability(&self) -> f64 {
        self.acceptance
    }

    fn encode_indexed(&self, index: u64, x: &[f64]) -> Result<(Description, Vec<f64>)> {
        if x.len() != self.lat.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.lat.dim(),
                got: x.len(),
            });
        }
        let mut stream = DitherStream::for_vector(self.seed, index, &self.lat, self.scale);
        rejection_loop(
            &self.lat,
            self.scale,
            x,
            &mut stream,
            self.max_iters,
            &self.in_set,
        )
    }

    fn decode_indexed(&self, index: u64, d: &Description) -> Result<Vec<f64>> {
        let mut stream = DitherStream::for_vector(self.seed, index, &self.lat, self.scale);
        replay(&self.lat, self.scale, &mut stream, d)
    }
}
