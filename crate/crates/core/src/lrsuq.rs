//! Layered quantizer: exact additive-noise channel simulation.
//!
//! A density `f` is a mixture of uniform laws over its superlevel sets. The
//! encoder first draws a level from the shared randomness, then runs the
//! rejection-sampled quantizer for that level set against the Voronoi cell
//! scaled by `β(level)`. The decoder regenerates the level and the `K`-th
//! dither and outputs `β·(M + V_K)`.

use crate::dither::{DitherStream, LevelSource};
use crate::error::{Error, Result};
use crate::lattice::{ln_unit_ball_volume, Lattice};
use crate::rsuq::{default_max_iters, rejection_loop, replay, Description, Quantizer};

/// A continuous error law described through its superlevel sets.
///
/// Levels are passed around in a model-specific parameterization (any
/// monotone reparameterization of the density value `t`); the model converts
/// back with [`NoiseModel::density_at_level`].
pub trait NoiseModel {
    fn dim(&self) -> usize;

    /// Draw a level with density `f_T(t) = μ(L_t⁺(f))`. Must be a pure
    /// function of the source's output.
    fn sample_level(&self, src: &mut LevelSource) -> f64;

    fn in_level_set(&self, z: &[f64], level: f64) -> bool;

    /// Scale with `L_t⁺(f) ⊆ β·V(lat)`.
    fn beta(&self, level: f64, lat: &Lattice) -> f64;

    /// Density value `t` at this level.
    fn density_at_level(&self, level: f64) -> f64;

    /// `ln μ(L_t⁺(f))`, if known. Diagnostics only.
    fn level_log_volume(&self, _level: f64) -> Option<f64> {
        None
    }
}

/// `N(0, σ²I)`. The level is `v ~ χ²_{n+2}`: `t = (2πσ²)^{−n/2} e^{−v/2}` and
/// the level set is the ball of radius `σ√v`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianNoise {
    n: usize,
    sigma: f64,
}

impl GaussianNoise {
    pub fn new(n: usize) -> Self {
        GaussianNoise { n, sigma: 1.0 }
    }

    pub fn with_sigma(n: usize, sigma: f64) -> Result<Self> {
        if !(sigma > 0.0) || !sigma.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "sigma must be positive, got {sigma}"
            )));
        }
        Ok(GaussianNoise { n, sigma })
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }
}

impl NoiseModel for GaussianNoise {
    fn dim(&self) -> usize {
        self.n
    }

    fn sample_level(&self, src: &mut LevelSource) -> f64 {
        src.chi_square(self.n + 2)
    }

    fn in_level_set(&self, z: &[f64], level: f64) -> bool {
        z.iter().map(|v| v * v).sum::<f64>() <= self.sigma * self.sigma * level
    }

    fn beta(&self, level: f64, lat: &Lattice) -> f64 {
        self.sigma * level.sqrt() / lat.packing_radius()
    }

    fn density_at_level(&self, level: f64) -> f64 {
        let n = self.n as f64;
        (-0.5 * n * (2.0 * std::f64::consts::PI * self.sigma * self.sigma).ln() - level / 2.0).exp()
    }

    fn level_log_volume(&self, level: f64) -> Option<f64> {
        let n = self.n as f64;
        Some(ln_unit_ball_volume(self.n) + 0.5 * n * (self.sigma * self.sigma * level).ln())
    }
}

/// Layered quantizer for noise model `N` over lattice `lat`.
#[derive(Debug, Clone)]
pub struct Lrsuq<N> {
    noise: N,
    lat: Lattice,
    seed: u64,
    max_iters: u64,
}

impl<N: NoiseModel> Lrsuq<N> {
    pub fn new(noise: N, lat: Lattice, seed: u64) -> Result<Self> {
        if noise.dim() != lat.dim() {
            return Err(Error::DimensionMismatch {
                expected: lat.dim(),
                got: noise.dim(),
            });
        }
        let max_iters = default_max_iters(lat.packing_density());
        Ok(Lrsuq {
            noise,
            lat,
            seed,
            max_iters,
        })
    }

    pub fn with_max_iters(mut self, max_iters: u64) -> Self {
        self.max_iters = max_iters.max(1);
        self
    }

    pub fn noise(&self) -> &N {
        &self.noise
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// The level shared by encoder and decoder for vector `index`.
    pub fn level_for(&self, index: u64) -> f64 {
        let mut src = LevelSource::for_vector(self.seed, index);
        self.noise.sample_level(&mut src)
    }

    fn beta_checked(&self, level: f64) -> Result<f64> {
        let beta = self.noise.beta(level, &self.lat);
        if !(beta > 0.0) || !beta.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "noise model returned β = {beta}"
            )));
        }
        Ok(beta)
    }

    /// Conditional per-dither acceptance probability
    /// `μ(L⁺) / μ(β·V) `; for Gaussian noise this is `δ(lat)` at every level.
    pub fn acceptance_probability_given_level(&self, level: f64) -> Option<f64> {
        let log_vol = self.noise.level_log_volume(level)?;
        let beta = self.noise.beta(level, &self.lat);
        let n = self.lat.dim() as f64;
        Some((log_vol - n * beta.ln() - self.lat.det().ln()).exp())
    }

    pub fn encode(&self, x: &[f64]) -> Result<Description> {
        self.encode_indexed(0, x).map(|(d, _)| d)
    }

    pub fn decode(&self, d: &Description) -> Result<Vec<f64>> {
        self.decode_indexed(0, d)
    }
}

impl<N: NoiseModel> Quantizer for Lrsuq<N> {
    fn dim(&self) -> usize {
        self.lat.dim()
    }

    fn lattice(&self) -> &Lattice {
        &self.lat
    }

    /// Level-averaged acceptance probability; exact for models whose
    /// conditional acceptance does not depend on the level (Gaussian).
    fn stop_probability(&self) -> f64 {
        self.acceptance_probability_given_level(1.0)
            .filter(|p| *p > 0.0 && *p <= 1.0 + 1e-12)
            .map(|p| p.min(1.0))
            .unwrap_or_else(|| self.lat.packing_density())
    }

    fn encode_indexed(&self, index: u64, x: &[f64]) -> Result<(Description, Vec<f64>)> {
        if x.len() != self.lat.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.lat.dim(),
                got: x.len(),
            });
        }
        let level = self.level_for(index);
        let beta = self.beta_checked(level)?;
        let mut stream = DitherStream::for_vector(self.seed, index, &self.lat, 1.0);
        rejection_loop(&self.lat, beta, x, &mut stream, self.max_iters, |z| {
            self.noise.in_level_set(z, level)
        })
    }

    fn decode_indexed(&self, index: u64, d: &Description) -> Result<Vec<f64>> {
        let level = self.level_for(index);
        let beta = self.beta_checked(level)?;
        let mut stream = DitherStream::for_vector(self.seed, index, &self.lat, 1.0);
        replay(&self.lat, beta, &mut stream, d)
    }
}
