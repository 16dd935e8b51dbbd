//! Shared randomness: seed-reproducible dithers uniform over the Voronoi cell.
//!
//! Both sides of a link derive the same ChaCha8 keystream from
//! `(seed, vector index)`. Dithers live on stream 0 and consume exactly `n`
//! 64-bit words each, so [`DitherStream::jump_to`] is a constant-time seek.
//! Layer levels for the layered quantizer live on stream 1.

use rand::RngCore;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::lattice::Lattice;

const DITHER_STREAM: u64 = 0;
const LEVEL_STREAM: u64 = 1;

fn keyed_rng(seed: u64, index: u64, stream: u64) -> ChaCha8Rng {
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&seed.to_le_bytes());
    key[8..16].copy_from_slice(&index.to_le_bytes());
    let mut rng = ChaCha8Rng::from_seed(key);
    rng.set_stream(stream);
    rng
}

/// Uniform deviate in `[0, 1)` built from the top 53 bits of a word.
#[inline]
fn unit_uniform(word: u64) -> f64 {
    (word >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Deterministic source of i.i.d. dithers `V ~ Unif(γ·V(lat))`.
#[derive(Clone)]
pub struct DitherStream<'a> {
    seed: u64,
    index: u64,
    lat: &'a Lattice,
    scale: f64,
    counter: u128,
    rng: ChaCha8Rng,
}

impl<'a> DitherStream<'a> {
    /// Stream for vector 0 of `seed`.
    pub fn new(seed: u64, lat: &'a Lattice, scale: f64) -> Self {
        Self::for_vector(seed, 0, lat, scale)
    }

    /// Stream for the `index`-th vector of a batch; each vector gets an
    /// independent keystream so batches can be processed in any order.
    pub fn for_vector(seed: u64, index: u64, lat: &'a Lattice, scale: f64) -> Self {
        DitherStream {
            seed,
            index,
            lat,
            scale,
            counter: 0,
            rng: keyed_rng(seed, index, DITHER_STREAM),
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn vector_index(&self) -> u64 {
        self.index
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    /// Number of dithers drawn so far.
    pub fn counter(&self) -> u128 {
        self.counter
    }

    /// Position the stream so the next draw is draw number `draw_index`
    /// (zero-based) of a fresh stream.
    pub fn jump_to(&mut self, draw_index: u64) {
        let words_per_draw = 2 * self.lat.dim() as u128;
        self.rng.set_word_pos(draw_index as u128 * words_per_draw);
        self.counter = draw_index as u128;
    }

    /// Next dither at unit scale, i.e. uniform over `V(lat)`.
    ///
    /// A uniform point of the fundamental parallelepiped `G·[0,1)ⁿ` is folded
    /// into the Voronoi cell by subtracting its nearest lattice point; the
    /// fold is a measure-preserving bijection between basic cells.
    pub fn next_unit(&mut self) -> Vec<f64> {
        let n = self.lat.dim();
        let u: Vec<f64> = (0..n).map(|_| unit_uniform(self.rng.next_u64())).collect();
        self.counter += 1;
        let g = self.lat.generator();
        let w: Vec<f64> = (0..n)
            .map(|i| {
                g[i * n..(i + 1) * n]
                    .iter()
                    .zip(&u)
                    .map(|(a, b)| a * b)
                    .sum()
            })
            .collect();
        let j = self.lat.nearest_coords(&w);
        let p = self.lat.embed(&j);
        w.iter().zip(&p).map(|(a, b)| a - b).collect()
    }

    /// Next dither, uniform over `γ·V(lat)`.
    pub fn next_dither(&mut self) -> Vec<f64> {
        let s = self.scale;
        self.next_unit().into_iter().map(|v| s * v).collect()
    }
}

/// Deterministic uniform/normal deviates for layer-level sampling.
///
/// Transcendentals go through `libm` so the sampled level is bit-identical
/// on every platform the encoder or decoder might run on.
pub struct LevelSource {
    rng: ChaCha8Rng,
}

impl LevelSource {
    pub fn for_vector(seed: u64, index: u64) -> Self {
        LevelSource {
            rng: keyed_rng(seed, index, LEVEL_STREAM),
        }
    }

    /// Uniform deviate in `[0, 1)`.
    pub fn uniform(&mut self) -> f64 {
        unit_uniform(self.rng.next_u64())
    }

    /// A pair of independent standard normals (Box–Muller).
    pub fn normal_pair(&mut self) -> (f64, f64) {
        let u1 = 1.0 - self.uniform();
        let u2 = self.uniform();
        let radius = libm::sqrt(-2.0 * libm::log(u1));
        let angle = 2.0 * std::f64::consts::PI * u2;
        (radius * libm::cos(angle), radius * libm::sin(angle))
    }

    /// `χ²_k` as a sum of `k` squared normals; consumes `2·⌈k/2⌉` words.
    pub fn chi_square(&mut self, k: usize) -> f64 {
        let mut total = 0.0;
        let mut left = k;
        while left > 0 {
            let (a, b) = self.normal_pair();
            total += a * a;
            if left > 1 {
                total += b * b;
            }
            left = left.saturating_sub(2);
        }
        total
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::builtin_lattice;

    #[test]
    fn integer_cell_bounds() {
        let z2 = builtin_lattice("Zn", 2).unwrap();
        let mut s = DitherStream::new(7, &z2, 1.0);
        for _ in 0..10_000 {
            let v = s.next_dither();
            assert!(v.iter().all(|&c| c > -0.5 && c <= 0.5), "{v:?}");
        }
    }

    #[test]
    fn same_seed_same_stream() {
        let a2 = builtin_lattice("A2", 2).unwrap();
        let mut a = DitherStream::new(99, &a2, 0.7);
        let mut b = DitherStream::new(99, &a2, 0.7);
        for _ in 0..1000 {
            assert_eq!(a.next_dither(), b.next_dither());
        }
        let mut c = DitherStream::new(100, &a2, 0.7);
        assert_ne!(
            DitherStream::new(99, &a2, 0.7).next_dither(),
            c.next_dither()
        );
    }

    #[test]
    fn jump_matches_sequential() {
        let d4 = builtin_lattice("Dn", 4).unwrap();
        let mut fresh = DitherStream::new(3, &d4, 1.0);
        let seq: Vec<Vec<f64>> = (0..8).map(|_| fresh.next_dither()).collect();

        let mut s = DitherStream::new(3, &d4, 1.0);
        s.next_dither();
        s.jump_to(0);
        assert_eq!(s.next_dither(), seq[0]);
        s.jump_to(5);
        assert_eq!(s.next_dither(), seq[5]);
        assert_eq!(s.counter(), 6);
        let mut t = DitherStream::new(3, &d4, 1.0);
        t.jump_to(5);
        assert_eq!(t.next_dither(), seq[5]);
    }

    #[test]
    fn scalar_mean_is_centered() {
        let z1 = builtin_lattice("Zn", 1).unwrap();
        let mut s = DitherStream::new(11, &z1, 1.0);
        let n = 1_000_000;
        let mean: f64 = (0..n).map(|_| s.next_dither()[0]).sum::<f64>() / n as f64;
        let band = 3.0 * (1.0 / 12f64.sqrt()) / 1000.0;
        assert!(mean.abs() < band, "mean {mean}");
    }

    #[test]
    fn chi_square_mean() {
        let mut src = LevelSource::for_vector(5, 0);
        let n = 100_000;
        let mean: f64 = (0..n).map(|_| src.chi_square(4)).sum::<f64>() / n as f64;
        // sd of χ²₄ is √8
        assert!((mean - 4.0).abs() < 4.0 * 8f64.sqrt() / (n as f64).sqrt());
        let mean3: f64 = (0..n).map(|_| src.chi_square(3)).sum::<f64>() / n as f64;
        assert!((mean3 - 3.0).abs() < 4.0 * 6f64.sqrt() / (n as f64).sqrt());
    }
}
