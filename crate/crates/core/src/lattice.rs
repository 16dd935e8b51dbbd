//! Lattice geometry and exact nearest-point quantization.
//!
//! A lattice is stored by its generator matrix `G` whose columns are the basis
//! vectors, so a point with integer coordinates `j` sits at `G·j`. Built-in
//! families (`Zn`, `Dn`, `A2`, `E8`) have closed-form decoders; user lattices
//! fall back to a bounded enumeration that is exact but exponential in `n`.
//!
//! Voronoi ties are broken towards the lexicographically smallest `j`, which
//! makes the Voronoi cell a proper basic cell (each point of space belongs to
//! exactly one cell).

use std::collections::HashSet;
use std::fmt;
use std::path::Path;

use nalgebra::DMatrix;
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};

/// `ln κ_n`, the log-volume of the unit `n`-ball.
pub fn ln_unit_ball_volume(n: usize) -> f64 {
    let h = n as f64 / 2.0;
    h * std::f64::consts::PI.ln() - ln_gamma(h + 1.0)
}

/// `κ_n`, the volume of the unit `n`-ball.
pub fn unit_ball_volume(n: usize) -> f64 {
    ln_unit_ball_volume(n).exp()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Family {
    Integer,
    Checkerboard,
    Hexagonal,
    Gosset,
    User,
}

/// A lattice point: integer basis coordinates plus the real embedding `G·j`.
#[derive(Debug, Clone, PartialEq)]
pub struct LatticePoint {
    pub coords: Vec<i64>,
    pub embedding: Vec<f64>,
}

/// Short vector used by the local search that finishes the closed-form decoders.
#[derive(Debug, Clone)]
struct Relevant {
    coords: Vec<i64>,
    embedding: Vec<f64>,
    norm2: f64,
}

#[derive(Clone)]
pub struct Lattice {
    name: String,
    n: usize,
    /// Row-major `n×n`, columns are basis vectors.
    generator: Vec<f64>,
    inverse: Vec<f64>,
    det: f64,
    packing_radius: f64,
    covering_radius: Option<f64>,
    nsm: Option<f64>,
    family: Family,
    relevant: Vec<Relevant>,
}

impl fmt::Debug for Lattice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Lattice")
            .field("name", &self.name)
            .field("n", &self.n)
            .field("det", &self.det)
            .field("packing_radius", &self.packing_radius)
            .field("covering_radius", &self.covering_radius)
            .field("nsm", &self.nsm)
            .finish()
    }
}

/// Canonical name for a built-in family, or `None` for an unknown name.
fn canonical_name(name: &str) -> Option<&'static str> {
    match name {
        "Zn" | "Z" | "zn" | "z" | "integer" => Some("Zn"),
        "Dn" | "D" | "dn" | "d" | "checkerboard" => Some("Dn"),
        "A2" | "a2" | "hexagonal" => Some("A2"),
        "E8" | "e8" | "gosset" => Some("E8"),
        _ => None,
    }
}

/// Construct a built-in lattice.
///
/// Accepted names: `Zn` (any `n ≥ 1`), `Dn` (`n ≥ 2`), `A2` (`n = 2`) and
/// `E8` (`n = 8`). All are scaled to their conventional form: `Zn` has unit
/// spacing, `Dn` and `E8` have minimal norm `√2`, `A2` has minimal norm 1.
pub fn builtin_lattice(name: &str, n: usize) -> Result<Lattice> {
    let canon = canonical_name(name).ok_or_else(|| Error::UnknownLattice(name.to_string()))?;
    let incompatible = || Error::IncompatibleDimension {
        name: canon.to_string(),
        n,
    };
    let nf = n as f64;
    match canon {
        "Zn" => {
            if n == 0 {
                return Err(incompatible());
            }
            let mut g = vec![0.0; n * n];
            for i in 0..n {
                g[i * n + i] = 1.0;
            }
            let relevant = unit_vectors(n);
            Lattice::assemble(
                "Zn",
                n,
                g,
                0.5,
                Some(nf.sqrt() / 2.0),
                Some(1.0 / 12.0),
                Family::Integer,
                relevant,
            )
        }
        "Dn" => {
            if n < 2 {
                return Err(incompatible());
            }
            let g = checkerboard_generator(n, false);
            let covering = if n == 2 {
                1.0
            } else {
                (nf.sqrt() / 2.0).max(1.0)
            };
            let nsm = match n {
                2 => Some(1.0 / 12.0),
                3 => Some(0.078_745_1),
                4 => Some(0.076_603_2),
                _ => None,
            };
            Lattice::assemble(
                "Dn",
                n,
                g,
                std::f64::consts::SQRT_2 / 2.0,
                Some(covering),
                nsm,
                Family::Checkerboard,
                pm_pairs(n),
            )
        }
        "A2" => {
            if n != 2 {
                return Err(incompatible());
            }
            let s = 3f64.sqrt() / 2.0;
            let g = vec![1.0, 0.5, 0.0, s];
            let relevant = vec![
                vec![1.0, 0.0],
                vec![-1.0, 0.0],
                vec![0.5, s],
                vec![-0.5, -s],
                vec![-0.5, s],
                vec![0.5, -s],
            ];
            Lattice::assemble(
                "A2",
                2,
                g,
                0.5,
                Some(1.0 / 3f64.sqrt()),
                Some(5.0 / (36.0 * 3f64.sqrt())),
                Family::Hexagonal,
                relevant,
            )
        }
        "E8" => {
            if n != 8 {
                return Err(incompatible());
            }
            let g = checkerboard_generator(8, true);
            let mut relevant = pm_pairs(8);
            for mask in 0u32..256 {
                if mask.count_ones() % 2 == 0 {
                    relevant.push(
                        (0..8)
                            .map(|i| if mask >> i & 1 == 1 { -0.5 } else { 0.5 })
                            .collect(),
                    );
                }
            }
            Lattice::assemble(
                "E8",
                8,
                g,
                std::f64::consts::SQRT_2 / 2.0,
                Some(1.0),
                Some(0.071_682_1),
                Family::Gosset,
                relevant,
            )
        }
        _ => unreachable!(),
    }
}

fn unit_vectors(n: usize) -> Vec<Vec<f64>> {
    let mut out = Vec::with_capacity(2 * n);
    for i in 0..n {
        for s in [1.0, -1.0] {
            let mut v = vec![0.0; n];
            v[i] = s;
            out.push(v);
        }
    }
    out
}

/// All `±e_i ± e_j`, the minimal vectors of `Dn`.
fn pm_pairs(n: usize) -> Vec<Vec<f64>> {
    let mut out = Vec::with_capacity(2 * n * (n - 1));
    for i in 0..n {
        for k in i + 1..n {
            for (a, b) in [(1.0, 1.0), (1.0, -1.0), (-1.0, 1.0), (-1.0, -1.0)] {
                let mut v = vec![0.0; n];
                v[i] = a;
                v[k] = b;
                out.push(v);
            }
        }
    }
    out
}

/// Column-major basis `2e_1, e_2 − e_1, …, e_n − e_{n−1}`; with `half_last`
/// the last basis vector becomes `(½,…,½)`, giving `E8` for `n = 8`.
fn checkerboard_generator(n: usize, half_last: bool) -> Vec<f64> {
    let mut g = vec![0.0; n * n];
    g[0] = 2.0;
    for k in 1..n {
        g[(k - 1) * n + k] = -1.0;
        g[k * n + k] = 1.0;
    }
    if half_last {
        for i in 0..n {
            g[i * n + n - 1] = 0.5;
        }
    }
    g
}

impl Lattice {
    #[allow(clippy::too_many_arguments)]
    fn assemble(
        name: &str,
        n: usize,
        generator: Vec<f64>,
        packing_radius: f64,
        covering_radius: Option<f64>,
        nsm: Option<f64>,
        family: Family,
        relevant_embeddings: Vec<Vec<f64>>,
    ) -> Result<Self> {
        let m = DMatrix::from_row_slice(n, n, &generator);
        let det = m.determinant().abs();
        let inv = m.try_inverse().ok_or(Error::SingularGenerator)?;
        if !(det > 0.0) || !det.is_finite() {
            return Err(Error::SingularGenerator);
        }
        let mut inverse = vec![0.0; n * n];
        for i in 0..n {
            for k in 0..n {
                inverse[i * n + k] = inv[(i, k)];
            }
        }
        let mut lat = Lattice {
            name: name.to_string(),
            n,
            generator,
            inverse,
            det,
            packing_radius,
            covering_radius,
            nsm,
            family,
            relevant: Vec::new(),
        };
        lat.relevant = relevant_embeddings
            .into_iter()
            .map(|e| {
                let coords: Vec<i64> = lat
                    .real_coords(&e)
                    .iter()
                    .map(|c| c.round() as i64)
                    .collect();
                let embedding = lat.embed(&coords);
                let norm2 = embedding.iter().map(|v| v * v).sum();
                Relevant {
                    coords,
                    embedding,
                    norm2,
                }
            })
            .collect();
        Ok(lat)
    }

    /// A user lattice from a row-major generator matrix.
    ///
    /// The packing radius is computed by enumeration when not supplied.
    pub fn from_generator(
        name: &str,
        n: usize,
        generator: Vec<f64>,
        packing_radius: Option<f64>,
        covering_radius: Option<f64>,
        nsm: Option<f64>,
    ) -> Result<Self> {
        if n == 0 || generator.len() != n * n {
            return Err(Error::LatticeConfig(format!(
                "expected {} generator entries for n = {n}",
                n * n
            )));
        }
        if generator.iter().any(|v| !v.is_finite()) {
            return Err(Error::LatticeConfig("non-finite generator entry".into()));
        }
        let mut lat = Lattice::assemble(
            name,
            n,
            generator,
            0.0,
            covering_radius,
            nsm,
            Family::User,
            Vec::new(),
        )?;
        lat.packing_radius = match packing_radius {
            Some(r) if r > 0.0 => r,
            Some(r) => {
                return Err(Error::LatticeConfig(format!(
                    "packing radius {r} must be positive"
                )))
            }
            None => lat.shortest_vector_norm() / 2.0,
        };
        if let Some(c) = covering_radius {
            if c < lat.packing_radius {
                return Err(Error::LatticeConfig(format!(
                    "covering radius {c} below packing radius {}",
                    lat.packing_radius
                )));
            }
        }
        Ok(lat)
    }

    /// Parse the text config: `n`, then `n` rows of `n` reals (row-major `G`),
    /// then optional `packing_radius=`, `covering_radius=`, `nsm=` lines.
    /// Blank lines and `#` comments are ignored.
    pub fn parse_config(name: &str, text: &str) -> Result<Self> {
        let mut lines = text
            .lines()
            .map(|l| l.split('#').next().unwrap_or("").trim())
            .filter(|l| !l.is_empty());
        let n: usize = lines
            .next()
            .ok_or_else(|| Error::LatticeConfig("empty config".into()))?
            .parse()
            .map_err(|e| Error::LatticeConfig(format!("dimension: {e}")))?;
        if n == 0 {
            return Err(Error::LatticeConfig("dimension must be positive".into()));
        }
        let mut generator = Vec::with_capacity(n * n);
        for row in 0..n {
            let line = lines.next().ok_or_else(|| {
                Error::LatticeConfig(format!("missing generator row {}", row + 1))
            })?;
            let vals: Vec<f64> = line
                .split(|c: char| c.is_whitespace() || c == ',')
                .filter(|s| !s.is_empty())
                .map(|s| s.parse::<f64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| Error::LatticeConfig(format!("row {}: {e}", row + 1)))?;
            if vals.len() != n {
                return Err(Error::LatticeConfig(format!(
                    "row {} has {} entries, expected {n}",
                    row + 1,
                    vals.len()
                )));
            }
            generator.extend(vals);
        }
        let (mut packing, mut covering, mut nsm) = (None, None, None);
        for line in lines {
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::LatticeConfig(format!("unexpected line `{line}`")))?;
            let value: f64 = value
                .trim()
                .parse()
                .map_err(|e| Error::LatticeConfig(format!("{}: {e}", key.trim())))?;
            match key.trim() {
                "packing_radius" => packing = Some(value),
                "covering_radius" => covering = Some(value),
                "nsm" => nsm = Some(value),
                other => return Err(Error::LatticeConfig(format!("unknown key `{other}`"))),
            }
        }
        Lattice::from_generator(name, n, generator, packing, covering, nsm)
    }

    pub fn load_config(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)?;
        let name = path
            .file_stem()
            .and_then(|s| s.to_str())
            .unwrap_or("user")
            .to_string();
        Lattice::parse_config(&name, &text)
    }

    /// Serialize back to the text config format (round-trips exactly).
    pub fn to_config(&self) -> String {
        let mut out = format!("{}\n", self.n);
        for i in 0..self.n {
            let row: Vec<String> = (0..self.n)
                .map(|k| format!("{:?}", self.generator[i * self.n + k]))
                .collect();
            out.push_str(&row.join(" "));
            out.push('\n');
        }
        out.push_str(&format!("packing_radius={:?}\n", self.packing_radius));
        if let Some(c) = self.covering_radius {
            out.push_str(&format!("covering_radius={c:?}\n"));
        }
        if let Some(g) = self.nsm {
            out.push_str(&format!("nsm={g:?}\n"));
        }
        out
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn is_builtin(&self) -> bool {
        self.family != Family::User
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn generator(&self) -> &[f64] {
        &self.generator
    }

    /// `|det G|`, the volume of any basic cell.
    pub fn det(&self) -> f64 {
        self.det
    }

    pub fn packing_radius(&self) -> f64 {
        self.packing_radius
    }

    pub fn covering_radius(&self) -> Option<f64> {
        self.covering_radius
    }

    pub fn nsm(&self) -> Option<f64> {
        self.nsm
    }

    /// `δ = λ̲ⁿ κ_n / det`.
    pub fn packing_density(&self) -> f64 {
        let n = self.n as f64;
        (n * self.packing_radius.ln() + ln_unit_ball_volume(self.n) - self.det.ln()).exp()
    }

    /// `Θ = λ̄ⁿ κ_n / det`.
    pub fn covering_density(&self) -> Result<f64> {
        let cr = self
            .covering_radius
            .ok_or_else(|| Error::MissingCoveringRadius(self.name.clone()))?;
        let n = self.n as f64;
        Ok((n * cr.ln() + ln_unit_ball_volume(self.n) - self.det.ln()).exp())
    }

    /// `G·j`.
    pub fn embed(&self, coords: &[i64]) -> Vec<f64> {
        let n = self.n;
        (0..n)
            .map(|i| {
                let row = &self.generator[i * n..(i + 1) * n];
                row.iter().zip(coords).map(|(g, &j)| g * j as f64).sum()
            })
            .collect()
    }

    /// `G⁻¹·x`.
    pub fn real_coords(&self, x: &[f64]) -> Vec<f64> {
        let n = self.n;
        (0..n)
            .map(|i| {
                let row = &self.inverse[i * n..(i + 1) * n];
                row.iter().zip(x).map(|(g, v)| g * v).sum()
            })
            .collect()
    }

    fn check_dim(&self, got: usize) -> Result<()> {
        if got != self.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                got,
            });
        }
        Ok(())
    }

    /// The lattice point closest to `x`, ties broken towards the
    /// lexicographically smallest integer coordinates.
    pub fn nearest_point(&self, x: &[f64]) -> Result<LatticePoint> {
        self.check_dim(x.len())?;
        let coords = self.nearest_coords(x);
        let embedding = self.embed(&coords);
        Ok(LatticePoint { coords, embedding })
    }

    /// Unchecked variant of [`Lattice::nearest_point`] returning only `j`.
    pub(crate) fn nearest_coords(&self, x: &[f64]) -> Vec<i64> {
        match self.family {
            Family::Integer => x.iter().map(|&v| round_half_down(v) as i64).collect(),
            Family::Checkerboard => {
                let p = decode_checkerboard(x);
                let j = self.coords_of(&p);
                self.polish(x, j)
            }
            Family::Gosset => {
                let p0 = decode_checkerboard(x);
                let shifted: Vec<f64> = x.iter().map(|v| v - 0.5).collect();
                let mut p1 = decode_checkerboard(&shifted);
                p1.iter_mut().for_each(|v| *v += 0.5);
                let p = if sq_dist(x, &p1) < sq_dist(x, &p0) {
                    p1
                } else {
                    p0
                };
                let j = self.coords_of(&p);
                self.polish(x, j)
            }
            Family::Hexagonal => {
                let j = self
                    .real_coords(x)
                    .iter()
                    .map(|c| c.round() as i64)
                    .collect();
                self.polish(x, j)
            }
            Family::User => self.enumerate_nearest(x),
        }
    }

    fn coords_of(&self, p: &[f64]) -> Vec<i64> {
        self.real_coords(p)
            .iter()
            .map(|c| c.round() as i64)
            .collect()
    }

    /// Local search over Voronoi-relevant vectors: descend while a neighbour
    /// is strictly closer, then collect every equidistant neighbour and pick
    /// the lexicographically smallest coordinates.
    fn polish(&self, x: &[f64], mut j: Vec<i64>) -> Vec<i64> {
        let mut emb = self.embed(&j);
        let mut best = sq_dist(x, &emb);
        let mut tied;
        loop {
            let r: Vec<f64> = x.iter().zip(&emb).map(|(a, b)| a - b).collect();
            let scale = best + 1.0;
            let mut moved = false;
            tied = false;
            for s in &self.relevant {
                // ‖r − s‖² − ‖r‖² = ‖s‖² − 2⟨r, s⟩
                let dot: f64 = r.iter().zip(&s.embedding).map(|(a, b)| a * b).sum();
                let gap = s.norm2 - 2.0 * dot;
                if gap > 1e-9 * scale {
                    continue;
                }
                let cand: Vec<i64> = j.iter().zip(&s.coords).map(|(a, b)| a + b).collect();
                let cand_emb = self.embed(&cand);
                let d = sq_dist(x, &cand_emb);
                if d < best {
                    j = cand;
                    emb = cand_emb;
                    best = d;
                    moved = true;
                    break;
                } else if d == best {
                    tied = true;
                }
            }
            if !moved {
                break;
            }
        }
        if !tied {
            return j;
        }
        let mut seen: HashSet<Vec<i64>> = HashSet::new();
        seen.insert(j.clone());
        let mut frontier = vec![j];
        let mut all = frontier.clone();
        while let Some(cur) = frontier.pop() {
            for s in &self.relevant {
                let cand: Vec<i64> = cur.iter().zip(&s.coords).map(|(a, b)| a + b).collect();
                if seen.contains(&cand) {
                    continue;
                }
                if sq_dist(x, &self.embed(&cand)) == best {
                    seen.insert(cand.clone());
                    frontier.push(cand.clone());
                    all.push(cand);
                }
            }
        }
        all.into_iter().min().expect("non-empty")
    }

    /// Exact search for user lattices: every `j` with `‖G·j − x‖ ≤ R` lies in a
    /// box around `G⁻¹x`, where `R` is the Babai-rounding distance (capped by
    /// the covering radius when known).
    fn enumerate_nearest(&self, x: &[f64]) -> Vec<i64> {
        let c = self.real_coords(x);
        let babai: Vec<i64> = c.iter().map(|v| v.round() as i64).collect();
        let mut radius = sq_dist(x, &self.embed(&babai)).sqrt();
        if let Some(cr) = self.covering_radius {
            radius = radius.min(cr);
        }
        let radius = radius * (1.0 + 1e-9) + 1e-12;
        let ranges = self.coordinate_ranges(&c, radius);
        let mut best: Option<(f64, Vec<i64>)> = None;
        let mut cur = vec![0i64; self.n];
        self.enumerate_box(&ranges, 0, &mut cur, &mut |j| {
            let d = sq_dist(x, &self.embed(j));
            let better = match &best {
                None => true,
                Some((bd, bj)) => d < *bd || (d == *bd && j < bj.as_slice()),
            };
            if better {
                best = Some((d, j.to_vec()));
            }
        });
        best.map(|(_, j)| j).unwrap_or(babai)
    }

    fn coordinate_ranges(&self, center: &[f64], radius: f64) -> Vec<(i64, i64)> {
        let n = self.n;
        (0..n)
            .map(|i| {
                let row = &self.inverse[i * n..(i + 1) * n];
                let norm = row.iter().map(|v| v * v).sum::<f64>().sqrt();
                let w = radius * norm;
                (
                    (center[i] - w).ceil() as i64,
                    (center[i] + w).floor() as i64,
                )
            })
            .collect()
    }

    fn enumerate_box(
        &self,
        ranges: &[(i64, i64)],
        depth: usize,
        cur: &mut Vec<i64>,
        f: &mut impl FnMut(&[i64]),
    ) {
        if depth == ranges.len() {
            f(cur);
            return;
        }
        let (lo, hi) = ranges[depth];
        for v in lo..=hi {
            cur[depth] = v;
            self.enumerate_box(ranges, depth + 1, cur, f);
        }
    }

    /// Minimum norm over nonzero lattice vectors, by enumeration inside the
    /// ball whose radius is the shortest basis vector.
    pub fn shortest_vector_norm(&self) -> f64 {
        let n = self.n;
        let bound = (0..n)
            .map(|k| {
                (0..n)
                    .map(|i| self.generator[i * n + k].powi(2))
                    .sum::<f64>()
                    .sqrt()
            })
            .fold(f64::INFINITY, f64::min);
        let ranges = self.coordinate_ranges(&vec![0.0; n], bound * (1.0 + 1e-9));
        let mut best = f64::INFINITY;
        let mut cur = vec![0i64; n];
        self.enumerate_box(&ranges, 0, &mut cur, &mut |j| {
            if j.iter().any(|&v| v != 0) {
                let e = self.embed(j);
                best = best.min(e.iter().map(|v| v * v).sum::<f64>());
            }
        });
        best.sqrt()
    }
}

/// Round to nearest with halves going down, so `0.5 ↦ 0` and `−0.5 ↦ −1`.
#[inline]
fn round_half_down(v: f64) -> f64 {
    let r = v.round();
    if r - v == 0.5 {
        r - 1.0
    } else {
        r
    }
}

/// Conway–Sloane decoder for `Dn` in embedding coordinates.
fn decode_checkerboard(x: &[f64]) -> Vec<f64> {
    let mut f: Vec<f64> = x.iter().map(|&v| round_half_down(v)).collect();
    let parity = f.iter().map(|v| *v as i64).sum::<i64>().rem_euclid(2);
    if parity != 0 {
        let (k, _) = x
            .iter()
            .zip(&f)
            .map(|(a, b)| (a - b).abs())
            .enumerate()
            .fold(
                (0, -1.0),
                |acc, (i, d)| if d > acc.1 { (i, d) } else { acc },
            );
        f[k] += if x[k] > f[k] { 1.0 } else { -1.0 };
    }
    f
}

#[inline]
fn two_diff(a: f64, b: f64) -> (f64, f64) {
    let s = a - b;
    let bb = s - a;
    let err = (a - (s - bb)) - (b + bb);
    (s, err)
}

/// `‖x − y‖²` with error-free transformations and compensated summation, so
/// tie comparisons are not decided by accumulated round-off.
pub(crate) fn sq_dist(x: &[f64], y: &[f64]) -> f64 {
    let mut sum = 0.0f64;
    let mut comp = 0.0f64;
    for (&a, &b) in x.iter().zip(y) {
        let (d, e) = two_diff(a, b);
        let sq = d * d;
        let sq_err = d.mul_add(d, -sq);
        comp += sq_err + 2.0 * d * e + e * e;
        let t = sum + sq;
        if sum.abs() >= sq.abs() {
            comp += (sum - t) + sq;
        } else {
            comp += (sq - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{PI, SQRT_2};

    fn brute_nearest(lat: &Lattice, x: &[f64], radius: f64) -> Vec<i64> {
        let c = lat.real_coords(x);
        let ranges = lat.coordinate_ranges(&c, radius);
        let mut best: Option<(f64, Vec<i64>)> = None;
        let mut cur = vec![0; lat.dim()];
        lat.enumerate_box(&ranges, 0, &mut cur, &mut |j| {
            let d = sq_dist(x, &lat.embed(j));
            if best
                .as_ref()
                .is_none_or(|(bd, bj)| d < *bd || (d == *bd && j < bj.as_slice()))
            {
                best = Some((d, j.to_vec()));
            }
        });
        best.unwrap().1
    }

    #[test]
    fn builtin_constants() {
        let z = builtin_lattice("Zn", 2).unwrap();
        assert_eq!(z.packing_radius(), 0.5);
        assert_eq!(z.det(), 1.0);

        let e8 = builtin_lattice("E8", 8).unwrap();
        assert!((e8.packing_radius() - SQRT_2 / 2.0).abs() < 1e-15);
        assert!((e8.det() - 1.0).abs() < 1e-12);
        assert!((e8.shortest_vector_norm() - SQRT_2).abs() < 1e-12);
        assert_eq!(e8.relevant.len(), 240);

        let d4 = builtin_lattice("Dn", 4).unwrap();
        assert!((d4.packing_radius() - SQRT_2 / 2.0).abs() < 1e-15);
        assert!((d4.det() - 2.0).abs() < 1e-12);
        assert!((d4.shortest_vector_norm() - SQRT_2).abs() < 1e-12);

        let a2 = builtin_lattice("A2", 2).unwrap();
        assert!((a2.shortest_vector_norm() - 1.0).abs() < 1e-12);
        assert!((a2.det() - 3f64.sqrt() / 2.0).abs() < 1e-12);
    }

    #[test]
    fn builtin_errors() {
        assert!(matches!(
            builtin_lattice("Leech", 24),
            Err(Error::UnknownLattice(_))
        ));
        assert!(matches!(
            builtin_lattice("E8", 7),
            Err(Error::IncompatibleDimension { .. })
        ));
        assert!(matches!(
            builtin_lattice("Dn", 1),
            Err(Error::IncompatibleDimension { .. })
        ));
        assert!(matches!(
            builtin_lattice("A2", 3),
            Err(Error::IncompatibleDimension { .. })
        ));
        assert!(builtin_lattice("Zn", 0).is_err());
    }

    #[test]
    fn nearest_point_examples() {
        let z = builtin_lattice("Zn", 2).unwrap();
        assert_eq!(z.nearest_point(&[0.4, -1.6]).unwrap().coords, vec![0, -2]);
        assert_eq!(z.nearest_point(&[0.5, 0.5]).unwrap().coords, vec![0, 0]);
        assert_eq!(z.nearest_point(&[-0.5, 1.5]).unwrap().coords, vec![-1, 1]);

        let d4 = builtin_lattice("Dn", 4).unwrap();
        let p = d4.nearest_point(&[0.6, 0.2, 0.0, 0.0]).unwrap();
        assert_eq!(p.embedding, vec![0.0; 4]);
        // distance² 0.40 to the origin beats 0.80 to (1,1,0,0)
        assert!((sq_dist(&[0.6, 0.2, 0.0, 0.0], &[1.0, 1.0, 0.0, 0.0]) - 0.80).abs() < 1e-12);

        assert!(matches!(
            z.nearest_point(&[1.0]),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn tie_breaking_is_lexicographic() {
        // (1,0,0,0) is equidistant from 0, (1,±1,0,0), (1,0,±1,0), ... in D4
        let d4 = builtin_lattice("Dn", 4).unwrap();
        let x = [1.0, 0.0, 0.0, 0.0];
        let got = d4.nearest_point(&x).unwrap().coords;
        assert_eq!(got, brute_nearest(&d4, &x, 1.5));
        // A deep hole of E8 at distance 1.
        let e8 = builtin_lattice("E8", 8).unwrap();
        let x = [1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0];
        assert_eq!(
            e8.nearest_point(&x).unwrap().coords,
            brute_nearest(&e8, &x, 1.2)
        );
    }

    #[test]
    fn densities() {
        let z2 = builtin_lattice("Zn", 2).unwrap();
        assert!((z2.packing_density() - PI / 4.0).abs() < 1e-12);
        let e8 = builtin_lattice("E8", 8).unwrap();
        assert!((e8.packing_density() - PI.powi(4) / 384.0).abs() < 1e-12);
        let z1 = builtin_lattice("Zn", 1).unwrap();
        assert!((z1.packing_density() - 1.0).abs() < 1e-12);
        assert!((z1.covering_density().unwrap() - 1.0).abs() < 1e-12);
        for n in 1..=16 {
            let z = builtin_lattice("Zn", n).unwrap();
            let ratio = z.packing_density() * 2f64.powi(n as i32) / unit_ball_volume(n);
            assert!((ratio - 1.0).abs() < 1e-12, "n = {n}");
        }
        for (name, n) in [
            ("Zn", 3),
            ("Dn", 3),
            ("Dn", 4),
            ("Dn", 6),
            ("A2", 2),
            ("E8", 8),
        ] {
            let lat = builtin_lattice(name, n).unwrap();
            let d = lat.packing_density();
            assert!(d > 0.0 && d <= 1.0 + 1e-12);
            assert!(lat.covering_density().unwrap() >= 1.0 - 1e-12);
        }
    }

    #[test]
    fn covering_density_requires_radius() {
        let lat =
            Lattice::from_generator("u", 2, vec![1.0, 0.3, 0.0, 1.1], None, None, None).unwrap();
        assert!(matches!(
            lat.covering_density(),
            Err(Error::MissingCoveringRadius(_))
        ));
    }

    #[test]
    fn user_lattice_matches_builtin() {
        let text = "2\n1 0.5\n0 0.8660254037844386\n";
        let user = Lattice::parse_config("hex", text).unwrap();
        assert!((user.packing_radius() - 0.5).abs() < 1e-12);
        let a2 = builtin_lattice("A2", 2).unwrap();
        for x in [[0.3, 0.7], [-1.2, 2.9], [10.25, -3.3]] {
            assert_eq!(
                user.nearest_point(&x).unwrap().coords,
                a2.nearest_point(&x).unwrap().coords
            );
        }
        let back = Lattice::parse_config("hex", &user.to_config()).unwrap();
        assert_eq!(back.generator(), user.generator());
    }

    #[test]
    fn config_errors() {
        assert!(Lattice::parse_config("x", "").is_err());
        assert!(Lattice::parse_config("x", "2\n1 0\n").is_err());
        assert!(Lattice::parse_config("x", "2\n1 0\n0\n").is_err());
        assert!(Lattice::parse_config("x", "2\n1 0\n0 1\nfoo=1\n").is_err());
        assert!(Lattice::parse_config("x", "2\n1 1\n1 1\n").is_err());
        let lat = Lattice::parse_config(
            "x",
            "2\n1 0\n0 1\ncovering_radius=0.7071067811865476\nnsm=0.0833\n",
        )
        .unwrap();
        assert_eq!(lat.nsm(), Some(0.0833));
    }
}
