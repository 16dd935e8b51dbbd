//! Closed-form bounds: rate-distortion lower bounds, redundancies, lattice and
//! RSUQ formulas, the layered entropy of the Gaussian and excess information.
//!
//! Everything is in bits (`log₂`). Redundancies are per dimension.

use std::collections::BTreeMap;
use std::f64::consts::{E, LOG2_E, PI};
use std::io::{Read, Write};
use std::path::Path;

use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};
use crate::lattice::{ln_unit_ball_volume, unit_ball_volume};

/// Default relative tolerance of [`gaussian_layered_entropy`].
pub const QUADRATURE_TOL: f64 = 1e-8;

fn log2_kappa(n: usize) -> f64 {
    ln_unit_ball_volume(n) * LOG2_E
}

fn check_n(n: usize) -> Result<()> {
    if n == 0 {
        return Err(Error::InvalidParameter("dimension must be positive".into()));
    }
    Ok(())
}

fn check_positive(what: &str, v: f64) -> Result<()> {
    if !(v > 0.0) || !v.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "{what} must be positive and finite, got {v}"
        )));
    }
    Ok(())
}

/// Lower bound on the normalized entropy of any quantizer with error in `r·Bⁿ`:
/// `−n log r − log κ_n`.
pub fn rd_lower_max_error(n: usize, r: f64) -> Result<f64> {
    check_n(n)?;
    check_positive("radius", r)?;
    Ok(-(n as f64) * r.log2() - log2_kappa(n))
}

/// Shannon lower bound for MSE `D` (per vector): `−(n/2) log(2πeD/n)`.
pub fn shannon_lb_mse(n: usize, d: f64) -> Result<f64> {
    check_n(n)?;
    check_positive("distortion", d)?;
    let n = n as f64;
    Ok(-n / 2.0 * (2.0 * PI * E * d / n).log2())
}

/// Zador's lower bound for MSE `D`: `−(n/2) log((n+2)D/n) − log κ_n`.
pub fn zador_lb_mse(n: usize, d: f64) -> Result<f64> {
    check_n(n)?;
    check_positive("distortion", d)?;
    let nf = n as f64;
    Ok(-nf / 2.0 * ((nf + 2.0) * d / nf).log2() - log2_kappa(n))
}

/// `H̄/n + log r + (1/n) log κ_n`.
pub fn redundancy_max_error(h: f64, n: usize, r: f64) -> Result<f64> {
    Ok((h - rd_lower_max_error(n, r)?) / n as f64)
}

/// `H̄/n + (1/2) log(2πeD/n)`.
pub fn shannon_red_mse(h: f64, n: usize, d: f64) -> Result<f64> {
    Ok((h - shannon_lb_mse(n, d)?) / n as f64)
}

/// `H̄/n + (1/2) log((n+2)D/n) + (1/n) log κ_n`.
pub fn zador_red_mse(h: f64, n: usize, d: f64) -> Result<f64> {
    Ok((h - zador_lb_mse(n, d)?) / n as f64)
}

/// Max-error redundancy of a lattice quantizer: `(1/n) log Θ`.
pub fn lattice_red_max_error(n: usize, theta: f64) -> Result<f64> {
    check_n(n)?;
    if !(theta >= 1.0) {
        return Err(Error::InvalidParameter(format!(
            "covering density {theta} below 1"
        )));
    }
    Ok(theta.log2() / n as f64)
}

/// Shannon MSE redundancy of a lattice quantizer: `(1/2) log(2πe G_n)`.
pub fn lattice_shannon_red(nsm: f64) -> Result<f64> {
    check_positive("NSM", nsm)?;
    Ok(0.5 * (2.0 * PI * E * nsm).log2())
}

/// Zador MSE redundancy of a lattice quantizer: `(1/2) log((n+2)G_n) + (1/n) log κ_n`.
pub fn lattice_zador_red(n: usize, nsm: f64) -> Result<f64> {
    check_n(n)?;
    check_positive("NSM", nsm)?;
    let nf = n as f64;
    Ok(0.5 * ((nf + 2.0) * nsm).log2() + log2_kappa(n) / nf)
}

/// Smallest NSM any `n`-dimensional cell can have: `1/((n+2) κ_n^{2/n})`.
pub fn zador_nsm_lower(n: usize) -> f64 {
    let nf = n as f64;
    1.0 / ((nf + 2.0) * (2.0 / nf * ln_unit_ball_volume(n)).exp())
}

/// NSM of the ball: `Γ(n/2+1)^{2/n} / ((n+2)π)`.
pub fn ball_nsm(n: usize) -> f64 {
    let nf = n as f64;
    (2.0 / nf * ln_gamma(nf / 2.0 + 1.0)).exp() / ((nf + 2.0) * PI)
}

/// Leading terms of Rogers' covering bound: `log n / n + log√(2πe) · log log n / n`.
pub fn rogers_bound(n: usize) -> Result<f64> {
    if n < 2 {
        return Err(Error::InvalidParameter("Rogers' bound needs n ≥ 2".into()));
    }
    let nf = n as f64;
    Ok(nf.log2() / nf + 0.5 * (2.0 * PI * E).log2() * nf.log2().log2() / nf)
}

/// Zador's upper bound on the best quantizer: `(1/2) log((n+2)Γ(2/n+1)/n)`.
pub fn zador_ub(n: usize) -> Result<f64> {
    check_n(n)?;
    let nf = n as f64;
    Ok(0.5 * ((nf + 2.0) / nf).log2() + 0.5 * ln_gamma(2.0 / nf + 1.0) * LOG2_E)
}

/// `sin(πt)/(πt)`, with `sinc(0) = 1`.
pub fn sinc(t: f64) -> f64 {
    if t == 0.0 {
        1.0
    } else {
        (PI * t).sin() / (PI * t)
    }
}

/// Ordentlich's upper bound on the best lattice quantizer:
/// `(1/2) log((n+2)/(n·sinc(2/n)))`. Finite only for `n ≥ 3`.
pub fn ordentlich_ub(n: usize) -> Result<f64> {
    if n < 3 {
        return Err(Error::InvalidParameter(
            "Ordentlich's bound needs n ≥ 3".into(),
        ));
    }
    let nf = n as f64;
    Ok(0.5 * ((nf + 2.0) / (nf * sinc(2.0 / nf))).log2())
}

/// Entropy beyond `−log p` of a `Geom(p)` stopping index:
/// `−((1−p)/p) log(1−p)`, which tends to 0 as `p → 1` and to `log e` as `p → 0`.
pub fn geometric_correction(p: f64) -> Result<f64> {
    if !(p > 0.0 && p <= 1.0) {
        return Err(Error::InvalidParameter(format!(
            "probability {p} outside (0, 1]"
        )));
    }
    if p == 1.0 {
        return Ok(0.0);
    }
    Ok(-(1.0 - p) / p * (-p).ln_1p() * LOG2_E)
}

/// Upper bound on the normalized entropy of RSUQ with target `r·Bⁿ`.
///
/// `tight` uses the packing density `delta` of the lattice; otherwise the
/// lattice-free `+ log e` form is returned and `delta` is ignored.
pub fn rsuq_norment_ub(n: usize, r: f64, delta: f64, tight: bool) -> Result<f64> {
    let base = rd_lower_max_error(n, r)?;
    if tight {
        Ok(base + geometric_correction(delta)?)
    } else {
        Ok(base + LOG2_E)
    }
}

/// Differential entropy of `N(0, I_n)`: `(n/2) log(2πe)`.
pub fn gaussian_entropy(n: usize) -> f64 {
    n as f64 / 2.0 * (2.0 * PI * E).log2()
}

/// `h_∞ = −log f_max`.
pub fn h_inf_bound(f_max: f64) -> Result<f64> {
    check_positive("peak density", f_max)?;
    Ok(-f_max.log2())
}

/// `h_∞` of `N(0, I_n)`: `(n/2) log(2π)`.
pub fn gaussian_h_inf(n: usize) -> f64 {
    n as f64 / 2.0 * (2.0 * PI).log2()
}

/// Layered entropy of `N(0, I_n)` at relative tolerance [`QUADRATURE_TOL`].
pub fn gaussian_layered_entropy(n: usize) -> Result<f64> {
    gaussian_layered_entropy_tol(n, QUADRATURE_TOL)
}

/// Layered entropy of `N(0, I_n)`:
///
/// `h_L = ∫₀^∞ (v/2)^{n/2} e^{−v/2} [(n/2) log(πv) − log Γ(n/2+1)] / (2Γ(n/2+1)) dv`.
///
/// With `u = v/2` the weight is the `Gamma(n/2+1)` density, so the integral
/// is cut at `U = a + 20√a + 50` (`a = n/2+1`), where the tail is far below
/// any useful tolerance, and `[0, U]` is split into panels of width about
/// `√a` that are each integrated by double-exponential quadrature.
pub fn gaussian_layered_entropy_tol(n: usize, rel_tol: f64) -> Result<f64> {
    check_n(n)?;
    check_positive("tolerance", rel_tol)?;
    let half = n as f64 / 2.0;
    let a = half + 1.0;
    let ln_gamma_a = ln_gamma(a);
    let log2_gamma_a = ln_gamma_a * LOG2_E;
    let integrand = |u: f64| {
        if u <= 0.0 {
            return 0.0;
        }
        let weight = (half * u.ln() - u - ln_gamma_a).exp();
        weight * (half * (2.0 * PI * u).log2() - log2_gamma_a)
    };

    let upper = a + 20.0 * a.sqrt() + 50.0;
    let panels = (upper / a.sqrt().max(1.0)).ceil() as usize;
    let width = upper / panels as f64;
    let sum_panels = |abs_tol: f64| -> f64 {
        (0..panels)
            .map(|i| {
                let lo = i as f64 * width;
                quadrature::integrate(integrand, lo, lo + width, abs_tol / panels as f64).integral
            })
            .sum()
    };
    let rough = sum_panels(1e-4);
    Ok(sum_panels(rel_tol * rough.abs().max(1.0)))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExcessVariant {
    /// Lower bound for any exact Gaussian channel simulator: `(h − h_L)/n`.
    Lower,
    /// Upper bound achieved by LRSUQ: lower bound plus `(log e)/n` (not added at `n = 1`).
    Lrsuq,
    /// Layered shift-periodic quantizer: `(1.617n + 4 − h_L + h)/n`.
    Lspq,
}

impl ExcessVariant {
    pub fn name(self) -> &'static str {
        match self {
            ExcessVariant::Lower => "lower",
            ExcessVariant::Lrsuq => "lrsuq",
            ExcessVariant::Lspq => "lspq",
        }
    }
}

/// Normalized excess information for the standard Gaussian channel.
pub fn excess_info(n: usize, variant: ExcessVariant) -> Result<f64> {
    let hl = gaussian_layered_entropy(n)?;
    Ok(excess_info_from(n, hl, variant))
}

/// [`excess_info`] with a precomputed layered entropy `hl`.
pub fn excess_info_from(n: usize, hl: f64, variant: ExcessVariant) -> f64 {
    let nf = n as f64;
    let h = gaussian_entropy(n);
    match variant {
        ExcessVariant::Lower => (h - hl) / nf,
        ExcessVariant::Lrsuq if n == 1 => (h - hl) / nf,
        ExcessVariant::Lrsuq => (h - hl + LOG2_E) / nf,
        ExcessVariant::Lspq => (1.617 * nf + 4.0 - hl + h) / nf,
    }
}

/// Computable part of the universal-quantization bound:
/// `−log p + (n/2) log(4πe G_n(r·Bⁿ)) + log e`. The NSM of a ball does not
/// depend on `r`; it is validated and otherwise unused.
pub fn universal_bound_terms(n: usize, p: f64, r: f64) -> Result<f64> {
    check_n(n)?;
    check_positive("radius", r)?;
    if !(p > 0.0 && p <= 1.0) {
        return Err(Error::InvalidParameter(format!(
            "probability {p} outside (0, 1]"
        )));
    }
    Ok(-p.log2() + n as f64 / 2.0 * (4.0 * PI * E * ball_nsm(n)).log2() + LOG2_E)
}

/// Smoothness penalty for Gaussian sources:
/// `ε λ_min⁻¹ (E‖X‖ + ε/2)` nats, returned in bits.
pub fn gaussian_delta_eps(eps: f64, lambda_min: f64, mean_norm: f64) -> Result<f64> {
    if !(eps >= 0.0) || !(mean_norm >= 0.0) {
        return Err(Error::InvalidParameter(
            "ε and E‖X‖ must be non-negative".into(),
        ));
    }
    check_positive("smallest eigenvalue", lambda_min)?;
    Ok(eps / lambda_min * (mean_norm + eps / 2.0) * LOG2_E)
}

/// Covering density of `A_n*`: `κ_n √(n+1) (n(n+2)/(12(n+1)))^{n/2}`.
pub fn an_star_covering_density(n: usize) -> f64 {
    let nf = n as f64;
    unit_ball_volume(n) * (nf + 1.0).sqrt() * (nf * (nf + 2.0) / (12.0 * (nf + 1.0))).powf(nf / 2.0)
}

/// Best-known lattice constants for one dimension. Each quantity may come
/// from a different lattice.
#[derive(Debug, Clone, PartialEq)]
pub struct RegistryEntry {
    pub n: usize,
    pub delta: Option<f64>,
    pub theta: Option<f64>,
    pub nsm: Option<f64>,
    pub source: String,
}

impl RegistryEntry {
    fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Registry(format!("n = {}: {msg}", self.n)));
        if self.n == 0 {
            return bad("dimension must be positive".into());
        }
        if let Some(d) = self.delta {
            if !(d > 0.0 && d <= 1.0 + 1e-12) {
                return bad(format!("packing density {d} outside (0, 1]"));
            }
        }
        if let Some(t) = self.theta {
            if !(t >= 1.0 - 1e-12) || !t.is_finite() {
                return bad(format!("covering density {t} below 1"));
            }
        }
        if let Some(g) = self.nsm {
            if !(g >= zador_nsm_lower(self.n) * (1.0 - 1e-12)) || !g.is_finite() {
                return bad(format!(
                    "NSM {g} below Zador's lower bound {}",
                    zador_nsm_lower(self.n)
                ));
            }
        }
        Ok(())
    }
}

/// Per-dimension best-known `δ`, `Θ` and `G_n`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ConstantsRegistry {
    entries: BTreeMap<usize, RegistryEntry>,
}

impl ConstantsRegistry {
    pub fn empty() -> Self {
        Self::default()
    }

    /// Analytically known values: `Z` (n = 1), `A₂`/`A₂*` (n = 2),
    /// `D₄`/`A₄*` (n = 4) and `E₈`/`A₈*` (n = 8).
    pub fn builtin() -> Self {
        let s3 = 3f64.sqrt();
        let rows = [
            (1, 1.0, 1.0, 1.0 / 12.0, "Z"),
            (
                2,
                PI / (2.0 * s3),
                2.0 * PI / (3.0 * s3),
                5.0 / (36.0 * s3),
                "A2 / A2*",
            ),
            (
                4,
                PI * PI / 16.0,
                an_star_covering_density(4),
                0.076_603_2,
                "D4 packing+NSM, A4* covering",
            ),
            (
                8,
                PI.powi(4) / 384.0,
                an_star_covering_density(8),
                0.071_682_1,
                "E8 packing+NSM, A8* covering",
            ),
        ];
        let mut reg = Self::empty();
        for (n, delta, theta, nsm, source) in rows {
            reg.entries.insert(
                n,
                RegistryEntry {
                    n,
                    delta: Some(delta),
                    theta: Some(theta),
                    nsm: Some(nsm),
                    source: source.to_string(),
                },
            );
        }
        reg
    }

    pub fn get(&self, n: usize) -> Option<&RegistryEntry> {
        self.entries.get(&n)
    }

    pub fn dims(&self) -> impl Iterator<Item = usize> + '_ {
        self.entries.keys().copied()
    }

    pub fn insert(&mut self, entry: RegistryEntry) -> Result<()> {
        entry.validate()?;
        self.entries.insert(entry.n, entry);
        Ok(())
    }

    /// Overlay `other` on `self`, replacing whole rows.
    pub fn merge(&mut self, other: ConstantsRegistry) {
        self.entries.extend(other.entries);
    }

    /// Parse CSV rows `n,delta,theta,nsm,source`; empty fields are unknown.
    /// A header row starting with `n` is skipped.
    pub fn from_reader(reader: impl Read) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(false)
            .comment(Some(b'#'))
            .trim(csv::Trim::All)
            .flexible(true)
            .from_reader(reader);
        let mut reg = Self::empty();
        for (line, rec) in rdr.records().enumerate() {
            let rec = rec?;
            if line == 0 && rec.get(0).is_some_and(|f| f.eq_ignore_ascii_case("n")) {
                continue;
            }
            if rec.len() < 4 {
                return Err(Error::Registry(format!(
                    "row {}: expected 5 fields, got {}",
                    line + 1,
                    rec.len()
                )));
            }
            let n: usize = rec[0]
                .parse()
                .map_err(|e| Error::Registry(format!("row {}: dimension: {e}", line + 1)))?;
            let field = |i: usize| -> Result<Option<f64>> {
                match rec.get(i).unwrap_or("") {
                    "" => Ok(None),
                    s => s.parse().map(Some).map_err(|e| {
                        Error::Registry(format!("row {}: field {}: {e}", line + 1, i + 1))
                    }),
                }
            };
            reg.insert(RegistryEntry {
                n,
                delta: field(1)?,
                theta: field(2)?,
                nsm: field(3)?,
                source: rec.get(4).unwrap_or("").to_string(),
            })?;
        }
        Ok(reg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_reader(std::fs::File::open(path)?)
    }

    pub fn write_csv(&self, out: impl Write) -> Result<()> {
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(out);
        w.write_record(["n", "delta", "theta", "nsm", "source"])?;
        let opt = |v: Option<f64>| v.map(|x| format!("{x:?}")).unwrap_or_default();
        for e in self.entries.values() {
            w.write_record([
                e.n.to_string(),
                opt(e.delta),
                opt(e.theta),
                opt(e.nsm),
                e.source.clone(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReportRow {
    pub n: usize,
    pub quantity: String,
    pub value_bits: f64,
    /// Formula the value came from.
    pub tag: String,
}

/// Named values per dimension, serialized as `n,quantity,value_bits,equation_tag`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct BoundsReport {
    pub rows: Vec<ReportRow>,
    /// Dimensions for which lattice-dependent rows were skipped.
    pub missing: Vec<usize>,
}

impl BoundsReport {
    pub fn push(&mut self, n: usize, quantity: &str, value_bits: f64, tag: &str) {
        self.rows.push(ReportRow {
            n,
            quantity: quantity.to_string(),
            value_bits,
            tag: tag.to_string(),
        });
    }

    pub fn value(&self, n: usize, quantity: &str) -> Option<f64> {
        self.rows
            .iter()
            .find(|r| r.n == n && r.quantity == quantity)
            .map(|r| r.value_bits)
    }

    pub fn write_csv(&self, out: impl Write) -> Result<()> {
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(out);
        w.write_record(["n", "quantity", "value_bits", "equation_tag"])?;
        for r in &self.rows {
            w.write_record([
                r.n.to_string(),
                r.quantity.clone(),
                format!("{:.12e}", r.value_bits),
                r.tag.clone(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> Result<String> {
        let mut buf = Vec::new();
        self.write_csv(&mut buf)?;
        Ok(String::from_utf8(buf).expect("csv output is UTF-8"))
    }
}

/// Table of the Gaussian layered entropy and excess information.
pub fn table1(dims: &[usize]) -> Result<BoundsReport> {
    let mut rep = BoundsReport::default();
    for &n in dims {
        let hl = gaussian_layered_entropy(n)?;
        rep.push(n, "h_inf", gaussian_h_inf(n), "(n/2)log2(2pi)");
        rep.push(n, "h_L", hl, "layered entropy, chi2_{n+2} mixture");
        rep.push(n, "h", gaussian_entropy(n), "(n/2)log2(2pi e)");
        rep.push(
            n,
            "excess_lower",
            excess_info_from(n, hl, ExcessVariant::Lower),
            "(h-h_L)/n",
        );
        let tag = if n == 1 {
            "(h-h_L)/n"
        } else {
            "(h-h_L+log2 e)/n"
        };
        rep.push(
            n,
            "excess_lrsuq",
            excess_info_from(n, hl, ExcessVariant::Lrsuq),
            tag,
        );
        rep.push(
            n,
            "excess_lspq",
            excess_info_from(n, hl, ExcessVariant::Lspq),
            "(1.617n+4-h_L+h)/n",
        );
    }
    Ok(rep)
}

/// Max-error redundancies: RSUQ on any lattice and on the best packing,
/// lattice quantizers on the best covering, and Rogers' asymptotic bound.
pub fn figure2_left(dims: &[usize], reg: &ConstantsRegistry) -> Result<BoundsReport> {
    let mut rep = BoundsReport::default();
    for &n in dims {
        check_n(n)?;
        rep.push(n, "rsuq_any_lattice", LOG2_E / n as f64, "log2(e)/n");
        if n >= 2 {
            rep.push(
                n,
                "rogers",
                rogers_bound(n)?,
                "log2(n)/n + log2(sqrt(2pi e))log2log2(n)/n",
            );
        }
        let entry = reg.get(n);
        let mut complete = true;
        match entry.and_then(|e| e.delta) {
            Some(d) => rep.push(
                n,
                "rsuq_best_packing",
                geometric_correction(d)? / n as f64,
                "-((1-delta)/delta)log2(1-delta)/n",
            ),
            None => complete = false,
        }
        match entry.and_then(|e| e.theta) {
            Some(t) => rep.push(
                n,
                "lattice_best_covering",
                lattice_red_max_error(n, t)?,
                "log2(Theta)/n",
            ),
            None => complete = false,
        }
        if !complete {
            rep.missing.push(n);
        }
    }
    Ok(rep)
}

/// Zador MSE redundancies: RSUQ on any lattice and on the best packing,
/// lattice quantizers with the best NSM, Zador's and Ordentlich's upper bounds.
pub fn figure2_right(dims: &[usize], reg: &ConstantsRegistry) -> Result<BoundsReport> {
    let mut rep = BoundsReport::default();
    for &n in dims {
        check_n(n)?;
        rep.push(n, "rsuq_any_lattice", LOG2_E / n as f64, "log2(e)/n");
        rep.push(
            n,
            "zador_ub",
            zador_ub(n)?,
            "(1/2)log2((n+2)Gamma(2/n+1)/n)",
        );
        if n >= 3 {
            rep.push(
                n,
                "ordentlich_ub",
                ordentlich_ub(n)?,
                "(1/2)log2((n+2)/(n sinc(2/n)))",
            );
        }
        let entry = reg.get(n);
        let mut complete = true;
        match entry.and_then(|e| e.delta) {
            Some(d) => rep.push(
                n,
                "rsuq_best_packing",
                geometric_correction(d)? / n as f64,
                "-((1-delta)/delta)log2(1-delta)/n",
            ),
            None => complete = false,
        }
        match entry.and_then(|e| e.nsm) {
            Some(g) => rep.push(
                n,
                "lattice_best_nsm",
                lattice_zador_red(n, g)?,
                "(1/2)log2((n+2)G)+log2(kappa_n)/n",
            ),
            None => complete = false,
        }
        if !complete {
            rep.missing.push(n);
        }
    }
    Ok(rep)
}

/// Python/matplotlib script that plots a bounds CSV on a log scale. It reads
/// only `csv_path`.
pub fn plot_script(csv_path: &str, title: &str) -> String {
    format!(
        r#"#!/usr/bin/env python3
import csv
from collections import defaultdict

import matplotlib.pyplot as plt

series = defaultdict(list)
with open({csv_path:?}, newline="") as f:
    for row in csv.DictReader(f):
        series[row["quantity"]].append((int(row["n"]), float(row["value_bits"])))

for name, points in sorted(series.items()):
    points.sort()
    xs, ys = zip(*points)
    if all(y > 0 for y in ys):
        plt.plot(xs, ys, marker="." if len(xs) > 1 else "o", label=name)
plt.yscale("log")
plt.xlabel("n")
plt.ylabel("bits / dimension")
plt.title({title:?})
plt.legend()
plt.savefig({png:?}, dpi=150)
"#,
        png = format!("{}.png", csv_path.trim_end_matches(".csv")),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use statrs::function::gamma::digamma;

    /// `E[log₂(κ_n V^{n/2})]` with `V ~ χ²_{n+2}`, via `E[ln V] = ψ(n/2+1) + ln 2`.
    fn layered_entropy_oracle(n: usize) -> f64 {
        let h = n as f64 / 2.0;
        log2_kappa(n) + h * (digamma(h + 1.0) + 2f64.ln()) * LOG2_E
    }

    #[test]
    fn lower_bound_examples() {
        assert!(rd_lower_max_error(1, 0.5).unwrap().abs() < 1e-12);
        assert!((rd_lower_max_error(2, 1.0).unwrap() + PI.log2()).abs() < 1e-12);
        for r in [0.1, 2.0, 7.5] {
            let v = rd_lower_max_error(5, r).unwrap() + 5.0 * r.log2();
            assert!((v - rd_lower_max_error(5, 1.0).unwrap()).abs() < 1e-12);
        }
        assert!(rd_lower_max_error(2, 0.0).is_err());
    }

    #[test]
    fn mse_bound_gap() {
        for n in 2..=64usize {
            let nf = n as f64;
            let gap = zador_lb_mse(n, 1.0).unwrap() - shannon_lb_mse(n, 1.0).unwrap();
            let expect = nf * (0.5 * (2.0 * PI * E / (nf + 2.0)).log2() - log2_kappa(n) / nf);
            assert!((gap - expect).abs() < 1e-9);
            assert!(gap / nf <= nf.log2() / (2.0 * nf) - 0.05 / nf, "n = {n}");
        }
        let c = 3.0;
        for n in [1, 4, 9] {
            let s = shannon_lb_mse(n, c).unwrap() - shannon_lb_mse(n, 1.0).unwrap();
            let z = zador_lb_mse(n, c).unwrap() - zador_lb_mse(n, 1.0).unwrap();
            assert!((s + n as f64 / 2.0 * c.log2()).abs() < 1e-12);
            assert!((z + n as f64 / 2.0 * c.log2()).abs() < 1e-12);
        }
    }

    #[test]
    fn rsuq_redundancies() {
        for n in [1usize, 2, 8] {
            let r = 0.7;
            let h = rsuq_norment_ub(n, r, 0.3, false).unwrap();
            let red = redundancy_max_error(h, n, r).unwrap();
            assert!((red - LOG2_E / n as f64).abs() < 1e-12);
            let d = n as f64 * r * r / (n as f64 + 2.0);
            assert!((zador_red_mse(h, n, d).unwrap() - LOG2_E / n as f64).abs() < 1e-12);
        }
        assert!((std::f64::consts::E.log2() - LOG2_E).abs() < 1e-15);
        let p = PI / 4.0;
        let diff =
            rsuq_norment_ub(2, 0.5, p, true).unwrap() - rsuq_norment_ub(2, 0.5, p, false).unwrap();
        assert!((diff - (-LOG2_E - (1.0 - p) / p * (1.0 - p).log2())).abs() < 1e-12);
        assert!(diff < 0.0);
        assert!(geometric_correction(1e-9).unwrap() < LOG2_E);
        assert!((geometric_correction(1e-9).unwrap() - LOG2_E).abs() < 1e-8);
        assert_eq!(geometric_correction(1.0).unwrap(), 0.0);
    }

    #[test]
    fn lattice_formula_examples() {
        assert_eq!(lattice_red_max_error(1, 1.0).unwrap(), 0.0);
        assert!(
            (lattice_shannon_red(1.0 / 12.0).unwrap() - 0.5 * (PI * E / 6.0).log2()).abs() < 1e-12
        );
        assert!((lattice_shannon_red(1.0 / 12.0).unwrap() - 0.2546).abs() < 1e-4);
        for n in [1, 3, 10, 30] {
            assert!(lattice_zador_red(n, zador_nsm_lower(n)).unwrap().abs() < 1e-12);
        }
        let a2 = lattice_zador_red(2, 5.0 / (36.0 * 3f64.sqrt())).unwrap();
        assert!(
            (a2 - (0.5 * (4.0 * 5.0 / (36.0 * 3f64.sqrt())).log2() + 0.5 * PI.log2())).abs()
                < 1e-12
        );
        // n = 2 Zador bound is the disk: the redundancy is (1/2)log(G(A2)/G(disk))
        assert!((a2 - 0.5 * (5.0 / (36.0 * 3f64.sqrt()) * 4.0 * PI).log2()).abs() < 1e-12);
        assert!((a2 - 0.00551).abs() < 1e-5, "{a2}");
    }

    #[test]
    fn upper_bound_examples() {
        assert!((zador_ub(2).unwrap() - 0.5).abs() < 1e-12);
        let o8 = ordentlich_ub(8).unwrap();
        assert!((o8 - 0.5 * (10.0 / (8.0 * sinc(0.25))).log2()).abs() < 1e-12);
        assert!((o8 - 0.2367).abs() < 1e-4, "{o8}");
        assert!(o8 <= (1.0 / 8.0 + 4.0 / 64.0 + 8.0 / 512.0) * LOG2_E);
        assert!(ordentlich_ub(48).unwrap() > LOG2_E / 48.0);
        assert!(ordentlich_ub(2).is_err());
        assert!(rogers_bound(1).is_err());
        assert!((rogers_bound(2).unwrap() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn layered_entropy_matches_oracle_and_table() {
        let table = [
            (1, 1.52632),
            (2, 3.26144),
            (3, 5.08819),
            (4, 6.96559),
            (5, 8.87490),
            (6, 10.80611),
            (7, 12.75325),
            (8, 14.71250),
            (24, 46.71338),
        ];
        for (n, want) in table {
            let got = gaussian_layered_entropy(n).unwrap();
            assert!((got - layered_entropy_oracle(n)).abs() < 1e-7, "n = {n}");
            assert!((got - want).abs() < 1e-4, "n = {n}: {got}");
        }
        for n in [1, 17, 48, 200] {
            let got = gaussian_layered_entropy(n).unwrap();
            assert!(
                (got - layered_entropy_oracle(n)).abs() < 1e-8 * got.abs().max(1.0),
                "n = {n}"
            );
            let finer = gaussian_layered_entropy_tol(n, QUADRATURE_TOL / 2.0).unwrap();
            assert!((got - finer).abs() < 1e-6);
        }
    }

    #[test]
    fn entropy_ordering() {
        for n in 1..=48 {
            let (hi, hl, h) = (
                gaussian_h_inf(n),
                gaussian_layered_entropy(n).unwrap(),
                gaussian_entropy(n),
            );
            assert!(hi < hl && hl < h, "n = {n}");
        }
        assert!((gaussian_h_inf(1) - 1.3257).abs() < 1e-4);
        assert!((h_inf_bound(1.0 / (2.0 * PI).sqrt()).unwrap() - gaussian_h_inf(1)).abs() < 1e-12);
        assert!((h_inf_bound(1.0 / 8.0).unwrap() - 3.0).abs() < 1e-12);
    }

    #[test]
    fn excess_info_examples() {
        let check = |n, v, want: f64| assert!((excess_info(n, v).unwrap() - want).abs() < 1e-4);
        check(1, ExcessVariant::Lower, 0.52077);
        check(1, ExcessVariant::Lrsuq, 0.52077);
        check(2, ExcessVariant::Lrsuq, 1.13772);
        check(1, ExcessVariant::Lspq, 6.13777);
        check(24, ExcessVariant::Lspq, 1.88437);
    }

    #[test]
    fn universal_terms() {
        assert!((ball_nsm(1) - 1.0 / 12.0).abs() < 1e-15);
        assert!((ball_nsm(2) - 1.0 / (4.0 * PI)).abs() < 1e-15);
        assert!((universal_bound_terms(2, 1.0, 3.0).unwrap() - 2.0 * LOG2_E).abs() < 1e-12);
        let t1 = universal_bound_terms(1, 0.5, 1.0).unwrap();
        assert!((t1 - (1.0 + 0.5 * (PI * E / 3.0).log2() + LOG2_E)).abs() < 1e-12);
        assert!(universal_bound_terms(2, 0.0, 1.0).is_err());
    }

    #[test]
    fn delta_eps() {
        assert_eq!(gaussian_delta_eps(0.0, 1.0, 1.0).unwrap(), 0.0);
        assert!((gaussian_delta_eps(0.1, 1.0, 1.0).unwrap() - 0.105 * LOG2_E).abs() < 1e-12);
        let a = gaussian_delta_eps(1e-4, 2.0, 5.0).unwrap();
        let b = gaussian_delta_eps(2e-4, 2.0, 5.0).unwrap();
        assert!((b / a - 2.0).abs() < 1e-4);
    }

    #[test]
    fn registry_builtin_and_csv() {
        let reg = ConstantsRegistry::builtin();
        assert_eq!(reg.dims().collect::<Vec<_>>(), vec![1, 2, 4, 8]);
        let a4 = an_star_covering_density(4);
        assert!((a4 - 1.76553).abs() < 1e-5, "{a4}");
        assert!((an_star_covering_density(8) - 3.66585).abs() < 1e-5);
        assert!(
            (an_star_covering_density(8) - PI.powi(4) / 8.0 * (80.0f64 / 108.0).powi(4)).abs()
                < 1e-12
        );
        assert!((an_star_covering_density(2) - reg.get(2).unwrap().theta.unwrap()).abs() < 1e-12);
        for e in reg.entries.values() {
            e.validate().unwrap();
        }
        let mut buf = Vec::new();
        reg.write_csv(&mut buf).unwrap();
        assert_eq!(ConstantsRegistry::from_reader(buf.as_slice()).unwrap(), reg);

        let user = "# extra\n3,0.7405,1.4635,0.0787451,D3 / A3*\n5,,,,\n";
        let u = ConstantsRegistry::from_reader(user.as_bytes()).unwrap();
        assert_eq!(u.get(3).unwrap().nsm, Some(0.0787451));
        assert_eq!(u.get(5).unwrap().delta, None);
        assert!(ConstantsRegistry::from_reader("2,1.5,1.2,0.08,x\n".as_bytes()).is_err());
        assert!(ConstantsRegistry::from_reader("2,0.9,0.5,0.08,x\n".as_bytes()).is_err());
        assert!(ConstantsRegistry::from_reader("2,0.9,1.2,0.01,x\n".as_bytes()).is_err());
    }

    #[test]
    fn figure_tables() {
        let reg = ConstantsRegistry::builtin();
        let dims: Vec<usize> = (1..=48).collect();
        let left = figure2_left(&dims, &reg).unwrap();
        assert!((left.value(24, "rsuq_any_lattice").unwrap() - 0.06011).abs() < 1e-5);
        assert_eq!(left.missing.len(), 44);
        let black2 = left.value(2, "rsuq_any_lattice").unwrap();
        let blue2 = left.value(2, "rsuq_best_packing").unwrap();
        let red2 = left.value(2, "lattice_best_covering").unwrap();
        assert!(blue2 > red2 && black2 > red2);
        assert!(
            left.value(4, "rsuq_best_packing").unwrap()
                > left.value(4, "lattice_best_covering").unwrap()
        );
        assert!(
            left.value(8, "rsuq_best_packing").unwrap()
                < left.value(8, "lattice_best_covering").unwrap()
        );
        assert!(
            left.value(8, "rsuq_any_lattice").unwrap()
                < left.value(8, "lattice_best_covering").unwrap()
        );

        let right = figure2_right(&dims, &reg).unwrap();
        assert!(
            right.value(48, "rsuq_any_lattice").unwrap()
                < right.value(48, "ordentlich_ub").unwrap()
        );
        assert!(right.value(2, "ordentlich_ub").is_none());
        let csv = right.to_csv_string().unwrap();
        assert!(csv.starts_with("n,quantity,value_bits,equation_tag\n"));
        assert!(!csv.contains('\r'));
    }

    #[test]
    fn table_rows() {
        let t = table1(&[1, 2]).unwrap();
        assert!((t.value(2, "excess_lrsuq").unwrap() - 1.13772).abs() < 1e-4);
        assert_eq!(t.rows.len(), 12);
    }

    #[test]
    fn plot_script_reads_only_csv() {
        let s = plot_script("out/fig.csv", "left");
        assert!(s.contains("\"out/fig.csv\""));
        assert!(s.contains("out/fig.png"));
    }
}
