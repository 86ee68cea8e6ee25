//! Level-spacing statistics: spectrum unfolding, nearest-neighbour spacings,
//! and maximum-likelihood fits of the Brody distribution
//!
//! ```text
//! P(s, ω) = A (ω+1) s^ω exp(−A s^{ω+1}),   A = Γ((ω+2)/(ω+1))^{ω+1}
//! ```
//!
//! which interpolates between Poisson (`ω = 0`) and the Wigner surmise
//! (`ω = 1`).

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::bell_operator::BellOperator;
use crate::error::{Error, Result};

/// Spacings are floored here inside the log-likelihood.
pub const SPACING_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectralConfig {
    /// Degree of the polynomial fitted to the level staircase.
    pub poly_degree: usize,
    /// Fraction of spacings dropped at each spectrum edge.
    pub trim_fraction: f64,
    /// `ω` at or below this classifies as integrable.
    pub classify_threshold: f64,
    pub histogram_bins: usize,
    /// Spectra with fewer levels are analysed but flagged as degraded.
    pub min_levels: usize,
}

impl Default for SpectralConfig {
    fn default() -> Self {
        Self {
            poly_degree: 10,
            trim_fraction: 0.02,
            classify_threshold: 1e-3,
            histogram_bins: 30,
            min_levels: 50,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Classification {
    Integrable,
    Chaotic,
}

/// Unfolded levels plus a flag for spectra too short to trust.
#[derive(Debug, Clone, PartialEq)]
pub struct Unfolded {
    pub levels: Vec<f64>,
    pub degraded: bool,
    /// Polynomial degree actually used (capped by the number of levels).
    pub degree: usize,
}

/// Chebyshev polynomials `T_0..T_degree` at `t ∈ [−1, 1]`.
fn chebyshev_row(t: f64, degree: usize) -> Vec<f64> {
    let mut row = Vec::with_capacity(degree + 1);
    row.push(1.0);
    if degree >= 1 {
        row.push(t);
    }
    for k in 2..=degree {
        let next = 2.0 * t * row[k - 1] - row[k - 2];
        row.push(next);
    }
    row
}

/// Sorts the levels, fits a polynomial to the counting staircase
/// `N(E_i) = i + 1`, and maps each level through the fit. The output is made
/// non-decreasing by clamping.
pub fn unfold_spectrum(eigs: &[f64], poly_degree: usize) -> Result<Unfolded> {
    unfold_with_min(eigs, poly_degree, SpectralConfig::default().min_levels)
}

fn unfold_with_min(eigs: &[f64], poly_degree: usize, min_levels: usize) -> Result<Unfolded> {
    if eigs.iter().any(|e| !e.is_finite()) {
        return Err(Error::InvalidInput("non-finite eigenvalue".into()));
    }
    if eigs.len() < 3 {
        return Err(Error::DegenerateSpectrum(format!(
            "{} levels are too few to unfold",
            eigs.len()
        )));
    }
    let mut x = eigs.to_vec();
    x.sort_by(f64::total_cmp);
    let (lo, hi) = (x[0], x[x.len() - 1]);
    if hi - lo <= f64::EPSILON * lo.abs().max(hi.abs()).max(1.0) {
        return Err(Error::DegenerateSpectrum("all eigenvalues are equal".into()));
    }
    let degree = poly_degree.min(x.len() - 2).max(1);
    let mid = 0.5 * (lo + hi);
    let half = 0.5 * (hi - lo);
    let design = DMatrix::from_fn(x.len(), degree + 1, |i, k| chebyshev_row((x[i] - mid) / half, degree)[k]);
    let staircase = DVector::from_fn(x.len(), |i, _| (i + 1) as f64);
    let coeffs = design
        .clone()
        .svd(true, true)
        .solve(&staircase, 1e-13)
        .map_err(|e| Error::InvalidInput(format!("staircase fit failed: {e}")))?;
    let fitted = design * coeffs;
    let mut levels = Vec::with_capacity(x.len());
    let mut prev = f64::NEG_INFINITY;
    for y in fitted.iter() {
        prev = prev.max(*y);
        levels.push(prev);
    }
    Ok(Unfolded {
        levels,
        degraded: x.len() < min_levels,
        degree,
    })
}

/// Nearest-neighbour spacings of unfolded levels with `trim_fraction` of the
/// spacings dropped at each end, rescaled to unit mean.
pub fn spacings(unfolded: &[f64], trim_fraction: f64) -> Vec<f64> {
    let raw: Vec<f64> = unfolded.windows(2).map(|w| (w[1] - w[0]).max(0.0)).collect();
    let cut = ((raw.len() as f64) * trim_fraction).floor() as usize;
    let kept = if raw.len() > 2 * cut + 1 { &raw[cut..raw.len() - cut] } else { &raw[..] };
    let mean = kept.iter().sum::<f64>() / kept.len() as f64;
    if mean > 0.0 {
        kept.iter().map(|s| s / mean).collect()
    } else {
        kept.to_vec()
    }
}

/// `A(ω) = Γ((ω+2)/(ω+1))^{ω+1}`.
pub fn brody_scale(omega: f64) -> f64 {
    libm::tgamma((omega + 2.0) / (omega + 1.0)).powf(omega + 1.0)
}

pub fn brody_pdf(s: f64, omega: f64) -> f64 {
    if s < 0.0 {
        return 0.0;
    }
    let a = brody_scale(omega);
    a * (omega + 1.0) * s.powf(omega) * (-a * s.powf(omega + 1.0)).exp()
}

pub fn brody_cdf(s: f64, omega: f64) -> f64 {
    if s <= 0.0 {
        return 0.0;
    }
    1.0 - (-brody_scale(omega) * s.powf(omega + 1.0)).exp()
}

/// Inverse CDF: maps `u ∈ [0, 1)` to a Brody-distributed spacing.
pub fn brody_quantile(u: f64, omega: f64) -> f64 {
    (-(1.0 - u).ln() / brody_scale(omega)).powf(1.0 / (omega + 1.0))
}

pub fn brody_log_likelihood(spacings: &[f64], omega: f64) -> f64 {
    let a = brody_scale(omega);
    let base = a.ln() + (omega + 1.0).ln();
    spacings
        .iter()
        .map(|&s| {
            let s = s.max(SPACING_FLOOR);
            base + omega * s.ln() - a * s.powf(omega + 1.0)
        })
        .sum()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BrodyFit {
    pub omega: f64,
    pub log_likelihood: f64,
    pub sample_count: usize,
    /// The optimum sits on `ω = 0` or `ω = 1`.
    pub at_boundary: bool,
}

/// Maximum-likelihood Brody parameter on `[0, 1]` by golden-section search.
pub fn fit_brody(spacings: &[f64]) -> Result<BrodyFit> {
    if spacings.len() < 2 {
        return Err(Error::DegenerateSpectrum(format!(
            "{} spacings are too few to fit",
            spacings.len()
        )));
    }
    if spacings.iter().any(|s| !s.is_finite() || *s < 0.0) {
        return Err(Error::InvalidInput("spacings must be finite and non-negative".into()));
    }
    let nll = |w: f64| -brody_log_likelihood(spacings, w);
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = (0.0f64, 1.0f64);
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut fc, mut fd) = (nll(c), nll(d));
    while b - a > 1e-8 {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = nll(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = nll(d);
        }
    }
    let interior = 0.5 * (a + b);
    let candidates = [(0.0, nll(0.0)), (interior, nll(interior)), (1.0, nll(1.0))];
    let (omega, best) = candidates
        .into_iter()
        .min_by(|x, y| x.1.total_cmp(&y.1))
        .expect("three candidates");
    if !best.is_finite() {
        return Err(Error::InvalidInput("non-finite Brody likelihood".into()));
    }
    Ok(BrodyFit {
        omega,
        log_likelihood: -best,
        sample_count: spacings.len(),
        at_boundary: omega == 0.0 || omega == 1.0,
    })
}

/// Integrable iff `ω ≤ threshold`.
pub fn classify(omega: f64, threshold: f64) -> Classification {
    if omega <= threshold {
        Classification::Integrable
    } else {
        Classification::Chaotic
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralReport {
    pub raw_spectrum: Vec<f64>,
    pub unfolded: Vec<f64>,
    pub spacings: Vec<f64>,
    pub brody_omega: f64,
    pub fit: BrodyFit,
    pub classification: Classification,
    /// Fewer levels than [`SpectralConfig::min_levels`].
    pub degraded: bool,
    pub poly_degree: usize,
}

/// Unfold, take spacings, fit and classify an already computed spectrum.
pub fn analyze_spectrum(eigs: &[f64], config: &SpectralConfig) -> Result<SpectralReport> {
    let unfolded = unfold_with_min(eigs, config.poly_degree, config.min_levels)?;
    let s = spacings(&unfolded.levels, config.trim_fraction);
    let fit = fit_brody(&s)?;
    let mut raw = eigs.to_vec();
    raw.sort_by(f64::total_cmp);
    Ok(SpectralReport {
        raw_spectrum: raw,
        unfolded: unfolded.levels,
        spacings: s,
        brody_omega: fit.omega,
        fit,
        classification: classify(fit.omega, config.classify_threshold),
        degraded: unfolded.degraded,
        poly_degree: unfolded.degree,
    })
}

/// Diagonalize, unfold, fit and classify a Bell operator.
pub fn analyze_operator(b: &BellOperator, config: &SpectralConfig) -> Result<SpectralReport> {
    analyze_spectrum(&b.spectrum()?, config)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HistogramBin {
    pub bin_left: f64,
    pub bin_right: f64,
    pub density: f64,
    pub brody_fit_density: f64,
}

/// Normalized spacing histogram over `[0, max s]` with the fitted Brody
/// density at each bin centre.
pub fn spacing_histogram(spacings: &[f64], omega: f64, bins: usize) -> Vec<HistogramBin> {
    let bins = bins.max(1);
    let top = spacings.iter().copied().fold(0.0, f64::max).max(1e-12);
    let width = top / bins as f64;
    let mut counts = vec![0usize; bins];
    for &s in spacings {
        let k = ((s / width) as usize).min(bins - 1);
        counts[k] += 1;
    }
    let total = spacings.len().max(1) as f64;
    counts
        .iter()
        .enumerate()
        .map(|(k, &c)| {
            let left = k as f64 * width;
            HistogramBin {
                bin_left: left,
                bin_right: left + width,
                density: c as f64 / (total * width),
                brody_fit_density: brody_pdf(left + 0.5 * width, omega),
            }
        })
        .collect()
}

pub const HISTOGRAM_CSV_HEADER: &str = "bin_left,bin_right,density,brody_fit_density";

pub fn histogram_csv(bins: &[HistogramBin]) -> Result<String> {
    crate::table::to_csv(bins)
}

pub fn parse_histogram_csv(text: &str) -> Result<Vec<HistogramBin>> {
    crate::table::from_csv(text, HISTOGRAM_CSV_HEADER)
}
