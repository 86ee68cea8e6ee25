//! Batch drivers: the optimized scan over all irreps of `n` parties, spectral
//! statistics of random measurement settings, and the size of the region of
//! settings around the optimum whose spectra stay Poissonian.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bell_operator::{detects_nonlocality, BellAssembler, SettingsSource};
use crate::error::{Error, Result};
use crate::optimizer::{optimize_with, OptimizationConfig};
use crate::spectral_stats::{analyze_spectrum, Classification, SpectralConfig};
use crate::su3_irreps::{enumerate_irreps, IrrepLabel};
use crate::su3_measurements::{MeasurementParams, ProjectorTriple, QutritOperator, PARAM_LEN};
use crate::table;

/// Largest party count accepted by [`scan_irreps`].
pub const MAX_SCAN_PARTIES: usize = 32;

/// Independent random stream `index` of sub-experiment `domain`.
pub fn stream(seed: u64, domain: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream((domain << 48) | index);
    rng
}

const DOMAIN_RANDOM_SCAN: u64 = 1;
const DOMAIN_DIRECTIONS: u64 = 2;
const DOMAIN_MONTE_CARLO: u64 = 3;
const DOMAIN_HAAR: u64 = 4;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IrrepScanRow {
    pub label: IrrepLabel,
    pub dim: usize,
    /// `p/(p+q)`; absent for the trivial irrep.
    pub r: Option<f64>,
    pub violation: Option<f64>,
    pub omega: Option<f64>,
    pub classification: Option<Classification>,
    pub nonlocal: bool,
    pub degraded: bool,
    pub best_settings: Option<MeasurementParams>,
    pub error: Option<String>,
}

/// Optimizes every irrep of `n` parties and analyses the spectrum at the
/// optimum. Rows are sorted by `r` (trivial irrep last), then by label.
pub fn scan_irreps(n: usize, opt: &OptimizationConfig, spectral: &SpectralConfig) -> Result<Vec<IrrepScanRow>> {
    if n < 2 || n > MAX_SCAN_PARTIES {
        return Err(Error::InvalidInput(format!(
            "scan needs 2 ≤ n ≤ {MAX_SCAN_PARTIES}, got {n}"
        )));
    }
    opt.validate()?;
    let mut rows: Vec<IrrepScanRow> = enumerate_irreps(n)
        .into_par_iter()
        .map(|label| scan_one(label, n, opt, spectral))
        .collect();
    rows.sort_by(|a, b| {
        let key = |r: &IrrepScanRow| r.r.unwrap_or(f64::INFINITY);
        key(a).total_cmp(&key(b)).then(a.label.cmp(&b.label))
    });
    Ok(rows)
}

fn scan_one(label: IrrepLabel, n: usize, opt: &OptimizationConfig, spectral: &SpectralConfig) -> IrrepScanRow {
    let mut row = IrrepScanRow {
        label,
        dim: label.dimension(),
        r: label.symmetry_ratio(),
        violation: None,
        omega: None,
        classification: None,
        nonlocal: false,
        degraded: false,
        best_settings: None,
        error: None,
    };
    let outcome = (|| -> Result<()> {
        let asm = BellAssembler::new(label, n)?;
        let best = optimize_with(&asm, opt)?;
        row.violation = Some(best.best_value);
        row.nonlocal = detects_nonlocality(best.best_value);
        row.best_settings = Some(best.best_settings.clone());
        let spectrum = asm.from_params(&best.best_settings)?.spectrum()?;
        let report = analyze_spectrum(&spectrum, spectral)?;
        row.omega = Some(report.brody_omega);
        row.classification = Some(report.classification);
        row.degraded = report.degraded;
        Ok(())
    })();
    if let Err(e) = outcome {
        row.error = Some(e.to_string());
    }
    row
}

/// One line of the scan table, keyed for plotting.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanCsvRow {
    pub r: Option<f64>,
    pub violation: Option<f64>,
    pub omega: Option<f64>,
    pub p: u32,
    pub q: u32,
    pub p_plus_2q: u32,
    pub p_minus_q: i64,
    pub dim: usize,
    pub classification: Option<Classification>,
}

pub const SCAN_CSV_HEADER: &str = "r,violation,omega,p,q,p_plus_2q,p_minus_q,dim,classification";

pub fn scan_csv(rows: &[IrrepScanRow]) -> Result<String> {
    let out: Vec<ScanCsvRow> = rows
        .iter()
        .map(|r| ScanCsvRow {
            r: r.r,
            violation: r.violation,
            omega: r.omega,
            p: r.label.p,
            q: r.label.q,
            p_plus_2q: r.label.p + 2 * r.label.q,
            p_minus_q: r.label.p as i64 - r.label.q as i64,
            dim: r.dim,
            classification: r.classification,
        })
        .collect();
    table::to_csv(&out)
}

pub fn parse_scan_csv(text: &str) -> Result<Vec<ScanCsvRow>> {
    table::from_csv(text, SCAN_CSV_HEADER)
}

/// Haar-random 3×3 unitary: QR of a complex Gaussian matrix with the phases
/// of the diagonal of `R` moved into `Q`.
pub fn haar_unitary<R: Rng + ?Sized>(rng: &mut R) -> QutritOperator {
    let z = QutritOperator::from_fn(|_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        Complex64::new(re, im) / std::f64::consts::SQRT_2
    });
    let qr = z.qr();
    let (mut q, r) = (qr.q(), qr.r());
    for j in 0..3 {
        let d = r[(j, j)];
        let phase = if d.norm() > 0.0 { d / d.norm() } else { Complex64::new(1.0, 0.0) };
        let mut col = q.column_mut(j);
        col *= phase;
    }
    q
}

/// Two independent Haar-random measurement bases.
pub fn haar_settings<R: Rng + ?Sized>(rng: &mut R) -> [ProjectorTriple; 2] {
    [
        ProjectorTriple::from_basis(&haar_unitary(rng), 0),
        ProjectorTriple::from_basis(&haar_unitary(rng), 1),
    ]
}

pub fn haar_random_settings(seed: u64) -> [ProjectorTriple; 2] {
    haar_settings(&mut stream(seed, DOMAIN_HAAR, 0))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OmegaBin {
    pub bin_left: f64,
    pub bin_right: f64,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RandomScanReport {
    pub n: usize,
    pub label: IrrepLabel,
    pub samples: usize,
    pub seed: u64,
    pub omegas: Vec<f64>,
    pub violations: Vec<f64>,
    pub histogram: Vec<OmegaBin>,
    pub median_omega: Option<f64>,
    /// Fraction of analysed samples with a violation below the threshold.
    pub violation_fraction: f64,
    pub failures: usize,
    /// Samples whose spectrum was too short for a confident fit.
    pub degraded: usize,
}

pub fn median(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    Some(if v.len() % 2 == 1 { v[m] } else { 0.5 * (v[m - 1] + v[m]) })
}

/// Histogram of values in `[0, 1]` with `bins` equal bins.
pub fn unit_histogram(values: &[f64], bins: usize) -> Vec<OmegaBin> {
    let bins = bins.max(1);
    let mut counts = vec![0usize; bins];
    for &v in values {
        counts[((v * bins as f64) as usize).min(bins - 1)] += 1;
    }
    counts
        .into_iter()
        .enumerate()
        .map(|(k, count)| OmegaBin {
            bin_left: k as f64 / bins as f64,
            bin_right: (k + 1) as f64 / bins as f64,
            count,
        })
        .collect()
}

/// Brody parameter and violation for `samples` Haar-random settings shared by
/// all parties.
pub fn random_measurement_scan(
    n: usize,
    label: IrrepLabel,
    samples: usize,
    seed: u64,
    spectral: &SpectralConfig,
) -> Result<RandomScanReport> {
    if samples < 100 {
        return Err(Error::InvalidInput(format!("need at least 100 samples, got {samples}")));
    }
    let asm = BellAssembler::new(label, n)?;
    let results: Vec<Result<(f64, f64, bool)>> = (0..samples as u64)
        .into_par_iter()
        .map(|i| {
            let settings = haar_settings(&mut stream(seed, DOMAIN_RANDOM_SCAN, i));
            let spectrum = asm.from_projectors(&settings, SettingsSource::Projectors).spectrum()?;
            let report = analyze_spectrum(&spectrum, spectral)?;
            Ok((report.brody_omega, spectrum[0], report.degraded))
        })
        .collect();
    let mut omegas = Vec::new();
    let mut violations = Vec::new();
    let (mut failures, mut degraded) = (0, 0);
    for r in results {
        match r {
            Ok((w, v, d)) => {
                omegas.push(w);
                violations.push(v);
                degraded += d as usize;
            }
            Err(_) => failures += 1,
        }
    }
    let detected = violations.iter().filter(|v| detects_nonlocality(**v)).count();
    Ok(RandomScanReport {
        n,
        label,
        samples,
        seed,
        histogram: unit_histogram(&omegas, spectral.histogram_bins),
        median_omega: median(&omegas),
        violation_fraction: if violations.is_empty() { 0.0 } else { detected as f64 / violations.len() as f64 },
        omegas,
        violations,
        failures,
        degraded,
    })
}

/// Frobenius norm of `a_opt − a`.
pub fn frobenius_radius(a_opt: &DMatrix<Complex64>, a: &DMatrix<Complex64>) -> Result<f64> {
    if a_opt.shape() != a.shape() {
        return Err(Error::ShapeMismatch(a_opt.shape(), a.shape()));
    }
    Ok((a_opt - a).norm())
}

/// Root-sum-square of the radii between the observables `Σ_j j·P_j` of two
/// setting pairs.
pub fn settings_radius(opt: &[ProjectorTriple; 2], other: &[ProjectorTriple; 2]) -> f64 {
    opt.iter()
        .zip(other)
        .map(|(a, b)| (a.observable() - b.observable()).norm_squared())
        .sum::<f64>()
        .sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VolumeConfig {
    pub directions: usize,
    pub mc_samples: usize,
    /// Norm of the random perturbation added per step.
    pub step_size: f64,
    pub transition_threshold: f64,
    /// Steps after which a direction without a transition is dropped.
    pub step_cap: usize,
    pub seed: u64,
}

impl Default for VolumeConfig {
    fn default() -> Self {
        Self {
            directions: 100,
            mc_samples: 10_000,
            step_size: 0.01,
            transition_threshold: 0.1,
            step_cap: 10_000,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VolumeReport {
    pub n: usize,
    pub label: IrrepLabel,
    pub avg_radius: f64,
    pub boundary_points: usize,
    pub excluded_directions: usize,
    pub mc_samples: usize,
    pub volume_fraction: f64,
    pub seed: u64,
    /// `R_j` of every direction that reached the boundary.
    pub radii: Vec<f64>,
    /// Step `α` at which each of those directions left the region.
    pub alphas: Vec<usize>,
    pub config: VolumeConfig,
}

/// First step `α` at which `ω > threshold` on two consecutive steps, and the
/// settings at the first of the two.
fn walk_direction(
    asm: &BellAssembler,
    theta_opt: &[f64],
    direction: &[f64],
    config: &VolumeConfig,
    spectral: &SpectralConfig,
) -> Result<Option<(usize, MeasurementParams)>> {
    if direction.iter().all(|d| *d == 0.0) {
        // the operator never changes, so ω never moves
        return Ok(None);
    }
    let mut pending: Option<(usize, MeasurementParams)> = None;
    for alpha in 1..=config.step_cap {
        let theta: Vec<f64> = theta_opt.iter().zip(direction).map(|(t, d)| t + alpha as f64 * d).collect();
        let params = MeasurementParams::from_flat(&theta)?;
        let spectrum = asm.from_params(&params)?.spectrum()?;
        let omega = analyze_spectrum(&spectrum, spectral)?.brody_omega;
        if omega > config.transition_threshold {
            if let Some(hit) = pending {
                return Ok(Some(hit));
            }
            pending = Some((alpha, params));
        } else {
            pending = None;
        }
    }
    Ok(None)
}

/// Walks random directions away from `optimal` until the spacing statistics
/// stop being Poissonian, averages the distances of the exit points, and
/// estimates the fraction of Haar-random settings closer than that average.
pub fn poisson_region_volume(
    n: usize,
    label: IrrepLabel,
    optimal: &MeasurementParams,
    config: &VolumeConfig,
    spectral: &SpectralConfig,
) -> Result<VolumeReport> {
    if config.step_size < 0.0 || !config.step_size.is_finite() {
        return Err(Error::InvalidInput("step_size must be finite and non-negative".into()));
    }
    if config.directions == 0 || config.mc_samples == 0 {
        return Err(Error::InvalidInput("directions and mc_samples must be positive".into()));
    }
    let asm = BellAssembler::new(label, n)?;
    let gens = crate::su3_measurements::GeneratorSet::standard();
    let opt_projectors = optimal.projectors(gens)?;
    let theta_opt = optimal.flatten();
    let walks: Vec<Result<Option<(usize, f64)>>> = (0..config.directions as u64)
        .into_par_iter()
        .map(|j| {
            let mut rng = stream(config.seed, DOMAIN_DIRECTIONS, j);
            let raw: Vec<f64> = (0..2 * PARAM_LEN).map(|_| rng.sample(StandardNormal)).collect();
            let len = raw.iter().map(|x| x * x).sum::<f64>().sqrt();
            let direction: Vec<f64> = raw.iter().map(|x| x / len * config.step_size).collect();
            Ok(walk_direction(&asm, &theta_opt, &direction, config, spectral)?
                .map(|(alpha, params)| -> Result<(usize, f64)> {
                    Ok((alpha, settings_radius(&opt_projectors, &params.projectors(gens)?)))
                })
                .transpose()?)
        })
        .collect();
    let mut radii = Vec::new();
    let mut alphas = Vec::new();
    let mut excluded = 0;
    for w in walks {
        match w? {
            Some((alpha, r)) => {
                alphas.push(alpha);
                radii.push(r);
            }
            None => excluded += 1,
        }
    }
    let avg_radius = if radii.is_empty() { 0.0 } else { radii.iter().sum::<f64>() / radii.len() as f64 };
    let inside: usize = (0..config.mc_samples as u64)
        .into_par_iter()
        .map(|i| {
            let settings = haar_settings(&mut stream(config.seed, DOMAIN_MONTE_CARLO, i));
            (settings_radius(&opt_projectors, &settings) < avg_radius) as usize
        })
        .sum();
    Ok(VolumeReport {
        n,
        label,
        avg_radius,
        boundary_points: radii.len(),
        excluded_directions: excluded,
        mc_samples: config.mc_samples,
        volume_fraction: inside as f64 / config.mc_samples as f64,
        seed: config.seed,
        radii,
        alphas,
        config: *config,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn haar_unitaries_are_unitary() {
        let mut rng = stream(5, 0, 0);
        for _ in 0..100 {
            let u = haar_unitary(&mut rng);
            assert!((u * u.adjoint() - QutritOperator::identity()).norm() < 1e-12);
        }
    }

    #[test]
    fn haar_first_moment() {
        let mut rng = stream(8, 0, 0);
        let draws = 100_000;
        let mean: f64 = (0..draws).map(|_| haar_unitary(&mut rng)[(0, 0)].norm_sqr()).sum::<f64>() / draws as f64;
        assert!((mean - 1.0 / 3.0).abs() < 0.01, "{mean}");
    }

    #[test]
    fn radius_examples() {
        let zero = DMatrix::<Complex64>::zeros(3, 3);
        let mut d = zero.clone();
        d[(0, 0)] = Complex64::new(3.0, 0.0);
        d[(1, 1)] = Complex64::new(4.0, 0.0);
        assert_eq!(frobenius_radius(&zero, &d).unwrap(), 5.0);
        assert_eq!(frobenius_radius(&d, &d).unwrap(), 0.0);
        assert!(matches!(
            frobenius_radius(&zero, &DMatrix::zeros(2, 3)),
            Err(Error::ShapeMismatch(_, _))
        ));
    }

    #[test]
    fn small_scan_rows() {
        let opt = OptimizationConfig {
            restarts: 1,
            max_iterations: 20,
            ..OptimizationConfig::default()
        };
        let rows = scan_irreps(3, &opt, &SpectralConfig::default()).unwrap();
        let labels: Vec<_> = rows.iter().map(|r| r.label).collect();
        assert_eq!(labels, vec![IrrepLabel::new(1, 1), IrrepLabel::new(3, 0), IrrepLabel::new(0, 0)]);
        assert!(rows[2].r.is_none());
        let parsed = parse_scan_csv(&scan_csv(&rows).unwrap()).unwrap();
        assert_eq!(parsed.len(), 3);
        assert_eq!(parsed[0].p_minus_q, 0);
    }

    #[test]
    fn zero_step_never_transitions() {
        let config = VolumeConfig {
            directions: 3,
            mc_samples: 10,
            step_size: 0.0,
            ..VolumeConfig::default()
        };
        let rep = poisson_region_volume(4, IrrepLabel::new(4, 0), &MeasurementParams::zeros(), &config, &SpectralConfig::default())
            .unwrap();
        assert_eq!(rep.excluded_directions, 3);
        assert_eq!(rep.boundary_points, 0);
        assert_eq!(rep.volume_fraction, 0.0);
    }

    #[test]
    fn median_and_histogram() {
        assert_eq!(median(&[3.0, 1.0, 2.0]), Some(2.0));
        assert_eq!(median(&[1.0, 2.0]), Some(1.5));
        assert_eq!(median(&[]), None);
        let h = unit_histogram(&[0.0, 0.5, 1.0, 0.99], 4);
        assert_eq!(h.iter().map(|b| b.count).collect::<Vec<_>>(), vec![1, 0, 1, 2]);
    }
}
