//! Acceptance suite. Prints one line per criterion and exits non-zero when
//! any criterion fails.

use bellchaos::bell_operator::{build_bell_operator, detects_nonlocality, ONE_BODY_TERMS, TWO_BODY_TERMS};
use bellchaos::classical_bound::{
    bell_value_from_counts, bell_value_from_table, minimize_classical, verify_polynomial_equivalence,
    verify_polynomial_equivalence_exhaustive, ClassicalMode, LdsCounts, LdsTable,
};
use bellchaos::experiments::{
    median, poisson_region_volume, random_measurement_scan, scan_irreps, stream, IrrepScanRow, VolumeConfig,
};
use bellchaos::linalg::{hermitian_eigenvalues, SparseMatrix};
use bellchaos::optimizer::{optimize_measurements, OptimizationConfig};
use bellchaos::spectral_stats::{analyze_spectrum, brody_quantile, fit_brody, Classification, SpectralConfig};
use bellchaos::su3_irreps::{
    enumerate_irreps, irrep_dimension, irrep_generators, schur_weyl_multiplicity, IrrepBasis, IrrepLabel,
};
use bellchaos::su3_measurements::{GeneratorSet, MeasurementParams, ProjectorTriple, QutritOperator};
use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::sync::OnceLock;
use std::time::Instant;

const ALGEBRA_TOL: f64 = 1e-8;
const BLOCK_TOL: f64 = 1e-8;
const ONSET_TOL: f64 = -1e-6;
const BRODY_RECOVERY_TOL: f64 = 0.05;
const GOE_MIN_OMEGA: f64 = 0.85;
const POISSON_MAX_OMEGA: f64 = 0.05;
const INTEGRABLE_SHARE: f64 = 0.8;
const RANDOM_MEDIAN_OMEGA: f64 = 0.3;
const RANDOM_DETECTION: f64 = 0.5;

/// Restarts per irrep in the n = 25 scan.
const SCAN_RESTARTS: usize = 1;
const SCAN_SEED: u64 = 0;

type Outcome = std::result::Result<String, String>;

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn classical_bound() -> Outcome {
    let mut minima = Vec::new();
    for n in 1..=8 {
        let r = minimize_classical(n, ClassicalMode::Exhaustive).map_err(|e| e.to_string())?;
        minima.push(r.minimum);
    }
    let stochastic = minimize_classical(
        25,
        ClassicalMode::Stochastic {
            samples: 1_000_000,
            seed: 7,
        },
    )
    .map_err(|e| e.to_string())?;
    check(
        minima.iter().all(|m| *m == 0) && stochastic.minimum == 0,
        format!(
            "exhaustive minima n=1..8 {minima:?}; stochastic n=25 minimum {} over {} states",
            stochastic.minimum, stochastic.states_visited
        ),
    )
}

/// Table built party by party from explicit answers `(a₀, a₁)`.
fn party_table(parties: &[(usize, usize)]) -> LdsTable {
    let answer = |p: (usize, usize), x: usize| if x == 0 { p.0 } else { p.1 };
    let mut t = LdsTable {
        one: [[0; 2]; 3],
        two: [[[[0; 2]; 2]; 3]; 3],
    };
    for (i, &pi) in parties.iter().enumerate() {
        for x in 0..2 {
            t.one[answer(pi, x)][x] += 1;
        }
        for (j, &pj) in parties.iter().enumerate() {
            if i != j {
                for x in 0..2 {
                    for y in 0..2 {
                        t.two[answer(pi, x)][answer(pj, y)][x][y] += 1;
                    }
                }
            }
        }
    }
    t
}

fn polynomial_equivalence() -> Outcome {
    let mut checked = 0u64;
    for n in 1..=3u64 {
        checked += verify_polynomial_equivalence_exhaustive(n).map_err(|e| e.to_string())?.checked;
        // every assignment of strategies to parties
        for code in 0..9usize.pow(n as u32) {
            let parties: Vec<(usize, usize)> =
                (0..n).map(|i| code / 9usize.pow(i as u32) % 9).map(|s| (s / 3, s % 3)).collect();
            let mut c = [[0u64; 3]; 3];
            for &(a, b) in &parties {
                c[a][b] += 1;
            }
            let direct = bell_value_from_table(&party_table(&parties));
            let poly = bell_value_from_counts(&LdsCounts::new(c));
            if direct != poly {
                return Err(format!("party list {parties:?}: table {direct} vs polynomial {poly}"));
            }
        }
    }
    let random = verify_polynomial_equivalence(25, 10_000, 11).map_err(|e| e.to_string())?;
    check(
        random.checked == 10_000,
        format!("{checked} exhaustive grids for n<=3 plus party-list oracle; {} random grids at n=25", random.checked),
    )
}

fn irrep_dimensions() -> Outcome {
    let a = irrep_dimension(IrrepLabel::new(21, 2)).map_err(|e| e.to_string())?;
    let b = irrep_dimension(IrrepLabel::new(9, 8)).map_err(|e| e.to_string())?;
    for n in 1..=12usize {
        let total: u128 = enumerate_irreps(n)
            .iter()
            .map(|l| l.dimension() as u128 * schur_weyl_multiplicity(*l, n).unwrap_or(0))
            .sum();
        if total != 3u128.pow(n as u32) {
            return Err(format!("n={n}: sum {total} != 3^n"));
        }
    }
    check(a == 825 && b == 855, format!("dim(21,2)={a}, dim(9,8)={b}, sum dim*mult = 3^n for n<=12"))
}

fn generator(basis: &IrrepBasis, a: usize, b: usize) -> SparseMatrix {
    if a == b {
        basis.traceless_diagonal()[a].clone()
    } else {
        basis.ladder(a, b).clone()
    }
}

fn algebra_defect(label: IrrepLabel) -> std::result::Result<f64, String> {
    let basis = irrep_generators(label).map_err(|e| e.to_string())?;
    let d = basis.dim();
    let one = Complex64::new(1.0, 0.0);
    let s: Vec<Vec<SparseMatrix>> = (0..3).map(|a| (0..3).map(|b| generator(&basis, a, b)).collect()).collect();
    let mut worst: f64 = 0.0;
    for a in 0..3 {
        for b in 0..3 {
            for g in 0..3 {
                for e in 0..3 {
                    let comm = s[a][b].matmul(&s[g][e]).add_scaled(-one, &s[g][e].matmul(&s[a][b]));
                    let mut expected = SparseMatrix::zeros(d);
                    if b == g {
                        expected = expected.add_scaled(one, &s[a][e]);
                    }
                    if a == e {
                        expected = expected.add_scaled(-one, &s[g][b]);
                    }
                    worst = worst.max(comm.max_abs_diff(&expected));
                }
            }
        }
    }
    let scalar = SparseMatrix::identity(d).scale(Complex64::new(basis.casimir_value(), 0.0));
    Ok(worst.max(basis.casimir().max_abs_diff(&scalar)))
}

fn irrep_algebra() -> Outcome {
    let mut labels: Vec<IrrepLabel> = (1..=25).flat_map(enumerate_irreps).filter(|l| l.dimension() <= 1000).collect();
    labels.sort_by_key(|l| (l.p, l.q));
    labels.dedup();
    let mut worst = (0.0, IrrepLabel::new(0, 0));
    for &label in &labels {
        let d = algebra_defect(label)?;
        if d > worst.0 {
            worst = (d, label);
        }
    }
    check(
        worst.0 < ALGEBRA_TOL,
        format!("{} distinct irreps, worst defect {:.2e} at {}", labels.len(), worst.0, worst.1),
    )
}

type Dense = DMatrix<Complex64>;

fn embed(a: &QutritOperator, site: usize, n: usize) -> Dense {
    let id = Dense::identity(3, 3);
    let a = Dense::from_fn(3, 3, |i, j| a[(i, j)]);
    (0..n).fold(Dense::identity(1, 1), |acc, k| acc.kronecker(if k == site { &a } else { &id }))
}

fn full_bell(proj: &[ProjectorTriple; 2], n: usize) -> Dense {
    let dim = 3usize.pow(n as u32);
    let p = |a: usize, x: usize| proj[x].outcome(a);
    let mut b = Dense::zeros(dim, dim);
    for (a, x) in ONE_BODY_TERMS {
        for i in 0..n {
            b += embed(p(a, x), i, n);
        }
    }
    for (coeff, (a, x), (bb, y)) in TWO_BODY_TERMS {
        for i in 0..n {
            for j in (0..n).filter(|j| *j != i) {
                b += (embed(p(a, x), i, n) * embed(p(bb, y), j, n)) * Complex64::new(coeff, 0.0);
            }
        }
    }
    b
}

fn sorted(mut v: Vec<f64>) -> Vec<f64> {
    v.sort_by(f64::total_cmp);
    v
}

fn block_oracle() -> Outcome {
    let mut rng = stream(5, 0, 0);
    let mut worst: f64 = 0.0;
    for n in [2usize, 3] {
        for _ in 0..5 {
            let flat: Vec<f64> = (0..16).map(|_| rng.random_range(-1.5..1.5)).collect();
            let params = MeasurementParams::from_flat(&flat).map_err(|e| e.to_string())?;
            let proj = params.projectors(GeneratorSet::standard()).map_err(|e| e.to_string())?;
            let full = full_bell(&proj, n);
            let triplets = (0..full.nrows()).flat_map(|i| (0..full.ncols()).map(move |j| (i, j))).map(|(i, j)| (i, j, full[(i, j)]));
            let full = sorted(
                hermitian_eigenvalues(&SparseMatrix::from_triplets(full.nrows(), triplets).to_dense())
                    .map_err(|e| e.to_string())?,
            );
            let mut pooled = Vec::new();
            for label in enumerate_irreps(n) {
                let s = build_bell_operator(&params, label, n).and_then(|b| b.spectrum()).map_err(|e| e.to_string())?;
                for _ in 0..schur_weyl_multiplicity(label, n).unwrap_or(0) {
                    pooled.extend_from_slice(&s);
                }
            }
            let pooled = sorted(pooled);
            if pooled.len() != full.len() {
                return Err(format!("n={n}: {} pooled levels vs {}", pooled.len(), full.len()));
            }
            worst = full.iter().zip(&pooled).map(|(a, b)| (a - b).abs()).fold(worst, f64::max);
        }
    }
    check(worst <= BLOCK_TOL, format!("10 random settings at n=2,3, worst level mismatch {worst:.2e}"))
}

fn scan25() -> &'static std::result::Result<Vec<IrrepScanRow>, String> {
    static SCAN: OnceLock<std::result::Result<Vec<IrrepScanRow>, String>> = OnceLock::new();
    SCAN.get_or_init(|| {
        let opt = OptimizationConfig {
            restarts: SCAN_RESTARTS,
            seed: SCAN_SEED,
            ..Default::default()
        };
        scan_irreps(25, &opt, &SpectralConfig::default()).map_err(|e| e.to_string())
    })
}

fn violation_onset() -> Outcome {
    let opt = OptimizationConfig::default();
    let v7 = optimize_measurements(IrrepLabel::new(7, 0), 7, &opt).map_err(|e| e.to_string())?.best_value;
    let v8 = optimize_measurements(IrrepLabel::new(8, 0), 8, &opt).map_err(|e| e.to_string())?.best_value;
    let rows = scan25().as_ref().map_err(|e| e.clone())?;
    let failed: Vec<String> = rows.iter().filter(|r| r.error.is_some()).map(|r| r.label.to_string()).collect();
    let best = rows
        .iter()
        .filter_map(|r| r.violation.map(|v| (v, r.label)))
        .min_by(|a, b| a.0.total_cmp(&b.0))
        .ok_or("empty scan")?;
    check(
        v7 >= ONSET_TOL && detects_nonlocality(v8) && best.1 == IrrepLabel::new(25, 0) && failed.is_empty(),
        format!(
            "(7,0) {v7:.3e}, (8,0) {v8:.6}; n=25 minimum {:.6} at {} ({} restart(s) per irrep, failed {failed:?})",
            best.0, best.1, SCAN_RESTARTS
        ),
    )
}

fn brody_calibration() -> Outcome {
    let mut recovered = Vec::new();
    for (k, omega) in [0.0, 0.3, 0.7, 1.0].into_iter().enumerate() {
        let mut rng = stream(100 + k as u64, 0, 0);
        let samples: Vec<f64> = (0..5000).map(|_| brody_quantile(rng.random::<f64>(), omega)).collect();
        recovered.push((omega, fit_brody(&samples).map_err(|e| e.to_string())?.omega));
    }
    let mut rng = stream(200, 0, 0);
    let dim = 500;
    let mut goe = vec![0.0; dim * dim];
    for i in 0..dim {
        for j in 0..=i {
            let x: f64 = rng.sample(StandardNormal);
            let v = if i == j { x * std::f64::consts::SQRT_2 } else { x };
            goe[i * dim + j] = v;
            goe[j * dim + i] = v;
        }
    }
    let triplets = (0..dim * dim).map(|k| (k / dim, k % dim, Complex64::new(goe[k], 0.0)));
    let goe_levels = hermitian_eigenvalues(&SparseMatrix::from_triplets(dim, triplets).to_dense()).map_err(|e| e.to_string())?;
    let config = SpectralConfig::default();
    let goe_omega = analyze_spectrum(&goe_levels, &config).map_err(|e| e.to_string())?.brody_omega;
    let mut rng = stream(201, 0, 0);
    let diag: Vec<f64> = (0..2000).map(|_| rng.random::<f64>()).collect();
    let poisson_omega = analyze_spectrum(&diag, &config).map_err(|e| e.to_string())?.brody_omega;
    check(
        recovered.iter().all(|(w, f)| (w - f).abs() <= BRODY_RECOVERY_TOL)
            && goe_omega >= GOE_MIN_OMEGA
            && poisson_omega <= POISSON_MAX_OMEGA,
        format!(
            "recovered {:?}; GOE(500) omega {goe_omega:.3}; uniform diagonal(2000) omega {poisson_omega:.3}",
            recovered.iter().map(|(w, f)| format!("{w}->{f:.3}")).collect::<Vec<_>>()
        ),
    )
}

fn integrability_association() -> Outcome {
    let rows = scan25().as_ref().map_err(|e| e.clone())?;
    let violating: Vec<&IrrepScanRow> = rows.iter().filter(|r| r.nonlocal).collect();
    let chaotic: Vec<String> = violating
        .iter()
        .filter(|r| r.classification != Some(Classification::Integrable))
        .map(|r| format!("{} omega {:.3}", r.label, r.omega.unwrap_or(f64::NAN)))
        .collect();
    let share = 1.0 - chaotic.len() as f64 / violating.len().max(1) as f64;
    check(
        !violating.is_empty() && share >= INTEGRABLE_SHARE,
        format!(
            "{}/{} violating irreps Integrable ({:.0}%); others: {chaotic:?}",
            violating.len() - chaotic.len(),
            violating.len(),
            100.0 * share
        ),
    )
}

fn random_settings_chaos() -> Outcome {
    let r = random_measurement_scan(25, IrrepLabel::new(25, 0), 1000, 9, &SpectralConfig::default())
        .map_err(|e| e.to_string())?;
    let med = r.median_omega.unwrap_or(0.0);
    check(
        med > RANDOM_MEDIAN_OMEGA && r.violation_fraction > RANDOM_DETECTION && r.failures == 0,
        format!(
            "{} samples: median omega {med:.3}, detection fraction {:.3}, failures {}",
            r.samples, r.violation_fraction, r.failures
        ),
    )
}

fn volume_shrinkage() -> Outcome {
    let spectral = SpectralConfig::default();
    let mut fractions = Vec::new();
    let mut radii = Vec::new();
    for n in [10usize, 15, 20, 25] {
        let label = IrrepLabel::new(n as u32, 0);
        let optimal = optimize_measurements(label, n, &OptimizationConfig::default()).map_err(|e| e.to_string())?;
        let (mut f, mut r) = (Vec::new(), Vec::new());
        for seed in 1..=3 {
            let config = VolumeConfig {
                seed,
                ..Default::default()
            };
            let report =
                poisson_region_volume(n, label, &optimal.best_settings, &config, &spectral).map_err(|e| e.to_string())?;
            f.push(report.volume_fraction);
            r.push(report.avg_radius);
        }
        fractions.push(median(&f).unwrap_or(f64::NAN));
        radii.push(median(&r).unwrap_or(f64::NAN));
    }
    check(
        fractions.windows(2).all(|w| w[1] < w[0]),
        format!("n=10,15,20,25 median volume_fraction {fractions:?}; median avg_radius {radii:.4?}"),
    )
}

fn run_cli(dir: &Path, args: &[&str]) -> std::result::Result<(), String> {
    let status = Command::new(env!("CARGO_BIN_EXE_bellchaos"))
        .args(args)
        .current_dir(dir)
        .output()
        .map_err(|e| e.to_string())?;
    // verify-classical uses its exit code for the verdict
    if status.status.success() {
        Ok(())
    } else {
        Err(format!("{args:?}: {}", String::from_utf8_lossy(&status.stderr)))
    }
}

fn cli_determinism() -> Outcome {
    let root: PathBuf = std::env::temp_dir().join(format!("bellchaos-acceptance-{}", std::process::id()));
    let runs = ["a", "b"].map(|r| root.join(r));
    for dir in &runs {
        std::fs::create_dir_all(dir).map_err(|e| e.to_string())?;
    }
    let commands: Vec<Vec<&str>> = vec![
        vec!["verify-classical", "--n", "25", "--mode", "stochastic", "--seed", "7", "--out", "classical.json"],
        vec!["verify-classical", "--n", "4", "--mode", "exhaustive", "--out", "exhaustive.json"],
        vec!["optimize", "--n", "8", "--p", "8", "--q", "0", "--restarts", "4", "--seed", "3", "--out", "optimize.json", "--settings-out", "opt.json"],
        vec!["scan", "--n", "5", "--restarts", "2", "--seed", "1", "--out", "scan.csv", "--json", "scan.json"],
        vec!["random-scan", "--n", "8", "--p", "8", "--q", "0", "--samples", "100", "--seed", "2", "--out", "random.csv", "--json", "random.json"],
        vec!["volume", "--n", "8", "--p", "8", "--q", "0", "--directions", "10", "--mc", "1000", "--seed", "3", "--settings", "opt.json", "--out", "volume.json"],
        vec!["spectrum", "--n", "8", "--p", "8", "--q", "0", "--settings", "optimize.json", "--out", "spectrum.csv", "--json", "spectrum.json"],
        vec!["build-bell", "--n", "8", "--p", "8", "--q", "0", "--settings", "opt.json", "--out", "bell.csv", "--meta", "bell.json"],
    ];
    for dir in &runs {
        for args in &commands {
            run_cli(dir, args)?;
        }
    }
    let outputs = [
        "classical.json", "exhaustive.json", "optimize.json", "opt.json", "scan.json", "scan.csv", "random.json",
        "random.csv", "volume.json", "spectrum.json", "spectrum.csv", "bell.json", "bell.csv",
    ];
    let mut differing = Vec::new();
    for file in outputs {
        let read = |d: &PathBuf| std::fs::read(d.join(file)).map_err(|e| format!("{file}: {e}"));
        if read(&runs[0])? != read(&runs[1])? {
            differing.push(file);
        }
    }
    let _ = std::fs::remove_dir_all(&root);
    check(
        differing.is_empty(),
        format!("{} commands, {} outputs compared; differing {differing:?}", commands.len(), outputs.len()),
    )
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 11] = [
        ("classical bound", classical_bound),
        ("table/polynomial equivalence", polynomial_equivalence),
        ("irrep dimensions", irrep_dimensions),
        ("irrep algebra", irrep_algebra),
        ("block-decomposition oracle", block_oracle),
        ("violation onset", violation_onset),
        ("Brody calibration", brody_calibration),
        ("nonlocality-integrability association", integrability_association),
        ("random-settings chaos", random_settings_chaos),
        ("volume shrinkage", volume_shrinkage),
        ("CLI determinism", cli_determinism),
    ];
    let only: Option<Vec<usize>> = std::env::var("BELLCHAOS_ACCEPTANCE_ONLY")
        .ok()
        .map(|s| s.split(',').filter_map(|x| x.trim().parse().ok()).collect());
    let mut failures = 0;
    for (k, (name, run)) in criteria.iter().enumerate() {
        let id = k + 1;
        if only.as_ref().is_some_and(|o| !o.contains(&id)) {
            continue;
        }
        let start = Instant::now();
        let outcome = run();
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("criterion {id:>2} PASS  {name} [{secs:.1}s]: {detail}"),
            Err(detail) => {
                failures += 1;
                println!("criterion {id:>2} FAIL  {name} [{secs:.1}s]: {detail}");
            }
        }
    }
    if failures > 0 {
        println!("{failures} criterion/criteria failed");
        std::process::exit(1);
    }
}
