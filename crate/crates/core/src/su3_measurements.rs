//! Qutrit measurement machinery: Heisenberg–Weyl operators, the Hermitian
//! generators of the measurement parametrization, and projector extraction.
//!
//! A measurement setting is described by a unitary with spectrum
//! `{1, ζ, ζ²}` (`ζ = e^{2πi/3}`). Its eigenbasis is what matters: outcome `j`
//! corresponds to the eigenvalue `ζ^j`.

use std::f64::consts::PI;
use std::sync::OnceLock;

use nalgebra::{Matrix3, Vector3};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type QutritOperator = Matrix3<Complex64>;

/// Number of free parameters per measurement setting.
pub const PARAM_LEN: usize = 8;

/// Default absolute tolerance for qutrit identities.
pub const QUTRIT_TOL: f64 = 1e-10;

/// `ζ^k` with `ζ = e^{2πi/3}`.
pub fn zeta_pow(k: i64) -> Complex64 {
    Complex64::from_polar(1.0, 2.0 * PI * (k.rem_euclid(3) as f64) / 3.0)
}

pub fn approx_eq(a: &QutritOperator, b: &QutritOperator, tol: f64) -> bool {
    (a - b).iter().all(|z| z.norm() <= tol)
}

pub fn max_abs(a: &QutritOperator) -> f64 {
    a.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Shift `X|α⟩ = |α+1 mod 3⟩` and clock `Z|α⟩ = ζ^α|α⟩`.
pub fn heisenberg_weyl() -> (QutritOperator, QutritOperator) {
    let mut x = QutritOperator::zeros();
    for alpha in 0..3 {
        x[((alpha + 1) % 3, alpha)] = Complex64::new(1.0, 0.0);
    }
    let z = QutritOperator::from_diagonal(&Vector3::new(zeta_pow(0), zeta_pow(1), zeta_pow(2)));
    (x, z)
}

/// `D = diag(1, ζ, ζ²)`.
pub fn clock_diagonal() -> QutritOperator {
    heisenberg_weyl().1
}

/// `exp(i·h)` for Hermitian `h`.
pub fn exp_i_hermitian(h: &QutritOperator) -> QutritOperator {
    let eig = h.symmetric_eigen();
    let phases = eig.eigenvalues.map(|l| Complex64::from_polar(1.0, l));
    let v = eig.eigenvectors;
    v * QutritOperator::from_diagonal(&phases) * v.adjoint()
}

/// Principal Hermitian logarithm: returns `g` with `exp(i g) = v` and
/// eigenphases in `(−π, π]`.
pub fn principal_log_unitary(v: &QutritOperator) -> Result<QutritOperator> {
    let unitarity = max_abs(&(v * v.adjoint() - QutritOperator::identity()));
    if unitarity > 1e-9 {
        return Err(Error::IllConditionedLog(format!(
            "input is not unitary (defect {unitarity:.2e})"
        )));
    }
    let (q, t) = v.schur().unpack();
    let mut off_diag: f64 = 0.0;
    for i in 0..3 {
        for j in (i + 1)..3 {
            off_diag = off_diag.max(t[(i, j)].norm());
        }
    }
    let eigs: Vec<Complex64> = (0..3).map(|i| t[(i, i)]).collect();
    for i in 0..3 {
        for j in (i + 1)..3 {
            if (eigs[i] - eigs[j]).norm() < 1e-6 {
                return Err(Error::IllConditionedLog(format!(
                    "eigenvalues {} and {} nearly coincide",
                    eigs[i], eigs[j]
                )));
            }
        }
        if (eigs[i] + 1.0).norm() < 1e-9 {
            return Err(Error::IllConditionedLog(format!(
                "eigenvalue {} sits on the branch cut",
                eigs[i]
            )));
        }
    }
    if off_diag > 1e-9 {
        return Err(Error::IllConditionedLog(format!(
            "Schur form is not diagonal (off-diagonal {off_diag:.2e})"
        )));
    }
    let phases = Vector3::from_iterator(eigs.iter().map(|z| Complex64::new(z.arg(), 0.0)));
    let g = q * QutritOperator::from_diagonal(&phases) * q.adjoint();
    Ok((g + g.adjoint()) * Complex64::new(0.5, 0.0))
}

/// The nine Hermitian generators `g_ℓ` with `exp(i g_ℓ)` running over
/// `{X, Z, X², XZ, ZX, XZ², X²Z, Z²X, X²Z²}`; `g_0` is the log of `X`.
#[derive(Debug, Clone)]
pub struct GeneratorSet {
    pub generators: [QutritOperator; 9],
    pub base_index: usize,
}

/// The unitaries `V_ℓ` whose logarithms form the generator set, in order.
pub fn generator_unitaries() -> [QutritOperator; 9] {
    let (x, z) = heisenberg_weyl();
    let x2 = x * x;
    let z2 = z * z;
    [x, z, x2, x * z, z * x, x * z2, x2 * z, z2 * x, x2 * z2]
}

pub fn generator_set() -> Result<GeneratorSet> {
    let unitaries = generator_unitaries();
    let mut generators = [QutritOperator::zeros(); 9];
    for (g, v) in generators.iter_mut().zip(unitaries.iter()) {
        *g = principal_log_unitary(v)?;
    }
    Ok(GeneratorSet {
        generators,
        base_index: 0,
    })
}

impl GeneratorSet {
    /// Process-wide instance of [`generator_set`].
    pub fn standard() -> &'static GeneratorSet {
        static GENS: OnceLock<GeneratorSet> = OnceLock::new();
        GENS.get_or_init(|| generator_set().expect("fixed generator set has a principal log"))
    }

    pub fn base(&self) -> &QutritOperator {
        &self.generators[self.base_index]
    }

    /// The non-base generators in order; `θ_ℓ` multiplies `g_ℓ − g_0`.
    pub fn directions(&self) -> impl Iterator<Item = &QutritOperator> {
        self.generators
            .iter()
            .enumerate()
            .filter(move |(i, _)| *i != self.base_index)
            .map(|(_, g)| g)
    }

    /// `g(θ) = g_0 + Σ θ_ℓ (g_ℓ − g_0)`.
    pub fn hermitian_exponent(&self, theta: &[f64]) -> Result<QutritOperator> {
        if theta.len() != PARAM_LEN {
            return Err(Error::InvalidInput(format!(
                "parameter vector has length {}, expected {PARAM_LEN}",
                theta.len()
            )));
        }
        let g0 = *self.base();
        let mut g = g0;
        for (t, gl) in theta.iter().zip(self.directions()) {
            g += (gl - g0) * Complex64::new(*t, 0.0);
        }
        Ok(g)
    }
}

/// `U(θ) = e^{i g(θ)} D e^{−i g(θ)}`.
pub fn unitary_from_params(theta: &[f64], gens: &GeneratorSet) -> Result<QutritOperator> {
    let w = exp_i_hermitian(&gens.hermitian_exponent(theta)?);
    Ok(w * clock_diagonal() * w.adjoint())
}

/// Rank-one outcome projectors of one measurement setting.
#[derive(Debug, Clone, PartialEq)]
pub struct ProjectorTriple {
    pub projectors: [QutritOperator; 3],
    pub setting_index: usize,
}

impl ProjectorTriple {
    /// Projectors onto the columns of a unitary: outcome `j` ↔ column `j`.
    pub fn from_basis(basis: &QutritOperator, setting_index: usize) -> Self {
        let projectors = [0, 1, 2].map(|j| {
            let col = basis.column(j);
            col * col.adjoint()
        });
        Self {
            projectors,
            setting_index,
        }
    }

    pub fn outcome(&self, j: usize) -> &QutritOperator {
        &self.projectors[j]
    }

    /// `Σ_j j·P_j`, the Hermitian representative used for radius geometry.
    pub fn observable(&self) -> QutritOperator {
        self.projectors[1] + self.projectors[2] * Complex64::new(2.0, 0.0)
    }

    /// Relabels outcomes: new outcome `j` is old outcome `perm[j]`.
    pub fn relabeled(&self, perm: [usize; 3]) -> Self {
        Self {
            projectors: perm.map(|k| self.projectors[k]),
            setting_index: self.setting_index,
        }
    }

    /// Checks Hermiticity, idempotence, rank one, mutual orthogonality and
    /// completeness to `tol`.
    pub fn check(&self, tol: f64) -> Result<()> {
        let id = QutritOperator::identity();
        let fail = |what: &str, err: f64| {
            Err(Error::InvalidInput(format!(
                "projector triple violates {what} (defect {err:.2e})"
            )))
        };
        for (j, p) in self.projectors.iter().enumerate() {
            let herm = max_abs(&(p - p.adjoint()));
            if herm > tol {
                return fail("hermiticity", herm);
            }
            let idem = max_abs(&(p * p - p));
            if idem > tol {
                return fail("idempotence", idem);
            }
            let rank = (p.trace() - Complex64::new(1.0, 0.0)).norm();
            if rank > tol {
                return fail("rank one", rank);
            }
            for (k, q) in self.projectors.iter().enumerate() {
                if j != k {
                    let orth = max_abs(&(p * q));
                    if orth > tol {
                        return fail("orthogonality", orth);
                    }
                }
            }
        }
        let sum: QutritOperator = self.projectors.iter().sum();
        let comp = max_abs(&(sum - id));
        if comp > tol {
            return fail("completeness", comp);
        }
        Ok(())
    }
}

/// `P_j = (U³ + ζ^j U² + ζ^{2j} U)/3`, the projector of `U` onto `ζ^j`.
pub fn projectors_from_unitary(u: &QutritOperator, setting_index: usize) -> Result<ProjectorTriple> {
    let id = QutritOperator::identity();
    let u2 = u * u;
    let u3 = u2 * u;
    let unitarity = max_abs(&(u * u.adjoint() - id));
    let cube = max_abs(&(u3 - id));
    let trace = u.trace().norm();
    if unitarity > 1e-8 || cube > 1e-8 || trace > 1e-8 {
        let eigs = u.complex_eigenvalues_hint();
        return Err(Error::NotCubeRootSpectrum(eigs));
    }
    let third = Complex64::new(1.0 / 3.0, 0.0);
    let projectors = [0i64, 1, 2].map(|j| (u3 + u2 * zeta_pow(j) + u * zeta_pow(2 * j)) * third);
    Ok(ProjectorTriple {
        projectors,
        setting_index,
    })
}

trait SpectrumHint {
    fn complex_eigenvalues_hint(&self) -> String;
}

impl SpectrumHint for QutritOperator {
    fn complex_eigenvalues_hint(&self) -> String {
        let t = self.schur().unpack().1;
        format!("[{:.4}, {:.4}, {:.4}]", t[(0, 0)], t[(1, 1)], t[(2, 2)])
    }
}

/// Parameter vectors of the two measurement settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeasurementParams {
    pub theta0: Vec<f64>,
    pub theta1: Vec<f64>,
}

impl MeasurementParams {
    pub fn new(theta0: Vec<f64>, theta1: Vec<f64>) -> Result<Self> {
        let params = Self { theta0, theta1 };
        params.validate()?;
        Ok(params)
    }

    pub fn zeros() -> Self {
        Self {
            theta0: vec![0.0; PARAM_LEN],
            theta1: vec![0.0; PARAM_LEN],
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.theta0.len() != PARAM_LEN || self.theta1.len() != PARAM_LEN {
            return Err(Error::InvalidInput(format!(
                "settings need {PARAM_LEN} parameters each, got {} and {}",
                self.theta0.len(),
                self.theta1.len()
            )));
        }
        if self.theta0.iter().chain(&self.theta1).any(|t| !t.is_finite()) {
            return Err(Error::InvalidInput("non-finite measurement parameter".into()));
        }
        Ok(())
    }

    /// Both settings as one flat vector `[θ₀, θ₁]`.
    pub fn flatten(&self) -> Vec<f64> {
        self.theta0.iter().chain(&self.theta1).copied().collect()
    }

    pub fn from_flat(flat: &[f64]) -> Result<Self> {
        if flat.len() != 2 * PARAM_LEN {
            return Err(Error::InvalidInput(format!(
                "flat parameter vector has length {}, expected {}",
                flat.len(),
                2 * PARAM_LEN
            )));
        }
        Self::new(flat[..PARAM_LEN].to_vec(), flat[PARAM_LEN..].to_vec())
    }

    pub fn unitaries(&self, gens: &GeneratorSet) -> Result<[QutritOperator; 2]> {
        Ok([
            unitary_from_params(&self.theta0, gens)?,
            unitary_from_params(&self.theta1, gens)?,
        ])
    }

    pub fn projectors(&self, gens: &GeneratorSet) -> Result<[ProjectorTriple; 2]> {
        let [u0, u1] = self.unitaries(gens)?;
        Ok([projectors_from_unitary(&u0, 0)?, projectors_from_unitary(&u1, 1)?])
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let params: Self = serde_json::from_str(s)?;
        params.validate()?;
        Ok(params)
    }
}
