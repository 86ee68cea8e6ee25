//! The irrep-restricted Bell operator
//!
//! ```text
//! B = 𝒫_{0|0} + 𝒫_{0|1} + 𝒫_{1|0} + 𝒫_{1|1}
//!   + 𝒫_{00|00} + 𝒫_{00|11} + 𝒫_{11|00} + 𝒫_{11|11} − 2(𝒫_{01|01} + 𝒫_{01|10})
//! ```
//!
//! with `𝒫_{a|x} = Σ_i P_{a|x}^{(i)}` and `𝒫_{ab|xy} = Σ_{i≠j} P_{a|x}^{(i)} P_{b|y}^{(j)}`.
//! Its classical bound is zero, so a negative eigenvalue certifies nonlocality.
//!
//! Every lifted one-body operator is a combination `Σ_k α_k v_k` of the nine
//! irrep basis operators, so the whole Bell operator is the polynomial
//! `Σ_k β_k v_k + Σ_{kl} Γ_{kl} v_k v_l`. [`BellAssembler`] precomputes the
//! sparse products `v_k v_l` of one irrep once; building an operator for new
//! settings is then a weighted sum.

use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{check_budget, hermitian_eigen, hermitian_eigenvalues, DenseMatrix, SparseMatrix};
use crate::su3_irreps::{basis_coordinates, irrep_generators, lift_one_body, lift_two_body, IrrepBasis, IrrepLabel};
use crate::su3_measurements::{GeneratorSet, MeasurementParams, ProjectorTriple, QutritOperator};

/// A Bell value below this certifies a violation.
pub const VIOLATION_THRESHOLD: f64 = -1e-7;

pub fn detects_nonlocality(value: f64) -> bool {
    value < VIOLATION_THRESHOLD
}

/// One two-body term `coeff · 𝒫_{ab|xy}` as `(coeff, (a, x), (b, y))`.
pub type TwoBodyTerm = (f64, (usize, usize), (usize, usize));

/// One-body terms `𝒫_{a|x}` as `(a, x)`, all with coefficient +1.
pub const ONE_BODY_TERMS: [(usize, usize); 4] = [(0, 0), (0, 1), (1, 0), (1, 1)];

pub const TWO_BODY_TERMS: [TwoBodyTerm; 6] = [
    (1.0, (0, 0), (0, 0)),
    (1.0, (0, 1), (0, 1)),
    (1.0, (1, 0), (1, 0)),
    (1.0, (1, 1), (1, 1)),
    (-2.0, (0, 0), (1, 1)),
    (-2.0, (0, 1), (1, 0)),
];

/// Where a set of measurement projectors came from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SettingsSource {
    Params(MeasurementParams),
    /// Raw projectors, e.g. Haar-random bases.
    Projectors,
}

/// Irrep block of the Bell operator.
#[derive(Debug, Clone)]
pub struct BellOperator {
    pub matrix: SparseMatrix,
    pub label: IrrepLabel,
    pub n: usize,
    pub settings: SettingsSource,
}

/// JSON sidecar written next to a matrix dump.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BellMetadata {
    pub n: usize,
    pub p: u32,
    pub q: u32,
    pub dim: usize,
    pub theta0: Option<Vec<f64>>,
    pub theta1: Option<Vec<f64>>,
}

impl BellOperator {
    pub fn dim(&self) -> usize {
        self.matrix.dim()
    }

    pub fn to_dense(&self) -> DenseMatrix {
        self.matrix.to_dense()
    }

    pub fn hermiticity_defect(&self) -> f64 {
        self.matrix.hermiticity_defect()
    }

    /// All eigenvalues, ascending.
    pub fn spectrum(&self) -> Result<Vec<f64>> {
        check_budget(self.dim())?;
        hermitian_eigenvalues(&self.to_dense())
    }

    pub fn eigen(&self) -> Result<(Vec<f64>, DenseMatrix)> {
        check_budget(self.dim())?;
        hermitian_eigen(&self.to_dense())
    }

    pub fn metadata(&self) -> BellMetadata {
        let (theta0, theta1) = match &self.settings {
            SettingsSource::Params(p) => (Some(p.theta0.clone()), Some(p.theta1.clone())),
            SettingsSource::Projectors => (None, None),
        };
        BellMetadata {
            n: self.n,
            p: self.label.p,
            q: self.label.q,
            dim: self.dim(),
            theta0,
            theta1,
        }
    }
}

/// Minimum eigenvalue of the Bell operator; negative values certify
/// nonlocality.
pub fn quantum_violation(b: &BellOperator) -> Result<f64> {
    let spectrum = b.spectrum()?;
    spectrum
        .first()
        .copied()
        .filter(|v| v.is_finite())
        .ok_or_else(|| Error::Eigensolver("empty or non-finite spectrum".into()))
}

/// Coefficients of `B = Σ_k β_k v_k + Σ_{kl} Γ_{kl} v_k v_l` in the irrep basis
/// `v = {𝕀, T₊, T₋, T³, V₊, V₋, U₊, U₋, U³}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BellCoefficients {
    pub linear: [Complex64; 9],
    pub quadratic: [[Complex64; 9]; 9],
}

impl BellCoefficients {
    pub fn zeros() -> Self {
        let z = Complex64::new(0.0, 0.0);
        Self {
            linear: [z; 9],
            quadratic: [[z; 9]; 9],
        }
    }

    pub fn axpy(&mut self, alpha: f64, other: &BellCoefficients) {
        for k in 0..9 {
            self.linear[k] += other.linear[k] * alpha;
            for l in 0..9 {
                self.quadratic[k][l] += other.quadratic[k][l] * alpha;
            }
        }
    }

    /// `⟨ψ|B|ψ⟩` from precomputed one- and two-point tables.
    pub fn contract(&self, tables: &ExpectationTables) -> Complex64 {
        let mut acc = Complex64::new(0.0, 0.0);
        for k in 0..9 {
            acc += self.linear[k] * tables.one[k];
            for l in 0..9 {
                acc += self.quadratic[k][l] * tables.two[k][l];
            }
        }
        acc
    }
}

/// Lift coefficients `α` of `Σ_i A^{(i)} = Σ_k α_k v_k` (identity weight `n·x₀`).
fn lift_coefficients(a: &QutritOperator, n: usize) -> [Complex64; 9] {
    let x = basis_coordinates(a);
    let mut alpha = [Complex64::new(0.0, 0.0); 9];
    for k in 0..9 {
        alpha[k] = x[k];
    }
    alpha[0] *= n as f64;
    alpha
}

/// Bell polynomial coefficients for two projector triples.
pub fn bell_coefficients(projectors: &[ProjectorTriple; 2], n: usize) -> BellCoefficients {
    let proj = |a: usize, x: usize| projectors[x].outcome(a);
    let mut c = BellCoefficients::zeros();
    for (a, x) in ONE_BODY_TERMS {
        let alpha = lift_coefficients(proj(a, x), n);
        for k in 0..9 {
            c.linear[k] += alpha[k];
        }
    }
    for (coeff, (a, x), (b, y)) in TWO_BODY_TERMS {
        let la = lift_coefficients(proj(a, x), n);
        let lb = lift_coefficients(proj(b, y), n);
        let lab = lift_coefficients(&(proj(a, x) * proj(b, y)), n);
        for k in 0..9 {
            c.linear[k] -= lab[k] * coeff;
            for l in 0..9 {
                c.quadratic[k][l] += la[k] * lb[l] * coeff;
            }
        }
    }
    c
}

/// `⟨ψ|v_k|ψ⟩` and `⟨ψ|v_k v_l|ψ⟩` over the nine basis operators.
#[derive(Debug, Clone)]
pub struct ExpectationTables {
    pub one: [Complex64; 9],
    pub two: [[Complex64; 9]; 9],
}

/// Precomputed products of one irrep's basis operators.
#[derive(Debug, Clone)]
pub struct BellAssembler {
    pub label: IrrepLabel,
    pub n: usize,
    basis: Arc<IrrepBasis>,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    /// `(slot, value)` contributions of `v_k` (index `k`) and of `v_k v_l`
    /// (index `9 + 9k + l`) to the union sparsity pattern.
    contributions: Vec<Vec<(usize, Complex64)>>,
}

/// Index of the adjoint basis element: `T₊† = T₋` and so on.
const ADJOINT: [usize; 9] = [0, 2, 1, 3, 5, 4, 7, 6, 8];

impl BellAssembler {
    pub fn new(label: IrrepLabel, n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidInput(format!("Bell operator needs n ≥ 2, got {n}")));
        }
        if !label.occurs_in(n) {
            return Err(Error::InvalidInput(format!("irrep {label} does not occur for n = {n}")));
        }
        check_budget(label.dimension())?;
        let basis = irrep_generators(label)?;
        let dim = basis.dim();

        let mut terms: Vec<SparseMatrix> = basis.ops.to_vec();
        for k in 0..9 {
            for l in 0..9 {
                terms.push(basis.ops[k].matmul(&basis.ops[l]));
            }
        }

        let mut pattern: Vec<Vec<usize>> = vec![Vec::new(); dim];
        for t in &terms {
            for (r, c, _) in t.triplets() {
                pattern[r].push(c);
            }
        }
        let mut row_ptr = vec![0];
        let mut cols = Vec::new();
        for row in pattern.iter_mut() {
            row.sort_unstable();
            row.dedup();
            cols.extend_from_slice(row);
            row_ptr.push(cols.len());
        }
        let slot = |r: usize, c: usize| -> usize {
            let span = &cols[row_ptr[r]..row_ptr[r + 1]];
            row_ptr[r] + span.binary_search(&c).expect("entry in union pattern")
        };
        let contributions = terms
            .iter()
            .map(|t| t.triplets().map(|(r, c, v)| (slot(r, c), v)).collect())
            .collect();
        Ok(Self {
            label,
            n,
            basis,
            row_ptr,
            cols,
            contributions,
        })
    }

    pub fn dim(&self) -> usize {
        self.basis.dim()
    }

    pub fn basis(&self) -> &IrrepBasis {
        &self.basis
    }

    /// `Σ_k β_k v_k + Σ_{kl} Γ_{kl} v_k v_l` as a sparse matrix.
    pub fn assemble(&self, coeffs: &BellCoefficients) -> SparseMatrix {
        let mut vals = vec![Complex64::new(0.0, 0.0); self.cols.len()];
        let mut add = |term: usize, w: Complex64| {
            if w.norm_sqr() == 0.0 {
                return;
            }
            for &(slot, v) in &self.contributions[term] {
                vals[slot] += w * v;
            }
        };
        for k in 0..9 {
            add(k, coeffs.linear[k]);
        }
        for k in 0..9 {
            for l in 0..9 {
                add(9 + 9 * k + l, coeffs.quadratic[k][l]);
            }
        }
        let dim = self.dim();
        SparseMatrix::from_triplets(
            dim,
            (0..dim).flat_map(|r| {
                let span = self.row_ptr[r]..self.row_ptr[r + 1];
                let vals = &vals;
                span.map(move |s| (r, self.cols[s], vals[s]))
            }),
        )
    }

    pub fn from_projectors(&self, projectors: &[ProjectorTriple; 2], settings: SettingsSource) -> BellOperator {
        BellOperator {
            matrix: self.assemble(&bell_coefficients(projectors, self.n)),
            label: self.label,
            n: self.n,
            settings,
        }
    }

    pub fn from_params(&self, params: &MeasurementParams) -> Result<BellOperator> {
        params.validate()?;
        let projectors = params.projectors(GeneratorSet::standard())?;
        Ok(self.from_projectors(&projectors, SettingsSource::Params(params.clone())))
    }

    /// One- and two-point expectation values of the basis operators in `ψ`.
    pub fn expectation_tables(&self, psi: &[Complex64]) -> ExpectationTables {
        let dim = self.dim();
        let images: Vec<Vec<Complex64>> = self
            .basis
            .ops
            .iter()
            .map(|op| {
                let mut y = vec![Complex64::new(0.0, 0.0); dim];
                op.matvec(psi, &mut y);
                y
            })
            .collect();
        let dot = |a: &[Complex64], b: &[Complex64]| -> Complex64 {
            a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
        };
        let mut one = [Complex64::new(0.0, 0.0); 9];
        let mut two = [[Complex64::new(0.0, 0.0); 9]; 9];
        for k in 0..9 {
            one[k] = dot(psi, &images[k]);
            for l in 0..9 {
                // ⟨ψ|v_k v_l|ψ⟩ = ⟨v_k† ψ, v_l ψ⟩
                two[k][l] = dot(&images[ADJOINT[k]], &images[l]);
            }
        }
        ExpectationTables { one, two }
    }
}

/// Builds the Bell operator of `settings` restricted to irrep `label`.
pub fn build_bell_operator(settings: &MeasurementParams, label: IrrepLabel, n: usize) -> Result<BellOperator> {
    BellAssembler::new(label, n)?.from_params(settings)
}

/// Builds the Bell operator from explicit projector triples.
pub fn build_bell_operator_from_projectors(
    projectors: &[ProjectorTriple; 2],
    label: IrrepLabel,
    n: usize,
) -> Result<BellOperator> {
    Ok(BellAssembler::new(label, n)?.from_projectors(projectors, SettingsSource::Projectors))
}

/// Same operator as [`build_bell_operator_from_projectors`], assembled term by
/// term from [`lift_one_body`] and [`lift_two_body`]. Slower; kept as an
/// independent construction path.
pub fn build_bell_operator_from_lifts(
    projectors: &[ProjectorTriple; 2],
    label: IrrepLabel,
    n: usize,
) -> Result<BellOperator> {
    if n < 2 {
        return Err(Error::InvalidInput(format!("Bell operator needs n ≥ 2, got {n}")));
    }
    let dim = irrep_generators(label)?.dim();
    let proj = |a: usize, x: usize| projectors[x].outcome(a);
    let mut matrix = SparseMatrix::zeros(dim);
    for (a, x) in ONE_BODY_TERMS {
        matrix = matrix.add_scaled(Complex64::new(1.0, 0.0), &lift_one_body(proj(a, x), label, n)?.matrix);
    }
    for (coeff, (a, x), (b, y)) in TWO_BODY_TERMS {
        let term = lift_two_body(proj(a, x), proj(b, y), label, n)?;
        matrix = matrix.add_scaled(Complex64::new(coeff, 0.0), &term.matrix);
    }
    Ok(BellOperator {
        matrix,
        label,
        n,
        settings: SettingsSource::Projectors,
    })
}
