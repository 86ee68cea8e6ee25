//! SU(3) irreducible representations in the Gelfand–Tsetlin basis and the
//! lifting of single-qutrit operators to collective operators `Σ_i A^{(i)}`
//! restricted to one irrep.
//!
//! An irrep `(p, q)` is realized as the `gl(3)` irrep with highest weight
//! `λ = (p+q, q, 0)`. Basis vectors are GT patterns
//!
//! ```text
//!   λ1     λ2     λ3
//!      m12    m22
//!          m11
//! ```
//!
//! ordered descending-lexicographically in `(m12, m22, m11)`, so the highest
//! weight vector comes first and the `(1,0)` irrep reproduces the qutrit
//! computational basis `|0⟩, |1⟩, |2⟩` with `S_{αβ} = |α⟩⟨β|`.

use std::collections::{BTreeMap, HashMap};
use std::sync::{Arc, OnceLock, RwLock};

use nalgebra::{SMatrix, SVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{check_budget, MatrixDump, SparseMatrix};
use crate::su3_measurements::QutritOperator;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct IrrepLabel {
    pub p: u32,
    pub q: u32,
}

/// Largest `p` or `q` for which dimensions are computed.
pub const MAX_LABEL: u32 = 10_000;

impl IrrepLabel {
    pub const fn new(p: u32, q: u32) -> Self {
        Self { p, q }
    }

    /// `(1+p)(1+q)(2+p+q)/2`.
    pub fn dimension(&self) -> usize {
        irrep_dimension(*self).expect("label within range")
    }

    /// `p/(p+q)`, undefined for the trivial irrep.
    pub fn symmetry_ratio(&self) -> Option<f64> {
        let total = self.p + self.q;
        (total > 0).then(|| self.p as f64 / total as f64)
    }

    /// Highest weight `λ = (p+q+k, q+k, k)` of the irrep inside the `n`-fold
    /// qutrit product, if it occurs there.
    pub fn partition(&self, n: usize) -> Option<[usize; 3]> {
        let base = self.p as usize + 2 * self.q as usize;
        if n < base || (n - base) % 3 != 0 {
            return None;
        }
        let k = (n - base) / 3;
        Some([
            self.p as usize + self.q as usize + k,
            self.q as usize + k,
            k,
        ])
    }

    pub fn occurs_in(&self, n: usize) -> bool {
        self.partition(n).is_some()
    }
}

impl std::fmt::Display for IrrepLabel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "({},{})", self.p, self.q)
    }
}

pub fn irrep_dimension(label: IrrepLabel) -> Result<usize> {
    if label.p > MAX_LABEL || label.q > MAX_LABEL {
        return Err(Error::InvalidInput(format!(
            "irrep label {label} exceeds {MAX_LABEL}"
        )));
    }
    let (p, q) = (label.p as u64, label.q as u64);
    Ok(((1 + p) * (1 + q) * (2 + p + q) / 2) as usize)
}

/// Irreps appearing in the `n`-fold tensor power of the qutrit, sorted by
/// `(p, q)`.
pub fn enumerate_irreps(n: usize) -> Vec<IrrepLabel> {
    let mut labels = Vec::new();
    for l3 in 0..=n / 3 {
        for l2 in l3..=(n - l3) / 2 {
            let l1 = n - l2 - l3;
            if l1 >= l2 {
                labels.push(IrrepLabel::new((l1 - l2) as u32, (l2 - l3) as u32));
            }
        }
    }
    labels.sort();
    labels.dedup();
    labels
}

/// Multiplicity of `label` in the `n`-qutrit space, i.e. the number of
/// standard Young tableaux of its shape (hook length formula).
pub fn schur_weyl_multiplicity(label: IrrepLabel, n: usize) -> Option<u128> {
    let shape = label.partition(n)?;
    let rows: Vec<usize> = shape.iter().copied().filter(|&r| r > 0).collect();
    let mut hooks: Vec<u128> = Vec::with_capacity(n);
    for (i, &len) in rows.iter().enumerate() {
        for j in 0..len {
            let arm = len - j - 1;
            let leg = rows[i + 1..].iter().filter(|&&r| r > j).count();
            hooks.push((arm + leg + 1) as u128);
        }
    }
    // n! / Π hooks, interleaving divisions to stay within u128
    let mut num: Vec<u128> = (1..=n as u128).collect();
    for h in hooks {
        let mut rem = h;
        for x in num.iter_mut() {
            let g = gcd(*x, rem);
            *x /= g;
            rem /= g;
            if rem == 1 {
                break;
            }
        }
        debug_assert_eq!(rem, 1);
    }
    Some(num.into_iter().product())
}

fn gcd(mut a: u128, mut b: u128) -> u128 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// A Gelfand–Tsetlin pattern below a fixed top row: `(m12, m22, m11)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct GtPattern {
    pub m12: i64,
    pub m22: i64,
    pub m11: i64,
}

/// GT patterns with top row `top`, descending-lexicographic.
pub fn gt_patterns(top: [i64; 3]) -> Vec<GtPattern> {
    let [l1, l2, l3] = top;
    let mut out = Vec::new();
    for m12 in (l2..=l1).rev() {
        for m22 in (l3..=l2).rev() {
            for m11 in (m22..=m12).rev() {
                out.push(GtPattern { m12, m22, m11 });
            }
        }
    }
    out
}

/// The nine basis elements, in the order `{𝕀, T₊, T₋, T³, V₊, V₋, U₊, U₋, U³}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BasisElement {
    Identity,
    TPlus,
    TMinus,
    T3,
    VPlus,
    VMinus,
    UPlus,
    UMinus,
    U3,
}

impl BasisElement {
    pub const ALL: [BasisElement; 9] = [
        BasisElement::Identity,
        BasisElement::TPlus,
        BasisElement::TMinus,
        BasisElement::T3,
        BasisElement::VPlus,
        BasisElement::VMinus,
        BasisElement::UPlus,
        BasisElement::UMinus,
        BasisElement::U3,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        match self {
            BasisElement::Identity => "I",
            BasisElement::TPlus => "T+",
            BasisElement::TMinus => "T-",
            BasisElement::T3 => "T3",
            BasisElement::VPlus => "V+",
            BasisElement::VMinus => "V-",
            BasisElement::UPlus => "U+",
            BasisElement::UMinus => "U-",
            BasisElement::U3 => "U3",
        }
    }
}

/// The nine basis operators realized in one irrep.
#[derive(Debug, Clone)]
pub struct IrrepBasis {
    pub label: IrrepLabel,
    pub patterns: Vec<GtPattern>,
    pub ops: [SparseMatrix; 9],
}

impl IrrepBasis {
    pub fn dim(&self) -> usize {
        self.patterns.len()
    }

    /// The nine basis operators as dense dumps keyed by [`BasisElement::name`],
    /// rows and columns ordered like `patterns`.
    pub fn dump(&self) -> BTreeMap<&'static str, MatrixDump> {
        BasisElement::ALL
            .iter()
            .map(|&e| (e.name(), MatrixDump::from_sparse(self.op(e))))
            .collect()
    }

    pub fn op(&self, e: BasisElement) -> &SparseMatrix {
        &self.ops[e.index()]
    }

    /// Collective ladder operator `S_{αβ}` for `α ≠ β`.
    pub fn ladder(&self, alpha: usize, beta: usize) -> &SparseMatrix {
        use BasisElement::*;
        let e = match (alpha, beta) {
            (0, 1) => TPlus,
            (1, 0) => TMinus,
            (0, 2) => VPlus,
            (2, 0) => VMinus,
            (1, 2) => UPlus,
            (2, 1) => UMinus,
            _ => panic!("ladder({alpha}, {beta}) is not off-diagonal"),
        };
        self.op(e)
    }

    /// Traceless parts `h_α = S_{αα} − N/3` of the diagonal generators.
    pub fn traceless_diagonal(&self) -> [SparseMatrix; 3] {
        let t3 = self.op(BasisElement::T3);
        let u3 = self.op(BasisElement::U3);
        let d = self.dim();
        let r = |x: f64| Complex64::new(x, 0.0);
        [
            SparseMatrix::linear_combination(d, &[(r(4.0 / 3.0), t3), (r(2.0 / 3.0), u3)]),
            SparseMatrix::linear_combination(d, &[(r(-2.0 / 3.0), t3), (r(2.0 / 3.0), u3)]),
            SparseMatrix::linear_combination(d, &[(r(-2.0 / 3.0), t3), (r(-4.0 / 3.0), u3)]),
        ]
    }

    /// Hypercharge `Y = (S₀₀ + S₁₁ − 2S₂₂)/3`.
    pub fn hypercharge(&self) -> SparseMatrix {
        self.traceless_diagonal()[2].scale(Complex64::new(-1.0, 0.0))
    }

    /// Quadratic Casimir `½ Σ_{α≠β} S_{αβ}S_{βα} + ½ Σ_α h_α²`.
    pub fn casimir(&self) -> SparseMatrix {
        let d = self.dim();
        let half = Complex64::new(0.5, 0.0);
        let mut products = Vec::new();
        for a in 0..3 {
            for b in 0..3 {
                if a != b {
                    products.push(self.ladder(a, b).matmul(self.ladder(b, a)));
                }
            }
        }
        for h in self.traceless_diagonal() {
            products.push(h.matmul(&h));
        }
        let terms: Vec<(Complex64, &SparseMatrix)> = products.iter().map(|m| (half, m)).collect();
        SparseMatrix::linear_combination(d, &terms)
    }

    /// `(p² + q² + pq + 3p + 3q)/3`.
    pub fn casimir_value(&self) -> f64 {
        let (p, q) = (self.label.p as f64, self.label.q as f64);
        (p * p + q * q + p * q + 3.0 * p + 3.0 * q) / 3.0
    }
}

fn gt_sqrt(num: f64, den: f64, what: &str) -> f64 {
    let ratio = num / den;
    assert!(
        den != 0.0 && ratio >= -1e-12,
        "negative GT matrix element for {what}: {num}/{den}"
    );
    ratio.max(0.0).sqrt()
}

/// Builds the nine basis operators of `(p, q)` from closed-form GT matrix
/// elements of `S₀₁` and `S₁₂`; `S₀₂ = [S₀₁, S₁₂]`, lowering operators are
/// transposes.
pub fn build_irrep(label: IrrepLabel) -> Result<IrrepBasis> {
    let dim = irrep_dimension(label)?;
    check_budget(dim)?;
    let (l1, l2, l3) = ((label.p + label.q) as i64, label.q as i64, 0i64);
    let patterns = gt_patterns([l1, l2, l3]);
    debug_assert_eq!(patterns.len(), dim);
    let index: HashMap<GtPattern, usize> =
        patterns.iter().enumerate().map(|(i, m)| (*m, i)).collect();

    let real = |x: f64| Complex64::new(x, 0.0);
    let mut t_plus = Vec::new();
    let mut u_plus = Vec::new();
    let mut t3 = Vec::with_capacity(dim);
    let mut u3 = Vec::with_capacity(dim);

    for (col, m) in patterns.iter().enumerate() {
        let (m12, m22, m11) = (m.m12 as f64, m.m22 as f64, m.m11 as f64);
        let s00 = m11;
        let s11 = m12 + m22 - m11;
        let s22 = (l1 + l2 + l3) as f64 - m12 - m22;
        t3.push((s00 - s11) / 2.0);
        u3.push((s11 - s22) / 2.0);

        // S01: m11 -> m11 + 1
        let target = GtPattern { m11: m.m11 + 1, ..*m };
        if let Some(&row) = index.get(&target) {
            let v = gt_sqrt((m12 - m11) * (m11 - m22 + 1.0), 1.0, "S01");
            t_plus.push((row, col, real(v)));
        }

        // S12 with shifted entries l_{j3} = λ_j − j + 1, l_{j2} = m_{j2} − j + 1
        let (a1, a2, a3) = (l1 as f64, l2 as f64 - 1.0, l3 as f64 - 2.0);
        let (b1, b2) = (m12, m22 - 1.0);
        // m12 -> m12 + 1
        let target = GtPattern { m12: m.m12 + 1, ..*m };
        if let Some(&row) = index.get(&target) {
            let num = -(a1 - b1) * (a2 - b1) * (a3 - b1) * (m11 - b1 - 1.0);
            let den = (b2 - b1) * (b2 - b1 - 1.0);
            u_plus.push((row, col, real(gt_sqrt(num, den, "S12 upper"))));
        }
        // m22 -> m22 + 1
        let target = GtPattern { m22: m.m22 + 1, ..*m };
        if let Some(&row) = index.get(&target) {
            let num = -(a1 - b2) * (a2 - b2) * (a3 - b2) * (m11 - b2 - 1.0);
            let den = (b1 - b2) * (b1 - b2 - 1.0);
            u_plus.push((row, col, real(gt_sqrt(num, den, "S12 lower"))));
        }
    }

    let t_plus = SparseMatrix::from_triplets(dim, t_plus);
    let u_plus = SparseMatrix::from_triplets(dim, u_plus);
    let v_plus = t_plus
        .matmul(&u_plus)
        .add_scaled(real(-1.0), &u_plus.matmul(&t_plus));
    let ops = [
        SparseMatrix::identity(dim),
        t_plus.clone(),
        t_plus.adjoint(),
        SparseMatrix::diagonal(&t3),
        v_plus.clone(),
        v_plus.adjoint(),
        u_plus.clone(),
        u_plus.adjoint(),
        SparseMatrix::diagonal(&u3),
    ];
    Ok(IrrepBasis {
        label,
        patterns,
        ops,
    })
}

/// Memoized [`build_irrep`]; safe to call from many threads.
pub fn irrep_generators(label: IrrepLabel) -> Result<Arc<IrrepBasis>> {
    static CACHE: OnceLock<RwLock<HashMap<IrrepLabel, Arc<IrrepBasis>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(Default::default);
    if let Some(hit) = cache.read().expect("irrep cache poisoned").get(&label) {
        return Ok(Arc::clone(hit));
    }
    let basis = Arc::new(build_irrep(label)?);
    cache
        .write()
        .expect("irrep cache poisoned")
        .insert(label, Arc::clone(&basis));
    Ok(basis)
}

pub type GramMatrix = SMatrix<Complex64, 9, 9>;

/// Hilbert–Schmidt inner product `Tr(A†B)`.
pub fn hs_inner(a: &QutritOperator, b: &QutritOperator) -> Complex64 {
    (a.adjoint() * b).trace()
}

/// The `(1,0)` basis as qutrit matrices.
pub fn fundamental_matrices(fundamental: &IrrepBasis) -> Result<[QutritOperator; 9]> {
    if fundamental.label != IrrepLabel::new(1, 0) {
        return Err(Error::InvalidInput(format!(
            "Gram matrix needs the (1,0) basis, got {}",
            fundamental.label
        )));
    }
    Ok(fundamental.ops.clone().map(|m| {
        let mut q = QutritOperator::zeros();
        for (r, c, v) in m.triplets() {
            q[(r, c)] = v;
        }
        q
    }))
}

/// `G_{ij} = ⟨v_i, v_j⟩` over the `(1,0)` basis.
pub fn gram_matrix(fundamental: &IrrepBasis) -> Result<GramMatrix> {
    let v = fundamental_matrices(fundamental)?;
    let g = GramMatrix::from_fn(|i, j| hs_inner(&v[i], &v[j]));
    if g.determinant().norm() < 1e-12 {
        return Err(Error::SingularGram);
    }
    Ok(g)
}

struct LiftTables {
    basis: [QutritOperator; 9],
    gram_lu: nalgebra::LU<Complex64, nalgebra::Const<9>, nalgebra::Const<9>>,
}

fn lift_tables() -> &'static LiftTables {
    static TABLES: OnceLock<LiftTables> = OnceLock::new();
    TABLES.get_or_init(|| {
        let fundamental = irrep_generators(IrrepLabel::new(1, 0)).expect("(1,0) irrep");
        let basis = fundamental_matrices(&fundamental).expect("(1,0) basis");
        let gram = gram_matrix(&fundamental).expect("(1,0) Gram matrix is invertible");
        LiftTables {
            basis,
            gram_lu: gram.lu(),
        }
    })
}

/// Coordinates `x` of `A = Σ_i x_i v_i` in the `(1,0)` basis, from `G x = b`
/// with `b_i = ⟨v_i, A⟩`.
pub fn basis_coordinates(a: &QutritOperator) -> SVector<Complex64, 9> {
    let tables = lift_tables();
    let b = SVector::<Complex64, 9>::from_fn(|i, _| hs_inner(&tables.basis[i], a));
    tables
        .gram_lu
        .solve(&b)
        .expect("Gram matrix is invertible")
}

/// A collective operator restricted to one irrep.
#[derive(Debug, Clone)]
pub struct CollectiveOperator {
    pub matrix: SparseMatrix,
    pub label: IrrepLabel,
    pub n: usize,
}

fn check_occurs(label: IrrepLabel, n: usize) -> Result<()> {
    if !label.occurs_in(n) {
        return Err(Error::InvalidInput(format!(
            "irrep {label} does not occur for n = {n}"
        )));
    }
    Ok(())
}

/// `A^{(p,q)} = n x₁ 𝕀 + Σ_{i≥2} x_i v_i^{(p,q)}`, the irrep block of
/// `Σ_i A^{(i)}`.
pub fn lift_one_body(a: &QutritOperator, label: IrrepLabel, n: usize) -> Result<CollectiveOperator> {
    check_occurs(label, n)?;
    let basis = irrep_generators(label)?;
    let x = basis_coordinates(a);
    let n_c = Complex64::new(n as f64, 0.0);
    let terms: Vec<(Complex64, &SparseMatrix)> = BasisElement::ALL
        .iter()
        .map(|&e| {
            let coeff = if e == BasisElement::Identity { n_c * x[0] } else { x[e.index()] };
            (coeff, basis.op(e))
        })
        .collect();
    Ok(CollectiveOperator {
        matrix: SparseMatrix::linear_combination(basis.dim(), &terms),
        label,
        n,
    })
}

/// Irrep block of `Σ_{i≠j} A^{(i)} B^{(j)} = lift(A)·lift(B) − lift(AB)`.
pub fn lift_two_body(
    a: &QutritOperator,
    b: &QutritOperator,
    label: IrrepLabel,
    n: usize,
) -> Result<CollectiveOperator> {
    let la = lift_one_body(a, label, n)?;
    let lb = lift_one_body(b, label, n)?;
    let lab = lift_one_body(&(a * b), label, n)?;
    Ok(CollectiveOperator {
        matrix: la
            .matrix
            .matmul(&lb.matrix)
            .add_scaled(Complex64::new(-1.0, 0.0), &lab.matrix),
        label,
        n,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fundamental_dump_is_the_qutrit_basis() {
        let dump = irrep_generators(IrrepLabel::new(1, 0)).unwrap().dump();
        assert_eq!(dump.len(), 9);
        let t_plus = &dump["T+"];
        assert_eq!(t_plus.dim, 3);
        assert_eq!(t_plus.entries[1], [1.0, 0.0]);
        assert_eq!(t_plus.entries.iter().filter(|e| e[0] != 0.0 || e[1] != 0.0).count(), 1);
    }

    #[test]
    fn dimensions() {
        assert_eq!(irrep_dimension(IrrepLabel::new(21, 2)).unwrap(), 825);
        assert_eq!(irrep_dimension(IrrepLabel::new(9, 8)).unwrap(), 855);
        assert_eq!(irrep_dimension(IrrepLabel::new(0, 0)).unwrap(), 1);
        assert_eq!(
            irrep_dimension(IrrepLabel::new(MAX_LABEL, MAX_LABEL)).unwrap(),
            10_001 * 10_001 * 20_002 / 2
        );
        assert!(irrep_dimension(IrrepLabel::new(MAX_LABEL + 1, 0)).is_err());
    }

    #[test]
    fn small_enumerations() {
        let l = IrrepLabel::new;
        assert_eq!(enumerate_irreps(2), vec![l(0, 1), l(2, 0)]);
        assert_eq!(enumerate_irreps(3), vec![l(0, 0), l(1, 1), l(3, 0)]);
        assert_eq!(enumerate_irreps(1), vec![l(1, 0)]);
    }

    #[test]
    fn symmetry_ratio() {
        assert_eq!(IrrepLabel::new(0, 0).symmetry_ratio(), None);
        assert_eq!(IrrepLabel::new(25, 0).symmetry_ratio(), Some(1.0));
        assert_eq!(IrrepLabel::new(1, 3).symmetry_ratio(), Some(0.25));
    }

    #[test]
    fn fundamental_is_computational_basis() {
        let b = irrep_generators(IrrepLabel::new(1, 0)).unwrap();
        let t3 = b.op(BasisElement::T3).to_dense();
        assert_eq!(t3[(0, 0)].re, 0.5);
        assert_eq!(t3[(1, 1)].re, -0.5);
        assert_eq!(t3[(2, 2)].re, 0.0);
        for (a, bb) in [(0, 1), (1, 0), (0, 2), (2, 0), (1, 2), (2, 1)] {
            let m = b.ladder(a, bb);
            assert_eq!(m.nnz(), 1);
            assert!((m.get(a, bb) - Complex64::new(1.0, 0.0)).norm() < 1e-15);
        }
    }

    /// Explicit 8×8 adjoint representation (`ad_X Y = [X, Y]` on the Gell-Mann
    /// basis of 3×3 traceless matrices) as the Casimir oracle for (1,1).
    #[test]
    fn adjoint_casimir_is_three() {
        let basis = irrep_generators(IrrepLabel::new(1, 1)).unwrap();
        let c = basis.casimir();
        for i in 0..8 {
            assert!((c.get(i, i).re - 3.0).abs() < 1e-12);
        }
        assert!((basis.casimir_value() - 3.0).abs() < 1e-15);

        // adjoint action of the qutrit E_{αβ} on an orthonormal basis of sl(3)
        let e = |a: usize, b: usize| {
            let mut m = QutritOperator::zeros();
            m[(a, b)] = Complex64::new(1.0, 0.0);
            m
        };
        let s2 = Complex64::new(0.5f64.sqrt(), 0.0);
        let s6 = Complex64::new((1.0f64 / 6.0).sqrt(), 0.0);
        let mut gm: Vec<QutritOperator> = Vec::new();
        for a in 0..3 {
            for b in 0..3 {
                if a != b {
                    gm.push(e(a, b));
                }
            }
        }
        gm.push((e(0, 0) - e(1, 1)) * s2);
        gm.push((e(0, 0) + e(1, 1) - e(2, 2) * Complex64::new(2.0, 0.0)) * s6);
        let ad = |x: &QutritOperator| {
            nalgebra::SMatrix::<Complex64, 8, 8>::from_fn(|i, j| {
                let img = x * gm[j] - gm[j] * x;
                hs_inner(&gm[i], &img)
            })
        };
        let half = Complex64::new(0.5, 0.0);
        let mut casimir = nalgebra::SMatrix::<Complex64, 8, 8>::zeros();
        for a in 0..3 {
            for b in 0..3 {
                if a != b {
                    casimir += ad(&e(a, b)) * ad(&e(b, a)) * half;
                }
            }
        }
        for a in 0..3 {
            let h = e(a, a) - QutritOperator::identity() * Complex64::new(1.0 / 3.0, 0.0);
            casimir += ad(&h) * ad(&h) * half;
        }
        for i in 0..8 {
            for j in 0..8 {
                let want = if i == j { 3.0 } else { 0.0 };
                assert!((casimir[(i, j)] - Complex64::new(want, 0.0)).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn highest_weight_vector() {
        for (p, q) in [(1, 0), (0, 1), (2, 3), (5, 1), (4, 4)] {
            let basis = irrep_generators(IrrepLabel::new(p, q)).unwrap();
            let t3 = basis.op(BasisElement::T3);
            let y = basis.hypercharge();
            assert!((t3.get(0, 0).re - p as f64 / 2.0).abs() < 1e-12);
            assert!((y.get(0, 0).re - (p + 2 * q) as f64 / 3.0).abs() < 1e-12);
            for (a, b) in [(0, 1), (1, 2), (0, 2)] {
                let raising = basis.ladder(a, b);
                assert!((0..basis.dim()).all(|r| raising.get(r, 0).norm() < 1e-12));
            }
        }
    }

    #[test]
    fn gram_matrix_properties() {
        let fundamental = irrep_generators(IrrepLabel::new(1, 0)).unwrap();
        let g = gram_matrix(&fundamental).unwrap();
        assert!((g[(0, 0)] - Complex64::new(3.0, 0.0)).norm() < 1e-15);
        assert!((g - g.adjoint()).iter().all(|z| z.norm() < 1e-15));
        assert!(g.determinant().norm() > 1e-3);
        assert!(gram_matrix(&irrep_generators(IrrepLabel::new(0, 1)).unwrap()).is_err());
    }

    #[test]
    fn lifts_of_identity() {
        let id = QutritOperator::identity();
        let label = IrrepLabel::new(3, 1);
        let n = 5;
        let one = lift_one_body(&id, label, n).unwrap();
        let expected = SparseMatrix::identity(label.dimension()).scale(Complex64::new(5.0, 0.0));
        assert!(one.matrix.max_abs_diff(&expected) < 1e-12);
        let two = lift_two_body(&id, &id, label, n).unwrap();
        let expected = SparseMatrix::identity(label.dimension()).scale(Complex64::new(20.0, 0.0));
        assert!(two.matrix.max_abs_diff(&expected) < 1e-12);
    }

    #[test]
    fn lift_requires_compatible_label() {
        let id = QutritOperator::identity();
        assert!(lift_one_body(&id, IrrepLabel::new(2, 0), 3).is_err());
        assert!(lift_one_body(&id, IrrepLabel::new(2, 0), 5).is_ok());
    }

    #[test]
    fn lifted_t3_matches_generator() {
        let a = QutritOperator::from_diagonal(&nalgebra::Vector3::new(
            Complex64::new(0.5, 0.0),
            Complex64::new(-0.5, 0.0),
            Complex64::new(0.0, 0.0),
        ));
        for (label, n) in [(IrrepLabel::new(4, 2), 8), (IrrepLabel::new(2, 5), 15)] {
            let lifted = lift_one_body(&a, label, n).unwrap();
            let t3 = irrep_generators(label).unwrap();
            assert!(lifted.matrix.max_abs_diff(t3.op(BasisElement::T3)) < 1e-12);
        }
    }

    #[test]
    fn multiplicities() {
        assert_eq!(schur_weyl_multiplicity(IrrepLabel::new(3, 0), 3), Some(1));
        assert_eq!(schur_weyl_multiplicity(IrrepLabel::new(1, 1), 3), Some(2));
        assert_eq!(schur_weyl_multiplicity(IrrepLabel::new(0, 0), 3), Some(1));
        assert_eq!(schur_weyl_multiplicity(IrrepLabel::new(2, 0), 3), None);
    }
}
