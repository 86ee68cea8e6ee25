//! Local deterministic strategies of the symmetric two-setting, three-outcome
//! scenario, summarized by the counts `c[a][a']` of parties whose outcomes
//! for settings 0 and 1 are fixed to `(a, a')`.
//!
//! The Bell value of a strategy is an integer and can be computed two ways:
//! by substituting the symmetrized probabilities into the Bell expression, or
//! from the closed-form quadratic polynomial in the counts. Both are exact.

use rand::seq::index;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bell_operator::{ONE_BODY_TERMS, TWO_BODY_TERMS};
use crate::error::{Error, Result};
use crate::experiments::stream;

/// Exhaustive enumeration refuses more states than this.
pub const MAX_EXHAUSTIVE_STATES: u128 = 50_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct LdsCounts {
    pub c: [[u64; 3]; 3],
}

impl LdsCounts {
    pub fn new(c: [[u64; 3]; 3]) -> Self {
        Self { c }
    }

    /// All `n` parties on the outcome pair `(a, a2)`.
    pub fn concentrated(a: usize, a2: usize, n: u64) -> Self {
        let mut c = [[0; 3]; 3];
        c[a][a2] = n;
        Self { c }
    }

    pub fn from_flat(v: [u64; 9]) -> Self {
        Self {
            c: [[v[0], v[1], v[2]], [v[3], v[4], v[5]], [v[6], v[7], v[8]]],
        }
    }

    pub fn flat(&self) -> [u64; 9] {
        let c = &self.c;
        [c[0][0], c[0][1], c[0][2], c[1][0], c[1][1], c[1][2], c[2][0], c[2][1], c[2][2]]
    }

    pub fn n(&self) -> u64 {
        self.c.iter().flatten().sum()
    }

    fn get(&self, a: usize, b: usize) -> i64 {
        self.c[a][b] as i64
    }
}

/// Symmetrized one-body values `𝒫_{a|x}` and two-body values `𝒫_{ab|xy}` of
/// a deterministic strategy, for all three outcomes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LdsTable {
    /// `one[a][x]`
    pub one: [[i64; 2]; 3],
    /// `two[a][b][x][y]`
    pub two: [[[[i64; 2]; 2]; 3]; 3],
}

impl LdsTable {
    pub fn one(&self, a: usize, x: usize) -> i64 {
        self.one[a][x]
    }

    pub fn two(&self, a: usize, b: usize, x: usize, y: usize) -> i64 {
        self.two[a][b][x][y]
    }
}

/// `Σ_i p_i(a|x) p_i(b|y)`, the same-party part removed from
/// `𝒫_{a|x} 𝒫_{b|y}`.
fn same_party(counts: &LdsCounts, one: &[[i64; 2]; 3], a: usize, b: usize, x: usize, y: usize) -> i64 {
    match (x, y) {
        _ if x == y && a == b => one[a][x],
        _ if x == y => 0,
        (0, 1) => counts.get(a, b),
        _ => counts.get(b, a),
    }
}

pub fn lds_probabilities(counts: &LdsCounts) -> LdsTable {
    let mut one = [[0i64; 2]; 3];
    for a in 0..3 {
        one[a][0] = (0..3).map(|k| counts.get(a, k)).sum();
        one[a][1] = (0..3).map(|k| counts.get(k, a)).sum();
    }
    let mut two = [[[[0i64; 2]; 2]; 3]; 3];
    for a in 0..3 {
        for b in 0..3 {
            for x in 0..2 {
                for y in 0..2 {
                    two[a][b][x][y] = one[a][x] * one[b][y] - same_party(counts, &one, a, b, x, y);
                }
            }
        }
    }
    LdsTable { one, two }
}

/// The Bell expression evaluated on tabulated probabilities.
pub fn bell_value_from_table(t: &LdsTable) -> i64 {
    let one: i64 = ONE_BODY_TERMS.iter().map(|&(a, x)| t.one(a, x)).sum();
    let two: i64 = TWO_BODY_TERMS
        .iter()
        .map(|&(coeff, (a, x), (b, y))| coeff as i64 * t.two(a, b, x, y))
        .sum();
    one + two
}

/// The closed-form Bell polynomial in the counts.
pub fn bell_value_from_counts(counts: &LdsCounts) -> i64 {
    let c = |a, b| counts.get(a, b);
    let sq = |v: i64| v * v;
    sq(c(0, 0) + c(0, 2)) + sq(c(0, 0) + c(2, 0)) + sq(c(1, 1) + c(1, 2)) + sq(c(1, 1) + c(2, 1))
        + sq(c(0, 0) - c(1, 2))
        + sq(c(0, 0) - c(2, 1))
        + sq(c(1, 1) - c(0, 2))
        + sq(c(1, 1) - c(2, 0))
        + 2 * (c(1, 0) + c(0, 1))
        - 2 * sq(c(0, 0) + c(1, 1))
        - sq(c(1, 2) + c(2, 0))
        - sq(c(0, 2) + c(2, 1))
}

/// Number of count grids for `n` parties, `C(n+8, 8)`.
pub fn composition_count(n: u64) -> u128 {
    (1..=8u128).fold(1, |acc, k| acc * (n as u128 + k) / k)
}

/// Calls `f` on every composition of `n` over the cells
/// `buf[start..]`.
fn for_each_composition(n: u64, buf: &mut [u64; 9], start: usize, f: &mut impl FnMut(&[u64; 9])) {
    if start == 8 {
        buf[8] = n;
        f(buf);
        return;
    }
    for k in 0..=n {
        buf[start] = k;
        for_each_composition(n - k, buf, start + 1, f);
    }
}

/// Every grid of `n` parties.
pub fn all_counts(n: u64) -> Vec<LdsCounts> {
    let mut out = Vec::new();
    for_each_composition(n, &mut [0; 9], 0, &mut |v| out.push(LdsCounts::from_flat(*v)));
    out
}

/// Uniformly random grid of `n` parties (stars and bars).
pub fn random_counts<R: Rng + ?Sized>(n: u64, rng: &mut R) -> LdsCounts {
    let mut bars: Vec<usize> = index::sample(rng, n as usize + 8, 8).into_vec();
    bars.sort_unstable();
    let mut v = [0u64; 9];
    let mut prev = 0usize;
    for (i, &b) in bars.iter().enumerate() {
        v[i] = (b - prev) as u64;
        prev = b + 1;
    }
    v[8] = (n as usize + 8 - prev) as u64;
    LdsCounts::from_flat(v)
}

fn check_equivalence(counts: &LdsCounts) -> Result<()> {
    let via_table = bell_value_from_table(&lds_probabilities(counts));
    let via_poly = bell_value_from_counts(counts);
    if via_table != via_poly {
        return Err(Error::ClassicalMismatch(format!(
            "counts {:?}: table gives {via_table}, polynomial gives {via_poly}",
            counts.c
        )));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct EquivalenceReport {
    pub n: u64,
    pub checked: u64,
    pub exhaustive: bool,
}

/// Compares both evaluation paths on `trials` random grids.
pub fn verify_polynomial_equivalence(n: u64, trials: u64, seed: u64) -> Result<EquivalenceReport> {
    if n == 0 {
        return Err(Error::InvalidInput("n must be at least 1".into()));
    }
    let mut rng = stream(seed, 0, 0);
    for _ in 0..trials {
        check_equivalence(&random_counts(n, &mut rng))?;
    }
    Ok(EquivalenceReport {
        n,
        checked: trials,
        exhaustive: false,
    })
}

/// Compares both evaluation paths on every grid of `n` parties.
pub fn verify_polynomial_equivalence_exhaustive(n: u64) -> Result<EquivalenceReport> {
    if n == 0 {
        return Err(Error::InvalidInput("n must be at least 1".into()));
    }
    let total = composition_count(n);
    if total > MAX_EXHAUSTIVE_STATES {
        return Err(Error::InvalidInput(format!("{total} grids exceed the exhaustive limit")));
    }
    let mut result = Ok(());
    for_each_composition(n, &mut [0; 9], 0, &mut |v| {
        if result.is_ok() {
            result = check_equivalence(&LdsCounts::from_flat(*v));
        }
    });
    result.map(|_| EquivalenceReport {
        n,
        checked: total as u64,
        exhaustive: true,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ClassicalMode {
    Exhaustive,
    /// Uniform random grids, each followed by greedy single-party moves.
    Stochastic { samples: u64, seed: u64 },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassicalReport {
    pub n: u64,
    pub mode: ClassicalMode,
    pub minimum: i64,
    pub argmin: LdsCounts,
    pub states_visited: u64,
}

/// Moves one party between cells while that lowers the value; returns the
/// local minimum and the number of grids evaluated.
pub fn greedy_descent(start: LdsCounts) -> (LdsCounts, i64, u64) {
    let mut v = start.flat();
    let mut value = bell_value_from_counts(&start);
    let mut visited = 1;
    loop {
        let mut improved = false;
        'moves: for from in 0..9 {
            if v[from] == 0 {
                continue;
            }
            for to in 0..9 {
                if to == from {
                    continue;
                }
                v[from] -= 1;
                v[to] += 1;
                let trial = bell_value_from_counts(&LdsCounts::from_flat(v));
                visited += 1;
                if trial < value {
                    value = trial;
                    improved = true;
                    break 'moves;
                }
                v[from] += 1;
                v[to] -= 1;
            }
        }
        if !improved {
            return (LdsCounts::from_flat(v), value, visited);
        }
    }
}

fn better(a: (i64, LdsCounts), b: (i64, LdsCounts)) -> (i64, LdsCounts) {
    if (b.0, b.1.flat()) < (a.0, a.1.flat()) {
        b
    } else {
        a
    }
}

/// Minimum Bell value over deterministic strategies of `n` parties.
pub fn minimize_classical(n: u64, mode: ClassicalMode) -> Result<ClassicalReport> {
    if n == 0 {
        return Err(Error::InvalidInput("n must be at least 1".into()));
    }
    let (minimum, argmin, states_visited) = match mode {
        ClassicalMode::Exhaustive => {
            let total = composition_count(n);
            if total > MAX_EXHAUSTIVE_STATES {
                return Err(Error::InvalidInput(format!(
                    "{total} grids exceed the exhaustive limit of {MAX_EXHAUSTIVE_STATES}"
                )));
            }
            let (value, counts) = (0..=n)
                .into_par_iter()
                .map(|first| {
                    let mut best = (i64::MAX, LdsCounts::new([[0; 3]; 3]));
                    let mut buf = [0u64; 9];
                    buf[0] = first;
                    for_each_composition(n - first, &mut buf, 1, &mut |v| {
                        let c = LdsCounts::from_flat(*v);
                        best = better(best, (bell_value_from_counts(&c), c));
                    });
                    best
                })
                .reduce(|| (i64::MAX, LdsCounts::new([[0; 3]; 3])), better);
            (value, counts, total as u64)
        }
        ClassicalMode::Stochastic { samples, seed } => {
            if samples == 0 {
                return Err(Error::InvalidInput("samples must be positive".into()));
            }
            let (best, visited) = (0..samples)
                .into_par_iter()
                .map(|i| {
                    let (c, v, visited) = greedy_descent(random_counts(n, &mut stream(seed, 0, i)));
                    ((v, c), visited)
                })
                .reduce(
                    || ((i64::MAX, LdsCounts::new([[0; 3]; 3])), 0),
                    |a, b| (better(a.0, b.0), a.1 + b.1),
                );
            (best.0, best.1, visited)
        }
    };
    Ok(ClassicalReport {
        n,
        mode,
        minimum,
        argmin,
        states_visited,
    })
}
