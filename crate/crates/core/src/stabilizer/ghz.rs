//! GHZ-specific machinery: equivalence classes of measurements, a symbolic
//! gap table that scales to 12 qubits, and the counting identities behind the
//! closed-form gaps.

use rayon::prelude::*;
use serde::Serialize;

use super::gamma::{ghz_class_probability, ghz_class_size};
use super::group::StabilizerGroup;
use super::symplectic::{anticommutation_vectors, stabilizer_basis_diagonal, SymplecticVector};
use crate::basis::Axis;
use crate::combinatorics::{axis_strings, binomial};
use crate::error::{invalid, Result};

/// Largest register handled by the symbolic GHZ table.
pub const GHZ_TABLE_MAX_QUBITS: usize = 14;

/// Measurements sharing the letter counts `(m_x, m_y, m_z)`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct GhzClass {
    pub counts: (usize, usize, usize),
    pub size: u128,
    /// Lexicographically first member: X's, then Y's, then Z's on qubits `0..t`.
    pub representative: SymplecticVector,
}

impl GhzClass {
    /// Every member of the class over `n` qubits.
    pub fn members(&self, n: usize) -> Result<Vec<SymplecticVector>> {
        let t = self.counts.0 + self.counts.1 + self.counts.2;
        Ok(SymplecticVector::all_of_weight(n, t)?
            .into_iter()
            .filter(|m| m.counts() == self.counts)
            .collect())
    }
}

pub fn ghz_equivalence_classes(n: usize, t: usize) -> Result<Vec<GhzClass>> {
    if t == 0 || t >= n {
        return invalid(format!("weight {t} must satisfy 1 <= t < n = {n}"));
    }
    let mut out = Vec::new();
    for mx in (0..=t).rev() {
        for my in (0..=t - mx).rev() {
            let mz = t - mx - my;
            let axes: Vec<Axis> = std::iter::repeat_n(Axis::X, mx)
                .chain(std::iter::repeat_n(Axis::Y, my))
                .chain(std::iter::repeat_n(Axis::Z, mz))
                .collect();
            let qubits: Vec<usize> = (0..t).collect();
            out.push(GhzClass {
                counts: (mx, my, mz),
                size: ghz_class_size(n, (mx, my, mz)),
                representative: SymplecticVector::from_axes(n, &qubits, &axes),
            });
        }
    }
    Ok(out)
}

/// One row of the GHZ gap table.
#[derive(Debug, Clone, Serialize)]
pub struct GhzGapRow {
    pub n: usize,
    pub r: usize,
    pub naive: f64,
    pub classes: f64,
    pub naive_expected: f64,
    pub classes_expected: f64,
    /// Whether `w = (1, 0, …, 0)` attains the second-largest eigenvalue.
    pub naive_argmax_first: bool,
    pub classes_argmax_first: bool,
}

/// Representatives of `w` under permutations of qubits `1..n`: bit 0 is
/// `w_1`, followed by `k` ones.
fn w_representatives(n: usize) -> Vec<(u64, usize)> {
    let mut reps = Vec::new();
    for w1 in 0..2u64 {
        for k in 0..n {
            if w1 == 0 && k == 0 {
                continue;
            }
            reps.push((w1 | ((1u64 << k) - 1) << 1, k));
        }
    }
    reps
}

struct Xor {
    pivots: [u64; 64],
}

impl Xor {
    fn insert(&mut self, mut v: u64) {
        while v != 0 {
            let top = 63 - v.leading_zeros() as usize;
            if self.pivots[top] == 0 {
                self.pivots[top] = v;
                return;
            }
            v ^= self.pivots[top];
        }
    }

    fn contains(&self, mut v: u64) -> bool {
        while v != 0 {
            let top = 63 - v.leading_zeros() as usize;
            if self.pivots[top] == 0 {
                return false;
            }
            v ^= self.pivots[top];
        }
        true
    }
}

/// Per `(t, m_x, m_y, rep)` counts of measurements whose γ is 1.
struct Counts {
    n: usize,
    reps: usize,
    data: Vec<u64>,
}

impl Counts {
    fn new(n: usize, reps: usize) -> Self {
        Self { n, reps, data: vec![0; (n + 1) * (n + 1) * (n + 1) * reps] }
    }

    fn slot(&self, t: usize, mx: usize, my: usize, rep: usize) -> usize {
        ((t * (self.n + 1) + mx) * (self.n + 1) + my) * self.reps + rep
    }

    fn merge(mut self, other: Self) -> Self {
        for (a, b) in self.data.iter_mut().zip(other.data) {
            *a += b;
        }
        self
    }
}

struct Walker<'a> {
    n: usize,
    c: &'a [[u64; 3]],
    reps: &'a [(u64, usize)],
}

impl Walker<'_> {
    fn walk(&self, q: usize, basis: &Xor, t: usize, mx: usize, my: usize, out: &mut Counts) {
        if q == self.n {
            if t == 0 || t == self.n {
                return;
            }
            for (i, (w, _)) in self.reps.iter().enumerate() {
                if basis.contains(*w) {
                    let s = out.slot(t, mx, my, i);
                    out.data[s] += 1;
                }
            }
            return;
        }
        self.walk(q + 1, basis, t, mx, my, out);
        for (a, &c) in self.c[q].iter().enumerate() {
            let mut next = Xor { pivots: basis.pivots };
            next.insert(c);
            let (dx, dy) = match a {
                0 => (1, 0),
                1 => (0, 1),
                _ => (0, 0),
            };
            self.walk(q + 1, &next, t + 1, mx + dx, my + dy, out);
        }
    }
}

/// Gap table for `|GHZ_n⟩` at every level `r = 1..n-1` under both uniform
/// schemes, computed symbolically: each measurement contributes the span of
/// its anticommutation vectors, and only one `w` per permutation orbit is
/// evaluated.
pub fn ghz_gap_table(n: usize) -> Result<Vec<GhzGapRow>> {
    if !(2..=GHZ_TABLE_MAX_QUBITS).contains(&n) {
        return invalid(format!("GHZ table supports 2..={GHZ_TABLE_MAX_QUBITS} qubits"));
    }
    let s = StabilizerGroup::ghz(n)?;
    let c: Vec<[u64; 3]> = (0..n)
        .map(|q| {
            let mut row = [0u64; 3];
            for (i, a) in Axis::ALL.iter().enumerate() {
                let mu = SymplecticVector::from_axes(n, &[q], &[*a]);
                row[i] = anticommutation_vectors(&s, &mu)[0];
            }
            row
        })
        .collect();
    let reps = w_representatives(n);
    let walker = Walker { n, c: &c, reps: &reps };

    // fan out over the first few qubits' choices; integer counts merge exactly
    let depth = n.min(3);
    let prefixes: Vec<Vec<usize>> = (0..4usize.pow(depth as u32))
        .map(|code| (0..depth).map(|d| code / 4usize.pow(d as u32) % 4).collect())
        .collect();
    let counts = prefixes
        .par_iter()
        .map(|prefix| {
            let mut out = Counts::new(n, reps.len());
            let mut basis = Xor { pivots: [0; 64] };
            let (mut t, mut mx, mut my) = (0, 0, 0);
            for (q, &choice) in prefix.iter().enumerate() {
                if choice > 0 {
                    basis.insert(c[q][choice - 1]);
                    t += 1;
                    mx += (choice == 1) as usize;
                    my += (choice == 2) as usize;
                }
            }
            walker.walk(depth, &basis, t, mx, my, &mut out);
            out
        })
        .reduce(|| Counts::new(n, reps.len()), Counts::merge);

    let mut rows = Vec::new();
    for r in 1..n {
        let t = n - r;
        let total = binomial(n as u64, t as u64) as f64 * 3f64.powi(t as i32);
        let pc = ghz_class_probability(t);
        let mut naive = vec![0.0; reps.len()];
        let mut classes = vec![0.0; reps.len()];
        for (i, _) in reps.iter().enumerate() {
            for mx in 0..=t {
                for my in 0..=t - mx {
                    let hits = counts.data[counts.slot(t, mx, my, i)] as f64;
                    naive[i] += hits / total;
                    classes[i] += pc * hits / ghz_class_size(n, (mx, my, t - mx - my)) as f64;
                }
            }
        }
        // reps[n-1] is w = (1, 0, …, 0)
        let first = reps.iter().position(|(w, _)| *w == 1).expect("w = e_1 is a representative");
        let max = |v: &[f64]| v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let (mn, mc) = (max(&naive), max(&classes));
        rows.push(GhzGapRow {
            n,
            r,
            naive: 1.0 - mn,
            classes: 1.0 - mc,
            naive_expected: (2.0f64 / 3.0).powi(t as i32),
            classes_expected: 2.0 / (t as f64 + 2.0),
            naive_argmax_first: naive[first] >= mn - 1e-12,
            classes_argmax_first: classes[first] >= mc - 1e-12,
        });
    }
    Ok(rows)
}

/// Counting identities used to derive the GHZ gaps, each evaluated both by
/// enumeration and by its closed form.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct GhzCountingCheck {
    pub n: usize,
    pub t: usize,
    /// Weight-`t` measurements containing at least one Z.
    pub z_containing_enumerated: u128,
    /// `C(n,t)(3^t - 2^t)`.
    pub z_containing_formula: u128,
    /// Measurements whose operator keeps full weight on `|S_(1,0,…,0)⟩`.
    pub first_flip_contributing: u128,
    /// Axis strings of length `t` with a positive even number of Z's.
    pub even_z_enumerated: u128,
    /// `(3^t + 1)/2 - 2^t`.
    pub even_z_formula: u128,
    /// Classes containing at least one Z, enumerated.
    pub z_classes_enumerated: u128,
    /// `C(t+1, t-1)`.
    pub z_classes_formula: u128,
    /// `2n` times the bound on contributing measurements for other `w`, as a
    /// sum of its three parts.
    pub bound_lhs_times_2n: i128,
    /// `C(n,t)[(3n+t)3^{t-1} + (n-t)]`.
    pub bound_rhs_times_2n: i128,
}

impl GhzCountingCheck {
    pub fn holds(&self) -> bool {
        self.z_containing_enumerated == self.z_containing_formula
            && self.first_flip_contributing == self.z_containing_formula
            && self.even_z_enumerated == self.even_z_formula
            && self.z_classes_enumerated == self.z_classes_formula
            && self.bound_lhs_times_2n == self.bound_rhs_times_2n
    }
}

pub fn ghz_counting_check(n: usize, t: usize) -> Result<GhzCountingCheck> {
    let s = StabilizerGroup::ghz(n)?;
    let mus = SymplecticVector::all_of_weight(n, t)?;
    let z_containing_enumerated = mus.iter().filter(|m| m.counts().2 > 0).count() as u128;
    let mut first_flip_contributing = 0u128;
    for m in &mus {
        if stabilizer_basis_diagonal(&s, m)?[1] {
            first_flip_contributing += 1;
        }
    }
    let pow = |b: u128, e: usize| b.pow(e as u32);
    let c = |a: usize, b: usize| binomial(a as u64, b as u64);
    let z_containing_formula = c(n, t) * (pow(3, t) - pow(2, t));
    let even_z_enumerated = axis_strings(t)
        .iter()
        .filter(|l| {
            let z = l.iter().filter(|a| **a == Axis::Z).count();
            z > 0 && z % 2 == 0
        })
        .count() as u128;
    let even_z_formula = (pow(3, t) + 1) / 2 - pow(2, t);
    let z_classes_enumerated = ghz_equivalence_classes(n, t)?
        .iter()
        .filter(|cl| cl.counts.2 > 0)
        .count() as u128;
    let z_classes_formula = c(t + 1, t - 1);

    let (ni, ti) = (n as i128, t as i128);
    let p3 = |e: usize| 3i128.pow(e as u32);
    let p2 = |e: usize| 2i128.pow(e as u32);
    let ci = |a: usize, b: usize| c(a, b) as i128;
    let lhs = 2 * ni
        * (2 * ci(n - 1, t - 1) * (p3(t - 1) - p2(t - 1)) + ci(n - 1, t) * ((p3(t) + 1) / 2 - p2(t)) + ci(n, t) * p2(t));
    let rhs = ci(n, t) * ((3 * ni + ti) * p3(t - 1) + (ni - ti));
    Ok(GhzCountingCheck {
        n,
        t,
        z_containing_enumerated,
        z_containing_formula,
        first_flip_contributing,
        even_z_enumerated,
        even_z_formula,
        z_classes_enumerated,
        z_classes_formula,
        bound_lhs_times_2n: lhs,
        bound_rhs_times_2n: rhs,
    })
}
