use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::basis::Axis;
use crate::combinatorics::{axis_counts, axis_strings, combinations, factorial};
use crate::error::{invalid, Error, Result};
use crate::measurement::PauliLayout;
use crate::stabilizer::{ghz_class_probability, SymplecticVector};

const SUM_TOL: f64 = 1e-10;

/// Probability distribution over layouts `(K, l)` sharing one level `r`.
///
/// Independent choices `p_K · q_l` are the common case; a joint table is
/// kept so that optimized and class-based schemes fit the same type.
#[derive(Debug, Clone, PartialEq)]
pub struct SamplingPlan {
    n: usize,
    r: usize,
    entries: Vec<(PauliLayout, f64)>,
    cumulative: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct PlanEntryJson {
    /// Layout string such as `"XY_"`; `_` marks an unmeasured qubit.
    layout: String,
    p: f64,
}

#[derive(Serialize, Deserialize)]
struct PlanJson {
    n: usize,
    r: usize,
    entries: Vec<PlanEntryJson>,
}

/// Parses a layout string such as `"X_Z"`.
pub fn parse_layout(s: &str) -> Result<PauliLayout> {
    let n = s.chars().count();
    let mut measured = Vec::new();
    for (q, c) in s.chars().enumerate() {
        if c == '_' || c == 'I' || c == 'i' {
            continue;
        }
        measured.push((q, c.to_string().parse::<Axis>()?));
    }
    PauliLayout::new(n, measured)
}

impl SamplingPlan {
    /// Joint plan; zero-weight entries are dropped and the weights must sum
    /// to 1 within `1e-10`.
    pub fn new(entries: Vec<(PauliLayout, f64)>) -> Result<Self> {
        let Some((first, _)) = entries.first() else {
            return invalid("a sampling plan needs at least one layout");
        };
        let (n, r) = (first.num_qubits(), first.r());
        if entries.iter().any(|(l, _)| l.num_qubits() != n || l.r() != r) {
            return invalid("all layouts in a plan must share n and r");
        }
        if entries.iter().any(|(_, p)| !(*p >= 0.0) || !p.is_finite()) {
            return invalid("plan weights must be nonnegative");
        }
        let total: f64 = entries.iter().map(|(_, p)| p).sum();
        if (total - 1.0).abs() > SUM_TOL {
            return invalid(format!("plan weights sum to {total}, expected 1"));
        }
        let entries: Vec<(PauliLayout, f64)> = entries.into_iter().filter(|(_, p)| *p > 0.0).collect();
        let cumulative = entries
            .iter()
            .scan(0.0, |acc, (_, p)| {
                *acc += p;
                Some(*acc)
            })
            .collect();
        Ok(Self { n, r, entries, cumulative })
    }

    /// `p_K · q_l` for independent distributions over unmeasured sets and
    /// axis strings.
    pub fn product(n: usize, p: &[(Vec<usize>, f64)], q: &[(Vec<Axis>, f64)]) -> Result<Self> {
        for (name, total) in [
            ("p", p.iter().map(|(_, w)| w).sum::<f64>()),
            ("q", q.iter().map(|(_, w)| w).sum::<f64>()),
        ] {
            if (total - 1.0).abs() > SUM_TOL {
                return invalid(format!("{name} sums to {total}, expected 1"));
            }
        }
        let mut entries = Vec::with_capacity(p.len() * q.len());
        for (k, pk) in p {
            for (l, ql) in q {
                entries.push((PauliLayout::from_unmeasured(n, k, l)?, pk * ql));
            }
        }
        Self::new(entries)
    }

    /// Uniform over every unmeasured set of size `r` and every axis string.
    pub fn naive_uniform(n: usize, r: usize) -> Result<Self> {
        check_level(n, r)?;
        let ks = combinations(n, r);
        let ls = axis_strings(n - r);
        let p: Vec<(Vec<usize>, f64)> = ks.iter().map(|k| (k.clone(), 1.0 / ks.len() as f64)).collect();
        let q: Vec<(Vec<Axis>, f64)> = ls.iter().map(|l| (l.clone(), 1.0 / ls.len() as f64)).collect();
        Self::product(n, &p, &q)
    }

    /// Uniform over the GHZ classes `(m_x, m_y, m_z)` of the measured axes,
    /// uniform within each class. This is the product of a uniform `p_K` and
    /// `q_l = p_class · m_x! m_y! m_z! / t!`.
    pub fn ghz_class_uniform(n: usize, r: usize) -> Result<Self> {
        check_level(n, r)?;
        let t = n - r;
        let ks = combinations(n, r);
        let pc = ghz_class_probability(t);
        let p: Vec<(Vec<usize>, f64)> = ks.iter().map(|k| (k.clone(), 1.0 / ks.len() as f64)).collect();
        let q: Vec<(Vec<Axis>, f64)> = axis_strings(t)
            .into_iter()
            .map(|l| {
                let (mx, my, mz) = axis_counts(&l);
                let mult = (factorial(mx as u64) * factorial(my as u64) * factorial(mz as u64)) as f64;
                let w = pc * mult / factorial(t as u64) as f64;
                (l, w)
            })
            .collect();
        Self::product(n, &p, &q)
    }

    /// Random product plan with weights drawn uniformly from each simplex.
    pub fn random_product<R: Rng + ?Sized>(n: usize, r: usize, rng: &mut R) -> Result<Self> {
        check_level(n, r)?;
        let simplex = |len: usize, rng: &mut R| -> Vec<f64> {
            let e: Vec<f64> = (0..len).map(|_| -(1.0 - rng.random::<f64>()).ln()).collect();
            let s: f64 = e.iter().sum();
            e.into_iter().map(|v| v / s).collect()
        };
        let ks = combinations(n, r);
        let ls = axis_strings(n - r);
        let pw = simplex(ks.len(), rng);
        let qw = simplex(ls.len(), rng);
        let p: Vec<_> = ks.into_iter().zip(pw).collect();
        let q: Vec<_> = ls.into_iter().zip(qw).collect();
        Self::product(n, &p, &q)
    }

    /// Plan from a distribution over measurement vectors `μ`.
    pub fn from_measurements(dist: &[(SymplecticVector, f64)]) -> Result<Self> {
        let entries = dist
            .iter()
            .map(|(m, p)| Ok((m.to_layout()?, *p)))
            .collect::<Result<Vec<_>>>()?;
        Self::new(entries)
    }

    pub fn single(layout: PauliLayout) -> Result<Self> {
        Self::new(vec![(layout, 1.0)])
    }

    pub fn num_qubits(&self) -> usize {
        self.n
    }

    pub fn level(&self) -> usize {
        self.r
    }

    pub fn entries(&self) -> &[(PauliLayout, f64)] {
        &self.entries
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> &PauliLayout {
        let total = *self.cumulative.last().expect("plan is non-empty");
        let u = rng.random::<f64>() * total;
        let i = self.cumulative.partition_point(|c| *c <= u).min(self.entries.len() - 1);
        &self.entries[i].0
    }

    pub fn to_json(&self) -> String {
        let json = PlanJson {
            n: self.n,
            r: self.r,
            entries: self
                .entries
                .iter()
                .map(|(l, p)| PlanEntryJson { layout: l.to_string(), p: *p })
                .collect(),
        };
        serde_json::to_string_pretty(&json).expect("plan serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let json: PlanJson = serde_json::from_str(text)?;
        let entries = json
            .entries
            .iter()
            .map(|e| Ok((parse_layout(&e.layout)?, e.p)))
            .collect::<Result<Vec<_>>>()?;
        let plan = Self::new(entries)?;
        if plan.n != json.n || plan.r != json.r {
            return Err(Error::Parse("plan header disagrees with its layouts".into()));
        }
        Ok(plan)
    }
}

fn check_level(n: usize, r: usize) -> Result<()> {
    if r == 0 || r >= n {
        return invalid(format!("level r={r} must satisfy 1 <= r < n={n}"));
    }
    Ok(())
}
