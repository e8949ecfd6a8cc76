//! Maximizing the spectral gap over sampling plans.

use std::fmt;
use std::str::FromStr;

use rand::Rng;

use super::plan::SamplingPlan;
use super::{build_test_operators, weighted_sum};
use crate::basis::Axis;
use crate::combinatorics::{axis_strings, combinations};
use crate::error::{invalid, Error, Result};
use crate::linalg::{gap_from_eigenvalues, hermitian_eigenvalues, Operator};
use crate::measurement::PauliLayout;
use crate::rng::stream_rng;
use crate::stabilizer::lp_optimize;
use crate::target::TargetModel;

const GRID_MAX_EVALUATIONS: usize = 50_000;
const FD_STEP: f64 = 1e-4;
const ASCENT_ITERATIONS: usize = 200;
const ASCENT_RESTARTS: u64 = 10;

/// Family of plans searched by the optimizer.
#[derive(Debug, Clone, PartialEq)]
pub enum PlanSpace {
    /// Independent `p_K` over `subsets` (unmeasured sets) and `q_l` over
    /// `strings` (axis strings of the measured qubits).
    Product { n: usize, subsets: Vec<Vec<usize>>, strings: Vec<Vec<Axis>> },
    /// One joint distribution over the listed layouts.
    Layouts(Vec<PauliLayout>),
}

impl PlanSpace {
    /// All unmeasured sets of size `r` and all axis strings.
    pub fn full(n: usize, r: usize) -> Result<Self> {
        if r == 0 || r >= n {
            return invalid(format!("level r={r} must satisfy 1 <= r < n={n}"));
        }
        Ok(Self::Product { n, subsets: combinations(n, r), strings: axis_strings(n - r) })
    }

    fn layouts(&self) -> Result<Vec<PauliLayout>> {
        match self {
            Self::Product { n, subsets, strings } => {
                let mut out = Vec::with_capacity(subsets.len() * strings.len());
                for k in subsets {
                    for l in strings {
                        out.push(PauliLayout::from_unmeasured(*n, k, l)?);
                    }
                }
                Ok(out)
            }
            Self::Layouts(ls) => Ok(ls.clone()),
        }
    }

    fn blocks(&self) -> Vec<usize> {
        match self {
            Self::Product { subsets, strings, .. } => vec![subsets.len(), strings.len()],
            Self::Layouts(ls) => vec![ls.len()],
        }
    }

    /// Layout weights from per-block weights, each block normalized first.
    fn layout_weights(&self, x: &[f64]) -> Vec<f64> {
        let sizes = self.blocks();
        let mut blocks = Vec::with_capacity(sizes.len());
        let mut off = 0;
        for s in sizes {
            let b = &x[off..off + s];
            let total: f64 = b.iter().sum();
            blocks.push(b.iter().map(|v| v / total).collect::<Vec<f64>>());
            off += s;
        }
        match blocks.as_slice() {
            [p, q] => p.iter().flat_map(|pk| q.iter().map(move |ql| pk * ql)).collect(),
            [w] => w.clone(),
            _ => unreachable!("spaces have one or two blocks"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OptimizeMethod {
    /// Simplex lattice with `resolution` steps per block; lowered
    /// automatically to stay within the evaluation budget.
    Grid { resolution: usize },
    /// Projected gradient ascent with finite-difference gradients.
    ProjectedAscent,
    /// Minimax LP over measurement distributions (stabilizer targets only).
    StabilizerLp,
}

impl fmt::Display for OptimizeMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Grid { .. } => f.write_str("grid"),
            Self::ProjectedAscent => f.write_str("projected-ascent"),
            Self::StabilizerLp => f.write_str("stabilizer-lp"),
        }
    }
}

impl FromStr for OptimizeMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "grid" => Ok(Self::Grid { resolution: 8 }),
            "projected-ascent" | "ascent" => Ok(Self::ProjectedAscent),
            "stabilizer-lp" | "lp" => Ok(Self::StabilizerLp),
            other => Err(Error::Parse(format!("unknown optimization method {other:?}"))),
        }
    }
}

#[derive(Debug, Clone)]
pub struct OptimizedPlan {
    pub plan: SamplingPlan,
    pub nu: f64,
    pub method: OptimizeMethod,
    pub evaluations: usize,
}

struct Objective<'a> {
    space: &'a PlanSpace,
    ops: Vec<Operator>,
    evaluations: usize,
}

impl Objective<'_> {
    fn gap(&mut self, x: &[f64]) -> f64 {
        self.evaluations += 1;
        let w = self.space.layout_weights(x);
        let omega = weighted_sum(&self.ops, &w);
        hermitian_eigenvalues(&omega)
            .and_then(|ev| gap_from_eigenvalues(&ev))
            .unwrap_or(0.0)
    }
}

/// Euclidean projection onto the probability simplex (sort-based).
pub(crate) fn project_simplex(v: &[f64]) -> Vec<f64> {
    let mut u = v.to_vec();
    u.sort_by(|a, b| b.total_cmp(a));
    let mut css = 0.0;
    let mut theta = 0.0;
    for (i, ui) in u.iter().enumerate() {
        css += ui;
        let t = (css - 1.0) / (i + 1) as f64;
        if ui - t > 0.0 {
            theta = t;
        }
    }
    v.iter().map(|x| (x - theta).max(0.0)).collect()
}

/// All compositions of `m` into `d` nonnegative parts, scaled to sum 1.
fn lattice(d: usize, m: usize) -> Vec<Vec<f64>> {
    fn rec(d: usize, left: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if d == 1 {
            cur.push(left);
            out.push(cur.clone());
            cur.pop();
            return;
        }
        for k in (0..=left).rev() {
            cur.push(k);
            rec(d - 1, left - k, cur, out);
            cur.pop();
        }
    }
    let mut raw = Vec::new();
    rec(d, m, &mut Vec::new(), &mut raw);
    raw.into_iter()
        .map(|c| c.into_iter().map(|k| k as f64 / m as f64).collect())
        .collect()
}

fn lattice_size(d: usize, m: usize) -> f64 {
    // C(m + d - 1, d - 1)
    (1..d).fold(1.0, |acc, i| acc * (m + i) as f64 / i as f64)
}

/// Maximizes `ν(Ω)` over the full product space of level `r`.
pub fn optimize_plan(target: &dyn TargetModel, r: usize, method: OptimizeMethod) -> Result<OptimizedPlan> {
    let space = PlanSpace::full(target.num_qubits(), r)?;
    optimize_plan_in(target, &space, method, 0)
}

/// Maximizes `ν(Ω)` over `space`. The uniform point of the space is always
/// evaluated, so the result is never worse than it.
pub fn optimize_plan_in(
    target: &dyn TargetModel,
    space: &PlanSpace,
    method: OptimizeMethod,
    seed: u64,
) -> Result<OptimizedPlan> {
    let layouts = space.layouts()?;
    if layouts.is_empty() {
        return invalid("plan space is empty");
    }
    if method == OptimizeMethod::StabilizerLp {
        let s = target
            .stabilizer_group()
            .ok_or_else(|| Error::Validation("the LP method needs a stabilizer target".into()))?;
        let t = layouts[0].t();
        let out = lp_optimize(s, t)?;
        return Ok(OptimizedPlan {
            plan: SamplingPlan::from_measurements(&out.distribution)?,
            nu: out.nu,
            method,
            evaluations: out.iterations,
        });
    }
    let ops = build_test_operators(target, &layouts)?;
    let mut obj = Objective { space, ops, evaluations: 0 };
    let sizes = space.blocks();
    let uniform: Vec<f64> = sizes.iter().flat_map(|&s| std::iter::repeat_n(1.0 / s as f64, s)).collect();
    let mut best = (obj.gap(&uniform), uniform.clone());

    if sizes.iter().all(|&s| s == 1) {
        // a single layout: nothing to optimize
    } else {
        match method {
            OptimizeMethod::Grid { resolution } => {
                let mut m = resolution.max(1);
                while m > 1
                    && sizes.iter().map(|&d| lattice_size(d, m)).product::<f64>() > GRID_MAX_EVALUATIONS as f64
                {
                    m -= 1;
                }
                let grids: Vec<Vec<Vec<f64>>> = sizes.iter().map(|&d| lattice(d, m)).collect();
                let mut idx = vec![0usize; grids.len()];
                let mut budget = GRID_MAX_EVALUATIONS;
                'outer: loop {
                    if budget == 0 {
                        break;
                    }
                    budget -= 1;
                    let x: Vec<f64> = idx.iter().zip(&grids).flat_map(|(i, g)| g[*i].iter().copied()).collect();
                    let v = obj.gap(&x);
                    if v > best.0 {
                        best = (v, x);
                    }
                    for b in (0..idx.len()).rev() {
                        idx[b] += 1;
                        if idx[b] < grids[b].len() {
                            continue 'outer;
                        }
                        idx[b] = 0;
                    }
                    break;
                }
            }
            OptimizeMethod::ProjectedAscent => {
                for restart in 0..ASCENT_RESTARTS {
                    let mut rng = stream_rng(seed, restart);
                    let mut x: Vec<f64> = if restart == 0 {
                        uniform.clone()
                    } else {
                        let mut v = Vec::new();
                        for &s in &sizes {
                            let e: Vec<f64> = (0..s).map(|_| -(1.0 - rng.random::<f64>()).ln()).collect();
                            let tot: f64 = e.iter().sum();
                            v.extend(e.into_iter().map(|a| a / tot));
                        }
                        v
                    };
                    let mut fx = obj.gap(&x);
                    let mut step = 0.1;
                    for _ in 0..ASCENT_ITERATIONS {
                        let grad: Vec<f64> = (0..x.len())
                            .map(|i| {
                                let mut xp = x.clone();
                                xp[i] += FD_STEP;
                                (obj.gap(&xp) - fx) / FD_STEP
                            })
                            .collect();
                        let mut y = Vec::with_capacity(x.len());
                        let mut off = 0;
                        for &s in &sizes {
                            let moved: Vec<f64> = (off..off + s).map(|i| x[i] + step * grad[i]).collect();
                            y.extend(project_simplex(&moved));
                            off += s;
                        }
                        if sizes.iter().scan(0, |o, &s| {
                            let sum: f64 = y[*o..*o + s].iter().sum();
                            *o += s;
                            Some(sum)
                        }).any(|sum| sum <= 0.0)
                        {
                            step *= 0.5;
                            continue;
                        }
                        let fy = obj.gap(&y);
                        if fy > fx {
                            x = y;
                            fx = fy;
                            step *= 1.2;
                        } else {
                            step *= 0.5;
                            if step < 1e-9 {
                                break;
                            }
                        }
                    }
                    if fx > best.0 {
                        best = (fx, x);
                    }
                }
            }
            OptimizeMethod::StabilizerLp => unreachable!("handled above"),
        }
    }
    let weights = space.layout_weights(&best.1);
    let plan = SamplingPlan::new(layouts.into_iter().zip(weights).collect())?;
    Ok(OptimizedPlan { plan, nu: best.0, method, evaluations: obj.evaluations })
}
