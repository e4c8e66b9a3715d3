//! Best fixed point in hindsight.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::geometry::{distance, dot, norm, FeasibleSet, Norm, Point, SetShape};
use crate::losses::{Loss, LossOracle};

/// Stopping tolerance on the norm of the projected gradient mapping.
pub const MAPPING_TOLERANCE: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComparatorOptions {
    /// Random feasible starts in addition to the set's middle.
    pub starts: usize,
    pub max_iters: usize,
    pub tolerance: f64,
    pub seed: u64,
}

impl Default for ComparatorOptions {
    fn default() -> Self {
        ComparatorOptions { starts: 4, max_iters: 20_000, tolerance: MAPPING_TOLERANCE, seed: 0 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Comparator {
    pub point: Point,
    /// `sum_t f_t(point)`.
    pub objective: f64,
    /// Gradient mapping norm at `point` (for nonsmooth sums, of the chosen
    /// subgradient).
    pub mapping_norm: f64,
    pub converged: bool,
}

/// Linear and quadratic terms collapse to `S/2 |x|^2 - m.x + g.x + const`.
struct Aggregate {
    curvature: f64,
    weighted_centers: Vec<f64>,
    slope: Vec<f64>,
}

fn aggregate(losses: &[LossOracle], n: usize) -> Option<Aggregate> {
    let mut a = Aggregate { curvature: 0.0, weighted_centers: vec![0.0; n], slope: vec![0.0; n] };
    for f in losses {
        match f.loss() {
            Loss::Linear { slope, .. } => a.slope.iter_mut().zip(slope.iter()).for_each(|(s, g)| *s += g),
            Loss::Quadratic { curvature, center } => {
                a.curvature += curvature;
                a.weighted_centers.iter_mut().zip(center.iter()).for_each(|(m, c)| *m += curvature * c);
            }
            _ => return None,
        }
    }
    Some(a)
}

enum Objective<'a> {
    Smooth(Aggregate),
    Generic(&'a [LossOracle]),
}

impl Objective<'_> {
    fn gradient(&self, x: &[f64]) -> Result<Vec<f64>> {
        match self {
            Objective::Smooth(a) => Ok((0..x.len()).map(|i| a.curvature * x[i] - a.weighted_centers[i] + a.slope[i]).collect()),
            Objective::Generic(losses) => {
                let mut g = vec![0.0; x.len()];
                for f in losses.iter() {
                    let gi = f.exact_gradient(x)?;
                    g.iter_mut().zip(gi.iter()).for_each(|(a, b)| *a += b);
                }
                Ok(g)
            }
        }
    }

    fn smoothness(&self) -> Option<f64> {
        match self {
            Objective::Smooth(a) => Some(a.curvature),
            Objective::Generic(_) => None,
        }
    }
}

/// Sum of the losses at `x`, evaluated term by term.
pub fn total_loss(losses: &[LossOracle], x: &[f64]) -> f64 {
    losses.iter().map(|f| f.value_uncounted(x)).sum()
}

fn mapping(x: &[f64], g: &[f64], step: f64, set: &FeasibleSet) -> Result<(Point, f64)> {
    let next = set.project(&Point::from(x).axpy(-step, g))?;
    let norm = distance(x, &next, Norm::L2) / step;
    Ok((next, norm))
}

fn middle(set: &FeasibleSet) -> Point {
    match set.shape() {
        SetShape::Box { lower, upper } => Point::new(lower.iter().zip(upper.iter()).map(|(l, u)| 0.5 * (l + u)).collect()),
        SetShape::EuclideanBall { center, .. } => center.clone(),
    }
}

/// Projected gradient descent from one start. Quadratic-plus-linear sums use
/// step `1/S` (a full-diameter step when `S = 0`); other sums backtrack on
/// the sufficient-decrease condition and fall back to diminishing
/// subgradient steps where that fails (kinks).
fn descend(objective: &Objective, losses: &[LossOracle], set: &FeasibleSet, start: Point, opts: &ComparatorOptions) -> Result<Comparator> {
    let mut x = start;
    let mut fx = total_loss(losses, &x);
    let mut best = Comparator { point: x.clone(), objective: fx, mapping_norm: f64::INFINITY, converged: false };
    let mut step = 1.0;
    for k in 1..=opts.max_iters {
        let g = objective.gradient(&x)?;
        let (next, norm) = match objective.smoothness() {
            Some(l) if l > 0.0 => mapping(&x, &g, 1.0 / l, set)?,
            Some(_) => {
                let gn = norm(&g, Norm::L2);
                mapping(&x, &g, if gn > 0.0 { (set.diameter() + 1.0) / gn } else { 1.0 }, set)?
            }
            None => {
                let (mut next, mut mnorm) = mapping(&x, &g, step, set)?;
                let mut accepted = false;
                for _ in 0..50 {
                    let d: Vec<f64> = next.iter().zip(x.iter()).map(|(a, b)| a - b).collect();
                    let model = fx + dot(&g, &d) + dot(&d, &d) / (2.0 * step);
                    if total_loss(losses, &next) <= model + 1e-15 * fx.abs().max(1.0) {
                        accepted = true;
                        break;
                    }
                    step *= 0.5;
                    (next, mnorm) = mapping(&x, &g, step, set)?;
                }
                if accepted {
                    step *= 2.0;
                    (next, mnorm)
                } else {
                    let gn = norm(&g, Norm::L2).max(f64::MIN_POSITIVE);
                    step = 1.0;
                    let (sub, _) = mapping(&x, &g, set.diameter() / (gn * (k as f64).sqrt()), set)?;
                    (sub, mnorm)
                }
            }
        };
        if fx < best.objective || (fx == best.objective && norm < best.mapping_norm) {
            best = Comparator { point: x.clone(), objective: fx, mapping_norm: norm, converged: false };
        }
        if norm <= opts.tolerance {
            return Ok(Comparator { point: x, objective: fx, mapping_norm: norm, converged: true });
        }
        fx = total_loss(losses, &next);
        x = next;
    }
    Ok(best)
}

/// Minimizes `sum_t f_t` over `set` from several starts and keeps the best.
/// Returns the best point found even when no start met the tolerance.
pub fn minimize(losses: &[LossOracle], set: &FeasibleSet, opts: &ComparatorOptions) -> Result<Comparator> {
    if losses.is_empty() {
        return Err(Error::InvalidParameter("comparator needs at least one loss".into()));
    }
    let n = set.dim();
    let objective = match aggregate(losses, n) {
        Some(a) => Objective::Smooth(a),
        None => Objective::Generic(losses),
    };
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut starts = vec![middle(set)];
    starts.extend((0..opts.starts).map(|_| set.sample_uniform(&mut rng)));
    let mut best: Option<Comparator> = None;
    for s in starts {
        let c = descend(&objective, losses, set, s, opts)?;
        let better = match &best {
            None => true,
            Some(b) => (c.converged && !b.converged) || (c.converged == b.converged && c.objective < b.objective),
        };
        if better {
            best = Some(c);
        }
    }
    Ok(best.expect("at least one start"))
}

/// The minimizer of `sum_t f_t` over `set`, or `NonConvergence` carrying the
/// best iterate.
pub fn solve_comparator(losses: &[LossOracle], set: &FeasibleSet) -> Result<Point> {
    let c = minimize(losses, set, &ComparatorOptions::default())?;
    if c.converged {
        Ok(c.point)
    } else {
        Err(Error::NonConvergence { best: c.point.into_inner(), mapping_norm: c.mapping_norm })
    }
}
