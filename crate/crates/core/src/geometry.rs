//! Points, norms, and the convex feasible sets the player moves in.
//!
//! Only two set shapes are supported, an axis-aligned box and a Euclidean
//! ball. Both have closed-form projections. The stored diameter is the
//! Euclidean one, which also bounds the L-infinity diameter.

use std::ops::{Deref, DerefMut};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A point in R^n.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Point(Vec<f64>);

impl Point {
    pub fn new(coords: Vec<f64>) -> Self {
        Point(coords)
    }

    pub fn zeros(n: usize) -> Self {
        Point(vec![0.0; n])
    }

    pub fn splat(n: usize, v: f64) -> Self {
        Point(vec![v; n])
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|v| v.is_finite())
    }

    pub fn sub(&self, other: &[f64]) -> Point {
        Point(self.0.iter().zip(other).map(|(a, b)| a - b).collect())
    }

    pub fn add(&self, other: &[f64]) -> Point {
        Point(self.0.iter().zip(other).map(|(a, b)| a + b).collect())
    }

    /// `self + s * dir`
    pub fn axpy(&self, s: f64, dir: &[f64]) -> Point {
        Point(self.0.iter().zip(dir).map(|(a, d)| a + s * d).collect())
    }

    pub fn scale(&self, s: f64) -> Point {
        Point(self.0.iter().map(|a| a * s).collect())
    }

    pub fn norm(&self, kind: Norm) -> f64 {
        norm(&self.0, kind)
    }
}

impl Deref for Point {
    type Target = [f64];
    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl DerefMut for Point {
    fn deref_mut(&mut self) -> &mut [f64] {
        &mut self.0
    }
}

impl From<Vec<f64>> for Point {
    fn from(v: Vec<f64>) -> Self {
        Point(v)
    }
}

impl From<&[f64]> for Point {
    fn from(v: &[f64]) -> Self {
        Point(v.to_vec())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Norm {
    L1,
    L2,
    Linf,
}

pub fn norm(x: &[f64], kind: Norm) -> f64 {
    match kind {
        Norm::L1 => x.iter().map(|v| v.abs()).sum(),
        Norm::L2 => x.iter().map(|v| v * v).sum::<f64>().sqrt(),
        Norm::Linf => x.iter().fold(0.0, |m, v| f64::max(m, v.abs())),
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn distance(a: &[f64], b: &[f64], kind: Norm) -> f64 {
    let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    norm(&d, kind)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum SetShape {
    Box { lower: Point, upper: Point },
    EuclideanBall { center: Point, radius: f64 },
}

/// A compact convex set with its Euclidean diameter.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeasibleSet {
    shape: SetShape,
    diameter_l2: f64,
}

impl FeasibleSet {
    pub fn new_box(lower: Point, upper: Point) -> Result<Self> {
        if lower.dim() != upper.dim() {
            return Err(Error::DimensionMismatch { expected: lower.dim(), found: upper.dim() });
        }
        if lower.dim() == 0 {
            return Err(Error::InvalidParameter("box must have dimension >= 1".into()));
        }
        if !lower.is_finite() || !upper.is_finite() {
            return Err(Error::InvalidParameter("box bounds must be finite".into()));
        }
        if lower.iter().zip(upper.iter()).any(|(l, u)| l > u) {
            return Err(Error::InvalidParameter("box requires lower <= upper componentwise".into()));
        }
        let diameter_l2 = distance(&upper, &lower, Norm::L2);
        if diameter_l2 <= 0.0 {
            return Err(Error::InvalidParameter("box must have positive diameter".into()));
        }
        Ok(FeasibleSet { shape: SetShape::Box { lower, upper }, diameter_l2 })
    }

    /// The cube `[lo, hi]^n`.
    pub fn cube(n: usize, lo: f64, hi: f64) -> Result<Self> {
        Self::new_box(Point::splat(n, lo), Point::splat(n, hi))
    }

    pub fn new_ball(center: Point, radius: f64) -> Result<Self> {
        if center.dim() == 0 {
            return Err(Error::InvalidParameter("ball must have dimension >= 1".into()));
        }
        if !center.is_finite() || !(radius.is_finite() && radius > 0.0) {
            return Err(Error::InvalidParameter("ball needs a finite center and positive radius".into()));
        }
        Ok(FeasibleSet { diameter_l2: 2.0 * radius, shape: SetShape::EuclideanBall { center, radius } })
    }

    pub fn shape(&self) -> &SetShape {
        &self.shape
    }

    pub fn dim(&self) -> usize {
        match &self.shape {
            SetShape::Box { lower, .. } => lower.dim(),
            SetShape::EuclideanBall { center, .. } => center.dim(),
        }
    }

    pub fn diameter(&self) -> f64 {
        self.diameter_l2
    }

    fn check_dim(&self, y: &[f64]) -> Result<()> {
        if y.len() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), found: y.len() });
        }
        Ok(())
    }

    /// Euclidean projection onto the set.
    pub fn project(&self, y: &[f64]) -> Result<Point> {
        self.check_dim(y)?;
        if !y.iter().all(|v| v.is_finite()) {
            return Err(Error::InvalidParameter("cannot project a non-finite point".into()));
        }
        Ok(match &self.shape {
            SetShape::Box { lower, upper } => Point(
                y.iter()
                    .zip(lower.iter().zip(upper.iter()))
                    .map(|(v, (l, u))| v.clamp(*l, *u))
                    .collect(),
            ),
            SetShape::EuclideanBall { center, radius } => {
                let d = distance(y, center, Norm::L2);
                if d <= *radius {
                    Point(y.to_vec())
                } else {
                    // shrink past rounding so the result is itself a fixed point
                    let mut s = radius / d;
                    loop {
                        let p = Point(center.iter().zip(y).map(|(c, v)| c + s * (v - c)).collect());
                        if distance(&p, center, Norm::L2) <= *radius {
                            break p;
                        }
                        s *= 1.0 - f64::EPSILON;
                    }
                }
            }
        })
    }

    pub fn contains(&self, y: &[f64], tol: f64) -> bool {
        self.enlarged_contains(y, 0.0, tol)
    }

    /// Membership in the set enlarged by `e` in the L-infinity norm,
    /// i.e. the Minkowski sum of the set with the cube `[-e, e]^n`.
    pub fn enlarged_contains(&self, y: &[f64], e: f64, tol: f64) -> bool {
        if y.len() != self.dim() {
            return false;
        }
        match &self.shape {
            SetShape::Box { lower, upper } => y
                .iter()
                .zip(lower.iter().zip(upper.iter()))
                .all(|(v, (l, u))| *v >= l - e - tol && *v <= u + e + tol),
            SetShape::EuclideanBall { center, radius } => {
                // the cube around y meets the ball iff its point nearest the center does
                let nearest: Vec<f64> =
                    center.iter().zip(y).map(|(c, v)| c.clamp(v - e, v + e)).collect();
                distance(&nearest, center, Norm::L2) <= radius + tol
            }
        }
    }

    /// Largest Euclidean distance from `a` to a point of the enlarged set.
    /// Exact for boxes, an upper bound for balls.
    pub fn max_distance_from(&self, a: &[f64], e: f64) -> f64 {
        match &self.shape {
            SetShape::Box { lower, upper } => {
                let far: Vec<f64> = a
                    .iter()
                    .zip(lower.iter().zip(upper.iter()))
                    .map(|(ai, (l, u))| f64::max((ai - (l - e)).abs(), (u + e - ai).abs()))
                    .collect();
                norm(&far, Norm::L2)
            }
            SetShape::EuclideanBall { center, radius } => {
                distance(a, center, Norm::L2) + radius + e * (self.dim() as f64).sqrt()
            }
        }
    }

    /// Uniform draw from the set: per-coordinate for a box, rejection from
    /// the bounding box for a ball.
    pub fn sample_uniform<R: Rng + ?Sized>(&self, rng: &mut R) -> Point {
        match &self.shape {
            SetShape::Box { lower, upper } => Point(
                lower
                    .iter()
                    .zip(upper.iter())
                    .map(|(l, u)| if l == u { *l } else { rng.gen_range(*l..*u) })
                    .collect(),
            ),
            SetShape::EuclideanBall { center, radius } => loop {
                let p: Vec<f64> =
                    center.iter().map(|c| c + radius * (2.0 * rng.gen::<f64>() - 1.0)).collect();
                if distance(&p, center, Norm::L2) <= *radius {
                    break Point(p);
                }
            },
        }
    }
}

/// Uniform sample from the L-infinity ball of radius `r` around `center`.
pub fn sample_linf_ball<R: Rng + ?Sized>(center: &[f64], r: f64, rng: &mut R) -> Result<Point> {
    if !(r >= 0.0 && r.is_finite()) {
        return Err(Error::InvalidParameter(format!("sampling radius must be >= 0, got {r}")));
    }
    Ok(Point(
        center
            .iter()
            .map(|c| if r == 0.0 { *c } else { c + r * (2.0 * rng.gen::<f64>() - 1.0) })
            .collect(),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn unit_box() -> FeasibleSet {
        FeasibleSet::cube(2, 0.0, 1.0).unwrap()
    }

    fn unit_ball() -> FeasibleSet {
        FeasibleSet::new_ball(Point::zeros(2), 1.0).unwrap()
    }

    #[test]
    fn project_box_clamps() {
        let p = unit_box().project(&[1.5, -0.2]).unwrap();
        assert_eq!(p.as_ref(), &[1.0, 0.0]);
    }

    #[test]
    fn project_ball_rescales() {
        let p = unit_ball().project(&[3.0, 4.0]).unwrap();
        assert!((p[0] - 0.6).abs() < 1e-15 && (p[1] - 0.8).abs() < 1e-15);
    }

    #[test]
    fn project_inside_is_identity() {
        for set in [unit_box(), unit_ball()] {
            let y = [0.3, 0.4];
            assert_eq!(set.project(&y).unwrap().as_ref(), &y);
        }
    }

    #[test]
    fn project_rejects_wrong_dimension() {
        assert!(matches!(
            unit_box().project(&[0.0, 0.0, 0.0]),
            Err(Error::DimensionMismatch { expected: 2, found: 3 })
        ));
    }

    #[test]
    fn norms() {
        assert_eq!(norm(&[3.0, 4.0], Norm::L2), 5.0);
        assert_eq!(norm(&[3.0, -4.0], Norm::L1), 7.0);
        assert_eq!(norm(&[3.0, -4.0], Norm::Linf), 4.0);
    }

    #[test]
    fn diameters() {
        assert!((unit_box().diameter() - 2f64.sqrt()).abs() < 1e-15);
        assert_eq!(unit_ball().diameter(), 2.0);
        assert!(FeasibleSet::new_box(Point::new(vec![1.0]), Point::new(vec![0.0])).is_err());
    }

    #[test]
    fn zero_radius_sample_is_center() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let c = [0.25, -3.0];
        assert_eq!(sample_linf_ball(&c, 0.0, &mut rng).unwrap().as_ref(), &c);
    }

    #[test]
    fn linf_sample_is_uniform() {
        // chi-square on 10 equal bins, 10^4 draws; critical value at 0.01 with 9 dof is 21.666
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let (center, r) = ([1.0, -2.0], 0.5);
        let draws: Vec<Point> =
            (0..10_000).map(|_| sample_linf_ball(&center, r, &mut rng).unwrap()).collect();
        for axis in 0..2 {
            let mut bins = [0usize; 10];
            for z in &draws {
                let u = (z[axis] - (center[axis] - r)) / (2.0 * r);
                bins[((u * 10.0) as usize).min(9)] += 1;
            }
            let expected = 1000.0;
            let chi2: f64 = bins.iter().map(|&o| (o as f64 - expected).powi(2) / expected).sum();
            assert!(chi2 < 21.666, "axis {axis}: chi2 = {chi2}");
        }
    }

    #[test]
    fn enlarged_ball_membership() {
        let ball = unit_ball();
        assert!(ball.enlarged_contains(&[0.8, 0.8], 0.1, 0.0));
        assert!(!ball.enlarged_contains(&[1.2, 0.0], 0.1, 0.0));
        assert!(ball.enlarged_contains(&[1.1, 0.0], 0.1, 1e-12));
    }

    fn arb_set() -> impl Strategy<Value = FeasibleSet> {
        prop_oneof![
            (prop::collection::vec((-2.0f64..2.0, 0.1f64..3.0), 1..5)).prop_map(|v| {
                let lower: Vec<f64> = v.iter().map(|(l, _)| *l).collect();
                let upper: Vec<f64> = v.iter().map(|(l, w)| l + w).collect();
                FeasibleSet::new_box(lower.into(), upper.into()).unwrap()
            }),
            (prop::collection::vec(-2.0f64..2.0, 1..5), 0.1f64..3.0)
                .prop_map(|(c, r)| FeasibleSet::new_ball(c.into(), r).unwrap()),
        ]
    }

    fn arb_set_and_points() -> impl Strategy<Value = (FeasibleSet, Vec<f64>, Vec<f64>, u64)> {
        arb_set().prop_flat_map(|s| {
            let n = s.dim();
            (
                Just(s),
                prop::collection::vec(-6.0f64..6.0, n),
                prop::collection::vec(-6.0f64..6.0, n),
                any::<u64>(),
            )
        })
    }

    proptest! {
        #[test]
        fn projection_is_idempotent((s, y, _, _) in arb_set_and_points()) {
            let p = s.project(&y).unwrap();
            prop_assert_eq!(s.project(&p).unwrap(), p.clone());
            prop_assert!(s.contains(&p, 1e-12));
        }

        #[test]
        fn projection_is_nonexpansive((s, y1, y2, _) in arb_set_and_points()) {
            let (p1, p2) = (s.project(&y1).unwrap(), s.project(&y2).unwrap());
            prop_assert!(distance(&p1, &p2, Norm::L2) <= distance(&y1, &y2, Norm::L2) + 1e-12);
        }

        #[test]
        fn projection_pythagorean((s, y, _, seed) in arb_set_and_points()) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let p = s.project(&y).unwrap();
            for _ in 0..1000 {
                let x = s.sample_uniform(&mut rng);
                prop_assert!(distance(&p, &x, Norm::L2) <= distance(&y, &x, Norm::L2) + 1e-12);
            }
        }

        #[test]
        fn linf_samples_stay_in_ball(c in prop::collection::vec(-5.0f64..5.0, 1..6), r in 0.0f64..2.0, seed: u64) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let z = sample_linf_ball(&c, r, &mut rng).unwrap();
            prop_assert!(distance(&z, &c, Norm::Linf) <= r);
        }

        #[test]
        fn diameter_bounds_pairs((s, _, _, seed) in arb_set_and_points()) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            for _ in 0..100 {
                let (a, b) = (s.sample_uniform(&mut rng), s.sample_uniform(&mut rng));
                prop_assert!(distance(&a, &b, Norm::L2) <= s.diameter() + 1e-12);
                prop_assert!(distance(&a, &b, Norm::Linf) <= s.diameter() + 1e-12);
            }
        }
    }
}
