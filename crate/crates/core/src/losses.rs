//! Convex loss families, counted zeroth-order oracles, and adversaries.

use std::fmt;
use std::sync::Arc;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{dot, norm, FeasibleSet, Norm, Point, SetShape};

/// Slack allowed on domain membership checks for query points.
const DOMAIN_TOL: f64 = 1e-9;

pub type ValueFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;
pub type GradientFn = Arc<dyn Fn(&[f64]) -> Vec<f64> + Send + Sync>;

/// A black-box loss supplied by the caller.
#[derive(Clone)]
pub struct CustomLoss {
    pub name: String,
    pub value: ValueFn,
    pub gradient: Option<GradientFn>,
}

impl fmt::Debug for CustomLoss {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CustomLoss")
            .field("name", &self.name)
            .field("has_gradient", &self.gradient.is_some())
            .finish()
    }
}

#[derive(Debug, Clone)]
pub enum Loss {
    /// `slope . x + offset`
    Linear { slope: Point, offset: f64 },
    /// `curvature / 2 * |x - center|^2`
    Quadratic { curvature: f64, center: Point },
    /// `max_k (slopes[k] . x + intercepts[k])`
    MaxAffine { slopes: Vec<Point>, intercepts: Vec<f64> },
    Custom(CustomLoss),
}

impl Loss {
    pub fn constant(n: usize, value: f64) -> Loss {
        Loss::Linear { slope: Point::zeros(n), offset: value }
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        match self {
            Loss::Linear { slope, offset } => dot(slope, x) + offset,
            Loss::Quadratic { curvature, center } => {
                0.5 * curvature * x.iter().zip(center.iter()).map(|(a, c)| (a - c) * (a - c)).sum::<f64>()
            }
            Loss::MaxAffine { slopes, intercepts } => slopes
                .iter()
                .zip(intercepts)
                .map(|(a, b)| dot(a, x) + b)
                .fold(f64::NEG_INFINITY, f64::max),
            Loss::Custom(c) => (c.value)(x),
        }
    }

    /// Gradient, or a subgradient (the first active piece) for max-affine.
    pub fn gradient(&self, x: &[f64]) -> Result<Point> {
        Ok(match self {
            Loss::Linear { slope, .. } => slope.clone(),
            Loss::Quadratic { curvature, center } => {
                Point::new(x.iter().zip(center.iter()).map(|(a, c)| curvature * (a - c)).collect())
            }
            Loss::MaxAffine { slopes, intercepts } => {
                let mut best = 0;
                let mut best_v = f64::NEG_INFINITY;
                for (k, (a, b)) in slopes.iter().zip(intercepts).enumerate() {
                    let v = dot(a, x) + b;
                    if v > best_v {
                        best = k;
                        best_v = v;
                    }
                }
                slopes[best].clone()
            }
            Loss::Custom(c) => match &c.gradient {
                Some(g) => Point::new(g(x)),
                None => {
                    return Err(Error::InvalidParameter(format!(
                        "custom loss '{}' has no exact gradient",
                        c.name
                    )))
                }
            },
        })
    }

    fn dim(&self) -> Option<usize> {
        match self {
            Loss::Linear { slope, .. } => Some(slope.dim()),
            Loss::Quadratic { center, .. } => Some(center.dim()),
            Loss::MaxAffine { slopes, .. } => slopes.first().map(|s| s.dim()),
            Loss::Custom(_) => None,
        }
    }
}

/// The region an oracle may be queried on: the feasible set enlarged by
/// `enlargement` in the L-infinity norm.
#[derive(Debug, Clone, PartialEq)]
pub struct Domain {
    pub set: FeasibleSet,
    pub enlargement: f64,
}

impl Domain {
    pub fn new(set: FeasibleSet, enlargement: f64) -> Self {
        Domain { set, enlargement }
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        self.set.enlarged_contains(x, self.enlargement, DOMAIN_TOL)
    }

    /// Uniform draw from the enlarged set (rejection from its bounding box).
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Point {
        let e = self.enlargement;
        let (lo, hi): (Vec<f64>, Vec<f64>) = match self.set.shape() {
            SetShape::Box { lower, upper } => {
                (lower.iter().map(|l| l - e).collect(), upper.iter().map(|u| u + e).collect())
            }
            SetShape::EuclideanBall { center, radius } => (
                center.iter().map(|c| c - radius - e).collect(),
                center.iter().map(|c| c + radius + e).collect(),
            ),
        };
        loop {
            let p: Vec<f64> = lo.iter().zip(&hi).map(|(l, h)| l + (h - l) * rng.gen::<f64>()).collect();
            if self.set.enlarged_contains(&p, e, 0.0) {
                return Point::new(p);
            }
        }
    }
}

/// Counts of oracle use. `classical` counts value queries made through
/// [`LossOracle::eval`]; `quantum` counts circuit-level uses of the quantum
/// oracle charged by the quantum estimator.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct QueryCount {
    pub classical: u64,
    pub quantum: u64,
}

impl QueryCount {
    pub fn total(&self) -> u64 {
        self.classical + self.quantum
    }
}

/// A loss with its Lipschitz and strong-convexity constants and a query
/// counter. The exact gradient is for verification only; player algorithms
/// never read it.
#[derive(Debug, Clone)]
pub struct LossOracle {
    loss: Loss,
    domain: Option<Domain>,
    lipschitz: f64,
    alpha: f64,
    queries: QueryCount,
}

impl LossOracle {
    /// Wraps an arbitrary loss with caller-asserted constants.
    pub fn custom(loss: Loss, domain: Option<Domain>, lipschitz: f64, alpha: f64) -> Result<Self> {
        if !(lipschitz.is_finite() && lipschitz > 0.0) {
            return Err(Error::InvalidParameter(format!("Lipschitz constant must be positive, got {lipschitz}")));
        }
        if !(alpha.is_finite() && alpha >= 0.0) {
            return Err(Error::InvalidParameter(format!("strong convexity must be >= 0, got {alpha}")));
        }
        Ok(LossOracle { loss, domain, lipschitz, alpha, queries: QueryCount::default() })
    }

    pub fn loss(&self) -> &Loss {
        &self.loss
    }

    pub fn domain(&self) -> Option<&Domain> {
        self.domain.as_ref()
    }

    pub fn lipschitz(&self) -> f64 {
        self.lipschitz
    }

    pub fn strong_convexity(&self) -> f64 {
        self.alpha
    }

    pub fn queries(&self) -> QueryCount {
        self.queries
    }

    fn check_domain(&self, x: &[f64]) -> Result<()> {
        match &self.domain {
            Some(d) if !d.contains(x) => Err(Error::DomainViolation { point: x.to_vec() }),
            _ => Ok(()),
        }
    }

    /// One classical zeroth-order query.
    pub fn eval(&mut self, x: &[f64]) -> Result<f64> {
        self.check_domain(x)?;
        self.queries.classical += 1;
        Ok(self.loss.value(x))
    }

    /// Domain-checked evaluation that is not charged as a query. Used by the
    /// statevector simulator to tabulate what the quantum oracle would write.
    pub fn simulate(&self, x: &[f64]) -> Result<f64> {
        self.check_domain(x)?;
        Ok(self.loss.value(x))
    }

    /// Bookkeeping evaluation (loss suffered, regret); never charged.
    pub fn value_uncounted(&self, x: &[f64]) -> f64 {
        self.loss.value(x)
    }

    pub fn charge_quantum(&mut self, uses: u64) {
        self.queries.quantum += uses;
    }

    pub fn exact_gradient(&self, x: &[f64]) -> Result<Point> {
        self.loss.gradient(x)
    }

    /// A fresh copy with zeroed counters.
    pub fn reset(&self) -> LossOracle {
        LossOracle { queries: QueryCount::default(), ..self.clone() }
    }
}

/// Builds an oracle for one of the built-in families, computing G over the
/// domain and alpha from the curvature.
pub fn make_family(loss: Loss, domain: Domain) -> Result<LossOracle> {
    let n = domain.set.dim();
    if let Some(d) = loss.dim() {
        if d != n {
            return Err(Error::DimensionMismatch { expected: n, found: d });
        }
    }
    if !(domain.enlargement.is_finite() && domain.enlargement >= 0.0) {
        return Err(Error::InvalidParameter("domain enlargement must be >= 0".into()));
    }
    let (g, alpha) = match &loss {
        Loss::Linear { slope, offset } => {
            if !slope.is_finite() || !offset.is_finite() {
                return Err(Error::InvalidParameter("linear loss needs finite parameters".into()));
            }
            (norm(slope, Norm::L2), 0.0)
        }
        Loss::Quadratic { curvature, center } => {
            if !(curvature.is_finite() && *curvature >= 0.0) {
                return Err(Error::NonConvex(format!("quadratic curvature {curvature} is negative")));
            }
            if !center.is_finite() {
                return Err(Error::InvalidParameter("quadratic center must be finite".into()));
            }
            (curvature * domain.set.max_distance_from(center, domain.enlargement), *curvature)
        }
        Loss::MaxAffine { slopes, intercepts } => {
            if slopes.is_empty() || slopes.len() != intercepts.len() {
                return Err(Error::NonConvex("max-affine loss needs matching, nonempty pieces".into()));
            }
            if let Some(bad) = slopes.iter().find(|s| s.dim() != n) {
                return Err(Error::DimensionMismatch { expected: n, found: bad.dim() });
            }
            if slopes.iter().any(|s| !s.is_finite()) || intercepts.iter().any(|b| !b.is_finite()) {
                return Err(Error::InvalidParameter("max-affine loss needs finite parameters".into()));
            }
            (slopes.iter().map(|s| norm(s, Norm::L2)).fold(0.0, f64::max), 0.0)
        }
        Loss::Custom(_) => {
            return Err(Error::InvalidParameter(
                "custom losses carry caller-supplied constants; use LossOracle::custom".into(),
            ))
        }
    };
    // a zero Lipschitz constant (constant loss) is legal; keep G positive for schedule arithmetic
    let g = if g > 0.0 { g } else { f64::MIN_POSITIVE };
    Ok(LossOracle { loss, domain: Some(domain), lipschitz: g, alpha, queries: QueryCount::default() })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Power {
    Oblivious,
    Adaptive,
    CompletelyAdaptive,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FamilyKind {
    Linear,
    Quadratic,
    MaxAffine,
}

/// Family parameters; which fields apply depends on (power, family).
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FamilyParams {
    /// Slope norm for random or rule-based linear and max-affine losses.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scale: Option<f64>,
    /// Fixed linear slope.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub slope: Option<Vec<f64>>,
    /// Additive constant of linear losses (slope zero gives constant losses).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub value: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub curvature: Option<f64>,
    /// Quadratic centers to cycle through.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub centers: Option<Vec<Vec<f64>>>,
    /// Offset of the quadratic chaser's center from the player's point.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub offset: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pieces: Option<usize>,
}

/// Serializable description of an adversary.
///
/// | power | family | rule |
/// |---|---|---|
/// | oblivious | linear | fixed `slope` (+`value`), or random direction of norm `scale` each round |
/// | oblivious | quadratic | `centers` cycled, or a uniform center in K each round |
/// | oblivious | max_affine | `pieces` random affine pieces with slope norm <= `scale` |
/// | adaptive | linear | slope `+scale e1` on odd rounds, `-scale e1` on even rounds |
/// | adaptive | quadratic | center alternates between `centers[0]` and `centers[1]` |
/// | completely_adaptive | linear | slope of norm `scale` pointing from x_t toward the set's middle |
/// | completely_adaptive | quadratic | center `x_t + offset` (the chaser) |
/// | completely_adaptive | max_affine | `scale * |x_1 - x_t,1|`, kink at the player's point |
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AdversarySpec {
    pub power: Power,
    pub family: FamilyKind,
    #[serde(default)]
    pub params: FamilyParams,
}

type AdaptiveRule = Arc<dyn Fn(usize) -> Result<LossOracle> + Send + Sync>;
type ReactiveRule = Arc<dyn Fn(usize, &[f64]) -> Result<LossOracle> + Send + Sync>;

#[derive(Clone)]
pub enum Adversary {
    /// All losses fixed before the game.
    Oblivious(Vec<LossOracle>),
    /// Loss depends on the round index only.
    Adaptive { horizon: usize, rule: AdaptiveRule },
    /// Loss may depend on the player's current point.
    CompletelyAdaptive { horizon: usize, rule: ReactiveRule },
}

impl fmt::Debug for Adversary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Adversary::Oblivious(v) => write!(f, "Oblivious({} losses)", v.len()),
            Adversary::Adaptive { horizon, .. } => write!(f, "Adaptive(T = {horizon})"),
            Adversary::CompletelyAdaptive { horizon, .. } => write!(f, "CompletelyAdaptive(T = {horizon})"),
        }
    }
}

impl Adversary {
    pub fn horizon(&self) -> usize {
        match self {
            Adversary::Oblivious(v) => v.len(),
            Adversary::Adaptive { horizon, .. } | Adversary::CompletelyAdaptive { horizon, .. } => *horizon,
        }
    }

    pub fn power(&self) -> Power {
        match self {
            Adversary::Oblivious(_) => Power::Oblivious,
            Adversary::Adaptive { .. } => Power::Adaptive,
            Adversary::CompletelyAdaptive { .. } => Power::CompletelyAdaptive,
        }
    }

    /// The loss for round `t` (1-based) after the player commits to `x_t`.
    pub fn next(&self, t: usize, x_t: &[f64]) -> Result<LossOracle> {
        let horizon = self.horizon();
        if t == 0 || t > horizon {
            return Err(Error::RoundOutOfRange { t, horizon });
        }
        match self {
            Adversary::Oblivious(v) => Ok(v[t - 1].reset()),
            Adversary::Adaptive { rule, .. } => rule(t),
            Adversary::CompletelyAdaptive { rule, .. } => rule(t, x_t),
        }
    }
}

fn random_direction<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..n).map(|_| 2.0 * rng.gen::<f64>() - 1.0).collect();
        let l = norm(&v, Norm::L2);
        if l > 1e-3 && l <= 1.0 {
            return v.iter().map(|x| x / l).collect();
        }
    }
}

fn set_middle(set: &FeasibleSet) -> Point {
    match set.shape() {
        SetShape::Box { lower, upper } => {
            Point::new(lower.iter().zip(upper.iter()).map(|(l, u)| 0.5 * (l + u)).collect())
        }
        SetShape::EuclideanBall { center, .. } => center.clone(),
    }
}

fn default_centers(set: &FeasibleSet) -> Vec<Point> {
    match set.shape() {
        SetShape::Box { lower, upper } => vec![lower.clone(), upper.clone()],
        SetShape::EuclideanBall { center, radius } => {
            let mut a = center.clone();
            let mut b = center.clone();
            a[0] -= radius;
            b[0] += radius;
            vec![a, b]
        }
    }
}

fn e1(n: usize, s: f64) -> Point {
    let mut v = Point::zeros(n);
    v[0] = s;
    v
}

fn positive(name: &str, v: f64) -> Result<f64> {
    if v.is_finite() && v > 0.0 {
        Ok(v)
    } else {
        Err(Error::Config(format!("adversary parameter '{name}' must be positive, got {v}")))
    }
}

fn to_point(v: &[f64], n: usize, what: &str) -> Result<Point> {
    if v.len() != n {
        return Err(Error::Config(format!("adversary parameter '{what}' has length {}, expected {n}", v.len())));
    }
    Ok(Point::new(v.to_vec()))
}

impl AdversarySpec {
    /// Instantiates the adversary for a game of `horizon` rounds on `domain`.
    /// Oblivious sequences are drawn from `rng` here, before play starts.
    pub fn build<R: Rng + ?Sized>(&self, domain: &Domain, horizon: usize, rng: &mut R) -> Result<Adversary> {
        let p = &self.params;
        let set = &domain.set;
        let n = set.dim();
        let scale = positive("scale", p.scale.unwrap_or(1.0))?;
        let curvature = p.curvature.unwrap_or(1.0);
        if !(curvature.is_finite() && curvature >= 0.0) {
            return Err(Error::NonConvex(format!("curvature {curvature} is negative")));
        }
        let centers: Option<Vec<Point>> = p
            .centers
            .as_ref()
            .map(|cs| cs.iter().map(|c| to_point(c, n, "centers")).collect::<Result<_>>())
            .transpose()?;

        let adversary = match (self.power, self.family) {
            (Power::Oblivious, FamilyKind::Linear) => {
                let offset = p.value.unwrap_or(0.0);
                let fixed = p.slope.as_ref().map(|s| to_point(s, n, "slope")).transpose()?;
                let losses = (0..horizon)
                    .map(|_| {
                        let slope = match &fixed {
                            Some(s) => s.clone(),
                            None => Point::new(random_direction(n, rng)).scale(scale),
                        };
                        make_family(Loss::Linear { slope, offset }, domain.clone())
                    })
                    .collect::<Result<_>>()?;
                Adversary::Oblivious(losses)
            }
            (Power::Oblivious, FamilyKind::Quadratic) => {
                let losses = (0..horizon)
                    .map(|k| {
                        let center = match &centers {
                            Some(cs) if !cs.is_empty() => cs[k % cs.len()].clone(),
                            _ => set.sample_uniform(rng),
                        };
                        make_family(Loss::Quadratic { curvature, center }, domain.clone())
                    })
                    .collect::<Result<_>>()?;
                Adversary::Oblivious(losses)
            }
            (Power::Oblivious, FamilyKind::MaxAffine) => {
                let pieces = p.pieces.unwrap_or(3);
                if pieces == 0 {
                    return Err(Error::NonConvex("max-affine loss needs at least one piece".into()));
                }
                let losses = (0..horizon)
                    .map(|_| {
                        let slopes: Vec<Point> = (0..pieces)
                            .map(|_| Point::new(random_direction(n, rng)).scale(scale * rng.gen::<f64>()))
                            .collect();
                        let intercepts = (0..pieces).map(|_| scale * (rng.gen::<f64>() - 0.5)).collect();
                        make_family(Loss::MaxAffine { slopes, intercepts }, domain.clone())
                    })
                    .collect::<Result<_>>()?;
                Adversary::Oblivious(losses)
            }
            (Power::Adaptive, FamilyKind::Linear) => {
                let domain = domain.clone();
                let offset = p.value.unwrap_or(0.0);
                Adversary::Adaptive {
                    horizon,
                    rule: Arc::new(move |t| {
                        let sign = if t % 2 == 1 { 1.0 } else { -1.0 };
                        make_family(Loss::Linear { slope: e1(n, sign * scale), offset }, domain.clone())
                    }),
                }
            }
            (Power::Adaptive, FamilyKind::Quadratic) => {
                let cs = centers.unwrap_or_else(|| default_centers(set));
                if cs.len() < 2 {
                    return Err(Error::Config("adaptive quadratic needs two centers".into()));
                }
                let domain = domain.clone();
                Adversary::Adaptive {
                    horizon,
                    rule: Arc::new(move |t| {
                        let center = cs[(t - 1) % 2].clone();
                        make_family(Loss::Quadratic { curvature, center }, domain.clone())
                    }),
                }
            }
            (Power::CompletelyAdaptive, FamilyKind::Linear) => {
                let domain = domain.clone();
                let middle = set_middle(set);
                Adversary::CompletelyAdaptive {
                    horizon,
                    rule: Arc::new(move |_, x| {
                        let d = middle.sub(x);
                        let l = norm(&d, Norm::L2);
                        let slope = if l > 0.0 { d.scale(scale / l) } else { e1(n, scale) };
                        make_family(Loss::Linear { slope, offset: 0.0 }, domain.clone())
                    }),
                }
            }
            (Power::CompletelyAdaptive, FamilyKind::Quadratic) => {
                let offset = match &p.offset {
                    Some(v) => to_point(v, n, "offset")?,
                    None => e1(n, 0.25),
                };
                let domain = domain.clone();
                Adversary::CompletelyAdaptive {
                    horizon,
                    rule: Arc::new(move |_, x| {
                        make_family(Loss::Quadratic { curvature, center: offset.add(x) }, domain.clone())
                    }),
                }
            }
            (Power::CompletelyAdaptive, FamilyKind::MaxAffine) => {
                let domain = domain.clone();
                Adversary::CompletelyAdaptive {
                    horizon,
                    rule: Arc::new(move |_, x| {
                        let slopes = vec![e1(n, scale), e1(n, -scale)];
                        let intercepts = vec![-scale * x[0], scale * x[0]];
                        make_family(Loss::MaxAffine { slopes, intercepts }, domain.clone())
                    }),
                }
            }
            (Power::Adaptive, FamilyKind::MaxAffine) => {
                return Err(Error::Config("no adaptive max_affine rule is defined".into()))
            }
        };
        Ok(adversary)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn unit_domain(n: usize, e: f64) -> Domain {
        Domain::new(FeasibleSet::cube(n, 0.0, 1.0).unwrap(), e)
    }

    #[test]
    fn linear_eval_counts() {
        let mut o = make_family(
            Loss::Linear { slope: Point::new(vec![1.0, 2.0]), offset: 0.0 },
            unit_domain(2, 0.1),
        )
        .unwrap();
        assert_eq!(o.eval(&[1.0, 1.0]).unwrap(), 3.0);
        assert_eq!(o.queries().classical, 1);
        o.eval(&[0.0, 0.0]).unwrap();
        o.eval(&[0.5, 0.0]).unwrap();
        assert_eq!(o.queries().classical, 3);
        assert_eq!(o.queries().quantum, 0);
    }

    #[test]
    fn quadratic_minimum_and_alpha() {
        let a = Point::new(vec![0.2, 0.7]);
        let mut o =
            make_family(Loss::Quadratic { curvature: 3.0, center: a.clone() }, unit_domain(2, 0.0)).unwrap();
        assert_eq!(o.eval(&a).unwrap(), 0.0);
        assert_eq!(o.strong_convexity(), 3.0);
    }

    #[test]
    fn linear_lipschitz_is_slope_norm() {
        let o = make_family(
            Loss::Linear { slope: Point::new(vec![0.6, -0.8]), offset: 0.0 },
            unit_domain(2, 0.1),
        )
        .unwrap();
        assert!((o.lipschitz() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn max_affine_subgradient_at_kink() {
        let o = make_family(
            Loss::MaxAffine {
                slopes: vec![Point::new(vec![1.0, 0.0]), Point::new(vec![-1.0, 0.0])],
                intercepts: vec![0.0, 0.0],
            },
            unit_domain(2, 1.0),
        )
        .unwrap();
        let g = o.exact_gradient(&[0.0, 0.3]).unwrap();
        assert!(g[0].abs() <= 1.0 && g[1] == 0.0);
        // subgradient inequality holds everywhere for the chosen element
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..1000 {
            let y = o.domain().unwrap().sample(&mut rng);
            assert!(o.value_uncounted(&y) >= o.value_uncounted(&[0.0, 0.3]) + dot(&g, &y.sub(&[0.0, 0.3])) - 1e-12);
        }
    }

    #[test]
    fn rejects_negative_curvature() {
        let r = make_family(Loss::Quadratic { curvature: -1.0, center: Point::zeros(2) }, unit_domain(2, 0.0));
        assert!(matches!(r, Err(Error::NonConvex(_))));
        let r = make_family(Loss::MaxAffine { slopes: vec![], intercepts: vec![] }, unit_domain(2, 0.0));
        assert!(matches!(r, Err(Error::NonConvex(_))));
    }

    #[test]
    fn eval_outside_domain_fails() {
        let mut o = make_family(Loss::constant(2, 1.0), unit_domain(2, 0.1)).unwrap();
        assert!(matches!(o.eval(&[1.2, 0.5]), Err(Error::DomainViolation { .. })));
        assert_eq!(o.queries().classical, 0);
        assert!(o.eval(&[1.1, -0.1]).is_ok());
    }

    fn random_oracles(seed: u64) -> Vec<LossOracle> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut out = vec![];
        for n in 1..=4 {
            let domain = unit_domain(n, 0.3);
            for kind in [FamilyKind::Linear, FamilyKind::Quadratic, FamilyKind::MaxAffine] {
                let spec = AdversarySpec {
                    power: Power::Oblivious,
                    family: kind,
                    params: FamilyParams { scale: Some(2.0), curvature: Some(1.5), ..Default::default() },
                };
                if let Adversary::Oblivious(v) = spec.build(&domain, 3, &mut rng).unwrap() {
                    out.extend(v);
                }
            }
        }
        out
    }

    #[test]
    fn lipschitz_audit() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for o in random_oracles(1) {
            let d = o.domain().unwrap();
            for _ in 0..10_000 {
                let (x, y) = (d.sample(&mut rng), d.sample(&mut rng));
                let lhs = (o.value_uncounted(&x) - o.value_uncounted(&y)).abs();
                assert!(lhs <= o.lipschitz() * crate::geometry::distance(&x, &y, Norm::L2) + 1e-12);
            }
        }
    }

    #[test]
    fn strong_convexity_audit() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        for o in random_oracles(2).into_iter().filter(|o| o.strong_convexity() > 0.0) {
            let d = o.domain().unwrap();
            let a = o.strong_convexity();
            for _ in 0..10_000 {
                let (x, y) = (d.sample(&mut rng), d.sample(&mut rng));
                let g = o.exact_gradient(&x).unwrap();
                let diff = y.sub(&x);
                let rhs = o.value_uncounted(&x) + dot(&g, &diff) + 0.5 * a * dot(&diff, &diff);
                assert!(o.value_uncounted(&y) >= rhs - 1e-12);
            }
        }
    }

    #[test]
    fn gradient_matches_central_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let h = 1e-5;
        for o in random_oracles(3) {
            if matches!(o.loss(), Loss::MaxAffine { .. }) {
                continue;
            }
            let d = o.domain().unwrap();
            for _ in 0..100 {
                let x = d.sample(&mut rng);
                let g = o.exact_gradient(&x).unwrap();
                for j in 0..x.dim() {
                    let (mut xp, mut xm) = (x.clone(), x.clone());
                    xp[j] += h;
                    xm[j] -= h;
                    let fd = (o.value_uncounted(&xp) - o.value_uncounted(&xm)) / (2.0 * h);
                    assert!((fd - g[j]).abs() <= 1e-6 * g[j].abs().max(1.0), "{fd} vs {}", g[j]);
                }
            }
        }
    }

    #[test]
    fn oblivious_ignores_player() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let spec = AdversarySpec { power: Power::Oblivious, family: FamilyKind::Quadratic, params: Default::default() };
        let adv = spec.build(&unit_domain(2, 0.5), 4, &mut rng).unwrap();
        for t in 1..=4 {
            let a = adv.next(t, &[0.0, 0.0]).unwrap();
            let b = adv.next(t, &[0.9, 0.1]).unwrap();
            for x in [[0.1, 0.2], [0.7, 0.3]] {
                assert_eq!(a.value_uncounted(&x).to_bits(), b.value_uncounted(&x).to_bits());
            }
        }
    }

    #[test]
    fn chaser_loss_at_player_is_constant() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let spec = AdversarySpec {
            power: Power::CompletelyAdaptive,
            family: FamilyKind::Quadratic,
            params: FamilyParams { offset: Some(vec![0.3, -0.4]), curvature: Some(1.0), ..Default::default() },
        };
        let adv = spec.build(&unit_domain(2, 1.0), 10, &mut rng).unwrap();
        for t in 1..=10 {
            let x = [0.1 * t as f64 % 1.0, 0.5];
            let f = adv.next(t, &x).unwrap();
            assert!((f.value_uncounted(&x) - 0.125).abs() < 1e-15);
        }
    }

    #[test]
    fn adaptive_linear_alternates() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let spec = AdversarySpec {
            power: Power::Adaptive,
            family: FamilyKind::Linear,
            params: FamilyParams { scale: Some(2.0), ..Default::default() },
        };
        let adv = spec.build(&unit_domain(1, 0.1), 6, &mut rng).unwrap();
        for t in 1..=6 {
            let g = adv.next(t, &[0.5]).unwrap().exact_gradient(&[0.5]).unwrap();
            assert_eq!(g[0], if t % 2 == 1 { 2.0 } else { -2.0 });
            // rule ignores x_t
            let h = adv.next(t, &[0.1]).unwrap().exact_gradient(&[0.5]).unwrap();
            assert_eq!(g, h);
        }
    }

    #[test]
    fn round_range_checked() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let spec = AdversarySpec { power: Power::Oblivious, family: FamilyKind::Linear, params: Default::default() };
        let adv = spec.build(&unit_domain(1, 0.1), 3, &mut rng).unwrap();
        assert!(matches!(adv.next(0, &[0.5]), Err(Error::RoundOutOfRange { .. })));
        assert!(matches!(adv.next(4, &[0.5]), Err(Error::RoundOutOfRange { .. })));
    }
}
