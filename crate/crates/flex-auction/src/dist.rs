//! Consumer type distributions: piecewise-linear valuation densities per
//! flexibility level, their CDFs, virtual valuations and inverses, plus
//! validators for the distributional assumptions the auction relies on
//! (generalized monotone hazard rate, negative virtual valuation at the
//! bottom of the support).
//!
//! Levels are 1-based throughout (`1..=k`), matching the auction's class
//! indexing. Goods and consumers are handled elsewhere.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance for the level-mass sum invariant.
const MASS_SUM_TOL: f64 = 1e-12;
/// Tolerance for the density normalization invariant.
const DENSITY_INT_TOL: f64 = 1e-10;
/// Hazard comparisons allow this much slack on the weak inequality.
const HAZARD_TOL: f64 = 1e-9;
/// Absolute tolerance (in valuation units) for virtual-valuation inversion.
const INVERSION_TOL: f64 = 1e-10;

/// A piecewise-linear probability density on a closed interval.
///
/// The density is stored unnormalized together with its cumulative raw
/// integral at every knot; evaluations divide by the total so that the CDF
/// is exactly 0 at the left endpoint and exactly 1 at the right endpoint.
///
/// Zero density values are permitted at the first knot and on a trailing
/// run of knots (a "dead tail" with no mass). Everywhere else the density
/// must be strictly positive, which keeps hazards and virtual valuations
/// well behaved on the carrying part of the support.
#[derive(Debug, Clone, PartialEq)]
pub struct PiecewiseLinearDensity {
    knots: Vec<f64>,
    values: Vec<f64>,
    cum: Vec<f64>,
    total: f64,
}

impl PiecewiseLinearDensity {
    pub fn new(knots: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if knots.len() != values.len() {
            return Err(Error::Model(format!(
                "density has {} knots but {} values",
                knots.len(),
                values.len()
            )));
        }
        if knots.len() < 2 {
            return Err(Error::Model("density needs at least two knots".into()));
        }
        if knots.iter().any(|x| !x.is_finite()) || values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Model("density knots and values must be finite".into()));
        }
        if knots.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Model("density knots must be strictly increasing".into()));
        }
        if values.iter().any(|&v| v < 0.0) {
            return Err(Error::Model("density values must be nonnegative".into()));
        }
        // Zeros are allowed only at the first knot and on a trailing run.
        let last_positive = match values.iter().rposition(|&v| v > 0.0) {
            Some(i) => i,
            None => return Err(Error::Model("density is identically zero".into())),
        };
        if last_positive == 0 {
            return Err(Error::Model("density carries no mass".into()));
        }
        if values[1..last_positive].iter().any(|&v| v == 0.0) {
            return Err(Error::Model(
                "density may vanish only at the first knot or on a trailing tail".into(),
            ));
        }

        let mut cum = Vec::with_capacity(knots.len());
        cum.push(0.0);
        for i in 1..knots.len() {
            let seg = 0.5 * (values[i] + values[i - 1]) * (knots[i] - knots[i - 1]);
            cum.push(cum[i - 1] + seg);
        }
        let total = *cum.last().unwrap();
        if (total - 1.0).abs() > DENSITY_INT_TOL {
            return Err(Error::Model(format!(
                "density integrates to {total:.12}, expected 1 within {DENSITY_INT_TOL:e}"
            )));
        }
        Ok(Self { knots, values, cum, total })
    }

    /// Uniform density on `[lo, hi]`.
    pub fn uniform(lo: f64, hi: f64) -> Result<Self> {
        let v = 1.0 / (hi - lo);
        Self::new(vec![lo, hi], vec![v, v])
    }

    /// Linear density on `[lo, hi]` with slope parameter `lambda` in
    /// `[-1, 1)`: proportional to `(1 + lambda) - 2*lambda*(x - lo)/(hi - lo)`.
    /// `lambda = 0` is uniform, `lambda = -1` is the increasing triangle,
    /// larger `lambda` means a higher hazard rate everywhere.
    pub fn linear_ramp(lo: f64, hi: f64, lambda: f64) -> Result<Self> {
        if !(-1.0..1.0).contains(&lambda) {
            return Err(Error::Model(format!("ramp parameter {lambda} outside [-1, 1)")));
        }
        let span = hi - lo;
        Self::new(vec![lo, hi], vec![(1.0 + lambda) / span, (1.0 - lambda) / span])
    }

    pub fn knots(&self) -> &[f64] {
        &self.knots
    }

    pub fn support(&self) -> (f64, f64) {
        (self.knots[0], *self.knots.last().unwrap())
    }

    fn segment_index(&self, x: f64) -> usize {
        // Rightmost segment whose left knot is <= x; x == last knot maps to
        // the final segment.
        match self.knots.binary_search_by(|k| k.partial_cmp(&x).unwrap()) {
            Ok(i) => i.min(self.knots.len() - 2),
            Err(i) => i - 1,
        }
    }

    /// Density value at `x` (normalized).
    pub fn pdf(&self, x: f64) -> f64 {
        let i = self.segment_index(x);
        let t = (x - self.knots[i]) / (self.knots[i + 1] - self.knots[i]);
        (self.values[i] + t * (self.values[i + 1] - self.values[i])) / self.total
    }

    /// Cumulative distribution at `x`; exactly 0 and 1 at the endpoints.
    pub fn cdf(&self, x: f64) -> f64 {
        let i = self.segment_index(x);
        let dx = x - self.knots[i];
        let width = self.knots[i + 1] - self.knots[i];
        let slope = (self.values[i + 1] - self.values[i]) / width;
        let raw = self.cum[i] + self.values[i] * dx + 0.5 * slope * dx * dx;
        (raw / self.total).clamp(0.0, 1.0)
    }

    /// Smallest `x` with `cdf(x) >= u`, for `u` in `[0, 1)`.
    pub fn inverse_cdf(&self, u: f64) -> f64 {
        let target = u * self.total;
        // First segment whose right cumulative reaches the target.
        let mut i = self
            .cum
            .partition_point(|&c| c < target)
            .saturating_sub(1)
            .min(self.knots.len() - 2);
        while self.cum[i + 1] < target {
            i += 1;
        }
        let d = target - self.cum[i];
        if d <= 0.0 {
            return self.knots[i];
        }
        let a = self.values[i];
        let width = self.knots[i + 1] - self.knots[i];
        let slope = (self.values[i + 1] - self.values[i]) / width;
        let disc = (a * a + 2.0 * slope * d).max(0.0);
        let t = 2.0 * d / (a + disc.sqrt());
        self.knots[i] + t.min(width)
    }
}

/// Raw, serializable form of a piecewise-linear density.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct DensitySpec {
    pub knots: Vec<f64>,
    pub values: Vec<f64>,
}

/// On-disk form of a consumer type model (JSON-compatible).
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct ModelFile {
    pub consumer_id: usize,
    pub k: usize,
    pub support: [f64; 2],
    pub level_mass: Vec<f64>,
    pub densities: Vec<DensitySpec>,
}

/// Joint distribution of one consumer's type `(valuation, flexibility level)`:
/// a probability mass per level and a conditional valuation density per level,
/// all sharing one support interval.
///
/// Models are immutable after construction and all methods are pure, so
/// shared read access from multiple threads is safe.
#[derive(Debug, Clone, PartialEq)]
pub struct ConsumerTypeModel {
    consumer_id: usize,
    support: (f64, f64),
    level_mass: Vec<f64>,
    densities: Vec<PiecewiseLinearDensity>,
}

impl ConsumerTypeModel {
    pub fn new(
        consumer_id: usize,
        support: (f64, f64),
        level_mass: Vec<f64>,
        densities: Vec<PiecewiseLinearDensity>,
    ) -> Result<Self> {
        let (lo, hi) = support;
        if !lo.is_finite() || !hi.is_finite() || lo >= hi {
            return Err(Error::Model(format!("support [{lo}, {hi}] is not a proper interval")));
        }
        if lo < 0.0 {
            return Err(Error::Model(format!("support lower bound {lo} must be nonnegative")));
        }
        if level_mass.is_empty() {
            return Err(Error::Model("at least one flexibility level is required".into()));
        }
        if level_mass.len() != densities.len() {
            return Err(Error::Model(format!(
                "{} level masses but {} conditional densities",
                level_mass.len(),
                densities.len()
            )));
        }
        if level_mass.iter().any(|&p| !(0.0..=1.0).contains(&p)) {
            return Err(Error::Model("level masses must lie in [0, 1]".into()));
        }
        let mass_sum: f64 = level_mass.iter().sum();
        if (mass_sum - 1.0).abs() > MASS_SUM_TOL {
            return Err(Error::Model(format!(
                "level masses sum to {mass_sum:.15}, expected 1 within {MASS_SUM_TOL:e}"
            )));
        }
        for (l, d) in densities.iter().enumerate() {
            let (dlo, dhi) = d.support();
            if dlo != lo || dhi != hi {
                return Err(Error::Model(format!(
                    "level {} density spans [{dlo}, {dhi}] but the model support is [{lo}, {hi}]",
                    l + 1
                )));
            }
        }
        Ok(Self { consumer_id, support, level_mass, densities })
    }

    pub fn from_file_spec(spec: &ModelFile) -> Result<Self> {
        if spec.k != spec.level_mass.len() {
            return Err(Error::Model(format!(
                "declared k = {} but {} level masses given",
                spec.k,
                spec.level_mass.len()
            )));
        }
        let densities = spec
            .densities
            .iter()
            .map(|d| PiecewiseLinearDensity::new(d.knots.clone(), d.values.clone()))
            .collect::<Result<Vec<_>>>()?;
        Self::new(
            spec.consumer_id,
            (spec.support[0], spec.support[1]),
            spec.level_mass.clone(),
            densities,
        )
    }

    pub fn to_file_spec(&self) -> ModelFile {
        ModelFile {
            consumer_id: self.consumer_id,
            k: self.k(),
            support: [self.support.0, self.support.1],
            level_mass: self.level_mass.clone(),
            densities: self
                .densities
                .iter()
                .map(|d| DensitySpec { knots: d.knots.clone(), values: d.values.clone() })
                .collect(),
        }
    }

    /// Model with the same uniform valuation density at every level and
    /// equal level masses.
    pub fn uniform(consumer_id: usize, k: usize, lo: f64, hi: f64) -> Result<Self> {
        let d = PiecewiseLinearDensity::uniform(lo, hi)?;
        Self::new(consumer_id, (lo, hi), vec![1.0 / k as f64; k], vec![d; k])
    }

    /// Model whose level-`l` density is the linear ramp with parameter
    /// `lambdas[l-1]`; nondecreasing parameters give a model satisfying the
    /// weak hazard-order condition, strictly increasing ones the strict form.
    pub fn linear_ramp_family(
        consumer_id: usize,
        lo: f64,
        hi: f64,
        lambdas: &[f64],
        level_mass: Vec<f64>,
    ) -> Result<Self> {
        let densities = lambdas
            .iter()
            .map(|&l| PiecewiseLinearDensity::linear_ramp(lo, hi, l))
            .collect::<Result<Vec<_>>>()?;
        Self::new(consumer_id, (lo, hi), level_mass, densities)
    }

    pub fn consumer_id(&self) -> usize {
        self.consumer_id
    }

    pub fn k(&self) -> usize {
        self.level_mass.len()
    }

    pub fn support(&self) -> (f64, f64) {
        self.support
    }

    pub fn level_mass(&self) -> &[f64] {
        &self.level_mass
    }

    pub fn density(&self, level: usize) -> Result<&PiecewiseLinearDensity> {
        if level == 0 || level > self.k() {
            return Err(Error::Domain(format!(
                "level {level} outside 1..={} for consumer {}",
                self.k(),
                self.consumer_id
            )));
        }
        Ok(&self.densities[level - 1])
    }

    fn check_theta(&self, theta: f64) -> Result<()> {
        let (lo, hi) = self.support;
        if !(lo..=hi).contains(&theta) {
            return Err(Error::Domain(format!(
                "valuation {theta} outside support [{lo}, {hi}] of consumer {}",
                self.consumer_id
            )));
        }
        Ok(())
    }

    /// Conditional CDF `F(theta | level)`.
    pub fn cdf(&self, level: usize, theta: f64) -> Result<f64> {
        self.check_theta(theta)?;
        Ok(self.density(level)?.cdf(theta))
    }

    /// Conditional density `f(theta | level)`.
    pub fn pdf(&self, level: usize, theta: f64) -> Result<f64> {
        self.check_theta(theta)?;
        Ok(self.density(level)?.pdf(theta))
    }

    /// Virtual valuation `theta - (1 - F(theta|level)) / f(theta|level)`.
    ///
    /// At the top of the support (and anywhere the conditional distribution
    /// has no remaining mass) the hazard correction vanishes in the limit,
    /// so the virtual valuation is `theta` itself. A zero density at the
    /// bottom knot yields `-inf`, which trivially satisfies the negative-
    /// reserve assumption.
    pub fn virtual_valuation(&self, level: usize, theta: f64) -> Result<f64> {
        self.check_theta(theta)?;
        let d = self.density(level)?;
        let tail = 1.0 - d.cdf(theta);
        if tail <= 0.0 {
            return Ok(theta);
        }
        Ok(theta - tail / d.pdf(theta))
    }

    /// Smallest valuation whose virtual valuation reaches `w`, by bisection
    /// to an absolute tolerance of 1e-10.
    ///
    /// Callers are expected to have checked the weak hazard condition, which
    /// guarantees the virtual valuation is nondecreasing. Targets below the
    /// attainable range clamp to the bottom of the support; targets above it
    /// are a range error (the mechanism maps that to "cannot win").
    pub fn inverse_virtual_valuation(&self, level: usize, w: f64) -> Result<f64> {
        let (lo, hi) = self.support;
        let w_max = self.virtual_valuation(level, hi)?;
        if w > w_max {
            return Err(Error::Range { target: w, max: w_max });
        }
        if self.virtual_valuation(level, lo)? >= w {
            return Ok(lo);
        }
        let mut below = lo;
        let mut above = hi;
        while above - below > INVERSION_TOL {
            let mid = 0.5 * (below + above);
            if self.virtual_valuation(level, mid)? >= w {
                above = mid;
            } else {
                below = mid;
            }
        }
        Ok(above)
    }

    /// Valuation at which the virtual valuation crosses zero: the minimum
    /// winning bid absent competition.
    pub fn reserve_price(&self, level: usize) -> Result<f64> {
        self.inverse_virtual_valuation(level, 0.0).map_err(|e| match e {
            Error::Range { max, .. } => Error::Model(format!(
                "virtual valuation of consumer {} level {level} stays below zero (max {max}); \
                 this consumer can never be allocated",
                self.consumer_id
            )),
            other => other,
        })
    }

    /// True per level iff the virtual valuation is negative at the bottom of
    /// the support (the negative-reserve assumption).
    pub fn validate_negative_reserve(&self) -> Vec<bool> {
        let lo = self.support.0;
        (1..=self.k())
            .map(|l| self.virtual_valuation(l, lo).expect("support bottom is in support") < 0.0)
            .collect()
    }

    /// Hazard rate `f / (1 - F)`, taken as `+inf` where no mass remains.
    pub fn hazard(&self, level: usize, theta: f64) -> Result<f64> {
        self.check_theta(theta)?;
        let d = self.density(level)?;
        let tail = 1.0 - d.cdf(theta);
        if tail <= 0.0 {
            return Ok(f64::INFINITY);
        }
        Ok(d.pdf(theta) / tail)
    }

    /// Grid check of the generalized monotone hazard rate condition.
    ///
    /// Evaluates the hazard on `grid_points` equally spaced valuations
    /// (excluding the top of the support, where the hazard diverges) for
    /// every level, and checks that the hazard is nondecreasing along the
    /// componentwise order on (valuation, level). The strict variant
    /// additionally requires a strict increase whenever the level strictly
    /// increases. Violations are reported, never thrown.
    pub fn validate_hazard(&self, grid_points: usize) -> Result<HazardReport> {
        if grid_points < 16 {
            return Err(Error::Domain(format!("hazard grid needs >= 16 points, got {grid_points}")));
        }
        let (lo, hi) = self.support;
        let k = self.k();
        let step = (hi - lo) / grid_points as f64;
        let thetas: Vec<f64> = (0..grid_points).map(|j| lo + j as f64 * step).collect();
        let hazards: Vec<Vec<f64>> = (1..=k)
            .map(|l| thetas.iter().map(|&t| self.hazard(l, t).unwrap()).collect())
            .collect();

        // Running prefix maxima along the componentwise order, with argmax
        // tracking: best[j] after processing level l holds the max hazard
        // over {theta' <= theta_j, level' <= l}.
        let mut weak_worst: Option<HazardViolation> = None;
        let mut strict_worst: Option<HazardViolation> = None;
        let mut best: Vec<(f64, usize, usize)> = vec![(f64::NEG_INFINITY, 0, 0); grid_points];
        for l in 0..k {
            let mut row_best = (f64::NEG_INFINITY, 0usize, 0usize);
            for j in 0..grid_points {
                let h = hazards[l][j];
                // Strict comparison against strictly lower levels.
                if l > 0 {
                    let pred = best[j];
                    if h <= pred.0 {
                        let v = HazardViolation {
                            level: l + 1,
                            theta: thetas[j],
                            other_level: pred.1 + 1,
                            other_theta: thetas[pred.2],
                            magnitude: pred.0 - h,
                        };
                        if strict_worst.as_ref().map_or(true, |w| v.magnitude > w.magnitude) {
                            strict_worst = Some(v);
                        }
                    }
                }
                if row_best.0 < h {
                    row_best = (h, l, j);
                }
                let pred = if row_best.0 >= best[j].0 { row_best } else { best[j] };
                if pred.0 > h + HAZARD_TOL {
                    let v = HazardViolation {
                        level: l + 1,
                        theta: thetas[j],
                        other_level: pred.1 + 1,
                        other_theta: thetas[pred.2],
                        magnitude: pred.0 - h,
                    };
                    if weak_worst.as_ref().map_or(true, |w| v.magnitude > w.magnitude) {
                        weak_worst = Some(v);
                    }
                }
                best[j] = pred;
            }
        }

        Ok(HazardReport {
            weak_ok: weak_worst.is_none(),
            strict_ok: strict_worst.is_none(),
            worst_violation: weak_worst.or(strict_worst),
            grid_resolution: grid_points,
        })
    }

    /// Draw one `(valuation, level)` type: the level from the level masses,
    /// then the valuation by inverse-CDF sampling of that level's density.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> (f64, usize) {
        let u_level: f64 = rng.gen();
        let mut acc = 0.0;
        let mut level = self.k();
        for (i, &p) in self.level_mass.iter().enumerate() {
            acc += p;
            if u_level < acc {
                level = i + 1;
                break;
            }
        }
        let u_val: f64 = rng.gen();
        let theta = self.densities[level - 1].inverse_cdf(u_val);
        (theta, level)
    }
}

/// One offending hazard comparison: the pair `(theta, level)` dominating
/// `(other_theta, other_level)` componentwise whose hazards compare the
/// wrong way, and by how much.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HazardViolation {
    pub level: usize,
    pub theta: f64,
    pub other_level: usize,
    pub other_theta: f64,
    pub magnitude: f64,
}

/// Outcome of the grid-based generalized monotone hazard rate check.
///
/// `worst_violation` carries the worst weak violation when the weak
/// condition fails, otherwise the worst strict shortfall when only the
/// strict condition fails, otherwise `None`. Models with a single level
/// have no strictly-ordered level pairs, so `strict_ok` holds vacuously.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HazardReport {
    pub weak_ok: bool,
    pub strict_ok: bool,
    pub worst_violation: Option<HazardViolation>,
    pub grid_resolution: usize,
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn uniform01(k: usize) -> ConsumerTypeModel {
        ConsumerTypeModel::uniform(0, k, 0.0, 1.0).unwrap()
    }

    fn triangular01() -> ConsumerTypeModel {
        // f(theta) = 2 theta on [0, 1].
        let d = PiecewiseLinearDensity::new(vec![0.0, 1.0], vec![0.0, 2.0]).unwrap();
        ConsumerTypeModel::new(0, (0.0, 1.0), vec![1.0], vec![d]).unwrap()
    }

    /// Composite-Simpson quadrature of the stored density, used as an
    /// independent oracle against the closed-form CDF.
    fn quadrature_cdf(model: &ConsumerTypeModel, level: usize, theta: f64) -> f64 {
        let lo = model.support().0;
        let n = 20_000;
        let h = (theta - lo) / n as f64;
        let f = |x: f64| model.pdf(level, x).unwrap();
        let mut s = f(lo) + f(theta);
        for i in 1..n {
            let x = lo + i as f64 * h;
            s += if i % 2 == 0 { 2.0 * f(x) } else { 4.0 * f(x) };
        }
        s * h / 3.0
    }

    #[test]
    fn cdf_uniform_interior() {
        let m = uniform01(1);
        assert!((m.cdf(1, 0.4).unwrap() - 0.4).abs() < 1e-15);
    }

    #[test]
    fn cdf_boundaries_exact() {
        let m = triangular01();
        assert_eq!(m.cdf(1, 0.0).unwrap(), 0.0);
        assert_eq!(m.cdf(1, 1.0).unwrap(), 1.0);
    }

    #[test]
    fn cdf_triangular_matches_quadrature() {
        let m = triangular01();
        // Analytic F(theta) = theta^2, so F(0.5) = 0.25.
        let got = m.cdf(1, 0.5).unwrap();
        assert!((got - 0.25).abs() < 1e-12);
        assert!((got - quadrature_cdf(&m, 1, 0.5)).abs() < 1e-9);
    }

    #[test]
    fn cdf_rejects_bad_inputs() {
        let m = uniform01(1);
        assert!(matches!(m.cdf(1, 1.5), Err(Error::Domain(_))));
        assert!(matches!(m.cdf(0, 0.5), Err(Error::Domain(_))));
        assert!(matches!(m.cdf(2, 0.5), Err(Error::Domain(_))));
    }

    #[test]
    fn virtual_valuation_uniform() {
        let m = uniform01(1);
        // w(theta) = 2 theta - 1.
        assert!((m.virtual_valuation(1, 0.7).unwrap() - 0.4).abs() < 1e-12);
        assert_eq!(m.virtual_valuation(1, 1.0).unwrap(), 1.0);
    }

    #[test]
    fn virtual_valuation_triangular() {
        let m = triangular01();
        // w(0.5) = 0.5 - (1 - 0.25) / 1.0 = -0.25.
        assert!((m.virtual_valuation(1, 0.5).unwrap() + 0.25).abs() < 1e-12);
        // Density vanishes at the bottom knot, so the hazard correction blows up.
        assert_eq!(m.virtual_valuation(1, 0.0).unwrap(), f64::NEG_INFINITY);
    }

    #[test]
    fn inverse_virtual_valuation_uniform() {
        let m = uniform01(1);
        assert!((m.inverse_virtual_valuation(1, 0.0).unwrap() - 0.5).abs() < 1e-9);
        assert!((m.inverse_virtual_valuation(1, 0.2).unwrap() - 0.6).abs() < 1e-9);
        // Below range clamps, above range errors.
        assert_eq!(m.inverse_virtual_valuation(1, -5.0).unwrap(), 0.0);
        assert!(matches!(m.inverse_virtual_valuation(1, 1.5), Err(Error::Range { .. })));
    }

    #[test]
    fn inverse_virtual_valuation_triangular() {
        let m = triangular01();
        // Root of theta - (1 - theta^2) / (2 theta): theta = 1/sqrt(3).
        let expected = 1.0 / 3.0f64.sqrt();
        assert!((m.inverse_virtual_valuation(1, 0.0).unwrap() - expected).abs() < 1e-9);
    }

    #[test]
    fn reserve_prices() {
        assert!((uniform01(1).reserve_price(1).unwrap() - 0.5).abs() < 1e-9);
        // Uniform on [0.5, 2]: w(theta) = 2 theta - 2, root at 1.
        let m = ConsumerTypeModel::uniform(0, 1, 0.5, 2.0).unwrap();
        assert!((m.reserve_price(1).unwrap() - 1.0).abs() < 1e-9);
        let t = triangular01();
        assert!((t.reserve_price(1).unwrap() - 1.0 / 3.0f64.sqrt()).abs() < 1e-9);
    }

    #[test]
    fn negative_reserve_assumption() {
        assert_eq!(uniform01(2).validate_negative_reserve(), vec![true, true]);
        let shifted = ConsumerTypeModel::uniform(0, 1, 0.5, 2.0).unwrap();
        assert_eq!(shifted.validate_negative_reserve(), vec![true]);
        // Uniform on [3, 4]: w(3) = 3 - 1 = 2 > 0.
        let high = ConsumerTypeModel::uniform(0, 1, 3.0, 4.0).unwrap();
        assert_eq!(high.validate_negative_reserve(), vec![false]);
    }

    #[test]
    fn hazard_identical_levels_weak_not_strict() {
        let report = uniform01(2).validate_hazard(64).unwrap();
        assert!(report.weak_ok);
        assert!(!report.strict_ok);
        assert!(report.worst_violation.is_some());
    }

    #[test]
    fn hazard_ordered_tail_model_passes_weak() {
        // Level 1 uniform on [0,1]; level 2 uniform on [0, 0.8] with a dead
        // tail above (represented by a steep ramp of negligible mass).
        let eps = 1e-9;
        let c = 1.0 / (0.8 + 0.5 * eps);
        let lvl2 = PiecewiseLinearDensity::new(
            vec![0.0, 0.8, 0.8 + eps, 1.0],
            vec![c, c, 0.0, 0.0],
        )
        .unwrap();
        let lvl1 = PiecewiseLinearDensity::uniform(0.0, 1.0).unwrap();
        let m =
            ConsumerTypeModel::new(0, (0.0, 1.0), vec![0.5, 0.5], vec![lvl1, lvl2]).unwrap();
        let report = m.validate_hazard(256).unwrap();
        assert!(report.weak_ok, "worst: {:?}", report.worst_violation);
    }

    #[test]
    fn hazard_reversed_order_fails_weak() {
        // Level 2's hazard is dominated by level 1's: reversed order.
        let m = ConsumerTypeModel::linear_ramp_family(
            0,
            0.0,
            1.0,
            &[0.8, 0.0],
            vec![0.5, 0.5],
        )
        .unwrap();
        let report = m.validate_hazard(256).unwrap();
        assert!(!report.weak_ok);
        let v = report.worst_violation.unwrap();
        assert!(v.magnitude > 0.0);
    }

    #[test]
    fn hazard_strictly_ordered_ramps() {
        let m = ConsumerTypeModel::linear_ramp_family(
            0,
            0.0,
            1.0,
            &[0.0, 0.6],
            vec![0.5, 0.5],
        )
        .unwrap();
        let report = m.validate_hazard(256).unwrap();
        assert!(report.weak_ok);
        assert!(report.strict_ok);
    }

    #[test]
    fn hazard_grid_too_coarse() {
        assert!(matches!(uniform01(1).validate_hazard(8), Err(Error::Domain(_))));
    }

    #[test]
    fn sampling_degenerate_mass() {
        let d = PiecewiseLinearDensity::uniform(0.0, 1.0).unwrap();
        let m = ConsumerTypeModel::new(0, (0.0, 1.0), vec![1.0, 0.0], vec![d.clone(), d])
            .unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..200 {
            assert_eq!(m.sample(&mut rng).1, 1);
        }
    }

    #[test]
    fn sampling_uniform_kolmogorov() {
        let m = uniform01(1);
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let n = 100_000;
        let mut draws: Vec<f64> = (0..n).map(|_| m.sample(&mut rng).0).collect();
        draws.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let ks = draws
            .iter()
            .enumerate()
            .map(|(i, &x)| {
                let lo = i as f64 / n as f64;
                let hi = (i + 1) as f64 / n as f64;
                (x - lo).abs().max((x - hi).abs())
            })
            .fold(0.0f64, f64::max);
        assert!(ks < 0.01, "KS distance {ks}");
    }

    #[test]
    fn sampling_deterministic_under_seed() {
        let m = triangular01();
        let mut a = ChaCha8Rng::seed_from_u64(99);
        let mut b = ChaCha8Rng::seed_from_u64(99);
        for _ in 0..50 {
            let (ta, la) = m.sample(&mut a);
            let (tb, lb) = m.sample(&mut b);
            assert_eq!(ta.to_bits(), tb.to_bits());
            assert_eq!(la, lb);
        }
    }

    #[test]
    fn model_construction_errors() {
        assert!(PiecewiseLinearDensity::new(vec![0.0, 1.0], vec![1.0]).is_err());
        assert!(PiecewiseLinearDensity::new(vec![0.0, 0.0], vec![1.0, 1.0]).is_err());
        assert!(PiecewiseLinearDensity::new(vec![0.0, 1.0], vec![-1.0, 3.0]).is_err());
        // Interior zero value.
        assert!(PiecewiseLinearDensity::new(
            vec![0.0, 0.4, 0.6, 1.0],
            vec![1.0, 0.0, 1.0, 3.0]
        )
        .is_err());
        // Does not integrate to one.
        assert!(PiecewiseLinearDensity::new(vec![0.0, 1.0], vec![2.0, 2.0]).is_err());
        // Mass vector off by more than the tolerance.
        let d = PiecewiseLinearDensity::uniform(0.0, 1.0).unwrap();
        assert!(ConsumerTypeModel::new(0, (0.0, 1.0), vec![0.6, 0.5], vec![d.clone(), d.clone()])
            .is_err());
        // Density support disagrees with the model support.
        assert!(ConsumerTypeModel::new(0, (0.0, 2.0), vec![1.0], vec![d]).is_err());
    }

    #[test]
    fn file_spec_round_trip() {
        let m = ConsumerTypeModel::linear_ramp_family(3, 0.0, 2.0, &[0.0, 0.5], vec![0.25, 0.75])
            .unwrap();
        let spec = m.to_file_spec();
        let json = serde_json::to_string(&spec).unwrap();
        let back: ModelFile = serde_json::from_str(&json).unwrap();
        assert_eq!(ConsumerTypeModel::from_file_spec(&back).unwrap(), m);
    }

    #[test]
    fn cdf_derivative_matches_density_at_interior_knots() {
        let knots = vec![0.0, 0.3, 0.7, 1.0];
        let raw = [0.5, 1.5, 1.2, 0.6];
        let total: f64 = knots
            .windows(2)
            .zip(raw.windows(2))
            .map(|(x, v)| 0.5 * (v[0] + v[1]) * (x[1] - x[0]))
            .sum();
        let d = PiecewiseLinearDensity::new(knots, raw.iter().map(|v| v / total).collect())
            .unwrap();
        let m = ConsumerTypeModel::new(0, (0.0, 1.0), vec![1.0], vec![d]).unwrap();
        let h = 1e-7;
        for &x in &[0.3, 0.7] {
            let num = (m.cdf(1, x + h).unwrap() - m.cdf(1, x - h).unwrap()) / (2.0 * h);
            assert!((num - m.pdf(1, x).unwrap()).abs() < 1e-6);
        }
    }
}
