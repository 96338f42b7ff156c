//! Exact lower convex envelopes of sampled NDT curves.
//!
//! Time sharing between two schemes at cache sizes `mu_a < mu_b` achieves
//! every point on the chord between them, so the achievable curve is the
//! lower convex hull of the per-scheme points.

use num_traits::Signed;
use serde::{Deserialize, Serialize};

use crate::model::{serde_rational, to_f64, Rational};

/// Lower hull of `points` (Andrew's monotone chain, lower half only).
///
/// Duplicate abscissae keep the smallest ordinate. Collinear interior
/// points are dropped.
pub fn lower_hull(points: &[(Rational, Rational)]) -> Vec<(Rational, Rational)> {
    let mut pts: Vec<_> = points.to_vec();
    pts.sort();
    pts.dedup_by(|b, a| a.0 == b.0);
    let mut hull: Vec<(Rational, Rational)> = Vec::with_capacity(pts.len());
    for p in pts {
        while hull.len() >= 2 {
            let a = hull[hull.len() - 2];
            let b = hull[hull.len() - 1];
            // keep b only if a -> b -> p turns counter-clockwise
            let cross = (b.0 - a.0) * (p.1 - a.1) - (b.1 - a.1) * (p.0 - a.0);
            if cross.is_positive() {
                break;
            }
            hull.pop();
        }
        hull.push(p);
    }
    hull
}

/// Evaluates a hull (or any sorted polyline) at `x` by linear interpolation.
pub fn interpolate(breakpoints: &[(Rational, Rational)], x: Rational) -> Option<Rational> {
    let first = breakpoints.first()?;
    let last = breakpoints.last()?;
    if x < first.0 || x > last.0 {
        return None;
    }
    let idx = breakpoints.partition_point(|p| p.0 < x);
    let hi = breakpoints[idx];
    if hi.0 == x {
        return Some(hi.1);
    }
    let lo = breakpoints[idx - 1];
    Some(lo.1 + (hi.1 - lo.1) * (x - lo.0) / (hi.0 - lo.0))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Breakpoint {
    #[serde(with = "serde_rational")]
    pub mu: Rational,
    #[serde(with = "serde_rational")]
    pub ndt: Rational,
}

/// Piecewise-linear NDT as a function of `mu` for fixed `(k_t, k_r, n_t, r)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PiecewiseLinearNdt {
    pub breakpoints: Vec<Breakpoint>,
}

impl PiecewiseLinearNdt {
    /// Takes the lower convex envelope of sampled `(mu, ndt)` points.
    pub fn envelope_of(points: &[(Rational, Rational)]) -> Self {
        Self::from_sorted(lower_hull(points))
    }

    /// Wraps an already sorted polyline without re-hulling it.
    pub fn from_sorted(points: Vec<(Rational, Rational)>) -> Self {
        Self { breakpoints: points.into_iter().map(|(mu, ndt)| Breakpoint { mu, ndt }).collect() }
    }

    fn pairs(&self) -> Vec<(Rational, Rational)> {
        self.breakpoints.iter().map(|b| (b.mu, b.ndt)).collect()
    }

    pub fn eval(&self, mu: Rational) -> Option<Rational> {
        interpolate(&self.pairs(), mu)
    }

    pub fn eval_f64(&self, mu: Rational) -> Option<f64> {
        self.eval(mu).map(|v| to_f64(&v))
    }

    pub fn domain(&self) -> Option<(Rational, Rational)> {
        Some((self.breakpoints.first()?.mu, self.breakpoints.last()?.mu))
    }

    /// True when slopes are non-decreasing and never positive.
    pub fn is_convex_non_increasing(&self) -> bool {
        let slopes: Vec<Rational> =
            self.breakpoints.windows(2).map(|w| (w[1].ndt - w[0].ndt) / (w[1].mu - w[0].mu)).collect();
        slopes.iter().all(|s| !s.is_positive()) && slopes.windows(2).all(|w| w[0] <= w[1])
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{int, ratio};

    #[test]
    fn hull_drops_points_above_chord() {
        let pts = vec![(int(0), int(4)), (int(1), int(3)), (int(2), int(1)), (int(3), int(1))];
        let h = lower_hull(&pts);
        assert_eq!(h, vec![(int(0), int(4)), (int(2), int(1)), (int(3), int(1))]);
    }

    #[test]
    fn hull_keeps_min_on_duplicate_abscissa() {
        let pts = vec![(int(1), int(5)), (int(1), int(2)), (int(0), int(3))];
        let h = lower_hull(&pts);
        assert_eq!(h, vec![(int(0), int(3)), (int(1), int(2))]);
    }

    #[test]
    fn interpolation_inside_and_outside() {
        let h = vec![(int(1), int(2)), (int(2), int(1))];
        assert_eq!(interpolate(&h, ratio(3, 2)), Some(ratio(3, 2)));
        assert_eq!(interpolate(&h, int(2)), Some(int(1)));
        assert_eq!(interpolate(&h, int(0)), None);
        assert_eq!(interpolate(&[], int(0)), None);
    }

    #[test]
    fn convexity_check() {
        let f = PiecewiseLinearNdt::envelope_of(&[(int(0), int(3)), (int(1), int(2)), (int(2), int(1))]);
        assert!(f.is_convex_non_increasing());
        let g = PiecewiseLinearNdt::from_sorted(vec![(int(0), int(3)), (int(1), int(1)), (int(2), int(2))]);
        assert!(!g.is_convex_non_increasing());
    }
}
