//! Finite-scale length-space tests: nesting a half-radius ball inside
//! `B(a, ρ) ∩ B(x, r)`, and the lower mass bound on such intersections.
//!
//! All balls here are open.

use num_traits::Signed;

use crate::error::{Error, Result};
use crate::exact::{format_rational, int, to_f64, Rational};
use crate::measure::AtomicMeasure;
use crate::metric::{BallKind, FiniteMetricSpace, PointId};
use crate::record::Record;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NestCase {
    /// `d(a, x) < r/2`, so `c = x`.
    Near,
    /// `c` lies on a geodesic from `a` to `x` about `r/2` away from `x`.
    Geodesic,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NestWitness {
    pub center: PointId,
    /// `r/2 − ε` with `ε` the smallest positive distance.
    pub inner_radius: Rational,
    pub case: NestCase,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum NestOutcome {
    Found(NestWitness),
    /// No candidate passed; `candidates` is how many were tried.
    NotFound { candidates: usize },
}

impl NestOutcome {
    pub fn witness(&self) -> Option<&NestWitness> {
        match self {
            NestOutcome::Found(w) => Some(w),
            NestOutcome::NotFound { .. } => None,
        }
    }
}

/// Looks for `c` with `B(c, r/2 − ε) ⊆ B(a, ρ) ∩ B(x, r)`, where `ε` is the
/// smallest positive distance of the space.
///
/// If `d(a,x) < r/2` the candidate is `x` itself; otherwise the candidates
/// are the points `c` with `d(a,c) + d(c,x) = d(a,x)` and
/// `|d(c,x) − r/2| ≤ ε`, tried closest to `r/2` first. Every candidate is
/// verified by enumerating its ball.
pub fn ball_nest_witness(
    space: &FiniteMetricSpace,
    a: PointId,
    x: PointId,
    r: &Rational,
    rho: &Rational,
) -> Result<NestOutcome> {
    space.check_point(a)?;
    space.check_point(x)?;
    let dax = space.distance(a, x)?;
    if !r.is_positive() || r > rho || dax > *rho {
        return Err(Error::param(format!(
            "need 0 < r ≤ ρ and d(a,x) ≤ ρ (r={}, ρ={}, d(a,x)={})",
            format_rational(r),
            format_rational(rho),
            format_rational(&dax)
        )));
    }
    let eps = space.min_positive_distance().unwrap_or_else(|| int(1));
    let half = r / int(2);
    let inner = half - eps;
    let from_a = space.ticks_from(a)?;
    let from_x = space.ticks_from(x)?;
    let ta = space.radius_ticks(rho, BallKind::Open);
    let tx = space.radius_ticks(r, BallKind::Open);
    let inside = |y: usize| ta.is_some_and(|t| from_a[y] <= t) && tx.is_some_and(|t| from_x[y] <= t);
    let nested = |c: usize| -> bool {
        match space.radius_ticks(&inner, BallKind::Open) {
            None => true,
            Some(t) => space.within_ticks(c, t).into_iter().all(|(y, _)| inside(y)),
        }
    };
    if dax < half {
        let found = nested(x.0);
        return Ok(if found {
            NestOutcome::Found(NestWitness {
                center: x,
                inner_radius: inner,
                case: NestCase::Near,
            })
        } else {
            NestOutcome::NotFound { candidates: 1 }
        });
    }
    let d_ax = from_a[x.0];
    let mut candidates: Vec<(Rational, usize)> = (0..space.n_points())
        .filter(|&c| from_a[c] + from_x[c] == d_ax)
        .filter_map(|c| {
            let off = (space.ticks_to_length(from_x[c]) - half).abs();
            (off <= eps).then_some((off, c))
        })
        .collect();
    candidates.sort();
    for &(_, c) in &candidates {
        if nested(c) {
            return Ok(NestOutcome::Found(NestWitness {
                center: PointId(c),
                inner_radius: inner,
                case: NestCase::Geodesic,
            }));
        }
    }
    Ok(NestOutcome::NotFound {
        candidates: candidates.len(),
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct IntersectionCheck {
    pub a: PointId,
    pub x: PointId,
    pub r: Rational,
    pub rho: Rational,
    pub mass: Rational,
    /// `ν(B(x,r) ∩ B(a,ρ)) / r^λ`.
    pub ratio: f64,
    pub k_prime: f64,
}

impl IntersectionCheck {
    pub fn passed(&self) -> bool {
        self.ratio >= self.k_prime
    }

    pub fn to_record(&self) -> Record {
        Record::new()
            .with("a", self.a.0)
            .with("x", self.x.0)
            .with("r", format_rational(&self.r))
            .with("rho", format_rational(&self.rho))
            .with("mass", format_rational(&self.mass))
            .with("ratio", self.ratio)
            .with("k_prime", self.k_prime)
            .with("passed", self.passed())
    }
}

/// Compares `ν(B(x,r) ∩ B(a,ρ))` with `k′ r^λ`. In a length space with a
/// lower Ahlfors constant `k`, `k′ = 2^{-λ} k` works.
#[allow(clippy::too_many_arguments)]
pub fn intersection_bound_check(
    space: &FiniteMetricSpace,
    nu: &AtomicMeasure,
    lambda: f64,
    k_prime: f64,
    r_bound: &Rational,
    a: PointId,
    x: PointId,
    r: &Rational,
    rho: &Rational,
) -> Result<IntersectionCheck> {
    space.check_point(a)?;
    space.check_point(x)?;
    let dax = space.distance(a, x)?;
    if !r.is_positive() || r > rho || dax > *rho || r >= r_bound {
        return Err(Error::param("need 0 < r ≤ ρ, d(a,x) ≤ ρ and r < R"));
    }
    if nu.len() != space.n_points() {
        return Err(Error::param("measure and space sizes differ"));
    }
    let from_a = space.ticks_from(a)?;
    let ta = space.radius_ticks(rho, BallKind::Open);
    let mass: Rational = match space.radius_ticks(r, BallKind::Open) {
        None => Rational::from_integer(0),
        Some(t) => space
            .within_ticks(x.0, t)
            .into_iter()
            .filter(|&(y, _)| ta.is_some_and(|ta| from_a[y] <= ta))
            .map(|(y, _)| nu.mass(y))
            .sum(),
    };
    Ok(IntersectionCheck {
        a,
        x,
        r: *r,
        rho: *rho,
        ratio: to_f64(&mass) / to_f64(r).powf(lambda),
        mass,
        k_prime,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measure::normalized_counting_measure;
    use crate::spaces::{cantor_tree, GridSpec, SpaceSpec, TreeSpec};

    #[test]
    fn near_case_takes_x() {
        let s = SpaceSpec::Grid(GridSpec::new(&[9, 9])).build().unwrap();
        let out = ball_nest_witness(&s, PointId(40), PointId(41), &int(4), &int(4)).unwrap();
        let w = out.witness().unwrap();
        assert_eq!(w.center, PointId(41));
        assert_eq!(w.case, NestCase::Near);
    }

    #[test]
    fn grid_geodesic_case() {
        let s = SpaceSpec::Grid(GridSpec::new(&[11, 11])).build().unwrap();
        // a = (1,1), x = (5,5): d = 8 = ρ = r
        let (a, x) = (PointId(12), PointId(60));
        let out = ball_nest_witness(&s, a, x, &int(8), &int(8)).unwrap();
        let w = out.witness().unwrap();
        assert_eq!(w.case, NestCase::Geodesic);
        assert_eq!(s.distance(w.center, x).unwrap(), int(4));
        assert_eq!(s.distance(a, w.center).unwrap(), int(4));
        assert!(ball_nest_witness(&s, a, x, &int(9), &int(8)).is_err());
    }

    #[test]
    fn tree_has_no_witness() {
        let s = cantor_tree(&TreeSpec::new(4, 2, 3).unwrap()).unwrap();
        // leaves 0 and 15 differ at the first level: distance 1/3
        let (a, x) = (PointId(0), PointId(15));
        let (r, rho) = (Rational::new(1, 27), Rational::new(1, 3));
        let out = ball_nest_witness(&s, a, x, &r, &rho).unwrap();
        assert!(matches!(out, NestOutcome::NotFound { .. }));
        let nu = normalized_counting_measure(&s, &int(1)).unwrap();
        let c = intersection_bound_check(&s, &nu, 0.5, 0.1, &int(2), a, x, &r, &rho).unwrap();
        assert_eq!(c.mass, int(0));
        assert!(!c.passed());
    }

    #[test]
    fn intersection_reduces_to_ball_for_large_rho() {
        let s = SpaceSpec::Grid(GridSpec::new(&[9, 9])).build().unwrap();
        let nu = normalized_counting_measure(&s, &int(1)).unwrap();
        let c = intersection_bound_check(&s, &nu, 2.0, 0.25, &int(5), PointId(0), PointId(40), &int(3), &int(100)).unwrap();
        // open ball of radius 3 is the closed ball of radius 2: 13 points
        assert_eq!(c.mass, int(13));
        assert!(c.passed());
    }
}
