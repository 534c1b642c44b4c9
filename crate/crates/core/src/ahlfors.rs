//! Ahlfors regularity certificates `k r^λ ≤ ν(B(x,r)) ≤ K r^λ`, the net
//! counting bounds they imply, and the covering/packing bracket between
//! the net Hausdorff surrogate and ν on a ball.

use std::fmt::Write as _;

use num_traits::Signed;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::exact::{format_rational, int, to_f64, Rational};
use crate::measure::AtomicMeasure;
use crate::metric::{BallKind, BallSpec, FiniteMetricSpace, PointId};
use crate::nets::{greedy_net_of, Net, NetOrder};
use crate::record::Record;

#[derive(Clone, Debug, PartialEq)]
pub struct AhlforsRow {
    pub center: PointId,
    pub radius: Rational,
    pub mass: Rational,
    /// `mass / r^λ`.
    pub ratio: f64,
}

#[derive(Clone, Debug)]
pub struct AhlforsReport {
    pub lambda: f64,
    pub r_bound: Rational,
    pub kind: BallKind,
    pub k: f64,
    pub big_k: f64,
    pub k_witness: (PointId, Rational),
    pub big_k_witness: (PointId, Rational),
    pub rows: Vec<AhlforsRow>,
    /// Caller's `(k, K)` band, if any.
    pub targets: Option<(f64, f64)>,
    /// Rows outside the target band.
    pub failures: Vec<usize>,
}

impl AhlforsReport {
    pub fn spread(&self) -> f64 {
        self.big_k / self.k
    }

    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }

    pub fn to_record(&self) -> Record {
        let mut r = Record::new()
            .with("lambda", self.lambda)
            .with("R", format_rational(&self.r_bound))
            .with("ball", self.kind)
            .with("k", self.k)
            .with("K", self.big_k)
            .with("spread", self.spread())
            .with("k_center", self.k_witness.0 .0)
            .with("k_radius", format_rational(&self.k_witness.1))
            .with("K_center", self.big_k_witness.0 .0)
            .with("K_radius", format_rational(&self.big_k_witness.1))
            .with("n_balls", self.rows.len());
        if let Some((lo, hi)) = self.targets {
            r.push("k_target", lo);
            r.push("K_target", hi);
        }
        r.push("failures", self.failures.len());
        if let Some(&i) = self.failures.first() {
            let row = &self.rows[i];
            r.push("first_failure", format!("{}@{}", row.center.0, format_rational(&row.radius)));
        }
        r.push("passed", self.passed());
        r
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("center,r,mass,ratio\n");
        for row in &self.rows {
            let _ = writeln!(
                out,
                "{},{},{},{}",
                row.center.0,
                format_rational(&row.radius),
                format_rational(&row.mass),
                row.ratio
            );
        }
        out
    }
}

/// Measures `ν(B(x, r))` for every center and radius and reports the
/// extreme ratios `ν(B)/r^λ`. With `targets = Some((k, K))` each ball is
/// also checked against that band.
#[allow(clippy::too_many_arguments)]
pub fn ahlfors_check(
    space: &FiniteMetricSpace,
    nu: &AtomicMeasure,
    lambda: f64,
    r_bound: &Rational,
    centers: &[PointId],
    radii: &[Rational],
    kind: BallKind,
    targets: Option<(f64, f64)>,
) -> Result<AhlforsReport> {
    if centers.is_empty() || radii.is_empty() {
        return Err(Error::param("need at least one center and one radius"));
    }
    if let Some(r) = radii.iter().find(|r| !r.is_positive() || *r >= r_bound) {
        return Err(Error::param(format!("radius {} outside ]0, R[", format_rational(r))));
    }
    if nu.len() != space.n_points() {
        return Err(Error::param("measure and space sizes differ"));
    }
    for &c in centers {
        space.check_point(c)?;
    }
    let thresholds: Vec<Option<u64>> = radii.iter().map(|r| space.radius_ticks(r, kind)).collect();
    let powers: Vec<f64> = radii.iter().map(|r| to_f64(r).powf(lambda)).collect();
    let rows: Vec<AhlforsRow> = centers
        .par_iter()
        .flat_map_iter(|&c| {
            let masses = nu.ball_masses(space, c.0, &thresholds);
            masses
                .into_iter()
                .zip(radii)
                .zip(&powers)
                .map(move |((mass, r), p)| AhlforsRow {
                    center: c,
                    radius: *r,
                    ratio: to_f64(&mass) / p,
                    mass,
                })
                .collect::<Vec<_>>()
        })
        .collect();
    if let Some(z) = rows.iter().find(|row| !row.mass.is_positive()) {
        return Err(Error::Degenerate(format!(
            "ball B({}, {}) has zero mass",
            z.center.0,
            format_rational(&z.radius)
        )));
    }
    let lo = rows
        .iter()
        .min_by(|a, b| a.ratio.total_cmp(&b.ratio))
        .expect("rows nonempty");
    let hi = rows
        .iter()
        .max_by(|a, b| a.ratio.total_cmp(&b.ratio).then(b.center.cmp(&a.center)))
        .expect("rows nonempty");
    let failures = match targets {
        Some((tk, tbk)) => rows
            .iter()
            .enumerate()
            .filter(|(_, row)| row.ratio < tk || row.ratio > tbk)
            .map(|(i, _)| i)
            .collect(),
        None => Vec::new(),
    };
    Ok(AhlforsReport {
        lambda,
        r_bound: *r_bound,
        kind,
        k: lo.ratio,
        big_k: hi.ratio,
        k_witness: (lo.center, lo.radius),
        big_k_witness: (hi.center, hi.radius),
        targets,
        failures,
        rows,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct NetCountRow {
    pub radius: Rational,
    pub count: u64,
    /// `count / (r/δ)^λ`.
    pub density: f64,
}

#[derive(Clone, Debug)]
pub struct NetCountReport {
    pub center: PointId,
    pub lower: f64,
    pub upper: f64,
    pub rows: Vec<NetCountRow>,
    pub violations: Vec<usize>,
}

impl NetCountReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Counts net points in the open balls `B(a, r)` and checks
/// `2^{-λ} k/K ≤ |B(a,r) ∩ net| / (r/δ)^λ ≤ 4^λ K/k`.
///
/// `(k, K)` must hold for open balls at radii `δ/2`, `δ`, `r/2` and `r + δ/2`
/// (see [`net_count_radii`]); the bounds only follow from those.
#[allow(clippy::too_many_arguments)]
pub fn net_count_bounds(
    space: &FiniteMetricSpace,
    net: &Net,
    lambda: f64,
    k: f64,
    big_k: f64,
    r_bound: &Rational,
    a: PointId,
    radii: &[Rational],
) -> Result<NetCountReport> {
    space.check_point(a)?;
    if !(k > 0.0 && big_k >= k) {
        return Err(Error::param("need 0 < k ≤ K"));
    }
    let delta = net.delta;
    for r in radii {
        if *r < delta * int(2) || *r * int(2) >= *r_bound {
            return Err(Error::param(format!(
                "radius {} violates 2δ ≤ r < R/2",
                format_rational(r)
            )));
        }
    }
    let lower = 2f64.powf(-lambda) * k / big_k;
    let upper = 4f64.powf(lambda) * big_k / k;
    let dist = space.ticks_from(a)?;
    let mut rows = Vec::with_capacity(radii.len());
    let mut violations = Vec::new();
    for (i, r) in radii.iter().enumerate() {
        let count = match space.radius_ticks(r, BallKind::Open) {
            None => 0,
            Some(t) => net.carrier.iter().filter(|p| dist[p.0] <= t).count() as u64,
        };
        let density = count as f64 / to_f64(&(r / delta)).powf(lambda);
        if density < lower || density > upper {
            violations.push(i);
        }
        rows.push(NetCountRow { radius: *r, count, density });
    }
    Ok(NetCountReport {
        center: a,
        lower,
        upper,
        rows,
        violations,
    })
}

/// Radii at which `(k, K)` has to be certified for [`net_count_bounds`].
pub fn net_count_radii(delta: &Rational, radii: &[Rational]) -> Vec<Rational> {
    let half = Rational::new(1, 2);
    let mut out = vec![delta * half, *delta];
    for r in radii {
        out.push(r * half);
        out.push(r + delta * half);
        out.push(*r);
    }
    out.sort();
    out.dedup();
    out
}

#[derive(Clone, Debug)]
pub struct BracketCheck {
    pub center: PointId,
    pub radius: Rational,
    pub delta: Rational,
    pub net_size: usize,
    /// `net_size · (2δ)^λ`.
    pub estimate: f64,
    pub mass: Rational,
    pub ratio: f64,
    pub lower: f64,
    pub upper: f64,
}

impl BracketCheck {
    pub fn passed(&self) -> bool {
        self.ratio >= self.lower && self.ratio <= self.upper
    }
}

/// Compares the δ-net covering sum of `E = B(a, r)` with `ν(E)`.
///
/// Covering `E` by the balls `B(z, δ)` gives `ν(E) ≤ |net| K δ^λ`; the
/// disjoint balls `B(z, δ/2)` inside `B(a, r + δ/2)` give
/// `|net| k (δ/2)^λ ≤ K (r + δ/2)^λ`. Together with `ν(E) ≥ k r^λ` this
/// brackets the ratio `estimate / ν(E)` in
/// `[2^λ / K, 4^λ K k^{-2} (1 + δ/2r)^λ]`, valid when `(k, K)` holds for
/// open balls at radii `δ/2`, `δ`, `r` and `r + δ/2`.
#[allow(clippy::too_many_arguments)]
pub fn hausdorff_bracket(
    space: &FiniteMetricSpace,
    nu: &AtomicMeasure,
    lambda: f64,
    k: f64,
    big_k: f64,
    r_bound: &Rational,
    a: PointId,
    r: &Rational,
    delta: &Rational,
) -> Result<BracketCheck> {
    if !r.is_positive() || !delta.is_positive() {
        return Err(Error::param("r and δ must be positive"));
    }
    if delta >= r_bound || r + delta / int(2) >= *r_bound {
        return Err(Error::param("need δ < R and r + δ/2 < R"));
    }
    if !(k > 0.0 && big_k >= k) {
        return Err(Error::param("need 0 < k ≤ K"));
    }
    let ball = BallSpec::new(a, *r, BallKind::Open)?;
    let members = space.ball_members(&ball)?;
    let mass = nu.mass_of(&members)?;
    if !mass.is_positive() {
        return Err(Error::Degenerate(format!("ball B({}, {}) has zero mass", a.0, format_rational(r))));
    }
    let net_size = greedy_net_of(space, &members, delta, &NetOrder::Index)?.len();
    let estimate = net_size as f64 * (2.0 * to_f64(delta)).powf(lambda);
    let slack = 1.0 + to_f64(delta) / (2.0 * to_f64(r));
    Ok(BracketCheck {
        center: a,
        radius: *r,
        delta: *delta,
        net_size,
        estimate,
        ratio: estimate / to_f64(&mass),
        mass,
        lower: 2f64.powf(lambda) / big_k,
        upper: 4f64.powf(lambda) * big_k / (k * k) * slack.powf(lambda),
    })
}

/// Radii at which `(k, K)` has to be certified for [`hausdorff_bracket`].
pub fn bracket_radii(r: &Rational, delta: &Rational) -> Vec<Rational> {
    let half = Rational::new(1, 2);
    let mut out = vec![delta * half, *delta, *r, r + delta * half];
    out.sort();
    out.dedup();
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measure::normalized_counting_measure;
    use crate::nets::greedy_net;
    use crate::spaces::{GridSpec, SpaceSpec};

    fn grid(n: usize) -> FiniteMetricSpace {
        SpaceSpec::Grid(GridSpec::new(&[n, n])).build().unwrap()
    }

    #[test]
    fn exact_power_law_gives_flat_ratio() {
        // path with closed balls: |B̄(0, r)| = r + 1 on a half line; use a
        // one-point space scaled so every ball is the whole space
        let s = FiniteMetricSpace::from_lower_triangle(&[vec![]]).unwrap();
        let nu = AtomicMeasure::from_masses(vec![int(3)]).unwrap();
        let rep = ahlfors_check(&s, &nu, 0.0, &int(10), &[PointId(0)], &[int(1), int(5)], BallKind::Closed, None).unwrap();
        assert_eq!(rep.k, rep.big_k);
        assert_eq!(rep.k, 3.0);
    }

    #[test]
    fn grid_band_and_witnesses() {
        let s = grid(40);
        let nu = normalized_counting_measure(&s, &int(1)).unwrap();
        let centers = vec![PointId(20 * 40 + 20)];
        let radii = vec![int(2), int(4), int(8)];
        let rep = ahlfors_check(&s, &nu, 2.0, &int(16), &centers, &radii, BallKind::Closed, Some((1.0, 4.0))).unwrap();
        // |B̄(x, r)| = 2r² + 2r + 1
        assert_eq!(rep.rows[0].mass, int(13));
        assert!((rep.big_k - 13.0 / 4.0).abs() < 1e-12);
        assert_eq!(rep.big_k_witness.1, int(2));
        assert!(rep.passed());
        let csv = rep.to_csv();
        assert!(csv.starts_with("center,r,mass,ratio\n820,2,13,3.25\n"));
        assert!(rep.to_record().get("passed") == Some("true"));
    }

    #[test]
    fn degenerate_and_parameter_errors() {
        let s = grid(5);
        let mut masses = vec![int(1); 25];
        masses[12] = int(0);
        let nu = AtomicMeasure::from_masses(masses).unwrap();
        let c = [PointId(12)];
        assert!(matches!(
            ahlfors_check(&s, &nu, 2.0, &int(4), &c, &[Rational::new(1, 2)], BallKind::Open, None),
            Err(Error::Degenerate(_))
        ));
        assert!(matches!(
            ahlfors_check(&s, &nu, 2.0, &int(4), &c, &[int(4)], BallKind::Open, None),
            Err(Error::Parameter(_))
        ));
    }

    #[test]
    fn net_counts_on_grid() {
        let s = grid(64);
        let net = greedy_net(&s, &int(2), &NetOrder::Index).unwrap();
        let radii = [int(8), int(16)];
        let a = PointId(32 * 64 + 32);
        let rep = net_count_bounds(&s, &net, 2.0, 1.0, 2.0, &int(40), a, &radii).unwrap();
        assert!(rep.passed());
        assert!(rep.rows.iter().all(|r| (3.0..=4.0).contains(&r.density)));
        assert!(net_count_bounds(&s, &net, 2.0, 1.0, 2.0, &int(40), a, &[int(3)]).is_err());
        assert!(net_count_bounds(&s, &net, 2.0, 1.0, 2.0, &int(16), a, &[int(8)]).is_err());
    }

    #[test]
    fn bracket_holds_on_grid() {
        let s = grid(48);
        let nu = normalized_counting_measure(&s, &int(1)).unwrap();
        let a = PointId(24 * 48 + 24);
        let (r, delta) = (int(8), int(2));
        let radii = bracket_radii(&r, &delta);
        let cert = ahlfors_check(&s, &nu, 2.0, &int(20), &[a], &radii, BallKind::Open, None).unwrap();
        let b = hausdorff_bracket(&s, &nu, 2.0, cert.k, cert.big_k, &int(20), a, &r, &delta).unwrap();
        assert!(b.passed(), "{b:?}");
    }
}
