//! Ball-count tables, log-log growth fits and their diagnostics.

use std::fmt::Write as _;
use std::str::FromStr;

use num_traits::{One, Signed, Zero};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::exact::{format_rational, int, parse_rational, rational_from_f64, to_f64, Rational};
use crate::metric::{BallKind, FiniteMetricSpace, PointId};
use crate::record::Record;

/// Snap resolution for irrational ladder ratios.
const LADDER_DENOM: i128 = 1 << 20;

/// `a, a q, a q², …` up to `b`, exact for a rational ratio.
pub fn exact_ladder(a: &Rational, b: &Rational, ratio: &Rational) -> Result<Vec<Rational>> {
    if !a.is_positive() || b < a {
        return Err(Error::param("ladder needs 0 < a ≤ b"));
    }
    if *ratio <= Rational::one() {
        return Err(Error::param("ladder ratio must exceed 1"));
    }
    let mut out = vec![*a];
    let mut r = a * ratio;
    while r <= *b {
        out.push(r);
        r *= ratio;
    }
    Ok(out)
}

/// Geometric ladder for a floating ratio. Interior radii are rounded to
/// multiples of 2^-20; the endpoints stay exact, and `b` is always included.
pub fn geometric_ladder(a: &Rational, b: &Rational, ratio: f64) -> Result<Vec<Rational>> {
    if !a.is_positive() || b < a {
        return Err(Error::param("ladder needs 0 < a ≤ b"));
    }
    if !(ratio > 1.0) || !ratio.is_finite() {
        return Err(Error::param("ladder ratio must exceed 1"));
    }
    if let Ok(q) = rational_from_f64(ratio) {
        if q.denom().is_one() {
            let mut out = exact_ladder(a, b, &q)?;
            if out.last() != Some(b) {
                out.push(*b);
            }
            return Ok(out);
        }
    }
    let (fa, fb) = (to_f64(a), to_f64(b));
    let steps = ((fb / fa).ln() / ratio.ln() + 1e-9).floor() as i32;
    let mut out = vec![*a];
    for i in 1..=steps {
        let x = fa * ratio.powi(i);
        let snapped = Rational::new((x * LADDER_DENOM as f64).round() as i128, LADDER_DENOM);
        if snapped > *out.last().expect("nonempty") && snapped < *b {
            out.push(snapped);
        }
    }
    if out.last() != Some(b) {
        out.push(*b);
    }
    Ok(out)
}

/// Radius list syntax: `1,2,4` or `geometric:a,b,ratio`.
pub fn parse_radii(text: &str) -> Result<Vec<Rational>> {
    let radii = if let Some(rest) = text.strip_prefix("geometric:") {
        let parts: Vec<&str> = rest.split(',').collect();
        let [a, b, q] = parts.as_slice() else {
            return Err(Error::param("geometric ladder needs a,b,ratio"));
        };
        let (a, b) = (parse_rational(a)?, parse_rational(b)?);
        match parse_rational(q) {
            Ok(q) if *q.denom() <= 1000 => exact_ladder(&a, &b, &q)?,
            _ => {
                let q: f64 = q.trim().parse().map_err(|_| Error::param(format!("bad ratio {q:?}")))?;
                geometric_ladder(&a, &b, q)?
            }
        }
    } else {
        text.split(',').map(parse_rational).collect::<Result<Vec<_>>>()?
    };
    if radii.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::param("radii must be strictly increasing"));
    }
    Ok(radii)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum CenterSelection {
    All,
    /// Points at distance ≥ `margin` from every boundary point (graph
    /// vertices of less than maximal degree). Defaults to the largest radius.
    Bulk { margin: Option<Rational> },
    /// Seeded uniform sample without replacement.
    Sample { count: usize, seed: u64 },
}

impl FromStr for CenterSelection {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let mut parts = s.split(':');
        match (parts.next(), parts.next(), parts.next()) {
            (Some("all"), None, None) => Ok(CenterSelection::All),
            (Some("bulk"), None, None) => Ok(CenterSelection::Bulk { margin: None }),
            (Some("bulk"), Some(m), None) => Ok(CenterSelection::Bulk {
                margin: Some(parse_rational(m)?),
            }),
            (Some("sample"), Some(n), seed) => Ok(CenterSelection::Sample {
                count: n.parse().map_err(|_| Error::param(format!("bad sample size {n:?}")))?,
                seed: seed.map_or(Ok(0), |s| s.parse().map_err(|_| Error::param("bad sample seed")))?,
            }),
            _ => Err(Error::param(format!("centers must be all, bulk[:margin] or sample:n[:seed], got {s:?}"))),
        }
    }
}

/// Points whose degree is below the maximum, for graph spaces; empty otherwise.
pub fn boundary_points(space: &FiniteMetricSpace) -> Vec<PointId> {
    match space.graph() {
        Some(g) => {
            let max = g.max_degree();
            (0..g.n_vertices()).filter(|&v| g.degree(v) < max).map(PointId).collect()
        }
        None => Vec::new(),
    }
}

pub fn select_centers(space: &FiniteMetricSpace, selection: &CenterSelection, max_radius: &Rational) -> Result<Vec<PointId>> {
    let centers = match selection {
        CenterSelection::All => space.points().collect(),
        CenterSelection::Bulk { margin } => {
            let margin = margin.unwrap_or(*max_radius);
            let boundary = boundary_points(space);
            if boundary.is_empty() {
                space.points().collect()
            } else {
                let to_boundary = space.ticks_to_set(&boundary)?;
                space
                    .points()
                    .filter(|p| space.ticks_to_length(to_boundary[p.0]) >= margin)
                    .collect()
            }
        }
        CenterSelection::Sample { count, seed } => {
            let mut all: Vec<PointId> = space.points().collect();
            all.shuffle(&mut ChaCha8Rng::seed_from_u64(*seed));
            all.truncate(*count);
            all.sort_unstable();
            all
        }
    };
    if centers.is_empty() {
        return Err(Error::Degenerate("center selection is empty".into()));
    }
    Ok(centers)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CountTable {
    pub radii: Vec<Rational>,
    pub centers: Vec<PointId>,
    /// `counts[i][j] = card B(centers[i], radii[j])`.
    pub counts: Vec<Vec<u64>>,
    pub kind: BallKind,
}

pub fn ball_count_table(
    space: &FiniteMetricSpace,
    centers: &[PointId],
    radii: &[Rational],
    kind: BallKind,
) -> Result<CountTable> {
    if radii.windows(2).any(|w| w[0] > w[1]) {
        return Err(Error::param("radii must be sorted ascending"));
    }
    if radii.iter().any(|r| r.is_negative()) {
        return Err(Error::param("radii must be nonnegative"));
    }
    for &c in centers {
        space.check_point(c)?;
    }
    let thresholds: Vec<Option<u64>> = radii.iter().map(|r| space.radius_ticks(r, kind)).collect();
    let counts = centers.par_iter().map(|c| space.counts_at(c.0, &thresholds)).collect();
    Ok(CountTable {
        radii: radii.to_vec(),
        centers: centers.to_vec(),
        counts,
        kind,
    })
}

impl CountTable {
    /// `# kind=open` line, then `center,r_1,…,r_k`, then one row per center.
    pub fn to_csv(&self) -> String {
        let mut out = format!("# kind={}\ncenter", self.kind);
        for r in &self.radii {
            out.push(',');
            out.push_str(&format_rational(r));
        }
        out.push('\n');
        for (c, row) in self.centers.iter().zip(&self.counts) {
            let _ = write!(out, "{c}");
            for v in row {
                let _ = write!(out, ",{v}");
            }
            out.push('\n');
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<CountTable> {
        let mut kind = BallKind::Open;
        let mut radii = None;
        let mut centers = Vec::new();
        let mut counts = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            if let Some(comment) = line.strip_prefix('#') {
                if let Some(k) = comment.trim().strip_prefix("kind=") {
                    kind = k.parse()?;
                }
                continue;
            }
            let fields: Vec<&str> = line.split(',').collect();
            if radii.is_none() {
                radii = Some(fields[1..].iter().map(|f| parse_rational(f)).collect::<Result<Vec<_>>>()?);
                continue;
            }
            let width = radii.as_ref().map_or(0, Vec::len);
            if fields.len() != width + 1 {
                return Err(Error::parse(i + 1, "row width differs from header"));
            }
            let bad = |_| Error::parse(i + 1, "bad integer");
            centers.push(PointId(fields[0].parse().map_err(bad)?));
            counts.push(fields[1..].iter().map(|f| f.parse::<u64>().map_err(bad)).collect::<Result<Vec<_>>>()?);
        }
        let radii = radii.ok_or_else(|| Error::parse(1, "missing header row"))?;
        if radii.windows(2).any(|w| w[0] > w[1]) {
            return Err(Error::param("radii must be sorted ascending"));
        }
        Ok(CountTable {
            radii,
            centers,
            counts,
            kind,
        })
    }

    /// `(center index, radius index)` pairs with the radius in `[lower, upper]`.
    fn samples_in<'a>(&'a self, lower: &'a Rational, upper: &'a Rational) -> impl Iterator<Item = (usize, usize)> + 'a {
        let cols: Vec<usize> = (0..self.radii.len())
            .filter(|&j| self.radii[j] >= *lower && self.radii[j] <= *upper)
            .collect();
        (0..self.centers.len()).flat_map(move |i| cols.clone().into_iter().map(move |j| (i, j)))
    }

    pub fn is_monotone(&self) -> bool {
        self.counts.iter().all(|row| row.windows(2).all(|w| w[0] <= w[1]))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct GrowthReport {
    pub lower: Rational,
    pub upper: Rational,
    pub kind: BallKind,
    pub lambda: f64,
    pub sigma: f64,
    pub c: f64,
    pub big_c: f64,
    /// Distinct radii that entered the fit.
    pub radii: Vec<Rational>,
    /// `ln count − ln σ − λ ln r` per sample, in table order.
    pub residuals: Vec<f64>,
}

impl GrowthReport {
    pub fn n_samples(&self) -> usize {
        self.residuals.len()
    }

    pub fn max_abs_residual(&self) -> f64 {
        self.residuals.iter().fold(0.0, |m, r| m.max(r.abs()))
    }

    pub fn to_record(&self) -> Record {
        Record::new()
            .with("lambda", self.lambda)
            .with("sigma", self.sigma)
            .with("c", self.c)
            .with("C", self.big_c)
            .with("I_minus", format_rational(&self.lower))
            .with("I_plus", format_rational(&self.upper))
            .with("ball", self.kind)
            .with("n_samples", self.n_samples())
            .with("max_abs_residual", self.max_abs_residual())
    }

    /// Two columns `ln r  ln count` with the fitted line in the header.
    pub fn gnuplot_data(&self, table: &CountTable) -> String {
        let mut out = format!(
            "# fit: ln count = {} + {} * ln r\n# lambda={} sigma={} c={} C={}\n",
            self.sigma.ln(),
            self.lambda,
            self.lambda,
            self.sigma,
            self.c,
            self.big_c
        );
        for (i, j) in table.samples_in(&self.lower, &self.upper) {
            let _ = writeln!(out, "{} {}", to_f64(&table.radii[j]).ln(), (table.counts[i][j] as f64).ln());
        }
        out
    }
}

fn ratio_ln(count: u64, r: &Rational, lambda: f64, ln_sigma: f64) -> f64 {
    (count as f64).ln() - ln_sigma - lambda * to_f64(r).ln()
}

/// Least-squares fit of `ln count` on `ln r` over radii in `[lower, upper]`,
/// then `c`, `C` as the extremal ratios `count / (σ r^λ)`.
pub fn fit_growth(table: &CountTable, lower: &Rational, upper: &Rational) -> Result<GrowthReport> {
    if lower > upper || !lower.is_positive() {
        return Err(Error::Fit("interval must satisfy 0 < I₋ ≤ I₊".into()));
    }
    let samples: Vec<(usize, usize)> = table.samples_in(lower, upper).collect();
    let radii: Vec<Rational> = {
        let mut r: Vec<Rational> = samples.iter().map(|&(_, j)| table.radii[j]).collect();
        r.sort();
        r.dedup();
        r
    };
    if radii.len() < 2 {
        return Err(Error::Fit(format!("need at least 2 distinct radii in the interval, found {}", radii.len())));
    }
    if let Some(&(i, j)) = samples.iter().find(|&&(i, j)| table.counts[i][j] == 0) {
        return Err(Error::Fit(format!(
            "zero count at center {} radius {}",
            table.centers[i],
            format_rational(&table.radii[j])
        )));
    }
    let points: Vec<(f64, f64)> = samples
        .iter()
        .map(|&(i, j)| (to_f64(&table.radii[j]).ln(), (table.counts[i][j] as f64).ln()))
        .collect();
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let lambda = sxy / sxx;
    let ln_sigma = my - lambda * mx;
    let residuals: Vec<f64> = samples
        .iter()
        .map(|&(i, j)| ratio_ln(table.counts[i][j], &table.radii[j], lambda, ln_sigma))
        .collect();
    let lo = residuals.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = residuals.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Ok(GrowthReport {
        lower: *lower,
        upper: *upper,
        kind: table.kind,
        lambda,
        sigma: ln_sigma.exp(),
        c: lo.exp(),
        big_c: hi.exp(),
        radii,
        residuals,
    })
}

/// Samples outside the report's band `c σ r^λ ≤ count ≤ C σ r^λ`, compared in ratio form.
pub fn band_violations(report: &GrowthReport, table: &CountTable) -> Vec<(PointId, Rational)> {
    let ln_sigma = report.sigma.ln();
    table
        .samples_in(&report.lower, &report.upper)
        .filter(|&(i, j)| {
            let q = ratio_ln(table.counts[i][j], &table.radii[j], report.lambda, ln_sigma).exp();
            q < report.c || q > report.big_c
        })
        .map(|(i, j)| (table.centers[i], table.radii[j]))
        .collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct BoundsCheck {
    pub c: f64,
    pub big_c: f64,
    pub c_witness: (PointId, Rational),
    pub big_c_witness: (PointId, Rational),
    /// Against the caller's `(c, C)` targets, when given.
    pub passed: Option<bool>,
}

pub fn check_growth_bounds(
    table: &CountTable,
    lambda: f64,
    sigma: f64,
    lower: &Rational,
    upper: &Rational,
    targets: Option<(f64, f64)>,
) -> Result<BoundsCheck> {
    if !(sigma > 0.0) {
        return Err(Error::param("σ must be positive"));
    }
    let ln_sigma = sigma.ln();
    let mut best: Option<BoundsCheck> = None;
    for (i, j) in table.samples_in(lower, upper) {
        let q = ratio_ln(table.counts[i][j], &table.radii[j], lambda, ln_sigma).exp();
        let w = (table.centers[i], table.radii[j]);
        match &mut best {
            None => {
                best = Some(BoundsCheck {
                    c: q,
                    big_c: q,
                    c_witness: w,
                    big_c_witness: w,
                    passed: None,
                })
            }
            Some(b) => {
                if q < b.c {
                    b.c = q;
                    b.c_witness = w;
                }
                if q > b.big_c {
                    b.big_c = q;
                    b.big_c_witness = w;
                }
            }
        }
    }
    let mut b = best.ok_or_else(|| Error::Degenerate("no samples in the interval".into()))?;
    b.passed = targets.map(|(c, big_c)| b.c >= c && b.big_c <= big_c);
    Ok(b)
}

#[derive(Clone, Debug, PartialEq)]
pub struct UniquenessDiag {
    pub difference: f64,
    pub bound: f64,
    /// Extreme radii shared by both fits; the bound uses their ratio.
    pub common_lower: Rational,
    pub common_upper: Rational,
    pub respected: bool,
}

/// `|λ₁ − λ₂| ≤ ln(C₁C₂ / (c₁c₂)) / ln(r₊ / r₋)` with `r₋ < r₊` the extreme
/// radii sampled by both fits.
pub fn growth_uniqueness_diag(a: &GrowthReport, b: &GrowthReport) -> Result<UniquenessDiag> {
    let common: Vec<&Rational> = a.radii.iter().filter(|r| b.radii.contains(r)).collect();
    let (Some(lo), Some(hi)) = (common.first(), common.last()) else {
        return Err(Error::param("fits share no radii"));
    };
    if lo == hi {
        return Err(Error::param("fits share fewer than two radii"));
    }
    let difference = (a.lambda - b.lambda).abs();
    let spread = (a.big_c * b.big_c / (a.c * b.c)).ln();
    let bound = spread / (to_f64(hi) / to_f64(lo)).ln();
    Ok(UniquenessDiag {
        difference,
        bound,
        common_lower: **lo,
        common_upper: **hi,
        respected: difference <= bound + 1e-12,
    })
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HomogeneityReport {
    pub ratio: Rational,
    pub max_witness: (PointId, Rational, u64),
    pub min_witness: (PointId, Rational, u64),
}

/// `max count(x, s) / min count(x', s')` over the given centers and radii.
pub fn homogeneity_ratio(
    space: &FiniteMetricSpace,
    radii: &[Rational],
    centers: &[PointId],
    kind: BallKind,
) -> Result<HomogeneityReport> {
    if radii.is_empty() || centers.is_empty() {
        return Err(Error::param("need at least one radius and one center"));
    }
    if radii.iter().any(|r| !r.is_positive()) {
        return Err(Error::param("radii must be positive"));
    }
    let mut sorted = radii.to_vec();
    sorted.sort();
    let table = ball_count_table(space, centers, &sorted, kind)?;
    let mut max: Option<(PointId, Rational, u64)> = None;
    let mut min: Option<(PointId, Rational, u64)> = None;
    for (i, row) in table.counts.iter().enumerate() {
        for (j, &v) in row.iter().enumerate() {
            let w = (table.centers[i], table.radii[j], v);
            if v == 0 {
                return Err(Error::Degenerate(format!("empty ball at center {} radius {}", w.0, w.1)));
            }
            if max.as_ref().is_none_or(|m| v > m.2) {
                max = Some(w);
            }
            if min.as_ref().is_none_or(|m| v < m.2) {
                min = Some(w);
            }
        }
    }
    let (max, min) = (max.expect("nonempty"), min.expect("nonempty"));
    Ok(HomogeneityReport {
        ratio: int(max.2 as i128) / int(min.2 as i128),
        max_witness: max,
        min_witness: min,
    })
}

impl GrowthReport {
    /// Band ratio `C / c`.
    pub fn spread(&self) -> f64 {
        if self.c.is_zero() {
            f64::INFINITY
        } else {
            self.big_c / self.c
        }
    }
}
