//! Finite-scale Hausdorff surrogates: net covering sums over a δ ladder,
//! and greedy Vitali packings by disjoint closed balls.

use num_traits::{Signed, Zero};

use crate::error::{Error, Result};
use crate::exact::{format_rational, int, to_f64, Rational};
use crate::graph::UNREACHED;
use crate::measure::AtomicMeasure;
use crate::metric::{BallSpec, FiniteMetricSpace, PointId};
use crate::nets::{greedy_net_of, NetOrder};

#[derive(Clone, Debug, PartialEq)]
pub struct HausdorffLevel {
    pub delta: Rational,
    pub net_size: usize,
    /// `net_size · (2δ)^λ`.
    pub sum: f64,
}

/// Covers `target` by the balls `B(z, δ)` around a greedy δ-net of the
/// target and reports `Σ (2δ)^λ` for each δ of a strictly descending ladder.
pub fn hausdorff_estimate(
    space: &FiniteMetricSpace,
    lambda: f64,
    ladder: &[Rational],
    target: &[PointId],
) -> Result<Vec<HausdorffLevel>> {
    if ladder.windows(2).any(|w| w[0] <= w[1]) {
        return Err(Error::param("δ ladder must be strictly descending"));
    }
    if ladder.iter().any(|d| !d.is_positive()) {
        return Err(Error::param("δ values must be positive"));
    }
    ladder
        .iter()
        .map(|delta| {
            let net_size = if target.is_empty() {
                0
            } else {
                greedy_net_of(space, target, delta, &NetOrder::Index)?.len()
            };
            let diam = 2.0 * to_f64(delta);
            Ok(HausdorffLevel {
                delta: *delta,
                net_size,
                sum: net_size as f64 * diam.powf(lambda),
            })
        })
        .collect()
}

pub fn levels_to_csv(levels: &[HausdorffLevel]) -> String {
    let mut out = String::from("delta,net_size,sum\n");
    for l in levels {
        out.push_str(&format!("{},{},{}\n", format_rational(&l.delta), l.net_size, l.sum));
    }
    out
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct VitaliBall {
    pub center: PointId,
    pub radius: Rational,
    /// The supremum `R_{m+1}` in force when this ball was chosen.
    pub sup: Rational,
}

#[derive(Clone, Debug)]
pub struct VitaliPacking {
    pub balls: Vec<VitaliBall>,
    pub sum_r_lambda: f64,
    pub packed_mass: Rational,
    /// `ν(U \ ∪ V_i)`.
    pub residual_mass: Rational,
}

/// Greedy Vitali packing of `u` by disjoint closed balls.
///
/// At each step `R` is the exact supremum of radii `r ≤ ρ` such that some
/// closed ball `B̄(x, r)` lies in what is left of `U`. For `x` in the
/// remainder that supremum is `min(ρ, t(x))` with `t(x)` the distance to the
/// nearest point outside the remainder; it is attained only when it equals
/// `ρ < t(x)`. The chosen radius is `ρ` when attained, otherwise the
/// largest realized distance from the center in `]R/2, R[` (so the ball is
/// as large as possible), or `3R/4` when no distance falls there.
/// Stops when the remainder is empty.
pub fn vitali_pack(
    space: &FiniteMetricSpace,
    nu: &AtomicMeasure,
    u: &[PointId],
    rho: &Rational,
    lambda: f64,
) -> Result<VitaliPacking> {
    if !rho.is_positive() {
        return Err(Error::param("ρ must be positive"));
    }
    if u.is_empty() {
        return Err(Error::param("U must be nonempty"));
    }
    if nu.len() != space.n_points() {
        return Err(Error::param("measure and space sizes differ"));
    }
    for &p in u {
        space.check_point(p)?;
    }
    let n = space.n_points();
    let mut remaining = vec![false; n];
    for p in u {
        remaining[p.0] = true;
    }
    let mut balls = Vec::new();
    loop {
        let outside: Vec<PointId> = (0..n).filter(|&i| !remaining[i]).map(PointId).collect();
        let inside: Vec<usize> = (0..n).filter(|&i| remaining[i]).collect();
        if inside.is_empty() {
            break;
        }
        let t = if outside.is_empty() {
            vec![UNREACHED; n]
        } else {
            space.ticks_to_set(&outside)?
        };
        // (sup for x, attained?) maximized, an attained sup beating an
        // unattained one of the same value; remaining ties to the lowest index
        let mut best: Option<(Rational, bool, usize)> = None;
        for &x in &inside {
            let tx = (t[x] != UNREACHED).then(|| space.ticks_to_length(t[x]));
            let (sup, attained) = match tx {
                Some(tx) if tx <= *rho => (tx, false),
                _ => (*rho, true),
            };
            if best.as_ref().is_none_or(|(b, att, _)| (sup, attained) > (*b, *att)) {
                best = Some((sup, attained, x));
            }
        }
        let (sup, attained, x) = best.expect("remainder is nonempty");
        let radius = if attained {
            sup
        } else {
            let half = sup / int(2);
            space
                .ticks_from(PointId(x))?
                .into_iter()
                .map(|d| space.ticks_to_length(d))
                .filter(|d| *d > half && *d < sup)
                .max()
                .unwrap_or(sup * Rational::new(3, 4))
        };
        for p in space.ball_members(&BallSpec::closed(x, radius))? {
            debug_assert!(remaining[p.0]);
            remaining[p.0] = false;
        }
        balls.push(VitaliBall {
            center: PointId(x),
            radius,
            sup,
        });
    }
    let covered: Vec<PointId> = u.iter().copied().filter(|p| !remaining[p.0]).collect();
    let packed_mass = nu.mass_of(&covered)?;
    let residual: Vec<PointId> = u.iter().copied().filter(|p| remaining[p.0]).collect();
    Ok(VitaliPacking {
        sum_r_lambda: balls.iter().map(|b| to_f64(&b.radius).powf(lambda)).sum(),
        balls,
        packed_mass,
        residual_mass: nu.mass_of(&residual)?,
    })
}

#[derive(Clone, Debug, Default)]
pub struct VitaliAudit {
    /// Pairs of balls that intersect.
    pub overlaps: Vec<(usize, usize)>,
    /// Balls with a point outside `U`.
    pub escapes: Vec<usize>,
    /// Balls whose radius is not above half the independently rescanned supremum.
    pub not_half_maximal: Vec<usize>,
}

impl VitaliAudit {
    pub fn passed(&self) -> bool {
        self.overlaps.is_empty() && self.escapes.is_empty() && self.not_half_maximal.is_empty()
    }
}

/// Re-checks a packing by enumeration: disjointness, containment in `U`,
/// and `r_m > R_m / 2` against a supremum recomputed from scratch.
pub fn audit_vitali(space: &FiniteMetricSpace, u: &[PointId], rho: &Rational, packing: &VitaliPacking) -> Result<VitaliAudit> {
    let n = space.n_points();
    let mut in_u = vec![false; n];
    for p in u {
        in_u[p.0] = true;
    }
    let members: Vec<Vec<PointId>> = packing
        .balls
        .iter()
        .map(|b| space.ball_members(&BallSpec::closed(b.center.0, b.radius)))
        .collect::<Result<_>>()?;
    let mut audit = VitaliAudit::default();
    let mut owner: Vec<Option<usize>> = vec![None; n];
    for (i, m) in members.iter().enumerate() {
        if m.iter().any(|p| !in_u[p.0]) {
            audit.escapes.push(i);
        }
        for p in m {
            if let Some(j) = owner[p.0] {
                if !audit.overlaps.contains(&(j, i)) {
                    audit.overlaps.push((j, i));
                }
            } else {
                owner[p.0] = Some(i);
            }
        }
    }
    let mut remaining = in_u.clone();
    let matrix = space.tick_matrix();
    for (i, b) in packing.balls.iter().enumerate() {
        // sup over x in the remainder of min(ρ, distance to the complement of the remainder)
        let mut sup = Rational::zero();
        for x in (0..n).filter(|&x| remaining[x]) {
            let gap = (0..n).filter(|&y| !remaining[y]).map(|y| matrix[x][y]).min();
            let s = match gap {
                Some(g) => space.ticks_to_length(g).min(*rho),
                None => *rho,
            };
            sup = sup.max(s);
        }
        if b.radius * int(2) <= sup || b.radius > *rho {
            audit.not_half_maximal.push(i);
        }
        for p in &members[i] {
            remaining[p.0] = false;
        }
    }
    Ok(audit)
}
