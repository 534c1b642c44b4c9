//! Atomic measures and their quantization to a uniform density `1/M`.

use std::fmt::Write as _;
use std::ops::Range;

use num_traits::{Signed, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::exact::{format_rational, int, parse_rational, Rational};
use crate::metric::{BallSpec, FiniteMetricSpace, PointId};

/// Per-point masses `ν_i`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AtomicMeasure {
    masses: Vec<Rational>,
    /// Set when every atom has the same mass, enabling count-based ball masses.
    uniform: Option<Rational>,
}

impl AtomicMeasure {
    pub fn from_masses(masses: Vec<Rational>) -> Result<Self> {
        if let Some((i, m)) = masses.iter().enumerate().find(|(_, m)| m.is_negative()) {
            return Err(Error::param(format!("negative mass {m} at atom {i}")));
        }
        let uniform = match masses.first() {
            Some(first) if masses.iter().all(|m| m == first) => Some(*first),
            _ => None,
        };
        Ok(AtomicMeasure { masses, uniform })
    }

    pub fn uniform(n: usize, mass: Rational) -> Result<Self> {
        AtomicMeasure::from_masses(vec![mass; n])
    }

    /// Probability measure with seeded integer weights `w_i ∈ [1, max_weight]`, `ν_i = w_i / Σw`.
    pub fn random_probability(n: usize, max_weight: u32, seed: u64) -> Result<Self> {
        if n == 0 || max_weight == 0 {
            return Err(Error::param("need at least one atom and a positive weight range"));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let weights: Vec<i128> = (0..n).map(|_| rng.random_range(1..=max_weight) as i128).collect();
        let total: i128 = weights.iter().sum();
        AtomicMeasure::from_masses(weights.into_iter().map(|w| Rational::new(w, total)).collect())
    }

    pub fn len(&self) -> usize {
        self.masses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.masses.is_empty()
    }

    pub fn masses(&self) -> &[Rational] {
        &self.masses
    }

    pub fn mass(&self, i: usize) -> Rational {
        self.masses[i]
    }

    pub fn uniform_mass(&self) -> Option<Rational> {
        self.uniform
    }

    pub fn total(&self) -> Rational {
        self.masses.iter().sum()
    }

    /// `ν(A)`; repeated indices count once.
    pub fn mass_of(&self, set: &[PointId]) -> Result<Rational> {
        let mut seen = vec![false; self.len()];
        let mut total = Rational::zero();
        for p in set {
            let slot = seen.get_mut(p.0).ok_or(Error::Index {
                index: p.0,
                n_points: self.len(),
            })?;
            if !*slot {
                *slot = true;
                total += self.masses[p.0];
            }
        }
        Ok(total)
    }

    fn check_space(&self, space: &FiniteMetricSpace) -> Result<()> {
        if self.len() != space.n_points() {
            return Err(Error::param(format!(
                "measure has {} atoms but the space has {} points",
                self.len(),
                space.n_points()
            )));
        }
        Ok(())
    }

    pub fn ball_mass(&self, space: &FiniteMetricSpace, ball: &BallSpec) -> Result<Rational> {
        self.check_space(space)?;
        if let Some(m) = self.uniform {
            return Ok(m * int(space.ball_card(ball)? as i128));
        }
        Ok(space.ball_members(ball)?.iter().map(|p| self.masses[p.0]).sum())
    }

    /// Ball masses around `center` for each tick threshold, in one sweep.
    pub(crate) fn ball_masses(&self, space: &FiniteMetricSpace, center: usize, thresholds: &[Option<u64>]) -> Vec<Rational> {
        if let Some(m) = self.uniform {
            return space
                .counts_at(center, thresholds)
                .into_iter()
                .map(|c| m * int(c as i128))
                .collect();
        }
        let Some(max) = thresholds.iter().flatten().copied().max() else {
            return vec![Rational::zero(); thresholds.len()];
        };
        let mut members = space.within_ticks(center, max);
        members.sort_unstable_by_key(|&(_, t)| t);
        let mut out = Vec::with_capacity(thresholds.len());
        for t in thresholds {
            out.push(match t {
                None => Rational::zero(),
                Some(t) => members.iter().take_while(|(_, d)| d <= t).map(|(y, _)| self.masses[*y]).sum(),
            });
        }
        out
    }

    /// Image measure under `map: atom → target atom`.
    pub fn push_forward(&self, map: &[usize], n_target: usize) -> Result<AtomicMeasure> {
        if map.len() != self.len() {
            return Err(Error::param("push-forward map must cover every atom"));
        }
        let mut out = vec![Rational::zero(); n_target];
        for (i, &j) in map.iter().enumerate() {
            *out.get_mut(j).ok_or_else(|| Error::param(format!("map target {j} out of range")))? += self.masses[i];
        }
        AtomicMeasure::from_masses(out)
    }

    /// `index mass` lines, masses as exact decimals (or `p/q` when not terminating).
    pub fn serialize(&self) -> String {
        let mut out = String::new();
        for (i, m) in self.masses.iter().enumerate() {
            let _ = writeln!(out, "{i} {}", format_rational(m));
        }
        out
    }

    pub fn parse(text: &str) -> Result<AtomicMeasure> {
        let mut masses = Vec::new();
        for (line_no, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let mut parts = line.split_whitespace();
            let (Some(i), Some(m), None) = (parts.next(), parts.next(), parts.next()) else {
                return Err(Error::parse(line_no + 1, "expected \"index mass\""));
            };
            let i: usize = i.parse().map_err(|_| Error::parse(line_no + 1, "bad index"))?;
            if i != masses.len() {
                return Err(Error::parse(line_no + 1, format!("expected index {}, got {i}", masses.len())));
            }
            masses.push(parse_rational(m).map_err(|e| Error::parse(line_no + 1, e.to_string()))?);
        }
        AtomicMeasure::from_masses(masses)
    }
}

/// Every point gets mass `1/M`.
pub fn normalized_counting_measure(space: &FiniteMetricSpace, m: &Rational) -> Result<AtomicMeasure> {
    if !m.is_positive() {
        return Err(Error::param(format!("normalizer M must be positive, got {m}")));
    }
    AtomicMeasure::uniform(space.n_points(), m.recip())
}

/// Multiplicities `k_i = ⌊M ν_i⌋` at density `1/M`, with optional
/// materialized carrier blocks `B_i` (consecutive ranges of carrier ids).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct QuantizedMeasure {
    pub m: u64,
    pub multiplicities: Vec<u64>,
    pub blocks: Option<Vec<Range<usize>>>,
}

pub fn quantize_measure(nu: &AtomicMeasure, m: u64, materialize: bool) -> Result<QuantizedMeasure> {
    if m == 0 {
        return Err(Error::param("M must be at least 1"));
    }
    let scale = int(m as i128);
    let multiplicities: Vec<u64> = nu
        .masses()
        .iter()
        .map(|v| {
            let k = (v * scale).floor().to_integer();
            u64::try_from(k).map_err(|_| Error::param("multiplicity does not fit in u64"))
        })
        .collect::<Result<_>>()?;
    let blocks = materialize.then(|| {
        let mut start = 0usize;
        multiplicities
            .iter()
            .map(|&k| {
                let r = start..start + k as usize;
                start = r.end;
                r
            })
            .collect()
    });
    Ok(QuantizedMeasure {
        m,
        multiplicities,
        blocks,
    })
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SubsetErrorReport {
    pub subsets_checked: u64,
    pub exhaustive: bool,
    pub max_error: Rational,
    /// `n / M`.
    pub bound: Rational,
}

impl SubsetErrorReport {
    pub fn passed(&self) -> bool {
        self.max_error <= self.bound
    }
}

/// Subsets are enumerated exhaustively up to this many atoms.
pub const EXHAUSTIVE_SUBSET_LIMIT: usize = 20;

impl QuantizedMeasure {
    pub fn density(&self) -> Rational {
        Rational::new(1, self.m as i128)
    }

    /// Number of carrier points `Σ k_i`.
    pub fn carrier_len(&self) -> usize {
        self.multiplicities.iter().sum::<u64>() as usize
    }

    /// `μ(Y) = Σ k_i / M`.
    pub fn total(&self) -> Rational {
        Rational::new(self.multiplicities.iter().sum::<u64>() as i128, self.m as i128)
    }

    /// `μ(p⁻¹(A))`.
    pub fn mass_of(&self, set: &[PointId]) -> Rational {
        let mut seen = vec![false; self.multiplicities.len()];
        let mut k = 0u64;
        for p in set {
            if !seen[p.0] {
                seen[p.0] = true;
                k += self.multiplicities[p.0];
            }
        }
        Rational::new(k as i128, self.m as i128)
    }

    /// Base atom of a carrier point (materialized carriers only).
    pub fn projection(&self, y: usize) -> Option<usize> {
        let blocks = self.blocks.as_ref()?;
        let i = blocks.partition_point(|b| b.end <= y);
        blocks.get(i).filter(|b| b.contains(&y)).map(|_| i)
    }

    /// `μ ∘ p⁻¹` as a measure on the base points.
    pub fn to_base_measure(&self) -> AtomicMeasure {
        let d = self.density();
        AtomicMeasure::from_masses(self.multiplicities.iter().map(|&k| d * int(k as i128)).collect())
            .expect("multiplicities are nonnegative")
    }

    /// Atoms violating `k_i / M ≤ ν_i < (k_i + 1) / M`.
    pub fn bracketing_violations(&self, nu: &AtomicMeasure) -> Vec<usize> {
        let d = self.density();
        (0..self.multiplicities.len())
            .filter(|&i| {
                let lo = d * int(self.multiplicities[i] as i128);
                !(lo <= nu.mass(i) && nu.mass(i) < lo + d)
            })
            .collect()
    }

    pub fn total_mass_ok(&self, nu: &AtomicMeasure) -> bool {
        self.total() <= nu.total()
    }

    pub fn subset_error(&self, nu: &AtomicMeasure, set: &[PointId]) -> Result<Rational> {
        Ok((self.mass_of(set) - nu.mass_of(set)?).abs())
    }

    /// Largest `|μ(p⁻¹(A)) − ν(A)|`: over all subsets when there are at most
    /// [`EXHAUSTIVE_SUBSET_LIMIT`] atoms, otherwise over `samples` seeded
    /// random subsets (each atom included with probability 1/2).
    pub fn max_subset_error(&self, nu: &AtomicMeasure, samples: usize, seed: u64) -> Result<SubsetErrorReport> {
        let n = self.multiplicities.len();
        if nu.len() != n {
            return Err(Error::param("measure and quantization have different atom counts"));
        }
        let d = self.density();
        let offsets: Vec<Rational> = (0..n).map(|i| nu.mass(i) - d * int(self.multiplicities[i] as i128)).collect();
        let bound = Rational::new(n as i128, self.m as i128);
        let mut max_error = Rational::zero();
        let mut checked = 0u64;
        let exhaustive = n <= EXHAUSTIVE_SUBSET_LIMIT;
        if exhaustive {
            // Gray-code walk: each step toggles one atom.
            let mut sum = Rational::zero();
            let mut inside = vec![false; n];
            checked = 1;
            for step in 1u64..(1u64 << n) {
                let bit = step.trailing_zeros() as usize;
                inside[bit] = !inside[bit];
                if inside[bit] {
                    sum += offsets[bit];
                } else {
                    sum -= offsets[bit];
                }
                max_error = max_error.max(sum.abs());
                checked += 1;
            }
        } else {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            for _ in 0..samples {
                let mut sum = Rational::zero();
                for o in &offsets {
                    if rng.random_bool(0.5) {
                        sum += o;
                    }
                }
                max_error = max_error.max(sum.abs());
                checked += 1;
            }
        }
        Ok(SubsetErrorReport {
            subsets_checked: checked,
            exhaustive,
            max_error,
            bound,
        })
    }

    /// Header `M=...` then `index multiplicity` lines.
    pub fn serialize(&self) -> String {
        let mut out = format!("M={} carrier={}\n", self.m, self.carrier_len());
        for (i, k) in self.multiplicities.iter().enumerate() {
            let _ = writeln!(out, "{i} {k}");
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::frac;
    use crate::spaces::{taxicab_grid, GridSpec};

    #[test]
    fn counting_measures() {
        let s = taxicab_grid(&GridSpec::new(&[4, 4])).unwrap();
        let nu = normalized_counting_measure(&s, &int(1)).unwrap();
        assert_eq!(nu.total(), int(16));
        assert_eq!(nu.ball_mass(&s, &BallSpec::closed(5, int(1))).unwrap(), int(5));
        let p = normalized_counting_measure(&s, &int(16)).unwrap();
        assert_eq!(p.total(), int(1));
        assert!(normalized_counting_measure(&s, &int(0)).is_err());
    }

    #[test]
    fn three_atom_example() {
        let nu = AtomicMeasure::from_masses(vec![frac(1, 4), frac(7, 20), frac(2, 5)]).unwrap();
        let q = quantize_measure(&nu, 10, false).unwrap();
        assert_eq!(q.multiplicities, vec![2, 3, 4]);
        assert_eq!(q.total(), frac(9, 10));
        assert!(q.total_mass_ok(&nu));
        assert!(q.bracketing_violations(&nu).is_empty());
        // first two atoms: |0.5 − 0.6|
        let err = q.subset_error(&nu, &[PointId(0), PointId(1)]).unwrap();
        assert_eq!(err, frac(1, 10));
        assert!(err <= frac(3, 10));
        let rep = q.max_subset_error(&nu, 0, 0).unwrap();
        assert!(rep.exhaustive && rep.passed());
        assert_eq!(rep.subsets_checked, 8);
        assert_eq!(rep.max_error, frac(1, 10));
    }

    #[test]
    fn integral_masses_quantize_exactly() {
        let nu = AtomicMeasure::uniform(5, frac(1, 7)).unwrap();
        let q = quantize_measure(&nu, 7, true).unwrap();
        assert_eq!(q.multiplicities, vec![1; 5]);
        assert_eq!(q.to_base_measure(), nu);
        assert_eq!(q.projection(3), Some(3));
        assert_eq!(q.projection(5), None);
    }

    #[test]
    fn materialized_projection() {
        let nu = AtomicMeasure::from_masses(vec![frac(1, 2), int(0), frac(3, 10)]).unwrap();
        let q = quantize_measure(&nu, 10, true).unwrap();
        assert_eq!(q.blocks.as_ref().unwrap(), &vec![0..5, 5..5, 5..8]);
        let image: Vec<usize> = (0..q.carrier_len()).map(|y| q.projection(y).unwrap()).collect();
        assert_eq!(image, vec![0, 0, 0, 0, 0, 2, 2, 2]);
    }

    #[test]
    fn measure_file_round_trip() {
        let nu = AtomicMeasure::from_masses(vec![frac(1, 3), frac(1, 8), int(2)]).unwrap();
        let text = nu.serialize();
        assert_eq!(text, "0 1/3\n1 0.125\n2 2\n");
        assert_eq!(AtomicMeasure::parse(&text).unwrap(), nu);
        assert!(AtomicMeasure::parse("1 0.5\n").is_err());
        assert!(AtomicMeasure::from_masses(vec![int(-1)]).is_err());
    }

    #[test]
    fn push_forward_preserves_total() {
        let nu = AtomicMeasure::random_probability(10, 50, 3).unwrap();
        let img = nu.push_forward(&[0, 0, 1, 1, 2, 2, 0, 1, 2, 2], 3).unwrap();
        assert_eq!(img.total(), int(1));
    }
}
