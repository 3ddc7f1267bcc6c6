//! Small divisors of non-resonant tuples and a Diophantine probe on Gram
//! matrices of real generators.

use num_bigint::BigInt;
use num_rational::{BigRational, Rational64};
use num_traits::{Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{for_each_tuple, ModeSet};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DivisorSurvey {
    pub sigma: u32,
    /// Size of J^{2σ+1}.
    pub total_tuples: u64,
    /// Tuples with nonzero defect.
    pub tuples_scanned: u64,
    /// Non-resonant tuples whose alternating sum is a mode.
    pub into_modes: u64,
    /// Smallest |defect| in user units; None when every tuple is resonant.
    pub min_delta: Option<f64>,
    /// First minimizing tuple in lexicographic order.
    pub argmin: Option<Vec<usize>>,
}

impl DivisorSurvey {
    pub fn all_resonant(&self) -> bool {
        self.tuples_scanned == 0
    }
}

fn norm_sq(v: &[i64]) -> i128 {
    v.iter().map(|&c| c as i128 * c as i128).sum()
}

/// Scans every tuple of J^{2σ+1} with nonzero defect.
pub fn survey_divisors(modes: &ModeSet) -> Result<DivisorSurvey> {
    let arity = modes.arity();
    let scale2 = (modes.scale() as f64).powi(2);
    let mut total = 0u64;
    let mut scanned = 0u64;
    let mut into = 0u64;
    let mut best: Option<(i128, Vec<usize>)> = None;
    for_each_tuple(modes.vectors(), modes.dim(), arity, |idx, sum, sq| {
        total += 1;
        let defect = (norm_sq(sum) - sq).abs();
        if defect == 0 {
            return;
        }
        scanned += 1;
        if modes.index_of(sum).is_some() {
            into += 1;
        }
        if best.as_ref().map_or(true, |(b, _)| defect < *b) {
            best = Some((defect, idx.to_vec()));
        }
    });
    if modes.is_integer_lattice() {
        if let Some((b, _)) = &best {
            // integer vectors give integer defects
            debug_assert!(*b >= 1);
        }
    }
    let (min_delta, argmin) = match best {
        Some((b, idx)) => (Some(b as f64 / scale2), Some(idx)),
        None => (None, None),
    };
    Ok(DivisorSurvey {
        sigma: modes.sigma(),
        total_tuples: total,
        tuples_scanned: scanned,
        into_modes: into,
        min_delta,
        argmin,
    })
}

/// Largest c with δ ≥ c·Π⟨κ_{ℓ_p}⟩^{−b} on the truncated set, one entry per
/// b (None when no tuple is non-resonant). ⟨κ⟩² = 1 + |κ|² in user units.
pub fn fit_generalized_bound(modes: &ModeSet, b_grid: &[f64]) -> Result<Vec<(f64, Option<f64>)>> {
    if let Some(b) = b_grid.iter().find(|b| !(**b >= 0.0 && b.is_finite())) {
        return Err(Error::InvalidParameter(format!("exponent b must be ≥ 0, got {b}")));
    }
    let scale2 = (modes.scale() as f64).powi(2);
    let log_bracket: Vec<f64> = modes
        .vectors()
        .iter()
        .map(|v| 0.5 * (1.0 + v.norm_sq() as f64 / scale2).ln())
        .collect();
    let mut best = vec![f64::INFINITY; b_grid.len()];
    let mut any = false;
    for_each_tuple(modes.vectors(), modes.dim(), modes.arity(), |idx, sum, sq| {
        let defect = (norm_sq(sum) - sq).abs();
        if defect == 0 {
            return;
        }
        any = true;
        let delta = defect as f64 / scale2;
        let log_w: f64 = idx.iter().map(|&i| log_bracket[i]).sum();
        for (slot, &b) in best.iter_mut().zip(b_grid) {
            *slot = slot.min(delta * (b * log_w).exp());
        }
    });
    Ok(b_grid
        .iter()
        .zip(best)
        .map(|(&b, c)| (b, any.then_some(c)))
        .collect())
}

/// Unevaluated sum hi + lo with |lo| ≤ ulp(hi)/2 (about 106 bits).
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct DoubleDouble {
    pub hi: f64,
    pub lo: f64,
}

impl DoubleDouble {
    fn two_sum(a: f64, b: f64) -> (f64, f64) {
        let s = a + b;
        let bb = s - a;
        (s, (a - (s - bb)) + (b - bb))
    }

    fn two_prod(a: f64, b: f64) -> (f64, f64) {
        let p = a * b;
        (p, a.mul_add(b, -p))
    }

    pub fn from_f64(x: f64) -> Self {
        DoubleDouble { hi: x, lo: 0.0 }
    }

    pub fn add(self, o: DoubleDouble) -> Self {
        let (s, e) = Self::two_sum(self.hi, o.hi);
        let e = e + self.lo + o.lo;
        let (hi, lo) = Self::two_sum(s, e);
        DoubleDouble { hi, lo }
    }

    pub fn mul_f64(self, b: f64) -> Self {
        let (p, e) = Self::two_prod(self.hi, b);
        let e = e + self.lo * b;
        let (hi, lo) = Self::two_sum(p, e);
        DoubleDouble { hi, lo }
    }

    pub fn product(a: f64, b: f64) -> Self {
        let (hi, lo) = Self::two_prod(a, b);
        DoubleDouble { hi, lo }
    }

    pub fn to_f64(self) -> f64 {
        self.hi + self.lo
    }
}

/// Generators for [`gram_diophantine_probe`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Generators {
    Real(Vec<Vec<f64>>),
    Rational(Vec<Vec<Rational64>>),
}

impl Generators {
    fn shape(&self) -> (usize, Option<usize>) {
        match self {
            Generators::Real(v) => (v.len(), v.first().map(Vec::len)),
            Generators::Rational(v) => (v.len(), v.first().map(Vec::len)),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProbeOptions {
    pub beta_bound: i64,
    pub budget: u64,
    /// Exponent b' of the normalized constant C' = min |Σβ G|·(Σ|β|)^{b'}.
    pub b_prime: f64,
}

impl Default for ProbeOptions {
    fn default() -> Self {
        ProbeOptions {
            beta_bound: 6,
            budget: 10_000_000,
            b_prime: 1.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GramProbe {
    pub p: usize,
    /// Smallest nonzero |Σ β_ij κ_i·κ_j|.
    pub minimum: Option<f64>,
    /// Symmetric β attaining it, row-major p×p.
    pub argmin: Option<Vec<i64>>,
    /// Σ|β_ij| of the minimizer.
    pub argmin_weight: Option<u64>,
    /// Exact minimum as "num/den" when generators are rational.
    pub exact_minimum: Option<String>,
    /// C' for the requested b'.
    pub normalized_constant: Option<f64>,
    pub b_prime: f64,
    /// Combinations evaluating exactly to zero (relations among the Gram
    /// entries).
    pub zero_combinations: u64,
    pub scanned: u64,
    pub complete: bool,
}

enum Gram {
    Real(Vec<DoubleDouble>),
    /// Integer numerators over a common denominator.
    Scaled(Vec<i128>, i128),
}

fn build_gram(gens: &Generators) -> Result<(usize, Gram, Option<Vec<Vec<BigRational>>>)> {
    let (p, d) = gens.shape();
    let d = d.ok_or_else(|| Error::InvalidParameter("no generators".into()))?;
    match gens {
        Generators::Real(v) => {
            if v.iter().any(|g| g.len() != d) {
                return Err(Error::DimensionMismatch { expected: d, found: v.iter().map(Vec::len).find(|&l| l != d).unwrap_or(d) });
            }
            if v.iter().flatten().any(|x| !x.is_finite()) {
                return Err(Error::InvalidParameter("generators must be finite".into()));
            }
            let mut g = Vec::with_capacity(p * (p + 1) / 2);
            for i in 0..p {
                for j in i..p {
                    let dot = v[i]
                        .iter()
                        .zip(&v[j])
                        .fold(DoubleDouble::default(), |acc, (a, b)| acc.add(DoubleDouble::product(*a, *b)));
                    g.push(dot);
                }
            }
            Ok((p, Gram::Real(g), None))
        }
        Generators::Rational(v) => {
            if v.iter().any(|g| g.len() != d) {
                return Err(Error::DimensionMismatch { expected: d, found: v.iter().map(Vec::len).find(|&l| l != d).unwrap_or(d) });
            }
            let big: Vec<Vec<BigRational>> = v
                .iter()
                .map(|g| {
                    g.iter()
                        .map(|r| BigRational::new(BigInt::from(*r.numer()), BigInt::from(*r.denom())))
                        .collect()
                })
                .collect();
            let mut entries = Vec::new();
            for i in 0..p {
                for j in i..p {
                    let dot = big[i]
                        .iter()
                        .zip(&big[j])
                        .fold(BigRational::zero(), |acc, (a, b)| acc + a * b);
                    entries.push(dot);
                }
            }
            let q = entries
                .iter()
                .fold(BigInt::from(1), |acc, e| num_integer::lcm(acc, e.denom().clone()));
            let to_i128 = |x: &BigInt| -> Result<i128> {
                i128::try_from(x).map_err(|_| Error::InvalidParameter("Gram entries too large for exact scan".into()))
            };
            let nums = entries
                .iter()
                .map(|e| to_i128(&(e.numer() * (&q / e.denom()))))
                .collect::<Result<Vec<_>>>()?;
            Ok((p, Gram::Scaled(nums, to_i128(&q)?), Some(big)))
        }
    }
}

/// Scans symmetric integer matrices β (|β_ij| ≤ B) for the smallest nonzero
/// |Σ_ij β_ij κ_i·κ_j|.
///
/// Because the Gram matrix is symmetric only γ_ij = β_ij + β_ji (i < j) and
/// β_ii matter; antisymmetric β always give zero and are not enumerated.
/// A γ is reported through its cheapest symmetric β, so Σ|β| = Σ|γ|.
pub fn gram_diophantine_probe(gens: &Generators, opts: &ProbeOptions) -> Result<GramProbe> {
    if opts.beta_bound < 1 {
        return Err(Error::InvalidParameter("β bound must be ≥ 1".into()));
    }
    let (p, gram, exact) = build_gram(gens)?;
    let slots: Vec<(usize, usize)> = (0..p).flat_map(|i| (i..p).map(move |j| (i, j))).collect();
    let bounds: Vec<i64> = slots
        .iter()
        .map(|&(i, j)| if i == j { opts.beta_bound } else { 2 * opts.beta_bound })
        .collect();
    let mut gamma: Vec<i64> = bounds.iter().map(|b| -b).collect();

    let mut scanned = 0u64;
    let mut zeros = 0u64;
    let mut complete = true;
    // (|value| as f64, exact numerator if rational, gamma, weight)
    let mut best: Option<(f64, Option<i128>, Vec<i64>, u64)> = None;
    let mut best_norm = f64::INFINITY;
    'scan: loop {
        if gamma.iter().any(|&g| g != 0) {
            if scanned >= opts.budget {
                complete = false;
                break 'scan;
            }
            scanned += 1;
            let weight: u64 = gamma.iter().map(|g| g.unsigned_abs()).sum();
            let (abs, num) = match &gram {
                Gram::Real(g) => {
                    let v = g
                        .iter()
                        .zip(&gamma)
                        .fold(DoubleDouble::default(), |acc, (e, &c)| acc.add(e.mul_f64(c as f64)));
                    (v.to_f64().abs(), None)
                }
                Gram::Scaled(g, q) => {
                    let v: i128 = g.iter().zip(&gamma).map(|(e, &c)| e * c as i128).sum();
                    (v.unsigned_abs() as f64 / *q as f64, Some(v.abs()))
                }
            };
            let is_zero = match num {
                Some(v) => v == 0,
                None => abs == 0.0,
            };
            if is_zero {
                zeros += 1;
            } else {
                // ties go to the cheapest β
                let better = match (&best, num) {
                    (None, _) => true,
                    (Some((_, Some(bn), _, bw)), Some(v)) => v < *bn || (v == *bn && weight < *bw),
                    (Some((b, _, _, bw)), None) => abs < *b || (abs == *b && weight < *bw),
                    _ => false,
                };
                if better {
                    best = Some((abs, num, gamma.clone(), weight));
                }
                best_norm = best_norm.min(abs * (weight as f64).powf(opts.b_prime));
            }
        }
        // odometer over γ
        let mut k = gamma.len();
        loop {
            if k == 0 {
                break 'scan;
            }
            k -= 1;
            gamma[k] += 1;
            if gamma[k] <= bounds[k] {
                break;
            }
            gamma[k] = -bounds[k];
        }
    }

    let mut out = GramProbe {
        p,
        minimum: None,
        argmin: None,
        argmin_weight: None,
        exact_minimum: None,
        normalized_constant: best.as_ref().map(|_| best_norm),
        b_prime: opts.b_prime,
        zero_combinations: zeros,
        scanned,
        complete,
    };
    if !complete {
        log::warn!("Gram probe stopped after {} combinations (budget exhausted)", scanned);
    }
    if let Some((abs, _, g, w)) = best {
        let mut beta = vec![0i64; p * p];
        for (&(i, j), &c) in slots.iter().zip(&g) {
            if i == j {
                beta[i * p + i] = c;
            } else {
                // split γ as evenly as possible between β_ij and β_ji
                let a = c / 2;
                beta[i * p + j] = c - a;
                beta[j * p + i] = a;
            }
        }
        if let Some(big) = &exact {
            let mut v = BigRational::zero();
            for i in 0..p {
                for j in 0..p {
                    let dot = big[i].iter().zip(&big[j]).fold(BigRational::zero(), |acc, (a, b)| acc + a * b);
                    v += dot * BigRational::from_integer(BigInt::from(beta[i * p + j]));
                }
            }
            let v = v.abs();
            if v.is_zero() {
                return Err(Error::InvalidParameter("exact re-verification found a zero minimizer".into()));
            }
            out.exact_minimum = Some(format!("{}/{}", v.numer(), v.denom()));
        }
        out.minimum = Some(abs);
        out.argmin = Some(beta);
        out.argmin_weight = Some(w);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::WaveVector;

    fn modes(dim: usize, sigma: u32, v: &[&[i64]]) -> ModeSet {
        ModeSet::from_initial(dim, sigma, v.iter().map(|c| WaveVector::new(c.to_vec())).collect()).unwrap()
    }

    #[test]
    fn two_modes_cubic() {
        let m = modes(1, 1, &[&[0], &[1]]);
        let s = survey_divisors(&m).unwrap();
        assert_eq!(s.total_tuples, 8);
        // (0,1,0) and (1,0,1) are the only non-resonant triples
        assert_eq!(s.tuples_scanned, 2);
        assert_eq!(s.into_modes, 0);
        assert_eq!(s.min_delta, Some(2.0));
        assert_eq!(s.argmin, Some(vec![0, 1, 0]));
    }

    #[test]
    fn single_mode_is_all_resonant() {
        let s = survey_divisors(&modes(2, 2, &[&[3, -1]])).unwrap();
        assert!(s.all_resonant());
        assert_eq!(s.min_delta, None);
        let fit = fit_generalized_bound(&modes(2, 2, &[&[3, -1]]), &[0.0, 1.0]).unwrap();
        assert!(fit.iter().all(|(_, c)| c.is_none()));
    }

    #[test]
    fn rational_modes_report_user_units() {
        let m = modes(1, 1, &[&[0], &[1]]).with_scale(2).unwrap();
        let s = survey_divisors(&m).unwrap();
        assert_eq!(s.min_delta, Some(0.5));
    }

    #[test]
    fn fitted_bound_at_zero_is_min_delta() {
        let m = modes(2, 1, &[&[0, 0], &[1, 0], &[0, 2], &[-1, 1]]);
        let s = survey_divisors(&m).unwrap();
        let fit = fit_generalized_bound(&m, &[0.0, 0.5, 2.0]).unwrap();
        assert_eq!(fit[0].1, s.min_delta);
        assert!(fit[0].1 <= fit[1].1 && fit[1].1 <= fit[2].1);
        assert!(fit_generalized_bound(&m, &[-1.0]).is_err());
    }

    #[test]
    fn double_double_keeps_cancelled_bits() {
        let a = DoubleDouble::from_f64(1.0).add(DoubleDouble::from_f64(1e-20));
        let b = a.add(DoubleDouble::from_f64(-1.0));
        assert_eq!(b.to_f64(), 1e-20);
    }

    #[test]
    fn probe_examples() {
        let opts = ProbeOptions::default();
        let one = gram_diophantine_probe(&Generators::Real(vec![vec![1.0]]), &opts).unwrap();
        assert_eq!(one.minimum, Some(1.0));
        assert_eq!(one.scanned, 12);

        let ortho = gram_diophantine_probe(&Generators::Real(vec![vec![1.0, 0.0], vec![0.0, 1.0]]), &opts).unwrap();
        assert_eq!(ortho.minimum, Some(1.0));
        let beta = ortho.argmin.unwrap();
        assert_eq!(beta.iter().map(|b| b.abs()).sum::<i64>(), 1);
        assert!(ortho.zero_combinations > 0);

        let r = |n, d| Rational64::new(n, d);
        let rat = Generators::Rational(vec![vec![r(1, 2), r(0, 1)], vec![r(1, 3), r(1, 1)]]);
        let probe = gram_diophantine_probe(&rat, &opts).unwrap();
        // Gram entries 1/4, 1/6, 10/9 share denominator 36
        assert!(probe.minimum.unwrap() >= 1.0 / 36.0 - 1e-15);
        assert_eq!(probe.exact_minimum.as_deref(), Some("1/36"));
        assert!(probe.complete);
    }

    #[test]
    fn probe_budget_flags_partial_scan() {
        let opts = ProbeOptions {
            budget: 100,
            ..ProbeOptions::default()
        };
        let probe = gram_diophantine_probe(&Generators::Real(vec![vec![1.0, 0.3], vec![0.2, 1.7]]), &opts).unwrap();
        assert!(!probe.complete);
        assert_eq!(probe.scanned, 100);
    }
}
