//! Wave vectors, characteristic plane-wave phases and resonance closure.
//!
//! All arithmetic here is exact. Rational user input is rescaled to an
//! integer lattice once at ingestion (see [`scale_to_lattice`]) and every
//! downstream module addresses modes by their index in the lexicographically
//! sorted [`ModeSet`].

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::ops::{Add, Neg, Sub};

use num_integer::Integer;
use num_rational::{Ratio, Rational64};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Integer lattice vector κ.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct WaveVector(Vec<i64>);

impl WaveVector {
    pub fn new(coords: Vec<i64>) -> Self {
        WaveVector(coords)
    }

    pub fn zero(dim: usize) -> Self {
        WaveVector(vec![0; dim])
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn coords(&self) -> &[i64] {
        &self.0
    }

    pub fn norm_sq(&self) -> i128 {
        self.0.iter().map(|&c| (c as i128) * (c as i128)).sum()
    }

    pub fn sup_norm(&self) -> i64 {
        self.0.iter().map(|c| c.abs()).max().unwrap_or(0)
    }

    pub fn dot(&self, other: &WaveVector) -> i128 {
        self.0
            .iter()
            .zip(&other.0)
            .map(|(&a, &b)| (a as i128) * (b as i128))
            .sum()
    }

    pub fn scaled(&self, factor: i64) -> WaveVector {
        WaveVector(self.0.iter().map(|c| c * factor).collect())
    }

    fn check_dim(&self, other: &WaveVector) -> Result<()> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: other.dim(),
            });
        }
        Ok(())
    }
}

impl From<Vec<i64>> for WaveVector {
    fn from(v: Vec<i64>) -> Self {
        WaveVector(v)
    }
}

impl<const N: usize> From<[i64; N]> for WaveVector {
    fn from(v: [i64; N]) -> Self {
        WaveVector(v.to_vec())
    }
}

impl fmt::Display for WaveVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, c) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{c}")?;
        }
        write!(f, ")")
    }
}

impl Add for &WaveVector {
    type Output = WaveVector;
    fn add(self, rhs: &WaveVector) -> WaveVector {
        WaveVector(self.0.iter().zip(&rhs.0).map(|(a, b)| a + b).collect())
    }
}

impl Sub for &WaveVector {
    type Output = WaveVector;
    fn sub(self, rhs: &WaveVector) -> WaveVector {
        WaveVector(self.0.iter().zip(&rhs.0).map(|(a, b)| a - b).collect())
    }
}

impl Neg for &WaveVector {
    type Output = WaveVector;
    fn neg(self) -> WaveVector {
        WaveVector(self.0.iter().map(|a| -a).collect())
    }
}

/// Characteristic phase φ(t,x) = κ·x − t|κ|²/2.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Phase {
    pub kappa: WaveVector,
    /// Temporal frequency |κ|²/2.
    pub omega: Rational64,
}

impl Phase {
    pub fn of(kappa: WaveVector) -> Self {
        let omega = Ratio::new(kappa.norm_sq() as i64, 2);
        Phase { kappa, omega }
    }

    pub fn eval(&self, t: f64, x: &[f64]) -> f64 {
        let kx: f64 = self
            .kappa
            .coords()
            .iter()
            .zip(x)
            .map(|(&k, &xi)| k as f64 * xi)
            .sum();
        let omega = *self.omega.numer() as f64 / *self.omega.denom() as f64;
        kx - omega * t
    }
}

/// Rescales rational vectors by the LCM of all denominators.
///
/// Returns the integer vectors together with the scale factor `s`, so that a
/// user vector equals `lattice / s`.
pub fn scale_to_lattice(vectors: &[Vec<Rational64>]) -> Result<(Vec<WaveVector>, i64)> {
    let dim = vectors.first().map(Vec::len).unwrap_or(0);
    let mut scale: i64 = 1;
    for v in vectors {
        if v.len() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: v.len(),
            });
        }
        for c in v {
            scale = scale.lcm(c.denom());
        }
    }
    let scaled = vectors
        .iter()
        .map(|v| {
            WaveVector(
                v.iter()
                    .map(|c| (c * Ratio::from_integer(scale)).to_integer())
                    .collect(),
            )
        })
        .collect();
    Ok((scaled, scale))
}

fn alternating_sum(vectors: &[&WaveVector], dim: usize) -> (Vec<i64>, i128) {
    let mut sum = vec![0i64; dim];
    let mut sq = 0i128;
    for (p, v) in vectors.iter().enumerate() {
        let sign = if p % 2 == 0 { 1 } else { -1 };
        for (s, c) in sum.iter_mut().zip(v.coords()) {
            *s += sign * c;
        }
        sq += sign as i128 * v.norm_sq();
    }
    (sum, sq)
}

fn norm_sq_slice(v: &[i64]) -> i128 {
    v.iter().map(|&c| (c as i128) * (c as i128)).sum()
}

/// |Σ(−1)^{p+1}κ_p|² − Σ(−1)^{p+1}|κ_p|² for an odd-length list.
///
/// Zero iff the alternating combination of the phases is again
/// characteristic.
pub fn resonance_defect(vectors: &[WaveVector]) -> Result<i128> {
    if vectors.len() % 2 == 0 {
        return Err(Error::EvenTupleLength(vectors.len()));
    }
    let dim = vectors[0].dim();
    for v in vectors {
        vectors[0].check_dim(v)?;
    }
    let refs: Vec<&WaveVector> = vectors.iter().collect();
    let (sum, sq) = alternating_sum(&refs, dim);
    Ok(norm_sq_slice(&sum) - sq)
}

/// Fourth corner κ_k − κ_ℓ + κ_m of the rectangle with κ_ℓ opposite the
/// created vector, or `None` for a non-right angle at κ_ℓ or one of the two
/// degenerate configurations.
pub fn complete_rectangle(
    k: &WaveVector,
    l: &WaveVector,
    m: &WaveVector,
) -> Result<Option<WaveVector>> {
    k.check_dim(l)?;
    k.check_dim(m)?;
    if k == l || m == l {
        return Ok(None);
    }
    if (l - m).dot(&(l - k)) != 0 {
        return Ok(None);
    }
    Ok(Some(&(k - l) + m))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClosureLimits {
    pub max_generations: u32,
    /// Bound on |κ|∞ in user units.
    pub max_sup_norm: i64,
}

impl Default for ClosureLimits {
    fn default() -> Self {
        ClosureLimits {
            max_generations: 8,
            max_sup_norm: 64,
        }
    }
}

/// Finite phase index set J, sorted lexicographically.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModeSet {
    dim: usize,
    sigma: u32,
    /// Lattice units per user unit.
    scale: i64,
    vectors: Vec<WaveVector>,
    generations: Vec<u32>,
    saturated: bool,
    #[serde(skip)]
    index: HashMap<Vec<i64>, usize>,
}

impl ModeSet {
    /// Mode set made of initial vectors only (all generation 0), not yet
    /// closed. `saturated` is false until a closure certifies it.
    pub fn from_initial(dim: usize, sigma: u32, vectors: Vec<WaveVector>) -> Result<Self> {
        let generations = vec![0; vectors.len()];
        Self::build(dim, sigma, 1, vectors, generations, false)
    }

    fn build(
        dim: usize,
        sigma: u32,
        scale: i64,
        vectors: Vec<WaveVector>,
        generations: Vec<u32>,
        saturated: bool,
    ) -> Result<Self> {
        if sigma == 0 {
            return Err(Error::InvalidParameter("σ must be at least 1".into()));
        }
        if scale <= 0 {
            return Err(Error::InvalidParameter("lattice scale must be positive".into()));
        }
        let mut tagged: Vec<(WaveVector, u32)> = vectors.into_iter().zip(generations).collect();
        for (v, _) in &tagged {
            if v.dim() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: v.dim(),
                });
            }
        }
        tagged.sort();
        for w in tagged.windows(2) {
            if w[0].0 == w[1].0 {
                return Err(Error::InvalidParameter(format!(
                    "duplicate wave vector {}",
                    w[0].0
                )));
            }
        }
        let (vectors, generations): (Vec<_>, Vec<_>) = tagged.into_iter().unzip();
        let index = vectors
            .iter()
            .enumerate()
            .map(|(i, v)| (v.0.clone(), i))
            .collect();
        Ok(ModeSet {
            dim,
            sigma,
            scale,
            vectors,
            generations,
            saturated,
            index,
        })
    }

    pub fn with_scale(mut self, scale: i64) -> Result<Self> {
        if scale <= 0 {
            return Err(Error::InvalidParameter("lattice scale must be positive".into()));
        }
        self.scale = scale;
        Ok(self)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn sigma(&self) -> u32 {
        self.sigma
    }

    /// Number of positions in a resonant tuple, 2σ+1.
    pub fn arity(&self) -> usize {
        2 * self.sigma as usize + 1
    }

    pub fn scale(&self) -> i64 {
        self.scale
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn vectors(&self) -> &[WaveVector] {
        &self.vectors
    }

    pub fn vector(&self, j: usize) -> &WaveVector {
        &self.vectors[j]
    }

    pub fn generation(&self, j: usize) -> u32 {
        self.generations[j]
    }

    pub fn generations(&self) -> &[u32] {
        &self.generations
    }

    pub fn saturated(&self) -> bool {
        self.saturated
    }

    pub fn index_of(&self, v: &[i64]) -> Option<usize> {
        if self.index.is_empty() && !self.vectors.is_empty() {
            // deserialized without the lookup table
            return self.vectors.iter().position(|w| w.coords() == v);
        }
        self.index.get(v).copied()
    }

    /// κ_j in user units.
    pub fn user_vector(&self, j: usize) -> Vec<f64> {
        self.vectors[j]
            .coords()
            .iter()
            .map(|&c| c as f64 / self.scale as f64)
            .collect()
    }

    /// κ_j in user units, exactly.
    pub fn user_vector_exact(&self, j: usize) -> Vec<Rational64> {
        self.vectors[j]
            .coords()
            .iter()
            .map(|&c| Ratio::new(c, self.scale))
            .collect()
    }

    pub fn is_integer_lattice(&self) -> bool {
        self.scale == 1
    }

    pub fn max_sup_norm(&self) -> i64 {
        self.vectors.iter().map(WaveVector::sup_norm).max().unwrap_or(0)
    }
}

/// A resonant (2σ+1)-tuple of mode indices feeding the target mode.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ResonantTuple {
    pub indices: Vec<usize>,
    pub target: usize,
}

/// Visits every ordered tuple in `0..n` of length `len`, passing the running
/// alternating vector sum and alternating sum of squared norms.
pub(crate) fn for_each_tuple<F>(vectors: &[WaveVector], dim: usize, len: usize, mut visit: F)
where
    F: FnMut(&[usize], &[i64], i128),
{
    let n = vectors.len();
    if n == 0 || len == 0 {
        return;
    }
    let norms: Vec<i128> = vectors.iter().map(WaveVector::norm_sq).collect();
    let mut idx = vec![0usize; len];
    // prefix[p] holds the partial sums after positions 0..p
    let mut prefix_vec = vec![0i64; (len + 1) * dim];
    let mut prefix_sq = vec![0i128; len + 1];
    let mut depth = 0usize;
    loop {
        // fill positions depth..len with the current indices
        while depth < len {
            let sign: i64 = if depth % 2 == 0 { 1 } else { -1 };
            let v = vectors[idx[depth]].coords();
            let (head, tail) = prefix_vec.split_at_mut((depth + 1) * dim);
            let prev = &head[depth * dim..];
            for c in 0..dim {
                tail[c] = prev[c] + sign * v[c];
            }
            prefix_sq[depth + 1] = prefix_sq[depth] + sign as i128 * norms[idx[depth]];
            depth += 1;
        }
        visit(&idx, &prefix_vec[len * dim..], prefix_sq[len]);
        // advance the odometer
        let mut p = len;
        loop {
            if p == 0 {
                return;
            }
            p -= 1;
            idx[p] += 1;
            if idx[p] < n {
                break;
            }
            idx[p] = 0;
        }
        depth = p;
    }
}

/// One created vector with the first tuple (in scan order) producing it.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CreationEdge {
    pub generation: u32,
    pub tuple: Vec<WaveVector>,
    pub created: WaveVector,
}

#[derive(Clone, Debug)]
pub struct Closure {
    pub modes: ModeSet,
    pub edges: Vec<CreationEdge>,
    /// Vectors rejected by the sup-norm limit.
    pub truncated: Vec<WaveVector>,
}

struct GenerationScan {
    created: BTreeMap<WaveVector, Vec<WaveVector>>,
    over_limit: BTreeMap<WaveVector, ()>,
}

fn scan_generation(
    vectors: &[WaveVector],
    dim: usize,
    arity: usize,
    lattice_limit: i64,
    known: &HashMap<Vec<i64>, usize>,
) -> GenerationScan {
    let mut created: BTreeMap<WaveVector, Vec<usize>> = BTreeMap::new();
    let mut over_limit = BTreeMap::new();
    for_each_tuple(vectors, dim, arity, |idx, sum, sq| {
        if norm_sq_slice(sum) != sq || known.contains_key(sum) {
            return;
        }
        let v = WaveVector(sum.to_vec());
        if v.sup_norm() > lattice_limit {
            over_limit.insert(v, ());
        } else {
            created.entry(v).or_insert_with(|| idx.to_vec());
        }
    });
    GenerationScan {
        created: created
            .into_iter()
            .map(|(v, idx)| (v, idx.iter().map(|&i| vectors[i].clone()).collect()))
            .collect(),
        over_limit,
    }
}

/// Closes `initial` under zero-defect (2σ+1)-wave interactions.
///
/// Each generation scans all ordered tuples of the previous generation's set.
/// When the generation limit is reached one extra scan decides whether the
/// set happens to be a fixed point; vectors beyond `max_sup_norm` are never
/// added. Either limit leaves `saturated == false`.
pub fn close_under_resonances(
    initial: &[WaveVector],
    sigma: u32,
    limits: ClosureLimits,
) -> Result<Closure> {
    close_scaled(initial, sigma, 1, limits)
}

/// Same as [`close_under_resonances`] for vectors already scaled by
/// [`scale_to_lattice`].
pub fn close_scaled(
    initial: &[WaveVector],
    sigma: u32,
    scale: i64,
    limits: ClosureLimits,
) -> Result<Closure> {
    if initial.is_empty() {
        return Err(Error::InvalidParameter("initial mode set is empty".into()));
    }
    if limits.max_generations == 0 || limits.max_sup_norm <= 0 {
        return Err(Error::InvalidParameter("closure limits must be positive".into()));
    }
    let dim = initial[0].dim();
    let mut modes = ModeSet::build(
        dim,
        sigma,
        scale,
        initial.to_vec(),
        vec![0; initial.len()],
        false,
    )?;
    let arity = modes.arity();
    let lattice_limit = limits.max_sup_norm.saturating_mul(scale);
    let mut edges = Vec::new();
    let mut truncated: BTreeMap<WaveVector, ()> = BTreeMap::new();

    let mut saturated = false;
    let mut generation = 0;
    loop {
        let scan = scan_generation(&modes.vectors, dim, arity, lattice_limit, &modes.index);
        let hit_norm_limit = !scan.over_limit.is_empty();
        truncated.extend(scan.over_limit);
        if scan.created.is_empty() {
            saturated = !hit_norm_limit && truncated.is_empty();
            break;
        }
        if generation == limits.max_generations {
            // probe scan found new vectors: not a fixed point
            break;
        }
        generation += 1;
        let mut vectors = modes.vectors.clone();
        let mut generations = modes.generations.clone();
        for (v, tuple) in scan.created {
            edges.push(CreationEdge {
                generation,
                tuple,
                created: v.clone(),
            });
            vectors.push(v);
            generations.push(generation);
        }
        modes = ModeSet::build(dim, sigma, scale, vectors, generations, false)?;
    }
    modes.saturated = saturated;
    if !saturated {
        log::warn!(
            "resonance closure truncated after {} generation(s) with {} modes ({} vector(s) beyond the sup-norm limit)",
            generation,
            modes.len(),
            truncated.len()
        );
    }
    Ok(Closure {
        modes,
        edges,
        truncated: truncated.into_keys().collect(),
    })
}

/// Per-target resonant tuples I_j, stored flat with stride 2σ+1.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Interactions {
    arity: usize,
    per_target: Vec<Vec<usize>>,
}

impl Interactions {
    /// Enumerates I_j for every j in one pass over J^{2σ+1}.
    pub fn enumerate(modes: &ModeSet) -> Self {
        let arity = modes.arity();
        let mut per_target = vec![Vec::new(); modes.len()];
        for_each_tuple(&modes.vectors, modes.dim, arity, |idx, sum, sq| {
            if norm_sq_slice(sum) != sq {
                return;
            }
            if let Some(j) = modes.index_of(sum) {
                per_target[j].extend_from_slice(idx);
            }
        });
        Interactions { arity, per_target }
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn num_targets(&self) -> usize {
        self.per_target.len()
    }

    pub fn for_target(&self, j: usize) -> impl Iterator<Item = &[usize]> {
        self.per_target[j].chunks_exact(self.arity)
    }

    pub fn count(&self, j: usize) -> usize {
        self.per_target[j].len() / self.arity
    }

    pub fn total(&self) -> usize {
        self.per_target.iter().map(|v| v.len() / self.arity).sum()
    }

    pub fn tuples(&self, j: usize) -> Vec<ResonantTuple> {
        self.for_target(j)
            .map(|t| ResonantTuple {
                indices: t.to_vec(),
                target: j,
            })
            .collect()
    }
}

/// I_j for a single target: scans J^{2σ} and solves for the last index.
pub fn enumerate_interactions(modes: &ModeSet, j: usize) -> Result<Vec<ResonantTuple>> {
    if j >= modes.len() {
        return Err(Error::IndexOutOfRange {
            index: j,
            len: modes.len(),
        });
    }
    let target = modes.vector(j).coords();
    let target_sq = modes.vector(j).norm_sq();
    let dim = modes.dim;
    let mut out = Vec::new();
    let mut last = vec![0i64; dim];
    for_each_tuple(&modes.vectors, dim, modes.arity() - 1, |idx, sum, sq| {
        for c in 0..dim {
            last[c] = target[c] - sum[c];
        }
        let Some(l) = modes.index_of(&last) else {
            return;
        };
        if sq + modes.vector(l).norm_sq() == target_sq {
            let mut indices = idx.to_vec();
            indices.push(l);
            out.push(ResonantTuple { indices, target: j });
        }
    });
    out.sort();
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn wv<const N: usize>(c: [i64; N]) -> WaveVector {
        WaveVector::from(c)
    }

    #[test]
    fn defect_examples() {
        assert_eq!(resonance_defect(&[wv([1, 0]), wv([1, 1]), wv([0, 1])]).unwrap(), 0);
        assert_eq!(resonance_defect(&[wv([3, -2]), wv([3, -2]), wv([3, -2])]).unwrap(), 0);
        // quintic creation of κ = 3 from {−1, 0, 2}
        let t = [wv([-1]), wv([0]), wv([2]), wv([0]), wv([2])];
        assert_eq!(resonance_defect(&t).unwrap(), 0);
        let (sum, _) = alternating_sum(&t.iter().collect::<Vec<_>>(), 1);
        assert_eq!(sum, vec![3]);
    }

    #[test]
    fn defect_matches_rectangle_identity() {
        // for σ=1 the defect is 2(κ_ℓ−κ_m)·(κ_ℓ−κ_k)
        let (k, l, m) = (wv([2, -1]), wv([0, 3]), wv([-4, 1]));
        let d = resonance_defect(&[k.clone(), l.clone(), m.clone()]).unwrap();
        assert_eq!(d, 2 * (&l - &m).dot(&(&l - &k)));
    }

    #[test]
    fn defect_errors() {
        assert!(matches!(
            resonance_defect(&[wv([1]), wv([2])]),
            Err(Error::EvenTupleLength(2))
        ));
        assert!(matches!(
            resonance_defect(&[wv([1]), wv([2, 0]), wv([1])]),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn rectangle_examples() {
        assert_eq!(
            complete_rectangle(&wv([0, 1]), &wv([1, 1]), &wv([1, 0])).unwrap(),
            Some(wv([0, 0]))
        );
        assert_eq!(
            complete_rectangle(&wv([1, 1]), &wv([1, 2]), &wv([3, 2])).unwrap(),
            Some(wv([3, 1]))
        );
        assert_eq!(
            complete_rectangle(&wv([2, 5]), &wv([2, 5]), &wv([7, 7])).unwrap(),
            None
        );
        assert_eq!(
            complete_rectangle(&wv([0, 0]), &wv([1, 0]), &wv([3, 1])).unwrap(),
            None
        );
        assert!(complete_rectangle(&wv([0]), &wv([1, 0]), &wv([3, 1])).is_err());
    }

    #[test]
    fn rational_ingestion() {
        let v = vec![
            vec![Ratio::new(1, 2), Ratio::new(1, 3)],
            vec![Ratio::from_integer(1), Ratio::new(-2, 3)],
        ];
        let (scaled, s) = scale_to_lattice(&v).unwrap();
        assert_eq!(s, 6);
        assert_eq!(scaled, vec![wv([3, 2]), wv([6, -4])]);
    }

    #[test]
    fn phase_frequency_is_half_norm() {
        let p = Phase::of(wv([3, 1]));
        assert_eq!(p.omega, Ratio::new(5, 1));
        assert!((p.eval(2.0, &[1.0, 1.0]) - (4.0 - 10.0)).abs() < 1e-15);
    }

    #[test]
    fn mode_set_rejects_duplicates() {
        assert!(ModeSet::from_initial(1, 1, vec![wv([1]), wv([1])]).is_err());
        let m = ModeSet::from_initial(1, 1, vec![wv([3]), wv([-1])]).unwrap();
        assert_eq!(m.vectors(), &[wv([-1]), wv([3])]);
        assert_eq!(m.index_of(&[3]), Some(1));
    }

    #[test]
    fn enumerate_out_of_range() {
        let m = ModeSet::from_initial(1, 1, vec![wv([0])]).unwrap();
        assert!(matches!(
            enumerate_interactions(&m, 3),
            Err(Error::IndexOutOfRange { index: 3, len: 1 })
        ));
    }

    #[test]
    fn single_mode_has_one_tuple() {
        for sigma in 1..=3 {
            let m = ModeSet::from_initial(2, sigma, vec![wv([4, -1])]).unwrap();
            let t = enumerate_interactions(&m, 0).unwrap();
            assert_eq!(t.len(), 1);
            assert!(t[0].indices.iter().all(|&i| i == 0));
            assert_eq!(t[0].indices.len(), 2 * sigma as usize + 1);
        }
    }

    #[test]
    fn table_agrees_with_single_target_scan() {
        let m = ModeSet::from_initial(
            2,
            1,
            vec![wv([0, 1]), wv([1, 1]), wv([1, 0]), wv([0, 0]), wv([2, 3])],
        )
        .unwrap();
        let table = Interactions::enumerate(&m);
        for j in 0..m.len() {
            assert_eq!(table.tuples(j), enumerate_interactions(&m, j).unwrap());
        }
    }

    #[test]
    fn closure_requires_input() {
        assert!(close_under_resonances(&[], 1, ClosureLimits::default()).is_err());
        let bad = ClosureLimits {
            max_generations: 0,
            max_sup_norm: 4,
        };
        assert!(close_under_resonances(&[wv([0])], 1, bad).is_err());
    }

    #[test]
    fn sup_norm_limit_truncates() {
        let limits = ClosureLimits {
            max_generations: 8,
            max_sup_norm: 1,
        };
        // the only candidate corner (3,1) is beyond the limit
        let c = close_under_resonances(&[wv([1, 1]), wv([1, 2]), wv([3, 2])], 1, limits).unwrap();
        assert!(!c.modes.saturated());
        assert_eq!(c.modes.len(), 3);
        assert_eq!(c.truncated, vec![wv([3, 1])]);
    }
}
