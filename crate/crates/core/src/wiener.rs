//! Wiener-algebra norms on finite Fourier representations.
//!
//! On the torus a function is a finite series Σ b_k e^{iκ_k·y} and
//! ‖f‖_W = Σ|b_k|. On the Euclidean box the L¹ norm of the Fourier transform
//! is discretized as a Δξ-weighted sum over the grid DFT, with the forward
//! transform normalized by the cell volume:
//!
//! ```text
//! ‖f‖_W ≈ (2π)^{−d/2} (Δx Δξ)^d Σ_k |DFT(f)_k| = (2π)^{d/2} n^{−d} Σ_k |DFT(f)_k|
//! ```
//!
//! so that a constant on the box has norm (2π)^{d/2}, as its continuous
//! transform does.

use std::collections::btree_map::Entry;
use std::collections::BTreeMap;
use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{signed_freq, unravel, BoxGrid, FftNd, C64};

/// Coefficients below this magnitude are dropped.
pub const PRUNE_BELOW: f64 = 1e-30;

/// Finite Fourier series Σ b_k e^{iκ_k·y} with integer frequencies.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FourierSeries {
    dim: usize,
    terms: BTreeMap<Vec<i64>, C64>,
}

impl FourierSeries {
    pub fn zero(dim: usize) -> Self {
        FourierSeries {
            dim,
            terms: BTreeMap::new(),
        }
    }

    pub fn constant(dim: usize, c: C64) -> Self {
        let mut f = Self::zero(dim);
        f.add_term(vec![0; dim], c);
        f
    }

    pub fn from_terms<I>(dim: usize, terms: I) -> Result<Self>
    where
        I: IntoIterator<Item = (Vec<i64>, C64)>,
    {
        let mut f = Self::zero(dim);
        for (k, c) in terms {
            if k.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: k.len(),
                });
            }
            f.add_term(k, c);
        }
        Ok(f)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&[i64], C64)> {
        self.terms.iter().map(|(k, c)| (k.as_slice(), *c))
    }

    pub fn coefficient(&self, k: &[i64]) -> C64 {
        self.terms.get(k).copied().unwrap_or_default()
    }

    fn add_term(&mut self, k: Vec<i64>, c: C64) {
        match self.terms.entry(k) {
            Entry::Occupied(mut e) => {
                *e.get_mut() += c;
                if e.get().norm() < PRUNE_BELOW {
                    e.remove();
                }
            }
            Entry::Vacant(e) => {
                if c.norm() >= PRUNE_BELOW {
                    e.insert(c);
                }
            }
        }
    }

    pub fn eval(&self, y: &[f64]) -> C64 {
        self.terms
            .iter()
            .map(|(k, c)| {
                let arg: f64 = k.iter().zip(y).map(|(&ki, &yi)| ki as f64 * yi).sum();
                c * C64::from_polar(1.0, arg)
            })
            .sum()
    }

    pub fn add(&self, other: &FourierSeries) -> FourierSeries {
        let mut out = self.clone();
        for (k, c) in &other.terms {
            out.add_term(k.clone(), *c);
        }
        out
    }

    pub fn scale(&self, s: C64) -> FourierSeries {
        let mut out = Self::zero(self.dim);
        for (k, c) in &self.terms {
            out.add_term(k.clone(), c * s);
        }
        out
    }

    /// Exact product of two finite series (discrete convolution of
    /// coefficients).
    pub fn mul(&self, other: &FourierSeries) -> FourierSeries {
        let mut out = Self::zero(self.dim);
        for (k1, c1) in &self.terms {
            for (k2, c2) in &other.terms {
                let k: Vec<i64> = k1.iter().zip(k2).map(|(a, b)| a + b).collect();
                out.add_term(k, c1 * c2);
            }
        }
        out
    }

    pub fn conj(&self) -> FourierSeries {
        let mut out = Self::zero(self.dim);
        for (k, c) in &self.terms {
            out.add_term(k.iter().map(|x| -x).collect(), c.conj());
        }
        out
    }

    /// Free propagator U^ε(t) = e^{iεtΔ/2}: b_k ↦ b_k e^{−iεt|κ_k|²/2}.
    pub fn propagate(&self, eps: f64, t: f64) -> FourierSeries {
        let mut out = self.clone();
        for (k, c) in out.terms.iter_mut() {
            let k2: f64 = k.iter().map(|&x| (x * x) as f64).sum();
            *c *= C64::from_polar(1.0, -0.5 * eps * t * k2);
        }
        out
    }

    /// The series of f(·/ε) for 1/ε = `inv_eps`: κ_k ↦ κ_k / ε.
    pub fn dilate(&self, inv_eps: i64) -> FourierSeries {
        FourierSeries {
            dim: self.dim,
            terms: self
                .terms
                .iter()
                .map(|(k, c)| (k.iter().map(|x| x * inv_eps).collect(), *c))
                .collect(),
        }
    }
}

pub fn w_norm(f: &FourierSeries) -> f64 {
    f.terms.values().map(|c| c.norm()).sum()
}

/// ‖a‖_E = Σ_j |a_j| for constant torus profiles.
pub fn e_norm_torus(amps: &[C64]) -> f64 {
    amps.iter().map(|a| a.norm()).sum()
}

/// Cell-volume weight turning Σ|DFT| into the discrete ‖f̂‖_{L¹}.
pub fn euclid_weight(grid: &BoxGrid) -> f64 {
    (2.0 * PI).powf(grid.d as f64 / 2.0) / grid.len() as f64
}

/// Discrete W(ℝ^d) norm of one field on the box.
pub fn euclid_w_norm(grid: &BoxGrid, fft: &FftNd, field: &[C64]) -> f64 {
    let mut buf = field.to_vec();
    fft.forward(&mut buf);
    euclid_weight(grid) * buf.iter().map(|c| c.norm()).sum::<f64>()
}

/// Per-mode weighted spectra â_j of Euclidean profiles.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProfileSpectrum {
    pub grid: BoxGrid,
    pub spectra: Vec<FourierSeries>,
}

impl ProfileSpectrum {
    pub fn from_fields(grid: &BoxGrid, fields: &[Vec<C64>]) -> Result<Self> {
        let fft = grid.fft()?;
        let w = euclid_weight(grid);
        let mut bins = vec![0usize; grid.d];
        let mut spectra = Vec::with_capacity(fields.len());
        for f in fields {
            if f.len() != grid.len() {
                return Err(Error::GridMismatch(format!(
                    "field has {} samples, grid has {}",
                    f.len(),
                    grid.len()
                )));
            }
            let mut buf = f.clone();
            fft.forward(&mut buf);
            let terms = buf.iter().enumerate().map(|(flat, c)| {
                unravel(flat, grid.d, grid.n, &mut bins);
                let k: Vec<i64> = bins.iter().map(|&b| signed_freq(b, grid.n)).collect();
                (k, c * w)
            });
            spectra.push(FourierSeries::from_terms(grid.d, terms)?);
        }
        Ok(ProfileSpectrum {
            grid: *grid,
            spectra,
        })
    }
}

/// E-norm of Euclidean profiles: Σ_j ‖â_j‖_{L¹}.
pub fn e_norm_euclid(spectrum: &ProfileSpectrum) -> f64 {
    spectrum.spectra.iter().map(w_norm).sum()
}

/// Returns (‖f‖_W, ‖f(·/ε)‖_W) on the torus; the two agree exactly.
pub fn substitution_isometry_check(f: &FourierSeries, eps: f64) -> Result<(f64, f64)> {
    let inv = inverse_eps(eps)?;
    Ok((w_norm(f), w_norm(&f.dilate(inv))))
}

/// 1/ε as an integer, rejecting ε with 1/ε ∉ ℕ*.
pub fn inverse_eps(eps: f64) -> Result<i64> {
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(Error::NonIntegerInverseEps(eps));
    }
    let inv = 1.0 / eps;
    let r = inv.round();
    if r < 1.0 || (inv - r).abs() > 1e-9 * r.max(1.0) {
        return Err(Error::NonIntegerInverseEps(eps));
    }
    Ok(r as i64)
}

/// Two-scale profile f(x,y) = Σ_k b_k(x) e^{iκ_k·y} sampled on a box, with
/// carriers in user units.
#[derive(Clone, Debug)]
pub struct TwoScaleProfile {
    pub grid: BoxGrid,
    pub carriers: Vec<Vec<f64>>,
    pub envelopes: Vec<Vec<C64>>,
}

impl TwoScaleProfile {
    /// ‖f‖_𝐀 = Σ_k ‖b_k‖_W.
    pub fn a_norm(&self) -> Result<f64> {
        let fft = self.grid.fft()?;
        Ok(self
            .envelopes
            .iter()
            .map(|b| euclid_w_norm(&self.grid, &fft, b))
            .sum())
    }

    /// Samples f(x, x/ε). Each κ_k/ε must be a frequency of the box.
    pub fn assemble(&self, eps: f64) -> Result<Vec<C64>> {
        if self.carriers.len() != self.envelopes.len() {
            return Err(Error::GridMismatch("carrier/envelope count differs".into()));
        }
        let dxi = self.grid.dxi();
        for kappa in &self.carriers {
            for &k in kappa {
                let m = k / eps / dxi;
                if (m - m.round()).abs() > 1e-9 * m.abs().max(1.0) {
                    return Err(Error::GridMismatch(format!(
                        "carrier {k}/ε is not a multiple of Δξ = {dxi}"
                    )));
                }
                if m.round().abs() >= (self.grid.n / 2) as f64 {
                    return Err(Error::UnresolvedCarrier {
                        frequency: m.round() as i64,
                        n: self.grid.n,
                    });
                }
            }
        }
        let mut out = vec![C64::new(0.0, 0.0); self.grid.len()];
        let mut x = vec![0.0; self.grid.d];
        for (flat, o) in out.iter_mut().enumerate() {
            self.grid.point(flat, &mut x);
            for (kappa, b) in self.carriers.iter().zip(&self.envelopes) {
                let arg: f64 = kappa.iter().zip(&x).map(|(k, xi)| k * xi).sum::<f64>() / eps;
                *o += b[flat] * C64::from_polar(1.0, arg);
            }
        }
        Ok(out)
    }

    /// Returns (‖f‖_𝐀, ‖f(·,·/ε)‖_W); the second never exceeds the first.
    pub fn substitution_check(&self, eps: f64) -> Result<(f64, f64)> {
        let fft = self.grid.fft()?;
        let assembled = self.assemble(eps)?;
        Ok((self.a_norm()?, euclid_w_norm(&self.grid, &fft, &assembled)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn two_term_norm() {
        let f = FourierSeries::from_terms(1, [(vec![1], c(3.0, 0.0)), (vec![0], c(0.0, -4.0))]).unwrap();
        assert_eq!(w_norm(&f), 7.0);
        assert_eq!(w_norm(&FourierSeries::zero(2)), 0.0);
    }

    #[test]
    fn torus_substitution_examples() {
        let f = FourierSeries::from_terms(1, [(vec![1], c(1.0, 0.0)), (vec![3], c(2.0, 0.0))]).unwrap();
        assert_eq!(substitution_isometry_check(&f, 0.25).unwrap(), (3.0, 3.0));
        let k = FourierSeries::constant(2, c(-1.5, 2.0));
        assert_eq!(substitution_isometry_check(&k, 0.5).unwrap(), (2.5, 2.5));
        assert!(matches!(
            substitution_isometry_check(&f, 0.3),
            Err(Error::NonIntegerInverseEps(_))
        ));
    }

    #[test]
    fn e_norm_examples() {
        assert_eq!(e_norm_torus(&[c(1.0, 0.0), c(0.0, -2.0), c(0.5, 0.0)]), 3.5);
        assert_eq!(e_norm_torus(&[]), 0.0);
    }

    #[test]
    fn pruning_removes_cancelled_terms() {
        let f = FourierSeries::from_terms(1, [(vec![2], c(1.0, 0.0)), (vec![2], c(-1.0, 0.0))]).unwrap();
        assert!(f.is_empty());
    }

    #[test]
    fn product_evaluates_pointwise() {
        let f = FourierSeries::from_terms(1, [(vec![1], c(1.0, 2.0)), (vec![-2], c(0.5, 0.0))]).unwrap();
        let g = FourierSeries::from_terms(1, [(vec![0], c(0.0, 1.0)), (vec![3], c(-1.0, 0.0))]).unwrap();
        let fg = f.mul(&g);
        for y in [0.0, 0.7, 2.1] {
            assert!((fg.eval(&[y]) - f.eval(&[y]) * g.eval(&[y])).norm() < 1e-13);
        }
    }

    #[test]
    fn constant_box_norm_matches_continuous_transform() {
        let grid = BoxGrid::new(2, 8, 5.0).unwrap();
        let fft = grid.fft().unwrap();
        let one = vec![c(1.0, 0.0); grid.len()];
        assert!((euclid_w_norm(&grid, &fft, &one) - 2.0 * PI).abs() < 1e-12);
    }

    #[test]
    fn euclidean_substitution_inequality() {
        let grid = BoxGrid::new(1, 512, 16.0 * PI).unwrap();
        let g = |x: f64, x0: f64| c((-(x - x0) * (x - x0)).exp(), 0.0);
        let profile = TwoScaleProfile {
            grid,
            carriers: vec![vec![0.5], vec![-1.0]],
            envelopes: vec![grid.sample(|x| g(x[0], 1.0)), grid.sample(|x| g(x[0], -2.0) * 0.7)],
        };
        let (a, w) = profile.substitution_check(0.125).unwrap();
        assert!(w <= a + 1e-10, "{w} > {a}");
        // the dilated spectra barely overlap, so the bound is nearly attained
        assert!(w > 0.99 * a);
    }
}
