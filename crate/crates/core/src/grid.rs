//! Uniform periodic grids and their d-dimensional discrete Fourier transform.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};

pub type C64 = Complex64;

/// Signed frequency of FFT bin `i` on an `n`-point axis. The Nyquist bin maps
/// to −n/2.
#[inline]
pub fn signed_freq(i: usize, n: usize) -> i64 {
    if i < n / 2 {
        i as i64
    } else {
        i as i64 - n as i64
    }
}

/// FFT bin holding signed frequency `k`, if representable.
pub fn bin_of(k: i64, n: usize) -> Option<usize> {
    let half = (n / 2) as i64;
    if k >= half || k < -half {
        return None;
    }
    Some(if k >= 0 { k as usize } else { (k + n as i64) as usize })
}

/// Splits a flat row-major index into per-axis bins.
pub fn unravel(mut flat: usize, d: usize, n: usize, out: &mut [usize]) {
    for axis in (0..d).rev() {
        out[axis] = flat % n;
        flat /= n;
    }
}

pub fn ravel(bins: &[usize], n: usize) -> usize {
    bins.iter().fold(0, |acc, &b| acc * n + b)
}

/// In-place, unnormalized d-dimensional FFT over an `n^d` row-major array.
#[derive(Clone)]
pub struct FftNd {
    d: usize,
    n: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for FftNd {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("FftNd").field("d", &self.d).field("n", &self.n).finish()
    }
}

impl FftNd {
    pub fn new(d: usize, n: usize) -> Result<Self> {
        if d == 0 {
            return Err(Error::InvalidParameter("grid dimension must be ≥ 1".into()));
        }
        if n < 2 || !n.is_power_of_two() {
            return Err(Error::InvalidParameter(format!(
                "grid size must be a power of two ≥ 2, got {n}"
            )));
        }
        let mut planner = FftPlanner::new();
        Ok(FftNd {
            d,
            n,
            forward: planner.plan_fft_forward(n),
            inverse: planner.plan_fft_inverse(n),
        })
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.n.pow(self.d as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    fn run(&self, fft: &Arc<dyn Fft<f64>>, data: &mut [C64]) {
        assert_eq!(data.len(), self.len(), "buffer does not match grid");
        let n = self.n;
        // last axis is contiguous
        fft.process(data);
        let mut line = vec![C64::new(0.0, 0.0); n];
        for axis in 0..self.d - 1 {
            let stride = n.pow((self.d - 1 - axis) as u32);
            let block = stride * n;
            for start in (0..data.len()).step_by(block) {
                for offset in 0..stride {
                    let base = start + offset;
                    for (i, v) in line.iter_mut().enumerate() {
                        *v = data[base + i * stride];
                    }
                    fft.process(&mut line);
                    for (i, v) in line.iter().enumerate() {
                        data[base + i * stride] = *v;
                    }
                }
            }
        }
    }

    pub fn forward(&self, data: &mut [C64]) {
        self.run(&self.forward, data);
    }

    /// Unnormalized inverse; multiply by 1/n^d to undo [`FftNd::forward`].
    pub fn inverse_unnormalized(&self, data: &mut [C64]) {
        self.run(&self.inverse, data);
    }

    pub fn inverse(&self, data: &mut [C64]) {
        self.run(&self.inverse, data);
        let scale = 1.0 / self.len() as f64;
        for v in data.iter_mut() {
            *v *= scale;
        }
    }

    /// |ξ|² for every bin, with ξ = (2π/L)·k.
    pub fn wavenumber_sq(&self, length: f64) -> Vec<f64> {
        let dk = 2.0 * PI / length;
        let mut bins = vec![0usize; self.d];
        (0..self.len())
            .map(|flat| {
                unravel(flat, self.d, self.n, &mut bins);
                bins.iter()
                    .map(|&b| {
                        let k = signed_freq(b, self.n) as f64 * dk;
                        k * k
                    })
                    .sum()
            })
            .collect()
    }

    /// Signed integer frequencies of every bin, flattened (stride d).
    pub fn frequencies(&self) -> Vec<i64> {
        let mut bins = vec![0usize; self.d];
        let mut out = Vec::with_capacity(self.len() * self.d);
        for flat in 0..self.len() {
            unravel(flat, self.d, self.n, &mut bins);
            out.extend(bins.iter().map(|&b| signed_freq(b, self.n)));
        }
        out
    }
}

/// Periodic box [−L/2, L/2)^d sampled with `n` points per axis, standing in
/// for ℝ^d. Profiles are expected to decay below ~1e−12 at the boundary for
/// the whole run.
#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct BoxGrid {
    pub d: usize,
    pub n: usize,
    pub length: f64,
}

impl BoxGrid {
    pub fn new(d: usize, n: usize, length: f64) -> Result<Self> {
        if !(length > 0.0 && length.is_finite()) {
            return Err(Error::InvalidParameter(format!("box length must be positive, got {length}")));
        }
        if n < 2 || !n.is_power_of_two() {
            return Err(Error::InvalidParameter(format!(
                "grid size must be a power of two ≥ 2, got {n}"
            )));
        }
        if d == 0 {
            return Err(Error::InvalidParameter("grid dimension must be ≥ 1".into()));
        }
        Ok(BoxGrid { d, n, length })
    }

    pub fn len(&self) -> usize {
        self.n.pow(self.d as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn dx(&self) -> f64 {
        self.length / self.n as f64
    }

    pub fn dxi(&self) -> f64 {
        2.0 * PI / self.length
    }

    pub fn coordinate(&self, i: usize) -> f64 {
        -0.5 * self.length + i as f64 * self.dx()
    }

    /// Physical coordinates of grid point `flat`.
    pub fn point(&self, flat: usize, out: &mut [f64]) {
        let mut bins = vec![0usize; self.d];
        unravel(flat, self.d, self.n, &mut bins);
        for (o, b) in out.iter_mut().zip(&bins) {
            *o = self.coordinate(*b);
        }
    }

    pub fn sample<F: Fn(&[f64]) -> C64>(&self, f: F) -> Vec<C64> {
        let mut x = vec![0.0; self.d];
        (0..self.len())
            .map(|flat| {
                self.point(flat, &mut x);
                f(&x)
            })
            .collect()
    }

    pub fn fft(&self) -> Result<FftNd> {
        FftNd::new(self.d, self.n)
    }
}

/// Spectral translation f ↦ f(· − shift) on a periodic box.
///
/// Exact for band-limited periodic data; used for the co-moving frame of the
/// transport equations.
#[derive(Debug, Clone)]
pub struct SpectralShifter {
    grid: BoxGrid,
    fft: FftNd,
    /// ξ per bin, flattened with stride d
    xi: Vec<f64>,
    scratch: Vec<C64>,
}

impl SpectralShifter {
    pub fn new(grid: BoxGrid) -> Result<Self> {
        let fft = grid.fft()?;
        let dxi = grid.dxi();
        let xi = fft.frequencies().into_iter().map(|k| k as f64 * dxi).collect();
        Ok(SpectralShifter {
            grid,
            fft,
            xi,
            scratch: vec![C64::new(0.0, 0.0); grid.len()],
        })
    }

    pub fn grid(&self) -> &BoxGrid {
        &self.grid
    }

    /// Writes f(x − shift) into `out`.
    pub fn shift(&mut self, f: &[C64], shift: &[f64], out: &mut [C64]) {
        let d = self.grid.d;
        if shift.iter().all(|&s| s == 0.0) {
            out.copy_from_slice(f);
            return;
        }
        self.scratch.copy_from_slice(f);
        self.fft.forward(&mut self.scratch);
        for (bin, v) in self.scratch.iter_mut().enumerate() {
            let xi = &self.xi[bin * d..(bin + 1) * d];
            let arg: f64 = xi.iter().zip(shift).map(|(k, s)| k * s).sum();
            *v *= C64::from_polar(1.0, -arg);
        }
        self.fft.inverse(&mut self.scratch);
        out.copy_from_slice(&self.scratch);
    }
}
