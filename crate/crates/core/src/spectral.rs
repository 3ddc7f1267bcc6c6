//! Strang-split Fourier solver for iε∂_t u + ε²/2 Δu = λε|u|^{2σ}u on 𝕋^d.

use std::f64::consts::PI;
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{signed_freq, unravel, FftNd, C64};
use crate::lattice::WaveVector;
use crate::ode::uniform_steps;
use crate::wiener::inverse_eps;

/// Fraction of the spectrum, per axis, watched by the aliasing monitor.
pub const ALIAS_BAND: f64 = 0.1;
/// Relative spectral mass in the watched band that triggers a warning.
pub const ALIAS_THRESHOLD: f64 = 1e-8;

/// Complex samples on [0, 2π/cell)^d with n points per axis.
///
/// `cell > 1` stores one period cell of a field whose Fourier support lies
/// in cell·ℤ^d; grid bin k then carries the torus frequency cell·k.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridField {
    pub d: usize,
    pub n: usize,
    pub cell: u64,
    pub values: Vec<C64>,
}

impl GridField {
    pub fn zeros(d: usize, n: usize, cell: u64) -> Result<Self> {
        FftNd::new(d, n)?;
        if cell == 0 {
            return Err(Error::InvalidParameter("period cell divisor must be ≥ 1".into()));
        }
        Ok(GridField {
            d,
            n,
            cell,
            values: vec![C64::new(0.0, 0.0); n.pow(d as u32)],
        })
    }

    pub fn from_fn<F: Fn(&[f64]) -> C64>(d: usize, n: usize, cell: u64, f: F) -> Result<Self> {
        let mut field = Self::zeros(d, n, cell)?;
        let mut bins = vec![0usize; d];
        let mut x = vec![0.0; d];
        let h = field.dx();
        for (flat, v) in field.values.iter_mut().enumerate() {
            unravel(flat, d, n, &mut bins);
            for (xi, &b) in x.iter_mut().zip(&bins) {
                *xi = b as f64 * h;
            }
            *v = f(&x);
        }
        Ok(field)
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Side of the stored cell.
    pub fn length(&self) -> f64 {
        2.0 * PI / self.cell as f64
    }

    pub fn dx(&self) -> f64 {
        self.length() / self.n as f64
    }

    fn check_shape(&self) -> Result<()> {
        if self.values.len() != self.n.pow(self.d as u32) {
            return Err(Error::GridMismatch(format!(
                "{} samples for an {}^{} grid",
                self.values.len(),
                self.n,
                self.d
            )));
        }
        Ok(())
    }

    pub fn same_grid(&self, other: &GridField) -> Result<()> {
        if self.d != other.d || self.n != other.n || self.cell != other.cell {
            return Err(Error::GridMismatch(format!(
                "grids differ: (d={}, n={}, cell={}) vs (d={}, n={}, cell={})",
                self.d, self.n, self.cell, other.d, other.n, other.cell
            )));
        }
        Ok(())
    }

    /// Normalized discrete Fourier coefficients, û_k = n^{−d} Σ u e^{−ik·x}.
    pub fn coefficients(&self) -> Result<Vec<C64>> {
        self.check_shape()?;
        let fft = FftNd::new(self.d, self.n)?;
        let mut buf = self.values.clone();
        fft.forward(&mut buf);
        let s = 1.0 / buf.len() as f64;
        buf.iter_mut().for_each(|v| *v *= s);
        Ok(buf)
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    /// Discrete L² norm squared, n^{−d} Σ |u|².
    pub fn l2_sq(&self) -> f64 {
        self.values.iter().map(C64::norm_sqr).sum::<f64>() / self.len() as f64
    }

    pub fn sub(&self, other: &GridField) -> Result<GridField> {
        self.same_grid(other)?;
        Ok(GridField {
            values: self.values.iter().zip(&other.values).map(|(a, b)| a - b).collect(),
            ..self.clone()
        })
    }
}

/// Discrete W(𝕋^d) norm: Σ_k |û_k|.
pub fn w_norm_of_field(u: &GridField) -> Result<f64> {
    Ok(u.coefficients()?.iter().map(|c| c.norm()).sum())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub eps: f64,
    pub lambda: f64,
    pub sigma: u32,
    pub dt: f64,
    pub n: usize,
    pub t_final: f64,
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        inverse_eps(self.eps)?;
        if !self.lambda.is_finite() {
            return Err(Error::InvalidParameter("λ must be finite".into()));
        }
        if self.sigma == 0 {
            return Err(Error::InvalidParameter("σ must be at least 1".into()));
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::InvalidParameter("dt must be > 0".into()));
        }
        if !(self.t_final >= 0.0 && self.t_final.is_finite()) {
            return Err(Error::InvalidParameter("t_final must be ≥ 0".into()));
        }
        if self.n < 2 || !self.n.is_power_of_two() {
            return Err(Error::InvalidParameter(format!(
                "grid size must be a power of two ≥ 2, got {}",
                self.n
            )));
        }
        Ok(())
    }
}

/// Smallest power of two ≥ 4(2σ+2)·max_freq, where `max_freq` is the largest
/// sup-norm of a grid-unit carrier frequency. Never below 8.
pub fn grid_size_for(sigma: u32, max_freq: f64) -> usize {
    let want = 4.0 * (2.0 * sigma as f64 + 2.0) * max_freq;
    (want.ceil().max(8.0) as usize).next_power_of_two()
}

/// Integer torus frequencies κ_j/ε of user-unit carriers.
pub fn carrier_frequencies(carriers: &[Vec<f64>], eps: f64) -> Result<Vec<Vec<i64>>> {
    carriers
        .iter()
        .map(|k| {
            k.iter()
                .map(|&c| {
                    let f = c / eps;
                    let r = f.round();
                    if (f - r).abs() > 1e-9 * r.abs().max(1.0) {
                        Err(Error::InvalidParameter(format!(
                            "carrier component {c} is not a multiple of ε = {eps}"
                        )))
                    } else {
                        Ok(r as i64)
                    }
                })
                .collect()
        })
        .collect()
}

/// Largest m with every frequency in m·ℤ^d (1 if all frequencies vanish).
pub fn period_cell(freqs: &[Vec<i64>]) -> u64 {
    let g = freqs
        .iter()
        .flatten()
        .fold(0u64, |g, &f| num_integer::gcd(g, f.unsigned_abs()));
    g.max(1)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Snapshot {
    pub t: f64,
    pub field: GridField,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolveOutput {
    pub snapshots: Vec<Snapshot>,
    pub steps: usize,
    /// Largest relative deviation of the discrete L² norm from its initial value.
    pub l2_drift: f64,
    /// Largest relative spectral mass seen in the aliasing band.
    pub max_alias_ratio: f64,
    pub alias_warnings: usize,
}

/// Precomputed split-step operators for one grid and step size.
struct Stepper {
    fft: FftNd,
    linear: Vec<C64>,
    band: Vec<bool>,
    sigma: u32,
    lambda: f64,
}

impl Stepper {
    fn new(d: usize, n: usize, cell: u64, eps: f64, lambda: f64, sigma: u32, dt: f64) -> Result<Self> {
        let fft = FftNd::new(d, n)?;
        let mut bins = vec![0usize; d];
        let edge = (1.0 - ALIAS_BAND) * (n / 2) as f64;
        let mut linear = Vec::with_capacity(fft.len());
        let mut band = Vec::with_capacity(fft.len());
        for flat in 0..fft.len() {
            unravel(flat, d, n, &mut bins);
            let mut k2 = 0.0;
            let mut top = false;
            for &b in &bins {
                let k = signed_freq(b, n);
                top |= k.unsigned_abs() as f64 > edge;
                let kp = (k * cell as i64) as f64;
                k2 += kp * kp;
            }
            linear.push(C64::from_polar(1.0 / fft.len() as f64, -0.5 * eps * dt * k2));
            band.push(top);
        }
        Ok(Stepper {
            fft,
            linear,
            band,
            sigma,
            lambda,
        })
    }

    fn rotate(&self, u: &mut [C64], h: f64) {
        for v in u.iter_mut() {
            let m = v.norm_sqr().powi(self.sigma as i32);
            *v *= C64::from_polar(1.0, -self.lambda * h * m);
        }
    }

    fn step(&self, u: &mut [C64], dt: f64) {
        self.rotate(u, 0.5 * dt);
        self.fft.forward(u);
        for (v, m) in u.iter_mut().zip(&self.linear) {
            *v *= m;
        }
        self.fft.inverse_unnormalized(u);
        self.rotate(u, 0.5 * dt);
    }

    fn alias_ratio(&self, u: &[C64]) -> f64 {
        let mut buf = u.to_vec();
        self.fft.forward(&mut buf);
        let (mut top, mut total) = (0.0, 0.0);
        for (v, &b) in buf.iter().zip(&self.band) {
            let m = v.norm_sqr();
            total += m;
            if b {
                top += m;
            }
        }
        if total > 0.0 {
            top / total
        } else {
            0.0
        }
    }
}

/// Integrates from t = 0 and records the field at each of `times`
/// (nondecreasing, within [0, t_final]). Each segment between consecutive
/// times is covered by uniform steps no longer than `cfg.dt`.
pub fn solve(u0: &GridField, cfg: &SolverConfig, times: &[f64]) -> Result<SolveOutput> {
    cfg.validate()?;
    u0.check_shape()?;
    if u0.n != cfg.n {
        return Err(Error::GridMismatch(format!(
            "initial field has n = {}, config has n = {}",
            u0.n, cfg.n
        )));
    }
    let mut prev = 0.0;
    for &t in times {
        if !(t >= prev && t <= cfg.t_final + 1e-12) {
            return Err(Error::InvalidParameter(format!(
                "snapshot times must be nondecreasing within [0, {}]",
                cfg.t_final
            )));
        }
        prev = t;
    }
    if let Some(bad) = u0.values.iter().find(|v| !(v.re.is_finite() && v.im.is_finite())) {
        return Err(Error::InvalidParameter(format!("initial field contains {bad}")));
    }

    let mut u = u0.values.clone();
    let l2_0 = u0.l2_sq();
    let mut l2_drift: f64 = 0.0;
    let mut max_alias: f64 = 0.0;
    let mut alias_warnings = 0;
    let mut total_steps = 0;
    let mut snapshots = Vec::with_capacity(times.len());
    let mut stepper: Option<(f64, Stepper)> = None;
    let mut t_now = 0.0;

    for &t_target in times {
        let (steps, h) = uniform_steps(t_target - t_now, cfg.dt);
        if steps > 0 && stepper.as_ref().map_or(true, |(hh, _)| *hh != h) {
            stepper = Some((h, Stepper::new(u0.d, u0.n, u0.cell, cfg.eps, cfg.lambda, cfg.sigma, h)?));
        }
        for s in 0..steps {
            let op = &stepper.as_ref().expect("stepper built for nonempty segment").1;
            op.step(&mut u, h);
            if u.iter().any(|v| !(v.re.is_finite() && v.im.is_finite())) {
                return Err(Error::NonFinite(t_now + (s + 1) as f64 * h));
            }
        }
        total_steps += steps;
        t_now = t_target;

        let field = GridField {
            values: u.clone(),
            ..u0.clone()
        };
        if l2_0 > 0.0 {
            l2_drift = l2_drift.max((field.l2_sq() - l2_0).abs() / l2_0);
        }
        let probe = match &stepper {
            Some((_, op)) => op.alias_ratio(&u),
            None => Stepper::new(u0.d, u0.n, u0.cell, cfg.eps, cfg.lambda, cfg.sigma, cfg.dt)?.alias_ratio(&u),
        };
        max_alias = max_alias.max(probe);
        if probe > ALIAS_THRESHOLD {
            alias_warnings += 1;
            log::warn!(
                "aliasing: {:.3e} of the spectral mass sits in the top {}% of frequencies at t = {}",
                probe,
                ALIAS_BAND * 100.0,
                t_target
            );
        }
        snapshots.push(Snapshot { t: t_target, field });
    }
    Ok(SolveOutput {
        snapshots,
        steps: total_steps,
        l2_drift,
        max_alias_ratio: max_alias,
        alias_warnings,
    })
}

/// α e^{i(κ·x − |κ|²t/2)/ε} e^{−iλt|α|^{2σ}} sampled on a (d, n, cell) grid.
pub fn plane_wave_exact(alpha: C64, kappa: &WaveVector, cfg: &SolverConfig, t: f64, d: usize, n: usize, cell: u64) -> Result<GridField> {
    cfg.validate()?;
    if kappa.dim() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            found: kappa.dim(),
        });
    }
    let k: Vec<f64> = kappa.coords().iter().map(|&c| c as f64).collect();
    let omega = 0.5 * kappa.norm_sq() as f64;
    let modulation = C64::from_polar(1.0, -cfg.lambda * t * alpha.norm_sqr().powi(cfg.sigma as i32));
    GridField::from_fn(d, n, cell, |x| {
        let phase = (k.iter().zip(x).map(|(a, b)| a * b).sum::<f64>() - omega * t) / cfg.eps;
        alpha * modulation * C64::from_polar(1.0, phase)
    })
}

const MAGIC: &[u8; 4] = b"WKBF";
const SNAPSHOT_VERSION: u32 = 1;

/// Binary snapshot: "WKBF", u32 version, u32 d, u64 n, u64 cell, f64 eps,
/// f64 t, then n^d (re, im) pairs; all little-endian.
pub fn write_snapshot<W: Write>(mut w: W, field: &GridField, eps: f64, t: f64) -> Result<()> {
    field.check_shape()?;
    w.write_all(MAGIC)?;
    w.write_all(&SNAPSHOT_VERSION.to_le_bytes())?;
    w.write_all(&(field.d as u32).to_le_bytes())?;
    w.write_all(&(field.n as u64).to_le_bytes())?;
    w.write_all(&field.cell.to_le_bytes())?;
    w.write_all(&eps.to_le_bytes())?;
    w.write_all(&t.to_le_bytes())?;
    for v in &field.values {
        w.write_all(&v.re.to_le_bytes())?;
        w.write_all(&v.im.to_le_bytes())?;
    }
    Ok(())
}

/// Inverse of [`write_snapshot`]; returns (field, eps, t).
pub fn read_snapshot<R: Read>(mut r: R) -> Result<(GridField, f64, f64)> {
    let mut b4 = [0u8; 4];
    let mut b8 = [0u8; 8];
    r.read_exact(&mut b4)?;
    if &b4 != MAGIC {
        return Err(Error::InvalidParameter("not a field snapshot".into()));
    }
    r.read_exact(&mut b4)?;
    let version = u32::from_le_bytes(b4);
    if version != SNAPSHOT_VERSION {
        return Err(Error::InvalidParameter(format!("unsupported snapshot version {version}")));
    }
    r.read_exact(&mut b4)?;
    let d = u32::from_le_bytes(b4) as usize;
    r.read_exact(&mut b8)?;
    let n = u64::from_le_bytes(b8) as usize;
    r.read_exact(&mut b8)?;
    let cell = u64::from_le_bytes(b8);
    r.read_exact(&mut b8)?;
    let eps = f64::from_le_bytes(b8);
    r.read_exact(&mut b8)?;
    let t = f64::from_le_bytes(b8);
    let mut field = GridField::zeros(d, n, cell)?;
    for v in field.values.iter_mut() {
        r.read_exact(&mut b8)?;
        let re = f64::from_le_bytes(b8);
        r.read_exact(&mut b8)?;
        *v = C64::new(re, f64::from_le_bytes(b8));
    }
    Ok((field, eps, t))
}
