//! Amplitude (profile) system on the torus and on a periodic Euclidean box,
//! plus the closed-form solutions available in special cases.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{BoxGrid, SpectralShifter, C64};
use crate::lattice::{Interactions, ModeSet};
use crate::ode::{uniform_steps, Rk4};
use crate::wiener::{e_norm_euclid, e_norm_torus, ProfileSpectrum};

/// Growth factor over the initial E-norm that aborts an integration.
pub const BLOW_UP_FACTOR: f64 = 1e6;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimParams {
    pub lambda: f64,
    pub sigma: u32,
    pub t_final: f64,
    pub dt: f64,
}

impl SimParams {
    pub fn new(lambda: f64, sigma: u32, t_final: f64, dt: f64) -> Result<Self> {
        let p = SimParams {
            lambda,
            sigma,
            t_final,
            dt,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !self.lambda.is_finite() {
            return Err(Error::InvalidParameter("λ must be finite".into()));
        }
        if self.sigma == 0 {
            return Err(Error::InvalidParameter("σ must be at least 1".into()));
        }
        if !(self.t_final >= 0.0 && self.t_final.is_finite()) {
            return Err(Error::InvalidParameter("t_final must be ≥ 0".into()));
        }
        if !(self.dt > 0.0) {
            return Err(Error::InvalidParameter("dt must be > 0".into()));
        }
        if self.t_final > 0.0 && self.dt > self.t_final {
            return Err(Error::InvalidParameter("dt must not exceed t_final".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProfileStateTorus {
    pub amps: Vec<C64>,
    pub t: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProfileStateEuclid {
    pub grid: BoxGrid,
    pub fields: Vec<Vec<C64>>,
    pub t: f64,
}

/// Accumulates −iλ Σ_{I_j} a_{ℓ1} ā_{ℓ2} a_{ℓ3} ⋯ into `out` for every mode,
/// pointwise over `npts` samples per mode (npts = 1 on the torus).
fn coupling(values: &[C64], npts: usize, interactions: &Interactions, lambda: f64, out: &mut [C64]) {
    let scale = C64::new(0.0, -lambda);
    for j in 0..interactions.num_targets() {
        let dst = &mut out[j * npts..(j + 1) * npts];
        dst.iter_mut().for_each(|v| *v = C64::new(0.0, 0.0));
        for tuple in interactions.for_target(j) {
            for (p, d) in dst.iter_mut().enumerate() {
                let mut prod = values[tuple[0] * npts + p];
                for (pos, &l) in tuple.iter().enumerate().skip(1) {
                    let a = values[l * npts + p];
                    prod *= if pos % 2 == 1 { a.conj() } else { a };
                }
                *d += prod;
            }
        }
        dst.iter_mut().for_each(|v| *v *= scale);
    }
}

fn check_modes(modes: &ModeSet, interactions: &Interactions, len: usize) -> Result<()> {
    if len != modes.len() {
        return Err(Error::ModeSetMismatch(format!(
            "{} amplitudes for {} modes",
            len,
            modes.len()
        )));
    }
    if interactions.num_targets() != modes.len() || interactions.arity() != modes.arity() {
        return Err(Error::ModeSetMismatch(
            "interactions were enumerated for a different mode set".into(),
        ));
    }
    Ok(())
}

/// d a_j/dt on the torus.
pub fn nonlinear_rhs_torus(
    state: &ProfileStateTorus,
    modes: &ModeSet,
    interactions: &Interactions,
    lambda: f64,
) -> Result<Vec<C64>> {
    check_modes(modes, interactions, state.amps.len())?;
    let mut out = vec![C64::new(0.0, 0.0); state.amps.len()];
    coupling(&state.amps, 1, interactions, lambda, &mut out);
    Ok(out)
}

/// The coupling term of the transport system, evaluated pointwise on the
/// box (no transport part).
pub fn nonlinear_rhs_euclid(
    state: &ProfileStateEuclid,
    modes: &ModeSet,
    interactions: &Interactions,
    lambda: f64,
) -> Result<Vec<Vec<C64>>> {
    check_modes(modes, interactions, state.fields.len())?;
    let npts = state.grid.len();
    let flat = flatten(&state.fields, npts)?;
    let mut out = vec![C64::new(0.0, 0.0); flat.len()];
    coupling(&flat, npts, interactions, lambda, &mut out);
    Ok(out.chunks_exact(npts).map(<[C64]>::to_vec).collect())
}

fn flatten(fields: &[Vec<C64>], npts: usize) -> Result<Vec<C64>> {
    let mut flat = Vec::with_capacity(fields.len() * npts);
    for f in fields {
        if f.len() != npts {
            return Err(Error::GridMismatch(format!(
                "field has {} samples, grid has {npts}",
                f.len()
            )));
        }
        flat.extend_from_slice(f);
    }
    Ok(flat)
}

fn check_params(modes: &ModeSet, params: &SimParams) -> Result<()> {
    params.validate()?;
    if params.sigma != modes.sigma() {
        return Err(Error::ModeSetMismatch(format!(
            "params have σ = {} but the mode set was closed with σ = {}",
            params.sigma,
            modes.sigma()
        )));
    }
    Ok(())
}

fn guard(t: f64, values: &[C64], threshold: f64) -> Result<()> {
    let mut max = 0.0f64;
    for v in values {
        if !(v.re.is_finite() && v.im.is_finite()) {
            return Err(Error::NonFinite(t));
        }
        max = max.max(v.norm());
    }
    if max > threshold {
        return Err(Error::BlowUp {
            t,
            magnitude: max,
            threshold,
        });
    }
    Ok(())
}

/// Profile ODE integrator on 𝕋^d with precomputed interactions.
#[derive(Debug, Clone)]
pub struct TorusIntegrator<'a> {
    modes: &'a ModeSet,
    interactions: Interactions,
}

impl<'a> TorusIntegrator<'a> {
    pub fn new(modes: &'a ModeSet) -> Self {
        TorusIntegrator {
            modes,
            interactions: Interactions::enumerate(modes),
        }
    }

    pub fn with_interactions(modes: &'a ModeSet, interactions: Interactions) -> Result<Self> {
        check_modes(modes, &interactions, modes.len())?;
        Ok(TorusIntegrator {
            modes,
            interactions,
        })
    }

    pub fn interactions(&self) -> &Interactions {
        &self.interactions
    }

    /// States at every step time 0, dt, …, t_final.
    pub fn run(&self, alpha: &[C64], params: &SimParams) -> Result<Vec<ProfileStateTorus>> {
        check_params(self.modes, params)?;
        check_modes(self.modes, &self.interactions, alpha.len())?;
        let threshold = BLOW_UP_FACTOR * e_norm_torus(alpha).max(f64::MIN_POSITIVE);
        guard(0.0, alpha, threshold)?;
        let (steps, dt) = uniform_steps(params.t_final, params.dt);
        let mut y = alpha.to_vec();
        let mut rk = Rk4::new(y.len());
        let mut out = Vec::with_capacity(steps + 1);
        out.push(ProfileStateTorus { amps: y.clone(), t: 0.0 });
        for s in 0..steps {
            let t = s as f64 * dt;
            rk.step(&mut y, t, dt, |_, a, da| {
                coupling(a, 1, &self.interactions, params.lambda, da)
            });
            let t_next = (s + 1) as f64 * dt;
            guard(t_next, &y, threshold)?;
            out.push(ProfileStateTorus {
                amps: y.clone(),
                t: t_next,
            });
        }
        Ok(out)
    }
}

/// Fourth-order integration of the torus profile system with fixed step.
pub fn integrate_torus(
    alpha: &[C64],
    modes: &ModeSet,
    params: &SimParams,
) -> Result<Vec<ProfileStateTorus>> {
    TorusIntegrator::new(modes).run(alpha, params)
}

/// Which Euclidean states to keep; full grids are too large to keep per step.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Record {
    EveryStep,
    Stride(usize),
    FinalOnly,
}

/// Integrates ∂_t a_j + κ_j·∇a_j = −iλ Σ_{I_j} ⋯ on the box.
///
/// Works in the co-moving unknowns b_j(t,x) = a_j(t, x + tκ_j): each right-hand
/// side evaluation maps b → a by exact spectral shifts, forms the coupling
/// pointwise, and shifts the result back. No spatial derivative is ever
/// discretized.
pub fn integrate_euclid(
    alpha: &ProfileStateEuclid,
    modes: &ModeSet,
    params: &SimParams,
    record: Record,
) -> Result<Vec<ProfileStateEuclid>> {
    check_params(modes, params)?;
    let interactions = Interactions::enumerate(modes);
    check_modes(modes, &interactions, alpha.fields.len())?;
    let grid = alpha.grid;
    if grid.d != modes.dim() {
        return Err(Error::GridMismatch(format!(
            "box is {}-dimensional, modes are {}-dimensional",
            grid.d,
            modes.dim()
        )));
    }
    let npts = grid.len();
    let kappas: Vec<Vec<f64>> = (0..modes.len()).map(|j| modes.user_vector(j)).collect();
    let e0 = e_norm_euclid(&ProfileSpectrum::from_fields(&grid, &alpha.fields)?);
    let threshold = BLOW_UP_FACTOR * e0.max(f64::MIN_POSITIVE);

    let mut shifter = SpectralShifter::new(grid)?;
    let mut a_buf = vec![C64::new(0.0, 0.0); modes.len() * npts];
    let mut n_buf = vec![C64::new(0.0, 0.0); modes.len() * npts];
    let mut shift = vec![0.0; grid.d];

    let mut to_physical = |shifter: &mut SpectralShifter, t: f64, b: &[C64], a: &mut [C64]| {
        for (j, kappa) in kappas.iter().enumerate() {
            for (s, k) in shift.iter_mut().zip(kappa) {
                *s = t * k;
            }
            shifter.shift(&b[j * npts..(j + 1) * npts], &shift, &mut a[j * npts..(j + 1) * npts]);
        }
    };

    let (steps, dt) = uniform_steps(params.t_final, params.dt);
    let mut b = flatten(&alpha.fields, npts)?;
    guard(0.0, &b, threshold)?;
    let mut rk = Rk4::new(b.len());
    let mut out = Vec::new();
    let snapshot = |t: f64, a: &[C64]| ProfileStateEuclid {
        grid,
        fields: a.chunks_exact(npts).map(<[C64]>::to_vec).collect(),
        t,
    };
    let keep = |s: usize| match record {
        Record::EveryStep => true,
        Record::Stride(k) => s % k.max(1) == 0 || s == steps,
        Record::FinalOnly => s == steps,
    };
    if keep(0) {
        out.push(snapshot(0.0, &b));
    }
    for s in 0..steps {
        let t = s as f64 * dt;
        rk.step(&mut b, t, dt, |tau, bv, db| {
            to_physical(&mut shifter, tau, bv, &mut a_buf);
            coupling(&a_buf, npts, &interactions, params.lambda, &mut n_buf);
            // ∂_t b_j(x) = N_j(τ, x + τκ_j)
            for (j, kappa) in kappas.iter().enumerate() {
                let back: Vec<f64> = kappa.iter().map(|k| -tau * k).collect();
                shifter.shift(&n_buf[j * npts..(j + 1) * npts], &back, &mut db[j * npts..(j + 1) * npts]);
            }
        });
        let t_next = (s + 1) as f64 * dt;
        if keep(s + 1) {
            let mut a = vec![C64::new(0.0, 0.0); b.len()];
            to_physical(&mut shifter, t_next, &b, &mut a);
            guard(t_next, &a, threshold)?;
            out.push(snapshot(t_next, &a));
        } else {
            guard(t_next, &b, threshold)?;
        }
    }
    Ok(out)
}

/// a_j(t) = α_j e^{−iλt(2M − |α_j|²)}, M = Σ|α_k|² (d = 1, σ = 1 torus).
pub fn explicit_torus_1d(alpha: &[C64], lambda: f64, t: f64) -> Vec<C64> {
    let mass: f64 = alpha.iter().map(C64::norm_sqr).sum();
    alpha
        .iter()
        .map(|a| a * C64::from_polar(1.0, -lambda * t * (2.0 * mass - a.norm_sqr())))
        .collect()
}

fn binomial(n: u64, k: u64) -> f64 {
    if k > n {
        return 0.0;
    }
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Σ_{n=0}^{σ} C(σ+1,n) C(σ,n) |a|^{2σ−2n} |b|^{2n}: the self-modulation
/// frequency of mode `a` in a two-mode interaction with `b`.
pub fn modulation_frequency(sigma: u32, a_abs: f64, b_abs: f64) -> f64 {
    let s = sigma as u64;
    (0..=s)
        .map(|n| {
            binomial(s + 1, n)
                * binomial(s, n)
                * a_abs.powi(2 * (s - n) as i32)
                * b_abs.powi(2 * n as i32)
        })
        .sum()
}

/// Closed-form two-mode torus solution for any σ.
pub fn explicit_two_mode(alpha_j: C64, alpha_l: C64, sigma: u32, lambda: f64, t: f64) -> (C64, C64) {
    let (aj, al) = (alpha_j.norm(), alpha_l.norm());
    let theta_j = modulation_frequency(sigma, aj, al);
    let theta_l = modulation_frequency(sigma, al, aj);
    (
        alpha_j * C64::from_polar(1.0, -lambda * t * theta_j),
        alpha_l * C64::from_polar(1.0, -lambda * t * theta_l),
    )
}

/// Composite Simpson rule on [0, t] with step at most `h`.
pub fn simpson<F: Fn(f64) -> f64>(f: F, t: f64, h: f64) -> f64 {
    if t == 0.0 {
        return 0.0;
    }
    let mut n = (t.abs() / h).ceil().max(2.0) as usize;
    if n % 2 == 1 {
        n += 1;
    }
    let step = t / n as f64;
    let mut s = f(0.0) + f(t);
    for i in 1..n {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        s += w * f(i as f64 * step);
    }
    s * step / 3.0
}

/// One 1-D Euclidean mode for [`explicit_euclid_1d`]: carrier κ and initial
/// profile α.
pub struct EuclidMode<'f> {
    pub kappa: f64,
    pub alpha: &'f dyn Fn(f64) -> C64,
}

/// a_j(t,x) = α_j(x − tκ_j) e^{iS_j(t,x)} for every mode (d = 1, σ = 1),
/// with
/// S_j = −2λ ∫_0^t Σ_{ℓ≠j} |α_ℓ(x + (τ−t)κ_j − τκ_ℓ)|² dτ − tλ|α_j(x − tκ_j)|².
pub fn explicit_euclid_1d(modes: &[EuclidMode<'_>], lambda: f64, t: f64, x: f64, quadrature_dt: f64) -> Vec<C64> {
    modes
        .iter()
        .enumerate()
        .map(|(j, mj)| {
            let base = (mj.alpha)(x - t * mj.kappa);
            let cross = simpson(
                |tau| {
                    modes
                        .iter()
                        .enumerate()
                        .filter(|(l, _)| *l != j)
                        .map(|(_, ml)| (ml.alpha)(x + (tau - t) * mj.kappa - tau * ml.kappa).norm_sqr())
                        .sum()
                },
                t,
                quadrature_dt,
            );
            let phase = -2.0 * lambda * cross - t * lambda * base.norm_sqr();
            base * C64::from_polar(1.0, phase)
        })
        .collect()
}

pub fn total_mass_torus(state: &ProfileStateTorus) -> f64 {
    state.amps.iter().map(C64::norm_sqr).sum()
}

/// Σ_j ‖a_j‖²_{L²} with the box quadrature weight dx^d.
pub fn total_mass_euclid(state: &ProfileStateEuclid) -> f64 {
    let cell = state.grid.dx().powi(state.grid.d as i32);
    state
        .fields
        .iter()
        .map(|f| f.iter().map(C64::norm_sqr).sum::<f64>() * cell)
        .sum()
}
