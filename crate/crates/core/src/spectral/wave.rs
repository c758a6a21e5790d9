//! Wave operators as rung tables, and propagation (velocity) diagnostics.

use nalgebra::Matrix2;

use super::SpectralError;
use crate::classical::{
    propagate_free_line, propagate_line_numeric, BoundaryPropagator, DiracPotential, SpinorField,
};
use crate::geometry::StarBoundary;
use crate::numerics::{fft_frequencies, fft_in_place};
use crate::C64;

/// One entry of a strong-limit table.
#[derive(Debug, Clone, PartialEq)]
pub struct Rung {
    pub t: f64,
    pub norm: f64,
    /// Distance to the previous rung's output (`NaN` for the first rung).
    pub increment: f64,
    pub scheme_error: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct WaveResult {
    pub field: SpinorField,
    pub rungs: Vec<Rung>,
    pub converged: bool,
}

fn finish(outputs: Vec<(f64, SpinorField, Option<f64>)>, tol: f64) -> Result<WaveResult, SpectralError> {
    let mut rungs = Vec::with_capacity(outputs.len());
    for (i, (t, field, err)) in outputs.iter().enumerate() {
        let increment = if i == 0 { f64::NAN } else { field.difference_norm(&outputs[i - 1].1)? };
        rungs.push(Rung { t: *t, norm: field.norm(), increment, scheme_error: *err });
    }
    let scale = outputs.last().map(|o| o.1.norm()).unwrap_or(0.0).max(1e-300);
    let converged = rungs.len() >= 2 && rungs.last().unwrap().increment <= tol * scale;
    let field = outputs.into_iter().last().map(|o| o.1).ok_or_else(|| {
        SpectralError::Convergence("empty rung ladder".into())
    })?;
    Ok(WaveResult { field, rungs, converged })
}

fn check_ladder(ts: &[f64], h: f64) -> Result<(), SpectralError> {
    if ts.is_empty() || ts.windows(2).any(|w| w[1] <= w[0]) || ts[0] <= 0.0 {
        return Err(SpectralError::Domain("rung times must be positive and increasing".into()));
    }
    for &t in ts {
        let n = t / h;
        if (n - n.round()).abs() > 1e-6 {
            return Err(SpectralError::Resolution(format!("rung time {t} is not a multiple of h = {h}")));
        }
    }
    Ok(())
}

/// `w_r f = lim_T u^V(0, T) u^0_inf(T, 0) f` for `f` supported right of the boundary
/// at time 0: free transport to time `T`, then the interacting boundary evolution back.
pub fn wave_operator_right(
    f: &SpinorField,
    boundary: &StarBoundary,
    potential: &DiracPotential,
    ts: &[f64],
    tol: f64,
) -> Result<WaveResult, SpectralError> {
    check_ladder(ts, f.h)?;
    let prop = BoundaryPropagator::new(boundary, potential);
    let mut outputs = Vec::new();
    for &t in ts {
        let mut moved = propagate_free_line(f, t, 0.0).field;
        moved.time_tag = t;
        let back = prop.propagate(&moved, 0.0)?;
        outputs.push((t, back.field, back.scheme_error));
    }
    finish(outputs, tol)
}

/// `w_l f = lim_T exp(i T b^0_inf) exp(-i T b^V_inf) f` on the line.
///
/// This is the observable (Heisenberg) orientation: `exp(-i T b)` is the evolution that
/// transports test functions, so its left-moving packets are component 1 and the range
/// lies in component 1.
pub fn wave_operator_left_line(
    f: &SpinorField,
    potential: &DiracPotential,
    ts: &[f64],
    tol: f64,
) -> Result<WaveResult, SpectralError> {
    check_ladder(ts, f.h)?;
    let t_max = *ts.last().unwrap();
    let ext = (t_max / f.h).ceil() as usize + 8;
    let wide = f.regrid(f.x_min - ext as f64 * f.h, f.len() + 2 * ext)?;
    let mut outputs = Vec::new();
    for &t in ts {
        let mut data = wide.clone();
        data.time_tag = t;
        let back = propagate_line_numeric(&data, potential, 0.0, t)?;
        let fwd = propagate_free_line(&back.field, t, 0.0).field;
        outputs.push((t, fwd, back.scheme_error));
    }
    finish(outputs, tol)
}

/// Time direction used for velocity diagnostics.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Orientation {
    /// `f_t = exp(i t b) f`: Schrödinger picture, component 1 moves right.
    Forward,
    /// `f_t = exp(-i t b) f`: transport of test functions, component 1 moves left.
    Heisenberg,
}

#[derive(Debug, Clone)]
pub struct PropagationDiagnostics {
    /// Velocity bin centres and the squared norm in each bin at the last time.
    pub velocity_histogram: Vec<(f64, f64)>,
    /// `(t, |1_{[0, c0]}(|x| / t) f_t|)`.
    pub minimal_velocity: Vec<(f64, f64)>,
    /// `(t, |1_{[-R, R]}(x) f_t|)`.
    pub local_decay: Vec<(f64, f64)>,
    /// `|1_{x/t < 0} f_T|^2 / |f|^2` at the last time.
    pub left_fraction: f64,
}

/// Evolves `f` on the line and records velocity statistics at each time in `times`.
pub fn propagation_diagnostics(
    f: &SpinorField,
    potential: &DiracPotential,
    times: &[f64],
    orientation: Orientation,
    c0: f64,
    r_local: f64,
    bins: usize,
) -> Result<PropagationDiagnostics, SpectralError> {
    check_ladder(times, f.h)?;
    let t_max = *times.last().unwrap();
    let ext = (t_max / f.h).ceil() as usize + 8;
    let mut cur = f.regrid(f.x_min - ext as f64 * f.h, f.len() + 2 * ext)?;
    cur.time_tag = 0.0;
    let sign = match orientation {
        Orientation::Forward => 1.0,
        Orientation::Heisenberg => -1.0,
    };
    let mut minimal_velocity = Vec::new();
    let mut local_decay = Vec::new();
    for &t in times {
        let target = sign * t;
        cur = propagate_line_numeric(&cur, potential, target, cur.time_tag)?.field;
        cur.time_tag = target;
        let (mut slow, mut local) = (0.0, 0.0);
        for j in 0..cur.len() {
            let x = cur.x(j);
            let w = (cur.values[j][0].norm_sqr() + cur.values[j][1].norm_sqr()) * cur.h;
            if x.abs() / t <= c0 {
                slow += w;
            }
            if x.abs() <= r_local {
                local += w;
            }
        }
        minimal_velocity.push((t, slow.sqrt()));
        local_decay.push((t, local.sqrt()));
    }
    let bins = bins.max(2);
    let width = 2.0 / bins as f64;
    let mut hist: Vec<(f64, f64)> = (0..bins).map(|i| (-1.0 + (i as f64 + 0.5) * width, 0.0)).collect();
    let mut left = 0.0;
    for j in 0..cur.len() {
        let v = cur.x(j) / t_max;
        let w = (cur.values[j][0].norm_sqr() + cur.values[j][1].norm_sqr()) * cur.h;
        let i = (((v + 1.0) / width).floor().max(0.0) as usize).min(bins - 1);
        hist[i].1 += w;
        if v < 0.0 {
            left += w;
        }
    }
    let total = f.norm_sqr().max(1e-300);
    Ok(PropagationDiagnostics { velocity_histogram: hist, minimal_velocity, local_decay, left_fraction: left / total })
}

/// Spectral cut `1_K(b)` for the constant-mass line operator, exact per Fourier mode:
/// `b^(xi) = -xi L - m Gamma` squares to `xi^2 + m^2`, so the branch projections are
/// `(1 +- b^(xi) / E(xi)) / 2`.
pub fn constant_mass_spectral_cut(f: &SpinorField, m: f64, keep: impl Fn(f64) -> bool) -> SpinorField {
    let pad = f.len();
    let total = (f.len() + 2 * pad).next_power_of_two();
    let mut c1 = vec![C64::new(0.0, 0.0); total];
    let mut c2 = vec![C64::new(0.0, 0.0); total];
    for (j, v) in f.values.iter().enumerate() {
        c1[pad + j] = v[0];
        c2[pad + j] = v[1];
    }
    fft_in_place(&mut c1, false);
    fft_in_place(&mut c2, false);
    let gamma = DiracPotential::constant_mass(m).gamma;
    let l = Matrix2::new(C64::new(1.0, 0.0), C64::new(0.0, 0.0), C64::new(0.0, 0.0), C64::new(-1.0, 0.0));
    for (i, xi) in fft_frequencies(total, f.h).into_iter().enumerate() {
        let e = (xi * xi + m * m).sqrt();
        let bh = l * C64::new(-xi, 0.0) - gamma * C64::new(m, 0.0);
        let mut proj = Matrix2::zeros();
        if e > 0.0 {
            if keep(e) {
                proj += (Matrix2::identity() + bh / C64::new(e, 0.0)) * C64::new(0.5, 0.0);
            }
            if keep(-e) {
                proj += (Matrix2::identity() - bh / C64::new(e, 0.0)) * C64::new(0.5, 0.0);
            }
        } else if keep(0.0) {
            proj = Matrix2::identity();
        }
        let (a, b) = (c1[i], c2[i]);
        c1[i] = proj[(0, 0)] * a + proj[(0, 1)] * b;
        c2[i] = proj[(1, 0)] * a + proj[(1, 1)] * b;
    }
    fft_in_place(&mut c1, true);
    fft_in_place(&mut c2, true);
    let scale = 1.0 / total as f64;
    let mut out = f.clone();
    for (j, v) in out.values.iter_mut().enumerate() {
        *v = [c1[pad + j] * scale, c2[pad + j] * scale];
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn packet(x0: f64, sigma: f64, k: f64, comp: usize) -> impl Fn(f64) -> [C64; 2] {
        move |x: f64| {
            let g = C64::from_polar((-(x - x0).powi(2) / (2.0 * sigma * sigma)).exp(), k * x);
            let mut s = [C64::new(0.0, 0.0); 2];
            s[comp] = g;
            s
        }
    }

    #[test]
    fn free_component1_moves_right_forward() {
        let f = SpinorField::on_interval(-8.0, 8.0, 1.0 / 16.0, 0.5, 0.0, packet(0.0, 1.0, 0.0, 0));
        let d = propagation_diagnostics(&f, &DiracPotential::zero(), &[5.0, 10.0], Orientation::Forward, 0.5, 2.0, 20).unwrap();
        let peak = d.velocity_histogram.iter().cloned().fold((0.0, 0.0), |a, b| if b.1 > a.1 { b } else { a });
        assert!((peak.0 - 1.0).abs() < 0.1, "{peak:?}");
        let h = propagation_diagnostics(&f, &DiracPotential::zero(), &[5.0, 10.0], Orientation::Heisenberg, 0.5, 2.0, 20).unwrap();
        assert!(h.left_fraction > 0.999);
    }

    #[test]
    fn branch_cut_is_a_projection() {
        let f = SpinorField::on_interval(-30.0, 30.0, 1.0 / 8.0, 0.5, 0.0, packet(0.0, 1.0, 2.0, 0));
        let p = constant_mass_spectral_cut(&f, 1.0, |e| e > 0.0);
        let q = constant_mass_spectral_cut(&f, 1.0, |e| e < 0.0);
        let pp = constant_mass_spectral_cut(&p, 1.0, |e| e > 0.0);
        assert!(pp.difference_norm(&p).unwrap() < 1e-10);
        assert!((p.norm_sqr() + q.norm_sqr() - f.norm_sqr()).abs() < 1e-10);
        assert!(p.inner(&q).unwrap().norm() < 1e-10);
    }
}
