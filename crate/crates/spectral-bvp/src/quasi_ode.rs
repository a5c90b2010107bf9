//! Shooting for `y' = y⁽¹⁾ + s y`, `(y⁽¹⁾)' = -s y⁽¹⁾ - (s² + λ) y` on `[0, π]`.
//!
//! The system matrix is traceless and linear in the state, so each mesh cell is advanced by the
//! closed-form exponential of a fourth-order Magnus expansion. The scheme is exact for constant
//! potentials, keeps `det = 1` per step, and is time-symmetric.

use crate::error::{Error, Result};
use crate::hn_algebra::RationalBC;
use crate::potential::{Potential, SolutionTrace};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

pub const DEFAULT_CELLS: usize = 2048;

/// Largest per-substep phase advance allowed before cells are subdivided.
const MAX_PHASE_STEP: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Endpoint {
    Left,
    Right,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InitialData {
    pub at: Endpoint,
    pub y: f64,
    pub quasi_deriv: f64,
}

impl InitialData {
    pub fn left(y: f64, quasi_deriv: f64) -> Self {
        InitialData {
            at: Endpoint::Left,
            y,
            quasi_deriv,
        }
    }

    pub fn right(y: f64, quasi_deriv: f64) -> Self {
        InitialData {
            at: Endpoint::Right,
            y,
            quasi_deriv,
        }
    }
}

/// State at the far end of a shot, with `(y, y⁽¹⁾) · exp(log_scale)` the true value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Shot {
    pub y: f64,
    pub quasi: f64,
    pub log_scale: f64,
}

/// Potential sampled at the Gauss nodes of a uniform mesh.
#[derive(Debug, Clone)]
pub struct QuasiOde {
    s: Potential,
    cells: usize,
    h: f64,
    gauss: Vec<[f64; 2]>,
    s_max: f64,
}

const GAUSS_OFFSET: f64 = 0.288_675_134_594_812_9; // √3 / 6

impl QuasiOde {
    pub fn new(s: &Potential, cells: usize) -> Self {
        let cells = cells.max(4);
        let h = PI / cells as f64;
        let gauss: Vec<[f64; 2]> = (0..cells)
            .map(|i| {
                let mid = (i as f64 + 0.5) * h;
                [
                    s.eval_unchecked(mid - GAUSS_OFFSET * h),
                    s.eval_unchecked(mid + GAUSS_OFFSET * h),
                ]
            })
            .collect();
        let s_max = gauss.iter().flat_map(|g| g.iter()).fold(0.0f64, |m, v| m.max(v.abs()));
        QuasiOde {
            s: s.clone(),
            cells,
            h,
            gauss,
            s_max,
        }
    }

    pub fn potential(&self) -> &Potential {
        &self.s
    }

    pub fn cells(&self) -> usize {
        self.cells
    }

    pub fn grid(&self) -> Vec<f64> {
        (0..=self.cells).map(|i| i as f64 * self.h).collect()
    }

    /// Prüfer scale `k` used for phase tracking.
    pub fn phase_scale(lambda: f64) -> f64 {
        lambda.abs().max(1.0).sqrt()
    }

    fn substeps(&self, lambda: f64) -> usize {
        let k = Self::phase_scale(lambda);
        let rate = k + self.s_max + self.s_max * self.s_max / k;
        ((self.h * rate / MAX_PHASE_STEP).ceil() as usize).max(1)
    }

    /// Propagator of cell `i` traversed in direction `dir` (+1 forward, -1 backward).
    #[inline]
    fn cell_propagator(&self, i: usize, lambda: f64, dir: f64, m: usize) -> [f64; 4] {
        if m == 1 {
            let [a, b] = self.gauss[i];
            let (s1, s2) = if dir > 0.0 { (a, b) } else { (b, a) };
            return magnus4(s1, s2, dir * self.h, lambda);
        }
        let hs = self.h / m as f64;
        let x0 = i as f64 * self.h;
        let mut acc = [1.0, 0.0, 0.0, 1.0];
        for j in 0..m {
            let jj = if dir > 0.0 { j } else { m - 1 - j };
            let mid = x0 + (jj as f64 + 0.5) * hs;
            let a = self.s.eval_unchecked(mid - GAUSS_OFFSET * hs);
            let b = self.s.eval_unchecked(mid + GAUSS_OFFSET * hs);
            let (s1, s2) = if dir > 0.0 { (a, b) } else { (b, a) };
            acc = matmul(magnus4(s1, s2, dir * hs, lambda), acc);
        }
        acc
    }

    /// Full trace on the mesh nodes.
    pub fn integrate(&self, lambda: f64, init: InitialData) -> SolutionTrace {
        let n = self.cells;
        let m = self.substeps(lambda);
        let mut y = vec![0.0; n + 1];
        let mut q = vec![0.0; n + 1];
        match init.at {
            Endpoint::Left => {
                y[0] = init.y;
                q[0] = init.quasi_deriv;
                for i in 0..n {
                    let p = self.cell_propagator(i, lambda, 1.0, m);
                    y[i + 1] = p[0] * y[i] + p[1] * q[i];
                    q[i + 1] = p[2] * y[i] + p[3] * q[i];
                }
            }
            Endpoint::Right => {
                y[n] = init.y;
                q[n] = init.quasi_deriv;
                for i in (0..n).rev() {
                    let p = self.cell_propagator(i, lambda, -1.0, m);
                    y[i] = p[0] * y[i + 1] + p[1] * q[i + 1];
                    q[i] = p[2] * y[i + 1] + p[3] * q[i + 1];
                }
            }
        }
        SolutionTrace {
            grid: self.grid(),
            y,
            y_quasi: q,
            lambda,
        }
    }

    /// Value at the opposite endpoint, rescaled to avoid overflow.
    pub fn shoot(&self, lambda: f64, init: InitialData) -> Shot {
        let (shot, _) = self.shoot_impl(lambda, init, false);
        shot
    }

    /// Like [`shoot`](Self::shoot) but also returns the accumulated Prüfer angle change
    /// `θ(end) - θ(start)` with `cot θ = y⁽¹⁾ / (k y)`, `k` = [`phase_scale`](Self::phase_scale).
    pub fn shoot_with_phase(&self, lambda: f64, init: InitialData) -> (Shot, f64) {
        self.shoot_impl(lambda, init, true)
    }

    fn shoot_impl(&self, lambda: f64, init: InitialData, phase: bool) -> (Shot, f64) {
        let n = self.cells;
        let m = self.substeps(lambda);
        let k = Self::phase_scale(lambda);
        let (mut y, mut q) = (init.y, init.quasi_deriv);
        let mut log_scale = 0.0;
        let mut theta = 0.0;
        let mut ang = (k * y).atan2(q);
        let dir = if init.at == Endpoint::Left { 1.0 } else { -1.0 };
        for t in 0..n {
            let i = if dir > 0.0 { t } else { n - 1 - t };
            if m == 1 || !phase {
                let p = self.cell_propagator(i, lambda, dir, m);
                let ny = p[0] * y + p[1] * q;
                q = p[2] * y + p[3] * q;
                y = ny;
                if phase {
                    let na = (k * y).atan2(q);
                    theta += wrap_half_pi(na - ang);
                    ang = na;
                }
            } else {
                let hs = self.h / m as f64;
                let x0 = i as f64 * self.h;
                for j in 0..m {
                    let jj = if dir > 0.0 { j } else { m - 1 - j };
                    let mid = x0 + (jj as f64 + 0.5) * hs;
                    let a = self.s.eval_unchecked(mid - GAUSS_OFFSET * hs);
                    let b = self.s.eval_unchecked(mid + GAUSS_OFFSET * hs);
                    let (s1, s2) = if dir > 0.0 { (a, b) } else { (b, a) };
                    let p = magnus4(s1, s2, dir * hs, lambda);
                    let ny = p[0] * y + p[1] * q;
                    q = p[2] * y + p[3] * q;
                    y = ny;
                    let na = (k * y).atan2(q);
                    theta += wrap_half_pi(na - ang);
                    ang = na;
                }
            }
            let mag = y.abs().max(q.abs());
            if mag > 1e100 || (mag < 1e-100 && mag > 0.0) {
                y /= mag;
                q /= mag;
                log_scale += mag.ln();
            }
        }
        (Shot { y, quasi: q, log_scale }, dir * theta)
    }
}

/// Reduces an angle difference modulo π into `(-π/2, π/2]`.
#[inline]
fn wrap_half_pi(d: f64) -> f64 {
    let mut r = d % PI;
    if r > PI / 2.0 {
        r -= PI;
    } else if r <= -PI / 2.0 {
        r += PI;
    }
    r
}

/// Angle of the line through `(u, v)` measured by `atan2(u, v)`, in `[0, π)`.
pub fn line_angle_closed_open(u: f64, v: f64) -> f64 {
    let mut a = u.atan2(v);
    if a < 0.0 {
        a += PI;
    }
    if a >= PI {
        a -= PI;
    }
    a
}

/// As [`line_angle_closed_open`] but in `(0, π]`.
pub fn line_angle_open_closed(u: f64, v: f64) -> f64 {
    let a = line_angle_closed_open(u, v);
    if a == 0.0 {
        PI
    } else {
        a
    }
}

#[inline]
fn matmul(a: [f64; 4], b: [f64; 4]) -> [f64; 4] {
    [
        a[0] * b[0] + a[1] * b[2],
        a[0] * b[1] + a[1] * b[3],
        a[2] * b[0] + a[3] * b[2],
        a[2] * b[1] + a[3] * b[3],
    ]
}

/// `exp(Ω)` for the two-node fourth-order Magnus step with potential values `s1`, `s2` at the
/// Gauss nodes in order of traversal and signed step `h`. Row-major.
#[inline]
fn magnus4(s1: f64, s2: f64, h: f64, lambda: f64) -> [f64; 4] {
    let kappa = 3f64.sqrt() * h * h / 12.0;
    let ds = s2 - s1;
    let alpha = 0.5 * h * (s1 + s2) + kappa * (s2 * s2 - s1 * s1);
    let beta = h + 2.0 * kappa * ds;
    let gamma = -0.5 * h * (s1 * s1 + s2 * s2 + 2.0 * lambda) + 2.0 * kappa * ds * (lambda - s1 * s2);
    let delta = alpha * alpha + beta * gamma;
    let (c, s) = if delta.abs() < 1e-6 {
        (
            1.0 + delta / 2.0 + delta * delta / 24.0 + delta * delta * delta / 720.0,
            1.0 + delta / 6.0 + delta * delta / 120.0 + delta * delta * delta / 5040.0,
        )
    } else if delta < 0.0 {
        let w = (-delta).sqrt();
        (w.cos(), w.sin() / w)
    } else {
        let w = delta.sqrt();
        (w.cosh(), w.sinh() / w)
    };
    [c + s * alpha, s * beta, s * gamma, c - s * alpha]
}

/// `u(0) w⁽¹⁾(0) - u⁽¹⁾(0) w(0)`.
pub fn wronskian(u: &SolutionTrace, w: &SolutionTrace) -> Result<f64> {
    if u.lambda != w.lambda {
        return Err(Error::Domain(format!(
            "Wronskian of solutions at different λ ({} and {})",
            u.lambda, w.lambda
        )));
    }
    Ok(u.y[0] * w.y_quasi[0] - u.y_quasi[0] * w.y[0])
}

/// Solution with `(φ, φ⁽¹⁾)(0) = (f↓(λ), -f↑(λ))`.
pub fn phi(s: &Potential, f: &RationalBC, lambda: f64) -> SolutionTrace {
    let (u, d) = f.up_down_at(lambda);
    QuasiOde::new(s, DEFAULT_CELLS).integrate(lambda, InitialData::left(d, -u))
}

/// Solution with `(ψ, ψ⁽¹⁾)(π) = (F↓(λ), F↑(λ))`.
pub fn psi(s: &Potential, big_f: &RationalBC, lambda: f64) -> SolutionTrace {
    let (u, d) = big_f.up_down_at(lambda);
    QuasiOde::new(s, DEFAULT_CELLS).integrate(lambda, InitialData::right(d, u))
}

/// `C` with `(C, C⁽¹⁾)(0) = (1, 0)` and `S` with `(S, S⁽¹⁾)(0) = (0, 1)`.
pub fn standard_solutions(s: &Potential, lambda: f64) -> (SolutionTrace, SolutionTrace) {
    let ode = QuasiOde::new(s, DEFAULT_CELLS);
    (
        ode.integrate(lambda, InitialData::left(1.0, 0.0)),
        ode.integrate(lambda, InitialData::left(0.0, 1.0)),
    )
}

/// `S_π` with `(S_π, S_π⁽¹⁾)(π) = (0, 1)`.
pub fn s_pi(s: &Potential, lambda: f64) -> SolutionTrace {
    QuasiOde::new(s, DEFAULT_CELLS).integrate(lambda, InitialData::right(0.0, 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample_potential() -> Potential {
        Potential::fourier(vec![0.2, 0.3, -0.1], vec![0.15]).unwrap()
    }

    #[test]
    fn zero_potential_closed_forms() {
        let s = Potential::zero();
        for &l in &[-3.0, -0.5, 0.0, 0.7, 4.0, 30.25] {
            let (c, sn) = standard_solutions(&s, l);
            let n = c.y.len() - 1;
            let (cc, ss, cq, sq) = if l > 0.0 {
                let k: f64 = l.sqrt();
                ((k * PI).cos(), (k * PI).sin() / k, -k * (k * PI).sin(), (k * PI).cos())
            } else if l < 0.0 {
                let k: f64 = (-l).sqrt();
                (
                    (k * PI).cosh(),
                    (k * PI).sinh() / k,
                    k * (k * PI).sinh(),
                    (k * PI).cosh(),
                )
            } else {
                (1.0, PI, 0.0, 1.0)
            };
            let tol = 1e-12 * (1.0 + cc.abs() + cq.abs());
            assert!((c.y[n] - cc).abs() < tol, "C({l})");
            assert!((c.y_quasi[n] - cq).abs() < tol);
            assert!((sn.y[n] - ss).abs() < tol);
            assert!((sn.y_quasi[n] - sq).abs() < tol);
        }
    }

    #[test]
    fn fourth_order_convergence() {
        let s = sample_potential();
        let end = |cells: usize| {
            let t = QuasiOde::new(&s, cells).shoot(7.3, InitialData::left(1.0, 0.4));
            t.y
        };
        let (a, b, c) = (end(128), end(256), end(4096));
        let ratio = (a - c).abs() / (b - c).abs();
        assert!(ratio > 14.0 && ratio < 18.0, "ratio {ratio}");
        assert!((end(2048) - c).abs() < 1e-10);
    }

    #[test]
    fn wronskian_is_conserved() {
        let s = sample_potential();
        let (c, sn) = standard_solutions(&s, 3.3);
        for i in [0, 100, 2048] {
            let w = c.y[i] * sn.y_quasi[i] - c.y_quasi[i] * sn.y[i];
            assert!((w - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn backward_shot_inverts_forward_shot() {
        let s = sample_potential();
        let ode = QuasiOde::new(&s, 512);
        let fwd = ode.shoot(12.0, InitialData::left(0.3, -1.1));
        let back = ode.shoot(12.0, InitialData::right(fwd.y, fwd.quasi));
        assert!((back.y - 0.3).abs() < 1e-12 && (back.quasi + 1.1).abs() < 1e-12);
    }

    #[test]
    fn phase_counts_zeros_of_sine() {
        let ode = QuasiOde::new(&Potential::zero(), 2048);
        let (_, th) = ode.shoot_with_phase(20.5 * 20.5, InitialData::left(0.0, 1.0));
        assert!((th - 20.5 * PI).abs() < 1e-9, "{th}");
        let (_, th) = ode.shoot_with_phase(-400.0, InitialData::left(1.0, 0.0));
        assert!(th < 0.0 && th > -PI / 2.0);
    }

    #[test]
    fn large_lambda_subdivides() {
        let ode = QuasiOde::new(&Potential::zero(), 64);
        let l = 200.0f64 * 200.0;
        let t = ode.integrate(l, InitialData::left(0.0, 1.0));
        let exact = (200.0 * PI).sin() / 200.0;
        assert!((t.y[64] - exact).abs() < 1e-12);
        let (_, th) = ode.shoot_with_phase(l, InitialData::left(0.0, 1.0));
        assert!((th - 200.0 * PI).abs() < 1e-8);
    }

    #[test]
    fn wronskian_rejects_mismatched_lambda() {
        let s = Potential::zero();
        let a = phi(&s, &RationalBC::Dirichlet, 1.0);
        let b = phi(&s, &RationalBC::Dirichlet, 2.0);
        assert!(wronskian(&a, &b).is_err());
    }
}
