//! Eigenvalues, norming constants and the characteristic function of `𝒫(s, f, F)`.
//!
//! Eigenvalues are indexed by a Prüfer counting function
//! `D(λ) = θ(π, λ) - θ_F(λ)` where `cot θ = y⁽¹⁾/(k y)` along `φ(·, λ)`,
//! `θ(0) ∈ [0, π) + π Π_f(λ)` and `θ_F ∈ (0, π] - π Π_F(λ)`. `D - nπ` changes sign exactly at
//! `λ_n`, so brackets never skip or duplicate an eigenvalue.

use crate::error::{Error, Result};
use crate::hn_algebra::RationalBC;
use crate::numeric::{brent, least_squares, par_map, tetragamma_sum, trigamma};
use crate::potential::{Potential, SolutionTrace};
use crate::quasi_ode::{line_angle_closed_open, line_angle_open_closed, InitialData, QuasiOde, DEFAULT_CELLS};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Problem {
    pub s: Potential,
    pub f: RationalBC,
    #[serde(rename = "F")]
    pub big_f: RationalBC,
}

impl Problem {
    pub fn new(s: Potential, f: RationalBC, big_f: RationalBC) -> Self {
        Problem { s, f, big_f }
    }

    /// `(ind f + ind F) / 2`.
    pub fn half_index_sum(&self) -> f64 {
        0.5 * (self.f.index() + self.big_f.index()) as f64
    }

    /// The problem seen from `x = π`: potential `-s(π - x)`, boundary functions swapped.
    pub fn reflected(&self) -> Problem {
        Problem {
            s: self.s.reflected(),
            f: self.big_f.clone(),
            big_f: self.f.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralData {
    pub ind_f: i32,
    #[serde(rename = "ind_F")]
    pub ind_big_f: i32,
    pub eigenvalues: Vec<f64>,
    pub norming_constants: Vec<f64>,
}

impl SpectralData {
    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    /// Checks lengths, strict monotonicity and positivity of norming constants.
    pub fn validate(&self) -> Result<()> {
        if self.eigenvalues.len() != self.norming_constants.len() {
            return Err(Error::validation("norming_constants", "length must match eigenvalues"));
        }
        if self.ind_f < -1 || self.ind_big_f < -1 {
            return Err(Error::validation("ind_f", "indices must be >= -1"));
        }
        for (i, w) in self.eigenvalues.windows(2).enumerate() {
            if !(w[1] > w[0]) {
                return Err(Error::validation(
                    format!("eigenvalues[{}]", i + 1),
                    "must be strictly increasing",
                ));
            }
        }
        if let Some(i) = self
            .norming_constants
            .iter()
            .position(|g| !(*g > 0.0) || !g.is_finite())
        {
            return Err(Error::validation(
                format!("norming_constants[{i}]"),
                "must be finite and positive",
            ));
        }
        if let Some(i) = self.eigenvalues.iter().position(|l| !l.is_finite()) {
            return Err(Error::validation(format!("eigenvalues[{i}]"), "must be finite"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    /// Uniform mesh cells on `[0, π]`.
    pub cells: usize,
    /// Largest eigenvalue count a single request may ask for.
    pub max_count: usize,
    /// Relative tolerance on eigenvalues.
    pub xtol: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            cells: DEFAULT_CELLS,
            max_count: 64,
            xtol: 1e-14,
        }
    }
}

/// A problem bound to a discretization.
#[derive(Debug, Clone)]
pub struct Solver {
    problem: Problem,
    ode: QuasiOde,
    config: SolverConfig,
}

impl Solver {
    pub fn new(problem: &Problem, config: SolverConfig) -> Self {
        Solver {
            problem: problem.clone(),
            ode: QuasiOde::new(&problem.s, config.cells),
            config,
        }
    }

    pub fn problem(&self) -> &Problem {
        &self.problem
    }

    pub fn ode(&self) -> &QuasiOde {
        &self.ode
    }

    pub fn config(&self) -> &SolverConfig {
        &self.config
    }

    fn phi_init(&self, lambda: f64) -> InitialData {
        let (u, d) = self.problem.f.up_down_at(lambda);
        InitialData::left(d, -u)
    }

    fn psi_init(&self, lambda: f64) -> InitialData {
        let (u, d) = self.problem.big_f.up_down_at(lambda);
        InitialData::right(d, u)
    }

    pub fn phi(&self, lambda: f64) -> SolutionTrace {
        self.ode.integrate(lambda, self.phi_init(lambda))
    }

    pub fn psi(&self, lambda: f64) -> SolutionTrace {
        self.ode.integrate(lambda, self.psi_init(lambda))
    }

    /// `(φ(π), φ⁽¹⁾(π))` without rescaling.
    pub fn phi_at_pi(&self, lambda: f64) -> (f64, f64) {
        let s = self.ode.shoot(lambda, self.phi_init(lambda));
        let c = s.log_scale.exp();
        (s.y * c, s.quasi * c)
    }

    /// `(ψ(0), ψ⁽¹⁾(0))` without rescaling.
    pub fn psi_at_zero(&self, lambda: f64) -> (f64, f64) {
        let s = self.ode.shoot(lambda, self.psi_init(lambda));
        let c = s.log_scale.exp();
        (s.y * c, s.quasi * c)
    }

    /// `χ(λ) = F↑ φ(π) - F↓ φ⁽¹⁾(π)`.
    pub fn char_function(&self, lambda: f64) -> f64 {
        let (y, q) = self.phi_at_pi(lambda);
        let (u, d) = self.problem.big_f.up_down_at(lambda);
        u * y - d * q
    }

    /// `χ(λ) = f↓ ψ⁽¹⁾(0) + f↑ ψ(0)`, and a scale for relative comparison.
    pub fn char_function_psi_side(&self, lambda: f64) -> (f64, f64) {
        let (y, q) = self.psi_at_zero(lambda);
        let (u, d) = self.problem.f.up_down_at(lambda);
        (d * q + u * y, (d * q).abs() + (u * y).abs())
    }

    /// Both forms of `χ(λ)`; consistency error if they disagree beyond `1e-7` of their scale.
    pub fn char_function_checked(&self, lambda: f64) -> Result<f64> {
        let (y, q) = self.phi_at_pi(lambda);
        let (u, d) = self.problem.big_f.up_down_at(lambda);
        let a = u * y - d * q;
        let (b, sb) = self.char_function_psi_side(lambda);
        let scale = (u * y).abs() + (d * q).abs() + sb;
        if (a - b).abs() > 1e-7 * scale {
            return Err(Error::Consistency(format!("χ({lambda}) sides disagree: {a} vs {b}")));
        }
        Ok(a)
    }

    /// Counting function `D(λ)`; `D(λ) < nπ` iff `λ < λ_n`.
    pub fn counting(&self, lambda: f64) -> f64 {
        let k = QuasiOde::phase_scale(lambda);
        let (fu, fd) = self.problem.f.up_down_at(lambda);
        let theta0 = line_angle_closed_open(k * fd, -fu) + PI * self.problem.f.pole_count(lambda) as f64;
        let (_, dtheta) = self.ode.shoot_with_phase(lambda, InitialData::left(fd, -fu));
        let (gu, gd) = self.problem.big_f.up_down_at(lambda);
        let theta_f = line_angle_open_closed(k * gd, gu) - PI * self.problem.big_f.pole_count(lambda) as f64;
        theta0 + dtheta - theta_f
    }

    fn refine(&self, n: usize, lo: f64, glo: f64, hi: f64, ghi: f64) -> Result<f64> {
        let target = n as f64 * PI;
        let mut g = |l: f64| self.counting(l) - target;
        let xtol = self.config.xtol * lo.abs().max(hi.abs()).max(1.0);
        brent(&mut g, lo, hi, glo, ghi, xtol, 200)
    }

    /// Eigenvalue `λ_n` bracketed upward from a point `lo` known to lie below it.
    fn eigenvalue_above(&self, n: usize, lo: f64, glo: f64) -> Result<f64> {
        let target = n as f64 * PI;
        let (mut lo, mut glo) = (lo, glo);
        let mut step = (2.0 * lo.max(0.0).sqrt() + 1.0).max(1.0);
        for _ in 0..200 {
            let hi = lo + step;
            let ghi = self.counting(hi) - target;
            if ghi >= 0.0 {
                return self.refine(n, lo, glo, hi, ghi);
            }
            lo = hi;
            glo = ghi;
            step *= 2.0;
        }
        Err(Error::BracketExhausted(format!(
            "no upper bracket for λ_{n} above {lo}"
        )))
    }

    /// `λ_n` from scratch.
    pub fn eigenvalue(&self, n: usize) -> Result<f64> {
        self.eigenvalue_near(n, None)
    }

    /// `λ_n`, starting the bracket search at `hint` when given.
    pub fn eigenvalue_near(&self, n: usize, hint: Option<f64>) -> Result<f64> {
        let target = n as f64 * PI;
        let guess = hint.unwrap_or_else(|| {
            let m = n as f64 - self.problem.half_index_sum();
            if m > 0.5 {
                m * m
            } else {
                0.0
            }
        });
        let delta = match hint {
            Some(h) => 1e-6 * h.abs().max(1.0),
            None => 1.0,
        };
        let g0 = self.counting(guess) - target;
        if g0 == 0.0 {
            return Ok(guess);
        }
        let mut step = delta;
        if g0 < 0.0 {
            let mut lo = guess;
            let mut glo = g0;
            for _ in 0..200 {
                let hi = lo + step;
                let ghi = self.counting(hi) - target;
                if ghi >= 0.0 {
                    return self.refine(n, lo, glo, hi, ghi);
                }
                lo = hi;
                glo = ghi;
                step *= 4.0;
            }
        } else {
            let mut hi = guess;
            let mut ghi = g0;
            for _ in 0..200 {
                let lo = hi - step;
                let glo = self.counting(lo) - target;
                if glo <= 0.0 {
                    return self.refine(n, lo, glo, hi, ghi);
                }
                hi = lo;
                ghi = glo;
                step *= 4.0;
            }
        }
        Err(Error::BracketExhausted(format!("λ_{n} not bracketed from {guess}")))
    }

    /// First `count` eigenvalues.
    pub fn eigenvalues(&self, count: usize) -> Result<Vec<f64>> {
        self.check_count(count)?;
        let mut out: Vec<f64> = Vec::with_capacity(count);
        for n in 0..count {
            let l = match out.last() {
                None => self.eigenvalue(0)?,
                Some(&prev) => self.eigenvalue_above(n, prev, -PI)?,
            };
            if let Some(&prev) = out.last() {
                if !(l > prev) {
                    return Err(Error::Consistency(format!("eigenvalues not increasing at n = {n}")));
                }
            }
            out.push(l);
        }
        Ok(out)
    }

    /// First `hints.len()` eigenvalues with the bracket search seeded by `hints`.
    pub fn eigenvalues_near(&self, hints: &[f64]) -> Result<Vec<f64>> {
        self.check_count(hints.len())?;
        let out: Vec<f64> = par_map(hints.len(), |n| self.eigenvalue_near(n, Some(hints[n])))
            .into_iter()
            .collect::<Result<_>>()?;
        if out.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::Consistency("eigenvalues not increasing".into()));
        }
        Ok(out)
    }

    fn check_count(&self, count: usize) -> Result<()> {
        if count > self.config.max_count {
            return Err(Error::validation(
                "count",
                format!("{count} exceeds the configured cap {}", self.config.max_count),
            ));
        }
        Ok(())
    }

    /// `β` with `ψ(·, λ) = β φ(·, λ)`; `λ` must be an eigenvalue.
    pub fn beta(&self, lambda: f64) -> Result<f64> {
        let phi = self.phi(lambda);
        let psi = self.psi(lambda);
        beta_from_traces(&phi, &psi)
    }

    /// `(γ, β)` at an eigenvalue, with the pole-safe polynomial form cross-checked against
    /// `∫φ² + f'(λ)φ(0)² + F'(λ)φ(π)²` where both are finite.
    pub fn norming_constant(&self, lambda: f64) -> Result<(f64, f64)> {
        let phi = self.phi(lambda);
        let psi = self.psi(lambda);
        let beta = beta_from_traces(&phi, &psi)?;
        let int = phi.integral_y_squared();
        let gamma =
            int + self.problem.f.wronskian_term(lambda) + self.problem.big_f.wronskian_term(lambda) / (beta * beta);
        let fd = self.problem.f.eval_deriv(lambda);
        let gd = self.problem.big_f.eval_deriv(lambda);
        if fd.is_finite() && gd.is_finite() {
            let n = phi.y.len() - 1;
            let alt = int + fd * phi.y[0].powi(2) + gd * phi.y[n].powi(2);
            if (alt - gamma).abs() > 1e-6 * gamma.abs() {
                return Err(Error::Consistency(format!(
                    "norming constant forms disagree at λ = {lambda}: {gamma} vs {alt}"
                )));
            }
        }
        if !(gamma > 0.0) {
            return Err(Error::Consistency(format!(
                "non-positive norming constant {gamma} at λ = {lambda}"
            )));
        }
        Ok((gamma, beta))
    }

    pub fn spectral_data(&self, count: usize) -> Result<SpectralData> {
        let eigenvalues = self.eigenvalues(count)?;
        self.spectral_data_from_eigenvalues(eigenvalues)
    }

    pub fn spectral_data_from_eigenvalues(&self, eigenvalues: Vec<f64>) -> Result<SpectralData> {
        let norming_constants = par_map(eigenvalues.len(), |i| {
            self.norming_constant(eigenvalues[i]).map(|(g, _)| g)
        })
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
        Ok(SpectralData {
            ind_f: self.problem.f.index(),
            ind_big_f: self.problem.big_f.index(),
            eigenvalues,
            norming_constants,
        })
    }

    /// Zeros of `φ(·, λ)` in the open interval `(0, π)`.
    pub fn oscillation_count(&self, lambda: f64) -> Result<usize> {
        let trace = self.phi(lambda);
        let by_sign = sign_change_count(&trace)?;
        let k = QuasiOde::phase_scale(lambda);
        let (fu, fd) = self.problem.f.up_down_at(lambda);
        let theta0 = line_angle_closed_open(k * fd, -fu);
        let (_, dtheta) = self.ode.shoot_with_phase(lambda, InitialData::left(fd, -fu));
        let first = (theta0 / PI + 1e-9).floor() as i64 + 1;
        let last = ((theta0 + dtheta) / PI - 1e-9).ceil() as i64 - 1;
        let by_phase = (last - first + 1).max(0) as usize;
        if by_sign != by_phase {
            return Err(Error::Resolution(format!(
                "zero count at λ = {lambda}: {by_sign} sign changes but phase gives {by_phase}"
            )));
        }
        Ok(by_sign)
    }
}

/// `β` from `ψ = β φ` at the node of largest `|φ|`, with a residual check on the whole trace.
pub fn beta_from_traces(phi: &SolutionTrace, psi: &SolutionTrace) -> Result<f64> {
    let i = (0..phi.y.len())
        .max_by(|&a, &b| phi.y[a].abs().partial_cmp(&phi.y[b].abs()).unwrap())
        .unwrap_or(0);
    let den = phi.y[i].powi(2) + phi.y_quasi[i].powi(2);
    if den == 0.0 {
        return Err(Error::Degenerate("φ vanishes identically".into()));
    }
    let beta = (psi.y[i] * phi.y[i] + psi.y_quasi[i] * phi.y_quasi[i]) / den;
    let max_psi = psi.max_abs_y();
    let resid = phi
        .y
        .iter()
        .zip(&psi.y)
        .fold(0.0f64, |m, (a, b)| m.max((b - beta * a).abs()));
    if resid > 1e-6 * max_psi {
        return Err(Error::Domain(format!(
            "λ = {} is not an eigenvalue: ψ - βφ residual {resid} vs max|ψ| {max_psi}",
            phi.lambda
        )));
    }
    Ok(beta)
}

/// Interior sign changes of `y` on the trace grid. Endpoint values within `1e-9 max|y|` of zero
/// count as zeros at the endpoint and are excluded.
fn sign_change_count(trace: &SolutionTrace) -> Result<usize> {
    let n = trace.y.len() - 1;
    let tiny = 1e-9 * trace.max_abs_y();
    let mut lo = 0;
    while lo < n && trace.y[lo].abs() <= tiny {
        lo += 1;
    }
    let mut hi = n;
    while hi > lo && trace.y[hi].abs() <= tiny {
        hi -= 1;
    }
    let mut count = 0;
    let mut last_sign = trace.y[lo].signum();
    let mut last_change: Option<f64> = None;
    let h = trace.grid[1] - trace.grid[0];
    for i in lo + 1..=hi {
        let v = trace.y[i];
        if v == 0.0 {
            continue;
        }
        if v.signum() != last_sign {
            let x = trace.grid[i];
            if let Some(prev) = last_change {
                if x - prev < 2.0 * h {
                    return Err(Error::Resolution(format!(
                        "zeros of φ closer than two grid steps near x = {x}"
                    )));
                }
            }
            last_change = Some(x);
            count += 1;
            last_sign = v.signum();
        }
    }
    Ok(count)
}

pub fn char_function(p: &Problem, lambda: f64) -> Result<f64> {
    Solver::new(p, SolverConfig::default()).char_function_checked(lambda)
}

pub fn eigenvalues(p: &Problem, count: usize) -> Result<Vec<f64>> {
    Solver::new(p, SolverConfig::default()).eigenvalues(count)
}

pub fn beta(p: &Problem, lambda: f64) -> Result<f64> {
    Solver::new(p, SolverConfig::default()).beta(lambda)
}

pub fn norming_constant(p: &Problem, lambda: f64) -> Result<f64> {
    Solver::new(p, SolverConfig::default())
        .norming_constant(lambda)
        .map(|(g, _)| g)
}

pub fn spectral_data(p: &Problem, count: usize) -> Result<SpectralData> {
    Solver::new(p, SolverConfig::default()).spectral_data(count)
}

pub fn oscillation_count(p: &Problem, lambda: f64) -> Result<usize> {
    Solver::new(p, SolverConfig::default()).oscillation_count(lambda)
}

/// `(a_n, b_n)` with `a_n = √λ_n - (n - L)` and `b_n = γ_n / ((π/2)(n - L)^{2 ind f}) - 1`,
/// `L = (ind f + ind F)/2` and `√λ = -√|λ|` for negative `λ`. `b_n` is `NaN` where `n = L`.
pub fn asymptotic_residuals(data: &SpectralData) -> (Vec<f64>, Vec<f64>) {
    let l = 0.5 * (data.ind_f + data.ind_big_f) as f64;
    let a = data
        .eigenvalues
        .iter()
        .enumerate()
        .map(|(n, &lam)| lam.signum() * lam.abs().sqrt() - (n as f64 - l))
        .collect();
    let b = data
        .norming_constants
        .iter()
        .enumerate()
        .map(|(n, &g)| {
            let base = n as f64 - l;
            if base == 0.0 {
                f64::NAN
            } else {
                g / (0.5 * PI * base.powi(2 * data.ind_f)) - 1.0
            }
        })
        .collect();
    (a, b)
}

/// Tail model `λ_n ≈ (n - L)² + ω + κ/(n - L)²` fitted to the last third of a spectrum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TailModel {
    pub l: f64,
    pub omega: f64,
    pub kappa: f64,
}

impl TailModel {
    pub fn fit(eigs: &[f64], l: f64) -> TailModel {
        let n = eigs.len();
        let start = (n - n / 3).min(n.saturating_sub(3));
        let idx: Vec<usize> = (start..n).filter(|&i| i as f64 - l >= 2.0).collect();
        let mut model = TailModel {
            l,
            omega: 0.0,
            kappa: 0.0,
        };
        if idx.len() >= 3 {
            let rows: Vec<Vec<f64>> = idx.iter().map(|&i| vec![1.0, (i as f64 - l).powi(-2)]).collect();
            let rhs: Vec<f64> = idx.iter().map(|&i| eigs[i] - (i as f64 - l).powi(2)).collect();
            if let Ok(c) = least_squares(&rows, &rhs) {
                model.omega = c[0];
                model.kappa = c[1];
            }
        } else if let Some(&i) = idx.last() {
            model.omega = eigs[i] - (i as f64 - l).powi(2);
        }
        model
    }

    pub fn at(&self, n: usize) -> f64 {
        let m = n as f64 - self.l;
        m * m + self.omega + self.kappa / (m * m)
    }
}

fn hadamard_weight(n: usize, l: f64) -> f64 {
    let m = n as f64 - l;
    if m.abs() < 1e-9 {
        PI
    } else if m < 0.0 {
        1.0
    } else {
        1.0 / (m * m)
    }
}

/// Log of the tail `∏_{n >= t} (λ_n - λ)/(n - L)²` under the tail model.
fn hadamard_remainder(model: &TailModel, t: usize, lambda: f64) -> f64 {
    let z = t as f64 - model.l;
    let x = model.omega - lambda;
    x * trigamma(z) + (model.kappa - 0.5 * x * x) * tetragamma_sum(z)
}

/// `-∏_{n<L}(λ_n - λ) · ∏_{n=L} π(λ_n - λ) · ∏_{n>L} (λ_n - λ)/(n - L)²`.
///
/// Indices past the supplied eigenvalues and up to `tail_count` use [`TailModel`]; beyond that
/// the remainder is summed in closed form, leaving an error of order `λ³ tail_count⁻⁵`.
pub fn hadamard_product(eigs: &[f64], l: f64, lambda: f64, tail_count: usize) -> f64 {
    let model = TailModel::fit(eigs, l);
    hadamard_with_model(eigs, &model, lambda, tail_count, None)
}

fn hadamard_with_model(eigs: &[f64], model: &TailModel, lambda: f64, tail_count: usize, skip: Option<usize>) -> f64 {
    let t = tail_count.max(eigs.len());
    let mut prod = -1.0;
    let mut log_acc = 0.0;
    for n in 0..t {
        if Some(n) == skip {
            continue;
        }
        let ln = if n < eigs.len() { eigs[n] } else { model.at(n) };
        prod *= (ln - lambda) * hadamard_weight(n, model.l);
        if prod.abs() > 1e150 || (prod != 0.0 && prod.abs() < 1e-150) {
            log_acc += prod.abs().ln();
            prod = prod.signum();
        }
    }
    prod * (log_acc + hadamard_remainder(model, t, lambda)).exp()
}

/// `d/dλ` of [`hadamard_product`] at the supplied eigenvalue `eigs[j]`.
pub fn hadamard_derivative_at(eigs: &[f64], l: f64, j: usize, tail_count: usize) -> f64 {
    let model = TailModel::fit(eigs, l);
    // χ = -w_j (λ_j - λ) R(λ) with R the product over n ≠ j, so χ'(λ_j) = w_j R(λ_j).
    let r = hadamard_with_model(eigs, &model, eigs[j], tail_count, Some(j));
    -hadamard_weight(j, l) * r
}

/// `d/dλ` of [`hadamard_product`] at an arbitrary point, by a five-point stencil.
pub fn hadamard_derivative(eigs: &[f64], l: f64, lambda: f64, tail_count: usize) -> f64 {
    let model = TailModel::fit(eigs, l);
    let h = 1e-3 * lambda.abs().max(1.0).sqrt();
    let f = |x: f64| hadamard_with_model(eigs, &model, x, tail_count, None);
    (-f(lambda + 2.0 * h) + 8.0 * f(lambda + h) - 8.0 * f(lambda - h) + f(lambda - 2.0 * h)) / (12.0 * h)
}

/// Ratio of the large-`λ` estimate `λ^{L+1/2} sin((√λ + L)π)` to the raw Hadamard product,
/// probed at the peaks `√λ = m - L + 1/2`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HadamardCalibration {
    pub constant: f64,
    pub spread: f64,
    pub probes: Vec<f64>,
}

/// Tail length used internally by [`hadamard_calibration`].
pub const CALIBRATION_TAIL: usize = 1_000_000;

pub fn hadamard_calibration(eigs: &[f64], l: f64) -> HadamardCalibration {
    let model = TailModel::fit(eigs, l);
    let ms = [200.0, 400.0, 800.0];
    let probes: Vec<f64> = ms.iter().map(|m| (m - l + 0.5f64).powi(2)).collect();
    let ratios: Vec<f64> = probes
        .iter()
        .map(|&lam| {
            let raw = hadamard_with_model(eigs, &model, lam, CALIBRATION_TAIL, None);
            let r = lam.sqrt();
            let asym = lam.powf(l + 0.5) * ((r + l) * PI).sin();
            asym / raw
        })
        .collect();
    let constant = ratios.iter().sum::<f64>() / ratios.len() as f64;
    let spread = ratios.iter().fold(0.0f64, |m, r| m.max((r - constant).abs()));
    HadamardCalibration {
        constant,
        spread,
        probes,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn solver(f: RationalBC, g: RationalBC) -> Solver {
        Solver::new(&Problem::new(Potential::zero(), f, g), SolverConfig::default())
    }

    #[test]
    fn dirichlet_dirichlet_closed_form() {
        let s = solver(RationalBC::Dirichlet, RationalBC::Dirichlet);
        let data = s.spectral_data(20).unwrap();
        for n in 0..20 {
            let m = (n + 1) as f64;
            assert!((data.eigenvalues[n] - m * m).abs() < 1e-10 * m * m);
            assert!((data.norming_constants[n] - PI / (2.0 * m * m)).abs() < 1e-9);
        }
        assert!((s.beta(1.0).unwrap() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn neumann_neumann_closed_form() {
        let s = solver(RationalBC::constant(0.0), RationalBC::constant(0.0));
        let data = s.spectral_data(10).unwrap();
        assert!(data.eigenvalues[0].abs() < 1e-12);
        assert!((data.norming_constants[0] - PI).abs() < 1e-10);
        for n in 1..10 {
            assert!((data.eigenvalues[n] - (n * n) as f64).abs() < 1e-10 * (n * n) as f64);
            assert!((data.norming_constants[n] - PI / 2.0).abs() < 1e-9);
        }
    }

    #[test]
    fn counting_function_is_monotone_in_sign() {
        let p = Problem::new(
            Potential::fourier(vec![0.4, -0.3], vec![0.2]).unwrap(),
            RationalBC::with_poles(0.5, 0.1, &[(2.0, 0.7)]).unwrap(),
            RationalBC::with_poles(0.0, -0.3, &[(5.0, 1.0)]).unwrap(),
        );
        let s = Solver::new(&p, SolverConfig::default());
        let eigs = s.eigenvalues(8).unwrap();
        for (n, &l) in eigs.iter().enumerate() {
            assert!(s.counting(l - 1e-6) < n as f64 * PI);
            assert!(s.counting(l + 1e-6) > n as f64 * PI);
            let chi = s.char_function_checked(l).unwrap();
            let scale = s.char_function(l + 0.5).abs() + s.char_function(l - 0.5).abs();
            assert!(chi.abs() < 1e-9 * scale);
        }
    }

    #[test]
    fn beta_rejects_non_eigenvalue() {
        let s = solver(RationalBC::Dirichlet, RationalBC::Dirichlet);
        assert!(matches!(s.beta(2.0), Err(Error::Domain(_))));
    }

    #[test]
    fn oscillation_of_sines() {
        let s = solver(RationalBC::Dirichlet, RationalBC::Dirichlet);
        for n in 0..6 {
            let m = (n + 1) as f64;
            assert_eq!(s.oscillation_count(m * m).unwrap(), n);
        }
    }

    #[test]
    fn count_cap_is_enforced() {
        let s = solver(RationalBC::Dirichlet, RationalBC::Dirichlet);
        assert!(s.eigenvalues(65).unwrap_err().is_validation());
    }

    #[test]
    fn hadamard_of_half_integer_squares_is_minus_cosine() {
        let eigs: Vec<f64> = (0..40).map(|n| (n as f64 + 0.5).powi(2)).collect();
        for &l in &[-5.0, -1.0, 0.0, 3.3, 20.0, 50.0] {
            let v = hadamard_product(&eigs, -0.5, l, 10_000);
            let exact = if l >= 0.0 {
                -(PI * f64::sqrt(l)).cos()
            } else {
                -(PI * f64::sqrt(-l)).cosh()
            };
            assert!((v - exact).abs() < 1e-9 * (1.0 + exact.abs()), "{l}: {v} vs {exact}");
        }
        assert_eq!(hadamard_product(&eigs, -0.5, eigs[3], 10_000), 0.0);
    }

    #[test]
    fn hadamard_calibration_for_integer_squares() {
        let eigs: Vec<f64> = (0..30).map(|n| ((n + 1) as f64).powi(2)).collect();
        let c = hadamard_calibration(&eigs, -1.0);
        assert!((c.constant - PI).abs() < 1e-6 && c.spread < 1e-6, "{c:?}");
        let eigs: Vec<f64> = (0..30).map(|n| (n as f64).powi(2)).collect();
        let c = hadamard_calibration(&eigs, 0.0);
        assert!((c.constant - 1.0).abs() < 1e-6, "{c:?}");
    }

    #[test]
    fn hadamard_derivative_at_eigenvalue_matches_stencil() {
        let eigs: Vec<f64> = (0..30).map(|n| ((n + 1) as f64).powi(2)).collect();
        for j in [0, 3, 7] {
            let a = hadamard_derivative_at(&eigs, -1.0, j, 10_000);
            let b = hadamard_derivative(&eigs, -1.0, eigs[j], 10_000);
            assert!((a - b).abs() < 1e-7 * a.abs(), "{a} {b}");
        }
    }
}
