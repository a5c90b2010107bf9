//! Reconstruction from spectral data, from two spectra and from one symmetric spectrum.

use crate::error::{Error, Result};
use crate::hn_algebra::{RationalBC, RealPolynomial};
use crate::numeric::{brent, hurwitz_zeta, least_squares, par_map};
use crate::potential::Potential;
use crate::spectrum::{
    hadamard_calibration, hadamard_derivative_at, hadamard_product, Problem, Solver, SolverConfig, SpectralData,
    TailModel,
};
use crate::transforms::{t_tilde_branch, TildeBranch};
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Modeled terms appended to products built from finite spectra.
pub const PRODUCT_TAIL: usize = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InverseConfig {
    /// Cosine coefficients of the base-case potential.
    pub n_cos: usize,
    /// Upper limit when the fit widens the cosine basis to meet the tolerances.
    pub max_cos: usize,
    /// Adds `(x - π/2)^j`, `j = 1..=poly_degree`, to the base-case basis; these absorb the
    /// odd-derivative jumps that cosines alone resolve slowly.
    pub poly_degree: usize,
    /// Max `|Δλ|/max(1, |λ|)` accepted from the base-case fit.
    pub tol_eig: f64,
    /// Max `|γ_model/γ_data - 1|` accepted from the base-case fit.
    pub tol_gamma: f64,
    pub max_iter: usize,
    pub solver: SolverConfig,
}

impl Default for InverseConfig {
    fn default() -> Self {
        InverseConfig {
            n_cos: 12,
            max_cos: 24,
            poly_degree: 4,
            tol_eig: 1e-6,
            tol_gamma: 1e-5,
            max_iter: 60,
            solver: SolverConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub n_cos: usize,
    pub iterations: usize,
    pub evaluations: usize,
    pub cost: f64,
    pub max_eig_error: f64,
    pub max_gamma_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Reconstruction {
    pub problem: Problem,
    pub base_fit: FitReport,
    /// `(M, N)` after each lowering step, starting with the input indices.
    pub index_chain: Vec<(i32, i32)>,
}

fn solver_for(p: &Problem, cfg: &SolverConfig, count: usize) -> Solver {
    Solver::new(
        p,
        SolverConfig {
            max_count: cfg.max_count.max(count),
            ..*cfg
        },
    )
}

// ---------------------------------------------------------------------------------------------
// Moments and f↓ recovery

/// Moments `s_k = Σ λ_n^k / γ_n`, `k = 0..2d-1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentTable {
    pub s: Vec<f64>,
    /// Part of each `s_k` coming from extrapolated terms and the closed-form remainder.
    pub tail: Vec<f64>,
    pub computed_terms: usize,
    pub total_terms: usize,
}

impl MomentTable {
    /// Sums the supplied terms, extrapolates `λ_n^k/γ_n ≈ Σ_j a_j (n-L)^{-(q+j)}` with
    /// `q = 2M - 2k` up to `total_terms`, and adds the Hurwitz-zeta remainder.
    pub fn build(data: &SpectralData, d: usize, total_terms: usize) -> Result<MomentTable> {
        data.validate()?;
        if d == 0 {
            return Err(Error::validation("d", "must be >= 1"));
        }
        let m_ind = data.ind_f;
        let l = 0.5 * (data.ind_f + data.ind_big_f) as f64;
        let kmax = 2 * d as i32 - 1;
        if 2 * m_ind - 2 * kmax < 2 {
            return Err(Error::validation(
                "d",
                format!("moments up to order {kmax} diverge for ind f = {m_ind}"),
            ));
        }
        let n = data.len();
        let fit_idx: Vec<usize> = ((2 * n) / 3..n).filter(|&i| i as f64 - l >= 10.0).collect();
        if fit_idx.len() < 8 {
            return Err(Error::validation(
                "data",
                format!("{n} pairs leave too few asymptotic terms for the moment tail"),
            ));
        }
        let order: usize = 5;
        let mut s = Vec::with_capacity(2 * d);
        let mut tail = Vec::with_capacity(2 * d);
        for k in 0..=kmax {
            let q = 2 * m_ind - 2 * k;
            let term = |i: usize| data.eigenvalues[i].powi(k) / data.norming_constants[i];
            let head: f64 = (0..n).map(term).sum();
            let rows: Vec<Vec<f64>> = fit_idx
                .iter()
                .map(|&i| {
                    let m = i as f64 - l;
                    (0..order).map(|j| m.powi(-(j as i32))).collect()
                })
                .collect();
            let rhs: Vec<f64> = fit_idx.iter().map(|&i| term(i) * (i as f64 - l).powi(q)).collect();
            let a = least_squares(&rows, &rhs)?;
            let model = |m: f64| (0..order).map(|j: usize| a[j] * m.powi(-q - j as i32)).sum::<f64>();
            let mut extra: f64 = (n..total_terms.max(n)).map(|i| model(i as f64 - l)).sum();
            let z = total_terms.max(n) as f64 - l;
            extra += (0..order)
                .map(|j: usize| a[j] * hurwitz_zeta(q + j as i32, z))
                .sum::<f64>();
            s.push(head + extra);
            tail.push(extra);
        }
        let smallest = s.iter().fold(f64::INFINITY, |m, v| m.min(v.abs()));
        let worst = tail.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if worst > 0.1 * smallest {
            return Err(Error::Conditioning(format!(
                "moment tail {worst:e} exceeds 10% of the smallest moment {smallest:e}"
            )));
        }
        Ok(MomentTable {
            s,
            tail,
            computed_terms: n,
            total_terms: total_terms.max(n),
        })
    }

    pub fn hankel(&self) -> DMatrix<f64> {
        let d = self.s.len() / 2;
        DMatrix::from_fn(d, d, |i, j| self.s[i + j])
    }
}

/// Monic `f↓` of degree `d` from the zero-sum identities, using 2000 summed terms.
pub fn recover_f_down(data: &SpectralData, d: usize) -> Result<RealPolynomial> {
    recover_f_down_from(&MomentTable::build(data, d, 2000)?)
}

pub fn recover_f_down_from(table: &MomentTable) -> Result<RealPolynomial> {
    let d = table.s.len() / 2;
    let h = table.hankel();
    if h.clone().cholesky().is_none() {
        return Err(Error::Conditioning("Hankel matrix is not positive definite".into()));
    }
    let sv = h.singular_values();
    let cond = sv.max() / sv.min();
    if !(cond <= 1e12) {
        return Err(Error::Conditioning(format!("Hankel condition number {cond:e}")));
    }
    let rhs = DVector::from_fn(d, |k, _| -table.s[k + d]);
    let a = h
        .lu()
        .solve(&rhs)
        .ok_or_else(|| Error::Conditioning("singular Hankel matrix".into()))?;
    let mut coeffs: Vec<f64> = a.iter().copied().collect();
    coeffs.push(1.0);
    Ok(RealPolynomial::new(coeffs))
}

// ---------------------------------------------------------------------------------------------
// Index detection

/// `(M, N)` from the growth of `√λ_n` and `γ_n`.
pub fn detect_indices(data: &SpectralData) -> Result<(i32, i32)> {
    data.validate()?;
    let n = data.len();
    if n < 15 {
        return Err(Error::validation("data", format!("need at least 15 pairs, got {n}")));
    }
    let idx: Vec<usize> = (n / 2..n).collect();
    let rows: Vec<Vec<f64>> = idx.iter().map(|&i| vec![1.0, 1.0 / (i as f64 + 1.0)]).collect();
    let rhs: Vec<f64> = idx.iter().map(|&i| data.eigenvalues[i].sqrt() - i as f64).collect();
    let c = least_squares(&rows, &rhs)?;
    let two_l = -2.0 * c[0];
    let sum = two_l.round();
    if (two_l - sum).abs() > 0.2 {
        return Err(Error::Detection(format!(
            "√λ_n - n tends to {}, not a half-integer",
            c[0]
        )));
    }
    let l = 0.5 * sum;
    let pts: Vec<usize> = idx.into_iter().filter(|&i| i as f64 - l >= 2.0).collect();
    let rows: Vec<Vec<f64>> = pts
        .iter()
        .map(|&i| {
            let m = i as f64 - l;
            vec![1.0, m.ln(), 1.0 / m]
        })
        .collect();
    let rhs: Vec<f64> = pts.iter().map(|&i| data.norming_constants[i].ln()).collect();
    let g = least_squares(&rows, &rhs)?;
    let half = 0.5 * g[1];
    let m = half.round();
    if (half - m).abs() > 0.25 {
        return Err(Error::Detection(format!(
            "γ_n grows like n^{} (not an even power)",
            g[1]
        )));
    }
    let (m, nn) = (m as i32, sum as i32 - m as i32);
    if m < -1 || nn < -1 {
        return Err(Error::Detection(format!("detected indices ({m}, {nn}) below -1")));
    }
    Ok((m, nn))
}

// ---------------------------------------------------------------------------------------------
// Base case: constant or Dirichlet conditions

struct BaseModel<'a> {
    data: &'a SpectralData,
    cfg: &'a InverseConfig,
    n_cos: usize,
    basis: Vec<Vec<f64>>,
    has_h: bool,
    has_big_h: bool,
}

impl<'a> BaseModel<'a> {
    fn new(data: &'a SpectralData, cfg: &'a InverseConfig, n_cos: usize) -> Self {
        let cells = cfg.solver.cells;
        let xs: Vec<f64> = (0..=cells).map(|i| PI * i as f64 / cells as f64).collect();
        let mut basis: Vec<Vec<f64>> = (0..n_cos)
            .map(|k| xs.iter().map(|x| ((k + 1) as f64 * x).cos()).collect())
            .collect();
        for j in 1..=cfg.poly_degree {
            basis.push(xs.iter().map(|x| (x - 0.5 * PI).powi(j as i32)).collect());
        }
        BaseModel {
            data,
            cfg,
            n_cos,
            basis,
            has_h: data.ind_f == 0,
            has_big_h: data.ind_big_f == 0,
        }
    }

    fn n_params(&self) -> usize {
        self.basis.len() + self.has_h as usize + self.has_big_h as usize
    }

    /// Parameters of a smaller model embedded in this one, new cosines set to zero.
    fn embed(&self, theta: &[f64], from_cos: usize) -> Vec<f64> {
        let mut out = vec![0.0; self.n_params()];
        out[..from_cos].copy_from_slice(&theta[..from_cos]);
        let rest = &theta[from_cos..];
        out[self.n_cos..].copy_from_slice(rest);
        out
    }

    fn problem(&self, theta: &[f64]) -> Result<Problem> {
        let nb = self.basis.len();
        let s = if self.cfg.poly_degree > 0 {
            let cells = self.cfg.solver.cells;
            let values: Vec<f64> = (0..=cells)
                .map(|i| (0..nb).map(|j| theta[j] * self.basis[j][i]).sum())
                .collect();
            Potential::grid(values)?
        } else {
            Potential::fourier(theta[..nb].to_vec(), vec![])?
        };
        let mut at = nb;
        let f = if self.has_h {
            at += 1;
            RationalBC::constant(theta[at - 1])
        } else {
            RationalBC::Dirichlet
        };
        let big_f = if self.has_big_h {
            RationalBC::constant(theta[at])
        } else {
            RationalBC::Dirichlet
        };
        Ok(Problem::new(s, f, big_f))
    }

    fn forward(&self, theta: &[f64], hints: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
        let p = self.problem(theta)?;
        let solver = solver_for(&p, &self.cfg.solver, hints.len());
        let data = solver.spectral_data_from_eigenvalues(solver.eigenvalues_near(hints)?)?;
        Ok((data.eigenvalues, data.norming_constants))
    }

    fn residuals(&self, eigs: &[f64], gammas: &[f64]) -> DVector<f64> {
        let n = self.data.len();
        DVector::from_fn(2 * n, |i, _| {
            if i < n {
                (eigs[i] - self.data.eigenvalues[i]) / self.data.eigenvalues[i].abs().sqrt().max(1.0)
            } else {
                (gammas[i - n] / self.data.norming_constants[i - n]).ln()
            }
        })
    }

    fn errors(&self, eigs: &[f64], gammas: &[f64]) -> (f64, f64) {
        let mut e = 0.0f64;
        let mut g = 0.0f64;
        for i in 0..self.data.len() {
            let l = self.data.eigenvalues[i];
            e = e.max((eigs[i] - l).abs() / l.abs().max(1.0));
            g = g.max((gammas[i] / self.data.norming_constants[i] - 1.0).abs());
        }
        (e, g)
    }

    /// Levenberg–Marquardt from `theta` with forward-difference sensitivities.
    fn fit(&self, mut theta: Vec<f64>) -> Result<(Vec<f64>, FitReport)> {
        let np = self.n_params();
        let cfg = self.cfg;
        let mut evals = 0usize;
        let (mut eigs, mut gammas) = self.forward(&theta, &self.data.eigenvalues)?;
        evals += 1;
        let mut r = self.residuals(&eigs, &gammas);
        let mut cost = r.norm_squared();
        let mut mu = 1e-3;
        let mut iterations = 0;
        let step = 1e-6;
        for it in 0..cfg.max_iter {
            iterations = it + 1;
            let (ee, ge) = self.errors(&eigs, &gammas);
            if ee <= 1e-3 * cfg.tol_eig && ge <= 1e-3 * cfg.tol_gamma {
                break;
            }
            let columns = par_map(np, |j| {
                let mut t = theta.clone();
                t[j] += step;
                self.forward(&t, &eigs)
                    .map(|(e2, g2)| (self.residuals(&e2, &g2) - &r) / step)
            });
            evals += np;
            let mut jac = DMatrix::<f64>::zeros(r.len(), np);
            for (j, col) in columns.into_iter().enumerate() {
                jac.set_column(j, &col?);
            }
            let a = jac.transpose() * &jac;
            let g = jac.transpose() * &r;
            let dmax = a.diagonal().max();
            let mut accepted = false;
            let mut reduction = 0.0;
            for _ in 0..12 {
                let mut lhs = a.clone();
                for k in 0..np {
                    lhs[(k, k)] += mu * a[(k, k)].max(1e-12 * dmax);
                }
                let delta = match lhs.cholesky() {
                    Some(ch) => ch.solve(&(-&g)),
                    None => {
                        mu *= 10.0;
                        continue;
                    }
                };
                let trial: Vec<f64> = theta.iter().zip(delta.iter()).map(|(a, b)| a + b).collect();
                evals += 1;
                if let Ok((e2, g2)) = self.forward(&trial, &eigs) {
                    let r2 = self.residuals(&e2, &g2);
                    let c2 = r2.norm_squared();
                    if c2 < cost {
                        reduction = (cost - c2) / cost;
                        theta = trial;
                        eigs = e2;
                        gammas = g2;
                        r = r2;
                        cost = c2;
                        mu = (mu / 3.0).max(1e-12);
                        accepted = true;
                        break;
                    }
                }
                mu *= 4.0;
            }
            if !accepted || reduction < 1e-12 {
                break;
            }
        }
        let (max_eig_error, max_gamma_error) = self.errors(&eigs, &gammas);
        Ok((
            theta,
            FitReport {
                n_cos: self.n_cos,
                iterations,
                evaluations: evals,
                cost,
                max_eig_error,
                max_gamma_error,
            },
        ))
    }
}

/// Fits a problem with constant or Dirichlet conditions to the data by damped least squares.
pub fn inverse_constant_bc(data: &SpectralData) -> Result<Problem> {
    inverse_constant_bc_with(data, &InverseConfig::default()).map(|r| r.problem)
}

/// Starts with `cfg.n_cos` cosines and adds four at a time, warm-started, until the fit
/// meets the tolerances or `cfg.max_cos` is reached.
pub fn inverse_constant_bc_with(data: &SpectralData, cfg: &InverseConfig) -> Result<Reconstruction> {
    data.validate()?;
    let (m, n) = (data.ind_f, data.ind_big_f);
    if !(-1..=0).contains(&m) || !(-1..=0).contains(&n) {
        return Err(Error::validation(
            "ind_f",
            format!("base case needs indices in {{-1, 0}}, got ({m}, {n})"),
        ));
    }
    let mut model = BaseModel::new(data, cfg, cfg.n_cos);
    if 2 * data.len() < model.n_params() {
        return Err(Error::validation(
            "data",
            format!("{} pairs cannot determine {} parameters", data.len(), model.n_params()),
        ));
    }
    let l = 0.5 * (m + n) as f64;
    let omega = TailModel::fit(&data.eigenvalues, l).omega;
    let mut theta = vec![0.0; model.n_params()];
    let nb = model.basis.len();
    match (model.has_h, model.has_big_h) {
        (true, true) => {
            theta[nb] = -0.25 * PI * omega;
            theta[nb + 1] = -0.25 * PI * omega;
        }
        (true, false) | (false, true) => theta[nb] = -0.5 * PI * omega,
        (false, false) => {}
    }
    loop {
        let (fitted, report) = model.fit(theta)?;
        let ok = report.max_eig_error <= cfg.tol_eig && report.max_gamma_error <= cfg.tol_gamma;
        let next = model.n_cos + 4;
        let room = 2 * data.len() >= model.n_params() + 4;
        if ok || next > cfg.max_cos || !room {
            if !ok {
                return Err(Error::Reconstruction(format!(
                    "base fit with {} cosines stopped after {} iterations with eigenvalue error {:e} \
                     (tolerance {:e}) and norming-constant error {:e} (tolerance {:e})",
                    report.n_cos,
                    report.iterations,
                    report.max_eig_error,
                    cfg.tol_eig,
                    report.max_gamma_error,
                    cfg.tol_gamma
                )));
            }
            return Ok(Reconstruction {
                problem: model.problem(&fitted)?,
                base_fit: report,
                index_chain: vec![(m, n)],
            });
        }
        let bigger = BaseModel::new(data, cfg, next);
        theta = bigger.embed(&fitted, model.n_cos);
        model = bigger;
    }
}

// ---------------------------------------------------------------------------------------------
// General spectral data

struct DataStep {
    mu: f64,
    nu: f64,
    i: i32,
    j: i32,
}

fn lower_data(data: &SpectralData) -> Result<(SpectralData, DataStep)> {
    let (m, n) = (data.ind_f, data.ind_big_f);
    let i = if m >= 0 { 1 } else { -1 };
    let j = if m >= 0 && n >= 0 { 1 } else { 0 };
    let (l0, g0) = (data.eigenvalues[0], data.norming_constants[0]);
    let cap = if j == 1 { l0 } else { l0 - 2.0 };
    let skip = j as usize;
    if data.len() <= skip + 1 {
        return Err(Error::validation("data", "too few pairs for the lowering chain"));
    }
    let next = |ind: i32| if ind >= 0 { ind - 1 } else { 0 };
    let eigenvalues = data.eigenvalues[skip..].to_vec();
    let norming_constants = eigenvalues
        .iter()
        .zip(&data.norming_constants[skip..])
        .map(|(&l, &g)| g / (l - cap).powi(i))
        .collect();
    Ok((
        SpectralData {
            ind_f: next(m),
            ind_big_f: next(n),
            eigenvalues,
            norming_constants,
        },
        DataStep { mu: l0, nu: g0, i, j },
    ))
}

/// Reconstructs `𝒫(s, f, F)` with `ind f = data.ind_f`, `ind F = data.ind_big_f`.
pub fn inverse_spectral_data(data: &SpectralData) -> Result<Problem> {
    inverse_spectral_data_with(data, &InverseConfig::default()).map(|r| r.problem)
}

pub fn inverse_spectral_data_with(data: &SpectralData, cfg: &InverseConfig) -> Result<Reconstruction> {
    data.validate()?;
    if data.len() >= 15 {
        let detected = detect_indices(data)?;
        if detected != (data.ind_f, data.ind_big_f) {
            return Err(Error::validation(
                "ind_f",
                format!(
                    "asymptotics indicate indices {detected:?}, data declares ({}, {})",
                    data.ind_f, data.ind_big_f
                ),
            ));
        }
    }
    let k = data.ind_f.max(data.ind_big_f).max(0);
    let mut current = data.clone();
    let mut steps = Vec::new();
    let mut index_chain = vec![(data.ind_f, data.ind_big_f)];
    for _ in 0..k {
        let (next, step) = lower_data(&current)?;
        steps.push(step);
        current = next;
        index_chain.push((current.ind_f, current.ind_big_f));
    }
    if current.ind_f > 0 || current.ind_big_f > 0 {
        return Err(Error::Consistency(format!(
            "lowering chain ended at indices ({}, {})",
            current.ind_f, current.ind_big_f
        )));
    }
    let base = inverse_constant_bc_with(&current, cfg)?;
    let mut p = base.problem;
    for step in steps.iter().rev() {
        let solver = solver_for(&p, &cfg.solver, 1);
        let branch = match (step.j, step.i) {
            (1, _) => TildeBranch::Below,
            (_, -1) => TildeBranch::ConstantF,
            _ => TildeBranch::ConstantBigF,
        };
        p = t_tilde_branch(step.mu, step.nu, &solver, branch)?.0;
    }
    Ok(Reconstruction {
        problem: p,
        base_fit: base.base_fit,
        index_chain,
    })
}

// ---------------------------------------------------------------------------------------------
// Two spectra

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TwoSpectraInput {
    pub lambdas: Vec<f64>,
    pub mus: Vec<f64>,
    #[serde(rename = "L")]
    pub l: f64,
    pub nu: f64,
    pub r: u8,
    #[serde(default)]
    pub pole_indices: Vec<usize>,
}

fn strictly_increasing(v: &[f64], name: &str) -> Result<()> {
    if let Some(i) = v.iter().position(|x| !x.is_finite()) {
        return Err(Error::validation(format!("{name}[{i}]"), "must be finite"));
    }
    if let Some(i) = (1..v.len()).find(|&i| !(v[i] > v[i - 1])) {
        return Err(Error::validation(format!("{name}[{i}]"), "must be strictly increasing"));
    }
    Ok(())
}

impl TwoSpectraInput {
    /// `true` when `μ_0 < λ_0`.
    pub fn mu_leads(&self) -> bool {
        self.mus[0] < self.lambdas[0]
    }

    pub fn validate(&self) -> Result<()> {
        strictly_increasing(&self.lambdas, "lambdas")?;
        strictly_increasing(&self.mus, "mus")?;
        if self.lambdas.len() < 15 || self.mus.len() < 15 {
            return Err(Error::validation("lambdas", "need at least 15 values in each spectrum"));
        }
        let two_l = 2.0 * self.l;
        if (two_l - two_l.round()).abs() > 1e-12 || self.l < -0.5 {
            return Err(Error::validation(
                "L",
                format!("must be a half-integer >= -1/2, got {}", self.l),
            ));
        }
        if !(self.nu != 0.0 && self.nu.is_finite()) {
            return Err(Error::validation("nu", "must be finite and nonzero"));
        }
        if self.r > 1 {
            return Err(Error::validation("r", "must be 0 or 1"));
        }
        if self.l == -0.5 && self.r == 1 {
            return Err(Error::validation("r", "L = -1/2 with r = 1 is excluded"));
        }
        if let Some(i) = (1..self.pole_indices.len()).find(|&i| self.pole_indices[i] <= self.pole_indices[i - 1]) {
            return Err(Error::validation(
                format!("pole_indices[{i}]"),
                "must be strictly increasing",
            ));
        }
        let d = self.pole_indices.len() as f64;
        let cap = self.l + 0.5 * (1.0 - self.r as f64);
        if d > cap + 1e-12 {
            return Err(Error::validation(
                "pole_indices",
                format!("d = {d} exceeds L + (1 - r)/2 = {cap}"),
            ));
        }
        let n = self.lambdas.len().min(self.mus.len());
        let (first, second) = if self.mu_leads() {
            (&self.mus, &self.lambdas)
        } else {
            (&self.lambdas, &self.mus)
        };
        for i in 0..n {
            let ok = first[i] < second[i] && (i + 1 >= first.len() || second[i] < first[i + 1]);
            if !ok {
                return Err(Error::validation(format!("mus[{i}]"), "spectra do not interlace"));
            }
        }
        if self.mu_leads() != (self.nu > 0.0) {
            return Err(Error::validation(
                "nu",
                "sign of nu disagrees with which spectrum comes first",
            ));
        }
        Ok(())
    }

    pub fn ind_f(&self) -> i32 {
        2 * self.pole_indices.len() as i32 + self.r as i32
    }

    pub fn ind_big_f(&self) -> i32 {
        (2.0 * self.l).round() as i32 - self.ind_f()
    }
}

/// `(ν, r)` from `(√λ_n - √μ_n)(n - L)^{2r+1} → ν`, using `r = 1` when the `r = 0` limit vanishes.
pub fn estimate_nu_r(lambdas: &[f64], mus: &[f64], l: f64) -> Result<(f64, u8)> {
    let n = lambdas.len().min(mus.len());
    let idx: Vec<usize> = (n / 2..n).filter(|&i| i as f64 - l >= 3.0).collect();
    if idx.len() < 5 {
        return Err(Error::validation("lambdas", "too few values to estimate ν"));
    }
    let root = |x: f64| x.signum() * x.abs().sqrt();
    let fit = |r: i32| -> Result<(f64, f64)> {
        let rows: Vec<Vec<f64>> = idx
            .iter()
            .map(|&i| {
                let m = i as f64 - l;
                vec![1.0, m.powi(-2), m.powi(-4)]
            })
            .collect();
        let q: Vec<f64> = idx
            .iter()
            .map(|&i| (root(lambdas[i]) - root(mus[i])) * (i as f64 - l).powi(2 * r + 1))
            .collect();
        let c = least_squares(&rows, &q)?;
        Ok((c[0], q.last().copied().unwrap_or(0.0)))
    };
    let (nu0, last0) = fit(0)?;
    if nu0.abs() > 0.1 * last0.abs() {
        return Ok((nu0, 0));
    }
    let (nu1, _) = fit(1)?;
    Ok((nu1, 1))
}

/// Zeros of `χ - ξ` bracketed between consecutive points of both spectra.
pub fn chi_minus_xi_zeros(lambdas: &[f64], mus: &[f64], l: f64) -> Result<Vec<f64>> {
    let g = |x: f64| hadamard_product(lambdas, l, x, PRODUCT_TAIL) - hadamard_product(mus, l, x, PRODUCT_TAIL);
    let mut pts: Vec<f64> = lambdas.iter().chain(mus).copied().collect();
    pts.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let last = lambdas.last().unwrap().min(*mus.last().unwrap());
    let mut grid = vec![pts[0] - 10.0];
    for w in pts.windows(2) {
        if w[1] > last {
            break;
        }
        grid.push(w[0]);
        grid.push(0.5 * (w[0] + w[1]));
    }
    grid.push(last);
    grid.dedup();
    let mut zeros = Vec::new();
    let vals: Vec<f64> = grid.iter().map(|&x| g(x)).collect();
    for k in 0..grid.len() - 1 {
        let (a, b, fa, fb) = (grid[k], grid[k + 1], vals[k], vals[k + 1]);
        if fa == 0.0 {
            zeros.push(a);
        } else if fa.signum() != fb.signum() && fb != 0.0 {
            let mut gg = |x: f64| g(x);
            zeros.push(brent(&mut gg, a, b, fa, fb, 1e-13 * b.abs().max(1.0), 200)?);
        }
    }
    zeros.dedup_by(|a, b| (*a - *b).abs() < 1e-12);
    Ok(zeros)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TwoSpectraResult {
    pub problem: Problem,
    pub alpha: f64,
    /// Zeros of `χ - ξ` used as poles of `f`.
    pub poles: Vec<f64>,
    pub data: SpectralData,
    pub base_fit: FitReport,
}

/// `𝒫(s, f, F)` with spectrum `λ` and `α` such that `𝒫(s, f + α, F)` has spectrum `μ`.
pub fn two_spectra_inverse(inp: &TwoSpectraInput) -> Result<(Problem, f64)> {
    two_spectra_inverse_with(inp, &InverseConfig::default()).map(|r| (r.problem, r.alpha))
}

pub fn two_spectra_inverse_with(inp: &TwoSpectraInput, cfg: &InverseConfig) -> Result<TwoSpectraResult> {
    inp.validate()?;
    let l = inp.l;
    let poles = if inp.pole_indices.is_empty() {
        Vec::new()
    } else {
        let zeros = chi_minus_xi_zeros(&inp.lambdas, &inp.mus, l)?;
        inp.pole_indices
            .iter()
            .map(|&i| {
                zeros.get(i).copied().ok_or_else(|| {
                    Error::validation("pole_indices", format!("only {} zeros of χ - ξ located", zeros.len()))
                })
            })
            .collect::<Result<Vec<_>>>()?
    };
    let p = |x: f64| poles.iter().map(|t| t - x).product::<f64>();
    let gammas = (0..inp.lambdas.len())
        .map(|n| {
            let lam = inp.lambdas[n];
            let dchi = hadamard_derivative_at(&inp.lambdas, l, n, PRODUCT_TAIL);
            let xi = hadamard_product(&inp.mus, l, lam, PRODUCT_TAIL);
            let g = PI * inp.nu * p(lam).powi(2) * dchi / xi;
            if g > 0.0 && g.is_finite() {
                Ok(g)
            } else {
                Err(Error::Consistency(format!("norming constant {g} at λ_{n} = {lam}")))
            }
        })
        .collect::<Result<Vec<_>>>()?;
    let data = SpectralData {
        ind_f: inp.ind_f(),
        ind_big_f: inp.ind_big_f(),
        eigenvalues: inp.lambdas.clone(),
        norming_constants: gammas,
    };
    if data.ind_big_f < -1 {
        return Err(Error::validation(
            "pole_indices",
            format!("ind F = {} would be below -1", data.ind_big_f),
        ));
    }
    let rec = inverse_spectral_data_with(&data, cfg)?;
    let h0p = match &rec.problem.f {
        RationalBC::Rational { h0, .. } if *h0 > 0.0 => 1.0 / h0,
        _ => 1.0,
    };
    let alpha = PI * inp.nu / (h0p * h0p);
    Ok(TwoSpectraResult {
        problem: rec.problem,
        alpha,
        poles,
        data,
        base_fit: rec.base_fit,
    })
}

/// Max relative deviation of the first `count` eigenvalues of `p` and of `p` with `f + α`
/// from the two input spectra.
pub fn two_spectra_residuals(
    p: &Problem,
    alpha: f64,
    lambdas: &[f64],
    mus: &[f64],
    count: usize,
    cfg: &SolverConfig,
) -> Result<(f64, f64)> {
    let q = Problem::new(p.s.clone(), p.f.shift(alpha), p.big_f.clone());
    let err = |pr: &Problem, target: &[f64]| -> Result<f64> {
        let n = count.min(target.len());
        let eigs = solver_for(pr, cfg, n).eigenvalues(n)?;
        Ok(eigs
            .iter()
            .zip(target)
            .fold(0.0f64, |m, (a, b)| m.max((a - b).abs() / b.abs().max(1.0))))
    };
    Ok((err(p, lambdas)?, err(&q, mus)?))
}

// ---------------------------------------------------------------------------------------------
// Diagnostics for a problem and its shift by α

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TwoProblemReport {
    pub interlacing: bool,
    pub mu_leads: bool,
    /// Max of `|ξ - χ - α f↓ ψ(0, ·)| / max(1, |χ|, |ξ|)` over the λ grid.
    pub identity_residual: f64,
    /// Max relative error of `γ_n` against `α f↓² χ'/ξ` at `λ_n`.
    pub gamma_relative_error: f64,
    pub herglotz_samples: usize,
    pub herglotz_positive: usize,
    /// `(√λ_n - √μ_n)(n - L)^{2r+1}` at `n = asymptotic_index`.
    pub asymptotic_index: usize,
    pub asymptotic_value: f64,
    pub asymptotic_target: f64,
    pub asymptotic_relative_error: f64,
}

fn central_derivative(f: &dyn Fn(f64) -> f64, x: f64) -> f64 {
    let h = 1e-3 * x.abs().max(1.0).sqrt();
    (-f(x + 2.0 * h) + 8.0 * f(x + h) - 8.0 * f(x - h) + f(x - 2.0 * h)) / (12.0 * h)
}

pub fn two_problem_diagnostics(p: &Problem, alpha: f64, count: usize) -> Result<TwoProblemReport> {
    two_problem_diagnostics_with(p, alpha, count, &SolverConfig::default())
}

pub fn two_problem_diagnostics_with(
    p: &Problem,
    alpha: f64,
    count: usize,
    cfg: &SolverConfig,
) -> Result<TwoProblemReport> {
    if p.f.index() < 0 {
        return Err(Error::validation("f", "needs ind f >= 0"));
    }
    if !(alpha != 0.0 && alpha.is_finite()) {
        return Err(Error::validation("alpha", "must be finite and nonzero"));
    }
    if count < 2 {
        return Err(Error::validation("count", "must be at least 2"));
    }
    let q = Problem::new(p.s.clone(), p.f.shift(alpha), p.big_f.clone());
    let sp = solver_for(p, cfg, count);
    let sq = solver_for(&q, cfg, count);
    let lam = sp.eigenvalues(count)?;
    let mu = sq.eigenvalues(count)?;
    for (i, (a, b)) in lam.iter().zip(&mu).enumerate() {
        if (a - b).abs() <= 1e-12 * a.abs().max(1.0) {
            return Err(Error::Domain(format!("spectra intersect at index {i}: {a}")));
        }
    }
    let mu_leads = mu[0] < lam[0];
    let (first, second) = if mu_leads { (&mu, &lam) } else { (&lam, &mu) };
    let interlacing = (0..count).all(|i| first[i] < second[i] && (i + 1 == count || second[i] < first[i + 1]));

    let lo = lam[0].min(mu[0]) - 5.0;
    let hi = lam[count - 1];
    let identity_residual = (0..100)
        .map(|i| {
            let x = lo + (hi - lo) * i as f64 / 99.0;
            let chi = sp.char_function(x);
            let xi = sq.char_function(x);
            let (_, fd) = p.f.up_down_at(x);
            let (psi0, _) = sp.psi_at_zero(x);
            (xi - chi - alpha * fd * psi0).abs() / chi.abs().max(xi.abs()).max(1.0)
        })
        .fold(0.0f64, f64::max);

    let chi = |x: f64| sp.char_function(x);
    let mut gamma_relative_error = 0.0f64;
    for &l in &lam {
        let (g, _) = sp.norming_constant(l)?;
        let (_, fd) = p.f.up_down_at(l);
        let pred = alpha * fd * fd * central_derivative(&chi, l) / sq.char_function(l);
        gamma_relative_error = gamma_relative_error.max((pred / g - 1.0).abs());
    }

    // -ξ/χ increases between consecutive zeros of χ when α m is Herglotz.
    let m = |x: f64| -sq.char_function(x) / sp.char_function(x);
    let mut herglotz_samples = 0;
    let mut herglotz_positive = 0;
    let per_gap = 100usize.div_ceil(count - 1);
    'outer: for w in lam.windows(2) {
        for k in 1..=per_gap {
            if herglotz_samples == 100 {
                break 'outer;
            }
            let x = w[0] + (w[1] - w[0]) * k as f64 / (per_gap + 1) as f64;
            herglotz_samples += 1;
            if alpha.signum() * central_derivative(&m, x) > 0.0 {
                herglotz_positive += 1;
            }
        }
    }

    let l_half = 0.5 * (p.f.index() + p.big_f.index()) as f64;
    let r = p.f.index() % 2;
    let h0p = match &p.f {
        RationalBC::Rational { h0, .. } if *h0 > 0.0 => 1.0 / h0,
        _ => 1.0,
    };
    let asymptotic_target = alpha * h0p * h0p / PI;
    let asymptotic_index = 30.min(count - 1);
    let root = |x: f64| x.signum() * x.abs().sqrt();
    let n = asymptotic_index;
    let asymptotic_value = (root(lam[n]) - root(mu[n])) * (n as f64 - l_half).powi(2 * r + 1);
    Ok(TwoProblemReport {
        interlacing,
        mu_leads,
        identity_residual,
        gamma_relative_error,
        herglotz_samples,
        herglotz_positive,
        asymptotic_index,
        asymptotic_value,
        asymptotic_target,
        asymptotic_relative_error: (asymptotic_value / asymptotic_target - 1.0).abs(),
    })
}

// ---------------------------------------------------------------------------------------------
// Symmetric problems

/// Symmetric `𝒫(s, f, f)` from its spectrum alone, with `ind f = L`.
pub fn symmetric_inverse(lambdas: &[f64], l: i32) -> Result<Problem> {
    symmetric_inverse_with(lambdas, l, &InverseConfig::default()).map(|r| r.problem)
}

/// `γ_n = (-1)^n χ'(λ_n)` with `χ` the calibrated Hadamard product.
pub fn symmetric_norming_constants(lambdas: &[f64], l: i32) -> Result<Vec<f64>> {
    strictly_increasing(lambdas, "lambdas")?;
    if l < -1 {
        return Err(Error::validation("L", "must be >= -1"));
    }
    let lf = l as f64;
    let cal = hadamard_calibration(lambdas, lf);
    (0..lambdas.len())
        .map(|n| {
            let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
            let g = sign * cal.constant * hadamard_derivative_at(lambdas, lf, n, PRODUCT_TAIL);
            if g > 0.0 && g.is_finite() {
                Ok(g)
            } else {
                Err(Error::Consistency(format!("norming constant {g} at λ_{n}")))
            }
        })
        .collect()
}

pub fn symmetric_inverse_with(lambdas: &[f64], l: i32, cfg: &InverseConfig) -> Result<Reconstruction> {
    let gammas = symmetric_norming_constants(lambdas, l)?;
    let data = SpectralData {
        ind_f: l,
        ind_big_f: l,
        eigenvalues: lambdas.to_vec(),
        norming_constants: gammas,
    };
    let rec = inverse_spectral_data_with(&data, cfg)?;
    let defect = rec.problem.s.symmetry_defect();
    if defect > 1e-3 {
        return Err(Error::Reconstruction(format!(
            "reconstruction has symmetry defect {defect:e}"
        )));
    }
    Ok(rec)
}

// ---------------------------------------------------------------------------------------------
// Half-inverse evidence

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HalfInverseReport {
    pub count: usize,
    pub max_relative_gap: f64,
    pub left_distance: f64,
    pub right_distance: f64,
    pub f_distance: f64,
    pub big_f_distance: f64,
}

pub fn half_inverse_check(p1: &Problem, p2: &Problem, count: usize) -> Result<HalfInverseReport> {
    half_inverse_check_with(p1, p2, count, &SolverConfig::default())
}

pub fn half_inverse_check_with(
    p1: &Problem,
    p2: &Problem,
    count: usize,
    cfg: &SolverConfig,
) -> Result<HalfInverseReport> {
    let e1 = solver_for(p1, cfg, count).eigenvalues(count)?;
    let e2 = solver_for(p2, cfg, count).eigenvalues(count)?;
    let max_relative_gap = e1
        .iter()
        .zip(&e2)
        .fold(0.0f64, |m, (a, b)| m.max((a - b).abs() / a.abs().max(1.0)));
    Ok(HalfInverseReport {
        count,
        max_relative_gap,
        left_distance: p1.s.l2_distance_on(&p2.s, 0.0, 0.5 * PI),
        right_distance: p1.s.l2_distance_on(&p2.s, 0.5 * PI, PI),
        f_distance: p1.f.coefficient_distance(&p2.f),
        big_f_distance: p1.big_f.coefficient_distance(&p2.big_f),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectrum::spectral_data;

    fn closed_dd(count: usize) -> SpectralData {
        SpectralData {
            ind_f: -1,
            ind_big_f: -1,
            eigenvalues: (1..=count).map(|m| (m * m) as f64).collect(),
            norming_constants: (1..=count).map(|m| PI / (2.0 * (m * m) as f64)).collect(),
        }
    }

    #[test]
    fn detects_closed_form_indices() {
        assert_eq!(detect_indices(&closed_dd(20)).unwrap(), (-1, -1));
        let nn = SpectralData {
            ind_f: 0,
            ind_big_f: 0,
            eigenvalues: (0..20).map(|n| (n * n) as f64).collect(),
            norming_constants: (0..20).map(|n| if n == 0 { PI } else { 0.5 * PI }).collect(),
        };
        assert_eq!(detect_indices(&nn).unwrap(), (0, 0));
    }

    #[test]
    fn detects_pole_indices() {
        let p = Problem::new(
            Potential::zero(),
            RationalBC::with_poles(0.0, 0.3, &[(2.0, 1.0)]).unwrap(),
            RationalBC::constant(0.0),
        );
        assert_eq!(detect_indices(&spectral_data(&p, 30).unwrap()).unwrap(), (2, 0));
    }

    #[test]
    fn dirichlet_closed_form_fits_zero() {
        let rec = inverse_constant_bc_with(&closed_dd(12), &InverseConfig::default()).unwrap();
        assert!(rec.problem.s.l2_norm() < 1e-6);
        assert!(rec.problem.f.is_dirichlet() && rec.problem.big_f.is_dirichlet());
    }

    #[test]
    fn one_by_one_hankel_is_weighted_mean() {
        let table = MomentTable {
            s: vec![2.0, 5.0],
            tail: vec![0.0, 0.0],
            computed_terms: 0,
            total_terms: 0,
        };
        let p = recover_f_down_from(&table).unwrap();
        assert_eq!(p.real_roots(1e-9), vec![2.5]);
    }

    #[test]
    fn half_inverse_identical_is_zero() {
        let p = Problem::new(
            Potential::fourier(vec![0.2], vec![]).unwrap(),
            RationalBC::constant(0.0),
            RationalBC::Dirichlet,
        );
        let r = half_inverse_check(&p, &p, 10).unwrap();
        assert_eq!(r.max_relative_gap, 0.0);
        assert_eq!(
            r.left_distance + r.right_distance + r.f_distance + r.big_f_distance,
            0.0
        );
    }

    #[test]
    fn symmetric_norming_constants_closed_forms() {
        let dd: Vec<f64> = (1..=30).map(|m| (m * m) as f64).collect();
        for (n, g) in symmetric_norming_constants(&dd, -1).unwrap().iter().enumerate() {
            let m = (n + 1) as f64;
            assert!((g / (PI / (2.0 * m * m)) - 1.0).abs() < 1e-6, "n = {n}: {g}");
        }
        let nn: Vec<f64> = (0..30).map(|n| (n * n) as f64).collect();
        let g = symmetric_norming_constants(&nn, 0).unwrap();
        assert!((g[0] / PI - 1.0).abs() < 1e-6);
        assert!(g[1..].iter().all(|g| (g / (0.5 * PI) - 1.0).abs() < 1e-6));
    }

    #[test]
    fn diagnostics_of_neumann_dirichlet_pair() {
        let p = Problem::new(Potential::zero(), RationalBC::constant(0.0), RationalBC::Dirichlet);
        let r = two_problem_diagnostics(&p, 1.0, 40).unwrap();
        assert!(r.interlacing && r.mu_leads);
        assert!(r.identity_residual < 1e-7);
        assert!(r.gamma_relative_error < 1e-5);
        assert_eq!((r.herglotz_positive, r.herglotz_samples), (100, 100));
        assert!((r.asymptotic_target - 1.0 / PI).abs() < 1e-15);
        assert!(r.asymptotic_relative_error < 1e-3);
    }

    #[test]
    fn nu_of_unit_shift_is_one_over_pi() {
        let p = Problem::new(Potential::zero(), RationalBC::constant(0.0), RationalBC::Dirichlet);
        let q = Problem::new(Potential::zero(), RationalBC::constant(1.0), RationalBC::Dirichlet);
        let lam = spectral_data(&p, 40).unwrap().eigenvalues;
        let mu = spectral_data(&q, 40).unwrap().eigenvalues;
        let (nu, r) = estimate_nu_r(&lam, &mu, -0.5).unwrap();
        assert_eq!(r, 0);
        assert!((nu - 1.0 / PI).abs() < 1e-8);
        let zeros = chi_minus_xi_zeros(&lam, &mu, -0.5).unwrap();
        assert!(zeros.is_empty() || zeros[0] > lam[0]);
    }

    #[test]
    fn two_spectra_round_trip_with_potential() {
        let p = Problem::new(
            Potential::fourier(vec![0.15, 0.0, -0.1], vec![]).unwrap(),
            RationalBC::constant(0.2),
            RationalBC::Dirichlet,
        );
        let alpha = 0.8;
        let q = Problem::new(p.s.clone(), p.f.shift(alpha), p.big_f.clone());
        let cfg = SolverConfig {
            max_count: 40,
            ..SolverConfig::default()
        };
        let lambdas = Solver::new(&p, cfg).eigenvalues(40).unwrap();
        let mus = Solver::new(&q, cfg).eigenvalues(40).unwrap();
        let (nu, r) = estimate_nu_r(&lambdas, &mus, -0.5).unwrap();
        let inp = TwoSpectraInput {
            lambdas: lambdas.clone(),
            mus: mus.clone(),
            l: -0.5,
            nu,
            r,
            pole_indices: vec![],
        };
        let res = two_spectra_inverse_with(&inp, &InverseConfig::default()).unwrap();
        let (el, em) = two_spectra_residuals(&res.problem, res.alpha, &lambdas, &mus, 15, &cfg).unwrap();
        assert!(el.max(em) < 1e-6, "spectra residuals {el:e} {em:e}");
        assert!((res.alpha - alpha).abs() < 1e-4, "alpha {}", res.alpha);
        assert!(res.problem.s.l2_distance(&p.s) < 5e-3);
    }
}
