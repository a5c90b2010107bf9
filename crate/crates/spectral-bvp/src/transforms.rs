//! Darboux-type transforms that lower (`T̂`) or raise (`T̃`) the boundary function indices.

use crate::error::{Error, Result};
use crate::hn_algebra::{RationalBC, ThetaBranch};
use crate::potential::SolutionTrace;
use crate::quasi_ode::InitialData;
use crate::spectrum::{Problem, Solver, SolverConfig, SpectralData};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    Hat,
    Tilde,
}

/// Which domain set a `T̃` argument belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TildeBranch {
    /// `μ < λ̊`, `ν > 0`.
    Below,
    /// `f` constant, `μ = λ̊`, `ν = γ̊/2`.
    ConstantF,
    /// `F` constant, `μ = λ̊`, `ν = 2γ̊`.
    ConstantBigF,
}

/// `Λ`, `I`, `J` of the forward step between the two problems, plus the endpoint data of the
/// solution used for the transform: `[v(0), v⁽¹⁾(0), v(π), v⁽¹⁾(π)]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransformRecord {
    #[serde(rename = "Lambda")]
    pub lambda_cap: f64,
    #[serde(rename = "I")]
    pub i: i32,
    #[serde(rename = "J")]
    pub j: i32,
    pub v_endpoints: [f64; 4],
    pub direction: Direction,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainReduction {
    pub problems: Vec<Problem>,
    pub records: Vec<TransformRecord>,
    /// `(λ̊, γ̊)` removed at steps with `J = 1`, in order.
    pub removed_pairs: Vec<(f64, f64)>,
}

fn endpoints(v: &SolutionTrace) -> [f64; 4] {
    let n = v.y.len() - 1;
    [v.y[0], v.y_quasi[0], v.y[n], v.y_quasi[n]]
}

fn log_ratio(v: &SolutionTrace) -> f64 {
    let n = v.y.len() - 1;
    2.0 / PI * (v.y[n] / v.y[0]).ln()
}

/// `I = 1` if `ind f >= 0`, else `-1`; `J = 1` iff both indices are non-negative.
fn i_j(f: &RationalBC, big_f: &RationalBC) -> (i32, i32) {
    let i = if f.index() >= 0 { 1 } else { -1 };
    let j = if f.index() >= 0 && big_f.index() >= 0 { 1 } else { 0 };
    (i, j)
}

/// `(λ̊, γ̊)`.
pub fn ground_pair(solver: &Solver) -> Result<(f64, f64)> {
    let l0 = solver.eigenvalue(0)?;
    let (g0, _) = solver.norming_constant(l0)?;
    Ok((l0, g0))
}

pub fn t_hat(p: &Problem) -> Result<(Problem, TransformRecord)> {
    t_hat_with(p, SolverConfig::default())
}

pub fn t_hat_with(p: &Problem, config: SolverConfig) -> Result<(Problem, TransformRecord)> {
    if p.f.is_dirichlet() && p.big_f.is_dirichlet() {
        return Err(Error::Domain(
            "T̂ needs at least one non-Dirichlet boundary function".into(),
        ));
    }
    let solver = Solver::new(p, config);
    let l0 = solver.eigenvalue(0)?;
    let (i, j) = i_j(&p.f, &p.big_f);
    let cap = if j == 1 { l0 } else { l0 - 2.0 };
    let v = if !p.f.is_dirichlet() {
        solver.phi(cap)
    } else {
        solver.psi(cap)
    };
    let s_hat = p.s.darboux_potential(&v)?;
    let c = log_ratio(&v);
    let e = endpoints(&v);
    let f_hat = if p.f.is_dirichlet() {
        RationalBC::constant(-e[1] / e[0] + c)
    } else {
        let tau = p.f.eval(cap);
        p.f.theta(cap, tau, tau + c, Some(ThetaBranch::Equal))?
    };
    let big_f_hat = if p.big_f.is_dirichlet() {
        RationalBC::constant(e[3] / e[2] - c)
    } else {
        let tau = p.big_f.eval(cap);
        p.big_f.theta(cap, tau, tau - c, Some(ThetaBranch::Equal))?
    };
    Ok((
        Problem::new(s_hat, f_hat, big_f_hat),
        TransformRecord {
            lambda_cap: cap,
            i,
            j,
            v_endpoints: e,
            direction: Direction::Hat,
        },
    ))
}

/// Spectral data of `T̂(p)` from that of `p`: `{λ_n, γ_n/(λ_n - Λ)^I}` for `n >= J`.
pub fn spectral_map_forward(data: &SpectralData, rec: &TransformRecord) -> SpectralData {
    let skip = rec.j as usize;
    let next = |ind: i32| if ind >= 0 { ind - 1 } else { 0 };
    SpectralData {
        ind_f: next(data.ind_f),
        ind_big_f: next(data.ind_big_f),
        eigenvalues: data.eigenvalues[skip.min(data.len())..].to_vec(),
        norming_constants: data.eigenvalues[skip.min(data.len())..]
            .iter()
            .zip(&data.norming_constants[skip.min(data.len())..])
            .map(|(&l, &g)| g / (l - rec.lambda_cap).powi(rec.i))
            .collect(),
    }
}

/// Spectral data of `T̃(μ, ν, p)` from that of `p`: `{λ_n, γ_n (λ_n - Λ)^I}` with `(μ, ν)`
/// prepended when `J = 1`.
pub fn spectral_map_inverse(
    data: &SpectralData,
    rec: &TransformRecord,
    mu: f64,
    nu: f64,
    ind: (i32, i32),
) -> SpectralData {
    let mut eigenvalues = Vec::with_capacity(data.len() + 1);
    let mut norming_constants = Vec::with_capacity(data.len() + 1);
    if rec.j == 1 {
        eigenvalues.push(mu);
        norming_constants.push(nu);
    }
    for (&l, &g) in data.eigenvalues.iter().zip(&data.norming_constants) {
        eigenvalues.push(l);
        norming_constants.push(g * (l - rec.lambda_cap).powi(rec.i));
    }
    SpectralData {
        ind_f: ind.0,
        ind_big_f: ind.1,
        eigenvalues,
        norming_constants,
    }
}

/// `ϰ(μ) = (C⁽¹⁾(π) - C(π)F(μ)) / (S⁽¹⁾(π) - S(π)F(μ))`, written with `F↑, F↓` so that
/// `F = ∞` gives `C(π)/S(π)`.
pub fn kappa(p: &Problem, mu: f64) -> Result<f64> {
    kappa_with(&Solver::new(p, SolverConfig::default()), mu)
}

pub fn kappa_with(solver: &Solver, mu: f64) -> Result<f64> {
    let c = solver.ode().shoot(mu, InitialData::left(1.0, 0.0));
    let s = solver.ode().shoot(mu, InitialData::left(0.0, 1.0));
    let (u, d) = solver.problem().big_f.up_down_at(mu);
    let rc = (c.log_scale - s.log_scale).exp();
    let num = (c.quasi * d - c.y * u) * rc;
    let den = s.quasi * d - s.y * u;
    let scale = (s.quasi * d).abs() + (s.y * u).abs();
    if den.abs() <= 1e-12 * scale {
        return Err(Error::Singular(format!("ϰ denominator vanishes at μ = {mu}")));
    }
    Ok(num / den)
}

/// Classifies `(μ, ν)` against the domain sets of `T̃` with relative tolerance `1e-8`.
pub fn classify_tilde(mu: f64, nu: f64, p: &Problem, solver: &Solver) -> Result<TildeBranch> {
    if !(nu > 0.0) || !mu.is_finite() || !nu.is_finite() {
        return Err(Error::Domain(format!("T̃ needs finite μ and ν > 0, got ({mu}, {nu})")));
    }
    let (l0, g0) = ground_pair(solver)?;
    let tol = 1e-8 * l0.abs().max(1.0);
    if mu < l0 - tol {
        return Ok(TildeBranch::Below);
    }
    if (mu - l0).abs() <= tol {
        if p.f.is_constant() && (nu - 0.5 * g0).abs() <= 1e-8 * g0 {
            return Ok(TildeBranch::ConstantF);
        }
        if p.big_f.is_constant() && (nu - 2.0 * g0).abs() <= 1e-8 * g0 {
            return Ok(TildeBranch::ConstantBigF);
        }
    }
    Err(Error::Domain(format!(
        "(μ, ν) = ({mu}, {nu}) is outside the T̃ domain (λ̊ = {l0}, γ̊ = {g0})"
    )))
}

pub fn t_tilde(mu: f64, nu: f64, p: &Problem) -> Result<(Problem, TransformRecord)> {
    let solver = Solver::new(p, SolverConfig::default());
    let branch = classify_tilde(mu, nu, p, &solver)?;
    t_tilde_branch(mu, nu, &solver, branch)
}

/// `T̃` with the domain set given instead of detected.
pub fn t_tilde_branch(mu: f64, nu: f64, solver: &Solver, branch: TildeBranch) -> Result<(Problem, TransformRecord)> {
    let p = solver.problem();
    let (cap, u) = match branch {
        TildeBranch::Below => {
            let kap = kappa_with(solver, mu)?;
            let (fu, fd) = p.f.up_down_at(mu);
            let w = kap * fd - fu;
            let den = nu + fd * w;
            if den.abs() <= 1e-14 * (nu.abs() + (fd * w).abs()) {
                return Err(Error::Singular(format!("ρ denominator vanishes at μ = {mu}")));
            }
            let rho = (nu * kap + fu * w) / den;
            (mu, solver.ode().integrate(mu, InitialData::left(1.0, -rho)))
        }
        TildeBranch::ConstantF => (mu - 2.0, solver.phi(mu - 2.0)),
        TildeBranch::ConstantBigF => (mu - 2.0, solver.psi(mu - 2.0)),
    };
    let s_new = p.s.darboux_potential(&u)?;
    let c = log_ratio(&u);
    let e = endpoints(&u);
    let tau_left = -e[1] / e[0];
    let tau_right = e[3] / e[2];
    let f_new = match branch {
        TildeBranch::ConstantF => RationalBC::Dirichlet,
        _ if p.f.is_dirichlet() => RationalBC::constant(tau_left + c),
        _ => p.f.theta(cap, tau_left, tau_left + c, Some(ThetaBranch::Greater))?,
    };
    let big_f_new = match branch {
        TildeBranch::ConstantBigF => RationalBC::Dirichlet,
        _ if p.big_f.is_dirichlet() => RationalBC::constant(tau_right - c),
        _ => p
            .big_f
            .theta(cap, tau_right, tau_right - c, Some(ThetaBranch::Greater))?,
    };
    let (i, j) = i_j(&f_new, &big_f_new);
    Ok((
        Problem::new(s_new, f_new, big_f_new),
        TransformRecord {
            lambda_cap: cap,
            i,
            j,
            v_endpoints: e,
            direction: Direction::Tilde,
        },
    ))
}

/// `ρ = f(λ₀) + (2/π) ln(φ(π, λ₀)/f↓(λ₀))`, the constant `T̂` attaches to `f`.
pub fn rho_of_hat(solver: &Solver, l0: f64) -> f64 {
    let (_, d) = solver.problem().f.up_down_at(l0);
    let (y, _) = solver.phi_at_pi(l0);
    solver.problem().f.eval(l0) + 2.0 / PI * (y / d).ln()
}

/// `γ₀ = (f̂↑ - ϰ f̂↓)(ρ f̂↓ - f̂↑) / (ρ - ϰ)` at `λ₀`, with `ϰ` taken on `p̂`.
pub fn gamma0_from_hat(p_hat: &Problem, l0: f64, rho: f64) -> Result<f64> {
    let kap = kappa(p_hat, l0)?;
    if (rho - kap).abs() <= 1e-12 * (rho.abs() + kap.abs()).max(1e-300) {
        return Err(Error::Degenerate(format!("ρ = ϰ = {rho} at λ₀ = {l0}")));
    }
    let (u, d) = p_hat.f.up_down_at(l0);
    Ok((u - kap * d) * (rho * d - u) / (rho - kap))
}

/// Applies `T̂` `max(ind f, ind F)` times.
pub fn reduce_chain(p: &Problem) -> Result<ChainReduction> {
    reduce_chain_with(p, SolverConfig::default())
}

pub fn reduce_chain_with(p: &Problem, config: SolverConfig) -> Result<ChainReduction> {
    let k = p.f.index().max(p.big_f.index()).max(0);
    let mut problems = vec![p.clone()];
    let mut records = Vec::new();
    let mut removed_pairs = Vec::new();
    for _ in 0..k {
        let cur = problems.last().unwrap();
        let (next, rec) = t_hat_with(cur, config)?;
        if rec.j == 1 {
            removed_pairs.push(ground_pair(&Solver::new(cur, config))?);
        }
        problems.push(next);
        records.push(rec);
    }
    let last = problems.last().unwrap();
    if last.f.index() > 0 || last.big_f.index() > 0 {
        return Err(Error::Consistency(format!(
            "chain ended at indices ({}, {})",
            last.f.index(),
            last.big_f.index()
        )));
    }
    Ok(ChainReduction {
        problems,
        records,
        removed_pairs,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::potential::Potential;
    use crate::spectrum::{eigenvalues, spectral_data};

    #[test]
    fn hat_of_neumann_neumann() {
        let p = Problem::new(Potential::zero(), RationalBC::constant(0.0), RationalBC::constant(0.0));
        let (q, rec) = t_hat(&p).unwrap();
        assert!(q.f.is_dirichlet() && q.big_f.is_dirichlet());
        assert!(q.s.l2_norm() < 1e-12);
        assert_eq!((rec.i, rec.j), (1, 1));
        assert!(rec.lambda_cap.abs() < 1e-12);
    }

    #[test]
    fn hat_of_dirichlet_neumann() {
        let p = Problem::new(Potential::zero(), RationalBC::Dirichlet, RationalBC::constant(0.0));
        let (q, rec) = t_hat(&p).unwrap();
        assert_eq!((rec.i, rec.j), (-1, 0));
        assert!((rec.lambda_cap - (0.25 - 2.0)).abs() < 1e-12);
        assert!(q.f.is_constant() && q.big_f.is_dirichlet());
    }

    #[test]
    fn hat_rejects_double_dirichlet() {
        let p = Problem::new(Potential::zero(), RationalBC::Dirichlet, RationalBC::Dirichlet);
        assert!(matches!(t_hat(&p), Err(Error::Domain(_))));
    }

    #[test]
    fn kappa_is_coth_pi() {
        let p = Problem::new(Potential::zero(), RationalBC::constant(0.0), RationalBC::Dirichlet);
        let k = kappa(&p, -1.0).unwrap();
        assert!((k - 1.0 / PI.tanh()).abs() < 1e-12);
    }

    #[test]
    fn gamma0_of_neumann_neumann() {
        let p = Problem::new(Potential::zero(), RationalBC::constant(0.0), RationalBC::constant(0.0));
        let (q, _) = t_hat(&p).unwrap();
        let solver = Solver::new(&p, SolverConfig::default());
        let rho = rho_of_hat(&solver, 0.0);
        assert!((gamma0_from_hat(&q, 0.0, rho).unwrap() - PI).abs() < 1e-10);
    }

    fn sample_potential() -> Potential {
        Potential::fourier(vec![0.3, -0.1], vec![0.2]).unwrap()
    }

    fn assert_round_trip(p: &Problem) {
        let (q, rec) = t_hat(p).unwrap();
        let qs = Solver::new(&q, SolverConfig::default());
        let (mu, nu) = if rec.j == 1 {
            ground_pair(&Solver::new(p, SolverConfig::default())).unwrap()
        } else {
            let (l, g) = ground_pair(&qs).unwrap();
            (l, if rec.i == -1 { 0.5 * g } else { 2.0 * g })
        };
        let (back, rec_back) = t_tilde(mu, nu, &q).unwrap();
        assert_eq!((rec_back.i, rec_back.j), (rec.i, rec.j));
        assert!((rec_back.lambda_cap - rec.lambda_cap).abs() < 1e-10);
        let d = back.s.l2_distance(&p.s);
        assert!(d < 1e-6, "potential distance {d}");
        assert!(back.f.coefficient_distance(&p.f) < 1e-8, "{:?} vs {:?}", back.f, p.f);
        assert!(
            back.big_f.coefficient_distance(&p.big_f) < 1e-8,
            "{:?} vs {:?}",
            back.big_f,
            p.big_f
        );
    }

    #[test]
    fn round_trip_below_branch() {
        let f = RationalBC::with_poles(1.0, 0.5, &[(3.0, 0.7)]).unwrap();
        let p = Problem::new(sample_potential(), f, RationalBC::constant(0.2));
        assert_round_trip(&p);
    }

    #[test]
    fn round_trip_constant_f_branch() {
        let p = Problem::new(
            sample_potential(),
            RationalBC::Dirichlet,
            RationalBC::affine(1.0, 0.3).unwrap(),
        );
        assert_round_trip(&p);
    }

    #[test]
    fn round_trip_constant_big_f_branch() {
        let p = Problem::new(sample_potential(), RationalBC::constant(0.4), RationalBC::Dirichlet);
        assert_round_trip(&p);
    }

    #[test]
    fn forward_map_matches_direct_spectrum() {
        let p = Problem::new(
            sample_potential(),
            RationalBC::affine(1.0, -0.2).unwrap(),
            RationalBC::constant(0.1),
        );
        let data = spectral_data(&p, 12).unwrap();
        let (q, rec) = t_hat(&p).unwrap();
        let mapped = spectral_map_forward(&data, &rec);
        let direct = Solver::new(&q, SolverConfig::default())
            .spectral_data_from_eigenvalues(mapped.eigenvalues.clone())
            .unwrap();
        assert_eq!((mapped.ind_f, mapped.ind_big_f), (q.f.index(), q.big_f.index()));
        for (k, (a, b)) in mapped
            .norming_constants
            .iter()
            .zip(&direct.norming_constants)
            .enumerate()
        {
            assert!((a - b).abs() < 1e-8 * b, "n = {k}: {a} vs {b}");
        }
        let own = eigenvalues(&q, 11).unwrap();
        for (a, b) in own.iter().zip(&mapped.eigenvalues) {
            assert!((a - b).abs() < 1e-9 * b.abs().max(1.0));
        }
    }

    #[test]
    fn chain_reaches_nonpositive_indices() {
        let f = RationalBC::with_poles(1.0, 0.0, &[(4.0, 1.0)]).unwrap();
        let p = Problem::new(sample_potential(), f, RationalBC::constant(0.0));
        let red = reduce_chain(&p).unwrap();
        assert_eq!(red.records.len(), p.f.index() as usize);
        let last = red.problems.last().unwrap();
        assert!(last.f.index() <= 0 && last.big_f.index() <= 0);
    }

    #[test]
    fn round_trip_cos2x_neumann_robin() {
        let s = Potential::fourier(vec![0.0, 1.0], vec![]).unwrap();
        let p = Problem::new(s, RationalBC::constant(1.0), RationalBC::constant(-1.0));
        assert_round_trip(&p);
    }

    #[test]
    fn tilde_below_gains_eigenvalue() {
        let p = Problem::new(Potential::zero(), RationalBC::Dirichlet, RationalBC::Dirichlet);
        let (q, rec) = t_tilde(0.5, 1.0, &p).unwrap();
        assert_eq!((q.f.index(), q.big_f.index()), (0, 0));
        assert_eq!((rec.i, rec.j), (1, 1));
        let qs = Solver::new(&q, SolverConfig::default());
        let (l0, g0) = ground_pair(&qs).unwrap();
        assert!((l0 - 0.5).abs() < 1e-10);
        assert!((g0 - 1.0).abs() < 1e-8);
        assert!((qs.eigenvalue(1).unwrap() - 1.0).abs() < 1e-9);
    }

    fn assert_hat_inverts_tilde(p: &Problem, mu: f64, nu: f64, branch: TildeBranch) {
        let solver = Solver::new(p, SolverConfig::default());
        assert_eq!(classify_tilde(mu, nu, p, &solver).unwrap(), branch);
        let (q, _) = t_tilde_branch(mu, nu, &solver, branch).unwrap();
        let (back, _) = t_hat(&q).unwrap();
        let d = back.s.l2_distance(&p.s);
        assert!(d < 1e-6, "potential distance {d}");
        assert!(back.f.coefficient_distance(&p.f) < 1e-8, "{:?} vs {:?}", back.f, p.f);
        assert!(
            back.big_f.coefficient_distance(&p.big_f) < 1e-8,
            "{:?} vs {:?}",
            back.big_f,
            p.big_f
        );
    }

    #[test]
    fn hat_inverts_tilde_on_all_branches() {
        let p = Problem::new(
            sample_potential(),
            RationalBC::constant(0.3),
            RationalBC::affine(1.0, -0.4).unwrap(),
        );
        let (l0, g0) = ground_pair(&Solver::new(&p, SolverConfig::default())).unwrap();
        assert_hat_inverts_tilde(&p, l0 - 1.5, 0.8, TildeBranch::Below);
        assert_hat_inverts_tilde(&p, l0, 0.5 * g0, TildeBranch::ConstantF);
        let p = Problem::new(
            sample_potential(),
            RationalBC::affine(1.0, 0.2).unwrap(),
            RationalBC::constant(-0.3),
        );
        let (l0, g0) = ground_pair(&Solver::new(&p, SolverConfig::default())).unwrap();
        assert_hat_inverts_tilde(&p, l0, 2.0 * g0, TildeBranch::ConstantBigF);
    }

    #[test]
    fn tilde_rejects_outside_domain() {
        let p = Problem::new(Potential::zero(), RationalBC::Dirichlet, RationalBC::Dirichlet);
        assert!(matches!(t_tilde(2.0, 1.0, &p), Err(Error::Domain(_))));
        assert!(matches!(t_tilde(1.0, 1.0, &p), Err(Error::Domain(_))));
    }
}
