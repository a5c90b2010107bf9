//! Runnable acceptance checks, shared by the `verify` command and the `acceptance` test target.
//!
//! Each check returns an [`Outcome`] carrying its pinned tolerance in `detail`. Random problems
//! come from a ChaCha stream seeded by [`VerifyConfig::seed`], so a run is reproducible.

use crate::error::{Error, Result};
use crate::hn_algebra::RationalBC;
use crate::inverse::{
    estimate_nu_r, half_inverse_check, inverse_spectral_data_with, recover_f_down, symmetric_inverse_with,
    two_problem_diagnostics, two_spectra_inverse_with, two_spectra_residuals, InverseConfig, MomentTable,
    TwoSpectraInput,
};
use crate::numeric::brent;
use crate::potential::Potential;
use crate::spectrum::{asymptotic_residuals, hadamard_calibration, hadamard_product, Problem, Solver, SolverConfig};
use crate::transforms::{
    classify_tilde, ground_pair, spectral_map_forward, t_hat, t_tilde, t_tilde_branch, TildeBranch,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::time::Instant;

pub const CRITERIA: [(u8, &str); 13] = [
    (1, "closed-form spectra"),
    (2, "chi' = beta gamma identity"),
    (3, "hat spectral map"),
    (4, "hat/tilde round trips"),
    (5, "oscillation count"),
    (6, "asymptotic residuals"),
    (7, "hadamard product"),
    (8, "hankel recovery of f-down"),
    (9, "inverse by spectral data"),
    (10, "two-spectra inverse"),
    (11, "two-problem diagnostics"),
    (12, "symmetric inverse"),
    (13, "half-inverse evidence"),
];

/// Criteria known to fail; see the README for why.
pub const EXPECTED_FAILURES: [u8; 2] = [6, 10];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VerifyConfig {
    pub seed: u64,
    /// Random problems per randomized criterion.
    pub random_problems: usize,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        VerifyConfig {
            seed: 20_240_917,
            random_problems: 10,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Outcome {
    pub id: u8,
    pub name: String,
    pub passed: bool,
    pub detail: String,
    pub seconds: f64,
}

impl Outcome {
    pub fn line(&self) -> String {
        format!(
            "{} criterion {:>2} {:<28} {:>7.1}s  {}",
            if self.passed { "PASS" } else { "FAIL" },
            self.id,
            self.name,
            self.seconds,
            self.detail
        )
    }
}

/// Runs one criterion by id. Errors inside a check count as a failure with the error text.
pub fn run_criterion(id: u8, cfg: &VerifyConfig) -> Result<Outcome> {
    let name = CRITERIA
        .iter()
        .find(|c| c.0 == id)
        .map(|c| c.1)
        .ok_or_else(|| Error::validation("suite", format!("unknown criterion {id}")))?;
    let start = Instant::now();
    let res = match id {
        1 => closed_form_spectra(),
        2 => chi_prime_identity(cfg),
        3 => hat_spectral_map(cfg),
        4 => round_trips(),
        5 => oscillation(cfg),
        6 => asymptotics(),
        7 => hadamard(),
        8 => hankel_recovery(),
        9 => inverse_by_data(),
        10 => two_spectra(),
        11 => two_problem(),
        12 => symmetric(),
        _ => half_inverse(),
    };
    let seconds = start.elapsed().as_secs_f64();
    let (passed, detail) = match res {
        Ok(c) => c,
        Err(e) => (false, format!("error: {e}")),
    };
    Ok(Outcome {
        id,
        name: name.to_string(),
        passed,
        detail,
        seconds,
    })
}

/// Parses `all` or a comma-separated id list such as `1,4,9`.
pub fn parse_suite(suite: &str) -> Result<Vec<u8>> {
    if suite.trim() == "all" {
        return Ok(CRITERIA.iter().map(|c| c.0).collect());
    }
    suite
        .split(',')
        .map(|t| {
            t.trim()
                .parse::<u8>()
                .ok()
                .filter(|id| CRITERIA.iter().any(|c| c.0 == *id))
                .ok_or_else(|| Error::validation("suite", format!("unknown criterion `{t}`")))
        })
        .collect()
}

type Check = Result<(bool, String)>;

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1.0)
}

fn config(count: usize) -> SolverConfig {
    SolverConfig {
        max_count: count.max(SolverConfig::default().max_count),
        ..SolverConfig::default()
    }
}

fn solver(p: &Problem, count: usize) -> Solver {
    Solver::new(p, config(count))
}

// ---------------------------------------------------------------------------------------------
// Random problems

fn random_bc(rng: &mut ChaCha8Rng, index: i32) -> Result<RationalBC> {
    let h = rng.gen_range(-1.0..1.0);
    let h0 = if index % 2 == 1 { rng.gen_range(0.3..1.5) } else { 0.0 };
    let poles: Vec<(f64, f64)> = (0..index.max(0) / 2)
        .map(|k| (rng.gen_range(1.0..12.0) + 12.0 * k as f64, rng.gen_range(0.3..1.5)))
        .collect();
    match index {
        -1 => Ok(RationalBC::Dirichlet),
        _ => RationalBC::with_poles(h0, h, &poles),
    }
}

fn random_potential(rng: &mut ChaCha8Rng) -> Result<Potential> {
    let cos = (0..3).map(|_| rng.gen_range(-0.4..0.4)).collect();
    let sin = (0..2).map(|_| rng.gen_range(-0.3..0.3)).collect();
    Potential::fourier(cos, sin)
}

/// Smooth zero-mean `s` and boundary indices in `-1..=3`; never Dirichlet at both ends.
pub fn random_problem(rng: &mut ChaCha8Rng) -> Result<Problem> {
    let s = random_potential(rng)?;
    let mut m = rng.gen_range(-1..=3);
    let n = rng.gen_range(-1..=3);
    if m == -1 && n == -1 {
        m = 0;
    }
    Ok(Problem::new(s, random_bc(rng, m)?, random_bc(rng, n)?))
}

fn random_problems(cfg: &VerifyConfig, salt: u64) -> Result<Vec<Problem>> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ salt);
    (0..cfg.random_problems).map(|_| random_problem(&mut rng)).collect()
}

fn describe(p: &Problem) -> String {
    format!("(ind f, ind F) = ({}, {})", p.f.index(), p.big_f.index())
}

// ---------------------------------------------------------------------------------------------
// 1

/// `n ↦ (λ_n, γ_n)`.
type ClosedForm = fn(usize) -> (f64, f64);

fn closed_form_spectra() -> Check {
    let start = Instant::now();
    let cases: [(RationalBC, RationalBC, ClosedForm); 3] = [
        (RationalBC::Dirichlet, RationalBC::Dirichlet, |n| {
            let m = (n + 1) as f64;
            (m * m, PI / (2.0 * m * m))
        }),
        (RationalBC::constant(0.0), RationalBC::constant(0.0), |n| {
            ((n * n) as f64, if n == 0 { PI } else { 0.5 * PI })
        }),
        (RationalBC::Dirichlet, RationalBC::constant(0.0), |n| {
            let m = n as f64 + 0.5;
            (m * m, PI / (2.0 * m * m))
        }),
    ];
    let (mut eig, mut gam) = (0.0f64, 0.0f64);
    for (f, g, exact) in &cases {
        let data = solver(&Problem::new(Potential::zero(), f.clone(), g.clone()), 20).spectral_data(20)?;
        for n in 0..20 {
            let (l, gm) = exact(n);
            eig = eig.max(rel(data.eigenvalues[n], l));
            gam = gam.max((data.norming_constants[n] / gm - 1.0).abs());
        }
    }
    let t = start.elapsed().as_secs_f64();
    Ok((
        eig <= 1e-8 && gam <= 1e-6 && t < 10.0,
        format!("max eig err {eig:.2e} (<= 1e-8), max gamma err {gam:.2e} (<= 1e-6), {t:.2}s (< 10s)"),
    ))
}

// ---------------------------------------------------------------------------------------------
// 2

fn five_point(f: &dyn Fn(f64) -> f64, x: f64) -> f64 {
    let h = 1e-3 * x.abs().max(1.0).sqrt();
    (-f(x + 2.0 * h) + 8.0 * f(x + h) - 8.0 * f(x - h) + f(x - 2.0 * h)) / (12.0 * h)
}

fn chi_prime_identity(cfg: &VerifyConfig) -> Check {
    let mut worst = 0.0f64;
    let mut at = String::new();
    for p in random_problems(cfg, 2)? {
        let sv = solver(&p, 15);
        for l in sv.eigenvalues(15)? {
            let (g, b) = sv.norming_constant(l)?;
            let d = five_point(&|x| sv.char_function(x), l);
            let e = (d / (b * g) - 1.0).abs();
            if e > worst {
                worst = e;
                at = describe(&p);
            }
        }
    }
    Ok((worst <= 1e-6, format!("max rel err {worst:.2e} (<= 1e-6) at {at}")))
}

// ---------------------------------------------------------------------------------------------
// 3

fn hat_spectral_map(cfg: &VerifyConfig) -> Check {
    let (mut eig, mut gam) = (0.0f64, 0.0f64);
    for p in random_problems(cfg, 3)? {
        let data = solver(&p, 16).spectral_data(16)?;
        let (q, rec) = t_hat(&p)?;
        let mapped = spectral_map_forward(&data, &rec);
        let direct = solver(&q, 15).spectral_data(15)?;
        if (mapped.ind_f, mapped.ind_big_f) != (direct.ind_f, direct.ind_big_f) {
            return Ok((false, format!("index mismatch for {}", describe(&p))));
        }
        for n in 0..15 {
            eig = eig.max(rel(mapped.eigenvalues[n], direct.eigenvalues[n]));
            gam = gam.max((mapped.norming_constants[n] / direct.norming_constants[n] - 1.0).abs());
        }
    }
    Ok((
        eig <= 1e-6 && gam <= 1e-6,
        format!("max eig err {eig:.2e}, max gamma err {gam:.2e} (<= 1e-6)"),
    ))
}

// ---------------------------------------------------------------------------------------------
// 4

fn round_trip_errors(p: &Problem, back: &Problem) -> (f64, f64) {
    let d = back.s.l2_distance(&p.s);
    let c = back
        .f
        .coefficient_distance(&p.f)
        .max(back.big_f.coefficient_distance(&p.big_f));
    (d, c)
}

fn round_trips() -> Check {
    let s = Potential::fourier(vec![0.25, -0.15, 0.05], vec![0.1])?;
    let mut worst = (0.0f64, 0.0f64);
    let mut note = |e: (f64, f64)| worst = (worst.0.max(e.0), worst.1.max(e.1));

    // T̃(λ̊, γ̊, T̂ p) = p: J = 1, then J = 0 with I = -1 and I = 1.
    let firsts = [
        Problem::new(
            s.clone(),
            RationalBC::with_poles(0.8, 0.3, &[(4.0, 0.6)])?,
            RationalBC::constant(-0.2),
        ),
        Problem::new(s.clone(), RationalBC::Dirichlet, RationalBC::affine(0.7, 0.4)?),
        Problem::new(
            s.clone(),
            RationalBC::with_poles(0.0, 0.5, &[(3.0, 1.0)])?,
            RationalBC::Dirichlet,
        ),
    ];
    for p in &firsts {
        let (q, rec) = t_hat(p)?;
        let (mu, nu) = if rec.j == 1 {
            ground_pair(&solver(p, 1))?
        } else {
            let (l, g) = ground_pair(&solver(&q, 1))?;
            (l, if rec.i == -1 { 0.5 * g } else { 2.0 * g })
        };
        let (back, _) = t_tilde(mu, nu, &q)?;
        note(round_trip_errors(p, &back));
    }

    // T̂(T̃(μ, ν, p)) = p on each branch.
    let p1 = Problem::new(s.clone(), RationalBC::constant(0.3), RationalBC::affine(1.2, -0.4)?);
    let p2 = Problem::new(s.clone(), RationalBC::affine(0.9, 0.2)?, RationalBC::constant(-0.3));
    let (l1, g1) = ground_pair(&solver(&p1, 1))?;
    let (l2, g2) = ground_pair(&solver(&p2, 1))?;
    let seconds = [
        (&p1, l1 - 2.0, 0.6, TildeBranch::Below),
        (&p1, l1, 0.5 * g1, TildeBranch::ConstantF),
        (&p2, l2, 2.0 * g2, TildeBranch::ConstantBigF),
    ];
    for (p, mu, nu, branch) in seconds {
        let sv = solver(p, 1);
        if classify_tilde(mu, nu, p, &sv)? != branch {
            return Ok((false, format!("({mu}, {nu}) not classified as {branch:?}")));
        }
        let (q, _) = t_tilde_branch(mu, nu, &sv, branch)?;
        let (back, _) = t_hat(&q)?;
        note(round_trip_errors(p, &back));
    }
    Ok((
        worst.0 <= 1e-6 && worst.1 <= 1e-8,
        format!(
            "max L2 err {:.2e} (<= 1e-6), max coefficient err {:.2e} (<= 1e-8)",
            worst.0, worst.1
        ),
    ))
}

// ---------------------------------------------------------------------------------------------
// 5

/// First `count` zeros of `χ`, located by a sign scan from `λ = -100` that does not use the
/// counting function.
pub fn scan_char_zeros(sv: &Solver, count: usize) -> Result<Vec<f64>> {
    let mut out = Vec::with_capacity(count);
    let mut a = -100.0;
    let mut fa = sv.char_function(a);
    if fa == 0.0 {
        out.push(a);
    }
    while out.len() < count {
        let b = a + 0.02 * a.abs().max(1.0).sqrt();
        let fb = sv.char_function(b);
        if fb == 0.0 {
            out.push(b);
        } else if fa != 0.0 && fa.signum() != fb.signum() {
            let mut g = |x: f64| sv.char_function(x);
            out.push(brent(&mut g, a, b, fa, fb, 1e-13 * b.abs().max(1.0), 200)?);
        }
        if b > 1e5 {
            return Err(Error::BracketExhausted(format!(
                "found {} of {count} zeros below 1e5",
                out.len()
            )));
        }
        a = b;
        fa = fb;
    }
    Ok(out)
}

fn oscillation(cfg: &VerifyConfig) -> Check {
    let mut problems = random_problems(cfg, 5)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 55);
    if let Some(first) = problems.first_mut() {
        let loc = rng.gen_range(1.5..6.0);
        first.f = RationalBC::with_poles(0.0, rng.gen_range(-0.5..0.5), &[(loc, rng.gen_range(0.3..1.0))])?;
    }
    let mut checked = 0;
    let mut pole_below = false;
    let mut eig_gap = 0.0f64;
    for p in &problems {
        let sv = solver(p, 15);
        let zeros = scan_char_zeros(&sv, 15)?;
        let eigs = sv.eigenvalues(15)?;
        for (z, e) in zeros.iter().zip(&eigs) {
            eig_gap = eig_gap.max(rel(*z, *e));
        }
        if p.f.pole_count(zeros[10]) + p.big_f.pole_count(zeros[10]) > 0 {
            pole_below = true;
        }
        for (n, &l) in zeros.iter().enumerate() {
            let expected = n as i64 - p.f.pole_count(l) as i64 - p.big_f.pole_count(l) as i64;
            let got = sv.oscillation_count(l)? as i64;
            if got != expected {
                return Ok((
                    false,
                    format!("n = {n} of {}: {got} zeros, expected {expected}", describe(p)),
                ));
            }
            checked += 1;
        }
    }
    Ok((
        pole_below && eig_gap <= 1e-8,
        format!(
            "{checked} eigenfunctions exact; pole below lambda_10: {pole_below}; scan vs solver {eig_gap:.1e} (<= 1e-8)"
        ),
    ))
}

// ---------------------------------------------------------------------------------------------
// 6

/// `Σ_{30<n<=40} x_n² / Σ_{n<=40} x_n²`, skipping undefined terms.
fn tail_share(x: &[f64]) -> f64 {
    let sq = |r: std::ops::Range<usize>| x[r].iter().filter(|v| v.is_finite()).map(|v| v * v).sum::<f64>();
    let total = sq(0..41);
    if total == 0.0 {
        0.0
    } else {
        sq(31..41) / total
    }
}

fn asymptotics() -> Check {
    let s = Potential::fourier(vec![0.0, 0.3], vec![])?;
    // Unit coefficients throughout; none are tuned to the outcome.
    let combos = [
        (RationalBC::Dirichlet, RationalBC::Dirichlet),
        (RationalBC::constant(0.0), RationalBC::constant(0.0)),
        (RationalBC::affine(1.0, 0.0)?, RationalBC::constant(0.0)),
        (RationalBC::with_poles(0.0, 0.0, &[(3.0, 1.0)])?, RationalBC::Dirichlet),
    ];
    let mut worst = 0.0f64;
    let mut parts = Vec::new();
    for (f, g) in combos {
        let p = Problem::new(s.clone(), f, g);
        let data = solver(&p, 41).spectral_data(41)?;
        let (a, b) = asymptotic_residuals(&data);
        let (ta, tb) = (tail_share(&a), tail_share(&b));
        worst = worst.max(ta).max(tb);
        // `a_n (n - L)` at n = 40 estimates the first-order coefficient of `a_n`.
        let c = a[40] * (40.0 - p.half_index_sum());
        parts.push(format!(
            "({},{}): {ta:.1e}/{tb:.1e} c {c:.3}",
            data.ind_f, data.ind_big_f
        ));
    }
    Ok((worst <= 1e-3, format!("a/b tail shares {} (<= 1e-3)", parts.join(", "))))
}

// ---------------------------------------------------------------------------------------------
// 7

fn hadamard() -> Check {
    let eigs: Vec<f64> = (0..200).map(|n| (n as f64 + 0.5).powi(2)).collect();
    let mut worst = 0.0f64;
    for i in 0..=110 {
        let x = -5.0 + 0.5 * i as f64;
        let exact = if x >= 0.0 {
            -(PI * x.sqrt()).cos()
        } else {
            -(PI * (-x).sqrt()).cosh()
        };
        worst = worst.max((hadamard_product(&eigs, -0.5, x, 10_000) - exact).abs() / exact.abs().max(1.0));
    }
    let dd: Vec<f64> = (1..=200).map(|m| (m * m) as f64).collect();
    let cal = hadamard_calibration(&dd, -1.0);
    let spread = cal.spread / cal.constant.abs();
    Ok((
        worst <= 1e-5 && spread <= 1e-6,
        format!(
            "max err {worst:.2e} on [-5, 50] (<= 1e-5); L = -1 constant {:.12} spread {spread:.1e} (<= 1e-6)",
            cal.constant
        ),
    ))
}

// ---------------------------------------------------------------------------------------------
// 8

fn hankel_recovery() -> Check {
    let s = Potential::fourier(vec![0.0, 0.3], vec![])?;
    let mut worst = 0.0f64;
    let mut pd = true;
    let mut roots = Vec::new();
    for poles in [vec![(2.0, 0.5)], vec![(1.0, 0.5), (4.0, 0.8)]] {
        let p = Problem::new(
            s.clone(),
            RationalBC::with_poles(0.0, 0.2, &poles)?,
            RationalBC::constant(0.0),
        );
        let data = solver(&p, 200).spectral_data(200)?;
        let d = poles.len();
        pd &= MomentTable::build(&data, d, 2000)?.hankel().cholesky().is_some();
        let mut found = recover_f_down(&data, d)?.real_roots(1e-8);
        found.sort_by(|a, b| a.partial_cmp(b).unwrap());
        if found.len() != d {
            return Ok((false, format!("{} real roots for d = {d}", found.len())));
        }
        for (r, (loc, _)) in found.iter().zip(&poles) {
            worst = worst.max((r - loc).abs());
        }
        roots.extend(found);
    }
    let shown: Vec<String> = roots.iter().map(|r| format!("{r:.9}")).collect();
    Ok((
        worst <= 1e-4 && pd,
        format!(
            "roots [{}], max err {worst:.1e} (<= 1e-4), hankel positive definite: {pd}",
            shown.join(", ")
        ),
    ))
}

// ---------------------------------------------------------------------------------------------
// 9

fn inverse_by_data() -> Check {
    let start = Instant::now();
    let p = Problem::new(
        Potential::fourier(vec![0.0, 0.3], vec![])?,
        RationalBC::affine(1.0, 0.5)?,
        RationalBC::constant(0.25),
    );
    let data = solver(&p, 25).spectral_data(25)?;
    let rec = inverse_spectral_data_with(&data, &InverseConfig::default())?;
    let d = rec.problem.s.l2_distance(&p.s);
    let c = rec
        .problem
        .f
        .coefficient_distance(&p.f)
        .max(rec.problem.big_f.coefficient_distance(&p.big_f));
    let t = start.elapsed().as_secs_f64();
    Ok((
        d <= 5e-3 && c <= 1e-3 && t <= 600.0,
        format!("L2 err {d:.2e} (<= 5e-3), coefficient err {c:.2e} (<= 1e-3), {t:.0}s (<= 600s)"),
    ))
}

// ---------------------------------------------------------------------------------------------
// 10

/// Spectra of `𝒫(s, f, F)` and `𝒫(s, f + α, F)`.
pub fn spectra_pair(p: &Problem, alpha: f64, count: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    let q = Problem::new(p.s.clone(), p.f.shift(alpha), p.big_f.clone());
    Ok((
        solver(p, count).eigenvalues(count)?,
        solver(&q, count).eigenvalues(count)?,
    ))
}

fn two_spectra() -> Check {
    let p = Problem::new(Potential::zero(), RationalBC::constant(0.0), RationalBC::Dirichlet);
    let (lambdas, mus) = spectra_pair(&p, 1.0, 40)?;
    let l = p.half_index_sum();
    let (nu, r) = estimate_nu_r(&lambdas, &mus, l)?;
    let cfg = InverseConfig::default();
    let inp = TwoSpectraInput {
        lambdas: lambdas.clone(),
        mus: mus.clone(),
        l,
        nu,
        r,
        pole_indices: vec![],
    };
    let res = two_spectra_inverse_with(&inp, &cfg)?;
    let s_norm = res.problem.s.l2_norm();
    let f_err = res.problem.f.coefficient_distance(&p.f);
    let a_err = (res.alpha - 1.0).abs();
    let (el, em) = two_spectra_residuals(&res.problem, res.alpha, &lambdas, &mus, 15, &cfg.solver)?;
    let d0 = s_norm <= 5e-3 && f_err <= 1e-3 && a_err <= 1e-3 && el.max(em) <= 1e-6;
    let mut detail = format!(
        "d = 0: |s| {s_norm:.1e}, f err {f_err:.1e}, alpha err {a_err:.1e} (<= 1e-3), spectra err {:.1e} (<= 1e-6)",
        el.max(em)
    );
    let d1 = match two_spectra_inverse_with(
        &TwoSpectraInput {
            pole_indices: vec![0],
            ..inp
        },
        &cfg,
    ) {
        Ok(res) => {
            let pole = res.problem.f.poles().first().map(|q| q.location).unwrap_or(f64::NAN);
            let (el, em) = two_spectra_residuals(&res.problem, res.alpha, &lambdas, &mus, 15, &cfg.solver)?;
            let target = res.poles.first().copied().unwrap_or(f64::NAN);
            detail += &format!("; d = 1: pole {pole} vs zero {target}, spectra err {:.1e}", el.max(em));
            (pole - target).abs() <= 1e-6 && el.max(em) <= 1e-6
        }
        Err(e) => {
            detail += &format!("; d = 1 rejected: {e}");
            false
        }
    };
    Ok((d0 && d1, detail))
}

// ---------------------------------------------------------------------------------------------
// 11

fn two_problem() -> Check {
    let cases = [
        (
            Problem::new(Potential::zero(), RationalBC::constant(0.0), RationalBC::Dirichlet),
            1.0,
        ),
        (
            Problem::new(
                Potential::fourier(vec![0.2, -0.1], vec![])?,
                RationalBC::with_poles(0.0, 0.1, &[(6.0, 0.7)])?,
                RationalBC::constant(0.3),
            ),
            0.7,
        ),
    ];
    let mut ok = true;
    let mut parts = Vec::new();
    for (p, alpha) in &cases {
        let r = two_problem_diagnostics(p, *alpha, 40)?;
        ok &= r.interlacing
            && r.identity_residual <= 1e-7
            && r.gamma_relative_error <= 1e-5
            && r.herglotz_samples == 100
            && r.herglotz_positive == 100
            && r.asymptotic_relative_error <= 0.1;
        parts.push(format!(
            "{} alpha {alpha}: identity {:.1e} (<= 1e-7), gamma {:.1e} (<= 1e-5), herglotz {}/{}, limit {:.6} vs {:.6} at n = {} ({:.1e} <= 0.1)",
            describe(p),
            r.identity_residual,
            r.gamma_relative_error,
            r.herglotz_positive,
            r.herglotz_samples,
            r.asymptotic_value,
            r.asymptotic_target,
            r.asymptotic_index,
            r.asymptotic_relative_error
        ));
    }
    Ok((ok, parts.join("; ")))
}

// ---------------------------------------------------------------------------------------------
// 12

fn symmetric() -> Check {
    let cfg = InverseConfig::default();
    let dd: Vec<f64> = (1..=25).map(|m| (m * m) as f64).collect();
    let rec = symmetric_inverse_with(&dd, -1, &cfg)?;
    let zero_norm = rec.problem.s.l2_norm();
    let dirichlet = rec.problem.f.is_dirichlet() && rec.problem.big_f.is_dirichlet();

    let p = Problem::new(
        Potential::fourier(vec![0.2], vec![])?,
        RationalBC::constant(0.0),
        RationalBC::constant(0.0),
    );
    let eigs = solver(&p, 25).eigenvalues(25)?;
    let rec = symmetric_inverse_with(&eigs, 0, &cfg)?;
    let d = rec.problem.s.l2_distance(&p.s);
    let defect = rec.problem.s.symmetry_defect();
    Ok((
        zero_norm <= 1e-3 && dirichlet && d <= 5e-3 && defect <= 1e-3,
        format!(
            "(n+1)^2: |s| {zero_norm:.1e} (<= 1e-3), dirichlet {dirichlet}; 0.2 cos x: L2 err {d:.1e} (<= 5e-3), defect {defect:.1e} (<= 1e-3)"
        ),
    ))
}

// ---------------------------------------------------------------------------------------------
// 13

/// `0.2 cos x + bump sin 4x · 1[x > π/2]`, piecewise linear on 4096 cells so the left half
/// depends on left nodes only.
fn half_perturbed(bump: f64) -> Result<Potential> {
    let cells = 4096;
    let x: Vec<f64> = (0..=cells).map(|i| PI * i as f64 / cells as f64).collect();
    let v = x
        .iter()
        .map(|&t| 0.2 * t.cos() + if t > 0.5 * PI { bump * (4.0 * t).sin() } else { 0.0 })
        .collect();
    Potential::piecewise_linear(x, v)
}

fn half_inverse() -> Check {
    let f = RationalBC::constant(0.2);
    let big_f = RationalBC::constant(-0.1);
    let p1 = Problem::new(half_perturbed(0.0)?, f.clone(), big_f.clone());
    let p2 = Problem::new(half_perturbed(0.1)?, f, big_f);
    let same = half_inverse_check(&p1, &p1, 20)?;
    let diff = half_inverse_check(&p1, &p2, 20)?;
    let zero = same.max_relative_gap == 0.0
        && same.left_distance == 0.0
        && same.right_distance == 0.0
        && same.f_distance == 0.0
        && same.big_f_distance == 0.0;
    Ok((
        zero && diff.max_relative_gap > 1e-7 && diff.left_distance <= 1e-12,
        format!(
            "identical: all zero {zero}; perturbed: gap {:.2e} (> 1e-7), left {:.1e}, right {:.2e}",
            diff.max_relative_gap, diff.left_distance, diff.right_distance
        ),
    ))
}
