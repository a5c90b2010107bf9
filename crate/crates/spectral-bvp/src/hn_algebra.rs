//! Rational boundary functions in pole-residue form and the Θ transform acting on them.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// Dense real polynomial, coefficients in ascending degree.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RealPolynomial {
    pub coeffs: Vec<f64>,
}

impl RealPolynomial {
    pub fn new(coeffs: Vec<f64>) -> Self {
        RealPolynomial { coeffs }
    }

    pub fn zero() -> Self {
        RealPolynomial { coeffs: vec![] }
    }

    pub fn constant(c: f64) -> Self {
        RealPolynomial { coeffs: vec![c] }
    }

    /// Drops trailing zero coefficients.
    pub fn trimmed(mut self) -> Self {
        while self.coeffs.last() == Some(&0.0) {
            self.coeffs.pop();
        }
        self
    }

    /// `a - λ`
    pub fn linear_factor(a: f64) -> Self {
        RealPolynomial { coeffs: vec![a, -1.0] }
    }

    /// `∏ (r - λ)` over `roots`.
    pub fn from_roots(roots: &[f64]) -> Self {
        roots.iter().fold(RealPolynomial::constant(1.0), |p, &r| {
            p.mul(&RealPolynomial::linear_factor(r))
        })
    }

    /// Degree, or -1 for the zero polynomial.
    pub fn degree(&self) -> i32 {
        self.coeffs
            .iter()
            .rposition(|&c| c != 0.0)
            .map(|d| d as i32)
            .unwrap_or(-1)
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, &c| acc * x + c)
    }

    pub fn derivative(&self) -> Self {
        RealPolynomial {
            coeffs: self
                .coeffs
                .iter()
                .enumerate()
                .skip(1)
                .map(|(k, &c)| k as f64 * c)
                .collect(),
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        let n = self.coeffs.len().max(other.coeffs.len());
        let coeffs = (0..n)
            .map(|k| self.coeffs.get(k).copied().unwrap_or(0.0) + other.coeffs.get(k).copied().unwrap_or(0.0))
            .collect();
        RealPolynomial { coeffs }
    }

    pub fn scale(&self, c: f64) -> Self {
        RealPolynomial {
            coeffs: self.coeffs.iter().map(|&a| a * c).collect(),
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.scale(-1.0))
    }

    pub fn mul(&self, other: &Self) -> Self {
        if self.coeffs.is_empty() || other.coeffs.is_empty() {
            return RealPolynomial::zero();
        }
        let mut coeffs = vec![0.0; self.coeffs.len() + other.coeffs.len() - 1];
        for (i, &a) in self.coeffs.iter().enumerate() {
            for (j, &b) in other.coeffs.iter().enumerate() {
                coeffs[i + j] += a * b;
            }
        }
        RealPolynomial { coeffs }
    }

    /// Exact division by `(λ - a)`; the remainder is dropped.
    pub fn deflate(&self, a: f64) -> Self {
        let d = self.degree();
        if d < 1 {
            return RealPolynomial::zero();
        }
        let d = d as usize;
        let mut q = vec![0.0; d];
        let mut carry = 0.0;
        for k in (1..=d).rev() {
            carry = self.coeffs[k] + carry * a;
            q[k - 1] = carry;
        }
        RealPolynomial { coeffs: q }
    }

    /// Real roots, ascending. Complex pairs with imaginary part above `imag_tol` are dropped.
    pub fn real_roots(&self, imag_tol: f64) -> Vec<f64> {
        let d = self.degree();
        if d < 1 {
            return vec![];
        }
        let d = d as usize;
        let lead = self.coeffs[d];
        let mut comp = nalgebra::DMatrix::<f64>::zeros(d, d);
        for i in 1..d {
            comp[(i, i - 1)] = 1.0;
        }
        for i in 0..d {
            comp[(i, d - 1)] = -self.coeffs[i] / lead;
        }
        let dp = self.derivative();
        let mut roots: Vec<f64> = comp
            .complex_eigenvalues()
            .iter()
            .filter(|z| z.im.abs() <= imag_tol * (1.0 + z.re.abs()))
            .map(|z| {
                let mut x = z.re;
                for _ in 0..8 {
                    let dv = dp.eval(x);
                    if dv == 0.0 {
                        break;
                    }
                    let step = self.eval(x) / dv;
                    x -= step;
                    if step.abs() <= 1e-16 * (1.0 + x.abs()) {
                        break;
                    }
                }
                x
            })
            .collect();
        roots.sort_by(|a, b| a.partial_cmp(b).unwrap());
        roots
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Pole {
    pub location: f64,
    pub residue: f64,
}

/// `h0 λ + h + Σ δ_k / (h_k - λ)`, or the Dirichlet symbol ∞.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", try_from = "RawBC")]
pub enum RationalBC {
    Dirichlet,
    Rational { h0: f64, h: f64, poles: Vec<Pole> },
}

#[derive(Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
enum RawBC {
    Dirichlet,
    Rational {
        #[serde(default)]
        h0: f64,
        h: f64,
        #[serde(default)]
        poles: Vec<Pole>,
    },
}

impl TryFrom<RawBC> for RationalBC {
    type Error = Error;
    fn try_from(raw: RawBC) -> Result<Self> {
        match raw {
            RawBC::Dirichlet => Ok(RationalBC::Dirichlet),
            RawBC::Rational { h0, h, poles } => RationalBC::rational(h0, h, poles),
        }
    }
}

/// Which side of `τ = f(μ)` a Θ transform falls on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ThetaBranch {
    /// `τ = f(μ)`, index drops by one.
    Equal,
    /// `τ > f(μ)`, index rises by one.
    Greater,
}

/// Absolute tolerance for classifying `τ = f(μ)`.
pub const BRANCH_TOL: f64 = 1e-10;

impl RationalBC {
    /// Validated constructor.
    pub fn rational(h0: f64, h: f64, poles: Vec<Pole>) -> Result<Self> {
        if !h0.is_finite() || h0 < 0.0 {
            return Err(Error::validation("h0", format!("must be finite and >= 0, got {h0}")));
        }
        if !h.is_finite() {
            return Err(Error::validation("h", "must be finite"));
        }
        for (k, p) in poles.iter().enumerate() {
            if !p.location.is_finite() {
                return Err(Error::validation(format!("poles[{k}].location"), "must be finite"));
            }
            if !(p.residue > 0.0) || !p.residue.is_finite() {
                return Err(Error::validation(
                    format!("poles[{k}].residue"),
                    format!("must be finite and > 0, got {}", p.residue),
                ));
            }
            if k > 0 && !(p.location > poles[k - 1].location) {
                return Err(Error::validation(
                    format!("poles[{k}].location"),
                    "pole locations must be strictly increasing",
                ));
            }
        }
        Ok(RationalBC::Rational { h0, h, poles })
    }

    pub fn constant(h: f64) -> Self {
        RationalBC::Rational {
            h0: 0.0,
            h,
            poles: vec![],
        }
    }

    pub fn affine(h0: f64, h: f64) -> Result<Self> {
        RationalBC::rational(h0, h, vec![])
    }

    /// Convenience constructor from `(location, residue)` pairs.
    pub fn with_poles(h0: f64, h: f64, poles: &[(f64, f64)]) -> Result<Self> {
        RationalBC::rational(
            h0,
            h,
            poles
                .iter()
                .map(|&(location, residue)| Pole { location, residue })
                .collect(),
        )
    }

    pub fn is_dirichlet(&self) -> bool {
        matches!(self, RationalBC::Dirichlet)
    }

    /// True for constant functions (index 0).
    pub fn is_constant(&self) -> bool {
        self.index() == 0
    }

    pub fn poles(&self) -> &[Pole] {
        match self {
            RationalBC::Dirichlet => &[],
            RationalBC::Rational { poles, .. } => poles,
        }
    }

    /// `2d + [h0 > 0]`, and -1 for Dirichlet.
    pub fn index(&self) -> i32 {
        match self {
            RationalBC::Dirichlet => -1,
            RationalBC::Rational { h0, poles, .. } => 2 * poles.len() as i32 + if *h0 > 0.0 { 1 } else { 0 },
        }
    }

    /// Leading scale `h0'` of the denominator.
    fn h0_prime(h0: f64) -> f64 {
        if h0 > 0.0 {
            1.0 / h0
        } else {
            1.0
        }
    }

    /// Numerator and denominator `(f↑, f↓)` with `f = f↑ / f↓`.
    pub fn up_down(&self) -> (RealPolynomial, RealPolynomial) {
        match self {
            RationalBC::Dirichlet => (RealPolynomial::constant(-1.0), RealPolynomial::zero()),
            RationalBC::Rational { h0, h, poles } => {
                let hp = Self::h0_prime(*h0);
                let locs: Vec<f64> = poles.iter().map(|p| p.location).collect();
                let down = RealPolynomial::from_roots(&locs).scale(hp);
                let mut up = RealPolynomial::new(vec![*h, *h0]).mul(&down);
                for (k, p) in poles.iter().enumerate() {
                    let others: Vec<f64> = locs
                        .iter()
                        .enumerate()
                        .filter(|&(j, _)| j != k)
                        .map(|(_, &l)| l)
                        .collect();
                    up = up.add(&RealPolynomial::from_roots(&others).scale(hp * p.residue));
                }
                (up.trimmed(), down.trimmed())
            }
        }
    }

    /// `(f↑(λ), f↓(λ))` without building the polynomials.
    pub fn up_down_at(&self, lambda: f64) -> (f64, f64) {
        match self {
            RationalBC::Dirichlet => (-1.0, 0.0),
            RationalBC::Rational { h0, h, poles } => {
                let hp = Self::h0_prime(*h0);
                let down: f64 = poles.iter().map(|p| p.location - lambda).product::<f64>();
                let mut up = (h0 * lambda + h) * down;
                for (k, p) in poles.iter().enumerate() {
                    let rest: f64 = poles
                        .iter()
                        .enumerate()
                        .filter(|&(j, _)| j != k)
                        .map(|(_, q)| q.location - lambda)
                        .product();
                    up += p.residue * rest;
                }
                (hp * up, hp * down)
            }
        }
    }

    /// `f↑' f↓ - f↑ f↓'` at `λ`. Equals `f'(λ) f↓(λ)^2` away from poles.
    pub fn wronskian_term(&self, lambda: f64) -> f64 {
        match self {
            RationalBC::Dirichlet => 0.0,
            RationalBC::Rational { .. } => {
                let (u, d) = self.up_down();
                u.derivative().eval(lambda) * d.eval(lambda) - u.eval(lambda) * d.derivative().eval(lambda)
            }
        }
    }

    /// `f(λ)`; infinite for Dirichlet and at poles.
    pub fn eval(&self, lambda: f64) -> f64 {
        match self {
            RationalBC::Dirichlet => f64::INFINITY,
            RationalBC::Rational { h0, h, poles } => {
                let mut v = h0 * lambda + h;
                for p in poles {
                    if p.location == lambda {
                        return f64::INFINITY;
                    }
                    v += p.residue / (p.location - lambda);
                }
                v
            }
        }
    }

    /// `f'(λ) = h0 + Σ δ_k / (h_k - λ)^2`.
    pub fn eval_deriv(&self, lambda: f64) -> f64 {
        match self {
            RationalBC::Dirichlet => 0.0,
            RationalBC::Rational { h0, poles, .. } => {
                let mut v = *h0;
                for p in poles {
                    if p.location == lambda {
                        return f64::INFINITY;
                    }
                    v += p.residue / (p.location - lambda).powi(2);
                }
                v
            }
        }
    }

    /// Smallest pole; `+∞` when there is none.
    pub fn smallest_pole(&self) -> f64 {
        self.poles().first().map(|p| p.location).unwrap_or(f64::INFINITY)
    }

    /// Number of poles `<= λ`.
    pub fn pole_count(&self, lambda: f64) -> usize {
        self.poles().iter().filter(|p| p.location <= lambda).count()
    }

    /// `f + c`.
    pub fn shift(&self, c: f64) -> Self {
        match self {
            RationalBC::Dirichlet => RationalBC::Dirichlet,
            RationalBC::Rational { h0, h, poles } => RationalBC::Rational {
                h0: *h0,
                h: h + c,
                poles: poles.clone(),
            },
        }
    }

    /// Partial order: `f(λ) <= g(λ)` for all `λ` below both smallest poles, with `∞` the least element.
    pub fn precedes(&self, g: &RationalBC) -> bool {
        let (fh0, fh) = match self {
            RationalBC::Dirichlet => return true,
            RationalBC::Rational { h0, h, .. } => (*h0, *h),
        };
        let (gh0, gh) = match g {
            RationalBC::Dirichlet => return false,
            RationalBC::Rational { h0, h, .. } => (*h0, *h),
        };
        // f - g ~ (fh0 - gh0) λ + (fh - gh) as λ → -∞.
        if fh0 < gh0 || (fh0 == gh0 && fh > gh + 1e-12 * (1.0 + gh.abs())) {
            return false;
        }
        let m = self.smallest_pole().min(g.smallest_pole());
        if m.is_infinite() && (fh0 > gh0 || (fh0 == gh0 && fh > gh + 1e-12 * (1.0 + gh.abs()))) {
            return false;
        }
        let ok = |l: f64| {
            let a = self.eval(l);
            let b = g.eval(l);
            a <= b + 1e-12 * (1.0 + a.abs().max(b.abs()))
        };
        const SAMPLES: usize = 256;
        if m.is_finite() {
            // Log-spaced approach to the pole from below, and a coarse sweep over (-1e6, m).
            for i in 0..SAMPLES / 2 {
                let t = -10.0 + 16.0 * i as f64 / (SAMPLES / 2 - 1) as f64;
                if !ok(m - 10f64.powf(t)) {
                    return false;
                }
            }
            for i in 0..SAMPLES / 2 {
                let l = -1e6 + (m + 1e6) * i as f64 / (SAMPLES / 2) as f64;
                if l < m && !ok(l) {
                    return false;
                }
            }
            true
        } else {
            (0..SAMPLES).all(|i| {
                let t = -6.0 + 12.0 * i as f64 / (SAMPLES - 1) as f64;
                ok(10f64.powf(t)) && ok(-10f64.powf(t))
            })
        }
    }

    /// Θ transform: `(μ - λ) / (f(λ) - τ) + ρ`.
    ///
    /// Requires `μ < π̊(f)` and, for `ind f >= 0`, `τ >= f(μ)`. The branch is classified with
    /// [`BRANCH_TOL`] unless given explicitly.
    pub fn theta(&self, mu: f64, tau: f64, rho: f64, branch: Option<ThetaBranch>) -> Result<Self> {
        let (h0, h, poles) = match self {
            RationalBC::Dirichlet => return Ok(RationalBC::constant(rho)),
            RationalBC::Rational { h0, h, poles } => (*h0, *h, poles),
        };
        if !(mu.is_finite() && tau.is_finite() && rho.is_finite()) {
            return Err(Error::validation("theta", "μ, τ, ρ must be finite"));
        }
        if !(mu < self.smallest_pole()) {
            return Err(Error::Domain(format!(
                "Θ requires μ < smallest pole, got μ = {mu}, pole = {}",
                self.smallest_pole()
            )));
        }
        let f_mu = self.eval(mu);
        let branch = match branch {
            Some(b) => b,
            None => {
                if (tau - f_mu).abs() <= BRANCH_TOL {
                    ThetaBranch::Equal
                } else if tau > f_mu {
                    ThetaBranch::Greater
                } else {
                    return Err(Error::Domain(format!(
                        "Θ requires τ >= f(μ), got τ = {tau}, f(μ) = {f_mu}"
                    )));
                }
            }
        };
        if branch == ThetaBranch::Greater && !(tau > f_mu) {
            return Err(Error::Domain(format!(
                "Θ branch τ > f(μ) violated: τ = {tau}, f(μ) = {f_mu}"
            )));
        }
        if h0 == 0.0 && poles.is_empty() {
            return Ok(match branch {
                ThetaBranch::Equal => RationalBC::Dirichlet,
                // (μ - λ) / (h - τ) + ρ
                ThetaBranch::Greater => RationalBC::Rational {
                    h0: 1.0 / (tau - h),
                    h: rho - mu / (tau - h),
                    poles: vec![],
                },
            });
        }

        let g = |l: f64| self.eval(l) - tau;
        let mut new_poles: Vec<f64> = Vec::with_capacity(poles.len() + 1);
        let d = poles.len();
        if d == 0 {
            // h0 > 0: single root (τ - h) / h0, which is μ on the equal branch.
            if branch == ThetaBranch::Greater {
                new_poles.push((tau - h) / h0);
            }
        } else {
            if branch == ThetaBranch::Greater {
                new_poles.push(bisect_increasing(&g, mu, poles[0].location));
            }
            for k in 0..d - 1 {
                new_poles.push(bisect_increasing(&g, poles[k].location, poles[k + 1].location));
            }
            let last = poles[d - 1].location;
            let mut hi = last + 1.0;
            let mut step = 1.0;
            let mut found = false;
            for _ in 0..2000 {
                if g(hi) > 0.0 {
                    found = true;
                    break;
                }
                if h0 == 0.0 && g(hi) < 0.0 && hi > last + 1e8 {
                    break;
                }
                step *= 2.0;
                hi = last + step;
            }
            if found {
                new_poles.push(bisect_increasing(&g, last, hi));
            }
        }
        let pole_list: Vec<Pole> = new_poles
            .iter()
            .map(|&p| Pole {
                location: p,
                residue: (p - mu) / self.eval_deriv(p),
            })
            .collect();
        let (nh0, nh) = if h0 > 0.0 {
            (0.0, rho - 1.0 / h0)
        } else {
            let sum_delta: f64 = poles.iter().map(|p| p.residue).sum();
            let t = tau - h;
            (1.0 / t, rho - mu / t - sum_delta / (t * t))
        };
        for (k, p) in pole_list.iter().enumerate() {
            if !(p.residue > 0.0) || (k > 0 && !(p.location > pole_list[k - 1].location)) {
                return Err(Error::Consistency(format!(
                    "Θ produced invalid pole {k} at {} with residue {}",
                    p.location, p.residue
                )));
            }
        }
        Ok(RationalBC::Rational {
            h0: nh0,
            h: nh,
            poles: pole_list,
        })
    }

    /// Numerator/denominator of `Θ(μ, τ, ρ, f)` from the closed polynomial formulas.
    pub fn theta_up_down(&self, mu: f64, tau: f64, rho: f64, branch: ThetaBranch) -> (RealPolynomial, RealPolynomial) {
        let (up, down) = self.up_down();
        // λ - μ + τρ
        let lin = RealPolynomial::new(vec![tau * rho - mu, 1.0]);
        match branch {
            ThetaBranch::Greater => (
                up.scale(-rho).add(&lin.mul(&down)),
                up.scale(-1.0).add(&down.scale(tau)),
            ),
            ThetaBranch::Equal => (
                up.scale(rho).sub(&lin.mul(&down)).deflate(mu),
                up.sub(&down.scale(tau)).deflate(mu),
            ),
        }
    }

    /// Maximum absolute difference of coefficients; infinite when the structures differ.
    pub fn coefficient_distance(&self, other: &RationalBC) -> f64 {
        match (self, other) {
            (RationalBC::Dirichlet, RationalBC::Dirichlet) => 0.0,
            (
                RationalBC::Rational {
                    h0: a0,
                    h: a,
                    poles: ap,
                },
                RationalBC::Rational {
                    h0: b0,
                    h: b,
                    poles: bp,
                },
            ) if ap.len() == bp.len() && ((*a0 > 0.0) == (*b0 > 0.0)) => {
                let mut m = (a0 - b0).abs().max((a - b).abs());
                for (p, q) in ap.iter().zip(bp) {
                    m = m
                        .max((p.location - q.location).abs())
                        .max((p.residue - q.residue).abs());
                }
                m
            }
            _ => f64::INFINITY,
        }
    }
}

/// Root of an increasing function on `(a, b)` that is negative near `a` and positive near `b`.
/// The endpoints themselves are never evaluated.
fn bisect_increasing(g: &dyn Fn(f64) -> f64, a: f64, b: f64) -> f64 {
    let (mut lo, mut hi) = (a, b);
    for _ in 0..400 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let v = g(mid);
        if v == 0.0 {
            return mid;
        }
        if v < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}
