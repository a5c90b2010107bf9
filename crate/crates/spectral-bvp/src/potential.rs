//! Zero-mean square-integrable potentials on [0, π].

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Raw representation before the mean is removed.
///
/// Fourier `cos[k]` and `sin[k]` multiply frequency `k + 1`. Grid values sit on a uniform mesh of
/// `[0, π]` including both endpoints and are interpolated by local cubics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum Basis {
    Fourier {
        #[serde(default)]
        cos: Vec<f64>,
        #[serde(default)]
        sin: Vec<f64>,
    },
    PiecewiseLinear {
        x: Vec<f64>,
        v: Vec<f64>,
    },
    Grid {
        values: Vec<f64>,
    },
}

/// A potential `s = raw - mean(raw)`; always has zero mean over `[0, π]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Basis", into = "Basis")]
pub struct Potential {
    basis: Basis,
    mean: f64,
}

impl TryFrom<Basis> for Potential {
    type Error = Error;
    fn try_from(b: Basis) -> Result<Self> {
        Potential::project_zero_mean(b)
    }
}

impl From<Potential> for Basis {
    fn from(p: Potential) -> Basis {
        p.basis
    }
}

/// Samples of a solution on an increasing grid covering `[0, π]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolutionTrace {
    pub grid: Vec<f64>,
    pub y: Vec<f64>,
    pub y_quasi: Vec<f64>,
    pub lambda: f64,
}

impl SolutionTrace {
    /// `∫ y²` by composite Simpson (uniform, even cell count) or trapezoid otherwise.
    pub fn integral_y_squared(&self) -> f64 {
        let n = self.grid.len() - 1;
        let h = (self.grid[n] - self.grid[0]) / n as f64;
        let sq = |i: usize| self.y[i] * self.y[i];
        if n.is_multiple_of(2) {
            let mut acc = sq(0) + sq(n);
            for i in 1..n {
                acc += if i % 2 == 1 { 4.0 } else { 2.0 } * sq(i);
            }
            acc * h / 3.0
        } else {
            (0..n)
                .map(|i| 0.5 * (sq(i) + sq(i + 1)) * (self.grid[i + 1] - self.grid[i]))
                .sum()
        }
    }

    pub fn max_abs_y(&self) -> f64 {
        self.y.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

impl Potential {
    pub fn zero() -> Self {
        Potential {
            basis: Basis::Fourier {
                cos: vec![],
                sin: vec![],
            },
            mean: 0.0,
        }
    }

    pub fn fourier(cos: Vec<f64>, sin: Vec<f64>) -> Result<Self> {
        Potential::project_zero_mean(Basis::Fourier { cos, sin })
    }

    pub fn piecewise_linear(x: Vec<f64>, v: Vec<f64>) -> Result<Self> {
        Potential::project_zero_mean(Basis::PiecewiseLinear { x, v })
    }

    pub fn grid(values: Vec<f64>) -> Result<Self> {
        Potential::project_zero_mean(Basis::Grid { values })
    }

    pub fn basis(&self) -> &Basis {
        &self.basis
    }

    /// Validates `b` and subtracts its mean.
    pub fn project_zero_mean(b: Basis) -> Result<Self> {
        let finite = |v: &[f64], name: &str| -> Result<()> {
            match v.iter().position(|x| !x.is_finite()) {
                Some(i) => Err(Error::validation(format!("{name}[{i}]"), "must be finite")),
                None => Ok(()),
            }
        };
        let mean = match &b {
            Basis::Fourier { cos, sin } => {
                finite(cos, "cos")?;
                finite(sin, "sin")?;
                sin.iter()
                    .enumerate()
                    .map(|(k, &c)| {
                        let f = (k + 1) as f64;
                        if (k + 1) % 2 == 1 {
                            2.0 * c / (f * PI)
                        } else {
                            0.0
                        }
                    })
                    .sum()
            }
            Basis::PiecewiseLinear { x, v } => {
                finite(x, "x")?;
                finite(v, "v")?;
                if x.len() != v.len() {
                    return Err(Error::validation("v", "length must match x"));
                }
                if x.len() < 2 {
                    return Err(Error::validation("x", "need at least two breakpoints"));
                }
                if x[0] != 0.0 || (x[x.len() - 1] - PI).abs() > 1e-12 {
                    return Err(Error::validation("x", "breakpoints must start at 0 and end at π"));
                }
                if let Some(i) = (1..x.len()).find(|&i| !(x[i] > x[i - 1])) {
                    return Err(Error::validation(
                        format!("x[{i}]"),
                        "breakpoints must be strictly increasing",
                    ));
                }
                let integral: f64 = (1..x.len()).map(|i| 0.5 * (v[i] + v[i - 1]) * (x[i] - x[i - 1])).sum();
                integral / PI
            }
            Basis::Grid { values } => {
                finite(values, "values")?;
                if values.len() < 4 {
                    return Err(Error::validation("values", "need at least four samples"));
                }
                grid_integral(values) / PI
            }
        };
        Ok(Potential { basis: b, mean })
    }

    /// `s(x)`; domain error outside `[0, π]`.
    pub fn eval(&self, x: f64) -> Result<f64> {
        if !(-1e-12..=PI + 1e-12).contains(&x) {
            return Err(Error::Domain(format!("potential evaluated at x = {x} outside [0, π]")));
        }
        Ok(self.eval_unchecked(x.clamp(0.0, PI)))
    }

    pub fn eval_unchecked(&self, x: f64) -> f64 {
        raw_eval(&self.basis, x) - self.mean
    }

    /// Values on `n + 1` uniform nodes of `[0, π]`.
    pub fn sample(&self, n: usize) -> Vec<f64> {
        (0..=n).map(|i| self.eval_unchecked(PI * i as f64 / n as f64)).collect()
    }

    /// Breakpoints where the potential is only continuous.
    pub fn breakpoints(&self) -> &[f64] {
        match &self.basis {
            Basis::PiecewiseLinear { x, .. } => x,
            _ => &[],
        }
    }

    pub fn l2_norm(&self) -> f64 {
        self.l2_norm_on(0.0, PI)
    }

    pub fn l2_norm_on(&self, a: f64, b: f64) -> f64 {
        gauss_integral(|x| self.eval_unchecked(x).powi(2), a, b).sqrt()
    }

    pub fn l2_distance(&self, other: &Potential) -> f64 {
        self.l2_distance_on(other, 0.0, PI)
    }

    pub fn l2_distance_on(&self, other: &Potential, a: f64, b: f64) -> f64 {
        gauss_integral(|x| (self.eval_unchecked(x) - other.eval_unchecked(x)).powi(2), a, b).sqrt()
    }

    /// `‖s(x) + s(π - x)‖`; zero for potentials odd about `π/2`.
    pub fn symmetry_defect(&self) -> f64 {
        gauss_integral(
            |x| (self.eval_unchecked(x) + self.eval_unchecked(PI - x)).powi(2),
            0.0,
            PI,
        )
        .sqrt()
    }

    /// `x ↦ s(π - x)`, negated; the potential of the reflected problem.
    pub fn reflected(&self) -> Potential {
        let n = 4096;
        let values = (0..=n)
            .map(|i| -self.eval_unchecked(PI - PI * i as f64 / n as f64))
            .collect();
        Potential::grid(values).expect("finite samples")
    }

    /// Least-squares Fourier fit of this potential sampled on `samples + 1` uniform nodes.
    pub fn fit_fourier(&self, n_cos: usize, n_sin: usize, samples: usize) -> Result<Potential> {
        let xs: Vec<f64> = (0..=samples).map(|i| PI * i as f64 / samples as f64).collect();
        let m = n_cos + n_sin;
        let mut a = nalgebra::DMatrix::<f64>::zeros(xs.len(), m + 1);
        let mut rhs = nalgebra::DVector::<f64>::zeros(xs.len());
        for (i, &x) in xs.iter().enumerate() {
            for k in 0..n_cos {
                a[(i, k)] = ((k + 1) as f64 * x).cos();
            }
            for k in 0..n_sin {
                a[(i, n_cos + k)] = ((k + 1) as f64 * x).sin();
            }
            a[(i, m)] = 1.0;
            rhs[i] = self.eval_unchecked(x);
        }
        let sol = a
            .svd(true, true)
            .solve(&rhs, 1e-14)
            .map_err(|e| Error::Conditioning(e.to_string()))?;
        Potential::fourier(sol.as_slice()[..n_cos].to_vec(), sol.as_slice()[n_cos..m].to_vec())
    }

    /// Darboux-transformed potential `-s - 2 v⁽¹⁾/v + (2/π) ln(v(π)/v(0))` on the trace grid.
    ///
    /// The trace must be sign-definite on a uniform grid of `[0, π]`.
    pub fn darboux_potential(&self, v: &SolutionTrace) -> Result<Potential> {
        let n = v.grid.len() - 1;
        if n < 3 || v.grid[0] != 0.0 || (v.grid[n] - PI).abs() > 1e-12 {
            return Err(Error::validation("trace.grid", "must be a uniform grid of [0, π]"));
        }
        let sign = v.y[0].signum();
        if v.y[0] == 0.0 || v.y[n] == 0.0 || v.y[n].signum() != sign {
            return Err(Error::Singular(format!(
                "v(0) = {}, v(π) = {} must be nonzero with equal sign",
                v.y[0], v.y[n]
            )));
        }
        if let Some(i) = v.y.iter().position(|&y| y == 0.0 || y.signum() != sign) {
            return Err(Error::Singular(format!(
                "v vanishes or changes sign near x = {}",
                v.grid[i]
            )));
        }
        let c = 2.0 / PI * (v.y[n] / v.y[0]).ln();
        let values: Vec<f64> = (0..=n)
            .map(|i| -self.eval_unchecked(v.grid[i]) - 2.0 * v.y_quasi[i] / v.y[i] + c)
            .collect();
        if let Some(i) = values.iter().position(|x| !x.is_finite()) {
            return Err(Error::Singular(format!(
                "non-finite potential value at x = {}",
                v.grid[i]
            )));
        }
        let raw_mean = grid_integral(&values) / PI;
        if raw_mean.abs() > 1e-6 * (1.0 + values.iter().fold(0.0f64, |m, x| m.max(x.abs()))) {
            return Err(Error::Consistency(format!("transformed potential has mean {raw_mean}")));
        }
        Potential::grid(values)
    }
}

fn raw_eval(b: &Basis, x: f64) -> f64 {
    match b {
        Basis::Fourier { cos, sin } => {
            let mut acc = 0.0;
            if !cos.is_empty() || !sin.is_empty() {
                let (s1, c1) = x.sin_cos();
                let (mut cp, mut sp) = (1.0, 0.0);
                let (mut ck, mut sk) = (c1, s1);
                let n = cos.len().max(sin.len());
                for k in 0..n {
                    if let Some(a) = cos.get(k) {
                        acc += a * ck;
                    }
                    if let Some(b) = sin.get(k) {
                        acc += b * sk;
                    }
                    let cn = 2.0 * c1 * ck - cp;
                    let sn = 2.0 * c1 * sk - sp;
                    cp = ck;
                    sp = sk;
                    ck = cn;
                    sk = sn;
                }
            }
            acc
        }
        Basis::PiecewiseLinear { x: xs, v } => {
            let i = match xs.binary_search_by(|p| p.partial_cmp(&x).unwrap()) {
                Ok(i) => return v[i],
                Err(i) => i.clamp(1, xs.len() - 1),
            };
            let t = (x - xs[i - 1]) / (xs[i] - xs[i - 1]);
            v[i - 1] + t * (v[i] - v[i - 1])
        }
        Basis::Grid { values } => grid_interp(values, x),
    }
}

/// Local cubic Lagrange interpolation on the uniform mesh `iπ/n`.
fn grid_interp(values: &[f64], x: f64) -> f64 {
    let n = values.len() - 1;
    let u = x / PI * n as f64;
    let cell = (u.floor().max(0.0) as usize).min(n - 1);
    let j = cell.saturating_sub(1).min(n - 3);
    let t = u - j as f64;
    let w0 = -(t - 1.0) * (t - 2.0) * (t - 3.0) / 6.0;
    let w1 = t * (t - 2.0) * (t - 3.0) / 2.0;
    let w2 = -t * (t - 1.0) * (t - 3.0) / 2.0;
    let w3 = t * (t - 1.0) * (t - 2.0) / 6.0;
    w0 * values[j] + w1 * values[j + 1] + w2 * values[j + 2] + w3 * values[j + 3]
}

/// Exact integral of the [`grid_interp`] interpolant over `[0, π]`.
fn grid_integral(values: &[f64]) -> f64 {
    let n = values.len() - 1;
    let h = PI / n as f64;
    let mut acc = 0.0;
    for cell in 0..n {
        let (j, w): (usize, [f64; 4]) = if cell == 0 {
            (0, [9.0, 19.0, -5.0, 1.0])
        } else if cell == n - 1 {
            (n - 3, [1.0, -5.0, 19.0, 9.0])
        } else {
            (cell - 1, [-1.0, 13.0, 13.0, -1.0])
        };
        acc += (0..4).map(|k| w[k] * values[j + k]).sum::<f64>() / 24.0;
    }
    acc * h
}

/// Composite 3-point Gauss-Legendre quadrature on 4096 cells.
pub(crate) fn gauss_integral(f: impl Fn(f64) -> f64, a: f64, b: f64) -> f64 {
    const CELLS: usize = 4096;
    let g = (0.6f64).sqrt();
    let h = (b - a) / CELLS as f64;
    let mut acc = 0.0;
    for i in 0..CELLS {
        let mid = a + (i as f64 + 0.5) * h;
        acc += (5.0 * f(mid - 0.5 * h * g) + 8.0 * f(mid) + 5.0 * f(mid + 0.5 * h * g)) / 18.0;
    }
    acc * h
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fourier_indexing_starts_at_frequency_one() {
        let s = Potential::fourier(vec![0.0, 1.0], vec![]).unwrap();
        assert!((s.eval(0.0).unwrap() - 1.0).abs() < 1e-15);
        assert!((s.eval(PI / 2.0).unwrap() + 1.0).abs() < 1e-14);
    }

    #[test]
    fn sine_terms_have_their_mean_removed() {
        let s = Potential::fourier(vec![], vec![1.0]).unwrap();
        assert!((s.eval(PI / 2.0).unwrap() - (1.0 - 2.0 / PI)).abs() < 1e-14);
        assert!(gauss_integral(|x| s.eval_unchecked(x), 0.0, PI).abs() < 1e-12);
    }

    #[test]
    fn eval_outside_domain_fails() {
        assert!(Potential::zero().eval(-0.1).is_err());
        assert!(Potential::zero().eval(PI + 0.1).is_err());
    }

    #[test]
    fn piecewise_linear_validation_and_mean() {
        assert!(Potential::piecewise_linear(vec![0.0, 1.0], vec![0.0, 1.0]).is_err());
        let s = Potential::piecewise_linear(vec![0.0, 1.0, PI], vec![1.0, -1.0, 2.0]).unwrap();
        assert!(gauss_integral(|x| s.eval_unchecked(x), 0.0, PI).abs() < 1e-6);
    }

    #[test]
    fn grid_interpolation_is_fourth_order_and_zero_mean() {
        let exact = |x: f64| (2.0 * x).cos() + 0.3 * x;
        let err = |n: usize| {
            let s = Potential::grid((0..=n).map(|i| exact(PI * i as f64 / n as f64)).collect()).unwrap();
            let m = 0.3 * PI / 2.0;
            (0..1000)
                .map(|i| {
                    let x = PI * (i as f64 + 0.37) / 1000.0;
                    (s.eval_unchecked(x) - (exact(x) - m)).abs()
                })
                .fold(0.0, f64::max)
        };
        let (e1, e2) = (err(64), err(128));
        assert!(e1 / e2 > 12.0, "ratio {}", e1 / e2);
        let s = Potential::grid((0..=64).map(|i| exact(PI * i as f64 / 64.0)).collect()).unwrap();
        assert!(grid_integral(&s.sample(64)).abs() < 1e-12);
    }

    #[test]
    fn symmetry_defect_of_cos2x() {
        let s = Potential::fourier(vec![0.0, 1.0], vec![]).unwrap();
        assert!((s.symmetry_defect() - (2.0 * PI).sqrt()).abs() < 1e-9);
        let odd = Potential::fourier(vec![1.0, 0.0, 0.5], vec![]).unwrap();
        assert!(odd.symmetry_defect() < 1e-12);
    }

    #[test]
    fn fourier_refit_round_trip() {
        let s = Potential::fourier(vec![0.3, -0.2, 0.05], vec![0.1, 0.0, -0.07]).unwrap();
        let grid = Potential::grid(s.sample(2048)).unwrap();
        let back = grid.fit_fourier(3, 3, 2048).unwrap();
        if let (Basis::Fourier { cos: a, sin: b }, Basis::Fourier { cos: c, sin: d }) = (s.basis(), back.basis()) {
            for (x, y) in a.iter().zip(c).chain(b.iter().zip(d)) {
                assert!((x - y).abs() < 1e-9, "{x} vs {y}");
            }
        } else {
            panic!("unexpected basis");
        }
    }

    #[test]
    fn darboux_of_constant_trace() {
        let n = 64;
        let trace = SolutionTrace {
            grid: (0..=n).map(|i| PI * i as f64 / n as f64).collect(),
            y: vec![1.0; n + 1],
            y_quasi: vec![0.0; n + 1],
            lambda: 0.0,
        };
        let s = Potential::zero().darboux_potential(&trace).unwrap();
        assert!(s.l2_norm() < 1e-14);
        let mut bad = trace.clone();
        bad.y[10] = -0.5;
        assert!(matches!(
            Potential::zero().darboux_potential(&bad),
            Err(Error::Singular(_))
        ));
    }

    #[test]
    fn json_formats() {
        let s: Potential = serde_json::from_str(r#"{"type":"fourier","cos":[0.3],"sin":[]}"#).unwrap();
        assert!((s.eval(0.0).unwrap() - 0.3).abs() < 1e-15);
        let t: Potential = serde_json::from_str(&serde_json::to_string(&s).unwrap()).unwrap();
        assert_eq!(s, t);
        assert!(serde_json::from_str::<Potential>(r#"{"type":"piecewise_linear","x":[0,1],"v":[0,1]}"#).is_err());
    }
}
