//! Scalar helpers shared across modules.

use crate::error::{Error, Result};

/// Brent root finder on a sign-changing bracket `[a, b]` with known `fa`, `fb`.
pub fn brent(
    f: &mut dyn FnMut(f64) -> f64,
    mut a: f64,
    mut b: f64,
    mut fa: f64,
    mut fb: f64,
    xtol: f64,
    max_iter: usize,
) -> Result<f64> {
    if fa == 0.0 {
        return Ok(a);
    }
    if fb == 0.0 {
        return Ok(b);
    }
    if fa.signum() == fb.signum() {
        return Err(Error::BracketExhausted(format!(
            "no sign change on [{a}, {b}]: f = {fa}, {fb}"
        )));
    }
    let (mut c, mut fc) = (a, fa);
    let mut d = b - a;
    let mut e = d;
    for _ in 0..max_iter {
        if fb.signum() == fc.signum() {
            c = a;
            fc = fa;
            d = b - a;
            e = d;
        }
        if fc.abs() < fb.abs() {
            a = b;
            b = c;
            c = a;
            fa = fb;
            fb = fc;
            fc = fa;
        }
        let tol = 2.0 * f64::EPSILON * b.abs() + 0.5 * xtol;
        let m = 0.5 * (c - b);
        if m.abs() <= tol || fb == 0.0 {
            return Ok(b);
        }
        if e.abs() >= tol && fa.abs() > fb.abs() {
            let s = fb / fa;
            let (mut p, mut q);
            if a == c {
                p = 2.0 * m * s;
                q = 1.0 - s;
            } else {
                let qq = fa / fc;
                let r = fb / fc;
                p = s * (2.0 * m * qq * (qq - r) - (b - a) * (r - 1.0));
                q = (qq - 1.0) * (r - 1.0) * (s - 1.0);
            }
            if p > 0.0 {
                q = -q;
            } else {
                p = -p;
            }
            if 2.0 * p < (3.0 * m * q - (tol * q).abs()).min((e * q).abs()) {
                e = d;
                d = p / q;
            } else {
                d = m;
                e = m;
            }
        } else {
            d = m;
            e = m;
        }
        a = b;
        fa = fb;
        b += if d.abs() > tol { d } else { tol.copysign(m) };
        fb = f(b);
    }
    Err(Error::BracketExhausted(format!("Brent did not converge near {b}")))
}

/// `ψ₁(z) = Σ_{n>=0} 1/(z+n)²` for `z > 0`.
pub fn trigamma(mut z: f64) -> f64 {
    let mut acc = 0.0;
    while z < 12.0 {
        acc += 1.0 / (z * z);
        z += 1.0;
    }
    let iz = 1.0 / z;
    let iz2 = iz * iz;
    acc + iz + 0.5 * iz2 + iz * iz2 * (1.0 / 6.0 - iz2 * (1.0 / 30.0 - iz2 * (1.0 / 42.0 - iz2 / 30.0)))
}

/// `Σ_{n>=0} 1/(z+n)^4` for `z > 0`.
pub fn tetragamma_sum(mut z: f64) -> f64 {
    let mut acc = 0.0;
    while z < 30.0 {
        acc += z.powi(-4);
        z += 1.0;
    }
    acc + 1.0 / (3.0 * z.powi(3)) + 0.5 * z.powi(-4) + z.powi(-5) / 3.0 - z.powi(-7) / 6.0 + 2.0 * z.powi(-9) / 9.0
}

/// Hurwitz zeta `Σ_{n>=0} (z+n)^{-s}` for integer `s >= 2`, `z > 0`.
pub fn hurwitz_zeta(s: i32, mut z: f64) -> f64 {
    let mut acc = 0.0;
    while z < 30.0 {
        acc += z.powi(-s);
        z += 1.0;
    }
    let sf = s as f64;
    let rising = |m: i32| (0..m).map(|i| sf + i as f64).product::<f64>();
    acc + z.powi(1 - s) / (sf - 1.0) + 0.5 * z.powi(-s) + rising(1) / 12.0 * z.powi(-s - 1)
        - rising(3) / 720.0 * z.powi(-s - 3)
        + rising(5) / 30240.0 * z.powi(-s - 5)
        - rising(7) / 1209600.0 * z.powi(-s - 7)
}

/// Worker cap: `SPECTRAL_BVP_THREADS` if set to a positive integer, else the available cores.
pub fn worker_count() -> usize {
    std::env::var("SPECTRAL_BVP_THREADS")
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|&n| n > 0)
        .unwrap_or_else(|| std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1))
}

/// `(0..count).map(f)` spread over [`worker_count`] scoped threads; order is preserved.
pub fn par_map<T: Send>(count: usize, f: impl Fn(usize) -> T + Sync) -> Vec<T> {
    let workers = worker_count().min(count);
    if workers <= 1 {
        return (0..count).map(f).collect();
    }
    let f = &f;
    let mut out: Vec<Option<T>> = (0..count).map(|_| None).collect();
    std::thread::scope(|scope| {
        let chunk = count.div_ceil(workers);
        for (w, slot) in out.chunks_mut(chunk).enumerate() {
            scope.spawn(move || {
                for (k, s) in slot.iter_mut().enumerate() {
                    *s = Some(f(w * chunk + k));
                }
            });
        }
    });
    out.into_iter().map(|v| v.expect("every slot is filled")).collect()
}

/// Ordinary least squares `min ‖A x - b‖` for small dense systems.
pub fn least_squares(rows: &[Vec<f64>], rhs: &[f64]) -> Result<Vec<f64>> {
    let m = rows.len();
    let n = rows.first().map(|r| r.len()).unwrap_or(0);
    if m < n || n == 0 {
        return Err(Error::Degenerate(format!(
            "least squares with {m} rows and {n} unknowns"
        )));
    }
    let a = nalgebra::DMatrix::from_fn(m, n, |i, j| rows[i][j]);
    let b = nalgebra::DVector::from_column_slice(rhs);
    let x = a
        .svd(true, true)
        .solve(&b, 1e-13)
        .map_err(|e| Error::Conditioning(e.to_string()))?;
    Ok(x.as_slice().to_vec())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn brent_finds_cosine_root() {
        let mut f = |x: f64| x.cos() - x;
        let r = brent(&mut f, 0.0, 1.0, 1.0, 1f64.cos() - 1.0, 1e-15, 100).unwrap();
        assert!((r - 0.739_085_133_215_160_6).abs() < 1e-14);
    }

    #[test]
    fn par_map_preserves_order() {
        let v = par_map(37, |i| i * i);
        assert_eq!(v, (0..37).map(|i| i * i).collect::<Vec<_>>());
    }

    #[test]
    fn trigamma_values() {
        assert!((trigamma(1.0) - std::f64::consts::PI.powi(2) / 6.0).abs() < 1e-13);
        assert!((trigamma(0.5) - std::f64::consts::PI.powi(2) / 2.0).abs() < 1e-12);
        let z = 3.7;
        let direct: f64 = (0..200_000).map(|n| (z + n as f64).powi(-4)).sum();
        assert!((tetragamma_sum(z) - direct).abs() < 1e-12);
        assert!((hurwitz_zeta(4, z) - direct).abs() < 1e-12);
        assert!((hurwitz_zeta(2, 1.0) - trigamma(1.0)).abs() < 1e-13);
        let direct7: f64 = (0..2000).map(|n| (0.5 + n as f64).powi(-7)).sum();
        assert!((hurwitz_zeta(7, 0.5) - direct7).abs() < 1e-12 * direct7);
    }
}
