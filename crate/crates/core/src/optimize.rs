//! Bounded derivative-free minimizers: Brent's method in one dimension and
//! Powell's conjugate-direction method in a box.
//!
//! Both only ever return a point whose objective is no larger than the
//! objective at the starting point, which is what makes each half-step of
//! the alternating inference a non-decreasing move.

/// Outcome of a minimization.
#[derive(Debug, Clone, PartialEq)]
pub struct Minimum {
    pub x: Vec<f64>,
    pub value: f64,
    pub evaluations: usize,
}

const GOLDEN: f64 = 0.381_966_011_250_105_1;
const SQRT_EPS: f64 = 1.490_116_119_384_765_6e-8;

fn finite_or_inf(v: f64) -> f64 {
    if v.is_nan() {
        f64::INFINITY
    } else {
        v
    }
}

/// Minimizes `f` on `[a, b]` (Brent's localmin: golden section with
/// parabolic interpolation). The start point and both end points are also
/// evaluated; the best of all candidates is returned.
pub fn brent<F>(mut f: F, a: f64, b: f64, start: f64, tol: f64, max_iter: usize) -> (f64, f64, usize)
where
    F: FnMut(f64) -> f64,
{
    assert!(a <= b, "empty interval [{a}, {b}]");
    let mut evals = 0usize;
    let mut eval = |x: f64| {
        evals += 1;
        finite_or_inf(f(x))
    };
    let start = start.clamp(a, b);
    let f_start = eval(start);
    if a == b {
        return (start, f_start, evals);
    }

    let (mut lo, mut hi) = (a, b);
    let mut x = lo + GOLDEN * (hi - lo);
    let mut w = x;
    let mut v = x;
    let mut fx = eval(x);
    let mut fw = fx;
    let mut fv = fx;
    let mut d = 0.0f64;
    let mut e = 0.0f64;

    for _ in 0..max_iter {
        let m = 0.5 * (lo + hi);
        let tol1 = SQRT_EPS * x.abs() + tol / 3.0;
        let tol2 = 2.0 * tol1;
        if (x - m).abs() <= tol2 - 0.5 * (hi - lo) {
            break;
        }
        let mut golden = true;
        if e.abs() > tol1 {
            let r = (x - w) * (fx - fv);
            let mut q = (x - v) * (fx - fw);
            let mut p = (x - v) * q - (x - w) * r;
            q = 2.0 * (q - r);
            if q > 0.0 {
                p = -p;
            } else {
                q = -q;
            }
            let r = e;
            e = d;
            if p.abs() < (0.5 * q * r).abs() && p > q * (lo - x) && p < q * (hi - x) {
                d = p / q;
                let u = x + d;
                if u - lo < tol2 || hi - u < tol2 {
                    d = if x < m { tol1 } else { -tol1 };
                }
                golden = false;
            }
        }
        if golden {
            e = if x < m { hi - x } else { lo - x };
            d = GOLDEN * e;
        }
        let u = if d.abs() >= tol1 {
            x + d
        } else if d > 0.0 {
            x + tol1
        } else {
            x - tol1
        };
        let fu = eval(u);
        if fu <= fx {
            if u < x {
                hi = x;
            } else {
                lo = x;
            }
            v = w;
            fv = fw;
            w = x;
            fw = fx;
            x = u;
            fx = fu;
        } else {
            if u < x {
                lo = u;
            } else {
                hi = u;
            }
            if fu <= fw || w == x {
                v = w;
                fv = fw;
                w = u;
                fw = fu;
            } else if fu <= fv || v == x || v == w {
                v = u;
                fv = fu;
            }
        }
    }

    let fa = eval(a);
    let fb = eval(b);
    // Ties keep the start point so repeated fits do not drift, except that a
    // flat objective settles on the lower end point.
    let mut best = if fa <= f_start { (a, fa) } else { (start, f_start) };
    for cand in [(x, fx), (b, fb)] {
        if cand.1 < best.1 {
            best = cand;
        }
    }
    (best.0, best.1, evals)
}

/// Evaluates `f` at every lattice point and returns the best one.
pub fn grid<F>(mut f: F, lattice: &[f64]) -> Option<(f64, f64)>
where
    F: FnMut(f64) -> f64,
{
    lattice
        .iter()
        .map(|&x| (x, finite_or_inf(f(x))))
        .filter(|(_, v)| v.is_finite())
        .min_by(|a, b| a.1.total_cmp(&b.1))
}

/// `n` points evenly spaced on a log scale over `[lo, hi]`, `lo > 0`.
pub fn log_lattice(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    assert!(lo > 0.0 && hi >= lo && n >= 1);
    if n == 1 {
        return vec![lo];
    }
    let (a, b) = (lo.ln(), hi.ln());
    (0..n)
        .map(|i| (a + (b - a) * i as f64 / (n - 1) as f64).exp())
        .collect()
}

/// `n` points evenly spaced over `[lo, hi]`.
pub fn linear_lattice(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    assert!(hi >= lo && n >= 1);
    if n == 1 {
        return vec![lo];
    }
    (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect()
}

/// Largest step interval `[s_lo, s_hi]` keeping `x + s d` inside the box.
fn step_range(x: &[f64], d: &[f64], lo: &[f64], hi: &[f64]) -> (f64, f64) {
    let mut s_lo = f64::NEG_INFINITY;
    let mut s_hi = f64::INFINITY;
    for i in 0..x.len() {
        if d[i] > 0.0 {
            s_lo = s_lo.max((lo[i] - x[i]) / d[i]);
            s_hi = s_hi.min((hi[i] - x[i]) / d[i]);
        } else if d[i] < 0.0 {
            s_lo = s_lo.max((hi[i] - x[i]) / d[i]);
            s_hi = s_hi.min((lo[i] - x[i]) / d[i]);
        }
    }
    (s_lo.min(0.0), s_hi.max(0.0))
}

fn along(x: &[f64], d: &[f64], s: f64, lo: &[f64], hi: &[f64]) -> Vec<f64> {
    x.iter()
        .zip(d)
        .enumerate()
        .map(|(i, (&xi, &di))| (xi + s * di).clamp(lo[i], hi[i]))
        .collect()
}

/// Powell's method restricted to the box `[lo, hi]`. Every line search is
/// clipped to the box, so no proposal ever leaves it.
pub fn powell<F>(mut f: F, start: &[f64], lo: &[f64], hi: &[f64], tol: f64, max_iter: usize) -> Minimum
where
    F: FnMut(&[f64]) -> f64,
{
    let n = start.len();
    assert!(lo.len() == n && hi.len() == n);
    let mut evaluations = 0usize;
    let mut x: Vec<f64> = start.iter().enumerate().map(|(i, &v)| v.clamp(lo[i], hi[i])).collect();
    let mut fx = finite_or_inf(f(&x));
    evaluations += 1;
    let mut dirs: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            let mut d = vec![0.0; n];
            d[i] = 1.0;
            d
        })
        .collect();

    let line = |f: &mut F, x: &[f64], fx: f64, d: &[f64], evals: &mut usize| -> (Vec<f64>, f64) {
        let (s_lo, s_hi) = step_range(x, d, lo, hi);
        if s_hi - s_lo <= 0.0 {
            return (x.to_vec(), fx);
        }
        let (s, v, k) = brent(|s| f(&along(x, d, s, lo, hi)), s_lo, s_hi, 0.0, tol, max_iter);
        *evals += k;
        if v < fx {
            (along(x, d, s, lo, hi), v)
        } else {
            (x.to_vec(), fx)
        }
    };

    for _ in 0..max_iter {
        let x_old = x.clone();
        let f_old = fx;
        let mut biggest = (0usize, 0.0f64);
        for (i, d) in dirs.iter().enumerate() {
            let before = fx;
            let (nx, nf) = line(&mut f, &x, fx, d, &mut evaluations);
            x = nx;
            fx = nf;
            if before - fx > biggest.1 {
                biggest = (i, before - fx);
            }
        }
        let scale = f_old.abs() + fx.abs();
        if !(2.0 * (f_old - fx) > tol * scale + 1e-300) {
            break;
        }
        let delta: Vec<f64> = x.iter().zip(&x_old).map(|(a, b)| a - b).collect();
        if delta.iter().any(|v| *v != 0.0) && n > 1 {
            let (nx, nf) = line(&mut f, &x, fx, &delta, &mut evaluations);
            x = nx;
            fx = nf;
            dirs.remove(biggest.0);
            dirs.push(delta);
        }
    }
    Minimum {
        x,
        value: fx,
        evaluations,
    }
}
