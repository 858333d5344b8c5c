//! One-dimensional searches.

const INV_PHI: f64 = 0.618_033_988_749_894_8;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Minimum {
    pub x: f64,
    pub value: f64,
    pub evaluations: usize,
}

/// Golden-section search for the minimum of a convex (or unimodal) function
/// on `[lo, hi]`. Stops once the bracket is no wider than `tol` or after
/// `max_iter` shrink steps, and returns the best point evaluated.
pub fn golden_section<E, F>(
    mut f: F,
    lo: f64,
    hi: f64,
    tol: f64,
    max_iter: usize,
) -> Result<Minimum, E>
where
    F: FnMut(f64) -> Result<f64, E>,
{
    let (mut a, mut b) = (lo, hi);
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = f(c)?;
    let mut fd = f(d)?;
    let mut evaluations = 2;
    let mut best = if fc <= fd { (c, fc) } else { (d, fd) };
    let mut iter = 0;
    while b - a > tol && iter < max_iter {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c)?;
            if fc < best.1 {
                best = (c, fc);
            }
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d)?;
            if fd < best.1 {
                best = (d, fd);
            }
        }
        evaluations += 1;
        iter += 1;
    }
    Ok(Minimum {
        x: best.0,
        value: best.1,
        evaluations,
    })
}

/// Bisection for the boundary of `{x : inside(x)}` between a point known to be
/// inside and one known to be outside. Returns the last inside point found.
pub fn bisect_boundary<E, F>(mut inside: F, mut good: f64, mut bad: f64, tol: f64) -> Result<f64, E>
where
    F: FnMut(f64) -> Result<bool, E>,
{
    for _ in 0..200 {
        if (bad - good).abs() <= tol {
            break;
        }
        let mid = 0.5 * (good + bad);
        if inside(mid)? {
            good = mid;
        } else {
            bad = mid;
        }
    }
    Ok(good)
}
