//! Scalar root finding and unimodal minimization used by the solvers.

use crate::{Error, Result};

/// End state of a bracketed root search.
///
/// `x` is always the bracket end with `f(x) >= 0`; callers that need the
/// other side negate their function.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Root {
    pub x: f64,
    #[cfg_attr(not(test), allow(dead_code))]
    pub fx: f64,
}

/// Brent's method on `[a, b]` with `f(a) <= 0 <= f(b)` (or the reverse).
///
/// Terminates when the bracket is narrower than `x_tol` or when the
/// nonnegative end satisfies `f <= f_tol`.
#[allow(clippy::too_many_arguments)]
pub(crate) fn brent<F>(
    stage: &'static str,
    mut f: F,
    a: f64,
    b: f64,
    fa: f64,
    fb: f64,
    x_tol: f64,
    f_tol: f64,
    max_iter: usize,
) -> Result<Root>
where
    F: FnMut(f64) -> Result<f64>,
{
    if fa.is_nan() || fb.is_nan() || fa * fb > 0.0 {
        return Err(Error::invalid(format!(
            "{stage}: root is not bracketed (f({a:e}) = {fa:e}, f({b:e}) = {fb:e})"
        )));
    }
    let (mut a, mut fa, mut b, mut fb) = (a, fa, b, fb);
    if fb == 0.0 {
        return Ok(Root { x: b, fx: fb });
    }
    if fa == 0.0 {
        return Ok(Root { x: a, fx: fa });
    }
    let mut c = a;
    let mut fc = fa;
    let mut d = b - a;
    let mut e = d;

    for _ in 0..max_iter {
        if (fb > 0.0) == (fc > 0.0) {
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
        let tol1 = 2.0 * f64::EPSILON * b.abs() + 0.5 * x_tol;
        let xm = 0.5 * (c - b);

        let (pos_x, pos_f) = if fb >= 0.0 { (b, fb) } else { (c, fc) };
        if fb == 0.0 || (fb > 0.0 && fb <= f_tol) || xm.abs() <= tol1 {
            return Ok(Root { x: pos_x, fx: pos_f });
        }

        if e.abs() >= tol1 && fa.abs() > fb.abs() {
            let s = fb / fa;
            let (mut p, mut q);
            if a == c {
                p = 2.0 * xm * s;
                q = 1.0 - s;
            } else {
                let qq = fa / fc;
                let r = fb / fc;
                p = s * (2.0 * xm * qq * (qq - r) - (b - a) * (r - 1.0));
                q = (qq - 1.0) * (r - 1.0) * (s - 1.0);
            }
            if p > 0.0 {
                q = -q;
            } else {
                p = -p;
            }
            if 2.0 * p < (3.0 * xm * q - (tol1 * q).abs()).min((e * q).abs()) {
                e = d;
                d = p / q;
            } else {
                d = xm;
                e = d;
            }
        } else {
            d = xm;
            e = d;
        }
        a = b;
        fa = fb;
        b += if d.abs() > tol1 { d } else { tol1.copysign(xm) };
        fb = f(b)?;
        if fb.is_nan() {
            return Err(Error::invalid(format!("{stage}: function returned NaN at {b:e}")));
        }
    }
    Err(Error::NonConvergence {
        stage,
        iterations: max_iter,
        residual: fb.abs().min(fc.abs()),
    })
}

/// Grows `hi` geometrically until `f(hi) >= 0`. Returns `None` when no finite
/// upper bracket exists within `max_iter` doublings.
pub(crate) fn expand_up<F>(mut f: F, mut hi: f64, max_iter: usize) -> Result<Option<(f64, f64)>>
where
    F: FnMut(f64) -> Result<f64>,
{
    for _ in 0..max_iter {
        if !hi.is_finite() {
            return Ok(None);
        }
        let fh = f(hi)?;
        if fh >= 0.0 {
            return Ok(Some((hi, fh)));
        }
        hi *= 2.0;
    }
    Ok(None)
}

const INV_PHI: f64 = 0.618_033_988_749_894_9;

/// Golden-section search for the minimum of a unimodal function on `[lo, hi]`.
///
/// `f` may return `+inf`. The search stops early as soon as a value at or
/// below `stop_at` is seen. Returns the best point evaluated.
pub(crate) fn golden_min<F>(
    mut f: F,
    mut lo: f64,
    mut hi: f64,
    x_tol: f64,
    stop_at: f64,
    max_iter: usize,
) -> Result<(f64, f64)>
where
    F: FnMut(f64) -> Result<f64>,
{
    let mut c = hi - INV_PHI * (hi - lo);
    let mut d = lo + INV_PHI * (hi - lo);
    let mut fc = f(c)?;
    if fc <= stop_at {
        return Ok((c, fc));
    }
    let mut fd = f(d)?;
    let mut best = if fd < fc { (d, fd) } else { (c, fc) };
    if fd <= stop_at {
        return Ok((d, fd));
    }
    for _ in 0..max_iter {
        if hi - lo <= x_tol {
            break;
        }
        // Ties (including both infinite) move the lower end up: the
        // infinite region of every caller sits at small arguments.
        if fc < fd {
            hi = d;
            d = c;
            fd = fc;
            c = hi - INV_PHI * (hi - lo);
            fc = f(c)?;
            if fc < best.1 {
                best = (c, fc);
            }
            if fc <= stop_at {
                break;
            }
        } else {
            lo = c;
            c = d;
            fc = fd;
            d = lo + INV_PHI * (hi - lo);
            fd = f(d)?;
            if fd < best.1 {
                best = (d, fd);
            }
            if fd <= stop_at {
                break;
            }
        }
    }
    Ok(best)
}
