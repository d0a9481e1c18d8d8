//! Slice kernels for the hyperboloid model of hyperbolic n-space.
//!
//! Points live in R^{n+1} on the upper sheet of `<x,x>_L = -1`, where the
//! last coordinate plays the role of time:
//! `<x,y>_L = x_1 y_1 + ... + x_n y_n - x_{n+1} y_{n+1}`.

/// Lorentz form on ambient coordinates.
#[inline]
pub fn lorentz(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() - 1;
    let mut acc = 0.0;
    for i in 0..n {
        acc += a[i] * b[i];
    }
    acc - a[n] * b[n]
}

/// Distance `arccosh(-<x,y>_L)`, evaluated through `2 asinh(|x-y|_L / 2)`
/// when the points are close to avoid the flat top of arccosh.
pub fn dist(x: &[f64], y: &[f64]) -> f64 {
    let c = -lorentz(x, y);
    if c < 2.0 {
        let s = chord_sq(x, y);
        2.0 * (s.sqrt() / 2.0).asinh()
    } else {
        c.acosh()
    }
}

/// `<x-y, x-y>_L = 2(cosh d - 1)`, clamped at zero.
fn chord_sq(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() - 1;
    let mut acc = 0.0;
    for i in 0..n {
        let d = x[i] - y[i];
        acc += d * d;
    }
    let dt = x[n] - y[n];
    (acc - dt * dt).max(0.0)
}

/// Orthogonal projection of an ambient vector onto `T_x H^n`.
pub fn project_tangent(x: &[f64], v: &mut [f64]) {
    let c = lorentz(x, v);
    for (vi, xi) in v.iter_mut().zip(x) {
        *vi += c * xi;
    }
}

/// Rescales an ambient vector back onto the upper sheet.
pub fn renormalize(p: &mut [f64]) {
    let q = -lorentz(p, p);
    if q > 0.0 {
        let r = q.sqrt();
        for c in p.iter_mut() {
            *c /= r;
        }
    }
    let n = p.len() - 1;
    if p[n] < 0.0 {
        for c in p.iter_mut() {
            *c = -*c;
        }
    }
}

/// `exp_x(v) = cosh(|v|) x + sinh(|v|)/|v| v`, renormalized.
pub fn exp(x: &[f64], v: &[f64], series_threshold: f64, out: &mut [f64]) {
    let t = lorentz(v, v).max(0.0).sqrt();
    let (ch, shc) =
        if t < series_threshold { (1.0 + t * t / 2.0, 1.0 + t * t / 6.0) } else { (t.cosh(), t.sinh() / t) };
    for i in 0..x.len() {
        out[i] = ch * x[i] + shc * v[i];
    }
    renormalize(out);
}

/// Inverse exponential map. The result is tangent at `x` with Lorentz norm
/// equal to `dist(x, y)`.
pub fn log(x: &[f64], y: &[f64], out: &mut [f64]) {
    let d = dist(x, y);
    if d == 0.0 {
        out.iter_mut().for_each(|c| *c = 0.0);
        return;
    }
    let c = -lorentz(x, y);
    if c < 2.0 {
        // y - x + (<x,y>_L + 1) x, with <x,y>_L + 1 = -chord^2 / 2
        let half = chord_sq(x, y) / 2.0;
        for i in 0..x.len() {
            out[i] = (y[i] - x[i]) - half * x[i];
        }
    } else {
        for i in 0..x.len() {
            out[i] = y[i] - c * x[i];
        }
    }
    project_tangent(x, out);
    let nu = lorentz(out, out).max(0.0).sqrt();
    if nu <= f64::MIN_POSITIVE {
        out.iter_mut().for_each(|c| *c = 0.0);
        return;
    }
    let s = d / nu;
    out.iter_mut().for_each(|c| *c *= s);
}

/// Exponential chart at the apex `(0, ..., 0, 1)`:
/// `u -> (sinh|u| u/|u|, cosh|u|)`. For n = 1 this is `t -> (sinh t, cosh t)`.
pub fn chart(u: &[f64], out: &mut [f64]) {
    let r = u.iter().map(|c| c * c).sum::<f64>().sqrt();
    let n = u.len();
    if r == 0.0 {
        out[..n].iter_mut().for_each(|c| *c = 0.0);
        out[n] = 1.0;
        return;
    }
    let s = r.sinh() / r;
    for i in 0..n {
        out[i] = s * u[i];
    }
    out[n] = r.cosh();
}

/// Inverse of [`chart`].
pub fn chart_inverse(x: &[f64], out: &mut [f64]) {
    let n = x.len() - 1;
    let r = x[..n].iter().map(|c| c * c).sum::<f64>().sqrt();
    if r == 0.0 {
        out[..n].iter_mut().for_each(|c| *c = 0.0);
        return;
    }
    let s = r.asinh() / r;
    for i in 0..n {
        out[i] = s * x[i];
    }
}
