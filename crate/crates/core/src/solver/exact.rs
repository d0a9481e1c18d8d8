//! Exact rational arithmetic for `F(x, y) = x (x - y)` on `[1/2, 1]`.

use num_rational::Ratio;

pub type Q = Ratio<i128>;

fn q(n: i128, d: i128) -> Q {
    Ratio::new(n, d)
}

/// Resolvent `clamp(lambda a / (lambda - 1), 1/2, 1)`, or 1 when `lambda <= 1`.
pub fn resolvent(lambda: Q, a: Q) -> Q {
    let one = q(1, 1);
    if lambda <= one {
        return one;
    }
    let z = lambda * a / (lambda - one);
    z.max(q(1, 2)).min(one)
}

/// `F(x, y) >= 0` on the whole interval exactly when `x = 1`.
pub fn is_equilibrium(x: Q) -> bool {
    x == q(1, 1)
}

/// Iterates until the equilibrium is hit or `max_iters` steps were taken.
pub fn trace(lambda: Q, x0: Q, max_iters: usize) -> Vec<Q> {
    let mut out = vec![x0];
    let mut x = x0;
    while !is_equilibrium(x) && out.len() <= max_iters {
        x = resolvent(lambda, x);
        out.push(x);
    }
    out
}

/// First index whose iterate is the equilibrium.
pub fn termination_index(trace: &[Q]) -> Option<usize> {
    trace.iter().position(|&x| is_equilibrium(x))
}

/// `(Ty - Tx)(x - Tx) + (Tx - Ty)(y - Ty)`.
pub fn firmly_nonexpansive_probe(lambda: Q, x: Q, y: Q) -> Q {
    let tx = resolvent(lambda, x);
    let ty = resolvent(lambda, y);
    (ty - tx) * (x - tx) + (tx - ty) * (y - ty)
}

pub fn to_f64(v: Q) -> f64 {
    *v.numer() as f64 / *v.denom() as f64
}
