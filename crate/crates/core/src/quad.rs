//! Gauss–Legendre helpers for smooth and endpoint-singular integrands.

use std::num::NonZeroUsize;
use std::sync::OnceLock;

use gauss_quad::legendre::GaussLegendre;

fn rule(points: usize) -> &'static GaussLegendre {
    static R16: OnceLock<GaussLegendre> = OnceLock::new();
    static R32: OnceLock<GaussLegendre> = OnceLock::new();
    let make = |n: usize| GaussLegendre::new(NonZeroUsize::new(n).expect("nonzero"));
    match points {
        16 => R16.get_or_init(|| make(16)),
        32 => R32.get_or_init(|| make(32)),
        _ => unreachable!("only 16- and 32-point rules are cached"),
    }
}

/// Nodes and weights of the `points`-point rule mapped onto `[a, b]`.
pub(crate) fn nodes(points: usize, a: f64, b: f64) -> Vec<(f64, f64)> {
    let half = 0.5 * (b - a);
    let mid = 0.5 * (b + a);
    rule(points)
        .as_node_weight_pairs()
        .iter()
        .map(|&(x, w)| (mid + half * x, half * w))
        .collect()
}

pub(crate) fn gl<F: FnMut(f64) -> f64>(points: usize, a: f64, b: f64, f: F) -> f64 {
    rule(points).integrate(a, b, f)
}

/// Integrates over `[a, b]` with panels refined geometrically towards `a`,
/// for integrands with an integrable power singularity at the left end.
/// The innermost panel has relative width `2^−levels`.
pub(crate) fn graded_left<F: FnMut(f64) -> f64>(a: f64, b: f64, levels: u32, f: F) -> f64 {
    graded_left_with(16, a, b, levels, f)
}

pub(crate) fn graded_left_with<F: FnMut(f64) -> f64>(
    points: usize,
    a: f64,
    b: f64,
    levels: u32,
    mut f: F,
) -> f64 {
    let width = b - a;
    let mut total = 0.0;
    let mut hi = 1.0;
    for _ in 0..levels {
        let lo = 0.5 * hi;
        total += gl(points, a + lo * width, a + hi * width, &mut f);
        hi = lo;
    }
    total + gl(points, a, a + hi * width, &mut f)
}
