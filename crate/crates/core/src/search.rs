// Copyright 2026 The cvmbqc Authors
// SPDX-License-Identifier: Apache-2.0

//! One-dimensional minimisation used to pick free decomposition parameters.

const INV_PHI: f64 = 0.618_033_988_749_894_9;

/// Uniform grid on `[lo, hi]` with `points` samples (endpoints included).
pub(crate) fn grid(lo: f64, hi: f64, points: usize) -> impl Iterator<Item = f64> {
    let span = hi - lo;
    let last = (points - 1) as f64;
    (0..points).map(move |i| lo + span * i as f64 / last)
}

/// Minimises `objective` over a grid, then refines the best cell by
/// golden-section search. Infeasible points return `None` and count as
/// `+∞`. The refined point is only kept if it strictly improves on the
/// grid minimum.
pub(crate) fn grid_then_golden<F>(objective: F, lo: f64, hi: f64, points: usize) -> Option<(f64, f64)>
where
    F: Fn(f64) -> Option<f64>,
{
    let eval = |x: f64| objective(x).filter(|v| v.is_finite()).unwrap_or(f64::INFINITY);
    let step = (hi - lo) / (points - 1) as f64;
    let (best_x, best_v) = grid(lo, hi, points).map(|x| (x, eval(x))).fold((f64::NAN, f64::INFINITY), |acc, cur| {
        if cur.1 < acc.1 {
            cur
        } else {
            acc
        }
    });
    if !best_v.is_finite() {
        return None;
    }

    let (mut a, mut b) = ((best_x - step).max(lo), (best_x + step).min(hi));
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let (mut fc, mut fd) = (eval(c), eval(d));
    for _ in 0..200 {
        if (b - a).abs() < 1e-12 * (1.0 + best_x.abs()) {
            break;
        }
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = eval(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = eval(d);
        }
    }
    let x = 0.5 * (a + b);
    let v = eval(x);
    if v < best_v {
        Some((x, v))
    } else {
        Some((best_x, best_v))
    }
}
