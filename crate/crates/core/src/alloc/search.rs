//! Multi-start maximisation over the probability simplex.
//!
//! Points of the simplex are reached through a softmax of `k - 1` free
//! logits (the last logit is pinned to zero), so every weight stays strictly
//! positive and the weights always sum to one.

use rand::Rng;

use crate::channels::SeededStream;
use crate::numeric::{nelder_mead, NelderMeadOptions};

const LOGIT_BOUND: f64 = 40.0;
const RANDOM_STARTS: usize = 8;

pub(crate) fn softmax_with_pinned(z: &[f64]) -> Vec<f64> {
    let mut logits: Vec<f64> = z.iter().map(|v| v.clamp(-LOGIT_BOUND, LOGIT_BOUND)).collect();
    logits.push(0.0);
    let m = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = logits.iter().map(|v| (v - m).exp()).collect();
    let s: f64 = e.iter().sum();
    e.into_iter().map(|v| v / s).collect()
}

/// Deterministic start points in logit space: the centre, one start leaning
/// towards each vertex, seeded random points and, for `k <= 3`, the best
/// node of a coarse lattice.
fn starts<F: FnMut(&[f64]) -> f64>(k: usize, f: &mut F) -> Vec<Vec<f64>> {
    let d = k - 1;
    let mut out = vec![vec![0.0; d]];
    for i in 0..k {
        let mut z = vec![0.0; d];
        if i < d {
            z[i] = 4.0;
        } else {
            z.iter_mut().for_each(|v| *v = -4.0);
        }
        out.push(z);
    }
    let mut rng = SeededStream::new(0x51_4D_50_4C, k as u64).rng();
    for _ in 0..RANDOM_STARTS {
        out.push((0..d).map(|_| rng.random_range(-3.0..3.0)).collect());
    }
    if d <= 2 {
        let nodes: Vec<f64> = (0..=40).map(|i| -20.0 + i as f64).collect();
        let mut best = (f64::NEG_INFINITY, vec![0.0; d]);
        let mut visit = |z: Vec<f64>, f: &mut F| {
            let v = f(&softmax_with_pinned(&z));
            if v > best.0 {
                best = (v, z);
            }
        };
        if d == 1 {
            for &a in &nodes {
                visit(vec![a], f);
            }
        } else {
            for &a in nodes.iter().step_by(2) {
                for &b in nodes.iter().step_by(2) {
                    visit(vec![a, b], f);
                }
            }
        }
        out.push(best.1);
    }
    out
}

/// Maximises `f(w)` over weights `w` on the `k`-simplex. Returns the best
/// weights and value; ties go to the earliest start.
pub(crate) fn maximize_on_simplex<F: FnMut(&[f64]) -> f64>(k: usize, mut f: F) -> (Vec<f64>, f64) {
    assert!(k >= 1);
    if k == 1 {
        let w = vec![1.0];
        let v = f(&w);
        return (w, v);
    }
    let opts = NelderMeadOptions {
        initial_step: 1.0,
        f_tol: 1e-14,
        x_tol: 1e-10,
        max_evals: 3000,
    };
    let mut best: Option<(Vec<f64>, f64)> = None;
    for z0 in starts(k, &mut f) {
        let m = nelder_mead(|z| -f(&softmax_with_pinned(z)), &z0, opts);
        let v = -m.value;
        if best.as_ref().is_none_or(|b| v > b.1) {
            best = Some((softmax_with_pinned(&m.x), v));
        }
    }
    best.expect("at least one start")
}

/// Channel order by decreasing gain, ties by lower index. Optimisers work in
/// this order so that permuted inputs yield permuted, bit-identical outputs.
pub(crate) fn canonical_order(h: &[f64], p: Option<&[f64]>) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..h.len()).collect();
    idx.sort_by(|&a, &b| {
        h[b].total_cmp(&h[a])
            .then_with(|| match p {
                Some(p) => p[b].total_cmp(&p[a]),
                None => std::cmp::Ordering::Equal,
            })
            .then(a.cmp(&b))
    });
    idx
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn softmax_sums_to_one() {
        let w = softmax_with_pinned(&[1.0, -2.0, 500.0]);
        assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-15);
        assert!(w.iter().all(|&x| x > 0.0));
    }

    #[test]
    fn finds_interior_maximum() {
        let target = [0.2, 0.5, 0.3];
        let (w, v) = maximize_on_simplex(3, |w| -w.iter().zip(&target).map(|(a, b)| (a - b).powi(2)).sum::<f64>());
        assert!(v > -1e-12);
        for (a, b) in w.iter().zip(&target) {
            assert!((a - b).abs() < 1e-6);
        }
    }

    #[test]
    fn ordering_breaks_ties_by_index() {
        assert_eq!(canonical_order(&[1.0, 3.0, 1.0, 2.0], None), vec![1, 3, 0, 2]);
    }
}
