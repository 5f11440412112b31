//! Derivative-free minimization (Nelder–Mead with multistart) and Halton
//! low-discrepancy sequences. The objectives in this crate are cheap,
//! low-dimensional and often only piecewise smooth (homogeneous norms have
//! corners), which is exactly the regime where a restarted simplex search is
//! the pragmatic choice.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// Standard Nelder–Mead coefficients.
const ALPHA: f64 = 1.0; // reflection
const GAMMA: f64 = 2.0; // expansion
const RHO: f64 = 0.5; // contraction
const SIGMA: f64 = 0.5; // shrink

/// Minimizes `f` from one simplex seeded at `x0` with edge scale `scale`.
/// Returns the best point and value found within `max_iter` iterations or
/// once the simplex collapses below `tol` in value spread and diameter.
pub fn nelder_mead(
    f: &mut dyn FnMut(&[f64]) -> f64,
    x0: &[f64],
    scale: f64,
    max_iter: usize,
    tol: f64,
) -> (Vec<f64>, f64) {
    let n = x0.len();
    if n == 0 {
        return (Vec::new(), f(&[]));
    }
    let mut simplex: Vec<Vec<f64>> = Vec::with_capacity(n + 1);
    simplex.push(x0.to_vec());
    for i in 0..n {
        let mut v = x0.to_vec();
        v[i] += if v[i].abs() > 1e-12 { scale * v[i].abs() } else { scale };
        simplex.push(v);
    }
    let mut values: Vec<f64> = simplex.iter().map(|v| f(v)).collect();

    for _ in 0..max_iter {
        // Order best → worst.
        let mut order: Vec<usize> = (0..=n).collect();
        order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
        let reorder =
            |xs: &mut Vec<Vec<f64>>, vs: &mut Vec<f64>, order: &[usize]| {
                let new_x: Vec<Vec<f64>> = order.iter().map(|&i| xs[i].clone()).collect();
                let new_v: Vec<f64> = order.iter().map(|&i| vs[i]).collect();
                *xs = new_x;
                *vs = new_v;
            };
        reorder(&mut simplex, &mut values, &order);

        let spread = values[n] - values[0];
        let diam = (0..n)
            .map(|i| {
                simplex[n]
                    .iter()
                    .zip(&simplex[i])
                    .map(|(a, b)| (a - b).abs())
                    .fold(0.0f64, f64::max)
            })
            .fold(0.0f64, f64::max);
        if spread.abs() <= tol && diam <= tol {
            break;
        }

        // Centroid of all but the worst vertex.
        let mut centroid = vec![0.0; n];
        for v in &simplex[..n] {
            for (c, x) in centroid.iter_mut().zip(v) {
                *c += x / n as f64;
            }
        }
        let lerp = |a: &[f64], b: &[f64], t: f64| -> Vec<f64> {
            a.iter().zip(b).map(|(a, b)| a + t * (b - a)).collect()
        };

        let reflected = lerp(&centroid, &simplex[n], -ALPHA);
        let fr = f(&reflected);
        if fr < values[0] {
            let expanded = lerp(&centroid, &simplex[n], -GAMMA);
            let fe = f(&expanded);
            if fe < fr {
                simplex[n] = expanded;
                values[n] = fe;
            } else {
                simplex[n] = reflected;
                values[n] = fr;
            }
        } else if fr < values[n - 1] {
            simplex[n] = reflected;
            values[n] = fr;
        } else {
            // Contract toward the better of worst/reflected.
            let (anchor, fa) = if fr < values[n] { (&reflected, fr) } else { (&simplex[n], values[n]) };
            let contracted = lerp(&centroid, anchor, RHO);
            let fc = f(&contracted);
            if fc < fa {
                simplex[n] = contracted;
                values[n] = fc;
            } else {
                // Shrink everything toward the best vertex.
                for i in 1..=n {
                    simplex[i] = lerp(&simplex[0], &simplex[i], SIGMA);
                    values[i] = f(&simplex[i]);
                }
            }
        }
    }

    let best = values
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .map(|(i, _)| i)
        .unwrap_or(0);
    (simplex[best].clone(), values[best])
}

/// Multistart Nelder–Mead: one run from each start, best result wins.
pub fn multistart_nelder_mead(
    f: &mut dyn FnMut(&[f64]) -> f64,
    starts: &[Vec<f64>],
    scale: f64,
    max_iter: usize,
    tol: f64,
) -> (Vec<f64>, f64) {
    let mut best: Option<(Vec<f64>, f64)> = None;
    for x0 in starts {
        let (x, v) = nelder_mead(f, x0, scale, max_iter, tol);
        if best.as_ref().map_or(true, |(_, bv)| v < *bv) {
            best = Some((x, v));
        }
    }
    best.expect("at least one start")
}

/// Random starts in the box `[lo, hi]^n`.
pub fn random_starts(rng: &mut ChaCha8Rng, count: usize, n: usize, lo: f64, hi: f64) -> Vec<Vec<f64>> {
    (0..count)
        .map(|_| (0..n).map(|_| rng.random_range(lo..hi)).collect())
        .collect()
}

const HALTON_PRIMES: [u64; 12] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37];

/// Radical-inverse of `i` in base `b` (van der Corput).
fn radical_inverse(mut i: u64, b: u64) -> f64 {
    let mut f = 1.0;
    let mut r = 0.0;
    while i > 0 {
        f /= b as f64;
        r += f * (i % b) as f64;
        i /= b;
    }
    r
}

/// `i`-th point of the `n`-dimensional Halton sequence in `[0,1)^n`.
/// Index 0 is skipped internally (it is the origin in every base).
pub fn halton(i: usize, n: usize) -> Vec<f64> {
    assert!(n <= HALTON_PRIMES.len(), "Halton sequence limited to {} dims", HALTON_PRIMES.len());
    (0..n).map(|d| radical_inverse(i as u64 + 1, HALTON_PRIMES[d])).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn quadratic_bowl_is_minimized() {
        let mut f = |x: &[f64]| (x[0] - 1.5).powi(2) + 3.0 * (x[1] + 0.5).powi(2);
        let (x, v) = nelder_mead(&mut f, &[0.0, 0.0], 0.5, 500, 1e-12);
        assert_abs_diff_eq!(x[0], 1.5, epsilon = 1e-5);
        assert_abs_diff_eq!(x[1], -0.5, epsilon = 1e-5);
        assert!(v < 1e-9);
    }

    #[test]
    fn nonsmooth_objective_is_handled() {
        // |x| + |y - 2| has a corner at the optimum.
        let mut f = |x: &[f64]| x[0].abs() + (x[1] - 2.0).abs();
        let (x, _) = nelder_mead(&mut f, &[3.0, -3.0], 1.0, 800, 1e-12);
        assert_abs_diff_eq!(x[0], 0.0, epsilon = 1e-5);
        assert_abs_diff_eq!(x[1], 2.0, epsilon = 1e-5);
    }

    #[test]
    fn multistart_escapes_poor_basins() {
        // Two wells; the deeper one is at x = 3.
        let mut f = |x: &[f64]| {
            let a = (x[0] + 2.0).powi(2);
            let b = (x[0] - 3.0).powi(2) - 1.0;
            a.min(b)
        };
        let starts = vec![vec![-2.5], vec![0.0], vec![2.5]];
        let (x, v) = multistart_nelder_mead(&mut f, &starts, 0.5, 300, 1e-12);
        assert_abs_diff_eq!(x[0], 3.0, epsilon = 1e-4);
        assert_abs_diff_eq!(v, -1.0, epsilon = 1e-8);
    }

    #[test]
    fn halton_first_points_in_base_two_and_three() {
        // Base 2: 1/2, 1/4, 3/4, ...; base 3: 1/3, 2/3, 1/9, ...
        assert_eq!(halton(0, 2), vec![0.5, 1.0 / 3.0]);
        assert_eq!(halton(1, 2), vec![0.25, 2.0 / 3.0]);
        assert_eq!(halton(2, 2), vec![0.75, 1.0 / 9.0]);
        for i in 0..100 {
            for x in halton(i, 3) {
                assert!((0.0..1.0).contains(&x));
            }
        }
    }
}
