//! Scalar root bracketing over the total order of `f64` bit patterns.
//!
//! Bisecting the integer keys of floats instead of their values reaches
//! adjacent floats in at most 64 halvings, whatever the magnitude of the root.

use crate::error::{Error, Result};

/// Outcome of probing a candidate point of a monotone decision problem.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum Direction {
    /// The root lies to the right.
    Increase,
    /// The point satisfies the inclusion exactly.
    Found,
    /// The root lies to the left.
    Decrease,
}

#[derive(Clone, Copy, Debug)]
pub(crate) enum Bracketed {
    Found(f64),
    /// Adjacent floats; the root lies between them.
    Adjacent(f64, f64),
}

#[derive(Clone, Copy, Debug)]
pub(crate) struct BracketSolve {
    pub outcome: Bracketed,
    pub iterations: usize,
}

const SIGN: u64 = 1 << 63;

fn key(x: f64) -> u64 {
    let b = x.to_bits();
    if b & SIGN != 0 {
        !b
    } else {
        b | SIGN
    }
}

fn from_key(k: u64) -> f64 {
    if k & SIGN != 0 {
        f64::from_bits(k & !SIGN)
    } else {
        f64::from_bits(!k)
    }
}

/// Locates the transition of a monotone decision function.
///
/// `decide` must answer `Increase` left of the solution set and `Decrease`
/// right of it. The search starts at `start` and expands geometrically with
/// initial step `scale` until a bracket is found.
pub(crate) fn solve_monotone<F>(mut decide: F, start: f64, scale: f64) -> Result<BracketSolve>
where
    F: FnMut(f64) -> Direction,
{
    let mut iterations = 1;
    let (lo, hi) = match decide(start) {
        Direction::Found => {
            return Ok(BracketSolve { outcome: Bracketed::Found(start), iterations })
        }
        Direction::Increase => {
            let mut lo = start;
            let mut step = scale.max(f64::MIN_POSITIVE);
            loop {
                let hi = start + step;
                iterations += 1;
                match decide(hi) {
                    Direction::Increase => lo = hi,
                    Direction::Found => {
                        return Ok(BracketSolve { outcome: Bracketed::Found(hi), iterations })
                    }
                    Direction::Decrease => break (lo, hi),
                }
                step *= 2.0;
                if !step.is_finite() || !(start + step).is_finite() {
                    return Err(Error::NonConvergence { iterations, residual: f64::INFINITY });
                }
            }
        }
        Direction::Decrease => {
            let mut hi = start;
            let mut step = scale.max(f64::MIN_POSITIVE);
            loop {
                let lo = start - step;
                iterations += 1;
                match decide(lo) {
                    Direction::Decrease => hi = lo,
                    Direction::Found => {
                        return Ok(BracketSolve { outcome: Bracketed::Found(lo), iterations })
                    }
                    Direction::Increase => break (lo, hi),
                }
                step *= 2.0;
                if !step.is_finite() || !(start - step).is_finite() {
                    return Err(Error::NonConvergence { iterations, residual: f64::INFINITY });
                }
            }
        }
    };
    let (mut klo, mut khi) = (key(lo), key(hi));
    while khi - klo > 1 {
        let mid = klo + (khi - klo) / 2;
        iterations += 1;
        match decide(from_key(mid)) {
            Direction::Increase => klo = mid,
            Direction::Decrease => khi = mid,
            Direction::Found => {
                return Ok(BracketSolve { outcome: Bracketed::Found(from_key(mid)), iterations })
            }
        }
    }
    Ok(BracketSolve { outcome: Bracketed::Adjacent(from_key(klo), from_key(khi)), iterations })
}

/// Root of a continuous nondecreasing scalar function.
pub(crate) fn increasing_root<F>(mut f: F, start: f64, scale: f64) -> Result<(f64, usize)>
where
    F: FnMut(f64) -> f64,
{
    let mut best = (start, f64::INFINITY);
    let solve = solve_monotone(
        |x| {
            let v = f(x);
            if v.abs() < best.1 {
                best = (x, v.abs());
            }
            if v < 0.0 {
                Direction::Increase
            } else if v > 0.0 {
                Direction::Decrease
            } else {
                Direction::Found
            }
        },
        start,
        scale,
    )?;
    let x = match solve.outcome {
        Bracketed::Found(x) => x,
        Bracketed::Adjacent(..) => best.0,
    };
    Ok((x, solve.iterations))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn key_order_is_monotone() {
        let xs = [-1e300, -2.0, -1e-300, -0.0, 0.0, 1e-310, 1.0, 3.5, 1e300];
        for w in xs.windows(2) {
            assert!(key(w[0]) <= key(w[1]), "{} vs {}", w[0], w[1]);
        }
        for &x in &xs {
            assert_eq!(from_key(key(x)).to_bits(), x.to_bits());
        }
    }

    #[test]
    fn finds_sqrt2_to_an_ulp() {
        let (x, it) = increasing_root(|x| x * x * x.signum() - 2.0, 0.0, 1.0).unwrap();
        assert!((x - 2f64.sqrt()).abs() <= 2.0 * f64::EPSILON * 2f64.sqrt());
        assert!(it < 80);
    }

    #[test]
    fn tiny_roots_are_resolved_relatively() {
        let target = 3.7e-12;
        let (x, _) = increasing_root(|x| x - target, 0.0, 1.0).unwrap();
        assert!((x - target).abs() <= 1e-15 * target);
    }

    #[test]
    fn flat_solution_set_is_found() {
        // inclusion 0 ∈ [x-1, x+1]: any x in [-1, 1]
        let s = solve_monotone(
            |x| {
                if x + 1.0 < 0.0 {
                    Direction::Increase
                } else if x - 1.0 > 0.0 {
                    Direction::Decrease
                } else {
                    Direction::Found
                }
            },
            5.0,
            1.0,
        )
        .unwrap();
        match s.outcome {
            Bracketed::Found(x) => assert!((-1.0..=1.0).contains(&x)),
            other => panic!("expected exact hit, got {other:?}"),
        }
    }
}
