//! Evaluation metrics: masked RMS error and hit rate at 10.

use rand::Rng;

use crate::error::{Error, Result};
use crate::mask::ObservationMask;
use crate::matrix::Matrix;
use crate::recsys::implicit::ImplicitMatrix;
use crate::seed::rng_for;

/// Number of sampled negatives per evaluated user.
const HR_NEGATIVES: usize = 100;
/// Rank cutoff for a hit.
const HR_CUTOFF: usize = 10;

/// Root-mean-square error of `score` against Y over the masked cells,
/// accumulated in the mask's canonical order.
pub fn rms(score: impl Fn(usize, usize) -> f64, y: &Matrix, mask: &ObservationMask) -> Result<f64> {
    if mask.is_empty() {
        return Err(Error::invalid("empty evaluation mask"));
    }
    if (mask.rows(), mask.cols()) != y.shape() {
        return Err(Error::dim(format!(
            "mask is {}x{} but Y is {}x{}",
            mask.rows(),
            mask.cols(),
            y.rows(),
            y.cols()
        )));
    }
    let mut sse = 0.0;
    for &(i, j) in mask.cells() {
        let d = score(i, j) - y.at(i, j);
        sse += d * d;
    }
    Ok((sse / mask.len() as f64).sqrt())
}

/// Hit rate at 10 over the test split.
///
/// For every user with at least one watched test item: draw one positive
/// from their watched test items and 100 distinct negatives — from their
/// unwatched test cells if those suffice, otherwise from all their unwatched
/// items — then rank the 101 items by ascending score (-1 encodes watched,
/// so lower scores mean stronger preference). A hit is the positive ranked
/// in the first 10, with score ties counted against it. Per-user draws use
/// the stream of `seed ⊕ user`, so users are independent and the whole
/// evaluation is seed-deterministic.
pub fn hit_rate_at_10(
    score: impl Fn(usize, usize) -> f64,
    im: &ImplicitMatrix,
    seed: u64,
) -> Result<f64> {
    let (num_users, num_items) = im.y.shape();
    let mut test_pos: Vec<Vec<usize>> = vec![Vec::new(); num_users];
    let mut test_neg: Vec<Vec<usize>> = vec![Vec::new(); num_users];
    for &(u, i) in im.test.cells() {
        if im.y.at(u, i) == -1.0 {
            test_pos[u].push(i);
        } else {
            test_neg[u].push(i);
        }
    }

    let mut eligible = 0usize;
    let mut hits = 0usize;
    let mut fallback_pool = Vec::new();
    for u in 0..num_users {
        if test_pos[u].is_empty() {
            continue;
        }
        let pool: &[usize] = if test_neg[u].len() >= HR_NEGATIVES {
            &test_neg[u]
        } else {
            fallback_pool.clear();
            fallback_pool.extend((0..num_items).filter(|&i| im.y.at(u, i) == 1.0));
            &fallback_pool
        };
        if pool.len() < HR_NEGATIVES {
            // Not enough unwatched items to form the 101-item list.
            continue;
        }
        eligible += 1;

        let mut rng = rng_for(seed ^ u as u64, "recsys.hr10");
        let positive = test_pos[u][rng.gen_range(0..test_pos[u].len())];
        let pos_score = score(u, positive);
        let mut ranked_before = 0usize;
        for idx in rand::seq::index::sample(&mut rng, pool.len(), HR_NEGATIVES) {
            if score(u, pool[idx]) <= pos_score {
                ranked_before += 1;
            }
        }
        if ranked_before < HR_CUTOFF {
            hits += 1;
        }
    }

    if eligible == 0 {
        return Err(Error::invalid("no user has a watched test item"));
    }
    Ok(hits as f64 / eligible as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seed::derive_seed;

    fn toy_implicit(num_users: usize, num_items: usize) -> ImplicitMatrix {
        // User u watched item u; the test mask holds that positive plus a
        // couple of sampled negatives per user.
        let mut y = Matrix::filled(num_users, num_items, 1.0);
        let mut test = Vec::new();
        for u in 0..num_users {
            let pos = u % num_items;
            y.set(u, pos, -1.0);
            test.push((u, pos));
            test.push((u, (pos + 1) % num_items));
            test.push((u, (pos + 2) % num_items));
        }
        let empty = ObservationMask::new(num_users, num_items, Vec::new()).unwrap();
        ImplicitMatrix {
            train: empty.clone(),
            validation: empty,
            test: ObservationMask::new(num_users, num_items, test).unwrap(),
            y,
        }
    }

    #[test]
    fn rms_hand_cases() {
        let y = Matrix::from_rows(&[&[1.0, -1.0], &[-1.0, 1.0]]);
        let full = ObservationMask::full(2, 2);
        // Perfect predictions.
        assert_eq!(rms(|i, j| y.at(i, j), &y, &full).unwrap(), 0.0);
        // Constant 0 on ±1 targets.
        assert_eq!(rms(|_, _| 0.0, &y, &full).unwrap(), 1.0);
        // Empty mask rejected.
        let empty = ObservationMask::new(2, 2, Vec::new()).unwrap();
        assert!(rms(|_, _| 0.0, &y, &empty).is_err());
    }

    #[test]
    fn rms_is_enumeration_order_free() {
        let y = Matrix::from_rows(&[&[1.0, -1.0, 1.0], &[-1.0, 1.0, -1.0]]);
        let cells = vec![(0, 0), (0, 2), (1, 1), (1, 0)];
        let m1 = ObservationMask::new(2, 3, cells.clone()).unwrap();
        let mut rev = cells;
        rev.reverse();
        let m2 = ObservationMask::new(2, 3, rev).unwrap();
        let s = |i: usize, j: usize| (i as f64) - 0.3 * (j as f64);
        let r1 = rms(s, &y, &m1).unwrap();
        let r2 = rms(s, &y, &m2).unwrap();
        assert_eq!(r1.to_bits(), r2.to_bits());
    }

    #[test]
    fn perfect_scorer_hits_always() {
        let im = toy_implicit(25, 130);
        // Watched cells strictly lowest.
        let hr = hit_rate_at_10(|u, i| im.y.at(u, i), &im, 0).unwrap();
        assert_eq!(hr, 1.0);
    }

    #[test]
    fn anti_scorer_never_hits() {
        let im = toy_implicit(25, 130);
        let hr = hit_rate_at_10(|u, i| -im.y.at(u, i), &im, 0).unwrap();
        assert_eq!(hr, 0.0);
    }

    #[test]
    fn invariant_under_monotone_remap() {
        let im = toy_implicit(40, 140);
        let base = |u: usize, i: usize| {
            derive_seed(99, &format!("{u}:{i}")) as f64 / u64::MAX as f64
        };
        let h1 = hit_rate_at_10(base, &im, 7).unwrap();
        let h2 = hit_rate_at_10(|u, i| (base(u, i) * 3.0 + 1.0).exp(), &im, 7).unwrap();
        assert_eq!(h1, h2);
    }

    #[test]
    fn deterministic_given_seed() {
        let im = toy_implicit(30, 120);
        let s = |u: usize, i: usize| ((u * 31 + i * 17) % 101) as f64;
        let h1 = hit_rate_at_10(s, &im, 3).unwrap();
        let h2 = hit_rate_at_10(s, &im, 3).unwrap();
        assert_eq!(h1, h2);
    }

    #[test]
    fn no_eligible_users_is_an_error() {
        let mut im = toy_implicit(5, 120);
        im.test = ObservationMask::new(5, 120, Vec::new()).unwrap();
        assert!(hit_rate_at_10(|_, _| 0.0, &im, 0).is_err());
    }

    #[test]
    fn users_without_enough_negatives_are_skipped() {
        // 50 items only: no user can assemble 100 negatives, so evaluation
        // has no eligible users.
        let im = toy_implicit(5, 50);
        assert!(hit_rate_at_10(|_, _| 0.0, &im, 0).is_err());
    }
}
