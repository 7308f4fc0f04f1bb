//! Implicit-feedback matrix construction and train/validation/test masks.
//!
//! The interaction matrix Y holds -1 for watched (user, item) pairs and +1
//! everywhere else. Watched pairs are split by a seeded shuffle; each split's
//! mask then receives an equal number of seeded-random unwatched cells (1:1
//! negative sampling per split, disjoint across splits), since training on
//! all ~1.5M implicit +1 cells would drown the positives.

use std::collections::HashSet;

use rand::seq::SliceRandom;
use rand::Rng;

use crate::error::{Error, Result};
use crate::mask::ObservationMask;
use crate::matrix::Matrix;
use crate::recsys::data::RatingsDataset;
use crate::seed::rng_for;

/// Declared in every report that consumes these masks.
pub const NEGATIVE_SAMPLING: &str = "1:1 random unwatched cells per split";

/// Train/validation/test fractions over watched pairs.
#[derive(Debug, Clone, Copy)]
pub struct SplitSpec {
    pub train: f64,
    pub validation: f64,
    pub test: f64,
    pub seed: u64,
}

impl Default for SplitSpec {
    fn default() -> Self {
        SplitSpec {
            train: 0.8,
            validation: 0.1,
            test: 0.1,
            seed: 0,
        }
    }
}

impl SplitSpec {
    fn validate(&self) -> Result<()> {
        let sum = self.train + self.validation + self.test;
        if !(self.train > 0.0 && self.validation > 0.0 && self.test > 0.0) {
            return Err(Error::invalid("split fractions must be positive"));
        }
        if (sum - 1.0).abs() > 1e-9 {
            return Err(Error::invalid(format!("split fractions sum to {sum}, not 1")));
        }
        Ok(())
    }
}

/// The ±1 matrix with its per-split observation masks.
#[derive(Debug, Clone)]
pub struct ImplicitMatrix {
    pub y: Matrix,
    pub train: ObservationMask,
    pub validation: ObservationMask,
    pub test: ObservationMask,
}

/// Build the implicit matrix and the three masks from a ratings table.
pub fn build_implicit(ds: &RatingsDataset, split: &SplitSpec) -> Result<ImplicitMatrix> {
    split.validate()?;
    if ds.num_users == 0 || ds.num_items == 0 {
        return Err(Error::invalid("dataset has no users or no items"));
    }
    let (rows, cols) = (ds.num_users, ds.num_items);
    let mut y = Matrix::filled(rows, cols, 1.0);
    let mut watched: Vec<(usize, usize)> = Vec::with_capacity(ds.records.len());
    for rec in &ds.records {
        let u = ds
            .user_index(rec.user_id)
            .expect("record user is interned");
        let i = ds
            .item_index(rec.item_id)
            .expect("record item is interned");
        y.set(u, i, -1.0);
        watched.push((u, i));
    }
    watched.sort_unstable();
    watched.dedup();

    let mut rng = rng_for(split.seed, "recsys.split.watched");
    watched.shuffle(&mut rng);
    let w = watched.len();
    let n_train = (split.train * w as f64).floor() as usize;
    let n_val = (split.validation * w as f64).floor() as usize;
    let n_test = w - n_train - n_val;

    let negatives = sample_unwatched(&y, w, split.seed);
    let neg_counts = proportional(negatives.len(), &[n_train, n_val, n_test]);

    let mut neg_iter = negatives.into_iter();
    let build = |pos: &[(usize, usize)], neg: Vec<(usize, usize)>| -> Result<ObservationMask> {
        ObservationMask::new(rows, cols, pos.iter().copied().chain(neg))
    };
    let train = build(
        &watched[..n_train],
        neg_iter.by_ref().take(neg_counts[0]).collect(),
    )?;
    let validation = build(
        &watched[n_train..n_train + n_val],
        neg_iter.by_ref().take(neg_counts[1]).collect(),
    )?;
    let test = build(
        &watched[n_train + n_val..],
        neg_iter.by_ref().take(neg_counts[2]).collect(),
    )?;

    Ok(ImplicitMatrix {
        y,
        train,
        validation,
        test,
    })
}

/// Up to `want` distinct unwatched cells, seeded. Rejection-samples in the
/// sparse regime and enumerates the complement when it is small.
fn sample_unwatched(y: &Matrix, want: usize, seed: u64) -> Vec<(usize, usize)> {
    let (rows, cols) = y.shape();
    let total = rows * cols;
    let watched = y.as_slice().iter().filter(|&&v| v == -1.0).count();
    let available = total - watched;
    let take = want.min(available);
    let mut rng = rng_for(seed, "recsys.split.negatives");
    if take == 0 {
        return Vec::new();
    }
    if take * 3 >= available {
        let mut pool: Vec<(usize, usize)> = (0..rows)
            .flat_map(|i| (0..cols).map(move |j| (i, j)))
            .filter(|&(i, j)| y.at(i, j) == 1.0)
            .collect();
        pool.shuffle(&mut rng);
        pool.truncate(take);
        pool
    } else {
        let mut chosen = HashSet::with_capacity(take);
        let mut out = Vec::with_capacity(take);
        while out.len() < take {
            let i = rng.gen_range(0..rows);
            let j = rng.gen_range(0..cols);
            if y.at(i, j) == 1.0 && chosen.insert((i, j)) {
                out.push((i, j));
            }
        }
        out
    }
}

/// Split `total` items proportionally to `weights`, remainder to the first.
fn proportional(total: usize, weights: &[usize]) -> Vec<usize> {
    let sum: usize = weights.iter().sum();
    if sum == 0 {
        return vec![0; weights.len()];
    }
    let mut out: Vec<usize> = weights.iter().map(|&w| total * w / sum).collect();
    let assigned: usize = out.iter().sum();
    out[0] += total - assigned;
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::recsys::data::{read_movielens, DatasetFormat};

    fn toy_dataset(lines: &str) -> RatingsDataset {
        read_movielens(lines.as_bytes(), DatasetFormat::Ml100k).unwrap()
    }

    #[test]
    fn single_rating_matrix() {
        let ds = toy_dataset("5\t9\t4\t100\n");
        let im = build_implicit(&ds, &SplitSpec::default()).unwrap();
        assert_eq!(im.y.shape(), (1, 1));
        assert_eq!(im.y.at(0, 0), -1.0);
    }

    #[test]
    fn watched_fraction_matches_count() {
        let mut lines = String::new();
        for u in 0..10 {
            for i in 0..6 {
                if (u + i) % 3 == 0 {
                    lines.push_str(&format!("{}\t{}\t3\t{}\n", u + 1, i + 1, 100 + u));
                }
            }
        }
        let ds = toy_dataset(&lines);
        let im = build_implicit(&ds, &SplitSpec::default()).unwrap();
        let watched = im.y.as_slice().iter().filter(|&&v| v == -1.0).count();
        assert_eq!(watched, ds.records.len());
        let frac = watched as f64 / (im.y.rows() * im.y.cols()) as f64;
        assert!((frac - watched as f64 / 60.0).abs() < 1e-12);
    }

    #[test]
    fn masks_are_disjoint_and_balanced() {
        let mut lines = String::new();
        for u in 1..=20 {
            for i in 1..=30 {
                if (u * 7 + i * 3) % 5 < 2 {
                    lines.push_str(&format!("{u}\t{i}\t4\t{}\n", u * 100 + i));
                }
            }
        }
        let ds = toy_dataset(&lines);
        let im = build_implicit(&ds, &SplitSpec::default()).unwrap();
        assert!(im.train.is_disjoint(&im.validation));
        assert!(im.train.is_disjoint(&im.test));
        assert!(im.validation.is_disjoint(&im.test));

        let w = ds.records.len();
        // Each mask holds its watched share plus as many unwatched cells.
        let total: usize = im.train.len() + im.validation.len() + im.test.len();
        assert_eq!(total, 2 * w);
        let train_pos = im
            .train
            .cells()
            .iter()
            .filter(|&&(i, j)| im.y.at(i, j) == -1.0)
            .count();
        let train_neg = im.train.len() - train_pos;
        assert_eq!(train_pos, (0.8 * w as f64).floor() as usize);
        assert_eq!(train_pos, train_neg);
    }

    #[test]
    fn split_is_seed_deterministic() {
        let mut lines = String::new();
        for u in 1..=8 {
            for i in 1..=12 {
                if (u + i) % 2 == 0 {
                    lines.push_str(&format!("{u}\t{i}\t5\t{}\n", u + i));
                }
            }
        }
        let ds = toy_dataset(&lines);
        let s1 = build_implicit(&ds, &SplitSpec::default()).unwrap();
        let s2 = build_implicit(&ds, &SplitSpec::default()).unwrap();
        assert_eq!(s1.train, s2.train);
        assert_eq!(s1.test, s2.test);

        let other = SplitSpec {
            seed: 1,
            ..SplitSpec::default()
        };
        let s3 = build_implicit(&ds, &other).unwrap();
        assert_ne!(s1.train, s3.train);
    }

    #[test]
    fn bad_fractions_rejected() {
        let ds = toy_dataset("1\t1\t1\t1\n");
        let bad = SplitSpec {
            train: 0.9,
            validation: 0.2,
            test: 0.1,
            seed: 0,
        };
        assert!(build_implicit(&ds, &bad).is_err());
    }
}
