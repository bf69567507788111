use super::HarnessError;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// Assignment of every score to one of `k` folds.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FoldPlan {
    pub seed: u64,
    pub k: usize,
    /// Fold index per score, indexed like the dataset.
    pub assignment: Vec<usize>,
}

/// Score indices playing each role when fold `test` is held out.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FoldRoles {
    pub test_fold: usize,
    pub validation_fold: usize,
    pub train: Vec<usize>,
    pub validation: Vec<usize>,
    pub test: Vec<usize>,
}

/// Stratified k-fold split: scores of each class (in label order) are
/// shuffled with a seeded RNG, then all classes are dealt round-robin onto
/// the folds with one running counter, so fold sizes differ by at most one
/// and every fold gets a near-proportional class mix.
pub fn kfold_split(labels: &[usize], k: usize, seed: u64) -> Result<FoldPlan, HarnessError> {
    if k < 2 {
        return Err(HarnessError::InvalidConfig(format!("need at least 2 folds, got {k}")));
    }
    if labels.len() < k {
        return Err(HarnessError::TooFewScores {
            scores: labels.len(),
            folds: k,
        });
    }
    let classes = labels.iter().max().map_or(0, |m| m + 1);
    let mut by_class = vec![Vec::new(); classes];
    for (i, &label) in labels.iter().enumerate() {
        by_class[label].push(i);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut assignment = vec![0; labels.len()];
    let mut next = 0;
    for mut members in by_class {
        members.shuffle(&mut rng);
        for i in members {
            assignment[i] = next % k;
            next += 1;
        }
    }
    Ok(FoldPlan { seed, k, assignment })
}

impl FoldPlan {
    pub fn fold(&self, fold: usize) -> Vec<usize> {
        (0..self.assignment.len())
            .filter(|&i| self.assignment[i] == fold)
            .collect()
    }

    pub fn fold_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.k];
        for &f in &self.assignment {
            sizes[f] += 1;
        }
        sizes
    }

    /// Fold `test` is held out, fold `(test + 1) mod k` validates, the rest train.
    pub fn roles(&self, test: usize) -> FoldRoles {
        assert!(test < self.k, "fold {test} out of range");
        let validation_fold = (test + 1) % self.k;
        let mut roles = FoldRoles {
            test_fold: test,
            validation_fold,
            train: Vec::new(),
            validation: Vec::new(),
            test: Vec::new(),
        };
        for (i, &f) in self.assignment.iter().enumerate() {
            if f == test {
                roles.test.push(i);
            } else if f == validation_fold {
                roles.validation.push(i);
            } else {
                roles.train.push(i);
            }
        }
        roles
    }
}
