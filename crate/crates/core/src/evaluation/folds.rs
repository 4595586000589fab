use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{DbsCondition, Session};

/// One chronological fold. Block fields are positions in `Session::blocks`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChronoFold {
    pub test_on_block: usize,
    pub test_off_block: usize,
    pub train_blocks: Vec<usize>,
}

impl ChronoFold {
    pub fn test_blocks(&self) -> [usize; 2] {
        let (a, b) = (self.test_on_block, self.test_off_block);
        [a.min(b), a.max(b)]
    }

    pub fn is_test(&self, block: usize) -> bool {
        block == self.test_on_block || block == self.test_off_block
    }
}

pub fn chrono_folds(session: &Session) -> Result<Vec<ChronoFold>> {
    let conditions: Vec<DbsCondition> = session.blocks().iter().map(|b| b.condition).collect();
    folds_for_conditions(&conditions)
}

/// Walks the block sequence pairing each block with its successor when the
/// conditions differ and then skipping past the pair; a block whose
/// successor has the same condition is left for training only.
pub fn folds_for_conditions(conditions: &[DbsCondition]) -> Result<Vec<ChronoFold>> {
    let has_on = conditions.iter().any(|c| c.is_on());
    let has_off = conditions.iter().any(|c| !c.is_on());
    if !(has_on && has_off) {
        return Err(Error::SingleCondition);
    }
    let mut folds = Vec::new();
    let mut i = 0;
    while i + 1 < conditions.len() {
        if conditions[i] != conditions[i + 1] {
            let (on, off) = if conditions[i].is_on() { (i, i + 1) } else { (i + 1, i) };
            let train_blocks = (0..conditions.len()).filter(|&b| b != i && b != i + 1).collect();
            folds.push(ChronoFold {
                test_on_block: on,
                test_off_block: off,
                train_blocks,
            });
            i += 2;
        } else {
            i += 1;
        }
    }
    for (k, fold) in folds.iter().enumerate() {
        if fold.train_blocks.is_empty() {
            return Err(Error::EmptyTrain { fold: k });
        }
    }
    Ok(folds)
}

/// Row indices of one fold, for data laid out one row per included trial.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FoldRows {
    pub train: Vec<usize>,
    pub test: Vec<usize>,
}

/// Splits rows by the block position each row came from.
pub fn fold_rows(folds: &[ChronoFold], row_blocks: &[usize]) -> Vec<FoldRows> {
    folds
        .iter()
        .map(|fold| {
            let (test, train): (Vec<usize>, Vec<usize>) = (0..row_blocks.len()).partition(|&r| fold.is_test(row_blocks[r]));
            FoldRows { train, test }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use DbsCondition::{Off, On};

    fn alternating(n: usize) -> Vec<DbsCondition> {
        (0..n).map(|i| if i % 2 == 0 { Off } else { On }).collect()
    }

    #[test]
    fn twelve_alternating_blocks_give_six_folds() {
        let folds = folds_for_conditions(&alternating(12)).unwrap();
        assert_eq!(folds.len(), 6);
        for (k, f) in folds.iter().enumerate() {
            assert_eq!(f.test_blocks(), [2 * k, 2 * k + 1]);
            assert_eq!(f.train_blocks.len(), 10);
        }
    }

    #[test]
    fn two_blocks_leave_nothing_to_train_on() {
        assert!(matches!(
            folds_for_conditions(&[Off, On]),
            Err(Error::EmptyTrain { fold: 0 })
        ));
    }

    #[test]
    fn trailing_block_is_train_only() {
        let folds = folds_for_conditions(&alternating(13)).unwrap();
        assert_eq!(folds.len(), 6);
        assert!(folds.iter().all(|f| !f.is_test(12) && f.train_blocks.contains(&12)));
    }

    #[test]
    fn repeated_condition_shifts_the_pairing() {
        let folds = folds_for_conditions(&[Off, Off, On, Off, On, On]).unwrap();
        let pairs: Vec<[usize; 2]> = folds.iter().map(|f| f.test_blocks()).collect();
        assert_eq!(pairs, vec![[1, 2], [3, 4]]);
    }

    #[test]
    fn single_condition_is_rejected() {
        assert!(matches!(folds_for_conditions(&[On, On, On]), Err(Error::SingleCondition)));
    }

    #[test]
    fn rows_follow_their_blocks() {
        let folds = folds_for_conditions(&alternating(4)).unwrap();
        let rows = fold_rows(&folds, &[0, 0, 1, 2, 3, 3]);
        assert_eq!(rows[0].test, vec![0, 1, 2]);
        assert_eq!(rows[0].train, vec![3, 4, 5]);
    }

    proptest! {
        #[test]
        fn folds_are_clean(bits in proptest::collection::vec(any::<bool>(), 3..20)) {
            let conditions: Vec<DbsCondition> = bits.iter().map(|&b| if b { On } else { Off }).collect();
            let Ok(folds) = folds_for_conditions(&conditions) else { return Ok(()); };
            let mut seen = std::collections::HashSet::new();
            for f in &folds {
                prop_assert_eq!(conditions[f.test_on_block], On);
                prop_assert_eq!(conditions[f.test_off_block], Off);
                let [a, b] = f.test_blocks();
                prop_assert_eq!(b, a + 1);
                prop_assert!(!f.train_blocks.contains(&a) && !f.train_blocks.contains(&b));
                prop_assert_eq!(f.train_blocks.len() + 2, conditions.len());
                prop_assert!(seen.insert(a) && seen.insert(b));
            }
        }
    }
}
