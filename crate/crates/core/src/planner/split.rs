use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::{Error, Result};

/// Disjoint train / candidate / test id sets, each sorted ascending.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Split {
    pub train: Vec<usize>,
    pub candidates: Vec<usize>,
    pub test: Vec<usize>,
}

/// `ceil` that ignores floating-point noise just above an integer.
pub(crate) fn ceil_frac(frac: f64, n: usize) -> usize {
    (frac * n as f64 - 1e-9).ceil().max(0.0) as usize
}

fn sizes(n: usize, init_frac: f64, test_frac: f64, min_init: usize) -> Option<(usize, usize)> {
    let test = ceil_frac(test_frac, n).max(1);
    let feasible = n.checked_sub(test + 1)?;
    let train = ceil_frac(init_frac, n).max(min_init.min(feasible)).max(1);
    (n >= min_init + 2 && train + test < n).then_some((train, test))
}

/// Random split with `|train| = max(ceil(init_frac N), min(min_init, feasible))`
/// and `|test| = ceil(test_frac N)`; the remainder are candidates.
pub fn init_split(n: usize, init_frac: f64, test_frac: f64, min_init: usize, seed: u64) -> Result<Split> {
    let in_unit = |f: f64| f > 0.0 && f < 1.0;
    if !in_unit(init_frac) || !in_unit(test_frac) || init_frac + test_frac >= 1.0 {
        return Err(Error::invalid(format!(
            "fractions must lie in (0, 1) with init + test < 1, got {init_frac} and {test_frac}"
        )));
    }
    let Some((train, test)) = sizes(n, init_frac, test_frac, min_init) else {
        let min = (1..=usize::MAX)
            .find(|&m| sizes(m, init_frac, test_frac, min_init).is_some())
            .expect("large datasets always split");
        return Err(Error::DatasetTooSmall { n, min });
    };
    let mut ids: Vec<usize> = (0..n).collect();
    ids.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let sorted = |s: &[usize]| {
        let mut v = s.to_vec();
        v.sort_unstable();
        v
    };
    Ok(Split {
        test: sorted(&ids[..test]),
        train: sorted(&ids[test..test + train]),
        candidates: sorted(&ids[test + train..]),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn paper_sizes() {
        let s = init_split(100, 0.15, 0.10, 20, 0).unwrap();
        assert_eq!((s.train.len(), s.test.len(), s.candidates.len()), (20, 10, 70));
        let s = init_split(200, 0.15, 0.10, 20, 0).unwrap();
        assert_eq!(s.train.len(), 30);
    }

    #[test]
    fn deterministic() {
        assert_eq!(init_split(100, 0.15, 0.1, 20, 4).unwrap(), init_split(100, 0.15, 0.1, 20, 4).unwrap());
        assert_ne!(init_split(100, 0.15, 0.1, 20, 4).unwrap(), init_split(100, 0.15, 0.1, 20, 5).unwrap());
    }

    #[test]
    fn too_small_reports_minimum() {
        match init_split(15, 0.15, 0.1, 20, 0) {
            Err(Error::DatasetTooSmall { n: 15, min }) => {
                assert!(min >= 22);
                assert!(init_split(min, 0.15, 0.1, 20, 0).is_ok());
            }
            other => panic!("{other:?}"),
        }
        assert!(init_split(100, 0.6, 0.5, 20, 0).is_err());
    }

    proptest! {
        #[test]
        fn partitions(n in 22usize..400, seed in any::<u64>()) {
            let s = init_split(n, 0.15, 0.10, 20, seed).unwrap();
            let mut all: Vec<usize> = s.train.iter().chain(&s.test).chain(&s.candidates).copied().collect();
            all.sort_unstable();
            prop_assert_eq!(all, (0..n).collect::<Vec<_>>());
            prop_assert!(!s.candidates.is_empty());
            prop_assert_eq!(s.test.len(), ceil_frac(0.10, n));
        }
    }
}
