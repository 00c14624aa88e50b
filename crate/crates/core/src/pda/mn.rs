use itertools::Itertools;

use super::{validate, Entry, Pda, PdaError};

/// The classical `(K, C(K,t), C(K-1,t-1), C(K,t+1))` array: rows are the
/// `t`-subsets `T` of the nodes in lexicographic order, `(T, k)` is a star iff
/// `k` is in `T`, and otherwise holds the index of the `(t+1)`-subset `T + {k}`.
pub fn generate_mn_pda(k: usize, t: usize) -> Result<Pda, PdaError> {
    if t == 0 || t >= k {
        return Err(PdaError::GeneratorRange { k, t });
    }
    let rows: Vec<Vec<usize>> = (0..k).combinations(t).collect();
    let labels: Vec<Vec<usize>> = (0..k).combinations(t + 1).collect();
    let grid = rows
        .iter()
        .map(|subset| {
            (0..k)
                .map(|col| {
                    if subset.contains(&col) {
                        Entry::Star
                    } else {
                        let mut joined = subset.clone();
                        joined.push(col);
                        joined.sort_unstable();
                        let pos = labels.iter().position(|l| *l == joined).expect("subset enumerated");
                        Entry::Int(pos + 1)
                    }
                })
                .collect()
        })
        .collect();
    validate(grid)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pda::{load_coded, load_shuffle};
    use num_rational::Rational64;

    fn binom(n: usize, r: usize) -> usize {
        (0..r).fold(1, |acc, i| acc * (n - i) / (i + 1))
    }

    #[test]
    fn small_instances() {
        use Entry::{Int as I, Star as X};
        let p = generate_mn_pda(2, 1).unwrap();
        assert_eq!(p.grid(), &[vec![X, I(1)], vec![I(1), X]]);

        let p = generate_mn_pda(3, 1).unwrap();
        assert_eq!(p.params(), (3, 3, 1, 3));
        assert!(p.occurrences().labels().all(|s| p.occurrences().count(s) == 2));

        let p = generate_mn_pda(4, 2).unwrap();
        assert_eq!(p.params(), (4, 6, 3, 4));
        assert!(p.occurrences().labels().all(|s| p.occurrences().count(s) == 3));
    }

    #[test]
    fn out_of_range() {
        assert_eq!(generate_mn_pda(3, 0), Err(PdaError::GeneratorRange { k: 3, t: 0 }));
        assert_eq!(generate_mn_pda(3, 3), Err(PdaError::GeneratorRange { k: 3, t: 3 }));
    }

    #[test]
    fn every_small_generator_output_is_valid() {
        for k in 2..=6 {
            for t in 1..k {
                let p = generate_mn_pda(k, t).unwrap();
                assert_eq!(p.params(), (k, binom(k, t), binom(k - 1, t - 1), binom(k, t + 1)));
                let idx = p.occurrences();
                assert!(idx.labels().all(|s| idx.count(s) == t + 1));
                let weighted: usize = idx.histogram().iter().map(|(g, sg)| g * sg).sum();
                assert_eq!(weighted, p.integer_cells());
                assert_eq!(idx.histogram().values().sum::<usize>(), p.s());

                // equal entries cross at stars, re-checked from the index alone
                for s in idx.labels() {
                    for (a, &(f1, k1)) in idx.positions(s).iter().enumerate() {
                        for &(f2, k2) in &idx.positions(s)[a + 1..] {
                            assert!(f1 != f2 && k1 != k2);
                            assert!(p.is_star(f1, k2) && p.is_star(f2, k1));
                        }
                    }
                }

                let shuffle = load_shuffle(&p);
                let coded = load_coded(&p).unwrap();
                let factor = Rational64::new(p.f() as i64, (p.f() - p.z()) as i64);
                assert_eq!(coded.computation, shuffle.computation * factor);
                assert_eq!(coded.communication, shuffle.communication * factor);
            }
        }
    }
}
