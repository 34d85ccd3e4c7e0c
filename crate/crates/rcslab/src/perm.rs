//! Matrix permanents over a [`Field`] and the random-self-reducibility
//! argument that computes a worst-case permanent from an oracle that is only
//! correct on most uniformly random matrices.

use std::collections::HashMap;

use rand::Rng;

use crate::error::{Error, Result};
use crate::field::{Field, PrimeField};
use crate::poly::newton_interpolate;
use crate::rng;

/// Largest n for the factorial-time definition sum.
pub const PERM_DEF_LIMIT: usize = 12;
/// Largest n for the 2^n inclusion-exclusion evaluation.
pub const PERM_RYSER_LIMIT: usize = 20;

fn check_square<E>(matrix: &[Vec<E>]) -> Result<usize> {
    let n = matrix.len();
    if n == 0 {
        return Err(Error::validation("permanent of an empty matrix"));
    }
    if matrix.iter().any(|row| row.len() != n) {
        return Err(Error::validation("permanent needs a square matrix"));
    }
    Ok(n)
}

/// Permanent straight from the definition: sum over all permutations of the
/// product of picked entries. Exponential-factorial time; guarded at
/// n <= 12.
pub fn permanent_def<F: Field>(field: &F, matrix: &[Vec<F::Elem>]) -> Result<F::Elem> {
    let n = check_square(matrix)?;
    if n > PERM_DEF_LIMIT {
        return Err(Error::resource(format!(
            "definition sum is limited to n <= {PERM_DEF_LIMIT}, got {n}"
        )));
    }
    fn walk<F: Field>(
        field: &F,
        matrix: &[Vec<F::Elem>],
        row: usize,
        used: u32,
        partial: &F::Elem,
        acc: &mut F::Elem,
    ) {
        let n = matrix.len();
        if row == n {
            *acc = field.add(acc, partial);
            return;
        }
        if field.is_zero(partial) {
            return; // every extension of a zero prefix contributes zero
        }
        for col in 0..n {
            if used & (1 << col) == 0 {
                let next = field.mul(partial, &matrix[row][col]);
                walk(field, matrix, row + 1, used | (1 << col), &next, acc);
            }
        }
    }
    let mut acc = field.zero();
    let one = field.one();
    walk(field, matrix, 0, 0, &one, &mut acc);
    Ok(acc)
}

/// Permanent by inclusion-exclusion over column subsets, with a Gray-code
/// walk so each step updates one column's contribution to the row sums.
/// 2^n work; guarded at n <= 20.
pub fn permanent_ryser<F: Field>(field: &F, matrix: &[Vec<F::Elem>]) -> Result<F::Elem> {
    let n = check_square(matrix)?;
    if n > PERM_RYSER_LIMIT {
        return Err(Error::resource(format!(
            "inclusion-exclusion is limited to n <= {PERM_RYSER_LIMIT}, got {n}"
        )));
    }
    let mut row_sums: Vec<F::Elem> = vec![field.zero(); n];
    let mut acc = field.zero();
    let mut prev_gray = 0u64;
    for step in 1u64..(1 << n) {
        let gray = step ^ (step >> 1);
        let flipped = (gray ^ prev_gray).trailing_zeros() as usize;
        let added = gray & (1 << flipped) != 0;
        for (i, rs) in row_sums.iter_mut().enumerate() {
            *rs = if added {
                field.add(rs, &matrix[i][flipped])
            } else {
                field.sub(rs, &matrix[i][flipped])
            };
        }
        prev_gray = gray;
        let mut prod = field.one();
        for rs in &row_sums {
            prod = field.mul(&prod, rs);
        }
        // Sign (-1)^{n - |S|}.
        if (n as u32 - gray.count_ones()) % 2 == 1 {
            prod = field.neg(&prod);
        }
        acc = field.add(&acc, &prod);
    }
    Ok(acc)
}

/// Uniformly random n x n matrix over F_p.
pub fn rand_matrix<R: Rng + ?Sized>(field: &PrimeField, n: usize, rng: &mut R) -> Vec<Vec<u64>> {
    (0..n)
        .map(|_| (0..n).map(|_| field.rand_elem(rng)).collect())
        .collect()
}

/// An answerer for permanents over F_p. Implementations may be wrong on some
/// calls; the reduction tolerates a minority of wrong answers per target.
pub trait PermOracle {
    fn perm(&mut self, field: &PrimeField, matrix: &[Vec<u64>]) -> u64;
}

/// Honest oracle backed by the inclusion-exclusion evaluation.
pub struct ExactPermOracle;

impl PermOracle for ExactPermOracle {
    fn perm(&mut self, field: &PrimeField, matrix: &[Vec<u64>]) -> u64 {
        permanent_ryser(field, matrix).expect("exact oracle only sees guarded sizes")
    }
}

/// Wraps the honest answer and, with probability `corrupt_prob` per call,
/// replaces it with a uniformly random wrong value.
pub struct CorruptiblePermOracle {
    pub corrupt_prob: f64,
    rng: rand_chacha::ChaCha12Rng,
    pub calls: u64,
    pub corruptions: u64,
}

impl CorruptiblePermOracle {
    pub fn new(corrupt_prob: f64, seed: u64) -> Result<Self> {
        if !(0.0..=1.0).contains(&corrupt_prob) {
            return Err(Error::validation(format!(
                "corruption probability must lie in [0, 1], got {corrupt_prob}"
            )));
        }
        Ok(CorruptiblePermOracle {
            corrupt_prob,
            rng: rng::stream(seed, "perm-oracle-corruption"),
            calls: 0,
            corruptions: 0,
        })
    }
}

impl PermOracle for CorruptiblePermOracle {
    fn perm(&mut self, field: &PrimeField, matrix: &[Vec<u64>]) -> u64 {
        self.calls += 1;
        let honest = permanent_ryser(field, matrix).expect("guarded size");
        if self.rng.gen::<f64>() < self.corrupt_prob {
            self.corruptions += 1;
            // Uniform among the p-1 wrong values.
            let shift = 1 + self.rng.gen_range(0..field.modulus() - 1);
            field.add(&honest, &shift)
        } else {
            honest
        }
    }
}

/// Compute perm(X) for a worst-case X from an oracle for random matrices.
///
/// Each round draws a uniform Y and queries the oracle on the line
/// A(t) = X t + Y at t = 1..n+1. Every query is individually uniform, so a
/// mostly-correct-on-average oracle answers each honestly with high
/// probability; perm(A(t)) is a degree-n polynomial in t whose leading
/// coefficient is exactly perm(X), which interpolation recovers. The final
/// answer is the strict majority across rounds; if no value wins a strict
/// majority the reduction reports a decode failure rather than guessing.
pub fn permanent_w2a(
    field: &PrimeField,
    x: &[Vec<u64>],
    oracle: &mut dyn PermOracle,
    repetitions: usize,
    seed: u64,
) -> Result<u64> {
    let n = check_square(x)?;
    if n > PERM_RYSER_LIMIT {
        return Err(Error::resource(format!(
            "reduction target is limited to n <= {PERM_RYSER_LIMIT}, got {n}"
        )));
    }
    if field.modulus() < (n as u64) + 2 {
        return Err(Error::validation(format!(
            "the field must contain the {} interpolation nodes: need p > n + 1",
            n + 1
        )));
    }
    if repetitions == 0 {
        return Err(Error::validation("the reduction needs at least one round"));
    }
    let mut counts: HashMap<u64, usize> = HashMap::new();
    for rep in 0..repetitions {
        let mut rep_rng = rng::indexed_stream(seed, "perm-round", rep as u64);
        let y = rand_matrix(field, n, &mut rep_rng);
        let ts: Vec<u64> = (1..=n as u64 + 1).collect();
        let values: Vec<u64> = ts
            .iter()
            .map(|&t| {
                let a: Vec<Vec<u64>> = x
                    .iter()
                    .zip(&y)
                    .map(|(xr, yr)| {
                        xr.iter()
                            .zip(yr)
                            .map(|(xe, ye)| field.add(&field.mul(xe, &t), ye))
                            .collect()
                    })
                    .collect();
                oracle.perm(field, &a)
            })
            .collect();
        let g = newton_interpolate(field, &ts, &values)?;
        let candidate = g.coeff(field, n);
        *counts.entry(candidate).or_insert(0) += 1;
    }
    let (best, votes) = counts
        .into_iter()
        .max_by_key(|&(_, c)| c)
        .expect("at least one round ran");
    if votes * 2 > repetitions {
        Ok(best)
    } else {
        Err(Error::decode(format!(
            "no strict majority across {repetitions} rounds (best value won {votes})"
        )))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::ComplexField;
    use num_complex::Complex64;

    fn f101() -> PrimeField {
        PrimeField::new(101).unwrap()
    }

    #[test]
    fn identity_and_ones() {
        let f = f101();
        for n in 1..=6usize {
            let eye: Vec<Vec<u64>> = (0..n)
                .map(|i| (0..n).map(|j| u64::from(i == j)).collect())
                .collect();
            assert_eq!(permanent_def(&f, &eye).unwrap(), 1);
            assert_eq!(permanent_ryser(&f, &eye).unwrap(), 1);

            let ones: Vec<Vec<u64>> = vec![vec![1u64; n]; n];
            let fact: u64 = (1..=n as u64).product::<u64>() % 101;
            assert_eq!(permanent_def(&f, &ones).unwrap(), fact);
            assert_eq!(permanent_ryser(&f, &ones).unwrap(), fact);
        }
    }

    #[test]
    fn zero_row_kills_the_permanent() {
        let f = f101();
        let m = vec![vec![3u64, 4, 5], vec![0, 0, 0], vec![7, 8, 9]];
        assert_eq!(permanent_def(&f, &m).unwrap(), 0);
        assert_eq!(permanent_ryser(&f, &m).unwrap(), 0);
    }

    #[test]
    fn definition_and_inclusion_exclusion_agree() {
        let f = PrimeField::new(10007).unwrap();
        let mut rng = rng::stream(1, "perm-agree");
        for n in 1..=7usize {
            for _ in 0..5 {
                let m = rand_matrix(&f, n, &mut rng);
                assert_eq!(
                    permanent_def(&f, &m).unwrap(),
                    permanent_ryser(&f, &m).unwrap(),
                    "n = {n}"
                );
            }
        }
    }

    #[test]
    fn agreement_holds_over_complex_numbers() {
        let f = ComplexField::new(1e-9);
        let mut rng = rng::stream(2, "perm-complex");
        let n = 5;
        let m: Vec<Vec<Complex64>> = (0..n)
            .map(|_| {
                (0..n)
                    .map(|_| Complex64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5))
                    .collect()
            })
            .collect();
        let a = permanent_def(&f, &m).unwrap();
        let b = permanent_ryser(&f, &m).unwrap();
        assert!((a - b).norm() < 1e-12);
    }

    #[test]
    fn guards_trip() {
        let f = f101();
        let big = vec![vec![1u64; 13]; 13];
        assert!(matches!(permanent_def(&f, &big), Err(Error::Resource(_))));
        let bigger = vec![vec![1u64; 21]; 21];
        assert!(matches!(
            permanent_ryser(&f, &bigger),
            Err(Error::Resource(_))
        ));
        let ragged = vec![vec![1u64, 2], vec![3]];
        assert!(permanent_def(&f, &ragged).is_err());
    }

    #[test]
    fn reduction_with_honest_oracle_is_exact() {
        let f = PrimeField::new(10007).unwrap();
        let mut rng = rng::stream(3, "w2a-honest");
        let x = rand_matrix(&f, 6, &mut rng);
        let want = permanent_ryser(&f, &x).unwrap();
        let mut oracle = ExactPermOracle;
        let got = permanent_w2a(&f, &x, &mut oracle, 5, 99).unwrap();
        assert_eq!(got, want);
    }

    #[test]
    fn reduction_survives_a_noisy_oracle() {
        let f = PrimeField::new(10007).unwrap();
        let mut rng = rng::stream(4, "w2a-noisy");
        let x = rand_matrix(&f, 5, &mut rng);
        let want = permanent_ryser(&f, &x).unwrap();
        // 10% corruption per call; a round of 6 calls goes fully clean with
        // probability ~0.53, so 15 rounds carry a comfortable majority.
        let mut oracle = CorruptiblePermOracle::new(0.10, 7).unwrap();
        let got = permanent_w2a(&f, &x, &mut oracle, 15, 100).unwrap();
        assert_eq!(got, want);
        assert!(
            oracle.corruptions > 0,
            "the corruption path never exercised"
        );
    }

    #[test]
    fn reduction_reports_failure_under_garbage() {
        let f = PrimeField::new(10007).unwrap();
        struct GarbageOracle(rand_chacha::ChaCha12Rng);
        impl PermOracle for GarbageOracle {
            fn perm(&mut self, field: &PrimeField, _m: &[Vec<u64>]) -> u64 {
                self.0.gen_range(0..field.modulus())
            }
        }
        let mut rng = rng::stream(5, "w2a-garbage");
        let x = rand_matrix(&f, 5, &mut rng);
        let mut oracle = GarbageOracle(rng::stream(6, "garbage"));
        match permanent_w2a(&f, &x, &mut oracle, 9, 101) {
            Err(Error::Decode(_)) => {}
            other => panic!("expected decode failure, got {other:?}"),
        }
    }

    #[test]
    fn reduction_validates_field_size() {
        let f = PrimeField::new(5).unwrap();
        let x = vec![vec![1u64; 6]; 6]; // needs p > 7
        let mut oracle = ExactPermOracle;
        assert!(permanent_w2a(&f, &x, &mut oracle, 3, 0).is_err());
    }

    #[test]
    fn reduction_is_seed_deterministic() {
        let f = PrimeField::new(10007).unwrap();
        let mut rng = rng::stream(7, "w2a-det");
        let x = rand_matrix(&f, 4, &mut rng);
        let mut o1 = CorruptiblePermOracle::new(0.15, 11).unwrap();
        let mut o2 = CorruptiblePermOracle::new(0.15, 11).unwrap();
        let a = permanent_w2a(&f, &x, &mut o1, 11, 55);
        let b = permanent_w2a(&f, &x, &mut o2, 11, 55);
        match (a, b) {
            (Ok(x1), Ok(x2)) => assert_eq!(x1, x2),
            (Err(_), Err(_)) => {}
            other => panic!("divergent outcomes {other:?}"),
        }
    }
}
