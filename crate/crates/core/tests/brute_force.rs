//! Combinatorial quantities against direct enumeration.

use lonely_passenger::combinatorics::{
    check_newton_inequality, check_stirling_ratio_inequality, lonely_count_configs,
    lonely_first_prob_ne, no_singleton_count, stirling2, surjection_count, touchard_coefficients,
};
use lonely_passenger::dist::ratio;
use lonely_passenger::BigNat;

/// Counts set partitions of an `n`-set by block count via restricted growth strings.
fn partition_counts(n: usize) -> Vec<u64> {
    fn go(i: usize, n: usize, blocks: usize, counts: &mut [u64]) {
        if i == n {
            counts[blocks] += 1;
            return;
        }
        for b in 0..=blocks {
            go(i + 1, n, blocks.max(b + 1), counts);
        }
    }
    let mut counts = vec![0; n + 1];
    if n == 0 {
        counts[0] = 1;
    } else {
        go(1, n, 1, &mut counts);
    }
    counts
}

/// Every function `{0..n} -> {0..k}` as a vector of bin sizes.
fn for_each_function(n: usize, k: usize, mut visit: impl FnMut(&[usize], &[usize])) {
    let mut f = vec![0; n];
    loop {
        let mut sizes = vec![0; k];
        for &b in &f {
            sizes[b] += 1;
        }
        visit(&f, &sizes);
        let mut i = n;
        loop {
            if i == 0 {
                return;
            }
            i -= 1;
            f[i] += 1;
            if f[i] < k {
                break;
            }
            f[i] = 0;
        }
    }
}

#[test]
fn stirling_matches_partition_enumeration() {
    for n in 0..=12 {
        let counts = partition_counts(n);
        for k in 0..=n + 1 {
            let expected = counts.get(k).copied().unwrap_or(0);
            assert_eq!(stirling2(n, k), BigNat::from(expected), "S({n},{k})");
        }
    }
    assert_eq!(partition_counts(4)[2], 7);
}

#[test]
fn stirling_ratio_on_brute_triangle() {
    let rows: Vec<Vec<u64>> = (0..=12).map(partition_counts).collect();
    let s = |n: usize, k: usize| rows[n].get(k).copied().unwrap_or(0) as u128;
    for n in 2..=12 {
        for k in 1..n {
            let brute = s(n - 1, k - 1) * s(n, k + 1) <= s(n - 1, k) * s(n, k);
            assert_eq!(check_stirling_ratio_inequality(n, k), brute, "({n},{k})");
            assert!(brute);
        }
    }
}

#[test]
fn function_counts() {
    for n in 0..=7 {
        for k in 1..=6 {
            if (k as u64).pow(n as u32) > 300_000 {
                continue;
            }
            let mut onto = 0u64;
            let mut no_singleton = 0u64;
            let mut by_lonely = vec![0u64; n + 1];
            for_each_function(n, k, |_, sizes| {
                onto += u64::from(sizes.iter().all(|&s| s > 0));
                no_singleton += u64::from(!sizes.contains(&1));
                by_lonely[sizes.iter().filter(|&&s| s == 1).count()] += 1;
            });
            assert_eq!(surjection_count(n, k), BigNat::from(onto), "onto ({n},{k})");
            assert_eq!(no_singleton_count(n, k), BigNat::from(no_singleton), "({n},{k})");
            for (j, &c) in by_lonely.iter().enumerate() {
                assert_eq!(lonely_count_configs(n, k, j), BigNat::from(c), "({n},{k},{j})");
            }
        }
    }
}

#[test]
fn lonely_first_matches_conditioned_frequency() {
    for m in 1..=8 {
        for i in 1..=m {
            if (i as u64).pow(m as u32) > 1_000_000 {
                continue;
            }
            let (mut onto, mut first_alone) = (0u64, 0u64);
            for_each_function(m, i, |f, sizes| {
                if sizes.iter().all(|&s| s > 0) {
                    onto += 1;
                    first_alone += u64::from(sizes[f[0]] == 1);
                }
            });
            assert_eq!(lonely_first_prob_ne(m, i).unwrap(), ratio(first_alone, onto), "({m},{i})");
        }
    }
}

#[test]
fn documented_values() {
    assert_eq!(stirling2(0, 0), BigNat::from(1u8));
    assert_eq!(stirling2(9, 1), BigNat::from(1u8));
    assert_eq!(stirling2(3, 2), BigNat::from(3u8));
    assert_eq!(surjection_count(3, 2), BigNat::from(6u8));
    assert_eq!(surjection_count(3, 3), BigNat::from(6u8));
    assert_eq!(lonely_first_prob_ne(3, 2).unwrap(), ratio(1, 3));
    assert_eq!(lonely_first_prob_ne(2, 1).unwrap(), ratio(0, 1));
    assert!(lonely_first_prob_ne(2, 3).is_err());
    assert_eq!(no_singleton_count(2, 2), BigNat::from(2u8));
    assert_eq!(no_singleton_count(0, 5), BigNat::from(1u8));
    assert_eq!(no_singleton_count(1, 5), BigNat::from(0u8));
    assert_eq!(lonely_count_configs(3, 2, 1), BigNat::from(6u8));
    assert_eq!(lonely_count_configs(3, 2, 3), BigNat::from(0u8));
    let row = touchard_coefficients(5);
    let expected: Vec<BigNat> = [1u8, 15, 25, 10, 1].map(BigNat::from).to_vec();
    assert_eq!(row, expected);
    assert!(check_newton_inequality(&row, 3).unwrap());
    let tri: Vec<BigNat> = [1u8, 3, 1].map(BigNat::from).to_vec();
    assert!(check_newton_inequality(&tri, 2).unwrap());
    assert!(check_newton_inequality(&tri, 1).is_err());
    assert!(check_newton_inequality(&tri, 3).is_err());
}
