//! Conditioning on the number of filled buses, and a conditioning that is not
//! symmetric under relabelling buses.

use lonely_passenger::dist::ratio;
use lonely_passenger::oracle::{
    conditioned_law, configurations, ne_enumerate, ne_law, Configuration, Functional, Outcome,
    DEFAULT_LIMIT,
};
use lonely_passenger::{Execution, Rational};

fn frequency(n: usize, k: usize, given: impl Fn(&Configuration) -> bool) -> Rational {
    let (mut hits, mut total) = (0u64, 0u64);
    for c in configurations(n, k).filter(|c| given(c)) {
        total += 1;
        hits += u64::from(c.buses()[0] == c.buses()[1]);
    }
    ratio(hits, total)
}

#[test]
fn first_two_together_depends_on_how_we_condition() {
    let by_count = frequency(3, 3, |c| c.final_state().n_buses <= 2);
    let by_labels = frequency(3, 3, |c| c.buses().iter().all(|&b| b <= 2));
    assert_eq!(by_count, ratio(3, 7));
    assert_eq!(by_labels, ratio(1, 2));
    assert_ne!(by_count, by_labels);
}

#[test]
fn catalog_functionals_agree_for_small_cells() {
    let exec = Execution::Sequential;
    let law = conditioned_law(3, 3, 2, Functional::FinalLonely, DEFAULT_LIMIT, exec).unwrap();
    assert_eq!(law.mass(&Outcome::Count(1)), ratio(1, 1));
    for n in 1..=5 {
        for k in n..=6 {
            let law = conditioned_law(n, k, n, Functional::FinalLonely, DEFAULT_LIMIT, exec).unwrap();
            assert_eq!(law.mass(&Outcome::Count(n)), ratio(1, 1));
        }
    }
    for f in Functional::ALL {
        for (n, k, l) in [(5, 4, 3), (6, 3, 2), (4, 6, 4)] {
            assert_eq!(
                conditioned_law(n, k, l, f, DEFAULT_LIMIT, exec).unwrap(),
                ne_law(l, n, f, DEFAULT_LIMIT, exec).unwrap(),
                "{f} ({n},{k},{l})"
            );
        }
    }
}

#[test]
fn no_empty_bus_enumeration() {
    let law = ne_enumerate(2, 3, DEFAULT_LIMIT, Execution::Sequential).unwrap();
    assert_eq!(law.size, 6u8.into());
    assert_eq!(law.nonempty_at(2).mass(&1), ratio(1, 3));
    assert_eq!(law.nonempty_at(2).mass(&2), ratio(2, 3));
    let law = ne_enumerate(2, 2, DEFAULT_LIMIT, Execution::Sequential).unwrap();
    assert_eq!(law.lonely_at(2).mass(&2), ratio(1, 1));
    for l in 1..=5 {
        let law = ne_enumerate(l, l, DEFAULT_LIMIT, Execution::Sequential).unwrap();
        assert_eq!(law.nonempty_path_law().len(), 1);
    }
}
