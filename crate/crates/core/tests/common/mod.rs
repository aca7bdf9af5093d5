#![allow(dead_code)]

use fairshare::model::Instance;
use fairshare::num::{int, Rational};
use proptest::prelude::*;

/// Integer valuations in `0..=max`, every agent valuing at least one item.
pub fn instance(n: std::ops::RangeInclusive<usize>, m: std::ops::RangeInclusive<usize>, max: i64) -> impl Strategy<Value = Instance> {
    (n, m).prop_flat_map(move |(n, m)| {
        prop::collection::vec(prop::collection::vec(0..=max, m), n).prop_map(|mut rows| {
            for row in &mut rows {
                if row.iter().all(|&v| v == 0) {
                    row[0] = 1;
                }
            }
            Instance::from_integers(&rows).unwrap()
        })
    })
}

pub fn binary_instance(n: std::ops::RangeInclusive<usize>, m: std::ops::RangeInclusive<usize>) -> impl Strategy<Value = Instance> {
    instance(n, m, 1)
}

/// Positive rationals `p/q` with small numerator and denominator.
pub fn positive_factor() -> impl Strategy<Value = Rational> {
    (1i64..=9, 1i64..=9).prop_map(|(p, q)| Rational::new(p.into(), q.into()))
}

pub fn disjoint(n: usize) -> Instance {
    let rows: Vec<Vec<i64>> = (0..n).map(|i| (0..n).map(|k| i64::from(i == k)).collect()).collect();
    Instance::from_integers(&rows).unwrap()
}

pub fn sqrt_n_bound_holds(theta: &Rational, n: usize) -> bool {
    // θ(2√n + 1) >= 1  <=>  (1/θ - 1)/2 <= √n
    let lhs = (theta.recip() - int(1)) / int(2);
    fairshare::num::le_sqrt(&lhs, &int(n as i64))
}
