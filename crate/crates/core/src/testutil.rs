use proptest::prelude::*;

use crate::dyadic::DyadicStep;
use crate::rational::rat;

pub fn step(level: u32, v: &[i64]) -> DyadicStep {
    DyadicStep::from_ints(level, v).unwrap()
}

pub fn arb_step() -> impl Strategy<Value = DyadicStep> {
    (0u32..=4).prop_flat_map(|level| {
        prop::collection::vec((-20i64..=20, 1i64..=16), 1usize << level).prop_map(move |cells| {
            let values = cells.into_iter().map(|(n, d)| rat(n, d)).collect();
            DyadicStep::new(level, values).unwrap()
        })
    })
}
