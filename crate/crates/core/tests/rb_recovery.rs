//! Recovery invariant: any random Clifford sequence followed by its
//! computed inverse returns the initial state exactly when noise is off.

use rand::Rng;

use trimon_core::experiments::{clifford_group, BlochAction};
use trimon_core::sampling;
use trimon_core::state::PureState;
use trimon_core::Transition;

#[test]
fn random_sequences_plus_recovery_are_the_identity() {
    let group = clifford_group();
    let mut rng = sampling::stream_from_seed(2024);
    for t in Transition::all() {
        let start = PureState::basis(t.lower());
        for _ in 0..200 {
            let length = rng.random_range(1..=40usize);
            let mut state = start.clone();
            let mut net = BlochAction::identity();
            for _ in 0..length {
                let e = &group[rng.random_range(0..group.len())];
                state = state.apply(&e.unitary_on(t));
                net = e.bloch.compose(&net);
            }
            let inverse = net.inverse();
            let recovery = group
                .iter()
                .find(|e| e.bloch == inverse)
                .expect("group closure provides the inverse");
            state = state.apply(&recovery.unitary_on(t));
            let fidelity = state.overlap_sqr(&start);
            assert!(
                fidelity > 1.0 - 1e-10,
                "{t}: length {length} returned fidelity {fidelity}"
            );
        }
    }
}
