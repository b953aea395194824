//! Shared fixtures for the criterion benches.

use pruefer::{sample_admissible, FamilyParams, Potential};

/// Seeded admissible single-barrier potential used by every bench.
pub fn fixture(seed: u64) -> Potential {
    let spec = sample_admissible(seed, &FamilyParams::default()).expect("default family is feasible");
    Potential::new(spec).expect("generated potentials are valid")
}
