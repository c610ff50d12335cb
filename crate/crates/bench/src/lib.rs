//! Fixtures shared by the benchmarks.

use qndm_core::ansatz::random_ansatz;
use qndm_core::pauli::random_observable;
use qndm_core::seed::rng_for;
use qndm_core::Problem;

/// Random `n`-qubit, `m`-layer problem with `j` unit-variance terms.
pub fn fixture(n: usize, m: usize, j: usize, seed: u64) -> Problem {
    let mut rng = rng_for(seed, &[n as u64, m as u64, j as u64]);
    let (ansatz, theta) = random_ansatz(n, m, &mut rng).expect("valid ansatz size");
    let observable = random_observable(n, j, 1.0, &mut rng).expect("valid observable size");
    Problem::new(ansatz, theta, observable).expect("matching sizes")
}
