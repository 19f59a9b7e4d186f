//! Named, counter-based random streams.
//!
//! Every sampling task gets its own ChaCha8 stream keyed by the master seed
//! and a task id, so results never depend on which worker ran the task or in
//! what order tasks were scheduled.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub type Stream = ChaCha8Rng;

/// Bits of the task id reserved for the replication index in [`task_id`].
pub const REPLICATION_BITS: u32 = 40;

/// Stream for task `task` under `master_seed`.
pub fn stream(master_seed: u64, task: u64) -> Stream {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(task);
    rng
}

/// Packs a (group, item) pair into one task id.
pub fn task_id(group: u64, item: u64) -> u64 {
    debug_assert!(item < (1u64 << REPLICATION_BITS));
    (group << REPLICATION_BITS) | item
}

/// Uniform draw in `[0, 1)` with 53 bits of precision.
#[inline]
pub fn uniform<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    rng.gen::<f64>()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::RngCore;

    #[test]
    fn streams_are_reproducible_and_distinct() {
        let a: [u64; 4] = core::array::from_fn({
            let mut r = stream(7, task_id(1, 2));
            move |_| r.next_u64()
        });
        let b: [u64; 4] = core::array::from_fn({
            let mut r = stream(7, task_id(1, 2));
            move |_| r.next_u64()
        });
        let c: [u64; 4] = core::array::from_fn({
            let mut r = stream(7, task_id(1, 3));
            move |_| r.next_u64()
        });
        assert_eq!(a, b);
        assert_ne!(a, c);
    }
}
