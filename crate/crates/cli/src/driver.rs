//! Multi-threaded Monte Carlo driver for the uniform-range study.
//!
//! Replications are cut into fixed-size chunks that workers claim from a
//! shared counter. Each replication draws from its own keyed stream and
//! results are reassembled in replication order, so the report does not
//! depend on the number of workers.

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::thread;

use ldp_core::uniform::{
    replicate, report_from_estimates, UniformEstimate, UniformSimConfig, UniformSimReport,
};
use ldp_core::Result;

pub const CHUNK: usize = 1000;

pub fn run_parallel(cfg: &UniformSimConfig, workers: usize) -> Result<UniformSimReport> {
    cfg.validate()?;
    let workers = workers.max(1);
    let chunks_per_point = cfg.iters.div_ceil(CHUNK);
    let total = chunks_per_point * cfg.grid.len();
    let slots: Vec<Mutex<Option<Result<Vec<UniformEstimate>>>>> =
        (0..total).map(|_| Mutex::new(None)).collect();
    let next = AtomicUsize::new(0);

    let work = || loop {
        let task = next.fetch_add(1, Ordering::Relaxed);
        if task >= total {
            break;
        }
        let (g, c) = (task / chunks_per_point, task % chunks_per_point);
        let reps = c * CHUNK..((c + 1) * CHUNK).min(cfg.iters);
        let out = reps
            .map(|r| replicate(cfg, g, r))
            .collect::<Result<Vec<_>>>();
        *slots[task]
            .lock()
            .expect("no worker panics while holding a slot") = Some(out);
    };
    if workers == 1 {
        work();
    } else {
        thread::scope(|s| {
            for _ in 0..workers {
                s.spawn(work);
            }
        });
    }

    let mut per_point: Vec<Vec<UniformEstimate>> = (0..cfg.grid.len())
        .map(|_| Vec::with_capacity(cfg.iters))
        .collect();
    for (task, slot) in slots.into_iter().enumerate() {
        let chunk = slot
            .into_inner()
            .expect("no worker panics while holding a slot")
            .expect("every task ran")?;
        per_point[task / chunks_per_point].extend(chunk);
    }
    report_from_estimates(cfg, &per_point)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ldp_core::uniform::run_simulation;

    #[test]
    fn matches_sequential_run_for_any_worker_count() {
        let cfg = UniformSimConfig {
            theta0: 1.0,
            n: 100,
            alpha: 0.5,
            grid: vec![0.7, 1.0, 1.2],
            iters: 2 * CHUNK + 17,
            seed: 3,
            two_stage: None,
        };
        let reference = run_simulation(&cfg).unwrap();
        for workers in [1, 2, 5] {
            assert_eq!(run_parallel(&cfg, workers).unwrap(), reference);
        }
    }
}
