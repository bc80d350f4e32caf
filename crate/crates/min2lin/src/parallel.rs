//! Solving the prime-power components of an instance on several threads.

use std::thread;

use min2lin_core::solver::{
    assemble, solve, solve_component, SolveError, SolveResult, SolverConfig,
};
use min2lin_core::system::System;

/// Same result as [`solve`]; components are spread round-robin over
/// `threads` workers.
pub fn solve_threaded(
    sys: &System,
    k: usize,
    cfg: &SolverConfig,
    threads: usize,
) -> Result<SolveResult, SolveError> {
    let omega = sys.ctx().omega();
    if threads <= 1 || omega <= 1 {
        return solve(sys, k, cfg);
    }
    sys.validate()?;
    let workers = threads.min(omega);
    let outcomes = thread::scope(|scope| {
        let handles: Vec<_> = (0..workers)
            .map(|w| {
                scope.spawn(move || {
                    (w..omega)
                        .step_by(workers)
                        .map(|i| solve_component(sys, i, k, cfg))
                        .collect::<Result<Vec<_>, _>>()
                })
            })
            .collect();
        let mut all = Vec::with_capacity(omega);
        for h in handles {
            all.extend(h.join().expect("solver thread panicked")?);
        }
        Ok::<_, SolveError>(all)
    })?;
    assemble(sys, k, cfg, outcomes)
}
