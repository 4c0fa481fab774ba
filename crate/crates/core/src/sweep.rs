//! Many independent runs at once. With the `parallel` feature (on by
//! default) runs are spread over a rayon pool; without it they run in order.
//! Results are in input order either way.

use crate::harness::{run, HarnessError, RunConfig, RunOutcome};

pub fn seq_map<T: Sync, R: Send>(items: &[T], f: impl Fn(&T) -> R + Sync + Send) -> Vec<R> {
    items.iter().map(f).collect()
}

#[cfg(feature = "parallel")]
pub fn par_map<T: Sync, R: Send>(items: &[T], f: impl Fn(&T) -> R + Sync + Send) -> Vec<R> {
    use rayon::prelude::*;
    items.par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
pub fn par_map<T: Sync, R: Send>(items: &[T], f: impl Fn(&T) -> R + Sync + Send) -> Vec<R> {
    seq_map(items, f)
}

pub fn run_batch(configs: &[RunConfig]) -> Vec<Result<RunOutcome, HarnessError>> {
    par_map(configs, run)
}

pub fn run_batch_sequential(configs: &[RunConfig]) -> Vec<Result<RunOutcome, HarnessError>> {
    seq_map(configs, run)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::Task;
    use crate::sim::bundled_level;

    #[test]
    fn parallel_matches_sequential() {
        let level = bundled_level("chain_3").unwrap();
        let configs: Vec<_> = (1..=6)
            .map(|s| {
                RunConfig::new(level.clone(), Task::EfReach("treasure".into()))
                    .with_budget(10_000)
                    .with_seed(s)
            })
            .collect();
        let a: Vec<_> = run_batch(&configs)
            .into_iter()
            .map(|r| r.unwrap().trace_text())
            .collect();
        let b: Vec<_> = run_batch_sequential(&configs)
            .into_iter()
            .map(|r| r.unwrap().trace_text())
            .collect();
        assert_eq!(a, b);
    }
}
