use rayon::prelude::*;

use super::config::ExperimentConfig;
use super::record::RunRecord;
use super::run_one;
use crate::error::{Error, Result};

/// Single-run configurations: methods × ε values × D_u values × seeds, with the
/// sweep lists collapsed so each hashes as a standalone run.
pub fn expand(cfg: &ExperimentConfig) -> Result<Vec<(ExperimentConfig, u64)>> {
    cfg.validate()?;
    let mut jobs = Vec::new();
    for method in cfg.method_list()? {
        for &epsilon in &cfg.epsilon_list() {
            for &d_u in &cfg.d_u_list() {
                for &seed in &cfg.seeds {
                    let c = ExperimentConfig {
                        method: method.name().into(),
                        methods: Vec::new(),
                        epsilon,
                        epsilons: Vec::new(),
                        d_u,
                        d_u_grid: Vec::new(),
                        seeds: vec![seed],
                        ..cfg.clone()
                    };
                    jobs.push((c, seed));
                }
            }
        }
    }
    Ok(jobs)
}

/// Runs every expanded job on a pool of `cfg.threads` workers (0 = all cores).
/// Runs are independent; results come back in expansion order.
pub fn run_sweep(cfg: &ExperimentConfig) -> Result<Vec<RunRecord>> {
    let jobs = expand(cfg)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.threads)
        .build()
        .map_err(|e| Error::Config(format!("threads: {e}")))?;
    log::info!("{} runs of {} on {} workers", jobs.len(), cfg.scenario, pool.current_num_threads());
    pool.install(|| jobs.par_iter().map(|(c, seed)| run_one(c, *seed)).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny() -> ExperimentConfig {
        ExperimentConfig {
            scenario: "ica_robustness".into(),
            methods: vec!["lr".into(), "gamma".into()],
            epsilons: vec![0.0, 0.2],
            d_x: 2,
            t: 300,
            t_test: 100,
            epochs: 2,
            batch_size: 64,
            seeds: vec![1, 2],
            ..ExperimentConfig::default()
        }
    }

    #[test]
    fn expansion_is_a_product() {
        let jobs = expand(&tiny()).unwrap();
        assert_eq!(jobs.len(), 8);
        assert!(jobs.iter().all(|(c, s)| c.seeds == vec![*s] && c.methods.is_empty() && c.epsilons.is_empty()));
        let hashes: std::collections::BTreeSet<_> = jobs.iter().map(|(c, _)| c.hash()).collect();
        assert_eq!(hashes.len(), 8);
    }

    #[test]
    fn worker_count_does_not_change_results() {
        let one = run_sweep(&ExperimentConfig { threads: 1, ..tiny() }).unwrap();
        let two = run_sweep(&ExperimentConfig { threads: 2, ..tiny() }).unwrap();
        assert_eq!(one.len(), 8);
        for (a, b) in one.iter().zip(&two) {
            assert_eq!((&a.losses, &a.metrics, &a.config_hash), (&b.losses, &b.metrics, &b.config_hash));
        }
    }

    #[test]
    fn rerun_from_hash_and_seed() {
        let recs = run_sweep(&tiny()).unwrap();
        let (c, seed) = expand(&tiny()).unwrap().remove(5);
        let again = run_one(&c, seed).unwrap();
        assert_eq!(again.config_hash, recs[5].config_hash);
        assert_eq!(again.metrics, recs[5].metrics);
    }
}
