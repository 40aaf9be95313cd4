//! Running chains from a run configuration.

use std::thread;

use shrimp_core::inference::{
    run_chain_with_progress, Initialization, ParameterVector, Phase, Posterior, PosteriorSample,
};
use shrimp_core::observation::ObservationData;

use crate::config::RunConfig;
use crate::error::Result;
use crate::output::PosteriorOutput;

/// Progress is logged every this many reports (about every 10%).
pub const PROGRESS_STRIDE: u64 = 10;

pub fn build_posterior(config: &RunConfig, data: &ObservationData) -> Result<Posterior> {
    let posterior = Posterior::new(config.model_config()?, data, &config.prior_set())?;
    let dropped = posterior.dropped();
    let n = dropped.catches.len() + dropped.surveys.len();
    if n > 0 {
        log::warn!(
            "{n} observation(s) fall outside {}..={} and are ignored",
            config.first_year,
            config.last_year
        );
    }
    Ok(posterior)
}

/// Prior medians with zero innovations.
pub fn reference_point(posterior: &Posterior) -> ParameterVector {
    ParameterVector {
        statics: posterior.priors().iter().map(|p| p.median()).collect(),
        xi_innovations: vec![0.0; posterior.years()],
        zeta_innovations: vec![0.0; posterior.years()],
    }
}

/// Run `config.chains` chains concurrently; chain `k` is seeded with
/// `seed + k`.
pub fn fit(config: &RunConfig, data: &ObservationData, seed: u64) -> Result<PosteriorOutput> {
    let posterior = build_posterior(config, data)?;
    let chains = config.chains;
    let results: Vec<Result<PosteriorSample>> = thread::scope(|scope| {
        let handles: Vec<_> = (0..chains)
            .map(|k| {
                let chain = config.chain.with_seed(seed.wrapping_add(k as u64));
                let posterior = &posterior;
                scope.spawn(move || {
                    let mut reports = 0u64;
                    let mut report = |p: shrimp_core::inference::Progress| {
                        reports += 1;
                        if reports.is_multiple_of(PROGRESS_STRIDE) || p.iteration == p.iterations {
                            let phase = match p.phase {
                                Phase::Tuning => "tuning",
                                Phase::Sampling => "sampling",
                            };
                            log::info!(
                                "chain {k}: {phase} {}/{} (statics acceptance {:.3})",
                                p.iteration,
                                p.iterations,
                                p.statics_acceptance
                            );
                        }
                    };
                    run_chain_with_progress(&chain, posterior, &Initialization::PriorDraw, &mut report)
                        .map_err(Into::into)
                })
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("chain thread panicked"))
            .collect()
    });
    let samples = results.into_iter().collect::<Result<Vec<_>>>()?;
    let dropped = posterior.dropped();
    Ok(PosteriorOutput {
        config: config.clone(),
        seed,
        samples,
        dropped_records: dropped.catches.len() + dropped.surveys.len(),
    })
}
