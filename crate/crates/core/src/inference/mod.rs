//! Posterior assembly and adaptive Metropolis-Hastings sampling.

mod chain;
mod evaluator;
mod params;
mod posterior;
mod simulate;
mod summary;

pub use chain::{
    accept, acceptance_probability, run_chain, run_chain_with_progress, AcceptanceStats,
    ChainConfig, Initialization, Phase, PosteriorSample, Progress, MAX_INIT_ATTEMPTS,
};
pub use params::{
    ModelConfig, ParameterLayout, ParameterVector, StaticParameters, BASE_PARAMETERS,
    SURVEY_VARIANCE_PARAMETER,
};
pub use posterior::{DerivedSeries, Posterior, Trajectory};
pub use simulate::{simulate_data, SimulatedData, SurveySchedule};
pub use summary::{
    effective_sample_size, gelman_rubin, quantile, summarize, summarize_chains,
    ParameterSummary, SeriesSummary, Summary, DEFAULT_QUANTILES,
};
