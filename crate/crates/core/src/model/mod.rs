//! The annual process model.
//!
//! One time period moves the population `N_{t-1}` to `N_t` through
//! reproduction (eggs from `N_{t-1}`), growth (`N^G`), the Baranov split of
//! `N^G` into survivors, catch and natural deaths (`N^S`, `N^C`, `N^D`), and
//! recruitment (`N^R`). The next state is `N^S + N^R`.

mod grid;
mod growth;
mod mortality;
mod recruitment;
mod state;
mod transition;

pub use grid::SizeGrid;
pub use growth::{
    apply_growth, build_growth_matrix, growth_moments, recruit_proportions, GrowthMatrix,
    GrowthParams,
};
pub use mortality::{
    apply_mortality, baranov_split, fishing_mortality_step, gear_selectivity, BaranovSplit,
    MortalityParams,
};
pub use recruitment::{
    beverton_holt, egg_production, recruitment_step, MaturitySchedule, RecruitmentParams,
};
pub use state::PopulationState;
pub use transition::{
    annual_transition, initial_state, AnnualTransitionRecord, LatentNoise, ModelParameters,
    ModelSetup,
};

/// How a multinomial step is carried out.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    /// Replace each multinomial by its expectation (real-valued states).
    #[default]
    Expected,
    /// Draw the multinomials; requires integer-valued states.
    Stochastic,
}
