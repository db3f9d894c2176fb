//! Backward perfect simulation by ancestor clans, exact and approximate
//! oracle samplers, and clan / Poisson-like diagnostics.

mod diagnostics;
mod oracles;
mod perfect;
mod resolve;
mod trajectory;

pub use diagnostics::{
    clan_diagnostics, poisson_like_diagnostics, ClanDiagnostics, EmptyBallPoint, PoissonLikeReport,
};
pub use oracles::{
    forward_dynamics_oracle, rejection_oracle, rejection_oracle_with_budget, total_energy,
    REJECTION_MAX_PROPOSALS,
};
pub use perfect::{
    estimate_margin, perfect_sample, MarginEstimate, SampleReport, SamplerOptions, SamplingMode,
};
pub use resolve::{resolve_statuses, AncestorClan, Resolution, Resolver};
pub use trajectory::{extend_backward, sample_free_trajectory, SpaceTimePoint, Status, Trajectory};
