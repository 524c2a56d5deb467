//! Facility-location (Hotelling) games on [0, 1] with mediators that route
//! users to facilities.
//!
//! Players pick locations, a mediator maps each user to a distribution over
//! players, and payoffs are served user mass. The crate computes payoffs and
//! social cost exactly, certifies pure equilibria against a finite set of
//! deviations, enumerates equilibria on grids and estimates intervention
//! cost.
//!
//! ```
//! use hotelling::{social_cost, optimal_locations, GameSpec, MediatorSpec};
//!
//! let game = GameSpec::new(4, MediatorSpec::lime(1e-3));
//! let sc = social_cost(&game, &optimal_locations(4).unwrap()).unwrap();
//! assert!((sc - 1.0 / 16.0).abs() < 1e-12);
//! ```

pub mod cli;
pub mod distribution;
pub mod equilibrium;
pub mod error;
pub mod mediators;
pub mod metrics;
pub mod model;
pub mod report;

pub use distribution::{PiecewiseLinearDensity, UserDistribution};
pub use equilibrium::{
    best_response_gain, better_response_dynamics, candidate_deviations, find_deviation, is_pne,
    known_pne, neutrality_check, nime_best_pne, nime_worst_pne, pne_enumerate, pne_enumerate_shard,
    DynamicsTrace, NeutralityResult, PneReport, Witness, DEFAULT_GAIN_TOL, DEFAULT_GRID_POINTS,
};
pub use error::{Error, Result};
pub use mediators::{
    clime_direct, compile_policy, dict_direct, direct, glime_direct, lime_direct, nime_direct,
    pii_intervals, Mediator, PiecewisePolicy, PiiList,
};
pub use metrics::{
    adversarial_profile, analytic_ic_bounds, ic_search, intervention_gap, payoff, social_cost,
    Game, IcBounds, IcEstimate,
};
pub use model::{
    optimal_locations, quantile_locations, DirectionDistribution, GameSpec, Location, MediatorKind,
    MediatorSpec, PayoffVector, StrategyProfile,
};
