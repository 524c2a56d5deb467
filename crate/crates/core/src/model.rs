//! Domain types shared by every module.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::distribution::UserDistribution;
use crate::error::{Error, Result};

/// Default probability of a random direction in the one-sided PII branch.
pub const DEFAULT_EPSILON: f64 = 1e-3;

/// Default tolerance for `s_i = target_i` in the dictator mediator.
pub const DEFAULT_EQUALITY_TOL: f64 = 1e-9;

/// A point of the unit segment.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct Location(f64);

impl Location {
    pub fn new(value: f64) -> Result<Self> {
        if (0.0..=1.0).contains(&value) {
            Ok(Location(value))
        } else {
            Err(Error::Domain(format!("location {value} is outside [0, 1]")))
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

impl TryFrom<f64> for Location {
    type Error = Error;
    fn try_from(value: f64) -> Result<Self> {
        Location::new(value)
    }
}

impl From<Location> for f64 {
    fn from(l: Location) -> f64 {
        l.0
    }
}

/// Player-indexed facility locations. Order is never changed implicitly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct StrategyProfile(Vec<f64>);

impl StrategyProfile {
    pub fn new(locations: Vec<f64>) -> Result<Self> {
        if locations.is_empty() {
            return Err(Error::InvalidProfile("profile is empty".into()));
        }
        if let Some(x) = locations.iter().find(|x| !(0.0..=1.0).contains(*x)) {
            return Err(Error::InvalidProfile(format!(
                "location {x} is outside [0, 1]"
            )));
        }
        Ok(StrategyProfile(locations))
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn get(&self, player: usize) -> f64 {
        self.0[player]
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }

    /// The canonical representative up to renaming the players.
    pub fn sorted(&self) -> StrategyProfile {
        let mut v = self.0.clone();
        v.sort_by(f64::total_cmp);
        StrategyProfile(v)
    }

    /// Unilateral deviation of `player` to `location`.
    pub fn with(&self, player: usize, location: f64) -> StrategyProfile {
        let mut v = self.0.clone();
        v[player] = location;
        StrategyProfile(v)
    }

    pub fn swapped(&self, i: usize, j: usize) -> StrategyProfile {
        let mut v = self.0.clone();
        v.swap(i, j);
        StrategyProfile(v)
    }

    /// L∞ distance between the sorted views, i.e. the minimum over renamings.
    pub fn renaming_distance(&self, other: &StrategyProfile) -> f64 {
        let (a, b) = (self.sorted(), other.sorted());
        a.0.iter()
            .zip(&b.0)
            .map(|(x, y)| (x - y).abs())
            .fold(0.0, f64::max)
    }
}

impl TryFrom<Vec<f64>> for StrategyProfile {
    type Error = Error;
    fn try_from(v: Vec<f64>) -> Result<Self> {
        StrategyProfile::new(v)
    }
}

impl From<StrategyProfile> for Vec<f64> {
    fn from(p: StrategyProfile) -> Vec<f64> {
        p.0
    }
}

impl fmt::Display for StrategyProfile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, x) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{x}")?;
        }
        write!(f, ")")
    }
}

/// Probability of sending a user to each player.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct DirectionDistribution(pub Vec<f64>);

impl DirectionDistribution {
    pub fn probs(&self) -> &[f64] {
        &self.0
    }

    pub fn is_valid(&self) -> bool {
        self.0.iter().all(|p| (0.0..=1.0).contains(p))
            && (self.0.iter().sum::<f64>() - 1.0).abs() <= 1e-12
    }

    pub fn max_abs_diff(&self, other: &DirectionDistribution) -> f64 {
        self.0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

/// Served user mass per player.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PayoffVector(pub Vec<f64>);

impl PayoffVector {
    pub fn payoffs(&self) -> &[f64] {
        &self.0
    }

    pub fn total(&self) -> f64 {
        self.0.iter().sum()
    }
}

/// The five direction rules and their parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum MediatorSpec {
    /// Nearest facility, ties split uniformly.
    Nime,
    /// Punishes players away from their targets.
    Dict {
        /// Defaults to the socially optimal locations.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        targets: Option<Vec<f64>>,
        #[serde(rename = "equalityTol", default = "default_equality_tol")]
        equality_tol: f64,
    },
    Lime {
        #[serde(default = "default_epsilon")]
        epsilon: f64,
    },
    Glime {
        #[serde(default = "default_epsilon")]
        epsilon: f64,
    },
    Clime {
        lambda: f64,
        #[serde(default = "default_epsilon")]
        epsilon: f64,
    },
}

fn default_epsilon() -> f64 {
    DEFAULT_EPSILON
}

fn default_equality_tol() -> f64 {
    DEFAULT_EQUALITY_TOL
}

/// Mediator family without parameters.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MediatorKind {
    Nime,
    Dict,
    Lime,
    Glime,
    Clime,
}

impl MediatorKind {
    pub const ALL: [MediatorKind; 5] = [
        MediatorKind::Nime,
        MediatorKind::Dict,
        MediatorKind::Lime,
        MediatorKind::Glime,
        MediatorKind::Clime,
    ];

    pub fn name(self) -> &'static str {
        match self {
            MediatorKind::Nime => "nime",
            MediatorKind::Dict => "dict",
            MediatorKind::Lime => "lime",
            MediatorKind::Glime => "glime",
            MediatorKind::Clime => "clime",
        }
    }
}

impl fmt::Display for MediatorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl MediatorSpec {
    pub fn dict() -> Self {
        MediatorSpec::Dict {
            targets: None,
            equality_tol: DEFAULT_EQUALITY_TOL,
        }
    }

    pub fn lime(epsilon: f64) -> Self {
        MediatorSpec::Lime { epsilon }
    }

    pub fn glime(epsilon: f64) -> Self {
        MediatorSpec::Glime { epsilon }
    }

    pub fn clime(lambda: f64, epsilon: f64) -> Self {
        MediatorSpec::Clime { lambda, epsilon }
    }

    pub fn kind(&self) -> MediatorKind {
        match self {
            MediatorSpec::Nime => MediatorKind::Nime,
            MediatorSpec::Dict { .. } => MediatorKind::Dict,
            MediatorSpec::Lime { .. } => MediatorKind::Lime,
            MediatorSpec::Glime { .. } => MediatorKind::Glime,
            MediatorSpec::Clime { .. } => MediatorKind::Clime,
        }
    }

    pub fn epsilon(&self) -> Option<f64> {
        match *self {
            MediatorSpec::Lime { epsilon }
            | MediatorSpec::Glime { epsilon }
            | MediatorSpec::Clime { epsilon, .. } => Some(epsilon),
            _ => None,
        }
    }

    /// Largest admissible λ (exclusive for n ≥ 3, inclusive for n = 2).
    pub fn clime_lambda_bound(n: usize) -> f64 {
        if n == 2 {
            0.25
        } else {
            let n = n as f64;
            (1.0 / n).min((n - 2.0) / (2.0 * n))
        }
    }

    /// Checks the parameter ranges for an `n`-player game.
    pub fn validate(&self, n: usize) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidMediator(msg));
        if let Some(eps) = self.epsilon() {
            if !(eps > 0.0 && eps < 1.0 / 3.0) {
                return bad(format!("epsilon = {eps} must lie in (0, 1/3)"));
            }
        }
        match self {
            MediatorSpec::Dict {
                targets,
                equality_tol,
            } => {
                if !(*equality_tol >= 0.0 && equality_tol.is_finite()) {
                    return bad(format!(
                        "equalityTol = {equality_tol} must be finite and >= 0"
                    ));
                }
                if let Some(t) = targets {
                    if t.len() != n {
                        return bad(format!("{} targets for {n} players", t.len()));
                    }
                    if t.iter().any(|x| !(0.0..=1.0).contains(x)) {
                        return bad("targets must lie in [0, 1]".into());
                    }
                }
            }
            MediatorSpec::Clime { lambda, .. } => {
                let bound = Self::clime_lambda_bound(n);
                let ok = if n == 2 {
                    *lambda > 0.0 && *lambda <= bound
                } else {
                    *lambda > 0.0 && *lambda < bound
                };
                if !ok {
                    return bad(format!(
                        "lambda = {lambda} outside the admissible range for n = {n} (bound {bound})"
                    ));
                }
            }
            _ => {}
        }
        Ok(())
    }
}

/// Everything that defines a game: players, mediator, user density.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GameSpec {
    pub n: usize,
    pub mediator: MediatorSpec,
    #[serde(default)]
    pub distribution: UserDistribution,
}

impl GameSpec {
    pub fn new(n: usize, mediator: MediatorSpec) -> Self {
        GameSpec {
            n,
            mediator,
            distribution: UserDistribution::Uniform,
        }
    }

    pub fn with_distribution(mut self, distribution: UserDistribution) -> Self {
        self.distribution = distribution;
        self
    }
}

/// `((2i - 1) / (2n))_{i=1..n}`, the n-socially optimal locations.
pub fn optimal_locations(n: usize) -> Result<StrategyProfile> {
    if n < 1 {
        return Err(Error::Domain("optimal locations need n >= 1".into()));
    }
    let denom = 2.0 * n as f64;
    Ok(StrategyProfile(
        (1..=n).map(|i| (2 * i - 1) as f64 / denom).collect(),
    ))
}

/// `(q_{(2i-1)/(2n)})_{i=1..n}` for the given density.
pub fn quantile_locations(n: usize, dist: &UserDistribution) -> Result<StrategyProfile> {
    let probs = optimal_locations(n)?;
    let qs = probs
        .as_slice()
        .iter()
        .map(|&p| dist.quantile(p))
        .collect::<Result<Vec<_>>>()?;
    Ok(StrategyProfile(qs))
}
