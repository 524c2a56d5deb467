//! Direction rules and their exact piecewise-constant compilation.
//!
//! Every mediator here is a function of the profile and the user position
//! that is constant between a finite set of breakpoints: facility locations,
//! midpoints of facility pairs, and PII endpoints. [`Mediator::compile`]
//! evaluates the rule once per piece, which turns every integral over users
//! into a finite sum.

use serde::Serialize;

use crate::distribution::UserDistribution;
use crate::error::{Error, Result};
use crate::model::{
    optimal_locations, quantile_locations, DirectionDistribution, GameSpec, MediatorSpec,
    StrategyProfile,
};

/// Facilities closer than this to a PII endpoint are treated as sitting on it.
///
/// Absorbs decimal round-off in user-supplied locations such as `0.1666667`.
pub const ENDPOINT_TOL: f64 = 1e-7;

/// Distances closer than this count as a tie between facilities.
pub const TIE_TOL: f64 = 1e-12;

/// An open interval `(lo, hi)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn contains(&self, t: f64) -> bool {
        self.lo < t && t < self.hi
    }
}

/// Potentially intervened intervals: pairwise disjoint, open, inside (0, 1).
#[derive(Debug, Clone, PartialEq, Default, Serialize)]
#[serde(transparent)]
pub struct PiiList(Vec<Interval>);

impl PiiList {
    pub fn intervals(&self) -> &[Interval] {
        &self.0
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    /// All distinct endpoints in increasing order.
    pub fn endpoints(&self) -> Vec<f64> {
        let mut v: Vec<f64> = self.0.iter().flat_map(|p| [p.lo, p.hi]).collect();
        v.sort_by(f64::total_cmp);
        v.dedup();
        v
    }

    fn containing(&self, t: f64) -> Option<&Interval> {
        self.0.iter().find(|p| p.contains(t))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum BothSides {
    /// Nearest facility over `l ∪ r`.
    NearestOverUnion,
    /// Half to the nearest in `l`, half to the nearest in `r`.
    HalfEach,
}

#[derive(Debug, Clone, PartialEq)]
enum Rule {
    Nime,
    Dict {
        targets: Vec<f64>,
        tol: f64,
    },
    Intervening {
        piis: PiiList,
        epsilon: f64,
        both_sides: BothSides,
    },
}

/// A mediator specialised to a player count and user density.
#[derive(Debug, Clone, PartialEq)]
pub struct Mediator {
    spec: MediatorSpec,
    n: usize,
    rule: Rule,
}

/// Builds the PII list a mediator intervenes on.
pub fn pii_intervals(spec: &MediatorSpec, n: usize, dist: &UserDistribution) -> Result<PiiList> {
    if n < 2 {
        return Err(Error::Domain(format!("PIIs need n >= 2, got {n}")));
    }
    let between = |points: &[f64]| {
        PiiList(
            points
                .windows(2)
                .map(|w| Interval { lo: w[0], hi: w[1] })
                .collect(),
        )
    };
    Ok(match spec {
        MediatorSpec::Nime | MediatorSpec::Dict { .. } => PiiList::default(),
        MediatorSpec::Lime { .. } => between(optimal_locations(n)?.as_slice()),
        MediatorSpec::Glime { .. } => between(quantile_locations(n, dist)?.as_slice()),
        MediatorSpec::Clime { lambda, .. } => {
            let nf = n as f64;
            let centers: Vec<f64> = if n == 2 {
                vec![0.5]
            } else {
                vec![1.0 / nf, (nf - 1.0) / nf]
            };
            PiiList(
                centers
                    .into_iter()
                    .map(|c| Interval {
                        lo: c - lambda,
                        hi: c + lambda,
                    })
                    .collect(),
            )
        }
    })
}

impl Mediator {
    pub fn new(spec: &MediatorSpec, n: usize, dist: &UserDistribution) -> Result<Self> {
        if n < 2 {
            return Err(Error::Domain(format!("games need n >= 2, got {n}")));
        }
        spec.validate(n)?;
        let rule = match spec {
            MediatorSpec::Nime => Rule::Nime,
            MediatorSpec::Dict {
                targets,
                equality_tol,
            } => Rule::Dict {
                targets: match targets {
                    Some(t) => t.clone(),
                    None => optimal_locations(n)?.into_vec(),
                },
                tol: *equality_tol,
            },
            MediatorSpec::Lime { epsilon } | MediatorSpec::Clime { epsilon, .. } => {
                Rule::Intervening {
                    piis: pii_intervals(spec, n, dist)?,
                    epsilon: *epsilon,
                    both_sides: BothSides::NearestOverUnion,
                }
            }
            MediatorSpec::Glime { epsilon } => Rule::Intervening {
                piis: pii_intervals(spec, n, dist)?,
                epsilon: *epsilon,
                both_sides: BothSides::HalfEach,
            },
        };
        Ok(Mediator {
            spec: spec.clone(),
            n,
            rule,
        })
    }

    /// The no-intervention mediator for `n` players.
    pub fn nime(n: usize) -> Self {
        Mediator {
            spec: MediatorSpec::Nime,
            n,
            rule: Rule::Nime,
        }
    }

    pub fn spec(&self) -> &MediatorSpec {
        &self.spec
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn piis(&self) -> PiiList {
        match &self.rule {
            Rule::Intervening { piis, .. } => piis.clone(),
            _ => PiiList::default(),
        }
    }

    /// Dictator targets, if this is the dictator mediator.
    pub fn targets(&self) -> Option<&[f64]> {
        match &self.rule {
            Rule::Dict { targets, .. } => Some(targets),
            _ => None,
        }
    }

    fn check_profile(&self, profile: &StrategyProfile) -> Result<()> {
        if profile.len() != self.n {
            return Err(Error::InvalidProfile(format!(
                "profile has {} entries, game has {} players",
                profile.len(),
                self.n
            )));
        }
        Ok(())
    }

    /// `M(s, t)`: where user `t` is sent under profile `s`.
    pub fn direct(&self, profile: &StrategyProfile, t: f64) -> Result<DirectionDistribution> {
        self.check_profile(profile)?;
        if !(0.0..=1.0).contains(&t) {
            return Err(Error::Domain(format!("user {t} is outside [0, 1]")));
        }
        let mut out = vec![0.0; self.n];
        self.direct_into(profile.as_slice(), t, &mut out);
        Ok(DirectionDistribution(out))
    }

    /// Writes `M(s, t)` into `out`, which must have length `n`.
    pub(crate) fn direct_into(&self, s: &[f64], t: f64, out: &mut [f64]) {
        out.fill(0.0);
        match &self.rule {
            Rule::Nime => nearest_into(s, t, |_| true, 1.0, out),
            Rule::Dict { targets, tol } => {
                let obeys = |i: usize| (s[i] - targets[i]).abs() <= *tol;
                if (0..s.len()).any(obeys) {
                    nearest_into(s, t, obeys, 1.0, out);
                } else {
                    out.fill(1.0 / s.len() as f64);
                }
            }
            Rule::Intervening {
                piis,
                epsilon,
                both_sides,
            } => {
                let Some(pii) = piis.containing(t) else {
                    nearest_into(s, t, |_| true, 1.0, out);
                    return;
                };
                let in_l = |i: usize| s[i] <= pii.lo + ENDPOINT_TOL;
                let in_r = |i: usize| s[i] >= pii.hi - ENDPOINT_TOL;
                let has_l = (0..s.len()).any(in_l);
                let has_r = (0..s.len()).any(in_r);
                if has_l && has_r {
                    match both_sides {
                        BothSides::NearestOverUnion => {
                            nearest_into(s, t, |i| in_l(i) || in_r(i), 1.0, out)
                        }
                        BothSides::HalfEach => {
                            nearest_into(s, t, in_l, 0.5, out);
                            nearest_into(s, t, in_r, 0.5, out);
                        }
                    }
                } else if has_l || has_r {
                    nearest_into(s, t, |i| in_l(i) || in_r(i), 1.0 - epsilon, out);
                    let share = epsilon / s.len() as f64;
                    out.iter_mut().for_each(|p| *p += share);
                } else {
                    nearest_into(s, t, |_| true, 1.0, out);
                }
            }
        }
    }

    /// Sorted, deduplicated breakpoints of the policy for profile `s`.
    pub(crate) fn breakpoints(&self, s: &[f64]) -> Vec<f64> {
        let mut b = Vec::with_capacity(2 + s.len() * (s.len() + 1) / 2 + 2 * s.len());
        b.push(0.0);
        b.push(1.0);
        b.extend_from_slice(s);
        for i in 0..s.len() {
            for j in i + 1..s.len() {
                if s[i] != s[j] {
                    b.push(0.5 * (s[i] + s[j]));
                }
            }
        }
        if let Rule::Intervening { piis, .. } = &self.rule {
            for p in piis.intervals() {
                b.push(p.lo);
                b.push(p.hi);
            }
        }
        b.retain(|x| (0.0..=1.0).contains(x));
        b.sort_by(f64::total_cmp);
        b.dedup();
        b
    }

    /// Calls `f(lo, hi, distribution)` for every piece of the policy.
    pub(crate) fn for_each_piece(&self, s: &[f64], mut f: impl FnMut(f64, f64, &[f64])) {
        let b = self.breakpoints(s);
        let mut buf = vec![0.0; s.len()];
        for w in b.windows(2) {
            self.direct_into(s, 0.5 * (w[0] + w[1]), &mut buf);
            f(w[0], w[1], &buf);
        }
    }

    /// Compiles the rule for a fixed profile into an exact piecewise policy.
    pub fn compile(&self, profile: &StrategyProfile) -> Result<PiecewisePolicy> {
        self.check_profile(profile)?;
        let s = profile.as_slice();
        let breakpoints = self.breakpoints(s);
        let mut probs = Vec::with_capacity((breakpoints.len() - 1) * self.n);
        let mut buf = vec![0.0; self.n];
        for w in breakpoints.windows(2) {
            self.direct_into(s, 0.5 * (w[0] + w[1]), &mut buf);
            probs.extend_from_slice(&buf);
        }
        let mut points = Vec::with_capacity(breakpoints.len() * self.n);
        for &x in &breakpoints {
            self.direct_into(s, x, &mut buf);
            points.extend_from_slice(&buf);
        }
        Ok(PiecewisePolicy {
            n: self.n,
            breakpoints,
            probs,
            points,
        })
    }
}

/// Adds `weight`, split uniformly over the nearest members, to `out`.
fn nearest_into(s: &[f64], t: f64, member: impl Fn(usize) -> bool, weight: f64, out: &mut [f64]) {
    let best = (0..s.len())
        .filter(|&i| member(i))
        .map(|i| (s[i] - t).abs())
        .fold(f64::INFINITY, f64::min);
    if !best.is_finite() {
        return;
    }
    let is_nearest = |i: usize| member(i) && (s[i] - t).abs() <= best + TIE_TOL;
    let count = (0..s.len()).filter(|&i| is_nearest(i)).count();
    let share = weight / count as f64;
    for i in (0..s.len()).filter(|&i| is_nearest(i)) {
        out[i] += share;
    }
}

/// A mediator's decision for one profile, as a piecewise-constant map of `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct PiecewisePolicy {
    n: usize,
    breakpoints: Vec<f64>,
    probs: Vec<f64>,
    points: Vec<f64>,
}

impl PiecewisePolicy {
    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    pub fn piece_count(&self) -> usize {
        self.breakpoints.len() - 1
    }

    /// `(lo, hi, distribution)` of piece `k`.
    pub fn piece(&self, k: usize) -> (f64, f64, &[f64]) {
        (
            self.breakpoints[k],
            self.breakpoints[k + 1],
            &self.probs[k * self.n..(k + 1) * self.n],
        )
    }

    pub fn pieces(&self) -> impl Iterator<Item = (f64, f64, &[f64])> + '_ {
        (0..self.piece_count()).map(move |k| self.piece(k))
    }

    /// Distribution at a breakpoint (a measure-zero set of users).
    pub fn point(&self, k: usize) -> &[f64] {
        &self.points[k * self.n..(k + 1) * self.n]
    }

    /// Policy value at `t`, using the point record when `t` is a breakpoint.
    pub fn evaluate(&self, t: f64) -> DirectionDistribution {
        let b = &self.breakpoints;
        if let Ok(k) = b.binary_search_by(|x| x.total_cmp(&t)) {
            return DirectionDistribution(self.point(k).to_vec());
        }
        let k = b.partition_point(|&x| x < t).clamp(1, b.len() - 1) - 1;
        DirectionDistribution(self.piece(k).2.to_vec())
    }
}

/// `M(s, t)` for the game's mediator.
pub fn direct(game: &GameSpec, profile: &StrategyProfile, t: f64) -> Result<DirectionDistribution> {
    Mediator::new(&game.mediator, game.n, &game.distribution)?.direct(profile, t)
}

/// Exact piecewise-constant policy of the game's mediator at `profile`.
pub fn compile_policy(game: &GameSpec, profile: &StrategyProfile) -> Result<PiecewisePolicy> {
    Mediator::new(&game.mediator, game.n, &game.distribution)?.compile(profile)
}

/// Nearest facility, ties split uniformly.
pub fn nime_direct(profile: &StrategyProfile, t: f64) -> Result<DirectionDistribution> {
    if profile.len() < 2 {
        return Err(Error::InvalidProfile("need at least two players".into()));
    }
    Mediator::nime(profile.len()).direct(profile, t)
}

/// Dictator rule with explicit targets.
pub fn dict_direct(
    profile: &StrategyProfile,
    t: f64,
    targets: &[f64],
    equality_tol: f64,
) -> Result<DirectionDistribution> {
    let spec = MediatorSpec::Dict {
        targets: Some(targets.to_vec()),
        equality_tol,
    };
    Mediator::new(&spec, profile.len(), &UserDistribution::Uniform)?.direct(profile, t)
}

pub fn lime_direct(
    profile: &StrategyProfile,
    t: f64,
    epsilon: f64,
) -> Result<DirectionDistribution> {
    Mediator::new(
        &MediatorSpec::lime(epsilon),
        profile.len(),
        &UserDistribution::Uniform,
    )?
    .direct(profile, t)
}

pub fn glime_direct(
    profile: &StrategyProfile,
    t: f64,
    epsilon: f64,
    dist: &UserDistribution,
) -> Result<DirectionDistribution> {
    Mediator::new(&MediatorSpec::glime(epsilon), profile.len(), dist)?.direct(profile, t)
}

pub fn clime_direct(
    profile: &StrategyProfile,
    t: f64,
    lambda: f64,
    epsilon: f64,
) -> Result<DirectionDistribution> {
    Mediator::new(
        &MediatorSpec::clime(lambda, epsilon),
        profile.len(),
        &UserDistribution::Uniform,
    )?
    .direct(profile, t)
}
