//! Best responses, equilibrium certification, enumeration and dynamics.
//!
//! Deviations over the continuum are certified against a finite candidate
//! set. With the density fixed, a player's payoff as a function of its own
//! location changes slope or jumps only at opponent locations, reflections
//! of opponents across PII endpoints and density breakpoints, and at the PII
//! endpoints themselves. The candidate set covers those points and their
//! one-sided neighbourhoods, plus a uniform grid as a safety net.

use std::ops::RangeInclusive;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::distribution::UserDistribution;
use crate::error::{Error, Result};
use crate::metrics::Game;
use crate::model::{
    optimal_locations, quantile_locations, GameSpec, MediatorSpec, StrategyProfile,
};

/// Offset used to approach a discontinuity from either side.
pub const SIDE_DELTA: f64 = 1e-6;

/// Gains at or below this do not refute an equilibrium.
pub const DEFAULT_GAIN_TOL: f64 = 1e-9;

/// Uniform grid size in every candidate set.
pub const DEFAULT_GRID_POINTS: usize = 101;

/// Largest number of sorted profiles [`pne_enumerate`] will visit.
pub const ENUMERATION_BUDGET: u128 = 100_000_000;

/// A profitable unilateral deviation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    pub player: usize,
    pub deviation: f64,
}

/// Outcome of checking a profile against every candidate deviation.
///
/// `is_pne` certifies the profile relative to the candidate set only.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct PneReport {
    pub is_pne: bool,
    pub worst_gain: f64,
    pub witness: Option<Witness>,
    pub candidate_count: usize,
    pub gain_tol: f64,
    pub grid_step: f64,
}

/// A sequence of single-player improving moves.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DynamicsTrace {
    pub states: Vec<StrategyProfile>,
    pub converged: bool,
    pub steps: usize,
}

impl DynamicsTrace {
    pub fn last(&self) -> &StrategyProfile {
        self.states
            .last()
            .expect("trace always holds the start state")
    }
}

/// A profile where swapping two players does not swap their payoffs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NeutralityWitness {
    pub profile: StrategyProfile,
    pub i: usize,
    pub j: usize,
    /// `π_i(s) - π_j(s with i and j swapped)`.
    pub difference: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct NeutralityResult {
    pub is_neutral_on_sample: bool,
    pub witness: Option<NeutralityWitness>,
}

fn density_breakpoints(dist: &UserDistribution) -> Vec<f64> {
    match dist {
        UserDistribution::Uniform => Vec::new(),
        UserDistribution::PiecewiseLinear(d) => d.breakpoints().to_vec(),
    }
}

/// Player-independent part of the candidate set.
fn static_candidates(game: &Game) -> Vec<f64> {
    let n = game.n();
    let mut c = Vec::new();
    for e in game.mediator().piis().endpoints() {
        c.extend([e - SIDE_DELTA, e, e + SIDE_DELTA]);
    }
    if let Ok(o) = optimal_locations(n) {
        c.extend_from_slice(o.as_slice());
    }
    if let Ok(q) = quantile_locations(n, game.distribution()) {
        c.extend_from_slice(q.as_slice());
    }
    if let Some(t) = game.mediator().targets() {
        c.extend_from_slice(t);
    }
    c.extend([0.0, 1.0]);
    c.retain(|x| (0.0..=1.0).contains(x));
    c.sort_by(f64::total_cmp);
    c.dedup();
    c
}

fn grid(grid_points: usize) -> Vec<f64> {
    let m = (grid_points - 1) as f64;
    (0..grid_points).map(|k| k as f64 / m).collect()
}

/// Opponent-dependent candidates for `player`.
fn opponent_candidates(game: &Game, s: &[f64], player: usize) -> Vec<f64> {
    let mut mirrors = game.mediator().piis().endpoints();
    mirrors.extend(density_breakpoints(game.distribution()));
    let mut c = Vec::new();
    for (j, &x) in s.iter().enumerate() {
        if j == player {
            continue;
        }
        c.extend([x - SIDE_DELTA, x, x + SIDE_DELTA]);
        for &e in &mirrors {
            c.push(2.0 * e - x);
        }
    }
    c.retain(|x| (0.0..=1.0).contains(x));
    c
}

fn merge(mut a: Vec<f64>, b: &[f64]) -> Vec<f64> {
    a.extend_from_slice(b);
    a.sort_by(f64::total_cmp);
    a.dedup();
    a
}

fn check_grid_points(grid_points: usize) -> Result<()> {
    if grid_points < 2 {
        return Err(Error::Domain(format!(
            "gridPoints must be at least 2, got {grid_points}"
        )));
    }
    Ok(())
}

fn check_player(game: &Game, player: usize) -> Result<()> {
    if player >= game.n() {
        return Err(Error::Domain(format!(
            "player {player} out of range for {} players",
            game.n()
        )));
    }
    Ok(())
}

/// Finite set of locations tried as deviations for `player`.
pub fn candidate_deviations(
    game: &GameSpec,
    profile: &StrategyProfile,
    player: usize,
    grid_points: usize,
) -> Result<Vec<f64>> {
    check_grid_points(grid_points)?;
    let g = Game::new(game)?;
    g.check(profile)?;
    check_player(&g, player)?;
    Ok(candidates_for(&g, profile.as_slice(), player, grid_points))
}

fn candidates_for(game: &Game, s: &[f64], player: usize, grid_points: usize) -> Vec<f64> {
    let c = merge(static_candidates(game), &grid(grid_points));
    merge(c, &opponent_candidates(game, s, player))
}

/// Best deviation for one player: `(gain, argmax)`. The gain may be negative.
///
/// Ties keep the smallest location.
pub fn best_response_gain(
    game: &GameSpec,
    profile: &StrategyProfile,
    player: usize,
    candidates: &[f64],
) -> Result<(f64, f64)> {
    let g = Game::new(game)?;
    g.check(profile)?;
    check_player(&g, player)?;
    if candidates.is_empty() {
        return Err(Error::Domain("candidate set is empty".into()));
    }
    if let Some(bad) = candidates.iter().find(|x| !(0.0..=1.0).contains(*x)) {
        return Err(Error::Domain(format!("candidate {bad} is outside [0, 1]")));
    }
    Ok(best_response(&g, profile.as_slice(), player, candidates))
}

fn best_response(game: &Game, s: &[f64], player: usize, candidates: &[f64]) -> (f64, f64) {
    let base = game.payoff_raw(s, player);
    let mut work = s.to_vec();
    let mut best = (f64::NEG_INFINITY, candidates[0]);
    for &c in candidates {
        work[player] = c;
        let v = game.payoff_raw(&work, player);
        if v > best.0 {
            best = (v, c);
        }
    }
    (best.0 - base, best.1)
}

/// Checks every player against its candidate set.
pub fn is_pne(
    game: &GameSpec,
    profile: &StrategyProfile,
    gain_tol: f64,
    grid_points: usize,
) -> Result<PneReport> {
    let g = Game::new(game)?;
    g.check(profile)?;
    pne_report(&g, profile.as_slice(), gain_tol, grid_points)
}

pub(crate) fn pne_report(
    game: &Game,
    s: &[f64],
    gain_tol: f64,
    grid_points: usize,
) -> Result<PneReport> {
    if !(gain_tol > 0.0) {
        return Err(Error::Domain(format!(
            "gainTol must be positive, got {gain_tol}"
        )));
    }
    check_grid_points(grid_points)?;
    let per_player: Vec<(f64, f64, usize)> = (0..s.len())
        .into_par_iter()
        .map(|i| {
            let c = candidates_for(game, s, i, grid_points);
            let (gain, at) = best_response(game, s, i, &c);
            (gain, at, c.len())
        })
        .collect();
    let mut worst = (f64::NEG_INFINITY, 0, 0.0);
    for (i, &(gain, at, _)) in per_player.iter().enumerate() {
        if gain > worst.0 {
            worst = (gain, i, at);
        }
    }
    let is_pne = worst.0 <= gain_tol;
    Ok(PneReport {
        is_pne,
        worst_gain: worst.0,
        witness: (!is_pne).then_some(Witness {
            player: worst.1,
            deviation: worst.2,
        }),
        candidate_count: per_player.iter().map(|x| x.2).sum(),
        gain_tol,
        grid_step: 1.0 / (grid_points - 1) as f64,
    })
}

/// First deviation found with gain above `gain_tol`, trying structural
/// candidates before the grid. `None` means the profile passes [`is_pne`]
/// at the same settings.
pub fn find_deviation(
    game: &Game,
    profile: &StrategyProfile,
    gain_tol: f64,
    grid_points: usize,
) -> Result<Option<(Witness, f64)>> {
    game.check(profile)?;
    check_grid_points(grid_points)?;
    let statics = static_candidates(game);
    let grid = grid(grid_points);
    Ok(first_deviation(
        game,
        profile.as_slice(),
        gain_tol,
        &statics,
        &grid,
    ))
}

fn first_deviation(
    game: &Game,
    s: &[f64],
    gain_tol: f64,
    statics: &[f64],
    grid: &[f64],
) -> Option<(Witness, f64)> {
    let mut work = s.to_vec();
    let bases: Vec<f64> = (0..s.len()).map(|i| game.payoff_raw(s, i)).collect();
    let try_all = |player: usize, cands: &[f64], work: &mut Vec<f64>| {
        for &c in cands {
            work[player] = c;
            let gain = game.payoff_raw(work, player) - bases[player];
            if gain > gain_tol {
                work[player] = s[player];
                return Some((
                    Witness {
                        player,
                        deviation: c,
                    },
                    gain,
                ));
            }
        }
        work[player] = s[player];
        None
    };
    for i in 0..s.len() {
        let opp = opponent_candidates(game, s, i);
        if let Some(w) = try_all(i, &opp, &mut work).or_else(|| try_all(i, statics, &mut work)) {
            return Some(w);
        }
    }
    for i in 0..s.len() {
        if let Some(w) = try_all(i, grid, &mut work) {
            return Some(w);
        }
    }
    None
}

/// Validates a grid step and returns the number of grid intervals.
pub fn grid_intervals(grid_step: f64) -> Result<usize> {
    if !(grid_step > 0.0 && grid_step <= 1.0) {
        return Err(Error::Domain(format!(
            "gridStep must lie in (0, 1], got {grid_step}"
        )));
    }
    let inv = 1.0 / grid_step;
    let m = inv.round();
    if (inv - m).abs() > 1e-3 {
        return Err(Error::Domain(format!(
            "1/gridStep must be an integer, got {inv}"
        )));
    }
    Ok(m as usize)
}

/// Number of sorted profiles of `n` players on a grid with `m` intervals:
/// multisets of size `n` from `m + 1` points.
pub fn sorted_profile_count(m: usize, n: usize) -> u128 {
    // C(m + n, n), computed incrementally; every prefix product is an integer
    let mut c: u128 = 1;
    for k in 1..=n as u128 {
        c = c * (m as u128 + k) / k;
    }
    c
}

/// All sorted grid profiles that pass [`is_pne`], in lexicographic order.
///
/// Profiles are canonical up to renaming the players.
pub fn pne_enumerate(
    game: &GameSpec,
    grid_step: f64,
    gain_tol: f64,
) -> Result<Vec<StrategyProfile>> {
    let m = grid_intervals(grid_step)?;
    pne_enumerate_shard(game, grid_step, gain_tol, 0..=m)
}

/// The part of [`pne_enumerate`] whose smallest grid index lies in `first`.
///
/// Concatenating shards over a partition of `0..=m`, in order, reproduces
/// the full enumeration.
pub fn pne_enumerate_shard(
    game: &GameSpec,
    grid_step: f64,
    gain_tol: f64,
    first: RangeInclusive<usize>,
) -> Result<Vec<StrategyProfile>> {
    if !(gain_tol > 0.0) {
        return Err(Error::Domain(format!(
            "gainTol must be positive, got {gain_tol}"
        )));
    }
    let m = grid_intervals(grid_step)?;
    let g = Game::new(game)?;
    let n = g.n();
    let required = sorted_profile_count(m, n);
    if required > ENUMERATION_BUDGET {
        return Err(Error::BudgetExceeded {
            required,
            limit: ENUMERATION_BUDGET,
        });
    }
    let statics = static_candidates(&g);
    let cgrid = grid(DEFAULT_GRID_POINTS);
    let lo = *first.start();
    let hi = (*first.end()).min(m);
    let found: Vec<Vec<Vec<f64>>> = (lo..=hi)
        .into_par_iter()
        .map(|i0| {
            let mut out = Vec::new();
            let mut idx = vec![i0; n];
            let mut s = vec![0.0; n];
            loop {
                for (x, &k) in s.iter_mut().zip(&idx) {
                    *x = k as f64 / m as f64;
                }
                if first_deviation(&g, &s, gain_tol, &statics, &cgrid).is_none() {
                    out.push(s.clone());
                }
                // odometer over non-decreasing tails, first index fixed
                let Some(pos) = (1..n).rev().find(|&p| idx[p] < m) else {
                    break;
                };
                let v = idx[pos] + 1;
                idx[pos..].iter_mut().for_each(|k| *k = v);
            }
            out
        })
        .collect();
    found
        .into_iter()
        .flatten()
        .map(StrategyProfile::new)
        .collect()
}

/// Equilibria known in closed form, or `None` when no characterization applies.
pub fn known_pne(game: &GameSpec) -> Result<Option<Vec<StrategyProfile>>> {
    let g = Game::new(game)?;
    let n = g.n();
    let square = |a: f64, b: f64| -> Result<Vec<StrategyProfile>> {
        [[a, a], [a, b], [b, a], [b, b]]
            .into_iter()
            .map(|v| StrategyProfile::new(v.to_vec()))
            .collect()
    };
    Ok(match &game.mediator {
        MediatorSpec::Dict { .. } => {
            let t = g.mediator().targets().expect("dict has targets").to_vec();
            Some(vec![StrategyProfile::new(t)?])
        }
        MediatorSpec::Lime { .. } if n == 2 => Some(square(0.25, 0.75)?),
        MediatorSpec::Lime { .. } => Some(vec![optimal_locations(n)?]),
        MediatorSpec::Glime { .. } if n >= 3 => {
            Some(vec![quantile_locations(n, &game.distribution)?])
        }
        MediatorSpec::Clime { lambda, .. } if n == 2 => Some(square(0.5 - lambda, 0.5 + lambda)?),
        MediatorSpec::Nime if n == 2 => Some(vec![StrategyProfile::new(vec![0.5, 0.5])?]),
        _ => None,
    })
}

/// Lowest-cost no-intervention equilibrium: paired end facilities and
/// evenly spaced singles between them. `None` for n = 3, where none exists.
pub fn nime_best_pne(n: usize) -> Result<Option<StrategyProfile>> {
    Ok(match n {
        0 | 1 => return Err(Error::Domain(format!("games need n >= 2, got {n}"))),
        2 => Some(StrategyProfile::new(vec![0.5, 0.5])?),
        3 => None,
        _ => {
            let k = (n - 2) as f64;
            let (a, g) = (1.0 / (2.0 * k), 1.0 / k);
            let mut v = vec![a];
            v.extend((0..n - 2).map(|i| a + i as f64 * g));
            v.push(1.0 - a);
            Some(StrategyProfile::new(v)?)
        }
    })
}

/// Highest-cost no-intervention equilibrium: facilities paired at the
/// optimal locations for ⌈n/2⌉ players, the second location unpaired when
/// n is odd. `None` for n = 3.
pub fn nime_worst_pne(n: usize) -> Result<Option<StrategyProfile>> {
    Ok(match n {
        0 | 1 => return Err(Error::Domain(format!("games need n >= 2, got {n}"))),
        2 => Some(StrategyProfile::new(vec![0.5, 0.5])?),
        3 => None,
        _ => {
            let k = n.div_ceil(2);
            let o = optimal_locations(k)?;
            let mut v = Vec::with_capacity(n);
            for (i, &x) in o.as_slice().iter().enumerate() {
                v.push(x);
                if !(n % 2 == 1 && i == 1) {
                    v.push(x);
                }
            }
            Some(StrategyProfile::new(v)?)
        }
    })
}

/// Random better-response dynamics.
///
/// Each step picks a uniformly random player among those with a candidate
/// improving by more than [`DEFAULT_GAIN_TOL`] and moves it to its best
/// candidate.
pub fn better_response_dynamics(
    game: &GameSpec,
    start: &StrategyProfile,
    max_steps: usize,
    seed: u64,
) -> Result<DynamicsTrace> {
    if max_steps < 1 {
        return Err(Error::Domain("maxSteps must be at least 1".into()));
    }
    let g = Game::new(game)?;
    g.check(start)?;
    let n = g.n();
    let statics = merge(static_candidates(&g), &grid(DEFAULT_GRID_POINTS));
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut s = start.as_slice().to_vec();
    let mut states = vec![start.clone()];
    let mut steps = 0;
    let mut converged = false;
    while steps < max_steps {
        let moves: Vec<(usize, f64)> = (0..n)
            .filter_map(|i| {
                let c = merge(statics.clone(), &opponent_candidates(&g, &s, i));
                let (gain, at) = best_response(&g, &s, i, &c);
                (gain > DEFAULT_GAIN_TOL).then_some((i, at))
            })
            .collect();
        if moves.is_empty() {
            converged = true;
            break;
        }
        let (i, at) = moves[rng.gen_range(0..moves.len())];
        s[i] = at;
        states.push(StrategyProfile::new(s.clone())?);
        steps += 1;
    }
    if !converged {
        converged = first_deviation(&g, &s, DEFAULT_GAIN_TOL, &statics, &[]).is_none();
    }
    Ok(DynamicsTrace {
        states,
        converged,
        steps,
    })
}

/// Locations where mediators behave specially, used to bias sampling.
fn special_points(game: &Game) -> Vec<f64> {
    let mut v = game.mediator().piis().endpoints();
    if let Ok(o) = optimal_locations(game.n()) {
        v.extend_from_slice(o.as_slice());
    }
    if let Ok(q) = quantile_locations(game.n(), game.distribution()) {
        v.extend_from_slice(q.as_slice());
    }
    if let Some(t) = game.mediator().targets() {
        v.extend_from_slice(t);
    }
    v.extend([0.0, 1.0]);
    v
}

/// Samples profiles and player pairs and checks the swap identity
/// `π_i(s) = π_j(s with s_i and s_j exchanged)` within 1e-9.
///
/// Each coordinate is uniform on [0, 1] or, with probability 1/2, one of
/// the game's special locations, so rules keyed to exact positions get
/// exercised.
pub fn neutrality_check(game: &GameSpec, trials: usize, seed: u64) -> Result<NeutralityResult> {
    if trials < 1 {
        return Err(Error::Domain("trials must be at least 1".into()));
    }
    let g = Game::new(game)?;
    let n = g.n();
    let special = special_points(&g);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..trials {
        let s: Vec<f64> = (0..n)
            .map(|_| {
                if rng.gen_bool(0.5) {
                    special[rng.gen_range(0..special.len())]
                } else {
                    rng.gen::<f64>()
                }
            })
            .collect();
        let i = rng.gen_range(0..n);
        let j = (i + rng.gen_range(1..n)) % n;
        let mut swapped = s.clone();
        swapped.swap(i, j);
        let diff = g.payoff_raw(&s, i) - g.payoff_raw(&swapped, j);
        if diff.abs() > 1e-9 {
            return Ok(NeutralityResult {
                is_neutral_on_sample: false,
                witness: Some(NeutralityWitness {
                    profile: StrategyProfile::new(s)?,
                    i,
                    j,
                    difference: diff,
                }),
            });
        }
    }
    Ok(NeutralityResult {
        is_neutral_on_sample: true,
        witness: None,
    })
}
