//! Payoffs, social cost and intervention cost.
//!
//! All integrals are exact: a policy is constant on each piece, and the user
//! density has a closed-form mass and first moment on any interval.

use std::cmp::Ordering;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::distribution::UserDistribution;
use crate::error::{Error, Result};
use crate::mediators::Mediator;
use crate::model::{GameSpec, MediatorKind, MediatorSpec, PayoffVector, StrategyProfile};

/// A validated game with its mediator compiled for the player count.
#[derive(Debug, Clone)]
pub struct Game {
    spec: GameSpec,
    mediator: Mediator,
    nime: Mediator,
}

impl Game {
    pub fn new(spec: &GameSpec) -> Result<Self> {
        let mediator = Mediator::new(&spec.mediator, spec.n, &spec.distribution)?;
        Ok(Game {
            spec: spec.clone(),
            mediator,
            nime: Mediator::nime(spec.n),
        })
    }

    pub fn spec(&self) -> &GameSpec {
        &self.spec
    }

    pub fn n(&self) -> usize {
        self.spec.n
    }

    pub fn mediator(&self) -> &Mediator {
        &self.mediator
    }

    pub fn distribution(&self) -> &UserDistribution {
        &self.spec.distribution
    }

    pub fn check(&self, profile: &StrategyProfile) -> Result<()> {
        if profile.len() != self.n() {
            return Err(Error::InvalidProfile(format!(
                "profile has {} entries, game has {} players",
                profile.len(),
                self.n()
            )));
        }
        Ok(())
    }

    pub fn payoffs(&self, profile: &StrategyProfile) -> Result<PayoffVector> {
        self.check(profile)?;
        Ok(PayoffVector(self.payoffs_raw(profile.as_slice())))
    }

    pub fn social_cost(&self, profile: &StrategyProfile) -> Result<f64> {
        self.check(profile)?;
        Ok(self.cost_raw(&self.mediator, profile.as_slice()))
    }

    pub fn intervention_gap(&self, profile: &StrategyProfile) -> Result<f64> {
        self.check(profile)?;
        Ok(self.gap_raw(profile.as_slice()))
    }

    pub(crate) fn payoffs_raw(&self, s: &[f64]) -> Vec<f64> {
        let dist = self.distribution();
        let mut out = vec![0.0; s.len()];
        self.mediator.for_each_piece(s, |lo, hi, d| {
            let mass = dist.mass_to(hi) - dist.mass_to(lo);
            for (o, p) in out.iter_mut().zip(d) {
                *o += p * mass;
            }
        });
        out
    }

    pub(crate) fn payoff_raw(&self, s: &[f64], player: usize) -> f64 {
        let dist = self.distribution();
        let mut total = 0.0;
        self.mediator.for_each_piece(s, |lo, hi, d| {
            if d[player] != 0.0 {
                total += d[player] * (dist.mass_to(hi) - dist.mass_to(lo));
            }
        });
        total
    }

    fn cost_raw(&self, mediator: &Mediator, s: &[f64]) -> f64 {
        let dist = self.distribution();
        let mut total = 0.0;
        mediator.for_each_piece(s, |lo, hi, d| {
            let mass = dist.mass_to(hi) - dist.mass_to(lo);
            let moment = dist.moment_to(hi) - dist.moment_to(lo);
            for (&x, &p) in s.iter().zip(d) {
                if p == 0.0 {
                    continue;
                }
                // every facility is a breakpoint, so |x - t| keeps its sign on the piece
                let piece = if x <= lo {
                    moment - x * mass
                } else {
                    x * mass - moment
                };
                total += p * piece;
            }
        });
        total
    }

    pub(crate) fn gap_raw(&self, s: &[f64]) -> f64 {
        self.cost_raw(&self.mediator, s) - self.cost_raw(&self.nime, s)
    }
}

pub fn payoff(game: &GameSpec, profile: &StrategyProfile) -> Result<PayoffVector> {
    Game::new(game)?.payoffs(profile)
}

pub fn social_cost(game: &GameSpec, profile: &StrategyProfile) -> Result<f64> {
    Game::new(game)?.social_cost(profile)
}

/// `SC(M, s) - SC(NIME, s)`.
pub fn intervention_gap(game: &GameSpec, profile: &StrategyProfile) -> Result<f64> {
    Game::new(game)?.intervention_gap(profile)
}

/// Profiles known to force a large intervention gap.
pub fn adversarial_profile(kind: MediatorKind, n: usize, delta: f64) -> Result<StrategyProfile> {
    let nf = n as f64;
    let need = |min_n: usize| {
        if n < min_n {
            Err(Error::Domain(format!(
                "{kind} fixture needs n >= {min_n}, got {n}"
            )))
        } else {
            Ok(())
        }
    };
    let check_delta = || {
        if delta > 0.0 && delta < 1.0 / (2.0 * nf) {
            Ok(())
        } else {
            Err(Error::Domain(format!(
                "delta must lie in (0, 1/(2n)) = (0, {}), got {delta}",
                1.0 / (2.0 * nf)
            )))
        }
    };
    let v: Vec<f64> = match kind {
        MediatorKind::Dict => {
            need(3)?;
            check_delta()?;
            (1..=n)
                .map(|i| {
                    let o = (2.0 * i as f64 - 1.0) / (2.0 * nf);
                    if i == 1 {
                        o
                    } else {
                        o + delta
                    }
                })
                .collect()
        }
        MediatorKind::Lime => {
            need(3)?;
            check_delta()?;
            let left = n.div_ceil(2);
            (0..n)
                .map(|i| {
                    if i < left {
                        1.0 / (2.0 * nf) + delta
                    } else {
                        (2.0 * nf - 1.0) / (2.0 * nf) - delta
                    }
                })
                .collect()
        }
        MediatorKind::Glime => {
            need(2)?;
            let left = n / 2;
            (0..n)
                .map(|i| {
                    if i < left {
                        1.0 / (2.0 * nf)
                    } else {
                        (2.0 * nf - 1.0) / (2.0 * nf)
                    }
                })
                .collect()
        }
        MediatorKind::Clime => {
            if n != 2 {
                return Err(Error::Unsupported(format!("no clime fixture for n = {n}")));
            }
            vec![0.0, 0.5]
        }
        MediatorKind::Nime => {
            return Err(Error::Unsupported(
                "nime has no adversarial profile (its gap is identically zero)".into(),
            ))
        }
    };
    StrategyProfile::new(v)
}

/// Known bounds on the intervention cost.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IcBounds {
    pub lower: Option<f64>,
    pub upper: Option<f64>,
}

pub fn analytic_ic_bounds(mediator: &MediatorSpec, n: usize) -> Result<IcBounds> {
    if n < 2 {
        return Err(Error::Domain(format!("bounds need n >= 2, got {n}")));
    }
    let nf = n as f64;
    let dict_lower = 0.5 - 3.0 / (4.0 * nf) + 1.0 / (4.0 * nf * nf);
    let (lower, upper) = match mediator {
        MediatorSpec::Nime => (Some(0.0), Some(0.0)),
        MediatorSpec::Dict { .. } => (Some(dict_lower), None),
        MediatorSpec::Lime { .. } if n == 2 => (None, None),
        MediatorSpec::Lime { epsilon } => (
            Some((1.0 - epsilon / 2.0) * (2.0 * nf - 4.0) / (nf * nf)),
            Some((2.0 * nf - 3.5) / (nf * nf)),
        ),
        MediatorSpec::Glime { .. } => (
            Some(0.25 - 1.0 / (2.0 * nf) + 1.0 / (4.0 * nf * nf)),
            Some(dict_lower),
        ),
        MediatorSpec::Clime { lambda, .. } if n == 2 => {
            let v = lambda - lambda * lambda;
            (Some(v), Some(v))
        }
        MediatorSpec::Clime { lambda, .. } => (None, Some(4.0 * lambda)),
    };
    Ok(IcBounds { lower, upper })
}

/// Fixture offsets tried by [`ic_search`].
pub const FIXTURE_DELTAS: [f64; 3] = [1e-2, 1e-3, 1e-4];

const ASCENT_SWEEPS: usize = 10;
const ASCENT_SCAN: usize = 32;
const GOLDEN_ITERATIONS: usize = 50;

/// Result of an intervention-cost search.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct IcEstimate {
    pub mediator: MediatorSpec,
    pub n: usize,
    pub seed: u64,
    pub budget: u64,
    /// Best gap found; a certified lower bound on the intervention cost.
    pub search_lower: f64,
    /// Best gap over the adversarial fixtures, if any apply.
    pub fixture_lower: Option<f64>,
    pub analytic_lower: Option<f64>,
    pub analytic_upper: Option<f64>,
    pub argmax_profile: StrategyProfile,
}

/// Adversarial fixtures that apply to this game.
pub fn fixtures(game: &Game) -> Vec<StrategyProfile> {
    let n = game.n();
    let kind = game.spec().mediator.kind();
    match kind {
        MediatorKind::Dict | MediatorKind::Lime => FIXTURE_DELTAS
            .iter()
            .filter_map(|&d| adversarial_profile(kind, n, d).ok())
            .collect(),
        MediatorKind::Glime | MediatorKind::Clime => {
            adversarial_profile(kind, n, 1e-3).into_iter().collect()
        }
        MediatorKind::Nime => Vec::new(),
    }
}

fn better(a: (f64, &[f64]), b: (f64, &[f64])) -> bool {
    match a.0.total_cmp(&b.0) {
        Ordering::Greater => true,
        Ordering::Less => false,
        Ordering::Equal => lex_cmp(a.1, b.1) == Ordering::Less,
    }
}

fn lex_cmp(a: &[f64], b: &[f64]) -> Ordering {
    a.iter()
        .zip(b)
        .map(|(x, y)| x.total_cmp(y))
        .find(|o| o.is_ne())
        .unwrap_or(Ordering::Equal)
}

/// Maximises `f` on `[lo, hi]` by golden-section search.
fn golden_max(mut f: impl FnMut(f64) -> f64, mut lo: f64, mut hi: f64) -> (f64, f64) {
    let r = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = hi - r * (hi - lo);
    let mut x2 = lo + r * (hi - lo);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    for _ in 0..GOLDEN_ITERATIONS {
        if f1 >= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - r * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + r * (hi - lo);
            f2 = f(x2);
        }
    }
    if f1 >= f2 {
        (x1, f1)
    } else {
        (x2, f2)
    }
}

/// Coordinate ascent on the gap; only strict improvements are accepted.
///
/// Each coordinate gets a coarse scan, then golden-section search in the
/// bracket around the best scan point.
fn refine(game: &Game, mut s: Vec<f64>, mut best: f64) -> (Vec<f64>, f64) {
    let mut work = s.clone();
    let step = 1.0 / ASCENT_SCAN as f64;
    for _ in 0..ASCENT_SWEEPS {
        let mut improved = false;
        for i in 0..s.len() {
            let mut f = |x: f64| {
                work[i] = x;
                game.gap_raw(&work)
            };
            let (mut x_best, mut v_best) = (0.0, f64::NEG_INFINITY);
            for k in 0..=ASCENT_SCAN {
                let x = k as f64 * step;
                let v = f(x);
                if v > v_best {
                    (x_best, v_best) = (x, v);
                }
            }
            let lo = (x_best - step).max(0.0);
            let hi = (x_best + step).min(1.0);
            let (x_g, v_g) = golden_max(&mut f, lo, hi);
            if v_g > v_best {
                (x_best, v_best) = (x_g, v_g);
            }
            if v_best > best {
                best = v_best;
                s[i] = x_best;
                improved = true;
            }
            work.copy_from_slice(&s);
        }
        if !improved {
            break;
        }
    }
    (s, best)
}

/// Lower estimate of the intervention cost by fixtures, sampling and ascent.
///
/// Deterministic given `seed`, independent of the rayon thread count.
pub fn ic_search(
    game: &GameSpec,
    budget: u64,
    seed: u64,
    include_fixtures: bool,
) -> Result<IcEstimate> {
    if budget < 1 {
        return Err(Error::Domain("budget must be at least 1".into()));
    }
    let g = Game::new(game)?;
    let n = g.n();
    let bounds = analytic_ic_bounds(&game.mediator, n)?;

    let fixture_set = fixtures(&g);
    let fixture_lower = fixture_set
        .iter()
        .map(|p| g.gap_raw(p.as_slice()))
        .reduce(f64::max);

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut starts: Vec<Vec<f64>> = (0..budget)
        .map(|_| (0..n).map(|_| rng.gen::<f64>()).collect())
        .collect();
    if include_fixtures {
        starts.extend(fixture_set.into_iter().map(StrategyProfile::into_vec));
    }
    let gaps: Vec<f64> = starts.par_iter().map(|s| g.gap_raw(s)).collect();

    let mut best_idx = 0;
    for k in 1..starts.len() {
        if better((gaps[k], &starts[k]), (gaps[best_idx], &starts[best_idx])) {
            best_idx = k;
        }
    }
    let (s, v) = refine(&g, starts.swap_remove(best_idx), gaps[best_idx]);

    Ok(IcEstimate {
        mediator: game.mediator.clone(),
        n,
        seed,
        budget,
        search_lower: v,
        fixture_lower,
        analytic_lower: bounds.lower,
        analytic_upper: bounds.upper,
        argmax_profile: StrategyProfile::new(s)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distribution::PiecewiseLinearDensity;
    use crate::model::optimal_locations;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use rand::Rng;

    fn p(v: &[f64]) -> StrategyProfile {
        StrategyProfile::new(v.to_vec()).unwrap()
    }

    fn spec(n: usize, m: MediatorSpec) -> GameSpec {
        GameSpec::new(n, m)
    }

    /// Composite Simpson oracle, run separately on each side of every kink.
    fn quad_cost(g: &Game, s: &[f64]) -> f64 {
        let prof = p(s);
        let mut cuts = vec![0.0, 1.0];
        cuts.extend_from_slice(s);
        for i in 0..s.len() {
            for j in 0..s.len() {
                cuts.push(0.5 * (s[i] + s[j]));
            }
        }
        for iv in g.mediator().piis().intervals() {
            cuts.extend([iv.lo, iv.hi]);
        }
        if let UserDistribution::PiecewiseLinear(d) = g.distribution() {
            cuts.extend_from_slice(d.breakpoints());
        }
        cuts.sort_by(f64::total_cmp);
        cuts.dedup();
        let f = |t: f64| {
            let d = g.mediator().direct(&prof, t).unwrap();
            let dens = g.distribution().density(t).unwrap();
            d.0.iter()
                .zip(s)
                .map(|(q, x)| q * (x - t).abs())
                .sum::<f64>()
                * dens
        };
        let mut total = 0.0;
        for w in cuts.windows(2) {
            let (a, b) = (w[0], w[1]);
            if b - a < 1e-15 {
                continue;
            }
            // nudge inside so the integrand stays on one branch
            let (a, b) = (a + 1e-13 * (b - a), b - 1e-13 * (b - a));
            let m = 64;
            let h = (b - a) / m as f64;
            let mut acc = f(a) + f(b);
            for k in 1..m {
                acc += f(a + k as f64 * h) * if k % 2 == 1 { 4.0 } else { 2.0 };
            }
            total += acc * h / 3.0;
        }
        total
    }

    #[test]
    fn payoff_examples() {
        let pay = payoff(&spec(2, MediatorSpec::Nime), &p(&[0.25, 0.75])).unwrap();
        assert_abs_diff_eq!(pay.0[0], 0.5, epsilon = 1e-15);
        let o3 = optimal_locations(3).unwrap();
        let pay = payoff(&spec(3, MediatorSpec::glime(1e-3)), &o3).unwrap();
        for x in pay.payoffs() {
            assert_abs_diff_eq!(*x, 1.0 / 3.0, epsilon = 1e-12);
        }
        let pay = payoff(&spec(2, MediatorSpec::dict()), &p(&[0.25, 0.9])).unwrap();
        assert_eq!(pay.0, vec![1.0, 0.0]);
        let o4 = optimal_locations(4).unwrap();
        let pay = payoff(&spec(4, MediatorSpec::lime(1e-3)), &o4).unwrap();
        for x in pay.payoffs() {
            assert_abs_diff_eq!(*x, 0.25, epsilon = 1e-12);
        }
    }

    #[test]
    fn lime_payoff_matches_monte_carlo() {
        let g = Game::new(&spec(4, MediatorSpec::lime(1e-3))).unwrap();
        let s = p(&[1.0 / 16.0, 0.25, 0.625, 0.75]);
        let exact = g.payoffs(&s).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let samples = 1_000_000;
        let mut acc = [0.0; 4];
        for _ in 0..samples {
            let d = g.mediator().direct(&s, rng.gen::<f64>()).unwrap();
            for (a, q) in acc.iter_mut().zip(&d.0) {
                *a += q;
            }
        }
        for (a, e) in acc.iter().zip(exact.payoffs()) {
            // binomial standard error is at most 0.5e-3
            assert!((a / samples as f64 - e).abs() < 2.5e-3, "{a} vs {e}");
        }
    }

    #[test]
    fn social_cost_examples() {
        let sc = |n, m, s: &[f64]| social_cost(&spec(n, m), &p(s)).unwrap();
        assert_abs_diff_eq!(
            sc(2, MediatorSpec::Nime, &[0.5, 0.5]),
            0.25,
            epsilon = 1e-15
        );
        let o4 = optimal_locations(4).unwrap().into_vec();
        assert_abs_diff_eq!(sc(4, MediatorSpec::Nime, &o4), 1.0 / 16.0, epsilon = 1e-15);
        assert_abs_diff_eq!(
            sc(2, MediatorSpec::dict(), &[0.0, 1.0]),
            0.5,
            epsilon = 1e-15
        );
        let o3 = optimal_locations(3).unwrap().into_vec();
        assert_abs_diff_eq!(
            sc(3, MediatorSpec::glime(1e-3), &o3),
            5.0 / 36.0,
            epsilon = 1e-12
        );
        assert_abs_diff_eq!(
            sc(2, MediatorSpec::clime(0.125, 1e-3), &[0.375, 0.625]),
            0.15625,
            epsilon = 1e-12
        );
    }

    #[test]
    fn gap_examples() {
        let gap = |n, m, s: &[f64]| intervention_gap(&spec(n, m), &p(s)).unwrap();
        assert_eq!(gap(3, MediatorSpec::Nime, &[0.1, 0.4, 0.8]), 0.0);
        assert_abs_diff_eq!(
            gap(2, MediatorSpec::dict(), &[0.0, 1.0]),
            0.25,
            epsilon = 1e-15
        );
        // exact value is (1 - eps/2)(lambda - lambda^2)
        let eps = 1e-3;
        let lam = 0.125;
        assert_abs_diff_eq!(
            gap(2, MediatorSpec::clime(lam, eps), &[0.0, 0.5]),
            (1.0 - eps / 2.0) * (lam - lam * lam),
            epsilon = 1e-14
        );
        assert_abs_diff_eq!(
            gap(2, MediatorSpec::clime(lam, 1e-9), &[0.0, 0.5]),
            7.0 / 64.0,
            epsilon = 1e-9
        );
    }

    #[test]
    fn nonuniform_social_cost_matches_quadrature() {
        let g = UserDistribution::PiecewiseLinear(
            PiecewiseLinearDensity::normalized(vec![0.0, 0.3, 1.0], vec![0.5, 2.0, 0.8]).unwrap(),
        );
        for m in [
            MediatorSpec::Nime,
            MediatorSpec::dict(),
            MediatorSpec::lime(0.1),
            MediatorSpec::glime(0.1),
            MediatorSpec::clime(0.1, 0.1),
        ] {
            let game = Game::new(&spec(4, m).with_distribution(g.clone())).unwrap();
            for s in [
                [0.05, 0.3, 0.31, 0.9],
                [0.2, 0.2, 0.7, 1.0],
                [0.125, 0.375, 0.625, 0.875],
            ] {
                let exact = game.social_cost(&p(&s)).unwrap();
                let oracle = quad_cost(&game, &s);
                assert_abs_diff_eq!(exact, oracle, epsilon = 1e-9);
            }
        }
    }

    #[test]
    fn fixtures_match_construction() {
        let d = adversarial_profile(MediatorKind::Dict, 3, 0.01).unwrap();
        let expect = [1.0 / 6.0, 0.51, 5.0 / 6.0 + 0.01];
        for (a, b) in d.as_slice().iter().zip(expect) {
            assert_abs_diff_eq!(*a, b, epsilon = 1e-15);
        }
        let l = adversarial_profile(MediatorKind::Lime, 4, 0.01).unwrap();
        for (a, b) in l.as_slice().iter().zip([0.135, 0.135, 0.865, 0.865]) {
            assert_abs_diff_eq!(*a, b, epsilon = 1e-15);
        }
        let gl = adversarial_profile(MediatorKind::Glime, 4, 0.01).unwrap();
        assert_eq!(gl.as_slice(), &[0.125, 0.125, 0.875, 0.875]);
        assert!(adversarial_profile(MediatorKind::Nime, 4, 0.01).is_err());
        assert!(adversarial_profile(MediatorKind::Lime, 4, 0.2).is_err());
        assert!(adversarial_profile(MediatorKind::Lime, 2, 0.01).is_err());
        assert!(adversarial_profile(MediatorKind::Clime, 3, 0.01).is_err());
    }

    #[test]
    fn bounds_examples() {
        let b = analytic_ic_bounds(&MediatorSpec::dict(), 3).unwrap();
        assert_abs_diff_eq!(b.lower.unwrap(), 5.0 / 18.0, epsilon = 1e-15);
        assert_eq!(b.upper, None);
        let b = analytic_ic_bounds(&MediatorSpec::lime(1e-12), 3).unwrap();
        assert_abs_diff_eq!(b.lower.unwrap(), 2.0 / 9.0, epsilon = 1e-12);
        assert_abs_diff_eq!(b.upper.unwrap(), 2.5 / 9.0, epsilon = 1e-15);
        let b = analytic_ic_bounds(&MediatorSpec::clime(0.25, 1e-3), 2).unwrap();
        assert_eq!((b.lower, b.upper), (Some(0.1875), Some(0.1875)));
        let b = analytic_ic_bounds(&MediatorSpec::lime(1e-3), 2).unwrap();
        assert_eq!((b.lower, b.upper), (None, None));
        let b = analytic_ic_bounds(&MediatorSpec::clime(0.1, 1e-3), 5).unwrap();
        assert_eq!(b.lower, None);
        assert_abs_diff_eq!(b.upper.unwrap(), 0.4, epsilon = 1e-15);
    }

    #[test]
    fn ic_search_examples() {
        let e = ic_search(&spec(5, MediatorSpec::Nime), 200, 0, true).unwrap();
        assert_eq!(e.search_lower, 0.0);
        assert_eq!(e.fixture_lower, None);

        let e = ic_search(&spec(2, MediatorSpec::clime(0.125, 1e-3)), 10_000, 0, true).unwrap();
        assert!(
            (e.search_lower - 7.0 / 64.0).abs() <= 1e-3,
            "{}",
            e.search_lower
        );

        let e = ic_search(&spec(4, MediatorSpec::glime(1e-3)), 1_000, 0, true).unwrap();
        assert_abs_diff_eq!(e.fixture_lower.unwrap(), 0.140625, epsilon = 1e-12);
        assert!(e.search_lower >= e.fixture_lower.unwrap() - 1e-9);
    }

    #[test]
    fn ic_search_without_fixtures_still_reports_them() {
        let e = ic_search(&spec(4, MediatorSpec::glime(1e-3)), 50, 3, false).unwrap();
        assert!(e.fixture_lower.is_some());
        let again = ic_search(&spec(4, MediatorSpec::glime(1e-3)), 50, 3, false).unwrap();
        assert_eq!(e, again);
    }

    #[test]
    fn ic_estimate_json_schema() {
        let e = ic_search(&spec(2, MediatorSpec::clime(0.125, 1e-3)), 10, 1, true).unwrap();
        let v: serde_json::Value = serde_json::to_value(&e).unwrap();
        for key in [
            "mediator",
            "n",
            "seed",
            "budget",
            "searchLower",
            "fixtureLower",
            "analyticLower",
            "analyticUpper",
            "argmaxProfile",
        ] {
            assert!(v.get(key).is_some(), "missing {key}");
        }
        let back: IcEstimate = serde_json::from_value(v).unwrap();
        assert_eq!(back, e);
    }

    #[test]
    fn golden_section_finds_interior_max() {
        let (x, v) = golden_max(|x| -(x - 0.3).powi(2), 0.0, 1.0);
        assert_abs_diff_eq!(x, 0.3, epsilon = 1e-8);
        assert_abs_diff_eq!(v, 0.0, epsilon = 1e-15);
    }

    fn all_specs(n: usize) -> Vec<MediatorSpec> {
        vec![
            MediatorSpec::Nime,
            MediatorSpec::dict(),
            MediatorSpec::lime(1e-3),
            MediatorSpec::glime(1e-3),
            MediatorSpec::clime(0.5 * MediatorSpec::clime_lambda_bound(n), 1e-3),
        ]
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(300))]

        #[test]
        fn dominance_and_simplex(
            (n, s) in (2usize..=6).prop_flat_map(|n| (Just(n), prop::collection::vec(0.0f64..=1.0, n)))
        ) {
            let prof = p(&s);
            for m in all_specs(n) {
                let g = Game::new(&spec(n, m)).unwrap();
                prop_assert!(g.intervention_gap(&prof).unwrap() >= -1e-9);
                prop_assert!((g.payoffs(&prof).unwrap().total() - 1.0).abs() <= 1e-9);
            }
        }
    }
}
