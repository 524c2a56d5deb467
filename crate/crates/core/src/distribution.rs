//! User distributions over the unit segment.
//!
//! Two families are supported: the uniform density and continuous
//! piecewise-linear densities. Both admit closed forms for the CDF, the
//! first moment and the quantile function, which is what lets payoffs and
//! social costs be integrated exactly instead of by quadrature.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Allowed deviation of the total mass from one.
pub const NORMALIZATION_TOL: f64 = 1e-12;

/// A user density on `[0, 1]`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawDistribution", into = "RawDistribution")]
pub enum UserDistribution {
    #[default]
    Uniform,
    PiecewiseLinear(PiecewiseLinearDensity),
}

/// Continuous density, linear between consecutive breakpoints.
///
/// Cumulative mass and first moment are tabulated at every breakpoint so that
/// evaluation is a binary search plus a polynomial.
#[derive(Debug, Clone, PartialEq)]
pub struct PiecewiseLinearDensity {
    breakpoints: Vec<f64>,
    values: Vec<f64>,
    cum_mass: Vec<f64>,
    cum_moment: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
enum RawDistribution {
    Uniform,
    Pwl {
        breakpoints: Vec<f64>,
        values: Vec<f64>,
    },
}

impl TryFrom<RawDistribution> for UserDistribution {
    type Error = Error;

    fn try_from(raw: RawDistribution) -> Result<Self> {
        match raw {
            RawDistribution::Uniform => Ok(UserDistribution::Uniform),
            RawDistribution::Pwl {
                breakpoints,
                values,
            } => PiecewiseLinearDensity::new(breakpoints, values)
                .map(UserDistribution::PiecewiseLinear),
        }
    }
}

impl From<UserDistribution> for RawDistribution {
    fn from(dist: UserDistribution) -> Self {
        match dist {
            UserDistribution::Uniform => RawDistribution::Uniform,
            UserDistribution::PiecewiseLinear(d) => RawDistribution::Pwl {
                breakpoints: d.breakpoints,
                values: d.values,
            },
        }
    }
}

fn check_unit(name: &str, x: f64) -> Result<()> {
    if (0.0..=1.0).contains(&x) {
        Ok(())
    } else {
        Err(Error::Domain(format!("{name} = {x} is outside [0, 1]")))
    }
}

impl PiecewiseLinearDensity {
    /// Validates and tabulates a density given by its values at `breakpoints`.
    ///
    /// Breakpoints must be strictly increasing, start at 0 and end at 1; values
    /// must be finite and nonnegative; the total mass must be one.
    pub fn new(breakpoints: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        let bad = |msg: String| Err(Error::InvalidDistribution(msg));
        if breakpoints.len() < 2 {
            return bad("at least two breakpoints are required".into());
        }
        if breakpoints.len() != values.len() {
            return bad(format!(
                "{} breakpoints but {} values",
                breakpoints.len(),
                values.len()
            ));
        }
        if breakpoints[0] != 0.0 || *breakpoints.last().unwrap() != 1.0 {
            return bad("breakpoints must start at 0 and end at 1".into());
        }
        if !breakpoints.windows(2).all(|w| w[0] < w[1]) {
            return bad("breakpoints must be strictly increasing".into());
        }
        if let Some(v) = values.iter().find(|v| !v.is_finite() || **v < 0.0) {
            return bad(format!("density value {v} is negative or not finite"));
        }

        let k = breakpoints.len();
        let mut cum_mass = vec![0.0; k];
        let mut cum_moment = vec![0.0; k];
        for s in 0..k - 1 {
            let (x0, x1) = (breakpoints[s], breakpoints[s + 1]);
            let (y0, y1) = (values[s], values[s + 1]);
            let h = x1 - x0;
            cum_mass[s + 1] = cum_mass[s] + 0.5 * h * (y0 + y1);
            cum_moment[s + 1] = cum_moment[s] + segment_moment(x0, y0, (y1 - y0) / h, h);
        }
        let total = cum_mass[k - 1];
        if (total - 1.0).abs() > NORMALIZATION_TOL {
            return bad(format!("density integrates to {total}, not 1"));
        }
        Ok(Self {
            breakpoints,
            values,
            cum_mass,
            cum_moment,
        })
    }

    /// Like [`new`](Self::new), but rescales `values` to unit mass first.
    pub fn normalized(breakpoints: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        let total: f64 = breakpoints
            .windows(2)
            .zip(values.windows(2))
            .map(|(x, y)| 0.5 * (x[1] - x[0]) * (y[0] + y[1]))
            .sum();
        if !(total > 0.0 && total.is_finite()) {
            return Err(Error::InvalidDistribution(format!(
                "cannot normalize a density with mass {total}"
            )));
        }
        let values = values.into_iter().map(|v| v / total).collect();
        Self::new(breakpoints, values)
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    fn segment(&self, t: f64) -> usize {
        let k = self.breakpoints.partition_point(|&x| x <= t);
        k.saturating_sub(1).min(self.breakpoints.len() - 2)
    }

    fn slope(&self, s: usize) -> f64 {
        (self.values[s + 1] - self.values[s]) / (self.breakpoints[s + 1] - self.breakpoints[s])
    }

    fn density(&self, t: f64) -> f64 {
        let s = self.segment(t);
        self.values[s] + self.slope(s) * (t - self.breakpoints[s])
    }

    fn mass_to(&self, t: f64) -> f64 {
        let s = self.segment(t);
        let u = t - self.breakpoints[s];
        let v = self.cum_mass[s] + u * (self.values[s] + 0.5 * self.slope(s) * u);
        v.clamp(0.0, 1.0)
    }

    fn moment_to(&self, t: f64) -> f64 {
        let s = self.segment(t);
        let u = t - self.breakpoints[s];
        self.cum_moment[s] + segment_moment(self.breakpoints[s], self.values[s], self.slope(s), u)
    }

    fn quantile(&self, p: f64) -> f64 {
        if p <= 0.0 {
            // smallest preimage of zero mass
            return 0.0;
        }
        let last = self.breakpoints.len() - 2;
        let s = self.cum_mass[1..].partition_point(|&c| c < p).min(last);
        let (x0, x1) = (self.breakpoints[s], self.breakpoints[s + 1]);
        let h = x1 - x0;
        let y0 = self.values[s];
        let m = self.slope(s);
        let r = (p - self.cum_mass[s]).max(0.0);

        // y0 u + m u^2 / 2 = r, in the cancellation-free form.
        let disc = y0 * y0 + 2.0 * m * r;
        let denom = y0 + disc.max(0.0).sqrt();
        let u = if r == 0.0 {
            0.0
        } else if denom > 0.0 {
            2.0 * r / denom
        } else {
            f64::NAN
        };
        if u.is_finite() && (-1e-15..=h * (1.0 + 1e-12)).contains(&u) {
            return (x0 + u.clamp(0.0, h)).clamp(x0, x1);
        }
        self.bisect(p, x0, x1)
    }

    fn bisect(&self, p: f64, mut lo: f64, mut hi: f64) -> f64 {
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if self.mass_to(mid) < p {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        hi
    }
}

/// `∫_0^u (x0 + v)(y0 + m v) dv`.
fn segment_moment(x0: f64, y0: f64, m: f64, u: f64) -> f64 {
    let u2 = u * u;
    x0 * (y0 * u + 0.5 * m * u2) + 0.5 * y0 * u2 + m * u2 * u / 3.0
}

impl UserDistribution {
    /// The density `g(t) = 2t`, a convenient non-uniform test case.
    pub fn linear_increasing() -> Self {
        UserDistribution::PiecewiseLinear(
            PiecewiseLinearDensity::new(vec![0.0, 1.0], vec![0.0, 2.0])
                .expect("2t is a valid density"),
        )
    }

    pub fn piecewise_linear(breakpoints: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        PiecewiseLinearDensity::new(breakpoints, values).map(UserDistribution::PiecewiseLinear)
    }

    pub fn is_uniform(&self) -> bool {
        matches!(self, UserDistribution::Uniform)
    }

    pub fn density(&self, t: f64) -> Result<f64> {
        check_unit("t", t)?;
        Ok(match self {
            UserDistribution::Uniform => 1.0,
            UserDistribution::PiecewiseLinear(d) => d.density(t),
        })
    }

    pub fn cdf(&self, t: f64) -> Result<f64> {
        check_unit("t", t)?;
        Ok(self.mass_to(t))
    }

    /// Smallest `q` with `cdf(q) = p`.
    pub fn quantile(&self, p: f64) -> Result<f64> {
        check_unit("p", p)?;
        Ok(match self {
            UserDistribution::Uniform => p,
            UserDistribution::PiecewiseLinear(d) => d.quantile(p),
        })
    }

    /// Mass of `[0, t]`; `t` is assumed to lie in the unit segment.
    pub(crate) fn mass_to(&self, t: f64) -> f64 {
        match self {
            UserDistribution::Uniform => t,
            UserDistribution::PiecewiseLinear(d) => d.mass_to(t),
        }
    }

    /// `∫_0^t u g(u) du`; `t` is assumed to lie in the unit segment.
    pub(crate) fn moment_to(&self, t: f64) -> f64 {
        match self {
            UserDistribution::Uniform => 0.5 * t * t,
            UserDistribution::PiecewiseLinear(d) => d.moment_to(t),
        }
    }
}
