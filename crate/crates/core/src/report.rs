//! Text output: number formatting and the reference table.

use crate::equilibrium::{nime_best_pne, nime_worst_pne};
use crate::error::Result;
use crate::metrics::{analytic_ic_bounds, ic_search, Game};
use crate::model::{GameSpec, MediatorSpec};

/// Significant digits in human-readable output.
pub const SIGNIFICANT_DIGITS: usize = 12;

/// Search slack below an analytic lower bound before a cell is flagged.
pub const LOWER_SLACK: f64 = 5e-3;

/// Formats `x` with 12 significant digits, dropping trailing zeros.
///
/// Plain decimal notation is used for magnitudes in `[1e-5, 1e15)`.
pub fn fmt_num(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return x.to_string();
    }
    let sci = format!("{:.*e}", SIGNIFICANT_DIGITS - 1, x);
    let (mantissa, exp) = sci.split_once('e').expect("scientific format");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-5..15).contains(&exp) {
        let decimals = (SIGNIFICANT_DIGITS as i32 - 1 - exp).max(0) as usize;
        trim_zeros(format!("{x:.decimals$}"))
    } else {
        format!("{}e{exp}", trim_zeros(mantissa.to_string()))
    }
}

fn trim_zeros(s: String) -> String {
    if !s.contains('.') {
        return s;
    }
    let t = s.trim_end_matches('0').trim_end_matches('.');
    if t == "-0" {
        "0".into()
    } else {
        t.into()
    }
}

pub fn fmt_opt(x: Option<f64>) -> String {
    x.map(fmt_num).unwrap_or_default()
}

pub fn fmt_list(xs: &[f64], sep: &str) -> String {
    xs.iter().map(|&x| fmt_num(x)).collect::<Vec<_>>().join(sep)
}

pub const TABLE1_HEADER: &str = "n,optimal_sc,nime_best_pne_sc,nime_worst_pne_sc,\
dict_ic_lower,dict_ic_search,lime_ic_lower,lime_ic_upper,lime_ic_search,flags";

/// One row of the reference table.
#[derive(Debug, Clone, PartialEq)]
pub struct Table1Row {
    pub n: usize,
    pub optimal_sc: f64,
    /// `None` when no equilibrium exists.
    pub nime_best: Option<f64>,
    pub nime_worst: Option<f64>,
    pub dict_lower: Option<f64>,
    pub dict_search: f64,
    pub lime_lower: Option<f64>,
    pub lime_upper: Option<f64>,
    pub lime_search: f64,
    pub flags: Vec<String>,
}

impl Table1Row {
    pub fn to_csv(&self) -> String {
        let nime = |x: Option<f64>| x.map(fmt_num).unwrap_or_else(|| "no PNE".into());
        [
            self.n.to_string(),
            fmt_num(self.optimal_sc),
            nime(self.nime_best),
            nime(self.nime_worst),
            fmt_opt(self.dict_lower),
            fmt_num(self.dict_search),
            fmt_opt(self.lime_lower),
            fmt_opt(self.lime_upper),
            fmt_num(self.lime_search),
            self.flags.join(";"),
        ]
        .join(",")
    }
}

fn check_sc(flags: &mut Vec<String>, name: &str, got: f64, want: f64) {
    if (got - want).abs() > 1e-9 {
        flags.push(format!(
            "{name}:engine={} formula={}",
            fmt_num(got),
            fmt_num(want)
        ));
    }
}

fn check_search(
    flags: &mut Vec<String>,
    name: &str,
    search: f64,
    lower: Option<f64>,
    upper: Option<f64>,
) {
    if let Some(l) = lower {
        if search < l - LOWER_SLACK {
            flags.push(format!("{name}:search_below_lower"));
        }
    }
    if let Some(u) = upper {
        if search > u + 1e-9 {
            flags.push(format!("{name}:search_above_upper"));
        }
    }
}

/// Builds the reference row for `n` players.
///
/// Equilibrium costs are computed by the engine on the fixture profiles
/// and compared with their closed forms. At n = 2 the interval mediator
/// coincides with the central one at λ = 1/4, whose bounds are used.
pub fn table1_row(n: usize, epsilon: f64, budget: u64, seed: u64) -> Result<Table1Row> {
    let nf = n as f64;
    let mut flags = Vec::new();
    let nime = Game::new(&GameSpec::new(n, MediatorSpec::Nime))?;
    let optimal_sc = 1.0 / (4.0 * nf);

    let best = nime_best_pne(n)?
        .map(|s| nime.social_cost(&s))
        .transpose()?;
    let worst = nime_worst_pne(n)?
        .map(|s| nime.social_cost(&s))
        .transpose()?;
    if let Some(b) = best {
        let want = if n == 2 {
            0.25
        } else {
            1.0 / (4.0 * (nf - 2.0))
        };
        check_sc(&mut flags, "nime_best", b, want);
    }
    if let Some(w) = worst {
        check_sc(
            &mut flags,
            "nime_worst",
            w,
            1.0 / (4.0 * n.div_ceil(2) as f64),
        );
    }

    let dict = MediatorSpec::Dict {
        targets: None,
        equality_tol: crate::model::DEFAULT_EQUALITY_TOL,
    };
    let dict_bounds = analytic_ic_bounds(&dict, n)?;
    let dict_search = ic_search(&GameSpec::new(n, dict), budget, seed, true)?.search_lower;
    check_search(
        &mut flags,
        "dict",
        dict_search,
        dict_bounds.lower,
        dict_bounds.upper,
    );

    let lime = MediatorSpec::lime(epsilon);
    let lime_bounds = if n == 2 {
        analytic_ic_bounds(&MediatorSpec::clime(0.25, epsilon), n)?
    } else {
        analytic_ic_bounds(&lime, n)?
    };
    let lime_search = ic_search(&GameSpec::new(n, lime), budget, seed, true)?.search_lower;
    check_search(
        &mut flags,
        "lime",
        lime_search,
        lime_bounds.lower,
        lime_bounds.upper,
    );

    Ok(Table1Row {
        n,
        optimal_sc,
        nime_best: best,
        nime_worst: worst,
        dict_lower: dict_bounds.lower,
        dict_search,
        lime_lower: lime_bounds.lower,
        lime_upper: lime_bounds.upper,
        lime_search,
        flags,
    })
}

/// The reference table for n = 2..=8 as CSV.
pub fn table1_csv(epsilon: f64, budget: u64, seed: u64) -> Result<String> {
    let mut out = String::from(TABLE1_HEADER);
    out.push('\n');
    for n in 2..=8 {
        out.push_str(&table1_row(n, epsilon, budget, seed)?.to_csv());
        out.push('\n');
    }
    Ok(out)
}
