//! Command-line front end.
//!
//! [`run`] does all the work and returns the text to print plus an exit
//! code, so the binary is a thin wrapper and commands are testable in-process.

use std::fs;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use crate::distribution::UserDistribution;
use crate::equilibrium::{is_pne, pne_enumerate, DEFAULT_GAIN_TOL, DEFAULT_GRID_POINTS};
use crate::error::{Error, Result};
use crate::metrics::{ic_search, Game};
use crate::model::{GameSpec, MediatorSpec, StrategyProfile, DEFAULT_EQUALITY_TOL};
use crate::report::{fmt_list, fmt_num, fmt_opt, table1_csv};

/// Exit code for success or a verdict matching `--expect`.
pub const EXIT_OK: i32 = 0;
/// Exit code for a verdict that contradicts `--expect`.
pub const EXIT_MISMATCH: i32 = 1;
/// Exit code for malformed input.
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Parser)]
#[command(
    name = "hotelling",
    version,
    about = "Mediated facility-location games on [0, 1]"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,

    #[arg(long, value_enum, default_value_t = Format::Csv, global = true)]
    pub format: Format,

    /// Worker threads for parallel search and enumeration.
    #[arg(long, default_value_t = 1, global = true)]
    pub threads: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MediatorName {
    Nime,
    Dict,
    Lime,
    Glime,
    Clime,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Expected served mass per player.
    Payoff {
        #[command(flatten)]
        game: GameArgs,
        #[arg(long)]
        profile: String,
    },
    /// Expected user travel distance.
    SocialCost {
        #[command(flatten)]
        game: GameArgs,
        #[arg(long)]
        profile: String,
    },
    /// Certify one profile, or enumerate grid equilibria.
    Pne {
        #[command(flatten)]
        game: GameArgs,
        #[arg(
            long,
            conflicts_with = "enumerate",
            required_unless_present = "enumerate"
        )]
        profile: Option<String>,
        #[arg(long)]
        enumerate: bool,
        /// Grid step for --enumerate; 1/step must be an integer.
        #[arg(long, default_value = "1/64")]
        grid_step: String,
        #[arg(long, default_value_t = DEFAULT_GAIN_TOL)]
        gain_tol: f64,
        /// Points in the uniform part of the deviation candidate set.
        #[arg(long, default_value_t = DEFAULT_GRID_POINTS)]
        grid_points: usize,
        /// Expected verdict: for a profile, whether it is an equilibrium;
        /// for --enumerate, whether any equilibrium is found.
        #[arg(long)]
        expect: Option<bool>,
    },
    /// Estimate the intervention cost.
    Ic {
        #[command(flatten)]
        game: GameArgs,
        #[arg(long, default_value_t = 10_000)]
        budget: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Skip seeding the search with the adversarial fixtures.
        #[arg(long)]
        no_fixtures: bool,
    },
    /// Reference table of costs for n = 2..=8.
    Table1 {
        #[arg(long, default_value = "0.001")]
        epsilon: String,
        #[arg(long, default_value_t = 2_000)]
        budget: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Piecewise-constant direction policy for one profile, plot-ready.
    Policy {
        #[command(flatten)]
        game: GameArgs,
        #[arg(long)]
        profile: String,
    },
}

#[derive(Debug, Clone, Args)]
pub struct GameArgs {
    #[arg(long, value_enum, required_unless_present = "game")]
    pub mediator: Option<MediatorName>,
    #[arg(long, required_unless_present = "game")]
    pub n: Option<usize>,
    #[arg(long, default_value = "0.001")]
    pub epsilon: String,
    #[arg(long)]
    pub lambda: Option<String>,
    /// Comma-separated dictator targets (default: the optimal locations).
    #[arg(long)]
    pub targets: Option<String>,
    /// JSON user density; uniform when omitted.
    #[arg(long)]
    pub distribution: Option<PathBuf>,
    /// JSON game specification; replaces the other game flags.
    #[arg(long, conflicts_with_all = ["mediator", "n"])]
    pub game: Option<PathBuf>,
}

/// Text to print and the process exit code.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Outcome {
    pub stdout: String,
    pub exit_code: i32,
}

impl Outcome {
    fn ok(stdout: String) -> Self {
        Outcome {
            stdout,
            exit_code: EXIT_OK,
        }
    }
}

/// Parses a number; accepts `a/b` fractions.
///
/// Decimals with six or more fractional digits are read as truncations of
/// the simplest fraction (denominator up to 1000) within half a unit of
/// their last digit, so `0.1666667` means 1/6 and `0.0083333` means 1/120.
pub fn parse_number(text: &str) -> Result<f64> {
    let t = text.trim();
    let bad = || Error::Domain(format!("not a number: {text:?}"));
    if let Some((a, b)) = t.split_once('/') {
        let a: f64 = a.trim().parse().map_err(|_| bad())?;
        let b: f64 = b.trim().parse().map_err(|_| bad())?;
        if b == 0.0 {
            return Err(bad());
        }
        return Ok(a / b);
    }
    let x: f64 = t.parse().map_err(|_| bad())?;
    if !x.is_finite() {
        return Err(bad());
    }
    let digits = match t.split_once('.') {
        Some((_, frac)) if frac.chars().all(|c| c.is_ascii_digit()) => frac.len(),
        _ => 0,
    };
    if digits >= 6 && x > 0.0 {
        let half = 0.5 * 10f64.powi(-(digits as i32));
        if let Some((p, q)) = simplest_between(x - half, x + half, 0) {
            if q <= 1000 {
                return Ok(p as f64 / q as f64);
            }
        }
    }
    Ok(x)
}

/// Simplest fraction `p/q` in `[lo, hi]`, by continued fractions.
fn simplest_between(lo: f64, hi: f64, depth: u32) -> Option<(u64, u64)> {
    if depth > 40 || !(lo <= hi) || lo < 0.0 {
        return None;
    }
    let c = lo.ceil();
    if c <= hi {
        return Some((c as u64, 1));
    }
    let f = lo.floor();
    let (p, q) = simplest_between(1.0 / (hi - f), 1.0 / (lo - f), depth + 1)?;
    Some(((f as u64).checked_mul(p)?.checked_add(q)?, p))
}

pub fn parse_list(text: &str) -> Result<Vec<f64>> {
    text.split(',').map(parse_number).collect()
}

fn read_json<T: serde::de::DeserializeOwned>(path: &PathBuf) -> Result<T> {
    let raw = fs::read_to_string(path)
        .map_err(|e| Error::Domain(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&raw)
        .map_err(|e| Error::Domain(format!("cannot parse {}: {e}", path.display())))
}

impl GameArgs {
    pub fn to_spec(&self) -> Result<GameSpec> {
        if let Some(path) = &self.game {
            return read_json(path);
        }
        let missing = |flag: &str| Error::Domain(format!("--{flag} is required"));
        let n = self.n.ok_or_else(|| missing("n"))?;
        let epsilon = parse_number(&self.epsilon)?;
        let mediator = match self.mediator.ok_or_else(|| missing("mediator"))? {
            MediatorName::Nime => MediatorSpec::Nime,
            MediatorName::Dict => MediatorSpec::Dict {
                targets: self.targets.as_deref().map(parse_list).transpose()?,
                equality_tol: DEFAULT_EQUALITY_TOL,
            },
            MediatorName::Lime => MediatorSpec::lime(epsilon),
            MediatorName::Glime => MediatorSpec::glime(epsilon),
            MediatorName::Clime => {
                let lambda = self.lambda.as_deref().ok_or_else(|| missing("lambda"))?;
                MediatorSpec::clime(parse_number(lambda)?, epsilon)
            }
        };
        let distribution = match &self.distribution {
            Some(path) => read_json::<UserDistribution>(path)?,
            None => UserDistribution::Uniform,
        };
        Ok(GameSpec::new(n, mediator).with_distribution(distribution))
    }
}

fn profile_arg(text: &str) -> Result<StrategyProfile> {
    StrategyProfile::new(parse_list(text)?)
}

fn to_json(v: &impl serde::Serialize) -> String {
    serde_json::to_string_pretty(v).expect("serializable") + "\n"
}

/// Runs a parsed command with the requested thread count.
pub fn run(cli: &Cli) -> Result<Outcome> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cli.threads.max(1))
        .build()
        .map_err(|e| Error::Domain(format!("cannot start thread pool: {e}")))?;
    pool.install(|| dispatch(cli))
}

fn dispatch(cli: &Cli) -> Result<Outcome> {
    let json = cli.format == Format::Json;
    match &cli.command {
        Command::Payoff { game, profile } => {
            let g = Game::new(&game.to_spec()?)?;
            let pay = g.payoffs(&profile_arg(profile)?)?;
            Ok(Outcome::ok(if json {
                to_json(&json!({ "payoffs": pay.payoffs() }))
            } else {
                let mut s = String::from("player,payoff\n");
                for (i, x) in pay.payoffs().iter().enumerate() {
                    s += &format!("{},{}\n", i + 1, fmt_num(*x));
                }
                s
            }))
        }
        Command::SocialCost { game, profile } => {
            let g = Game::new(&game.to_spec()?)?;
            let sc = g.social_cost(&profile_arg(profile)?)?;
            Ok(Outcome::ok(if json {
                to_json(&json!({ "socialCost": sc }))
            } else {
                format!("social_cost\n{}\n", fmt_num(sc))
            }))
        }
        Command::Pne {
            game,
            profile,
            enumerate,
            grid_step,
            gain_tol,
            grid_points,
            expect,
        } => {
            let spec = game.to_spec()?;
            let (stdout, verdict) = if *enumerate {
                let step = parse_number(grid_step)?;
                let found = pne_enumerate(&spec, step, *gain_tol)?;
                let text = if json {
                    to_json(&json!({ "gridStep": step, "profiles": found }))
                } else {
                    let n = spec.n;
                    let mut s = (1..=n)
                        .map(|i| format!("s{i}"))
                        .collect::<Vec<_>>()
                        .join(",");
                    s.push('\n');
                    for p in &found {
                        s += &fmt_list(p.as_slice(), ",");
                        s.push('\n');
                    }
                    s
                };
                (text, !found.is_empty())
            } else {
                let prof = profile_arg(profile.as_deref().expect("clap enforces --profile"))?;
                let r = is_pne(&spec, &prof, *gain_tol, *grid_points)?;
                let text = if json {
                    to_json(&r)
                } else {
                    format!(
                        "is_pne,worst_gain,witness_player,witness_deviation,candidate_count,gain_tol,grid_step\n{},{},{},{},{},{},{}\n",
                        r.is_pne,
                        fmt_num(r.worst_gain),
                        r.witness.map(|w| (w.player + 1).to_string()).unwrap_or_default(),
                        fmt_opt(r.witness.map(|w| w.deviation)),
                        r.candidate_count,
                        fmt_num(r.gain_tol),
                        fmt_num(r.grid_step),
                    )
                };
                (text, r.is_pne)
            };
            let exit_code = match expect {
                Some(e) if *e != verdict => EXIT_MISMATCH,
                _ => EXIT_OK,
            };
            Ok(Outcome { stdout, exit_code })
        }
        Command::Ic {
            game,
            budget,
            seed,
            no_fixtures,
        } => {
            let est = ic_search(&game.to_spec()?, *budget, *seed, !no_fixtures)?;
            Ok(Outcome::ok(if json {
                to_json(&est)
            } else {
                format!(
                    "mediator,n,seed,budget,search_lower,fixture_lower,analytic_lower,analytic_upper,argmax_profile\n{},{},{},{},{},{},{},{},{}\n",
                    est.mediator.kind(),
                    est.n,
                    est.seed,
                    est.budget,
                    fmt_num(est.search_lower),
                    fmt_opt(est.fixture_lower),
                    fmt_opt(est.analytic_lower),
                    fmt_opt(est.analytic_upper),
                    fmt_list(est.argmax_profile.as_slice(), ";"),
                )
            }))
        }
        Command::Table1 {
            epsilon,
            budget,
            seed,
        } => {
            let eps = parse_number(epsilon)?;
            let csv = table1_csv(eps, *budget, *seed)?;
            Ok(Outcome::ok(if json {
                to_json(&csv_to_json(&csv))
            } else {
                csv
            }))
        }
        Command::Policy { game, profile } => {
            let g = Game::new(&game.to_spec()?)?;
            let pol = g.mediator().compile(&profile_arg(profile)?)?;
            if json {
                let pieces: Vec<_> = pol
                    .pieces()
                    .map(|(lo, hi, d)| json!({ "lo": lo, "hi": hi, "probs": d }))
                    .collect();
                return Ok(Outcome::ok(to_json(&json!({ "pieces": pieces }))));
            }
            let mut s = String::from("lo,hi");
            for i in 1..=g.n() {
                s += &format!(",p{i}");
            }
            s.push('\n');
            for (lo, hi, d) in pol.pieces() {
                s += &format!("{},{},{}\n", fmt_num(lo), fmt_num(hi), fmt_list(d, ","));
            }
            Ok(Outcome::ok(s))
        }
    }
}

/// Rows of a CSV table as JSON objects keyed by header (values kept as text).
fn csv_to_json(csv: &str) -> serde_json::Value {
    let mut lines = csv.lines();
    let header: Vec<&str> = lines.next().unwrap_or_default().split(',').collect();
    let rows: Vec<serde_json::Value> = lines
        .map(|l| {
            let obj: serde_json::Map<String, serde_json::Value> = header
                .iter()
                .zip(l.split(','))
                .map(|(k, v)| (k.to_string(), json!(v)))
                .collect();
            serde_json::Value::Object(obj)
        })
        .collect();
    json!(rows)
}

/// Parses `args` (including the program name) and runs the command.
///
/// Usage errors yield [`EXIT_USAGE`] with the message on `stdout`'s
/// sibling, returned here as the error text.
pub fn run_args<I, T>(args: I) -> std::result::Result<Outcome, (i32, String)>
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = Cli::try_parse_from(args).map_err(|e| {
        let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        (code, e.render().to_string())
    })?;
    run(&cli).map_err(|e| (EXIT_USAGE, format!("error: {e}\n")))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::DEFAULT_EPSILON;

    fn out(args: &[&str]) -> Outcome {
        let mut v = vec!["hotelling"];
        v.extend_from_slice(args);
        run_args(v).unwrap_or_else(|(c, m)| panic!("exit {c}: {m}"))
    }

    #[test]
    fn numbers_parse_as_fractions() {
        assert_eq!(parse_number("1/6").unwrap(), 1.0 / 6.0);
        assert_eq!(parse_number("0.1666667").unwrap(), 1.0 / 6.0);
        assert_eq!(parse_number("0.8333333").unwrap(), 5.0 / 6.0);
        assert_eq!(parse_number("0.0833333").unwrap(), 1.0 / 12.0);
        assert_eq!(parse_number("0.0083333").unwrap(), 1.0 / 120.0);
        assert_eq!(parse_number("0.015625").unwrap(), 0.015625);
        assert_eq!(parse_number("0.3").unwrap(), 0.3);
        assert_eq!(parse_number("0.0625").unwrap(), 0.0625);
        assert_eq!(parse_number("1e-3").unwrap(), 1e-3);
        // no small-denominator fraction this close, so the decimal stands
        assert_eq!(parse_number("0.1234567").unwrap(), 0.1234567);
        assert!(parse_number("abc").is_err());
        assert!(parse_number("1/0").is_err());
    }

    #[test]
    fn social_cost_command() {
        assert_eq!(
            out(&[
                "social-cost",
                "--mediator",
                "nime",
                "--n",
                "2",
                "--profile",
                "0.5,0.5"
            ])
            .stdout,
            "social_cost\n0.25\n"
        );
        assert_eq!(
            out(&[
                "social-cost",
                "--mediator",
                "dict",
                "--n",
                "2",
                "--profile",
                "0,1"
            ])
            .stdout,
            "social_cost\n0.5\n"
        );
    }

    #[test]
    fn payoff_command_sums_to_one() {
        let o = out(&[
            "payoff",
            "--mediator",
            "lime",
            "--epsilon",
            "0.001",
            "--n",
            "4",
            "--profile",
            "0.0625,0.25,0.625,0.75",
        ]);
        let total: f64 = o
            .stdout
            .lines()
            .skip(1)
            .map(|l| l.split(',').nth(1).unwrap().parse::<f64>().unwrap())
            .sum();
        assert!((total - 1.0).abs() < 1e-11);
        assert_eq!(o.stdout.lines().count(), 5);
    }

    #[test]
    fn pne_command_and_expect() {
        let o = out(&[
            "pne",
            "--mediator",
            "lime",
            "--n",
            "3",
            "--profile",
            "0.1666667,0.5,0.8333333",
            "--expect",
            "true",
        ]);
        assert_eq!(o.exit_code, EXIT_OK);
        assert!(o.stdout.lines().nth(1).unwrap().starts_with("true,"));
        let o = out(&[
            "pne",
            "--mediator",
            "lime",
            "--n",
            "3",
            "--profile",
            "0.1,0.5,0.9",
            "--expect",
            "true",
        ]);
        assert_eq!(o.exit_code, EXIT_MISMATCH);
        let o = out(&[
            "pne",
            "--mediator",
            "nime",
            "--n",
            "2",
            "--enumerate",
            "--grid-step",
            "0.015625",
        ]);
        assert_eq!(o.stdout, "s1,s2\n0.5,0.5\n");
    }

    #[test]
    fn usage_errors() {
        let err = |args: &[&str]| {
            let mut v = vec!["hotelling"];
            v.extend_from_slice(args);
            run_args(v).unwrap_err().0
        };
        assert_eq!(
            err(&[
                "social-cost",
                "--mediator",
                "nime",
                "--n",
                "2",
                "--profile",
                "0.5,x"
            ]),
            EXIT_USAGE
        );
        assert_eq!(
            err(&[
                "social-cost",
                "--mediator",
                "nime",
                "--n",
                "3",
                "--profile",
                "0.5,0.5"
            ]),
            EXIT_USAGE
        );
        assert_eq!(
            err(&[
                "social-cost",
                "--mediator",
                "bogus",
                "--n",
                "2",
                "--profile",
                "0.5,0.5"
            ]),
            EXIT_USAGE
        );
        assert_eq!(
            err(&[
                "pne",
                "--mediator",
                "clime",
                "--n",
                "2",
                "--profile",
                "0.5,0.5"
            ]),
            EXIT_USAGE
        );
    }

    #[test]
    fn ic_command() {
        let o = out(&["ic", "--mediator", "nime", "--n", "5", "--budget", "100"]);
        let row: Vec<&str> = o.stdout.lines().nth(1).unwrap().split(',').collect();
        assert_eq!(row[0], "nime");
        assert_eq!(row[4], "0");
        let o = out(&[
            "ic",
            "--mediator",
            "glime",
            "--n",
            "4",
            "--budget",
            "500",
            "--format",
            "json",
        ]);
        let v: serde_json::Value = serde_json::from_str(&o.stdout).unwrap();
        assert!((v["fixtureLower"].as_f64().unwrap() - 0.140625).abs() < 1e-12);
        let back: crate::metrics::IcEstimate = serde_json::from_str(&o.stdout).unwrap();
        assert_eq!(back.n, 4);
    }

    #[test]
    fn game_file_and_distribution_file() {
        let dir = std::env::temp_dir().join(format!("hotelling-cli-{}", std::process::id()));
        fs::create_dir_all(&dir).unwrap();
        let game = dir.join("game.json");
        fs::write(
            &game,
            r#"{"n":2,"mediator":{"kind":"clime","lambda":0.125}}"#,
        )
        .unwrap();
        let o = out(&[
            "social-cost",
            "--game",
            game.to_str().unwrap(),
            "--profile",
            "0.375,0.625",
        ]);
        assert_eq!(o.stdout, "social_cost\n0.15625\n");

        let dist = dir.join("dist.json");
        fs::write(
            &dist,
            r#"{"kind":"pwl","breakpoints":[0,1],"values":[0,2]}"#,
        )
        .unwrap();
        let o = out(&[
            "payoff",
            "--mediator",
            "nime",
            "--n",
            "2",
            "--distribution",
            dist.to_str().unwrap(),
            "--profile",
            "0.5,0.5",
        ]);
        assert_eq!(o.stdout, "player,payoff\n1,0.5\n2,0.5\n");
        fs::remove_dir_all(&dir).unwrap();
    }

    #[test]
    fn policy_command() {
        let o = out(&[
            "policy",
            "--mediator",
            "nime",
            "--n",
            "2",
            "--profile",
            "0.25,0.75",
        ]);
        assert_eq!(
            o.stdout,
            "lo,hi,p1,p2\n0,0.25,1,0\n0.25,0.5,1,0\n0.5,0.75,0,1\n0.75,1,0,1\n"
        );
    }

    #[test]
    fn epsilon_default_matches_library() {
        assert_eq!(parse_number("0.001").unwrap(), DEFAULT_EPSILON);
    }
}
