//! The `uqf` command-line front end.
//!
//! [`run`] parses arguments, sets up the worker pool and writes results to
//! the given streams. It returns the process exit code: 0 on success, 2 for
//! usage or input errors, 3 when a budget or search limit is hit, and 4 when
//! a certified inequality fails.

use std::ffi::OsString;
use std::io::Write;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_bigint::BigInt;
use num_rational::BigRational;
use serde_json::json;

use crate::arith::{fmt_rational, parse_rational};
use crate::certified::BoundValue;
use crate::equidist::{self, SequenceKind};
use crate::error::{Error, Result};
use crate::lattice::{self, GramMatrix};
use crate::measure;
use crate::surd_cf;
use crate::survey::{self, CensusKind};

const THREADS_ENV: &str = "UQF_THREADS";

#[derive(Parser, Debug)]
#[command(
    name = "uqf",
    version,
    about = "Continued fractions, lattice counts and certified bounds for real quadratic fields"
)]
struct Cli {
    #[command(flatten)]
    config: RunConfig,

    #[command(subcommand)]
    command: Command,
}

/// Settings shared by every subcommand.
#[derive(Args, Debug, Clone)]
pub struct RunConfig {
    /// Worker threads, 0 for one per core. UQF_THREADS takes precedence.
    #[arg(long, global = true, default_value_t = 0)]
    pub threads: usize,

    /// Working precision of certified bounds, in bits.
    #[arg(long, global = true, default_value_t = 256, value_parser = clap::value_parser!(u32).range(64..=16384))]
    pub precision_bits: u32,

    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    pub format: Format,

    /// Cap on generated intervals, enumeration nodes or summation terms.
    #[arg(long, global = true, default_value_t = 10_000_000)]
    pub budget: u64,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum KindArg {
    Xi,
    #[value(name = "sqrt_all")]
    SqrtAll,
    #[value(name = "half_all")]
    HalfAll,
}

impl From<KindArg> for CensusKind {
    fn from(k: KindArg) -> Self {
        match k {
            KindArg::Xi => CensusKind::Xi,
            KindArg::SqrtAll => CensusKind::SqrtAll,
            KindArg::HalfAll => CensusKind::HalfAll,
        }
    }
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum SeqArg {
    Sqrt,
    Half,
}

impl From<SeqArg> for SequenceKind {
    fn from(k: SeqArg) -> Self {
        match k {
            SeqArg::Sqrt => SequenceKind::Sqrt,
            SeqArg::Half => SequenceKind::Half,
        }
    }
}

fn rational_arg(s: &str) -> std::result::Result<BigRational, String> {
    parse_rational(s).ok_or_else(|| format!("not a rational number: {s:?}"))
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Continued fraction of xi_D with its largest odd-indexed coefficient.
    Cf { d: u64 },

    /// Count D <= X with all odd-indexed coefficients <= B against the
    /// explicit bound.
    Survey {
        #[arg(long)]
        xmax: u64,
        #[arg(long)]
        bound_b: u64,
        #[arg(long, value_enum, default_value_t = KindArg::Xi)]
        kind: KindArg,
        /// Restrict to squarefree D.
        #[arg(long)]
        squarefree: bool,
        /// Use the variant bound with the weaker precondition.
        #[arg(long)]
        man: bool,
    },

    /// Number of lattice vectors of norm n for a Gram matrix file.
    Vectors {
        #[arg(long)]
        gram: std::path::PathBuf,
        #[arg(long)]
        n: u64,
    },

    /// Short-vector bound C(r, n) or B(R, m).
    Bound {
        #[arg(long = "r", requires = "n", conflicts_with_all = ["big_r", "m"])]
        r: Option<u64>,
        #[arg(long)]
        n: Option<u64>,
        #[arg(long, default_value = "1")]
        det: BigInt,
        #[arg(long = "R", id = "big_r", requires = "m")]
        big_r: Option<u64>,
        #[arg(long)]
        m: Option<u64>,
    },

    /// Rank lower bounds from D or from the coefficient u.
    Rank {
        #[arg(long, conflicts_with = "u", required_unless_present = "u")]
        d: Option<u64>,
        #[arg(long)]
        u: Option<u64>,
        #[arg(long, default_value_t = 1)]
        m: u64,
    },

    /// Interval count and discrepancy of frac(f_D) for D <= X.
    Discrepancy {
        #[arg(long)]
        xmax: u64,
        #[arg(long, value_parser = rational_arg)]
        a: BigRational,
        #[arg(long, value_parser = rational_arg)]
        b: BigRational,
        #[arg(long, value_enum, default_value_t = SeqArg::Sqrt)]
        kind: SeqArg,
        /// Also evaluate the Erdős–Turán bound with this many frequencies.
        #[arg(long)]
        et_k: Option<u64>,
    },

    /// Interval cover for bounded odd coefficients.
    Cover {
        #[arg(long)]
        b: u64,
        #[arg(long)]
        n: u64,
        #[arg(long)]
        l: u64,
        /// Test whether frac(xi_D) lies in the cover.
        #[arg(long)]
        check_d: Option<u64>,
    },

    /// Sum of 1/q_N^2 over coefficient tuples with entries <= K.
    Qsum {
        #[arg(long)]
        n: u32,
        #[arg(long)]
        k: u64,
    },

    /// Per-D coefficient and rank table for squarefree 1 < D <= X.
    Table {
        #[arg(long)]
        xmax: u64,
        #[arg(long, default_value_t = 1)]
        m: u64,
    },

    /// Exclusion count for rank R and scale m.
    Exclusion {
        #[arg(long = "R")]
        r: u64,
        #[arg(long)]
        m: u64,
        #[arg(long)]
        xmax: u64,
    },

    /// Timing of the census sweep and lattice enumeration.
    Bench {
        #[arg(long, default_value_t = 100_000)]
        xmax: u64,
        #[arg(long, default_value_t = 2)]
        bound_b: u64,
    },
}

/// Runs the CLI on `args` (including the program name) and returns the exit
/// code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let text = e.render().to_string();
            let _ = if code == 0 {
                write!(out, "{text}")
            } else {
                write!(err, "{text}")
            };
            return code;
        }
    };
    let threads = match threads_from_env(cli.config.threads) {
        Ok(t) => t,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            return e.exit_code();
        }
    };
    let pool = match rayon::ThreadPoolBuilder::new().num_threads(threads).build() {
        Ok(p) => p,
        Err(e) => {
            let _ = writeln!(err, "error: cannot start worker pool: {e}");
            return 2;
        }
    };
    match pool.install(|| execute(&cli.command, &cli.config)) {
        Ok(text) => {
            let _ = out.write_all(text.as_bytes());
            0
        }
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.exit_code()
        }
    }
}

fn threads_from_env(flag: usize) -> Result<usize> {
    match std::env::var(THREADS_ENV) {
        Ok(v) if !v.trim().is_empty() => v
            .trim()
            .parse()
            .map_err(|_| Error::invalid(format!("{THREADS_ENV}={v:?} is not a thread count"))),
        _ => Ok(flag),
    }
}

fn json_line(v: serde_json::Value) -> String {
    format!("{v}\n")
}

fn bound_str(b: &BoundValue) -> String {
    b.to_decimal_up(30)
}

fn execute(cmd: &Command, cfg: &RunConfig) -> Result<String> {
    let prec = cfg.precision_bits;
    let json = cfg.format == Format::Json;
    match cmd {
        Command::Cf { d } => {
            let cf = surd_cf::expand_xi(*d)?;
            let (u, at) = cf.max_odd_coefficient();
            if json {
                let list = |v: &[BigInt]| v.iter().map(|x| x.to_string()).collect::<Vec<_>>();
                Ok(json_line(json!({
                    "D": d,
                    "preperiod": list(cf.preperiod()),
                    "period": list(cf.period()),
                    "period_length": cf.period().len(),
                    "u": u.to_string(),
                    "witness_index": at,
                })))
            } else {
                Ok(format!(
                    "{cf} u={u}\nperiod_length={} witness_index={at}\n",
                    cf.period().len()
                ))
            }
        }
        Command::Survey {
            xmax,
            bound_b,
            kind,
            squarefree,
            man,
        } => {
            let r =
                survey::census_report(*xmax, *bound_b, (*kind).into(), *squarefree, *man, prec)?;
            Ok(if json {
                json_line(r.to_json())
            } else {
                r.to_csv()
            })
        }
        Command::Vectors { gram, n } => {
            let text = std::fs::read_to_string(gram)
                .map_err(|e| Error::invalid(format!("cannot read {}: {e}", gram.display())))?;
            let g = GramMatrix::parse(&text)?;
            let counts = lattice::count_vectors_upto(&g, *n, cfg.budget)?;
            let c = counts[*n as usize];
            Ok(if json {
                json_line(json!({ "rank": g.rank(), "n": n, "count": c }))
            } else {
                format!("rank,n,count\n{},{n},{c}\n", g.rank())
            })
        }
        Command::Bound {
            r,
            n,
            det,
            big_r,
            m,
        } => {
            let (label, a, b, v) = match (r, n, big_r, m) {
                (Some(r), Some(n), None, None) => {
                    ("C", *r, *n, lattice::bound_c(*r, *n, det, prec)?)
                }
                (None, None, Some(rr), Some(m)) => ("B", *rr, *m, lattice::bound_b(*rr, *m, prec)?),
                _ => return Err(Error::invalid("give either --r and --n, or --R and --m")),
            };
            let (ka, kb) = if label == "C" { ("r", "n") } else { ("R", "m") };
            Ok(if json {
                let mut o = json!({ "bound": label, ka: a, kb: b, "value": v, "precision_bits": v.precision_bits() });
                if label == "C" {
                    o["det"] = json!(det.to_string());
                }
                json_line(o)
            } else if label == "C" {
                format!(
                    "r,n,det,value,precision_bits\n{a},{b},{det},{},{}\n",
                    bound_str(&v),
                    v.precision_bits()
                )
            } else {
                format!(
                    "R,m,value,precision_bits\n{a},{b},{},{}\n",
                    bound_str(&v),
                    v.precision_bits()
                )
            })
        }
        Command::Rank { d, u, m } => {
            let u = match (d, u) {
                (Some(d), None) => survey::odd_max_and_period(*d)?.0,
                (None, Some(u)) => *u,
                _ => return Err(Error::invalid("give exactly one of --d and --u")),
            };
            let c = survey::min_rank_classical(u, *m)?;
            let g = survey::min_rank_general(u)?;
            Ok(if json {
                json_line(
                    json!({ "D": d, "u": u, "m": m, "rank_lb_classical": c, "rank_lb_general": g }),
                )
            } else {
                let dcol = d.map(|d| d.to_string()).unwrap_or_default();
                format!("D,u,m,rank_lb_classical,rank_lb_general\n{dcol},{u},{m},{c},{g}\n")
            })
        }
        Command::Discrepancy {
            xmax,
            a,
            b,
            kind,
            et_k,
        } => {
            let kind: SequenceKind = (*kind).into();
            let count = equidist::fractional_count(kind, *xmax, a, b)?;
            let disc = equidist::discrepancy(kind, *xmax, a, b)?;
            let bound = equidist::discrepancy_bound(kind, *xmax, prec)?;
            let et = et_k
                .map(|k| equidist::erdos_turan_rhs(kind, *xmax, k, prec))
                .transpose()?;
            let kname = match kind {
                SequenceKind::Sqrt => "sqrt",
                SequenceKind::Half => "half",
            };
            Ok(if json {
                json_line(json!({
                    "kind": kname,
                    "X": xmax,
                    "a": fmt_rational(a),
                    "b": fmt_rational(b),
                    "count": count,
                    "discrepancy": fmt_rational(&disc),
                    "bound": bound,
                    "erdos_turan_K": et_k,
                    "erdos_turan": et,
                }))
            } else {
                format!(
                    "kind,X,a,b,count,discrepancy,bound,erdos_turan_K,erdos_turan\n{kname},{xmax},{},{},{count},{},{},{},{}\n",
                    fmt_rational(a),
                    fmt_rational(b),
                    fmt_rational(&disc),
                    bound_str(&bound),
                    et_k.map(|k| k.to_string()).unwrap_or_default(),
                    et.as_ref().map(bound_str).unwrap_or_default(),
                )
            })
        }
        Command::Cover { b, n, l, check_d } => {
            let cover = measure::build_cover(*b, *n, *l, cfg.budget)?;
            let contains = match check_d {
                Some(d) => Some(cover.contains(&surd_cf::make_xi(*d)?.fract())),
                None => None,
            };
            Ok(if json {
                let mut v = cover.to_json();
                if let (Some(d), Some(c)) = (check_d, contains) {
                    v["check"] = json!({ "D": d, "contains": c });
                }
                json_line(v)
            } else {
                let mut s = String::from("lo,hi\n");
                for iv in &cover.intervals {
                    s += &format!("{},{}\n", fmt_rational(&iv.lo), fmt_rational(&iv.hi));
                }
                s += &format!(
                    "# count={} raw_count={} declared_count_bound={} measure={} declared_measure_bound={}\n",
                    cover.count(),
                    cover.raw_count,
                    cover.declared_count_bound,
                    fmt_rational(&cover.total_measure()),
                    fmt_rational(&cover.declared_measure_bound),
                );
                if let (Some(d), Some(c)) = (check_d, contains) {
                    s += &format!("# D={d} contains={c}\n");
                }
                s
            })
        }
        Command::Qsum { n, k } => match measure::qsum_truncated(*n, *k, cfg.budget) {
            Ok(v) => Ok(if json {
                json_line(json!({ "N": n, "K": k, "exact": true, "value": fmt_rational(&v) }))
            } else {
                format!("N,K,value\n{n},{k},{}\n", fmt_rational(&v))
            }),
            Err(Error::BudgetExceeded { .. }) => {
                let (lo, hi) = measure::qsum_bounds(*n, *k, 64, cfg.budget)?;
                let lo_s = crate::certified::decimal_directed(&lo, 20, false);
                let hi_s = crate::certified::decimal_directed(&hi, 20, true);
                Ok(if json {
                    json_line(
                        json!({ "N": n, "K": k, "exact": false, "lower": lo_s, "upper": hi_s }),
                    )
                } else {
                    format!("N,K,lower,upper\n{n},{k},{lo_s},{hi_s}\n")
                })
            }
            Err(e) => Err(e),
        },
        Command::Table { xmax, m } => {
            let rows = survey::rank_table(*xmax, *m)?;
            if json {
                let v: Vec<_> = rows
                    .iter()
                    .map(|r| {
                        json!({
                            "D": r.d,
                            "squarefree": r.squarefree,
                            "u": r.u,
                            "period_length": r.period_length,
                            "rank_lb_classical": r.rank_lb_classical,
                            "rank_lb_general": r.rank_lb_general,
                        })
                    })
                    .collect();
                Ok(json_line(json!(v)))
            } else {
                let mut buf = Vec::new();
                survey::write_rank_table_csv(&mut buf, &rows).expect("writing to memory");
                Ok(String::from_utf8(buf).expect("ascii output"))
            }
        }
        Command::Exclusion { r, m, xmax } => {
            let rep = survey::exclusion_count(*r, *m, *xmax)?;
            Ok(if json {
                json_line(rep.to_json())
            } else {
                rep.to_csv()
            })
        }
        Command::Bench { xmax, bound_b } => {
            let t = Instant::now();
            let c = survey::census(*xmax, *bound_b, CensusKind::Xi, false)?;
            let census_s = t.elapsed().as_secs_f64();
            let t = Instant::now();
            let counts = lattice::count_vectors_upto(
                &GramMatrix::e8(),
                4,
                cfg.budget.max(lattice::DEFAULT_ENUM_BUDGET),
            )?;
            let enum_s = t.elapsed().as_secs_f64();
            let vectors: u64 = counts.iter().sum();
            let rate = |n: u64, s: f64| if s > 0.0 { n as f64 / s } else { f64::INFINITY };
            let rows = [
                (
                    "census",
                    *xmax,
                    census_s,
                    rate(*xmax, census_s),
                    format!("count={c}"),
                ),
                (
                    "enumeration_e8_norm_le_4",
                    vectors,
                    enum_s,
                    rate(vectors, enum_s),
                    String::new(),
                ),
            ];
            Ok(if json {
                let v: Vec<_> = rows
                    .iter()
                    .map(|(task, items, s, r, note)| json!({ "task": task, "items": items, "seconds": s, "rate": r, "note": note }))
                    .collect();
                json_line(json!(v))
            } else {
                let mut s = String::from("task,items,seconds,rate_per_sec,note\n");
                for (task, items, secs, r, note) in rows {
                    s += &format!("{task},{items},{secs:.6},{r:.1},{note}\n");
                }
                s
            })
        }
    }
}
