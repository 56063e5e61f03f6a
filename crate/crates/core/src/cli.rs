//! Command-line experiment runner.
//!
//! [`run`] parses arguments, loads the problem file, dispatches to the
//! library inside a dedicated thread pool and writes JSON or CSV.

use std::ffi::OsString;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use serde_json::ser::{Formatter, Serializer};
use serde_json::{json, Value};

use crate::archimedean::{compare, main_term, singular_integral_truncated};
use crate::arcs::{classify, classify_grid, ArcClass, DEFAULT_DELTA};
use crate::arith::gcd3;
use crate::counting::{count_box, count_weighted_detail, fit_power_law};
use crate::error::{Error, Result};
use crate::expsums::{
    complete_sum, complete_sum_crt, default_radius, osc_integral, poisson_reconstruct, weyl_sum_direct, RationalApprox,
    DEFAULT_CAP,
};
use crate::forms::{
    hypothesis_report, minors, rank_quadratic, signature_quadratic, smooth_point_test, CubicForm, FormPair,
    QuadraticForm,
};
use crate::lattice::IntBox;
use crate::localdens::{hensel_stable, q_factorization, qp_solubility_search, singular_series_truncated};
use crate::weightfn::Weight;
use crate::weyldiag::{bilinear_growth, count_bilinear, count_bilinear_full, minor_arc_scan, ScanConfig, DEFAULT_EPS};

/// Environment variable overriding `--cap`.
pub const CAP_ENV: &str = "CIRCLELAB_CAP";

#[derive(Debug, Parser)]
#[command(name = "circlelab", version, about = "Circle method experiments for C = Q = 0")]
pub struct Cli {
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Seed for randomized grids.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Budget on residue vectors, lattice points and grid points.
    #[arg(long, global = true)]
    pub cap: Option<u64>,
    /// Quadrature tolerance.
    #[arg(long, global = true, default_value_t = 1e-10)]
    pub tol: f64,
    /// Write output here instead of stdout.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SumMode {
    Direct,
    Complete,
    Crt,
    Poisson,
    Integral,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Rank, signature and hypothesis checks.
    Info {
        #[arg(long)]
        problem: PathBuf,
    },
    /// Weighted counts N_ω(P), or raw counts in a box.
    Count {
        #[arg(long)]
        problem: PathBuf,
        #[arg(long = "P", value_delimiter = ',')]
        p: Vec<f64>,
        /// Count in an explicit box `a:b,c:d,...` instead.
        #[arg(long = "box", allow_hyphen_values = true)]
        bx: Option<String>,
    },
    /// Exponential sums and the oscillatory integral.
    Sum {
        #[arg(long)]
        problem: PathBuf,
        #[arg(long, value_enum)]
        mode: SumMode,
        #[arg(long)]
        q: Option<u64>,
        #[arg(long, allow_hyphen_values = true)]
        a3: Option<i64>,
        #[arg(long, allow_hyphen_values = true)]
        a2: Option<i64>,
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        m: Vec<i64>,
        #[arg(long = "P")]
        p: Option<f64>,
        #[arg(long, allow_hyphen_values = true)]
        alpha3: Option<f64>,
        #[arg(long, allow_hyphen_values = true)]
        alpha2: Option<f64>,
        #[arg(long, allow_hyphen_values = true, default_value_t = 0.0)]
        theta3: f64,
        #[arg(long, allow_hyphen_values = true, default_value_t = 0.0)]
        theta2: f64,
        #[arg(long, allow_hyphen_values = true)]
        gamma3: Option<f64>,
        #[arg(long, allow_hyphen_values = true)]
        gamma2: Option<f64>,
        /// Frequency vector for `integral`.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        z: Vec<f64>,
        /// Truncation radius for `poisson`.
        #[arg(long = "M")]
        radius: Option<i64>,
    },
    /// Major/minor arc classification.
    Arcs {
        #[arg(long = "P")]
        p: f64,
        #[arg(long, default_value_t = DEFAULT_DELTA)]
        delta: f64,
        #[arg(long, allow_hyphen_values = true)]
        alpha3: Option<f64>,
        #[arg(long, allow_hyphen_values = true)]
        alpha2: Option<f64>,
        /// Classify the k×k grid and emit CSV.
        #[arg(long)]
        grid: Option<u64>,
    },
    /// Truncated singular series with A(q).
    Series {
        #[arg(long)]
        problem: PathBuf,
        #[arg(long = "R")]
        r: u64,
    },
    /// p-adic density table and smooth point search.
    Local {
        #[arg(long)]
        problem: PathBuf,
        #[arg(long)]
        p: u64,
        #[arg(long, default_value_t = 2)]
        kmax: u32,
    },
    /// The q₀q₁q₂ splitting.
    Qfactor {
        #[arg(long)]
        problem: PathBuf,
        #[arg(long)]
        q: u64,
        #[arg(long, allow_hyphen_values = true)]
        a3: i64,
    },
    /// Truncated singular integral.
    Integral {
        #[arg(long)]
        problem: PathBuf,
        #[arg(long = "R")]
        r: f64,
    },
    /// Main-term prediction.
    Predict {
        #[arg(long)]
        problem: PathBuf,
        #[arg(long = "Rq")]
        rq: u64,
        #[arg(long = "Rgamma")]
        rgamma: f64,
        #[arg(long = "P")]
        p: f64,
    },
    /// Counts against predictions over a grid of P (CSV).
    Compare {
        #[arg(long)]
        problem: PathBuf,
        #[arg(long = "P", value_delimiter = ',', required = true)]
        p: Vec<f64>,
        #[arg(long = "Rq")]
        rq: u64,
        #[arg(long = "Rgamma")]
        rgamma: f64,
    },
    /// |S| scan with differencing diagnostics (CSV).
    WeylScan {
        #[arg(long)]
        problem: PathBuf,
        #[arg(long = "P")]
        p: f64,
        #[arg(long, default_value_t = 8)]
        grid: u64,
        #[arg(long, default_value_t = DEFAULT_DELTA)]
        delta: f64,
        #[arg(long, default_value_t = DEFAULT_EPS)]
        eps: f64,
        /// Extra seeded random points.
        #[arg(long, default_value_t = 0)]
        samples: usize,
    },
    /// Bilinear counts n(R) (CSV).
    Nr {
        #[arg(long)]
        problem: PathBuf,
        #[arg(long = "R", value_delimiter = ',', required = true)]
        r: Vec<i64>,
        /// Also run the exhaustive pair scan.
        #[arg(long)]
        full: bool,
    },
}

/// A loaded problem: the form pair and the weight.
#[derive(Debug, Clone, PartialEq)]
pub struct Problem {
    pub pair: FormPair,
    pub weight: Weight,
}

#[derive(Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
struct RawProblem {
    n: usize,
    cubic: Vec<Vec<i64>>,
    quadric: Vec<Vec<i64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    cubic_nonsingular: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    h: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    weight: Option<Weight>,
}

/// Parses a problem from JSON text, listing every schema violation.
pub fn parse_problem(text: &str) -> Result<Problem> {
    let raw: RawProblem = serde_json::from_str(text).map_err(|e| {
        let kind = if e.is_syntax() || e.is_eof() { "malformed JSON" } else { "schema error" };
        Error::Invalid(format!("{kind} at line {} column {}: {e}", e.line(), e.column()))
    })?;
    let n = raw.n;
    let mut errors = Vec::new();
    if n == 0 {
        errors.push("n must be at least 1".to_string());
    }
    let index_ok = |v: i64| v >= 1 && v as usize <= n;
    let mut cubic = Vec::new();
    for (t, e) in raw.cubic.iter().enumerate() {
        if e.len() != 4 {
            errors.push(format!("cubic[{t}]: expected [i, j, k, c], got {} entries", e.len()));
            continue;
        }
        if let Some(&bad) = e[..3].iter().find(|&&v| !index_ok(v)) {
            errors.push(format!("cubic[{t}]: index {bad} outside [1, {n}]"));
        } else if !(e[0] <= e[1] && e[1] <= e[2]) {
            errors.push(format!("cubic[{t}]: indices {:?} must satisfy i ≤ j ≤ k", &e[..3]));
        } else {
            cubic.push(([e[0] as usize, e[1] as usize, e[2] as usize], e[3]));
        }
    }
    let mut quadric = Vec::new();
    for (t, e) in raw.quadric.iter().enumerate() {
        if e.len() != 3 {
            errors.push(format!("quadric[{t}]: expected [i, j, c], got {} entries", e.len()));
            continue;
        }
        if let Some(&bad) = e[..2].iter().find(|&&v| !index_ok(v)) {
            errors.push(format!("quadric[{t}]: index {bad} outside [1, {n}]"));
        } else if e[0] > e[1] {
            errors.push(format!("quadric[{t}]: indices {:?} must satisfy i ≤ j", &e[..2]));
        } else {
            quadric.push(([e[0] as usize, e[1] as usize], e[2]));
        }
    }
    let weight = raw.weight.unwrap_or_else(|| Weight::default_for(n));
    if weight.dim() != n {
        errors.push(format!("weight.x0 has {} entries, expected {n}", weight.dim()));
    }
    if let Err(e) = Weight::new(weight.center.clone(), weight.xi) {
        errors.push(format!("weight: {e}"));
    }
    if !errors.is_empty() {
        return Err(Error::Invalid(format!("invalid problem:\n  {}", errors.join("\n  "))));
    }
    let mut pair = FormPair::new(CubicForm::new(n, cubic)?, QuadraticForm::new(n, quadric)?)?;
    pair.cubic_nonsingular = raw.cubic_nonsingular;
    pair.h_override = raw.h;
    Ok(Problem { pair, weight })
}

pub fn load_problem(path: &Path) -> Result<Problem> {
    let text =
        std::fs::read_to_string(path).map_err(|e| Error::Invalid(format!("cannot read {}: {e}", path.display())))?;
    parse_problem(&text)
}

/// The problem in the loader's schema.
pub fn problem_to_json(p: &Problem) -> Value {
    let raw = RawProblem {
        n: p.pair.dim(),
        cubic: p.pair.cubic.monomials().map(|([i, j, k], c)| vec![i as i64, j as i64, k as i64, c]).collect(),
        quadric: p.pair.quadric.monomials().map(|([i, j], c)| vec![i as i64, j as i64, c]).collect(),
        cubic_nonsingular: p.pair.cubic_nonsingular,
        h: p.pair.h_override,
        weight: Some(p.weight.clone()),
    };
    serde_json::to_value(raw).expect("problem serializes")
}

/// Writes floats with 17 significant digits.
struct FloatFormatter;

impl Formatter for FloatFormatter {
    fn write_f64<W: ?Sized + Write>(&mut self, writer: &mut W, value: f64) -> io::Result<()> {
        write!(writer, "{}", fmt_float(value))
    }
}

/// `{:.16e}`, or `nan`/`inf` spelled out for CSV.
pub fn fmt_float(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else {
        format!("{v}")
    }
}

/// Serializes `value` as JSON with 17-digit floats and a trailing newline.
pub fn to_json<T: Serialize>(value: &T) -> Vec<u8> {
    let mut buf = Vec::new();
    let mut ser = Serializer::with_formatter(&mut buf, FloatFormatter);
    value.serialize(&mut ser).expect("serializable report");
    buf.push(b'\n');
    buf
}

/// Header plus rows as RFC 4180 CSV.
pub fn to_csv(header: &[&str], rows: &[Vec<String>]) -> Vec<u8> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).expect("in-memory write");
    for r in rows {
        w.write_record(r).expect("in-memory write");
    }
    w.into_inner().expect("in-memory flush")
}

fn opt<T: ToString>(v: Option<T>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn opt_f(v: Option<f64>) -> String {
    v.map(fmt_float).unwrap_or_default()
}

fn need<T>(v: Option<T>, flag: &str) -> Result<T> {
    v.ok_or_else(|| Error::Invalid(format!("--{flag} is required for this mode")))
}

fn complex_json(z: num_complex::Complex64, meta: Value) -> Value {
    json!({ "re": z.re, "im": z.im, "abs": z.norm(), "meta": meta })
}

struct Ctx {
    cap: u64,
    tol: f64,
    seed: u64,
    warn: Vec<u8>,
}

fn load(ctx: &mut Ctx, path: &Path) -> Result<Problem> {
    let p = load_problem(path)?;
    if !p.weight.inside_unit_box() {
        let _ = writeln!(ctx.warn, "warning: weight support leaves the box (-1/2, 1/2)^n");
    }
    Ok(p)
}

fn arc_row(c: &ArcClass) -> Vec<String> {
    vec![
        fmt_float(c.alpha3),
        fmt_float(c.alpha2),
        c.is_major.to_string(),
        opt(c.q),
        opt(c.a3),
        opt(c.a2),
        c.dirichlet_q.to_string(),
        c.dirichlet_a3.to_string(),
        c.dirichlet_a2.to_string(),
        fmt_float(c.theta3),
        fmt_float(c.theta2),
        c.dirichlet_minor.to_string(),
    ]
}

fn dispatch(cmd: &Command, ctx: &mut Ctx) -> Result<Vec<u8>> {
    let (cap, tol) = (ctx.cap, ctx.tol);
    match cmd {
        Command::Info { problem } => {
            let pb = load(ctx, problem)?;
            let n = pb.pair.dim();
            let rho = rank_quadratic(&pb.pair.quadric);
            let sig = signature_quadratic(&pb.pair.quadric);
            let h = pb.pair.h_parameter().ok();
            let jac = pb.pair.jacobian_f64(&pb.weight.center);
            let m: Vec<Value> = minors(&jac).into_iter().map(|(i, j, v)| json!([i, j, v])).collect();
            Ok(to_json(&json!({
                "n": n,
                "rank": rho,
                "signature": sig,
                "h": h,
                "hypotheses": hypothesis_report(n, h, rho, sig),
                "weight_inside_unit_box": pb.weight.inside_unit_box(),
                "x0_smooth": smooth_point_test(&pb.pair, &pb.weight.center, 1e-9)?,
                "x0_minors": m,
                "problem": problem_to_json(&pb),
            })))
        }
        Command::Count { problem, p, bx } => {
            let pb = load(ctx, problem)?;
            if let Some(b) = bx {
                let b = IntBox::parse(b)?;
                crate::error::check_cap("box points", b.len(), cap)?;
                return Ok(to_json(&json!({ "box": b.ranges, "count": count_box(&pb.pair, &b)? })));
            }
            if p.is_empty() {
                return Err(Error::Invalid("--P or --box is required".into()));
            }
            let mut rows = Vec::new();
            let mut values = Vec::new();
            for &pv in p {
                let b = pb.weight.support_box(pv);
                crate::error::check_cap("box points", b.len(), cap)?;
                let c = count_weighted_detail(&pb.pair, pv, &pb.weight)?;
                values.push(c.value);
                rows.push(c);
            }
            let fit = if p.len() >= 3 { fit_power_law(p, &values).ok() } else { None };
            Ok(to_json(&json!({ "rows": rows, "fit": fit })))
        }
        Command::Sum { problem, mode, q, a3, a2, m, p, alpha3, alpha2, theta3, theta2, gamma3, gamma2, z, radius } => {
            let pb = load(ctx, problem)?;
            let n = pb.pair.dim();
            let mvec = if m.is_empty() { vec![0; n] } else { m.clone() };
            match mode {
                SumMode::Direct => {
                    let (pv, x3, x2) = (need(*p, "P")?, need(*alpha3, "alpha3")?, need(*alpha2, "alpha2")?);
                    crate::error::check_cap("box points", pb.weight.support_box(pv).len(), cap)?;
                    let s = weyl_sum_direct(&pb.pair, pv, &pb.weight, x3, x2)?;
                    Ok(to_json(&complex_json(s, json!({ "mode": "direct", "P": pv, "alpha3": x3, "alpha2": x2 }))))
                }
                SumMode::Complete | SumMode::Crt => {
                    let (qv, b3, b2) = (need(*q, "q")?, need(*a3, "a3")?, need(*a2, "a2")?);
                    if gcd3(qv as i64, b3, b2) != 1 {
                        let _ = writeln!(ctx.warn, "warning: gcd(q, a3, a2) > 1");
                    }
                    if *mode == SumMode::Complete {
                        let s = complete_sum(&pb.pair, qv, b3, b2, &mvec, cap)?;
                        Ok(to_json(&complex_json(
                            s,
                            json!({ "mode": "complete", "q": qv, "a3": b3, "a2": b2, "m": mvec }),
                        )))
                    } else {
                        let s = complete_sum_crt(&pb.pair, qv, b3, b2, &mvec, cap)?;
                        let meta =
                            json!({ "mode": "crt", "q": qv, "a3": b3, "a2": b2, "m": mvec, "factors": s.factors });
                        Ok(to_json(&complex_json(s.value, meta)))
                    }
                }
                SumMode::Poisson => {
                    let (pv, qv) = (need(*p, "P")?, need(*q, "q")?);
                    let approx =
                        RationalApprox::new(qv, need(*a3, "a3")? as u64, need(*a2, "a2")? as u64, *theta3, *theta2)?;
                    let rad = radius.unwrap_or_else(|| default_radius(&approx, pv));
                    let r = poisson_reconstruct(&pb.pair, pv, &pb.weight, &approx, rad, tol, cap)?;
                    let meta = json!({ "mode": "poisson", "P": pv, "approx": approx, "M": rad, "terms": r.terms, "quad_error": r.quad_error });
                    Ok(to_json(&complex_json(r.value, meta)))
                }
                SumMode::Integral => {
                    let (g3, g2) = (need(*gamma3, "gamma3")?, need(*gamma2, "gamma2")?);
                    let zv = if z.is_empty() { vec![0.0; n] } else { z.clone() };
                    let r = osc_integral(&pb.pair, &pb.weight, g3, g2, &zv, tol, cap)?;
                    let meta = json!({ "mode": "integral", "gamma3": g3, "gamma2": g2, "z": zv, "error": r.error, "level": r.level });
                    Ok(to_json(&complex_json(r.value, meta)))
                }
            }
        }
        Command::Arcs { p, delta, alpha3, alpha2, grid } => {
            const HEADER: [&str; 12] = [
                "alpha3",
                "alpha2",
                "is_major",
                "q",
                "a3",
                "a2",
                "dirichlet_q",
                "dirichlet_a3",
                "dirichlet_a2",
                "theta3",
                "theta2",
                "dirichlet_minor",
            ];
            if let Some(k) = grid {
                crate::error::check_cap("grid points", (*k as u128).pow(2), cap)?;
                let rows: Vec<Vec<String>> = classify_grid(*k, *p, *delta)?.iter().map(arc_row).collect();
                return Ok(to_csv(&HEADER, &rows));
            }
            let c = classify(need(*alpha3, "alpha3")?, need(*alpha2, "alpha2")?, *p, *delta)?;
            Ok(to_json(&c))
        }
        Command::Series { problem, r } => {
            let pb = load(ctx, problem)?;
            Ok(to_json(&singular_series_truncated(&pb.pair, *r, cap)?))
        }
        Command::Local { problem, p, kmax } => {
            let pb = load(ctx, problem)?;
            let table = hensel_stable(&pb.pair, *p, *kmax, cap)?;
            let qp = qp_solubility_search(&pb.pair, *p, *kmax, cap)?;
            Ok(to_json(&json!({ "hensel": table, "qp": qp })))
        }
        Command::Qfactor { problem, q, a3 } => {
            let pb = load(ctx, problem)?;
            Ok(to_json(&q_factorization(*q, *a3, &pb.pair.quadric)?))
        }
        Command::Integral { problem, r } => {
            let pb = load(ctx, problem)?;
            let j = singular_integral_truncated(&pb.pair, &pb.weight, *r, tol, cap)?;
            Ok(to_json(
                &json!({ "R": r, "value": j.value.re, "imag": j.value.im, "error": j.error, "level": j.level, "points": j.points as f64 }),
            ))
        }
        Command::Predict { problem, rq, rgamma, p } => {
            let pb = load(ctx, problem)?;
            Ok(to_json(&main_term(&pb.pair, &pb.weight, *rq, *rgamma, *p, tol, cap)?))
        }
        Command::Compare { problem, p, rq, rgamma } => {
            let pb = load(ctx, problem)?;
            for &pv in p {
                crate::error::check_cap("box points", pb.weight.support_box(pv).len(), cap)?;
            }
            let rows: Vec<Vec<String>> = compare(&pb.pair, &pb.weight, p, *rq, *rgamma, tol, cap)?
                .iter()
                .map(|r| {
                    vec![
                        fmt_float(r.p),
                        r.solutions.to_string(),
                        fmt_float(r.count),
                        fmt_float(r.prediction),
                        fmt_float(r.ratio),
                    ]
                })
                .collect();
            Ok(to_csv(&["P", "solutions", "N_omega", "prediction", "ratio"], &rows))
        }
        Command::WeylScan { problem, p, grid, delta, eps, samples } => {
            let pb = load(ctx, problem)?;
            crate::error::check_cap("box points", pb.weight.support_box(*p).len(), cap)?;
            let cfg =
                ScanConfig { p: *p, grid: *grid, samples: *samples, seed: ctx.seed, delta: *delta, eps: *eps, cap };
            let rows: Vec<Vec<String>> = minor_arc_scan(&pb.pair, &pb.weight, &cfg)?
                .iter()
                .map(|r| {
                    vec![
                        fmt_float(r.alpha3),
                        fmt_float(r.alpha2),
                        fmt_float(r.s_abs),
                        r.is_major.to_string(),
                        fmt_float(r.t3),
                        fmt_float(r.t2),
                        opt(r.s),
                        opt(r.b3),
                        opt_f(r.phi3),
                        opt_f(r.w1_lhs),
                        opt(r.w1_ok),
                        opt(r.u),
                        serde_json::to_value(r.alternative).expect("enum").as_str().unwrap_or("").to_string(),
                    ]
                })
                .collect();
            let header = [
                "alpha3",
                "alpha2",
                "abs_S",
                "is_major",
                "T3",
                "T2",
                "s",
                "b3",
                "phi3",
                "w1_lhs",
                "w1_ok",
                "u",
                "alternative",
            ];
            Ok(to_csv(&header, &rows))
        }
        Command::Nr { problem, r, full } => {
            let pb = load(ctx, problem)?;
            let mut rows = Vec::new();
            for &rv in r {
                let fast = count_bilinear(&pb.pair.cubic, rv, cap)?;
                let slow = if *full { Some(count_bilinear_full(&pb.pair.cubic, rv, cap)?) } else { None };
                rows.push(vec![rv.to_string(), fast.to_string(), opt(slow)]);
            }
            if r.len() >= 3 {
                if let Ok(fit) = bilinear_growth(&pb.pair.cubic, r, cap) {
                    let _ = writeln!(ctx.warn, "fitted exponent of n(R): {}", fmt_float(fit.slope));
                }
            }
            Ok(to_csv(&["R", "n_R", "n_R_full"], &rows))
        }
    }
}

fn exit_code(e: &Error) -> i32 {
    if e.is_budget() {
        3
    } else {
        2
    }
}

/// Runs the CLI with `args` (including the program name) and returns the
/// process exit code: 0 on success, 2 on input errors, 3 when a budget or
/// cap is exceeded.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 2,
            };
            let text = e.render().to_string();
            let _ = if code == 0 { out.write_all(text.as_bytes()) } else { err.write_all(text.as_bytes()) };
            return code;
        }
    };
    let cap = match std::env::var(CAP_ENV) {
        Ok(v) => match v.trim().parse::<u64>() {
            Ok(c) => c,
            Err(_) => {
                let _ = writeln!(err, "error: {CAP_ENV}={v} is not an integer");
                return 2;
            }
        },
        Err(_) => cli.cap.unwrap_or(DEFAULT_CAP),
    };
    if !(cli.tol > 0.0) {
        let _ = writeln!(err, "error: --tol must be positive");
        return 2;
    }
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(t) = cli.threads {
        builder = builder.num_threads(t);
    }
    let pool = match builder.build() {
        Ok(p) => p,
        Err(e) => {
            let _ = writeln!(err, "error: cannot start thread pool: {e}");
            return 2;
        }
    };
    let mut ctx = Ctx { cap, tol: cli.tol, seed: cli.seed, warn: Vec::new() };
    let result = pool.install(|| dispatch(&cli.command, &mut ctx));
    let _ = err.write_all(&ctx.warn);
    match result {
        Ok(bytes) => {
            let written = match &cli.out {
                Some(path) => std::fs::write(path, &bytes),
                None => out.write_all(&bytes).and_then(|_| out.flush()),
            };
            match written {
                Ok(()) => 0,
                Err(e) => {
                    let _ = writeln!(err, "error: cannot write output: {e}");
                    2
                }
            }
        }
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            exit_code(&e)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const LINE: &str = r#"{"n": 2, "cubic": [[1,1,1,1],[2,2,2,1]], "quadric": [[1,1,1],[2,2,-1]],
        "weight": {"x0": [0.0, 0.0], "xi": 0.4}}"#;

    #[test]
    fn loads_valid_fixture() {
        let p = parse_problem(LINE).unwrap();
        assert_eq!(p.pair.dim(), 2);
        assert_eq!(p.pair.cubic, CubicForm::diagonal(&[1, 1]));
        assert_eq!(p.weight, Weight::default_for(2));
        let p = parse_problem(r#"{"n":1,"cubic":[[1,1,1,2],[1,1,1,-1]],"quadric":[]}"#).unwrap();
        assert_eq!(p.pair.cubic, CubicForm::diagonal(&[1]));
    }

    #[test]
    fn lists_every_schema_error() {
        let e = parse_problem(r#"{"n": 2, "cubic": [[1,1,3,1],[2,1,1,1]], "quadric": [[2,1,1],[1,1]]}"#).unwrap_err();
        let msg = e.to_string();
        assert!(msg.contains("cubic[0]") && msg.contains("cubic[1]"), "{msg}");
        assert!(msg.contains("quadric[0]") && msg.contains("quadric[1]"), "{msg}");
        let e = parse_problem("{\"n\": 2,\n \"cubic\": [[1,1,1,1]\n").unwrap_err();
        assert!(e.to_string().contains("malformed JSON at line 3"), "{e}");
        let e = parse_problem(r#"{"n": 2, "cubic": [], "quadric": [], "extra": 1}"#).unwrap_err();
        assert!(e.to_string().contains("schema error"));
    }

    #[test]
    fn problem_round_trip() {
        let p = parse_problem(LINE).unwrap();
        let text = String::from_utf8(to_json(&problem_to_json(&p))).unwrap();
        assert_eq!(parse_problem(&text).unwrap(), p);
    }

    #[test]
    fn emit_formats() {
        assert_eq!(String::from_utf8(to_json(&json!({"x": 0.1}))).unwrap(), "{\"x\":1.0000000000000001e-1}\n");
        assert_eq!(String::from_utf8(to_csv(&["a", "b"], &[])).unwrap(), "a,b\n");
        let s = String::from_utf8(to_csv(&["a"], &[vec!["x,y".into()]])).unwrap();
        assert_eq!(s, "a\n\"x,y\"\n");
        let v: Value =
            serde_json::from_slice(&to_json(&complex_json(num_complex::Complex64::new(3.0, 4.0), json!({})))).unwrap();
        assert_eq!((v["re"].as_f64(), v["im"].as_f64(), v["abs"].as_f64()), (Some(3.0), Some(4.0), Some(5.0)));
    }

    #[test]
    fn exit_codes() {
        let (mut out, mut err) = (Vec::new(), Vec::new());
        assert_eq!(run(["circlelab", "bogus"], &mut out, &mut err), 2);
        assert_eq!(
            run(["circlelab", "arcs", "--P", "100", "--alpha3", "0.5", "--alpha2", "0.5"], &mut out, &mut err),
            0
        );
        let v: Value = serde_json::from_slice(&out).unwrap();
        assert_eq!(v["dirichlet_q"], 2);
        out.clear();
        assert_eq!(run(["circlelab", "arcs", "--P", "100", "--grid", "100", "--cap", "10"], &mut out, &mut err), 3);
        assert_eq!(run(["circlelab", "info", "--problem", "/nonexistent.json"], &mut out, &mut err), 2);
        assert_eq!(run(["circlelab", "--help"], &mut out, &mut err), 0);
    }
}
