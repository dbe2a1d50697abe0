//! Batch command line. `run` returns the exit code and everything meant for
//! standard output, so tests can drive it without a subprocess.

use std::sync::Arc;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::kwengine::{
    find_certificate, interleaving_report, prove_removed, secant, stilde_enumerate, symbolic_predicate,
};
use crate::ordinal::Ordinal;
use crate::rational::{fmt_q, parse_q, pow2_inv, Q};
use crate::realfunc::{eval, FunctionHandle};
use crate::reduction::{oracle_truth, predicted_rank, reduction_rank, OracleStub, ReductionInput, WitnessOracle};
use crate::selftest;
use crate::simpson::{check_closure, export_simpson_code};
use crate::treeschema::{rank_witness, TreeSchema};

#[derive(Parser, Debug)]
#[command(name = "kwlab", version, about = "Tree ranks and derivative-oscillation ranks, exactly")]
struct Cli {
    #[command(subcommand)]
    cmd: Command,
    /// Emit CSV instead of JSON.
    #[arg(long, global = true)]
    csv: bool,
    /// Exit 3 when a verdict was required but none was reached.
    #[arg(long, global = true)]
    strict: bool,
    /// Worker threads for parallel searches.
    #[arg(long, global = true)]
    threads: Option<usize>,
}

#[derive(Args, Debug, Clone)]
struct SchemaArg {
    /// Tree schema text, e.g. 'node{ node{} xW }'.
    #[arg(long, conflicts_with = "schema_file")]
    schema: Option<String>,
    /// File holding tree schema text.
    #[arg(long)]
    schema_file: Option<String>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Limsup rank of a schema.
    Rank(SchemaArg),
    /// Canonical tree of a given successor rank.
    Witness {
        #[arg(long)]
        ordinal: String,
    },
    /// Value of f_T at a rational point, with an error bound.
    Eval {
        #[command(flatten)]
        schema: SchemaArg,
        #[arg(long)]
        x: String,
        /// Error tolerance.
        #[arg(long, default_value = "1/1099511627776")]
        eps: String,
    },
    /// Search for a stage certificate at a point, or a proof of removal.
    Certify {
        #[command(flatten)]
        schema: SchemaArg,
        #[arg(long)]
        x: String,
        #[arg(long, default_value_t = 1)]
        stage: u64,
        #[arg(long)]
        eps: String,
        #[arg(long)]
        delta: String,
        #[arg(long, default_value_t = 48)]
        budget: usize,
    },
    /// Enumerate the approximation tree over a dyadic grid.
    Stilde {
        #[command(flatten)]
        schema: SchemaArg,
        #[arg(long)]
        eps: String,
        /// Longest sequence to enumerate.
        #[arg(long, default_value_t = 3)]
        depth: u64,
        #[arg(long, default_value_t = 3)]
        grid_depth: u64,
    },
    /// Rank of the reduction tree built over an oracle stub.
    Reduce {
        #[arg(long)]
        stub_file: String,
        /// Input pair `alpha:x`; repeat for several.
        #[arg(long = "pair")]
        pairs: Vec<String>,
        /// Single input level, used with --x when no --pair is given.
        #[arg(long)]
        ordinal: Option<String>,
        #[arg(long)]
        x: Option<u64>,
        /// Sampling window for limit levels.
        #[arg(long, default_value_t = 3)]
        budget: u64,
    },
    /// Simpson code of f_T as quintuples (n, a, r, b, s).
    ExportCode {
        #[command(flatten)]
        schema: SchemaArg,
        #[arg(long, default_value_t = 8)]
        budget: u64,
    },
    /// Secant slopes between all pairs of dyadic grid points.
    Slopes {
        #[command(flatten)]
        schema: SchemaArg,
        #[arg(long, default_value_t = 3)]
        grid_depth: u64,
        /// Evaluation tolerance.
        #[arg(long, default_value = "1/1099511627776")]
        eps: String,
    },
    /// Compare certificates and removal proofs across sensitivities.
    Interleave {
        #[command(flatten)]
        schema: SchemaArg,
        #[arg(long, default_value_t = 1)]
        stage: u64,
        #[arg(long)]
        eps: String,
        #[arg(long, default_value_t = 3)]
        grid_depth: u64,
    },
    /// Run the acceptance suite.
    Selftest,
}

/// Exit code plus standard output.
pub fn run<I, T>(argv: I) -> (i32, String)
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            return (code, e.render().to_string());
        }
    };
    let go = || match dispatch(&cli) {
        Ok(out) => out,
        Err(e) => (exit_code(&e), format!("{}\n", json!({ "error": e.to_string() }))),
    };
    match cli.threads {
        Some(n) => match rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build() {
            Ok(pool) => pool.install(go),
            Err(e) => (1, format!("{}\n", json!({ "error": e.to_string() }))),
        },
        None => go(),
    }
}

fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Parse(_) | Error::Domain(_) => 1,
        Error::Verification(_) => 2,
    }
}

fn schema(a: &SchemaArg) -> Result<TreeSchema> {
    match (&a.schema, &a.schema_file) {
        (Some(s), _) => s.parse(),
        (None, Some(p)) => std::fs::read_to_string(p)
            .map_err(|e| Error::Domain(format!("cannot read {p}: {e}")))?
            .parse(),
        (None, None) => Err(Error::Parse("one of --schema or --schema-file is required".into())),
    }
}

fn handle(a: &SchemaArg) -> Result<FunctionHandle> {
    Ok(FunctionHandle::tree(schema(a)?))
}

fn ordinal(s: &str) -> Result<Ordinal> {
    s.parse()
}

fn grid(depth: u64) -> Result<Vec<Q>> {
    if depth > 10 {
        return Err(Error::Domain(format!("grid depth {depth} exceeds 10")));
    }
    let n = 1u64 << depth;
    Ok((0..=n).map(|k| Q::from_integer(k.into()) * pow2_inv(depth)).collect())
}

fn to_json<T: Serialize>(v: &T) -> String {
    format!("{}\n", serde_json::to_string(v).expect("serializable"))
}

fn csv(header: &str, rows: impl IntoIterator<Item = String>) -> String {
    let mut out = format!("{header}\n");
    for r in rows {
        out.push_str(&r);
        out.push('\n');
    }
    out
}

fn dispatch(cli: &Cli) -> Result<(i32, String)> {
    let ok = |s: String| Ok((0, s));
    match &cli.cmd {
        Command::Rank(a) => {
            let r = schema(a)?.limsup_rank().to_string();
            if cli.csv {
                ok(csv("limsup_rank", [r]))
            } else {
                ok(to_json(&json!({ "limsup_rank": r })))
            }
        }
        Command::Witness { ordinal: o } => {
            let a = ordinal(o)?;
            let s = rank_witness(&a)?.to_string();
            if cli.csv {
                ok(csv("ordinal,schema", [format!("{a},\"{s}\"")]))
            } else {
                ok(to_json(&json!({ "ordinal": a.to_string(), "schema": s })))
            }
        }
        Command::Eval { schema: a, x, eps } => {
            let (x, tol) = (parse_q(x)?, parse_q(eps)?);
            let (v, e) = eval(&handle(a)?, &x, &tol)?;
            if cli.csv {
                ok(csv("x,value,error", [format!("{},{},{}", fmt_q(&x), fmt_q(&v), fmt_q(&e))]))
            } else {
                ok(to_json(&json!({ "x": fmt_q(&x), "value": fmt_q(&v), "error": fmt_q(&e) })))
            }
        }
        Command::Certify { schema: a, x, stage, eps, delta, budget } => {
            let f = handle(a)?;
            let (x, eps, delta) = (parse_q(x)?, parse_q(eps)?, parse_q(delta)?);
            let m = symbolic_predicate(&f, *stage);
            let cert = find_certificate(&f, &x, &delta, &eps, *stage, &m, *budget)?;
            let removal = if cert.is_none() { prove_removed(&f, &x, &eps, *stage, &m)? } else { None };
            let verdict = match (&cert, &removal) {
                (Some(_), _) => "in",
                (None, Some(_)) => "out",
                _ => "inconclusive",
            };
            let code = if verdict == "inconclusive" && cli.strict { 3 } else { 0 };
            let out = if cli.csv {
                let c = cert.as_ref();
                let cell = |g: fn(&crate::kwengine::Certificate) -> &Q| c.map_or(String::new(), |c| fmt_q(g(c)));
                csv(
                    "x,stage,verdict,p,q,r,s,slope_gap_lower_bound,removal_delta",
                    [format!(
                        "{},{stage},{verdict},{},{},{},{},{},{}",
                        fmt_q(&x),
                        cell(|c| &c.p),
                        cell(|c| &c.q),
                        cell(|c| &c.r),
                        cell(|c| &c.s),
                        cell(|c| &c.slope_gap_lower_bound),
                        removal.as_ref().map_or(String::new(), |r| fmt_q(&r.delta))
                    )],
                )
            } else {
                to_json(&json!({
                    "x": fmt_q(&x),
                    "stage": stage,
                    "epsilon": fmt_q(&eps),
                    "delta": fmt_q(&delta),
                    "verdict": verdict,
                    "certificate": cert,
                    "removal": removal,
                }))
            };
            Ok((code, out))
        }
        Command::Stilde { schema: a, eps, depth, grid_depth } => {
            let r = stilde_enumerate(&handle(a)?, &parse_q(eps)?, *depth, *grid_depth)?;
            if cli.csv {
                ok(csv(
                    "length,pairs,slopes",
                    r.nodes.iter().map(|n| {
                        let pairs: Vec<String> = n.pairs.iter().map(|(p, q)| format!("{p}:{q}")).collect();
                        format!("{},{},{}", n.pairs.len(), pairs.join(" "), n.slopes.join(" "))
                    }),
                ))
            } else {
                ok(to_json(&r))
            }
        }
        Command::Reduce { stub_file, pairs, ordinal: o, x, budget } => reduce(cli, stub_file, pairs, o, *x, *budget),
        Command::ExportCode { schema: a, budget } => {
            let code = export_simpson_code(&handle(a)?, *budget)?;
            let status = if check_closure(&code).is_ok() { 0 } else { 2 };
            let out = if cli.csv {
                csv("n,a,r,b,s", code.iter().map(|c| c.csv_row()))
            } else {
                to_json(&json!({ "closed": status == 0, "quintuples": code }))
            };
            Ok((status, out))
        }
        Command::Slopes { schema: a, grid_depth, eps } => {
            let f = handle(a)?;
            let tol = parse_q(eps)?;
            let g = grid(*grid_depth)?;
            let mut rows = Vec::new();
            for (i, p) in g.iter().enumerate() {
                for q in &g[i + 1..] {
                    let (s, e) = secant(&f, p, q, &tol)?;
                    rows.push([fmt_q(p), fmt_q(q), fmt_q(&s), fmt_q(&e)]);
                }
            }
            if cli.csv {
                ok(csv("p,q,slope,error", rows.iter().map(|r| r.join(","))))
            } else {
                let v: Vec<Value> =
                    rows.iter().map(|[p, q, s, e]| json!({ "p": p, "q": q, "slope": s, "error": e })).collect();
                ok(to_json(&v))
            }
        }
        Command::Interleave { schema: a, stage, eps, grid_depth } => {
            let r = interleaving_report(&handle(a)?, &grid(*grid_depth)?, *stage, &parse_q(eps)?)?;
            let code = if r.contradictions > 0 { 2 } else { 0 };
            let out = if cli.csv {
                csv(
                    "x,epsilon,verdict,flagged",
                    r.points.iter().flat_map(|p| {
                        p.sensitivities.iter().map(move |s| {
                            format!("{},{},{},{}", fmt_q(&p.x), fmt_q(&s.epsilon), json!(s.verdict).as_str().unwrap_or(""), p.flagged)
                        })
                    }),
                )
            } else {
                to_json(&r)
            };
            Ok((code, out))
        }
        Command::Selftest => {
            let results = selftest::run_all();
            let failed = results.iter().filter(|c| !c.passed).count();
            let out = if cli.csv {
                csv(
                    "id,name,passed,millis,detail",
                    results.iter().map(|c| format!("{},{},{},{},\"{}\"", c.id, c.name, c.passed, c.millis, c.detail)),
                )
            } else {
                let mut t = String::new();
                for c in &results {
                    t.push_str(&format!(
                        "{:>2}  {:<34} {}  {}\n",
                        c.id,
                        c.name,
                        if c.passed { "pass" } else { "FAIL" },
                        c.detail
                    ));
                }
                t.push_str(&format!("{} of {} passed\n", results.len() - failed, results.len()));
                t
            };
            Ok((if failed > 0 { 2 } else { 0 }, out))
        }
    }
}

fn reduce(cli: &Cli, stub_file: &str, pairs: &[String], o: &Option<String>, x: Option<u64>, window: u64) -> Result<(i32, String)> {
    let text = std::fs::read_to_string(stub_file).map_err(|e| Error::Domain(format!("cannot read {stub_file}: {e}")))?;
    let stub = OracleStub::from_json(&text)?;
    let mut input = Vec::new();
    for p in pairs {
        let (a, x) = p
            .rsplit_once(':')
            .ok_or_else(|| Error::Parse(format!("pair {p:?} is not of the form alpha:x")))?;
        let x: u64 = x.trim().parse().map_err(|_| Error::Parse(format!("bad index {x:?} in pair {p:?}")))?;
        input.push((ordinal(a)?, x));
    }
    if input.is_empty() {
        match (o, x) {
            (Some(a), Some(x)) => input.push((ordinal(a)?, x)),
            _ => return Err(Error::Parse("give --pair alpha:x, or --ordinal with --x".into())),
        }
    }
    let inp = ReductionInput::new(input)?;
    let oracle: Arc<dyn WitnessOracle> = Arc::new(stub);
    let (truth, detail) = oracle_truth(&inp, oracle.as_ref())?;
    let pred = predicted_rank(&inp, &truth, &detail)?;
    let rank = reduction_rank(&inp, oracle, window)?;
    let consistent = pred.admits(&rank);
    let out = if cli.csv {
        let p = match &pred {
            crate::reduction::RankPrediction::Exact(r) => format!("={r}"),
            crate::reduction::RankPrediction::AtMost(r) => format!("<={r}"),
        };
        csv("rank,prediction,consistent", [format!("{rank},{p},{consistent}")])
    } else {
        to_json(&json!({
            "pairs": inp.pairs.iter().map(|(a, x)| json!({ "alpha": a.to_string(), "x": x })).collect::<Vec<_>>(),
            "truth": truth,
            "rank": rank.to_string(),
            "prediction": pred,
            "consistent": consistent,
        }))
    };
    Ok((if consistent { 0 } else { 2 }, out))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn go(args: &[&str]) -> (i32, String) {
        run(std::iter::once("kwlab").chain(args.iter().copied()))
    }

    #[test]
    fn rank_example() {
        assert_eq!(go(&["rank", "--schema", "node{ node{} xW }"]), (0, "{\"limsup_rank\":\"2\"}\n".into()));
    }

    #[test]
    fn witness_of_omega_plus_one() {
        let (code, out) = go(&["witness", "--ordinal", "w+1"]);
        assert_eq!(code, 0);
        let v: Value = serde_json::from_str(&out).unwrap();
        let s: TreeSchema = v["schema"].as_str().unwrap().parse().unwrap();
        assert_eq!(s.limsup_rank(), "w+1".parse().unwrap());
    }

    #[test]
    fn parse_errors_exit_one() {
        let (code, out) = go(&["rank", "--schema", "node{ nod{} }"]);
        assert_eq!(code, 1);
        assert!(out.contains("parse error"), "{out}");
        assert_eq!(go(&["eval", "--schema", "node{}", "--x", "1/0"]).0, 1);
        assert_eq!(go(&["frobnicate"]).0, 1);
        assert_eq!(go(&["--help"]).0, 0);
    }

    #[test]
    fn domain_errors_exit_one() {
        assert_eq!(go(&["eval", "--schema", "node{}", "--x", "3/2"]).0, 1);
        assert_eq!(go(&["witness", "--ordinal", "w"]).0, 1);
    }

    #[test]
    fn eval_prints_exact_rationals() {
        let (code, out) = go(&["eval", "--schema", "node{}", "--x", "3/4"]);
        assert_eq!(code, 0);
        let v: Value = serde_json::from_str(&out).unwrap();
        // (1/2) p(1/2) on [1/2, 1], so the secant from 0 is 1/3.
        assert_eq!(v["value"], "1/4");
    }
}
