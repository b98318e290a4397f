use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use num_traits::ToPrimitive;
use serde::de::DeserializeOwned;
use serde_json::{json, Value};

use torchar::characterizer::{characterize, verify_certificates, CharacterizeOptions, CoveringCertificate, Tower};
use torchar::classic::{cyclic_cf_charset, factorial_charset, factorial_expand, prufer_charset, witness_scan};
use torchar::fsigma::{check_condition_c, partition_b, refutation_witness, ChainSpec, ConditionC, RefuteBudget};
use torchar::lattice::{closure, snf, IntMatrix};
use torchar::quasiconvex::{quasi_hull_with, HullLimits};
use torchar::torus::num::{fmt_rational, parse_int, parse_rational};
use torchar::verifier::{monte_carlo_measure, sublevel_measures, tail_profile_with, ProfileOptions, Verdict};
use torchar::{par, CharSet, CircleValue, Error, Precision, TorusPoint};

#[derive(Parser)]
#[command(name = "torchar", version, about = "Characterizing sets for countable subgroups of finite tori")]
struct Cli {
    #[command(flatten)]
    run: RunConfig,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone, Debug)]
struct RunConfig {
    /// Cap on interval precision, in bits.
    #[arg(long, global = true, default_value_t = 1 << 14)]
    precision_cap: u32,
    /// Seed for sampling.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Run on one thread.
    #[arg(long, global = true)]
    sequential: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Build a characterizing set and covering certificates for a tower.
    Characterize {
        /// Tower JSON file.
        #[arg(long, conflicts_with_all = ["prufer", "generators"])]
        tower: Option<PathBuf>,
        #[arg(long)]
        prufer: Option<u64>,
        /// Expected dimension; a mismatch with the tower is an error.
        #[arg(long)]
        dim: Option<usize>,
        /// Generators, separated by ';'.
        #[arg(long, value_delimiter = ';')]
        generators: Vec<String>,
        #[arg(long, default_value_t = 8)]
        levels: usize,
        /// Where to write the character set.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Where to write the certificates.
        #[arg(long)]
        certs: Option<PathBuf>,
        #[arg(long, default_value_t = 512)]
        max_chars: usize,
    },
    /// m-quasi-convex hull of a finite set.
    Qhull {
        #[arg(long = "E", value_delimiter = ';', num_args = 1.., required = true)]
        e: Vec<String>,
        #[arg(long, default_value_t = 0)]
        m: u32,
    },
    /// Tail profile of a point against a character set.
    Verify {
        #[arg(long = "B")]
        b: String,
        #[arg(long)]
        x: String,
        #[arg(long = "N")]
        n: Option<usize>,
        #[arg(long)]
        csv: Option<PathBuf>,
        /// Witnesses needed for a witness verdict.
        #[arg(long, default_value_t = 3)]
        witnesses: usize,
    },
    /// Exact measure of the delta-sublevel set of a prefix.
    Measure {
        #[arg(long = "B")]
        b: String,
        #[arg(long)]
        delta: String,
        #[arg(long)]
        levels: Option<usize>,
        /// Also estimate by sampling.
        #[arg(long)]
        samples: Option<u64>,
    },
    /// Annihilator of a finite set of rational points.
    Perp {
        #[arg(long, value_delimiter = ';', num_args = 1.., required = true)]
        gens: Vec<String>,
    },
    /// Smith normal form of an integer matrix given as JSON rows.
    Snf {
        #[arg(long)]
        matrix: String,
    },
    /// Point escaping every prefix of B along a chain with infinite indices.
    Refute {
        #[arg(long)]
        chain: String,
        #[arg(long = "B")]
        b: Option<String>,
        #[arg(long, default_value_t = 8)]
        levels: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Factorial expansion and witness pairs.
    Expand {
        #[arg(long)]
        x: String,
        #[arg(long, default_value_t = 20)]
        depth: usize,
    },
    /// Finite-index test for a chain, optionally splitting B along it.
    CheckChain {
        #[arg(long)]
        chain: String,
        #[arg(long = "B")]
        b: Option<String>,
    },
    /// Re-check covering certificates.
    VerifyCert {
        #[arg(long)]
        certs: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = if cli.run.sequential { par::sequential(|| run(&cli)) } else { run(&cli) };
    match result {
        Ok(v) => {
            let mut stdout = std::io::stdout().lock();
            let _ = writeln!(stdout, "{}", serde_json::to_string_pretty(&v).expect("serializable"));
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_exhaustion() {
                ExitCode::from(2)
            } else {
                ExitCode::from(1)
            }
        }
    }
}

fn precision(run: &RunConfig) -> Precision {
    Precision { cap_bits: run.precision_cap, ..Precision::default() }
}

fn run(cli: &Cli) -> torchar::Result<Value> {
    let prec = precision(&cli.run);
    match &cli.command {
        Command::Characterize { tower, prufer, dim, generators, levels, out, certs, max_chars } => {
            let tower = match (tower, prufer) {
                (Some(path), _) => read_json::<Tower>(path)?,
                (None, Some(p)) => Tower::prufer(*p)?,
                (None, None) if !generators.is_empty() => {
                    let gens = points(generators)?;
                    Tower::words(gens[0].dim(), gens)?
                }
                _ => return Err(Error::InvalidInput("give --tower, --prufer or --generators".into())),
            };
            if let Some(d) = dim.filter(|d| *d != tower.dim()) {
                return Err(Error::InvalidInput(format!("--dim {d} but the tower lives in T^{}", tower.dim())));
            }
            let mut opts = CharacterizeOptions { levels: *levels, precision: prec, ..Default::default() };
            opts.covering.max_chars = *max_chars;
            let result = match characterize(&tower, &opts) {
                Ok(r) => r,
                Err(e) if e.is_exhaustion() => {
                    if let Some(path) = out {
                        write_json(path, &json!({"partial": true, "error": e.to_string()}))?;
                    }
                    return Err(e);
                }
                Err(e) => return Err(e),
            };
            if let Some(path) = out {
                write_json(path, &result.charset)?;
            }
            if let Some(path) = certs {
                write_json(path, &result.certificates)?;
            }
            Ok(json!({
                "kind": result.kind,
                "closure": result.closure.to_string(),
                "levels": result.charset.num_levels(),
                "sizes": result.charset.levels().iter().map(Vec::len).collect::<Vec<_>>(),
                "eps": result.eps.iter().map(fmt_rational).collect::<Vec<_>>(),
                "complete": result.complete,
                "charset": result.charset,
            }))
        }
        Command::Qhull { e, m } => {
            let pts = points(e)?;
            let hull = quasi_hull_with(&pts, *m, &HullLimits::default())?;
            Ok(json!({"hull": hull.hull, "complete": hull.complete, "exponent": hull.exponent.to_string()}))
        }
        Command::Verify { b, x, n, csv, witnesses } => {
            let set = charset(b)?;
            let x: TorusPoint = x.parse()?;
            let levels = n.unwrap_or(set.num_levels());
            let opts = ProfileOptions { witnesses: *witnesses, precision: prec };
            let profile = tail_profile_with(&x, &set, levels, &opts)?;
            if let Some(path) = csv {
                write_text(path, &profile.to_csv())?;
            }
            let lost = profile.entries.iter().filter(|e| e.value.is_none()).count();
            Ok(json!({
                "x": profile.x,
                "levels": profile.levels,
                "verdict": profile.verdict,
                "small_tail_start": profile.small_tail_start(),
                "precision_exhausted_entries": lost,
                "rechecked": matches!(profile.verdict, Verdict::WitnessFound(_)) && profile.recheck_witnesses(&prec)?,
            }))
        }
        Command::Measure { b, delta, levels, samples } => {
            let set = charset(b)?;
            let delta = parse_rational(delta)?;
            let levels = levels.unwrap_or(set.num_levels());
            let reports = sublevel_measures(&set, levels, &delta)?;
            let last = reports.last().map(|r| fmt_rational(&r.measure)).unwrap_or_else(|| "1".into());
            let mut out = json!({
                "measure": last,
                "delta": fmt_rational(&delta),
                "prefixes": reports.iter().map(|r| json!({
                    "levels": r.levels,
                    "measure": fmt_rational(&r.measure),
                    "arcs": r.arcs.spans().len(),
                })).collect::<Vec<_>>(),
            });
            if let Some(s) = samples {
                let d = delta.to_f64().unwrap_or(0.0);
                out["monte_carlo"] = serde_json::to_value(monte_carlo_measure(&set, levels, d, *s, cli.run.seed)?)
                    .expect("serializable");
            }
            Ok(out)
        }
        Command::Perp { gens } => {
            let pts = points(gens)?;
            let group = closure(pts[0].dim(), &pts, None)?;
            Ok(json!({
                "annihilator": group.annihilator().basis(),
                "closure": group.to_string(),
                "invariant_factors": group.invariant_factors().iter().map(ToString::to_string).collect::<Vec<_>>(),
                "torus_rank": group.torus_rank(),
            }))
        }
        Command::Snf { matrix } => {
            let text = if Path::new(matrix).exists() { read_text(Path::new(matrix))? } else { matrix.clone() };
            let rows: Vec<Vec<Value>> = parse_json(&text, "matrix")?;
            let cols = rows.first().map_or(0, Vec::len);
            let rows = rows
                .iter()
                .map(|r| r.iter().map(|v| parse_int(v.as_str().map_or(&v.to_string(), |s| s))).collect())
                .collect::<torchar::Result<Vec<Vec<_>>>>()?;
            let s = snf(&IntMatrix::from_rows(&rows, cols)?);
            Ok(json!({
                "diagonal": s.diagonal().iter().map(ToString::to_string).collect::<Vec<_>>(),
                "U": s.u, "D": s.d, "V": s.v,
            }))
        }
        Command::Refute { chain, b, levels, out } => {
            let chain = chain_spec(chain)?;
            let set = match b {
                Some(b) => charset(b)?,
                None => CharSet::empty(chain.dim()),
            };
            let r = refutation_witness(&chain, &set, *levels, &RefuteBudget::default())?;
            let value = json!({
                "x": r.x,
                "ys": r.ys,
                "distance": r.distance.iter().map(|d| json!({
                    "n": d.n,
                    "d(y_n,F_n)": fmt_rational(&d.y_dist),
                    "d(x_n,F_n)": fmt_rational(&d.x_dist),
                    "d(y_n+1,0)": d.next_norm.as_ref().map(fmt_rational),
                })).collect::<Vec<_>>(),
                "decay": r.decay.iter().map(|d| json!({
                    "n": d.n, "phi": d.phi, "value": fmt_rational(&d.value), "bound": fmt_rational(&d.bound),
                })).collect::<Vec<_>>(),
            });
            if let Some(path) = out {
                write_json(path, &value)?;
            }
            Ok(value)
        }
        Command::Expand { x, depth } => {
            let x: CircleValue = x.parse()?;
            let digits = factorial_expand(&x, *depth)?;
            let witnesses = witness_scan(&x, *depth as u64, &prec)?;
            Ok(json!({"digits": digits, "witnesses": witnesses}))
        }
        Command::CheckChain { chain, b } => {
            let chain = chain_spec(chain)?;
            let big = |v: &[Option<num_bigint::BigInt>]| {
                v.iter().map(|i| i.as_ref().map_or("inf".to_string(), ToString::to_string)).collect::<Vec<_>>()
            };
            let mut out = match check_condition_c(&chain)? {
                ConditionC::Holds { m, indices } => json!({"holds": true, "m": m, "indices": big(&indices)}),
                ConditionC::Refused { at, reason, indices } => {
                    json!({"holds": false, "at": at, "reason": reason, "indices": big(&indices)})
                }
            };
            if let Some(b) = b {
                let p = partition_b(&charset(b)?, &chain)?;
                out["partition"] = json!({
                    "levels": p.levels,
                    "outside": p.outside,
                    "counters": p.counters,
                    "growing": p.growing,
                });
            }
            Ok(out)
        }
        Command::VerifyCert { certs } => {
            let certs: Vec<CoveringCertificate> = read_json(certs)?;
            let checks = verify_certificates(&certs)?;
            Ok(json!({"verified": checks.len(), "levels": checks}))
        }
    }
}

fn points(items: &[String]) -> torchar::Result<Vec<TorusPoint>> {
    let pts = items.iter().filter(|s| !s.trim().is_empty()).map(|s| s.trim().parse()).collect::<torchar::Result<Vec<TorusPoint>>>()?;
    if pts.is_empty() {
        return Err(Error::InvalidInput("no points given".into()));
    }
    Ok(pts)
}

/// `factorial:N`, `prufer:P:N`, `cf:ALPHA:K`, or a JSON file.
fn charset(spec: &str) -> torchar::Result<CharSet> {
    let parts: Vec<&str> = spec.splitn(3, ':').collect();
    let num = |s: &str| s.parse::<u64>().map_err(|_| Error::InvalidInput(format!("bad number {s:?} in {spec:?}")));
    match parts.as_slice() {
        ["factorial", n] => factorial_charset(num(n)?),
        ["prufer", p, n] => prufer_charset(num(p)?, num(n)?),
        ["cf", rest @ ..] => {
            let joined = rest.join(":");
            let (alpha, k) = joined
                .rsplit_once(':')
                .ok_or_else(|| Error::InvalidInput(format!("expected cf:ALPHA:K, got {spec:?}")))?;
            cyclic_cf_charset(&alpha.parse()?, num(k)? as usize)
        }
        _ => read_json(Path::new(spec)),
    }
}

/// `coordinate:L` or a JSON file.
fn chain_spec(spec: &str) -> torchar::Result<ChainSpec> {
    match spec.strip_prefix("coordinate:") {
        Some(l) => Ok(ChainSpec::coordinate(
            l.parse().map_err(|_| Error::InvalidInput(format!("bad length in {spec:?}")))?,
        )),
        None => read_json(Path::new(spec)),
    }
}

fn read_text(path: &Path) -> torchar::Result<String> {
    fs::read_to_string(path).map_err(|e| Error::InvalidInput(format!("{}: {e}", path.display())))
}

fn write_text(path: &Path, text: &str) -> torchar::Result<()> {
    fs::write(path, text).map_err(|e| Error::InvalidInput(format!("{}: {e}", path.display())))
}

fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> torchar::Result<()> {
    write_text(path, &(serde_json::to_string_pretty(value).expect("serializable") + "\n"))
}

fn read_json<T: DeserializeOwned>(path: &Path) -> torchar::Result<T> {
    parse_json(&read_text(path)?, &path.display().to_string())
}

/// Parses JSON, naming the offending field on failure.
fn parse_json<T: DeserializeOwned>(text: &str, source: &str) -> torchar::Result<T> {
    let de = &mut serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        Error::Parse(format!("{source}: at {path}: {}", e.into_inner()))
    })
}
