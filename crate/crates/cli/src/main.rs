//! `betacert`: certify bounds on beta(D), replay sweeps, inspect the lattice oracle.
//!
//! Exit codes: 0 success/certified, 1 malformed input, 2 impossible (or a
//! degenerate bundle, or a rejected certificate), 3 unknown within budget.

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use betacert::engine::{
    implications, verify, Certificate, Claim, Engine, Outcome, Relation, SearchBudget,
};
use betacert::oracle::{self, LineBundleSpec, OracleError};
use betacert::par::Execution;
use betacert::poltype::PolType;
use betacert::rational::{format_rational, parse_rational, Rational};
use betacert::report::{self, claim_text, TheoremName};

const EXIT_IMPOSSIBLE: u8 = 2;
const EXIT_UNKNOWN: u8 = 3;

#[derive(Parser)]
#[command(
    name = "betacert",
    version,
    about = "Certified upper bounds on the basepoint-freeness threshold of polarization types"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args, Clone)]
struct SearchOpts {
    /// Budget overrides, e.g. `k_max=8,M_max=32` (applied on top of BETA_CERTIFY_BUDGET)
    #[arg(long)]
    budget: Option<String>,
    /// Also try the open general A_i bound; such certificates never verify
    #[arg(long)]
    experimental: bool,
}

impl SearchOpts {
    fn engine(&self) -> Result<Engine> {
        let mut b = SearchBudget::from_env()?;
        if let Some(o) = &self.budget {
            b = b.with_overrides(o)?;
        }
        Ok(Engine::new(b).with_experimental(self.experimental))
    }
}

#[derive(Args, Clone, Copy)]
struct ExecOpts {
    /// Run on the calling thread only
    #[arg(long)]
    sequential: bool,
}

impl ExecOpts {
    fn exec(self) -> Execution {
        if self.sequential {
            Execution::Sequential
        } else {
            Execution::default()
        }
    }
}

#[derive(Subcommand)]
enum Cmd {
    /// Certify `beta(D) < t` (or `<= t`) for one type
    Bound {
        /// Type such as [1,2,14]
        #[arg(value_name = "TYPE")]
        ty: String,
        #[arg(long, default_value = "1")]
        target: String,
        #[arg(long, default_value = "lt")]
        relation: String,
        /// Write the certificate here
        #[arg(long)]
        json: Option<PathBuf>,
        #[command(flatten)]
        search: SearchOpts,
    },
    /// Certify every type of length g in a chi range
    Sweep {
        #[arg(long)]
        g: usize,
        #[arg(long, default_value_t = 1)]
        chi_min: u128,
        #[arg(long)]
        chi_max: u128,
        #[arg(long, default_value = "1/2")]
        target: String,
        #[arg(long, default_value = "lt")]
        relation: String,
        /// CSV destination; without it the CSV goes to stdout and the summary to stderr
        #[arg(long)]
        csv: Option<PathBuf>,
        #[command(flatten)]
        search: SearchOpts,
        #[command(flatten)]
        exec: ExecOpts,
    },
    /// Replay thm6.1, prop5.4-1 or prop5.4-3 over all types with d_g <= dmax
    Theorem {
        #[arg(long)]
        name: String,
        #[arg(long)]
        g: usize,
        #[arg(long)]
        dmax: u64,
        /// Restrict further to chi <= this
        #[arg(long)]
        chi_max: Option<u128>,
        #[arg(long)]
        csv: Option<PathBuf>,
        #[command(flatten)]
        search: SearchOpts,
        #[command(flatten)]
        exec: ExecOpts,
    },
    /// Inspect the line bundle with parameters g, k, a, c on the lattice
    Oracle {
        #[arg(long)]
        g: usize,
        /// k_1..k_{g-1}, comma separated
        #[arg(long, allow_hyphen_values = true)]
        k: String,
        /// a_1..a_g, comma separated
        #[arg(long, allow_hyphen_values = true)]
        a: String,
        #[arg(long, allow_hyphen_values = true)]
        c: i64,
        /// Print the Chern form matrix
        #[arg(long)]
        dump_form: bool,
    },
    /// Best certified bound against chi^{-1/g} for prefix ++ [d_g]
    Asymptotic {
        /// d_1..d_{g-1}, comma separated
        #[arg(long)]
        prefix: String,
        /// d_g values, comma separated
        #[arg(long)]
        dg_list: String,
        #[command(flatten)]
        search: SearchOpts,
        #[command(flatten)]
        exec: ExecOpts,
    },
    /// Re-check a certificate file
    Verify { path: PathBuf },
}

fn parse_list<T: std::str::FromStr>(s: &str, what: &str) -> Result<Vec<T>> {
    let inner = s.trim().trim_start_matches('[').trim_end_matches(']');
    if inner.trim().is_empty() {
        return Ok(Vec::new());
    }
    inner
        .split(',')
        .map(|x| {
            x.trim()
                .parse::<T>()
                .map_err(|_| anyhow::anyhow!("bad {what} entry {x:?} in {s:?}"))
        })
        .collect()
}

fn parse_claim(target: &str, relation: &str) -> Result<Claim> {
    let t: Rational = parse_rational(target)?;
    let rel: Relation = relation.parse().map_err(anyhow::Error::msg)?;
    let claim = Claim::new(rel, t);
    if !claim.is_well_formed() {
        bail!("target must lie in (0, 1], got {target}");
    }
    Ok(claim)
}

fn yes(b: bool) -> &'static str {
    if b {
        "yes"
    } else {
        "no"
    }
}

fn cmd_bound(
    ty: &str,
    target: &str,
    relation: &str,
    json: Option<&PathBuf>,
    search: &SearchOpts,
) -> Result<u8> {
    let d: PolType = ty.parse().with_context(|| format!("bad type {ty:?}"))?;
    let claim = parse_claim(target, relation)?;
    let engine = search.engine()?;
    let out = engine.certify(&d, &claim)?;
    println!("type      {d}");
    println!("claim     {}", claim_text(&claim));
    println!("outcome   {}", out.label());
    match &out {
        Outcome::Certified(c) => {
            println!("bound     beta {}", c.bound);
            let params = if c.params.is_empty() {
                String::new()
            } else {
                format!(" {:?}", c.params)
            };
            println!("rule      {}{params}", c.rule_path());
            let i = implications(&c.bound, d.len());
            println!("general member: basepoint-free {}, projectively normal {}, Torelli multiplication surjective {}",
                yes(i.basepoint_free), yes(i.projectively_normal), yes(i.torelli_surjective));
            if verify(c).is_err() {
                println!("note      certificate uses an untrusted rule and does not verify");
            }
            if let Some(path) = json {
                fs::write(path, c.to_json_pretty() + "\n")
                    .with_context(|| format!("writing {}", path.display()))?;
                println!("wrote     {}", path.display());
            }
            Ok(0)
        }
        Outcome::Impossible(why) => {
            println!("reason    {why}");
            Ok(EXIT_IMPOSSIBLE)
        }
        Outcome::Unknown => {
            println!("reason    no certificate within the search budget (not a disproof)");
            Ok(EXIT_UNKNOWN)
        }
    }
}

fn emit_csv(r: &report::SweepReport, csv: Option<&PathBuf>) -> Result<bool> {
    match csv {
        Some(path) => {
            let f =
                fs::File::create(path).with_context(|| format!("creating {}", path.display()))?;
            r.write_csv(f)?;
            Ok(false)
        }
        None => {
            r.write_csv(std::io::stdout().lock())?;
            Ok(true)
        }
    }
}

#[allow(clippy::too_many_arguments)]
fn cmd_sweep(
    g: usize,
    chi_min: u128,
    chi_max: u128,
    target: &str,
    relation: &str,
    csv: Option<&PathBuf>,
    search: &SearchOpts,
    exec: ExecOpts,
) -> Result<u8> {
    let claim = parse_claim(target, relation)?;
    let engine = search.engine()?;
    let r = report::sweep(&engine, g, chi_min, chi_max, &claim, exec.exec())?;
    let to_stdout = emit_csv(&r, csv)?;
    let summary = format!(
        "g={g}, chi in [{chi_min}, {chi_max}], {}: {} types; {}\nuncertified: {}",
        claim_text(&claim),
        r.rows.len(),
        r.counts(),
        r.uncertified()
            .iter()
            .map(ToString::to_string)
            .collect::<Vec<_>>()
            .join(" ")
    );
    if to_stdout {
        eprintln!("{summary}");
    } else {
        println!("{summary}");
    }
    Ok(0)
}

#[allow(clippy::too_many_arguments)]
fn cmd_theorem(
    name: &str,
    g: usize,
    dmax: u64,
    chi_max: Option<u128>,
    csv: Option<&PathBuf>,
    search: &SearchOpts,
    exec: ExecOpts,
) -> Result<u8> {
    let name: TheoremName = name.parse()?;
    let engine = search.engine()?;
    let rep = report::replay_theorem(&engine, name, g, dmax, chi_max, exec.exec())?;
    if let Some(path) = csv {
        emit_csv(&rep.sweep, Some(path))?;
    }
    let names = |v: &[PolType]| {
        if v.is_empty() {
            "none".to_string()
        } else {
            v.iter()
                .map(ToString::to_string)
                .collect::<Vec<_>>()
                .join(" ")
        }
    };
    println!(
        "{name}, g={g}, d_g <= {dmax}: {} ({} types)",
        claim_text(&name.claim(g)),
        rep.sweep.rows.len()
    );
    println!("{}", rep.sweep.counts());
    println!(
        "listed exceptions in range: {}",
        names(&rep.expected_exceptions)
    );
    println!("uncertified:                {}", names(&rep.uncertified));
    println!("failures outside the list:  {}", names(&rep.failures));
    println!(
        "certified listed exceptions: {}",
        names(&rep.certified_exceptions)
    );
    println!(
        "{}",
        if rep.holds() {
            "statement replayed: holds on this range"
        } else {
            "statement NOT replayed on this range"
        }
    );
    Ok(if rep.holds() { 0 } else { EXIT_UNKNOWN })
}

fn cmd_oracle(g: usize, k: &str, a: &str, c: i64, dump_form: bool) -> Result<u8> {
    let k: Vec<u64> = parse_list(k, "k")?;
    let a: Vec<i64> = parse_list(a, "a")?;
    if k.len() + 1 != g || a.len() != g {
        bail!(
            "g={g} needs {} k-values and {g} a-values",
            g.saturating_sub(1)
        );
    }
    let spec = LineBundleSpec::new(k, a, c)?;
    println!("spec          {spec}");
    if dump_form {
        println!("chern form:\n{}", oracle::chern_form(&spec).matrix());
    }
    let chi = oracle::chi_lattice(&spec);
    println!("chi (lattice) {chi}");
    match oracle::chi_formula(&spec) {
        Ok(v) => println!("chi (formula) {v}"),
        Err(e) => println!("chi (formula) n/a: {e}"),
    }
    let ty = match oracle::type_oracle(&spec) {
        Ok(t) => t,
        Err(OracleError::DegenerateBundle) => {
            println!("degenerate: chi = 0");
            return Ok(EXIT_IMPOSSIBLE);
        }
        Err(e) => return Err(e.into()),
    };
    println!("type (lattice) {ty}");
    match oracle::type_formula(&spec) {
        Ok(t) => println!("type (formula) {t}"),
        Err(e) => println!("type (formula) n/a: {e}"),
    }
    println!("ample         {}", yes(oracle::is_ample(&spec)?));
    let flags = oracle::flag_chis(&spec)?;
    println!(
        "flag chis     {}",
        flags
            .chis
            .iter()
            .map(ToString::to_string)
            .collect::<Vec<_>>()
            .join(" ")
    );
    match oracle::flag_bound(&spec) {
        Ok(b) => println!("flag bound    beta {b}"),
        Err(e) => println!("flag bound    n/a: {e}"),
    }
    Ok(0)
}

fn cmd_asymptotic(prefix: &str, dgs: &str, search: &SearchOpts, exec: ExecOpts) -> Result<u8> {
    let prefix: Vec<u64> = parse_list(prefix, "prefix")?;
    let dgs: Vec<u64> = parse_list(dgs, "d_g")?;
    if dgs.is_empty() {
        bail!("empty d_g list");
    }
    let engine = search.engine()?;
    let rows = report::asymptotic_table(&engine, &prefix, &dgs, exec.exec())?;
    println!(
        "{:<28} {:>14} {:>20} {:>8}  rule",
        "type", "upper", "lower", "ratio"
    );
    for r in rows {
        let g = r.ty.len();
        let lower = r
            .exact_lower()
            .map(|q| format_rational(&q))
            .unwrap_or_else(|| format!("{}^(-1/{g})", r.ty.chi()));
        let rule = r
            .outcome
            .certificate()
            .map(|c| c.rule_path())
            .unwrap_or_else(|| r.outcome.label().to_string());
        let upper = format!(
            "{}{}",
            if r.upper.is_strict() { "<" } else { "<=" },
            format_rational(r.upper.value())
        );
        println!(
            "{:<28} {:>14} {:>20} {:>8.4}  {rule}",
            r.ty.to_string(),
            upper,
            lower,
            r.ratio_f64()
        );
    }
    Ok(0)
}

fn cmd_verify(path: &PathBuf) -> Result<u8> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let cert = Certificate::from_json(&text)?;
    match verify(&cert) {
        Ok(()) => {
            println!(
                "valid: {} {} via {}",
                cert.ty,
                claim_text(&cert.claim),
                cert.rule_path()
            );
            Ok(0)
        }
        Err(e) => {
            println!("invalid: {e} [{}]", e.reason.code());
            Ok(EXIT_IMPOSSIBLE)
        }
    }
}

fn run(cli: Cli) -> Result<u8> {
    match cli.cmd {
        Cmd::Bound {
            ty,
            target,
            relation,
            json,
            search,
        } => cmd_bound(&ty, &target, &relation, json.as_ref(), &search),
        Cmd::Sweep {
            g,
            chi_min,
            chi_max,
            target,
            relation,
            csv,
            search,
            exec,
        } => cmd_sweep(
            g,
            chi_min,
            chi_max,
            &target,
            &relation,
            csv.as_ref(),
            &search,
            exec,
        ),
        Cmd::Theorem {
            name,
            g,
            dmax,
            chi_max,
            csv,
            search,
            exec,
        } => cmd_theorem(&name, g, dmax, chi_max, csv.as_ref(), &search, exec),
        Cmd::Oracle {
            g,
            k,
            a,
            c,
            dump_form,
        } => cmd_oracle(g, &k, &a, c, dump_form),
        Cmd::Asymptotic {
            prefix,
            dg_list,
            search,
            exec,
        } => cmd_asymptotic(&prefix, &dg_list, &search, exec),
        Cmd::Verify { path } => cmd_verify(&path),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
