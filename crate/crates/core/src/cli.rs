//! Command-line front end. `run` returns the process exit status:
//! 0 on success, 1 on a computation or verification failure, 2 on usage
//! errors. Failures print one `error kind=... message=...` line to stderr.

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use num_bigint::BigUint;

use crate::approx::{self, ApproxFunction, SeriesKind};
use crate::assembly::{self, PsiFunction};
use crate::block::{self, BChoice, BlockCertificate, BlockConfig, IndexChoice, MassRule, Mode, Thresholds};
use crate::cert::{self, Check, Record};
use crate::error::{Error, Result};
use crate::inhom::{self, GammaInput, InhomBlockCertificate};
use crate::primes::{self, PrimePairTable};
use crate::rat::{self, Rational};

#[derive(Parser, Debug)]
#[command(name = "dslab", version, about = "Exact construction and verification of counterexample blocks")]
#[command(args_override_self = true)]
struct Cli {
    /// key=value file; keys are long flag names, command-line flags win.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Worker threads (results do not depend on this).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// Level index sets I_j or I = I_jmin ∪ … ∪ I_K.
    Primes(PrimesArgs),
    /// Enumerate Y(I) with g_I, goodness ratio, profiles, survivor counts.
    Ysystem(YArgs),
    Block {
        #[command(subcommand)]
        op: BlockOp,
    },
    Inhom {
        #[command(subcommand)]
        op: InhomOp,
    },
    Tower {
        #[command(subcommand)]
        op: TowerOp,
    },
    Sgamma {
        #[command(subcommand)]
        op: SgammaOp,
    },
    Psi {
        #[command(subcommand)]
        op: PsiOp,
    },
    /// Disjoint block sequence with ε_k = 2^-k and its tail certificate.
    Thma {
        #[command(subcommand)]
        op: ThmaOp,
    },
    /// Partial sums Σ ψ(q) (khintchine) or Σ φ(q)ψ(q)/q (km) up to Q.
    Series(SeriesArgs),
    /// Re-check a certificate file and print a table.
    Report(ReportArgs),
}

#[derive(Args, Debug)]
struct PrimesArgs {
    #[arg(long = "j")]
    j: Option<u32>,
    #[arg(long = "K")]
    k: Option<u32>,
    #[arg(long, default_value_t = primes::DEFAULT_J_MIN)]
    jmin: u32,
    #[arg(long, default_value_t = primes::DEFAULT_GAP_COEFF)]
    gap: u64,
}

#[derive(Args, Debug)]
struct YArgs {
    #[arg(long = "I")]
    index: String,
    #[arg(long, default_value_t = primes::DEFAULT_Y_CAP)]
    cap: usize,
    #[arg(long)]
    delta: Option<String>,
    #[arg(long)]
    profile: bool,
    #[arg(long)]
    survivors: bool,
    #[arg(long, default_value_t = primes::DEFAULT_BRUTE_LIMIT)]
    brute_limit: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug, Clone)]
struct BuildFlags {
    #[arg(long = "f")]
    f: String,
    #[arg(long)]
    eps: String,
    #[arg(long = "M", default_value = "1")]
    m: String,
    /// certificate | empirical
    #[arg(long, default_value = "certificate")]
    mode: String,
    /// rigorous | small | auto (small for empirical mode)
    #[arg(long, default_value = "auto")]
    thresholds: String,
    /// Comma list of pair indices, `-` for none, or `auto`.
    #[arg(long = "I", default_value = "auto")]
    index: String,
    #[arg(long)]
    xprime: Option<String>,
    #[arg(long = "B")]
    b_fixed: Option<String>,
    /// smallest | p-1
    #[arg(long, default_value = "smallest")]
    b_choice: String,
    /// `lo,hi`
    #[arg(long)]
    window: Option<String>,
    /// arc_measure | function_sum
    #[arg(long, default_value = "arc_measure")]
    mass_rule: String,
    #[arg(long, default_value_t = primes::DEFAULT_Y_CAP)]
    y_cap: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
#[allow(clippy::large_enum_variant)]
enum BlockOp {
    Build(BuildFlags),
    Verify(CertArgs),
}

#[derive(Args, Debug)]
struct CertArgs {
    #[arg(long)]
    cert: PathBuf,
}

#[derive(Subcommand, Debug)]
#[allow(clippy::large_enum_variant)]
enum InhomOp {
    Build {
        #[command(flatten)]
        flags: BuildFlags,
        #[arg(long = "b")]
        b: String,
        /// Interior samples per window interval to verify right away.
        #[arg(long)]
        samples: Option<u64>,
    },
    Verify {
        #[arg(long)]
        cert: PathBuf,
        /// Comma list of rationals; default is the window sample grid.
        #[arg(long)]
        gamma: Option<String>,
        #[arg(long, default_value_t = 8)]
        samples: u64,
    },
}

#[derive(Subcommand, Debug)]
enum TowerOp {
    Build {
        #[arg(long = "f")]
        f: String,
        #[arg(long, default_value_t = 3)]
        levels: usize,
        #[arg(long = "I", default_value = "1")]
        index: String,
        #[arg(long, default_value_t = inhom::DEFAULT_G_BUDGET)]
        g_budget: u32,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Subcommand, Debug)]
enum SgammaOp {
    Build {
        #[arg(long = "f")]
        f: String,
        #[arg(long)]
        gamma: String,
        #[arg(long = "n", default_value_t = 3)]
        n: usize,
        #[arg(long = "I", default_value = "1")]
        index: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Subcommand, Debug)]
enum PsiOp {
    Build {
        #[arg(long = "f")]
        f: String,
        #[arg(long, default_value_t = 3)]
        j_max: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    Verify {
        #[arg(long)]
        cert: PathBuf,
        /// Comma list of extra N for density.
        #[arg(long)]
        checkpoints: Option<String>,
    },
}

#[derive(Subcommand, Debug)]
enum ThmaOp {
    Build {
        #[arg(long = "f")]
        f: String,
        #[arg(long, default_value_t = 3)]
        k_max: usize,
        #[arg(long, default_value = "certificate")]
        mode: String,
        #[arg(long = "I", default_value = "1")]
        index: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args, Debug)]
struct SeriesArgs {
    /// khintchine | km
    #[arg(long)]
    kind: String,
    #[arg(long = "f")]
    f: String,
    #[arg(long = "Q")]
    q: u64,
}

#[derive(Args, Debug)]
struct ReportArgs {
    #[arg(long)]
    cert: PathBuf,
}

/// Entry point; writes normal output to `out` and error records to `err`.
pub fn run(argv: &[String], out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let argv = match merge_config(argv) {
        Ok(a) => a,
        Err(e) => return report_error(err, &e),
    };
    let cli = match Cli::try_parse_from(&argv) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = write!(out, "{e}");
                return 0;
            }
            let msg = e.to_string();
            let first = msg.lines().next().unwrap_or("usage error");
            let _ = writeln!(err, "error kind=Usage message={first:?}");
            return 2;
        }
    };
    let result = match cli.threads {
        Some(n) => match rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build() {
            Ok(pool) => {
                let mut buf = Vec::new();
                let r = pool.install(|| dispatch(cli.cmd, &mut buf));
                let _ = out.write_all(&buf);
                r
            }
            Err(e) => Err(Error::InvalidArgument(e.to_string())),
        },
        None => dispatch(cli.cmd, out),
    };
    match result {
        Ok(()) => 0,
        Err(e) => report_error(err, &e),
    }
}

fn report_error(err: &mut dyn Write, e: &Error) -> i32 {
    let _ = writeln!(err, "error kind={} message={:?}", e.kind(), e.to_string());
    1
}

/// Splice `--key value` pairs from the config file in right after the
/// subcommand words, so that flags given on the command line override them.
fn merge_config(argv: &[String]) -> Result<Vec<String>> {
    let mut path = None;
    let mut rest = Vec::new();
    let mut it = argv.iter().cloned();
    while let Some(a) = it.next() {
        if a == "--config" {
            path = it.next();
        } else if let Some(p) = a.strip_prefix("--config=") {
            path = Some(p.to_string());
        } else {
            rest.push(a);
        }
    }
    let Some(path) = path else { return Ok(rest) };
    let text = std::fs::read_to_string(&path)?;
    let mut extra = Vec::new();
    for line in text.lines() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| Error::Parse(format!("config line without `=`: {line:?}")))?;
        let (k, v) = (k.trim(), v.trim());
        match v {
            "true" => extra.push(format!("--{k}")),
            "false" => {}
            _ => extra.push(format!("--{k}={v}")),
        }
    }
    let words = rest.iter().skip(1).take_while(|a| !a.starts_with('-')).count();
    let mut merged: Vec<String> = rest[..1 + words].to_vec();
    merged.extend(extra);
    merged.extend(rest[1 + words..].iter().cloned());
    Ok(merged)
}

fn parse_f(s: &str) -> Result<ApproxFunction> {
    ApproxFunction::parse(s)
}

fn parse_uint(s: &str) -> Result<BigUint> {
    cert::parse_biguint(s)
}

fn parse_list<T, F: Fn(&str) -> Result<T>>(s: &str, f: F) -> Result<Vec<T>> {
    s.split(',').filter(|t| !t.trim().is_empty()).map(|t| f(t.trim())).collect()
}

fn emit(out: &mut dyn Write, record: &Record, path: Option<&Path>, summary: &str) -> Result<()> {
    match path {
        Some(p) => {
            cert::write_atomic(p, &record.to_text())?;
            writeln!(out, "{summary}")?;
            writeln!(out, "wrote {}", p.display())?;
        }
        None => write!(out, "{}", record.to_text())?,
    }
    Ok(())
}

fn print_checks(out: &mut dyn Write, checks: &[Check]) -> Result<()> {
    let width = checks.iter().map(|c| c.name.chars().count()).max().unwrap_or(0);
    for c in checks {
        let pad = width - c.name.chars().count();
        writeln!(
            out,
            "{} {}{}  {}",
            if c.ok { "PASS" } else { "FAIL" },
            c.name,
            " ".repeat(pad),
            c.detail
        )?;
    }
    Ok(())
}

fn require_all(checks: &[Check]) -> Result<()> {
    let failed: Vec<&str> = checks.iter().filter(|c| !c.ok).map(|c| c.name.as_str()).collect();
    if failed.is_empty() {
        Ok(())
    } else {
        Err(Error::VerificationFailed(failed.join("; ")))
    }
}

fn block_config(flags: &BuildFlags) -> Result<BlockConfig> {
    let mode: Mode = flags.mode.parse()?;
    let small = match flags.thresholds.as_str() {
        "rigorous" => false,
        "small" => true,
        "auto" => mode == Mode::Empirical,
        t => return Err(Error::Parse(format!("unknown thresholds {t:?}"))),
    };
    let thresholds = if small {
        Thresholds::Small {
            x_prime_min: flags.xprime.as_deref().map(parse_uint).transpose()?,
            b: flags.b_fixed.as_deref().map(parse_uint).transpose()?,
        }
    } else {
        if flags.xprime.is_some() || flags.b_fixed.is_some() {
            return Err(Error::InvalidArgument("--xprime and --B need small thresholds".into()));
        }
        Thresholds::Rigorous
    };
    let index = match flags.index.as_str() {
        "auto" if small => IndexChoice::Explicit(vec![1, 2]),
        "auto" => IndexChoice::FromDelta,
        s => IndexChoice::Explicit(block::parse_index_list(s)?),
    };
    let window = match &flags.window {
        Some(w) => {
            let (lo, hi) = w
                .split_once(',')
                .ok_or_else(|| Error::Parse(format!("window {w:?} is not `lo,hi`")))?;
            (rat::parse(lo)?, rat::parse(hi)?)
        }
        None => (Rational::from_integer(1.into()), Rational::from_integer(2.into())),
    };
    let b_choice = match flags.b_choice.as_str() {
        "smallest" => BChoice::Smallest,
        "p-1" => BChoice::PMinusOne,
        s => return Err(Error::Parse(format!("unknown B choice {s:?}"))),
    };
    let mass_rule: MassRule = flags.mass_rule.parse()?;
    BlockConfig {
        mode,
        thresholds,
        index,
        mass_rule,
        window,
        b_choice,
        y_cap: flags.y_cap,
        ..BlockConfig::default()
    }
    .with_env_caps()
}

fn small_config(index: &str, mode: Mode) -> Result<BlockConfig> {
    BlockConfig::small(block::parse_index_list(index)?, mode).with_env_caps()
}

fn block_summary(c: &BlockCertificate) -> String {
    format!(
        "block |S|={} mass={} overlap_sum={} union={} certified={}",
        c.s_len(),
        rat::fmt(&c.params.mass),
        rat::fmt(&c.overlap_sum),
        c.union_measure.as_ref().map_or("-".into(), rat::fmt),
        c.certified()
    )
}

fn read_record(path: &Path) -> Result<Record> {
    Record::from_text(&std::fs::read_to_string(path)?)
}

fn dispatch(cmd: Cmd, out: &mut dyn Write) -> Result<()> {
    match cmd {
        Cmd::Primes(a) => cmd_primes(a, out),
        Cmd::Ysystem(a) => cmd_ysystem(a, out),
        Cmd::Block { op: BlockOp::Build(flags) } => {
            let cfg = block_config(&flags)?;
            let f = parse_f(&flags.f)?;
            let c = block::build_block(&f, &rat::parse(&flags.eps)?, &parse_uint(&flags.m)?, &cfg)?;
            emit(out, &c.to_record(), flags.out.as_deref(), &block_summary(&c))
        }
        Cmd::Block { op: BlockOp::Verify(a) } => {
            let c = BlockCertificate::from_record(&read_record(&a.cert)?)?;
            let cfg = BlockConfig::default().with_env_caps()?;
            let checks = block::verify_block(&c, cfg.interval_budget)?;
            print_checks(out, &checks)?;
            require_all(&checks)
        }
        Cmd::Inhom { op: InhomOp::Build { flags, b, samples } } => {
            let cfg = block_config(&flags)?;
            let f = parse_f(&flags.f)?;
            let mut c = inhom::build_inhom_block(
                &f,
                &rat::parse(&flags.eps)?,
                &parse_uint(&flags.m)?,
                &parse_uint(&b)?,
                &cfg,
            )?;
            if let Some(n) = samples {
                c.samples = inhom::verify_inhom_block(&c, &c.window.samples(n), cfg.interval_budget)?;
            }
            let summary = format!(
                "inhom window b={} delta={} Σf={} {}",
                c.window.b,
                rat::fmt(&c.window.delta),
                rat::fmt(&c.f_mass),
                block_summary(&c.block)
            );
            emit(out, &c.to_record(), flags.out.as_deref(), &summary)
        }
        Cmd::Inhom { op: InhomOp::Verify { cert, gamma, samples } } => {
            let c = InhomBlockCertificate::from_record(&read_record(&cert)?)?;
            let gammas = match gamma {
                Some(g) => parse_list(&g, rat::parse)?,
                None => c.window.samples(samples),
            };
            let budget = BlockConfig::default().with_env_caps()?.interval_budget;
            let res = inhom::verify_inhom_block(&c, &gammas, budget)?;
            let checks: Vec<Check> = res
                .iter()
                .map(|s| {
                    Check::new(
                        &format!("γ = {}: λ < ε", rat::fmt(&s.gamma)),
                        s.ok,
                        format!("{} vs {}", rat::fmt(&s.measure), rat::fmt(&c.eps)),
                    )
                })
                .collect();
            print_checks(out, &checks)?;
            require_all(&checks)
        }
        Cmd::Tower { op: TowerOp::Build { f, levels, index, g_budget, out: path } } => {
            let cfg = small_config(&index, Mode::Certificate)?;
            let t = inhom::build_tower(&parse_f(&f)?, levels, &cfg, g_budget)?;
            let checks = t.checks();
            let summary = format!(
                "tower levels={} G={:?} all_checks={}",
                t.levels.len(),
                t.levels.iter().map(|l| l.g).collect::<Vec<_>>(),
                cert::all_ok(&checks)
            );
            emit(out, &t.to_record(), path.as_deref(), &summary)
        }
        Cmd::Sgamma { op: SgammaOp::Build { f, gamma, n, index, out: path } } => {
            let cfg = small_config(&index, Mode::Certificate)?;
            let g = GammaInput::parse(&gamma)?;
            let s = inhom::build_s_gamma(&parse_f(&f)?, &g, n, &cfg)?;
            let summary = format!("sgamma levels={} Σf={}", s.levels.len(), rat::fmt(&s.total_f_mass()));
            emit(out, &s.to_record(), path.as_deref(), &summary)
        }
        Cmd::Psi { op: PsiOp::Build { f, j_max, out: path } } => {
            let cfg = assembly::thm_c_default_config().with_env_caps()?;
            let psi = assembly::build_thm_c(&parse_f(&f)?, j_max, &cfg)?;
            let q: Vec<String> = psi.blocks.iter().map(|b| b.q.to_string()).collect();
            emit(out, &psi.to_record(), path.as_deref(), &format!("psi j_max={j_max} Q={}", q.join(",")))
        }
        Cmd::Psi { op: PsiOp::Verify { cert, checkpoints } } => {
            let psi = PsiFunction::from_record(&read_record(&cert)?)?;
            let extra = match checkpoints {
                Some(c) => parse_list(&c, parse_uint)?,
                None => Vec::new(),
            };
            let (report, checks) = assembly::verify_psi(&psi, &psi.f, &extra)?;
            for (n, d) in &report.checkpoints {
                writeln!(out, "density N={n} {}", rat::fmt(d))?;
            }
            print_checks(out, &checks)?;
            require_all(&checks)
        }
        Cmd::Thma { op: ThmaOp::Build { f, k_max, mode, index, out: path } } => {
            let cfg = small_config(&index, mode.parse()?)?;
            let a = assembly::build_thm_a(&parse_f(&f)?, k_max, &cfg)?;
            let summary = format!("thmA k_max={k_max} total_mass={}", rat::fmt(&a.total_mass()));
            emit(out, &a.to_record(), path.as_deref(), &summary)
        }
        Cmd::Series(a) => {
            let kind = match a.kind.as_str() {
                "khintchine" => SeriesKind::Plain,
                "km" => SeriesKind::PhiWeighted,
                k => return Err(Error::InvalidArgument(format!("unknown series kind {k:?}"))),
            };
            let r = approx::function_series(&parse_f(&a.f)?, a.q, kind)?;
            writeln!(out, "{}", rat::fmt(&r.partial_sum))?;
            Ok(())
        }
        Cmd::Report(a) => cmd_report(&a.cert, out),
    }
}

fn cmd_primes(a: PrimesArgs, out: &mut dyn Write) -> Result<()> {
    let (list, top) = match (a.j, a.k) {
        (Some(j), None) => {
            let t = PrimePairTable::for_levels(j);
            (t.build_pairs(j, a.gap)?, t)
        }
        (None, Some(k)) => {
            let t = PrimePairTable::for_levels(k);
            (t.build_index_set(k, a.jmin, a.gap)?, t)
        }
        _ => return Err(Error::InvalidArgument("give exactly one of --j and --K".into())),
    };
    writeln!(out, "I {}", block::join(&list))?;
    for i in &list {
        let (p, q) = top.pair(*i).expect("listed pair exists");
        writeln!(out, "pair {i} {p} {q}")?;
    }
    Ok(())
}

fn cmd_ysystem(a: YArgs, out: &mut dyn Write) -> Result<()> {
    let index = block::parse_index_list(&a.index)?;
    let table = PrimePairTable::for_pairs(index.iter().copied().max().unwrap_or(0));
    let ys = table.enumerate_y(&index, a.cap)?;
    let mut text = ys.to_record();
    if let Some(d) = &a.delta {
        let d = rat::parse(d)?;
        text.push_str(&format!("good_ratio {} {}\n", rat::fmt(&d), rat::fmt(&ys.good_ratio(&d))));
    }
    if a.profile {
        let t = PrimePairTable::for_levels(
            index.iter().filter_map(|&i| table.level_of(i).ok().flatten()).max().unwrap_or(1),
        );
        for p in primes::xj_profile(&t, &ys)? {
            let probs: Vec<String> = p.probabilities().iter().map(rat::fmt).collect();
            text.push_str(&format!(
                "profile level={} pairs={} binomial={} {}\n",
                p.level.map_or("-".into(), |l| l.to_string()),
                p.pairs,
                p.is_binomial(ys.len() as u64),
                probs.join(",")
            ));
        }
    }
    if a.survivors {
        for e in &ys.entries {
            match primes::survivor_count(&ys, &e.y, a.brute_limit) {
                Ok(s) => text.push_str(&format!(
                    "survivors y={} count={} bound={} ok={}\n",
                    s.y,
                    s.count,
                    rat::fmt(&s.bound),
                    s.ok
                )),
                Err(Error::BruteForceLimitExceeded { .. }) => {
                    text.push_str(&format!("survivors y={} skipped\n", e.y));
                }
                Err(e) => return Err(e),
            }
        }
    }
    match &a.out {
        Some(p) => {
            cert::write_atomic(p, &text)?;
            writeln!(out, "wrote {}", p.display())?;
        }
        None => write!(out, "{text}")?,
    }
    Ok(())
}

/// Statement checked by each named block verification.
fn statement(name: &str) -> &'static str {
    match name {
        "progression x ≡ 1 mod BP" => "X = {x ≡ 1 mod BP : x_min ≤ x ≤ x_max}",
        "gcd(x, P) = 1 on X" => "overlap bound hypothesis (x, P(I)) = 1",
        "S above M" => "S ⊂ (M, ∞)",
        "|S| = |X|·|Y|, products distinct" => "unique factorization of S = X·Y",
        "mass recomputed" | "mass in window" => "Σ_{q∈S} mass term ∈ window",
        "overlap sum recomputed" | "overlap sum < ε" => "λ(⋃ A_q) ≤ 2 Σ_x Σ_y g_I(y) f(xy) < ε",
        "union measure recomputed" | "union measure ≤ overlap sum" | "union measure < ε" => {
            "exact λ(⋃_{q∈S} A_q) < ε"
        }
        _ => "",
    }
}

fn cmd_report(path: &Path, out: &mut dyn Write) -> Result<()> {
    let rec = read_record(path)?;
    writeln!(out, "certificate {} ({})", rec.kind, path.display())?;
    for (k, v) in &rec.fields {
        if k == "S" || k == "witness" || k == "sample" || k == "C" {
            continue;
        }
        let v = if v.len() > 100 { format!("{}… ({} chars)", &v[..v.char_indices().nth(96).map_or(v.len(), |x| x.0)], v.len()) } else { v.clone() };
        writeln!(out, "  {k:<16} {v}")?;
    }
    let budget = BlockConfig::default().with_env_caps()?.interval_budget;
    let checks: Vec<Check> = match rec.kind.as_str() {
        "block" => block::verify_block(&BlockCertificate::from_record(&rec)?, budget)?,
        "inhom" => {
            let c = InhomBlockCertificate::from_record(&rec)?;
            let mut checks = block::verify_block(&c.block, budget)?;
            checks.push(Check::new(
                "Σ_{q∈S} f(q) ∈ [1/2, 1]",
                rat::rat(1, 2) <= c.f_mass && c.f_mass <= rat::int(1),
                rat::fmt(&c.f_mass),
            ));
            if let Some(ok) = c.dilation_ok() {
                checks.push(Check::new("λ(⋃ A_q(2bf)) ≤ b·λ(⋃ A_q(2f))", ok, String::new()));
            }
            for s in &c.samples {
                checks.push(Check::new(
                    &format!("γ = {}: λ(⋃ A_q^γ(f)) < ε", rat::fmt(&s.gamma)),
                    s.ok,
                    rat::fmt(&s.measure),
                ));
            }
            checks
        }
        "psi" => assembly::verify_psi(&PsiFunction::from_record(&rec)?, &ApproxFunction::parse(rec.require("f")?)?, &[])?.1,
        _ => Vec::new(),
    };
    if !checks.is_empty() {
        writeln!(out)?;
        writeln!(out, "{:<6} {:<34} {:<46} detail", "result", "check", "statement")?;
        for c in &checks {
            let detail = if c.detail.len() > 80 { format!("{}…", &c.detail[..c.detail.char_indices().nth(78).map_or(c.detail.len(), |x| x.0)]) } else { c.detail.clone() };
            writeln!(
                out,
                "{:<6} {:<34} {:<46} {}",
                if c.ok { "PASS" } else { "FAIL" },
                c.name,
                statement(&c.name),
                detail
            )?;
        }
    }
    Ok(())
}
