mod config;

use std::fmt;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context as _, Result};
use clap::{Parser, Subcommand, ValueEnum};
use serde_json::json;

use stonesep_core::cfg::Grammar;
use stonesep_core::corpus::{builtin_corpus, load_corpus_dir, CorpusEntry};
use stonesep_core::parikh::{member, parikh_image, parikh_image_on, ParikhError, SemilinearSet};
use stonesep_core::pump::{
    cumulative_pump_on, diagonal_pump, pumping_bound_diag, selector, square_pump, PumpCertificate, PumpError,
};
use stonesep_core::regular::{Context, Dfa, Nfa};
use stonesep_core::separation::{
    corpus_audit, icf_verdict, AuditReport, AuditStatus, EngineOutcome, SeparationCertificate, SeparationError,
    TargetLanguage, Verdict,
};
use stonesep_core::stamps::{
    m_closure, morphism_exists, pseudo_ineq_unary, random_family, seeded_rng, syntactic_order_two_sided,
    syntactic_stamp, LanguageFamily, StampError,
};
use stonesep_core::words::{parikh_vector, Alphabet, BlockWord, Vector, Word};

use config::{parse_horizon, Config, CONFIG_ENV};

#[derive(Parser)]
#[command(name = "stonesep", version, about = "Separation certificates for regular and context-free languages")]
struct Cli {
    /// Expansion cap for block words handed to CYK.
    #[arg(long, global = true)]
    cap: Option<usize>,
    /// Largest n accepted by witness evaluation and the pumping engines.
    #[arg(long, global = true)]
    nmax: Option<u32>,
    /// Longest context word x, y in condition checks.
    #[arg(long = "ctx-bound", global = true)]
    ctx_bound: Option<usize>,
    /// Range of n in condition checks, as lo:hi.
    #[arg(long, global = true, value_parser = parse_horizon)]
    horizon: Option<(u32, u32)>,
    /// Directory of *.cfg grammars replacing the built-in audit corpus.
    #[arg(long, global = true)]
    corpus: Option<PathBuf>,
    /// Print reports as JSON.
    #[arg(long, global = true)]
    json: bool,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Config file; defaults to $STONESEP_CONFIG when set.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Clone, Copy, ValueEnum)]
enum Kind {
    Diagonal,
    Cumulative,
    Square,
}

#[derive(Subcommand)]
enum Cmd {
    /// Semilinear Parikh image of a grammar and its pumping bounds.
    Parikh {
        grammar: PathBuf,
        /// Axes of the image; defaults to the grammar's terminals.
        #[arg(long)]
        letters: Option<String>,
    },
    /// Witnessed membership of a vector (or of a block word) in a Parikh image.
    Member {
        grammar: PathBuf,
        /// Comma-separated vector over the axes.
        vector: Option<String>,
        /// Block word such as 'a^3 b c^3'; also checked by CYK under the cap.
        #[arg(long)]
        word: Option<String>,
        #[arg(long)]
        letters: Option<String>,
    },
    /// Run a pumping engine, or re-check a stored certificate.
    Pump {
        grammar: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "cumulative")]
        kind: Kind,
        #[arg(long)]
        n: Option<u32>,
        /// Context u,v,w,x,y for the diagonal and cumulative engines.
        #[arg(long, default_value = ",a,b,c,")]
        context: String,
        /// Letters l1..ld for the square engine; defaults to the terminals.
        #[arg(long)]
        letters: Option<String>,
        #[arg(long)]
        verify: Option<PathBuf>,
    },
    /// Selector set of loop counts for a context.
    Sel { grammar: PathBuf, context: String },
    /// Compare the unary pseudo-inequality with the two-sided syntactic order.
    Synt { automaton: PathBuf, u: String, v: String },
    /// Lattice closure of a family of regular languages.
    Closure {
        automata: Vec<PathBuf>,
        /// Family D to test against the closure of the given family.
        #[arg(long, num_args = 1..)]
        target: Vec<PathBuf>,
        /// Draw this many random family pairs from the seed instead.
        #[arg(long)]
        random: Option<usize>,
    },
    /// Full separation certificate with corpus audit.
    Separate { target: String },
    /// Corpus audit of a target's witness schemas.
    Audit { target: String },
    /// Re-check a pump or separation certificate from its JSON.
    Verify { certificate: PathBuf },
}

/// Failure carrying its exit code.
#[derive(Debug)]
struct Exit(u8, String);

impl fmt::Display for Exit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.1)
    }
}

impl std::error::Error for Exit {}

fn exit(code: u8, msg: impl Into<String>) -> anyhow::Error {
    Exit(code, msg.into()).into()
}

fn exit_code(e: &anyhow::Error) -> u8 {
    if let Some(Exit(c, _)) = e.downcast_ref::<Exit>() {
        return *c;
    }
    let pump = |p: &PumpError| match p {
        PumpError::BelowBound { .. } | PumpError::Parikh(ParikhError::Capacity { .. }) => 2,
        PumpError::TheoremViolation(_) => 3,
        _ => 1,
    };
    if let Some(p) = e.downcast_ref::<PumpError>() {
        return pump(p);
    }
    if let Some(ParikhError::Capacity { .. }) = e.downcast_ref::<ParikhError>() {
        return 2;
    }
    if let Some(s) = e.downcast_ref::<SeparationError>() {
        return match s {
            SeparationError::Pump(p) => pump(p),
            SeparationError::Parikh(ParikhError::Capacity { .. }) | SeparationError::NOutOfRange { .. } => 2,
            SeparationError::Inconsistent(_) => 3,
            _ => 1,
        };
    }
    if let Some(StampError::TheoremViolation(_)) = e.downcast_ref::<StampError>() {
        return 3;
    }
    if let Some(StampError::TooLarge(_)) = e.downcast_ref::<StampError>() {
        return 2;
    }
    1
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn config(cli: &Cli) -> Result<Config> {
    let path = cli.config.clone().or_else(|| std::env::var_os(CONFIG_ENV).map(PathBuf::from));
    let mut c = match path {
        Some(p) => Config::load(&p)?,
        None => Config::default(),
    };
    if let Some(v) = cli.cap {
        c.cap = v;
    }
    if let Some(v) = cli.nmax {
        c.n_max = v;
    }
    if let Some(v) = cli.ctx_bound {
        c.context_bound = v;
    }
    if let Some(v) = cli.horizon {
        c.horizon = v;
    }
    if let Some(v) = &cli.corpus {
        c.corpus = Some(v.clone());
    }
    if let Some(v) = cli.seed {
        c.seed = v;
    }
    c.json |= cli.json;
    c.validate()?;
    Ok(c)
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn load_grammar(path: &Path) -> Result<Grammar> {
    let g = Grammar::parse(&read(path)?).with_context(|| format!("parsing {}", path.display()))?;
    for w in g.warnings() {
        eprintln!("warning: {w}");
    }
    Ok(g)
}

fn load_dfa(path: &Path) -> Result<Dfa> {
    let nfa = Nfa::parse(&read(path)?).with_context(|| format!("parsing {}", path.display()))?;
    Ok(nfa.determinize_minimize())
}

fn letters_of(g: &Grammar, letters: &Option<String>) -> Vec<char> {
    match letters {
        Some(s) => s.chars().filter(|c| !c.is_whitespace()).collect(),
        None => g.terminals().iter().copied().collect(),
    }
}

fn image(g: &Grammar, letters: &Option<String>) -> Result<SemilinearSet> {
    Ok(match letters {
        Some(_) => parikh_image_on(g, &letters_of(g, letters))?,
        None => parikh_image(g)?,
    })
}

fn parse_vector(s: &str) -> Result<Vector> {
    let entries = s
        .split([',', ' '])
        .filter(|t| !t.is_empty())
        .map(|t| t.trim_matches(['(', ')']).parse().with_context(|| format!("bad entry '{t}'")))
        .collect::<Result<Vec<_>>>()?;
    Ok(Vector::new(entries))
}

fn parse_context(s: &str) -> Result<Context> {
    let inner = s.trim().trim_start_matches('(').trim_end_matches(')');
    Context::parse(inner).ok_or_else(|| anyhow!("context must be five comma-separated words u,v,w,x,y"))
}

fn parse_word(s: &str) -> Word {
    match s {
        "eps" | "ε" | "" => Word::empty(),
        _ => Word::from(s),
    }
}

fn print_json(v: &impl serde::Serialize) -> Result<()> {
    let text = serde_json::to_string_pretty(v)?;
    match writeln!(std::io::stdout().lock(), "{text}") {
        Err(e) if e.kind() == std::io::ErrorKind::BrokenPipe => Ok(()),
        r => Ok(r?),
    }
}

/// Serialized name of a unit enum value.
fn tag(v: &impl serde::Serialize) -> String {
    match serde_json::to_value(v) {
        Ok(serde_json::Value::String(s)) => s,
        _ => String::from("?"),
    }
}

fn load_corpus(c: &Config) -> Result<Vec<CorpusEntry>> {
    match &c.corpus {
        Some(dir) => Ok(load_corpus_dir(dir)?),
        None => Ok(builtin_corpus()),
    }
}

fn run(cli: Cli) -> Result<u8> {
    let cfg = config(&cli)?;
    match cli.cmd {
        Cmd::Parikh { grammar, letters } => cmd_parikh(&cfg, &grammar, &letters),
        Cmd::Member { grammar, vector, word, letters } => cmd_member(&cfg, &grammar, vector, word, &letters),
        Cmd::Pump { verify: Some(path), .. } => cmd_verify(&path),
        Cmd::Pump { grammar, kind, n, context, letters, verify: None } => {
            let grammar = grammar.ok_or_else(|| exit(1, "pump needs a grammar file or --verify"))?;
            let n = n.ok_or_else(|| exit(1, "pump needs --n"))?;
            cmd_pump(&cfg, &grammar, kind, n, &context, &letters)
        }
        Cmd::Sel { grammar, context } => cmd_sel(&cfg, &grammar, &context),
        Cmd::Synt { automaton, u, v } => cmd_synt(&cfg, &automaton, &u, &v),
        Cmd::Closure { automata, target, random } => cmd_closure(&cfg, &automata, &target, random),
        Cmd::Separate { target } => cmd_separate(&cfg, &target, true),
        Cmd::Audit { target } => cmd_separate(&cfg, &target, false),
        Cmd::Verify { certificate } => cmd_verify(&certificate),
    }
}

fn cmd_parikh(cfg: &Config, path: &Path, letters: &Option<String>) -> Result<u8> {
    let g = load_grammar(path)?;
    let s = image(&g, letters)?;
    let m = s.max_coordinate().ok();
    let bounds = m.as_ref().map(|m| ((m + 1u8) * (m + 1u8), m + 1u8));
    if cfg.json {
        print_json(&json!({
            "grammar_hash": g.content_hash(),
            "expression": s,
            "expression_hash": s.expression_hash(),
            "m": m.as_ref().map(|m| m.to_string()),
            "diagonal_bound": bounds.as_ref().map(|b| b.0.to_string()),
            "square_bound": bounds.as_ref().map(|b| b.1.to_string()),
        }))?;
        return Ok(0);
    }
    println!("axes: {}", s.axes.join(" "));
    println!("expression: {s}");
    match (m, bounds) {
        (Some(m), Some((d, q))) => {
            println!("components: {}", s.components.len());
            println!("m = {m}");
            println!("diagonal bound (m+1)^2 = {d}");
            println!("square bound m+1 = {q}");
        }
        _ => println!("empty set: no pumping bound (expression has no component)"),
    }
    Ok(0)
}

fn cmd_member(
    cfg: &Config,
    path: &Path,
    vector: Option<String>,
    word: Option<String>,
    letters: &Option<String>,
) -> Result<u8> {
    let g = load_grammar(path)?;
    let s = image(&g, letters)?;
    let block: Option<BlockWord> = word.as_deref().map(str::parse).transpose()?;
    let v = match (&vector, &block) {
        (Some(v), None) => parse_vector(v)?,
        (None, Some(w)) => {
            let axes = Alphabet::new(s.axes.iter().flat_map(|a| a.chars()))?;
            parikh_vector(w, &axes)?
        }
        _ => bail!("give exactly one of VECTOR or --word"),
    };
    let dec = member(&s, &v)?;
    let cyk = match &block {
        Some(w) => match w.expand(cfg.cap) {
            Ok(w) => Some(g.to_cnf().accepts(&w)),
            Err(e) => {
                eprintln!("note: CYK skipped: {e}");
                None
            }
        },
        None => None,
    };
    if cfg.json {
        print_json(&json!({ "vector": v, "member": dec.is_some(), "decomposition": dec, "cyk": cyk }))?;
    } else {
        match &dec {
            Some(d) => {
                let coeffs: Vec<String> = d.coefficients.iter().map(|c| c.to_string()).collect();
                println!("{v} is in the image: component {} with coefficients ({})", d.component, coeffs.join(", "));
            }
            None => println!("{v} is not in the image"),
        }
        if let Some(c) = cyk {
            println!("CYK on the word: {}", if c { "accepted" } else { "rejected" });
        }
    }
    Ok(0)
}

fn check_n(cfg: &Config, n: u32) -> Result<()> {
    if n == 0 || n > cfg.n_max {
        return Err(exit(2, format!("n = {n} outside 1..={}", cfg.n_max)));
    }
    Ok(())
}

fn cmd_pump(cfg: &Config, path: &Path, kind: Kind, n: u32, context: &str, letters: &Option<String>) -> Result<u8> {
    check_n(cfg, n)?;
    let g = load_grammar(path)?;
    let cert: PumpCertificate = match kind {
        Kind::Diagonal | Kind::Cumulative => {
            let ctx = parse_context(context)?;
            let sel = selector(&g, &ctx)?;
            if let Kind::Diagonal = kind {
                let mut c = diagonal_pump(&sel.set, n)?;
                c.grammar_hash = Some(sel.grammar_hash.clone());
                c.context = Some(ctx);
                c
            } else {
                cumulative_pump_on(&sel, n)?
            }
        }
        Kind::Square => square_pump(&g, &letters_of(&g, letters), n)?,
    };
    cert.verify().map_err(|e| exit(3, format!("emitted certificate fails its own check: {e}")))?;
    print_json(&cert)?;
    Ok(0)
}

fn cmd_sel(cfg: &Config, path: &Path, context: &str) -> Result<u8> {
    let g = load_grammar(path)?;
    let ctx = parse_context(context)?;
    let sel = selector(&g, &ctx)?;
    let n0 = pumping_bound_diag(&sel.set).ok();
    if cfg.json {
        print_json(&json!({ "selector": sel, "n0": n0.map(|b| b.to_string()) }))?;
    } else {
        println!("context: {ctx}");
        println!("selector: {}", sel.set);
        match n0 {
            Some(b) => println!("n0 = (m+1)^2 = {b}"),
            None => println!("empty selector: no bound"),
        }
    }
    Ok(0)
}

fn cmd_synt(cfg: &Config, path: &Path, u: &str, v: &str) -> Result<u8> {
    let d = load_dfa(path)?;
    let (u, v) = (parse_word(u), parse_word(v));
    let unary = pseudo_ineq_unary(&d, &u, &v)?;
    let two_sided = syntactic_order_two_sided(&d, &u, &v)?;
    let stamp = syntactic_stamp(&d);
    if cfg.json {
        print_json(&json!({
            "u": u.to_string(), "v": v.to_string(),
            "pseudo_ineq_unary": unary, "two_sided_order": two_sided,
            "stamp": stamp.to_json(),
        }))?;
    } else {
        println!("minimal automaton: {} states", stamp.size());
        println!("unary pseudo-inequality {u} <= {v}: {unary}");
        println!("two-sided syntactic order {u} <= {v}: {two_sided}");
    }
    if unary != two_sided {
        return Err(exit(3, "the two order computations disagree"));
    }
    Ok(0)
}

fn family(paths: &[PathBuf]) -> Result<LanguageFamily> {
    let dfas = paths.iter().map(|p| load_dfa(p)).collect::<Result<Vec<_>>>()?;
    let alphabet = dfas.first().map(|d| d.alphabet().clone()).ok_or_else(|| anyhow!("no automata given"))?;
    Ok(LanguageFamily::new(alphabet, dfas)?)
}

fn cmd_closure(cfg: &Config, automata: &[PathBuf], target: &[PathBuf], random: Option<usize>) -> Result<u8> {
    if let Some(count) = random {
        let mut rng = seeded_rng(cfg.seed);
        let ab = Alphabet::new("ab".chars())?;
        let mut rows = Vec::new();
        for i in 0..count {
            let c = random_family(&mut rng, &ab, 2, 4);
            let d = random_family(&mut rng, &ab, 2, 4);
            let r = morphism_exists(&c, &d)?;
            if !cfg.json {
                println!("pair {i}: |C| = {}, |D| = {}, morphism: {}", c.len(), d.len(), r.exists);
            }
            rows.push(json!({ "pair": i, "exists": r.exists, "missing": r.missing }));
        }
        if cfg.json {
            print_json(&rows)?;
        } else {
            println!("{count} pairs, both routes agree on every pair");
        }
        return Ok(0);
    }
    let c = family(automata)?;
    let closure = m_closure(&c)?;
    let report = if target.is_empty() { None } else { Some(morphism_exists(&c, &family(target)?)?) };
    if cfg.json {
        let members: Vec<_> = closure.members().iter().map(|d| d.to_json()).collect();
        print_json(&json!({ "closure_size": closure.len(), "closure": members, "morphism": report }))?;
    } else {
        println!("closure: {} languages", closure.len());
        for (i, d) in closure.members().iter().enumerate() {
            println!("-- member {i}\n{}", d.to_text().trim_end());
        }
        if let Some(r) = report {
            println!("stamp morphism onto the target family: {}", r.exists);
            if !r.missing.is_empty() {
                println!("target members outside the closure: {:?}", r.missing);
            }
        }
    }
    Ok(0)
}

fn audit_text(a: &AuditReport) {
    println!(
        "corpus audit: {} (contexts up to length {}, n in {}..={}, {} pump certificates)",
        tag(&a.status), a.context_bound, a.horizon.0, a.horizon.1, a.pump_certificates
    );
    for g in &a.grammars {
        let c = &g.condition;
        let engine: Vec<String> = g
            .engine
            .iter()
            .map(|r| {
                let what = match &r.outcome {
                    EngineOutcome::Certificate { .. } => "certificate",
                    EngineOutcome::PremiseAbsent { .. } => "premise absent",
                    EngineOutcome::EmptyExpression => "empty expression",
                    EngineOutcome::Capacity { .. } => "capacity",
                    EngineOutcome::Failed { .. } => "FAILED",
                };
                match r.n {
                    Some(n) => format!("n={n}: {what}"),
                    None => what.to_string(),
                }
            })
            .collect();
        println!(
            "  {:<14} {:<8} condition {}, {} below bound, {} undecided; engine {}",
            g.name,
            tag(&g.status),
            tag(&c.status),
            c.below_bound.len(),
            c.undecided.len(),
            engine.join(", ")
        );
        for v in &c.violations {
            println!("    violation at {v}");
        }
    }
}

fn cmd_separate(cfg: &Config, target: &str, full: bool) -> Result<u8> {
    let target: TargetLanguage = target.parse().map_err(|e: SeparationError| exit(1, e.to_string()))?;
    let corpus = load_corpus(cfg)?;
    let cert = icf_verdict(target)?;
    let audit = corpus_audit(&corpus, &cert, cfg.context_bound, cfg.horizon, cfg.n_max)?;
    let code = match audit.status {
        AuditStatus::Pass => 0,
        AuditStatus::Failed => 1,
        AuditStatus::Partial => 2,
    };
    if !full {
        if cfg.json {
            print_json(&audit)?;
        } else {
            audit_text(&audit);
        }
        return Ok(code);
    }
    let cert = cert.with_audit(audit);
    cert.verify().map_err(|e| exit(3, format!("emitted certificate fails its own check: {e}")))?;
    print_json(&cert)?;
    eprintln!(
        "{target} {}: {} ({}; {} pump certificates)",
        cert.target_language,
        tag(&cert.verdict),
        cert.theorem_name,
        cert.audit.as_ref().map_or(0, |a| a.pump_certificates)
    );
    Ok(match cert.verdict {
        Verdict::Pass => 0,
        Verdict::Fail => 1,
        Verdict::Partial => 2,
    })
}

fn cmd_verify(path: &Path) -> Result<u8> {
    let text = read(path)?;
    let value: serde_json::Value = serde_json::from_str(&text).context("certificate is not JSON")?;
    let outcome = if value.get("target").is_some() {
        let cert: SeparationCertificate = serde_json::from_value(value).context("not a separation certificate")?;
        cert.verify().map(|_| format!("separation certificate for {} ({})", cert.target, tag(&cert.verdict)))
    } else {
        let cert: PumpCertificate = serde_json::from_value(value).context("not a pump certificate")?;
        cert.verify().map(|_| format!("{} pump certificate at n = {}", tag(&cert.kind), cert.n))
    };
    match outcome {
        Ok(what) => {
            println!("OK: {what}");
            Ok(0)
        }
        Err(e) => {
            println!("FAILED: {e}");
            Ok(1)
        }
    }
}

