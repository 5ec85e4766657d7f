//! The `spki` command line, as a function from argv and stdin to an exit
//! status and two output buffers so tests can drive it in-process.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::fs;

use clap::{Args, Parser, Subcommand};

use spki_core::codec::{
    cert_digest, decode_action, encode_certificate, encode_tuple, parse_bundle, parse_certificate, parse_formula,
    parse_tuple, run_sexpr,
};
use spki_core::engine::{
    crl_conflict, default_bound, derivable_from_certs, result_certificates, tuples_with_provenance, ClosureConfig,
    ConcreteDecider, RuleSet,
};
use spki_core::engine::{auth_query, name_query};
use spki_core::semantics::{build_completeness_witness, entails_closed_extended, SemanticsError, Universe, Verdict};
use spki_core::sexpr::parse_sexpr;
use spki_core::{Action, Certificate, Key, LocalName, Tuple};

pub const OK: i32 = 0;
pub const NO: i32 = 1;
pub const BAD_INPUT: i32 = 2;

#[derive(Parser, Debug)]
#[command(name = "spki", about = "SPKI/SDSI certificate reduction and closed-semantics checks", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct Inputs {
    /// Certificate bundles; `-` reads stdin.
    #[arg(value_name = "FILE")]
    files: Vec<String>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Validate certificates and print their digests.
    Parse(Inputs),
    /// Re-print certificates in canonical form.
    Canon(Inputs),
    /// Check that no two CRLs of one issuer overlap.
    CrlCheck(Inputs),
    /// Print the maximal tuples of the closure.
    Reduce {
        #[arg(long, default_value = "rs0")]
        rules: String,
        /// Subject leaf bound; defaults to the leaf count of the inputs.
        #[arg(long)]
        bound: Option<usize>,
        #[arg(long)]
        emit_3tuples: bool,
        #[command(flatten)]
        inputs: Inputs,
    },
    /// Decide a concrete naming or authorization query.
    Decide {
        #[arg(long)]
        issuer: String,
        #[arg(long)]
        subject: String,
        #[arg(long, conflicts_with = "name", required_unless_present = "name")]
        action: Option<String>,
        #[arg(long)]
        name: Option<String>,
        #[arg(long, requires = "action")]
        delegate: bool,
        #[arg(long)]
        time: u64,
        #[command(flatten)]
        inputs: Inputs,
    },
    /// Keys concretely bound to a local name at a time.
    Resolve {
        #[arg(long)]
        issuer: String,
        #[arg(long)]
        name: String,
        #[arg(long)]
        time: u64,
        /// Candidate keys; defaults to the keys of the inputs.
        #[arg(long, num_args = 1..)]
        keys: Vec<String>,
        #[command(flatten)]
        inputs: Inputs,
    },
    /// Whether a tuple is derivable, with its derivation.
    Prove {
        #[arg(long)]
        target: String,
        #[arg(long, default_value = "rs1")]
        rules: String,
        #[arg(long)]
        bound: Option<usize>,
        #[command(flatten)]
        inputs: Inputs,
    },
    /// Whether the instance entails a formula over a finite universe.
    Oracle {
        #[arg(long)]
        formula: String,
        /// Extra keys beyond those of the inputs and formula.
        #[arg(long, num_args = 1..)]
        keys: Vec<String>,
        #[arg(long, num_args = 1..)]
        names: Vec<String>,
        #[arg(long, num_args = 1..)]
        actions: Vec<String>,
        /// How many extra certificates a refuting run may issue.
        #[arg(long, default_value_t = 1)]
        extend: usize,
        #[command(flatten)]
        inputs: Inputs,
    },
    /// A run issuing the inputs on which the target certificate fails.
    Witness {
        #[arg(long)]
        target: String,
        /// Fresh keys for the witness; defaults to k-w0 … k-w63.
        #[arg(long, num_args = 1..)]
        key_supply: Vec<String>,
        #[command(flatten)]
        inputs: Inputs,
    },
}

impl Command {
    fn inputs(&self) -> &Inputs {
        match self {
            Command::Parse(i) | Command::Canon(i) | Command::CrlCheck(i) => i,
            Command::Reduce { inputs, .. }
            | Command::Decide { inputs, .. }
            | Command::Resolve { inputs, .. }
            | Command::Prove { inputs, .. }
            | Command::Oracle { inputs, .. }
            | Command::Witness { inputs, .. } => inputs,
        }
    }
}

/// Whether `argv` will read stdin: no input files, a `-` file, or an
/// `@-` argument. Lets the binary avoid blocking on an idle stdin.
pub fn wants_stdin<S: AsRef<str>>(argv: &[S]) -> bool {
    let argv: Vec<&str> = argv.iter().map(AsRef::as_ref).collect();
    if argv.contains(&"@-") {
        return true;
    }
    match Cli::try_parse_from(&argv) {
        Ok(cli) => {
            let files = &cli.command.inputs().files;
            files.is_empty() || files.iter().any(|f| f == "-")
        }
        Err(_) => false,
    }
}

struct Out {
    stdout: String,
    stderr: String,
}

type Res = Result<i32, String>;

pub fn run_cli<S: AsRef<str>>(argv: &[S], stdin: &[u8]) -> (i32, Vec<u8>, Vec<u8>) {
    let argv: Vec<&str> = argv.iter().map(AsRef::as_ref).collect();
    let mut out = Out { stdout: String::new(), stderr: String::new() };
    let status = match Cli::try_parse_from(&argv) {
        Ok(cli) => {
            let ctx = Ctx { stdin };
            match ctx.dispatch(cli.command, &mut out) {
                Ok(s) => s,
                Err(msg) => {
                    let _ = writeln!(out.stderr, "error: {msg}");
                    BAD_INPUT
                }
            }
        }
        Err(e) if !e.use_stderr() => {
            out.stdout = e.to_string();
            OK
        }
        Err(e) => {
            // clap spreads one diagnostic over several lines; keep the part
            // before the usage block on a single line.
            let rendered = e.to_string();
            let parts: Vec<&str> = rendered
                .lines()
                .map(str::trim)
                .take_while(|l| !l.starts_with("Usage:"))
                .filter(|l| !l.is_empty())
                .collect();
            let _ = writeln!(out.stderr, "{}", parts.join(" "));
            BAD_INPUT
        }
    };
    (status, out.stdout.into_bytes(), out.stderr.into_bytes())
}

struct Ctx<'a> {
    stdin: &'a [u8],
}

impl Ctx<'_> {
    fn read(&self, path: &str) -> Result<String, String> {
        if path == "-" {
            return String::from_utf8(self.stdin.to_vec()).map_err(|_| "stdin is not UTF-8".to_string());
        }
        fs::read_to_string(path).map_err(|e| format!("{path}: {e}"))
    }

    /// An inline S-expression, or the contents of `@file`.
    fn arg(&self, s: &str) -> Result<String, String> {
        match s.strip_prefix('@') {
            Some(path) => self.read(path),
            None => Ok(s.to_string()),
        }
    }

    fn bundle(&self, inputs: &Inputs) -> Result<Vec<Certificate>, String> {
        let files: Vec<&str> =
            if inputs.files.is_empty() { vec!["-"] } else { inputs.files.iter().map(String::as_str).collect() };
        let mut all = Vec::new();
        for f in files {
            let text = self.read(f)?;
            all.extend(parse_bundle(&text).map_err(|e| format!("{f}: {e}"))?);
        }
        Ok(all)
    }

    fn split(&self, inputs: &Inputs) -> Result<(Vec<Certificate>, Vec<Certificate>), String> {
        Ok(self.bundle(inputs)?.into_iter().partition(|c| !c.is_crl()))
    }

    fn dispatch(&self, cmd: Command, out: &mut Out) -> Res {
        match cmd {
            Command::Parse(inputs) => {
                let certs = self.bundle(&inputs)?;
                for c in &certs {
                    let kind = match c {
                        Certificate::Naming(_) => "naming",
                        Certificate::Auth(_) => "auth",
                        Certificate::Crl(_) => "crl",
                    };
                    let _ = writeln!(out.stdout, "{} {kind} {}", cert_digest(c), c.issuer());
                }
                let _ = writeln!(out.stdout, "{} certificates", certs.len());
                Ok(OK)
            }
            Command::Canon(inputs) => {
                for c in self.bundle(&inputs)? {
                    let _ = writeln!(out.stdout, "{}", encode_certificate(&c));
                }
                Ok(OK)
            }
            Command::CrlCheck(inputs) => {
                let (_, crls) = self.split(&inputs)?;
                match crl_conflict(&crls) {
                    None => {
                        let _ = writeln!(out.stdout, "CONSISTENT ({} CRLs)", crls.len());
                        Ok(OK)
                    }
                    Some((a, b)) => {
                        let _ = writeln!(
                            out.stdout,
                            "INCONSISTENT: {} issued CRLs valid over {} and {}",
                            a.issuer(),
                            a.validity(),
                            b.validity()
                        );
                        Ok(NO)
                    }
                }
            }
            Command::Reduce { rules, bound, emit_3tuples, inputs } => {
                let rs = rule_set(&rules)?;
                let (certs, crls) = self.split(&inputs)?;
                let cfg = ClosureConfig { expr_len_bound: bound, emit_bind3: emit_3tuples };
                let used = effective_bound(&certs, &crls, None, bound);
                let tuples = result_certificates(&certs, &crls, rs, &cfg).map_err(|e| e.to_string())?;
                for t in &tuples {
                    let _ = writeln!(out.stdout, "{}", encode_tuple(t));
                }
                let _ = writeln!(out.stdout, "bound: {used}");
                Ok(OK)
            }
            Command::Decide { issuer, subject, action, name, delegate, time, inputs } => {
                let (k, k2) = (key(&issuer, "--issuer")?, key(&subject, "--subject")?);
                let query = match (action, name) {
                    (Some(a), _) => auth_query(&k, &k2, delegate, &action_arg(&a)?, time),
                    (None, Some(n)) => name_query(&k, &local_name(&n, "--name")?, &k2, time),
                    (None, None) => return Err("--action or --name is required".into()),
                };
                let (certs, crls) = self.split(&inputs)?;
                let (yes, d) = ConcreteDecider::new(&certs, &crls).decide(&query).map_err(|e| e.to_string())?;
                let _ = writeln!(out.stdout, "{} {}", if yes { "YES" } else { "NO" }, encode_tuple(&query));
                if let Some(d) = d {
                    out.stdout.push_str(&d.to_string());
                }
                Ok(if yes { OK } else { NO })
            }
            Command::Resolve { issuer, name, time, keys, inputs } => {
                let k = key(&issuer, "--issuer")?;
                let n = local_name(&name, "--name")?;
                let (certs, crls) = self.split(&inputs)?;
                let universe: BTreeSet<Key> = if keys.is_empty() {
                    certs.iter().chain(&crls).flat_map(|c| c.keys()).collect()
                } else {
                    keys.iter().map(|s| key(s, "--keys")).collect::<Result<_, _>>()?
                };
                let bound = ConcreteDecider::new(&certs, &crls).resolve(&k, &n, time, &universe);
                for b in &bound {
                    let _ = writeln!(out.stdout, "{b}");
                }
                let _ = writeln!(out.stdout, "{} of {} keys bound to ({k} {n}) at {time}", bound.len(), universe.len());
                Ok(if bound.is_empty() { NO } else { OK })
            }
            Command::Prove { target, rules, bound, inputs } => {
                let rs = rule_set(&rules)?;
                let target = parse_tuple(&self.arg(&target)?).map_err(|e| format!("--target: {e}"))?;
                let (certs, crls) = self.split(&inputs)?;
                let cfg = ClosureConfig { expr_len_bound: bound, emit_bind3: false };
                let used = effective_bound(&certs, &crls, Some(&target), bound);
                let proof = derivable_from_certs(&certs, &crls, &target, rs, &cfg).map_err(|e| e.to_string())?;
                let status = match proof {
                    Some(p) => {
                        let _ = writeln!(out.stdout, "DERIVABLE under {rs} ({})", p.mode);
                        out.stdout.push_str(&p.derivation.to_string());
                        OK
                    }
                    None => {
                        let _ = writeln!(out.stdout, "NOT DERIVABLE under {rs}");
                        NO
                    }
                };
                let _ = writeln!(out.stdout, "bound: {used}");
                Ok(status)
            }
            Command::Oracle { formula, keys, names, actions, extend, inputs } => {
                let phi = parse_formula(&self.arg(&formula)?).map_err(|e| format!("--formula: {e}"))?;
                let (certs, crls) = self.split(&inputs)?;
                let mut u = Universe::from_instance(certs.iter().chain(&crls), [&phi]);
                for s in &keys {
                    u.keys.insert(key(s, "--keys")?);
                }
                for s in &names {
                    u.names.insert(local_name(s, "--names")?);
                }
                for s in &actions {
                    u.actions.insert(action_arg(s)?);
                }
                let verdict = match entails_closed_extended(&certs, &crls, &phi, &u, extend) {
                    Ok(v) => v,
                    Err(SemanticsError::InconsistentCrls(a, b)) => {
                        return Err(format!("CRLs {a} and {b} overlap; refusing to build a run"))
                    }
                    Err(e) => return Err(e.to_string()),
                };
                let _ = writeln!(out.stdout, "{verdict}");
                if let Verdict::Refuted(r) = &verdict {
                    for c in &r.extra {
                        let _ = writeln!(out.stdout, "  with {}", encode_certificate(c));
                    }
                }
                let _ = writeln!(
                    out.stdout,
                    "|K| = {}, |N| = {}, |Act| = {}, extend = {extend}",
                    u.keys.len(),
                    u.names.len(),
                    u.actions.len()
                );
                Ok(if verdict.is_entailed() { OK } else { NO })
            }
            Command::Witness { target, key_supply, inputs } => {
                let c = parse_certificate(&self.arg(&target)?).map_err(|e| format!("--target: {e}"))?;
                let (certs, crls) = self.split(&inputs)?;
                let supply: BTreeSet<Key> = if key_supply.is_empty() {
                    (0..64).map(|i| Key::new(format!("k-w{i}")).expect("well-formed")).collect()
                } else {
                    key_supply.iter().map(|s| key(s, "--key-supply")).collect::<Result<_, _>>()?
                };
                let w = build_completeness_witness(&certs, &crls, &c, &supply, &ClosureConfig::default())
                    .map_err(|e| e.to_string())?;
                match w {
                    None => {
                        let _ = writeln!(out.stdout, "DERIVABLE");
                        Ok(NO)
                    }
                    Some(w) => {
                        let _ = writeln!(out.stdout, "fails at key {} time {}", w.key, w.time);
                        let _ = writeln!(out.stdout, "{}", run_sexpr(w.run.events()));
                        Ok(OK)
                    }
                }
            }
        }
    }
}

fn rule_set(s: &str) -> Result<RuleSet, String> {
    s.parse().map_err(|_| format!("--rules: expected rs0, rs1 or rs2, got {s:?}"))
}

fn key(s: &str, flag: &str) -> Result<Key, String> {
    Key::new(s).map_err(|e| format!("{flag}: {e}"))
}

fn local_name(s: &str, flag: &str) -> Result<LocalName, String> {
    LocalName::new(s).map_err(|e| format!("{flag}: {e}"))
}

fn action_arg(s: &str) -> Result<Action, String> {
    let e = parse_sexpr(s).map_err(|e| format!("--action: {e}"))?;
    decode_action(&e).map_err(|e| format!("--action: {e}"))
}

fn effective_bound(certs: &[Certificate], crls: &[Certificate], target: Option<&Tuple>, flag: Option<usize>) -> usize {
    flag.unwrap_or_else(|| {
        let inputs: Vec<Tuple> = tuples_with_provenance(certs, crls).into_iter().map(|(t, _)| t).collect();
        default_bound(&inputs, target)
    })
}
