//! `ecs`: analyze, encrypt and verify short-key entropically secure ciphers.
//!
//! Exit status: 0 success or PASS, 1 verification FAIL, 2 input error,
//! 3 policy refusal.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use ecs_core::cipher::{key_from_text, key_to_text, keygen, CiphertextEnvelope, Margin, OneTimeKey, Scheme};
use ecs_core::code::{build_shannon, trim_tree, Codebook};
use ecs_core::dist::{format_rational, parse_rational, to_f64, Distribution, Rational, DEFAULT_BUDGET};
use ecs_core::pad::bit_source;
use ecs_core::verify::{check_indistinguishability, monte_carlo_sd, PadFamily, Verdict};
use ecs_core::Error;

#[derive(Parser)]
#[command(name = "ecs", version, about = "Entropically secure encryption with short keys")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Derive block length, field size and key lengths for a distribution.
    Analyze {
        #[command(flatten)]
        scheme: SchemeArgs,
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
    },
    /// Print the codebook: RANK SYMBOL PROB CODEWORD LENGTH per line.
    Codebook {
        #[arg(long)]
        dist: PathBuf,
        #[arg(long, value_enum, default_value_t = CodeChoice::Escape)]
        code: CodeChoice,
    },
    /// Write a fresh one-time key.
    Keygen {
        #[command(flatten)]
        scheme: SchemeArgs,
        #[arg(long)]
        out: PathBuf,
        /// Deterministic ChaCha20 stream instead of OS randomness.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Encrypt one message under a one-time key.
    Encrypt {
        #[command(flatten)]
        scheme: SchemeArgs,
        #[arg(long)]
        key: PathBuf,
        #[command(flatten)]
        message: MessageArgs,
        #[arg(long)]
        out: PathBuf,
        /// Deterministic padding stream instead of OS randomness.
        #[arg(long)]
        seed: Option<u64>,
        /// Encrypt even if the key was used before. Voids the security guarantee.
        #[arg(long)]
        force_reuse: bool,
    },
    /// Decrypt a ciphertext file and print the message.
    Decrypt {
        #[command(flatten)]
        scheme: SchemeArgs,
        #[arg(long)]
        key: PathBuf,
        #[arg(long = "in")]
        input: PathBuf,
    },
    /// Measure the distance between ciphertexts and uniform blocks.
    Verify {
        #[command(flatten)]
        scheme: SchemeArgs,
        /// Enumerate every message, padding and key (default).
        #[arg(long, conflicts_with = "monte_carlo")]
        exact: bool,
        /// Estimate from N sampled ciphertexts instead.
        #[arg(long, value_name = "N")]
        monte_carlo: Option<u64>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Cap on enumerated terms.
        #[arg(long, default_value_t = DEFAULT_BUDGET)]
        budget: u64,
        /// Also report distances after decoding both sides.
        #[arg(long, conflicts_with = "monte_carlo")]
        chain: bool,
        /// Negative control: skip the pad so blocks go out in the clear.
        #[arg(long)]
        constant_pad: bool,
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
    },
}

#[derive(Args)]
struct SchemeArgs {
    /// Distribution file (`ECSD 1 <n|*> <L>` format).
    #[arg(long)]
    dist: PathBuf,
    /// Security level as `NUM/DEN` or `2^-c`.
    #[arg(long, value_parser = parse_epsilon)]
    epsilon: Rational,
    /// Constant in the theoretical key length: 4 (entropic security) or 5.
    #[arg(long, default_value_t = 4, value_parser = clap::value_parser!(u32).range(4..=5))]
    margin: u32,
}

#[derive(Args)]
#[group(required = true, multiple = false)]
struct MessageArgs {
    /// Bit string, `0x` hex, or decimal index for abstract alphabets.
    #[arg(long)]
    message: Option<String>,
    /// File holding the message literal.
    #[arg(long)]
    message_file: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Text,
    Machine,
}

#[derive(Clone, Copy, ValueEnum)]
enum CodeChoice {
    Raw,
    Tree,
    Escape,
}

fn parse_epsilon(s: &str) -> Result<Rational, String> {
    parse_rational(s).ok_or_else(|| format!("`{s}` is not NUM/DEN or 2^-c"))
}

enum Failure {
    Input(String),
    Policy(String),
    Verify,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Input(e.to_string())
    }
}

type Outcome = Result<(), Failure>;

fn read_text(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::Input(format!("cannot read {}: {e}", path.display())))
}

fn write_file(path: &Path, bytes: &[u8]) -> Outcome {
    fs::write(path, bytes).map_err(|e| Failure::Input(format!("cannot write {}: {e}", path.display())))
}

fn load_dist(path: &Path) -> Result<Distribution, Failure> {
    Distribution::parse(&read_text(path)?).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))
}

fn load_scheme(args: &SchemeArgs) -> Result<(Distribution, Scheme), Failure> {
    let d = load_dist(&args.dist)?;
    let margin = Margin::from_value(args.margin).expect("clap restricts the range");
    let scheme = Scheme::new(&d, &args.epsilon, margin)?;
    Ok((d, scheme))
}

fn print_fields(fields: &[(String, String)], format: Format) {
    let mut out = String::new();
    for (k, v) in fields {
        let _ = match format {
            Format::Text => writeln!(out, "{k} = {v}"),
            Format::Machine => writeln!(out, "{k}={v}"),
        };
    }
    print!("{out}");
}

fn length_histogram(cb: &Codebook) -> String {
    let mut counts = std::collections::BTreeMap::new();
    for w in cb.words() {
        *counts.entry(w.len()).or_insert(0usize) += 1;
    }
    counts
        .iter()
        .map(|(len, c)| format!("{len}:{c}"))
        .collect::<Vec<_>>()
        .join(",")
}

fn analyze(args: &SchemeArgs, format: Format) -> Outcome {
    let (d, scheme) = load_scheme(args)?;
    let cb = scheme.codebook();
    let me = d.min_entropy();
    let mut fields = vec![
        ("source_min_entropy".to_string(), format!("{:.6}", me.bits)),
        ("code".to_string(), cb.kind().to_string()),
        ("code_lengths".to_string(), length_histogram(cb)),
        ("code_kraft".to_string(), format_rational(&cb.kraft_sum())),
    ];
    fields.extend(scheme.params().report_fields().into_iter().map(|(k, v)| (k.to_string(), v)));
    print_fields(&fields, format);
    Ok(())
}

fn codebook(dist: &Path, choice: CodeChoice) -> Outcome {
    let d = load_dist(dist)?;
    let raw = build_shannon(&d)?;
    let cb = match choice {
        CodeChoice::Raw => raw,
        CodeChoice::Tree => trim_tree(&raw),
        CodeChoice::Escape => ecs_core::code::build_trimmed(&trim_tree(&raw)),
    };
    let mut out = String::new();
    for (rank, (sym, word)) in cb.symbols().iter().zip(cb.words()).enumerate() {
        let p = d.prob_of(sym).expect("codebook symbols come from d");
        let _ = writeln!(out, "{rank} {sym} {} {word} {}", format_rational(p), word.len());
    }
    print!("{out}");
    Ok(())
}

fn keygen_cmd(args: &SchemeArgs, out: &Path, seed: Option<u64>) -> Outcome {
    let (_, scheme) = load_scheme(args)?;
    let key = keygen(scheme.params(), &mut bit_source(seed))?;
    write_file(out, key_to_text(key.key()).as_bytes())?;
    let _ = fs::remove_file(used_marker(out));
    eprintln!("wrote {}-bit key to {}", key.key().len_bits(), out.display());
    Ok(())
}

/// Sidecar recording that a key file has encrypted a message.
fn used_marker(key: &Path) -> PathBuf {
    let mut name = key.as_os_str().to_owned();
    name.push(".used");
    PathBuf::from(name)
}

fn encrypt_cmd(
    args: &SchemeArgs,
    key_path: &Path,
    message: &MessageArgs,
    out: &Path,
    seed: Option<u64>,
    force_reuse: bool,
) -> Outcome {
    let (d, scheme) = load_scheme(args)?;
    let key = key_from_text(&read_text(key_path)?)?;
    let marker = used_marker(key_path);
    if marker.exists() {
        if !force_reuse {
            return Err(Failure::Policy(format!(
                "key {} was already used; one-time keys must not encrypt twice (override with --force-reuse)",
                key_path.display()
            )));
        }
        eprintln!("warning: reusing a one-time key; ciphertexts under a reused key are not entropically secure");
    }
    let literal = match (&message.message, &message.message_file) {
        (Some(m), _) => m.clone(),
        (None, Some(p)) => read_text(p)?,
        (None, None) => unreachable!("clap requires one"),
    };
    let sym = d.parse_symbol(&literal)?;
    let env = scheme.encrypt(OneTimeKey::new(key), &sym, &mut bit_source(seed))?;
    write_file(&marker, b"")?;
    write_file(out, &env.to_bytes())
}

fn decrypt_cmd(args: &SchemeArgs, key_path: &Path, input: &Path) -> Outcome {
    let (_, scheme) = load_scheme(args)?;
    let bytes = fs::read(input).map_err(|e| Failure::Input(format!("cannot read {}: {e}", input.display())))?;
    let env = CiphertextEnvelope::from_bytes(&bytes)?;
    scheme.check_envelope(&env)?;
    let key = key_from_text(&read_text(key_path)?)?;
    println!("{}", scheme.decrypt(&key, &env)?);
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn verify_cmd(
    args: &SchemeArgs,
    monte_carlo: Option<u64>,
    seed: u64,
    budget: u64,
    chain: bool,
    constant_pad: bool,
    format: Format,
) -> Outcome {
    let (d, scheme) = load_scheme(args)?;
    let pads = if constant_pad {
        PadFamily::Constant(0)
    } else {
        PadFamily::SmallBias(scheme.params().field)
    };
    let start = Instant::now();
    let mut report = match monte_carlo {
        Some(n) => monte_carlo_sd(&scheme, &d, &pads, n, seed)?,
        None => check_indistinguishability(&scheme, &d, &pads, chain, budget).map_err(|e| match e {
            Error::BudgetExceeded { .. } => {
                Failure::Input(format!("{e}; raise --budget or use --monte-carlo N"))
            }
            other => other.into(),
        })?,
    };
    report.wall_time = Some(start.elapsed());
    match format {
        Format::Text => print!("{}", report.render_text()),
        Format::Machine => print!("{}", report.render_machine()),
    }
    if let (Some(sd), Format::Text) = (report.sd_exact(), format) {
        if report.verdict == Verdict::Fail {
            eprintln!(
                "distance {:.6} exceeds epsilon {:.6}",
                to_f64(sd),
                to_f64(&scheme.params().epsilon)
            );
        }
    }
    if report.verdict == Verdict::Fail {
        Err(Failure::Verify)
    } else {
        Ok(())
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Analyze { scheme, format } => analyze(scheme, *format),
        Command::Codebook { dist, code } => codebook(dist, *code),
        Command::Keygen { scheme, out, seed } => keygen_cmd(scheme, out, *seed),
        Command::Encrypt {
            scheme,
            key,
            message,
            out,
            seed,
            force_reuse,
        } => encrypt_cmd(scheme, key, message, out, *seed, *force_reuse),
        Command::Decrypt { scheme, key, input } => decrypt_cmd(scheme, key, input),
        Command::Verify {
            scheme,
            exact: _,
            monte_carlo,
            seed,
            budget,
            chain,
            constant_pad,
            format,
        } => verify_cmd(scheme, *monte_carlo, *seed, *budget, *chain, *constant_pad, *format),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Verify) => ExitCode::from(1),
        Err(Failure::Input(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Policy(msg)) => {
            eprintln!("refused: {msg}");
            ExitCode::from(3)
        }
    }
}
