use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Map, Value};

use treeprod::algorithm1::{measure, run_algorithm1};
use treeprod::amalgam::contract;
use treeprod::closure::{
    all_reduced_words, probe_embedding, verify_certificate, ClosureCertificate, ClosureSearch, Hypotheses, SearchBudget,
    SearchOutcome,
};
use treeprod::eqsystems::{build_matrix_named, integer_rank, is_independent};
use treeprod::leafops::{prepare_leaf, KernelPresentation, Prepared};
use treeprod::presentation::{TreeProduct, ValidateOptions};
use treeprod::words::{Alphabet, Gen};
use treeprod::Error;

#[derive(Parser)]
#[command(name = "treeprod", version, about = "Tree-products of free groups")]
struct Cli {
    /// Skip only the proper-power check on edge-words; probes then report
    /// their hypotheses as violated.
    #[arg(long, global = true)]
    allow_nonmaximal: bool,
    #[arg(long, global = true, value_enum, default_value_t = Format::Plain)]
    format: Format,
    /// Write the result here instead of standard output.
    #[arg(long, short, global = true)]
    output: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Plain,
    Structured,
}

#[derive(Args)]
struct LeafArgs {
    #[arg(long)]
    leaf: String,
    #[arg(long)]
    gen: String,
}

#[derive(Args)]
struct BudgetArgs {
    #[arg(long, default_value_t = 3)]
    max_factors: usize,
    #[arg(long, default_value_t = 4)]
    max_conj_len: usize,
    #[arg(long, default_value_t = 1_000_000)]
    max_states: usize,
}

#[derive(Subcommand)]
enum Command {
    /// Check every presentation invariant.
    Validate { file: PathBuf },
    /// Boundary-length and number of vertices.
    Sigma { file: PathBuf },
    /// Contracted conjugate and minimal tree of a word.
    Contract {
        file: PathBuf,
        #[arg(long)]
        word: String,
    },
    /// Prepare a leaf for a leaf-homomorphism.
    Prepare {
        file: PathBuf,
        #[arg(long)]
        leaf: String,
        #[arg(long)]
        word: String,
    },
    /// Kernel presentation over a slice window `lo..hi`.
    Kernel {
        file: PathBuf,
        #[command(flatten)]
        leaf: LeafArgs,
        #[arg(long, allow_hyphen_values = true)]
        window: String,
    },
    /// Rewrite a relator into the kernel and normalize it there.
    Alg1 {
        file: PathBuf,
        #[command(flatten)]
        leaf: LeafArgs,
        #[arg(long)]
        word: String,
        #[arg(long, default_value_t = 0, allow_hyphen_values = true)]
        ell: i64,
    },
    /// Lexicographic measure of a word's contracted conjugate.
    Measure {
        file: PathBuf,
        #[arg(long)]
        word: String,
    },
    /// Exponent-sum matrix of equations in the listed variables.
    Expmatrix {
        file: PathBuf,
        #[arg(long = "eq", required = true)]
        eqs: Vec<String>,
        #[arg(long, value_delimiter = ',', required = true)]
        vars: Vec<String>,
    },
    /// Bounded search for a normal-closure certificate.
    Closure {
        file: PathBuf,
        #[arg(long)]
        relator: String,
        #[arg(long)]
        target: String,
        #[command(flatten)]
        budget: BudgetArgs,
    },
    /// Check a certificate file.
    Certify {
        file: PathBuf,
        #[arg(long)]
        cert: PathBuf,
    },
    /// Search for kills among all short words of a subtree factor.
    Probe {
        file: PathBuf,
        #[arg(long)]
        subtree: String,
        #[arg(long)]
        relator: String,
        #[arg(long, default_value_t = 2)]
        sample_len: usize,
        #[command(flatten)]
        budget: BudgetArgs,
    },
}

/// Exit codes: 0 success, 1 domain-level negative result, 2 usage or parse error.
enum Failure {
    Usage(String),
    Negative(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Parse(_) | Error::Alphabet(_) | Error::Certificate(_) => Failure::Usage(e.to_string()),
            other => Failure::Negative(other.to_string()),
        }
    }
}

struct Report {
    plain: String,
    fields: Map<String, Value>,
    negative: bool,
}

impl Report {
    fn new(plain: String, fields: Value) -> Self {
        let Value::Object(fields) = fields else { unreachable!("reports are objects") };
        Report { plain, fields, negative: false }
    }

    fn negative(mut self) -> Self {
        self.negative = true;
        self
    }
}

fn read(path: &PathBuf) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::Usage(format!("cannot read {}: {e}", path.display())))
}

fn load(path: &PathBuf, allow_nonmaximal: bool) -> Result<TreeProduct, Failure> {
    let tp = TreeProduct::parse(&read(path)?)?;
    let violations = tp.validate_with(ValidateOptions { allow_nonmaximal });
    if let Some(v) = violations.first() {
        return Err(Failure::Negative(format!("invalid presentation: {v}")));
    }
    Ok(tp)
}

fn parse_window(text: &str) -> Result<(i64, i64), Failure> {
    let bad = || Failure::Usage(format!("window must be `lo..hi`, got `{text}`"));
    let (lo, hi) = text.split_once("..").ok_or_else(bad)?;
    let lo = lo.trim().parse().map_err(|_| bad())?;
    let hi = hi.trim().parse().map_err(|_| bad())?;
    if lo > hi {
        return Err(bad());
    }
    Ok((lo, hi))
}

fn budget(b: &BudgetArgs) -> Result<SearchBudget, Failure> {
    Ok(SearchBudget::new(b.max_factors, b.max_conj_len, b.max_states)?)
}

fn leaf_gen(tp: &TreeProduct, args: &LeafArgs) -> Result<(usize, Gen), Failure> {
    Ok((tp.vertex_index(&args.leaf)?, tp.alphabet().gen(&args.gen)?))
}

fn run(cli: &Cli) -> Result<Report, Failure> {
    let allow = cli.allow_nonmaximal;
    match &cli.command {
        Command::Validate { file } => {
            let tp = TreeProduct::parse(&read(file)?)?;
            let violations = tp.validate_with(ValidateOptions { allow_nonmaximal: allow });
            let lines: Vec<String> = violations.iter().map(ToString::to_string).collect();
            let plain = if lines.is_empty() { "valid\n".to_string() } else { format!("invalid\n{}\n", lines.join("\n")) };
            let report = Report::new(plain, json!({ "valid": lines.is_empty(), "violations": lines }));
            Ok(if violations.is_empty() { report } else { report.negative() })
        }
        Command::Sigma { file } => {
            let tp = load(file, allow)?;
            let (size, sigma) = (tp.size(), tp.boundary_length());
            Ok(Report::new(format!("size={size} sigma={sigma}\n"), json!({ "size": size, "sigma": sigma })))
        }
        Command::Contract { file, word } => {
            let tp = load(file, allow)?;
            let cc = contract(&tp, &tp.parse_word(word)?)?;
            let (pieces, tree, conj) =
                (cc.pieces.serialize(&tp), tp.format_selection(&cc.minimal_tree), tp.format(&cc.conjugator));
            Ok(Report::new(
                format!("pieces: {pieces}\nlength: {}\ntree: {tree}\nconjugator: {conj}\n", cc.length()),
                json!({ "pieces": pieces, "length": cc.length(), "tree": tree, "conjugator": conj }),
            ))
        }
        Command::Prepare { file, leaf, word } => {
            let tp = load(file, allow)?;
            let r = tp.parse_word(word)?;
            let outcome = prepare_leaf(&tp, tp.vertex_index(leaf)?, &r)?;
            let t = &outcome.transformed().tp;
            let mut fields = json!({ "outcome": outcome.name() });
            let mut plain = format!("outcome: {}\n", outcome.name());
            let mut add = |k: &str, v: String| {
                plain.push_str(&format!("{k}: {v}\n"));
                fields[k] = Value::String(v);
            };
            match &outcome {
                Prepared::ShorterBoundary { relator, before, after, .. } => {
                    add("relator", t.format(relator));
                    add("sigma", format!("{before} -> {after}"));
                }
                Prepared::Ready { relator, gen, .. } => {
                    add("relator", t.format(relator));
                    add("gen", t.alphabet().name(*gen).to_string());
                }
                Prepared::FullRank { relator, gen, partner, matrix, .. } => {
                    add("relator", t.format(relator));
                    add("gen", t.alphabet().name(*gen).to_string());
                    add("partner", t.alphabet().name(*partner).to_string());
                    add("matrix", matrix.to_string().trim_end().replace('\n', "; "));
                }
            }
            let text = t.serialize();
            plain.push_str(&text);
            fields["presentation"] = Value::String(text);
            Ok(Report { plain, fields: fields.as_object().cloned().unwrap_or_default(), negative: false })
        }
        Command::Kernel { file, leaf, window } => {
            let tp = load(file, allow)?;
            let (v, a) = leaf_gen(&tp, leaf)?;
            let kp = KernelPresentation::build(&tp, v, a, parse_window(window)?)?;
            let text = kp.serialize();
            Ok(Report::new(text.clone(), json!({ "kernel": text })))
        }
        Command::Alg1 { file, leaf, word, ell } => {
            let tp = load(file, allow)?;
            let (v, a) = leaf_gen(&tp, leaf)?;
            let r = tp.parse_word(word)?;
            let cc = contract(&tp, &r)?;
            let mut kp = KernelPresentation::build(&tp, v, a, (0, 0))?;
            kp.widen(kp.required_window(&cc.pieces.product(), *ell))?;
            let trace = run_algorithm1(&kp, &r, *ell)?;
            let text = trace.serialize(&kp);
            let output = trace.output.pieces.serialize(kp.tree());
            Ok(Report::new(text.clone(), json!({ "trace": text, "output": output, "length": trace.output.length() })))
        }
        Command::Measure { file, word } => {
            let tp = load(file, allow)?;
            let m = measure(&tp, &tp.parse_word(word)?)?;
            Ok(Report::new(format!("measure={m}\n"), json!({ "excess": m.excess, "boundary": m.boundary })))
        }
        Command::Expmatrix { file, eqs, vars } => {
            let tp = load(file, allow)?;
            let mut alphabet: Alphabet = tp.alphabet().clone();
            for v in vars {
                if alphabet.lookup(v).is_none() {
                    alphabet.insert(v)?;
                }
            }
            let words = eqs.iter().map(|e| alphabet.parse_word(e)).collect::<treeprod::Result<Vec<_>>>()?;
            let names: Vec<&str> = vars.iter().map(String::as_str).collect();
            let m = build_matrix_named(&alphabet, &words, &names)?;
            let (rank, indep) = (integer_rank(&m), is_independent(&m));
            Ok(Report::new(
                format!("{m}rank={rank} independent={indep}\n"),
                json!({ "matrix": m.entries(), "rank": rank, "independent": indep }),
            ))
        }
        Command::Closure { file, relator, target, budget: b } => {
            let tp = load(file, allow)?;
            let (r, t) = (tp.parse_word(relator)?, tp.parse_word(target)?);
            let outcome = ClosureSearch::new(&tp, &r, budget(b)?)?.search(&t)?;
            Ok(match &outcome {
                SearchOutcome::Found(cert, stats) => {
                    let text = cert.serialize(&tp);
                    Report::new(
                        format!("{text}# {stats}\n"),
                        json!({ "found": true, "certificate": text, "stats": stats.to_string() }),
                    )
                }
                SearchOutcome::NotFoundWithinBudget(stats) => Report::new(
                    format!("not found within budget (one-sided: not a proof of non-membership)\n# {stats}\n"),
                    json!({ "found": false, "stats": stats.to_string() }),
                )
                .negative(),
            })
        }
        Command::Certify { file, cert } => {
            let tp = load(file, allow)?;
            let cert = ClosureCertificate::parse(&tp, &read(cert)?)?;
            let ok = verify_certificate(&tp, &cert)?;
            let report = Report::new(
                format!("certificate {}\n", if ok { "verified" } else { "rejected" }),
                json!({ "verified": ok }),
            );
            Ok(if ok { report } else { report.negative() })
        }
        Command::Probe { file, subtree, relator, sample_len, budget: b } => {
            let tp = load(file, allow)?;
            let sel = tp.parse_selection(subtree)?;
            let gens: Vec<Gen> = sel.iter().flat_map(|v| tp.vertex(v).gens.clone()).collect();
            let samples = all_reduced_words(&tp, &gens, *sample_len);
            let report = probe_embedding(&tp, &sel, &tp.parse_word(relator)?, budget(b)?, &samples)?;
            let text = report.serialize(&tp);
            let hold = report.hypotheses == Hypotheses::Hold;
            let out = Report::new(
                text.clone(),
                json!({ "one_sided": true, "hypotheses_hold": hold, "refused": report.refused, "kills": report.kills.len(), "report": text }),
            );
            Ok(if report.refused.is_some() { out.negative() } else { out })
        }
    }
}

fn emit(cli: &Cli, text: &str) -> Result<(), Failure> {
    match &cli.output {
        Some(path) => fs::write(path, text).map_err(|e| Failure::Usage(format!("cannot write {}: {e}", path.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = run(&cli).and_then(|report| {
        let text = match cli.format {
            Format::Plain => report.plain.clone(),
            Format::Structured => format!("{}\n", serde_json::to_string_pretty(&Value::Object(report.fields.clone())).expect("serializable")),
        };
        emit(&cli, &text)?;
        Ok(report.negative)
    });
    match result {
        Ok(false) => ExitCode::SUCCESS,
        Ok(true) => ExitCode::from(1),
        Err(Failure::Negative(msg)) => {
            eprintln!("{msg}");
            ExitCode::from(1)
        }
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}
