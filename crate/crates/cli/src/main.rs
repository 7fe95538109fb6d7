use std::io::{self, BufRead, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use nlst_core::catalog::Database;
use nlst_core::corpus::{generate, read_corpus, to_jsonl, training_corpus, TRAINING_PER_DB};
use nlst_core::eval::{evaluate, EvalReport};
use nlst_core::nlu::{train_classifier, TypeClassifier};
use nlst_service::{answer, describe, load_databases, AppState, QueryResponse, DEFAULT_SAMPLE_FRACTION};

#[derive(Parser)]
#[command(name = "nlstplan", version, about = "Ask a spatio-temporal database questions in English")]
struct Cli {
    /// Directory holding one sub-directory per dataset (NLSTPLAN_DATA wins over this flag)
    #[arg(long, global = true, default_value = "data")]
    data: PathBuf,
    /// Trained type classifier
    #[arg(long, global = true, default_value = "models/classifier.json")]
    model: PathBuf,
    #[arg(long, global = true, default_value_t = 42)]
    seed: u64,
    /// Print machine-readable JSON
    #[arg(long, global = true)]
    json: bool,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Load datasets and show their relations
    Load {
        #[arg(long)]
        db: Option<String>,
    },
    /// Translate and run one question
    Query {
        #[arg(long)]
        db: String,
        #[arg(long)]
        nlq: String,
        #[command(flatten)]
        opt: OptimizeArgs,
    },
    /// Interactive question loop
    Repl {
        #[arg(long)]
        db: String,
        #[command(flatten)]
        opt: OptimizeArgs,
    },
    #[command(subcommand)]
    Corpus(CorpusCmd),
    #[command(subcommand)]
    Nlu(NluCmd),
    /// Translatability, precision and response time over a corpus file
    Eval {
        #[arg(long)]
        db: String,
        #[arg(long)]
        corpus: PathBuf,
    },
    /// Run the HTTP service
    Serve {
        #[arg(long, default_value_t = 8080)]
        port: u16,
        /// Static files served under `/` (default: ./static when present)
        #[arg(long = "static")]
        static_dir: Option<PathBuf>,
    },
}

#[derive(Args)]
struct OptimizeArgs {
    #[arg(long)]
    optimize: bool,
    #[arg(long, default_value_t = DEFAULT_SAMPLE_FRACTION)]
    sample_fraction: f64,
}

#[derive(Subcommand)]
enum CorpusCmd {
    /// Generate a labelled question corpus as JSON lines
    Gen {
        #[arg(long)]
        db: String,
        #[arg(short, long)]
        n: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Subcommand)]
enum NluCmd {
    /// Train the type classifier and write it to --out
    Train {
        /// Corpus files; without any, a corpus is generated from every dataset
        #[arg(long)]
        corpus: Vec<PathBuf>,
        #[arg(long, default_value_t = TRAINING_PER_DB)]
        per_db: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Classify one question
    Classify {
        #[arg(long)]
        nlq: String,
    },
}

fn data_dir(cli: &Cli) -> PathBuf {
    std::env::var_os("NLSTPLAN_DATA").map(PathBuf::from).unwrap_or_else(|| cli.data.clone())
}

fn databases(cli: &Cli) -> Result<Vec<Database>> {
    let dir = data_dir(cli);
    load_databases(&dir).with_context(|| format!("loading datasets from {}", dir.display()))
}

fn database(cli: &Cli, name: &str) -> Result<Database> {
    let dbs = databases(cli)?;
    let names: Vec<String> = dbs.iter().map(|d| d.name.clone()).collect();
    dbs.into_iter().find(|d| d.name == name).ok_or_else(|| anyhow!("unknown database '{name}' (have: {})", names.join(", ")))
}

fn model(path: &Path) -> Result<TypeClassifier> {
    TypeClassifier::load(path).with_context(|| format!("loading model {}", path.display()))
}

fn print_json(v: &impl serde::Serialize) -> Result<()> {
    println!("{}", serde_json::to_string_pretty(v)?);
    Ok(())
}

const SHOWN_ROWS: usize = 20;

fn print_response(r: &QueryResponse) {
    if let Some(e) = &r.error {
        println!("error ({}): {}", serde_json::to_value(e.category).unwrap_or_default().as_str().unwrap_or(""), e.message);
        if !e.suggestions.is_empty() {
            println!("try:");
            for s in &e.suggestions {
                println!("  {s}");
            }
        }
        return;
    }
    if let Some(t) = &r.trace {
        println!("type: {}", t.query_type);
    }
    for w in &r.warnings {
        println!("warning: {w}");
    }
    if let Some(p) = &r.plan_text {
        println!("{p}");
    }
    if let Some(res) = &r.results {
        println!("{} row(s)", res.rows.len());
        println!("{}", res.columns.join("\t"));
        for row in res.rows.iter().take(SHOWN_ROWS) {
            let cells: Vec<String> = row
                .iter()
                .map(|v| match v {
                    serde_json::Value::String(s) if s.chars().count() > 60 => format!("{}...", s.chars().take(57).collect::<String>()),
                    serde_json::Value::String(s) => s.clone(),
                    other => other.to_string(),
                })
                .collect();
            println!("{}", cells.join("\t"));
        }
        if res.rows.len() > SHOWN_ROWS {
            println!("...");
        }
    }
    if let Some(t) = &r.timing {
        match t.optimized_ms {
            Some(o) => println!("baseline {:.3} ms, optimized {:.3} ms, translation {:.3} ms", t.baseline_ms, o, t.translation_ms),
            None => println!("execution {:.3} ms, translation {:.3} ms", t.baseline_ms, t.translation_ms),
        }
    }
}

fn print_report(r: &EvalReport) {
    println!("n = {}", r.n);
    println!("translatability {:.3} ({}/{})", r.translatability, r.translated, r.n);
    println!("precision       {:.3} ({}/{})", r.precision, r.correct, r.translated);
    println!("response ms     mean {:.2}, p95 {:.2}", r.mean_response_ms, r.p95_response_ms);
    for (t, b) in &r.per_type {
        println!("  {t:<16} n {:>4}  translated {:>4}  correct {:>4}", b.n, b.translated, b.correct);
    }
}

fn run(cli: &Cli) -> Result<()> {
    match &cli.cmd {
        Cmd::Load { db } => {
            let dbs = databases(cli)?;
            let chosen: Vec<&Database> = dbs.iter().filter(|d| db.as_ref().map_or(true, |n| &d.name == n)).collect();
            if let Some(n) = db {
                if chosen.is_empty() {
                    bail!("unknown database '{n}'");
                }
            }
            if cli.json {
                return print_json(&chosen.iter().map(|d| describe(d)).collect::<Vec<_>>());
            }
            for d in chosen {
                println!("{}", d.name);
                for s in d.all_stats() {
                    println!("  {:<20} {:>6} tuples", s.relation, s.tuple_count);
                }
            }
        }
        Cmd::Query { db, nlq, opt } => {
            let d = database(cli, db)?;
            let clf = model(&cli.model)?;
            let r = answer(&d, &clf, nlq, opt.optimize, opt.sample_fraction, cli.seed);
            if cli.json {
                print_json(&r)?;
            } else {
                print_response(&r);
            }
        }
        Cmd::Repl { db, opt } => {
            let d = database(cli, db)?;
            let clf = model(&cli.model)?;
            let stdin = io::stdin();
            loop {
                print!("{}> ", d.name);
                io::stdout().flush()?;
                let mut line = String::new();
                if stdin.lock().read_line(&mut line)? == 0 {
                    break;
                }
                let q = line.trim();
                match q {
                    "" => continue,
                    "quit" | "exit" | "\\q" => break,
                    _ => {}
                }
                let r = answer(&d, &clf, q, opt.optimize, opt.sample_fraction, cli.seed);
                if cli.json {
                    print_json(&r)?;
                } else {
                    print_response(&r);
                }
            }
        }
        Cmd::Corpus(CorpusCmd::Gen { db, n, out }) => {
            let d = database(cli, db)?;
            let entries = generate(&d, *n, cli.seed)?;
            let text = to_jsonl(&entries);
            match out {
                Some(p) => std::fs::write(p, text).with_context(|| format!("writing {}", p.display()))?,
                None => print!("{text}"),
            }
        }
        Cmd::Nlu(NluCmd::Train { corpus, per_db, out }) => {
            let entries = if corpus.is_empty() {
                let dbs = databases(cli)?;
                if dbs.is_empty() {
                    bail!("no datasets under {}", data_dir(cli).display());
                }
                training_corpus(&dbs.iter().collect::<Vec<_>>(), *per_db, cli.seed)?
            } else {
                let mut all = Vec::new();
                for p in corpus {
                    all.extend(read_corpus(p)?);
                }
                all
            };
            let clf = train_classifier(&entries, cli.seed)?;
            if let Some(dir) = out.parent().filter(|d| !d.as_os_str().is_empty()) {
                std::fs::create_dir_all(dir)?;
            }
            clf.save(out).with_context(|| format!("writing {}", out.display()))?;
            if !cli.json {
                println!("trained on {} entries, {} features -> {}", entries.len(), clf.vocabulary.len(), out.display());
            } else {
                print_json(&serde_json::json!({"entries": entries.len(), "features": clf.vocabulary.len(), "model": out}))?;
            }
        }
        Cmd::Nlu(NluCmd::Classify { nlq }) => {
            let clf = model(&cli.model)?;
            let (t, scores) = clf.classify(nlq);
            if cli.json {
                let s: serde_json::Map<String, serde_json::Value> =
                    clf.classes.iter().zip(&scores).map(|(c, s)| (c.to_string(), serde_json::json!(s))).collect();
                print_json(&serde_json::json!({"type": t, "scores": s}))?;
            } else {
                println!("{t}");
            }
        }
        Cmd::Eval { db, corpus } => {
            let d = database(cli, db)?;
            let clf = model(&cli.model)?;
            let entries = read_corpus(corpus)?;
            let r = evaluate(&d, &entries, &clf, cli.seed);
            if cli.json {
                print_json(&r)?;
            } else {
                print_report(&r);
            }
        }
        Cmd::Serve { port, static_dir } => {
            let dbs = databases(cli)?;
            let clf = model(&cli.model)?;
            let state = Arc::new(AppState::new(dbs, clf, cli.seed));
            let dir = static_dir.clone().or_else(|| Some(PathBuf::from("static")).filter(|d| d.is_dir()));
            let rt = tokio::runtime::Runtime::new()?;
            rt.block_on(nlst_service::serve(state, *port, dir))?;
        }
    }
    Ok(())
}

fn main() {
    let cli = Cli::parse();
    if let Err(e) = run(&cli) {
        eprintln!("error: {e:#}");
        std::process::exit(1);
    }
}
