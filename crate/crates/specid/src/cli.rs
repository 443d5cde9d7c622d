//! `specid` command line. Exit codes: 0 success, 1 usage error, 2 runtime
//! failure.

use std::error::Error;
use std::ffi::OsString;
use std::fs;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::error::ErrorKind;
use clap::{Parser, Subcommand};
use serde_json::json;
use specid_core::ann;
use specid_core::bench::{evaluate, fit_parzen, run_protocol, Evaluation, Trained};
use specid_core::spectra::{synth_dataset, SynthConfig};

use crate::config::{DatasetSource, RunConfig, SynthParams};
use crate::engine::{Choice, ClassifyResponse, Engine, Prediction};
use crate::io::{load_manifest, read_spectrum_file, write_synth, Corpus};
use crate::persist::{AnnMetadata, ModelBundle, ParzenMetadata};
use crate::report::{self, Format};
use crate::service;

type Failure = Box<dyn Error>;

#[derive(Debug, Parser)]
#[command(
    name = "specid",
    version,
    about = "Classify binned mass spectra with a Parzen-Bayes classifier and a backprop network"
)]
#[command(arg_required_else_help = true)]
struct Cli {
    /// Seed: corpus seed for `synth`, training seed for `train`, the only run seed for `bench`.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Run manifest (JSON).
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Text)]
    format: Format,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Write a synthetic corpus as spectrum files plus manifest.json.
    Synth {
        #[arg(long, value_name = "DIR")]
        out: PathBuf,
        #[arg(long)]
        classes: Option<usize>,
        #[arg(long)]
        train_per_class: Option<usize>,
        #[arg(long)]
        test_per_class: Option<usize>,
    },
    /// Train one or both classifiers and write a model bundle.
    Train {
        /// Dataset manifest; defaults to the config's dataset.
        #[arg(long, value_name = "MANIFEST")]
        data: Option<PathBuf>,
        #[arg(long, value_name = "FILE")]
        model: PathBuf,
        #[arg(long, value_enum, default_value_t = Choice::Both)]
        classifier: Choice,
    },
    /// Classify one spectrum file and print the ranked result.
    Classify {
        #[arg(long, value_name = "FILE")]
        model: PathBuf,
        #[arg(long = "in", value_name = "FILE")]
        input: PathBuf,
        #[arg(long, value_enum, default_value_t = Choice::Both)]
        classifier: Choice,
    },
    /// Run the clean / noise / masked protocol and write report files.
    Bench {
        /// Dataset manifest; defaults to the config's dataset.
        #[arg(long, value_name = "MANIFEST")]
        data: Option<PathBuf>,
        /// Report directory; defaults to the config's output_dir, else ./bench-report.
        #[arg(long, value_name = "DIR")]
        out: Option<PathBuf>,
    },
    /// Serve the HTTP classification API.
    Serve {
        #[arg(long, value_name = "FILE")]
        model: PathBuf,
        #[arg(long, default_value = "127.0.0.1:8080")]
        addr: SocketAddr,
    },
}

/// Parses `args` (program name first), runs the command and returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
        }
    };
    match execute(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            2
        }
    }
}

fn execute(cli: Cli) -> Result<(), Failure> {
    let cfg = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    match cli.command {
        Command::Synth { ref out, classes, train_per_class, test_per_class } => {
            let mut p = match &cfg.dataset {
                DatasetSource::Synth(p) => p.clone(),
                DatasetSource::Manifest(_) => SynthParams::default(),
            };
            p.n_classes = classes.unwrap_or(p.n_classes);
            p.train_per_class = train_per_class.unwrap_or(p.train_per_class);
            p.test_per_class = test_per_class.unwrap_or(p.test_per_class);
            p.seed = cli.seed.unwrap_or(p.seed);
            let manifest = write_synth(out, &SynthConfig::from(&p))?;
            let (train, test) = (p.n_classes * p.train_per_class, p.n_classes * p.test_per_class);
            print!(
                "{}",
                match cli.format {
                    Format::Text => format!("wrote {} ({train} train, {test} test spectra)\n", manifest.display()),
                    Format::Csv => format!("manifest,train,test\n{},{train},{test}\n", manifest.display()),
                    Format::Json => format!("{}\n", json!({"manifest": manifest, "train": train, "test": test})),
                }
            );
            Ok(())
        }
        Command::Train { ref data, ref model, classifier } => train(&cli, &cfg, data.as_deref(), model, classifier),
        Command::Classify { ref model, ref input, classifier } => {
            let engine = Engine::new(ModelBundle::load(model)?);
            let spectrum = read_spectrum_file(input)?;
            let response = engine.classify(&spectrum, classifier)?;
            print!("{}", render_classification(&response, cli.format));
            Ok(())
        }
        Command::Bench { ref data, ref out } => {
            let mut protocol = cfg.protocol()?;
            if let Some(seed) = cli.seed {
                protocol.seeds = vec![seed];
            }
            let corpus = corpus(&cfg, data.as_deref())?;
            let test = corpus.test.ok_or("dataset has no test spectra")?;
            let report = run_protocol(&corpus.train, &test, &protocol)?;
            let dir = out.clone().or(cfg.output_dir.clone()).unwrap_or_else(|| PathBuf::from("bench-report"));
            fs::create_dir_all(&dir).map_err(|e| format!("{}: {e}", dir.display()))?;
            for (name, format) in
                [("report.txt", Format::Text), ("report.csv", Format::Csv), ("report.json", Format::Json)]
            {
                let path = dir.join(name);
                fs::write(&path, report::render(&report, format)).map_err(|e| format!("{}: {e}", path.display()))?;
            }
            print!("{}", report::render(&report, cli.format));
            Ok(())
        }
        Command::Serve { ref model, addr } => {
            let engine = Arc::new(Engine::new(ModelBundle::load(model)?));
            let rt = tokio::runtime::Runtime::new()?;
            rt.block_on(async move {
                let listener = tokio::net::TcpListener::bind(addr).await?;
                eprintln!("listening on {}", listener.local_addr()?);
                service::serve_on(listener, engine).await
            })?;
            Ok(())
        }
    }
}

fn corpus(cfg: &RunConfig, data: Option<&Path>) -> Result<Corpus, Failure> {
    if let Some(path) = data {
        return Ok(load_manifest(path)?);
    }
    Ok(match &cfg.dataset {
        DatasetSource::Synth(p) => {
            let (train, test) = synth_dataset(&SynthConfig::from(p))?;
            Corpus { train, test: Some(test) }
        }
        DatasetSource::Manifest(path) => load_manifest(path)?,
    })
}

fn train(cli: &Cli, cfg: &RunConfig, data: Option<&Path>, model: &Path, choice: Choice) -> Result<(), Failure> {
    let seed = cli.seed.or(cfg.seeds.first().copied()).unwrap_or(1);
    let corpus = corpus(cfg, data)?;
    let data = &corpus.train;

    let mut summary = Vec::new();
    let ann = if matches!(choice, Choice::Ann | Choice::Both) {
        let train_cfg = cfg.train_config(seed)?;
        let (net, log) = ann::train(data, &train_cfg)?;
        let ev = evaluate(Trained::Ann(&net), data)?;
        summary.push(json!({
            "classifier": "ann",
            "epochs": log.epochs.len(),
            "reached_target": log.reached_target,
            "correct": ev.correct(),
            "total": ev.total,
            "accuracy": ev.accuracy(),
        }));
        let meta = AnnMetadata {
            seed,
            epochs: log.epochs.len(),
            reached_target: log.reached_target,
            best_noisy_accuracy: log.best_accuracy,
            noise_level: train_cfg.noise_level,
            epsilon: log.grid.epsilon(),
            grid: AnnMetadata::grid_state(&log.grid),
        };
        Some((net, meta))
    } else {
        None
    };
    let parzen = if matches!(choice, Choice::Parzen | Choice::Both) {
        let settings = cfg.parzen.settings()?;
        let m = fit_parzen(data, &settings, seed)?;
        let ev = evaluate(Trained::Parzen(&m), data)?;
        summary.push(json!({
            "classifier": "parzen",
            "bandwidth": m.bandwidth(),
            "stored_samples": m.stored_samples(),
            "correct": ev.correct(),
            "total": ev.total,
            "accuracy": ev.accuracy(),
        }));
        let meta = ParzenMetadata { seed, replicas: settings.replicas, noise_level: settings.noise_level };
        Some((m, meta))
    } else {
        None
    };
    ModelBundle::new(data.labels(), ann, parzen)?.save(model)?;

    let out = match cli.format {
        Format::Json => format!("{}\n", json!({"model": model, "seed": seed, "models": summary})),
        Format::Csv => {
            let mut s = String::from("classifier,correct,total,accuracy\n");
            for m in &summary {
                s.push_str(&format!(
                    "{},{},{},{}\n",
                    m["classifier"].as_str().unwrap_or(""),
                    m["correct"],
                    m["total"],
                    m["accuracy"]
                ));
            }
            s
        }
        Format::Text => {
            let mut s = String::new();
            for m in &summary {
                let ev = Evaluation::from_counts(m["total"].as_u64().unwrap_or(0), 0);
                let correct = m["correct"].as_u64().unwrap_or(0);
                let acc = Evaluation::from_counts(ev.total, ev.total - correct).percent();
                let detail = match m["classifier"].as_str() {
                    Some("ann") => format!(
                        "epochs {}, target {}",
                        m["epochs"],
                        if m["reached_target"] == true { "reached" } else { "missed" }
                    ),
                    _ => format!(
                        "h {:.4}, {} stored vectors",
                        m["bandwidth"].as_f64().unwrap_or(0.0),
                        m["stored_samples"]
                    ),
                };
                s.push_str(&format!(
                    "{:<7} {detail}; train {correct}/{} {acc}\n",
                    m["classifier"].as_str().unwrap_or(""),
                    ev.total
                ));
            }
            s.push_str(&format!("wrote {}\n", model.display()));
            s
        }
    };
    print!("{out}");
    Ok(())
}

fn predictions(r: &ClassifyResponse) -> impl Iterator<Item = (&'static str, &Prediction)> {
    [("ann", r.ann.as_ref()), ("parzen", r.parzen.as_ref())].into_iter().filter_map(|(n, p)| p.map(|p| (n, p)))
}

/// Ranked classification output; shared with the service's JSON body shape.
pub fn render_classification(r: &ClassifyResponse, format: Format) -> String {
    match format {
        Format::Json => serde_json::to_string(r).expect("response serializes") + "\n",
        Format::Csv => {
            let mut s = String::from("classifier,rank,index,label,score\n");
            for (name, p) in predictions(r) {
                for (i, t) in p.top.iter().enumerate() {
                    s.push_str(&format!("{name},{},{},{},{}\n", i + 1, t.index, t.label, t.score));
                }
            }
            s
        }
        Format::Text => {
            let mut s = String::new();
            for (name, p) in predictions(r) {
                s.push_str(&format!("{name:<7} {}  {:.6}\n", p.label, p.score));
                for (i, t) in p.top.iter().enumerate() {
                    s.push_str(&format!("  {}. {:<12} {:.6}\n", i + 1, t.label, t.score));
                }
            }
            s
        }
    }
}
