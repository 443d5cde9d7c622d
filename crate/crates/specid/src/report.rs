//! Rendering of experiment reports as a text table, CSV or JSON.
//!
//! Rows keep the protocol order: classifier, then condition, then seed with
//! the pooled mean last. Percentages carry two decimals; CSV and JSON also
//! carry the full-precision accuracy. Failed cells render as `—` with the
//! failure listed under the table.

use serde::Serialize;
use specid_core::bench::{Evaluation, ExperimentReport, ReportRow, Scope};

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Text,
    Csv,
    Json,
}

pub fn render(report: &ExperimentReport, format: Format) -> String {
    match format {
        Format::Text => render_text(report),
        Format::Csv => render_csv(report),
        Format::Json => render_json(report),
    }
}

const MISSING: &str = "—";

fn scope_label(scope: Scope) -> String {
    match scope {
        Scope::Seed(s) => format!("seed {s}"),
        Scope::Mean => "mean".to_string(),
    }
}

fn table(rows: &[Vec<String>]) -> String {
    let n = rows.iter().map(Vec::len).max().unwrap_or(0);
    let widths: Vec<usize> =
        (0..n).map(|i| rows.iter().filter_map(|r| r.get(i)).map(|c| c.chars().count()).max().unwrap_or(0)).collect();
    let mut out = String::new();
    for r in rows {
        let line: Vec<String> = r.iter().zip(&widths).map(|(c, w)| format!("{c:<w$}")).collect();
        out.push_str(line.join("  ").trim_end());
        out.push('\n');
    }
    out
}

pub fn render_text(report: &ExperimentReport) -> String {
    let mut notes = Vec::new();
    let mut training =
        vec![["seed", "classifier", "epochs", "target", "h", "stored", "correct/total", "train accuracy"]
            .map(String::from)
            .to_vec()];
    for t in &report.training {
        match &t.ann {
            Ok(a) => training.push(vec![
                t.seed.to_string(),
                "ann".into(),
                a.epochs.to_string(),
                if a.reached_target { "reached" } else { "missed" }.into(),
                MISSING.into(),
                MISSING.into(),
                format!("{}/{}", a.train.correct(), a.train.total),
                a.train.percent(),
            ]),
            Err(e) => {
                training.push(failed_training(t.seed, "ann"));
                notes.push(format!("ann, seed {}: {e}", t.seed));
            }
        }
        match &t.parzen {
            Ok(p) => training.push(vec![
                t.seed.to_string(),
                "parzen".into(),
                MISSING.into(),
                MISSING.into(),
                format!("{:.4}", p.bandwidth),
                p.stored_samples.to_string(),
                format!("{}/{}", p.train.correct(), p.train.total),
                p.train.percent(),
            ]),
            Err(e) => {
                training.push(failed_training(t.seed, "parzen"));
                notes.push(format!("parzen, seed {}: {e}", t.seed));
            }
        }
    }

    let mut test = vec![["classifier", "condition", "scope", "correct/total", "misclassified", "accuracy"]
        .map(String::from)
        .to_vec()];
    for r in &report.rows {
        let head = vec![r.classifier.name().to_string(), r.condition.label(), scope_label(r.scope)];
        let tail = match &r.outcome {
            Ok(e) => vec![format!("{}/{}", e.correct(), e.total), e.misclassified.to_string(), e.percent()],
            Err(msg) => {
                if r.scope == Scope::Mean {
                    notes.push(format!("{}, {}, mean: {msg}", r.classifier.name(), r.condition.label()));
                }
                vec![MISSING.into(), MISSING.into(), MISSING.into()]
            }
        };
        test.push(head.into_iter().chain(tail).collect());
    }

    let mut out = format!(
        "classes: {}  seeds: {}\n\nTraining set\n",
        report.labels.len(),
        report.seeds.iter().map(u64::to_string).collect::<Vec<_>>().join(",")
    );
    out.push_str(&table(&training));
    out.push_str("\nTest set\n");
    out.push_str(&table(&test));
    if !notes.is_empty() {
        out.push_str("\nFailures\n");
        for n in notes {
            out.push_str(&format!("  {n}\n"));
        }
    }
    out
}

fn failed_training(seed: u64, name: &str) -> Vec<String> {
    let mut row = vec![seed.to_string(), name.to_string()];
    row.extend(std::iter::repeat_n(MISSING.to_string(), 6));
    row
}

pub const CSV_HEADER: [&str; 10] =
    ["classifier", "condition", "scope", "seed", "total", "misclassified", "correct", "accuracy", "percent", "error"];

pub fn render_csv(report: &ExperimentReport) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(CSV_HEADER).expect("in-memory write");
    for r in &report.rows {
        let seed = match r.scope {
            Scope::Seed(s) => s.to_string(),
            Scope::Mean => String::new(),
        };
        let mut rec = vec![r.classifier.name().to_string(), r.condition.label(), scope_label(r.scope), seed];
        match &r.outcome {
            Ok(e) => rec.extend([
                e.total.to_string(),
                e.misclassified.to_string(),
                e.correct().to_string(),
                e.accuracy().to_string(),
                e.percent(),
                String::new(),
            ]),
            Err(msg) => {
                rec.extend(std::iter::repeat_n(String::new(), 5));
                rec.push(msg.clone());
            }
        }
        w.write_record(&rec).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("CSV is UTF-8")
}

#[derive(Serialize)]
struct EvaluationDoc {
    total: u64,
    misclassified: u64,
    correct: u64,
    accuracy: f64,
    percent: String,
    /// `confusion[true][predicted]`; empty for bare counts.
    confusion: Vec<Vec<u64>>,
}

impl From<&Evaluation> for EvaluationDoc {
    fn from(e: &Evaluation) -> Self {
        let c = &e.confusion;
        Self {
            total: e.total,
            misclassified: e.misclassified,
            correct: e.correct(),
            accuracy: e.accuracy(),
            percent: e.percent(),
            confusion: (0..c.size()).map(|i| c.row(i).to_vec()).collect(),
        }
    }
}

#[derive(Serialize)]
#[serde(untagged)]
enum Outcome<T> {
    Ok(T),
    Failed { error: String },
}

impl<T> Outcome<T> {
    fn from_result<U>(r: &Result<U, String>, f: impl FnOnce(&U) -> T) -> Self {
        match r {
            Ok(v) => Outcome::Ok(f(v)),
            Err(e) => Outcome::Failed { error: e.clone() },
        }
    }
}

#[derive(Serialize)]
struct AnnTrainingDoc {
    epochs: usize,
    reached_target: bool,
    noisy_accuracy: f64,
    train: EvaluationDoc,
}

#[derive(Serialize)]
struct ParzenTrainingDoc {
    bandwidth: f64,
    stored_samples: usize,
    train: EvaluationDoc,
}

#[derive(Serialize)]
struct TrainingDoc {
    seed: u64,
    ann: Outcome<AnnTrainingDoc>,
    parzen: Outcome<ParzenTrainingDoc>,
}

#[derive(Serialize)]
struct RowDoc {
    classifier: &'static str,
    condition: String,
    scope: String,
    seed: Option<u64>,
    #[serde(flatten)]
    outcome: Outcome<EvaluationDoc>,
}

#[derive(Serialize)]
struct ReportDoc {
    labels: Vec<String>,
    seeds: Vec<u64>,
    conditions: Vec<String>,
    training: Vec<TrainingDoc>,
    rows: Vec<RowDoc>,
}

fn row_doc(r: &ReportRow) -> RowDoc {
    RowDoc {
        classifier: r.classifier.name(),
        condition: r.condition.label(),
        scope: scope_label(r.scope),
        seed: match r.scope {
            Scope::Seed(s) => Some(s),
            Scope::Mean => None,
        },
        outcome: Outcome::from_result(&r.outcome, |e| EvaluationDoc::from(e)),
    }
}

pub fn render_json(report: &ExperimentReport) -> String {
    let doc = ReportDoc {
        labels: report.labels.clone(),
        seeds: report.seeds.clone(),
        conditions: report.conditions.iter().map(|c| c.label()).collect(),
        training: report
            .training
            .iter()
            .map(|t| TrainingDoc {
                seed: t.seed,
                ann: Outcome::from_result(&t.ann, |a| AnnTrainingDoc {
                    epochs: a.epochs,
                    reached_target: a.reached_target,
                    noisy_accuracy: a.noisy_accuracy,
                    train: EvaluationDoc::from(&a.train),
                }),
                parzen: Outcome::from_result(&t.parzen, |p| ParzenTrainingDoc {
                    bandwidth: p.bandwidth,
                    stored_samples: p.stored_samples,
                    train: EvaluationDoc::from(&p.train),
                }),
            })
            .collect(),
        rows: report.rows.iter().map(row_doc).collect(),
    };
    serde_json::to_string(&doc).expect("report serializes") + "\n"
}
