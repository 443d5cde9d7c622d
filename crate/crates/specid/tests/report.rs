use specid::report::{render, render_csv, Format, CSV_HEADER};
use specid_core::bench::{
    AnnTrainingSummary, ClassifierKind, Condition, Evaluation, ExperimentReport, ReportRow, Scope, SeedTraining,
};
use specid_core::MaskSpec;

/// Four conditions over 385 test spectra with known misclassification counts.
fn report() -> ExperimentReport {
    let conditions = vec![
        Condition::Clean,
        Condition::Noise { level: 0.05 },
        Condition::Noise { level: 0.10 },
        Condition::Masked(MaskSpec::LOW_MASS),
    ];
    let counts = [16, 35, 33, 146];
    let mut rows = Vec::new();
    for (cond, &m) in conditions.iter().zip(&counts) {
        for scope in [Scope::Seed(1), Scope::Mean] {
            rows.push(ReportRow {
                classifier: ClassifierKind::Ann,
                condition: *cond,
                scope,
                outcome: Ok(Evaluation::from_counts(385, m)),
            });
        }
    }
    for (i, cond) in conditions.iter().enumerate() {
        let outcome = if i == 1 { Err("no model".to_string()) } else { Ok(Evaluation::from_counts(385, 84)) };
        for scope in [Scope::Seed(1), Scope::Mean] {
            rows.push(ReportRow {
                classifier: ClassifierKind::Parzen,
                condition: *cond,
                scope,
                outcome: outcome.clone(),
            });
        }
    }
    ExperimentReport {
        labels: (0..45).map(|i| format!("C{i}")).collect(),
        conditions,
        seeds: vec![1],
        rows,
        training: vec![SeedTraining {
            seed: 1,
            ann: Ok(AnnTrainingSummary {
                epochs: 300,
                reached_target: true,
                noisy_accuracy: 1.0,
                train: Evaluation::from_counts(90, 0),
            }),
            parzen: Err("bandwidth selection failed".into()),
        }],
    }
}

#[test]
fn text_shows_exact_percentages() {
    let text = render(&report(), Format::Text);
    for p in ["95.84%", "90.91%", "91.43%", "62.08%", "78.18%"] {
        assert!(text.contains(p), "{p} missing from\n{text}");
    }
    assert!(text.contains("369/385"));
    assert!(text.contains("—"));
    assert!(text.contains("bandwidth selection failed"));
    assert!(text.contains("no model"));
    assert_eq!(text, render(&report(), Format::Text));
}

#[test]
fn csv_round_trips() {
    let csv_text = render_csv(&report());
    let mut r = csv::Reader::from_reader(csv_text.as_bytes());
    assert_eq!(r.headers().unwrap().iter().collect::<Vec<_>>(), CSV_HEADER);
    let rows: Vec<csv::StringRecord> = r.records().map(Result::unwrap).collect();
    assert_eq!(rows.len(), report().rows.len());
    let first = &rows[0];
    assert_eq!(&first[0], "ann");
    assert_eq!(&first[3], "1");
    assert_eq!(first[4].parse::<u64>().unwrap(), 385);
    assert_eq!(first[5].parse::<u64>().unwrap(), 16);
    assert_eq!(first[7].parse::<f64>().unwrap(), 369.0 / 385.0);
    assert_eq!(&first[8], "95.84%");
    assert_eq!(&rows[1][2], "mean");
    assert_eq!(&rows[1][3], "");
    let failed = rows.iter().find(|r| !r[9].is_empty()).unwrap();
    assert_eq!((&failed[0], &failed[4], &failed[9]), ("parzen", "", "no model"));
}

#[test]
fn json_carries_counts_and_failures() {
    let v: serde_json::Value = serde_json::from_str(&render(&report(), Format::Json)).unwrap();
    let rows = v["rows"].as_array().unwrap();
    assert_eq!(rows[0]["misclassified"], 16);
    assert_eq!(rows[0]["percent"], "95.84%");
    assert_eq!(rows[0]["seed"], 1);
    assert_eq!(rows[1]["seed"], serde_json::Value::Null);
    assert!(rows.iter().any(|r| r["error"] == "no model"));
    assert_eq!(v["training"][0]["parzen"]["error"], "bandwidth selection failed");
    assert_eq!(v["conditions"].as_array().unwrap().len(), 4);
}
