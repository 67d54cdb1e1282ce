mod common;

use std::path::Path;

use sumprobe_core::corpus::{save_corpus, synthetic_corpus, SynthSpec};
use sumprobe_core::harness::{rebuild_report, run_experiment, ExperimentSpec};

const TINY_MODEL: &str = r#"
[model]
word_dim = 6
sentence_dim = 9
layers = 1
width = 8
heads = 2
ff_mult = 2
decoder_hidden = 7
decoder_state = 6
attention = 5
[train]
batch_size = 8
max_epochs = 2
extract_k = 2
"#;

fn domain(dir: &Path, name: &str, seed: u64, window: Option<usize>) {
    let spec = SynthSpec {
        documents: 20,
        seed,
        salient_window: window,
        ..SynthSpec::default()
    };
    save_corpus(&synthetic_corpus(name, &spec), &dir.join(name)).unwrap();
}

fn spec(dir: &Path, text: &str) -> ExperimentSpec {
    ExperimentSpec::parse(text, dir).unwrap()
}

fn read(p: &Path) -> Vec<u8> {
    std::fs::read(p).unwrap()
}

#[test]
fn baselines_only_cross_domain_table() {
    let d = tempfile::tempdir().unwrap();
    domain(d.path(), "FoxNews", 1, Some(2));
    domain(d.path(), "TheGuardian", 2, None);
    let s = spec(
        d.path(),
        r#"
        [experiment]
        kind = "cross-domain"
        output = "out"
        models = false
        [data.domains]
        FoxNews = "FoxNews"
        TheGuardian = "TheGuardian"
        "#,
    );
    let run = run_experiment(&s, false).unwrap();
    let rows = &run.report.rows;
    assert_eq!(run.failures(), 0);
    let labels: Vec<(&str, &str)> = rows
        .iter()
        .map(|r| (r.group.as_str(), r.label.as_str()))
        .collect();
    assert_eq!(
        labels,
        [
            ("FoxNews", "Lead"),
            ("FoxNews", "Oracle"),
            ("TheGuardian", "Lead"),
            ("TheGuardian", "Oracle")
        ]
    );
    // Published reference values ride along in the last three columns.
    assert_eq!(rows[0].values.len(), 6);
    assert!(rows[0].values[3].is_some());
    for pair in rows.chunks(2) {
        assert!(pair[1].values[0].unwrap() >= pair[0].values[0].unwrap());
    }
    let text = std::fs::read_to_string(run.dir.join("report.txt")).unwrap();
    assert!(text.contains("Oracle"));
    assert!(run
        .dir
        .join("cells/oracle/foxnews/diagnostics.tsv")
        .exists());
    assert!(run.dir.join("plots/plot.py").exists());
}

#[test]
fn failed_cells_are_reported_and_resume_reuses_work() {
    let d = tempfile::tempdir().unwrap();
    std::fs::write(d.path().join("broken.txt"), "the not-a-number\n").unwrap();
    let text = format!(
        r#"
        [experiment]
        kind = "single"
        output = "out"
        decoders = ["seqlab", "lead"]
        embeddings = ["random", "pretrained"]
        baselines = false
        [data]
        synthetic = {{ documents = 20, seed = 3 }}
        table = "broken.txt"
        {TINY_MODEL}
        "#
    );
    let s = spec(d.path(), &text);
    let run = run_experiment(&s, false).unwrap();
    assert_eq!(run.report.rows.len(), 3);
    assert_eq!(run.failures(), 1);
    let failed = run.report.rows.iter().find(|r| !r.ok()).unwrap();
    assert!(failed.label.contains("pretrained"), "{}", failed.label);
    assert!(failed.values.iter().all(Option::is_none));
    let txt = std::fs::read_to_string(run.dir.join("report.txt")).unwrap();
    assert!(txt.contains("FAILED"));
    assert!(txt.contains("1 failed cell(s)"));

    // Resume: the finished model and cells are reused untouched.
    let ckpt = run.dir.join("models/lstm-seqlab-random/model.ckpt");
    let before = std::fs::metadata(&ckpt).unwrap().modified().unwrap();
    let cell = run.dir.join("cells/lstm-seqlab-random/train/cell.json");
    let cell_before = read(&cell);
    let again = run_experiment(&s, true).unwrap();
    assert_eq!(
        std::fs::metadata(&ckpt).unwrap().modified().unwrap(),
        before
    );
    assert_eq!(read(&cell), cell_before);
    assert_eq!(again.report.rows[0], run.report.rows[0]);
    assert_eq!(again.failures(), 1);

    let rebuilt = rebuild_report(&run.dir).unwrap();
    assert_eq!(rebuilt, again.report);
}

#[test]
fn reruns_are_byte_identical() {
    let d = tempfile::tempdir().unwrap();
    let body = |out: &str| {
        format!(
            r#"
            [experiment]
            kind = "single"
            output = "{out}"
            encoders = ["recurrent", "self-attention"]
            decoders = ["pointer"]
            [data]
            synthetic = {{ documents = 20, seed = 4 }}
            {TINY_MODEL}
            "#
        )
    };
    let a = run_experiment(&spec(d.path(), &body("a")), false).unwrap();
    let b = run_experiment(&spec(d.path(), &body("b")), false).unwrap();
    for f in [
        "report.tsv",
        "report.txt",
        "models/lstm-pointer/model.ckpt",
        "models/transformer-pointer/model.ckpt",
        "models/transformer-pointer/train.json",
    ] {
        assert_eq!(read(&a.dir.join(f)), read(&b.dir.join(f)), "{f}");
    }
}

#[test]
fn shuffled_lead_is_unchanged() {
    let d = tempfile::tempdir().unwrap();
    let text = format!(
        r#"
        [experiment]
        kind = "shuffle"
        output = "out"
        decoders = ["lead"]
        seeds = [0, 1]
        [data]
        synthetic = {{ documents = 20, seed = 5 }}
        {TINY_MODEL}
        "#
    );
    let run = run_experiment(&spec(d.path(), &text), false).unwrap();
    assert_eq!(run.failures(), 0);
    assert_eq!(run.report.rows.len(), 2);
    for row in &run.report.rows {
        assert_eq!(row.values.len(), 9);
        assert_eq!(&row.values[6..], &[Some(0.0); 3]);
    }
}

#[test]
fn disentangle_has_one_row_per_pair() {
    let d = tempfile::tempdir().unwrap();
    let text = format!(
        r#"
        [experiment]
        kind = "disentangle"
        output = "out"
        [data]
        synthetic = {{ documents = 20, seed = 6 }}
        {TINY_MODEL}
        "#
    );
    let run = run_experiment(&spec(d.path(), &text), false).unwrap();
    assert_eq!(run.failures(), 0);
    let rows = &run.report.rows;
    assert_eq!(rows.len(), 5);
    assert!(rows[0].label.starts_with("(1,0)"));
    assert!(rows.iter().all(|r| r.values[3].is_some()));
    assert!(run.report.plan.notes.iter().any(|n| n.contains("40.08")));
}

#[test]
fn knowledge_and_rl_stack_smoke() {
    let d = tempfile::tempdir().unwrap();
    let pre = synthetic_corpus(
        "pre",
        &SynthSpec {
            documents: 20,
            seed: 8,
            ..SynthSpec::default()
        },
    );
    save_corpus(&pre, &d.path().join("pre")).unwrap();
    let knowledge = format!(
        r#"
        [experiment]
        kind = "knowledge"
        output = "k"
        [data]
        synthetic = {{ documents = 20, seed = 7 }}
        pretrain = "pre"
        {TINY_MODEL}
        "#
    );
    let run = run_experiment(&spec(d.path(), &knowledge), false).unwrap();
    assert_eq!(run.failures(), 0);
    assert_eq!(run.report.rows.len(), 2);
    assert!(run.report.rows[1].label.ends_with("+ pretrain"));

    let rl = format!(
        r#"
        [experiment]
        kind = "rl-stack"
        output = "rl"
        rl_epochs = 1
        [data]
        synthetic = {{ documents = 20, seed = 7 }}
        {TINY_MODEL}
        "#
    );
    let run = run_experiment(&spec(d.path(), &rl), false).unwrap();
    assert_eq!(run.failures(), 0);
    assert_eq!(run.report.rows[1].label, "LSTM+Pointer + RL");
    assert!(run.dir.join("models/lstm-pointer-rl/model.ckpt").exists());
}
