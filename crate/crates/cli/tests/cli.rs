use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;
use texttemp::storage::{load_results, save_logit_dump, Value};
use texttemp::{
    generate_text, GenerationConfig, LogitSequence, Schema, SyntheticModel, SyntheticModelSpec, TokenSequence,
};

fn texttemp(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_texttemp")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn real(v: &Value) -> f64 {
    match v {
        Value::Real(x) => *x,
        other => panic!("expected a real, got {other:?}"),
    }
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn field(out: &str, key: &str) -> String {
    out.lines()
        .find_map(|l| l.strip_prefix(key).filter(|rest| rest.starts_with(' ')).map(|rest| rest.trim().to_owned()))
        .unwrap_or_else(|| panic!("no {key} in {out}"))
}

fn write_generated(dir: &Path, name: &str, model: &SyntheticModel, t: f64, seed: u64, n_tokens: usize) {
    let text = generate_text(model, &GenerationConfig { temperature: t, n_tokens, seed }).unwrap();
    save_logit_dump(&dir.join(name), &text.logits, &text.observed()).unwrap();
}

#[test]
fn estimate_recovers_hand_instance() {
    let dir = TempDir::new().unwrap();
    let path = dir.path().join("hand.tlog");
    let logits = LogitSequence::from_rows(&[[3.0, 0.0], [1.0, 0.0]]).unwrap();
    save_logit_dump(&path, &logits, &TokenSequence::new(2, vec![0, 1]).unwrap()).unwrap();

    let out = texttemp(&["estimate", "--logits", p(&path)]);
    assert!(out.status.success(), "{}", stderr(&out));
    let text = stdout(&out);
    let t: f64 = field(&text, "t_hat").parse().unwrap();
    assert!((t - 2.2).abs() <= 0.01, "{text}");
    assert_eq!(field(&text, "status"), "converged");
    assert_eq!(field(&text, "steps"), "2");
    assert!(field(&text, "log_likelihood").parse::<f64>().unwrap() < 0.0);

    let records = texttemp(&["estimate", "--logits", p(&path), "--format", "records"]);
    assert!(records.status.success());
    let csv = stdout(&records);
    assert!(csv.starts_with("source,n_steps,t_hat,beta_hat,status,iterations,residual,log_likelihood\n"), "{csv}");
    assert_eq!(csv.lines().count(), 2);
}

#[test]
fn estimate_degenerate_warns_but_succeeds() {
    let dir = TempDir::new().unwrap();
    let path = dir.path().join("flat.tlog");
    let logits = LogitSequence::from_rows(&[[1.0, 1.0, 1.0], [0.0, 0.0, 0.0]]).unwrap();
    save_logit_dump(&path, &logits, &TokenSequence::new(3, vec![0, 2]).unwrap()).unwrap();

    let out = texttemp(&["estimate", "--logits", p(&path)]);
    assert!(out.status.success());
    assert_eq!(field(&stdout(&out), "status"), "degenerate");
    assert!(stderr(&out).contains("warning"), "{}", stderr(&out));
}

#[test]
fn estimate_missing_or_malformed_file_fails_naming_path() {
    let dir = TempDir::new().unwrap();
    let missing = dir.path().join("absent.tlog");
    let out = texttemp(&["estimate", "--logits", p(&missing)]);
    assert!(!out.status.success());
    assert!(stderr(&out).contains("absent.tlog"), "{}", stderr(&out));

    let junk = dir.path().join("junk.tlog");
    fs::write(&junk, b"NOPE0000000000000000").unwrap();
    let out = texttemp(&["estimate", "--logits", p(&junk)]);
    assert!(!out.status.success());
    assert!(stderr(&out).contains("junk.tlog"));
}

#[test]
fn estimate_rejects_bad_bracket() {
    let dir = TempDir::new().unwrap();
    let path = dir.path().join("hand.tlog");
    let logits = LogitSequence::from_rows(&[[2.0, 1.0, 0.0]]).unwrap();
    save_logit_dump(&path, &logits, &TokenSequence::new(3, vec![2]).unwrap()).unwrap();
    let out = texttemp(&["estimate", "--logits", p(&path), "--bracket-lo", "10", "--bracket-hi", "1"]);
    assert!(!out.status.success());
}

#[test]
fn unknown_flags_are_rejected() {
    let out = texttemp(&["sweep", "--gen-seed", "1", "--est-seed", "1", "--seed", "1", "--out", "x", "--bogus"]);
    assert!(!out.status.success());
    assert!(stderr(&out).contains("--bogus"));
}

#[test]
fn help_documents_defaults() {
    let out = texttemp(&["sweep", "--help"]);
    let help = stdout(&out);
    for default in ["[default: 0.001]", "[default: 2.401]", "[default: 0.1]", "[default: 10]", "[default: 200]"] {
        assert!(help.contains(default), "missing {default} in\n{help}");
    }
    let help = stdout(&texttemp(&["estimate", "--help"]));
    assert!(help.contains("[default: 0.01]") && help.contains("[default: 10000]"), "{help}");
}

#[test]
fn sweep_defaults_and_single_temperature() {
    let dir = TempDir::new().unwrap();
    let out_path = dir.path().join("sweep.csv");
    let out = texttemp(&["sweep", "--gen-seed", "3", "--est-seed", "3", "--seed", "11", "--out", p(&out_path)]);
    assert!(out.status.success(), "{}", stderr(&out));
    let table = load_results(&out_path).unwrap();
    assert_eq!(table.schema(), Schema::Sweep);
    assert_eq!(table.len(), 250);
    assert!(field(&stdout(&out), "mae_all").parse::<f64>().unwrap().is_finite());

    let single = dir.path().join("single.csv");
    let args = ["sweep", "--gen-seed", "3", "--est-seed", "3", "--seed", "11", "--tmin", "1", "--tmax", "1"];
    let out = texttemp(&[&args[..], &["--out", p(&single)]].concat());
    assert!(out.status.success(), "{}", stderr(&out));
    let table = load_results(&single).unwrap();
    assert_eq!(table.len(), 10);
    for r in 0..table.len() {
        assert_eq!(real(table.get(r, "gen_temperature").unwrap()), 1.0);
    }
}

#[test]
fn sweep_is_deterministic_across_runs_and_jobs() {
    let dir = TempDir::new().unwrap();
    let run = |name: &str, jobs: &str| {
        let path = dir.path().join(name);
        let args = ["sweep", "--gen-seed", "5", "--est-seed", "6", "--seed", "9", "--tstep", "0.3", "--jobs", jobs];
        let out = texttemp(&[&args[..], &["--out", p(&path)]].concat());
        assert!(out.status.success(), "{}", stderr(&out));
        fs::read(path).unwrap()
    };
    let a = run("a.csv", "1");
    assert_eq!(a, run("b.csv", "1"));
    assert_eq!(a, run("c.csv", "4"));
}

#[test]
fn sweep_rejects_invalid_grid() {
    let dir = TempDir::new().unwrap();
    let path = dir.path().join("x.csv");
    let out =
        texttemp(&["sweep", "--gen-seed", "1", "--est-seed", "1", "--seed", "1", "--tstep", "0", "--out", p(&path)]);
    assert!(!out.status.success());
    assert!(!path.exists());
}

const SMALL_GRID: [&str; 8] = ["--tmin", "0.301", "--tmax", "1.501", "--tstep", "0.4", "--texts", "4"];

#[test]
fn crossgrid_writes_square_and_per_temperature_tables() {
    let dir = TempDir::new().unwrap();
    let spec = dir.path().join("models.toml");
    fs::write(
        &spec,
        "seed = 4\n\n[[model]]\nid = \"a\"\nvocab = 32\nlogit_scale = 1.5\nseed = 1\n\n\
         [[model]]\nid = \"b\"\nvocab = 32\nseed = 2\n\n[[model]]\nid = \"c\"\nvocab = 32\nlogit_scale = 6.0\nseed = 3\n",
    )
    .unwrap();
    let out_path = dir.path().join("grid.csv");
    let per_t = dir.path().join("per_t.csv");
    let out = texttemp(
        &[&["crossgrid", "--models", p(&spec), "--out", p(&out_path), "--per-t-out", p(&per_t)], &SMALL_GRID[..]]
            .concat(),
    );
    assert!(out.status.success(), "{}", stderr(&out));

    let table = load_results(&out_path).unwrap();
    assert_eq!(table.schema(), Schema::CrossGrid);
    assert_eq!(table.len(), 9);
    let per_t = load_results(&per_t).unwrap();
    assert_eq!(per_t.schema(), Schema::CrossGridPerT);
    assert_eq!(per_t.len(), 9 * 4);

    let heat = dir.path().join("heat.csv");
    let out = texttemp(&["report", "--in", p(&out_path), "--emit", "heatmap", "--out", p(&heat)]);
    assert!(out.status.success(), "{}", stderr(&out));
    assert_eq!(load_results(&heat).unwrap().len(), 9);
}

#[test]
fn crossgrid_duplicate_models_give_identical_rows() {
    let dir = TempDir::new().unwrap();
    let spec = dir.path().join("models.toml");
    fs::write(&spec, "[[model]]\nid = \"x\"\nvocab = 32\nseed = 8\n\n[[model]]\nid = \"y\"\nvocab = 32\nseed = 8\n")
        .unwrap();
    let out_path = dir.path().join("grid.csv");
    let out = texttemp(
        &[
            &["crossgrid", "--models", p(&spec), "--seed", "2", "--out", p(&out_path), "--assert-diagonal"],
            &SMALL_GRID[..],
        ]
        .concat(),
    );
    assert!(out.status.success(), "{}", stderr(&out));
    let table = load_results(&out_path).unwrap();
    let maes: Vec<f64> = (0..4).map(|r| real(table.get(r, "mae_all").unwrap())).collect();
    assert!(maes.iter().all(|&m| m == maes[0]), "{maes:?}");
}

#[test]
fn crossgrid_needs_seed_and_matching_vocab() {
    let dir = TempDir::new().unwrap();
    let spec = dir.path().join("models.toml");
    fs::write(&spec, "[[model]]\nid = \"x\"\nvocab = 32\nseed = 1\n\n[[model]]\nid = \"y\"\nvocab = 32\nseed = 2\n")
        .unwrap();
    let out = texttemp(&["crossgrid", "--models", p(&spec), "--out", p(&dir.path().join("o.csv"))]);
    assert!(!out.status.success());
    assert!(stderr(&out).contains("seed"), "{}", stderr(&out));

    fs::write(
        &spec,
        "seed = 1\n[[model]]\nid = \"x\"\nvocab = 32\nseed = 1\n\n[[model]]\nid = \"y\"\nvocab = 16\nseed = 2\n",
    )
    .unwrap();
    let out = texttemp(&["crossgrid", "--models", p(&spec), "--out", p(&dir.path().join("o.csv"))]);
    assert!(!out.status.success());
    assert!(stderr(&out).contains("vocabulary"), "{}", stderr(&out));
}

#[test]
fn corpus_summarises_fixed_temperature_dumps() {
    let dir = TempDir::new().unwrap();
    let dumps = dir.path().join("dumps");
    fs::create_dir(&dumps).unwrap();
    let model = SyntheticModel::build(SyntheticModelSpec::with_seed(21)).unwrap();
    for i in 0..300 {
        write_generated(&dumps, &format!("text{i:03}.tlog"), &model, 1.05, 1000 + i, 200);
    }
    fs::write(dumps.join("notes.txt"), "sidecar metadata").unwrap();

    let out_path = dir.path().join("per_text.csv");
    let summary = dir.path().join("summary.csv");
    let out = texttemp(&[
        "corpus",
        "--dir",
        p(&dumps),
        "--out",
        p(&out_path),
        "--summary-out",
        p(&summary),
        "--corpus-id",
        "fixed",
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    assert_eq!(load_results(&out_path).unwrap().len(), 300);
    let s = load_results(&summary).unwrap();
    assert_eq!(s.schema(), Schema::CorpusSummary);
    let mean = real(s.get(0, "mean_t").unwrap());
    let std = real(s.get(0, "std_t_population").unwrap());
    assert!((1.0..=1.1).contains(&mean), "mean {mean}");
    assert!(std < 0.2, "std {std}");
    assert!(stdout(&out).contains("fixed,300,"));
}

#[test]
fn corpus_single_text_has_zero_spread() {
    let dir = TempDir::new().unwrap();
    let model = SyntheticModel::build(SyntheticModelSpec::with_seed(2)).unwrap();
    write_generated(dir.path(), "only.tlog", &model, 0.8, 5, 200);
    let out_path = dir.path().join("o.csv");
    let out = texttemp(&["corpus", "--dir", p(dir.path()), "--out", p(&out_path)]);
    assert!(out.status.success(), "{}", stderr(&out));
    let line = stdout(&out).lines().nth(1).unwrap().to_owned();
    assert!(line.ends_with(",0"), "{line}");
}

#[test]
fn corpus_empty_directory_fails() {
    let dir = TempDir::new().unwrap();
    let out = texttemp(&["corpus", "--dir", p(dir.path()), "--out", p(&dir.path().join("o.csv"))]);
    assert!(!out.status.success());
    assert!(stderr(&out).contains("no .tlog"), "{}", stderr(&out));
}

#[test]
fn corpus_skips_bad_dump_unless_strict() {
    let dir = TempDir::new().unwrap();
    let dumps = dir.path().join("d");
    fs::create_dir(&dumps).unwrap();
    let model = SyntheticModel::build(SyntheticModelSpec::with_seed(2)).unwrap();
    write_generated(&dumps, "a.tlog", &model, 0.8, 5, 200);
    write_generated(&dumps, "b.tlog", &model, 0.9, 6, 200);
    fs::write(dumps.join("broken.tlog"), b"TLOG").unwrap();

    let out_path = dir.path().join("o.csv");
    let out = texttemp(&["corpus", "--dir", p(&dumps), "--out", p(&out_path)]);
    assert!(out.status.success(), "{}", stderr(&out));
    assert!(stderr(&out).contains("broken.tlog"));
    assert_eq!(load_results(&out_path).unwrap().len(), 2);

    let out = texttemp(&["corpus", "--dir", p(&dumps), "--out", p(&out_path), "--strict"]);
    assert!(!out.status.success());
    assert!(stderr(&out).contains("broken.tlog"));
}

#[test]
fn report_sweep_plot_and_schema_mismatch() {
    let dir = TempDir::new().unwrap();
    let sweep = dir.path().join("sweep.csv");
    let out = texttemp(&["sweep", "--gen-seed", "1", "--est-seed", "1", "--seed", "2", "--out", p(&sweep)]);
    assert!(out.status.success());

    let out = texttemp(&["report", "--in", p(&sweep), "--emit", "sweep-plot"]);
    assert!(out.status.success(), "{}", stderr(&out));
    let text = stdout(&out);
    assert!(text.starts_with("x,y,series\n"));
    assert_eq!(text.lines().filter(|l| l.ends_with(",mean")).count(), 25);
    for l in text.lines().filter(|l| l.ends_with(",identity")) {
        let parts: Vec<&str> = l.split(',').collect();
        assert_eq!(parts[0], parts[1]);
    }

    let out = texttemp(&["report", "--in", p(&sweep), "--emit", "heatmap"]);
    assert!(!out.status.success());
    assert!(stderr(&out).contains("crossgrid"), "{}", stderr(&out));
}

#[test]
fn report_heatmap_on_two_models_has_four_triplets() {
    let dir = TempDir::new().unwrap();
    let spec = dir.path().join("models.toml");
    fs::write(
        &spec,
        "seed = 3\n[[model]]\nid = \"a\"\nvocab = 32\nseed = 1\n\n[[model]]\nid = \"b\"\nvocab = 32\nseed = 2\n",
    )
    .unwrap();
    let grid = dir.path().join("grid.csv");
    let out = texttemp(&[&["crossgrid", "--models", p(&spec), "--out", p(&grid)], &SMALL_GRID[..]].concat());
    assert!(out.status.success(), "{}", stderr(&out));
    let out = texttemp(&["report", "--in", p(&grid), "--emit", "heatmap"]);
    assert!(out.status.success(), "{}", stderr(&out));
    let text = stdout(&out);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "row,column,value");
    assert_eq!(lines.len(), 5, "{text}");
}

#[test]
fn report_identity_sweep_lies_on_diagonal() {
    let dir = TempDir::new().unwrap();
    let path = dir.path().join("identity.csv");
    let mut csv = String::from(
        "gen_model,est_model,temperature_index,gen_temperature,text_index,text_seed,t_hat,status,log_likelihood\n",
    );
    for (ti, t) in [0.5, 1.0, 1.5].iter().enumerate() {
        for k in 0..3 {
            csv.push_str(&format!("m,m,{ti},{t},{k},{k},{t},converged,-10\n"));
        }
    }
    fs::write(&path, csv).unwrap();
    let out_path = dir.path().join("plot.csv");
    let out = texttemp(&["report", "--in", p(&path), "--emit", "sweep-plot", "--out", p(&out_path)]);
    assert!(out.status.success(), "{}", stderr(&out));
    let plot = load_results(&out_path).unwrap();
    assert_eq!(plot.len(), 9 + 3 + 3);
    for r in 0..plot.len() {
        assert_eq!(real(plot.get(r, "x").unwrap()), real(plot.get(r, "y").unwrap()));
    }
}
