mod common;

use proptest::prelude::*;
use texttemp::estimation::{LogitSequence, TokenSequence};
use texttemp::experiments::{run_sweep, SweepConfig, TemperatureGrid};
use texttemp::storage::{
    decode_logit_dump, encode_logit_dump, load_logit_dump, load_results, read_results, save_logit_dump, save_results,
    write_results, StorageError,
};
use texttemp::{
    estimate_temperature, generate_text, GenerationConfig, SolverConfig, SyntheticModel, SyntheticModelSpec,
};

fn dump_strategy() -> impl Strategy<Value = (LogitSequence, TokenSequence)> {
    (1usize..40, 1usize..20).prop_flat_map(|(vocab, steps)| {
        (
            prop::collection::vec(any::<f32>().prop_filter("finite", |v| v.is_finite()), vocab * steps),
            prop::collection::vec(0..vocab as u32, steps),
        )
            .prop_map(move |(data, tokens)| {
                (
                    LogitSequence::from_flat(vocab, data.into_iter().map(f64::from).collect()).unwrap(),
                    TokenSequence::new(vocab, tokens).unwrap(),
                )
            })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn tlog_round_trip_is_exact((logits, tokens) in dump_strategy()) {
        let bytes = encode_logit_dump(&logits, &tokens).unwrap();
        prop_assert_eq!(bytes.len(), 20 + 4 * logits.n_steps() * (logits.vocab() + 1));
        let (l2, t2) = decode_logit_dump(&bytes).unwrap();
        prop_assert_eq!(&l2, &logits);
        prop_assert_eq!(&t2, &tokens);
    }

    #[test]
    fn truncation_is_always_rejected((logits, tokens) in dump_strategy(), cut in any::<prop::sample::Index>()) {
        let bytes = encode_logit_dump(&logits, &tokens).unwrap();
        let len = cut.index(bytes.len());
        prop_assert!(decode_logit_dump(&bytes[..len]).is_err());
    }
}

#[test]
fn full_size_dump_round_trips_through_a_file() {
    let model = SyntheticModel::build(SyntheticModelSpec::with_seed(3)).unwrap();
    let text = generate_text(&model, &GenerationConfig::new(1.0, 11)).unwrap();
    assert_eq!((text.logits.n_steps(), text.logits.vocab()), (200, 128));
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("text.tlog");
    save_logit_dump(&path, &text.logits, &text.observed()).unwrap();
    let (logits, tokens) = load_logit_dump(&path).unwrap();
    // Synthetic logits are f32 values, so the dump loses nothing.
    assert_eq!(logits, text.logits);
    assert_eq!(tokens, text.observed());
    let cfg = SolverConfig::default();
    assert_eq!(
        estimate_temperature(&logits, &tokens, &cfg).unwrap(),
        estimate_temperature(&text.logits, &text.observed(), &cfg).unwrap()
    );
}

#[test]
fn load_errors_name_the_path() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("missing.tlog");
    let err = load_logit_dump(&path).unwrap_err();
    assert!(err.to_string().contains("missing.tlog"), "{err}");
    std::fs::write(&path, b"XLOG0000000000000000").unwrap();
    match load_logit_dump(&path).unwrap_err() {
        StorageError::Path { source, .. } => assert!(matches!(*source, StorageError::BadMagic(_))),
        other => panic!("{other}"),
    }
}

#[test]
fn sweep_table_serialization_is_canonical() {
    let model = SyntheticModel::build(SyntheticModelSpec { vocab: 16, ..SyntheticModelSpec::with_seed(1) }).unwrap();
    let cfg = SweepConfig { n_tokens: 30, texts_per_t: 10, ..SweepConfig::with_seed(5) };
    let sweep = run_sweep(&model, &model, &cfg).unwrap();
    assert_eq!(sweep.len(), 250);

    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("sweep.csv");
    save_results(&path, &sweep.to_table()).unwrap();
    let first = std::fs::read(&path).unwrap();
    let table = load_results(&path).unwrap();
    assert_eq!(table.len(), 250);
    let mut again = Vec::new();
    write_results(&table, &mut again).unwrap();
    assert_eq!(first, again);
    assert_eq!(read_results(first.as_slice()).unwrap(), table);

    let single = SweepConfig { grid: TemperatureGrid::single(1.0).unwrap(), ..cfg };
    assert_eq!(run_sweep(&model, &model, &single).unwrap().to_table().len(), 10);
}
