mod common;

use common::*;
use monolog_core::eval::{attach_parses, evaluate, load, load_med, DatasetKind, Monotonicity};
use monolog_core::Label;

#[test]
fn mini_corpus_report() {
    let pairs = load_pairs("mini");
    let r = evaluate(DatasetKind::Sick, &pairs, &engine(), 2).unwrap();
    assert_eq!(r.total, 60);
    assert_eq!(r.accuracy, 1.0);
    assert_eq!(r.confusion, [[27, 0, 0], [0, 14, 0], [0, 0, 19]]);
    assert!(r.flagged.is_empty());
    let json: serde_json::Value = serde_json::from_str(&r.to_json()).unwrap();
    assert_eq!(json["pairs"].as_array().unwrap().len(), 60);
    assert_eq!(json["config"]["search"]["beam_width"], 10);
    assert!(r.summary().contains("acc."));
}

#[test]
fn results_do_not_depend_on_thread_count() {
    let pairs = load_pairs("mini");
    let one = evaluate(DatasetKind::Sick, &pairs, &engine(), 1).unwrap();
    let four = evaluate(DatasetKind::Sick, &pairs, &engine(), 4).unwrap();
    assert_eq!(one, four);
}

#[test]
fn med_subset_maps_contradictions_to_neutral() {
    let mut pairs = load_med(&data("med/pairs.tsv")).unwrap();
    assert!(attach_parses(&mut pairs, &data("med/parses")).is_empty());
    assert_eq!(pairs.iter().filter(|p| p.monotonicity == Some(Monotonicity::Downward)).count(), 3);
    let r = evaluate(DatasetKind::Med, &pairs, &engine(), 0).unwrap();
    let negation = r.pairs.iter().find(|p| p.id == "47").unwrap();
    assert_eq!(negation.predicted, Label::Neutral);
    assert_eq!(r.accuracy, 1.0);
    let med = r.med.clone().unwrap();
    assert_eq!((med.upward_count, med.downward_count), (5, 3));
    assert_eq!((med.upward, med.downward, med.all), (1.0, 1.0, 1.0));
    assert!(r.summary().contains("Down"));
}

#[test]
fn missing_parses_are_flagged_as_neutral() {
    let mut pairs = load(DatasetKind::Sick, &data("mini/pairs.tsv")).unwrap();
    pairs.truncate(3);
    let dir = tempfile::tempdir().unwrap();
    std::fs::copy(data("mini/parses/1.conllu"), dir.path().join("1.conllu")).unwrap();
    std::fs::write(dir.path().join("2.conllu"), "not conllu\n").unwrap();
    let problems = attach_parses(&mut pairs, dir.path());
    assert_eq!(problems.len(), 2);
    let r = evaluate(DatasetKind::Sick, &pairs, &engine(), 1).unwrap();
    assert_eq!(r.flagged, vec!["2", "3"]);
    assert!(r.pairs[1..].iter().all(|p| p.predicted == Label::Neutral && p.error.is_some()));
    assert_eq!(r.pairs[0].predicted, Label::Entail);
}
