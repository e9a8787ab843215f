#![allow(dead_code)]

use std::collections::{HashSet, VecDeque};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use monolog_core::chunker::all_chunks;
use monolog_core::contradiction::check_contradiction;
use monolog_core::conllu::parse_conllu;
use monolog_core::eval::{attach_parses, load_sick, NliPair};
use monolog_core::graph::{build_graph, SentenceGraph};
use monolog_core::kb::{KnowledgeBase, Provenance};
use monolog_core::polarity::{binarize, polarize_sentence, Polarity, QuantifierLexicon};
use monolog_core::scoring::{euclidean, OfflineScorer, ParaphraseTable, Phrase, Scorer, Word};
use monolog_core::search::{is_goal, state_key, Engine, EngineConfig, Label};
use monolog_core::{Sentence, UDToken};
use proptest::prelude::*;
use proptest::test_runner::TestCaseError;

pub fn data(rel: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/data").join(rel)
}

pub fn read_conllu(rel: &str) -> Vec<Sentence> {
    parse_conllu(&std::fs::read_to_string(data(rel)).unwrap()).unwrap()
}

/// Pairs of a SICK-format fixture directory (`pairs.tsv` plus `parses/`).
pub fn load_pairs(dir: &str) -> Vec<NliPair> {
    let mut pairs = load_sick(&data(dir).join("pairs.tsv")).unwrap();
    let problems = attach_parses(&mut pairs, &data(dir).join("parses"));
    assert!(problems.is_empty(), "{:?}", problems);
    pairs
}

pub fn engine() -> Engine {
    Engine::offline(Arc::new(KnowledgeBase::bundled()), EngineConfig::default())
}

pub fn shared_engine() -> &'static Engine {
    static E: std::sync::OnceLock<Engine> = std::sync::OnceLock::new();
    E.get_or_init(engine)
}

pub fn motorcyclist_engine(config: EngineConfig) -> Engine {
    let kb = Arc::new(KnowledgeBase::load_dump(&data("motorcyclist/kb.tsv"), Provenance::Handcrafted).unwrap());
    let table = ParaphraseTable::load(&data("motorcyclist/paraphrases.tsv")).unwrap();
    let scorer = OfflineScorer::new(kb.clone()).with_table(table);
    Engine::new(kb, Arc::new(scorer), config)
}

pub fn motorcyclist_pair() -> (Sentence, Sentence) {
    let mut v = read_conllu("motorcyclist/pair.conllu");
    let h = v.pop().unwrap();
    (v.pop().unwrap(), h)
}

/// Golden sentences with their hand-derived `# marks = ...` line.
pub fn polarity_golden() -> Vec<(Sentence, Vec<Polarity>)> {
    let text = std::fs::read_to_string(data("polarity_golden.conllu")).unwrap();
    let marks: Vec<Vec<Polarity>> = text
        .lines()
        .filter_map(|l| l.strip_prefix("# marks = "))
        .map(|m| m.chars().map(|c| Polarity::from_symbol(c).unwrap()).collect())
        .collect();
    let sents = parse_conllu(&text).unwrap();
    assert_eq!(sents.len(), marks.len());
    sents.into_iter().zip(marks).collect()
}

pub fn polarity_mismatches() -> Vec<String> {
    let lex = QuantifierLexicon::default();
    polarity_golden()
        .into_iter()
        .filter_map(|(s, want)| {
            let got = polarize_sentence(&s, &lex).unwrap().token_marks().to_vec();
            (got != want).then(|| {
                let show = |v: &[Polarity]| v.iter().map(|p| p.symbol()).collect::<String>();
                format!("{}: expected {} got {}", s.text, show(&want), show(&got))
            })
        })
        .collect()
}

pub fn chunk_texts(s: &Sentence) -> Vec<String> {
    all_chunks(&build_graph(s)).into_iter().map(|c| c.text).collect()
}

pub fn chunk_of(s: &Sentence, anchor_form: &str) -> String {
    let g = build_graph(s);
    let id = s.tokens.iter().find(|t| t.form == anchor_form).unwrap().id;
    monolog_core::chunker::chunks_for(&g).into_iter().find(|c| c.anchor == id).unwrap().text
}

/// Pairs whose predicted label differs from gold, as `id: gold -> predicted`.
pub fn label_mismatches(engine: &Engine, pairs: &[NliPair]) -> Vec<String> {
    pairs
        .iter()
        .filter_map(|p| {
            let r = engine.classify(p.premise.as_ref().unwrap(), p.hypothesis.as_ref().unwrap()).unwrap();
            (r.label != p.gold).then(|| format!("{} ({} / {}): {} -> {}", p.id, p.premise_text, p.hypothesis_text, p.gold, r.label))
        })
        .collect()
}

// ---- random sentences ----

const LEMMAS: &[(&str, &str)] = &[
    ("dog", "NOUN"),
    ("animal", "NOUN"),
    ("man", "NOUN"),
    ("person", "NOUN"),
    ("park", "NOUN"),
    ("run", "VERB"),
    ("eat", "VERB"),
    ("move", "VERB"),
    ("tall", "ADJ"),
    ("small", "ADJ"),
    ("a", "DET"),
    ("every", "DET"),
    ("no", "DET"),
    ("the", "DET"),
    ("not", "PART"),
    ("in", "ADP"),
    ("be", "AUX"),
    ("quickly", "ADV"),
];
const RELS: &[&str] = &["nsubj", "obj", "obl", "det", "amod", "advmod", "case", "aux", "nmod", "conj"];

/// A projective tree over `n` tokens drawn from `seed`.
pub fn random_sentence(n: usize, seed: &[u32]) -> Sentence {
    let mut it = seed.iter().copied().cycle();
    let mut heads = vec![0usize; n + 1];
    fn build(l: usize, r: usize, parent: usize, heads: &mut [usize], it: &mut dyn Iterator<Item = u32>) {
        if l > r {
            return;
        }
        let h = l + (it.next().unwrap() as usize) % (r - l + 1);
        heads[h] = parent;
        // split each side into consecutive dependent subtrees
        let split = |mut a: usize, b: usize, heads: &mut [usize], it: &mut dyn Iterator<Item = u32>| {
            while a <= b && b != usize::MAX {
                let end = a + (it.next().unwrap() as usize) % (b - a + 1);
                build(a, end, h, heads, it);
                a = end + 1;
            }
        };
        if h > l {
            split(l, h - 1, heads, it);
        }
        split(h + 1, r, heads, it);
    }
    build(1, n, 0, &mut heads, &mut it);
    let tokens = (1..=n)
        .map(|i| {
            let (lemma, upos) = LEMMAS[it.next().unwrap() as usize % LEMMAS.len()];
            let rel = if heads[i] == 0 { "root" } else { RELS[it.next().unwrap() as usize % RELS.len()] };
            UDToken::new(i, lemma, lemma, upos, heads[i], rel)
        })
        .collect();
    Sentence::from_tokens(tokens)
}

pub fn sentence_strategy(max_len: usize) -> impl Strategy<Value = Sentence> {
    (1..=max_len, prop::collection::vec(any::<u32>(), 64)).prop_map(|(n, seed)| random_sentence(n, &seed))
}

pub fn phrase_strategy() -> impl Strategy<Value = Phrase> {
    prop::collection::vec(0..LEMMAS.len(), 0..6).prop_map(|ix| {
        let lemmas: Vec<&str> = ix.iter().map(|&i| LEMMAS[i].0).collect();
        Phrase::new(&lemmas.join(" "), &lemmas)
    })
}

pub fn word_strategy() -> impl Strategy<Value = Word> {
    (0..LEMMAS.len()).prop_map(|i| Word::new(LEMMAS[i].0, LEMMAS[i].1))
}

// ---- properties shared by the property suite and the acceptance run ----

pub fn prop_leaf_order(s: &Sentence) -> Result<(), TestCaseError> {
    let t = binarize(s).map_err(|e| TestCaseError::fail(e.to_string()))?;
    let ids: Vec<usize> = t.leaves().iter().map(|t| t.id).collect();
    prop_assert_eq!(ids, (1..=s.len()).collect::<Vec<_>>());
    Ok(())
}

/// Inserts two negators on the root and checks every original token keeps its mark.
pub fn prop_double_flip(s: &Sentence) -> Result<(), TestCaseError> {
    let lex = QuantifierLexicon::default();
    let before = polarize_sentence(s, &lex).unwrap().token_marks().to_vec();
    let root = s.root().unwrap();
    let shift = |id: usize| if id >= root { id + 2 } else { id };
    let mut tokens: Vec<UDToken> = s
        .tokens
        .iter()
        .map(|t| {
            let mut t = t.clone();
            t.id = shift(t.id);
            if t.head != 0 {
                t.head = shift(t.head);
            }
            t
        })
        .collect();
    for k in 0..2 {
        tokens.push(UDToken::new(root + k, "not", "not", "PART", root + 2, "advmod"));
    }
    tokens.sort_by_key(|t| t.id);
    let wrapped = Sentence::from_tokens(tokens);
    let after = polarize_sentence(&wrapped, &lex).unwrap().token_marks().to_vec();
    for id in 1..=s.len() {
        prop_assert_eq!(before[id - 1], after[shift(id) - 1], "token {} of {:?}", id, s.lemmas());
    }
    Ok(())
}

pub fn prop_alignment_injective(engine: &Engine, p: &Sentence, h: &Sentence) -> Result<(), TestCaseError> {
    let (_, _, a) = engine.align(p, h).unwrap();
    prop_assert!(a.is_injective());
    for pair in a.pairs() {
        prop_assert!(pair.score >= engine.config.align_threshold && pair.score <= 1.0);
    }
    Ok(())
}

pub fn prop_metric(scorer: &OfflineScorer, a: &Phrase, b: &Phrase, c: &Phrase) -> Result<(), TestCaseError> {
    let v = scorer.embed(&[a.clone(), b.clone(), c.clone()]).unwrap();
    let d = |i: usize, j: usize| euclidean(&v[i], &v[j]);
    prop_assert_eq!(d(0, 0), 0.0);
    prop_assert!(d(0, 1) >= 0.0);
    prop_assert_eq!(d(0, 1), d(1, 0));
    prop_assert!(d(0, 2) <= d(0, 1) + d(1, 2) + 1e-12);
    Ok(())
}

pub fn prop_scorer_ranges(scorer: &OfflineScorer, a: &Phrase, b: &Phrase, x: &Word, y: &Word) -> Result<(), TestCaseError> {
    for v in scorer.embed(&[a.clone(), b.clone()]).unwrap() {
        prop_assert!(v.iter().all(|f| f.is_finite()));
        let n: f64 = v.iter().map(|f| f * f).sum::<f64>().sqrt();
        prop_assert!(n == 0.0 || (n - 1.0).abs() < 1e-9);
    }
    let w = scorer.word_similarity(&[(x.clone(), y.clone())]).unwrap()[0];
    prop_assert!((0.0..=1.0).contains(&w));
    let p = scorer.paraphrase(&[(a.clone(), b.clone())]).unwrap()[0];
    prop_assert!((0.0..=1.0).contains(&p));
    Ok(())
}

// ---- exhaustive search oracle ----

pub const BFS_LIMIT: usize = 10_000;

/// Breadth-first search over every rewrite; `None` when the graph exceeds the state limit.
pub fn bfs_label(engine: &Engine, p: &Sentence, h: &Sentence) -> Option<Label> {
    let target = engine.target(h).unwrap();
    let root = engine.polarize(p).unwrap();
    if is_goal(p, &target) {
        return Some(Label::Entail);
    }
    let mut seen: HashSet<String> = [state_key(p)].into_iter().collect();
    let mut queue = VecDeque::from([root]);
    while let Some(pt) = queue.pop_front() {
        for g in engine.successors(&pt, &target).unwrap() {
            if !seen.insert(state_key(g.sentence())) {
                continue;
            }
            if is_goal(g.sentence(), &target) {
                return Some(Label::Entail);
            }
            if seen.len() > BFS_LIMIT {
                return None;
            }
            queue.push_back(g.tree);
        }
    }
    let pt = engine.polarize(p).unwrap();
    let (gp, gh, a): (SentenceGraph, SentenceGraph, _) = engine.align(p, h).unwrap();
    let check = check_contradiction(&gp, &gh, &a, &pt, engine.lexicons());
    Some(if check.contradiction { Label::Contradict } else { Label::Neutral })
}

/// Small premise/hypothesis pairs over a twelve-lemma vocabulary.
pub fn small_instance(seed: &[u32]) -> (Sentence, Sentence) {
    let mut it = seed.iter().copied();
    let mut next = |n: usize| it.next().unwrap() as usize % n;
    let make = |next: &mut dyn FnMut(usize) -> usize| {
        let det = ["a", "no", "every"][next(3)];
        let noun = ["dog", "animal", "puppy"][next(3)];
        let adjs: Vec<&str> = ["small", "black"].into_iter().filter(|_| next(2) == 1).collect();
        let neg = next(3) == 0;
        let verb = ["run", "move"][next(2)];
        let mut rows: Vec<(&str, &str, &str)> = vec![(det, "DET", "det")];
        rows.extend(adjs.iter().map(|a| (*a, "ADJ", "amod")));
        let noun_id = rows.len() + 1;
        rows.push((noun, "NOUN", "nsubj"));
        rows.push(("be", "AUX", "aux"));
        if neg {
            rows.push(("not", "PART", "advmod"));
        }
        rows.push((verb, "VERB", "root"));
        let verb_id = rows.len();
        let tokens = rows
            .iter()
            .enumerate()
            .map(|(i, (l, u, r))| {
                let id = i + 1;
                let head = match *r {
                    "root" => 0,
                    "det" | "amod" => noun_id,
                    _ => verb_id,
                };
                let form = if *l == "be" { "is" } else { l };
                UDToken::new(id, form, l, u, head, r)
            })
            .collect();
        Sentence::from_tokens(tokens)
    };
    let p = make(&mut next);
    let h = make(&mut next);
    (p, h)
}

pub fn unbounded_engine() -> Engine {
    let mut cfg = EngineConfig::default();
    cfg.search.beam_width = usize::MAX;
    cfg.search.max_depth = BFS_LIMIT;
    engine_with(cfg)
}

pub fn engine_with(cfg: EngineConfig) -> Engine {
    Engine::offline(Arc::new(KnowledgeBase::bundled()), cfg)
}

/// Runs the beam/BFS comparison on `n` seeded instances whose rewrite graph fits the limit.
/// Returns the number of agreements, the number of entailing instances and the disagreements.
pub fn beam_vs_bfs(n: usize) -> (usize, usize, Vec<String>) {
    use proptest::test_runner::{RngAlgorithm, TestRng};
    let mut rng = TestRng::deterministic_rng(RngAlgorithm::ChaCha);
    let e = unbounded_engine();
    let (mut agree, mut done, mut entails) = (0, 0, 0);
    let mut bad = Vec::new();
    while done < n {
        let seed: Vec<u32> = (0..32).map(|_| rng.next_u32()).collect();
        let (p, h) = small_instance(&seed);
        let Some(oracle) = bfs_label(&e, &p, &h) else { continue };
        done += 1;
        entails += usize::from(oracle == Label::Entail);
        let got = e.classify(&p, &h).unwrap().label;
        if got == oracle {
            agree += 1;
        } else {
            bad.push(format!("{} / {}: beam {} exhaustive {}", p.text, h.text, got, oracle));
        }
    }
    (agree, entails, bad)
}
