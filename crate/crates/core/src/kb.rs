//! Lexical knowledge: hypernym/hyponym/synonym/antonym sets keyed by (lemma, POS), and the
//! handcrafted quantifier scale.

use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::KbError;

const BUNDLED: &str = include_str!("../data/lexicon.tsv");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum LexicalRelationKind {
    Hypernym,
    Hyponym,
    Synonym,
    Antonym,
}

impl LexicalRelationKind {
    pub fn inverse(self) -> Self {
        match self {
            LexicalRelationKind::Hypernym => LexicalRelationKind::Hyponym,
            LexicalRelationKind::Hyponym => LexicalRelationKind::Hypernym,
            k => k,
        }
    }
}

impl FromStr for LexicalRelationKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "hypernym" => Ok(LexicalRelationKind::Hypernym),
            "hyponym" => Ok(LexicalRelationKind::Hyponym),
            "synonym" => Ok(LexicalRelationKind::Synonym),
            "antonym" => Ok(LexicalRelationKind::Antonym),
            other => Err(format!("unknown relation `{}`", other)),
        }
    }
}

impl fmt::Display for LexicalRelationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            LexicalRelationKind::Hypernym => "hypernym",
            LexicalRelationKind::Hyponym => "hyponym",
            LexicalRelationKind::Synonym => "synonym",
            LexicalRelationKind::Antonym => "antonym",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Provenance {
    WordnetDump,
    ConceptnetDump,
    Handcrafted,
}

impl FromStr for Provenance {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "wordnet-dump" | "wordnet" => Ok(Provenance::WordnetDump),
            "conceptnet-dump" | "conceptnet" => Ok(Provenance::ConceptnetDump),
            "handcrafted" => Ok(Provenance::Handcrafted),
            other => Err(format!("unknown provenance `{}`", other)),
        }
    }
}

type Key = (String, String, LexicalRelationKind);

/// Read-only after loading; share it behind an `Arc`.
#[derive(Debug, Clone, Default)]
pub struct KnowledgeBase {
    store: HashMap<Key, BTreeSet<String>>,
    any_pos: HashMap<(String, LexicalRelationKind), BTreeSet<String>>,
    provenance: HashMap<(Key, String), Provenance>,
}

/// Folds tagger POS variants onto the keys used in dumps.
pub fn normalize_pos(pos: &str) -> String {
    match pos.to_ascii_uppercase().as_str() {
        "PROPN" | "N" | "NN" | "NNS" => "NOUN".to_string(),
        "AUX" | "V" => "VERB".to_string(),
        "A" | "J" => "ADJ".to_string(),
        "R" => "ADV".to_string(),
        other => other.to_string(),
    }
}

impl KnowledgeBase {
    pub fn new() -> Self {
        Self::default()
    }

    /// The mini-dump shipped with the crate.
    pub fn bundled() -> Self {
        let mut kb = KnowledgeBase::new();
        kb.extend_from_str(BUNDLED, Provenance::Handcrafted)
            .expect("bundled lexicon is well-formed");
        kb
    }

    /// Loads a `lemma<TAB>pos<TAB>relation<TAB>lemma[<TAB>provenance]` dump.
    pub fn load_dump(path: &Path, provenance: Provenance) -> Result<Self, KbError> {
        let mut kb = KnowledgeBase::new();
        kb.extend_from_path(path, provenance)?;
        Ok(kb)
    }

    pub fn extend_from_path(&mut self, path: &Path, provenance: Provenance) -> Result<(), KbError> {
        let text = std::fs::read_to_string(path).map_err(|source| KbError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        self.extend_from_str(&text, provenance)
    }

    pub fn extend_from_str(&mut self, text: &str, provenance: Provenance) -> Result<(), KbError> {
        for (i, line) in text.lines().enumerate() {
            let line = line.trim_end_matches('\r');
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let cols: Vec<&str> = line.split('\t').collect();
            if cols.len() != 4 && cols.len() != 5 {
                return Err(KbError::Format {
                    line: i + 1,
                    msg: format!("expected 4 or 5 tab-separated columns, found {}", cols.len()),
                });
            }
            let kind: LexicalRelationKind = cols[2]
                .parse()
                .map_err(|msg| KbError::Format { line: i + 1, msg })?;
            let prov = match cols.get(4) {
                Some(p) => p.parse().map_err(|msg| KbError::Format { line: i + 1, msg })?,
                None => provenance,
            };
            let (a, b) = (cols[0].trim().to_lowercase(), cols[3].trim().to_lowercase());
            if a == b && matches!(kind, LexicalRelationKind::Hypernym | LexicalRelationKind::Hyponym) {
                return Err(KbError::Format {
                    line: i + 1,
                    msg: format!("`{}` cannot be its own {}", a, kind),
                });
            }
            if a == b {
                continue;
            }
            self.add(&a, cols[1].trim(), kind, &b, prov);
        }
        Ok(())
    }

    /// Adds one relation together with its inverse (or symmetric) counterpart.
    pub fn add(&mut self, lemma: &str, pos: &str, kind: LexicalRelationKind, target: &str, prov: Provenance) {
        let pos = normalize_pos(pos);
        self.insert_one(lemma, &pos, kind, target, prov);
        self.insert_one(target, &pos, kind.inverse(), lemma, prov);
    }

    fn insert_one(&mut self, lemma: &str, pos: &str, kind: LexicalRelationKind, target: &str, prov: Provenance) {
        let key = (lemma.to_string(), pos.to_string(), kind);
        self.store.entry(key.clone()).or_default().insert(target.to_string());
        self.any_pos.entry((lemma.to_string(), kind)).or_default().insert(target.to_string());
        self.provenance.entry((key, target.to_string())).or_insert(prov);
    }

    /// Related lemmas; empty for unknown words.
    pub fn query(&self, lemma: &str, pos: &str, kind: LexicalRelationKind) -> BTreeSet<String> {
        self.store
            .get(&(lemma.to_lowercase(), normalize_pos(pos), kind))
            .cloned()
            .unwrap_or_default()
    }

    pub fn relates(&self, lemma: &str, pos: &str, kind: LexicalRelationKind, target: &str) -> bool {
        self.store
            .get(&(lemma.to_lowercase(), normalize_pos(pos), kind))
            .is_some_and(|s| s.contains(&target.to_lowercase()))
    }

    /// Same as [`relates`](Self::relates) but ignoring POS.
    pub fn relates_any_pos(&self, lemma: &str, kind: LexicalRelationKind, target: &str) -> bool {
        self.any_pos
            .get(&(lemma.to_lowercase(), kind))
            .is_some_and(|s| s.contains(&target.to_lowercase()))
    }

    pub fn provenance(&self, lemma: &str, pos: &str, kind: LexicalRelationKind, target: &str) -> Option<Provenance> {
        let key = (lemma.to_lowercase(), normalize_pos(pos), kind);
        self.provenance.get(&(key, target.to_lowercase())).copied()
    }

    pub fn is_empty(&self) -> bool {
        self.store.is_empty()
    }

    /// Number of stored directed (lemma, relation, target) triples.
    pub fn len(&self) -> usize {
        self.store.values().map(BTreeSet::len).sum()
    }

    /// All stored triples, for invariant checks.
    pub fn triples(&self) -> impl Iterator<Item = (&str, &str, LexicalRelationKind, &str)> {
        self.store.iter().flat_map(|((l, p, k), set)| {
            set.iter().map(move |t| (l.as_str(), p.as_str(), *k, t.as_str()))
        })
    }
}

/// Keeps only candidates that also occur in the hypothesis.
pub fn restrict_to_hypothesis(candidates: &BTreeSet<String>, hypothesis_lemmas: &BTreeSet<String>) -> BTreeSet<String> {
    candidates.intersection(hypothesis_lemmas).cloned().collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ScaleOrder {
    Leq,
    Geq,
    Eq,
    Perp,
    Incomparable,
}

/// Chain of equivalence classes ordered by `≤`, plus orthogonal pairs.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QuantifierScale {
    classes: Vec<Vec<String>>,
    perp: Vec<(String, String)>,
}

impl Default for QuantifierScale {
    fn default() -> Self {
        let classes = [
            vec!["all", "every", "each"],
            vec!["most"],
            vec!["many"],
            vec!["several"],
            vec!["some", "a", "an"],
        ];
        let perp = [("up", "down"), ("above", "below"), ("inside", "outside")];
        QuantifierScale {
            classes: classes
                .iter()
                .map(|c| c.iter().map(|s| s.to_string()).collect())
                .collect(),
            perp: perp.iter().map(|(a, b)| (a.to_string(), b.to_string())).collect(),
        }
    }
}

impl QuantifierScale {
    pub fn new(classes: Vec<Vec<String>>, perp: Vec<(String, String)>) -> Self {
        QuantifierScale { classes, perp }
    }

    fn class_of(&self, q: &str) -> Option<usize> {
        self.classes.iter().position(|c| c.iter().any(|x| x == q))
    }

    pub fn contains(&self, q: &str) -> bool {
        let q = q.to_lowercase();
        self.class_of(&q).is_some() || self.perp.iter().any(|(a, b)| *a == q || *b == q)
    }

    /// Lemmas on the ordered chain.
    pub fn chain_members(&self) -> impl Iterator<Item = &str> {
        self.classes.iter().flatten().map(String::as_str)
    }

    pub fn compare(&self, q1: &str, q2: &str) -> ScaleOrder {
        let (a, b) = (q1.to_lowercase(), q2.to_lowercase());
        if a == b && self.contains(&a) {
            return ScaleOrder::Eq;
        }
        if self.perp.iter().any(|(x, y)| (*x == a && *y == b) || (*x == b && *y == a)) {
            return ScaleOrder::Perp;
        }
        match (self.class_of(&a), self.class_of(&b)) {
            (Some(i), Some(j)) if i == j => ScaleOrder::Eq,
            (Some(i), Some(j)) if i < j => ScaleOrder::Leq,
            (Some(_), Some(_)) => ScaleOrder::Geq,
            _ => ScaleOrder::Incomparable,
        }
    }
}
