//! Rewrite generators: lexical substitution, phrasal deletion/insertion and syntactic
//! variation. Every output carries a replayable edit and a freshly polarized tree.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::chunker::{all_chunks, Chunk};
use crate::error::ScoringError;
use crate::graph::{build_graph, SentenceGraph};
use crate::kb::{KnowledgeBase, LexicalRelationKind, QuantifierScale, ScaleOrder};
use crate::polarity::{polarize_sentence, Polarity, PolarizedTree, QuantifierLexicon};
use crate::scoring::{Phrase, Scorer};
use crate::sentence::{Fragment, Sentence};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum EditKind {
    LexicalSubstitution,
    PhrasalDeletion,
    PhrasalInsertion,
    SyntacticVariation,
}

impl EditKind {
    pub fn tag(self) -> &'static str {
        match self {
            EditKind::LexicalSubstitution => "LEX_SUB",
            EditKind::PhrasalDeletion => "PHRASAL_DEL",
            EditKind::PhrasalInsertion => "PHRASAL_INS",
            EditKind::SyntacticVariation => "SYN_VAR",
        }
    }
}

/// A structural operation on a sentence, replayable on the sentence it was generated from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case")]
pub enum EditOp {
    Substitute { id: usize, lemma: String, form: String },
    Delete { id: usize },
    Insert { at: usize, head: usize, deprel: String, fragment: Fragment },
    Replace { span: Vec<usize>, anchor: usize, fragment: Fragment },
}

impl EditOp {
    pub fn apply(&self, s: &Sentence) -> Sentence {
        match self {
            EditOp::Substitute { id, lemma, form } => s.substitute(*id, lemma, form),
            EditOp::Delete { id } => s.delete_subtree(*id),
            EditOp::Insert { at, head, deprel, fragment } => s.insert_fragment(fragment, *at, *head, deprel),
            EditOp::Replace { span, anchor, fragment } => {
                s.replace_span(&span.iter().copied().collect(), *anchor, fragment)
            }
        }
    }
}

/// One rewrite step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Edit {
    pub kind: EditKind,
    /// Text removed or replaced; empty for insertions.
    pub from: String,
    /// Text introduced; empty for deletions.
    pub to: String,
    /// Paraphrase probability for syntactic variations.
    pub score: Option<f64>,
    pub op: EditOp,
}

impl fmt::Display for Edit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let side = |s: &str| if s.is_empty() { "∅".to_string() } else { s.to_string() };
        write!(f, "{}: {} → {}", self.kind.tag(), side(&self.from), side(&self.to))
    }
}

/// A generator output.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneratedSentence {
    pub tree: PolarizedTree,
    pub edit: Edit,
}

impl GeneratedSentence {
    pub fn sentence(&self) -> &Sentence {
        &self.tree.sentence
    }
}

fn finish(base: &Sentence, edit: Edit, lex: &QuantifierLexicon) -> Option<GeneratedSentence> {
    let s = edit.op.apply(base);
    match polarize_sentence(&s, lex) {
        Ok(tree) => Some(GeneratedSentence { tree, edit }),
        Err(e) => {
            log::debug!("dropping candidate `{}`: {}", s.text, e);
            None
        }
    }
}

/// Which side of its head a modifier sits on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Side {
    Left,
    Right,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModifierEntry {
    pub deprel: String,
    pub head_lemma: String,
    pub fragment: Fragment,
    pub side: Side,
}

/// Hypothesis modifiers available for insertion, grouped by relation.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ModifierMap {
    entries: BTreeMap<String, Vec<ModifierEntry>>,
}

impl ModifierMap {
    pub fn get(&self, deprel: &str) -> &[ModifierEntry] {
        self.entries.get(deprel).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn iter(&self) -> impl Iterator<Item = &ModifierEntry> {
        self.entries.values().flatten()
    }

    pub fn relations(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.entries.values().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

const NEGATORS: &[&str] = &["not", "n't", "never", "no"];

/// Relations a generator may delete or insert as a unit.
pub fn is_modifier_rel(rel: &str) -> bool {
    matches!(
        rel.split(':').next(),
        Some("amod") | Some("advmod") | Some("nmod") | Some("acl") | Some("obl") | Some("advcl") | Some("appos")
    )
}

fn removable(s: &Sentence, id: usize, lex: &QuantifierLexicon) -> bool {
    let t = s.tok(id);
    let l = t.norm_lemma();
    t.head != 0 && is_modifier_rel(&t.deprel) && !NEGATORS.contains(&l.as_str()) && !lex.contains(&l)
}

/// Collects the hypothesis modifiers that phrasal insertion may use.
pub fn build_modifier_map(h: &Sentence, lex: &QuantifierLexicon) -> ModifierMap {
    let mut map = ModifierMap::default();
    for t in &h.tokens {
        if !removable(h, t.id, lex) {
            continue;
        }
        let sub = h.subtree(t.id);
        let entry = ModifierEntry {
            deprel: t.deprel.clone(),
            head_lemma: h.tok(t.head).norm_lemma(),
            fragment: h.fragment(&sub),
            side: if t.id < t.head { Side::Left } else { Side::Right },
        };
        map.entries.entry(t.deprel.clone()).or_default().push(entry);
    }
    map
}

/// Everything generators need to know about the hypothesis, computed once.
#[derive(Debug, Clone)]
pub struct Target {
    pub sentence: Sentence,
    pub graph: SentenceGraph,
    pub chunks: Vec<Chunk>,
    pub modifiers: ModifierMap,
    lemmas: BTreeSet<String>,
    forms: BTreeMap<String, String>,
}

impl Target {
    pub fn new(h: &Sentence, lex: &QuantifierLexicon) -> Target {
        let graph = build_graph(h);
        let chunks = all_chunks(&graph);
        let mut forms = BTreeMap::new();
        for t in &h.tokens {
            forms.entry(t.norm_lemma()).or_insert_with(|| t.form.clone());
        }
        Target {
            sentence: h.clone(),
            modifiers: build_modifier_map(h, lex),
            lemmas: forms.keys().cloned().collect(),
            forms,
            graph,
            chunks,
        }
    }

    pub fn lemmas(&self) -> &BTreeSet<String> {
        &self.lemmas
    }

    pub fn lemma_key(&self) -> String {
        self.sentence.lemma_key()
    }

    fn form_of(&self, lemma: &str) -> String {
        self.forms.get(lemma).cloned().unwrap_or_else(|| lemma.to_string())
    }
}

const NUMBER_WORDS: &[&str] = &[
    "zero", "one", "two", "three", "four", "five", "six", "seven", "eight", "nine", "ten", "eleven",
    "twelve", "thirteen", "fourteen", "fifteen", "sixteen", "seventeen", "eighteen", "nineteen", "twenty",
];

/// Numeric value of a number lemma (`3`, `three`).
pub fn number_value(lemma: &str) -> Option<f64> {
    lemma
        .parse::<f64>()
        .ok()
        .or_else(|| NUMBER_WORDS.iter().position(|w| *w == lemma).map(|i| i as f64))
}

/// Substitutes single tokens with hypothesis lemmas licensed by the token's polarity.
///
/// `↑` allows hypernyms and synonyms, `↓` hyponyms and synonyms, `=` synonyms only.
/// Quantifiers move along the quantifier scale and numbers along numeric order.
pub fn lexical_infer(
    pt: &PolarizedTree,
    kb: &KnowledgeBase,
    scale: &QuantifierScale,
    lex: &QuantifierLexicon,
    target: &Target,
) -> Vec<GeneratedSentence> {
    let s = &pt.sentence;
    let mut out = Vec::new();
    for t in &s.tokens {
        if t.is_punct() {
            continue;
        }
        let lemma = t.norm_lemma();
        let mark = pt.mark(t.id);
        let mut candidates: BTreeSet<String> = BTreeSet::new();
        let on_chain = scale.chain_members().any(|q| q == lemma);
        if on_chain {
            for q in target.lemmas().iter().filter(|q| scale.chain_members().any(|m| m == q.as_str())) {
                let ok = matches!(
                    (scale.compare(&lemma, q), mark),
                    (ScaleOrder::Eq, _) | (ScaleOrder::Leq, Polarity::Up) | (ScaleOrder::Geq, Polarity::Down)
                );
                if ok {
                    candidates.insert(q.clone());
                }
            }
        } else if let Some(n) = number_value(&lemma) {
            for q in target.lemmas() {
                let Some(m) = number_value(q) else { continue };
                let ok = match mark {
                    Polarity::Up => m < n,
                    Polarity::Down => m > n,
                    Polarity::Flat => false,
                };
                if ok {
                    candidates.insert(q.clone());
                }
            }
        } else if matches!(t.upos.as_str(), "NOUN" | "PROPN" | "VERB" | "ADJ" | "ADV") {
            let mut related = kb.query(&lemma, &t.upos, LexicalRelationKind::Synonym);
            match mark {
                Polarity::Up => related.extend(kb.query(&lemma, &t.upos, LexicalRelationKind::Hypernym)),
                Polarity::Down => related.extend(kb.query(&lemma, &t.upos, LexicalRelationKind::Hyponym)),
                Polarity::Flat => {}
            }
            candidates = crate::kb::restrict_to_hypothesis(&related, target.lemmas());
        }
        candidates.remove(&lemma);
        for c in candidates {
            let form = target.form_of(&c);
            let edit = Edit {
                kind: EditKind::LexicalSubstitution,
                from: t.form.clone(),
                to: form.clone(),
                score: None,
                op: EditOp::Substitute { id: t.id, lemma: c.clone(), form },
            };
            out.extend(finish(s, edit, lex));
        }
    }
    out
}

/// Deletes modifiers of upward heads and inserts hypothesis modifiers under downward heads.
pub fn phrasal_infer(pt: &PolarizedTree, target: &Target, lex: &QuantifierLexicon) -> Vec<GeneratedSentence> {
    let s = &pt.sentence;
    let mut out = Vec::new();
    for t in &s.tokens {
        if !removable(s, t.id, lex) || pt.mark(t.head) != Polarity::Up {
            continue;
        }
        let sub = s.subtree(t.id);
        let edit = Edit {
            kind: EditKind::PhrasalDeletion,
            from: s.span_text(&sub),
            to: String::new(),
            score: None,
            op: EditOp::Delete { id: t.id },
        };
        out.extend(finish(s, edit, lex));
    }
    for entry in target.modifiers.iter() {
        let key = entry.fragment.lemma_key();
        for h in &s.tokens {
            if h.norm_lemma() != entry.head_lemma || pt.mark(h.id) != Polarity::Down {
                continue;
            }
            let present = s.children(h.id).iter().any(|&c| {
                let sub = s.subtree(c);
                s.fragment(&sub).lemma_key() == key
            });
            if present {
                continue;
            }
            let at = match entry.side {
                Side::Left => h.id,
                Side::Right => {
                    let sub = s.subtree(h.id);
                    sub.iter().rev().find(|&&i| !s.tok(i).is_punct()).copied().unwrap_or(h.id) + 1
                }
            };
            let edit = Edit {
                kind: EditKind::PhrasalInsertion,
                from: String::new(),
                to: entry.fragment.text(),
                score: None,
                op: EditOp::Insert { at, head: h.id, deprel: entry.deprel.clone(), fragment: entry.fragment.clone() },
            };
            out.extend(finish(s, edit, lex));
        }
    }
    out
}

/// Replaces a chunk of the current sentence with a hypothesis chunk the scorer judges a
/// paraphrase (probability strictly above `threshold`).
///
/// The replacement fragment is attached where the old chunk hung; no re-parse happens.
pub fn syntactic_variation_infer(
    pt: &PolarizedTree,
    target: &Target,
    scorer: &dyn Scorer,
    threshold: f64,
    lex: &QuantifierLexicon,
) -> Result<Vec<GeneratedSentence>, ScoringError> {
    let s = &pt.sentence;
    let g = build_graph(s);
    let chunks = all_chunks(&g);
    let mut pairs = Vec::new();
    let mut index = Vec::new();
    for (i, cs) in chunks.iter().enumerate() {
        let ks = cs.lemma_key(&g);
        for (j, ch) in target.chunks.iter().enumerate() {
            if ch.lemma_key(&target.graph) == ks {
                continue;
            }
            pairs.push((phrase_of(&g, cs), phrase_of(&target.graph, ch)));
            index.push((i, j));
        }
    }
    if pairs.is_empty() {
        return Ok(Vec::new());
    }
    let probs = scorer.paraphrase(&pairs)?;
    let mut out = Vec::new();
    for ((i, j), p) in index.into_iter().zip(probs) {
        if p <= threshold {
            continue;
        }
        let (cs, ch) = (&chunks[i], &target.chunks[j]);
        let fragment = target.sentence.fragment_rooted(&ch.span, ch.anchor);
        let edit = Edit {
            kind: EditKind::SyntacticVariation,
            from: cs.text.clone(),
            to: ch.text.clone(),
            score: Some(p),
            op: EditOp::Replace { span: cs.span.iter().copied().collect(), anchor: cs.anchor, fragment },
        };
        if let Some(gs) = finish(s, edit, lex) {
            if gs.sentence().lemma_key() != s.lemma_key() {
                out.push(gs);
            }
        }
    }
    Ok(out)
}

fn phrase_of(g: &SentenceGraph, c: &Chunk) -> Phrase {
    Phrase {
        text: c.text.clone(),
        lemmas: c.span.iter().map(|&i| g.sentence.tok(i)).filter(|t| !t.is_punct()).map(|t| t.norm_lemma()).collect(),
    }
}
