//! Monotonicity polarity marking over binarized dependency trees.
//!
//! Every operator (determiner, quantified pronoun, negation, downward preposition, numeric
//! quantifier phrase) contributes an effect over a set of tokens it scopes over. A token's mark
//! is the composition of every effect whose scope contains it, starting from `Up`; an internal
//! node's mark composes the effects whose scope contains all of its leaves. Since flips commute
//! and flattening absorbs, the order of composition does not matter.

use std::collections::{BTreeSet, HashMap};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::conllu::check_tree;
use crate::error::{Error, StructureError};
use crate::sentence::{Sentence, UDToken};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Polarity {
    Up,
    Down,
    Flat,
}

impl Polarity {
    pub fn apply(self, effect: Effect) -> Polarity {
        match (self, effect) {
            (Polarity::Flat, _) | (_, Effect::Flatten) => Polarity::Flat,
            (p, Effect::Preserve) => p,
            (Polarity::Up, Effect::Flip) => Polarity::Down,
            (Polarity::Down, Effect::Flip) => Polarity::Up,
        }
    }

    pub fn symbol(self) -> char {
        match self {
            Polarity::Up => '↑',
            Polarity::Down => '↓',
            Polarity::Flat => '=',
        }
    }

    pub fn from_symbol(c: char) -> Option<Polarity> {
        match c {
            '↑' | 'u' | '+' => Some(Polarity::Up),
            '↓' | 'd' | '-' => Some(Polarity::Down),
            '=' => Some(Polarity::Flat),
            _ => None,
        }
    }
}

impl fmt::Display for Polarity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.symbol())
    }
}

/// What an operator does to the polarity of the material it scopes over.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Effect {
    Preserve,
    Flip,
    Flatten,
}

/// Restrictor and nuclear-scope effects per quantifier lemma.
///
/// Numeric phrases are keyed as `at-most-N`, `at-least-N`, `fewer-than-N`, `less-than-N` and
/// `more-than-N`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QuantifierLexicon {
    entries: HashMap<String, (Effect, Effect)>,
}

const NEGATORS: &[&str] = &["not", "n't", "never", "no"];
const DOWNWARD_PREPOSITIONS: &[&str] = &["without"];
const QUANTIFIED_PRONOUNS: &[&str] = &[
    "nobody", "nothing", "none", "everyone", "everybody", "everything", "someone", "somebody",
    "something",
];

impl Default for QuantifierLexicon {
    fn default() -> Self {
        use Effect::*;
        let table: &[(&str, Effect, Effect)] = &[
            ("every", Flip, Preserve),
            ("all", Flip, Preserve),
            ("each", Flip, Preserve),
            ("everyone", Flip, Preserve),
            ("everybody", Flip, Preserve),
            ("everything", Flip, Preserve),
            ("some", Preserve, Preserve),
            ("a", Preserve, Preserve),
            ("an", Preserve, Preserve),
            ("several", Preserve, Preserve),
            ("someone", Preserve, Preserve),
            ("somebody", Preserve, Preserve),
            ("something", Preserve, Preserve),
            ("no", Flip, Flip),
            ("none", Flip, Flip),
            ("nobody", Flip, Flip),
            ("nothing", Flip, Flip),
            ("neither", Flip, Flip),
            ("most", Flatten, Preserve),
            ("many", Flatten, Preserve),
            ("few", Flatten, Flip),
            ("the", Flatten, Preserve),
            ("this", Flatten, Preserve),
            ("that", Flatten, Preserve),
            ("these", Flatten, Preserve),
            ("those", Flatten, Preserve),
            ("not", Preserve, Flip),
            ("n't", Preserve, Flip),
            ("never", Preserve, Flip),
            ("without", Flip, Preserve),
            ("at-most-N", Flip, Flip),
            ("at-least-N", Preserve, Preserve),
            ("fewer-than-N", Flip, Flip),
            ("less-than-N", Flip, Flip),
            ("more-than-N", Preserve, Preserve),
        ];
        QuantifierLexicon {
            entries: table.iter().map(|(k, r, s)| (k.to_lowercase(), (*r, *s))).collect(),
        }
    }
}

impl QuantifierLexicon {
    pub fn empty() -> Self {
        QuantifierLexicon { entries: HashMap::new() }
    }

    pub fn insert(&mut self, lemma: &str, restrictor: Effect, scope: Effect) {
        self.entries.insert(lemma.to_lowercase(), (restrictor, scope));
    }

    pub fn contains(&self, lemma: &str) -> bool {
        self.entries.contains_key(&lemma.to_lowercase())
    }

    /// Unknown quantifiers default to `(Preserve, Preserve)`.
    pub fn effects(&self, lemma: &str) -> (Effect, Effect) {
        self.entries
            .get(&lemma.to_lowercase())
            .copied()
            .unwrap_or((Effect::Preserve, Effect::Preserve))
    }

    pub fn lemmas(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }
}

/// Binarized dependency tree. Each internal node combines a head phrase with one dependent
/// and is labelled with that dependent's relation.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum BinaryDepTree {
    Leaf(UDToken),
    Node {
        relation: String,
        left: Box<BinaryDepTree>,
        right: Box<BinaryDepTree>,
    },
}

impl BinaryDepTree {
    /// Leaves in order.
    pub fn leaves(&self) -> Vec<&UDToken> {
        let mut out = Vec::new();
        self.collect_leaves(&mut out);
        out
    }

    fn collect_leaves<'a>(&'a self, out: &mut Vec<&'a UDToken>) {
        match self {
            BinaryDepTree::Leaf(t) => out.push(t),
            BinaryDepTree::Node { left, right, .. } => {
                left.collect_leaves(out);
                right.collect_leaves(out);
            }
        }
    }

    pub fn node_count(&self) -> usize {
        match self {
            BinaryDepTree::Leaf(_) => 1,
            BinaryDepTree::Node { left, right, .. } => 1 + left.node_count() + right.node_count(),
        }
    }

    /// Bracketed rendering, e.g. `(nsubj dogs run)`.
    pub fn render(&self) -> String {
        match self {
            BinaryDepTree::Leaf(t) => t.form.clone(),
            BinaryDepTree::Node { relation, left, right } => {
                format!("({} {} {})", relation, left.render(), right.render())
            }
        }
    }
}

/// Combines each head with its dependents one at a time, nearest dependent first (on equal
/// distance the right dependent goes first).
pub fn binarize(sentence: &Sentence) -> Result<BinaryDepTree, StructureError> {
    check_tree(sentence)?;
    let root = sentence.root().ok_or(StructureError::RootCount(0))?;
    Ok(build(sentence, root))
}

fn build(s: &Sentence, head: usize) -> BinaryDepTree {
    let mut deps = s.children(head);
    deps.sort_by_key(|&d| (d.abs_diff(head), if d > head { 0 } else { 1 }));
    let mut tree = BinaryDepTree::Leaf(s.tok(head).clone());
    for d in deps {
        let sub = build(s, d);
        let relation = s.tok(d).deprel.clone();
        tree = if d < head {
            BinaryDepTree::Node { relation, left: Box::new(sub), right: Box::new(tree) }
        } else {
            BinaryDepTree::Node { relation, left: Box::new(tree), right: Box::new(sub) }
        };
    }
    tree
}

/// One operator's effect over a set of token ids.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Scope {
    pub operator: usize,
    pub effect: Effect,
    pub ids: BTreeSet<usize>,
}

/// A binarized tree with a mark on every node and leaf.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PolarizedTree {
    pub sentence: Sentence,
    pub tree: BinaryDepTree,
    /// Marks in pre-order over all nodes, leaves included; index 0 is the root.
    pub marks: Vec<Polarity>,
    token_marks: Vec<Polarity>,
}

impl PolarizedTree {
    pub fn root_mark(&self) -> Polarity {
        self.marks[0]
    }

    /// Mark of token `id` (1-based).
    pub fn mark(&self, id: usize) -> Polarity {
        self.token_marks[id - 1]
    }

    pub fn token_marks(&self) -> &[Polarity] {
        &self.token_marks
    }

    /// `Every^↑ healthy^↓ person^↓ ...`
    pub fn annotate(&self) -> String {
        self.sentence
            .tokens
            .iter()
            .zip(&self.token_marks)
            .map(|(t, m)| format!("{}^{}", t.form, m.symbol()))
            .collect::<Vec<_>>()
            .join(" ")
    }
}

/// Looks up the mark of one token.
pub fn polarity_of(pt: &PolarizedTree, token_id: usize) -> Result<Polarity, Error> {
    if token_id == 0 || token_id > pt.sentence.len() {
        return Err(Error::Lookup(format!("no token with id {}", token_id)));
    }
    Ok(pt.mark(token_id))
}

/// Marks every node of `tree`.
pub fn polarize(tree: &BinaryDepTree, lex: &QuantifierLexicon) -> PolarizedTree {
    let sentence = Sentence::from_tokens(tree.leaves().into_iter().cloned().collect());
    let scopes = operator_scopes(&sentence, lex);
    let token_marks: Vec<Polarity> = (1..=sentence.len())
        .map(|id| compose(&scopes, |ids| ids.contains(&id)))
        .collect();
    let mut marks = Vec::with_capacity(tree.node_count());
    mark_nodes(tree, &scopes, &mut marks);
    PolarizedTree { sentence, tree: tree.clone(), marks, token_marks }
}

/// Binarizes and polarizes in one go, keeping the sentence's text.
pub fn polarize_sentence(sentence: &Sentence, lex: &QuantifierLexicon) -> Result<PolarizedTree, StructureError> {
    let tree = binarize(sentence)?;
    let mut pt = polarize(&tree, lex);
    pt.sentence.text = sentence.text.clone();
    Ok(pt)
}

fn compose<F: Fn(&BTreeSet<usize>) -> bool>(scopes: &[Scope], covers: F) -> Polarity {
    scopes
        .iter()
        .filter(|s| covers(&s.ids))
        .fold(Polarity::Up, |p, s| p.apply(s.effect))
}

fn mark_nodes(tree: &BinaryDepTree, scopes: &[Scope], out: &mut Vec<Polarity>) -> (usize, usize) {
    match tree {
        BinaryDepTree::Leaf(t) => {
            out.push(compose(scopes, |ids| ids.contains(&t.id)));
            (t.id, t.id)
        }
        BinaryDepTree::Node { left, right, .. } => {
            let slot = out.len();
            out.push(Polarity::Up);
            let (lo, _) = mark_nodes(left, scopes, out);
            let (_, hi) = mark_nodes(right, scopes, out);
            out[slot] = compose(scopes, |ids| (lo..=hi).all(|i| ids.contains(&i)));
            (lo, hi)
        }
    }
}

fn is_subject(rel: &str) -> bool {
    matches!(rel.split(':').next(), Some("nsubj") | Some("csubj") | Some("expl"))
}

fn is_object(rel: &str) -> bool {
    matches!(rel.split(':').next(), Some("obj") | Some("iobj") | Some("obl"))
}

/// Material a quantified nominal `noun` takes scope over.
fn nuclear_scope(s: &Sentence, noun: usize) -> BTreeSet<usize> {
    let t = s.tok(noun);
    if t.head == 0 {
        return BTreeSet::new();
    }
    let pred = t.head;
    let mut ids = s.subtree(pred);
    for x in s.subtree(noun) {
        ids.remove(&x);
    }
    if is_subject(&t.deprel) {
        ids
    } else if is_object(&t.deprel) {
        for c in s.children(pred) {
            if is_subject(&s.tok(c).deprel) {
                for x in s.subtree(c) {
                    ids.remove(&x);
                }
            }
        }
        ids
    } else {
        BTreeSet::new()
    }
}

/// The noun phrase minus the operator's own tokens and the noun's case markers.
fn restrictor_scope(s: &Sentence, noun: usize, operator_ids: &BTreeSet<usize>) -> BTreeSet<usize> {
    let mut ids = s.subtree(noun);
    for &o in operator_ids {
        for x in s.subtree(o) {
            ids.remove(&x);
        }
    }
    for c in s.children(noun) {
        let ct = s.tok(c);
        if ct.base_rel() == "case" || ct.is_punct() {
            ids.remove(&c);
        }
    }
    ids
}

fn numeric_phrase(s: &Sentence, i: usize) -> Option<(&'static str, BTreeSet<usize>, usize)> {
    let a = s.tok(i).norm_lemma();
    let b = s.token(i + 1)?.norm_lemma();
    let key = match (a.as_str(), b.as_str()) {
        ("at", "most") => "at-most-N",
        ("at", "least") => "at-least-N",
        ("fewer", "than") => "fewer-than-N",
        ("less", "than") => "less-than-N",
        ("more", "than") => "more-than-N",
        _ => return None,
    };
    let num = s.token(i + 2).filter(|t| t.upos == "NUM")?;
    let noun = if num.base_rel() == "nummod" { num.head } else { return None };
    if noun == 0 {
        return None;
    }
    let ids: BTreeSet<usize> = [i, i + 1, i + 2].into_iter().collect();
    Some((key, ids, noun))
}

/// Collects every operator scope in the sentence.
pub fn operator_scopes(s: &Sentence, lex: &QuantifierLexicon) -> Vec<Scope> {
    let mut scopes = Vec::new();
    let mut consumed: BTreeSet<usize> = BTreeSet::new();
    let mut push = |operator: usize, effect: Effect, ids: BTreeSet<usize>| {
        if effect != Effect::Preserve && !ids.is_empty() {
            scopes.push(Scope { operator, effect, ids });
        }
    };

    for t in &s.tokens {
        if consumed.contains(&t.id) {
            continue;
        }
        if let Some((key, op_ids, noun)) = numeric_phrase(s, t.id) {
            let (r, sc) = lex.effects(key);
            push(t.id, r, restrictor_scope(s, noun, &op_ids));
            push(t.id, sc, nuclear_scope(s, noun));
            consumed.extend(op_ids);
        }
    }

    for t in &s.tokens {
        if consumed.contains(&t.id) {
            continue;
        }
        let lemma = t.norm_lemma();
        let rel = t.base_rel();
        if t.head == 0 {
            continue;
        }
        if NEGATORS.contains(&lemma.as_str()) && matches!(rel, "advmod" | "neg") {
            let v = t.head;
            let mut ids = s.subtree(v);
            ids.remove(&t.id);
            for c in s.children(v) {
                let ct = s.tok(c);
                if is_subject(&ct.deprel) {
                    for x in s.subtree(c) {
                        ids.remove(&x);
                    }
                } else if matches!(ct.base_rel(), "aux" | "cop" | "punct") {
                    ids.remove(&c);
                }
            }
            let (_, sc) = lex.effects(&lemma);
            let eff = if lex.contains(&lemma) { sc } else { Effect::Flip };
            push(t.id, eff, ids);
            continue;
        }
        if rel == "case" && DOWNWARD_PREPOSITIONS.contains(&lemma.as_str()) {
            let mut ids = s.subtree(t.head);
            ids.remove(&t.id);
            let (r, _) = lex.effects(&lemma);
            push(t.id, r, ids);
            continue;
        }
        let det_like = rel == "det"
            || (matches!(rel, "amod" | "nummod" | "advmod") && lex.contains(&lemma) && t.upos != "PART");
        if det_like {
            let (r, sc) = lex.effects(&lemma);
            let op: BTreeSet<usize> = [t.id].into_iter().collect();
            push(t.id, r, restrictor_scope(s, t.head, &op));
            push(t.id, sc, nuclear_scope(s, t.head));
            continue;
        }
        if matches!(t.upos.as_str(), "PRON" | "NOUN") && QUANTIFIED_PRONOUNS.contains(&lemma.as_str()) {
            let (r, sc) = lex.effects(&lemma);
            let mut restr = restrictor_scope(s, t.id, &BTreeSet::new());
            restr.remove(&t.id);
            push(t.id, r, restr);
            push(t.id, sc, nuclear_scope(s, t.id));
        }
    }
    scopes
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::conllu::parse_single;

    fn sent(rows: &[(&str, &str, &str, usize, &str)]) -> Sentence {
        Sentence::from_tokens(
            rows.iter()
                .enumerate()
                .map(|(i, (f, l, u, h, r))| UDToken::new(i + 1, f, l, u, *h, r))
                .collect(),
        )
    }

    fn every_healthy() -> Sentence {
        sent(&[
            ("Every", "every", "DET", 3, "det"),
            ("healthy", "healthy", "ADJ", 3, "amod"),
            ("person", "person", "NOUN", 4, "nsubj"),
            ("plays", "play", "VERB", 0, "root"),
            ("sports", "sport", "NOUN", 4, "obj"),
        ])
    }

    fn marks(s: &Sentence) -> String {
        let pt = polarize_sentence(s, &QuantifierLexicon::default()).unwrap();
        pt.token_marks().iter().map(|m| m.symbol()).collect()
    }

    #[test]
    fn dogs_run_is_one_node() {
        let s = sent(&[("dogs", "dog", "NOUN", 2, "nsubj"), ("run", "run", "VERB", 0, "root")]);
        let t = binarize(&s).unwrap();
        assert_eq!(t.render(), "(nsubj dogs run)");
    }

    #[test]
    fn single_token_is_leaf() {
        let s = sent(&[("run", "run", "VERB", 0, "root")]);
        assert!(matches!(binarize(&s).unwrap(), BinaryDepTree::Leaf(_)));
        let pt = polarize_sentence(&s, &QuantifierLexicon::default()).unwrap();
        assert_eq!(polarity_of(&pt, 1).unwrap(), Polarity::Up);
    }

    #[test]
    fn every_sentence_leaf_order_and_marks() {
        let s = every_healthy();
        let t = binarize(&s).unwrap();
        let forms: Vec<&str> = t.leaves().iter().map(|t| t.form.as_str()).collect();
        assert_eq!(forms.join(" "), "Every healthy person plays sports");
        assert_eq!(marks(&s), "↑↓↓↑↑");
        let pt = polarize(&t, &QuantifierLexicon::default());
        assert_eq!(pt.root_mark(), Polarity::Up);
        assert_eq!(polarity_of(&pt, 3).unwrap(), Polarity::Down);
        assert!(polarity_of(&pt, 9).is_err());
    }

    #[test]
    fn double_negation_restores() {
        // No dogs are not running
        let s = sent(&[
            ("No", "no", "DET", 2, "det"),
            ("dogs", "dog", "NOUN", 5, "nsubj"),
            ("are", "be", "AUX", 5, "aux"),
            ("not", "not", "PART", 5, "advmod"),
            ("running", "run", "VERB", 0, "root"),
        ]);
        assert_eq!(marks(&s), "↑↓↓↓↑");
    }

    #[test]
    fn the_flattens_its_noun_only() {
        let doc = "1\tA\ta\tDET\t_\t_\t2\tdet\t_\t_\n\
2\twoman\twoman\tNOUN\t_\t_\t7\tnsubj\t_\t_\n\
3\twho\twho\tPRON\t_\t_\t5\tnsubj\t_\t_\n\
4\tis\tbe\tAUX\t_\t_\t5\tcop\t_\t_\n\
5\tbeautiful\tbeautiful\tADJ\t_\t_\t2\tacl:relcl\t_\t_\n\
6\tis\tbe\tAUX\t_\t_\t7\taux\t_\t_\n\
7\twalking\twalk\tVERB\t_\t_\t0\troot\t_\t_\n\
8\tin\tin\tADP\t_\t_\t10\tcase\t_\t_\n\
9\tthe\tthe\tDET\t_\t_\t10\tdet\t_\t_\n\
10\train\train\tNOUN\t_\t_\t7\tobl\t_\t_\n";
        let s = parse_single(doc).unwrap();
        assert_eq!(marks(&s), "↑↑↑↑↑↑↑↑↑=");
    }

    #[test]
    fn object_quantifier_scopes_over_verb() {
        // Every dog chases no cat
        let s = sent(&[
            ("Every", "every", "DET", 2, "det"),
            ("dog", "dog", "NOUN", 3, "nsubj"),
            ("chases", "chase", "VERB", 0, "root"),
            ("no", "no", "DET", 5, "det"),
            ("cat", "cat", "NOUN", 3, "obj"),
        ]);
        assert_eq!(marks(&s), "↑↓↓↑↓");
    }

    #[test]
    fn at_most_is_downward_both_sides() {
        // At most three dogs bark
        let s = sent(&[
            ("At", "at", "ADV", 3, "advmod"),
            ("most", "most", "ADV", 1, "fixed"),
            ("three", "three", "NUM", 4, "nummod"),
            ("dogs", "dog", "NOUN", 5, "nsubj"),
            ("bark", "bark", "VERB", 0, "root"),
        ]);
        assert_eq!(marks(&s), "↑↑↑↓↓");
    }

    #[test]
    fn unknown_determiner_preserves() {
        let s = sent(&[("Zorp", "zorp", "DET", 2, "det"), ("dogs", "dog", "NOUN", 3, "nsubj"), ("run", "run", "VERB", 0, "root")]);
        assert_eq!(marks(&s), "↑↑↑");
    }

    #[test]
    fn non_projective_rejected() {
        let s = sent(&[
            ("a", "a", "X", 3, "dep"),
            ("b", "b", "X", 4, "dep"),
            ("c", "c", "X", 0, "root"),
            ("d", "d", "X", 3, "dep"),
        ]);
        assert_eq!(binarize(&s), Err(StructureError::NonProjective));
    }

    #[test]
    fn annotate_format() {
        let pt = polarize_sentence(&every_healthy(), &QuantifierLexicon::default()).unwrap();
        assert_eq!(pt.annotate(), "Every^↑ healthy^↓ person^↓ plays^↑ sports^↑");
    }
}
