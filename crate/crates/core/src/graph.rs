//! Sentence representation graphs, premise/hypothesis alignment and generator recommendation.
//!
//! Vertices are the non-punctuation tokens plus a virtual root (id 0). The virtual root points
//! at the main predicate and its subjects; every other edge runs from a head to a dependent.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::sentence::Sentence;

/// Id of the virtual root vertex.
pub const ROOT: usize = 0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Role {
    Subject,
    Verb,
    Object,
    Other,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vertex {
    pub id: usize,
    pub lemma: String,
    pub upos: String,
    pub deprel: String,
    pub role: Role,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SentenceGraph {
    pub sentence: Sentence,
    vertices: BTreeMap<usize, Vertex>,
    parent: BTreeMap<usize, usize>,
    children: BTreeMap<usize, Vec<usize>>,
}

pub(crate) fn is_subject_rel(rel: &str) -> bool {
    matches!(rel.split(':').next(), Some("nsubj") | Some("csubj"))
}

pub(crate) fn is_object_rel(rel: &str) -> bool {
    matches!(rel.split(':').next(), Some("obj") | Some("iobj") | Some("obl"))
}

/// Builds the graph for a single-rooted parse.
pub fn build_graph(sentence: &Sentence) -> SentenceGraph {
    let mut vertices = BTreeMap::new();
    let mut parent = BTreeMap::new();
    let mut children: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    let root = sentence.root().unwrap_or(0);

    for t in &sentence.tokens {
        if t.is_punct() {
            continue;
        }
        let mut head = t.head;
        while head != 0 && sentence.tok(head).is_punct() {
            head = sentence.tok(head).head;
        }
        let (p, role) = if t.id == root {
            (ROOT, Role::Verb)
        } else if head == root && is_subject_rel(&t.deprel) {
            (ROOT, Role::Subject)
        } else if head == root && is_object_rel(&t.deprel) {
            (head, Role::Object)
        } else {
            (head, Role::Other)
        };
        vertices.insert(
            t.id,
            Vertex {
                id: t.id,
                lemma: t.norm_lemma(),
                upos: t.upos.clone(),
                deprel: t.deprel.clone(),
                role,
            },
        );
        parent.insert(t.id, p);
        children.entry(p).or_default().push(t.id);
    }
    SentenceGraph { sentence: sentence.clone(), vertices, parent, children }
}

impl SentenceGraph {
    pub fn vertex(&self, id: usize) -> Option<&Vertex> {
        self.vertices.get(&id)
    }

    pub fn vertices(&self) -> impl Iterator<Item = &Vertex> {
        self.vertices.values()
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    /// Children of `id` (`ROOT` for the virtual root), in surface order.
    pub fn children(&self, id: usize) -> &[usize] {
        self.children.get(&id).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn parent(&self, id: usize) -> Option<usize> {
        self.parent.get(&id).copied()
    }

    /// All `(content, modifier)` edges; edges out of the virtual root are excluded.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        self.parent
            .iter()
            .filter(|(_, &p)| p != ROOT)
            .map(|(&c, &p)| (p, c))
            .collect()
    }

    /// Heads, component-level vertices and nouns/verbs.
    pub fn is_content(&self, id: usize) -> bool {
        match self.vertices.get(&id) {
            Some(v) => {
                !self.children(id).is_empty()
                    || v.role != Role::Other
                    || matches!(v.upos.as_str(), "NOUN" | "PROPN" | "VERB")
            }
            None => false,
        }
    }

    /// Vertices attached below a content vertex.
    pub fn is_modifier(&self, id: usize) -> bool {
        self.parent(id).is_some_and(|p| p != ROOT)
    }

    pub fn content_vertices(&self) -> Vec<usize> {
        self.vertices.keys().copied().filter(|&v| self.is_content(v)).collect()
    }

    pub fn modifier_vertices(&self) -> Vec<usize> {
        self.vertices.keys().copied().filter(|&v| self.is_modifier(v)).collect()
    }

    pub fn components(&self) -> Vec<usize> {
        self.vertices.values().filter(|v| v.role != Role::Other).map(|v| v.id).collect()
    }

    pub fn with_role(&self, role: Role) -> Vec<usize> {
        self.vertices.values().filter(|v| v.role == role).map(|v| v.id).collect()
    }

    /// The main predicate.
    pub fn predicate(&self) -> Option<usize> {
        self.children(ROOT).iter().copied().find(|&c| self.vertices[&c].role == Role::Verb)
    }

    /// Strict descendants of `id` in the graph.
    pub fn descendants(&self, id: usize) -> BTreeSet<usize> {
        let mut out = BTreeSet::new();
        let mut stack: Vec<usize> = self.children(id).to_vec();
        while let Some(c) = stack.pop() {
            if out.insert(c) {
                stack.extend_from_slice(self.children(c));
            }
        }
        out
    }

    /// Vertices in pre-order from the virtual root.
    pub fn preorder(&self) -> Vec<usize> {
        let mut out = Vec::new();
        let mut stack = vec![ROOT];
        while let Some(v) = stack.pop() {
            if v != ROOT {
                out.push(v);
            }
            for &c in self.children(v).iter().rev() {
                stack.push(c);
            }
        }
        out
    }
}

/// One aligned vertex pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AlignedPair {
    pub premise: usize,
    pub hypothesis: usize,
    pub score: f64,
}

/// A partial injective matching between premise and hypothesis vertices.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct AlignmentSet {
    pairs: Vec<AlignedPair>,
}

impl AlignmentSet {
    pub fn pairs(&self) -> &[AlignedPair] {
        &self.pairs
    }

    pub fn partner_of_premise(&self, p: usize) -> Option<usize> {
        self.pairs.iter().find(|x| x.premise == p).map(|x| x.hypothesis)
    }

    pub fn partner_of_hypothesis(&self, h: usize) -> Option<usize> {
        self.pairs.iter().find(|x| x.hypothesis == h).map(|x| x.premise)
    }

    pub fn score(&self, p: usize, h: usize) -> Option<f64> {
        self.pairs.iter().find(|x| x.premise == p && x.hypothesis == h).map(|x| x.score)
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn is_injective(&self) -> bool {
        let ps: BTreeSet<usize> = self.pairs.iter().map(|x| x.premise).collect();
        let hs: BTreeSet<usize> = self.pairs.iter().map(|x| x.hypothesis).collect();
        ps.len() == self.pairs.len() && hs.len() == self.pairs.len()
    }
}

/// Pairs considered for alignment: the component-level cross product, then children of each
/// pair recursively.
pub fn candidate_pairs(gp: &SentenceGraph, gh: &SentenceGraph) -> Vec<(usize, usize)> {
    let mut seen = BTreeSet::new();
    let mut stack: Vec<(usize, usize)> = Vec::new();
    for &p in gp.components().iter().rev() {
        for &h in gh.components().iter().rev() {
            stack.push((p, h));
        }
    }
    while let Some((p, h)) = stack.pop() {
        if !seen.insert((p, h)) {
            continue;
        }
        for &cp in gp.children(p) {
            for &ch in gh.children(h) {
                stack.push((cp, ch));
            }
        }
    }
    seen.into_iter().collect()
}

fn better(a: (f64, usize, usize), b: (f64, usize, usize)) -> bool {
    // higher score, then smaller index distance, then smaller ids
    if a.0 != b.0 {
        return a.0 > b.0;
    }
    let (da, db) = (a.1.abs_diff(a.2), b.1.abs_diff(b.2));
    if da != db {
        return da < db;
    }
    (a.1, a.2) < (b.1, b.2)
}

/// Three-round alignment over pre-scored candidates (`scores[i]` belongs to `candidates[i]`).
pub fn align_scored(candidates: &[(usize, usize)], scores: &[f64], threshold: f64) -> AlignmentSet {
    // round 1: best partner per premise vertex
    let mut best_p: BTreeMap<usize, (f64, usize, usize)> = BTreeMap::new();
    for (&(p, h), &s) in candidates.iter().zip(scores) {
        let s = s.clamp(0.0, 1.0);
        let cand = (s, p, h);
        match best_p.get(&p) {
            Some(&cur) if !better(cand, cur) => {}
            _ => {
                best_p.insert(p, cand);
            }
        }
    }
    // round 2: a hypothesis vertex claimed by several premise vertices keeps the best one
    let mut best_h: BTreeMap<usize, (f64, usize, usize)> = BTreeMap::new();
    for &cand in best_p.values() {
        if cand.0 < threshold {
            continue;
        }
        match best_h.get(&cand.2) {
            Some(&cur) if !better(cand, cur) => {}
            _ => {
                best_h.insert(cand.2, cand);
            }
        }
    }
    // round 3: the same check from the premise side
    let mut final_p: BTreeMap<usize, (f64, usize, usize)> = BTreeMap::new();
    for &cand in best_h.values() {
        match final_p.get(&cand.1) {
            Some(&cur) if !better(cand, cur) => {}
            _ => {
                final_p.insert(cand.1, cand);
            }
        }
    }
    AlignmentSet {
        pairs: final_p
            .values()
            .map(|&(score, premise, hypothesis)| AlignedPair { premise, hypothesis, score })
            .collect(),
    }
}

/// Aligns two graphs with a word-similarity function over vertex pairs.
pub fn align<F>(gp: &SentenceGraph, gh: &SentenceGraph, wsim: F, threshold: f64) -> AlignmentSet
where
    F: Fn(&Vertex, &Vertex) -> f64,
{
    let cands = candidate_pairs(gp, gh);
    let scores: Vec<f64> = cands
        .iter()
        .map(|&(p, h)| wsim(gp.vertex(p).unwrap(), gh.vertex(h).unwrap()))
        .collect();
    align_scored(&cands, &scores, threshold)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Directive {
    Lexical,
    PhrasalDelete,
    PhrasalInsert,
    SyntacticVariation,
    None,
}

impl fmt::Display for Directive {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Directive::Lexical => "LEXICAL",
            Directive::PhrasalDelete => "PHRASAL_DELETE",
            Directive::PhrasalInsert => "PHRASAL_INSERT",
            Directive::SyntacticVariation => "SYNTACTIC_VARIATION",
            Directive::None => "NONE",
        };
        f.write_str(s)
    }
}

/// The generator families a recommendation can ask for.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Module {
    Lexical,
    Phrasal,
    SyntacticVariation,
}

/// Per-vertex directives on both sides.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Recommendation {
    pub premise: BTreeMap<usize, Directive>,
    pub hypothesis: BTreeMap<usize, Directive>,
}

impl Recommendation {
    pub fn premise_directive(&self, id: usize) -> Directive {
        self.premise.get(&id).copied().unwrap_or(Directive::None)
    }

    pub fn hypothesis_directive(&self, id: usize) -> Directive {
        self.hypothesis.get(&id).copied().unwrap_or(Directive::None)
    }

    pub fn is_all_none(&self) -> bool {
        self.premise.values().chain(self.hypothesis.values()).all(|d| *d == Directive::None)
    }

    /// Generator families the directives call for.
    pub fn modules(&self) -> BTreeSet<Module> {
        self.premise
            .values()
            .chain(self.hypothesis.values())
            .filter_map(|d| match d {
                Directive::Lexical => Some(Module::Lexical),
                Directive::PhrasalDelete | Directive::PhrasalInsert => Some(Module::Phrasal),
                Directive::SyntacticVariation => Some(Module::SyntacticVariation),
                Directive::None => None,
            })
            .collect()
    }
}

fn base(rel: &str) -> &str {
    rel.split(':').next().unwrap_or("")
}

/// Recommends which generator to apply where.
///
/// Unaligned premise vertices ask for deletion, unaligned hypothesis vertices for insertion,
/// aligned vertices with different lemmas for lexical substitution. An aligned vertex (other
/// than the main predicate) with two or more edit units beneath it on either side becomes a
/// syntactic-variation site, and the directives below it are suppressed. A deleted or inserted
/// subtree counts as one unit; so does an aligned pair whose relation changed.
pub fn recommend(gp: &SentenceGraph, gh: &SentenceGraph, a: &AlignmentSet) -> Recommendation {
    let mut rec = Recommendation::default();
    let mut p_units = BTreeSet::new();
    let mut h_units = BTreeSet::new();

    for v in gp.vertices() {
        let d = match a.partner_of_premise(v.id) {
            None => {
                let parent_aligned = gp
                    .parent(v.id)
                    .is_some_and(|p| p == ROOT || a.partner_of_premise(p).is_some());
                if parent_aligned {
                    p_units.insert(v.id);
                }
                Directive::PhrasalDelete
            }
            Some(h) => {
                let hv = gh.vertex(h).unwrap();
                if hv.lemma != v.lemma {
                    p_units.insert(v.id);
                    Directive::Lexical
                } else {
                    if base(&hv.deprel) != base(&v.deprel) {
                        p_units.insert(v.id);
                    }
                    Directive::None
                }
            }
        };
        rec.premise.insert(v.id, d);
    }
    for v in gh.vertices() {
        let d = match a.partner_of_hypothesis(v.id) {
            None => {
                let parent_aligned = gh
                    .parent(v.id)
                    .is_some_and(|p| p == ROOT || a.partner_of_hypothesis(p).is_some());
                if parent_aligned {
                    h_units.insert(v.id);
                }
                Directive::PhrasalInsert
            }
            Some(p) => {
                if gp.vertex(p).unwrap().lemma != v.lemma {
                    Directive::Lexical
                } else {
                    Directive::None
                }
            }
        };
        rec.hypothesis.insert(v.id, d);
    }

    let predicate = gp.predicate();
    let mut suppressed_p = BTreeSet::new();
    let mut suppressed_h = BTreeSet::new();
    for v in gp.preorder() {
        if suppressed_p.contains(&v) || Some(v) == predicate {
            continue;
        }
        let Some(h) = a.partner_of_premise(v) else { continue };
        let below_p = gp.descendants(v);
        let below_h = gh.descendants(h);
        let units = below_p.iter().filter(|x| p_units.contains(x)).count()
            + below_h.iter().filter(|x| h_units.contains(x)).count();
        if units >= 2 {
            rec.premise.insert(v, Directive::SyntacticVariation);
            rec.hypothesis.insert(h, Directive::SyntacticVariation);
            suppressed_p.extend(below_p);
            suppressed_h.extend(below_h);
        }
    }
    for v in suppressed_p {
        rec.premise.insert(v, Directive::None);
    }
    for v in suppressed_h {
        rec.hypothesis.insert(v, Directive::None);
    }
    rec
}
