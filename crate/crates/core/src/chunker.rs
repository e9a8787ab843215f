//! Phrase chunks over a sentence graph.
//!
//! A content vertex's chunk is the vertex plus its direct modifiers (a modifier that is itself
//! a content vertex brings its own chunk along). Pieces are added outward from the anchor and
//! growth stops at the first piece that is not adjacent; punctuation between pieces is skipped
//! over. The main predicate's chunk leaves out its subjects and objects, which get their own
//! chunks; verb-phrase chunks then re-attach the objects one at a time.

use std::collections::BTreeSet;

use serde::Serialize;

use crate::graph::{Role, SentenceGraph};

/// A contiguous token span anchored at one content vertex.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Chunk {
    pub anchor: usize,
    pub span: BTreeSet<usize>,
    pub text: String,
}

impl Chunk {
    fn new(g: &SentenceGraph, anchor: usize, span: BTreeSet<usize>) -> Chunk {
        let text = g.sentence.span_text(&span);
        Chunk { anchor, span, text }
    }

    pub fn start(&self) -> usize {
        *self.span.iter().next().unwrap()
    }

    pub fn end(&self) -> usize {
        *self.span.iter().next_back().unwrap()
    }

    pub fn lemma_key(&self, g: &SentenceGraph) -> String {
        self.span
            .iter()
            .map(|&i| g.sentence.tok(i))
            .filter(|t| !t.is_punct())
            .map(|t| t.norm_lemma())
            .collect::<Vec<_>>()
            .join(" ")
    }
}

/// True when every token strictly between `lo` and `hi` is punctuation.
fn adjacent(g: &SentenceGraph, lo: usize, hi: usize) -> bool {
    (lo + 1..hi).all(|i| g.sentence.tok(i).is_punct())
}

fn piece(g: &SentenceGraph, v: usize) -> BTreeSet<usize> {
    let is_pred = g.vertex(v).is_some_and(|x| x.role == Role::Verb);
    let mut pieces: Vec<BTreeSet<usize>> = Vec::new();
    for &m in g.children(v) {
        if is_pred && g.vertex(m).is_some_and(|x| x.role == Role::Object) {
            continue;
        }
        pieces.push(if g.is_content(m) { piece(g, m) } else { [m].into_iter().collect() });
    }
    grow(g, v, pieces)
}

fn grow(g: &SentenceGraph, v: usize, pieces: Vec<BTreeSet<usize>>) -> BTreeSet<usize> {
    let mut span: BTreeSet<usize> = [v].into_iter().collect();
    let first = |s: &BTreeSet<usize>| *s.iter().next().unwrap();
    let last = |s: &BTreeSet<usize>| *s.iter().next_back().unwrap();

    let mut right: Vec<&BTreeSet<usize>> = pieces.iter().filter(|p| first(p) > v).collect();
    right.sort_by_key(|p| first(p));
    let mut hi = v;
    for p in right {
        if !adjacent(g, hi, first(p)) {
            break;
        }
        span.extend(p.iter().copied());
        hi = last(p);
    }

    let mut left: Vec<&BTreeSet<usize>> = pieces.iter().filter(|p| last(p) < v).collect();
    left.sort_by_key(|p| std::cmp::Reverse(last(p)));
    let mut lo = v;
    for p in left {
        if !adjacent(g, last(p), lo) {
            break;
        }
        span.extend(p.iter().copied());
        lo = first(p);
    }
    // interior punctuation belongs to the chunk
    span.extend((lo..=hi).filter(|&i| g.sentence.tok(i).is_punct()));
    span
}

/// One chunk per content vertex, in surface order of the anchors.
pub fn chunks_for(g: &SentenceGraph) -> Vec<Chunk> {
    g.content_vertices()
        .into_iter()
        .map(|v| Chunk::new(g, v, piece(g, v)))
        .collect()
}

/// Verb-phrase chunks: the predicate chunk extended by its objects, nearest first, one chunk
/// per object added while the span stays contiguous.
pub fn verb_phrase_chunks(g: &SentenceGraph) -> Vec<Chunk> {
    let Some(v) = g.predicate() else { return Vec::new() };
    let mut span = piece(g, v);
    let mut objects: Vec<usize> = g
        .children(v)
        .iter()
        .copied()
        .filter(|&c| g.vertex(c).is_some_and(|x| x.role == Role::Object))
        .collect();
    objects.sort_by_key(|&o| (o.abs_diff(v), o));
    let mut out = Vec::new();
    for o in objects {
        let obj = piece(g, o);
        let (lo, hi) = (*span.iter().next().unwrap(), *span.iter().next_back().unwrap());
        let (olo, ohi) = (*obj.iter().next().unwrap(), *obj.iter().next_back().unwrap());
        let joins = (olo > hi && adjacent(g, hi, olo)) || (ohi < lo && adjacent(g, ohi, lo));
        if !joins {
            continue;
        }
        span.extend(obj);
        let (lo, hi) = (*span.iter().next().unwrap(), *span.iter().next_back().unwrap());
        span.extend((lo..=hi).filter(|&i| g.sentence.tok(i).is_punct()));
        out.push(Chunk::new(g, v, span.clone()));
    }
    out
}

/// Base chunks followed by verb-phrase chunks.
pub fn all_chunks(g: &SentenceGraph) -> Vec<Chunk> {
    let mut out = chunks_for(g);
    out.extend(verb_phrase_chunks(g));
    out
}
