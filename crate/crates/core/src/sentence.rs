//! Dependency-parsed sentences and the structural edits the generators apply to them.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::StructureError;

/// One basic token of a CoNLL-U sentence.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct UDToken {
    /// 1-based position in the sentence.
    pub id: usize,
    pub form: String,
    pub lemma: String,
    pub upos: String,
    /// Governor id, 0 for the root.
    pub head: usize,
    pub deprel: String,
}

impl UDToken {
    pub fn new(id: usize, form: &str, lemma: &str, upos: &str, head: usize, deprel: &str) -> Self {
        UDToken {
            id,
            form: form.to_string(),
            lemma: lemma.to_string(),
            upos: upos.to_string(),
            head,
            deprel: deprel.to_string(),
        }
    }

    /// Lowercased lemma, falling back to the form when the lemma is `_`.
    pub fn norm_lemma(&self) -> String {
        if self.lemma.is_empty() || self.lemma == "_" {
            self.form.to_lowercase()
        } else {
            self.lemma.to_lowercase()
        }
    }

    pub fn is_punct(&self) -> bool {
        self.upos == "PUNCT" || self.deprel == "punct"
    }

    /// The deprel without its subtype (`acl:relcl` -> `acl`).
    pub fn base_rel(&self) -> &str {
        self.deprel.split(':').next().unwrap_or("")
    }
}

/// A token list forming one dependency tree.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Sentence {
    pub text: String,
    pub tokens: Vec<UDToken>,
}

impl Sentence {
    /// Builds a sentence, deriving the text from the forms.
    pub fn from_tokens(tokens: Vec<UDToken>) -> Self {
        let text = join_forms(tokens.iter().map(|t| t.form.as_str()));
        Sentence { text, tokens }
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn token(&self, id: usize) -> Option<&UDToken> {
        if id == 0 {
            return None;
        }
        self.tokens.get(id - 1)
    }

    /// Panicking accessor for ids known to be valid.
    pub fn tok(&self, id: usize) -> &UDToken {
        &self.tokens[id - 1]
    }

    pub fn root(&self) -> Option<usize> {
        self.tokens.iter().find(|t| t.head == 0).map(|t| t.id)
    }

    /// Direct dependents of `id` (0 gives the root) in surface order.
    pub fn children(&self, id: usize) -> Vec<usize> {
        self.tokens
            .iter()
            .filter(|t| t.head == id)
            .map(|t| t.id)
            .collect()
    }

    /// All ids in the subtree of `id`, including `id`, sorted.
    pub fn subtree(&self, id: usize) -> BTreeSet<usize> {
        let mut out = BTreeSet::new();
        let mut stack = vec![id];
        while let Some(cur) = stack.pop() {
            if out.insert(cur) {
                stack.extend(self.children(cur));
            }
        }
        out
    }

    /// True when `anc` dominates `id` (or equals it).
    pub fn dominates(&self, anc: usize, mut id: usize) -> bool {
        let mut guard = 0;
        while id != 0 && guard <= self.len() {
            if id == anc {
                return true;
            }
            id = self.tok(id).head;
            guard += 1;
        }
        false
    }

    pub fn lemmas(&self) -> Vec<String> {
        self.tokens.iter().map(UDToken::norm_lemma).collect()
    }

    /// Lowercased lemma sequence without punctuation; used for goal tests and dedup.
    pub fn lemma_key(&self) -> String {
        self.tokens
            .iter()
            .filter(|t| !t.is_punct())
            .map(UDToken::norm_lemma)
            .collect::<Vec<_>>()
            .join(" ")
    }

    /// Surface text of a set of token ids, in surface order.
    pub fn span_text<'a, I: IntoIterator<Item = &'a usize>>(&self, ids: I) -> String {
        let mut ids: Vec<usize> = ids.into_iter().copied().collect();
        ids.sort_unstable();
        join_forms(ids.iter().map(|&i| self.tok(i).form.as_str()))
    }

    /// Checks ids, head ranges, self-loops, cycles and the single-root condition.
    pub fn validate(&self) -> Result<(), StructureError> {
        let n = self.len();
        let mut roots = 0;
        for (i, t) in self.tokens.iter().enumerate() {
            if t.id != i + 1 {
                return Err(StructureError::BadId { expected: i + 1, found: t.id });
            }
            if t.head > n {
                return Err(StructureError::HeadOutOfRange { id: t.id, head: t.head });
            }
            if t.head == t.id {
                return Err(StructureError::SelfLoop(t.id));
            }
            if t.head == 0 {
                roots += 1;
            }
        }
        for t in &self.tokens {
            let mut cur = t.head;
            let mut steps = 0;
            while cur != 0 {
                steps += 1;
                if steps > n {
                    return Err(StructureError::Cycle(t.id));
                }
                cur = self.tok(cur).head;
            }
        }
        if n > 0 && roots != 1 {
            return Err(StructureError::RootCount(roots));
        }
        Ok(())
    }

    /// True when every subtree covers a contiguous id range.
    pub fn is_projective(&self) -> bool {
        self.tokens.iter().all(|t| {
            let sub = self.subtree(t.id);
            let lo = *sub.iter().next().unwrap();
            let hi = *sub.iter().next_back().unwrap();
            hi - lo + 1 == sub.len()
        })
    }

    /// Cuts the subtree of `id` out into a standalone fragment.
    pub fn fragment(&self, ids: &BTreeSet<usize>) -> Fragment {
        let order: Vec<usize> = ids.iter().copied().collect();
        let tokens = order
            .iter()
            .map(|&i| {
                let t = self.tok(i);
                FragmentToken {
                    form: t.form.clone(),
                    lemma: t.lemma.clone(),
                    upos: t.upos.clone(),
                    deprel: t.deprel.clone(),
                    head: order.iter().position(|&j| j == t.head),
                }
            })
            .collect();
        Fragment { tokens }
    }

    /// Like [`fragment`](Self::fragment), but every token whose head lies outside `ids` is
    /// attached to `anchor`, so the fragment has a single root.
    pub fn fragment_rooted(&self, ids: &BTreeSet<usize>, anchor: usize) -> Fragment {
        let mut f = self.fragment(ids);
        let Some(ai) = ids.iter().position(|&i| i == anchor) else { return f };
        for (k, t) in f.tokens.iter_mut().enumerate() {
            if t.head.is_none() && k != ai {
                t.head = Some(ai);
            }
        }
        f
    }

    /// Removes the given ids. Any survivor whose head is removed is attached to `reattach`
    /// (an id in the old numbering that must survive) or made the root when `None`.
    fn remove_ids(&self, removed: &BTreeSet<usize>, reattach: Option<usize>) -> (Vec<UDToken>, Vec<usize>) {
        let mut new_id = vec![0usize; self.len() + 1];
        let mut next = 1;
        for t in &self.tokens {
            if !removed.contains(&t.id) {
                new_id[t.id] = next;
                next += 1;
            }
        }
        let mut out = Vec::with_capacity(next - 1);
        for t in &self.tokens {
            if removed.contains(&t.id) {
                continue;
            }
            let mut nt = t.clone();
            nt.id = new_id[t.id];
            nt.head = if t.head == 0 {
                0
            } else if removed.contains(&t.head) {
                reattach.map(|r| new_id[r]).unwrap_or(0)
            } else {
                new_id[t.head]
            };
            out.push(nt);
        }
        (out, new_id)
    }

    /// Deletes the subtree rooted at `id`.
    pub fn delete_subtree(&self, id: usize) -> Sentence {
        let sub = self.subtree(id);
        let (tokens, _) = self.remove_ids(&sub, None);
        Sentence::from_tokens(tokens)
    }

    /// Replaces lemma and form of one token.
    pub fn substitute(&self, id: usize, lemma: &str, form: &str) -> Sentence {
        let mut tokens = self.tokens.clone();
        tokens[id - 1].lemma = lemma.to_string();
        tokens[id - 1].form = form.to_string();
        Sentence::from_tokens(tokens)
    }

    /// Inserts `frag` before position `at` (1-based, `len+1` appends), attaching its root to
    /// `head` (old numbering, 0 for root) with `deprel`.
    pub fn insert_fragment(&self, frag: &Fragment, at: usize, head: usize, deprel: &str) -> Sentence {
        let k = frag.tokens.len();
        let shift = |old: usize| if old >= at { old + k } else { old };
        let mut tokens: Vec<UDToken> = Vec::with_capacity(self.len() + k);
        for t in self.tokens.iter().filter(|t| t.id < at) {
            let mut nt = t.clone();
            nt.head = if t.head == 0 { 0 } else { shift(t.head) };
            tokens.push(nt);
        }
        let new_head = if head == 0 { 0 } else { shift(head) };
        for (j, ft) in frag.tokens.iter().enumerate() {
            tokens.push(UDToken {
                id: at + j,
                form: ft.form.clone(),
                lemma: ft.lemma.clone(),
                upos: ft.upos.clone(),
                head: match ft.head {
                    Some(h) => at + h,
                    None => new_head,
                },
                deprel: if ft.head.is_none() { deprel.to_string() } else { ft.deprel.clone() },
            });
        }
        for t in self.tokens.iter().filter(|t| t.id >= at) {
            let mut nt = t.clone();
            nt.id = t.id + k;
            nt.head = if t.head == 0 { 0 } else { shift(t.head) };
            tokens.push(nt);
        }
        Sentence::from_tokens(tokens)
    }

    /// Replaces the contiguous `span` (whose top token is `anchor`) with `frag`.
    ///
    /// The fragment root takes the anchor's head and relation; tokens outside the span whose
    /// head was inside it are re-attached to the fragment root.
    pub fn replace_span(&self, span: &BTreeSet<usize>, anchor: usize, frag: &Fragment) -> Sentence {
        let start = *span.iter().next().expect("empty span");
        let anchor_tok = self.tok(anchor);
        let (anchor_head, anchor_rel) = (anchor_tok.head, anchor_tok.deprel.clone());
        // Mark outside dependents of the span with a sentinel head, removal maps them to 0.
        let (kept, new_id) = self.remove_ids(span, None);
        let orphans: BTreeSet<usize> = self
            .tokens
            .iter()
            .filter(|t| !span.contains(&t.id) && span.contains(&t.head))
            .map(|t| new_id[t.id])
            .collect();
        let host = Sentence::from_tokens(kept);
        let at = start; // ids before `start` are unchanged by the removal
        let head_new = if anchor_head == 0 { 0 } else { new_id[anchor_head] };
        let mut out = host.insert_fragment(frag, at, head_new, &anchor_rel);
        let k = frag.tokens.len();
        let root_pos = frag.root_index().map(|r| at + r).unwrap_or(at);
        for t in out.tokens.iter_mut() {
            let old = if t.id >= at + k { t.id - k } else if t.id < at { t.id } else { continue };
            if orphans.contains(&old) {
                t.head = root_pos;
            }
        }
        out
    }
}

impl fmt::Display for Sentence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.text)
    }
}

/// A detached subtree: tokens in surface order with heads relative to the fragment.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Fragment {
    pub tokens: Vec<FragmentToken>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FragmentToken {
    pub form: String,
    pub lemma: String,
    pub upos: String,
    pub deprel: String,
    /// Index of the head within the fragment; `None` marks the fragment root.
    pub head: Option<usize>,
}

impl Fragment {
    pub fn root_index(&self) -> Option<usize> {
        self.tokens.iter().position(|t| t.head.is_none())
    }

    pub fn text(&self) -> String {
        join_forms(self.tokens.iter().map(|t| t.form.as_str()))
    }

    pub fn lemma_key(&self) -> String {
        self.tokens
            .iter()
            .filter(|t| t.upos != "PUNCT")
            .map(|t| if t.lemma == "_" { t.form.to_lowercase() } else { t.lemma.to_lowercase() })
            .collect::<Vec<_>>()
            .join(" ")
    }
}

/// Joins surface forms with single spaces, attaching punctuation to the left.
pub fn join_forms<'a, I: IntoIterator<Item = &'a str>>(forms: I) -> String {
    let mut out = String::new();
    for f in forms {
        let glue = matches!(f, "," | "." | "!" | "?" | ";" | ":" | "'s" | "n't");
        if !out.is_empty() && !glue {
            out.push(' ');
        }
        out.push_str(f);
    }
    out
}
