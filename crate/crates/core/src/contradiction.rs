//! Contradiction detection: signature patterns over aligned graphs, cancellation of paired
//! negations, and a polarity check that everything outside the signatures keeps its meaning.

use std::collections::BTreeSet;
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::KbError;
use crate::graph::{AlignmentSet, Role, SentenceGraph, ROOT};
use crate::kb::{KnowledgeBase, LexicalRelationKind, QuantifierScale, ScaleOrder};
use crate::polarity::{Polarity, PolarizedTree};

const BUNDLED_DISJOINT: &str = include_str!("../data/disjoint_actions.tsv");

const NEGATIVE_PRONOUNS: &[&str] = &["nobody", "nothing", "none", "no-one", "noone"];
const NEGATIVE_DETERMINERS: &[&str] = &["no", "neither"];
const VERB_NEGATORS: &[&str] = &["not", "n't", "never"];
const ARTICLES: &[&str] = &["a", "an", "the"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum SignatureKind {
    QuantifierNegation,
    VerbNegation,
    NounNegation,
    ActionContradiction,
    DirectionContradiction,
}

impl SignatureKind {
    pub fn tag(self) -> &'static str {
        match self {
            SignatureKind::QuantifierNegation => "QUANTIFIER_NEGATION",
            SignatureKind::VerbNegation => "VERB_NEGATION",
            SignatureKind::NounNegation => "NOUN_NEGATION",
            SignatureKind::ActionContradiction => "ACTION_CONTRADICTION",
            SignatureKind::DirectionContradiction => "DIRECTION_CONTRADICTION",
        }
    }

    /// Negation-like signatures cancel in pairs when they share a clause.
    pub fn is_negation_like(self) -> bool {
        self != SignatureKind::DirectionContradiction
    }
}

impl fmt::Display for SignatureKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ContradictionSignature {
    pub kind: SignatureKind,
    /// Premise predicate the signature belongs to (0 when there is none).
    pub site: usize,
    pub premise_tokens: Vec<usize>,
    pub hypothesis_tokens: Vec<usize>,
    pub detail: String,
}

/// Unordered pairs of verbs that cannot hold of the same agent at once.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct DisjointActions {
    pairs: BTreeSet<(String, String)>,
}

impl DisjointActions {
    pub fn bundled() -> Self {
        Self::parse(BUNDLED_DISJOINT).expect("bundled disjoint-action list is well-formed")
    }

    pub fn parse(text: &str) -> Result<Self, KbError> {
        let mut d = DisjointActions::default();
        for (i, line) in text.lines().enumerate() {
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let cols: Vec<&str> = line.split('\t').map(str::trim).collect();
            if cols.len() != 2 {
                return Err(KbError::Format { line: i + 1, msg: "expected two tab-separated verbs".into() });
            }
            d.insert(cols[0], cols[1]);
        }
        Ok(d)
    }

    pub fn load(path: &Path) -> Result<Self, KbError> {
        let text = std::fs::read_to_string(path).map_err(|source| KbError::Io { path: path.to_path_buf(), source })?;
        Self::parse(&text)
    }

    pub fn insert(&mut self, a: &str, b: &str) {
        let (a, b) = (a.to_lowercase(), b.to_lowercase());
        self.pairs.insert(if a <= b { (a, b) } else { (b, a) });
    }

    pub fn contains(&self, a: &str, b: &str) -> bool {
        let (a, b) = (a.to_lowercase(), b.to_lowercase());
        self.pairs.contains(&if a <= b { (a, b) } else { (b, a) })
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }
}

/// Read-only lexical resources the detector consults.
#[derive(Clone, Copy)]
pub struct Lexicons<'a> {
    pub kb: &'a KnowledgeBase,
    pub scale: &'a QuantifierScale,
    pub disjoint: &'a DisjointActions,
}

fn lemma(g: &SentenceGraph, id: usize) -> &str {
    &g.vertex(id).unwrap().lemma
}

fn determiner(g: &SentenceGraph, id: usize) -> Option<usize> {
    g.children(id).iter().copied().find(|&c| g.vertex(c).unwrap().deprel.split(':').next() == Some("det"))
}

/// Whether a nominal is negated, and the token that makes it so.
fn negativity(g: &SentenceGraph, id: usize) -> (bool, usize) {
    if NEGATIVE_PRONOUNS.contains(&lemma(g, id)) {
        return (true, id);
    }
    match determiner(g, id) {
        Some(d) if NEGATIVE_DETERMINERS.contains(&lemma(g, d)) => (true, d),
        _ => (false, id),
    }
}

fn same_word(kb: &KnowledgeBase, a: &str, b: &str) -> bool {
    a == b || kb.relates_any_pos(a, LexicalRelationKind::Synonym, b)
}

/// Pairs the nominals filling one role: by position when each side has exactly one, otherwise
/// through the alignment.
fn role_pairs(gp: &SentenceGraph, gh: &SentenceGraph, a: &AlignmentSet, role: Role) -> Vec<(usize, usize)> {
    let ps = gp.with_role(role);
    let hs = gh.with_role(role);
    if ps.len() == 1 && hs.len() == 1 {
        return vec![(ps[0], hs[0])];
    }
    ps.iter()
        .filter_map(|&p| a.partner_of_premise(p).filter(|h| hs.contains(h)).map(|h| (p, h)))
        .collect()
}

fn negators(g: &SentenceGraph, v: usize) -> Vec<usize> {
    g.children(v).iter().copied().filter(|&c| VERB_NEGATORS.contains(&lemma(g, c))).collect()
}

/// Finds every contradiction signature between the premise and hypothesis graphs.
pub fn detect_signatures(
    gp: &SentenceGraph,
    gh: &SentenceGraph,
    a: &AlignmentSet,
    lx: Lexicons<'_>,
) -> Vec<ContradictionSignature> {
    let mut out = Vec::new();
    let site = gp.predicate().unwrap_or(0);
    let with_det = |g: &SentenceGraph, v: usize| -> Vec<usize> {
        let mut t: Vec<usize> = determiner(g, v).into_iter().collect();
        t.push(v);
        t
    };

    for role in [Role::Subject, Role::Object] {
        for (p, h) in role_pairs(gp, gh, a, role) {
            let (np, tp) = negativity(gp, p);
            let (nh, th) = negativity(gh, h);
            if np == nh {
                continue;
            }
            let (g, t) = if np { (gp, tp) } else { (gh, th) };
            let pronoun = g.vertex(t).unwrap().upos == "PRON" || NEGATIVE_PRONOUNS.contains(&lemma(g, t));
            let kind = if pronoun { SignatureKind::NounNegation } else { SignatureKind::QuantifierNegation };
            out.push(ContradictionSignature {
                kind,
                site,
                premise_tokens: with_det(gp, p),
                hypothesis_tokens: with_det(gh, h),
                detail: format!("{} / {}", gp.sentence.span_text(&with_det(gp, p)), gh.sentence.span_text(&with_det(gh, h))),
            });
        }
    }

    let (Some(vp), Some(vh)) = (gp.predicate(), gh.predicate()) else { return out };

    let (negp, negh) = (negators(gp, vp), negators(gh, vh));
    for _ in 0..negp.len().abs_diff(negh.len()) {
        out.push(ContradictionSignature {
            kind: SignatureKind::VerbNegation,
            site,
            premise_tokens: negp.clone(),
            hypothesis_tokens: negh.clone(),
            detail: format!("{} negator(s) / {}", negp.len(), negh.len()),
        });
    }

    let (lp, lh) = (lemma(gp, vp), lemma(gh, vh));
    let pos = &gp.vertex(vp).unwrap().upos;
    if lp != lh
        && (lx.kb.relates(lp, pos, LexicalRelationKind::Antonym, lh)
            || lx.kb.relates_any_pos(lp, LexicalRelationKind::Antonym, lh)
            || lx.disjoint.contains(lp, lh))
    {
        out.push(ContradictionSignature {
            kind: SignatureKind::ActionContradiction,
            site,
            premise_tokens: vec![vp],
            hypothesis_tokens: vec![vh],
            detail: format!("{} / {}", lp, lh),
        });
    }
    for pair in a.pairs() {
        let (x, y) = (lemma(gp, pair.premise), lemma(gh, pair.hypothesis));
        if lx.scale.compare(x, y) == ScaleOrder::Perp {
            out.push(ContradictionSignature {
                kind: SignatureKind::ActionContradiction,
                site,
                premise_tokens: vec![pair.premise],
                hypothesis_tokens: vec![pair.hypothesis],
                detail: format!("{} / {}", x, y),
            });
        }
    }

    let subj = |g: &SentenceGraph| {
        let s = g.with_role(Role::Subject);
        (s.len() == 1).then(|| s[0])
    };
    let obj = |g: &SentenceGraph, v: usize| {
        let o: Vec<usize> = g
            .children(v)
            .iter()
            .copied()
            .filter(|&c| g.vertex(c).unwrap().deprel == "obj")
            .collect();
        (o.len() == 1).then(|| o[0])
    };
    if let (Some(sp), Some(op), Some(sh), Some(oh)) = (subj(gp), obj(gp, vp), subj(gh), obj(gh, vh)) {
        let same = |x: usize, gx: &SentenceGraph, y: usize, gy: &SentenceGraph| same_word(lx.kb, lemma(gx, x), lemma(gy, y));
        let crossed = same(sp, gp, oh, gh) && same(op, gp, sh, gh);
        let straight = same(sp, gp, sh, gh) && same(op, gp, oh, gh);
        if crossed && !straight && same_word(lx.kb, lp, lh) {
            out.push(ContradictionSignature {
                kind: SignatureKind::DirectionContradiction,
                site,
                premise_tokens: vec![sp, op],
                hypothesis_tokens: vec![sh, oh],
                detail: format!("{} {} {} / {} {} {}", lemma(gp, sp), lp, lemma(gp, op), lemma(gh, sh), lh, lemma(gh, oh)),
            });
        }
    }
    out
}

/// Removes negation-like signatures that pair off within the same clause. An odd one out
/// survives; direction signatures are never cancelled.
pub fn cancel(sigs: &[ContradictionSignature]) -> Vec<ContradictionSignature> {
    let sites: BTreeSet<usize> = sigs.iter().map(|s| s.site).collect();
    let mut keep = vec![false; sigs.len()];
    for site in sites {
        let idx: Vec<usize> = (0..sigs.len())
            .filter(|&i| sigs[i].site == site && sigs[i].kind.is_negation_like())
            .collect();
        if idx.len() % 2 == 1 {
            keep[idx[0]] = true;
        }
    }
    sigs.iter()
        .enumerate()
        .filter(|(i, s)| keep[*i] || !s.kind.is_negation_like())
        .map(|(_, s)| s.clone())
        .collect()
}

fn is_function_word(upos: &str, lemma: &str) -> bool {
    match upos {
        "AUX" | "PUNCT" | "CCONJ" | "SCONJ" => true,
        "PART" => !VERB_NEGATORS.contains(&lemma),
        "DET" => !NEGATIVE_DETERMINERS.contains(&lemma),
        _ => false,
    }
}

fn number(l: &str) -> Option<f64> {
    crate::generation::number_value(l)
}

/// Whether replacing `from` by `to` at a position marked `mark` keeps the premise's meaning
/// or weakens it.
pub fn substitution_licensed(kb: &KnowledgeBase, scale: &QuantifierScale, from: &str, pos: &str, to: &str, mark: Polarity) -> bool {
    if from == to || kb.relates_any_pos(from, LexicalRelationKind::Synonym, to) {
        return true;
    }
    if ARTICLES.contains(&from) && ARTICLES.contains(&to) {
        return true;
    }
    match (scale.compare(from, to), mark) {
        (ScaleOrder::Eq, _) | (ScaleOrder::Leq, Polarity::Up) | (ScaleOrder::Geq, Polarity::Down) => return true,
        (ScaleOrder::Incomparable, _) => {}
        _ => return false,
    }
    if let (Some(a), Some(b)) = (number(from), number(to)) {
        return match mark {
            Polarity::Up => b < a,
            Polarity::Down => b > a,
            Polarity::Flat => false,
        };
    }
    match mark {
        Polarity::Up => kb.relates(from, pos, LexicalRelationKind::Hypernym, to),
        Polarity::Down => kb.relates(from, pos, LexicalRelationKind::Hyponym, to),
        Polarity::Flat => false,
    }
}

/// Checks that every difference not explained by a signature is licensed by the premise's
/// polarity: deleted material must hang under an upward head, inserted material under a
/// downward one, and substitutions must follow the knowledge base in the marked direction.
pub fn verify_meaning_preserved(
    gp: &SentenceGraph,
    gh: &SentenceGraph,
    a: &AlignmentSet,
    premise: &PolarizedTree,
    sigs: &[ContradictionSignature],
    kb: &KnowledgeBase,
    scale: &QuantifierScale,
) -> bool {
    let covered_p: BTreeSet<usize> = sigs.iter().flat_map(|s| s.premise_tokens.iter().copied()).collect();
    let covered_h: BTreeSet<usize> = sigs.iter().flat_map(|s| s.hypothesis_tokens.iter().copied()).collect();

    for v in gp.vertices() {
        if covered_p.contains(&v.id) {
            continue;
        }
        match a.partner_of_premise(v.id) {
            None => {
                let parent = gp.parent(v.id).unwrap_or(ROOT);
                let unit_root = parent == ROOT || a.partner_of_premise(parent).is_some();
                if !unit_root || is_function_word(&v.upos, &v.lemma) {
                    continue;
                }
                if parent == ROOT || premise.mark(parent) != Polarity::Up {
                    log::debug!("unlicensed deletion of `{}`", v.lemma);
                    return false;
                }
            }
            Some(h) => {
                if covered_h.contains(&h) {
                    continue;
                }
                let hv = gh.vertex(h).unwrap();
                if !substitution_licensed(kb, scale, &v.lemma, &v.upos, &hv.lemma, premise.mark(v.id)) {
                    log::debug!("unlicensed substitution `{}` -> `{}`", v.lemma, hv.lemma);
                    return false;
                }
            }
        }
    }
    for v in gh.vertices() {
        if covered_h.contains(&v.id) || a.partner_of_hypothesis(v.id).is_some() {
            continue;
        }
        let parent = gh.parent(v.id).unwrap_or(ROOT);
        let partner = if parent == ROOT { None } else { a.partner_of_hypothesis(parent) };
        let unit_root = parent == ROOT || partner.is_some();
        if !unit_root || is_function_word(&v.upos, &v.lemma) {
            continue;
        }
        if partner.map(|p| premise.mark(p)) != Some(Polarity::Down) {
            log::debug!("unlicensed insertion of `{}`", v.lemma);
            return false;
        }
    }
    true
}

/// Outcome of the contradiction test on one pair.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ContradictionCheck {
    pub detected: Vec<ContradictionSignature>,
    pub surviving: Vec<ContradictionSignature>,
    pub meaning_preserved: bool,
    pub contradiction: bool,
}

pub fn check_contradiction(
    gp: &SentenceGraph,
    gh: &SentenceGraph,
    a: &AlignmentSet,
    premise: &PolarizedTree,
    lx: Lexicons<'_>,
) -> ContradictionCheck {
    let detected = detect_signatures(gp, gh, a, lx);
    let surviving = cancel(&detected);
    let meaning_preserved = verify_meaning_preserved(gp, gh, a, premise, &detected, lx.kb, lx.scale);
    let contradiction = !surviving.is_empty() && meaning_preserved;
    ContradictionCheck { detected, surviving, meaning_preserved, contradiction }
}
