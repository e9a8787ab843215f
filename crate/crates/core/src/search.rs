//! The inference engine: beam search over rewrites from the premise towards the hypothesis,
//! falling back to contradiction detection when no rewrite path reaches it.

use std::collections::{BTreeSet, HashSet};
use std::fmt;
use std::str::FromStr;
use std::sync::{Arc, Mutex};

use serde::{Deserialize, Serialize};

use crate::conllu::check_tree;
use crate::contradiction::{check_contradiction, ContradictionCheck, DisjointActions, Lexicons};
use crate::error::{Error, Result, ScoringError};
use crate::generation::{lexical_infer, phrasal_infer, syntactic_variation_infer, Edit, GeneratedSentence, Target};
use crate::graph::{align_scored, build_graph, candidate_pairs, recommend, AlignmentSet, Module, SentenceGraph};
use crate::kb::{KnowledgeBase, QuantifierScale};
use crate::polarity::{polarize_sentence, PolarizedTree, QuantifierLexicon};
use crate::scoring::{euclidean, OfflineScorer, Phrase, Scorer, Word};
use crate::sentence::Sentence;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Label {
    Entail,
    Contradict,
    Neutral,
}

impl Label {
    pub const ALL: [Label; 3] = [Label::Entail, Label::Contradict, Label::Neutral];

    pub fn as_str(self) -> &'static str {
        match self {
            Label::Entail => "ENTAIL",
            Label::Contradict => "CONTRADICT",
            Label::Neutral => "NEUTRAL",
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Label {
    type Err = String;

    /// Accepts this crate's labels and the dataset spellings (`ENTAILMENT`, `contradiction`, ...).
    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.trim().to_ascii_uppercase().as_str() {
            "ENTAIL" | "ENTAILMENT" | "ENTAILS" => Ok(Label::Entail),
            "CONTRADICT" | "CONTRADICTION" => Ok(Label::Contradict),
            "NEUTRAL" | "NON-ENTAILMENT" | "UNKNOWN" => Ok(Label::Neutral),
            other => Err(format!("unknown label `{}`", other)),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SearchConfig {
    /// Number of states kept per level; `usize::MAX` keeps every state.
    pub beam_width: usize,
    pub max_depth: usize,
}

impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig { beam_width: 10, max_depth: 7 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EngineConfig {
    pub search: SearchConfig,
    pub syntactic_variation: bool,
    /// When off, the lexical and phrasal generators are disabled.
    pub monotonicity: bool,
    pub contradiction: bool,
    pub align_threshold: f64,
    pub paraphrase_threshold: f64,
    /// Fail on scorer errors instead of degrading.
    pub strict: bool,
}

impl Default for EngineConfig {
    fn default() -> Self {
        EngineConfig {
            search: SearchConfig::default(),
            syntactic_variation: true,
            monotonicity: true,
            contradiction: true,
            align_threshold: 0.1,
            paraphrase_threshold: 0.85,
            strict: false,
        }
    }
}

/// Result of classifying one pair.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Inference {
    pub label: Label,
    /// Rewrite steps from the premise to the hypothesis (entailments only).
    pub trace: Vec<Edit>,
    /// Sentences along the trace, premise first.
    pub path: Vec<String>,
    pub contradiction: Option<ContradictionCheck>,
    /// Number of states expanded.
    pub expansions: usize,
    pub warnings: Vec<String>,
}

/// Identity of a search state: lemmas plus tree shape.
pub fn state_key(s: &Sentence) -> String {
    s.tokens
        .iter()
        .map(|t| format!("{}/{}/{}", t.norm_lemma(), t.head, t.deprel))
        .collect::<Vec<_>>()
        .join(" ")
}

/// Goal test: same lemma sequence as the hypothesis, ignoring case and punctuation.
pub fn is_goal(s: &Sentence, target: &Target) -> bool {
    s.lemma_key() == target.lemma_key()
}

pub fn sentence_phrase(s: &Sentence) -> Phrase {
    Phrase {
        text: s.text.clone(),
        lemmas: s.tokens.iter().filter(|t| !t.is_punct()).map(|t| t.norm_lemma()).collect(),
    }
}

struct Node {
    tree: PolarizedTree,
    parent: Option<usize>,
    edit: Option<Edit>,
}

/// Shared, read-only inference engine. Safe to use from several threads.
pub struct Engine {
    kb: Arc<KnowledgeBase>,
    scale: QuantifierScale,
    lexicon: QuantifierLexicon,
    disjoint: DisjointActions,
    scorer: Arc<dyn Scorer>,
    fallback: OfflineScorer,
    pub config: EngineConfig,
}

impl Engine {
    pub fn new(kb: Arc<KnowledgeBase>, scorer: Arc<dyn Scorer>, config: EngineConfig) -> Engine {
        Engine {
            fallback: OfflineScorer::new(kb.clone()),
            kb,
            scale: QuantifierScale::default(),
            lexicon: QuantifierLexicon::default(),
            disjoint: DisjointActions::bundled(),
            scorer,
            config,
        }
    }

    /// An engine on the deterministic scorer.
    pub fn offline(kb: Arc<KnowledgeBase>, config: EngineConfig) -> Engine {
        let scorer = Arc::new(OfflineScorer::new(kb.clone()));
        Engine::new(kb, scorer, config)
    }

    pub fn with_disjoint_actions(mut self, d: DisjointActions) -> Self {
        self.disjoint = d;
        self
    }

    pub fn with_scale(mut self, s: QuantifierScale) -> Self {
        self.scale = s;
        self
    }

    pub fn with_lexicon(mut self, l: QuantifierLexicon) -> Self {
        self.lexicon = l;
        self
    }

    pub fn kb(&self) -> &KnowledgeBase {
        &self.kb
    }

    pub fn scale(&self) -> &QuantifierScale {
        &self.scale
    }

    pub fn lexicon(&self) -> &QuantifierLexicon {
        &self.lexicon
    }

    pub fn scorer(&self) -> &dyn Scorer {
        self.scorer.as_ref()
    }

    pub fn lexicons(&self) -> Lexicons<'_> {
        Lexicons { kb: &self.kb, scale: &self.scale, disjoint: &self.disjoint }
    }

    /// Runs a scorer call, degrading to the offline scorer unless in strict mode.
    fn scored<T>(
        &self,
        warnings: &Mutex<BTreeSet<String>>,
        primary: impl FnOnce(&dyn Scorer) -> std::result::Result<T, ScoringError>,
        fallback: impl FnOnce(&OfflineScorer) -> std::result::Result<T, ScoringError>,
    ) -> Result<T> {
        match primary(self.scorer.as_ref()) {
            Ok(v) => Ok(v),
            Err(e) if self.config.strict => Err(e.into()),
            Err(e) => {
                log::warn!("{}; using the offline scorer", e);
                warnings.lock().unwrap().insert(format!("{}; fell back to the offline scorer", e));
                Ok(fallback(&self.fallback)?)
            }
        }
    }

    pub fn polarize(&self, s: &Sentence) -> Result<PolarizedTree> {
        check_tree(s)?;
        Ok(polarize_sentence(s, &self.lexicon)?)
    }

    pub fn target(&self, h: &Sentence) -> Result<Target> {
        check_tree(h)?;
        Ok(Target::new(h, &self.lexicon))
    }

    fn align_with(&self, gp: &SentenceGraph, gh: &SentenceGraph, warnings: &Mutex<BTreeSet<String>>) -> Result<AlignmentSet> {
        let cands = candidate_pairs(gp, gh);
        let pairs: Vec<(Word, Word)> = cands
            .iter()
            .map(|&(p, h)| {
                let (vp, vh) = (gp.vertex(p).unwrap(), gh.vertex(h).unwrap());
                (Word::new(&vp.lemma, &vp.upos), Word::new(&vh.lemma, &vh.upos))
            })
            .collect();
        let scores = if pairs.is_empty() {
            Vec::new()
        } else {
            self.scored(warnings, |s| s.word_similarity(&pairs), |s| s.word_similarity(&pairs))?
        };
        Ok(align_scored(&cands, &scores, self.config.align_threshold))
    }

    /// Aligns two sentences with the configured scorer.
    pub fn align(&self, p: &Sentence, h: &Sentence) -> Result<(SentenceGraph, SentenceGraph, AlignmentSet)> {
        let (gp, gh) = (build_graph(p), build_graph(h));
        let a = self.align_with(&gp, &gh, &Mutex::new(BTreeSet::new()))?;
        Ok((gp, gh, a))
    }

    /// Distance between a sentence and the hypothesis in embedding space.
    pub fn dist(&self, s: &Sentence, h: &Sentence) -> Result<f64> {
        let phrases = [sentence_phrase(s), sentence_phrase(h)];
        let w = Mutex::new(BTreeSet::new());
        let v = self.scored(&w, |sc| sc.embed(&phrases), |sc| sc.embed(&phrases))?;
        Ok(euclidean(&v[0], &v[1]))
    }

    fn run_module(
        &self,
        m: Module,
        pt: &PolarizedTree,
        target: &Target,
        warnings: &Mutex<BTreeSet<String>>,
    ) -> Result<Vec<GeneratedSentence>> {
        Ok(match m {
            Module::Lexical => lexical_infer(pt, &self.kb, &self.scale, &self.lexicon, target),
            Module::Phrasal => phrasal_infer(pt, target, &self.lexicon),
            Module::SyntacticVariation => {
                let th = self.config.paraphrase_threshold;
                match syntactic_variation_infer(pt, target, self.scorer.as_ref(), th, &self.lexicon) {
                    Ok(v) => v,
                    Err(e) if self.config.strict => return Err(e.into()),
                    Err(e) => {
                        log::warn!("{}; skipping syntactic variation", e);
                        warnings.lock().unwrap().insert(format!("{}; syntactic variation skipped", e));
                        Vec::new()
                    }
                }
            }
        })
    }

    fn successors_inner(&self, pt: &PolarizedTree, target: &Target, warnings: &Mutex<BTreeSet<String>>) -> Result<Vec<GeneratedSentence>> {
        let enabled: Vec<Module> = [Module::Lexical, Module::Phrasal, Module::SyntacticVariation]
            .into_iter()
            .filter(|m| match m {
                Module::SyntacticVariation => self.config.syntactic_variation,
                Module::Lexical | Module::Phrasal => self.config.monotonicity,
            })
            .collect();
        let gp = build_graph(&pt.sentence);
        let a = self.align_with(&gp, &target.graph, warnings)?;
        let rec = recommend(&gp, &target.graph, &a);
        let wanted = rec.modules();
        let own_key = pt.sentence.lemma_key();
        let mut out = Vec::new();
        for &m in enabled.iter().filter(|m| wanted.contains(m)) {
            out.extend(self.run_module(m, pt, target, warnings)?);
        }
        // recommended generators made no progress: try the rest
        if out.iter().all(|g| g.sentence().lemma_key() == own_key) {
            for &m in enabled.iter().filter(|m| !wanted.contains(m)) {
                out.extend(self.run_module(m, pt, target, warnings)?);
            }
        }
        Ok(out)
    }

    /// Runs a single generator, ignoring the recommendation.
    pub fn generate(&self, m: Module, pt: &PolarizedTree, target: &Target) -> Result<Vec<GeneratedSentence>> {
        self.run_module(m, pt, target, &Mutex::new(BTreeSet::new()))
    }

    /// One-step rewrites of a state towards the hypothesis. Generators recommended by the
    /// alignment run first; the others run only if those produce no new sentence.
    pub fn successors(&self, pt: &PolarizedTree, target: &Target) -> Result<Vec<GeneratedSentence>> {
        self.successors_inner(pt, target, &Mutex::new(BTreeSet::new()))
    }

    /// Classifies a premise/hypothesis pair.
    pub fn classify(&self, premise: &Sentence, hypothesis: &Sentence) -> Result<Inference> {
        let warnings = Mutex::new(BTreeSet::new());
        let root = self.polarize(premise)?;
        let target = self.target(hypothesis)?;
        let cfg = self.config.search;

        let mut arena = vec![Node { tree: root, parent: None, edit: None }];
        let mut expansions = 0;
        let mut found = is_goal(premise, &target).then_some(0);
        let mut seen: HashSet<String> = [state_key(premise)].into_iter().collect();
        let mut beam = vec![0usize];
        let h_vec = if found.is_none() {
            let hp = [sentence_phrase(hypothesis)];
            self.scored(&warnings, |s| s.embed(&hp), |s| s.embed(&hp))?.remove(0)
        } else {
            Vec::new()
        };

        let mut depth = 0;
        'levels: while found.is_none() && depth < cfg.max_depth && !beam.is_empty() {
            depth += 1;
            let mut children = Vec::new();
            for &n in &beam {
                expansions += 1;
                let tree = arena[n].tree.clone();
                for g in self.successors_inner(&tree, &target, &warnings)? {
                    if !seen.insert(state_key(g.sentence())) {
                        continue;
                    }
                    let goal = is_goal(g.sentence(), &target);
                    arena.push(Node { tree: g.tree, parent: Some(n), edit: Some(g.edit) });
                    if goal {
                        found = Some(arena.len() - 1);
                        break 'levels;
                    }
                    children.push(arena.len() - 1);
                }
            }
            if children.is_empty() {
                break;
            }
            {
                let phrases: Vec<Phrase> = children.iter().map(|&c| sentence_phrase(&arena[c].tree.sentence)).collect();
                let vecs = self.scored(&warnings, |s| s.embed(&phrases), |s| s.embed(&phrases))?;
                let mut ranked: Vec<(f64, usize)> = vecs.iter().map(|v| euclidean(v, &h_vec)).zip(children).collect();
                ranked.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
                ranked.truncate(cfg.beam_width);
                children = ranked.into_iter().map(|(_, c)| c).collect();
            }
            beam = children;
        }

        if let Some(mut n) = found {
            let mut trace = Vec::new();
            let mut path = vec![arena[n].tree.sentence.text.clone()];
            while let Some(p) = arena[n].parent {
                trace.push(arena[n].edit.clone().unwrap());
                n = p;
                path.push(arena[n].tree.sentence.text.clone());
            }
            trace.reverse();
            path.reverse();
            return Ok(Inference {
                label: Label::Entail,
                trace,
                path,
                contradiction: None,
                expansions,
                warnings: warnings.into_inner().unwrap().into_iter().collect(),
            });
        }

        let mut label = Label::Neutral;
        let mut contradiction = None;
        if self.config.contradiction {
            let premise_tree = &arena[0].tree;
            let gp = build_graph(premise);
            let a = self.align_with(&gp, &target.graph, &warnings)?;
            let check = check_contradiction(&gp, &target.graph, &a, premise_tree, self.lexicons());
            if check.contradiction {
                label = Label::Contradict;
            }
            contradiction = Some(check);
        }
        Ok(Inference {
            label,
            trace: Vec::new(),
            path: Vec::new(),
            contradiction,
            expansions,
            warnings: warnings.into_inner().unwrap().into_iter().collect(),
        })
    }

    /// Parses raw sentences through the scorer (remote backends only).
    pub fn parse_text(&self, text: &str) -> Result<Sentence> {
        let docs = self.scorer.parse(&[text.to_string()])?;
        let doc = docs.into_iter().next().ok_or_else(|| Error::Lookup("empty parse response".into()))?;
        Ok(crate::conllu::parse_single(&doc)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sentence::UDToken;

    fn sent(rows: &[(&str, &str, &str, usize, &str)]) -> Sentence {
        Sentence::from_tokens(
            rows.iter()
                .enumerate()
                .map(|(i, (f, l, u, h, r))| UDToken::new(i + 1, f, l, u, *h, r))
                .collect(),
        )
    }

    fn engine() -> Engine {
        Engine::offline(Arc::new(KnowledgeBase::bundled()), EngineConfig::default())
    }

    #[test]
    fn labels_parse_dataset_spellings() {
        assert_eq!("ENTAILMENT".parse::<Label>().unwrap(), Label::Entail);
        assert_eq!("contradiction".parse::<Label>().unwrap(), Label::Contradict);
        assert_eq!("neutral".parse::<Label>().unwrap(), Label::Neutral);
        assert!("maybe".parse::<Label>().is_err());
    }

    #[test]
    fn identical_pair_entails_with_empty_trace() {
        let s = sent(&[("dogs", "dog", "NOUN", 2, "nsubj"), ("bark", "bark", "VERB", 0, "root")]);
        let r = engine().classify(&s, &s).unwrap();
        assert_eq!(r.label, Label::Entail);
        assert!(r.trace.is_empty());
    }

    #[test]
    fn deletion_path_found() {
        let p = sent(&[
            ("A", "a", "DET", 3, "det"),
            ("tall", "tall", "ADJ", 3, "amod"),
            ("man", "man", "NOUN", 4, "nsubj"),
            ("runs", "run", "VERB", 0, "root"),
        ]);
        let h = sent(&[("A", "a", "DET", 2, "det"), ("man", "man", "NOUN", 3, "nsubj"), ("runs", "run", "VERB", 0, "root")]);
        let e = engine();
        let r = e.classify(&p, &h).unwrap();
        assert_eq!(r.label, Label::Entail);
        assert_eq!(r.trace.len(), 1);
        // the reverse direction adds information under an upward head
        assert_eq!(e.classify(&h, &p).unwrap().label, Label::Neutral);
        let mut cfg = EngineConfig::default();
        cfg.monotonicity = false;
        let off = Engine::offline(Arc::new(KnowledgeBase::bundled()), cfg);
        assert_eq!(off.classify(&p, &h).unwrap().label, Label::Neutral);
    }

    #[test]
    fn verb_negation_contradicts() {
        let p = sent(&[("A", "a", "DET", 2, "det"), ("man", "man", "NOUN", 4, "nsubj"), ("is", "be", "AUX", 4, "aux"), ("eating", "eat", "VERB", 0, "root")]);
        let h = sent(&[
            ("A", "a", "DET", 2, "det"),
            ("man", "man", "NOUN", 5, "nsubj"),
            ("is", "be", "AUX", 5, "aux"),
            ("not", "not", "PART", 5, "advmod"),
            ("eating", "eat", "VERB", 0, "root"),
        ]);
        let r = engine().classify(&p, &h).unwrap();
        assert_eq!(r.label, Label::Contradict);
    }

    #[test]
    fn zero_depth_never_entails_distinct_sentences() {
        let p = sent(&[("dogs", "dog", "NOUN", 2, "nsubj"), ("bark", "bark", "VERB", 0, "root")]);
        let h = sent(&[("animals", "animal", "NOUN", 2, "nsubj"), ("bark", "bark", "VERB", 0, "root")]);
        let mut cfg = EngineConfig::default();
        cfg.search.max_depth = 0;
        let e = Engine::offline(Arc::new(KnowledgeBase::bundled()), cfg);
        assert_ne!(e.classify(&p, &h).unwrap().label, Label::Entail);
        assert_eq!(engine().classify(&p, &h).unwrap().label, Label::Entail);
    }
}
