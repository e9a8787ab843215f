//! C ABI for the monolog engine.
//!
//! Every function returns a [`MonologStatus`]; on failure the message is available from
//! [`monolog_last_error`] on the same thread. Strings returned through out-pointers are owned by
//! the caller and released with [`monolog_string_free`]. An engine may be shared between threads
//! for classification, but the setters must not race with other calls on the same engine.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;
use std::sync::Arc;

use monolog_core::error::Error;
use monolog_core::kb::Provenance;
use monolog_core::scoring::{OfflineScorer, ParaphraseTable};
use monolog_core::{conllu, Engine, EngineConfig, KnowledgeBase, Label, Sentence};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MonologStatus {
    Ok = 0,
    ErrNull = 1,
    ErrUtf8 = 2,
    ErrParse = 3,
    ErrIo = 4,
    ErrScorer = 5,
    ErrInvalid = 6,
    ErrPanic = 7,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MonologLabel {
    Entail = 0,
    Contradict = 1,
    Neutral = 2,
}

impl From<Label> for MonologLabel {
    fn from(l: Label) -> Self {
        match l {
            Label::Entail => MonologLabel::Entail,
            Label::Contradict => MonologLabel::Contradict,
            Label::Neutral => MonologLabel::Neutral,
        }
    }
}

/// Opaque engine handle.
pub struct MonologEngine {
    engine: Engine,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

struct Failure(MonologStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let status = match e {
            Error::Conllu(_) | Error::Structure(_) => MonologStatus::ErrParse,
            Error::Kb(_) | Error::Dataset(_) | Error::Io { .. } => MonologStatus::ErrIo,
            Error::Scoring(_) => MonologStatus::ErrScorer,
            Error::Lookup(_) => MonologStatus::ErrInvalid,
        };
        Failure(status, e.to_string())
    }
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> MonologStatus {
    set_error("");
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => MonologStatus::Ok,
        Ok(Err(Failure(status, msg))) => {
            set_error(&msg);
            status
        }
        Err(p) => {
            let msg = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_error(&format!("panic: {msg}"));
            MonologStatus::ErrPanic
        }
    }
}

fn null(what: &str) -> Failure {
    Failure(MonologStatus::ErrNull, format!("{what} is null"))
}

/// Reads a required C string.
unsafe fn text<'a>(p: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p).to_str().map_err(|e| Failure(MonologStatus::ErrUtf8, format!("{what}: {e}")))
}

unsafe fn optional<'a>(p: *const c_char, what: &str) -> Result<Option<&'a str>, Failure> {
    if p.is_null() {
        Ok(None)
    } else {
        text(p, what).map(Some)
    }
}

fn to_c(s: String) -> Result<*mut c_char, Failure> {
    CString::new(s)
        .map(CString::into_raw)
        .map_err(|_| Failure(MonologStatus::ErrInvalid, "output contains a NUL byte".into()))
}

unsafe fn engine_mut<'a>(e: *mut MonologEngine) -> Result<&'a mut MonologEngine, Failure> {
    e.as_mut().ok_or_else(|| null("engine"))
}

unsafe fn engine_ref<'a>(e: *const MonologEngine) -> Result<&'a MonologEngine, Failure> {
    e.as_ref().ok_or_else(|| null("engine"))
}

fn one_sentence(doc: &str, what: &str) -> Result<Sentence, Failure> {
    let mut v = conllu::parse_conllu(doc).map_err(Error::from)?;
    if v.len() != 1 {
        return Err(Failure(MonologStatus::ErrParse, format!("{what}: expected 1 sentence, found {}", v.len())));
    }
    Ok(v.remove(0))
}

/// Creates an offline engine.
///
/// `kb_path` and `paraphrase_table` are optional TSV files (NULL to skip). With `bundled_kb`
/// false only the triples from `kb_path` are used.
///
/// # Safety
/// String arguments must be NULL or NUL-terminated; `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn monolog_engine_new(
    kb_path: *const c_char,
    paraphrase_table: *const c_char,
    bundled_kb: bool,
    out: *mut *mut MonologEngine,
) -> MonologStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        *out = ptr::null_mut();
        let mut kb = if bundled_kb { KnowledgeBase::bundled() } else { KnowledgeBase::new() };
        if let Some(p) = optional(kb_path, "kb_path")? {
            kb.extend_from_path(Path::new(p), Provenance::WordnetDump).map_err(Error::from)?;
        }
        let kb = Arc::new(kb);
        let mut scorer = OfflineScorer::new(kb.clone());
        if let Some(p) = optional(paraphrase_table, "paraphrase_table")? {
            scorer = scorer.with_table(ParaphraseTable::load(Path::new(p)).map_err(Error::from)?);
        }
        let engine = Engine::new(kb, Arc::new(scorer), EngineConfig::default());
        *out = Box::into_raw(Box::new(MonologEngine { engine }));
        Ok(())
    })
}

/// # Safety
/// `engine` must be NULL or a handle from [`monolog_engine_new`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn monolog_engine_free(engine: *mut MonologEngine) {
    if !engine.is_null() {
        drop(Box::from_raw(engine));
    }
}

/// Sets the beam width (at least 1).
///
/// # Safety
/// `engine` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn monolog_engine_set_beam(engine: *mut MonologEngine, beam_width: usize) -> MonologStatus {
    guard(|| {
        let e = engine_mut(engine)?;
        if beam_width == 0 {
            return Err(Failure(MonologStatus::ErrInvalid, "beam width must be at least 1".into()));
        }
        e.engine.config.search.beam_width = beam_width;
        Ok(())
    })
}

/// Sets the maximum number of rewrite steps.
///
/// # Safety
/// `engine` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn monolog_engine_set_max_depth(engine: *mut MonologEngine, max_depth: usize) -> MonologStatus {
    guard(|| {
        engine_mut(engine)?.engine.config.search.max_depth = max_depth;
        Ok(())
    })
}

/// Turns the syntactic-variation generator on or off.
///
/// # Safety
/// `engine` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn monolog_engine_set_syntactic_variation(engine: *mut MonologEngine, on: bool) -> MonologStatus {
    guard(|| {
        engine_mut(engine)?.engine.config.syntactic_variation = on;
        Ok(())
    })
}

/// Classifies a pair given as one CoNLL-U sentence each.
///
/// If `result_json` is not NULL it receives the full result as JSON (label, trace, path,
/// contradiction check, expansions, warnings).
///
/// # Safety
/// `engine` must be a live handle; `premise` and `hypothesis` NUL-terminated; `label` valid;
/// `result_json` NULL or valid.
#[no_mangle]
pub unsafe extern "C" fn monolog_classify_conllu(
    engine: *const MonologEngine,
    premise: *const c_char,
    hypothesis: *const c_char,
    label: *mut MonologLabel,
    result_json: *mut *mut c_char,
) -> MonologStatus {
    guard(|| {
        let e = engine_ref(engine)?;
        if label.is_null() {
            return Err(null("label"));
        }
        if !result_json.is_null() {
            *result_json = ptr::null_mut();
        }
        let p = one_sentence(text(premise, "premise")?, "premise")?;
        let h = one_sentence(text(hypothesis, "hypothesis")?, "hypothesis")?;
        let r = e.engine.classify(&p, &h)?;
        *label = r.label.into();
        if !result_json.is_null() {
            let json = serde_json::to_string(&r).map_err(|e| Failure(MonologStatus::ErrInvalid, e.to_string()))?;
            *result_json = to_c(json)?;
        }
        Ok(())
    })
}

/// Writes the polarity-annotated text of each sentence in `conllu`, one per line.
///
/// # Safety
/// `engine` must be a live handle; `conllu` NUL-terminated; `out` valid.
#[no_mangle]
pub unsafe extern "C" fn monolog_annotate_conllu(
    engine: *const MonologEngine,
    conllu: *const c_char,
    out: *mut *mut c_char,
) -> MonologStatus {
    guard(|| {
        let e = engine_ref(engine)?;
        if out.is_null() {
            return Err(null("out"));
        }
        *out = ptr::null_mut();
        let sentences = conllu::parse_conllu(text(conllu, "conllu")?).map_err(Error::from)?;
        let mut lines = Vec::with_capacity(sentences.len());
        for s in &sentences {
            lines.push(e.engine.polarize(s)?.annotate());
        }
        *out = to_c(lines.join("\n"))?;
        Ok(())
    })
}

/// Frees a string returned by this library.
///
/// # Safety
/// `s` must be NULL or a string from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn monolog_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Message for the last failed call on this thread; empty after a success. Valid until the
/// next call into the library on this thread.
#[no_mangle]
pub extern "C" fn monolog_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Static label name such as "ENTAIL".
#[no_mangle]
pub extern "C" fn monolog_label_name(label: MonologLabel) -> *const c_char {
    let s: &'static CStr = match label {
        MonologLabel::Entail => c"ENTAIL",
        MonologLabel::Contradict => c"CONTRADICT",
        MonologLabel::Neutral => c"NEUTRAL",
    };
    s.as_ptr()
}
