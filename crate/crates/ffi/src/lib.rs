//! C ABI over the voicelens core.
//!
//! Every fallible function returns a `VlStatus`; on failure a message is
//! available from `vl_last_error_message` on the same thread. Strings
//! returned through out-parameters are owned by the caller and released
//! with `vl_string_free`. Handles are released with their `_free` function.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use voicelens::codebook::{load_codebook, Codebook};
use voicelens::corpus::{load_corpus, Corpus, CorpusFormat};
use voicelens::lexicon::{classify, load_lexicon, SentimentLexicon};
use voicelens::llm::{
    build_sentiment_prompt_text, build_thematic_prompt_text, parse_sentiment_response, parse_thematic_response,
    PromptStyle,
};
use voicelens::metrics::{auc_binary, cohen_kappa};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VlStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    Io = 3,
    Parse = 4,
    InvalidArgument = 5,
    Panic = 6,
}

/// Prompt template selector.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VlPromptStyle {
    CotThematic = 0,
    ZeroShotThematic = 1,
}

/// Sentiment class, in confusion-matrix order.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VlSentiment {
    Positive = 0,
    Negative = 1,
    Neutral = 2,
}

pub struct VlCodebook(Codebook);
pub struct VlCorpus(Corpus);
pub struct VlLexicon(SentimentLexicon);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let c = CString::new(msg.into().replace('\0', " ")).expect("nul bytes removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

struct Failure(VlStatus, String);

type FfiResult<T> = Result<T, Failure>;

fn guard(f: impl FnOnce() -> FfiResult<()>) -> VlStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => VlStatus::Ok,
        Ok(Err(Failure(status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic");
            VlStatus::Panic
        }
    }
}

unsafe fn str_arg<'a>(p: *const c_char, name: &str) -> FfiResult<&'a str> {
    if p.is_null() {
        return Err(Failure(VlStatus::NullPointer, format!("`{name}` is null")));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Failure(VlStatus::InvalidUtf8, format!("`{name}` is not valid UTF-8")))
}

unsafe fn ref_arg<'a, T>(p: *const T, name: &str) -> FfiResult<&'a T> {
    p.as_ref()
        .ok_or_else(|| Failure(VlStatus::NullPointer, format!("`{name}` is null")))
}

unsafe fn out_arg<T>(out: *mut T, value: T) -> FfiResult<()> {
    if out.is_null() {
        return Err(Failure(VlStatus::NullPointer, "output pointer is null".into()));
    }
    out.write(value);
    Ok(())
}

unsafe fn out_string(out: *mut *mut c_char, s: String) -> FfiResult<()> {
    let c = CString::new(s).map_err(|_| Failure(VlStatus::InvalidArgument, "result contains a nul byte".into()))?;
    out_arg(out, c.into_raw())
}

unsafe fn bytes_arg<'a>(p: *const u8, len: usize, name: &str) -> FfiResult<&'a [u8]> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(Failure(VlStatus::NullPointer, format!("`{name}` is null")));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

fn io(e: impl std::fmt::Display) -> Failure {
    Failure(VlStatus::Io, e.to_string())
}

fn invalid(e: impl std::fmt::Display) -> Failure {
    Failure(VlStatus::InvalidArgument, e.to_string())
}

/// Message for the last failure on this thread, or null. Valid until the
/// next failing call on the same thread; do not free.
#[no_mangle]
pub extern "C" fn vl_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Release a string returned by this library. Null is ignored.
///
/// # Safety
/// `s` must come from this library and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn vl_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// # Safety
/// `path` must be a nul-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn vl_codebook_load(path: *const c_char, out: *mut *mut VlCodebook) -> VlStatus {
    guard(|| {
        let path = str_arg(path, "path")?;
        let cb = load_codebook(path).map_err(io)?;
        out_arg(out, Box::into_raw(Box::new(VlCodebook(cb))))
    })
}

/// Parse a codebook from CSV text.
///
/// # Safety
/// `csv_text` must be a nul-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn vl_codebook_from_csv(csv_text: *const c_char, out: *mut *mut VlCodebook) -> VlStatus {
    guard(|| {
        let text = str_arg(csv_text, "csv_text")?;
        let cb = Codebook::from_csv_str(text).map_err(|e| Failure(VlStatus::Parse, e.to_string()))?;
        out_arg(out, Box::into_raw(Box::new(VlCodebook(cb))))
    })
}

/// # Safety
/// `cb` must be null or a handle from this library, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn vl_codebook_free(cb: *mut VlCodebook) {
    if !cb.is_null() {
        drop(Box::from_raw(cb));
    }
}

/// Number of child codes.
///
/// # Safety
/// `cb` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn vl_codebook_child_count(cb: *const VlCodebook, out: *mut usize) -> VlStatus {
    guard(|| out_arg(out, ref_arg(cb, "cb")?.0.children().len()))
}

/// Load a corpus; the format follows the extension (`.jsonl` or CSV).
///
/// # Safety
/// `path` must be a nul-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn vl_corpus_load(path: *const c_char, out: *mut *mut VlCorpus) -> VlStatus {
    guard(|| {
        let path = str_arg(path, "path")?;
        let c = load_corpus(path, CorpusFormat::from_path(Path::new(path))).map_err(io)?;
        out_arg(out, Box::into_raw(Box::new(VlCorpus(c))))
    })
}

/// # Safety
/// `corpus` must be null or a handle from this library, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn vl_corpus_free(corpus: *mut VlCorpus) {
    if !corpus.is_null() {
        drop(Box::from_raw(corpus));
    }
}

/// # Safety
/// `corpus` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn vl_corpus_len(corpus: *const VlCorpus, out: *mut usize) -> VlStatus {
    guard(|| out_arg(out, ref_arg(corpus, "corpus")?.0.len()))
}

/// Text of paragraph `index` as a new string.
///
/// # Safety
/// `corpus` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn vl_corpus_paragraph_text(
    corpus: *const VlCorpus,
    index: usize,
    out: *mut *mut c_char,
) -> VlStatus {
    guard(|| {
        let c = &ref_arg(corpus, "corpus")?.0;
        let p = c
            .paragraphs
            .get(index)
            .ok_or_else(|| invalid(format!("index {index} out of range for {} paragraphs", c.len())))?;
        out_string(out, p.text.clone())
    })
}

/// The bundled sentiment lexicon.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn vl_lexicon_bundled(out: *mut *mut VlLexicon) -> VlStatus {
    guard(|| out_arg(out, Box::into_raw(Box::new(VlLexicon(SentimentLexicon::bundled())))))
}

/// # Safety
/// Paths must be nul-terminated strings; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn vl_lexicon_load(
    valence_path: *const c_char,
    boosters_path: *const c_char,
    negators_path: *const c_char,
    out: *mut *mut VlLexicon,
) -> VlStatus {
    guard(|| {
        let lex = load_lexicon(
            str_arg(valence_path, "valence_path")?,
            str_arg(boosters_path, "boosters_path")?,
            str_arg(negators_path, "negators_path")?,
        )
        .map_err(io)?;
        out_arg(out, Box::into_raw(Box::new(VlLexicon(lex))))
    })
}

/// # Safety
/// `lex` must be null or a handle from this library, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn vl_lexicon_free(lex: *mut VlLexicon) {
    if !lex.is_null() {
        drop(Box::from_raw(lex));
    }
}

/// Compound score of `text` in [-1, 1].
///
/// # Safety
/// `lex` must be a live handle; `text` nul-terminated; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn vl_lexicon_score(lex: *const VlLexicon, text: *const c_char, out: *mut f64) -> VlStatus {
    guard(|| {
        let lex = &ref_arg(lex, "lex")?.0;
        out_arg(out, lex.score(str_arg(text, "text")?).compound)
    })
}

/// Three-way class for a compound score.
#[no_mangle]
pub extern "C" fn vl_classify_compound(compound: f64) -> VlSentiment {
    match classify(compound) {
        voicelens::annotation::SentimentLabel::Positive => VlSentiment::Positive,
        voicelens::annotation::SentimentLabel::Negative => VlSentiment::Negative,
        voicelens::annotation::SentimentLabel::Neutral => VlSentiment::Neutral,
    }
}

/// Thematic prompt for one paragraph.
///
/// # Safety
/// `cb` must be a live handle; `paragraph` nul-terminated; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn vl_build_thematic_prompt(
    cb: *const VlCodebook,
    paragraph: *const c_char,
    style: VlPromptStyle,
    out: *mut *mut c_char,
) -> VlStatus {
    guard(|| {
        let cb = &ref_arg(cb, "cb")?.0;
        let style = match style {
            VlPromptStyle::CotThematic => PromptStyle::CoTThematic,
            VlPromptStyle::ZeroShotThematic => PromptStyle::ZeroShotThematic,
        };
        let prompt = build_thematic_prompt_text(&cb.to_prompt_csv(), str_arg(paragraph, "paragraph")?, style);
        out_string(out, prompt)
    })
}

/// Sentiment prompt for one paragraph.
///
/// # Safety
/// `paragraph` nul-terminated; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn vl_build_sentiment_prompt(paragraph: *const c_char, out: *mut *mut c_char) -> VlStatus {
    guard(|| out_string(out, build_sentiment_prompt_text(str_arg(paragraph, "paragraph")?)))
}

/// Parse a thematic response into JSON
/// `{"labels":[{"level":..,"label":..}],"reasoning":..,"unmatched":[..]}`.
///
/// # Safety
/// `cb` must be a live handle; `raw` nul-terminated; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn vl_parse_thematic_response(
    cb: *const VlCodebook,
    raw: *const c_char,
    out: *mut *mut c_char,
) -> VlStatus {
    guard(|| {
        let cb = &ref_arg(cb, "cb")?.0;
        let p = parse_thematic_response(str_arg(raw, "raw")?, cb).map_err(|e| Failure(VlStatus::Parse, e.to_string()))?;
        let v = serde_json::json!({
            "labels": p.labels,
            "reasoning": p.reasoning,
            "unmatched": p.unmatched,
        });
        out_string(out, v.to_string())
    })
}

/// Parse a sentiment response into JSON `{"sentiment":..,"reasoning":..}`.
///
/// # Safety
/// `raw` nul-terminated; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn vl_parse_sentiment_response(raw: *const c_char, out: *mut *mut c_char) -> VlStatus {
    guard(|| {
        let p = parse_sentiment_response(str_arg(raw, "raw")?).map_err(|e| Failure(VlStatus::Parse, e.to_string()))?;
        let v = serde_json::json!({ "sentiment": p.label, "reasoning": p.reasoning });
        out_string(out, v.to_string())
    })
}

/// Cohen's kappa between two 0/1 vectors of length `len`.
///
/// # Safety
/// `pred` and `truth` must point to `len` readable bytes.
#[no_mangle]
pub unsafe extern "C" fn vl_cohen_kappa(pred: *const u8, truth: *const u8, len: usize, out: *mut f64) -> VlStatus {
    guard(|| {
        let k = cohen_kappa(bytes_arg(pred, len, "pred")?, bytes_arg(truth, len, "truth")?).map_err(invalid)?;
        out_arg(out, k)
    })
}

/// Balanced accuracy (TPR + TNR) / 2 between two 0/1 vectors.
///
/// # Safety
/// `pred` and `truth` must point to `len` readable bytes.
#[no_mangle]
pub unsafe extern "C" fn vl_auc(pred: *const u8, truth: *const u8, len: usize, out: *mut f64) -> VlStatus {
    guard(|| {
        let a = auc_binary(bytes_arg(pred, len, "pred")?, bytes_arg(truth, len, "truth")?).map_err(invalid)?;
        out_arg(out, a)
    })
}
