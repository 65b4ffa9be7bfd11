//! Label cleanup and name consolidation rules.
//!
//! Two levels exist on purpose. [`clean_label`] is what the text parser
//! applies to every name, state, and motion: lowercasing and whitespace
//! canonicalization only, so a graph can still contain both "strawberry"
//! and "strawberries" exactly as its source did. [`normalize_name`]
//! additionally singularizes and is applied when graphs are consolidated,
//! when inventories and goals are loaded, and anywhere two vocabularies
//! must be unified.

/// Words that look plural but are not. Singularization never touches them.
const SINGULAR_EXCEPTIONS: &[&str] = &["hummus", "molasses", "couscous", "asparagus", "swiss"];

/// Lowercase, trim, and collapse internal whitespace runs to single spaces.
pub fn clean_label(raw: &str) -> String {
    raw.split_whitespace()
        .map(|w| w.to_lowercase())
        .collect::<Vec<_>>()
        .join(" ")
}

/// Full name normalization: [`clean_label`] plus per-word singularization.
///
/// Suffix rules, checked in order per word: "-ies" becomes "-y" (for words
/// long enough to have a stem, so "berries" changes but "pies" falls through
/// to the plain rule), "-oes"/"-ches"/"-shes"/"-sses"/"-xes" drop the "-es",
/// and otherwise a trailing "-s" is dropped. Words on the exception list and
/// words ending in "-ss" are left alone; the result is never empty unless
/// the input had no word characters at all. Idempotent by construction.
pub fn normalize_name(raw: &str) -> String {
    clean_label(raw)
        .split(' ')
        .filter(|w| !w.is_empty())
        .map(singularize_word)
        .collect::<Vec<_>>()
        .join(" ")
}

fn singularize_word(word: &str) -> String {
    if SINGULAR_EXCEPTIONS.contains(&word) || word.ends_with("ss") {
        return word.to_string();
    }
    if word.len() >= 5 {
        if let Some(stem) = word.strip_suffix("ies") {
            return format!("{stem}y");
        }
    }
    for suffix in ["oes", "ches", "shes", "sses", "xes"] {
        if word.len() > suffix.len() {
            if let Some(stem) = word.strip_suffix(suffix) {
                // keep the stem plus the suffix's own head: drop only "es"
                return format!("{stem}{}", &suffix[..suffix.len() - 2]);
            }
        }
    }
    match word.strip_suffix('s') {
        Some(stem) if !stem.is_empty() => stem.to_string(),
        _ => word.to_string(),
    }
}
