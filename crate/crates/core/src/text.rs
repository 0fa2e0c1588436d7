//! Character-indexed string helpers.
//!
//! Every offset in this crate is a Unicode code-point offset, never a byte
//! offset, so spans line up with how annotators count Chinese characters.

/// Number of code points in `s`.
pub fn char_len(s: &str) -> usize {
    s.chars().count()
}

/// Substring by code-point range `[start, end)`. Returns `None` when the range
/// is out of bounds or inverted.
pub fn char_slice(s: &str, start: usize, end: usize) -> Option<&str> {
    if start > end {
        return None;
    }
    let mut indices = s.char_indices().map(|(b, _)| b).chain(std::iter::once(s.len()));
    let begin = indices.nth(start)?;
    let finish = if end == start {
        begin
    } else {
        indices.nth(end - start - 1)?
    };
    Some(&s[begin..finish])
}

/// Start offsets (in code points) of the non-overlapping, left-to-right
/// occurrences of `needle` in `haystack`.
pub fn occurrences(haystack: &str, needle: &str) -> Vec<usize> {
    if needle.is_empty() {
        return Vec::new();
    }
    let mut out = Vec::new();
    let mut byte_to_char = 0usize;
    let mut last_byte = 0usize;
    for (byte, _) in haystack.match_indices(needle) {
        byte_to_char += haystack[last_byte..byte].chars().count();
        last_byte = byte;
        out.push(byte_to_char);
    }
    out
}

/// Characters that close a clause. Commas are deliberately absent: a clause
/// here is a sentence-level unit.
pub fn is_clause_delimiter(c: char) -> bool {
    matches!(c, '。' | '．' | '.' | '！' | '!' | '？' | '?' | '；' | ';' | '\n')
}

/// Clause index for each code point of `text`. Delimiters belong to the
/// clause they close.
pub fn clause_ids(text: &str) -> Vec<usize> {
    let mut ids = Vec::with_capacity(text.len());
    let mut current = 0;
    for c in text.chars() {
        ids.push(current);
        if is_clause_delimiter(c) {
            current += 1;
        }
    }
    ids
}

/// Number of clauses of `text` that contain something other than whitespace
/// and delimiters.
pub fn non_blank_clause_count(text: &str) -> usize {
    text.split(is_clause_delimiter)
        .filter(|part| !part.trim().is_empty())
        .count()
}
