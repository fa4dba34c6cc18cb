//! Small text utilities shared by the embedding mock, the style features and
//! the length scoring.

use crate::domain::Language;

/// Comment length as counted for the length bands: whitespace-delimited words
/// for English, non-whitespace Unicode scalars for Chinese.
pub fn comment_length(text: &str, language: Language) -> usize {
    match language {
        Language::En => text.split_whitespace().count(),
        Language::Zh => text.chars().filter(|c| !c.is_whitespace()).count(),
    }
}

pub fn is_cjk(c: char) -> bool {
    matches!(c as u32,
        0x3400..=0x4DBF | 0x4E00..=0x9FFF | 0xF900..=0xFAFF | 0x20000..=0x2FA1F)
}

/// Tokens for bag-of-tokens features: each CJK ideograph is its own token,
/// runs of other alphanumerics are lowercased words.
pub fn tokens(text: &str) -> Vec<String> {
    let mut out = Vec::new();
    let mut word = String::new();
    for c in text.chars() {
        if is_cjk(c) {
            if !word.is_empty() {
                out.push(std::mem::take(&mut word));
            }
            out.push(c.to_string());
        } else if c.is_alphanumeric() || c == '\'' {
            word.extend(c.to_lowercase());
        } else if !word.is_empty() {
            out.push(std::mem::take(&mut word));
        }
    }
    if !word.is_empty() {
        out.push(word);
    }
    out
}

pub fn is_sentence_end(c: char) -> bool {
    matches!(c, '.' | '!' | '?' | '。' | '！' | '？' | '…')
}

/// Strip surrounding whitespace and any matching layers of quotes.
pub fn trim_quotes(text: &str) -> &str {
    const PAIRS: [(char, char); 6] = [
        ('"', '"'),
        ('\'', '\''),
        ('“', '”'),
        ('‘', '’'),
        ('「', '」'),
        ('『', '』'),
    ];
    let mut s = text.trim();
    loop {
        let mut stripped = false;
        for (open, close) in PAIRS {
            if s.chars().count() >= 2 && s.starts_with(open) && s.ends_with(close) {
                s = s[open.len_utf8()..s.len() - close.len_utf8()].trim();
                stripped = true;
            }
        }
        if !stripped {
            return s;
        }
    }
}

/// Cut `text` to at most `max_chars` scalars, preferring the last sentence
/// boundary inside the limit and falling back to the last whitespace.
pub fn truncate_at_sentence(text: &str, max_chars: usize) -> String {
    if text.chars().count() <= max_chars {
        return text.to_string();
    }
    let head: Vec<char> = text.chars().take(max_chars).collect();
    if let Some(pos) = head.iter().rposition(|c| is_sentence_end(*c)) {
        return head[..=pos].iter().collect::<String>().trim().to_string();
    }
    if let Some(pos) = head.iter().rposition(|c| c.is_whitespace()) {
        if pos > 0 {
            return head[..pos].iter().collect::<String>().trim().to_string();
        }
    }
    head.into_iter().collect()
}

/// True when `a` and `b` share a run of at least `n` consecutive characters.
pub fn shares_substring(a: &str, b: &str, n: usize) -> bool {
    let a: Vec<char> = a.chars().collect();
    if a.len() < n || n == 0 {
        return n == 0;
    }
    a.windows(n).any(|w| b.contains(&w.iter().collect::<String>()))
}
