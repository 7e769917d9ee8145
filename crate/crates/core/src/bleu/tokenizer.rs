//! Tokenizers for BLEU.
//!
//! `13a` rules, applied in order:
//!
//! | step | rule |
//! |------|------|
//! | 1 | delete `<skipped>`; join `-\n` hyphenation; other newlines become spaces |
//! | 2 | if `&` occurs, unescape `&quot;` `&amp;` `&lt;` `&gt;` (in that order) |
//! | 3 | pad the line with one space on each side |
//! | 4 | surround every char in ``{|}~ [\]^_` `` space `!"#$%&` `()*+` `:;<=>?@` `/` with spaces |
//! | 5 | `X.` / `X,` where X is not a digit: space after X and after the punctuation |
//! | 6 | `.X` / `,X` where X is not a digit: space before the punctuation and before X |
//! | 7 | `D-` where D is a digit: space after D and after the dash |
//! | 8 | split on whitespace |
//!
//! Each regex rule rewrites left to right over non-overlapping matches.
//! Whitespace in step 8 also includes the ASCII separators `\x1c`-`\x1f`.

use std::sync::LazyLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum TokenizerKind {
    #[serde(rename = "13a")]
    ThirteenA,
    #[serde(rename = "ws")]
    Whitespace,
}

impl TokenizerKind {
    pub fn tag(self) -> &'static str {
        match self {
            TokenizerKind::ThirteenA => "13a",
            TokenizerKind::Whitespace => "ws",
        }
    }
}

impl std::str::FromStr for TokenizerKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "13a" => Ok(TokenizerKind::ThirteenA),
            "ws" | "whitespace" | "none" => Ok(TokenizerKind::Whitespace),
            other => Err(format!("unknown tokenizer `{other}` (expected 13a or ws)")),
        }
    }
}

struct Rules {
    symbols: Regex,
    period_comma_after_nondigit: Regex,
    period_comma_before_nondigit: Regex,
    dash_after_digit: Regex,
}

static RULES: LazyLock<Rules> = LazyLock::new(|| Rules {
    symbols: Regex::new(r"([\x7B-\x7E\x5B-\x60\x20-\x26\x28-\x2B\x3A-\x40\x2F])").unwrap(),
    period_comma_after_nondigit: Regex::new(r"([^0-9])([.,])").unwrap(),
    period_comma_before_nondigit: Regex::new(r"([.,])([^0-9])").unwrap(),
    dash_after_digit: Regex::new(r"([0-9])(-)").unwrap(),
});

/// Whitespace as understood by the reference scorer's string splitting.
pub(crate) fn is_split_whitespace(c: char) -> bool {
    c.is_whitespace() || ('\x1c'..='\x1f').contains(&c)
}

pub(crate) fn split_ws(text: &str) -> Vec<String> {
    text.split(is_split_whitespace)
        .filter(|t| !t.is_empty())
        .map(str::to_owned)
        .collect()
}

pub fn tokenize(text: &str, kind: TokenizerKind) -> Vec<String> {
    match kind {
        TokenizerKind::Whitespace => split_ws(text),
        TokenizerKind::ThirteenA => tokenize_13a(text),
    }
}

fn tokenize_13a(text: &str) -> Vec<String> {
    let mut line = text
        .replace("<skipped>", "")
        .replace("-\n", "")
        .replace('\n', " ");
    if line.contains('&') {
        line = line
            .replace("&quot;", "\"")
            .replace("&amp;", "&")
            .replace("&lt;", "<")
            .replace("&gt;", ">");
    }
    let line = format!(" {line} ");
    let rules = &*RULES;
    let line = rules.symbols.replace_all(&line, " ${1} ");
    let line = rules
        .period_comma_after_nondigit
        .replace_all(&line, "${1} ${2} ");
    let line = rules
        .period_comma_before_nondigit
        .replace_all(&line, " ${1} ${2}");
    let line = rules.dash_after_digit.replace_all(&line, "${1} ${2} ");
    split_ws(&line)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn t(s: &str) -> Vec<String> {
        tokenize(s, TokenizerKind::ThirteenA)
    }

    #[test]
    fn basic_cases() {
        assert_eq!(t("Hello, world!"), ["Hello", ",", "world", "!"]);
        assert!(t("").is_empty());
        assert_eq!(
            tokenize("a b  c", TokenizerKind::Whitespace),
            ["a", "b", "c"]
        );
        assert_eq!(t("a b  c"), ["a", "b", "c"]);
    }

    #[test]
    fn digits_keep_separators() {
        assert_eq!(
            t("It costs 1,000.50 dollars."),
            ["It", "costs", "1,000.50", "dollars", "."]
        );
        assert_eq!(t("pages 10-20"), ["pages", "10", "-", "20"]);
        assert_eq!(t("well-known"), ["well-known"]);
    }

    #[test]
    fn entities_and_skipped() {
        assert_eq!(
            t("a &amp; b &quot;c&quot;"),
            ["a", "&", "b", "\"", "c", "\""]
        );
        assert_eq!(t("x <skipped> y"), ["x", "y"]);
        assert_eq!(t("hyph-\nenated"), ["hyphenated"]);
    }
}
