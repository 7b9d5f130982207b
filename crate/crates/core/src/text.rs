//! Tokenizers and a longest-match phrase dictionary.

use std::collections::HashMap;

/// Stop words removed from the description field only.
pub const DESCRIPTION_STOP_WORDS: &[&str] = &[
    "a", "an", "and", "are", "as", "at", "be", "by", "for", "from", "in", "is", "it", "of", "on",
    "or", "that", "the", "to", "will", "with",
];

/// Lexical tokenizer: lowercase, split on anything that is not alphanumeric,
/// drop empty tokens. No stemming.
///
/// `"C++ and Go"` becomes `[c, and, go]`; symbols inside names are lost.
pub fn tokenize(text: &str) -> Vec<String> {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(str::to_lowercase)
        .collect()
}

/// [`tokenize`] followed by description stop-word removal.
pub fn tokenize_description(text: &str) -> Vec<String> {
    tokenize(text)
        .into_iter()
        .filter(|t| !DESCRIPTION_STOP_WORDS.contains(&t.as_str()))
        .collect()
}

/// Tokenizer for vocabulary matching. Like [`tokenize`] but keeps `+` and `#`
/// inside tokens so `c++` and `c#` survive as names.
pub fn match_tokens(text: &str) -> Vec<String> {
    text.split(|c: char| !(c.is_alphanumeric() || c == '+' || c == '#'))
        .filter(|t| !t.is_empty())
        .map(str::to_lowercase)
        .collect()
}

/// Lowercase, trim and collapse internal whitespace.
pub fn normalize_phrase(text: &str) -> String {
    text.split_whitespace()
        .map(str::to_lowercase)
        .collect::<Vec<_>>()
        .join(" ")
}

#[derive(Debug, Clone, PartialEq)]
pub struct PhraseMatch<V> {
    /// Token span `[start, end)` in the matched token sequence.
    pub start: usize,
    pub end: usize,
    pub value: V,
}

/// Dictionary of token sequences matched greedily left to right, longest first.
#[derive(Debug, Clone)]
pub struct PhraseMatcher<V> {
    phrases: HashMap<Vec<String>, V>,
    max_len: usize,
}

impl<V> Default for PhraseMatcher<V> {
    fn default() -> Self {
        PhraseMatcher {
            phrases: HashMap::new(),
            max_len: 0,
        }
    }
}

impl<V: Clone> PhraseMatcher<V> {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds `phrase` (tokenized with [`match_tokens`]). Returns the previous
    /// value for the same token sequence. Phrases without tokens are ignored.
    pub fn insert(&mut self, phrase: &str, value: V) -> Option<V> {
        let tokens = match_tokens(phrase);
        if tokens.is_empty() {
            return None;
        }
        self.max_len = self.max_len.max(tokens.len());
        self.phrases.insert(tokens, value)
    }

    pub fn get(&self, phrase: &str) -> Option<&V> {
        self.phrases.get(&match_tokens(phrase))
    }

    pub fn is_empty(&self) -> bool {
        self.phrases.is_empty()
    }

    /// Non-overlapping whole-token matches, scanning left to right and
    /// preferring the longest phrase at each position.
    pub fn find_all(&self, tokens: &[String]) -> Vec<PhraseMatch<V>> {
        let mut out = Vec::new();
        let mut i = 0;
        while i < tokens.len() {
            let longest = self.max_len.min(tokens.len() - i);
            let hit = (1..=longest)
                .rev()
                .find_map(|n| self.phrases.get(&tokens[i..i + n]).map(|v| (n, v)));
            match hit {
                Some((n, value)) => {
                    out.push(PhraseMatch {
                        start: i,
                        end: i + n,
                        value: value.clone(),
                    });
                    i += n;
                }
                None => i += 1,
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tokenize_examples() {
        assert_eq!(
            tokenize("Senior Data-Engineer"),
            ["senior", "data", "engineer"]
        );
        assert!(tokenize("").is_empty());
        assert_eq!(tokenize("C++ and Go"), ["c", "and", "go"]);
    }

    #[test]
    fn description_drops_stop_words() {
        assert_eq!(
            tokenize_description("Work with the team and Python"),
            ["work", "team", "python"]
        );
    }

    #[test]
    fn match_tokens_keep_symbols() {
        assert_eq!(
            match_tokens("C++, C# and CI/CD."),
            ["c++", "c#", "and", "ci", "cd"]
        );
    }

    #[test]
    fn longest_match_wins() {
        let mut m = PhraseMatcher::new();
        m.insert("machine", 1);
        m.insert("machine learning", 2);
        m.insert("learning", 3);
        let tokens = match_tokens("Applied machine learning and learning");
        let hits: Vec<_> = m.find_all(&tokens).into_iter().map(|h| h.value).collect();
        assert_eq!(hits, [2, 3]);
    }

    #[test]
    fn matches_are_whole_tokens() {
        let mut m = PhraseMatcher::new();
        m.insert("agile", 1);
        assert!(m.find_all(&match_tokens("fragile systems")).is_empty());
    }
}
