use std::collections::HashMap;
use std::path::Path;

use super::{tokenize, CorpusError};

/// Ordered list of sampling keywords. Order matters: a document containing
/// several keywords is assigned the earliest one.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KeywordSet {
    keywords: Vec<String>,
    index: HashMap<String, usize>,
}

impl KeywordSet {
    pub fn new<I, S>(keywords: I) -> Result<Self, CorpusError>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let mut list = Vec::new();
        let mut index = HashMap::new();
        for kw in keywords {
            let kw = kw.as_ref().trim().to_lowercase();
            if tokenize(&kw) != [kw.as_str()] {
                return Err(CorpusError::InvalidKeyword(kw));
            }
            if index.insert(kw.clone(), list.len()).is_some() {
                return Err(CorpusError::DuplicateKeyword(kw));
            }
            list.push(kw);
        }
        if list.is_empty() {
            return Err(CorpusError::NoKeywords);
        }
        Ok(KeywordSet { keywords: list, index })
    }

    /// Parse one keyword per line; blank lines and `#` comments are ignored.
    pub fn parse(text: &str) -> Result<Self, CorpusError> {
        Self::new(
            text.lines()
                .map(str::trim)
                .filter(|l| !l.is_empty() && !l.starts_with('#')),
        )
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, CorpusError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| CorpusError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::parse(&text)
    }

    pub fn len(&self) -> usize {
        self.keywords.len()
    }

    pub fn is_empty(&self) -> bool {
        self.keywords.is_empty()
    }

    pub fn get(&self, i: usize) -> Option<&str> {
        self.keywords.get(i).map(String::as_str)
    }

    pub fn position(&self, token: &str) -> Option<usize> {
        self.index.get(token).copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = &str> {
        self.keywords.iter().map(String::as_str)
    }
}

/// Index of the first keyword (in keyword-set order) occurring as an exact
/// token of `tokens`.
pub fn contains_keyword(tokens: &[String], keywords: &KeywordSet) -> Option<usize> {
    tokens.iter().filter_map(|t| keywords.position(t)).min()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn first_keyword_in_set_order_wins() {
        let kw = KeywordSet::new(["know", "why"]).unwrap();
        let tokens = tokenize("i know why");
        assert_eq!(contains_keyword(&tokens, &kw), Some(0));
        let tokens = tokenize("why do i know");
        assert_eq!(contains_keyword(&tokens, &kw), Some(0));
    }

    #[test]
    fn no_keyword() {
        let kw = KeywordSet::new(["know", "why"]).unwrap();
        assert_eq!(contains_keyword(&tokenize("nothing here"), &kw), None);
    }

    #[test]
    fn matching_is_exact_token_equality() {
        let kw = KeywordSet::new(["look"]).unwrap();
        assert_eq!(contains_keyword(&tokenize("she looks fine"), &kw), None);
        assert_eq!(contains_keyword(&tokenize("LOOK!"), &kw), Some(0));
    }

    #[test]
    fn rejects_duplicates_and_empty() {
        assert!(matches!(
            KeywordSet::parse("a\nb\nA\n"),
            Err(CorpusError::DuplicateKeyword(_))
        ));
        assert!(matches!(KeywordSet::parse("\n# c\n"), Err(CorpusError::NoKeywords)));
        assert!(matches!(
            KeywordSet::parse("two words"),
            Err(CorpusError::InvalidKeyword(_))
        ));
    }

    #[test]
    fn bundled_keyword_file_loads() {
        let path = concat!(env!("CARGO_MANIFEST_DIR"), "/../../data/keywords.txt");
        let kw = KeywordSet::load(path).unwrap();
        assert_eq!(kw.len(), 251);
        assert_eq!(kw.get(0), Some("know"));
        assert!(kw.iter().all(|k| k == k.to_lowercase()));
    }

    #[test]
    fn assignment_matches_exhaustive_scan() {
        let vocab: Vec<String> = (0..40).map(|i| format!("w{i}")).collect();
        let kw = KeywordSet::new(vocab.iter().take(10)).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..100 {
            let len = rng.gen_range(0..15);
            let tokens: Vec<String> = (0..len).map(|_| vocab[rng.gen_range(0..vocab.len())].clone()).collect();
            let expected = (0..kw.len()).find(|&k| tokens.iter().any(|t| t == kw.get(k).unwrap()));
            assert_eq!(contains_keyword(&tokens, &kw), expected);
        }
    }
}
