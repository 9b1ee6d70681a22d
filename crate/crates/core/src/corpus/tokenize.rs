/// Split text into lowercase tokens.
///
/// Whitespace-delimited chunks starting with a URL scheme or `www.` and
/// `@`-mentions are dropped; hashtags keep their body. Inside a chunk, runs of
/// alphanumeric characters (plus `_` and word-internal apostrophes) form one
/// token and every other character is a token of its own.
pub fn tokenize(text: &str) -> Vec<String> {
    let mut tokens = Vec::new();
    for chunk in text.split_whitespace() {
        if is_url(chunk) || chunk.starts_with('@') {
            continue;
        }
        split_chunk(chunk.trim_start_matches('#'), &mut tokens);
    }
    tokens
}

fn is_url(chunk: &str) -> bool {
    let head: String = chunk.chars().take(8).flat_map(char::to_lowercase).collect();
    head.starts_with("http://") || head.starts_with("https://") || head.starts_with("www.")
}

fn is_word_char(c: char) -> bool {
    c.is_alphanumeric() || c == '_'
}

fn split_chunk(chunk: &str, out: &mut Vec<String>) {
    let chars: Vec<char> = chunk.chars().collect();
    let mut word = String::new();
    for (i, &c) in chars.iter().enumerate() {
        if is_word_char(c) {
            word.extend(c.to_lowercase());
        } else if (c == '\'' || c == '\u{2019}')
            && !word.is_empty()
            && chars.get(i + 1).copied().is_some_and(is_word_char)
        {
            word.push('\'');
        } else {
            if !word.is_empty() {
                out.push(std::mem::take(&mut word));
            }
            out.push(c.to_lowercase().collect());
        }
    }
    if !word.is_empty() {
        out.push(word);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toks(s: &str) -> Vec<String> {
        tokenize(s)
    }

    #[test]
    fn empty_text() {
        assert!(toks("").is_empty());
        assert!(toks("   \n\t").is_empty());
    }

    #[test]
    fn lowercases_and_splits_punctuation() {
        assert_eq!(toks("Refused to PLAY!"), ["refused", "to", "play", "!"]);
    }

    #[test]
    fn strips_markup() {
        assert_eq!(toks("see http://x.co @bob #great"), ["see", "great"]);
        assert_eq!(toks("HTTPS://A.B/c www.site.org ok"), ["ok"]);
        assert_eq!(toks("##double #tag!"), ["double", "tag", "!"]);
    }

    #[test]
    fn apostrophes_inside_words_are_kept() {
        assert_eq!(toks("Don't 'quote' it's"), ["don't", "'", "quote", "'", "it's"]);
        assert_eq!(toks("rock’n’roll"), ["rock'n'roll"]);
    }

    #[test]
    fn punctuation_runs_are_separate_tokens() {
        assert_eq!(toks("wait...what?!"), ["wait", ".", ".", ".", "what", "?", "!"]);
        assert_eq!(toks("snake_case 3.5"), ["snake_case", "3", ".", "5"]);
    }

    #[test]
    fn deterministic() {
        let s = "Some #Mixed TEXT, with @people and https://links.example!";
        assert_eq!(tokenize(s), tokenize(s));
    }
}
