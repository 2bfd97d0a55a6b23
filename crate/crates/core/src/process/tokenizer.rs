use std::collections::HashMap;

/// Whitespace tokenizer over a fixed vocabulary.
///
/// A word found in the vocabulary maps to its id. Any other word falls back
/// to its UTF-8 bytes, each mapped to `byte % vocab_size`. Decoding joins the
/// vocabulary strings with single spaces.
#[derive(Debug, Clone)]
pub struct Tokenizer {
    vocab: Vec<String>,
    index: HashMap<String, usize>,
}

impl Tokenizer {
    pub fn new(vocab: Vec<String>) -> Self {
        let mut index = HashMap::with_capacity(vocab.len());
        for (i, w) in vocab.iter().enumerate() {
            // first occurrence wins for duplicated entries
            index.entry(w.clone()).or_insert(i);
        }
        Self { vocab, index }
    }

    /// Synthetic vocabulary `t0, t1, ...`.
    pub fn synthetic(size: usize) -> Self {
        Self::new((0..size).map(|i| format!("t{i}")).collect())
    }

    pub fn vocab(&self) -> &[String] {
        &self.vocab
    }

    pub fn len(&self) -> usize {
        self.vocab.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vocab.is_empty()
    }

    pub fn encode(&self, text: &str) -> Vec<usize> {
        let v = self.vocab.len().max(1);
        let mut ids = Vec::new();
        for word in text.split_whitespace() {
            match self.index.get(word) {
                Some(&id) => ids.push(id),
                None => ids.extend(word.bytes().map(|b| b as usize % v)),
            }
        }
        ids
    }

    pub fn decode(&self, ids: &[usize]) -> String {
        ids.iter()
            .map(|&i| self.vocab.get(i).map_or("<unk>", String::as_str))
            .collect::<Vec<_>>()
            .join(" ")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn known_words_and_byte_fallback() {
        let tok = Tokenizer::new(vec!["the".into(), "cat".into(), "sat".into()]);
        // 'a' = 97 -> 97 % 3 = 1, 'b' = 98 -> 2
        assert_eq!(tok.encode("the  cat\tab sat"), vec![0, 1, 1, 2, 2]);
        assert_eq!(tok.decode(&[2, 0, 7]), "sat the <unk>");
    }

    #[test]
    fn synthetic_vocab_round_trips() {
        let tok = Tokenizer::synthetic(64);
        let ids = vec![0, 17, 63, 5];
        assert_eq!(tok.encode(&tok.decode(&ids)), ids);
    }
}
