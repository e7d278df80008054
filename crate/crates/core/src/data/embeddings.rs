//! Plain-text word vectors (`token v1 ... vD` per line) and bag-of-words
//! averaging for descriptions, tweet text and hashtags.

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use super::types::EMBEDDING_DIM;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Default)]
pub struct WordVectors {
    tokens: Vec<String>,
    index: HashMap<String, usize>,
    vectors: Vec<f32>,
}

impl WordVectors {
    pub fn load(path: &Path) -> Result<Self> {
        let f = File::open(path).map_err(|e| Error::io(path, e))?;
        Self::from_reader(BufReader::new(f), &path.display().to_string())
    }

    pub fn from_reader(reader: impl BufRead, origin: &str) -> Result<Self> {
        let mut wv = WordVectors::default();
        for (n, line) in reader.lines().enumerate() {
            let line = line.map_err(|e| Error::io(origin, e))?;
            let mut parts = line.split_whitespace();
            let Some(token) = parts.next() else { continue };
            let bad = |message: String| Error::Parse {
                path: origin.to_string(),
                line: n + 1,
                message,
            };
            let values = parts
                .map(|p| p.parse::<f32>().map_err(|e| bad(format!("{p}: {e}"))))
                .collect::<Result<Vec<_>>>()?;
            if values.len() != EMBEDDING_DIM {
                return Err(bad(format!("{} components, expected {EMBEDDING_DIM}", values.len())));
            }
            if values.iter().any(|v| !v.is_finite()) {
                return Err(bad("non-finite component".into()));
            }
            if wv.index.contains_key(token) {
                continue;
            }
            wv.index.insert(token.to_string(), wv.tokens.len());
            wv.tokens.push(token.to_string());
            wv.vectors.extend(values);
        }
        Ok(wv)
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    pub fn vector(&self, token: &str) -> Option<&[f32]> {
        self.index
            .get(token)
            .map(|&i| &self.vectors[i * EMBEDDING_DIM..(i + 1) * EMBEDDING_DIM])
    }

    /// Mean of the known tokens' vectors; the zero vector when none is known.
    pub fn average<'a>(&self, tokens: impl IntoIterator<Item = &'a str>) -> Vec<f32> {
        let mut acc = vec![0f64; EMBEDDING_DIM];
        let mut n = 0usize;
        for v in tokens.into_iter().filter_map(|t| self.vector(t)) {
            for (a, x) in acc.iter_mut().zip(v) {
                *a += f64::from(*x);
            }
            n += 1;
        }
        if n == 0 {
            return vec![0.0; EMBEDDING_DIM];
        }
        acc.iter().map(|a| (a / n as f64) as f32).collect()
    }

    /// Whitespace-tokenised, lower-cased average of `text`.
    pub fn embed_text(&self, text: &str) -> Vec<f32> {
        let lowered: Vec<String> = text.split_whitespace().map(str::to_lowercase).collect();
        self.average(lowered.iter().map(String::as_str))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line(token: &str, v: f32) -> String {
        let mut s = token.to_string();
        for _ in 0..EMBEDDING_DIM {
            s.push_str(&format!(" {v}"));
        }
        s.push('\n');
        s
    }

    #[test]
    fn averages_known_tokens() {
        let text = line("fake", 1.0) + &line("news", 3.0);
        let wv = WordVectors::from_reader(text.as_bytes(), "mem").unwrap();
        assert_eq!(wv.len(), 2);
        let avg = wv.embed_text("Fake NEWS unknown");
        assert!(avg.iter().all(|&x| x == 2.0));
        assert!(wv.embed_text("nothing here").iter().all(|&x| x == 0.0));
    }

    #[test]
    fn rejects_wrong_width() {
        let r = WordVectors::from_reader("tok 1 2 3\n".as_bytes(), "mem");
        assert!(matches!(r, Err(Error::Parse { line: 1, .. })));
    }
}
