use crate::error::{Error, Result};
use crate::numerics::{l2_normalize, Rng};

fn fnv1a(s: &str) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in s.bytes() {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

/// Lowercased word tokens; `%` stays attached so `70%` is one token.
pub fn tokenize(text: &str) -> Vec<String> {
    text.split(|c: char| !(c.is_alphanumeric() || c == '%'))
        .filter(|t| !t.is_empty())
        .map(str::to_lowercase)
        .collect()
}

/// Bag-of-tokens text embedding: every token maps to a fixed Gaussian
/// direction derived from its hash and the seed; counts are summed and the
/// result L2-normalized.
pub fn hash_text_embedding(text: &str, dim: usize, seed: u64) -> Result<Vec<f64>> {
    let tokens = tokenize(text);
    if tokens.is_empty() {
        return Err(Error::InvalidArgument("empty report text".into()));
    }
    let mut acc = vec![0.0; dim];
    for t in &tokens {
        let mut rng = Rng::stream(seed, fnv1a(t));
        for a in acc.iter_mut() {
            *a += rng.normal();
        }
    }
    l2_normalize(&acc)
}
