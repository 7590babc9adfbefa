use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::collections::HashSet;

use crate::corpus::{self, Encoding};

/// The 3755 level-one hanzi of GB2312, in code order.
fn gb2312_level_one() -> Vec<char> {
    let mut bytes = Vec::new();
    for row in 0xB0u8..=0xD7 {
        for col in 0xA1u8..=0xFE {
            if row == 0xD7 && col > 0xF9 {
                break;
            }
            bytes.extend([row, col]);
        }
    }
    corpus::decode(&bytes, Encoding::Gb2312)
        .expect("level-one GB2312 decodes")
        .chars()
        .collect()
}

/// `count` distinct 2 to 4 character words, encodable in every supported
/// encoding. No word is a substring or a reordering of another, so
/// substring blacklists and reorder matching only ever hit what was planted.
pub fn synthetic_words(count: usize, seed: u64) -> Vec<String> {
    let pool = gb2312_level_one();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut words = Vec::with_capacity(count);
    let mut seen_keys = HashSet::new();
    let mut substrings: HashSet<String> = HashSet::new();
    let mut texts: HashSet<String> = HashSet::new();
    while words.len() < count {
        let len = rng.gen_range(2..=4);
        let chars: Vec<char> = (0..len)
            .map(|_| *pool.choose(&mut rng).expect("pool"))
            .collect();
        let word: String = chars.iter().collect();
        let mut key = chars.clone();
        key.sort_unstable();
        if substrings.contains(&word) || seen_keys.contains(&key) {
            continue;
        }
        let parts: Vec<String> = (0..len)
            .flat_map(|i| (i + 1..=len).map(move |j| (i, j)))
            .filter(|&(i, j)| j - i >= 2)
            .map(|(i, j)| chars[i..j].iter().collect())
            .collect();
        if parts.iter().any(|p| texts.contains(p)) {
            continue;
        }
        substrings.extend(parts);
        seen_keys.insert(key);
        texts.insert(word.clone());
        words.push(word);
    }
    words
}
