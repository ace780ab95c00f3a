use std::cmp::Reverse;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};

/// Length of an optimal prefix code for a symbol histogram.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CodeLength {
    pub total_bits: u64,
    pub symbols: u64,
}

impl CodeLength {
    /// Mean bits per coded symbol.
    pub fn mean_bits(&self) -> f64 {
        if self.symbols == 0 {
            0.0
        } else {
            self.total_bits as f64 / self.symbols as f64
        }
    }
}

/// `Σ freq·len` of a Huffman code, without building the codewords. Zero
/// counts are ignored; a lone symbol costs one bit per occurrence.
pub fn huffman_bits(freqs: &[u64]) -> Result<CodeLength> {
    let mut heap: BinaryHeap<Reverse<u64>> = freqs.iter().copied().filter(|&c| c > 0).map(Reverse).collect();
    let symbols: u64 = heap.iter().map(|r| r.0).sum();
    match heap.len() {
        0 => Err(Error::Precondition("huffman_bits needs a positive count".into())),
        1 => Ok(CodeLength {
            total_bits: symbols,
            symbols,
        }),
        _ => {
            // Each merge adds one bit to every symbol below it.
            let mut total = 0u64;
            while heap.len() > 1 {
                let Reverse(a) = heap.pop().unwrap();
                let Reverse(b) = heap.pop().unwrap();
                total += a + b;
                heap.push(Reverse(a + b));
            }
            Ok(CodeLength {
                total_bits: total,
                symbols,
            })
        }
    }
}

/// Huffman cost of an arbitrary symbol sequence.
pub fn sequence_bits<T: Ord + Copy>(symbols: impl IntoIterator<Item = T>) -> u64 {
    let mut all: Vec<T> = symbols.into_iter().collect();
    if all.is_empty() {
        return 0;
    }
    all.sort_unstable();
    let mut freqs = Vec::new();
    let mut run = 1u64;
    for w in all.windows(2) {
        if w[0] == w[1] {
            run += 1;
        } else {
            freqs.push(run);
            run = 1;
        }
    }
    freqs.push(run);
    huffman_bits(&freqs).map(|c| c.total_bits).unwrap_or(0)
}
