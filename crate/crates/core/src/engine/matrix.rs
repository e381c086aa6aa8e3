//! Bit-packed storage for the suppression matrix and the survivor mask.

const WORD_BITS: usize = u64::BITS as usize;

#[inline]
pub(crate) fn words_for(bits: usize) -> usize {
    bits.div_ceil(WORD_BITS)
}

/// Mask selecting bits `lo..=hi` of a word.
#[inline]
fn span_mask(lo: usize, hi: usize) -> u64 {
    (u64::MAX >> (WORD_BITS - 1 - hi)) & (u64::MAX << lo)
}

/// `true` when every bit in `lo..hi` of `row` is set.
#[inline]
pub(crate) fn all_set(row: &[u64], lo: usize, hi: usize) -> bool {
    if lo >= hi {
        return true;
    }
    let (first, last) = (lo / WORD_BITS, (hi - 1) / WORD_BITS);
    let (lo_bit, hi_bit) = (lo % WORD_BITS, (hi - 1) % WORD_BITS);
    if first == last {
        let m = span_mask(lo_bit, hi_bit);
        return row[first] & m == m;
    }
    let head = span_mask(lo_bit, WORD_BITS - 1);
    let tail = span_mask(0, hi_bit);
    row[first] & head == head
        && row[first + 1..last].iter().all(|&w| w == u64::MAX)
        && row[last] & tail == tail
}

/// `dim x dim` boolean matrix, row-major, each row padded to whole words.
///
/// Bit `(i, j)` set means detection `i` is *not* suppressed by detection
/// `j`. Trailing pad bits of each row stay set.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SuppressionMatrix {
    words: Vec<u64>,
    dim: usize,
    row_words: usize,
}

impl SuppressionMatrix {
    /// All-ones matrix.
    pub fn new(dim: usize) -> Self {
        let row_words = words_for(dim);
        SuppressionMatrix {
            words: vec![u64::MAX; row_words * dim],
            dim,
            row_words,
        }
    }

    pub fn reset(&mut self) {
        self.words.fill(u64::MAX);
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn row_words(&self) -> usize {
        self.row_words
    }

    pub fn row(&self, i: usize) -> &[u64] {
        &self.words[i * self.row_words..(i + 1) * self.row_words]
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> bool {
        assert!(i < self.dim && j < self.dim, "({i}, {j}) out of range");
        self.row(i)[j / WORD_BITS] >> (j % WORD_BITS) & 1 == 1
    }

    pub fn set(&mut self, i: usize, j: usize, value: bool) {
        assert!(i < self.dim && j < self.dim, "({i}, {j}) out of range");
        let w = &mut self.words[i * self.row_words + j / WORD_BITS];
        let bit = 1u64 << (j % WORD_BITS);
        if value {
            *w |= bit;
        } else {
            *w &= !bit;
        }
    }

    /// Number of cleared cells.
    pub fn zeros(&self) -> usize {
        (0..self.dim).map(|i| self.dim - self.row_ones(i)).sum()
    }

    fn row_ones(&self, i: usize) -> usize {
        let row = self.row(i);
        let full = self.dim / WORD_BITS;
        let mut ones: usize = row[..full].iter().map(|w| w.count_ones() as usize).sum();
        let rem = self.dim % WORD_BITS;
        if rem > 0 {
            ones += (row[full] & span_mask(0, rem - 1)).count_ones() as usize;
        }
        ones
    }

    pub(crate) fn words_mut(&mut self) -> &mut [u64] {
        &mut self.words
    }
}

/// One bit per detection slot; set bits mark cluster representatives.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SurvivorMask {
    words: Vec<u64>,
    len: usize,
}

impl SurvivorMask {
    pub fn new(len: usize) -> Self {
        SurvivorMask {
            words: vec![0; words_for(len)],
            len,
        }
    }

    pub fn from_bools(bits: &[bool]) -> Self {
        let mut mask = SurvivorMask::new(bits.len());
        for (i, &b) in bits.iter().enumerate() {
            if b {
                mask.words[i / WORD_BITS] |= 1 << (i % WORD_BITS);
            }
        }
        mask
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    #[inline]
    pub fn get(&self, i: usize) -> bool {
        assert!(i < self.len, "bit {i} out of range");
        self.words[i / WORD_BITS] >> (i % WORD_BITS) & 1 == 1
    }

    pub fn iter(&self) -> impl Iterator<Item = bool> + '_ {
        (0..self.len).map(|i| self.get(i))
    }

    pub fn count_ones(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub(crate) fn words_mut(&mut self) -> &mut [u64] {
        &mut self.words
    }
}
