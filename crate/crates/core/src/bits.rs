//! Fixed-width bit-vectors stored as `u64` words.

pub const WORD_BITS: usize = u64::BITS as usize;

#[inline]
pub fn words_for(bits: usize) -> usize {
    bits.div_ceil(WORD_BITS)
}

/// Iterates the indices of set bits in ascending order.
pub fn ones(words: &[u64]) -> impl Iterator<Item = usize> + '_ {
    words.iter().enumerate().flat_map(|(w, &word)| {
        let mut rest = word;
        std::iter::from_fn(move || {
            if rest == 0 {
                return None;
            }
            let b = rest.trailing_zeros() as usize;
            rest &= rest - 1;
            Some(w * WORD_BITS + b)
        })
    })
}

#[inline]
pub fn test(words: &[u64], bit: usize) -> bool {
    words[bit / WORD_BITS] >> (bit % WORD_BITS) & 1 == 1
}

#[inline]
pub fn set(words: &mut [u64], bit: usize) {
    words[bit / WORD_BITS] |= 1 << (bit % WORD_BITS);
}

#[inline]
pub fn clear(words: &mut [u64], bit: usize) {
    words[bit / WORD_BITS] &= !(1 << (bit % WORD_BITS));
}

#[inline]
pub fn or_into(dst: &mut [u64], src: &[u64]) {
    for (d, s) in dst.iter_mut().zip(src) {
        *d |= s;
    }
}

/// An owned bit-vector of `len` bits.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Bitset {
    len: usize,
    words: Vec<u64>,
}

impl Bitset {
    pub fn new(len: usize) -> Self {
        Self {
            len,
            words: vec![0; words_for(len)],
        }
    }

    pub fn from_words(len: usize, words: Vec<u64>) -> Self {
        debug_assert_eq!(words.len(), words_for(len));
        Self { len, words }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn contains(&self, bit: usize) -> bool {
        bit < self.len && test(&self.words, bit)
    }

    pub fn insert(&mut self, bit: usize) {
        assert!(bit < self.len);
        set(&mut self.words, bit);
    }

    pub fn remove(&mut self, bit: usize) {
        assert!(bit < self.len);
        clear(&mut self.words, bit);
    }

    pub fn count_ones(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        ones(&self.words)
    }

    pub fn words(&self) -> &[u64] {
        &self.words
    }
}

/// `rows` bit-vectors of `bits` bits each, packed contiguously.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BitRows {
    stride: usize,
    data: Vec<u64>,
}

impl BitRows {
    pub fn new(rows: usize, bits: usize) -> Self {
        let stride = words_for(bits);
        Self {
            stride,
            data: vec![0; rows * stride],
        }
    }

    #[inline]
    pub fn stride(&self) -> usize {
        self.stride
    }

    #[inline]
    pub fn row(&self, r: usize) -> &[u64] {
        &self.data[r * self.stride..(r + 1) * self.stride]
    }

    #[inline]
    pub fn get(&self, r: usize, bit: usize) -> bool {
        test(self.row(r), bit)
    }

    #[inline]
    pub fn set(&mut self, r: usize, bit: usize) {
        set(&mut self.data[r * self.stride..(r + 1) * self.stride], bit)
    }

    #[inline]
    pub fn clear(&mut self, r: usize, bit: usize) {
        clear(&mut self.data[r * self.stride..(r + 1) * self.stride], bit)
    }

    #[inline]
    pub fn assign(&mut self, r: usize, bit: usize, value: bool) {
        if value {
            self.set(r, bit)
        } else {
            self.clear(r, bit)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ones_crosses_words() {
        let mut b = Bitset::new(200);
        for i in [0, 5, 63, 64, 127, 199] {
            b.insert(i);
        }
        assert_eq!(b.iter().collect::<Vec<_>>(), vec![0, 5, 63, 64, 127, 199]);
        assert_eq!(b.count_ones(), 6);
        b.remove(64);
        assert!(!b.contains(64));
        assert!(!b.contains(500));
    }

    #[test]
    fn rows_are_independent() {
        let mut r = BitRows::new(3, 70);
        r.set(1, 69);
        r.set(2, 0);
        assert!(r.get(1, 69));
        assert!(!r.get(0, 69));
        assert_eq!(ones(r.row(2)).collect::<Vec<_>>(), vec![0]);
        r.assign(1, 69, false);
        assert!(r.row(1).iter().all(|&w| w == 0));
    }
}
