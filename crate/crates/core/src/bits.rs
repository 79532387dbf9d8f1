//! Word-packed bit strings.

use std::fmt;
use std::str::FromStr;

use crate::error::Error;

/// Fixed-length bit vector packed into 64-bit words. Bits past `len` in the
/// last word are always zero.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct BitString {
    len: usize,
    words: Vec<u64>,
}

#[inline]
pub fn words_for(len: usize) -> usize {
    len.div_ceil(64)
}

impl BitString {
    pub fn zeros(len: usize) -> Self {
        Self {
            len,
            words: vec![0; words_for(len)],
        }
    }

    pub fn ones(len: usize) -> Self {
        let mut s = Self {
            len,
            words: vec![u64::MAX; words_for(len)],
        };
        s.mask_tail();
        s
    }

    /// Builds a string from packed words, clearing any bits beyond `len`.
    pub fn from_words(len: usize, words: &[u64]) -> Self {
        assert_eq!(words.len(), words_for(len), "word count does not match length");
        let mut s = Self {
            len,
            words: words.to_vec(),
        };
        s.mask_tail();
        s
    }

    pub fn from_bools(bits: &[bool]) -> Self {
        let mut s = Self::zeros(bits.len());
        for (i, &b) in bits.iter().enumerate() {
            if b {
                s.set(i, true);
            }
        }
        s
    }

    fn mask_tail(&mut self) {
        let rem = self.len % 64;
        if rem != 0 {
            if let Some(last) = self.words.last_mut() {
                *last &= (1u64 << rem) - 1;
            }
        }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn words(&self) -> &[u64] {
        &self.words
    }

    #[inline]
    pub fn get(&self, i: usize) -> bool {
        debug_assert!(i < self.len);
        (self.words[i >> 6] >> (i & 63)) & 1 == 1
    }

    #[inline]
    pub fn set(&mut self, i: usize, v: bool) {
        debug_assert!(i < self.len);
        let m = 1u64 << (i & 63);
        if v {
            self.words[i >> 6] |= m;
        } else {
            self.words[i >> 6] &= !m;
        }
    }

    /// Flips bit `i` and returns its new value.
    #[inline]
    pub fn flip(&mut self, i: usize) -> bool {
        debug_assert!(i < self.len);
        let w = &mut self.words[i >> 6];
        *w ^= 1u64 << (i & 63);
        (*w >> (i & 63)) & 1 == 1
    }

    pub fn count_ones(&self) -> usize {
        popcount(&self.words)
    }

    pub fn is_all_ones(&self) -> bool {
        self.count_ones() == self.len
    }
}

#[inline]
pub fn popcount(words: &[u64]) -> usize {
    words.iter().map(|w| w.count_ones() as usize).sum()
}

/// OneMax: the number of one-bits.
#[inline]
pub fn onemax(bits: &BitString) -> usize {
    bits.count_ones()
}

impl fmt::Debug for BitString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "BitString({self})")
    }
}

impl fmt::Display for BitString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for i in 0..self.len {
            f.write_str(if self.get(i) { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl FromStr for BitString {
    type Err = Error;

    /// Parses `"1011"`; the first character is bit 0.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bools = s
            .chars()
            .map(|c| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                other => Err(Error::InvalidParameter(format!(
                    "bit string may only contain 0 and 1, found {other:?}"
                ))),
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Self::from_bools(&bools))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn bs(s: &str) -> BitString {
        s.parse().unwrap()
    }

    #[test]
    fn onemax_examples() {
        assert_eq!(onemax(&bs("0000")), 0);
        assert_eq!(onemax(&bs("1111")), 4);
        assert_eq!(onemax(&bs("1011")), 3);
    }

    #[test]
    fn ones_masks_tail() {
        for len in [1, 63, 64, 65, 150, 200] {
            let s = BitString::ones(len);
            assert_eq!(s.count_ones(), len);
            assert!(s.is_all_ones());
        }
    }

    #[test]
    fn rejects_bad_chars() {
        assert!("10a1".parse::<BitString>().is_err());
    }

    proptest! {
        #[test]
        fn count_matches_naive(bits in proptest::collection::vec(any::<bool>(), 0..300)) {
            let s = BitString::from_bools(&bits);
            prop_assert_eq!(s.count_ones(), bits.iter().filter(|b| **b).count());
            prop_assert_eq!(s.to_string().parse::<BitString>().unwrap(), s);
        }

        #[test]
        fn flip_twice_is_identity(bits in proptest::collection::vec(any::<bool>(), 1..200), idx in any::<prop::sample::Index>()) {
            let mut s = BitString::from_bools(&bits);
            let orig = s.clone();
            let i = idx.index(bits.len());
            let now = s.flip(i);
            prop_assert_eq!(now, !bits[i]);
            s.flip(i);
            prop_assert_eq!(s, orig);
        }
    }
}
