//! Words over the scheduling alphabet `{0, ..., n_p}`.
//!
//! Symbol `0` stands for the constant channel `p_0 = 1`; symbol `i > 0`
//! for the `i`-th scheduling coordinate. Words are ordered length-first and
//! then lexicographically, which is the order used to lay out Hankel
//! matrices. `car(np, n)` counts the words of length at most `n`, so the
//! words of length `<= n` occupy ordinals `0 .. car(np, n)` with the empty
//! word at ordinal 0.

use std::cmp::Ordering;
use std::fmt;

use crate::error::{Error, Result};

/// A finite sequence of symbols in `0..=np`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Word {
    symbols: Vec<usize>,
    np: usize,
}

impl Word {
    /// The empty word.
    pub fn empty(np: usize) -> Self {
        Word {
            symbols: Vec::new(),
            np,
        }
    }

    pub fn new(np: usize, symbols: Vec<usize>) -> Result<Self> {
        if let Some(&symbol) = symbols.iter().find(|&&s| s > np) {
            return Err(Error::Symbol { symbol, np });
        }
        Ok(Word { symbols, np })
    }

    /// Word made of `len` copies of `symbol`.
    pub fn repeat(np: usize, symbol: usize, len: usize) -> Result<Self> {
        Word::new(np, vec![symbol; len])
    }

    pub fn np(&self) -> usize {
        self.np
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    pub fn symbols(&self) -> &[usize] {
        &self.symbols
    }

    /// `self` followed by `other`.
    pub fn concat(&self, other: &Word) -> Result<Word> {
        self.same_alphabet(other)?;
        let mut symbols = self.symbols.clone();
        symbols.extend_from_slice(&other.symbols);
        Ok(Word {
            symbols,
            np: self.np,
        })
    }

    /// `self` with `symbol` appended.
    pub fn push(&self, symbol: usize) -> Result<Word> {
        if symbol > self.np {
            return Err(Error::Symbol {
                symbol,
                np: self.np,
            });
        }
        let mut symbols = self.symbols.clone();
        symbols.push(symbol);
        Ok(Word {
            symbols,
            np: self.np,
        })
    }

    /// `symbol` followed by `self`.
    pub fn prepend(&self, symbol: usize) -> Result<Word> {
        if symbol > self.np {
            return Err(Error::Symbol {
                symbol,
                np: self.np,
            });
        }
        let mut symbols = Vec::with_capacity(self.len() + 1);
        symbols.push(symbol);
        symbols.extend_from_slice(&self.symbols);
        Ok(Word {
            symbols,
            np: self.np,
        })
    }

    fn same_alphabet(&self, other: &Word) -> Result<()> {
        if self.np != other.np {
            return Err(Error::AlphabetMismatch {
                left: self.np,
                right: other.np,
            });
        }
        Ok(())
    }

    /// Length-first lexicographic comparison.
    pub fn compare_lex(&self, other: &Word) -> Result<Ordering> {
        self.same_alphabet(other)?;
        Ok(self.cmp(other))
    }

    /// Parses the textual form produced by `Display`: `"eps"` or `""` for
    /// the empty word, a digit string when `np <= 9`, and dot-separated
    /// symbols (`"10.0.3"`) otherwise.
    pub fn parse(np: usize, text: &str) -> Result<Word> {
        let text = text.trim();
        if text.is_empty() || text == "eps" {
            return Ok(Word::empty(np));
        }
        let symbols: Option<Vec<usize>> = if text.contains('.') {
            text.split('.').map(|t| t.parse::<usize>().ok()).collect()
        } else if np <= 9 {
            text.chars()
                .map(|c| c.to_digit(10).map(|d| d as usize))
                .collect()
        } else {
            // a single multi-digit symbol
            text.parse::<usize>().ok().map(|s| vec![s])
        };
        let symbols = symbols.ok_or_else(|| Error::WordParse(text.to_string()))?;
        Word::new(np, symbols)
    }
}

impl Ord for Word {
    fn cmp(&self, other: &Self) -> Ordering {
        self.len()
            .cmp(&other.len())
            .then_with(|| self.symbols.cmp(&other.symbols))
            .then_with(|| self.np.cmp(&other.np))
    }
}

impl PartialOrd for Word {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.symbols.is_empty() {
            return f.write_str("eps");
        }
        if self.np <= 9 {
            for s in &self.symbols {
                write!(f, "{s}")?;
            }
            Ok(())
        } else {
            let parts: Vec<String> = self.symbols.iter().map(|s| s.to_string()).collect();
            f.write_str(&parts.join("."))
        }
    }
}

/// Number of words of length at most `n`, or `None` on overflow.
pub fn checked_car(np: usize, n: usize) -> Option<usize> {
    let base = np.checked_add(1)?;
    let mut total: usize = 0;
    let mut power: usize = 1;
    for k in 0..=n {
        total = total.checked_add(power)?;
        if k < n {
            power = power.checked_mul(base)?;
        }
    }
    Some(total)
}

/// Number of words of length at most `n`: `sum_{k=0}^{n} (np+1)^k`.
///
/// Saturates at `usize::MAX`.
pub fn car(np: usize, n: usize) -> usize {
    checked_car(np, n).unwrap_or(usize::MAX)
}

/// All words of length at most `n`, in increasing order.
pub fn enumerate_up_to(np: usize, n: usize) -> Vec<Word> {
    let base = np + 1;
    let mut out = Vec::with_capacity(checked_car(np, n).unwrap_or(0));
    for len in 0..=n {
        let mut symbols = vec![0usize; len];
        loop {
            out.push(Word {
                symbols: symbols.clone(),
                np,
            });
            // odometer increment, last position fastest
            match symbols.iter().rposition(|&s| s + 1 < base) {
                Some(pos) => {
                    symbols[pos] += 1;
                    symbols[pos + 1..].fill(0);
                }
                None => break,
            }
        }
    }
    out
}

/// Ordinal of `w` among all words, i.e. its position in
/// `enumerate_up_to(np, n)` for any `n >= |w|`.
pub fn index_of(w: &Word, n: usize) -> Result<usize> {
    if w.len() > n {
        return Err(Error::OutOfRange {
            what: "word length",
            value: w.len(),
            limit: n,
        });
    }
    ordinal(w).ok_or(Error::OutOfRange {
        what: "word ordinal",
        value: w.len(),
        limit: n,
    })
}

fn ordinal(w: &Word) -> Option<usize> {
    let offset = if w.is_empty() {
        0
    } else {
        checked_car(w.np, w.len() - 1)?
    };
    let base = w.np.checked_add(1)?;
    let mut value: usize = 0;
    for &s in &w.symbols {
        value = value.checked_mul(base)?.checked_add(s)?;
    }
    offset.checked_add(value)
}

/// Ordinal of the concatenation `first · second` without allocating it.
pub(crate) fn concat_ordinal(first: &Word, second: &Word) -> Option<usize> {
    let base = first.np + 1;
    let len = first.len() + second.len();
    let offset = if len == 0 {
        0
    } else {
        checked_car(first.np, len - 1)?
    };
    let mut value: usize = 0;
    for &s in first.symbols.iter().chain(second.symbols.iter()) {
        value = value.checked_mul(base)?.checked_add(s)?;
    }
    offset.checked_add(value)
}

/// Inverse of [`index_of`]: the `k`-th word among words of length `<= n`.
pub fn word_at(k: usize, np: usize, n: usize) -> Result<Word> {
    let total = checked_car(np, n).ok_or(Error::OutOfRange {
        what: "word count",
        value: n,
        limit: usize::MAX,
    })?;
    if k >= total {
        return Err(Error::OutOfRange {
            what: "ordinal",
            value: k,
            limit: total,
        });
    }
    if np == 0 {
        return Ok(Word {
            symbols: vec![0; k],
            np,
        });
    }
    let base = np + 1;
    let mut len = 0;
    let mut offset = 0;
    let mut count = 1;
    while k >= offset + count {
        offset += count;
        count *= base;
        len += 1;
    }
    let mut value = k - offset;
    let mut symbols = vec![0usize; len];
    for slot in symbols.iter_mut().rev() {
        *slot = value % base;
        value /= base;
    }
    Ok(Word { symbols, np })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn w(np: usize, s: &str) -> Word {
        Word::parse(np, s).unwrap()
    }

    #[test]
    fn ordering_examples() {
        let e = Word::empty(1);
        assert_eq!(e.compare_lex(&w(1, "0")).unwrap(), Ordering::Less);
        assert_eq!(w(1, "0").compare_lex(&w(1, "1")).unwrap(), Ordering::Less);
        assert_eq!(w(1, "1").compare_lex(&w(1, "00")).unwrap(), Ordering::Less);
        let x = w(1, "0110");
        assert_eq!(x.compare_lex(&x).unwrap(), Ordering::Equal);
    }

    #[test]
    fn prefix_precedes_extension() {
        let s = w(2, "21");
        for r in ["0", "2", "120"] {
            let sr = s.concat(&w(2, r)).unwrap();
            assert_eq!(s.compare_lex(&sr).unwrap(), Ordering::Less);
        }
    }

    #[test]
    fn alphabet_mismatch_is_an_error() {
        assert!(matches!(
            w(1, "0").compare_lex(&w(2, "0")),
            Err(Error::AlphabetMismatch { .. })
        ));
    }

    #[test]
    fn enumeration_examples() {
        let words: Vec<String> = enumerate_up_to(1, 2).iter().map(|w| w.to_string()).collect();
        assert_eq!(words, ["eps", "0", "1", "00", "01", "10", "11"]);
        let words: Vec<String> = enumerate_up_to(2, 1).iter().map(|w| w.to_string()).collect();
        assert_eq!(words, ["eps", "0", "1", "2"]);
        assert_eq!(enumerate_up_to(1, 3).len(), 15);
        assert_eq!(enumerate_up_to(0, 0).len(), 1);
        assert_eq!(enumerate_up_to(0, 3).len(), 4);
    }

    #[test]
    fn car_examples() {
        assert_eq!(car(1, 2), 7);
        assert_eq!(car(0, 5), 6);
        assert_eq!(car(2, 2), 13);
        assert_eq!(checked_car(usize::MAX, 2), None);
    }

    #[test]
    fn index_examples() {
        assert_eq!(index_of(&Word::empty(1), 0).unwrap(), 0);
        assert_eq!(index_of(&w(1, "01"), 2).unwrap(), 4);
        assert!(index_of(&w(1, "011"), 2).is_err());
        assert!(word_at(7, 1, 2).is_err());
        assert_eq!(word_at(4, 1, 2).unwrap(), w(1, "01"));
    }

    #[test]
    fn invalid_symbol() {
        assert!(matches!(Word::new(1, vec![0, 2]), Err(Error::Symbol { symbol: 2, np: 1 })));
        assert!(Word::parse(1, "012").is_err());
        assert!(Word::parse(1, "0x").is_err());
    }

    #[test]
    fn display_and_parse() {
        assert_eq!(Word::empty(3).to_string(), "eps");
        assert_eq!(w(3, "").len(), 0);
        assert_eq!(w(1, "101").symbols(), &[1, 0, 1]);
        let big = Word::new(12, vec![10, 0, 3]).unwrap();
        assert_eq!(big.to_string(), "10.0.3");
        assert_eq!(Word::parse(12, "10.0.3").unwrap(), big);
        assert_eq!(Word::parse(12, "11").unwrap().symbols(), &[11]);
    }

    #[test]
    fn concat_ordinal_matches() {
        for a in enumerate_up_to(2, 2) {
            for b in enumerate_up_to(2, 2) {
                let c = a.concat(&b).unwrap();
                assert_eq!(concat_ordinal(&a, &b), Some(index_of(&c, 4).unwrap()));
            }
        }
    }
}
