//! Truncated Baker–Campbell–Hausdorff coefficient table.
//!
//! `log(exp x · exp y) = x + y + Σ c · [word]` where each `word` is a string
//! over the letters `0 ↦ x`, `1 ↦ y` evaluated as the left-normed bracket
//! `[[..[w1,w2],w3]..,wn]`, and `c = num/den`. Terms of every degree from 2
//! through 6 are listed, which covers all nilpotent groups of step ≤ 6.
//!
//! The table is the Dynkin–Specht–Wever projection of the exact word-algebra
//! expansion of `log(exp x · exp y)` (degree-n word coefficient divided by n,
//! words starting with a repeated letter dropped, first-two-letter swaps
//! merged). The test module below re-derives the expansion over exact
//! rationals and checks the table against it word-by-word, so the rational
//! constants cannot silently rot.

pub(crate) struct BchTerm {
    pub num: i64,
    pub den: i64,
    pub word: &'static [u8],
}

pub(crate) static BCH_TERMS: &[BchTerm] = &[
    BchTerm { num: 1, den: 2, word: &[0, 1] },
    BchTerm { num: -1, den: 12, word: &[0, 1, 0] },
    BchTerm { num: 1, den: 12, word: &[0, 1, 1] },
    BchTerm { num: -1, den: 48, word: &[0, 1, 0, 1] },
    BchTerm { num: -1, den: 48, word: &[0, 1, 1, 0] },
    BchTerm { num: 1, den: 720, word: &[0, 1, 0, 0, 0] },
    BchTerm { num: -1, den: 360, word: &[0, 1, 0, 0, 1] },
    BchTerm { num: 1, den: 120, word: &[0, 1, 0, 1, 0] },
    BchTerm { num: -1, den: 120, word: &[0, 1, 1, 0, 1] },
    BchTerm { num: 1, den: 360, word: &[0, 1, 1, 1, 0] },
    BchTerm { num: -1, den: 720, word: &[0, 1, 1, 1, 1] },
    BchTerm { num: 1, den: 2160, word: &[0, 1, 0, 0, 0, 1] },
    BchTerm { num: 1, den: 2160, word: &[0, 1, 0, 0, 1, 0] },
    BchTerm { num: -1, den: 1440, word: &[0, 1, 0, 0, 1, 1] },
    BchTerm { num: -1, den: 1440, word: &[0, 1, 0, 1, 0, 0] },
    BchTerm { num: 1, den: 360, word: &[0, 1, 0, 1, 0, 1] },
    BchTerm { num: -1, den: 1440, word: &[0, 1, 0, 1, 1, 0] },
    BchTerm { num: 1, den: 2160, word: &[0, 1, 0, 1, 1, 1] },
    BchTerm { num: 1, den: 2160, word: &[0, 1, 1, 0, 0, 0] },
    BchTerm { num: -1, den: 1440, word: &[0, 1, 1, 0, 0, 1] },
    BchTerm { num: 1, den: 360, word: &[0, 1, 1, 0, 1, 0] },
    BchTerm { num: -1, den: 1440, word: &[0, 1, 1, 0, 1, 1] },
    BchTerm { num: -1, den: 1440, word: &[0, 1, 1, 1, 0, 0] },
    BchTerm { num: 1, den: 2160, word: &[0, 1, 1, 1, 0, 1] },
    BchTerm { num: 1, den: 2160, word: &[0, 1, 1, 1, 1, 0] },
];

/// Maximum group step the table supports.
pub(crate) const MAX_STEP: usize = 6;
