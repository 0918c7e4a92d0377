//! Ordering of the monomials `x1^m x2^n` that label rows and columns of
//! moment matrices.
//!
//! Monomials with `m <= d1`, `n <= d2` are listed by total degree `m + n`,
//! ties broken by decreasing power of `x1`:
//! `(0,0), (1,0), (0,1), (2,0), (1,1), (0,2), ...`
//! Truncating the list at a total-degree boundary therefore yields the index
//! of the corresponding lower-degree problem.

/// Graded ordering of monomial exponents on the rectangle `[0, d1] x [0, d2]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MonomialIndex {
    d1: usize,
    d2: usize,
    pairs: Vec<(usize, usize)>,
    lookup: Vec<Option<usize>>,
}

impl MonomialIndex {
    pub fn new(d1: usize, d2: usize) -> Self {
        let mut pairs = Vec::with_capacity((d1 + 1) * (d2 + 1));
        for deg in 0..=(d1 + d2) {
            // within one total degree, largest m first
            for m in (0..=deg.min(d1)).rev() {
                let n = deg - m;
                if n <= d2 {
                    pairs.push((m, n));
                }
            }
        }
        let mut lookup = vec![None; (d1 + 1) * (d2 + 1)];
        for (i, &(m, n)) in pairs.iter().enumerate() {
            lookup[m * (d2 + 1) + n] = Some(i);
        }
        MonomialIndex {
            d1,
            d2,
            pairs,
            lookup,
        }
    }

    pub fn order(&self) -> (usize, usize) {
        (self.d1, self.d2)
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    /// Exponent pair at list position `i`.
    pub fn pair(&self, i: usize) -> (usize, usize) {
        self.pairs[i]
    }

    /// List position of the exponent pair `(m, n)`, if it lies in the rectangle.
    pub fn position(&self, m: usize, n: usize) -> Option<usize> {
        if m > self.d1 || n > self.d2 {
            return None;
        }
        self.lookup[m * (self.d2 + 1) + n]
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.pairs.iter().copied()
    }

    /// Positions (in this index) of all monomials that also fit the smaller
    /// rectangle `[0, d1_sub] x [0, d2_sub]`.
    pub fn positions_within(&self, d1_sub: usize, d2_sub: usize) -> Vec<usize> {
        self.pairs
            .iter()
            .enumerate()
            .filter(|&(_, &(m, n))| m <= d1_sub && n <= d2_sub)
            .map(|(i, _)| i)
            .collect()
    }
}
