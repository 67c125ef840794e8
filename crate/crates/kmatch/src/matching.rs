//! k-matchings stored as per-vertex partner lists.
//!
//! Every vertex has at most `k` partners, so membership tests and removals
//! scan at most `k` entries. Loops and repeated pairs are rejected.

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum MatchingError {
    #[error("vertex {vertex} out of range for {n} vertices")]
    VertexOutOfRange { vertex: usize, n: usize },
    #[error("loop at vertex {0} cannot be matched")]
    Loop(usize),
    #[error("pair {{{0}, {1}}} is already matched")]
    Duplicate(usize, usize),
    #[error("pair {{{0}, {1}}} is not matched")]
    Missing(usize, usize),
    #[error("vertex {0} is already saturated")]
    Saturated(usize),
    #[error("path is not alternating at position {0}")]
    NotAlternating(usize),
    #[error("path endpoint {0} is saturated")]
    EndpointSaturated(usize),
    #[error("path has even length or fewer than two vertices")]
    BadLength,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct KMatching {
    k: usize,
    partners: Vec<Vec<u32>>,
    size: usize,
}

impl KMatching {
    #[must_use]
    pub fn new(n: usize, k: usize) -> Self {
        Self { k, partners: vec![Vec::new(); n], size: 0 }
    }

    pub fn from_pairs(n: usize, k: usize, pairs: &[(usize, usize)]) -> Result<Self, MatchingError> {
        let mut m = Self::new(n, k);
        for &(u, v) in pairs {
            m.insert(u, v)?;
        }
        Ok(m)
    }

    #[must_use]
    pub fn n(&self) -> usize {
        self.partners.len()
    }

    #[must_use]
    pub fn k(&self) -> usize {
        self.k
    }

    /// Number of matched pairs.
    #[must_use]
    pub fn size(&self) -> usize {
        self.size
    }

    #[must_use]
    pub fn degree(&self, v: usize) -> usize {
        self.partners[v].len()
    }

    #[must_use]
    pub fn deficiency(&self, v: usize) -> usize {
        self.k - self.degree(v)
    }

    #[must_use]
    pub fn partners(&self, v: usize) -> &[u32] {
        &self.partners[v]
    }

    #[must_use]
    pub fn contains(&self, u: usize, v: usize) -> bool {
        self.partners[u].contains(&(v as u32))
    }

    /// `kn - 2|M|`.
    #[must_use]
    pub fn total_deficiency(&self) -> usize {
        self.k * self.n() - 2 * self.size
    }

    pub fn deficient_vertices(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.n()).filter(|&v| self.degree(v) < self.k)
    }

    fn check(&self, v: usize) -> Result<(), MatchingError> {
        if v < self.n() {
            Ok(())
        } else {
            Err(MatchingError::VertexOutOfRange { vertex: v, n: self.n() })
        }
    }

    pub fn insert(&mut self, u: usize, v: usize) -> Result<(), MatchingError> {
        self.check(u)?;
        self.check(v)?;
        if u == v {
            return Err(MatchingError::Loop(u));
        }
        if self.contains(u, v) {
            return Err(MatchingError::Duplicate(u, v));
        }
        for x in [u, v] {
            if self.degree(x) >= self.k {
                return Err(MatchingError::Saturated(x));
            }
        }
        self.partners[u].push(v as u32);
        self.partners[v].push(u as u32);
        self.size += 1;
        Ok(())
    }

    pub fn remove(&mut self, u: usize, v: usize) -> Result<(), MatchingError> {
        self.check(u)?;
        self.check(v)?;
        let pu = self.partners[u].iter().position(|&x| x as usize == v);
        let pv = self.partners[v].iter().position(|&x| x as usize == u);
        match (pu, pv) {
            (Some(a), Some(b)) => {
                self.partners[u].swap_remove(a);
                self.partners[v].swap_remove(b);
                self.size -= 1;
                Ok(())
            }
            _ => Err(MatchingError::Missing(u, v)),
        }
    }

    /// Matched pairs with `u < v`, sorted.
    #[must_use]
    pub fn pairs(&self) -> Vec<(usize, usize)> {
        let mut out: Vec<(usize, usize)> = self
            .partners
            .iter()
            .enumerate()
            .flat_map(|(u, ps)| ps.iter().map(move |&v| (u, v as usize)))
            .filter(|&(u, v)| u < v)
            .collect();
        out.sort_unstable();
        out
    }

    /// Toggles every consecutive pair of `walk`: matched pairs are removed,
    /// unmatched ones inserted. Applying the same walk twice restores the
    /// matching. The walk's pairs must be distinct.
    pub fn toggle_walk(&mut self, walk: &[usize]) -> Result<(), MatchingError> {
        let mut pending_insert = Vec::new();
        for pair in walk.windows(2) {
            let (u, v) = (pair[0], pair[1]);
            if self.contains(u, v) {
                self.remove(u, v)?;
            } else {
                pending_insert.push((u, v));
            }
        }
        // Removals first, so a vertex that both loses and gains a partner
        // never transiently exceeds k.
        for (u, v) in pending_insert {
            self.insert(u, v)?;
        }
        Ok(())
    }

    /// Checks that `path` is an augmenting trail: odd number of pairs,
    /// unmatched pairs at even positions, matched pairs at odd positions,
    /// no pair used twice, and deficient endpoints (an endpoint shared by both
    /// ends needs deficiency two).
    pub fn check_augmenting(&self, path: &[usize]) -> Result<(), MatchingError> {
        if path.len() < 2 || path.len() % 2 != 0 {
            return Err(MatchingError::BadLength);
        }
        let mut seen: Vec<(usize, usize)> = Vec::with_capacity(path.len() - 1);
        for (i, pair) in path.windows(2).enumerate() {
            let (u, v) = (pair[0], pair[1]);
            self.check(u)?;
            self.check(v)?;
            if u == v {
                return Err(MatchingError::Loop(u));
            }
            if self.contains(u, v) != (i % 2 == 1) {
                return Err(MatchingError::NotAlternating(i));
            }
            seen.push((u.min(v), u.max(v)));
        }
        let mut sorted = seen.clone();
        sorted.sort_unstable();
        if let Some(w) = sorted.windows(2).find(|w| w[0] == w[1]) {
            return Err(MatchingError::Duplicate(w[0].0, w[0].1));
        }
        let (a, b) = (path[0], path[path.len() - 1]);
        let need_a = if a == b { 2 } else { 1 };
        if self.deficiency(a) < need_a {
            return Err(MatchingError::EndpointSaturated(a));
        }
        if self.deficiency(b) < 1 {
            return Err(MatchingError::EndpointSaturated(b));
        }
        Ok(())
    }

    /// `M <- M xor E(P)` for an augmenting trail; grows `M` by one.
    pub fn apply_augmenting_path(&mut self, path: &[usize]) -> Result<(), MatchingError> {
        self.check_augmenting(path)?;
        self.toggle_walk(path)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_edge_path() {
        let mut m = KMatching::new(2, 1);
        m.apply_augmenting_path(&[0, 1]).unwrap();
        assert_eq!(m.pairs(), vec![(0, 1)]);
    }

    #[test]
    fn length_three_path_swaps() {
        let mut m = KMatching::from_pairs(4, 1, &[(1, 2)]).unwrap();
        m.apply_augmenting_path(&[0, 1, 2, 3]).unwrap();
        assert_eq!(m.pairs(), vec![(0, 1), (2, 3)]);
        assert_eq!(m.size(), 2);
    }

    #[test]
    fn rejects_non_alternating() {
        let m = KMatching::from_pairs(4, 1, &[(1, 2)]).unwrap();
        assert_eq!(m.check_augmenting(&[0, 1, 3, 2]), Err(MatchingError::NotAlternating(1)));
        assert_eq!(m.check_augmenting(&[0, 1, 2]), Err(MatchingError::BadLength));
    }

    #[test]
    fn saturation_and_duplicates() {
        let mut m = KMatching::new(3, 1);
        m.insert(0, 1).unwrap();
        assert_eq!(m.insert(1, 0), Err(MatchingError::Duplicate(1, 0)));
        assert_eq!(m.insert(0, 2), Err(MatchingError::Saturated(0)));
        assert_eq!(m.insert(2, 2), Err(MatchingError::Loop(2)));
        assert_eq!(m.remove(0, 2), Err(MatchingError::Missing(0, 2)));
    }

    #[test]
    fn toggle_is_an_involution() {
        let mut m = KMatching::from_pairs(5, 2, &[(0, 1), (2, 3)]).unwrap();
        let before = m.clone();
        let walk = [4, 1, 0, 2, 3];
        m.toggle_walk(&walk).unwrap();
        assert_ne!(m, before);
        m.toggle_walk(&walk).unwrap();
        assert_eq!(m.pairs(), before.pairs());
    }

    #[test]
    fn closed_trail_needs_double_deficiency() {
        // Triangle with k = 2 and nothing matched: 0-1-2-0 is not alternating,
        // but the single pair 0-1 is augmenting.
        let m = KMatching::from_pairs(4, 2, &[(1, 2)]).unwrap();
        assert!(m.check_augmenting(&[0, 1, 2, 0]).is_ok());
        let m = KMatching::from_pairs(4, 2, &[(1, 2), (0, 3)]).unwrap();
        assert_eq!(m.check_augmenting(&[0, 1, 2, 0]), Err(MatchingError::EndpointSaturated(0)));
    }
}
