//! Partition of the computational basis by number of excitations.
//!
//! Qubit `q` of an `N`-qubit register is bit `N − 1 − q` of the basis index,
//! so qubit 0 is the leftmost symbol in `|q₀q₁…⟩`.

/// Bit mask of qubit `q` in an `n`-qubit register.
#[inline]
pub fn qubit_bit(n: usize, q: usize) -> usize {
    1 << (n - 1 - q)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ExcitationBlocks {
    pub qubits: usize,
    /// Basis indices with `n` excitations, ascending.
    pub sectors: Vec<Vec<usize>>,
    /// Basis index → (sector, position within sector).
    pub position: Vec<(usize, usize)>,
    /// `raise[n][q][a]`: position in sector `n+1` of `σ_q⁺` applied to state
    /// `a` of sector `n`, if nonzero.
    raise: Vec<Vec<Vec<Option<usize>>>>,
    lower: Vec<Vec<Vec<Option<usize>>>>,
}

impl ExcitationBlocks {
    pub fn new(qubits: usize) -> Self {
        let dim = 1usize << qubits;
        let mut sectors = vec![Vec::new(); qubits + 1];
        let mut position = vec![(0, 0); dim];
        for idx in 0..dim {
            let n = idx.count_ones() as usize;
            position[idx] = (n, sectors[n].len());
            sectors[n].push(idx);
        }
        let mut raise = Vec::with_capacity(qubits + 1);
        let mut lower = Vec::with_capacity(qubits + 1);
        for sector in &sectors {
            let mut r = Vec::with_capacity(qubits);
            let mut l = Vec::with_capacity(qubits);
            for q in 0..qubits {
                let b = qubit_bit(qubits, q);
                r.push(sector.iter().map(|&s| (s & b == 0).then(|| position[s | b].1)).collect());
                l.push(sector.iter().map(|&s| (s & b != 0).then(|| position[s & !b].1)).collect());
            }
            raise.push(r);
            lower.push(l);
        }
        ExcitationBlocks { qubits, sectors, position, raise, lower }
    }

    pub fn dim(&self) -> usize {
        1 << self.qubits
    }

    pub fn sector_dims(&self) -> Vec<usize> {
        self.sectors.iter().map(Vec::len).collect()
    }

    /// Number of unknowns in the block-diagonal steady system, `Σ d_n²`.
    pub fn block_unknowns(&self) -> usize {
        self.sectors.iter().map(|s| s.len() * s.len()).sum()
    }

    #[inline]
    pub fn raise(&self, n: usize, q: usize, a: usize) -> Option<usize> {
        self.raise[n][q][a]
    }

    #[inline]
    pub fn lower(&self, n: usize, q: usize, a: usize) -> Option<usize> {
        self.lower[n][q][a]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn binomial_dims() {
        assert_eq!(ExcitationBlocks::new(3).sector_dims(), vec![1, 3, 3, 1]);
        assert_eq!(ExcitationBlocks::new(6).sector_dims(), vec![1, 6, 15, 20, 15, 6, 1]);
        assert_eq!(ExcitationBlocks::new(10).block_unknowns(), 184756);
    }

    #[test]
    fn ladders_are_inverse() {
        let b = ExcitationBlocks::new(4);
        for n in 0..4 {
            for q in 0..4 {
                for a in 0..b.sectors[n].len() {
                    if let Some(up) = b.raise(n, q, a) {
                        assert_eq!(b.lower(n + 1, q, up), Some(a));
                        let (i, j) = (b.sectors[n][a], b.sectors[n + 1][up]);
                        assert_eq!(i | qubit_bit(4, q), j);
                    }
                }
            }
        }
    }

    #[test]
    fn qubit_zero_is_leftmost() {
        // |100⟩ has qubit 0 excited
        assert_eq!(qubit_bit(3, 0), 0b100);
        assert_eq!(qubit_bit(3, 2), 0b001);
    }
}
