//! Square boolean matrices over the (OR, AND) semiring.
//!
//! Rows are u64 bitsets. A product entry (i, j) is set when some k has
//! both (i, k) and (k, j) set, so the k-th boolean power of an adjacency
//! matrix marks exactly the vertex pairs joined by a walk of length k.

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BoolMatrix {
    n: usize,
    stride: usize,
    rows: Vec<u64>,
}

impl BoolMatrix {
    pub fn zeros(n: usize) -> Self {
        let stride = n.div_ceil(64).max(1);
        BoolMatrix { n, stride, rows: vec![0; n * stride] }
    }

    /// Symmetric matrix with entries (u, v) and (v, u) set for every edge.
    pub fn from_edges(n: usize, edges: impl IntoIterator<Item = (u32, u32)>) -> Self {
        let mut m = BoolMatrix::zeros(n);
        for (u, v) in edges {
            m.set(u as usize, v as usize);
            m.set(v as usize, u as usize);
        }
        m
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> bool {
        debug_assert!(i < self.n && j < self.n);
        self.rows[i * self.stride + j / 64] >> (j % 64) & 1 == 1
    }

    pub fn set(&mut self, i: usize, j: usize) {
        debug_assert!(i < self.n && j < self.n);
        self.rows[i * self.stride + j / 64] |= 1 << (j % 64);
    }

    /// Entrywise OR.
    pub fn or(&self, other: &BoolMatrix) -> BoolMatrix {
        assert_eq!(self.n, other.n);
        let rows = self.rows.iter().zip(&other.rows).map(|(a, b)| a | b).collect();
        BoolMatrix { n: self.n, stride: self.stride, rows }
    }

    /// Entrywise set difference: keeps entries of `self` absent from `other`.
    pub fn minus(&self, other: &BoolMatrix) -> BoolMatrix {
        assert_eq!(self.n, other.n);
        let rows = self.rows.iter().zip(&other.rows).map(|(a, b)| a & !b).collect();
        BoolMatrix { n: self.n, stride: self.stride, rows }
    }

    /// Boolean matrix product.
    pub fn matmul(&self, other: &BoolMatrix) -> BoolMatrix {
        assert_eq!(self.n, other.n);
        let mut out = BoolMatrix::zeros(self.n);
        for i in 0..self.n {
            let dst = i * self.stride;
            for w in 0..self.stride {
                let mut bits = self.rows[i * self.stride + w];
                while bits != 0 {
                    let k = w * 64 + bits.trailing_zeros() as usize;
                    bits &= bits - 1;
                    let src = k * self.stride;
                    for c in 0..self.stride {
                        out.rows[dst + c] |= other.rows[src + c];
                    }
                }
            }
        }
        out
    }

    /// k-th boolean power, k >= 1: walks of length exactly k.
    pub fn pow(&self, k: usize) -> BoolMatrix {
        assert!(k >= 1);
        let mut acc = self.clone();
        for _ in 1..k {
            acc = acc.matmul(self);
        }
        acc
    }

    /// Column indices of the set entries in row i, ascending.
    pub fn row_indices(&self, i: usize) -> impl Iterator<Item = usize> + '_ {
        let base = i * self.stride;
        (0..self.stride).flat_map(move |w| {
            let mut bits = self.rows[base + w];
            std::iter::from_fn(move || {
                if bits == 0 {
                    return None;
                }
                let j = w * 64 + bits.trailing_zeros() as usize;
                bits &= bits - 1;
                Some(j)
            })
        })
    }

    /// Set entries above the diagonal, as (i, j) pairs with i < j.
    pub fn upper_pairs(&self) -> Vec<(u32, u32)> {
        let mut out = Vec::new();
        for i in 0..self.n {
            for j in (i + 1)..self.n {
                if self.get(i, j) {
                    out.push((i as u32, j as u32));
                }
            }
        }
        out
    }
}
