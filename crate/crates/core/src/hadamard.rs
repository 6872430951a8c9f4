//! Hadamard matrices and the sign partitions used by group estimation.
//!
//! Constructible orders are products of Sylvester factors `2^m` and Paley I
//! factors `p + 1` (`p` prime, `p ≡ 3 mod 4`). Every matrix is returned in
//! normalized form: first row and first column all `+1`.

use crate::error::{Error, Result};

/// Cap on the multiple `c` searched by [`smallest_order`].
pub const ORDER_SEARCH_CAP: usize = 64;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HadamardMatrix {
    order: usize,
    entries: Vec<i8>,
}

impl HadamardMatrix {
    fn from_entries(order: usize, entries: Vec<i8>) -> Self {
        debug_assert_eq!(entries.len(), order * order);
        Self { order, entries }
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn get(&self, i: usize, j: usize) -> i8 {
        self.entries[i * self.order + j]
    }

    pub fn row(&self, i: usize) -> &[i8] {
        &self.entries[i * self.order..(i + 1) * self.order]
    }

    /// `H·Hᵀ == N·I` in exact integer arithmetic.
    pub fn is_orthogonal(&self) -> bool {
        let n = self.order;
        (0..n).all(|i| {
            (0..n).all(|j| {
                let dot: i64 = self.row(i).iter().zip(self.row(j)).map(|(&a, &b)| (a * b) as i64).sum();
                dot == if i == j { n as i64 } else { 0 }
            })
        })
    }

    pub fn is_normalized(&self) -> bool {
        (0..self.order).all(|j| self.get(0, j) == 1 && self.get(j, 0) == 1)
    }

    /// Orthogonal, normalized, and every row and column after the first balanced.
    pub fn is_valid(&self) -> bool {
        let n = self.order;
        let balanced = |count: usize| n == 1 || count == n / 2;
        self.is_orthogonal()
            && self.is_normalized()
            && (1..n).all(|i| balanced(self.row(i).iter().filter(|&&v| v == 1).count()))
            && (1..n).all(|j| balanced((0..n).filter(|&i| self.get(i, j) == 1).count()))
    }

    /// Negates rows, then columns, so that the first column and row are `+1`.
    fn normalize(mut self) -> Self {
        let n = self.order;
        for i in 0..n {
            if self.get(i, 0) == -1 {
                for v in &mut self.entries[i * n..(i + 1) * n] {
                    *v = -*v;
                }
            }
        }
        for j in 0..n {
            if self.get(0, j) == -1 {
                for i in 0..n {
                    self.entries[i * n + j] = -self.entries[i * n + j];
                }
            }
        }
        self
    }

    /// Rows as `+`/`-` strings.
    pub fn to_sign_rows(&self) -> Vec<String> {
        (0..self.order).map(|i| self.row(i).iter().map(|&v| if v == 1 { '+' } else { '-' }).collect()).collect()
    }

    /// Entries as an `f64` matrix.
    pub fn to_dense(&self) -> crate::linalg::DenseMatrix {
        crate::linalg::DenseMatrix::from_fn(self.order, self.order, |i, j| self.get(i, j) as f64)
    }
}

pub fn identity_order_one() -> HadamardMatrix {
    HadamardMatrix::from_entries(1, vec![1])
}

/// Sylvester matrix of order `2^m`.
pub fn sylvester(m: u32) -> HadamardMatrix {
    let base = HadamardMatrix::from_entries(2, vec![1, 1, 1, -1]);
    (0..m).fold(identity_order_one(), |h, _| kronecker(&h, &base))
}

pub fn is_prime(p: usize) -> bool {
    if p < 2 {
        return false;
    }
    let mut d = 2;
    while d * d <= p {
        if p.is_multiple_of(d) {
            return false;
        }
        d += 1;
    }
    true
}

/// Paley I matrix of order `p + 1` for a prime `p ≡ 3 (mod 4)`.
pub fn paley_one(p: usize) -> Result<HadamardMatrix> {
    if !is_prime(p) || p % 4 != 3 {
        return Err(Error::NotConstructible(format!("Paley I needs a prime p = 3 mod 4, got {p}")));
    }
    let mut residue = vec![false; p];
    for x in 1..p {
        residue[x * x % p] = true;
    }
    let chi = |x: usize| -> i8 {
        if x == 0 {
            0
        } else if residue[x] {
            1
        } else {
            -1
        }
    };
    let n = p + 1;
    let mut entries = vec![0i8; n * n];
    for i in 0..n {
        for j in 0..n {
            // H = I + S with S = [[0, 1ᵀ], [-1, Q]] and Q_ij = χ(j − i).
            let s = match (i, j) {
                (0, 0) => 0,
                (0, _) => 1,
                (_, 0) => -1,
                _ => chi((j + p - i) % p),
            };
            entries[i * n + j] = s + i8::from(i == j);
        }
    }
    Ok(HadamardMatrix::from_entries(n, entries).normalize())
}

/// Kronecker product `a ⊗ b`, normalized.
pub fn kronecker(a: &HadamardMatrix, b: &HadamardMatrix) -> HadamardMatrix {
    let (na, nb) = (a.order, b.order);
    let n = na * nb;
    let mut entries = vec![0i8; n * n];
    for ia in 0..na {
        for ja in 0..na {
            let s = a.get(ia, ja);
            for ib in 0..nb {
                for jb in 0..nb {
                    entries[(ia * nb + ib) * n + ja * nb + jb] = s * b.get(ib, jb);
                }
            }
        }
    }
    HadamardMatrix::from_entries(n, entries).normalize()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Factor {
    Sylvester(u32),
    Paley(usize),
}

fn plan(order: usize) -> Option<Vec<Factor>> {
    if order == 0 {
        return None;
    }
    if order.is_power_of_two() {
        return Some(vec![Factor::Sylvester(order.trailing_zeros())]);
    }
    if !order.is_multiple_of(4) {
        return None;
    }
    // Largest Paley factor first, then the remaining cofactor.
    for d in (4..=order).rev().filter(|d| order.is_multiple_of(*d)) {
        let p = d - 1;
        if p % 4 == 3 && is_prime(p) {
            if let Some(mut rest) = plan(order / d) {
                rest.push(Factor::Paley(p));
                return Some(rest);
            }
        }
    }
    None
}

pub fn is_constructible(order: usize) -> bool {
    plan(order).is_some()
}

/// Hadamard matrix of the given order, if the construction set reaches it.
pub fn construct(order: usize) -> Result<HadamardMatrix> {
    let factors = plan(order).ok_or_else(|| Error::NotConstructible(format!("order {order}")))?;
    let mut h = identity_order_one();
    for f in factors {
        let g = match f {
            Factor::Sylvester(m) => sylvester(m),
            Factor::Paley(p) => paley_one(p)?,
        };
        h = kronecker(&h, &g);
    }
    Ok(h)
}

/// Smallest constructible order `2k·c`, `c = 1..=ORDER_SEARCH_CAP`.
pub fn smallest_order(k: usize) -> Result<HadamardMatrix> {
    if k == 0 {
        return Err(Error::InvalidParams("k must be positive".into()));
    }
    (1..=ORDER_SEARCH_CAP)
        .map(|c| 2 * k * c)
        .find(|&order| is_constructible(order))
        .map(construct)
        .unwrap_or(Err(Error::NoOrderFound { k, cap: ORDER_SEARCH_CAP }))
}

/// Columns split by the sign of one row.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RowPartition {
    pub row: usize,
    pub positive: Vec<usize>,
    pub negative: Vec<usize>,
}

/// One partition per row. The all-`+1` first row is split first half →
/// negative side, second half → positive side.
pub fn row_partitions(h: &HadamardMatrix) -> Vec<RowPartition> {
    let n = h.order();
    let half = n / 2;
    (0..n)
        .map(|i| {
            if i == 0 {
                RowPartition { row: 0, negative: (0..half).collect(), positive: (half..n).collect() }
            } else {
                let (positive, negative) = (0..n).partition(|&j| h.get(i, j) == 1);
                RowPartition { row: i, positive, negative }
            }
        })
        .collect()
}

/// Column groups of the `+` and `-` sides of one row.
pub type GroupSplit = (Vec<Vec<usize>>, Vec<Vec<usize>>);

/// Chunks each side of a partition into contiguous groups of `k` columns.
pub fn split_into_k_groups(partition: &RowPartition, k: usize) -> Result<GroupSplit> {
    let half = partition.positive.len();
    if k == 0 || !half.is_multiple_of(k) || partition.negative.len() != half {
        return Err(Error::InvalidGrouping { k, half });
    }
    let chunk = |side: &[usize]| side.chunks(k).map(<[usize]>::to_vec).collect();
    Ok((chunk(&partition.positive), chunk(&partition.negative)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sylvester_small() {
        assert_eq!(sylvester(1).to_sign_rows(), vec!["++", "+-"]);
        assert_eq!(sylvester(2).to_sign_rows(), vec!["++++", "+-+-", "++--", "+--+"]);
    }

    #[test]
    fn sylvester_32_orthogonal() {
        let h = sylvester(5);
        assert_eq!(h.order(), 32);
        // Independent entrywise product.
        for i in 0..32 {
            for j in 0..32 {
                let mut dot = 0i64;
                for c in 0..32 {
                    dot += (h.get(i, c) as i64) * (h.get(j, c) as i64);
                }
                assert_eq!(dot, if i == j { 32 } else { 0 });
            }
        }
        assert!(h.is_valid());
    }

    #[test]
    fn paley_examples() {
        let h = paley_one(3).unwrap();
        assert_eq!(h.order(), 4);
        assert!(h.is_valid());
        let h = paley_one(11).unwrap();
        assert_eq!(h.order(), 12);
        assert!(h.is_valid());
        assert!(matches!(paley_one(5), Err(Error::NotConstructible(_))));
        assert!(matches!(paley_one(15), Err(Error::NotConstructible(_))));
    }

    #[test]
    fn kronecker_examples() {
        let two = sylvester(1);
        assert_eq!(kronecker(&two, &two), sylvester(2));
        let h = kronecker(&two, &paley_one(11).unwrap());
        assert_eq!(h.order(), 24);
        assert!(h.is_valid());
        let p = paley_one(7).unwrap();
        assert_eq!(kronecker(&identity_order_one(), &p), p);
    }

    #[test]
    fn smallest_order_examples() {
        assert_eq!(smallest_order(4).unwrap().order(), 8);
        assert_eq!(smallest_order(3).unwrap().order(), 12);
        assert_eq!(smallest_order(5).unwrap().order(), 20);
        assert_eq!(smallest_order(1).unwrap().order(), 2);
        assert_eq!(smallest_order(7).unwrap().order(), 84);
    }

    #[test]
    fn smallest_order_search_oracle() {
        // Orders of the form 2k·c; 6, 10 and 14 have no Hadamard matrix at all.
        for k in 1..=64 {
            let h = smallest_order(k).unwrap();
            assert_eq!(h.order() % (2 * k), 0);
            for c in 1..h.order() / (2 * k) {
                assert!(!is_constructible(2 * k * c));
            }
        }
    }

    #[test]
    fn all_constructible_orders_up_to_128_are_valid() {
        let mut seen = 0;
        for order in 1..=128 {
            if let Ok(h) = construct(order) {
                assert!(h.is_valid(), "order {order}");
                seen += 1;
            }
        }
        assert!(seen >= 20);
        assert!(construct(6).is_err());
    }

    #[test]
    fn partitions() {
        let p = row_partitions(&sylvester(1));
        assert_eq!(p[0].negative, vec![0]);
        assert_eq!(p[0].positive, vec![1]);
        assert_eq!(p[1].positive, vec![0]);
        assert_eq!(p[1].negative, vec![1]);
        let p = row_partitions(&sylvester(2));
        assert_eq!(p[2].positive, vec![0, 1]);
        assert_eq!(p[2].negative, vec![2, 3]);
        for part in row_partitions(&construct(24).unwrap()) {
            assert_eq!(part.positive.len(), part.negative.len());
        }
    }

    #[test]
    fn grouping() {
        let parts = row_partitions(&paley_one(11).unwrap());
        let (pos, neg) = split_into_k_groups(&parts[0], 3).unwrap();
        assert_eq!((pos.len(), neg.len()), (2, 2));
        assert!(pos.iter().chain(&neg).all(|g| g.len() == 3));
        let parts = row_partitions(&sylvester(2));
        let (pos, neg) = split_into_k_groups(&parts[1], 2).unwrap();
        assert_eq!((pos.len(), neg.len()), (1, 1));
        let parts = row_partitions(&sylvester(3));
        assert!(matches!(split_into_k_groups(&parts[1], 3), Err(Error::InvalidGrouping { .. })));
    }
}
