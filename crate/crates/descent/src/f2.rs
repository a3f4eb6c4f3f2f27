//! Dense F_2 linear algebra on u128 row masks (≤ 128 columns).

/// Row-reduces in place; returns the pivot column of each nonzero row.
pub fn rref(rows: &mut Vec<u128>, ncols: u32) -> Vec<u32> {
    let mut pivots = Vec::new();
    let mut r = 0;
    for c in 0..ncols {
        let bit = 1u128 << c;
        let Some(i) = (r..rows.len()).find(|&i| rows[i] & bit != 0) else { continue };
        rows.swap(r, i);
        let pivot = rows[r];
        for (j, row) in rows.iter_mut().enumerate() {
            if j != r && *row & bit != 0 {
                *row ^= pivot;
            }
        }
        pivots.push(c);
        r += 1;
    }
    rows.truncate(r);
    pivots
}

pub fn rank(rows: &[u128], ncols: u32) -> u32 {
    let mut rows = rows.to_vec();
    rref(&mut rows, ncols).len() as u32
}

/// Basis of {x : row·x = 0 for every row}.
pub fn kernel(rows: &[u128], ncols: u32) -> Vec<u128> {
    let mut rows = rows.to_vec();
    let pivots = rref(&mut rows, ncols);
    (0..ncols)
        .filter(|c| !pivots.contains(c))
        .map(|free| {
            let mut x = 1u128 << free;
            for (row, &p) in rows.iter().zip(&pivots) {
                if row >> free & 1 == 1 {
                    x |= 1u128 << p;
                }
            }
            x
        })
        .collect()
}

/// All elements of the span of `basis`.
pub fn span(basis: &[u128]) -> Vec<u128> {
    let mut out = vec![0u128];
    for &b in basis {
        let extra: Vec<u128> = out.iter().map(|x| x ^ b).collect();
        for x in extra {
            if !out.contains(&x) {
                out.push(x);
            }
        }
    }
    out
}

pub fn parity(x: u128) -> u8 {
    (x.count_ones() & 1) as u8
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kernel_is_annihilated() {
        let rows = vec![0b1011u128, 0b0110, 0b1101];
        let k = kernel(&rows, 4);
        assert_eq!(k.len() as u32, 4 - rank(&rows, 4));
        for x in span(&k) {
            assert!(rows.iter().all(|r| parity(r & x) == 0));
        }
        assert_eq!(span(&k).len(), 1 << k.len());
    }
}
