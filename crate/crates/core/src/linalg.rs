//! Gaussian elimination over F_q on row vectors.

use crate::gf::{Elem, Field};

/// Reduces `rows` in place to reduced row echelon form, drops zero rows and
/// returns the pivot column of each remaining row.
pub fn rref(fs: &Field, rows: &mut Vec<Vec<Elem>>) -> Vec<usize> {
    let cols = rows.first().map_or(0, |r| r.len());
    let mut pivots = Vec::new();
    let mut r = 0;
    for col in 0..cols {
        let Some(sel) = (r..rows.len()).find(|&i| !rows[i][col].is_zero()) else {
            continue;
        };
        rows.swap(r, sel);
        let inv = fs.inv(rows[r][col]);
        for x in rows[r].iter_mut() {
            *x = fs.mul(*x, inv);
        }
        let pivot_row = rows[r].clone();
        for (i, row) in rows.iter_mut().enumerate() {
            if i != r && !row[col].is_zero() {
                let factor = row[col];
                for (x, &y) in row.iter_mut().zip(&pivot_row) {
                    *x = fs.sub(*x, fs.mul(factor, y));
                }
            }
        }
        pivots.push(col);
        r += 1;
        if r == rows.len() {
            break;
        }
    }
    rows.truncate(r);
    pivots
}

pub fn rank(fs: &Field, rows: &[Vec<Elem>]) -> usize {
    let mut m = rows.to_vec();
    rref(fs, &mut m).len()
}

/// Whether `v` lies in the row span of `rows`.
pub fn in_span(fs: &Field, rows: &[Vec<Elem>], v: &[Elem]) -> bool {
    let base = rank(fs, rows);
    let mut m = rows.to_vec();
    m.push(v.to_vec());
    rank(fs, &m) == base
}

/// Reduces `v` against an RREF basis so it is zero at every pivot column.
pub fn reduce_against(fs: &Field, basis: &[Vec<Elem>], pivots: &[usize], v: &mut [Elem]) {
    for (row, &pc) in basis.iter().zip(pivots) {
        let factor = v[pc];
        if !factor.is_zero() {
            for (x, b) in v.iter_mut().zip(row) {
                *x = fs.sub(*x, fs.mul(factor, *b));
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rank_small() {
        let fs = Field::new(3, 1, None).unwrap();
        let e = |v: &[u8]| v.iter().map(|&x| Elem(x)).collect::<Vec<_>>();
        assert_eq!(rank(&fs, &[e(&[1, 2]), e(&[2, 1])]), 1);
        assert_eq!(rank(&fs, &[e(&[1, 2]), e(&[0, 1])]), 2);
        assert_eq!(rank(&fs, &[e(&[0, 0])]), 0);
        assert!(in_span(&fs, &[e(&[1, 2, 0])], &e(&[2, 1, 0])));
        assert!(!in_span(&fs, &[e(&[1, 2, 0])], &e(&[2, 1, 1])));
    }
}
