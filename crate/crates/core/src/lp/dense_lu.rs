//! Dense LU with partial pivoting for simplex bases.

pub(crate) struct DenseLu {
    m: usize,
    /// Row-major `L\U`, unit lower triangle implied.
    lu: Vec<f64>,
    /// Row `i` of `PB` is row `perm[i]` of `B`.
    perm: Vec<usize>,
}

/// Raised when elimination meets a pivot below tolerance: the column
/// position that could not be pivoted and the rows still without a pivot.
#[derive(Debug)]
pub(crate) struct Singular {
    pub position: usize,
    pub free_rows: Vec<usize>,
}

impl DenseLu {
    /// Factors the `m x m` matrix whose column `k` is `columns[k]`, given as
    /// sparse `(row, value)` entries.
    pub fn factor(m: usize, columns: &[&[(usize, f64)]]) -> Result<Self, Singular> {
        debug_assert_eq!(columns.len(), m);
        let mut lu = vec![0.0; m * m];
        for (k, col) in columns.iter().enumerate() {
            for &(i, v) in col.iter() {
                lu[i * m + k] += v;
            }
        }
        let mut perm: Vec<usize> = (0..m).collect();
        for k in 0..m {
            let mut p = k;
            let mut best = lu[k * m + k].abs();
            for i in k + 1..m {
                let v = lu[i * m + k].abs();
                if v > best {
                    best = v;
                    p = i;
                }
            }
            if best < 1e-11 {
                return Err(Singular {
                    position: k,
                    free_rows: perm[k..].to_vec(),
                });
            }
            if p != k {
                for c in 0..m {
                    lu.swap(k * m + c, p * m + c);
                }
                perm.swap(k, p);
            }
            let pivot = lu[k * m + k];
            let (head, tail) = lu.split_at_mut((k + 1) * m);
            let pivot_row = &head[k * m..k * m + m];
            for i in 0..m - k - 1 {
                let row = &mut tail[i * m..i * m + m];
                let f = row[k] / pivot;
                if f == 0.0 {
                    continue;
                }
                row[k] = f;
                for c in k + 1..m {
                    row[c] -= f * pivot_row[c];
                }
            }
        }
        Ok(Self { m, lu, perm })
    }

    /// Overwrites `b` with `B^{-1} b`.
    pub fn solve(&self, b: &mut [f64]) {
        let m = self.m;
        let mut y: Vec<f64> = self.perm.iter().map(|&p| b[p]).collect();
        for i in 0..m {
            let row = &self.lu[i * m..i * m + i];
            let s: f64 = row.iter().zip(&y[..i]).map(|(a, v)| a * v).sum();
            y[i] -= s;
        }
        for i in (0..m).rev() {
            let row = &self.lu[i * m..i * m + m];
            let s: f64 = row[i + 1..].iter().zip(&y[i + 1..]).map(|(a, v)| a * v).sum();
            y[i] = (y[i] - s) / row[i];
        }
        b.copy_from_slice(&y);
    }

    /// Overwrites `c` with `B^{-T} c`.
    pub fn solve_transpose(&self, c: &mut [f64]) {
        let m = self.m;
        let mut z = c.to_vec();
        for i in 0..m {
            z[i] /= self.lu[i * m + i];
            let zi = z[i];
            if zi != 0.0 {
                let row = &self.lu[i * m..i * m + m];
                for k in i + 1..m {
                    z[k] -= row[k] * zi;
                }
            }
        }
        for i in (0..m).rev() {
            let zi = z[i];
            if zi != 0.0 {
                let row = &self.lu[i * m..i * m + i];
                for k in 0..i {
                    z[k] -= row[k] * zi;
                }
            }
        }
        for (i, &p) in self.perm.iter().enumerate() {
            c[p] = z[i];
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solves_both_orientations() {
        let cols: Vec<Vec<(usize, f64)>> = vec![
            vec![(0, 0.0), (1, 2.0), (2, 1.0)],
            vec![(0, 1.0), (2, 3.0)],
            vec![(0, 4.0), (1, 1.0), (2, 1.0)],
        ];
        let refs: Vec<&[(usize, f64)]> = cols.iter().map(|c| c.as_slice()).collect();
        let lu = DenseLu::factor(3, &refs).unwrap();
        let dense = |i: usize, k: usize| cols[k].iter().filter(|e| e.0 == i).map(|e| e.1).sum::<f64>();
        let x = [1.0, -2.0, 0.5];
        let mut b: Vec<f64> = (0..3).map(|i| (0..3).map(|k| dense(i, k) * x[k]).sum()).collect();
        lu.solve(&mut b);
        for k in 0..3 {
            assert!((b[k] - x[k]).abs() < 1e-12);
        }
        let mut c: Vec<f64> = (0..3).map(|k| (0..3).map(|i| dense(i, k) * x[i]).sum()).collect();
        lu.solve_transpose(&mut c);
        for k in 0..3 {
            assert!((c[k] - x[k]).abs() < 1e-12);
        }
    }

    #[test]
    fn reports_singular_column() {
        let cols: Vec<Vec<(usize, f64)>> = vec![vec![(0, 1.0), (1, 1.0)], vec![(0, 2.0), (1, 2.0)]];
        let refs: Vec<&[(usize, f64)]> = cols.iter().map(|c| c.as_slice()).collect();
        assert!(DenseLu::factor(2, &refs).is_err());
    }
}
