//! Envelope (skyline) Cholesky for symmetric positive semidefinite systems.

/// Lower triangle stored row by row from each row's first nonzero.
pub(crate) struct ProfileMatrix {
    first: Vec<usize>,
    offset: Vec<usize>,
    values: Vec<f64>,
}

impl ProfileMatrix {
    /// Envelope covering every `(i, j)` with `first[i] <= j <= i`.
    pub fn new(first: Vec<usize>) -> Self {
        let mut offset = Vec::with_capacity(first.len() + 1);
        let mut total = 0;
        for (i, &f) in first.iter().enumerate() {
            debug_assert!(f <= i);
            offset.push(total);
            total += i - f + 1;
        }
        offset.push(total);
        Self {
            first,
            offset,
            values: vec![0.0; total],
        }
    }

    pub fn dim(&self) -> usize {
        self.first.len()
    }

    #[cfg(test)]
    pub fn stored(&self) -> usize {
        self.values.len()
    }

    pub fn clear(&mut self) {
        self.values.iter_mut().for_each(|v| *v = 0.0);
    }

    /// Adds `v` at `(i, j)`, `j <= i`, which must lie in the envelope.
    #[inline]
    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        debug_assert!(j <= i && j >= self.first[i]);
        self.values[self.offset[i] + j - self.first[i]] += v;
    }

    #[inline]
    fn row(&self, i: usize) -> &[f64] {
        &self.values[self.offset[i]..self.offset[i + 1]]
    }

    pub fn diagonal(&self, i: usize) -> f64 {
        self.values[self.offset[i + 1] - 1]
    }

    /// In-place `LL'` factorization. Pivots that collapse below
    /// `tiny * max_diag` are replaced by a huge value, which zeroes the
    /// matching solution component instead of failing. Returns how many
    /// pivots were replaced.
    pub fn factor(&mut self, tiny: f64) -> usize {
        let n = self.dim();
        let max_diag = (0..n).map(|i| self.diagonal(i)).fold(0.0f64, f64::max);
        let floor = tiny * max_diag.max(1e-300);
        let mut replaced = 0;
        for i in 0..n {
            let fi = self.first[i];
            let oi = self.offset[i];
            for j in fi..i {
                let fj = self.first[j];
                let start = fi.max(fj);
                let oj = self.offset[j];
                let mut s = self.values[oi + j - fi];
                let ri = &self.values[oi + start - fi..oi + j - fi];
                let rj = &self.values[oj + start - fj..oj + j - fj];
                s -= ri.iter().zip(rj).map(|(a, b)| a * b).sum::<f64>();
                let djj = self.values[self.offset[j + 1] - 1];
                self.values[oi + j - fi] = s / djj;
            }
            let row = &self.values[oi..oi + i - fi];
            let d = self.values[oi + i - fi] - row.iter().map(|v| v * v).sum::<f64>();
            self.values[oi + i - fi] = if d > floor && d.is_finite() {
                d.sqrt()
            } else {
                replaced += 1;
                1e64
            };
        }
        replaced
    }

    /// Solves `LL' x = b` in place after [`factor`](Self::factor).
    pub fn solve(&self, b: &mut [f64]) {
        let n = self.dim();
        for i in 0..n {
            let fi = self.first[i];
            let row = self.row(i);
            let s: f64 = row[..i - fi].iter().zip(&b[fi..i]).map(|(a, v)| a * v).sum();
            b[i] = (b[i] - s) / row[i - fi];
        }
        for i in (0..n).rev() {
            let fi = self.first[i];
            let row = self.row(i);
            b[i] /= row[i - fi];
            let bi = b[i];
            if bi != 0.0 {
                for (k, a) in row[..i - fi].iter().enumerate() {
                    b[fi + k] -= a * bi;
                }
            }
        }
    }
}
