//! Gaussian elimination over GF(q).
//!
//! [`RowSpace`] grows a row-echelon basis one row at a time and remembers how
//! every basis row was formed from the accepted input rows, so membership
//! queries come back with an explicit combination.

use crate::field::{Fe, PrimeField};

#[derive(Clone, Debug)]
struct BasisRow {
    pivot: usize,
    /// Reduced row with a unit pivot; zero at the pivots of all earlier basis rows.
    row: Vec<Fe>,
    /// Coefficients over the accepted rows that produce `row`.
    combo: Vec<Fe>,
}

/// Incrementally maintained row span.
#[derive(Clone, Debug)]
pub struct RowSpace {
    field: PrimeField,
    ncols: usize,
    basis: Vec<BasisRow>,
}

impl RowSpace {
    pub fn new(field: PrimeField, ncols: usize) -> Self {
        RowSpace { field, ncols, basis: Vec::new() }
    }

    pub fn rank(&self) -> usize {
        self.basis.len()
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    /// Reduces `v` against the basis, returning the residual and the
    /// basis coefficients that were subtracted.
    fn reduce(&self, v: &[Fe]) -> (Vec<Fe>, Vec<Fe>) {
        assert_eq!(v.len(), self.ncols, "row width mismatch");
        let f = &self.field;
        let mut residual = v.to_vec();
        let mut coefs = vec![Fe::ZERO; self.basis.len()];
        for (k, b) in self.basis.iter().enumerate() {
            let c = residual[b.pivot];
            if c.is_zero() {
                continue;
            }
            coefs[k] = c;
            let nc = f.neg(c);
            for (x, &y) in residual[b.pivot..].iter_mut().zip(&b.row[b.pivot..]) {
                *x = f.mul_add(*x, nc, y);
            }
        }
        (residual, coefs)
    }

    /// Adds `v` if it is independent of the current span; returns whether it was added.
    pub fn insert(&mut self, v: &[Fe]) -> bool {
        let f = self.field;
        let (residual, coefs) = self.reduce(v);
        let Some(pivot) = residual.iter().position(|c| !c.is_zero()) else {
            return false;
        };
        let lead_inv = f.inv(residual[pivot]).expect("nonzero pivot");
        let accepted = self.basis.len();
        // combo = (e_new - sum coefs_k * combo_k) / lead
        let mut combo = vec![Fe::ZERO; accepted + 1];
        for (k, &c) in coefs.iter().enumerate() {
            if c.is_zero() {
                continue;
            }
            let nc = f.neg(c);
            for (x, &y) in combo.iter_mut().zip(&self.basis[k].combo) {
                *x = f.mul_add(*x, nc, y);
            }
        }
        combo[accepted] = f.one();
        for x in combo.iter_mut() {
            *x = f.mul(*x, lead_inv);
        }
        let row = residual.iter().map(|&x| f.mul(x, lead_inv)).collect();
        for b in self.basis.iter_mut() {
            b.combo.push(Fe::ZERO);
        }
        self.basis.push(BasisRow { pivot, row, combo });
        true
    }

    pub fn contains(&self, v: &[Fe]) -> bool {
        self.reduce(v).0.iter().all(|c| c.is_zero())
    }

    /// Coefficients over the accepted rows (in acceptance order) that
    /// reproduce `v`, or `None` when `v` is outside the span.
    pub fn express(&self, v: &[Fe]) -> Option<Vec<Fe>> {
        let f = &self.field;
        let (residual, coefs) = self.reduce(v);
        if residual.iter().any(|c| !c.is_zero()) {
            return None;
        }
        let mut out = vec![Fe::ZERO; self.basis.len()];
        for (k, &c) in coefs.iter().enumerate() {
            if c.is_zero() {
                continue;
            }
            for (x, &y) in out.iter_mut().zip(&self.basis[k].combo) {
                *x = f.mul_add(*x, c, y);
            }
        }
        Some(out)
    }
}

/// Result of [`gaussian_solve`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SolveReport {
    pub rank: usize,
    /// For each target: coefficients over *all* input rows (dependent rows
    /// get zero), or `None` if the target is outside the row span.
    pub solutions: Vec<Option<Vec<Fe>>>,
}

impl SolveReport {
    pub fn all_in_span(&self) -> bool {
        self.solutions.iter().all(Option::is_some)
    }
}

/// Row-reduces `rows` and reports, for each target functional, whether it
/// lies in their span and with which combination.
pub fn gaussian_solve(field: &PrimeField, rows: &[Vec<Fe>], targets: &[Vec<Fe>]) -> SolveReport {
    let ncols = rows
        .first()
        .or(targets.first())
        .map_or(0, Vec::len);
    let mut space = RowSpace::new(*field, ncols);
    let accepted: Vec<usize> = rows
        .iter()
        .enumerate()
        .filter_map(|(i, r)| space.insert(r).then_some(i))
        .collect();
    let solutions = targets
        .iter()
        .map(|t| {
            space.express(t).map(|c| {
                let mut full = vec![Fe::ZERO; rows.len()];
                for (&i, &x) in accepted.iter().zip(&c) {
                    full[i] = x;
                }
                full
            })
        })
        .collect();
    SolveReport { rank: space.rank(), solutions }
}

pub fn rank(field: &PrimeField, rows: &[Vec<Fe>]) -> usize {
    let Some(first) = rows.first() else { return 0 };
    let mut space = RowSpace::new(*field, first.len());
    rows.iter().filter(|r| space.insert(r)).count()
}

/// Basis of `{x : row · x = 0 for every row}` over `ncols` unknowns.
pub fn null_space(field: &PrimeField, rows: &[Vec<Fe>], ncols: usize) -> Vec<Vec<Fe>> {
    let mut m: Vec<Vec<Fe>> = rows.to_vec();
    let mut pivots = Vec::new();
    let mut next = 0;
    for col in 0..ncols {
        let Some(p) = (next..m.len()).find(|&i| !m[i][col].is_zero()) else { continue };
        m.swap(next, p);
        let inv = field.inv(m[next][col]).expect("nonzero pivot");
        for x in m[next].iter_mut() {
            *x = field.mul(*x, inv);
        }
        for i in 0..m.len() {
            if i != next && !m[i][col].is_zero() {
                let c = field.neg(m[i][col]);
                let pivot_row = m[next].clone();
                for (x, &y) in m[i].iter_mut().zip(&pivot_row) {
                    *x = field.mul_add(*x, c, y);
                }
            }
        }
        pivots.push(col);
        next += 1;
    }
    (0..ncols)
        .filter(|c| !pivots.contains(c))
        .map(|free| {
            let mut v = vec![Fe::ZERO; ncols];
            v[free] = field.one();
            for (i, &pc) in pivots.iter().enumerate() {
                v[pc] = field.neg(m[i][free]);
            }
            v
        })
        .collect()
}

/// `sum_i coeffs[i] * rows[i]`
pub fn combine(field: &PrimeField, coeffs: &[Fe], rows: &[Vec<Fe>]) -> Vec<Fe> {
    let ncols = rows.first().map_or(0, Vec::len);
    let mut out = vec![Fe::ZERO; ncols];
    for (&c, row) in coeffs.iter().zip(rows) {
        if c.is_zero() {
            continue;
        }
        for (x, &y) in out.iter_mut().zip(row) {
            *x = field.mul_add(*x, c, y);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn m(f: &PrimeField, rows: &[&[u64]]) -> Vec<Vec<Fe>> {
        rows.iter().map(|r| r.iter().map(|&x| f.elem(x)).collect()).collect()
    }

    #[test]
    fn identity_system() {
        let f = PrimeField::new(5).unwrap();
        let rows = m(&f, &[&[1, 0, 0], &[0, 1, 0], &[0, 0, 1]]);
        let rep = gaussian_solve(&f, &rows, &m(&f, &[&[1, 2, 3]]));
        assert_eq!(rep.rank, 3);
        assert_eq!(rep.solutions[0].as_deref(), Some(m(&f, &[&[1, 2, 3]])[0].as_slice()));
    }

    #[test]
    fn rank_deficient_target_outside_span() {
        let f = PrimeField::new(5).unwrap();
        let rows = m(&f, &[&[1, 0], &[1, 0]]);
        let rep = gaussian_solve(&f, &rows, &m(&f, &[&[0, 1], &[3, 0]]));
        assert_eq!(rep.rank, 1);
        assert!(rep.solutions[0].is_none());
        let c = rep.solutions[1].as_ref().unwrap();
        assert_eq!(combine(&f, c, &rows), m(&f, &[&[3, 0]])[0]);
    }

    #[test]
    fn empty_inputs() {
        let f = PrimeField::new(7).unwrap();
        let rep = gaussian_solve(&f, &[], &[]);
        assert_eq!(rep.rank, 0);
        assert!(rep.solutions.is_empty());
        assert_eq!(rank(&f, &[]), 0);
    }

    #[test]
    fn reported_combination_reproduces_target() {
        for q in [5u64, 11] {
            let f = PrimeField::new(q).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(q);
            for _ in 0..200 {
                let nrows = rng.random_range(1..7);
                let ncols = rng.random_range(1..7);
                let rows: Vec<Vec<Fe>> = (0..nrows)
                    .map(|_| (0..ncols).map(|_| f.random(&mut rng)).collect())
                    .collect();
                // one target inside the span, one random
                let coeffs: Vec<Fe> = (0..nrows).map(|_| f.random(&mut rng)).collect();
                let inside = combine(&f, &coeffs, &rows);
                let random: Vec<Fe> = (0..ncols).map(|_| f.random(&mut rng)).collect();
                let rep = gaussian_solve(&f, &rows, &[inside.clone(), random.clone()]);
                let c = rep.solutions[0].as_ref().expect("constructed inside span");
                assert_eq!(combine(&f, c, &rows), inside);
                if let Some(c) = &rep.solutions[1] {
                    assert_eq!(combine(&f, c, &rows), random);
                } else {
                    assert!(rep.rank < ncols);
                }
            }
        }
    }

    #[test]
    fn null_space_is_annihilated() {
        let f = PrimeField::new(7).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..100 {
            let nrows = rng.random_range(0..5);
            let ncols = rng.random_range(1..6);
            let rows: Vec<Vec<Fe>> = (0..nrows)
                .map(|_| (0..ncols).map(|_| f.random(&mut rng)).collect())
                .collect();
            let ns = null_space(&f, &rows, ncols);
            assert_eq!(ns.len() + rank(&f, &rows), ncols);
            assert_eq!(rank(&f, &ns), ns.len());
            for v in &ns {
                for r in &rows {
                    assert!(f.dot(r, v).is_zero());
                }
            }
        }
    }

    #[test]
    fn insert_reports_rank_increase() {
        let f = PrimeField::new(3).unwrap();
        let mut s = RowSpace::new(f, 3);
        let rows = m(&f, &[&[1, 1, 0], &[2, 2, 0], &[0, 1, 1], &[1, 2, 1], &[0, 0, 1]]);
        let added: Vec<bool> = rows.iter().map(|r| s.insert(r)).collect();
        assert_eq!(added, vec![true, false, true, false, true]);
        assert_eq!(s.rank(), 3);
        assert!(s.contains(&m(&f, &[&[2, 0, 1]])[0]));
    }
}
