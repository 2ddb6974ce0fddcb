//! Small dense two-phase simplex (Bland's rule).

use thiserror::Error;

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum LpError {
    #[error("infeasible")]
    Infeasible,
    #[error("unbounded")]
    Unbounded,
    #[error("iteration limit reached")]
    IterationLimit,
}

/// maximize c.x subject to rows a.x <= b and per-variable bounds.
#[derive(Clone, Debug)]
pub struct LinearProgram {
    objective: Vec<f64>,
    rows: Vec<(Vec<f64>, f64)>,
    bounds: Vec<(f64, f64)>,
}

#[derive(Clone, Debug)]
pub struct LpSolution {
    pub x: Vec<f64>,
    pub objective: f64,
}

const PIVOT_EPS: f64 = 1e-11;
const MAX_ITERS: usize = 100_000;

impl LinearProgram {
    /// `num_vars` free variables and a zero objective.
    pub fn new(num_vars: usize) -> Self {
        LinearProgram {
            objective: vec![0.0; num_vars],
            rows: Vec::new(),
            bounds: vec![(f64::NEG_INFINITY, f64::INFINITY); num_vars],
        }
    }

    pub fn num_vars(&self) -> usize {
        self.objective.len()
    }

    pub fn set_objective(&mut self, c: Vec<f64>) {
        assert_eq!(c.len(), self.num_vars());
        self.objective = c;
    }

    pub fn le(&mut self, a: Vec<f64>, b: f64) {
        assert_eq!(a.len(), self.num_vars());
        self.rows.push((a, b));
    }

    pub fn ge(&mut self, a: Vec<f64>, b: f64) {
        self.le(a.into_iter().map(|v| -v).collect(), -b);
    }

    pub fn bound(&mut self, var: usize, lo: f64, hi: f64) {
        self.bounds[var] = (lo, hi);
    }

    pub fn maximize(&self) -> Result<LpSolution, LpError> {
        // x_j = shift + sign * y_pos - y_neg
        struct VarMap {
            shift: f64,
            sign: f64,
            pos: usize,
            neg: Option<usize>,
        }
        let mut maps = Vec::with_capacity(self.num_vars());
        let mut ny = 0;
        let mut extra_rows: Vec<(usize, f64)> = Vec::new();
        for &(lo, hi) in &self.bounds {
            if lo.is_finite() {
                maps.push(VarMap { shift: lo, sign: 1.0, pos: ny, neg: None });
                if hi.is_finite() {
                    extra_rows.push((ny, hi - lo));
                }
                ny += 1;
            } else if hi.is_finite() {
                maps.push(VarMap { shift: hi, sign: -1.0, pos: ny, neg: None });
                ny += 1;
            } else {
                maps.push(VarMap { shift: 0.0, sign: 1.0, pos: ny, neg: Some(ny + 1) });
                ny += 2;
            }
        }
        let mut a_rows: Vec<(Vec<f64>, f64)> = Vec::new();
        for (a, b) in &self.rows {
            let mut row = vec![0.0; ny];
            let mut rhs = *b;
            for (j, m) in maps.iter().enumerate() {
                rhs -= a[j] * m.shift;
                row[m.pos] += a[j] * m.sign;
                if let Some(q) = m.neg {
                    row[q] -= a[j];
                }
            }
            a_rows.push((row, rhs));
        }
        for (y, cap) in extra_rows {
            let mut row = vec![0.0; ny];
            row[y] = 1.0;
            a_rows.push((row, cap));
        }
        let mut cost = vec![0.0; ny];
        let mut c0 = 0.0;
        for (j, m) in maps.iter().enumerate() {
            c0 += self.objective[j] * m.shift;
            cost[m.pos] += self.objective[j] * m.sign;
            if let Some(q) = m.neg {
                cost[q] -= self.objective[j];
            }
        }

        let y = Tableau::solve(&a_rows, &cost, ny)?;
        let x: Vec<f64> = maps
            .iter()
            .map(|m| m.shift + m.sign * y[m.pos] - m.neg.map_or(0.0, |q| y[q]))
            .collect();
        let objective = c0 + cost.iter().zip(&y).map(|(c, v)| c * v).sum::<f64>();
        Ok(LpSolution { x, objective })
    }
}

struct Tableau {
    t: Vec<Vec<f64>>,
    basis: Vec<usize>,
    ncols: usize,
}

impl Tableau {
    /// maximize cost.y s.t. rows, y >= 0. Returns y.
    fn solve(rows: &[(Vec<f64>, f64)], cost: &[f64], ny: usize) -> Result<Vec<f64>, LpError> {
        let m = rows.len();
        let n_art = rows.iter().filter(|(_, b)| *b < 0.0).count();
        let ncols = ny + m + n_art;
        let mut t = vec![vec![0.0; ncols + 1]; m];
        let mut basis = vec![0; m];
        let mut art = ny + m;
        for (i, (a, b)) in rows.iter().enumerate() {
            let s = if *b < 0.0 { -1.0 } else { 1.0 };
            for j in 0..ny {
                t[i][j] = s * a[j];
            }
            t[i][ny + i] = s;
            t[i][ncols] = s * b;
            if *b < 0.0 {
                t[i][art] = 1.0;
                basis[i] = art;
                art += 1;
            } else {
                basis[i] = ny + i;
            }
        }
        let mut tab = Tableau { t, basis, ncols };
        let first_art = ny + m;
        if n_art > 0 {
            let mut c1 = vec![0.0; ncols];
            for c in c1.iter_mut().skip(first_art) {
                *c = -1.0;
            }
            tab.optimize(&c1, ncols)?;
            let infeas: f64 = (0..m)
                .filter(|&i| tab.basis[i] >= first_art)
                .map(|i| tab.t[i][ncols])
                .sum();
            let scale = rows.iter().map(|(_, b)| b.abs()).fold(1.0, f64::max);
            if infeas > 1e-9 * scale {
                return Err(LpError::Infeasible);
            }
            // drive remaining artificials out of the basis
            let mut i = 0;
            while i < tab.t.len() {
                if tab.basis[i] >= first_art {
                    let pick = (0..first_art).find(|&j| tab.t[i][j].abs() > 1e-9);
                    match pick {
                        Some(j) => tab.pivot(i, j),
                        None => {
                            tab.t.remove(i);
                            tab.basis.remove(i);
                            continue;
                        }
                    }
                }
                i += 1;
            }
        }
        let mut c2 = vec![0.0; ncols];
        c2[..ny].copy_from_slice(cost);
        tab.optimize(&c2, first_art)?;
        let mut y = vec![0.0; ny];
        for (i, &bv) in tab.basis.iter().enumerate() {
            if bv < ny {
                y[bv] = tab.t[i][tab.ncols];
            }
        }
        Ok(y)
    }

    /// Primal simplex from the current feasible basis; columns >= `allowed` never enter.
    fn optimize(&mut self, cost: &[f64], allowed: usize) -> Result<(), LpError> {
        let rhs = self.ncols;
        for _ in 0..MAX_ITERS {
            let mut entering = None;
            for j in 0..allowed {
                if self.basis.contains(&j) {
                    continue;
                }
                let mut d = cost[j];
                for (i, &bv) in self.basis.iter().enumerate() {
                    d -= cost[bv] * self.t[i][j];
                }
                if d > 1e-10 {
                    entering = Some(j);
                    break;
                }
            }
            let Some(j) = entering else {
                return Ok(());
            };
            let mut leave: Option<(usize, f64)> = None;
            for i in 0..self.t.len() {
                let a = self.t[i][j];
                if a > PIVOT_EPS {
                    let ratio = self.t[i][rhs] / a;
                    leave = match leave {
                        None => Some((i, ratio)),
                        Some((k, r)) => {
                            if ratio < r - 1e-12 || (ratio <= r + 1e-12 && self.basis[i] < self.basis[k]) {
                                Some((i, ratio))
                            } else {
                                Some((k, r))
                            }
                        }
                    };
                }
            }
            let Some((i, _)) = leave else {
                return Err(LpError::Unbounded);
            };
            self.pivot(i, j);
        }
        Err(LpError::IterationLimit)
    }

    fn pivot(&mut self, r: usize, c: usize) {
        let p = self.t[r][c];
        for v in self.t[r].iter_mut() {
            *v /= p;
        }
        let pivot_row = self.t[r].clone();
        for (i, row) in self.t.iter_mut().enumerate() {
            if i == r {
                continue;
            }
            let f = row[c];
            if f != 0.0 {
                for (v, pv) in row.iter_mut().zip(&pivot_row) {
                    *v -= f * pv;
                }
                row[c] = 0.0;
            }
        }
        self.basis[r] = c;
    }
}
