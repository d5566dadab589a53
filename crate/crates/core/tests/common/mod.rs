//! Independent oracles shared by the integration tests.

#![allow(dead_code)]

use giplab_core::Instance;

/// Solves the square system `M y = r` by Gaussian elimination with partial
/// pivoting; `None` when `M` is (numerically) singular.
fn solve_square(mut m: Vec<Vec<f64>>, mut r: Vec<f64>) -> Option<Vec<f64>> {
    let k = r.len();
    for col in 0..k {
        let piv = (col..k).max_by(|&a, &b| m[a][col].abs().total_cmp(&m[b][col].abs()))?;
        if m[piv][col].abs() < 1e-10 {
            return None;
        }
        m.swap(col, piv);
        r.swap(col, piv);
        for row in col + 1..k {
            let f = m[row][col] / m[col][col];
            for j in col..k {
                m[row][j] -= f * m[col][j];
            }
            r[row] -= f * r[col];
        }
    }
    let mut y = vec![0.0; k];
    for row in (0..k).rev() {
        let s: f64 = (row + 1..k).map(|j| m[row][j] * y[j]).sum();
        y[row] = (r[row] - s) / m[row][row];
    }
    Some(y)
}

fn subsets(n: usize, k: usize) -> Vec<Vec<usize>> {
    fn rec(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            cur.push(i);
            rec(i + 1, n, k, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(0, n, k, &mut Vec::new(), &mut out);
    out
}

/// LP optimum over `{Ax <= b, 0 <= x <= 1}` by enumerating basic solutions:
/// choose `r <= m` tight rows and `r` free variables, fix every other
/// variable at 0 or 1, and solve for the free ones. `None` if infeasible.
pub fn vertex_lp(inst: &Instance) -> Option<f64> {
    let (m, n) = (inst.m, inst.n);
    let a = |i: usize, j: usize| inst.a.get(i, j);
    let tol = 1e-9;
    let mut best: Option<f64> = None;
    for r in 0..=m.min(n) {
        for rows in subsets(m, r) {
            for free in subsets(n, r) {
                let fixed: Vec<usize> = (0..n).filter(|j| !free.contains(j)).collect();
                let mat: Vec<Vec<f64>> = rows
                    .iter()
                    .map(|&i| free.iter().map(|&j| a(i, j)).collect())
                    .collect();
                for mask in 0u64..(1u64 << fixed.len()) {
                    let mut x = vec![0.0; n];
                    for (bit, &j) in fixed.iter().enumerate() {
                        x[j] = ((mask >> bit) & 1) as f64;
                    }
                    let rhs: Vec<f64> = rows
                        .iter()
                        .map(|&i| inst.b[i] - fixed.iter().map(|&j| a(i, j) * x[j]).sum::<f64>())
                        .collect();
                    let Some(y) = solve_square(mat.clone(), rhs) else {
                        continue;
                    };
                    if y.iter().any(|v| *v < -tol || *v > 1.0 + tol) {
                        continue;
                    }
                    for (&j, v) in free.iter().zip(&y) {
                        x[j] = v.clamp(0.0, 1.0);
                    }
                    let feasible = (0..m).all(|i| {
                        let lhs: f64 = (0..n).map(|j| a(i, j) * x[j]).sum();
                        lhs <= inst.b[i] + 1e-9 * (1.0 + inst.b[i].abs())
                    });
                    if feasible {
                        let v = inst.objective(&x);
                        if best.is_none_or(|b| v > b) {
                            best = Some(v);
                        }
                    }
                }
            }
        }
    }
    best
}

/// `b^T u + sum (c - A^T u)^+ - c^T x`, written out term by term.
pub fn gap_definition(inst: &Instance, x: &[f64], u: &[f64]) -> f64 {
    let (m, n) = (inst.m, inst.n);
    let mut dual: f64 = (0..m).map(|i| inst.b[i] * u[i]).sum();
    for j in 0..n {
        let atu: f64 = (0..m).map(|i| inst.a.get(i, j) * u[i]).sum();
        dual += (inst.c[j] - atu).max(0.0);
    }
    dual - (0..n).map(|j| inst.c[j] * x[j]).sum::<f64>()
}

/// `(b - Ax)^T u + sum [x (A^T u - c)^+ + (1 - x)(c - A^T u)^+]`.
pub fn gap_expansion(inst: &Instance, x: &[f64], u: &[f64]) -> f64 {
    let (m, n) = (inst.m, inst.n);
    let mut total = 0.0;
    for i in 0..m {
        let ax: f64 = (0..n).map(|j| inst.a.get(i, j) * x[j]).sum();
        total += (inst.b[i] - ax) * u[i];
    }
    for j in 0..n {
        let atu: f64 = (0..m).map(|i| inst.a.get(i, j) * u[i]).sum();
        total += x[j] * (atu - inst.c[j]).max(0.0) + (1.0 - x[j]) * (inst.c[j] - atu).max(0.0);
    }
    total
}
