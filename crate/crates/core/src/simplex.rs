//! Dense phase-1 simplex for equality-constrained feasibility problems,
//! with Bland's rule for anti-cycling. Small and deterministic; sized for
//! desk-scale transportation polytopes, not production LP work.

/// Pivot tolerance: entries smaller than this are treated as zero.
const PIVOT_TOL: f64 = 1e-11;

pub(crate) struct Phase1Outcome {
    /// Sum of artificial variables at optimum; feasible iff ~0.
    pub objective: f64,
    /// Values of the original variables at the final basic solution.
    pub solution: Vec<f64>,
    /// Simplex multipliers y at optimum. When the problem is infeasible they
    /// form a Farkas certificate: y.A <= 0 componentwise while y.b > 0.
    pub multipliers: Vec<f64>,
}

/// Minimizes the sum of artificial variables for the system
/// {A x = b, x >= 0}. Requires b >= 0 (flip row signs before calling).
pub(crate) fn phase_one(a: &[Vec<f64>], b: &[f64]) -> Phase1Outcome {
    let m = a.len();
    let n = if m == 0 { 0 } else { a[0].len() };
    debug_assert!(b.iter().all(|&v| v >= 0.0));
    let width = n + m + 1; // original | artificial | rhs
    let mut t = vec![vec![0.0f64; width]; m];
    for (i, row) in a.iter().enumerate() {
        t[i][..n].copy_from_slice(row);
        t[i][n + i] = 1.0;
        t[i][width - 1] = b[i];
    }
    // basis starts as the artificials; phase-1 cost is 1 on each of them
    let mut basis: Vec<usize> = (n..n + m).collect();
    // reduced-cost row r_j = c_j - sum_i t[i][j] (c_B = 1 on artificials)
    let mut r = vec![0.0f64; width];
    for j in 0..width {
        let col_sum: f64 = t.iter().map(|row| row[j]).sum();
        let c_j = if (n..n + m).contains(&j) { 1.0 } else { 0.0 };
        r[j] = c_j - col_sum;
    }
    // r[width-1] currently holds -objective

    loop {
        // Bland: entering variable = smallest index with negative reduced cost
        let mut entering = None;
        for (j, &rj) in r.iter().enumerate().take(n + m) {
            if rj < -PIVOT_TOL {
                entering = Some(j);
                break;
            }
        }
        let Some(e) = entering else { break };
        // ratio test, ties broken by smallest basis variable (Bland)
        let mut leaving: Option<(usize, f64)> = None;
        for i in 0..m {
            if t[i][e] > PIVOT_TOL {
                let ratio = t[i][width - 1] / t[i][e];
                match leaving {
                    None => leaving = Some((i, ratio)),
                    Some((li, lr)) => {
                        if ratio < lr - PIVOT_TOL
                            || ((ratio - lr).abs() <= PIVOT_TOL && basis[i] < basis[li])
                        {
                            leaving = Some((i, ratio));
                        }
                    }
                }
            }
        }
        let Some((pivot_row, _)) = leaving else {
            // unbounded phase-1 cannot happen (objective bounded below by 0);
            // numerically treat as stalled
            break;
        };
        // pivot
        let pv = t[pivot_row][e];
        for j in 0..width {
            t[pivot_row][j] /= pv;
        }
        for i in 0..m {
            if i != pivot_row && t[i][e].abs() > 0.0 {
                let f = t[i][e];
                for j in 0..width {
                    t[i][j] -= f * t[pivot_row][j];
                }
            }
        }
        let f = r[e];
        if f.abs() > 0.0 {
            for j in 0..width {
                r[j] -= f * t[pivot_row][j];
            }
        }
        basis[pivot_row] = e;
    }

    let objective = -r[width - 1];
    let mut solution = vec![0.0f64; n];
    for (i, &bi) in basis.iter().enumerate() {
        if bi < n {
            solution[bi] = t[i][width - 1];
        }
    }
    // multipliers from the artificial columns: r_art_i = 1 - y_i
    let multipliers: Vec<f64> = (0..m).map(|i| 1.0 - r[n + i]).collect();
    Phase1Outcome {
        objective,
        solution,
        multipliers,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn finds_a_feasible_point() {
        // x1 + x2 = 1, x1 - x2 = 0  ->  x = (1/2, 1/2)
        let a = vec![vec![1.0, 1.0], vec![1.0, -1.0]];
        let b = vec![1.0, 0.0];
        let out = phase_one(&a, &b);
        assert!(out.objective <= 1e-12);
        assert!((out.solution[0] - 0.5).abs() <= 1e-12);
        assert!((out.solution[1] - 0.5).abs() <= 1e-12);
    }

    #[test]
    fn reports_infeasibility_with_farkas_certificate() {
        // x1 + x2 = 1, x1 + x2 = 2 is infeasible
        let a = vec![vec![1.0, 1.0], vec![1.0, 1.0]];
        let b = vec![1.0, 2.0];
        let out = phase_one(&a, &b);
        assert!(out.objective > 0.5);
        let y = &out.multipliers;
        // y.A <= 0 and y.b > 0
        for j in 0..2 {
            let dot: f64 = (0..2).map(|i| y[i] * a[i][j]).sum();
            assert!(dot <= 1e-9, "column {j} violates the certificate: {dot}");
        }
        let yb: f64 = y.iter().zip(&b).map(|(yi, bi)| yi * bi).sum();
        assert!(yb > 0.5);
    }

    #[test]
    fn handles_degenerate_rows() {
        // duplicated consistent constraints
        let a = vec![vec![1.0, 1.0], vec![1.0, 1.0], vec![0.0, 1.0]];
        let b = vec![1.0, 1.0, 0.25];
        let out = phase_one(&a, &b);
        assert!(out.objective <= 1e-12);
        assert!((out.solution[0] - 0.75).abs() <= 1e-12);
        assert!((out.solution[1] - 0.25).abs() <= 1e-12);
    }
}
