//! Brute-force references for the fast kernels: dense linear solves instead
//! of recursions and closed forms.

/// Solves `a x = b` by Gaussian elimination with partial pivoting.
/// Returns `None` for a (numerically) singular system.
#[allow(clippy::needless_range_loop)]
pub fn solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[piv][col].abs() < 1e-300 {
            return None;
        }
        a.swap(col, piv);
        b.swap(col, piv);
        for r in col + 1..n {
            let f = a[r][col] / a[col][col];
            for c in col..n {
                a[r][c] -= f * a[col][c];
            }
            b[r] -= f * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for r in (0..n).rev() {
        let s: f64 = (r + 1..n).map(|c| a[r][c] * x[c]).sum();
        x[r] = (b[r] - s) / a[r][r];
    }
    Some(x)
}

/// Partial autocorrelations at lags `0..=max_lag`, each taken as the last
/// coefficient of the order-k Yule-Walker system.
pub fn yule_walker_pacf(acv: &[f64], max_lag: usize) -> Option<Vec<f64>> {
    let mut out = vec![1.0];
    for k in 1..=max_lag {
        let a: Vec<Vec<f64>> = (0..k)
            .map(|i| (0..k).map(|j| acv[i.abs_diff(j)]).collect())
            .collect();
        let b: Vec<f64> = (1..=k).map(|i| acv[i]).collect();
        out.push(*solve(a, b)?.last()?);
    }
    Some(out)
}

/// Adjusted R^2 of `y ~ 1 + x`, fitted through the normal equations.
pub fn normal_equations_adjusted_r2(x: &[f64], y: &[f64]) -> Option<f64> {
    let n = x.len() as f64;
    let sx: f64 = x.iter().sum();
    let sxx: f64 = x.iter().map(|v| v * v).sum();
    let sy: f64 = y.iter().sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| a * b).sum();
    let beta = solve(vec![vec![n, sx], vec![sx, sxx]], vec![sy, sxy])?;
    let mean = sy / n;
    let ss_res: f64 = x
        .iter()
        .zip(y)
        .map(|(a, b)| (b - beta[0] - beta[1] * a).powi(2))
        .sum();
    let ss_tot: f64 = y.iter().map(|b| (b - mean).powi(2)).sum();
    let r2 = 1.0 - ss_res / ss_tot;
    Some(1.0 - (1.0 - r2) * (n - 1.0) / (n - 2.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solves_small_system() {
        let x = solve(vec![vec![0.0, 2.0], vec![3.0, 1.0]], vec![4.0, 5.0]).unwrap();
        assert!((x[0] - 1.0).abs() < 1e-15 && (x[1] - 2.0).abs() < 1e-15);
        assert!(solve(vec![vec![1.0, 2.0], vec![2.0, 4.0]], vec![1.0, 2.0]).is_none());
    }

    #[test]
    fn ar1_population_pacf() {
        let acv: Vec<f64> = (0..6).map(|k| 0.6f64.powi(k)).collect();
        let p = yule_walker_pacf(&acv, 5).unwrap();
        assert!((p[1] - 0.6).abs() < 1e-12);
        assert!(p[2..].iter().all(|v| v.abs() < 1e-12));
    }

    #[test]
    fn perfect_line() {
        let x = [1.0, 2.0, 3.0, 4.0];
        let y = [3.0, 5.0, 7.0, 9.0];
        assert!((normal_equations_adjusted_r2(&x, &y).unwrap() - 1.0).abs() < 1e-12);
    }
}
