//! Dense complex linear algebra for rank and null-space questions at
//! machine precision.

use num_complex::Complex64;

/// Rank by Gaussian elimination with a relative pivot threshold.
pub fn complex_rank(mut rows: Vec<Vec<Complex64>>, rel_tol: f64) -> usize {
    if rows.is_empty() {
        return 0;
    }
    let cols = rows[0].len();
    let scale = matrix_scale(&rows);
    let mut rank = 0;
    let mut col = 0;
    while rank < rows.len() && col < cols {
        let (pivot, best) = (rank..rows.len())
            .map(|r| (r, rows[r][col].norm()))
            .max_by(|a, b| a.1.partial_cmp(&b.1).unwrap())
            .unwrap();
        if best <= rel_tol * scale {
            col += 1;
            continue;
        }
        rows.swap(rank, pivot);
        let inv = Complex64::new(1.0, 0.0) / rows[rank][col];
        for r in rank + 1..rows.len() {
            let f = rows[r][col] * inv;
            if f.norm() == 0.0 {
                continue;
            }
            for c in col..cols {
                let sub = rows[rank][c] * f;
                rows[r][c] -= sub;
            }
        }
        rank += 1;
        col += 1;
    }
    rank
}

/// Basis of the solution space of `rows * x = 0`, each row one equation.
pub fn complex_null_space(rows: &[Vec<Complex64>], rel_tol: f64) -> Vec<Vec<Complex64>> {
    if rows.is_empty() {
        return Vec::new();
    }
    let cols = rows[0].len();
    let mut a: Vec<Vec<Complex64>> = rows.to_vec();
    let scale = matrix_scale(&a);
    let mut pivots: Vec<usize> = Vec::new();
    let mut r = 0usize;
    for col in 0..cols {
        if r >= a.len() {
            break;
        }
        let (pivot, best) = (r..a.len())
            .map(|i| (i, a[i][col].norm()))
            .max_by(|x, y| x.1.partial_cmp(&y.1).unwrap())
            .unwrap();
        if best <= rel_tol * scale {
            continue;
        }
        a.swap(r, pivot);
        let inv = Complex64::new(1.0, 0.0) / a[r][col];
        for c in col..cols {
            a[r][c] *= inv;
        }
        for i in 0..a.len() {
            if i == r || a[i][col].norm() == 0.0 {
                continue;
            }
            let f = a[i][col];
            for c in col..cols {
                let sub = a[r][c] * f;
                a[i][c] -= sub;
            }
        }
        pivots.push(col);
        r += 1;
    }
    let mut basis = Vec::new();
    for free in (0..cols).filter(|c| !pivots.contains(c)) {
        let mut x = vec![Complex64::new(0.0, 0.0); cols];
        x[free] = Complex64::new(1.0, 0.0);
        for (i, &p) in pivots.iter().enumerate() {
            x[p] = -a[i][free];
        }
        basis.push(x);
    }
    basis
}

fn matrix_scale(rows: &[Vec<Complex64>]) -> f64 {
    rows.iter()
        .flat_map(|r| r.iter())
        .map(|c| c.norm())
        .fold(0.0f64, f64::max)
        .max(1e-300)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(x: f64) -> Complex64 {
        Complex64::new(x, 0.0)
    }

    #[test]
    fn rank_of_dependent_rows() {
        let rows = vec![
            vec![c(1.0), c(2.0), c(3.0)],
            vec![c(2.0), c(4.0), c(6.0)],
            vec![c(0.0), c(1.0), c(1.0)],
        ];
        assert_eq!(complex_rank(rows, 1e-10), 2);
    }

    #[test]
    fn null_space_solves_the_system() {
        let rows = vec![vec![c(1.0), c(2.0), c(3.0)], vec![c(0.0), c(1.0), c(1.0)]];
        let basis = complex_null_space(&rows, 1e-10);
        assert_eq!(basis.len(), 1);
        for eq in &rows {
            let dot: Complex64 = eq.iter().zip(&basis[0]).map(|(a, b)| a * b).sum();
            assert!(dot.norm() < 1e-12);
        }
    }

    #[test]
    fn full_rank_has_empty_null_space() {
        let rows = vec![vec![c(1.0), c(0.0)], vec![c(1.0), c(1.0)]];
        assert_eq!(complex_rank(rows.clone(), 1e-10), 2);
        assert!(complex_null_space(&rows, 1e-10).is_empty());
    }
}
