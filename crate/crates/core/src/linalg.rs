//! Small dense helpers shared by the geometry and SDE code.

use nalgebra::{DMatrix, DVector};

/// Modified Gram–Schmidt on the columns of `frame` in the inner product
/// `⟨u, v⟩ = uᵀ G v`. Columns that collapse below `1e-300` are left as-is.
pub fn gram_schmidt(frame: &DMatrix<f64>, gram: &DMatrix<f64>) -> DMatrix<f64> {
    let mut out = frame.clone();
    let cols = out.ncols();
    for j in 0..cols {
        for i in 0..j {
            let ui = out.column(i).into_owned();
            let uj = out.column(j).into_owned();
            let proj = ui.dot(&(gram * &uj));
            out.column_mut(j).axpy(-proj, &ui, 1.0);
        }
        let uj = out.column(j).into_owned();
        let norm = uj.dot(&(gram * &uj)).max(0.0).sqrt();
        if norm > 1e-300 {
            out.column_mut(j).scale_mut(1.0 / norm);
        }
    }
    out
}

/// `‖Uᵀ G U − I‖_∞` (largest absolute entry).
pub fn orthonormality_defect(frame: &DMatrix<f64>, gram: &DMatrix<f64>) -> f64 {
    let m = frame.transpose() * gram * frame;
    let mut worst = 0.0f64;
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            let target = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((m[(i, j)] - target).abs());
        }
    }
    worst
}

/// Eigenvalues of the symmetric pencil `S v = λ G v` (G positive definite),
/// sorted ascending.
pub fn pencil_eigenvalues(s: &DMatrix<f64>, gram: &DMatrix<f64>) -> Vec<f64> {
    let chol = nalgebra::Cholesky::new(gram.clone()).expect("metric must be positive definite");
    let l = chol.l();
    let l_inv = l.clone().try_inverse().expect("Cholesky factor is invertible");
    let mut reduced = &l_inv * s * l_inv.transpose();
    symmetrize(&mut reduced);
    let mut eig: Vec<f64> = reduced.symmetric_eigenvalues().iter().copied().collect();
    eig.sort_by(|a, b| a.total_cmp(b));
    eig
}

pub fn symmetrize(m: &mut DMatrix<f64>) {
    let n = m.nrows();
    for i in 0..n {
        for j in (i + 1)..n {
            let avg = 0.5 * (m[(i, j)] + m[(j, i)]);
            m[(i, j)] = avg;
            m[(j, i)] = avg;
        }
    }
}

pub fn max_abs_asymmetry(m: &DMatrix<f64>) -> f64 {
    let mut worst = 0.0f64;
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            worst = worst.max((m[(i, j)] - m[(j, i)]).abs());
        }
    }
    worst
}

pub fn unit(n: usize, i: usize) -> DVector<f64> {
    let mut v = DVector::zeros(n);
    v[i] = 1.0;
    v
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gram_schmidt_orthonormalizes_in_metric() {
        let g = DMatrix::from_row_slice(2, 2, &[2.0, 0.3, 0.3, 1.0]);
        let u = DMatrix::identity(2, 2);
        let out = gram_schmidt(&u, &g);
        assert!(orthonormality_defect(&out, &g) < 1e-14);
    }

    #[test]
    fn pencil_of_scaled_identity() {
        let g = DMatrix::identity(3, 3) * 4.0;
        let s = DMatrix::identity(3, 3) * -2.0;
        let eig = pencil_eigenvalues(&s, &g);
        for e in eig {
            assert!((e + 0.5).abs() < 1e-14);
        }
    }
}
