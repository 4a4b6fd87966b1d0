//! Matrix exponential via scaling-and-squaring with a Pade(13) approximant,
//! after Higham, "The Scaling and Squaring Method for the Matrix Exponential
//! Revisited" (SIAM J. Matrix Anal. Appl. 26, 2005).

use ndarray::{s, Array2};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::operator::Operator;

/// exp(A) for an [`Operator`]. Errors on non-finite entries.
pub fn matrix_exponential(a: &Operator) -> Result<Operator> {
    if !a.is_finite() {
        return Err(Error::Numeric("matrix exponential of non-finite entries".into()));
    }
    Operator::from_entries(a.space().clone(), expm_array(a.entries()))
}

/// exp(A) on a raw square array.
pub fn expm_array(a: &Array2<Complex64>) -> Array2<Complex64> {
    let n = a.nrows();
    assert_eq!(n, a.ncols(), "matrix exponential requires a square matrix");
    if n == 0 {
        return Array2::zeros((0, 0));
    }
    if n == 1 {
        return Array2::from_elem((1, 1), a[[0, 0]].exp());
    }

    // theta_13 from Higham, Table 10.2.
    let theta_13 = 5.371920351148152_f64;
    let norm = one_norm(a);
    let scaling = if norm > theta_13 {
        (norm / theta_13).log2().ceil() as u32
    } else {
        0
    };
    let scale = Complex64::new((0.5f64).powi(scaling as i32), 0.0);
    let scaled = a.mapv(|z| z * scale);
    let mut result = pade13(&scaled);
    for _ in 0..scaling {
        result = result.dot(&result);
    }
    result
}

const PADE13: [f64; 14] = [
    64764752532480000.0,
    32382376266240000.0,
    7771770303897600.0,
    1187353796428800.0,
    129060195264000.0,
    10559470521600.0,
    670442572800.0,
    33522128640.0,
    1323241920.0,
    40840800.0,
    960960.0,
    16380.0,
    182.0,
    1.0,
];

fn pade13(a: &Array2<Complex64>) -> Array2<Complex64> {
    let n = a.nrows();
    let c = |k: usize| Complex64::new(PADE13[k], 0.0);
    let eye = Array2::from_diag_elem(n, Complex64::new(1.0, 0.0));
    let a2 = a.dot(a);
    let a4 = a2.dot(&a2);
    let a6 = a2.dot(&a4);

    let w1 = &a6 * c(13) + &a4 * c(11) + &a2 * c(9);
    let w2 = a6.dot(&w1) + &a6 * c(7) + &a4 * c(5) + &a2 * c(3) + &eye * c(1);
    let u = a.dot(&w2);

    let v1 = &a6 * c(12) + &a4 * c(10) + &a2 * c(8);
    let v = a6.dot(&v1) + &a6 * c(6) + &a4 * c(4) + &a2 * c(2) + &eye * c(0);

    // exp(A) ~ (V - U)^{-1} (V + U)
    let numer = &v + &u;
    let denom = &v - &u;
    solve(denom, numer)
}

/// Solve A X = B by Gaussian elimination with partial pivoting.
fn solve(a: Array2<Complex64>, b: Array2<Complex64>) -> Array2<Complex64> {
    let n = a.nrows();
    let m = b.ncols();
    let mut aug = Array2::zeros((n, n + m));
    aug.slice_mut(s![.., ..n]).assign(&a);
    aug.slice_mut(s![.., n..]).assign(&b);

    for col in 0..n {
        let mut pivot_row = col;
        let mut pivot_mag = aug[[col, col]].norm();
        for row in col + 1..n {
            let mag = aug[[row, col]].norm();
            if mag > pivot_mag {
                pivot_mag = mag;
                pivot_row = row;
            }
        }
        if pivot_row != col {
            for j in 0..n + m {
                aug.swap([col, j], [pivot_row, j]);
            }
        }
        let pivot = aug[[col, col]];
        for row in col + 1..n {
            let factor = aug[[row, col]] / pivot;
            if factor.norm() == 0.0 {
                continue;
            }
            for j in col..n + m {
                let v = aug[[col, j]];
                aug[[row, j]] -= factor * v;
            }
        }
    }

    let mut x = Array2::<Complex64>::zeros((n, m));
    for col in (0..n).rev() {
        let pivot = aug[[col, col]];
        for j in 0..m {
            let mut sum = aug[[col, n + j]];
            for k in col + 1..n {
                sum -= aug[[col, k]] * x[[k, j]];
            }
            x[[col, j]] = sum / pivot;
        }
    }
    x
}

/// Maximum column sum of entry magnitudes.
fn one_norm(a: &Array2<Complex64>) -> f64 {
    let mut worst = 0.0f64;
    for col in a.columns() {
        worst = worst.max(col.iter().map(|z| z.norm()).sum());
    }
    worst
}
