//! Symmetric tridiagonal eigenvalues by implicit QL with Wilkinson-type shifts.
//!
//! Only the first row of the eigenvector matrix is accumulated, which is all
//! the spectral measure at `e₁` needs and keeps the cost at `O(K²)`.

use crate::error::{Error, Result};
use crate::lanczos::JacobiMatrix;

const MAX_ITERATIONS_PER_EIGENVALUE: usize = 60;

/// Eigenvalues of `j` in ascending order, each paired with the squared first
/// component of its unit eigenvector.
pub fn eigen_first_components(j: &JacobiMatrix) -> Result<Vec<(f64, f64)>> {
    let n = j.len();
    let mut d = j.diag().to_vec();
    let mut e = j.offdiag().to_vec();
    e.push(0.0);
    let mut z = vec![0.0; n];
    z[0] = 1.0;

    for l in 0..n {
        let mut iter = 0;
        loop {
            let mut m = l;
            while m + 1 < n {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= f64::EPSILON * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            if iter == MAX_ITERATIONS_PER_EIGENVALUE {
                return Err(Error::NoConvergence { iterations: iter });
            }
            iter += 1;
            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = g.hypot(1.0);
            g = d[m] - d[l] + e[l] / (g + r.copysign(g));
            let (mut s, mut c, mut p) = (1.0, 1.0, 0.0);
            let mut underflow = false;
            for i in (l..m).rev() {
                let f = s * e[i];
                let b = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == 0.0 {
                    d[i + 1] -= p;
                    e[m] = 0.0;
                    underflow = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + 2.0 * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
                let f = z[i + 1];
                z[i + 1] = s * z[i] + c * f;
                z[i] = c * z[i] - s * f;
            }
            if underflow {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = 0.0;
        }
    }
    let mut out: Vec<(f64, f64)> = d.into_iter().zip(z.into_iter().map(|x| x * x)).collect();
    out.sort_by(|a, b| a.0.total_cmp(&b.0));
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn one_by_one() {
        let j = JacobiMatrix::new(vec![2.5], vec![]).unwrap();
        assert_eq!(eigen_first_components(&j).unwrap(), vec![(2.5, 1.0)]);
    }

    #[test]
    fn two_by_two_closed_form() {
        // [[2, 1], [1, 2]] has eigenvalues 1, 3 with first components ±1/√2.
        let j = JacobiMatrix::new(vec![2.0, 2.0], vec![1.0]).unwrap();
        let ev = eigen_first_components(&j).unwrap();
        assert!((ev[0].0 - 1.0).abs() < 1e-15 && (ev[1].0 - 3.0).abs() < 1e-15);
        assert!((ev[0].1 - 0.5).abs() < 1e-15 && (ev[1].1 - 0.5).abs() < 1e-15);
    }

    fn cubic_roots(a: [f64; 3], b: [f64; 2]) -> [f64; 3] {
        // det(J - λ) = -(λ³ + p2 λ² + p1 λ + p0); trigonometric solution.
        let p2 = -(a[0] + a[1] + a[2]);
        let p1 = a[0] * a[1] + a[1] * a[2] + a[0] * a[2] - b[0] * b[0] - b[1] * b[1];
        let p0 = -(a[0] * a[1] * a[2] - a[0] * b[1] * b[1] - a[2] * b[0] * b[0]);
        let q = (3.0 * p1 - p2 * p2) / 9.0;
        let r = (9.0 * p2 * p1 - 27.0 * p0 - 2.0 * p2.powi(3)) / 54.0;
        let theta = (r / (-q).powi(3).sqrt()).acos();
        let mut out = [0.0; 3];
        for (k, o) in out.iter_mut().enumerate() {
            *o = 2.0 * (-q).sqrt() * ((theta + 2.0 * std::f64::consts::PI * k as f64) / 3.0).cos()
                - p2 / 3.0;
        }
        out.sort_by(|x, y| x.total_cmp(y));
        out
    }

    #[test]
    fn three_by_three_matches_cubic_formula() {
        for (a, b) in [
            ([1.0, 2.0, 3.0], [0.5, 0.7]),
            ([4.0, -1.0, 0.25], [2.0, 0.1]),
            ([0.0, 0.0, 0.0], [1.0, 1.0]),
        ] {
            let j = JacobiMatrix::new(a.to_vec(), b.to_vec()).unwrap();
            let ev = eigen_first_components(&j).unwrap();
            let want = cubic_roots(a, b);
            for (g, w) in ev.iter().zip(want) {
                assert!((g.0 - w).abs() < 1e-12, "{} vs {w}", g.0);
            }
            let mass: f64 = ev.iter().map(|x| x.1).sum();
            assert!((mass - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn free_jacobi_spectrum() {
        // a = 0, b = 1: eigenvalues 2cos(kπ/(n+1)), weights 2/(n+1) sin²(kπ/(n+1)).
        let n = 400;
        let j = JacobiMatrix::new(vec![0.0; n], vec![1.0; n - 1]).unwrap();
        let ev = eigen_first_components(&j).unwrap();
        for (k, (lam, w)) in ev.iter().rev().enumerate() {
            let th = (k + 1) as f64 * std::f64::consts::PI / (n + 1) as f64;
            assert!((lam - 2.0 * th.cos()).abs() < 1e-12);
            assert!((w - 2.0 / (n + 1) as f64 * th.sin().powi(2)).abs() < 1e-13);
        }
    }
}
