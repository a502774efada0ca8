//! Polynomial roots as eigenvalues of a balanced companion matrix, computed
//! with the Francis double-shift QR iteration on the upper Hessenberg form.

use num_complex::Complex64;

use crate::error::{Error, Result};

const MAX_ITERATIONS_PER_EIGENVALUE: usize = 100;
const RADIX: f64 = 2.0;

/// All complex roots of `Σ coeffs[k] zᵏ`. The leading coefficient must be
/// nonzero; the order of the returned roots is unspecified.
pub fn polynomial_roots(coeffs: &[f64]) -> Result<Vec<Complex64>> {
    let d = coeffs.len().saturating_sub(1);
    let lead = *coeffs.last().ok_or(Error::DegeneratePolynomial)?;
    if lead == 0.0 {
        return Err(Error::DegeneratePolynomial);
    }
    if d == 0 {
        return Ok(Vec::new());
    }
    // First row holds -p_{d-1}, ..., -p_0 of the monic polynomial.
    let mut a = vec![0.0; d * d];
    for j in 0..d {
        a[j] = -coeffs[d - 1 - j] / lead;
    }
    for i in 1..d {
        a[i * d + i - 1] = 1.0;
    }
    balance(&mut a, d);
    hessenberg_eigenvalues(&mut a, d)
}

/// Diagonal similarity scaling by powers of the radix so that row and column
/// norms are comparable; keeps the zero pattern.
fn balance(a: &mut [f64], n: usize) {
    let sqrdx = RADIX * RADIX;
    loop {
        let mut done = true;
        for i in 0..n {
            let (mut r, mut c) = (0.0, 0.0);
            for j in (0..n).filter(|&j| j != i) {
                c += a[j * n + i].abs();
                r += a[i * n + j].abs();
            }
            if c == 0.0 || r == 0.0 {
                continue;
            }
            let s = c + r;
            let mut f = 1.0;
            let mut g = r / RADIX;
            while c < g {
                f *= RADIX;
                c *= sqrdx;
            }
            g = r * RADIX;
            while c > g {
                f /= RADIX;
                c /= sqrdx;
            }
            if (c + r) / f < 0.95 * s {
                done = false;
                let g = 1.0 / f;
                for j in 0..n {
                    a[i * n + j] *= g;
                }
                for j in 0..n {
                    a[j * n + i] *= f;
                }
            }
        }
        if done {
            break;
        }
    }
}

/// Eigenvalues of an upper Hessenberg matrix (row-major, destroyed).
pub(crate) fn hessenberg_eigenvalues(h: &mut [f64], n: usize) -> Result<Vec<Complex64>> {
    let idx = |i: isize, j: isize| i as usize * n + j as usize;
    let mut out = vec![Complex64::new(0.0, 0.0); n];
    let mut anorm = 0.0;
    for i in 0..n {
        for j in i.saturating_sub(1)..n {
            anorm += h[i * n + j].abs();
        }
    }
    let mut nn = n as isize - 1;
    let mut t = 0.0;
    while nn >= 0 {
        let mut its = 0;
        loop {
            let mut l = nn;
            while l >= 1 {
                let mut s = h[idx(l - 1, l - 1)].abs() + h[idx(l, l)].abs();
                if s == 0.0 {
                    s = anorm;
                }
                if h[idx(l, l - 1)].abs() <= f64::EPSILON * s {
                    h[idx(l, l - 1)] = 0.0;
                    break;
                }
                l -= 1;
            }
            let mut x = h[idx(nn, nn)];
            if l == nn {
                out[nn as usize] = Complex64::new(x + t, 0.0);
                nn -= 1;
                break;
            }
            let mut y = h[idx(nn - 1, nn - 1)];
            let mut w = h[idx(nn, nn - 1)] * h[idx(nn - 1, nn)];
            if l == nn - 1 {
                let p = 0.5 * (y - x);
                let q = p * p + w;
                let z = q.abs().sqrt();
                x += t;
                if q >= 0.0 {
                    let z = p + z.copysign(p);
                    let lo = if z != 0.0 { x - w / z } else { x + z };
                    out[nn as usize - 1] = Complex64::new(x + z, 0.0);
                    out[nn as usize] = Complex64::new(lo, 0.0);
                } else {
                    out[nn as usize - 1] = Complex64::new(x + p, -z);
                    out[nn as usize] = Complex64::new(x + p, z);
                }
                nn -= 2;
                break;
            }
            if its >= MAX_ITERATIONS_PER_EIGENVALUE {
                return Err(Error::NoConvergence { iterations: its });
            }
            if its > 0 && its % 10 == 0 {
                // Exceptional shift to break cycles.
                t += x;
                for i in 0..=nn {
                    h[idx(i, i)] -= x;
                }
                let s = h[idx(nn, nn - 1)].abs() + h[idx(nn - 1, nn - 2)].abs();
                x = 0.75 * s;
                y = x;
                w = -0.4375 * s * s;
            }
            its += 1;

            let (mut p, mut q, mut r);
            let mut m = nn - 2;
            loop {
                let z = h[idx(m, m)];
                let rr = x - z;
                let ss = y - z;
                p = (rr * ss - w) / h[idx(m + 1, m)] + h[idx(m, m + 1)];
                q = h[idx(m + 1, m + 1)] - z - rr - ss;
                r = h[idx(m + 2, m + 1)];
                let s = p.abs() + q.abs() + r.abs();
                p /= s;
                q /= s;
                r /= s;
                if m == l {
                    break;
                }
                let u = h[idx(m, m - 1)].abs() * (q.abs() + r.abs());
                let v = p.abs() * (h[idx(m - 1, m - 1)].abs() + z.abs() + h[idx(m + 1, m + 1)].abs());
                if u <= f64::EPSILON * v {
                    break;
                }
                m -= 1;
            }
            for i in m + 2..=nn {
                h[idx(i, i - 2)] = 0.0;
                if i != m + 2 {
                    h[idx(i, i - 3)] = 0.0;
                }
            }
            let mut k = m;
            while k < nn {
                if k != m {
                    p = h[idx(k, k - 1)];
                    q = h[idx(k + 1, k - 1)];
                    r = if k + 1 != nn { h[idx(k + 2, k - 1)] } else { 0.0 };
                    x = p.abs() + q.abs() + r.abs();
                    if x != 0.0 {
                        p /= x;
                        q /= x;
                        r /= x;
                    }
                }
                let s = (p * p + q * q + r * r).sqrt().copysign(p);
                if s != 0.0 {
                    if k == m {
                        if l != m {
                            h[idx(k, k - 1)] = -h[idx(k, k - 1)];
                        }
                    } else {
                        h[idx(k, k - 1)] = -s * x;
                    }
                    p += s;
                    x = p / s;
                    y = q / s;
                    let z = r / s;
                    q /= p;
                    r /= p;
                    for j in k..=nn {
                        let mut pp = h[idx(k, j)] + q * h[idx(k + 1, j)];
                        if k + 1 != nn {
                            pp += r * h[idx(k + 2, j)];
                            h[idx(k + 2, j)] -= pp * z;
                        }
                        h[idx(k + 1, j)] -= pp * y;
                        h[idx(k, j)] -= pp * x;
                    }
                    let mmin = if nn < k + 3 { nn } else { k + 3 };
                    for i in l..=mmin {
                        let mut pp = x * h[idx(i, k)] + y * h[idx(i, k + 1)];
                        if k + 1 != nn {
                            pp += z * h[idx(i, k + 2)];
                            h[idx(i, k + 2)] -= pp * r;
                        }
                        h[idx(i, k + 1)] -= pp * q;
                        h[idx(i, k)] -= pp;
                    }
                }
                k += 1;
            }
        }
    }
    Ok(out)
}
