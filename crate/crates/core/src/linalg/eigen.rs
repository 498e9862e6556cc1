//! Eigenvalues of a real square matrix.
//!
//! Pipeline: permutation balancing (isolates eigenvalues sitting on rows or
//! columns that are zero off the diagonal), radix-2 scaling, Householder
//! reduction to upper Hessenberg form, then Francis double-shift QR reading
//! eigenvalues off the 1x1 and 2x2 diagonal blocks.
//!
//! The permutation step matters for lifted products: their zero block rows
//! are isolated exactly, so nilpotent parts report exact zeros instead of
//! O(sqrt(eps)) noise from perturbed Jordan blocks.

use super::Matrix;
use crate::error::{Error, Result};

/// Sweep cap per unit of active dimension.
const SWEEPS_PER_DIM: usize = 100;

pub(crate) fn spectral_radius(a: &Matrix) -> Result<f64> {
    let eig = eigenvalues(a)?;
    Ok(eig.iter().fold(0.0, |m, &(re, im)| m.max(re.hypot(im))))
}

/// All eigenvalues as `(re, im)` pairs, in no particular order.
pub fn eigenvalues(a: &Matrix) -> Result<Vec<(f64, f64)>> {
    let n = a.rows();
    if n != a.cols() {
        return Err(Error::DimensionMismatch(format!(
            "eigenvalues need a square matrix, got {}x{}",
            n,
            a.cols()
        )));
    }
    let mut w = a.as_slice().to_vec();
    let (low, high) = isolate(&mut w, n);

    let mut out: Vec<(f64, f64)> = (0..low)
        .chain(high + 1..n)
        .map(|i| (w[i * n + i], 0.0))
        .collect();

    if low <= high {
        let m = high - low + 1;
        let mut b = Vec::with_capacity(m * m);
        for i in low..=high {
            b.extend_from_slice(&w[i * n + low..=i * n + high]);
        }
        scale(&mut b, m);
        hessenberg(&mut b, m);
        match hqr(&mut b, m) {
            Ok(eig) => out.extend(eig),
            Err(Partial {
                converged,
                iterations,
            }) => {
                out.extend(converged);
                let partial = out
                    .iter()
                    .fold(0.0, |acc: f64, &(re, im)| acc.max(re.hypot(im)));
                return Err(Error::NoConvergence {
                    iterations,
                    partial,
                });
            }
        }
    }
    Ok(out)
}

fn swap_index(a: &mut [f64], n: usize, p: usize, q: usize) {
    if p == q {
        return;
    }
    for j in 0..n {
        a.swap(p * n + j, q * n + j);
    }
    for i in 0..n {
        a.swap(i * n + p, i * n + q);
    }
}

/// Symmetric permutations pushing isolated rows to the bottom and isolated
/// columns to the top. Returns the inclusive active window `[low, high]`;
/// `low > high` means every eigenvalue was isolated.
fn isolate(a: &mut [f64], n: usize) -> (usize, usize) {
    let mut low = 0usize;
    let mut high = n - 1;

    'rows: loop {
        for j in (0..=high).rev() {
            let isolated = (0..=high).all(|i| i == j || a[j * n + i] == 0.0);
            if isolated {
                swap_index(a, n, j, high);
                if high == 0 {
                    return (1, 0);
                }
                high -= 1;
                continue 'rows;
            }
        }
        break;
    }

    'cols: loop {
        for j in low..=high {
            let isolated = (low..=high).all(|i| i == j || a[i * n + j] == 0.0);
            if isolated {
                swap_index(a, n, j, low);
                low += 1;
                if low > high {
                    return (low, high);
                }
                continue 'cols;
            }
        }
        break;
    }
    (low, high)
}

/// Radix-2 diagonal similarity equalizing row and column norms. Exact in
/// floating point since only powers of two are applied.
fn scale(a: &mut [f64], n: usize) {
    const RADIX: f64 = 2.0;
    const RADIX2: f64 = RADIX * RADIX;
    for _ in 0..64 {
        let mut changed = false;
        for i in 0..n {
            let mut c = 0.0;
            let mut r = 0.0;
            for j in 0..n {
                if j != i {
                    c += a[j * n + i].abs();
                    r += a[i * n + j].abs();
                }
            }
            if c == 0.0 || r == 0.0 {
                continue;
            }
            let s = c + r;
            let mut f = 1.0;
            let mut g = r / RADIX;
            while c < g {
                f *= RADIX;
                c *= RADIX2;
            }
            g = r * RADIX;
            while c >= g {
                f /= RADIX;
                c /= RADIX2;
            }
            if (c + r) / f < 0.95 * s {
                changed = true;
                for j in 0..n {
                    a[i * n + j] /= f;
                    a[j * n + i] *= f;
                }
            }
        }
        if !changed {
            break;
        }
    }
}

/// Householder reduction to upper Hessenberg form, in place.
fn hessenberg(h: &mut [f64], n: usize) {
    if n < 3 {
        return;
    }
    let mut ort = vec![0.0; n];
    for m in 1..n - 1 {
        let scale: f64 = (m..n).map(|i| h[i * n + m - 1].abs()).sum();
        if scale == 0.0 {
            continue;
        }
        let mut hh = 0.0;
        for i in (m..n).rev() {
            ort[i] = h[i * n + m - 1] / scale;
            hh += ort[i] * ort[i];
        }
        let mut g = hh.sqrt();
        if ort[m] > 0.0 {
            g = -g;
        }
        hh -= ort[m] * g;
        ort[m] -= g;

        for j in m..n {
            let f = (m..n).rev().map(|i| ort[i] * h[i * n + j]).sum::<f64>() / hh;
            for i in m..n {
                h[i * n + j] -= f * ort[i];
            }
        }
        for i in 0..n {
            let f = (m..n).rev().map(|j| ort[j] * h[i * n + j]).sum::<f64>() / hh;
            for j in m..n {
                h[i * n + j] -= f * ort[j];
            }
        }
        h[m * n + m - 1] = scale * g;
        for i in m + 1..n {
            h[i * n + m - 1] = 0.0;
        }
    }
}

struct Partial {
    converged: Vec<(f64, f64)>,
    iterations: usize,
}

/// Francis double-shift QR on an upper Hessenberg matrix.
fn hqr(a: &mut [f64], n: usize) -> std::result::Result<Vec<(f64, f64)>, Partial> {
    let at = |i: isize, j: isize| (i as usize) * n + j as usize;
    let eps = f64::EPSILON;
    let cap = SWEEPS_PER_DIM * n;

    let mut anorm = 0.0;
    for i in 0..n {
        for j in i.saturating_sub(1)..n {
            anorm += a[i * n + j].abs();
        }
    }

    let mut out = vec![(0.0, 0.0); n];
    let mut done = vec![false; n];
    let mut nn = n as isize - 1;
    let mut t = 0.0;
    let mut total = 0usize;

    while nn >= 0 {
        let mut its = 0usize;
        loop {
            // look for a single small subdiagonal element
            let mut l = nn;
            while l > 0 {
                let mut s = a[at(l - 1, l - 1)].abs() + a[at(l, l)].abs();
                if s == 0.0 {
                    s = anorm;
                }
                if a[at(l, l - 1)].abs() <= eps * s {
                    a[at(l, l - 1)] = 0.0;
                    break;
                }
                l -= 1;
            }

            let mut x = a[at(nn, nn)];
            if l == nn {
                out[nn as usize] = (x + t, 0.0);
                done[nn as usize] = true;
                nn -= 1;
            } else {
                let mut y = a[at(nn - 1, nn - 1)];
                let mut w = a[at(nn, nn - 1)] * a[at(nn - 1, nn)];
                if l == nn - 1 {
                    let p = 0.5 * (y - x);
                    let q = p * p + w;
                    let mut z = q.abs().sqrt();
                    x += t;
                    let (i1, i0) = (nn as usize, nn as usize - 1);
                    if q >= 0.0 {
                        z = p + z.copysign(p);
                        out[i0] = (x + z, 0.0);
                        out[i1] = (x + z, 0.0);
                        if z != 0.0 {
                            out[i1] = (x - w / z, 0.0);
                        }
                    } else {
                        out[i1] = (x + p, -z);
                        out[i0] = (x + p, z);
                    }
                    done[i0] = true;
                    done[i1] = true;
                    nn -= 2;
                } else {
                    if total >= cap {
                        let converged = (0..n).filter(|&i| done[i]).map(|i| out[i]).collect();
                        return Err(Partial {
                            converged,
                            iterations: total,
                        });
                    }
                    if its > 0 && its % 10 == 0 {
                        // exceptional shift
                        t += x;
                        for i in 0..=nn {
                            a[at(i, i)] -= x;
                        }
                        let s = a[at(nn, nn - 1)].abs() + a[at(nn - 1, nn - 2)].abs();
                        x = 0.75 * s;
                        y = x;
                        w = -0.4375 * s * s;
                    }
                    its += 1;
                    total += 1;

                    // look for two consecutive small subdiagonal elements
                    let (mut p, mut q, mut r);
                    let mut m = nn - 2;
                    loop {
                        let z = a[at(m, m)];
                        r = x - z;
                        let s = y - z;
                        p = (r * s - w) / a[at(m + 1, m)] + a[at(m, m + 1)];
                        q = a[at(m + 1, m + 1)] - z - r - s;
                        r = a[at(m + 2, m + 1)];
                        let s = p.abs() + q.abs() + r.abs();
                        p /= s;
                        q /= s;
                        r /= s;
                        if m == l {
                            break;
                        }
                        let u = a[at(m, m - 1)].abs() * (q.abs() + r.abs());
                        let v = p.abs()
                            * (a[at(m - 1, m - 1)].abs() + z.abs() + a[at(m + 1, m + 1)].abs());
                        if u <= eps * v {
                            break;
                        }
                        m -= 1;
                    }

                    for i in m..nn - 1 {
                        a[at(i + 2, i)] = 0.0;
                        if i != m {
                            a[at(i + 2, i - 1)] = 0.0;
                        }
                    }

                    // double QR step on rows l..nn and columns m..nn
                    for k in m..nn {
                        if k != m {
                            p = a[at(k, k - 1)];
                            q = a[at(k + 1, k - 1)];
                            r = if k + 1 != nn {
                                a[at(k + 2, k - 1)]
                            } else {
                                0.0
                            };
                            x = p.abs() + q.abs() + r.abs();
                            if x != 0.0 {
                                p /= x;
                                q /= x;
                                r /= x;
                            }
                        }
                        let s = (p * p + q * q + r * r).sqrt().copysign(p);
                        if s == 0.0 {
                            continue;
                        }
                        if k == m {
                            if l != m {
                                a[at(k, k - 1)] = -a[at(k, k - 1)];
                            }
                        } else {
                            a[at(k, k - 1)] = -s * x;
                        }
                        p += s;
                        x = p / s;
                        y = q / s;
                        let z = r / s;
                        q /= p;
                        r /= p;
                        for j in k..=nn {
                            let mut pp = a[at(k, j)] + q * a[at(k + 1, j)];
                            if k + 1 != nn {
                                pp += r * a[at(k + 2, j)];
                                a[at(k + 2, j)] -= pp * z;
                            }
                            a[at(k + 1, j)] -= pp * y;
                            a[at(k, j)] -= pp * x;
                        }
                        let mmin = if nn < k + 3 { nn } else { k + 3 };
                        for i in l..=mmin {
                            let mut pp = x * a[at(i, k)] + y * a[at(i, k + 1)];
                            if k + 1 != nn {
                                pp += z * a[at(i, k + 2)];
                                a[at(i, k + 2)] -= pp * r;
                            }
                            a[at(i, k + 1)] -= pp * q;
                            a[at(i, k)] -= pp;
                        }
                    }
                }
            }
            if l >= nn - 1 {
                break;
            }
        }
    }
    Ok(out)
}
