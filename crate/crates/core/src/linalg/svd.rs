//! Largest singular value by one-sided (Hestenes) Jacobi.

use super::Matrix;

const MAX_SWEEPS: usize = 60;

pub(crate) fn largest_singular_value(a: &Matrix) -> f64 {
    let scale = a.max_abs();
    if scale == 0.0 {
        return 0.0;
    }
    let live_rows: Vec<usize> = (0..a.rows())
        .filter(|&i| a.row(i).iter().any(|&x| x != 0.0))
        .collect();
    let live_cols: Vec<usize> = (0..a.cols())
        .filter(|&j| live_rows.iter().any(|&i| a.get(i, j) != 0.0))
        .collect();

    // Orthogonalize the shorter side: `vecs` holds the columns of either the
    // compacted matrix or its transpose, whichever has fewer of them.
    let mut vecs: Vec<Vec<f64>> = if live_cols.len() <= live_rows.len() {
        live_cols
            .iter()
            .map(|&j| live_rows.iter().map(|&i| a.get(i, j) / scale).collect())
            .collect()
    } else {
        live_rows
            .iter()
            .map(|&i| live_cols.iter().map(|&j| a.get(i, j) / scale).collect())
            .collect()
    };

    if vecs.len() == 1 {
        return scale * norm2(&vecs[0]);
    }

    for _ in 0..MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..vecs.len() - 1 {
            for q in p + 1..vecs.len() {
                let (alpha, beta, gamma) = {
                    let (vp, vq) = (&vecs[p], &vecs[q]);
                    (dot(vp, vp), dot(vq, vq), dot(vp, vq))
                };
                if gamma == 0.0 || gamma.abs() <= f64::EPSILON * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                let (head, tail) = vecs.split_at_mut(q);
                for (x, y) in head[p].iter_mut().zip(tail[0].iter_mut()) {
                    let (xp, xq) = (*x, *y);
                    *x = c * xp - s * xq;
                    *y = s * xp + c * xq;
                }
            }
        }
        if !rotated {
            break;
        }
    }
    scale * vecs.iter().map(|v| norm2(v)).fold(0.0, f64::max)
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm2(v: &[f64]) -> f64 {
    dot(v, v).sqrt()
}
