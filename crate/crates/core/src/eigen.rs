//! Dense real nonsymmetric eigensolver.
//!
//! Householder reduction to upper Hessenberg form followed by the implicit
//! double-shift QR iteration, with transformations accumulated so that
//! eigenvectors of the original matrix come out of a final back
//! substitution. This is the classic EISPACK `orthes`/`hqr2` pair in the
//! packed-real convention: a conjugate eigenvalue pair occupies two
//! consecutive columns of the vector matrix holding the real and imaginary
//! parts of one eigenvector.
//!
//! Transition matrices have entries in `[0, 1]`, so no balancing pass is
//! needed ahead of the reduction.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::{Error, Result};

/// Machine epsilon for f64.
const EPS: f64 = f64::EPSILON;

/// QR sweeps allowed per eigenvalue before giving up.
const MAX_ITER_PER_ROOT: u32 = 50;

/// Eigenvalues and eigenvectors of a real square matrix.
#[derive(Debug, Clone)]
pub struct EigenDecomposition {
    n: usize,
    /// Real parts of the eigenvalues.
    pub re: Vec<f64>,
    /// Imaginary parts of the eigenvalues; conjugate pairs are adjacent with
    /// the positive-imaginary member first.
    pub im: Vec<f64>,
    /// Packed eigenvector matrix, row-major.
    v: Vec<f64>,
}

/// Robust complex scalar division `(xr + i xi) / (yr + i yi)`.
fn cdiv(xr: f64, xi: f64, yr: f64, yi: f64) -> (f64, f64) {
    if yr.abs() > yi.abs() {
        let r = yi / yr;
        let d = yr + r * yi;
        ((xr + r * xi) / d, (xi - r * xr) / d)
    } else {
        let r = yr / yi;
        let d = yi + r * yr;
        ((r * xr + xi) / d, (r * xi - xr) / d)
    }
}

impl EigenDecomposition {
    /// Decomposes `a`, which must be square.
    pub fn new(a: &DMatrix<f64>) -> Result<Self> {
        if a.nrows() != a.ncols() {
            return Err(Error::DimensionMismatch {
                expected: a.nrows(),
                got: a.ncols(),
            });
        }
        let nn = a.nrows();
        if nn == 0 {
            return Err(Error::EmptySet);
        }
        let mut h = vec![0.0f64; nn * nn];
        for i in 0..nn {
            for j in 0..nn {
                h[i * nn + j] = a[(i, j)];
            }
        }
        let mut v = vec![0.0f64; nn * nn];
        let mut re = vec![0.0f64; nn];
        let mut im = vec![0.0f64; nn];
        orthes(nn, &mut h, &mut v);
        hqr2(nn, &mut h, &mut v, &mut re, &mut im)?;
        Ok(EigenDecomposition { n: nn, re, im, v })
    }

    /// Matrix dimension.
    pub fn n(&self) -> usize {
        self.n
    }

    /// Eigenvalues as complex numbers, in decomposition order.
    pub fn eigenvalues(&self) -> Vec<Complex64> {
        self.re
            .iter()
            .zip(&self.im)
            .map(|(&r, &i)| Complex64::new(r, i))
            .collect()
    }

    /// Packed eigenvector entry (row `i`, column `j`).
    pub fn packed(&self, i: usize, j: usize) -> f64 {
        self.v[i * self.n + j]
    }

    /// Eigenvector matrix with the packed pairs expanded to complex columns.
    ///
    /// Column `j` is an eigenvector for eigenvalue `j`. Columns are not
    /// normalized.
    pub fn eigenvector_matrix(&self) -> DMatrix<Complex64> {
        let n = self.n;
        let mut s = DMatrix::<Complex64>::zeros(n, n);
        let mut j = 0;
        while j < n {
            if self.im[j] == 0.0 {
                for i in 0..n {
                    s[(i, j)] = Complex64::new(self.packed(i, j), 0.0);
                }
                j += 1;
            } else {
                // Columns j, j+1 hold the real and imaginary parts of the
                // eigenvector for the positive-imaginary eigenvalue.
                for i in 0..n {
                    let (x, y) = (self.packed(i, j), self.packed(i, j + 1));
                    s[(i, j)] = Complex64::new(x, y);
                    s[(i, j + 1)] = Complex64::new(x, -y);
                }
                j += 2;
            }
        }
        s
    }
}

/// Householder reduction of `h` to Hessenberg form, accumulating the
/// orthogonal transformation in `v`.
fn orthes(nn: usize, h: &mut [f64], v: &mut [f64]) {
    let low = 0usize;
    let high = nn - 1;
    let mut ort = vec![0.0f64; nn];

    let mut m = low + 1;
    while m + 1 <= high {
        // m runs over columns low+1 ..= high-1.
        if m > high.saturating_sub(1) {
            break;
        }
        let mut scale = 0.0;
        for i in m..=high {
            scale += h[i * nn + m - 1].abs();
        }
        if scale != 0.0 {
            let mut hsum = 0.0;
            for i in (m..=high).rev() {
                ort[i] = h[i * nn + m - 1] / scale;
                hsum += ort[i] * ort[i];
            }
            let mut g = hsum.sqrt();
            if ort[m] > 0.0 {
                g = -g;
            }
            let hh = hsum - ort[m] * g;
            ort[m] -= g;
            // Apply the Householder similarity transformation
            // H = (I - u u' / h) H (I - u u' / h).
            for j in m..nn {
                let mut f = 0.0;
                for i in (m..=high).rev() {
                    f += ort[i] * h[i * nn + j];
                }
                f /= hh;
                for i in m..=high {
                    h[i * nn + j] -= f * ort[i];
                }
            }
            for i in 0..=high {
                let mut f = 0.0;
                for j in (m..=high).rev() {
                    f += ort[j] * h[i * nn + j];
                }
                f /= hh;
                for j in m..=high {
                    h[i * nn + j] -= f * ort[j];
                }
            }
            ort[m] *= scale;
            h[m * nn + m - 1] = scale * g;
        }
        m += 1;
    }

    // Accumulate transformations into v.
    for i in 0..nn {
        for j in 0..nn {
            v[i * nn + j] = if i == j { 1.0 } else { 0.0 };
        }
    }
    if high >= 1 {
        let mut m = high - 1;
        while m >= low + 1 {
            if h[m * nn + m - 1] != 0.0 {
                for i in (m + 1)..=high {
                    ort[i] = h[i * nn + m - 1];
                }
                for j in m..=high {
                    let mut g = 0.0;
                    for i in m..=high {
                        g += ort[i] * v[i * nn + j];
                    }
                    // Double division avoids possible underflow.
                    g = (g / ort[m]) / h[m * nn + m - 1];
                    for i in m..=high {
                        v[i * nn + j] += g * ort[i];
                    }
                }
            }
            if m == low + 1 {
                break;
            }
            m -= 1;
        }
    }
}

/// Double-shift QR iteration on the Hessenberg matrix `h`, accumulating into
/// `v` and back-substituting for eigenvectors of the original matrix.
#[allow(clippy::too_many_lines)]
fn hqr2(nn: usize, h: &mut [f64], v: &mut [f64], d: &mut [f64], e: &mut [f64]) -> Result<()> {
    let ni = nn as i64;
    let mut n = ni - 1;
    let low = 0i64;
    let high = ni - 1;
    let mut exshift = 0.0f64;
    let (mut p, mut q, mut r, mut s, mut z) = (0.0f64, 0.0f64, 0.0f64, 0.0f64, 0.0f64);
    let (mut x, mut y, mut w);

    let at = |i: i64, j: i64| (i as usize) * nn + (j as usize);

    // Matrix 1-ish norm used in the convergence tests.
    let mut norm = 0.0f64;
    for i in 0..ni {
        for j in (i - 1).max(0)..ni {
            norm += h[at(i, j)].abs();
        }
    }

    let mut iter: u32 = 0;
    while n >= low {
        // Look for a single small subdiagonal element.
        let mut l = n;
        while l > low {
            s = h[at(l - 1, l - 1)].abs() + h[at(l, l)].abs();
            if s == 0.0 {
                s = norm;
            }
            if h[at(l, l - 1)].abs() < EPS * s {
                break;
            }
            l -= 1;
        }

        if l == n {
            // One root found.
            h[at(n, n)] += exshift;
            d[n as usize] = h[at(n, n)];
            e[n as usize] = 0.0;
            n -= 1;
            iter = 0;
        } else if l == n - 1 {
            // Two roots found.
            w = h[at(n, n - 1)] * h[at(n - 1, n)];
            p = (h[at(n - 1, n - 1)] - h[at(n, n)]) / 2.0;
            q = p * p + w;
            z = q.abs().sqrt();
            h[at(n, n)] += exshift;
            h[at(n - 1, n - 1)] += exshift;
            x = h[at(n, n)];
            if q >= 0.0 {
                // Real pair.
                z = if p >= 0.0 { p + z } else { p - z };
                d[(n - 1) as usize] = x + z;
                d[n as usize] = d[(n - 1) as usize];
                if z != 0.0 {
                    d[n as usize] = x - w / z;
                }
                e[(n - 1) as usize] = 0.0;
                e[n as usize] = 0.0;
                x = h[at(n, n - 1)];
                s = x.abs() + z.abs();
                p = x / s;
                q = z / s;
                r = (p * p + q * q).sqrt();
                p /= r;
                q /= r;
                for j in (n - 1)..ni {
                    z = h[at(n - 1, j)];
                    h[at(n - 1, j)] = q * z + p * h[at(n, j)];
                    h[at(n, j)] = q * h[at(n, j)] - p * z;
                }
                for i in 0..=n {
                    z = h[at(i, n - 1)];
                    h[at(i, n - 1)] = q * z + p * h[at(i, n)];
                    h[at(i, n)] = q * h[at(i, n)] - p * z;
                }
                for i in low..=high {
                    z = v[at(i, n - 1)];
                    v[at(i, n - 1)] = q * z + p * v[at(i, n)];
                    v[at(i, n)] = q * v[at(i, n)] - p * z;
                }
            } else {
                // Complex pair.
                d[(n - 1) as usize] = x + p;
                d[n as usize] = x + p;
                e[(n - 1) as usize] = z;
                e[n as usize] = -z;
            }
            n -= 2;
            iter = 0;
        } else {
            // No convergence yet: form a shift.
            x = h[at(n, n)];
            y = 0.0;
            w = 0.0;
            if l < n {
                y = h[at(n - 1, n - 1)];
                w = h[at(n, n - 1)] * h[at(n - 1, n)];
            }

            // Exceptional shifts break occasional cycling.
            if iter == 10 || iter == 20 {
                exshift += x;
                for i in low..=n {
                    h[at(i, i)] -= x;
                }
                s = h[at(n, n - 1)].abs() + h[at(n - 1, n - 2)].abs();
                x = 0.75 * s;
                y = x;
                w = -0.4375 * s * s;
            }
            if iter >= MAX_ITER_PER_ROOT {
                return Err(Error::EigensolverFailure);
            }
            iter += 1;

            // Look for two consecutive small subdiagonal elements.
            let mut m = n - 2;
            while m >= l {
                z = h[at(m, m)];
                r = x - z;
                s = y - z;
                p = (r * s - w) / h[at(m + 1, m)] + h[at(m, m + 1)];
                q = h[at(m + 1, m + 1)] - z - r - s;
                r = h[at(m + 2, m + 1)];
                s = p.abs() + q.abs() + r.abs();
                p /= s;
                q /= s;
                r /= s;
                if m == l {
                    break;
                }
                if h[at(m, m - 1)].abs() * (q.abs() + r.abs())
                    < EPS
                        * (p.abs()
                            * (h[at(m - 1, m - 1)].abs() + z.abs() + h[at(m + 1, m + 1)].abs()))
                {
                    break;
                }
                m -= 1;
            }

            for i in (m + 2)..=n {
                h[at(i, i - 2)] = 0.0;
                if i > m + 2 {
                    h[at(i, i - 3)] = 0.0;
                }
            }

            // Double QR step on rows l..=n and columns m..=n.
            for k in m..n {
                let notlast = k != n - 1;
                if k != m {
                    p = h[at(k, k - 1)];
                    q = h[at(k + 1, k - 1)];
                    r = if notlast { h[at(k + 2, k - 1)] } else { 0.0 };
                    x = p.abs() + q.abs() + r.abs();
                    if x == 0.0 {
                        continue;
                    }
                    p /= x;
                    q /= x;
                    r /= x;
                }
                s = (p * p + q * q + r * r).sqrt();
                if p < 0.0 {
                    s = -s;
                }
                if s != 0.0 {
                    if k != m {
                        h[at(k, k - 1)] = -s * x;
                    } else if l != m {
                        h[at(k, k - 1)] = -h[at(k, k - 1)];
                    }
                    p += s;
                    x = p / s;
                    y = q / s;
                    z = r / s;
                    q /= p;
                    r /= p;

                    for j in k..ni {
                        p = h[at(k, j)] + q * h[at(k + 1, j)];
                        if notlast {
                            p += r * h[at(k + 2, j)];
                            h[at(k + 2, j)] -= p * z;
                        }
                        h[at(k, j)] -= p * x;
                        h[at(k + 1, j)] -= p * y;
                    }
                    let upper = n.min(k + 3);
                    for i in 0..=upper {
                        p = x * h[at(i, k)] + y * h[at(i, k + 1)];
                        if notlast {
                            p += z * h[at(i, k + 2)];
                            h[at(i, k + 2)] -= p * r;
                        }
                        h[at(i, k)] -= p;
                        h[at(i, k + 1)] -= p * q;
                    }
                    for i in low..=high {
                        p = x * v[at(i, k)] + y * v[at(i, k + 1)];
                        if notlast {
                            p += z * v[at(i, k + 2)];
                            v[at(i, k + 2)] -= p * r;
                        }
                        v[at(i, k)] -= p;
                        v[at(i, k + 1)] -= p * q;
                    }
                }
            }
        }
    }

    // Backsubstitute to find the vectors of the upper triangular form.
    if norm == 0.0 {
        return Ok(());
    }
    let mut n = ni - 1;
    while n >= 0 {
        p = d[n as usize];
        q = e[n as usize];
        if q == 0.0 {
            // Real eigenvector.
            let mut l = n;
            h[at(n, n)] = 1.0;
            let mut i = n - 1;
            while i >= 0 {
                w = h[at(i, i)] - p;
                r = 0.0;
                for j in l..=n {
                    r += h[at(i, j)] * h[at(j, n)];
                }
                if e[i as usize] < 0.0 {
                    z = w;
                    s = r;
                } else {
                    l = i;
                    if e[i as usize] == 0.0 {
                        h[at(i, n)] = if w != 0.0 { -r / w } else { -r / (EPS * norm) };
                    } else {
                        // Solve the 2x2 real block.
                        x = h[at(i, i + 1)];
                        y = h[at(i + 1, i)];
                        q = (d[i as usize] - p) * (d[i as usize] - p)
                            + e[i as usize] * e[i as usize];
                        let t = (x * s - z * r) / q;
                        h[at(i, n)] = t;
                        h[at(i + 1, n)] = if x.abs() > z.abs() {
                            (-r - w * t) / x
                        } else {
                            (-s - y * t) / z
                        };
                    }
                    // Overflow control.
                    let t = h[at(i, n)].abs();
                    if (EPS * t) * t > 1.0 {
                        for j in i..=n {
                            h[at(j, n)] /= t;
                        }
                    }
                }
                i -= 1;
            }
        } else if q < 0.0 {
            // Complex eigenvector, written at the second column of the pair.
            let mut l = n - 1;
            if h[at(n, n - 1)].abs() > h[at(n - 1, n)].abs() {
                h[at(n - 1, n - 1)] = q / h[at(n, n - 1)];
                h[at(n - 1, n)] = -(h[at(n, n)] - p) / h[at(n, n - 1)];
            } else {
                let (cr, ci) = cdiv(0.0, -h[at(n - 1, n)], h[at(n - 1, n - 1)] - p, q);
                h[at(n - 1, n - 1)] = cr;
                h[at(n - 1, n)] = ci;
            }
            h[at(n, n - 1)] = 0.0;
            h[at(n, n)] = 1.0;
            let mut i = n - 2;
            while i >= 0 {
                let mut ra = 0.0;
                let mut sa = 0.0;
                for j in l..=n {
                    ra += h[at(i, j)] * h[at(j, n - 1)];
                    sa += h[at(i, j)] * h[at(j, n)];
                }
                w = h[at(i, i)] - p;
                if e[i as usize] < 0.0 {
                    z = w;
                    r = ra;
                    s = sa;
                } else {
                    l = i;
                    if e[i as usize] == 0.0 {
                        let (cr, ci) = cdiv(-ra, -sa, w, q);
                        h[at(i, n - 1)] = cr;
                        h[at(i, n)] = ci;
                    } else {
                        // Solve the 2x2 complex block.
                        x = h[at(i, i + 1)];
                        y = h[at(i + 1, i)];
                        let mut vr = (d[i as usize] - p) * (d[i as usize] - p)
                            + e[i as usize] * e[i as usize]
                            - q * q;
                        let vi = (d[i as usize] - p) * 2.0 * q;
                        if vr == 0.0 && vi == 0.0 {
                            vr = EPS
                                * norm
                                * (w.abs() + q.abs() + x.abs() + y.abs() + z.abs());
                        }
                        let (cr, ci) =
                            cdiv(x * r - z * ra + q * sa, x * s - z * sa - q * ra, vr, vi);
                        h[at(i, n - 1)] = cr;
                        h[at(i, n)] = ci;
                        if x.abs() > z.abs() + q.abs() {
                            h[at(i + 1, n - 1)] =
                                (-ra - w * h[at(i, n - 1)] + q * h[at(i, n)]) / x;
                            h[at(i + 1, n)] = (-sa - w * h[at(i, n)] - q * h[at(i, n - 1)]) / x;
                        } else {
                            let (cr, ci) =
                                cdiv(-r - y * h[at(i, n - 1)], -s - y * h[at(i, n)], z, q);
                            h[at(i + 1, n - 1)] = cr;
                            h[at(i + 1, n)] = ci;
                        }
                    }
                    // Overflow control.
                    let t = h[at(i, n - 1)].abs().max(h[at(i, n)].abs());
                    if (EPS * t) * t > 1.0 {
                        for j in i..=n {
                            h[at(j, n - 1)] /= t;
                            h[at(j, n)] /= t;
                        }
                    }
                }
                i -= 1;
            }
        }
        n -= 1;
    }

    // Back transformation to eigenvectors of the original matrix.
    let mut j = ni - 1;
    while j >= low {
        for i in low..=high {
            z = 0.0;
            for k in low..=j.min(high) {
                z += v[at(i, k)] * h[at(k, j)];
            }
            v[at(i, j)] = z;
        }
        if j == low {
            break;
        }
        j -= 1;
    }

    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DMatrix;

    fn residual(a: &DMatrix<f64>, dec: &EigenDecomposition) -> f64 {
        let n = dec.n();
        let vs = dec.eigenvector_matrix();
        let lambdas = dec.eigenvalues();
        let ac = a.map(|x| Complex64::new(x, 0.0));
        let mut worst: f64 = 0.0;
        for j in 0..n {
            let col = vs.column(j);
            let scale = col.iter().map(|c| c.norm()).fold(0.0f64, f64::max);
            assert!(scale > 0.0, "zero eigenvector at {j}");
            let av = &ac * col;
            for i in 0..n {
                let diff = (av[i] - lambdas[j] * col[i]).norm();
                worst = worst.max(diff / scale);
            }
        }
        worst
    }

    #[test]
    fn swap_matrix_has_plus_minus_one() {
        let a = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]);
        let dec = EigenDecomposition::new(&a).unwrap();
        let mut vals: Vec<f64> = dec.re.clone();
        vals.sort_by(f64::total_cmp);
        assert!((vals[0] + 1.0).abs() < 1e-14);
        assert!((vals[1] - 1.0).abs() < 1e-14);
        assert!(dec.im.iter().all(|&x| x == 0.0));
        assert!(residual(&a, &dec) < 1e-12);
    }

    #[test]
    fn rotation_matrix_has_complex_pair() {
        let (c, s) = (0.6, 0.8);
        let a = DMatrix::from_row_slice(2, 2, &[c, -s, s, c]);
        let dec = EigenDecomposition::new(&a).unwrap();
        let mut ims: Vec<f64> = dec.im.clone();
        ims.sort_by(f64::total_cmp);
        assert!((ims[0] + s).abs() < 1e-12);
        assert!((ims[1] - s).abs() < 1e-12);
        assert!(dec.re.iter().all(|&x| (x - c).abs() < 1e-12));
        assert!(residual(&a, &dec) < 1e-12);
    }

    #[test]
    fn upper_triangular_reads_off_diagonal() {
        let a = DMatrix::from_row_slice(3, 3, &[1.0, 2.0, 3.0, 0.0, 4.0, 5.0, 0.0, 0.0, 9.0]);
        let dec = EigenDecomposition::new(&a).unwrap();
        let mut vals = dec.re.clone();
        vals.sort_by(f64::total_cmp);
        assert!((vals[0] - 1.0).abs() < 1e-10);
        assert!((vals[1] - 4.0).abs() < 1e-10);
        assert!((vals[2] - 9.0).abs() < 1e-10);
        assert!(residual(&a, &dec) < 1e-10);
    }

    #[test]
    fn random_matrices_satisfy_eigen_equation() {
        use crate::rng::RngStream;
        let mut rng = RngStream::new(2024, 0);
        for trial in 0..30 {
            let n = 2 + (trial % 7);
            let a = DMatrix::from_fn(n, n, |_, _| rng.next_f64() * 2.0 - 1.0);
            let dec = EigenDecomposition::new(&a).unwrap();
            assert!(
                residual(&a, &dec) < 1e-8,
                "trial {trial} residual {}",
                residual(&a, &dec)
            );
        }
    }

    #[test]
    fn one_by_one() {
        let a = DMatrix::from_row_slice(1, 1, &[0.37]);
        let dec = EigenDecomposition::new(&a).unwrap();
        assert_eq!(dec.re, vec![0.37]);
        assert_eq!(dec.im, vec![0.0]);
    }

    #[test]
    fn stochastic_matrix_has_unit_eigenvalue() {
        let a = DMatrix::from_row_slice(
            3,
            3,
            &[0.2, 0.5, 0.3, 0.3, 0.3, 0.4, 0.25, 0.25, 0.5],
        );
        let dec = EigenDecomposition::new(&a).unwrap();
        let best = dec
            .eigenvalues()
            .into_iter()
            .map(|l| (l - Complex64::new(1.0, 0.0)).norm())
            .fold(f64::INFINITY, f64::min);
        assert!(best < 1e-12, "distance to 1: {best}");
        assert!(residual(&a, &dec) < 1e-10);
    }
}
