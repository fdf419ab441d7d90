//! Eigenvalues of small dense real matrices.
//!
//! The matrix is first split along its exact block-diagonal structure
//! (connected components of the nonzero pattern). Components of size 1–3 are
//! solved in closed form from the characteristic polynomial, which keeps
//! multiple roots of companion blocks exact; larger components go through
//! balancing, Hessenberg reduction and a Francis double-shift QR iteration.

use super::{Mat, NumericError};

/// One eigenvalue of a real matrix; complex values come in conjugate pairs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Eigenvalue {
    pub re: f64,
    pub im: f64,
}

impl Eigenvalue {
    fn real(re: f64) -> Self {
        Eigenvalue { re, im: 0.0 }
    }

    pub fn magnitude(&self) -> f64 {
        self.re.hypot(self.im)
    }
}

/// All eigenvalues, sorted by real part then imaginary part.
pub fn eigenvalues(a: &Mat) -> Result<Vec<Eigenvalue>, NumericError> {
    if !a.is_square() {
        return Err(NumericError::DimensionMismatch {
            op: "eigenvalues",
            left: format!("{}x{}", a.rows(), a.cols()),
            right: "square matrix required".into(),
        });
    }
    let mut out = Vec::with_capacity(a.rows());
    for comp in components(a) {
        let sub = submatrix(a, &comp);
        let vals = match comp.len() {
            1 => vec![Eigenvalue::real(sub[(0, 0)])],
            2 => {
                let b = -(sub[(0, 0)] + sub[(1, 1)]);
                let c = sub[(0, 0)] * sub[(1, 1)] - sub[(0, 1)] * sub[(1, 0)];
                solve_quadratic(b, c).to_vec()
            }
            3 => {
                let (a2, a1, a0) = char_poly_3(&sub);
                solve_cubic(a2, a1, a0).to_vec()
            }
            _ => hqr(&sub)?,
        };
        out.extend(vals);
    }
    out.sort_by(|x, y| x.re.total_cmp(&y.re).then(x.im.total_cmp(&y.im)));
    Ok(out)
}

/// Real parts of all eigenvalues, ascending.
pub fn eig_real_parts(a: &Mat) -> Result<Vec<f64>, NumericError> {
    let mut re: Vec<f64> = eigenvalues(a)?.iter().map(|e| e.re).collect();
    re.sort_by(f64::total_cmp);
    Ok(re)
}

/// Connected components of the nonzero pattern (exact zeros only), each
/// returned as a sorted index list. For a block-diagonal matrix these are
/// precisely the diagonal blocks.
fn components(a: &Mat) -> Vec<Vec<usize>> {
    let n = a.rows();
    let mut seen = vec![false; n];
    let mut comps = Vec::new();
    for start in 0..n {
        if seen[start] {
            continue;
        }
        let mut comp = vec![start];
        seen[start] = true;
        let mut queue = vec![start];
        while let Some(i) = queue.pop() {
            for j in 0..n {
                if !seen[j] && (a[(i, j)] != 0.0 || a[(j, i)] != 0.0) {
                    seen[j] = true;
                    comp.push(j);
                    queue.push(j);
                }
            }
        }
        comp.sort_unstable();
        comps.push(comp);
    }
    comps
}

fn submatrix(a: &Mat, idx: &[usize]) -> Mat {
    Mat::from_fn(idx.len(), idx.len(), |i, j| a[(idx[i], idx[j])])
}

/// Coefficients (a2, a1, a0) of det(sI - A) = s^3 + a2 s^2 + a1 s + a0.
fn char_poly_3(a: &Mat) -> (f64, f64, f64) {
    let tr = a[(0, 0)] + a[(1, 1)] + a[(2, 2)];
    let m01 = a[(0, 0)] * a[(1, 1)] - a[(0, 1)] * a[(1, 0)];
    let m02 = a[(0, 0)] * a[(2, 2)] - a[(0, 2)] * a[(2, 0)];
    let m12 = a[(1, 1)] * a[(2, 2)] - a[(1, 2)] * a[(2, 1)];
    let det = a[(0, 0)] * (a[(1, 1)] * a[(2, 2)] - a[(1, 2)] * a[(2, 1)])
        - a[(0, 1)] * (a[(1, 0)] * a[(2, 2)] - a[(1, 2)] * a[(2, 0)])
        + a[(0, 2)] * (a[(1, 0)] * a[(2, 1)] - a[(1, 1)] * a[(2, 0)]);
    (-tr, m01 + m02 + m12, -det)
}

/// Roots of s^2 + b s + c.
fn solve_quadratic(b: f64, c: f64) -> [Eigenvalue; 2] {
    let disc = b * b - 4.0 * c;
    if disc >= 0.0 {
        let sq = disc.sqrt();
        // avoid cancellation: compute the larger-magnitude root first
        let r1 = if b >= 0.0 {
            (-b - sq) / 2.0
        } else {
            (-b + sq) / 2.0
        };
        let r2 = if r1 != 0.0 { c / r1 } else { -b - r1 };
        [Eigenvalue::real(r1), Eigenvalue::real(r2)]
    } else {
        let re = -b / 2.0;
        let im = (-disc).sqrt() / 2.0;
        [Eigenvalue { re, im: -im }, Eigenvalue { re, im }]
    }
}

/// Roots of s^3 + a2 s^2 + a1 s + a0 (Cardano / trigonometric form).
fn solve_cubic(a2: f64, a1: f64, a0: f64) -> [Eigenvalue; 3] {
    let shift = -a2 / 3.0;
    // depressed cubic t^3 + p t + q with s = t + shift
    let p = a1 - a2 * a2 / 3.0;
    let q = 2.0 * a2 * a2 * a2 / 27.0 - a2 * a1 / 3.0 + a0;
    if p == 0.0 && q == 0.0 {
        return [Eigenvalue::real(shift); 3];
    }
    let disc = (q / 2.0) * (q / 2.0) + (p / 3.0) * (p / 3.0) * (p / 3.0);
    if disc > 0.0 {
        // one real root and a conjugate pair
        let sq = disc.sqrt();
        let u3 = if q >= 0.0 {
            -q / 2.0 - sq
        } else {
            -q / 2.0 + sq
        };
        let u = u3.cbrt();
        let v = if u != 0.0 { -p / (3.0 * u) } else { 0.0 };
        let t1 = u + v;
        let re = -t1 / 2.0 + shift;
        let im = (3.0_f64).sqrt() / 2.0 * (u - v).abs();
        [
            Eigenvalue::real(t1 + shift),
            Eigenvalue { re, im: -im },
            Eigenvalue { re, im },
        ]
    } else {
        // three real roots
        let m = 2.0 * (-p / 3.0).sqrt();
        let arg = (3.0 * q / (2.0 * p)) * (-3.0 / p).sqrt();
        let phi = arg.clamp(-1.0, 1.0).acos();
        let mut roots = [0.0; 3];
        for (k, r) in roots.iter_mut().enumerate() {
            *r = m * ((phi - 2.0 * std::f64::consts::PI * k as f64) / 3.0).cos() + shift;
        }
        [
            Eigenvalue::real(roots[0]),
            Eigenvalue::real(roots[1]),
            Eigenvalue::real(roots[2]),
        ]
    }
}

/// Balance a matrix by diagonal similarity with powers of two.
fn balance(a: &mut Mat) {
    let n = a.rows();
    let radix: f64 = 2.0;
    let sqrdx = radix * radix;
    loop {
        let mut done = true;
        for i in 0..n {
            let mut r = 0.0;
            let mut c = 0.0;
            for j in 0..n {
                if j != i {
                    c += a[(j, i)].abs();
                    r += a[(i, j)].abs();
                }
            }
            if c != 0.0 && r != 0.0 {
                let mut g = r / radix;
                let mut f = 1.0;
                let s = c + r;
                let mut c2 = c;
                while c2 < g {
                    f *= radix;
                    c2 *= sqrdx;
                }
                g = r * radix;
                while c2 > g {
                    f /= radix;
                    c2 /= sqrdx;
                }
                if (c2 + r) / f < 0.95 * s {
                    done = false;
                    let g = 1.0 / f;
                    for j in 0..n {
                        a[(i, j)] *= g;
                    }
                    for j in 0..n {
                        a[(j, i)] *= f;
                    }
                }
            }
        }
        if done {
            break;
        }
    }
}

/// Reduce to upper Hessenberg form by stabilized elementary similarities.
fn hessenberg(a: &mut Mat) {
    let n = a.rows();
    for m in 1..n.saturating_sub(1) {
        let mut x = 0.0_f64;
        let mut i_piv = m;
        for i in m..n {
            if a[(i, m - 1)].abs() > x.abs() {
                x = a[(i, m - 1)];
                i_piv = i;
            }
        }
        if i_piv != m {
            for j in m - 1..n {
                let tmp = a[(i_piv, j)];
                a[(i_piv, j)] = a[(m, j)];
                a[(m, j)] = tmp;
            }
            for j in 0..n {
                let tmp = a[(j, i_piv)];
                a[(j, i_piv)] = a[(j, m)];
                a[(j, m)] = tmp;
            }
        }
        if x != 0.0 {
            for i in m + 1..n {
                let mut y = a[(i, m - 1)];
                if y != 0.0 {
                    y /= x;
                    a[(i, m - 1)] = y;
                    for j in m..n {
                        a[(i, j)] -= y * a[(m, j)];
                    }
                    for j in 0..n {
                        a[(j, m)] += y * a[(j, i)];
                    }
                }
            }
        }
    }
    // entries below the subdiagonal are elimination bookkeeping; clear them
    for i in 2..n {
        for j in 0..i - 1 {
            a[(i, j)] = 0.0;
        }
    }
}

/// Francis double-shift QR on an upper Hessenberg matrix, eigenvalues only.
fn hqr(orig: &Mat) -> Result<Vec<Eigenvalue>, NumericError> {
    let mut a = orig.clone();
    balance(&mut a);
    hessenberg(&mut a);

    let n = a.rows();
    let eps = f64::EPSILON;
    let mut anorm = 0.0;
    for i in 0..n {
        for j in i.saturating_sub(1)..n {
            anorm += a[(i, j)].abs();
        }
    }
    if anorm == 0.0 {
        return Ok(vec![Eigenvalue::real(0.0); n]);
    }

    let mut out: Vec<Eigenvalue> = Vec::with_capacity(n);
    let mut t = 0.0;
    let mut nn = n as i64 - 1;
    while nn >= 0 {
        let mut its = 0;
        loop {
            // look for a single small subdiagonal element
            let mut l = 0i64;
            let mut ll = nn;
            while ll >= 1 {
                let s0 = a[(ll as usize - 1, ll as usize - 1)].abs()
                    + a[(ll as usize, ll as usize)].abs();
                let s0 = if s0 == 0.0 { anorm } else { s0 };
                if a[(ll as usize, ll as usize - 1)].abs() <= eps * s0 {
                    a[(ll as usize, ll as usize - 1)] = 0.0;
                    l = ll;
                    break;
                }
                ll -= 1;
            }
            let x = a[(nn as usize, nn as usize)];
            if l == nn {
                out.push(Eigenvalue::real(x + t));
                nn -= 1;
                break;
            }
            let y = a[(nn as usize - 1, nn as usize - 1)];
            let w = a[(nn as usize, nn as usize - 1)] * a[(nn as usize - 1, nn as usize)];
            if l == nn - 1 {
                let p = 0.5 * (y - x);
                let q = p * p + w;
                let z = q.abs().sqrt();
                let x = x + t;
                if q >= 0.0 {
                    let z = p + if p >= 0.0 { z } else { -z };
                    let r1 = x + z;
                    let r2 = if z != 0.0 { x - w / z } else { r1 };
                    out.push(Eigenvalue::real(r1));
                    out.push(Eigenvalue::real(r2));
                } else {
                    out.push(Eigenvalue { re: x + p, im: z });
                    out.push(Eigenvalue { re: x + p, im: -z });
                }
                nn -= 2;
                break;
            }
            if its == 30 {
                return Err(NumericError::NoConvergence { iterations: 30 });
            }
            let (mut x, mut y, mut w) = (x, y, w);
            if its == 10 || its == 20 {
                // exceptional shift
                t += x;
                for i in 0..=nn as usize {
                    a[(i, i)] -= x;
                }
                let s = a[(nn as usize, nn as usize - 1)].abs()
                    + a[(nn as usize - 1, nn as usize - 2)].abs();
                x = 0.75 * s;
                y = x;
                w = -0.4375 * s * s;
            }
            its += 1;
            // two consecutive small subdiagonal elements
            let mut m = nn - 2;
            let (mut p, mut q, mut r) = (0.0, 0.0, 0.0);
            while m >= l {
                let mu = m as usize;
                let z = a[(mu, mu)];
                let rr = x - z;
                let ss = y - z;
                p = (rr * ss - w) / a[(mu + 1, mu)] + a[(mu, mu + 1)];
                q = a[(mu + 1, mu + 1)] - z - rr - ss;
                r = a[(mu + 2, mu + 1)];
                let scale = p.abs() + q.abs() + r.abs();
                p /= scale;
                q /= scale;
                r /= scale;
                if m == l {
                    break;
                }
                let u = a[(mu, mu - 1)].abs() * (q.abs() + r.abs());
                let v = p.abs() * (a[(mu - 1, mu - 1)].abs() + z.abs() + a[(mu + 1, mu + 1)].abs());
                if u <= eps * v {
                    break;
                }
                m -= 1;
            }
            for i in (m + 2)..=nn {
                let iu = i as usize;
                a[(iu, iu - 2)] = 0.0;
                if i > m + 2 {
                    a[(iu, iu - 3)] = 0.0;
                }
            }
            // double QR step over rows m..nn
            for k in m..=(nn - 1) {
                let ku = k as usize;
                if k != m {
                    p = a[(ku, ku - 1)];
                    q = a[(ku + 1, ku - 1)];
                    r = if k != nn - 1 {
                        a[(ku + 2, ku - 1)]
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
                let s = (p * p + q * q + r * r).sqrt();
                let s = if p >= 0.0 { s } else { -s };
                if s != 0.0 {
                    if k == m {
                        if l != m {
                            a[(ku, ku - 1)] = -a[(ku, ku - 1)];
                        }
                    } else {
                        a[(ku, ku - 1)] = -s * x;
                    }
                    p += s;
                    x = p / s;
                    y = q / s;
                    let z = r / s;
                    q /= p;
                    r /= p;
                    for j in ku..=nn as usize {
                        let mut pp = a[(ku, j)] + q * a[(ku + 1, j)];
                        if k != nn - 1 {
                            pp += r * a[(ku + 2, j)];
                            a[(ku + 2, j)] -= pp * z;
                        }
                        a[(ku + 1, j)] -= pp * y;
                        a[(ku, j)] -= pp * x;
                    }
                    let mmin = if nn < k + 3 { nn as usize } else { ku + 3 };
                    for i in l as usize..=mmin {
                        let mut pp = x * a[(i, ku)] + y * a[(i, ku + 1)];
                        if k != nn - 1 {
                            pp += z * a[(i, ku + 2)];
                            a[(i, ku + 2)] -= pp * r;
                        }
                        a[(i, ku + 1)] -= pp * q;
                        a[(i, ku)] -= pp;
                    }
                }
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn reals(a: &Mat) -> Vec<f64> {
        eig_real_parts(a).unwrap()
    }

    #[test]
    fn diagonal_matrix() {
        let a = Mat::diag(&[-1.0, -2.0, -3.0]);
        let re = reals(&a);
        assert_eq!(re, vec![-3.0, -2.0, -1.0]);
    }

    #[test]
    fn companion_triple_root_is_exact() {
        // companion of (s+1)^3: depressed cubic degenerates exactly
        let f = Mat::from_rows(&[
            vec![0.0, 1.0, 0.0],
            vec![0.0, 0.0, 1.0],
            vec![-1.0, -3.0, -3.0],
        ])
        .unwrap();
        for r in reals(&f) {
            assert!((r + 1.0).abs() < 1e-12, "root {r}");
        }
    }

    #[test]
    fn oscillator_block_spectrum() {
        // S_1 block: eigenvalues {0, ±i·0.75}
        let s = Mat::from_rows(&[
            vec![0.0, 0.0, 0.0],
            vec![0.0, 0.0, 1.0],
            vec![0.0, -0.5625, 0.0],
        ])
        .unwrap();
        let ev = eigenvalues(&s).unwrap();
        for e in &ev {
            assert!(e.re.abs() < 1e-12);
        }
        let mut ims: Vec<f64> = ev.iter().map(|e| e.im).collect();
        ims.sort_by(f64::total_cmp);
        assert!((ims[0] + 0.75).abs() < 1e-12);
        assert!(ims[1].abs() < 1e-12);
        assert!((ims[2] - 0.75).abs() < 1e-12);
    }

    #[test]
    fn block_diagonal_uses_per_block_solve() {
        // 9x9 F = diag(F_i, F_i, F_i): all nine roots exactly -1
        let f = Mat::from_rows(&[
            vec![0.0, 1.0, 0.0],
            vec![0.0, 0.0, 1.0],
            vec![-1.0, -3.0, -3.0],
        ])
        .unwrap();
        let big = Mat::block_diag(&[&f, &f, &f]);
        for r in reals(&big) {
            assert!((r + 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn factored_cubic_with_distinct_roots() {
        // companion of (s+1)(s+2)(s+3) = s^3 + 6s^2 + 11s + 6
        let a = Mat::from_rows(&[
            vec![0.0, 1.0, 0.0],
            vec![0.0, 0.0, 1.0],
            vec![-6.0, -11.0, -6.0],
        ])
        .unwrap();
        let re = reals(&a);
        assert!((re[0] + 3.0).abs() < 1e-10);
        assert!((re[1] + 2.0).abs() < 1e-10);
        assert!((re[2] + 1.0).abs() < 1e-10);
    }

    #[test]
    fn mixed_real_complex_quartic() {
        // companion of (s+1)(s^2+1)(s+2): roots -1, -2, ±i
        // s^4 + 3 s^3 + 3 s^2 + 3 s + 2
        let a = Mat::from_rows(&[
            vec![0.0, 1.0, 0.0, 0.0],
            vec![0.0, 0.0, 1.0, 0.0],
            vec![0.0, 0.0, 0.0, 1.0],
            vec![-2.0, -3.0, -3.0, -3.0],
        ])
        .unwrap();
        let ev = eigenvalues(&a).unwrap();
        let mut res: Vec<f64> = ev.iter().map(|e| e.re).collect();
        res.sort_by(f64::total_cmp);
        assert!((res[0] + 2.0).abs() < 1e-8);
        assert!((res[1] + 1.0).abs() < 1e-8);
        assert!(res[2].abs() < 1e-8 && res[3].abs() < 1e-8);
        let max_im = ev.iter().fold(0.0_f64, |m, e| m.max(e.im));
        assert!((max_im - 1.0).abs() < 1e-8);
    }

    #[test]
    fn large_graded_matrix_needs_balancing() {
        // kappa-scaled observer-style matrix: entries spanning 1 to 1e6;
        // similar to 100 * A_o with A_o = [[-1,1,0],[-1,0,1],[-1,0,0]] per axis,
        // whose spectrum is 100 * roots of s^3+s^2+s+1 = (s+1)(s^2+1).
        let k = 100.0;
        let a = Mat::from_rows(&[
            vec![-k, 1.0, 0.0],
            vec![-k * k, 0.0, 1.0],
            vec![-k * k * k, 0.0, 0.0],
        ])
        .unwrap();
        let ev = eigenvalues(&a).unwrap();
        let mut res: Vec<f64> = ev.iter().map(|e| e.re).collect();
        res.sort_by(f64::total_cmp);
        assert!((res[0] + 100.0).abs() < 1e-6 * 100.0, "res = {res:?}");
        assert!(res[1].abs() < 1e-6 * 100.0);
        assert!(res[2].abs() < 1e-6 * 100.0);
    }

    #[test]
    fn non_square_is_rejected() {
        assert!(eigenvalues(&Mat::zeros(2, 3)).is_err());
    }
}
