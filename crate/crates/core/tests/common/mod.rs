//! Independent oracles for integration tests. Nothing here calls into the
//! geometry code of the crate under test.

#![allow(dead_code)]

use crepant_core::{BigInt, BigRat, LatticePoint};
use num_traits::{Signed, Zero};

/// Determinant by the Leibniz expansion; fine up to 6x6.
pub fn leibniz(m: &[Vec<BigInt>]) -> BigInt {
    let n = m.len();
    if n == 0 {
        return BigInt::from(1);
    }
    let mut perm: Vec<usize> = (0..n).collect();
    let mut total = BigInt::zero();
    permute(m, &mut perm, 0, 1, &mut total);
    total
}

fn permute(m: &[Vec<BigInt>], perm: &mut Vec<usize>, k: usize, sign: i32, total: &mut BigInt) {
    let n = perm.len();
    if k == n {
        let mut prod = BigInt::from(sign);
        for (r, &c) in perm.iter().enumerate() {
            if m[r][c].is_zero() {
                return;
            }
            prod *= &m[r][c];
        }
        *total += prod;
        return;
    }
    for i in k..n {
        perm.swap(k, i);
        permute(m, perm, k + 1, if i == k { sign } else { -sign }, total);
        perm.swap(k, i);
    }
}

fn big(x: i64) -> BigInt {
    BigInt::from(x)
}

/// `|det(v_1 - v_0, ..., v_d - v_0)|` for `d + 1` points in dimension `d`.
pub fn nvol(verts: &[LatticePoint]) -> BigInt {
    let v0 = verts[0].coords();
    let m: Vec<Vec<BigInt>> = verts[1..]
        .iter()
        .map(|v| v.coords().iter().zip(v0).map(|(a, b)| big(a - b)).collect())
        .collect();
    leibniz(&m).abs()
}

/// Affine barycentric coordinates of `p` with respect to a full-dimensional
/// simplex, by Cramer's rule.
pub fn barycentric(verts: &[LatticePoint], p: &[i64]) -> Vec<BigRat> {
    let d = p.len();
    let column = |q: &[i64]| -> Vec<BigInt> {
        let mut c: Vec<BigInt> = q.iter().map(|&x| big(x)).collect();
        c.push(big(1));
        c
    };
    let cols: Vec<Vec<BigInt>> = verts.iter().map(|v| column(v.coords())).collect();
    let det_cols = |cs: &[Vec<BigInt>]| {
        let rows: Vec<Vec<BigInt>> = (0..=d).map(|r| cs.iter().map(|c| c[r].clone()).collect()).collect();
        leibniz(&rows)
    };
    let den = det_cols(&cols);
    assert!(!den.is_zero(), "degenerate simplex");
    let pc = column(p);
    (0..verts.len())
        .map(|i| {
            let mut cs = cols.clone();
            cs[i] = pc.clone();
            BigRat::new(det_cols(&cs), den.clone())
        })
        .collect()
}

pub fn in_simplex(verts: &[LatticePoint], p: &[i64]) -> bool {
    barycentric(verts, p).iter().all(|l| !l.is_negative())
}

/// All lattice points of a full-dimensional simplex, by scanning its
/// bounding box.
pub fn box_scan(verts: &[LatticePoint]) -> Vec<LatticePoint> {
    let d = verts[0].dim();
    let lo: Vec<i64> = (0..d).map(|i| verts.iter().map(|v| v.coords()[i]).min().unwrap()).collect();
    let hi: Vec<i64> = (0..d).map(|i| verts.iter().map(|v| v.coords()[i]).max().unwrap()).collect();
    let mut out = Vec::new();
    let mut x = lo.clone();
    loop {
        if in_simplex(verts, &x) {
            out.push(LatticePoint::new(x.clone()));
        }
        let mut i = d;
        loop {
            if i == 0 {
                out.sort();
                return out;
            }
            i -= 1;
            if x[i] < hi[i] {
                x[i] += 1;
                break;
            }
            x[i] = lo[i];
        }
    }
}

/// Sylvester numbers `s_0, ..., s_n` as `i64`.
pub fn sylvester(n: usize) -> Vec<i64> {
    let mut s = vec![2i64];
    while s.len() <= n {
        let prod: i64 = s.iter().product();
        s.push(prod + 1);
    }
    s
}

/// First violation of the lifting condition: for every cell, the affine
/// interpolant of `w` must pass through the cell's vertices and lie strictly
/// below `w` at every other point of `pts`.
pub fn regularity_violation(
    pts: &[LatticePoint],
    cells: &[Vec<u32>],
    w: &[BigRat],
) -> Option<(usize, usize)> {
    for (ci, cell) in cells.iter().enumerate() {
        let verts: Vec<LatticePoint> = cell.iter().map(|&i| pts[i as usize].clone()).collect();
        for (pi, p) in pts.iter().enumerate() {
            if cell.contains(&(pi as u32)) {
                continue;
            }
            let lam = barycentric(&verts, p.coords());
            let interp: BigRat = lam.iter().zip(cell).map(|(l, &v)| l * &w[v as usize]).sum();
            if interp >= w[pi] {
                return Some((ci, pi));
            }
        }
    }
    None
}
