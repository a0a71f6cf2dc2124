//! Small dense complex helpers shared by the solver and the oracles.

use nalgebra::{Complex, DMatrix, DVector};

pub type C64 = Complex<f64>;
pub type CVector = DVector<C64>;
pub type CMatrix = DMatrix<C64>;

/// `aᴴ b`.
#[inline]
pub fn inner(a: &CVector, b: &CVector) -> C64 {
    a.dotc(b)
}

/// Sum of products in twice the working precision (error-free transforms).
fn dot2(terms: impl Iterator<Item = (f64, f64)>) -> f64 {
    let (mut sum, mut comp) = (0.0_f64, 0.0_f64);
    for (x, y) in terms {
        let p = x * y;
        let pe = x.mul_add(y, -p);
        let t = sum + p;
        let z = t - sum;
        comp += (sum - (t - z)) + (p - z) + pe;
        sum = t;
    }
    sum + comp
}

/// `aᴴ b` accurate to a few ulps of the result, even under heavy cancellation.
pub fn inner_accurate(a: &CVector, b: &CVector) -> C64 {
    let re = dot2(a.iter().zip(b.iter()).flat_map(|(x, y)| [(x.re, y.re), (x.im, y.im)]));
    let im = dot2(a.iter().zip(b.iter()).flat_map(|(x, y)| [(x.re, y.im), (-x.im, y.re)]));
    C64::new(re, im)
}

#[inline]
pub fn norm_sqr(v: &CVector) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum()
}

/// Real part of `hᴴ S h` for a Hermitian `S`.
pub fn quad_form(s: &CMatrix, h: &CVector) -> f64 {
    let sh = s * h;
    inner(h, &sh).re
}

/// Orthonormal basis (as columns) of `span(vectors)`, modified Gram-Schmidt with
/// one re-orthogonalisation pass. Vectors whose residual falls below `rel_tol`
/// times their norm are treated as dependent.
pub fn orthonormal_basis(vectors: &[&CVector], dim: usize, rel_tol: f64) -> Vec<CVector> {
    let mut basis: Vec<CVector> = Vec::new();
    for v in vectors {
        let n0 = norm_sqr(v).sqrt();
        if n0 == 0.0 {
            continue;
        }
        let mut r = (*v).clone();
        for _ in 0..2 {
            for q in &basis {
                let c = inner(q, &r);
                r.axpy(-c, q, C64::new(1.0, 0.0));
            }
        }
        let n = norm_sqr(&r).sqrt();
        if n > rel_tol * n0 && basis.len() < dim {
            basis.push(r.unscale(n));
        }
    }
    basis
}

/// Removes from `v` its component in `span(basis)`; `basis` must be orthonormal.
pub fn project_out(v: &CVector, basis: &[CVector]) -> CVector {
    let mut r = v.clone();
    for _ in 0..2 {
        for q in basis {
            let c = inner(q, &r);
            r.axpy(-c, q, C64::new(1.0, 0.0));
        }
    }
    r
}

/// Eigenvalues of a Hermitian matrix, sorted in descending order.
pub fn hermitian_eigenvalues(m: &CMatrix) -> Vec<f64> {
    let eig = m.clone().symmetric_eigen();
    let mut vals: Vec<f64> = eig.eigenvalues.iter().copied().collect();
    vals.sort_by(|a, b| b.total_cmp(a));
    vals
}

/// `w wᴴ`, exactly Hermitian with a real diagonal.
pub fn outer_self(w: &CVector) -> CMatrix {
    let m = w.len();
    CMatrix::from_fn(m, m, |i, j| {
        if i == j {
            C64::new(w[i].norm_sqr(), 0.0)
        } else {
            w[i] * w[j].conj()
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn accurate_inner_survives_cancellation() {
        let a = CVector::from_vec(vec![C64::new(1.0, 0.0), C64::new(1.0, 0.0)]);
        let b = CVector::from_vec(vec![C64::new(1e16, 0.0), C64::new(-1e16 + 2.0, 1.0)]);
        assert_eq!(inner_accurate(&a, &b), C64::new(2.0, 1.0));
        let c = CVector::from_vec(vec![C64::new(0.3, -1.2), C64::new(2.5, 0.7)]);
        let d = CVector::from_vec(vec![C64::new(-0.4, 0.9), C64::new(1.1, 3.0)]);
        assert!((inner_accurate(&c, &d) - inner(&c, &d)).norm() < 1e-15);
    }

    fn cv(v: &[(f64, f64)]) -> CVector {
        CVector::from_iterator(v.len(), v.iter().map(|&(re, im)| C64::new(re, im)))
    }

    #[test]
    fn basis_drops_dependent_vectors() {
        let a = cv(&[(1.0, 0.0), (0.0, 1.0), (0.0, 0.0)]);
        let b = cv(&[(2.0, 0.0), (0.0, 2.0), (0.0, 0.0)]);
        let c = cv(&[(0.0, 0.0), (0.0, 0.0), (3.0, -1.0)]);
        let basis = orthonormal_basis(&[&a, &b, &c], 3, 1e-12);
        assert_eq!(basis.len(), 2);
        for q in &basis {
            assert!((norm_sqr(q) - 1.0).abs() < 1e-14);
        }
        assert!(inner(&basis[0], &basis[1]).norm() < 1e-14);
    }

    #[test]
    fn projection_is_orthogonal_to_basis() {
        let a = cv(&[(1.0, 0.5), (0.3, -0.2), (0.0, 1.0)]);
        let v = cv(&[(0.2, 0.1), (1.0, 0.0), (-0.4, 0.7)]);
        let basis = orthonormal_basis(&[&a], 3, 1e-12);
        let p = project_out(&v, &basis);
        assert!(inner(&a, &p).norm() < 1e-14);
    }

    #[test]
    fn outer_product_eigenvalues() {
        let w = cv(&[(1.0, 1.0), (0.0, 2.0)]);
        let vals = hermitian_eigenvalues(&outer_self(&w));
        assert!((vals[0] - 6.0).abs() < 1e-12);
        assert!(vals[1].abs() < 1e-12);
    }
}
