//! Small dense complex linear-algebra helpers on top of nalgebra.

use nalgebra::{Complex, DMatrix, DVector, SymmetricEigen};

use crate::scalar::{cis, count, creal, czero, lit, modulus, Scalar};

pub type CMat<T> = DMatrix<Complex<T>>;
pub type CVec<T> = DVector<Complex<T>>;

/// Eigen-decomposition of a Hermitian matrix, eigenvalues sorted descending.
pub fn hermitian_eig<T: Scalar>(m: &CMat<T>) -> (Vec<T>, CMat<T>) {
    let n = m.nrows();
    // Symmetrize so tiny round-off asymmetries cannot leak into the solver.
    let h = (m + m.adjoint()).map(|z| z.scale(lit(0.5)));
    let eig = SymmetricEigen::new(h);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        eig.eigenvalues[b]
            .partial_cmp(&eig.eigenvalues[a])
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut vectors = CMat::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        vectors.set_column(dst, &eig.eigenvectors.column(src));
    }
    (values, vectors)
}

/// `V f(Λ) V^†` for a Hermitian matrix.
pub fn hermitian_map<T: Scalar>(m: &CMat<T>, f: impl Fn(T) -> T) -> CMat<T> {
    let (values, vectors) = hermitian_eig(m);
    let n = m.nrows();
    let mut scaled = vectors.clone();
    for j in 0..n {
        let s = f(values[j]);
        for i in 0..n {
            scaled[(i, j)] = scaled[(i, j)].scale(s);
        }
    }
    scaled * vectors.adjoint()
}

/// Principal square root of a Hermitian positive semidefinite matrix.
pub fn psd_sqrt<T: Scalar>(m: &CMat<T>) -> CMat<T> {
    hermitian_map(m, |x| if x > T::zero() { x.sqrt() } else { T::zero() })
}

/// Pseudo-inverse square root; eigenvalues below `rel_tol·λ_max` are treated as zero.
pub fn psd_pinv_sqrt<T: Scalar>(m: &CMat<T>, rel_tol: T) -> CMat<T> {
    let (values, _) = hermitian_eig(m);
    let cutoff = values.first().copied().unwrap_or(T::zero()) * rel_tol;
    hermitian_map(m, |x| {
        if x > cutoff && x > T::zero() {
            T::one() / x.sqrt()
        } else {
            T::zero()
        }
    })
}

/// Kronecker product `a ⊗ b` of two column vectors.
pub fn kron<T: Scalar>(a: &CVec<T>, b: &CVec<T>) -> CVec<T> {
    let mut out = CVec::from_element(a.len() * b.len(), czero());
    for (i, &ai) in a.iter().enumerate() {
        for (j, &bj) in b.iter().enumerate() {
            out[i * b.len() + j] = ai * bj;
        }
    }
    out
}

pub fn frobenius<T: Scalar>(m: &CMat<T>) -> T {
    m.iter()
        .fold(T::zero(), |acc, z| acc + z.norm_sqr())
        .sqrt()
}

pub fn max_abs<T: Scalar>(m: &CMat<T>) -> T {
    m.iter().fold(T::zero(), |acc, &z| {
        let a = modulus(z);
        if a > acc {
            a
        } else {
            acc
        }
    })
}

/// Sylvester–Hadamard matrix for power-of-two `n`, otherwise the DFT matrix
/// with unit-modulus entries. Both satisfy `P P^† = n I`.
pub fn orthogonal_mapping<T: Scalar>(n: usize) -> CMat<T> {
    if n.is_power_of_two() {
        let mut h = CMat::from_element(1, 1, creal(T::one()));
        while h.nrows() < n {
            let k = h.nrows();
            let mut next = CMat::from_element(2 * k, 2 * k, czero());
            for i in 0..k {
                for j in 0..k {
                    let v = h[(i, j)];
                    next[(i, j)] = v;
                    next[(i, j + k)] = v;
                    next[(i + k, j)] = v;
                    next[(i + k, j + k)] = -v;
                }
            }
            h = next;
        }
        h
    } else {
        let two_pi = T::two_pi();
        CMat::from_fn(n, n, |i, j| {
            cis(-two_pi * count::<T>(i * j % n) / count::<T>(n))
        })
    }
}

/// Real symmetric embedding `[[Re X, -Im X], [Im X, Re X]]` of a Hermitian matrix.
///
/// `tr(embed(X) · embed(A)) = 2 tr(XA)` for Hermitian `X`, `A`.
pub fn embed_hermitian<T: Scalar>(x: &CMat<T>) -> DMatrix<T> {
    let n = x.nrows();
    let mut out = DMatrix::zeros(2 * n, 2 * n);
    for i in 0..n {
        for j in 0..n {
            let z = x[(i, j)];
            out[(i, j)] = z.re;
            out[(i + n, j + n)] = z.re;
            out[(i, j + n)] = -z.im;
            out[(i + n, j)] = z.im;
        }
    }
    out
}

/// Inverse of [`embed_hermitian`]; averages the redundant blocks so that the
/// result is the Hermitian projection of an arbitrary symmetric input.
pub fn extract_hermitian<T: Scalar>(y: &DMatrix<T>) -> CMat<T> {
    let n = y.nrows() / 2;
    let half: T = lit(0.5);
    CMat::from_fn(n, n, |i, j| {
        Complex::new(
            (y[(i, j)] + y[(i + n, j + n)]) * half,
            (y[(i + n, j)] - y[(i, j + n)]) * half,
        )
    })
}

/// `tr(A B)` for complex matrices.
pub fn trace_product<T: Scalar>(a: &CMat<T>, b: &CMat<T>) -> Complex<T> {
    let mut acc = czero();
    for i in 0..a.nrows() {
        for k in 0..a.ncols() {
            acc += a[(i, k)] * b[(k, i)];
        }
    }
    acc
}

/// `v^† M v`.
pub fn quad_form<T: Scalar>(m: &CMat<T>, v: &CVec<T>) -> Complex<T> {
    (v.adjoint() * m * v)[(0, 0)]
}

#[cfg(test)]
mod tests {
    use super::*;

    fn random_hermitian(n: usize, seed: u64) -> CMat<f64> {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let a = CMat::<f64>::from_fn(n, n, |_, _| {
            Complex::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)
        });
        &a * a.adjoint()
    }

    #[test]
    fn hadamard_orthogonality() {
        for n in [1usize, 2, 4, 16, 3, 6] {
            let p = orthogonal_mapping::<f64>(n);
            let g = &p * p.adjoint();
            let target = CMat::<f64>::identity(n, n).map(|z| z.scale(n as f64));
            assert!(max_abs(&(g - target)) < 1e-10, "n={n}");
        }
    }

    #[test]
    fn embedding_round_trip_and_trace() {
        let x = random_hermitian(5, 1);
        let a = random_hermitian(5, 2);
        let back = extract_hermitian(&embed_hermitian(&x));
        assert!(max_abs(&(back - &x)) < 1e-14);
        let t_real = (embed_hermitian(&x) * embed_hermitian(&a)).trace();
        let t_cplx = trace_product(&x, &a);
        assert!((t_real - 2.0 * t_cplx.re).abs() < 1e-12);
    }

    #[test]
    fn sqrt_squares_back() {
        let m = random_hermitian(6, 3);
        let r = psd_sqrt(&m);
        assert!(max_abs(&(&r * &r - &m)) < 1e-12);
        let ri = psd_pinv_sqrt(&m, 1e-12);
        let eye = &ri * &m * &ri;
        assert!(max_abs(&(eye - CMat::<f64>::identity(6, 6))) < 1e-9);
    }

    #[test]
    fn eigenvalues_descending() {
        let (v, _) = hermitian_eig(&random_hermitian(7, 4));
        assert!(v.windows(2).all(|w| w[0] >= w[1]));
    }
}
