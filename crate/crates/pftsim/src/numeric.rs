//! Shared numerical helpers: symplectic linear algebra, Cayley propagators,
//! and convergence-order fits.

use nalgebra::DMatrix;

/// Standard symplectic matrix on (phi_1..phi_n, pi_1..pi_n) ordering:
/// Omega = [[0, I], [-I, 0]].
pub fn symplectic_omega(n_sites: usize) -> DMatrix<f64> {
    let n = 2 * n_sites;
    let mut omega = DMatrix::zeros(n, n);
    for i in 0..n_sites {
        omega[(i, n_sites + i)] = 1.0;
        omega[(n_sites + i, i)] = -1.0;
    }
    omega
}

/// Left-multiplication by Omega without forming the matrix:
/// (Omega m) swaps the phi/pi row blocks with a sign.
pub fn omega_mul(m: &DMatrix<f64>) -> DMatrix<f64> {
    let n = m.nrows() / 2;
    let mut out = DMatrix::zeros(m.nrows(), m.ncols());
    out.rows_mut(0, n).copy_from(&m.rows(n, n));
    let mut top = out.rows_mut(n, n);
    top.copy_from(&m.rows(0, n));
    top.neg_mut();
    out
}

/// Right-multiplication m * Omega.
pub fn mul_omega(m: &DMatrix<f64>) -> DMatrix<f64> {
    let n = m.ncols() / 2;
    let mut out = DMatrix::zeros(m.nrows(), m.ncols());
    out.columns_mut(n, n).copy_from(&m.columns(0, n));
    let mut left = out.columns_mut(0, n);
    left.copy_from(&m.columns(n, n));
    left.neg_mut();
    out
}

/// Max-abs deviation of S Omega S^T from Omega.
pub fn symplectic_drift(s: &DMatrix<f64>) -> f64 {
    let n = s.nrows() / 2;
    let som = mul_omega(s);
    let mut res = som * s.transpose();
    for i in 0..n {
        res[(i, n + i)] -= 1.0;
        res[(n + i, i)] += 1.0;
    }
    res.amax()
}

/// Symplectic inverse S^{-1} = Omega^T S^T Omega, exact for symplectic S.
pub fn symplectic_inverse(s: &DMatrix<f64>) -> DMatrix<f64> {
    // Omega^T M Omega with Omega^T = -Omega.
    let st = s.transpose();
    let tmp = omega_mul(&st);
    let mut out = mul_omega(&tmp);
    out.neg_mut();
    out
}

/// Cayley transform (I - K/2)^{-1} (I + K/2) of a Hamiltonian matrix K.
/// Exactly symplectic whenever K = Omega M with M symmetric.
pub fn cayley(k: &DMatrix<f64>) -> Option<DMatrix<f64>> {
    let n = k.nrows();
    let eye = DMatrix::identity(n, n);
    let a = &eye - k.scale(0.5);
    let b = &eye + k.scale(0.5);
    a.lu().solve(&b)
}

/// Spectral-norm estimate by power iteration on K^T K, padded by a safety
/// factor. Deterministic (fixed start vector).
pub fn spectral_norm_estimate(k: &DMatrix<f64>) -> f64 {
    let n = k.ncols();
    let mut v = nalgebra::DVector::from_element(n, 1.0 / (n as f64).sqrt());
    let mut sigma = 0.0;
    for _ in 0..12 {
        let w = k * &v;
        sigma = w.norm();
        if sigma == 0.0 {
            return 0.0;
        }
        v = k.transpose() * w;
        let nv = v.norm();
        if nv == 0.0 {
            return 0.0;
        }
        v /= nv;
    }
    1.2 * sigma.max(k.amax())
}

/// exp(K) for a Hamiltonian matrix K = Omega M, by scaling and squaring of
/// the diagonal Pade(2,2) approximant
///   R(z) = (1 + z/2 + z^2/12) / (1 - z/2 + z^2/12),
/// which maps Hamiltonian matrices to exactly symplectic ones
/// (R(z) R(-z) = 1). The substep count balances the fifth-order truncation
/// defect against roundoff amplified by the squarings.
pub fn symplectic_exp(k: &DMatrix<f64>) -> Option<DMatrix<f64>> {
    let n = k.nrows();
    let norm = spectral_norm_estimate(k);
    if norm == 0.0 {
        return Some(DMatrix::identity(n, n));
    }
    // truncation ~ norm^5 / (720 * 16^m), roundoff ~ 2^m eps: balance at
    // 32^m = norm^5 / (180 eps)
    let m_opt = (norm.powi(5) / (180.0 * f64::EPSILON)).ln() / 32f64.ln();
    let m_min = (norm / 0.5).ln() / 2f64.ln();
    let m = m_opt.max(m_min).max(0.0).ceil().min(48.0) as u32;
    let b = k.scale(1.0 / 2f64.powi(m as i32));
    let b2 = (&b * &b).scale(1.0 / 12.0);
    let eye = DMatrix::identity(n, n);
    let num = &eye + b.scale(0.5) + &b2;
    let den = &eye - b.scale(0.5) + &b2;
    let mut s = den.lu().solve(&num)?;
    for _ in 0..m {
        s = &s * &s;
    }
    if symplectic_drift(&s) > 1e-13 {
        s = symplectify(&s);
    }
    Some(s)
}

/// One Newton-Schulz step restoring S^+ S = I, where S^+ is the symplectic
/// inverse. Quadratically contracts small symplecticity drift.
pub fn symplectify(s: &DMatrix<f64>) -> DMatrix<f64> {
    let n = s.nrows();
    let sp = symplectic_inverse(s);
    let mut corr = DMatrix::identity(n, n).scale(3.0) - sp * s;
    corr.scale_mut(0.5);
    s * corr
}

/// Least-squares slope of log(err) against log(h). Pairs with non-positive
/// entries are skipped.
pub fn fit_order(hs: &[f64], errs: &[f64]) -> f64 {
    let pts: Vec<(f64, f64)> = hs
        .iter()
        .zip(errs)
        .filter(|(h, e)| **h > 0.0 && **e > 0.0)
        .map(|(h, e)| (h.ln(), e.ln()))
        .collect();
    if pts.len() < 2 {
        return f64::NAN;
    }
    let n = pts.len() as f64;
    let sx: f64 = pts.iter().map(|p| p.0).sum();
    let sy: f64 = pts.iter().map(|p| p.1).sum();
    let sxx: f64 = pts.iter().map(|p| p.0 * p.0).sum();
    let sxy: f64 = pts.iter().map(|p| p.0 * p.1).sum();
    (n * sxy - sx * sy) / (n * sxx - sx * sx)
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DVector;

    #[test]
    fn omega_shortcuts_match_dense_product() {
        let n = 3;
        let omega = symplectic_omega(n);
        let m = DMatrix::from_fn(2 * n, 2 * n, |i, j| ((i * 7 + j * 3) % 11) as f64 - 5.0);
        assert_eq!(omega_mul(&m), &omega * &m);
        assert_eq!(mul_omega(&m), &m * &omega);
    }

    #[test]
    fn cayley_of_hamiltonian_matrix_is_symplectic() {
        let n = 4;
        let mut sym = DMatrix::from_fn(2 * n, 2 * n, |i, j| ((i + 2 * j) % 5) as f64 * 0.1);
        sym = (&sym + sym.transpose()).scale(0.5);
        let k = omega_mul(&sym);
        let s = cayley(&k.scale(0.05)).unwrap();
        assert!(symplectic_drift(&s) < 1e-14);
    }

    #[test]
    fn symplectic_exp_matches_rotation() {
        // single oscillator: K = omega * J rotates phase space
        let w = 0.7_f64;
        let mut k = DMatrix::zeros(2, 2);
        k[(0, 1)] = w;
        k[(1, 0)] = -w;
        let s = symplectic_exp(&k).unwrap();
        let z = DVector::from_vec(vec![1.0, 0.0]);
        let z1 = &s * z;
        assert!((z1[0] - w.cos()).abs() < 1e-12, "err {:.3e}", (z1[0] - w.cos()).abs());
        assert!((z1[1] + w.sin()).abs() < 1e-12);
        assert!(symplectic_drift(&s) < 1e-13);
    }

    #[test]
    fn symplectic_exp_large_generator() {
        // stiff but structured: block rotations with spread frequencies
        let n = 6;
        let mut sym = DMatrix::zeros(2 * n, 2 * n);
        for i in 0..n {
            let w = 1.0 + 3.0 * i as f64;
            sym[(i, i)] = w;
            sym[(n + i, n + i)] = w;
        }
        let k = omega_mul(&sym);
        let s = symplectic_exp(&k).unwrap();
        for i in 0..n {
            let w = 1.0 + 3.0 * i as f64;
            assert!((s[(i, i)] - w.cos()).abs() < 1e-10, "mode {i}");
            assert!((s[(i, n + i)] - w.sin()).abs() < 1e-10, "mode {i}");
        }
        assert!(symplectic_drift(&s) < 1e-12);
    }

    #[test]
    fn fit_order_recovers_power_law() {
        let hs = [0.1, 0.05, 0.025, 0.0125];
        let errs: Vec<f64> = hs.iter().map(|h| 3.0 * h * h).collect();
        assert!((fit_order(&hs, &errs) - 2.0).abs() < 1e-10);
    }
}
