use crate::ndmath::Tensor;

const MAX_SWEEPS: usize = 60;

/// Singular values in descending order, by one-sided Jacobi rotations.
pub fn singular_values(a: &Tensor) -> Vec<f64> {
    // Work on columns of A (or of Aᵀ when it is wide, which has the same spectrum).
    let m = if a.rows() >= a.cols() {
        a.clone()
    } else {
        a.transpose()
    };
    let (rows, cols) = m.shape();
    let mut colv: Vec<Vec<f64>> = (0..cols)
        .map(|j| (0..rows).map(|i| m.get(i, j)).collect())
        .collect();

    for _ in 0..MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..cols {
            for q in p + 1..cols {
                let (alpha, beta, gamma) = {
                    let (cp, cq) = (&colv[p], &colv[q]);
                    let mut a = 0.0;
                    let mut b = 0.0;
                    let mut g = 0.0;
                    for (x, y) in cp.iter().zip(cq) {
                        a += x * x;
                        b += y * y;
                        g += x * y;
                    }
                    (a, b, g)
                };
                if gamma == 0.0 || gamma.abs() <= 1e-15 * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let t = if zeta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                let (left, right) = colv.split_at_mut(q);
                let (cp, cq) = (&mut left[p], &mut right[0]);
                for (x, y) in cp.iter_mut().zip(cq.iter_mut()) {
                    let (xp, yq) = (*x, *y);
                    *x = c * xp - s * yq;
                    *y = s * xp + c * yq;
                }
            }
        }
        if !rotated {
            break;
        }
    }

    let mut sv: Vec<f64> = colv
        .iter()
        .map(|c| c.iter().map(|x| x * x).sum::<f64>().sqrt())
        .collect();
    sv.sort_by(|a, b| b.total_cmp(a));
    sv
}

/// Count of singular values above `rel_tol * sigma_max`.
pub fn numerical_rank(a: &Tensor, rel_tol: f64) -> usize {
    let sv = singular_values(a);
    let Some(&max) = sv.first() else { return 0 };
    if max == 0.0 {
        return 0;
    }
    sv.iter().filter(|&&s| s > rel_tol * max).count()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_rank() {
        assert_eq!(numerical_rank(&Tensor::identity(4), 1e-6), 4);
    }

    #[test]
    fn ones_rank() {
        assert_eq!(numerical_rank(&Tensor::ones(5, 5), 1e-6), 1);
        let sv = singular_values(&Tensor::ones(5, 5));
        assert!((sv[0] - 5.0).abs() < 1e-12);
    }

    #[test]
    fn zero_rank() {
        assert_eq!(numerical_rank(&Tensor::zeros(3, 3), 1e-6), 0);
    }

    #[test]
    fn known_spectrum() {
        // [[3,0],[4,5]] has singular values sqrt(45) and sqrt(5).
        let a = Tensor::from_rows(&[[3.0, 0.0], [4.0, 5.0]]);
        let sv = singular_values(&a);
        assert!((sv[0] - 45f64.sqrt()).abs() < 1e-12);
        assert!((sv[1] - 5f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn wide_matrix() {
        let a = Tensor::from_rows(&[[1.0, 2.0, 3.0], [2.0, 4.0, 6.0]]);
        assert_eq!(numerical_rank(&a, 1e-6), 1);
    }
}
