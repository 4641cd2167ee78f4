use std::collections::VecDeque;

use nalgebra::{DMatrix, DVector};

use crate::{Error, Result};

/// Online estimate of the 3×d image Jacobian of the MRCP, plus the recent
/// (action, displacement) pairs used by the batched refit.
#[derive(Debug, Clone, PartialEq)]
pub struct JacobianEstimate {
    pub j: DMatrix<f64>,
    pub history: VecDeque<(DVector<f64>, DVector<f64>)>,
    pub history_len: usize,
    pub steps_since_improvement: usize,
    pub best_distance: f64,
}

impl JacobianEstimate {
    pub fn new(j: DMatrix<f64>, history_len: usize) -> Result<Self> {
        if j.nrows() != 3 || j.ncols() == 0 {
            return Err(Error::DimensionMismatch {
                expected: 3,
                got: j.nrows(),
            });
        }
        if j.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("jacobian"));
        }
        Ok(Self {
            j,
            history: VecDeque::with_capacity(history_len),
            history_len: history_len.max(1),
            steps_since_improvement: 0,
            best_distance: f64::INFINITY,
        })
    }

    pub fn dof(&self) -> usize {
        self.j.ncols()
    }

    fn push(&mut self, action: DVector<f64>, delta_s: DVector<f64>) {
        if self.history.len() == self.history_len {
            self.history.pop_front();
        }
        self.history.push_back((action, delta_s));
    }

    /// Rank-1 secant correction `J += (ΔS − J A) Aᵀ / ‖A‖²`. Afterwards
    /// `J A = ΔS` holds exactly.
    pub fn broyden_update(&mut self, action: &[f64], delta_s: &[f64; 3]) -> Result<()> {
        if action.len() != self.dof() {
            return Err(Error::DimensionMismatch {
                expected: self.dof(),
                got: action.len(),
            });
        }
        let a = DVector::from_column_slice(action);
        let ds = DVector::from_column_slice(delta_s);
        if a.iter().chain(ds.iter()).any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("broyden pair"));
        }
        let norm2 = a.norm_squared();
        if norm2 == 0.0 {
            return Err(Error::Domain("broyden update needs a non-zero action".into()));
        }
        let residual = &ds - &self.j * &a;
        self.j += residual * a.transpose() / norm2;
        self.push(a, ds);
        Ok(())
    }

    /// Ridge refit over the history window:
    /// `argmin Σ‖ΔS − J A‖² + λ‖J − J_prev‖²`, i.e.
    /// `J = (Σ ΔS Aᵀ + λ J_prev)(Σ A Aᵀ + λ I)⁻¹`.
    pub fn batched_update(&mut self, lambda: f64) -> Result<()> {
        if self.history.is_empty() {
            return Err(Error::Domain("batched update needs history".into()));
        }
        if !(lambda >= 0.0) {
            return Err(Error::InvalidConfig("ridge must be >= 0".into()));
        }
        let d = self.dof();
        let mut saa = DMatrix::<f64>::identity(d, d) * lambda;
        let mut ssa = &self.j * lambda;
        for (a, ds) in &self.history {
            saa += a * a.transpose();
            ssa += ds * a.transpose();
        }
        let inv = saa
            .pseudo_inverse(1e-12)
            .map_err(|e| Error::Domain(format!("batched update: {e}")))?;
        let j = ssa * inv;
        if j.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("batched jacobian"));
        }
        self.j = j;
        Ok(())
    }

    /// `η J† e` with a damped pseudo-inverse: singular values map to
    /// `σ / (σ² + λ')`, `λ' = damping · mean(σ²)`. The result is scaled down
    /// to `max_norm` if longer.
    pub fn control(&self, error: &[f64; 3], eta: f64, damping: f64, max_norm: f64) -> DVector<f64> {
        let e = DVector::from_column_slice(error);
        let svd = self.j.clone().svd(true, true);
        let (u, v_t) = (svd.u.expect("u"), svd.v_t.expect("v_t"));
        let sv = &svd.singular_values;
        let mean_sq = sv.iter().map(|s| s * s).sum::<f64>() / sv.len() as f64;
        let lam = damping * mean_sq;
        let ut_e = u.transpose() * e;
        let mut coeff = DVector::zeros(sv.len());
        let cutoff = sv.max() * 1e-12;
        for i in 0..sv.len() {
            let s = sv[i];
            if s > cutoff {
                coeff[i] = s / (s * s + lam) * ut_e[i];
            }
        }
        let mut a = v_t.transpose() * coeff * eta;
        let n = a.norm();
        if max_norm > 0.0 && n > max_norm {
            a *= max_norm / n;
        }
        a
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn jmat(rows: [[f64; 4]; 3]) -> DMatrix<f64> {
        DMatrix::from_fn(3, 4, |r, c| rows[r][c])
    }

    #[test]
    fn consistent_pair_leaves_j_unchanged() {
        let j = jmat([[1.0, 2.0, 0.0, -1.0], [0.5, 0.0, 3.0, 1.0], [0.0, 1.0, 1.0, 1.0]]);
        let mut est = JacobianEstimate::new(j.clone(), 10).unwrap();
        let a = [0.1, -0.2, 0.3, 0.05];
        let ds = &j * DVector::from_column_slice(&a);
        est.broyden_update(&a, &[ds[0], ds[1], ds[2]]).unwrap();
        assert!((est.j - j).abs().max() < 1e-15);
    }

    #[test]
    fn update_from_zero_fills_one_column() {
        let mut est = JacobianEstimate::new(DMatrix::zeros(3, 4), 10).unwrap();
        est.broyden_update(&[1.0, 0.0, 0.0, 0.0], &[3.0, -2.0, 0.5]).unwrap();
        assert_eq!(est.j.column(0).as_slice(), &[3.0, -2.0, 0.5]);
        assert!(est.j.columns(1, 3).iter().all(|&v| v == 0.0));
    }

    #[test]
    fn zero_action_rejected() {
        let mut est = JacobianEstimate::new(DMatrix::zeros(3, 2), 10).unwrap();
        assert!(est.broyden_update(&[0.0, 0.0], &[1.0, 1.0, 1.0]).is_err());
        assert!(est.broyden_update(&[1.0], &[1.0, 1.0, 1.0]).is_err());
    }

    #[test]
    fn cycling_converges_to_true_j() {
        let truth = jmat([[10.0, -3.0, 2.0, 0.5], [1.0, 8.0, -2.0, 3.0], [0.2, 0.4, 0.6, -0.3]]);
        let mut est = JacobianEstimate::new(DMatrix::zeros(3, 4), 10).unwrap();
        let basis = [
            [1.0, 0.2, 0.0, 0.0],
            [0.0, 1.0, 0.3, 0.0],
            [0.1, 0.0, 1.0, 0.2],
            [0.0, 0.3, 0.0, 1.0],
        ];
        for _ in 0..50 {
            for a in &basis {
                let ds = &truth * DVector::from_column_slice(a);
                est.broyden_update(a, &[ds[0], ds[1], ds[2]]).unwrap();
            }
        }
        assert!((est.j - truth).norm() < 1e-6);
    }

    #[test]
    fn history_is_bounded() {
        let mut est = JacobianEstimate::new(DMatrix::zeros(3, 1), 3).unwrap();
        for i in 1..=5 {
            est.broyden_update(&[i as f64], &[1.0, 0.0, 0.0]).unwrap();
        }
        assert_eq!(est.history.len(), 3);
        assert_eq!(est.history[0].0[0], 3.0);
    }

    #[test]
    fn batched_recovers_exact_j() {
        let truth = jmat([[10.0, -3.0, 2.0, 0.5], [1.0, 8.0, -2.0, 3.0], [0.2, 0.4, 0.6, -0.3]]);
        let mut est = JacobianEstimate::new(DMatrix::from_element(3, 4, 7.0), 10).unwrap();
        for i in 0..4 {
            let mut a = [0.01; 4];
            a[i] = 0.5;
            let ds = &truth * DVector::from_column_slice(&a);
            est.push(DVector::from_column_slice(&a), ds);
        }
        est.batched_update(1e-14).unwrap();
        assert!((est.j - truth).abs().max() < 1e-9);
    }

    #[test]
    fn heavy_ridge_keeps_previous() {
        let prev = jmat([[1.0, 0.0, 0.0, 0.0], [0.0, 1.0, 0.0, 0.0], [0.0, 0.0, 1.0, 0.0]]);
        let mut est = JacobianEstimate::new(prev.clone(), 10).unwrap();
        est.push(DVector::from_element(4, 0.1), DVector::from_element(3, 50.0));
        est.batched_update(1e9).unwrap();
        assert!((est.j - prev).abs().max() < 1e-6);
    }

    #[test]
    fn empty_history_rejected() {
        let mut est = JacobianEstimate::new(DMatrix::zeros(3, 2), 10).unwrap();
        assert!(est.batched_update(1e-4).is_err());
    }

    #[test]
    fn zero_error_gives_zero_action() {
        let est = JacobianEstimate::new(DMatrix::from_element(3, 4, 1.0), 10).unwrap();
        assert_eq!(est.control(&[0.0; 3], 0.2, 1e-3, 1.0).norm(), 0.0);
    }

    #[test]
    fn identity_padded_pseudo_inverse() {
        let j = jmat([[1.0, 0.0, 0.0, 0.0], [0.0, 1.0, 0.0, 0.0], [0.0, 0.0, 1.0, 0.0]]);
        let est = JacobianEstimate::new(j, 10).unwrap();
        let a = est.control(&[0.3, -0.2, 0.1], 1.0, 0.0, 0.0);
        let expect = [0.3, -0.2, 0.1, 0.0];
        for (x, y) in a.iter().zip(expect) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn rank_deficient_j_stays_finite() {
        let j = jmat([[2.0, 0.0, 1.0, 0.0], [0.0, 3.0, 1.0, 0.0], [1.0, 1.0, 0.0, 0.0]]);
        let est = JacobianEstimate::new(j, 10).unwrap();
        let a = est.control(&[5.0, -4.0, 1.0], 0.5, 1e-3, 0.0);
        assert!(a.iter().all(|v| v.is_finite()));
        assert!(a[3].abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn broyden_satisfies_secant(
            j in prop::collection::vec(-5.0f64..5.0, 12),
            a in prop::collection::vec(-1.0f64..1.0, 4),
            ds in prop::collection::vec(-10.0f64..10.0, 3),
        ) {
            prop_assume!(a.iter().map(|v| v * v).sum::<f64>() > 1e-3);
            let mut est = JacobianEstimate::new(DMatrix::from_row_slice(3, 4, &j), 10).unwrap();
            est.broyden_update(&a, &[ds[0], ds[1], ds[2]]).unwrap();
            let got = &est.j * DVector::from_column_slice(&a);
            for r in 0..3 {
                prop_assert!((got[r] - ds[r]).abs() < 1e-9);
            }
        }

        #[test]
        fn control_respects_bound(
            j in prop::collection::vec(-50.0f64..50.0, 12),
            e in prop::collection::vec(-300.0f64..300.0, 3),
            bound in 0.01f64..1.0,
        ) {
            let est = JacobianEstimate::new(DMatrix::from_row_slice(3, 4, &j), 10).unwrap();
            let a = est.control(&[e[0], e[1], e[2]], 0.5, 1e-3, bound);
            prop_assert!(a.norm() <= bound * (1.0 + 1e-12));
        }
    }
}
