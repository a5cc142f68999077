//! Estimate-then-control law `u_t = K(Aᵗx̂_t + Σ_{i=1}^t A^{t−i}Bu_{i−1})` with a
//! deadbeat gain.
//!
//! The bracket reconstructs what the state would be if `x̂_t` were the true
//! initial condition, so the closed loop is `x_{t+1} = (A+BK)x_t + BKAᵗ(x̂_t − x₀)`.

use nalgebra::{DMatrix, DVector, RowDVector};

use crate::error::{Error, Result};

pub const DEFAULT_OVERFLOW_CAP: f64 = 1e150;

// relative singular value below which the controllability matrix is treated as singular
const CONTROLLABILITY_RCOND: f64 = 1e-12;

/// Single-input LTI plant `x_{t+1} = A x_t + B u_t`.
#[derive(Debug, Clone, PartialEq)]
pub struct PlantSpec {
    a: DMatrix<f64>,
    b: DVector<f64>,
}

impl PlantSpec {
    pub fn new(a: DMatrix<f64>, b: DVector<f64>) -> Result<Self> {
        let n = a.nrows();
        if n == 0 || a.ncols() != n {
            return Err(Error::InvalidPlant(format!("A must be square, got {}x{}", n, a.ncols())));
        }
        if b.len() != n {
            return Err(Error::InvalidPlant(format!("B has length {}, expected {n}", b.len())));
        }
        if a.iter().chain(b.iter()).any(|v| !v.is_finite()) {
            return Err(Error::InvalidPlant("non-finite entry".into()));
        }
        let eigs = a.clone().complex_eigenvalues();
        if let Some(e) = eigs.iter().find(|e| e.norm() < 1.0 - 1e-12) {
            return Err(Error::InvalidPlant(format!("stable eigenvalue {e}; all modes must satisfy |λ| >= 1")));
        }
        Ok(Self { a, b })
    }

    pub fn scalar(lambda: f64) -> Result<Self> {
        Self::new(DMatrix::from_element(1, 1, lambda), DVector::from_element(1, 1.0))
    }

    pub fn diagonal(lambdas: &[f64], b: &[f64]) -> Result<Self> {
        Self::new(
            DMatrix::from_diagonal(&DVector::from_column_slice(lambdas)),
            DVector::from_column_slice(b),
        )
    }

    pub fn dim(&self) -> usize {
        self.a.nrows()
    }

    pub fn a(&self) -> &DMatrix<f64> {
        &self.a
    }

    pub fn b(&self) -> &DVector<f64> {
        &self.b
    }

    /// Diagonal entries when `A` is diagonal.
    pub fn diagonal_entries(&self) -> Option<Vec<f64>> {
        let n = self.dim();
        for i in 0..n {
            for j in 0..n {
                if i != j && self.a[(i, j)] != 0.0 {
                    return None;
                }
            }
        }
        Some(self.a.diagonal().iter().copied().collect())
    }

    pub fn step(&self, x: &DVector<f64>, u: f64) -> DVector<f64> {
        &self.a * x + &self.b * u
    }

    pub fn controllability_matrix(&self) -> DMatrix<f64> {
        let n = self.dim();
        let mut c = DMatrix::zeros(n, n);
        let mut col = self.b.clone();
        for k in 0..n {
            c.set_column(k, &col);
            col = &self.a * col;
        }
        c
    }
}

/// Ackermann gain placing every closed-loop pole at the origin, so that
/// `(A+BK)ⁿ = 0`.
pub fn deadbeat_gain(plant: &PlantSpec) -> Result<RowDVector<f64>> {
    let n = plant.dim();
    let ctrb = plant.controllability_matrix();
    let sv = ctrb.clone().singular_values();
    let (smax, smin) = (sv.max(), sv.min());
    if !(smax > 0.0) || !smin.is_finite() || smin / smax < CONTROLLABILITY_RCOND {
        return Err(Error::Uncontrollable);
    }
    let mut last = DVector::zeros(n);
    last[n - 1] = 1.0;
    // row vector z with z·C = e_nᵀ
    let z = ctrb.transpose().lu().solve(&last).ok_or(Error::Uncontrollable)?;
    let a_pow_n = (0..n).fold(DMatrix::identity(n, n), |acc, _| plant.a() * acc);
    Ok(-(z.transpose() * a_pow_n))
}

/// Controller memory: `K`, `Aᵗ`, and the convolution sum `w_t`.
#[derive(Debug, Clone, PartialEq)]
pub struct ControllerState {
    pub gain: RowDVector<f64>,
    pub power_of_a: DMatrix<f64>,
    pub conv_sum: DVector<f64>,
    pub step: usize,
    pub overflow_cap: f64,
}

impl ControllerState {
    pub fn new(gain: RowDVector<f64>) -> Self {
        let n = gain.len();
        Self {
            gain,
            power_of_a: DMatrix::identity(n, n),
            conv_sum: DVector::zeros(n),
            step: 0,
            overflow_cap: DEFAULT_OVERFLOW_CAP,
        }
    }

    pub fn with_overflow_cap(mut self, cap: f64) -> Self {
        self.overflow_cap = cap;
        self
    }

    /// Computes `u_t` from the current estimate of `x₀` and advances the memory.
    pub fn input(&mut self, plant: &PlantSpec, estimate: &DVector<f64>) -> Result<f64> {
        let predicted = &self.power_of_a * estimate + &self.conv_sum;
        let u = self.gain.dot(&predicted.transpose());
        self.conv_sum = plant.a() * &self.conv_sum + plant.b() * u;
        self.power_of_a = plant.a() * &self.power_of_a;
        let cap = self.overflow_cap;
        let out_of_range = |v: &f64| !v.is_finite() || v.abs() > cap;
        if out_of_range(&u) || self.conv_sum.iter().any(out_of_range) || self.power_of_a.iter().any(out_of_range)
        {
            return Err(Error::HorizonOverflow { step: self.step });
        }
        self.step += 1;
        Ok(u)
    }
}

pub fn control_input(
    ctrl: &ControllerState,
    plant: &PlantSpec,
    estimate: &DVector<f64>,
) -> Result<(f64, ControllerState)> {
    let mut next = ctrl.clone();
    let u = next.input(plant, estimate)?;
    Ok((u, next))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn diag23(b: &[f64]) -> PlantSpec {
        PlantSpec::diagonal(&[2.0, 3.0], b).unwrap()
    }

    #[test]
    fn scalar_gain() {
        let k = deadbeat_gain(&PlantSpec::scalar(2.0).unwrap()).unwrap();
        assert!((k[0] + 2.0).abs() < 1e-12);
    }

    #[test]
    fn diagonal_gain_is_nilpotent() {
        let p = diag23(&[1.0, 1.0]);
        let k = deadbeat_gain(&p).unwrap();
        assert!((k[0] - 4.0).abs() < 1e-10 && (k[1] + 9.0).abs() < 1e-10, "{k}");
        let cl = p.a() + p.b() * &k;
        assert!((&cl * &cl).norm() < 1e-8);
    }

    #[test]
    fn unreachable_mode_is_uncontrollable() {
        assert_eq!(deadbeat_gain(&diag23(&[1.0, 0.0])), Err(Error::Uncontrollable));
        let repeated = PlantSpec::diagonal(&[1.5, 1.5], &[1.0, 1.0]).unwrap();
        assert_eq!(deadbeat_gain(&repeated), Err(Error::Uncontrollable));
    }

    #[test]
    fn plant_validation() {
        assert!(PlantSpec::scalar(0.5).is_err());
        assert!(PlantSpec::scalar(-1.2).is_ok());
        assert!(PlantSpec::new(DMatrix::zeros(2, 3), DVector::zeros(2)).is_err());
        assert!(PlantSpec::diagonal(&[2.0, 3.0], &[1.0]).is_err());
        assert!(PlantSpec::scalar(f64::NAN).is_err());
        assert_eq!(diag23(&[1.0, 1.0]).diagonal_entries(), Some(vec![2.0, 3.0]));
        let full = PlantSpec::new(DMatrix::from_row_slice(2, 2, &[2.0, 1.0, 0.0, 2.0]), DVector::from_element(2, 1.0))
            .unwrap();
        assert_eq!(full.diagonal_entries(), None);
    }

    #[test]
    fn jordan_block_is_controllable_from_last_state() {
        let p = PlantSpec::new(DMatrix::from_row_slice(2, 2, &[2.0, 1.0, 0.0, 2.0]), DVector::from_vec(vec![0.0, 1.0]))
            .unwrap();
        let k = deadbeat_gain(&p).unwrap();
        let cl = p.a() + p.b() * &k;
        assert!((&cl * &cl).norm() < 1e-8);
    }

    #[test]
    fn perfect_estimate_at_start_is_deadbeat() {
        let p = PlantSpec::scalar(2.0).unwrap();
        let mut ctrl = ControllerState::new(deadbeat_gain(&p).unwrap());
        let x0 = DVector::from_element(1, 0.7);
        let u = ctrl.input(&p, &x0).unwrap();
        assert!((u + 1.4).abs() < 1e-12);
        assert!(p.step(&x0, u).norm() < 1e-12);
    }

    #[test]
    fn zero_estimates_give_zero_inputs() {
        let p = diag23(&[1.0, 1.0]);
        let mut ctrl = ControllerState::new(deadbeat_gain(&p).unwrap());
        for _ in 0..10 {
            assert_eq!(ctrl.input(&p, &DVector::zeros(2)).unwrap(), 0.0);
        }
        assert_eq!(ctrl.power_of_a, DMatrix::from_diagonal(&DVector::from_vec(vec![1024.0, 59049.0])));
    }

    #[test]
    fn frozen_biased_estimate() {
        // x̂ ≡ x₀ + δ: x_t = −λᵗδ for t >= 1, both from the plant and the direct form
        let (lambda, x0, delta) = (2.0, 0.3, 0.05);
        let p = PlantSpec::scalar(lambda).unwrap();
        let mut ctrl = ControllerState::new(deadbeat_gain(&p).unwrap());
        let mut x = DVector::from_element(1, x0);
        let est = DVector::from_element(1, x0 + delta);
        for t in 1..30 {
            let u = ctrl.input(&p, &est).unwrap();
            x = p.step(&x, u);
            let direct = -lambda.powi(t) * delta;
            assert!(((x[0] - direct) / direct).abs() < 1e-9, "t={t}");
        }
    }

    #[test]
    fn perfect_estimate_held_after_any_step_is_deadbeat() {
        let p = diag23(&[1.0, 1.0]);
        let x0 = DVector::from_vec(vec![0.4, -0.9]);
        for t_star in 0..5 {
            let mut ctrl = ControllerState::new(deadbeat_gain(&p).unwrap());
            let mut x = x0.clone();
            for t in 0..t_star + 2 {
                let est = if t < t_star { DVector::from_vec(vec![0.1, 0.2]) } else { x0.clone() };
                let u = ctrl.input(&p, &est).unwrap();
                x = p.step(&x, u);
            }
            let scale = 3f64.powi(t_star + 2);
            assert!(x.norm() < 1e-12 * scale, "t*={t_star}: {x}");
        }
    }

    #[test]
    fn overflow_is_reported() {
        let p = PlantSpec::scalar(10.0).unwrap();
        let mut ctrl = ControllerState::new(deadbeat_gain(&p).unwrap()).with_overflow_cap(1e6);
        let est = DVector::from_element(1, 1.0);
        let mut hit = None;
        for _ in 0..20 {
            if let Err(e) = ctrl.input(&p, &est) {
                hit = Some(e);
                break;
            }
        }
        assert_eq!(hit, Some(Error::HorizonOverflow { step: 6 }));
    }

    #[test]
    fn functional_form_matches_in_place() {
        let p = diag23(&[1.0, 1.0]);
        let ctrl = ControllerState::new(deadbeat_gain(&p).unwrap());
        let est = DVector::from_vec(vec![0.3, 0.1]);
        let (u, next) = control_input(&ctrl, &p, &est).unwrap();
        let mut inplace = ctrl.clone();
        assert_eq!(inplace.input(&p, &est).unwrap(), u);
        assert_eq!(inplace, next);
        assert_eq!(next.step, 1);
    }
}
