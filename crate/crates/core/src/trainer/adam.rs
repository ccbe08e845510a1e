use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AdamConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        AdamConfig {
            learning_rate: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

impl AdamConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate >= 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::invalid(
                "learning rate must be finite and non-negative",
            ));
        }
        if !(0.0..1.0).contains(&self.beta1) || !(0.0..1.0).contains(&self.beta2) {
            return Err(Error::invalid("Adam betas must lie in [0, 1)"));
        }
        if self.eps.is_nan() || self.eps <= 0.0 {
            return Err(Error::invalid("Adam epsilon must be positive"));
        }
        Ok(())
    }
}

/// First and second moment estimates with the step counter.
#[derive(Clone, Debug, PartialEq)]
pub struct AdamState {
    pub m: Vec<f64>,
    pub v: Vec<f64>,
    pub step: u64,
}

impl AdamState {
    pub fn new(len: usize) -> Self {
        AdamState {
            m: vec![0.0; len],
            v: vec![0.0; len],
            step: 0,
        }
    }

    pub fn len(&self) -> usize {
        self.m.len()
    }

    pub fn is_empty(&self) -> bool {
        self.m.is_empty()
    }

    /// One bias-corrected Adam update of `params` in place.
    ///
    /// The gradient is checked before anything is modified, so on error
    /// both `params` and the state are untouched.
    pub fn step(&mut self, params: &mut [f64], grad: &[f64], cfg: &AdamConfig) -> Result<()> {
        if params.len() != self.len() || grad.len() != self.len() {
            return Err(Error::invalid(format!(
                "Adam shapes differ: state {}, params {}, grad {}",
                self.len(),
                params.len(),
                grad.len()
            )));
        }
        if let Some(i) = grad.iter().position(|g| !g.is_finite()) {
            return Err(Error::NonFinite {
                what: format!("gradient entry {i}"),
            });
        }
        self.step += 1;
        let t = i32::try_from(self.step).unwrap_or(i32::MAX);
        let c1 = 1.0 - cfg.beta1.powi(t);
        let c2 = 1.0 - cfg.beta2.powi(t);
        let (a1, a2) = (1.0 - cfg.beta1, 1.0 - cfg.beta2);
        for i in 0..params.len() {
            let g = grad[i];
            self.m[i] = cfg.beta1 * self.m[i] + a1 * g;
            self.v[i] = cfg.beta2 * self.v[i] + a2 * g * g;
            let m_hat = self.m[i] / c1;
            let v_hat = self.v[i] / c2;
            params[i] -= cfg.learning_rate * m_hat / (v_hat.sqrt() + cfg.eps);
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn first_step_uses_unit_moments() {
        let cfg = AdamConfig::default();
        let mut st = AdamState::new(3);
        let mut p = [0.5, -2.0, 7.0];
        st.step(&mut p, &[1.0, 1.0, 1.0], &cfg).unwrap();
        let du = -1e-3 * (1.0 / (1.0 + 1e-8));
        assert_eq!(p, [0.5 + du, -2.0 + du, 7.0 + du]);
        assert_eq!(st.step, 1);
    }

    #[test]
    fn zero_gradient_is_a_no_op() {
        let mut st = AdamState::new(2);
        let mut p = [1.0, 2.0];
        st.step(&mut p, &[0.0, 0.0], &AdamConfig::default())
            .unwrap();
        assert_eq!(p, [1.0, 2.0]);
    }

    /// θ ← Adam on L(θ) = θ², θ₀ = 1, lr = 0.1, reference from 50-digit
    /// evaluation of the recurrences.
    #[test]
    fn three_step_trace() {
        let cfg = AdamConfig {
            learning_rate: 0.1,
            ..AdamConfig::default()
        };
        let table = [
            (0.2, 0.004, 0.9000000005),
            (0.3600000001, 0.0072360000036, 0.8004122286917922),
            (0.4840824458283584, 0.009791402946953846, 0.7015862729460296),
        ];
        let mut st = AdamState::new(1);
        let mut theta = [1.0];
        for (m, v, th) in table {
            let g = 2.0 * theta[0];
            st.step(&mut theta, &[g], &cfg).unwrap();
            assert!((st.m[0] - m).abs() <= 1e-15);
            assert!((st.v[0] - v).abs() <= 1e-15);
            assert!((theta[0] - th).abs() <= 1e-15, "{} vs {th}", theta[0]);
        }
    }

    #[test]
    fn non_finite_gradient_names_index_and_leaves_state() {
        let mut st = AdamState::new(3);
        let mut p = [1.0, 2.0, 3.0];
        let err = st
            .step(&mut p, &[0.1, f64::NAN, 0.2], &AdamConfig::default())
            .unwrap_err();
        assert!(err.to_string().contains("gradient entry 1"));
        assert_eq!(st, AdamState::new(3));
        assert_eq!(p, [1.0, 2.0, 3.0]);
    }

    #[test]
    fn config_invariants() {
        assert!(AdamConfig {
            beta1: 1.0,
            ..Default::default()
        }
        .validate()
        .is_err());
        assert!(AdamConfig {
            eps: 0.0,
            ..Default::default()
        }
        .validate()
        .is_err());
        assert!(AdamConfig::default().validate().is_ok());
    }
}
