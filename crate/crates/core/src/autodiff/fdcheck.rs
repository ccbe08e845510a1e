//! Central finite-difference checks of analytic derivatives.
//!
//! Relative errors are measured against the largest reference entry of the
//! same block (all first derivatives, all second derivatives, or the whole
//! parameter gradient), so near-zero entries are judged on the scale of
//! their siblings rather than blowing up.

use super::jet::{Jet2, PAIRS};

/// Default step for input derivatives.
pub const INPUT_STEP: f64 = 1e-4;
/// Default step for parameter gradients.
pub const PARAM_STEP: f64 = 1e-5;

#[derive(Clone, Debug, PartialEq)]
pub struct FdEntry {
    pub label: String,
    pub analytic: f64,
    pub numeric: f64,
    pub abs_err: f64,
    pub rel_err: f64,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct FdReport {
    pub entries: Vec<FdEntry>,
}

impl FdReport {
    pub fn max_abs(&self) -> f64 {
        self.entries.iter().map(|e| e.abs_err).fold(0.0, f64::max)
    }

    pub fn max_rel(&self) -> f64 {
        self.entries.iter().map(|e| e.rel_err).fold(0.0, f64::max)
    }

    pub fn get(&self, label: &str) -> Option<&FdEntry> {
        self.entries.iter().find(|e| e.label == label)
    }

    pub fn worst(&self) -> Option<&FdEntry> {
        self.entries
            .iter()
            .max_by(|a, b| a.rel_err.total_cmp(&b.rel_err))
    }

    fn push_block(&mut self, labels: Vec<String>, analytic: &[f64], numeric: &[f64]) {
        let scale = analytic
            .iter()
            .chain(numeric)
            .map(|v| v.abs())
            .fold(0.0, f64::max);
        for ((label, &a), &n) in labels.into_iter().zip(analytic).zip(numeric) {
            let abs_err = (a - n).abs();
            let rel_err = if scale > 0.0 { abs_err / scale } else { 0.0 };
            self.entries.push(FdEntry {
                label,
                analytic: a,
                numeric: n,
                abs_err,
                rel_err,
            });
        }
    }

    pub fn merge(&mut self, other: FdReport) {
        self.entries.extend(other.entries);
    }
}

const AXES: [&str; 3] = ["x", "z", "t"];

/// Central-difference first and second partials of `f` at `point`.
///
/// Returns a jet whose derivative slots hold the finite-difference estimates.
pub fn fd_jet(f: impl Fn([f64; 3]) -> f64, point: [f64; 3], step: f64) -> Jet2 {
    assert!(step > 0.0, "finite-difference step must be positive");
    let at = |dx: [f64; 3]| f([point[0] + dx[0], point[1] + dx[1], point[2] + dx[2]]);
    let e = |i: usize, s: f64| {
        let mut d = [0.0; 3];
        d[i] = s;
        d
    };
    let f0 = at([0.0; 3]);
    let mut jet = Jet2::constant(f0);
    for i in 0..3 {
        jet.d1[i] = (at(e(i, step)) - at(e(i, -step))) / (2.0 * step);
    }
    for (k, &(i, j)) in PAIRS.iter().enumerate() {
        jet.d2[k] = if i == j {
            (at(e(i, step)) - 2.0 * f0 + at(e(i, -step))) / (step * step)
        } else {
            let pp = at(add(e(i, step), e(j, step)));
            let pm = at(add(e(i, step), e(j, -step)));
            let mp = at(add(e(i, -step), e(j, step)));
            let mm = at(add(e(i, -step), e(j, -step)));
            (pp - pm - mp + mm) / (4.0 * step * step)
        };
    }
    jet
}

fn add(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [a[0] + b[0], a[1] + b[1], a[2] + b[2]]
}

/// Compares the derivative slots of `analytic` with central differences of
/// `f` at `point`. The value slot is reported under label `value`.
pub fn fd_check(
    f: impl Fn([f64; 3]) -> f64,
    analytic: &Jet2,
    point: [f64; 3],
    step: f64,
) -> FdReport {
    let numeric = fd_jet(f, point, step);
    let mut report = FdReport::default();
    report.push_block(vec!["value".into()], &[analytic.value], &[numeric.value]);
    report.push_block(
        AXES.iter().map(|a| format!("d{a}")).collect(),
        &analytic.d1,
        &numeric.d1,
    );
    report.push_block(
        PAIRS
            .iter()
            .map(|&(i, j)| format!("d{}{}", AXES[i], AXES[j]))
            .collect(),
        &analytic.d2,
        &numeric.d2,
    );
    report
}

/// Central-difference gradient of `f` over all parameters.
pub fn fd_gradient(f: impl Fn(&[f64]) -> f64, params: &[f64], step: f64) -> Vec<f64> {
    assert!(step > 0.0, "finite-difference step must be positive");
    let mut work = params.to_vec();
    (0..params.len())
        .map(|i| {
            let orig = work[i];
            work[i] = orig + step;
            let up = f(&work);
            work[i] = orig - step;
            let down = f(&work);
            work[i] = orig;
            (up - down) / (2.0 * step)
        })
        .collect()
}

/// Compares an analytic parameter gradient with central differences.
pub fn fd_check_gradient(
    f: impl Fn(&[f64]) -> f64,
    analytic: &[f64],
    params: &[f64],
    step: f64,
) -> FdReport {
    let numeric = fd_gradient(f, params, step);
    let mut report = FdReport::default();
    report.push_block(
        (0..params.len()).map(|i| format!("theta[{i}]")).collect(),
        analytic,
        &numeric,
    );
    report
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::autodiff::jet::{X, XZ, Z};

    #[test]
    fn sine_first_derivative() {
        let jet = Jet2::variable(0.0, X).sin();
        let r = fd_check(|p| p[0].sin(), &jet, [0.0, 0.0, 0.0], INPUT_STEP);
        assert!(r.get("dx").unwrap().abs_err < 1e-8);
    }

    #[test]
    fn bilinear_mixed_partial() {
        let p = [0.61, -0.23, 1.4];
        let jet = Jet2::variable(p[0], X) * Jet2::variable(p[1], Z);
        let r = fd_check(|q| q[0] * q[1], &jet, p, INPUT_STEP);
        assert!(r.get("dxz").unwrap().abs_err < 1e-6);
        assert_eq!(jet.d2[XZ], 1.0);
    }

    #[test]
    fn gradient_of_quadratic() {
        let params = [1.0, -2.0, 0.5];
        let f = |p: &[f64]| p[0] * p[0] + 3.0 * p[1] * p[2];
        let analytic = [2.0, 1.5, -6.0];
        let r = fd_check_gradient(f, &analytic, &params, PARAM_STEP);
        assert!(r.max_rel() < 1e-9, "{:?}", r.worst());
    }
}
