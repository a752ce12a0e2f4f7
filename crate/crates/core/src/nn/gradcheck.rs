// Licensed under the Apache License, Version 2.0 (the "License"); you may
// not use this file except in compliance with the License. You may obtain
// a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS, WITHOUT
// WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied. See the
// License for the specific language governing permissions and limitations
// under the License.

/// Relative error between an analytic and a numeric derivative. The
/// denominator is floored so derivatives that are zero up to rounding do not
/// dominate the result.
pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    let denom = (analytic.abs() + numeric.abs()).max(1e-6);
    (analytic - numeric).abs() / denom
}

/// Compares the gradient returned by `loss` against central differences for
/// every parameter and reports the largest relative error.
///
/// `loss` returns the loss value and its analytic gradient at the given
/// parameters.
pub fn grad_check<F>(loss: F, params: &[f64], epsilon: f64) -> f64
where
    F: Fn(&[f64]) -> (f64, Vec<f64>),
{
    let (_, analytic) = loss(params);
    let mut probe = params.to_vec();
    let mut worst = 0.0f64;
    for i in 0..params.len() {
        probe[i] = params[i] + epsilon;
        let (plus, _) = loss(&probe);
        probe[i] = params[i] - epsilon;
        let (minus, _) = loss(&probe);
        probe[i] = params[i];
        let numeric = (plus - minus) / (2.0 * epsilon);
        worst = worst.max(relative_error(analytic[i], numeric));
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_gradient_passes() {
        let f = |p: &[f64]| (p[0] * p[0] + 3.0 * p[1], vec![2.0 * p[0], 3.0]);
        assert!(grad_check(f, &[1.5, -2.0], 1e-5) < 1e-8);
    }

    #[test]
    fn wrong_gradient_is_caught() {
        let f = |p: &[f64]| (p[0] * p[0], vec![p[0]]);
        assert!(grad_check(f, &[1.0], 1e-5) > 0.1);
    }
}
