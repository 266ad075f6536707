/// `J_0(t), ..., J_{n_max}(t)` by Miller's backward recurrence, normalized
/// with `J_0 + 2 Σ_k J_{2k} = 1`.
pub fn bessel_j(n_max: usize, t: f64) -> Vec<f64> {
    let mut out = vec![0.0; n_max + 1];
    if t == 0.0 {
        out[0] = 1.0;
        return out;
    }
    let x = t.abs();
    let top = (n_max as f64).max(x);
    let mut m = (top + 20.0 + (40.0 * top).sqrt()) as usize;
    m += m % 2;
    let mut j = vec![0.0; m + 2];
    j[m] = 1e-30;
    for k in (1..=m).rev() {
        j[k - 1] = 2.0 * k as f64 / x * j[k] - j[k + 1];
        if j[k - 1].abs() > 1e250 {
            j.iter_mut().for_each(|v| *v *= 1e-250);
        }
    }
    let norm = j[0] + 2.0 * j.iter().skip(2).step_by(2).sum::<f64>();
    for (n, o) in out.iter_mut().enumerate() {
        let v = j[n] / norm;
        *o = if t < 0.0 && n % 2 == 1 { -v } else { v };
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    /// `J_n(t) = (1/π) ∫_0^π cos(nτ − t sin τ) dτ`; the integrand is even and
    /// periodic, so the trapezoid rule converges spectrally.
    fn quadrature(n: usize, t: f64) -> f64 {
        let m = 4000;
        let h = PI / m as f64;
        let f = |tau: f64| (n as f64 * tau - t * tau.sin()).cos();
        let inner: f64 = (1..m).map(|k| f(k as f64 * h)).sum();
        (inner + 0.5 * (f(0.0) + f(PI))) * h / PI
    }

    #[test]
    fn matches_integral_representation() {
        for &t in &[0.1, 1.0, 2.5, 5.0, -3.0, 17.0, 40.0] {
            let j = bessel_j(60, t);
            for n in 0..=60 {
                assert!((j[n] - quadrature(n, t)).abs() < 1e-13, "J_{n}({t}) = {} vs {}", j[n], quadrature(n, t));
            }
        }
    }

    #[test]
    fn zero_argument() {
        assert_eq!(bessel_j(3, 0.0), vec![1.0, 0.0, 0.0, 0.0]);
    }

    #[test]
    fn known_value() {
        // J_0(1) to 16 digits.
        assert!((bessel_j(0, 1.0)[0] - 0.765_197_686_557_966_6).abs() < 1e-15);
    }
}
