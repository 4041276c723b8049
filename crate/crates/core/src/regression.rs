//! Ordinary least squares on a straight line.

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub residual_max: f64,
    /// Standard error of the slope; zero when fewer than three points.
    pub slope_stderr: f64,
}

/// Fits `y ≈ intercept + slope·x`. Callers guarantee at least two points with
/// distinct abscissae.
pub fn fit_line(xs: &[f64], ys: &[f64]) -> LineFit {
    debug_assert_eq!(xs.len(), ys.len());
    let m = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / m;
    let my = ys.iter().sum::<f64>() / m;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let residuals = xs.iter().zip(ys).map(|(x, y)| y - (intercept + slope * x));
    let (ss_res, residual_max) = residuals.fold((0.0, 0.0f64), |(ss, mx), r| (ss + r * r, mx.max(r.abs())));
    let r_squared = if syy > 0.0 {
        (1.0 - ss_res / syy).clamp(0.0, 1.0)
    } else {
        1.0
    };
    let slope_stderr = if xs.len() > 2 {
        (ss_res / (m - 2.0) / sxx).sqrt()
    } else {
        0.0
    };
    LineFit {
        slope,
        intercept,
        r_squared,
        residual_max,
        slope_stderr,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_line() {
        let xs = [1.0, 2.0, 3.0, 4.0];
        let ys = [3.0, 5.0, 7.0, 9.0];
        let f = fit_line(&xs, &ys);
        assert!((f.slope - 2.0).abs() < 1e-14);
        assert!((f.intercept - 1.0).abs() < 1e-14);
        assert_eq!(f.r_squared, 1.0);
        assert!(f.residual_max < 1e-14);
    }

    #[test]
    fn noisy_line_has_stderr() {
        let xs = [0.0, 1.0, 2.0, 3.0, 4.0];
        let ys = [0.1, 0.9, 2.2, 2.8, 4.1];
        let f = fit_line(&xs, &ys);
        assert!(f.slope_stderr > 0.0 && f.r_squared < 1.0 && f.r_squared > 0.95);
    }
}
