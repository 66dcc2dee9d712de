//! Sample statistics: unbiased moments, delete-one jackknife errors and
//! least-squares line fits.

pub fn mean(data: &[f64]) -> f64 {
    data.iter().sum::<f64>() / data.len() as f64
}

/// Unbiased sample variance; `NaN` for fewer than two samples.
pub fn unbiased_variance(data: &[f64]) -> f64 {
    let n = data.len();
    if n < 2 {
        return f64::NAN;
    }
    let m = mean(data);
    data.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (n - 1) as f64
}

/// Jackknife standard error from the leave-one-out replicates.
fn jackknife_from_replicates(replicates: &[f64]) -> f64 {
    let n = replicates.len() as f64;
    let m = mean(replicates);
    let ss: f64 = replicates.iter().map(|t| (t - m) * (t - m)).sum();
    ((n - 1.0) / n * ss).sqrt()
}

/// Delete-one jackknife standard error of an arbitrary estimator. Costs
/// `n` evaluations of the estimator on `n − 1` points.
pub fn jackknife_se<F>(data: &[f64], estimator: F) -> f64
where
    F: Fn(&[f64]) -> f64,
{
    let n = data.len();
    if n < 2 {
        return f64::NAN;
    }
    let mut buf = Vec::with_capacity(n - 1);
    let replicates: Vec<f64> = (0..n)
        .map(|i| {
            buf.clear();
            buf.extend_from_slice(&data[..i]);
            buf.extend_from_slice(&data[i + 1..]);
            estimator(&buf)
        })
        .collect();
    jackknife_from_replicates(&replicates)
}

/// Jackknife standard error of the sample mean (equals `s/√n`).
pub fn mean_jackknife_se(data: &[f64]) -> f64 {
    let n = data.len();
    if n < 2 {
        return f64::NAN;
    }
    (unbiased_variance(data) / n as f64).sqrt()
}

/// Jackknife standard error of the unbiased variance, in linear time.
///
/// With `d_i = x_i − x̄` and `S = Σ d_i²`, removing sample `i` leaves
/// `S − n d_i² / (n − 1)` as the centred sum of squares.
pub fn variance_jackknife_se(data: &[f64]) -> f64 {
    let n = data.len();
    if n < 3 {
        return f64::NAN;
    }
    let m = mean(data);
    let nf = n as f64;
    let s: f64 = data.iter().map(|x| (x - m) * (x - m)).sum();
    let replicates: Vec<f64> = data
        .iter()
        .map(|x| {
            let d = x - m;
            ((s - nf * d * d / (nf - 1.0)) / (nf - 2.0)).max(0.0)
        })
        .collect();
    jackknife_from_replicates(&replicates)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    /// Standard error of the slope; needs at least three points.
    pub slope_se: Option<f64>,
}

/// Ordinary least squares `y ≈ intercept + slope·x`. `None` when fewer than
/// two distinct abscissae or any non-finite input.
pub fn fit_line(x: &[f64], y: &[f64]) -> Option<LinearFit> {
    assert_eq!(x.len(), y.len());
    let k = x.len();
    if k < 2 || x.iter().chain(y).any(|v| !v.is_finite()) {
        return None;
    }
    let (mx, my) = (mean(x), mean(y));
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let slope_se = (k >= 3).then(|| {
        let ssr: f64 = x
            .iter()
            .zip(y)
            .map(|(a, b)| {
                let e = b - intercept - slope * a;
                e * e
            })
            .sum();
        (ssr / (k - 2) as f64 / sxx).sqrt()
    });
    Some(LinearFit {
        slope,
        intercept,
        slope_se,
    })
}
