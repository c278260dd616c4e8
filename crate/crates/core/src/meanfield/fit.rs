use serde::Serialize;

use crate::error::{Error, Result};

const MIN_SAMPLES: usize = 10;
const MIN_DECADES: f64 = 1.5;

/// `v(t) ≈ A t^η`, fitted in log-log coordinates.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PowerLawFit {
    pub exponent: f64,
    pub std_error: f64,
    pub log_prefactor: f64,
    pub samples: usize,
    /// Gaussian log-likelihood of the residuals of `ln v`.
    pub log_likelihood: f64,
}

/// `v(t) ≈ A e^{−rate t}`, fitted in semi-log coordinates.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ExponentialFit {
    pub rate: f64,
    pub std_error: f64,
    pub log_prefactor: f64,
    pub samples: usize,
    pub log_likelihood: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum DecayModel {
    PowerLaw,
    Exponential,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct DecayComparison {
    pub power_law: PowerLawFit,
    pub exponential: ExponentialFit,
    pub preferred: DecayModel,
}

struct Regression {
    slope: f64,
    intercept: f64,
    slope_se: f64,
    log_likelihood: f64,
}

fn regress(x: &[f64], y: &[f64]) -> Regression {
    let n = x.len() as f64;
    let (mx, my) = (x.iter().sum::<f64>() / n, y.iter().sum::<f64>() / n);
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let rss: f64 = x.iter().zip(y).map(|(a, b)| (b - intercept - slope * a).powi(2)).sum();
    let slope_se = (rss / (n - 2.0) / sxx).sqrt();
    // floor the variance so an exact fit does not produce an infinite likelihood
    let var = (rss / n).max(f64::MIN_POSITIVE);
    let log_likelihood = -0.5 * n * ((2.0 * std::f64::consts::PI * var).ln() + 1.0);
    Regression { slope, intercept, slope_se, log_likelihood }
}

fn select(times: &[f64], values: &[f64], window: (f64, f64)) -> Result<(Vec<f64>, Vec<f64>)> {
    if times.len() != values.len() {
        return Err(Error::Fit(format!("{} times but {} values", times.len(), values.len())));
    }
    let (t, v): (Vec<f64>, Vec<f64>) = times
        .iter()
        .zip(values)
        .filter(|(&t, _)| t >= window.0 && t <= window.1)
        .map(|(&t, &v)| (t, v))
        .unzip();
    if t.len() < MIN_SAMPLES {
        return Err(Error::Fit(format!("{} samples in window, need at least {MIN_SAMPLES}", t.len())));
    }
    if let Some(bad) = v.iter().find(|&&v| v <= 0.0 || !v.is_finite()) {
        return Err(Error::Fit(format!("non-positive value {bad} in window")));
    }
    Ok((t, v))
}

fn power_law(t: &[f64], v: &[f64]) -> PowerLawFit {
    let lt: Vec<f64> = t.iter().map(|x| x.ln()).collect();
    let lv: Vec<f64> = v.iter().map(|x| x.ln()).collect();
    let r = regress(&lt, &lv);
    PowerLawFit {
        exponent: r.slope,
        std_error: r.slope_se,
        log_prefactor: r.intercept,
        samples: t.len(),
        log_likelihood: r.log_likelihood,
    }
}

fn exponential(t: &[f64], v: &[f64]) -> ExponentialFit {
    let lv: Vec<f64> = v.iter().map(|x| x.ln()).collect();
    let r = regress(t, &lv);
    ExponentialFit {
        rate: -r.slope,
        std_error: r.slope_se,
        log_prefactor: r.intercept,
        samples: t.len(),
        log_likelihood: r.log_likelihood,
    }
}

/// Least-squares power law over `window = (t_lo, t_hi)`, which must span
/// at least 1.5 decades and contain at least 10 positive samples.
pub fn fit_power_law(times: &[f64], values: &[f64], window: (f64, f64)) -> Result<PowerLawFit> {
    if window.0 <= 0.0 || (window.1 / window.0).log10() < MIN_DECADES {
        return Err(Error::Fit(format!(
            "window [{}, {}] spans less than {MIN_DECADES} decades",
            window.0, window.1
        )));
    }
    let (t, v) = select(times, values, window)?;
    Ok(power_law(&t, &v))
}

pub fn fit_exponential(times: &[f64], values: &[f64], window: (f64, f64)) -> Result<ExponentialFit> {
    let (t, v) = select(times, values, window)?;
    Ok(exponential(&t, &v))
}

/// Fit both decay laws to the same samples of `ln v` and prefer the one
/// with the larger Gaussian log-likelihood (both have two parameters).
pub fn compare_decay_models(times: &[f64], values: &[f64]) -> Result<DecayComparison> {
    let (t, v) = select(times, values, (f64::MIN_POSITIVE, f64::INFINITY))?;
    let power_law = power_law(&t, &v);
    let exponential = exponential(&t, &v);
    let preferred = if exponential.log_likelihood > power_law.log_likelihood {
        DecayModel::Exponential
    } else {
        DecayModel::PowerLaw
    };
    Ok(DecayComparison { power_law, exponential, preferred })
}
