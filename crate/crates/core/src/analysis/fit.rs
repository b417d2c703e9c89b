use log::warn;

use crate::error::{Error, Result};

pub const MIN_FIT_POINTS: usize = 10;

/// Ordinary least-squares line `y = intercept + slope x`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

pub fn fit_line(xs: &[f64], ys: &[f64]) -> Result<LineFit> {
    if xs.len() != ys.len() || xs.len() < 2 {
        return Err(Error::Fit(format!("need at least 2 paired points, got {}", xs.len().min(ys.len()))));
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
    for (&x, &y) in xs.iter().zip(ys) {
        sxx += (x - mx) * (x - mx);
        sxy += (x - mx) * (y - my);
        syy += (y - my) * (y - my);
    }
    if sxx == 0.0 {
        return Err(Error::Fit("abscissae are all equal".into()));
    }
    let slope = sxy / sxx;
    let r_squared = if syy == 0.0 { 1.0 } else { sxy * sxy / (sxx * syy) };
    Ok(LineFit {
        slope,
        intercept: my - slope * mx,
        r_squared,
    })
}

/// Power-law fit of a decaying series.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecayFit {
    pub exponent: f64,
    pub r_squared: f64,
    pub points: usize,
    pub excluded: usize,
    pub window: (f64, f64),
}

/// Slope of `log value` against `log t` over samples with `t` in `window`.
/// Nonpositive values are dropped with a warning.
pub fn fit_decay(series: &[(f64, f64)], window: (f64, f64)) -> Result<DecayFit> {
    let (lo, hi) = window;
    let in_window: Vec<(f64, f64)> = series
        .iter()
        .copied()
        .filter(|&(t, _)| t >= lo && t <= hi && t > 0.0)
        .collect();
    let usable: Vec<(f64, f64)> = in_window.iter().copied().filter(|&(_, v)| v > 0.0 && v.is_finite()).collect();
    let excluded = in_window.len() - usable.len();
    if excluded > 0 {
        warn!("decay fit on [{lo}, {hi}]: excluded {excluded} nonpositive samples");
    }
    if usable.len() < MIN_FIT_POINTS {
        return Err(Error::Fit(format!(
            "{} usable points in [{lo}, {hi}], need {MIN_FIT_POINTS}",
            usable.len()
        )));
    }
    let xs: Vec<f64> = usable.iter().map(|p| p.0.ln()).collect();
    let ys: Vec<f64> = usable.iter().map(|p| p.1.ln()).collect();
    let line = fit_line(&xs, &ys)?;
    Ok(DecayFit {
        exponent: line.slope,
        r_squared: line.r_squared,
        points: usable.len(),
        excluded,
        window,
    })
}
