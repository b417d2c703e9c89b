//! Equations of state for isentropic gases.
//!
//! Two families are supported: the Chaplygin gas `P = P0 - B/rho` and the
//! polytropic gas `P = A rho^gamma`. For polytropic gases the normalized
//! sound-speed variable `dot_c` is also provided; with `A = 1/gamma` it
//! satisfies `c(rho) = 1 + (gamma - 1)/2 * dot_c(rho)`.

use crate::error::{Error, Result};

/// Equation-of-state selector.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EosSpec {
    Chaplygin { p0: f64, b: f64 },
    Polytropic { a: f64, gamma: f64 },
}

impl Default for EosSpec {
    fn default() -> Self {
        Self::chaplygin_default()
    }
}

impl EosSpec {
    pub fn chaplygin_default() -> Self {
        Self::Chaplygin { p0: 2.0, b: 1.0 }
    }

    /// Polytropic gas with the `A = 1/gamma` normalization (unit rest sound speed).
    pub fn polytropic(gamma: f64) -> Self {
        Self::Polytropic {
            a: 1.0 / gamma,
            gamma,
        }
    }

    pub fn is_chaplygin(&self) -> bool {
        matches!(self, Self::Chaplygin { .. })
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            Self::Chaplygin { p0, b } => {
                if !(p0 > 0.0 && p0.is_finite()) {
                    return Err(Error::Domain(format!("Chaplygin P0 must be positive, got {p0}")));
                }
                if !(b > 0.0 && b.is_finite()) {
                    return Err(Error::Domain(format!("Chaplygin B must be positive, got {b}")));
                }
            }
            Self::Polytropic { a, gamma } => {
                if !(a > 0.0 && a.is_finite()) {
                    return Err(Error::Domain(format!("polytropic A must be positive, got {a}")));
                }
                if !(gamma >= 1.0 && gamma.is_finite()) {
                    return Err(Error::Domain(format!("polytropic gamma must be >= 1, got {gamma}")));
                }
            }
        }
        Ok(())
    }

    /// `(gamma - 1)/2` for polytropic gases, the coefficient linking `c` and `dot_c`.
    pub fn kappa(&self) -> Option<f64> {
        match *self {
            Self::Polytropic { gamma, .. } => Some(0.5 * (gamma - 1.0)),
            Self::Chaplygin { .. } => None,
        }
    }

    /// Short descriptor used in file headers and manifests.
    pub fn descriptor(&self) -> String {
        match *self {
            Self::Chaplygin { p0, b } => format!("chaplygin(P0={p0:e},B={b:e})"),
            Self::Polytropic { a, gamma } => format!("polytropic(A={a:e},gamma={gamma:e})"),
        }
    }
}

impl std::str::FromStr for EosSpec {
    type Err = Error;

    /// Parses the output of [`EosSpec::descriptor`].
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Usage(format!("malformed equation-of-state descriptor `{s}`"));
        let (family, rest) = s.trim().split_once('(').ok_or_else(bad)?;
        let body = rest.strip_suffix(')').ok_or_else(bad)?;
        let mut values = std::collections::BTreeMap::new();
        for item in body.split(',') {
            let (k, v) = item.split_once('=').ok_or_else(bad)?;
            values.insert(k.trim(), v.trim().parse::<f64>().map_err(|_| bad())?);
        }
        let get = |k: &str| values.get(k).copied().ok_or_else(bad);
        let eos = match family {
            "chaplygin" => Self::Chaplygin {
                p0: get("P0")?,
                b: get("B")?,
            },
            "polytropic" => Self::Polytropic {
                a: get("A")?,
                gamma: get("gamma")?,
            },
            _ => return Err(bad()),
        };
        eos.validate()?;
        Ok(eos)
    }
}

fn check_rho(rho: f64) -> Result<()> {
    if rho > 0.0 {
        Ok(())
    } else {
        Err(Error::Domain(format!("density must be positive, got {rho}")))
    }
}

/// Pressure `P(rho)`. Positivity of the Chaplygin pressure is not enforced.
pub fn pressure(eos: &EosSpec, rho: f64) -> Result<f64> {
    check_rho(rho)?;
    Ok(match *eos {
        EosSpec::Chaplygin { p0, b } => p0 - b / rho,
        EosSpec::Polytropic { a, gamma } => a * rho.powf(gamma),
    })
}

/// Sound speed `c(rho) = sqrt(P'(rho))`.
pub fn sound_speed(eos: &EosSpec, rho: f64) -> Result<f64> {
    check_rho(rho)?;
    Ok(match *eos {
        EosSpec::Chaplygin { b, .. } => b.sqrt() / rho,
        EosSpec::Polytropic { a, gamma } => (a * gamma).sqrt() * rho.powf(0.5 * (gamma - 1.0)),
    })
}

/// Normalized sound-speed variable of a polytropic gas.
///
/// `(2/(gamma-1)) (rho^((gamma-1)/2) - 1)` for `gamma != 1` and `ln rho` for
/// `gamma = 1`.
pub fn dot_c(eos: &EosSpec, rho: f64) -> Result<f64> {
    let EosSpec::Polytropic { gamma, .. } = *eos else {
        return Err(Error::Usage("dot_c is only defined for polytropic gases".into()));
    };
    check_rho(rho)?;
    if gamma == 1.0 {
        return Ok(rho.ln());
    }
    let kappa = 0.5 * (gamma - 1.0);
    // exp_m1 keeps the gamma -> 1 limit accurate
    Ok((kappa * rho.ln()).exp_m1() / kappa)
}

/// Inverse of [`dot_c`]: the density implied by a value of `dot_c`.
pub fn rho_from_dot_c(eos: &EosSpec, dc: f64) -> Result<f64> {
    let EosSpec::Polytropic { gamma, .. } = *eos else {
        return Err(Error::Usage("rho_from_dot_c is only defined for polytropic gases".into()));
    };
    if gamma == 1.0 {
        return Ok(dc.exp());
    }
    let kappa = 0.5 * (gamma - 1.0);
    let c = 1.0 + kappa * dc;
    if c <= 0.0 {
        return Err(Error::Domain(format!("sound speed 1 + kappa*dot_c = {c} is not positive")));
    }
    Ok(c.powf(1.0 / kappa))
}

#[cfg(test)]
mod tests {
    use super::*;

    const CH: EosSpec = EosSpec::Chaplygin { p0: 2.0, b: 1.0 };

    #[test]
    fn descriptor_round_trips() {
        for eos in [CH, EosSpec::polytropic(1.4), EosSpec::Chaplygin { p0: 0.1 + 0.2, b: 1e-7 }] {
            assert_eq!(eos.descriptor().parse::<EosSpec>().unwrap(), eos);
        }
        assert!("chaplygin(P0=2e0)".parse::<EosSpec>().is_err());
        assert!("ideal(A=1e0,gamma=2e0)".parse::<EosSpec>().is_err());
    }

    #[test]
    fn pressure_examples() {
        assert_eq!(pressure(&CH, 1.0).unwrap(), 1.0);
        assert_eq!(pressure(&CH, 0.5).unwrap(), 0.0);
        let poly = EosSpec::Polytropic { a: 0.5, gamma: 2.0 };
        assert_eq!(pressure(&poly, 1.0).unwrap(), 0.5);
        assert!(matches!(pressure(&CH, 0.0), Err(Error::Domain(_))));
        assert!(matches!(pressure(&CH, -1.0), Err(Error::Domain(_))));
    }

    #[test]
    fn sound_speed_examples() {
        assert_eq!(sound_speed(&CH, 1.0).unwrap(), 1.0);
        assert_eq!(sound_speed(&CH, 2.0).unwrap(), 0.5);
        assert_eq!(sound_speed(&EosSpec::polytropic(2.0), 1.0).unwrap(), 1.0);
        assert!(sound_speed(&CH, 0.0).is_err());
    }

    #[test]
    fn dot_c_examples() {
        let iso = EosSpec::polytropic(1.0);
        assert!((dot_c(&iso, std::f64::consts::E).unwrap() - 1.0).abs() < 1e-15);
        assert_eq!(dot_c(&EosSpec::polytropic(3.0), 1.0).unwrap(), 0.0);
        assert!((dot_c(&EosSpec::polytropic(2.0), 4.0).unwrap() - 2.0).abs() < 1e-14);
        assert!(matches!(dot_c(&CH, 1.0), Err(Error::Usage(_))));
    }

    #[test]
    fn default_is_chaplygin_two_one() {
        assert_eq!(EosSpec::default(), CH);
        assert_eq!(EosSpec::polytropic(2.0), EosSpec::Polytropic { a: 0.5, gamma: 2.0 });
    }

    #[test]
    fn sound_speed_matches_pressure_derivative() {
        let step = 1e-4;
        for eos in [CH, EosSpec::polytropic(1.4), EosSpec::polytropic(2.0), EosSpec::polytropic(1.0)] {
            for i in 0..=60 {
                let rho = 0.5 + 1.5 * i as f64 / 60.0;
                let dp = (pressure(&eos, rho + step).unwrap() - pressure(&eos, rho - step).unwrap())
                    / (2.0 * step);
                let c2 = sound_speed(&eos, rho).unwrap().powi(2);
                assert!(((c2 - dp) / c2).abs() <= 1e-6, "{eos:?} rho={rho}");
            }
        }
    }

    #[test]
    fn dot_c_rest_and_monotone() {
        for gamma in [1.0, 1.2, 1.4, 5.0 / 3.0, 2.0, 2.9] {
            let eos = EosSpec::polytropic(gamma);
            assert_eq!(dot_c(&eos, 1.0).unwrap(), 0.0);
            let mut prev = f64::NEG_INFINITY;
            for i in 0..200 {
                let rho = 0.05 + i as f64 * 0.05;
                let v = dot_c(&eos, rho).unwrap();
                assert!(v > prev);
                prev = v;
                let back = rho_from_dot_c(&eos, v).unwrap();
                assert!((back - rho).abs() < 1e-12 * rho.max(1.0));
            }
        }
    }

    #[test]
    fn dot_c_isothermal_limit() {
        let eos = EosSpec::polytropic(1.0 + 1e-6);
        for i in 0..=100 {
            let rho = 0.5 + 1.5 * i as f64 / 100.0;
            assert!((dot_c(&eos, rho).unwrap() - rho.ln()).abs() <= 1e-4);
        }
    }

    #[test]
    fn polytropic_c_relation() {
        for gamma in [1.4, 2.0, 2.5] {
            let eos = EosSpec::polytropic(gamma);
            for rho in [0.6, 1.0, 1.7] {
                let c = sound_speed(&eos, rho).unwrap();
                let via = 1.0 + 0.5 * (gamma - 1.0) * dot_c(&eos, rho).unwrap();
                assert!((c - via).abs() < 1e-14);
            }
        }
    }
}
