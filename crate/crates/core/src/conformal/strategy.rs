use std::fmt;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// How the scores of the retained fold models are combined in "+" variants.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Aggregation {
    #[default]
    Median,
    Mean,
}

impl std::str::FromStr for Aggregation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "median" => Ok(Aggregation::Median),
            "mean" => Ok(Aggregation::Mean),
            other => Err(Error::invalid(format!(
                "unknown aggregation '{other}' (expected median or mean)"
            ))),
        }
    }
}

/// Resampling scheme used to produce calibration scores.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Method {
    /// Calibration part of `min(max_calib, floor(calib_fraction * n))` rows;
    /// the model fitted on the rest is used for inference.
    Split {
        calib_fraction: f64,
        max_calib: Option<usize>,
    },
    Jackknife,
    CrossValidation {
        folds: usize,
    },
    /// Jackknife-after-bootstrap. With `calib_size` set, the pooled
    /// out-of-bag scores are subsampled down to that many.
    Bootstrap {
        draws: usize,
        ratio: f64,
        calib_size: Option<usize>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Strategy {
    pub method: Method,
    /// Retain the fold models and aggregate their scores at inference time
    /// instead of fitting a final model on all data.
    pub plus: bool,
    pub aggregation: Aggregation,
}

pub const DEFAULT_BOOTSTRAP_RATIO: f64 = 0.95;
pub const DEFAULT_MAX_CALIB: usize = 2000;

impl Strategy {
    /// Half of the data for calibration, capped at 2000 rows.
    pub fn split() -> Self {
        Strategy {
            method: Method::Split {
                calib_fraction: 0.5,
                max_calib: Some(DEFAULT_MAX_CALIB),
            },
            plus: false,
            aggregation: Aggregation::Median,
        }
    }

    pub fn jackknife(plus: bool) -> Self {
        Strategy {
            method: Method::Jackknife,
            plus,
            aggregation: Aggregation::Median,
        }
    }

    pub fn cross_validation(folds: usize, plus: bool) -> Self {
        Strategy {
            method: Method::CrossValidation { folds },
            plus,
            aggregation: Aggregation::Median,
        }
    }

    pub fn bootstrap(draws: usize, ratio: f64, plus: bool) -> Self {
        Strategy {
            method: Method::Bootstrap {
                draws,
                ratio,
                calib_size: None,
            },
            plus,
            aggregation: Aggregation::Median,
        }
    }

    pub fn with_aggregation(mut self, aggregation: Aggregation) -> Self {
        self.aggregation = aggregation;
        self
    }

    /// Short method name as accepted by [`Strategy::from_name`].
    pub fn name(&self) -> &'static str {
        match (self.method, self.plus) {
            (Method::Split { .. }, _) => "split",
            (Method::Jackknife, false) => "jackknife",
            (Method::Jackknife, true) => "jackknife+",
            (Method::CrossValidation { .. }, false) => "cv",
            (Method::CrossValidation { .. }, true) => "cv+",
            (Method::Bootstrap { .. }, false) => "jab",
            (Method::Bootstrap { .. }, true) => "jab+",
        }
    }

    /// Builds a strategy from its short name. `k` is the fold or draw count
    /// and must be absent for split and jackknife; `ratio` applies to
    /// bootstrap only.
    pub fn from_name(name: &str, k: Option<usize>, ratio: Option<f64>) -> Result<Self> {
        let (base, plus) = match name.strip_suffix('+') {
            Some(b) => (b, true),
            None => (name, false),
        };
        let no_k = |what: &str| -> Result<()> {
            if k.is_some() {
                return Err(Error::invalid(format!("--k does not apply to method {what}")));
            }
            Ok(())
        };
        if ratio.is_some() && base != "jab" {
            return Err(Error::invalid(format!("--ratio only applies to jab/jab+, not {name}")));
        }
        let s = match base {
            "split" if !plus => {
                no_k("split")?;
                Strategy::split()
            }
            "jackknife" => {
                no_k(name)?;
                Strategy::jackknife(plus)
            }
            "cv" => Strategy::cross_validation(k.unwrap_or(10), plus),
            "jab" => Strategy::bootstrap(k.unwrap_or(20), ratio.unwrap_or(DEFAULT_BOOTSTRAP_RATIO), plus),
            _ => {
                return Err(Error::invalid(format!(
                    "unknown method '{name}' (expected split, jackknife, jackknife+, cv, cv+, jab or jab+)"
                )))
            }
        };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        match self.method {
            Method::Split {
                calib_fraction,
                max_calib,
            } => {
                if self.plus {
                    return Err(Error::invalid("split calibration has no '+' variant"));
                }
                if !(calib_fraction > 0.0 && calib_fraction < 1.0) {
                    return Err(Error::invalid(format!(
                        "calibration fraction must lie in (0, 1), got {calib_fraction}"
                    )));
                }
                if max_calib == Some(0) {
                    return Err(Error::invalid("calibration cap must be positive"));
                }
            }
            Method::Jackknife => {}
            Method::CrossValidation { folds } => {
                if folds < 2 {
                    return Err(Error::invalid(format!("cv needs at least 2 folds, got {folds}")));
                }
            }
            Method::Bootstrap {
                draws,
                ratio,
                calib_size,
            } => {
                if draws == 0 {
                    return Err(Error::invalid("jab needs at least one bootstrap draw"));
                }
                if !(ratio > 0.0 && ratio < 1.0) {
                    return Err(Error::invalid(format!(
                        "bootstrap ratio must lie in (0, 1), got {ratio}"
                    )));
                }
                if calib_size == Some(0) {
                    return Err(Error::invalid("calibration size must be positive"));
                }
            }
        }
        Ok(())
    }

    /// True for the leave-one-out family.
    pub fn is_leave_one_out(&self) -> bool {
        matches!(self.method, Method::Jackknife)
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.name())?;
        match self.method {
            Method::CrossValidation { folds } => write!(f, " (K={folds})")?,
            Method::Bootstrap { draws, ratio, .. } => write!(f, " (K={draws}, ratio={ratio})")?,
            _ => {}
        }
        Ok(())
    }
}
