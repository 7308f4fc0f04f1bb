//! Gradient-descent solvers for max-plus factorization problems.
//!
//! Both solvers share one stepping core. For each observed cell (i, j) the
//! residual of every inner term `A_il + B_lj - Y_ij` is accumulated with a
//! weight `s_ilj`: 1 on the maximizer of `A_il + B_lj`, and per variant
//! either 0 (plain descent) or a small `ε_k` (multiplicative noise) off it.
//! The additive-noise variants perturb every updated entry with a bounded
//! uniform draw whose amplitude follows the same diminishing schedule.
//!
//! Updates are simultaneous: both factors step from their pre-step values.

mod step;
pub mod tc;
pub mod tmf;

pub use step::{add_noise, apply_step, residual_grads, Cells};
pub use tc::{
    numerical_rank, rank_factorize, rank_projection, tc_fit, tc_predict, tc_step, TcConfig,
    TcSolution,
};
pub use tmf::{tmf_fit, tmf_objective, tmf_step, TmfConfig, TmfSolution};

use std::fmt;
use std::str::FromStr;

use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::Error;

/// Update rule selector.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Variant {
    /// Plain gradient descent: only maximizing terms carry gradient.
    Gd,
    /// Multiplicative noise: non-maximizing terms weighted by ε_k.
    Gdmn,
    /// Additive zero-mean noise uniform on [-c_k, c_k] after the GD step.
    GdanZm,
    /// Additive non-zero-mean noise uniform on [0, c_k] after the GD step.
    GdanNzm,
}

impl Variant {
    /// All variants, in reporting order.
    pub const ALL: [Variant; 4] = [Variant::Gd, Variant::Gdmn, Variant::GdanZm, Variant::GdanNzm];

    /// Weight applied to non-maximizing terms at schedule value `eps_k`.
    pub(crate) fn off_maximizer_weight(self, eps_k: f64) -> f64 {
        match self {
            Variant::Gdmn => eps_k,
            _ => 0.0,
        }
    }

    /// `Some(zero_mean)` if the variant adds noise after the step.
    pub(crate) fn additive_noise(self) -> Option<bool> {
        match self {
            Variant::GdanZm => Some(true),
            Variant::GdanNzm => Some(false),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Variant::Gd => "gd",
            Variant::Gdmn => "gdmn",
            Variant::GdanZm => "gdan-zm",
            Variant::GdanNzm => "gdan-nzm",
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        match s.trim().to_ascii_lowercase().as_str() {
            "gd" => Ok(Variant::Gd),
            "gdmn" => Ok(Variant::Gdmn),
            "gdan-zm" | "gdan_zm" | "gdanzm" => Ok(Variant::GdanZm),
            "gdan-nzm" | "gdan_nzm" | "gdannzm" => Ok(Variant::GdanNzm),
            other => Err(Error::invalid(format!(
                "unknown variant {other:?} (expected gd, gdmn, gdan-zm, or gdan-nzm)"
            ))),
        }
    }
}

impl Serialize for Variant {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(self.name())
    }
}

impl<'de> Deserialize<'de> for Variant {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(D::Error::custom)
    }
}

/// Iteration-indexed value for the ε_k weight and the noise amplitude.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EpsSchedule {
    /// The same value at every iteration.
    Constant(f64),
    /// `numerator / (offset + k)`, nonincreasing in k.
    Harmonic { numerator: f64, offset: f64 },
}

impl EpsSchedule {
    /// The default diminishing schedule 9/(500+k).
    pub const fn diminishing() -> Self {
        EpsSchedule::Harmonic {
            numerator: 9.0,
            offset: 500.0,
        }
    }

    pub fn eval(&self, k: usize) -> f64 {
        match *self {
            EpsSchedule::Constant(c) => c,
            EpsSchedule::Harmonic { numerator, offset } => numerator / (offset + k as f64),
        }
    }
}

impl Default for EpsSchedule {
    fn default() -> Self {
        EpsSchedule::diminishing()
    }
}

impl fmt::Display for EpsSchedule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            EpsSchedule::Constant(c) => write!(f, "{c}"),
            EpsSchedule::Harmonic { numerator, offset } => {
                write!(f, "{numerator}/({offset}+k)")
            }
        }
    }
}

impl FromStr for EpsSchedule {
    type Err = Error;

    /// Accepts `sched` (the default diminishing schedule), a plain
    /// nonnegative number, or the form `a/(b+k)`.
    fn from_str(s: &str) -> Result<Self, Error> {
        let t: String = s.chars().filter(|c| !c.is_whitespace()).collect();
        if t.eq_ignore_ascii_case("sched") {
            return Ok(EpsSchedule::diminishing());
        }
        if let Some((num, rest)) = t.split_once('/') {
            let inner = rest
                .strip_prefix('(')
                .and_then(|r| r.strip_suffix("+k)"))
                .ok_or_else(|| {
                    Error::invalid(format!("cannot parse schedule {s:?}; expected a/(b+k)"))
                })?;
            let numerator: f64 = num
                .parse()
                .map_err(|_| Error::invalid(format!("bad schedule numerator {num:?}")))?;
            let offset: f64 = inner
                .parse()
                .map_err(|_| Error::invalid(format!("bad schedule offset {inner:?}")))?;
            if !(numerator >= 0.0) || !(offset > 0.0) {
                return Err(Error::invalid(format!("schedule {s:?} must be nonnegative")));
            }
            return Ok(EpsSchedule::Harmonic { numerator, offset });
        }
        let c: f64 = t
            .parse()
            .map_err(|_| Error::invalid(format!("cannot parse schedule {s:?}")))?;
        if !(c >= 0.0) {
            return Err(Error::invalid("constant schedule must be nonnegative"));
        }
        Ok(EpsSchedule::Constant(c))
    }
}

impl Serialize for EpsSchedule {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for EpsSchedule {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(D::Error::custom)
    }
}
