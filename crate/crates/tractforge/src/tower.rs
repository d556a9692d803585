//! Level-indexed arithmetic for iterated-exponential magnitudes.
//!
//! A [`TowerScalar`] stores `sign * exp^level(mantissa)`. The sequence
//! recurrences this crate iterates (`log r_{j+1} = φ(R_j) − 1` and friends)
//! escape machine range after a single step, but their *logarithms* stay
//! structured: every quantity is an exponential tower over a machine-precision
//! mantissa. All comparisons and combinations below work on that
//! representation directly and never materialize the value.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use serde::de::{self, MapAccess, Visitor};
use serde::ser::SerializeMap;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

/// Normalization cap: a level-0 mantissa stays below this, and a level ≥ 1
/// mantissa lives in `[L_MIN, L_MAX)`. Chosen so log/exp round trips stay near
/// machine accuracy.
pub const L_MAX: f64 = 1e8;

/// `ln(L_MAX)`, the lower mantissa bound at level ≥ 1.
pub const L_MIN: f64 = 18.420680743952367;

/// Two scalars at the same level compare equal when their mantissas differ by
/// at most this. At level 0 and 1 this is an absolute guarantee on the value's
/// logarithm; at deeper levels it is a tolerance on the tower representation
/// itself (the value-relative gap it permits grows with the level, which is
/// the honest limit of what a fixed-width mantissa can resolve).
pub const MANTISSA_EQ_TOL: f64 = 1e-10;

/// Additions where the smaller operand shifts the dominant log-representation
/// by less than this relative amount are absorbed rather than applied.
const ABSORB_REL: f64 = 1e-15;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum TowerError {
    #[error("non-finite mantissa")]
    InvalidScalar,
    #[error("logarithm of a non-positive value")]
    DomainError,
    #[error("power base must be positive")]
    NegativeBase,
    #[error("pow exponent must be a level-0 scalar")]
    ExponentLevel,
    #[error("cancellation of nearly equal tower values is unsupported")]
    CancellationUnsupported,
    #[error("cannot parse {0:?} as a tower scalar")]
    Parse(String),
}

/// `sign * exp^level(mantissa)`, kept normalized.
///
/// Normal form: level 0 holds any `|mantissa| < L_MAX` (the value itself);
/// level ≥ 1 holds `mantissa ∈ [L_MIN, L_MAX)`. Values below machine range are
/// not representable (they never occur in the recurrences; quantities like
/// `a_j = exp(−2Cφ(R_j))` are carried as their logarithms, which is where the
/// negative sign comes in).
///
/// The `absorbed` flag records that some operation on the way to this value
/// dropped a contribution below the resolution of the representation; it makes
/// dominated-sum approximations auditable instead of silent.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TowerScalar {
    sign: i8,
    level: u32,
    mantissa: f64,
    absorbed: bool,
}

impl TowerScalar {
    /// Normalizes `(level, mantissa)` into canonical form. This is the only
    /// constructor; every arithmetic result funnels back through it.
    pub fn new(level: u32, mantissa: f64) -> Result<Self, TowerError> {
        if !mantissa.is_finite() {
            return Err(TowerError::InvalidScalar);
        }
        let (sign, mut m) = if level == 0 {
            match mantissa.partial_cmp(&0.0) {
                Some(Ordering::Less) => (-1i8, -mantissa),
                Some(Ordering::Greater) => (1i8, mantissa),
                _ => return Ok(Self::zero()),
            }
        } else {
            (1i8, mantissa)
        };
        let mut level = level;
        // Lower: a level ≥ 1 mantissa below L_MIN is cheaper than it looks.
        while level >= 1 && m < L_MIN {
            m = m.exp();
            level -= 1;
        }
        // Lift: an oversized mantissa carries more than a level should.
        while m >= L_MAX {
            m = m.ln();
            level += 1;
        }
        if !m.is_finite() {
            return Err(TowerError::InvalidScalar);
        }
        if level == 0 && m == 0.0 {
            return Ok(Self::zero());
        }
        Ok(Self {
            sign,
            level,
            mantissa: m,
            absorbed: false,
        })
    }

    pub fn from_f64(value: f64) -> Result<Self, TowerError> {
        Self::new(0, value)
    }

    pub const fn zero() -> Self {
        Self {
            sign: 0,
            level: 0,
            mantissa: 0.0,
            absorbed: false,
        }
    }

    pub fn one() -> Self {
        Self {
            sign: 1,
            level: 0,
            mantissa: 1.0,
            absorbed: false,
        }
    }

    pub fn level(&self) -> u32 {
        self.level
    }

    pub fn mantissa(&self) -> f64 {
        self.mantissa
    }

    pub fn sign(&self) -> i8 {
        self.sign
    }

    pub fn is_zero(&self) -> bool {
        self.sign == 0
    }

    pub fn is_negative(&self) -> bool {
        self.sign < 0
    }

    /// Whether any operation producing this value dropped a sub-resolution
    /// contribution.
    pub fn absorbed(&self) -> bool {
        self.absorbed
    }

    fn with_absorbed(mut self, absorbed: bool) -> Self {
        self.absorbed = self.absorbed || absorbed;
        self
    }

    pub fn neg(&self) -> Self {
        Self {
            sign: -self.sign,
            ..*self
        }
    }

    pub fn abs(&self) -> Self {
        Self {
            sign: self.sign.abs(),
            ..*self
        }
    }

    /// The value as an `f64` when it fits machine range.
    pub fn to_f64(&self) -> Option<f64> {
        if self.sign == 0 {
            return Some(0.0);
        }
        let magnitude = match self.level {
            0 => self.mantissa,
            1 => {
                if self.mantissa <= 709.0 {
                    self.mantissa.exp()
                } else {
                    return None;
                }
            }
            _ => return None,
        };
        Some(f64::from(self.sign) * magnitude)
    }

    /// `ln |value|` as an `f64` when that fits, regardless of whether the
    /// value itself does. `None` for zero and for level ≥ 2 towers whose
    /// mantissa exponentiates out of range.
    pub(crate) fn log_f64(&self) -> Option<f64> {
        match (self.sign, self.level) {
            (0, _) => None,
            (_, 0) => Some(self.mantissa.ln()),
            (_, 1) => Some(self.mantissa),
            (_, 2) if self.mantissa <= 709.0 => Some(self.mantissa.exp()),
            _ => None,
        }
    }

    /// `ln(self/other)` as `f64` when both log-magnitudes fit machine range.
    pub(crate) fn log_ratio_f64(&self, other: &Self) -> Option<f64> {
        Some(self.log_f64()? - other.log_f64()?)
    }

    /// `exp(self)`. Level bump for positive values; exact machine `exp` for
    /// representable negatives. `exp` of a negative value too large in
    /// magnitude for machine range underflows below what the representation
    /// can hold and comes back as zero with the `absorbed` flag set.
    pub fn exp(&self) -> Self {
        match self.sign {
            0 => Self::one(),
            1 => Self::new(self.level + 1, self.mantissa)
                .expect("normalized input stays finite under a level bump")
                .with_absorbed(self.absorbed),
            _ => match self.to_f64() {
                Some(v) if v > -745.0 => Self::from_f64(v.exp())
                    .expect("exp of in-range f64 is finite")
                    .with_absorbed(self.absorbed),
                _ => Self::zero().with_absorbed(true),
            },
        }
    }

    /// `ln(self)`. Errs for zero and negative values.
    pub fn log(&self) -> Result<Self, TowerError> {
        if self.sign <= 0 {
            return Err(TowerError::DomainError);
        }
        let out = if self.level == 0 {
            Self::from_f64(self.mantissa.ln())?
        } else {
            Self::new(self.level - 1, self.mantissa)?
        };
        Ok(out.with_absorbed(self.absorbed))
    }

    /// Total order on represented values. Equality is mantissa agreement
    /// within [`MANTISSA_EQ_TOL`] at the same normalized level and sign.
    pub fn cmp_value(&self, other: &Self) -> Ordering {
        match self.sign.cmp(&other.sign) {
            Ordering::Equal => {}
            ord => return ord,
        }
        if self.sign == 0 {
            return Ordering::Equal;
        }
        let mag = Self::cmp_magnitude(self, other);
        if self.sign > 0 {
            mag
        } else {
            mag.reverse()
        }
    }

    fn cmp_magnitude(a: &Self, b: &Self) -> Ordering {
        match a.level.cmp(&b.level) {
            Ordering::Equal => {
                let d = a.mantissa - b.mantissa;
                if d.abs() <= MANTISSA_EQ_TOL {
                    Ordering::Equal
                } else if d < 0.0 {
                    Ordering::Less
                } else {
                    Ordering::Greater
                }
            }
            // Normalized level-k values are strictly below level-(k+1) values:
            // sup at level k is L_MAX under exp^k, the inf one level up.
            ord => ord,
        }
    }

    /// `self + other`.
    ///
    /// Same-sign additions at a shared level use log-sum-exp; when the levels
    /// differ (or the update falls below the representation's resolution) the
    /// smaller operand is absorbed and flagged. Opposite signs subtract
    /// exactly while both magnitudes are machine-representable, absorb when
    /// one dominates, and refuse (`CancellationUnsupported`) when two deep
    /// towers agree to within comparison tolerance — the representation
    /// cannot see the difference, so neither sign nor magnitude of the result
    /// is knowable.
    pub fn add(&self, other: &Self) -> Result<Self, TowerError> {
        let absorbed_in = self.absorbed || other.absorbed;
        if self.sign == 0 {
            return Ok(other.with_absorbed(absorbed_in));
        }
        if other.sign == 0 {
            return Ok(self.with_absorbed(absorbed_in));
        }
        if self.sign == other.sign {
            return Ok(Self::add_magnitudes(&self.abs(), &other.abs())?
                .apply_sign(self.sign)
                .with_absorbed(absorbed_in));
        }
        // Opposite signs: |self| − |other| up to overall sign.
        let (pos, neg) = if self.sign > 0 {
            (self.abs(), other.abs())
        } else {
            (other.abs(), self.abs())
        };
        match (pos.to_f64(), neg.to_f64()) {
            (Some(p), Some(n)) => Ok(Self::from_f64(p - n)?.with_absorbed(absorbed_in)),
            _ => match Self::cmp_magnitude(&pos, &neg) {
                Ordering::Equal => Err(TowerError::CancellationUnsupported),
                Ordering::Greater => Ok(Self::sub_dominant(&pos, &neg)?
                    .with_absorbed(absorbed_in)),
                Ordering::Less => Ok(Self::sub_dominant(&neg, &pos)?
                    .neg()
                    .with_absorbed(absorbed_in)),
            },
        }
    }

    /// Magnitude sum of two positive scalars.
    fn add_magnitudes(a: &Self, b: &Self) -> Result<Self, TowerError> {
        if a.level == 0 && b.level == 0 {
            return Self::from_f64(a.mantissa + b.mantissa);
        }
        let (big, small) = match Self::cmp_magnitude(a, b) {
            Ordering::Less => (b, a),
            _ => (a, b),
        };
        match (big.log_f64(), small.log_f64()) {
            (Some(lb), Some(ls)) => {
                let delta = ls - lb; // ≤ 0 up to comparison tolerance
                let update = delta.min(0.0).exp().ln_1p();
                let log_sum = lb + update;
                let absorbed = update.abs() < ABSORB_REL * lb.abs().max(1.0);
                // Rebuild by exponentiating the updated logarithm.
                Ok(Self::new(0, log_sum)?.exp().with_absorbed(absorbed))
            }
            _ => {
                // At least one logarithm is beyond machine range; the smaller
                // operand cannot shift it.
                let out = match Self::cmp_magnitude(a, b) {
                    Ordering::Less => *b,
                    _ => *a,
                };
                Ok(out.with_absorbed(true))
            }
        }
    }

    /// `big − small` for positive `big > small` where at least one side is
    /// beyond machine range. The correction factor `1 − small/big` is then
    /// below resolution, so the dominant value survives with the flag set.
    fn sub_dominant(big: &Self, small: &Self) -> Result<Self, TowerError> {
        if let (Some(lb), Some(ls)) = (big.log_f64(), small.log_f64()) {
            let delta = ls - lb;
            if delta < 0.0 {
                let update = (-(delta.exp())).ln_1p();
                let log_diff = lb + update;
                let absorbed = update.abs() < ABSORB_REL * lb.abs().max(1.0);
                return Ok(Self::new(0, log_diff)?.exp().with_absorbed(absorbed));
            }
        }
        Ok(big.with_absorbed(true))
    }

    fn apply_sign(mut self, sign: i8) -> Self {
        if self.sign != 0 {
            self.sign = sign;
        }
        self
    }

    /// `self * other`, computed in the log domain.
    pub fn mul(&self, other: &Self) -> Result<Self, TowerError> {
        if self.sign == 0 || other.sign == 0 {
            return Ok(Self::zero().with_absorbed(self.absorbed || other.absorbed));
        }
        let log_product = self.abs().log()?.add(&other.abs().log()?)?;
        Ok(log_product.exp().apply_sign(self.sign * other.sign))
    }

    /// `self ^ exponent` for positive `self` and level-0 `exponent`.
    pub fn pow(&self, exponent: &Self) -> Result<Self, TowerError> {
        if exponent.level != 0 {
            return Err(TowerError::ExponentLevel);
        }
        if self.sign < 0 {
            return Err(TowerError::NegativeBase);
        }
        if self.sign == 0 {
            return Ok(Self::zero());
        }
        if exponent.sign == 0 {
            return Ok(Self::one());
        }
        Ok(self.log()?.mul(exponent)?.exp())
    }
}

impl fmt::Display for TowerScalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.sign == 0 {
            return write!(f, "0");
        }
        let prefix = if self.sign < 0 { "-" } else { "" };
        if self.level == 0 {
            write!(f, "{}{}", prefix, self.mantissa)
        } else {
            write!(f, "{}exp^{}({})", prefix, self.level, self.mantissa)
        }
    }
}

impl FromStr for TowerScalar {
    type Err = TowerError;

    /// Accepts plain decimals (`"123.45"`, `"1e6"`) and tower notation
    /// (`"exp^2(21.3)"`), each with an optional leading minus.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let t = s.trim();
        let (negative, body) = match t.strip_prefix('-') {
            Some(rest) => (true, rest),
            None => (false, t),
        };
        let parsed = if let Some(rest) = body.strip_prefix("exp^") {
            let open = rest.find('(').ok_or_else(|| TowerError::Parse(s.into()))?;
            let close = rest
                .strip_suffix(')')
                .ok_or_else(|| TowerError::Parse(s.into()))?;
            let level: u32 = rest[..open]
                .parse()
                .map_err(|_| TowerError::Parse(s.into()))?;
            let mantissa: f64 = close[open + 1..]
                .parse()
                .map_err(|_| TowerError::Parse(s.into()))?;
            if negative && level >= 1 {
                // Negative tower values carry the sign outside the tower.
                return Self::new(level, mantissa).map(|v| v.neg());
            }
            Self::new(level, if negative { -mantissa } else { mantissa })
        } else {
            let v: f64 = body.parse().map_err(|_| TowerError::Parse(s.into()))?;
            Self::from_f64(if negative { -v } else { v })
        };
        parsed
    }
}

impl Serialize for TowerScalar {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let entries = 2 + usize::from(self.sign < 0);
        let mut map = serializer.serialize_map(Some(entries))?;
        map.serialize_entry("level", &self.level)?;
        map.serialize_entry("mantissa", &self.mantissa)?;
        if self.sign < 0 {
            map.serialize_entry("sign", &self.sign)?;
        }
        map.end()
    }
}

impl<'de> Deserialize<'de> for TowerScalar {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        struct TowerVisitor;

        impl<'de> Visitor<'de> for TowerVisitor {
            type Value = TowerScalar;

            fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str("a {level, mantissa[, sign]} map, number, or tower string")
            }

            fn visit_map<A: MapAccess<'de>>(self, mut map: A) -> Result<Self::Value, A::Error> {
                let mut level: Option<u32> = None;
                let mut mantissa: Option<f64> = None;
                let mut sign: Option<i8> = None;
                while let Some(key) = map.next_key::<String>()? {
                    match key.as_str() {
                        "level" => level = Some(map.next_value()?),
                        "mantissa" => mantissa = Some(map.next_value()?),
                        "sign" => sign = Some(map.next_value()?),
                        other => {
                            return Err(de::Error::unknown_field(
                                other,
                                &["level", "mantissa", "sign"],
                            ))
                        }
                    }
                }
                let level = level.ok_or_else(|| de::Error::missing_field("level"))?;
                let mantissa = mantissa.ok_or_else(|| de::Error::missing_field("mantissa"))?;
                let value =
                    TowerScalar::new(level, mantissa).map_err(|e| de::Error::custom(e))?;
                Ok(match sign {
                    Some(s) if s < 0 => value.neg(),
                    Some(0) => TowerScalar::zero(),
                    _ => value,
                })
            }

            fn visit_f64<E: de::Error>(self, v: f64) -> Result<Self::Value, E> {
                TowerScalar::from_f64(v).map_err(|e| de::Error::custom(e))
            }

            fn visit_i64<E: de::Error>(self, v: i64) -> Result<Self::Value, E> {
                self.visit_f64(v as f64)
            }

            fn visit_u64<E: de::Error>(self, v: u64) -> Result<Self::Value, E> {
                self.visit_f64(v as f64)
            }

            fn visit_str<E: de::Error>(self, v: &str) -> Result<Self::Value, E> {
                v.parse().map_err(|e: TowerError| de::Error::custom(e))
            }
        }

        deserializer.deserialize_any(TowerVisitor)
    }
}
