//! Tract data at full tower scale, and desk-scale toy tract geometry.
//!
//! The full-scale side generates and validates `TractDatum` values whose
//! wiggle endpoints obey the recurrence `log r_{j+1} = φ(R_j) − 1`,
//! `log R_{j+1} = φ(R_j) + 9·R_j`. Beyond the first couple of indices these
//! numbers are towers whose differences are double-exponentially small
//! relative to the values themselves, so the validators fall back to
//! *structural* certification: whenever the recurrence self-check holds, a
//! spacing claim `R > r + S` is certified from the exact log-gap
//! `log R − log r = 9·R_{prev} + 1 > S/r ≥ log(1 + S/r)` instead of a direct
//! subtraction that would be absorbed.
//!
//! The toy side builds small rectilinear tract polygons (the same five slit
//! families per wiggle, at caller-supplied desk-scale constants) for the
//! conformal machinery, along with region classifiers and the explicit
//! comparison path α.

use std::cmp::Ordering;
use std::f64::consts::PI;

use num_complex::Complex64;
use serde::de::Error as _;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::certify::CertLine;
use crate::growth::{GrowthError, GrowthProfile};
use crate::report::{Report, Table, Value};
use crate::tower::{TowerError, TowerScalar};

/// Left edge of the toy half-strip.
pub const STRIP_X_LEFT: f64 = 4.0;
/// Half-height of the toy half-strip.
pub const STRIP_HALF_HEIGHT: f64 = PI;
/// Built-in growth profiles generate and validate cleanly from this r0 up.
pub const DATUM_R0_MIN: f64 = 1e6;

const PHI_INV_TOL: f64 = 1e-10;

#[derive(Debug, Error)]
pub enum TractError {
    #[error("invalid tract datum: {0}")]
    InvalidDatum(String),
    #[error("invalid toy geometry: {0}")]
    InvalidGeometry(String),
    #[error("point {re}+{im}i is not in the tract interior")]
    NotInTract { re: f64, im: f64 },
    #[error(transparent)]
    Growth(#[from] GrowthError),
    #[error(transparent)]
    Tower(#[from] TowerError),
}

type Result<T> = std::result::Result<T, TractError>;

// ---------------------------------------------------------------------------
// Full-scale tract data
// ---------------------------------------------------------------------------

/// One wiggle of a full-scale tract: endpoints, gate abscissa, and the
/// admissible gate range `(a_j, b_j)` in log form.
#[derive(Debug, Clone)]
pub struct WiggleRecord {
    pub j: u32,
    /// Wiggle start abscissa r_j.
    pub r: TowerScalar,
    /// Wiggle end abscissa R_j.
    pub big_r: TowerScalar,
    /// Gate abscissa τ_j = R_j − 2 − 3ν₀.
    pub tau: TowerScalar,
    /// log a_j = −2Cφ(R_j), the log of the smallest admissible gate.
    pub log_a: TowerScalar,
    /// log b_j = −φ(R_j)/(2C), the log of the largest admissible gate.
    pub log_b: TowerScalar,
    /// Chosen gate parameter, once a solver has picked one.
    pub eps: Option<f64>,
}

/// A full-scale tract datum: growth profile, constants, and the wiggle terms.
#[derive(Debug, Clone)]
pub struct TractDatum {
    pub profile: GrowthProfile,
    pub r0: TowerScalar,
    /// Growth-estimate constant C (> 1).
    pub c: f64,
    /// Collar width ν₀ (> 0).
    pub nu0: f64,
    pub terms: Vec<WiggleRecord>,
}

impl TractDatum {
    /// Spacing the end of each wiggle must clear beyond its start.
    fn spacing_within(nu0: f64) -> f64 {
        (5.0 + 3.0 * nu0).max(30.0)
    }

    /// Spacing the next wiggle must clear beyond the previous end.
    fn spacing_between(nu0: f64) -> f64 {
        (2.0 * nu0).max(60.0)
    }

    /// Generates `n` wiggle terms from `r0` by the recurrence
    /// `log r_{j+1} = φ(R_j) − 1`, `log R_{j+1} = φ(R_j) + 9·R_j`, seeded with
    /// `R_0 = r_0 · exp(9·φ⁻¹(log r_0 + 1) + 1)` so that the pair (r_0, R_0)
    /// itself sits on the recurrence.
    pub fn generate(
        profile: &GrowthProfile,
        r0: &TowerScalar,
        c: f64,
        nu0: f64,
        n: usize,
    ) -> Result<TractDatum> {
        if n == 0 {
            return Err(TractError::InvalidDatum("need at least one wiggle term".into()));
        }
        if !c.is_finite() || !(c > 1.0) {
            return Err(TractError::InvalidDatum("constant C must be finite and exceed 1".into()));
        }
        if !nu0.is_finite() || !(nu0 > 0.0) {
            return Err(TractError::InvalidDatum("collar width nu0 must be positive".into()));
        }
        let six = TowerScalar::from_f64(6.0)?;
        if r0.is_zero() || r0.is_negative() || r0.cmp_value(&six) != Ordering::Greater {
            return Err(TractError::InvalidDatum("r0 too small: must exceed 6".into()));
        }

        let one = TowerScalar::one();
        let nine = TowerScalar::from_f64(9.0)?;
        let tau_shift = TowerScalar::from_f64(-(2.0 + 3.0 * nu0))?;
        let minus_two_c = TowerScalar::from_f64(-2.0 * c)?;
        let minus_half_inv_c = TowerScalar::from_f64(-1.0 / (2.0 * c))?;

        let mut log_r = r0.log()?;
        let w0 = log_r.add(&one)?;
        let seed = profile.phi_inverse(&w0, PHI_INV_TOL)?;
        let mut log_big = w0.add(&nine.mul(&seed)?)?;

        let mut terms: Vec<WiggleRecord> = Vec::with_capacity(n);
        for j in 0..n {
            let r = if j == 0 { *r0 } else { log_r.exp() };
            let big_r = log_big.exp();
            let tau = big_r.add(&tau_shift)?;
            let phi = profile.phi_eval(&big_r)?;
            let log_a = minus_two_c.mul(&phi)?;
            let log_b = minus_half_inv_c.mul(&phi)?;
            let next_log_r = phi.add(&one.neg())?;
            let next_log_big = phi.add(&nine.mul(&big_r)?)?;

            if j == 0 {
                let s_within = TowerScalar::from_f64(Self::spacing_within(nu0))?;
                if big_r.cmp_value(&r.add(&s_within)?) != Ordering::Greater {
                    return Err(TractError::InvalidDatum(format!(
                        "r0 too small: R_0 does not clear r_0 + {}",
                        Self::spacing_within(nu0)
                    )));
                }
                let s_between = TowerScalar::from_f64(Self::spacing_between(nu0))?;
                let r1 = next_log_r.exp();
                if r1.cmp_value(&big_r.add(&s_between)?) != Ordering::Greater {
                    return Err(TractError::InvalidDatum(format!(
                        "r0 too small: r_1 does not clear R_0 + {}",
                        Self::spacing_between(nu0)
                    )));
                }
            }

            terms.push(WiggleRecord { j: j as u32, r, big_r, tau, log_a, log_b, eps: None });
            log_r = next_log_r;
            log_big = next_log_big;
        }

        Ok(TractDatum { profile: profile.clone(), r0: *r0, c, nu0, terms })
    }

    /// Runs every datum invariant and reports one line per check per index.
    ///
    /// Where a direct tower comparison is absorbed (the compared values are
    /// representationally equal), the spacing checks are certified from the
    /// recurrence instead, and the line says so.
    pub fn validate(&self) -> Result<ValidationReport> {
        if self.terms.is_empty() {
            return Err(TractError::InvalidDatum("datum has no terms".into()));
        }
        let n = self.terms.len();
        let one = TowerScalar::one();
        let nine = TowerScalar::from_f64(9.0)?;
        let s_within = Self::spacing_within(self.nu0);
        let s_between = Self::spacing_between(self.nu0);
        let mut lines: Vec<CertLine> = Vec::new();

        let phis: Vec<TowerScalar> = self
            .terms
            .iter()
            .map(|t| self.profile.phi_eval(&t.big_r))
            .collect::<std::result::Result<_, _>>()?;

        // Recurrence self-consistency, which later spacing lines lean on.
        let mut rec_ok = vec![false; n];
        for j in 1..n {
            let expect_log_r = phis[j - 1].add(&one.neg())?;
            let expect_log_big =
                phis[j - 1].add(&nine.mul(&self.terms[j - 1].big_r)?)?;
            let got_log_r = self.terms[j].r.log()?;
            let got_log_big = self.terms[j].big_r.log()?;
            let ok_r = got_log_r.cmp_value(&expect_log_r) == Ordering::Equal;
            let ok_big = got_log_big.cmp_value(&expect_log_big) == Ordering::Equal;
            rec_ok[j] = ok_r && ok_big;
            let detail = if rec_ok[j] {
                "log r_j and log R_j match the recurrence from R_{j-1}".to_string()
            } else if !ok_r {
                "log r_j does not equal phi(R_{j-1}) - 1".to_string()
            } else {
                "log R_j does not equal phi(R_{j-1}) + 9 R_{j-1}".to_string()
            };
            lines.push(CertLine::new("recurrence", Some(j as u32), rec_ok[j], detail));
        }

        for j in 0..n {
            let t = &self.terms[j];
            let ju = j as u32;

            // Exact log-gap within index j, available once the recurrence into j holds.
            let delta_within = if j >= 1 && rec_ok[j] {
                Some(nine.mul(&self.terms[j - 1].big_r)?.add(&one)?)
            } else {
                None
            };

            let (ok, how) = gap_exceeds(&t.big_r, &t.r, s_within, delta_within.as_ref())?;
            lines.push(CertLine::new(
                "spacing_nu0_R",
                Some(ju),
                ok,
                format!("R_j > r_j + {s_within}: {how}"),
            ));
            let (ok, how) = gap_exceeds(&t.big_r, &t.r, 30.0, delta_within.as_ref())?;
            lines.push(CertLine::new(
                "spacing_base_R",
                Some(ju),
                ok,
                format!("R_j > r_j + 30: {how}"),
            ));

            if j >= 1 {
                let prev = &self.terms[j - 1];
                let delta_between = if rec_ok[j] {
                    Some(phis[j - 1].add(&one.neg())?.add(&prev.big_r.log()?.neg())?)
                } else {
                    None
                };
                let (ok, how) = gap_exceeds(&t.r, &prev.big_r, s_between, delta_between.as_ref())?;
                lines.push(CertLine::new(
                    "spacing_nu0_r",
                    Some(ju),
                    ok,
                    format!("r_j > R_{{j-1}} + {s_between}: {how}"),
                ));
                let (ok, how) = gap_exceeds(&t.r, &prev.big_r, 60.0, delta_between.as_ref())?;
                lines.push(CertLine::new(
                    "spacing_base_r",
                    Some(ju),
                    ok,
                    format!("r_j > R_{{j-1}} + 60: {how}"),
                ));
            }

            // tau definition and ordering r_j < tau_j < R_j - 1 - 3π.
            let tau_expect = t.big_r.add(&TowerScalar::from_f64(-(2.0 + 3.0 * self.nu0))?)?;
            let tau_def_ok = t.tau.cmp_value(&tau_expect) == Ordering::Equal;
            lines.push(CertLine::new(
                "tau_def",
                Some(ju),
                tau_def_ok,
                "tau_j = R_j - 2 - 3 nu0",
            ));
            let lower_ok = match t.tau.cmp_value(&t.r) {
                Ordering::Greater => true,
                Ordering::Less => false,
                Ordering::Equal => {
                    tau_def_ok
                        && gap_exceeds(
                            &t.big_r,
                            &t.r,
                            2.0 + 3.0 * self.nu0,
                            delta_within.as_ref(),
                        )?
                        .0
                }
            };
            let upper_cut = t.big_r.add(&TowerScalar::from_f64(-(1.0 + 3.0 * PI))?)?;
            let upper_ok = match t.tau.cmp_value(&upper_cut) {
                Ordering::Less => true,
                Ordering::Greater => false,
                // Representationally equal: decide by the widths themselves.
                Ordering::Equal => tau_def_ok && 2.0 + 3.0 * self.nu0 > 1.0 + 3.0 * PI,
            };
            lines.push(CertLine::new(
                "tau_order",
                Some(ju),
                lower_ok && upper_ok,
                if lower_ok && upper_ok {
                    "r_j < tau_j < R_j - 1 - 3 pi".to_string()
                } else if !lower_ok {
                    "tau_j does not exceed r_j".to_string()
                } else {
                    "tau_j does not stay below R_j - 1 - 3 pi".to_string()
                },
            ));

            // Index-linear lower bounds R_j > 36 + 90j, r_j > 6 + 90j.
            let jb = j as f64;
            let ok_big =
                t.big_r.cmp_value(&TowerScalar::from_f64(36.0 + 90.0 * jb)?) == Ordering::Greater;
            let ok_r =
                t.r.cmp_value(&TowerScalar::from_f64(6.0 + 90.0 * jb)?) == Ordering::Greater;
            lines.push(CertLine::new(
                "rjbounds",
                Some(ju),
                ok_big && ok_r,
                format!("R_j > {} and r_j > {}", 36.0 + 90.0 * jb, 6.0 + 90.0 * jb),
            ));

            // Gate range: log a_j < log b_j < 0, checked against the defining
            // formulas (the direct comparison of the two logs is absorbed at
            // depth; a_j < b_j is equivalent to 4C² > 1 once both match their
            // definitions).
            let log_a_expect = TowerScalar::from_f64(-2.0 * self.c)?.mul(&phis[j])?;
            let log_b_expect = TowerScalar::from_f64(-1.0 / (2.0 * self.c))?.mul(&phis[j])?;
            let defs_ok = t.log_a.cmp_value(&log_a_expect) == Ordering::Equal
                && t.log_b.cmp_value(&log_b_expect) == Ordering::Equal;
            let order_ok = match t.log_a.cmp_value(&t.log_b) {
                Ordering::Less => true,
                Ordering::Greater => false,
                Ordering::Equal => defs_ok && 4.0 * self.c * self.c > 1.0,
            };
            let gate_ok = defs_ok && order_ok && t.log_b.is_negative();
            lines.push(CertLine::new(
                "gate_bounds",
                Some(ju),
                gate_ok,
                if gate_ok {
                    "log a_j < log b_j < 0 with the defining formulas".to_string()
                } else if !defs_ok {
                    "stored log a_j / log b_j do not match -2C phi(R_j), -phi(R_j)/(2C)".to_string()
                } else {
                    "gate range out of order".to_string()
                },
            ));
        }

        // Partial sums: Σ_{k<j} 2C²·φ(R_k) < R_j.
        let m_factor = TowerScalar::from_f64(2.0 * self.c * self.c)?;
        let mut acc = TowerScalar::zero();
        for j in 0..n {
            let ok = acc.cmp_value(&self.terms[j].big_r) == Ordering::Less;
            lines.push(CertLine::new(
                "sumlem",
                Some(j as u32),
                ok,
                format!("sum of 2C^2 phi(R_k) over k<{j} stays below R_{j}"),
            ));
            acc = acc.add(&m_factor.mul(&phis[j])?)?;
        }

        Ok(ValidationReport { lines })
    }

    /// Certifies, for index `j`, the two inequality chains that pin the image
    /// modulus between r_{j+1} and R_{j+1} at the extreme gate choices:
    ///
    /// (i)  (1/C)(R_j + Σ_{k<j} log(1/a_k) + 2Cφ(R_j)) ≥ 2φ(R_j) > φ(R_j) + 9R_j = log R_{j+1}
    /// (ii) C(R_j + Σ_{k<j} 2Cφ(R_k) + φ(R_j)/(2C)) < (2/3)φ(R_j) < log r_{j+1}
    ///
    /// Each inequality is checked in an algebraically rearranged form whose
    /// two sides stay numerically distinguishable at tower depth (the
    /// dominant φ(R_j) term is cancelled on paper, not by subtraction).
    pub fn range_bounds_certify(&self, j: usize) -> Result<CertLine> {
        let n = self.terms.len();
        if j >= n {
            return Err(TractError::InvalidDatum(format!("term index {j} out of range")));
        }
        let one = TowerScalar::one();
        let nine = TowerScalar::from_f64(9.0)?;
        let t = &self.terms[j];

        let phis: Vec<TowerScalar> = self.terms[..=j]
            .iter()
            .map(|t| self.profile.phi_eval(&t.big_r))
            .collect::<std::result::Result<_, _>>()?;
        let phi_j = &phis[j];

        // Σ_{k<j} log(1/a_k) = Σ_{k<j} 2Cφ(R_k), the worst-case gate sum.
        let two_c = TowerScalar::from_f64(2.0 * self.c)?;
        let mut sum = TowerScalar::zero();
        for phi_k in &phis[..j] {
            sum = sum.add(&two_c.mul(phi_k)?)?;
        }

        let mut failed: Option<&str> = None;

        // (i) first link, rearranged: R_j + Σ ≥ 0.
        let base = t.big_r.add(&sum)?;
        if base.is_negative() {
            failed = Some("(1/C)(R_j + sum log(1/a_k) + 2C phi(R_j)) >= 2 phi(R_j)");
        }
        // (i) second link, rearranged: φ(R_j) > 9R_j. At depth both sides
        // share one representation, so the exact exponent gap
        // log φ(R_j) − log R_j = Φ(R_j)·log R_j decides instead.
        let nine_r = nine.mul(&t.big_r)?;
        let i2_ok = match phi_j.cmp_value(&nine_r) {
            Ordering::Greater => true,
            Ordering::Less => false,
            Ordering::Equal => {
                self.profile.phi_times_log(&t.big_r)?.cmp_value(&TowerScalar::from_f64(9f64.ln())?)
                    == Ordering::Greater
            }
        };
        if failed.is_none() && !i2_ok {
            failed = Some("2 phi(R_j) > phi(R_j) + 9 R_j");
        }
        // (i) closing equality against the stored next term.
        if failed.is_none() && j + 1 < n {
            let expect = phi_j.add(&nine_r)?;
            if expect.cmp_value(&self.terms[j + 1].big_r.log()?) != Ordering::Equal {
                failed = Some("phi(R_j) + 9 R_j = log R_{j+1}");
            }
        }
        // (ii) first link, rearranged: C·R_j + C·Σ < φ(R_j)/6. At depth this
        // is decided through logs: it is equivalent to
        // Φ(R_j)·log R_j > log(6C) + log(1 + Σ/R_j).
        if failed.is_none() {
            let lhs = TowerScalar::from_f64(self.c)?.mul(&base)?;
            let rhs = phi_j.mul(&TowerScalar::from_f64(1.0 / 6.0)?)?;
            let ii1_ok = match lhs.cmp_value(&rhs) {
                Ordering::Less => true,
                Ordering::Greater => false,
                Ordering::Equal => {
                    let ptl = self.profile.phi_times_log(&t.big_r)?;
                    let ratio = if sum.is_zero() {
                        TowerScalar::zero()
                    } else {
                        sum.log()?.add(&t.big_r.log()?.neg())?.exp()
                    };
                    let log_term = TowerScalar::one().add(&ratio)?.log()?;
                    let bound = TowerScalar::from_f64((6.0 * self.c).ln())?.add(&log_term)?;
                    ptl.cmp_value(&bound) == Ordering::Greater
                }
            };
            if !ii1_ok {
                failed = Some("C (R_j + sum log(1/a_k) + phi(R_j)/(2C)) < (2/3) phi(R_j)");
            }
        }
        // (ii) consistency of log r_{j+1} with the recurrence, then the
        // second link rearranged: φ(R_j) > 3.
        if failed.is_none() && j + 1 < n {
            let expect = phi_j.add(&one.neg())?;
            if expect.cmp_value(&self.terms[j + 1].r.log()?) != Ordering::Equal {
                failed = Some("log r_{j+1} = phi(R_j) - 1");
            }
        }
        if failed.is_none() && phi_j.cmp_value(&TowerScalar::from_f64(3.0)?) != Ordering::Greater {
            failed = Some("(2/3) phi(R_j) < log r_{j+1}");
        }

        Ok(match failed {
            None => CertLine::new(
                "range_bounds",
                Some(j as u32),
                true,
                "both range chains certified at worst-case gates",
            ),
            Some(which) => {
                CertLine::new("range_bounds", Some(j as u32), false, format!("fails at: {which}"))
            }
        })
    }
}

/// Certifies `hi > lo + gap`. Tries the direct tower comparison first; when
/// the sum is absorbed (comparison returns Equal), certifies from the exact
/// log-gap `delta_log = log hi − log lo` via
/// `delta_log > gap/lo ≥ log(1 + gap/lo)`, when one is available.
fn gap_exceeds(
    hi: &TowerScalar,
    lo: &TowerScalar,
    gap: f64,
    delta_log: Option<&TowerScalar>,
) -> Result<(bool, &'static str)> {
    debug_assert!(gap > 0.0);
    let shifted = lo.add(&TowerScalar::from_f64(gap)?)?;
    match hi.cmp_value(&shifted) {
        Ordering::Greater => Ok((true, "direct")),
        Ordering::Less => Ok((false, "fails directly")),
        Ordering::Equal => match delta_log {
            Some(d) => {
                let bound = TowerScalar::new(0, gap.ln())?.add(&lo.log()?.neg())?.exp();
                if d.cmp_value(&bound) == Ordering::Greater {
                    Ok((true, "certified from the recurrence log-gap"))
                } else {
                    Ok((false, "absorbed at tower precision; log-gap bound failed"))
                }
            }
            None => Ok((false, "absorbed at tower precision; no recurrence to certify from")),
        },
    }
}

/// Per-index validation outcome for a `TractDatum`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ValidationReport {
    pub lines: Vec<CertLine>,
}

impl ValidationReport {
    pub fn pass(&self) -> bool {
        self.lines.iter().all(|l| l.pass)
    }

    /// All lines with the given check name, in index order.
    pub fn named(&self, name: &str) -> Vec<&CertLine> {
        self.lines.iter().filter(|l| l.name == name).collect()
    }

    /// The line for (name, j), if present.
    pub fn line(&self, name: &str, j: u32) -> Option<&CertLine> {
        self.lines.iter().find(|l| l.name == name && l.j == Some(j))
    }
}

impl Report for ValidationReport {
    fn to_value(&self) -> Value {
        Value::obj([
            ("pass", Value::Bool(self.pass())),
            (
                "checks",
                Value::Arr(
                    self.lines
                        .iter()
                        .map(|l| {
                            Value::obj([
                                ("name", Value::from(l.name.as_str())),
                                (
                                    "j",
                                    l.j.map(|j| Value::Int(j as i64)).unwrap_or(Value::Null),
                                ),
                                ("pass", Value::Bool(l.pass)),
                                ("detail", Value::from(l.detail.as_str())),
                            ])
                        })
                        .collect(),
                ),
            ),
        ])
    }

    fn to_table(&self) -> Option<Table> {
        let mut t = Table::new(&["j", "check", "pass", "detail"]);
        for l in &self.lines {
            t.push(vec![
                l.j.map(|j| Value::Int(j as i64)).unwrap_or(Value::Null),
                Value::from(l.name.as_str()),
                Value::Bool(l.pass),
                Value::from(l.detail.as_str()),
            ]);
        }
        Some(t)
    }

    fn to_text(&self) -> String {
        let total = self.lines.len();
        let passed = self.lines.iter().filter(|l| l.pass).count();
        let mut out = format!("== datum validation: {passed}/{total} checks pass\n");
        for l in self.lines.iter().filter(|l| !l.pass) {
            let j = l.j.map(|j| format!(" j={j}")).unwrap_or_default();
            out.push_str(&format!("FAIL {}{}: {}\n", l.name, j, l.detail));
        }
        if passed == total {
            out.push_str("all checks pass\n");
        }
        out
    }
}

// Serialized shape: tower scalars serialize as (level, mantissa) pairs, which
// round-trips bit-for-bit at every level, so the term fields are stored
// directly. The wiggle end keeps its conventional capital key.
#[derive(Serialize, Deserialize)]
struct DatumRepr {
    profile: GrowthProfile,
    r0: TowerScalar,
    #[serde(rename = "C")]
    c: f64,
    nu0: f64,
    terms: Vec<TermRepr>,
}

#[derive(Serialize, Deserialize)]
struct TermRepr {
    j: u32,
    r: TowerScalar,
    #[serde(rename = "R")]
    big_r: TowerScalar,
    tau: TowerScalar,
    log_a: TowerScalar,
    log_b: TowerScalar,
    eps: Option<f64>,
}

impl Serialize for TractDatum {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let terms = self
            .terms
            .iter()
            .map(|t| TermRepr {
                j: t.j,
                r: t.r,
                big_r: t.big_r,
                tau: t.tau,
                log_a: t.log_a,
                log_b: t.log_b,
                eps: t.eps,
            })
            .collect();
        DatumRepr { profile: self.profile.clone(), r0: self.r0, c: self.c, nu0: self.nu0, terms }
            .serialize(s)
    }
}

impl<'de> Deserialize<'de> for TractDatum {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let repr = DatumRepr::deserialize(d)?;
        if !repr.c.is_finite() || !(repr.c > 1.0) {
            return Err(D::Error::custom("constant C must be finite and exceed 1"));
        }
        if !repr.nu0.is_finite() || !(repr.nu0 > 0.0) {
            return Err(D::Error::custom("collar width nu0 must be positive"));
        }
        let mut terms = Vec::with_capacity(repr.terms.len());
        for (i, t) in repr.terms.into_iter().enumerate() {
            if t.j as usize != i {
                return Err(D::Error::custom(format!(
                    "terms must be indexed consecutively from 0; found j={} at position {i}",
                    t.j
                )));
            }
            terms.push(WiggleRecord {
                j: t.j,
                r: t.r,
                big_r: t.big_r,
                tau: t.tau,
                log_a: t.log_a,
                log_b: t.log_b,
                eps: t.eps,
            });
        }
        Ok(TractDatum { profile: repr.profile, r0: repr.r0, c: repr.c, nu0: repr.nu0, terms })
    }
}

// ---------------------------------------------------------------------------
// Toy tract geometry
// ---------------------------------------------------------------------------

/// Caller-facing description of one toy wiggle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ToyWiggleSpec {
    pub r: f64,
    pub big_r: f64,
    pub eps: f64,
}

impl From<(f64, f64, f64)> for ToyWiggleSpec {
    fn from((r, big_r, eps): (f64, f64, f64)) -> Self {
        ToyWiggleSpec { r, big_r, eps }
    }
}

/// One toy wiggle with its derived gate abscissa.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ToyWiggle {
    pub r: f64,
    pub big_r: f64,
    pub tau: f64,
    pub eps: f64,
}

impl ToyWiggle {
    /// A gate parameter of exactly 1 leaves zero-length gate slits, so the
    /// gate wall is omitted entirely.
    pub fn gated(&self) -> bool {
        self.eps < 1.0
    }

    /// Open vertical interval of the gate at abscissa τ.
    pub fn gate_interval(&self) -> (f64, f64) {
        ((2.0 - self.eps) * PI / 3.0, (2.0 + self.eps) * PI / 3.0)
    }
}

/// A closed axis-aligned boundary segment.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Segment {
    pub a: Complex64,
    pub b: Complex64,
}

impl Segment {
    fn new(a: Complex64, b: Complex64) -> Self {
        debug_assert!(a != b, "zero-length boundary segment");
        Segment { a, b }
    }

    pub fn length(&self) -> f64 {
        (self.b - self.a).norm()
    }

    /// Euclidean distance from `z` to this (closed) segment.
    pub fn distance_to(&self, z: Complex64) -> f64 {
        let d = self.b - self.a;
        let len2 = d.norm_sqr();
        let t = if len2 == 0.0 {
            0.0
        } else {
            (((z - self.a).re * d.re + (z - self.a).im * d.im) / len2).clamp(0.0, 1.0)
        };
        (z - (self.a + d * t)).norm()
    }

    fn is_vertical(&self) -> bool {
        self.a.re == self.b.re
    }
}

fn minmax(a: f64, b: f64) -> (f64, f64) {
    if a <= b { (a, b) } else { (b, a) }
}

/// True when two axis-aligned segments meet anywhere other than a point that
/// is an endpoint of both.
fn seg_conflict(s: &Segment, t: &Segment) -> bool {
    match (s.is_vertical(), t.is_vertical()) {
        (true, true) => {
            if s.a.re != t.a.re {
                return false;
            }
            let (lo1, hi1) = minmax(s.a.im, s.b.im);
            let (lo2, hi2) = minmax(t.a.im, t.b.im);
            lo1.max(lo2) < hi1.min(hi2)
        }
        (false, false) => {
            if s.a.im != t.a.im {
                return false;
            }
            let (lo1, hi1) = minmax(s.a.re, s.b.re);
            let (lo2, hi2) = minmax(t.a.re, t.b.re);
            lo1.max(lo2) < hi1.min(hi2)
        }
        (sv, _) => {
            let (h, v) = if sv { (t, s) } else { (s, t) };
            let y = h.a.im;
            let x = v.a.re;
            let (xlo, xhi) = minmax(h.a.re, h.b.re);
            let (ylo, yhi) = minmax(v.a.im, v.b.im);
            if x < xlo || x > xhi || y < ylo || y > yhi {
                return false;
            }
            let h_end = x == xlo || x == xhi;
            let v_end = y == ylo || y == yhi;
            !(h_end && v_end)
        }
    }
}

/// True when two axis-aligned segments share any point at all.
#[cfg(test)]
fn segments_touch(s: &Segment, t: &Segment) -> bool {
    match (s.is_vertical(), t.is_vertical()) {
        (true, true) => {
            if s.a.re != t.a.re {
                return false;
            }
            let (lo1, hi1) = minmax(s.a.im, s.b.im);
            let (lo2, hi2) = minmax(t.a.im, t.b.im);
            lo1.max(lo2) <= hi1.min(hi2)
        }
        (false, false) => {
            if s.a.im != t.a.im {
                return false;
            }
            let (lo1, hi1) = minmax(s.a.re, s.b.re);
            let (lo2, hi2) = minmax(t.a.re, t.b.re);
            lo1.max(lo2) <= hi1.min(hi2)
        }
        (sv, _) => {
            let (h, v) = if sv { (t, s) } else { (s, t) };
            let y = h.a.im;
            let x = v.a.re;
            let (xlo, xhi) = minmax(h.a.re, h.b.re);
            let (ylo, yhi) = minmax(v.a.im, v.b.im);
            x >= xlo && x <= xhi && y >= ylo && y <= yhi
        }
    }
}

/// A desk-scale tract: a truncated half-strip with rectilinear wiggle slits.
///
/// Immutable after construction; the classifiers are reentrant.
#[derive(Debug, Clone)]
pub struct ToyTract {
    wiggles: Vec<ToyWiggle>,
    nu0_toy: f64,
    x_close: f64,
    vertices: Vec<Complex64>,
    segments: Vec<Segment>,
}

impl ToyTract {
    /// Builds the tract boundary. Margins enforced here (beyond the obvious
    /// parameter ranges): `r_0 ≥ 6` so the base point at 5 and the path turn
    /// at `r_0 − 1/2` have clearance, `R_j ≥ r_j + 3 + 3ν₀` so the gate
    /// abscissa clears the wiggle start by at least 1, `r_{j+1} ≥ R_j + 2`,
    /// and `x_close ≥ R_last + 2`.
    pub fn build(params: &[ToyWiggleSpec], nu0_toy: f64, x_close: f64) -> Result<ToyTract> {
        if !nu0_toy.is_finite() || !(nu0_toy > 0.0) {
            return Err(TractError::InvalidGeometry("nu0_toy must be positive".into()));
        }
        if !x_close.is_finite() {
            return Err(TractError::InvalidGeometry("x_close must be finite".into()));
        }
        let mut wiggles = Vec::with_capacity(params.len());
        let mut next_min = STRIP_X_LEFT + 2.0;
        for (i, p) in params.iter().enumerate() {
            if !p.r.is_finite() || !p.big_r.is_finite() || !p.eps.is_finite() {
                return Err(TractError::InvalidGeometry(format!(
                    "wiggle {i} has a non-finite parameter"
                )));
            }
            if !(p.eps > 0.0 && p.eps <= 1.0) {
                return Err(TractError::InvalidGeometry(format!(
                    "wiggle {i}: eps must lie in (0, 1]"
                )));
            }
            if p.r < next_min {
                return Err(TractError::InvalidGeometry(format!(
                    "wiggle {i} starts at {} but needs at least {next_min} for clearance",
                    p.r
                )));
            }
            if p.big_r < p.r + 3.0 + 3.0 * nu0_toy {
                return Err(TractError::InvalidGeometry(format!(
                    "wiggle {i} too narrow: R must be at least r + 3 + 3*nu0_toy"
                )));
            }
            let tau = p.big_r - 2.0 - 3.0 * nu0_toy;
            wiggles.push(ToyWiggle { r: p.r, big_r: p.big_r, tau, eps: p.eps });
            next_min = p.big_r + 2.0;
        }
        if x_close < next_min {
            return Err(TractError::InvalidGeometry(format!(
                "x_close = {x_close} too close; needs at least {next_min}"
            )));
        }

        let (vertices, segments) = assemble_boundary(&wiggles, x_close);
        for (i, s) in segments.iter().enumerate() {
            for t in &segments[i + 1..] {
                if seg_conflict(s, t) {
                    return Err(TractError::InvalidGeometry(format!(
                        "boundary segments intersect away from shared endpoints: {s:?} and {t:?}"
                    )));
                }
            }
        }
        Ok(ToyTract { wiggles, nu0_toy, x_close, vertices, segments })
    }

    pub fn base_point() -> Complex64 {
        Complex64::new(5.0, 0.0)
    }

    pub fn wiggles(&self) -> &[ToyWiggle] {
        &self.wiggles
    }

    pub fn nu0_toy(&self) -> f64 {
        self.nu0_toy
    }

    pub fn x_close(&self) -> f64 {
        self.x_close
    }

    /// The infinity proxy: midpoint of the closing edge.
    pub fn infinity_proxy(&self) -> Complex64 {
        Complex64::new(self.x_close, 0.0)
    }

    /// Counterclockwise closed boundary walk (first vertex not repeated).
    /// Slit flanks are traversed twice, as a degenerate Jordan curve.
    pub fn vertices(&self) -> &[Complex64] {
        &self.vertices
    }

    /// Unique boundary segments, split at every attachment point.
    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    /// Geodesics and map values are only trusted left of this abscissa
    /// (one wiggle width, at least 8, short of the truncation).
    pub fn trusted_x(&self) -> f64 {
        let width = self.wiggles.last().map(|w| (w.big_r - w.r).max(8.0)).unwrap_or(8.0);
        self.x_close - width
    }

    /// Strict interior membership.
    pub fn contains(&self, z: Complex64) -> bool {
        z.re > STRIP_X_LEFT
            && z.re < self.x_close
            && z.im.abs() < STRIP_HALF_HEIGHT
            && self.distance_to_boundary(z) > 0.0
    }

    pub fn distance_to_boundary(&self, z: Complex64) -> f64 {
        self.segments.iter().map(|s| s.distance_to(z)).fold(f64::INFINITY, f64::min)
    }

    /// Classifies `z` against the band Y_j (gate collar of wiggle `j`), the
    /// bounded/unbounded complement components X_j/Z_j, and the wiggle bands
    /// W_j^±, and evaluates the signed distance δ.
    pub fn region_classify(&self, z: Complex64, j: usize) -> Result<RegionTag> {
        let Some(w) = self.wiggles.get(j) else {
            return Err(TractError::InvalidGeometry(format!("wiggle index {j} out of range")));
        };
        if !self.contains(z) {
            return Err(TractError::NotInTract { re: z.re, im: z.im });
        }
        let h3 = PI / 3.0;
        let nu = self.nu0_toy;
        let (x, y) = (z.re, z.im);

        let in_y = x >= w.tau - nu && x <= w.tau + nu && y.abs() < h3;
        // The bounded component X_j holds the base point, everything that can
        // reach it over the first slit and through the gate opening — which
        // includes the pocket east of the band (corridor east of Y, the
        // channel before R_j, and the upper band). The unbounded component
        // Z_j is entered by crossing the band westward: the corridor west of
        // Y drains through the descent gap into the bottom band and out past
        // R_j.
        let partition = if in_y {
            Partition::Y
        } else if x < w.r {
            Partition::X
        } else if x >= w.big_r {
            Partition::Z
        } else if y > h3 {
            Partition::X
        } else if y < -h3 {
            Partition::Z
        } else if x > w.tau + nu {
            Partition::X
        } else {
            Partition::Z
        };
        let delta = match partition {
            Partition::X => -1.0,
            Partition::Z => 1.0,
            Partition::Y => (w.tau - x) / nu,
        };
        let w_band = if x >= w.r && x <= w.big_r && y <= h3 {
            if y.abs() < h3 {
                Some(RegionKind::WPlus)
            } else if y < -h3 {
                Some(RegionKind::WMinus)
            } else {
                None
            }
        } else {
            None
        };
        let (glo, ghi) = w.gate_interval();
        let in_gate = (x - w.tau).abs() <= 0.5 && y > glo && y < ghi;
        let kind = if in_y {
            RegionKind::Y
        } else if in_gate {
            RegionKind::Gate
        } else if let Some(band) = w_band {
            band
        } else {
            match partition {
                Partition::X => RegionKind::X,
                Partition::Y => RegionKind::Y,
                Partition::Z => RegionKind::Z,
            }
        };
        Ok(RegionTag { j: j as u32, kind, partition, delta, w_band, in_gate })
    }

    /// The explicit comparison path α from the base point to the truncation
    /// midpoint: over each wiggle at height 2π/3 (through the gate), back
    /// west along the corridor at height 0, and out under the wiggle at
    /// height −2π/3, with turns offset ±1/2 from the wiggle abscissas.
    pub fn alpha_path(&self) -> AlphaPath {
        let h23 = 2.0 * PI / 3.0;
        let c = Complex64::new;
        let mut polyline: Vec<Complex64> = vec![Self::base_point()];
        for w in &self.wiggles {
            polyline.push(c(w.r - 0.5, 0.0));
            polyline.push(c(w.r - 0.5, h23));
            polyline.push(c(w.big_r - 0.5, h23));
            polyline.push(c(w.big_r - 0.5, 0.0));
            polyline.push(c(w.r + 0.5, 0.0));
            polyline.push(c(w.r + 0.5, -h23));
            polyline.push(c(w.big_r + 0.5, -h23));
            polyline.push(c(w.big_r + 0.5, 0.0));
        }
        polyline.push(c(self.x_close, 0.0));

        let mut alpha0 = Vec::with_capacity(self.wiggles.len());
        let mut alpha1 = Vec::new();
        for pair in polyline.windows(2) {
            let (a, b) = (pair[0], pair[1]);
            if a.im == h23 && b.im == h23 {
                // Gate run of the wiggle whose τ it straddles.
                let w = self
                    .wiggles
                    .iter()
                    .find(|w| a.re < w.tau && w.tau < b.re)
                    .expect("gate run straddles its own wiggle's tau");
                alpha1.push([a, c(w.tau - 1.0, h23)]);
                alpha0.push([c(w.tau - 1.0, h23), c(w.tau + 1.0, h23)]);
                alpha1.push([c(w.tau + 1.0, h23), b]);
            } else {
                alpha1.push([a, b]);
            }
        }
        let gate_integrals =
            self.wiggles.iter().map(|w| gate_integral_closed_form(w.eps)).collect();
        AlphaPath { polyline, alpha0, alpha1, gate_integrals }
    }
}

fn assemble_boundary(wiggles: &[ToyWiggle], x_close: f64) -> (Vec<Complex64>, Vec<Segment>) {
    let h3 = PI / 3.0;
    let c = Complex64::new;
    let mut segs: Vec<Segment> = Vec::new();

    // Bottom wall, split where each first slit attaches.
    let mut xs = vec![STRIP_X_LEFT];
    xs.extend(wiggles.iter().map(|w| w.r));
    xs.push(x_close);
    for pair in xs.windows(2) {
        segs.push(Segment::new(c(pair[0], -PI), c(pair[1], -PI)));
    }
    // Top wall, split at each gate abscissa and each wiggle end.
    let mut xs = vec![STRIP_X_LEFT];
    for w in wiggles {
        if w.gated() {
            xs.push(w.tau);
        }
        xs.push(w.big_r);
    }
    xs.push(x_close);
    for pair in xs.windows(2) {
        segs.push(Segment::new(c(pair[0], PI), c(pair[1], PI)));
    }
    segs.push(Segment::new(c(STRIP_X_LEFT, -PI), c(STRIP_X_LEFT, PI)));
    segs.push(Segment::new(c(x_close, -PI), c(x_close, PI)));

    for w in wiggles {
        let (glo, ghi) = w.gate_interval();
        segs.push(Segment::new(c(w.r, -PI), c(w.r, h3)));
        if w.gated() {
            segs.push(Segment::new(c(w.r, h3), c(w.tau, h3)));
            segs.push(Segment::new(c(w.tau, h3), c(w.big_r - 1.0, h3)));
            segs.push(Segment::new(c(w.tau, h3), c(w.tau, glo)));
            segs.push(Segment::new(c(w.tau, ghi), c(w.tau, PI)));
        } else {
            segs.push(Segment::new(c(w.r, h3), c(w.big_r - 1.0, h3)));
        }
        segs.push(Segment::new(c(w.big_r, -h3), c(w.big_r, PI)));
        segs.push(Segment::new(c(w.r + 1.0, -h3), c(w.big_r, -h3)));
    }

    // Counterclockwise walk with the slit flanks doubled.
    let mut v: Vec<Complex64> = Vec::new();
    v.push(c(STRIP_X_LEFT, -PI));
    for w in wiggles {
        let (glo, _) = w.gate_interval();
        v.push(c(w.r, -PI));
        v.push(c(w.r, h3));
        if w.gated() {
            v.push(c(w.tau, h3));
            v.push(c(w.tau, glo));
            v.push(c(w.tau, h3));
        }
        v.push(c(w.big_r - 1.0, h3));
        v.push(c(w.r, h3));
        v.push(c(w.r, -PI));
    }
    v.push(c(x_close, -PI));
    v.push(c(x_close, PI));
    for w in wiggles.iter().rev() {
        let (_, ghi) = w.gate_interval();
        v.push(c(w.big_r, PI));
        v.push(c(w.big_r, -h3));
        v.push(c(w.r + 1.0, -h3));
        v.push(c(w.big_r, -h3));
        v.push(c(w.big_r, PI));
        if w.gated() {
            v.push(c(w.tau, PI));
            v.push(c(w.tau, ghi));
            v.push(c(w.tau, PI));
        }
    }
    v.push(c(STRIP_X_LEFT, PI));

    (v, segs)
}

/// X/Y/Z partition class relative to one wiggle's band.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Partition {
    X,
    Y,
    Z,
}

/// Named regions a point can fall in, relative to wiggle `j`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RegionKind {
    X,
    Y,
    Z,
    WPlus,
    WMinus,
    Gate,
    Other,
}

impl std::fmt::Display for RegionKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            RegionKind::X => "X",
            RegionKind::Y => "Y",
            RegionKind::Z => "Z",
            RegionKind::WPlus => "W+",
            RegionKind::WMinus => "W-",
            RegionKind::Gate => "gate",
            RegionKind::Other => "other",
        };
        f.write_str(s)
    }
}

/// Classification of a point against wiggle `j`.
///
/// `partition` is always one of X/Y/Z; `kind` is the most specific tag
/// (band Y, gate opening, or wiggle band W±) with the partition as fallback.
/// δ is −1 throughout X_j, +1 throughout Z_j, and `(τ_j − re z)/ν₀` on Y_j,
/// which makes it continuous across both band edges.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegionTag {
    pub j: u32,
    pub kind: RegionKind,
    pub partition: Partition,
    pub delta: f64,
    pub w_band: Option<RegionKind>,
    pub in_gate: bool,
}

/// The explicit comparison path and its split into the gate windows α⁰
/// (within distance 1 of a gate abscissa, at height 2π/3) and the remainder α¹.
#[derive(Debug, Clone)]
pub struct AlphaPath {
    pub polyline: Vec<Complex64>,
    pub alpha0: Vec<[Complex64; 2]>,
    pub alpha1: Vec<[Complex64; 2]>,
    /// Per-gate value of ∫ |dz|/μ_k over the window, in closed form.
    pub gate_integrals: Vec<f64>,
}

impl AlphaPath {
    pub fn polyline_length(&self) -> f64 {
        self.polyline.windows(2).map(|p| (p[1] - p[0]).norm()).sum()
    }

    pub fn alpha0_length(&self) -> f64 {
        self.alpha0.iter().map(|s| (s[1] - s[0]).norm()).sum()
    }

    pub fn alpha1_length(&self) -> f64 {
        self.alpha1.iter().map(|s| (s[1] - s[0]).norm()).sum()
    }

    pub fn to_value(&self) -> Value {
        let pt = |z: &Complex64| Value::Arr(vec![Value::Float(z.re), Value::Float(z.im)]);
        let seg = |s: &[Complex64; 2]| Value::Arr(vec![pt(&s[0]), pt(&s[1])]);
        Value::obj([
            ("polyline", Value::Arr(self.polyline.iter().map(pt).collect())),
            ("alpha0", Value::Arr(self.alpha0.iter().map(seg).collect())),
            ("alpha1", Value::Arr(self.alpha1.iter().map(seg).collect())),
            (
                "gate_integrals",
                Value::Arr(self.gate_integrals.iter().map(|&g| Value::Float(g)).collect()),
            ),
            ("alpha0_length", Value::Float(self.alpha0_length())),
            ("alpha1_length", Value::Float(self.alpha1_length())),
        ])
    }
}

/// Closed form of the gate window integral: ∫ over the window of |dz|/μ_k
/// with μ_k(t) = max(|t − τ_k|, πε/3) evaluates to 2·log(3/(πε)) + 2.
pub fn gate_integral_closed_form(eps: f64) -> f64 {
    2.0 * (3.0 / (PI * eps)).ln() + 2.0
}

/// Numerical counterpart of `gate_integral_closed_form`: the plateau
/// contributes exactly 2, and the tail 2·∫_a^1 dt/t (a = πε/3, signed when
/// a > 1) is integrated adaptively. Coincides with the geometric window
/// integral whenever πε/3 ≤ 1.
pub fn gate_integral_quadrature(eps: f64) -> f64 {
    let a = PI * eps / 3.0;
    2.0 + 2.0 * adaptive_simpson(&|t: f64| 1.0 / t, a, 1.0, 1e-12, 40)
}

pub(crate) fn adaptive_simpson<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    tol: f64,
    depth: u32,
) -> f64 {
    let m = 0.5 * (a + b);
    let (fa, fm, fb) = (f(a), f(m), f(b));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    simpson_step(f, a, b, fa, fm, fb, whole, tol, depth)
}

#[allow(clippy::too_many_arguments)]
fn simpson_step<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> f64 {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let (flm, frm) = (f(lm), f(rm));
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        left + right + delta / 15.0
    } else {
        simpson_step(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
            + simpson_step(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
    }
}

// Serialized shape of a toy tract: the defining parameters plus the derived
// vertex walk and a few named anchors for plotting. Deserialization rebuilds
// the geometry from the parameters and re-validates.
#[derive(Serialize, Deserialize)]
struct ToyTractRepr {
    wiggles: Vec<ToyWiggleRepr>,
    nu0_toy: f64,
    x_close: f64,
    #[serde(default)]
    vertices: Vec<[f64; 2]>,
    #[serde(default)]
    anchors: Option<ToyAnchors>,
}

#[derive(Serialize, Deserialize, Clone)]
struct ToyWiggleRepr {
    r: f64,
    #[serde(rename = "R")]
    big_r: f64,
    tau: f64,
    eps: f64,
}

#[derive(Serialize, Deserialize, Clone)]
struct ToyAnchors {
    base_point: [f64; 2],
    /// (τ_j, 2π/3) per wiggle.
    gate_centers: Vec<[f64; 2]>,
    /// [τ_j − ν₀, τ_j + ν₀] per wiggle.
    band_edges: Vec<[f64; 2]>,
}

impl Serialize for ToyTract {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let repr = ToyTractRepr {
            wiggles: self
                .wiggles
                .iter()
                .map(|w| ToyWiggleRepr { r: w.r, big_r: w.big_r, tau: w.tau, eps: w.eps })
                .collect(),
            nu0_toy: self.nu0_toy,
            x_close: self.x_close,
            vertices: self.vertices.iter().map(|z| [z.re, z.im]).collect(),
            anchors: Some(ToyAnchors {
                base_point: [5.0, 0.0],
                gate_centers: self.wiggles.iter().map(|w| [w.tau, 2.0 * PI / 3.0]).collect(),
                band_edges: self
                    .wiggles
                    .iter()
                    .map(|w| [w.tau - self.nu0_toy, w.tau + self.nu0_toy])
                    .collect(),
            }),
        };
        repr.serialize(s)
    }
}

impl<'de> Deserialize<'de> for ToyTract {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let repr = ToyTractRepr::deserialize(d)?;
        let specs: Vec<ToyWiggleSpec> = repr
            .wiggles
            .iter()
            .map(|w| ToyWiggleSpec { r: w.r, big_r: w.big_r, eps: w.eps })
            .collect();
        let tract =
            ToyTract::build(&specs, repr.nu0_toy, repr.x_close).map_err(D::Error::custom)?;
        for (stored, rebuilt) in repr.wiggles.iter().zip(tract.wiggles.iter()) {
            if (stored.tau - rebuilt.tau).abs() > 1e-9 {
                return Err(D::Error::custom(format!(
                    "stored tau = {} disagrees with R - 2 - 3*nu0_toy = {}",
                    stored.tau, rebuilt.tau
                )));
            }
        }
        Ok(tract)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn tw(x: f64) -> TowerScalar {
        TowerScalar::from_f64(x).unwrap()
    }

    fn alpha1_datum(n: usize) -> TractDatum {
        let profile = GrowthProfile::loglog_alpha(1.0).unwrap();
        TractDatum::generate(&profile, &tw(1e6), 30.0, 60.0, n).unwrap()
    }

    // --- full-scale datum ---

    #[test]
    fn generate_seed_matches_direct_formula() {
        let datum = alpha1_datum(2);
        // Seed oracle: Θ is pinned at Θ(e^e) = 1 below its floor, so there
        // φ(t) = t² and the seed is φ⁻¹(log r0 + 1) = sqrt(log r0 + 1),
        // well below e^e. Hence log R_0 = log r0 + 1 + 9·sqrt(log r0 + 1).
        let w0 = (1e6f64).ln() + 1.0;
        let expect = w0 + 9.0 * w0.sqrt();
        let log_big0 = datum.terms[0].big_r.log().unwrap().to_f64().unwrap();
        assert!(((log_big0 - expect) / expect).abs() < 1e-9, "{log_big0} vs {expect}");
        assert_eq!(datum.terms[0].big_r.level(), 1);
        // r_0 is preserved bit-for-bit.
        assert_eq!(datum.terms[0].r, tw(1e6));
    }

    #[test]
    fn generate_recurrence_lands_at_depth() {
        let datum = alpha1_datum(3);
        // log log r_1 = log(φ(R_0) − 1) ≈ log φ(R_0) = (1 + Φ(R_0))·log R_0,
        // with Φ(R_0) = 1/loglog R_0 = 1/ln(log R_0).
        let log_big0 = datum.terms[0].big_r.log().unwrap().to_f64().unwrap();
        let phi_log = (1.0 + 1.0 / log_big0.ln()) * log_big0;
        let loglog_r1 =
            datum.terms[1].r.log().unwrap().log().unwrap().to_f64().unwrap();
        assert!((loglog_r1 - phi_log).abs() / phi_log < 1e-10);
        // Everything from j=1 on lives at level ≥ 1 (in fact ≥ 2 here).
        for t in &datum.terms[1..] {
            assert!(t.r.level() >= 1);
            assert!(t.big_r.level() >= 1);
            assert!(t.tau.level() >= 1);
        }
        // τ_j = R_j − 182 for ν₀ = 60; absorbed at this scale but ordered.
        assert_eq!(datum.terms[1].tau.cmp_value(&datum.terms[1].big_r), Ordering::Equal);
        assert!(datum.terms[1].tau.absorbed());
        // Gate logs are negative and differ by the factor 4C² in magnitude.
        for t in &datum.terms {
            assert!(t.log_a.is_negative());
            assert!(t.log_b.is_negative());
        }
        let la = datum.terms[0].log_a.abs().log().unwrap().to_f64().unwrap();
        let lb = datum.terms[0].log_b.abs().log().unwrap().to_f64().unwrap();
        assert!((la - lb - (4.0f64 * 900.0).ln()).abs() < 1e-9);
    }

    #[test]
    fn generate_rejects_bad_parameters() {
        let profile = GrowthProfile::loglog_alpha(1.0).unwrap();
        let small = TractDatum::generate(&profile, &tw(5.0), 30.0, 60.0, 1);
        assert!(matches!(small, Err(TractError::InvalidDatum(ref m)) if m.contains("too small")));
        assert!(TractDatum::generate(&profile, &tw(1e6), 1.0, 60.0, 1).is_err());
        assert!(TractDatum::generate(&profile, &tw(1e6), 30.0, 0.0, 1).is_err());
        assert!(TractDatum::generate(&profile, &tw(1e6), 30.0, 60.0, 0).is_err());
    }

    #[test]
    fn validate_passes_generated_data_for_builtin_profiles() {
        use std::time::Instant;
        let start = Instant::now();
        for profile in [
            GrowthProfile::loglog_alpha(0.5).unwrap(),
            GrowthProfile::loglog_alpha(1.0).unwrap(),
            GrowthProfile::loglog_alpha(2.0).unwrap(),
            GrowthProfile::scaled(GrowthProfile::loglog_alpha(1.0).unwrap(), 0.5).unwrap(),
        ] {
            let datum = TractDatum::generate(&profile, &tw(DATUM_R0_MIN), 30.0, 60.0, 40).unwrap();
            let report = datum.validate().unwrap();
            assert!(
                report.pass(),
                "validation failed for {profile}: {}",
                report.to_text()
            );
        }
        assert!(start.elapsed().as_secs_f64() < 1.0, "validation sweep too slow");
    }

    #[test]
    fn validate_flags_hand_built_spacing_violation() {
        let mut datum = alpha1_datum(2);
        // Park r_1 only 100 above R_0: below the required gap of 120.
        datum.terms[1].r = datum.terms[0].big_r.add(&tw(100.0)).unwrap();
        let report = datum.validate().unwrap();
        assert!(!report.pass());
        let line = report.line("spacing_nu0_r", 1).unwrap();
        assert!(!line.pass, "expected the j=1 inter-wiggle spacing to fail");
        // The recurrence line for j=1 must fail too (r_1 no longer matches).
        assert!(!report.line("recurrence", 1).unwrap().pass);
        // Text output names the failures.
        let text = report.to_text();
        assert!(text.contains("FAIL spacing_nu0_r j=1"));
    }

    #[test]
    fn validate_sumlem_line_holds_at_j5() {
        let datum = alpha1_datum(6);
        let report = datum.validate().unwrap();
        let line = report.line("sumlem", 5).unwrap();
        assert!(line.pass);
    }

    #[test]
    fn range_bounds_pass_at_j3_and_trivially_at_j0() {
        let datum = alpha1_datum(5);
        let line = datum.range_bounds_certify(3).unwrap();
        assert!(line.pass, "{}", line.detail);
        let line0 = datum.range_bounds_certify(0).unwrap();
        assert!(line0.pass, "{}", line0.detail);
    }

    #[test]
    fn range_bounds_fail_for_slow_growth_at_small_r0_and_name_the_inequality() {
        // For slowly growing φ (α = 2) at r0 = 1e6 the upper chain genuinely
        // fails at j = 0: C·R_0 is not below φ(R_0)/6. Far larger r0 repairs it.
        let profile = GrowthProfile::loglog_alpha(2.0).unwrap();
        let datum = TractDatum::generate(&profile, &tw(1e6), 30.0, 60.0, 2).unwrap();
        let line = datum.range_bounds_certify(0).unwrap();
        assert!(!line.pass);
        assert!(line.detail.contains("fails at: C (R_j"), "got: {}", line.detail);

        let big = TowerScalar::new(1, 60.0 * (10.0f64).ln()).unwrap(); // 1e60
        let datum = TractDatum::generate(&profile, &big, 30.0, 60.0, 2).unwrap();
        assert!(datum.range_bounds_certify(0).unwrap().pass);
    }

    /// Bit-identical value representation; the `absorbed` flag is a process
    /// annotation and is not serialized, so it is excluded deliberately.
    fn same_rep(a: &TowerScalar, b: &TowerScalar) -> bool {
        a.level() == b.level() && a.mantissa() == b.mantissa() && a.sign() == b.sign()
    }

    #[test]
    fn datum_json_round_trips() {
        let datum = alpha1_datum(3);
        let json = serde_json::to_string(&datum).unwrap();
        assert!(json.contains("\"R\""));
        let back: TractDatum = serde_json::from_str(&json).unwrap();
        assert_eq!(back.terms.len(), 3);
        for (a, b) in datum.terms.iter().zip(back.terms.iter()) {
            let fields = [
                ("r", &a.r, &b.r),
                ("R", &a.big_r, &b.big_r),
                ("tau", &a.tau, &b.tau),
                ("log_a", &a.log_a, &b.log_a),
                ("log_b", &a.log_b, &b.log_b),
            ];
            for (name, x, y) in fields {
                assert!(same_rep(x, y), "{name} j={}: {x:?} vs {y:?}", a.j);
            }
        }
        assert_eq!(datum.c, back.c);
        assert_eq!(datum.r0, back.r0);
        // Out-of-order term indices are rejected.
        let bad = json.replace("\"j\":1", "\"j\":7");
        assert!(serde_json::from_str::<TractDatum>(&bad).is_err());
    }

    // --- toy tract ---

    fn toy_one() -> ToyTract {
        // τ = 26 − 2 − 6 = 18, band [16, 20].
        ToyTract::build(&[(10.0, 26.0, 0.5).into()], 2.0, 40.0).unwrap()
    }

    #[test]
    fn toy_degenerate_gate_reduces_polygon() {
        let t = ToyTract::build(&[(10.0, 20.0, 1.0).into()], 1.0, 30.0).unwrap();
        // No gate slits: 2 bottom pieces, 2 top pieces, left, close, V1, H1, V2, H2.
        assert_eq!(t.segments().len(), 10);
        assert!(t.vertices().iter().all(|v| v.re != t.wiggles()[0].tau));
    }

    #[test]
    fn toy_zero_wiggles_is_plain_half_strip() {
        let t = ToyTract::build(&[], 1.0, 30.0).unwrap();
        assert_eq!(t.segments().len(), 4);
        assert_eq!(t.vertices().len(), 4);
        assert!(t.contains(Complex64::new(5.0, 0.0)));
        assert!(!t.contains(Complex64::new(3.0, 0.0)));
    }

    #[test]
    fn toy_two_wiggles_gate_interval_example() {
        let t = ToyTract::build(
            &[(10.0, 20.0, 0.5).into(), (30.0, 40.0, 0.5).into()],
            2.0,
            50.0,
        )
        .unwrap();
        assert_eq!(t.wiggles()[0].tau, 12.0);
        let (glo, ghi) = t.wiggles()[0].gate_interval();
        assert!((glo - PI / 2.0).abs() < 1e-15);
        assert!((ghi - 5.0 * PI / 6.0).abs() < 1e-15);
        // Gate slit segments end exactly at the opening.
        assert!(t
            .segments()
            .iter()
            .any(|s| s.a == Complex64::new(12.0, PI / 3.0) && (s.b.im - glo).abs() < 1e-15));
    }

    #[test]
    fn toy_rejects_bad_parameters() {
        let e = |r: std::result::Result<ToyTract, TractError>| {
            assert!(matches!(r, Err(TractError::InvalidGeometry(_))));
        };
        e(ToyTract::build(&[(5.5, 20.0, 0.5).into()], 1.0, 30.0)); // too close to base
        e(ToyTract::build(&[(10.0, 14.0, 0.5).into()], 1.0, 30.0)); // too narrow
        e(ToyTract::build(&[(10.0, 20.0, 0.0).into()], 1.0, 30.0)); // eps = 0
        e(ToyTract::build(&[(10.0, 20.0, 1.5).into()], 1.0, 30.0)); // eps > 1
        e(ToyTract::build(&[(10.0, 20.0, 0.5).into(), (21.0, 31.0, 0.5).into()], 1.0, 40.0)); // gap < 2
        e(ToyTract::build(&[(10.0, 20.0, 0.5).into()], 1.0, 21.0)); // x_close too close
    }

    #[test]
    fn toy_polygon_is_simple_and_walk_is_closed() {
        let t = ToyTract::build(
            &[(10.0, 26.0, 0.5).into(), (30.0, 46.0, 0.25).into()],
            2.0,
            60.0,
        )
        .unwrap();
        // Build already sweeps for conflicts; verify the walk sits on the strip.
        for v in t.vertices() {
            assert!(v.re >= STRIP_X_LEFT && v.re <= 60.0);
            assert!(v.im.abs() <= PI);
        }
        assert_eq!(t.vertices().first().unwrap(), &Complex64::new(4.0, -PI));
        assert_eq!(t.vertices().last().unwrap(), &Complex64::new(4.0, PI));
        // Every consecutive pair is a nonzero axis-aligned edge.
        for pair in t.vertices().windows(2) {
            let d = pair[1] - pair[0];
            assert!(d.norm() > 0.0);
            assert!(d.re == 0.0 || d.im == 0.0);
        }
    }

    #[test]
    fn region_examples() {
        let t = toy_one();
        // Band midpoint: Y with δ = 0.
        let tag = t.region_classify(Complex64::new(18.0, 0.2), 0).unwrap();
        assert_eq!(tag.kind, RegionKind::Y);
        assert_eq!(tag.partition, Partition::Y);
        assert!((tag.delta - 0.0).abs() < 1e-12);
        assert_eq!(tag.w_band, Some(RegionKind::WPlus));
        // Base point: X with δ = −1 for every j.
        let tag = t.region_classify(Complex64::new(5.0, 0.0), 0).unwrap();
        assert_eq!(tag.kind, RegionKind::X);
        assert_eq!(tag.delta, -1.0);
        // Closing-edge side: Z with δ = +1.
        let tag = t.region_classify(Complex64::new(38.0, 0.0), 0).unwrap();
        assert_eq!(tag.kind, RegionKind::Z);
        assert_eq!(tag.delta, 1.0);
        // Bottom band under the second slit: W− tag, Z partition.
        let tag = t.region_classify(Complex64::new(15.0, -2.0), 0).unwrap();
        assert_eq!(tag.kind, RegionKind::WMinus);
        assert_eq!(tag.partition, Partition::Z);
        // Corridor west of the band: W+ tag, Z partition (drains out).
        let tag = t.region_classify(Complex64::new(13.0, 0.0), 0).unwrap();
        assert_eq!(tag.kind, RegionKind::WPlus);
        assert_eq!(tag.partition, Partition::Z);
        // Corridor east of the band: X partition (pocket behind the gate).
        let tag = t.region_classify(Complex64::new(22.0, 0.0), 0).unwrap();
        assert_eq!(tag.partition, Partition::X);
        // Gate opening point.
        let tag = t.region_classify(Complex64::new(18.0, 2.0 * PI / 3.0), 0).unwrap();
        assert_eq!(tag.kind, RegionKind::Gate);
        assert_eq!(tag.partition, Partition::X);
        // Outside.
        assert!(matches!(
            t.region_classify(Complex64::new(3.0, 0.0), 0),
            Err(TractError::NotInTract { .. })
        ));
        assert!(matches!(
            t.region_classify(Complex64::new(10.0, 0.0), 0),
            Err(TractError::NotInTract { .. })
        ));
    }

    #[test]
    fn partition_matches_flood_fill_components() {
        // The bounded component X_j is exactly what a grid flood fill from
        // the base point reaches without crossing the closed band Y̅_j.
        let t = toy_one();
        let w = t.wiggles()[0];
        let nu = t.nu0_toy();
        let h3 = PI / 3.0;
        let nx = 144usize;
        let ny = 30usize;
        let dx = (t.x_close() - STRIP_X_LEFT) / nx as f64;
        let dy = 2.0 * PI / ny as f64;
        let pt = |i: usize, k: usize| {
            Complex64::new(
                STRIP_X_LEFT + (i as f64 + 0.5) * dx,
                -PI + (k as f64 + 0.5) * dy,
            )
        };
        let in_band = |z: Complex64| {
            z.re >= w.tau - nu && z.re <= w.tau + nu && z.im.abs() <= h3
        };
        let open = |z: Complex64| t.contains(z) && !in_band(z);
        // BFS over the grid graph; an edge is blocked if the straight hop
        // touches any boundary segment.
        let mut reach = vec![vec![false; ny]; nx];
        let start = (
            ((5.0 - STRIP_X_LEFT) / dx) as usize,
            ((0.0 + PI) / dy) as usize,
        );
        assert!(open(pt(start.0, start.1)));
        let mut queue = std::collections::VecDeque::from([start]);
        reach[start.0][start.1] = true;
        while let Some((i, k)) = queue.pop_front() {
            let here = pt(i, k);
            let neighbours: [(isize, isize); 4] = [(1, 0), (-1, 0), (0, 1), (0, -1)];
            for (di, dk) in neighbours {
                let (ni, nk) = (i as isize + di, k as isize + dk);
                if ni < 0 || nk < 0 || ni as usize >= nx || nk as usize >= ny {
                    continue;
                }
                let (ni, nk) = (ni as usize, nk as usize);
                if reach[ni][nk] {
                    continue;
                }
                let there = pt(ni, nk);
                if !open(there) {
                    continue;
                }
                let hop = Segment { a: here, b: there };
                if t.segments().iter().any(|s| segments_touch(s, &hop)) {
                    continue;
                }
                reach[ni][nk] = true;
                queue.push_back((ni, nk));
            }
        }
        let mut checked = 0usize;
        for i in 0..nx {
            for k in 0..ny {
                let z = pt(i, k);
                if !open(z) || t.distance_to_boundary(z) < 0.3 || in_band(z) {
                    continue;
                }
                let tag = t.region_classify(z, 0).unwrap();
                let expect = if reach[i][k] { Partition::X } else { Partition::Z };
                assert_eq!(
                    tag.partition, expect,
                    "at {z}: flood fill and classifier disagree"
                );
                checked += 1;
            }
        }
        assert!(checked > 1000, "too few interior samples exercised: {checked}");
    }

    #[test]
    fn delta_is_continuous_across_band_edges() {
        let t = toy_one();
        let w = t.wiggles()[0];
        let nu = t.nu0_toy();
        let dx = 0.01;
        for y in [-0.9, 0.0, 0.9] {
            // West edge: Z side has δ = +1, band edge tends to +1.
            let inside = t
                .region_classify(Complex64::new(w.tau - nu + dx, y), 0)
                .unwrap();
            let outside = t
                .region_classify(Complex64::new(w.tau - nu - dx, y), 0)
                .unwrap();
            assert_eq!(outside.partition, Partition::Z);
            assert!((inside.delta - outside.delta).abs() <= 2.0 * dx / nu + 1e-12);
            // East edge: X side has δ = −1.
            let inside = t
                .region_classify(Complex64::new(w.tau + nu - dx, y), 0)
                .unwrap();
            let outside = t
                .region_classify(Complex64::new(w.tau + nu + dx, y), 0)
                .unwrap();
            assert_eq!(outside.partition, Partition::X);
            assert!((inside.delta - outside.delta).abs() <= 2.0 * dx / nu + 1e-12);
        }
    }

    #[test]
    fn alpha_path_one_wiggle_lengths() {
        let t = ToyTract::build(&[(10.0, 20.0, 0.5).into()], 1.0, 30.0).unwrap();
        let a = t.alpha_path();
        let h23 = 2.0 * PI / 3.0;
        let expect: Vec<Complex64> = [
            (5.0, 0.0),
            (9.5, 0.0),
            (9.5, h23),
            (19.5, h23),
            (19.5, 0.0),
            (10.5, 0.0),
            (10.5, -h23),
            (20.5, -h23),
            (20.5, 0.0),
            (30.0, 0.0),
        ]
        .iter()
        .map(|&(x, y)| Complex64::new(x, y))
        .collect();
        assert_eq!(a.polyline, expect);
        let total = 43.0 + 8.0 * PI / 3.0;
        assert!((a.polyline_length() - total).abs() < 1e-12);
        assert!((a.alpha0_length() - 2.0).abs() < 1e-12);
        assert!((a.alpha1_length() - (total - 2.0)).abs() < 1e-12);
        // Window sits around τ = 15 at the gate height.
        assert_eq!(a.alpha0.len(), 1);
        assert_eq!(a.alpha0[0][0], Complex64::new(14.0, h23));
        assert_eq!(a.alpha0[0][1], Complex64::new(16.0, h23));
        // Every alpha point stays strictly inside the tract.
        for pair in a.polyline.windows(2) {
            for s in 0..=10 {
                let z = pair[0] + (pair[1] - pair[0]) * (s as f64 / 10.0);
                assert!(t.contains(z) || z == *a.polyline.last().unwrap(), "alpha leaves tract at {z}");
            }
        }
    }

    #[test]
    fn gate_integral_examples() {
        // ε = 3/(π e) makes the log factor exactly 1.
        let eps = 3.0 / (PI * std::f64::consts::E);
        assert!((gate_integral_closed_form(eps) - 4.0).abs() < 1e-12);
        // ε = 1: the closed form evaluates to 2·log(3/π) + 2.
        let expect = 2.0 * (3.0 / PI).ln() + 2.0;
        assert!((gate_integral_closed_form(1.0) - expect).abs() < 1e-15);
        assert!((expect - 1.907764).abs() < 1e-6);
    }

    #[test]
    fn gate_quadrature_matches_closed_form() {
        for eps in [1.0, 0.5, 0.1, 0.01, 3.0 / (PI * std::f64::consts::E)] {
            let q = gate_integral_quadrature(eps);
            let c = gate_integral_closed_form(eps);
            assert!((q - c).abs() < 1e-8, "eps={eps}: {q} vs {c}");
        }
    }

    #[test]
    fn honest_window_quadrature_below_plateau_cap() {
        // For πε/3 ≤ 1 the unsigned window integral equals the closed form:
        // plateau of width 2a at height 1/a plus two log tails.
        for eps in [0.5, 0.25, 0.05] {
            let a = PI * eps / 3.0;
            let f = |t: f64| 1.0 / t.abs().max(a);
            let q = adaptive_simpson(&f, -1.0, -a, 1e-12, 40)
                + 2.0 // plateau on [−a, a]
                + adaptive_simpson(&f, a, 1.0, 1e-12, 40);
            assert!((q - gate_integral_closed_form(eps)).abs() < 1e-8);
        }
    }

    #[test]
    fn alpha_gate_integrals_follow_eps() {
        let t = ToyTract::build(
            &[(10.0, 26.0, 1.0).into(), (30.0, 46.0, 0.5).into()],
            2.0,
            60.0,
        )
        .unwrap();
        let a = t.alpha_path();
        assert_eq!(a.gate_integrals.len(), 2);
        assert!((a.gate_integrals[0] - gate_integral_closed_form(1.0)).abs() < 1e-15);
        assert!((a.gate_integrals[1] - gate_integral_closed_form(0.5)).abs() < 1e-15);
        assert_eq!(a.alpha0.len(), 2);
    }

    #[test]
    fn toy_json_round_trips_and_rebuilds() {
        let t = toy_one();
        let json = serde_json::to_string(&t).unwrap();
        assert!(json.contains("\"anchors\""));
        let back: ToyTract = serde_json::from_str(&json).unwrap();
        assert_eq!(t.vertices(), back.vertices());
        assert_eq!(t.wiggles(), back.wiggles());
        // Tampered tau is rejected.
        let bad = json.replace("\"tau\":18.0", "\"tau\":17.0");
        assert!(bad != json);
        assert!(serde_json::from_str::<ToyTract>(&bad).is_err());
    }

    #[test]
    fn trusted_region_leaves_a_wiggle_width() {
        let t = toy_one();
        assert_eq!(t.trusted_x(), 40.0 - 16.0);
        let empty = ToyTract::build(&[], 1.0, 30.0).unwrap();
        assert_eq!(empty.trusted_x(), 22.0);
    }

    proptest! {
        #[test]
        fn random_toy_tracts_build_and_classify(
            n in 0usize..3,
            nu0 in 0.5f64..2.5,
            r0 in 6.0f64..15.0,
            widths in proptest::collection::vec(0.0f64..20.0, 3),
            gaps in proptest::collection::vec(2.0f64..15.0, 3),
            eps in proptest::collection::vec(0.01f64..1.0, 3),
            tail in 2.0f64..30.0,
            px in 0.0f64..1.0,
            py in 0.0f64..1.0,
        ) {
            let mut specs = Vec::new();
            let mut x = r0;
            for i in 0..n {
                let big_r = x + 3.0 + 3.0 * nu0 + widths[i];
                specs.push(ToyWiggleSpec { r: x, big_r, eps: eps[i] });
                x = big_r + gaps[i];
            }
            let x_close = x + tail;
            let t = ToyTract::build(&specs, nu0, x_close).unwrap();
            prop_assert!(t.contains(ToyTract::base_point()));
            let a = t.alpha_path();
            prop_assert!((a.polyline_length() - a.alpha0_length() - a.alpha1_length()).abs() < 1e-9);
            // Classify an arbitrary strip point against every wiggle.
            let z = Complex64::new(
                STRIP_X_LEFT + px * (x_close - STRIP_X_LEFT),
                -PI + py * 2.0 * PI,
            );
            if t.contains(z) {
                for j in 0..n {
                    let tag = t.region_classify(z, j).unwrap();
                    prop_assert!(tag.delta >= -1.0 && tag.delta <= 1.0);
                }
            }
        }
    }
}
