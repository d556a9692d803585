//! Slow-decay growth laws.
//!
//! A [`GrowthProfile`] carries a positive decreasing decay law Θ (also written
//! Φ when it has been rescaled) on `[t_min, ∞)` and derives from it the growth
//! functions used everywhere else:
//!
//! * `φ(t) = t^(1+Φ(t))`, evaluated in tower arithmetic so the first-order
//!   exponent correction survives at any depth,
//! * `φ⁻¹`, a seeded log-domain bisection,
//! * `Ψ(t) = 10·φ⁻¹(log t)/log t` and `ψ(t) = t^(1+Ψ(t))`.
//!
//! Below `t_min` the law is pinned at the boundary value `Φ(t_min)`. That
//! degenerate linear-in-log-t extension keeps `φ` strictly increasing with
//! `φ(1) = 1`, keeps `sup Φ = Φ(t_min)` (which the shift threshold relies on),
//! and makes `φ⁻¹` total on `[1, ∞)`. Points in the extension region are
//! flagged as such in every report.

use std::cmp::Ordering;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::report::{Report, Table, Value};
use crate::tower::{TowerError, TowerScalar};

/// Smallest target for which the seeded inversion bracket
/// `[w^(1-2Φ(w)), w^(1-Φ(w)/2)]` has been verified to hold without widening.
/// Below this the bisection still converges; it just may have to widen first.
pub const PHIAPP_BRACKET_MIN_W: f64 = 1e3;

#[derive(Debug, Error)]
pub enum GrowthError {
    #[error("growth law domain: {0}")]
    DomainError(String),
    #[error("phi inversion failed to converge: {0}")]
    ConvergenceError(String),
    #[error("invalid profile: {0}")]
    InvalidProfile(String),
    #[error("table profile out of range: {0}")]
    TableRange(String),
    #[error(transparent)]
    Tower(#[from] TowerError),
}

type Result<T> = std::result::Result<T, GrowthError>;

#[derive(Debug, Clone, PartialEq)]
enum ProfileKind {
    /// Θ(t) = (log log t)^(-α).
    LogLogAlpha { alpha: f64 },
    /// Φ(t) = factor · Θ_base(t) with factor in (0, 1].
    ScaledTheta { base: Box<GrowthProfile>, factor: f64 },
    /// Piecewise law through `(t, Θ(t))` knots, interpolated linearly in
    /// log t and clamped to the last knot beyond the table.
    Table { knots: Vec<(f64, f64)> },
}

/// A decay law together with the left edge of its trusted domain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ProfileRepr", into = "ProfileRepr")]
pub struct GrowthProfile {
    kind: ProfileKind,
    t_min: f64,
}

impl GrowthProfile {
    /// The law Θ(t) = (log log t)^(-α); trusted from t₀ = exp(exp(α)), where
    /// Θ(t)·log t turns increasing.
    pub fn loglog_alpha(alpha: f64) -> Result<Self> {
        if !alpha.is_finite() || alpha <= 0.0 {
            return Err(GrowthError::InvalidProfile(format!(
                "loglog_alpha needs alpha > 0, got {alpha}"
            )));
        }
        let t_min = alpha.exp().exp();
        if !t_min.is_finite() {
            return Err(GrowthError::InvalidProfile(format!(
                "exp(exp({alpha})) exceeds machine range"
            )));
        }
        Ok(Self {
            kind: ProfileKind::LogLogAlpha { alpha },
            t_min,
        })
    }

    pub fn scaled(base: GrowthProfile, factor: f64) -> Result<Self> {
        if !factor.is_finite() || factor <= 0.0 || factor > 1.0 {
            return Err(GrowthError::InvalidProfile(format!(
                "scale factor must lie in (0, 1], got {factor}"
            )));
        }
        let t_min = base.t_min;
        Ok(Self {
            kind: ProfileKind::ScaledTheta {
                base: Box::new(base),
                factor,
            },
            t_min,
        })
    }

    pub fn table(knots: Vec<(f64, f64)>) -> Result<Self> {
        if knots.is_empty() {
            return Err(GrowthError::InvalidProfile("empty knot table".into()));
        }
        for &(t, theta) in &knots {
            if !t.is_finite() || t <= 1.0 {
                return Err(GrowthError::InvalidProfile(format!(
                    "knot abscissa must be finite and > 1, got {t}"
                )));
            }
            if !theta.is_finite() || theta <= 0.0 {
                return Err(GrowthError::InvalidProfile(format!(
                    "knot value must be finite and > 0, got {theta}"
                )));
            }
        }
        if knots.windows(2).any(|w| w[1].0 <= w[0].0) {
            return Err(GrowthError::InvalidProfile(
                "knot abscissas must be strictly increasing".into(),
            ));
        }
        let t_min = knots[0].0;
        Ok(Self {
            kind: ProfileKind::Table { knots },
            t_min,
        })
    }

    /// Override the trusted-domain edge. The law must evaluate to a positive
    /// finite value there.
    pub fn with_t_min(mut self, t_min: f64) -> Result<Self> {
        if !t_min.is_finite() || t_min <= 1.0 {
            return Err(GrowthError::InvalidProfile(format!(
                "t_min must be finite and > 1, got {t_min}"
            )));
        }
        self.t_min = t_min;
        let boundary = self.boundary_theta()?;
        if !boundary.is_finite() || boundary <= 0.0 {
            return Err(GrowthError::InvalidProfile(format!(
                "law evaluates to {boundary} at t_min = {t_min}"
            )));
        }
        Ok(self)
    }

    pub fn t_min(&self) -> f64 {
        self.t_min
    }

    /// The exponent α when this is a plain loglog law.
    pub fn alpha(&self) -> Option<f64> {
        match &self.kind {
            ProfileKind::LogLogAlpha { alpha } => Some(*alpha),
            _ => None,
        }
    }

    /// Whether `t` falls left of `t_min`, where the pinned extension applies.
    pub fn in_extension(&self, t: &TowerScalar) -> bool {
        let edge = TowerScalar::from_f64(self.t_min).expect("t_min is finite");
        t.cmp_value(&edge) == Ordering::Less
    }

    fn boundary_theta(&self) -> Result<f64> {
        self.main_theta(&TowerScalar::from_f64(self.t_min)?)
    }

    /// The law on its trusted domain, as machine float. Underflows to zero
    /// for towers so deep that (log log t)^(-α) drops below machine range.
    fn main_theta(&self, t: &TowerScalar) -> Result<f64> {
        match &self.kind {
            ProfileKind::LogLogAlpha { alpha } => {
                let ll = t.log()?.log()?;
                match ll.to_f64() {
                    Some(x) => Ok(x.powf(-alpha)),
                    None => Ok(match ll.log_f64() {
                        Some(ln_ll) => (-alpha * ln_ll).exp(),
                        None => 0.0,
                    }),
                }
            }
            ProfileKind::ScaledTheta { base, factor } => Ok(factor * base.theta_f64(t)?),
            ProfileKind::Table { knots } => {
                let lam = t.log()?.to_f64().ok_or_else(|| {
                    GrowthError::TableRange(format!("table law evaluated at {t}"))
                })?;
                Ok(interp_log_linear(knots, lam))
            }
        }
    }

    /// Θ(t) (resp. Φ(t)) as machine float, extension included.
    pub fn theta_f64(&self, t: &TowerScalar) -> Result<f64> {
        if t.cmp_value(&TowerScalar::one()) == Ordering::Less {
            return Err(GrowthError::DomainError(format!(
                "law evaluated at {t} < 1"
            )));
        }
        if self.in_extension(t) {
            self.boundary_theta()
        } else {
            self.main_theta(t)
        }
    }

    /// Φ(t)·log t in tower arithmetic. For the loglog law this is computed as
    /// exp(loglog t − α·log loglog t), which keeps the exponent correction
    /// exact at depths where Φ itself underflows as a float.
    pub fn phi_times_log(&self, t: &TowerScalar) -> Result<TowerScalar> {
        if t.cmp_value(&TowerScalar::one()) == Ordering::Less {
            return Err(GrowthError::DomainError(format!(
                "phi evaluated at {t} < 1"
            )));
        }
        let lam = t.log()?;
        if self.in_extension(t) {
            let theta = self.boundary_theta()?;
            return Ok(lam.mul(&TowerScalar::from_f64(theta)?)?);
        }
        match &self.kind {
            ProfileKind::LogLogAlpha { alpha } => {
                let ll = lam.log()?;
                let lll = ll.log()?;
                let corr = lll.mul(&TowerScalar::from_f64(*alpha)?)?;
                let log_term = ll.add(&corr.neg())?;
                Ok(log_term.exp())
            }
            ProfileKind::ScaledTheta { base, factor } => {
                let base_term = base.phi_times_log(t)?;
                Ok(base_term.mul(&TowerScalar::from_f64(*factor)?)?)
            }
            ProfileKind::Table { .. } => {
                let theta = self.main_theta(t)?;
                Ok(lam.mul(&TowerScalar::from_f64(theta)?)?)
            }
        }
    }

    /// φ(t) = t^(1+Φ(t)) = exp((1+Φ(t))·log t).
    pub fn phi_eval(&self, t: &TowerScalar) -> Result<TowerScalar> {
        match t.cmp_value(&TowerScalar::one()) {
            Ordering::Less => Err(GrowthError::DomainError(format!(
                "phi evaluated at {t} < 1"
            ))),
            Ordering::Equal => Ok(TowerScalar::one()),
            Ordering::Greater => {
                let lam = t.log()?;
                let correction = self.phi_times_log(t)?;
                Ok(lam.add(&correction)?.exp())
            }
        }
    }

    /// log φ(exp(λ)) for λ ≥ 0; the bisection workhorse.
    fn log_phi_at_log(&self, lam: &TowerScalar) -> Result<TowerScalar> {
        if lam.is_zero() {
            return Ok(TowerScalar::zero());
        }
        let t = lam.exp();
        Ok(lam.add(&self.phi_times_log(&t)?)?)
    }

    /// Solve φ(t) = w for t ∈ [1, ∞) to relative tolerance `rel_tol`,
    /// bisecting on log t. The initial bracket [w^(1-2Φ(w)), w^(1-Φ(w)/2)]
    /// is widened by factors of two in the log domain when it fails to
    /// straddle, so targets below [`PHIAPP_BRACKET_MIN_W`] still converge.
    pub fn phi_inverse(&self, w: &TowerScalar, rel_tol: f64) -> Result<TowerScalar> {
        if !(rel_tol > 0.0) {
            return Err(GrowthError::DomainError(format!(
                "rel_tol must be positive, got {rel_tol}"
            )));
        }
        match w.cmp_value(&TowerScalar::one()) {
            Ordering::Less => {
                return Err(GrowthError::DomainError(format!(
                    "phi_inverse target {w} < 1"
                )))
            }
            Ordering::Equal => return Ok(TowerScalar::one()),
            Ordering::Greater => {}
        }
        let g = w.log()?;
        let theta_w = self.theta_f64(w)?;
        let half = TowerScalar::from_f64(0.5)?;
        let two = TowerScalar::from_f64(2.0)?;

        let e_lo = 1.0 - 2.0 * theta_w;
        let e_hi = 1.0 - theta_w / 2.0;
        let mut lam_lo = if e_lo > 0.0 {
            g.mul(&TowerScalar::from_f64(e_lo)?)?
        } else {
            TowerScalar::zero()
        };
        // φ(t) ≥ t makes log w itself a valid upper seed whenever the
        // phiapp exponent degenerates.
        let mut lam_hi = if e_hi > 0.0 {
            g.mul(&TowerScalar::from_f64(e_hi)?)?
        } else {
            g.clone()
        };

        let mut widen = 0;
        while self.log_phi_at_log(&lam_lo)?.cmp_value(&g) == Ordering::Greater {
            if widen >= 64 {
                return Err(GrowthError::ConvergenceError(format!(
                    "no lower bracket for target {w}"
                )));
            }
            lam_lo = lam_lo.mul(&half)?;
            widen += 1;
        }
        widen = 0;
        while self.log_phi_at_log(&lam_hi)?.cmp_value(&g) == Ordering::Less {
            if widen >= 64 {
                return Err(GrowthError::ConvergenceError(format!(
                    "no upper bracket for target {w}"
                )));
            }
            lam_hi = lam_hi.mul(&two)?;
            widen += 1;
        }

        let same_repr = |a: &TowerScalar, b: &TowerScalar| {
            a.level() == b.level() && a.mantissa() == b.mantissa() && a.sign() == b.sign()
        };
        for _ in 0..200 {
            let mid = lam_lo.add(&lam_hi)?.mul(&half)?;
            let em = self.log_phi_at_log(&mid)?;
            // |φ/w − 1| ≈ |log φ − log w| once small.
            let (ev, gv) = (em.to_f64(), g.to_f64());
            if let (Some(ev), Some(gv)) = (ev, gv) {
                if (ev - gv).abs() <= rel_tol {
                    return Ok(mid.exp());
                }
            }
            if same_repr(&mid, &lam_lo) || same_repr(&mid, &lam_hi) {
                // Representation resolution reached; best available answer.
                return Ok(mid.exp());
            }
            let side = match (ev, gv) {
                (Some(ev), Some(gv)) => ev.partial_cmp(&gv).unwrap_or(Ordering::Equal),
                _ => em.cmp_value(&g),
            };
            match side {
                Ordering::Less => lam_lo = mid,
                Ordering::Greater => lam_hi = mid,
                Ordering::Equal => return Ok(mid.exp()),
            }
        }
        Err(GrowthError::ConvergenceError(format!(
            "bisection hit its iteration cap for target {w}"
        )))
    }

    /// Ψ(t) = 10·φ⁻¹(log t)/log t and ψ(t) = t^(1+Ψ(t)). Needs log t ≥ 1.
    pub fn psi_eval(&self, t: &TowerScalar) -> Result<(f64, TowerScalar)> {
        let lam = t
            .log()
            .map_err(|_| GrowthError::DomainError(format!("psi evaluated at {t}")))?;
        if lam.cmp_value(&TowerScalar::one()) == Ordering::Less {
            return Err(GrowthError::DomainError(format!(
                "psi needs log t ≥ 1, got t = {t}"
            )));
        }
        let inv = self.phi_inverse(&lam, 1e-10)?;
        let psi_exp = match inv.log_ratio_f64(&lam) {
            Some(d) => 10.0 * d.exp(),
            None => 0.0,
        };
        let psi = t.pow(&TowerScalar::from_f64(1.0 + psi_exp)?)?;
        Ok((psi_exp, psi))
    }

    /// The constructive threshold t* = shift/(factor^(1/(1+Φ(1))) − 1) above
    /// which φ(t+shift) ≤ factor·φ(t). Φ(1) is the law's supremum on [1, ∞),
    /// which under the pinned extension equals Φ(t_min).
    pub fn phi_shift_threshold(&self, shift: f64, factor: f64) -> Result<f64> {
        if !(shift > 0.0) || !shift.is_finite() {
            return Err(GrowthError::DomainError(format!(
                "shift must be positive, got {shift}"
            )));
        }
        if !(factor > 1.0) || !factor.is_finite() {
            return Err(GrowthError::DomainError(format!(
                "factor must exceed 1, got {factor}"
            )));
        }
        let phi_one = self.theta_f64(&TowerScalar::one())?;
        Ok(shift / (factor.powf(1.0 / (1.0 + phi_one)) - 1.0))
    }

    /// Sweep `points` geometric samples over six decades above the threshold
    /// and verify φ(t+shift) ≤ factor·φ(t) at each.
    pub fn phi_shift_report(&self, shift: f64, factor: f64, points: usize) -> Result<LawReport> {
        let t_star = self.phi_shift_threshold(shift, factor)?;
        let grid = geometric_grid(t_star * (1.0 + 1e-6), t_star * 1e6, points.max(2));
        let log_factor = TowerScalar::from_f64(factor.ln())?;
        let mut rows = Vec::with_capacity(grid.len());
        let mut slacks = Vec::with_capacity(grid.len());
        let mut all_pass = true;
        for &t in &grid {
            let lhs = self.log_phi_at_log(&TowerScalar::from_f64((t + shift).ln())?)?;
            let rhs = self
                .log_phi_at_log(&TowerScalar::from_f64(t.ln())?)?
                .add(&log_factor)?;
            let pass = lhs.cmp_value(&rhs) != Ordering::Greater;
            all_pass &= pass;
            let slack = match (rhs.to_f64(), lhs.to_f64()) {
                (Some(r), Some(l)) => r - l,
                _ => f64::NAN,
            };
            slacks.push(slack);
            rows.push(vec![
                Value::Float(t),
                Value::Float(slack),
                Value::Bool(pass),
            ]);
        }
        let summary = PropertySummary {
            name: "shift_bound".into(),
            pass: all_pass,
            monotone_fraction: if all_pass { 1.0 } else { 0.0 },
            first: *slacks.first().unwrap_or(&f64::NAN),
            last: *slacks.last().unwrap_or(&f64::NAN),
        };
        Ok(LawReport::new(
            format!("phi_shift {self} shift={shift} factor={factor} t*={t_star}"),
            vec!["t".into(), "log_slack".into(), "pass".into()],
            rows,
            vec![summary],
        ))
    }

    /// Trend report for the law itself: positivity, strict decrease of Θ,
    /// strict increase and divergence of Θ·log t, Θ(t²)/Θ(t) → 1, and the
    /// β-compensated product (log t)^(β·Θ(log t))·Θ(t). Grid points in the
    /// extension region are marked and excluded from the trend statistics.
    pub fn theta_properties(&self, grid: &[TowerScalar], beta: f64) -> Result<LawReport> {
        if grid.len() < 20 {
            return Err(GrowthError::DomainError(format!(
                "property grid needs at least 20 points, got {}",
                grid.len()
            )));
        }
        if grid
            .windows(2)
            .any(|w| w[0].cmp_value(&w[1]) != Ordering::Less)
        {
            return Err(GrowthError::DomainError(
                "property grid must be strictly increasing".into(),
            ));
        }

        let two = TowerScalar::from_f64(2.0)?;
        let n = grid.len();
        let mut thetas = Vec::with_capacity(n);
        let mut products = Vec::with_capacity(n); // Θ·log t, exact towers
        let mut log10_products = Vec::with_capacity(n);
        let mut sq_ratios = Vec::with_capacity(n);
        let mut e_terms: Vec<Option<f64>> = Vec::with_capacity(n);
        let mut trusted = Vec::with_capacity(n);

        for t in grid {
            let theta = self.theta_f64(t)?;
            let product = self.phi_times_log(t)?;
            let log10_product = product.log_f64().map(|x| x / std::f64::consts::LN_10);
            let t_sq = t.pow(&two)?;
            let sq_ratio = self.theta_f64(&t_sq)? / theta;
            let log_t = t.log()?;
            let e_term = match self.theta_f64(&log_t) {
                Ok(theta_log) => log_t
                    .log()
                    .ok()
                    .and_then(|l| l.to_f64())
                    .map(|ln_log_t| beta * theta_log * ln_log_t + theta.ln()),
                Err(_) => None,
            };
            trusted.push(!self.in_extension(t));
            thetas.push(theta);
            products.push(product);
            log10_products.push(log10_product);
            sq_ratios.push(sq_ratio);
            e_terms.push(e_term);
        }

        let mut rows = Vec::with_capacity(n);
        let mut a_pairs = (0usize, 0usize); // (holds, comparisons)
        let mut b_pairs = (0usize, 0usize);
        let mut d_pairs = (0usize, 0usize);
        let mut e_pairs = (0usize, 0usize);
        for i in 0..n {
            let comparable = i > 0 && trusted[i] && trusted[i - 1];
            let pass_a = !comparable || thetas[i] < thetas[i - 1];
            let pass_b =
                !comparable || products[i].cmp_value(&products[i - 1]) == Ordering::Greater;
            let pass_d = (0.0 < sq_ratios[i] && sq_ratios[i] <= 1.0)
                && (!comparable || sq_ratios[i] >= sq_ratios[i - 1]);
            if comparable {
                a_pairs = (a_pairs.0 + usize::from(pass_a), a_pairs.1 + 1);
                b_pairs = (b_pairs.0 + usize::from(pass_b), b_pairs.1 + 1);
                d_pairs = (d_pairs.0 + usize::from(pass_d), d_pairs.1 + 1);
                if let (Some(cur), Some(prev)) = (e_terms[i], e_terms[i - 1]) {
                    e_pairs = (e_pairs.0 + usize::from(cur > prev), e_pairs.1 + 1);
                }
            }
            rows.push(vec![
                Value::Str(grid[i].to_string()),
                Value::Bool(trusted[i]),
                Value::Float(thetas[i]),
                log10_products[i].map_or(Value::Null, Value::Float),
                Value::Float(sq_ratios[i]),
                e_terms[i].map_or(Value::Null, Value::Float),
                Value::Bool(pass_a),
                Value::Bool(pass_b),
                Value::Bool(pass_d),
            ]);
        }

        let trusted_idx: Vec<usize> = (0..n).filter(|&i| trusted[i]).collect();
        let first_t = *trusted_idx.first().unwrap_or(&0);
        let last_t = *trusted_idx.last().unwrap_or(&(n - 1));
        let frac = |pairs: (usize, usize)| {
            if pairs.1 == 0 {
                f64::NAN
            } else {
                pairs.0 as f64 / pairs.1 as f64
            }
        };
        let all = |pairs: (usize, usize)| pairs.1 > 0 && pairs.0 == pairs.1;

        let positive = thetas.iter().all(|&x| x > 0.0);
        let log10_first = log10_products[first_t].unwrap_or(f64::NAN);
        let log10_last = log10_products[last_t].unwrap_or(f64::NAN);
        let e_first = e_terms[first_t];
        let e_last = e_terms[last_t];

        let properties = vec![
            PropertySummary {
                name: "theta_positive_decreasing".into(),
                pass: positive && all(a_pairs),
                monotone_fraction: frac(a_pairs),
                first: thetas[first_t],
                last: thetas[last_t],
            },
            PropertySummary {
                name: "theta_log_t_increasing".into(),
                pass: all(b_pairs),
                monotone_fraction: frac(b_pairs),
                first: log10_first,
                last: log10_last,
            },
            PropertySummary {
                name: "theta_log_t_diverges".into(),
                pass: all(b_pairs) && log10_last > log10_first,
                monotone_fraction: frac(b_pairs),
                first: log10_first,
                last: log10_last,
            },
            PropertySummary {
                name: "square_ratio_to_one".into(),
                pass: all(d_pairs) && sq_ratios[last_t] <= 1.0,
                monotone_fraction: frac(d_pairs),
                first: sq_ratios[first_t],
                last: sq_ratios[last_t],
            },
            // A trend, not a per-point claim: the compensated product can dip
            // before its divergence sets in, so only the overall direction
            // over the trusted grid decides; the pairwise fraction stays as a
            // diagnostic.
            PropertySummary {
                name: "beta_compensated_divergence".into(),
                pass: matches!((e_first, e_last), (Some(a), Some(b)) if b > a),
                monotone_fraction: frac(e_pairs),
                first: e_first.unwrap_or(f64::NAN),
                last: e_last.unwrap_or(f64::NAN),
            },
        ];

        Ok(LawReport::new(
            format!("theta_properties {self} beta={beta}"),
            vec![
                "t".into(),
                "trusted".into(),
                "theta".into(),
                "log10_theta_log_t".into(),
                "square_ratio".into(),
                "beta_term".into(),
                "pass_decreasing".into(),
                "pass_increasing".into(),
                "pass_square_ratio".into(),
            ],
            rows,
            properties,
        ))
    }

    /// Check the closed-form derivative
    /// Θ'(t) = −α / (t · log t · (loglog t)^(1+α))
    /// against second-order central differences at h = 1e-4·t and h/2.
    pub fn theta_derivative_check(&self, grid: &[f64]) -> Result<LawReport> {
        let alpha = self.alpha().ok_or_else(|| {
            GrowthError::InvalidProfile(
                "closed-form derivative check needs a loglog_alpha law".into(),
            )
        })?;
        if grid.is_empty() {
            return Err(GrowthError::DomainError("empty derivative grid".into()));
        }
        let theta_at = |x: f64| -> Result<f64> { self.theta_f64(&TowerScalar::from_f64(x)?) };
        let mut rows = Vec::with_capacity(grid.len());
        let mut errs = Vec::with_capacity(grid.len());
        let mut all_pass = true;
        for &t in grid {
            let h = 1e-4 * t;
            if !(t.is_finite() && t - h >= self.t_min) {
                return Err(GrowthError::DomainError(format!(
                    "derivative stencil at {t} leaves the trusted domain [{}, ∞)",
                    self.t_min
                )));
            }
            let l = t.ln();
            let ll = l.ln();
            let closed = -alpha / (t * l * ll.powf(1.0 + alpha));
            let fd = |h: f64| -> Result<f64> { Ok((theta_at(t + h)? - theta_at(t - h)?) / (2.0 * h)) };
            let fd_h = fd(h)?;
            let fd_h2 = fd(h / 2.0)?;
            let rel = |x: f64| (x - closed).abs() / closed.abs();
            let (err_h, err_h2) = (rel(fd_h), rel(fd_h2));
            let order = if err_h2 > 0.0 {
                Some((err_h / err_h2).log2())
            } else {
                None
            };
            let pass = err_h <= 1e-6;
            all_pass &= pass;
            errs.push(err_h);
            rows.push(vec![
                Value::Float(t),
                Value::Float(closed),
                Value::Float(fd_h),
                Value::Float(err_h),
                Value::Float(err_h2),
                order.map_or(Value::Null, Value::Float),
                Value::Bool(pass),
            ]);
        }
        let max_err = errs.iter().cloned().fold(0.0_f64, f64::max);
        let summary = PropertySummary {
            name: "derivative_matches_stencil".into(),
            pass: all_pass,
            monotone_fraction: if all_pass { 1.0 } else { 0.0 },
            first: *errs.first().unwrap(),
            last: max_err,
        };
        Ok(LawReport::new(
            format!("theta_derivative {self}"),
            vec![
                "t".into(),
                "closed_form".into(),
                "finite_diff".into(),
                "rel_err".into(),
                "rel_err_half_h".into(),
                "stencil_order".into(),
                "pass".into(),
            ],
            rows,
            vec![summary],
        ))
    }

    /// The three standing invariants on a sample grid: Θ > 0, Θ strictly
    /// decreasing, Θ·log t strictly increasing.
    pub fn standing_assumption_report(&self, grid: &[TowerScalar]) -> Result<LawReport> {
        if grid.len() < 2 {
            return Err(GrowthError::DomainError(
                "standing-assumption grid needs at least 2 points".into(),
            ));
        }
        if grid
            .windows(2)
            .any(|w| w[0].cmp_value(&w[1]) != Ordering::Less)
        {
            return Err(GrowthError::DomainError(
                "standing-assumption grid must be strictly increasing".into(),
            ));
        }
        let mut rows = Vec::with_capacity(grid.len());
        let mut prev: Option<(f64, TowerScalar)> = None;
        let mut positive = true;
        let mut decreasing = (0usize, 0usize);
        let mut increasing = (0usize, 0usize);
        let mut firsts = (f64::NAN, f64::NAN);
        let mut lasts = (f64::NAN, f64::NAN);
        for t in grid {
            let theta = self.theta_f64(t)?;
            let product = self.phi_times_log(t)?;
            let in_ext = self.in_extension(t);
            positive &= theta > 0.0;
            let (pass_dec, pass_inc) = match &prev {
                Some((p_theta, p_product)) if !in_ext => {
                    let dec = theta < *p_theta;
                    let inc = product.cmp_value(p_product) == Ordering::Greater;
                    decreasing = (decreasing.0 + usize::from(dec), decreasing.1 + 1);
                    increasing = (increasing.0 + usize::from(inc), increasing.1 + 1);
                    (dec, inc)
                }
                _ => (true, true),
            };
            let log10_product = product.log_f64().map(|x| x / std::f64::consts::LN_10);
            if firsts.0.is_nan() && !in_ext {
                firsts = (theta, log10_product.unwrap_or(f64::NAN));
            }
            if !in_ext {
                lasts = (theta, log10_product.unwrap_or(f64::NAN));
            }
            rows.push(vec![
                Value::Str(t.to_string()),
                Value::Bool(!in_ext),
                Value::Float(theta),
                log10_product.map_or(Value::Null, Value::Float),
                Value::Bool(theta > 0.0),
                Value::Bool(pass_dec),
                Value::Bool(pass_inc),
            ]);
            if !in_ext {
                prev = Some((theta, product));
            }
        }
        let frac = |p: (usize, usize)| {
            if p.1 == 0 {
                f64::NAN
            } else {
                p.0 as f64 / p.1 as f64
            }
        };
        let properties = vec![
            PropertySummary {
                name: "theta_positive".into(),
                pass: positive,
                monotone_fraction: if positive { 1.0 } else { 0.0 },
                first: firsts.0,
                last: lasts.0,
            },
            PropertySummary {
                name: "theta_strictly_decreasing".into(),
                pass: decreasing.1 > 0 && decreasing.0 == decreasing.1,
                monotone_fraction: frac(decreasing),
                first: firsts.0,
                last: lasts.0,
            },
            PropertySummary {
                name: "theta_log_t_strictly_increasing".into(),
                pass: increasing.1 > 0 && increasing.0 == increasing.1,
                monotone_fraction: frac(increasing),
                first: firsts.1,
                last: lasts.1,
            },
        ];
        Ok(LawReport::new(
            format!("standing_assumptions {self}"),
            vec![
                "t".into(),
                "trusted".into(),
                "theta".into(),
                "log10_theta_log_t".into(),
                "pass_positive".into(),
                "pass_decreasing".into(),
                "pass_increasing".into(),
            ],
            rows,
            properties,
        ))
    }
}

impl fmt::Display for GrowthProfile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.kind {
            ProfileKind::LogLogAlpha { alpha } => write!(f, "loglog_alpha({alpha})"),
            ProfileKind::ScaledTheta { base, factor } => {
                write!(f, "scaled_theta({factor}*{base})")
            }
            ProfileKind::Table { knots } => write!(f, "table({} knots)", knots.len()),
        }
    }
}

/// Linear interpolation of Θ in log t through the knot table; clamped to the
/// boundary knots outside its range.
fn interp_log_linear(knots: &[(f64, f64)], lam: f64) -> f64 {
    let first = (knots[0].0.ln(), knots[0].1);
    let last = (knots[knots.len() - 1].0.ln(), knots[knots.len() - 1].1);
    if lam <= first.0 {
        return first.1;
    }
    if lam >= last.0 {
        return last.1;
    }
    let idx = knots.partition_point(|&(t, _)| t.ln() <= lam);
    let (l0, v0) = (knots[idx - 1].0.ln(), knots[idx - 1].1);
    let (l1, v1) = (knots[idx].0.ln(), knots[idx].1);
    v0 + (v1 - v0) * (lam - l0) / (l1 - l0)
}

/// `n ≥ 2` geometric samples from `lo` to `hi` inclusive.
pub fn geometric_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    assert!(lo > 0.0 && hi > lo && n >= 2, "degenerate geometric grid");
    let ratio = hi / lo;
    (0..n)
        .map(|i| lo * ratio.powf(i as f64 / (n - 1) as f64))
        .collect()
}

/// Summary line for one checked property.
#[derive(Debug, Clone, PartialEq)]
pub struct PropertySummary {
    pub name: String,
    pub pass: bool,
    /// Fraction of successive comparisons that went the required way.
    pub monotone_fraction: f64,
    pub first: f64,
    pub last: f64,
}

/// Grid report for a growth-law check: per-point rows plus per-property
/// trend summaries.
#[derive(Debug, Clone, PartialEq)]
pub struct LawReport {
    pub title: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Value>>,
    pub properties: Vec<PropertySummary>,
    pub pass: bool,
}

impl LawReport {
    fn new(
        title: String,
        columns: Vec<String>,
        rows: Vec<Vec<Value>>,
        properties: Vec<PropertySummary>,
    ) -> Self {
        let pass = properties.iter().all(|p| p.pass);
        Self {
            title,
            columns,
            rows,
            properties,
            pass,
        }
    }

    pub fn property(&self, name: &str) -> Option<&PropertySummary> {
        self.properties.iter().find(|p| p.name == name)
    }
}

impl Report for LawReport {
    fn to_value(&self) -> Value {
        Value::obj([
            ("title", Value::Str(self.title.clone())),
            ("pass", Value::Bool(self.pass)),
            (
                "properties",
                Value::Arr(
                    self.properties
                        .iter()
                        .map(|p| {
                            Value::obj([
                                ("name", Value::Str(p.name.clone())),
                                ("pass", Value::Bool(p.pass)),
                                ("monotone_fraction", Value::Float(p.monotone_fraction)),
                                ("first", Value::Float(p.first)),
                                ("last", Value::Float(p.last)),
                            ])
                        })
                        .collect(),
                ),
            ),
            (
                "columns",
                Value::Arr(self.columns.iter().map(|c| Value::Str(c.clone())).collect()),
            ),
            (
                "rows",
                Value::Arr(self.rows.iter().map(|r| Value::Arr(r.clone())).collect()),
            ),
        ])
    }

    fn to_table(&self) -> Option<Table> {
        let mut table = Table::new(&self.columns.iter().map(String::as_str).collect::<Vec<_>>());
        for row in &self.rows {
            table.push(row.clone());
        }
        Some(table)
    }

    fn to_text(&self) -> String {
        let mut out = format!("== {}\n", self.title);
        for p in &self.properties {
            let _ = std::fmt::Write::write_fmt(
                &mut out,
                format_args!(
                    "{} {}: monotone_fraction={:.6} first={:.6e} last={:.6e}\n",
                    if p.pass { "PASS" } else { "FAIL" },
                    p.name,
                    p.monotone_fraction,
                    p.first,
                    p.last
                ),
            );
        }
        let failing: Vec<usize> = self
            .rows
            .iter()
            .enumerate()
            .filter(|(_, row)| row.iter().any(|v| matches!(v, Value::Bool(false))))
            .map(|(i, _)| i)
            .collect();
        if !failing.is_empty() {
            let _ = std::fmt::Write::write_fmt(
                &mut out,
                format_args!("rows with failed flags: {failing:?}\n"),
            );
        }
        out
    }
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
enum ProfileRepr {
    LoglogAlpha {
        alpha: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        t_min: Option<f64>,
    },
    ScaledTheta {
        factor: f64,
        base: Box<ProfileRepr>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        t_min: Option<f64>,
    },
    Table {
        knots: Vec<(f64, f64)>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        t_min: Option<f64>,
    },
}

impl TryFrom<ProfileRepr> for GrowthProfile {
    type Error = GrowthError;

    fn try_from(repr: ProfileRepr) -> Result<Self> {
        let (profile, t_min) = match repr {
            ProfileRepr::LoglogAlpha { alpha, t_min } => {
                (GrowthProfile::loglog_alpha(alpha)?, t_min)
            }
            ProfileRepr::ScaledTheta {
                factor,
                base,
                t_min,
            } => (
                GrowthProfile::scaled(GrowthProfile::try_from(*base)?, factor)?,
                t_min,
            ),
            ProfileRepr::Table { knots, t_min } => (GrowthProfile::table(knots)?, t_min),
        };
        match t_min {
            Some(t_min) => profile.with_t_min(t_min),
            None => Ok(profile),
        }
    }
}

impl From<GrowthProfile> for ProfileRepr {
    fn from(p: GrowthProfile) -> Self {
        let t_min = Some(p.t_min);
        match p.kind {
            ProfileKind::LogLogAlpha { alpha } => ProfileRepr::LoglogAlpha { alpha, t_min },
            ProfileKind::ScaledTheta { base, factor } => ProfileRepr::ScaledTheta {
                factor,
                base: Box::new((*base).into()),
                t_min,
            },
            ProfileKind::Table { knots } => ProfileRepr::Table { knots, t_min },
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn ts(level: u32, mantissa: f64) -> TowerScalar {
        TowerScalar::new(level, mantissa).unwrap()
    }

    fn f(x: f64) -> TowerScalar {
        TowerScalar::from_f64(x).unwrap()
    }

    fn alpha_one() -> GrowthProfile {
        GrowthProfile::loglog_alpha(1.0).unwrap()
    }

    /// φ for desk-scale t in the main region, straight from the definition.
    fn phi_oracle(t: f64, alpha: f64) -> f64 {
        let l = t.ln();
        (l * (1.0 + l.ln().powf(-alpha))).exp()
    }

    #[test]
    fn serde_matches_interchange_shape() {
        let p = alpha_one().with_t_min(16.0).unwrap();
        let s = serde_json::to_string(&p).unwrap();
        assert!(s.contains("\"kind\":\"loglog_alpha\""), "{s}");
        assert!(s.contains("\"alpha\":1.0"), "{s}");
        assert!(s.contains("\"t_min\":16.0"), "{s}");
        let q: GrowthProfile = serde_json::from_str(&s).unwrap();
        assert_eq!(p, q);

        let from_literal: GrowthProfile =
            serde_json::from_str(r#"{"kind":"loglog_alpha","alpha":1.0,"t_min":16.0}"#).unwrap();
        assert_eq!(from_literal, p);

        let nested = GrowthProfile::scaled(alpha_one(), 0.9).unwrap();
        let s = serde_json::to_string(&nested).unwrap();
        let back: GrowthProfile = serde_json::from_str(&s).unwrap();
        assert_eq!(nested, back);
    }

    #[test]
    fn constructors_reject_bad_parameters() {
        assert!(GrowthProfile::loglog_alpha(0.0).is_err());
        assert!(GrowthProfile::loglog_alpha(-1.0).is_err());
        assert!(GrowthProfile::loglog_alpha(10.0).is_err()); // exp(exp(10)) overflows
        assert!(GrowthProfile::scaled(alpha_one(), 0.0).is_err());
        assert!(GrowthProfile::scaled(alpha_one(), 1.5).is_err());
        assert!(GrowthProfile::scaled(alpha_one(), 1.0).is_ok());
        assert!(GrowthProfile::table(vec![]).is_err());
        assert!(GrowthProfile::table(vec![(10.0, 0.5), (5.0, 0.4)]).is_err());
        assert!(GrowthProfile::table(vec![(0.5, 0.5)]).is_err());
        assert!(GrowthProfile::table(vec![(10.0, -0.5)]).is_err());
        // t_min at e makes loglog vanish.
        assert!(alpha_one().with_t_min(std::f64::consts::E).is_err());
        assert!(alpha_one().with_t_min(1.0).is_err());
    }

    #[test]
    fn theta_is_pinned_below_t_min() {
        let p = alpha_one();
        // Φ(t_min) = (log log exp(e))^(-1) = 1.
        assert!((p.theta_f64(&f(1.0)).unwrap() - 1.0).abs() < 1e-12);
        assert!((p.theta_f64(&f(10.0)).unwrap() - 1.0).abs() < 1e-12);
        assert!(p.in_extension(&f(10.0)));
        assert!(!p.in_extension(&f(16.0)));
        let expected = (1e6_f64).ln().ln().recip();
        assert!((p.theta_f64(&f(1e6)).unwrap() - expected).abs() < 1e-14);
        assert!(p.theta_f64(&f(0.5)).is_err());
    }

    #[test]
    fn phi_matches_closed_form_at_desk_scale() {
        let p = alpha_one();
        let t0 = std::f64::consts::E.exp(); // exp(e), where Φ = 1
        let phi = p.phi_eval(&f(t0)).unwrap();
        let expected = t0 * t0;
        assert!((phi.to_f64().unwrap() / expected - 1.0).abs() < 1e-12);

        let phi = p.phi_eval(&f(1e6)).unwrap();
        let expected_log = phi_oracle(1e6, 1.0).ln();
        assert_eq!(phi.level(), 1);
        assert!((phi.mantissa() - expected_log).abs() < 1e-12 * expected_log);

        assert_eq!(
            p.phi_eval(&TowerScalar::one()).unwrap(),
            TowerScalar::one()
        );
        assert!(p.phi_eval(&f(0.2)).is_err());
    }

    #[test]
    fn phi_keeps_exponent_correction_at_depth() {
        // t = exp(exp(50)): log t = e^50, loglog t = 50, so
        // log φ = e^50·(1 + 1/50) and log log φ = 50 + log(1.02).
        let p = alpha_one();
        let phi = p.phi_eval(&ts(2, 50.0)).unwrap();
        let expected = 50.0 + 0.02_f64.ln_1p();
        assert_eq!(phi.level(), 2);
        assert!(
            (phi.mantissa() - expected).abs() < 1e-12,
            "mantissa {} vs {expected}",
            phi.mantissa()
        );
    }

    #[test]
    fn phi_inverse_round_trips_desk_scale() {
        let p = alpha_one();
        let t0 = std::f64::consts::E.exp();
        let w = f(t0 * t0);
        let t = p.phi_inverse(&w, 1e-10).unwrap();
        assert!((t.to_f64().unwrap() / t0 - 1.0).abs() < 1e-9);

        for w_val in [1e4, 1e8, 1e12] {
            let w = f(w_val);
            let t = p.phi_inverse(&w, 1e-10).unwrap();
            let back = p.phi_eval(&t).unwrap();
            let resid = back.log_ratio_f64(&w).unwrap().abs();
            assert!(resid <= 1e-10, "residual {resid} at w = {w_val}");
        }
    }

    #[test]
    fn phi_inverse_seed_bracket_holds_from_recorded_threshold() {
        let p = alpha_one();
        for &w_val in &geometric_grid(PHIAPP_BRACKET_MIN_W, 1e12, 10) {
            let w = f(w_val);
            let theta_w = p.theta_f64(&w).unwrap();
            let t = p.phi_inverse(&w, 1e-10).unwrap();
            let g = w.log().unwrap();
            let lo = g.mul(&f(1.0 - 2.0 * theta_w)).unwrap().exp();
            let hi = g.mul(&f(1.0 - theta_w / 2.0)).unwrap().exp();
            assert_ne!(t.cmp_value(&lo), Ordering::Less, "w = {w_val}");
            assert_ne!(t.cmp_value(&hi), Ordering::Greater, "w = {w_val}");
        }
    }

    #[test]
    fn phi_inverse_reaches_extension_region() {
        // Below φ(t_min) the inverse lands left of t_min, where φ(t) = t²
        // for α = 1 because the law is pinned at Φ = 1.
        let p = alpha_one();
        let w_val = 1e6_f64.ln() + 1.0;
        let t = p.phi_inverse(&f(w_val), 1e-10).unwrap();
        assert!(p.in_extension(&t));
        let t_val = t.to_f64().unwrap();
        assert!((t_val - w_val.sqrt()).abs() < 1e-8, "got {t_val}");
        let back = p.phi_eval(&t).unwrap();
        assert!(back.log_ratio_f64(&f(w_val)).unwrap().abs() <= 1e-10);
    }

    #[test]
    fn phi_inverse_rejects_bad_targets() {
        let p = alpha_one();
        assert!(p.phi_inverse(&f(0.5), 1e-10).is_err());
        assert!(p.phi_inverse(&f(10.0), 0.0).is_err());
        assert_eq!(
            p.phi_inverse(&TowerScalar::one(), 1e-10).unwrap(),
            TowerScalar::one()
        );
    }

    #[test]
    fn psi_matches_derived_value() {
        // t with log t = φ(exp(e)) = exp(2e): then φ⁻¹(log t) = exp(e) and
        // Ψ = 10·exp(e)/exp(2e).
        let p = alpha_one();
        let t_inner = std::f64::consts::E.exp();
        let w = t_inner * t_inner;
        let t = f(w).exp();
        let (psi_exp, psi) = p.psi_eval(&t).unwrap();
        let expected = 10.0 * t_inner / w;
        assert!(
            (psi_exp - expected).abs() < 1e-6,
            "psi exponent {psi_exp} vs {expected}"
        );
        let log_psi = psi.log().unwrap().to_f64().unwrap();
        let expected_log = (1.0 + psi_exp) * w;
        assert!((log_psi / expected_log - 1.0).abs() < 1e-9);

        assert!(p.psi_eval(&f(2.0)).is_err()); // log t < 1
    }

    #[test]
    fn shift_threshold_matches_formula_and_sweep_passes() {
        let p = alpha_one();
        // Φ(1) = Φ(t_min) = 1, so t* = 1/(2^(1/2) − 1).
        let t_star = p.phi_shift_threshold(1.0, 2.0).unwrap();
        let expected = 1.0 / (2.0_f64.sqrt() - 1.0);
        assert!((t_star - expected).abs() < 1e-12);
        // On the pinned region φ(t) = t², where the bound is exact at t*.
        let report = p.phi_shift_report(1.0, 2.0, 50).unwrap();
        assert!(report.pass, "{}", report.to_text());
        assert_eq!(report.rows.len(), 50);

        let report = p.phi_shift_report(0.5, 1.5, 50).unwrap();
        assert!(report.pass, "{}", report.to_text());

        assert!(p.phi_shift_threshold(-1.0, 2.0).is_err());
        assert!(p.phi_shift_threshold(1.0, 1.0).is_err());
    }

    #[test]
    fn theta_properties_pass_on_trusted_grid() {
        let p = alpha_one();
        let grid: Vec<TowerScalar> = geometric_grid(1e2, 1e40, 20).iter().map(|&x| f(x)).collect();
        let report = p.theta_properties(&grid, 1.0).unwrap();
        assert!(report.pass, "{}", report.to_text());
        for name in [
            "theta_positive_decreasing",
            "theta_log_t_increasing",
            "theta_log_t_diverges",
            "square_ratio_to_one",
            "beta_compensated_divergence",
        ] {
            assert!(report.property(name).unwrap().pass, "{name}");
        }
    }

    #[test]
    fn theta_properties_flag_extension_points_and_reject_bad_grids() {
        let p = alpha_one();
        let mut grid: Vec<TowerScalar> =
            geometric_grid(1e2, 1e40, 19).iter().map(|&x| f(x)).collect();
        grid.insert(0, f(5.0)); // below t₀ = exp(e)
        let report = p.theta_properties(&grid, 1.0).unwrap();
        assert_eq!(report.rows[0][1], Value::Bool(false), "extension flag");
        assert_eq!(report.rows[1][1], Value::Bool(true));
        assert!(report.pass, "extension points stay out of the statistics");

        assert!(p.theta_properties(&grid[..10], 1.0).is_err());
        let mut unsorted = grid.clone();
        unsorted.swap(3, 4);
        assert!(p.theta_properties(&unsorted, 1.0).is_err());
    }

    #[test]
    fn theta_square_ratio_at_log_domain_point() {
        // t = exp(10³⁰): loglog t = ln(10³⁰), and squaring t adds ln 2 to
        // log log, so the ratio is ln(10³⁰)/(ln(10³⁰)+ln 2) = 0.99007…
        let p = alpha_one();
        let t = f(1e30).exp();
        let t_sq = t.pow(&f(2.0)).unwrap();
        let ratio = p.theta_f64(&t_sq).unwrap() / p.theta_f64(&t).unwrap();
        let ll = 1e30_f64.ln();
        let expected = ll / (ll + 2.0_f64.ln());
        assert!((ratio - expected).abs() < 1e-12);
        assert!((ratio - 0.99007).abs() < 1e-4);
    }

    #[test]
    fn table_profile_flags_beta_regime() {
        // Θ(t) = (log t)^(-1/2): Θ(log t)·β·ln log t + ln Θ(t) tends to −∞
        // for β = 0.5, so the compensated product must be flagged.
        let knots: Vec<(f64, f64)> = geometric_grid(1e2, 1e40, 30)
            .iter()
            .map(|&t| (t, t.ln().powf(-0.5)))
            .collect();
        let p = GrowthProfile::table(knots).unwrap();
        let grid: Vec<TowerScalar> = geometric_grid(1e3, 1e39, 20).iter().map(|&x| f(x)).collect();
        let report = p.theta_properties(&grid, 0.5).unwrap();
        assert!(!report.property("beta_compensated_divergence").unwrap().pass);
        assert!(report.property("theta_positive_decreasing").unwrap().pass);
        assert!(report.property("theta_log_t_increasing").unwrap().pass);
        assert!(!report.pass);
    }

    #[test]
    fn derivative_check_matches_closed_form() {
        let p = alpha_one();
        let report = p.theta_derivative_check(&[100.0]).unwrap();
        assert!(report.pass, "{}", report.to_text());
        // Frozen closed-form value at t = 100.
        let l = 100.0_f64.ln();
        let expected = -1.0 / (100.0 * l * l.ln().powi(2));
        match &report.rows[0][1] {
            Value::Float(closed) => {
                assert!((closed - expected).abs() < 1e-18);
                assert!((closed - (-9.3102e-4)).abs() < 1e-7);
            }
            other => panic!("unexpected cell {other:?}"),
        }

        let p_half = GrowthProfile::loglog_alpha(0.5).unwrap();
        let grid = geometric_grid(50.0, 1e6, 20);
        let report = p_half.theta_derivative_check(&grid).unwrap();
        assert!(report.pass, "{}", report.to_text());
        match report.property("derivative_matches_stencil") {
            Some(s) => assert!(s.last <= 1e-6, "max rel err {}", s.last),
            None => panic!("missing summary"),
        }

        // The stencil is second order: halving h divides the error by ~4.
        let p_two = GrowthProfile::loglog_alpha(2.0).unwrap();
        let report = p_two.theta_derivative_check(&[1e4]).unwrap();
        match &report.rows[0][5] {
            Value::Float(order) => {
                assert!((1.5..=2.5).contains(order), "stencil order {order}")
            }
            other => panic!("unexpected cell {other:?}"),
        }

        assert!(p.theta_derivative_check(&[10.0]).is_err()); // stencil leaves domain
        let table = GrowthProfile::table(vec![(10.0, 0.5), (100.0, 0.4)]).unwrap();
        assert!(table.theta_derivative_check(&[50.0]).is_err());
    }

    #[test]
    fn standing_assumptions_hold_for_loglog() {
        let p = alpha_one();
        let grid: Vec<TowerScalar> = geometric_grid(20.0, 1e30, 20).iter().map(|&x| f(x)).collect();
        let report = p.standing_assumption_report(&grid).unwrap();
        assert!(report.pass, "{}", report.to_text());

        let scaled = GrowthProfile::scaled(alpha_one(), 0.7).unwrap();
        let report = scaled.standing_assumption_report(&grid).unwrap();
        assert!(report.pass, "{}", report.to_text());
    }

    #[test]
    fn geometric_grid_spans_inclusive() {
        let g = geometric_grid(1e2, 1e6, 5);
        assert_eq!(g.len(), 5);
        assert!((g[0] - 1e2).abs() < 1e-9);
        assert!((g[4] - 1e6).abs() < 1e-3);
        assert!((g[2] - 1e4).abs() < 1e-7);
        assert!(g.windows(2).all(|w| w[1] > w[0]));
    }

    proptest! {
        #[test]
        fn phi_inverse_round_trips(log_w in 1.0_f64..700.0, alpha in 0.5_f64..2.0) {
            let p = GrowthProfile::loglog_alpha(alpha).unwrap();
            let w = f(log_w).exp();
            let t = p.phi_inverse(&w, 1e-9).unwrap();
            let back = p.phi_eval(&t).unwrap();
            let resid = back.log_ratio_f64(&w).unwrap().abs();
            prop_assert!(resid <= 1e-9, "residual {} at log w = {}", resid, log_w);
        }

        #[test]
        fn phi_is_strictly_increasing(a in 1.5_f64..1e8, ratio in 1.01_f64..100.0, alpha in 0.5_f64..2.0) {
            let p = GrowthProfile::loglog_alpha(alpha).unwrap();
            let lo = f(a);
            let hi = f(a * ratio);
            let phi_lo = p.phi_eval(&lo).unwrap();
            let phi_hi = p.phi_eval(&hi).unwrap();
            prop_assert_eq!(phi_lo.cmp_value(&phi_hi), Ordering::Less);
        }

        #[test]
        fn theta_decreases_above_t_min(a in 1.7e3_f64..1e7, ratio in 1.1_f64..100.0, alpha in 0.5_f64..2.0) {
            let p = GrowthProfile::loglog_alpha(alpha).unwrap();
            let lo = f(a);
            let hi = f(a * ratio);
            prop_assume!(!p.in_extension(&lo));
            let t_lo = p.theta_f64(&lo).unwrap();
            let t_hi = p.theta_f64(&hi).unwrap();
            prop_assert!(t_hi < t_lo);
        }
    }
}
