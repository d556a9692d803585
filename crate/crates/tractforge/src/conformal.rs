//! Numerical conformal maps of toy tracts onto the right half-plane ℍ, with
//! geodesic traces, hyperbolic distances, and standard-estimate length
//! sandwiches.
//!
//! The map is built as a composition. A closed-form half-strip map handles
//! the unbounded direction exactly (this is what keeps boundary
//! correspondence away from machine-precision crowding); the wiggle slits
//! are then welded one tree at a time in upper-half-plane coordinates by a
//! zipper-style chain of square-root tip pulls, and a final Möbius
//! normalization pins F(5) = 5 and pushes the strip end to ∞. Every step is
//! elementary and exactly invertible, so the inverse map is evaluated by
//! running the chain backwards (plus an optional Newton polish).
//!
//! Accuracy is self-reported honestly: boundary probes in image coordinates
//! are pulled back to the z-plane and their distance to the true boundary
//! polygon is the residual. A build that cannot reach the requested residual
//! fails with the best value achieved rather than returning a map that
//! pretends otherwise.

use std::f64::consts::PI;

use num_complex::Complex64;
use thiserror::Error;

use crate::report::{Report, Table, Value};
use crate::tract::{adaptive_simpson, ToyTract, TractError, STRIP_HALF_HEIGHT, STRIP_X_LEFT};

#[derive(Debug, Error)]
pub enum ConformalError {
    #[error("point {0} is outside the tract")]
    DomainError(Complex64),
    #[error("invalid parameter: {0}")]
    Parameter(String),
    #[error("map build stalled at boundary residual {residual:.3e}: {detail}")]
    BuildError { residual: f64, detail: String },
    #[error("truncation: {0}")]
    TruncationError(String),
    #[error("polyline touches the boundary; distance degenerate")]
    DegenerateDistance,
    #[error(transparent)]
    Tract(#[from] TractError),
}

type Result<T> = std::result::Result<T, ConformalError>;

/// Scale of the half-strip oracle: 5/sinh(1/2), so that F₀(5) = 5.
fn oracle_scale() -> f64 {
    5.0 / 0.5f64.sinh()
}

/// The unique conformal map of the open half-strip {re z > 4, |im z| < π}
/// onto the right half-plane with F(5) = 5 and the strip end sent to ∞:
/// F₀(z) = (5/sinh(1/2))·sinh((z−4)/2).
pub fn halfstrip_oracle(z: Complex64) -> Result<Complex64> {
    if z.re <= STRIP_X_LEFT || z.im.abs() >= STRIP_HALF_HEIGHT {
        return Err(ConformalError::DomainError(z));
    }
    Ok(((z - STRIP_X_LEFT) / 2.0).sinh() * oracle_scale())
}

fn oracle_fwd(z: Complex64) -> Complex64 {
    ((z - STRIP_X_LEFT) / 2.0).sinh() * oracle_scale()
}

fn oracle_deriv(z: Complex64) -> Complex64 {
    ((z - STRIP_X_LEFT) / 2.0).cosh() * (oracle_scale() / 2.0)
}

fn oracle_inv(w: Complex64) -> Complex64 {
    (w / oracle_scale()).asinh() * 2.0 + STRIP_X_LEFT
}

/// Square root with the branch cut along [0, ∞), mapping ℂ∖[0,∞) onto the
/// open upper half-plane. The sign bit of a zero imaginary part selects the
/// side of the cut, which is exactly what keeps boundary evaluations on the
/// correct flank.
fn sqrt_slit(v: Complex64) -> Complex64 {
    let s = v.sqrt();
    if v.im < 0.0 || (v.im == 0.0 && v.im.is_sign_negative()) {
        -s
    } else {
        s
    }
}

/// One step of the welded composition, acting on upper-half-plane coords.
#[derive(Debug, Clone, Copy)]
enum WeldStep {
    /// u ↦ u − x: recenters a boundary point at the origin.
    Shift(f64),
    /// The tip pull that closes the geodesic arc from 0 to the point `a`
    /// encoded by binv = re a/|a|² and h = |a|²/im a:
    /// u ↦ sqrt_slit(τ(u)² + 1) with τ(u) = σ(u)/h, σ(u) = u/(1 − u·binv).
    ///
    /// The output is normalized by 1/h so the welded cut always lands on
    /// [−1, 1]; without this the chart scale compounds multiplicatively pull
    /// after pull and exhausts the f64 exponent range on long tracts.
    Pull { binv: f64, h: f64 },
}

impl WeldStep {
    fn apply(&self, u: Complex64) -> Complex64 {
        match *self {
            WeldStep::Shift(x) => u - x,
            WeldStep::Pull { binv, h } => {
                let sigma = if binv == 0.0 { u } else { u / (Complex64::new(1.0, 0.0) - u * binv) };
                let tau = sigma / h;
                sqrt_slit(tau * tau + 1.0)
            }
        }
    }

    /// Forward application together with the derivative factor.
    fn apply_d(&self, u: Complex64, du: Complex64) -> (Complex64, Complex64) {
        match *self {
            WeldStep::Shift(x) => (u - x, du),
            WeldStep::Pull { binv, h } => {
                let den = Complex64::new(1.0, 0.0) - u * binv;
                let tau = if binv == 0.0 { u / h } else { u / (den * h) };
                let dtau = if binv == 0.0 { du / h } else { du / (den * den * h) };
                let f = sqrt_slit(tau * tau + 1.0);
                (f, tau * dtau / f)
            }
        }
    }

    fn invert(&self, v: Complex64) -> Complex64 {
        match *self {
            WeldStep::Shift(x) => v + x,
            WeldStep::Pull { binv, h } => {
                let tau = sqrt_slit((v - 1.0) * (v + 1.0));
                if binv == 0.0 {
                    tau * h
                } else {
                    let sigma = tau * h;
                    sigma / (Complex64::new(1.0, 0.0) + sigma * binv)
                }
            }
        }
    }

    /// Pushes a boundary point (real, with None standing for ∞) forward.
    fn push_real(&self, x: Option<f64>) -> Option<f64> {
        match *self {
            WeldStep::Shift(s) => x.map(|x| x - s),
            WeldStep::Pull { binv, h } => {
                let tau = match x {
                    None => {
                        if binv == 0.0 {
                            return None;
                        }
                        -1.0 / (binv * h)
                    }
                    Some(x) => {
                        let den = 1.0 - x * binv;
                        if den == 0.0 {
                            return None;
                        }
                        x / den / h
                    }
                };
                Some(tau.signum() * (tau * tau + 1.0).sqrt())
            }
        }
    }
}

/// Final Möbius normalization ν: H_up → H_up with ν(q) = ∞ (when the strip
/// end sits at a finite q after welding) and ν(p₅) = 5i.
#[derive(Debug, Clone, Copy)]
struct Normalization {
    q: Option<f64>,
    s: f64,
    t: f64,
}

impl Normalization {
    fn apply(&self, u: Complex64) -> Complex64 {
        match self.q {
            Some(q) => Complex64::new(self.s, 0.0) / (Complex64::new(q, 0.0) - u) + self.t,
            None => u * self.s + self.t,
        }
    }

    fn deriv(&self, u: Complex64) -> Complex64 {
        match self.q {
            Some(q) => {
                let d = Complex64::new(q, 0.0) - u;
                Complex64::new(self.s, 0.0) / (d * d)
            }
            None => Complex64::new(self.s, 0.0),
        }
    }

    fn invert(&self, v: Complex64) -> Complex64 {
        match self.q {
            Some(q) => Complex64::new(q, 0.0) - Complex64::new(self.s, 0.0) / (v - self.t),
            None => (v - self.t) / self.s,
        }
    }

    fn apply_real(&self, x: Option<f64>) -> Option<f64> {
        match (self.q, x) {
            (Some(q), Some(x)) => {
                if x == q {
                    None
                } else {
                    Some(self.s / (q - x) + self.t)
                }
            }
            (Some(_), None) => Some(self.t),
            (None, Some(x)) => Some(x * self.s + self.t),
            (None, None) => None,
        }
    }
}

/// A boundary correspondence row: parameter along the boundary walk, the
/// boundary point, and the image parameter t with F(z) = i·t on ∂ℍ.
#[derive(Debug, Clone, Copy)]
pub struct BoundaryPair {
    pub walk_param: f64,
    pub z: Complex64,
    pub image_param: f64,
}

/// The numerical Riemann map of a toy tract onto the right half-plane.
///
/// Immutable after build; evaluation is reentrant.
#[derive(Debug, Clone)]
pub struct MapHandle {
    tract: ToyTract,
    accuracy: f64,
    residual: f64,
    steps: Vec<WeldStep>,
    norm: Normalization,
    base_image: Complex64,
    proxy_image_mag: f64,
    boundary_monotone: bool,
    trusted_rho: f64,
    boundary_table: Vec<BoundaryPair>,
}

impl MapHandle {
    pub fn tract(&self) -> &ToyTract {
        &self.tract
    }

    pub fn accuracy(&self) -> f64 {
        self.accuracy
    }

    /// Achieved boundary residual: the largest distance from a pulled-back
    /// image-side boundary probe to the true boundary polygon, in z units.
    pub fn residual(&self) -> f64 {
        self.residual
    }

    /// Normalization witness: the image of the base point (≈ 5).
    pub fn base_image(&self) -> Complex64 {
        self.base_image
    }

    /// Normalization witness: |F(infinity proxy)|, which must dwarf |F(5)|.
    pub fn proxy_image_mag(&self) -> f64 {
        self.proxy_image_mag
    }

    /// Injectivity witness: boundary images in walk order are cyclically
    /// strictly monotone along ∂ℍ.
    pub fn boundary_monotone(&self) -> bool {
        self.boundary_monotone
    }

    /// Largest |w| the inverse map will accept.
    pub fn trusted_rho(&self) -> f64 {
        self.trusted_rho
    }

    pub fn boundary_table(&self) -> &[BoundaryPair] {
        &self.boundary_table
    }

    /// Boundary table as rows (walk_param, re z, im z, image_param).
    pub fn boundary_table_rows(&self) -> Table {
        let mut t = Table::new(&["walk_param", "re_z", "im_z", "image_param"]);
        for p in &self.boundary_table {
            t.push(vec![
                Value::Float(p.walk_param),
                Value::Float(p.z.re),
                Value::Float(p.z.im),
                Value::Float(p.image_param),
            ]);
        }
        t
    }

    /// JSON-ready cache of the handle: accuracy, witnesses, and the table.
    pub fn to_value(&self) -> Value {
        Value::obj([
            ("accuracy", Value::Float(self.accuracy)),
            ("residual", Value::Float(self.residual)),
            ("base_image", Value::Arr(vec![
                Value::Float(self.base_image.re),
                Value::Float(self.base_image.im),
            ])),
            ("proxy_image_mag", Value::Float(self.proxy_image_mag)),
            ("boundary_monotone", Value::Bool(self.boundary_monotone)),
            ("trusted_rho", Value::Float(self.trusted_rho)),
            (
                "boundary_table",
                Value::Arr(
                    self.boundary_table
                        .iter()
                        .map(|p| {
                            Value::Arr(vec![
                                Value::Float(p.walk_param),
                                Value::Float(p.z.re),
                                Value::Float(p.z.im),
                                Value::Float(p.image_param),
                            ])
                        })
                        .collect(),
                ),
            ),
        ])
    }

    fn eval_u_raw(&self, z: Complex64) -> Complex64 {
        let mut u = Complex64::i() * oracle_fwd(z);
        for s in &self.steps {
            u = s.apply(u);
        }
        u
    }

    fn eval_raw(&self, z: Complex64) -> Complex64 {
        -Complex64::i() * self.norm.apply(self.eval_u_raw(z))
    }

    fn eval_raw_d(&self, z: Complex64) -> (Complex64, Complex64) {
        let mut u = Complex64::i() * oracle_fwd(z);
        let mut du = Complex64::i() * oracle_deriv(z);
        for s in &self.steps {
            let (nu, ndu) = s.apply_d(u, du);
            u = nu;
            du = ndu;
        }
        let w = -Complex64::i() * self.norm.apply(u);
        let dw = -Complex64::i() * (self.norm.deriv(u) * du);
        (w, dw)
    }

    fn invert_raw(&self, w: Complex64) -> Complex64 {
        let mut u = self.norm.invert(Complex64::i() * w);
        for s in self.steps.iter().rev() {
            u = s.invert(u);
        }
        oracle_inv(-Complex64::i() * u)
    }
}

/// A map evaluation result. `truncation_warning` is set when the argument
/// lies east of the trusted region; the value is still returned.
#[derive(Debug, Clone, Copy)]
pub struct MapValue {
    pub value: Complex64,
    pub truncation_warning: bool,
}

// --- weld planning -----------------------------------------------------------

const DENSITY_START: f64 = 4.0;
const DENSITY_GROWTH: f64 = 1.9;
const MAX_ROUNDS: usize = 4;
const MAX_SAMPLES: usize = 24_000;
const SUBDIV_MAX_DEPTH: usize = 42;
const REFINE_PASSES: usize = 9;
const RESIDUAL_CHORD_CAP: usize = 2_000;
const TABLE_ROWS_PER_EDGE: usize = 14;

enum WeldPiece {
    Edge { from: Complex64, to: Complex64 },
    /// Edge welded straight through a branch point at `from`. Its first pull
    /// records the prime end on the branch side so a later piece can resume
    /// there; a straight continuation leaves the welded chart perpendicular
    /// to the boundary, so no re-basing is needed for the edge itself.
    TrackedEdge { from: Complex64, to: Complex64 },
    /// Edge welded from the prime end recorded by the TrackedEdge.
    RebasedEdge { from: Complex64, to: Complex64 },
}

impl WeldPiece {
    fn endpoints(&self) -> (Complex64, Complex64) {
        match *self {
            WeldPiece::Edge { from, to }
            | WeldPiece::TrackedEdge { from, to }
            | WeldPiece::RebasedEdge { from, to } => (from, to),
        }
    }
}

struct WeldTree {
    root: Complex64,
    pieces: Vec<WeldPiece>,
}

fn weld_trees(tract: &ToyTract) -> Vec<WeldTree> {
    let h3 = PI / 3.0;
    let c = Complex64::new;
    let mut trees = Vec::new();
    for w in tract.wiggles() {
        let (glo, ghi) = w.gate_interval();
        // Bottom tree: wall post, then the bar, with the gate slit branching
        // off at τ when present.
        let mut pieces = vec![WeldPiece::Edge { from: c(w.r, -PI), to: c(w.r, h3) }];
        if w.gated() {
            pieces.push(WeldPiece::Edge { from: c(w.r, h3), to: c(w.tau, h3) });
            pieces.push(WeldPiece::TrackedEdge { from: c(w.tau, h3), to: c(w.big_r - 1.0, h3) });
            pieces.push(WeldPiece::RebasedEdge { from: c(w.tau, h3), to: c(w.tau, glo) });
        } else {
            pieces.push(WeldPiece::Edge { from: c(w.r, h3), to: c(w.big_r - 1.0, h3) });
        }
        trees.push(WeldTree { root: c(w.r, -PI), pieces });
        if w.gated() {
            trees.push(WeldTree {
                root: c(w.tau, PI),
                pieces: vec![WeldPiece::Edge { from: c(w.tau, PI), to: c(w.tau, ghi) }],
            });
        }
        trees.push(WeldTree {
            root: c(w.big_r, PI),
            pieces: vec![
                WeldPiece::Edge { from: c(w.big_r, PI), to: c(w.big_r, -h3) },
                WeldPiece::Edge { from: c(w.big_r, -h3), to: c(w.r + 1.0, -h3) },
            ],
        });
    }
    trees
}

/// Chebyshev-clustered sample fractions on (0, 1]: dense at both ends, where
/// corners and tips make the map singular.
fn cheb_fractions(n: usize) -> impl Iterator<Item = f64> {
    (1..=n).map(move |k| (1.0 - (k as f64 * PI / n as f64).cos()) / 2.0)
}

/// Exact upper-half-plane boundary coordinate of a point on the strip walls:
/// im F₀ is zero there, so u = i·F₀(z) is real in closed form.
fn wall_u0(z: Complex64) -> f64 {
    let c0 = oracle_scale();
    if z.im <= -STRIP_HALF_HEIGHT + 1e-12 {
        c0 * ((z.re - STRIP_X_LEFT) / 2.0).cosh()
    } else if z.im >= STRIP_HALF_HEIGHT - 1e-12 {
        -c0 * ((z.re - STRIP_X_LEFT) / 2.0).cosh()
    } else {
        // left edge
        -c0 * (z.im / 2.0).sin()
    }
}

/// One welded sample: the index of its pull in the step chain, the edge it
/// belongs to, and the boundary point it interpolates.
#[derive(Clone)]
struct Mark {
    step: usize,
    edge: usize,
    z: Complex64,
}

#[derive(Clone)]
struct Welder {
    steps: Vec<WeldStep>,
    samples: usize,
    marks: Vec<Mark>,
    current_edge: usize,
    /// Prime end carried along the welds for a pending re-base: the branch
    /// side of a TrackedEdge's first pull, kept on ℝ by the real pushforward.
    tracked: Option<f64>,
    arm_tracking: bool,
}

fn push_real_from(steps: &[WeldStep], x: Option<f64>) -> Option<f64> {
    steps.iter().fold(x, |x, s| s.push_real(x))
}

fn invert_partial(steps: &[WeldStep], u: Complex64) -> Complex64 {
    let mut u = u;
    for s in steps.iter().rev() {
        u = s.invert(u);
    }
    oracle_inv(-Complex64::i() * u)
}

impl Welder {
    fn new() -> Self {
        Welder {
            steps: Vec::new(),
            samples: 0,
            marks: Vec::new(),
            current_edge: 0,
            tracked: None,
            arm_tracking: false,
        }
    }
    fn eval_u(&self, z: Complex64) -> Complex64 {
        let mut u = Complex64::i() * oracle_fwd(z);
        for s in &self.steps {
            u = s.apply(u);
        }
        u
    }

    /// Pushes a wall point through the welds entirely in real arithmetic,
    /// which keeps it on the correct side of every slit opening.
    fn push_wall(&self, z: Complex64) -> Option<f64> {
        let mut x = Some(wall_u0(z));
        for s in &self.steps {
            x = s.push_real(x);
        }
        x
    }

    /// Inverts from the chart right after `self.steps[..upto]` down to z.
    fn invert_through(&self, upto: usize, u: Complex64) -> Complex64 {
        invert_partial(&self.steps[..upto], u)
    }

    fn push_step(&mut self, step: WeldStep) {
        if let Some(x) = self.tracked {
            self.tracked = step.push_real(Some(x));
        }
        self.steps.push(step);
    }

    fn shift_to_wall(&mut self, z: Complex64) -> Result<()> {
        match self.push_wall(z) {
            Some(x) => {
                self.push_step(WeldStep::Shift(x));
                Ok(())
            }
            None => Err(ConformalError::BuildError {
                residual: f64::INFINITY,
                detail: format!("weld root {z} landed at the boundary point at infinity"),
            }),
        }
    }

    fn rebase_to_tracked(&mut self) -> Result<()> {
        match self.tracked.take() {
            Some(x) => {
                self.steps.push(WeldStep::Shift(x));
                Ok(())
            }
            None => Err(ConformalError::BuildError {
                residual: f64::INFINITY,
                detail: "re-base requested with no tracked prime end".into(),
            }),
        }
    }

    fn pull_to(&mut self, z: Complex64) -> Result<()> {
        if self.samples >= MAX_SAMPLES {
            return Err(ConformalError::BuildError {
                residual: f64::INFINITY,
                detail: "sample budget exhausted".into(),
            });
        }
        let a = self.eval_u(z);
        if !(a.im > 0.0) || !a.is_finite() {
            return Err(ConformalError::BuildError {
                residual: f64::INFINITY,
                detail: format!("weld target for {z} left the upper half-plane ({a})"),
            });
        }
        let n2 = a.norm_sqr();
        let h = n2 / a.im;
        let step = WeldStep::Pull { binv: a.re / n2, h };
        if self.arm_tracking {
            // The cut of this pull starts at the current tip; the branch
            // stays on its left, at the −1 prime end of the cut's base.
            self.steps.push(step);
            self.tracked = Some(-1.0);
            self.arm_tracking = false;
        } else {
            self.push_step(step);
        }
        self.marks.push(Mark { step: self.steps.len() - 1, edge: self.current_edge, z });
        self.samples += 1;
        Ok(())
    }
}

/// Welds the boundary chord from `a` to `b`, subdividing while the true arc
/// strays from the geodesic cut the pull would weld. The sag is measured in
/// the cut's own upright chart (σ maps the cut to [0, ih]), where the
/// mid-chord image must satisfy |re σ| ≤ limit·im σ and stay short of the
/// tip — a chart-free criterion, so it digs exactly as deep as the local
/// distortion requires.
fn weld_segment(
    welder: &mut Welder,
    a: Complex64,
    b: Complex64,
    sag_limit: f64,
    depth: usize,
) -> Result<()> {
    // Below this scale the sag probes read accumulated drift and rounding
    // noise rather than chord geometry, so subdivision only recurses into
    // numerically dead territory.
    let micro = (b - a).norm() < 1e-6;
    if depth < SUBDIV_MAX_DEPTH && !micro {
        let u_b = welder.eval_u(b);
        let u_m = welder.eval_u((a + b) / 2.0);
        // Subdividing helps only while the chart still resolves the chord: a
        // dead eval (NaN or collapsed onto ℝ) means the region is below f64
        // angle resolution, and halving moves the probes deeper into it, so
        // go straight to the pull and let it succeed or fail honestly.
        let alive = u_b.is_finite()
            && u_b.im > 0.0
            && u_m.is_finite()
            && u_m.im > 0.0;
        if alive && !chord_is_tame(u_m, u_b, sag_limit) {
            weld_segment(welder, a, (a + b) / 2.0, sag_limit, depth + 1)?;
            weld_segment(welder, (a + b) / 2.0, b, sag_limit, depth + 1)?;
            return Ok(());
        }
    }
    welder.pull_to(b)
}

fn chord_is_tame(u_m: Complex64, u_b: Complex64, sag_limit: f64) -> bool {
    let n2 = u_b.norm_sqr();
    let h = n2 / u_b.im;
    let sigma = u_m / (1.0 - u_m * (u_b.re / n2));
    sigma.is_finite()
        && sigma.im > 0.0
        && sigma.re.abs() <= sag_limit * sigma.im
        && sigma.norm_sqr() <= h * h * 1.000_000_1
}

fn sag_limit(density: f64) -> f64 {
    0.5 / density
}

/// Runs the full weld with the given per-edge target lists (indexed in tree
/// walk order, matching `weld_trees`).
fn weld_all(trees: &[WeldTree], targets: &[Vec<Complex64>], limit: f64) -> Result<Welder> {
    let mut welder = Welder::new();
    let mut edge = 0usize;
    for tree in trees {
        welder.shift_to_wall(tree.root)?;
        for piece in &tree.pieces {
            let (from, _) = match piece {
                WeldPiece::Edge { from, to } => (*from, *to),
                WeldPiece::TrackedEdge { from, to } => {
                    welder.arm_tracking = true;
                    (*from, *to)
                }
                WeldPiece::RebasedEdge { from, to } => {
                    welder.rebase_to_tracked()?;
                    (*from, *to)
                }
            };
            welder.current_edge = edge;
            let mut prev = from;
            let mut first = true;
            for (k, &z) in targets[edge].iter().enumerate() {
                let r = if first {
                    // The first chord leaves a joint (root, corner, or
                    // branch) whose departure angle in the welded chart is
                    // fixed by the joint's geometry, not the chord's length;
                    // the sag test cannot pass there, and the Chebyshev
                    // clustering already makes the chord second-order short.
                    welder.pull_to(z)
                } else {
                    weld_segment(&mut welder, prev, z, limit, 0)
                };
                match r {
                    Ok(()) => {
                        first = false;
                        prev = z;
                    }
                    // A target too close to an already-welded joint can fall
                    // below the chart's f64 angle resolution. Skipping it
                    // folds its micro-chord into the neighbor, whose sag the
                    // drift measure still reports; only the edge's final
                    // target is structural (it ends the slit) and must land.
                    Err(e) => {
                        if k + 1 == targets[edge].len() {
                            return Err(e);
                        }
                    }
                }
            }
            edge += 1;
        }
    }
    Ok(welder)
}

/// Offset of the welded spine from the true edge line at each chord's
/// midpoint, indexed parallel to `welder.marks` (entry k describes the chord
/// ending at mark k; None for first-in-edge marks and unmeasurable chords).
fn measure_mid_drifts(welder: &Welder, edges: &[(Complex64, Complex64)]) -> Vec<Option<f64>> {
    let mut out = vec![None; welder.marks.len()];
    for idx in 1..welder.marks.len() {
        let mark = &welder.marks[idx];
        if welder.marks[idx - 1].edge != mark.edge {
            continue;
        }
        let (efrom, eto) = edges[mark.edge];
        let dir = (eto - efrom) / (eto - efrom).norm();
        // Interior boundary points of the cut in its own chart, probed from
        // both sides at three stations so an S-shaped defect cannot hide; the
        // sag is the worst perpendicular deviation from the true edge line.
        // A station counts only if the chart still separates the probe
        // offsets — otherwise the region is below f64 resolution and the
        // numbers would be rounding noise, not geometry.
        let mut worst: Option<f64> = None;
        for x in [0.942_809_041_582_063_4, 3f64.sqrt() / 2.0, 0.745_355_992_499_929_9] {
            for side in [-1.0, 1.0] {
                if let Some(zs) = probe_station(welder, mark.step + 1, side * x) {
                    let mut perp_min = f64::INFINITY;
                    for z in zs {
                        let off = z - efrom;
                        let perp = off.re * (-dir.im) + off.im * dir.re;
                        perp_min = perp_min.min(perp.abs());
                    }
                    // Ignore garbage probes that landed far from the chord.
                    if perp_min < 0.25 {
                        worst = Some(worst.unwrap_or(0.0).max(perp_min));
                    }
                }
            }
        }
        out[idx] = worst;
    }
    out
}

/// Probes one boundary station of the cut created at `upto − 1`: inverts the
/// chart point at three interior offsets and returns the preimages, or None
/// when the chart no longer separates the offsets (the station sits below
/// f64 resolution, so nothing about the boundary can be read there).
fn probe_station(welder: &Welder, upto: usize, x: f64) -> Option<[Complex64; 3]> {
    let mut zs = [Complex64::new(0.0, 0.0); 3];
    for (k, eta) in [1e-4, 1e-7, 1e-10].into_iter().enumerate() {
        let z = welder.invert_through(upto, Complex64::new(x, eta));
        if !z.is_finite() {
            return None;
        }
        zs[k] = z;
    }
    let spread = (zs[0] - zs[2]).norm().max((zs[0] - zs[1]).norm());
    if spread > 1e-11 * (1.0 + zs[2].norm()) {
        Some(zs)
    } else {
        None
    }
}

/// Splits every welded chord whose measured sag exceeds the tolerance by
/// inserting its plain midpoint as a new target: the weld passes through its
/// targets exactly, so each split halves the local first-order sag, and the
/// refinement concentrates where the image geometry actually bends.
fn refined_targets(
    marks: &[Mark],
    drifts: &[Option<f64>],
    n_edges: usize,
    tol: f64,
) -> Vec<Vec<Complex64>> {
    let mut out = vec![Vec::new(); n_edges];
    for (idx, mark) in marks.iter().enumerate() {
        let list = &mut out[mark.edge];
        if idx > 0 && marks[idx - 1].edge == mark.edge {
            // The chord into an edge's last mark is left alone: a tip is
            // halted exactly by its final pull, and splitting next to it
            // only digs the chart's contraction hole deeper.
            let edge_final = idx + 1 == marks.len() || marks[idx + 1].edge != mark.edge;
            let split = !edge_final && drifts[idx].map(|d| d > tol).unwrap_or(false);
            if split && (mark.z - marks[idx - 1].z).norm() > 1e-7 {
                list.push((marks[idx - 1].z + mark.z) / 2.0);
            }
        }
        list.push(mark.z);
    }
    out
}

fn edge_samples(
    from: Complex64,
    to: Complex64,
    density: f64,
    end_floor: f64,
    to_is_joint: bool,
) -> Vec<Complex64> {
    let len = (to - from).norm();
    let n = ((len * density).ceil() as usize + 6).clamp(8, 800);
    let mut fracs: Vec<f64> = cheb_fractions(n).collect();
    // A chord that meets a joint inherits the joint's angular defect, so its
    // image error scales with the chord length itself rather than with the
    // sag, and halving geometrically toward the joint pushes that below the
    // build target without densifying the whole edge. A free slit tip has no
    // defect to compensate, but a short tail still shrinks the tip chord so
    // its sag is structurally below target; each tail pull contracts the tip
    // chart by half, so the tail must stay shallow there.
    let floor_frac = (end_floor / len).max(1e-13);
    let mut f = fracs[0];
    while f > floor_frac && fracs.len() < 1800 {
        f *= 0.5;
        fracs.push(f);
    }
    let tip_floor = if to_is_joint { floor_frac } else { floor_frac.max(1e-7 / len) };
    let mut g = 1.0 - fracs[n - 2];
    while g > tip_floor && fracs.len() < 1800 {
        g *= 0.5;
        fracs.push(1.0 - g);
    }
    fracs.sort_by(|a, b| a.partial_cmp(b).unwrap());
    fracs.dedup();
    fracs
        .iter()
        .map(|&t| if t >= 1.0 { to } else { from + (to - from) * t })
        .collect()
}

/// Constructs the numerical Riemann map of `tract` onto the right half-plane
/// with F(5) = 5 and the strip end at ∞. `accuracy` is the boundary residual
/// target in z units, between 1e-10 and 1e-3.
pub fn map_build(tract: &ToyTract, accuracy: f64) -> Result<MapHandle> {
    if !(1e-10..=1e-3).contains(&accuracy) {
        return Err(ConformalError::Parameter(format!(
            "accuracy {accuracy} outside [1e-10, 1e-3]"
        )));
    }
    // The sinh scale must stay well inside f64 range, squared.
    let reach = oracle_scale() * ((tract.x_close() - STRIP_X_LEFT) / 2.0).cosh();
    if !reach.is_finite() || reach > 1e120 {
        return Err(ConformalError::Parameter(
            "tract too long for f64 evaluation of the strip oracle".into(),
        ));
    }

    let mut density = DENSITY_START;
    let mut best: Option<(MapHandle, f64)> = None;
    let mut last_err: Option<ConformalError> = None;
    for _round in 0..MAX_ROUNDS {
        match build_once(tract, accuracy, density) {
            Ok(handle) => {
                let res = handle.residual;
                if res <= accuracy {
                    return Ok(handle);
                }
                if best.as_ref().map(|(_, b)| res < *b).unwrap_or(true) {
                    best = Some((handle, res));
                }
            }
            Err(e @ ConformalError::Parameter(_)) => return Err(e),
            Err(e) => last_err = Some(e),
        }
        density *= DENSITY_GROWTH;
    }
    match best {
        Some((_, residual)) => Err(ConformalError::BuildError {
            residual,
            detail: format!("after {MAX_ROUNDS} refinement rounds"),
        }),
        None => Err(last_err.expect("no rounds ran")),
    }
}

fn build_once(tract: &ToyTract, accuracy: f64, density: f64) -> Result<MapHandle> {
    let trees = weld_trees(tract);
    let limit = sag_limit(density);
    let edges: Vec<(Complex64, Complex64)> = trees
        .iter()
        .flat_map(|t| t.pieces.iter().map(WeldPiece::endpoints))
        .collect();

    // The welded boundary passes through its targets exactly and sags between
    // them in proportion to the chord length times the local image curvature.
    // The sag is directly measurable, so each pass re-welds with midpoints
    // inserted only on the chords that exceed tolerance, concentrating nodes
    // where the geometry bends instead of densifying every edge.
    let end_floor = (accuracy * 0.25).max(1e-9);
    let mut targets: Vec<Vec<Complex64>> = edges
        .iter()
        .map(|&(from, to)| {
            let to_is_joint = edges.iter().any(|&(f, _)| (f - to).norm() < 1e-9);
            edge_samples(from, to, density, end_floor, to_is_joint)
        })
        .collect();
    let mut welder = weld_all(&trees, &targets, limit)?;
    let mut best: Option<(Welder, f64)> = None;
    for pass in 0..REFINE_PASSES {
        let drifts = measure_mid_drifts(&welder, &edges);
        let max_d = drifts.iter().filter_map(|v| *v).fold(0.0f64, f64::max);
        // Re-welds are not monotone — a split can worsen a distant chord —
        // so keep whichever pass measured best rather than the latest.
        if best.as_ref().map(|&(_, b)| max_d < b).unwrap_or(true) {
            best = Some((welder.clone(), max_d));
        }
        if max_d <= 0.6 * accuracy || pass + 1 == REFINE_PASSES {
            break;
        }
        targets = refined_targets(&welder.marks, &drifts, edges.len(), 0.5 * accuracy);
        // Refinement is best-effort: near the f64 angle floor a split target
        // can become unweldable, and the best pass so far already stands.
        match weld_all(&trees, &targets, limit) {
            Ok(w) => welder = w,
            Err(_) => break,
        }
    }
    let welder = best.map(|(w, _)| w).unwrap_or(welder);

    // Residual: every pull's cut lands on [−1, 1] in its own chart, so
    // interior points of the welded chord sit at ±√(1−q²) on that chart's
    // boundary. Probe just inside each, invert only the chain prefix back to
    // z, and measure the distance to the true boundary; the floor over
    // shrinking offsets isolates the weld defect from the offset itself.
    // Stations below f64 resolution are skipped: the tail construction keeps
    // every unresolvable region within a fraction of the accuracy target of
    // an exactly-interpolated node, but an edge with no readable station at
    // all means the weld there is unverifiable, which is a failed build.
    let mut residual = 0.0f64;
    let n_edges = edges.len();
    let mut edge_alive = vec![false; n_edges];
    let stride = (welder.marks.len() / RESIDUAL_CHORD_CAP).max(1);
    for (idx, mark) in welder.marks.iter().enumerate() {
        let edge_final =
            idx + 1 == welder.marks.len() || welder.marks[idx + 1].edge != mark.edge;
        if idx % stride != 0 && !edge_final {
            continue;
        }
        let qs: &[f64] =
            if edge_final { &[0.05, 0.3, 0.55, 0.8, 0.97, 0.9995] } else { &[0.05, 0.3, 0.55, 0.8, 0.97] };
        for &q in qs {
            let x = (1.0 - q * q).sqrt();
            for side in [-1.0, 1.0] {
                if let Some(zs) = probe_station(&welder, mark.step + 1, side * x) {
                    edge_alive[mark.edge] = true;
                    let d = zs
                        .iter()
                        .map(|&z| tract.distance_to_boundary(z))
                        .fold(f64::INFINITY, f64::min);
                    residual = residual.max(d);
                }
            }
        }
    }
    if !edge_alive.iter().all(|&a| a) {
        residual = f64::INFINITY;
    }

    // Normalization: strip end to ∞ (tracked through the welds), base to 5.
    let end = push_real_from(&welder.steps, None); // starts at ∞
    let p5 = welder.eval_u(Complex64::new(5.0, 0.0));
    let norm = match end {
        Some(q) => {
            let inv5 = Complex64::new(1.0, 0.0) / (Complex64::new(q, 0.0) - p5);
            let s = 5.0 / inv5.im;
            Normalization { q: Some(q), s, t: -s * inv5.re }
        }
        None => {
            let s = 5.0 / p5.im;
            Normalization { q: None, s, t: -s * p5.re }
        }
    };

    let Welder { steps, marks, .. } = welder;
    let mut handle = MapHandle {
        tract: tract.clone(),
        accuracy,
        residual,
        steps,
        norm,
        base_image: Complex64::new(0.0, 0.0),
        proxy_image_mag: 0.0,
        boundary_monotone: false,
        trusted_rho: 0.0,
        boundary_table: Vec::new(),
    };
    handle.base_image = handle.eval_raw(Complex64::new(5.0, 0.0));
    handle.proxy_image_mag = handle.eval_raw(tract.infinity_proxy() - 1e-9).norm();
    handle.trusted_rho = handle.eval_raw(Complex64::new(tract.trusted_x(), 0.0)).norm();
    let (table, monotone) = boundary_correspondence(&handle, &marks);
    handle.boundary_table = table;
    handle.boundary_monotone = monotone;
    Ok(handle)
}

/// Builds the boundary correspondence table (walls sampled directly, welded
/// slits through their samples' exact prime-end pushforwards) and checks
/// cyclic monotonicity of the image parameter along the boundary walk.
fn boundary_correspondence(handle: &MapHandle, marks: &[Mark]) -> (Vec<BoundaryPair>, bool) {
    let tract = &handle.tract;
    let image_param = |z: Complex64| -> Option<f64> {
        // Walls map exactly onto ∂ℍ = iℝ; the parameter is im F = −ν(u),
        // pushed through the welds in real arithmetic.
        let mut x = Some(wall_u0(z));
        for s in &handle.steps {
            x = s.push_real(x);
        }
        handle.norm.apply_real(x).map(|xi| -xi)
    };

    // Walk-ordered wall anchors: bottom wall west→east, closing edge,
    // top wall east→west, then the left edge.
    let mut walk_points: Vec<Complex64> = Vec::new();
    let n_wall = 40;
    let span_x = tract.x_close() - STRIP_X_LEFT;
    let keep = |z: &Complex64| {
        tract
            .wiggles()
            .iter()
            .all(|w| {
                let clear = |x: f64| (z.re - x).abs() > 0.2;
                clear(w.r) && clear(w.big_r) && clear(w.tau) && clear(w.r + 1.0) && clear(w.big_r - 1.0)
            })
    };
    for k in 1..n_wall {
        let z = Complex64::new(STRIP_X_LEFT + span_x * k as f64 / n_wall as f64, -PI + 1e-9);
        if keep(&z) {
            walk_points.push(Complex64::new(z.re, -PI));
        }
    }
    for k in 1..n_wall {
        let z = Complex64::new(tract.x_close() - span_x * k as f64 / n_wall as f64, PI - 1e-9);
        if keep(&z) {
            walk_points.push(Complex64::new(z.re, PI));
        }
    }
    for k in 1..8 {
        walk_points.push(Complex64::new(STRIP_X_LEFT, PI - 2.0 * PI * k as f64 / 8.0));
    }

    let mut table: Vec<BoundaryPair> = walk_points
        .iter()
        .filter_map(|&z| {
            image_param(z)
                .map(|p| BoundaryPair { walk_param: walk_param(tract, z), z, image_param: p })
        })
        .collect();

    // Welded slits enter through their samples: the mid-chord prime ends sit
    // at ±√3/2 in the chord's own chart, and push to the final chart in
    // exact real arithmetic. A fat inverse probe (1e-2 inward, through the
    // chain prefix only) locates the matching z solidly on its own side.
    // Tail marks near joints span micro-chords whose flank pushforwards die
    // in f64 (the chart zooms their neighborhoods below resolution); only
    // body marks give trustworthy rows.
    let mut by_edge: Vec<Vec<usize>> = Vec::new();
    for (idx, mark) in marks.iter().enumerate() {
        if by_edge.len() <= mark.edge {
            by_edge.resize(mark.edge + 1, Vec::new());
        }
        if idx > 0
            && marks[idx - 1].edge == mark.edge
            && (mark.z - marks[idx - 1].z).norm() >= 1e-3
        {
            by_edge[mark.edge].push(idx);
        }
    }
    let mid = 3f64.sqrt() / 2.0;
    for edge_marks in &by_edge {
        let stride = (edge_marks.len() / TABLE_ROWS_PER_EDGE).max(1);
        for &idx in edge_marks.iter().step_by(stride) {
            let mark = &marks[idx];
            for side in [-1.0, 1.0] {
                let x0 = side * mid;
                let xi = push_real_from(&handle.steps[mark.step + 1..], Some(x0));
                let Some(p) = handle.norm.apply_real(xi) else { continue };
                let z = invert_partial(&handle.steps[..=mark.step], Complex64::new(x0, 1e-2));
                // Deep charts stop separating probe offsets; a station that
                // fails the witness cannot place its row on the right side.
                // A slit image blown past any trusted magnitude is the same
                // failure on the real-pushforward side: the station fell
                // into the strip end's f64 shadow.
                let z_in = invert_partial(&handle.steps[..=mark.step], Complex64::new(x0, 1e-3));
                if z.is_finite()
                    && z_in.is_finite()
                    && (z - z_in).norm() > 1e-11 * (1.0 + z.norm())
                    && p.abs() < 1e12
                {
                    table.push(BoundaryPair {
                        walk_param: walk_param(tract, z),
                        z,
                        image_param: -p,
                    });
                }
            }
        }
    }
    table.sort_by(|a, b| a.walk_param.total_cmp(&b.walk_param));

    // Monotonicity witness: along the boundary walk the image parameter must
    // be cyclically monotone (one wrap at the strip end, in whichever
    // direction the boundary is traversed).
    let params: Vec<f64> = table.iter().map(|p| p.image_param).collect();
    let n = params.len();
    let mut breaks_up = 0;
    let mut breaks_down = 0;
    for k in 0..n {
        let prev = params[(k + n - 1) % n];
        if params[k] < prev {
            breaks_up += 1;
        }
        if params[k] > prev {
            breaks_down += 1;
        }
    }
    let monotone = breaks_up <= 1 || breaks_down <= 1;
    (table, monotone)
}

/// Arclength position of (the projection of) `z` along the boundary walk.
/// The walk visits each slit twice (once per side); the interior lies on the
/// left of the walk direction, which picks the correct side among coincident
/// segments.
fn walk_param(tract: &ToyTract, z: Complex64) -> f64 {
    let verts = tract.vertices();
    let mut best = (f64::INFINITY, false, 0.0);
    let mut acc = 0.0;
    for k in 0..verts.len() {
        let a = verts[k];
        let b = verts[(k + 1) % verts.len()];
        let d = b - a;
        let len = d.norm();
        if len > 0.0 {
            let t = (((z - a).re * d.re + (z - a).im * d.im) / (len * len)).clamp(0.0, 1.0);
            let dist = (z - (a + d * t)).norm();
            let left = d.re * (z - a).im - d.im * (z - a).re >= 0.0;
            if dist < best.0 - 1e-9 || (dist < best.0 + 1e-9 && left && !best.1) {
                best = (dist, left, acc + t * len);
            }
        }
        acc += len;
    }
    best.2
}

// --- evaluation --------------------------------------------------------------

/// Evaluates F at an interior point. Points east of the trusted region get a
/// truncation warning attached rather than an error.
pub fn map_eval(handle: &MapHandle, z: Complex64) -> Result<MapValue> {
    if !handle.tract.contains(z) {
        return Err(ConformalError::DomainError(z));
    }
    Ok(MapValue { value: handle.eval_raw(z), truncation_warning: z.re > handle.tract.trusted_x() })
}

/// Evaluates F and dF/dz at an interior point (no trusted-region gate; used
/// by quadrature on caller-checked polylines).
pub fn map_eval_deriv(handle: &MapHandle, z: Complex64) -> Result<(Complex64, Complex64)> {
    if !handle.tract.contains(z) {
        return Err(ConformalError::DomainError(z));
    }
    Ok(handle.eval_raw_d(z))
}

/// Inverts F at w ∈ ℍ within the trusted image region, by exact step-by-step
/// inversion of the composition plus a Newton polish.
pub fn map_inverse(handle: &MapHandle, w: Complex64) -> Result<Complex64> {
    if w.re <= 0.0 {
        return Err(ConformalError::DomainError(w));
    }
    if w.norm() > handle.trusted_rho {
        return Err(ConformalError::TruncationError(format!(
            "|w| = {:.3e} beyond trusted image radius {:.3e}",
            w.norm(),
            handle.trusted_rho
        )));
    }
    let mut z = handle.invert_raw(w);
    for _ in 0..3 {
        if !handle.tract.contains(z) {
            break;
        }
        let (fz, dfz) = handle.eval_raw_d(z);
        let err = fz - w;
        if err.norm() <= 1e-13 * (1.0 + w.norm()) {
            break;
        }
        let step = err / dfz;
        let z_next = z - step;
        if handle.tract.contains(z_next) {
            z = z_next;
        } else {
            break;
        }
    }
    Ok(z)
}

// --- geodesics and hyperbolic quantities --------------------------------------

/// A traced vertical geodesic Γ_ρ = F⁻¹({|w| = ρ}).
#[derive(Debug, Clone)]
pub struct GeodesicTrace {
    pub rho: f64,
    /// Angles θ with w = ρ·e^{iθ} for each polyline vertex.
    pub angles: Vec<f64>,
    pub polyline: Vec<Complex64>,
    /// Euclidean diameter of the trace.
    pub diameter: f64,
    /// Whether the first/last vertex reached within `step` of ∂T.
    pub endpoints_on_boundary: (bool, bool),
}

impl GeodesicTrace {
    pub fn to_table(&self) -> Table {
        let mut t = Table::new(&["angle", "re_z", "im_z"]);
        for (a, z) in self.angles.iter().zip(self.polyline.iter()) {
            t.push(vec![Value::Float(*a), Value::Float(z.re), Value::Float(z.im)]);
        }
        t
    }
}

impl Report for GeodesicTrace {
    fn to_value(&self) -> Value {
        Value::obj([
            ("rho", Value::Float(self.rho)),
            ("vertices", Value::Int(self.polyline.len() as i64)),
            ("diameter", Value::Float(self.diameter)),
            ("endpoint_first_on_boundary", Value::Bool(self.endpoints_on_boundary.0)),
            ("endpoint_last_on_boundary", Value::Bool(self.endpoints_on_boundary.1)),
        ])
    }

    fn to_table(&self) -> Option<Table> {
        Some(GeodesicTrace::to_table(self))
    }

    fn to_text(&self) -> String {
        format!(
            "geodesic rho={:.6e}: {} vertices, diameter {:.6}, endpoints on boundary: {}/{}\n",
            self.rho,
            self.polyline.len(),
            self.diameter,
            self.endpoints_on_boundary.0,
            self.endpoints_on_boundary.1
        )
    }
}

const TRACE_SAMPLES: usize = 1000;

/// Traces Γ_ρ by pulling back the semicircle |w| = ρ (1000 angular samples),
/// refining each end until the preimage comes within `step` of ∂T.
pub fn geodesic_trace(handle: &MapHandle, rho: f64, step: f64) -> Result<GeodesicTrace> {
    if !(rho > 0.0) || rho > handle.trusted_rho {
        return Err(ConformalError::TruncationError(format!(
            "rho {rho} outside trusted image range (0, {:.3e}]",
            handle.trusted_rho
        )));
    }
    if !(step > 0.0) {
        return Err(ConformalError::Parameter("step must be positive".into()));
    }
    let theta_lim = PI / 2.0 * (1.0 - 1e-9);
    let point = |theta: f64| -> Result<Complex64> {
        let w = Complex64::from_polar(rho, theta);
        map_inverse(handle, w)
    };
    let mut angles = Vec::with_capacity(TRACE_SAMPLES + 2);
    let mut poly = Vec::with_capacity(TRACE_SAMPLES + 2);
    for k in 0..TRACE_SAMPLES {
        let theta = -theta_lim + 2.0 * theta_lim * k as f64 / (TRACE_SAMPLES - 1) as f64;
        let z = point(theta)?;
        if z.re > handle.tract.trusted_x() {
            return Err(ConformalError::TruncationError(format!(
                "trace exits trusted region at theta={theta:.6}"
            )));
        }
        angles.push(theta);
        poly.push(z);
    }
    // Push each end toward ±π/2 until the preimage is within `step` of ∂T.
    let refine = |sign: f64, mut theta_in: f64| -> (f64, Complex64, bool) {
        let mut theta_out = sign * (PI / 2.0 - f64::EPSILON);
        let mut best = (theta_in, point(theta_in).unwrap_or(Complex64::new(5.0, 0.0)));
        for _ in 0..80 {
            let mid = 0.5 * (theta_in + theta_out);
            match point(mid) {
                Ok(z) if handle.tract.distance_to_boundary(z) > step => {
                    theta_in = mid;
                    best = (mid, z);
                }
                Ok(z) => {
                    best = (mid, z);
                    break;
                }
                Err(_) => theta_out = mid,
            }
        }
        let on = handle.tract.distance_to_boundary(best.1) <= step;
        (best.0, best.1, on)
    };
    let (th_last, z_last, on_last) = refine(1.0, *angles.last().unwrap());
    let (th_first, z_first, on_first) = refine(-1.0, angles[0]);
    angles.insert(0, th_first);
    poly.insert(0, z_first);
    angles.push(th_last);
    poly.push(z_last);

    let mut diameter = 0.0f64;
    for i in 0..poly.len() {
        for j in i + 1..poly.len() {
            diameter = diameter.max((poly[i] - poly[j]).norm());
        }
    }
    Ok(GeodesicTrace {
        rho,
        angles,
        polyline: poly,
        diameter,
        endpoints_on_boundary: (on_first, on_last),
    })
}

/// Hyperbolic distance d_T(z1, z2) = d_ℍ(F(z1), F(z2)) through the exact
/// right-half-plane metric.
pub fn hyp_dist(handle: &MapHandle, z1: Complex64, z2: Complex64) -> Result<f64> {
    let w1 = map_eval(handle, z1)?.value;
    let w2 = map_eval(handle, z2)?.value;
    let t = (w1 - w2).norm_sqr() / (2.0 * w1.re * w2.re);
    Ok((1.0 + t + (t * (t + 2.0)).sqrt()).ln())
}

/// Standard-estimate sandwich for the hyperbolic length of a polyline.
#[derive(Debug, Clone, Copy)]
pub struct LengthBounds {
    /// ∫ |dz| / (2·dist(z, ∂T)).
    pub lower: f64,
    /// ∫ 2·|dz| / dist(z, ∂T).
    pub upper: f64,
    /// Hyperbolic length of the image, ∫ |F′(z)|/re F(z) |dz|, when a map
    /// handle was supplied.
    pub pullback: Option<f64>,
}

/// Integrates the standard-estimate bounds (and, with a handle, the exact
/// pullback length) along a polyline strictly inside the tract.
pub fn hyp_length_bounds(
    tract: &ToyTract,
    polyline: &[Complex64],
    handle: Option<&MapHandle>,
) -> Result<LengthBounds> {
    if polyline.len() < 2 {
        return Err(ConformalError::Parameter("polyline needs at least two points".into()));
    }
    for pair in polyline.windows(2) {
        for s in 0..=16 {
            let z = pair[0] + (pair[1] - pair[0]) * (s as f64 / 16.0);
            if tract.distance_to_boundary(z) < 1e-9 {
                return Err(ConformalError::DegenerateDistance);
            }
        }
    }
    let mut lower = 0.0;
    let mut upper = 0.0;
    for pair in polyline.windows(2) {
        let (a, b) = (pair[0], pair[1]);
        let len = (b - a).norm();
        if len == 0.0 {
            continue;
        }
        let inv_d = |t: f64| 1.0 / tract.distance_to_boundary(a + (b - a) * t);
        let integral = adaptive_simpson(&inv_d, 0.0, 1.0, 1e-12, 40) * len;
        lower += integral / 2.0;
        upper += integral * 2.0;
    }
    let pullback = match handle {
        Some(h) => {
            let mut total = 0.0;
            for pair in polyline.windows(2) {
                let (a, b) = (pair[0], pair[1]);
                let len = (b - a).norm();
                if len == 0.0 {
                    continue;
                }
                let density = |t: f64| {
                    let z = a + (b - a) * t;
                    let (w, dw) = h.eval_raw_d(z);
                    dw.norm() / w.re
                };
                total += adaptive_simpson(&density, 0.0, 1.0, 1e-12, 40) * len;
            }
            Some(total)
        }
        None => None,
    };
    Ok(LengthBounds { lower, upper, pullback })
}
