//! Connection functions and the model catalog.
//!
//! Every catalog model is radial: `φ(x, p, q) = φ̃(‖x‖, p, q)`, which makes
//! symmetry `φ(x, p, q) = φ(−x, q, p)` hold exactly as long as `φ̃` is
//! symmetric in the marks. The derived integrals
//!
//! * `d_φ(p, q) = ∫ φ(x, p, q) dx` (pair integral),
//! * `D_φ(p) = ∫∫ φ(x, p, q) dx Q(dq)` (degree integral per unit intensity),
//! * `d_φ = ∫ D_φ(p) Q(dp)`
//!
//! are computed in closed form where one exists and by radial quadrature
//! otherwise.

use rand::Rng;
use rand_distr::{Distribution, Exp, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{RcmError, Result};
use crate::geometry::{ball_intersection_volume, ball_volume, norm, random_direction, unit_ball_volume, unit_sphere_area};
use crate::marks::MarkDistribution;
use crate::quadrature::adaptive_integrate;

const PAIR_INTEGRAL_TOL: f64 = 1e-6;

/// Spatial factor `ψ` of a factorized connection function.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "kebab-case")]
pub enum SpatialFactor {
    /// `1{‖x‖ ≤ radius}`
    Ball { radius: f64 },
    /// `exp(−‖x‖² / 2σ²)`
    Gaussian { sigma: f64 },
}

impl SpatialFactor {
    fn value(&self, r: f64) -> f64 {
        match self {
            SpatialFactor::Ball { radius } => (r <= *radius) as u8 as f64,
            SpatialFactor::Gaussian { sigma } => (-r * r / (2.0 * sigma * sigma)).exp(),
        }
    }

    /// `m_ψ = ∫ ψ(x) dx`
    fn mass(&self, d: usize) -> f64 {
        match self {
            SpatialFactor::Ball { radius } => ball_volume(d, *radius),
            SpatialFactor::Gaussian { sigma } => {
                (2.0 * std::f64::consts::PI * sigma * sigma).powf(d as f64 / 2.0)
            }
        }
    }
}

/// Mark factor `K(p, q)` of a factorized connection function.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "form", rename_all = "kebab-case")]
pub enum MarkKernel {
    Constant { value: f64 },
    /// `K(p, q) = p·q` for marks in `[0, 1]`.
    Product,
    /// Symmetric table over a finite list of marks.
    Table { marks: Vec<f64>, values: Vec<Vec<f64>> },
}

impl MarkKernel {
    fn value(&self, p: f64, q: f64) -> f64 {
        match self {
            MarkKernel::Constant { value } => *value,
            MarkKernel::Product => (p * q).clamp(0.0, 1.0),
            MarkKernel::Table { marks, values } => {
                let idx = |m: f64| marks.iter().position(|v| (v - m).abs() <= 1e-12);
                match (idx(p), idx(q)) {
                    (Some(i), Some(j)) => values[i][j],
                    _ => 0.0,
                }
            }
        }
    }

    fn sup(&self) -> f64 {
        match self {
            MarkKernel::Constant { value } => *value,
            MarkKernel::Product => 1.0,
            MarkKernel::Table { values, .. } => values
                .iter()
                .flat_map(|r| r.iter().copied())
                .fold(0.0, f64::max),
        }
    }

    fn validate(&self, marks: &MarkDistribution) -> Result<()> {
        match self {
            MarkKernel::Constant { value } => check_prob(*value),
            MarkKernel::Product => {
                let (lo, hi) = marks.support();
                if lo < 0.0 || hi > 1.0 {
                    return Err(RcmError::InvalidModel(
                        "product kernel needs marks in [0, 1]".into(),
                    ));
                }
                Ok(())
            }
            MarkKernel::Table { marks: tm, values } => {
                let k = tm.len();
                if values.len() != k || values.iter().any(|r| r.len() != k) {
                    return Err(RcmError::InvalidModel("kernel table must be square".into()));
                }
                for i in 0..k {
                    for j in 0..k {
                        check_prob(values[i][j])?;
                        if values[i][j] != values[j][i] {
                            return Err(RcmError::InvalidModel("kernel table not symmetric".into()));
                        }
                    }
                }
                if let MarkDistribution::Discrete { atoms } = marks {
                    for (m, _) in atoms {
                        if !tm.iter().any(|v| (v - m).abs() <= 1e-12) {
                            return Err(RcmError::InvalidModel(format!("mark {m} missing from kernel table")));
                        }
                    }
                    Ok(())
                } else if let MarkDistribution::PointMass { value } = marks {
                    if tm.iter().any(|v| (v - value).abs() <= 1e-12) {
                        Ok(())
                    } else {
                        Err(RcmError::InvalidModel(format!("mark {value} missing from kernel table")))
                    }
                } else {
                    Err(RcmError::InvalidModel("kernel table needs atomic marks".into()))
                }
            }
        }
    }
}

/// Decreasing profile `ρ` of the weight-dependent model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Profile {
    /// `ρ(s) = 1{s ≤ 1}`
    Indicator,
    /// `ρ(s) = e^{−s}`
    Exponential,
}

impl Profile {
    fn value(self, s: f64) -> f64 {
        match self {
            Profile::Indicator => (s <= 1.0) as u8 as f64,
            Profile::Exponential => (-s).exp(),
        }
    }
}

/// Catalog of connection functions, addressed by name in config files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "kebab-case")]
pub enum ConnectionKind {
    /// `φ = value · 1{‖x‖ ≤ range}`.
    Constant { value: f64, range: f64 },
    /// Gilbert graph with radius marks: `φ = 1{‖x‖ ≤ p + q}`.
    Gilbert,
    /// Ball grains with radius marks and `V = scale · volume`:
    /// `φ = 1 − exp(−scale · |B(0, p) ∩ B(x, q)|)`. Dimensions 1 to 3.
    Boolean { scale: f64 },
    /// Weight-dependent model `φ = ρ(g(p, q) ‖x‖^d)` with
    /// `g(p, q) = min(p,q)^gamma_min · max(p,q)^gamma_max / beta`.
    Weighted {
        profile: Profile,
        beta: f64,
        gamma_min: f64,
        gamma_max: f64,
    },
    /// `φ = ψ(x) K(p, q)`.
    Factorized { spatial: SpatialFactor, kernel: MarkKernel },
    /// Reducible kernel: `φ = within · 1{‖x‖ ≤ radius} · 1{block(p) = block(q)}`
    /// where `block(m) = [m ≥ split]`.
    TwoBlock { radius: f64, split: f64, within: f64 },
    /// `φ = value · 1{inner ≤ ‖x‖ ≤ outer}`; not radially monotone.
    Annulus { value: f64, inner: f64, outer: f64 },
}

/// Radial function `h(r) ≥ sup_{p,q} φ̃(r, p, q)` with finite integral,
/// used to dominate candidate sampling.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Envelope {
    Ball { radius: f64 },
    Gaussian { amplitude: f64, sigma: f64 },
    /// `exp(−rate · r^d)`
    StretchedExp { rate: f64 },
}

impl Envelope {
    #[inline]
    pub fn value(&self, r: f64, d: usize) -> f64 {
        match *self {
            Envelope::Ball { radius } => (r <= radius) as u8 as f64,
            Envelope::Gaussian { amplitude, sigma } => amplitude * (-r * r / (2.0 * sigma * sigma)).exp(),
            Envelope::StretchedExp { rate } => (-rate * r.powi(d as i32)).exp(),
        }
    }

    /// `∫ h(‖x‖) dx`
    pub fn mass(&self, d: usize) -> f64 {
        match *self {
            Envelope::Ball { radius } => ball_volume(d, radius),
            Envelope::Gaussian { amplitude, sigma } => {
                amplitude * (2.0 * std::f64::consts::PI * sigma * sigma).powf(d as f64 / 2.0)
            }
            Envelope::StretchedExp { rate } => unit_ball_volume(d) / rate,
        }
    }

    /// Draw a displacement with density proportional to `h(‖x‖)`.
    pub fn sample_displacement<R: Rng + ?Sized>(&self, rng: &mut R, d: usize, out: &mut [f64]) {
        match *self {
            Envelope::Ball { radius } => {
                random_direction(rng, d, out);
                let r = radius * rng.gen::<f64>().powf(1.0 / d as f64);
                out.iter_mut().take(d).for_each(|v| *v *= r);
            }
            Envelope::Gaussian { sigma, .. } => {
                for v in out.iter_mut().take(d) {
                    let z: f64 = StandardNormal.sample(rng);
                    *v = sigma * z;
                }
            }
            Envelope::StretchedExp { rate } => {
                random_direction(rng, d, out);
                let u: f64 = Exp::new(rate).expect("positive rate").sample(rng);
                let r = u.powf(1.0 / d as f64);
                out.iter_mut().take(d).for_each(|v| *v *= r);
            }
        }
    }

    /// Radius beyond which the envelope carries at most a `tol` fraction of its mass.
    pub fn effective_radius(&self, d: usize, tol: f64) -> f64 {
        match *self {
            Envelope::Ball { radius } => radius,
            Envelope::Gaussian { sigma, .. } => {
                // chi tail: P(|Z| > s) ≤ e^{-s²/2} (s²/2)^{d/2} / Γ(d/2 + 1) for s² > d
                let mut s = (d as f64).sqrt() + 1.0;
                loop {
                    let half = s * s / 2.0;
                    let tail = (-half).exp() * half.powf(d as f64 / 2.0) * 2.0;
                    if tail <= tol {
                        return s * sigma;
                    }
                    s += 0.25;
                }
            }
            Envelope::StretchedExp { rate } => ((1.0 / tol).ln() / rate).powf(1.0 / d as f64),
        }
    }
}

fn check_prob(v: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&v) {
        return Err(RcmError::ProbabilityOutOfRange(v));
    }
    Ok(())
}

fn check_positive(name: &str, v: f64) -> Result<()> {
    if !(v > 0.0) || !v.is_finite() {
        return Err(RcmError::InvalidModel(format!("{name} must be positive and finite, got {v}")));
    }
    Ok(())
}

/// A validated connection function together with its mark law, dimension and
/// precomputed integrals.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConnectionModel {
    kind: ConnectionKind,
    marks: MarkDistribution,
    dimension: usize,
    range: f64,
    d_phi: f64,
}

impl ConnectionModel {
    pub fn new(kind: ConnectionKind, marks: MarkDistribution, dimension: usize) -> Result<Self> {
        if dimension == 0 {
            return Err(RcmError::InvalidModel("dimension must be positive".into()));
        }
        marks.validate()?;
        let (mlo, mhi) = marks.support();
        match &kind {
            ConnectionKind::Constant { value, range } => {
                check_prob(*value)?;
                if !(*range >= 0.0) {
                    return Err(RcmError::InvalidModel(format!("range must be nonnegative, got {range}")));
                }
                if range.is_infinite() && *value > 0.0 {
                    return Err(RcmError::InvalidModel(
                        "constant connection with unbounded range is not integrable".into(),
                    ));
                }
            }
            ConnectionKind::Gilbert => {
                if mlo < 0.0 {
                    return Err(RcmError::InvalidModel("Gilbert radii must be nonnegative".into()));
                }
            }
            ConnectionKind::Boolean { scale } => {
                check_positive("scale", *scale)?;
                if mlo < 0.0 {
                    return Err(RcmError::InvalidModel("grain radii must be nonnegative".into()));
                }
                if dimension > 3 {
                    return Err(RcmError::InvalidModel("Boolean model supports d <= 3".into()));
                }
            }
            ConnectionKind::Weighted { beta, gamma_min, gamma_max, .. } => {
                check_positive("beta", *beta)?;
                if *gamma_min < 0.0 || *gamma_max < 0.0 {
                    return Err(RcmError::InvalidModel("weight exponents must be nonnegative".into()));
                }
                if mlo < 0.0 || mhi > 1.0 {
                    return Err(RcmError::InvalidModel("weighted model marks must lie in [0, 1]".into()));
                }
            }
            ConnectionKind::Factorized { spatial, kernel } => {
                match spatial {
                    SpatialFactor::Ball { radius } => check_positive("radius", *radius)?,
                    SpatialFactor::Gaussian { sigma } => check_positive("sigma", *sigma)?,
                }
                kernel.validate(&marks)?;
            }
            ConnectionKind::TwoBlock { radius, within, split } => {
                check_positive("radius", *radius)?;
                check_prob(*within)?;
                if !split.is_finite() {
                    return Err(RcmError::InvalidModel("split must be finite".into()));
                }
            }
            ConnectionKind::Annulus { value, inner, outer } => {
                check_prob(*value)?;
                if !(*inner >= 0.0) || !(outer > inner) || !outer.is_finite() {
                    return Err(RcmError::InvalidModel(format!("bad annulus [{inner}, {outer}]")));
                }
            }
        }
        let mut model = ConnectionModel {
            kind,
            marks,
            dimension,
            range: 0.0,
            d_phi: 0.0,
        };
        model.range = model.compute_range();
        let nodes = model.marks.quadrature_nodes();
        let mut total = 0.0;
        for (p, wp) in &nodes {
            for (q, wq) in &nodes {
                total += wp * wq * model.pair_integral(*p, *q)?;
            }
        }
        if !total.is_finite() {
            return Err(RcmError::InvalidModel(format!("d_phi is not finite ({total})")));
        }
        model.d_phi = total;
        Ok(model)
    }

    pub fn kind(&self) -> &ConnectionKind {
        &self.kind
    }

    pub fn marks(&self) -> &MarkDistribution {
        &self.marks
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    /// Global range bound `R`: `φ = 0` for `‖x‖ > R` whatever the marks.
    pub fn range_bound(&self) -> f64 {
        self.range
    }

    /// `d_φ`, the `Q⊗Q` average of the pair integral.
    pub fn d_phi(&self) -> f64 {
        self.d_phi
    }

    pub fn catalog_tag(&self) -> &'static str {
        match self.kind {
            ConnectionKind::Constant { .. } => "constant",
            ConnectionKind::Gilbert => "gilbert",
            ConnectionKind::Boolean { .. } => "boolean",
            ConnectionKind::Weighted { .. } => "weighted",
            ConnectionKind::Factorized { .. } => "factorized",
            ConnectionKind::TwoBlock { .. } => "two-block",
            ConnectionKind::Annulus { .. } => "annulus",
        }
    }

    fn weight_g(&self, p: f64, q: f64) -> f64 {
        match self.kind {
            ConnectionKind::Weighted { beta, gamma_min, gamma_max, .. } => {
                let (lo, hi) = if p <= q { (p, q) } else { (q, p) };
                lo.powf(gamma_min) * hi.powf(gamma_max) / beta
            }
            _ => unreachable!(),
        }
    }

    /// `φ̃(r, p, q)`.
    #[inline]
    pub fn phi_radial(&self, r: f64, p: f64, q: f64) -> f64 {
        match &self.kind {
            ConnectionKind::Constant { value, range } => {
                if r <= *range {
                    *value
                } else {
                    0.0
                }
            }
            ConnectionKind::Gilbert => (r <= p + q) as u8 as f64,
            ConnectionKind::Boolean { scale } => {
                if r >= p + q {
                    0.0
                } else {
                    let v = ball_intersection_volume(self.dimension, p, q, r);
                    -(-scale * v).exp_m1()
                }
            }
            ConnectionKind::Weighted { profile, .. } => {
                let g = self.weight_g(p, q);
                profile.value(g * r.powi(self.dimension as i32))
            }
            ConnectionKind::Factorized { spatial, kernel } => spatial.value(r) * kernel.value(p, q),
            ConnectionKind::TwoBlock { radius, split, within } => {
                if r <= *radius && ((p >= *split) == (q >= *split)) {
                    *within
                } else {
                    0.0
                }
            }
            ConnectionKind::Annulus { value, inner, outer } => {
                if r >= *inner && r <= *outer {
                    *value
                } else {
                    0.0
                }
            }
        }
    }

    /// `φ(x, p, q)` for a displacement `x`.
    #[inline]
    pub fn phi(&self, x: &[f64], p: f64, q: f64) -> f64 {
        self.phi_radial(norm(x), p, q)
    }

    /// Smallest `r` with `φ̃(s, p, q) = 0` for all `s > r` (may be infinite).
    pub fn pair_range(&self, p: f64, q: f64) -> f64 {
        match &self.kind {
            ConnectionKind::Constant { value, range } => {
                if *value > 0.0 {
                    *range
                } else {
                    0.0
                }
            }
            ConnectionKind::Gilbert | ConnectionKind::Boolean { .. } => p + q,
            ConnectionKind::Weighted { profile, .. } => match profile {
                Profile::Indicator => {
                    let g = self.weight_g(p, q);
                    if g > 0.0 {
                        (1.0 / g).powf(1.0 / self.dimension as f64)
                    } else {
                        f64::INFINITY
                    }
                }
                Profile::Exponential => f64::INFINITY,
            },
            ConnectionKind::Factorized { spatial, kernel } => {
                if kernel.value(p, q) == 0.0 {
                    0.0
                } else {
                    match spatial {
                        SpatialFactor::Ball { radius } => *radius,
                        SpatialFactor::Gaussian { .. } => f64::INFINITY,
                    }
                }
            }
            ConnectionKind::TwoBlock { radius, split, within } => {
                if *within > 0.0 && ((p >= *split) == (q >= *split)) {
                    *radius
                } else {
                    0.0
                }
            }
            ConnectionKind::Annulus { value, outer, .. } => {
                if *value > 0.0 {
                    *outer
                } else {
                    0.0
                }
            }
        }
    }

    fn compute_range(&self) -> f64 {
        let (lo, hi) = self.marks.support();
        match &self.kind {
            ConnectionKind::Gilbert | ConnectionKind::Boolean { .. } => 2.0 * hi,
            ConnectionKind::Weighted { .. } => self.pair_range(lo, lo),
            ConnectionKind::Factorized { spatial, kernel } => {
                if kernel.sup() == 0.0 {
                    0.0
                } else {
                    match spatial {
                        SpatialFactor::Ball { radius } => *radius,
                        SpatialFactor::Gaussian { .. } => f64::INFINITY,
                    }
                }
            }
            _ => self.pair_range(lo, lo).max(self.pair_range(hi, hi)).max(self.pair_range(lo, hi)),
        }
    }

    /// Dominating radial envelope. Finite-range models use the ball of the
    /// range bound; unbounded models must supply one.
    pub fn envelope(&self) -> Result<Envelope> {
        if self.range.is_finite() {
            return Ok(Envelope::Ball { radius: self.range });
        }
        match &self.kind {
            ConnectionKind::Factorized { spatial: SpatialFactor::Gaussian { sigma }, kernel } => {
                Ok(Envelope::Gaussian { amplitude: kernel.sup(), sigma: *sigma })
            }
            ConnectionKind::Weighted { profile: Profile::Exponential, .. } => {
                let (lo, _) = self.marks.support();
                let g = self.weight_g(lo, lo);
                if g > 0.0 {
                    Ok(Envelope::StretchedExp { rate: g })
                } else {
                    Err(RcmError::MissingEnvelope)
                }
            }
            _ => Err(RcmError::MissingEnvelope),
        }
    }

    /// Radius outside of which `φ` is zero or negligible (`tol` mass fraction).
    pub fn interaction_radius(&self, tol: f64) -> Result<f64> {
        if self.range.is_finite() {
            Ok(self.range)
        } else {
            Ok(self.envelope()?.effective_radius(self.dimension, tol))
        }
    }

    /// Whether `φ̃` is nonincreasing in the distance for every mark pair.
    pub fn is_radially_monotone(&self) -> bool {
        !matches!(self.kind, ConnectionKind::Annulus { inner, .. } if inner > 0.0)
    }

    /// `φ̃⁻¹(s, p, q) = inf{r ≥ 0 : φ̃(r, p, q) ≤ s}`.
    pub fn radial_inverse(&self, s: f64, p: f64, q: f64) -> Result<f64> {
        if !self.is_radially_monotone() {
            return Err(RcmError::NotRadialMonotone(self.catalog_tag().into()));
        }
        if self.phi_radial(0.0, p, q) <= s {
            return Ok(0.0);
        }
        match &self.kind {
            ConnectionKind::Constant { .. }
            | ConnectionKind::Gilbert
            | ConnectionKind::TwoBlock { .. }
            | ConnectionKind::Annulus { .. } => Ok(self.pair_range(p, q)),
            ConnectionKind::Weighted { profile, .. } => {
                let g = self.weight_g(p, q);
                let d = self.dimension as f64;
                Ok(match profile {
                    Profile::Indicator => (1.0 / g).powf(1.0 / d),
                    Profile::Exponential => (-s.ln() / g).powf(1.0 / d),
                })
            }
            ConnectionKind::Factorized { spatial, kernel } => {
                let k = kernel.value(p, q);
                Ok(match spatial {
                    SpatialFactor::Ball { radius } => *radius,
                    SpatialFactor::Gaussian { sigma } => sigma * (2.0 * (k / s).ln()).sqrt(),
                })
            }
            ConnectionKind::Boolean { .. } => {
                // continuous and strictly decreasing on [0, p + q]
                let (mut lo, mut hi) = (0.0, p + q);
                for _ in 0..200 {
                    let mid = 0.5 * (lo + hi);
                    if self.phi_radial(mid, p, q) <= s {
                        hi = mid;
                    } else {
                        lo = mid;
                    }
                    if hi - lo <= 1e-15 * (p + q) {
                        break;
                    }
                }
                Ok(hi)
            }
        }
    }

    /// `d_φ(p, q) = ∫ φ(x, p, q) dx`.
    pub fn pair_integral(&self, p: f64, q: f64) -> Result<f64> {
        let d = self.dimension;
        Ok(match &self.kind {
            ConnectionKind::Constant { value, range } => {
                if *value == 0.0 {
                    0.0
                } else {
                    value * ball_volume(d, *range)
                }
            }
            ConnectionKind::Gilbert => ball_volume(d, p + q),
            ConnectionKind::Weighted { .. } => {
                // m_ρ = v_d for both profiles
                let g = self.weight_g(p, q);
                if g > 0.0 {
                    unit_ball_volume(d) / g
                } else {
                    f64::INFINITY
                }
            }
            ConnectionKind::Factorized { spatial, kernel } => {
                let k = kernel.value(p, q);
                if k == 0.0 {
                    0.0
                } else {
                    spatial.mass(d) * k
                }
            }
            ConnectionKind::TwoBlock { radius, split, within } => {
                if (p >= *split) == (q >= *split) {
                    within * ball_volume(d, *radius)
                } else {
                    0.0
                }
            }
            ConnectionKind::Annulus { value, inner, outer } => {
                value * (ball_volume(d, *outer) - ball_volume(d, *inner))
            }
            ConnectionKind::Boolean { .. } => {
                let reach = p + q;
                if reach <= 0.0 {
                    0.0
                } else {
                    let area = unit_sphere_area(d);
                    // φ̃ is constant (full containment) on [0, |p − q|]
                    let kink = (p - q).abs();
                    let inner = self.phi_radial(0.0, p, q) * ball_volume(d, kink);
                    let outer = adaptive_integrate(
                        |r| area * r.powi(d as i32 - 1) * self.phi_radial(r, p, q),
                        kink,
                        reach,
                        PAIR_INTEGRAL_TOL * 1e-2,
                    )?;
                    inner + outer
                }
            }
        })
    }

    /// `D_φ(p) = ∫ d_φ(p, q) Q(dq)`, the expected degree of mark `p` per unit intensity.
    pub fn degree_integral(&self, p: f64) -> Result<f64> {
        let mut total = 0.0;
        for (q, w) in self.marks.quadrature_nodes() {
            total += w * self.pair_integral(p, q)?;
        }
        Ok(total)
    }

    /// `d_φ` recomputed for an arbitrary mark law (the model's own law gives [`Self::d_phi`]).
    pub fn d_phi_for(&self, marks: &MarkDistribution) -> Result<f64> {
        let nodes = marks.quadrature_nodes();
        let mut total = 0.0;
        for (p, wp) in &nodes {
            for (q, wq) in &nodes {
                total += wp * wq * self.pair_integral(*p, *q)?;
            }
        }
        Ok(total)
    }
}

/// Convenience: Gilbert model with deterministic radius in dimension `d`.
pub fn gilbert(d: usize, radius: f64) -> ConnectionModel {
    ConnectionModel::new(ConnectionKind::Gilbert, MarkDistribution::point(radius), d)
        .expect("valid Gilbert model")
}

/// Convenience: `φ ≡ value` within `range`, unmarked.
pub fn constant(d: usize, value: f64, range: f64) -> ConnectionModel {
    ConnectionModel::new(ConnectionKind::Constant { value, range }, MarkDistribution::point(0.0), d)
        .expect("valid constant model")
}
