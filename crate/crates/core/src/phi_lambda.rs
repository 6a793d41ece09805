//! `φ_λ(C) = ∫∫ (1 − ∏_{y∈C} (1 − φ(x − y, p_y, q))) dx Q(dq)`, the expected
//! number of unit-intensity Poisson points that would attach to a cluster.
//!
//! The integrand is split by telescoping,
//! `1 − ∏_i (1 − a_i) = Σ_i a_i ∏_{j<i} (1 − a_j)`, so the `i`-th term lives
//! on the ball of radius `ρ_i(q)` around member `i` and is integrated in polar
//! coordinates centred there. In one and two dimensions every radial and
//! angular discontinuity of the integrand (sphere crossings, tangencies and
//! sphere intersections) is located exactly and Gauss–Legendre is applied
//! piecewise. In three or more dimensions the integral is estimated by Monte
//! Carlo over the union of balls, with a standard error.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{RcmError, Result};
use crate::geometry::{ball_volume, norm_sq, random_direction};
use crate::model::ConnectionModel;
use crate::quadrature::{gauss_legendre, integrate_rule};

const UNBOUNDED_PANELS: usize = 8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct QuadratureSpec {
    /// Gauss–Legendre order per angular piece (two dimensions).
    pub angular_order: usize,
    /// Gauss–Legendre order per radial piece.
    pub radial_order: usize,
    /// Mass fraction neglected when truncating unbounded-range models.
    pub tail_tol: f64,
    /// Monte Carlo draws per cluster member for `d ≥ 3`.
    pub mc_samples_per_vertex: usize,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        Self {
            angular_order: 16,
            radial_order: 8,
            tail_tol: 1e-12,
            mc_samples_per_vertex: 4096,
        }
    }
}

/// Value of `φ_λ(C)`; `stderr` is zero for deterministic quadrature.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhiLambda {
    pub value: f64,
    pub stderr: f64,
}

/// Borrowed cluster geometry: flat `d`-dimensional locations plus marks.
#[derive(Debug, Clone, Copy)]
pub struct Members<'a> {
    pub dimension: usize,
    pub locations: &'a [f64],
    pub marks: &'a [f64],
}

impl Members<'_> {
    fn len(&self) -> usize {
        self.marks.len()
    }

    fn loc(&self, i: usize) -> &[f64] {
        &self.locations[i * self.dimension..(i + 1) * self.dimension]
    }
}

struct Rules {
    angular: (Vec<f64>, Vec<f64>),
    radial: (Vec<f64>, Vec<f64>),
}

/// Compute `φ_λ` for a finite cluster. `rng` is only used when `d ≥ 3`.
pub fn phi_lambda<R: Rng + ?Sized>(
    members: Members<'_>,
    model: &ConnectionModel,
    spec: &QuadratureSpec,
    rng: &mut R,
) -> Result<PhiLambda> {
    if members.len() == 0 {
        return Ok(PhiLambda { value: 0.0, stderr: 0.0 });
    }
    if members.dimension != model.dimension() {
        return Err(RcmError::InvalidArgument("cluster and model dimensions differ".into()));
    }
    if spec.angular_order == 0 || spec.radial_order == 0 {
        return Err(RcmError::InvalidArgument("quadrature orders must be positive".into()));
    }
    // truncation radius for unbounded models
    let cutoff = model.interaction_radius(spec.tail_tol)?;
    let nodes = model.marks().quadrature_nodes();
    match members.dimension {
        1 | 2 => {
            // piecewise-constant profiles make the radial integrand linear
            // between breakpoints, where the midpoint rule is exact
            let radial_order = if piecewise_constant(model) { 1 } else { spec.radial_order };
            let rules = Rules {
                angular: gauss_legendre(spec.angular_order),
                radial: gauss_legendre(radial_order),
            };
            let mut total = 0.0;
            for (q, wq) in &nodes {
                let radii: Vec<f64> = members
                    .marks
                    .iter()
                    .map(|&p| model.pair_range(p, *q).min(cutoff))
                    .collect();
                for i in 0..members.len() {
                    let term = if members.dimension == 1 {
                        term_1d(members, model, *q, &radii, i, &rules)
                    } else {
                        term_2d(members, model, *q, &radii, i, &rules)
                    };
                    total += wq * term;
                }
            }
            if !total.is_finite() {
                return Err(RcmError::QuadratureDiverged(format!("phi_lambda = {total}")));
            }
            Ok(PhiLambda { value: total, stderr: 0.0 })
        }
        _ => monte_carlo(members, model, &nodes, cutoff, spec, rng),
    }
}

fn piecewise_constant(model: &ConnectionModel) -> bool {
    use crate::model::{ConnectionKind, Profile, SpatialFactor};
    match model.kind() {
        ConnectionKind::Constant { .. }
        | ConnectionKind::Gilbert
        | ConnectionKind::TwoBlock { .. }
        | ConnectionKind::Annulus { .. } => true,
        ConnectionKind::Factorized { spatial, .. } => matches!(spatial, SpatialFactor::Ball { .. }),
        ConnectionKind::Weighted { profile, .. } => matches!(profile, Profile::Indicator),
        ConnectionKind::Boolean { .. } => false,
    }
}

/// `∏_{j<i} (1 − φ(x − y_j))` for members `j` in `earlier`.
#[inline]
fn survival(members: Members<'_>, model: &ConnectionModel, q: f64, x: &[f64], earlier: &[usize]) -> f64 {
    let mut prod = 1.0;
    for &j in earlier {
        let y = members.loc(j);
        let r2: f64 = x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum();
        prod *= 1.0 - model.phi_radial(r2.sqrt(), members.marks[j], q);
        if prod == 0.0 {
            break;
        }
    }
    prod
}

/// Earlier members whose support can meet the ball around member `i`.
fn earlier_overlapping(members: Members<'_>, radii: &[f64], i: usize) -> Vec<usize> {
    let yi = members.loc(i);
    (0..i)
        .filter(|&j| {
            let d2: f64 = members.loc(j).iter().zip(yi).map(|(a, b)| (a - b) * (a - b)).sum();
            let reach = radii[i] + radii[j];
            radii[j] > 0.0 && d2 < reach * reach
        })
        .collect()
}

fn term_1d(members: Members<'_>, model: &ConnectionModel, q: f64, radii: &[f64], i: usize, rules: &Rules) -> f64 {
    let rho = radii[i];
    if rho <= 0.0 {
        return 0.0;
    }
    let yi = members.loc(i)[0];
    let p = members.marks[i];
    let earlier = earlier_overlapping(members, radii, i);
    let mut total = 0.0;
    for dir in [-1.0, 1.0] {
        let mut breaks = vec![0.0, rho];
        kink_radii(model, p, q, rho, &mut breaks);
        if !model.range_bound().is_finite() {
            breaks.extend((1..UNBOUNDED_PANELS).map(|k| rho * k as f64 / UNBOUNDED_PANELS as f64));
        }
        for &j in &earlier {
            let c = (members.loc(j)[0] - yi) * dir;
            let mut rs = vec![radii[j]];
            kink_radii(model, members.marks[j], q, radii[j], &mut rs);
            for rj in rs {
                for b in [c - rj, c + rj] {
                    if b > 0.0 && b < rho {
                        breaks.push(b);
                    }
                }
            }
        }
        breaks.sort_by(f64::total_cmp);
        breaks.dedup();
        for w in breaks.windows(2) {
            total += integrate_rule(&rules.radial, w[0], w[1], |r| {
                let x = [yi + dir * r];
                model.phi_radial(r, p, q) * survival(members, model, q, &x, &earlier)
            });
        }
    }
    total
}

/// Radii where the ray `y_i + r·u` crosses the circle of radius `rho_j` about `c`
/// (`c` relative to `y_i`).
fn ray_circle_crossings(u: [f64; 2], c: [f64; 2], rho_j: f64, out: &mut Vec<f64>) {
    let b = u[0] * c[0] + u[1] * c[1];
    let cc = c[0] * c[0] + c[1] * c[1] - rho_j * rho_j;
    let disc = b * b - cc;
    if disc > 0.0 {
        let s = disc.sqrt();
        out.push(b - s);
        out.push(b + s);
    }
}

fn wrap_angle(a: f64) -> f64 {
    a.rem_euclid(std::f64::consts::TAU)
}

fn term_2d(members: Members<'_>, model: &ConnectionModel, q: f64, radii: &[f64], i: usize, rules: &Rules) -> f64 {
    use std::f64::consts::TAU;
    let rho = radii[i];
    if rho <= 0.0 {
        return 0.0;
    }
    let yi = [members.loc(i)[0], members.loc(i)[1]];
    let p = members.marks[i];
    let earlier = earlier_overlapping(members, radii, i);
    if earlier.is_empty() {
        return model.pair_integral(p, q).unwrap_or(f64::NAN);
    }
    // every earlier member contributes circles where the integrand jumps or kinks
    let mut circles: Vec<([f64; 2], f64)> = Vec::new();
    for &j in &earlier {
        let y = members.loc(j);
        let c = [y[0] - yi[0], y[1] - yi[1]];
        let mut rs = vec![radii[j]];
        kink_radii(model, members.marks[j], q, radii[j], &mut rs);
        circles.extend(rs.into_iter().map(|r| (c, r)));
    }
    let mut angles = vec![0.0, TAU];
    for &(c, rj) in &circles {
        let dist = (c[0] * c[0] + c[1] * c[1]).sqrt();
        if dist <= 0.0 {
            continue;
        }
        let beta = c[1].atan2(c[0]);
        if dist > rj {
            let h = (rj / dist).asin();
            angles.push(wrap_angle(beta + h));
            angles.push(wrap_angle(beta - h));
        }
        let cosg = (dist * dist + rho * rho - rj * rj) / (2.0 * dist * rho);
        if cosg.abs() < 1.0 {
            let g = cosg.acos();
            angles.push(wrap_angle(beta + g));
            angles.push(wrap_angle(beta - g));
        }
    }
    angles.sort_by(f64::total_cmp);
    angles.dedup_by(|a, b| (*a - *b).abs() < 1e-14);
    let mut kinks = vec![0.0, rho];
    kink_radii(model, p, q, rho, &mut kinks);
    if !model.range_bound().is_finite() {
        // smooth tails: fixed sub-panels keep the radial rule accurate
        kinks.extend((1..UNBOUNDED_PANELS).map(|k| rho * k as f64 / UNBOUNDED_PANELS as f64));
    }
    let mut breaks = Vec::new();
    let mut x = [0.0; 2];
    let mut total = 0.0;
    for w in angles.windows(2) {
        if w[1] - w[0] <= 0.0 {
            continue;
        }
        total += integrate_rule(&rules.angular, w[0], w[1], |theta| {
            let u = [theta.cos(), theta.sin()];
            breaks.clear();
            breaks.extend_from_slice(&kinks);
            for &(c, rj) in &circles {
                ray_circle_crossings(u, c, rj, &mut breaks);
            }
            breaks.retain(|r| *r >= 0.0 && *r <= rho);
            breaks.sort_by(f64::total_cmp);
            breaks.dedup();
            let mut radial = 0.0;
            for seg in breaks.windows(2) {
                if seg[1] - seg[0] <= 0.0 {
                    continue;
                }
                radial += integrate_rule(&rules.radial, seg[0], seg[1], |r| {
                    x[0] = yi[0] + r * u[0];
                    x[1] = yi[1] + r * u[1];
                    model.phi_radial(r, p, q) * survival(members, model, q, &x, &earlier) * r
                });
            }
            radial
        });
    }
    total
}

/// Interior radii where `φ̃(·, p, q)` has a kink or jump (within `(0, rho)`).
fn kink_radii(model: &ConnectionModel, p: f64, q: f64, rho: f64, out: &mut Vec<f64>) {
    use crate::model::ConnectionKind;
    match model.kind() {
        ConnectionKind::Boolean { .. } => {
            let k = (p - q).abs();
            if k > 0.0 && k < rho {
                out.push(k);
            }
        }
        ConnectionKind::Annulus { inner, .. } => {
            if *inner > 0.0 && *inner < rho {
                out.push(*inner);
            }
        }
        _ => {}
    }
}

fn monte_carlo<R: Rng + ?Sized>(
    members: Members<'_>,
    model: &ConnectionModel,
    nodes: &[(f64, f64)],
    cutoff: f64,
    spec: &QuadratureSpec,
    rng: &mut R,
) -> Result<PhiLambda> {
    let d = members.dimension;
    let n = members.len();
    let mut value = 0.0;
    let mut var = 0.0;
    let mut x = vec![0.0; d];
    let mut dir = vec![0.0; d];
    let all: Vec<usize> = (0..n).collect();
    for (q, wq) in nodes {
        let radii: Vec<f64> = members
            .marks
            .iter()
            .map(|&p| model.pair_range(p, *q).min(cutoff))
            .collect();
        let vols: Vec<f64> = radii.iter().map(|&r| ball_volume(d, r)).collect();
        let total_vol: f64 = vols.iter().sum();
        if total_vol == 0.0 {
            continue;
        }
        let m = spec.mc_samples_per_vertex.max(1) * n;
        let mut s = 0.0;
        let mut s2 = 0.0;
        for _ in 0..m {
            // ball chosen proportional to volume, point uniform inside
            let mut u = rng.gen::<f64>() * total_vol;
            let mut k = 0;
            while k + 1 < n && u >= vols[k] {
                u -= vols[k];
                k += 1;
            }
            random_direction(rng, d, &mut dir);
            let r = radii[k] * rng.gen::<f64>().powf(1.0 / d as f64);
            let yk = members.loc(k);
            for a in 0..d {
                x[a] = yk[a] + r * dir[a];
            }
            let cover = (0..n)
                .filter(|&j| {
                    let yj = members.loc(j);
                    let mut diff = vec![0.0; d];
                    for a in 0..d {
                        diff[a] = x[a] - yj[a];
                    }
                    norm_sq(&diff) <= radii[j] * radii[j]
                })
                .count()
                .max(1);
            let f = (1.0 - survival(members, model, *q, &x, &all)) * total_vol / cover as f64;
            s += f;
            s2 += f * f;
        }
        let mean = s / m as f64;
        let v = (s2 / m as f64 - mean * mean).max(0.0) / m as f64;
        value += wq * mean;
        var += wq * wq * v;
    }
    Ok(PhiLambda { value, stderr: var.sqrt() })
}
