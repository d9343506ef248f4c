//! Nearest feasible antenna position.
//!
//! An antenna may sit anywhere in the square `[-h, h]²` at least `D_min` away
//! from the other antennas on its side. Given an unconstrained target (the
//! surrogate's stationary point), [`nearest_feasible_point`] returns the
//! closest point of that set.
//!
//! When the target is infeasible the optimum lies on the boundary of the
//! feasible set, so it is one of finitely many candidates: the square
//! projection, the radial projection onto an obstacle circle (SCI), an
//! intersection of two circles (CCI), an intersection of a circle with a
//! square edge, an edge projection or a corner. The exact mode enumerates
//! those for a growing set of active obstacles; the simplified mode only
//! looks at obstacles violated in the latest round.

use std::cmp::Ordering;
use std::f64::consts::PI;

use crate::channel::Point;
use crate::error::{Error, Result};
use crate::rng::splitmix64;

/// Relative slack on both constraint families.
pub const SLACK: f64 = 1e-9;

/// Square region plus forbidden discs around already-placed antennas.
#[derive(Debug, Clone, PartialEq)]
pub struct FeasibleRegionSpec {
    pub half_width: f64,
    pub obstacles: Vec<Point>,
    pub radius: f64,
    /// Seeds the direction used when the target coincides with an obstacle centre.
    pub seed: u64,
}

impl FeasibleRegionSpec {
    pub fn new(half_width: f64, obstacles: Vec<Point>, radius: f64) -> Self {
        Self {
            half_width,
            obstacles,
            radius,
            seed: 0,
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn in_square(&self, p: &Point) -> bool {
        let edge = self.half_width * (1.0 + SLACK);
        p.x.abs() <= edge && p.y.abs() <= edge
    }

    pub fn clear_of(&self, p: &Point, obstacle: &Point) -> bool {
        (p - obstacle).norm() >= self.radius * (1.0 - SLACK)
    }

    pub fn is_feasible(&self, p: &Point) -> bool {
        self.in_square(p) && self.obstacles.iter().all(|o| self.clear_of(p, o))
    }

    fn validate(&self) -> Result<()> {
        if !(self.half_width > 0.0 && self.radius > 0.0) {
            return Err(Error::Domain(format!(
                "region half width {} and radius {} must be positive",
                self.half_width, self.radius
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GeometryOutcome {
    pub point: Point,
    /// Candidate/recentre rounds performed.
    pub rounds: usize,
    /// Set when the candidate search came up empty and a sampled point was used.
    pub used_fallback: bool,
}

pub fn clamp_to_square(p: &Point, half_width: f64) -> Point {
    Point::new(p.x.clamp(-half_width, half_width), p.y.clamp(-half_width, half_width))
}

/// Point of the circle around `center` on the ray towards `target`.
/// Returns `None` when the two coincide.
pub fn line_circle_intersection_sci(center: &Point, target: &Point, radius: f64) -> Option<Point> {
    let d = target - center;
    let n = d.norm();
    if n == 0.0 {
        return None;
    }
    Some(center + d * (radius / n))
}

/// Intersections of two circles of equal radius. Empty when the centres are
/// more than `2·radius` apart or coincide; one point when tangent.
pub fn circle_circle_intersection_cci(a: &Point, b: &Point, radius: f64) -> Vec<Point> {
    let d = b - a;
    let dist = d.norm();
    if dist == 0.0 || dist > 2.0 * radius {
        return vec![];
    }
    let mid = a + d * 0.5;
    let h_sq = radius * radius - 0.25 * dist * dist;
    if h_sq <= 0.0 {
        return vec![mid];
    }
    let h = h_sq.sqrt();
    let perp = Point::new(-d.y, d.x) * (h / dist);
    vec![mid + perp, mid - perp]
}

/// Intersections of a circle with the four lines `x = ±h`, `y = ±h`, kept
/// when they fall on the square boundary.
fn circle_edge_points(center: &Point, radius: f64, h: f64, out: &mut Vec<Point>) {
    for edge in [-h, h] {
        let dx = edge - center.x;
        let rem = radius * radius - dx * dx;
        if rem >= 0.0 {
            let s = rem.sqrt();
            for y in [center.y - s, center.y + s] {
                if y.abs() <= h {
                    out.push(Point::new(edge, y));
                }
            }
        }
        let dy = edge - center.y;
        let rem = radius * radius - dy * dy;
        if rem >= 0.0 {
            let s = rem.sqrt();
            for x in [center.x - s, center.x + s] {
                if x.abs() <= h {
                    out.push(Point::new(x, edge));
                }
            }
        }
    }
}

fn square_candidates(sp: &Point, h: f64, out: &mut Vec<Point>) {
    let c = clamp_to_square(sp, h);
    out.push(c);
    out.push(Point::new(-h, c.y));
    out.push(Point::new(h, c.y));
    out.push(Point::new(c.x, -h));
    out.push(Point::new(c.x, h));
    for x in [-h, h] {
        for y in [-h, h] {
            out.push(Point::new(x, y));
        }
    }
}

fn degenerate_direction(seed: u64, index: usize) -> Point {
    let bits = splitmix64(seed ^ (index as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    let angle = (bits >> 11) as f64 / (1u64 << 53) as f64 * 2.0 * PI;
    Point::new(angle.cos(), angle.sin())
}

fn sci_candidate(spec: &FeasibleRegionSpec, sp: &Point, index: usize) -> Point {
    let center = spec.obstacles[index];
    line_circle_intersection_sci(&center, sp, spec.radius)
        .unwrap_or_else(|| center + degenerate_direction(spec.seed, index) * spec.radius)
}

fn closer(sp: &Point) -> impl Fn(&Point, &Point) -> Ordering + '_ {
    move |a, b| {
        (a - sp)
            .norm_squared()
            .total_cmp(&(b - sp).norm_squared())
            .then(a.x.total_cmp(&b.x))
            .then(a.y.total_cmp(&b.y))
    }
}

/// Nearest candidate that lies in the square and clear of every obstacle in `active`.
fn best_candidate(spec: &FeasibleRegionSpec, sp: &Point, candidates: &[Point], active: &[usize]) -> Option<Point> {
    candidates
        .iter()
        .filter(|p| spec.in_square(p) && active.iter().all(|&i| spec.clear_of(p, &spec.obstacles[i])))
        .min_by(|a, b| closer(sp)(a, b))
        .map(|p| clamp_to_square(p, spec.half_width))
}

fn violated(spec: &FeasibleRegionSpec, p: &Point, skip: &[usize]) -> Vec<usize> {
    (0..spec.obstacles.len())
        .filter(|i| !skip.contains(i) && !spec.clear_of(p, &spec.obstacles[*i]))
        .collect()
}

/// Nearest point to `sp` in the square minus the discs in `active`.
fn relaxed_nearest(spec: &FeasibleRegionSpec, sp: &Point, active: &[usize]) -> Option<Point> {
    let h = spec.half_width;
    let mut cands = Vec::with_capacity(9 + 7 * active.len() + active.len() * active.len());
    square_candidates(sp, h, &mut cands);
    for (a, &i) in active.iter().enumerate() {
        cands.push(sci_candidate(spec, sp, i));
        circle_edge_points(&spec.obstacles[i], spec.radius, h, &mut cands);
        for &j in &active[a + 1..] {
            cands.extend(circle_circle_intersection_cci(&spec.obstacles[i], &spec.obstacles[j], spec.radius));
        }
    }
    best_candidate(spec, sp, &cands, active)
}

/// Deterministic sampled fallback: points on rings around `sp` and on a grid
/// over the square, nearest feasible one wins.
pub fn fallback_ring_sample(spec: &FeasibleRegionSpec, sp: &Point) -> Option<Point> {
    let h = spec.half_width;
    let mut cands = Vec::new();
    let reach = (clamp_to_square(sp, h) - sp).norm() + 2.0 * std::f64::consts::SQRT_2 * h;
    let rings = 64;
    let spokes = 256;
    for r in 1..=rings {
        let rad = reach * r as f64 / rings as f64;
        for s in 0..spokes {
            let a = 2.0 * PI * s as f64 / spokes as f64;
            cands.push(clamp_to_square(&(sp + Point::new(a.cos(), a.sin()) * rad), h));
        }
    }
    let grid = 64;
    for i in 0..=grid {
        for j in 0..=grid {
            let x = -h + 2.0 * h * i as f64 / grid as f64;
            let y = -h + 2.0 * h * j as f64 / grid as f64;
            cands.push(Point::new(x, y));
        }
    }
    let all: Vec<usize> = (0..spec.obstacles.len()).collect();
    best_candidate(spec, sp, &cands, &all)
}

/// Closest feasible point to `sp`.
///
/// Exact mode grows an active set of obstacles: the nearest point to `sp`
/// avoiding only the active discs is computed by candidate enumeration, any
/// obstacle it violates joins the set, and the search repeats. The relaxed
/// problem's optimum is a lower bound, so once it is feasible it is optimal.
///
/// Simplified mode generates candidates only from the obstacles newly
/// violated in the current round (filtered against all obstacles seen so
/// far), which shrinks the candidate set at a small loss of optimality. If a
/// simplified round finds no candidate the exact search takes over.
pub fn nearest_feasible_point(sp: &Point, spec: &FeasibleRegionSpec, simplified: bool) -> Result<GeometryOutcome> {
    spec.validate()?;
    if !(sp.x.is_finite() && sp.y.is_finite()) {
        return Err(Error::Domain(format!("target ({}, {}) is not finite", sp.x, sp.y)));
    }
    let cap = 4 * spec.obstacles.len().max(1);
    let h = spec.half_width;
    let mut center = clamp_to_square(sp, h);
    let mut active: Vec<usize> = Vec::new();
    let mut rounds = 0;
    loop {
        let fresh = violated(spec, &center, &active);
        if fresh.is_empty() {
            return Ok(GeometryOutcome {
                point: center,
                rounds,
                used_fallback: false,
            });
        }
        rounds += 1;
        if rounds > cap {
            break;
        }
        active.extend(&fresh);
        let next = if simplified {
            let mut cands = Vec::new();
            square_candidates(sp, h, &mut cands);
            for (a, &i) in fresh.iter().enumerate() {
                cands.push(sci_candidate(spec, sp, i));
                circle_edge_points(&spec.obstacles[i], spec.radius, h, &mut cands);
                for &j in &fresh[a + 1..] {
                    cands.extend(circle_circle_intersection_cci(&spec.obstacles[i], &spec.obstacles[j], spec.radius));
                }
            }
            best_candidate(spec, sp, &cands, &active).map(Ok).unwrap_or_else(|| {
                nearest_feasible_point(sp, spec, false).map(|o| o.point)
            })?
        } else {
            match relaxed_nearest(spec, sp, &active) {
                Some(p) => p,
                None => break,
            }
        };
        center = next;
    }
    fallback_ring_sample(spec, sp)
        .map(|point| GeometryOutcome {
            point,
            rounds,
            used_fallback: true,
        })
        .ok_or_else(|| Error::Infeasible(format!("no feasible point near ({}, {})", sp.x, sp.y)))
}

/// Brute-force reference: nearest feasible point over a uniform grid of the
/// square with the given step.
pub fn grid_nearest(sp: &Point, spec: &FeasibleRegionSpec, step: f64) -> Option<Point> {
    let h = spec.half_width;
    let n = (2.0 * h / step).round() as i64;
    let mut best: Option<(f64, Point)> = None;
    for i in 0..=n {
        let x = -h + 2.0 * h * i as f64 / n as f64;
        for j in 0..=n {
            let y = -h + 2.0 * h * j as f64 / n as f64;
            let p = Point::new(x, y);
            if spec.obstacles.iter().all(|o| (p - o).norm() >= spec.radius) {
                let d = (p - sp).norm_squared();
                if best.is_none_or(|(bd, _)| d < bd) {
                    best = Some((d, p));
                }
            }
        }
    }
    best.map(|(_, p)| p)
}
