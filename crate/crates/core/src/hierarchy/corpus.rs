//! Random lattice-path corpora for exercising the extraction procedures.
//!
//! Paths are drawn in a frame where the chord runs roughly along the
//! positive x-axis, then mapped by a random lattice symmetry and shift.
//! Every generator retries until the path is simple and lies in the
//! requested scale class (and verdict, where one is asked for).

use rand::Rng;

use super::classes::{in_scale_class, tame_verdict, HierarchyParams};
use super::path::{LatticePath, Point};
use crate::lattice::Vertex;

const MAX_ATTEMPTS: usize = 100_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Family {
    /// Monotone staircases through random waypoints.
    Waypoints,
    /// A rectangular excursion away from the chord.
    Detour,
    /// Column sweeps filling a slab, then straight to the end.
    Boustrophedon,
}

fn step_towards(vs: &mut Vec<Vertex>, horizontal: bool, to: Vertex) {
    let c = *vs.last().unwrap();
    let next = if horizontal {
        Vertex::new(c.x + (to.x - c.x).signum(), c.y)
    } else {
        Vertex::new(c.x, c.y + (to.y - c.y).signum())
    };
    vs.push(next);
}

/// Axis moves to `to`, horizontal run first.
fn l_move(vs: &mut Vec<Vertex>, to: Vertex) {
    while vs.last().unwrap().x != to.x {
        step_towards(vs, true, to);
    }
    while vs.last().unwrap().y != to.y {
        step_towards(vs, false, to);
    }
}

/// Monotone staircase to `to`. With at least two columns to cover, the
/// first and last steps are horizontal so consecutive staircases only share
/// their waypoint.
fn staircase<R: Rng + ?Sized>(vs: &mut Vec<Vertex>, to: Vertex, jitter: f64, rng: &mut R) {
    let from = *vs.last().unwrap();
    let wide = (to.x - from.x).abs() >= 2;
    if wide {
        step_towards(vs, true, to);
    }
    let stop = if wide {
        Vertex::new(to.x - (to.x - from.x).signum(), to.y)
    } else {
        to
    };
    loop {
        let c = *vs.last().unwrap();
        let (ax, ay) = ((stop.x - c.x).abs() as f64, (stop.y - c.y).abs() as f64);
        if ax + ay == 0.0 {
            break;
        }
        let p = (ax / (ax + ay) + jitter * (rng.random::<f64>() - 0.5)).clamp(0.0, 1.0);
        let horizontal = if ax == 0.0 {
            false
        } else if ay == 0.0 {
            true
        } else {
            rng.random::<f64>() < p
        };
        step_towards(vs, horizontal, stop);
    }
    if wide {
        l_move(vs, to);
    }
}

fn symmetry(v: Vertex, s: u8) -> Vertex {
    let (x, y) = (v.x, v.y);
    let (x, y) = match s % 4 {
        0 => (x, y),
        1 => (-y, x),
        2 => (-x, -y),
        _ => (y, -x),
    };
    if s >= 4 {
        Vertex::new(x, -y)
    } else {
        Vertex::new(x, y)
    }
}

/// Maps the canonical vertex list to a path, optionally moving the
/// endpoints part-way along an outward edge.
fn finish<R: Rng + ?Sized>(vs: Vec<Vertex>, fractional: bool, rng: &mut R) -> Option<LatticePath> {
    if vs.len() < 2 {
        return None;
    }
    let s: u8 = rng.random_range(0..8);
    let shift = Vertex::new(rng.random_range(-500..=500), rng.random_range(-500..=500));
    let mapped: Vec<Vertex> = vs
        .iter()
        .map(|&v| {
            let w = symmetry(v, s);
            Vertex::new(w.x + shift.x, w.y + shift.y)
        })
        .collect();
    let mut pts: Vec<Point> = mapped.iter().map(|&v| Point::from(v)).collect();
    if fractional {
        let outward = |a: Vertex, b: Vertex, t: f64| Point::new(a.x as f64 + t * (a.x - b.x) as f64, a.y as f64 + t * (a.y - b.y) as f64);
        if rng.random::<bool>() {
            let t = rng.random_range(0.05..0.95);
            pts.insert(0, outward(mapped[0], mapped[1], t));
        }
        if rng.random::<bool>() {
            let n = mapped.len();
            let t = rng.random_range(0.05..0.95);
            pts.push(outward(mapped[n - 1], mapped[n - 2], t));
        }
    }
    let path = LatticePath::new(pts).ok()?;
    path.is_simple().then_some(path)
}

/// Chord end `(bx, by)` with `0 ≤ by ≤ bx` and norm in `[lo, hi]`.
fn chord_end<R: Rng + ?Sized>(lo: f64, hi: f64, rng: &mut R) -> Vertex {
    loop {
        let r = rng.random_range(lo..=hi);
        let th = rng.random_range(0.0..std::f64::consts::FRAC_PI_4);
        let v = Vertex::new((r * th.cos()).round() as i64, (r * th.sin()).round() as i64);
        let n = ((v.x * v.x + v.y * v.y) as f64).sqrt();
        if n >= lo && n <= hi && v.x >= 2 {
            return v;
        }
    }
}

/// Waypoints strictly increasing in x, offset from the chord by amplitudes
/// drawn log-uniformly from `[1, max_amp]`.
fn waypoints<R: Rng + ?Sized>(end: Vertex, max_amp: f64, rng: &mut R) -> Vec<Vertex> {
    let mut vs = vec![Vertex::new(0, 0)];
    let span = end.x;
    let count = rng.random_range(0..=12usize).min((span as usize).saturating_sub(2) / 3);
    let mut xs: Vec<i64> = (0..count).map(|_| rng.random_range(2..=span - 2)).collect();
    xs.sort_unstable();
    xs.dedup();
    let jitter = rng.random_range(0.0..1.5);
    for x in xs {
        let chord = end.y as f64 * x as f64 / span as f64;
        let amp = max_amp.max(1.0).powf(rng.random::<f64>());
        let y = (chord + amp * rng.random_range(-1.0..=1.0)).round() as i64;
        let target = Vertex::new(x, y);
        if x - vs.last().unwrap().x < 2 {
            continue;
        }
        staircase(&mut vs, target, jitter, rng);
    }
    staircase(&mut vs, end, jitter, rng);
    vs
}

fn detour<R: Rng + ?Sized>(end: Vertex, min_h: f64, rng: &mut R) -> Option<Vec<Vertex>> {
    let d = ((end.x * end.x + end.y * end.y) as f64).sqrt();
    let x0 = rng.random_range(0..=end.x / 3);
    let room = (d * d - (x0 as f64).powi(2)).sqrt();
    if room <= min_h {
        return None;
    }
    let h = rng.random_range(min_h..room) as i64 * if rng.random::<bool>() { 1 } else { -1 };
    let reach = ((d * d - (h as f64).powi(2)).max(0.0).sqrt() as i64).min(end.x - 1);
    if reach <= x0 + 1 {
        return None;
    }
    let x1 = rng.random_range(x0 + 1..=reach);
    let mut vs = vec![Vertex::new(0, 0)];
    l_move(&mut vs, Vertex::new(x0, 0));
    l_move(&mut vs, Vertex::new(x0, h));
    l_move(&mut vs, Vertex::new(x1, h));
    l_move(&mut vs, Vertex::new(x1, 0));
    let jitter = rng.random_range(0.0..1.0);
    staircase(&mut vs, end, jitter, rng);
    Some(vs)
}

fn boustrophedon<R: Rng + ?Sized>(end: Vertex, slab: f64, min_h: f64, rng: &mut R) -> Option<Vec<Vertex>> {
    let d = ((end.x * end.x + end.y * end.y) as f64).sqrt();
    let width = (slab * rng.random_range(0.5..2.0)).round().max(1.0) as i64;
    let x0 = rng.random_range(0..=(end.x / 3).max(0));
    let x_last = x0 + width;
    let room = (d * d - ((x_last + 1) as f64).powi(2)).max(0.0).sqrt();
    if room <= min_h || x_last + 2 >= end.x {
        return None;
    }
    let h = rng.random_range(min_h..room) as i64;
    let spacing = rng.random_range(1..=3);
    let mut vs = vec![Vertex::new(0, 0)];
    l_move(&mut vs, Vertex::new(x0, 0));
    let mut up = rng.random::<bool>();
    let mut x = x0;
    loop {
        l_move(&mut vs, Vertex::new(x, if up { h } else { -h }));
        if x + spacing > x_last {
            break;
        }
        x += spacing;
        l_move(&mut vs, Vertex::new(x, if up { h } else { -h }));
        up = !up;
    }
    let y = vs.last().unwrap().y;
    l_move(&mut vs, Vertex::new(x + 1, y));
    l_move(&mut vs, Vertex::new(x + 1, 0));
    let jitter = rng.random_range(0.0..1.0);
    staircase(&mut vs, end, jitter, rng);
    Some(vs)
}

/// One candidate path with chord length in `[lo, hi]`.
pub fn candidate<R: Rng + ?Sized>(family: Family, lo: f64, hi: f64, amplitude: f64, slab: f64, rng: &mut R) -> Option<LatticePath> {
    let end = chord_end(lo, hi, rng);
    let vs = match family {
        Family::Waypoints => waypoints(end, amplitude, rng),
        Family::Detour => detour(end, amplitude, rng)?,
        Family::Boustrophedon => boustrophedon(end, slab, amplitude, rng)?,
    };
    let fractional = rng.random::<bool>();
    finish(vs, fractional, rng)
}

fn norm_range(j: u32, params: &HierarchyParams) -> (f64, f64) {
    if j == params.m() {
        let lo = params.kappa * params.n() as f64;
        (lo, lo * 1.25 + 2.0)
    } else {
        let s = params.scale(j);
        (s, s * (1.0 + 1.0 / params.big_k()))
    }
}

/// Path in `SL_{j+1}` with the requested verdict at level `j`.
pub fn path_with_verdict<R: Rng + ?Sized>(j: u32, tame: bool, params: &HierarchyParams, rng: &mut R) -> Option<LatticePath> {
    let (lo, hi) = norm_range(j + 1, params);
    let kj = params.scale(j);
    for _ in 0..MAX_ATTEMPTS {
        let family = if tame {
            Family::Waypoints
        } else {
            match rng.random_range(0..3) {
                0 => Family::Waypoints,
                1 => Family::Detour,
                _ => Family::Boustrophedon,
            }
        };
        let amplitude = match (tame, family) {
            (true, _) => rng.random_range(1.0..=6.0 * kj),
            (false, Family::Waypoints) => hi,
            (false, _) => 4.0 * kj,
        };
        let Some(p) = candidate(family, lo, hi, amplitude, kj, rng) else {
            continue;
        };
        if !in_scale_class(&p, p.full(), j + 1, params) {
            continue;
        }
        if tame_verdict(&p, p.full(), j, params.big_k()).tame == tame {
            return Some(p);
        }
    }
    None
}

/// Path in `SL_j` mixing all families, for tree construction.
pub fn path_in_class<R: Rng + ?Sized>(j: u32, params: &HierarchyParams, rng: &mut R) -> Option<LatticePath> {
    let (lo, hi) = norm_range(j, params);
    let top = params.scale(j.saturating_sub(1));
    for _ in 0..MAX_ATTEMPTS {
        let family = match rng.random_range(0..6) {
            0..=3 => Family::Waypoints,
            4 => Family::Detour,
            _ => Family::Boustrophedon,
        };
        let amplitude = match family {
            Family::Waypoints => rng.random_range(1.0..=hi / 2.0),
            _ => rng.random_range(1.0..=4.0 * top),
        };
        let slab = params.scale(rng.random_range(0..j.max(1)));
        let Some(p) = candidate(family, lo, hi, amplitude, slab, rng) else {
            continue;
        };
        if in_scale_class(&p, p.full(), j, params) {
            return Some(p);
        }
    }
    None
}

/// Distinct tame paths in `SL_j` (verdict at level `j − 1`) from `x` to
/// `y`; fewer than `count` if the generator runs dry.
pub fn tame_paths_between<R: Rng + ?Sized>(
    x: Vertex,
    y: Vertex,
    j: u32,
    count: usize,
    params: &HierarchyParams,
    rng: &mut R,
) -> Vec<LatticePath> {
    let d = Vertex::new(y.x - x.x, y.y - x.y);
    // Find the symmetry that maps a first-octant chord onto `d`.
    let Some((s, canon)) = (0..8u8).find_map(|s| {
        (0..8u8)
            .map(|t| symmetry(d, t))
            .find(|c| c.x >= 2 && 0 <= c.y && c.y <= c.x)
            .filter(|c| symmetry(*c, s) == d)
            .map(|c| (s, c))
    }) else {
        return Vec::new();
    };
    let mut out: Vec<LatticePath> = Vec::new();
    let kj = params.scale(j.saturating_sub(1));
    for _ in 0..MAX_ATTEMPTS {
        if out.len() >= count {
            break;
        }
        let vs = waypoints(canon, rng.random_range(1.0..=2.0 * kj), rng);
        let mapped: Vec<Vertex> = vs
            .iter()
            .map(|&v| {
                let w = symmetry(v, s);
                Vertex::new(w.x + x.x, w.y + x.y)
            })
            .collect();
        let Ok(p) = LatticePath::from_vertices(&mapped) else { continue };
        if !p.is_simple() || !in_scale_class(&p, p.full(), j, params) {
            continue;
        }
        if j >= 1 && j < params.m() && !tame_verdict(&p, p.full(), j - 1, params.big_k()).tame {
            continue;
        }
        if !out.contains(&p) {
            out.push(p);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream_rng;
    use crate::scales::ScaleParams;

    #[test]
    fn generators_hit_their_targets() {
        let params = HierarchyParams::new(ScaleParams::new(4096, 3, 4).unwrap(), 0.25).unwrap();
        let mut rng = stream_rng(7, 0);
        for tame in [true, false] {
            for _ in 0..20 {
                let p = path_with_verdict(1, tame, &params, &mut rng).expect("generator gave up");
                assert!(p.is_simple());
                assert_eq!(tame_verdict(&p, p.full(), 1, 8.0).tame, tame);
            }
        }
        let fam = tame_paths_between(Vertex::new(0, 0), Vertex::new(-3, 70), 2, 10, &params, &mut rng);
        assert_eq!(fam.len(), 10);
        assert!(fam.iter().all(|p| p.end() == Point::new(-3.0, 70.0)));
        for j in 1..=4 {
            let p = path_in_class(j, &params, &mut rng).expect("generator gave up");
            assert!(in_scale_class(&p, p.full(), j, &params));
        }
    }
}
