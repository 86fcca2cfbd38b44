//! Planar primitives over a local equirectangular projection.

use crate::schedule::Waypoint;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Vec2 {
    pub x: f64,
    pub y: f64,
}

impl Vec2 {
    pub fn new(x: f64, y: f64) -> Self {
        Vec2 { x, y }
    }

    fn sub(self, o: Vec2) -> Vec2 {
        Vec2::new(self.x - o.x, self.y - o.y)
    }

    fn dot(self, o: Vec2) -> f64 {
        self.x * o.x + self.y * o.y
    }

    fn cross(self, o: Vec2) -> f64 {
        self.x * o.y - self.y * o.x
    }

    fn norm(self) -> f64 {
        self.dot(self).sqrt()
    }

    pub fn lerp(self, o: Vec2, t: f64) -> Vec2 {
        Vec2::new(self.x + (o.x - self.x) * t, self.y + (o.y - self.y) * t)
    }
}

const EPS: f64 = 1e-12;

/// `x = (lon - lon0) * cos(lat0)`, `y = lat - lat0`, centered on the vertex
/// centroid of a shape. The map is affine, so parameters along segments are
/// preserved exactly.
#[derive(Debug, Clone, Copy)]
pub struct Projection {
    lat0: f64,
    lon0: f64,
    cos_lat0: f64,
}

impl Projection {
    pub fn centered_on(points: &[Waypoint]) -> Self {
        let n = points.len().max(1) as f64;
        let lat0 = points.iter().map(|p| p.latitude).sum::<f64>() / n;
        let lon0 = points.iter().map(|p| p.longitude).sum::<f64>() / n;
        Projection {
            lat0,
            lon0,
            cos_lat0: lat0.to_radians().cos(),
        }
    }

    pub fn project(&self, p: Waypoint) -> Vec2 {
        Vec2::new((p.longitude - self.lon0) * self.cos_lat0, p.latitude - self.lat0)
    }

    pub fn project_all(&self, points: &[Waypoint]) -> Vec<Vec2> {
        points.iter().map(|p| self.project(*p)).collect()
    }
}

/// Smallest parameter `t` in `[0, 1]` along `p0 -> p1` at which the segment
/// touches `q0 -> q1`, including collinear overlap and endpoint contact.
pub fn segment_intersection(p0: Vec2, p1: Vec2, q0: Vec2, q1: Vec2) -> Option<f64> {
    let r = p1.sub(p0);
    let s = q1.sub(q0);
    let qp = q0.sub(p0);
    let scale = r.norm() * s.norm();
    if scale == 0.0 {
        return None;
    }
    let denom = r.cross(s);
    if denom.abs() > EPS * scale {
        let t = qp.cross(s) / denom;
        let u = qp.cross(r) / denom;
        let tol = 1e-9;
        if (-tol..=1.0 + tol).contains(&t) && (-tol..=1.0 + tol).contains(&u) {
            return Some(t.clamp(0.0, 1.0));
        }
        return None;
    }
    // Parallel: only collinear segments can touch.
    if qp.cross(r).abs() > 1e-9 * r.norm() * (qp.norm() + r.norm()) {
        return None;
    }
    let rr = r.dot(r);
    let t0 = qp.dot(r) / rr;
    let t1 = q1.sub(p0).dot(r) / rr;
    let lo = t0.min(t1).max(0.0);
    let hi = t0.max(t1).min(1.0);
    (lo <= hi).then_some(lo)
}

/// Even-odd ray casting. `ring` is an open ring (no repeated closing vertex).
pub fn point_in_polygon(pt: Vec2, ring: &[Vec2]) -> bool {
    let mut inside = false;
    let n = ring.len();
    let mut j = n - 1;
    for i in 0..n {
        let (a, b) = (ring[i], ring[j]);
        if (a.y > pt.y) != (b.y > pt.y) {
            let x = a.x + (pt.y - a.y) * (b.x - a.x) / (b.y - a.y);
            if pt.x < x {
                inside = !inside;
            }
        }
        j = i;
    }
    inside
}

/// Drops a repeated closing vertex, if present.
pub fn open_ring(points: &[Waypoint]) -> &[Waypoint] {
    match (points.first(), points.last()) {
        (Some(first), Some(last)) if points.len() > 1 && first == last => &points[..points.len() - 1],
        _ => points,
    }
}

/// Checks that an open ring is a simple polygon: at least three vertices,
/// no degenerate edges, no contact between non-adjacent edges, no folding
/// back between adjacent edges, and non-zero area.
pub fn check_simple_ring(ring: &[Vec2]) -> Result<(), String> {
    let n = ring.len();
    if n < 3 {
        return Err(format!("polygon needs at least 3 distinct vertices, got {n}"));
    }
    let edge = |i: usize| (ring[i], ring[(i + 1) % n]);
    for i in 0..n {
        let (a, b) = edge(i);
        if a.sub(b).norm() == 0.0 {
            return Err(format!("edge {i} has zero length"));
        }
    }
    for i in 0..n {
        for j in (i + 1)..n {
            let (a0, a1) = edge(i);
            let (b0, b1) = edge(j);
            let adjacent = j == i + 1 || (i == 0 && j == n - 1);
            if adjacent {
                // The shared vertex is a1 == b0 (or b1 == a0 for the wrap pair).
                let (shared, x, y) = if j == i + 1 { (a1, a0, b1) } else { (a0, a1, b0) };
                let u = x.sub(shared);
                let v = y.sub(shared);
                if u.cross(v).abs() <= EPS * u.norm() * v.norm() && u.dot(v) > 0.0 {
                    return Err(format!("edges {i} and {j} overlap"));
                }
            } else if segment_intersection(a0, a1, b0, b1).is_some() {
                return Err(format!("edges {i} and {j} intersect"));
            }
        }
    }
    let twice_area: f64 = (0..n).map(|i| edge(i).0.cross(edge(i).1)).sum();
    if twice_area.abs() <= EPS {
        return Err("polygon has zero area".into());
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(x: f64, y: f64) -> Vec2 {
        Vec2::new(x, y)
    }

    #[test]
    fn crossing_segments() {
        let t = segment_intersection(v(0.0, 0.0), v(2.0, 0.0), v(1.5, -1.0), v(1.5, 1.0)).unwrap();
        assert!((t - 0.75).abs() < 1e-12);
        assert!(segment_intersection(v(0.0, 0.0), v(1.0, 0.0), v(2.0, -1.0), v(2.0, 1.0)).is_none());
    }

    #[test]
    fn collinear_overlap_reports_first_contact() {
        let t = segment_intersection(v(0.0, 0.0), v(4.0, 0.0), v(3.0, 0.0), v(1.0, 0.0)).unwrap();
        assert!((t - 0.25).abs() < 1e-12);
        assert!(segment_intersection(v(0.0, 0.0), v(1.0, 0.0), v(0.0, 1.0), v(1.0, 1.0)).is_none());
    }

    #[test]
    fn polygon_checks() {
        let square = [v(0.0, 0.0), v(1.0, 0.0), v(1.0, 1.0), v(0.0, 1.0)];
        assert!(check_simple_ring(&square).is_ok());
        assert!(point_in_polygon(v(0.5, 0.5), &square));
        assert!(!point_in_polygon(v(1.5, 0.5), &square));
        let bow_tie = [v(0.0, 0.0), v(1.0, 1.0), v(1.0, 0.0), v(0.0, 1.0)];
        assert!(check_simple_ring(&bow_tie).is_err());
        let flat = [v(0.0, 0.0), v(1.0, 0.0), v(2.0, 0.0)];
        assert!(check_simple_ring(&flat).is_err());
        assert!(check_simple_ring(&square[..2]).is_err());
    }
}
