//! 2D helpers on the image rectangle `[0, w] x [0, h]`.

use nalgebra::{Point2, Vector2};

pub type P2 = Point2<f64>;
pub type V2 = Vector2<f64>;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Rect {
    pub x0: f64,
    pub y0: f64,
    pub x1: f64,
    pub y1: f64,
}

impl Rect {
    pub fn image(width: f64, height: f64) -> Self {
        Rect {
            x0: 0.0,
            y0: 0.0,
            x1: width,
            y1: height,
        }
    }

    pub fn inflated(&self, frac: f64) -> Self {
        let dx = (self.x1 - self.x0) * frac;
        let dy = (self.y1 - self.y0) * frac;
        Rect {
            x0: self.x0 - dx,
            y0: self.y0 - dy,
            x1: self.x1 + dx,
            y1: self.y1 + dy,
        }
    }

    pub fn contains(&self, p: &P2) -> bool {
        p.x >= self.x0 && p.x <= self.x1 && p.y >= self.y0 && p.y <= self.y1
    }

    pub fn contains_strictly(&self, p: &P2) -> bool {
        p.x > self.x0 && p.x < self.x1 && p.y > self.y0 && p.y < self.y1
    }

    pub fn area(&self) -> f64 {
        (self.x1 - self.x0) * (self.y1 - self.y0)
    }

    /// Parameter interval `[t0, t1]` of `p + t d` inside the rectangle.
    fn slab(&self, p: &P2, d: &V2) -> Option<(f64, f64)> {
        let mut t0 = f64::NEG_INFINITY;
        let mut t1 = f64::INFINITY;
        for (o, dir, lo, hi) in [(p.x, d.x, self.x0, self.x1), (p.y, d.y, self.y0, self.y1)] {
            if dir.abs() < 1e-300 {
                if o < lo || o > hi {
                    return None;
                }
            } else {
                let (a, b) = ((lo - o) / dir, (hi - o) / dir);
                t0 = t0.max(a.min(b));
                t1 = t1.min(a.max(b));
            }
        }
        (t0 <= t1).then_some((t0, t1))
    }

    /// Point where the ray from `p` (inside) along `d` leaves the rectangle.
    pub fn exit_point(&self, p: &P2, d: &V2) -> Option<P2> {
        let (_, t1) = self.slab(p, d)?;
        (t1 >= 0.0).then(|| p + d * t1)
    }

    /// The two border points of the infinite line through `p` along `d`,
    /// ordered along `d`.
    pub fn line_crossings(&self, p: &P2, d: &V2) -> Option<(P2, P2)> {
        let (t0, t1) = self.slab(p, d)?;
        Some((p + d * t0, p + d * t1))
    }

    /// Liang-Barsky clip of segment `a`-`b`.
    pub fn clip_segment(&self, a: &P2, b: &P2) -> Option<(P2, P2)> {
        let d = b - a;
        let (t0, t1) = self.slab(a, &d)?;
        let (t0, t1) = (t0.max(0.0), t1.min(1.0));
        (t0 <= t1).then(|| (a + d * t0, a + d * t1))
    }

    /// Sutherland-Hodgman clip of a polygon against the rectangle.
    pub fn clip_polygon(&self, poly: &[P2]) -> Vec<P2> {
        let mut out: Vec<P2> = poly.to_vec();
        let planes: [(V2, f64); 4] = [
            (V2::new(1.0, 0.0), self.x0),
            (V2::new(-1.0, 0.0), -self.x1),
            (V2::new(0.0, 1.0), self.y0),
            (V2::new(0.0, -1.0), -self.y1),
        ];
        for (n, c) in planes {
            if out.is_empty() {
                break;
            }
            out = clip_half_plane(&out, |p| n.dot(&p.coords) - c);
        }
        out
    }
}

/// Keeps the part of `poly` where `f >= 0` (`f` affine).
pub fn clip_half_plane(poly: &[P2], f: impl Fn(&P2) -> f64) -> Vec<P2> {
    let mut out = Vec::with_capacity(poly.len() + 2);
    for i in 0..poly.len() {
        let a = poly[i];
        let b = poly[(i + 1) % poly.len()];
        let (fa, fb) = (f(&a), f(&b));
        if fa >= 0.0 {
            out.push(a);
        }
        if (fa >= 0.0) != (fb >= 0.0) {
            let t = fa / (fa - fb);
            out.push(a + (b - a) * t);
        }
    }
    out
}

pub fn polygon_area(poly: &[P2]) -> f64 {
    let mut acc = 0.0;
    for i in 0..poly.len() {
        let a = poly[i];
        let b = poly[(i + 1) % poly.len()];
        acc += a.x * b.y - b.x * a.y;
    }
    0.5 * acc
}

pub fn cross(a: &V2, b: &V2) -> f64 {
    a.x * b.y - a.y * b.x
}
