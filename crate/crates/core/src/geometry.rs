//! Planar convex polygon helpers used by BEV IoU and scene placement.

/// Area below which a clipped polygon is treated as empty, m².
pub const AREA_EPS: f64 = 1e-12;

pub type Point2 = [f64; 2];

/// Signed area by the shoelace formula; positive for counter-clockwise input.
pub fn signed_area(poly: &[Point2]) -> f64 {
    if poly.len() < 3 {
        return 0.0;
    }
    let n = poly.len();
    let mut acc = 0.0;
    for i in 0..n {
        let [x0, y0] = poly[i];
        let [x1, y1] = poly[(i + 1) % n];
        acc += x0 * y1 - x1 * y0;
    }
    0.5 * acc
}

pub fn area(poly: &[Point2]) -> f64 {
    signed_area(poly).abs()
}

/// Returns the polygon with counter-clockwise orientation.
pub fn ccw(mut poly: Vec<Point2>) -> Vec<Point2> {
    if signed_area(&poly) < 0.0 {
        poly.reverse();
    }
    poly
}

#[inline]
fn side(a: Point2, b: Point2, p: Point2) -> f64 {
    (b[0] - a[0]) * (p[1] - a[1]) - (b[1] - a[1]) * (p[0] - a[0])
}

/// Keeps the part of `poly` on the left of the directed line a→b.
fn clip_halfplane(poly: &[Point2], a: Point2, b: Point2) -> Vec<Point2> {
    let n = poly.len();
    let mut out = Vec::with_capacity(n + 2);
    for i in 0..n {
        let s = poly[i];
        let e = poly[(i + 1) % n];
        let ds = side(a, b, s);
        let de = side(a, b, e);
        let s_in = ds >= 0.0;
        let e_in = de >= 0.0;
        if s_in != e_in {
            let t = ds / (ds - de);
            out.push([s[0] + (e[0] - s[0]) * t, s[1] + (e[1] - s[1]) * t]);
        }
        if e_in {
            out.push(e);
        }
    }
    out
}

/// Sutherland–Hodgman intersection of two convex polygons (any orientation).
pub fn clip_convex(subject: &[Point2], clip: &[Point2]) -> Vec<Point2> {
    if subject.len() < 3 || clip.len() < 3 {
        return Vec::new();
    }
    let clip = ccw(clip.to_vec());
    let mut out = subject.to_vec();
    for i in 0..clip.len() {
        out = clip_halfplane(&out, clip[i], clip[(i + 1) % clip.len()]);
        if out.len() < 3 {
            return Vec::new();
        }
    }
    out
}

/// Intersection area of two convex polygons, zero below [`AREA_EPS`].
pub fn intersection_area(a: &[Point2], b: &[Point2]) -> f64 {
    let inter = area(&clip_convex(a, b));
    if inter < AREA_EPS {
        0.0
    } else {
        inter
    }
}

/// Corners of a rectangle with half-extents along a heading, counter-clockwise
/// in the (first, second) coordinate plane.
pub fn rotated_rect(center: Point2, along: f64, across: f64, cos_t: f64, sin_t: f64) -> [Point2; 4] {
    let ha = 0.5 * along;
    let hc = 0.5 * across;
    let local = [[ha, hc], [-ha, hc], [-ha, -hc], [ha, -hc]];
    local.map(|[a, c]| {
        [
            center[0] + cos_t * a - sin_t * c,
            center[1] + sin_t * a + cos_t * c,
        ]
    })
}
