//! Convex polygon clipping and union areas in the plane.

pub type Point = [f64; 2];

const AREA_EPS: f64 = 1e-12;

/// Signed shoelace area; positive for counter-clockwise vertex order.
pub fn signed_area(poly: &[Point]) -> f64 {
    let n = poly.len();
    if n < 3 {
        return 0.0;
    }
    let mut s = 0.0;
    for k in 0..n {
        let [x0, y0] = poly[k];
        let [x1, y1] = poly[(k + 1) % n];
        s += x0 * y1 - x1 * y0;
    }
    0.5 * s
}

pub fn area(poly: &[Point]) -> f64 {
    signed_area(poly).abs()
}

/// Returns the polygon with counter-clockwise orientation.
pub fn counter_clockwise(mut poly: Vec<Point>) -> Vec<Point> {
    if signed_area(&poly) < 0.0 {
        poly.reverse();
    }
    poly
}

/// Sutherland–Hodgman clipping of `subject` against the convex,
/// counter-clockwise polygon `clip`.
pub fn clip_convex(subject: &[Point], clip: &[Point]) -> Vec<Point> {
    let mut output: Vec<Point> = subject.to_vec();
    let n = clip.len();
    for k in 0..n {
        if output.is_empty() {
            break;
        }
        let a = clip[k];
        let b = clip[(k + 1) % n];
        let side = |p: Point| (b[0] - a[0]) * (p[1] - a[1]) - (b[1] - a[1]) * (p[0] - a[0]);
        let input = std::mem::take(&mut output);
        let m = input.len();
        for idx in 0..m {
            let cur = input[idx];
            let prev = input[(idx + m - 1) % m];
            let (sc, sp) = (side(cur), side(prev));
            if sc >= 0.0 {
                if sp < 0.0 {
                    output.push(intersect(prev, cur, sp, sc));
                }
                output.push(cur);
            } else if sp >= 0.0 {
                output.push(intersect(prev, cur, sp, sc));
            }
        }
    }
    output
}

fn intersect(p: Point, q: Point, sp: f64, sq: f64) -> Point {
    let t = sp / (sp - sq);
    [p[0] + t * (q[0] - p[0]), p[1] + t * (q[1] - p[1])]
}

/// Axis-aligned rectangle as a counter-clockwise polygon.
pub fn rectangle(x0: f64, x1: f64, y0: f64, y1: f64) -> Vec<Point> {
    vec![[x0, y0], [x1, y0], [x1, y1], [x0, y1]]
}

/// Area of the union of convex counter-clockwise polygons by
/// inclusion–exclusion over pairwise-clipped intersections.
pub fn union_area(polys: &[Vec<Point>]) -> f64 {
    fn recurse(polys: &[Vec<Point>], start: usize, current: &[Point], sign: f64) -> f64 {
        let mut total = 0.0;
        for k in start..polys.len() {
            let inter = clip_convex(current, &polys[k]);
            let a = area(&inter);
            if a > AREA_EPS {
                total += sign * a + recurse(polys, k + 1, &inter, -sign);
            }
        }
        total
    }
    let mut total = 0.0;
    for k in 0..polys.len() {
        let a = area(&polys[k]);
        if a > AREA_EPS {
            total += a + recurse(polys, k + 1, &polys[k], -1.0);
        }
    }
    total.max(0.0)
}

/// Axis-aligned rectangle `[x0, x1] × [y0, y1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rect {
    pub x0: f64,
    pub x1: f64,
    pub y0: f64,
    pub y1: f64,
}

impl Rect {
    pub fn area(&self) -> f64 {
        (self.x1 - self.x0).max(0.0) * (self.y1 - self.y0).max(0.0)
    }

    pub fn intersection(&self, other: &Rect) -> Option<Rect> {
        let r = Rect {
            x0: self.x0.max(other.x0),
            x1: self.x1.min(other.x1),
            y0: self.y0.max(other.y0),
            y1: self.y1.min(other.y1),
        };
        (r.x1 > r.x0 && r.y1 > r.y0).then_some(r)
    }
}

/// Area of the union of axis-aligned rectangles.
pub fn rect_union_area(rects: &[Rect]) -> f64 {
    fn recurse(rects: &[Rect], start: usize, current: Rect, sign: f64) -> f64 {
        let mut total = 0.0;
        for k in start..rects.len() {
            if let Some(inter) = current.intersection(&rects[k]) {
                total += sign * inter.area() + recurse(rects, k + 1, inter, -sign);
            }
        }
        total
    }
    let mut total = 0.0;
    for k in 0..rects.len() {
        if rects[k].area() > 0.0 {
            total += rects[k].area() + recurse(rects, k + 1, rects[k], -1.0);
        }
    }
    total.max(0.0)
}
