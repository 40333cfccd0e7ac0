//! Exact hypervolume for minimization and a bounded non-dominated archive.

use std::cmp::Ordering;

use super::nsga2::dominates;

/// Volume dominated by `points` and bounded by `reference` (minimization).
/// Points not strictly better than the reference in every objective
/// contribute nothing.
pub fn hypervolume(points: &[Vec<f64>], reference: &[f64]) -> f64 {
    let inside: Vec<&[f64]> = points
        .iter()
        .map(Vec::as_slice)
        .filter(|p| p.iter().zip(reference).all(|(v, r)| v < r))
        .collect();
    match reference.len() {
        0 => 0.0,
        1 => inside.iter().map(|p| reference[0] - p[0]).fold(0.0, f64::max),
        2 => {
            let mut pts: Vec<(f64, f64)> = inside.iter().map(|p| (p[0], p[1])).collect();
            area_2d(&mut pts, reference[0], reference[1])
        }
        3 => volume_3d(inside, reference),
        _ => slice_volume(inside.iter().map(|p| p.to_vec()).collect(), reference),
    }
}

fn by_coordinate(k: usize) -> impl Fn(&&[f64], &&[f64]) -> Ordering {
    move |a, b| a[k].partial_cmp(&b[k]).unwrap_or(Ordering::Equal)
}

fn area_2d(pts: &mut [(f64, f64)], rx: f64, ry: f64) -> f64 {
    pts.sort_by(|a, b| a.partial_cmp(b).unwrap_or(Ordering::Equal));
    let mut area = 0.0;
    let mut ceiling = ry;
    for &(x, y) in pts.iter() {
        if y < ceiling {
            area += (rx - x) * (ceiling - y);
            ceiling = y;
        }
    }
    area
}

/// Sweeps the third objective upward, keeping the two-dimensional front of
/// the points seen so far sorted by the first objective.
fn volume_3d(mut pts: Vec<&[f64]>, r: &[f64]) -> f64 {
    pts.sort_by(by_coordinate(2));
    let mut front: Vec<(f64, f64)> = Vec::with_capacity(pts.len());
    let mut area = 0.0;
    let mut volume = 0.0;
    for (k, p) in pts.iter().enumerate() {
        let (x, y) = (p[0], p[1]);
        let pos = front.partition_point(|&(fx, _)| fx < x);
        let covered = pos
            .checked_sub(1)
            .is_some_and(|i| front[i].1 <= y)
            || front.get(pos).is_some_and(|&(fx, fy)| fx == x && fy <= y);
        if !covered {
            let mut end = pos;
            while end < front.len() && front[end].1 >= y {
                end += 1;
            }
            front.splice(pos..end, std::iter::once((x, y)));
            area = 0.0;
            let mut ceiling = r[1];
            for &(fx, fy) in &front {
                area += (r[0] - fx) * (ceiling - fy);
                ceiling = fy;
            }
        }
        let next = pts.get(k + 1).map_or(r[2], |q| q[2]);
        volume += area * (next - p[2]);
    }
    volume
}

fn slice_volume(mut points: Vec<Vec<f64>>, reference: &[f64]) -> f64 {
    let m = reference.len();
    if points.is_empty() {
        return 0.0;
    }
    if m == 1 {
        let best = points.iter().map(|p| p[0]).fold(f64::INFINITY, f64::min);
        return reference[0] - best;
    }
    let last = m - 1;
    points.sort_by(|a, b| a[last].partial_cmp(&b[last]).unwrap_or(Ordering::Equal));
    let mut volume = 0.0;
    for k in 0..points.len() {
        let depth = if k + 1 < points.len() {
            points[k + 1][last] - points[k][last]
        } else {
            reference[last] - points[k][last]
        };
        if depth <= 0.0 {
            continue;
        }
        let projected: Vec<Vec<f64>> = points[..=k].iter().map(|p| p[..last].to_vec()).collect();
        volume += depth * slice_volume(projected, &reference[..last]);
    }
    volume
}

/// Mutually non-dominated members, truncated by removing the least
/// hypervolume contributor whenever the capacity is exceeded.
pub struct Archive<T> {
    capacity: usize,
    reference: Vec<f64>,
    members: Vec<T>,
}

impl<T> Archive<T> {
    pub fn new(capacity: usize, reference: Vec<f64>) -> Self {
        Self {
            capacity,
            reference,
            members: Vec::new(),
        }
    }

    pub fn objectives(&self, f: impl Fn(&T) -> &Vec<f64>) -> Vec<Vec<f64>> {
        self.members.iter().map(|m| f(m).clone()).collect()
    }

    /// Offers a candidate; returns whether it was kept.
    pub fn insert(&mut self, candidate: T, f: impl Fn(&T) -> &Vec<f64>) -> bool {
        let fc = f(&candidate).clone();
        if self
            .members
            .iter()
            .any(|m| dominates(f(m), &fc) || f(m) == &fc)
        {
            return false;
        }
        self.members.retain(|m| !dominates(&fc, f(m)));
        self.members.push(candidate);
        if self.members.len() > self.capacity {
            let points = self.objectives(&f);
            let total = hypervolume(&points, &self.reference);
            let mut worst = 0;
            let mut worst_contribution = f64::INFINITY;
            for i in 0..points.len() {
                let rest: Vec<Vec<f64>> = points
                    .iter()
                    .enumerate()
                    .filter(|&(j, _)| j != i)
                    .map(|(_, p)| p.clone())
                    .collect();
                let c = total - hypervolume(&rest, &self.reference);
                if c < worst_contribution {
                    worst_contribution = c;
                    worst = i;
                }
            }
            let removed_new = worst == self.members.len() - 1;
            self.members.remove(worst);
            return !removed_new;
        }
        true
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn into_members(self) -> Vec<T> {
        self.members
    }
}
