//! Point-location helpers over sampled curves and characteristic fans.

use crate::game::RelState;

/// Uniform bucket grid storing item ids in compressed rows.
#[derive(Debug, Clone)]
struct BucketGrid {
    x0: f64,
    y0: f64,
    cell: f64,
    nx: usize,
    ny: usize,
    offsets: Vec<u32>,
    items: Vec<u32>,
}

impl BucketGrid {
    /// Builds from per-item bounding boxes `(xmin, ymin, xmax, ymax)`.
    fn build(boxes: &[[f64; 4]], cell: f64) -> Self {
        let mut lo = [f64::INFINITY; 2];
        let mut hi = [f64::NEG_INFINITY; 2];
        for b in boxes {
            lo[0] = lo[0].min(b[0]);
            lo[1] = lo[1].min(b[1]);
            hi[0] = hi[0].max(b[2]);
            hi[1] = hi[1].max(b[3]);
        }
        if boxes.is_empty() {
            lo = [0.0, 0.0];
            hi = [0.0, 0.0];
        }
        let nx = (((hi[0] - lo[0]) / cell).floor() as usize + 1).max(1);
        let ny = (((hi[1] - lo[1]) / cell).floor() as usize + 1).max(1);
        let mut grid = Self {
            x0: lo[0],
            y0: lo[1],
            cell,
            nx,
            ny,
            offsets: vec![0; nx * ny + 1],
            items: Vec::new(),
        };
        for b in boxes {
            let (i0, j0, i1, j1) = grid.span(b);
            for j in j0..=j1 {
                for i in i0..=i1 {
                    grid.offsets[j * nx + i + 1] += 1;
                }
            }
        }
        for k in 1..grid.offsets.len() {
            grid.offsets[k] += grid.offsets[k - 1];
        }
        let mut fill = grid.offsets.clone();
        grid.items = vec![0; *grid.offsets.last().unwrap() as usize];
        for (id, b) in boxes.iter().enumerate() {
            let (i0, j0, i1, j1) = grid.span(b);
            for j in j0..=j1 {
                for i in i0..=i1 {
                    let c = j * nx + i;
                    grid.items[fill[c] as usize] = id as u32;
                    fill[c] += 1;
                }
            }
        }
        grid
    }

    fn span(&self, b: &[f64; 4]) -> (usize, usize, usize, usize) {
        let (i0, j0) = self.clamp_cell(b[0], b[1]);
        let (i1, j1) = self.clamp_cell(b[2], b[3]);
        (i0, j0, i1, j1)
    }

    fn clamp_cell(&self, x: f64, y: f64) -> (usize, usize) {
        let i = ((x - self.x0) / self.cell).floor().max(0.0) as usize;
        let j = ((y - self.y0) / self.cell).floor().max(0.0) as usize;
        (i.min(self.nx - 1), j.min(self.ny - 1))
    }

    fn cell_of(&self, x: f64, y: f64) -> Option<(usize, usize)> {
        let fi = ((x - self.x0) / self.cell).floor();
        let fj = ((y - self.y0) / self.cell).floor();
        if fi < 0.0 || fj < 0.0 || fi >= self.nx as f64 || fj >= self.ny as f64 {
            None
        } else {
            Some((fi as usize, fj as usize))
        }
    }

    fn cell_items(&self, i: usize, j: usize) -> &[u32] {
        let c = j * self.nx + i;
        &self.items[self.offsets[c] as usize..self.offsets[c + 1] as usize]
    }

    /// Items in all cells overlapping the box; may repeat ids.
    fn for_box(&self, b: [f64; 4], mut visit: impl FnMut(u32)) {
        if b[2] < self.x0
            || b[3] < self.y0
            || b[0] > self.x0 + self.cell * self.nx as f64
            || b[1] > self.y0 + self.cell * self.ny as f64
        {
            return;
        }
        let (i0, j0, i1, j1) = self.span(&b);
        for j in j0..=j1 {
            for i in i0..=i1 {
                for &id in self.cell_items(i, j) {
                    visit(id);
                }
            }
        }
    }
}

/// Closed polygon with a horizontal-slab index for crossing-number tests.
#[derive(Debug, Clone)]
pub struct PolygonIndex {
    verts: Vec<RelState>,
    y0: f64,
    dy: f64,
    slabs: Vec<Vec<u32>>,
}

impl PolygonIndex {
    pub fn new(verts: Vec<RelState>) -> Self {
        let n = verts.len();
        let ymin = verts.iter().map(|v| v.y).fold(f64::INFINITY, f64::min);
        let ymax = verts.iter().map(|v| v.y).fold(f64::NEG_INFINITY, f64::max);
        let nslab = (n / 4).clamp(1, 4096);
        let dy = ((ymax - ymin) / nslab as f64).max(1e-12);
        let mut slabs = vec![Vec::new(); nslab];
        for k in 0..n {
            let a = verts[k];
            let b = verts[(k + 1) % n];
            let lo = ((a.y.min(b.y) - ymin) / dy).floor().max(0.0) as usize;
            let hi = ((a.y.max(b.y) - ymin) / dy).floor().max(0.0) as usize;
            for slab in slabs
                .iter_mut()
                .take(hi.min(nslab - 1) + 1)
                .skip(lo.min(nslab - 1))
            {
                slab.push(k as u32);
            }
        }
        Self {
            verts,
            y0: ymin,
            dy,
            slabs,
        }
    }

    pub fn vertices(&self) -> &[RelState] {
        &self.verts
    }

    pub fn contains(&self, p: RelState) -> bool {
        let f = (p.y - self.y0) / self.dy;
        if !(f >= 0.0) || f > self.slabs.len() as f64 {
            return false;
        }
        let slab = (f as usize).min(self.slabs.len() - 1);
        let n = self.verts.len();
        let mut inside = false;
        for &k in &self.slabs[slab] {
            let a = self.verts[k as usize];
            let b = self.verts[(k as usize + 1) % n];
            if (a.y > p.y) != (b.y > p.y) {
                let xi = a.x + (p.y - a.y) * (b.x - a.x) / (b.y - a.y);
                if p.x < xi {
                    inside = !inside;
                }
            }
        }
        inside
    }
}

/// Nearest point on an open polyline.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SegmentHit {
    pub segment: usize,
    pub t: f64,
    pub point: RelState,
    pub distance: f64,
}

/// Open polyline with a bucket index over its segments.
#[derive(Debug, Clone)]
pub struct SegmentIndex {
    pts: Vec<RelState>,
    grid: BucketGrid,
}

impl SegmentIndex {
    pub fn new(pts: Vec<RelState>, cell: f64) -> Self {
        let boxes: Vec<[f64; 4]> = pts
            .windows(2)
            .map(|w| {
                [
                    w[0].x.min(w[1].x),
                    w[0].y.min(w[1].y),
                    w[0].x.max(w[1].x),
                    w[0].y.max(w[1].y),
                ]
            })
            .collect();
        let grid = BucketGrid::build(&boxes, cell);
        Self { pts, grid }
    }

    pub fn points(&self) -> &[RelState] {
        &self.pts
    }

    /// Closest segment point within `radius` of `p`.
    pub fn nearest_within(&self, p: RelState, radius: f64) -> Option<SegmentHit> {
        let mut best: Option<SegmentHit> = None;
        self.grid.for_box(
            [p.x - radius, p.y - radius, p.x + radius, p.y + radius],
            |id| {
                let k = id as usize;
                let (t, q) = project(p, self.pts[k], self.pts[k + 1]);
                let d = (p - q).norm();
                let better = match best {
                    None => true,
                    Some(b) => d < b.distance || (d == b.distance && k < b.segment),
                };
                if d <= radius && better {
                    best = Some(SegmentHit {
                        segment: k,
                        t,
                        point: q,
                        distance: d,
                    });
                }
            },
        );
        best
    }

    /// Nearest segment point at any distance, searching outwards.
    pub fn nearest(&self, p: RelState) -> SegmentHit {
        let mut r = self.grid.cell;
        loop {
            if let Some(h) = self.nearest_within(p, r) {
                return h;
            }
            r *= 2.0;
            if r > 1e6 {
                let (k, t, q) = (0..self.pts.len() - 1)
                    .map(|k| {
                        let (t, q) = project(p, self.pts[k], self.pts[k + 1]);
                        (k, t, q)
                    })
                    .min_by(|a, b| (p - a.2).norm().total_cmp(&(p - b.2).norm()))
                    .expect("polyline has at least one segment");
                return SegmentHit {
                    segment: k,
                    t,
                    point: q,
                    distance: (p - q).norm(),
                };
            }
        }
    }

    /// First intersection of chord `a -> b` with the polyline, as the chord
    /// parameter in `[0, 1]` and the segment index.
    pub fn chord_intersection(&self, a: RelState, b: RelState) -> Option<(f64, usize)> {
        let mut best: Option<(f64, usize)> = None;
        self.grid.for_box(
            [a.x.min(b.x), a.y.min(b.y), a.x.max(b.x), a.y.max(b.y)],
            |id| {
                let k = id as usize;
                if let Some(s) = segment_intersection(a, b, self.pts[k], self.pts[k + 1]) {
                    let better = match best {
                        None => true,
                        Some((bs, bk)) => s < bs || (s == bs && k < bk),
                    };
                    if better {
                        best = Some((s, k));
                    }
                }
            },
        );
        best
    }
}

fn project(p: RelState, a: RelState, b: RelState) -> (f64, RelState) {
    let d = b - a;
    let len2 = d.norm_sq();
    let t = if len2 > 0.0 {
        ((p - a).dot(d) / len2).clamp(0.0, 1.0)
    } else {
        0.0
    };
    (t, a + d * t)
}

/// Parameter along `a -> b` where it meets segment `c -> d`, if it does.
pub fn segment_intersection(a: RelState, b: RelState, c: RelState, d: RelState) -> Option<f64> {
    let r = b - a;
    let s = d - c;
    let den = r.cross(s);
    if den == 0.0 {
        return None;
    }
    let q = c - a;
    let t = q.cross(s) / den;
    let v = q.cross(r) / den;
    if (0.0..=1.0).contains(&t) && (0.0..=1.0).contains(&v) {
        Some(t)
    } else {
        None
    }
}

/// Location of a point inside a fan of characteristics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FanHit {
    /// Lower characteristic index of the containing quad.
    pub branch: usize,
    /// Fraction across to `branch + 1`.
    pub a: f64,
    /// Sample index along the characteristics plus fraction.
    pub tau_index: f64,
    /// False when the point lies outside every quad and was extrapolated.
    pub exact: bool,
}

/// Quads between neighbouring characteristics sampled on a common time grid.
#[derive(Debug, Clone)]
pub struct FanIndex {
    quads: Vec<(u32, u32)>,
    grid: BucketGrid,
}

impl FanIndex {
    pub fn new<R: AsRef<[RelState]>>(chars: &[R], cell: f64) -> Self {
        let mut quads = Vec::new();
        let mut boxes = Vec::new();
        for i in 0..chars.len().saturating_sub(1) {
            let (c0, c1) = (chars[i].as_ref(), chars[i + 1].as_ref());
            let m = c0.len().min(c1.len());
            for j in 0..m.saturating_sub(1) {
                let q = [c0[j], c1[j], c1[j + 1], c0[j + 1]];
                let mut b = [
                    f64::INFINITY,
                    f64::INFINITY,
                    f64::NEG_INFINITY,
                    f64::NEG_INFINITY,
                ];
                for v in q {
                    b[0] = b[0].min(v.x);
                    b[1] = b[1].min(v.y);
                    b[2] = b[2].max(v.x);
                    b[3] = b[3].max(v.y);
                }
                quads.push((i as u32, j as u32));
                boxes.push(b);
            }
        }
        let grid = BucketGrid::build(&boxes, cell);
        Self { quads, grid }
    }

    pub fn quad_count(&self) -> usize {
        self.quads.len()
    }

    fn corners<R: AsRef<[RelState]>>(chars: &[R], q: (u32, u32)) -> [RelState; 4] {
        let (i, j) = (q.0 as usize, q.1 as usize);
        let (c0, c1) = (chars[i].as_ref(), chars[i + 1].as_ref());
        [c0[j], c1[j], c0[j + 1], c1[j + 1]]
    }

    /// Finds the quad containing `p`; falls back to the nearest quad with
    /// clamped coordinates when `p` is in a gap of the fan.
    pub fn locate<R: AsRef<[RelState]>>(&self, chars: &[R], p: RelState) -> Option<FanHit> {
        if let Some((i, j)) = self.grid.cell_of(p.x, p.y) {
            for &id in self.grid.cell_items(i, j) {
                let q = self.quads[id as usize];
                let c = Self::corners(chars, q);
                if !in_box(&c, p, 1e-12) {
                    continue;
                }
                if let Some((a, b)) = bilinear_inverse(&c, p) {
                    let eps = 1e-9;
                    if a >= -eps && a <= 1.0 + eps && b >= -eps && b <= 1.0 + eps {
                        return Some(FanHit {
                            branch: q.0 as usize,
                            a: a.clamp(0.0, 1.0),
                            tau_index: q.1 as f64 + b.clamp(0.0, 1.0),
                            exact: true,
                        });
                    }
                }
            }
        }
        self.nearest(chars, p)
    }

    fn nearest<R: AsRef<[RelState]>>(&self, chars: &[R], p: RelState) -> Option<FanHit> {
        if self.quads.is_empty() {
            return None;
        }
        let mut r = self.grid.cell;
        for _ in 0..24 {
            let mut best: Option<(f64, u32)> = None;
            self.grid
                .for_box([p.x - r, p.y - r, p.x + r, p.y + r], |id| {
                    let c = Self::corners(chars, self.quads[id as usize]);
                    let centre = (c[0] + c[1] + c[2] + c[3]) * 0.25;
                    let d = (centre - p).norm();
                    if best.is_none_or(|(bd, bid)| d < bd || (d == bd && id < bid)) {
                        best = Some((d, id));
                    }
                });
            if let Some((_, id)) = best {
                let q = self.quads[id as usize];
                let c = Self::corners(chars, q);
                let (a, b) = bilinear_inverse(&c, p).unwrap_or((0.5, 0.5));
                return Some(FanHit {
                    branch: q.0 as usize,
                    a: a.clamp(0.0, 1.0),
                    tau_index: q.1 as f64 + b.clamp(0.0, 1.0),
                    exact: false,
                });
            }
            r *= 2.0;
        }
        None
    }
}

fn in_box(c: &[RelState; 4], p: RelState, pad: f64) -> bool {
    let xmin = c.iter().map(|v| v.x).fold(f64::INFINITY, f64::min);
    let xmax = c.iter().map(|v| v.x).fold(f64::NEG_INFINITY, f64::max);
    let ymin = c.iter().map(|v| v.y).fold(f64::INFINITY, f64::min);
    let ymax = c.iter().map(|v| v.y).fold(f64::NEG_INFINITY, f64::max);
    p.x >= xmin - pad && p.x <= xmax + pad && p.y >= ymin - pad && p.y <= ymax + pad
}

/// Inverts `P(a, b) = (1-a)(1-b) c00 + a(1-b) c10 + (1-a) b c01 + a b c11`
/// where `c = [c00, c10, c01, c11]`, by Newton iteration.
pub fn bilinear_inverse(c: &[RelState; 4], p: RelState) -> Option<(f64, f64)> {
    let (c00, c10, c01, c11) = (c[0], c[1], c[2], c[3]);
    let e = c10 - c00;
    let f = c01 - c00;
    let g = c00 - c10 - c01 + c11;
    let (mut a, mut b) = (0.5, 0.5);
    for _ in 0..30 {
        let r = c00 + e * a + f * b + g * (a * b) - p;
        let ja = e + g * b;
        let jb = f + g * a;
        let det = ja.cross(jb);
        if det.abs() < 1e-300 {
            return None;
        }
        let da = r.cross(jb) / det;
        let db = ja.cross(r) / det;
        a -= da;
        b -= db;
        if da.abs() < 1e-14 && db.abs() < 1e-14 {
            return Some((a, b));
        }
        if !a.is_finite() || !b.is_finite() || a.abs() > 1e6 || b.abs() > 1e6 {
            return None;
        }
    }
    let r = c00 + e * a + f * b + g * (a * b) - p;
    let scale = (e.norm() + f.norm()).max(1e-300);
    (r.norm() < 1e-9 * scale).then_some((a, b))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn square_polygon() {
        let poly = PolygonIndex::new(vec![
            RelState::new(0.0, 0.0),
            RelState::new(1.0, 0.0),
            RelState::new(1.0, 1.0),
            RelState::new(0.0, 1.0),
        ]);
        assert!(poly.contains(RelState::new(0.5, 0.5)));
        assert!(!poly.contains(RelState::new(1.5, 0.5)));
        assert!(!poly.contains(RelState::new(0.5, -0.1)));
    }

    #[test]
    fn bilinear_roundtrip() {
        let c = [
            RelState::new(0.0, 0.0),
            RelState::new(1.0, 0.1),
            RelState::new(0.2, 1.0),
            RelState::new(1.3, 1.4),
        ];
        let (a, b) = (0.3, 0.8);
        let p = c[0] * ((1.0 - a) * (1.0 - b))
            + c[1] * (a * (1.0 - b))
            + c[2] * ((1.0 - a) * b)
            + c[3] * (a * b);
        let (ra, rb) = bilinear_inverse(&c, p).unwrap();
        assert!((ra - a).abs() < 1e-12 && (rb - b).abs() < 1e-12);
    }

    #[test]
    fn polyline_queries() {
        let idx = SegmentIndex::new(
            vec![
                RelState::new(0.0, 0.0),
                RelState::new(1.0, 0.0),
                RelState::new(1.0, 1.0),
            ],
            0.25,
        );
        let h = idx.nearest(RelState::new(0.5, 0.2));
        assert_eq!(h.segment, 0);
        assert!((h.distance - 0.2).abs() < 1e-15);
        let hit = idx.chord_intersection(RelState::new(0.5, -1.0), RelState::new(0.5, 1.0));
        assert!((hit.unwrap().0 - 0.5).abs() < 1e-15);
        assert!(idx.nearest_within(RelState::new(3.0, 3.0), 0.1).is_none());
    }
}
