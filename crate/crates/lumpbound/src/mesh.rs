//! Planar triangle meshes: canonical shapes, uniform refinement, text I/O and
//! geometric measures.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Shape {
    Disk,
    Square,
    EquilateralTriangle,
    Cross,
}

impl Shape {
    pub const ALL: [Shape; 4] = [
        Shape::Disk,
        Shape::Square,
        Shape::EquilateralTriangle,
        Shape::Cross,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Shape::Disk => "disk",
            Shape::Square => "square",
            Shape::EquilateralTriangle => "equilateral_triangle",
            Shape::Cross => "cross",
        }
    }
}

impl FromStr for Shape {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "disk" | "circle" => Ok(Shape::Disk),
            "square" => Ok(Shape::Square),
            "equilateral_triangle" | "triangle" => Ok(Shape::EquilateralTriangle),
            "cross" => Ok(Shape::Cross),
            other => Err(Error::invalid(format!("unknown shape '{other}'"))),
        }
    }
}

/// Exact curved boundary that refined boundary midpoints are projected onto.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Circle {
    pub center: [f64; 2],
    pub radius: f64,
}

impl Circle {
    fn project(&self, p: [f64; 2]) -> [f64; 2] {
        let dx = p[0] - self.center[0];
        let dy = p[1] - self.center[1];
        let r = dx.hypot(dy);
        [
            self.center[0] + self.radius * dx / r,
            self.center[1] + self.radius * dy / r,
        ]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Mesh2D {
    vertices: Vec<[f64; 2]>,
    triangles: Vec<[usize; 3]>,
    regions: Vec<u32>,
    boundary_edges: Vec<[usize; 2]>,
    boundary_tags: Vec<u32>,
    curved: Option<Circle>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeometryStats {
    pub area: f64,
    pub perimeter: f64,
    pub gamma: f64,
    pub diameter: f64,
    pub centroid: [f64; 2],
}

fn signed_area(a: [f64; 2], b: [f64; 2], c: [f64; 2]) -> f64 {
    0.5 * ((b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]))
}

fn dist(a: [f64; 2], b: [f64; 2]) -> f64 {
    (b[0] - a[0]).hypot(b[1] - a[1])
}

fn edge_key(a: usize, b: usize) -> (usize, usize) {
    if a < b {
        (a, b)
    } else {
        (b, a)
    }
}

impl Mesh2D {
    /// Builds a mesh and checks every invariant. Clockwise triangles are
    /// reoriented; boundary edges must match the one-sided edges exactly.
    pub fn new(
        vertices: Vec<[f64; 2]>,
        mut triangles: Vec<[usize; 3]>,
        regions: Vec<u32>,
        boundary_edges: Vec<[usize; 2]>,
        boundary_tags: Vec<u32>,
    ) -> Result<Self> {
        if triangles.is_empty() {
            return Err(Error::invalid("mesh has no triangles"));
        }
        if regions.len() != triangles.len() {
            return Err(Error::invalid("region tag count differs from triangle count"));
        }
        if boundary_tags.len() != boundary_edges.len() {
            return Err(Error::invalid("boundary tag count differs from edge count"));
        }
        let nv = vertices.len();
        for (t, tri) in triangles.iter_mut().enumerate() {
            if tri.iter().any(|&v| v >= nv) {
                return Err(Error::invalid(format!("triangle {t} references a missing vertex")));
            }
            let a = signed_area(vertices[tri[0]], vertices[tri[1]], vertices[tri[2]]);
            let scale = dist(vertices[tri[0]], vertices[tri[1]])
                .max(dist(vertices[tri[1]], vertices[tri[2]]))
                .max(dist(vertices[tri[2]], vertices[tri[0]]));
            if !(a.abs() > 1e-14 * scale * scale) {
                return Err(Error::invalid(format!("triangle {t} is degenerate")));
            }
            if a < 0.0 {
                tri.swap(1, 2);
            }
        }

        let one_sided = Self::one_sided_edges(&triangles)?;
        if one_sided.len() != boundary_edges.len() {
            return Err(Error::invalid(format!(
                "expected {} boundary edges, got {}",
                one_sided.len(),
                boundary_edges.len()
            )));
        }
        // Orient given boundary edges like their triangle (interior on the left).
        let lookup: HashMap<(usize, usize), [usize; 2]> =
            one_sided.iter().map(|e| (edge_key(e[0], e[1]), *e)).collect();
        let mut oriented = Vec::with_capacity(boundary_edges.len());
        for e in &boundary_edges {
            match lookup.get(&edge_key(e[0], e[1])) {
                Some(o) => oriented.push(*o),
                None => {
                    return Err(Error::invalid(format!(
                        "edge ({}, {}) is not a boundary edge",
                        e[0], e[1]
                    )))
                }
            }
        }
        let mut seen = std::collections::HashSet::new();
        for e in &oriented {
            if !seen.insert(edge_key(e[0], e[1])) {
                return Err(Error::invalid("duplicate boundary edge"));
            }
        }

        let mesh = Mesh2D {
            vertices,
            triangles,
            regions,
            boundary_edges: oriented,
            boundary_tags,
            curved: None,
        };
        mesh.check_connected()?;
        Ok(mesh)
    }

    /// Builds a mesh whose boundary edges are derived from the triangles (tag 0).
    pub fn from_triangles(
        vertices: Vec<[f64; 2]>,
        triangles: Vec<[usize; 3]>,
        regions: Vec<u32>,
    ) -> Result<Self> {
        let mut oriented = triangles.clone();
        for tri in oriented.iter_mut() {
            if tri.iter().any(|&v| v >= vertices.len()) {
                return Err(Error::invalid("triangle references a missing vertex"));
            }
            if signed_area(vertices[tri[0]], vertices[tri[1]], vertices[tri[2]]) < 0.0 {
                tri.swap(1, 2);
            }
        }
        let edges = Self::one_sided_edges(&oriented)?;
        let tags = vec![0; edges.len()];
        Self::new(vertices, oriented, regions, edges, tags)
    }

    fn one_sided_edges(triangles: &[[usize; 3]]) -> Result<Vec<[usize; 2]>> {
        let mut count: HashMap<(usize, usize), (usize, [usize; 2])> = HashMap::new();
        let mut order = Vec::new();
        for tri in triangles {
            for k in 0..3 {
                let (a, b) = (tri[k], tri[(k + 1) % 3]);
                let entry = count.entry(edge_key(a, b)).or_insert_with(|| {
                    order.push(edge_key(a, b));
                    (0, [a, b])
                });
                entry.0 += 1;
            }
        }
        let mut out = Vec::new();
        for key in order {
            let (n, e) = count[&key];
            match n {
                1 => out.push(e),
                2 => {}
                _ => return Err(Error::invalid("non-manifold edge shared by more than two triangles")),
            }
        }
        Ok(out)
    }

    fn check_connected(&self) -> Result<()> {
        let nv = self.vertices.len();
        let mut parent: Vec<usize> = (0..nv).collect();
        fn find(p: &mut [usize], mut x: usize) -> usize {
            while p[x] != x {
                p[x] = p[p[x]];
                x = p[x];
            }
            x
        }
        let mut used = vec![false; nv];
        for tri in &self.triangles {
            for &v in tri {
                used[v] = true;
            }
            for k in 1..3 {
                let (a, b) = (find(&mut parent, tri[0]), find(&mut parent, tri[k]));
                if a != b {
                    parent[a] = b;
                }
            }
        }
        if let Some(v) = used.iter().position(|u| !u) {
            return Err(Error::invalid(format!("vertex {v} is not used by any triangle")));
        }
        let root = find(&mut parent, 0);
        if (0..nv).any(|v| find(&mut parent, v) != root) {
            return Err(Error::invalid("mesh is not connected"));
        }
        Ok(())
    }

    pub fn vertices(&self) -> &[[f64; 2]] {
        &self.vertices
    }

    pub fn triangles(&self) -> &[[usize; 3]] {
        &self.triangles
    }

    pub fn regions(&self) -> &[u32] {
        &self.regions
    }

    pub fn boundary_edges(&self) -> &[[usize; 2]] {
        &self.boundary_edges
    }

    pub fn boundary_tags(&self) -> &[u32] {
        &self.boundary_tags
    }

    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn num_triangles(&self) -> usize {
        self.triangles.len()
    }

    pub fn curved_boundary(&self) -> Option<Circle> {
        self.curved
    }

    pub fn triangle_area(&self, t: usize) -> f64 {
        let [a, b, c] = self.triangles[t];
        signed_area(self.vertices[a], self.vertices[b], self.vertices[c])
    }

    pub fn triangle_centroid(&self, t: usize) -> [f64; 2] {
        let [a, b, c] = self.triangles[t];
        let (pa, pb, pc) = (self.vertices[a], self.vertices[b], self.vertices[c]);
        [(pa[0] + pb[0] + pc[0]) / 3.0, (pa[1] + pb[1] + pc[1]) / 3.0]
    }

    pub fn edge_length(&self, e: usize) -> f64 {
        let [a, b] = self.boundary_edges[e];
        dist(self.vertices[a], self.vertices[b])
    }

    /// Sorted indices of vertices lying on the boundary.
    pub fn boundary_vertices(&self) -> Vec<usize> {
        let mut on = vec![false; self.vertices.len()];
        for e in &self.boundary_edges {
            on[e[0]] = true;
            on[e[1]] = true;
        }
        (0..on.len()).filter(|&v| on[v]).collect()
    }

    pub fn with_regions(mut self, regions: Vec<u32>) -> Result<Self> {
        if regions.len() != self.triangles.len() {
            return Err(Error::invalid("region tag count differs from triangle count"));
        }
        self.regions = regions;
        Ok(self)
    }

    /// Tags each triangle by a predicate on its centroid (1 when true).
    pub fn tag_regions_by(self, f: impl Fn([f64; 2]) -> bool) -> Self {
        let regions = (0..self.triangles.len())
            .map(|t| f(self.triangle_centroid(t)) as u32)
            .collect();
        Mesh2D { regions, ..self }
    }

    /// Applies `x -> s R x + d` with rotation angle `theta`. A negative `s`
    /// is a half-turn in the plane, so orientation is kept.
    pub fn transformed(&self, scale: f64, theta: f64, shift: [f64; 2]) -> Self {
        let (s, c) = theta.sin_cos();
        let map = |p: [f64; 2]| {
            [
                scale * (c * p[0] - s * p[1]) + shift[0],
                scale * (s * p[0] + c * p[1]) + shift[1],
            ]
        };
        let mut out = self.clone();
        out.vertices = self.vertices.iter().map(|&p| map(p)).collect();
        out.curved = self.curved.map(|circ| Circle {
            center: map(circ.center),
            radius: circ.radius * scale.abs(),
        });
        out
    }

    pub fn scaled(&self, factor: f64) -> Self {
        self.transformed(factor, 0.0, [0.0, 0.0])
    }

    /// Uniform red refinement: each triangle splits into four.
    pub fn refine(&self) -> Self {
        let mut vertices = self.vertices.clone();
        let mut mid: HashMap<(usize, usize), usize> = HashMap::new();
        let mut on_boundary = std::collections::HashSet::new();
        for e in &self.boundary_edges {
            on_boundary.insert(edge_key(e[0], e[1]));
        }
        let mut midpoint = |a: usize, b: usize, vertices: &mut Vec<[f64; 2]>| -> usize {
            let key = edge_key(a, b);
            *mid.entry(key).or_insert_with(|| {
                let (pa, pb) = (vertices[a], vertices[b]);
                let mut p = [0.5 * (pa[0] + pb[0]), 0.5 * (pa[1] + pb[1])];
                if on_boundary.contains(&key) {
                    if let Some(circ) = self.curved {
                        p = circ.project(p);
                    }
                }
                vertices.push(p);
                vertices.len() - 1
            })
        };

        let mut triangles = Vec::with_capacity(4 * self.triangles.len());
        let mut regions = Vec::with_capacity(4 * self.triangles.len());
        for (t, &[a, b, c]) in self.triangles.iter().enumerate() {
            let ab = midpoint(a, b, &mut vertices);
            let bc = midpoint(b, c, &mut vertices);
            let ca = midpoint(c, a, &mut vertices);
            triangles.extend_from_slice(&[[a, ab, ca], [ab, b, bc], [ca, bc, c], [ab, bc, ca]]);
            regions.extend_from_slice(&[self.regions[t]; 4]);
        }
        let mut boundary_edges = Vec::with_capacity(2 * self.boundary_edges.len());
        let mut boundary_tags = Vec::with_capacity(2 * self.boundary_edges.len());
        for (e, &[a, b]) in self.boundary_edges.iter().enumerate() {
            let m = midpoint(a, b, &mut vertices);
            boundary_edges.extend_from_slice(&[[a, m], [m, b]]);
            boundary_tags.extend_from_slice(&[self.boundary_tags[e]; 2]);
        }
        Mesh2D {
            vertices,
            triangles,
            regions,
            boundary_edges,
            boundary_tags,
            curved: self.curved,
        }
    }

    pub fn refined(&self, times: usize) -> Self {
        let mut m = self.clone();
        for _ in 0..times {
            m = m.refine();
        }
        m
    }

    pub fn geometry_stats(&self) -> Result<GeometryStats> {
        let mut area = 0.0;
        let mut cx = 0.0;
        let mut cy = 0.0;
        for t in 0..self.triangles.len() {
            let a = self.triangle_area(t);
            if !(a > 0.0) {
                return Err(Error::invalid(format!("triangle {t} has zero area")));
            }
            let c = self.triangle_centroid(t);
            area += a;
            cx += a * c[0];
            cy += a * c[1];
        }
        let perimeter: f64 = (0..self.boundary_edges.len()).map(|e| self.edge_length(e)).sum();
        let bv = self.boundary_vertices();
        let mut diameter: f64 = 0.0;
        for (i, &a) in bv.iter().enumerate() {
            for &b in &bv[i + 1..] {
                diameter = diameter.max(dist(self.vertices[a], self.vertices[b]));
            }
        }
        Ok(GeometryStats {
            area,
            perimeter,
            gamma: perimeter / area,
            diameter,
            centroid: [cx / area, cy / area],
        })
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(
            s,
            "{} {} {}",
            self.vertices.len(),
            self.triangles.len(),
            self.boundary_edges.len()
        );
        for p in &self.vertices {
            let _ = writeln!(s, "{:e} {:e}", p[0], p[1]);
        }
        for (t, tri) in self.triangles.iter().enumerate() {
            let _ = writeln!(s, "{} {} {} {}", tri[0], tri[1], tri[2], self.regions[t]);
        }
        for (e, edge) in self.boundary_edges.iter().enumerate() {
            let _ = writeln!(s, "{} {} {}", edge[0], edge[1], self.boundary_tags[e]);
        }
        s
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.split('#').next().unwrap_or("").trim()))
            .filter(|(_, l)| !l.is_empty());

        fn fields<T: FromStr>(line: usize, s: &str, n: usize) -> Result<Vec<T>> {
            let v: Vec<T> = s
                .split_whitespace()
                .map(|w| w.parse::<T>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|_| Error::Parse { line, msg: format!("cannot parse '{s}'") })?;
            if v.len() != n {
                return Err(Error::Parse { line, msg: format!("expected {n} fields, got {}", v.len()) });
            }
            Ok(v)
        }

        let (ln, header) = lines.next().ok_or(Error::Parse { line: 0, msg: "empty mesh file".into() })?;
        let h: Vec<usize> = fields(ln, header, 3)?;
        let (nv, nt, nb) = (h[0], h[1], h[2]);
        let mut next = |what: &str| {
            lines.next().ok_or_else(|| Error::Parse { line: 0, msg: format!("unexpected end of file reading {what}") })
        };
        let mut vertices = Vec::with_capacity(nv);
        for _ in 0..nv {
            let (ln, l) = next("vertices")?;
            let v: Vec<f64> = fields(ln, l, 2)?;
            vertices.push([v[0], v[1]]);
        }
        let mut triangles = Vec::with_capacity(nt);
        let mut regions = Vec::with_capacity(nt);
        for _ in 0..nt {
            let (ln, l) = next("triangles")?;
            let v: Vec<usize> = fields(ln, l, 4)?;
            triangles.push([v[0], v[1], v[2]]);
            regions.push(v[3] as u32);
        }
        let mut edges = Vec::with_capacity(nb);
        let mut tags = Vec::with_capacity(nb);
        for _ in 0..nb {
            let (ln, l) = next("boundary edges")?;
            let v: Vec<usize> = fields(ln, l, 3)?;
            edges.push([v[0], v[1]]);
            tags.push(v[2] as u32);
        }
        if let Some((ln, _)) = lines.next() {
            return Err(Error::Parse { line: ln, msg: "trailing content after mesh".into() });
        }
        Mesh2D::new(vertices, triangles, regions, edges, tags)
    }

    pub fn read(path: &Path) -> Result<Self> {
        Self::from_text(&std::fs::read_to_string(path)?)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_text())?;
        Ok(())
    }
}

/// Union-jack triangulation of unit cells, each split into 2x2 sub-squares
/// with diagonals meeting at the cell center. Cells are given by their
/// lower-left corners in integer units, shifted by `origin`.
fn union_jack(cells: &[(i64, i64)], origin: [f64; 2]) -> Mesh2D {
    let mut index: HashMap<(i64, i64), usize> = HashMap::new();
    let mut vertices = Vec::new();
    let mut vid = |p: (i64, i64), vertices: &mut Vec<[f64; 2]>| -> usize {
        *index.entry(p).or_insert_with(|| {
            vertices.push([origin[0] + 0.5 * p.0 as f64, origin[1] + 0.5 * p.1 as f64]);
            vertices.len() - 1
        })
    };
    let mut triangles = Vec::new();
    for &(cx, cy) in cells {
        let center = (2 * cx + 1, 2 * cy + 1);
        for (sx, sy) in [(0, 0), (1, 0), (0, 1), (1, 1)] {
            let x0 = 2 * cx + sx;
            let y0 = 2 * cy + sy;
            let p00 = vid((x0, y0), &mut vertices);
            let p10 = vid((x0 + 1, y0), &mut vertices);
            let p01 = vid((x0, y0 + 1), &mut vertices);
            let p11 = vid((x0 + 1, y0 + 1), &mut vertices);
            if (x0, y0) == center || (x0 + 1, y0 + 1) == center {
                triangles.push([p00, p10, p11]);
                triangles.push([p00, p11, p01]);
            } else {
                triangles.push([p00, p10, p01]);
                triangles.push([p10, p11, p01]);
            }
        }
    }
    let n = triangles.len();
    Mesh2D::from_triangles(vertices, triangles, vec![0; n]).expect("union-jack mesh is valid")
}

fn base_mesh(shape: Shape) -> Mesh2D {
    match shape {
        Shape::Disk => {
            let mut vertices = vec![[0.0, 0.0]];
            for k in 0..6 {
                let a = std::f64::consts::PI * k as f64 / 3.0;
                vertices.push([a.cos(), a.sin()]);
            }
            let triangles = (0..6).map(|k| [0, 1 + k, 1 + (k + 1) % 6]).collect();
            let mut m = Mesh2D::from_triangles(vertices, triangles, vec![0; 6]).expect("valid disk");
            m.curved = Some(Circle { center: [0.0, 0.0], radius: 1.0 });
            m
        }
        Shape::Square => union_jack(&[(0, 0)], [-0.5, -0.5]),
        Shape::Cross => union_jack(&[(1, 0), (0, 1), (1, 1), (2, 1), (1, 2)], [-1.5, -1.5]),
        Shape::EquilateralTriangle => {
            let h = 3f64.sqrt() / 2.0;
            let vertices = vec![[-0.5, -h / 3.0], [0.5, -h / 3.0], [0.0, 2.0 * h / 3.0]];
            Mesh2D::from_triangles(vertices, vec![[0, 1, 2]], vec![0]).expect("valid triangle")
        }
    }
}

/// Unit-scale canonical shape centered at its centroid. Resolution 1 is the
/// coarse base mesh; each further level is one uniform refinement.
pub fn generate_canonical(shape: Shape, resolution: usize) -> Result<Mesh2D> {
    if resolution == 0 {
        return Err(Error::invalid("resolution must be at least 1"));
    }
    Ok(base_mesh(shape).refined(resolution - 1))
}
