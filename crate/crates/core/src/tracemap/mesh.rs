use std::collections::HashMap;
use std::io::{self, Write};

use super::{fricke_vogt, fricke_vogt_gradient, TraceTriple};
use crate::error::{Error, Result};

pub const MIN_MESH_RESOLUTION: usize = 8;

const PROJECTION_STEPS: usize = 8;

/// Triangle soup with shared vertices.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct TriangleMesh {
    pub vertices: Vec<[f64; 3]>,
    pub triangles: Vec<[usize; 3]>,
}

impl TriangleMesh {
    /// Connected-component label per vertex, labels numbered from 0 in
    /// order of first vertex.
    pub fn component_labels(&self) -> Vec<usize> {
        let mut parent: Vec<usize> = (0..self.vertices.len()).collect();
        fn find(parent: &mut [usize], mut i: usize) -> usize {
            while parent[i] != i {
                parent[i] = parent[parent[i]];
                i = parent[i];
            }
            i
        }
        for t in &self.triangles {
            for k in 0..3 {
                let (a, b) = (find(&mut parent, t[k]), find(&mut parent, t[(k + 1) % 3]));
                if a != b {
                    parent[a.max(b)] = a.min(b);
                }
            }
        }
        let mut labels = vec![usize::MAX; self.vertices.len()];
        let mut remap = HashMap::new();
        for (i, label) in labels.iter_mut().enumerate() {
            let root = find(&mut parent, i);
            let next = remap.len();
            *label = *remap.entry(root).or_insert(next);
        }
        labels
    }

    pub fn component_count(&self) -> usize {
        self.component_labels().into_iter().max().map_or(0, |m| m + 1)
    }

    /// Largest `|I(v) - level|` over the vertices.
    pub fn max_residual(&self, level: f64) -> f64 {
        self.vertices
            .iter()
            .map(|&[x, y, z]| (fricke_vogt(TraceTriple::new(x, y, z)) - level).abs())
            .fold(0.0, f64::max)
    }

    /// Wavefront OBJ; `header` lines are written as `#` comments.
    pub fn write_obj<W: Write>(&self, out: &mut W, header: &[String]) -> io::Result<()> {
        for line in header {
            writeln!(out, "# {line}")?;
        }
        for v in &self.vertices {
            writeln!(out, "v {:.16e} {:.16e} {:.16e}", v[0], v[1], v[2])?;
        }
        for t in &self.triangles {
            writeln!(out, "f {} {} {}", t[0] + 1, t[1] + 1, t[2] + 1)?;
        }
        Ok(())
    }

    /// One row `x,y,z,triangle_id` per triangle corner.
    pub fn write_csv<W: Write>(&self, out: &mut W, header: &[String]) -> io::Result<()> {
        for line in header {
            writeln!(out, "# {line}")?;
        }
        writeln!(out, "x,y,z,triangle_id")?;
        for (id, t) in self.triangles.iter().enumerate() {
            for &i in t {
                let v = self.vertices[i];
                writeln!(out, "{:.16e},{:.16e},{:.16e},{id}", v[0], v[1], v[2])?;
            }
        }
        Ok(())
    }
}

fn sub(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

fn cross(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]]
}

fn dot(a: [f64; 3], b: [f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn invariant_at(p: [f64; 3]) -> f64 {
    fricke_vogt(TraceTriple::new(p[0], p[1], p[2]))
}

/// Newton steps along the gradient, each capped at `max_step`; keeps the
/// best point seen.
fn project(mut p: [f64; 3], level: f64, max_step: f64) -> [f64; 3] {
    let mut best = p;
    let mut best_res = (invariant_at(p) - level).abs();
    for _ in 0..PROJECTION_STEPS {
        if best_res <= 1e-13 {
            break;
        }
        let r = invariant_at(p) - level;
        let g = fricke_vogt_gradient(p);
        let g2 = dot(g, g);
        if g2 < 1e-24 {
            break;
        }
        let mut d = g.map(|gi| -r * gi / g2);
        let len = dot(d, d).sqrt();
        if len > max_step {
            d = d.map(|di| di * max_step / len);
        }
        p = [p[0] + d[0], p[1] + d[1], p[2] + d[2]];
        let res = (invariant_at(p) - level).abs();
        if res < best_res {
            best = p;
            best_res = res;
        }
    }
    best
}

// Six tetrahedra around the cube diagonal 0-7; corner bit k is the offset along axis k.
const TETRAHEDRA: [[usize; 4]; 6] = [
    [0, 1, 3, 7],
    [0, 1, 5, 7],
    [0, 2, 3, 7],
    [0, 2, 6, 7],
    [0, 4, 5, 7],
    [0, 4, 6, 7],
];

/// Triangulates `{I(x, y, z) = level}` inside `[-half_width, half_width]^3`
/// on a grid with `resolution` cells per axis, each cube split into six
/// tetrahedra. Vertices are projected back onto the surface by Newton steps.
pub fn surface_mesh(level: f64, half_width: f64, resolution: usize) -> Result<TriangleMesh> {
    if resolution < MIN_MESH_RESOLUTION {
        return Err(Error::InvalidArgument(format!(
            "mesh resolution must be at least {MIN_MESH_RESOLUTION}"
        )));
    }
    if !(half_width.is_finite() && half_width > 0.0) || !level.is_finite() {
        return Err(Error::InvalidArgument("mesh bounds and level must be finite".into()));
    }
    let n = resolution + 1;
    let h = 2.0 * half_width / resolution as f64;
    let coord = |i: usize| -half_width + i as f64 * h;
    let index = |i: usize, j: usize, k: usize| (i * n + j) * n + k;
    let mut field = vec![0.0; n * n * n];
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                field[index(i, j, k)] = invariant_at([coord(i), coord(j), coord(k)]) - level;
            }
        }
    }
    let point = |g: usize| {
        let (i, rest) = (g / (n * n), g % (n * n));
        [coord(i), coord(rest / n), coord(rest % n)]
    };

    let mut mesh = TriangleMesh::default();
    let mut edge_vertex: HashMap<(usize, usize), usize> = HashMap::new();
    let mut vertex_on = |a: usize, b: usize, mesh: &mut TriangleMesh| -> usize {
        let key = (a.min(b), a.max(b));
        *edge_vertex.entry(key).or_insert_with(|| {
            let (fa, fb) = (field[a], field[b]);
            let t = fa / (fa - fb);
            let (pa, pb) = (point(a), point(b));
            let p = [
                pa[0] + t * (pb[0] - pa[0]),
                pa[1] + t * (pb[1] - pa[1]),
                pa[2] + t * (pb[2] - pa[2]),
            ];
            mesh.vertices.push(project(p, level, h));
            mesh.vertices.len() - 1
        })
    };
    let emit = |tri: [usize; 3], mesh: &mut TriangleMesh| {
        if tri[0] == tri[1] || tri[1] == tri[2] || tri[0] == tri[2] {
            return;
        }
        let [p, q, r] = tri.map(|v| mesh.vertices[v]);
        let normal = cross(sub(q, p), sub(r, p));
        let centroid = [(p[0] + q[0] + r[0]) / 3.0, (p[1] + q[1] + r[1]) / 3.0, (p[2] + q[2] + r[2]) / 3.0];
        // normals point toward increasing I
        if dot(normal, fricke_vogt_gradient(centroid)) < 0.0 {
            mesh.triangles.push([tri[0], tri[2], tri[1]]);
        } else {
            mesh.triangles.push(tri);
        }
    };

    for i in 0..resolution {
        for j in 0..resolution {
            for k in 0..resolution {
                let corner = |bits: usize| index(i + (bits & 1), j + ((bits >> 1) & 1), k + ((bits >> 2) & 1));
                for tet in TETRAHEDRA {
                    let g = tet.map(corner);
                    let neg: Vec<usize> = g.iter().copied().filter(|&v| field[v] < 0.0).collect();
                    let pos: Vec<usize> = g.iter().copied().filter(|&v| field[v] >= 0.0).collect();
                    match neg.len() {
                        1 | 3 => {
                            let (lone, rest) = if neg.len() == 1 { (neg[0], &pos) } else { (pos[0], &neg) };
                            let tri = [
                                vertex_on(lone, rest[0], &mut mesh),
                                vertex_on(lone, rest[1], &mut mesh),
                                vertex_on(lone, rest[2], &mut mesh),
                            ];
                            emit(tri, &mut mesh);
                        }
                        2 => {
                            let a = vertex_on(neg[0], pos[0], &mut mesh);
                            let b = vertex_on(neg[0], pos[1], &mut mesh);
                            let c = vertex_on(neg[1], pos[1], &mut mesh);
                            let d = vertex_on(neg[1], pos[0], &mut mesh);
                            emit([a, b, c], &mut mesh);
                            emit([a, c, d], &mut mesh);
                        }
                        _ => {}
                    }
                }
            }
        }
    }
    Ok(mesh)
}
