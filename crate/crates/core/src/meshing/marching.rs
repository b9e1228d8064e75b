use std::collections::HashMap;

use rayon::prelude::*;

use crate::geometry::Vec3;

use super::tables::{EDGE_TABLE, TRIANGLE_TABLE};
use super::{TriangleMesh, TsdfVolume};

/// Corner offsets of a cell in table order.
const CORNERS: [[usize; 3]; 8] = [[0, 0, 0], [1, 0, 0], [1, 1, 0], [0, 1, 0], [0, 0, 1], [1, 0, 1], [1, 1, 1], [0, 1, 1]];

/// Corner pairs of the twelve cell edges in table order.
const EDGES: [[usize; 2]; 12] = [[0, 1], [1, 2], [2, 3], [3, 0], [4, 5], [5, 6], [6, 7], [7, 4], [0, 4], [1, 5], [2, 6], [3, 7]];

/// A grid edge: lower endpoint voxel index and axis.
type EdgeKey = (usize, u8);

fn edge_key(v: &TsdfVolume, cell: [usize; 3], edge: usize) -> EdgeKey {
    let [a, b] = EDGES[edge];
    let (ca, cb) = (CORNERS[a], CORNERS[b]);
    let lo = [0, 1, 2].map(|k| cell[k] + ca[k].min(cb[k]));
    let axis = (0..3).find(|&k| ca[k] != cb[k]).expect("edge spans one axis") as u8;
    (v.index(lo[0], lo[1], lo[2]), axis)
}

/// Triangles of one z-layer of cells as edge keys with their interpolated
/// positions.
fn slab_triangles(v: &TsdfVolume, z: usize) -> Vec<[(EdgeKey, Vec3); 3]> {
    let [nx, ny, _] = v.dims;
    let mut out = Vec::new();
    for y in 0..ny - 1 {
        for x in 0..nx - 1 {
            let cell = [x, y, z];
            let mut vals = [0.0; 8];
            let mut observed = true;
            for (c, off) in CORNERS.iter().enumerate() {
                let i = v.index(x + off[0], y + off[1], z + off[2]);
                if v.weight[i] <= 0.0 {
                    observed = false;
                    break;
                }
                vals[c] = v.tsdf[i];
            }
            if !observed {
                continue;
            }
            let case = (0..8).fold(0usize, |acc, c| acc | (((vals[c] < 0.0) as usize) << c));
            if EDGE_TABLE[case] == 0 {
                continue;
            }
            // gradient direction of the cell, for orientation
            let grad = Vec3::new(
                vals[1] - vals[0] + vals[2] - vals[3] + vals[5] - vals[4] + vals[6] - vals[7],
                vals[3] - vals[0] + vals[2] - vals[1] + vals[7] - vals[4] + vals[6] - vals[5],
                vals[4] - vals[0] + vals[5] - vals[1] + vals[6] - vals[2] + vals[7] - vals[3],
            );
            let mut pos = [None; 12];
            for (e, p) in pos.iter_mut().enumerate() {
                if EDGE_TABLE[case] & (1 << e) == 0 {
                    continue;
                }
                let [a, b] = EDGES[e];
                let pa = v.voxel_center(x + CORNERS[a][0], y + CORNERS[a][1], z + CORNERS[a][2]);
                let pb = v.voxel_center(x + CORNERS[b][0], y + CORNERS[b][1], z + CORNERS[b][2]);
                let t = vals[a] / (vals[a] - vals[b]);
                *p = Some((edge_key(v, cell, e), pa + (pb - pa) * t));
            }
            for tri in TRIANGLE_TABLE[case].chunks(3).take_while(|t| t[0] >= 0) {
                let mut t = [0, 1, 2].map(|k| pos[tri[k] as usize].expect("edge in table"));
                let n = (t[1].1 - t[0].1).cross(&(t[2].1 - t[0].1));
                if n.dot(&grad) < 0.0 {
                    t.swap(1, 2);
                }
                out.push(t);
            }
        }
    }
    out
}

/// Marching cubes over the zero level set of the fused volume. Cells with
/// an unobserved corner are skipped, vertices are shared along grid edges,
/// zero-area triangles are dropped and every triangle faces the positive
/// side. The output is ordered by cell index.
pub fn extract_mesh(v: &TsdfVolume) -> TriangleMesh {
    let mut mesh = TriangleMesh::default();
    if v.dims.iter().any(|&d| d < 2) {
        return mesh;
    }
    let slabs: Vec<_> = (0..v.dims[2] - 1).into_par_iter().map(|z| slab_triangles(v, z)).collect();
    let mut index: HashMap<EdgeKey, u32> = HashMap::new();
    let min_area2 = (1e-12 * v.voxel_size * v.voxel_size).powi(2);
    for tri in slabs.into_iter().flatten() {
        let ids = tri.map(|(key, p)| {
            *index.entry(key).or_insert_with(|| {
                mesh.vertices.push([p.x, p.y, p.z]);
                (mesh.vertices.len() - 1) as u32
            })
        });
        if ids[0] == ids[1] || ids[1] == ids[2] || ids[0] == ids[2] {
            continue;
        }
        let n = (tri[1].1 - tri[0].1).cross(&(tri[2].1 - tri[0].1));
        if n.norm_squared() <= min_area2 {
            continue;
        }
        mesh.triangles.push(ids);
    }
    let mut normals = vec![Vec3::zeros(); mesh.vertices.len()];
    for t in 0..mesh.triangles.len() {
        let n = mesh.triangle_cross(t);
        for &i in &mesh.triangles[t] {
            normals[i as usize] += n;
        }
    }
    mesh.normals = Some(
        normals
            .into_iter()
            .map(|n| {
                let n = n.try_normalize(0.0).unwrap_or_else(Vec3::zeros);
                [n.x, n.y, n.z]
            })
            .collect(),
    );
    mesh
}
