use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::Vec3;

use super::TriangleMesh;

/// Uniform bucket grid for exact nearest-neighbor queries.
pub struct PointGrid<'a> {
    points: &'a [Vec3],
    min: Vec3,
    cell: f64,
    dims: [usize; 3],
    /// CSR layout: points of cell `c` are `order[starts[c]..starts[c + 1]]`.
    starts: Vec<u32>,
    order: Vec<u32>,
}

impl<'a> PointGrid<'a> {
    pub fn new(points: &'a [Vec3]) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::EmptyInput("no points".into()));
        }
        let mut min = points[0];
        let mut max = points[0];
        for p in points {
            min = min.inf(p);
            max = max.sup(p);
        }
        let ext = max - min;
        let longest = ext.max().max(1e-12);
        let per_axis = (points.len() as f64).cbrt().ceil().max(1.0);
        let cell = longest / per_axis;
        let dims = [0, 1, 2].map(|a| (ext[a] / cell).floor() as usize + 1);
        let mut grid = Self { points, min, cell, dims, starts: Vec::new(), order: Vec::new() };
        let n_cells = dims[0] * dims[1] * dims[2];
        let cells: Vec<usize> = points.iter().map(|p| grid.cell_index(grid.cell_of(p))).collect();
        let mut counts = vec![0u32; n_cells + 1];
        for &c in &cells {
            counts[c + 1] += 1;
        }
        for c in 0..n_cells {
            counts[c + 1] += counts[c];
        }
        let mut fill = counts.clone();
        let mut order = vec![0u32; points.len()];
        for (i, &c) in cells.iter().enumerate() {
            order[fill[c] as usize] = i as u32;
            fill[c] += 1;
        }
        grid.starts = counts;
        grid.order = order;
        Ok(grid)
    }

    fn cell_of(&self, p: &Vec3) -> [usize; 3] {
        [0, 1, 2].map(|a| (((p[a] - self.min[a]) / self.cell).floor().max(0.0) as usize).min(self.dims[a] - 1))
    }

    fn cell_index(&self, c: [usize; 3]) -> usize {
        c[0] + self.dims[0] * (c[1] + self.dims[1] * c[2])
    }

    /// Inserts the squared distances of cell `c` into the sorted `best` list
    /// of at most `k` entries, skipping point `skip`.
    fn scan_cell(&self, c: [usize; 3], q: &Vec3, k: usize, skip: Option<usize>, best: &mut Vec<f64>) {
        let ci = self.cell_index(c);
        for &i in &self.order[self.starts[ci] as usize..self.starts[ci + 1] as usize] {
            if skip == Some(i as usize) {
                continue;
            }
            let d = (self.points[i as usize] - q).norm_squared();
            if best.len() < k || d < best[k - 1] {
                let at = best.partition_point(|&b| b <= d);
                best.insert(at, d);
                best.truncate(k);
            }
        }
    }

    /// Exact distance from `q` to the nearest stored point.
    pub fn nearest_distance(&self, q: &Vec3) -> f64 {
        self.nearest_k(q, 1, None)[0]
    }

    /// Exact distances from `q` to its `k` nearest stored points, ascending,
    /// ignoring the point with index `skip`. Returns fewer than `k` values
    /// when fewer points are available.
    pub fn nearest_k(&self, q: &Vec3, k: usize, skip: Option<usize>) -> Vec<f64> {
        let qc = self.cell_of(q);
        let mut best = Vec::with_capacity(k + 1);
        if k == 0 {
            return best;
        }
        let max_r = *self.dims.iter().max().expect("three axes");
        for r in 0..=max_r {
            let lo = [0, 1, 2].map(|a| qc[a].saturating_sub(r));
            let hi = [0, 1, 2].map(|a| (qc[a] + r).min(self.dims[a] - 1));
            for z in lo[2]..=hi[2] {
                for y in lo[1]..=hi[1] {
                    for x in lo[0]..=hi[0] {
                        let shell = [x, y, z].iter().zip(&qc).any(|(&c, &q)| c.abs_diff(q) == r);
                        if shell {
                            self.scan_cell([x, y, z], q, k, skip, &mut best);
                        }
                    }
                }
            }
            // lower bound on the distance to any cell outside the visited block
            let mut bound = f64::INFINITY;
            for a in 0..3 {
                if qc[a] > r {
                    bound = bound.min(q[a] - (self.min[a] + (qc[a] - r) as f64 * self.cell));
                }
                if qc[a] + r < self.dims[a] - 1 {
                    bound = bound.min(self.min[a] + (qc[a] + r + 1) as f64 * self.cell - q[a]);
                }
            }
            if bound == f64::INFINITY {
                break;
            }
            let bound = bound.max(0.0);
            if best.len() == k && best[k - 1] <= bound * bound {
                break;
            }
        }
        best.iter_mut().for_each(|d| *d = d.sqrt());
        best
    }
}

/// Distance from each query point to its nearest neighbor in `targets`.
pub fn nearest_distances(queries: &[Vec3], targets: &[Vec3]) -> Result<Vec<f64>> {
    let grid = PointGrid::new(targets)?;
    Ok(queries.par_iter().map(|q| grid.nearest_distance(q)).collect())
}

/// Symmetric Chamfer distance: the average of the two mean
/// nearest-neighbor distances.
pub fn chamfer_distance(a: &[Vec3], b: &[Vec3]) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::EmptyInput("Chamfer distance of an empty point set".into()));
    }
    let ab = nearest_distances(a, b)?;
    let ba = nearest_distances(b, a)?;
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    Ok(0.5 * (mean(&ab) + mean(&ba)))
}

/// Chamfer distance between `samples` seeded surface samples of each mesh.
pub fn mesh_chamfer(a: &TriangleMesh, b: &TriangleMesh, samples: usize, seed: u64) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::EmptyInput("Chamfer distance of an empty mesh".into()));
    }
    let pa = a.sample_surface(samples, seed)?;
    let pb = b.sample_surface(samples, seed.wrapping_add(1))?;
    chamfer_distance(&pa, &pb)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn brute_force(q: &Vec3, pts: &[Vec3]) -> f64 {
        pts.iter().map(|p| (p - q).norm_squared()).fold(f64::INFINITY, f64::min).sqrt()
    }

    fn plane(z: f64) -> TriangleMesh {
        TriangleMesh {
            vertices: vec![[0.0, 0.0, z], [1.0, 0.0, z], [1.0, 1.0, z], [0.0, 1.0, z]],
            triangles: vec![[0, 1, 2], [0, 2, 3]],
            normals: None,
            colors: None,
        }
    }

    #[test]
    fn identical_point_sets_have_zero_distance() {
        let pts: Vec<Vec3> = (0..50).map(|i| Vec3::new(i as f64, (i * i) as f64 * 0.1, 1.0)).collect();
        assert_eq!(chamfer_distance(&pts, &pts).unwrap(), 0.0);
    }

    #[test]
    fn parallel_planes_are_offset_apart() {
        // same seeds give the same in-plane samples on both planes
        let a = plane(0.0).sample_surface(400, 9).unwrap();
        let b: Vec<Vec3> = a.iter().map(|p| p + Vec3::new(0.0, 0.0, 0.25)).collect();
        assert!((chamfer_distance(&a, &b).unwrap() - 0.25).abs() < 1e-12);
        let d = mesh_chamfer(&plane(0.0), &plane(0.25), 2000, 1).unwrap();
        assert!((d - 0.25).abs() < 0.01);
    }

    #[test]
    fn empty_input_is_an_error() {
        assert!(chamfer_distance(&[], &[Vec3::zeros()]).is_err());
        assert!(mesh_chamfer(&TriangleMesh::default(), &plane(0.0), 10, 0).is_err());
    }

    #[test]
    fn clustered_and_outside_queries_are_exact() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut pts: Vec<Vec3> = (0..300).map(|_| Vec3::new(rng.gen(), rng.gen(), rng.gen()) * 0.01).collect();
        pts.push(Vec3::new(5.0, 5.0, 5.0));
        let grid = PointGrid::new(&pts).unwrap();
        for _ in 0..200 {
            let q = Vec3::new(rng.gen_range(-3.0..8.0), rng.gen_range(-3.0..8.0), rng.gen_range(-3.0..8.0));
            assert_eq!(grid.nearest_distance(&q), brute_force(&q, &pts));
        }
    }

    proptest! {
        #[test]
        fn grid_search_matches_brute_force(seed in 0u64..1000, n in 1usize..200, m in 1usize..50) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let pts: Vec<Vec3> = (0..n).map(|_| Vec3::new(rng.gen_range(-1.0..1.0), rng.gen_range(-2.0..2.0), rng.gen_range(0.0..0.3))).collect();
            let qs: Vec<Vec3> = (0..m).map(|_| Vec3::new(rng.gen_range(-1.5..1.5), rng.gen_range(-2.5..2.5), rng.gen_range(-0.5..0.8))).collect();
            let fast = nearest_distances(&qs, &pts).unwrap();
            for (q, f) in qs.iter().zip(&fast) {
                prop_assert!((f - brute_force(q, &pts)).abs() <= 1e-12);
            }
        }

        #[test]
        fn k_nearest_matches_brute_force(seed in 0u64..1000, n in 1usize..120, k in 1usize..5) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let pts: Vec<Vec3> = (0..n).map(|_| Vec3::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-0.1..0.1))).collect();
            let grid = PointGrid::new(&pts).unwrap();
            for (i, q) in pts.iter().enumerate() {
                let mut all: Vec<f64> = pts.iter().enumerate().filter(|(j, _)| *j != i).map(|(_, p)| (p - q).norm()).collect();
                all.sort_by(f64::total_cmp);
                all.truncate(k);
                let fast = grid.nearest_k(q, k, Some(i));
                prop_assert_eq!(fast.len(), all.len());
                for (a, b) in fast.iter().zip(&all) {
                    prop_assert!((a - b).abs() <= 1e-12);
                }
            }
        }
    }
}
