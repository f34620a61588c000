//! Finite-box geometry of Z^d: canonical vertex/edge indexing, vertex and
//! edge boundaries, sub-cubes, central reflection, cube faces, and
//! coordinate parity.
//!
//! Vertices are indexed lexicographically by coordinate (coordinate 0 most
//! significant); edges are indexed by (lower endpoint index, axis). Both
//! orders are fixed so that seeded random draws consumed "in canonical edge
//! order" mean the same thing on every run.

use std::collections::HashSet;

use crate::error::{Result, SwError};

pub type VertexId = u32;
pub type EdgeId = u32;

/// A finite axis-aligned cube of Z^d with free boundary: `side^dim` vertices,
/// all nearest-neighbor edges with both endpoints inside.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LatticeBox {
    dim: usize,
    side: usize,
    anchor: Vec<i64>,
    /// Canonical edge list: ordered by (lower endpoint index, axis).
    edges: Vec<[VertexId; 2]>,
    /// `edge_start[v]..edge_start[v+1]` is the range of edge ids whose lower
    /// endpoint is `v`.
    edge_start: Vec<u32>,
}

impl LatticeBox {
    pub fn new(dim: usize, side: usize, anchor: Vec<i64>) -> Result<Self> {
        if dim == 0 {
            return Err(SwError::Parameter("lattice dimension must be >= 1".into()));
        }
        if side == 0 {
            return Err(SwError::Parameter("lattice side must be >= 1".into()));
        }
        if anchor.len() != dim {
            return Err(SwError::Parameter(format!(
                "anchor has {} coordinates, expected {dim}",
                anchor.len()
            )));
        }
        let n = (side as u128).pow(dim as u32);
        if n > u32::MAX as u128 {
            return Err(SwError::Capacity(format!(
                "side^dim = {n} exceeds the 32-bit vertex index space"
            )));
        }
        let n = n as usize;

        let mut edges = Vec::with_capacity(dim * side.pow(dim as u32 - 1) * (side - 1).max(0));
        let mut edge_start = Vec::with_capacity(n + 1);
        let mut coords = vec![0usize; dim];
        for v in 0..n {
            edge_start.push(edges.len() as u32);
            // Neighbor v + e_axis has index v + stride(axis); it exists
            // whenever the coordinate along `axis` is not on the upper face.
            let mut stride = n;
            for &c in coords.iter() {
                stride /= side;
                if c + 1 < side {
                    edges.push([v as VertexId, (v + stride) as VertexId]);
                }
            }
            // Advance lexicographic counter.
            for axis in (0..dim).rev() {
                coords[axis] += 1;
                if coords[axis] < side {
                    break;
                }
                coords[axis] = 0;
            }
        }
        edge_start.push(edges.len() as u32);

        Ok(Self { dim, side, anchor, edges, edge_start })
    }

    /// Box anchored at the origin.
    pub fn at_origin(dim: usize, side: usize) -> Result<Self> {
        Self::new(dim, side, vec![0; dim])
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn side(&self) -> usize {
        self.side
    }

    pub fn anchor(&self) -> &[i64] {
        &self.anchor
    }

    pub fn vertex_count(&self) -> usize {
        self.side.pow(self.dim as u32)
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[[VertexId; 2]] {
        &self.edges
    }

    pub fn edge_endpoints(&self, e: EdgeId) -> [VertexId; 2] {
        self.edges[e as usize]
    }

    /// Absolute Z^d coordinates of a vertex.
    pub fn vertex_coords(&self, v: VertexId) -> Vec<i64> {
        let mut rem = v as usize;
        let mut coords = vec![0i64; self.dim];
        for axis in (0..self.dim).rev() {
            coords[axis] = self.anchor[axis] + (rem % self.side) as i64;
            rem /= self.side;
        }
        coords
    }

    pub fn contains_point(&self, p: &[i64]) -> bool {
        p.len() == self.dim
            && p.iter().zip(&self.anchor).all(|(&c, &a)| c >= a && c < a + self.side as i64)
    }

    pub fn vertex_index(&self, p: &[i64]) -> Option<VertexId> {
        if !self.contains_point(p) {
            return None;
        }
        let mut idx = 0usize;
        for (axis, &c) in p.iter().enumerate() {
            idx = idx * self.side + (c - self.anchor[axis]) as usize;
        }
        Some(idx as VertexId)
    }

    /// Edge id of the unordered pair `{a, b}`, if it is a box edge.
    pub fn edge_index(&self, a: VertexId, b: VertexId) -> Option<EdgeId> {
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        let start = self.edge_start[lo as usize] as usize;
        let end = self.edge_start[lo as usize + 1] as usize;
        (start..end).find(|&e| self.edges[e][1] == hi).map(|e| e as EdgeId)
    }

    /// In-box nearest neighbors of a vertex (up to 2d of them).
    pub fn neighbors(&self, v: VertexId) -> Vec<VertexId> {
        let coords = self.vertex_coords(v);
        let mut out = Vec::with_capacity(2 * self.dim);
        let mut p = coords.clone();
        for axis in 0..self.dim {
            for delta in [-1i64, 1] {
                p[axis] = coords[axis] + delta;
                if let Some(u) = self.vertex_index(&p) {
                    out.push(u);
                }
            }
            p[axis] = coords[axis];
        }
        out
    }
}

/// A set of box vertices, stored sorted by vertex id.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct VertexRegion {
    verts: Vec<VertexId>,
}

impl VertexRegion {
    pub fn new(mut verts: Vec<VertexId>) -> Self {
        verts.sort_unstable();
        verts.dedup();
        Self { verts }
    }

    pub fn empty() -> Self {
        Self { verts: Vec::new() }
    }

    pub fn len(&self) -> usize {
        self.verts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.verts.is_empty()
    }

    pub fn contains(&self, v: VertexId) -> bool {
        self.verts.binary_search(&v).is_ok()
    }

    pub fn iter(&self) -> impl Iterator<Item = VertexId> + '_ {
        self.verts.iter().copied()
    }

    pub fn as_slice(&self) -> &[VertexId] {
        &self.verts
    }
}

impl FromIterator<VertexId> for VertexRegion {
    fn from_iter<T: IntoIterator<Item = VertexId>>(iter: T) -> Self {
        Self::new(iter.into_iter().collect())
    }
}

/// A set of box edges, stored sorted by edge id.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct EdgeRegion {
    edges: Vec<EdgeId>,
}

impl EdgeRegion {
    pub fn new(mut edges: Vec<EdgeId>) -> Self {
        edges.sort_unstable();
        edges.dedup();
        Self { edges }
    }

    pub fn empty() -> Self {
        Self { edges: Vec::new() }
    }

    pub fn len(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }

    pub fn contains(&self, e: EdgeId) -> bool {
        self.edges.binary_search(&e).is_ok()
    }

    pub fn iter(&self) -> impl Iterator<Item = EdgeId> + '_ {
        self.edges.iter().copied()
    }

    pub fn as_slice(&self) -> &[EdgeId] {
        &self.edges
    }
}

impl FromIterator<EdgeId> for EdgeRegion {
    fn from_iter<T: IntoIterator<Item = EdgeId>>(iter: T) -> Self {
        Self::new(iter.into_iter().collect())
    }
}

/// V(B): all vertices touched by an edge set.
pub fn vertex_set_of_edges(lattice: &LatticeBox, edges: &EdgeRegion) -> VertexRegion {
    edges.iter().flat_map(|e| lattice.edge_endpoints(e)).collect()
}

/// E(A): all edges with both endpoints inside a vertex set.
pub fn edge_set_of_vertices(lattice: &LatticeBox, verts: &VertexRegion) -> EdgeRegion {
    lattice
        .edges()
        .iter()
        .enumerate()
        .filter(|(_, [a, b])| verts.contains(*a) && verts.contains(*b))
        .map(|(e, _)| e as EdgeId)
        .collect()
}

/// Inner vertex boundary: vertices of the region with at least one nearest
/// neighbor in Z^d outside the region. Neighbors outside the box count as
/// outside the region.
pub fn vertex_boundary(lattice: &LatticeBox, region: &VertexRegion) -> VertexRegion {
    let members: HashSet<VertexId> = region.iter().collect();
    region
        .iter()
        .filter(|&v| {
            let coords = lattice.vertex_coords(v);
            let mut p = coords.clone();
            for axis in 0..lattice.dim() {
                for delta in [-1i64, 1] {
                    p[axis] = coords[axis] + delta;
                    let outside = match lattice.vertex_index(&p) {
                        Some(u) => !members.contains(&u),
                        None => true,
                    };
                    if outside {
                        return true;
                    }
                }
                p[axis] = coords[axis];
            }
            false
        })
        .collect()
}

/// Edge boundary: box edges with exactly one endpoint in the region.
pub fn edge_boundary(lattice: &LatticeBox, region: &VertexRegion) -> EdgeRegion {
    lattice
        .edges()
        .iter()
        .enumerate()
        .filter(|(_, [a, b])| region.contains(*a) != region.contains(*b))
        .map(|(e, _)| e as EdgeId)
        .collect()
}

/// An axis-aligned sub-cube B_m(c): the m^d block of vertices whose anchor is
/// `center - floor(m/2) * (1,..,1)`. For even m this is the convention that
/// keeps the point reflection below a bijection on the cube's vertices.
#[derive(Debug, Clone, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct CubeSpec {
    pub center: Vec<i64>,
    pub side: usize,
}

impl CubeSpec {
    pub fn new(center: Vec<i64>, side: usize) -> Self {
        Self { center, side }
    }

    pub fn dim(&self) -> usize {
        self.center.len()
    }

    pub fn anchor(&self) -> Vec<i64> {
        let half = (self.side / 2) as i64;
        self.center.iter().map(|&c| c - half).collect()
    }

    pub fn contains_point(&self, p: &[i64]) -> bool {
        let anchor = self.anchor();
        p.len() == self.dim()
            && p.iter().zip(&anchor).all(|(&c, &a)| c >= a && c < a + self.side as i64)
    }

    pub fn is_inside(&self, lattice: &LatticeBox) -> bool {
        let anchor = self.anchor();
        self.dim() == lattice.dim()
            && anchor.iter().zip(lattice.anchor()).all(|(&a, &b)| a >= b)
            && anchor
                .iter()
                .zip(lattice.anchor())
                .all(|(&a, &b)| a + self.side as i64 <= b + lattice.side() as i64)
    }

    /// All cube vertices as a region of the enclosing box.
    pub fn vertex_region(&self, lattice: &LatticeBox) -> Result<VertexRegion> {
        if !self.is_inside(lattice) {
            return Err(SwError::Placement(format!(
                "cube (center {:?}, side {}) does not fit inside the lattice box",
                self.center, self.side
            )));
        }
        let anchor = self.anchor();
        let dim = self.dim();
        let mut verts = Vec::with_capacity(self.side.pow(dim as u32));
        let mut offs = vec![0usize; dim];
        loop {
            let p: Vec<i64> =
                anchor.iter().zip(&offs).map(|(&a, &o)| a + o as i64).collect();
            verts.push(lattice.vertex_index(&p).expect("cube vertex inside box"));
            let mut axis = dim;
            loop {
                if axis == 0 {
                    return Ok(VertexRegion::new(verts));
                }
                axis -= 1;
                offs[axis] += 1;
                if offs[axis] < self.side {
                    break;
                }
                offs[axis] = 0;
            }
        }
    }

    /// Point reflection through the cube center: `x -> 2*anchor + (m-1) - x`
    /// componentwise. An involution mapping the cube onto itself.
    pub fn reflect_point(&self, p: &[i64]) -> Vec<i64> {
        let anchor = self.anchor();
        anchor
            .iter()
            .zip(p)
            .map(|(&a, &c)| 2 * a + self.side as i64 - 1 - c)
            .collect()
    }

    pub fn reflect_vertex(&self, lattice: &LatticeBox, v: VertexId) -> Result<VertexId> {
        let p = lattice.vertex_coords(v);
        if !self.contains_point(&p) {
            return Err(SwError::Placement(format!(
                "vertex {p:?} lies outside the reflection cube"
            )));
        }
        let r = self.reflect_point(&p);
        lattice
            .vertex_index(&r)
            .ok_or_else(|| SwError::Internal(format!("reflected vertex {r:?} left the box")))
    }

    pub fn reflect_edge(&self, lattice: &LatticeBox, e: EdgeId) -> Result<EdgeId> {
        let [a, b] = lattice.edge_endpoints(e);
        let ra = self.reflect_vertex(lattice, a)?;
        let rb = self.reflect_vertex(lattice, b)?;
        lattice
            .edge_index(ra, rb)
            .ok_or_else(|| SwError::Internal("reflection did not map an edge to an edge".into()))
    }

    /// The d faces with outward normal +e_i, i = 0..d. No face is the image
    /// of another under the central reflection (which maps them to the -e_i
    /// faces).
    pub fn positive_faces(&self, lattice: &LatticeBox) -> Result<Vec<VertexRegion>> {
        if self.side < 2 {
            return Err(SwError::Parameter("cube side must be >= 2 to have faces".into()));
        }
        let verts = self.vertex_region(lattice)?;
        let anchor = self.anchor();
        let mut faces = Vec::with_capacity(self.dim());
        for axis in 0..self.dim() {
            let top = anchor[axis] + self.side as i64 - 1;
            faces.push(
                verts
                    .iter()
                    .filter(|&v| lattice.vertex_coords(v)[axis] == top)
                    .collect(),
            );
        }
        Ok(faces)
    }

    /// Smallest axis i such that `p` lies on the +e_i face, if any.
    pub fn positive_face_axis(&self, p: &[i64]) -> Option<usize> {
        if !self.contains_point(p) {
            return None;
        }
        let anchor = self.anchor();
        (0..self.dim()).find(|&axis| p[axis] == anchor[axis] + self.side as i64 - 1)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Parity {
    Even,
    Odd,
}

/// Parity of |sum of coordinates| (the absolute value does not change it).
pub fn coordinate_parity(p: &[i64]) -> Parity {
    if p.iter().sum::<i64>().rem_euclid(2) == 0 {
        Parity::Even
    } else {
        Parity::Odd
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn vertex_and_edge_counts_match_formulas() {
        for (dim, side) in [(1, 2), (2, 3), (2, 5), (3, 2), (3, 4)] {
            let b = LatticeBox::at_origin(dim, side).unwrap();
            assert_eq!(b.vertex_count(), side.pow(dim as u32));
            assert_eq!(b.edge_count(), dim * side.pow(dim as u32 - 1) * (side - 1));
        }
    }

    #[test]
    fn edges_are_unit_length_and_canonically_ordered() {
        let b = LatticeBox::new(3, 3, vec![-1, 0, 2]).unwrap();
        let mut prev = None;
        for (e, &[lo, hi]) in b.edges().iter().enumerate() {
            assert!(lo < hi);
            let a = b.vertex_coords(lo);
            let c = b.vertex_coords(hi);
            let dist2: i64 = a.iter().zip(&c).map(|(x, y)| (x - y) * (x - y)).sum();
            assert_eq!(dist2, 1);
            assert_eq!(b.edge_index(lo, hi), Some(e as EdgeId));
            assert_eq!(b.edge_index(hi, lo), Some(e as EdgeId));
            if let Some(p) = prev {
                assert!(lo >= p);
            }
            prev = Some(lo);
        }
    }

    #[test]
    fn vertex_boundary_of_full_3x3_box_is_the_perimeter() {
        let b = LatticeBox::at_origin(2, 3).unwrap();
        let all: VertexRegion = (0..b.vertex_count() as VertexId).collect();
        let bd = vertex_boundary(&b, &all);
        assert_eq!(bd.len(), 8);
        let center = b.vertex_index(&[1, 1]).unwrap();
        assert!(!bd.contains(center));
    }

    #[test]
    fn vertex_boundary_of_single_vertex_is_itself() {
        let b = LatticeBox::at_origin(2, 5).unwrap();
        let v = b.vertex_index(&[2, 2]).unwrap();
        let r = VertexRegion::new(vec![v]);
        assert_eq!(vertex_boundary(&b, &r), r);
    }

    #[test]
    fn vertex_boundary_of_2x2_block_is_all_four() {
        // B_2: every vertex of a 2x2 square has a neighbor outside it.
        let b = LatticeBox::at_origin(2, 6).unwrap();
        let cube = CubeSpec::new(vec![3, 3], 2);
        let r = cube.vertex_region(&b).unwrap();
        assert_eq!(r.len(), 4);
        assert_eq!(vertex_boundary(&b, &r), r);
    }

    #[test]
    fn edge_boundary_of_interior_2x2_block_has_8_edges() {
        let b = LatticeBox::at_origin(2, 6).unwrap();
        let cube = CubeSpec::new(vec![3, 3], 2);
        let r = cube.vertex_region(&b).unwrap();
        assert_eq!(edge_boundary(&b, &r).len(), 8);
    }

    #[test]
    fn edge_boundary_of_entire_box_is_empty() {
        let b = LatticeBox::at_origin(2, 4).unwrap();
        let all: VertexRegion = (0..b.vertex_count() as VertexId).collect();
        assert!(edge_boundary(&b, &all).is_empty());
    }

    #[test]
    fn edge_boundary_of_b2l_matches_closed_form() {
        // |edge boundary of B_{2l}| = d * 2^d * l^(d-1).
        for dim in [2usize, 3] {
            for l in [1usize, 2, 3] {
                let side = 4 * l + 4;
                let b = LatticeBox::at_origin(dim, side).unwrap();
                let c = vec![(side / 2) as i64; dim];
                let cube = CubeSpec::new(c, 2 * l);
                let r = cube.vertex_region(&b).unwrap();
                let expected = dim * 2usize.pow(dim as u32) * l.pow(dim as u32 - 1);
                assert_eq!(edge_boundary(&b, &r).len(), expected, "d={dim} l={l}");
            }
        }
    }

    #[test]
    fn edge_boundary_edges_have_exactly_one_endpoint_inside() {
        let b = LatticeBox::at_origin(2, 7).unwrap();
        let cube = CubeSpec::new(vec![3, 3], 4);
        let r = cube.vertex_region(&b).unwrap();
        for e in edge_boundary(&b, &r).iter() {
            let [a, c] = b.edge_endpoints(e);
            assert!(r.contains(a) != r.contains(c));
        }
    }

    #[test]
    fn reflection_is_an_involution_and_hits_the_opposite_corner() {
        let b = LatticeBox::at_origin(2, 4).unwrap();
        let cube = CubeSpec::new(vec![2, 2], 4);
        assert_eq!(cube.anchor(), vec![0, 0]);
        let v = b.vertex_index(&[0, 0]).unwrap();
        let rv = cube.reflect_vertex(&b, v).unwrap();
        assert_eq!(b.vertex_coords(rv), vec![3, 3]);
        for v in 0..b.vertex_count() as VertexId {
            let rv = cube.reflect_vertex(&b, v).unwrap();
            assert_eq!(cube.reflect_vertex(&b, rv).unwrap(), v);
        }
    }

    #[test]
    fn reflection_is_a_graph_automorphism_of_the_cube() {
        for (dim, side) in [(2usize, 4usize), (3, 2), (2, 6)] {
            let b = LatticeBox::at_origin(dim, side + 2).unwrap();
            let c = vec![(side / 2 + 1) as i64; dim];
            let cube = CubeSpec::new(c, side);
            let verts = cube.vertex_region(&b).unwrap();
            let inner = edge_set_of_vertices(&b, &verts);
            for e in inner.iter() {
                let re = cube.reflect_edge(&b, e).unwrap();
                assert!(inner.contains(re));
                assert_eq!(cube.reflect_edge(&b, re).unwrap(), e);
            }
        }
    }

    #[test]
    fn reflection_outside_cube_is_a_placement_error() {
        let b = LatticeBox::at_origin(2, 8).unwrap();
        let cube = CubeSpec::new(vec![2, 2], 4);
        let v = b.vertex_index(&[7, 7]).unwrap();
        assert!(matches!(cube.reflect_vertex(&b, v), Err(SwError::Placement(_))));
    }

    #[test]
    fn no_positive_face_is_the_reflection_of_another() {
        let b = LatticeBox::at_origin(3, 6).unwrap();
        let cube = CubeSpec::new(vec![3, 3, 3], 4);
        let faces = cube.positive_faces(&b).unwrap();
        assert_eq!(faces.len(), 3);
        for f in &faces {
            assert_eq!(f.len(), 16); // 4^2 vertices per face at side 4
        }
        // R sends the +e_i face to the -e_i face, so no chosen face is the
        // image of a chosen face, and each face misses its own image
        // entirely. (Corner vertices of face i may still individually land
        // on face j != i.)
        for fi in &faces {
            let image: VertexRegion =
                fi.iter().map(|v| cube.reflect_vertex(&b, v).unwrap()).collect();
            for fj in &faces {
                assert_ne!(&image, fj);
            }
            assert!(fi.iter().all(|v| !image.contains(v)));
        }
    }

    #[test]
    fn two_positive_faces_in_the_plane() {
        let b = LatticeBox::at_origin(2, 6).unwrap();
        let cube = CubeSpec::new(vec![3, 3], 4);
        let faces = cube.positive_faces(&b).unwrap();
        assert_eq!(faces.len(), 2);
        assert!(faces.iter().all(|f| f.len() == 4));
    }

    #[test]
    fn nested_cubes_are_ordered_by_inclusion() {
        // B_l inside B_2l inside B_{2(l+1)} inside B_4l for l >= 2.
        let b = LatticeBox::at_origin(2, 20).unwrap();
        for l in [2usize, 3, 4] {
            let c = vec![10i64, 10];
            let chain = [
                CubeSpec::new(c.clone(), l),
                CubeSpec::new(c.clone(), 2 * l),
                CubeSpec::new(c.clone(), 2 * (l + 1)),
                CubeSpec::new(c.clone(), 4 * l),
            ];
            for w in chain.windows(2) {
                let small = w[0].vertex_region(&b).unwrap();
                let large = w[1].vertex_region(&b).unwrap();
                assert!(small.iter().all(|v| large.contains(v)));
                assert!(small.len() < large.len());
            }
        }
    }

    #[test]
    fn parity_examples() {
        assert_eq!(coordinate_parity(&[0, 0]), Parity::Even);
        assert_eq!(coordinate_parity(&[1, 0]), Parity::Odd);
        assert_eq!(coordinate_parity(&[2, 3, 1]), Parity::Even);
        assert_eq!(coordinate_parity(&[-3, 0]), Parity::Odd);
    }

    proptest! {
        #[test]
        fn vertex_of_edge_of_vertex_shrinks(seed in 0u64..1000) {
            let b = LatticeBox::at_origin(2, 5).unwrap();
            let n = b.vertex_count();
            let verts: VertexRegion = (0..n as VertexId)
                .filter(|v| (seed >> (v % 31)) & 1 == 1 || (v * 7 + seed as u32) % 3 == 0)
                .collect();
            let back = vertex_set_of_edges(&b, &edge_set_of_vertices(&b, &verts));
            prop_assert!(back.iter().all(|v| verts.contains(v)));
        }

        #[test]
        fn edge_of_vertex_of_edge_is_identity(seed in 0u64..1000) {
            let b = LatticeBox::at_origin(2, 5).unwrap();
            let m = b.edge_count();
            let edges: EdgeRegion = (0..m as EdgeId)
                .filter(|e| (seed.wrapping_mul(2654435761) >> (e % 29)) & 1 == 1)
                .collect();
            // E_1 is always contained in E(V(E_1)). Strict equality can fail:
            // two opposite sides of a unit square already span all four of its
            // edges, so only the inclusion is asserted.
            let back = edge_set_of_vertices(&b, &vertex_set_of_edges(&b, &edges));
            prop_assert!(edges.iter().all(|e| back.contains(e)));
        }
    }
}
