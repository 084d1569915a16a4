//! Layered {7,4} heptagon tiling and the holographic Steane code network.

use serde::{Deserialize, Serialize};

use crate::compose::{CodeTensor, NodeLeg, TensorNetworkCode};
use crate::error::{Error, Result};

pub const DEFAULT_MAX_RADIUS_FLAT: usize = 6;
pub const MAX_RADIUS_GRAPH: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Slot {
    /// Edge shared with a tile in the previous layer.
    In(usize),
    /// Edge shared with a tile in the next layer.
    Child(usize),
    Boundary,
}

#[derive(Debug, Clone)]
pub struct Tile {
    /// 1 for the central tile.
    pub layer: usize,
    pub slots: [Slot; 7],
    /// Vertex ids; vertex i is where slot i starts.
    pub vertices: [usize; 7],
    /// Parent tiles in contraction order: the later ring neighbour first.
    pub parents: Vec<usize>,
}

impl Tile {
    pub fn in_degree(&self) -> usize {
        self.parents.len()
    }

    /// Steane leg (0-based) used for a slot. Two-parent tiles put their in-edges on legs 6 and 7.
    pub fn leg_of_slot(&self, slot: usize) -> usize {
        if self.parents.len() == 2 {
            (slot + 5) % 7
        } else {
            slot
        }
    }
}

#[derive(Debug, Clone)]
pub struct TileGraph {
    pub tiles: Vec<Tile>,
    pub layers: Vec<Vec<usize>>,
    pub vertex_count: usize,
}

struct VertexAlloc(usize);

impl VertexAlloc {
    fn fresh(&mut self) -> usize {
        self.0 += 1;
        self.0 - 1
    }
}

pub fn build_tiling(radius: usize) -> Result<TileGraph> {
    if radius == 0 {
        return Err(Error::InvalidArgument("radius must be at least 1".into()));
    }
    let mut alloc = VertexAlloc(0);
    let centre = Tile {
        layer: 1,
        slots: [Slot::Boundary; 7],
        vertices: std::array::from_fn(|_| alloc.fresh()),
        parents: vec![],
    };
    let mut tiles = vec![centre];
    let mut layers = vec![vec![0usize]];

    for layer in 1..radius {
        let ring = layers[layer - 1].clone();
        let mut next = Vec::new();
        let add = |tiles: &mut Vec<Tile>, next: &mut Vec<usize>, t: Tile| {
            tiles.push(t);
            next.push(tiles.len() - 1);
        };
        if layer == 1 {
            for s in 0..7 {
                let t = edge_child(&mut tiles, 0, s, &mut alloc);
                add(&mut tiles, &mut next, t);
            }
        } else {
            let m = ring.len();
            for i in 0..m {
                let (prev, cur) = (ring[(i + m - 1) % m], ring[i]);
                let t = vertex_child(&mut tiles, prev, cur, &mut alloc);
                add(&mut tiles, &mut next, t);
                for s in child_slots(&tiles[cur]) {
                    let t = edge_child(&mut tiles, cur, s, &mut alloc);
                    add(&mut tiles, &mut next, t);
                }
            }
        }
        layers.push(next);
    }
    Ok(TileGraph {
        tiles,
        layers,
        vertex_count: alloc.0,
    })
}

/// Slots of a tile that lead to edge-children.
fn child_slots(t: &Tile) -> std::ops::Range<usize> {
    if t.layer == 1 {
        0..7
    } else if t.parents.len() == 1 {
        2..6
    } else {
        3..6
    }
}

/// Slot facing the vertex-child shared with the previous ring neighbour.
fn prev_slot(t: &Tile) -> usize {
    if t.parents.len() == 1 {
        1
    } else {
        2
    }
}

const NEXT_SLOT: usize = 6;

fn edge_child(tiles: &mut [Tile], parent: usize, s: usize, alloc: &mut VertexAlloc) -> Tile {
    let id = tiles.len();
    let pv = tiles[parent].vertices;
    tiles[parent].slots[s] = Slot::Child(id);
    let mut slots = [Slot::Boundary; 7];
    slots[0] = Slot::In(parent);
    let mut vertices = [0usize; 7];
    vertices[0] = pv[(s + 1) % 7];
    vertices[1] = pv[s];
    for v in vertices.iter_mut().skip(2) {
        *v = alloc.fresh();
    }
    Tile {
        layer: tiles[parent].layer + 1,
        slots,
        vertices,
        parents: vec![parent],
    }
}

fn vertex_child(tiles: &mut [Tile], pa: usize, pb: usize, alloc: &mut VertexAlloc) -> Tile {
    let id = tiles.len();
    let t = prev_slot(&tiles[pb]);
    let u = NEXT_SLOT;
    tiles[pb].slots[t] = Slot::Child(id);
    tiles[pa].slots[u] = Slot::Child(id);
    let (vb, va) = (tiles[pb].vertices, tiles[pa].vertices);
    assert_eq!(
        vb[t],
        va[(u + 1) % 7],
        "ring neighbours must share the vertex"
    );
    let mut slots = [Slot::Boundary; 7];
    slots[0] = Slot::In(pb);
    slots[1] = Slot::In(pa);
    let mut vertices = [0usize; 7];
    vertices[0] = vb[(t + 1) % 7];
    vertices[1] = vb[t];
    vertices[2] = va[u];
    for v in vertices.iter_mut().skip(3) {
        *v = alloc.fresh();
    }
    Tile {
        layer: tiles[pb].layer + 1,
        slots,
        vertices,
        parents: vec![pb, pa],
    }
}

impl TileGraph {
    pub fn radius(&self) -> usize {
        self.layers.len()
    }

    /// Number of tiles touching each vertex.
    pub fn vertex_degrees(&self) -> Vec<usize> {
        let mut deg = vec![0usize; self.vertex_count];
        for t in &self.tiles {
            for &v in &t.vertices {
                deg[v] += 1;
            }
        }
        deg
    }

    pub fn boundary_slots(&self) -> usize {
        self.tiles
            .iter()
            .map(|t| t.slots.iter().filter(|s| **s == Slot::Boundary).count())
            .sum()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CodeCensus {
    pub radius: usize,
    pub tiles_per_layer: Vec<usize>,
    pub n: usize,
    pub k: usize,
    /// k(r) / k(r-1) for r = 2..=radius.
    pub growth_ratios: Vec<f64>,
}

/// Counts from the tiling alone.
pub fn census(radius: usize) -> Result<CodeCensus> {
    let g = build_tiling(radius)?;
    let tiles_per_layer: Vec<usize> = g.layers.iter().map(Vec::len).collect();
    let mut cumulative = Vec::new();
    let mut acc = 0;
    for &c in &tiles_per_layer {
        acc += c;
        cumulative.push(acc);
    }
    let growth_ratios = cumulative
        .windows(2)
        .map(|w| w[1] as f64 / w[0] as f64)
        .collect();
    Ok(CodeCensus {
        radius,
        tiles_per_layer,
        n: g.boundary_slots(),
        k: g.tiles.len(),
        growth_ratios,
    })
}

fn network_from_tiling(g: &TileGraph, mut net: TensorNetworkCode) -> Result<TensorNetworkCode> {
    for (id, tile) in g.tiles.iter().enumerate() {
        let mut pairings = Vec::new();
        for &p in &tile.parents {
            let ps = g.tiles[p]
                .slots
                .iter()
                .position(|k| *k == Slot::Child(id))
                .expect("parent records its child");
            let cs = tile
                .slots
                .iter()
                .position(|k| *k == Slot::In(p))
                .expect("child records its parent");
            pairings.push((
                NodeLeg::new(p, g.tiles[p].leg_of_slot(ps)),
                tile.leg_of_slot(cs),
            ));
        }
        let node = net.add_node(CodeTensor::steane(), &pairings)?;
        debug_assert_eq!(node, id);
    }
    Ok(net)
}

/// Holographic code with the flattened code tracked; radius capped by `max_radius_flat`.
pub fn build_code_with_limit(radius: usize, max_radius_flat: usize) -> Result<TensorNetworkCode> {
    if radius > max_radius_flat {
        return Err(Error::ResourceLimit(format!(
            "flattened code at radius {radius} exceeds the limit {max_radius_flat}"
        )));
    }
    network_from_tiling(&build_tiling(radius)?, TensorNetworkCode::new())
}

pub fn build_code(radius: usize) -> Result<TensorNetworkCode> {
    build_code_with_limit(radius, DEFAULT_MAX_RADIUS_FLAT)
}

/// Holographic network graph without the flattened code.
pub fn build_network(radius: usize) -> Result<TensorNetworkCode> {
    if radius > MAX_RADIUS_GRAPH {
        return Err(Error::ResourceLimit(format!(
            "radius {radius} exceeds the graph limit {MAX_RADIUS_GRAPH}"
        )));
    }
    network_from_tiling(&build_tiling(radius)?, TensorNetworkCode::graph_only())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_layers() {
        let g = build_tiling(1).unwrap();
        assert_eq!(g.tiles.len(), 1);
        assert_eq!(g.boundary_slots(), 7);
        let g = build_tiling(2).unwrap();
        assert_eq!(
            g.layers.iter().map(Vec::len).collect::<Vec<_>>(),
            vec![1, 7]
        );
        assert!(build_tiling(0).is_err());
    }

    #[test]
    fn layer_sizes_follow_recursion() {
        let g = build_tiling(6).unwrap();
        let sizes: Vec<usize> = g.layers.iter().map(Vec::len).collect();
        assert_eq!(sizes, vec![1, 7, 35, 168, 805, 3857]);
        for t in &g.tiles[1..] {
            assert!(matches!(t.in_degree(), 1 | 2));
        }
    }

    #[test]
    fn slot_bookkeeping_closes() {
        let g = build_tiling(5).unwrap();
        for (id, t) in g.tiles.iter().enumerate() {
            let ins = t.slots.iter().filter(|s| matches!(s, Slot::In(_))).count();
            assert_eq!(ins, t.in_degree());
            if t.layer < g.radius() {
                assert!(t.slots.iter().all(|s| *s != Slot::Boundary), "tile {id}");
            }
            for s in t.slots {
                if let Slot::Child(c) = s {
                    assert!(g.tiles[c].parents.contains(&id));
                }
            }
        }
    }

    #[test]
    fn four_tiles_meet_at_closed_vertices() {
        let r = 6;
        let g = build_tiling(r).unwrap();
        let deg = g.vertex_degrees();
        assert!(deg.iter().all(|&d| d <= 4));
        for t in g.tiles.iter().filter(|t| t.layer + 2 <= r) {
            for &v in &t.vertices {
                assert_eq!(deg[v], 4);
            }
        }
    }

    #[test]
    fn census_examples() {
        let c = census(1).unwrap();
        assert_eq!((c.n, c.k), (7, 1));
        let c = census(2).unwrap();
        assert_eq!((c.n, c.k), (42, 8));
        let c = census(3).unwrap();
        assert_eq!((c.n, c.k), (203, 43));
        let rate = c.k as f64 / c.n as f64;
        let r0 = 1.0 / 21f64.sqrt();
        assert!((rate - r0).abs() / r0 < 0.15);
    }

    #[test]
    fn built_codes_match_census() {
        for r in 1..=3 {
            let net = build_code(r).unwrap();
            let c = census(r).unwrap();
            assert_eq!((net.n(), net.k()), (c.n, c.k));
            let flat = net.flat().unwrap();
            assert_eq!((flat.n, flat.k), (c.n, c.k));
            assert_eq!(flat.validate(), vec![]);
        }
        assert_eq!(
            build_code(1).unwrap().flat().unwrap(),
            &crate::StabilizerCode::steane()
        );
        assert!(matches!(
            build_code_with_limit(3, 2),
            Err(Error::ResourceLimit(_))
        ));
    }
}
