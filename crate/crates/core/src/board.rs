//! Board topology (19 hexes, 54 nodes, 72 edges) and per-game board contents.
//!
//! Hexes use axial coordinates `(q, r)` with radius 2. Node and edge positions
//! are derived from hex corners on an integer lattice where a hex centre sits
//! at `(2q + r, 3r)` and its six corners at offsets `(0,±2)` and `(±1,±1)`.
//! Hexes are indexed row-major by `(r, q)`, nodes by `(y, x)` and edges by
//! their doubled midpoint `(y, x)`. `layout_table` prints the full mapping.

use std::collections::BTreeMap;
use std::sync::OnceLock;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::resources::ResourceKind;

pub type HexId = usize;
pub type NodeId = usize;
pub type EdgeId = usize;
pub type PlayerId = usize;

pub const NUM_HEXES: usize = 19;
pub const NUM_NODES: usize = 54;
pub const NUM_EDGES: usize = 72;

const CORNER_OFFSETS: [(i32, i32); 6] = [(0, 2), (1, 1), (1, -1), (0, -2), (-1, -1), (-1, 1)];

/// Static adjacency structure shared by every board.
#[derive(Debug)]
pub struct Topology {
    pub hex_coords: Vec<(i32, i32)>,
    pub node_coords: Vec<(i32, i32)>,
    pub hex_nodes: Vec<[NodeId; 6]>,
    pub hex_neighbors: Vec<Vec<HexId>>,
    pub node_hexes: Vec<Vec<HexId>>,
    pub node_edges: Vec<Vec<EdgeId>>,
    pub node_neighbors: Vec<Vec<NodeId>>,
    pub edge_nodes: Vec<[NodeId; 2]>,
}

impl Topology {
    fn build() -> Topology {
        let mut hex_coords = Vec::new();
        for r in -2i32..=2 {
            for q in -2i32..=2 {
                if (q + r).abs() <= 2 {
                    hex_coords.push((q, r));
                }
            }
        }

        let corner = |(q, r): (i32, i32), k: usize| {
            let (dx, dy) = CORNER_OFFSETS[k];
            (2 * q + r + dx, 3 * r + dy)
        };

        // Sort nodes row-major by (y, x).
        let mut node_keys: BTreeMap<(i32, i32), ()> = BTreeMap::new();
        for &h in &hex_coords {
            for k in 0..6 {
                let (x, y) = corner(h, k);
                node_keys.insert((y, x), ());
            }
        }
        let node_coords: Vec<(i32, i32)> = node_keys.keys().map(|&(y, x)| (x, y)).collect();
        let node_index: BTreeMap<(i32, i32), NodeId> =
            node_coords.iter().enumerate().map(|(i, &c)| (c, i)).collect();

        let hex_nodes: Vec<[NodeId; 6]> = hex_coords
            .iter()
            .map(|&h| {
                let mut ids = [0; 6];
                for (k, id) in ids.iter_mut().enumerate() {
                    *id = node_index[&corner(h, k)];
                }
                ids
            })
            .collect();

        // Edges keyed by doubled midpoint, row-major.
        let mut edge_keys: BTreeMap<(i32, i32), [NodeId; 2]> = BTreeMap::new();
        for nodes in &hex_nodes {
            for k in 0..6 {
                let a = nodes[k];
                let b = nodes[(k + 1) % 6];
                let (ax, ay) = node_coords[a];
                let (bx, by) = node_coords[b];
                edge_keys.insert((ay + by, ax + bx), [a.min(b), a.max(b)]);
            }
        }
        let edge_nodes: Vec<[NodeId; 2]> = edge_keys.values().copied().collect();

        let mut node_hexes = vec![Vec::new(); node_coords.len()];
        for (h, nodes) in hex_nodes.iter().enumerate() {
            for &n in nodes {
                node_hexes[n].push(h);
            }
        }
        let mut node_edges = vec![Vec::new(); node_coords.len()];
        let mut node_neighbors = vec![Vec::new(); node_coords.len()];
        for (e, &[a, b]) in edge_nodes.iter().enumerate() {
            node_edges[a].push(e);
            node_edges[b].push(e);
            node_neighbors[a].push(b);
            node_neighbors[b].push(a);
        }
        for v in node_neighbors.iter_mut() {
            v.sort_unstable();
        }

        let hex_neighbors = hex_coords
            .iter()
            .map(|&(q, r)| {
                hex_coords
                    .iter()
                    .enumerate()
                    .filter(|&(_, &(q2, r2))| {
                        let (dq, dr) = (q2 - q, r2 - r);
                        matches!((dq, dr), (1, 0) | (-1, 0) | (0, 1) | (0, -1) | (1, -1) | (-1, 1))
                    })
                    .map(|(i, _)| i)
                    .collect()
            })
            .collect();

        Topology {
            hex_coords,
            node_coords,
            hex_nodes,
            hex_neighbors,
            node_hexes,
            node_edges,
            node_neighbors,
            edge_nodes,
        }
    }

    /// The edge joining two nodes, if they are adjacent.
    pub fn edge_between(&self, a: NodeId, b: NodeId) -> Option<EdgeId> {
        self.node_edges[a]
            .iter()
            .copied()
            .find(|&e| self.edge_nodes[e].contains(&b))
    }
}

pub fn topology() -> &'static Topology {
    static TOPOLOGY: OnceLock<Topology> = OnceLock::new();
    TOPOLOGY.get_or_init(Topology::build)
}

/// CSV listing of every hex, node and edge index with its lattice position.
pub fn layout_table() -> String {
    let t = topology();
    let mut out = String::from("kind,index,x,y,links\n");
    for (i, &(q, r)) in t.hex_coords.iter().enumerate() {
        let nodes: Vec<String> = t.hex_nodes[i].iter().map(|n| n.to_string()).collect();
        out.push_str(&format!("hex,{i},{q},{r},{}\n", nodes.join(" ")));
    }
    for (i, &(x, y)) in t.node_coords.iter().enumerate() {
        let hexes: Vec<String> = t.node_hexes[i].iter().map(|h| h.to_string()).collect();
        out.push_str(&format!("node,{i},{x},{y},{}\n", hexes.join(" ")));
    }
    for (i, &[a, b]) in t.edge_nodes.iter().enumerate() {
        let (ax, ay) = t.node_coords[a];
        let (bx, by) = t.node_coords[b];
        out.push_str(&format!("edge,{i},{},{},{a} {b}\n", ax + bx, ay + by));
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Terrain {
    Desert,
    Hills,
    Mountains,
    Pasture,
    Fields,
    Forest,
}

impl Terrain {
    pub fn resource(self) -> Option<ResourceKind> {
        match self {
            Terrain::Desert => None,
            Terrain::Hills => Some(ResourceKind::Clay),
            Terrain::Mountains => Some(ResourceKind::Ore),
            Terrain::Pasture => Some(ResourceKind::Sheep),
            Terrain::Fields => Some(ResourceKind::Wheat),
            Terrain::Forest => Some(ResourceKind::Wood),
        }
    }

    /// 0 = desert, 1..=5 = clay, ore, sheep, wheat, wood.
    pub fn code(self) -> u8 {
        self.resource().map_or(0, |r| r.index() as u8 + 1)
    }

    pub const STANDARD_SET: [Terrain; 19] = [
        Terrain::Hills,
        Terrain::Hills,
        Terrain::Hills,
        Terrain::Mountains,
        Terrain::Mountains,
        Terrain::Mountains,
        Terrain::Forest,
        Terrain::Forest,
        Terrain::Forest,
        Terrain::Forest,
        Terrain::Pasture,
        Terrain::Pasture,
        Terrain::Pasture,
        Terrain::Pasture,
        Terrain::Fields,
        Terrain::Fields,
        Terrain::Fields,
        Terrain::Fields,
        Terrain::Desert,
    ];
}

const NUMBER_TOKENS: [u8; 18] = [2, 3, 3, 4, 4, 5, 5, 6, 6, 8, 8, 9, 9, 10, 10, 11, 11, 12];

/// Roll-likelihood weight of a dice number: `6 - |n - 7|`.
pub fn pips(number: u8) -> u32 {
    6 - (number as i32 - 7).unsigned_abs()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Hex {
    pub terrain: Terrain,
    pub number: Option<u8>,
}

impl Hex {
    pub fn pips(&self) -> u32 {
        self.number.map_or(0, pips)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Building {
    Settlement,
    City,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Board {
    pub hexes: Vec<Hex>,
    pub nodes: Vec<Option<(PlayerId, Building)>>,
    pub edges: Vec<Option<PlayerId>>,
}

impl Board {
    /// Shuffled terrains and number tokens; 6s and 8s never touch.
    pub fn random<R: Rng>(rng: &mut R) -> Board {
        let t = topology();
        let mut terrains = Terrain::STANDARD_SET;
        terrains.shuffle(rng);
        let mut tokens = NUMBER_TOKENS;
        let hexes = loop {
            tokens.shuffle(rng);
            let mut it = tokens.iter();
            let hexes: Vec<Hex> = terrains
                .iter()
                .map(|&terrain| Hex {
                    terrain,
                    number: if terrain == Terrain::Desert { None } else { it.next().copied() },
                })
                .collect();
            let hot = |h: &Hex| matches!(h.number, Some(6) | Some(8));
            let clash = (0..NUM_HEXES)
                .any(|i| hot(&hexes[i]) && t.hex_neighbors[i].iter().any(|&j| hot(&hexes[j])));
            if !clash {
                break hexes;
            }
        };
        Board {
            hexes,
            nodes: vec![None; NUM_NODES],
            edges: vec![None; NUM_EDGES],
        }
    }

    pub fn desert(&self) -> HexId {
        self.hexes
            .iter()
            .position(|h| h.terrain == Terrain::Desert)
            .expect("board has a desert")
    }

    /// Sum of pip values of the hexes around a node.
    pub fn node_pips(&self, node: NodeId) -> u32 {
        topology().node_hexes[node].iter().map(|&h| self.hexes[h].pips()).sum()
    }

    /// True when the node and all its neighbours are unoccupied.
    pub fn satisfies_distance_rule(&self, node: NodeId) -> bool {
        self.nodes[node].is_none()
            && topology().node_neighbors[node].iter().all(|&n| self.nodes[n].is_none())
    }

    pub fn owner_at(&self, node: NodeId) -> Option<PlayerId> {
        self.nodes[node].map(|(p, _)| p)
    }

    pub fn player_touches_hex(&self, player: PlayerId, hex: HexId) -> bool {
        topology().hex_nodes[hex].iter().any(|&n| self.owner_at(n) == Some(player))
    }
}
