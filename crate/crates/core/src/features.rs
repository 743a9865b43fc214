//! 160-dimensional state encoding from one player's point of view.
//!
//! Layout:
//!
//! | range      | count | content                                         |
//! |------------|-------|-------------------------------------------------|
//! | 0..5       | 5     | own clay, ore, sheep, wheat, wood (clamped /10) |
//! | 5..24      | 19    | hex terrain code /5                             |
//! | 24..78     | 54    | node occupancy /4                               |
//! | 78..150    | 72    | edge occupancy /2                               |
//! | 150..158   | 8     | padding, always 0                               |
//! | 158        | 1     | terrain code under the robber /5                |
//! | 159        | 1     | turn counter (clamped /100)                     |
//!
//! Terrain codes: 0 desert, 1 clay, 2 ore, 3 sheep, 4 wheat, 5 wood.
//! Node codes: 0 empty, 1/2 opponent settlement/city, 3/4 own settlement/city.
//! Edge codes: 0 empty, 1 opponent road, 2 own road.

use crate::board::{Building, PlayerId, NUM_EDGES, NUM_HEXES, NUM_NODES};
use crate::game::GameState;

pub const NUM_FEATURES: usize = 160;
pub const RESOURCE_OFFSET: usize = 0;
pub const HEX_OFFSET: usize = 5;
pub const NODE_OFFSET: usize = HEX_OFFSET + NUM_HEXES;
pub const EDGE_OFFSET: usize = NODE_OFFSET + NUM_NODES;
pub const EDGE_SLOTS: usize = 80;
pub const PAD_OFFSET: usize = EDGE_OFFSET + NUM_EDGES;
pub const ROBBER_INDEX: usize = EDGE_OFFSET + EDGE_SLOTS;
pub const TURN_INDEX: usize = ROBBER_INDEX + 1;

pub type FeatureVector = [f64; NUM_FEATURES];

pub fn featurize(state: &GameState, viewpoint: PlayerId) -> FeatureVector {
    let mut x = [0.0; NUM_FEATURES];
    let held = state.players[viewpoint].resources;
    for (i, (_, n)) in held.iter().enumerate() {
        x[RESOURCE_OFFSET + i] = n.min(10) as f64 / 10.0;
    }
    for (i, hex) in state.board.hexes.iter().enumerate() {
        x[HEX_OFFSET + i] = hex.terrain.code() as f64 / 5.0;
    }
    for (i, node) in state.board.nodes.iter().enumerate() {
        let code = match node {
            None => 0,
            Some((p, b)) => match (*p == viewpoint, b) {
                (false, Building::Settlement) => 1,
                (false, Building::City) => 2,
                (true, Building::Settlement) => 3,
                (true, Building::City) => 4,
            },
        };
        x[NODE_OFFSET + i] = code as f64 / 4.0;
    }
    for (i, edge) in state.board.edges.iter().enumerate() {
        let code = match edge {
            None => 0,
            Some(p) if *p != viewpoint => 1,
            Some(_) => 2,
        };
        x[EDGE_OFFSET + i] = code as f64 / 2.0;
    }
    x[ROBBER_INDEX] = state.board.hexes[state.robber].terrain.code() as f64 / 5.0;
    x[TURN_INDEX] = state.turn.min(100) as f64 / 100.0;
    x
}

/// Column names for the CSV debug dump.
pub fn feature_names() -> Vec<String> {
    let mut names: Vec<String> = ["hasClay", "hasOre", "hasSheep", "hasWheat", "hasWood"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    names.extend((0..NUM_HEXES).map(|i| format!("hex{i}")));
    names.extend((0..NUM_NODES).map(|i| format!("node{i}")));
    names.extend((0..NUM_EDGES).map(|i| format!("edge{i}")));
    names.extend((NUM_EDGES..EDGE_SLOTS).map(|i| format!("edge{i}_pad")));
    names.push("robber".into());
    names.push("turns".into());
    names
}

pub fn csv_header() -> String {
    feature_names().join(",")
}

pub fn csv_row(x: &FeatureVector) -> String {
    x.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(",")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::resources::ResourceSet;

    #[test]
    fn layout_constants() {
        assert_eq!(NODE_OFFSET, 24);
        assert_eq!(EDGE_OFFSET, 78);
        assert_eq!(PAD_OFFSET, 150);
        assert_eq!(ROBBER_INDEX, 158);
        assert_eq!(TURN_INDEX, 159);
        assert_eq!(feature_names().len(), NUM_FEATURES);
    }

    #[test]
    fn resource_scaling_and_clamp() {
        let mut g = GameState::new(7);
        g.players[0].resources = ResourceSet::new(10, 0, 0, 13, 5);
        let x = featurize(&g, 0);
        assert_eq!(x[0], 1.0);
        assert_eq!(x[3], 1.0);
        assert_eq!(x[4], 0.5);
    }

    #[test]
    fn own_city_codes_to_one() {
        let mut g = GameState::new(7);
        let k = (0..NUM_NODES).find(|&n| g.board.owner_at(n) == Some(2)).unwrap();
        g.board.nodes[k] = Some((2, Building::City));
        assert_eq!(featurize(&g, 2)[NODE_OFFSET + k], 1.0);
        assert_eq!(featurize(&g, 0)[NODE_OFFSET + k], 0.5);
    }

    #[test]
    fn fresh_game_zeros() {
        let g = GameState::new(7);
        let x = featurize(&g, 0);
        let empty_edge = (0..NUM_EDGES).find(|&e| g.board.edges[e].is_none()).unwrap();
        assert_eq!(x[EDGE_OFFSET + empty_edge], 0.0);
        assert_eq!(x[TURN_INDEX], 0.0);
        // Robber starts on the desert.
        assert_eq!(x[ROBBER_INDEX], 0.0);
        assert!(x[PAD_OFFSET..ROBBER_INDEX].iter().all(|&v| v == 0.0));
    }

    #[test]
    fn csv_dump_shape() {
        let g = GameState::new(2);
        let row = csv_row(&featurize(&g, 1));
        assert_eq!(row.split(',').count(), NUM_FEATURES);
        assert_eq!(csv_header().split(',').count(), NUM_FEATURES);
        assert!(csv_header().starts_with("hasClay,hasOre"));
    }
}
