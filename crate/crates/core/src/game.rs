//! Game state and rule enforcement.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::board::{topology, Board, Building, EdgeId, HexId, NodeId, PlayerId, NUM_EDGES, NUM_NODES};
use crate::planner;
use crate::resources::{ResourceKind, ResourceSet};

pub const NUM_PLAYERS: usize = 4;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GameError {
    #[error("illegal build {0:?}")]
    IllegalBuild(Build),
    #[error("insufficient resources")]
    InsufficientResources,
    #[error("illegal trade: {0}")]
    IllegalTrade(&'static str),
    #[error("no offer is pending")]
    NoPendingOffer,
    #[error("an offer is pending; only replies are allowed")]
    OfferPending,
    #[error("counteroffers are not allowed here")]
    CounterNotAllowed,
    #[error("no playable knight")]
    NoKnight,
    #[error("illegal robber placement on hex {0}")]
    IllegalRobber(HexId),
    #[error("invalid player {0}")]
    InvalidPlayer(PlayerId),
}

/// Which build cost table to use.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub enum CostTable {
    /// City = 3 ore + 2 wheat; development card = ore + sheep + wheat.
    #[default]
    Standard,
    /// City = 3 clay + 2 wheat; development card = clay + sheep + wheat.
    Literal,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Rules {
    pub turn_cap: u32,
    pub victory_target: u32,
    pub costs: CostTable,
    /// Trading ends after this many offers went unaccepted in one turn.
    pub max_unaccepted_offers: u32,
    /// Hard ceiling on offers (accepted or not) per turn.
    pub max_offers_per_turn: u32,
}

impl Default for Rules {
    fn default() -> Self {
        Rules {
            turn_cap: 150,
            victory_target: 10,
            costs: CostTable::Standard,
            max_unaccepted_offers: 3,
            max_offers_per_turn: 10,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BuildKind {
    Road,
    Settlement,
    City,
    DevCard,
}

impl BuildKind {
    pub const ALL: [BuildKind; 4] = [BuildKind::Road, BuildKind::Settlement, BuildKind::City, BuildKind::DevCard];

    pub fn cost(self, table: CostTable) -> ResourceSet {
        match (self, table) {
            (BuildKind::Road, _) => ResourceSet::new(1, 0, 0, 0, 1),
            (BuildKind::Settlement, _) => ResourceSet::new(1, 0, 1, 1, 1),
            (BuildKind::City, CostTable::Standard) => ResourceSet::new(0, 3, 0, 2, 0),
            (BuildKind::City, CostTable::Literal) => ResourceSet::new(3, 0, 0, 2, 0),
            (BuildKind::DevCard, CostTable::Standard) => ResourceSet::new(0, 1, 1, 1, 0),
            (BuildKind::DevCard, CostTable::Literal) => ResourceSet::new(1, 0, 1, 1, 0),
        }
    }
}

/// A build together with its location.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Build {
    Road(EdgeId),
    Settlement(NodeId),
    City(NodeId),
    DevCard,
}

impl Build {
    pub fn kind(self) -> BuildKind {
        match self {
            Build::Road(_) => BuildKind::Road,
            Build::Settlement(_) => BuildKind::Settlement,
            Build::City(_) => BuildKind::City,
            Build::DevCard => BuildKind::DevCard,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum DevCard {
    Knight,
    VictoryPoint,
    /// Inert card; occupies deck slots of the progress cards.
    Filler,
}

impl DevCard {
    pub fn code(self) -> &'static str {
        match self {
            DevCard::Knight => "knight",
            DevCard::VictoryPoint => "vp",
            DevCard::Filler => "filler",
        }
    }

    pub fn from_code(s: &str) -> Option<DevCard> {
        match s {
            "knight" => Some(DevCard::Knight),
            "vp" => Some(DevCard::VictoryPoint),
            "filler" => Some(DevCard::Filler),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct HeldCard {
    pub card: DevCard,
    pub bought_turn: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PlayerState {
    pub resources: ResourceSet,
    pub roads_left: u32,
    pub settlements_left: u32,
    pub cities_left: u32,
    /// Unplayed knight and filler cards.
    pub dev_cards: Vec<HeldCard>,
    pub vp_cards: u32,
    pub knights_played: u32,
    pub victory_points: u32,
}

impl Default for PlayerState {
    fn default() -> Self {
        PlayerState {
            resources: ResourceSet::EMPTY,
            roads_left: 15,
            settlements_left: 5,
            cities_left: 4,
            dev_cards: Vec::new(),
            vp_cards: 0,
            knights_played: 0,
            victory_points: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Status {
    Ongoing,
    Won(PlayerId),
    /// Turn cap reached with no winner.
    Capped,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RobberMove {
    pub hex: HexId,
    pub victim: Option<PlayerId>,
    pub stolen: Option<ResourceKind>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RollOutcome {
    pub total: u8,
    pub produced: [ResourceSet; NUM_PLAYERS],
    pub discards: Vec<(PlayerId, ResourceSet)>,
    pub robber: Option<RobberMove>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GameState {
    pub seed: u64,
    pub rules: Rules,
    pub board: Board,
    pub players: Vec<PlayerState>,
    pub robber: HexId,
    pub current_player: PlayerId,
    pub turn: u32,
    /// Top of the deck is the last element.
    pub dev_deck: Vec<DevCard>,
    pub longest_road: Option<PlayerId>,
    pub largest_army: Option<PlayerId>,
}

fn standard_deck() -> Vec<DevCard> {
    let mut deck = Vec::with_capacity(25);
    deck.extend(std::iter::repeat_n(DevCard::Knight, 14));
    deck.extend(std::iter::repeat_n(DevCard::VictoryPoint, 5));
    deck.extend(std::iter::repeat_n(DevCard::Filler, 6));
    deck
}

impl GameState {
    pub fn new(seed: u64) -> GameState {
        Self::with_rules(seed, Rules::default())
    }

    /// Random board from `seed` and the greedy snake-order setup.
    pub fn with_rules(seed: u64, rules: Rules) -> GameState {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let board = Board::random(&mut rng);
        let mut dev_deck = standard_deck();
        dev_deck.shuffle(&mut rng);
        let robber = board.desert();
        let mut state = GameState {
            seed,
            rules,
            board,
            players: vec![PlayerState::default(); NUM_PLAYERS],
            robber,
            current_player: 0,
            turn: 0,
            dev_deck,
            longest_road: None,
            largest_army: None,
        };
        for player in (0..NUM_PLAYERS).chain((0..NUM_PLAYERS).rev()) {
            let node = planner::setup_node(&state);
            let edge = planner::setup_road(&state, node);
            state.place_setup(player, node, edge);
        }
        state
    }

    /// Free setup placement of a settlement and its road; the second
    /// settlement of a player grants one card per adjacent producing hex.
    pub fn place_setup(&mut self, player: PlayerId, node: NodeId, edge: EdgeId) {
        let second = self.players[player].settlements_left == 4;
        self.board.nodes[node] = Some((player, Building::Settlement));
        self.board.edges[edge] = Some(player);
        let p = &mut self.players[player];
        p.settlements_left -= 1;
        p.roads_left -= 1;
        if second {
            for &h in &topology().node_hexes[node] {
                if let Some(r) = self.board.hexes[h].terrain.resource() {
                    self.players[player].resources[r] += 1;
                }
            }
        }
        self.refresh_scores();
    }

    pub fn cost(&self, kind: BuildKind) -> ResourceSet {
        kind.cost(self.rules.costs)
    }

    pub fn total_cards(&self) -> u32 {
        self.players.iter().map(|p| p.resources.total()).sum()
    }

    pub fn status(&self) -> Status {
        if let Some(w) = (0..NUM_PLAYERS).find(|&p| self.players[p].victory_points >= self.rules.victory_target) {
            return Status::Won(w);
        }
        if self.turn >= self.rules.turn_cap {
            return Status::Capped;
        }
        Status::Ongoing
    }

    pub fn winner(&self) -> Option<PlayerId> {
        match self.status() {
            Status::Won(p) => Some(p),
            _ => None,
        }
    }

    pub fn is_terminal(&self) -> bool {
        self.status() != Status::Ongoing
    }

    pub fn end_turn(&mut self) {
        self.current_player = (self.current_player + 1) % NUM_PLAYERS;
        self.turn += 1;
    }

    // ---- building -------------------------------------------------------

    fn road_connects(&self, player: PlayerId, edge: EdgeId) -> bool {
        let t = topology();
        t.edge_nodes[edge].iter().any(|&n| match self.board.owner_at(n) {
            Some(owner) => owner == player,
            None => t.node_edges[n].iter().any(|&e| e != edge && self.board.edges[e] == Some(player)),
        })
    }

    /// Placement legality without cost or stock checks.
    pub fn can_place(&self, player: PlayerId, build: Build) -> bool {
        match build {
            Build::Road(e) => e < NUM_EDGES && self.board.edges[e].is_none() && self.road_connects(player, e),
            Build::Settlement(n) => {
                n < NUM_NODES
                    && self.board.satisfies_distance_rule(n)
                    && topology().node_edges[n].iter().any(|&e| self.board.edges[e] == Some(player))
            }
            Build::City(n) => n < NUM_NODES && self.board.nodes[n] == Some((player, Building::Settlement)),
            Build::DevCard => !self.dev_deck.is_empty(),
        }
    }

    fn has_stock(&self, player: PlayerId, kind: BuildKind) -> bool {
        let p = &self.players[player];
        match kind {
            BuildKind::Road => p.roads_left > 0,
            BuildKind::Settlement => p.settlements_left > 0,
            BuildKind::City => p.cities_left > 0,
            BuildKind::DevCard => true,
        }
    }

    pub fn is_legal_build(&self, player: PlayerId, build: Build) -> bool {
        player < NUM_PLAYERS
            && self.has_stock(player, build.kind())
            && self.players[player].resources.contains(&self.cost(build.kind()))
            && self.can_place(player, build)
    }

    /// Every affordable, stocked and placeable build.
    pub fn legal_builds(&self, player: PlayerId) -> Vec<Build> {
        let mut out = Vec::new();
        if player >= NUM_PLAYERS {
            return out;
        }
        let affordable = |k: BuildKind| {
            self.has_stock(player, k) && self.players[player].resources.contains(&self.cost(k))
        };
        if affordable(BuildKind::Road) {
            out.extend((0..NUM_EDGES).map(Build::Road).filter(|&b| self.can_place(player, b)));
        }
        if affordable(BuildKind::Settlement) {
            out.extend((0..NUM_NODES).map(Build::Settlement).filter(|&b| self.can_place(player, b)));
        }
        if affordable(BuildKind::City) {
            out.extend((0..NUM_NODES).map(Build::City).filter(|&b| self.can_place(player, b)));
        }
        if affordable(BuildKind::DevCard) && self.can_place(player, Build::DevCard) {
            out.push(Build::DevCard);
        }
        out
    }

    /// Pays for and places `build`. Returns the drawn card for development purchases.
    pub fn apply_build(&mut self, player: PlayerId, build: Build) -> Result<Option<DevCard>, GameError> {
        if !self.is_legal_build(player, build) {
            return Err(GameError::IllegalBuild(build));
        }
        let cost = self.cost(build.kind());
        let paid = self.players[player].resources.try_remove(&cost);
        debug_assert!(paid);
        let mut drawn = None;
        match build {
            Build::Road(e) => {
                self.board.edges[e] = Some(player);
                self.players[player].roads_left -= 1;
            }
            Build::Settlement(n) => {
                self.board.nodes[n] = Some((player, Building::Settlement));
                self.players[player].settlements_left -= 1;
            }
            Build::City(n) => {
                self.board.nodes[n] = Some((player, Building::City));
                let p = &mut self.players[player];
                p.cities_left -= 1;
                p.settlements_left += 1;
            }
            Build::DevCard => {
                let card = self.dev_deck.pop().expect("deck checked non-empty");
                let turn = self.turn;
                let p = &mut self.players[player];
                match card {
                    DevCard::VictoryPoint => p.vp_cards += 1,
                    _ => p.dev_cards.push(HeldCard { card, bought_turn: turn }),
                }
                drawn = Some(card);
            }
        }
        self.refresh_scores();
        Ok(drawn)
    }

    // ---- trading --------------------------------------------------------

    /// Flat 4:1 exchange with the bank.
    pub fn bank_trade(&mut self, player: PlayerId, give: ResourceKind, receive: ResourceKind) -> Result<(), GameError> {
        if player >= NUM_PLAYERS {
            return Err(GameError::InvalidPlayer(player));
        }
        if give == receive {
            return Err(GameError::IllegalTrade("bank trade gives and receives the same resource"));
        }
        let res = &mut self.players[player].resources;
        if !res.try_remove(&ResourceSet::single(give, 4)) {
            return Err(GameError::InsufficientResources);
        }
        res[receive] += 1;
        Ok(())
    }

    /// Checks that `player` could give `givables` in exchange for one `receivable`.
    pub fn check_offer(&self, player: PlayerId, givables: &ResourceSet, receivable: ResourceKind) -> Result<(), GameError> {
        if player >= NUM_PLAYERS {
            return Err(GameError::InvalidPlayer(player));
        }
        if givables.is_empty() {
            return Err(GameError::IllegalTrade("offer gives nothing"));
        }
        if givables[receivable] > 0 {
            return Err(GameError::IllegalTrade("receivable is among the givables"));
        }
        if !self.players[player].resources.contains(givables) {
            return Err(GameError::InsufficientResources);
        }
        Ok(())
    }

    /// Moves `givables` proposer → acceptor and one `receivable` acceptor → proposer.
    pub fn execute_trade(
        &mut self,
        proposer: PlayerId,
        acceptor: PlayerId,
        givables: &ResourceSet,
        receivable: ResourceKind,
    ) -> Result<(), GameError> {
        if acceptor >= NUM_PLAYERS {
            return Err(GameError::InvalidPlayer(acceptor));
        }
        if proposer == acceptor {
            return Err(GameError::IllegalTrade("a player cannot trade with itself"));
        }
        self.check_offer(proposer, givables, receivable)?;
        if self.players[acceptor].resources[receivable] == 0 {
            return Err(GameError::InsufficientResources);
        }
        self.players[proposer].resources.try_remove(givables);
        self.players[proposer].resources[receivable] += 1;
        self.players[acceptor].resources[receivable] -= 1;
        self.players[acceptor].resources.add(givables);
        Ok(())
    }

    // ---- dice and robber ------------------------------------------------

    /// Rolls two dice for the current player and resolves the result.
    pub fn roll_and_produce<R: Rng>(&mut self, rng: &mut R) -> RollOutcome {
        let total = rng.gen_range(1..=6) + rng.gen_range(1..=6);
        self.resolve_roll(total, rng)
    }

    /// Resolves a given dice total; `rng` is only used for the robber steal.
    pub fn resolve_roll<R: Rng>(&mut self, total: u8, rng: &mut R) -> RollOutcome {
        let mut outcome = RollOutcome {
            total,
            produced: [ResourceSet::EMPTY; NUM_PLAYERS],
            discards: Vec::new(),
            robber: None,
        };
        if total != 7 {
            outcome.produced = self.produce(total);
            return outcome;
        }
        for p in 0..NUM_PLAYERS {
            let held = self.players[p].resources.total();
            if held > 7 {
                let discard = planner::choose_discard(&self.players[p].resources, held / 2);
                self.discard(p, &discard).expect("discard chosen from holdings");
                outcome.discards.push((p, discard));
            }
        }
        let player = self.current_player;
        let (hex, victim) = planner::choose_robber(self, player);
        let stolen = victim.and_then(|v| self.random_card(v, rng));
        self.move_robber(player, hex, victim, stolen).expect("robber choice is legal");
        outcome.robber = Some(RobberMove { hex, victim, stolen });
        outcome
    }

    /// Production for a non-seven total.
    pub fn produce(&mut self, total: u8) -> [ResourceSet; NUM_PLAYERS] {
        let mut gains = [ResourceSet::EMPTY; NUM_PLAYERS];
        if total == 7 {
            return gains;
        }
        let t = topology();
        for (h, hex) in self.board.hexes.iter().enumerate() {
            if hex.number != Some(total) || h == self.robber {
                continue;
            }
            let Some(res) = hex.terrain.resource() else { continue };
            for &n in &t.hex_nodes[h] {
                if let Some((owner, building)) = self.board.nodes[n] {
                    gains[owner][res] += match building {
                        Building::Settlement => 1,
                        Building::City => 2,
                    };
                }
            }
        }
        for (p, g) in gains.iter().enumerate() {
            self.players[p].resources.add(g);
        }
        gains
    }

    pub fn discard(&mut self, player: PlayerId, cards: &ResourceSet) -> Result<(), GameError> {
        if player >= NUM_PLAYERS {
            return Err(GameError::InvalidPlayer(player));
        }
        if self.players[player].resources.try_remove(cards) {
            Ok(())
        } else {
            Err(GameError::InsufficientResources)
        }
    }

    fn random_card<R: Rng>(&self, victim: PlayerId, rng: &mut R) -> Option<ResourceKind> {
        let res = &self.players[victim].resources;
        let total = res.total();
        if total == 0 {
            return None;
        }
        let mut pick = rng.gen_range(0..total);
        for (k, n) in res.iter() {
            if pick < n {
                return Some(k);
            }
            pick -= n;
        }
        None
    }

    /// Moves the robber and transfers the stolen card, if any.
    pub fn move_robber(
        &mut self,
        player: PlayerId,
        hex: HexId,
        victim: Option<PlayerId>,
        stolen: Option<ResourceKind>,
    ) -> Result<(), GameError> {
        if hex >= self.board.hexes.len() || hex == self.robber {
            return Err(GameError::IllegalRobber(hex));
        }
        if let Some(v) = victim {
            if v == player || !self.board.player_touches_hex(v, hex) {
                return Err(GameError::IllegalRobber(hex));
            }
        }
        if let (Some(v), Some(r)) = (victim, stolen) {
            if self.players[v].resources[r] == 0 {
                return Err(GameError::InsufficientResources);
            }
        }
        self.robber = hex;
        if let (Some(v), Some(r)) = (victim, stolen) {
            self.players[v].resources[r] -= 1;
            self.players[player].resources[r] += 1;
        }
        Ok(())
    }

    pub fn has_playable_knight(&self, player: PlayerId) -> bool {
        self.players[player]
            .dev_cards
            .iter()
            .any(|c| c.card == DevCard::Knight && c.bought_turn < self.turn)
    }

    /// Plays a knight bought on an earlier turn and moves the robber.
    pub fn play_knight(
        &mut self,
        player: PlayerId,
        hex: HexId,
        victim: Option<PlayerId>,
        stolen: Option<ResourceKind>,
    ) -> Result<(), GameError> {
        let turn = self.turn;
        let idx = self.players[player]
            .dev_cards
            .iter()
            .position(|c| c.card == DevCard::Knight && c.bought_turn < turn)
            .ok_or(GameError::NoKnight)?;
        let mut trial = self.clone();
        trial.move_robber(player, hex, victim, stolen)?;
        *self = trial;
        self.players[player].dev_cards.remove(idx);
        self.players[player].knights_played += 1;
        self.refresh_scores();
        Ok(())
    }

    /// Robber move chosen by the built-in heuristic, with a random steal.
    pub fn heuristic_robber_move<R: Rng>(&self, player: PlayerId, rng: &mut R) -> RobberMove {
        let (hex, victim) = planner::choose_robber(self, player);
        let stolen = victim.and_then(|v| self.random_card(v, rng));
        RobberMove { hex, victim, stolen }
    }

    // ---- scoring --------------------------------------------------------

    /// Longest simple trail of the player's roads; opponents' buildings cut trails.
    pub fn longest_road_length(&self, player: PlayerId) -> u32 {
        let t = topology();
        let owned: Vec<EdgeId> = (0..NUM_EDGES).filter(|&e| self.board.edges[e] == Some(player)).collect();
        let mut used = [false; NUM_EDGES];
        let mut best = 0;
        for &e in &owned {
            for &start in &t.edge_nodes[e] {
                used[e] = true;
                let [a, b] = t.edge_nodes[e];
                let next = if start == a { b } else { a };
                best = best.max(1 + self.road_dfs(player, next, &mut used));
                used[e] = false;
            }
        }
        best
    }

    fn road_dfs(&self, player: PlayerId, node: NodeId, used: &mut [bool; NUM_EDGES]) -> u32 {
        if matches!(self.board.owner_at(node), Some(o) if o != player) {
            return 0;
        }
        let t = topology();
        let mut best = 0;
        for &e in &t.node_edges[node] {
            if used[e] || self.board.edges[e] != Some(player) {
                continue;
            }
            used[e] = true;
            let [a, b] = t.edge_nodes[e];
            let next = if node == a { b } else { a };
            best = best.max(1 + self.road_dfs(player, next, used));
            used[e] = false;
        }
        best
    }

    /// Victory points recomputed from pieces, cards and awards.
    pub fn recompute_points(&self, player: PlayerId) -> u32 {
        let mut vp = 0;
        for node in &self.board.nodes {
            match node {
                Some((p, Building::Settlement)) if *p == player => vp += 1,
                Some((p, Building::City)) if *p == player => vp += 2,
                _ => {}
            }
        }
        vp += self.players[player].vp_cards;
        if self.longest_road == Some(player) {
            vp += 2;
        }
        if self.largest_army == Some(player) {
            vp += 2;
        }
        vp
    }

    fn refresh_scores(&mut self) {
        let lens: Vec<u32> = (0..NUM_PLAYERS).map(|p| self.longest_road_length(p)).collect();
        let max = lens.iter().copied().max().unwrap_or(0);
        self.longest_road = if max < 5 {
            None
        } else if self.longest_road.is_some_and(|h| lens[h] == max) {
            self.longest_road
        } else {
            let leaders: Vec<PlayerId> = (0..NUM_PLAYERS).filter(|&p| lens[p] == max).collect();
            if leaders.len() == 1 {
                Some(leaders[0])
            } else {
                None
            }
        };

        for p in 0..NUM_PLAYERS {
            let k = self.players[p].knights_played;
            if k >= 3 && self.largest_army.is_none_or(|h| h != p && k > self.players[h].knights_played) {
                self.largest_army = Some(p);
            }
        }

        for p in 0..NUM_PLAYERS {
            self.players[p].victory_points = self.recompute_points(p);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rng() -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(99)
    }

    fn count_pieces(state: &GameState, player: PlayerId) -> (usize, usize) {
        let s = state.board.nodes.iter().filter(|n| matches!(n, Some((p, _)) if *p == player)).count();
        let r = state.board.edges.iter().filter(|e| **e == Some(player)).count();
        (s, r)
    }

    #[test]
    fn new_game_shape() {
        let g = GameState::new(7);
        assert_eq!(g.board.hexes.len(), 19);
        assert_eq!(g.board.nodes.len(), 54);
        assert_eq!(g.board.edges.len(), 72);
        assert_eq!(g.robber, g.board.desert());
        for p in 0..NUM_PLAYERS {
            assert_eq!(count_pieces(&g, p), (2, 2));
            assert_eq!(g.players[p].victory_points, 2);
            assert_eq!(g.players[p].settlements_left, 3);
            assert_eq!(g.players[p].roads_left, 13);
        }
        assert_eq!(g.dev_deck.len(), 25);
    }

    #[test]
    fn new_game_is_deterministic() {
        assert_eq!(GameState::new(7), GameState::new(7));
        assert_ne!(GameState::new(7).board, GameState::new(8).board);
    }

    #[test]
    fn setup_respects_distance_rule() {
        for seed in 0..50 {
            let g = GameState::new(seed);
            let t = topology();
            for n in 0..NUM_NODES {
                if g.board.nodes[n].is_some() {
                    assert!(t.node_neighbors[n].iter().all(|&m| g.board.nodes[m].is_none()));
                }
            }
        }
    }

    #[test]
    fn setup_grants_second_settlement_resources() {
        let g = GameState::new(11);
        // Each player gets one card per producing hex next to its second settlement: 1..=3 cards.
        for p in &g.players {
            assert!((1..=3).contains(&p.resources.total()), "{:?}", p.resources);
        }
    }

    #[test]
    fn vacuous_production() {
        let mut g = GameState::new(7);
        // Strip every building from hexes numbered 8.
        let t = topology();
        for h in 0..19 {
            if g.board.hexes[h].number == Some(8) {
                for &n in &t.hex_nodes[h] {
                    g.board.nodes[n] = None;
                }
            }
        }
        let before = g.players.clone();
        let out = g.resolve_roll(8, &mut rng());
        assert_eq!(g.players, before);
        assert!(out.produced.iter().all(|r| r.is_empty()));
    }

    #[test]
    fn city_yields_double() {
        let mut g = GameState::new(7);
        let t = topology();
        // Put a Fields hex numbered 5 somewhere and a lone city of player 1 on it.
        let h = (0..19).find(|&h| g.board.hexes[h].terrain.resource().is_some() && h != g.robber).unwrap();
        for hex in g.board.hexes.iter_mut() {
            if hex.number == Some(5) {
                hex.number = Some(9);
            }
        }
        g.board.hexes[h] = crate::board::Hex { terrain: crate::board::Terrain::Fields, number: Some(5) };
        for n in g.board.nodes.iter_mut() {
            *n = None;
        }
        g.board.nodes[t.hex_nodes[h][0]] = Some((1, Building::City));
        let wheat_before = g.players[1].resources[ResourceKind::Wheat];
        g.resolve_roll(5, &mut rng());
        assert_eq!(g.players[1].resources[ResourceKind::Wheat], wheat_before + 2);
    }

    #[test]
    fn seven_discards_half_rounded_down() {
        let mut g = GameState::new(7);
        g.players[2].resources = ResourceSet::new(3, 2, 2, 1, 1);
        let out = g.resolve_roll(7, &mut rng());
        let d = out.discards.iter().find(|(p, _)| *p == 2).unwrap();
        assert_eq!(d.1.total(), 4);
        assert!(out.robber.is_some());
        assert_ne!(g.robber, g.board.desert());
    }

    #[test]
    fn seven_steal_conserves_cards() {
        for seed in 0..30 {
            let mut g = GameState::new(seed);
            let before = g.total_cards();
            let out = g.resolve_roll(7, &mut rng());
            let discarded: u32 = out.discards.iter().map(|(_, d)| d.total()).sum();
            assert_eq!(g.total_cards(), before - discarded);
        }
    }

    #[test]
    fn no_resources_no_builds() {
        let mut g = GameState::new(3);
        g.players[0].resources = ResourceSet::EMPTY;
        assert!(g.legal_builds(0).is_empty());
    }

    #[test]
    fn road_affordable_next_to_own_road() {
        let mut g = GameState::new(3);
        g.players[0].resources = ResourceSet::new(1, 0, 0, 0, 1);
        let builds = g.legal_builds(0);
        assert!(!builds.is_empty());
        assert!(builds.iter().all(|b| matches!(b, Build::Road(_))));
        let t = topology();
        let own_road = (0..NUM_EDGES).find(|&e| g.board.edges[e] == Some(0)).unwrap();
        let adjacent_free = t.edge_nodes[own_road]
            .iter()
            .flat_map(|&n| t.node_edges[n].iter().copied())
            .find(|&e| g.board.edges[e].is_none())
            .unwrap();
        assert!(builds.contains(&Build::Road(adjacent_free)));
    }

    #[test]
    fn settlement_distance_rule_excludes_neighbors() {
        let mut g = GameState::new(5);
        g.players[0].resources = ResourceSet::new(5, 5, 5, 5, 5);
        let t = topology();
        for b in g.legal_builds(0) {
            if let Build::Settlement(n) = b {
                assert!(g.board.nodes[n].is_none());
                assert!(t.node_neighbors[n].iter().all(|&m| g.board.nodes[m].is_none()));
            }
        }
        // Next to own setup settlement is never legal.
        let own = (0..NUM_NODES).find(|&n| g.board.owner_at(n) == Some(0)).unwrap();
        for &m in &t.node_neighbors[own] {
            assert!(!g.is_legal_build(0, Build::Settlement(m)));
        }
    }

    fn extend_road_to_free_spot(g: &mut GameState, player: PlayerId) -> NodeId {
        // Build roads until some settlement spot becomes reachable.
        for _ in 0..6 {
            if let Some(n) = (0..NUM_NODES).find(|&n| g.can_place(player, Build::Settlement(n))) {
                return n;
            }
            g.players[player].resources.add(&ResourceSet::new(1, 0, 0, 0, 1));
            let road = g.legal_builds(player).into_iter().find(|b| matches!(b, Build::Road(_))).unwrap();
            g.apply_build(player, road).unwrap();
        }
        panic!("no settlement spot reachable");
    }

    #[test]
    fn settlement_adds_point_city_nets_one() {
        let mut g = GameState::new(21);
        let n = extend_road_to_free_spot(&mut g, 0);
        let vp0 = g.players[0].victory_points;
        g.players[0].resources.add(&ResourceSet::new(1, 0, 1, 1, 1));
        g.apply_build(0, Build::Settlement(n)).unwrap();
        assert_eq!(g.players[0].victory_points, vp0 + 1);
        g.players[0].resources.add(&ResourceSet::new(0, 3, 0, 2, 0));
        let left = g.players[0].settlements_left;
        g.apply_build(0, Build::City(n)).unwrap();
        assert_eq!(g.players[0].victory_points, vp0 + 2);
        assert_eq!(g.players[0].settlements_left, left + 1);
        assert_eq!(g.players[0].cities_left, 3);
    }

    #[test]
    fn vp_card_adds_point() {
        let mut g = GameState::new(4);
        g.dev_deck.push(DevCard::VictoryPoint);
        g.players[1].resources = ResourceSet::new(0, 1, 1, 1, 0);
        let vp = g.players[1].victory_points;
        assert_eq!(g.apply_build(1, Build::DevCard), Ok(Some(DevCard::VictoryPoint)));
        assert_eq!(g.players[1].victory_points, vp + 1);
        assert!(g.players[1].resources.is_empty());
    }

    #[test]
    fn illegal_build_rejected() {
        let mut g = GameState::new(4);
        g.players[0].resources = ResourceSet::EMPTY;
        assert!(matches!(g.apply_build(0, Build::DevCard), Err(GameError::IllegalBuild(_))));
        g.players[0].resources = ResourceSet::new(5, 5, 5, 5, 5);
        let other = (0..NUM_NODES).find(|&n| g.board.owner_at(n) == Some(1)).unwrap();
        assert!(g.apply_build(0, Build::City(other)).is_err());
    }

    #[test]
    fn literal_costs() {
        assert_eq!(BuildKind::City.cost(CostTable::Literal), ResourceSet::new(3, 0, 0, 2, 0));
        assert_eq!(BuildKind::DevCard.cost(CostTable::Literal), ResourceSet::new(1, 0, 1, 1, 0));
        assert_eq!(BuildKind::City.cost(CostTable::Standard), ResourceSet::new(0, 3, 0, 2, 0));
    }

    #[test]
    fn bank_trade_rules() {
        let mut g = GameState::new(1);
        g.players[0].resources = ResourceSet::new(0, 0, 0, 0, 4);
        g.bank_trade(0, ResourceKind::Wood, ResourceKind::Clay).unwrap();
        assert_eq!(g.players[0].resources, ResourceSet::new(1, 0, 0, 0, 0));
        g.players[0].resources = ResourceSet::new(0, 0, 0, 0, 3);
        assert_eq!(g.bank_trade(0, ResourceKind::Wood, ResourceKind::Clay), Err(GameError::InsufficientResources));
        g.players[0].resources = ResourceSet::new(0, 0, 0, 0, 8);
        assert!(matches!(g.bank_trade(0, ResourceKind::Wood, ResourceKind::Wood), Err(GameError::IllegalTrade(_))));
    }

    #[test]
    fn trade_swaps_and_conserves() {
        let mut g = GameState::new(1);
        g.players[0].resources = ResourceSet::new(0, 0, 1, 0, 0);
        g.players[1].resources = ResourceSet::new(1, 0, 0, 0, 0);
        g.execute_trade(0, 1, &ResourceSet::single(ResourceKind::Sheep, 1), ResourceKind::Clay).unwrap();
        assert_eq!(g.players[0].resources, ResourceSet::new(1, 0, 0, 0, 0));
        assert_eq!(g.players[1].resources, ResourceSet::new(0, 0, 1, 0, 0));

        g.players[0].resources = ResourceSet::new(0, 2, 0, 0, 0);
        g.players[2].resources = ResourceSet::new(0, 0, 0, 1, 0);
        let before = g.total_cards();
        g.execute_trade(0, 2, &ResourceSet::single(ResourceKind::Ore, 2), ResourceKind::Wheat).unwrap();
        assert_eq!(g.players[0].resources, ResourceSet::new(0, 0, 0, 1, 0));
        assert_eq!(g.players[2].resources, ResourceSet::new(0, 2, 0, 0, 0));
        assert_eq!(g.total_cards(), before);
    }

    #[test]
    fn trade_requires_acceptor_holding() {
        let mut g = GameState::new(1);
        g.players[0].resources = ResourceSet::new(0, 0, 1, 0, 0);
        g.players[1].resources = ResourceSet::EMPTY;
        assert_eq!(
            g.execute_trade(0, 1, &ResourceSet::single(ResourceKind::Sheep, 1), ResourceKind::Clay),
            Err(GameError::InsufficientResources)
        );
        assert_eq!(g.players[0].resources, ResourceSet::new(0, 0, 1, 0, 0));
    }

    #[test]
    fn terminal_states() {
        let mut g = GameState::new(2);
        g.turn = 40;
        assert_eq!(g.status(), Status::Ongoing);
        g.players[3].victory_points = 10;
        assert_eq!(g.status(), Status::Won(3));
        g.players[3].victory_points = 9;
        g.turn = g.rules.turn_cap;
        assert_eq!(g.status(), Status::Capped);
        assert_eq!(g.winner(), None);
    }

    #[test]
    fn knight_needs_a_previous_turn() {
        let mut g = GameState::new(9);
        g.players[0].dev_cards.push(HeldCard { card: DevCard::Knight, bought_turn: 0 });
        let mv = g.heuristic_robber_move(0, &mut rng());
        assert_eq!(g.play_knight(0, mv.hex, mv.victim, mv.stolen), Err(GameError::NoKnight));
        g.turn = 1;
        g.play_knight(0, mv.hex, mv.victim, mv.stolen).unwrap();
        assert_eq!(g.players[0].knights_played, 1);
        assert_eq!(g.robber, mv.hex);
    }

    #[test]
    fn largest_army_award() {
        let mut g = GameState::new(9);
        g.turn = 5;
        for _ in 0..3 {
            g.players[1].dev_cards.push(HeldCard { card: DevCard::Knight, bought_turn: 0 });
        }
        let vp = g.players[1].victory_points;
        for _ in 0..3 {
            let mv = g.heuristic_robber_move(1, &mut rng());
            g.play_knight(1, mv.hex, mv.victim, mv.stolen).unwrap();
        }
        assert_eq!(g.largest_army, Some(1));
        assert_eq!(g.players[1].victory_points, vp + 2);
    }

    #[test]
    fn longest_road_award() {
        let mut g = GameState::new(13);
        let mut built = 0;
        while g.longest_road_length(2) < 5 && built < 12 {
            g.players[2].resources.add(&ResourceSet::new(1, 0, 0, 0, 1));
            // Prefer roads that extend the current longest trail.
            let len = g.longest_road_length(2);
            let options: Vec<Build> =
                g.legal_builds(2).into_iter().filter(|b| matches!(b, Build::Road(_))).collect();
            let pick = options
                .iter()
                .copied()
                .find(|&b| {
                    let mut t = g.clone();
                    t.apply_build(2, b).unwrap();
                    t.longest_road_length(2) > len
                })
                .unwrap_or(options[0]);
            g.apply_build(2, pick).unwrap();
            built += 1;
        }
        assert!(g.longest_road_length(2) >= 5);
        assert_eq!(g.longest_road, Some(2));
        assert_eq!(g.players[2].victory_points, g.recompute_points(2));
        assert_eq!(g.players[2].victory_points, 4);
    }
}
