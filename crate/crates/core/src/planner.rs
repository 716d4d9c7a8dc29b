//! Rule-based action model: A* over the argmax-collapsed belief grid, plus
//! the distance-weighted intent prior used when generating training data.
//!
//! Costs: 1 per forward move, 1 per quarter turn, 1 to toggle a door. The
//! Manhattan heuristic ignores turns and toggles, so it stays admissible.

use serde::{Deserialize, Serialize};
use std::cmp::Reverse;
use std::collections::BinaryHeap;

use crate::belief::BeliefState;
use crate::gridworld::{Action, BlockType, Facing, Pose};
use crate::util::Prng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Occupancy {
    Traversable,
    Blocked,
    /// A closed door: traversable at an extra toggle cost.
    Door,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OccupancyGrid {
    pub width: usize,
    pub height: usize,
    pub cells: Vec<Occupancy>,
}

impl OccupancyGrid {
    pub fn at(&self, x: usize, y: usize) -> Occupancy {
        self.cells[y * self.width + x]
    }
}

/// A 2-D grid coordinate the observed agent is inferred to navigate toward.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Intent {
    pub x: usize,
    pub y: usize,
}

impl Intent {
    pub fn new(x: usize, y: usize) -> Intent {
        Intent { x, y }
    }
}

/// Grid of probabilities over intents, supported on believed
/// locations-of-interest (uniform over the whole grid when there are none).
#[derive(Debug, Clone, PartialEq)]
pub struct IntentPrior {
    pub width: usize,
    pub height: usize,
    pub probs: Vec<f64>,
}

/// Per-cell argmax over block types. Walls block; closed doors are doors;
/// everything else (including believed victims) is traversable. Argmax ties
/// break to the lowest block index.
pub fn collapse(belief: &BeliefState) -> OccupancyGrid {
    let mut cells = Vec::with_capacity(belief.width * belief.height);
    for y in 0..belief.height {
        for x in 0..belief.width {
            let block = BlockType::from_index(belief.argmax(x, y)).unwrap_or(BlockType::Air);
            cells.push(match block {
                BlockType::Wall => Occupancy::Blocked,
                BlockType::DoorClosed => Occupancy::Door,
                _ => Occupancy::Traversable,
            });
        }
    }
    OccupancyGrid { width: belief.width, height: belief.height, cells }
}

/// Minimum-cost pose sequence with the realizing actions in order (door
/// traversals contribute a toggle plus a move). A single pose with no actions
/// means the start already satisfies the goal; an empty pose list means
/// unreachable.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Path {
    pub poses: Vec<Pose>,
    pub actions: Vec<Action>,
    pub cost: u32,
}

impl Path {
    pub fn unreachable() -> Path {
        Path::default()
    }

    pub fn is_unreachable(&self) -> bool {
        self.poses.is_empty()
    }
}

const NEIGHBOR_ORDER: [Facing; 4] = [Facing::North, Facing::East, Facing::South, Facing::West];

fn state_index(width: usize, x: usize, y: usize, f: Facing) -> usize {
    (y * width + x) * 4 + f.index()
}

/// Quarter-turn actions (at cost 1 each) from `from` to `to`; ties between
/// the two-turn rotations resolve to left turns.
pub fn turns_between(from: Facing, to: Facing) -> Vec<Action> {
    let diff = (to.index() + 4 - from.index()) % 4;
    match diff {
        0 => vec![],
        1 => vec![Action::RightTurn],
        2 => vec![Action::LeftTurn, Action::LeftTurn],
        _ => vec![Action::LeftTurn],
    }
}

/// A* over (cell, facing) states with deterministic neighbor order N, E, S, W
/// and insertion-order tie-breaking. Returns [`Path::unreachable`] when no
/// route exists.
pub fn astar(occ: &OccupancyGrid, start: &Pose, goal: (usize, usize)) -> Path {
    if goal.0 >= occ.width || goal.1 >= occ.height {
        return Path::unreachable();
    }
    if (start.x, start.y) == goal {
        return Path { poses: vec![*start], actions: vec![], cost: 0 };
    }
    let heuristic = |x: usize, y: usize| -> u32 {
        (x.abs_diff(goal.0) + y.abs_diff(goal.1)) as u32
    };
    let n_states = occ.width * occ.height * 4;
    let mut best = vec![u32::MAX; n_states];
    // Parent pointer: (state, actions taken along this edge).
    let mut parent: Vec<Option<(usize, [Option<Action>; 2])>> = vec![None; n_states];
    let mut heap: BinaryHeap<Reverse<(u32, u64, usize)>> = BinaryHeap::new();
    let mut seq = 0u64;

    let s0 = state_index(occ.width, start.x, start.y, start.facing);
    best[s0] = 0;
    heap.push(Reverse((heuristic(start.x, start.y), seq, s0)));

    let mut goal_state = None;
    while let Some(Reverse((_, _, s))) = heap.pop() {
        let f = Facing::ALL[s % 4];
        let cell = s / 4;
        let (x, y) = (cell % occ.width, cell / occ.width);
        if (x, y) == goal {
            goal_state = Some(s);
            break;
        }
        let g = best[s];
        // Turning in place.
        for (turn, nf) in [(Action::LeftTurn, f.left()), (Action::RightTurn, f.right())] {
            let ns = state_index(occ.width, x, y, nf);
            let ng = g + 1;
            if ng < best[ns] {
                best[ns] = ng;
                parent[ns] = Some((s, [Some(turn), None]));
                seq += 1;
                heap.push(Reverse((ng + heuristic(x, y), seq, ns)));
            }
        }
        // Moving forward in the current facing.
        let (dx, dy) = f.delta();
        let nx = x as i64 + dx;
        let ny = y as i64 + dy;
        if nx >= 0 && ny >= 0 && (nx as usize) < occ.width && (ny as usize) < occ.height {
            let (nx, ny) = (nx as usize, ny as usize);
            let edge: Option<(u32, [Option<Action>; 2])> = match occ.at(nx, ny) {
                Occupancy::Traversable => Some((1, [Some(Action::MoveForward), None])),
                Occupancy::Door => Some((2, [Some(Action::ToggleDoor), Some(Action::MoveForward)])),
                Occupancy::Blocked => None,
            };
            if let Some((edge_cost, edge_actions)) = edge {
                let ns = state_index(occ.width, nx, ny, f);
                let ng = g + edge_cost;
                if ng < best[ns] {
                    best[ns] = ng;
                    parent[ns] = Some((s, edge_actions));
                    seq += 1;
                    heap.push(Reverse((ng + heuristic(nx, ny), seq, ns)));
                }
            }
        }
    }

    let Some(mut s) = goal_state else {
        return Path::unreachable();
    };
    let total_cost = best[s];
    let mut rev_actions: Vec<Action> = Vec::new();
    let mut rev_states = vec![s];
    while let Some((prev, acts)) = parent[s] {
        for a in acts.iter().rev().flatten() {
            rev_actions.push(*a);
        }
        s = prev;
        rev_states.push(s);
    }
    rev_actions.reverse();
    rev_states.reverse();
    let poses = rev_states
        .into_iter()
        .map(|st| {
            let f = Facing::ALL[st % 4];
            let cell = st / 4;
            Pose::new(cell % occ.width, cell / occ.width, f)
        })
        .collect();
    Path { poses, actions: rev_actions, cost: total_cost }
}

/// The rule-based action model `f(b, z)`: plan on the collapsed belief and
/// emit the single action realizing the first path step. Victim intents are
/// satisfied from an adjacent cell by facing the victim and triaging.
pub fn action_model(belief: &BeliefState, intent: Intent) -> Action {
    let occ = collapse(belief);
    let pose = belief.pose;
    let goal = (intent.x, intent.y);
    let target_block = BlockType::from_index(belief.argmax(intent.x, intent.y));
    let victim_intent = target_block.is_some_and(BlockType::is_victim);

    if victim_intent {
        // Adjacent and facing: triage. Adjacent but not facing: rotate.
        let adj = pose.x.abs_diff(intent.x) + pose.y.abs_diff(intent.y) == 1;
        if adj {
            let want = facing_toward((pose.x, pose.y), goal);
            if pose.facing == want {
                return Action::Triage;
            }
            return turns_between(pose.facing, want)[0];
        }
        // Plan to the cheapest adjacent traversable cell, N, E, S, W order.
        let mut best: Option<Path> = None;
        for nf in NEIGHBOR_ORDER {
            let (dx, dy) = nf.delta();
            let ax = intent.x as i64 + dx;
            let ay = intent.y as i64 + dy;
            if ax < 0 || ay < 0 || ax as usize >= occ.width || ay as usize >= occ.height {
                continue;
            }
            let (ax, ay) = (ax as usize, ay as usize);
            if occ.at(ax, ay) == Occupancy::Blocked {
                continue;
            }
            let path = astar(&occ, &pose, (ax, ay));
            if path.is_unreachable() {
                continue;
            }
            if best.as_ref().is_none_or(|b| path.cost < b.cost) {
                best = Some(path);
            }
        }
        return match best {
            Some(path) => first_action(&path, belief, intent),
            None => Action::None,
        };
    }

    if (pose.x, pose.y) == goal {
        return Action::None; // already satisfied
    }
    let path = astar(&occ, &pose, goal);
    if path.is_unreachable() {
        return Action::None;
    }
    first_action(&path, belief, intent)
}

fn first_action(path: &Path, belief: &BeliefState, intent: Intent) -> Action {
    match path.actions.first() {
        Some(a) => *a,
        None => {
            // Already standing at the goal cell of the plan: for victim
            // intents that means adjacent; face and triage.
            let pose = belief.pose;
            let want = facing_toward((pose.x, pose.y), (intent.x, intent.y));
            if pose.facing == want {
                Action::Triage
            } else {
                turns_between(pose.facing, want)[0]
            }
        }
    }
}

/// Facing that looks from `from` toward an orthogonally adjacent `to` (or the
/// dominant axis for non-adjacent cells, ties to the vertical axis).
pub fn facing_toward(from: (usize, usize), to: (usize, usize)) -> Facing {
    let dx = to.0 as i64 - from.0 as i64;
    let dy = to.1 as i64 - from.1 as i64;
    if dy.abs() >= dx.abs() {
        if dy <= 0 {
            Facing::North
        } else {
            Facing::South
        }
    } else if dx > 0 {
        Facing::East
    } else {
        Facing::West
    }
}

/// Distance-weighted prior over believed locations-of-interest:
/// mass `1 / max(d, 1)` at every cell whose belief argmax is a victim, door
/// or opening (L1 distance from the agent), normalized. Uniform over the
/// grid when nothing of interest is believed.
pub fn intent_prior(belief: &BeliefState) -> IntentPrior {
    let n = belief.width * belief.height;
    let mut probs = vec![0.0f64; n];
    let mut total = 0.0;
    for y in 0..belief.height {
        for x in 0..belief.width {
            let block = BlockType::from_index(belief.argmax(x, y)).unwrap_or(BlockType::Air);
            if block.is_location_of_interest() {
                let d = belief.pose.x.abs_diff(x) + belief.pose.y.abs_diff(y);
                let w = 1.0 / d.max(1) as f64;
                probs[y * belief.width + x] = w;
                total += w;
            }
        }
    }
    if total > 0.0 {
        for p in &mut probs {
            *p /= total;
        }
    } else {
        probs.fill(1.0 / n as f64);
    }
    IntentPrior { width: belief.width, height: belief.height, probs }
}

/// Categorical sample from the prior. Deterministic for a fixed RNG state.
pub fn sample_intent(prior: &IntentPrior, rng: &mut Prng) -> Intent {
    let idx = rng.categorical(&prior.probs).unwrap_or(0);
    Intent::new(idx % prior.width, idx / prior.width)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::belief::init_belief;
    use crate::gridworld::ObsCell;
    use crate::gridworld::Observation;

    fn belief_from_rows(rows: &[&str], pose: Pose) -> BeliefState {
        let height = rows.len();
        let width = rows[0].len();
        let mut b = init_belief(width, height, crate::gridworld::BLOCK_TYPES, 1200);
        let mut cells = Vec::with_capacity(width * height);
        for row in rows {
            for c in row.chars() {
                cells.push(ObsCell::Seen(BlockType::from_code(c).unwrap()));
            }
        }
        let obs = Observation { width, height, cells, beep: 0, pose, tick: 0 };
        crate::belief::integrate(&b, &obs).unwrap()
    }

    #[test]
    fn collapse_rules() {
        let b = belief_from_rows(&["#.D"], Pose::new(1, 0, Facing::East));
        let occ = collapse(&b);
        assert_eq!(occ.at(0, 0), Occupancy::Blocked);
        assert_eq!(occ.at(1, 0), Occupancy::Traversable);
        assert_eq!(occ.at(2, 0), Occupancy::Door);
    }

    #[test]
    fn collapse_uniform_tie_breaks_to_air() {
        let b = init_belief(2, 1, 8, 100);
        let occ = collapse(&b);
        assert_eq!(occ.at(0, 0), Occupancy::Traversable);
    }

    #[test]
    fn collapse_respects_argmax() {
        // 0.4 wall vs 0.6 air style mixtures stay traversable.
        let mut b = init_belief(1, 1, 8, 100);
        let obs = Observation {
            width: 1,
            height: 1,
            cells: vec![ObsCell::Seen(BlockType::Wall)],
            beep: 0,
            pose: Pose::new(0, 0, Facing::North),
            tick: 0,
        };
        b = crate::belief::integrate(&b, &obs).unwrap();
        // Decay it far enough that wall still dominates.
        for _ in 0..5 {
            b = crate::belief::decay(&b, 0.01);
        }
        assert_eq!(collapse(&b).at(0, 0), Occupancy::Blocked);
    }

    #[test]
    fn astar_start_equals_goal() {
        let b = belief_from_rows(&["....."], Pose::new(2, 0, Facing::East));
        let p = astar(&collapse(&b), &b.pose, (2, 0));
        assert_eq!(p.cost, 0);
        assert!(p.actions.is_empty());
        assert_eq!(p.poses, vec![b.pose]);
    }

    #[test]
    fn astar_straight_corridor_costs_length() {
        let b = belief_from_rows(&["......"], Pose::new(0, 0, Facing::East));
        let p = astar(&collapse(&b), &b.pose, (5, 0));
        assert_eq!(p.cost, 5);
        assert_eq!(p.actions, vec![Action::MoveForward; 5]);
    }

    #[test]
    fn astar_counts_turn_costs() {
        let b = belief_from_rows(&["...", "...", "..."], Pose::new(0, 0, Facing::North));
        // Goal is east: one right turn + two moves.
        let p = astar(&collapse(&b), &b.pose, (2, 0));
        assert_eq!(p.cost, 3);
        assert_eq!(p.actions[0], Action::RightTurn);
    }

    #[test]
    fn astar_through_door_costs_toggle() {
        let b = belief_from_rows(&[".D."], Pose::new(0, 0, Facing::East));
        let p = astar(&collapse(&b), &b.pose, (2, 0));
        // toggle + move + move.
        assert_eq!(p.cost, 3);
        assert_eq!(p.actions, vec![Action::ToggleDoor, Action::MoveForward, Action::MoveForward]);
    }

    #[test]
    fn astar_unreachable_is_empty() {
        let b = belief_from_rows(&[".#."], Pose::new(0, 0, Facing::East));
        let p = astar(&collapse(&b), &b.pose, (2, 0));
        assert!(p.is_unreachable());
    }

    #[test]
    fn action_model_triages_adjacent_victim_ahead() {
        let b = belief_from_rows(&[".v"], Pose::new(0, 0, Facing::East));
        assert_eq!(action_model(&b, Intent::new(1, 0)), Action::Triage);
    }

    #[test]
    fn action_model_turns_toward_intent_behind() {
        let b = belief_from_rows(&["v.."], Pose::new(1, 0, Facing::East));
        // Victim directly west, agent facing east: two turns, tie -> left.
        assert_eq!(action_model(&b, Intent::new(0, 0)), Action::LeftTurn);
    }

    #[test]
    fn action_model_unreachable_is_none() {
        let b = belief_from_rows(&[".#v"], Pose::new(0, 0, Facing::East));
        assert_eq!(action_model(&b, Intent::new(2, 0)), Action::None);
    }

    #[test]
    fn action_model_already_satisfied_is_none() {
        let b = belief_from_rows(&[".o."], Pose::new(1, 0, Facing::East));
        assert_eq!(action_model(&b, Intent::new(1, 0)), Action::None);
    }

    #[test]
    fn action_model_output_is_always_legal() {
        // Feeding the emitted action back through the simulator never faults;
        // spot-check movement toward a distant victim.
        let b = belief_from_rows(
            &["......", ".v....", "......", "....V.", "......"],
            Pose::new(0, 0, Facing::South),
        );
        for intent in [Intent::new(1, 1), Intent::new(4, 3)] {
            let a = action_model(&b, intent);
            assert!(Action::ALL.contains(&a));
            assert_ne!(a, Action::None);
        }
    }

    #[test]
    fn prior_weights_follow_inverse_distance() {
        // Two victims at L1 distances 2 and 4 -> probabilities 2/3 and 1/3.
        let b = belief_from_rows(&["..v.v"], Pose::new(0, 0, Facing::East));
        let prior = intent_prior(&b);
        assert!((prior.probs[2] - 2.0 / 3.0).abs() < 1e-12);
        assert!((prior.probs[4] - 1.0 / 3.0).abs() < 1e-12);
        let total: f64 = prior.probs.iter().sum();
        assert!((total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn prior_clamps_distance_zero() {
        let b = belief_from_rows(&["v"], Pose::new(0, 0, Facing::East));
        let prior = intent_prior(&b);
        assert!((prior.probs[0] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn prior_uniform_fallback() {
        let b = belief_from_rows(&["...."], Pose::new(0, 0, Facing::East));
        let prior = intent_prior(&b);
        for p in &prior.probs {
            assert!((p - 0.25).abs() < 1e-12);
        }
    }

    #[test]
    fn sample_intent_degenerate_prior() {
        let b = belief_from_rows(&["..v."], Pose::new(0, 0, Facing::East));
        let prior = intent_prior(&b);
        let mut rng = Prng::seed_from_u64(5);
        for _ in 0..50 {
            assert_eq!(sample_intent(&prior, &mut rng), Intent::new(2, 0));
        }
    }

    #[test]
    fn sample_intent_matches_weights_monte_carlo() {
        let b = belief_from_rows(&["..v.v"], Pose::new(0, 0, Facing::East));
        let prior = intent_prior(&b);
        let mut rng = Prng::seed_from_u64(11);
        let mut near = 0usize;
        let n = 100_000;
        for _ in 0..n {
            if sample_intent(&prior, &mut rng) == Intent::new(2, 0) {
                near += 1;
            }
        }
        let freq = near as f64 / n as f64;
        assert!((freq - 2.0 / 3.0).abs() < 0.01);
    }

    #[test]
    fn sample_intent_deterministic() {
        let b = belief_from_rows(&["..v.v"], Pose::new(0, 0, Facing::East));
        let prior = intent_prior(&b);
        let mut a = Prng::seed_from_u64(9);
        let mut b2 = Prng::seed_from_u64(9);
        for _ in 0..100 {
            assert_eq!(sample_intent(&prior, &mut a), sample_intent(&prior, &mut b2));
        }
    }

    #[test]
    fn decay_never_flips_one_hot_argmax() {
        let mut b = belief_from_rows(&["#v."], Pose::new(2, 0, Facing::West));
        for _ in 0..200 {
            b = crate::belief::decay(&b, 0.01);
        }
        assert_eq!(b.argmax(0, 0), BlockType::Wall.index());
        assert_eq!(b.argmax(1, 0), BlockType::VictimNonCritical.index());
    }

    /// Independent Dijkstra over the same (cell, facing) state space, written
    /// without a heuristic or shared code, used as the optimality oracle.
    fn dijkstra_cost(occ: &OccupancyGrid, start: &Pose, goal: (usize, usize)) -> Option<u32> {
        use std::collections::BinaryHeap;
        let n = occ.width * occ.height * 4;
        let idx = |x: usize, y: usize, f: usize| (y * occ.width + x) * 4 + f;
        let mut dist = vec![u32::MAX; n];
        let mut heap = BinaryHeap::new();
        let s0 = idx(start.x, start.y, start.facing.index());
        dist[s0] = 0;
        heap.push(Reverse((0u32, s0)));
        while let Some(Reverse((d, s))) = heap.pop() {
            if d > dist[s] {
                continue;
            }
            let f = s % 4;
            let cell = s / 4;
            let (x, y) = (cell % occ.width, cell / occ.width);
            if (x, y) == goal {
                return Some(d);
            }
            for nf in [(f + 1) % 4, (f + 3) % 4] {
                let ns = idx(x, y, nf);
                if d + 1 < dist[ns] {
                    dist[ns] = d + 1;
                    heap.push(Reverse((d + 1, ns)));
                }
            }
            let (dx, dy) = Facing::ALL[f].delta();
            let nx = x as i64 + dx;
            let ny = y as i64 + dy;
            if nx >= 0 && ny >= 0 && (nx as usize) < occ.width && (ny as usize) < occ.height {
                let (nx, ny) = (nx as usize, ny as usize);
                let c = match occ.at(nx, ny) {
                    Occupancy::Traversable => 1,
                    Occupancy::Door => 2,
                    Occupancy::Blocked => continue,
                };
                let ns = idx(nx, ny, f);
                if d + c < dist[ns] {
                    dist[ns] = d + c;
                    heap.push(Reverse((d + c, ns)));
                }
            }
        }
        None
    }

    #[test]
    fn astar_matches_dijkstra_on_random_grids() {
        let mut rng = Prng::seed_from_u64(2024);
        let mut checked = 0;
        for _ in 0..100 {
            let (w, h) = (16, 16);
            let mut cells = Vec::with_capacity(w * h);
            for _ in 0..w * h {
                let u = rng.uniform();
                cells.push(if u < 0.25 {
                    Occupancy::Blocked
                } else if u < 0.35 {
                    Occupancy::Door
                } else {
                    Occupancy::Traversable
                });
            }
            let occ = OccupancyGrid { width: w, height: h, cells };
            let start = Pose::new(rng.index(w), rng.index(h), Facing::ALL[rng.index(4)]);
            let goal = (rng.index(w), rng.index(h));
            let path = astar(&occ, &start, goal);
            let oracle = dijkstra_cost(&occ, &start, goal);
            match oracle {
                None => assert!(path.is_unreachable(), "A* found a path Dijkstra did not"),
                Some(c) => {
                    assert!(!path.is_unreachable(), "A* missed a path Dijkstra found");
                    assert_eq!(path.cost, c, "cost mismatch on instance {checked}");
                }
            }
            checked += 1;
        }
        assert_eq!(checked, 100);
    }
}
