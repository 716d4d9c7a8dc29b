//! Scripted synthetic agents.
//!
//! Each agent plays one mission with full knowledge of the true map, picking
//! targets according to its strategy and executing A* plans one action per
//! tick. A per-decision noise rate occasionally re-samples the target
//! uniformly from the known locations-of-interest, which is what makes the
//! three profiles behave like distinct but overlapping populations.

use std::collections::VecDeque;

use super::{
    observe, Action, AgentProfile, BlockType, Map, Pose, Strategy, TickRecord, Trajectory,
    WorldState,
};
use crate::planner::{astar, facing_toward, turns_between, Occupancy, OccupancyGrid, Path};
use crate::util::Prng;

/// Occupancy of the true world for agent planning. Unlike the belief-side
/// collapse, victims and levers are obstacles here: agents stand next to
/// victims, never on them.
fn occupancy_from_world(world: &WorldState) -> OccupancyGrid {
    let cells = world
        .grid
        .iter()
        .map(|b| match b {
            BlockType::DoorClosed => Occupancy::Door,
            b if b.is_traversable() => Occupancy::Traversable,
            _ => Occupancy::Blocked,
        })
        .collect();
    OccupancyGrid { width: world.width, height: world.height, cells }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Target {
    /// Walk adjacent to the victim cell and triage it.
    Victim((usize, usize)),
    /// Walk onto the cell (doors, openings).
    Cell((usize, usize)),
}

/// Cheapest path to a cell adjacent to `victim`, preferring N, E, S, W on
/// ties.
fn path_to_victim(occ: &OccupancyGrid, pose: &Pose, victim: (usize, usize)) -> Path {
    let mut best = Path::unreachable();
    for f in [super::Facing::North, super::Facing::East, super::Facing::South, super::Facing::West]
    {
        let (dx, dy) = f.delta();
        let ax = victim.0 as i64 + dx;
        let ay = victim.1 as i64 + dy;
        if ax < 0 || ay < 0 || ax as usize >= occ.width || ay as usize >= occ.height {
            continue;
        }
        let (ax, ay) = (ax as usize, ay as usize);
        if occ.at(ax, ay) == Occupancy::Blocked {
            continue;
        }
        let p = astar(occ, pose, (ax, ay));
        if !p.is_unreachable() && (best.is_unreachable() || p.cost < best.cost) {
            best = p;
        }
    }
    best
}

fn plan_for(occ: &OccupancyGrid, pose: &Pose, target: Target) -> Path {
    match target {
        Target::Victim(v) => path_to_victim(occ, pose, v),
        Target::Cell(c) => astar(occ, pose, c),
    }
}

/// Triageable victims in deterministic (y, x) order.
fn viable_victims(world: &WorldState, tick: u32) -> Vec<(usize, usize, bool)> {
    let mut out: Vec<(usize, usize, bool)> = world
        .victims
        .iter()
        .filter(|v| v.triageable(tick))
        .map(|v| (v.victim.x, v.victim.y, v.victim.critical))
        .collect();
    out.sort_by_key(|&(x, y, _)| (y, x));
    out
}

/// Nearest target among `candidates` by path cost; ties go to (y, x) order.
fn nearest(
    occ: &OccupancyGrid,
    pose: &Pose,
    candidates: impl Iterator<Item = Target>,
) -> Option<(Target, Path)> {
    let mut best: Option<(Target, Path)> = None;
    for t in candidates {
        let p = plan_for(occ, pose, t);
        if p.is_unreachable() {
            continue;
        }
        if best.as_ref().is_none_or(|(_, bp)| p.cost < bp.cost) {
            best = Some((t, p));
        }
    }
    best
}

struct AgentState {
    target: Option<Target>,
    plan: VecDeque<Action>,
    stalled: bool,
}

impl AgentState {
    /// Target still worth pursuing?
    fn target_valid(&self, world: &WorldState, tick: u32) -> bool {
        match self.target {
            None => false,
            Some(Target::Victim(v)) => world
                .victims
                .iter()
                .any(|s| (s.victim.x, s.victim.y) == v && s.triageable(tick)),
            Some(Target::Cell(_)) => true,
        }
    }
}

fn select_target(
    world: &WorldState,
    pose: &Pose,
    occ: &OccupancyGrid,
    profile: &AgentProfile,
    beep: u8,
    tick: u32,
    rng: &mut Prng,
) -> Option<(Target, Path)> {
    // Noise: with probability `noise`, re-sample uniformly from the known
    // locations-of-interest (viable victims, doors, openings).
    if profile.noise > 0.0 && rng.uniform() < profile.noise {
        let mut lois: Vec<Target> = Vec::new();
        for (x, y, _) in viable_victims(world, tick) {
            lois.push(Target::Victim((x, y)));
        }
        for y in 0..world.height {
            for x in 0..world.width {
                if matches!(
                    world.block(x, y),
                    BlockType::DoorClosed | BlockType::DoorOpen | BlockType::Opening
                ) {
                    lois.push(Target::Cell((x, y)));
                }
            }
        }
        if !lois.is_empty() {
            // Try the sampled location first; fall back to strategy choice if
            // it is unreachable.
            let t = lois[rng.index(lois.len())];
            let p = plan_for(occ, pose, t);
            if !p.is_unreachable() {
                return Some((t, p));
            }
        }
    }

    let victims = viable_victims(world, tick);
    let by_criticality = |want_critical: bool| {
        victims
            .iter()
            .filter(move |&&(_, _, c)| c == want_critical)
            .map(|&(x, y, _)| Target::Victim((x, y)))
    };

    match profile.strategy {
        Strategy::NearestVictim => {
            nearest(occ, pose, victims.iter().map(|&(x, y, _)| Target::Victim((x, y))))
        }
        Strategy::CriticalFirst => nearest(occ, pose, by_criticality(true))
            .or_else(|| nearest(occ, pose, by_criticality(false))),
        Strategy::SignalAware => {
            if beep > 0 {
                // Beeping room nearby: go for its victims first, preferring
                // critical when the signal says critical.
                let mut room_victims: Vec<Target> = Vec::new();
                for room in &world.rooms {
                    if !room.near(pose.x, pose.y) {
                        continue;
                    }
                    for &(x, y, critical) in &victims {
                        if room.contains(x, y) && (beep != 2 || critical) {
                            room_victims.push(Target::Victim((x, y)));
                        }
                    }
                }
                if let Some(hit) = nearest(occ, pose, room_victims.into_iter()) {
                    return Some(hit);
                }
            }
            nearest(occ, pose, by_criticality(true))
                .or_else(|| nearest(occ, pose, by_criticality(false)))
        }
    }
}

/// Run one scripted mission and record the trajectory. Deterministic for a
/// fixed (map, profile, seed, mission_ticks) tuple: re-running replays
/// bit-exactly.
pub fn run_scripted_agent(
    map: &Map,
    profile: &AgentProfile,
    seed: u64,
    mission_ticks: u32,
) -> Trajectory {
    assert!(mission_ticks > 0, "mission must last at least one tick");
    let mut world = WorldState::from_map(map);
    let mut pose = map.spawn;
    let mut rng = Prng::derive(seed, 0x6167_656e_74);
    let mut agent = AgentState { target: None, plan: VecDeque::new(), stalled: false };
    let mut steps = Vec::with_capacity(mission_ticks as usize);

    for tick in 0..mission_ticks {
        let obs = observe(&world, &pose, tick);

        // Decide. Bounded retry loop: selecting a target, finishing a plan
        // and starting triage can all happen within one tick.
        let mut action = Action::None;
        for _ in 0..4 {
            if !agent.target_valid(&world, tick) {
                agent.target = None;
                agent.plan.clear();
                if !agent.stalled {
                    let occ = occupancy_from_world(&world);
                    match select_target(&world, &pose, &occ, profile, obs.beep, tick, &mut rng) {
                        Some((t, p)) => {
                            agent.target = Some(t);
                            agent.plan = p.actions.into_iter().collect();
                        }
                        None => {
                            // No reachable target left: idle to mission end.
                            agent.stalled = true;
                        }
                    }
                }
            }
            let Some(target) = agent.target else {
                action = Action::None;
                break;
            };
            if let Some(a) = agent.plan.pop_front() {
                action = a;
                break;
            }
            // Plan exhausted: we are at the goal cell (openings/doors) or
            // adjacent to the victim.
            match target {
                Target::Cell(_) => {
                    // Arrived; target consumed, decide again this tick.
                    agent.target = None;
                    continue;
                }
                Target::Victim(v) => {
                    let want = facing_toward((pose.x, pose.y), v);
                    if pose.facing == want {
                        action = Action::Triage;
                    } else {
                        action = turns_between(pose.facing, want)[0];
                    }
                    break;
                }
            }
        }

        steps.push(TickRecord { observation: obs, action });
        world.step_mut(&mut pose, action, tick);
    }

    Trajectory {
        map_id: map.id.clone(),
        profile: *profile,
        seed,
        mission_ticks,
        spawn: map.spawn,
        steps,
        planner_stalled: agent.stalled,
    }
}
