//! Deterministic 2-D search-and-rescue simulator.
//!
//! The world is an X by Y grid of block types with victims that expire on a
//! timer, doors that toggle, and a scoring rule. Scripted agents
//! ([`run_scripted_agent`]) generate the trajectories every downstream model
//! trains on. One tick is 0.5 s of mission time.

pub mod agent;
pub mod gen;
pub mod io;
pub mod observe;

pub use agent::run_scripted_agent;
pub use gen::{generate_map, ScenarioConfig};
pub use observe::observe;

use serde::{Deserialize, Serialize};

/// Number of true block types. The observation-only `unseen` marker is not a
/// block type and never enters a belief distribution.
pub const BLOCK_TYPES: usize = 8;

/// Ticks per second of mission time (one tick is 0.5 s).
pub const TICKS_PER_SECOND: u32 = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
#[repr(u8)]
pub enum BlockType {
    Air = 0,
    Wall = 1,
    DoorClosed = 2,
    DoorOpen = 3,
    Opening = 4,
    Lever = 5,
    VictimNonCritical = 6,
    VictimCritical = 7,
}

impl BlockType {
    pub const ALL: [BlockType; BLOCK_TYPES] = [
        BlockType::Air,
        BlockType::Wall,
        BlockType::DoorClosed,
        BlockType::DoorOpen,
        BlockType::Opening,
        BlockType::Lever,
        BlockType::VictimNonCritical,
        BlockType::VictimCritical,
    ];

    pub fn from_index(i: usize) -> Option<BlockType> {
        Self::ALL.get(i).copied()
    }

    pub fn index(self) -> usize {
        self as usize
    }

    /// One-character code used by the map file format and debug dumps.
    pub fn code(self) -> char {
        match self {
            BlockType::Air => '.',
            BlockType::Wall => '#',
            BlockType::DoorClosed => 'D',
            BlockType::DoorOpen => 'd',
            BlockType::Opening => 'o',
            BlockType::Lever => 'L',
            BlockType::VictimNonCritical => 'v',
            BlockType::VictimCritical => 'V',
        }
    }

    pub fn from_code(c: char) -> Option<BlockType> {
        Self::ALL.into_iter().find(|b| b.code() == c)
    }

    /// Can an agent stand on / walk through this cell?
    pub fn is_traversable(self) -> bool {
        matches!(self, BlockType::Air | BlockType::Opening | BlockType::DoorOpen)
    }

    /// Does this cell block line of sight?
    pub fn is_opaque(self) -> bool {
        matches!(self, BlockType::Wall | BlockType::DoorClosed)
    }

    pub fn is_victim(self) -> bool {
        matches!(self, BlockType::VictimNonCritical | BlockType::VictimCritical)
    }

    /// Victims, doors and room openings: the intent vocabulary.
    pub fn is_location_of_interest(self) -> bool {
        matches!(
            self,
            BlockType::DoorClosed
                | BlockType::DoorOpen
                | BlockType::Opening
                | BlockType::VictimNonCritical
                | BlockType::VictimCritical
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
#[repr(u8)]
pub enum Facing {
    North = 0,
    East = 1,
    South = 2,
    West = 3,
}

impl Facing {
    pub const ALL: [Facing; 4] = [Facing::North, Facing::East, Facing::South, Facing::West];

    /// Grid delta, with y growing southward.
    pub fn delta(self) -> (i64, i64) {
        match self {
            Facing::North => (0, -1),
            Facing::East => (1, 0),
            Facing::South => (0, 1),
            Facing::West => (-1, 0),
        }
    }

    pub fn left(self) -> Facing {
        Facing::ALL[(self as usize + 3) % 4]
    }

    pub fn right(self) -> Facing {
        Facing::ALL[(self as usize + 1) % 4]
    }

    pub fn index(self) -> usize {
        self as usize
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Pose {
    pub x: usize,
    pub y: usize,
    pub facing: Facing,
}

impl Pose {
    pub fn new(x: usize, y: usize, facing: Facing) -> Pose {
        Pose { x, y, facing }
    }

    /// Cell directly in front of the agent, if in bounds.
    pub fn ahead(&self, width: usize, height: usize) -> Option<(usize, usize)> {
        let (dx, dy) = self.facing.delta();
        let nx = self.x as i64 + dx;
        let ny = self.y as i64 + dy;
        if nx >= 0 && ny >= 0 && (nx as usize) < width && (ny as usize) < height {
            Some((nx as usize, ny as usize))
        } else {
            None
        }
    }
}

/// One action per tick. Illegal actions degrade to no-ops so that replay of
/// noisy scripted behaviour is always total.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
#[repr(u8)]
pub enum Action {
    MoveForward = 0,
    LeftTurn = 1,
    RightTurn = 2,
    ToggleDoor = 3,
    ToggleLever = 4,
    Triage = 5,
    None = 6,
}

impl Action {
    pub const COUNT: usize = 7;
    pub const ALL: [Action; Action::COUNT] = [
        Action::MoveForward,
        Action::LeftTurn,
        Action::RightTurn,
        Action::ToggleDoor,
        Action::ToggleLever,
        Action::Triage,
        Action::None,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Action> {
        Self::ALL.get(i).copied()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Victim {
    pub x: usize,
    pub y: usize,
    pub critical: bool,
    /// Tick at which the victim expires; triage must happen strictly before.
    pub expiry_tick: u32,
}

/// Axis-aligned room rectangle, inclusive bounds, including perimeter walls.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Rect {
    pub x0: usize,
    pub y0: usize,
    pub x1: usize,
    pub y1: usize,
}

impl Rect {
    pub fn contains(&self, x: usize, y: usize) -> bool {
        x >= self.x0 && x <= self.x1 && y >= self.y0 && y <= self.y1
    }

    /// Within Chebyshev distance 1 of the rectangle (inside counts).
    pub fn near(&self, x: usize, y: usize) -> bool {
        x + 1 >= self.x0 && x <= self.x1 + 1 && y + 1 >= self.y0 && y <= self.y1 + 1
    }
}

/// Immutable mission blueprint produced by [`generate_map`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Map {
    pub id: String,
    pub width: usize,
    pub height: usize,
    /// Row-major grid, index `y * width + x`.
    pub grid: Vec<BlockType>,
    pub victims: Vec<Victim>,
    pub rooms: Vec<Rect>,
    pub spawn: Pose,
    pub triage_ticks_critical: u32,
    pub triage_ticks_noncritical: u32,
    pub points_critical: u32,
    pub points_noncritical: u32,
}

impl Map {
    pub fn block(&self, x: usize, y: usize) -> BlockType {
        self.grid[y * self.width + x]
    }

    /// All location-of-interest cells on the pristine map (victims, doors,
    /// openings). This is the denominator of the chance baseline.
    pub fn locations_of_interest(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for y in 0..self.height {
            for x in 0..self.width {
                if self.block(x, y).is_location_of_interest() {
                    out.push((x, y));
                }
            }
        }
        out
    }
}

/// Per-victim mutable status inside a [`WorldState`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct VictimStatus {
    pub victim: Victim,
    /// Tick at which triage completed, if it did.
    pub triaged_at: Option<u32>,
}

impl VictimStatus {
    pub fn triageable(&self, tick: u32) -> bool {
        self.triaged_at.is_none() && tick < self.victim.expiry_tick
    }
}

/// Mutable simulation state: grid (doors toggle, victims disappear), victim
/// registry, score, and in-progress triage bookkeeping.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorldState {
    pub width: usize,
    pub height: usize,
    pub grid: Vec<BlockType>,
    pub victims: Vec<VictimStatus>,
    pub score: u32,
    /// (victim cell, consecutive triage ticks so far).
    pub triage_progress: Option<((usize, usize), u32)>,
    pub triage_ticks_critical: u32,
    pub triage_ticks_noncritical: u32,
    pub points_critical: u32,
    pub points_noncritical: u32,
    pub rooms: Vec<Rect>,
}

impl WorldState {
    pub fn from_map(map: &Map) -> WorldState {
        WorldState {
            width: map.width,
            height: map.height,
            grid: map.grid.clone(),
            victims: map
                .victims
                .iter()
                .map(|v| VictimStatus { victim: *v, triaged_at: None })
                .collect(),
            score: 0,
            triage_progress: None,
            triage_ticks_critical: map.triage_ticks_critical,
            triage_ticks_noncritical: map.triage_ticks_noncritical,
            points_critical: map.points_critical,
            points_noncritical: map.points_noncritical,
            rooms: map.rooms.clone(),
        }
    }

    pub fn block(&self, x: usize, y: usize) -> BlockType {
        self.grid[y * self.width + x]
    }

    fn set_block(&mut self, x: usize, y: usize, b: BlockType) {
        self.grid[y * self.width + x] = b;
    }

    pub fn victim_at(&self, x: usize, y: usize) -> Option<&VictimStatus> {
        self.victims
            .iter()
            .find(|v| v.victim.x == x && v.victim.y == y && v.triaged_at.is_none())
    }

    /// Apply one action in place. Illegal actions are no-ops.
    pub fn step_mut(&mut self, pose: &mut Pose, action: Action, tick: u32) {
        // Any non-triage action breaks the consecutive-triage chain.
        if action != Action::Triage {
            self.triage_progress = None;
        }
        match action {
            Action::MoveForward => {
                if let Some((nx, ny)) = pose.ahead(self.width, self.height) {
                    if self.block(nx, ny).is_traversable() {
                        pose.x = nx;
                        pose.y = ny;
                    }
                }
            }
            Action::LeftTurn => pose.facing = pose.facing.left(),
            Action::RightTurn => pose.facing = pose.facing.right(),
            Action::ToggleDoor => {
                if let Some((nx, ny)) = pose.ahead(self.width, self.height) {
                    match self.block(nx, ny) {
                        BlockType::DoorClosed => self.set_block(nx, ny, BlockType::DoorOpen),
                        BlockType::DoorOpen => self.set_block(nx, ny, BlockType::DoorClosed),
                        _ => {}
                    }
                }
            }
            Action::ToggleLever => {
                // Levers are interactable scenery: the action is legal when
                // facing one but has no world effect.
            }
            Action::Triage => {
                let target = pose.ahead(self.width, self.height);
                let mut done = None;
                if let Some((nx, ny)) = target {
                    if let Some(status) = self.victim_at(nx, ny) {
                        if status.triageable(tick) {
                            let required = if status.victim.critical {
                                self.triage_ticks_critical
                            } else {
                                self.triage_ticks_noncritical
                            };
                            let progress = match self.triage_progress {
                                Some((cell, n)) if cell == (nx, ny) => n + 1,
                                _ => 1,
                            };
                            if progress >= required {
                                done = Some((nx, ny, status.victim.critical));
                                self.triage_progress = None;
                            } else {
                                self.triage_progress = Some(((nx, ny), progress));
                            }
                        } else {
                            // Expired victim: triage degrades to a no-op.
                            self.triage_progress = None;
                        }
                    } else {
                        self.triage_progress = None;
                    }
                }
                if let Some((nx, ny, critical)) = done {
                    self.set_block(nx, ny, BlockType::Air);
                    for v in &mut self.victims {
                        if v.victim.x == nx && v.victim.y == ny && v.triaged_at.is_none() {
                            v.triaged_at = Some(tick);
                            break;
                        }
                    }
                    self.score += if critical { self.points_critical } else { self.points_noncritical };
                }
            }
            Action::None => {}
        }
    }
}

/// Pure-value step: clones the state, applies the action, returns both.
pub fn step(state: &WorldState, pose: &Pose, action: Action, tick: u32) -> (WorldState, Pose) {
    let mut s = state.clone();
    let mut p = *pose;
    s.step_mut(&mut p, action, tick);
    (s, p)
}

/// A grid cell as seen by the agent: a block type, or unseen.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ObsCell {
    Unseen,
    Seen(BlockType),
}

impl ObsCell {
    pub fn seen(self) -> Option<BlockType> {
        match self {
            ObsCell::Unseen => None,
            ObsCell::Seen(b) => Some(b),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Observation {
    pub width: usize,
    pub height: usize,
    /// Row-major, index `y * width + x`.
    pub cells: Vec<ObsCell>,
    /// 0 = silent, 1 = near a room with a non-critical victim, 2 = critical.
    pub beep: u8,
    pub pose: Pose,
    pub tick: u32,
}

impl Observation {
    pub fn cell(&self, x: usize, y: usize) -> ObsCell {
        self.cells[y * self.width + x]
    }

    pub fn sees_any(&self, pred: impl Fn(BlockType) -> bool) -> bool {
        self.cells.iter().any(|c| c.seen().is_some_and(&pred))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Strategy {
    /// Head for the closest triageable victim, ignoring criticality.
    NearestVictim,
    /// Prioritize critical victims while any are unexpired.
    CriticalFirst,
    /// CriticalFirst, but beeping rooms are entered first.
    SignalAware,
}

impl Strategy {
    pub const ALL: [Strategy; 3] =
        [Strategy::NearestVictim, Strategy::CriticalFirst, Strategy::SignalAware];
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AgentProfile {
    pub id: u32,
    pub strategy: Strategy,
    /// Probability, per decision point, of re-sampling the target uniformly
    /// from known locations-of-interest.
    pub noise: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TickRecord {
    pub observation: Observation,
    pub action: Action,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub map_id: String,
    pub profile: AgentProfile,
    pub seed: u64,
    pub mission_ticks: u32,
    pub spawn: Pose,
    pub steps: Vec<TickRecord>,
    /// Set when the agent ran out of reachable targets and idled to the end.
    pub planner_stalled: bool,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }
}

/// Re-simulate stored actions from spawn and check every stored observation.
///
/// Returns the tick of the first mismatch, or Ok(final world) if the replay is
/// bit-exact.
pub fn replay(map: &Map, traj: &Trajectory) -> Result<WorldState, u32> {
    let mut world = WorldState::from_map(map);
    let mut pose = traj.spawn;
    for (t, rec) in traj.steps.iter().enumerate() {
        let obs = observe(&world, &pose, t as u32);
        if obs != rec.observation {
            return Err(t as u32);
        }
        world.step_mut(&mut pose, rec.action, t as u32);
    }
    Ok(world)
}

/// Replay without verification, yielding the world state and pose at every
/// tick (before that tick's action is applied).
pub fn replay_states(map: &Map, traj: &Trajectory) -> Vec<(WorldState, Pose)> {
    let mut out = Vec::with_capacity(traj.steps.len());
    let mut world = WorldState::from_map(map);
    let mut pose = traj.spawn;
    for (t, rec) in traj.steps.iter().enumerate() {
        out.push((world.clone(), pose));
        world.step_mut(&mut pose, rec.action, t as u32);
    }
    out
}
