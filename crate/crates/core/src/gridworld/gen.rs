//! Procedural mission maps: a ring corridor, a grid of walled rooms with
//! doors or wall openings onto the corridors, victims scattered through room
//! interiors, and a few wall-mounted levers.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{BlockType, Facing, Map, Pose, Rect, Victim};
use crate::util::{sha256_hex, Prng};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioConfig {
    pub width: usize,
    pub height: usize,
    pub victims: usize,
    pub critical_victims: usize,
    pub levers: usize,
    pub mission_ticks: u32,
    /// Critical victims expire 5 minutes in.
    pub critical_expiry_ticks: u32,
    /// Non-critical victims expire at mission end (10 minutes).
    pub noncritical_expiry_ticks: u32,
    pub triage_ticks_critical: u32,
    pub triage_ticks_noncritical: u32,
    pub points_critical: u32,
    pub points_noncritical: u32,
}

impl Default for ScenarioConfig {
    /// The default mission: a 24x24 building, 34 victims of which 10 are
    /// critical, 10-minute mission at 0.5 s per tick.
    fn default() -> Self {
        ScenarioConfig {
            width: 24,
            height: 24,
            victims: 34,
            critical_victims: 10,
            levers: 2,
            mission_ticks: 1200,
            critical_expiry_ticks: 600,
            noncritical_expiry_ticks: 1200,
            triage_ticks_critical: 30,
            triage_ticks_noncritical: 15,
            points_critical: 30,
            points_noncritical: 10,
        }
    }
}

#[derive(Debug, Error)]
pub enum MapGenError {
    #[error("map must be at least 9x9, got {width}x{height}")]
    TooSmall { width: usize, height: usize },
    #[error("{requested} victims requested but only {capacity} interior floor cells exist")]
    TooManyVictims { requested: usize, capacity: usize },
    #[error("critical victim count {critical} exceeds victim count {total}")]
    CriticalExceedsTotal { critical: usize, total: usize },
    #[error("no connected layout found after {retries} attempts for seed {seed}")]
    SeedExhaustion { seed: u64, retries: u32 },
}

/// Split `span` into the largest feasible count of equal room plots separated
/// by 1-wide corridors. Returns (plot count, plot width).
fn plot_split(span: usize) -> (usize, usize) {
    for k in (1..=6).rev() {
        if span + 1 >= k * 6 && (span - (k - 1)) % k == 0 {
            let pw = (span - (k - 1)) / k;
            if pw >= 5 {
                return (k, pw);
            }
        }
    }
    (1, span)
}

/// Deterministic map generation. Identical (config, seed) pairs produce
/// byte-identical maps.
pub fn generate_map(config: &ScenarioConfig, seed: u64) -> Result<Map, MapGenError> {
    if config.width < 9 || config.height < 9 {
        return Err(MapGenError::TooSmall { width: config.width, height: config.height });
    }
    if config.critical_victims > config.victims {
        return Err(MapGenError::CriticalExceedsTotal {
            critical: config.critical_victims,
            total: config.victims,
        });
    }

    const MAX_RETRIES: u32 = 32;
    let mut rng = Prng::derive(seed, 0x6d61_70);
    for _ in 0..MAX_RETRIES {
        match try_generate(config, seed, &mut rng) {
            Ok(map) => return Ok(map),
            Err(e @ (MapGenError::TooManyVictims { .. } | MapGenError::CriticalExceedsTotal { .. })) => {
                return Err(e)
            }
            Err(_) => {}
        }
    }
    Err(MapGenError::SeedExhaustion { seed, retries: MAX_RETRIES })
}

fn try_generate(config: &ScenarioConfig, seed: u64, rng: &mut Prng) -> Result<Map, MapGenError> {
    let (w, h) = (config.width, config.height);
    let mut grid = vec![BlockType::Air; w * h];
    let at = |x: usize, y: usize| y * w + x;

    // Border walls.
    for x in 0..w {
        grid[at(x, 0)] = BlockType::Wall;
        grid[at(x, h - 1)] = BlockType::Wall;
    }
    for y in 0..h {
        grid[at(0, y)] = BlockType::Wall;
        grid[at(w - 1, y)] = BlockType::Wall;
    }

    // Room plots tile the region inside the ring corridor (x, y in [2, d-3]).
    let (kx, pw) = plot_split(w - 4);
    let (ky, ph) = plot_split(h - 4);
    let mut rooms = Vec::new();
    for ry in 0..ky {
        for rx in 0..kx {
            let x0 = 2 + rx * (pw + 1);
            let y0 = 2 + ry * (ph + 1);
            let room = Rect { x0, y0, x1: x0 + pw - 1, y1: y0 + ph - 1 };
            // Perimeter walls.
            for x in room.x0..=room.x1 {
                grid[at(x, room.y0)] = BlockType::Wall;
                grid[at(x, room.y1)] = BlockType::Wall;
            }
            for y in room.y0..=room.y1 {
                grid[at(room.x0, y)] = BlockType::Wall;
                grid[at(room.x1, y)] = BlockType::Wall;
            }
            rooms.push(room);
        }
    }

    // Every room gets one or two entrances (a door or an opening) carved into
    // a perimeter wall, never at a corner. All plot perimeters face corridors.
    let mut entrances: Vec<(usize, usize)> = Vec::new();
    for room in &rooms {
        let n_entrances = 1 + rng.index(2);
        for _ in 0..n_entrances {
            let side = rng.index(4);
            let (x, y) = match side {
                0 => (room.x0 + 1 + rng.index(room.x1 - room.x0 - 1), room.y0),
                1 => (room.x1, room.y0 + 1 + rng.index(room.y1 - room.y0 - 1)),
                2 => (room.x0 + 1 + rng.index(room.x1 - room.x0 - 1), room.y1),
                _ => (room.x0, room.y0 + 1 + rng.index(room.y1 - room.y0 - 1)),
            };
            let block =
                if rng.uniform() < 0.5 { BlockType::DoorClosed } else { BlockType::Opening };
            grid[at(x, y)] = block;
            entrances.push((x, y));
        }
    }

    // Victims occupy room-interior floor cells.
    let mut interior: Vec<(usize, usize)> = Vec::new();
    for room in &rooms {
        for y in room.y0 + 1..room.y1 {
            for x in room.x0 + 1..room.x1 {
                interior.push((x, y));
            }
        }
    }
    if config.victims > interior.len() {
        return Err(MapGenError::TooManyVictims {
            requested: config.victims,
            capacity: interior.len(),
        });
    }
    rng.shuffle(&mut interior);
    let mut victims = Vec::with_capacity(config.victims);
    for (i, &(x, y)) in interior.iter().take(config.victims).enumerate() {
        let critical = i < config.critical_victims;
        grid[at(x, y)] =
            if critical { BlockType::VictimCritical } else { BlockType::VictimNonCritical };
        victims.push(Victim {
            x,
            y,
            critical,
            expiry_tick: if critical {
                config.critical_expiry_ticks
            } else {
                config.noncritical_expiry_ticks
            },
        });
    }
    victims.sort_by_key(|v| (v.y, v.x));

    // Levers replace plain perimeter wall cells (never entrances or corners).
    let mut wall_candidates: Vec<(usize, usize)> = Vec::new();
    for room in &rooms {
        for x in room.x0 + 1..room.x1 {
            for y in [room.y0, room.y1] {
                if grid[at(x, y)] == BlockType::Wall {
                    wall_candidates.push((x, y));
                }
            }
        }
        for y in room.y0 + 1..room.y1 {
            for x in [room.x0, room.x1] {
                if grid[at(x, y)] == BlockType::Wall {
                    wall_candidates.push((x, y));
                }
            }
        }
    }
    rng.shuffle(&mut wall_candidates);
    for &(x, y) in wall_candidates.iter().take(config.levers) {
        grid[at(x, y)] = BlockType::Lever;
    }

    let spawn = Pose::new(1, 1, Facing::East);

    // Connectivity: every victim must be reachable from spawn, where doors
    // count as passable (they can be toggled open).
    let mut reach = vec![false; w * h];
    let mut queue = std::collections::VecDeque::new();
    reach[at(spawn.x, spawn.y)] = true;
    queue.push_back((spawn.x, spawn.y));
    while let Some((x, y)) = queue.pop_front() {
        for (dx, dy) in [(0i64, -1i64), (1, 0), (0, 1), (-1, 0)] {
            let nx = x as i64 + dx;
            let ny = y as i64 + dy;
            if nx < 0 || ny < 0 || nx as usize >= w || ny as usize >= h {
                continue;
            }
            let (nx, ny) = (nx as usize, ny as usize);
            let b = grid[at(nx, ny)];
            if !reach[at(nx, ny)] && (b.is_traversable() || b == BlockType::DoorClosed) {
                reach[at(nx, ny)] = true;
                queue.push_back((nx, ny));
            }
        }
    }
    let victim_reachable = |v: &Victim| {
        [(0i64, -1i64), (1, 0), (0, 1), (-1, 0)].iter().any(|(dx, dy)| {
            let nx = v.x as i64 + dx;
            let ny = v.y as i64 + dy;
            nx >= 0
                && ny >= 0
                && (nx as usize) < w
                && (ny as usize) < h
                && reach[at(nx as usize, ny as usize)]
        })
    };
    if !victims.iter().all(victim_reachable) {
        return Err(MapGenError::SeedExhaustion { seed, retries: 1 });
    }

    let mut map = Map {
        id: String::new(),
        width: w,
        height: h,
        grid,
        victims,
        rooms,
        spawn,
        triage_ticks_critical: config.triage_ticks_critical,
        triage_ticks_noncritical: config.triage_ticks_noncritical,
        points_critical: config.points_critical,
        points_noncritical: config.points_noncritical,
    };
    let content: Vec<u8> = map.grid.iter().map(|b| b.index() as u8).collect();
    map.id = format!("map-{}-{}", seed, &sha256_hex(&content)[..8]);
    Ok(map)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_config_has_34_victims_10_critical() {
        let map = generate_map(&ScenarioConfig::default(), 7).unwrap();
        assert_eq!(map.victims.len(), 34);
        assert_eq!(map.victims.iter().filter(|v| v.critical).count(), 10);
        assert_eq!((map.width, map.height), (24, 24));
        // Victim registry matches the grid.
        for v in &map.victims {
            let b = map.block(v.x, v.y);
            assert_eq!(b.is_victim(), true);
            assert_eq!(b == BlockType::VictimCritical, v.critical);
        }
    }

    #[test]
    fn zero_victims_is_a_valid_map() {
        let cfg = ScenarioConfig { victims: 0, critical_victims: 0, ..Default::default() };
        let map = generate_map(&cfg, 0).unwrap();
        assert!(map.victims.is_empty());
    }

    #[test]
    fn generation_is_deterministic() {
        let a = generate_map(&ScenarioConfig::default(), 7).unwrap();
        let b = generate_map(&ScenarioConfig::default(), 7).unwrap();
        assert_eq!(serde_json::to_vec(&a).unwrap(), serde_json::to_vec(&b).unwrap());
        let c = generate_map(&ScenarioConfig::default(), 8).unwrap();
        assert_ne!(a.grid, c.grid);
    }

    #[test]
    fn too_many_victims_rejected() {
        let cfg = ScenarioConfig { victims: 10_000, critical_victims: 10, ..Default::default() };
        assert!(matches!(
            generate_map(&cfg, 7),
            Err(MapGenError::TooManyVictims { .. })
        ));
    }

    #[test]
    fn border_is_walled() {
        let map = generate_map(&ScenarioConfig::default(), 7).unwrap();
        for x in 0..map.width {
            assert_eq!(map.block(x, 0), BlockType::Wall);
            assert_eq!(map.block(x, map.height - 1), BlockType::Wall);
        }
        for y in 0..map.height {
            assert_eq!(map.block(0, y), BlockType::Wall);
            assert_eq!(map.block(map.width - 1, y), BlockType::Wall);
        }
    }

    #[test]
    fn small_map_generates() {
        let cfg = ScenarioConfig {
            width: 12,
            height: 12,
            victims: 5,
            critical_victims: 2,
            levers: 1,
            ..Default::default()
        };
        let map = generate_map(&cfg, 3).unwrap();
        assert_eq!(map.victims.len(), 5);
    }
}
