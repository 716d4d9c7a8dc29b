//! Line-of-sight observation.
//!
//! Visibility is ray-cast on the integer grid: a cell is visible when the
//! segment from the agent's cell center to that cell's center crosses no
//! opaque cell strictly between the endpoints. Rays that pass exactly through
//! a lattice corner step diagonally (the corner's side cells do not block), so
//! an agent sealed in a 1-cell room still sees its full 9-cell neighborhood.

use super::{ObsCell, Observation, Pose, WorldState};

/// Cells strictly between `from` and `to` crossed by the center-to-center ray.
///
/// Exact integer arithmetic: cell centers live at odd coordinates after
/// doubling, so boundary-crossing comparisons never hit floating-point ties.
pub fn ray_cells(from: (usize, usize), to: (usize, usize), mut visit: impl FnMut(usize, usize)) {
    let (mut cx, mut cy) = (from.0 as i64, from.1 as i64);
    let (tx, ty) = (to.0 as i64, to.1 as i64);
    // Doubled coordinates: centers at 2c + 1.
    let px = 2 * cx + 1;
    let py = 2 * cy + 1;
    let dx = 2 * tx + 1 - px;
    let dy = 2 * ty + 1 - py;
    let sx: i64 = dx.signum();
    let sy: i64 = dy.signum();
    let adx = dx.abs();
    let ady = dy.abs();
    loop {
        if (cx, cy) == (tx, ty) {
            return;
        }
        // Crossing parameters to the next vertical/horizontal cell boundary,
        // compared exactly via cross-multiplication.
        // Next vertical boundary is 1 doubled-unit away from the center.
        let remx = 2 * (tx - cx).abs() - 1; // doubled distance from boundary to target center
        let remy = 2 * (ty - cy).abs() - 1;
        // t_x = (adx - remx) / adx, t_y likewise; compare t_x vs t_y:
        // (adx - remx) * ady  vs  (ady - remy) * adx
        let step_x = sx != 0;
        let step_y = sy != 0;
        let (mv_x, mv_y) = if step_x && step_y {
            let lhs = (adx - remx) * ady;
            let rhs = (ady - remy) * adx;
            if lhs < rhs {
                (true, false)
            } else if lhs > rhs {
                (false, true)
            } else {
                // Exact corner crossing: step diagonally.
                (true, true)
            }
        } else if step_x {
            (true, false)
        } else {
            (false, true)
        };
        if mv_x {
            cx += sx;
        }
        if mv_y {
            cy += sy;
        }
        if (cx, cy) == (tx, ty) {
            return;
        }
        visit(cx as usize, cy as usize);
    }
}

/// True when `to` is visible from `from` in `world`.
pub fn line_of_sight(world: &WorldState, from: (usize, usize), to: (usize, usize)) -> bool {
    let mut blocked = false;
    ray_cells(from, to, |x, y| {
        if world.block(x, y).is_opaque() {
            blocked = true;
        }
    });
    !blocked
}

/// Beep heard at `pos`: 2 when near a room holding a triageable critical
/// victim, 1 for non-critical only, 0 otherwise. "Near" means within
/// Chebyshev distance 1 of the room rectangle.
pub fn beep_at(world: &WorldState, pos: (usize, usize), tick: u32) -> u8 {
    let mut beep = 0u8;
    for room in &world.rooms {
        if !room.near(pos.0, pos.1) {
            continue;
        }
        for v in &world.victims {
            if v.triageable(tick) && room.contains(v.victim.x, v.victim.y) {
                beep = beep.max(if v.victim.critical { 2 } else { 1 });
            }
        }
    }
    beep
}

/// Full observation at `pose` and `tick`: visible grid, beep, pose echo.
pub fn observe(world: &WorldState, pose: &Pose, tick: u32) -> Observation {
    let mut cells = vec![ObsCell::Unseen; world.width * world.height];
    let from = (pose.x, pose.y);
    for y in 0..world.height {
        for x in 0..world.width {
            if line_of_sight(world, from, (x, y)) {
                cells[y * world.width + x] = ObsCell::Seen(world.block(x, y));
            }
        }
    }
    Observation {
        width: world.width,
        height: world.height,
        cells,
        beep: beep_at(world, from, tick),
        pose: *pose,
        tick,
    }
}
