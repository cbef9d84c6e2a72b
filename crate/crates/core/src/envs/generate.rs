use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::state::{ObjectValue, Pos, RawState};

/// Two rooms split by a wall with a locked blue door. The agent and the
/// blue key start on the left, the yellow key waits on the right. The
/// layout is a pure function of `seed`.
pub fn boss_level(width: i64, height: i64, seed: u64) -> RawState {
    let (width, height) = (width.max(7), height.max(5));
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mid = width / 2;
    let mut walls = Vec::new();
    for y in 0..height {
        for x in 0..width {
            let border = x == 0 || y == 0 || x == width - 1 || y == height - 1;
            if border || x == mid {
                walls.push(Pos::new(x, y));
            }
        }
    }
    let door_y = *(1..height - 1)
        .collect::<Vec<_>>()
        .choose(&mut rng)
        .expect("interior rows");
    let door = Pos::new(mid, door_y);
    walls.retain(|p| *p != door);

    let cells = |x0: i64, x1: i64| -> Vec<Pos> {
        (1..height - 1)
            .flat_map(|y| (x0..x1).map(move |x| Pos::new(x, y)))
            .collect()
    };
    let mut left = cells(1, mid);
    left.shuffle(&mut rng);
    let mut right = cells(mid + 1, width - 1);
    right.shuffle(&mut rng);
    let agent = left[0];
    let blue_key = left[1];
    let yellow_key = right[0];
    let dirs = [Pos::new(1, 0), Pos::new(0, 1), Pos::new(-1, 0), Pos::new(0, -1)];
    let dir = *dirs.choose(&mut rng).expect("four directions");

    let mut s = RawState::new();
    s.set("grey_wall", ObjectValue::Positions(walls));
    s.set("locked_blue_door", ObjectValue::Positions(vec![door]));
    s.set("red_agent", ObjectValue::Positions(vec![agent]));
    s.set("agent_direction", ObjectValue::Scalar(dir));
    s.set("agent_carrying", ObjectValue::Names(Vec::new()));
    s.set("blue_key", ObjectValue::Positions(vec![blue_key]));
    s.set("yellow_key", ObjectValue::Positions(vec![yellow_key]));
    s
}
