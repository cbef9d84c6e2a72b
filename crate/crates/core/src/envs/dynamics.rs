use crate::state::{Action, ObjectValue, Pos, RawState};

use super::{babyai_object, BabyaiObject, EnvironmentSpec, Family};

const UP: Pos = Pos::new(0, -1);
const DOWN: Pos = Pos::new(0, 1);
const LEFT: Pos = Pos::new(-1, 0);
const RIGHT: Pos = Pos::new(1, 0);

fn direction(name: &str) -> Option<Pos> {
    match name {
        "up" => Some(UP),
        "down" => Some(DOWN),
        "left" => Some(LEFT),
        "right" => Some(RIGHT),
        _ => None,
    }
}

/// The true transition function. Unknown actions and actions on a state
/// without an agent leave the state unchanged.
pub fn true_transition(spec: &EnvironmentSpec, s: &RawState, action: &Action) -> RawState {
    let Some(&agent) = s.positions(spec.agent_key()).first() else {
        return s.clone();
    };
    let a = action.as_str();
    match spec.family {
        Family::Labyrinth | Family::Maze => maze(s, agent, a),
        Family::Sokoban => sokoban(s, agent, a),
        Family::Babyai => babyai(spec, s, agent, a),
        Family::Minihack => minihack(spec, s, agent, a),
    }
}

fn occupied_by(s: &RawState, key: &str, p: Pos) -> bool {
    s.positions(key).contains(&p)
}

/// Removes the first occurrence of `p` from a position list, deleting the
/// key once the list is empty.
fn take_position(s: &mut RawState, key: &str, p: Pos) {
    let mut ps = s.positions(key).to_vec();
    if let Some(i) = ps.iter().position(|q| *q == p) {
        ps.remove(i);
    }
    if ps.is_empty() {
        s.remove(key);
    } else {
        s.set(key, ObjectValue::Positions(ps));
    }
}

fn push_position(s: &mut RawState, key: &str, p: Pos) {
    let mut ps = s.positions(key).to_vec();
    ps.push(p);
    s.set(key, ObjectValue::Positions(ps));
}

fn move_agent(s: &mut RawState, key: &str, to: Pos) {
    s.set(key, ObjectValue::Positions(vec![to]));
}

fn maze(s: &RawState, agent: Pos, a: &str) -> RawState {
    let Some(d) = direction(a) else {
        return s.clone();
    };
    let target = agent.offset(d);
    let mut out = s.clone();
    if occupied_by(s, "wall", target) {
        return out;
    }
    if occupied_by(s, "trap", target) {
        out.remove("avatar");
        return out;
    }
    move_agent(&mut out, "avatar", target);
    out
}

fn sokoban(s: &RawState, agent: Pos, a: &str) -> RawState {
    let Some(d) = direction(a) else {
        return s.clone();
    };
    let target = agent.offset(d);
    let mut out = s.clone();
    if occupied_by(s, "wall", target) || occupied_by(s, "hole", target) {
        return out;
    }
    if occupied_by(s, "box", target) {
        let beyond = target.offset(d);
        if occupied_by(s, "wall", beyond) || occupied_by(s, "box", beyond) {
            return out;
        }
        take_position(&mut out, "box", target);
        if !occupied_by(s, "hole", beyond) {
            push_position(&mut out, "box", beyond);
        }
    }
    move_agent(&mut out, "avatar", target);
    out
}

/// Counter-clockwise on screen: right [1,0] becomes up [0,-1].
pub(crate) fn turn_left(d: Pos) -> Pos {
    Pos::new(d.y, -d.x)
}

pub(crate) fn turn_right(d: Pos) -> Pos {
    Pos::new(-d.y, d.x)
}

fn in_bounds(spec: &EnvironmentSpec, p: Pos) -> bool {
    p.x >= 0 && p.y >= 0 && p.x < spec.width && p.y < spec.height
}

fn babyai(spec: &EnvironmentSpec, s: &RawState, agent: Pos, a: &str) -> RawState {
    let mut out = s.clone();
    let Some(dir) = s.scalar("agent_direction") else {
        return out;
    };
    let front = agent.offset(dir);
    let objects_in_front: Vec<&str> = s.objects_at(front).filter(|k| *k != "red_agent").collect();
    match a {
        "left" => out.set("agent_direction", ObjectValue::Scalar(turn_left(dir))),
        "right" => out.set("agent_direction", ObjectValue::Scalar(turn_right(dir))),
        "forward" => {
            let blocked = !in_bounds(spec, front)
                || objects_in_front.iter().any(|k| match babyai_object(k) {
                    Some(BabyaiObject::Door { state, .. }) => state != "open",
                    Some(BabyaiObject::Key { .. }) => true,
                    None => *k == "grey_wall",
                });
            if !blocked {
                move_agent(&mut out, "red_agent", front);
            }
        }
        "pickup" => {
            let key = objects_in_front
                .iter()
                .find(|k| matches!(babyai_object(k), Some(BabyaiObject::Key { .. })));
            if let Some(key) = key {
                take_position(&mut out, key, front);
                let mut carrying = s.names("agent_carrying").to_vec();
                carrying.push(key.to_string());
                out.set("agent_carrying", ObjectValue::Names(carrying));
            }
        }
        "drop" => {
            let mut carrying = s.names("agent_carrying").to_vec();
            if in_bounds(spec, front) && objects_in_front.is_empty() {
                if let Some(item) = carrying.pop() {
                    out.set("agent_carrying", ObjectValue::Names(carrying));
                    push_position(&mut out, &item, front);
                }
            }
        }
        "toggle" => {
            for k in &objects_in_front {
                if let Some(BabyaiObject::Door { state, color }) = babyai_object(k) {
                    let opens = match state {
                        "closed" => true,
                        "locked" => s.names("agent_carrying").iter().any(|n| *n == format!("{color}_key")),
                        _ => false,
                    };
                    if opens {
                        take_position(&mut out, k, front);
                        push_position(&mut out, &format!("open_{color}_door"), front);
                    }
                    break;
                }
            }
        }
        _ => {}
    }
    out
}

fn minihack(spec: &EnvironmentSpec, s: &RawState, agent: Pos, a: &str) -> RawState {
    let mut out = s.clone();
    let staged = s.contains("zap_stage");
    let stage = s.scalar("zap_stage").map(|p| p.x).unwrap_or(0);
    let set_stage = |out: &mut RawState, n: i64| {
        if staged {
            out.set("zap_stage", ObjectValue::Scalar(Pos::new(n, 0)));
        }
    };
    if let Some(d) = direction(a) {
        set_stage(&mut out, 0);
        let target = agent.offset(d);
        if occupied_by(s, "wall", target) || !in_bounds(spec, target) {
            return out;
        }
        if ["trap", "monster", "minotaur"]
            .iter()
            .any(|k| occupied_by(s, k, target))
        {
            out.remove("agent");
            return out;
        }
        move_agent(&mut out, "agent", target);
        if occupied_by(s, "wand", target) {
            take_position(&mut out, "wand", target);
            let mut carrying = s.names("agent_carrying").to_vec();
            carrying.push("wand".into());
            out.set("agent_carrying", ObjectValue::Names(carrying));
        }
        return out;
    }
    let has_wand = s.names("agent_carrying").iter().any(|n| n == "wand");
    match a {
        "zap" => set_stage(&mut out, if has_wand { 1 } else { 0 }),
        "select_f" => set_stage(&mut out, if stage == 1 { 2 } else { 0 }),
        shot if shot.starts_with("shoot_") => {
            set_stage(&mut out, 0);
            let Some(d) = direction(&shot["shoot_".len()..]) else {
                return out;
            };
            if stage != 2 || !has_wand {
                return out;
            }
            let mut p = agent;
            for _ in 0..spec.kill_range {
                p = p.offset(d);
                if occupied_by(s, "wall", p) || !in_bounds(spec, p) {
                    break;
                }
                if occupied_by(s, "minotaur", p) {
                    take_position(&mut out, "minotaur", p);
                    push_position(&mut out, "dead_minotaur", p);
                    break;
                }
            }
        }
        _ => {}
    }
    out
}
