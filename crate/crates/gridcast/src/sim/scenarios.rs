//! Ready-made scenes: a downtown block for long recordings, and the small
//! family of drive-by / stop / walker scenarios used to assemble training
//! and evaluation sets.
//!
//! All builders park the ego at the origin; the 128-cell default grid then
//! covers roughly ±9.6 m, so every trajectory here stays inside it.

use super::{Actor, ActorKind, Maneuver, Scenario, StaticShape, Waypoint};

/// Travel direction of a straight mover.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Heading {
    East,
    West,
    North,
    South,
}

impl Heading {
    pub fn unit(self) -> (f32, f32) {
        match self {
            Heading::East => (1.0, 0.0),
            Heading::West => (-1.0, 0.0),
            Heading::North => (0.0, 1.0),
            Heading::South => (0.0, -1.0),
        }
    }

    pub fn angle(self) -> f32 {
        match self {
            Heading::East => 0.0,
            Heading::North => std::f32::consts::FRAC_PI_2,
            Heading::West => std::f32::consts::PI,
            Heading::South => -std::f32::consts::FRAC_PI_2,
        }
    }

    fn tag(self) -> &'static str {
        match self {
            Heading::East => "east",
            Heading::West => "west",
            Heading::North => "north",
            Heading::South => "south",
        }
    }
}

fn wp(time: f32, east: f32, north: f32, heading: f32, speed: f32) -> Waypoint {
    Waypoint {
        time,
        east,
        north,
        heading,
        speed,
    }
}

fn parked_ego() -> Vec<Waypoint> {
    vec![wp(0.0, 0.0, 0.0, 0.0, 0.0)]
}

/// Two thin walls flanking a straight corridor at lateral offsets of ±5 m.
fn side_walls(heading: Heading) -> Vec<StaticShape> {
    let (ux, uy) = heading.unit();
    let (px, py) = (-uy, ux);
    [-5.0f32, 5.0]
        .iter()
        .map(|&off| StaticShape::Segment {
            a: (-9.0 * ux + off * px, -9.0 * uy + off * py),
            b: (9.0 * ux + off * px, 9.0 * uy + off * py),
            thickness: 0.3,
        })
        .collect()
}

/// A 30 s intersection scene: buildings on all four corners, a parked car,
/// a vehicle passing through and parking, and a pedestrian crossing the
/// north-south alley. Tuned so moving actors cover a fraction of a percent
/// of the grid on average, like a quiet street.
pub fn downtown(seed: u64) -> Scenario {
    let buildings = [(-5.0f32, 7.0f32), (5.0, 7.0), (-5.0, -7.0), (5.0, -7.0)]
        .iter()
        .map(|&(x, y)| StaticShape::Rect {
            center: (x, y),
            length: 8.0,
            width: 3.0,
            heading: 0.0,
        })
        .collect::<Vec<_>>();
    let mut statics = buildings;
    // Car parked at the north curb.
    statics.push(StaticShape::Rect {
        center: (-3.5, 1.8),
        length: 4.2,
        width: 1.8,
        heading: 0.0,
    });

    Scenario {
        name: "downtown".into(),
        duration: 30.0,
        seed,
        statics,
        ego: parked_ego(),
        actors: vec![
            // Vehicle crosses west to east between t = 3 s and t = 12 s,
            // then stays parked at the east curb.
            Actor {
                kind: ActorKind::Vehicle,
                length: 4.2,
                width: 1.8,
                maneuver: Maneuver::Stop,
                waypoints: vec![
                    wp(0.0, -8.5, -1.2, 0.0, 0.0),
                    wp(3.0, -8.5, -1.2, 0.0, 1.9),
                    wp(12.0, 8.5, -1.2, 0.0, 1.9),
                    wp(30.0, 8.5, -1.2, 0.0, 0.0),
                ],
            },
            // Pedestrian waits in the north alley, then crosses south.
            Actor {
                kind: ActorKind::Pedestrian,
                length: 0.5,
                width: 0.5,
                maneuver: Maneuver::WaitThenCross,
                waypoints: vec![
                    wp(0.0, 0.6, 7.0, -std::f32::consts::FRAC_PI_2, 0.0),
                    wp(15.0, 0.6, 7.0, -std::f32::consts::FRAC_PI_2, 1.2),
                    wp(26.7, 0.6, -7.0, -std::f32::consts::FRAC_PI_2, 1.2),
                ],
            },
        ],
    }
}

/// A vehicle passing straight through a walled corridor at constant speed,
/// offset `lane_offset` meters to the left of its travel direction. The
/// recording ends while the vehicle is still moving.
pub fn straight_drive(seed: u64, speed: f32, lane_offset: f32, heading: Heading) -> Scenario {
    let (ux, uy) = heading.unit();
    let (px, py) = (-uy, ux);
    let place = |s: f32| (s * ux + lane_offset * px, s * uy + lane_offset * py);
    let travel_time = 17.0 / speed;
    let duration = ((travel_time - 0.5) * 10.0).floor() / 10.0;
    let (x0, y0) = place(-8.5);
    let (x1, y1) = place(8.5);
    Scenario {
        name: format!(
            "straight-{}-v{:02}-lane{:+03}",
            heading.tag(),
            (speed * 10.0).round() as i32,
            (lane_offset * 10.0).round() as i32
        ),
        duration,
        seed,
        statics: side_walls(heading),
        ego: parked_ego(),
        actors: vec![Actor {
            kind: ActorKind::Vehicle,
            length: 3.6,
            width: 1.6,
            maneuver: Maneuver::Straight,
            waypoints: vec![
                wp(0.0, x0, y0, heading.angle(), speed),
                wp(travel_time, x1, y1, heading.angle(), speed),
            ],
        }],
    }
}

/// A vehicle approaching a wall chunk across its lane, braking over the
/// last two meters and stopping with `gap` meters between its front bumper
/// and the blocker, then waiting out the recording. The corridor runs 2 m
/// to the left of the origin so the parked ego is never overrun.
pub fn stop_behind_obstacle(seed: u64, gap: f32, heading: Heading) -> Scenario {
    let (ux, uy) = heading.unit();
    let (px, py) = (-uy, ux);
    let lane = 2.0f32;
    let place = |s: f32| (s * ux + lane * px, s * uy + lane * py);

    let half_len = 1.8f32;
    let blocker_s = 4.0f32;
    let blocker_len = 0.5f32;
    let stop_s = blocker_s - 0.5 * blocker_len - gap - half_len;
    let approach = 2.0f32;
    let slow_s = stop_s - 2.0;
    let t_slow = (slow_s + 8.5) / approach;
    let t_stop = t_slow + 2.0;
    let duration = ((t_stop + 4.0) * 10.0).round() / 10.0;

    let mut statics = side_walls(heading);
    statics.push(StaticShape::Rect {
        center: place(blocker_s),
        length: blocker_len,
        width: 3.0,
        heading: heading.angle(),
    });

    let (sx, sy) = place(-8.5);
    let (mx, my) = place(slow_s);
    let (ex, ey) = place(stop_s);
    Scenario {
        name: format!("stop-{}-gap{:02}", heading.tag(), (gap * 10.0).round() as i32),
        duration,
        seed,
        statics,
        ego: parked_ego(),
        actors: vec![Actor {
            kind: ActorKind::Vehicle,
            length: 2.0 * half_len,
            width: 1.6,
            maneuver: Maneuver::Stop,
            waypoints: vec![
                wp(0.0, sx, sy, heading.angle(), approach),
                wp(t_slow, mx, my, heading.angle(), approach),
                wp(t_stop, ex, ey, heading.angle(), 0.0),
                wp(duration + 1.0, ex, ey, heading.angle(), 0.0),
            ],
        }],
    }
}

/// A pedestrian walking straight through the corridor at 1.2 m/s, offset
/// `lane_offset` meters to the left of the travel axis.
pub fn crossing_pedestrian(seed: u64, heading: Heading, lane_offset: f32) -> Scenario {
    let (ux, uy) = heading.unit();
    let (px, py) = (-uy, ux);
    let place = |s: f32| (s * ux + lane_offset * px, s * uy + lane_offset * py);
    let speed = 1.2f32;
    let travel_time = 12.0 / speed;
    let (x0, y0) = place(-6.0);
    let (x1, y1) = place(6.0);
    Scenario {
        name: format!(
            "walker-{}-lane{:+03}",
            heading.tag(),
            (lane_offset * 10.0).round() as i32
        ),
        duration: 9.5,
        seed,
        statics: side_walls(heading),
        ego: parked_ego(),
        actors: vec![Actor {
            kind: ActorKind::Pedestrian,
            length: 0.5,
            width: 0.5,
            maneuver: Maneuver::Cross,
            waypoints: vec![
                wp(0.0, x0, y0, heading.angle(), speed),
                wp(travel_time, x1, y1, heading.angle(), speed),
            ],
        }],
    }
}

/// A vehicle standing still the whole recording: vehicle-shaped evidence
/// that must be labeled static.
pub fn parked_vehicle(seed: u64) -> Scenario {
    Scenario {
        name: "parked-vehicle".into(),
        duration: 8.0,
        seed,
        statics: side_walls(Heading::East),
        ego: parked_ego(),
        actors: vec![Actor {
            kind: ActorKind::Vehicle,
            length: 3.6,
            width: 1.6,
            maneuver: Maneuver::Stop,
            waypoints: vec![wp(0.0, 3.0, 1.5, 0.3, 0.0)],
        }],
    }
}

/// Walls only; nothing ever moves.
pub fn empty_street(seed: u64) -> Scenario {
    Scenario {
        name: "empty-street".into(),
        duration: 8.0,
        seed,
        statics: side_walls(Heading::East),
        ego: parked_ego(),
        actors: vec![],
    }
}

/// A lone pedestrian standing in an otherwise empty scene; the cleanest
/// source for cutting an object patch.
pub fn standing_pedestrian(seed: u64) -> Scenario {
    Scenario {
        name: "standing-pedestrian".into(),
        duration: 6.0,
        seed,
        statics: vec![],
        ego: parked_ego(),
        actors: vec![Actor {
            kind: ActorKind::Pedestrian,
            length: 0.5,
            width: 0.5,
            maneuver: Maneuver::WaitThenCross,
            waypoints: vec![wp(0.0, 2.0, 0.5, 0.0, 0.0)],
        }],
    }
}

/// Looks up a parameter-free scenario by name.
pub fn builtin(name: &str, seed: u64) -> Option<Scenario> {
    match name {
        "downtown" => Some(downtown(seed)),
        "parked-vehicle" => Some(parked_vehicle(seed)),
        "empty-street" => Some(empty_street(seed)),
        "standing-pedestrian" => Some(standing_pedestrian(seed)),
        _ => None,
    }
}

/// The scenario mix models are trained on: drive-bys in all four directions,
/// vehicles stopping behind obstacles at several gaps, walkers, and two
/// all-static scenes.
pub fn training_set() -> Vec<Scenario> {
    let mut out = Vec::new();
    let mut seed = 1000u64;
    let mut next = move || {
        seed += 1;
        seed
    };
    for &heading in &[Heading::East, Heading::North] {
        for &speed in &[1.2f32, 2.0] {
            for &lane in &[-1.5f32, 1.5] {
                out.push(straight_drive(next(), speed, lane, heading));
            }
        }
    }
    for &heading in &[Heading::West, Heading::South] {
        for &lane in &[-1.5f32, 1.5] {
            out.push(straight_drive(next(), 2.0, lane, heading));
        }
    }
    for &heading in &[Heading::East, Heading::North] {
        for &gap in &[2.0f32, 3.0, 4.0] {
            out.push(stop_behind_obstacle(next(), gap, heading));
        }
    }
    for &heading in &[Heading::East, Heading::North, Heading::West, Heading::South] {
        out.push(crossing_pedestrian(next(), heading, 3.0));
    }
    out.push(parked_vehicle(next()));
    out.push(empty_street(next()));
    out
}

/// Held-out scenarios with lanes, speeds and gaps the training set never
/// uses.
pub fn eval_set() -> Vec<Scenario> {
    vec![
        straight_drive(2001, 1.6, 2.5, Heading::East),
        straight_drive(2002, 1.6, -2.5, Heading::North),
        stop_behind_obstacle(2003, 2.5, Heading::East),
        stop_behind_obstacle(2004, 3.5, Heading::North),
        crossing_pedestrian(2005, Heading::West, -2.0),
    ]
}
