//! Seeded scenario generators.
#![allow(dead_code)]

use std::fmt::Write as _;

use fp_plan_cli::{parse_scenario, Scenario};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const L: f64 = 0.03;
pub const R: f64 = 0.1;

fn header(start: [f64; 2], target: [f64; 2]) -> String {
    format!(
        "dim 2\nworkspace 0 0 1 1\nstart {} {}\ntarget {} {}\nsensing_radius {R}\nstep {L}\nsvg true\n",
        start[0], start[1], target[0], target[1]
    )
}

fn round3(v: f64) -> f64 {
    (v * 1000.0).round() / 1000.0
}

fn box_segment_distance(lo: [f64; 2], hi: [f64; 2], a: [f64; 2], b: [f64; 2]) -> f64 {
    let n = 400;
    (0..=n)
        .map(|i| {
            let s = i as f64 / n as f64;
            let p = [a[0] + s * (b[0] - a[0]), a[1] + s * (b[1] - a[1])];
            let dx = (lo[0] - p[0]).max(0.0).max(p[0] - hi[0]);
            let dy = (lo[1] - p[1]).max(0.0).max(p[1] - hi[1]);
            dx.hypot(dy)
        })
        .fold(f64::INFINITY, f64::min)
}

/// Unknown maze: vertical bars with one door each, plus clutter kept clear of
/// a reference polyline. Every point of the polyline has clearance at least
/// `1.5 l` from all obstacles and the workspace boundary.
pub fn maze(seed: u64) -> (Scenario, Vec<[f64; 2]>) {
    let tube = 1.5 * L;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let ys = round3(rng.gen_range(0.15..0.85));
    let yt = round3(rng.gen_range(0.15..0.85));
    let start = [0.06, ys];
    let target = [0.94, yt];
    let bars = rng.gen_range(2..=4);
    let pitch = 0.8 / bars as f64;
    let mut text = header(start, target);
    let mut boxes: Vec<([f64; 2], [f64; 2])> = Vec::new();
    let mut line = vec![start];
    let mut prev_right = start[0];
    for i in 0..bars {
        let w = round3(rng.gen_range(0.02..0.04));
        let x0 =
            round3(0.15 + i as f64 * pitch + rng.gen_range(0.0..pitch - w - 2.0 * tube - 0.01));
        let x1 = round3(x0 + w);
        let door = round3(rng.gen_range(0.2..0.8));
        let half = round3(tube + rng.gen_range(0.005..0.04));
        boxes.push(([x0, 0.0], [x1, round3(door - half)]));
        boxes.push(([x0, round3(door + half)], [x1, 1.0]));
        let xm = 0.5 * (prev_right + x0);
        let y_here = line.last().unwrap()[1];
        line.push([xm, y_here]);
        line.push([xm, door]);
        prev_right = x1;
    }
    let xm = 0.5 * (prev_right + target[0]);
    let y_here = line.last().unwrap()[1];
    line.push([xm, y_here]);
    line.push([xm, target[1]]);
    line.push(target);
    let mut clutter = 0;
    for _ in 0..200 {
        if clutter == 6 {
            break;
        }
        let c = [rng.gen_range(0.1..0.9), rng.gen_range(0.05..0.95)];
        let h = [rng.gen_range(0.01..0.05), rng.gen_range(0.01..0.05)];
        let lo = [round3(c[0] - h[0]), round3(c[1] - h[1])];
        let hi = [round3(c[0] + h[0]), round3(c[1] + h[1])];
        let clear = line
            .windows(2)
            .all(|s| box_segment_distance(lo, hi, s[0], s[1]) > tube + 0.002);
        if clear {
            boxes.push((lo, hi));
            clutter += 1;
        }
    }
    for (lo, hi) in &boxes {
        let _ = writeln!(text, "obstacle box {} {} {} {}", lo[0], lo[1], hi[0], hi[1]);
    }
    (
        parse_scenario(&text).expect("generated maze is valid"),
        line,
    )
}

/// Target enclosed by a known ring, unknown clutter outside.
pub fn sealed(seed: u64) -> Scenario {
    let mut rng = ChaCha8Rng::seed_from_u64(1000 + seed);
    let t = [
        round3(rng.gen_range(0.2..0.8)),
        round3(rng.gen_range(0.2..0.8)),
    ];
    let half = round3(rng.gen_range(0.05..0.12));
    let th = round3(rng.gen_range(0.01..0.03));
    let (lo, hi) = ([t[0] - half, t[1] - half], [t[0] + half, t[1] + half]);
    let start = loop {
        let s = [
            round3(rng.gen_range(0.05..0.95)),
            round3(rng.gen_range(0.05..0.95)),
        ];
        if (s[0] - t[0]).abs() > half + 0.05 || (s[1] - t[1]).abs() > half + 0.05 {
            break s;
        }
    };
    let mut text = header(start, t);
    let ring = [
        (lo, [hi[0], lo[1] + th]),
        ([lo[0], hi[1] - th], hi),
        (lo, [lo[0] + th, hi[1]]),
        ([hi[0] - th, lo[1]], hi),
    ];
    for (a, b) in ring {
        let _ = writeln!(
            text,
            "obstacle box {} {} {} {} known",
            round3(a[0]),
            round3(a[1]),
            round3(b[0]),
            round3(b[1])
        );
    }
    for _ in 0..3 {
        let c = [rng.gen_range(0.05..0.95), rng.gen_range(0.05..0.95)];
        let lo2 = [round3(c[0] - 0.02), round3(c[1] - 0.02)];
        let hi2 = [round3(c[0] + 0.02), round3(c[1] + 0.02)];
        let near_start = (c[0] - start[0]).abs() < 0.04 && (c[1] - start[1]).abs() < 0.04;
        if !near_start {
            let _ = writeln!(
                text,
                "obstacle box {} {} {} {}",
                lo2[0], lo2[1], hi2[0], hi2[1]
            );
        }
    }
    parse_scenario(&text).expect("generated sealed scenario is valid")
}

/// Two robots 0.03..0.13 apart walking into a known U-shaped pocket that
/// opens away from the target.
pub fn dead_end(escape: &str) -> Scenario {
    let text = format!(
        "dim 4\nrobots 2\nstart 0.81 0.5 0.81 0.56\ntarget 0.09 0.5 0.09 0.56\n\
         sensing_radius {R}\nstep {L}\npair_distance 0.03 0.13\nescape {escape}\n\
         obstacle box 0.4 0.2 0.45 0.85 known\n\
         obstacle box 0.45 0.2 0.7 0.25 known\n\
         obstacle box 0.45 0.8 0.7 0.85 known\n"
    );
    parse_scenario(&text).expect("dead end is valid")
}

/// `robots` robots side by side crossing a corridor with an unknown kink.
pub fn corridor(robots: usize) -> Scenario {
    let ys: Vec<f64> = (0..robots).map(|i| 0.45 + 0.04 * i as f64).collect();
    let mut start = String::new();
    let mut target = String::new();
    for y in &ys {
        let _ = write!(start, " 0.1 {y}");
        let _ = write!(target, " 0.9 {}", round3(y - 0.09));
    }
    let text = format!(
        "dim {}\nrobots {robots}\nstart{start}\ntarget{target}\nsensing_radius {R}\nstep {L}\n\
         obstacle box 0.25 0 0.75 0.3\nobstacle box 0.25 0.62 0.75 1\nobstacle box 0.5 0.3 0.55 0.4\n",
        2 * robots
    );
    parse_scenario(&text).expect("corridor is valid")
}

/// Fully known scenes in the style of the intermittent-diffusion figure;
/// targets sit on the start-anchored lattice of pitch `l`.
pub fn region_scenes() -> Vec<Scenario> {
    // (boxes, start, target)
    type Scene<'a> = (&'a [[f64; 4]], [f64; 2], [f64; 2]);
    let scenes: [Scene; 5] = [
        (&[[0.4, 0.3, 0.45, 0.7]], [0.81, 0.51], [0.09, 0.42]),
        (
            &[[0.5, 0.2, 0.55, 0.75], [0.2, 0.6, 0.45, 0.65]],
            [0.9, 0.45],
            [0.12, 0.84],
        ),
        (
            &[[0.3, 0.35, 0.7, 0.4], [0.3, 0.4, 0.35, 0.6]],
            [0.51, 0.81],
            [0.48, 0.12],
        ),
        (
            &[[0.6, 0.1, 0.65, 0.6], [0.3, 0.4, 0.35, 0.95]],
            [0.9, 0.3],
            [0.09, 0.6],
        ),
        (&[[0.2, 0.5, 0.8, 0.55]], [0.52, 0.91], [0.49, 0.1]),
    ];
    scenes
        .iter()
        .map(|(boxes, s, t)| {
            let mut text = header(*s, *t);
            for b in boxes.iter() {
                let _ = writeln!(
                    text,
                    "obstacle box {} {} {} {} known",
                    b[0], b[1], b[2], b[3]
                );
            }
            parse_scenario(&text).expect("region scene is valid")
        })
        .collect()
}
