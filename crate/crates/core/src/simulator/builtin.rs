//! Named scenarios shipped with the simulator.
//!
//! * `straight-lines`: three well separated objects on straight paths, no noise.
//! * `cross-depth`: two identical objects at 3 m and 12 m approach, vanish
//!   behind scenery at the meeting point and come back the way they came.
//!   Their motion predicts a swap; only depth tells them apart.
//! * `occlusion-gap`: one object fully hidden for 5 frames mid-track.
//! * `similar-cluster`: four near-identical objects. One pair at equal depth
//!   meets and reverses in plain view; the other pair walks head-on and
//!   sidesteps while briefly hidden.
//! * `dropout-storm`: five objects under heavy detector noise.

use crate::simulator::{Identity, NoiseSpec, ObjectSpec, Scenario, Shape};

const NAMES: [&str; 5] = [
    "straight-lines",
    "cross-depth",
    "occlusion-gap",
    "similar-cluster",
    "dropout-storm",
];

pub fn builtin_names() -> &'static [&'static str] {
    &NAMES
}

fn base(name: &str, seed: u64, frames: u64) -> Scenario {
    Scenario {
        name: name.into(),
        seed,
        frames,
        width: 640,
        height: 360,
        emb_dim: 32,
        cluster_spread: 0.05,
        objects: Vec::new(),
        noise: NoiseSpec::default(),
    }
}

fn obj(name: &str, identity: Identity, waypoints: &[(u64, f64, f64)], depth: &[(u64, f64)]) -> ObjectSpec {
    ObjectSpec {
        name: name.into(),
        identity,
        waypoints: waypoints.to_vec(),
        size: (40.0, 80.0),
        depth: depth.to_vec(),
        shape: Shape::Rectangle,
        hidden: Vec::new(),
    }
}

fn random(tag: &str) -> Identity {
    Identity::Random(tag.into())
}

fn cluster(name: &str, member: u32) -> Identity {
    Identity::Cluster {
        name: name.into(),
        member,
    }
}

fn straight_lines(seed: u64) -> Scenario {
    let mut sc = base("straight-lines", seed, 40);
    sc.objects = vec![
        obj("a", random("a"), &[(1, 60.0, 70.0), (40, 560.0, 70.0)], &[(1, 5.0)]),
        obj(
            "b",
            random("b"),
            &[(1, 580.0, 180.0), (40, 100.0, 180.0)],
            &[(1, 9.0), (40, 7.0)],
        ),
        obj("c", random("c"), &[(1, 280.0, 300.0), (36, 420.0, 290.0)], &[(1, 4.0)]),
    ];
    sc.objects[2].shape = Shape::Ellipse;
    sc
}

fn cross_depth(seed: u64) -> Scenario {
    let mut sc = base("cross-depth", seed, 40);
    let mut a = obj(
        "near",
        random("twin"),
        &[(1, 160.0, 180.0), (20, 312.0, 180.0), (40, 152.0, 180.0)],
        &[(1, 3.0)],
    );
    let mut b = obj(
        "far",
        random("twin"),
        &[(1, 480.0, 180.0), (20, 328.0, 180.0), (40, 488.0, 180.0)],
        &[(1, 12.0)],
    );
    a.hidden = vec![(17, 24)];
    b.hidden = vec![(17, 24)];
    sc.objects = vec![a, b];
    sc
}

fn occlusion_gap(seed: u64) -> Scenario {
    let mut sc = base("occlusion-gap", seed, 50);
    let mut a = obj(
        "a",
        random("gap-a"),
        &[(1, 60.0, 120.0), (50, 550.0, 120.0)],
        &[(1, 6.0)],
    );
    a.hidden = vec![(21, 25)];
    let b = obj(
        "b",
        random("gap-b"),
        &[(1, 580.0, 250.0), (50, 90.0, 250.0)],
        &[(1, 10.0)],
    );
    sc.objects = vec![a, b];
    sc
}

fn similar_cluster(seed: u64) -> Scenario {
    let mut sc = base("similar-cluster", seed, 60);
    sc.cluster_spread = 0.01;
    // p0/p1 meet at frame 21 at equal depth and turn back
    let p0 = obj(
        "p0",
        cluster("similar-A", 0),
        &[
            (1, 102.0, 100.0),
            (21, 342.0, 100.0),
            (41, 102.0, 100.0),
            (60, 330.0, 100.0),
        ],
        &[(1, 6.0)],
    );
    let p1 = obj(
        "p1",
        cluster("similar-A", 1),
        &[
            (1, 582.0, 140.0),
            (21, 342.0, 140.0),
            (41, 582.0, 140.0),
            (60, 354.0, 140.0),
        ],
        &[(1, 6.0)],
    );
    // q0/q1 walk toward each other and sidestep while hidden
    let mut q0 = obj(
        "q0",
        cluster("similar-A", 2),
        &[
            (1, 60.0, 280.0),
            (25, 252.0, 280.0),
            (31, 300.0, 240.0),
            (60, 532.0, 240.0),
        ],
        &[(1, 8.0)],
    );
    let mut q1 = obj(
        "q1",
        cluster("similar-A", 3),
        &[
            (1, 580.0, 280.0),
            (25, 388.0, 280.0),
            (31, 340.0, 320.0),
            (60, 108.0, 320.0),
        ],
        &[(1, 8.0)],
    );
    q0.hidden = vec![(26, 30)];
    q1.hidden = vec![(26, 30)];
    sc.objects = vec![p0, p1, q0, q1];
    sc.noise = NoiseSpec {
        conf_base: 0.9,
        conf_jitter: 0.05,
        occluded_conf_mult: 0.8,
        emb_noise: 0.01,
        ..NoiseSpec::default()
    };
    sc
}

fn dropout_storm(seed: u64) -> Scenario {
    let mut sc = base("dropout-storm", seed, 60);
    sc.objects = (0..5)
        .map(|k| {
            let kf = k as f64;
            obj(
                &format!("s{k}"),
                random(&format!("storm-{k}")),
                &[
                    (1, 60.0 + 100.0 * kf, 60.0 + 50.0 * kf),
                    (60, 580.0 - 90.0 * kf, 300.0 - 40.0 * kf),
                ],
                &[(1, 3.0 + 2.0 * kf), (60, 12.0 - kf)],
            )
        })
        .collect();
    sc.noise = NoiseSpec {
        bbox_jitter: 2.0,
        dropout: 0.35,
        conf_base: 0.75,
        conf_jitter: 0.2,
        occluded_conf_mult: 0.7,
        emb_noise: 0.1,
        depth_noise: 0.3,
        back_mask_erosion: 1,
    };
    sc
}

pub fn builtin_scenario(name: &str, seed: u64) -> Option<Scenario> {
    Some(match name {
        "straight-lines" => straight_lines(seed),
        "cross-depth" => cross_depth(seed),
        "occlusion-gap" => occlusion_gap(seed),
        "similar-cluster" => similar_cluster(seed),
        "dropout-storm" => dropout_storm(seed),
        _ => return None,
    })
}

pub fn builtin_scenarios(seed: u64) -> Vec<Scenario> {
    NAMES.iter().map(|n| builtin_scenario(n, seed).unwrap()).collect()
}
