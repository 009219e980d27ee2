use std::f64::consts::PI;
use std::sync::OnceLock;

use chauffeur::game::{
    pure_pursuit_heading, rel_velocity, to_relative, GameParams, GlobalState, Pose, RelState,
};
use chauffeur::solution::{
    compute_barrier, cs_turn_time_rel, dubins_cs_turn_time, tributary_value, Geometry, RegionTag,
    SolutionError, TributaryError,
};

fn geometry(mu: f64) -> &'static Geometry {
    static G3: OnceLock<Geometry> = OnceLock::new();
    static G2: OnceLock<Geometry> = OnceLock::new();
    let cell = if mu == 0.3 { &G3 } else { &G2 };
    cell.get_or_init(|| Geometry::build(&GameParams::new(mu, 0.5).unwrap()).unwrap())
}

/// Relative state `tau` before capture on the characteristic ending at
/// capture-circle angle `phi`, with the pursuer turning right throughout.
///
/// The pursuer's terminal pose is the origin facing +Y; going back `tau`
/// it sits at `(1 - cos tau, -sin tau)` with heading `-tau`. The evader runs
/// straight along the terminal radial direction, so it was `mu tau` closer
/// to the origin.
fn straight_line_characteristic(mu: f64, l: f64, phi: f64, tau: f64) -> RelState {
    let r = l - mu * tau;
    to_relative(&GlobalState {
        pursuer: Pose::new(1.0 - tau.cos(), -tau.sin(), -tau),
        evader: (r * phi.sin(), r * phi.cos()),
    })
}

#[test]
fn boundary_of_usable_part() {
    let p = GameParams::new(0.3, 0.5).unwrap();
    let b = p.bup_point();
    assert!((b.x - 0.476969600708).abs() < 1e-9, "{b:?}");
    assert!((b.y - 0.15).abs() < 1e-12);
    let b = GameParams::new(0.2, 0.5).unwrap().bup_point();
    assert!((b.x - 0.489897948557).abs() < 1e-9 && (b.y - 0.1).abs() < 1e-12);
}

#[test]
fn barrier_matches_closed_form() {
    let (mu, l) = (0.3, 0.5);
    let g = geometry(mu);
    let phi = mu.acos();
    let mut worst: f64 = 0.0;
    for (p, &tau) in g.barrier.points.iter().zip(&g.barrier.tau) {
        let q = straight_line_characteristic(mu, l, phi, tau);
        worst = worst.max((*p - q).norm());
    }
    assert!(worst < 1e-9, "max deviation {worst:e}");
    let k = g
        .barrier
        .tau
        .iter()
        .position(|&t| (t - 0.5).abs() < 1e-9)
        .unwrap();
    let q = straight_line_characteristic(mu, l, phi, 0.5);
    assert!((g.barrier.points[k] - q).norm() < 1e-8);
}

#[test]
fn barrier_leaves_the_circle_tangentially() {
    for mu in [0.2, 0.3] {
        let p = GameParams::new(mu, 0.5).unwrap();
        let b = p.bup_point();
        let retro = rel_velocity(b, 1.0, p.bup_angle(), mu) * -1.0;
        assert!(retro.dot(b).abs() < 1e-12 * retro.norm());
        let c = compute_barrier(&p, 1e-3, 1.0).unwrap();
        assert!((c.points[1].norm() - 0.5).abs() < 1e-6);
        assert!(c.points[1].norm() > 0.5);
    }
}

#[test]
fn barrier_ends_at_radial_maximum() {
    for mu in [0.2, 0.3] {
        let g = geometry(mu);
        let t_end = *g.barrier.tau.last().unwrap();
        assert!(
            (t_end - (2.0 * PI - 2.0 * mu.acos())).abs() < 1e-6,
            "{t_end}"
        );
        let r: Vec<f64> = g.barrier.points.iter().map(|p| p.norm()).collect();
        let rmax = r.iter().copied().fold(0.0, f64::max);
        assert!((r.last().unwrap() - rmax).abs() < 1e-9);
    }
}

#[test]
fn coarse_barrier_step_is_rejected() {
    let p = GameParams::new(0.3, 0.5).unwrap();
    assert!(matches!(
        compute_barrier(&p, 0.5, 1.0),
        Err(SolutionError::StepSize(_))
    ));
}

#[test]
fn primary_characteristics_match_closed_form() {
    let (mu, l) = (0.3, 0.5);
    let g = geometry(mu);
    let n = g.primary.trajectories.len();
    let d = g.primary.d_tau;
    let mut worst: f64 = 0.0;
    for c in [
        &g.primary.trajectories[0],
        &g.primary.trajectories[n / 2],
        &g.primary.trajectories[n - 1],
    ] {
        for (k, p) in c.points.iter().enumerate().step_by(7) {
            let q = straight_line_characteristic(mu, l, c.psi0, c.tau_at(k, d));
            worst = worst.max((*p - q).norm());
        }
    }
    assert!(worst < 1e-9, "{worst:e}");
}

#[test]
fn primary_fan_initial_velocity() {
    let (mu, l) = (0.3, 0.5);
    let g = geometry(mu);
    let c = &g.primary.trajectories[0];
    assert!(c.psi0.abs() < 1e-15);
    let v = rel_velocity(c.points[0], 1.0, 0.0, mu) * -1.0;
    assert!((v.x - l).abs() < 1e-15 && (v.y - (1.0 - mu)).abs() < 1e-15);
}

#[test]
fn primary_value_is_time_to_go() {
    let g = geometry(0.3);
    let c = &g.primary.trajectories[g.primary.trajectories.len() / 3];
    let d = g.primary.d_tau;
    for k in [100, 300, 700] {
        let e = g.equilibrium(c.points[k]);
        assert_eq!(e.region.tag, RegionTag::Primary);
        assert!(
            (e.value - c.tau_at(k, d)).abs() < 1e-6,
            "{} vs {}",
            e.value,
            c.tau_at(k, d)
        );
    }
}

/// Brute-force turn time: turn right in small increments until the heading
/// ray passes the target, then bisect.
fn turn_time_by_search(target: RelState) -> f64 {
    let side = |t: f64| {
        let p = RelState::new(1.0 - t.cos(), t.sin());
        let d = RelState::new(t.sin(), t.cos());
        let w = target - p;
        (d.cross(w), d.dot(w))
    };
    let h = 1e-3;
    let mut t = 0.0;
    while t < 2.0 * PI {
        let (c0, _) = side(t);
        let (c1, a1) = side(t + h);
        if c0 < 0.0 && c1 >= 0.0 && a1 > 0.0 {
            let (mut lo, mut hi) = (t, t + h);
            for _ in 0..60 {
                let mid = 0.5 * (lo + hi);
                if side(mid).0 < 0.0 {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            return 0.5 * (lo + hi);
        }
        t += h;
    }
    f64::NAN
}

#[test]
fn turn_time_examples() {
    assert!((cs_turn_time_rel(RelState::new(3.0, 0.0)).unwrap() - 2.0 * PI / 3.0).abs() < 1e-12);
    assert!(cs_turn_time_rel(RelState::new(0.0, 2.0)).unwrap().abs() < 1e-12);
    assert!(matches!(
        cs_turn_time_rel(RelState::new(1.2, 0.3)),
        Err(TributaryError::InsideTurnCircle(_))
    ));
    for s in [
        RelState::new(3.0, 0.0),
        RelState::new(2.5, -1.5),
        RelState::new(-1.5, 2.0),
        RelState::new(-2.0, -2.0),
        RelState::new(0.5, 3.0),
    ] {
        let t = cs_turn_time_rel(s).unwrap();
        assert!((t - turn_time_by_search(s)).abs() < 1e-9, "{s:?}: {t}");
    }
}

#[test]
fn turn_time_in_world_frame() {
    let pose = Pose::new(3.0, -1.0, 0.7);
    let s = RelState::new(2.5, -1.5);
    let target = chauffeur::game::to_global(s, &pose);
    let t = dubins_cs_turn_time(&pose, target).unwrap();
    assert!((t - cs_turn_time_rel(s).unwrap()).abs() < 1e-12);
}

#[test]
fn tributary_value_examples() {
    let p = GameParams::new(0.5, 0.5).unwrap();
    assert!((tributary_value(&p, RelState::new(0.0, 2.0)).unwrap() - 3.0).abs() < 1e-12);
    // Abeam at (3, 0): turn 2π/3, straight leg √3, evader runs 0.3·2π/3.
    let p = GameParams::new(0.3, 0.5).unwrap();
    let t = 2.0 * PI / 3.0;
    let want = t + (3f64.sqrt() + 0.3 * t - 0.5) / 0.7;
    assert!((tributary_value(&p, RelState::new(3.0, 0.0)).unwrap() - want).abs() < 1e-12);
    assert!(matches!(
        tributary_value(&p, RelState::new(0.1, 0.55)),
        Err(TributaryError::CaptureDuringTurn { .. })
    ));
}

#[test]
fn region_examples() {
    let g = geometry(0.3);
    let tag = |x, y| g.classify(RelState::new(x, y)).tag;
    assert_eq!(tag(0.0, 1.5), RegionTag::UniversalPositive);
    assert_eq!(tag(0.1, 0.1), RegionTag::Captured);
    assert_eq!(tag(2.152, -0.214), RegionTag::Secondary);
    assert_eq!(
        geometry(0.2).classify(RelState::new(2.152, -0.214)).tag,
        RegionTag::Tributary
    );
    assert_eq!(tag(3.0, 3.0), RegionTag::Tributary);
    assert_eq!(tag(0.3, 0.6), RegionTag::Primary);
    let ybar = g.axis_y();
    assert!(ybar < -0.5);
    assert_eq!(tag(0.0, ybar + 0.1), RegionTag::UniversalNegative);
    assert_eq!(tag(0.0, ybar - 0.1), RegionTag::Dispersal);
    let e = g.equivocal.curve.points[g.equivocal.curve.len() / 2];
    assert_eq!(tag(e.x, e.y), RegionTag::Equivocal);
    let r = g.classify(RelState::new(-2.152, -0.214));
    assert!(r.mirrored && r.tag == RegionTag::Secondary);
}

#[test]
fn equivocal_evader_pursues() {
    let g = geometry(0.3);
    let pts = &g.equivocal.curve.points;
    for k in (0..pts.len()).step_by(pts.len() / 15) {
        let e = g.equilibrium(pts[k]);
        assert_eq!(e.region.tag, RegionTag::Equivocal);
        assert!((e.psi - pure_pursuit_heading(pts[k])).abs() < 1e-4);
        assert!((-1.0..=1.0).contains(&e.u));
    }
    assert!(g
        .equivocal
        .controls
        .iter()
        .all(|u| (-1.0..=1.0).contains(u)));
}

#[test]
fn equivocal_curve_runs_from_barrier_end_to_axis() {
    let g = geometry(0.3);
    let c = &g.equivocal.curve;
    assert!((c.first() - g.barrier.last()).norm() < 1e-12);
    assert_eq!(c.last().x, 0.0);
    assert!((c.last().y - g.axis_y()).abs() < 1e-12);
    let p = g.params();
    for (q, v) in c.points.iter().zip(&c.tau).step_by(50) {
        assert!((tributary_value(p, *q).unwrap() - v).abs() < 1e-9);
    }
}

#[test]
fn value_is_continuous_across_the_equivocal_curve() {
    let g = geometry(0.3);
    let pts = &g.equivocal.curve.points;
    let jump = |k: usize, off: f64| {
        let d = pts[k + 1] - pts[k];
        let n = RelState::new(-d.y, d.x) * (off / d.norm());
        let (a, b) = (g.equilibrium(pts[k] + n), g.equilibrium(pts[k] - n));
        assert_ne!(a.region.tag, b.region.tag);
        (a.value - b.value).abs()
    };
    for k in (pts.len() / 10..pts.len() - 5).step_by(pts.len() / 10) {
        let (coarse, fine) = (jump(k, 1e-3), jump(k, 1e-4));
        assert!(
            fine < 2e-3 && fine < 0.2 * coarse + 1e-4,
            "{k}: {coarse:e} -> {fine:e}"
        );
    }
}

#[test]
fn value_jumps_up_across_the_barrier() {
    let g = geometry(0.3);
    let pts = &g.barrier.points;
    for k in [pts.len() / 2, 3 * pts.len() / 4] {
        let n = g.barrier_normal(pts[k]) * 1e-2;
        let outside = g.equilibrium(pts[k] + n);
        let inside = g.equilibrium(pts[k] - n);
        assert_eq!(inside.region.tag, RegionTag::Secondary);
        assert!(
            inside.value > outside.value + 0.1,
            "{} vs {}",
            inside.value,
            outside.value
        );
        assert_eq!((outside.u, inside.u), (1.0, -1.0));
    }
}

#[test]
fn axis_values() {
    let g = geometry(0.3);
    let e = g.equilibrium(RelState::new(0.0, 2.0));
    assert!((e.value - 1.5 / 0.7).abs() < 1e-12);
    assert_eq!((e.u, e.psi), (0.0, 0.0));
    let ybar = g.axis_y();
    let e = g.equilibrium(RelState::new(0.0, ybar + 0.2));
    assert!((e.value - (g.axis_value() + 0.2 / 0.7)).abs() < 1e-12);
}

#[test]
fn unsupported_geometry_is_reported() {
    let p = GameParams::new(0.1, 0.5).unwrap();
    assert!(Geometry::build(&p).is_err());
}
