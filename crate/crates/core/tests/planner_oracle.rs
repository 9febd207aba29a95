use std::collections::{BTreeSet, BinaryHeap};
use std::cmp::Reverse;
use std::f64::consts::PI;

use activecam::estimation::MergedState;
use activecam::geometry::wrap_angle;
use activecam::planner::{
    apply_mode_constraints, detect_frontiers, distance_transform, heading_utilities, polar_unknown_bins, rh_solve,
    select_waypoint, ControllerConfig, NavConfig, NavigationMap, PlannerConfig, PlatformMode, Reference,
    WaypointDecision, MIN_CLUSTER_SIZE,
};
use activecam::kinematics::ExtendedVelocity;
use activecam::raycast::GridGeometry;
use activecam::slamlite::CellClass;
use activecam::worldsim::CameraModel;
use nalgebra::Matrix6;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn state(x: f64, y: f64, psi: f64) -> MergedState {
    MergedState { x, y, psi, vx: 0.0, vy: 0.0, dpsi: 0.0, cov: Matrix6::identity() * 1e-4, time: 0.0 }
}

fn bordered(geom: &GridGeometry, class: impl Fn(usize, usize) -> CellClass) -> Vec<CellClass> {
    (0..geom.len())
        .map(|i| {
            let (ix, iy) = geom.coords(i);
            if ix == 0 || iy == 0 || ix == geom.width - 1 || iy == geom.height - 1 {
                CellClass::Occupied
            } else {
                class(ix, iy)
            }
        })
        .collect()
}

/// Half-explored room: known left part with scattered obstacles, unknown
/// right part with a few known islands.
fn half_explored(seed: u64) -> (GridGeometry, Vec<CellClass>) {
    let geom = GridGeometry::new(70, 50, 0.05, [0.0, 0.0]);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut classes = bordered(&geom, |ix, iy| {
        if ix < 35 || (45..52).contains(&ix) && (10..20).contains(&iy) {
            CellClass::Free
        } else {
            CellClass::Unknown
        }
    });
    for _ in 0..120 {
        let i = rng.random_range(0..geom.len());
        classes[i] = if rng.random_bool(0.5) { CellClass::Occupied } else { CellClass::Unknown };
    }
    (geom, classes)
}

fn frontier_oracle(geom: &GridGeometry, classes: &[CellClass]) -> Vec<BTreeSet<usize>> {
    let (w, h) = (geom.width as i64, geom.height as i64);
    let at = |x: i64, y: i64| (x >= 0 && y >= 0 && x < w && y < h).then(|| (y * w + x) as usize);
    let frontier: BTreeSet<usize> = (0..geom.len())
        .filter(|&i| {
            let (x, y) = ((i as i64) % w, (i as i64) / w);
            classes[i] == CellClass::Free
                && [(1, 0), (-1, 0), (0, 1), (0, -1)]
                    .iter()
                    .any(|(dx, dy)| at(x + dx, y + dy).is_some_and(|n| classes[n] == CellClass::Unknown))
        })
        .collect();
    let mut label = vec![usize::MAX; geom.len()];
    let mut clusters = Vec::new();
    for &s in &frontier {
        if label[s] != usize::MAX {
            continue;
        }
        let id = clusters.len();
        let mut members = BTreeSet::new();
        let mut stack = vec![s];
        label[s] = id;
        while let Some(c) = stack.pop() {
            members.insert(c);
            let (x, y) = ((c as i64) % w, (c as i64) / w);
            for dy in -1..=1 {
                for dx in -1..=1 {
                    if let Some(n) = at(x + dx, y + dy) {
                        if frontier.contains(&n) && label[n] == usize::MAX {
                            label[n] = id;
                            stack.push(n);
                        }
                    }
                }
            }
        }
        clusters.push(members);
    }
    clusters.retain(|c| c.len() >= MIN_CLUSTER_SIZE);
    clusters
}

#[test]
fn frontiers_match_flood_fill_oracle() {
    for seed in 0..10 {
        let (geom, classes) = half_explored(seed);
        let got = detect_frontiers(&geom, &classes);
        let mut got_sets: Vec<BTreeSet<usize>> = got.iter().map(|c| c.cells.iter().copied().collect()).collect();
        let mut want = frontier_oracle(&geom, &classes);
        got_sets.sort();
        want.sort();
        assert_eq!(got_sets, want, "seed {seed}");
        assert!(!want.is_empty());
        for c in &got {
            let n = c.cells.len() as f64;
            let cx = c.cells.iter().map(|&i| geom.center_of_index(i)[0]).sum::<f64>() / n;
            let cy = c.cells.iter().map(|&i| geom.center_of_index(i)[1]).sum::<f64>() / n;
            assert!((c.centroid[0] - cx).abs() < 1e-12 && (c.centroid[1] - cy).abs() < 1e-12);
        }
    }
}

fn dijkstra_oracle(geom: &GridGeometry, source: &[bool]) -> Vec<f64> {
    let mut dist = vec![f64::INFINITY; geom.len()];
    let mut heap = BinaryHeap::new();
    for (i, &s) in source.iter().enumerate() {
        if s {
            dist[i] = 0.0;
            heap.push(Reverse((0u64, i)));
        }
    }
    let (w, h) = (geom.width as i64, geom.height as i64);
    while let Some(Reverse((bits, i))) = heap.pop() {
        let d = f64::from_bits(bits);
        if d > dist[i] {
            continue;
        }
        let (x, y) = ((i as i64) % w, (i as i64) / w);
        for dy in -1i64..=1 {
            for dx in -1i64..=1 {
                let (nx, ny) = (x + dx, y + dy);
                if (dx, dy) == (0, 0) || nx < 0 || ny < 0 || nx >= w || ny >= h {
                    continue;
                }
                let n = (ny * w + nx) as usize;
                let step = if dx != 0 && dy != 0 { 2f64.sqrt() } else { 1.0 } * geom.resolution;
                if d + step < dist[n] {
                    dist[n] = d + step;
                    heap.push(Reverse(((d + step).to_bits(), n)));
                }
            }
        }
    }
    dist
}

#[test]
fn chamfer_transform_matches_dijkstra() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for _ in 0..5 {
        let geom = GridGeometry::new(rng.random_range(5..60), rng.random_range(5..60), 0.05, [0.0, 0.0]);
        let source: Vec<bool> = (0..geom.len()).map(|_| rng.random_bool(0.03)).collect();
        if !source.iter().any(|s| *s) {
            continue;
        }
        let got = distance_transform(&geom, &source);
        let want = dijkstra_oracle(&geom, &source);
        for (a, b) in got.iter().zip(&want) {
            assert!((a - b).abs() < 1e-9, "{a} vs {b}");
        }
    }
}

fn selected(decision: WaypointDecision) -> activecam::planner::Waypoint {
    match decision {
        WaypointDecision::Goal(w) => w,
        WaypointDecision::ExplorationComplete => panic!("no waypoint"),
    }
}

#[test]
fn single_frontier_ahead_is_faced() {
    let geom = GridGeometry::new(200, 61, 0.05, [0.0, 0.0]);
    let classes = bordered(&geom, |ix, _| if ix < 40 { CellClass::Free } else { CellClass::Unknown });
    let here = [1.0, geom.center(0, 30)[1]];
    let nav = NavigationMap::new(geom, classes.clone(), NavConfig::default());
    let field = nav.search(here).unwrap();
    let frontiers = detect_frontiers(&geom, &classes);
    assert_eq!(frontiers.len(), 1);
    let w = selected(select_waypoint(&frontiers, &state(here[0], here[1], 0.0), &nav, &field, &CameraModel::default(), &PlannerConfig::default(), &[]));
    assert_eq!(w.psi, 0.0);
}

#[test]
fn unknown_to_the_left_is_faced() {
    let geom = GridGeometry::new(61, 200, 0.05, [0.0, 0.0]);
    let classes = bordered(&geom, |_, iy| if iy < 40 { CellClass::Free } else { CellClass::Unknown });
    let here = [geom.center(30, 0)[0], 1.0];
    let nav = NavigationMap::new(geom, classes.clone(), NavConfig::default());
    let field = nav.search(here).unwrap();
    let cam = CameraModel::default();
    let frontiers = detect_frontiers(&geom, &classes);
    let w = selected(select_waypoint(&frontiers, &state(here[0], here[1], 0.0), &nav, &field, &cam, &PlannerConfig::default(), &[]));
    assert!(wrap_angle(w.psi - PI / 2.0).abs() <= cam.fov / 2.0, "psi {}", w.psi);
}

#[test]
fn waypoint_matches_exhaustive_enumeration() {
    let cam = CameraModel::default();
    let cfg = PlannerConfig::default();
    for seed in 0..6 {
        let (geom, classes) = half_explored(seed);
        let here = [0.6, 1.2];
        let nav = NavigationMap::new(geom, classes.clone(), cfg.nav);
        let Some(field) = nav.search(here) else { continue };
        let frontiers = detect_frontiers(&geom, &classes);
        let psi_now = 0.4;
        let got = select_waypoint(&frontiers, &state(here[0], here[1], psi_now), &nav, &field, &cam, &cfg, &[]);

        let mut best: Option<(f64, f64, usize, f64)> = None;
        let mut seen = BTreeSet::new();
        for cluster in &frontiers {
            let goal = (0..geom.len())
                .filter(|&i| field.reachable(i) && (nav.is_traversable(i) || i == field.start))
                .map(|i| {
                    let c = geom.center_of_index(i);
                    ((c[0] - cluster.centroid[0]).hypot(c[1] - cluster.centroid[1]), i)
                })
                .min_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
            let Some((_, goal)) = goal else { continue };
            if !seen.insert(goal) {
                continue;
            }
            let pos = geom.center_of_index(goal);
            let bins = polar_unknown_bins(&geom, &classes, pos, cam.max_depth);
            let path = field.path(&geom, goal).unwrap();
            let len: f64 = path.windows(2).map(|w| (w[1][0] - w[0][0]).hypot(w[1][1] - w[0][1])).sum();
            for k in 0..cfg.headings {
                let psi = wrap_angle(2.0 * PI * k as f64 / cfg.headings as f64);
                let utility: f64 = (0..360)
                    .filter(|&j| wrap_angle((j as f64).to_radians() - 2.0 * PI * k as f64 / cfg.headings as f64).abs() <= cam.fov / 2.0 + 1e-9)
                    .map(|j| bins[j])
                    .sum();
                if utility < cfg.min_utility {
                    continue;
                }
                let score = utility / (len + cfg.path_offset);
                let turn = wrap_angle(psi - psi_now).abs();
                let better = best.is_none_or(|(s, t, _, _)| {
                    let tol = 1e-12 * s.abs().max(1.0);
                    score > s + tol || ((score - s).abs() <= tol && turn < t)
                });
                if better {
                    best = Some((score, turn, goal, psi));
                }
            }
        }
        match (got, best) {
            (WaypointDecision::Goal(w), Some((_, _, goal, psi))) => {
                assert_eq!(geom.index_of(w.position[0], w.position[1]), Some(goal), "seed {seed}");
                assert_eq!(w.psi, psi, "seed {seed}");
            }
            (WaypointDecision::ExplorationComplete, None) => {}
            (g, b) => panic!("seed {seed}: {g:?} vs {b:?}"),
        }
    }
}

#[test]
fn heading_utilities_match_direct_sum() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let bins: Vec<f64> = (0..360).map(|_| rng.random_range(0..5) as f64).collect();
    let fov = CameraModel::default().fov;
    let u = heading_utilities(&bins, fov, 36);
    for (k, uk) in u.iter().enumerate() {
        let h = 10.0 * k as f64;
        let direct: f64 = (0..360)
            .filter(|&j| {
                let d = (j as f64 - h).rem_euclid(360.0);
                d.min(360.0 - d) <= fov.to_degrees() / 2.0
            })
            .map(|j| bins[j])
            .sum();
        assert_eq!(*uk, direct);
    }
}

/// Projected gradient on the problem with the joint rate removed:
/// controls `(vx, vy, dθ)`, camera heading driven by `dθ` alone.
fn reduced_solver(p0: [f64; 2], psi0: f64, r: &Reference, cfg: &ControllerConfig) -> [f64; 3] {
    let n = cfg.horizon_steps;
    let dt = cfg.step_dt;
    let cost = |u: &[[f64; 3]]| {
        let (mut p, mut psi, mut j) = (p0, psi0, 0.0);
        for k in 0..n {
            j += cfg.w_effort * (u[k][0].powi(2) + u[k][1].powi(2) + u[k][2].powi(2));
            p = [p[0] + u[k][0] * dt, p[1] + u[k][1] * dt];
            psi += u[k][2] * dt;
            j += cfg.w_position * ((p[0] - r.positions[k][0]).powi(2) + (p[1] - r.positions[k][1]).powi(2));
            j += cfg.w_heading * wrap_angle(psi - r.psi).powi(2);
        }
        j
    };
    let project = |u: &mut [[f64; 3]]| {
        for c in u.iter_mut() {
            let s = c[0].hypot(c[1]);
            if s > cfg.v_max {
                c[0] *= cfg.v_max / s;
                c[1] *= cfg.v_max / s;
            }
            c[2] = c[2].clamp(-cfg.omega_max, cfg.omega_max);
        }
    };
    let mut u = vec![[0.0; 3]; n];
    let step = 0.02;
    for _ in 0..30000 {
        let mut g = vec![[0.0; 3]; n];
        for k in 0..n {
            for i in 0..3 {
                let h = 1e-6;
                let mut a = u.clone();
                let mut b = u.clone();
                a[k][i] += h;
                b[k][i] -= h;
                g[k][i] = (cost(&a) - cost(&b)) / (2.0 * h);
            }
        }
        let mut next: Vec<[f64; 3]> = u.iter().zip(&g).map(|(c, d)| [c[0] - step * d[0], c[1] - step * d[1], c[2] - step * d[2]]).collect();
        project(&mut next);
        let moved = next.iter().zip(&u).flat_map(|(a, b)| (0..3).map(move |i| (a[i] - b[i]).abs())).fold(0.0, f64::max);
        u = next;
        if moved < 1e-11 {
            break;
        }
    }
    u[0]
}

#[test]
fn mode_a_equals_reduced_problem() {
    let cfg = ControllerConfig { max_iterations: 5000, tolerance: 1e-10, ..ControllerConfig::default() };
    let cases = [
        (state(0.0, 0.0, 0.0), vec![[0.0, 0.0], [1.0, 0.0]], 0.0),
        (state(0.0, 0.0, 0.0), vec![[0.0, 0.0], [2.0, 1.0]], 1.2),
        (state(1.0, 1.0, -2.0), vec![[1.0, 1.0], [0.5, 2.0], [0.0, 3.0]], 2.5),
    ];
    for (s, path, psi) in cases {
        let r = Reference::along_path(&path, [s.x, s.y], psi, &cfg);
        let sol = rh_solve(&s, s.psi, &r, PlatformMode::A, &cfg, None, &|_| false);
        assert!(!sol.fault);
        let want = reduced_solver([s.x, s.y], s.psi, &r, &cfg);
        let got = sol.command;
        assert_eq!(got.dgamma, 0.0);
        let err = (got.vx - want[0]).abs().max((got.vy - want[1]).abs()).max((got.dtheta - want[2]).abs());
        assert!(err < 1e-4, "{got:?} vs {want:?}");
    }
}

#[test]
fn forward_waypoint_gives_forward_speed() {
    let cfg = ControllerConfig::default();
    let r = Reference::along_path(&[[0.0, 0.0], [1.0, 0.0]], [0.0, 0.0], 0.0, &cfg);
    for mode in PlatformMode::ALL {
        let sol = rh_solve(&state(0.0, 0.0, 0.0), 0.0, &r, mode, &cfg, None, &|_| false);
        assert!(sol.command.vx > 0.0 && sol.command.vx <= 1.0, "{mode}");
        assert!(sol.cost_history.windows(2).all(|w| w[1] <= w[0]));
    }
}

#[test]
fn hh_summed_rate_is_rejected() {
    let set = apply_mode_constraints(PlatformMode::HH, 1.0, 1.0).unwrap();
    assert!(set.check(&ExtendedVelocity::new(0.0, 0.0, 0.8, 0.8), 0.0).is_err());
    assert!(set.check(&ExtendedVelocity::new(0.0, 0.0, 0.5, 0.5), 0.0).is_ok());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn commands_respect_mode_envelope(
        x in -2.0f64..2.0, y in -2.0f64..2.0, psi in -PI..PI, theta in -PI..PI,
        gx in -3.0f64..3.0, gy in -3.0f64..3.0, gpsi in -PI..PI, m in 0usize..4,
    ) {
        let mode = PlatformMode::ALL[m];
        let theta = if mode == PlatformMode::A { psi } else { theta };
        let cfg = ControllerConfig::default();
        let r = Reference::along_path(&[[x, y], [gx, gy]], [x, y], gpsi, &cfg);
        let sol = rh_solve(&state(x, y, psi), theta, &r, mode, &cfg, None, &|_| false);
        prop_assert!(!sol.fault);
        prop_assert!(sol.max_violation <= 1e-6);
        prop_assert!(sol.cost_history.windows(2).all(|w| w[1] <= w[0]));
        let u = sol.command;
        prop_assert!(u.vx.hypot(u.vy) <= 1.0 + 1e-9);
        prop_assert!((u.dtheta + u.dgamma).abs() <= 1.0 + 1e-9);
        prop_assert!(u.dtheta.abs() <= 1.0 + 1e-9 && u.dgamma.abs() <= 1.0 + 1e-9);
        match mode {
            PlatformMode::A => prop_assert_eq!(u.dgamma, 0.0),
            PlatformMode::OC => prop_assert_eq!(u.dtheta, 0.0),
            PlatformMode::Y0 => {
                let (s, c) = theta.sin_cos();
                prop_assert!((-s * u.vx + c * u.vy).abs() <= 1e-9);
                prop_assert!(c * u.vx + s * u.vy >= -1e-12);
            }
            PlatformMode::HH => {}
        }
    }
}
