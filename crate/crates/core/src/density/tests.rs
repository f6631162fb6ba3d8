use super::*;
use approx::assert_relative_eq;
use std::f64::consts::PI;

fn grid3(r_max: f64, cells: usize) -> RadialGrid {
    RadialGrid::uniform(3, r_max, cells).unwrap()
}

const B_ANN: f64 = 1.040_041_911_525_952; // (1 + 0.125)^{1/3}

#[test]
fn grid_validation() {
    assert!(RadialGrid::from_edges(3, vec![0.0, 1.0, 1.0]).is_err());
    assert!(RadialGrid::from_edges(3, vec![0.1, 1.0]).is_err());
    assert!(RadialGrid::from_edges(3, vec![0.0]).is_err());
    let g = grid3(2.0, 8);
    assert_eq!(g.len(), 8);
    assert_relative_eq!(g.capacity(), 4.0 * PI / 3.0 * 8.0, max_relative = 1e-14);
    for (i, v) in g.volumes().iter().enumerate() {
        let (a, b) = (g.edges()[i], g.edges()[i + 1]);
        assert_relative_eq!(*v, 4.0 * PI / 3.0 * (b.powi(3) - a.powi(3)), max_relative = 1e-14);
    }
    assert_eq!(g.cell_of(0.0), 0);
    assert_eq!(g.cell_of(0.25), 1);
    assert_eq!(g.cell_of(5.0), 7);
}

#[test]
fn breakpoints_become_edges() {
    let g = RadialGrid::with_breakpoints(3, 2.0, 10, &[0.5, 1.0, 1.013, 1.7]).unwrap();
    for p in [0.5, 1.0, 1.013, 1.7] {
        assert!(g.edges().contains(&p));
    }
    assert!(g.edges().windows(2).all(|w| w[1] > w[0]));
    let again = g.refine_at(&[0.5, 1.0]).unwrap();
    assert_eq!(again.fingerprint(), g.fingerprint());
}

#[test]
fn ball_and_annulus_masses() {
    let g = grid3(2.0, 37);
    let ball = make_profile(&ProfileKind::Ball { radius: 1.0 }, &g).unwrap();
    assert_relative_eq!(ball.mass(), 4.0 * PI / 3.0, max_relative = 1e-14);
    assert_eq!(ball.fractional_cells(), 1);
    let ann = make_profile(&ProfileKind::Annulus { inner: 0.5, outer: B_ANN }, &g).unwrap();
    assert_relative_eq!(ann.mass(), 4.0 * PI / 3.0, max_relative = 1e-13);
    let zero = make_profile(&ProfileKind::Custom(vec![0.0; 37]), &g).unwrap();
    assert_eq!(zero.mass(), 0.0);
    assert!(make_profile(&ProfileKind::Ball { radius: 3.0 }, &g).is_err());
    assert!(make_profile(&ProfileKind::Custom(vec![1.5; 37]), &g).is_err());
}

#[test]
fn equal_mass_annulus_radius() {
    assert_relative_eq!(equal_mass_annulus_outer(3, 1.0, 0.5), B_ANN, max_relative = 1e-14);
}

#[test]
fn shell_patterns_keep_mass_and_stay_in_shell() {
    let radius = 1.3;
    for pattern in ShellPattern::ALL {
        for &theta in &[0.02, 0.1, 0.3, 0.9] {
            let kind = ProfileKind::ShellPerturbedBall { radius, theta, pattern };
            let bp = profile_breakpoints(&kind, 3).unwrap();
            let g = RadialGrid::with_breakpoints(3, 3.0, 200, &bp).unwrap();
            let p = make_profile(&kind, &g).unwrap();
            assert_relative_eq!(p.mass(), ball_volume(3, radius), max_relative = 1e-11);
            assert!(p.support_radius() <= (1.0 + theta) * radius * (1.0 + 1e-12));
            for (i, &v) in p.values().iter().enumerate() {
                if g.edges()[i + 1] <= (1.0 - theta) * radius {
                    assert_eq!(v, 1.0);
                }
            }
        }
    }
}

#[test]
fn bathtub_examples() {
    let g = grid3(2.0, 64);
    // psi increasing through R -> the ball
    let psi: Vec<f64> = g.centers();
    let m = ball_volume(3, 1.0);
    let (p, level) = bathtub_fill(&psi, m, &g).unwrap();
    let ball = make_profile(&ProfileKind::Ball { radius: 1.0 }, &g).unwrap();
    assert!(p.l1_distance(&ball).unwrap() < 1e-13);
    assert!(level > 0.96 && level < 1.04);
    // constant psi: innermost cells first
    let (p, _) = bathtub_fill(&vec![1.0; 64], m, &g).unwrap();
    assert!(p.l1_distance(&ball).unwrap() < 1e-13);
    // half the volume: median-volume radius 2 / 2^{1/3}
    let half = 0.5 * g.capacity();
    let (p, _) = bathtub_fill(&psi, half, &g).unwrap();
    assert_relative_eq!(p.mass(), half, max_relative = 1e-14);
    assert_eq!(p.fractional_cells(), 1);
    let r_med = 2.0 / 2f64.powf(1.0 / 3.0);
    let k = g.cell_of(r_med);
    assert!(p.values()[k] > 0.0 && p.values()[k] < 1.0);
    assert!(p.values()[..k].iter().all(|&v| v == 1.0));
    // infeasible
    assert!(matches!(
        bathtub_fill(&psi, 2.0 * g.capacity(), &g),
        Err(FlockError::InfeasibleMass { .. })
    ));
}

#[test]
fn overlap_examples() {
    let g = grid3(3.0, 90);
    let ball = make_profile(&ProfileKind::Ball { radius: 1.0 }, &g).unwrap();
    let unit = BallSpec::new(3, 1.0).unwrap();
    assert_relative_eq!(overlap_with_shifted_ball(&ball, &unit, 0.0), 4.0 * PI / 3.0, max_relative = 1e-14);
    assert_eq!(overlap_with_shifted_ball(&ball, &unit, 2.0), 0.0);
    assert_eq!(overlap_with_shifted_ball(&ball, &unit, 2.5), 0.0);
    let ann = make_profile(&ProfileKind::Annulus { inner: 0.5, outer: B_ANN }, &g).unwrap();
    assert_relative_eq!(overlap_with_shifted_ball(&ann, &unit, 0.0), 7.0 * PI / 6.0, max_relative = 1e-12);
}

#[test]
fn overlap_of_two_unit_balls_matches_lens_volume() {
    // two unit balls at distance d: π (4 + d)(2 - d)² / 12
    let g = RadialGrid::with_breakpoints(3, 3.0, 64, &[1.0]).unwrap();
    let ball = make_profile(&ProfileKind::Ball { radius: 1.0 }, &g).unwrap();
    let unit = BallSpec::new(3, 1.0).unwrap();
    for &d in &[0.1, 0.5, 1.0, 1.7] {
        let want = PI * (4.0 + d) * (2.0 - d).powi(2) / 12.0;
        assert_relative_eq!(overlap_with_shifted_ball(&ball, &unit, d), want, max_relative = 1e-12);
    }
}

#[test]
fn cap_fraction_dimensions_agree_with_beta_formula() {
    // the beta-function branch reproduces N = 2, 3 closed forms
    for &(r, a, radius) in &[(1.0, 0.5, 1.0), (0.8, 0.6, 0.7), (1.5, 1.0, 1.0)] {
        let c0: f64 = (r * r + a * a - radius * radius) / (2.0 * r * a);
        for dim in [2usize, 3] {
            let half = 0.5 * statrs::function::beta::beta_reg(0.5 * (dim as f64 - 1.0), 0.5, 1.0 - c0 * c0);
            let via_beta = if c0 >= 0.0 { half } else { 1.0 - half };
            assert_relative_eq!(cap_fraction(dim, r, a, radius), via_beta, max_relative = 1e-12);
        }
    }
}

#[test]
fn asymmetry_examples() {
    let g = grid3(3.0, 120);
    let ball = make_profile(&ProfileKind::Ball { radius: 1.0 }, &g).unwrap();
    let (a, s) = asymmetry(&ball).unwrap();
    assert!(a < 1e-14 && s == 0.0);
    let ann = make_profile(&ProfileKind::Annulus { inner: 0.5, outer: B_ANN }, &g).unwrap();
    let (a, _) = asymmetry(&ann).unwrap();
    let unit = BallSpec::with_volume(3, ann.mass()).unwrap();
    let zero_shift = 1.0 - overlap_with_shifted_ball(&ann, &unit, 0.0) / ann.mass();
    assert_relative_eq!(zero_shift, 0.125, max_relative = 1e-11);
    assert!(a <= 0.125 + 1e-12);
    // dense-scan oracle
    let mut best = f64::INFINITY;
    for k in 0..=4000 {
        let s = 3.0 * k as f64 / 4000.0;
        best = best.min(1.0 - overlap_with_shifted_ball(&ann, &unit, s) / ann.mass());
    }
    assert!(a <= best + 1e-9);
    // half-density ball
    let half = make_profile(&ProfileKind::Custom(ball.values().iter().map(|v| 0.5 * v).collect()), &g).unwrap();
    let (a, _) = asymmetry(&half).unwrap();
    assert!((0.0..=1.0).contains(&a) && a > 0.1);
    assert!(matches!(asymmetry(&RadialProfile::zeros(g)), Err(FlockError::ZeroMass)));
}

#[test]
fn asymmetry_scale_invariant() {
    let g = RadialGrid::with_breakpoints(3, 3.0, 150, &[0.4, 1.1]).unwrap();
    let p = make_profile(&ProfileKind::Annulus { inner: 0.4, outer: 1.1 }, &g).unwrap();
    let g2 = g.scaled(2.0).unwrap();
    let p2 = RadialProfile::new(g2, p.values().to_vec()).unwrap();
    let (a1, s1) = asymmetry(&p).unwrap();
    let (a2, s2) = asymmetry(&p2).unwrap();
    assert_relative_eq!(a1, a2, max_relative = 1e-6);
    // the optimum is flat in the shift, so compare the value reached at the rescaled shift
    let e1 = BallSpec::with_volume(3, p.mass()).unwrap();
    let at_rescaled = 1.0 - overlap_with_shifted_ball(&p, &e1, 0.5 * s2) / p.mass();
    assert!((at_rescaled - a1).abs() < 1e-9, "{a1} {s1} {a2} {s2}");
}

#[test]
fn competitor_fixed_point_on_ball() {
    let g = grid3(2.0, 50);
    let ball = make_profile(&ProfileKind::Ball { radius: 1.0 }, &g).unwrap();
    let spec = BallSpec::with_volume(3, ball.mass()).unwrap();
    for &theta in &[0.0, 0.1, 0.5, 1.0] {
        let t = competitor(&ball, theta, &spec).unwrap();
        let back = ball.on_grid(t.grid()).unwrap();
        assert!(t.l1_distance(&back).unwrap() < 1e-13, "theta {theta}");
    }
}

#[test]
fn competitor_annulus_example() {
    let g = grid3(2.0, 100);
    let ann = make_profile(&ProfileKind::Annulus { inner: 0.5, outer: B_ANN }, &g).unwrap();
    let spec = BallSpec::with_volume(3, ann.mass()).unwrap();
    assert_relative_eq!(spec.radius, 1.0, max_relative = 1e-12);
    let t = competitor(&ann, 0.6, &spec).unwrap();
    // m_i = |B_{0.4}|, m_o = 0: the outer cut removes mass |B_{0.4}| from the top
    let m_i = ball_volume(3, 0.4);
    let r_o = (B_ANN.powi(3) - 0.4f64.powi(3)).cbrt();
    assert_relative_eq!(t.mass_between(0.0, 0.4), m_i, max_relative = 1e-12);
    assert!(t.mass_between(r_o * (1.0 + 1e-12), 3.0) < 1e-12);
    assert!(t.grid().edges().iter().any(|&e| (e - r_o).abs() < 1e-12));
    let props = competitor_properties(&ann, &t, 0.6, &spec).unwrap();
    assert!(props.all_hold(1e-10, 1e-9), "{props:?}");
}

#[test]
fn competitor_is_idempotent() {
    let g = grid3(2.0, 80);
    let ann = make_profile(&ProfileKind::Annulus { inner: 0.3, outer: equal_mass_annulus_outer(3, 1.0, 0.3) }, &g)
        .unwrap();
    let spec = BallSpec::with_volume(3, ann.mass()).unwrap();
    for &theta in &[0.05, 0.25, 0.8] {
        let once = competitor(&ann, theta, &spec).unwrap();
        let twice = competitor(&once, theta, &spec).unwrap();
        assert_eq!(once.grid(), twice.grid());
        assert!(once.l1_distance(&twice).unwrap() < 1e-12);
    }
}

#[test]
fn competitor_rejects_bad_input() {
    let g = grid3(2.0, 20);
    let ball = make_profile(&ProfileKind::Ball { radius: 1.0 }, &g).unwrap();
    let wrong = BallSpec::new(3, 1.1).unwrap();
    assert!(matches!(competitor(&ball, 0.1, &wrong), Err(FlockError::MassMismatch { .. })));
    let spec = BallSpec::new(3, 1.0).unwrap();
    assert!(matches!(competitor(&ball, 1.5, &spec), Err(FlockError::ThetaOutOfRange(_))));
}

#[test]
fn text_round_trip() {
    let g = RadialGrid::with_breakpoints(3, 2.0, 7, &[0.77]).unwrap();
    let p = make_profile(&ProfileKind::Annulus { inner: 0.2, outer: 0.77 }, &g).unwrap();
    let params = KernelParams::new(3, 2.0, 1.0).unwrap();
    let text = p.to_text(&params, &["seed 4".to_string()]);
    assert!(text.starts_with("# 3 2 1 "));
    let (back_params, back) = RadialProfile::from_text(&text).unwrap();
    assert_eq!(back_params, params);
    assert_eq!(back.values(), p.values());
    assert_eq!(back.grid().edges(), p.grid().edges());
    assert!(RadialProfile::from_text("3 2 1 4\n0 1 1\n").is_err());
    assert!(RadialProfile::from_text("# 3 2 1 4\n0 1 1\n2 3 1\n").is_err());
}

#[test]
fn transfer_between_grids_conserves_mass() {
    let g = grid3(2.0, 13);
    let p = make_profile(&ProfileKind::Annulus { inner: 0.31, outer: 1.23 }, &g).unwrap();
    let fine = RadialGrid::uniform(3, 2.0, 40).unwrap();
    let q = p.on_grid(&fine).unwrap();
    assert_relative_eq!(q.mass(), p.mass(), max_relative = 1e-13);
    let refined = g.refine_at(&[0.5, 1.01]).unwrap();
    let r = p.on_grid(&refined).unwrap();
    assert_relative_eq!(r.mass(), p.mass(), max_relative = 1e-14);
}
