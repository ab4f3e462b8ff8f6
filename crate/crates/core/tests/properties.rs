use proptest::prelude::*;
use pwlik::harness::summarize;
use pwlik::*;

fn design_strategy(min_n: usize, max_n: usize) -> impl Strategy<Value = Design> {
    prop::collection::vec(0.01f64..1.0, min_n..=max_n).prop_map(|gaps| {
        let total: f64 = gaps.iter().sum();
        let mut acc = 0.0;
        let pts = gaps
            .iter()
            .map(|g| {
                let p = acc / total;
                acc += g;
                p
            })
            .collect();
        Design::new(pts).unwrap()
    })
}

fn weights_strategy(max_k: usize) -> impl Strategy<Value = WeightSeq> {
    prop::collection::vec(0.0f64..1.0, 1..=max_k).prop_map(|mut w| {
        *w.last_mut().unwrap() += 0.05;
        WeightSeq::new(w).unwrap()
    })
}

fn pair_strategy(n: usize) -> impl Strategy<Value = (usize, usize)> {
    (0..n - 1).prop_flat_map(move |i| (Just(i), (i + 1)..n))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn exp_cov_is_symmetric_with_exact_diagonal(theta in 0.01f64..1e3, sigma2 in 0.01f64..10.0, s in 0.0f64..1.0, t in 0.0f64..1.0) {
        let p = CovParams::new(theta, sigma2).unwrap();
        prop_assert_eq!(exp_cov(&p, s, t), exp_cov(&p, t, s));
        prop_assert_eq!(exp_cov(&p, s, s), sigma2);
    }

    #[test]
    fn b_coeff_is_symmetric_and_in_unit_interval(
        (design, a, b) in design_strategy(2, 30).prop_flat_map(|d| {
            let n = d.len();
            (Just(d), pair_strategy(n), pair_strategy(n))
        })
    ) {
        let x = b_coeff(a.0, a.1, b.0, b.1, &design).unwrap();
        let y = b_coeff(b.0, b.1, a.0, a.1, &design).unwrap();
        prop_assert_eq!(x, y);
        prop_assert!((0.0..=1.0 + 1e-15).contains(&x), "{}", x);
    }

    #[test]
    fn b_coeff_branches_agree_at_boundaries(
        (design, i, j, k) in design_strategy(4, 30).prop_flat_map(|d| {
            let n = d.len();
            (Just(d), 0..n - 2).prop_flat_map(move |(d, i)| (Just(d), Just(i), (i + 2)..n))
                .prop_flat_map(|(d, i, j)| (Just(d), Just(i), Just(j), (i + 1)..j))
        })
    ) {
        let s = design.points();
        // j = l with i ≤ k < j: the middle and last branches coincide
        let mid = (s[j] - s[k]).powi(2) / ((s[j] - s[i]) * (s[j] - s[k]));
        let last = (s[j] - s[k]) / (s[j] - s[i]);
        prop_assert!((mid - last).abs() <= 1e-12);
        prop_assert!((b_coeff(i, j, k, j, &design).unwrap() - last).abs() <= 1e-12);
        // j = k: the first and middle branches are both zero
        prop_assert_eq!(b_coeff(i, k, k, j, &design).unwrap(), 0.0);
    }

    #[test]
    fn tau2_approx_is_quadratic_in_weights(design in design_strategy(12, 60), w in weights_strategy(5), lambda in 0.1f64..10.0) {
        let scaled = WeightSeq::new(w.as_slice().iter().map(|x| lambda * x).collect()).unwrap();
        let a = tau2_approx(&design, &w).unwrap().tau2;
        let b = tau2_approx(&design, &scaled).unwrap().tau2;
        prop_assert!((b - lambda * lambda * a).abs() <= 1e-10 * b.max(1.0));
        let psi0 = CovParams::new(15.0, 1.0).unwrap();
        let va = asymptotic_variance(AsymKind::Wp, &psi0, &design, &w).unwrap();
        let vb = asymptotic_variance(AsymKind::Wp, &psi0, &design, &scaled).unwrap();
        prop_assert!((va - vb).abs() <= 1e-10 * va);
    }

    #[test]
    fn tau2_is_nonnegative_and_bounded_below(design in design_strategy(12, 80), w in weights_strategy(6), theta in 0.5f64..100.0) {
        let n = design.len();
        let k = w.cutoff();
        let bound = 2.0 * w.sum().powi(2) * (n - k) as f64 / n as f64;
        let approx = tau2_approx(&design, &w).unwrap();
        prop_assert!(approx.tau2 >= bound - 1e-12);
        prop_assert_eq!(approx.method, TauMethod::Approx);
        let exact = tau2_exact(&design, &w, theta).unwrap();
        prop_assert!(exact.tau2 >= 0.0);
        prop_assert_eq!((exact.n, exact.k), (n, k));
    }

    #[test]
    fn reindexing_identity(design in design_strategy(2, 200), w in weights_strategy(10),
                           theta in 0.1f64..500.0, sigma2 in 0.1f64..10.0, seed in any::<u64>()) {
        let psi = CovParams::new(theta, sigma2).unwrap();
        let path = simulate_ou(&psi, &design, &mut RngStream::new(seed, 0));
        let (a, b) = (pl_direct(&psi, &path, &w), pl_reindexed(&psi, &path, &w));
        prop_assert!((a - b).abs() <= 1e-10 * a.abs().max(1.0));
        let (a, b) = (pcl_direct(&psi, &path, &w), pcl_reindexed(&psi, &path, &w));
        prop_assert!((a - b).abs() <= 1e-10 * a.abs().max(1.0));
    }

    #[test]
    fn conditional_criterion_grows_as_lag_shrinks(theta in 0.1f64..10.0, zs in -3.0f64..3.0, dz in 0.1f64..3.0) {
        let p = CovParams::new(theta, 1.0).unwrap();
        let mut prev = f64::NEG_INFINITY;
        for gap in [1e-3, 1e-5, 1e-7, 1e-9, 1e-11] {
            let v = cond_pair_loglik(&p, 0.0, gap, zs, zs + dz).unwrap();
            prop_assert!(v > prev);
            prev = v;
        }
    }

    #[test]
    fn estimates_lie_in_the_box(seed in any::<u64>(), n in 3usize..80, k in 1usize..3,
                                a in 1.0f64..30.0, width in 0.0f64..30.0, c in 0.05f64..1.0, height in 0.0f64..3.0) {
        let truth = CovParams::new(15.0, 1.0).unwrap();
        let path = simulate_ou(&truth, &Design::equispaced(n).unwrap(), &mut RngStream::new(seed, 0));
        let w = WeightSeq::unit(k.min(n - 1)).unwrap();
        let bx = ParamBox::rect(a, a + width, c, c + height).unwrap();
        for kind in [ObjectiveKind::Pl, ObjectiveKind::Pcl, ObjectiveKind::Full] {
            let r = estimate(kind, &path, &w, &bx, &MinimizeOptions::default()).unwrap();
            prop_assert!(bx.contains(&r.psi_hat), "{:?} {:?}", kind, r);
            prop_assert!((r.microergodic - r.psi_hat.theta() * r.psi_hat.sigma2()).abs() <= 1e-12 * r.microergodic);
        }
    }

    #[test]
    fn summary_quantiles_are_ordered(xs in prop::collection::vec(-1e3f64..1e3, 2..200)) {
        let s = summarize(&xs).unwrap();
        prop_assert!(s.q05 <= s.q25 && s.q25 <= s.q50 && s.q50 <= s.q75 && s.q75 <= s.q95);
        prop_assert!(s.variance >= 0.0);
        let lo = xs.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        prop_assert!(lo <= s.q05 && s.q95 <= hi);
    }
}
