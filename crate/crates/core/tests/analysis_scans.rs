use fareylat::analysis::{
    bound_ratio_scan, error_growth_scan, f_beta_partial_sums, loglog_fit, mertens_envelope_scan,
    quadratic_instance, AlphaSource, BoundFamily, ScanSpec,
};
use fareylat::build_tables;

#[test]
fn growth_exponent_on_doubling_grid() {
    let t = build_tables(1600).unwrap();
    let scan = error_growth_scan(&t, &[100, 200, 400, 800, 1600]).unwrap();
    println!("fitted exponent {}", scan.fit.slope);
    assert!((1.9..=2.7).contains(&scan.fit.slope));
    assert!(scan.max_rel_deviation.unwrap() <= 1e-9);
    let csv = scan.to_table().to_csv_string().unwrap();
    assert!(csv.starts_with("T,C,F,Icount,G,E,absE,E_exact\n100,"));
}

#[test]
fn mertens_envelope_at_one_million() {
    let t = build_tables(1_000_000).unwrap();
    let rows = mertens_envelope_scan(&t, &[16, 1000, 1_000_000]).unwrap();
    assert_eq!(rows[0].m, -1);
    let last = rows.last().unwrap();
    assert!(last.scaled < 10.0, "{}", last.scaled);
    assert!(rows.iter().all(|r| r.rho.is_finite() && r.rho > 0.0));
}

#[test]
fn single_rational_series_is_flat() {
    let t = build_tables(10).unwrap();
    let spec = ScanSpec {
        ks: vec![2],
        qs: vec![1],
        alphas: vec![AlphaSource::Explicit("1/7".into())],
        ..ScanSpec::default()
    };
    let scan = bound_ratio_scan(&t, &spec, BoundFamily::Prop31).unwrap();
    assert_eq!(scan.series.len(), 1);
    let slope = scan.series[0].slope().unwrap();
    assert!(slope <= 0.05, "{slope}");
}

#[test]
fn default_scan_ratios_finite_and_positive() {
    let t = build_tables(1000).unwrap();
    let spec = ScanSpec::default();
    for family in [BoundFamily::Prop31, BoundFamily::Lemma33, BoundFamily::Rcount] {
        let scan = bound_ratio_scan(&t, &spec, family).unwrap();
        let mut zeros = 0;
        for r in &scan.reports {
            assert!(r.is_finite(), "{family:?} {:?}", r.params);
            assert!(r.rhs_total > 0.0 && r.ratio >= 0.0, "{family:?} {:?}", r.params);
            if r.ratio == 0.0 {
                // only a rational α can cancel exactly
                assert!(r.lhs == 0.0 && r.params.iter().any(|p| p.0 == "alpha" && p.1.contains('/')));
                zeros += 1;
            }
        }
        let counted: usize = scan.series.iter().map(|s| s.zero_points).sum();
        assert_eq!(counted, zeros, "{family:?}");
        for s in &scan.series {
            if let Some(fit) = &s.fit {
                assert_eq!(fit.dropped, s.zero_points, "{}", s.key);
            }
        }
    }
}

#[test]
fn quadratic_instance_ratio_is_small() {
    let t = build_tables(1000).unwrap();
    for (a, b, d) in [(64u64, 30u64, 7u64), (128, 210, 11), (500, 97, 3)] {
        let r = quadratic_instance(&t, a, b, d, 0.05).unwrap();
        assert!(r.is_finite());
        assert!(r.lhs.abs() <= a as f64 / 2.0);
        assert!(r.ratio < 1.0);
    }
}

#[test]
fn cancelling_series_has_no_fit() {
    let t = build_tables(30).unwrap();
    // n coprime to 6 is odd, so n²/2 has fractional part 1/2 and ψ vanishes
    let spec = ScanSpec {
        ks: vec![2],
        qs: vec![6],
        alphas: vec![AlphaSource::Explicit("1/2".into())],
        ..ScanSpec::default()
    };
    let scan = bound_ratio_scan(&t, &spec, BoundFamily::Prop31).unwrap();
    let s = &scan.series[0];
    assert_eq!(s.zero_points, spec.n_grid.len());
    assert!(s.fit.is_none() && s.slope_within(0.0));
}

#[test]
fn rational_ladder_scan() {
    let t = build_tables(10).unwrap();
    let spec = ScanSpec {
        alphas: vec![AlphaSource::Ladder { max_den: 5 }],
        deltas: vec![0.25],
        ..ScanSpec::default()
    };
    let scan = bound_ratio_scan(&t, &spec, BoundFamily::Rcount).unwrap();
    assert_eq!(scan.series.len(), 9);
}

// Σ F_0(n) ~ c x log x and Σ F_β(n) ~ c x for β > 0: the normalised sums settle
#[test]
fn multiplicative_weight_growth() {
    let t = build_tables(1_000_000).unwrap();
    let xs: Vec<u64> = (0..=6).map(|i| 1000u64 << (i + i / 2)).filter(|&x| x <= 1_000_000).collect();
    for beta in [0.0, 0.5, 1.0] {
        let sums = f_beta_partial_sums(&t, beta, &xs).unwrap();
        let pts: Vec<(f64, f64)> = sums
            .iter()
            .map(|&(x, s)| {
                let x = x as f64;
                (x, if beta == 0.0 { s / (x * x.ln()) } else { s / x })
            })
            .collect();
        let fit = loglog_fit(&pts).unwrap();
        assert!(fit.slope.abs() <= 0.05, "beta={beta} slope {}", fit.slope);
    }
}
