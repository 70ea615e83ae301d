use crackle::density::{sample_cloud, DensityModel, ExpDensity, PowerLawDensity, RadialTable, DEFAULT_TABLE_RESOLUTION};

const N: usize = 100_000;

fn models() -> Vec<(&'static str, DensityModel)> {
    vec![
        ("power d=2 alpha=4", PowerLawDensity::new(2, 4.0).unwrap().into()),
        ("power d=3 alpha=5", PowerLawDensity::new(3, 5.0).unwrap().into()),
        ("exp d=2 tau=1", ExpDensity::new(2, 1.0).unwrap().into()),
        ("exp d=2 tau=0.9", ExpDensity::new(2, 0.9).unwrap().into()),
        ("exp d=3 tau=0.6", ExpDensity::new(3, 0.6).unwrap().into()),
    ]
}

#[test]
fn radial_law_passes_kolmogorov_smirnov() {
    // 0.1% critical value of the limiting Kolmogorov distribution
    let crit = 1.9495 / (N as f64).sqrt();
    for (name, m) in models() {
        let cloud = sample_cloud(&m, N, 11).unwrap();
        let mut r: Vec<f64> = (0..N).map(|i| cloud.norm(i)).collect();
        r.sort_by(f64::total_cmp);
        let n = N as f64;
        let ks = r
            .iter()
            .enumerate()
            .map(|(i, &x)| {
                let f = m.radial_cdf(x);
                f64::max(f - i as f64 / n, (i + 1) as f64 / n - f)
            })
            .fold(0.0, f64::max);
        println!("{name}: KS {ks:.5} (critical {crit:.5})");
        assert!(ks < crit, "{name}: KS statistic {ks}");
    }
}

#[test]
fn directions_are_centred() {
    for (name, m) in models() {
        let cloud = sample_cloud(&m, N, 12).unwrap();
        let d = cloud.dim();
        let mut mean = vec![0.0; d];
        for i in 0..N {
            let r = cloud.norm(i);
            for (a, x) in cloud.point(i).iter().enumerate() {
                mean[a] += x / r / N as f64;
            }
        }
        // each coordinate of a uniform direction has variance 1/d
        let tol = 4.0 / ((d * N) as f64).sqrt();
        assert!(mean.iter().all(|m| m.abs() < tol), "{name}: {mean:?}");
    }
}

#[test]
fn empirical_tail_matches_survival() {
    for (name, m) in models() {
        let cloud = sample_cloud(&m, N, 13).unwrap();
        for radius in [1.0, 2.0, 5.0] {
            let p = m.survival(radius);
            let hits = (0..N).filter(|&i| cloud.norm(i) >= radius).count() as f64 / N as f64;
            let se = (p * (1.0 - p) / N as f64).sqrt();
            assert!((hits - p).abs() <= 4.0 * se + 1.0 / N as f64, "{name} R={radius}: {hits} vs {p}");
        }
    }
}

#[test]
fn tables_build_across_tail_exponents() {
    for d in [2, 3] {
        for tau in [0.3, 0.5, 0.7, 0.8, 0.9, 0.95, 1.0] {
            let m: DensityModel = ExpDensity::new(d, tau).unwrap().into();
            let table = RadialTable::new(&m, DEFAULT_TABLE_RESOLUTION)
                .unwrap_or_else(|e| panic!("d={d} tau={tau}: {e}"));
            let (r, _) = table.entries().last().unwrap();
            assert!(m.survival(r) > 0.0);
        }
        for alpha in [d as f64 + 0.5, 4.0, 8.0] {
            let m: DensityModel = PowerLawDensity::new(d, alpha).unwrap().into();
            RadialTable::new(&m, DEFAULT_TABLE_RESOLUTION).unwrap();
        }
    }
}
