use std::f64::consts::PI;

use rand::Rng;
use rand_distr::StandardNormal;
use shecheck::localtime::{
    local_time_grid_space, local_time_space, occupation_histogram, weighted_local_time_grid, weighted_local_time_time,
    Bins, Mollifier, Profile,
};
use shecheck::qcov::Path;
use shecheck::rng::replicate_rng;

fn axis(n: usize, h: f64) -> Vec<f64> {
    (0..n).map(|i| i as f64 * h).collect()
}

#[test]
fn linear_path_has_unit_density() {
    let c = axis(4097, 1.0 / 2048.0);
    let p = Path::new(&c, &c).unwrap();
    for profile in [Profile::Bump, Profile::Gaussian] {
        let k = Mollifier::with_bandwidth(1.0 / 32.0, profile).unwrap();
        let l = local_time_space(&p, 0.5, 1.0, &k).unwrap();
        assert!((l - 1.0).abs() < 1e-4, "{profile:?}: {l}");
        let g = local_time_grid_space(&p, 1.0, &k, 256).unwrap();
        assert!((g.total_mass() - 1.0).abs() < 1e-4, "{profile:?}: {}", g.total_mass());
    }
}

#[test]
fn weighted_local_time_of_the_identity_path() {
    // B_s = s: 𝓛(a) = (1/√π) d√s/ds at s = a = 1 / (2√(πa)).
    let c = axis(8193, 1.0 / 4096.0);
    let p = Path::new(&c, &c).unwrap();
    let k = Mollifier::with_bandwidth(1.0 / 64.0, Profile::Bump).unwrap();
    let l = weighted_local_time_time(&p, 0.25, 1.0, &k).unwrap();
    assert!((l - 1.0 / PI.sqrt()).abs() < 1e-3, "{l}");
    let g = weighted_local_time_grid(&p, 1.0, &k, 256).unwrap();
    assert!((g.total_mass() - 1.0 / PI.sqrt()).abs() < 1e-4, "{}", g.total_mass());
}

#[test]
fn random_walk_masses() {
    let n = 4097;
    let h = 1.0 / 2048.0;
    let c: Vec<f64> = (0..n).map(|i| -1.0 + i as f64 * h).collect();
    let mut rng = replicate_rng(11, 0);
    let mut w = vec![0.0; n];
    // Two-sided walk pinned at 0 in the middle.
    let mid = n / 2;
    for i in mid + 1..n {
        w[i] = w[i - 1] + h.sqrt() * rng.sample::<f64, _>(StandardNormal);
    }
    for i in (0..mid).rev() {
        w[i] = w[i + 1] + h.sqrt() * rng.sample::<f64, _>(StandardNormal);
    }
    let p = Path::new(&c, &w).unwrap();
    let occ = occupation_histogram(&p, -0.75, Bins { lo: -0.5, width: 0.01, count: 100 }).unwrap();
    assert!((occ.total() - 0.75).abs() < 1e-12);
    let k = Mollifier::with_bandwidth(1.0 / 16.0, Profile::Bump).unwrap();
    let g = local_time_grid_space(&p, 0.75, &k, 256).unwrap();
    assert!((g.total_mass() - 0.75).abs() < 0.75 * 1e-3, "{}", g.total_mass());
}

#[test]
fn too_narrow_bandwidth_is_rejected() {
    let c = axis(129, 1.0 / 128.0);
    let p = Path::new(&c, &c).unwrap();
    let k = Mollifier::with_bandwidth(1.0 / 256.0, Profile::Bump).unwrap();
    assert!(local_time_space(&p, 0.5, 1.0, &k).is_err());
}
