mod common;

use rand::Rng;
use waveplanes::field::{
    fuse_hp, fuse_zam, fuse_zmm, refresh_cache, sample_bilinear, sample_field, Fusion, ModelConfig, PlaneId,
    SamplePoint, WaveletField,
};
use waveplanes::wavelets::Grid;

#[test]
fn zero_field_is_time_invariant() {
    let field = WaveletField::zeros(common::tiny_config(Fusion::Zmm)).unwrap();
    let cache = refresh_cache(&field, 0).unwrap();
    let mut rng = common::rng(5);
    for _ in 0..50 {
        let (x, y, z) = (rng.gen_range(-1.5..1.5), rng.gen_range(-1.5..1.5), rng.gen_range(-1.5..1.5));
        let a = sample_field(&field.config, &cache, &SamplePoint::new(x, y, z, 0.0));
        let b = sample_field(&field.config, &cache, &SamplePoint::new(x, y, z, rng.gen()));
        assert_eq!(a, b);
    }
}

#[test]
fn space_time_planes_of_zero_field_are_ones() {
    let field = WaveletField::zeros(common::tiny_config(Fusion::Hp)).unwrap();
    let cache = refresh_cache(&field, 0).unwrap();
    for id in PlaneId::DYNAMIC {
        for &s in &cache.scales {
            let g = cache.grid(id, s).unwrap();
            let expected = if id.is_space_time() { 1.0 } else { 0.0 };
            assert!(g.data.iter().all(|v| *v == expected), "{id:?}");
        }
    }
}

#[test]
fn bilinear_hits_corners_and_midpoints() {
    let g = Grid::from_vec(1, 2, 2, vec![1.0, 2.0, 3.0, 4.0]).unwrap();
    assert_eq!(sample_bilinear(&g, (0.0, 0.0)), vec![1.0]);
    assert_eq!(sample_bilinear(&g, (1.0, 0.0)), vec![2.0]);
    assert_eq!(sample_bilinear(&g, (0.0, 1.0)), vec![3.0]);
    assert_eq!(sample_bilinear(&g, (0.5, 0.5)), vec![2.5]);
    assert_eq!(sample_bilinear(&g, (-3.0, 9.0)), vec![3.0]);
}

#[test]
fn fusion_identity_patterns() {
    let mut rng = common::rng(6);
    for pattern in 0..8u32 {
        let t: Vec<f64> = (0..3).map(|i| ((pattern >> i) & 1) as f64).collect();
        let ones = t.iter().sum::<f64>();
        for _ in 0..100 {
            let s: Vec<Vec<f64>> = (0..3).map(|_| (0..4).map(|_| rng.gen_range(-2.0..2.0)).collect()).collect();
            let tv: Vec<Vec<f64>> = t.iter().map(|&v| vec![v; 4]).collect();
            let space = [&s[0][..], &s[1][..], &s[2][..]];
            let time = [&tv[0][..], &tv[1][..], &tv[2][..]];
            let hp = fuse_hp(&[space[0], space[1], space[2], time[0], time[1], time[2]]);
            let zmm = fuse_zmm(space, time);
            let zam = fuse_zam(space, time);
            for c in 0..4 {
                let prod = s[0][c] * s[1][c] * s[2][c];
                assert_eq!(hp[c], if ones == 3.0 { prod } else { 0.0 * prod });
                assert_eq!(zmm[c], if ones == 0.0 { 0.0 * prod } else { prod });
                assert_eq!(zam[c], ones / 3.0 * prod);
            }
        }
    }
}

#[test]
fn static_mode_ignores_time() {
    let cfg = ModelConfig {
        static_mode: true,
        ..common::tiny_config(Fusion::Zam)
    };
    let field = common::random_field(cfg, 3);
    assert_eq!(field.planes.len(), 3);
    let cache = refresh_cache(&field, 0).unwrap();
    let a = sample_field(&field.config, &cache, &SamplePoint::new(0.3, -0.2, 0.9, 0.0));
    let b = sample_field(&field.config, &cache, &SamplePoint::new(0.3, -0.2, 0.9, 1.0));
    assert_eq!(a, b);
}

#[test]
fn config_rounds_resolution_and_rejects_bad_k() {
    let cfg = ModelConfig {
        spatial_res: 20,
        ..Default::default()
    }
    .validated()
    .unwrap();
    assert_eq!(cfg.spatial_res, 32);
    let bad = ModelConfig {
        k: vec![0.5, 0.4, 0.2],
        ..Default::default()
    };
    assert!(bad.validated().is_err());
    let bad_scale = ModelConfig {
        scales: vec![3],
        ..Default::default()
    };
    assert!(bad_scale.validated().is_err());
}
